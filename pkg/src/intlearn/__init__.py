"""
The ``intlearn`` module aggregates the most used components of pyintlearn into
a single namespace. This is purely for convenience. You can of course also
access everything (and more!) via their actual submodules.

The following tables list all of the available components in this module.

{toc}
"""
import pkgutil

from .logging import (
    CiLogger,
)
from .graph import (
    Dag, PatternGraph, build_dag, d_separated, merge_patterns, pattern_of, skeleton_of, topological_order,
    v_structures_of,
)
from .bayesnet import (
    Cpt, DiscreteBayesNet, InterventionSpec, JointTable, SampleTable, apply_intervention, ci_exact,
    enumerate_distribution, generate_intervention_spec, joint_probability, mixture, sample,
)
from .citest import CiResult, chi_square_ci, chi_square_sf
from .pc import ChiSquareCi, DistributionCi, DSeparationCi, SepSets, learn_skeleton, orient_v_structures, pc_learn
from .merge import MergeResult, merge_learn, merge_learn_oracle
from .pool import (
    EdgeFrequencyReport, augment, pool_datasets, pool_learn_meta, pool_learn_meta_oracle, resample_frequencies,
)
from .metrics import Metrics, score
from .experiment import StudyConfig, StudyReport, frequency_rank_table, generate_trial, run_study, write_study
from .io import BifSyntaxError, parse_bif, read_report, read_samples, write_bif, write_report, write_samples

def compile_toc(entries, section_marker='='):
    """Compiles a list of sections with objects into sphinx formatted
    autosummary directives."""
    toc = ''
    for section, objs in entries:
        toc += '\n\n'
        toc += f'{section}\n'
        toc += f'{section_marker * len(section)}\n\n'
        toc += '.. autosummary::\n\n'
        for obj in objs:
            try:
                toc += f'    ~{obj.__module__}.{obj.__name__}\n'
            except AttributeError:
                pass
    return toc

toc = (
    ('Graphs', (
        Dag, PatternGraph, build_dag, topological_order, d_separated, skeleton_of, v_structures_of,
        pattern_of, merge_patterns,
    )),
    ('Networks', (
        Cpt, DiscreteBayesNet, InterventionSpec, JointTable, SampleTable, joint_probability,
        enumerate_distribution, ci_exact, generate_intervention_spec, apply_intervention, sample, mixture,
    )),
    ('Learning', (
        CiResult, chi_square_ci, chi_square_sf, SepSets, DSeparationCi, DistributionCi, ChiSquareCi,
        learn_skeleton, orient_v_structures, pc_learn, MergeResult, merge_learn, merge_learn_oracle,
        EdgeFrequencyReport, pool_datasets, pool_learn_meta, pool_learn_meta_oracle, resample_frequencies,
        augment, CiLogger,
    )),
    ('Studies', (
        Metrics, score, StudyConfig, StudyReport, generate_trial, run_study, frequency_rank_table, write_study,
    )),
    ('Files', (
        BifSyntaxError, parse_bif, write_bif, read_samples, write_samples, read_report, write_report,
    )),
)

# Use the toc to keep the documentation and the implementation in sync.
if __doc__:
    __doc__ = __doc__.format(toc=compile_toc(toc))

__path__ = pkgutil.extend_path(__path__, __name__)
__version__ = '0.1.0'
