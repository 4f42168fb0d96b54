"""
Structure learning by combining the graphs learned from several intervention
data sets: one PC run per data set, then the union of the learned skeletons
and v-structures.
"""
import logging
from dataclasses import dataclass
from typing import FrozenSet, Tuple

from joblib import Parallel, delayed

from intlearn.bayesnet import DiscreteBayesNet, intervene_dag
from intlearn.graph import PatternGraph, merge_patterns_with_conflicts
from intlearn.pc import DEFAULT_MAX_COND, DSeparationCi, pc_learn

logger = logging.getLogger(__name__)

@dataclass(frozen=True)
class MergeResult:
    """Merged pattern together with the per-data-set patterns it was built
    from and the v-structures dropped because of opposing arrows."""
    pattern: PatternGraph
    patterns: Tuple[PatternGraph, ...]
    conflicts: FrozenSet[Tuple[str, str, str]] = frozenset()

def check_variables(datasets):
    """Raises a ValueError unless all tables share one variable list."""
    datasets = list(datasets)
    if not datasets:
        raise ValueError("At least one data set is required!")
    variables = datasets[0].variables
    for j, d in enumerate(datasets[1:], start=1):
        if d.variables != variables:
            raise ValueError(f"Data set {j} has variables {d.variables}, expected {variables}!")
        if d.cardinalities != datasets[0].cardinalities:
            raise ValueError(f"Data set {j} uses different cardinalities than data set 0!")
    return datasets

def _merge(patterns):
    patterns = tuple(patterns)
    merged, conflicts = merge_patterns_with_conflicts(patterns)
    return MergeResult(merged, patterns, conflicts)

def merge_learn(datasets, alpha=0.01, max_cond=DEFAULT_MAX_COND, method='pearson', jobs=None):
    """Learn one pattern per data set with the PC algorithm and merge them.

    :param datasets: One sample table per intervention.
    :type datasets: Sequence[:class:`intlearn.bayesnet.SampleTable`]
    :param alpha: Significance level of the chi-square tests.
    :type alpha: float
    :param max_cond: Largest conditioning set size, None for no limit.
    :type max_cond: int, optional
    :param method: ``'pearson'`` or ``'g2'``.
    :type method: str
    :param jobs: Number of joblib workers for the per-data-set runs.
    :type jobs: int, optional
    :raises ValueError: When the data sets do not share their variables.
    :rtype: :class:`MergeResult`
    """
    datasets = check_variables(datasets)
    logger.debug("Learning %d data sets separately", len(datasets))
    patterns = Parallel(n_jobs=jobs)(
        delayed(pc_learn)(d, alpha=alpha, max_cond=max_cond, method=method) for d in datasets)
    return _merge(patterns)

def merge_learn_oracle(base, specs, max_cond=None, resolve_conflicts=True):
    """Merge learning without sampling noise: every PC run answers its tests by
    d-separation in the post-intervention graph of one spec.

    :param base: The unmanipulated graph or a network over it.
    :type base: :class:`intlearn.graph.Dag` or :class:`intlearn.bayesnet.DiscreteBayesNet`
    :param specs: One intervention per data set; an empty spec is observational.
    :type specs: Sequence[:class:`intlearn.bayesnet.InterventionSpec`]
    :rtype: :class:`MergeResult`
    """
    if isinstance(base, DiscreteBayesNet):
        for spec in specs:
            spec.validate(base)
        base = base.dag
    if not specs:
        raise ValueError("At least one intervention is required!")
    patterns = []
    for spec in specs:
        ci = DSeparationCi(intervene_dag(base, spec))
        patterns.append(pc_learn(ci, max_cond=max_cond, resolve_conflicts=resolve_conflicts))
    return _merge(patterns)
