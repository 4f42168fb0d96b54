"""
Structure learning by pooling all intervention data sets into one sample,
followed by re-sampling of the interventions to count how often every edge is
learned, and augmentation of the pooled graph by frequently learned edges.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Tuple

import numpy as np
from joblib import Parallel, delayed

from intlearn.bayesnet import SampleTable, apply_intervention, mixture
from intlearn.graph import PatternGraph, d_separated
from intlearn.merge import check_variables
from intlearn.pc import DEFAULT_MAX_COND, ChiSquareCi, DistributionCi, learn_skeleton, pc_learn

logger = logging.getLogger(__name__)

DEFAULT_K_RUNS = 100
DEFAULT_THETA = 20
SUBSET_FRACTION = 0.6
"""Default share of the interventions drawn in every re-sampling run."""

@dataclass(frozen=True)
class EdgeFrequencyReport:
    """Outcome of the re-sampling evaluation.

    ``freq`` counts, for every edge of the pooled skeleton or of any
    re-sampled skeleton, the runs whose skeleton contains it.
    """
    vertices: Tuple[str, ...]
    k_runs: int
    subset_size: int
    drawn_subsets: Tuple[Tuple[int, ...], ...]
    meta_edges: FrozenSet[Tuple[str, str]]
    union_edges: FrozenSet[Tuple[str, str]]
    freq: Dict[Tuple[str, str], int] = field(default_factory=dict)

    def __post_init__(self):
        for e in self.union_edges:
            if not 1 <= self.freq.get(e, 0) <= self.k_runs:
                raise ValueError(f"Frequency of edge {e} is outside 1..{self.k_runs}!")

    @property
    def extra_edges(self):
        """Edges learned by some re-sampling run but not by the pooled run."""
        return self.union_edges - self.meta_edges

    def frequency(self, edge):
        return self.freq.get(tuple(edge), 0)

    def _key(self, edge):
        return tuple(self.vertices.index(v) for v in edge)

    def descending_extra(self):
        """Returns the extra edges by descending frequency."""
        return sorted(self.extra_edges, key=lambda e: (-self.frequency(e), self._key(e)))

    def ascending_meta(self):
        """Returns the pooled skeleton edges by ascending frequency."""
        return sorted(self.meta_edges, key=lambda e: (self.frequency(e), self._key(e)))

def pool_datasets(datasets):
    """Concatenate intervention data sets row-wise.

    Records keep their own intervention label. Every unlabelled data set gets
    the smallest label not carried by any other data set, in data set order,
    so a single table comes back labelled as well.

    :param datasets: Tables over the same variables.
    :type datasets: Sequence[:class:`intlearn.bayesnet.SampleTable`]
    :raises ValueError: When the tables do not share their variables.
    :rtype: :class:`intlearn.bayesnet.SampleTable`
    """
    datasets = check_variables(datasets)
    taken = {int(label) for d in datasets if d.labels is not None for label in np.unique(d.labels)}
    fresh = (j for j in itertools.count() if j not in taken)
    datasets = [d if d.labels is not None else d.with_labels(next(fresh)) for d in datasets]
    if len(datasets) == 1:
        return datasets[0]
    first = datasets[0]
    data = np.concatenate([d.data for d in datasets], axis=0)
    labels = np.concatenate([d.labels for d in datasets])
    return SampleTable(first.variables, data, first.cardinalities, labels, first.states)

def pool_learn_meta(datasets, alpha=0.01, max_cond=DEFAULT_MAX_COND, method='pearson', ci_logger=None):
    """Run the PC algorithm on the pooled data of all interventions.

    :rtype: :class:`intlearn.graph.PatternGraph`
    """
    pooled = pool_datasets(datasets)
    logger.debug("Meta learning on %d pooled records", len(pooled))
    return pc_learn(pooled, alpha=alpha, max_cond=max_cond, method=method, ci_logger=ci_logger)

def pool_learn_meta_oracle(net, specs, weights=None, max_cond=None, resolve_conflicts=True, eps=1e-9):
    """Meta learning on the exact mixture of the post-intervention
    distributions, i.e. pooled data without sampling noise.

    :param net: The unmanipulated network.
    :type net: :class:`intlearn.bayesnet.DiscreteBayesNet`
    :param specs: The interventions.
    :type specs: Sequence[:class:`intlearn.bayesnet.InterventionSpec`]
    :param weights: Mixture weights, equal when omitted.
    :rtype: :class:`intlearn.graph.PatternGraph`
    """
    specs = list(specs)
    if not specs:
        raise ValueError("At least one intervention is required!")
    if weights is None:
        weights = np.full(len(specs), 1.0 / len(specs))
    jt = mixture([apply_intervention(net, s) for s in specs], weights)
    return pc_learn(DistributionCi(jt, eps), max_cond=max_cond, resolve_conflicts=resolve_conflicts)

def separates_from_targets(g, specs, x, y, s):
    """Check the classical condition under which pooled data may test x and y
    given s: s must d-separate both x and y from every target that is not
    itself conditioned on.

    :param g: The unmanipulated graph.
    :type g: :class:`intlearn.graph.Dag`
    :rtype: bool
    """
    s = tuple(s)
    targets = frozenset().union(*(spec.targets for spec in specs)) if specs else frozenset()
    for t in g.sorted(targets):
        if t in (x, y):
            return False
        if t in s:
            continue
        if not (d_separated(g, x, t, s) and d_separated(g, y, t, s)):
            return False
    return True

def default_subset_size(m):
    """Returns the default number of interventions drawn per run."""
    return max(1, math.ceil(SUBSET_FRACTION * m))

def _resample_run(datasets, seed, subset_size, alpha, max_cond, method):
    rng = np.random.default_rng(seed)
    subset = tuple(sorted(int(i) for i in rng.choice(len(datasets), size=subset_size, replace=False)))
    pooled = pool_datasets([datasets[i] for i in subset])
    skeleton, _ = learn_skeleton(pooled.variables, ChiSquareCi(pooled, alpha, method), max_cond)
    return subset, skeleton.skeleton_edges

def resample_frequencies(datasets, k_runs=DEFAULT_K_RUNS, subset_size=None, alpha=0.01, rng=None,
                         max_cond=DEFAULT_MAX_COND, method='pearson', meta=None, jobs=None):
    """Re-sample the interventions and count how often every edge is learned.

    Every run draws ``subset_size`` of the m data sets without replacement,
    pools them and learns a skeleton. Run i uses its own generator seeded with
    (master, i), where master is drawn once from ``rng``, so the result does
    not depend on ``jobs``.

    :param datasets: One sample table per intervention.
    :type datasets: Sequence[:class:`intlearn.bayesnet.SampleTable`]
    :param k_runs: Number of re-sampling runs.
    :type k_runs: int
    :param subset_size: Interventions per run, defaults to 60% of m rounded up.
    :type subset_size: int, optional
    :param alpha: Significance level of the chi-square tests.
    :type alpha: float
    :param rng: Seeded generator owned by the caller.
    :type rng: :class:`numpy.random.Generator`
    :param meta: Pooled pattern, learned from all data sets when omitted.
    :type meta: :class:`intlearn.graph.PatternGraph`, optional
    :param jobs: Number of joblib workers.
    :type jobs: int, optional
    :raises ValueError: When subset_size is outside 1..m or k_runs < 1.
    :rtype: :class:`EdgeFrequencyReport`
    """
    datasets = check_variables(datasets)
    m = len(datasets)
    if subset_size is None:
        subset_size = default_subset_size(m)
    if not 1 <= subset_size <= m:
        raise ValueError(f"Subset size must lie in 1..{m}, got {subset_size}!")
    if k_runs < 1:
        raise ValueError(f"Number of re-sampling runs must be positive, got {k_runs}!")
    if rng is None:
        raise ValueError("An explicit random generator is required!")
    if meta is None:
        meta = pool_learn_meta(datasets, alpha, max_cond, method)

    master = int(rng.integers(2 ** 32))
    runs = Parallel(n_jobs=jobs)(
        delayed(_resample_run)(datasets, [master, i], subset_size, alpha, max_cond, method)
        for i in range(k_runs))

    freq = {e: 0 for e in meta.skeleton_edges}
    for _, edges in runs:
        for e in edges:
            freq[e] = freq.get(e, 0) + 1
    union = frozenset().union(*(edges for _, edges in runs))
    logger.info("Re-sampling over %d runs found %d edges outside the pooled skeleton", k_runs,
                len(union - meta.skeleton_edges))
    return EdgeFrequencyReport(meta.vertices, k_runs, subset_size, tuple(s for s, _ in runs),
                               meta.skeleton_edges, union, freq)

def augment(meta, report, theta=DEFAULT_THETA):
    """Add every extra edge learned more than theta times to the pooled
    pattern. Added edges carry no orientation; v-structures of the pooled
    pattern that an added edge shields are dropped.

    :param meta: The pooled pattern.
    :type meta: :class:`intlearn.graph.PatternGraph`
    :param report: Frequencies from :func:`resample_frequencies`.
    :type report: :class:`EdgeFrequencyReport`
    :param theta: Frequency threshold, at least 0.
    :type theta: int
    :rtype: :class:`intlearn.graph.PatternGraph`
    """
    if theta < 0:
        raise ValueError(f"Threshold must be non-negative, got {theta}!")
    added = frozenset(e for e in report.extra_edges if report.frequency(e) > theta)
    skeleton = meta.skeleton_edges | added
    v_structures = [t for t in meta.v_structures if meta.pair(t[0], t[2]) not in skeleton]
    if len(v_structures) < len(meta.v_structures):
        logger.debug("Augmentation shielded %d v-structures", len(meta.v_structures) - len(v_structures))
    return PatternGraph(meta.vertices, skeleton, v_structures, meta.added_edges | added)
