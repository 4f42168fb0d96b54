"""
The PC algorithm over an abstract source of conditional independence
decisions. A source is either an oracle (d-separation in a known graph, exact
independence in a known distribution) or a statistical test bound to data.
"""
import itertools
import logging
from abc import ABC, abstractmethod

from intlearn.bayesnet import SampleTable, ci_exact
from intlearn.citest import chi_square_ci
from intlearn.graph import PatternGraph, d_separated, find_conflicts

logger = logging.getLogger(__name__)

DEFAULT_MAX_COND = 5

class CiSource(ABC):
    """Base class for conditional independence decision sources. Calling a
    source with (x, y, s) returns True when x and y are judged independent
    given s."""

    flavor = None
    """Either ``'oracle'`` or ``'statistical'``."""

    def __init__(self, vertices):
        self._vertices = tuple(vertices)
        super().__init__()

    @property
    def vertices(self):
        return self._vertices

    @abstractmethod
    def independent(self, x, y, s):
        pass

    def __call__(self, x, y, s=()):
        return self.independent(x, y, tuple(s))

class DSeparationCi(CiSource):
    """Oracle answering with d-separation in a known graph."""
    flavor = 'oracle'

    def __init__(self, dag):
        super().__init__(dag.vertices)
        self._dag = dag

    def independent(self, x, y, s):
        return d_separated(self._dag, x, y, s)

class DistributionCi(CiSource):
    """Oracle answering with exact independence in a known joint table."""
    flavor = 'oracle'

    def __init__(self, jt, eps=1e-9):
        super().__init__(jt.variables)
        self._jt = jt
        self._eps = eps

    def independent(self, x, y, s):
        return ci_exact(self._jt, x, y, s, self._eps)

class ChiSquareCi(CiSource):
    """Chi-square tests on a sample table. Results are cached for the lifetime
    of the source, so one source must serve one learner invocation."""
    flavor = 'statistical'

    def __init__(self, data, alpha=0.01, method='pearson', ci_logger=None):
        """
        :param data: The records to test on.
        :type data: :class:`intlearn.bayesnet.SampleTable`
        :param alpha: Significance level.
        :type alpha: float
        :param method: ``'pearson'`` or ``'g2'``.
        :type method: str
        :param ci_logger: Optional trace logger receiving every decision.
        :type ci_logger: :class:`intlearn.logging.CiLogger`, optional
        """
        super().__init__(data.variables)
        self._data = data
        self._alpha = alpha
        self._method = method
        self._logger = ci_logger
        self._column = {v: i for i, v in enumerate(data.variables)}
        self._cache = {}

    @property
    def alpha(self):
        return self._alpha

    @property
    def tests(self):
        """Returns the number of distinct tests run so far."""
        return len(self._cache)

    def result(self, x, y, s=()):
        """Returns the full :class:`intlearn.citest.CiResult` of a test."""
        key = (frozenset((x, y)), tuple(sorted(s, key=self._column.__getitem__)))
        if key not in self._cache:
            result = chi_square_ci(self._data, x, y, s, self._alpha, self._method)
            self._cache[key] = result
            if self._logger is not None:
                self._logger.change(x, y, s, result)
        return self._cache[key]

    def independent(self, x, y, s):
        return self.result(x, y, s).independent

class SepSets:
    """Separating set of every vertex pair removed from the skeleton."""

    def __init__(self):
        self._sets = {}

    def record(self, x, y, s):
        s = tuple(s)
        if x in s or y in s:
            raise ValueError(f"Separating set {s} of {x}, {y} contains an endpoint!")
        self._sets[frozenset((x, y))] = s

    def __getitem__(self, pair):
        return self._sets[frozenset(pair)]

    def __contains__(self, pair):
        return frozenset(pair) in self._sets

    def __len__(self):
        return len(self._sets)

    def items(self):
        return ((tuple(pair), s) for pair, s in self._sets.items())

def learn_skeleton(vertices, ci, max_cond=DEFAULT_MAX_COND):
    """Adjacency search of the PC algorithm, order-independent variant.

    Starts from the complete graph. At level l every ordered adjacent pair
    (x, y) is tested against all size-l subsets of the neighbours of x other
    than y, in lexicographic order over the neighbour sets frozen at the start
    of the level. The first separating set found removes the edge.

    :param vertices: Vertices in declared order.
    :param ci: Decision source.
    :type ci: :class:`CiSource`
    :param max_cond: Largest conditioning set size, None for no limit.
    :type max_cond: int, optional
    :return: The skeleton as a pattern without v-structures and the
        separating sets of all removed pairs.
    :rtype: Tuple[:class:`intlearn.graph.PatternGraph`, :class:`SepSets`]
    """
    vertices = tuple(vertices)
    if max_cond is not None and max_cond < 0:
        raise ValueError(f"Conditioning set limit must be non-negative, got {max_cond}!")
    position = {v: i for i, v in enumerate(vertices)}
    adjacent = {v: set(vertices) - {v} for v in vertices}
    sepsets = SepSets()

    level = 0
    while max_cond is None or level <= max_cond:
        if not any(len(adjacent[v]) - 1 >= level for v in vertices):
            break
        frozen = {v: sorted(adjacent[v], key=position.__getitem__) for v in vertices}
        for x in vertices:
            for y in frozen[x]:
                if y not in adjacent[x]:
                    continue
                candidates = [v for v in frozen[x] if v != y]
                if len(candidates) < level:
                    continue
                for s in itertools.combinations(candidates, level):
                    if ci(x, y, s):
                        adjacent[x].discard(y)
                        adjacent[y].discard(x)
                        sepsets.record(x, y, s)
                        break
        level += 1

    edges = [(x, y) for x in vertices for y in adjacent[x] if position[x] < position[y]]
    return PatternGraph(vertices, edges), sepsets

def orient_v_structures(skeleton, sepsets, resolve_conflicts=True):
    """Orient every unshielded triple a - c - b whose middle vertex is not in
    the separating set of a and b as a v-structure.

    :param skeleton: Skeleton from :func:`learn_skeleton`.
    :type skeleton: :class:`intlearn.graph.PatternGraph`
    :param sepsets: Separating sets from :func:`learn_skeleton`.
    :type sepsets: :class:`SepSets`
    :param resolve_conflicts: Remove v-structures with opposing arrows.
    :type resolve_conflicts: bool
    :raises RuntimeError: When a non-adjacent pair has no separating set.
    :rtype: :class:`intlearn.graph.PatternGraph`
    """
    v_structures = set()
    for c in skeleton.vertices:
        for a, b in itertools.combinations(skeleton.neighbours(c), 2):
            if skeleton.adjacent(a, b):
                continue
            if (a, b) not in sepsets:
                raise RuntimeError(f"No separating set recorded for non-adjacent pair {a}, {b}!")
            if c not in sepsets[(a, b)]:
                v_structures.add((a, c, b))

    if resolve_conflicts:
        conflicts = find_conflicts(frozenset(skeleton.triple(*t) for t in v_structures))
        if conflicts:
            logger.warning("Removing %d conflicting v-structures: %s", len(conflicts),
                           ', '.join(f"{a}->{c}<-{b}" for a, c, b in sorted(conflicts)))
            v_structures = {t for t in v_structures if skeleton.triple(*t) not in conflicts}

    return PatternGraph(skeleton.vertices, skeleton.skeleton_edges, v_structures)

def pc_learn(source, vertices=None, alpha=0.01, max_cond=DEFAULT_MAX_COND, method='pearson',
             ci_logger=None, resolve_conflicts=True):
    """Learn a skeleton with v-structures by the PC algorithm.

    :param source: A decision source, or a sample table which is then tested
        by chi-square tests at level alpha.
    :type source: :class:`CiSource` or :class:`intlearn.bayesnet.SampleTable`
    :param vertices: Vertices in declared order, defaults to those of the source.
    :param alpha: Significance level, used when source is a sample table.
    :type alpha: float
    :param max_cond: Largest conditioning set size, None for no limit.
    :type max_cond: int, optional
    :param method: Test statistic used when source is a sample table.
    :type method: str
    :param ci_logger: Optional trace logger, used when source is a sample table.
    :type ci_logger: :class:`intlearn.logging.CiLogger`, optional
    :param resolve_conflicts: Remove v-structures with opposing arrows.
    :type resolve_conflicts: bool
    :rtype: :class:`intlearn.graph.PatternGraph`
    """
    if isinstance(source, SampleTable):
        if alpha is None:
            raise ValueError("A significance level is required for learning from data!")
        if ci_logger is not None:
            ci_logger.initialize(source.variables)
        source = ChiSquareCi(source, alpha, method, ci_logger)
    if vertices is None:
        vertices = source.vertices
    skeleton, sepsets = learn_skeleton(vertices, source, max_cond)
    pattern = orient_v_structures(skeleton, sepsets, resolve_conflicts)
    if source.flavor == 'statistical':
        logger.debug("PC finished after %d tests: %d edges, %d v-structures", source.tests,
                     len(pattern.skeleton_edges), len(pattern.v_structures))
    return pattern
