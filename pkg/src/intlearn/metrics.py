"""
Scoring of learned patterns against a true graph.

Note the naming of the ratios: ``tpr`` is TP/(TP+FP) and ``tdr`` is
TP/(TP+FN). This is transposed relative to the usual meaning of the terms and
kept so that results compare directly with published figures.
"""
from dataclasses import asdict, dataclass

from intlearn.graph import pattern_of

def _ratio(num, den):
    return num / den if den else 1.0

@dataclass(frozen=True)
class Metrics:
    """Edge and arrow counts of one learned pattern."""
    tp: int
    fp: int
    fn: int
    tp1: int
    fp1: int
    fn1: int

    @property
    def tpr(self):
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def tdr(self):
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def d_tpr(self):
        return _ratio(self.tp1, self.tp1 + self.fp1)

    @property
    def d_tdr(self):
        return _ratio(self.tp1, self.tp1 + self.fn1)

    @property
    def fn_count(self):
        return self.fn

    @property
    def fp_count(self):
        return self.fp

    def as_dict(self):
        """Returns all counts and ratios as a flat dictionary."""
        result = asdict(self)
        result.update(tpr=self.tpr, tdr=self.tdr, d_tpr=self.d_tpr, d_tdr=self.d_tdr)
        return result

RATIOS = ('tpr', 'tdr', 'd_tpr', 'd_tdr')
COUNTS = ('tp', 'fp', 'fn', 'tp1', 'fp1', 'fn1')

def score(learned, truth):
    """Compare a learned pattern with the true graph.

    Skeleton edges are compared regardless of direction. Arrows are those
    implied by v-structures: a learned arrow is a true positive when the true
    graph has that directed edge, and every arrow of a true v-structure that
    was not learned is a false negative.

    :param learned: The learned pattern.
    :type learned: :class:`intlearn.graph.PatternGraph`
    :param truth: The true graph.
    :type truth: :class:`intlearn.graph.Dag`
    :raises ValueError: When the vertex sets differ.
    :rtype: :class:`Metrics`
    """
    if set(learned.vertices) != set(truth.vertices):
        raise ValueError("Learned pattern and true graph have different vertices!")
    learned_edges = {frozenset(e) for e in learned.skeleton_edges}
    true_edges = {frozenset(e) for e in truth.edges}
    arrows = learned.arrows
    true_arrows = pattern_of(truth).arrows

    tp1 = len(arrows & truth.edges)
    return Metrics(tp=len(learned_edges & true_edges),
                   fp=len(learned_edges - true_edges),
                   fn=len(true_edges - learned_edges),
                   tp1=tp1,
                   fp1=len(arrows) - tp1,
                   fn1=len(true_arrows - arrows))
