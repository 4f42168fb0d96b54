"""
Chi-square conditional independence testing on discrete sample tables.
"""
from dataclasses import dataclass

import numpy as np
from scipy import stats

SPARSE_FACTOR = 10
"""A test needs at least this many records per degree of freedom."""

@dataclass(frozen=True)
class CiResult:
    """Outcome of one conditional independence test."""
    independent: bool
    statistic: float
    dof: int
    p_value: float
    effective_n: int
    underpowered: bool = False
    degenerate: bool = False

def _check_args(data, x, y, s):
    s = tuple(s)
    for v in (x, y) + s:
        data.column(v)
    if x == y:
        raise ValueError(f"Cannot test {x} against itself!")
    if x in s or y in s:
        raise ValueError(f"Conditioning set {list(s)} overlaps the tested pair {x}, {y}!")
    return s

def contingency_counts(data, x, y, s=()):
    """Count the records of every realized configuration of s.

    :param data: The records.
    :type data: :class:`intlearn.bayesnet.SampleTable`
    :param x: Row variable.
    :param y: Column variable.
    :param s: Conditioning variables.
    :raises KeyError: On unknown variables.
    :return: Array of shape (strata, |x|, |y|); strata without records are omitted.
    :rtype: :class:`numpy.ndarray`
    """
    s = _check_args(data, x, y, s)
    rx, ry = data.cardinalities[x], data.cardinalities[y]
    n = len(data)
    if s:
        codes = np.ravel_multi_index(tuple(data.column(v) for v in s),
                                     tuple(data.cardinalities[v] for v in s))
        _, strata = np.unique(codes, return_inverse=True)
        strata = strata.reshape(-1)
        k = int(strata.max()) + 1 if n else 0
    else:
        strata = np.zeros(n, dtype=np.int64)
        k = 1
    cells = (strata * rx + data.column(x)) * ry + data.column(y)
    counts = np.bincount(cells, minlength=k * rx * ry)
    return counts.reshape(k, rx, ry)

def chi_square_sf(statistic, dof):
    """Upper tail probability of the chi-square distribution.

    :param statistic: Observed statistic, at least 0.
    :type statistic: float
    :param dof: Degrees of freedom, at least 1.
    :type dof: int
    :rtype: float
    """
    if statistic < 0:
        raise ValueError(f"Statistic must be non-negative, got {statistic}!")
    if dof < 1:
        raise ValueError(f"Degrees of freedom must be at least 1, got {dof}!")
    return float(stats.chi2.sf(statistic, dof))

def _statistic(counts, method):
    rows = counts.sum(axis=2)
    cols = counts.sum(axis=1)
    totals = counts.sum(axis=(1, 2))
    expected = rows[:, :, None] * cols[:, None, :] / np.maximum(totals, 1)[:, None, None]
    # Cells in a zero row or column have zero expectation and are skipped
    live = expected > 0
    if method == 'pearson':
        statistic = float((((counts - expected) ** 2)[live] / expected[live]).sum())
    elif method == 'g2':
        observed = live & (counts > 0)
        statistic = float(2 * (counts[observed] * np.log(counts[observed] / expected[observed])).sum())
    else:
        raise ValueError(f"Unknown test statistic {method}!")
    dof = int(np.sum(np.maximum((rows > 0).sum(axis=1) - 1, 0) * np.maximum((cols > 0).sum(axis=1) - 1, 0)))
    return max(statistic, 0.0), dof

def chi_square_ci(data, x, y, s=(), alpha=0.01, method='pearson'):
    """Test x independent of y given s by a stratified chi-square test.

    The statistic is summed over the realized strata of s. Rows and columns
    with a zero marginal in a stratum do not count towards its degrees of
    freedom. With fewer than 2 observed categories of x or y the test is
    degenerate, and with fewer than 10 records per degree of freedom it is
    underpowered; both cases report independence and set their flag.

    :param data: The records.
    :type data: :class:`intlearn.bayesnet.SampleTable`
    :param alpha: Significance level in (0, 1).
    :type alpha: float
    :param method: ``'pearson'`` for Pearson's X2, ``'g2'`` for the likelihood ratio.
    :type method: str
    :rtype: :class:`CiResult`
    """
    if not 0 < alpha < 1:
        raise ValueError(f"Significance level must lie in (0, 1), got {alpha}!")
    counts = contingency_counts(data, x, y, s)
    if data.variables.index(x) > data.variables.index(y):
        counts = counts.transpose(0, 2, 1)
    n = len(data)
    if len(np.unique(data.column(x))) < 2 or len(np.unique(data.column(y))) < 2:
        return CiResult(True, 0.0, 0, 1.0, n, degenerate=True)

    statistic, dof = _statistic(counts, method)
    if dof == 0:
        return CiResult(True, statistic, 0, 1.0, n, degenerate=True)
    p_value = chi_square_sf(statistic, dof)
    if n < SPARSE_FACTOR * dof:
        return CiResult(True, statistic, dof, p_value, n, underpowered=True)
    return CiResult(p_value > alpha, statistic, dof, p_value, n)
