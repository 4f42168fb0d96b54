"""
Simulation studies on a known network: generate families of interventions
with unknown targets, sample data, run the learners, score them against the
true graph and aggregate the scores over repetitions.

A study is described by a :class:`StudyConfig`, usually read from YAML::

    network: alarm.bif
    mode: experiment3
    cases: [[100, 50]]
    repetitions: 100
    seed: 7
"""
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

import numpy as np
import pandas as pd
import yaml
from joblib import Parallel, delayed

from intlearn.bayesnet import allocate_counts, apply_intervention, generate_intervention_spec, sample
from intlearn.graph import skeleton_of
from intlearn.io import parse_bif
from intlearn.merge import merge_learn
from intlearn.metrics import COUNTS, RATIOS, score
from intlearn.pc import pc_learn
from intlearn.pool import augment, pool_learn_meta, resample_frequencies

logger = logging.getLogger(__name__)

MODES = ('experiment1', 'experiment2', 'experiment3', 'observational')
TARGET_RULES = ('uniform', 'constant')
METRICS = RATIOS + COUNTS
DEFAULT_CASES = {
    'experiment1': [[2500, 2], [500, 10], [200, 25], [100, 50]],
    'experiment2': [[100, 50]],
    'experiment3': [[100, 50]],
    'observational': [[5000, 1]],
}

@dataclass
class StudyConfig:
    """Parameters of one simulation study. Field names double as the keys of
    the YAML configuration file. Without explicit cases the default
    cases of the mode are run."""
    network: str
    seed: int
    mode: str = 'experiment1'
    cases: Optional[List[List[int]]] = None
    target_rule: str = 'uniform'
    target_range: List[int] = field(default_factory=lambda: [1, 5])
    target_counts: List[int] = field(default_factory=lambda: [2, 5, 10, 20])
    cut_prob: float = 0.5
    dirichlet_alpha: float = 1.0
    alpha: float = 0.01
    ci_method: str = 'pearson'
    max_cond: Optional[int] = 5
    repetitions: int = 100
    resample_k: int = 100
    subset_size: Optional[int] = None
    thetas: List[int] = field(default_factory=lambda: [0, 5, 10, 15, 20, 25, 30, 35, 50, 100])
    rank_top: int = 10
    multinomial: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"Unknown study mode {self.mode}, expected one of {', '.join(MODES)}!")
        if self.cases is None:
            self.cases = [list(case) for case in DEFAULT_CASES[self.mode]]
        if self.target_rule not in TARGET_RULES:
            raise ValueError(f"Unknown target rule {self.target_rule}!")
        if self.ci_method not in ('pearson', 'g2'):
            raise ValueError(f"Unknown test statistic {self.ci_method}!")
        if not self.cases:
            raise ValueError("A study needs at least one case!")
        for case in self.cases:
            if len(case) != 2 or min(case) < 1:
                raise ValueError(f"Case {case} must be a pair of positive (n, m)!")
        lo, hi = self.target_range
        if not 0 <= lo <= hi:
            raise ValueError(f"Invalid target range {self.target_range}!")
        if any(c < 0 for c in self.target_counts):
            raise ValueError(f"Target counts must be non-negative, got {self.target_counts}!")
        if self.repetitions < 1 or self.resample_k < 1 or self.rank_top < 1:
            raise ValueError("Repetitions, re-sampling runs and rank table size must be positive!")
        if self.mode == 'experiment3' and any(t < 0 or t > self.resample_k for t in self.thetas):
            raise ValueError(f"Thresholds {self.thetas} must lie in 0..{self.resample_k}!")

    @classmethod
    def from_dict(cls, values, base_dir=None):
        """Build a config from a mapping. Unknown keys raise a KeyError and a
        relative network path is resolved against ``base_dir``."""
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - names)
        if unknown:
            raise KeyError(f"Unknown study configuration keys {unknown}!")
        values = dict(values)
        if base_dir is not None and 'network' in values and not os.path.isabs(values['network']):
            values['network'] = os.path.join(base_dir, values['network'])
        return cls(**values)

    @classmethod
    def from_file(cls, path):
        """Read a config from a YAML file."""
        with open(path) as f:
            values = yaml.safe_load(f) or {}
        if not isinstance(values, dict):
            raise ValueError(f"Study configuration {path} must be a mapping!")
        return cls.from_dict(values, os.path.dirname(os.path.abspath(path)))

    def expand_cases(self):
        """Returns the cases of the study. In the second experiment every
        target count is combined with every (n, m) pair."""
        if self.mode == 'experiment2' or self.target_rule == 'constant':
            pairs = [(n, m, c) for n, m in self.cases for c in self.target_counts]
        else:
            pairs = [(n, m, None) for n, m in self.cases]
        return [Case(i, n, m, c) for i, (n, m, c) in enumerate(pairs)]

    def methods(self):
        if self.mode == 'experiment1':
            return ('merge', 'pool')
        if self.mode == 'observational':
            return ('pc',)
        return ('pool',)

@dataclass(frozen=True)
class Case:
    index: int
    n: int
    m: int
    target_count: Optional[int] = None

    @property
    def label(self):
        label = f"n={self.n},m={self.m}"
        return label if self.target_count is None else f"{label},C={self.target_count}"

@dataclass
class StudyReport:
    """Aggregated outcome of a study.

    ``trials`` holds one row per case, method and repetition, ``summary`` the
    mean and standard error per case, method and metric, ``thetas`` the mean
    FN and FP of threshold augmentation and ``ranks`` the share of
    repetitions whose rank-r edge is a true edge.
    """
    config: StudyConfig
    trials: pd.DataFrame
    summary: pd.DataFrame
    thetas: pd.DataFrame
    ranks: pd.DataFrame

def _draw_targets(vertices, count, rng):
    if count > len(vertices):
        raise ValueError(f"Cannot draw {count} targets from {len(vertices)} vertices!")
    chosen = rng.choice(len(vertices), size=count, replace=False)
    return [vertices[i] for i in sorted(chosen)]

def generate_trial(base, n, m, target_rule='uniform', cut_prob=0.5, dirichlet_alpha=1.0, rng=None,
                   multinomial=False, target_range=(1, 5), target_count=None):
    """Generate m interventions on random targets and sample every one of them.

    :param base: The unmanipulated network.
    :type base: :class:`intlearn.bayesnet.DiscreteBayesNet`
    :param n: Records per intervention; with ``multinomial`` the total n*m is
        split by a multinomial draw.
    :type n: int
    :param m: Number of interventions.
    :type m: int
    :param target_rule: ``'uniform'`` draws the target count uniformly from
        ``target_range``, ``'constant'`` uses ``target_count``.
    :type target_rule: str
    :param rng: Seeded generator owned by the caller.
    :type rng: :class:`numpy.random.Generator`
    :raises ValueError: When more targets than vertices are requested.
    :return: The specs and one labelled sample table per intervention.
    :rtype: Tuple[List[:class:`intlearn.bayesnet.InterventionSpec`], List[:class:`intlearn.bayesnet.SampleTable`]]
    """
    if rng is None:
        raise ValueError("An explicit random generator is required!")
    if n < 0 or m < 1:
        raise ValueError(f"Invalid trial size n={n}, m={m}!")
    if target_rule == 'uniform':
        lo, hi = target_range
    elif target_rule == 'constant':
        if target_count is None:
            raise ValueError("The constant target rule needs a target count!")
        lo = hi = target_count
    else:
        raise ValueError(f"Unknown target rule {target_rule}!")
    if hi > len(base.vertices):
        raise ValueError(f"Cannot draw {hi} targets from {len(base.vertices)} vertices!")

    specs = []
    for _ in range(m):
        count = int(rng.integers(lo, hi + 1))
        targets = _draw_targets(base.vertices, count, rng)
        specs.append(generate_intervention_spec(base, targets, cut_prob, dirichlet_alpha, rng))
    counts = allocate_counts(np.ones(m), n * m, rng, multinomial)
    datasets = [sample(apply_intervention(base, spec), counts[j], rng, label=j)
                for j, spec in enumerate(specs)]
    return specs, datasets

def frequency_rank_table(report, truth, top=10):
    """Rank the extra edges by descending frequency and the pooled skeleton
    edges by ascending frequency, and label each as a true edge or not.

    :param report: Re-sampling frequencies.
    :type report: :class:`intlearn.pool.EdgeFrequencyReport`
    :param truth: The true graph.
    :type truth: :class:`intlearn.graph.Dag`
    :param top: Number of edges listed per side.
    :type top: int
    :return: Columns ``side`` (``extra`` or ``meta``), ``rank`` (from 1),
        ``u``, ``v``, ``frequency`` and ``true``.
    :rtype: :class:`pandas.DataFrame`
    """
    true_edges = {frozenset(e) for e in skeleton_of(truth)}
    rows = []
    for side, edges in (('extra', report.descending_extra()), ('meta', report.ascending_meta())):
        for rank, (u, v) in enumerate(edges[:top], start=1):
            rows.append({'side': side, 'rank': rank, 'u': u, 'v': v,
                         'frequency': report.frequency((u, v)),
                         'true': frozenset((u, v)) in true_edges})
    return pd.DataFrame(rows, columns=['side', 'rank', 'u', 'v', 'frequency', 'true'])

def run_repetition(base, config, case, repetition):
    """Run one repetition of one case. The generator is seeded with
    (seed, case index, repetition), so repetitions are independent of the
    order in which they run.

    :return: Trial rows, threshold rows and rank rows.
    :rtype: Tuple[list, list, list]
    """
    rng = np.random.default_rng([config.seed, case.index, repetition])
    truth = base.dag
    key = {'case': case.label, 'n': case.n, 'm': case.m, 'C': case.target_count,
           'repetition': repetition}
    kwargs = dict(alpha=config.alpha, max_cond=config.max_cond, method=config.ci_method)
    trials, thetas, ranks = [], [], []

    if config.mode == 'observational':
        data = sample(base, case.n * case.m, rng)
        trials.append({**key, 'method': 'pc', **score(pc_learn(data, **kwargs), truth).as_dict()})
        return trials, thetas, ranks

    rule = 'constant' if case.target_count is not None else 'uniform'
    _, datasets = generate_trial(base, case.n, case.m, rule, config.cut_prob, config.dirichlet_alpha, rng,
                                 config.multinomial, config.target_range, case.target_count)
    if config.mode == 'experiment1':
        merged = merge_learn(datasets, **kwargs).pattern
        trials.append({**key, 'method': 'merge', **score(merged, truth).as_dict()})
    meta = pool_learn_meta(datasets, **kwargs)
    trials.append({**key, 'method': 'pool', **score(meta, truth).as_dict()})

    if config.mode == 'experiment3':
        report = resample_frequencies(datasets, config.resample_k, config.subset_size, rng=rng,
                                      meta=meta, **kwargs)
        for theta in config.thetas:
            metrics = score(augment(meta, report, theta), truth)
            thetas.append({**key, 'theta': theta, 'fn': metrics.fn, 'fp': metrics.fp})
        table = frequency_rank_table(report, truth, config.rank_top)
        ranks.extend({**key, **row} for row in table.to_dict('records'))
    return trials, thetas, ranks

def _summarize(trials):
    long = trials.melt(id_vars=['case', 'n', 'm', 'C', 'method', 'repetition'], value_vars=list(METRICS),
                       var_name='metric')
    grouped = long.groupby(['case', 'method', 'metric'], sort=False)['value']
    summary = grouped.agg(mean='mean', std='std', count='count').reset_index()
    summary['se'] = (summary['std'] / np.sqrt(summary['count'])).fillna(0.0)
    return summary.drop(columns=['std', 'count'])

def _summarize_thetas(rows):
    if not rows:
        return pd.DataFrame(columns=['case', 'theta', 'fn', 'fp', 'sum'])
    frame = pd.DataFrame(rows, columns=['case', 'n', 'm', 'C', 'repetition', 'theta', 'fn', 'fp'])
    frame['sum'] = frame['fn'] + frame['fp']
    return frame.groupby(['case', 'theta'], sort=False)[['fn', 'fp', 'sum']].mean().reset_index()

def _summarize_ranks(rows):
    if not rows:
        return pd.DataFrame(columns=['case', 'side', 'rank', 'share', 'count'])
    frame = pd.DataFrame(rows, columns=['case', 'n', 'm', 'C', 'repetition', 'side', 'rank', 'u', 'v',
                                        'frequency', 'true'])
    frame['true'] = frame['true'].astype(float)
    return (frame.groupby(['case', 'side', 'rank'], sort=False)['true'].agg(share='mean', count='count')
            .reset_index())

def run_study(config, jobs=None, net=None):
    """Run every case and repetition of a study.

    :param config: Study parameters.
    :type config: :class:`StudyConfig`
    :param jobs: Number of joblib workers over repetitions.
    :type jobs: int, optional
    :param net: Network to use instead of reading ``config.network``.
    :type net: :class:`intlearn.bayesnet.DiscreteBayesNet`, optional
    :raises OSError: When the network file cannot be read.
    :rtype: :class:`StudyReport`
    """
    if net is None:
        try:
            with open(config.network) as f:
                net = parse_bif(f.read())
        except OSError as e:
            raise OSError(f"Cannot read network {config.network}: {e.strerror}") from e
    cases = config.expand_cases()
    for case in cases:
        if case.target_count is not None and case.target_count > len(net.vertices):
            raise ValueError(f"Case {case.label} asks for more targets than the {len(net.vertices)} vertices!")
    if config.mode == 'experiment3' and config.subset_size is not None:
        for case in cases:
            if not 1 <= config.subset_size <= case.m:
                raise ValueError(f"Subset size {config.subset_size} does not fit case {case.label}!")

    logger.info("Running %s with %d cases and %d repetitions", config.mode, len(cases), config.repetitions)
    jobs_list = [(case, rep) for case in cases for rep in range(config.repetitions)]
    results = Parallel(n_jobs=jobs)(delayed(run_repetition)(net, config, case, rep) for case, rep in jobs_list)

    trials = pd.DataFrame([row for r in results for row in r[0]])
    thetas = _summarize_thetas([row for r in results for row in r[1]])
    ranks = _summarize_ranks([row for r in results for row in r[2]])
    return StudyReport(config, trials, _summarize(trials), thetas, ranks)

def figure_table(report):
    """Returns one row per case and method with the mean and standard error of
    every metric, ready for plotting."""
    wide = report.summary.pivot_table(index=['case', 'method'], columns='metric', values=['mean', 'se'],
                                      sort=False)
    wide.columns = [f"{metric}_{stat}" for stat, metric in wide.columns]
    columns = [f"{metric}_{stat}" for metric in METRICS for stat in ('mean', 'se')]
    return wide[columns].reset_index()

def threshold_table(report):
    """Returns FN, FP and their sum as rows and one column per threshold, for
    every case."""
    frames = []
    for case, group in report.thetas.groupby('case', sort=False):
        table = group.set_index('theta')[['fn', 'fp', 'sum']].T
        table.index = ['FN', 'FP', 'Sum']
        table.insert(0, 'case', case)
        frames.append(table.rename_axis('quantity').reset_index())
    if not frames:
        return pd.DataFrame(columns=['quantity', 'case'])
    return pd.concat(frames, ignore_index=True)

def rank_table(report):
    """Returns the share of true edges per rank as one row per case and side
    and one column per rank."""
    if report.ranks.empty:
        return pd.DataFrame(columns=['case', 'side'])
    table = report.ranks.pivot_table(index=['case', 'side'], columns='rank', values='share', sort=False)
    table.columns = [f"rank_{r}" for r in table.columns]
    return table.reset_index()

def write_study(report, out_dir):
    """Write the CSV tables and a JSON summary of a study to a directory.

    Files: ``trials.csv``, ``summary.csv``, ``figure.csv``, ``thetas.csv``,
    ``ranks.csv`` and ``report.json``. Identical reports give identical files.
    """
    os.makedirs(out_dir, exist_ok=True)
    float_format = '%.10g'
    tables = {
        'trials.csv': report.trials,
        'summary.csv': report.summary,
        'figure.csv': figure_table(report),
        'thetas.csv': threshold_table(report),
        'ranks.csv': rank_table(report),
    }
    for name, frame in tables.items():
        frame.to_csv(os.path.join(out_dir, name), index=False, float_format=float_format)
    summary = json.loads(report.summary.to_json(orient='records', double_precision=10))
    document = {
        'schema_version': 1,
        'config_echo': asdict(report.config),
        'seed': report.config.seed,
        'summary': summary,
    }
    with open(os.path.join(out_dir, 'report.json'), 'w') as f:
        json.dump(document, f, sort_keys=True, indent=2)
        f.write('\n')
    logger.info("Wrote study results to %s", out_dir)
