"""
Studies on the 37 vertex ALARM network. The network file is not shipped with
the package; point INTLEARN_ALARM_BIF at a copy to run these tests.
"""
import os

import numpy as np
import pytest

from intlearn.experiment import StudyConfig, run_study
from intlearn.graph import pattern_of, skeleton_of
from intlearn.io import parse_bif
from intlearn.pc import DSeparationCi, pc_learn

ALARM_BIF = os.environ.get('INTLEARN_ALARM_BIF')

pytestmark = [
    pytest.mark.slow,
    pytest.mark.skipif(not ALARM_BIF, reason="INTLEARN_ALARM_BIF is not set"),
]

@pytest.fixture(scope='module')
def alarm():
    with open(ALARM_BIF) as f:
        return parse_bif(f.read())

def study(**kwargs):
    return StudyConfig(network=ALARM_BIF, **kwargs)

def mean_of(report, method, metric):
    rows = report.summary[(report.summary['method'] == method) & (report.summary['metric'] == metric)]
    return rows.set_index('case')['mean']

def test_alarm_structure(alarm):
    assert len(alarm.vertices) == 37
    assert len(skeleton_of(alarm.dag)) == 46

def test_alarm_oracle(alarm):
    assert pc_learn(DSeparationCi(alarm.dag), max_cond=None) == pattern_of(alarm.dag)

def test_observational_baseline(alarm):
    report = run_study(study(seed=1, mode='observational', cases=[[5000, 1]]), jobs=-1, net=alarm)
    assert mean_of(report, 'pc', 'fn').iloc[0] == pytest.approx(5.51, abs=1.5)
    assert mean_of(report, 'pc', 'fp').iloc[0] == pytest.approx(0.22, abs=0.5)

def test_merge_and_pool_trends(alarm):
    report = run_study(study(seed=2), jobs=-1, net=alarm)
    pool_tdr = mean_of(report, 'pool', 'tdr')
    assert pool_tdr['n=100,m=50'] > pool_tdr['n=2500,m=2']
    assert mean_of(report, 'pool', 'tpr')['n=100,m=50'] > mean_of(report, 'merge', 'tpr')['n=100,m=50']

def test_more_targets_degrade_pooling(alarm):
    report = run_study(study(seed=4, mode='experiment2', repetitions=20), jobs=-1, net=alarm)
    labels = [f"n=100,m=50,C={c}" for c in (2, 5, 10, 20)]
    for metric in ('tdr', 'tpr'):
        means = mean_of(report, 'pool', metric)[labels].to_numpy()
        assert means[0] > means[-1]
        assert np.all(np.diff(means) <= 0.02)

def test_threshold_and_ranks(alarm):
    thetas = [0, 5, 10, 15, 20, 25, 30, 35, 50]
    config = study(seed=3, mode='experiment3', cases=[[100, 50]], repetitions=20, resample_k=50,
                   subset_size=30, thetas=thetas)
    report = run_study(config, jobs=-1, net=alarm)
    totals = report.thetas.set_index('theta')['sum']
    assert int(totals.idxmin()) in {15, 20, 25, 30}
    assert np.all(report.thetas['fn'].diff().dropna() >= 0)

    ranks = report.ranks.set_index(['side', 'rank'])['share']
    assert ranks[('extra', 1)] >= 0.8
    assert ranks[('meta', 1)] <= 0.7
