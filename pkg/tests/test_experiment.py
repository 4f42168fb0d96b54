import os

import numpy as np
import pandas as pd
import pytest

from intlearn.bayesnet import random_net
from intlearn.experiment import (
    METRICS, StudyConfig, figure_table, frequency_rank_table, generate_trial, rank_table, run_study,
    threshold_table, write_study,
)
from intlearn.graph import build_dag, random_dag
from intlearn.io import write_bif
from intlearn.pool import EdgeFrequencyReport

def small_net(seed=100, n=5):
    rng = np.random.default_rng(seed)
    return random_net(random_dag(n, 0.5, rng), 2, rng)

def small_config(**kwargs):
    values = dict(network='unused.bif', seed=11, cases=[[120, 3]], target_range=[1, 2], repetitions=3,
                  max_cond=2)
    values.update(kwargs)
    return StudyConfig(**values)

def read_dir(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}

def test_config_from_file(tmp_path):
    path = tmp_path / 'study.yaml'
    path.write_text("network: alarm.bif\nseed: 3\nmode: experiment3\ncases: [[100, 50]]\nthetas: [0, 20]\n")
    config = StudyConfig.from_file(str(path))
    assert config.network == os.path.join(str(tmp_path), 'alarm.bif')
    assert config.mode == 'experiment3'
    assert config.cases == [[100, 50]]
    assert config.resample_k == 100
    assert config.alpha == 0.01

def test_config_errors(tmp_path):
    with pytest.raises(KeyError):
        StudyConfig.from_dict({'network': 'a.bif', 'seed': 1, 'colour': 'red'})
    with pytest.raises(ValueError):
        StudyConfig(network='a.bif', seed=1, mode='experiment9')
    with pytest.raises(ValueError):
        StudyConfig(network='a.bif', seed=1, cases=[[100, 0]])
    with pytest.raises(ValueError):
        StudyConfig(network='a.bif', seed=1, mode='experiment3', resample_k=10, thetas=[20])
    path = tmp_path / 'list.yaml'
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ValueError):
        StudyConfig.from_file(str(path))

def test_expand_cases():
    config = StudyConfig(network='a.bif', seed=1, mode='experiment2', cases=[[100, 5], [50, 10]],
                         target_counts=[1, 2])
    cases = config.expand_cases()
    assert [c.label for c in cases] == ['n=100,m=5,C=1', 'n=100,m=5,C=2', 'n=50,m=10,C=1', 'n=50,m=10,C=2']
    assert [c.index for c in cases] == [0, 1, 2, 3]
    assert len(StudyConfig(network='a.bif', seed=1).expand_cases()) == 4
    assert config.methods() == ('pool',)
    assert StudyConfig(network='a.bif', seed=1).methods() == ('merge', 'pool')

def test_default_cases_per_mode():
    def labels(mode):
        return [c.label for c in StudyConfig(network='a.bif', seed=1, mode=mode).expand_cases()]
    assert labels('experiment2') == ['n=100,m=50,C=2', 'n=100,m=50,C=5', 'n=100,m=50,C=10', 'n=100,m=50,C=20']
    assert labels('experiment3') == ['n=100,m=50']
    assert labels('observational') == ['n=5000,m=1']
    assert StudyConfig(network='a.bif', seed=1).cases == [[2500, 2], [500, 10], [200, 25], [100, 50]]

def test_generate_trial_constant_targets():
    base = small_net(n=6)
    specs, datasets = generate_trial(base, 40, 4, 'constant', rng=np.random.default_rng(101), target_count=5)
    assert all(len(s.targets) == 5 for s in specs)
    assert [len(d) for d in datasets] == [40] * 4
    assert [set(d.labels) for d in datasets] == [{0}, {1}, {2}, {3}]

def test_generate_trial_observational():
    base = small_net()
    specs, datasets = generate_trial(base, 30, 1, 'constant', rng=np.random.default_rng(102), target_count=0)
    assert len(specs[0]) == 0
    assert len(datasets[0]) == 30

def test_generate_trial_uniform_mean():
    base = small_net()
    specs, _ = generate_trial(base, 0, 4000, 'uniform', rng=np.random.default_rng(103), target_range=(1, 5))
    counts = [len(s.targets) for s in specs]
    assert set(counts) == {1, 2, 3, 4, 5}
    assert abs(np.mean(counts) - 3) < 0.08

def test_generate_trial_errors():
    base = small_net()
    with pytest.raises(ValueError):
        generate_trial(base, 10, 2, 'constant', rng=np.random.default_rng(104), target_count=6)
    with pytest.raises(ValueError):
        generate_trial(base, 10, 2, 'constant', rng=np.random.default_rng(104))
    with pytest.raises(ValueError):
        generate_trial(base, 10, 0, rng=np.random.default_rng(104))

def test_multinomial_total():
    base = small_net()
    _, datasets = generate_trial(base, 50, 4, rng=np.random.default_rng(105), multinomial=True)
    assert sum(len(d) for d in datasets) == 200

def test_frequency_rank_table():
    truth = build_dag(['a', 'b', 'c', 'd'], [('a', 'b'), ('c', 'd')])
    report = EdgeFrequencyReport(('a', 'b', 'c', 'd'), 10, 2, ((0, 1),) * 10, frozenset({('a', 'b')}),
                                 frozenset({('a', 'b'), ('c', 'd'), ('b', 'c')}),
                                 {('a', 'b'): 10, ('c', 'd'): 8, ('b', 'c'): 3})
    table = frequency_rank_table(report, truth)
    assert table[['side', 'rank', 'u', 'v', 'frequency']].values.tolist() == [
        ['extra', 1, 'c', 'd', 8], ['extra', 2, 'b', 'c', 3], ['meta', 1, 'a', 'b', 10]]
    assert table['true'].tolist() == [True, False, True]
    assert len(frequency_rank_table(report, truth, top=1)) == 2

def test_study_determinism(tmp_path):
    net = small_net()
    config = small_config()
    serial = run_study(config, net=net)
    parallel = run_study(config, jobs=2, net=net)
    pd.testing.assert_frame_equal(serial.trials, parallel.trials)
    assert len(serial.trials) == 6
    assert set(serial.trials['method']) == {'merge', 'pool'}
    write_study(serial, str(tmp_path / 'a'))
    write_study(parallel, str(tmp_path / 'b'))
    assert read_dir(tmp_path / 'a') == read_dir(tmp_path / 'b')
    assert set(os.listdir(tmp_path / 'a')) == {'trials.csv', 'summary.csv', 'figure.csv', 'thetas.csv',
                                               'ranks.csv', 'report.json'}

def test_study_summary():
    report = run_study(small_config(), net=small_net())
    assert set(report.summary['metric']) == set(METRICS)
    assert len(report.summary) == 2 * len(METRICS)
    tpr = report.summary[(report.summary['method'] == 'pool') & (report.summary['metric'] == 'tpr')]
    trials = report.trials[report.trials['method'] == 'pool']
    assert tpr['mean'].iloc[0] == pytest.approx(trials['tpr'].mean())
    figure = figure_table(report)
    assert len(figure) == 2
    assert 'd_tdr_se' in figure.columns

def test_study_reads_network(tmp_path):
    path = tmp_path / 'net.bif'
    path.write_text(write_bif(small_net()))
    report = run_study(small_config(network=str(path), repetitions=1))
    assert len(report.trials) == 2
    with pytest.raises(OSError):
        run_study(small_config(network=str(tmp_path / 'missing.bif')))

def test_threshold_study_is_monotone():
    config = small_config(mode='experiment3', cases=[[150, 4]], resample_k=10, thetas=[0, 2, 5, 10],
                          repetitions=2)
    report = run_study(config, net=small_net(106))
    assert set(report.trials['method']) == {'pool'}
    thetas = report.thetas.sort_values('theta')
    assert thetas['theta'].tolist() == [0, 2, 5, 10]
    assert thetas['fn'].is_monotonic_increasing
    assert thetas['fp'].is_monotonic_decreasing
    table = threshold_table(report)
    assert table['quantity'].tolist() == ['FN', 'FP', 'Sum']
    assert not report.ranks.empty
    assert report.ranks['share'].between(0, 1).all()
    assert set(rank_table(report)['side']) <= {'extra', 'meta'}

def test_observational_study(tmp_path):
    report = run_study(small_config(mode='observational', repetitions=2), net=small_net())
    assert set(report.trials['method']) == {'pc'}
    assert report.thetas.empty and report.ranks.empty
    write_study(report, str(tmp_path))
    assert os.path.exists(tmp_path / 'report.json')

def test_too_many_targets():
    config = small_config(target_rule='constant', target_counts=[9])
    with pytest.raises(ValueError):
        run_study(config, net=small_net())
