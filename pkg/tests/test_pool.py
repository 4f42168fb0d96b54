import itertools

import numpy as np
import pytest

from intlearn.bayesnet import (
    SampleTable, apply_intervention, ci_exact, generate_intervention_spec, mixture, observational_vertices,
    random_net, sample,
)
from intlearn.graph import PatternGraph, build_dag, non_descendants, pattern_of, random_dag, restrict, topological_order
from intlearn.pc import pc_learn
from intlearn.pool import (
    EdgeFrequencyReport, augment, pool_datasets, pool_learn_meta, pool_learn_meta_oracle, resample_frequencies,
    separates_from_targets,
)

def example_net(rng):
    vertices = ['x1', 'x2', 'x3', 'x4', 'x5']
    dag = build_dag(vertices, [('x1', 'x2'), ('x2', 'x3'), ('x3', 'x4'), ('x4', 'x5'), ('x1', 'x5')])
    return random_net(dag, 2, rng)

def example_specs(net, rng):
    return [generate_intervention_spec(net, [t], cut_prob=1.0, rng=rng) for t in ('x1', 'x5')]

def mixture_instance(rng):
    """Random 5 to 7 vertex network with 2 to 4 interventions on 1 or 2 targets."""
    dag = random_dag(int(rng.integers(5, 8)), 0.35, rng)
    net = random_net(dag, 2, rng)
    specs = []
    for _ in range(int(rng.integers(2, 5))):
        count = int(rng.integers(1, 3))
        targets = [dag.vertices[i] for i in rng.choice(len(dag.vertices), count, replace=False)]
        specs.append(generate_intervention_spec(net, targets, 0.5, 1.0, rng))
    return net, specs

def interventional_datasets(rng, m=6, n=150):
    net = random_net(random_dag(5, 0.5, rng), 2, rng)
    datasets = []
    for j in range(m):
        spec = generate_intervention_spec(net, [net.vertices[j % 5]], rng=rng)
        datasets.append(sample(apply_intervention(net, spec), n, rng, label=j))
    return net, datasets

def hand_report():
    return EdgeFrequencyReport(
        vertices=('a', 'b', 'c', 'd'), k_runs=10, subset_size=2, drawn_subsets=((0, 1),) * 10,
        meta_edges=frozenset({('a', 'b')}),
        union_edges=frozenset({('a', 'b'), ('c', 'd'), ('b', 'c')}),
        freq={('a', 'b'): 10, ('c', 'd'): 8, ('b', 'c'): 3})

def test_pool_datasets():
    rng = np.random.default_rng(60)
    net = example_net(rng)
    a = sample(net, 100, rng)
    b = sample(net, 100, rng, label=7)
    pooled = pool_datasets([a, b])
    assert len(pooled) == 200
    assert list(pooled.labels) == [0] * 100 + [7] * 100
    assert np.array_equal(pooled.data[100:], b.data)
    single = pool_datasets([a])
    assert list(single.labels) == [0] * 100
    assert np.array_equal(single.data, a.data)
    assert pool_datasets([b]) is b

def test_pool_datasets_fresh_labels():
    rng = np.random.default_rng(59)
    net = example_net(rng)
    a, b, c = sample(net, 3, rng), sample(net, 3, rng, label=0), sample(net, 3, rng)
    pooled = pool_datasets([a, b, c])
    assert list(pooled.labels) == [1] * 3 + [0] * 3 + [2] * 3

def test_pool_datasets_mismatch():
    a = SampleTable(['x', 'y'], [[0, 1]], {'x': 2, 'y': 2})
    b = SampleTable(['y', 'x'], [[0, 1]], {'x': 2, 'y': 2})
    with pytest.raises(ValueError):
        pool_datasets([a, b])

def test_pooled_distribution_approaches_mixture():
    rng = np.random.default_rng(61)
    net = example_net(rng)
    specs = example_specs(net, rng)
    nets = [apply_intervention(net, s) for s in specs]
    pooled = pool_datasets([sample(n, 100000, rng, label=j) for j, n in enumerate(nets)])
    counts = np.zeros((2,) * 5)
    np.add.at(counts, tuple(pooled.data.T), 1)
    assert np.abs(counts / len(pooled) - mixture(nets, [0.5, 0.5]).probabilities).max() < 0.01

def test_example_mixture_independence():
    rng = np.random.default_rng(62)
    net = example_net(rng)
    specs = example_specs(net, rng)
    pm = mixture([apply_intervention(net, s) for s in specs], [0.5, 0.5])
    assert ci_exact(pm, 'x4', 'x2', ['x3'])
    assert not separates_from_targets(net.dag, specs, 'x2', 'x4', ['x3'])
    meta = pool_learn_meta_oracle(net, specs)
    assert not meta.adjacent('x2', 'x4')

def test_separates_from_targets():
    rng = np.random.default_rng(63)
    net = example_net(rng)
    spec = generate_intervention_spec(net, ['x1'], rng=rng)
    assert separates_from_targets(net.dag, [spec], 'x3', 'x4', ['x2'])
    assert not separates_from_targets(net.dag, [spec], 'x1', 'x4', ['x2'])
    assert separates_from_targets(net.dag, [], 'x2', 'x4', [])

def test_mixture_markov_properties():
    rng = np.random.default_rng(64)
    for _ in range(50):
        net, specs = mixture_instance(rng)
        g = net.dag
        pm = mixture([apply_intervention(net, s) for s in specs], np.full(len(specs), 1 / len(specs)))
        observed = observational_vertices(specs, g.vertices)
        for x in observed:
            parents = g.parents(x)
            rest = [v for v in g.sorted(non_descendants(g, x)) if v not in parents]
            assert ci_exact(pm, x, rest, parents)
        position = {v: i for i, v in enumerate(topological_order(g))}
        for x, y in itertools.combinations(observed, 2):
            if not g.adjacent(x, y):
                later = x if position[x] > position[y] else y
                other = y if later == x else x
                assert ci_exact(pm, later, other, g.parents(later))

def separating_sets(pm, vertices, x, y):
    rest = [v for v in vertices if v not in (x, y)]
    return [s for k in range(len(rest) + 1) for s in itertools.combinations(rest, k) if ci_exact(pm, x, y, s)]

def test_mixture_adjacencies_and_colliders():
    rng = np.random.default_rng(69)
    for _ in range(25):
        net, specs = mixture_instance(rng)
        g = net.dag
        pm = mixture([apply_intervention(net, s) for s in specs], np.full(len(specs), 1 / len(specs)))
        observed = observational_vertices(specs, g.vertices)
        found = {}
        for x, y in itertools.combinations(observed, 2):
            found[frozenset((x, y))] = separating_sets(pm, g.vertices, x, y)
            assert g.adjacent(x, y) == (not found[frozenset((x, y))])
        for c in observed:
            neighbours = [v for v in observed if g.adjacent(c, v)]
            for a, b in itertools.combinations(neighbours, 2):
                if g.adjacent(a, b):
                    continue
                collider = g.has_edge(a, c) and g.has_edge(b, c)
                assert collider == all(c not in s for s in found[frozenset((a, b))])

def test_meta_oracle_recovers_observed_part():
    rng = np.random.default_rng(65)
    for _ in range(50):
        net, specs = mixture_instance(rng)
        observed = observational_vertices(specs, net.vertices)
        meta = pool_learn_meta_oracle(net, specs, resolve_conflicts=False)
        assert restrict(meta, observed) == restrict(pattern_of(net.dag), observed)

def test_meta_oracle_without_interventions():
    rng = np.random.default_rng(66)
    net = example_net(rng)
    assert pool_learn_meta_oracle(net, [generate_intervention_spec(net, [], rng=rng)]) == pattern_of(net.dag)
    with pytest.raises(ValueError):
        pool_learn_meta_oracle(net, [])

def test_pool_learn_meta_identical_datasets():
    rng = np.random.default_rng(67)
    net = example_net(rng)
    data = sample(net, 300, rng)
    doubled = SampleTable(data.variables, np.concatenate([data.data, data.data]), data.cardinalities)
    assert pool_learn_meta([data, data]) == pc_learn(doubled)

def test_resample_full_subsets():
    rng = np.random.default_rng(68)
    _, datasets = interventional_datasets(rng, m=4)
    report = resample_frequencies(datasets, k_runs=5, subset_size=4, rng=np.random.default_rng(1))
    assert all(s == (0, 1, 2, 3) for s in report.drawn_subsets)
    assert set(report.freq.values()) <= {0, 5}
    assert report.extra_edges == frozenset()
    assert all(report.frequency(e) == 5 for e in report.meta_edges)

def test_resample_report_consistency():
    rng = np.random.default_rng(69)
    _, datasets = interventional_datasets(rng)
    report = resample_frequencies(datasets, k_runs=20, rng=np.random.default_rng(2))
    assert report.subset_size == 4
    assert len(report.drawn_subsets) == 20
    assert all(len(set(s)) == 4 for s in report.drawn_subsets)
    assert not report.extra_edges & report.meta_edges
    assert all(1 <= report.frequency(e) <= 20 for e in report.union_edges)
    assert set(report.freq) == report.union_edges | report.meta_edges
    ranked = [report.frequency(e) for e in report.descending_extra()]
    assert ranked == sorted(ranked, reverse=True)

def test_resample_determinism():
    rng = np.random.default_rng(70)
    _, datasets = interventional_datasets(rng)
    a = resample_frequencies(datasets, k_runs=8, subset_size=3, rng=np.random.default_rng(3))
    b = resample_frequencies(datasets, k_runs=8, subset_size=3, rng=np.random.default_rng(3), jobs=2)
    assert a == b

def test_resample_errors():
    rng = np.random.default_rng(71)
    _, datasets = interventional_datasets(rng, m=3, n=20)
    with pytest.raises(ValueError):
        resample_frequencies(datasets, subset_size=4, rng=rng)
    with pytest.raises(ValueError):
        resample_frequencies(datasets, subset_size=0, rng=rng)
    with pytest.raises(ValueError):
        resample_frequencies(datasets, k_runs=0, rng=rng)
    with pytest.raises(ValueError):
        resample_frequencies(datasets)

def test_report_rejects_bad_frequencies():
    with pytest.raises(ValueError):
        EdgeFrequencyReport(('a', 'b'), 5, 1, (), frozenset(), frozenset({('a', 'b')}), {('a', 'b'): 6})

def test_augment_thresholds():
    report = hand_report()
    meta = PatternGraph(['a', 'b', 'c', 'd'], [('a', 'b')])
    assert augment(meta, report, 10).skeleton_edges == meta.skeleton_edges
    assert augment(meta, report, 0).skeleton_edges == {('a', 'b'), ('b', 'c'), ('c', 'd')}
    middle = augment(meta, report, 5)
    assert middle.skeleton_edges == {('a', 'b'), ('c', 'd')}
    assert middle.added_edges == {('c', 'd')}
    with pytest.raises(ValueError):
        augment(meta, report, -1)

def test_augment_monotone():
    report = hand_report()
    meta = PatternGraph(['a', 'b', 'c', 'd'], [('a', 'b')])
    sizes = [len(augment(meta, report, theta).skeleton_edges) for theta in range(12)]
    assert sizes == sorted(sizes, reverse=True)

def test_augment_drops_shielded_v_structures():
    meta = PatternGraph(['a', 'b', 'c'], [('a', 'b'), ('b', 'c')], [('a', 'b', 'c')])
    report = EdgeFrequencyReport(('a', 'b', 'c'), 10, 1, ((0,),) * 10, meta.skeleton_edges,
                                 frozenset({('a', 'b'), ('b', 'c'), ('a', 'c')}),
                                 {('a', 'b'): 10, ('b', 'c'): 10, ('a', 'c'): 9})
    assert augment(meta, report, 5).v_structures == frozenset()
    assert augment(meta, report, 9).v_structures == meta.v_structures
