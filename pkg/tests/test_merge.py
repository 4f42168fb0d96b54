import numpy as np
import pytest

from intlearn.bayesnet import (
    InterventionSpec, SampleTable, apply_intervention, generate_intervention_spec, intervene_dag, is_conservative,
    random_net, sample,
)
from intlearn.graph import build_dag, pattern_of, random_dag, skeleton_of
from intlearn.merge import merge_learn, merge_learn_oracle
from intlearn.pc import DSeparationCi, pc_learn

def random_family(rng, m_range=(1, 4), max_targets=2):
    """A random network with a random family of interventions."""
    dag = random_dag(int(rng.integers(3, 9)), 0.3, rng)
    net = random_net(dag, 2, rng)
    specs = []
    for _ in range(int(rng.integers(m_range[0], m_range[1] + 1))):
        count = int(rng.integers(1, min(max_targets, len(dag.vertices)) + 1))
        targets = [dag.vertices[i] for i in rng.choice(len(dag.vertices), count, replace=False)]
        specs.append(generate_intervention_spec(net, targets, 0.5, 1.0, rng))
    return net, specs

def hard(net, target, rng):
    return generate_intervention_spec(net, [target], cut_prob=1.0, rng=rng)

def test_observational_specs():
    rng = np.random.default_rng(50)
    for _ in range(20):
        dag = random_dag(6, 0.4, rng)
        result = merge_learn_oracle(dag, [InterventionSpec(), InterventionSpec()])
        assert result.pattern == pattern_of(dag)
        assert result.conflicts == frozenset()
        assert len(result.patterns) == 2

def test_hard_interventions_on_both_endpoints():
    rng = np.random.default_rng(51)
    net = random_net(build_dag(['x1', 'x2'], [('x1', 'x2')]), 2, rng)
    on_x1 = merge_learn_oracle(net, [hard(net, 'x1', rng)])
    assert on_x1.pattern.skeleton_edges == {('x1', 'x2')}
    both = merge_learn_oracle(net, [hard(net, 'x1', rng), hard(net, 'x2', rng)])
    assert both.patterns[1].skeleton_edges == frozenset()
    assert both.pattern.skeleton_edges == {('x1', 'x2')}

def test_unknown_target_is_not_identifiable():
    # A hard intervention removing the only edge looks the same for both directions
    rng = np.random.default_rng(52)
    forward = random_net(build_dag(['x1', 'x2'], [('x1', 'x2')]), 2, rng)
    backward = random_net(build_dag(['x1', 'x2'], [('x2', 'x1')]), 2, rng)
    a = pc_learn(DSeparationCi(intervene_dag(forward.dag, hard(forward, 'x2', rng))))
    b = pc_learn(DSeparationCi(intervene_dag(backward.dag, hard(backward, 'x1', rng))))
    assert a == b
    assert a.skeleton_edges == frozenset()

def test_single_intervention_guarantees():
    rng = np.random.default_rng(53)
    for _ in range(100):
        net, specs = random_family(rng)
        result = merge_learn_oracle(net, specs)
        for spec, learned in zip(specs, result.patterns):
            assert learned == pattern_of(intervene_dag(net.dag, spec))
        assert result.pattern.skeleton_edges <= skeleton_of(net.dag)
        assert result.pattern.arrows <= net.dag.edges
        assert result.conflicts == frozenset()

def test_conservative_family_recovers_pattern():
    rng = np.random.default_rng(54)
    checked = 0
    for _ in range(2000):
        net, specs = random_family(rng, (2, 4))
        if not is_conservative(specs, net.vertices):
            continue
        assert merge_learn_oracle(net, specs).pattern == pattern_of(net.dag)
        checked += 1
        if checked == 100:
            break
    assert checked == 100

def test_merge_learn_single_dataset():
    rng = np.random.default_rng(55)
    net = random_net(random_dag(5, 0.4, rng), 2, rng)
    data = sample(net, 300, rng)
    result = merge_learn([data])
    assert result.pattern == pc_learn(data)
    assert result.patterns == (result.pattern,)

def test_merge_learn_statistical():
    rng = np.random.default_rng(56)
    net = random_net(random_dag(5, 0.5, rng), 3, rng)
    specs = [generate_intervention_spec(net, [v], rng=rng) for v in net.vertices[:2]]
    datasets = [sample(apply_intervention(net, s), 400, rng, label=j) for j, s in enumerate(specs)]
    serial = merge_learn(datasets, alpha=0.01)
    parallel = merge_learn(datasets, alpha=0.01, jobs=2)
    assert serial == parallel
    assert serial.pattern.skeleton_edges == frozenset().union(*(p.skeleton_edges for p in serial.patterns))

def test_variable_mismatch():
    a = SampleTable(['x', 'y'], [[0, 1]], {'x': 2, 'y': 2})
    b = SampleTable(['x', 'z'], [[0, 1]], {'x': 2, 'z': 2})
    c = SampleTable(['x', 'y'], [[0, 1]], {'x': 2, 'y': 3})
    with pytest.raises(ValueError):
        merge_learn([a, b])
    with pytest.raises(ValueError):
        merge_learn([a, c])
    with pytest.raises(ValueError):
        merge_learn([])
    with pytest.raises(ValueError):
        merge_learn_oracle(build_dag(['x'], []), [])
