"""
Discrete Bayesian networks: exact joint and conditional computations by
enumeration, ancestral sampling, generation and application of interventions
and exact mixture distributions over several intervened networks.
"""
import itertools
import math

import numpy as np

from intlearn.graph import Dag, topological_order

ENUMERATION_CAP = 2 ** 20
"""Largest number of joint configurations handled by exact enumeration."""

NORMALIZATION_TOLERANCE = 1e-9

def _as_tuple(vertices):
    if isinstance(vertices, str):
        return (vertices,)
    return tuple(vertices)

class Cpt:
    """Conditional probability table P(variable | parents).

    The table is an array with one axis per parent (in the given order)
    followed by one axis for the variable itself, so ``table[pa][:]`` is the
    distribution of the variable for the parent configuration ``pa``.
    """

    def __init__(self, variable, parents, cardinalities, table):
        """
        :param variable: The variable described by the table.
        :param parents: Ordered parent list.
        :param cardinalities: Category counts for the variable and every parent.
        :type cardinalities: Mapping[str, int]
        :param table: Probabilities, any array-like of the right size.
        """
        self._variable = variable
        self._parents = tuple(parents)
        try:
            self._cards = {v: int(cardinalities[v]) for v in (variable,) + self._parents}
        except KeyError as e:
            raise KeyError(f"Missing cardinality for {e.args[0]} in table of {variable}!") from None
        for v, k in self._cards.items():
            if k < 2:
                raise ValueError(f"Variable {v} needs at least 2 categories, got {k}!")

        shape = tuple(self._cards[p] for p in self._parents) + (self._cards[variable],)
        table = np.asarray(table, dtype=float)
        if table.size != math.prod(shape):
            raise ValueError(f"Table of {variable} has {table.size} entries, expected {math.prod(shape)}!")
        table = table.reshape(shape)
        if np.any(table < 0):
            raise ValueError(f"Table of {variable} contains negative probabilities!")
        sums = table.sum(axis=-1)
        if np.any(np.abs(sums - 1) > NORMALIZATION_TOLERANCE):
            raise ValueError(f"Table of {variable} has rows that do not sum to 1!")
        table.setflags(write=False)
        self._table = table

    def __repr__(self):
        return f"Cpt({self._variable} | {', '.join(self._parents)})"

    @property
    def variable(self):
        return self._variable

    @property
    def parents(self):
        return self._parents

    @property
    def cardinality(self):
        """Returns the number of categories of the variable."""
        return self._cards[self._variable]

    @property
    def cardinalities(self):
        return dict(self._cards)

    @property
    def table(self):
        """Returns the read-only probability array."""
        return self._table

    def probability(self, state, parent_states=()):
        """Returns P(variable = state | parents = parent_states)."""
        return float(self._table[tuple(parent_states) + (state,)])

    def rows(self):
        """Returns the table as a 2D array, one row per parent configuration
        with the last parent varying fastest."""
        return self._table.reshape(-1, self.cardinality)

class DiscreteBayesNet:
    """A :class:`Dag` with one :class:`Cpt` per vertex and optional state
    names for every variable."""

    def __init__(self, dag, cpts, states=None):
        self._dag = dag
        self._cpts = {}
        for cpt in cpts.values() if isinstance(cpts, dict) else cpts:
            self._cpts[cpt.variable] = cpt

        cards = {}
        for v in dag.vertices:
            if v not in self._cpts:
                raise KeyError(f"Missing table for vertex {v}!")
            cpt = self._cpts[v]
            if cpt.parents != dag.parents(v):
                raise ValueError(f"Table parents {cpt.parents} of {v} differ from graph parents {dag.parents(v)}!")
            for w, k in cpt.cardinalities.items():
                if cards.setdefault(w, k) != k:
                    raise ValueError(f"Inconsistent cardinality for {w}: {cards[w]} and {k}!")
        extra = set(self._cpts) - set(dag.vertices)
        if extra:
            raise KeyError(f"Tables given for unknown vertices {sorted(extra)}!")
        self._cards = {v: cards[v] for v in dag.vertices}

        if states is None:
            states = {v: tuple(str(i) for i in range(k)) for v, k in self._cards.items()}
        self._states = {v: tuple(states[v]) for v in dag.vertices}
        for v, names in self._states.items():
            if len(names) != self._cards[v]:
                raise ValueError(f"Variable {v} has {self._cards[v]} categories but {len(names)} state names!")

    def __repr__(self):
        return f"DiscreteBayesNet({len(self.vertices)} vertices, {len(self._dag.edges)} edges)"

    @property
    def dag(self):
        return self._dag

    @property
    def vertices(self):
        return self._dag.vertices

    @property
    def cardinalities(self):
        """Returns the category counts of all variables in declared order."""
        return dict(self._cards)

    @property
    def states(self):
        """Returns the state names of all variables."""
        return dict(self._states)

    def cpt(self, v):
        try:
            return self._cpts[v]
        except KeyError:
            raise KeyError(f"Unknown vertex {v}!") from None

    @property
    def cpts(self):
        return dict(self._cpts)

    def state_space(self):
        """Returns the number of joint configurations."""
        return math.prod(self._cards.values())

class InterventionSpec:
    """Targets of one intervention together with, for every target, the retained
    parents and the replacement conditional table.

    An empty spec describes the unmanipulated (observational) regime.
    """

    def __init__(self, retained_parents=None, cpts=None):
        self._retained = {t: tuple(p) for t, p in (retained_parents or {}).items()}
        self._cpts = dict(cpts or {})
        if set(self._retained) != set(self._cpts):
            raise ValueError("Every target needs both a retained parent list and a replacement table!")
        for t, cpt in self._cpts.items():
            if cpt.variable != t or cpt.parents != self._retained[t]:
                raise ValueError(f"Replacement table {cpt} does not match target {t}!")

    def __repr__(self):
        return f"InterventionSpec(targets={sorted(self._retained)})"

    def __len__(self):
        return len(self._retained)

    @property
    def targets(self):
        """Returns the set of manipulated vertices."""
        return frozenset(self._retained)

    def retained_parents(self, t):
        return self._retained[t]

    def cpt(self, t):
        return self._cpts[t]

    def is_hard(self, t):
        return not self._retained[t]

    def validate(self, net):
        """Raises if the spec does not fit the network."""
        for t, retained in self._retained.items():
            if t not in net.cardinalities:
                raise KeyError(f"Intervention target {t} is not a vertex of the network!")
            if not set(retained) <= set(net.dag.parents(t)):
                raise ValueError(f"Retained parents {retained} of {t} are not a subset of {net.dag.parents(t)}!")
            if self._retained[t] != net.dag.sorted(retained):
                raise ValueError(f"Retained parents of {t} must follow the declared vertex order!")
            for v, k in self._cpts[t].cardinalities.items():
                if net.cardinalities[v] != k:
                    raise ValueError(f"Replacement table of {t} uses cardinality {k} for {v}!")

class JointTable:
    """Probability of every joint configuration of an ordered variable list,
    stored as an array with one axis per variable."""

    def __init__(self, variables, probabilities):
        self._variables = tuple(variables)
        probabilities = np.asarray(probabilities, dtype=float)
        if probabilities.ndim != len(self._variables):
            raise ValueError(f"Table has {probabilities.ndim} axes for {len(self._variables)} variables!")
        if np.any(probabilities < 0) or abs(probabilities.sum() - 1) > NORMALIZATION_TOLERANCE:
            raise ValueError("Joint probabilities must be non-negative and sum to 1!")
        probabilities.setflags(write=False)
        self._probabilities = probabilities
        self._axis = {v: i for i, v in enumerate(self._variables)}

    @property
    def variables(self):
        return self._variables

    @property
    def probabilities(self):
        return self._probabilities

    def axis(self, v):
        try:
            return self._axis[v]
        except KeyError:
            raise KeyError(f"Unknown variable {v}!") from None

    def __getitem__(self, assignment):
        return float(self._probabilities[tuple(assignment)])

class SampleTable:
    """Records drawn from one or more networks: one category index per variable
    per record, plus an optional intervention label per record."""

    def __init__(self, variables, data, cardinalities, labels=None, states=None):
        self._variables = tuple(variables)
        data = np.asarray(data, dtype=np.int64).reshape(-1, len(self._variables))
        self._cards = {v: int(cardinalities[v]) for v in self._variables}
        for i, v in enumerate(self._variables):
            column = data[:, i]
            if column.size and (column.min() < 0 or column.max() >= self._cards[v]):
                raise ValueError(f"Column {v} contains categories outside 0..{self._cards[v] - 1}!")
        data.setflags(write=False)
        self._data = data
        if labels is not None:
            labels = np.asarray(labels, dtype=np.int64)
            if labels.shape != (data.shape[0],):
                raise ValueError(f"Got {labels.shape[0]} labels for {data.shape[0]} records!")
            labels.setflags(write=False)
        self._labels = labels
        if states is None:
            states = {v: tuple(str(i) for i in range(k)) for v, k in self._cards.items()}
        self._states = {v: tuple(states[v]) for v in self._variables}
        self._column = {v: i for i, v in enumerate(self._variables)}

    def __len__(self):
        return self._data.shape[0]

    def __repr__(self):
        return f"SampleTable({len(self)} records, {len(self._variables)} variables)"

    @property
    def variables(self):
        return self._variables

    @property
    def data(self):
        """Returns the read-only records array of shape (records, variables)."""
        return self._data

    @property
    def cardinalities(self):
        return dict(self._cards)

    @property
    def labels(self):
        """Returns the intervention label of every record or None."""
        return self._labels

    @property
    def states(self):
        return dict(self._states)

    def column(self, v):
        """Returns the category indices of one variable."""
        try:
            return self._data[:, self._column[v]]
        except KeyError:
            raise KeyError(f"Unknown variable {v}!") from None

    def with_labels(self, label):
        """Returns a copy where every record carries the given label."""
        return SampleTable(self._variables, self._data, self._cards,
                           np.full(len(self), label, dtype=np.int64), self._states)

def _check_assignment(net, assignment):
    if isinstance(assignment, dict):
        missing = set(net.vertices) - set(assignment)
        if missing:
            raise KeyError(f"Assignment misses the vertices {sorted(missing)}!")
        assignment = [assignment[v] for v in net.vertices]
    assignment = tuple(int(a) for a in assignment)
    if len(assignment) != len(net.vertices):
        raise KeyError(f"Assignment has {len(assignment)} values for {len(net.vertices)} vertices!")
    for v, a in zip(net.vertices, assignment):
        if not 0 <= a < net.cardinalities[v]:
            raise ValueError(f"Category {a} of {v} is out of range!")
    return dict(zip(net.vertices, assignment))

def joint_probability(net, assignment):
    """Returns the probability of one full configuration, the product of the
    conditional probabilities of every vertex given its parents.

    :param net: The network.
    :type net: :class:`DiscreteBayesNet`
    :param assignment: Category index of every vertex, either in declared order
        or as a mapping.
    :raises KeyError: When the assignment does not cover all vertices.
    :raises ValueError: On an out-of-range category.
    :rtype: float
    """
    a = _check_assignment(net, assignment)
    p = 1.0
    for v in net.vertices:
        cpt = net.cpt(v)
        p *= cpt.probability(a[v], [a[u] for u in cpt.parents])
    return p

def enumerate_distribution(net, cap=ENUMERATION_CAP):
    """Returns the full joint distribution of a network as a :class:`JointTable`.

    :raises ValueError: When the number of configurations exceeds ``cap``.
    """
    if net.state_space() > cap:
        raise ValueError(f"State space of {net.state_space()} configurations exceeds the cap of {cap}!")
    if len(net.vertices) > 52:
        raise ValueError("Exact enumeration supports at most 52 variables!")
    axis = {v: i for i, v in enumerate(net.vertices)}
    operands = []
    for v in net.vertices:
        cpt = net.cpt(v)
        operands.append(cpt.table)
        operands.append([axis[u] for u in cpt.parents + (v,)])
    operands.append(list(range(len(net.vertices))))
    return JointTable(net.vertices, np.einsum(*operands))

def marginal(jt, variables):
    """Returns the marginal table of a subset of the variables, in the given order."""
    variables = tuple(variables)
    axes = [jt.axis(v) for v in variables]
    other = tuple(i for i in range(len(jt.variables)) if i not in axes)
    summed = jt.probabilities.sum(axis=other)
    remaining = [i for i in range(len(jt.variables)) if i in axes]
    order = [remaining.index(a) for a in axes]
    return JointTable(variables, np.transpose(summed, order))

def ci_exact(jt, x, y, s=(), eps=1e-9):
    """Decide conditional independence of x and y given s on an exact joint table.

    x and y may be single variables or collections of variables.

    :param jt: The joint distribution.
    :type jt: :class:`JointTable`
    :param eps: Tolerance on max |P(x,y|s) - P(x|s)P(y|s)|.
    :raises KeyError: On unknown variables.
    :raises ValueError: When the arguments overlap.
    :return: True when the largest deviation over strata with P(s) > 0 is
        at most eps.
    :rtype: bool
    """
    return ci_exact_deviation(jt, x, y, s) <= eps

def ci_exact_deviation(jt, x, y, s=()):
    """Returns max |P(x,y|s) - P(x|s)P(y|s)| over configurations with P(s) > 0,
    the dependence strength used by :func:`ci_exact`."""
    xs, ys, ss = _as_tuple(x), _as_tuple(y), _as_tuple(s)
    for v in xs + ys + ss:
        jt.axis(v)
    if set(xs) & set(ys) or (set(xs) | set(ys)) & set(ss):
        raise ValueError(f"Arguments {xs}, {ys} and {ss} must be disjoint!")
    if not xs or not ys:
        return 0.0

    table = marginal(jt, ss + xs + ys).probabilities
    ns, nx_ = len(ss), len(xs)
    table = table.reshape(math.prod(table.shape[:ns]),
                          math.prod(table.shape[ns:ns + nx_]),
                          math.prod(table.shape[ns + nx_:]))
    p_s = table.sum(axis=(1, 2))
    live = p_s > 0
    cond = table[live] / p_s[live][:, None, None]
    px = cond.sum(axis=2)
    py = cond.sum(axis=1)
    deviation = np.abs(cond - px[:, :, None] * py[:, None, :])
    return float(deviation.max()) if deviation.size else 0.0

def random_cpt(variable, parents, cardinalities, rng, dirichlet_alpha=1.0):
    """Draws every row of a table from a symmetric Dirichlet distribution."""
    if dirichlet_alpha <= 0:
        raise ValueError(f"Dirichlet concentration must be positive, got {dirichlet_alpha}!")
    k = cardinalities[variable]
    rows = math.prod(cardinalities[p] for p in parents)
    table = rng.dirichlet(np.full(k, float(dirichlet_alpha)), size=rows)
    # Guard against rounding so that rows sum to 1 within tolerance
    table = table / table.sum(axis=1, keepdims=True)
    return Cpt(variable, parents, cardinalities, table)

def random_net(dag, cardinalities, rng, dirichlet_alpha=1.0):
    """Returns a network over dag whose tables are drawn row-wise from a
    symmetric Dirichlet. Cardinalities may be an int for all vertices."""
    if isinstance(cardinalities, int):
        cardinalities = {v: cardinalities for v in dag.vertices}
    return DiscreteBayesNet(dag, [random_cpt(v, dag.parents(v), cardinalities, rng, dirichlet_alpha)
                                  for v in dag.vertices])

def generate_intervention_spec(net, targets, cut_prob=0.5, dirichlet_alpha=1.0, rng=None):
    """Draw an intervention on the given targets.

    Every edge into a target is deleted independently with probability
    ``cut_prob``; the replacement table over the retained parents is drawn
    row-wise from a symmetric Dirichlet with all parameters ``dirichlet_alpha``.

    :param net: The base network.
    :type net: :class:`DiscreteBayesNet`
    :param targets: Vertices to manipulate.
    :param cut_prob: Probability of deleting each incoming edge of a target.
    :type cut_prob: float
    :param dirichlet_alpha: Concentration of the symmetric Dirichlet.
    :type dirichlet_alpha: float
    :param rng: Seeded generator owned by the caller.
    :type rng: :class:`numpy.random.Generator`
    :raises KeyError: On an unknown target.
    :raises ValueError: When cut_prob is outside [0, 1].
    :rtype: :class:`InterventionSpec`
    """
    if not 0 <= cut_prob <= 1:
        raise ValueError(f"Cut probability must lie in [0, 1], got {cut_prob}!")
    if rng is None:
        raise ValueError("An explicit random generator is required!")
    targets = net.dag.sorted(_checked_targets(net, targets))
    retained, cpts = {}, {}
    for t in targets:
        parents = tuple(p for p in net.dag.parents(t) if rng.random() >= cut_prob)
        retained[t] = parents
        cpts[t] = random_cpt(t, parents, net.cardinalities, rng, dirichlet_alpha)
    return InterventionSpec(retained, cpts)

def _checked_targets(net, targets):
    targets = _as_tuple(targets)
    for t in targets:
        if t not in net.cardinalities:
            raise KeyError(f"Intervention target {t} is not a vertex of the network!")
    return targets

def apply_intervention(net, spec):
    """Returns the post-intervention network: edges into every target reduced
    to its retained parents and the target tables replaced. Tables of the
    other vertices are shared with the base network.

    :raises KeyError: On targets outside the network.
    :raises ValueError: On retained parents that are not parents in the network.
    :rtype: :class:`DiscreteBayesNet`
    """
    spec.validate(net)
    if not len(spec):
        return net
    cpts = {v: spec.cpt(v) if v in spec.targets else net.cpt(v) for v in net.vertices}
    return DiscreteBayesNet(intervene_dag(net.dag, spec), cpts, net.states)

def intervene_dag(dag, spec):
    """Returns the post-intervention graph: every edge into a target whose tail
    is not a retained parent is removed."""
    for t in spec.targets:
        if not set(spec.retained_parents(t)) <= set(dag.parents(t)):
            raise ValueError(f"Retained parents {spec.retained_parents(t)} of {t} are not parents in the graph!")
    edges = [(u, v) for u, v in dag.edges
             if v not in spec.targets or u in spec.retained_parents(v)]
    return Dag(dag.vertices, edges)

def sample(net, n, rng, label=None):
    """Draw n records by ancestral sampling in topological order.

    :param net: The network.
    :type net: :class:`DiscreteBayesNet`
    :param n: Number of records.
    :type n: int
    :param rng: Seeded generator owned by the caller.
    :type rng: :class:`numpy.random.Generator`
    :param label: Optional intervention label stored with every record.
    :type label: int, optional
    :rtype: :class:`SampleTable`
    """
    if n < 0:
        raise ValueError(f"Record count must be non-negative, got {n}!")
    data = np.zeros((n, len(net.vertices)), dtype=np.int64)
    column = {v: i for i, v in enumerate(net.vertices)}
    for v in topological_order(net.dag):
        cpt = net.cpt(v)
        rows = cpt.rows()
        if cpt.parents:
            config = np.ravel_multi_index(tuple(data[:, column[p]] for p in cpt.parents),
                                          tuple(net.cardinalities[p] for p in cpt.parents))
        else:
            config = np.zeros(n, dtype=np.int64)
        cumulative = np.cumsum(rows, axis=1)[config]
        u = rng.random(n)
        data[:, column[v]] = np.minimum((u[:, None] >= cumulative).sum(axis=1), cpt.cardinality - 1)
    labels = None if label is None else np.full(n, label, dtype=np.int64)
    return SampleTable(net.vertices, data, net.cardinalities, labels, net.states)

def mixture(nets, weights, cap=ENUMERATION_CAP):
    """Returns the weighted mixture sum_j w_j P_j of the joint distributions of
    several networks over the same variables.

    :raises ValueError: On mismatching counts, invalid weights or networks
        over different variables, or when the state space exceeds ``cap``.
    :rtype: :class:`JointTable`
    """
    nets = list(nets)
    weights = np.asarray(weights, dtype=float)
    if len(nets) != weights.size or not nets:
        raise ValueError(f"Got {weights.size} weights for {len(nets)} networks!")
    if np.any(weights <= 0) or abs(weights.sum() - 1) > NORMALIZATION_TOLERANCE:
        raise ValueError("Mixture weights must be positive and sum to 1!")
    for other in nets[1:]:
        if other.vertices != nets[0].vertices or other.cardinalities != nets[0].cardinalities:
            raise ValueError("Mixed networks must share vertices and cardinalities!")
    total = sum(w * enumerate_distribution(net, cap).probabilities for w, net in zip(weights, nets))
    return JointTable(nets[0].vertices, total / total.sum())

def allocate_counts(weights, total, rng=None, multinomial=False):
    """Returns the record count of every intervention. With ``multinomial`` the
    counts are drawn from Multinomial(total, weights), otherwise they are the
    rounded proportional shares (equal weights give equal counts)."""
    weights = np.asarray(weights, dtype=float)
    weights = weights / weights.sum()
    if multinomial:
        if rng is None:
            raise ValueError("Multinomial allocation needs a random generator!")
        return [int(c) for c in rng.multinomial(total, weights)]
    counts = np.floor(weights * total).astype(int)
    # Distribute the remainder by declared order
    for i in range(total - counts.sum()):
        counts[i % counts.size] += 1
    return [int(c) for c in counts]

def observational_vertices(specs, vertices):
    """Returns the vertices that are not a target of any intervention, in
    the given order."""
    manipulated = frozenset().union(*(s.targets for s in specs)) if specs else frozenset()
    return tuple(v for v in vertices if v not in manipulated)

def is_conservative(specs, vertices):
    """True when every vertex is left untouched by at least one intervention."""
    return all(any(v not in s.targets for s in specs) for v in vertices)

def all_configurations(net):
    """Iterates over all joint configurations in declared order."""
    return itertools.product(*(range(net.cardinalities[v]) for v in net.vertices))
