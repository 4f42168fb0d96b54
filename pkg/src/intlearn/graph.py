"""
Directed acyclic graphs and the learned skeleton-plus-v-structure patterns.
Provides d-separation (two independent implementations), skeletons,
v-structures and the Markov-equivalence utilities used by the learners.
"""
import itertools
import logging
from collections import deque

import networkx as nx

logger = logging.getLogger(__name__)

class Dag:
    """Directed acyclic graph over an ordered list of vertices. The declared
    vertex order is used for every tie-break in the package."""

    def __init__(self, vertices, edges):
        """Builds the graph and validates it. Use :func:`build_dag` instead of
        calling the constructor directly."""
        self._vertices = tuple(vertices)
        self._index = {v: i for i, v in enumerate(self._vertices)}
        if len(self._index) != len(self._vertices):
            raise ValueError("Duplicate vertex in vertex list!")

        edge_list = [tuple(e) for e in edges]
        edge_set = frozenset(edge_list)
        if len(edge_set) != len(edge_list):
            dup = [e for e in edge_list if edge_list.count(e) > 1][0]
            raise ValueError(f"Duplicate edge {dup[0]}->{dup[1]}!")
        for u, v in edge_list:
            for w in (u, v):
                if w not in self._index:
                    raise KeyError(f"Edge {u}->{v} references unknown vertex {w}!")
            if u == v:
                raise ValueError(f"Self-loop on vertex {u}!")

        self._edges = edge_set
        self._parents = {v: [] for v in self._vertices}
        self._children = {v: [] for v in self._vertices}
        for u, v in sorted(edge_list, key=self._edge_key):
            self._parents[v].append(u)
            self._children[u].append(v)
        self._parents = {v: tuple(p) for v, p in self._parents.items()}
        self._children = {v: tuple(c) for v, c in self._children.items()}

        self._nx = nx.DiGraph()
        self._nx.add_nodes_from(self._vertices)
        self._nx.add_edges_from(edge_list)
        if not nx.is_directed_acyclic_graph(self._nx):
            cycle = nx.find_cycle(self._nx)
            path = '->'.join([str(u) for u, _ in cycle] + [str(cycle[0][0])])
            raise ValueError(f"Edge set contains the directed cycle {path}!")

        self._order = tuple(nx.lexicographical_topological_sort(self._nx, key=self._index.get))

    def _edge_key(self, edge):
        return (self._index[edge[0]], self._index[edge[1]])

    def __eq__(self, other):
        return isinstance(other, Dag) and self._vertices == other._vertices and self._edges == other._edges

    def __hash__(self):
        return hash((self._vertices, self._edges))

    def __repr__(self):
        return f"Dag({len(self._vertices)} vertices, {len(self._edges)} edges)"

    @property
    def vertices(self):
        """Returns the vertices in declared order."""
        return self._vertices

    @property
    def edges(self):
        """Returns the directed edges as a frozenset of (from, to) pairs."""
        return self._edges

    def index(self, v):
        """Returns the position of a vertex in the declared order."""
        try:
            return self._index[v]
        except KeyError:
            raise KeyError(f"Unknown vertex {v}!") from None

    def check(self, *vertices):
        """Raises a KeyError for the first unknown vertex."""
        for v in vertices:
            self.index(v)

    def parents(self, v):
        """Returns the parents of a vertex in declared order."""
        self.check(v)
        return self._parents[v]

    def children(self, v):
        """Returns the children of a vertex in declared order."""
        self.check(v)
        return self._children[v]

    def has_edge(self, u, v):
        return (u, v) in self._edges

    def adjacent(self, u, v):
        return (u, v) in self._edges or (v, u) in self._edges

    def sorted(self, vertices):
        """Sorts a collection of vertices by declared order."""
        return tuple(sorted(vertices, key=self.index))

    def to_networkx(self):
        """Returns a copy of the graph as a :class:`networkx.DiGraph`."""
        return self._nx.copy()

class PatternGraph:
    """Skeleton plus v-structures: the object every learner returns.

    Skeleton edges are unordered pairs stored as tuples ordered by the declared
    vertex order. A v-structure ``(a, c, b)`` means ``a -> c <- b`` and is
    stored with ``a`` before ``b``.
    """

    def __init__(self, vertices, skeleton_edges=(), v_structures=(), added_edges=()):
        self._vertices = tuple(vertices)
        self._index = {v: i for i, v in enumerate(self._vertices)}
        self._skeleton = frozenset(self.pair(u, v) for u, v in skeleton_edges)
        self._v_structures = frozenset(self.triple(a, c, b) for a, c, b in v_structures)
        self._added = frozenset(self.pair(u, v) for u, v in added_edges)

        for u, v in self._skeleton:
            if u == v:
                raise ValueError(f"Self-loop on vertex {u}!")
        for a, c, b in self._v_structures:
            if (self.pair(a, c) not in self._skeleton) or (self.pair(b, c) not in self._skeleton):
                raise ValueError(f"V-structure {a}->{c}<-{b} is not supported by the skeleton!")
            if self.pair(a, b) in self._skeleton:
                raise ValueError(f"V-structure {a}->{c}<-{b} is shielded by edge {a}-{b}!")
        if not self._added <= self._skeleton:
            raise ValueError("Added edges must be part of the skeleton!")

    def _pos(self, v):
        try:
            return self._index[v]
        except KeyError:
            raise KeyError(f"Unknown vertex {v}!") from None

    def pair(self, u, v):
        """Returns the canonical form of the unordered pair {u, v}."""
        return (u, v) if self._pos(u) <= self._pos(v) else (v, u)

    def triple(self, a, c, b):
        """Returns the canonical form of the v-structure a -> c <- b."""
        self._pos(c)
        return (a, c, b) if self._pos(a) <= self._pos(b) else (b, c, a)

    def __eq__(self, other):
        return (isinstance(other, PatternGraph) and self._vertices == other._vertices
                and self._skeleton == other._skeleton and self._v_structures == other._v_structures)

    def __hash__(self):
        return hash((self._vertices, self._skeleton, self._v_structures))

    def __repr__(self):
        return (f"PatternGraph({len(self._vertices)} vertices, {len(self._skeleton)} edges, "
                f"{len(self._v_structures)} v-structures)")

    @property
    def vertices(self):
        return self._vertices

    @property
    def skeleton_edges(self):
        """Returns the undirected skeleton as a frozenset of canonical pairs."""
        return self._skeleton

    @property
    def v_structures(self):
        """Returns the v-structures as a frozenset of canonical triples."""
        return self._v_structures

    @property
    def added_edges(self):
        """Returns the skeleton edges added by re-sampling augmentation. These
        edges carry no orientation."""
        return self._added

    @property
    def arrows(self):
        """Returns the set of directed edges implied by the v-structures."""
        return v_structure_arrows(self._v_structures)

    def adjacent(self, u, v):
        return self.pair(u, v) in self._skeleton

    def neighbours(self, v):
        """Returns the skeleton neighbours of a vertex in declared order."""
        self._pos(v)
        nbrs = [u for e in self._skeleton for u in e if v in e and u != v]
        return tuple(sorted(nbrs, key=self._pos))

    def sorted_edges(self):
        """Returns the skeleton edges sorted by declared order."""
        return sorted(self._skeleton, key=lambda e: (self._pos(e[0]), self._pos(e[1])))

    def sorted_v_structures(self):
        """Returns the v-structures sorted by declared order."""
        return sorted(self._v_structures, key=lambda t: tuple(self._pos(v) for v in t))

def build_dag(vertices, edges):
    """Build a :class:`Dag` from a vertex list and a list of (from, to) pairs.

    :param vertices: Vertex identifiers in declared order.
    :type vertices: Sequence[str]
    :param edges: Directed edges.
    :type edges: Iterable[Tuple[str, str]]
    :raises ValueError: On a directed cycle, duplicate edge or self-loop.
    :raises KeyError: On an edge endpoint that is not a declared vertex.
    :return: The validated graph.
    :rtype: :class:`Dag`
    """
    return Dag(vertices, edges)

def topological_order(g):
    """Returns the vertices so that every parent precedes its children. Ties are
    broken by declared vertex order, so the result is deterministic."""
    return g._order

def descendants(g, x):
    """Returns the set of vertices reachable from x by a directed path,
    excluding x itself."""
    g.check(x)
    return frozenset(nx.descendants(g._nx, x))

def non_descendants(g, x):
    """Returns all vertices that are neither x nor one of its descendants."""
    return frozenset(g.vertices) - descendants(g, x) - {x}

def ancestors(g, vertices):
    """Returns the given vertices together with all of their ancestors."""
    result = set()
    stack = list(vertices)
    while stack:
        v = stack.pop()
        if v not in result:
            result.add(v)
            stack.extend(g.parents(v))
    return frozenset(result)

def _check_separation_args(g, x, y, s):
    s = frozenset(s)
    g.check(x, y, *s)
    if x == y:
        raise ValueError(f"Cannot test separation of vertex {x} from itself!")
    if x in s or y in s:
        raise ValueError(f"Conditioning set {sorted(s)} overlaps the tested pair {x}, {y}!")
    return s

def d_separated(g, x, y, s):
    """Decide whether the set s d-separates x and y in g.

    Reachability over (vertex, direction) states: a trail may leave a vertex
    towards its parents only when it arrived from a child, or when the vertex
    is an ancestor of s (an opened collider).

    :param g: The graph.
    :type g: :class:`Dag`
    :param x: First vertex.
    :param y: Second vertex.
    :param s: Conditioning set, must not contain x or y.
    :raises KeyError: On unknown vertices.
    :raises ValueError: When x equals y or s contains x or y.
    :return: True when every trail between x and y is blocked by s.
    :rtype: bool
    """
    s = _check_separation_args(g, x, y, s)
    opened = ancestors(g, s)

    queue = deque([(x, 'up')])
    visited = set()
    while queue:
        v, direction = queue.popleft()
        if (v, direction) in visited:
            continue
        visited.add((v, direction))
        if v == y:
            return False

        if direction == 'up':
            # Arrived from a child (or start)
            if v not in s:
                queue.extend((p, 'up') for p in g.parents(v))
                queue.extend((c, 'down') for c in g.children(v))
        else:
            # Arrived from a parent
            if v not in s:
                queue.extend((c, 'down') for c in g.children(v))
            if v in opened:
                queue.extend((p, 'up') for p in g.parents(v))

    return True

def d_separated_moral(g, x, y, s):
    """Decide d-separation by the moral ancestral graph criterion: x and y are
    d-separated by s iff they are disconnected in the moralised subgraph
    induced by the ancestors of {x, y} and s, once s is removed."""
    s = _check_separation_args(g, x, y, s)
    keep = ancestors(g, {x, y} | s)
    moral = nx.moral_graph(g._nx.subgraph(keep))
    moral.remove_nodes_from(s)
    return not nx.has_path(moral, x, y)

def skeleton_of(g):
    """Returns the undirected skeleton of g as canonical pairs."""
    return frozenset((u, v) if g.index(u) < g.index(v) else (v, u) for u, v in g.edges)

def v_structures_of(g):
    """Returns all unshielded colliders a -> c <- b of g as canonical triples."""
    result = set()
    for c in g.vertices:
        for a, b in itertools.combinations(g.parents(c), 2):
            if not g.adjacent(a, b):
                result.add((a, c, b) if g.index(a) < g.index(b) else (b, c, a))
    return frozenset(result)

def pattern_of(g):
    """Returns the skeleton and v-structures of g, i.e. the representation of
    its Markov equivalence class used throughout the package.

    :param g: The graph.
    :type g: :class:`Dag`
    :rtype: :class:`PatternGraph`
    """
    return PatternGraph(g.vertices, skeleton_of(g), v_structures_of(g))

def v_structure_arrows(v_structures):
    """Returns the set of arrows (a, c) and (b, c) of a set of v-structures."""
    arrows = set()
    for a, c, b in v_structures:
        arrows.add((a, c))
        arrows.add((b, c))
    return frozenset(arrows)

def find_conflicts(v_structures):
    """Returns the v-structures that contribute an arrow u -> w while another
    v-structure contributes w -> u."""
    v_structures = frozenset(v_structures)
    arrows = v_structure_arrows(v_structures)
    conflicting = {(u, w) for u, w in arrows if (w, u) in arrows}
    return frozenset(t for t in v_structures
                     if (t[0], t[1]) in conflicting or (t[2], t[1]) in conflicting)

def merge_patterns_with_conflicts(patterns):
    """Merge patterns as :func:`merge_patterns` does and also return the set of
    v-structures removed because of conflicting arrows."""
    patterns = list(patterns)
    if not patterns:
        raise ValueError("Cannot merge an empty list of patterns!")
    vertices = patterns[0].vertices
    for p in patterns[1:]:
        if p.vertices != vertices:
            raise ValueError(f"Cannot merge patterns over different vertex lists {vertices} and {p.vertices}!")

    skeleton = frozenset().union(*(p.skeleton_edges for p in patterns))
    added = frozenset().union(*(p.added_edges for p in patterns))
    union = frozenset().union(*(p.v_structures for p in patterns))

    # A v-structure of one pattern can be shielded by an edge of another one
    unshielded = frozenset(t for t in union if patterns[0].pair(t[0], t[2]) not in skeleton)
    conflicts = find_conflicts(unshielded)
    if conflicts:
        logger.warning("Removing %d conflicting v-structures: %s", len(conflicts),
                       ', '.join(f"{a}->{c}<-{b}" for a, c, b in sorted(conflicts)))

    merged = PatternGraph(vertices, skeleton, unshielded - conflicts, added)
    return merged, conflicts

def merge_patterns(patterns):
    """Merge patterns learned over the same vertices.

    The skeleton is the union of the skeletons and the v-structures are the
    union of the v-structure sets. United v-structures that became shielded
    are dropped, and all v-structures contributing either arrow of a pair
    u -> w, w -> u are removed and logged.

    :param patterns: Patterns sharing one vertex list.
    :type patterns: Iterable[:class:`PatternGraph`]
    :raises ValueError: On an empty list or mismatching vertex lists.
    :rtype: :class:`PatternGraph`
    """
    return merge_patterns_with_conflicts(patterns)[0]

def restrict(pattern, vertices):
    """Returns the sub-pattern over the given vertices: edges with both ends
    inside and v-structures with all three vertices inside."""
    keep = frozenset(vertices)
    order = [v for v in pattern.vertices if v in keep]
    return PatternGraph(order,
                        [e for e in pattern.skeleton_edges if set(e) <= keep],
                        [t for t in pattern.v_structures if set(t) <= keep])

def is_covered_edge(g, u, v):
    """An edge u -> v is covered when pa(v) = pa(u) + {u}."""
    return g.has_edge(u, v) and set(g.parents(v)) == set(g.parents(u)) | {u}

def reverse_covered_edge(g, u, v):
    """Returns the graph with the covered edge u -> v reversed. The result is
    Markov equivalent to g."""
    if not is_covered_edge(g, u, v):
        raise ValueError(f"Edge {u}->{v} is not a covered edge!")
    edges = [e for e in g.edges if e != (u, v)] + [(v, u)]
    return Dag(g.vertices, edges)

def random_dag(n, edge_prob, rng, prefix='x'):
    """Draw a random graph with vertices ``x1..xn``; every pair i < j carries
    the edge xi -> xj independently with probability edge_prob."""
    vertices = [f"{prefix}{i + 1}" for i in range(n)]
    edges = [(vertices[i], vertices[j]) for i, j in itertools.combinations(range(n), 2)
             if rng.random() < edge_prob]
    return Dag(vertices, edges)
