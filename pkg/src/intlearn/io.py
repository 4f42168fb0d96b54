"""
Readers and writers: a parser for the discrete subset of the BIF network
format, CSV sample tables, JSON learner reports and JSON intervention specs.
"""
import io
import itertools
import json
import re

import numpy as np
import pandas as pd

from intlearn.bayesnet import Cpt, DiscreteBayesNet, InterventionSpec, SampleTable
from intlearn.graph import Dag, PatternGraph
from intlearn.metrics import COUNTS, Metrics
from intlearn.pool import EdgeFrequencyReport

SCHEMA_VERSION = 1
LABEL_COLUMN = '__intervention'
ROW_TOLERANCE = 1e-6

class BifSyntaxError(ValueError):
    """Malformed BIF input, raised with the position of the offending token."""

    def __init__(self, message, line, column):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column

_TOKEN = re.compile(r'''
    (?P<space>\s+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<string>"[^"]*")
  | (?P<punct>[{}()\[\],;|])
  | (?P<word>[^\s{}()\[\],;|"]+)
''', re.VERBOSE | re.DOTALL)

def _tokenize(text):
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None:
            raise BifSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        if kind not in ('space', 'comment'):
            tokens.append((match.group(), line, pos - line_start + 1))
        newlines = match.group().count('\n')
        if newlines:
            line += newlines
            line_start = match.start() + match.group().rindex('\n') + 1
        pos = match.end()
    return tokens

class _Parser:
    """Recursive descent over the token list."""

    def __init__(self, text):
        self._tokens = _tokenize(text)
        self._pos = 0

    def peek(self):
        if self._pos < len(self._tokens):
            return self._tokens[self._pos][0]
        return None

    def error(self, message):
        if self._pos < len(self._tokens):
            _, line, column = self._tokens[self._pos]
        elif self._tokens:
            _, line, column = self._tokens[-1]
        else:
            line, column = 1, 1
        return BifSyntaxError(message, line, column)

    def next(self):
        if self._pos >= len(self._tokens):
            raise self.error("unexpected end of input")
        token = self._tokens[self._pos][0]
        self._pos += 1
        return token

    def expect(self, value):
        if self.peek() != value:
            raise self.error(f"expected {value!r}, got {self.peek()!r}")
        return self.next()

    def word(self):
        token = self.peek()
        if token is None or token in '{}()[],;|' or token.startswith('"'):
            raise self.error(f"expected a name, got {token!r}")
        return self.next()

    def label(self):
        """A name or a quoted string, returned without the quotes."""
        token = self.peek()
        if token is not None and token.startswith('"'):
            return self.next()[1:-1]
        return self.word()

    def number(self):
        token = self.peek()
        try:
            value = float(token)
        except (TypeError, ValueError):
            raise self.error(f"expected a number, got {token!r}") from None
        self.next()
        return value

    def skip_property(self):
        self.expect('property')
        while self.peek() != ';':
            self.next()
        self.expect(';')

    def names(self, close):
        """Comma separated names up to the closing token."""
        names = [self.word()]
        while self.peek() == ',':
            self.next()
            names.append(self.word())
        self.expect(close)
        return names

    def numbers(self):
        """Comma separated numbers up to a semicolon."""
        values = [self.number()]
        while self.peek() == ',':
            self.next()
            values.append(self.number())
        self.expect(';')
        return values

def _check_row(parser, variable, row):
    row = np.asarray(row, dtype=float)
    if np.any(row < 0):
        raise parser.error(f"negative probability in table of {variable}")
    total = row.sum()
    if abs(total - 1) > ROW_TOLERANCE:
        raise parser.error(f"probabilities of {variable} sum to {total:g}, not 1")
    return row / total

def parse_bif(text):
    """Parse a discrete Bayesian network from BIF text.

    Supported are ``network`` blocks, ``variable`` blocks with
    ``type discrete [k] { states };`` and ``probability ( child | parents )``
    blocks holding either a flat ``table`` or one row per parent
    configuration. Properties are accepted and ignored. A flat table for a
    variable with parents lists the child state slowest and the last parent
    fastest.

    :param text: The file contents.
    :type text: str
    :raises BifSyntaxError: On malformed input, unknown references, rows not
        summing to 1 within 1e-6 or missing tables.
    :raises ValueError: When the parents form a directed cycle.
    :rtype: :class:`intlearn.bayesnet.DiscreteBayesNet`
    """
    p = _Parser(text)
    states = {}
    probabilities = {}

    while p.peek() is not None:
        keyword = p.word()
        if keyword == 'network':
            if p.peek() != '{':
                p.label()
            p.expect('{')
            while p.peek() == 'property':
                p.skip_property()
            p.expect('}')
        elif keyword == 'variable':
            name = p.word()
            if name in states:
                raise p.error(f"variable {name} declared twice")
            p.expect('{')
            while p.peek() == 'property':
                p.skip_property()
            p.expect('type')
            if p.peek() != 'discrete':
                raise p.error(f"only discrete variables are supported, got {p.peek()!r}")
            p.next()
            p.expect('[')
            k = p.number()
            p.expect(']')
            p.expect('{')
            names = p.names('}')
            p.expect(';')
            if len(names) != k:
                raise p.error(f"variable {name} declares {int(k)} states but lists {len(names)}")
            if len(set(names)) != len(names):
                raise p.error(f"variable {name} has duplicate state names")
            while p.peek() == 'property':
                p.skip_property()
            p.expect('}')
            states[name] = tuple(names)
        elif keyword == 'probability':
            p.expect('(')
            child = p.word()
            parents = []
            if p.peek() == '|':
                p.next()
                parents = p.names(')')
            else:
                p.expect(')')
            for v in [child] + parents:
                if v not in states:
                    raise p.error(f"unknown variable {v}")
            if child in probabilities:
                raise p.error(f"second probability block for {child}")
            probabilities[child] = (parents, _parse_probability_body(p, child, parents, states))
        else:
            raise p.error(f"unexpected keyword {keyword!r}")

    for v in states:
        if v not in probabilities:
            raise p.error(f"no probability block for variable {v}")

    vertices = list(states)
    edges = [(u, v) for v, (parents, _) in probabilities.items() for u in parents]
    dag = Dag(vertices, edges)
    cards = {v: len(s) for v, s in states.items()}
    cpts = []
    for v in vertices:
        parents, table = probabilities[v]
        declared = dag.parents(v)
        order = [parents.index(u) for u in declared] + [len(parents)]
        cpts.append(Cpt(v, declared, cards, np.transpose(table, order)))
    return DiscreteBayesNet(dag, cpts, states)

def _parse_probability_body(p, child, parents, states):
    k = len(states[child])
    shape = tuple(len(states[u]) for u in parents) + (k,)
    table = np.full(shape, np.nan)
    p.expect('{')
    while p.peek() != '}':
        if p.peek() == 'property':
            p.skip_property()
        elif p.peek() == 'table':
            p.next()
            values = p.numbers()
            if len(values) != table.size:
                raise p.error(f"table of {child} has {len(values)} entries, expected {table.size}")
            flat = np.moveaxis(np.asarray(values).reshape((k,) + shape[:-1]), 0, -1)
            for config in itertools.product(*(range(n) for n in shape[:-1])):
                table[config] = _check_row(p, child, flat[config])
        elif p.peek() == '(':
            p.next()
            config = p.names(')')
            if len(config) != len(parents):
                raise p.error(f"row of {child} names {len(config)} parent states, expected {len(parents)}")
            index = []
            for u, s in zip(parents, config):
                if s not in states[u]:
                    raise p.error(f"unknown state {s} of {u}")
                index.append(states[u].index(s))
            values = p.numbers()
            if len(values) != k:
                raise p.error(f"row of {child} has {len(values)} entries, expected {k}")
            table[tuple(index)] = _check_row(p, child, values)
        else:
            raise p.error(f"unexpected token {p.peek()!r} in probability block of {child}")
    p.expect('}')
    if np.isnan(table).any():
        raise p.error(f"table of {child} misses parent configurations")
    return table

def _fmt(x):
    return repr(float(x))

def write_bif(net, name='unknown'):
    """Serialize a network to BIF text that :func:`parse_bif` reads back into
    an equal network."""
    lines = [f"network {name} {{", "}"]
    for v in net.vertices:
        names = net.states[v]
        lines.append(f"variable {v} {{")
        lines.append(f"  type discrete [ {len(names)} ] {{ {', '.join(names)} }};")
        lines.append("}")
    for v in net.vertices:
        cpt = net.cpt(v)
        if not cpt.parents:
            lines.append(f"probability ( {v} ) {{")
            lines.append(f"  table {', '.join(_fmt(x) for x in cpt.rows()[0])};")
        else:
            lines.append(f"probability ( {v} | {', '.join(cpt.parents)} ) {{")
            configs = itertools.product(*(range(net.cardinalities[u]) for u in cpt.parents))
            for config, row in zip(configs, cpt.rows()):
                labels = ', '.join(net.states[u][i] for u, i in zip(cpt.parents, config))
                lines.append(f"  ({labels}) {', '.join(_fmt(x) for x in row)};")
        lines.append("}")
    return '\n'.join(lines) + '\n'

def write_samples(table):
    """Returns the records as CSV text with state names, plus an
    ``__intervention`` column when the records carry labels."""
    frame = pd.DataFrame({v: np.asarray(table.states[v], dtype=object)[table.column(v)]
                          for v in table.variables})
    if table.labels is not None:
        frame[LABEL_COLUMN] = table.labels
    return frame.to_csv(index=False, lineterminator='\n')

def _read_frame(text):
    return pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)

def infer_states(texts):
    """Returns sorted state names per variable, collected over several CSV
    texts with the same header."""
    seen = {}
    for text in texts:
        frame = _read_frame(text)
        for v in frame.columns:
            if v != LABEL_COLUMN:
                seen.setdefault(v, set()).update(frame[v])
    return {v: tuple(sorted(s)) for v, s in seen.items()}

def read_samples(text, net=None, states=None):
    """Parse CSV text into a sample table.

    With a network the columns must be exactly its variables and categories
    follow its state declaration order. Otherwise state names are taken from
    ``states`` or inferred per column in sorted order.

    :raises ValueError: On a column mismatch or an unknown state name.
    :rtype: :class:`intlearn.bayesnet.SampleTable`
    """
    frame = _read_frame(text)
    columns = [c for c in frame.columns if c != LABEL_COLUMN]
    if net is not None:
        if sorted(columns) != sorted(net.vertices):
            raise ValueError(f"CSV columns {columns} do not match the network variables {list(net.vertices)}!")
        variables = net.vertices
        states = net.states
    else:
        variables = tuple(columns)
        if states is None:
            states = infer_states([text])
    for v in variables:
        if v not in states:
            raise ValueError(f"No state names known for column {v}!")

    data = np.zeros((len(frame), len(variables)), dtype=np.int64)
    for i, v in enumerate(variables):
        index = {s: j for j, s in enumerate(states[v])}
        codes = frame[v].map(index)
        if codes.isna().any():
            row = int(np.flatnonzero(codes.isna().to_numpy())[0])
            raise ValueError(f"Unknown state {frame[v].iloc[row]!r} in row {row + 1}, column {v}!")
        data[:, i] = codes.to_numpy(dtype=np.int64)
    labels = None
    if LABEL_COLUMN in frame.columns:
        try:
            labels = frame[LABEL_COLUMN].astype(np.int64).to_numpy()
        except ValueError:
            raise ValueError(f"Column {LABEL_COLUMN} must hold integers!") from None
    cards = {v: len(states[v]) for v in variables}
    return SampleTable(variables, data, cards, labels, {v: states[v] for v in variables})

def report_dict(pattern=None, metrics=None, frequencies=None, config_echo=None, seed=None):
    """Returns the JSON-ready report mapping of :func:`write_report`."""
    result = {
        'schema_version': SCHEMA_VERSION,
        'vertices': None,
        'skeleton': [],
        'v_structures': [],
        'added_edges': [],
        'frequencies': None,
        'metrics': None if metrics is None else metrics.as_dict(),
        'config_echo': config_echo,
        'seed': seed,
    }
    if pattern is not None:
        order = {v: i for i, v in enumerate(pattern.vertices)}
        result['vertices'] = list(pattern.vertices)
        result['skeleton'] = [list(e) for e in pattern.sorted_edges()]
        result['v_structures'] = [list(t) for t in pattern.sorted_v_structures()]
        result['added_edges'] = [list(e) for e in sorted(pattern.added_edges,
                                                         key=lambda e: (order[e[0]], order[e[1]]))]
    if frequencies is not None:
        order = {v: i for i, v in enumerate(frequencies.vertices)}
        edges = sorted(frequencies.freq, key=lambda e: (order[e[0]], order[e[1]]))
        result['vertices'] = list(frequencies.vertices)
        result['frequencies'] = {
            'k_runs': frequencies.k_runs,
            'subset_size': frequencies.subset_size,
            'drawn_subsets': [list(s) for s in frequencies.drawn_subsets],
            'meta_edges': [list(e) for e in edges if e in frequencies.meta_edges],
            'edges': [[e[0], e[1], frequencies.freq[e]] for e in edges],
        }
    return result

def write_report(pattern=None, metrics=None, frequencies=None, config_echo=None, seed=None):
    """Serialize a learned pattern, its metrics and re-sampling frequencies to
    JSON text with sorted keys.

    :rtype: str
    """
    return json.dumps(report_dict(pattern, metrics, frequencies, config_echo, seed),
                      sort_keys=True, indent=2) + '\n'

def read_report(text):
    """Parse JSON text written by :func:`write_report`.

    :return: Mapping with the keys ``pattern``, ``metrics``, ``frequencies``,
        ``config_echo`` and ``seed``, holding objects or None.
    :rtype: dict
    """
    raw = json.loads(text)
    if raw.get('schema_version') != SCHEMA_VERSION:
        raise ValueError(f"Unsupported report schema version {raw.get('schema_version')!r}!")
    vertices = raw.get('vertices')
    pattern = None
    if vertices is not None:
        pattern = PatternGraph(vertices, raw['skeleton'], raw['v_structures'], raw.get('added_edges', ()))
    metrics = None
    if raw.get('metrics') is not None:
        metrics = Metrics(**{k: int(raw['metrics'][k]) for k in COUNTS})
    frequencies = None
    if raw.get('frequencies') is not None:
        f = raw['frequencies']
        freq = {(u, v): int(c) for u, v, c in f['edges']}
        frequencies = EdgeFrequencyReport(
            tuple(vertices), int(f['k_runs']), int(f['subset_size']),
            tuple(tuple(s) for s in f['drawn_subsets']),
            frozenset(tuple(e) for e in f['meta_edges']),
            frozenset(e for e, c in freq.items() if c > 0), freq)
    return {'pattern': pattern, 'metrics': metrics, 'frequencies': frequencies,
            'config_echo': raw.get('config_echo'), 'seed': raw.get('seed')}

def write_spec(spec):
    """Serialize an intervention spec to JSON text."""
    interventions = {t: {'parents': list(spec.retained_parents(t)),
                         'table': spec.cpt(t).rows().tolist()}
                     for t in sorted(spec.targets)}
    return json.dumps({'schema_version': SCHEMA_VERSION, 'interventions': interventions},
                      sort_keys=True, indent=2) + '\n'

def read_spec(text, net):
    """Parse an intervention spec for the given network.

    :raises KeyError: On unknown targets.
    :raises ValueError: On invalid parents or tables.
    :rtype: :class:`intlearn.bayesnet.InterventionSpec`
    """
    raw = json.loads(text)
    if raw.get('schema_version') != SCHEMA_VERSION:
        raise ValueError(f"Unsupported spec schema version {raw.get('schema_version')!r}!")
    retained, cpts = {}, {}
    for t, entry in raw['interventions'].items():
        if t not in net.cardinalities:
            raise KeyError(f"Intervention target {t} is not a vertex of the network!")
        parents = net.dag.sorted(entry['parents'])
        retained[t] = parents
        table = np.asarray(entry['table'], dtype=float)
        if tuple(entry['parents']) != parents:
            raise ValueError(f"Parents of {t} must follow the declared vertex order!")
        cpts[t] = Cpt(t, parents, net.cardinalities, table)
    spec = InterventionSpec(retained, cpts)
    spec.validate(net)
    return spec
