# coding=utf-8
"""Minimal SPICE-like deck reader and writer.

Grammar, one statement per line (case-insensitive, `*` comments, `+` continues
the previous line):

    R<name> n+ n- value
    C<name> n+ n- value [ic=v]
    L<name> n+ n- value [ic=i]
    V<name> n+ n- [dc] value | PWL(t1 v1 t2 v2 ...)
    D<name> anode cathode model [area=um2]
    .model <name> D(js=... n=... vt=... rs=...)
    .ic V(node)=value ...
    .tran <dt> <tstop>
    .end

Values accept the suffixes f p n u m k meg g t; trailing unit letters are ignored.
"""
import re
import logging

from .mna import Circuit, DiodeModel, TransientConfig, Diode, Capacitor, Inductor, Resistor, VoltageSource
from .utils import ModelError, NetlistParseError

_logger = logging.getLogger('chiplet_io.netlist')

SUFFIXES = {
    'f': 1e-15, 'p': 1e-12, 'n': 1e-9, 'u': 1e-6, 'm': 1e-3,
    'k': 1e3, 'meg': 1e6, 'g': 1e9, 't': 1e12,
}

_NUMBER = re.compile(r'^([+-]?(?:\d+\.?\d*|\.\d+)(?:e[+-]?\d+)?)(meg|[fpnumkgt])?[a-z]*$')
_TOKEN = re.compile(r"v\([^)]*\)\s*=\s*[^\s=]+|[a-z]+\s*\([^)]*\)|[^\s=]+\s*=\s*[^\s=]+|\S+")
_KEYVAL = re.compile(r'^([^\s=]+)\s*=\s*(\S+)$')

MODEL_KEYS = ('js', 'n', 'vt', 'rs')


def parse_value(text):
    m = _NUMBER.match(text.strip().lower())
    if not m:
        raise ValueError("invalid number '{}'".format(text))
    value = float(m.group(1))
    if m.group(2):
        value *= SUFFIXES[m.group(2)]
    return value


class _Token:

    def __init__(self, text, col):
        self.text = text
        self.col = col


def _logical_lines(text):
    """Yield (line number, column offset, content) with continuations joined."""
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        stripped = line.strip()
        if not stripped or stripped.startswith('*'):
            continue
        if stripped.startswith('+'):
            if current is None:
                raise NetlistParseError('continuation line with nothing to continue', lineno, 1)
            current[2] += ' ' + stripped[1:]
            continue
        if current is not None:
            yield current
        current = [lineno, len(line) - len(line.lstrip()), stripped]
    if current is not None:
        yield current


def _tokens(content, offset):
    return [_Token(m.group(0), m.start() + offset + 1) for m in _TOKEN.finditer(content.lower())]


class _Parser:

    def __init__(self):
        self.circuit = Circuit()
        self.cfg = None
        self.diode_refs = []
        self.first_use = {}

    def value(self, tok, lineno):
        try:
            return parse_value(tok.text)
        except ValueError as e:
            raise NetlistParseError(str(e), lineno, tok.col)

    def keyword(self, tok, lineno, allowed):
        m = _KEYVAL.match(tok.text)
        if not m or m.group(1) not in allowed:
            raise NetlistParseError("unexpected token '{}'".format(tok.text), lineno, tok.col)
        return m.group(1), self.value(_Token(m.group(2), tok.col + tok.text.index('=') + 1), lineno)

    def nodes(self, toks, lineno):
        for tok in toks:
            self.first_use.setdefault(tok.text if tok.text not in ('gnd',) else '0', (lineno, tok.col))
        return toks[0].text, toks[1].text

    def element(self, toks, lineno):
        name = toks[0].text
        kind = name[0]
        if len(toks) < 4:
            raise NetlistParseError("element '{}' needs two nodes and a value".format(name), lineno, toks[0].col)
        n_pos, n_neg = self.nodes(toks[1:3], lineno)
        rest = toks[3:]
        c = self.circuit

        if kind == 'r':
            self.expect_end(rest[1:], lineno)
            value = self.value(rest[0], lineno)
            self.positive(value, rest[0], lineno)
            c.add_resistor(n_pos, n_neg, value, name=name)
        elif kind in 'cl':
            value = self.value(rest[0], lineno)
            self.positive(value, rest[0], lineno)
            ic = None
            for tok in rest[1:]:
                _, ic = self.keyword(tok, lineno, ('ic',))
            if kind == 'c':
                c.add_capacitor(n_pos, n_neg, value, ic=ic, name=name)
            else:
                c.add_inductor(n_pos, n_neg, value, ic=ic, name=name)
        elif kind == 'v':
            c.add_vsource(n_pos, n_neg, self.source(rest, lineno), name=name)
        elif kind == 'd':
            model = rest[0].text
            area = 1.0
            for tok in rest[1:]:
                _, area = self.keyword(tok, lineno, ('area',))
            self.diode_refs.append((model, lineno, rest[0].col))
            c.add_diode(n_pos, n_neg, model, area=area, name=name)
        else:
            raise NetlistParseError("unknown element type '{}'".format(name[0]), lineno, toks[0].col)

    def source(self, rest, lineno):
        if rest[0].text == 'dc':
            rest = rest[1:]
            if not rest:
                raise NetlistParseError('dc source needs a value', lineno, 1)
        tok = rest[0]
        self.expect_end(rest[1:], lineno)
        if not tok.text.startswith('pwl'):
            return self.value(tok, lineno)
        inner = tok.text[tok.text.index('(') + 1:-1].replace(',', ' ').split()
        if not inner or len(inner) % 2:
            raise NetlistParseError('PWL needs time/value pairs', lineno, tok.col)
        values = [self.value(_Token(t, tok.col), lineno) for t in inner]
        points = list(zip(values[0::2], values[1::2]))
        if any(b[0] < a[0] for a, b in zip(points, points[1:])):
            raise NetlistParseError('PWL times must be non-decreasing', lineno, tok.col)
        return points

    def directive(self, toks, lineno):
        head = toks[0].text
        if head == '.end':
            return
        if head == '.tran':
            if len(toks) != 3:
                raise NetlistParseError('.tran needs <dt> <tstop>', lineno, toks[0].col)
            dt, stop = self.value(toks[1], lineno), self.value(toks[2], lineno)
            try:
                self.cfg = TransientConfig(stop=stop, dt=dt)
            except ModelError as e:
                raise NetlistParseError(str(e), lineno, toks[1].col)
        elif head == '.ic':
            for tok in toks[1:]:
                m = re.match(r'^v\(([^)]+)\)\s*=\s*(\S+)$', tok.text)
                if not m:
                    raise NetlistParseError("expected V(node)=value, got '{}'".format(tok.text), lineno, tok.col)
                self.circuit.set_ic(m.group(1), self.value(_Token(m.group(2), tok.col), lineno))
        elif head == '.model':
            if len(toks) != 3 or not toks[2].text.startswith('d('):
                raise NetlistParseError('.model supports only D(...) diode cards', lineno, toks[0].col)
            card = toks[2]
            params = {}
            for item in re.findall(r'[^\s=()]+\s*=\s*[^\s=()]+', card.text[2:-1]):
                key, _, val = item.partition('=')
                key = key.strip()
                if key not in MODEL_KEYS:
                    raise NetlistParseError("unknown diode parameter '{}'".format(key), lineno, card.col)
                params[key] = self.value(_Token(val.strip(), card.col), lineno)
            try:
                self.circuit.add_model(toks[1].text, DiodeModel(**params))
            except ModelError as e:
                raise NetlistParseError(str(e), lineno, card.col)
        else:
            raise NetlistParseError("unknown directive '{}'".format(head), lineno, toks[0].col)

    def positive(self, value, tok, lineno):
        if not value > 0:
            raise NetlistParseError('value must be positive', lineno, tok.col)

    def expect_end(self, rest, lineno):
        if rest:
            raise NetlistParseError("unexpected token '{}'".format(rest[0].text), lineno, rest[0].col)

    def finish(self):
        c = self.circuit
        for model, lineno, col in self.diode_refs:
            if model not in c.models:
                raise NetlistParseError("unknown model '{}'".format(model), lineno, col)
        floating = c.floating_nodes()
        if floating:
            lineno, col = self.first_use.get(floating[0], (0, 0))
            raise NetlistParseError("dangling node '{}' has no path to ground".format(floating[0]), lineno, col)
        for node in c.node_ic:
            if node not in c.nodes:
                raise NetlistParseError(".ic on unknown node '{}'".format(node), 0, 1)
        try:
            c.validate()
        except ModelError as e:
            raise NetlistParseError(str(e), 0, 1)
        return c, self.cfg


def parse_netlist(text):
    """Returns (Circuit, TransientConfig or None when the deck has no .tran)."""
    parser = _Parser()
    for lineno, offset, content in _logical_lines(text):
        toks = _tokens(content, offset)
        if toks[0].text.startswith('.'):
            parser.directive(toks, lineno)
        else:
            parser.element(toks, lineno)
    circuit, cfg = parser.finish()
    _logger.debug('Parsed deck: {} elements, {} nodes'.format(len(circuit.elements), len(circuit.nodes) - 1))
    return circuit, cfg


def _fmt(value):
    return repr(float(value))


def unparse(circuit, cfg=None):
    """Deck text that parse_netlist reads back into an equal circuit."""
    lines = ['* chiplet-io deck']
    for name, m in circuit.models.items():
        lines.append('.model {} D(js={} n={} vt={} rs={})'.format(name, _fmt(m.js), _fmt(m.n), _fmt(m.vt), _fmt(m.rs)))
    for e in circuit.elements:
        if isinstance(e, Resistor):
            lines.append('{} {} {} {}'.format(e.name, e.n_pos, e.n_neg, _fmt(e.value)))
        elif isinstance(e, (Capacitor, Inductor)):
            ic = '' if e.ic is None else ' ic={}'.format(_fmt(e.ic))
            lines.append('{} {} {} {}{}'.format(e.name, e.n_pos, e.n_neg, _fmt(e.value), ic))
        elif isinstance(e, VoltageSource):
            pwl = ' '.join('{} {}'.format(_fmt(t), _fmt(v)) for t, v in e.pwl)
            lines.append('{} {} {} PWL({})'.format(e.name, e.n_pos, e.n_neg, pwl))
        elif isinstance(e, Diode):
            lines.append('{} {} {} {} area={}'.format(e.name, e.anode, e.cathode, e.model, _fmt(e.area)))
    if circuit.node_ic:
        lines.append('.ic ' + ' '.join('V({})={}'.format(n, _fmt(v)) for n, v in circuit.node_ic.items()))
    if cfg is not None:
        lines.append('.tran {} {}'.format(_fmt(cfg.dt), _fmt(cfg.stop)))
    lines.append('.end')
    return '\n'.join(lines) + '\n'
