# coding=utf-8
"""Modified nodal analysis: circuit description, DC operating point and a
fixed-step trapezoidal transient with Newton iteration for diodes.

Unknowns are laid out as [node voltages (row 0 is ground), voltage-source
branch currents, DC-only branches]. Ground's row and column are assembled
and then dropped before factorization. Capacitors and inductors enter the
transient as companion conductances with history current sources, so
inductors need no branch unknown there.
"""
import math
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .utils import ModelError, ConvergenceError
from .lib.error_stats import solver_stats

_logger = logging.getLogger('chiplet_io.mna')

GROUND = '0'
GROUND_ALIASES = ('0', 'gnd')

# exponent above which the diode characteristic is continued linearly
EXP_LIMIT = 80.0


def canonical_node(name):
    name = str(name)
    return GROUND if name.lower() in GROUND_ALIASES else name


@dataclass(frozen=True)
class DiodeModel:
    js: float = 1e-12        # saturation current density, A/um^2
    n: float = 1.0
    vt: float = 0.02585
    rs: float = 90.0         # specific series resistance, ohm*um^2

    def __post_init__(self):
        if not (self.js > 0 and self.n > 0 and self.vt > 0 and self.rs > 0):
            raise ModelError('diode model needs js, n, vt and rs > 0')


@dataclass(frozen=True)
class Resistor:
    name: str
    n_pos: str
    n_neg: str
    value: float


@dataclass(frozen=True)
class Capacitor:
    name: str
    n_pos: str
    n_neg: str
    value: float
    ic: Optional[float] = None


@dataclass(frozen=True)
class Inductor:
    name: str
    n_pos: str
    n_neg: str
    value: float
    ic: Optional[float] = None


@dataclass(frozen=True)
class VoltageSource:
    """Piecewise-linear source; holds its end values outside the breakpoints.
    Branch current is positive into the + terminal."""
    name: str
    n_pos: str
    n_neg: str
    pwl: Tuple[Tuple[float, float], ...]

    def value_at(self, t):
        ts, vs = zip(*self.pwl)
        return float(np.interp(t, ts, vs))

    @property
    def breakpoints(self):
        return tuple(t for t, _ in self.pwl)


@dataclass(frozen=True)
class Diode:
    name: str
    anode: str
    cathode: str
    model: str
    area: float = 1.0


@dataclass
class Circuit:
    """Element list plus diode models and node initial conditions.

    Built incrementally with the add_* helpers, then treated as read-only:
    the solver never mutates a Circuit.
    """
    elements: List = field(default_factory=list)
    models: Dict[str, DiodeModel] = field(default_factory=dict)
    node_ic: Dict[str, float] = field(default_factory=dict)

    def _name(self, prefix, name):
        return name if name is not None else '{}{}'.format(prefix, len(self.elements) + 1)

    def add_resistor(self, n_pos, n_neg, value, name=None):
        return self._add(Resistor(self._name('R', name), canonical_node(n_pos), canonical_node(n_neg), float(value)))

    def add_capacitor(self, n_pos, n_neg, value, ic=None, name=None):
        return self._add(Capacitor(self._name('C', name), canonical_node(n_pos), canonical_node(n_neg),
                                   float(value), None if ic is None else float(ic)))

    def add_inductor(self, n_pos, n_neg, value, ic=None, name=None):
        return self._add(Inductor(self._name('L', name), canonical_node(n_pos), canonical_node(n_neg),
                                  float(value), None if ic is None else float(ic)))

    def add_vsource(self, n_pos, n_neg, pwl, name=None):
        if isinstance(pwl, (int, float)):
            pwl = ((0.0, float(pwl)),)
        pwl = tuple((float(t), float(v)) for t, v in pwl)
        return self._add(VoltageSource(self._name('V', name), canonical_node(n_pos), canonical_node(n_neg), pwl))

    def add_diode(self, anode, cathode, model, area=1.0, name=None):
        return self._add(Diode(self._name('D', name), canonical_node(anode), canonical_node(cathode), model, float(area)))

    def add_model(self, name, model):
        self.models[name] = model

    def set_ic(self, node, volts):
        self.node_ic[canonical_node(node)] = float(volts)

    def _add(self, element):
        self.elements.append(element)
        return element

    @property
    def nodes(self):
        """Node names in order of first appearance, ground first."""
        seen = {GROUND: None}
        for e in self.elements:
            for n in _terminals(e):
                seen.setdefault(n, None)
        return list(seen)

    def element(self, name):
        for e in self.elements:
            if e.name == name:
                return e
        raise ModelError("unknown element '{}'".format(name))

    def of_type(self, cls):
        return [e for e in self.elements if isinstance(e, cls)]

    @property
    def is_linear(self):
        return not self.of_type(Diode)

    def validate(self):
        names = set()
        for e in self.elements:
            if e.name in names:
                raise ModelError("duplicate element name '{}'".format(e.name))
            names.add(e.name)
            if isinstance(e, (Resistor, Capacitor, Inductor)) and not e.value > 0:
                raise ModelError("element '{}' needs a positive value, got {}".format(e.name, e.value))
            if isinstance(e, VoltageSource):
                ts = [t for t, _ in e.pwl]
                if not ts or any(b < a for a, b in zip(ts, ts[1:])):
                    raise ModelError("source '{}' needs non-decreasing PWL times".format(e.name))
            if isinstance(e, Diode):
                if e.model not in self.models:
                    raise ModelError("diode '{}' references unknown model '{}'".format(e.name, e.model))
                if not e.area > 0:
                    raise ModelError("diode '{}' needs a positive area".format(e.name))
        known = set(self.nodes)
        for node in self.node_ic:
            if node not in known:
                raise ModelError("initial condition on unknown node '{}'".format(node))
        floating = self.floating_nodes()
        if floating:
            raise ModelError('floating node(s) with no path to ground: {}'.format(', '.join(floating)))

    def floating_nodes(self):
        parent = {n: n for n in self.nodes}

        def find(n):
            while parent[n] != n:
                parent[n] = parent[parent[n]]
                n = parent[n]
            return n

        for e in self.elements:
            a, b = _terminals(e)
            parent[find(a)] = find(b)
        root = find(GROUND)
        return [n for n in self.nodes if find(n) != root]


def _terminals(e):
    if isinstance(e, Diode):
        return e.anode, e.cathode
    return e.n_pos, e.n_neg


@dataclass(frozen=True)
class TransientConfig:
    stop: float
    dt: float
    abstol: float = 1e-6
    reltol: float = 1e-6
    max_iter: int = 100
    gmin: float = 1e-12

    def __post_init__(self):
        if not self.dt > 0:
            raise ModelError('timestep must be > 0')
        if self.stop < self.dt:
            raise ModelError('stop time {} shorter than timestep {}'.format(self.stop, self.dt))
        if self.max_iter < 1:
            raise ModelError('max_iter must be >= 1')


@dataclass
class Waveform:
    time: np.ndarray
    voltages: Dict[str, np.ndarray]
    currents: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def dt(self):
        return float(self.time[1] - self.time[0]) if len(self.time) > 1 else 0.0


def probe(w, node):
    node = canonical_node(node)
    if node == GROUND:
        return np.zeros_like(w.time)
    if node in w.voltages:
        return w.voltages[node].copy()
    if node in w.currents:
        return w.currents[node].copy()
    raise ModelError("unknown node '{}' (recorded: {})".format(node, ', '.join(w.voltages)))


def peak_abs(w, node):
    return float(np.max(np.abs(probe(w, node))))


class _System:
    """Index bookkeeping and constant stamps for one circuit."""

    def __init__(self, circuit, gmin):
        circuit.validate()
        self.circuit = circuit
        names = circuit.nodes
        resistors = [(e.n_pos, e.n_neg, e.value) for e in circuit.of_type(Resistor)]

        # every diode gets an internal junction node behind its series resistance
        diodes = []
        for d in circuit.of_type(Diode):
            m = circuit.models[d.model]
            anode = '{}#j'.format(d.name)
            names.append(anode)
            resistors.append((d.anode, anode, m.rs / d.area))
            i_s = d.area * m.js
            nvt = m.n * m.vt
            diodes.append((anode, d.cathode, i_s, nvt, nvt * math.log(nvt / (math.sqrt(2) * i_s))))

        self.node_names = names
        self.index = {n: i for i, n in enumerate(names)}
        self.n_nodes = len(names)
        idx = self.index

        self.r_pos = np.array([idx[a] for a, _, _ in resistors], dtype=int)
        self.r_neg = np.array([idx[b] for _, b, _ in resistors], dtype=int)
        self.r_g = np.array([1.0 / r for _, _, r in resistors])

        caps = circuit.of_type(Capacitor)
        self.caps = caps
        self.c_pos = np.array([idx[c.n_pos] for c in caps], dtype=int)
        self.c_neg = np.array([idx[c.n_neg] for c in caps], dtype=int)
        self.c_val = np.array([c.value for c in caps])

        inds = circuit.of_type(Inductor)
        self.inductors = inds
        self.l_pos = np.array([idx[l.n_pos] for l in inds], dtype=int)
        self.l_neg = np.array([idx[l.n_neg] for l in inds], dtype=int)
        self.l_val = np.array([l.value for l in inds])

        self.sources = circuit.of_type(VoltageSource)
        self.v_pos = np.array([idx[v.n_pos] for v in self.sources], dtype=int)
        self.v_neg = np.array([idx[v.n_neg] for v in self.sources], dtype=int)
        self.v_branch = self.n_nodes + np.arange(len(self.sources), dtype=int)

        self.d_pos = np.array([idx[a] for a, _, _, _, _ in diodes], dtype=int)
        self.d_neg = np.array([idx[c] for _, c, _, _, _ in diodes], dtype=int)
        self.d_is = np.array([d[2] for d in diodes])
        self.d_nvt = np.array([d[3] for d in diodes])
        self.d_vcrit = np.array([d[4] for d in diodes])

        self.size = self.n_nodes + len(self.sources)
        self.gmin = gmin
        self.breakpoints = sorted({t for v in self.sources for t in v.breakpoints})

    @property
    def linear(self):
        return len(self.d_is) == 0

    def base_matrix(self, extra):
        size = self.size + extra
        a = np.zeros((size, size))
        _stamp_conductance(a, self.r_pos, self.r_neg, self.r_g)
        diag = np.arange(1, self.n_nodes)
        a[diag, diag] += self.gmin
        _stamp_branch(a, self.v_pos, self.v_neg, self.v_branch)
        return a

    def source_values(self, t):
        return np.array([v.value_at(t) for v in self.sources])

    def source_table(self, times):
        """Source values at every time point, one row per source."""
        table = np.empty((len(self.sources), len(times)))
        for k, v in enumerate(self.sources):
            ts, vs = zip(*v.pwl)
            table[k] = np.interp(times, ts, vs)
        return table

    def diode_eval(self, vd):
        arg = vd / self.d_nvt
        big = arg > EXP_LIMIT
        e = np.exp(np.minimum(arg, EXP_LIMIT))
        current = self.d_is * (np.where(big, e * (1.0 + arg - EXP_LIMIT), e) - 1.0)
        g = self.d_is * e / self.d_nvt
        return current, g

    def pnjlim(self, vnew, vold):
        """SPICE junction limiting: logarithmic compression of large forward steps."""
        vt = self.d_nvt
        delta = vnew - vold
        arg = delta / vt
        fwd = (vnew > self.d_vcrit) & (np.abs(delta) > 2 * vt)
        limited_pos = vold + vt * np.log(np.maximum(1.0 + arg, 1e-30))
        limited_neg = vold - vt * np.log(np.maximum(1.0 - arg, 1e-30))
        limited_forward = np.where(arg >= 0, limited_pos, limited_neg)
        limited_reverse = np.where(vnew > 0, vt * np.log(np.maximum(vnew / vt, 1e-30)), self.d_vcrit)
        limited_fwd = np.where(vold > 0, limited_forward, limited_reverse)
        neg_clamp = np.where(vold > 0, -vold - 1.0, 2.0 * vold - 1.0)
        limited_neg_v = np.maximum(vnew, neg_clamp)
        return np.where(fwd, limited_fwd, np.where(vnew < 0, limited_neg_v, vnew))


def _stamp_conductance(a, pos, neg, g):
    np.add.at(a, (pos, pos), g)
    np.add.at(a, (neg, neg), g)
    np.add.at(a, (pos, neg), -g)
    np.add.at(a, (neg, pos), -g)


def _stamp_branch(a, pos, neg, branch):
    np.add.at(a, (pos, branch), 1.0)
    np.add.at(a, (neg, branch), -1.0)
    np.add.at(a, (branch, pos), 1.0)
    np.add.at(a, (branch, neg), -1.0)


def _inject(rhs, pos, neg, current, size):
    """Add a current source pushing `current` into pos and out of neg."""
    if len(current):
        rhs += np.bincount(pos, weights=current, minlength=size)
        rhs -= np.bincount(neg, weights=current, minlength=size)


def _worst(sys, dx):
    k = int(np.argmax(np.abs(dx)))
    row = k + 1
    if row < sys.n_nodes:
        return float(abs(dx[k])), sys.node_names[row]
    return float(abs(dx[k])), 'branch:{}'.format(row - sys.n_nodes)


def _newton(sys, a_lin, rhs_lin, x, abstol, reltol, max_iter, time, kind):
    """Solve a_lin x + diode currents = rhs_lin. x is the full vector
    (ground at 0) used as the starting point; returns the converged vector."""
    vd = x[sys.d_pos] - x[sys.d_neg]
    dx = np.zeros(len(x) - 1)
    for it in range(1, max_iter + 1):
        current, g = sys.diode_eval(vd)
        a = a_lin.copy()
        rhs = rhs_lin.copy()
        _stamp_conductance(a, sys.d_pos, sys.d_neg, g)
        _inject(rhs, sys.d_pos, sys.d_neg, -(current - g * vd), len(rhs))
        x_new = np.zeros_like(x)
        x_new[1:] = lu_solve(lu_factor(a[1:, 1:], check_finite=False), rhs[1:], check_finite=False)

        vd_raw = x_new[sys.d_pos] - x_new[sys.d_neg]
        vd_next = sys.pnjlim(vd_raw, vd)
        limited = not np.array_equal(vd_next, vd_raw)
        dx = x_new[1:] - x[1:]
        x = x_new
        vd = vd_next
        if limited:
            solver_stats.add_limited_step(kind)
            continue
        if np.all(np.abs(dx) <= abstol + reltol * np.abs(x[1:])):
            solver_stats.add_newton_iterations(kind, it)
            return x

    residual, node = _worst(sys, dx)
    err = ConvergenceError(time, residual, node, max_iter)
    solver_stats.add_failure(kind, err)
    raise err


def _dc_solve(sys, cfg, kind):
    """Full DC vector plus inductor currents: capacitors open, inductors
    0 V branches, `.ic` nodes pinned by extra branches."""
    circuit = sys.circuit
    ic_nodes = [n for n in circuit.node_ic if n != GROUND]
    n_l = len(sys.inductors)
    extra = n_l + len(ic_nodes)
    a = sys.base_matrix(extra)
    l_branch = sys.size + np.arange(n_l, dtype=int)
    _stamp_branch(a, sys.l_pos, sys.l_neg, l_branch)
    ic_pos = np.array([sys.index[n] for n in ic_nodes], dtype=int)
    ic_branch = sys.size + n_l + np.arange(len(ic_nodes), dtype=int)
    _stamp_branch(a, ic_pos, np.zeros(len(ic_nodes), dtype=int), ic_branch)

    rhs = np.zeros(sys.size + extra)
    rhs[sys.v_branch] = sys.source_values(0.0)
    rhs[ic_branch] = [circuit.node_ic[n] for n in ic_nodes]

    x = np.zeros(sys.size + extra)
    if sys.linear:
        x[1:] = lu_solve(lu_factor(a[1:, 1:], check_finite=False), rhs[1:], check_finite=False)
    else:
        x = _newton(sys, a, rhs, x, cfg.abstol, cfg.reltol, cfg.max_iter, None, kind)
    return x[:sys.size], x[l_branch]


def dc_operating_point(c, cfg=None, kind='dc'):
    """Node voltages at t = 0 with sources at their initial values."""
    cfg = cfg or TransientConfig(stop=1.0, dt=1.0)
    sys = _System(c, cfg.gmin)
    solver_stats.attempt(kind)
    x, _ = _dc_solve(sys, cfg, kind)
    public = set(c.nodes)
    return {n: float(x[i]) for i, n in enumerate(sys.node_names) if n in public}


def _initial_state(sys, cfg, kind):
    circuit = sys.circuit
    uic = bool(circuit.node_ic) or any(
        getattr(e, 'ic', None) is not None for e in circuit.elements)
    if uic:
        x = np.zeros(sys.size)
        for n, v in circuit.node_ic.items():
            x[sys.index[n]] = v
        x[0] = 0.0
        i_l = np.array([0.0 if l.ic is None else l.ic for l in sys.inductors])
        _logger.debug('Transient starts from initial conditions (UIC)')
    else:
        x, i_l = _dc_solve(sys, cfg, kind)
        _logger.debug('Transient starts from the DC operating point')
    v_c = x[sys.c_pos] - x[sys.c_neg]
    v_c = np.array([v if c.ic is None else c.ic for v, c in zip(v_c, sys.caps)])
    return x, v_c, i_l


def transient(c, cfg, probes=None, kind='transient'):
    """Fixed-step transient of circuit c.

    The first step, and every step starting on a source breakpoint, uses
    backward Euler; all other steps are trapezoidal. probes limits what is
    recorded: node names record voltages, element names (sources, inductors)
    record branch currents. None records everything.
    """
    sys = _System(c, cfg.gmin)
    solver_stats.attempt(kind)
    dt = cfg.dt
    n_steps = int(round(cfg.stop / dt))
    times = np.arange(n_steps + 1) * dt

    node_probes, current_probes = _resolve_probes(sys, c, probes)
    x, v_c, i_l = _initial_state(sys, cfg, kind)
    i_c = np.zeros(len(v_c))
    v_l = x[sys.l_pos] - x[sys.l_neg]

    rec_v = {n: np.empty(n_steps + 1) for n in node_probes}
    rec_i = {n: np.empty(n_steps + 1) for n in current_probes}
    src_pos = {v.name: k for k, v in enumerate(sys.sources)}
    ind_pos = {l.name: k for k, l in enumerate(sys.inductors)}

    def record(k, x, i_l):
        for n, arr in rec_v.items():
            arr[k] = x[sys.index[n]]
        for n, arr in rec_i.items():
            arr[k] = x[sys.v_branch[src_pos[n]]] if n in src_pos else i_l[ind_pos[n]]

    record(0, x, i_l)
    src_values = sys.source_table(times)

    bp_steps = set()
    for t_bp in sys.breakpoints:
        k = t_bp / dt
        if abs(k - round(k)) < 1e-6 and 0 <= round(k) < n_steps:
            bp_steps.add(int(round(k)))

    mats = {}
    for be in (True, False):
        gc = sys.c_val / dt if be else 2 * sys.c_val / dt
        gl = dt / sys.l_val if be else dt / (2 * sys.l_val)
        a = sys.base_matrix(0)
        _stamp_conductance(a, sys.c_pos, sys.c_neg, gc)
        _stamp_conductance(a, sys.l_pos, sys.l_neg, gl)
        lu = lu_factor(a[1:, 1:], check_finite=False) if sys.linear else None
        mats[be] = (a, lu, gc, gl)

    for k in range(n_steps):
        be = k == 0 or k in bp_steps
        a, lu, gc, gl = mats[be]
        if be:
            j_c = gc * v_c
            k_l = i_l.copy()
        else:
            j_c = gc * v_c + i_c
            k_l = i_l + gl * v_l

        rhs = np.zeros(sys.size)
        _inject(rhs, sys.c_pos, sys.c_neg, j_c, sys.size)
        _inject(rhs, sys.l_pos, sys.l_neg, -k_l, sys.size)
        rhs[sys.v_branch] = src_values[:, k + 1]

        if sys.linear:
            x = np.zeros(sys.size)
            x[1:] = lu_solve(lu, rhs[1:], check_finite=False)
        else:
            x = _newton(sys, a, rhs, x, cfg.abstol, cfg.reltol, cfg.max_iter, times[k + 1], kind)

        v_c_new = x[sys.c_pos] - x[sys.c_neg]
        i_c = gc * v_c_new - j_c
        v_c = v_c_new
        v_l = x[sys.l_pos] - x[sys.l_neg]
        i_l = gl * v_l + k_l
        record(k + 1, x, i_l)

    _logger.debug('Transient done: {} steps of {:.3e} s, {} unknowns'.format(n_steps, dt, sys.size - 1))
    return Waveform(time=times, voltages=rec_v, currents=rec_i)


def _resolve_probes(sys, c, probes):
    if probes is None:
        return ([n for n in c.nodes if n != GROUND],
                [v.name for v in sys.sources] + [l.name for l in sys.inductors])
    names = set(c.nodes)
    currents = {e.name for e in sys.sources} | {e.name for e in sys.inductors}
    node_probes, current_probes = [], []
    for p in probes:
        cp = canonical_node(p)
        if cp == GROUND:
            continue
        if cp in names:
            node_probes.append(cp)
        elif p in currents:
            current_probes.append(p)
        else:
            raise ModelError("unknown probe '{}'".format(p))
    return node_probes, current_probes


def stored_energy(c, w):
    """Sum of C v^2/2 and L i^2/2 over the run; needs the capacitor nodes and
    inductor currents to have been recorded."""
    energy = np.zeros_like(w.time)
    for cap in c.of_type(Capacitor):
        v = probe(w, cap.n_pos) - probe(w, cap.n_neg)
        energy += 0.5 * cap.value * v ** 2
    for ind in c.of_type(Inductor):
        if ind.name not in w.currents:
            raise ModelError("inductor current '{}' was not recorded".format(ind.name))
        energy += 0.5 * ind.value * w.currents[ind.name] ** 2
    return energy


def write_waveform_csv(w, path, nodes=None):
    nodes = list(w.voltages) if nodes is None else [canonical_node(n) for n in nodes]
    columns = [w.time] + [probe(w, n) for n in nodes]
    np.savetxt(path, np.column_stack(columns), fmt='%.17e', delimiter=',',
               header=','.join(['time'] + nodes), comments='')


def read_waveform_csv(path):
    with open(path) as f:
        header = f.readline().strip().split(',')
    data = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)
    if header[0] != 'time':
        raise ModelError("waveform CSV must start with a 'time' column")
    return Waveform(time=data[:, 0], voltages={n: data[:, i + 1] for i, n in enumerate(header[1:])})
