# coding=utf-8
"""Direct-signaling-link bench: parallel channels as coupled lumped ladders,
behavioral drivers (PWL source behind R_drv), PRBS stimulus and eye analysis.
"""
import math
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .extraction import extract_channel
from .lib.sweep_pool import run_ordered
from .mna import Circuit, TransientConfig, transient, probe
from .utils import ModelError

_logger = logging.getLogger('chiplet_io.dsl')

SEGMENT_LENGTH = 50e-6
MIN_SEGMENTS = 10
MIN_TRACES = 8
# eye-width band around the threshold, as a fraction of VDD
EYE_BAND = 0.05
AGGRESSOR_MODES = ('worst', 'prbs')


def prbs7(seed, n_bits):
    """x^7 + x^6 + 1 linear-feedback sequence from a 7-bit nonzero seed."""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 < seed < 128:
        raise ModelError('PRBS7 seed must be a nonzero 7-bit value, got {}'.format(seed))
    state = int(seed)
    bits = np.empty(n_bits, dtype=np.uint8)
    for i in range(n_bits):
        new = ((state >> 6) ^ (state >> 5)) & 1
        state = ((state << 1) | new) & 0x7F
        bits[i] = new
    return bits


def aggressor_seed(seed, k):
    """Independent, documented seed for aggressor k (k >= 1)."""
    return (seed - 1 + 37 * k) % 127 + 1


@dataclass(frozen=True)
class DslConfig:
    channels: int = 3
    n_seg: Optional[int] = None
    bit_rate: float = 1e9
    vdd: float = 0.9
    r_drv: float = 150.0
    t_edge: float = 50e-12
    c_gate: float = 5e-15
    seed: int = 1
    n_bits: int = 256
    warmup_bits: int = 8
    aggressors: str = 'worst'
    samples_per_ui: int = 200

    def __post_init__(self):
        if self.channels < 1 or self.channels % 2 == 0:
            raise ModelError('channel count must be odd and >= 1, got {}'.format(self.channels))
        if self.n_seg is not None and self.n_seg < 1:
            raise ModelError('n_seg must be >= 1')
        if not (self.bit_rate > 0 and self.vdd > 0 and self.c_gate > 0):
            raise ModelError('bit rate, VDD and receiver load must be > 0')
        if self.r_drv < 0 or self.t_edge < 0:
            raise ModelError('driver resistance and edge time must be >= 0')
        if self.aggressors not in AGGRESSOR_MODES:
            raise ModelError("aggressor mode must be one of {}".format(', '.join(AGGRESSOR_MODES)))
        if self.samples_per_ui < 2 or self.samples_per_ui % 2:
            raise ModelError('samples_per_ui must be even and >= 2')
        if self.n_bits < self.warmup_bits + MIN_TRACES + 1:
            raise ModelError('need at least {} bits after warm-up'.format(MIN_TRACES + 1))

    @property
    def ui(self):
        return 1.0 / self.bit_rate

    @property
    def victim(self):
        return self.channels // 2

    def segments(self, length=None):
        if self.n_seg is not None:
            return self.n_seg
        if length is None:
            return MIN_SEGMENTS
        return max(MIN_SEGMENTS, int(math.ceil(length / SEGMENT_LENGTH - 1e-9)))

    def patterns(self):
        """Bit sequence per channel, victim in the middle."""
        victim = prbs7(self.seed, self.n_bits)
        out = []
        for ch in range(self.channels):
            if ch == self.victim:
                out.append(victim)
            elif self.aggressors == 'worst':
                out.append(1 - victim)
            else:
                out.append(prbs7(aggressor_seed(self.seed, ch + 1), self.n_bits))
        return out


@dataclass
class EyeDiagram:
    ui: float
    time: np.ndarray          # 0 .. 2 UI, the central bit spans [UI/2, 3 UI/2]
    traces: np.ndarray        # (n_traces, len(time))
    threshold: float
    vdd: float
    bits: Optional[np.ndarray] = None

    @property
    def n_traces(self):
        return self.traces.shape[0]


@dataclass(frozen=True)
class EyeMetrics:
    height: float
    width: float
    jitter: float
    center: float


def driver_pwl(bits, ui, t_edge, vdd):
    """Trapezoidal drive with a corner at every bit boundary, whether the
    data toggles or not, so every pattern shares one breakpoint grid."""
    levels = np.asarray(bits, dtype=float) * vdd
    points = [(0.0, levels[0])]
    for k in range(1, len(levels)):
        t0 = k * ui
        points.append((t0, levels[k - 1]))
        points.append((t0 + t_edge, levels[k]))
    return points


class _Chain:
    """Builds a series chain, merging the two ends of any zero-valued series
    element and dropping zero-valued shunts."""

    def __init__(self, circuit, prefix):
        self.c = circuit
        self.prefix = prefix

    def series(self, kind, node, value, tag):
        if value == 0:
            return node
        nxt = '{}_{}'.format(self.prefix, tag)
        if kind == 'R':
            self.c.add_resistor(node, nxt, value, name='R{}_{}'.format(self.prefix, tag))
        else:
            self.c.add_inductor(node, nxt, value, name='L{}_{}'.format(self.prefix, tag))
        return nxt

    def shunt(self, node, value, tag):
        if value > 0:
            self.c.add_capacitor(node, '0', value, name='C{}_{}'.format(self.prefix, tag))


def build_dsl_circuit(par, cfg, length=None, patterns=None):
    """Coupled ladder circuit and its probe map.

    Per channel: source -> R_drv -> tx pad (C_pad) -> R_pad -> N pi-segments
    -> R_pad -> rx node (C_pad + receiver C_gate). Segment k is
    R/N, L/N in series with (C_pkg - C_couple)/N shunted half at each end;
    a C_couple/N bridge ties the R-L midpoints of adjacent channels.
    """
    n_seg = cfg.segments(length)
    patterns = cfg.patterns() if patterns is None else patterns
    if len(patterns) != cfg.channels:
        raise ModelError('need one bit pattern per channel')

    c = Circuit()
    r_seg = par.R_pkg / n_seg
    l_seg = par.L_pkg / n_seg
    c_shunt = (par.C_pkg - par.C_couple) / n_seg
    c_bridge = par.C_couple / n_seg
    mids = []
    rx_nodes = []
    sources = []

    for ch in range(cfg.channels):
        chain = _Chain(c, 'ch{}'.format(ch))
        src = 'ch{}_src'.format(ch)
        name = 'V{}'.format(ch)
        c.add_vsource(src, '0', driver_pwl(patterns[ch], cfg.ui, cfg.t_edge, cfg.vdd), name=name)
        sources.append(name)

        tx = chain.series('R', src, cfg.r_drv, 'tx')
        chain.shunt(tx, par.C_pad, 'padtx')
        node = chain.series('R', tx, par.R_pad, 'n0')

        ch_mids = []
        shunts = {}
        for k in range(n_seg):
            shunts[node] = shunts.get(node, 0.0) + c_shunt / 2
            mid = chain.series('R', node, r_seg, 'm{}'.format(k))
            nxt = chain.series('L', mid, l_seg, 'n{}'.format(k + 1))
            shunts[nxt] = shunts.get(nxt, 0.0) + c_shunt / 2
            ch_mids.append(mid)
            node = nxt
        for k, (n, value) in enumerate(shunts.items()):
            chain.shunt(n, value, 's{}'.format(k))

        rx = chain.series('R', node, par.R_pad, 'rx')
        chain.shunt(rx, par.C_pad, 'padrx')
        chain.shunt(rx, cfg.c_gate, 'gate')
        mids.append(ch_mids)
        rx_nodes.append(rx)

    if c_bridge > 0:
        for ch in range(cfg.channels - 1):
            for k in range(n_seg):
                c.add_capacitor(mids[ch][k], mids[ch + 1][k], c_bridge, name='Cx{}_{}'.format(ch, k))

    node_map = dict(
        victim=rx_nodes[cfg.victim],
        aggressors=[n for i, n in enumerate(rx_nodes) if i != cfg.victim],
        far_ends=rx_nodes,
        sources=sources,
        n_seg=n_seg,
    )
    return c, node_map


def fold_eye(time, v, bits, cfg):
    """Cut one 2-UI trace per bit, starting half a UI before its boundary."""
    spu = cfg.samples_per_ui
    half = spu // 2
    width = 2 * spu + 1
    traces = []
    centre_bits = []
    for k in range(cfg.warmup_bits, len(bits)):
        start = k * spu - half
        if start < 0 or start + width > len(v):
            continue
        traces.append(v[start:start + width])
        centre_bits.append(bits[k])
    return EyeDiagram(
        ui=cfg.ui,
        time=np.arange(width) * (cfg.ui / spu),
        traces=np.array(traces),
        threshold=cfg.vdd / 2,
        vdd=cfg.vdd,
        bits=np.array(centre_bits, dtype=np.uint8),
    )


def simulate_victim(par, cfg, length=None, patterns=None):
    circuit, nodes = build_dsl_circuit(par, cfg, length=length, patterns=patterns)
    dt = cfg.ui / cfg.samples_per_ui
    tcfg = TransientConfig(stop=cfg.n_bits * cfg.ui, dt=dt)
    _logger.debug('DSL run: {} channels x {} segments, {} bits'.format(cfg.channels, nodes['n_seg'], cfg.n_bits))
    w = transient(circuit, tcfg, probes=[nodes['victim']], kind='dsl')
    return w, nodes


def simulate_eye(par, cfg=None, length=None):
    cfg = cfg or DslConfig()
    patterns = cfg.patterns()
    w, nodes = simulate_victim(par, cfg, length=length, patterns=patterns)
    return fold_eye(w.time, probe(w, nodes['victim']), patterns[cfg.victim], cfg)


def _crossings(t, trace, threshold, lo, hi):
    """Linearly interpolated threshold crossings of one trace inside [lo, hi]."""
    x = trace - threshold
    s = np.sign(x)
    s[s == 0] = 1
    idx = np.nonzero(np.diff(s))[0]
    out = []
    for i in idx:
        tc = t[i] + (t[i + 1] - t[i]) * x[i] / (x[i] - x[i + 1])
        if lo <= tc <= hi:
            out.append(tc)
    return out


def eye_metrics(eye, min_traces=MIN_TRACES):
    if eye.n_traces < min_traces:
        raise ModelError('eye needs at least {} traces, got {}'.format(min_traces, eye.n_traces))
    t = eye.time
    ui = eye.ui
    traces = eye.traces
    thr = eye.threshold

    # crossings of the boundary that opens the central bit
    xings = []
    for tr in traces:
        xings.extend(_crossings(t, tr, thr, 0.0, ui))
    if xings:
        centre = float(np.mean(xings)) + ui / 2
        jitter = float(np.max(xings) - np.min(xings))
    else:
        centre = ui
        jitter = 0.0
    centre = min(max(centre, t[0]), t[-1])

    at_centre = np.array([np.interp(centre, t, tr) for tr in traces])
    if eye.bits is not None:
        ones = at_centre[eye.bits == 1]
        zeros = at_centre[eye.bits == 0]
    else:
        ones = at_centre[at_centre >= thr]
        zeros = at_centre[at_centre < thr]
    if not len(ones) or not len(zeros):
        raise ModelError('eye needs traces at both logic levels')
    height = float(np.clip(np.min(ones) - np.max(zeros), 0.0, eye.vdd))

    band = EYE_BAND * eye.vdd
    inside = np.any(np.abs(traces - thr) <= band, axis=0)
    # a trace jumping across the whole band between samples also closes the eye
    side = np.sign(traces - thr)
    jumped = np.any(side[:, 1:] * side[:, :-1] < 0, axis=0)
    closed = inside.copy()
    closed[:-1] |= jumped
    closed[1:] |= jumped

    ci = int(np.argmin(np.abs(t - centre)))
    if closed[ci] or height == 0:
        width = 0.0
    else:
        left = ci
        while left > 0 and not closed[left - 1]:
            left -= 1
        right = ci
        while right < len(t) - 1 and not closed[right + 1]:
            right += 1
        width = float(min(t[right] - t[left], ui))
    return EyeMetrics(height=height, width=width, jitter=jitter, center=centre)


def eye_for_generation(tech, cfg=None, length=None, params=None):
    """Extract a generation's channel (optionally re-lengthed) and run the eye."""
    cfg = cfg or DslConfig()
    par = extract_channel(tech, params, length_override=length)
    channel_length = tech.wire.length if length is None else length
    eye = simulate_eye(par, cfg, length=channel_length)
    return eye, eye_metrics(eye)


def eye_cell(args):
    """(eye, metrics) for one (tech, cfg, length, params) grid point."""
    tech, cfg, length, params = args
    return eye_for_generation(tech, cfg, length, params)


def length_sweep(tech, lengths, cfg=None, params=None, workers=1):
    cfg = cfg or DslConfig()
    cells = run_ordered(eye_cell, [(tech, cfg, l, params) for l in lengths], workers=workers)
    return [metrics for _, metrics in cells]


def generation_sweep(techs, cfg=None, params=None, workers=1):
    cfg = cfg or DslConfig()
    cells = run_ordered(eye_cell, [(t, cfg, None, params) for t in techs], workers=workers)
    return [metrics for _, metrics in cells]
