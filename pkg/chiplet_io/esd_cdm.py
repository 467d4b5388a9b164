# coding=utf-8
"""Charged-device-model bench: a precharged package capacitance discharging
through the channel and pad into an antiparallel clamp pair that guards a
receiver gate.

    cap --R_pkg-- n1 --L_pkg-- pad --R_pad-- clamp --R_gate-- gate
     |                          |             |                |
   C_pkg (ic = +/-V)          C_pad     D_up / D_down        C_gate
     |                          |             |                |
    gnd                        gnd           gnd              gnd
"""
import math
import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.optimize import brentq

from .extraction import ChannelParasitics, extract_channel, reference_parasitics
from .lib import alert_queue
from .lib.sweep_pool import run_ordered
from .mna import Circuit, DiodeModel, TransientConfig, stored_energy, transient
from .techlib import MICRO_BUMP, REFERENCE_DIODE_AREAS_UM2, builtin_generation
from .utils import ModelError

_logger = logging.getLogger('chiplet_io.esd')

DIODE_MODEL_NAME = 'dclamp'
POLARITIES = {'+': (1.0,), '-': (-1.0,), 'both': (1.0, -1.0)}

STEPS_PER_PERIOD = 50
MIN_PERIODS = 5
# stored energy must fall to this fraction of its initial value, or stop
# changing by more than this fraction over one package period
ENERGY_FLOOR = 1e-3
# stop-time doublings before giving up on the energy criterion
MAX_EXTENSIONS = 4
# timestep divisor for the rerun around the gate peak
PEAK_REFINE = 10

CALIBRATION_AREA_UM2 = 51.8
CALIBRATION_TARGET_V = 125.0
CALIBRATION_GEN = 0


@dataclass(frozen=True)
class CdmBench:
    target_v: float
    parasitics: ChannelParasitics
    area_um2: float = 0.0
    diode: DiodeModel = field(default_factory=DiodeModel)
    c_gate: float = 15e-15
    r_gate: float = 50.0
    v_bd: float = 3.8
    polarity: str = 'both'

    def __post_init__(self):
        if self.target_v < 0:
            raise ModelError('CDM target voltage must be >= 0')
        if self.area_um2 < 0:
            raise ModelError('diode area must be >= 0')
        if not (self.c_gate > 0 and self.v_bd > 0 and self.r_gate > 0):
            raise ModelError('gate capacitance, gate resistance and breakdown voltage must be > 0')
        if self.polarity not in POLARITIES:
            raise ModelError("polarity must be one of {}".format(', '.join(POLARITIES)))
        if not (self.parasitics.C_pkg > 0 and self.parasitics.L_pkg > 0):
            raise ModelError('CDM bench needs a positive package capacitance and inductance')

    def with_area(self, area_um2):
        return replace(self, area_um2=area_um2)


@dataclass(frozen=True)
class DiodeSizingResult:
    area_um2: float
    history: Tuple[Tuple[float, float], ...]
    peak_v: float
    no_protection: bool = False


def build_cdm_circuit(b):
    """One circuit per simulated polarity; they differ only in the sign of
    the package precharge."""
    return [_cdm_circuit(b, sign) for sign in POLARITIES[b.polarity]]


def _cdm_circuit(b, sign):
    p = b.parasitics
    c = Circuit()
    c.add_capacitor('cap', '0', p.C_pkg, name='C_pkg')
    c.set_ic('cap', sign * b.target_v)

    node = 'cap'
    if p.R_pkg > 0:
        c.add_resistor(node, 'n1', p.R_pkg, name='R_pkg')
        node = 'n1'
    c.add_inductor(node, 'pad', p.L_pkg, name='L_pkg')
    if p.C_pad > 0:
        c.add_capacitor('pad', '0', p.C_pad, name='C_pad')
    node = 'pad'
    if p.R_pad > 0:
        c.add_resistor('pad', 'clamp', p.R_pad, name='R_pad')
        node = 'clamp'
    if b.area_um2 > 0:
        c.add_model(DIODE_MODEL_NAME, b.diode)
        half = b.area_um2 / 2
        c.add_diode(node, '0', DIODE_MODEL_NAME, area=half, name='D_up')
        c.add_diode('0', node, DIODE_MODEL_NAME, area=half, name='D_down')
    c.add_resistor(node, 'gate', b.r_gate, name='R_gate')
    c.add_capacitor('gate', '0', b.c_gate, name='C_gate')
    return c


def package_period(p):
    return 2 * math.pi * math.sqrt(p.L_pkg * p.C_pkg)


def timing(b):
    """(dt, stop) for a bench.

    The clamped bench rings at the package LC. Unclamped, the pad and gate
    capacitance sits in series with C_pkg and rings faster, so dt follows
    that combination. stop is a first guess: simulate_bench extends it until
    the stored energy has decayed.
    """
    p = b.parasitics
    period = package_period(p)
    if b.area_um2 > 0:
        c_eff = p.C_pkg
    else:
        c_load = p.C_pad + b.c_gate
        c_eff = p.C_pkg * c_load / (p.C_pkg + c_load)
    dt = 2 * math.pi * math.sqrt(p.L_pkg * c_eff) / STEPS_PER_PERIOD
    alpha = (p.R_pkg + p.R_pad) / (2 * p.L_pkg)
    stop = MIN_PERIODS * period
    if alpha > 0:
        stop = max(stop, math.log(1.0 / ENERGY_FLOOR) / (2 * alpha))
    return dt, stop


def energy_settled(energy, window):
    """True once the stored energy is below ENERGY_FLOOR of its start, or has
    stopped falling: charge trapped behind an absent or sub-knee clamp."""
    if energy[0] <= 0 or energy[-1] <= ENERGY_FLOOR * energy[0]:
        return True
    window = min(window, len(energy) - 1)
    return energy[-1 - window] - energy[-1] <= ENERGY_FLOOR * energy[-1]


def _discharge(circuit, dt, stop, window):
    for _ in range(MAX_EXTENSIONS + 1):
        w = transient(circuit, TransientConfig(stop=stop, dt=dt), kind='cdm')
        if energy_settled(stored_energy(circuit, w), window):
            return w
        stop *= 2
    _logger.warning('CDM discharge still losing energy at {:.3g} s; peak taken from a truncated run'.format(
        w.time[-1]))
    return w


def _runs(b):
    dt, stop = timing(b)
    window = max(1, int(round(package_period(b.parasitics) / dt)))
    for sign, circuit in zip(POLARITIES[b.polarity], build_cdm_circuit(b)):
        yield sign, circuit, _discharge(circuit, dt, stop, window)


def simulate_bench(b):
    """Waveforms for every simulated polarity, sign first. Every node and the
    package inductor current are recorded."""
    return [(sign, w) for sign, _, w in _runs(b)]


def refined_peak(circuit, w, node='gate'):
    """Peak |v(node)| of a run, sharpened by rerunning up to just past the
    sampled maximum at a finer step and fitting a parabola through the top
    three fine samples. Never below the sampled maximum."""
    v = np.abs(w.voltages[node])
    k = int(np.argmax(v))
    coarse = float(v[k])
    if k == 0:
        return coarse
    stop = float(w.time[min(k + 2, len(v) - 1)])
    fine = transient(circuit, TransientConfig(stop=stop, dt=w.dt / PEAK_REFINE), [node], kind='cdm')
    f = np.abs(fine.voltages[node])
    j = int(np.argmax(f))
    peak = float(f[j])
    if 0 < j < len(f) - 1:
        y0, y1, y2 = f[j - 1], f[j], f[j + 1]
        curvature = y0 - 2 * y1 + y2
        if curvature < 0:
            peak = max(peak, float(y1 - (y0 - y2) ** 2 / (8 * curvature)))
    return max(coarse, peak)


def peak_gate_voltage(b):
    """Worst-polarity peak |v(gate)|."""
    if b.target_v == 0:
        return 0.0
    return max(refined_peak(circuit, w) for _, circuit, w in _runs(b))



def min_diode_area(b, area_lo=0.0, area_hi=1e4, tol=0.01):
    """Smallest total clamp area keeping the gate below V_bd, by bisection.

    Relies on the gate peak being non-increasing in area.
    """
    if not 0 <= area_lo < area_hi:
        raise ModelError('need 0 <= area_lo < area_hi')
    history = []

    def peak(area):
        v = peak_gate_voltage(b.with_area(area))
        history.append((area, v))
        _logger.debug('CDM {:.1f} V area {:.4f} um^2 -> peak {:.4f} V'.format(b.target_v, area, v))
        return v

    v_lo = peak(area_lo)
    if v_lo < b.v_bd:
        return DiodeSizingResult(area_lo, tuple(history), v_lo, no_protection=area_lo == 0)

    v_hi = peak(area_hi)
    if v_hi >= b.v_bd:
        raise ModelError(
            'gate peak {:.3f} V >= {:.2f} V even at {:.4g} um^2; raise area_hi or lower the {:.4g} V target'.format(
                v_hi, b.v_bd, area_hi, b.target_v))

    lo, hi = area_lo, area_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        v_mid = peak(mid)
        if v_mid < b.v_bd:
            hi, v_hi = mid, v_mid
        else:
            lo = mid
    return DiodeSizingResult(hi, tuple(history), v_hi)


def bench_parasitics(tech, source=None, params=None, length_override=None):
    """Micro-bump benches default to the published parameter table, hybrid
    bonds (which have none) to extraction."""
    if source is None or source == 'auto':
        source = 'reference' if tech.kind == MICRO_BUMP and tech.is_builtin and length_override is None else 'extracted'
    if source == 'reference':
        if tech.kind != MICRO_BUMP or tech.index is None:
            raise ModelError('reference parasitics exist only for built-in micro-bump generations')
        return reference_parasitics(tech.index, params)
    if source != 'extracted':
        raise ModelError("parasitics source must be 'reference' or 'extracted', got '{}'".format(source))
    return extract_channel(tech, params, length_override=length_override)


def calibrate_diode_model(js=1e-12, n=1.0, vt=0.02585, anchor_area=CALIBRATION_AREA_UM2,
                          target_v=CALIBRATION_TARGET_V, gen=CALIBRATION_GEN, c_gate=15e-15, r_gate=50.0,
                          v_bd=3.8, rs_bracket=(1.0, 500.0), tol=0.01):
    """Series resistance r_s making the micro-bump anchor generation need
    exactly anchor_area at target_v. Simulates one polarity: the clamp pair
    is symmetric."""
    return _calibrate(float(js), float(n), float(vt), float(anchor_area), float(target_v), int(gen),
                      float(c_gate), float(r_gate), float(v_bd), tuple(rs_bracket), float(tol))


@lru_cache(maxsize=16)
def _calibrate(js, n, vt, anchor_area, target_v, gen, c_gate, r_gate, v_bd, rs_bracket, tol):
    par = reference_parasitics(gen)

    def excess(rs):
        bench = CdmBench(target_v, par, diode=DiodeModel(js=js, n=n, vt=vt, rs=rs),
                         c_gate=c_gate, r_gate=r_gate, v_bd=v_bd, polarity='+')
        area = min_diode_area(bench, tol=tol).area_um2
        _logger.debug('calibration r_s={:.4f} ohm*um^2 -> {:.3f} um^2'.format(rs, area))
        return area - anchor_area

    lo, hi = rs_bracket
    f_lo, f_hi = excess(lo), excess(hi)
    if f_lo * f_hi > 0:
        raise ModelError('calibration bracket r_s in [{}, {}] does not straddle {} um^2'.format(lo, hi, anchor_area))
    rs = brentq(excess, lo, hi, xtol=1e-3)
    _logger.info('Calibrated clamp diode: r_s = {:.3f} ohm*um^2 ({} um^2 at {} V, gen {})'.format(
        rs, anchor_area, target_v, gen))
    return DiodeModel(js=js, n=n, vt=vt, rs=rs)


def _size_cell(args):
    bench, area_hi, tol = args
    return min_diode_area(bench, area_hi=area_hi, tol=tol)


def sizing_table(generations=range(6), targets=(10.0, 30.0, 50.0, 125.0), diode=None, source=None,
                 params=None, c_gate=15e-15, r_gate=50.0, v_bd=3.8, polarity='both',
                 area_hi=1e4, tol=0.01, workers=1):
    """Minimum clamp area over a (target, generation) grid with the published
    areas and percent deviations alongside. Rows are target-major."""
    diode = diode or calibrate_diode_model(c_gate=c_gate, r_gate=r_gate, v_bd=v_bd)
    techs = [builtin_generation(MICRO_BUMP, g) for g in generations]
    grid = [(float(v), t) for v in targets for t in techs]
    cells = [(CdmBench(v, bench_parasitics(t, source, params), diode=diode, c_gate=c_gate,
                       r_gate=r_gate, v_bd=v_bd, polarity=polarity), area_hi, tol) for v, t in grid]
    results = run_ordered(_size_cell, cells, workers=workers)

    rows = []
    previous = {}
    for (v, tech), res in zip(grid, results):
        published = REFERENCE_DIODE_AREAS_UM2.get(v)
        published_area = published[tech.index] if published is not None and tech.index < len(published) else None
        row = dict(
            target_v=v,
            gen=tech.index,
            area_um2=res.area_um2,
            peak_v=res.peak_v,
            no_protection=res.no_protection,
            published_area_um2=published_area,
            deviation_pct=None if published_area is None else 100.0 * (res.area_um2 - published_area) / published_area,
            trend=None,
        )
        prev = previous.get(v)
        if prev is not None:
            row['trend'] = 'down' if res.area_um2 < prev else ('up' if res.area_um2 > prev else 'flat')
        previous[v] = res.area_um2
        if row['deviation_pct'] is not None and abs(row['deviation_pct']) > 35.0:
            alert_queue.add_alert(dict(
                level='warning',
                cause='sizing_deviation',
                text='gen {} at {:g} V: {:.2f} um^2 vs published {:.2f} um^2 ({:+.1f}%)'.format(
                    tech.index, v, res.area_um2, published_area, row['deviation_pct']),
            ))
        rows.append(row)
    return rows


def check_bench(b):
    """(passed, peak) for a fixed clamp area; area 0 is the no-diode check."""
    peak = peak_gate_voltage(b)
    return peak < b.v_bd, peak
