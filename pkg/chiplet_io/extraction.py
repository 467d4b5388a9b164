# coding=utf-8
"""Compact-model RLC extraction for substrate channels and bump pads."""
import math
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

from scipy.constants import epsilon_0, mu_0

from .techlib import (
    MICRO_BUMP, HYBRID_BOND, REFERENCE_PARASITICS, list_generations,
)
from .utils import ModelError
from .lib import alert_queue

_logger = logging.getLogger('chiplet_io.extraction')

# Every micro-bump generation has W = S and T = H = 2W; its capacitance per
# length is pinned to this value through eps_eff.
CAL_C_PER_LENGTH = 259.2e-15 / 1e-3
CAL_RATIOS = dict(w_h=0.5, s_h=0.5, t_h=1.0)

# percent deviation beyond which a reference comparison raises an alert
DEVIATION_ALERT_PCT = 1.0
DEVIATION_KEYS = ('C_pkg_fF', 'R_pkg_ohm', 'L_pkg_nH', 'C_pad_fF', 'R_pad_mohm')


def _ground_coeff(w_h, t_h):
    return 1.15 * w_h + 2.80 * t_h ** 0.222


def _coupling_coeff(w_h, s_h, t_h):
    return (0.03 * w_h + 0.83 * t_h - 0.07 * t_h ** 0.222) * s_h ** -1.34


@lru_cache(maxsize=None)
def calibrate_eps_eff(c_per_length=CAL_C_PER_LENGTH):
    """Relative permittivity making the W=S, T=H=2W family hit c_per_length."""
    r = CAL_RATIOS
    shape = _ground_coeff(r['w_h'], r['t_h']) + 2.0 * _coupling_coeff(r['w_h'], r['s_h'], r['t_h'])
    return c_per_length / (epsilon_0 * shape)


@dataclass(frozen=True)
class ExtractionParams:
    rho_wire: float = 2.2e-8
    rho_bump: float = 1.1e-7
    eps_eff: float = field(default_factory=calibrate_eps_eff)
    k_d: float = 0.5
    k_h: float = 4.0 / 7.0
    kappa_pad: float = 8.444e-11
    # copper-copper bonds: no solder column, so a squatter pad in wire copper
    hybrid_k_d: float = 0.5
    hybrid_k_h: float = 0.5
    # forces C_couple = couple_share * C_total instead of the compact-model split
    couple_share: Optional[float] = None

    def __post_init__(self):
        for name in ('rho_wire', 'rho_bump', 'eps_eff', 'k_d', 'k_h', 'kappa_pad', 'hybrid_k_d', 'hybrid_k_h'):
            if not getattr(self, name) > 0:
                raise ModelError('extraction parameter {} must be > 0'.format(name))
        if not (self.k_d < 1 and self.hybrid_k_d < 1):
            raise ModelError('bump diameter ratio must be < 1')
        if self.couple_share is not None and not 0 <= self.couple_share <= 1:
            raise ModelError('couple_share must lie in [0, 1]')


@dataclass(frozen=True)
class ChannelParasitics:
    C_pkg: float
    R_pkg: float
    L_pkg: float
    C_pad: float
    R_pad: float
    C_couple: float = 0.0

    def __post_init__(self):
        for name in ('C_pkg', 'R_pkg', 'L_pkg', 'C_pad', 'R_pad', 'C_couple'):
            if getattr(self, name) < 0:
                raise ModelError('{} must be >= 0'.format(name))
        if self.C_couple > self.C_pkg * (1 + 1e-12):
            raise ModelError('C_couple ({}) exceeds C_pkg ({})'.format(self.C_couple, self.C_pkg))

    def as_row(self):
        """Values in the units of the published parameter table."""
        return dict(
            C_pkg_fF=self.C_pkg * 1e15,
            R_pkg_ohm=self.R_pkg,
            L_pkg_nH=self.L_pkg * 1e9,
            C_pad_fF=self.C_pad * 1e15,
            R_pad_mohm=self.R_pad * 1e3,
            C_couple_fF=self.C_couple * 1e15,
        )


def wire_resistance(g, p):
    return p.rho_wire * g.length / (g.width * g.thickness)


def wire_inductance(g):
    """Partial self-inductance of a rectangular bar of length l."""
    l = g.length
    if l == 0:
        return 0.0
    wt = g.width + g.thickness
    if l <= wt:
        raise ModelError('inductance model out of regime: length {:.3e} m <= W+T {:.3e} m'.format(l, wt))
    return mu_0 / (2 * math.pi) * l * (math.log(2 * l / wt) + 0.5 + 0.2235 * wt / l)


def wire_capacitance(g, p):
    """(C_total, C_couple) for a line with a neighbour on each side.

    C_total = (Cg + 2 Cc) L, C_couple = Cc L is the share to one neighbour.
    """
    w_h = g.width / g.height
    s_h = g.spacing / g.height
    t_h = g.thickness / g.height
    eps = epsilon_0 * p.eps_eff
    c_ground = eps * _ground_coeff(w_h, t_h) * g.length
    c_couple = eps * _coupling_coeff(w_h, s_h, t_h) * g.length
    c_total = c_ground + 2 * c_couple
    if p.couple_share is not None:
        c_couple = p.couple_share * c_total
    return c_total, c_couple


def bump_parasitics(pad, p):
    """(R_pad, C_pad) of a cylindrical bump: diameter k_d P, height k_h P."""
    if pad.kind == HYBRID_BOND:
        rho, k_d, k_h = p.rho_wire, p.hybrid_k_d, p.hybrid_k_h
    else:
        rho, k_d, k_h = p.rho_bump, p.k_d, p.k_h
    radius = k_d * pad.pitch / 2
    r_pad = rho * (k_h * pad.pitch) / (math.pi * radius ** 2)
    c_pad = p.kappa_pad * pad.pitch
    return r_pad, c_pad


def extract_channel(tech, p=None, length_override=None):
    p = p or ExtractionParams()
    if length_override is not None:
        tech = tech.with_length(length_override)
    wire = tech.wire
    c_total, c_couple = wire_capacitance(wire, p)
    r_pad, c_pad = bump_parasitics(tech.pad, p)
    par = ChannelParasitics(
        C_pkg=c_total,
        R_pkg=wire_resistance(wire, p),
        L_pkg=wire_inductance(wire),
        C_pad=c_pad,
        R_pad=r_pad,
        C_couple=c_couple,
    )
    _logger.debug('Extracted {} (L={:.3e} m): {}'.format(tech.label, wire.length, par))
    return par


def reference_parasitics(index, p=None):
    """Published micro-bump parameters for a generation, in SI units.

    The table has no coupling column; C_couple takes the compact-model share.
    """
    if not 0 <= index < len(REFERENCE_PARASITICS):
        raise ModelError('no reference parasitics for micro-bump generation {} (range 0..{})'.format(
            index, len(REFERENCE_PARASITICS) - 1))
    p = p or ExtractionParams()
    c_pkg, r_pkg, l_pkg, c_pad, r_pad = REFERENCE_PARASITICS[index]
    share = p.couple_share
    if share is None:
        r = CAL_RATIOS
        cc = _coupling_coeff(r['w_h'], r['s_h'], r['t_h'])
        share = cc / (_ground_coeff(r['w_h'], r['t_h']) + 2 * cc)
    return ChannelParasitics(
        C_pkg=c_pkg * 1e-15,
        R_pkg=r_pkg,
        L_pkg=l_pkg * 1e-9,
        C_pad=c_pad * 1e-15,
        R_pad=r_pad * 1e-3,
        C_couple=share * c_pkg * 1e-15,
    )


def deviation_pct(value, reference):
    return 100.0 * (value - reference) / reference


def deviation_report(rows, p=None):
    """Per-row percent deviation of every extracted quantity from the
    published micro-bump table. Rows without a published counterpart are
    skipped."""
    report = []
    for row in rows:
        gen = row.get('gen')
        if gen is None or not 0 <= gen < len(REFERENCE_PARASITICS):
            continue
        ref = reference_parasitics(gen, p).as_row()
        report.append(dict(gen=gen, **{
            key + '_dev_pct': deviation_pct(row[key], ref[key]) for key in DEVIATION_KEYS}))
    return report


def extraction_table(kind=MICRO_BUMP, p=None):
    """One row per built-in generation, with deviations against the
    published table for micro-bump rows."""
    p = p or ExtractionParams()
    rows = []
    for tech in list_generations(kind):
        par = extract_channel(tech, p)
        row = dict(gen=tech.index, L_mm=tech.wire.length * 1e3)
        row.update(par.as_row())
        rows.append(row)
    if kind != MICRO_BUMP:
        return rows

    for row, dev in zip(rows, deviation_report(rows, p)):
        for key in DEVIATION_KEYS:
            value = dev[key + '_dev_pct']
            row[key + '_dev_pct'] = value
            if abs(value) > DEVIATION_ALERT_PCT:
                alert_queue.add_alert(dict(
                    level='info',
                    cause='extraction_deviation',
                    text='gen {} {} = {:.4g} vs published ({:+.1f}%)'.format(row['gen'], key, row[key], value),
                ))
    return rows
