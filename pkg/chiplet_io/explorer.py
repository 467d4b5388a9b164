# coding=utf-8
"""Analytical area and bandwidth models for chiplet I/O: clamp area per pad,
bump-array footprint of AIB and DSL interfaces, and supply-vs-demand data
rate over chiplet edge length."""
import math
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from .esd_cdm import CdmBench, bench_parasitics, calibrate_diode_model, min_diode_area
from .lib.sweep_pool import run_ordered
from .techlib import HYBRID_BOND
from .utils import ModelError

_logger = logging.getLogger('chiplet_io.explorer')

# slack on edge/pitch so that an exact multiple is not lost to rounding
_COLUMN_EPS = 1e-9


@dataclass(frozen=True)
class IoProtocolModel:
    name: str
    bumps_per_channel: int
    wires_per_channel: int
    rate_gbps: float
    max_channels: Optional[int] = None
    pitch_um: float = 10.0
    rows: int = 6
    # PHY circuitry placed beside the bumps, per channel
    cell_area_um2: float = 0.0

    def __post_init__(self):
        if self.bumps_per_channel < 1 or self.wires_per_channel < 1 or self.rows < 1:
            raise ModelError('{}: bump, wire and row counts must be >= 1'.format(self.name))
        if not (self.rate_gbps > 0 and self.pitch_um > 0):
            raise ModelError('{}: data rate and bump pitch must be > 0'.format(self.name))
        if self.max_channels is not None and self.max_channels < 1:
            raise ModelError('{}: max_channels must be >= 1'.format(self.name))
        if self.cell_area_um2 < 0:
            raise ModelError('{}: cell area must be >= 0'.format(self.name))


# 20 TX + 20 RX data wires over 88 bumps, 24 channels per column
AIB = IoProtocolModel('AIB', bumps_per_channel=88, wires_per_channel=40, rate_gbps=2.0,
                      max_channels=24, pitch_um=10.0, rows=6, cell_area_um2=150000.0)
# 4 signal bumps + 1 ground, drivers sit under the bumps
DSL = IoProtocolModel('DSL', bumps_per_channel=5, wires_per_channel=4, rate_gbps=1.0,
                      max_channels=None, pitch_um=10.0, rows=8, cell_area_um2=0.0)

PROTOCOLS = {'aib': AIB, 'dsl': DSL}


@dataclass(frozen=True)
class ComputeModel:
    node: str
    mac_density_per_mm2: float
    clock_hz: float
    bytes_per_mac: float

    def __post_init__(self):
        if self.mac_density_per_mm2 < 0 or self.clock_hz <= 0 or self.bytes_per_mac < 0:
            raise ModelError('compute model needs density >= 0, clock > 0 and bytes per MAC >= 0')

    @property
    def gbps_per_mm2(self):
        return self.mac_density_per_mm2 * self.clock_hz * self.bytes_per_mac * 8 / 1e9


LEGACY_COMPUTE = ComputeModel('28nm', mac_density_per_mm2=2250.0, clock_hz=0.5e9, bytes_per_mac=0.002)
ADVANCED_COMPUTE = ComputeModel('7nm', mac_density_per_mm2=36250.0, clock_hz=1e9, bytes_per_mac=0.001)


@dataclass(frozen=True)
class ProtocolPoint:
    channels: int
    area_mm2: float
    bandwidth_gbps: float
    demand_gbps: float
    supported: bool


@dataclass(frozen=True)
class ExploreResult:
    edge_mm: float
    demand_gbps: float
    protocols: Dict[str, ProtocolPoint] = field(default_factory=dict)

    def as_row(self):
        row = dict(edge_mm=self.edge_mm)
        for key in ('area_mm2', 'bw_gbps'):
            for name, pt in self.protocols.items():
                row['{}_{}'.format(name.lower(), key)] = pt.area_mm2 if key == 'area_mm2' else pt.bandwidth_gbps
        row['demand_gbps'] = self.demand_gbps
        for name, pt in self.protocols.items():
            row['{}_supported'.format(name.lower())] = pt.supported
        return row


@dataclass(frozen=True)
class SupportRange:
    protocol: str
    intervals: Tuple[Tuple[float, float], ...]

    @property
    def min_edge(self):
        return self.intervals[0][0] if self.intervals else None

    @property
    def max_edge(self):
        return self.intervals[-1][1] if self.intervals else None

    @property
    def is_interval(self):
        return len(self.intervals) <= 1


def esd_area_per_pad(tech, target_v, diode=None, source=None, **bench_kw):
    """Minimum total clamp area for one pad. Hybrid bonds carry no clamp."""
    if tech.kind == HYBRID_BOND:
        return 0.0
    diode = diode or calibrate_diode_model()
    area_hi = bench_kw.pop('area_hi', 1e4)
    tol = bench_kw.pop('tol', 0.01)
    bench = CdmBench(float(target_v), bench_parasitics(tech, source), diode=diode, **bench_kw)
    return min_diode_area(bench, area_hi=area_hi, tol=tol).area_um2


def _esd_cell(args):
    tech, target_v, diode, source, bench_kw = args
    return esd_area_per_pad(tech, target_v, diode, source, **dict(bench_kw))


def esd_per_pad_table(techs, targets, diode=None, source=None, workers=1, **bench_kw):
    diode = diode or calibrate_diode_model()
    grid = [(t, float(v)) for t in techs for v in targets]
    areas = run_ordered(_esd_cell, [(t, v, diode, source, tuple(bench_kw.items())) for t, v in grid],
                        workers=workers)
    return [dict(kind=t.kind, gen=t.index, target_v=v, area_um2=a) for (t, v), a in zip(grid, areas)]


def channel_count(proto, edge_mm, edges_used=1):
    if edge_mm < 0:
        raise ModelError('edge length must be >= 0')
    columns = math.floor(edge_mm * 1000.0 / proto.pitch_um + _COLUMN_EPS)
    channels = (columns * proto.rows) // proto.bumps_per_channel
    if proto.max_channels is not None:
        channels = min(channels, proto.max_channels)
    return int(channels) * edges_used


def io_array_area(proto, edge_mm, edges_used=1):
    """(area in mm^2, channels) of the I/O block along the chiplet edge."""
    channels = channel_count(proto, edge_mm, edges_used)
    per_channel = proto.bumps_per_channel * proto.pitch_um ** 2 + proto.cell_area_um2
    return channels * per_channel / 1e6, channels


def supply_bandwidth(proto, edge_mm, edges_used=1):
    return channel_count(proto, edge_mm, edges_used) * proto.wires_per_channel * proto.rate_gbps


def saturation_edge(proto):
    """Smallest edge at which the channel cap binds, or None when uncapped."""
    if proto.max_channels is None:
        return None
    columns = math.ceil(proto.max_channels * proto.bumps_per_channel / proto.rows)
    return columns * proto.pitch_um / 1000.0


def compute_demand(cm, edge_mm, io_area_mm2=0.0):
    """Array data rate in Gb/s when every MAC unit moves data each cycle."""
    chip_area = edge_mm ** 2
    if io_area_mm2 > 0 and io_area_mm2 >= chip_area:
        raise ModelError('I/O consumes entire chiplet: {:.4g} mm^2 of {:.4g} mm^2'.format(io_area_mm2, chip_area))
    return cm.gbps_per_mm2 * (chip_area - io_area_mm2)


def _intervals(edges, flags):
    out = []
    start = prev = None
    for edge, ok in zip(edges, flags):
        if ok:
            if start is None:
                start = edge
            prev = edge
        elif start is not None:
            out.append((start, prev))
            start = None
    if start is not None:
        out.append((start, prev))
    return tuple(out)


def explore(protocols, cm, edges, io_aware=False, edges_used=1):
    """Supply and demand per edge for every protocol, in grid order."""
    if not len(edges):
        raise ModelError('edge grid is empty')
    results = []
    for edge in edges:
        edge = float(edge)
        shared = compute_demand(cm, edge)
        points = {}
        for proto in protocols:
            area, channels = io_array_area(proto, edge, edges_used)
            supply = supply_bandwidth(proto, edge, edges_used)
            demand = shared
            if io_aware:
                try:
                    demand = compute_demand(cm, edge, area)
                except ModelError as e:
                    _logger.debug('{} at {} mm: {}'.format(proto.name, edge, e))
                    demand = float('inf')
            points[proto.name] = ProtocolPoint(channels, area, supply, demand, supply >= demand)
        results.append(ExploreResult(edge, shared, points))
    return results


def supported_range(protocols, cm, edges, io_aware=False, edges_used=1):
    """(results, {protocol: SupportRange}) over the edge grid."""
    if isinstance(protocols, IoProtocolModel):
        protocols = [protocols]
    edges = sorted(float(e) for e in edges)
    results = explore(protocols, cm, edges, io_aware, edges_used)
    ranges = {}
    for proto in protocols:
        flags = [r.protocols[proto.name].supported for r in results]
        ranges[proto.name] = SupportRange(proto.name, _intervals(edges, flags))
        if not ranges[proto.name].is_interval:
            _logger.warning('{} supported set is not an interval: {}'.format(proto.name, ranges[proto.name].intervals))
    return results, ranges


def edge_grid(edge_min_mm, edge_max_mm, step_mm):
    if not (0 < edge_min_mm <= edge_max_mm and step_mm > 0):
        raise ModelError('edge grid needs 0 < min <= max and step > 0')
    n = int(math.floor((edge_max_mm - edge_min_mm) / step_mm + 1e-9)) + 1
    return [round(edge_min_mm + k * step_mm, 9) for k in range(n)]
