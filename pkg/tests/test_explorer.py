import pytest

from chiplet_io.explorer import (
    ADVANCED_COMPUTE, AIB, DSL, LEGACY_COMPUTE, PROTOCOLS, ComputeModel, ExploreResult, IoProtocolModel,
    ProtocolPoint, SupportRange, channel_count, compute_demand, edge_grid, esd_area_per_pad, esd_per_pad_table,
    explore, io_array_area, saturation_edge, supply_bandwidth, supported_range,
)
from chiplet_io.techlib import HYBRID_BOND, MICRO_BUMP, builtin_generation
from chiplet_io.utils import ModelError


def test_footprint_at_2mm():
    area, channels = io_array_area(AIB, 2.0)
    assert channels == 13
    assert area == pytest.approx(2.0644)
    assert supply_bandwidth(AIB, 2.0) == 1040

    area, channels = io_array_area(DSL, 2.0)
    assert channels == 320
    assert area == pytest.approx(0.16)
    assert supply_bandwidth(DSL, 2.0) == 1280


def test_aib_column_saturates():
    assert saturation_edge(AIB) == pytest.approx(3.52)
    assert saturation_edge(DSL) is None
    assert channel_count(AIB, 3.51) == 23
    assert channel_count(AIB, 3.52) == 24
    for edge in (4.0, 8.0, 12.0):
        assert channel_count(AIB, edge) == 24
        assert supply_bandwidth(AIB, edge) == 1920


def test_dsl_bandwidth_grows_with_edge():
    assert [channel_count(DSL, e) for e in (1.0, 2.0, 4.0, 8.0)] == [160, 320, 640, 1280]
    assert supply_bandwidth(DSL, 12.0) == 2 * supply_bandwidth(DSL, 6.0)


def test_exact_pitch_multiples_are_not_lost():
    assert channel_count(DSL, 0.3) == 48
    assert channel_count(DSL, 2.2) == 352


def test_dsl_array_smaller_than_aib():
    for edge in edge_grid(0.5, 12.0, 0.5):
        assert io_array_area(DSL, edge)[0] <= io_array_area(AIB, edge)[0]


def test_aib_array_is_much_larger_on_small_chiplets():
    for edge in edge_grid(0.5, 2.0, 0.1):
        assert io_array_area(AIB, edge)[0] >= 8 * io_array_area(DSL, edge)[0]


def test_aib_area_flat_beyond_saturation():
    areas = {io_array_area(AIB, edge)[0] for edge in edge_grid(4.1, 12.0, 0.1)}
    assert len(areas) == 1


def test_edges_used_multiplies_the_array():
    area1, ch1 = io_array_area(AIB, 2.0)
    area2, ch2 = io_array_area(AIB, 2.0, edges_used=2)
    assert ch2 == 2 * ch1
    assert area2 == pytest.approx(2 * area1)
    assert supply_bandwidth(DSL, 2.0, edges_used=4) == 4 * 1280


def test_negative_edge_rejected():
    with pytest.raises(ModelError):
        channel_count(AIB, -1.0)
    assert channel_count(AIB, 0.0) == 0


def test_compute_presets():
    assert LEGACY_COMPUTE.gbps_per_mm2 == pytest.approx(18.0)
    assert ADVANCED_COMPUTE.gbps_per_mm2 == pytest.approx(290.0)
    assert compute_demand(ADVANCED_COMPUTE, 2.0) == pytest.approx(1160.0)


def test_io_aware_demand():
    assert compute_demand(LEGACY_COMPUTE, 2.0, io_area_mm2=1.0) == pytest.approx(18.0 * 3.0)
    with pytest.raises(ModelError, match='I/O consumes entire chiplet'):
        compute_demand(LEGACY_COMPUTE, 0.5, io_area_mm2=0.25)


def test_legacy_node_supports_aib_to_about_10mm():
    _, ranges = supported_range([AIB, DSL], LEGACY_COMPUTE, edge_grid(0.5, 12.0, 0.1))
    assert ranges['AIB'].intervals == ((0.5, 10.3),)
    assert ranges['DSL'].intervals == ((0.5, 12.0),)


def test_advanced_node_limits():
    results, ranges = supported_range([AIB, DSL], ADVANCED_COMPUTE, edge_grid(0.5, 6.0, 0.1))
    assert ranges['DSL'].max_edge == pytest.approx(2.2)
    assert ranges['AIB'].max_edge == pytest.approx(1.8)
    assert ranges['AIB'].is_interval and ranges['DSL'].is_interval
    at_2mm = next(r for r in results if r.edge_mm == pytest.approx(2.0))
    assert at_2mm.demand_gbps == pytest.approx(1160.0)
    assert not at_2mm.protocols['AIB'].supported
    assert at_2mm.protocols['DSL'].supported


def test_single_protocol_range():
    _, ranges = supported_range(DSL, ADVANCED_COMPUTE, [2.3, 0.5, 1.0])
    assert list(ranges) == ['DSL']
    assert ranges['DSL'].intervals == ((0.5, 1.0),)


def test_io_aware_marks_overfull_chiplets_unsupported():
    results = explore([AIB], LEGACY_COMPUTE, [0.5, 2.0], io_aware=True)
    assert results[0].protocols['AIB'].demand_gbps == float('inf')
    assert not results[0].protocols['AIB'].supported
    point = results[1].protocols['AIB']
    assert point.demand_gbps == pytest.approx(18.0 * (4.0 - 2.0644))
    assert results[1].demand_gbps == pytest.approx(72.0)


def test_explore_row_order():
    (result,) = explore([AIB, DSL], ADVANCED_COMPUTE, [2.0])
    row = result.as_row()
    assert list(row) == ['edge_mm', 'aib_area_mm2', 'dsl_area_mm2', 'aib_bw_gbps', 'dsl_bw_gbps', 'demand_gbps',
                         'aib_supported', 'dsl_supported']
    assert row['aib_supported'] is False and row['dsl_supported'] is True
    with pytest.raises(ModelError, match='empty'):
        explore([AIB], ADVANCED_COMPUTE, [])


def test_non_interval_support_is_reported():
    point = ProtocolPoint(1, 0.1, 10.0, 5.0, True)
    assert ExploreResult(1.0, 5.0, {'X': point}).as_row()['x_supported'] is True
    gap = SupportRange('X', ((0.5, 1.0), (2.0, 3.0)))
    assert not gap.is_interval
    assert (gap.min_edge, gap.max_edge) == (0.5, 3.0)
    empty = SupportRange('X', ())
    assert empty.is_interval and empty.min_edge is None


def test_edge_grid():
    grid = edge_grid(0.5, 1.0, 0.1)
    assert grid == [0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
    assert len(edge_grid(0.5, 12.0, 0.1)) == 116
    with pytest.raises(ModelError):
        edge_grid(1.0, 0.5, 0.1)
    with pytest.raises(ModelError):
        edge_grid(0.5, 1.0, 0.0)


@pytest.mark.parametrize('kw', [
    dict(bumps_per_channel=0),
    dict(rate_gbps=0.0),
    dict(max_channels=0),
    dict(cell_area_um2=-1.0),
])
def test_protocol_invariants(kw):
    args = dict(name='X', bumps_per_channel=5, wires_per_channel=4, rate_gbps=1.0)
    args.update(kw)
    with pytest.raises(ModelError):
        IoProtocolModel(**args)


def test_compute_invariants():
    with pytest.raises(ModelError):
        ComputeModel('x', 1.0, 0.0, 1.0)


def test_protocol_registry():
    assert PROTOCOLS == {'aib': AIB, 'dsl': DSL}


def test_hybrid_bond_pads_need_no_clamp():
    assert esd_area_per_pad(builtin_generation(HYBRID_BOND, 2), 125.0) == 0.0


def test_clamp_area_per_pad(calibrated_diode):
    tech = builtin_generation(MICRO_BUMP, 5)
    low = esd_area_per_pad(tech, 10.0, diode=calibrated_diode, polarity='+', tol=0.05)
    high = esd_area_per_pad(tech, 125.0, diode=calibrated_diode, polarity='+', tol=0.05)
    assert 0 < low < high


def test_per_pad_table_rows(calibrated_diode):
    techs = [builtin_generation(HYBRID_BOND, g) for g in range(3)]
    rows = esd_per_pad_table(techs, [5, 10], diode=calibrated_diode)
    assert [(r['gen'], r['target_v']) for r in rows] == [(g, v) for g in range(3) for v in (5.0, 10.0)]
    assert all(r['area_um2'] == 0.0 and r['kind'] == HYBRID_BOND for r in rows)
