import pytest

from chiplet_io.extraction import (
    CAL_C_PER_LENGTH, ChannelParasitics, ExtractionParams, bump_parasitics, deviation_report, extract_channel,
    extraction_table, reference_parasitics, wire_capacitance, wire_inductance, wire_resistance,
)
from chiplet_io.lib import alert_queue
from chiplet_io.techlib import (
    HYBRID_BOND, MICRO_BUMP, REFERENCE_PARASITICS, PadGeometry, WireGeometry, builtin_generation,
)
from chiplet_io.utils import ModelError

P = ExtractionParams()


def ubump(i):
    return builtin_generation(MICRO_BUMP, i)


@pytest.mark.parametrize('gen,ohms', [(0, 7.040), (5, 26.400)])
def test_wire_resistance(gen, ohms):
    assert wire_resistance(ubump(gen).wire, P) == pytest.approx(ohms, rel=1e-9)


def test_zero_length_wire():
    g = WireGeometry(0.0, 1e-6, 1e-6, 2e-6, 2e-6)
    assert wire_resistance(g, P) == 0.0
    assert wire_inductance(g) == 0.0
    assert wire_capacitance(g, P) == (0.0, 0.0)


@pytest.mark.parametrize('gen,nh', [(0, 5.978), (3, 1.242), (5, 0.195)])
def test_wire_inductance(gen, nh):
    assert wire_inductance(ubump(gen).wire) * 1e9 == pytest.approx(nh, rel=5e-3)


def test_inductance_out_of_regime():
    with pytest.raises(ModelError, match='inductance model out of regime'):
        wire_inductance(WireGeometry(2e-6, 1e-6, 1e-6, 2e-6, 2e-6))


@pytest.mark.parametrize('gen,ff', [(3, 233.26), (4, 103.67)])
def test_wire_capacitance(gen, ff):
    c_total, c_couple = wire_capacitance(ubump(gen).wire, P)
    assert c_total * 1e15 == pytest.approx(ff, rel=0.01)
    assert 0 < c_couple < c_total


def test_shared_aspect_ratios_share_capacitance_per_length():
    per_length = [wire_capacitance(ubump(i).wire, P)[0] / ubump(i).wire.length for i in range(6)]
    for value in per_length:
        assert value == pytest.approx(CAL_C_PER_LENGTH, rel=1e-12)


def test_coupling_share_of_compact_model():
    c_total, c_couple = wire_capacitance(ubump(3).wire, P)
    assert c_couple / c_total == pytest.approx(0.2688, abs=5e-4)


def test_forced_coupling_share():
    c_total, c_couple = wire_capacitance(ubump(3).wire, ExtractionParams(couple_share=0.35))
    assert c_couple == pytest.approx(0.35 * c_total)


def test_linear_in_length():
    w = ubump(3).wire
    w2 = WireGeometry(2 * w.length, w.width, w.spacing, w.thickness, w.height)
    assert wire_resistance(w2, P) == pytest.approx(2 * wire_resistance(w, P))
    c, cc = wire_capacitance(w, P)
    c2, cc2 = wire_capacitance(w2, P)
    assert c2 == pytest.approx(2 * c) and cc2 == pytest.approx(2 * cc)
    # the log term makes inductance only nearly linear
    ratio = wire_inductance(w2) / wire_inductance(w)
    assert 2.0 < ratio < 2.0 * 1.15


@pytest.mark.parametrize('pitch_um,mohm,ff', [(70, 4.574, 5.911), (30, 10.673, 2.533)])
def test_bump_parasitics(pitch_um, mohm, ff):
    r_pad, c_pad = bump_parasitics(PadGeometry(pitch_um * 1e-6, MICRO_BUMP), P)
    assert r_pad * 1e3 == pytest.approx(mohm, rel=0.01)
    assert c_pad * 1e15 == pytest.approx(ff, rel=0.01)


def test_bump_scaling_with_pitch():
    r1, c1 = bump_parasitics(PadGeometry(40e-6, MICRO_BUMP), P)
    r2, c2 = bump_parasitics(PadGeometry(20e-6, MICRO_BUMP), P)
    assert r2 == pytest.approx(2 * r1)
    assert c2 == pytest.approx(c1 / 2)


def test_published_table_regression():
    for i in range(6):
        row = extract_channel(ubump(i), P).as_row()
        c_pkg, r_pkg, l_pkg, c_pad, r_pad = REFERENCE_PARASITICS[i]
        assert row['C_pad_fF'] == pytest.approx(c_pad, rel=0.01)
        assert row['R_pad_mohm'] == pytest.approx(r_pad, rel=0.01)
        if i in (0, 3, 4, 5):
            assert row['R_pkg_ohm'] == pytest.approx(r_pkg, rel=5e-3)
            assert row['L_pkg_nH'] == pytest.approx(l_pkg, rel=5e-3)
        if i in (3, 4, 5):
            assert row['C_pkg_fF'] == pytest.approx(c_pkg, rel=0.01)


def test_length_override_scales_resistance():
    base = extract_channel(ubump(5), P)
    long = extract_channel(ubump(5), P, length_override=4e-3)
    assert long.R_pkg / base.R_pkg == pytest.approx(4.0 / 0.15)
    assert long.R_pad == base.R_pad and long.C_pad == base.C_pad


def test_hybrid_gen4_reactive_values_below_micro_bump_gen5():
    hb = extract_channel(builtin_generation(HYBRID_BOND, 4), P)
    ub = extract_channel(ubump(5), P)
    assert hb.C_pkg < ub.C_pkg
    assert hb.L_pkg < ub.L_pkg
    assert hb.C_pad < ub.C_pad
    # thinner copper makes the bond resistances larger, not smaller
    assert hb.R_pkg > ub.R_pkg


def test_reference_parasitics_units():
    par = reference_parasitics(0)
    assert par.C_pkg == pytest.approx(1141.04e-15)
    assert par.R_pkg == pytest.approx(7.04)
    assert par.L_pkg == pytest.approx(5.978e-9)
    assert par.C_pad == pytest.approx(5.911e-15)
    assert par.R_pad == pytest.approx(4.574e-3)
    assert 0 < par.C_couple < par.C_pkg
    with pytest.raises(ModelError, match='range 0..5'):
        reference_parasitics(6)


def test_extraction_table_reports_deviations():
    rows = extraction_table(MICRO_BUMP, P)
    assert len(rows) == 6
    assert abs(rows[1]['R_pkg_ohm_dev_pct']) > 40
    assert abs(rows[0]['R_pkg_ohm_dev_pct']) < 0.5
    causes = {a['cause'] for a in alert_queue.fetch_and_clear()}
    assert causes == {'extraction_deviation'}


def test_hybrid_table_has_no_deviation_columns():
    rows = extraction_table(HYBRID_BOND, P)
    assert len(rows) == 5
    assert not any(k.endswith('_dev_pct') for k in rows[0])


def test_deviation_report_skips_rows_without_reference():
    report = deviation_report([dict(gen=None), dict(extract_channel(ubump(0), P).as_row(), gen=0)])
    assert len(report) == 1
    assert report[0]['gen'] == 0
    assert report[0]['C_pkg_fF_dev_pct'] == pytest.approx(100 * (1036.8 - 1141.04) / 1141.04, rel=1e-6)


def test_parasitics_invariants():
    with pytest.raises(ModelError, match='exceeds C_pkg'):
        ChannelParasitics(C_pkg=1e-15, R_pkg=1, L_pkg=1e-9, C_pad=1e-15, R_pad=1e-3, C_couple=2e-15)
    with pytest.raises(ModelError):
        ChannelParasitics(C_pkg=-1e-15, R_pkg=1, L_pkg=1e-9, C_pad=1e-15, R_pad=1e-3)
    with pytest.raises(ModelError):
        ExtractionParams(k_d=1.5)
