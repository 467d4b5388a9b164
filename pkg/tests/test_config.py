import pytest

from chiplet_io import config
from chiplet_io.config import (
    DEFAULTS, build_run_config, compute_model, diode_model, dsl_config, extraction_params, list_presets,
    load_config, load_preset, merge_config, parse_config_text, parse_override, protocol_models,
    resolve_output_dir, technology,
)
from chiplet_io.explorer import AIB, DSL
from chiplet_io.extraction import ExtractionParams
from chiplet_io.techlib import HYBRID_BOND, MICRO_BUMP, builtin_generation
from chiplet_io.utils import ConfigError


def test_empty_fragment(tmp_path):
    path = tmp_path / 'empty.yaml'
    path.write_text('')
    assert load_config(str(path)) == {}
    assert parse_config_text('# only a comment\n') == {}


def test_defaults_with_legacy_preset():
    cfg = merge_config()
    assert cfg['explore']['preset'] == 'legacy'
    assert cfg['dsl'] == DEFAULTS['dsl']
    assert cfg['cdm']['target_v'] == 125.0
    assert compute_model(cfg).gbps_per_mm2 == pytest.approx(18.0)


def test_shipped_presets():
    assert list_presets() == ['advanced', 'hybrid', 'legacy']
    for name in list_presets():
        assert isinstance(load_preset(name), dict)
    with pytest.raises(ConfigError, match="unknown preset 'tiny'"):
        load_preset('tiny')


def test_advanced_preset_demand():
    cfg = merge_config('advanced')
    assert compute_model(cfg).gbps_per_mm2 == pytest.approx(290.0)
    assert cfg['explore']['edge_max_mm'] == 6.0


def test_hybrid_preset_technology():
    cfg = merge_config('hybrid')
    assert technology(cfg) == builtin_generation(HYBRID_BOND, 4)
    assert cfg['cdm']['targets_v'] == [5.0, 10.0]


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError) as err:
        parse_config_text('dsl:\n  r_drv: 150\n')
    assert err.value.line == 2
    assert "unknown key 'dsl.r_drv'" in str(err.value)


def test_unknown_section_reports_line():
    with pytest.raises(ConfigError) as err:
        parse_config_text('run:\n  seed: 3\nplots:\n  dpi: 90\n')
    assert err.value.line == 3


def test_yaml_syntax_error_reports_line():
    with pytest.raises(ConfigError) as err:
        parse_config_text('dsl:\n  channels: 3\n  seed: [1\n', source='bad.yaml')
    assert err.value.line is not None and err.value.line >= 3
    assert 'bad.yaml' in str(err.value)


@pytest.mark.parametrize('text,message', [
    ('dsl:\n  channels: three\n', "'dsl.channels': expected an integer"),
    ('cdm:\n  polarity: up\n', "'cdm.polarity': expected one of"),
    ('cdm:\n  calibrate: 1\n', 'expected true or false'),
    ('dsl:\n  lengths_um: 150\n', 'expected a list of numbers'),
    ('dsl: 3\n', 'dsl must be a mapping'),
])
def test_type_errors(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_config_text(text)


def test_numeric_strings_and_integral_floats():
    fragment = parse_config_text('diode:\n  js_a_per_um2: 1e-12\ndsl:\n  n_bits: 128.0\n')
    assert fragment['diode']['js_a_per_um2'] == 1e-12
    assert fragment['dsl']['n_bits'] == 128
    assert isinstance(fragment['dsl']['n_bits'], int)


def test_overrides():
    assert parse_override('dsl.r_drv_ohm=120') == {'dsl': {'r_drv_ohm': 120.0}}
    assert parse_override('explore.compute.clock_ghz=2') == {'explore': {'compute': {'clock_ghz': 2.0}}}
    assert parse_override('dsl.n_seg=') == {'dsl': {'n_seg': None}}
    for bad in ('dsl', 'dsl=3', 'dsl..seed=1', '=3'):
        with pytest.raises(ConfigError):
            parse_override(bad)
    with pytest.raises(ConfigError, match="unknown key 'dsl.bogus'"):
        parse_override('dsl.bogus=1')


def test_precedence(tmp_path):
    first = tmp_path / 'a.yaml'
    first.write_text('dsl:\n  seed: 5\n  vdd_v: 1.0\n')
    second = tmp_path / 'b.yaml'
    second.write_text('dsl:\n  seed: 7\nexplore:\n  preset: advanced\n')
    cfg = merge_config(user_paths=[str(first), str(second)], overrides=['dsl.vdd_v=0.8'])
    assert cfg['dsl']['seed'] == 7
    assert cfg['dsl']['vdd_v'] == 0.8
    assert cfg['dsl']['channels'] == 3
    # the preset named in a user file is applied underneath that file
    assert cfg['explore']['preset'] == 'advanced'
    assert cfg['explore']['compute']['node'] == '7nm'

    explicit = merge_config('legacy', [str(second)], ['explore.compute.node=16nm'])
    assert explicit['explore']['preset'] == 'legacy'
    assert explicit['explore']['compute']['node'] == '16nm'
    assert explicit['explore']['compute']['mac_density_per_mm2'] == 2250.0


def test_factories():
    cfg = merge_config(overrides=['technology.gen=3', 'dsl.t_edge_ps=30', 'diode.rs_ohm_um2=47'])
    assert technology(cfg) == builtin_generation(MICRO_BUMP, 3)
    params = extraction_params(cfg)
    assert params.kappa_pad == pytest.approx(ExtractionParams().kappa_pad, rel=1e-12)
    assert params.eps_eff == ExtractionParams().eps_eff
    assert params.rho_wire == 2.2e-8 and params.couple_share is None
    dsl = dsl_config(cfg)
    assert dsl.t_edge == pytest.approx(30e-12)
    assert dsl.bit_rate == 1e9 and dsl.c_gate == pytest.approx(5e-15)
    assert diode_model(cfg).rs == 47.0
    assert protocol_models(cfg) == [AIB, DSL]


def test_run_seed_drives_prbs_unless_pinned():
    assert dsl_config(merge_config()).seed == 1
    assert dsl_config(merge_config(overrides=['run.seed=9'])).seed == 9
    assert dsl_config(merge_config(overrides=['run.seed=9', 'dsl.seed=5'])).seed == 5


def test_custom_technology_dimensions():
    cfg = merge_config(overrides=['technology.gen=3', 'technology.L_mm=2'])
    tech = technology(cfg)
    assert tech.wire.length == pytest.approx(2e-3)
    assert tech.wire.width == builtin_generation(MICRO_BUMP, 3).wire.width
    assert not tech.is_builtin


def test_uncalibrated_diode_keeps_default_rs():
    cfg = merge_config(overrides=['cdm.calibrate=false'])
    assert diode_model(cfg).rs == 90.0


def test_factory_errors_become_config_errors():
    with pytest.raises(ConfigError, match='dsl:'):
        dsl_config(merge_config(overrides=['dsl.channels=2']))
    with pytest.raises(ConfigError, match='explore:'):
        protocol_models(merge_config(overrides=['explore.aib.rows=0']))
    with pytest.raises(ConfigError, match='explore.compute:'):
        compute_model(merge_config(overrides=['explore.compute.clock_ghz=0']))


def test_output_dir(monkeypatch):
    monkeypatch.delenv(config.OUTPUT_DIR_ENV, raising=False)
    assert resolve_output_dir() == 'chiplet_io_out'
    monkeypatch.setenv(config.OUTPUT_DIR_ENV, '/tmp/env-out')
    assert resolve_output_dir() == '/tmp/env-out'
    assert resolve_output_dir('cli-out') == 'cli-out'


def test_run_config(monkeypatch):
    monkeypatch.delenv(config.OUTPUT_DIR_ENV, raising=False)
    run = build_run_config('explore', ['explore', '--preset', 'advanced'], preset='advanced',
                           overrides=['run.seed=9'], out='out', options=dict(no_esd=True))
    assert run.preset == 'advanced'
    assert run.seed == 9
    assert run.workers == 1
    assert run.out_dir == 'out'
    assert run.section('explore')['compute']['node'] == '7nm'
    assert run.options == {'no_esd': True}
