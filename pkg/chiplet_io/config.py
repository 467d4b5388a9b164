# coding=utf-8
"""Run configuration: built-in defaults, shipped presets, user YAML files and
`--set section.key=value` overrides, merged in that order.

Every physical quantity carries its unit in the key name (`r_drv_ohm`,
`c_gate_ff`, ...). A key spelt without its unit is unknown and rejected.
"""
import os
import copy
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List

import yaml

from .utils import ConfigError, ModelError

_logger = logging.getLogger('chiplet_io.config')

PRESET_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'presets')
OUTPUT_DIR_ENV = 'CHIPLET_IO_OUTPUT_DIR'
DEFAULT_PRESET = 'legacy'


def _num(value):
    # YAML 1.1 reads 1e-12 (no dot) as a string
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise ValueError('expected a number')
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError('expected a number')
    return float(value)


def _int(value):
    if isinstance(value, bool):
        raise ValueError('expected an integer')
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if not isinstance(value, int):
        raise ValueError('expected an integer')
    return value


def _bool(value):
    if not isinstance(value, bool):
        raise ValueError('expected true or false')
    return value


def _str(value):
    if not isinstance(value, str):
        raise ValueError('expected a string')
    return value


def _choice(*choices):
    def check(value):
        if value not in choices:
            raise ValueError('expected one of {}'.format(', '.join(str(c) for c in choices)))
        return value
    return check


def _optional(check):
    def inner(value):
        return None if value is None else check(value)
    return inner


def _num_list(value):
    if not isinstance(value, (list, tuple)):
        raise ValueError('expected a list of numbers')
    return [_num(v) for v in value]


def _int_list(value):
    if not isinstance(value, (list, tuple)):
        raise ValueError('expected a list of integers')
    return [_int(v) for v in value]


_PROTOCOL_SCHEMA = dict(
    bumps_per_channel=_int,
    wires_per_channel=_int,
    rate_gbps=_num,
    max_channels=_optional(_int),
    pitch_um=_num,
    rows=_int,
    cell_area_um2=_num,
)

SCHEMA = dict(
    technology=dict(
        kind=_choice('ubump', 'micro-bump', 'microbump', 'hybrid', 'hybrid-bond', 'hb'),
        gen=_optional(_int),
        L_mm=_optional(_num), W_um=_optional(_num), T_um=_optional(_num), P_um=_optional(_num),
        S_um=_optional(_num), H_um=_optional(_num),
    ),
    extraction=dict(
        rho_wire_ohm_m=_num, rho_bump_ohm_m=_num, eps_eff=_optional(_num), k_d=_num, k_h=_num,
        kappa_pad_ff_per_um=_num, couple_share=_optional(_num),
    ),
    diode=dict(
        js_a_per_um2=_num, n=_num, vt_v=_num, rs_ohm_um2=_optional(_num),
    ),
    cdm=dict(
        target_v=_num, targets_v=_num_list, gens=_int_list, c_gate_ff=_num, r_gate_ohm=_num, v_bd_v=_num,
        polarity=_choice('+', '-', 'both'), area_hi_um2=_num, tol_um2=_num,
        parasitics=_choice('auto', 'reference', 'extracted'), calibrate=_bool,
    ),
    dsl=dict(
        channels=_int, n_seg=_optional(_int), bit_rate_gbps=_num, vdd_v=_num, r_drv_ohm=_num, t_edge_ps=_num,
        c_gate_ff=_num, seed=_optional(_int), n_bits=_int, warmup_bits=_int, aggressors=_choice('worst', 'prbs'),
        lengths_um=_num_list, gens=_int_list,
    ),
    explore=dict(
        preset=_str, edge_min_mm=_num, edge_max_mm=_num, edge_step_mm=_num, edges_used=_int,
        io_aware_demand=_bool, esd_targets_v=_num_list,
        compute=dict(node=_str, mac_density_per_mm2=_num, clock_ghz=_num, bytes_per_mac=_num),
        aib=_PROTOCOL_SCHEMA,
        dsl=_PROTOCOL_SCHEMA,
    ),
    run=dict(
        seed=_int, workers=_int, sentry_opt=_choice('in', 'out'),
    ),
)

DEFAULTS = dict(
    technology=dict(kind='ubump', gen=0, L_mm=None, W_um=None, T_um=None, P_um=None, S_um=None, H_um=None),
    extraction=dict(
        rho_wire_ohm_m=2.2e-8, rho_bump_ohm_m=1.1e-7, eps_eff=None, k_d=0.5, k_h=4.0 / 7.0,
        kappa_pad_ff_per_um=0.08444, couple_share=None,
    ),
    diode=dict(js_a_per_um2=1e-12, n=1.0, vt_v=0.02585, rs_ohm_um2=None),
    cdm=dict(
        target_v=125.0, targets_v=[10.0, 30.0, 50.0, 125.0], gens=[0, 1, 2, 3, 4, 5], c_gate_ff=15.0,
        r_gate_ohm=50.0, v_bd_v=3.8, polarity='both', area_hi_um2=1e4, tol_um2=0.01, parasitics='auto',
        calibrate=True,
    ),
    dsl=dict(
        channels=3, n_seg=None, bit_rate_gbps=1.0, vdd_v=0.9, r_drv_ohm=150.0, t_edge_ps=50.0, c_gate_ff=5.0,
        seed=None, n_bits=256, warmup_bits=8, aggressors='worst', lengths_um=[150.0, 750.0, 2000.0, 4000.0],
        gens=[0, 1, 2, 3, 4, 5],
    ),
    explore=dict(
        preset=DEFAULT_PRESET, edge_min_mm=0.5, edge_max_mm=12.0, edge_step_mm=0.1, edges_used=1,
        io_aware_demand=False, esd_targets_v=[10.0, 125.0],
        compute=dict(node='28nm', mac_density_per_mm2=2250.0, clock_ghz=0.5, bytes_per_mac=0.002),
        aib=dict(bumps_per_channel=88, wires_per_channel=40, rate_gbps=2.0, max_channels=24, pitch_um=10.0,
                 rows=6, cell_area_um2=150000.0),
        dsl=dict(bumps_per_channel=5, wires_per_channel=4, rate_gbps=1.0, max_channels=None, pitch_um=10.0,
                 rows=8, cell_area_um2=0.0),
    ),
    run=dict(seed=1, workers=1, sentry_opt='out'),
)


def dict_merge(a, b):
    """Recursively merge b into a copy of a; b wins on conflicts."""
    result = copy.deepcopy(a)
    for key, value in b.items():
        if isinstance(value, dict) and isinstance(result.get(key), dict):
            result[key] = dict_merge(result[key], value)
        else:
            result[key] = copy.deepcopy(value)
    return result


def _key_lines(node, prefix=()):
    """(section, key, ...) -> 1-based line of each mapping key in a composed YAML tree."""
    lines = {}
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            path = prefix + (str(key_node.value),)
            lines[path] = key_node.start_mark.line + 1
            lines.update(_key_lines(value_node, path))
    return lines


def validate(data, lines=None, schema=SCHEMA, prefix=()):
    """Checked and coerced copy of a config fragment."""
    lines = lines or {}
    if not isinstance(data, dict):
        where = '.'.join(prefix) or 'top level'
        raise ConfigError('{} must be a mapping'.format(where), lines.get(prefix))
    out = {}
    for key, value in data.items():
        path = prefix + (str(key),)
        dotted = '.'.join(path)
        if key not in schema:
            raise ConfigError("unknown key '{}'".format(dotted), lines.get(path))
        rule = schema[key]
        if isinstance(rule, dict):
            out[key] = validate(value if value is not None else {}, lines, rule, path)
            continue
        try:
            out[key] = rule(value)
        except ValueError as e:
            raise ConfigError("'{}': {} (got {!r})".format(dotted, e, value), lines.get(path))
    return out


def parse_config_text(text, source='<config>'):
    loader = yaml.SafeLoader(text)
    try:
        node = loader.get_single_node()
        data = loader.construct_document(node) if node is not None else None
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark or e.context_mark
        raise ConfigError('{}: {}'.format(source, e.problem or e.context), mark.line + 1 if mark else None)
    except yaml.YAMLError as e:
        raise ConfigError('{}: {}'.format(source, e))
    finally:
        loader.dispose()
    if data is None:
        return {}
    return validate(data, _key_lines(node))


def load_config(path):
    """Validated fragment from a YAML file; an empty file is an empty fragment."""
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    fragment = parse_config_text(text, source=path)
    _logger.debug('Loaded config {}: sections {}'.format(path, sorted(fragment)))
    return fragment


def preset_path(name):
    return os.path.join(PRESET_DIR, '{}.yaml'.format(name))


def list_presets():
    return sorted(os.path.splitext(f)[0] for f in os.listdir(PRESET_DIR) if f.endswith('.yaml'))


def load_preset(name):
    path = preset_path(name)
    if not os.path.exists(path):
        raise ConfigError("unknown preset '{}' (available: {})".format(name, ', '.join(list_presets())))
    return load_config(path)


def parse_override(text):
    """`section.key=value` (or `section.sub.key=value`) into a nested fragment."""
    dotted, sep, raw = text.partition('=')
    if not sep or not dotted.strip():
        raise ConfigError("override '{}' must look like section.key=value".format(text))
    path = [p for p in dotted.strip().split('.')]
    if len(path) < 2 or not all(path):
        raise ConfigError("override '{}' must name a section and a key".format(text))
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError:
        raise ConfigError("override '{}': cannot parse value '{}'".format(text, raw))
    fragment = value
    for part in reversed(path):
        fragment = {part: fragment}
    return validate(fragment)


def merge_config(preset=None, user_paths=(), overrides=()):
    """defaults <- preset <- user files (in order) <- overrides."""
    user = {}
    for path in user_paths:
        user = dict_merge(user, load_config(path))
    sets = {}
    for text in overrides:
        sets = dict_merge(sets, parse_override(text))

    if preset is None:
        preset = sets.get('explore', {}).get('preset') or user.get('explore', {}).get('preset') or DEFAULT_PRESET
    merged = dict_merge(DEFAULTS, load_preset(preset))
    merged = dict_merge(merged, user)
    merged = dict_merge(merged, sets)
    merged['explore']['preset'] = preset
    return merged


@dataclass
class RunConfig:
    command: str
    argv: List[str]
    config: Dict[str, Any]
    out_dir: str
    preset: str = DEFAULT_PRESET
    options: Dict[str, Any] = field(default_factory=dict)

    @property
    def seed(self):
        return self.config['run']['seed']

    @property
    def workers(self):
        return self.config['run']['workers']

    def section(self, name):
        return self.config[name]


def resolve_output_dir(cli_out=None):
    return cli_out or os.environ.get(OUTPUT_DIR_ENV) or 'chiplet_io_out'


def build_run_config(command, argv, config_paths=(), overrides=(), preset=None, out=None, options=None):
    merged = merge_config(preset, config_paths, overrides)
    return RunConfig(
        command=command,
        argv=list(argv),
        config=merged,
        out_dir=resolve_output_dir(out),
        preset=merged['explore']['preset'],
        options=dict(options or {}),
    )


# ---- object factories -------------------------------------------------------------------------------------------

def technology(cfg):
    from .techlib import generation_from_config
    section = {k: v for k, v in cfg['technology'].items() if v is not None}
    section.setdefault('kind', 'ubump')
    return generation_from_config(section)


def extraction_params(cfg):
    from .extraction import ExtractionParams
    s = cfg['extraction']
    kw = dict(
        rho_wire=s['rho_wire_ohm_m'],
        rho_bump=s['rho_bump_ohm_m'],
        k_d=s['k_d'],
        k_h=s['k_h'],
        kappa_pad=s['kappa_pad_ff_per_um'] * 1e-15 / 1e-6,
        couple_share=s['couple_share'],
    )
    if s['eps_eff'] is not None:
        kw['eps_eff'] = s['eps_eff']
    try:
        return ExtractionParams(**kw)
    except ModelError as e:
        raise ConfigError('extraction: {}'.format(e))


def cdm_kwargs(cfg):
    s = cfg['cdm']
    return dict(
        c_gate=s['c_gate_ff'] * 1e-15,
        r_gate=s['r_gate_ohm'],
        v_bd=s['v_bd_v'],
        polarity=s['polarity'],
    )


def diode_model(cfg):
    """Diode model from the config; r_s is calibrated when not given."""
    from .esd_cdm import calibrate_diode_model
    from .mna import DiodeModel
    s = cfg['diode']
    if s['rs_ohm_um2'] is not None or not cfg['cdm']['calibrate']:
        rs = s['rs_ohm_um2'] if s['rs_ohm_um2'] is not None else DiodeModel().rs
        return DiodeModel(js=s['js_a_per_um2'], n=s['n'], vt=s['vt_v'], rs=rs)
    c = cdm_kwargs(cfg)
    return calibrate_diode_model(js=s['js_a_per_um2'], n=s['n'], vt=s['vt_v'], c_gate=c['c_gate'],
                                 r_gate=c['r_gate'], v_bd=c['v_bd'])


def dsl_config(cfg):
    from .dsl_si import DslConfig
    s = cfg['dsl']
    # the run seed drives the PRBS unless dsl.seed pins it
    seed = cfg['run']['seed'] if s['seed'] is None else s['seed']
    try:
        return DslConfig(
            channels=s['channels'],
            n_seg=s['n_seg'],
            bit_rate=s['bit_rate_gbps'] * 1e9,
            vdd=s['vdd_v'],
            r_drv=s['r_drv_ohm'],
            t_edge=s['t_edge_ps'] * 1e-12,
            c_gate=s['c_gate_ff'] * 1e-15,
            seed=seed,
            n_bits=s['n_bits'],
            warmup_bits=s['warmup_bits'],
            aggressors=s['aggressors'],
        )
    except ModelError as e:
        raise ConfigError('dsl: {}'.format(e))


def protocol_models(cfg):
    from .explorer import IoProtocolModel
    s = cfg['explore']
    try:
        return [IoProtocolModel(name.upper(), **s[name]) for name in ('aib', 'dsl')]
    except ModelError as e:
        raise ConfigError('explore: {}'.format(e))


def compute_model(cfg):
    from .explorer import ComputeModel
    s = cfg['explore']['compute']
    try:
        return ComputeModel(s['node'], s['mac_density_per_mm2'], s['clock_ghz'] * 1e9, s['bytes_per_mac'])
    except ModelError as e:
        raise ConfigError('explore.compute: {}'.format(e))
