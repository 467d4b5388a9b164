# coding=utf-8
"""chiplet-io command line.

    chiplet-io extract --tech ubump --all
    chiplet-io esd size [--gen 0 --target 125] [--waveforms]
    chiplet-io esd check --tech hybrid --gen 4 --target 10
    chiplet-io eye --tech ubump --gen 5 --sweep length
    chiplet-io explore --preset advanced
    chiplet-io sim deck.cir [--probe NODE ...]

Exit codes: 0 success, 1 usage or configuration error, 2 model or solver error.
"""
import os
import sys
import logging
import argparse

import numpy as np

from . import __version__
from . import config as cfgmod
from . import reports
from .utils import ChipletIoError, ConfigError, ModelError, SentryWrapper, setup_logging

_logger = logging.getLogger('chiplet_io.cli')

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MODEL = 2


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError('{}: error: {}'.format(self.prog, message))


def _common(p):
    p.add_argument('-c', '--config', action='append', default=[], metavar='FILE',
                   help='YAML config file; may be repeated, later files win')
    p.add_argument('--preset', help='shipped preset ({})'.format(', '.join(cfgmod.list_presets())))
    p.add_argument('--set', action='append', default=[], dest='overrides', metavar='SEC.KEY=VAL',
                   help='override one config value')
    p.add_argument('-o', '--out', help='output directory (default ${} or ./chiplet_io_out)'.format(
        cfgmod.OUTPUT_DIR_ENV))
    p.add_argument('-w', '--workers', type=int, help='worker processes for sweeps (0 = all cores but one)')
    p.add_argument('-v', '--verbose', action='count', default=0)
    p.add_argument('-q', '--quiet', action='store_true')


def _tech_args(p):
    p.add_argument('--tech', choices=['ubump', 'hybrid'], help='bonding technology')
    p.add_argument('--gen', type=int, help='built-in generation index')


def build_parser():
    parser = _ArgumentParser(prog='chiplet-io', description='Chiplet I/O parasitics, ESD and link exploration',
                             formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument('--version', action='version', version='%(prog)s ' + __version__)
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    p = sub.add_parser('extract', help='RLC parasitics per generation')
    _tech_args(p)
    p.add_argument('--all', action='store_true', help='every built-in generation of the technology')
    _common(p)

    esd = sub.add_parser('esd', help='CDM clamp sizing and checks')
    esd_sub = esd.add_subparsers(dest='esd_command', metavar='ACTION')
    esd_sub.required = True
    p = esd_sub.add_parser('size', help='minimum clamp area over generations and CDM targets')
    p.add_argument('--gen', type=int, action='append', help='restrict to generation(s)')
    p.add_argument('--target', type=float, action='append', help='restrict to CDM target(s) in volts')
    p.add_argument('--waveforms', action='store_true', help='dump gate waveforms at the minimum area')
    _common(p)
    p = esd_sub.add_parser('check', help='peak gate voltage for one bench')
    _tech_args(p)
    p.add_argument('--target', type=float, help='CDM precharge in volts')
    p.add_argument('--area', type=float, default=0.0, help='total clamp area in um^2 (0 = no diode)')
    p.add_argument('--waveforms', action='store_true', help='dump the gate waveform')
    _common(p)

    p = sub.add_parser('eye', help='DSL eye diagrams and metrics')
    _tech_args(p)
    p.add_argument('--sweep', choices=['none', 'length', 'gen'], default='none')
    p.add_argument('--length-um', type=float, action='append', dest='lengths_um',
                   help='channel length override; with --sweep length, the sweep points')
    p.add_argument('--aggressors', choices=['worst', 'prbs'])
    p.add_argument('--seed', type=int)
    _common(p)

    p = sub.add_parser('explore', help='I/O area and bandwidth against chiplet edge')
    p.add_argument('--no-esd', action='store_true', help='skip the per-pad clamp area table')
    _common(p)

    p = sub.add_parser('sim', help='run a netlist deck')
    p.add_argument('deck', help='netlist file')
    p.add_argument('--probe', action='append', help='node or source/inductor name to record')
    _common(p)
    return parser


def _overrides(args):
    """Flag values folded into --set overrides so the manifest shows them."""
    sets = list(args.overrides)
    if args.workers is not None:
        sets.append('run.workers={}'.format(args.workers))
    tech = getattr(args, 'tech', None)
    if tech is not None:
        sets.append('technology.kind={}'.format(tech))
    gen = getattr(args, 'gen', None)
    if isinstance(gen, int):
        sets.append('technology.gen={}'.format(gen))
    if args.command == 'esd' and args.esd_command == 'check' and args.target is not None:
        sets.append('cdm.target_v={!r}'.format(args.target))
    if args.command == 'eye':
        if args.aggressors:
            sets.append('dsl.aggressors={}'.format(args.aggressors))
        if args.seed is not None:
            sets.append('dsl.seed={}'.format(args.seed))
    return sets


def _command_name(args):
    if args.command == 'esd':
        return 'esd ' + args.esd_command
    return args.command


def _out(run, name):
    return os.path.join(run.out_dir, name)


def cmd_extract(run, args):
    from .extraction import extract_channel, extraction_table
    from .techlib import normalize_kind
    params = cfgmod.extraction_params(run.config)
    if args.all:
        rows = extraction_table(normalize_kind(run.config['technology']['kind']), params)
    else:
        tech = cfgmod.technology(run.config)
        row = dict(gen=tech.index, L_mm=tech.wire.length * 1e3)
        row.update(extract_channel(tech, params).as_row())
        rows = [row]
    return [reports.write_csv(_out(run, 'extract.csv'), rows)]


def _bench_for_row(run, row, diode):
    from .esd_cdm import CdmBench, bench_parasitics
    from .techlib import MICRO_BUMP, builtin_generation
    tech = builtin_generation(MICRO_BUMP, row['gen'])
    par = bench_parasitics(tech, run.config['cdm']['parasitics'], cfgmod.extraction_params(run.config))
    return CdmBench(row['target_v'], par, area_um2=row['area_um2'], diode=diode, **cfgmod.cdm_kwargs(run.config))


def cmd_esd_size(run, args):
    from .esd_cdm import sizing_table
    c = run.config['cdm']
    diode = cfgmod.diode_model(run.config)
    rows = sizing_table(
        generations=args.gen or c['gens'],
        targets=args.target or c['targets_v'],
        diode=diode,
        source=c['parasitics'],
        params=cfgmod.extraction_params(run.config),
        area_hi=c['area_hi_um2'],
        tol=c['tol_um2'],
        workers=run.workers,
        **cfgmod.cdm_kwargs(run.config)
    )
    outputs = [reports.write_csv(_out(run, 'esd_size.csv'), rows)]
    run.options['diode_rs_ohm_um2'] = diode.rs
    if args.waveforms:
        outputs += _dump_gate_waveforms(run, [(r, _bench_for_row(run, r, diode)) for r in rows])
    return outputs


def _dump_gate_waveforms(run, benches):
    from .esd_cdm import simulate_bench
    from .mna import write_waveform_csv
    outputs = []
    for row, bench in benches:
        label = 'gate_gen{}_{:g}V'.format(row['gen'], row['target_v'])
        for sign, w in simulate_bench(bench):
            tag = '{}_{}'.format(label, 'pos' if sign > 0 else 'neg')
            path = _out(run, 'waveforms/{}.csv'.format(tag))
            reports.ensure_dir(path)
            write_waveform_csv(w, path, nodes=['pad', 'gate'])
            outputs.append(path)
            outputs.append(reports.plot_waveform(_out(run, 'waveforms/{}.svg'.format(tag)), w, ['pad', 'gate'],
                                                 title=tag, v_limit=bench.v_bd))
    return outputs


def cmd_esd_check(run, args):
    from .esd_cdm import CdmBench, bench_parasitics, check_bench
    c = run.config['cdm']
    tech = cfgmod.technology(run.config)
    par = bench_parasitics(tech, c['parasitics'], cfgmod.extraction_params(run.config))
    diode = cfgmod.diode_model(run.config) if args.area > 0 else None
    kw = dict(diode=diode) if diode is not None else {}
    bench = CdmBench(c['target_v'], par, area_um2=args.area, **dict(kw, **cfgmod.cdm_kwargs(run.config)))
    passed, peak = check_bench(bench)
    verdict = '{}, peak {} {:g} V, {}'.format(
        'PASS' if passed else 'FAIL', '<' if passed else '>=', bench.v_bd,
        'no diode' if args.area == 0 else 'clamp {:g} um^2'.format(args.area))
    print(verdict)
    run.options['verdict'] = verdict
    row = dict(kind=tech.kind, gen=tech.index, target_v=c['target_v'], area_um2=args.area, peak_v=peak,
               v_bd_v=bench.v_bd, passed=passed)
    outputs = [reports.write_csv(_out(run, 'esd_check.csv'), [row])]
    if args.waveforms:
        outputs += _dump_gate_waveforms(run, [(row, bench)])
    return outputs


def _eye_rows(label, tech, length, metrics):
    return dict(label=label, kind=tech.kind, gen=tech.index,
                length_um=(tech.wire.length if length is None else length) * 1e6,
                height_v=metrics.height, width_ps=metrics.width * 1e12, jitter_ps=metrics.jitter * 1e12)


def cmd_eye(run, args):
    from .dsl_si import eye_cell
    from .lib.sweep_pool import run_ordered
    from .techlib import builtin_generation
    dsl = run.config['dsl']
    dsl_cfg = cfgmod.dsl_config(run.config)
    params = cfgmod.extraction_params(run.config)
    tech = cfgmod.technology(run.config)

    if args.sweep == 'length':
        lengths_um = args.lengths_um or dsl['lengths_um']
        cells = [('L{:g}um'.format(l), tech, l * 1e-6) for l in lengths_um]
    elif args.sweep == 'gen':
        cells = [('gen{}'.format(g), builtin_generation(tech.kind, g), None) for g in dsl['gens']]
    else:
        length = args.lengths_um[0] * 1e-6 if args.lengths_um else None
        cells = [(tech.label, tech, length)]

    results = run_ordered(eye_cell, [(t, dsl_cfg, l, params) for _, t, l in cells], workers=run.workers)
    rows = []
    outputs = []
    for (label, t, length), (eye, metrics) in zip(cells, results):
        rows.append(_eye_rows(label, t, length, metrics))
        traces = {'t_ui': eye.time / eye.ui}
        traces.update({'trace{}'.format(i): tr for i, tr in enumerate(eye.traces)})
        path = _out(run, 'eye_traces_{}.csv'.format(label))
        reports.ensure_dir(path)
        np.savetxt(path, np.column_stack(list(traces.values())), fmt='%.17e', delimiter=',',
                   header=','.join(traces), comments='')
        outputs.append(path)
        outputs.append(reports.plot_eye(_out(run, 'eye_{}.svg'.format(label)), eye, title=label))
    outputs.insert(0, reports.write_csv(_out(run, 'eye_metrics.csv'), rows))
    return outputs


def cmd_explore(run, args):
    from .explorer import edge_grid, esd_per_pad_table, supported_range
    from .techlib import HYBRID_BOND, MICRO_BUMP, list_generations
    s = run.config['explore']
    edges = edge_grid(s['edge_min_mm'], s['edge_max_mm'], s['edge_step_mm'])
    results, ranges = supported_range(cfgmod.protocol_models(run.config), cfgmod.compute_model(run.config), edges,
                                      io_aware=s['io_aware_demand'], edges_used=s['edges_used'])
    rows = [r.as_row() for r in results]
    outputs = [reports.write_csv(_out(run, 'explore.csv'), rows),
               reports.plot_explore(_out(run, 'explore.svg'), rows, title=run.preset)]
    run.options['supported'] = {name: [list(iv) for iv in r.intervals] for name, r in ranges.items()}
    for name, r in ranges.items():
        _logger.info('{} supported edges: {}'.format(name, r.intervals or 'none'))

    if not args.no_esd:
        c = run.config['cdm']
        techs = list_generations(MICRO_BUMP) + list_generations(HYBRID_BOND)
        esd_rows = esd_per_pad_table(techs, s['esd_targets_v'], diode=cfgmod.diode_model(run.config),
                                     source=c['parasitics'], workers=run.workers,
                                     area_hi=c['area_hi_um2'], tol=c['tol_um2'], **cfgmod.cdm_kwargs(run.config))
        outputs.append(reports.write_csv(_out(run, 'esd_per_pad.csv'), esd_rows))
        outputs.append(reports.plot_esd_per_pad(_out(run, 'esd_per_pad.svg'),
                                                [r for r in esd_rows if r['kind'] == MICRO_BUMP]))
    return outputs


def cmd_sim(run, args):
    from .mna import dc_operating_point, transient, write_waveform_csv
    from .netlist import parse_netlist
    with open(args.deck, 'r', encoding='utf-8') as f:
        text = f.read()
    circuit, tran = parse_netlist(text)
    if tran is None:
        op = dc_operating_point(circuit)
        rows = [dict(node=n, voltage_v=v) for n, v in op.items() if n != '0']
        return [reports.write_csv(_out(run, 'sim_op.csv'), rows)]
    w = transient(circuit, tran, probes=args.probe, kind='sim')
    path = _out(run, 'sim.csv')
    reports.ensure_dir(path)
    write_waveform_csv(w, path)
    return [path]


COMMANDS = {
    'extract': cmd_extract,
    'esd size': cmd_esd_size,
    'esd check': cmd_esd_check,
    'eye': cmd_eye,
    'explore': cmd_explore,
    'sim': cmd_sim,
}


def run(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write('{}\n'.format(e))
        return EXIT_USAGE
    except SystemExit as e:
        # --help and --version
        return e.code if isinstance(e.code, int) else EXIT_OK

    setup_logging(-1 if args.quiet else args.verbose)
    command = _command_name(args)
    sentry = None
    try:
        run_cfg = cfgmod.build_run_config(command, argv, args.config, _overrides(args), preset=args.preset,
                                          out=args.out)
        sentry = SentryWrapper(run_cfg.config['run']['sentry_opt'])
        sentry.init_context(command)
        if command == 'sim' and not os.path.isfile(args.deck):
            raise FileNotFoundError(args.deck)
        outputs = COMMANDS[command](run_cfg, args)
        reports.write_manifest(run_cfg, outputs)
    except (FileNotFoundError, IsADirectoryError) as e:
        _logger.error('file not found: {}'.format(e.filename or e))
        return EXIT_USAGE
    except ConfigError as e:
        _logger.error('configuration error: {}'.format(e))
        return EXIT_USAGE
    except ModelError as e:
        _logger.error('{}'.format(e))
        return EXIT_MODEL
    except ChipletIoError as e:
        _logger.error('{}'.format(e))
        return EXIT_MODEL
    except Exception:
        if sentry is not None:
            sentry.captureException()
        else:
            _logger.exception('Unexpected error')
        return EXIT_MODEL
    return EXIT_OK


def main():
    sys.exit(run())
