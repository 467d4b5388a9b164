# coding=utf-8
"""CSV, SVG and manifest writers.

CSV is the canonical output. Floats are written with repr so identical runs
give identical bytes; SVGs are derived views rendered with a fixed hash salt
and no timestamp.
"""
import os
import csv
import sys
import logging

import numpy as np
import scipy
import yaml
import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402

from . import __version__
from .lib import alert_queue
from .lib.error_stats import solver_stats
from .utils import get_tags

_logger = logging.getLogger('chiplet_io.reports')

matplotlib.rcParams['svg.hashsalt'] = 'chiplet-io'
matplotlib.rcParams['svg.fonttype'] = 'none'
_SVG_METADATA = {'Date': None}


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path, rows, fieldnames=None):
    """Rows are dicts; columns follow fieldnames or the first row's key order."""
    rows = list(rows)
    if fieldnames is None:
        fieldnames = []
        for row in rows:
            for key in row:
                if key not in fieldnames:
                    fieldnames.append(key)
    ensure_dir(path)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(row.get(k)) for k in fieldnames})
    _logger.info('Wrote {} ({} rows)'.format(path, len(rows)))
    return path


def ensure_dir(path):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)


def _save(fig, path):
    ensure_dir(path)
    fig.savefig(path, format='svg', metadata=_SVG_METADATA)
    plt.close(fig)
    _logger.info('Wrote {}'.format(path))
    return path


def plot_eye(path, eye, title=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    t_ui = eye.time / eye.ui
    for trace in eye.traces:
        ax.plot(t_ui, trace, color='tab:blue', alpha=0.25, linewidth=0.7)
    ax.axhline(eye.threshold, color='grey', linestyle=':', linewidth=0.8)
    ax.set_xlim(0, 2)
    ax.set_xlabel('time (UI)')
    ax.set_ylabel('victim far end (V)')
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_waveform(path, waveform, nodes, title=None, v_limit=None):
    from .mna import probe
    fig, ax = plt.subplots(figsize=(6, 4))
    t_ns = waveform.time * 1e9
    for node in nodes:
        ax.plot(t_ns, probe(waveform, node), label='v({})'.format(node), linewidth=1.0)
    if v_limit is not None:
        for sign in (1, -1):
            ax.axhline(sign * v_limit, color='tab:red', linestyle='--', linewidth=0.8)
    ax.set_xlabel('time (ns)')
    ax.set_ylabel('voltage (V)')
    ax.legend(loc='best')
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_explore(path, rows, title=None):
    """Bump-array area and bandwidth against edge, with the demand curve."""
    edge = [r['edge_mm'] for r in rows]
    fig, (ax_area, ax_bw) = plt.subplots(1, 2, figsize=(10, 4))
    ax_area.plot(edge, [r['aib_area_mm2'] for r in rows], label='AIB')
    ax_area.plot(edge, [r['dsl_area_mm2'] for r in rows], label='DSL')
    ax_area.set_xlabel('chiplet edge (mm)')
    ax_area.set_ylabel('I/O array area (mm$^2$)')
    ax_area.legend(loc='best')

    ax_bw.plot(edge, [r['aib_bw_gbps'] for r in rows], label='AIB supply')
    ax_bw.plot(edge, [r['dsl_bw_gbps'] for r in rows], label='DSL supply')
    ax_bw.plot(edge, [r['demand_gbps'] for r in rows], label='array compute', linestyle='--', color='black')
    ax_bw.set_yscale('log')
    ax_bw.set_xlabel('chiplet edge (mm)')
    ax_bw.set_ylabel('data rate (Gb/s)')
    ax_bw.legend(loc='best')
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_esd_per_pad(path, rows):
    fig, ax = plt.subplots(figsize=(6, 4))
    for target in sorted({r['target_v'] for r in rows}):
        sel = [r for r in rows if r['target_v'] == target]
        ax.plot([r['gen'] for r in sel], [r['area_um2'] for r in sel], marker='o', label='{:g} V'.format(target))
    ax.set_xlabel('generation')
    ax.set_ylabel('clamp area per pad ($\\mu$m$^2$)')
    ax.legend(loc='best')
    fig.tight_layout()
    return _save(fig, path)


def _plain(value):
    """YAML-safe copy: tuples to lists, numpy scalars to Python numbers."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def write_manifest(run, outputs, extra=None):
    """manifest.yaml with every resolved parameter of the run."""
    manifest = dict(
        command=run.command,
        argv=list(run.argv),
        version=__version__,
        seed=run.seed,
        preset=run.preset,
        config=run.config,
        options=run.options,
        outputs=sorted(os.path.relpath(p, run.out_dir) for p in outputs),
        environment=dict(numpy=np.__version__, scipy=scipy.__version__, executable=sys.executable,
                         **get_tags()),
        solver_stats=solver_stats.as_dict(),
        alerts=alert_queue.fetch_and_clear(),
    )
    if extra:
        manifest.update(extra)
    path = os.path.join(run.out_dir, 'manifest.yaml')
    ensure_dir(path)
    with open(path, 'w', encoding='utf-8') as f:
        yaml.safe_dump(_plain(manifest), f, sort_keys=False, default_flow_style=False)
    _logger.info('Wrote {}'.format(path))
    return path
