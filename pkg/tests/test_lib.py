import math

import pytest

from chiplet_io.lib import alert_queue
from chiplet_io.lib.error_stats import SolverStats
from chiplet_io.lib.sweep_pool import resolve_workers, run_ordered
from chiplet_io.utils import SENTRY_DSN_ENV, ConvergenceError, SentryWrapper, get_tags


def test_alerts_are_deduplicated_and_cleared():
    alert = dict(level='warning', cause='sizing_deviation', text='gen 2 off')
    alert_queue.add_alert(alert)
    alert_queue.add_alert(dict(alert))
    alert_queue.add_alert(dict(level='info', cause='extraction_deviation', text='gen 1'))
    assert alert_queue.fetch_and_clear() == [alert, dict(level='info', cause='extraction_deviation', text='gen 1')]
    assert alert_queue.fetch_and_clear() == []


def test_solver_stats():
    stats = SolverStats()
    stats.attempt('cdm')
    stats.attempt('cdm')
    stats.add_newton_iterations('cdm', 7)
    stats.add_limited_step('cdm')
    stats.add_failure('cdm', ConvergenceError(1e-9, 0.5, 'pad', 100))
    cdm = stats.as_dict()['cdm']
    assert (cdm['runs'], cdm['newton_iterations'], cdm['limited_iterations'], cdm['failures']) == (2, 7, 1, 1)
    assert 't=1.000000e-09 s' in cdm['last_error']
    assert cdm['first'] is not None
    stats.reset()
    assert stats.as_dict() == {}


@pytest.mark.parametrize('workers', [1, 2])
def test_run_ordered_keeps_grid_order(workers):
    items = [16.0, 1.0, 81.0, 4.0, 9.0]
    assert run_ordered(math.sqrt, items, workers=workers) == [4.0, 1.0, 9.0, 2.0, 3.0]


def test_resolve_workers():
    assert resolve_workers(3) == 3
    assert resolve_workers(0) >= 1
    assert resolve_workers(None) >= 1


def test_sentry_stays_off_without_opt_in_and_dsn(monkeypatch):
    monkeypatch.delenv(SENTRY_DSN_ENV, raising=False)
    assert not SentryWrapper('out', dsn='https://key@example.invalid/1').enabled()
    assert not SentryWrapper('in').enabled()


def test_tags():
    tags = get_tags()
    assert {'os', 'arch', 'python'} <= set(tags)
