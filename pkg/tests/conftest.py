import pytest

from chiplet_io.esd_cdm import calibrate_diode_model
from chiplet_io.lib import alert_queue
from chiplet_io.lib.error_stats import solver_stats


@pytest.fixture(scope='session')
def calibrated_diode():
    """One r_s calibration shared by every sizing test."""
    return calibrate_diode_model()


@pytest.fixture(autouse=True)
def clean_queues():
    alert_queue.fetch_and_clear()
    solver_stats.reset()
    yield
    alert_queue.fetch_and_clear()
