# coding=utf-8

### model-deviation notices collected during a run and written into the run manifest
#   all methods should be thread-safe

import logging
import threading
from collections import deque

_logger = logging.getLogger('chiplet_io')

_mutex = threading.RLock()
ring_buffer = deque(maxlen=64)


def add_alert(alert):
    with _mutex:
        if alert in ring_buffer:
            return
        ring_buffer.append(alert)

    if alert.get('level') == 'warning':
        _logger.warning('{}: {}'.format(alert.get('cause'), alert.get('text')))
    else:
        _logger.info('{}: {}'.format(alert.get('cause'), alert.get('text')))


def fetch_and_clear():
    with _mutex:
        msgs = list(ring_buffer)
        ring_buffer.clear()
    return msgs
