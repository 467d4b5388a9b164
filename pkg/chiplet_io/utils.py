# coding=utf-8
import os
import logging
import platform

import distro
import sentry_sdk
from sentry_sdk.integrations.threading import ThreadingIntegration
from sentry_sdk.integrations.logging import LoggingIntegration

from . import __version__

SENTRY_DSN_ENV = 'CHIPLET_IO_SENTRY_DSN'

_logger = logging.getLogger('chiplet_io')


class ChipletIoError(Exception):
    pass


class ConfigError(ChipletIoError):

    def __init__(self, msg, line=None):
        self.line = line
        if line is not None:
            msg = 'line {}: {}'.format(line, msg)
        super(ConfigError, self).__init__(msg)


class ModelError(ChipletIoError):
    pass


class NetlistParseError(ModelError):

    def __init__(self, msg, line, col=1):
        self.line = line
        self.col = col
        super(NetlistParseError, self).__init__('line {}, col {}: {}'.format(line, col, msg))


class ConvergenceError(ModelError):

    def __init__(self, time, residual, node, iterations):
        self.time = time
        self.residual = residual
        self.node = node
        self.iterations = iterations
        where = 'DC operating point' if time is None else 't={:.6e} s'.format(time)
        super(ConvergenceError, self).__init__(
            'Newton failed to converge at {} after {} iterations (worst residual {:.3e} at node {})'.format(
                where, iterations, residual, node))


class SentryWrapper:

    def __init__(self, sentry_opt='out', dsn=None):
        self.dsn = dsn or os.environ.get(SENTRY_DSN_ENV)
        self._enabled = sentry_opt == 'in' and bool(self.dsn)

        if not self._enabled:
            return

        def before_send(event, hint):
            if 'exc_info' in hint:
                exc_type, exc_value, tb = hint['exc_info']
                # usage and config mistakes are the user's, not ours
                if isinstance(exc_value, (ConfigError, KeyboardInterrupt)):
                    return None
            return event

        sentry_sdk.init(
            dsn=self.dsn,
            default_integrations=False,
            integrations=[
                ThreadingIntegration(propagate_hub=True),
                LoggingIntegration(
                    level=logging.INFO,  # Capture info and above as breadcrumbs
                    event_level=None
                ),
            ],
            before_send=before_send,
            send_default_pii=False,
            release='chiplet-io@' + __version__,
        )

    def enabled(self):
        return self._enabled

    def init_context(self, command):
        if self.enabled():
            sentry_sdk.set_tag('command', command)
            for (k, v) in self.get_tags().items():
                sentry_sdk.set_tag(k, v)

    def captureException(self, *args, **kwargs):
        _logger.exception("Exception")
        if self.enabled():
            sentry_sdk.capture_exception(*args, **kwargs)

    def get_tags(self):
        return get_tags()


def get_tags():
    (os_name, _, ver, _, arch, _) = platform.uname()
    tags = dict(os=os_name, os_ver=ver, arch=arch, python=platform.python_version())
    distro_name = distro.name(pretty=True)
    if distro_name:
        tags['distro'] = distro_name
    return tags


def setup_logging(verbosity=0):
    if verbosity > 0:
        level = logging.DEBUG
    elif verbosity < 0:
        level = logging.WARNING
    else:
        level = logging.INFO
    logging.basicConfig(
        level=level,
        format='%(asctime)s %(levelname)-7s %(name)s: %(message)s',
    )
    logging.getLogger('matplotlib').setLevel(logging.WARNING)
