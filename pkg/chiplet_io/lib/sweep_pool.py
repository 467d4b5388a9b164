# coding=utf-8
import logging
from multiprocessing import Pool, cpu_count

_logger = logging.getLogger('chiplet_io.pool')


def resolve_workers(workers):
    if workers is None or workers < 1:
        return max(1, cpu_count() - 1)
    return workers


def run_ordered(func, items, workers=1):
    """Map func over items, returning results in grid order.

    func must be a module-level callable so it pickles into worker processes.
    workers=1 runs in-process; 0 or None uses all cores but one.
    """
    items = list(items)
    workers = min(resolve_workers(workers), max(1, len(items)))
    if workers == 1:
        return [func(item) for item in items]

    _logger.debug('Fanning out {} grid points to {} workers'.format(len(items), workers))
    with Pool(processes=workers) as pool:
        # imap keeps submission order regardless of completion order
        return list(pool.imap(func, items))
