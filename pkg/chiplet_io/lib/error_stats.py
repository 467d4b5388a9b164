import threading
from datetime import datetime


class SolverStats:

    def __init__(self):
        self._mutex = threading.RLock()
        self.stats = dict()

    def attempt(self, kind):
        with self._mutex:
            stat = self.get_stat(kind)
            stat['runs'] += 1

    def add_newton_iterations(self, kind, count):
        with self._mutex:
            self.get_stat(kind)['newton_iterations'] += count

    def add_limited_step(self, kind):
        with self._mutex:
            self.get_stat(kind)['limited_iterations'] += 1

    def add_failure(self, kind, error):
        with self._mutex:
            stat = self.get_stat(kind)
            stat['failures'] += 1
            stat['last_error'] = str(error)
            stat['last'] = datetime.utcnow()
            if not stat['first']:
                stat['first'] = datetime.utcnow()

    def get_stat(self, kind):
        with self._mutex:
            return self.stats.setdefault(kind, dict(
                runs=0, newton_iterations=0, limited_iterations=0, failures=0,
                last_error=None, last=None, first=None))

    def as_dict(self):
        with self._mutex:
            return {k: dict(v) for k, v in self.stats.items()}

    def reset(self):
        with self._mutex:
            self.stats.clear()

# Poor-man's singleton
solver_stats = SolverStats()
