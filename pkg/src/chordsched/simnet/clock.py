"""Virtual clock and event queue."""

import heapq
import itertools


class VirtualClock:
    """Time-ordered callback queue; ties fire in scheduling order."""

    def __init__(self):
        self.now = 0.0
        self._queue = []
        self._seq = itertools.count()
        self.fired = 0

    def schedule(self, at, fn, *args):
        if at < self.now:
            raise ValueError(f"cannot schedule in the past ({at} < {self.now})")
        heapq.heappush(self._queue, (at, next(self._seq), fn, args))

    def call_later(self, delay, fn, *args):
        self.schedule(self.now + delay, fn, *args)

    def pending(self):
        return len(self._queue)

    def peek(self):
        return self._queue[0][0] if self._queue else None

    def run(self, until=None, stop=None):
        """Fire callbacks up to and including time ``until``.

        ``stop`` is polled after each callback; returning true ends the run
        early.  Returns the number of callbacks fired.
        """
        queue = self._queue
        pop = heapq.heappop
        fired = 0
        while queue:
            at = queue[0][0]
            if until is not None and at > until:
                break
            at, _, fn, args = pop(queue)
            self.now = at
            fn(*args)
            fired += 1
            if stop is not None and stop():
                break
        if until is not None and (not queue or queue[0][0] > until) and self.now < until:
            self.now = until
        self.fired += fired
        return fired
