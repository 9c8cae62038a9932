import time


class SimClock:
    """Виртуальное время в мс: продвигается только явным advance()."""

    def __init__(self, dt: float = 1.0):
        self.dt = dt
        self.ticks = 0

    def now(self) -> float:
        return self.ticks * self.dt

    def advance(self) -> float:
        self.ticks += 1
        return self.now()

    def reset(self):
        self.ticks = 0


class WallClock:
    """Реальное время в мс от момента start(), квантованное шагом dt."""

    def __init__(self, dt: float = 1.0):
        self.dt = dt
        self._t0 = None

    def start(self):
        self._t0 = time.monotonic()

    def now(self) -> float:
        if self._t0 is None:
            self.start()
        elapsed_ms = (time.monotonic() - self._t0) * 1000.0
        return int(elapsed_ms / self.dt) * self.dt

    def sleep_until(self, t_ms: float):
        if self._t0 is None:
            self.start()
        delay = self._t0 + t_ms / 1000.0 - time.monotonic()
        if delay > 0:
            time.sleep(delay)
