"""Фильтр избыточности ультразвуковых измерений.

Измерение считается достоверным, если max_hits подряд идущих значений лежат в
пределах max_error от первого (опорного). Тогда опорное значение
отправляется дальше, и цикл начинается заново.
"""
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from utils.logger import setup_logger

logger = setup_logger('measurement_filter')


@dataclass(frozen=True)
class FilterConfig:
    max_hits: int = 4
    max_error: float = 120  # мкс ToF, ~2 см

    def __post_init__(self):
        if self.max_hits < 1:
            raise ValueError(f"max_hits должен быть >= 1, получено {self.max_hits}")
        if self.max_error < 0:
            raise ValueError(f"max_error должен быть >= 0, получено {self.max_error}")

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> 'FilterConfig':
        data = data or {}
        return cls(max_hits=int(data.get('max_hits', 4)), max_error=data.get('max_error', 120))


@dataclass(frozen=True)
class FilterState:
    hits: int = 0
    first_measurement: Optional[float] = None


def ingest(state: FilterState, cfg: FilterConfig, raw: float) -> Tuple[FilterState, Optional[float]]:
    """Один переход автомата на одно сырое измерение."""
    if raw < 0:
        raise ValueError(f"Сырое измерение не может быть отрицательным: {raw}")

    if state.hits == 0:
        first, hits = raw, 1
    elif abs(raw - state.first_measurement) <= cfg.max_error:
        first, hits = state.first_measurement, state.hits + 1
    else:
        # рестарт без отправки
        first, hits = raw, 1

    if hits >= cfg.max_hits:
        return FilterState(hits=0, first_measurement=first), first
    return FilterState(hits=hits, first_measurement=first), None


class MeasurementFilter:
    def __init__(self, cfg: FilterConfig = FilterConfig()):
        self.cfg = cfg
        self.state = FilterState()
        self.consumed = 0
        self.emitted = 0
        self.restarts = 0

    def push(self, raw: float) -> Optional[float]:
        previous_hits = self.state.hits
        self.state, emitted = ingest(self.state, self.cfg, raw)
        self.consumed += 1
        if previous_hits > 0 and self.state.hits == 1:
            self.restarts += 1
        if emitted is not None:
            self.emitted += 1
        return emitted


def filter_stream(values: Iterable[float], cfg: FilterConfig = FilterConfig()) -> List[float]:
    measurement_filter = MeasurementFilter(cfg)
    emitted = [value for value in (measurement_filter.push(raw) for raw in values) if value is not None]
    logger.info(f"Фильтр: принято {measurement_filter.consumed}, отправлено {len(emitted)}, "
                f"рестартов {measurement_filter.restarts}")
    return emitted
