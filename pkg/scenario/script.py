"""Сценарий эксперимента: последовательность сегментов с профилем расстояния."""
import json
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from utils.logger import setup_logger

logger = setup_logger('script')

CONSTANT = 'constant'
RAMP = 'ramp'
STEP = 'step'
APPEAR = 'appear'
PROFILES = (CONSTANT, RAMP, STEP, APPEAR)


@dataclass(frozen=True)
class Segment:
    duration_ms: float
    profile: str = CONSTANT
    distance_cm: float = 100.0      # constant, appear
    start_cm: float = 0.0           # ramp
    end_cm: float = 0.0             # ramp
    levels_cm: tuple = ()           # step
    on_ms: float = 1000.0           # appear
    off_ms: float = 1000.0          # appear
    absent_cm: float = 100.0        # appear

    def __post_init__(self):
        if self.duration_ms <= 0:
            raise ValueError(f"Длительность сегмента должна быть > 0, получено {self.duration_ms}")
        if self.profile not in PROFILES:
            raise ValueError(f"Неизвестный профиль {self.profile!r}, ожидается один из {PROFILES}")
        if self.profile == STEP and not self.levels_cm:
            raise ValueError("Профиль step требует непустой levels_cm")
        if self.profile == APPEAR and (self.on_ms <= 0 or self.off_ms < 0):
            raise ValueError(f"Профиль appear: on_ms > 0 и off_ms >= 0, получено {self.on_ms}, {self.off_ms}")
        distances = [self.distance_cm, self.start_cm, self.end_cm, self.absent_cm, *self.levels_cm]
        if min(distances) < 0:
            raise ValueError(f"Отрицательное расстояние в сегменте: {self}")

    def distances(self, tau: np.ndarray) -> np.ndarray:
        """Расстояния для локальных времён tau в [0, duration_ms)."""
        if self.profile == CONSTANT:
            return np.full(tau.shape, float(self.distance_cm))
        if self.profile == RAMP:
            return self.start_cm + (self.end_cm - self.start_cm) * tau / self.duration_ms
        if self.profile == STEP:
            levels = np.asarray(self.levels_cm, dtype=float)
            index = np.minimum((tau * len(levels) / self.duration_ms).astype(int), len(levels) - 1)
            return levels[index]
        phase = np.mod(tau, self.on_ms + self.off_ms)
        return np.where(phase < self.on_ms, float(self.distance_cm), float(self.absent_cm))

    @classmethod
    def from_dict(cls, data: Dict) -> 'Segment':
        data = dict(data)
        if 'levels_cm' in data:
            data['levels_cm'] = tuple(data['levels_cm'])
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def to_dict(self) -> Dict:
        base = {'duration_ms': self.duration_ms, 'profile': self.profile}
        if self.profile == CONSTANT:
            base['distance_cm'] = self.distance_cm
        elif self.profile == RAMP:
            base.update(start_cm=self.start_cm, end_cm=self.end_cm)
        elif self.profile == STEP:
            base['levels_cm'] = list(self.levels_cm)
        else:
            base.update(distance_cm=self.distance_cm, on_ms=self.on_ms, off_ms=self.off_ms,
                        absent_cm=self.absent_cm)
        return base


@dataclass
class ScenarioScript:
    segments: List[Segment] = field(default_factory=list)
    name: str = 'script'

    @property
    def horizon_ms(self) -> float:
        return float(sum(s.duration_ms for s in self.segments))

    def sample(self, dt: float = 1.0) -> np.ndarray:
        """Истинное расстояние на каждом тике dt."""
        n = int(round(self.horizon_ms / dt))
        t = np.arange(n) * dt
        out = np.empty(n)
        start = 0.0
        for segment in self.segments:
            mask = (t >= start) & (t < start + segment.duration_ms)
            out[mask] = segment.distances(t[mask] - start)
            start += segment.duration_ms
        return out

    def distance_at(self, t: float) -> float:
        start = 0.0
        for segment in self.segments:
            if t < start + segment.duration_ms:
                return float(segment.distances(np.array([t - start]))[0])
            start += segment.duration_ms
        return float(self.segments[-1].distances(np.array([self.segments[-1].duration_ms]))[0])

    @classmethod
    def from_dict(cls, data: Dict) -> 'ScenarioScript':
        return cls(segments=[Segment.from_dict(s) for s in data.get('segments', [])],
                   name=data.get('name', 'script'))

    def to_dict(self) -> Dict:
        return {'name': self.name, 'segments': [s.to_dict() for s in self.segments]}

    @classmethod
    def from_json(cls, path: str) -> 'ScenarioScript':
        try:
            with open(path, 'r', encoding='utf-8') as f:
                return cls.from_dict(json.load(f))
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"Ошибка чтения сценария {path}: {e}")
            raise

    # Готовые сценарии экспериментов

    @classmethod
    def constant(cls, distance_cm: float, duration_ms: float) -> 'ScenarioScript':
        return cls([Segment(duration_ms, CONSTANT, distance_cm=distance_cm)], name=f'constant_{distance_cm}cm')

    @classmethod
    def ramp(cls, low_cm: float = 10.0, high_cm: float = 60.0, duration_ms: float = 60000.0) -> 'ScenarioScript':
        half = duration_ms / 2.0
        return cls([Segment(half, RAMP, start_cm=low_cm, end_cm=high_cm),
                    Segment(half, RAMP, start_cm=high_cm, end_cm=low_cm)], name='ramp')

    @classmethod
    def appearing(cls, distance_cm: float = 25.0, absent_ms: float = 2000.0,
                  present_ms: float = 8000.0, absent_cm: float = 100.0) -> 'ScenarioScript':
        return cls([Segment(absent_ms, CONSTANT, distance_cm=absent_cm),
                    Segment(present_ms, CONSTANT, distance_cm=distance_cm)], name=f'appear_{distance_cm}cm')
