"""Двумерный мир из прямоугольных препятствий, кинематика робота и датчики расстояния."""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from neuro.encoder import tof_from_distance
from scenario.script import ScenarioScript
from utils.logger import setup_logger

logger = setup_logger('world')

FORWARD = 'forward'
TURNING = 'turning'


class WorldEscapeError(RuntimeError):
    """Робот покинул арену или въехал в препятствие."""


@dataclass(frozen=True)
class Box:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"Вырожденный прямоугольник: {self}")

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    @classmethod
    def from_value(cls, value) -> 'Box':
        if isinstance(value, dict):
            return cls(float(value['x_min']), float(value['y_min']), float(value['x_max']), float(value['y_max']))
        return cls(*map(float, value))


@dataclass
class Pose:
    x: float = 0.0
    y: float = 0.0
    heading_deg: float = 90.0


@dataclass
class WorldModel:
    boxes: List[Box] = field(default_factory=list)
    start: Pose = field(default_factory=Pose)
    speed_cm_s: float = 10.0
    turn_rate_deg_s: float = 45.0
    bounds: Box = field(default_factory=lambda: Box(-500.0, -500.0, 500.0, 500.0))
    name: str = 'world'

    def __post_init__(self):
        if self.speed_cm_s < 0 or self.turn_rate_deg_s <= 0:
            raise ValueError(f"Скорость >= 0 и скорость поворота > 0, получено {self.speed_cm_s}, "
                             f"{self.turn_rate_deg_s}")
        self.check(self.start)
        self._boxes = np.array([[b.x_min, b.y_min, b.x_max, b.y_max] for b in self.boxes],
                               dtype=float).reshape(-1, 4)

    def check(self, pose: Pose):
        """Бросает WorldEscapeError, если позиция вне арены или внутри препятствия."""
        if not self.bounds.contains(pose.x, pose.y):
            raise WorldEscapeError(f"Робот покинул арену: ({pose.x:.2f}, {pose.y:.2f}), границы {self.bounds}")
        for box in self.boxes:
            if box.contains(pose.x, pose.y):
                raise WorldEscapeError(f"Робот внутри препятствия {box}: ({pose.x:.2f}, {pose.y:.2f})")

    def ray_distance(self, x: float, y: float, heading_deg: float) -> float:
        """Расстояние вдоль луча до ближайшего прямоугольника (метод плит); inf, если промах."""
        if not len(self._boxes):
            return math.inf
        theta = math.radians(heading_deg)
        direction = (math.cos(theta), math.sin(theta))
        origin = (x, y)
        t_near = np.full(len(self._boxes), -np.inf)
        t_far = np.full(len(self._boxes), np.inf)
        hit = np.ones(len(self._boxes), dtype=bool)
        for axis in (0, 1):
            lo, hi = self._boxes[:, axis], self._boxes[:, axis + 2]
            d, o = direction[axis], origin[axis]
            if abs(d) < 1e-12:
                hit &= (lo <= o) & (o <= hi)
                continue
            t1 = (lo - o) / d
            t2 = (hi - o) / d
            t_near = np.maximum(t_near, np.minimum(t1, t2))
            t_far = np.minimum(t_far, np.maximum(t1, t2))
        hit &= t_far >= np.maximum(t_near, 0.0)
        if not hit.any():
            return math.inf
        return float(np.maximum(t_near[hit], 0.0).min())

    @classmethod
    def from_dict(cls, data: Dict, defaults: Optional[Dict] = None) -> 'WorldModel':
        defaults = defaults or {}
        start = data.get('start', {})
        kwargs = {
            'boxes': [Box.from_value(b) for b in data.get('boxes', [])],
            'start': Pose(float(start.get('x', 0.0)), float(start.get('y', 0.0)),
                          float(start.get('heading_deg', 90.0))),
            'speed_cm_s': float(data.get('speed_cm_s', defaults.get('speed_cm_s', 10.0))),
            'turn_rate_deg_s': float(data.get('turn_rate_deg_s', defaults.get('turn_rate_deg_s', 45.0))),
            'name': data.get('name', 'world'),
        }
        if 'bounds' in data:
            kwargs['bounds'] = Box.from_value(data['bounds'])
        return cls(**kwargs)

    def to_dict(self) -> Dict:
        return {
            'name': self.name,
            'boxes': [[b.x_min, b.y_min, b.x_max, b.y_max] for b in self.boxes],
            'start': {'x': self.start.x, 'y': self.start.y, 'heading_deg': self.start.heading_deg},
            'speed_cm_s': self.speed_cm_s,
            'turn_rate_deg_s': self.turn_rate_deg_s,
            'bounds': [self.bounds.x_min, self.bounds.y_min, self.bounds.x_max, self.bounds.y_max],
        }

    @classmethod
    def closed_arena(cls, half_size: float = 100.0, wall: float = 10.0, **kwargs) -> 'WorldModel':
        """Замкнутая арена 2*half_size x 2*half_size, робот в центре смотрит вдоль +y."""
        h, w = half_size, wall
        boxes = [
            Box(-h - w, -h - w, h + w, -h),   # низ
            Box(-h - w, h, h + w, h + w),     # верх
            Box(-h - w, -h - w, -h, h + w),   # лево
            Box(h, -h - w, h + w, h + w),     # право
        ]
        margin = h + w + 50.0
        return cls(boxes=boxes, start=Pose(0.0, 0.0, 90.0), bounds=Box(-margin, -margin, margin, margin),
                   name='closed_arena', **kwargs)

    @classmethod
    def single_wall(cls, distance_cm: float = 100.0, **kwargs) -> 'WorldModel':
        """Стена поперёк пути на distance_cm впереди робота."""
        return cls(boxes=[Box(-200.0, distance_cm, 200.0, distance_cm + 10.0)], start=Pose(0.0, 0.0, 90.0),
                   name='single_wall', **kwargs)


class RobotBody:
    """Кинематика: движение вперёд или поворот направо на месте."""

    def __init__(self, world: WorldModel):
        self.world = world
        self.pose = Pose(world.start.x, world.start.y, world.start.heading_deg)

    def advance(self, mode: str, dt_ms: float):
        seconds = dt_ms / 1000.0
        if mode == FORWARD:
            theta = math.radians(self.pose.heading_deg)
            self.pose.x += self.world.speed_cm_s * seconds * math.cos(theta)
            self.pose.y += self.world.speed_cm_s * seconds * math.sin(theta)
        elif mode == TURNING:
            self.pose.heading_deg -= self.world.turn_rate_deg_s * seconds
        else:
            raise ValueError(f"Неизвестный режим движения: {mode!r}")
        self.world.check(self.pose)

    def distance(self) -> float:
        return self.world.ray_distance(self.pose.x, self.pose.y, self.pose.heading_deg)


class RangeSensor:
    """Ультразвуковой датчик: целые мкс, ограничение дальности, опциональный шум +-noise_mm."""

    def __init__(self, max_range_cm: float = 100.0, noise_mm: float = 0.0, seed: int = 0):
        if max_range_cm <= 0 or noise_mm < 0:
            raise ValueError(f"max_range_cm > 0 и noise_mm >= 0, получено {max_range_cm}, {noise_mm}")
        self.max_range_cm = max_range_cm
        self.noise_mm = noise_mm
        self._rng = np.random.default_rng(seed)

    def true_distance(self, now: float) -> float:
        raise NotImplementedError

    def read(self, now: float) -> int:
        d = min(self.true_distance(now), self.max_range_cm)
        if self.noise_mm:
            d += self._rng.uniform(-self.noise_mm, self.noise_mm) / 10.0
        return int(round(tof_from_distance(max(d, 0.0))))


class ScriptedSensor(RangeSensor):
    def __init__(self, script: ScenarioScript, **kwargs):
        super().__init__(**kwargs)
        self.script = script

    def true_distance(self, now: float) -> float:
        return self.script.distance_at(now)


class WorldSensor(RangeSensor):
    def __init__(self, body: RobotBody, **kwargs):
        super().__init__(**kwargs)
        self.body = body

    def true_distance(self, now: float) -> float:
        return self.body.distance()
