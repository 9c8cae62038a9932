"""Кодирование времени пролёта (ToF) в межспайковый интервал живого инжектора."""
import math
from dataclasses import dataclass, replace
from typing import Iterable, List, Optional

from neuro.lif import SpikeEvent
from utils.logger import setup_logger

logger = setup_logger('encoder')

MAX_TOF_US = 5883
US_PER_CM = 58.83
ISI_FLOOR_S = 0.001
ISI_CEIL_S = 1.001
# защита от двоичного округления isi * 1000
_EPS_MS = 1e-9


@dataclass(frozen=True)
class TofMeasurement:
    tof_us: float
    t_recv: float = 0.0

    def __post_init__(self):
        if self.tof_us < 0:
            raise ValueError(f"ToF не может быть отрицательным: {self.tof_us}")


def isi_from_tof(tof_us: float) -> float:
    """ISI в секундах: (min(tof, 5883) / 5883)^2 + 0.001."""
    if tof_us < 0:
        raise ValueError(f"ToF не может быть отрицательным: {tof_us}")
    x = min(tof_us, MAX_TOF_US) / MAX_TOF_US
    return x * x + ISI_FLOOR_S


def isi_ms(tof_us: float) -> float:
    return isi_from_tof(tof_us) * 1000.0


def tof_from_isi(isi_s: float) -> float:
    """Обратное преобразование для ISI в [0.001, 1.001] с."""
    if not ISI_FLOOR_S <= isi_s <= ISI_CEIL_S + 1e-12:
        raise ValueError(f"ISI {isi_s} с вне диапазона [{ISI_FLOOR_S}, {ISI_CEIL_S}]")
    return MAX_TOF_US * math.sqrt(max(isi_s - ISI_FLOOR_S, 0.0))


def tof_from_distance(d_cm: float) -> float:
    if d_cm < 0:
        raise ValueError(f"Расстояние не может быть отрицательным: {d_cm}")
    return d_cm * US_PER_CM


def distance_from_tof(tof_us: float) -> float:
    if tof_us < 0:
        raise ValueError(f"ToF не может быть отрицательным: {tof_us}")
    return tof_us / US_PER_CM


@dataclass
class EncoderState:
    current_isi: float = ISI_CEIL_S
    last_fire: float = 0.0
    default_tof: float = MAX_TOF_US

    @classmethod
    def initial(cls, default_tof: float = MAX_TOF_US) -> 'EncoderState':
        return cls(current_isi=isi_from_tof(default_tof), last_fire=0.0, default_tof=default_tof)


def tick(state: EncoderState, now: float, source: str = 'injector') -> Optional[SpikeEvent]:
    """Выпускает спайк, если с последнего прошло не меньше текущего ISI."""
    if now < state.last_fire:
        raise ValueError(f"Время {now} мс раньше последнего спайка {state.last_fire} мс")
    if now - state.last_fire >= state.current_isi * 1000.0 - _EPS_MS:
        state.last_fire = now
        return SpikeEvent(t=now, source=source)
    return None


def update_tof(state: EncoderState, m: TofMeasurement) -> EncoderState:
    """Новый ISI вступает в силу с текущего незавершённого интервала."""
    return replace(state, current_isi=isi_from_tof(m.tof_us))


class LiveInjector:
    """Источник спайков, частотой которого управляют внешние измерения."""

    def __init__(self, default_tof: float = MAX_TOF_US, source: str = 'injector'):
        self.state = EncoderState.initial(default_tof)
        self.source = source
        self.tof_us = float(default_tof)
        self.updates = 0

    @property
    def isi_ms(self) -> float:
        return self.state.current_isi * 1000.0

    def update(self, m: TofMeasurement):
        self.state = update_tof(self.state, m)
        self.tof_us = float(m.tof_us)
        self.updates += 1

    def tick(self, now: float) -> Optional[SpikeEvent]:
        return tick(self.state, now, self.source)


def replay(measurements: Iterable[TofMeasurement], horizon: Optional[float] = None,
           dt: float = 1.0) -> List[SpikeEvent]:
    """Проигрывает измерения с шагом dt; измерение с t_recv <= now применяется до тика."""
    pending = sorted(measurements, key=lambda m: m.t_recv)
    if horizon is None:
        horizon = (pending[-1].t_recv + dt) if pending else 0.0
    injector = LiveInjector()
    spikes: List[SpikeEvent] = []
    index = 0
    for k in range(int(round(horizon / dt))):
        now = k * dt
        while index < len(pending) and pending[index].t_recv <= now:
            injector.update(pending[index])
            index += 1
        event = injector.tick(now)
        if event is not None:
            spikes.append(event)
    logger.info(f"Проигрывание: {len(pending)} измерений, {len(spikes)} спайков за {horizon} мс")
    return spikes


def injector_train(isi_s: float, horizon: float, dt: float = 1.0, source: str = 'injector') -> List[SpikeEvent]:
    """Поток с постоянным ISI, квантованный тем же правилом тика, что и инжектор."""
    if isi_s <= 0:
        raise ValueError(f"ISI должен быть > 0, получено {isi_s}")
    state = EncoderState(current_isi=isi_s)
    spikes = []
    for k in range(int(round(horizon / dt))):
        event = tick(state, k * dt, source)
        if event is not None:
            spikes.append(event)
    return spikes
