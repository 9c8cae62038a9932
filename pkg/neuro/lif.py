"""Дискретная модель LIF-нейрона с экспоненциальными синаптическими токами.

Единицы: токи в нА, потенциалы в мВ, R = tau_m / c_m в МОм (нА * МОм = мВ),
время в мс. Порядок шага фиксирован: вставка спайков -> интегрирование
мембраны -> затухание токов -> порог.
"""
import math
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from utils.csv_writer import read_csv, save_to_csv
from utils.logger import setup_logger

logger = setup_logger('lif')

TRACE_FIELDS = ['t_ms', 'v_mV', 'i_e_nA', 'i_i_nA', 'fired']


@dataclass(frozen=True)
class NeuronParams:
    c_m: float = 1.0
    tau_m: float = 100.0
    tau_refrac: float = 0.0
    tau_syn_E: float = 5.0
    tau_syn_I: float = 5.0
    v_rest: float = -65.0
    v_reset: float = -65.0
    v_thresh: float = -59.5
    dt: float = 1.0
    w_in: float = 1.0
    syn_delay: int = 1

    def __post_init__(self):
        for name in ('c_m', 'tau_m', 'tau_syn_E', 'tau_syn_I', 'dt'):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} должен быть > 0, получено {getattr(self, name)}")
        if self.tau_refrac < 0:
            raise ValueError(f"tau_refrac должен быть >= 0, получено {self.tau_refrac}")
        if int(self.syn_delay) != self.syn_delay or self.syn_delay < 1:
            raise ValueError(f"syn_delay должен быть целым >= 1, получено {self.syn_delay}")
        if self.v_reset > self.v_thresh:
            raise ValueError(f"v_reset ({self.v_reset}) выше v_thresh ({self.v_thresh})")
        if not self.v_rest < self.v_thresh:
            raise ValueError(f"v_rest ({self.v_rest}) должен быть ниже v_thresh ({self.v_thresh})")

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> 'NeuronParams':
        known = {k: v for k, v in (data or {}).items() if k in cls.__dataclass_fields__}
        if 'syn_delay' in known:
            known['syn_delay'] = int(known['syn_delay'])
        return cls(**known)

    def to_dict(self) -> Dict:
        return asdict(self)

    def with_overrides(self, **overrides) -> 'NeuronParams':
        return replace(self, **overrides)

    @property
    def r_m(self) -> float:
        return self.tau_m / self.c_m

    @cached_property
    def decay_m(self) -> float:
        return math.exp(-self.dt / self.tau_m)

    @cached_property
    def decay_E(self) -> float:
        return math.exp(-self.dt / self.tau_syn_E)

    @cached_property
    def decay_I(self) -> float:
        return math.exp(-self.dt / self.tau_syn_I)

    @cached_property
    def q_in(self) -> float:
        return synaptic_increment(self)

    @property
    def refrac_steps(self) -> int:
        return int(round(self.tau_refrac / self.dt))


@dataclass(frozen=True)
class NeuronState:
    v: float
    i_syn_E: float = 0.0
    i_syn_I: float = 0.0
    refrac_remaining: int = 0

    @classmethod
    def at_rest(cls, params: NeuronParams) -> 'NeuronState':
        return cls(v=params.v_rest)


@dataclass(frozen=True, order=True)
class SpikeEvent:
    t: float
    source: str = field(default='', compare=False)

    def __post_init__(self):
        if self.t < 0:
            raise ValueError(f"Время спайка не может быть отрицательным: {self.t}")


def synaptic_increment(params: NeuronParams) -> float:
    """Прирост возбуждающего тока на один входной спайк (с поправкой на затухание)."""
    return params.w_in * (params.tau_syn_E / params.dt) * (1.0 - math.exp(-params.dt / params.tau_syn_E))


def step(state: NeuronState, params: NeuronParams, spikes_in: int = 0) -> Tuple[NeuronState, bool]:
    """Один тик dt. Возвращает (новое состояние, был ли спайк)."""
    if spikes_in < 0:
        raise ValueError(f"spikes_in должен быть >= 0, получено {spikes_in}")

    # (1) вставка входных спайков
    i_e = state.i_syn_E + spikes_in * params.q_in if spikes_in else state.i_syn_E
    i_i = state.i_syn_I

    # (2) мембрана
    refrac = state.refrac_remaining
    if refrac > 0:
        refrac -= 1
        v = params.v_reset
    else:
        v_inf = params.v_rest + (i_e - i_i) * params.r_m
        v = v_inf + (state.v - v_inf) * params.decay_m

    # (3) затухание токов
    i_e *= params.decay_E
    i_i *= params.decay_I

    # (4) порог
    fired = v >= params.v_thresh
    if fired:
        v = params.v_reset
        refrac = params.refrac_steps

    return NeuronState(v=v, i_syn_E=i_e, i_syn_I=i_i, refrac_remaining=refrac), fired


@dataclass
class LifTrace:
    t_ms: np.ndarray
    v: np.ndarray
    i_e: np.ndarray
    i_i: np.ndarray
    fired: np.ndarray

    def __len__(self) -> int:
        return len(self.t_ms)

    def rows(self):
        for t, v, ie, ii, f in zip(self.t_ms, self.v, self.i_e, self.i_i, self.fired):
            yield {'t_ms': _fmt_t(t), 'v_mV': repr(float(v)), 'i_e_nA': repr(float(ie)),
                   'i_i_nA': repr(float(ii)), 'fired': int(f)}

    def to_csv(self, filename: str, metadata: Optional[Dict] = None):
        save_to_csv(self.rows(), TRACE_FIELDS, filename, metadata)

    @classmethod
    def from_csv(cls, filename: str) -> 'LifTrace':
        _, rows = read_csv(filename)
        return cls(
            t_ms=np.array([float(r['t_ms']) for r in rows]),
            v=np.array([float(r['v_mV']) for r in rows]),
            i_e=np.array([float(r['i_e_nA']) for r in rows]),
            i_i=np.array([float(r['i_i_nA']) for r in rows]),
            fired=np.array([r['fired'] in ('1', 'True') for r in rows], dtype=bool),
        )


def _fmt_t(t: float) -> str:
    return str(int(t)) if float(t).is_integer() else repr(float(t))


class LifNeuron:
    """Пошаговая обёртка над step() с линией задержки синапса.

    Используется движком конвейера и офлайн-сценариями: спайк с меткой t
    вставляется в ток на шаге t/dt + syn_delay.
    """

    def __init__(self, params: NeuronParams, state: Optional[NeuronState] = None, source: str = 'engine'):
        self.params = params
        self.state = state or NeuronState.at_rest(params)
        self.source = source
        self.step_index = 0
        self.late_spikes = 0
        self._pending: Dict[int, int] = {}

    @property
    def now(self) -> float:
        return self.step_index * self.params.dt

    def schedule(self, t_ms: float, count: int = 1):
        """Планирует входной спайк с меткой t_ms (доставка через syn_delay)."""
        target = int(round(t_ms / self.params.dt)) + self.params.syn_delay
        if target < self.step_index:
            # опоздавший спайк доставляется на ближайшем шаге
            self.late_spikes += count
            target = self.step_index
        self._pending[target] = self._pending.get(target, 0) + count

    def advance(self) -> bool:
        """Выполняет шаг step_index; возвращает True при выходном спайке."""
        arriving = self._pending.pop(self.step_index, 0)
        self.state, fired = step(self.state, self.params, arriving)
        self.step_index += 1
        return fired


def _validate_train(train: Sequence[SpikeEvent], horizon: float):
    previous = None
    for event in train:
        if event.t < 0:
            raise ValueError(f"Отрицательное время входного спайка: {event.t}")
        if event.t >= horizon:
            raise ValueError(f"Входной спайк {event.t} мс за пределами горизонта {horizon} мс")
        if previous is not None and event.t < previous:
            raise ValueError(f"Входной поток не отсортирован: {event.t} после {previous}")
        previous = event.t


def run(params: NeuronParams, input_train: Sequence[SpikeEvent], horizon: float,
        state: Optional[NeuronState] = None) -> Tuple[List[SpikeEvent], LifTrace]:
    """Прогоняет нейрон на горизонте horizon мс по входному потоку."""
    _validate_train(input_train, horizon)
    n_steps = int(round(horizon / params.dt))

    arrivals = np.zeros(n_steps, dtype=np.int64)
    for event in input_train:
        index = int(round(event.t / params.dt)) + params.syn_delay
        if index < n_steps:
            arrivals[index] += 1

    v = np.empty(n_steps)
    i_e = np.empty(n_steps)
    i_i = np.empty(n_steps)
    fired = np.zeros(n_steps, dtype=bool)
    current = state or NeuronState.at_rest(params)
    output: List[SpikeEvent] = []
    for k in range(n_steps):
        current, fired[k] = step(current, params, int(arrivals[k]))
        v[k], i_e[k], i_i[k] = current.v, current.i_syn_E, current.i_syn_I
        if fired[k]:
            output.append(SpikeEvent(t=k * params.dt, source='output'))

    trace = LifTrace(t_ms=np.arange(n_steps) * params.dt, v=v, i_e=i_e, i_i=i_i, fired=fired)
    logger.info(f"Прогон LIF: горизонт={horizon} мс, входных спайков={len(input_train)}, выходных={len(output)}")
    return output, trace


def regular_train(rate_hz: float, t_start: float, t_stop: float, source: str = 'injector') -> List[SpikeEvent]:
    """Регулярный поток с частотой rate_hz на [t_start, t_stop)."""
    if rate_hz <= 0:
        raise ValueError(f"Частота должна быть > 0, получено {rate_hz}")
    period = 1000.0 / rate_hz
    count = int(math.ceil((t_stop - t_start) / period - 1e-9))
    return [SpikeEvent(t=t_start + k * period, source=source) for k in range(count)
            if t_start + k * period < t_stop]


def gate_train() -> List[SpikeEvent]:
    """Три сегмента: 1 Гц (0-2000 мс), 2 Гц (2000-4000 мс), 10 Гц (4000-5000 мс)."""
    return (regular_train(1.0, 0.0, 2000.0)
            + regular_train(2.0, 2000.0, 4000.0)
            + regular_train(10.0, 4000.0, 5000.0))
