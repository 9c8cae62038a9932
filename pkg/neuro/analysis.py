"""Аналитика по трассам: минимальный потенциал срабатывания, окна срабатывания,
ряды ISI и частота среза фильтра высоких частот."""
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from neuro.encoder import injector_train
from neuro.lif import LifTrace, NeuronParams, NeuronState, SpikeEvent, run, step
from utils.csv_writer import save_to_csv
from utils.logger import setup_logger

logger = setup_logger('analysis')

SPIKE_TO_PEAK = 'spike-to-peak'
PEAK_TO_MINFIRE = 'peak-to-minfire'


class NeverFiresError(ValueError):
    """Параметры, при которых одиночный спайк не вызывает срабатывания ни при каком v0."""


@dataclass(frozen=True)
class FiringWindow:
    t_start: float
    t_end: float
    kind: str

    def __post_init__(self):
        if self.t_end < self.t_start:
            raise ValueError(f"Окно заканчивается раньше начала: {self.t_start} > {self.t_end}")
        if self.kind not in (SPIKE_TO_PEAK, PEAK_TO_MINFIRE):
            raise ValueError(f"Неизвестный тип окна: {self.kind}")

    @property
    def span(self) -> float:
        return self.t_end - self.t_start


@dataclass
class IsiSeries:
    t: np.ndarray
    isi: np.ndarray

    def __len__(self) -> int:
        return len(self.isi)

    def pairs(self) -> List[Tuple[float, float]]:
        return [(float(t), float(d)) for t, d in zip(self.t, self.isi)]

    def to_csv(self, filename: str, metadata: Optional[dict] = None):
        rows = ({'t_ms': t, 'isi_ms': d} for t, d in self.pairs())
        save_to_csv(rows, ['t_ms', 'isi_ms'], filename, metadata)


@dataclass(frozen=True)
class ArrivalOutcome:
    t: float
    in_window: bool
    fired: bool


def _fires_after_one_spike(v0: float, params: NeuronParams, max_steps: int) -> bool:
    state = NeuronState(v=v0)
    previous = v0
    spikes_in = 1
    for _ in range(max_steps):
        state, fired = step(state, params, spikes_in)
        spikes_in = 0
        if fired:
            return True
        # после пика потенциал только убывает
        if state.v < previous:
            return False
        previous = state.v
    return False


def min_firing_potential(params: NeuronParams, resolution: float = 1e-4) -> float:
    """Инфимум v0, из которого один входной спайк приводит к срабатыванию (бисекция)."""
    max_steps = int(math.ceil(20.0 * max(params.tau_m, params.tau_syn_E) / params.dt))
    lo, hi = params.v_rest, params.v_thresh - 1e-9
    if _fires_after_one_spike(lo, params, max_steps):
        return lo
    if not _fires_after_one_spike(hi, params, max_steps):
        logger.error(f"Нейрон не срабатывает даже из v0={hi:.6f} мВ: {params}")
        raise NeverFiresError(f"Один спайк не вызывает срабатывания ни при каком v0 (v_thresh={params.v_thresh})")
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if _fires_after_one_spike(mid, params, max_steps):
            hi = mid
        else:
            lo = mid
    logger.info(f"Минимальный потенциал срабатывания: {hi:.4f} мВ")
    return hi


def arrival_steps(train: Sequence[SpikeEvent], params: NeuronParams) -> np.ndarray:
    steps = np.array([int(round(e.t / params.dt)) + params.syn_delay for e in train], dtype=np.int64)
    return np.unique(steps)


def firing_windows(trace: LifTrace, params: NeuronParams, input_train: Sequence[SpikeEvent],
                   v_min: Optional[float] = None) -> List[FiringWindow]:
    """Окна срабатывания для каждого входного спайка по трассе движка.

    Окно «спайк-пик» тянется от прихода спайка (момент вставки тока) до
    локального максимума v, окно «пик-порог» от максимума до первого
    опускания ниже минимального потенциала срабатывания. Окна обрезаются
    следующим входным или выходным спайком. Если максимум ниже минимального
    потенциала срабатывания, окон у спайка нет.
    """
    n = len(trace)
    if input_train and (n == 0 or max(e.t for e in input_train) >= n * params.dt):
        logger.error(f"Поток длиннее трассы: {n} шагов")
        raise ValueError("Горизонт трассы не совпадает с входным потоком")
    if v_min is None:
        v_min = min_firing_potential(params)

    v = trace.v
    dt = params.dt
    arrivals = [int(i) for i in arrival_steps(input_train, params) if i < n]
    out_steps = np.flatnonzero(trace.fired)
    windows: List[FiringWindow] = []

    for j, i0 in enumerate(arrivals):
        i_next = arrivals[j + 1] if j + 1 < len(arrivals) else n
        k = int(np.searchsorted(out_steps, i0))
        i_out = int(out_steps[k]) if k < len(out_steps) and out_steps[k] < i_next else None
        i_lim = i_out if i_out is not None else i_next

        peak = None
        for m in range(i0, i_lim - 1):
            if v[m + 1] <= v[m]:
                peak = m
                break

        if peak is None:
            if i_out is not None or (i_lim > i0 and v[i_lim - 1] >= v_min):
                windows.append(FiringWindow(i0 * dt, i_lim * dt, SPIKE_TO_PEAK))
            continue
        if v[peak] < v_min:
            continue

        windows.append(FiringWindow(i0 * dt, peak * dt, SPIKE_TO_PEAK))
        end = i_lim
        for m in range(peak + 1, i_lim):
            if v[m] < v_min:
                end = m
                break
        windows.append(FiringWindow(peak * dt, end * dt, PEAK_TO_MINFIRE))
    return windows


def window_open_at(windows: Sequence[FiringWindow], t: float) -> bool:
    """Открыто ли в момент t окно, начатое строго раньше t."""
    return any(w.t_start < t <= w.t_end for w in windows)


def classify_arrivals(trace: LifTrace, params: NeuronParams, input_train: Sequence[SpikeEvent],
                      windows: Optional[Sequence[FiringWindow]] = None) -> List[ArrivalOutcome]:
    """Для каждого прихода: попал ли он в открытое окно и был ли выходной спайк до следующего прихода.

    Окна описывают отклик на одиночный вход, поэтому правило «выходной спайк
    только в окне» выполняется на трёхчастотном потоке, но не на частых входах:
    уже при 20 Гц токи накапливаются, и выход бывает без открытого окна.
    """
    if windows is None:
        windows = firing_windows(trace, params, input_train)
    n = len(trace)
    arrivals = [int(i) for i in arrival_steps(input_train, params) if i < n]
    out_steps = np.flatnonzero(trace.fired)
    outcomes = []
    for j, i0 in enumerate(arrivals):
        i_next = arrivals[j + 1] if j + 1 < len(arrivals) else n
        fired = bool(np.any((out_steps >= i0) & (out_steps < i_next)))
        t = i0 * params.dt
        outcomes.append(ArrivalOutcome(t=t, in_window=window_open_at(windows, t), fired=fired))
    return outcomes


def isi_series(train: Sequence[SpikeEvent]) -> IsiSeries:
    times = np.array([e.t for e in train], dtype=float)
    if len(times) < 2:
        return IsiSeries(t=np.array([]), isi=np.array([]))
    diffs = np.diff(times)
    if np.any(diffs < 0):
        raise ValueError("Поток спайков не отсортирован")
    return IsiSeries(t=times[1:], isi=diffs)


def firing_rate(train: Sequence[SpikeEvent], t_start: float, t_stop: float) -> float:
    """Средняя частота (Гц) на [t_start, t_stop)."""
    if t_stop <= t_start:
        raise ValueError(f"Пустой интервал [{t_start}, {t_stop})")
    count = sum(1 for e in train if t_start <= e.t < t_stop)
    return count * 1000.0 / (t_stop - t_start)


def silent_intervals(train: Sequence[SpikeEvent], t_start: float, t_stop: float,
                     min_gap: float) -> List[Tuple[float, float]]:
    """Максимальные промежутки без спайков длиной не меньше min_gap."""
    edges = [t_start] + [e.t for e in train if t_start <= e.t < t_stop] + [t_stop]
    return [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b - a >= min_gap]


def sustains_output(params: NeuronParams, rate_hz: float, horizon: float = 30000.0) -> bool:
    """Есть ли выходные спайки в последней трети прогона с постоянной частотой входа."""
    train = injector_train(1.0 / rate_hz, horizon, params.dt)
    output, _ = run(params, train, horizon)
    return any(e.t >= horizon * 2.0 / 3.0 for e in output)


def cutoff_rate(params: NeuronParams, lo_hz: float = 1.0, hi_hz: float = 1000.0,
                resolution: float = 0.01, horizon: float = 30000.0) -> float:
    """Наименьшая частота входа (с точностью resolution), дающая устойчивый выход."""
    if sustains_output(params, lo_hz, horizon):
        return lo_hz
    if not sustains_output(params, hi_hz, horizon):
        logger.error(f"Нет устойчивого выхода даже на {hi_hz} Гц: {params}")
        raise NeverFiresError(f"Нет устойчивого выхода на {hi_hz} Гц")
    while hi_hz - lo_hz > resolution:
        mid = 0.5 * (lo_hz + hi_hz)
        if sustains_output(params, mid, horizon):
            hi_hz = mid
        else:
            lo_hz = mid
    logger.info(f"Частота среза: {hi_hz:.3f} Гц")
    return hi_hz


def save_windows_csv(windows: Sequence[FiringWindow], filename: str, metadata: Optional[dict] = None):
    rows = ({'t_start_ms': w.t_start, 't_end_ms': w.t_end, 'kind': w.kind} for w in windows)
    save_to_csv(rows, ['t_start_ms', 't_end_ms', 'kind'], filename, metadata)
