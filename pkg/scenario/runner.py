"""Офлайн-прогоны экспериментов по виртуальным часам.

Цепочка датчик -> фильтр -> кодировщик -> нейрон -> избегание собрана здесь
напрямую из тех же классов, что и конечные точки конвейера, и с тем же
порядком внутри тика, поэтому спайковые потоки совпадают без сдвига.
"""
import copy
from typing import Dict, List, Optional, Tuple

import numpy as np

from neuro.analysis import FiringWindow, IsiSeries, firing_windows, isi_series
from neuro.encoder import LiveInjector, TofMeasurement, distance_from_tof, tof_from_isi
from neuro.lif import LifNeuron, LifTrace, NeuronParams, SpikeEvent, gate_train, run
from neuro.measurement_filter import FilterConfig, MeasurementFilter
from pipeline.endpoints import AvoidanceController
from scenario.report import RunReport
from scenario.script import ScenarioScript
from scenario.world import RangeSensor, RobotBody, ScriptedSensor, WorldEscapeError, WorldModel, WorldSensor
from utils.config import DEFAULT_CONFIG
from utils.logger import setup_logger

logger = setup_logger('runner')

GATE_HORIZON_MS = 5000.0


class BracketError(ValueError):
    """Интервал поиска порога задан неверно."""


def _config(config: Optional[Dict]) -> Dict:
    return config if config is not None else copy.deepcopy(DEFAULT_CONFIG)


def _sensor_kwargs(config: Dict) -> Dict:
    sensor_cfg = config['sensor']
    return {'max_range_cm': sensor_cfg['max_range_cm'], 'noise_mm': sensor_cfg['noise_mm'],
            'seed': sensor_cfg['seed']}


def _simulate(name: str, sensor: RangeSensor, params: NeuronParams, cfg: FilterConfig, horizon_ms: float,
              config: Dict, body: Optional[RobotBody] = None) -> RunReport:
    dt = params.dt
    n = int(round(horizon_ms / dt))
    period = config['sensor']['period_ms']
    measurement_filter = MeasurementFilter(cfg)
    injector = LiveInjector()
    neuron = LifNeuron(params)
    avoidance = AvoidanceController(config['pipeline']['silence_ms'])

    t_ms = np.arange(n) * dt
    dist = np.empty(n)
    tof = np.empty(n)
    isi = np.empty(n)
    in_spike = np.zeros(n, dtype=bool)
    out_spike = np.zeros(n, dtype=bool)
    modes = np.empty(n, dtype=object)
    v, i_e, i_i = np.empty(n), np.empty(n), np.empty(n)
    trajectory = np.empty((n, 3)) if body is not None else None

    next_sample = 0.0
    for k in range(n):
        now = t_ms[k]
        avoidance.update(now)
        if body is not None:
            body.advance(avoidance.mode, dt)
            trajectory[k] = (body.pose.x, body.pose.y, body.pose.heading_deg)
        dist[k] = sensor.true_distance(now)

        if now >= next_sample:
            next_sample += period
            emitted = measurement_filter.push(sensor.read(now))
            if emitted is not None:
                injector.update(TofMeasurement(tof_us=emitted, t_recv=now))
        tof[k] = injector.tof_us
        isi[k] = injector.isi_ms

        if injector.tick(now) is not None:
            in_spike[k] = True
            neuron.schedule(now)
        if neuron.advance():
            out_spike[k] = True
            avoidance.on_spike(now)
        v[k], i_e[k], i_i[k] = neuron.state.v, neuron.state.i_syn_E, neuron.state.i_syn_I
        modes[k] = avoidance.mode

    trace = LifTrace(t_ms=t_ms.copy(), v=v, i_e=i_e, i_i=i_i, fired=out_spike.copy())
    metadata = {
        'name': name,
        'params': params.to_dict(),
        'filter': {'max_hits': cfg.max_hits, 'max_error': cfg.max_error},
        'sensor_period_ms': period,
        'filter_restarts': measurement_filter.restarts,
    }
    logger.info(f"Прогон {name}: {n} тиков, входных спайков {int(in_spike.sum())}, "
                f"выходных {int(out_spike.sum())}")
    return RunReport(t_ms=t_ms, dist_cm=dist, tof_us=tof, isi_ms=isi, in_spike=in_spike, out_spike=out_spike,
                     mode=modes.astype(str), trace=trace, trajectory=trajectory, metadata=metadata)


def run_scenario(script: ScenarioScript, params: NeuronParams = NeuronParams(),
                 cfg: FilterConfig = FilterConfig(), config: Optional[Dict] = None) -> RunReport:
    """Прогон сценария расстояний через фильтр, кодировщик и нейрон."""
    if not script.segments:
        logger.error(f"Пустой сценарий {script.name}")
        raise ValueError("Сценарий не содержит ни одного сегмента")
    config = _config(config)
    sensor = ScriptedSensor(script, **_sensor_kwargs(config))
    report = _simulate(script.name, sensor, params, cfg, script.horizon_ms, config)
    report.metadata['script'] = script.to_dict()
    return report


def run_world(world: WorldModel, params: NeuronParams = NeuronParams(), cfg: FilterConfig = FilterConfig(),
              horizon_ms: float = 60000.0, config: Optional[Dict] = None) -> RunReport:
    """Замкнутый контур: луч до ближайшего препятствия -> конвейер -> движение робота."""
    if horizon_ms <= 0:
        raise ValueError(f"Горизонт должен быть > 0, получено {horizon_ms}")
    config = _config(config)
    body = RobotBody(world)
    sensor = WorldSensor(body, **_sensor_kwargs(config))
    try:
        report = _simulate(world.name, sensor, params, cfg, horizon_ms, config, body=body)
    except WorldEscapeError as e:
        logger.error(f"Прогон мира {world.name} прерван: {e}")
        raise
    report.metadata['world'] = world.to_dict()
    return report


def detects(distance_cm: float, params: NeuronParams = NeuronParams(), cfg: FilterConfig = FilterConfig(),
            config: Optional[Dict] = None) -> bool:
    """Есть ли выходные спайки после переходного процесса при постоянном расстоянии."""
    config = _config(config)
    scenario_cfg = config['scenario']
    script = ScenarioScript.constant(distance_cm, scenario_cfg['threshold_horizon_ms'])
    report = run_scenario(script, params, cfg, config)
    return bool(np.any(report.out_spike[report.t_ms >= scenario_cfg['transient_ms']]))


def threshold_search(params: NeuronParams = NeuronParams(), lo: float = 10.0, hi: float = 100.0,
                     cfg: FilterConfig = FilterConfig(), config: Optional[Dict] = None,
                     resolution: float = 0.1) -> float:
    """Бисекция по расстоянию: наибольшее расстояние, на котором выход ещё есть."""
    if not lo < hi:
        raise BracketError(f"Ожидается lo < hi, получено [{lo}, {hi}]")
    if not detects(lo, params, cfg, config):
        logger.error(f"Нижняя граница {lo} см не детектируется")
        raise BracketError(f"На нижней границе {lo} см выходных спайков нет")
    if detects(hi, params, cfg, config):
        logger.error(f"Верхняя граница {hi} см детектируется")
        raise BracketError(f"На верхней границе {hi} см выход ещё есть")
    iterations = 0
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if detects(mid, params, cfg, config):
            lo = mid
        else:
            hi = mid
        iterations += 1
    logger.info(f"Порог детекции: {lo:.3f} см ({iterations} итераций)")
    return lo


def _isi_per_tick(times: np.ndarray, n: int, dt: float) -> np.ndarray:
    """ISI интервала, которому принадлежит тик; до первого и после последнего спайка берутся крайние."""
    isi = np.diff(times)
    if len(isi) == 0:
        return np.full(n, np.nan)
    t = np.arange(n) * dt
    index = np.clip(np.searchsorted(times, t, side='right') - 1, 0, len(isi) - 1)
    return isi[index]


def run_gate(params: NeuronParams = NeuronParams(),
             train: Optional[List[SpikeEvent]] = None,
             horizon_ms: float = GATE_HORIZON_MS,
             config: Optional[Dict] = None) -> Tuple[RunReport, List[FiringWindow], IsiSeries]:
    """Три сегмента входной частоты (1, 2, 10 Гц) напрямую в нейрон: окна и ряд ISI."""
    config = _config(config)
    train = train if train is not None else gate_train()
    outputs, trace = run(params, train, horizon_ms)
    windows = firing_windows(trace, params, train)
    series = isi_series(train)

    n = len(trace)
    times = np.array([e.t for e in train])
    isi = _isi_per_tick(times, n, params.dt)
    tof = np.array([tof_from_isi(min(d / 1000.0, 1.001)) for d in isi])
    in_spike = np.zeros(n, dtype=bool)
    in_spike[np.round(times / params.dt).astype(int)] = True

    avoidance = AvoidanceController(config['pipeline']['silence_ms'])
    modes = np.empty(n, dtype=object)
    for k in range(n):
        avoidance.update(trace.t_ms[k])
        if trace.fired[k]:
            avoidance.on_spike(trace.t_ms[k])
        modes[k] = avoidance.mode

    report = RunReport(t_ms=trace.t_ms, dist_cm=np.array([distance_from_tof(x) for x in tof]),
                       tof_us=np.round(tof, 3), isi_ms=isi, in_spike=in_spike, out_spike=trace.fired.copy(),
                       mode=modes.astype(str), trace=trace,
                       metadata={'name': 'gate', 'params': params.to_dict(), 'windows': len(windows)})
    logger.info(f"Прогон gate: {len(train)} входных, {len(outputs)} выходных спайков, {len(windows)} окон")
    return report, windows, series
