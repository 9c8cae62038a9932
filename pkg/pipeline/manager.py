import threading
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from neuro.encoder import LiveInjector
from neuro.lif import NeuronParams, SpikeEvent
from neuro.measurement_filter import FilterConfig
from pipeline.clock import SimClock, WallClock
from pipeline.endpoints import BridgeEndpoint, EngineEndpoint, RobotEndpoint, RunLog
from pipeline.transport import BRIDGE, ENDPOINTS, ENGINE, ROBOT, InMemoryHub, Transport, UdpTransport
from scenario.script import ScenarioScript
from scenario.world import RangeSensor, RobotBody, ScriptedSensor, WorldModel, WorldSensor
from utils.config import load_config
from utils.logger import setup_logger

logger = setup_logger('pipeline_manager')


@dataclass
class PipelineResult:
    horizon_ms: float
    robot_spikes: List[SpikeEvent]
    engine_outputs: List[SpikeEvent]
    injected: List[SpikeEvent]
    run_log: RunLog
    counters: Dict[str, Dict[str, int]] = field(default_factory=dict)
    modes: List[str] = field(default_factory=list)


class PipelineManager:
    def __init__(self, config: Optional[Dict] = None, params: Optional[NeuronParams] = None,
                 filter_cfg: Optional[FilterConfig] = None):
        self.config = config or load_config()
        self.params = params or NeuronParams.from_dict(self.config['neuron'])
        self.filter_cfg = filter_cfg or FilterConfig.from_dict(self.config['filter'])
        self.endpoints = {}  # {name: {"thread": ..., "endpoint": ..., "running": bool}}
        self.run_log = RunLog()
        self._transports: Dict[str, Transport] = {}

    def _sensor(self, script: Optional[ScenarioScript], body: Optional[RobotBody]) -> RangeSensor:
        sensor_cfg = self.config['sensor']
        kwargs = {'max_range_cm': sensor_cfg['max_range_cm'], 'noise_mm': sensor_cfg['noise_mm'],
                  'seed': sensor_cfg['seed']}
        if body is not None:
            return WorldSensor(body, **kwargs)
        if script is None or not script.segments:
            raise ValueError("Нужен непустой сценарий или модель мира")
        return ScriptedSensor(script, **kwargs)

    def build(self, transports: Dict[str, Transport], script: Optional[ScenarioScript] = None,
              world: Optional[WorldModel] = None) -> Tuple[RobotEndpoint, BridgeEndpoint, EngineEndpoint]:
        """Создаёт три конечные точки поверх готовых транспортов."""
        pipeline_cfg = self.config['pipeline']
        body = RobotBody(world) if world is not None else None
        self.run_log = RunLog()
        robot = RobotEndpoint(transports[ROBOT], self._sensor(script, body), self.filter_cfg,
                              period_ms=self.config['sensor']['period_ms'], body=body,
                              silence_ms=pipeline_cfg['silence_ms'], dt=self.params.dt, run_log=self.run_log)
        bridge = BridgeEndpoint(transports[BRIDGE], LiveInjector(), buffer_size=pipeline_cfg['buffer_size'],
                                run_log=self.run_log)
        engine = EngineEndpoint(transports[ENGINE], self.params, run_log=self.run_log)
        return robot, bridge, engine

    def run_sim(self, script: Optional[ScenarioScript] = None, world: Optional[WorldModel] = None,
                horizon_ms: Optional[float] = None, hub: Optional[InMemoryHub] = None) -> PipelineResult:
        """Детерминированный прогон трёх точек в одном потоке по виртуальным часам."""
        horizon_ms = horizon_ms if horizon_ms is not None else (script.horizon_ms if script else 0.0)
        if horizon_ms <= 0:
            raise ValueError(f"Горизонт должен быть > 0, получено {horizon_ms}")
        hub = hub or InMemoryHub()
        transports = {name: hub.attach(name) for name in ENDPOINTS}
        robot, bridge, engine = self.build(transports, script, world)
        clock = SimClock(self.params.dt)
        modes = []
        n_ticks = int(round(horizon_ms / self.params.dt))
        logger.info(f"Конвейер (виртуальное время): горизонт {horizon_ms} мс, {n_ticks} тиков")
        for _ in range(n_ticks):
            now = clock.now()
            robot.sense(now)
            bridge.inbound(now)
            engine.step(now)
            bridge.outbound(now)
            robot.react(now)
            modes.append(robot.avoidance.mode)
            clock.advance()
        result = self._collect(horizon_ms, robot, bridge, engine)
        result.modes = modes
        if hub.lost:
            result.counters['hub'] = {'lost': hub.lost}
        logger.info(f"Конвейер завершён: робот получил {len(result.robot_spikes)} спайков, "
                    f"инжектор выпустил {len(result.injected)}")
        return result

    def _collect(self, horizon_ms, robot, bridge, engine) -> PipelineResult:
        return PipelineResult(
            horizon_ms=horizon_ms,
            robot_spikes=list(robot.spike_log),
            engine_outputs=list(engine.outputs),
            injected=list(bridge.injected),
            run_log=self.run_log,
            counters={ROBOT: dict(robot.counters), BRIDGE: dict(bridge.counters), ENGINE: dict(engine.counters)},
        )

    def start_realtime(self, script: Optional[ScenarioScript] = None, world: Optional[WorldModel] = None,
                       transports: Optional[Dict[str, Transport]] = None):
        """Запускает каждую точку в своём потоке с шагом dt по настенным часам."""
        if any(entry["running"] for entry in self.endpoints.values()):
            logger.warning("Конвейер уже запущен")
            return
        if transports is None:
            pipeline_cfg = self.config['pipeline']
            transports = {name: UdpTransport(name, pipeline_cfg['ports'], pipeline_cfg['host'])
                          for name in ENDPOINTS}
        self._transports = transports
        clock = WallClock(self.params.dt)
        clock.start()
        for name, instance in zip(ENDPOINTS, self.build(transports, script, world)):
            self.endpoints[name] = {
                "thread": threading.Thread(target=self._run_loop, args=(name, clock), daemon=True),
                "endpoint": instance,
                "running": True,
            }
        for name in ENDPOINTS:
            self.endpoints[name]["thread"].start()
            logger.info(f"Точка {name} запущена в отдельном потоке")

    def stop(self):
        for entry in self.endpoints.values():
            entry["running"] = False
        for name, entry in self.endpoints.items():
            entry["thread"].join(timeout=2.0)
            logger.info(f"Точка {name} остановлена")
        for transport in self._transports.values():
            transport.close()
        self._transports = {}

    def _run_loop(self, name: str, clock: WallClock):
        endpoint = self.endpoints[name]["endpoint"]
        dt = self.params.dt
        next_tick = 0.0
        while self.endpoints.get(name, {}).get("running", False):
            try:
                now = clock.now()
                endpoint.step(now)
            except Exception as e:
                logger.error(f"Ошибка в цикле точки {name}: {e}")
            next_tick = max(next_tick + dt, clock.now())
            clock.sleep_until(next_tick)

    def run_realtime(self, script: Optional[ScenarioScript] = None, world: Optional[WorldModel] = None,
                     horizon_ms: Optional[float] = None,
                     transports: Optional[Dict[str, Transport]] = None) -> PipelineResult:
        horizon_ms = horizon_ms if horizon_ms is not None else (script.horizon_ms if script else 0.0)
        if horizon_ms <= 0:
            raise ValueError(f"Горизонт должен быть > 0, получено {horizon_ms}")
        self.start_realtime(script, world, transports)
        time.sleep(horizon_ms / 1000.0)
        self.stop()
        robot, bridge, engine = (self.endpoints[name]["endpoint"] for name in ENDPOINTS)
        result = self._collect(horizon_ms, robot, bridge, engine)
        self.endpoints = {}
        return result
