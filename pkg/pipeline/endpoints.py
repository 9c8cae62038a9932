"""Конечные точки конвейера: робот, мост (хост кодировщика) и спайковый движок.

Каждая точка держит своё состояние и общается с остальными только кадрами
через Transport. Один вызов step(now) обрабатывает один тик.
"""
import threading
from collections import Counter, deque
from dataclasses import dataclass
from typing import Deque, List, Optional, Tuple

from neuro.encoder import LiveInjector, TofMeasurement
from neuro.lif import LifNeuron, NeuronParams, SpikeEvent
from neuro.measurement_filter import FilterConfig, MeasurementFilter
from pipeline.datagram import SPIKE_EVENT, TOF_MEASUREMENT, Datagram, DatagramError, decode, encode
from pipeline.transport import BRIDGE, ENGINE, ROBOT, PeerUnreachable, Transport
from scenario.world import FORWARD, TURNING, RangeSensor, RobotBody
from utils.csv_writer import save_to_csv
from utils.logger import setup_logger

logger = setup_logger('endpoints')

RUN_LOG_FIELDS = ['t_ms', 'endpoint', 'event', 'detail']


class RunLog:
    """Журнал событий конвейера `t_ms,endpoint,event,detail`."""

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self.rows: List[dict] = []
        self._lock = threading.Lock()

    def add(self, t_ms: float, endpoint: str, event: str, detail=''):
        if not self.enabled:
            return
        with self._lock:
            self.rows.append({'t_ms': t_ms, 'endpoint': endpoint, 'event': event, 'detail': detail})

    def events(self, endpoint: str, event: str) -> List[dict]:
        with self._lock:
            return [r for r in self.rows if r['endpoint'] == endpoint and r['event'] == event]

    def to_csv(self, filename: str, metadata: Optional[dict] = None):
        with self._lock:
            rows = list(self.rows)
        save_to_csv(rows, RUN_LOG_FIELDS, filename, metadata)


@dataclass
class AvoidanceState:
    mode: str = FORWARD
    last_spike_at: Optional[float] = None


class AvoidanceController:
    """Вперёд, пока нет спайков; поворот направо, пока спайки приходят чаще silence_ms."""

    def __init__(self, silence_ms: float = 500.0):
        self.silence_ms = silence_ms
        self.state = AvoidanceState()

    @property
    def mode(self) -> str:
        return self.state.mode

    def on_spike(self, now: float):
        self.state.mode = TURNING
        self.state.last_spike_at = now

    def update(self, now: float) -> str:
        if self.state.mode == TURNING and now - self.state.last_spike_at >= self.silence_ms:
            self.state.mode = FORWARD
        return self.state.mode


def _decode_or_count(frame: bytes, counters: Counter, name: str, now: float,
                     run_log: RunLog) -> Optional[Datagram]:
    try:
        return decode(frame)
    except DatagramError as e:
        counters['malformed'] += 1
        logger.warning(f"{name}: отброшен повреждённый кадр ({e})")
        run_log.add(now, name, 'malformed', frame.hex())
        return None


class RobotEndpoint:
    """Эмулятор робота: датчик -> фильтр -> TOF-кадры; SPIKE-кадры -> избегание."""

    def __init__(self, transport: Transport, sensor: RangeSensor, filter_cfg: FilterConfig = FilterConfig(),
                 period_ms: float = 20.0, body: Optional[RobotBody] = None, silence_ms: float = 500.0,
                 dt: float = 1.0, run_log: Optional[RunLog] = None):
        self.transport = transport
        self.sensor = sensor
        self.filter = MeasurementFilter(filter_cfg)
        self.period_ms = period_ms
        self.body = body
        self.avoidance = AvoidanceController(silence_ms)
        self.run_log = run_log or RunLog(enabled=False)
        self.counters: Counter = Counter()
        self.spike_log: List[SpikeEvent] = []
        self._next_sample = 0.0
        self._last_now = -dt

    def sense(self, now: float):
        """Таймаут избегания, движение, опрос датчика и отправка достоверного ToF."""
        mode_before = self.avoidance.mode
        if self.avoidance.update(now) != mode_before:
            self.run_log.add(now, ROBOT, 'mode', self.avoidance.mode)
        if self.body is not None:
            # тело движется на фактически прошедшее время, пропущенные тики не теряются
            elapsed = now - self._last_now
            if elapsed > 0:
                self.body.advance(self.avoidance.mode, elapsed)
        self._last_now = max(self._last_now, now)
        if now < self._next_sample:
            return
        self._next_sample += self.period_ms
        emitted = self.filter.push(self.sensor.read(now))
        if emitted is None:
            return
        try:
            self.transport.send(encode(Datagram.tof(emitted)), BRIDGE)
            self.counters['sent'] += 1
            self.run_log.add(now, ROBOT, 'tof_sent', int(emitted))
        except PeerUnreachable as e:
            # измерение теряется, следующее придёт через max_hits периодов
            self.counters['dropped'] += 1
            logger.warning(f"robot: {e}")

    def react(self, now: float):
        """Разбирает входящие SPIKE-кадры."""
        for frame in self.transport.receive():
            datagram = _decode_or_count(frame, self.counters, ROBOT, now, self.run_log)
            if datagram is None:
                continue
            if datagram.kind != SPIKE_EVENT:
                self.counters['unexpected'] += 1
                continue
            self.counters['received'] += 1
            self.spike_log.append(SpikeEvent(t=float(datagram.value), source=ROBOT))
            if self.avoidance.mode != TURNING:
                self.run_log.add(now, ROBOT, 'mode', TURNING)
            self.avoidance.on_spike(now)

    def step(self, now: float):
        self.react(now)
        self.sense(now)


class BridgeEndpoint:
    """Мост: ToF -> живой инжектор -> спайки движку; выходные спайки -> роботу."""

    def __init__(self, transport: Transport, injector: Optional[LiveInjector] = None,
                 buffer_size: int = 1024, run_log: Optional[RunLog] = None):
        if buffer_size < 1:
            raise ValueError(f"buffer_size должен быть >= 1, получено {buffer_size}")
        self.transport = transport
        self.injector = injector or LiveInjector()
        self.buffer: Deque[Tuple[bytes, str]] = deque()
        self.buffer_size = buffer_size
        self.run_log = run_log or RunLog(enabled=False)
        self.counters: Counter = Counter()
        self.injected: List[SpikeEvent] = []

    def _send(self, frame: bytes, peer: str, now: float):
        self._flush(now)
        if self.buffer:
            self._enqueue(frame, peer, now)
            return
        try:
            self.transport.send(frame, peer)
            self.counters['sent'] += 1
        except PeerUnreachable:
            self._enqueue(frame, peer, now)

    def _enqueue(self, frame: bytes, peer: str, now: float):
        if len(self.buffer) >= self.buffer_size:
            self.buffer.popleft()
            self.counters['dropped'] += 1
            if self.counters['dropped'] == 1 or self.counters['dropped'] % 100 == 0:
                logger.warning(f"bridge: буфер переполнен, отброшено событий: {self.counters['dropped']}")
            self.run_log.add(now, BRIDGE, 'dropped', self.counters['dropped'])
        self.buffer.append((frame, peer))

    def _flush(self, now: float):
        while self.buffer:
            frame, peer = self.buffer[0]
            try:
                self.transport.send(frame, peer)
            except PeerUnreachable:
                return
            self.buffer.popleft()
            self.counters['sent'] += 1

    def _poll(self, now: float):
        for frame in self.transport.receive():
            datagram = _decode_or_count(frame, self.counters, BRIDGE, now, self.run_log)
            if datagram is None:
                continue
            self.counters['received'] += 1
            if datagram.kind == TOF_MEASUREMENT:
                self.injector.update(TofMeasurement(tof_us=datagram.value, t_recv=now))
                self.run_log.add(now, BRIDGE, 'isi', f"{self.injector.isi_ms:.3f}")
            else:
                # выходной спайк движка пересылается с исходной меткой
                self._send(encode(datagram), ROBOT, now)
                self.run_log.add(now, BRIDGE, 'spike_forwarded', datagram.value)

    def inbound(self, now: float):
        """Приём ToF и тик инжектора."""
        self._poll(now)
        event = self.injector.tick(now)
        if event is not None:
            self.injected.append(event)
            self._send(encode(Datagram.spike(event.t)), ENGINE, now)

    def outbound(self, now: float):
        """Пересылка выходных спайков и досылка буфера."""
        self._poll(now)
        self._flush(now)

    def step(self, now: float):
        self.inbound(now)
        self.outbound(now)


class EngineEndpoint:
    """Спайковый движок: инжектор -> возбуждающий синапс -> выходной LIF-нейрон."""

    def __init__(self, transport: Transport, params: NeuronParams = NeuronParams(),
                 run_log: Optional[RunLog] = None):
        self.transport = transport
        self.neuron = LifNeuron(params)
        self.run_log = run_log or RunLog(enabled=False)
        self.counters: Counter = Counter()
        self.outputs: List[SpikeEvent] = []

    def step(self, now: float):
        """Принимает спайки и догоняет нейроном время now включительно."""
        for frame in self.transport.receive():
            datagram = _decode_or_count(frame, self.counters, ENGINE, now, self.run_log)
            if datagram is None:
                continue
            if datagram.kind != SPIKE_EVENT:
                self.counters['unexpected'] += 1
                continue
            self.counters['received'] += 1
            self.neuron.schedule(datagram.value)
        while self.neuron.now <= now:
            t = self.neuron.now
            if self.neuron.advance():
                self.outputs.append(SpikeEvent(t=t, source='output'))
                self.run_log.add(t, ENGINE, 'output_spike', t)
                try:
                    self.transport.send(encode(Datagram.spike(t)), BRIDGE)
                    self.counters['sent'] += 1
                except PeerUnreachable as e:
                    self.counters['dropped'] += 1
                    logger.warning(f"engine: {e}")
