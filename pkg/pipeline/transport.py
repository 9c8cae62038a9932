"""Транспорт кадров между конечными точками: в памяти или через UDP-сокеты.

Оба варианта реализуют один интерфейс: send(frame, peer) и receive().
"""
import queue
import socket
from typing import Dict, List, Optional

import numpy as np

from utils.logger import setup_logger

logger = setup_logger('transport')

ROBOT = 'robot'
BRIDGE = 'bridge'
ENGINE = 'engine'
ENDPOINTS = (ROBOT, BRIDGE, ENGINE)


class PeerUnreachable(OSError):
    """Получатель не зарегистрирован или сокет отказал в отправке."""


class Transport:
    name: str

    def send(self, frame: bytes, peer: str) -> None:
        raise NotImplementedError

    def receive(self) -> List[bytes]:
        raise NotImplementedError

    def close(self) -> None:
        pass


class InMemoryHub:
    """Набор очередей по именам конечных точек; опционально теряет кадры."""

    def __init__(self, loss_rate: float = 0.0, seed: int = 0):
        if not 0.0 <= loss_rate < 1.0:
            raise ValueError(f"loss_rate должен быть в [0, 1), получено {loss_rate}")
        self.loss_rate = loss_rate
        self.lost = 0
        self._rng = np.random.default_rng(seed)
        self._queues: Dict[str, queue.Queue] = {}

    def attach(self, name: str) -> 'InMemoryTransport':
        self._queues.setdefault(name, queue.Queue())
        return InMemoryTransport(self, name)

    def deliver(self, frame: bytes, peer: str):
        target = self._queues.get(peer)
        if target is None:
            raise PeerUnreachable(f"Получатель {peer} недоступен")
        if self.loss_rate and self._rng.random() < self.loss_rate:
            self.lost += 1
            return
        target.put(frame)

    def drain(self, name: str) -> List[bytes]:
        frames = []
        inbox = self._queues.get(name)
        if inbox is None:
            return frames
        while True:
            try:
                frames.append(inbox.get_nowait())
            except queue.Empty:
                return frames


class InMemoryTransport(Transport):
    def __init__(self, hub: InMemoryHub, name: str):
        self.hub = hub
        self.name = name

    def send(self, frame: bytes, peer: str) -> None:
        self.hub.deliver(frame, peer)

    def receive(self) -> List[bytes]:
        return self.hub.drain(self.name)


class UdpTransport(Transport):
    """Неблокирующий UDP-сокет на host:ports[name]."""

    def __init__(self, name: str, ports: Dict[str, int], host: str = '127.0.0.1', bufsize: int = 64):
        self.name = name
        self.host = host
        self.ports = dict(ports)
        self.bufsize = bufsize
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self.sock.bind((host, self.ports[name]))
        # порт 0: система выбирает свободный
        self.ports[name] = self.sock.getsockname()[1]
        self.sock.setblocking(False)
        logger.info(f"UDP {name} слушает {host}:{self.ports[name]}")

    def send(self, frame: bytes, peer: str) -> None:
        port: Optional[int] = self.ports.get(peer)
        if port is None:
            raise PeerUnreachable(f"Порт для {peer} не задан")
        try:
            self.sock.sendto(frame, (self.host, port))
        except OSError as e:
            raise PeerUnreachable(f"Отправка {peer} ({self.host}:{port}) не удалась: {e}") from e

    def receive(self) -> List[bytes]:
        frames = []
        while True:
            try:
                frame, _ = self.sock.recvfrom(self.bufsize)
            except (BlockingIOError, InterruptedError):
                return frames
            except ConnectionRefusedError:
                # ICMP от закрытого порта получателя, кадр уже потерян
                continue
            frames.append(frame)

    def close(self) -> None:
        self.sock.close()


def parse_ports(text: str) -> Dict[str, int]:
    """'a,b,c' -> {'robot': a, 'bridge': b, 'engine': c}."""
    parts = [p.strip() for p in text.split(',') if p.strip()]
    if len(parts) != len(ENDPOINTS):
        raise ValueError(f"Ожидается три порта robot,bridge,engine, получено: {text!r}")
    return {name: int(port) for name, port in zip(ENDPOINTS, parts)}
