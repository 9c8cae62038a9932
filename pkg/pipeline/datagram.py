"""Бинарные кадры UDP: версия (1 байт), тип (1 байт), полезная нагрузка.

TOF_MEASUREMENT: uint32 LE, мкс, всего 6 байт.
SPIKE_EVENT:     uint64 LE, мс,  всего 10 байт.
"""
import struct
from dataclasses import dataclass

VERSION = 0x01
TOF_MEASUREMENT = 0x01
SPIKE_EVENT = 0x02

_HEADER = struct.Struct('<BB')
_FORMATS = {
    TOF_MEASUREMENT: struct.Struct('<BBI'),
    SPIKE_EVENT: struct.Struct('<BBQ'),
}
_LIMITS = {TOF_MEASUREMENT: 2 ** 32 - 1, SPIKE_EVENT: 2 ** 64 - 1}


class DatagramError(ValueError):
    """Кадр повреждён или не поддерживается."""


@dataclass(frozen=True)
class Datagram:
    kind: int
    value: int
    version: int = VERSION

    @classmethod
    def tof(cls, tof_us: float) -> 'Datagram':
        return cls(kind=TOF_MEASUREMENT, value=int(round(tof_us)))

    @classmethod
    def spike(cls, t_ms: float) -> 'Datagram':
        return cls(kind=SPIKE_EVENT, value=int(round(t_ms)))


def encode(datagram: Datagram) -> bytes:
    fmt = _FORMATS.get(datagram.kind)
    if fmt is None:
        raise DatagramError(f"Неизвестный тип кадра: {datagram.kind:#x}")
    if not 0 <= datagram.value <= _LIMITS[datagram.kind]:
        raise DatagramError(f"Значение {datagram.value} не помещается в кадр типа {datagram.kind:#x}")
    return fmt.pack(datagram.version, datagram.kind, datagram.value)


def decode(frame: bytes) -> Datagram:
    if len(frame) < _HEADER.size:
        raise DatagramError(f"Слишком короткий кадр: {len(frame)} байт")
    version, kind = _HEADER.unpack_from(frame)
    if version != VERSION:
        raise DatagramError(f"Неподдерживаемая версия: {version:#x}")
    fmt = _FORMATS.get(kind)
    if fmt is None:
        raise DatagramError(f"Неизвестный тип кадра: {kind:#x}")
    if len(frame) != fmt.size:
        raise DatagramError(f"Кадр типа {kind:#x} должен занимать {fmt.size} байт, получено {len(frame)}")
    _, _, value = fmt.unpack(frame)
    return Datagram(kind=kind, value=value, version=version)
