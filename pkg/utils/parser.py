import json
from typing import Dict, List, Tuple

from neuro.encoder import TofMeasurement
from neuro.lif import SpikeEvent
from utils.csv_writer import read_csv
from utils.logger import setup_logger

logger = setup_logger('parser')


class InputParser:
    @staticmethod
    def load_json(path: str) -> Dict:
        """Читает JSON-документ (сценарий, мир, параметры)."""
        try:
            with open(path, 'r', encoding='utf-8') as f:
                return json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"Ошибка чтения JSON {path}: {e}")
            raise

    @staticmethod
    def parse_tof_csv(path: str) -> List[TofMeasurement]:
        """CSV `t_ms,tof_us` -> измерения, отсортированные по времени."""
        _, rows = read_csv(path)
        try:
            measurements = [TofMeasurement(tof_us=float(r['tof_us']), t_recv=float(r['t_ms'])) for r in rows]
        except (KeyError, ValueError) as e:
            logger.error(f"Неверный формат {path}: {e}")
            raise ValueError(f"{path}: ожидаются колонки t_ms,tof_us ({e})")
        return sorted(measurements, key=lambda m: m.t_recv)

    @staticmethod
    def parse_raw_csv(path: str) -> List[Tuple[float, float]]:
        """CSV `t_ms,raw_us` (или `t_ms,tof_us`) -> пары (время, сырое значение)."""
        _, rows = read_csv(path)
        try:
            return [(float(r['t_ms']), float(r.get('raw_us') or r['tof_us'])) for r in rows]
        except (KeyError, ValueError) as e:
            logger.error(f"Неверный формат {path}: {e}")
            raise ValueError(f"{path}: ожидаются колонки t_ms,raw_us ({e})")

    @staticmethod
    def parse_spike_csv(path: str, source: str = 'input') -> List[SpikeEvent]:
        """CSV с колонкой `t_ms`; если есть колонка kind, берутся только строки kind=in."""
        _, rows = read_csv(path)
        try:
            return [SpikeEvent(t=float(r['t_ms']), source=source) for r in rows
                    if r.get('kind', 'in') in ('in', source)]
        except (KeyError, ValueError) as e:
            logger.error(f"Неверный формат {path}: {e}")
            raise ValueError(f"{path}: ожидается колонка t_ms ({e})")
