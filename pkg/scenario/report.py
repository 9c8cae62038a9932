"""Отчёт прогона: колонки, выровненные по тикам, и запись их в CSV."""
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime
from typing import Dict, List, Optional

import numpy as np

from neuro.lif import LifTrace, SpikeEvent
from utils.csv_writer import read_csv, save_to_csv
from utils.logger import setup_logger

logger = setup_logger('report')

RUN_FIELDS = ['t_ms', 'dist_cm', 'tof_us', 'isi_ms', 'in_spike', 'out_spike', 'mode']
SPIKE_FIELDS = ['t_ms', 'kind']
TRAJECTORY_FIELDS = ['t_ms', 'x_cm', 'y_cm', 'heading_deg']

RUN_FILE = 'run.csv'
SPIKES_FILE = 'spikes.csv'
TRACE_FILE = 'trace.csv'
TRAJECTORY_FILE = 'trajectory.csv'


@dataclass
class RunReport:
    t_ms: np.ndarray
    dist_cm: np.ndarray
    tof_us: np.ndarray
    isi_ms: np.ndarray
    in_spike: np.ndarray
    out_spike: np.ndarray
    mode: np.ndarray
    trace: Optional[LifTrace] = None
    trajectory: Optional[np.ndarray] = None  # (n, 3): x_cm, y_cm, heading_deg
    metadata: Dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.t_ms)
        columns = {'dist_cm': self.dist_cm, 'tof_us': self.tof_us, 'isi_ms': self.isi_ms,
                   'in_spike': self.in_spike, 'out_spike': self.out_spike, 'mode': self.mode}
        for name, column in columns.items():
            if len(column) != n:
                raise ValueError(f"Колонка {name} длиной {len(column)} не выровнена с t_ms ({n})")
        if self.trajectory is not None and len(self.trajectory) != n:
            raise ValueError(f"Траектория длиной {len(self.trajectory)} не выровнена с t_ms ({n})")

    def __len__(self) -> int:
        return len(self.t_ms)

    @property
    def horizon_ms(self) -> float:
        if len(self.t_ms) == 0:
            return 0.0
        dt = self.t_ms[1] - self.t_ms[0] if len(self.t_ms) > 1 else 1.0
        return float(self.t_ms[-1] + dt)

    def input_train(self) -> List[SpikeEvent]:
        return [SpikeEvent(t=float(t), source='input') for t in self.t_ms[self.in_spike]]

    def output_train(self) -> List[SpikeEvent]:
        return [SpikeEvent(t=float(t), source='output') for t in self.t_ms[self.out_spike]]

    def rows(self):
        for k in range(len(self.t_ms)):
            dist = float(self.dist_cm[k])
            yield {
                't_ms': _fmt(self.t_ms[k]),
                'dist_cm': 'inf' if math.isinf(dist) else round(dist, 4),
                'tof_us': _fmt(self.tof_us[k]),
                'isi_ms': round(float(self.isi_ms[k]), 4),
                'in_spike': int(self.in_spike[k]),
                'out_spike': int(self.out_spike[k]),
                'mode': self.mode[k],
            }

    @classmethod
    def from_csv(cls, filename: str) -> 'RunReport':
        """Читает run.csv обратно (без трассы и траектории)."""
        metadata, rows = read_csv(filename)
        return cls(
            t_ms=np.array([float(r['t_ms']) for r in rows]),
            dist_cm=np.array([float(r['dist_cm']) for r in rows]),
            tof_us=np.array([float(r['tof_us']) for r in rows]),
            isi_ms=np.array([float(r['isi_ms']) for r in rows]),
            in_spike=np.array([r['in_spike'] == '1' for r in rows], dtype=bool),
            out_spike=np.array([r['out_spike'] == '1' for r in rows], dtype=bool),
            mode=np.array([r['mode'] for r in rows]),
            metadata=metadata,
        )


def _fmt(value) -> str:
    value = float(value)
    return str(int(value)) if value.is_integer() else repr(value)


def _metadata(report: RunReport) -> Dict:
    metadata = {'created': datetime.now().strftime('%Y-%m-%d %H:%M:%S'), 'horizon_ms': report.horizon_ms}
    for key, value in report.metadata.items():
        metadata[key] = json.dumps(value, ensure_ascii=False) if isinstance(value, (dict, list)) else value
    return metadata


def emit_report(report: RunReport, out_dir: str) -> List[str]:
    """Пишет run.csv и spikes.csv (плюс trace.csv и trajectory.csv, если есть)."""
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        logger.error(f"Не удалось создать каталог {out_dir}: {e}")
        raise
    metadata = _metadata(report)
    paths = []

    path = os.path.join(out_dir, RUN_FILE)
    save_to_csv(report.rows(), RUN_FIELDS, path, metadata)
    paths.append(path)

    spikes = sorted([(float(t), 'in') for t in report.t_ms[report.in_spike]]
                    + [(float(t), 'out') for t in report.t_ms[report.out_spike]])
    path = os.path.join(out_dir, SPIKES_FILE)
    save_to_csv(({'t_ms': _fmt(t), 'kind': kind} for t, kind in spikes), SPIKE_FIELDS, path, metadata)
    paths.append(path)

    if report.trace is not None:
        path = os.path.join(out_dir, TRACE_FILE)
        report.trace.to_csv(path, metadata)
        paths.append(path)

    if report.trajectory is not None:
        path = os.path.join(out_dir, TRAJECTORY_FILE)
        rows = ({'t_ms': _fmt(t), 'x_cm': round(float(x), 4), 'y_cm': round(float(y), 4),
                 'heading_deg': round(float(h), 4)}
                for t, (x, y, h) in zip(report.t_ms, report.trajectory))
        save_to_csv(rows, TRAJECTORY_FIELDS, path, metadata)
        paths.append(path)

    logger.info(f"Отчёт {report.metadata.get('name', '')} записан в {out_dir}: {len(paths)} файлов")
    return paths
