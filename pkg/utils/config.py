import copy
import json
import os
from typing import Any, Dict, Optional

import yaml

from utils.logger import setup_logger

logger = setup_logger('config')

DEFAULT_CONFIG: Dict[str, Any] = {
    'neuron': {
        'c_m': 1.0,
        'tau_m': 100.0,
        'tau_refrac': 0.0,
        'tau_syn_E': 5.0,
        'tau_syn_I': 5.0,
        'v_rest': -65.0,
        'v_reset': -65.0,
        'v_thresh': -59.5,
        'dt': 1.0,
        'w_in': 1.0,
        'syn_delay': 1,
    },
    'filter': {
        'max_hits': 4,
        'max_error': 120,
    },
    'sensor': {
        'period_ms': 20,
        'max_range_cm': 100.0,
        'noise_mm': 0.0,
        'seed': 0,
    },
    'pipeline': {
        'host': '127.0.0.1',
        'ports': {'robot': 9101, 'bridge': 9102, 'engine': 9103},
        'buffer_size': 1024,
        'silence_ms': 500,
    },
    'world': {
        'speed_cm_s': 10.0,
        'turn_rate_deg_s': 45.0,
    },
    'scenario': {
        'transient_ms': 2000,
        'threshold_horizon_ms': 10000,
        'cutoff_horizon_ms': 30000,
        'out_dir': 'runs',
    },
    'ui': {
        'port': 8062,
        'page_size': 25,
        'refresh_ms': 5000,
    },
}


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(path: str = 'config.yaml') -> Dict[str, Any]:
    """Загружает config.yaml поверх значений по умолчанию."""
    if not os.path.exists(path):
        logger.warning(f"Файл конфигурации {path} не найден, используются значения по умолчанию")
        return copy.deepcopy(DEFAULT_CONFIG)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return _deep_merge(DEFAULT_CONFIG, yaml.safe_load(f) or {})
    except Exception as e:
        logger.error(f"Ошибка чтения {path}: {e}")
        return copy.deepcopy(DEFAULT_CONFIG)


def load_params_file(path: Optional[str]) -> Dict[str, Any]:
    """Читает JSON (или YAML) с переопределениями параметров нейрона."""
    if not path:
        return {}
    try:
        with open(path, 'r', encoding='utf-8') as f:
            if path.endswith(('.yaml', '.yml')):
                return yaml.safe_load(f) or {}
            return json.load(f)
    except Exception as e:
        logger.error(f"Ошибка чтения файла параметров {path}: {e}")
        raise
