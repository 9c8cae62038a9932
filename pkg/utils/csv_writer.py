import csv
import os
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from utils.logger import setup_logger

logger = setup_logger('csv_writer')


def save_to_csv(rows: Iterable[Dict], fieldnames: Sequence[str], filename: str, metadata: Optional[Dict] = None):
    """Сохраняет строки в CSV; метаданные пишутся комментариями над заголовком."""
    try:
        directory = os.path.dirname(filename)
        if directory:
            os.makedirs(directory, exist_ok=True)
        count = 0
        with open(filename, 'w', newline='', encoding='utf-8') as f:
            # Записываем метаданные как комментарии
            for key, value in (metadata or {}).items():
                f.write(f"# {key}: {value}\n")
            writer = csv.DictWriter(f, fieldnames=list(fieldnames), extrasaction='ignore')
            writer.writeheader()
            for row in rows:
                writer.writerow(row)
                count += 1
        if count == 0:
            logger.warning(f"{filename}: нет строк, записан только заголовок")
        logger.info(f"Сохранено в CSV: {filename}, {count} записей")
    except Exception as e:
        logger.error(f"Ошибка при сохранении в CSV {filename}: {e}")
        raise


def read_csv(filename: str) -> Tuple[Dict[str, str], List[Dict[str, str]]]:
    """Читает CSV, возвращает (метаданные из строк '#', строки таблицы)."""
    try:
        with open(filename, 'r', encoding='utf-8') as f:
            lines = f.readlines()
        metadata = {}
        for line in lines:
            if line.startswith('#') and ':' in line:
                key, value = line[1:].strip().split(':', 1)
                metadata[key.strip()] = value.strip()
        lines_for_table = [line for line in lines if not line.startswith('#') and line.strip()]
        reader = csv.DictReader(lines_for_table)
        return metadata, [row for row in reader if row]
    except Exception as e:
        logger.error(f"Ошибка чтения CSV {filename}: {e}")
        raise
