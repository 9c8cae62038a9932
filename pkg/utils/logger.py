import logging

LOG_FILE = 'detector.log'


def setup_logger(name: str, log_file: str = LOG_FILE, level: int = logging.INFO) -> logging.Logger:
    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Форматтер
    formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    # Файловый хендлер
    file_handler = logging.FileHandler(log_file, encoding='utf-8')
    file_handler.setLevel(level)
    file_handler.setFormatter(formatter)

    # Очищаем существующие хендлеры и добавляем только файловый
    for handler in logger.handlers:
        handler.close()
    logger.handlers = []
    logger.addHandler(file_handler)
    logger.propagate = False

    return logger
