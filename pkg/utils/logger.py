import logging
from logging.handlers import RotatingFileHandler
import os
import sys

from config import LOG_DIR, LOG_FILE, LOG_LEVEL

FORMAT = "[%(asctime)s] [%(levelname)s] %(name)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

os.makedirs(LOG_DIR, exist_ok=True)

logger = logging.getLogger("booleanizer")
logger.setLevel(LOG_LEVEL.upper())
logger.propagate = False

# Повторный импорт (pytest, воркеры бенчмарка) не должен дублировать обработчики
if not logger.handlers:
    handler = RotatingFileHandler(
        os.path.join(LOG_DIR, LOG_FILE), maxBytes=5_000_000, backupCount=5, encoding="utf-8"
    )
    handler.setFormatter(logging.Formatter(FORMAT, DATE_FORMAT))
    logger.addHandler(handler)


def enable_console(level: str = "DEBUG") -> None:
    # Дублирует лог в stderr (флаг --verbose); stdout остаётся под результат команды
    if any(getattr(h, "console", False) for h in logger.handlers):
        return
    console = logging.StreamHandler(sys.stderr)
    console.console = True
    console.setLevel(level.upper())
    console.setFormatter(logging.Formatter("[%(levelname)s] %(message)s"))
    logger.addHandler(console)
    logger.setLevel(min(logger.level, console.level))
