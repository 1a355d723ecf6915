import logging
from typing import Optional

from src.mvmatern.config import settings

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: Optional[str] = None) -> logging.Logger:
    """Attach one stream handler to the package logger (idempotent)."""
    root = logging.getLogger("src.mvmatern")
    root.setLevel((level or settings.LOG_LEVEL).upper())
    if not any(getattr(h, "_mvmatern", False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._mvmatern = True
        root.addHandler(handler)
    return root
