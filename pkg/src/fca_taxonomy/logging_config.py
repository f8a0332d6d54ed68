from __future__ import annotations

import json
import logging
from datetime import UTC, datetime
from typing import Any

from fca_taxonomy.settings import Settings


APP_LOGGER_NAME = "fca_taxonomy"
TEXT_FORMAT = "%(asctime)s %(levelname)s [%(name)s] %(message)s"

# attributes passed through ``extra=`` that the JSON formatter lifts into the payload
RUN_FIELDS = ("command", "stage", "seconds", "concepts", "edges", "exit_code")


class JsonLogFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        payload: dict[str, Any] = {
            "timestamp": datetime.fromtimestamp(record.created, UTC).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        for field in RUN_FIELDS:
            value = getattr(record, field, None)
            if value is not None:
                payload[field] = value
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        return json.dumps(payload, ensure_ascii=False)


def get_app_logger() -> logging.Logger:
    return logging.getLogger(APP_LOGGER_NAME)


def configure_logging(settings: Settings) -> None:
    """Route every record through a single stderr handler, text or JSON per settings."""
    level = getattr(logging, settings.resolved_log_level, logging.INFO)

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)

    stream_handler = logging.StreamHandler()
    if settings.resolved_log_json:
        stream_handler.setFormatter(JsonLogFormatter())
    else:
        stream_handler.setFormatter(logging.Formatter(TEXT_FORMAT))
    root_logger.addHandler(stream_handler)
    get_app_logger().setLevel(level)
