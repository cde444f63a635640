"""
Logging for fairalloc using Logfire, with standard logging as fallback.

Both loggers accept structured keyword fields:

    logger.info("run finished", T=4096, alpha=0.5)
"""
import logging
import os
from typing import Any, Optional, Union

import logfire

from src.utils.logfire_config import configure_logfire, is_configured


def _render(message: str, args: tuple, fields: dict) -> str:
    if args:
        message = message % args
    if fields:
        message = message + " " + " ".join(f"{k}={v}" for k, v in fields.items())
    return message


class LogfireLogger:
    """Wrapper to make Logfire work like standard Python logging."""

    def __init__(self, name: str):
        self.name = name

    def _emit(self, method, message: str, args: tuple, fields: dict) -> None:
        fields.pop("exc_info", None)
        if args:
            message = message % args
        # Braces would be read as a logfire template
        message = message.replace("{", "{{").replace("}", "}}")
        method(f"[{self.name}] {message}", **fields)

    def debug(self, message: str, *args: Any, **fields: Any) -> None:
        self._emit(logfire.debug, message, args, fields)

    def info(self, message: str, *args: Any, **fields: Any) -> None:
        self._emit(logfire.info, message, args, fields)

    def warning(self, message: str, *args: Any, **fields: Any) -> None:
        self._emit(logfire.warn, message, args, fields)

    def error(self, message: str, *args: Any, **fields: Any) -> None:
        self._emit(logfire.error, message, args, fields)

    def exception(self, message: str, *args: Any, **fields: Any) -> None:
        self._emit(logfire.error, "EXCEPTION: " + message, args, fields)

    def setLevel(self, level: Union[int, str]) -> None:
        # Level filtering happens on the Logfire side
        pass


class StandardLogger:
    """Standard Python logger when Logfire is not configured."""

    def __init__(self, name: str, level: Optional[str] = None):
        self.logger = logging.getLogger(name)

        level_name = (level or os.getenv("LOG_LEVEL", "INFO")).upper()
        log_level = getattr(logging, level_name, logging.INFO)
        self.logger.setLevel(log_level)

        if not self.logger.handlers:
            handler = logging.StreamHandler()
            handler.setLevel(log_level)
            handler.setFormatter(logging.Formatter("[%(levelname)s %(name)s] %(message)s"))
            self.logger.addHandler(handler)

    def debug(self, message: str, *args: Any, **fields: Any) -> None:
        if self.logger.isEnabledFor(logging.DEBUG):
            self.logger.debug(_render(message, args, fields))

    def info(self, message: str, *args: Any, **fields: Any) -> None:
        self.logger.info(_render(message, args, fields))

    def warning(self, message: str, *args: Any, **fields: Any) -> None:
        self.logger.warning(_render(message, args, fields))

    def error(self, message: str, *args: Any, **fields: Any) -> None:
        exc_info = fields.pop("exc_info", False)
        self.logger.error(_render(message, args, fields), exc_info=exc_info)

    def exception(self, message: str, *args: Any, **fields: Any) -> None:
        self.logger.exception(_render(message, args, fields))

    def setLevel(self, level: Union[int, str]) -> None:
        self.logger.setLevel(level)


def setup_logger(name: str, level: Optional[str] = None):
    """
    Set up a logger using Logfire or standard Python logging if not configured.

    Args:
        name: Logger name (usually __name__)
        level: Logging level (used for standard logger)

    Returns:
        LogfireLogger or StandardLogger instance
    """
    if is_configured() or configure_logfire():
        return LogfireLogger(name)
    return StandardLogger(name, level)
