"""
Centralized Logfire configuration for fairalloc.
"""
import contextlib
import io
import os
import sys
from typing import Any, Iterator

import logfire

from config.settings import get_settings

_configured = False


def configure_logfire(force: bool = False) -> bool:
    """
    Configure Logfire when a token is available.

    Args:
        force: Force reconfiguration even if already configured

    Returns:
        bool: True if logs go through Logfire
    """
    global _configured

    if _configured and not force:
        return True

    settings = get_settings()
    if not settings.logfire_enabled:
        # Silently fall back to standard logging
        return False

    try:
        # Logfire prints its project URL on configure; keep CLI output clean
        os.environ["LOGFIRE_CONSOLE_NO_SHOW"] = "1"
        with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()):
            logfire.configure(
                token=settings.LOGFIRE_TOKEN,
                service_name="fairalloc",
                service_version=os.getenv("APP_VERSION", "dev"),
                environment=settings.APP_ENV,
                console=False,
            )
        _configured = True
    except Exception as e:
        print(f"ERROR: Logfire configuration failed: {e}", file=sys.stderr)
        _configured = False

    return _configured


def is_configured() -> bool:
    """Check if Logfire is configured."""
    return _configured


@contextlib.contextmanager
def span(name: str, **attributes: Any) -> Iterator[None]:
    """Open a Logfire span when configured, otherwise do nothing."""
    if not _configured:
        yield
        return
    with logfire.span(name, **attributes):
        yield
