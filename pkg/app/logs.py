from __future__ import annotations

import logging
import os

from rich.console import Console
from rich.logging import RichHandler

LOG_LEVEL_ENV = "EIGENMOOD_LOG_LEVEL"


def setup_logging(level: str | None = None) -> None:
    """Route every toolkit logger to a RichHandler on stderr; safe to call twice."""
    name = (level or os.getenv(LOG_LEVEL_ENV) or "INFO").upper()
    root = logging.getLogger()
    for h in list(root.handlers):
        if isinstance(h, RichHandler):
            root.removeHandler(h)
    handler = RichHandler(
        console=Console(stderr=True),
        show_path=False,
        rich_tracebacks=True,
        markup=False,
    )
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s", datefmt="[%X]"))
    root.addHandler(handler)
    root.setLevel(getattr(logging, name, logging.INFO))
