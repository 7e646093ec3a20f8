"""Runtime configuration: defaults, worker count and logging setup."""

import logging
import os

from rich.console import Console
from rich.logging import RichHandler

DEFAULT_SEED = 20240917
THREADS_ENV = "EVM_THREADS"

console = Console()
err_console = Console(stderr=True)

logger = logging.getLogger(__name__)


def worker_count() -> int:
    """Number of worker threads for replica batches, capped by ``EVM_THREADS``."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        logger.warning("ignoring non-integer %s=%r, using 1 worker", THREADS_ENV, raw)
        return 1
    if value < 1:
        logger.warning("ignoring %s=%d, using 1 worker", THREADS_ENV, value)
        return 1
    return value


def configure_logging(verbose: bool = False) -> None:
    """Route library logging to standard error through rich."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )
