import logging
import sys

FULL_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
MINIMAL_FORMAT = "%(message)s"


def _formatter(minimal: bool) -> logging.Formatter:
    if minimal:
        return logging.Formatter(MINIMAL_FORMAT)
    return logging.Formatter(FULL_FORMAT, datefmt=DATE_FORMAT)


def setup_logger(log_level=logging.INFO, name="maxdropout_lab"):
    """Configure the package logger with a single stdout handler.

    Args:
        log_level: Logging level for the logger and its handler
        name: Logger name; submodules log through the shared instance below

    Returns:
        logging.Logger
    """
    base = logging.getLogger(name)
    base.setLevel(log_level)
    base.handlers.clear()

    handler = logging.StreamHandler(sys.stdout)
    handler.setLevel(log_level)
    handler.setFormatter(_formatter(False))
    base.addHandler(handler)
    return base


class MinimalLogger:
    """Package logger whose format can drop timestamps (`--minimal-logger`).

    Level changes also apply to the handlers, so `--log-level DEBUG` shows kernel and loader detail.
    Logging calls (`debug`, `info`, ...) go straight to the wrapped logger.
    """

    def __init__(self, base_logger: logging.Logger):
        self._logger = base_logger
        self._minimal = False

    @property
    def minimal(self) -> bool:
        return self._minimal

    def setLevel(self, level):
        self._logger.setLevel(level)
        for handler in self._logger.handlers:
            handler.setLevel(level)

    def set_minimal(self, minimal: bool):
        self._minimal = minimal
        for handler in self._logger.handlers:
            handler.setFormatter(_formatter(minimal))

    def __getattr__(self, name):
        return getattr(self._logger, name)


logger = MinimalLogger(setup_logger())
