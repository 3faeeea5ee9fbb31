"""Exception hierarchy; each class carries the CLI exit code it maps to."""

from typing import Optional

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


class LabError(Exception):
    exit_code = EXIT_INTERNAL


class ConfigError(LabError, ValueError):
    """Invalid configuration, flag combination or config file."""

    exit_code = EXIT_USAGE


class DataError(LabError):
    exit_code = EXIT_DATA


class PpmParseError(DataError):
    def __init__(self, message: str, offset: int, path: Optional[str] = None):
        self.offset = offset
        self.path = path
        where = f"{path}: " if path else ""
        super().__init__(f"{where}{message} (at byte offset {offset})")


class TensorFormatError(DataError):
    pass


class InvariantError(LabError):
    exit_code = EXIT_INTERNAL


class ShapeError(InvariantError, ValueError):
    pass


class DivergenceError(InvariantError):
    def __init__(self, epoch: int, step: int, loss: float):
        self.epoch = epoch
        self.step = step
        self.loss = loss
        super().__init__(f"Loss became non-finite ({loss}) at epoch {epoch}, step {step}")


class BenchError(LabError):
    exit_code = EXIT_INTERNAL
