import dataclasses
import enum
import json
import traceback

import numpy as np

from .logger import logger


def _summarize_array(arr):
    arr = np.asarray(arr)
    if arr.size == 0:
        return f"array(shape={arr.shape}, empty)"
    return (
        f"array(shape={arr.shape}, dtype={arr.dtype}, min={arr.min():.6g}, "
        f"max={arr.max():.6g}, mean={arr.mean():.6g})"
    )


def _default(obj):
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _summarize_array(obj)
    if hasattr(obj, "data") and isinstance(getattr(obj, "data"), np.ndarray):
        return _summarize_array(obj.data)
    return str(obj)


def cvt(s):
    if isinstance(s, str):
        return s
    if isinstance(s, np.ndarray):
        return _summarize_array(s)
    if hasattr(s, "data") and isinstance(getattr(s, "data"), np.ndarray):
        return _summarize_array(s.data)
    if dataclasses.is_dataclass(s) and not isinstance(s, type):
        s = dataclasses.asdict(s)
    try:
        return json.dumps(s, indent=4, default=_default)
    except TypeError:
        return str(s)


def dump(*vals):
    # http://docs.python.org/library/traceback.html
    stack = traceback.extract_stack()
    vars = stack[-2][3]

    # strip away the call to dump()
    vars = "(".join(vars.split("(")[1:])
    vars = ")".join(vars.split(")")[:-1])

    vals = [cvt(v) for v in vals]
    has_newline = sum(1 for v in vals if "\n" in v)
    if has_newline:
        logger.info("%s:" % vars)
        logger.info(", ".join(vals))
    else:
        logger.info("%s: %s" % (vars, ", ".join(vals)))
