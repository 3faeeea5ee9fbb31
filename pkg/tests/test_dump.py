import logging

from maxdropout_lab.dump import cvt, dump
from maxdropout_lab.regularizers import DropConfig
from maxdropout_lab.tensor import Tensor


def test_tensor_is_summarized():
    t = Tensor.from_values((1, 1, 1, 2), [1.0, 3.0])
    assert cvt(t) == "array(shape=(1, 1, 1, 2), dtype=float32, min=1, max=3, mean=2)"


def test_dataclass_is_json():
    text = cvt(DropConfig("v2", rate=0.25))
    assert '"variant": "max_dropout_v2"' in text
    assert '"rate": 0.25' in text


def test_dump_logs_the_expression(caplog):
    caplog.set_level(logging.INFO, logger="maxdropout_lab")
    rate = 0.5
    dump(rate)
    assert "rate: 0.5" in caplog.text
