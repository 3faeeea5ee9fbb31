import numpy as np
import pytest

from maxdropout_lab.errors import PpmParseError, ShapeError, TensorFormatError
from maxdropout_lab.io_utils import (
    decode_ppm,
    dump_tensor,
    encode_ppm,
    load_tensor,
    read_csv,
    read_jsonl,
    read_ppm,
    write_csv,
    write_jsonl,
    write_ppm,
)
from maxdropout_lab.tensor import Tensor


def ppm(width, height, pixels, magic=b"P6", maxval=255, header_extra=b""):
    return magic + b"\n" + header_extra + f"{width} {height}\n{maxval}\n".encode() + bytes(pixels)


def test_decode_p6():
    img = decode_ppm(ppm(2, 1, [255, 0, 0, 0, 51, 255]))
    assert img.shape == (1, 3, 1, 2)
    np.testing.assert_allclose(img.data[0, :, 0, 0], [1, 0, 0])
    np.testing.assert_allclose(img.data[0, :, 0, 1], [0, 0.2, 1], rtol=1e-6)


def test_decode_p5_with_comment_and_small_maxval():
    img = decode_ppm(ppm(2, 2, [0, 5, 10, 15], magic=b"P5", maxval=15, header_extra=b"# a comment\n"))
    assert img.shape == (1, 1, 2, 2)
    np.testing.assert_allclose(img.data[0, 0], [[0, 1 / 3], [2 / 3, 1]], rtol=1e-6)


def test_encode_decode_preserves_bytes():
    buf = ppm(3, 2, list(range(0, 252, 14)))
    assert encode_ppm(decode_ppm(buf)) == buf


def test_bad_magic_offset():
    with pytest.raises(PpmParseError) as err:
        decode_ppm(b"P3\n1 1\n255\n000")
    assert err.value.offset == 0
    assert "byte offset 0" in str(err.value)


def test_bad_width_offset():
    with pytest.raises(PpmParseError) as err:
        decode_ppm(b"P6\nx 1\n255\n")
    assert err.value.offset == 3


def test_missing_separator_offset():
    with pytest.raises(PpmParseError) as err:
        decode_ppm(b"P61 1\n255\n\x00\x00\x00")
    assert err.value.offset == 2


def test_truncated_pixels_offset():
    buf = ppm(2, 2, [1, 2, 3])
    with pytest.raises(PpmParseError) as err:
        decode_ppm(buf)
    assert err.value.offset == len(b"P6\n2 2\n255\n")
    assert "truncated" in str(err.value)


def test_sample_above_maxval_offset():
    buf = ppm(1, 1, [1, 20, 3], maxval=15)
    with pytest.raises(PpmParseError) as err:
        decode_ppm(buf)
    assert err.value.offset == len(b"P6\n1 1\n15\n") + 1


def test_sixteen_bit_rejected():
    with pytest.raises(PpmParseError):
        decode_ppm(b"P6\n1 1\n65535\n" + b"\x00" * 6)


def test_encode_rejects_non_image():
    with pytest.raises(ShapeError):
        encode_ppm(Tensor.zeros((2, 3, 2, 2)))
    with pytest.raises(ShapeError):
        encode_ppm(Tensor.zeros((1, 2, 2, 2)))


def test_encode_clips_and_rounds():
    t = Tensor.from_values((1, 1, 1, 3), [-0.5, 0.5, 2.0])
    assert encode_ppm(t).endswith(bytes([0, 128, 255]))


def test_ppm_files(tmp_path):
    buf = ppm(2, 1, [10, 20, 30, 40, 50, 60])
    src = tmp_path / "in.ppm"
    src.write_bytes(buf)
    img = read_ppm(src)
    out = write_ppm(tmp_path / "nested" / "out.ppm", img)
    assert out.read_bytes() == buf


def test_read_ppm_error_names_the_file(tmp_path):
    src = tmp_path / "bad.ppm"
    src.write_bytes(b"JUNK")
    with pytest.raises(PpmParseError) as err:
        read_ppm(src)
    assert err.value.path == str(src)
    assert str(src) in str(err.value)


def test_tensor_dump_files(tmp_path):
    t = Tensor.from_values((1, 2, 2, 1), [0.25, -3, 7, 1e-3])
    path = dump_tensor(tmp_path / "t.bin", t)
    assert path.stat().st_size == 16 + 4 * 4
    assert load_tensor(path).identical(t)
    path.write_bytes(path.read_bytes()[:-1])
    with pytest.raises(TensorFormatError):
        load_tensor(path)


def test_csv_and_jsonl(tmp_path):
    csv_path = write_csv(tmp_path / "a" / "r.csv", ["x", "y"], [[1, "a"], [2, "b"]])
    assert read_csv(csv_path) == [{"x": "1", "y": "a"}, {"x": "2", "y": "b"}]

    jsonl = tmp_path / "r.jsonl"
    write_jsonl(jsonl, [{"k": 1}])
    write_jsonl(jsonl, [{"k": 2}], append=True)
    assert read_jsonl(jsonl) == [{"k": 1}, {"k": 2}]
