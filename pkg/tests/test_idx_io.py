import gzip
import io
import struct

import numpy as np
import pytest

from cwaug.idx_io import (
    BadMagic,
    InvalidHeader,
    LabelOutOfRange,
    Truncated,
    read_images,
    read_labels,
    write_images,
    write_labels,
)


def _image_blob(count, rows, cols, payload=None):
    if payload is None:
        payload = bytes(range(256)) * ((count * rows * cols) // 256 + 1)
        payload = payload[: count * rows * cols]
    return struct.pack(">IIII", 0x803, count, rows, cols) + payload


def test_read_single_28x28_image():
    blob = _image_blob(1, 28, 28)
    # the canonical header layout, byte for byte
    assert blob[:16] == bytes.fromhex("00000803" "00000001" "0000001c" "0000001c")
    images = read_images(blob)
    assert images.shape == (1, 28, 28)
    assert images[0, 0, 0] == 0.0
    assert images[0, 0, 255 % 28] == pytest.approx((255 % 28) / 255)


def test_wrong_magic_raises():
    blob = struct.pack(">IIII", 0x801, 1, 28, 28) + bytes(784)
    with pytest.raises(BadMagic):
        read_images(blob)
    with pytest.raises(BadMagic):
        read_labels(struct.pack(">II", 0x803, 0))


def test_truncated_payload_raises():
    blob = _image_blob(2, 28, 28)[: 16 + 784]
    with pytest.raises(Truncated):
        read_images(blob)
    with pytest.raises(Truncated):
        read_images(b"\x00\x00\x08\x03")
    with pytest.raises(Truncated):
        read_labels(struct.pack(">II", 0x801, 3) + b"\x05")


def test_zero_dims_raise_invalid_header():
    with pytest.raises(InvalidHeader):
        read_images(struct.pack(">IIII", 0x803, 1, 0, 28))
    with pytest.raises(InvalidHeader):
        read_images(struct.pack(">IIII", 0x803, 1, 28, 0))


def test_empty_set_round_trip():
    blob = write_images(np.zeros((0, 28, 28)))
    assert len(blob) == 16
    assert read_images(blob).shape == (0, 28, 28)


def test_single_image_size():
    blob = write_images(np.zeros((1, 28, 28)))
    assert len(blob) == 16 + 784


def test_image_round_trip_100_random():
    rng = np.random.default_rng(11)
    images = rng.integers(0, 256, (100, 28, 28)).astype(np.uint8) / 255.0
    blob = write_images(images)
    again = read_images(blob)
    assert np.array_equal(again, images)
    assert write_images(again) == blob


def test_label_example_and_round_trip():
    blob = struct.pack(">II", 0x801, 3) + bytes([5, 0, 9])
    labels = read_labels(blob)
    assert labels.tolist() == [5, 0, 9]
    assert write_labels(labels) == blob


def test_label_out_of_range_in_mnist_mode():
    blob = struct.pack(">II", 0x801, 2) + bytes([3, 0x0A])
    with pytest.raises(LabelOutOfRange):
        read_labels(blob)
    assert read_labels(blob, max_label=None).tolist() == [3, 10]


def test_trailing_bytes_warn_not_fail():
    blob = _image_blob(1, 4, 4) + b"junk"
    with pytest.warns(UserWarning, match="4 trailing"):
        images = read_images(blob)
    assert images.shape == (1, 4, 4)


def test_gzip_autodetect():
    rng = np.random.default_rng(12)
    images = rng.integers(0, 256, (5, 28, 28)).astype(np.uint8) / 255.0
    blob = write_images(images)
    assert np.array_equal(read_images(gzip.compress(blob)), images)


def test_reads_from_path_and_file_object(tmp_path):
    images = np.zeros((2, 3, 3))
    path = tmp_path / "imgs.idx"
    write_images(images, path)
    assert read_images(path).shape == (2, 3, 3)
    with open(path, "rb") as fh:
        assert read_images(fh).shape == (2, 3, 3)
    buf = io.BytesIO()
    write_images(images, buf)
    assert buf.getvalue() == write_images(images)
