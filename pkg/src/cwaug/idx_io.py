"""Reader/writer for the MNIST IDX image and label containers.

Layout (all integers 32-bit big-endian):

  images: magic 0x00000803, count, rows, cols, then count*rows*cols
          unsigned bytes, one image after another in row-major order
  labels: magic 0x00000801, count, then count unsigned bytes

Reading accepts raw or gzip-compressed input (auto-detected by the
0x1F 0x8B prefix); writing always emits the raw layout. Trailing bytes
after the declared payload are tolerated with a warning, never an error.
"""

import gzip
import struct
import warnings
from pathlib import Path

import numpy as np

from . import imgcore

__all__ = [
    "IdxFormatError",
    "BadMagic",
    "Truncated",
    "InvalidHeader",
    "LabelOutOfRange",
    "read_images",
    "write_images",
    "read_labels",
    "write_labels",
]

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class IdxFormatError(Exception):
    """Base class for malformed IDX input."""


class BadMagic(IdxFormatError):
    pass


class Truncated(IdxFormatError):
    pass


class InvalidHeader(IdxFormatError):
    pass


class LabelOutOfRange(IdxFormatError):
    pass


def _read_source(source):
    """Pull all bytes from a path, byte string, or binary file object."""
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    else:
        data = source.read()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return data


def _warn_trailing(data, expected, what):
    extra = len(data) - expected
    if extra > 0:
        warnings.warn(f"{extra} trailing byte(s) after {what} payload ignored", stacklevel=3)


def read_images(source):
    """Read an IDX image file into a float array of shape (count, rows, cols).

    Pixels are mapped to [0, 1] via ``imgcore.from_bytes``. Raises BadMagic,
    InvalidHeader (zero rows/cols), or Truncated on malformed input.
    """
    data = _read_source(source)
    if len(data) < 16:
        raise Truncated(f"image header needs 16 bytes, got {len(data)}")
    magic, count, rows, cols = struct.unpack(">IIII", data[:16])
    if magic != IMAGE_MAGIC:
        raise BadMagic(f"expected image magic 0x{IMAGE_MAGIC:08x}, got 0x{magic:08x}")
    if count > 0 and (rows == 0 or cols == 0):
        raise InvalidHeader(f"image dimensions must be positive, got {rows}x{cols}")
    need = count * rows * cols
    if len(data) - 16 < need:
        raise Truncated(f"header promises {need} payload bytes, got {len(data) - 16}")
    _warn_trailing(data, 16 + need, "image")
    raw = np.frombuffer(data, dtype=np.uint8, count=need, offset=16)
    return imgcore.from_bytes(raw.reshape(count, rows, cols))


def write_images(images, target=None):
    """Serialize a (count, rows, cols) float image stack to IDX bytes.

    Writes to `target` (path or binary file object) when given; always
    returns the serialized bytes.
    """
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 3:
        raise ValueError(f"expected (count, rows, cols) image stack, got shape {images.shape}")
    count, rows, cols = images.shape
    payload = imgcore.to_bytes(images).tobytes()
    blob = struct.pack(">IIII", IMAGE_MAGIC, count, rows, cols) + payload
    _write_target(blob, target)
    return blob


def read_labels(source, max_label=9):
    """Read an IDX label file into a uint8 array.

    `max_label` bounds the permitted class ids (9 for MNIST); pass None to
    accept any byte value.
    """
    data = _read_source(source)
    if len(data) < 8:
        raise Truncated(f"label header needs 8 bytes, got {len(data)}")
    magic, count = struct.unpack(">II", data[:8])
    if magic != LABEL_MAGIC:
        raise BadMagic(f"expected label magic 0x{LABEL_MAGIC:08x}, got 0x{magic:08x}")
    if len(data) - 8 < count:
        raise Truncated(f"header promises {count} labels, got {len(data) - 8}")
    _warn_trailing(data, 8 + count, "label")
    labels = np.frombuffer(data, dtype=np.uint8, count=count, offset=8).copy()
    if max_label is not None and count and labels.max() > max_label:
        bad = int(labels[labels > max_label][0])
        raise LabelOutOfRange(f"label {bad} exceeds maximum {max_label}")
    return labels


def write_labels(labels, target=None):
    """Serialize a label vector to IDX bytes; mirrors :func:`write_images`."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError(f"expected a 1-D label vector, got shape {labels.shape}")
    blob = struct.pack(">II", LABEL_MAGIC, len(labels)) + labels.astype(np.uint8).tobytes()
    _write_target(blob, target)
    return blob


def _write_target(blob, target):
    if target is None:
        return
    if isinstance(target, (str, Path)):
        Path(target).write_bytes(blob)
    else:
        target.write(blob)
