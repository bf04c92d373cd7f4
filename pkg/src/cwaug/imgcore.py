"""Grayscale image value model: quantization and bilinear sampling.

Images are 2-D float64 arrays of shape (height, width), row-major, with
values in [0, 1]. Coordinates follow the raster convention: x indexes
columns, y indexes rows, the origin is the top-left pixel and pixel
centers sit at integer coordinates.
"""

import numpy as np

__all__ = [
    "from_bytes",
    "to_bytes",
    "to_grayscale",
    "bilinear_sample",
    "validate_image",
]


def from_bytes(raw):
    """Convert a uint8 raster to a float image, mapping 0..255 onto [0, 1]."""
    return np.asarray(raw, dtype=np.float64) / 255.0


def to_bytes(img):
    """Quantize a float image in [0, 1] to uint8, rounding half up.

    Inverse of :func:`from_bytes` on all 256 byte values.
    """
    img = np.asarray(img, dtype=np.float64)
    return np.floor(img * 255.0 + 0.5).astype(np.uint8)


def to_grayscale(img):
    """Reduce an image to a single channel.

    2-D input passes through unchanged. 3-channel input (H, W, 3) is
    collapsed with the Rec. 601 luminance weights 0.299/0.587/0.114.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    if img.ndim == 3 and img.shape[2] == 3:
        return img @ np.array([0.299, 0.587, 0.114])
    raise ValueError(f"expected (H, W) or (H, W, 3) image, got shape {img.shape}")


def validate_image(img):
    """Check 2-D shape and [0, 1] value range; returns the array unchanged."""
    img = np.asarray(img)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D image, got shape {img.shape}")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("image values must lie in [0, 1]")
    return img


def bilinear_sample(img, x, y):
    """Sample an image at real-valued coordinates with bilinear interpolation.

    Parameters
    ----------
    img : ndarray (H, W)
        Source image.
    x, y : scalar or ndarray
        Sample coordinates (x = column, y = row). Any coordinates are
        accepted; a neighbor outside [0, W-1] x [0, H-1] contributes 0.0
        (black background), so samples fade to black past the border.

    Returns
    -------
    Interpolated value(s), same shape as the coordinate input.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)

    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = x - x0
    fy = y - y0

    out = np.zeros(np.broadcast(x, y).shape, dtype=np.float64)
    corners = (
        (x0, y0, (1.0 - fx) * (1.0 - fy)),
        (x0 + 1.0, y0, fx * (1.0 - fy)),
        (x0, y0 + 1.0, (1.0 - fx) * fy),
        (x0 + 1.0, y0 + 1.0, fx * fy),
    )
    for cx, cy, weight in corners:
        inside = (cx >= 0) & (cx <= w - 1) & (cy >= 0) & (cy <= h - 1)
        ix = np.clip(cx, 0, w - 1).astype(np.intp)
        iy = np.clip(cy, 0, h - 1).astype(np.intp)
        out = out + weight * np.where(inside, img[iy, ix], 0.0)

    return float(out) if scalar else out
