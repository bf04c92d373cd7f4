"""Elastic deformation driven by a normalized random displacement field.

A raw field of i.i.d. uniform [-1, 1] per-pixel displacements is smoothed
with a Gaussian of standard deviation `sigma`, normalized, scaled by the
intensity `alpha` (in pixels), and used to backward-warp the image: each
output pixel samples the source at its own displaced location, so warps
never leave holes.

Normalization modes:

  "perpixel" (default)  every pixel's (dx, dy) is rescaled to a unit
                        vector, so the displacement magnitude is exactly
                        `alpha` at every non-degenerate pixel
  "global"              both components are divided by the field's RMS
                        magnitude, so `alpha` is the RMS displacement

All randomness comes from the Philox counter-based generator keyed by an
explicit 64-bit seed: identical (image, parameters, seed) always produce
the identical output array.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.ndimage import convolve1d

from .imgcore import bilinear_sample

__all__ = [
    "ElasticParams",
    "DisplacementField",
    "gen_raw_field",
    "gaussian_smooth",
    "normalize_field",
    "normalize_field_global",
    "displacement_field",
    "elastic_deform",
]

NORM_MODES = ("perpixel", "global")

# pixels with smoothed magnitude below this stay at zero displacement
DEGENERATE_EPS = 1e-12


class DisplacementField(NamedTuple):
    """Per-pixel displacement components, each of shape (height, width)."""

    dx: np.ndarray
    dy: np.ndarray


@dataclass(frozen=True)
class ElasticParams:
    """Deformation knobs. Seeds are passed separately so that callers that
    derive one seed per candidate can share a single params object."""

    alpha: float
    sigma: float
    norm: str = "perpixel"

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.norm not in NORM_MODES:
            raise ValueError(f"norm must be one of {NORM_MODES}, got {self.norm!r}")


def gen_raw_field(height, width, seed):
    """Draw a raw displacement field, i.i.d. uniform on [-1, 1].

    The stream is keyed by `seed` through a counter-based Philox generator;
    dx is drawn before dy.
    """
    if height < 1 or width < 1:
        raise ValueError("field dimensions must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=seed & 0xFFFFFFFFFFFFFFFF))
    dx = rng.uniform(-1.0, 1.0, size=(height, width))
    dy = rng.uniform(-1.0, 1.0, size=(height, width))
    return DisplacementField(dx, dy)


def _gaussian_kernel(sigma):
    # truncated at radius ceil(3*sigma), renormalized to sum 1
    radius = int(np.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    return kernel / kernel.sum()


def gaussian_smooth(field, sigma):
    """Smooth both field components with a separable Gaussian.

    Boundaries are zero-padded, so field magnitudes shrink near the
    borders (and everywhere once the kernel outgrows the field).
    """
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    kernel = _gaussian_kernel(sigma)

    def smooth(component):
        out = convolve1d(component, kernel, axis=0, mode="constant", cval=0.0)
        return convolve1d(out, kernel, axis=1, mode="constant", cval=0.0)

    return DisplacementField(smooth(field.dx), smooth(field.dy))


def normalize_field(field):
    """Rescale every pixel's displacement to a unit vector.

    Pixels with magnitude below ``DEGENERATE_EPS`` are left at exactly
    (0, 0) rather than amplifying noise.
    """
    magnitude = np.hypot(field.dx, field.dy)
    degenerate = magnitude < DEGENERATE_EPS
    scale = np.where(degenerate, 0.0, 1.0 / np.where(degenerate, 1.0, magnitude))
    return DisplacementField(field.dx * scale, field.dy * scale)


def normalize_field_global(field):
    """Divide both components by the field's RMS magnitude.

    Degenerate all-zero fields stay zero.
    """
    rms = np.sqrt(np.mean(field.dx**2 + field.dy**2))
    if rms < DEGENERATE_EPS:
        return DisplacementField(np.zeros_like(field.dx), np.zeros_like(field.dy))
    return DisplacementField(field.dx / rms, field.dy / rms)


def displacement_field(height, width, sigma, seed, norm="perpixel"):
    """Generate the normalized displacement field used by :func:`elastic_deform`."""
    field = gaussian_smooth(gen_raw_field(height, width, seed), sigma)
    if norm == "perpixel":
        return normalize_field(field)
    if norm == "global":
        return normalize_field_global(field)
    raise ValueError(f"norm must be one of {NORM_MODES}, got {norm!r}")


def elastic_deform(img, params, seed):
    """Elastically deform an image.

    Output pixel (x, y) takes the bilinear sample of the input at
    (x + alpha*dx, y + alpha*dy). Output dimensions equal input
    dimensions; alpha = 0 reproduces the input bit-exactly.
    """
    img = np.asarray(img, dtype=np.float64)
    height, width = img.shape
    u = displacement_field(height, width, params.sigma, seed, params.norm)
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    return bilinear_sample(img, xs + params.alpha * u.dx, ys + params.alpha * u.dy)
