"""Complex steerable decomposition of an image into oriented subbands.

The image is zero-padded (centered) to a square of side `pad_to`, taken
to the frequency domain, and multiplied by a bank of steerable filters:

  radial    raised-cosine octave bands in log2 frequency. With
            x = log2(rho / pi), the amplitude transitions are
            hi(x) = cos(pi/2 * clip(x, -1, 0)) and lo(x) = sqrt(1 - hi^2),
            which are power-complementary, so the squared radial
            responses of highpass + bands + lowpass tile the plane
            exactly. Band l (1-indexed) uses hi(x + l) * lo(x + l - 1)
            and peaks at rho = pi / 2**l.
  angular   proportional to cos(theta - theta_m) ** (M - 1) around
            orientation theta_m = pi * m / M (m = 0..M-1), restricted to
            the half-plane |theta - theta_m| < pi/2. The single-sided
            (analytic) support is what makes the coefficients complex,
            with local structure carried by their phase.

Each filtered spectrum is inverse-transformed and the level-l band is
decimated by 2**l (the lowpass residual by 2**levels); the highpass
residual stays at full resolution. The whole transform is linear in the
input and purely deterministic.

Filter banks are cached per (pad_to, levels, orientations) and are
read-only after construction, so concurrent decompositions are safe.
"""

import math
import threading
from dataclasses import dataclass, field

import numpy as np

__all__ = ["PyramidParams", "SubbandSet", "PadTooSmall", "build_pyramid"]


class PadTooSmall(ValueError):
    """`pad_to` is smaller than the image."""


@dataclass(frozen=True)
class PyramidParams:
    """Decomposition shape: bandpass scale count, orientations per scale,
    and the padded square side (None = next power of two >= max(H, W))."""

    levels: int = 3
    orientations: int = 6
    pad_to: int | None = None

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.orientations < 2:
            raise ValueError("orientations must be >= 2")
        if self.pad_to is not None and self.pad_to % (1 << self.levels) != 0:
            raise ValueError(
                f"pad_to={self.pad_to} must be divisible by 2**levels={1 << self.levels}"
            )

    def resolve_pad(self, height, width):
        """The padded side for a given image, validated against the limits."""
        if self.pad_to is None:
            pad = 1 << max(2, int(math.ceil(math.log2(max(height, width)))))
        else:
            pad = self.pad_to
        if pad < max(height, width):
            raise PadTooSmall(f"pad_to={pad} is smaller than image {height}x{width}")
        if pad >> self.levels < 4:
            raise ValueError(
                f"pad_to={pad} leaves a {pad >> self.levels}px band at level "
                f"{self.levels}; need at least 4px"
            )
        return pad


@dataclass
class SubbandSet:
    """Complex coefficient maps of one decomposition.

    `bands[l-1][m]` is the map for level l (1-indexed, coarser with
    increasing l) and orientation m (0-indexed), with spatial side
    pad_to / 2**l. Residuals live in `highpass` (full resolution) and
    `lowpass` (side pad_to / 2**levels).
    """

    bands: list = field(default_factory=list)
    highpass: np.ndarray | None = None
    lowpass: np.ndarray | None = None
    source_dims: tuple = (0, 0)
    params: PyramidParams | None = None

    def band(self, level, orientation):
        """Coefficient map at 1-indexed level, 0-indexed orientation."""
        return self.bands[level - 1][orientation]


def _hi_transition(x):
    return np.cos(0.5 * np.pi * np.clip(x, -1.0, 0.0))


def _lo_transition(x):
    return np.sqrt(np.maximum(0.0, 1.0 - _hi_transition(x) ** 2))


def _wrap_angle(a):
    return np.mod(a + np.pi, 2.0 * np.pi) - np.pi


def _make_filter_bank(pad, levels, orientations):
    """All frequency-domain masks for one configuration (unshifted layout)."""
    freqs = np.fft.fftfreq(pad) * 2.0 * np.pi
    wx, wy = np.meshgrid(freqs, freqs)
    rho = np.hypot(wx, wy)
    theta = np.arctan2(wy, wx)
    with np.errstate(divide="ignore"):
        log_r = np.log2(rho / np.pi)  # -inf at DC; transitions clip it away

    order = orientations - 1
    # normalizes the summed squared angular responses over a full turn
    const = (2 ** (2 * order)) * math.factorial(order) ** 2 / (
        orientations * math.factorial(2 * order)
    )
    # factor 2 restores the energy removed by keeping a single half-plane
    angular = []
    for m in range(orientations):
        d = _wrap_angle(theta - np.pi * m / orientations)
        mask = 2.0 * math.sqrt(const) * np.cos(d) ** order * (np.abs(d) < np.pi / 2)
        angular.append(mask)

    phase = (-1j) ** order  # unit-modulus convention factor
    band_masks = []
    for level in range(1, levels + 1):
        radial = _hi_transition(log_r + level) * _lo_transition(log_r + level - 1)
        band_masks.append([phase * radial * a for a in angular])

    return {
        "high": _hi_transition(log_r),
        "bands": band_masks,
        "low": _lo_transition(log_r + levels),
    }


_BANK_CACHE = {}
_BANK_LOCK = threading.Lock()


def _filter_bank(pad, levels, orientations):
    key = (pad, levels, orientations)
    with _BANK_LOCK:
        bank = _BANK_CACHE.get(key)
        if bank is None:
            bank = _make_filter_bank(pad, levels, orientations)
            _BANK_CACHE[key] = bank
    return bank


def build_pyramid(img, params=None, decimate=True):
    """Decompose an image into complex oriented subbands.

    Parameters
    ----------
    img : ndarray (H, W)
        Grayscale image.
    params : PyramidParams, optional
    decimate : bool
        When False, every map stays at the padded resolution (useful for
        inspecting shift behavior); coefficient values are unchanged,
        decimation only subsamples them.

    Returns
    -------
    SubbandSet
    """
    if params is None:
        params = PyramidParams()
    img = np.asarray(img, dtype=np.float64)
    height, width = img.shape
    pad = params.resolve_pad(height, width)

    padded = np.zeros((pad, pad), dtype=np.float64)
    top = (pad - height) // 2
    left = (pad - width) // 2
    padded[top : top + height, left : left + width] = img

    spectrum = np.fft.fft2(padded)
    bank = _filter_bank(pad, params.levels, params.orientations)

    out = SubbandSet(source_dims=(height, width), params=params)
    out.highpass = np.fft.ifft2(spectrum * bank["high"])
    for level in range(1, params.levels + 1):
        step = (1 << level) if decimate else 1
        maps = []
        for mask in bank["bands"][level - 1]:
            band = np.fft.ifft2(spectrum * mask)
            maps.append(band[::step, ::step])
        out.bands.append(maps)
    step = (1 << params.levels) if decimate else 1
    out.lowpass = np.fft.ifft2(spectrum * bank["low"])[::step, ::step]
    return out
