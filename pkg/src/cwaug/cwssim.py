"""Complex-wavelet structural similarity between two equally sized images.

Both images are decomposed with the same steerable pyramid; a square
window slides over each selected coefficient map, and every window
position contributes

    (2 * |sum(c_a * conj(c_b))| + K) / (sum|c_a|^2 + sum|c_b|^2 + K)

where the sums run over the N = window**2 coefficients under the window.
The index is the unweighted mean over all window positions, orientations,
and selected levels. A global phase rotation of either window leaves the
value unchanged, which is what buys tolerance to small geometric shifts;
identical windows score exactly 1.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .pyramid import PyramidParams, build_pyramid

__all__ = [
    "CwssimParams",
    "LengthMismatch",
    "DimMismatch",
    "ConfigUnusable",
    "cwssim_window",
    "cwssim_index",
    "cwssim_from_pyramids",
]


class LengthMismatch(ValueError):
    """Coefficient vectors of unequal length."""


class DimMismatch(ValueError):
    """Images of unequal dimensions."""


class ConfigUnusable(Exception):
    """Every selected pyramid level is too small for the window."""


@dataclass(frozen=True)
class CwssimParams:
    """Scoring knobs.

    K stabilizes near-empty windows (default 0.03); `window` is the odd
    side length of the sliding window in coefficient samples; `step` its
    stride; `levels_used` the 1-indexed pyramid levels aggregated.
    """

    K: float = 0.03
    window: int = 7
    step: int = 1
    levels_used: tuple = (2,)
    pyramid: PyramidParams = field(default_factory=PyramidParams)

    def __post_init__(self):
        if self.K <= 0:
            raise ValueError("K must be > 0")
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be odd and >= 3")
        if self.step < 1:
            raise ValueError("step must be >= 1")
        levels = tuple(self.levels_used)
        if not levels:
            raise ValueError("levels_used must not be empty")
        if any(l < 1 or l > self.pyramid.levels for l in levels):
            raise ValueError(
                f"levels_used {levels} must lie in 1..{self.pyramid.levels}"
            )
        object.__setattr__(self, "levels_used", levels)


def cwssim_window(cx, cy, K=0.03):
    """Similarity of two complex coefficient vectors of equal length.

    Returns a value in (0, 1]; 1 exactly when the vectors agree up to a
    global phase.
    """
    if K <= 0:
        raise ValueError("K must be > 0")
    cx = np.atleast_1d(np.asarray(cx, dtype=np.complex128))
    cy = np.atleast_1d(np.asarray(cy, dtype=np.complex128))
    if cx.shape != cy.shape:
        raise LengthMismatch(f"coefficient vectors differ: {cx.shape} vs {cy.shape}")
    if cx.size == 0:
        raise LengthMismatch("coefficient vectors must be non-empty")
    num = 2.0 * np.abs(np.sum(cx * np.conj(cy))) + K
    den = np.sum(cx.real**2 + cx.imag**2) + np.sum(cy.real**2 + cy.imag**2) + K
    return float(num / den)


def _window_sums(arr, window, step):
    # sum of each fully-contained window; overhanging windows are dropped
    view = sliding_window_view(arr, (window, window))[::step, ::step]
    return view.sum(axis=(-2, -1))


def _map_scores(ca, cb, window, step, K):
    # the cross term is assembled from real products rather than numpy's
    # complex multiply: elementwise products commute bitwise, which makes
    # score(a, b) == score(b, a) exact instead of merely close
    cross_re = _window_sums(ca.real * cb.real + ca.imag * cb.imag, window, step)
    cross_im = _window_sums(ca.imag * cb.real - ca.real * cb.imag, window, step)
    ea = _window_sums(ca.real**2 + ca.imag**2, window, step)
    eb = _window_sums(cb.real**2 + cb.imag**2, window, step)
    return (2.0 * np.hypot(cross_re, cross_im) + K) / (ea + eb + K)


def cwssim_from_pyramids(pa, pb, params):
    """Index from two prebuilt decompositions (same pyramid parameters)."""
    if pa.source_dims != pb.source_dims or pa.params != pb.params:
        raise DimMismatch(
            f"decompositions differ: {pa.source_dims}/{pa.params} vs "
            f"{pb.source_dims}/{pb.params}"
        )
    scores = []
    for level in params.levels_used:
        side = pa.bands[level - 1][0].shape[0]
        if side < params.window:
            warnings.warn(
                f"level {level} map ({side}x{side}) is smaller than the "
                f"{params.window}x{params.window} window; level skipped",
                stacklevel=2,
            )
            continue
        for ca, cb in zip(pa.bands[level - 1], pb.bands[level - 1]):
            scores.append(_map_scores(ca, cb, params.window, params.step, params.K).ravel())
    if not scores:
        raise ConfigUnusable(
            f"no usable level: all of {params.levels_used} are smaller than "
            f"the {params.window}x{params.window} window"
        )
    return float(np.mean(np.concatenate(scores)))


def cwssim_index(a, b, params=None):
    """Similarity of two images in [0, 1] (1 = most similar).

    Raises DimMismatch when shapes differ and ConfigUnusable when no
    selected level can host a full window.
    """
    if params is None:
        params = CwssimParams()
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimMismatch(f"image shapes differ: {a.shape} vs {b.shape}")
    pa = build_pyramid(a, params.pyramid)
    pb = build_pyramid(b, params.pyramid)
    return cwssim_from_pyramids(pa, pb, params)
