"""Temporal voxel grids and the event ROI mask.

Grids are plain ``(bins, H, W)`` float64 arrays and masks are ``(H, W)`` bool
arrays. All spatial filters use replicate (edge) borders.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial

import numpy as np

from .core import EventStream, slice_window
from .errors import ConfigError, DomainError, InvalidRangeError

__all__ = [
    "DEFAULT_BINS",
    "RoiMaskConfig",
    "voxelize",
    "normalize_abs",
    "gaussian_kernel",
    "gaussian_blur",
    "binary_dilate",
    "binary_median",
    "roi_mask",
]

DEFAULT_BINS = 8


def voxelize(stream: EventStream, t0: int, t1: int, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Accumulate polarity of events in ``[t0, t1)`` into a ``(bins, H, W)`` grid.

    Each event sits at the normalised time ``u = (t - t0) / (t1 - t0) * (bins - 1)``
    and splits its polarity linearly between bins ``floor(u)`` and
    ``floor(u) + 1``, so the grid sum equals the window's polarity sum.
    """
    if bins < 1:
        raise ConfigError(f"bins must be >= 1, got {bins}")
    if not t0 < t1:
        raise InvalidRangeError(f"empty time window [{t0}, {t1})")
    h, w = stream.height, stream.width
    plane = h * w
    if len(stream) == 0:
        return np.zeros((bins, h, w))
    win = slice_window(stream, t0, t1)

    # integer product first: events on a bin centre land on it exactly
    u = ((win.t.astype(np.int64) - t0) * (bins - 1)) / (t1 - t0)
    lo = u.astype(np.int64)
    frac = u - lo
    p = win.p.astype(np.float64)
    pix = win.y.astype(np.int64) * w + win.x
    idx = lo * plane + pix

    grid = np.bincount(idx, weights=p * (1.0 - frac), minlength=bins * plane)
    upper = frac > 0
    if upper.any():
        grid += np.bincount(idx[upper] + plane, weights=p[upper] * frac[upper], minlength=(bins + 1) * plane)[
            : bins * plane
        ]
    return grid.reshape(bins, h, w)


def normalize_abs(grid: np.ndarray) -> np.ndarray:
    """``|v| / max|v|`` over the whole grid; an all-zero grid stays zero."""
    a = np.abs(np.asarray(grid, dtype=np.float64))
    m = a.max(initial=0.0)
    if m == 0.0:
        return a
    return a / m


def gaussian_kernel(sigma: float, radius: int) -> np.ndarray:
    """Sum-normalised samples of ``exp(-i**2 / (2 sigma**2))`` for ``i in [-radius, radius]``."""
    if not sigma > 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    if radius < 0:
        raise ConfigError(f"radius must be >= 0, got {radius}")
    i = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(i * i) / (2.0 * sigma * sigma))
    return k / k.sum()


def _correlate_axis(a, kernel, axis):
    r = (kernel.size - 1) // 2
    if r == 0:
        return a * kernel[0]
    pad = [(0, 0)] * a.ndim
    pad[axis] = (r, r)
    padded = np.pad(a, pad, mode="edge")
    n = a.shape[axis]
    out = np.zeros_like(a, dtype=np.float64)
    for j, kj in enumerate(kernel):
        out += kj * np.take(padded, np.arange(j, j + n), axis=axis)
    return out


def gaussian_blur(plane: np.ndarray, sigma: float = 1.0, radius: int = 2) -> np.ndarray:
    """Separable Gaussian blur over the last two axes with replicate borders."""
    k = gaussian_kernel(sigma, radius)
    a = np.asarray(plane, dtype=np.float64)
    return _correlate_axis(_correlate_axis(a, k, -1), k, -2)


def _box_reduce(mask, radius, axis, reduce):
    if radius == 0:
        return mask
    pad = [(0, 0)] * mask.ndim
    pad[axis] = (radius, radius)
    padded = np.pad(mask, pad, mode="edge")
    n = mask.shape[axis]
    views = [np.take(padded, np.arange(j, j + n), axis=axis) for j in range(2 * radius + 1)]
    return reduce(views)


def binary_dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Dilation by a ``(2r+1) x (2r+1)`` square, as two 1-D max passes."""
    m = np.asarray(mask, dtype=bool)
    return _box_reduce(_box_reduce(m, radius, -1, np.logical_or.reduce), radius, -2, np.logical_or.reduce)


def binary_median(mask: np.ndarray, radius: int) -> np.ndarray:
    """Median of a binary image over a ``(2r+1)``-square window: a majority vote."""
    m = np.asarray(mask, dtype=bool)
    if radius == 0:
        return m.copy()
    count = partial(np.sum, axis=0, dtype=np.int32)
    c = _box_reduce(_box_reduce(m.astype(np.int32), radius, -1, count), radius, -2, count)
    n = (2 * radius + 1) ** 2
    return c > n // 2


@dataclass(frozen=True)
class RoiMaskConfig:
    gaussian_sigma: float = 1.0
    gaussian_radius: int = 2
    threshold: float = 0.01
    dilate_radius: int = 2
    median_radius: int = 1

    def __post_init__(self):
        if not self.gaussian_sigma > 0:
            raise ConfigError(f"gaussian_sigma must be > 0, got {self.gaussian_sigma}")
        if not self.threshold > 0:
            raise ConfigError(f"threshold must be > 0, got {self.threshold}")
        for name in ("gaussian_radius", "dilate_radius", "median_radius"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")


def roi_mask(grid: np.ndarray, cfg: RoiMaskConfig = RoiMaskConfig()) -> np.ndarray:
    """Binary motion mask of a voxel grid.

    The grid is normalised by its global absolute maximum; every temporal
    channel is then blurred, thresholded, dilated and median filtered, and
    the channel masks are OR-ed together.
    """
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim == 2:
        g = g[None]
    smooth = gaussian_blur(normalize_abs(g), cfg.gaussian_sigma, cfg.gaussian_radius)
    b = smooth > cfg.threshold
    b = binary_median(binary_dilate(b, cfg.dilate_radius), cfg.median_radius)
    return np.logical_or.reduce(b, axis=0)
