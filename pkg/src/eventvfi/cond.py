"""Deterministic arithmetic of the motion condition generator.

Feature maps are ``(C, H, W)`` float64 arrays. The learned sub-networks
(frame encoder, voxel feature extractor, fusion and attention stacks) are
represented by the two provider protocols below; the shipped providers are
analytic stand-ins that need no weights.

The temporal weights come in two orientations. ``"paper"`` weights the
first key frame by ``k / T``, which gives it zero weight at its own time
step. ``"corrected"`` (the default) weights it by ``(T - k) / T`` so that
``c_0`` is exactly the first key frame's features and ``c_T`` the second's.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .core import Frame
from .errors import ConfigError, ShapeError, ValidationError

__all__ = [
    "WeightSchedule",
    "FusionWeights",
    "FeatureProvider",
    "EventFeatureProvider",
    "IdentityFeatures",
    "DownsampleFeatures",
    "MaskedVoxelFeatures",
    "weight_schedule",
    "fuse_mmf",
    "assemble_conditions",
    "mmcg_objective",
    "coarse_condition_provider",
]

ORIENTATIONS = ("corrected", "paper")


@dataclass(frozen=True, eq=False)
class WeightSchedule:
    """Per-step weights for ``k = 0..T``: previous frame, next frame, event features."""

    T: int
    w_prev: np.ndarray
    w_next: np.ndarray
    w_evs: np.ndarray
    orientation: str = "corrected"

    def __len__(self):
        return self.T + 1

    def __getitem__(self, k):
        return float(self.w_prev[k]), float(self.w_next[k]), float(self.w_evs[k])


def weight_schedule(T: int, orientation: str = "corrected") -> WeightSchedule:
    if T < 1:
        raise ConfigError(f"T must be >= 1, got {T}")
    if orientation not in ORIENTATIONS:
        raise ConfigError(f"orientation must be one of {ORIENTATIONS}, got {orientation!r}")
    k = np.arange(T + 1)
    rising = k / T
    falling = (T - k) / T
    w_evs = np.ones(T + 1)
    w_evs[[0, T]] = 0.0
    if orientation == "paper":
        w_prev, w_next = rising, falling
    else:
        w_prev, w_next = falling, rising
    for a in (w_prev, w_next, w_evs):
        a.setflags(write=False)
    return WeightSchedule(T, w_prev, w_next, w_evs, orientation)


@dataclass(frozen=True)
class FusionWeights:
    """Weights for the two frame features and the event feature.

    Each may be a scalar or an array broadcastable to the feature shape.
    """

    w1: float | np.ndarray
    w2: float | np.ndarray
    w3: float | np.ndarray


def _same_shape(*maps):
    shape = np.shape(maps[0])
    for m in maps[1:]:
        if np.shape(m) != shape:
            raise ShapeError(f"feature shapes differ: {shape} vs {np.shape(m)}")
    return shape


def fuse_mmf(h_t, h_t1, h_e, w: FusionWeights, f_fuse) -> np.ndarray:
    """``w1 * h_t + w2 * h_t1 + w3 * h_e + f_fuse``."""
    shape = _same_shape(h_t, h_t1, h_e, f_fuse)
    ws = [np.asarray(v, dtype=np.float64) for v in (w.w1, w.w2, w.w3)]
    for v in ws:
        try:
            np.broadcast_shapes(v.shape, shape)
        except ValueError:
            raise ShapeError(f"fusion weight of shape {v.shape} does not broadcast to {shape}") from None
        if not np.all(np.isfinite(v)):
            raise ValidationError("fusion weights must be finite")
    return ws[0] * h_t + ws[1] * h_t1 + ws[2] * h_e + f_fuse


def assemble_conditions(h_t, h_t1, f_evs: Sequence, sched: WeightSchedule) -> list[np.ndarray]:
    """Per-step conditions ``c_k = w_evs(k) f_evs[k] + w_prev(k) h_t + w_next(k) h_t1``.

    Terms with zero weight are skipped rather than multiplied by zero, so with
    the corrected schedule ``c_0`` is ``h_t`` and ``c_T`` is ``h_t1`` bit for bit.
    """
    if len(f_evs) != sched.T + 1:
        raise ShapeError(f"need {sched.T + 1} event features, got {len(f_evs)}")
    shape = _same_shape(h_t, h_t1)
    h_t = np.asarray(h_t, dtype=np.float64)
    h_t1 = np.asarray(h_t1, dtype=np.float64)
    out = []
    for k in range(sched.T + 1):
        wp, wn, we = sched[k]
        terms = []
        if we != 0.0:
            f = np.asarray(f_evs[k], dtype=np.float64)
            if f.shape != shape:
                raise ShapeError(f"event feature {k} has shape {f.shape}, expected {shape}")
            terms.append(we * f)
        if wp != 0.0:
            terms.append(h_t if wp == 1.0 else wp * h_t)
        if wn != 0.0:
            terms.append(h_t1 if wn == 1.0 else wn * h_t1)
        c = np.zeros(shape) if not terms else terms[0].copy()
        for term in terms[1:]:
            c += term
        out.append(c)
    return out


def mmcg_objective(pred: Sequence, targets: Sequence) -> float:
    """Mean over frames of the per-frame sum of squared differences."""
    if len(pred) != len(targets):
        raise ShapeError(f"{len(pred)} predictions for {len(targets)} targets")
    if len(pred) < 2:
        raise ShapeError("need at least the two key frames")
    total = 0.0
    for p, t in zip(pred, targets):
        _same_shape(p, t)
        d = np.asarray(t, dtype=np.float64) - np.asarray(p, dtype=np.float64)
        total += float(np.sum(d * d))
    return total / len(pred)


class FeatureProvider(Protocol):
    """Maps a frame to a ``(C, H', W')`` feature map. Must be deterministic."""

    def __call__(self, frame: Frame) -> np.ndarray: ...


class EventFeatureProvider(Protocol):
    """Maps a ``(bins, H, W)`` voxel grid and its ROI mask to a feature map."""

    def __call__(self, grid: np.ndarray, mask: np.ndarray) -> np.ndarray: ...


def _chw(frame):
    px = frame.pixels if isinstance(frame, Frame) else np.asarray(frame, dtype=np.float64)
    return px[None] if px.ndim == 2 else np.moveaxis(px, -1, 0)


class IdentityFeatures:
    """Pixels as features, channels first."""

    def __call__(self, frame):
        return np.array(_chw(frame), dtype=np.float64)


class DownsampleFeatures:
    """Average-pool the pixels by an integer factor (crops any remainder)."""

    def __init__(self, factor: int = 8):
        if factor < 1:
            raise ConfigError(f"factor must be >= 1, got {factor}")
        self.factor = factor

    def __call__(self, frame):
        x = _chw(frame)
        f = self.factor
        c, h, w = x.shape
        h2, w2 = h // f, w // f
        if h2 == 0 or w2 == 0:
            raise ShapeError(f"frame {h}x{w} smaller than pooling factor {f}")
        return x[:, : h2 * f, : w2 * f].reshape(c, h2, f, w2, f).mean(axis=(2, 4))


class MaskedVoxelFeatures:
    """Voxel grid restricted to the ROI mask; one channel per temporal bin."""

    def __call__(self, grid, mask):
        g = np.asarray(grid, dtype=np.float64)
        return g * np.asarray(mask, dtype=bool)[None]


def coarse_condition_provider(instance, contrast: float, eps: float = 1e-3, features: FeatureProvider | None = None):
    """Conditions for every step of ``instance`` from the coarse event interpolator.

    Key frames give ``h_t`` and ``h_t1``; the event features are the residuals
    that turn the linear cross-fade into the bidirectional event-integrated
    estimate, so the assembled ``c_k`` are the features of those estimates.
    """
    from .interp import InterpConfig, interpolate  # interp depends on this module

    features = features or IdentityFeatures()
    sched = weight_schedule(instance.steps, "corrected")
    h_t = features(instance.frame_a)
    h_t1 = features(instance.frame_b)
    estimates = interpolate(instance, InterpConfig(contrast=contrast, eps=eps, blend="bidirectional"))
    f_evs = [np.zeros_like(h_t)]
    for k, frame in enumerate(estimates, start=1):
        wp, wn, _ = sched[k]
        f_evs.append(features(frame) - (wp * h_t + wn * h_t1))
    f_evs.append(np.zeros_like(h_t))
    return assemble_conditions(h_t, h_t1, f_evs, sched)
