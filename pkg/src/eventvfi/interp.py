"""Coarse event-based frame interpolation, PSNR/SSIM, and the evaluation harness."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cond import weight_schedule
from .core import LUMA_WEIGHTS, EventStream, Frame
from .errors import ConfigError, ShapeError
from .fileio import atomic_write
from .sim import InterpInstance

__all__ = [
    "InterpConfig",
    "EvalReport",
    "integrate_events",
    "interpolate",
    "crossfade",
    "event_interpolator",
    "psnr",
    "ssim",
    "evaluate",
]

BLENDS = ("forward", "backward", "bidirectional")


@dataclass(frozen=True)
class InterpConfig:
    contrast: float = 0.15
    eps: float = 1e-3
    blend: str = "bidirectional"

    def __post_init__(self):
        if not (self.contrast > 0 and math.isfinite(self.contrast)):
            raise ConfigError(f"contrast must be > 0, got {self.contrast}")
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ConfigError(f"eps must be > 0, got {self.eps}")
        if self.blend not in BLENDS:
            raise ConfigError(f"blend must be one of {BLENDS}, got {self.blend!r}")


def _pixel_sums(stream: EventStream, shape):
    h, w = shape
    if len(stream) == 0:
        return np.zeros(shape)
    idx = stream.y.astype(np.int64) * w + stream.x
    return np.bincount(idx, weights=stream.p.astype(np.float64), minlength=h * w).reshape(h, w)


def integrate_events(frame: Frame, stream: EventStream, t_target: int, cfg: InterpConfig, direction: str = "forward") -> Frame:
    """Move ``frame`` along its events to time ``t_target``.

    ``forward``: ``stream`` starts at the frame's time and the events with
    ``t < t_target`` are added, ``log(I + eps) += c * sum(p)``.
    ``backward``: ``stream`` ends at the frame's time and the events with
    ``t >= t_target`` are subtracted. The same log change is applied to every
    colour channel, and the result is clipped to [0, 1].
    """
    if (stream.height, stream.width) != (frame.height, frame.width):
        raise ShapeError(f"events are {stream.width}x{stream.height}, frame is {frame.width}x{frame.height}")
    cut = int(np.searchsorted(stream.t, np.uint64(max(int(t_target), 0)), side="left"))
    if direction == "forward":
        s = _pixel_sums(stream._subset(slice(0, cut)), (frame.height, frame.width))
    elif direction == "backward":
        s = -_pixel_sums(stream._subset(slice(cut, None)), (frame.height, frame.width))
    else:
        raise ConfigError(f"direction must be 'forward' or 'backward', got {direction!r}")
    gain = np.expm1(cfg.contrast * s)
    if frame.channels == 3:
        gain = gain[:, :, None]
    px = frame.pixels
    # (I + eps) * exp(c s) - eps, arranged so s == 0 returns I exactly
    return Frame(np.clip(px + (px + cfg.eps) * gain, 0.0, 1.0))


def _blend(a: Frame, b: Frame, wa: float, wb: float) -> Frame:
    if wb == 0.0:
        return a
    if wa == 0.0:
        return b
    return Frame(np.clip(wa * a.pixels + wb * b.pixels, 0.0, 1.0))


def estimate_step(instance: InterpInstance, k: int, cfg: InterpConfig) -> Frame:
    """Estimate of the frame at step ``k`` in ``0..T`` of ``instance``.

    With the bidirectional blend, step 0 returns ``frame_a`` and step ``T``
    returns ``frame_b`` unchanged.
    """
    T = instance.steps
    if not 0 <= k <= T:
        raise ConfigError(f"step {k} outside 0..{T}")
    t = instance.timestamps[k]
    if cfg.blend == "forward":
        return integrate_events(instance.frame_a, instance.events, t, cfg, "forward")
    if cfg.blend == "backward":
        return integrate_events(instance.frame_b, instance.events, t, cfg, "backward")
    wp, wn, _ = weight_schedule(T, "corrected")[k]
    fwd = integrate_events(instance.frame_a, instance.events, t, cfg, "forward") if wp else instance.frame_a
    bwd = integrate_events(instance.frame_b, instance.events, t, cfg, "backward") if wn else instance.frame_b
    return _blend(fwd, bwd, wp, wn)


def interpolate(instance: InterpInstance, cfg: InterpConfig = InterpConfig()) -> list[Frame]:
    """The ``skip`` intermediate frames of ``instance`` estimated from its events."""
    return [estimate_step(instance, k, cfg) for k in range(1, instance.steps)]


def crossfade(instance: InterpInstance) -> list[Frame]:
    """Baseline: linear blend of the key frames, ignoring events."""
    sched = weight_schedule(instance.steps, "corrected")
    return [_blend(instance.frame_a, instance.frame_b, *sched[k][:2]) for k in range(1, instance.steps)]


def event_interpolator(cfg: InterpConfig = InterpConfig()) -> Callable[[InterpInstance], list[Frame]]:
    def run(instance):
        return interpolate(instance, cfg)

    run.config = asdict(cfg)
    return run


def _pixels(f):
    return f.pixels if isinstance(f, Frame) else np.asarray(f, dtype=np.float64)


def psnr(a, b) -> float:
    """``10 log10(1 / MSE)`` for intensities in [0, 1]; ``inf`` for identical frames."""
    pa, pb = _pixels(a), _pixels(b)
    if pa.shape != pb.shape:
        raise ShapeError(f"frame shapes differ: {pa.shape} vs {pb.shape}")
    mse = float(np.mean((pa - pb) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _gray(f):
    if isinstance(f, Frame):
        return f.luminance()
    p = np.asarray(f, dtype=np.float64)
    return p @ LUMA_WEIGHTS if p.ndim == 3 else p


def _filter_valid(img, k):
    n = k.size
    h, w = img.shape
    rows = sum(k[j] * img[:, j : w - n + 1 + j] for j in range(n))
    return sum(k[j] * rows[j : h - n + 1 + j, :] for j in range(n))


def ssim(a, b) -> float:
    """Mean SSIM over all fully-contained 11x11 Gaussian windows (sigma 1.5).

    Constants ``K1 = 0.01``, ``K2 = 0.03``, dynamic range 1. RGB frames are
    compared on their luminance.
    """
    x, y = _gray(a), _gray(b)
    if x.shape != y.shape:
        raise ShapeError(f"frame shapes differ: {x.shape} vs {y.shape}")
    if min(x.shape) < SSIM_WINDOW:
        raise ConfigError(f"SSIM needs frames of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {x.shape}")
    r = SSIM_WINDOW // 2
    i = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(i * i) / (2 * SSIM_SIGMA**2))
    k /= k.sum()
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    mx, my = _filter_valid(x, k), _filter_valid(y, k)
    sxx = _filter_valid(x * x, k) - mx * mx
    syy = _filter_valid(y * y, k) - my * my
    sxy = _filter_valid(x * y, k) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


@dataclass
class EvalReport:
    """Per-frame and aggregate scores of one evaluation run.

    Infinite PSNRs (exact reconstructions) are stored as ``inf`` in memory,
    written as ``null`` in JSON, counted in ``inf_count`` and left out of
    ``psnr_mean``. ``psnr_mean`` is ``inf`` when every frame is exact.
    """

    config: dict = field(default_factory=dict)
    per_instance: list = field(default_factory=list)
    per_frame: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    psnr_mean: float = math.nan
    ssim_mean: float = math.nan
    inf_count: int = 0
    frame_count: int = 0

    @property
    def instance_count(self) -> int:
        return len(self.per_instance)

    def to_dict(self) -> dict:
        def fin(v):
            return v if isinstance(v, (int, str)) or math.isfinite(v) else None

        return {
            "config": self.config,
            "per_instance": [{k: fin(v) for k, v in row.items()} for row in self.per_instance],
            "per_frame": [{k: fin(v) for k, v in row.items()} for row in self.per_frame],
            "failures": self.failures,
            "aggregate": {
                "psnr_mean": fin(self.psnr_mean),
                "ssim_mean": fin(self.ssim_mean),
                "inf_count": self.inf_count,
                "frame_count": self.frame_count,
                "instance_count": self.instance_count,
                "all_inf": self.frame_count > 0 and self.inf_count == self.frame_count,
            },
        }

    def write(self, path) -> None:
        with atomic_write(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _finite_mean(values):
    finite = [v for v in values if math.isfinite(v)]
    if finite:
        return float(np.mean(finite))
    return math.inf if values else math.nan


def evaluate(instances: Sequence[InterpInstance], method: Callable, out=None, config: dict | None = None) -> EvalReport:
    """Score ``method(instance) -> list[Frame]`` against each instance's ground truth.

    A failing instance is recorded in ``failures`` and skipped. Rows are
    ordered by instance index. If ``out`` is given the report is written there
    as JSON.
    """
    if not instances:
        raise ConfigError("no instances to evaluate")
    report = EvalReport(config=dict(config or getattr(method, "config", {}) or {}))
    for inst in sorted(instances, key=lambda i: i.index):
        try:
            frames = list(method(inst))
            if len(frames) != len(inst.intermediates):
                raise ShapeError(f"method returned {len(frames)} frames, expected {len(inst.intermediates)}")
            scores = [(psnr(f, gt), ssim(f, gt)) for f, gt in zip(frames, inst.intermediates)]
        except Exception as exc:  # recorded per instance, not fatal
            report.failures.append({"index": inst.index, "error": f"{type(exc).__name__}: {exc}"})
            continue
        for j, (p, s) in enumerate(scores, start=1):
            report.per_frame.append({"index": inst.index, "step": j, "psnr": p, "ssim": s})
        report.per_instance.append(
            {
                "index": inst.index,
                "psnr": _finite_mean([p for p, _ in scores]),
                "ssim": float(np.mean([s for _, s in scores])),
                "inf_count": sum(1 for p, _ in scores if math.isinf(p)),
            }
        )
    psnrs = [r["psnr"] for r in report.per_frame]
    report.frame_count = len(psnrs)
    report.inf_count = sum(1 for p in psnrs if math.isinf(p))
    report.psnr_mean = _finite_mean(psnrs)
    report.ssim_mean = float(np.mean([r["ssim"] for r in report.per_frame])) if psnrs else math.nan
    if out is not None:
        report.write(out)
    return report
