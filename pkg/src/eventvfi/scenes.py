"""Small synthetic scenes used by the tests, the demos and the CLI fixtures."""

from __future__ import annotations

import numpy as np

from .core import FrameSequence

__all__ = ["translating_square", "translating_gradient"]


def translating_square(
    size: int = 64,
    n_frames: int = 13,
    step: int = 4,
    side: int = 16,
    background: float = 0.2,
    foreground: float = 0.8,
    dt: int = 1000,
) -> FrameSequence:
    """A bright square moving ``step`` pixels right (and half that down) per frame."""
    frames = []
    for k in range(n_frames):
        img = np.full((size, size), background)
        x0 = 4 + k * step
        y0 = size // 4 + (k * step) // 2
        img[y0 : y0 + side, x0 : x0 + side] = foreground
        frames.append(img)
    return FrameSequence(frames, np.arange(n_frames) * dt)


def translating_gradient(
    size: int = 64,
    n_frames: int = 20,
    speed: float = 1.5,
    period: float = 32.0,
    dt: int = 1000,
) -> FrameSequence:
    """A smooth diagonal sinusoidal ramp drifting ``speed`` pixels per frame."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    frames = []
    for k in range(n_frames):
        phase = 2 * np.pi * (xx + 0.5 * yy - speed * k) / period
        frames.append(0.05 + 0.9 * (0.5 + 0.5 * np.sin(phase)))
    return FrameSequence(frames, np.arange(n_frames) * dt)
