"""Event synthesis from frame sequences and skip-N instance construction.

The simulator is the idealised threshold model: every pixel keeps a reference
log level, and each time the linearly interpolated log intensity moves one
contrast step ``c`` away from it an event of that sign is emitted and the
reference follows. There is no noise, leak or bandwidth limit, which keeps the
reconstruction bound exact: summing ``c * p`` over a pixel's events recovers
its log intensity at every frame to within ``c``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EventStream, Frame, FrameSequence, slice_window
from .errors import ConfigError, InstanceError, ShapeError

__all__ = ["SimConfig", "InterpInstance", "log_intensity", "simulate_events", "build_instances"]


@dataclass(frozen=True)
class SimConfig:
    """Simulator parameters.

    ``refractory_us`` drops events that follow the previous emitted event at the
    same pixel by less than that many microseconds. The reference level still
    advances for dropped events, so later events stay on the threshold grid.
    ``seed`` is carried for reproducibility of future noise models; the
    noiseless model does not draw random numbers.
    """

    contrast: float = 0.15
    eps: float = 1e-3
    refractory_us: int = 0
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.contrast) and self.contrast > 0):
            raise ConfigError(f"contrast threshold must be > 0, got {self.contrast}")
        if not (np.isfinite(self.eps) and self.eps > 0):
            raise ConfigError(f"eps must be > 0, got {self.eps}")
        if self.refractory_us < 0:
            raise ConfigError(f"refractory_us must be >= 0, got {self.refractory_us}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")


def log_intensity(frame: Frame | np.ndarray, eps: float) -> np.ndarray:
    """``log(I + eps)`` of the frame luminance."""
    lum = frame.luminance() if isinstance(frame, Frame) else np.asarray(frame, dtype=np.float64)
    return np.log(lum + eps)


def _whole_steps(d, c):
    """``floor(d / c)``, corrected so that ``0 <= d - n * c < c`` holds in floating point."""
    n = np.floor(d / c)
    r = d - n * c
    n = n + (r >= c) - (r < 0)
    return n.astype(np.int64)


def _crossings(L0, L1, ref_count, base, c, t0, dt):
    """Events for one frame interval, as flat (t, pixel, p) arrays.

    ``base + c * ref_count`` is each pixel's current reference level.
    """
    ref = base + c * ref_count
    up = _whole_steps(L1 - ref, c)
    dn = _whole_steps(ref - L1, c)
    n = np.where(up > 0, up, np.where(dn > 0, -dn, 0)).ravel()
    mag = np.abs(n)
    total = int(mag.sum())
    if total == 0:
        return n, None
    pix = np.repeat(np.flatnonzero(mag), mag[mag > 0])
    # 1-based crossing index within each pixel's run
    starts = np.cumsum(mag[mag > 0]) - mag[mag > 0]
    j = np.arange(total) - np.repeat(starts, mag[mag > 0]) + 1
    sign = np.sign(n[pix])
    level = ref.ravel()[pix] + sign * j * c
    l0 = L0.ravel()[pix]
    l1 = L1.ravel()[pix]
    frac = (level - l0) / (l1 - l0)
    frac = np.clip(frac, 0.0, 1.0)
    t = t0 + np.minimum(np.floor(frac * dt).astype(np.int64), dt - 1)
    return n, (t, pix, sign.astype(np.int8))


def _apply_refractory(t, pix, refractory):
    order = np.lexsort((t, pix))
    keep = np.zeros(t.size, dtype=bool)
    last_pix, last_t = -1, 0
    for i in order.tolist():
        if pix[i] != last_pix or t[i] - last_t >= refractory:
            keep[i] = True
            last_pix, last_t = pix[i], t[i]
    return keep


def simulate_events(seq: FrameSequence, cfg: SimConfig = SimConfig()) -> EventStream:
    """Simulate an event stream for ``seq``.

    Within each frame interval the log intensity is interpolated linearly in
    time and every threshold crossing gets the interpolated timestamp, floored
    to the microsecond and kept inside ``[t_k, t_{k+1})``. The result is sorted
    by ``(t, y, x, p)``.
    """
    if len(seq) < 2:
        raise ShapeError("need at least two frames to simulate events")
    shape = seq[0].shape[:2]
    if any(f.shape[:2] != shape for f in seq.frames):
        raise ShapeError("all frames must share one resolution")
    h, w = shape
    c = float(cfg.contrast)

    logs = [log_intensity(f, cfg.eps) for f in seq.frames]
    base = logs[0]
    count = np.zeros((h, w), dtype=np.int64)
    chunks = []
    for k in range(len(seq) - 1):
        t0 = int(seq.timestamps[k])
        dt = int(seq.timestamps[k + 1]) - t0
        n, ev = _crossings(logs[k], logs[k + 1], count, base, c, t0, dt)
        count += n.reshape(h, w)
        if ev is not None:
            chunks.append(ev)

    if not chunks:
        return EventStream(w, h)
    t = np.concatenate([ch[0] for ch in chunks])
    pix = np.concatenate([ch[1] for ch in chunks])
    p = np.concatenate([ch[2] for ch in chunks])
    if cfg.refractory_us > 0:
        keep = _apply_refractory(t, pix, cfg.refractory_us)
        t, pix, p = t[keep], pix[keep], p[keep]
    y, x = np.divmod(pix, w)
    order = np.lexsort((p, x, y, t))
    return EventStream(w, h, t[order], x[order], y[order], p[order], check=False)


@dataclass(frozen=True, eq=False)
class InterpInstance:
    """Two key frames, the ``skip`` ground-truth frames between them, and their events.

    ``timestamps`` holds all ``skip + 2`` frame times, key frames included;
    ``index`` is the position of ``frame_a`` in the source sequence.
    """

    frame_a: Frame
    frame_b: Frame
    intermediates: tuple
    events: EventStream
    skip: int
    timestamps: tuple
    index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "intermediates", tuple(self.intermediates))
        object.__setattr__(self, "timestamps", tuple(int(t) for t in self.timestamps))
        if self.skip < 1:
            raise ConfigError(f"skip must be >= 1, got {self.skip}")
        if len(self.intermediates) != self.skip:
            raise InstanceError(f"{len(self.intermediates)} intermediates for skip={self.skip}")
        if len(self.timestamps) != self.skip + 2:
            raise InstanceError(f"expected {self.skip + 2} timestamps, got {len(self.timestamps)}")
        if len(self.events) and (self.events.t[0] < self.t_a or self.events.t[-1] >= self.t_b):
            raise InstanceError("instance events fall outside [t_a, t_b)")

    @property
    def t_a(self) -> int:
        return self.timestamps[0]

    @property
    def t_b(self) -> int:
        return self.timestamps[-1]

    @property
    def steps(self) -> int:
        """Number of intervals between the key frames (``T`` in the weight schedule)."""
        return self.skip + 1


def build_instances(seq: FrameSequence, events: EventStream, skip: int) -> list[InterpInstance]:
    """Cut ``seq`` into consecutive skip-N instances.

    Key frames sit at ``i`` and ``i + skip + 1`` for ``i = 0, skip + 1, ...``;
    the frames in between are the ground truth.
    """
    if skip < 1:
        raise ConfigError(f"skip must be >= 1, got {skip}")
    if len(seq) < skip + 2:
        raise InstanceError(f"skip={skip} needs at least {skip + 2} frames, got {len(seq)}")
    stride = skip + 1
    out = []
    for i in range(0, len(seq) - stride, stride):
        j = i + stride
        ts = seq.timestamps[i : j + 1]
        out.append(
            InterpInstance(
                frame_a=seq[i],
                frame_b=seq[j],
                intermediates=seq.frames[i + 1 : j],
                events=slice_window(events, int(ts[0]), int(ts[-1])),
                skip=skip,
                timestamps=tuple(ts.tolist()),
                index=i,
            )
        )
    return out
