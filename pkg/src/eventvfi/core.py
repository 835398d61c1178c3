"""Event and frame value types shared by every other module.

Events are held column-wise (one numpy array per field) rather than as a list
of records, so every kernel downstream can work on whole streams at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import InvalidRangeError, ShapeError, ValidationError

__all__ = [
    "Event",
    "EventStream",
    "Frame",
    "FrameSequence",
    "ValidationReport",
    "validate_stream",
    "slice_window",
    "LUMA_WEIGHTS",
]

#: Rec.601 luma weights used wherever an RGB frame is reduced to intensity.
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

_U16_MAX = np.iinfo(np.uint16).max


class Event(NamedTuple):
    t: int
    x: int
    y: int
    p: int


def _frozen(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EventStream:
    """Immutable, time-sorted sequence of events on a ``width x height`` sensor.

    Parameters
    ----------
    width, height : int
        Sensor resolution.
    t : array_like
        Timestamps in integer microseconds.
    x, y : array_like
        Pixel column and row.
    p : array_like
        Polarity, +1 or -1.
    check : bool
        Run :func:`validate_stream` and raise :class:`ValidationError` on any
        violation. Only tests and readers that validate separately should
        pass ``False``.
    """

    width: int
    height: int
    t: np.ndarray = field(default_factory=lambda: np.empty(0, np.uint64))
    x: np.ndarray = field(default_factory=lambda: np.empty(0, np.uint16))
    y: np.ndarray = field(default_factory=lambda: np.empty(0, np.uint16))
    p: np.ndarray = field(default_factory=lambda: np.empty(0, np.int8))
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        if not (0 < self.width <= _U16_MAX and 0 < self.height <= _U16_MAX):
            raise ValidationError(f"sensor size {self.width}x{self.height} outside 1..{_U16_MAX}")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))

        t = np.asarray(self.t)
        if t.size and np.issubdtype(t.dtype, np.signedinteger) and t.min() < 0:
            raise ValidationError("negative timestamp")
        cols = {"t": t.astype(np.uint64, copy=False).ravel()}
        for name in ("x", "y"):
            v = np.asarray(getattr(self, name)).ravel()
            if v.size and (v.min() < 0 or v.max() > _U16_MAX):
                raise ValidationError(f"{name} coordinate not representable as u16")
            cols[name] = v.astype(np.uint16, copy=False)
        p = np.asarray(self.p).ravel()
        if p.size and (p.min() < -128 or p.max() > 127):
            raise ValidationError("polarity not representable as i8")
        cols["p"] = p.astype(np.int8, copy=False)

        n = cols["t"].size
        if any(c.size != n for c in cols.values()):
            raise ShapeError("event columns have different lengths")
        for name, col in cols.items():
            object.__setattr__(self, name, _frozen(np.array(col, copy=True)))

        if self.check:
            report = validate_stream(self)
            if not report.empty:
                raise ValidationError(f"invalid event stream: {report}")

    @classmethod
    def from_events(cls, events: Iterable, width: int, height: int) -> "EventStream":
        """Build a stream from ``(t, x, y, p)`` tuples, stably sorting by time."""
        rows = list(events)
        if not rows:
            return cls(width, height)
        t, x, y, p = (np.array(c) for c in zip(*rows))
        return cls.from_arrays(width, height, t, x, y, p)

    @classmethod
    def from_arrays(cls, width, height, t, x, y, p) -> "EventStream":
        """Like the constructor, but sorts by time first (stable)."""
        t = np.asarray(t)
        order = np.argsort(t, kind="stable")
        return cls(width, height, t[order], np.asarray(x)[order], np.asarray(y)[order], np.asarray(p)[order])

    def __len__(self):
        return self.t.size

    def __iter__(self) -> Iterator[Event]:
        for row in zip(self.t.tolist(), self.x.tolist(), self.y.tolist(), self.p.tolist()):
            yield Event(*row)

    def __eq__(self, other):
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.p, other.p)
        )

    __hash__ = None

    def __repr__(self):
        span = f", t=[{self.t[0]}..{self.t[-1]}]" if len(self) else ""
        return f"EventStream({self.width}x{self.height}, n={len(self)}{span})"

    def _subset(self, idx) -> "EventStream":
        return EventStream(self.width, self.height, self.t[idx], self.x[idx], self.y[idx], self.p[idx], check=False)

    def polarity_sum(self) -> int:
        return int(self.p.sum(dtype=np.int64))


@dataclass(frozen=True)
class ValidationReport:
    out_of_order: int = 0
    out_of_bounds: int = 0
    bad_polarity: int = 0

    @property
    def empty(self) -> bool:
        return self.out_of_order == 0 and self.out_of_bounds == 0 and self.bad_polarity == 0

    def __str__(self):
        if self.empty:
            return "ok"
        parts = [f"{k}={v}" for k, v in vars(self).items() if v]
        return ", ".join(parts)


def validate_stream(stream: EventStream) -> ValidationReport:
    """Count ordering, bounds and polarity violations.

    ``out_of_order`` is the number of adjacent pairs whose timestamps
    decrease, so it is nonzero exactly when the stream is not sorted.
    """
    t, x, y, p = stream.t, stream.x, stream.y, stream.p
    return ValidationReport(
        out_of_order=int(np.count_nonzero(t[1:] < t[:-1])),
        out_of_bounds=int(np.count_nonzero((x >= stream.width) | (y >= stream.height))),
        bad_polarity=int(np.count_nonzero((p != 1) & (p != -1))),
    )


def slice_window(stream: EventStream, t0: int, t1: int) -> EventStream:
    """Events with ``t0 <= t < t1``, order preserved."""
    if not t0 < t1:
        raise InvalidRangeError(f"empty time window [{t0}, {t1})")
    lo = np.searchsorted(stream.t, np.uint64(max(t0, 0)), side="left")
    hi = np.searchsorted(stream.t, np.uint64(max(t1, 0)), side="left")
    return stream._subset(slice(lo, hi))


@dataclass(frozen=True, eq=False)
class Frame:
    """Intensity image with values in [0, 1].

    ``pixels`` is ``(H, W)`` for grayscale or ``(H, W, 3)`` for RGB.
    """

    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64, copy=True)
        if px.ndim == 3 and px.shape[2] == 1:
            px = px[:, :, 0]
        if not (px.ndim == 2 or (px.ndim == 3 and px.shape[2] == 3)):
            raise ShapeError(f"frame must be HxW or HxWx3, got {px.shape}")
        if not np.all(np.isfinite(px)):
            raise ValidationError("frame contains non-finite pixels")
        if px.size and (px.min() < 0.0 or px.max() > 1.0):
            raise ValidationError(f"frame pixels outside [0, 1]: [{px.min()}, {px.max()}]")
        object.__setattr__(self, "pixels", _frozen(px))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else 3

    @property
    def shape(self):
        return self.pixels.shape

    def luminance(self) -> np.ndarray:
        if self.channels == 1:
            return self.pixels
        return self.pixels @ LUMA_WEIGHTS

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and np.array_equal(self.pixels, other.pixels)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class FrameSequence:
    frames: Sequence[Frame]
    timestamps: Sequence[int]

    def __post_init__(self):
        frames = tuple(f if isinstance(f, Frame) else Frame(f) for f in self.frames)
        ts = np.asarray(self.timestamps, dtype=np.int64).ravel()
        if len(frames) != ts.size:
            raise ShapeError(f"{len(frames)} frames but {ts.size} timestamps")
        if len(frames) < 2:
            raise ValidationError("a frame sequence needs at least two frames")
        if np.any(np.diff(ts) <= 0):
            raise ValidationError("frame timestamps must be strictly increasing")
        shape = frames[0].shape
        if any(f.shape != shape for f in frames):
            raise ShapeError("frames in a sequence must share one resolution")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "timestamps", _frozen(ts))

    def __len__(self):
        return len(self.frames)

    def __getitem__(self, i) -> Frame:
        return self.frames[i]

    @property
    def height(self) -> int:
        return self.frames[0].height

    @property
    def width(self) -> int:
        return self.frames[0].width

    def __eq__(self, other):
        if not isinstance(other, FrameSequence):
            return NotImplemented
        return np.array_equal(self.timestamps, other.timestamps) and all(
            a == b for a, b in zip(self.frames, other.frames)
        ) and len(self) == len(other)

    __hash__ = None
