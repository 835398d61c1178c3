"""Readers and writers for events, frame directories and flat tensors.

Formats
-------
``.txt`` events
    One event per line, ``t x y p`` separated by whitespace. Lines starting
    with ``#`` are comments. The writer emits a ``# width=W height=H`` comment
    that the reader picks up when no explicit size is passed.

``.evt`` events (little-endian)
    18-byte header ``magic "EVT0" | version u16 | width u16 | height u16 |
    count u64`` followed by ``count`` 14-byte records
    ``t u64 | x u16 | y u16 | p i8 | pad u8``.

Frame directory
    ``frame_000000.png``, ``frame_000001.png``, ... (8-bit grayscale or RGB)
    plus ``timestamps.txt`` holding one integer microsecond timestamp per line.

``.tns`` tensors (little-endian)
    ``magic "TNS0" | dtype u8 | ndim u8 | dims u64 * ndim`` followed by the
    row-major payload. dtype codes: 1 = float64, 2 = float32, 3 = uint8.

Every writer goes through :func:`atomic_write`, so an interrupted run never
leaves a truncated file behind.
"""

from __future__ import annotations

import contextlib
import os
import re
import struct
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from .core import EventStream, Frame, FrameSequence
from .errors import ConfigError, CorruptionError, FormatError, ManifestError, ParseError, ValidationError

__all__ = [
    "EVT_MAGIC",
    "EVT_VERSION",
    "EVT_HEADER",
    "EVT_RECORD",
    "atomic_write",
    "read_events_text",
    "write_events_text",
    "read_events_binary",
    "write_events_binary",
    "read_events",
    "write_events",
    "read_frames",
    "write_frames",
    "read_tensor",
    "write_tensor",
]

EVT_MAGIC = b"EVT0"
EVT_VERSION = 1
EVT_HEADER = struct.Struct("<4sHHHQ")
EVT_RECORD = np.dtype([("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "i1"), ("pad", "u1")])
assert EVT_HEADER.size == 18 and EVT_RECORD.itemsize == 14

TNS_MAGIC = b"TNS0"
_TNS_CODES = {1: np.dtype("<f8"), 2: np.dtype("<f4"), 3: np.dtype("u1")}

_SIZE_RE = re.compile(r"width\s*=\s*(\d+)\s+height\s*=\s*(\d+)")


@contextlib.contextmanager
def atomic_write(path, mode="wb"):
    """Write to a temp file next to ``path`` and rename it into place on success."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, mode) as fh:
            yield fh
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# text events


def read_events_text(path, width: int | None = None, height: int | None = None) -> EventStream:
    """Parse a ``t x y p`` text file.

    Polarity may be written as ``0/1`` or ``-1/+1``. The sensor size comes
    from the arguments, else from a ``# width=W height=H`` comment, else it is
    inferred as one past the largest coordinate.
    """
    path = Path(path)
    rows = []
    header_size = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                m = _SIZE_RE.search(s)
                if m and header_size is None:
                    header_size = (int(m.group(1)), int(m.group(2)))
                continue
            parts = s.split()
            if len(parts) != 4:
                raise ParseError(f"expected 4 fields 't x y p', got {len(parts)}", path, lineno)
            try:
                t, x, y, p = (int(v) for v in parts)
            except ValueError:
                raise ParseError(f"non-integer field in {s!r}", path, lineno) from None
            if p == 0:
                p = -1
            if p not in (1, -1) or t < 0 or x < 0 or y < 0:
                raise ParseError(f"invalid value in {s!r}", path, lineno)
            rows.append((t, x, y, p))

    if width is None or height is None:
        if header_size is not None:
            width = header_size[0] if width is None else width
            height = header_size[1] if height is None else height
        else:
            width = width or (max((r[1] for r in rows), default=0) + 1)
            height = height or (max((r[2] for r in rows), default=0) + 1)

    if not rows:
        return EventStream(width, height)
    arr = np.array(rows, dtype=np.int64)
    return EventStream.from_arrays(width, height, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])


def write_events_text(stream: EventStream, path) -> None:
    with atomic_write(path, "w") as fh:
        fh.write(f"# t x y p  width={stream.width} height={stream.height}\n")
        rows = zip(stream.t.tolist(), stream.x.tolist(), stream.y.tolist(), stream.p.tolist())
        fh.writelines(f"{t} {x} {y} {p}\n" for t, x, y, p in rows)


# ---------------------------------------------------------------------------
# binary events


def write_events_binary(stream: EventStream, path) -> None:
    rec = np.zeros(len(stream), dtype=EVT_RECORD)
    rec["t"], rec["x"], rec["y"], rec["p"] = stream.t, stream.x, stream.y, stream.p
    with atomic_write(path, "wb") as fh:
        fh.write(EVT_HEADER.pack(EVT_MAGIC, EVT_VERSION, stream.width, stream.height, len(stream)))
        fh.write(rec.tobytes())


def read_events_binary(path) -> EventStream:
    """Read an ``.evt`` file. Bytes past the declared record count are ignored."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(EVT_HEADER.size)
        if len(head) < EVT_HEADER.size:
            raise CorruptionError(
                f"{path}: header truncated, expected {EVT_HEADER.size} bytes, got {len(head)}",
                expected=EVT_HEADER.size,
                actual=len(head),
            )
        magic, version, width, height, count = EVT_HEADER.unpack(head)
        if magic != EVT_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected {EVT_MAGIC!r}")
        if version != EVT_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        expected = count * EVT_RECORD.itemsize
        payload = fh.read(expected)
    if len(payload) != expected:
        raise CorruptionError(
            f"{path}: record region truncated, expected {expected} bytes, got {len(payload)}",
            expected=expected,
            actual=len(payload),
        )
    rec = np.frombuffer(payload, dtype=EVT_RECORD, count=count)
    return EventStream(width, height, rec["t"], rec["x"], rec["y"], rec["p"])


def read_events(path, **kwargs) -> EventStream:
    """Dispatch on suffix: ``.txt`` is text, anything else binary."""
    if Path(path).suffix.lower() == ".txt":
        return read_events_text(path, **kwargs)
    return read_events_binary(path)


def write_events(stream: EventStream, path) -> None:
    if Path(path).suffix.lower() == ".txt":
        write_events_text(stream, path)
    else:
        write_events_binary(stream, path)


# ---------------------------------------------------------------------------
# frames


def _to_u8(pixels):
    return np.rint(np.asarray(pixels) * 255.0).astype(np.uint8)


def write_frames(seq: FrameSequence, directory) -> None:
    """Write 8-bit PNGs and ``timestamps.txt``. Pixels are rounded to k/255."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(seq.frames):
        img = Image.fromarray(_to_u8(frame.pixels), mode="L" if frame.channels == 1 else "RGB")
        with atomic_write(directory / f"frame_{i:06d}.png", "wb") as fh:
            img.save(fh, format="PNG")
    with atomic_write(directory / "timestamps.txt", "w") as fh:
        fh.writelines(f"{int(t)}\n" for t in seq.timestamps)


def read_frames(directory) -> FrameSequence:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"frame directory not found: {directory}")
    names = sorted(p for p in directory.iterdir() if re.fullmatch(r"frame_\d{6}\.(png|tif|tiff|bmp)", p.name))
    ts_path = directory / "timestamps.txt"
    if not ts_path.exists():
        raise ManifestError(f"{ts_path}: missing timestamps sidecar")
    timestamps = []
    for lineno, line in enumerate(ts_path.read_text(encoding="utf-8").splitlines(), start=1):
        if line.strip():
            try:
                timestamps.append(int(line))
            except ValueError:
                raise ParseError(f"bad timestamp {line!r}", ts_path, lineno) from None
    if len(timestamps) < len(names):
        raise ManifestError(f"{ts_path}: {len(names)} frames but only {len(timestamps)} timestamps")
    if len(timestamps) > len(names):
        raise ManifestError(f"{ts_path}: {len(timestamps)} timestamps but only {len(names)} frames")
    for i, name in enumerate(names):
        if name.name != f"frame_{i:06d}{name.suffix}":
            raise ManifestError(f"{directory}: frame index gap at {name.name}")
    if any(b <= a for a, b in zip(timestamps, timestamps[1:])):
        raise ManifestError(f"{ts_path}: timestamps are not strictly increasing")

    frames = []
    for name in names:
        with Image.open(name) as img:
            if img.mode not in ("L", "RGB"):
                img = img.convert("RGB" if "A" in img.mode or img.mode == "P" else "L")
            arr = np.asarray(img)
        if arr.dtype != np.uint8:
            raise FormatError(f"{name}: only 8-bit images are supported, got {arr.dtype}")
        frames.append(Frame(arr / 255.0))
    try:
        return FrameSequence(frames, timestamps)
    except ValidationError as exc:
        raise ManifestError(f"{directory}: {exc}") from exc


# ---------------------------------------------------------------------------
# flat tensors


def write_tensor(array, path) -> None:
    a = np.asarray(array)
    if a.dtype == np.bool_:
        a = a.astype(np.uint8)
    code = next((c for c, dt in _TNS_CODES.items() if a.dtype == dt), None)
    if code is None:
        raise ConfigError(f"unsupported tensor dtype {a.dtype}")
    a = np.ascontiguousarray(a, dtype=_TNS_CODES[code])
    with atomic_write(path, "wb") as fh:
        fh.write(struct.pack("<4sBB", TNS_MAGIC, code, a.ndim))
        fh.write(struct.pack(f"<{a.ndim}Q", *a.shape))
        fh.write(a.tobytes())


def read_tensor(path) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 6 or data[:4] != TNS_MAGIC:
        raise FormatError(f"{path}: not a tensor file")
    code, ndim = data[4], data[5]
    if code not in _TNS_CODES:
        raise FormatError(f"{path}: unknown dtype code {code}")
    off = 6 + 8 * ndim
    if len(data) < off:
        raise CorruptionError(f"{path}: truncated dims header", expected=off, actual=len(data))
    shape = struct.unpack_from(f"<{ndim}Q", data, 6)
    dtype = _TNS_CODES[code]
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if len(data) - off < expected:
        raise CorruptionError(
            f"{path}: payload truncated, expected {expected} bytes, got {len(data) - off}",
            expected=expected,
            actual=len(data) - off,
        )
    return np.frombuffer(data, dtype=dtype, count=expected // dtype.itemsize, offset=off).reshape(shape).copy()
