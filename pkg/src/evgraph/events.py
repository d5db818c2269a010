"""Event-stream I/O: binary decoding, text serialization, windowing, synthesis.

The portable text format is the interchange used by every tool in this
package: a header line ``W H`` followed by one ``x y t p`` record per line,
with timestamps in integer microseconds and polarity +1/-1. Binary sensor
dumps are normalized into it.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, ParseError

__all__ = [
    "Event",
    "EventStream",
    "parse_nmnist_bin",
    "encode_nmnist_bin",
    "read_portable",
    "write_portable",
    "extract_window",
    "synth_moving_shape",
    "SHAPE_NAMES",
]

NMNIST_SENSOR = 34
_MAX_BIN_TIMESTAMP = (1 << 23) - 1


@dataclass(frozen=True)
class Event:
    """A single sensor spike: pixel address, microsecond timestamp, polarity."""

    x: int
    y: int
    t: int
    p: int


@dataclass(eq=False)
class EventStream:
    """An ordered sequence of events plus the sensor geometry.

    Events are stored as parallel int64 arrays sorted by timestamp.
    Instances are treated as immutable once constructed.
    """

    width: int
    height: int
    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        for name in ("x", "y", "t", "p"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.int64))
        n = self.x.shape[0]
        if not (self.y.shape[0] == self.t.shape[0] == self.p.shape[0] == n):
            raise DataError("event arrays have inconsistent lengths")
        if self.width <= 0 or self.height <= 0:
            raise DataError(f"invalid sensor geometry {self.width}x{self.height}")
        if n == 0:
            return
        if self.t.min() < 0:
            raise DataError("negative timestamp in event stream")
        if np.any(np.diff(self.t) < 0):
            raise DataError("events are not sorted by timestamp")
        if self.x.min() < 0 or self.x.max() >= self.width:
            raise DataError(f"x coordinate outside [0, {self.width})")
        if self.y.min() < 0 or self.y.max() >= self.height:
            raise DataError(f"y coordinate outside [0, {self.height})")
        if not np.all(np.abs(self.p) == 1):
            raise DataError("polarity must be +1 or -1")

    @classmethod
    def from_arrays(cls, width, height, x, y, t, p, sort=True):
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        t = np.asarray(t, dtype=np.int64)
        p = np.asarray(p, dtype=np.int64)
        if sort and t.size and np.any(np.diff(t) < 0):
            order = np.argsort(t, kind="stable")
            x, y, t, p = x[order], y[order], t[order], p[order]
        return cls(width, height, x, y, t, p)

    @classmethod
    def empty(cls, width, height):
        z = np.zeros(0, dtype=np.int64)
        return cls(width, height, z, z.copy(), z.copy(), z.copy())

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        for i in range(self.n):
            yield Event(int(self.x[i]), int(self.y[i]), int(self.t[i]), int(self.p[i]))

    def __eq__(self, other):
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.n == other.n
            and bool(np.array_equal(self.x, other.x))
            and bool(np.array_equal(self.y, other.y))
            and bool(np.array_equal(self.t, other.t))
            and bool(np.array_equal(self.p, other.p))
        )

    def stable_id(self) -> int:
        """Content hash of the stream, independent of where it was loaded from."""
        h = hashlib.blake2b(digest_size=8)
        h.update(np.int64([self.width, self.height]).tobytes())
        for arr in (self.x, self.y, self.t, self.p):
            h.update(arr.tobytes())
        return int.from_bytes(h.digest(), "little")


def parse_nmnist_bin(raw: bytes) -> EventStream:
    """Decode the 5-byte-per-event binary layout used by 34x34 saccade datasets.

    Record layout: byte0 = x, byte1 = y, byte2 bit 7 = polarity
    (1 -> +1, 0 -> -1), and the remaining 23 bits (byte2 bits 6..0,
    byte3, byte4, big-endian) = timestamp in microseconds.
    """
    buf = np.frombuffer(bytes(raw), dtype=np.uint8)
    if buf.size % 5 != 0:
        raise ParseError(f"binary event record truncated: {buf.size} bytes is not a multiple of 5")
    if buf.size == 0:
        return EventStream.empty(NMNIST_SENSOR, NMNIST_SENSOR)
    rec = buf.reshape(-1, 5).astype(np.int64)
    x, y = rec[:, 0], rec[:, 1]
    if x.max() >= NMNIST_SENSOR or y.max() >= NMNIST_SENSOR:
        bad = int(np.argmax((x >= NMNIST_SENSOR) | (y >= NMNIST_SENSOR)))
        raise DataError(
            f"record {bad}: pixel ({int(x[bad])}, {int(y[bad])}) outside "
            f"{NMNIST_SENSOR}x{NMNIST_SENSOR} sensor"
        )
    p = np.where(rec[:, 2] & 0x80, 1, -1)
    t = ((rec[:, 2] & 0x7F) << 16) | (rec[:, 3] << 8) | rec[:, 4]
    return EventStream.from_arrays(NMNIST_SENSOR, NMNIST_SENSOR, x, y, t, p, sort=True)


def encode_nmnist_bin(stream: EventStream) -> bytes:
    """Inverse of :func:`parse_nmnist_bin`; mainly used to build fixtures."""
    if stream.width > 256 or stream.height > 256:
        raise DataError("sensor too large for 1-byte pixel addresses")
    if stream.n and stream.t.max() > _MAX_BIN_TIMESTAMP:
        raise DataError("timestamp does not fit in 23 bits")
    rec = np.empty((stream.n, 5), dtype=np.uint8)
    rec[:, 0] = stream.x
    rec[:, 1] = stream.y
    rec[:, 2] = ((stream.p > 0).astype(np.int64) << 7) | ((stream.t >> 16) & 0x7F)
    rec[:, 3] = (stream.t >> 8) & 0xFF
    rec[:, 4] = stream.t & 0xFF
    return rec.tobytes()


def _diagnose_portable(text: str) -> None:
    """Slow per-line scan used only to attach a line number to a parse failure."""
    width = height = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if width is None:
            if len(tokens) != 2:
                raise ParseError(f"line {lineno}: header must be 'W H'")
            try:
                width, height = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise ParseError(f"line {lineno}: header must contain two integers") from None
            if width <= 0 or height <= 0:
                raise ParseError(f"line {lineno}: sensor geometry must be positive")
            continue
        if len(tokens) != 4:
            raise ParseError(f"line {lineno}: expected 'x y t p', got {len(tokens)} fields")
        try:
            x, y, t, p = (int(tok) for tok in tokens)
        except ValueError:
            raise ParseError(f"line {lineno}: non-integer field") from None
        if p not in (1, -1):
            raise ParseError(f"line {lineno}: polarity must be 1 or -1, got {p}")
        if t < 0:
            raise ParseError(f"line {lineno}: negative timestamp {t}")
        if not (0 <= x < width):
            raise ParseError(f"line {lineno}: x={x} outside [0, {width})")
        if not (0 <= y < height):
            raise ParseError(f"line {lineno}: y={y} outside [0, {height})")
    if width is None:
        raise ParseError("line 1: missing 'W H' header")


def read_portable(path) -> EventStream:
    """Read a portable text event file; records are re-sorted by timestamp."""
    text = Path(path).read_text(encoding="utf-8")
    tokens = text.split()
    if len(tokens) < 2 or (len(tokens) - 2) % 4 != 0:
        _diagnose_portable(text)
    try:
        values = np.array(tokens, dtype=np.int64)
    except ValueError:
        _diagnose_portable(text)
        raise  # unreachable; _diagnose always raises on bad input
    width, height = int(values[0]), int(values[1])
    rec = values[2:].reshape(-1, 4)
    try:
        return EventStream.from_arrays(
            width, height, rec[:, 0], rec[:, 1], rec[:, 2], rec[:, 3], sort=True
        )
    except DataError:
        _diagnose_portable(text)
        raise


def write_portable(stream: EventStream, path) -> None:
    lines = [f"{stream.width} {stream.height}"]
    lines.extend(
        f"{x} {y} {t} {p}"
        for x, y, t, p in zip(
            stream.x.tolist(), stream.y.tolist(), stream.t.tolist(), stream.p.tolist()
        )
    )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def extract_window(stream: EventStream, start: int, length: int) -> EventStream:
    """Keep events with start <= t < start+length, re-based to t=0 at the window start."""
    if length <= 0:
        raise ConfigError(f"window length must be positive, got {length}")
    lo = int(np.searchsorted(stream.t, start, side="left"))
    hi = int(np.searchsorted(stream.t, start + length, side="left"))
    return EventStream(
        stream.width,
        stream.height,
        stream.x[lo:hi].copy(),
        stream.y[lo:hi].copy(),
        stream.t[lo:hi] - start,
        stream.p[lo:hi].copy(),
    )


# --- synthetic moving-shape generator ---------------------------------------

SHAPE_NAMES = ("bar", "circle", "cross", "ring", "diamond")

_STEP_US = 1000  # mask update interval for the motion simulation
_ORBIT_PERIOD_US = 300_000.0


def _shape_mask(shape: str, cx: float, cy: float, width: int, height: int) -> np.ndarray:
    yy, xx = np.ogrid[:height, :width]
    dx = xx - cx
    dy = yy - cy
    if shape == "bar":
        return (np.abs(dx) <= 2) & (np.abs(dy) <= 8)
    if shape == "circle":
        return dx * dx + dy * dy <= 49
    if shape == "cross":
        return ((np.abs(dx) <= 2) & (np.abs(dy) <= 8)) | ((np.abs(dy) <= 2) & (np.abs(dx) <= 8))
    if shape == "ring":
        r2 = dx * dx + dy * dy
        return (r2 >= 16) & (r2 <= 49)
    if shape == "diamond":
        return np.abs(dx) + np.abs(dy) <= 8
    raise ConfigError(f"unknown shape '{shape}'")


def synth_moving_shape(
    class_id: int,
    seed: int,
    duration: int,
    width: int,
    height: int,
    rate: float,
    noise_fraction: float = 0.05,
) -> EventStream:
    """Generate events from a contour shape orbiting the sensor center.

    Each class is one shape from SHAPE_NAMES moving on a circular path whose
    phase and direction are drawn from the seeded RNG. Events are emitted
    where the shape mask changes between simulation steps: pixels that turn
    on yield +1 events, pixels that turn off yield -1 events. ``rate`` is the
    target event count per second before noise; a ``noise_fraction`` share of
    uniform background events is added on top. Deterministic for fixed
    (class_id, seed) and parameters.
    """
    if not 0 <= class_id < len(SHAPE_NAMES):
        raise ConfigError(f"class_id must be in [0, {len(SHAPE_NAMES)}), got {class_id}")
    if duration <= 0 or rate <= 0:
        return EventStream.empty(width, height)

    shape = SHAPE_NAMES[class_id]
    rng = np.random.default_rng([seed, class_id])
    orbit = min(width, height) / 6.0
    phase = rng.uniform(0.0, 2.0 * np.pi)
    direction = 1.0 if rng.integers(2) else -1.0
    omega = direction * 2.0 * np.pi / _ORBIT_PERIOD_US

    n_steps = int(np.ceil(duration / _STEP_US))
    prev = np.zeros((height, width), dtype=bool)
    xs, ys, ps, steps = [], [], [], []
    for s in range(n_steps):
        t_center = s * _STEP_US
        ang = phase + omega * t_center
        cx = width / 2.0 + orbit * np.cos(ang)
        cy = height / 2.0 + orbit * np.sin(ang)
        mask = _shape_mask(shape, cx, cy, width, height)
        for changed, pol in ((mask & ~prev, 1), (prev & ~mask, -1)):
            yy, xx = np.nonzero(changed)
            if xx.size:
                xs.append(xx)
                ys.append(yy)
                ps.append(np.full(xx.size, pol, dtype=np.int64))
                steps.append(np.full(xx.size, s, dtype=np.int64))
        prev = mask

    target = int(round(rate * duration / 1e6))
    if target == 0 or not xs:
        return EventStream.empty(width, height)
    cx_all = np.concatenate(xs)
    cy_all = np.concatenate(ys)
    cp_all = np.concatenate(ps)
    cs_all = np.concatenate(steps)
    n_cand = cx_all.size
    if n_cand >= target:
        sel = np.sort(rng.choice(n_cand, size=target, replace=False))
    else:
        extra = np.sort(rng.choice(n_cand, size=target - n_cand, replace=True))
        sel = np.concatenate([np.arange(n_cand), extra])
    ex = cx_all[sel]
    ey = cy_all[sel]
    ep = cp_all[sel]
    et = cs_all[sel] * _STEP_US + rng.integers(0, _STEP_US, size=sel.size)

    n_noise = int(round(target * noise_fraction))
    if n_noise:
        ex = np.concatenate([ex, rng.integers(0, width, size=n_noise)])
        ey = np.concatenate([ey, rng.integers(0, height, size=n_noise)])
        et = np.concatenate([et, rng.integers(0, duration, size=n_noise)])
        ep = np.concatenate([ep, rng.choice(np.array([-1, 1]), size=n_noise)])

    et = np.minimum(et, duration - 1)
    order = np.lexsort((ep, ey, ex, et))
    return EventStream(width, height, ex[order], ey[order], et[order], ep[order])
