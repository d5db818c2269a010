"""Non-uniform grid sampling of event streams.

The (x, y, t) bounding box of the stream is bisected recursively into
octants until every leaf holds at most ``k`` events (or cannot be split
further because all of its events share one space-time cell); one
representative event is then drawn uniformly from each non-empty leaf.
k=1 therefore performs no compression on streams with distinct events.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .events import EventStream

__all__ = ["SamplingConfig", "nonuniform_sample"]


@dataclass(frozen=True)
class SamplingConfig:
    """Leaf capacity and RNG seed; the minimum leaf is one 1px x 1px x 1us cell."""

    k: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"sampling k must be >= 1, got {self.k}")


def nonuniform_sample(stream: EventStream, cfg: SamplingConfig) -> EventStream:
    """Compress a stream to one representative event per octree leaf.

    Bisection planes sit at the integer midpoint of each axis; events exactly
    on a plane go to the lower octant. Output events are a subset of the
    input, sorted by timestamp, and deterministic for a fixed seed.
    """
    if stream.n == 0:
        return EventStream.empty(stream.width, stream.height)
    rng = np.random.default_rng(cfg.seed)
    coords = np.stack([stream.x, stream.y, stream.t], axis=1)

    keep = []
    root = (np.arange(stream.n), coords.min(axis=0), coords.max(axis=0))
    stack = [root]
    while stack:
        idx, lo, hi = stack.pop()
        if idx.size <= cfg.k or np.all(lo == hi):
            keep.append(idx[int(rng.integers(idx.size))])
            continue
        mid = (lo + hi) // 2
        pts = coords[idx]
        code = (
            (pts[:, 0] > mid[0]).astype(np.int8)
            | ((pts[:, 1] > mid[1]).astype(np.int8) << 1)
            | ((pts[:, 2] > mid[2]).astype(np.int8) << 2)
        )
        # push octant 7 first so octant 0 is processed next (fixed draw order)
        for oct_code in range(7, -1, -1):
            sub = idx[code == oct_code]
            if sub.size == 0:
                continue
            sub_lo = lo.copy()
            sub_hi = hi.copy()
            for axis in range(3):
                if lo[axis] == hi[axis]:
                    continue
                if oct_code >> axis & 1:
                    sub_lo[axis] = mid[axis] + 1
                else:
                    sub_hi[axis] = mid[axis]
            stack.append((sub, sub_lo, sub_hi))

    sel = np.sort(np.asarray(keep, dtype=np.int64))
    return EventStream(
        stream.width,
        stream.height,
        stream.x[sel],
        stream.y[sel],
        stream.t[sel],
        stream.p[sel],
    )
