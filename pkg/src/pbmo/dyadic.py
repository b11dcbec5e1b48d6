"""Approximately parabolic dyadic grids for any exponent p > 1.

Generation ``i`` halves the spatial side ``i`` times and the temporal side
``k_i`` times, with ``k_i = round_half_up(i * p)``.  Boxes are addressed by
``(generation, (j_1, ..., j_n, m))`` and only materialised on request, so
deep generations cost nothing until they are looked at.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .geometry import Box, ParameterError, check_exponent


class GridInvariantError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExponentSequence:
    p: float
    k: tuple

    def exponent(self, i: int) -> int:
        return 0 if i == 0 else self.k[i - 1]

    def distortion(self, i: int) -> float:
        """``2**(p*i - k_i)``: dyadic temporal side over the parabolic one."""
        return 2.0 ** (self.p * i - self.exponent(i))


def exponent_sequence(p: float, depth: int) -> ExponentSequence:
    check_exponent(p)
    if depth < 1:
        raise ParameterError("depth must be at least 1")
    k = tuple(int(math.floor(i * p + 0.5)) for i in range(1, depth + 1))
    seq = ExponentSequence(float(p), k)
    prev = 0
    for i, ki in enumerate(k, start=1):
        if abs(p - ki / i) > 1.0 / i or ki < prev or not 0.5 < seq.distortion(i) < 2.0:
            raise GridInvariantError(f"exponent sequence broke at i={i}: k_i={ki}")
        prev = ki
    return seq


@dataclass(frozen=True)
class CoverBox:
    box: Box
    covered: tuple
    volume_ratio: float


class DyadicGrid:
    def __init__(self, root: Box, p: float, depth: int):
        side = root.widths[0]
        if any(abs(w - side) > 1e-12 * side for w in root.widths):
            raise ParameterError("root must have a cubical spatial section")
        self.root = root
        self.p = float(p)
        self.depth = int(depth)
        self.seq = exponent_sequence(p, depth)
        self.n = root.n
        self.side = side

    # -- addressing ---------------------------------------------------------

    def temporal_exponent(self, i: int) -> int:
        return self.seq.exponent(i)

    def shape(self, i: int) -> tuple:
        return (1 << i,) * self.n + (1 << self.temporal_exponent(i),)

    def count(self, i: int) -> int:
        return (1 << (i * self.n)) * (1 << self.temporal_exponent(i))

    def _check(self, box_id):
        i, idx = box_id
        if not 0 <= i <= self.depth:
            raise ParameterError(f"generation {i} outside 0..{self.depth}")
        if len(idx) != self.n + 1 or any(not 0 <= j < s for j, s in zip(idx, self.shape(i))):
            raise ParameterError(f"index {idx} outside generation {i}")

    def box(self, box_id) -> Box:
        self._check(box_id)
        i, idx = box_id
        r = self.root
        scale_x = float(1 << i)
        scale_t = float(1 << self.temporal_exponent(i))
        lo = tuple(r.x_lo[a] + self.side * (idx[a] / scale_x) for a in range(self.n))
        hi = tuple(r.x_lo[a] + self.side * ((idx[a] + 1) / scale_x) for a in range(self.n))
        T = r.duration
        return Box(lo, hi, r.t_lo + T * (idx[-1] / scale_t), r.t_lo + T * ((idx[-1] + 1) / scale_t))

    def exact_volume(self, i: int) -> Fraction:
        return (Fraction(self.side) / (1 << i)) ** self.n * Fraction(self.root.duration) / (1 << self.temporal_exponent(i))

    def parent(self, box_id):
        self._check(box_id)
        i, idx = box_id
        if i == 0:
            raise ParameterError("the root has no parent")
        drop = self.temporal_exponent(i) - self.temporal_exponent(i - 1)
        return (i - 1, tuple(j >> 1 for j in idx[:-1]) + (idx[-1] >> drop,))

    def children(self, box_id) -> list:
        self._check(box_id)
        i, idx = box_id
        if i >= self.depth:
            return []
        rise = self.temporal_exponent(i + 1) - self.temporal_exponent(i)
        out = []
        spatial = [()]
        for j in idx[:-1]:
            spatial = [s + (2 * j + b,) for s in spatial for b in (0, 1)]
        for s in spatial:
            for m in range(idx[-1] << rise, (idx[-1] + 1) << rise):
                out.append((i + 1, s + (m,)))
        return out

    def generation(self, i: int, limit: int = 1 << 16) -> list:
        if self.count(i) > limit:
            raise ParameterError(f"generation {i} has {self.count(i)} boxes, above limit {limit}")
        ids = [(0, (0,) * (self.n + 1))]
        for _ in range(i):
            ids = [c for b in ids for c in self.children(b)]
        return ids

    # -- geometry -----------------------------------------------------------

    def cover_box(self, box_id) -> CoverBox:
        """Parabolic box of spatial side ``2**-i * side`` covering the dyadic box.

        The temporal side is the larger of the dyadic side and
        ``2**(-p i)`` times the root duration, so containment always holds.
        """
        q = self.box(box_id)
        i = box_id[0]
        parabolic = self.root.duration * 2.0 ** (-self.p * i)
        tau = max(q.duration, parabolic)
        return CoverBox(Box(q.x_lo, q.x_hi, q.t_lo, q.t_lo + tau), box_id, tau / q.duration)

    def locate(self, i: int, x, t):
        """Id of the generation-``i`` box containing the point ``(x, t)``."""
        r = self.root
        idx = tuple(int(math.floor((x[a] - r.x_lo[a]) / self.side * (1 << i))) for a in range(self.n))
        m = int(math.floor((t - r.t_lo) / r.duration * (1 << self.temporal_exponent(i))))
        box_id = (i, idx + (m,))
        self._check(box_id)
        return box_id

    def dump_jsonl(self, path, max_generation: int | None = None, limit: int = 1 << 16) -> int:
        """One JSON object per box; returns the number of lines written."""
        top = self.depth if max_generation is None else max_generation
        lines = 0
        with open(path, "w") as fh:
            for i in range(top + 1):
                for b in self.generation(i, limit):
                    box = self.box(b)
                    rec = {
                        "generation": i,
                        "index": list(b[1]),
                        "spatial_lo": list(box.x_lo),
                        "spatial_hi": list(box.x_hi),
                        "t_lo": box.t_lo,
                        "t_hi": box.t_hi,
                        "parent_index": None if i == 0 else list(self.parent(b)[1]),
                    }
                    fh.write(json.dumps(rec) + "\n")
                    lines += 1
        return lines


def build_grid(root: Box, p: float, depth: int) -> DyadicGrid:
    return DyadicGrid(root, p, depth)


def parent(grid: DyadicGrid, box_id):
    return grid.parent(box_id)


def cover_box(grid: DyadicGrid, box_id) -> CoverBox:
    return grid.cover_box(box_id)
