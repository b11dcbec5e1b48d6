"""Sampled space-time functions on uniform cell-centred lattices.

Box sums are read off prefix-sum accumulators.  The accumulators hold the
samples as exact integers (every float64 is an integer multiple of a common
power of two), so a box sum is exact and a box average is the correctly
rounded quotient.  Two boxes with the same true mean therefore produce
bit-identical averages, which is what the duality and reduction checks rely on.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Callable

import numpy as np

from .geometry import Box, Cylinder, ParameterError, reflect_time

MIN_SAMPLES = 2
_SNAP = 1e-9

PARTS = ("full", "positive", "negative", "abs")


class InsufficientResolution(ValueError):
    def __init__(self, counts, msg=None):
        self.counts = tuple(int(c) for c in counts)
        super().__init__(msg or f"box holds too few lattice samples per axis: {self.counts}")


class SamplingError(ValueError):
    pass


class UndefinedSamples(ValueError):
    """A box touches lattice points carrying the undefined (NaN) marker."""


def snapped_ceil(s):
    """``ceil`` that treats values within 1e-9 of an integer as that integer."""
    r = np.rint(s)
    s = np.where(np.abs(s - r) < _SNAP, r, s)
    return np.ceil(s).astype(np.int64)


@dataclass(frozen=True)
class GridSpec:
    cylinder: Cylinder
    nx: tuple
    nt: int

    def __post_init__(self):
        nx = (int(self.nx),) if np.isscalar(self.nx) else tuple(int(a) for a in self.nx)
        object.__setattr__(self, "nx", nx)
        object.__setattr__(self, "nt", int(self.nt))
        if len(nx) != self.cylinder.n:
            raise ParameterError("nx must give one count per spatial axis")
        if min(nx) < 2 or self.nt < 2:
            raise ParameterError("every axis needs at least 2 lattice points")

    @classmethod
    def uniform(cls, x_range, t_range, nx, nt, n=1):
        """Same spatial range on every axis; ``nx`` is one count or one per axis."""
        lo, hi = x_range
        nx = (nx,) * n if np.isscalar(nx) else tuple(nx)
        if len(nx) != n:
            raise ParameterError(f"nx has {len(nx)} entries for {n} spatial axes")
        return cls(Box((lo,) * n, (hi,) * n, t_range[0], t_range[1]), nx, nt)

    @property
    def n(self) -> int:
        return len(self.nx)

    @property
    def shape(self) -> tuple:
        return self.nx + (self.nt,)

    @property
    def hx(self) -> tuple:
        c = self.cylinder
        return tuple((h - l) / m for l, h, m in zip(c.x_lo, c.x_hi, self.nx))

    @property
    def ht(self) -> float:
        return self.cylinder.duration / self.nt

    @property
    def origins(self) -> tuple:
        return self.cylinder.x_lo + (self.cylinder.t_lo,)

    @property
    def spacings(self) -> tuple:
        return self.hx + (self.ht,)

    def axis_centers(self, axis: int) -> np.ndarray:
        o, h, m = self.origins[axis], self.spacings[axis], self.shape[axis]
        return o + (np.arange(m) + 0.5) * h

    @property
    def t(self) -> np.ndarray:
        return self.axis_centers(self.n)

    def x(self, axis: int = 0) -> np.ndarray:
        return self.axis_centers(axis)

    def mesh(self):
        """Open mesh ``(x_1, ..., x_n, t)`` broadcastable to ``shape``."""
        return np.ix_(*[self.axis_centers(a) for a in range(self.n + 1)])

    def index_bounds(self, axis: int, lo, hi):
        """Half-open index range of the cell centres inside ``[lo, hi)``; vectorised."""
        o, h = self.origins[axis], self.spacings[axis]
        return snapped_ceil((lo - o) / h - 0.5), snapped_ceil((hi - o) / h - 0.5)

    def box_slices(self, b: Box):
        """Index bounds per axis (clamped to the lattice) for the samples in ``b``."""
        los = b.x_lo + (b.t_lo,)
        his = b.x_hi + (b.t_hi,)
        out = []
        for a in range(self.n + 1):
            i0, i1 = self.index_bounds(a, los[a], his[a])
            i0 = int(min(max(i0, 0), self.shape[a]))
            i1 = int(min(max(i1, 0), self.shape[a]))
            out.append((i0, max(i0, i1)))
        return tuple(out)

    def contains(self, b: Box) -> bool:
        tol = _SNAP * min(self.spacings)
        return self.cylinder.contains(b, tol=tol)

    def to_dict(self) -> dict:
        return {"nx": list(self.nx), "nt": self.nt, "cylinder": self.cylinder.to_dict()}


class ExactPrefix:
    """Prefix sums over an n-d float array, held as exact Python integers."""

    def __init__(self, values: np.ndarray):
        values = np.nan_to_num(np.asarray(values, dtype=np.float64), nan=0.0)
        mant, expo = np.frexp(values)
        mant = (mant * 2.0 ** 53).astype(np.int64)
        shift = expo.astype(np.int64) - 53
        nonzero = mant != 0
        self.scale = int(shift[nonzero].min()) if nonzero.any() else 0
        to_int = np.frompyfunc(lambda m, s: int(m) << int(s), 2, 1)
        ints = to_int(mant, np.where(nonzero, shift - self.scale, 0))
        table = np.zeros(tuple(s + 1 for s in values.shape), dtype=object)
        table[(slice(1, None),) * values.ndim] = ints
        self.ints = ints  # value = int * 2**scale, exactly
        for ax in range(values.ndim):
            table = np.cumsum(table, axis=ax, dtype=object)
        self.table = table
        self.ndim = values.ndim

    def sums(self, lows, highs):
        """Exact (scaled) sums over ``[lows[a], highs[a])``; arguments broadcast."""
        total = 0
        for corner in product((0, 1), repeat=self.ndim):
            idx = tuple(highs[a] if c else lows[a] for a, c in enumerate(corner))
            sign = (-1) ** (self.ndim - sum(corner))
            term = self.table[idx]
            total = total + term if sign > 0 else total - term
        return total

    def means(self, lows, highs, counts):
        """Correctly rounded means; ``counts`` broadcast against the sums."""
        s = self.sums(lows, highs)
        counts = np.asarray(counts, dtype=object)
        if self.scale >= 0:
            q = np.asarray(s * (1 << self.scale), dtype=object) / counts
        else:
            q = np.asarray(s, dtype=object) / (counts * (1 << -self.scale))
        return np.asarray(q, dtype=object).astype(np.float64)

    def to_int(self, x: float) -> int:
        """Exact integer form of ``x`` at this table's scale (``x`` must be representable)."""
        q = Fraction(x) / Fraction(2) ** self.scale
        if q.denominator != 1:
            raise ValueError(f"{x!r} is finer than the table scale")
        return q.numerator

    def exact_sum(self, lows, highs) -> Fraction:
        s = int(self.sums(tuple(lows), tuple(highs)))
        return Fraction(s) * Fraction(2) ** self.scale


@dataclass(frozen=True)
class BoxAverageReport:
    mean: float
    sample_count: int
    box: Box


@dataclass(frozen=True, eq=False)
class SampledField:
    grid: GridSpec
    values: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            raise ParameterError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if np.isinf(v).any():
            raise SamplingError("field values must be finite or NaN (undefined)")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @cached_property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)

    @cached_property
    def undefined_count(self) -> int:
        return int((~self.defined).sum())

    @cached_property
    def _undefined_prefix(self) -> np.ndarray:
        t = np.zeros(tuple(s + 1 for s in self.values.shape), dtype=np.int64)
        t[(slice(1, None),) * self.values.ndim] = ~self.defined
        for ax in range(t.ndim):
            t = np.cumsum(t, axis=ax)
        return t

    @cached_property
    def positive(self) -> np.ndarray:
        return np.where(self.values > 0, self.values, 0.0)

    @cached_property
    def negative(self) -> np.ndarray:
        return np.where(self.values < 0, -self.values, 0.0)

    def part_values(self, part: str) -> np.ndarray:
        if part == "full":
            return self.values
        if part == "positive":
            return self.positive
        if part == "negative":
            return self.negative
        if part == "abs":
            return np.abs(self.values)
        raise ParameterError(f"unknown part {part!r}")

    @cached_property
    def _accumulators(self) -> dict:
        return {}

    def accumulator(self, part: str = "full") -> ExactPrefix:
        acc = self._accumulators
        if part not in acc:
            acc[part] = ExactPrefix(self.part_values(part))
        return acc[part]

    def samples(self, b: Box, part: str = "full") -> np.ndarray:
        sl = self.grid.box_slices(b)
        return self.part_values(part)[tuple(slice(i0, i1) for i0, i1 in sl)].ravel()


def _checked_slices(f: SampledField, b: Box):
    sl = f.grid.box_slices(b)
    counts = [i1 - i0 for i0, i1 in sl]
    if min(counts) < MIN_SAMPLES:
        raise InsufficientResolution(counts)
    if f.undefined_count:
        window = f.values[tuple(slice(i0, i1) for i0, i1 in sl)]
        if np.isnan(window).any():
            raise UndefinedSamples(f"box {b} contains undefined samples")
    return sl, int(np.prod(counts))


def box_average(f: SampledField, b: Box, part: str = "full") -> BoxAverageReport:
    sl, count = _checked_slices(f, b)
    acc = f.accumulator(part)
    mean = acc.means(tuple(s[0] for s in sl), tuple(s[1] for s in sl), count)
    return BoxAverageReport(float(mean), count, b)


def box_sum(f: SampledField, b: Box, part: str = "full") -> Fraction:
    """Exact sum of the selected samples in ``b``."""
    sl, _ = _checked_slices(f, b)
    return f.accumulator(part).exact_sum([s[0] for s in sl], [s[1] for s in sl])


def pos_part(f: SampledField) -> SampledField:
    return SampledField(f.grid, f.positive)


def neg_part(f: SampledField) -> SampledField:
    return SampledField(f.grid, f.negative)


def negate(f: SampledField) -> SampledField:
    return SampledField(f.grid, -f.values)


def time_reverse(f: SampledField) -> SampledField:
    """Reflect ``t`` about the temporal midpoint of the cylinder."""
    return SampledField(f.grid, f.values[..., ::-1])


def reflect_box(f: SampledField, b: Box) -> Box:
    c = f.grid.cylinder
    return reflect_time(b, c.center_t)


def sample(evaluator: Callable, grid: GridSpec) -> SampledField:
    """Evaluate ``evaluator(x, t)`` at every cell centre.

    ``x`` is a tuple of open-mesh coordinate arrays (one per spatial axis) and
    ``t`` the matching time array; the result must broadcast to ``grid.shape``.
    """
    mesh = grid.mesh()
    with np.errstate(all="ignore"):
        vals = np.broadcast_to(np.asarray(evaluator(mesh[:-1], mesh[-1]), dtype=np.float64), grid.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        idx = np.argwhere(bad)[0]
        coords = [float(grid.axis_centers(a)[i]) for a, i in enumerate(idx)]
        raise SamplingError(f"non-finite value at (x, t) = {coords}; {int(bad.sum())} bad samples")
    return SampledField(grid, vals)


# -- file format ------------------------------------------------------------

def write_field_csv(f: SampledField, path) -> None:
    """Rows are flattened spatial indices (C order), columns are time indices."""
    g = f.grid
    c = g.cylinder
    header = "\n".join(
        [
            "pbmo-field 1",
            f"n={g.n}",
            "nx=" + ",".join(str(m) for m in g.nx),
            f"nt={g.nt}",
            "x_lo=" + ",".join(repr(a) for a in c.x_lo),
            "x_hi=" + ",".join(repr(a) for a in c.x_hi),
            f"t_lo={c.t_lo!r}",
            f"t_hi={c.t_hi!r}",
        ]
    )
    np.savetxt(path, f.values.reshape(-1, g.nt), fmt="%.17g", delimiter=",", header=header)


def read_field_csv(path) -> SampledField:
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if "=" in body:
                k, v = body.split("=", 1)
                meta[k.strip()] = v.strip()
    try:
        nx = tuple(int(a) for a in meta["nx"].split(","))
        nt = int(meta["nt"])
        cyl = Box(
            tuple(float(a) for a in meta["x_lo"].split(",")),
            tuple(float(a) for a in meta["x_hi"].split(",")),
            float(meta["t_lo"]),
            float(meta["t_hi"]),
        )
    except KeyError as exc:
        raise ValueError(f"field file {path} lacks header key {exc}") from None
    values = np.loadtxt(path, delimiter=",", ndmin=2).reshape(nx + (nt,))
    return SampledField(GridSpec(cyl, nx, nt), values)
