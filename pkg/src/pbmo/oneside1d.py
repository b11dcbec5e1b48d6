"""One-sided tools on the real line: maximal function, one-sided BMO norms,
the overlapping-interval iteration and a forward-looking CZ decomposition.

Signals live on a uniform cell-centred grid.  Interval families are aligned
with the cells: ``I`` is the run of cells ``[s, s + m)`` and
``I+ = [s + m, s + 2m)``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import cached_property

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .field import ExactPrefix, SamplingError, snapped_ceil
from .geometry import ParameterError
from .maximal import ConfigurationError
from .seminorms import SeminormEstimate, double_oscillation_samples

# -- signals ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Signal:
    x_lo: float
    x_hi: float
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 2:
            raise ParameterError("a signal needs at least two samples")
        if not self.x_hi > self.x_lo:
            raise ParameterError("empty signal domain")
        if np.isinf(v).any():
            raise SamplingError("signal has infinite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, fn, x_lo: float, x_hi: float, n: int) -> "Signal":
        dx = (x_hi - x_lo) / n
        x = x_lo + (np.arange(n) + 0.5) * dx
        v = np.asarray(fn(x), dtype=np.float64)
        if not np.isfinite(v).all():
            bad = x[~np.isfinite(v)][0]
            raise SamplingError(f"evaluator is not finite at x={bad!r}")
        return cls(x_lo, x_hi, v)

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.size

    @property
    def x(self) -> np.ndarray:
        return self.x_lo + (np.arange(self.size) + 0.5) * self.dx

    @cached_property
    def prefix(self) -> ExactPrefix:
        return ExactPrefix(self.values)

    @cached_property
    def prefix_positive(self) -> ExactPrefix:
        return ExactPrefix(np.maximum(self.values, 0.0))

    @cached_property
    def prefix_squares(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.values ** 2)])

    def mean_cells(self, lo, hi) -> np.ndarray:
        """Correctly rounded means over the cell runs ``[lo, hi)``."""
        lo = np.asarray(lo)
        hi = np.asarray(hi)
        return self.prefix.means((lo,), (hi,), hi - lo)

    def integral(self, a: float, b: float) -> float:
        """Integral of the piecewise-constant signal over ``(a, b)``."""
        if a >= b:
            return 0.0
        s = (np.array([a, b]) - self.x_lo) / self.dx
        s = np.clip(s, 0.0, self.size)
        i0, i1 = int(math.floor(s[0])), int(math.floor(s[1]))
        if i0 == i1:
            return (s[1] - s[0]) * self.dx * (self.values[i0] if i0 < self.size else 0.0)
        total = (i0 + 1 - s[0]) * self.values[i0]
        total += math.fsum(self.values[i0 + 1 : i1].tolist())
        if i1 < self.size:
            total += (s[1] - i1) * self.values[i1]
        return total * self.dx

    def mean_interval(self, a: float, b: float) -> float:
        return self.integral(a, b) / (b - a)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "u"])
            for x, u in zip(self.x, self.values):
                w.writerow([repr(float(x)), repr(float(u))])


# -- one-sided maximal function --------------------------------------------------


def window_cells(h: float, dx: float) -> int:
    """Number of cell centres strictly inside ``(x - h, x)`` for a centre ``x``."""
    return max(0, int(snapped_ceil(h / dx)) - 1)


def os_maximal(u: Signal, ladder) -> Signal:
    """``U(x) = max_h mean of u over centres in (x - h, x)``; NaN where no window fits."""
    ladder = list(ladder)
    if not ladder:
        raise ConfigurationError("empty ladder")
    n = u.size
    idx = np.arange(n)
    out = np.full(n, np.nan)
    used = False
    for h in ladder:
        m = window_cells(h, u.dx)
        if m < 1:
            continue
        ok = idx - m >= 0
        if not ok.any():
            continue
        used = True
        lo = np.clip(idx - m, 0, n)
        means = u.prefix.means((lo,), (idx,), np.full(n, m))
        out = np.fmax(out, np.where(ok, means, np.nan))
    if not used:
        raise ConfigurationError("no window of the ladder fits on this signal")
    return Signal(u.x_lo, u.x_hi, out)


def defined_part(u: Signal):
    """The longest suffix without undefined samples, as a signal, plus its offset."""
    bad = np.nonzero(np.isnan(u.values))[0]
    start = 0 if bad.size == 0 else int(bad[-1]) + 1
    if u.size - start < 2:
        raise ConfigurationError("maximal function is undefined almost everywhere")
    return Signal(u.x_lo + start * u.dx, u.x_hi, u.values[start:]), start


# -- interval families and norms ---------------------------------------------------


@dataclass(frozen=True)
class IntervalFamily:
    """Cell-aligned intervals of ``lengths`` cells starting every ``stride`` cells."""

    lengths: tuple
    stride: int = 1

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(int(m) for m in self.lengths))
        if not self.lengths or min(self.lengths) < 1 or self.stride < 1:
            raise ConfigurationError("interval family needs positive lengths and stride")

    @classmethod
    def dyadic(cls, n: int, min_cells: int = 2, stride: int = 1) -> "IntervalFamily":
        lengths, m = [], min_cells
        while 2 * m <= n:
            lengths.append(m)
            m *= 2
        return cls(tuple(lengths), stride)

    def starts(self, m: int, n: int) -> np.ndarray:
        return np.arange(0, n - 2 * m + 1, self.stride)

    def to_dict(self) -> dict:
        return {"lengths": list(self.lengths), "stride": self.stride}


def _witness(u: Signal, s: int, m: int) -> dict:
    return {"start": u.x_lo + s * u.dx, "length": m * u.dx, "cells": [int(s), int(s + m)]}


def _check_defined(u: Signal):
    if np.isnan(u.values).any():
        raise ConfigurationError("signal has undefined samples; restrict it with defined_part first")


def os_bmo_norm(u: Signal, fam: IntervalFamily) -> SeminormEstimate:
    """``sup_I mean_I (u - mean_{I+} u)+`` with the witness interval in ``extras``."""
    _check_defined(u)
    best = None
    count = 0
    for m in fam.lengths:
        s = fam.starts(m, u.size)
        if s.size == 0:
            continue
        count += s.size
        plus = u.mean_cells(s + m, s + 2 * m)
        windows = sliding_window_view(u.values, m)[s]
        vals = np.mean(np.maximum(windows - plus[:, None], 0.0), axis=1)
        i = int(np.argmax(vals))
        if best is None or vals[i] > best[0]:
            best = (float(vals[i]), int(s[i]), m, float(plus[i]))
    if best is None:
        raise ConfigurationError("no interval of the family fits on this signal")
    value, s, m, c = best
    return SeminormEstimate(value, None, c, count, 0, {"interval": _witness(u, s, m)})


def os_double_norm(u: Signal, fam: IntervalFamily) -> SeminormEstimate:
    """``sup_I |I|^-2 sum over I x I+ of (u(t1) - u(t2))+`` by the sorted algorithm."""
    _check_defined(u)
    best = None
    count = 0
    v = u.values
    for m in fam.lengths:
        for s in fam.starts(m, u.size):
            count += 1
            val = double_oscillation_samples(v[s : s + m], v[s + m : s + 2 * m])
            if best is None or val > best[0]:
                best = (val, int(s), m)
    if best is None:
        raise ConfigurationError("no interval of the family fits on this signal")
    value, s, m = best
    return SeminormEstimate(value, None, float("nan"), count, 0, {"interval": _witness(u, s, m)})


# -- overlapping interval iteration ----------------------------------------------


@dataclass
class IntervalChainTrace:
    x: float
    y: float
    h: float
    d: float
    k: int
    intervals: list
    pairs: list = dc_field(default_factory=list)
    theta: list = dc_field(default_factory=list)
    branches: list = dc_field(default_factory=list)
    terminated_by: str = ""
    steps: list = dc_field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "y": self.y,
            "h": self.h,
            "d": self.d,
            "k": self.k,
            "intervals": [list(i) for i in self.intervals],
            "pairs": [[list(a), list(b)] for a, b in self.pairs],
            "theta": list(self.theta),
            "branches": list(self.branches),
            "terminated_by": self.terminated_by,
            "steps": self.steps,
        }


def steps_for(h: float, d: float) -> int:
    """Positive ``k`` with ``x - k d`` in ``[x - h, y - h]``; ``k = 1`` exactly when ``d >= h/2``."""
    return max(1, int(snapped_ceil(h / d - 1.0)))


def _classify(h: float, d: float) -> str:
    # same snapping as steps_for, so case_k always has k >= 2 and makes progress
    ratio = snapped_ceil(h / d)
    if ratio <= 1:
        return "disjoint"
    if ratio <= 2:
        return "case_k1"
    return "case_k"


def _pos(a: float) -> float:
    return a if a > 0 else 0.0


def _step_disjoint(u, left, right):
    return None


def _step_k1(u, left, right):
    """Bisect both intervals; each half pairs with a later disjoint half."""
    (a, b), (c, e) = left, right
    h = b - a
    if u is None:
        return None
    lhs = h * _pos(u.mean_interval(a, b) - u.mean_interval(c, e))
    mid_l, mid_r = a + h / 2, c + h / 2
    rhs = h / 2 * (
        _pos(u.mean_interval(a, mid_l) - u.mean_interval(c, mid_r))
        + _pos(u.mean_interval(mid_l, b) - u.mean_interval(mid_r, e))
    )
    return {"lhs": lhs, "rhs": rhs}


def _step_k(u, left, right):
    (a, b), (c, e) = left, right
    h, d = b - a, c - a
    k = steps_for(h, d)
    x = b
    new_left = (a, x - (k - 1) * d)
    new_right = (c, x - (k - 2) * d)
    info = {"k": k, "next": (new_left, new_right)}
    if u is not None:
        lhs = h * _pos(u.mean_interval(a, b) - u.mean_interval(c, e))
        hk = new_left[1] - new_left[0]
        rhs = hk * _pos(u.mean_interval(*new_left) - u.mean_interval(*new_right))
        for j in range(1, k):
            ij = (x - j * d, x - (j - 1) * d)
            ij1 = (x - (j - 1) * d, x - (j - 2) * d)
            rhs += d * _pos(u.mean_interval(*ij) - u.mean_interval(*ij1))
        info.update(lhs=lhs, rhs=rhs)
    return info


_DISPATCH = {"disjoint": _step_disjoint, "case_k1": _step_k1, "case_k": _step_k}


def interval_chain(x: float, y: float, h: float, u: Signal | None = None, max_iter: int = 64) -> IntervalChainTrace:
    """Trace of the iteration that reduces overlapping windows ``(x-h, x)``, ``(y-h, y)``.

    Each step either stops (disjoint pair or the bisection case) or replaces
    the pair by ``(I~_k, I~_{k-1})`` of the same offset ``d`` and shorter
    length.  With ``u`` given, every step records both sides of its
    inequality, computed on the piecewise-constant signal.
    """
    if not y > x:
        raise ParameterError("need y > x")
    if not x > y - h:
        raise ParameterError("windows do not overlap; need x > y - h")
    d = y - x
    k = steps_for(h, d)
    trace = IntervalChainTrace(x, y, h, d, k, [(x - j * d, x - (j - 1) * d) for j in range(1, k + 1)])
    left, right = (x - h, x), (y - h, y)
    for _ in range(max_iter):
        trace.pairs.append((left, right))
        branch = _classify(left[1] - left[0], d)
        trace.branches.append(branch)
        info = _DISPATCH[branch](u, left, right)
        if branch != "case_k":
            if info is not None:
                trace.steps.append(info)
            trace.terminated_by = branch
            return trace
        trace.steps.append({key: val for key, val in info.items() if key != "next"})
        nl, nr = info["next"]
        trace.theta.append((left[1] - left[0]) - (nl[1] - nl[0]))
        left, right = nl, nr
    trace.terminated_by = "max_iter"
    return trace


def check_trace(trace: IntervalChainTrace, tol: float = 1e-12) -> dict:
    lengths = [a[1] - a[0] for a, _ in trace.pairs]
    out = {
        "theta_sum_ok": math.fsum(trace.theta) <= trace.h * (1 + tol),
        "strictly_decreasing": all(b < a for a, b in zip(lengths, lengths[1:])),
        "thetas_nonnegative": all(t >= 0 for t in trace.theta),
    }
    overlaps = [(a[1] - b[0], (a[1] - a[0]) / 2) for a, b in trace.pairs]
    small = [0 < o <= half * (1 + 1e-9) for o, half in overlaps]
    out["k1_iff_small_overlap"] = (trace.terminated_by == "case_k1") == small[-1] and not any(small[:-1])
    scale = max([abs(s.get("lhs", 0.0)) for s in trace.steps] + [1.0])
    out["inequalities_ok"] = all(
        s["lhs"] <= s["rhs"] + tol * scale for s in trace.steps if "lhs" in s
    )
    return out


# -- one-sided CZ decomposition -------------------------------------------------


class PreconditionError(ValueError):
    pass


@dataclass
class OneSidedCZ:
    lam: float
    root: tuple  # cells [start, stop) of J = I- u I
    stopped: list  # (start, stop, companion mean, parent companion mean)
    labels: np.ndarray
    b: np.ndarray
    g: np.ndarray
    root_companion_mean: float
    unresolved: list = dc_field(default_factory=list)

    def stopped_mask(self) -> np.ndarray:
        return self.labels >= 0

    def to_dict(self, dx: float | None = None) -> dict:
        return {
            "lambda": self.lam,
            "root_cells": list(self.root),
            "root_companion_mean": self.root_companion_mean,
            "stopped": [
                {"cells": [a, b], "forward_mean": fm, "parent_forward_mean": pm}
                for a, b, fm, pm in self.stopped
            ],
            "unresolved": [list(c) for c in self.unresolved],
        }


def _exact_mean(u: Signal, a: int, b: int) -> Fraction:
    return u.prefix.exact_sum((a,), (b,)) / (b - a)


def os_cz(u: Signal, start: int, half: int, lam: float) -> OneSidedCZ:
    """Maximal dyadic sub-intervals ``I_i`` of ``J = [start, start + 2 half)`` with
    mean over ``I_i + |I_i|`` above ``lam``."""
    _check_defined(u)
    n = u.size
    stop = start + 2 * half
    if half < 1 or start < 0 or stop + 2 * half > n:
        raise ParameterError("root interval and its companion must lie inside the signal")
    root_mean = _exact_mean(u, stop, stop + 2 * half)
    lam_q = Fraction(lam)
    if not lam_q > root_mean:
        raise PreconditionError(f"lambda={lam} must exceed the companion mean {float(root_mean)}")
    stopped, unresolved = [], []
    stack = [(start, stop, root_mean)]
    while stack:
        a, b, parent_mean = stack.pop()
        length = b - a
        if length % 2:
            continue  # an odd run cannot be halved: leaf
        h = length // 2
        for c0, c1 in ((a + h, b), (a, a + h)):
            if c1 + h > n:
                unresolved.append((c0, c1))
                continue
            m = _exact_mean(u, c1, c1 + h)
            if m > lam_q:
                stopped.append((c0, c1, float(m), float(parent_mean)))
            else:
                stack.append((c0, c1, m))
    stopped.sort()
    labels = np.full(n, -1, dtype=np.int64)
    for i, (a, b, _, _) in enumerate(stopped):
        labels[a:b] = i
    region = np.zeros(n, dtype=bool)
    region[start:stop] = True
    consts = np.array([s[3] for s in stopped] + [0.0])
    c = consts[labels]
    on = labels >= 0
    b = np.where(on, u.values - c, 0.0)
    g = np.where(region, np.where(on, c, u.values), np.nan)
    return OneSidedCZ(float(lam), (start, stop), stopped, labels, b, g, float(root_mean), unresolved)


def _oracle_mean(u: Signal, a: int, b: int) -> Fraction:
    return sum(map(Fraction, u.values[a:b].tolist()), Fraction(0)) / (b - a)


def verify_cz(dec: OneSidedCZ, u: Signal) -> dict:
    start, stop = dec.root
    lam = Fraction(dec.lam)
    region = np.zeros(u.size, dtype=bool)
    region[start:stop] = True
    on = dec.stopped_mask()
    recon = float(np.max(np.abs(dec.b + dec.g - u.values)[region], initial=0.0))
    covered = sum(b - a for a, b, _, _ in dec.stopped)
    disjoint = covered == int(on.sum()) and all(
        dec.stopped[i][1] <= dec.stopped[i + 1][0] for i in range(len(dec.stopped) - 1)
    )
    maximal = _oracle_mean(u, stop, stop + (stop - start)) <= lam
    for a, b, _, _ in dec.stopped:
        length = b - a
        if not _oracle_mean(u, b, b + length) > lam:
            maximal = False
        # every dyadic ancestor below the root must not have stopped
        size = length
        while maximal and size * 2 < stop - start:
            size *= 2
            pa = start + ((a - start) // size) * size
            if _oracle_mean(u, pa + size, pa + 2 * size) > lam:
                maximal = False
    on_max = float(np.max(dec.g[on], initial=-np.inf))
    return {
        "lambda": dec.lam,
        "stopped_count": len(dec.stopped),
        "on_box_g_max": on_max,
        "on_box_ok": bool(on_max <= dec.lam),
        "off_box_u_max": float(np.max(u.values[region & ~on], initial=-np.inf)),
        "reconstruction_error": recon,
        "disjoint": bool(disjoint),
        "maximal": bool(maximal),
    }


def bad_part_l2(dec: OneSidedCZ, u: Signal) -> float:
    """``sum_i integral over I_i of (b_i+)**2``."""
    return float(math.fsum((np.maximum(dec.b, 0.0) ** 2).tolist()) * u.dx)


def bad_part_constant(u: Signal, fam: IntervalFamily, norm: float, lam_offset: float = 0.5) -> dict:
    """Largest ``integral (b+)**2 / (|I| norm**2)`` over roots ``J = I- u I`` of the family,
    with ``lambda = companion mean + lam_offset * norm``."""
    if not norm > 0:
        raise ParameterError("norm must be positive")
    best = None
    for m in fam.lengths:
        for s in range(0, u.size - 4 * m + 1, fam.stride):
            comp = float(_exact_mean(u, s + 2 * m, s + 4 * m))
            dec = os_cz(u, s, m, comp + lam_offset * norm)
            ratio = bad_part_l2(dec, u) / (m * u.dx * norm ** 2)
            if best is None or ratio > best[0]:
                best = (ratio, s, m)
    if best is None:
        raise ConfigurationError("no root interval fits on this signal")
    ratio, s, m = best
    return {"constant": ratio, "root": _witness(u, s, m), "lam_offset": lam_offset}


def dump_json(obj: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
