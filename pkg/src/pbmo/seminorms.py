"""Lattice estimates of parabolic BMO-type seminorms.

Every estimate is a maximum over a finite rectangle family: centres on a
strided sub-lattice, side lengths on a geometric ladder.  The reported value
is reproducible from the witness rectangle and constant it carries.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .field import SampledField, box_average, time_reverse
from .geometry import (
    Box,
    OrderError,
    ParabolicRectangle,
    ParameterError,
    check_exponent,
    check_gamma,
    lower_part,
    upper_part,
)
from .maximal import ConfigurationError, rung_geometry


def objective(lower, upper, a: float) -> float:
    """``mean((lower - a)+) + mean((a - upper)+)``."""
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    return float(np.mean(np.maximum(lower - a, 0.0)) + np.mean(np.maximum(a - upper, 0.0)))


def optimal_constant(lower, upper):
    """Leftmost minimiser of the convex piecewise-linear :func:`objective`.

    The right derivative at ``a`` is ``#{upper <= a}/m_u - #{lower > a}/m_l``;
    the leftmost minimiser is the first breakpoint where it becomes
    non-negative.  The test is done in integers, so ties on the flat bottom
    cannot be decided by rounding.
    """
    lo = np.sort(np.asarray(lower, dtype=np.float64).ravel())
    up = np.sort(np.asarray(upper, dtype=np.float64).ravel())
    if lo.size == 0 or up.size == 0:
        raise ParameterError("optimal_constant needs two non-empty samples")
    cand = np.union1d(lo, up)
    above = lo.size - np.searchsorted(lo, cand, side="right")
    below = np.searchsorted(up, cand, side="right")
    ok = below * lo.size >= above * up.size
    a = float(cand[np.argmax(ok)])
    return a, objective(lo, up, a)


def double_oscillation_samples(first, second) -> float:
    """Mean of ``(x - y)+`` over all pairs ``x in first``, ``y in second`` in O(m log m)."""
    x = np.asarray(first, dtype=np.float64).ravel()
    y = np.asarray(second, dtype=np.float64).ravel()
    if x.size == 0 or y.size == 0:
        raise ParameterError("double oscillation needs two non-empty samples")
    shift = float(np.median(np.concatenate([x, y])))
    x = x - shift
    y = np.sort(y - shift)
    prefix = np.concatenate([[0.0], np.cumsum(y)])
    k = np.searchsorted(y, x, side="left")
    total = np.sum(x * k - prefix[k])
    return float(total / (x.size * y.size))


def double_oscillation(f: SampledField, first: Box, second: Box) -> float:
    """Mean of ``(u(x) - u(y))+`` over lattice samples ``x in first``, ``y in second``."""
    if not second.t_lo - first.t_hi > 0:
        raise OrderError("second box must start strictly after the first one ends")
    # box_average validates resolution and definedness of both sets
    box_average(f, first)
    box_average(f, second)
    return double_oscillation_samples(f.samples(first), f.samples(second))


@dataclass(frozen=True)
class RectangleFamily:
    """Rectangles centred on every ``stride``-th lattice point with sides from ``ladder``.

    ``stride`` is one int for all axes or one per axis, time last.
    """

    ladder: tuple
    stride: tuple = (1,)
    gamma: float = 0.5
    p: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "ladder", tuple(float(e) for e in self.ladder))
        st = (self.stride,) if np.isscalar(self.stride) else tuple(self.stride)
        object.__setattr__(self, "stride", tuple(int(s) for s in st))
        if not self.ladder:
            raise ConfigurationError("rectangle family needs a non-empty ladder")
        if min(self.stride) < 1:
            raise ParameterError("stride must be positive")
        check_gamma(self.gamma)
        check_exponent(self.p)

    def _strides(self, ndim):
        return self.stride * ndim if len(self.stride) == 1 else self.stride

    def rectangles(self, grid):
        """Admissible members in a fixed order: by side length, then lattice index."""
        strides = self._strides(grid.n + 1)
        sub = tuple(slice(None, None, s) for s in strides)
        centres = [grid.axis_centers(a) for a in range(grid.n + 1)]
        for ell in self.ladder:
            _, ok = rung_geometry(grid, ell, self.gamma, self.p)
            mask = np.zeros(grid.shape, dtype=bool)
            mask[sub] = True
            for idx in zip(*np.nonzero(ok & mask)):
                yield ParabolicRectangle(
                    tuple(centres[a][idx[a]] for a in range(grid.n)),
                    centres[-1][idx[-1]],
                    ell,
                    self.p,
                )

    def to_dict(self) -> dict:
        return {"stride": list(self.stride), "ladder": list(self.ladder), "gamma": self.gamma, "p": self.p}


@dataclass(frozen=True)
class SeminormEstimate:
    value: float
    witness: ParabolicRectangle | None
    constant: float
    family_size: int
    skipped: int = 0
    extras: dict = dc_field(default_factory=dict)

    def to_dict(self, family=None, grid=None, lag=None) -> dict:
        out = {
            "value": self.value,
            "witness": None
            if self.witness is None
            else {"center": list(self.witness.center_x) + [self.witness.center_t], "ell": self.witness.ell},
            "constant": self.constant,
            "family_size": self.family_size,
            "skipped": self.skipped,
        }
        if family is not None:
            out["family"] = {**family.to_dict(), "lag": lag}
        if grid is not None:
            out["grid"] = {"nx": list(grid.nx), "nt": grid.nt}
        out.update(self.extras)
        return out


def _key(value, r):
    return (value, r.center_t, r.center_x, r.ell)


# Float estimates are within ~1e-13 relative of the exact values; anything
# this close to the float maximum is re-evaluated in exact arithmetic.
_TIE_MARGIN = 1e-9


def _best(results, exact):
    """Deterministic max over (value, centre_t, centre_x, ell).

    ``exact(r)`` returns the exact rational value of member ``r``; the
    returned value is that rational correctly rounded, so comparisons
    between estimators are free of rounding noise.
    """
    kept, size, skipped = [], 0, 0
    for item in results:
        if item is None:
            skipped += 1
            continue
        size += 1
        kept.append(item)
    if not kept:
        return None, size, skipped
    top = max(v for v, _, _ in kept)
    margin = _TIE_MARGIN * max(1.0, abs(top))
    near = [(exact(r), r, c) for v, r, c in kept if v >= top - margin]
    q, r, c = max(near, key=lambda t: _key(t[0], t[1]))
    return (float(q), r, c), size, skipped


def _int_samples(f: SampledField, b: Box) -> np.ndarray:
    """Samples of ``b`` as exact integers at the field's common scale."""
    sl = f.grid.box_slices(b)
    return f.accumulator("full").ints[tuple(slice(i0, i1) for i0, i1 in sl)].ravel()


def _scaled(f: SampledField, q: Fraction) -> Fraction:
    return q * Fraction(2) ** f.accumulator("full").scale


def _exact_objective(f, lo_box, up_box, a: float) -> Fraction:
    lo, up = _int_samples(f, lo_box), _int_samples(f, up_box)
    ai = f.accumulator("full").to_int(a)
    num_lo = int(np.sum(lo[lo > ai] - ai, initial=0))
    num_up = int(np.sum(ai - up[up < ai], initial=0))
    return _scaled(f, Fraction(num_lo * up.size + num_up * lo.size, lo.size * up.size))


def _defined(a: np.ndarray) -> bool:
    return a.size > 0 and not np.isnan(a).any()


def _pbmo_parts(f, r, gamma):
    return f.samples(lower_part(r, gamma)).ravel(), f.samples(upper_part(r, gamma)).ravel()


def _pbmo_terms(f: SampledField, fam: RectangleFamily):
    for r in fam.rectangles(f.grid):
        lo, up = _pbmo_parts(f, r, fam.gamma)
        if not (_defined(lo) and _defined(up)):
            yield None
            continue
        a, value = optimal_constant(lo, up)
        yield value, r, a


def pbmo_seminorm(f: SampledField, fam: RectangleFamily, direction: str = "minus") -> SeminormEstimate:
    """Sup over the family of ``inf_a mean_lower (u-a)+ + mean_upper (a-u)+``.

    ``direction="plus"`` runs the same estimator on the time-reversed field;
    the witness is mapped back to the original time axis.
    """
    if direction not in ("minus", "plus"):
        raise ParameterError(f"unknown direction {direction!r}")
    g = f if direction == "minus" else time_reverse(f)

    def exact(r):
        lo, up = _pbmo_parts(g, r, fam.gamma)
        a = optimal_constant(lo, up)[0]
        return _exact_objective(g, lower_part(r, fam.gamma), upper_part(r, fam.gamma), a)

    best, size, skipped = _best(_pbmo_terms(g, fam), exact)
    if best is None:
        raise ConfigurationError("rectangle family is empty on this grid")
    value, r, a = best
    if direction == "plus":
        c = f.grid.cylinder
        r = ParabolicRectangle(r.center_x, c.t_lo + c.t_hi - r.center_t, r.ell, r.p)
    return SeminormEstimate(value, r, a, size, skipped)


def _variant_sets(f, r, gamma, lag):
    first = lower_part(r, gamma)
    return first, first.shift(dt=lag * r.height)


def _variant_terms(f, fam, gamma, lag, side):
    for r in fam.rectangles(f.grid):
        first, second = _variant_sets(f, r, gamma, lag)
        if not f.grid.contains(second):
            yield None
            continue
        try:
            m_first = box_average(f, first).mean
            m_second = box_average(f, second).mean
        except ValueError:
            yield None
            continue
        if side == "plus":
            value = float(np.mean(np.maximum(f.samples(first) - m_second, 0.0)))
            yield value, r, m_second
        else:
            value = float(np.mean(np.maximum(m_first - f.samples(second), 0.0)))
            yield value, r, m_first


def _exact_variant(f, r, gamma, lag, side) -> Fraction:
    first, second = _variant_sets(f, r, gamma, lag)
    a, b = _int_samples(f, first), _int_samples(f, second)
    if side == "plus":
        # mean over a of (x - S/m)+  with S, m the sum and size of b
        s, m, pts = int(np.sum(b)), b.size, a
        diff = pts * m - s
    else:
        s, m, pts = int(np.sum(a)), a.size, b
        diff = s - pts * m
    num = int(np.sum(diff[diff > 0], initial=0))
    return _scaled(f, Fraction(num, m * pts.size))


def bmo_variant_seminorm(
    f: SampledField, fam: RectangleFamily, gamma: float, lag: float, side: str = "plus"
) -> SeminormEstimate:
    """One-sided conditions with the companion box shifted by ``lag * ell**p``.

    ``side="plus"``: mean over the past part of ``(u - mean of companion)+``.
    ``side="minus_neg"``: mean over the companion of ``(mean of past part - u)+``.
    """
    check_gamma(gamma)
    if not lag > 1.0 - gamma:
        raise ParameterError(f"lag must exceed 1 - gamma = {1 - gamma}, got {lag}")
    if side not in ("plus", "minus_neg"):
        raise ParameterError(f"unknown side {side!r}")
    best, size, skipped = _best(
        _variant_terms(f, fam, gamma, lag, side), lambda r: _exact_variant(f, r, gamma, lag, side)
    )
    if best is None:
        raise ConfigurationError("no family member has its shifted companion inside the cylinder")
    value, r, c = best
    return SeminormEstimate(value, r, c, size, skipped)
