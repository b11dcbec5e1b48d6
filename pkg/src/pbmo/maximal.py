"""Parabolic one-sided maximal operators on lattice fields.

Rectangles are centred at lattice points; the supremum over side lengths runs
over a finite geometric ladder.  A rectangle is admissible at a point when the
full box ``R`` lies inside the cylinder and both gamma-parts hold at least
``MIN_SAMPLES`` lattice planes per axis.  Points with no admissible rung get
NaN, which every downstream statistic skips.
"""
from __future__ import annotations

import math
from itertools import product
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .field import MIN_SAMPLES, SampledField, negate, neg_part, pos_part
from .geometry import ParameterError, check_exponent, check_gamma


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class MaximalConfig:
    gamma: float = 0.5
    ell_min: float = 0.25
    ell_max: float = 1.0
    ladder_ratio: float = 2 ** 0.25
    direction: str = "backward"
    p: float = 2.0

    def __post_init__(self):
        check_gamma(self.gamma)
        check_exponent(self.p)
        if not self.ladder_ratio > 1:
            raise ParameterError("ladder_ratio must exceed 1")
        if not 0 < self.ell_min <= self.ell_max:
            raise ParameterError("need 0 < ell_min <= ell_max")
        if self.direction not in ("backward", "forward"):
            raise ParameterError(f"unknown direction {self.direction!r}")

    def ladder(self) -> list:
        # Powers of two in the exponent keep 2**(1/8) ladders a superset of 2**(1/4) ones bit for bit.
        step = math.log2(self.ladder_ratio)
        if abs(step * 1024 - round(step * 1024)) < 1e-9:
            step = round(step * 1024) / 1024
        out, k = [], 0
        while True:
            ell = self.ell_min * 2.0 ** (k * step)
            if ell > self.ell_max * (1 + 1e-12):
                return out
            out.append(ell)
            k += 1

    def to_dict(self) -> dict:
        return asdict(self)


def _open(arr, axis, ndim):
    shape = [1] * ndim
    shape[axis] = -1
    return np.reshape(arr, shape)


def rung_geometry(grid, ell, gamma, p):
    """Index bounds of lower/upper parts for every lattice centre, plus admissibility.

    Coordinates are formed with the same float operations as ``lower_part``
    and ``upper_part`` so the index sets match ``box_average`` exactly.
    """
    ndim = grid.n + 1
    tol = 1e-9 * min(grid.spacings)
    cyl = grid.cylinder
    half = 0.5 * ell
    height = ell ** p
    ok = np.ones(grid.shape, dtype=bool)
    x_lows, x_highs, x_counts = [], [], 1
    for a in range(grid.n):
        c = grid.axis_centers(a)
        lo, hi = c - half, c + half
        i0, i1 = grid.index_bounds(a, lo, hi)
        fits = (lo >= cyl.x_lo[a] - tol) & (hi <= cyl.x_hi[a] + tol) & (i1 - i0 >= MIN_SAMPLES)
        ok &= _open(fits, a, ndim)
        x_lows.append(_open(np.clip(i0, 0, grid.shape[a]), a, ndim))
        x_highs.append(_open(np.clip(i1, 0, grid.shape[a]), a, ndim))
        x_counts = x_counts * _open(np.maximum(i1 - i0, 1), a, ndim)
    t = grid.t
    parts = {}
    for name, (lo, hi) in {
        "lower": (t - height, t - (1.0 - gamma) * height),
        "upper": (t + (1.0 - gamma) * height, t + height),
    }.items():
        i0, i1 = grid.index_bounds(grid.n, lo, hi)
        ok &= _open(i1 - i0 >= MIN_SAMPLES, grid.n, ndim)
        parts[name] = (
            tuple(x_lows) + (_open(np.clip(i0, 0, grid.nt), grid.n, ndim),),
            tuple(x_highs) + (_open(np.clip(i1, 0, grid.nt), grid.n, ndim),),
            x_counts * _open(np.maximum(i1 - i0, 1), grid.n, ndim),
        )
    fits_t = (t - height >= cyl.t_lo - tol) & (t + height <= cyl.t_hi + tol)
    ok &= _open(fits_t, grid.n, ndim)
    return parts, ok


def _undefined_in(f: SampledField, lows, highs):
    if not f.undefined_count:
        return False
    table = f._undefined_prefix
    total = 0
    for corner in product((0, 1), repeat=table.ndim):
        idx = tuple(highs[a] if c else lows[a] for a, c in enumerate(corner))
        sign = (-1) ** (table.ndim - sum(corner))
        total = total + sign * table[idx]
    return total > 0


def rung_averages(f: SampledField, ell: float, gamma: float, p: float, terms):
    """Sum of the requested part averages at one rung, NaN where inadmissible.

    ``terms`` is a sequence of ``(region, part)`` pairs, e.g.
    ``[("lower", "positive"), ("upper", "negative")]``.
    """
    geo, ok = rung_geometry(f.grid, ell, gamma, p)
    for lows, highs, _ in geo.values():
        ok = ok & ~_undefined_in(f, lows, highs)
    total = None
    for region, part in terms:
        lows, highs, counts = geo[region]
        counts = np.broadcast_to(counts, f.grid.shape)
        m = f.accumulator(part).means(lows, highs, counts)
        total = m if total is None else total + m
    return np.where(ok, total, np.nan)


_TERMS = {
    "backward": (("lower", "positive"), ("upper", "negative")),
    "forward": (("upper", "positive"), ("lower", "negative")),
}


def _sup(f, cfg, terms, ladder=None):
    ladder = cfg.ladder() if ladder is None else ladder
    out = np.full(f.grid.shape, np.nan)
    for ell in ladder:
        out = np.fmax(out, rung_averages(f, ell, cfg.gamma, cfg.p, terms))
    return out


def _result(f, values, what):
    if np.isnan(values).all():
        raise ConfigurationError(f"{what}: no admissible rectangle at any lattice point")
    return SampledField(f.grid, values)


def maximal_star(f: SampledField, cfg: MaximalConfig, ladder=None) -> SampledField:
    """Positive part averaged over the past, negative part over the future.

    With ``direction="forward"`` the roles of past and future swap, which is
    the same operator applied to ``-f``.
    """
    return _result(f, _sup(f, cfg, _TERMS[cfg.direction], ladder), "maximal_star")


def maximal_plain(f: SampledField, cfg: MaximalConfig, ladder=None) -> SampledField:
    region = "lower" if cfg.direction == "backward" else "upper"
    return _result(f, _sup(f, cfg, ((region, "abs"),), ladder), "maximal_plain")


def future_negative_maximal(f: SampledField, cfg: MaximalConfig) -> SampledField:
    """Sup over the ladder of the negative part's average over future parts."""
    return maximal_star(negate(neg_part(f)), cfg)


def _max_abs(a, b):
    both = ~np.isnan(a) & ~np.isnan(b)
    if (np.isnan(a) != np.isnan(b)).any():
        return math.inf
    return float(np.max(np.abs(a[both] - b[both]), initial=0.0))


def duality_check(f: SampledField, cfg: MaximalConfig) -> dict:
    """Compare the backward operator on ``-f`` with the forward operator on ``f``."""
    back = maximal_star(negate(f), MaximalConfig(**{**cfg.to_dict(), "direction": "backward"}))
    fwd = maximal_star(f, MaximalConfig(**{**cfg.to_dict(), "direction": "forward"}))
    return {
        "config": cfg.to_dict(),
        "max_abs_deviation": _max_abs(back.values, fwd.values),
        "undefined_count": back.undefined_count,
    }


def split(f: SampledField, cfg: MaximalConfig, cutoff_factor: float = 0.01, reference_ell: float = 1.0):
    """Small-scale and large-scale suprema; an empty sub-ladder gives an all-NaN field."""
    cut = cutoff_factor * reference_ell
    ladder = cfg.ladder()
    small = [e for e in ladder if e <= cut]
    large = [e for e in ladder if e >= cut]
    if not small and not large:
        raise ConfigurationError("empty ladder")
    terms = _TERMS[cfg.direction]
    u1 = _sup(f, cfg, terms, small)
    u2 = _sup(f, cfg, terms, large)
    return SampledField(f.grid, u1), SampledField(f.grid, u2)


def sandwich_check(f: SampledField, cfg: MaximalConfig) -> dict:
    """Pointwise ``max(U-, U+) <= M u <= U- + U+`` on the same ladder."""
    cfg = MaximalConfig(**{**cfg.to_dict(), "direction": "backward"})
    m = maximal_star(f, cfg).values
    u_plus = maximal_star(pos_part(f), cfg).values
    u_minus = future_negative_maximal(f, cfg).values
    defined = ~np.isnan(m)
    lower_gap = np.fmax(u_plus, u_minus)[defined] - m[defined]
    upper_gap = m[defined] - (u_plus + u_minus)[defined]
    return {
        "config": cfg.to_dict(),
        "lower_violation": float(max(0.0, lower_gap.max(initial=0.0))),
        "upper_violation": float(max(0.0, upper_gap.max(initial=0.0))),
        "max_violation": float(max(0.0, lower_gap.max(initial=0.0), upper_gap.max(initial=0.0))),
        "undefined_count": int((~defined).sum()),
        "defined_count": int(defined.sum()),
    }


def _exact_mean(values) -> float:
    return float(sum(map(Fraction, values.ravel().tolist()), Fraction(0)) / values.size)


def hl_reduction_check(f: SampledField, cfg: MaximalConfig, t_index: int | None = None) -> dict:
    """Compare the parabolic operator of a time-independent field with the
    centred Hardy-Littlewood maximal function of ``|g|`` on one time slice.

    At each point the Hardy-Littlewood supremum runs over the rungs that are
    admissible there, which is the ladder the parabolic operator used; points
    with no admissible rung are skipped.  The cube averages are exact
    rational means, independent of the prefix-sum path.
    """
    v = f.values
    if not np.all(v == v[..., :1]):
        raise ParameterError("field is not time independent")
    grid = f.grid
    j = grid.nt // 2 if t_index is None else int(t_index)
    ladder = cfg.ladder()
    m = maximal_star(f, MaximalConfig(**{**cfg.to_dict(), "direction": "backward"})).values[..., j]
    g = np.abs(v[..., 0])
    admissible = [rung_geometry(grid, ell, cfg.gamma, cfg.p)[1][..., j] for ell in ladder]
    worst, compared = 0.0, 0
    for idx in np.ndindex(*grid.nx):
        rungs = [ell for ell, ok in zip(ladder, admissible) if ok[idx]]
        if not rungs:
            continue
        best = -math.inf
        for ell in rungs:
            sl = []
            for a in range(grid.n):
                c = grid.axis_centers(a)[idx[a]]
                i0, i1 = grid.index_bounds(a, c - 0.5 * ell, c + 0.5 * ell)
                sl.append(slice(int(i0), int(i1)))
            best = max(best, _exact_mean(g[tuple(sl)]))
        worst = max(worst, abs(best - m[idx]))
        compared += 1
    return {
        "config": cfg.to_dict(),
        "t_index": j,
        "max_abs_deviation": worst,
        "compared_points": compared,
        "undefined_count": int(np.isnan(m).sum()),
    }
