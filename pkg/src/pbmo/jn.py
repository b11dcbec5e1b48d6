"""Empirical exponential integrability of one-sided oscillations.

For each rectangle of a family the centring constant ``b`` is the optimal
constant of the seminorm objective; the lower moment is the mean of
``exp(c (u - b)+)`` over ``R-(gamma)`` and the upper moment the mean of
``exp(c (b - u)+)`` over ``R+(gamma)``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .field import SampledField, box_average
from .geometry import Box, ParabolicRectangle, ParameterError, check_gamma, lower_part, upper_part
from .maximal import ConfigurationError
from .seminorms import RectangleFamily, optimal_constant

_OVERFLOW = 700.0


def _moment(dev: np.ndarray, c: float) -> float:
    """Mean of ``exp(c * dev)`` for ``dev >= 0``, in log space when it would overflow."""
    z = c * dev
    top = float(np.max(z, initial=0.0))
    if top <= _OVERFLOW:
        return float(np.mean(np.exp(z)))
    # log-sum-exp; the result itself may still be inf, which is an honest answer
    log_mean = top + math.log(math.fsum(np.exp(z - top).tolist())) - math.log(z.size)
    return math.exp(log_mean) if log_mean < 709.0 else math.inf


def _deviation(values: np.ndarray, b: float, side: str) -> np.ndarray:
    if side == "over":
        return np.maximum(values - b, 0.0)
    if side == "under":
        return np.maximum(b - values, 0.0)
    raise ParameterError(f"unknown side {side!r}")


def exp_moment(f: SampledField, box: Box, b: float, c: float, side: str = "over") -> float:
    if not c >= 0:
        raise ParameterError(f"c must be non-negative, got {c}")
    box_average(f, box)  # resolution and definedness
    return _moment(_deviation(f.samples(box).ravel(), b, side), c)


def default_c_grid() -> list:
    return [float(c) for c in np.geomspace(1e-2, 1e2, 32)]


@dataclass(frozen=True)
class JNReport:
    rectangle: ParabolicRectangle
    b: float
    c_grid: tuple
    lower_moments: tuple
    upper_moments: tuple
    c_star: float | None
    bracket: tuple
    moment_cap: float
    family_size: int

    def to_dict(self) -> dict:
        return {
            "rectangle": self.rectangle.to_dict(),
            "b": self.b,
            "c_grid": list(self.c_grid),
            "lower_moments": [_json_num(m) for m in self.lower_moments],
            "upper_moments": [_json_num(m) for m in self.upper_moments],
            "c_star": self.c_star,
            "bracket": list(self.bracket),
            "moment_cap": self.moment_cap,
            "family_size": self.family_size,
        }


def _json_num(x: float):
    return x if math.isfinite(x) else None


def rectangle_moments(f: SampledField, r: ParabolicRectangle, gamma: float, c_grid):
    lo = f.samples(lower_part(r, gamma)).ravel()
    up = f.samples(upper_part(r, gamma)).ravel()
    if lo.size == 0 or up.size == 0 or np.isnan(lo).any() or np.isnan(up).any():
        return None
    b, _ = optimal_constant(lo, up)
    d_lo, d_up = _deviation(lo, b, "over"), _deviation(up, b, "under")
    return b, [_moment(d_lo, c) for c in c_grid], [_moment(d_up, c) for c in c_grid]


def jn_scan(
    f: SampledField,
    fam: RectangleFamily,
    gamma: float | None = None,
    c_grid=None,
    moment_cap: float = 2.0,
) -> JNReport:
    """Worst case over the family; ``c_star`` is the largest grid value whose
    moments stay within ``moment_cap`` for every rectangle, and the binding
    rectangle is the one that first exceeds the cap above ``c_star``."""
    gamma = fam.gamma if gamma is None else check_gamma(gamma)
    c_grid = default_c_grid() if c_grid is None else sorted(float(c) for c in c_grid)
    if not c_grid:
        raise ConfigurationError("empty c grid")
    if c_grid[0] < 0:
        raise ParameterError("c grid must be non-negative")
    worst_lo = [1.0] * len(c_grid)
    worst_up = [1.0] * len(c_grid)
    first_bad = len(c_grid)
    binding = None
    size = 0
    for r in fam.rectangles(f.grid):
        got = rectangle_moments(f, r, gamma, c_grid)
        if got is None:
            continue
        size += 1
        b, lo, up = got
        worst_lo = [max(a, m) for a, m in zip(worst_lo, lo)]
        worst_up = [max(a, m) for a, m in zip(worst_up, up)]
        bad = next((i for i, (x, y) in enumerate(zip(lo, up)) if max(x, y) > moment_cap), len(c_grid))
        # ties keep the first rectangle in family order
        if binding is None or bad < first_bad:
            first_bad = min(first_bad, bad)
            binding = (r, b, lo, up)
    if binding is None:
        raise ConfigurationError("rectangle family is empty on this grid")
    r, b, lo, up = binding
    c_star = c_grid[first_bad - 1] if first_bad > 0 else None
    bracket = (
        c_star,
        c_grid[first_bad] if first_bad < len(c_grid) else None,
    )
    return JNReport(r, b, tuple(c_grid), tuple(worst_lo), tuple(worst_up), c_star, bracket, moment_cap, size)


def write_csv(report: JNReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["c", "worst_lower_moment", "worst_upper_moment"])
        for c, lo, up in zip(report.c_grid, report.lower_moments, report.upper_moments):
            w.writerow([repr(c), repr(lo), repr(up)])


def dump_json(report: JNReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
