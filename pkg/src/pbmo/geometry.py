"""Parabolic rectangles, their past/future parts, and axis-parallel boxes.

Every box is half-open, ``[lo, hi)`` on each axis.  Time is always the last
coordinate; spatial dimension ``n`` is whatever the caller passes in.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class ParameterError(ValueError):
    """A numeric parameter lies outside its admissible range."""


class OrderError(ValueError):
    """Two sets are not in the required temporal order."""


def _tuple(v) -> tuple:
    if np.isscalar(v):
        return (float(v),)
    return tuple(float(a) for a in v)


def check_gamma(gamma: float) -> float:
    if not 0.0 < gamma < 1.0:
        raise ParameterError(f"shape gamma must lie in (0, 1), got {gamma!r}")
    return float(gamma)


def check_exponent(p: float) -> float:
    if not p > 1.0:
        raise ParameterError(f"exponent p must be > 1, got {p!r}")
    return float(p)


@dataclass(frozen=True)
class Box:
    x_lo: tuple
    x_hi: tuple
    t_lo: float
    t_hi: float

    def __post_init__(self):
        object.__setattr__(self, "x_lo", _tuple(self.x_lo))
        object.__setattr__(self, "x_hi", _tuple(self.x_hi))
        object.__setattr__(self, "t_lo", float(self.t_lo))
        object.__setattr__(self, "t_hi", float(self.t_hi))
        if len(self.x_lo) != len(self.x_hi):
            raise ParameterError("spatial bounds have different lengths")
        if any(h <= l for l, h in zip(self.x_lo, self.x_hi)) or self.t_hi <= self.t_lo:
            raise ParameterError(f"box has non-positive extent: {self}")

    @property
    def n(self) -> int:
        return len(self.x_lo)

    @property
    def widths(self) -> tuple:
        return tuple(h - l for l, h in zip(self.x_lo, self.x_hi))

    @property
    def duration(self) -> float:
        return self.t_hi - self.t_lo

    @property
    def measure(self) -> float:
        return float(np.prod(self.widths)) * self.duration

    @property
    def center_x(self) -> tuple:
        return tuple(0.5 * (l + h) for l, h in zip(self.x_lo, self.x_hi))

    @property
    def center_t(self) -> float:
        return 0.5 * (self.t_lo + self.t_hi)

    def contains(self, other: "Box", tol: float = 0.0) -> bool:
        return (
            all(a - tol <= b for a, b in zip(self.x_lo, other.x_lo))
            and all(b <= a + tol for a, b in zip(self.x_hi, other.x_hi))
            and self.t_lo - tol <= other.t_lo
            and other.t_hi <= self.t_hi + tol
        )

    def intersect(self, other: "Box") -> "Box | None":
        lo = tuple(max(a, b) for a, b in zip(self.x_lo, other.x_lo))
        hi = tuple(min(a, b) for a, b in zip(self.x_hi, other.x_hi))
        t_lo, t_hi = max(self.t_lo, other.t_lo), min(self.t_hi, other.t_hi)
        if any(h <= l for l, h in zip(lo, hi)) or t_hi <= t_lo:
            return None
        return Box(lo, hi, t_lo, t_hi)

    def shift(self, dx: Sequence[float] | None = None, dt: float = 0.0) -> "Box":
        dx = (0.0,) * self.n if dx is None else _tuple(dx)
        return Box(
            tuple(a + d for a, d in zip(self.x_lo, dx)),
            tuple(a + d for a, d in zip(self.x_hi, dx)),
            self.t_lo + dt,
            self.t_hi + dt,
        )

    def to_dict(self) -> dict:
        return {
            "x_lo": list(self.x_lo),
            "x_hi": list(self.x_hi),
            "t_lo": self.t_lo,
            "t_hi": self.t_hi,
        }


# A cylinder is just the bounded box that carries the data.
Cylinder = Box


@dataclass(frozen=True)
class ParabolicRectangle:
    """``Q x (t - ell**p, t + ell**p)`` with ``Q`` the cube of side ``ell`` about ``center_x``."""

    center_x: tuple
    center_t: float
    ell: float
    p: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "center_x", _tuple(self.center_x))
        object.__setattr__(self, "center_t", float(self.center_t))
        if not self.ell > 0:
            raise ParameterError(f"side length must be positive, got {self.ell!r}")
        check_exponent(self.p)

    @property
    def n(self) -> int:
        return len(self.center_x)

    @property
    def height(self) -> float:
        """Half of the temporal extent, ``ell**p``."""
        return self.ell ** self.p

    def _cube(self):
        half = 0.5 * self.ell
        return (
            tuple(c - half for c in self.center_x),
            tuple(c + half for c in self.center_x),
        )

    def full(self) -> Box:
        lo, hi = self._cube()
        return Box(lo, hi, self.center_t - self.height, self.center_t + self.height)

    def lower(self, gamma: float) -> Box:
        return lower_part(self, gamma)

    def upper(self, gamma: float) -> Box:
        return upper_part(self, gamma)

    def to_dict(self) -> dict:
        return {"center": list(self.center_x) + [self.center_t], "ell": self.ell, "p": self.p}


def lower_part(r: ParabolicRectangle, gamma: float) -> Box:
    check_gamma(gamma)
    lo, hi = r._cube()
    h = r.height
    return Box(lo, hi, r.center_t - h, r.center_t - (1.0 - gamma) * h)


def upper_part(r: ParabolicRectangle, gamma: float) -> Box:
    check_gamma(gamma)
    lo, hi = r._cube()
    h = r.height
    return Box(lo, hi, r.center_t + (1.0 - gamma) * h, r.center_t + h)


def translate_time(b: Box, dt: float) -> Box:
    return b.shift(dt=dt)


def reflect_time(b: Box, about: float) -> Box:
    """Mirror image of ``b`` under ``t -> 2*about - t``."""
    return Box(b.x_lo, b.x_hi, 2.0 * about - b.t_hi, 2.0 * about - b.t_lo)


def dilate(b: Box, delta: float, p: float) -> Box:
    """Parabolic dilation ``(x, t) -> (delta x, delta**p t)`` about the origin."""
    if not delta > 0:
        raise ParameterError(f"dilation factor must be positive, got {delta!r}")
    check_exponent(p)
    s = delta ** p
    return Box(
        tuple(delta * a for a in b.x_lo),
        tuple(delta * a for a in b.x_hi),
        s * b.t_lo,
        s * b.t_hi,
    )
