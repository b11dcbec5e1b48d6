"""Forward-in-time Calderón–Zygmund stopping-time decomposition ``u = b + g``.

Starting from a root box ``Q0`` (the past part of a parabolic rectangle),
dyadic boxes are visited depth first and a box ``Q`` is stopped as soon as the
mean of ``u`` over its forward companion exceeds ``lambda``.  The companion
of a non-root box is its covering parabolic box shifted forward by
``offset_factor`` times the cover's temporal side; the companion of the root
is the future part ``R+(gamma)`` of the rectangle whose past part is the root.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .dyadic import DyadicGrid
from .field import MIN_SAMPLES, SampledField
from .geometry import Box, ParameterError, check_gamma


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class StoppedBox:
    box_id: tuple
    box: Box
    parent_id: tuple
    forward_box: Box
    forward_mean: float
    parent_forward_mean: float


@dataclass
class CZDecomposition:
    lam: float
    region: Box
    stopped: list
    labels: np.ndarray  # index into ``stopped`` or -1; only meaningful on ``region_mask``
    region_mask: np.ndarray
    b: np.ndarray
    g: np.ndarray
    root_forward_mean: float
    unresolved: list = dc_field(default_factory=list)
    gamma: float = 0.5
    offset_factor: float = 2.0

    def stopped_mask(self) -> np.ndarray:
        return self.region_mask & (self.labels >= 0)

    def b_part(self, i: int) -> np.ndarray:
        """``1_{Q_i} (u - mean over the parent's companion)`` on the lattice."""
        return np.where(self.labels == i, self.b, 0.0)


def _exact_forward(f: SampledField, b: Box):
    """Exact sum and count over ``b``, or None if the box cannot be evaluated."""
    if not f.grid.contains(b):
        return None
    sl = f.grid.box_slices(b)
    counts = [i1 - i0 for i0, i1 in sl]
    if min(counts) < MIN_SAMPLES:
        return None
    window = f.values[tuple(slice(i0, i1) for i0, i1 in sl)]
    if np.isnan(window).any():
        return None
    total = f.accumulator("full").exact_sum([s[0] for s in sl], [s[1] for s in sl])
    return total, int(np.prod(counts))


def root_forward_box(grid: DyadicGrid, gamma: float) -> Box:
    r = grid.root
    return r.shift(dt=(2.0 - gamma) / gamma * r.duration)


def forward_box(grid: DyadicGrid, box_id, offset_factor: float = 2.0) -> Box:
    cover = grid.cover_box(box_id).box
    return cover.shift(dt=offset_factor * cover.duration)


def _resolvable(f: SampledField, b: Box) -> bool:
    return min(i1 - i0 for i0, i1 in f.grid.box_slices(b)) >= MIN_SAMPLES


def decompose(
    f: SampledField, grid: DyadicGrid, gamma: float, lam: float, offset_factor: float = 2.0
) -> CZDecomposition:
    check_gamma(gamma)
    if not offset_factor > 0:
        raise ParameterError("offset_factor must be positive")
    root_id = (0, (0,) * (grid.n + 1))
    root_fw = _exact_forward(f, root_forward_box(grid, gamma))
    if root_fw is None:
        raise PreconditionError("the root's forward companion is not resolvable on this field")
    root_mean = root_fw[0] / root_fw[1]
    lam_q = Fraction(lam)
    if not lam_q > root_mean:
        raise PreconditionError(f"lambda={lam} must exceed the root forward mean {float(root_mean)}")

    stopped, unresolved = [], []
    # stack of (box id, parent's forward mean as an exact rational)
    stack = [(c, root_mean) for c in reversed(grid.children(root_id))]
    while stack:
        box_id, parent_mean = stack.pop()
        fw_box = forward_box(grid, box_id, offset_factor)
        fw = _exact_forward(f, fw_box)
        if fw is None:
            unresolved.append(box_id)
            continue
        total, count = fw
        if total > lam_q * count:
            stopped.append(
                StoppedBox(
                    box_id, grid.box(box_id), grid.parent(box_id), fw_box,
                    float(total / count), float(parent_mean),
                )
            )
            continue
        kids = grid.children(box_id)
        if kids and all(_resolvable(f, grid.box(k)) for k in kids):
            mean = total / count
            stack.extend((k, mean) for k in reversed(kids))

    u = f.values
    region_mask = np.zeros(f.grid.shape, dtype=bool)
    region_mask[tuple(slice(i0, i1) for i0, i1 in f.grid.box_slices(grid.root))] = True
    labels = np.full(f.grid.shape, -1, dtype=np.int64)
    for i, s in enumerate(stopped):
        labels[tuple(slice(i0, i1) for i0, i1 in f.grid.box_slices(s.box))] = i
    consts = np.array([s.parent_forward_mean for s in stopped] + [0.0])
    c = consts[labels]
    on = labels >= 0
    b = np.where(region_mask & on, u - c, 0.0)
    g = np.where(region_mask, np.where(on, c, u), np.nan)
    return CZDecomposition(
        float(lam), grid.root, stopped, labels, region_mask, b, g,
        float(root_mean), unresolved, float(gamma), float(offset_factor),
    )


def _oracle_mean(f: SampledField, b: Box) -> Fraction:
    vals = f.samples(b).ravel().tolist()
    return sum(map(Fraction, vals), Fraction(0)) / len(vals)


def verify(dec: CZDecomposition, f: SampledField, grid: DyadicGrid) -> dict:
    """Re-check every contract by direct summation, independent of the prefix tables."""
    u = f.values
    region = dec.region_mask
    on = dec.stopped_mask()
    off = region & ~on
    lam = Fraction(dec.lam)
    recon = float(np.max(np.abs((dec.b + dec.g) - u)[region], initial=0.0))
    ids = {s.box_id for s in dec.stopped}
    disjoint = len(ids) == len(dec.stopped)
    for s in dec.stopped:
        cur = s.box_id
        while cur[0] > 0 and disjoint:
            cur = grid.parent(cur)
            disjoint = cur not in ids
    maximal = True
    for s in dec.stopped:
        if not _oracle_mean(f, forward_box(grid, s.box_id, dec.offset_factor)) > lam:
            maximal = False
            break
        cur = s.parent_id
        while cur[0] > 0:
            if _oracle_mean(f, forward_box(grid, cur, dec.offset_factor)) > lam:
                maximal = False
                break
            cur = grid.parent(cur)
        if not maximal:
            break
    maximal = maximal and _oracle_mean(f, root_forward_box(grid, dec.gamma)) <= lam
    # labels are written once per box, so overlaps would show up as lost samples
    counts = sum(int(np.prod([i1 - i0 for i0, i1 in f.grid.box_slices(s.box)])) for s in dec.stopped)
    disjoint = disjoint and counts == int(on.sum())
    on_max = float(np.max(dec.g[on], initial=-np.inf))
    return {
        "lambda": dec.lam,
        "stopped_count": len(dec.stopped),
        "unresolved_count": len(dec.unresolved),
        "on_box_g_max": on_max,
        "on_box_ok": bool(on_max <= dec.lam),
        "off_box_u_max": float(np.max(u[off], initial=-np.inf)),
        "reconstruction_error": recon,
        "disjoint": bool(disjoint),
        "maximal": bool(maximal),
    }


def region_contained(inner: CZDecomposition, outer: CZDecomposition) -> bool:
    """True when every stopped sample of ``inner`` is stopped in ``outer``."""
    a, b = inner.stopped_mask(), outer.stopped_mask()
    return bool(np.all(~a | b))


def _finite(x: float):
    return x if np.isfinite(x) else None


def to_dict(dec: CZDecomposition, report: dict | None = None) -> dict:
    out = {
        "lambda": dec.lam,
        "root_forward_mean": dec.root_forward_mean,
        "stopped": [
            {
                "generation": s.box_id[0],
                "index": list(s.box_id[1]),
                "box": s.box.to_dict(),
                "forward_mean": s.forward_mean,
                "parent_forward_mean": s.parent_forward_mean,
            }
            for s in dec.stopped
        ],
        "unresolved": [{"generation": i, "index": list(idx)} for i, idx in dec.unresolved],
    }
    if report is not None:
        out.update(
            reconstruction_error=report["reconstruction_error"],
            on_box_g_max=_finite(report["on_box_g_max"]),
            off_box_u_max=_finite(report["off_box_u_max"]),
        )
    return out


def dump_json(dec: CZDecomposition, path, report: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(to_dict(dec, report), fh, indent=2)
