"""Chains of time-stacked blocks connecting a past box to a later translate.

A direct chain moves the spatial cube in ``k`` equal steps and then stays put
for ``l`` further links; consecutive blocks are ``2 sigma`` apart in time and
each link passes through the overlap set ``S`` of the forward companion of one
block with the backward companion of the next.  Along the sequence
``P_0, S_1, P_1, ..., S_N, P_N`` the pointwise inequality
``(u(x)-u(y))+ <= (u(x)-u(z))+ + (u(z)-u(y))+`` telescopes into a certified
upper bound for the double average over ``start x target``.

When the time lag is too short for a direct chain, start and target are cut
into tiles of side ``eps * ell`` and each tile is chained to a small auxiliary
pair placed halfway between them.

All geometry is held in exact rationals; boxes are rounded to floats only for
sampling.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from itertools import product

import numpy as np

from .field import InsufficientResolution, SampledField, UndefinedSamples
from .geometry import Box, OrderError, ParameterError, check_exponent
from .seminorms import double_oscillation_samples

C0 = 4  # feasibility constant in  tau >= C0 |v| / ell
DELTA_MIN = Fraction(1, 4)
MAX_REFINEMENT = 10
MAX_TILES = 1024  # per endpoint


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class RBox:
    """Half-open box with rational corners."""

    lo: tuple
    hi: tuple
    t_lo: Fraction
    t_hi: Fraction

    @classmethod
    def from_box(cls, b: Box) -> "RBox":
        return cls(tuple(map(Fraction, b.x_lo)), tuple(map(Fraction, b.x_hi)), Fraction(b.t_lo), Fraction(b.t_hi))

    def to_box(self) -> Box:
        return Box(tuple(map(float, self.lo)), tuple(map(float, self.hi)), float(self.t_lo), float(self.t_hi))

    @property
    def widths(self):
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    @property
    def duration(self) -> Fraction:
        return self.t_hi - self.t_lo

    @property
    def volume(self) -> Fraction:
        v = self.duration
        for w in self.widths:
            v *= w
        return v

    def shift(self, dx=None, dt=Fraction(0)) -> "RBox":
        dx = (Fraction(0),) * len(self.lo) if dx is None else dx
        return RBox(
            tuple(a + d for a, d in zip(self.lo, dx)),
            tuple(a + d for a, d in zip(self.hi, dx)),
            self.t_lo + dt,
            self.t_hi + dt,
        )

    def intersect(self, other: "RBox") -> "RBox | None":
        lo = tuple(max(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        t_lo, t_hi = max(self.t_lo, other.t_lo), min(self.t_hi, other.t_hi)
        if any(h <= l for l, h in zip(lo, hi)) or t_hi <= t_lo:
            return None
        return RBox(lo, hi, t_lo, t_hi)

    def center(self):
        return tuple((l + h) / 2 for l, h in zip(self.lo, self.hi)), (self.t_lo + self.t_hi) / 2


@dataclass(frozen=True)
class ChainSpec:
    """Start box ``R-(theta)`` of side ``ell`` and the displacement ``(v, tau ell**p)``."""

    start: Box
    v: tuple
    tau: float
    theta: float
    p: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(float(a) for a in np.atleast_1d(self.v)))
        check_exponent(self.p)
        if len(self.v) != self.start.n:
            raise ParameterError("displacement and start box differ in dimension")
        if not 0 < self.theta < 1:
            raise ParameterError(f"theta must lie in (0, 1), got {self.theta}")
        if not self.tau > 1 - self.theta:
            raise ParameterError(f"tau must exceed 1 - theta = {1 - self.theta}, got {self.tau}")
        w = self.start.widths
        if any(abs(a - w[0]) > 1e-12 * w[0] for a in w):
            raise ParameterError("start box must have a cubical base")
        if not self.tau > self.start.duration / self.height:
            raise OrderError("target must begin after the start box ends")

    @classmethod
    def from_rectangle(cls, center_x, center_t, ell, theta, v, tau, p=2.0) -> "ChainSpec":
        c = np.atleast_1d(np.asarray(center_x, dtype=float))
        h = ell ** p
        start = Box(tuple(c - ell / 2), tuple(c + ell / 2), center_t - h, center_t - (1 - theta) * h)
        return cls(start, tuple(np.atleast_1d(v)), tau, theta, p)

    @property
    def ell(self) -> float:
        return self.start.widths[0]

    @property
    def height(self) -> float:
        return self.ell ** self.p

    def target(self) -> Box:
        return RBox.from_box(self.start).shift(
            tuple(map(Fraction, self.v)), Fraction(self.tau) * Fraction(self.height)
        ).to_box()

    def to_dict(self) -> dict:
        return {
            "start": self.start.to_dict(),
            "v": list(self.v),
            "tau": self.tau,
            "theta": self.theta,
            "p": self.p,
            "ell": self.ell,
        }


@dataclass
class Chain:
    spec: ChainSpec | None
    start: RBox
    target: RBox
    direct: bool
    delta: Fraction | None = None
    k: int | None = None
    l: int | None = None
    sigma: Fraction | None = None
    epsilon: Fraction = Fraction(1)
    blocks: list = dc_field(default_factory=list)
    overlaps: list = dc_field(default_factory=list)
    start_tiles: list = dc_field(default_factory=list)
    target_tiles: list = dc_field(default_factory=list)
    aux: tuple | None = None
    lower_chains: list = dc_field(default_factory=list)
    upper_chains: list = dc_field(default_factory=list)

    def companions(self, j: int):
        """Backward and forward companions of block ``j``."""
        b = self.blocks[j]
        return b.shift(dt=-self.sigma), b.shift(dt=self.sigma)

    def sequence(self) -> list:
        """``P_0, S_1, P_1, ..., S_N, P_N`` for a direct chain."""
        out = [self.blocks[0]]
        for s, b in zip(self.overlaps, self.blocks[1:]):
            out += [s, b]
        return out

    def to_dict(self) -> dict:
        def rb(b):
            return b.to_box().to_dict()

        out = {
            "spec": None if self.spec is None else self.spec.to_dict(),
            "direct": self.direct,
            "delta": None if self.delta is None else float(self.delta),
            "k": self.k,
            "l": self.l,
            "sigma": None if self.sigma is None else float(self.sigma),
            "epsilon": float(self.epsilon),
        }
        if self.direct:
            out["blocks"] = [rb(b) for b in self.blocks]
            out["overlaps"] = [rb(s) for s in self.overlaps]
        else:
            out["aux"] = [rb(b) for b in self.aux]
            out["tile_count"] = [len(self.start_tiles), len(self.target_tiles)]
            out["sub_chain_k_max"] = max(c.k for c in self.lower_chains + self.upper_chains)
            out["sub_chain_l_max"] = max(c.l for c in self.lower_chains + self.upper_chains)
        return out


def _overlap_fraction(ratios, k: int) -> Fraction:
    d = Fraction(1)
    for r in ratios:
        d *= 1 - r / k
    return d


def spatial_steps(v, ell) -> tuple:
    """Fewest equal steps ``k`` whose consecutive cubes overlap in at least a quarter, and that overlap."""
    ratios = [abs(Fraction(a)) / Fraction(ell) for a in v]
    if not any(ratios):
        return 0, Fraction(1)
    k = max(1, math.ceil(max(ratios)))
    while True:
        if all(r < k for r in ratios):
            d = _overlap_fraction(ratios, k)
            if d >= DELTA_MIN:
                return k, d
        k += 1


def _direct_feasible(v, ell: Fraction, dt: Fraction, duration: Fraction, height: Fraction):
    """Return ``(k, delta, N, sigma)`` or None when no direct chain is allowed."""
    tau = dt / height
    if float(tau) < C0 * math.hypot(*map(float, v)) / float(ell):
        return None
    k, delta = spatial_steps(v, ell)
    theta = duration / height
    n0 = math.floor(dt / (2 * (1 + theta) * height))
    n_links = max(k, n0, 1)
    sigma = dt / (2 * n_links)
    if not sigma > duration:
        return None
    return k, delta, n_links, sigma


def _direct(start: RBox, v, dt: Fraction, ell: Fraction, height: Fraction, spec=None) -> Chain | None:
    got = _direct_feasible(v, ell, dt, start.duration, height)
    if got is None:
        return None
    k, delta, n_links, sigma = got
    blocks, overlaps = [], []
    for j in range(n_links + 1):
        frac = Fraction(min(j, k), k) if k else Fraction(0)
        blocks.append(start.shift(tuple(a * frac for a in v), 2 * j * sigma))
    for j in range(1, n_links + 1):
        s = blocks[j - 1].shift(dt=sigma).intersect(blocks[j].shift(dt=-sigma))
        overlaps.append(s)
    return Chain(
        spec, start, start.shift(tuple(v), dt), True, delta, k, n_links - k, sigma,
        blocks=blocks, overlaps=overlaps,
    )


def _tiles(b: RBox, m: int, time_splits: int) -> list:
    side = 1 << m
    n = len(b.lo)
    w = [x / side for x in b.widths]
    tw = b.duration / time_splits
    out = []
    for idx in product(range(side), repeat=n):
        lo = tuple(b.lo[a] + idx[a] * w[a] for a in range(n))
        hi = tuple(b.lo[a] + (idx[a] + 1) * w[a] for a in range(n))
        for j in range(time_splits):
            out.append(RBox(lo, hi, b.t_lo + j * tw, b.t_lo + (j + 1) * tw))
    return out


def _refined(spec: ChainSpec, start: RBox, target: RBox, m: int) -> Chain | None:
    eps = Fraction(1, 1 << m)
    ell = Fraction(spec.ell)
    ell_e = ell * eps
    height_e = Fraction(float(ell_e) ** spec.p)
    # time tiles: enough that each tile is no longer than theta * (eps ell)**p
    splits = 1 << math.ceil(m * spec.p)
    if (1 << (m * spec.start.n)) * splits > MAX_TILES:
        raise DomainError(f"refinement 2**-{m} needs more than {MAX_TILES} tiles per endpoint")
    a_tiles = _tiles(start, m, splits)
    b_tiles = _tiles(target, m, splits)
    proto = a_tiles[0]
    gap = 2 * (1 - proto.duration / height_e) * height_e
    (cs, ct), (ce, cte) = start.center(), target.center()
    mid_x = tuple((a + b) / 2 for a, b in zip(cs, ce))
    mid_t = (ct + cte) / 2
    half_w = proto.widths[0] / 2
    lo = tuple(c - half_w for c in mid_x)
    hi = tuple(c + half_w for c in mid_x)
    aux_lo = RBox(lo, hi, mid_t - gap / 2 - proto.duration, mid_t - gap / 2)
    aux_hi = RBox(lo, hi, mid_t + gap / 2, mid_t + gap / 2 + proto.duration)
    lower, upper = [], []
    for a in a_tiles:
        c = _direct(a, tuple(x - y for x, y in zip(aux_lo.lo, a.lo)), aux_lo.t_lo - a.t_lo, ell_e, height_e)
        if c is None:
            return None
        lower.append(c)
    for b in b_tiles:
        c = _direct(aux_hi, tuple(x - y for x, y in zip(b.lo, aux_hi.lo)), b.t_lo - aux_hi.t_lo, ell_e, height_e)
        if c is None:
            return None
        upper.append(c)
    return Chain(
        spec, start, target, False, epsilon=eps, start_tiles=a_tiles, target_tiles=b_tiles,
        aux=(aux_lo, aux_hi), lower_chains=lower, upper_chains=upper,
    )


def _first_refinement(spec: ChainSpec) -> int:
    speed = math.hypot(*spec.v)
    if speed == 0:
        return 1
    bound = (spec.ell * spec.tau / (C0 * speed)) ** (1.0 / (spec.p - 1.0))
    return max(1, math.ceil(-math.log2(bound)))


def build_chain(spec: ChainSpec, cylinder: Box | None = None) -> Chain:
    start = RBox.from_box(spec.start)
    height = Fraction(spec.height)
    v = tuple(map(Fraction, spec.v))
    dt = Fraction(spec.tau) * height
    chain = _direct(start, v, dt, Fraction(spec.ell), height, spec)
    if chain is None:
        m = _first_refinement(spec)
        while chain is None and m <= MAX_REFINEMENT:
            chain = _refined(spec, start, start.shift(v, dt), m)
            m += 1
        if chain is None:
            raise DomainError(f"no refinement up to 2**-{MAX_REFINEMENT} gives direct sub-chains")
    if cylinder is not None:
        outer = RBox.from_box(cylinder)
        for b in _all_boxes(chain):
            if b.intersect(outer) != b:
                raise DomainError(f"chain box {b.to_box()} leaves the cylinder")
    return chain


def sample_specs(rng, count: int, ell: float = 1.0, p: float = 2.0, n: int = 1) -> tuple:
    """``count`` random specs that admit a chain, and how many draws hit ``DomainError``.

    ``theta`` is uniform on ``[0.2, 0.8]``, ``tau`` on ``(max(theta, 1 - theta), 4]``
    and each displacement component on ``[-ell, ell]``.
    """
    specs, rejected = [], 0
    while len(specs) < count:
        theta = float(rng.uniform(0.2, 0.8))
        tau = float(rng.uniform(max(theta, 1 - theta) + 0.02, 4.0))
        v = tuple(float(a) for a in rng.uniform(-ell, ell, n))
        spec = ChainSpec.from_rectangle((0.0,) * n, 0.0, ell, theta, v, tau, p)
        try:
            build_chain(spec)
        except DomainError:
            rejected += 1
            continue
        specs.append(spec)
    return specs, rejected


def _all_boxes(chain: Chain):
    if chain.direct:
        yield from chain.blocks
        yield from chain.overlaps
    else:
        yield from chain.aux
        for c in chain.lower_chains + chain.upper_chains:
            yield from _all_boxes(c)


def check_chain(chain: Chain) -> dict:
    """Exact structural checks; every entry is a bool except the counters."""
    if not chain.direct:
        subs = [check_chain(c) for c in chain.lower_chains + chain.upper_chains]
        vol = sum((t.volume for t in chain.start_tiles), Fraction(0))
        vol_t = sum((t.volume for t in chain.target_tiles), Fraction(0))
        aux_lo, aux_hi = chain.aux
        out = {
            "tiles_partition": vol == chain.start.volume and vol_t == chain.target.volume,
            "aux_ordered": aux_hi.t_lo > aux_lo.t_hi,
            "sub_chains_direct": all(c.direct for c in chain.lower_chains + chain.upper_chains),
            "sub_chains_valid": all(s["valid"] for s in subs),
            "sub_chain_count": len(subs),
        }
        out["valid"] = all(v for k, v in out.items() if isinstance(v, bool))
        return out
    blocks, overlaps, sigma = chain.blocks, chain.overlaps, chain.sigma
    base = blocks[0].volume
    overlap_ok = True
    for j, s in enumerate(overlaps, start=1):
        want = chain.delta if j <= chain.k else Fraction(1)
        p_minus, p_plus = blocks[j].shift(dt=-sigma), blocks[j - 1].shift(dt=sigma)
        overlap_ok &= s == p_plus.intersect(p_minus) and s.volume / base == want
    schedule_ok = all(
        s.t_lo - b.t_lo == sigma and n.t_lo - s.t_lo == sigma
        for b, s, n in zip(blocks, overlaps, blocks[1:])
    )
    speed = math.hypot(*map(float, (t - s for t, s in zip(chain.target.lo, chain.start.lo))))
    ell = float(chain.start.widths[0])
    out = {
        "endpoints": blocks[0] == chain.start and blocks[-1] == chain.target,
        "overlaps": overlap_ok,
        "schedule": schedule_ok,
        "positive_gaps": sigma > blocks[0].duration,
        "translates": all(b.widths == blocks[0].widths and b.duration == blocks[0].duration for b in blocks),
        "k_bound": chain.k <= 4 * speed / ell + 1,
        "delta_min": chain.delta >= DELTA_MIN,
        "delta_in_range": DELTA_MIN <= chain.delta <= Fraction(3, 4),
    }
    # delta above 3/4 is forced when |v| < ell / 4; it is reported, not part of validity
    out["valid"] = all(v for k, v in out.items() if k != "delta_in_range")
    return out


def _samples(f: SampledField, b: RBox) -> np.ndarray:
    box = b.to_box()
    if not f.grid.contains(box):
        raise DomainError(f"box {box} leaves the sampled cylinder")
    s = f.samples(box).ravel()
    if np.isnan(s).any():
        raise UndefinedSamples(f"box {box} contains undefined samples")
    return s


def _nonempty(f: SampledField, boxes) -> tuple:
    """Samples of the boxes that hold any, and how many boxes were dropped.

    Dropping an intermediate set only shortens the telescoping sequence, so
    the bound stays valid; the two ends must not be empty.
    """
    seq = [_samples(f, b) for b in boxes]
    if seq[0].size == 0 or seq[-1].size == 0:
        raise InsufficientResolution([0], "a chain end holds no lattice samples")
    kept = [s for s in seq if s.size]
    return kept, len(seq) - len(kept)


def _direct_bound(f: SampledField, chain: Chain) -> tuple:
    seq, dropped = _nonempty(f, chain.sequence())
    total = 0.0
    for a, b in zip(seq, seq[1:]):
        total += double_oscillation_samples(a, b)
    return total, dropped


def chain_bound(f: SampledField, chain: Chain) -> dict:
    """Bound plus bookkeeping: how many chain sets held no lattice samples."""
    if chain.direct:
        value, dropped = _direct_bound(f, chain)
        return {"bound": value, "dropped_sets": dropped, "empty_tiles": 0}
    lo, hi = chain.aux
    (a, b), _ = _nonempty(f, [lo, hi])
    total = double_oscillation_samples(a, b)
    dropped = empty = 0
    for tiles, subs in ((chain.start_tiles, chain.lower_chains), (chain.target_tiles, chain.upper_chains)):
        counts = [_samples(f, t).size for t in tiles]
        whole = sum(counts)
        if whole == 0:
            raise InsufficientResolution([0], "an endpoint box holds no lattice samples")
        for c, sub in zip(counts, subs):
            if not c:
                empty += 1
                continue
            value, d = _direct_bound(f, sub)
            total += c / whole * value
            dropped += d
    return {"bound": total, "dropped_sets": dropped, "empty_tiles": empty}


def chain_oscillation(f: SampledField, chain: Chain) -> float:
    """Upper bound for the double average of ``(u(x) - u(y))+`` over start x target."""
    return chain_bound(f, chain)["bound"]


def direct_oscillation(f: SampledField, chain: Chain) -> float:
    """The quantity the chain bounds, computed straight from the endpoint samples."""
    return double_oscillation_samples(_samples(f, chain.start), _samples(f, chain.target))


def dump_json(chain: Chain, path) -> None:
    with open(path, "w") as fh:
        json.dump(chain.to_dict(), fh, indent=2)
