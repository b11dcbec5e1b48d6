import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pbmo import chains
from pbmo.chains import ChainSpec, DomainError, RBox, build_chain, chain_bound, check_chain, direct_oscillation
from pbmo.field import GridSpec, InsufficientResolution, SampledField
from pbmo.geometry import Box, OrderError, ParameterError


def grid_for(ch, nx=64, nt=256):
    s, t = ch.start.to_box(), ch.target.to_box()
    return GridSpec.uniform((min(s.x_lo[0], t.x_lo[0]) - 0.05, max(s.x_hi[0], t.x_hi[0]) + 0.05),
                            (s.t_lo - 0.01, t.t_hi + 0.01), nx, nt)


def test_rbox_exact():
    b = RBox.from_box(Box((0.1,), (0.3,), 0.0, 0.7))
    assert b.lo == (Fraction(0.1),) and b.duration == Fraction(0.7)
    assert b.shift((Fraction(1),), Fraction(1)).shift((Fraction(-1),), Fraction(-1)) == b


def test_spec_validation():
    with pytest.raises(ParameterError):
        ChainSpec.from_rectangle((0.0,), 0.0, 1.0, 0.0, (0.0,), 2.0)
    with pytest.raises(ParameterError):
        ChainSpec.from_rectangle((0.0,), 0.0, 1.0, 0.5, (0.0,), 0.4)
    # target would start before the start box ends
    with pytest.raises(OrderError):
        ChainSpec.from_rectangle((0.0,), 0.0, 1.0, 0.8, (0.0,), 0.5)


def test_direct_chain_stationary():
    spec = ChainSpec.from_rectangle((0.0,), 0.0, 1.0, 0.5, (0.0,), 3.0)
    ch = build_chain(spec)
    assert ch.direct and ch.k == 0 and ch.delta == 1 and ch.l >= 1
    chk = check_chain(ch)
    assert chk["valid"] and not chk["delta_in_range"]
    assert ch.target == RBox.from_box(spec.target())


def test_direct_chain_moving():
    ch = build_chain(ChainSpec.from_rectangle((0.0,), 0.0, 1.0, 0.5, (1.0,), 6.0))
    chk = check_chain(ch)
    assert ch.direct and chk["valid"] and chk["delta_in_range"]
    seq = ch.sequence()
    assert seq[0] == ch.start and seq[-1] == ch.target and len(seq) == 2 * len(ch.blocks) - 1


def test_refined_chain():
    ch = build_chain(ChainSpec.from_rectangle((0.0,), 0.0, 1.0, 0.5, (0.5,), 1.5))
    assert not ch.direct and ch.epsilon < 1
    chk = check_chain(ch)
    assert chk["valid"] and chk["tiles_partition"] and chk["sub_chains_direct"]


def test_too_fine_refinement_is_refused():
    with pytest.raises(DomainError):
        build_chain(ChainSpec.from_rectangle((0.0,), 0.0, 1.0, 0.5, (1.0,), 0.52))


def test_cylinder_check():
    spec = ChainSpec.from_rectangle((0.0,), 0.0, 1.0, 0.5, (0.0,), 3.0)
    with pytest.raises(DomainError):
        build_chain(spec, Box((-1.0,), (1.0,), -1.0, 1.0))


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 10_000))
def test_soundness_random(seed):
    rng = np.random.default_rng(seed)
    (spec,), _ = chains.sample_specs(rng, 1)
    ch = build_chain(spec)
    assert check_chain(ch)["valid"]
    g = grid_for(ch)
    f = SampledField(g, rng.standard_normal(g.shape) * 2 + np.cos(2 * g.t)[None, :])
    try:
        out = chain_bound(f, ch)
    except InsufficientResolution:
        g = grid_for(ch, 256, 1024)
        f = SampledField(g, rng.standard_normal(g.shape) * 2 + np.cos(2 * g.t)[None, :])
        out = chain_bound(f, ch)
    assert out["bound"] >= direct_oscillation(f, ch) - 1e-10


def test_bound_vanishes_for_increasing_field():
    ch = build_chain(ChainSpec.from_rectangle((0.0,), 0.0, 1.0, 0.5, (0.5,), 4.0))
    g = grid_for(ch)
    f = SampledField(g, np.repeat(g.t[None, :], g.nx[0], 0))
    assert chain_bound(f, ch)["bound"] == 0.0
    assert direct_oscillation(f, ch) == 0.0


def test_dump(tmp_path):
    ch = build_chain(ChainSpec.from_rectangle((0.0,), 0.0, 1.0, 0.5, (0.3,), 3.0))
    path = tmp_path / "chain.json"
    chains.dump_json(ch, path)
    data = json.loads(path.read_text())
    assert data["direct"] is True and data["k"] == ch.k
