import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from pbmo import oneside1d as od
from pbmo.geometry import ParameterError
from pbmo.maximal import ConfigurationError

values = arrays(np.float64, st.integers(8, 48), elements=st.floats(-100, 100, allow_nan=False))


def test_signal_basics():
    u = od.Signal.sample(lambda x: x, 0.0, 1.0, 4)
    assert u.dx == 0.25 and np.allclose(u.x, [0.125, 0.375, 0.625, 0.875])
    assert u.integral(0.0, 1.0) == pytest.approx(0.5)
    # piecewise-constant integral over partial cells
    assert u.integral(0.1, 0.3) == pytest.approx(0.15 * 0.125 + 0.05 * 0.375)
    assert u.mean_interval(0.0, 0.5) == pytest.approx(0.25)


def test_window_cells():
    assert od.window_cells(0.25, 0.0625) == 3
    assert od.window_cells(0.26, 0.0625) == 4
    assert od.window_cells(0.05, 0.0625) == 0


@settings(max_examples=50, deadline=None)
@given(values, st.lists(st.integers(2, 6), min_size=1, max_size=3))
def test_os_maximal_brute(v, cells):
    u = od.Signal(0.0, 1.0, v)
    ladder = [c * u.dx for c in cells]
    U = od.os_maximal(u, ladder).values
    for i in range(u.size):
        best = None
        for h in ladder:
            m = od.window_cells(h, u.dx)
            if m >= 1 and i - m >= 0:
                mean = float(sum(map(Fraction, v[i - m:i].tolist()), Fraction(0)) / m)
                best = mean if best is None else max(best, mean)
        if best is None:
            assert math.isnan(U[i])
        else:
            assert U[i] == best


def test_defined_part():
    u = od.Signal(0.0, 1.0, np.array([np.nan, np.nan, 1.0, 2.0, 3.0]))
    d, start = od.defined_part(u)
    assert start == 2 and np.array_equal(d.values, [1.0, 2.0, 3.0])
    assert d.x_lo == pytest.approx(0.4)


def brute_norm(v, fam):
    best = 0.0
    for m in fam.lengths:
        for s in fam.starts(m, v.size):
            plus = sum(map(Fraction, v[s + m:s + 2 * m].tolist()), Fraction(0)) / m
            val = sum((max(Fraction(x) - plus, Fraction(0)) for x in v[s:s + m].tolist()), Fraction(0)) / m
            best = max(best, float(val))
    return best


@settings(max_examples=50, deadline=None)
@given(values)
def test_norm_brute(v):
    u = od.Signal(0.0, 1.0, v)
    fam = od.IntervalFamily.dyadic(u.size)
    assert od.os_bmo_norm(u, fam).value == pytest.approx(brute_norm(v, fam), rel=1e-12, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(values)
def test_double_norm_dominates(v):
    # Jensen: mean over I of (u - mean_{I+} u)+ <= mean over I x I+ of (u(s) - u(t))+
    u = od.Signal(0.0, 1.0, v)
    fam = od.IntervalFamily.dyadic(u.size)
    assert od.os_bmo_norm(u, fam).value <= od.os_double_norm(u, fam).value + 1e-9


def test_increasing_signal_zero_norm():
    u = od.Signal.sample(np.exp, -1.0, 1.0, 256)
    fam = od.IntervalFamily.dyadic(u.size)
    assert od.os_bmo_norm(u, fam).value == 0.0 and od.os_double_norm(u, fam).value == 0.0


def test_family_validation():
    with pytest.raises(ConfigurationError):
        od.IntervalFamily((), 1)
    assert od.IntervalFamily.dyadic(32).lengths == (2, 4, 8, 16)


def test_steps_for_and_branches():
    assert od.steps_for(1.0, 0.6) == 1
    assert od.steps_for(1.0, 0.3) == 3
    tr = od.interval_chain(0.0, 0.6, 1.0)
    assert tr.branches == ["case_k1"]
    tr = od.interval_chain(0.0, 0.3, 1.0)
    assert tr.branches[0] == "case_k" and tr.terminated_by in ("case_k1", "disjoint")


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 0.5), st.floats(0.001, 0.999), st.floats(-0.4, 0.4))
def test_interval_chain_properties(h, frac, x):
    u = od.Signal.sample(lambda s: -np.log(np.maximum(np.abs(s), 1e-3)), -1.0, 1.0, 512)
    tr = od.interval_chain(x, x + frac * h, h, u)
    chk = od.check_trace(tr)
    assert all(chk.values()), chk
    assert len(tr.pairs) <= 2


def test_interval_chain_arguments():
    with pytest.raises(ParameterError):
        od.interval_chain(0.0, 0.0, 1.0)
    with pytest.raises(ParameterError):
        od.interval_chain(0.0, 2.0, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_cz_contracts(seed, gap, extra):
    rng = np.random.default_rng(seed)
    u = od.Signal(0.0, 1.0, rng.standard_normal(128) + rng.uniform(-2, 2) * np.linspace(0, 1, 128))
    comp = float(od._oracle_mean(u, 64, 128))
    dec = od.os_cz(u, 0, 32, comp + gap)
    rep = od.verify_cz(dec, u)
    assert rep["on_box_ok"] and rep["disjoint"] and rep["maximal"] and rep["reconstruction_error"] <= 1e-12
    higher = od.os_cz(u, 0, 32, comp + gap + extra)
    assert np.all(~higher.stopped_mask() | dec.stopped_mask())


def test_cz_precondition():
    u = od.Signal(0.0, 1.0, np.arange(64.0))
    with pytest.raises(od.PreconditionError):
        od.os_cz(u, 0, 16, 0.0)


def test_bad_part_constant():
    u = od.Signal.sample(lambda x: (x < 0).astype(float), -1.0, 1.0, 256)
    fam = od.IntervalFamily((8, 16, 32), 8)
    norm = od.os_bmo_norm(u, fam).value
    out = od.bad_part_constant(u, fam, norm)
    assert out["constant"] >= 0 and math.isfinite(out["constant"])
    with pytest.raises(ParameterError):
        od.bad_part_constant(u, fam, 0.0)
