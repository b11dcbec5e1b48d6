import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from pbmo.field import GridSpec, SampledField, time_reverse
from pbmo.geometry import Box, OrderError, ParabolicRectangle, ParameterError, lower_part, upper_part
from pbmo.maximal import ConfigurationError
from pbmo.seminorms import (
    RectangleFamily,
    bmo_variant_seminorm,
    double_oscillation,
    double_oscillation_samples,
    objective,
    optimal_constant,
    pbmo_seminorm,
)

samples = arrays(np.float64, st.integers(1, 30), elements=st.floats(-1e3, 1e3, allow_nan=False))


def exact_objective(lo, up, a):
    a = Fraction(a)
    s1 = sum((Fraction(x) - a for x in lo if Fraction(x) > a), Fraction(0)) / len(lo)
    s2 = sum((a - Fraction(y) for y in up if Fraction(y) < a), Fraction(0)) / len(up)
    return s1 + s2


@settings(max_examples=200, deadline=None)
@given(samples, samples)
def test_optimal_constant_is_leftmost_minimiser(lo, up):
    a, v = optimal_constant(lo, up)
    kinks = sorted(set(lo.tolist()) | set(up.tolist()))
    values = [exact_objective(lo, up, k) for k in kinks]
    best = min(values)
    assert exact_objective(lo, up, a) == best
    assert a == kinks[values.index(best)]
    assert math.isclose(v, float(best), rel_tol=1e-12, abs_tol=1e-9)


@settings(max_examples=200, deadline=None)
@given(samples, samples)
def test_double_oscillation_quadratic_oracle(x, y):
    want = sum((max(Fraction(a) - Fraction(b), Fraction(0)) for a in x for b in y), Fraction(0)) / (x.size * y.size)
    got = double_oscillation_samples(x, y)
    assert math.isclose(got, float(want), rel_tol=1e-10, abs_tol=1e-9)


def test_objective_value():
    assert objective([3.0, 1.0], [0.0, 2.0], 1.0) == 1.0 + 0.5


def test_empty_samples_rejected():
    with pytest.raises(ParameterError):
        optimal_constant([], [1.0])
    with pytest.raises(ParameterError):
        double_oscillation_samples([1.0], [])


def field(values, t_range=(0.0, 1.0)):
    g = GridSpec.uniform((0.0, 1.0), t_range, values.shape[0], values.shape[1])
    return SampledField(g, values)


def test_double_oscillation_order():
    f = field(np.zeros((8, 8)))
    a, b = Box(0, 1, 0.0, 0.5), Box(0, 1, 0.5, 1.0)
    with pytest.raises(OrderError):
        double_oscillation(f, a, b)


def test_family_enumeration():
    g = GridSpec.uniform((0.0, 1.0), (0.0, 1.0), 16, 16)
    fam = RectangleFamily((0.25, 0.5), stride=2)
    rects = list(fam.rectangles(g))
    assert rects and all(g.cylinder.contains(r.full(), tol=1e-9) for r in rects)
    assert [r.ell for r in rects] == sorted(r.ell for r in rects)


def test_family_validation():
    with pytest.raises(ConfigurationError):
        RectangleFamily(())
    with pytest.raises(ParameterError):
        RectangleFamily((0.5,), stride=0)


def brute_pbmo(f, fam):
    best = 0.0
    for r in fam.rectangles(f.grid):
        lo = f.samples(lower_part(r, fam.gamma)).ravel()
        up = f.samples(upper_part(r, fam.gamma)).ravel()
        kinks = sorted(set(lo.tolist()) | set(up.tolist()))
        best = max(best, float(min(exact_objective(lo, up, k) for k in kinks)))
    return best


@pytest.mark.parametrize("seed", range(3))
def test_pbmo_matches_exact_brute_force(seed):
    rng = np.random.default_rng(seed)
    f = field(rng.standard_normal((8, 32)))
    fam = RectangleFamily((0.25, 0.35, 0.5), stride=2)
    est = pbmo_seminorm(f, fam)
    assert est.value == brute_pbmo(f, fam)
    # the witness reproduces the value
    r = est.witness
    lo = f.samples(lower_part(r, fam.gamma)).ravel()
    up = f.samples(upper_part(r, fam.gamma)).ravel()
    assert math.isclose(objective(lo, up, est.constant), est.value, rel_tol=1e-12, abs_tol=1e-15)


def test_increasing_in_time_gives_zero():
    g = GridSpec.uniform((0.0, 1.0), (0.0, 1.0), 16, 32)
    f = SampledField(g, np.exp(g.t)[None, :].repeat(16, 0))
    fam = RectangleFamily((0.25, 0.5))
    assert pbmo_seminorm(f, fam).value == 0.0
    assert bmo_variant_seminorm(f, fam, 0.5, 1.5, "plus").value == 0.0
    assert bmo_variant_seminorm(f, fam, 0.5, 1.5, "minus_neg").value == 0.0
    assert pbmo_seminorm(f, fam, "plus").value > 0.0


def test_plus_direction_is_time_reversal():
    rng = np.random.default_rng(9)
    f = field(rng.standard_normal((8, 32)))
    fam = RectangleFamily((0.25, 0.5), stride=2)
    assert pbmo_seminorm(f, fam, "plus").value == pbmo_seminorm(time_reverse(f), fam).value


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_variants_never_exceed_pbmo(seed):
    rng = np.random.default_rng(seed)
    f = field(rng.standard_normal((8, 32)) * rng.uniform(0.01, 100))
    fam = RectangleFamily((0.25, 0.35), stride=2)
    a = pbmo_seminorm(f, fam).value
    assert bmo_variant_seminorm(f, fam, 0.5, 1.5, "plus").value <= a
    assert bmo_variant_seminorm(f, fam, 0.5, 1.5, "minus_neg").value <= a


def test_variant_exact_value():
    # one rectangle: past part all 2, companion all 0
    # 5 x 9 cells put a centre at (0.5, 1.0)
    v = np.zeros((5, 9))
    v[:, 0:2] = 2.0
    f = field(v, (0.0, 2.0))
    fam = RectangleFamily((1.0,), stride=1)
    est = bmo_variant_seminorm(f, fam, 0.5, 1.5, "plus")
    assert est.value == 2.0 and est.family_size == 1


def test_variant_parameters():
    f = field(np.zeros((8, 8)))
    fam = RectangleFamily((0.5,))
    with pytest.raises(ParameterError):
        bmo_variant_seminorm(f, fam, 0.5, 0.4)
    with pytest.raises(ParameterError):
        bmo_variant_seminorm(f, fam, 0.5, 1.5, "sideways")


def test_scaling_and_translation():
    rng = np.random.default_rng(4)
    f = field(rng.standard_normal((8, 32)))
    fam = RectangleFamily((0.25, 0.5), stride=2)
    a = pbmo_seminorm(f, fam).value
    assert pbmo_seminorm(field(4.0 * f.values), fam).value == 4.0 * a
    assert math.isclose(pbmo_seminorm(field(f.values + 3.0), fam).value, a, rel_tol=1e-12)
