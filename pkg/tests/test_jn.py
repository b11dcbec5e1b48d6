import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pbmo import jn
from pbmo.field import GridSpec, SampledField
from pbmo.geometry import Box, ParameterError
from pbmo.maximal import ConfigurationError
from pbmo.seminorms import RectangleFamily

GRID = GridSpec.uniform((0.0, 1.0), (0.0, 1.0), 16, 32)
FAM = RectangleFamily((0.25, 0.35, 0.5), stride=2)


def random_field(seed, scale=1.0):
    rng = np.random.default_rng(seed)
    return SampledField(GRID, rng.standard_normal(GRID.shape) * scale)


def test_exp_moment_direct():
    f = random_field(0)
    b = Box((0.0,), (0.5,), 0.0, 0.5)
    vals = f.samples(b).ravel()
    want = math.fsum(np.exp(2.0 * np.maximum(vals - 0.1, 0)).tolist()) / vals.size
    assert math.isclose(jn.exp_moment(f, b, 0.1, 2.0), want, rel_tol=1e-12)
    want_u = math.fsum(np.exp(2.0 * np.maximum(0.1 - vals, 0)).tolist()) / vals.size
    assert math.isclose(jn.exp_moment(f, b, 0.1, 2.0, "under"), want_u, rel_tol=1e-12)
    assert jn.exp_moment(f, b, 0.1, 0.0) == 1.0
    with pytest.raises(ParameterError):
        jn.exp_moment(f, b, 0.1, -1.0)
    with pytest.raises(ParameterError):
        jn.exp_moment(f, b, 0.1, 1.0, "sideways")


def test_overflow_guard():
    dev = np.array([0.0, 800.0])
    assert jn._moment(dev, 1.0) == math.inf
    got = jn._moment(np.array([0.0, 701.0]), 1.0)
    assert math.isclose(got, (1 + math.exp(701.0)) / 2, rel_tol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_moments_monotone_and_unit(seed):
    rep = jn.jn_scan(random_field(seed), FAM, c_grid=[0.0, 0.1, 0.5, 1.0, 3.0])
    assert rep.lower_moments[0] == 1.0 and rep.upper_moments[0] == 1.0
    assert all(np.diff(rep.lower_moments) >= 0) and all(np.diff(rep.upper_moments) >= 0)
    assert min(rep.lower_moments + rep.upper_moments) >= 1.0


@pytest.mark.parametrize("s", [0.25, 2.0, 8.0])
def test_scaling_exact_for_powers_of_two(s):
    f = random_field(5)
    grid = [0.0, 0.25, 1.0, 4.0]
    a = jn.jn_scan(f, FAM, c_grid=grid)
    b = jn.jn_scan(SampledField(GRID, s * f.values), FAM, c_grid=[c / s for c in grid])
    assert a.lower_moments == b.lower_moments and a.upper_moments == b.upper_moments
    assert b.b == s * a.b


def test_c_star_and_bracket():
    rep = jn.jn_scan(random_field(1), FAM, moment_cap=2.0)
    lo, hi = rep.bracket
    assert lo == rep.c_star
    assert hi is not None and hi > lo
    assert max(rep.lower_moments[rep.c_grid.index(hi)], rep.upper_moments[rep.c_grid.index(hi)]) > 2.0
    i = rep.c_grid.index(lo)
    assert max(rep.lower_moments[i], rep.upper_moments[i]) <= 2.0


def test_constant_field_never_exceeds_cap():
    rep = jn.jn_scan(SampledField(GRID, np.full(GRID.shape, 4.0)), FAM)
    assert rep.c_star == rep.c_grid[-1] and rep.bracket[1] is None


def test_bad_grids():
    with pytest.raises(ConfigurationError):
        jn.jn_scan(random_field(0), FAM, c_grid=[])
    with pytest.raises(ParameterError):
        jn.jn_scan(random_field(0), FAM, c_grid=[-1.0, 1.0])


def test_outputs(tmp_path):
    rep = jn.jn_scan(random_field(2), FAM, c_grid=[0.0, 1.0])
    jn.write_csv(rep, tmp_path / "jn.csv")
    rows = list(csv.reader(open(tmp_path / "jn.csv")))
    assert rows[0] == ["c", "worst_lower_moment", "worst_upper_moment"] and len(rows) == 3
    jn.dump_json(rep, tmp_path / "jn.json")
    assert json.loads((tmp_path / "jn.json").read_text())["family_size"] == rep.family_size
