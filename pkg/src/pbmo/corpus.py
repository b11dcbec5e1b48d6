"""Closed-form test functions with known one-sided oscillation behaviour.

Space-time entries take ``(x, t)`` with ``x`` a tuple of open-mesh arrays;
line entries take a single array.  Flags are claims the test-suite checks,
never facts the library relies on.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .field import GridSpec, SampledField, SamplingError, sample
from .geometry import ParameterError
from .oneside1d import Signal

FLAG_NAMES = (
    "nonnegative",
    "increasing_in_time",
    "expected_pbmo_minus_zero",
    "expected_divergent_abs",
    "time_independent",
)

HEAT_T_MIN = 0.1
HEAT_LIFT = 3.0


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    description: str
    kind: str  # "space-time" or "line"
    evaluator: Callable
    domain: dict  # default sampling domain
    valid: dict  # admissible domain; None bounds are unbounded
    flags: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "kind": self.kind,
            "domain": self.domain,
            "valid": self.valid,
            "flags": {k: bool(self.flags.get(k, False)) for k in FLAG_NAMES},
        }


def _flags(*names):
    return {k: k in names for k in FLAG_NAMES}


def _sq_norm(x):
    return sum(np.asarray(a) ** 2 for a in x)


def _clipped_log_abs(x, h):
    return np.log(np.maximum(np.abs(x), h))


def _heat(x, t, n):
    return HEAT_LIFT - 0.5 * n * np.log(4 * math.pi * t) - _sq_norm(x) / (4 * t)


_ALL = {"x": [None, None], "t": [None, None]}
_UNIT = {"x": [-1.0, 1.0], "t": [-1.0, 1.0]}


def _entries() -> dict:
    es = [
        CorpusEntry(
            "exp_t", "u = exp(t)", "space-time",
            lambda x, t, h: np.exp(t) + 0 * x[0],
            {"x": [-1.0, 1.0], "t": [-2.0, 2.0]}, _ALL,
            _flags("nonnegative", "increasing_in_time", "expected_pbmo_minus_zero"),
        ),
        CorpusEntry(
            "sinh_t", "u = exp(t) - exp(-t)", "space-time",
            lambda x, t, h: np.exp(t) - np.exp(-t) + 0 * x[0],
            {"x": [-1.0, 1.0], "t": [-2.0, 2.0]}, _ALL,
            _flags("increasing_in_time", "expected_pbmo_minus_zero", "expected_divergent_abs"),
        ),
        CorpusEntry(
            "abs_sinh_t", "u = |exp(t) - exp(-t)|; widen the time window to see growth", "space-time",
            lambda x, t, h: np.abs(np.exp(t) - np.exp(-t)) + 0 * x[0],
            {"x": [-2.0, 2.0], "t": [-2.0, 2.0]}, _ALL,
            _flags("nonnegative"),
        ),
        CorpusEntry(
            "log_heat", f"u = log(e^{HEAT_LIFT:g} W), W the heat kernel, t >= {HEAT_T_MIN}", "space-time",
            lambda x, t, h: _heat(x, t, len(x)),
            {"x": [-1.0, 1.0], "t": [HEAT_T_MIN, HEAT_T_MIN + 2.0]},
            {"x": [None, None], "t": [HEAT_T_MIN, None]},
            _flags("nonnegative"),
        ),
        CorpusEntry(
            "log_abs_x", "u = log|x_1| with |x_1| clipped below at the spatial step", "space-time",
            lambda x, t, h: _clipped_log_abs(x[0], h) + 0 * t,
            _UNIT, _ALL,
            _flags("time_independent"),
        ),
        CorpusEntry(
            "log_abs_x_lifted", "clipped log|x_1| + 10", "space-time",
            lambda x, t, h: _clipped_log_abs(x[0], h) + 10.0 + 0 * t,
            _UNIT, _ALL,
            _flags("nonnegative", "time_independent"),
        ),
        CorpusEntry(
            "step_t", "u = 1 for t < 0, else 0", "space-time",
            lambda x, t, h: (t < 0).astype(float) + 0 * x[0],
            _UNIT, _ALL,
            _flags("nonnegative"),
        ),
        CorpusEntry(
            "constant", "u = 7", "space-time",
            lambda x, t, h: 7.0 + 0 * x[0] + 0 * t,
            _UNIT, _ALL,
            _flags("nonnegative", "increasing_in_time", "expected_pbmo_minus_zero", "time_independent"),
        ),
        CorpusEntry(
            "ramp_t", "u = t", "space-time",
            lambda x, t, h: t + 0 * x[0],
            _UNIT, _ALL,
            _flags("increasing_in_time", "expected_pbmo_minus_zero"),
        ),
        # signals on the line; "time" is the line coordinate
        CorpusEntry(
            "step_x", "u = 1 for x < 0, else 0", "line",
            lambda x, h: (x < 0).astype(float),
            {"x": [-1.0, 1.0]}, {"x": [None, None]},
            _flags("nonnegative"),
        ),
        CorpusEntry(
            "neg_log_abs_x", "u = -log|x| clipped at the step", "line",
            lambda x, h: -_clipped_log_abs(x, h),
            {"x": [-1.0, 1.0]}, {"x": [None, None]},
            _flags("nonnegative"),
        ),
        CorpusEntry(
            "sqrt_neg_x", "u = sqrt(max(-x, 0)), nonincreasing", "line",
            lambda x, h: np.sqrt(np.maximum(-x, 0.0)),
            {"x": [-1.0, 1.0]}, {"x": [None, None]},
            _flags("nonnegative"),
        ),
        CorpusEntry(
            "exp_x", "u = exp(x)", "line",
            lambda x, h: np.exp(x),
            {"x": [-1.0, 1.0]}, {"x": [None, None]},
            _flags("nonnegative", "increasing_in_time", "expected_pbmo_minus_zero"),
        ),
    ]
    return {e.name: e for e in es}


ENTRIES = _entries()


def list_entries(kind: str | None = None) -> list:
    return [e for e in ENTRIES.values() if kind is None or e.kind == kind]


def get_entry(name: str) -> CorpusEntry:
    try:
        return ENTRIES[name]
    except KeyError:
        raise ParameterError(f"unknown corpus entry {name!r}; known: {sorted(ENTRIES)}") from None


def _inside(lo, hi, bounds) -> bool:
    a, b = bounds
    return (a is None or lo >= a) and (b is None or hi <= b)


def default_grid(name: str, nx: int, nt: int, n: int = 1) -> GridSpec:
    e = get_entry(name)
    if e.kind != "space-time":
        raise ParameterError(f"{name} is a line signal")
    return GridSpec.uniform(tuple(e.domain["x"]), tuple(e.domain["t"]), nx, nt, n)


def evaluate_entry(name: str, grid: GridSpec) -> SampledField:
    e = get_entry(name)
    if e.kind != "space-time":
        raise ParameterError(f"{name} is a line signal; use evaluate_signal")
    c = grid.cylinder
    ok = all(_inside(lo, hi, e.valid["x"]) for lo, hi in zip(c.x_lo, c.x_hi)) and _inside(c.t_lo, c.t_hi, e.valid["t"])
    if not ok:
        raise SamplingError(f"grid {grid.to_dict()} leaves the valid domain {e.valid} of {name}")
    h = grid.hx[0]
    return sample(lambda x, t: e.evaluator(x, t, h), grid)


def evaluate_signal(name: str, n: int, x_range=None) -> Signal:
    e = get_entry(name)
    if e.kind != "line":
        raise ParameterError(f"{name} is a space-time entry; use evaluate_entry")
    lo, hi = e.domain["x"] if x_range is None else x_range
    if not _inside(lo, hi, e.valid["x"]):
        raise SamplingError(f"interval [{lo}, {hi}] leaves the valid domain of {name}")
    h = (hi - lo) / n
    return Signal.sample(lambda x: e.evaluator(x, h), lo, hi, n)


def manifest() -> list:
    return [e.to_dict() for e in ENTRIES.values()]


def write_manifest(path) -> None:
    with open(path, "w") as fh:
        json.dump({"schema": 1, "entries": manifest()}, fh, indent=2)
