"""Lattice estimators and checks for one-sided parabolic BMO."""

__version__ = "0.1.0"

__all__ = [
    "chains",
    "cli",
    "corpus",
    "czdecomp",
    "dyadic",
    "field",
    "geometry",
    "jn",
    "maximal",
    "oneside1d",
    "seminorms",
]
