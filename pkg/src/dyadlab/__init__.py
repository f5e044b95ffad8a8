"""Numerical laboratory for dyadic multilinear harmonic analysis on finite lattices."""

from .lattice import (
    Cube,
    GridFunction,
    HaarIndex,
    HaarPyramid,
    Lattice,
    average,
    build_lattice,
    expect,
    expect_k,
    grid_function_from_json,
    grid_function_to_json,
    haar,
    integral,
    l2_inner,
    lp_norm,
    martingale_diff,
    martingale_diff_k,
    pairing,
    random_grid_function,
    sublattice,
)

__all__ = [
    "Cube",
    "GridFunction",
    "HaarIndex",
    "HaarPyramid",
    "Lattice",
    "average",
    "build_lattice",
    "expect",
    "expect_k",
    "grid_function_from_json",
    "grid_function_to_json",
    "haar",
    "integral",
    "l2_inner",
    "lp_norm",
    "martingale_diff",
    "martingale_diff_k",
    "pairing",
    "random_grid_function",
    "sublattice",
]

__version__ = "0.1.0"
