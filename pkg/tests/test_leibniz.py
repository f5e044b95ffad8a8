import math

import numpy as np
import pytest

from dyadlab import leibniz as lb

EXPS = (4.0, 4.0, 2.0, 4.0, 4.0)


def test_plancherel():
    f = lb.random_torus_function(1, 64, band=10, scalar=True, seed=1)
    grid = float(np.mean(np.abs(f.values) ** 2))
    spec = float((np.abs(f.coeffs) ** 2).sum())
    assert abs(grid - spec) < 1e-10


def test_fft_roundtrip_identity():
    f = lb.random_torus_function(2, 16, band=4, N=2, seed=2)
    again = lb.TorusFunction.from_coeffs(2, 16, f.coeffs)
    assert np.abs(again.values - f.values).max() < 1e-10


def test_derivative_single_frequency():
    R = 64
    x = np.arange(R) / R
    f = lb.TorusFunction(1, R, np.cos(2 * np.pi * x))
    df = lb.fractional_derivative(f, 1.0)
    assert np.abs(df.values - 2 * np.pi * np.cos(2 * np.pi * x)).max() < 1e-9


def test_derivative_annihilates_constants():
    f = lb.TorusFunction(1, 32, np.full(32, 5.0))
    assert np.abs(lb.fractional_derivative(f, 0.7).values).max() == 0.0


def test_derivative_composes():
    f = lb.random_torus_function(1, 64, band=6, scalar=True, seed=3)
    coeffs = f.coeffs.copy()
    coeffs[0] = 0.0
    f = lb.TorusFunction.from_coeffs(1, 64, coeffs)
    lhs = lb.fractional_derivative(lb.fractional_derivative(f, 0.7), 1.3)
    rhs = lb.fractional_derivative(f, 2.0)
    assert np.abs(lhs.values - rhs.values).max() / np.abs(rhs.values).max() < 1e-9


def test_derivative_rejects_negative_order():
    f = lb.random_torus_function(1, 16, band=2, scalar=True)
    with pytest.raises(ValueError):
        lb.fractional_derivative(f, -0.5)


def test_derivative_commutes_with_translation():
    f = lb.random_torus_function(1, 64, band=8, scalar=True, seed=4)
    shifted = lb.TorusFunction(1, 64, np.roll(f.values, 5))
    a = lb.fractional_derivative(shifted, 1.5).values
    b = np.roll(lb.fractional_derivative(f, 1.5).values, 5)
    assert np.abs(a - b).max() < 1e-9


def test_profiles():
    assert lb.lowpass_profile(0.5) == 1.0
    assert lb.lowpass_profile(2.5) == 0.0
    assert 0.0 < lb.lowpass_profile(1.5) < 1.0
    r = np.linspace(0.0, 3.0, 301)
    psi = lb.annulus_profile(r)
    assert np.all(psi[r < 0.5] == 0.0)
    assert np.all(psi[r > 2.0] == 0.0)


def test_split_constant_second_factor():
    f = lb.random_torus_function(1, 128, band=20, scalar=True, seed=5)
    one = lb.TorusFunction(1, 128, np.ones(128))
    parts = lb.paraproduct_split(f, one, 1.5)
    ds = lb.fractional_derivative(f, 1.5)
    assert np.abs(parts.low_high.values).max() < 1e-12
    assert np.abs(parts.diagonal.values).max() < 1e-12
    assert np.abs(parts.high_low.values - ds.values).max() < 1e-9 * np.abs(ds.values).max()


def test_split_separated_frequencies():
    c1 = np.zeros(256, dtype=complex)
    c1[1] = 1.0
    c64 = np.zeros(256, dtype=complex)
    c64[64] = 1.0
    f = lb.TorusFunction.from_coeffs(1, 256, c1)
    g = lb.TorusFunction.from_coeffs(1, 256, c64)
    parts = lb.paraproduct_split(f, g, 1.5)
    assert np.abs(parts.high_low.values).max() < 1e-12
    assert np.abs(parts.diagonal.values).max() < 1e-12
    assert np.abs(parts.low_high.values).max() > 1.0


def test_split_reconstruction_banded(rng):
    for seed in range(5):
        f = lb.random_torus_function(1, 256, band=40, N=2, seed=seed)
        g = lb.random_torus_function(1, 256, band=40, N=2, seed=seed + 100)
        parts = lb.paraproduct_split(f, g, 1.5)
        full = lb.fractional_derivative(lb.product(f, g), 1.5)
        defect = np.abs(parts.total().values - full.values).max()
        assert defect / np.abs(full.values).max() < 1e-6
        assert parts.partition_defect < 1e-12


def test_leibniz_ratio_single_frequency_closed_form():
    for k, s in ((1, 1.5), (3, 1.5), (2, 2.0)):
        c = np.zeros(128, dtype=complex)
        c[k] = 1.0
        f = lb.TorusFunction.from_coeffs(1, 128, c)
        ratio = lb.leibniz_ratio(f, f, s, EXPS)
        assert abs(ratio - 2.0 ** (s - 1)) < 1e-9


def test_leibniz_ratio_identity_second_factor():
    N = 2
    f = lb.random_torus_function(1, 128, band=16, N=N, seed=6)
    eye = lb.TorusFunction(1, 128, np.broadcast_to(np.eye(N), (128, N, N)).copy())
    ratio = lb.leibniz_ratio(f, eye, 1.5, EXPS)
    # the denominator already contains |D^s f| |I| with the dual indices
    eye_norm = lb.lp_schatten_norm(eye, 4.0, 4.0 / 3.0)
    assert ratio <= 1.0 / eye_norm + 1e-12


def test_leibniz_ratio_homogeneous(rng):
    f = lb.random_torus_function(1, 128, band=16, N=2, seed=7)
    g = lb.random_torus_function(1, 128, band=16, N=2, seed=8)
    r1 = lb.leibniz_ratio(f, g, 1.5, EXPS)
    r2 = lb.leibniz_ratio(17.0 * f, g, 1.5, EXPS)
    assert abs(r1 - r2) < 1e-10


def test_leibniz_ratio_validates():
    f = lb.random_torus_function(1, 64, band=8, scalar=True)
    with pytest.raises(ValueError):
        lb.leibniz_ratio(f, f, 1.5, (4.0, 4.0, 3.0, 4.0, 4.0))
    with pytest.raises(ValueError):
        lb.leibniz_ratio(f, f, 0.5, EXPS)


def test_kernel_constant_definitional_kernel():
    ks = lb.KernelSample(kernel=lambda x, y1, y2: (abs(x - y1) + abs(x - y2)) ** -2.0,
                         alpha=0.25, budget=400, seed=1)
    size_c, holder_c = lb.cz_kernel_constant(ks)
    assert size_c == pytest.approx(1.0, abs=1e-9)
    assert holder_c > 0.0


def test_kernel_constant_zero_kernel():
    ks = lb.KernelSample(kernel=lambda x, y1, y2: 0.0, alpha=0.5, budget=50, seed=1)
    assert lb.cz_kernel_constant(ks) == (0.0, 0.0)


def test_kernel_constant_monotone_in_budget():
    kern = lambda x, y1, y2: (abs(x - y1) + abs(x - y2)) ** -2.0 \
        * math.sin(1.0 + x - y1)
    sizes = []
    holders = []
    for budget in (50, 200, 800):
        ks = lb.KernelSample(kernel=kern, alpha=0.25, budget=budget, seed=2)
        s, h = lb.cz_kernel_constant(ks)
        sizes.append(s)
        holders.append(h)
    assert sizes == sorted(sizes)
    assert holders == sorted(holders)


def test_diagonal_kernel_scaling_and_stability():
    dk = lb.DiagonalKernel(1.5)
    v1 = dk(0.0, 0.3, 0.45)
    v2 = dk(0.0, 0.6, 0.9)
    # exact dyadic 2-homogeneity of the scale sum
    assert v1 == pytest.approx(4.0 * v2, rel=1e-9)
    with pytest.raises(ValueError):
        dk(0.2, 0.2, 0.2)
