import math

import numpy as np
import pytest

from choquard.grid import Field, GridSpec, inner, l2_norm_sq
from choquard.spectral import (
    RieszOp,
    apply_frac_lap,
    apply_heat,
    apply_zygmund,
    frac_laplacian,
    heat_representation_check,
    heat_semigroup,
    linear_convolve,
    riesz_convolve,
    riesz_op,
    zygmund,
)

# frozen oracle values (quadrature of the continuum formulas, see derivations
# in the docstrings): the Riesz potential of exp(-x^2) at alpha=1/2, d=1
RIESZ_GAUSS_POINTWISE = {
    0.0: 1.4464090846320807,
    0.5: 1.2831071455104077,
    1.0: 0.9517145023321787,
    3.0: 0.418225265307671,
}


def test_frac_lap_annihilates_constants():
    g = GridSpec((64,), 2.0)
    op = frac_laplacian(g, 0.7)
    out = apply_frac_lap(op, Field(g, np.ones(64)))
    assert np.max(np.abs(out.values)) < 1e-14


def test_frac_lap_eigenfunction():
    g = GridSpec((128,), 4.0)
    x = g.axes()[0]
    k = 5
    mode = Field(g, np.cos(2 * np.pi * k * x / (2 * g.half_width)))
    for beta in (0.35, 0.5, 1.0):
        out = apply_frac_lap(frac_laplacian(g, beta), mode)
        lam = (2 * np.pi * k / (2 * g.half_width)) ** (2 * beta)
        assert np.max(np.abs(out.values - lam * mode.values)) < 1e-10 * lam


def test_frac_lap_beta1_matches_second_derivative():
    g = GridSpec((4096,), 16.0)
    f = Field.from_function(g, lambda x: np.exp(-x ** 2))
    out = apply_frac_lap(frac_laplacian(g, 1.0), f)
    exact = Field.from_function(g, lambda x: (2 - 4 * x ** 2) * np.exp(-x ** 2))
    assert np.max(np.abs(out.values - exact.values)) < 1e-8


def test_zygmund_squares_to_frac_lap():
    g = GridSpec((256,), 8.0)
    rng = np.random.default_rng(0)
    f = Field(g, rng.standard_normal(256))
    beta = 0.6
    z = zygmund(g, beta)
    twice = apply_zygmund(z, apply_zygmund(z, f))
    once = apply_frac_lap(frac_laplacian(g, beta), f)
    assert np.max(np.abs(twice.values - once.values)) < 1e-12 * np.max(np.abs(once.values) + 1)


def test_zygmund_zero_field():
    g = GridSpec((64,), 2.0)
    out = apply_zygmund(zygmund(g, 0.5), Field.zeros(g))
    assert np.all(out.values == 0.0)


def test_zygmund_parseval_pairing():
    g = GridSpec((512,), 8.0)
    rng = np.random.default_rng(1)
    f = Field(g, rng.standard_normal(512))
    beta = 0.4
    zf = apply_zygmund(zygmund(g, beta), f)
    lhs = inner(zf, zf)
    rhs = inner(apply_frac_lap(frac_laplacian(g, beta), f), f)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_heat_semigroup_property():
    g = GridSpec((128,), 4.0)
    rng = np.random.default_rng(2)
    f = Field(g, rng.standard_normal(128))
    a = apply_heat(heat_semigroup(g, 0.3), apply_heat(heat_semigroup(g, 0.2), f))
    b = apply_heat(heat_semigroup(g, 0.5), f)
    assert np.max(np.abs(a.values - b.values)) < 1e-12


def test_multiplier_zero_frequency_values():
    g = GridSpec((64,), 2.0)
    assert frac_laplacian(g, 0.5).symbol.ravel()[0] == 0.0
    assert zygmund(g, 0.5).symbol.ravel()[0] == 0.0
    h = heat_semigroup(g, 1.0).symbol
    # mathematically in (0, 1]; the far tail underflows to +0.0 in binary64
    assert h.ravel()[0] == 1.0 and np.all(h >= 0.0) and np.all(h <= 1.0)
    assert np.all(heat_semigroup(g, 1e-3).symbol > 0.0)


# ---------------------------------------------------------------------------
# Riesz potential


def test_riesz_zero():
    g = GridSpec((64,), 2.0)
    op = riesz_op(g, 0.5)
    assert np.all(riesz_convolve(op, Field.zeros(g)).values == 0.0)


def test_riesz_point_mass_reproduces_kernel():
    g = GridSpec((512,), 16.0)
    h = g.spacing[0]
    op = riesz_op(g, 0.5)
    vals = np.zeros(512)
    i0 = 256  # x = 0
    vals[i0] = 1.0 / h  # unit point mass
    out = riesz_convolve(op, Field(g, vals))
    x = g.axes()[0]
    far = np.abs(x) > 10 * h
    exact = op.constant * np.abs(x[far]) ** (-0.5)
    rel = np.abs(out.values[far] - exact) / exact
    assert np.max(rel) < 1e-3


def test_riesz_gaussian_matches_direct_sum():
    # same-kernel O(n^2) quadrature oracle: validates the zero-padded FFT path
    g = GridSpec((512,), 16.0)
    h = g.spacing[0]
    op = riesz_op(g, 0.5)
    f = Field.from_function(g, lambda x: np.exp(-x ** 2))
    out = riesz_convolve(op, f)
    n = 512
    direct = np.zeros(n)
    idx = np.arange(n)
    for i in range(n):
        direct[i] = np.sum(op.kernel[(i - idx) % (2 * n)] * f.values) * h
    rel = np.max(np.abs(direct - out.values)) / np.max(np.abs(direct))
    assert rel < 1e-6


def test_riesz_gaussian_matches_continuum():
    # independent continuum oracle (adaptive quadrature, frozen above)
    g = GridSpec((2048,), 16.0)
    op = riesz_op(g, 0.5)
    out = riesz_convolve(op, Field.from_function(g, lambda x: np.exp(-x ** 2)))
    x = g.axes()[0]
    for x0, v in RIESZ_GAUSS_POINTWISE.items():
        i = int(np.argmin(np.abs(x - x0)))
        assert out.values[i] == pytest.approx(v, rel=2e-5)


def test_riesz_positivity_and_selfadjointness():
    g = GridSpec((256,), 8.0)
    op = riesz_op(g, 0.5)
    rng = np.random.default_rng(3)
    for _ in range(10):
        f = Field(g, rng.standard_normal(256))
        h = Field(g, rng.standard_normal(256))
        lhs = inner(riesz_convolve(op, f), h)
        rhs = inner(f, riesz_convolve(op, h))
        scale = math.sqrt(l2_norm_sq(f) * l2_norm_sq(h))
        assert abs(lhs - rhs) < 1e-11 * scale
        g_pos = Field(g, np.abs(f.values))
        assert inner(riesz_convolve(op, g_pos), g_pos) >= 0.0
    f = Field(g, rng.standard_normal(256))
    assert inner(riesz_convolve(op, f), f) >= 0.0


def test_frac_lap_selfadjoint_and_positive():
    g = GridSpec((256,), 8.0)
    op = frac_laplacian(g, 0.5)
    rng = np.random.default_rng(4)
    for _ in range(10):
        f = Field(g, rng.standard_normal(256))
        h = Field(g, rng.standard_normal(256))
        scale = math.sqrt(l2_norm_sq(f) * l2_norm_sq(h))
        assert abs(inner(op.apply(f), h) - inner(f, op.apply(h))) < 1e-11 * scale
        assert inner(op.apply(f), f) >= -1e-12 * l2_norm_sq(f)


def test_riesz_kernel_monotone_from_origin():
    for dims, L, alpha in (((256,), 8.0, 0.5), ((32, 32), 4.0, 1.0)):
        g = GridSpec(dims, L)
        op = RieszOp(g, alpha)
        k = op.kernel
        assert np.all(k > 0.0)
        n = dims[0]
        # along each positive axis from the origin: strictly decreasing
        line = k[(slice(0, n),) + (0,) * (len(dims) - 1)]
        assert np.all(np.diff(line[: n // 2]) < 0.0)


def test_riesz_2d_origin_cell_consistent_with_1d():
    # the generic origin-cell quadrature must reproduce the 1D closed form
    from choquard.spectral import _origin_cell_average

    h = 0.125
    gamma = 0.5
    exact = (0.5 * h) ** (-gamma) / (1.0 - gamma)
    # run the generic annulus construction in d=1
    approx = _origin_cell_average((h,), gamma)
    assert approx == pytest.approx(exact, rel=1e-10)


def test_linear_convolve_matches_direct():
    g = GridSpec((64,), 4.0)
    rng = np.random.default_rng(5)
    kern = Field(g, rng.random(64))
    f = Field(g, rng.random(64))
    out = linear_convolve(kern, f)
    x = g.axes()[0]
    h = g.spacing[0]
    direct = np.zeros(64)
    for i in range(64):
        for j in range(64):
            delta = x[i] - x[j]
            if -g.half_width <= delta < g.half_width:
                kidx = int(round((delta + g.half_width) / h))
                direct[i] += kern.values[kidx] * f.values[j] * h
    assert np.max(np.abs(direct - out.values)) < 1e-12 * np.max(np.abs(direct))


# ---------------------------------------------------------------------------
# heat-kernel representation of the fractional symbol


def test_heat_representation_beta_half():
    assert heat_representation_check(0.5, 1.0) < 1e-8


def test_heat_representation_zero_frequency():
    assert heat_representation_check(0.5, 0.0) < 1e-12


def test_heat_representation_beta_quarter():
    assert heat_representation_check(0.25, 2.0) < 1e-8


def test_heat_representation_rejects_beta_one():
    with pytest.raises(ValueError):
        heat_representation_check(1.0, 1.0)
