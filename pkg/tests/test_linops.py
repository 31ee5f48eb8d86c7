import math

import numpy as np
import pytest

from choquard.grid import Field, GridSpec, inner, l2_norm_sq
from choquard.linops import (
    LinearizedPair,
    build_spectral_report,
    d11_kg,
    essential_spectrum_edges,
    extreme_eigs,
    growing_mode,
    index_count,
    rayleigh_lplus_phi,
    vk_closed_form,
    vk_quantity,
)
from choquard.params import ModelParams, gamma_big
from choquard.solver import SolverOptions, solve_ground_state, to_classical

from conftest import smooth_decaying_field


@pytest.fixture(scope="module")
def pair_ref(reference_state):
    return LinearizedPair(reference_state)


@pytest.fixture(scope="module")
def pair_p22(classical_p22):
    return LinearizedPair(classical_p22)


@pytest.fixture(scope="module")
def pair_p40(classical_p40):
    return LinearizedPair(classical_p40)


def test_actions_self_adjoint(pair_p22):
    rng = np.random.default_rng(0)
    vol = pair_p22.grid.cell_volume
    for _ in range(50):
        f = rng.standard_normal(pair_p22.n)
        g = rng.standard_normal(pair_p22.n)
        scale = np.linalg.norm(f) * np.linalg.norm(g) * vol
        for apply in (pair_p22.apply_lplus, pair_p22.apply_lminus):
            lhs = float(apply(f) @ g) * vol
            rhs = float(f @ apply(g)) * vol
            assert abs(lhs - rhs) < 1e-10 * max(scale, 1.0) * 100


def test_lminus_annihilates_profile(pair_p22):
    phi = pair_p22.gs.phi.values.ravel()
    out = pair_p22.apply_lminus(phi)
    assert np.linalg.norm(out) / np.linalg.norm(phi) < 1e-7


def test_lminus_nonnegative_quadratic_form(pair_p22):
    rng = np.random.default_rng(1)
    vol = pair_p22.grid.cell_volume
    for _ in range(50):
        f = smooth_decaying_field(pair_p22.gs.phi.grid, rng).values.ravel()
        q = float(f @ pair_p22.apply_lminus(f)) * vol
        scale = float(f @ f) * vol
        assert q >= -1e-8 * scale


def test_lplus_nonnegative_orthogonal_to_profile(pair_ref):
    # at the constrained minimizer the second variation is nonnegative on
    # the orthogonal complement of the profile
    rng = np.random.default_rng(2)
    vol = pair_ref.grid.cell_volume
    phi = pair_ref.gs.phi.values.ravel()
    phi_unit = phi / np.linalg.norm(phi)
    for _ in range(50):
        h = smooth_decaying_field(pair_ref.gs.phi.grid, rng).values.ravel()
        h = h - (phi_unit @ h) * phi_unit
        q = float(h @ pair_ref.apply_lplus(h)) * vol
        scale = float(h @ h) * vol
        assert q >= -1e-6 * scale


def test_lplus_profile_identity(pair_p22):
    # L+ phi = -(2p-2) * interaction-potential * phi^(p-1), pointwise
    gs = pair_p22.gs
    p = gs.params.p
    phi = gs.phi.values.ravel()
    lhs = pair_p22.apply_lplus(phi)
    rhs = -(2 * p - 2) * (pair_p22.conv_dens * pair_p22.phi_pm1).ravel()
    scale = np.max(np.abs(rhs))
    assert np.max(np.abs(lhs - rhs)) < 1e-5 * scale


def test_rayleigh_matches_interaction(pair_p22, pair_ref):
    for pair in (pair_p22, pair_ref):
        r = rayleigh_lplus_phi(pair)
        assert r < 0.0
        expected = -(2 * pair.params.p - 2) * pair.gs.breakdown.K
        assert r == pytest.approx(expected, rel=1e-4)


def test_extreme_eigs_dense_counts(pair_p22):
    eigs_p = extreme_eigs(pair_p22, "lplus", 4)
    neg_tol = 1e-6 * abs(pair_p22.omega)
    assert sum(1 for lam, _ in eigs_p if lam < -neg_tol) == 1
    eigs_m = extreme_eigs(pair_p22, "lminus", 3)
    lam0, v0 = eigs_m[0]
    assert abs(lam0) < 1e-6 * abs(pair_p22.omega)
    phi = pair_p22.gs.phi.values.ravel()
    corr = abs(v0.values.ravel() @ phi) / (np.linalg.norm(v0.values) * np.linalg.norm(phi))
    assert corr > 0.999


def test_lanczos_matches_dense(pair_p22):
    dense = extreme_eigs(pair_p22, "lplus", 4)
    lanczos = extreme_eigs(pair_p22, "lplus", 4, dense_threshold=0)
    for (ld, _), (ll, _) in zip(dense, lanczos):
        assert ll == pytest.approx(ld, abs=1e-9 * max(1.0, abs(ld)))


def test_translation_mode_in_kernel(pair_p22):
    # the derivative of the profile is annihilated by L+
    gs = pair_p22.gs
    grid = gs.phi.grid
    sym_d = 2j * np.pi * np.fft.rfftfreq(grid.dims[0], d=grid.spacing[0])
    dphi = np.fft.irfft(sym_d * np.fft.rfft(gs.phi.values), n=grid.dims[0])
    out = pair_p22.apply_lplus(dphi)
    assert np.linalg.norm(out) / np.linalg.norm(dphi) < 1e-5


def test_kernel_dimension_at_least_d(pair_p22):
    eigs_p = extreme_eigs(pair_p22, "lplus", 5)
    kernel_tol = 1e-5 * abs(pair_p22.omega)
    kdim = sum(1 for lam, _ in eigs_p if abs(lam) <= kernel_tol)
    assert kdim >= pair_p22.params.d


def test_vk_closed_form_classical(pair_p22, pair_p40):
    for pair in (pair_p22, pair_p40):
        vk = vk_quantity(pair)
        closed = vk_closed_form(pair)
        assert closed is not None
        assert vk == pytest.approx(closed, rel=5e-2)
        gb = gamma_big(pair.params)
        assert np.sign(vk) == -np.sign(gb)


def test_vk_closed_form_none_for_constrained(pair_ref):
    assert vk_closed_form(pair_ref) is None


def test_vk_negative_for_fractional_state():
    params = ModelParams.create(d=1, beta=0.5, gamma=0.5, p=2.2, mass=4.0)
    gs = solve_ground_state(params, GridSpec((2048,), 64.0),
                            SolverOptions(tol=1e-8))
    pair = LinearizedPair(gs)
    assert vk_quantity(pair) < 0.0


def test_vk_matches_dense_spectral_sum(pair_p22):
    # oracle: full dense eigendecomposition, sum <phi, v>^2 / lambda off-kernel
    import scipy.linalg

    mat = pair_p22.dense("lplus")
    vals, vecs = scipy.linalg.eigh(mat)
    phi = pair_p22.gs.phi.values.ravel()
    vol = pair_p22.grid.cell_volume
    kernel_tol = 1e-5 * abs(pair_p22.omega)
    total = 0.0
    for lam, v in zip(vals, vecs.T):
        if abs(lam) <= kernel_tol:
            continue
        total += float(v @ phi) ** 2 * vol / lam
    assert vk_quantity(pair_p22) == pytest.approx(total, rel=1e-6)


def test_d11_kg_zero_frequency(pair_p22):
    # at omega = 0 the entry reduces to the squared mass: positive
    val = d11_kg(pair_p22, 0.0)
    assert val == pytest.approx(pair_p22.gs.breakdown.mass)
    assert val > 0.0


def test_d11_kg_signs_against_threshold(pair_p22):
    # Gamma = 1.3 > 0: threshold sqrt((p-1)/(p-1+Gamma)) = sqrt(1.2/2.5)
    thr = math.sqrt(1.2 / 2.5)
    vk = vk_quantity(pair_p22)
    assert d11_kg(pair_p22, 0.9, vk=vk) < 0.0  # above threshold: stable side
    assert d11_kg(pair_p22, 0.5, vk=vk) > 0.0  # below threshold
    near_lo = d11_kg(pair_p22, thr - 1e-3, vk=vk)
    near_hi = d11_kg(pair_p22, thr + 1e-3, vk=vk)
    assert near_lo > 0.0 > near_hi


def test_d11_kg_positive_for_negative_gamma(pair_p40):
    vk = vk_quantity(pair_p40)
    for w in (0.1, 0.5, 0.9, -0.7):
        assert d11_kg(pair_p40, w, vk=vk) > 0.0


def test_d11_kg_closed_form_d3():
    # formula check at (d=3, alpha=2, p=2): D11 = m(1 - Gamma w^2/((p-1)(1-w^2)))
    # with Gamma = 1; negative exactly for |w| > sqrt(1/2)
    for w, sign in ((0.9, -1.0), (0.5, 1.0), (0.70710678, 1.0), (0.70711, -1.0)):
        closed = 1.0 - 1.0 * w ** 2 / (1.0 * (1.0 - w ** 2))
        assert np.sign(closed) == sign


def test_d11_kg_rejects_bad_frequency(pair_p22):
    with pytest.raises(ValueError):
        d11_kg(pair_p22, 1.0)


def test_growing_mode_unstable(pair_p40):
    gm = growing_mode(pair_p40)
    assert gm is not None
    assert gm.rate > 0.0
    assert gm.residual < 1e-6
    # certify against the first-order flow by hand
    v1 = gm.v1.values.ravel()
    v2 = gm.v2.values.ravel()
    top = -pair_p40.apply_lminus(v2) - gm.rate * v1
    bot = pair_p40.apply_lplus(v1) - gm.rate * v2
    num = math.sqrt(float(top @ top + bot @ bot))
    den = math.sqrt(float(v1 @ v1 + v2 @ v2))
    assert num / den < 1e-6


def test_growing_mode_stable(pair_p22):
    assert growing_mode(pair_p22) is None


def test_spectral_report_and_index(pair_p22, pair_p40):
    rep = build_spectral_report(pair_p22)
    assert rep.n_lplus == 1
    assert rep.n_lminus == 0
    assert rep.growing_mode is None
    assert index_count(rep) == 0
    rep4 = build_spectral_report(pair_p40)
    assert rep4.n_lplus == 1
    assert rep4.growing_mode is not None
    assert index_count(rep4) == 1


def test_index_count_kg_stable(pair_p22):
    rep = build_spectral_report(pair_p22, kg_omega=0.9)
    assert rep.d11_kg is not None and rep.d11_kg < 0.0
    assert index_count(rep) == 0  # uses the kg entry when present


def test_essential_spectrum_edges(pair_p22, classical_p18):
    # p >= 2: the potential decays, both edges sit at -omega = 1
    ep, em = essential_spectrum_edges(pair_p22)
    assert em == pytest.approx(1.0, abs=1e-2)
    assert ep == pytest.approx(1.0, abs=2e-2)
    # p < 2: the local potential tends to -omega, shifting the edges
    pair18 = LinearizedPair(classical_p18)
    ep, em = essential_spectrum_edges(pair18)
    assert em == pytest.approx(0.0, abs=5e-2)
    assert ep == pytest.approx(2.0 - 1.8, abs=5e-2)


def test_growing_mode_matrix_free_matches_dense():
    # the generalized-LOBPCG path (forced via dense_threshold=0) must agree
    # with the dense congruence oracle
    from choquard.solver import SolverOptions, solve_classical_state

    grid = GridSpec((512,), 32.0)
    gs = solve_classical_state(ModelParams(d=1, beta=1.0, alpha=0.5, p=4.0),
                               grid, SolverOptions(tol=1e-11))
    pair = LinearizedPair(gs)
    dense = growing_mode(pair)
    free = growing_mode(pair, dense_threshold=0)
    assert free is not None and dense is not None
    assert free.rate == pytest.approx(dense.rate, rel=1e-8)
    assert free.residual < 1e-6
    gs2 = solve_classical_state(ModelParams(d=1, beta=1.0, alpha=0.5, p=2.2),
                                grid, SolverOptions(tol=1e-11))
    assert growing_mode(LinearizedPair(gs2), dense_threshold=0) is None
