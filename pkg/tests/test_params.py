import math

import numpy as np
import pytest

from choquard.params import (
    AdmissibilityVerdict,
    ModelParams,
    ParamError,
    classify_admissibility,
    gamma_big,
    params_from_json,
    params_to_json,
)


def test_gamma_big_hand_values():
    # d=3, beta=1, alpha=2 (gamma=1): p=2 -> 1, p=3 -> -2
    assert gamma_big(ModelParams(d=3, beta=1.0, alpha=2.0, p=2.0)) == pytest.approx(1.0)
    assert gamma_big(ModelParams(d=3, beta=1.0, alpha=2.0, p=3.0)) == pytest.approx(-2.0)


def test_gamma_big_p2_cancels_dimension_term():
    # at p=2 the d(p-2) term drops: Gamma = 2 beta - gamma
    p = ModelParams(d=1, beta=1.0, alpha=0.5, p=2.0)
    assert gamma_big(p) == pytest.approx(2.0 - p.gamma)
    p = ModelParams(d=1, beta=0.7, alpha=0.25, p=2.0)
    assert gamma_big(p) == pytest.approx(1.4 - 0.75)


def test_gamma_big_affine_in_p():
    rng = np.random.default_rng(0)
    for _ in range(50):
        d = int(rng.integers(1, 4))
        alpha = rng.uniform(0.1, d - 0.1)
        beta = rng.uniform(0.1, 1.0)
        p0 = rng.uniform(1.1, 4.0)
        delta = rng.uniform(-0.5, 0.5)
        g0 = gamma_big(ModelParams(d=d, beta=beta, alpha=alpha, p=p0))
        g1 = gamma_big(ModelParams(d=d, beta=beta, alpha=alpha, p=p0 + delta))
        assert g1 - g0 == pytest.approx(-d * delta, abs=1e-12)


def test_classify_both():
    v = classify_admissibility(ModelParams(d=3, beta=1.0, alpha=2.0, p=2.0))
    assert v.regime == "Both"


def test_classify_no_soliton_at_boundary():
    # 1/p = 1/6 <= (d-2)/(2d-gamma) = 1/5
    v = classify_admissibility(ModelParams(d=3, beta=1.0, alpha=2.0, p=6.0))
    assert v.regime == "NoSoliton"
    # exact equality also excluded: p = 5 gives 1/p = 1/5
    v = classify_admissibility(ModelParams(d=3, beta=1.0, alpha=2.0, p=5.0))
    assert v.regime == "NoSoliton"


def test_classify_fractional_normalized():
    v = classify_admissibility(
        ModelParams.create(d=1, beta=0.5, gamma=0.5, p=2.2))
    assert v.regime == "FractionalNormalized"
    assert v.gamma_big == pytest.approx(0.3)


def test_classify_out_of_theory_fractional():
    # beta < 1 with the normalized window violated: no claim
    v = classify_admissibility(ModelParams.create(d=1, beta=0.5, gamma=0.5, p=4.0))
    assert v.regime == "OutOfTheory"


def test_classify_classical_only():
    # d=1, p=4: classical window has no upper cutoff, normalized window fails
    v = classify_admissibility(ModelParams(d=1, beta=1.0, alpha=0.5, p=4.0))
    assert v.regime == "ClassicalExistence"


def test_gamma_zero_notes():
    # p = 1 + (2+alpha)/d = 3.5 at d=1, alpha=0.5
    v = classify_admissibility(ModelParams(d=1, beta=1.0, alpha=0.5, p=3.5))
    assert v.gamma_big == 0.0
    assert any("generalized-kernel" in n for n in v.notes)


def test_alpha_gamma_interchangeable():
    rng = np.random.default_rng(1)
    for _ in range(200):
        d = int(rng.integers(1, 4))
        alpha = rng.uniform(0.05, d - 0.05)
        beta = rng.uniform(0.1, 1.0)
        p = rng.uniform(1.05, 5.0)
        va = classify_admissibility(
            ModelParams.create(d=d, beta=beta, p=p, alpha=alpha))
        vg = classify_admissibility(
            ModelParams.create(d=d, beta=beta, p=p, gamma=d - alpha))
        assert va.regime == vg.regime
        assert va.gamma_big == pytest.approx(vg.gamma_big)


def test_normalized_window_inside_classical_lower_bound():
    # at beta=1, d>=3: every normalized tuple also satisfies 1/p > (d-2)/(2d-gamma)
    rng = np.random.default_rng(2)
    count = 0
    for _ in range(10_000):
        d = int(rng.integers(3, 6))
        alpha = rng.uniform(0.05, d - 0.05)
        p = rng.uniform(1.05, 6.0)
        params = ModelParams(d=d, beta=1.0, alpha=alpha, p=p)
        s = (p - 2.0) * d + params.gamma
        if 0.0 < s < 2.0:
            count += 1
            assert 1.0 / p > (d - 2.0) / (2.0 * d - params.gamma)
    assert count > 100  # the sample actually hit the window


def test_validation_errors():
    with pytest.raises(ParamError):
        ModelParams(d=0, beta=1.0, alpha=0.5, p=2.0)
    with pytest.raises(ParamError):
        ModelParams(d=1, beta=1.5, alpha=0.5, p=2.0)
    with pytest.raises(ParamError):
        ModelParams(d=1, beta=1.0, alpha=1.5, p=2.0)  # alpha >= d
    with pytest.raises(ParamError):
        ModelParams(d=1, beta=1.0, alpha=0.5, p=0.9)
    with pytest.raises(ParamError):
        ModelParams(d=1, beta=1.0, alpha=0.5, p=2.0, mass=-1.0)
    with pytest.raises(ParamError):
        ModelParams(d=1, beta=1.0, alpha=0.5, p=2.0, kg_omega=1.0)
    with pytest.raises(ParamError):
        ModelParams.create(d=1, beta=1.0, p=2.0, alpha=0.3, gamma=0.3)


def test_json_round_trip():
    p = ModelParams.create(d=2, beta=0.75, gamma=1.25, p=2.5, mass=3.0,
                           kg_omega=0.5)
    q = params_from_json(params_to_json(p))
    assert q == p


def test_json_unknown_keys_rejected():
    with pytest.raises(ParamError, match="unknown"):
        params_from_json('{"d": 1, "beta": 1.0, "p": 2.0, "alpha": 0.5, "x": 1}')


def test_json_requires_alpha_or_gamma():
    with pytest.raises(ParamError):
        params_from_json('{"d": 1, "beta": 1.0, "p": 2.0}')


def test_coupling_constant_value():
    # d=1, alpha=1/2: the gamma-function factors cancel to 1/sqrt(2 pi)
    p = ModelParams(d=1, beta=1.0, alpha=0.5, p=2.0)
    assert p.coupling == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), rel=1e-14)


def test_verdict_regime_validated():
    with pytest.raises(ParamError):
        AdmissibilityVerdict(regime="Bogus", gamma_big=0.0)
