import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mbwave import warped as W
from mbwave.identities import IDENTITY_NAMES, check_identity


def test_scalar_examples():
    assert W.F_prime(1.0, 4.0, 0.5) == pytest.approx(-6.0, abs=1e-15)
    assert W.A_fun(2.0, 1.0, 0.0) == pytest.approx(0.5, abs=1e-15)


def test_conformal_map_example():
    ub, vb, xi = W.conformal_map(-1.0, 2.0, 0.1)
    assert xi == pytest.approx(0.72, abs=1e-15)
    assert ub == pytest.approx(-1 / 0.9, abs=1e-15) and vb == pytest.approx(2.5, abs=1e-15)
    assert -ub * vb == pytest.approx(2.0 / 0.72, rel=1e-14)


def test_log_fields_need_positive_f():
    with pytest.raises(ValueError):
        W.warped_scalars(1.0, 2.0, 0.0, 1, a=1.0, b=0.1)
    with pytest.raises(ValueError):
        W.warped_weight(0.0, 1.0, 0.1)


def test_weight_examples():
    assert W.warped_weight(2.0, 1.0, 0.0) == pytest.approx(4.0, abs=1e-15)
    assert W.warped_weight(1.0, 2.0, 0.1) == pytest.approx(np.exp(0.8), rel=1e-15)
    p = W.CarlemanParams(a=1.0, b=0.0, eps=0.0, R=1.0, n=1)
    assert W.carleman_weight(-1.0, 2.0, p) == pytest.approx(4.0, abs=1e-14)


def test_weight_is_exp_minus_2F(rng):
    f = rng.uniform(1e-6, 1.0, 1000)
    for a, b in ((1.0, 0.1), (4.0, 0.05), (9.0, 0.1)):
        z = W.warped_weight(f, a, b)
        e = np.exp(-2 * W.F_conj(f, a, b))
        assert np.max(np.abs(z - e) / z) <= 1e-12


def test_pullback_weight_matches_warped_image(rng):
    p = W.CarlemanParams.standard(2, 1.0)
    u = -rng.uniform(0.05, 0.5, 200)
    v = rng.uniform(0.05, 0.5, 200)
    ub, vb, xi = W.conformal_map(u, v, p.eps)
    np.testing.assert_allclose(W.pullback_weight(u, v, p), W.warped_weight(-ub * vb, p.a, p.b),
                               rtol=1e-12)


def test_christoffel_examples():
    G = W.warped_christoffels(-0.7, 1.3, 0.0, 2)
    assert G["a_vb"] == pytest.approx(1 / 2.0)
    G = W.warped_christoffels(-1.0, 1.0, 0.1, 2)
    assert G["a_ub"] == pytest.approx(-1.2 / 2.2, abs=1e-15)


def test_hessian_examples():
    H = W.warped_hessian_f(-0.4, 1.1, 0.05, 3)
    assert H["uv"] == -1.0
    assert W.warped_hessian_f(-0.4, 1.1, 0.0, 3)["box"] == pytest.approx(2.0, abs=1e-15)
    u, v, eps = -0.4, 1.1, 0.05
    expect = eps * W.hyperbolic_f(u, v) / (2 * W.rho_bar(u, v, eps))
    assert H["pi_TT"] == pytest.approx(expect, abs=1e-15)
    assert H["pi_NN"] == pytest.approx(-expect, abs=1e-15)


def test_carleman_param_validation():
    assert not W.CarlemanParams.standard(3, 2.0, 4).violations()
    bad = W.CarlemanParams(a=0.5, b=0.2, eps=0.1, R=1.0, n=1)
    assert len(bad.violations()) == 3
    with pytest.raises(ValueError, match="invalid Carleman"):
        bad.validate()


@given(st.floats(-2, -0.01), st.floats(0.01, 2), st.floats(0, 0.1))
def test_conformal_roundtrip(u, v, eps):
    ub, vb, _ = W.conformal_map(u, v, eps)
    u2, v2 = W.conformal_inverse(ub, vb, eps)
    assert u2 == pytest.approx(u, rel=1e-12) and v2 == pytest.approx(v, rel=1e-12)


@given(st.floats(-1, -0.01), st.floats(0.01, 1))
def test_comparison_bounds(u, v):
    # eps <= 1/(10 R) with R = 1 keeps the warped coordinates within a factor 2
    eps = 0.1
    ub, vb, _ = W.conformal_map(u, v, eps)
    for ratio in (ub / u, vb / v, (ub * vb) / (u * v)):
        assert 0.5 <= ratio <= 2.0


@given(st.floats(-2, -0.01), st.floats(0.01, 2), st.floats(0, 0.05), st.integers(1, 3))
def test_grad_f_squared_is_f(u, v, eps, n):
    H = W.warped_hessian_f(u, v, eps, n)
    f = W.hyperbolic_f(u, v)
    assert H["grad_sq"] == pytest.approx(f, rel=1e-12)


@pytest.mark.parametrize("name", IDENTITY_NAMES)
def test_identity_small_sample(name):
    r = check_identity(name, 2, 0.05, 50, 7)
    assert r.passed, r
