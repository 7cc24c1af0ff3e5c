import numpy as np
import pytest

from mbwave import carleman as C
from mbwave import warped as W
from mbwave.testfuncs import catalog, random_trig, zero_function


def _pts(rng, count=200, eps=0.0):
    return C.identity_points(rng, count, 1.0, eps=eps)


def test_zero_function_identity_and_margins(rng):
    p = W.CarlemanParams.standard(2, 1.0)
    u, v, th = _pts(rng, eps=p.eps)
    z = zero_function(2)
    T = C.identity_terms(z.jet(u, v, th), u, v, th, p.eps, 2, p.a, p.b,
                         C.divergence_exact(z.jet(u, v, th), u, v, th, p.eps, 2, p.a, p.b))
    assert np.all(T.lhs == 0) and np.all(T.rhs == 0)
    M = C.inequality_margins(z, u, v, th, p)
    assert np.all(M.est == 0) and np.all(M.rev == 0)


def test_polynomial_identity_richardson(rng):
    tf = next(t for t in catalog(1) if t.name == "poly_u2v_Y0")
    p = W.CarlemanParams.standard(1, 1.0)
    u, v, th = _pts(rng, 50, p.eps)
    r1 = C.identity_residual(tf, u, v, th, p.eps, 1, p.a, p.b).max()
    r2 = C.identity_residual(tf, u, v, th, p.eps, 1, p.a, p.b, h=C.default_step(u, v) / 2).max()
    assert r1 <= 1e-6
    assert 3.5 <= r1 / r2 <= 4.5


def test_exact_route_is_round_off(rng):
    p = W.CarlemanParams.standard(3, 1.0)
    u, v, th = _pts(rng, 100, p.eps)
    for tf in catalog(3):
        assert C.identity_residual(tf, u, v, th, p.eps, 3, p.a, p.b, route="exact").max() < 1e-11


def test_random_trig_sweep(rng):
    for n in (1, 2, 3):
        p = W.CarlemanParams.standard(n, 1.0, 4)
        u, v, th = _pts(rng, 40, p.eps)
        for _ in range(30):
            tf = random_trig(rng, n)
            assert C.identity_residual(tf, u, v, th, p.eps, n, p.a, p.b).max() <= 1e-6


def test_identity_rejects_small_f():
    tf = catalog(1)[0]
    with pytest.raises(ValueError):
        C.identity_residual(tf, np.array([-1e-4]), np.array([1e-4]), 0.0, 0.0, 1, 1.0, 0.1)


def test_conjugation(rng):
    p = W.CarlemanParams.standard(2, 1.0)
    u, v, th = _pts(rng, 100, p.eps)
    for tf in catalog(2):
        assert C.conjugation_residual(tf, u, v, th, p.eps, 2, p.a, p.b).max() < 1e-9


def test_dirichlet_boundary_current(rng):
    p = W.CarlemanParams.standard(2, 1.0)
    kappa, c = 0.2, 0.5
    # sigma = (1 - kappa) v - (1 + kappa) u - c vanishes on these exterior points
    u = -rng.uniform(0.05, 0.3, 50)
    v = (c + (1 + kappa) * u) / (1 - kappa)
    th = np.full_like(u, 1.0)
    tf = next(t for t in catalog(2) if t.name == "trig_sum_Y1")
    res = C.dirichlet_boundary_residual(tf, u, v, th, p.eps, 2, p.a, p.b, kappa, c)
    assert res.max() < 1e-9


def test_margins_nonnegative_for_valid_params(rng):
    for n in (1, 2):
        p = W.CarlemanParams.standard(n, 1.0)
        u, v, th = C.margin_points(rng, 500, 1.0, eps=p.eps)
        for tf in catalog(n):
            M = C.inequality_margins(tf, u, v, th, p)
            assert (M.est / M.est_scale).min() >= -1e-8
            assert (M.rev / M.rev_scale).min() >= -1e-8


def test_inverted_params_negative_control(rng):
    # b < eps breaks the parameter ordering; margins are a diagnostic, not an error
    p = W.CarlemanParams(a=1.0, b=1e-4, eps=0.2, R=1.0, n=2)
    assert p.violations()
    u, v, th = C.margin_points(rng, 500, 1.0, eps=p.eps)
    worst = min(float((C.inequality_margins(tf, u, v, th, p).est).min()) for tf in catalog(2))
    assert np.isfinite(worst)


def test_suite_small():
    rows = C.carleman_suite(ns=(1,), a_factors=(1,), count=100, extra_random=2)
    assert len(rows) == 1 and rows[0].passed
