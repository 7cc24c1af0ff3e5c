import numpy as np
import pytest

from mbwave.estimates import mode_data
from mbwave.gtc import linear_domain
from mbwave.hum import (HUMOperator, HUMProblem, gram_apply, hum_rhs, hum_rhs_continuous,
                        kernel_perturbations, minimality_check, solve_exact_control, solve_null_control, taper)
from mbwave.solver import CauchyData, Coefficients

STATIC = linear_domain(0.0, 0.0, 0.0, 3.0, 0.0, 1.0)
MOVING = linear_domain(0.0, 0.3, 0.0, 3.0, 0.0, 1.0)
SINE = CauchyData(lambda x: np.sin(np.pi * x), lambda x: 0 * x)
ZERO = CauchyData(lambda x: 0 * x, lambda x: 0 * x)
COEFFS = Coefficients(Xt=lambda t, x: 0.2 + 0 * x, V=lambda t, x: 0.3 + 0.1 * x)


def _prob(dom=STATIC, init=SINE, coeffs=Coefficients(), gamma=None, nx=40, **kw):
    return HUMProblem(dom, coeffs, 0.0, 2.2, gamma or {2: [(0.0, 2.2)]}, init, nx=nx, nt=3 * nx, **kw)


def test_problem_validation():
    with pytest.raises(ValueError):
        _prob(gamma={2: []})
    with pytest.raises(ValueError):
        _prob(rho_reg=-1.0)
    with pytest.raises(ValueError):
        _prob(pairing="h2")


def test_zero_data_zero_control():
    sol = solve_null_control(_prob(init=ZERO))
    assert np.all(sol.control[1] == 0) and np.all(sol.control[2] == 0)
    assert sol.final_energy == 0.0


def test_gram_zero_symmetry_psd(rng):
    op = HUMOperator(_prob(MOVING, coeffs=COEFFS, gamma={1: [(0.3, 2.0)], 2: [(0.0, 2.2)]}))
    assert np.all(op.apply(np.zeros(2 * op.m)) == 0)
    for _ in range(10):
        x, y = rng.standard_normal((2, 2 * op.m))
        gx, gy = op.apply(x), op.apply(y)
        assert abs(gx @ y - x @ gy) <= 1e-10 * max(abs(gx @ y), 1e-300)
        assert x @ gx >= 0
        # quadratic form identity: observation norm plus the regularization term
        q = op.observation_norm2(x) + op.reg * (x @ (op.mass @ x))
        assert x @ gx == pytest.approx(q, rel=1e-10)


def test_gram_apply_wrapper():
    prob = _prob()
    op = HUMOperator(prob)
    x = np.linspace(0, 1, 2 * op.m)
    assert np.array_equal(gram_apply(prob, x, op), op.apply(x))


def test_control_support():
    prob = _prob(gamma={2: [(0.5, 1.7)]})
    op = HUMOperator(prob)
    sol = solve_null_control(prob, op)
    t = sol.tau
    assert np.all(sol.control[1] == 0)
    assert np.all(sol.control[2][(t < 0.5) | (t > 1.7)] == 0)
    assert np.any(sol.control[2] != 0)


def test_taper_is_indicator_inside():
    t = np.linspace(0, 1, 101)
    c = taper(t, [(0.2, 0.8)], 0.01)
    assert np.all(c[(t > 0.22 + 1e-9) & (t < 0.78 - 1e-9)] == 1)
    assert np.all(c[(t <= 0.2) | (t >= 0.8)] == 0)


def test_null_control_closed_loop_and_J_monotone():
    sol = solve_null_control(_prob(nx=60))
    assert sol.converged and sol.relative_final_energy <= 1e-2
    J = np.array(sol.J_history)
    assert np.all(np.diff(J) <= 1e-12 * abs(J).max())


def test_rhs_linearity():
    d1 = mode_data(MOVING, 0.0, [1.0, 0.2], [0.3])
    d2 = mode_data(MOVING, 0.0, [0.0, -0.5, 0.4], [0.1, 0.7])
    alpha = -1.7
    comb = CauchyData(lambda x: alpha * d1.phi0(x) + d2.phi0(x),
                      lambda x: alpha * d1.phi1(x) + d2.phi1(x))
    op = HUMOperator(_prob(MOVING, coeffs=COEFFS))
    r = lambda d: hum_rhs(op.prob.__class__(**{**op.prob.__dict__, "initial": d}), op)
    lhs, rhs = r(comb), alpha * r(d1) + r(d2)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))
    assert np.all(r(ZERO) == 0)


def test_rhs_static_slice_form():
    prob = _prob(init=mode_data(STATIC, 0.0, [1.0, 0.3], [0.2]), coeffs=COEFFS, pairing="l2")
    op = HUMOperator(prob)
    x = op.disc.x_nodes(0)
    p0, p1 = prob.initial.on_nodes(x)
    dx = op.grid.dy
    expect = np.concatenate([(p1 - 0.2 * p0)[1:-1], -p0[1:-1]]) * dx
    np.testing.assert_allclose(hum_rhs_continuous(prob, op), expect, atol=1e-15)
    # without lower-order terms the discrete right-hand side is the slice form itself
    plain = _prob(init=prob.initial, pairing="l2")
    d, c = hum_rhs(plain), hum_rhs_continuous(plain)
    assert np.max(np.abs(d - c)) <= 1e-12 * np.max(np.abs(c))


def test_exact_control_free_target_is_zero():
    prob = _prob(nx=40)
    op = HUMOperator(prob)
    free = op.free_field(op.data_levels(SINE))
    n = op.grid.nt
    target = CauchyData(free.values[n].copy(), free.time_derivative(n))
    prob_t = _prob(nx=40, target=target)
    sol = solve_exact_control(prob_t)
    scale = np.max(np.abs(solve_null_control(prob).control[2]))
    assert np.max(np.abs(sol.control[2])) <= 1e-3 * scale


def test_minimality_small():
    prob = _prob(nx=40)
    op = HUMOperator(prob)
    sol = solve_null_control(prob, op)
    rep = minimality_check(op, sol, 4, seed=1)
    assert rep.passed and min(rep.relative_gaps) >= -1e-6
    # the cross term vanishes up to the kernel residual, so the gap is quadratic in the size
    (k1, k2, res), = kernel_perturbations(op, np.random.default_rng(2), 1)
    one = minimality_check(op, sol, perturbations=[(k1, k2, res)])
    two = minimality_check(op, sol, perturbations=[(2 * k1, 2 * k2, res)])
    q1 = one.relative_gaps[0] - one.cross_terms[0]
    q2 = two.relative_gaps[0] - two.cross_terms[0]
    assert abs(one.cross_terms[0]) < 0.5 * q1
    assert q2 / q1 == pytest.approx(4.0, rel=1e-9)
