import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbwave import io as mio
from mbwave.estimates import mode_data
from mbwave.gtc import linear_domain
from mbwave.hum import HUMOperator, HUMProblem
from mbwave.mms import ManufacturedSolution, mms_errors
from mbwave.solver import (CauchyData, CFLError, Coefficients, Grid, IncompatibleDataError,
                           certified_grid, cfl_certificate, energy, neumann_trace, solve_adjoint,
                           solve_backward, solve_forward)

STATIC = linear_domain(0.0, 0.0, 0.0, 3.0, 0.0, 1.0)
SINE = CauchyData(lambda x: np.sin(np.pi * x), lambda x: 0 * x)
COEFFS = Coefficients(Xt=lambda t, x: 0.2 + 0 * x, Xx=lambda t, x: 0.1 * np.sin(t) + 0 * x,
                      V=lambda t, x: 0.5 + 0.1 * x)


def _eig_error(nx, nt):
    g = Grid(nx, nt, 0.0, 2.0)
    f = solve_forward(STATIC, Coefficients(), SINE, g)
    T, X = np.meshgrid(g.t, g.y, indexing="ij")
    return np.max(np.abs(f.values - np.sin(np.pi * X) * np.cos(np.pi * T)))


def test_eigenmode_order_two():
    e1, e2 = _eig_error(50, 200), _eig_error(100, 400)
    assert e1 < 1e-2 and 3.5 <= e1 / e2 <= 4.5


def test_zero_field():
    g = certified_grid(STATIC, 0, 1, 40, 80)
    z = CauchyData(lambda x: 0 * x, lambda x: 0 * x)
    f = solve_forward(STATIC, COEFFS, z, g)
    assert np.all(f.values == 0)


def test_mms_static_and_moving():
    for h2 in (0.0, 0.3):
        dom = linear_domain(0.0, h2, 0.0, 2.0, 0.0, 1.0)
        errs, _ = mms_errors(ManufacturedSolution(dom, COEFFS), 0.0, 1.0,
                             ((40, 120), (80, 240)))
        assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_dirichlet_rows_bit_exact():
    dom = linear_domain(0.0, 0.3, 0.0, 2.0, 0.0, 1.0)
    g = certified_grid(dom, 0, 1.5, 60, 200)
    g1 = lambda t: 0.1 * np.sin(3 * t)
    g2 = lambda t: 0.05 * t * t
    data = CauchyData(lambda x: 0 * x, lambda x: 0 * x)
    f = solve_forward(dom, COEFFS, data, g, dirichlet=(g1, g2))
    assert np.array_equal(f.values[:, 0], g1(g.t))
    assert np.array_equal(f.values[:, -1], g2(g.t))


def test_incompatible_data_rejected():
    g = certified_grid(STATIC, 0, 1, 40, 80)
    with pytest.raises(IncompatibleDataError):
        solve_forward(STATIC, Coefficients(), CauchyData(lambda x: 1 + 0 * x, lambda x: 0 * x), g)


def test_cfl_violation_rejected():
    with pytest.raises(CFLError):
        solve_forward(STATIC, Coefficients(), SINE, Grid(100, 10, 0.0, 1.0))
    g = certified_grid(STATIC, 0, 1, 100, 10)
    assert g.nt > 10 and cfl_certificate(STATIC, g)["ok"]


def test_reversibility():
    g = certified_grid(STATIC, 0, 1.3, 100, 400)
    f = solve_forward(STATIC, Coefficients(), SINE, g)
    n = g.nt
    back = solve_backward(STATIC, Coefficients(),
                          CauchyData(f.values[n].copy(), f.time_derivative(n)), g)
    assert np.max(np.abs(back.values[0] - f.values[0])) < 1e-3


def test_adjoint_equals_forward_without_drift():
    g = certified_grid(STATIC, 0, 2, 100, 300)
    f = solve_forward(STATIC, Coefficients(V=lambda t, x: 0.3 + 0 * x), SINE, g)
    a = solve_adjoint(STATIC, Coefficients(V=lambda t, x: 0.3 + 0 * x), SINE, g)
    assert np.max(np.abs(f.values - a.values)) < 1e-10


def test_constant_drift_adjoint_coefficients():
    c = Coefficients(Xt=lambda t, x: 0.4 + 0 * x)
    adj = c.adjoint()
    t = np.linspace(0, 1, 5)
    assert np.all(adj.Xt(t, t) == -0.4)
    assert np.allclose(adj.V(t, t), 0.0, atol=1e-9)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_discrete_duality(seed):
    rng = np.random.default_rng(seed)
    dom = linear_domain(0.0, 0.3, 0.0, 2.0, 0.0, 1.0)
    prob = HUMProblem(dom, COEFFS, 0.0, 1.2, {1: [(0, 1.2)], 2: [(0, 1.2)]},
                      mode_data(dom, 0, [1], [0]), nx=40, nt=120)
    op = HUMOperator(prob)
    g1, g2 = rng.standard_normal((2, op.grid.nt + 1))
    g1[0] = g2[0] = 0.0
    mu = rng.standard_normal(2 * op.m)
    s1, s2 = op.control_map_T(mu)
    lhs = float(op.control_map(g1, g2) @ mu)
    rhs = float(g1 @ s1 + g2 @ s2)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs), np.abs(g1 * s1).sum() + np.abs(g2 * s2).sum())


def test_neumann_trace_eigenmode():
    g = Grid(200, 800, 0.0, 2.0)
    f = solve_forward(STATIC, Coefficients(), SINE, g)
    tr = neumann_trace(f, 2)
    assert np.max(np.abs(tr.Nphi + np.pi * np.cos(np.pi * tr.tau))) < 2e-3
    left = neumann_trace(f, 1)
    np.testing.assert_allclose(np.abs(left.Nphi), np.abs(tr.Nphi), atol=1e-10)


def test_neumann_trace_moving_factor():
    dom = linear_domain(0.0, 0.6, 0.0, 1.0, 0.0, 1.0)
    g = certified_grid(dom, 0.0, 0.5, 200, 400)
    f = solve_forward(dom, Coefficients(), mode_data(dom, 0.0, [1.0, 0.3], [0.5]), g)
    tr = neumann_trace(f, 2)
    dx = (3 * f.values[:, -1] - 4 * f.values[:, -2] + f.values[:, -3]) / (2 * g.dy * f.disc.L)
    np.testing.assert_allclose(tr.Nphi, 0.8 * dx, rtol=1e-12, atol=1e-14)
    with pytest.raises(ValueError):
        neumann_trace(solve_forward(dom, Coefficients(), CauchyData(lambda x: 0 * x, lambda x: 0 * x),
                                    g, dirichlet=(None, lambda t: t)), 2)


def test_energy_conservation_small():
    g = certified_grid(STATIC, 0, 2, 200, 600)
    f = solve_forward(STATIC, Coefficients(), SINE, g)
    E = np.array([energy(f, n) for n in range(g.nt + 1)])
    assert np.max(np.abs(E - E[0])) / E[0] < 1e-3


def test_field_exports_roundtrip(tmp_path):
    g = certified_grid(STATIC, 0, 0.5, 20, 40)
    f = solve_forward(STATIC, Coefficients(), SINE, g)
    mio.write_field_binary(tmp_path / "f.bin", f.values, g.t0, g.t1)
    vals, (t0, t1) = mio.read_field_binary(tmp_path / "f.bin")
    assert np.array_equal(vals, f.values) and (t0, t1) == (g.t0, g.t1)
    mio.write_field_csv(tmp_path / "f.csv", f)
    header, rows = mio.read_csv(tmp_path / "f.csv")
    assert header == ["t", "x", "value"] and len(rows) == (g.nt + 1) * (g.nx + 1)
    assert np.array_equal(np.array([float(r[2]) for r in rows]), f.values.ravel())
