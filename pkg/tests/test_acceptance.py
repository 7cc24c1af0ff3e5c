"""Acceptance criteria, one test each, at the stated tolerances and runtime budgets."""

import json
import time

import numpy as np
import pytest

from _configs import SMALL, write
from mbwave.carleman import carleman_suite
from mbwave.cli import main
from mbwave.estimates import (beam_ratio, full_side, gaussian_beam, mode_data,
                              multiplier_identity_check, timespan_scan)
from mbwave.gtc import Linear, linear_domain, optimal_times_1d, optimal_times_linear_closed_form
from mbwave.hum import HUMOperator, HUMProblem, minimality_check, solve_null_control
from mbwave.identities import identity_suite
from mbwave.mms import ManufacturedSolution, mms_errors
from mbwave.solver import CauchyData, Coefficients, certified_grid, energy, solve_forward


@pytest.fixture
def report(capsys):
    def emit(criterion, passed, detail, elapsed):
        with capsys.disabled():
            print(f"\n[criterion {criterion}] {'PASS' if passed else 'FAIL'} "
                  f"({elapsed:.1f} s) {detail}")
    return emit


def sine_data(dom, tau):
    l1, L = float(dom.lam1(tau)), float(dom.width(tau))
    return CauchyData(lambda x: np.sin(np.pi * (x - l1) / L), lambda x: 0.0 * x)


def test_criterion_1_optimal_times(report):
    t0 = time.perf_counter()
    worst = 0.0
    for h1, h2, tau in ((0.0, 0.5, 1.0), (-0.25, 0.25, 2.0), (0.0, -0.5, -1.0)):
        got = optimal_times_1d(Linear(h1), Linear(h2), tau)
        ref = optimal_times_linear_closed_form(h1, h2, tau)
        worst = max(worst, max(abs(got[k] - ref[k]) for k in ref))
    el = time.perf_counter() - t0
    ok = worst <= 1e-10 and el < 1.0
    report(1, ok, f"max deviation from closed forms {worst:.3e}", el)
    assert worst <= 1e-10
    assert el < 1.0


def test_criterion_2_identity_suite(report):
    t0 = time.perf_counter()
    rows = identity_suite((1, 2, 3), (0.0, 0.02, 0.05), 1000, 0)
    el = time.perf_counter() - t0
    bad = [(r.name, r.n, r.eps) for r in rows if not r.passed]
    closed = max(r.closed_residual for r in rows)
    fd = max(r.fd_residual for r in rows if r.fd_residual is not None)
    ok = not bad and el < 30.0 and min(r.points for r in rows) >= 1000
    report(2, ok, f"{len(rows)} cases, closed max {closed:.3e}, FD max {fd:.3e}, failing {bad}", el)
    assert min(r.points for r in rows) >= 1000
    assert not bad
    assert el < 30.0


def test_criterion_3_carleman_suite(report):
    t0 = time.perf_counter()
    rows = carleman_suite((1, 2, 3), (1, 4), 1.0, 1000, 0)
    el = time.perf_counter() - t0
    worst = max(r.identity_residual for r in rows)
    decays = [r.decay for r in rows]
    margin = min(min(r.margin_est, r.margin_rev) for r in rows)
    ok = all(r.passed for r in rows) and el < 60.0
    report(3, ok, f"identity residual {worst:.3e}, decay {min(decays):.3f}..{max(decays):.3f}, "
                  f"min margin {margin:.3e}", el)
    assert worst <= 1e-6
    assert all(3.5 <= d <= 4.5 for d in decays)
    assert margin >= -1e-8
    assert el < 60.0


def test_criterion_4_solver_convergence(report):
    t0 = time.perf_counter()
    dom = linear_domain(0.0, 0.3, 0.0, 2.0, 0.0, 1.0)
    coeffs = Coefficients(Xt=lambda t, x: 0.2 + 0 * x, Xx=lambda t, x: 0.1 * np.sin(t) + 0 * x,
                          V=lambda t, x: 0.5 + 0.1 * x)
    errs, _ = mms_errors(ManufacturedSolution(dom, coeffs), 0.0, 1.0,
                         ((100, 300), (200, 600), (400, 1200)))
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    static = linear_domain(0.0, 0.0, 0.0, 2.0, 0.0, 1.0)
    fld = solve_forward(static, Coefficients(), sine_data(static, 0.0),
                        certified_grid(static, 0.0, 2.0, 400, 1200))
    E = np.array([energy(fld, n) for n in range(fld.grid.nt + 1)])
    drift = float(np.max(np.abs(E - E[0])) / E[0])
    el = time.perf_counter() - t0
    ok = all(3.5 <= r <= 4.5 for r in ratios) and drift <= 1e-4 and el < 30.0
    report(4, ok, f"MMS ratios {[round(r, 4) for r in ratios]}, eigenmode drift {drift:.3e}", el)
    assert all(3.5 <= r <= 4.5 for r in ratios)
    assert drift <= 1e-4
    assert el < 30.0


def test_criterion_5_multiplier_identity(report):
    t0 = time.perf_counter()
    cases = {"static": (linear_domain(0.0, 0.0, 0.0, 3.0, 0.0, 1.0), (-0.5, 0.5)),
             "moving": (linear_domain(0.0, 0.3, 0.0, 3.0, 0.0, 1.0), (-0.5, 0.3))}
    summary = {}
    for name, (dom, center) in cases.items():
        data = mode_data(dom, 0.0, [1.0, 0.5], [0.3, 0.2])
        res = []
        for nx in (100, 200, 400):
            fld = solve_forward(dom, Coefficients(), data, certified_grid(dom, 0.0, 2.0, nx, 3 * nx))
            # unit initial energy
            res.append(multiplier_identity_check(fld, center).residual / energy(fld, 0))
        summary[name] = (abs(res[-1]), res[0] / res[1], res[1] / res[2])
    el = time.perf_counter() - t0
    ok = (all(s[0] <= 1e-3 and 3.5 <= s[1] <= 4.5 and 3.5 <= s[2] <= 4.5 for s in summary.values())
          and el < 30.0)
    report(5, ok, "; ".join(f"{k}: residual {v[0]:.3e}, ratios {v[1]:.3f} {v[2]:.3f}"
                            for k, v in summary.items()), el)
    for v in summary.values():
        assert v[0] <= 1e-3
        assert 3.5 <= v[1] <= 4.5 and 3.5 <= v[2] <= 4.5
    assert el < 30.0


def test_criterion_6_observability_threshold(report):
    t0 = time.perf_counter()
    dom = linear_domain(0.0, 0.5, 0.5, 4.0)
    tau, nx, per_unit, bnx = 1.0, 400, 600, 1600
    beam = gaussian_beam(0.35, 0.025, 40 * np.pi)
    rows, T = timespan_scan(dom, Coefficients(), [2], tau, (1.6, 2.0, 2.4), 0, nx, per_unit, beam,
                            32, bnx)
    by_w = {r.window: r for r in rows}
    half = beam_ratio(dom, Coefficients(), gaussian_beam(0.35, 0.0125, 40 * np.pi),
                      full_side(2, tau, tau + 1.6), tau, 1.6, bnx, int(np.ceil(per_unit * bnx / nx)))
    sep = by_w[2.4].min_ratio / by_w[1.6].beam_ratio
    drop = by_w[1.6].beam_ratio / half
    el = time.perf_counter() - t0
    ok = sep >= 10 and drop >= 10 and el < 300.0
    report(6, ok, f"T={T:.6g}, min ratio at 2.4 {by_w[2.4].min_ratio:.4g}, beam at 1.6 "
                  f"{by_w[1.6].beam_ratio:.3e} (separation {sep:.3g}), half-width beam {half:.3e} "
                  f"(drop {drop:.3g})", el)
    assert T == pytest.approx(2.0, abs=1e-12)
    assert sep >= 10
    assert drop >= 10
    assert el < 300.0


def test_criterion_7_hum_closed_loop(report, rng):
    t0 = time.perf_counter()
    static = linear_domain(0.0, 0.0, 0.0, 2.2, 0.0, 1.0)
    p_static = HUMProblem(static, Coefficients(), 0.0, 2.2, {2: [(0.0, 2.2)]},
                          sine_data(static, 0.0), nx=400, nt=1200)
    op_s = HUMOperator(p_static)
    sol_s = solve_null_control(p_static, op_s)
    sym = 0.0
    for _ in range(10):
        x, y = rng.standard_normal((2, 2 * op_s.m))
        a, b = op_s.apply(x) @ y, x @ op_s.apply(y)
        sym = max(sym, abs(a - b) / abs(a))
    mini = minimality_check(op_s, sol_s, 10, seed=0, tol=1e-6)
    moving = linear_domain(0.0, 0.5, 1.0, 3.2)
    p_moving = HUMProblem(moving, Coefficients(), 1.0, 3.2, {2: [(1.0, 3.2)]},
                          sine_data(moving, 1.0), nx=400, nt=1200)
    sol_m = solve_null_control(p_moving)
    el = time.perf_counter() - t0
    ok = (sol_s.relative_final_energy <= 1e-2 and sol_m.relative_final_energy <= 5e-2
          and sym <= 1e-10 and mini.passed and el < 300.0)
    report(7, ok, f"static {sol_s.relative_final_energy:.3e}, moving {sol_m.relative_final_energy:.3e}, "
                  f"Gram symmetry {sym:.3e}, min relative gap {mini.min_relative_gap:.3e}", el)
    assert sol_s.relative_final_energy <= 1e-2
    assert sol_m.relative_final_energy <= 5e-2
    assert sym <= 1e-10
    assert mini.min_relative_gap >= -1e-6
    assert el < 300.0


def test_criterion_8_determinism(report, tmp_path):
    t0 = time.perf_counter()
    differing = []
    for sub in SMALL:
        cfg = write(tmp_path, sub)
        outs = [tmp_path / f"{sub}-{k}" for k in (1, 2)]
        for o in outs:
            main([sub, "--config", str(cfg), "--out", str(o), "--seed", "11"])
        csvs = sorted(p.name for p in outs[0].glob("*.csv"))
        assert csvs, sub
        for name in csvs:
            if (outs[0] / name).read_bytes() != (outs[1] / name).read_bytes():
                differing.append(f"{sub}/{name}")
        assert json.loads((outs[0] / "manifest.json").read_text())["seed"] == 11
    el = time.perf_counter() - t0
    report(8, not differing, f"{len(SMALL)} subcommands run twice, differing CSVs: {differing}", el)
    assert not differing
