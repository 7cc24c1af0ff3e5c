"""Command-line entry point: one JSON config per experiment, CSV/JSON artifacts plus a manifest."""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import io as mio
from .config import (SUBCOMMANDS, ConfigError, ExperimentConfig, build_data, gamma_of, load_config,
                     number, parse_grid, require)
from .gtc import (REGION_HEADER, Linear, normal_components, optimal_times_1d,
                  optimal_times_linear_closed_form, region_scan)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
OPTIMAL_TIME_TOL = 1e-10
REGION_TOL = 1e-12


def _say(msg: str) -> None:
    print(msg, flush=True)


def _versions() -> dict:
    import numba
    import scipy

    return {"mbwave": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "python": sys.version.split()[0]}


# --- subcommands; each returns (passed, grid) -------------------------------------------


def run_optimal_times(cfg: ExperimentConfig, out: Path):
    require(cfg, "domain")
    sec = cfg.section("optimal-times")
    if "tau_minus" in sec:
        tau = number(sec["tau_minus"], "optimal_times.tau_minus")
    elif cfg.window is not None:
        tau = cfg.window[0]
    else:
        raise ConfigError("optimal_times.tau_minus: missing (or give window)")
    try:
        times = optimal_times_1d(cfg.domain.lam1, cfg.domain.lam2, tau)
    except ValueError as e:
        raise ConfigError(f"optimal_times: {e}") from None
    rows = [(k, v) for k, v in times.items()]
    passed = True
    closed = None
    l1, l2 = cfg.domain.lam1, cfg.domain.lam2
    if isinstance(l1, Linear) and isinstance(l2, Linear) and l1.intercept == 0 == l2.intercept:
        closed = optimal_times_linear_closed_form(l1.slope, l2.slope, tau)
        passed = all(abs(times[k] - closed[k]) <= OPTIMAL_TIME_TOL for k in closed)
    lines = ["name,value,closed_form"]
    for k, v in rows:
        lines.append(f"{k},{mio.fmt(v)},{mio.fmt(closed[k]) if closed else ''}")
    (out / "optimal_times.csv").write_text("\n".join(lines) + "\n")
    _say(f"T={mio.fmt(times['T_onesided'])} T-={mio.fmt(times['T_minus'])} "
         f"T+={mio.fmt(times['T_plus'])} T1={mio.fmt(times['T1'])} T2={mio.fmt(times['T2'])}")
    mio.write_json(out / "optimal_times.json", {"tau_minus": tau, "times": times,
                                                 "closed_form": closed, "pass": passed})
    return passed, None


def run_region(cfg: ExperimentConfig, out: Path):
    require(cfg, "domain", "center", "window")
    sec = cfg.section("region")
    samples = int(number(sec.get("samples", 201), "region.samples", 1, integer=True))
    r_samples = int(number(sec.get("r_samples", 10_000), "region.r_samples", 4, integer=True))
    try:
        scan = region_scan(cfg.domain, cfg.center, cfg.delta, cfg.window, samples, r_samples)
    except ValueError as e:
        raise ConfigError(f"region: {e}") from None
    fields = REGION_HEADER.split(",")
    counts = {}
    for side, name in ((1, "left"), (2, "right")):
        rows = [tuple(getattr(s, f) for f in fields) for s in scan if s.side == side]
        mio.write_csv(out / f"region_{name}.csv", REGION_HEADER, rows)
        counts[name] = {k: sum(getattr(s, k) for s in scan if s.side == side)
                        for k in ("in_gamma_plus", "in_gamma_Pdelta", "in_gamma_dagger")}
    # unit normals and the two forms of N r_P
    worst_unit = worst_nr = 0.0
    tau = np.linspace(cfg.window[0], cfg.window[1], samples)
    for side in (1, 2):
        nu_t, nu = normal_components(cfg.domain, side, tau)
        worst_unit = max(worst_unit, float(np.max(np.abs(-nu_t**2 + nu**2 - 1.0))))
    for s in scan:
        if s.fP > 0:
            nu_t, nu = normal_components(cfg.domain, s.side, s.tau)
            worst_nr = max(worst_nr, abs(s.NrP - np.sqrt(1 + nu_t**2) * s.costheta))
    passed = worst_unit < REGION_TOL and worst_nr < REGION_TOL
    mio.write_json(out / "region.json", {"center": list(cfg.center), "delta": cfg.delta,
                                         "window": list(cfg.window), "counts": counts,
                                         "unit_normal_residual": worst_unit,
                                         "NrP_residual": worst_nr, "pass": passed})
    _say(f"region: samples per side {samples}, unit-normal residual {mio.fmt(worst_unit)}, "
         f"N r_P residual {mio.fmt(worst_nr)}")
    return passed, None


def run_identity_check(cfg: ExperimentConfig, out: Path):
    from .identities import identity_suite

    sec = cfg.section("identity-check")
    count = int(number(sec.get("count", 1000), "identity_check.count", 1, integer=True))
    ns = tuple(int(number(x, "identity_check.ns", 1, 3, integer=True)) for x in sec.get("ns", [1, 2, 3]))
    epss = tuple(number(x, "identity_check.eps", 0.0, 0.1) for x in sec.get("eps", [0.0, 0.02, 0.05]))
    res = identity_suite(ns, epss, count, cfg.seed)
    header = ("name,n,eps,points,closed_residual,fd_residual,fd_residual_coarse,fd_ratio,"
              "fd_exact,pass")
    rows = [(r.name, r.n, r.eps, r.points, r.closed_residual,
             np.nan if r.fd_residual is None else r.fd_residual,
             np.nan if r.fd_residual_coarse is None else r.fd_residual_coarse,
             np.nan if r.fd_ratio is None else r.fd_ratio,
             r.fd_exact if r.fd_residual is not None else False, r.passed) for r in res]
    mio.write_csv(out / "identities.csv", header, rows)
    passed = all(r.passed for r in res)
    summary = {}
    for r in res:
        s = summary.setdefault(r.name, {"closed_max": 0.0, "fd_max": 0.0, "pass": True})
        s["closed_max"] = max(s["closed_max"], r.closed_residual)
        if r.fd_residual is not None:
            s["fd_max"] = max(s["fd_max"], r.fd_residual)
        s["pass"] = s["pass"] and r.passed
    for name, s in summary.items():
        _say(f"{name:14s} closed {mio.fmt(s['closed_max'])} fd {mio.fmt(s['fd_max'])} "
             f"{'PASS' if s['pass'] else 'FAIL'}")
    mio.write_json(out / "identities.json", {"count": count, "ns": list(ns), "eps": list(epss),
                                             "identities": summary, "pass": passed})
    return passed, None


def run_carleman_check(cfg: ExperimentConfig, out: Path):
    from .carleman import carleman_suite
    from .estimates import carleman_quadrature_check
    from .testfuncs import catalog
    from .warped import CarlemanParams

    c = cfg.carleman
    count = int(number(c.get("count", 1000), "carleman.count", 1, integer=True))
    ns = tuple(int(number(x, "carleman.ns", 1, 3, integer=True)) for x in c.get("ns", [1, 2, 3]))
    factors = tuple(number(x, "carleman.a_factors", 1.0) for x in c.get("a_factors", [1, 4]))
    R = c.get("R", 1.0)
    rows = carleman_suite(ns, factors, R, count, cfg.seed)
    suite = [{"n": r.n, "a": r.a, "b": r.b, "eps": r.eps, "identity_residual": r.identity_residual,
              "decay": r.decay, "margin_est": r.margin_est, "margin_rev": r.margin_rev,
              "margin_abs": r.margin_abs, "pass": r.passed} for r in rows]
    passed = all(r.passed for r in rows)
    for r in rows:
        _say(f"n={r.n} a={mio.fmt(r.a)} identity {mio.fmt(r.identity_residual)} "
             f"decay {mio.fmt(r.decay)} margins {mio.fmt(r.margin_est)} {mio.fmt(r.margin_rev)} "
             f"{'PASS' if r.passed else 'FAIL'}")
    # term-by-term quadrature on a static interval
    center = cfg.center or (0.5, -0.25)
    tf_name = c.get("test_function", "trig_sum")
    by_name = {tf.name: tf for tf in catalog(1)}
    by_name.update({k.removesuffix("_Y0"): v for k, v in list(by_name.items())})
    if tf_name not in by_name:
        raise ConfigError(f"carleman.test_function: unknown {tf_name!r}; one of {sorted(by_name)}")
    params = None
    if "a" in c or "b" in c or "eps" in c:
        Rq = 1.2 * (1.0 - center[1])
        base = CarlemanParams.standard(1, Rq, c.get("a_factor", 1.0))
        params = replace(base, a=c.get("a", base.a), b=c.get("b", base.b), eps=c.get("eps", base.eps))
        bad = params.violations()
        if bad:
            raise ConfigError("carleman: " + "; ".join(bad))
    grids = ((cfg.grid[0], cfg.grid[0] // 2), (2 * cfg.grid[0], cfg.grid[0]))
    rep = carleman_quadrature_check(by_name[tf_name], (0.0, 1.0), center, params,
                                    c.get("C_prime", 1.0), grids)
    header = "grid_nt,grid_nx,box,grad,zero,boundary,C_emp"
    qrows = []
    for i, g in enumerate(grids):
        qrows.append((g[0], g[1], *(rep.refinement[k][i] for k in ("box", "grad", "zero", "boundary",
                                                                   "C_emp"))))
    mio.write_csv(out / "carleman.csv", header, qrows)
    mio.write_json(out / "carleman.json", {"suite": suite, "quadrature": {
        "params": rep.params, "C_emp": rep.margin, "converged": rep.converged,
        "log_weight_shift": rep.terms["log_weight_shift"]}, "pass": passed})
    _say(f"quadrature C_emp {mio.fmt(rep.margin)} (converged: {rep.converged})")
    return passed and rep.converged, {"quadrature_grids": [list(g) for g in grids]}


def run_simulate(cfg: ExperimentConfig, out: Path):
    from .solver import CFLError, IncompatibleDataError, certified_grid, energy, solve_forward

    require(cfg, "domain", "window")
    sec = cfg.section("simulate")
    data = build_data(sec.get("data", {"kind": "modes", "a": [1.0]}), cfg.domain, cfg.window[0],
                      "simulate.data")
    grid = certified_grid(cfg.domain, cfg.window[0], cfg.window[1], *cfg.grid)
    try:
        fld = solve_forward(cfg.domain, cfg.coefficients, data, grid)
    except (CFLError, IncompatibleDataError) as e:
        raise ConfigError(f"simulate: {e}") from None
    M0 = number(sec.get("M0", 0.0), "simulate.M0", 0.0)
    E = [energy(fld, n, M0) for n in range(grid.nt + 1)]
    mio.write_csv(out / "energy.csv", "t,energy", list(zip(grid.t, E)))
    stride = int(number(sec.get("field_stride", max(1, grid.nt // 100)), "simulate.field_stride", 1,
                        integer=True))
    rows = []
    for n in range(0, grid.nt + 1, stride):
        for x, w in zip(fld.x_nodes(n), fld.values[n]):
            rows.append((grid.t[n], x, w))
    mio.write_csv(out / "field.csv", "t,x,value", rows)
    mio.write_field_binary(out / "field.bin", fld.values, grid.t0, grid.t1)
    finite = bool(np.all(np.isfinite(fld.values)))
    drift = abs(E[-1] - E[0]) / E[0] if E[0] > 0 else 0.0
    info = {"nx": grid.nx, "nt": grid.nt, "nt_requested": grid.nt_requested}
    mio.write_json(out / "simulate.json", {"grid": info, "cfl": fld.certificate,
                                           "energy_initial": E[0], "energy_final": E[-1],
                                           "relative_energy_change": drift, "pass": finite})
    _say(f"simulate: {grid.nx}x{grid.nt} (requested nt {grid.nt_requested}), "
         f"energy {mio.fmt(E[0])} -> {mio.fmt(E[-1])}")
    return finite, info


def run_observability_scan(cfg: ExperimentConfig, out: Path):
    from .estimates import ENSEMBLE_SIZE, timespan_scan

    require(cfg, "domain", "window")
    sec = cfg.section("observability-scan")
    sides = sec.get("sides", [2])
    for i, s in enumerate(sides):
        if number(s, f"observability_scan.sides[{i}]", integer=True) not in (1, 2):
            raise ConfigError(f"observability_scan.sides[{i}]: side must be 1 or 2")
    windows = sec.get("windows")
    if not windows:
        raise ConfigError("observability_scan.windows: missing or empty")
    windows = [number(w, f"observability_scan.windows[{i}]", 0.0, open_lo=True)
               for i, w in enumerate(windows)]
    tau = cfg.window[0]
    if tau + max(windows) > cfg.domain.t_max:
        raise ConfigError("observability_scan.windows: longest window exceeds domain.t_max")
    size = int(number(sec.get("ensemble_size", ENSEMBLE_SIZE), "observability_scan.ensemble_size",
                      1, integer=True))
    nx, nt = cfg.grid
    span = cfg.window[1] - cfg.window[0]
    nt_per_unit = int(number(sec.get("nt_per_unit", int(np.ceil(nt / span))),
                             "observability_scan.nt_per_unit", 1, integer=True))
    beam = build_data(sec["beam"], cfg.domain, tau, "observability_scan.beam") if "beam" in sec else None
    beam_nx = int(number(sec.get("beam_nx", nx), "observability_scan.beam_nx", 4, integer=True))
    rows, T = timespan_scan(cfg.domain, cfg.coefficients, [int(s) for s in sides], tau, windows,
                            cfg.seed, nx, nt_per_unit, beam, size, beam_nx)
    mio.write_csv(out / "scan.csv", "window,min_ratio,median_ratio,optimal_T_marker",
                  [(r.window, r.min_ratio, r.median_ratio, r.optimal_T_marker) for r in rows])
    if beam is not None:
        mio.write_csv(out / "beam.csv", "window,beam_ratio", [(r.window, r.beam_ratio) for r in rows])
    above = [r for r in rows if r.window >= T - 1e-12]
    below = [r for r in rows if r.window < T - 1e-12]
    passed = bool(above) and all(r.min_ratio > 0 for r in above)
    separation = None
    if beam is not None and above and below:
        separation = above[0].min_ratio / below[-1].beam_ratio
        passed = passed and separation >= 10.0
    for r in rows:
        _say(f"window {mio.fmt(r.window)} min {mio.fmt(r.min_ratio)} median "
             f"{mio.fmt(r.median_ratio)} beam {mio.fmt(r.beam_ratio)}{' <- T' if r.optimal_T_marker else ''}")
    mio.write_json(out / "scan.json", {"T": T, "seed": cfg.seed, "ensemble_size": size,
                                       "grid": {"nx": nx, "nt_per_unit": nt_per_unit,
                                                "beam_nx": beam_nx},
                                       "separation": separation, "pass": passed})
    return passed, {"nx": nx, "nt_per_unit": nt_per_unit, "beam_nx": beam_nx}


def run_hum(cfg: ExperimentConfig, out: Path):
    from .hum import PAIRINGS, HUMOperator, HUMProblem, minimality_check, solve_exact_control, solve_null_control

    require(cfg, "domain", "window")
    sec = cfg.section("hum")
    t0, t1 = cfg.window
    gamma = gamma_of(cfg, sec.get("gamma", [2]), "hum.gamma")
    init = build_data(sec.get("initial", {"kind": "modes", "a": [1.0]}), cfg.domain, t0, "hum.initial")
    target = build_data(sec["target"], cfg.domain, t1, "hum.target") if "target" in sec else None
    pairing = sec.get("pairing", "h1")
    if pairing not in PAIRINGS:
        raise ConfigError(f"hum.pairing: expected one of {PAIRINGS}, got {pairing!r}")
    tol = number(sec.get("tol", 1e-2), "hum.tol", 0.0, open_lo=True)
    prob = HUMProblem(cfg.domain, cfg.coefficients, t0, t1, gamma, init, target,
                      rho_reg=number(sec.get("rho_reg", 1e-8), "hum.rho_reg", 0.0),
                      cg_tol=number(sec.get("cg_tol", 1e-8), "hum.cg_tol", 0.0, open_lo=True),
                      cg_maxiter=int(number(sec.get("cg_maxiter", 500), "hum.cg_maxiter", 1, integer=True)),
                      pairing=pairing, nx=cfg.grid[0], nt=cfg.grid[1])
    op = HUMOperator(prob)
    sol = solve_exact_control(prob, op) if target is not None else solve_null_control(prob, op)
    for side in (1, 2):
        mio.write_csv(out / f"control_side{side}.csv", "tau,control_value",
                      list(zip(sol.tau, sol.control[side])))
    measure = sol.target_error if target is not None else sol.relative_final_energy
    passed = measure <= tol
    diag = {"relative_final_energy": sol.relative_final_energy, "final_energy": sol.final_energy,
            "initial_energy": sol.initial_energy, "target_error": sol.target_error,
            "control_norm": sol.control_norm, "control_l2": sol.control_l2, "rho_reg": sol.rho_reg,
            "cg_converged": sol.converged, "J_history": sol.J_history,
            "residual_history": sol.residual_history, "grid": sol.grid, "tol": tol}
    if sec.get("minimality", False):
        rep = minimality_check(op, sol, int(number(sec.get("n_perturb", 10), "hum.n_perturb", 1,
                                                   integer=True)), cfg.seed)
        diag["minimality"] = {"hum_norm": rep.hum_norm, "relative_gaps": rep.relative_gaps,
                              "min_relative_gap": rep.min_relative_gap, "pass": rep.passed}
        passed = passed and rep.passed
    diag["pass"] = passed
    mio.write_json(out / "hum.json", diag)
    _say(f"hum: relative final energy {mio.fmt(sol.relative_final_energy)}"
         + (f", target error {mio.fmt(sol.target_error)}" if target is not None else "")
         + f", CG converged {sol.converged}")
    return passed, sol.grid


HANDLERS = {
    "region": run_region,
    "identity-check": run_identity_check,
    "carleman-check": run_carleman_check,
    "simulate": run_simulate,
    "observability-scan": run_observability_scan,
    "hum": run_hum,
    "optimal-times": run_optimal_times,
}


def dispatch(subcommand: str, config_path: str, out: str | None = None, grid: str | None = None,
             seed: int | None = None) -> int:
    t_start = time.perf_counter()
    try:
        cfg = load_config(config_path)
        if grid is not None:
            cfg.grid = parse_grid(grid)
        if seed is not None:
            if not 0 <= seed < 2**64:
                raise ConfigError("--seed: must be an unsigned 64-bit integer")
            cfg.seed = seed
        out_dir = Path(out if out is not None else cfg.output)
        out_dir.mkdir(parents=True, exist_ok=True)
        passed, grid_info = HANDLERS[subcommand](cfg, out_dir)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:
        # module preconditions not caught by the config layer
        print(f"config error: {subcommand}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    wall_ms = 1000.0 * (time.perf_counter() - t_start)
    g = grid_info if grid_info is not None else {"nx": cfg.grid[0], "nt": cfg.grid[1]}
    mio.write_manifest(out_dir, subcommand, cfg.sha256, cfg.seed, g, wall_ms, passed, _versions())
    _say("PASS" if passed else "FAIL")
    return EXIT_PASS if passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mbwave", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON experiment file")
        sp.add_argument("--out", default=None, help="output directory (overrides config)")
        sp.add_argument("--grid", default=None, metavar="NXxNT", help="grid override")
        sp.add_argument("--seed", type=int, default=None, help="u64 seed override")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return dispatch(args.subcommand, args.config, args.out, args.grid, args.seed)


if __name__ == "__main__":
    sys.exit(main())
