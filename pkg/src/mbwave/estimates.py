"""Quadrature checks of integral identities and inequalities on numerical and analytic fields."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jets
from .gtc import GTC1D, normal_components, optimal_times_1d
from .solver import (CauchyData, Coefficients, Field, certified_grid, energy, neumann_trace,
                     solve_forward)
from .testfuncs import TestFunction
from .warped import CarlemanParams, carleman_weight, conformal_factor, hyperbolic_f
from .workers import pmap

STABILITY_TOL = 0.01
ENSEMBLE_SIZE = 32
ENSEMBLE_MODES = 10


@dataclass
class EstimateReport:
    lhs: float
    rhs: float
    margin: float
    terms: dict
    grid: dict
    params: dict
    refinement: dict = field(default_factory=dict)  # coarse/fine values of each quantity
    converged: bool = True


def _trapz(v, dx):
    return float(dx * (np.sum(v) - 0.5 * (v[0] + v[-1])))


# --- multiplier identity ------------------------------------------------------------


def multiplier_slice_density(fld: Field, n: int, center):
    """phi_t S phi - 1/2 d_t f (grad phi . grad phi) at level n, with S = grad f, in 1+1D."""
    t_P = fld.t[n] - center[0]
    x_P = fld.x_nodes(n) - center[1]
    pt = fld.time_derivative(n)
    px = fld.space_derivative(n)
    # S phi = (t_P/2) phi_t + (x_P/2) phi_x, d_t f = -t_P/2, grad phi.grad phi = -phi_t^2 + phi_x^2
    return pt * (0.5 * t_P * pt + 0.5 * x_P * px) + 0.25 * t_P * (-pt * pt + px * px)


@dataclass
class MultiplierResult:
    slice_plus: float
    slice_minus: float
    boundary: float
    residual: float


def multiplier_identity_check(fld: Field, center, tol_dirichlet: float = 1e-12) -> MultiplierResult:
    """Both sides of the slice/boundary multiplier identity for a Dirichlet-zero free wave.

    LHS: [int phi_t S phi - 1/2 d_t f |grad phi|^2]_{t0}^{t1}; RHS: 1/2 int Nf (N phi)^2 dsigma.
    """
    nt = fld.grid.nt
    d = fld.disc
    dx = lambda n: fld.grid.dy * d.L[n]
    Sp = _trapz(multiplier_slice_density(fld, nt, center), dx(nt))
    Sm = _trapz(multiplier_slice_density(fld, 0, center), dx(0))
    bnd = 0.0
    for side in (1, 2):
        tr = neumann_trace(fld, side, tol_dirichlet)
        nu_t, nu = normal_components(d.dom, side, tr.tau)
        t_P = tr.tau - center[0]
        x_P = d.dom.curve(side)(tr.tau) - center[1]
        Nf = 0.5 * (x_P * nu - t_P * nu_t)
        bnd += 0.5 * float(np.sum(tr.weights * Nf * tr.Nphi**2))
    return MultiplierResult(Sp, Sm, bnd, (Sp - Sm) - bnd)


# --- Carleman quadrature --------------------------------------------------------------


def cutoff_test_function(tf: TestFunction, dom_static: tuple, center):
    """phi = (x - x_l)(x_r - x) psi(u, v) on a static interval, as a jet-valued callable of (u, v).

    Requires the center to lie to the left of the interval (x - x_0 = r = v - u there).
    """
    xl, xr = dom_static
    t0, x0 = center
    if x0 >= xl:
        raise ValueError("the center must lie to the left of the interval")

    def jet(u, v):
        U, V, TH = jets.coords(u, v, np.zeros_like(u), 2)
        X = (V - U) + x0
        return (X - xl) * (xr - X) * tf.expr(U, V, TH)

    return jet


def carleman_terms(jet_fn, dom_static, center, p: CarlemanParams, nt: int, nx: int,
                   f_min_factor: float = 1e-6):
    """Term-by-term quadrature over U cap D_P of the 1+1D Carleman inequality.

    Cell-centre midpoint rule on [t0 - r_max, t0 + r_max] x [x_l, x_r]; the collar
    f_P < f_min_factor R^2 is excluded. The weight is normalized by its maximum over
    the quadrature nodes (every term carries it, so ratios are unaffected); the log of
    the normalization is returned.
    """
    xl, xr = dom_static
    t0, x0 = center
    rmax = xr - x0
    tt = t0 - rmax + (np.arange(nt) + 0.5) * (2 * rmax / nt)
    xx = xl + (np.arange(nx) + 0.5) * ((xr - xl) / nx)
    T, X = np.meshgrid(tt, xx, indexing="ij")
    t_P, r = T - t0, X - x0
    u, v = 0.5 * (t_P - r), 0.5 * (t_P + r)
    f = -u * v
    keep = f >= f_min_factor * p.R**2
    u, v, f, r = u[keep], v[keep], f[keep], r[keep]
    cell = (2 * rmax / nt) * ((xr - xl) / nx)
    out = {k: 0.0 for k in ("box", "grad", "zero")}
    if u.size == 0:
        raise ValueError("empty quadrature region U cap D_P")
    xi = conformal_factor(u, v, p.eps)
    den = np.sqrt((1 - p.eps * u) * (1 + p.eps * v))
    logz = 2 * p.a * (np.log(f / xi) + 2 * p.b * np.sqrt(f) / den)
    shift = float(np.max(logz))
    z = np.exp(logz - shift)
    J = jet_fn(u, v)
    box = -J.H[..., 0, 1]
    pu, pv = J.g[..., 0], J.g[..., 1]
    out["box"] = float(np.sum(z * f * box**2) * cell) / p.a
    out["grad"] = p.eps * float(np.sum(z / r * ((u * pu) ** 2 + (v * pv) ** 2)) * cell)
    out["zero"] = p.b * p.a**2 * float(np.sum(z / np.sqrt(f) * J.v**2) * cell)
    # boundary: both static sides, Nphi = -/+ phi_x, dsigma = dtau
    bnd = 0.0
    for side, xb in ((1, xl), (2, xr)):
        rb = xb - x0
        tb = t0 + rb * (2 * (np.arange(nt) + 0.5) / nt - 1)
        ub, vb = 0.5 * (tb - t0 - rb), 0.5 * (tb - t0 + rb)
        fb = -ub * vb
        ok = fb >= f_min_factor * p.R**2
        ub, vb, fb, tbP = ub[ok], vb[ok], fb[ok], (tb - t0)[ok]
        if ub.size == 0:
            continue
        nu = -1.0 if side == 1 else 1.0
        Nr = nu  # x_P > 0 on both sides
        Nf = 0.5 * rb * nu  # static: nu_t = 0
        Jb = jet_fn(ub, vb)
        phix = 0.5 * (Jb.g[..., 1] - Jb.g[..., 0])
        xib = conformal_factor(ub, vb, p.eps)
        denb = np.sqrt((1 - p.eps * ub) * (1 + p.eps * vb))
        zb = np.exp(2 * p.a * (np.log(fb / xib) + 2 * p.b * np.sqrt(fb) / denb) - shift)
        dtau = 2 * rb / nt
        bnd += float(np.sum(zb * ((1 - p.eps * rb) * Nf + p.eps * fb * Nr) * phix**2) * dtau)
    out["boundary"] = bnd
    out["log_weight_shift"] = shift
    return out


def carleman_quadrature_check(tf: TestFunction, dom_static=(0.0, 1.0), center=(0.5, -0.25),
                              params: CarlemanParams | None = None, C_prime: float = 1.0,
                              grids=((400, 200), (800, 400))) -> EstimateReport:
    """Empirical largest C with LHS(C') >= C (grad term + zero-order term), on two grids."""
    R = 1.2 * (dom_static[1] - center[1])
    p = (params or CarlemanParams.standard(1, R)).validate()
    if p.n != 1:
        raise ValueError("the quadrature check is 1+1 dimensional")
    jf = cutoff_test_function(tf, dom_static, center)
    vals = []
    for nt, nx in grids:
        tm = carleman_terms(jf, dom_static, center, p, nt, nx)
        lhs = tm["box"] + C_prime * tm["boundary"]
        rhs_unit = tm["grad"] + tm["zero"]
        C_emp = lhs / rhs_unit if rhs_unit > 0 else float("inf")
        vals.append((tm, lhs, rhs_unit, C_emp))
    tm, lhs, rhs_unit, C_emp = vals[-1]
    refinement = {k: (vals[0][0][k], vals[-1][0][k]) for k in ("box", "grad", "zero", "boundary")}
    refinement["C_emp"] = (vals[0][3], vals[-1][3])
    conv = all(_stable(a, b) for a, b in refinement.values())
    return EstimateReport(lhs=lhs, rhs=rhs_unit, margin=C_emp, terms=tm,
                          grid={"grids": [list(g) for g in grids]},
                          params={"a": p.a, "b": p.b, "eps": p.eps, "R": p.R, "C_prime": C_prime,
                                  "center": list(center), "test_function": tf.name},
                          refinement=refinement, converged=conv)


def _stable(a, b, tol=STABILITY_TOL):
    if a == b:
        return True
    return abs(a - b) <= tol * max(abs(a), abs(b))


def carleman_a_sweep(tf: TestFunction, factors=(1, 2, 4), **kw):
    """Zero-order RHS term relative to the box LHS term, across a = factor * n^2."""
    center = kw.get("center", (0.5, -0.25))
    dom_static = kw.get("dom_static", (0.0, 1.0))
    R = 1.2 * (dom_static[1] - center[1])
    out = []
    for fac in factors:
        p = CarlemanParams.standard(1, R, a_factor=fac)
        rep = carleman_quadrature_check(tf, dom_static, center, p, grids=kw.get("grids", ((400, 200),)))
        out.append({"a": p.a, "zero_over_box": rep.terms["zero"] / rep.terms["box"],
                    "C_emp": rep.margin})
    return out


# --- observability ---------------------------------------------------------------------


def gaussian_beam(x_c, sigma, k, direction=-1):
    """Wave packet travelling along a null ray: direction -1 moves left (phi = F(x + t))."""
    F = lambda x: np.exp(-((x - x_c) ** 2) / sigma**2) * np.cos(k * (x - x_c))
    dF = lambda x: np.exp(-((x - x_c) ** 2) / sigma**2) * (
        -2 * (x - x_c) / sigma**2 * np.cos(k * (x - x_c)) - k * np.sin(k * (x - x_c)))
    return CauchyData(F, lambda x: -direction * dF(x))


def mode_data(dom: GTC1D, tau: float, a, b) -> CauchyData:
    """phi0 = sum a_k sin(k pi y), d_t phi|_y = sum b_k (k pi / L) sin(k pi y) on the slice tau.

    The physical time derivative includes the transport term -(c/L) d_y phi0, which makes
    the data compatible with Dirichlet-zero data on moving curves (d_t phi + lam' d_x phi = 0
    at both ends).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    l1, L = float(dom.lam1(tau)), float(dom.width(tau))
    l1p = float(dom.lam1.d1(tau))
    Lp = float(dom.lam2.d1(tau)) - l1p
    k = np.arange(1, a.size + 1)
    kb = np.arange(1, b.size + 1)

    def y_of(x):
        return (np.asarray(x, dtype=float) - l1) / L

    def phi0(x):
        return np.sin(np.pi * np.multiply.outer(y_of(x), k)) @ a

    def phi1(x):
        y = y_of(x)
        ws = np.sin(np.pi * np.multiply.outer(y, kb)) @ (b * kb * np.pi / L)
        w_y = np.cos(np.pi * np.multiply.outer(y, k)) @ (a * k * np.pi)
        return ws - (l1p + y * Lp) / L * w_y

    return CauchyData(phi0, phi1)


def eigenmode_ensemble(dom: GTC1D, tau_minus: float, seed: int, size: int = ENSEMBLE_SIZE,
                       modes: int = ENSEMBLE_MODES):
    """Random combinations of the slice's Dirichlet modes sin(k pi y), k = 1..modes."""
    rng = np.random.default_rng(seed)
    return [mode_data(dom, tau_minus, rng.standard_normal(modes), rng.standard_normal(modes))
            for _ in range(size)]


def observation(fld: Field, gamma: dict) -> float:
    """sum over sides of the integral over Gamma (tau intervals) of (N phi)^2 dsigma."""
    tot = 0.0
    for side, intervals in gamma.items():
        tr = neumann_trace(fld, side)
        mask = np.zeros_like(tr.tau, dtype=bool)
        for a, b in intervals:
            mask |= (tr.tau >= a - 1e-12) & (tr.tau <= b + 1e-12)
        tot += float(np.sum(tr.weights[mask] * tr.Nphi[mask] ** 2))
    return tot


def observability_ratio_single(fld: Field, gamma: dict) -> float:
    """Observation on Gamma over the mean of the slice energies (grad^2 + phi^2) at both ends."""
    E = 0.5 * (energy(fld, 0, 1.0) + energy(fld, fld.grid.nt, 1.0))
    return observation(fld, gamma) / E


@dataclass
class ObservabilityResult:
    ratios: list
    min_ratio: float
    median_ratio: float
    window: float
    grid: dict
    seed: int | None = None


def observability_ratio(dom: GTC1D, coeffs: Coefficients, ensemble, gamma: dict, t0: float,
                        t1: float, nx: int = 400, nt: int = 1200, seed=None) -> ObservabilityResult:
    if not ensemble:
        raise ValueError("empty ensemble")
    grid = certified_grid(dom, t0, t1, nx, nt)
    ratios = pmap(lambda d: observability_ratio_single(solve_forward(dom, coeffs, d, grid), gamma),
                  ensemble)
    return ObservabilityResult(ratios, float(np.min(ratios)), float(np.median(ratios)), t1 - t0,
                               {"nx": nx, "nt": grid.nt, "nt_requested": nt}, seed)


def full_side(side: int, t0: float, t1: float) -> dict:
    return {side: [(t0, t1)]}


def beam_ratio(dom: GTC1D, coeffs: Coefficients, beam, gamma: dict, tau_minus: float,
               window: float, nx: int, nt_per_unit: int) -> float:
    grid = certified_grid(dom, tau_minus, tau_minus + window, nx, int(np.ceil(nt_per_unit * window)))
    return observability_ratio_single(solve_forward(dom, coeffs, beam, grid), gamma)


@dataclass
class ScanRow:
    window: float
    min_ratio: float
    median_ratio: float
    beam_ratio: float
    optimal_T_marker: int


def timespan_scan(dom: GTC1D, coeffs: Coefficients, sides, tau_minus: float, windows,
                  seed: int = 0, nx: int = 400, nt_per_unit: int = 600, beam=None,
                  ensemble_size: int = ENSEMBLE_SIZE, beam_nx: int | None = None):
    """Min/median ensemble ratio and beam ratio across control windows; marks the optimal time."""
    windows = list(windows)
    if not windows:
        raise ValueError("empty sweep")
    times = optimal_times_1d(dom.lam1, dom.lam2, tau_minus)
    T = times["T_onesided"] if len(sides) == 1 else times["T_twosided"]
    ens = eigenmode_ensemble(dom, tau_minus, seed, ensemble_size)
    rows = []
    # place the marker on the first window at or beyond T
    marked = False
    for w in sorted(windows):
        t1 = tau_minus + w
        gamma = {s: [(tau_minus, t1)] for s in sides}
        res = observability_ratio(dom, coeffs, ens, gamma, tau_minus, t1, nx,
                                  int(np.ceil(nt_per_unit * w)), seed)
        br = float("nan")
        if beam is not None:
            bnx = beam_nx or nx
            br = beam_ratio(dom, coeffs, beam, gamma, tau_minus, w, bnx,
                            int(np.ceil(nt_per_unit * bnx / nx)))
        mark = int(not marked and w >= T - 1e-12)
        marked = marked or bool(mark)
        rows.append(ScanRow(w, res.min_ratio, res.median_ratio, br, mark))
    return rows, T
