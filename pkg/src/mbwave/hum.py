"""Discrete Hilbert Uniqueness Method for Dirichlet boundary control.

Everything is phrased through the discrete control map B: boundary values g^k
(k = 0..NT-2, both sides) of a solution at rest at the final time are mapped to its
interior levels (w^0, w^1). Its transpose is the transposed march, so the Gram
operator B diag(chi/W) B^T is symmetric to round-off. Unknowns are adjoint Cauchy
data x = (psi0, psi1) on interior nodes, linked to the dual levels by the sparse map Q.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .gtc import GTC1D, optimal_times_1d
from .solver import (CauchyData, Coefficients, Discretization, Field, certified_grid,
                     cauchy_to_dual, staggered_energy)

PAIRINGS = ("l2", "h1")


class CGDivergence(RuntimeError):
    def __init__(self, msg, history):
        super().__init__(msg)
        self.history = history


@dataclass
class HUMProblem:
    dom: GTC1D
    coeffs: Coefficients
    t0: float
    t1: float
    gamma: dict  # side (1 or 2) -> list of closed (tau_a, tau_b) intervals
    initial: CauchyData
    target: CauchyData | None = None
    rho_reg: float = 1e-8
    cg_tol: float = 1e-8
    cg_maxiter: int = 500
    pairing: str = "h1"
    nx: int = 400
    nt: int = 1200

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("control window must have positive length")
        if not any(len(v) for v in self.gamma.values()):
            raise ValueError("observation region is empty")
        if set(self.gamma) - {1, 2}:
            raise ValueError("sides are 1 and 2")
        if self.rho_reg < 0:
            raise ValueError("rho_reg must be nonnegative")
        if self.pairing not in PAIRINGS:
            raise ValueError(f"pairing must be one of {PAIRINGS}")


@dataclass
class HUMSolution:
    psi0: np.ndarray
    psi1: np.ndarray
    tau: np.ndarray
    control: dict  # side -> control series over tau (zero outside Gamma)
    final_levels: tuple
    final_energy: float
    initial_energy: float
    relative_final_energy: float
    J_history: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    control_norm: float = 0.0  # taper-weighted L2(Gamma) norm
    control_l2: float = 0.0  # plain L2(Gamma) norm with arclength weights
    rho_reg: float = 0.0
    converged: bool = True
    grid: dict = field(default_factory=dict)
    target_error: float | None = None


def taper(t, intervals, dt):
    """Indicator of a union of closed intervals with a 2-cell C^1 taper inside each end."""
    s = lambda z: np.where(z <= 0, 0.0, np.where(z >= 1, 1.0, z * z * (3 - 2 * z)))
    out = np.zeros_like(t)
    for a, b in intervals:
        out = np.maximum(out, s((t - a) / (2 * dt)) * s((b - t) / (2 * dt)))
    return out


class HUMOperator:
    """Discrete Gram operator, right-hand side and control reconstruction for one problem."""

    def __init__(self, prob: HUMProblem, grid=None):
        self.prob = prob
        self.grid = grid or certified_grid(prob.dom, prob.t0, prob.t1, prob.nx, prob.nt)
        self.disc = Discretization(prob.dom, prob.coeffs, self.grid)
        d, g = self.disc, self.grid
        self.m = g.nx - 1
        self.Q = cauchy_to_dual(d)
        nt = g.nt
        self.W = {1: np.sqrt(1 - d.l1p**2) * g.dt, 2: np.sqrt(1 - d.l2p**2) * g.dt}
        self.chi = {}
        for side in (1, 2):
            c = taper(d.t, prob.gamma.get(side, []), g.dt)
            c[nt - 1:] = 0.0
            self.chi[side] = c
        self.mass = self._mass_matrix()
        self._mass_lu = spla.splu(self.mass.tocsc()) if prob.pairing == "h1" else None
        self.reg = 0.0
        self.gram_norm = self._norm_estimate()
        self.reg = prob.rho_reg * self.gram_norm

    # --- pairing ---------------------------------------------------------------

    def _mass_matrix(self):
        m, dy = self.m, self.grid.dy
        L0 = self.disc.L[0]
        Id = sp.identity(m, format="csr")
        if self.prob.pairing == "l2":
            return sp.block_diag([Id, Id], format="csr")
        lap = sp.diags([-np.ones(m - 1), 2 * np.ones(m), -np.ones(m - 1)], [-1, 0, 1]) / (dy * L0) ** 2
        return sp.block_diag([Id + lap, Id], format="csr")

    # --- core maps -------------------------------------------------------------

    def control_map(self, g1, g2):
        """B g: interior levels (w^0, w^1) of the solution at rest at the end with boundary g.

        g1, g2: (nt+1,) or (nb, nt+1); returns (2m,) or (nb, 2m).
        """
        nx = self.grid.nx
        nb = 1 if np.ndim(g1) == 1 else np.shape(g1)[0]
        z = np.zeros((nb, nx + 1))
        a, b = self.disc.march_backward(z, z, np.atleast_2d(g1), np.atleast_2d(g2),
                                        np.zeros((1, 1)), store=False)
        out = np.concatenate([a[:, 1:-1], b[:, 1:-1]], axis=1)
        return out[0] if np.ndim(g1) == 1 else out

    def control_map_T(self, mu):
        mu = np.asarray(mu)
        s1, s2, _ = self.disc.transpose(mu[..., :self.m], mu[..., self.m:])
        return s1, s2

    def control_from_dual(self, mu):
        s1, s2 = self.control_map_T(mu)
        return self.chi[1] / self.W[1] * s1, self.chi[2] / self.W[2] * s2

    def gram_dual(self, mu):
        return self.control_map(*self.control_from_dual(mu))

    def apply(self, x):
        """Regularized Gram operator on adjoint Cauchy data; x is (2m,) or (nb, 2m)."""
        x = np.asarray(x, dtype=float)
        mu = (self.Q @ x.T).T
        return (self.Q.T @ self.gram_dual(mu).T).T + self.reg * (self.mass @ x.T).T

    def observation_norm2(self, x):
        """Sum over Gamma of chi W (trace)^2, the discrete |N psi|^2 integral."""
        s1, s2 = self.control_map_T(self.Q @ x)
        return float(sum(np.sum(self.chi[k] / self.W[k] * s * s) for k, s in ((1, s1), (2, s2))))

    def precondition(self, r):
        if self._mass_lu is None:
            return r
        return self._mass_lu.solve(np.asarray(r).T).T

    def _norm_estimate(self, iters=20):
        """Largest eigenvalue of the Gram operator relative to the pairing (power iteration)."""
        rng = np.random.default_rng(12345)
        x = rng.standard_normal(2 * self.m)
        lam = 0.0
        for _ in range(iters):
            y = self.precondition(self.apply(x) - self.reg * (self.mass @ x))
            lam = float(np.sqrt(y @ (self.mass @ y)) / np.sqrt(x @ (self.mass @ x)))
            if lam == 0.0:
                return 1.0
            x = y / np.linalg.norm(y)
        return lam

    # --- data ------------------------------------------------------------------

    def data_levels(self, data: CauchyData):
        """Interior levels (w^0, w^1) of the free solution from Cauchy data at t0."""
        d = self.disc
        phi0, phi1 = data.on_nodes(d.x_nodes(0))
        phi0[0] = phi0[-1] = 0.0
        zero = np.zeros_like(phi0)
        w1 = d.taylor_level(0, phi0, phi1, zero, 1)
        return np.concatenate([phi0[1:-1], w1[1:-1]])

    def target_levels(self, data: CauchyData):
        """Interior levels (w^0, w^1) of the free solution reaching the target at t1."""
        d, nt = self.disc, self.grid.nt
        phi0, phi1 = data.on_nodes(d.x_nodes(nt))
        phi0[0] = phi0[-1] = 0.0
        zero = np.zeros_like(phi0)
        wNm1 = d.taylor_level(nt, phi0, phi1, zero, -1)
        wNm1[0] = wNm1[-1] = 0.0
        z1 = np.zeros(nt + 1)
        a, b = d.march_backward(phi0, wNm1, z1, z1, np.zeros((1, 1)), store=False)
        return np.concatenate([a[1:-1], b[1:-1]])

    def rhs(self, levels):
        """Linear part of J in the discrete pairing: minimizer solves apply(x) = -rhs."""
        return -(self.Q.T @ levels)

    # --- forward verification --------------------------------------------------

    def closed_loop(self, levels, g1, g2) -> Field:
        d, nx = self.disc, self.grid.nx
        w0 = np.zeros(nx + 1); w1 = np.zeros(nx + 1)
        w0[1:-1], w1[1:-1] = levels[:self.m], levels[self.m:]
        w0[0], w0[-1], w1[0], w1[-1] = g1[0], g2[0], g1[1], g2[1]
        vals = d.march_forward(w0, w1, g1, g2, np.zeros((1, 1)))
        return Field(vals, self.grid, d, d.cert, "controlled")

    def free_field(self, levels) -> Field:
        z = np.zeros(self.grid.nt + 1)
        return self.closed_loop(levels, z, z)


def pcg(apply, b, M_inv=None, tol=1e-8, maxiter=500):
    """Preconditioned CG for an SPD operator, run in lockstep over a batch of right-hand sides.

    b has shape (n,) or (nb, n); apply and M_inv act row-wise on (k, n) arrays. Tracks
    J(x) = 1/2 x.Ax - b.x and the relative residual per system. Returns
    (x, J histories, residual histories, converged flags), unbatched for 1-D b.
    """
    single = b.ndim == 1
    B = np.atleast_2d(b).astype(float)
    nb = B.shape[0]
    X = np.zeros_like(B)
    R = B.copy()
    bn = np.linalg.norm(B, axis=1)
    bn_safe = np.where(bn > 0, bn, 1.0)
    Jh = [[0.0] for _ in range(nb)]
    rh = [[1.0 if bn[i] > 0 else 0.0] for i in range(nb)]
    active = bn > 0
    Z = M_inv(R) if M_inv else R.copy()
    P = Z.copy()
    rz = np.einsum("ij,ij->i", R, Z)
    for _ in range(maxiter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        AP = apply(P[idx])
        pAp = np.einsum("ij,ij->i", P[idx], AP)
        alpha = rz[idx] / pAp
        X[idx] += alpha[:, None] * P[idx]
        R[idx] -= alpha[:, None] * AP
        for q, i in enumerate(idx):
            Jh[i].append(float(-0.5 * X[i] @ (B[i] + R[i])))
            rh[i].append(float(np.linalg.norm(R[i]) / bn_safe[i]))
            if rh[i][-1] <= tol:
                active[i] = False
        Zi = M_inv(R[idx]) if M_inv else R[idx]
        rz_new = np.einsum("ij,ij->i", R[idx], Zi)
        P[idx] = Zi + (rz_new / rz[idx])[:, None] * P[idx]
        rz[idx] = rz_new
    ok = [rh[i][-1] <= tol for i in range(nb)]
    if single:
        return X[0], Jh[0], rh[0], ok[0]
    return X, Jh, rh, ok


def _check_window(prob: HUMProblem):
    try:
        times = optimal_times_1d(prob.dom.lam1, prob.dom.lam2, prob.t0)
    except ValueError:
        return
    need = times["T_onesided"] if len(prob.gamma) == 1 else times["T_twosided"]
    if prob.t1 - prob.t0 <= need:
        warnings.warn(f"control window {prob.t1 - prob.t0:.6g} does not exceed the optimal time {need:.6g}")


def hum_rhs(prob: HUMProblem, op: HUMOperator | None = None) -> np.ndarray:
    op = op or HUMOperator(prob)
    return op.rhs(op.data_levels(prob.initial))


def hum_rhs_continuous(prob: HUMProblem, op: HUMOperator | None = None) -> np.ndarray:
    """Slice form of the linear part of J with a = 1, B = -beta d_x, b = -d_x beta, X = -X^t,
    in the discrete L2 pairing (scaled by L dy), ordered as (psi0, psi1) coefficients."""
    op = op or HUMOperator(prob)
    d = op.disc
    x = d.x_nodes(0)
    phi0, phi1 = prob.initial.on_nodes(x)
    dx = d.grid.dy * d.L[0]
    beta = d.l1p[0] + (x - d.l1[0]) * (d.l2p[0] - d.l1p[0]) / d.L[0]
    dbeta = (d.l2p[0] - d.l1p[0]) / d.L[0]
    Xt = d.Xt[0] if d.Xt.shape[1] > 1 else np.full(x.shape, d.Xt[0, 0])
    phi0x = np.gradient(phi0, x, edge_order=2)
    c0 = phi1 - 2 * beta * phi0x - dbeta * phi0 - Xt * phi0
    c1 = -phi0
    return np.concatenate([c0[1:-1], c1[1:-1]]) * dx


def gram_apply(prob: HUMProblem, x, op: HUMOperator | None = None) -> np.ndarray:
    return (op or HUMOperator(prob)).apply(x)


def _solve(op: HUMOperator, levels, warn=True):
    prob = op.prob
    if warn:
        _check_window(prob)
    b = -np.atleast_2d(op.rhs(np.atleast_2d(levels).T)).T
    if np.ndim(levels) == 1:
        b = b[0]
    M_inv = op.precondition if prob.pairing == "h1" else None
    x, Jh, rh, ok = pcg(op.apply, b, M_inv, prob.cg_tol, prob.cg_maxiter)
    g1, g2 = op.control_from_dual((op.Q @ np.atleast_2d(x).T).T)
    if np.ndim(x) == 1:
        g1, g2 = g1[0], g2[0]
    return x, g1, g2, Jh, rh, ok


def _weighted_inner(op, ga, gb):
    """L2(Gamma) inner product with weights W / chi (the norm HUM minimizes)."""
    tot = 0.0
    for side in (1, 2):
        c = op.chi[side]
        mask = c > 0
        tot += np.sum(op.W[side][mask] / c[mask] * ga[side - 1][mask] * gb[side - 1][mask])
    return float(tot)


def _weighted_norm(op, g1, g2):
    return float(np.sqrt(_weighted_inner(op, (g1, g2), (g1, g2))))


def _plain_norm(op, g1, g2):
    return float(np.sqrt(sum(np.sum(op.W[s] * g * g) for s, g in ((1, g1), (2, g2)))))


def _package(op, x, g1, g2, Jh, rh, ok, fld, E0, target_error=None):
    nt = op.grid.nt
    m = op.m
    EN = staggered_energy(op.disc, nt - 1, fld.values[nt - 1], fld.values[nt])
    return HUMSolution(
        psi0=x[:m].copy(), psi1=x[m:].copy(), tau=op.disc.t.copy(), control={1: g1, 2: g2},
        final_levels=(fld.values[nt - 1].copy(), fld.values[nt].copy()), final_energy=EN,
        initial_energy=E0, relative_final_energy=EN / E0 if E0 > 0 else 0.0,
        J_history=Jh, residual_history=rh, control_norm=_weighted_norm(op, g1, g2),
        control_l2=_plain_norm(op, g1, g2), rho_reg=op.prob.rho_reg, converged=ok,
        grid={"nx": op.grid.nx, "nt": op.grid.nt, "nt_requested": op.grid.nt_requested,
              "dt": op.grid.dt, "gram_norm": op.gram_norm},
        target_error=target_error)


def _initial_energy(op, levels):
    nx, m = op.grid.nx, op.m
    w0 = np.zeros(nx + 1); w1 = np.zeros(nx + 1)
    w0[1:-1], w1[1:-1] = levels[:m], levels[m:]
    return staggered_energy(op.disc, 0, w0, w1)


def solve_null_control(prob: HUMProblem, op: HUMOperator | None = None) -> HUMSolution:
    """Minimal-norm control driving the initial data to rest at t1."""
    op = op or HUMOperator(prob)
    levels = op.data_levels(prob.initial)
    x, g1, g2, Jh, rh, ok = _solve(op, levels)
    fld = op.closed_loop(levels, g1, g2)
    E0 = _initial_energy(op, levels)
    return _package(op, x, g1, g2, Jh, rh, ok, fld, E0)


def solve_exact_control(prob: HUMProblem, op: HUMOperator | None = None) -> HUMSolution:
    """Control driving the initial data to the target: null control of the difference
    between the initial levels and those of the free solution reaching the target."""
    if prob.target is None:
        return solve_null_control(prob, op)
    op = op or HUMOperator(prob)
    levels = op.data_levels(prob.initial)
    alpha = op.target_levels(prob.target)
    x, g1, g2, Jh, rh, ok = _solve(op, levels - alpha)
    fld = op.closed_loop(levels, g1, g2)
    E0 = _initial_energy(op, levels)
    nt = op.grid.nt
    tgt = op.free_field(alpha).values
    dv = fld.values - tgt
    Et = staggered_energy(op.disc, nt - 1, tgt[nt - 1], tgt[nt])
    Ed = staggered_energy(op.disc, nt - 1, dv[nt - 1], dv[nt])
    err = Ed / Et if Et > 0 else Ed
    return _package(op, x, g1, g2, Jh, rh, ok, fld, E0, target_error=err)


@dataclass
class MinimalityReport:
    hum_norm: float
    perturbed_norms: list
    relative_gaps: list
    kernel_residuals: list
    cross_terms: list  # 2 <g, k> / |g|^2 in the taper-weighted inner product
    min_relative_gap: float
    passed: bool


def boundary_noise(op: HUMOperator, rng, modes=6):
    """Random smooth boundary series on Gamma: a few time sines times the taper."""
    t = op.disc.t
    s = (t - t[0]) / (t[-1] - t[0])
    out = []
    for side in (1, 2):
        c = rng.standard_normal(modes) / np.arange(1, modes + 1)
        e = sum(c[j] * np.sin((j + 1) * np.pi * s) for j in range(modes))
        out.append(e * op.chi[side])
    return out


def kernel_perturbations(op: HUMOperator, rng, count=10):
    """Zero-to-zero controls on Gamma: smooth noise minus its minimal-norm part.

    Returns a list of (k1, k2, relative residual |B k| / |B noise|)."""
    noise = [boundary_noise(op, rng) for _ in range(count)]
    E1 = np.array([e[0] for e in noise])
    E2 = np.array([e[1] for e in noise])
    lv = op.control_map(E1, E2)
    _, H1, H2, _, _, _ = _solve(op, lv, warn=False)
    K1, K2 = E1 - H1, E2 - H2
    res = np.linalg.norm(op.control_map(K1, K2), axis=1) / np.linalg.norm(lv, axis=1)
    return [(K1[i], K2[i], float(res[i])) for i in range(count)]


def minimality_check(op: HUMOperator, sol: HUMSolution, n_perturb=10, seed=0, tol=1e-6,
                     perturbations=None) -> MinimalityReport:
    """Compare the HUM control norm with HUM control + zero-to-zero perturbations."""
    rng = np.random.default_rng(seed)
    g1, g2 = sol.control[1], sol.control[2]
    base = _weighted_norm(op, g1, g2)
    perts = perturbations if perturbations is not None else kernel_perturbations(op, rng, n_perturb)
    norms, gaps, resid, cross = [], [], [], []
    den = base**2 if base > 0 else 1.0
    for k1, k2, r in perts:
        nrm = _weighted_norm(op, g1 + k1, g2 + k2)
        norms.append(nrm)
        gaps.append((nrm**2 - base**2) / den)
        cross.append(2 * _weighted_inner(op, (g1, g2), (k1, k2)) / den)
        resid.append(r)
    mg = min(gaps) if gaps else 0.0
    return MinimalityReport(base, norms, gaps, resid, cross, mg, mg >= -tol)
