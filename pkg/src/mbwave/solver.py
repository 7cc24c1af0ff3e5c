"""Finite-difference solver for P phi = box phi + X.grad phi + V phi = F on a moving 1+1D domain.

The domain lam1(t) < x < lam2(t) is mapped to the fixed strip 0 < y < 1 by
y = (x - lam1)/L, L = lam2 - lam1. In (t, y) the equation becomes
    -w_tt + 2 a w_ty + k2 w_yy + k1 w_y + Xt w_t + V w = F,
with c = lam1' + y L', a = c/L, k2 = (1 - c^2)/L^2 and
k1 = a_t - a a_y - Xt a + Xx/L. The three-level scheme is centered in time and
space; the mixed term makes each step a tridiagonal solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from . import _kernels as K
from .gtc import GTC1D

CFL_SAFETY = 0.5
DIVX_STEP = 1e-5


class CFLError(ValueError):
    pass


class IncompatibleDataError(ValueError):
    pass


_ZERO = np.zeros((1, 1))


@dataclass(frozen=True)
class Coefficients:
    """Lower-order terms X = (Xt, Xx) and V as callables of (t, x); None means zero."""

    Xt: Callable | None = None
    Xx: Callable | None = None
    V: Callable | None = None
    div_X: Callable | None = None

    @property
    def is_zero(self) -> bool:
        return self.Xt is None and self.Xx is None and self.V is None

    def divergence(self, t, x):
        if self.div_X is not None:
            return self.div_X(t, x)
        h = DIVX_STEP
        out = np.zeros(np.broadcast(t, x).shape)
        if self.Xt is not None:
            out = out + (self.Xt(t + h, x) - self.Xt(t - h, x)) / (2 * h)
        if self.Xx is not None:
            out = out + (self.Xx(t, x + h) - self.Xx(t, x - h)) / (2 * h)
        return out

    def adjoint(self) -> "Coefficients":
        """Coefficients of the formal adjoint: X -> -X, V -> V - div X."""
        if self.is_zero:
            return self
        neg = lambda g: None if g is None else (lambda t, x: -g(t, x))
        base_V = self.V
        divx = self.divergence
        V = lambda t, x: (0.0 if base_V is None else base_V(t, x)) - divx(t, x)
        div_adj = None if self.div_X is None else (lambda t, x: -self.div_X(t, x))
        return Coefficients(neg(self.Xt), neg(self.Xx), V, div_adj)

    def sampled(self, T, X):
        def ev(g):
            if g is None:
                return _ZERO
            return np.ascontiguousarray(np.broadcast_to(g(T, X), np.broadcast(T, X).shape),
                                        dtype=float)
        return ev(self.Xt), ev(self.Xx), ev(self.V)


@dataclass(frozen=True)
class Grid:
    nx: int
    nt: int
    t0: float
    t1: float
    nt_requested: int | None = None

    def __post_init__(self):
        if self.nx < 4 or self.nt < 3 or not self.t1 > self.t0:
            raise ValueError("grid needs nx >= 4, nt >= 3 and a positive window")

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.nt

    @property
    def dy(self) -> float:
        return 1.0 / self.nx

    @property
    def t(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.nt + 1)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nx + 1)


def cfl_limit(dom: GTC1D, t0: float, t1: float, nx: int) -> float:
    t = np.linspace(t0, t1, 2001)
    L = dom.width(t)
    speed = max(np.max(np.abs(dom.lam1.d1(t))), np.max(np.abs(dom.lam2.d1(t))))
    return CFL_SAFETY * (1.0 / nx) * float(np.min(L)) * (1.0 - speed)


def certified_grid(dom: GTC1D, t0: float, t1: float, nx: int, nt: int) -> Grid:
    """Grid with at least nt steps whose time step satisfies the CFL certificate."""
    need = int(np.ceil((t1 - t0) / cfl_limit(dom, t0, t1, nx) * (1 + 1e-12)))
    return Grid(nx, max(nt, need), t0, t1, nt_requested=nt)


def cfl_certificate(dom: GTC1D, grid: Grid) -> dict:
    lim = cfl_limit(dom, grid.t0, grid.t1, grid.nx)
    return {"dt": grid.dt, "dt_max": lim, "ok": grid.dt <= lim * (1 + 1e-12),
            "nt_requested": grid.nt_requested if grid.nt_requested is not None else grid.nt,
            "nt_used": grid.nt}


class Discretization:
    """Sampled curve data, coefficients and level operators for one (domain, coefficients, grid)."""

    def __init__(self, dom: GTC1D, coeffs: Coefficients, grid: Grid, check_cfl: bool = True):
        self.dom, self.coeffs, self.grid = dom, coeffs, grid
        self.cert = cfl_certificate(dom, grid)
        if check_cfl and not self.cert["ok"]:
            raise CFLError(f"CFL certificate violated: dt = {grid.dt:.6g} > {self.cert['dt_max']:.6g}")
        t = grid.t
        self.t = t
        self.y = grid.y
        l1, l2 = dom.lam1, dom.lam2
        self.l1 = l1(t)
        self.L = l2(t) - self.l1
        self.l1p = np.ascontiguousarray(l1.d1(t))
        self.l1pp = np.ascontiguousarray(l1.d2(t))
        self.Lp = np.ascontiguousarray(l2.d1(t) - l1.d1(t))
        self.Lpp = np.ascontiguousarray(l2.d2(t) - l1.d2(t))
        self.l2p = l2.d1(t)
        self.T, self.X = self.physical_mesh()
        self.Xt, self.Xx, self.V = coeffs.sampled(self.T, self.X)

    def physical_mesh(self):
        T = np.broadcast_to(self.t[:, None], (self.grid.nt + 1, self.grid.nx + 1))
        X = self.l1[:, None] + self.y[None, :] * self.L[:, None]
        return T, X

    def x_nodes(self, n: int) -> np.ndarray:
        return self.l1[n] + self.y * self.L[n]

    def _args(self):
        return (self.y, self.grid.dy, self.grid.dt, self.l1p, self.l1pp, np.ascontiguousarray(self.L),
                self.Lp, self.Lpp, self.Xt, self.Xx, self.V)

    def level_bands(self, n: int) -> dict:
        nx1 = self.grid.nx + 1
        arrs = [np.empty(nx1) for _ in range(9)]
        K.bands(n, *self._args(), *arrs)
        return {"Mp": arrs[0:3], "Mm": arrs[3:6], "B": arrs[6:9]}

    def level_matrix(self, n: int, which: str) -> sp.csr_matrix:
        """Interior block of Mp, Mm or B at level n as a sparse matrix."""
        lo, di, up = self.level_bands(n)[which]
        m = self.grid.nx - 1
        return sp.diags([lo[2:m + 1], di[1:m + 1], up[1:m]], [-1, 0, 1], format="csr")

    def level_boundary_columns(self, n: int, which: str):
        """Entries coupling the first/last interior rows to the left/right boundary nodes."""
        lo, _, up = self.level_bands(n)[which]
        return lo[1], up[self.grid.nx - 1]

    # --- sampled inputs ---------------------------------------------------------

    def sample_forcing(self, forcing):
        if forcing is None:
            return _ZERO
        if callable(forcing):
            return np.ascontiguousarray(forcing(self.T, self.X), dtype=float)
        return np.ascontiguousarray(forcing, dtype=float)

    def sample_boundary(self, g):
        nt1 = self.grid.nt + 1
        if g is None:
            return np.zeros(nt1)
        if callable(g):
            return np.ascontiguousarray(np.broadcast_to(g(self.t), (nt1,)), dtype=float)
        return np.ascontiguousarray(g, dtype=float)

    # --- Taylor start -----------------------------------------------------------

    def taylor_level(self, n: int, w0, phi1, F_n, direction: int = 1, coeffs_arrays=None,
                     ws_boundary=(0.0, 0.0)):
        """Second level from (w, physical time derivative) at level n by a Taylor expansion.

        direction = +1 gives level n+1, -1 gives level n-1. coeffs_arrays overrides
        (Xt, Xx, V) row n (used for the adjoint start).
        """
        dy, dt = self.grid.dy, self.grid.dt * direction
        y = self.y
        c = self.l1p[n] + y * self.Lp[n]
        Ln = self.L[n]
        a = c / Ln
        ay = self.Lp[n] / Ln
        at = (self.l1pp[n] + y * self.Lpp[n]) / Ln - c * self.Lp[n] / Ln**2
        if coeffs_arrays is None:
            row = lambda A: A[min(n, A.shape[0] - 1)] if A.shape[1] > 1 else np.full(y.shape, A[0, 0])
            Xt, Xx, V = row(self.Xt), row(self.Xx), row(self.V)
        else:
            Xt, Xx, V = coeffs_arrays
        k2 = (1 - c * c) / Ln**2
        k1 = at - a * ay - Xt * a + Xx / Ln
        w0 = np.asarray(w0, dtype=float)
        ws = np.asarray(phi1, dtype=float) + a * _d1(w0, dy)
        ws[0], ws[-1] = ws_boundary
        Kw = k2 * _d2(w0, dy) + k1 * _d1(w0, dy) + V * w0
        wss = 2 * a * _d1(ws, dy) + Kw + Xt * ws - F_n
        out = w0 + dt * ws + 0.5 * dt * dt * wss
        return out

    # --- marches ----------------------------------------------------------------

    def march_forward(self, w0, w1, g1, g2, F, store=True):
        """March a batch (or a single state) forward from levels 0, 1.

        w0, w1: (nx+1,) or (nb, nx+1); g1, g2: (nt+1,) or (nb, nt+1).
        Returns all levels ((nb,) nt+1, nx+1) if store, else the last two levels.
        """
        return self._march(w0, w1, g1, g2, F, store, 1)

    def march_backward(self, wN, wNm1, g1, g2, F, store=True):
        """March backward from levels nt, nt-1; returns all levels or (level 0, level 1)."""
        return self._march(wN, wNm1, g1, g2, F, store, -1)

    def _march(self, wa, wb, g1, g2, F, store, direction):
        nt, nx = self.grid.nt, self.grid.nx
        single = np.ndim(wa) == 1
        wa, wb = np.atleast_2d(wa).astype(float), np.atleast_2d(wb).astype(float)
        nb = wa.shape[0]
        G1 = np.ascontiguousarray(np.broadcast_to(g1, (nb, nt + 1)), dtype=float)
        G2 = np.ascontiguousarray(np.broadcast_to(g2, (nb, nt + 1)), dtype=float)
        out = np.empty((nb, nt + 1, nx + 1)) if store else np.empty((0, 0, 0))
        if direction > 0:
            if store:
                out[:, 0], out[:, 1] = wa, wb
            a, b = K.march(wa, wb, 1, nt - 1, 1, *self._args(), F, G1, G2, out)
        else:
            if store:
                out[:, nt], out[:, nt - 1] = wa, wb
            b, a = K.march(wa, wb, nt - 1, 1, -1, *self._args(), F, G1, G2, out)
        if store:
            return out[0] if single else out
        return (a[0], b[0]) if single else (a, b)

    def transpose(self, mu0, mu1, nt_last=None, store=False):
        """Transposed control map; returns (sens_left, sens_right, z levels or None).

        mu0, mu1: (nx-1,) or (nb, nx-1); outputs gain a leading batch axis in the batched case.
        """
        nt, nx = self.grid.nt, self.grid.nx
        nt_last = nt - 1 if nt_last is None else nt_last
        single = np.ndim(mu0) == 1
        mu0 = np.ascontiguousarray(np.atleast_2d(mu0), dtype=float)
        mu1 = np.ascontiguousarray(np.atleast_2d(mu1), dtype=float)
        nb = mu0.shape[0]
        st = np.zeros((nb, nt + 1, nx + 1)) if store else np.empty((0, 0, 0))
        s1 = np.zeros((nb, nt + 1))
        s2 = np.zeros((nb, nt + 1))
        K.transpose_march(mu0, mu1, nt_last, *self._args(), st, s1, s2)
        if single:
            return s1[0], s2[0], (st[0] if store else None)
        return s1, s2, (st if store else None)

    def omega(self) -> np.ndarray:
        """Row weights L^n dy / dt relating transposed levels to the physical adjoint."""
        return self.L * self.grid.dy / self.grid.dt


def _d1(w, dy):
    out = np.empty_like(w)
    out[1:-1] = (w[2:] - w[:-2]) / (2 * dy)
    out[0] = (-3 * w[0] + 4 * w[1] - w[2]) / (2 * dy)
    out[-1] = (3 * w[-1] - 4 * w[-2] + w[-3]) / (2 * dy)
    return out


def _d2(w, dy):
    out = np.zeros_like(w)
    out[1:-1] = (w[2:] - 2 * w[1:-1] + w[:-2]) / dy**2
    return out


# --- public data types ----------------------------------------------------------


@dataclass
class CauchyData:
    """Position and physical time derivative on a time slice, as callables of x or node arrays."""

    phi0: Callable | np.ndarray
    phi1: Callable | np.ndarray

    def on_nodes(self, x: np.ndarray):
        ev = lambda g: np.asarray(g(x) if callable(g) else g, dtype=float).copy()
        return ev(self.phi0), ev(self.phi1)


@dataclass
class Field:
    values: np.ndarray
    grid: Grid
    disc: Discretization = field(repr=False)
    certificate: dict = field(default_factory=dict)
    kind: str = "state"

    @property
    def t(self):
        return self.grid.t

    def x_nodes(self, n: int):
        return self.disc.x_nodes(n)

    def time_derivative(self, n: int) -> np.ndarray:
        """Physical d_t phi at level n from w_t - a w_y."""
        w, dt = self.values, self.grid.dt
        nt = self.grid.nt
        if 0 < n < nt:
            ws = (w[n + 1] - w[n - 1]) / (2 * dt)
        elif n == 0:
            ws = (-3 * w[0] + 4 * w[1] - w[2]) / (2 * dt)
        else:
            ws = (3 * w[nt] - 4 * w[nt - 1] + w[nt - 2]) / (2 * dt)
        d = self.disc
        a = (d.l1p[n] + d.y * d.Lp[n]) / d.L[n]
        return ws - a * _d1(w[n], self.grid.dy)

    def space_derivative(self, n: int) -> np.ndarray:
        return _d1(self.values[n], self.grid.dy) / self.disc.L[n]


def _check_compat(v0, g, tol=1e-8):
    if abs(v0 - g) > tol * max(1.0, abs(g)):
        raise IncompatibleDataError("initial data incompatible with Dirichlet data at the slice endpoints")


def solve_forward(dom: GTC1D, coeffs: Coefficients, data: CauchyData, grid: Grid,
                  dirichlet=(None, None), forcing=None, check_cfl: bool = True) -> Field:
    """March from Cauchy data at grid.t0 to grid.t1 with Dirichlet rows set exactly."""
    d = Discretization(dom, coeffs, grid, check_cfl)
    F = d.sample_forcing(forcing)
    g1, g2 = d.sample_boundary(dirichlet[0]), d.sample_boundary(dirichlet[1])
    phi0, phi1 = data.on_nodes(d.x_nodes(0))
    _check_compat(phi0[0], g1[0])
    _check_compat(phi0[-1], g2[0])
    w0 = phi0.copy()
    w0[0], w0[-1] = g1[0], g2[0]
    F0 = F[0] if F.shape[1] > 1 else np.full(d.y.shape, F[0, 0])
    wsb = ((g1[1] - g1[0]) / grid.dt, (g2[1] - g2[0]) / grid.dt)
    w1 = d.taylor_level(0, w0, phi1, F0, 1, ws_boundary=wsb)
    w1[0], w1[-1] = g1[1], g2[1]
    vals = d.march_forward(w0, w1, g1, g2, F)
    return Field(vals, grid, d, d.cert, "state")


def solve_backward(dom: GTC1D, coeffs: Coefficients, data: CauchyData, grid: Grid,
                   dirichlet=(None, None), forcing=None, check_cfl: bool = True) -> Field:
    """March from Cauchy data at grid.t1 back to grid.t0."""
    d = Discretization(dom, coeffs, grid, check_cfl)
    nt = grid.nt
    F = d.sample_forcing(forcing)
    g1, g2 = d.sample_boundary(dirichlet[0]), d.sample_boundary(dirichlet[1])
    phi0, phi1 = data.on_nodes(d.x_nodes(nt))
    _check_compat(phi0[0], g1[nt])
    _check_compat(phi0[-1], g2[nt])
    wN = phi0.copy()
    wN[0], wN[-1] = g1[nt], g2[nt]
    FN = F[min(nt, F.shape[0] - 1)] if F.shape[1] > 1 else np.full(d.y.shape, F[0, 0])
    wsb = ((g1[nt] - g1[nt - 1]) / grid.dt, (g2[nt] - g2[nt - 1]) / grid.dt)
    wNm1 = d.taylor_level(nt, wN, phi1, FN, -1, ws_boundary=wsb)
    wNm1[0], wNm1[-1] = g1[nt - 1], g2[nt - 1]
    vals = d.march_backward(wN, wNm1, g1, g2, F)
    return Field(vals, grid, d, d.cert, "state")


# --- adjoint ---------------------------------------------------------------------


def adjoint_start_matrices(d: Discretization):
    """Sparse maps from adjoint Cauchy data (psi0, psi1) on interior nodes to the physical
    adjoint levels psi^0, psi^1 (adjoint coefficients, Taylor start)."""
    adj = d.coeffs.adjoint()
    x0 = d.x_nodes(0)
    t0 = np.full_like(x0, d.t[0])
    Xt, Xx, V = adj.sampled(t0, x0)
    arr = lambda A: np.broadcast_to(A, x0.shape) if A.shape != x0.shape else A
    coeffs_arrays = (arr(Xt).ravel() if Xt.size > 1 else np.full(x0.shape, Xt[0, 0]),
                     arr(Xx).ravel() if Xx.size > 1 else np.full(x0.shape, Xx[0, 0]),
                     arr(V).ravel() if V.size > 1 else np.full(x0.shape, V[0, 0]))
    m = d.grid.nx - 1
    zero = np.zeros(d.grid.nx + 1)

    def start(p0, p1):
        w0 = zero.copy(); w0[1:-1] = p0
        v1 = zero.copy(); v1[1:-1] = p1
        return d.taylor_level(0, w0, v1, zero, 1, coeffs_arrays=coeffs_arrays)[1:-1]

    I = np.eye(m)
    T0 = np.column_stack([start(I[:, k], np.zeros(m)) for k in range(m)])
    T1 = np.column_stack([start(np.zeros(m), I[:, k]) for k in range(m)])
    return sp.csr_matrix(T0), sp.csr_matrix(T1)


def cauchy_to_dual(d: Discretization):
    """Sparse Q with mu = Q [psi0; psi1]: the transposed march started from Q x reproduces
    the physical adjoint with Cauchy data x (levels scaled by the row weights)."""
    T0, T1 = adjoint_start_matrices(d)
    om = d.omega()
    Mm1 = d.level_matrix(1, "Mm")
    Mp0 = d.level_matrix(0, "Mp")
    top = sp.hstack([om[1] * (Mm1.T @ T0), om[1] * (Mm1.T @ T1)])
    bot = sp.hstack([-om[0] * Mp0.T, sp.csr_matrix(Mp0.shape)])
    return sp.vstack([top, bot]).tocsr()


def solve_adjoint(dom: GTC1D, coeffs: Coefficients, data: CauchyData, grid: Grid,
                  check_cfl: bool = True) -> Field:
    """Adjoint solve from Cauchy data at grid.t0, as the literal transpose of the scheme.

    Homogeneous Dirichlet data; coeffs are the coefficients of the forward operator.
    """
    d = Discretization(dom, coeffs, grid, check_cfl)
    phi0, phi1 = data.on_nodes(d.x_nodes(0))
    _check_compat(phi0[0], 0.0)
    _check_compat(phi0[-1], 0.0)
    Q = cauchy_to_dual(d)
    mu = Q @ np.concatenate([phi0[1:-1], phi1[1:-1]])
    m = grid.nx - 1
    _, _, z = d.transpose(mu[:m], mu[m:], nt_last=grid.nt, store=True)
    z[0, 1:-1] = phi0[1:-1] * d.omega()[0]
    vals = z / d.omega()[:, None]
    return Field(vals, grid, d, d.cert, "adjoint")


# --- diagnostics -----------------------------------------------------------------


def _trapz(v, dx):
    return dx * (np.sum(v) - 0.5 * (v[0] + v[-1]))


def energy(fld: Field, n: int, M0: float = 0.0) -> float:
    """Trapezoid quadrature of phi_t^2 + phi_x^2 + M0 phi^2 over the slice at level n."""
    pt = fld.time_derivative(n)
    px = fld.space_derivative(n)
    dens = pt * pt + px * px + M0 * fld.values[n] ** 2
    return float(_trapz(dens, fld.grid.dy * fld.disc.L[n]))


def staggered_energy(disc: Discretization, n: int, w_n, w_next, M0: float = 0.0) -> float:
    """Energy of the two-level state (w^n, w^{n+1}) at the half step n + 1/2.

    This is the natural state of the three-level scheme; a state at rest has both
    levels zero and hence zero staggered energy.
    """
    dt, dy = disc.grid.dt, disc.grid.dy
    Lh = 0.5 * (disc.L[n] + disc.L[n + 1])
    ch = 0.5 * (disc.l1p[n] + disc.l1p[n + 1]) + disc.y * 0.5 * (disc.Lp[n] + disc.Lp[n + 1])
    wm = 0.5 * (w_n + w_next)
    wy = _d1(wm, dy)
    pt = (w_next - w_n) / dt - ch / Lh * wy
    px = wy / Lh
    dens = pt * pt + px * px + M0 * wm * wm
    return float(_trapz(dens, dy * Lh))


def localized_energy(fld: Field, n: int, center, M0: float = 0.0) -> float:
    """Energy restricted to the part of the slice outside the null cone of the center."""
    x = fld.x_nodes(n)
    t_P = fld.t[n] - center[0]
    r = np.abs(x - center[1])
    inside = (r * r - t_P * t_P) > 0
    pt = fld.time_derivative(n)
    px = fld.space_derivative(n)
    dens = (pt * pt + px * px + M0 * fld.values[n] ** 2) * inside
    return float(_trapz(dens, fld.grid.dy * fld.disc.L[n]))


@dataclass
class BoundaryTrace:
    side: int
    tau: np.ndarray
    Nphi: np.ndarray
    weights: np.ndarray  # sqrt(1 - lam'^2) dtau, trapezoid in tau


def neumann_trace(fld: Field, side: int, tol: float = 1e-12) -> BoundaryTrace:
    d = fld.disc
    w = fld.values
    dy = fld.grid.dy
    if side == 2:
        if np.max(np.abs(w[:, -1])) > tol:
            raise ValueError("nonzero Dirichlet data on the right side")
        dx = (3 * w[:, -1] - 4 * w[:, -2] + w[:, -3]) / (2 * dy * d.L)
        lp = d.l2p
        N = np.sqrt(1 - lp * lp) * dx
    elif side == 1:
        if np.max(np.abs(w[:, 0])) > tol:
            raise ValueError("nonzero Dirichlet data on the left side")
        dx = (-3 * w[:, 0] + 4 * w[:, 1] - w[:, 2]) / (2 * dy * d.L)
        lp = d.l1p
        N = -np.sqrt(1 - lp * lp) * dx
    else:
        raise ValueError("side must be 1 or 2")
    wts = np.sqrt(1 - lp * lp) * fld.grid.dt
    wts = wts.copy()
    wts[0] *= 0.5
    wts[-1] *= 0.5
    return BoundaryTrace(side, fld.t.copy(), N, wts)
