"""Pointwise Carleman identity and inequalities for the conjugated warped wave operator.

The test function psi is a second-order Jet in (u, v, theta). Divergences of the
current are computed two ways: exactly, by differentiating first-order jets of the
current components, and by central differences of the current evaluated at
shifted points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from . import warped as W
from .jets import Jet
from .testfuncs import TestFunction


def _angular(n):
    return n >= 2


def current(u, v, th, p, pu, pv, pth, eps, n, a, b):
    """Covariant components (P_u, P_v, P_theta) of the Carleman current; arrays or Jets."""
    f = W.hyperbolic_f(u, v)
    rho = W.rho_bar(u, v, eps)
    w = W.w_bar(u, v, eps, n)
    wu, wv = W.w_derivs_closed(u, v, eps, n)
    A = W.A_fun(f, a, b)
    S = 0.5 * (u * pu + v * pv)
    grad2 = -(pu * pv)
    if _angular(n):
        grad2 = grad2 + pth * pth / (rho * rho)
    half_p2 = 0.5 * (p * p)
    P_u = S * pu + 0.5 * v * grad2 + w * p * pu + (A * (-v) - wu) * half_p2
    P_v = S * pv + 0.5 * u * grad2 + w * p * pv + (A * (-u) - wv) * half_p2
    P_th = S * pth + w * p * pth
    return P_u, P_v, P_th


def divergence_from_partials(u, v, th, eps, n, P_u, P_v, P_th, dPu_dv, dPv_du, dPth_dth):
    """Covariant divergence and the sum of absolute values of its summands."""
    rho = W.rho_bar(u, v, eps)
    parts = [W.g_inv_uv() * dPv_du, W.g_inv_uv() * dPu_dv,
             -(n - 1) / (2 * rho) * (1 - 2 * eps * u) * P_u,
             (n - 1) / (2 * rho) * (1 + 2 * eps * v) * P_v]
    if _angular(n):
        parts += [dPth_dth / (rho * rho), (n - 2) * np.cos(th) / np.sin(th) * P_th / (rho * rho)]
    return sum(parts), sum(np.abs(q) for q in parts)


def divergence_exact(J: Jet, u, v, th, eps, n, a, b):
    """Divergence of the current of the second-order jet J, by jet differentiation."""
    U, V, TH = jets.coords(u, v, th, order=1, dtype=J.v.dtype)
    P_u, P_v, P_th = current(U, V, TH, J.first_order(), J.partial(0), J.partial(1), J.partial(2),
                             eps, n, a, b)
    return divergence_from_partials(u, v, th, eps, n, P_u.v, P_v.v, P_th.v,
                                    P_u.g[..., 1], P_v.g[..., 0], P_th.g[..., 2])


def divergence_fd(jet_fn, u, v, th, eps, n, a, b, h):
    """Divergence by central differences; jet_fn(u, v, th) returns a first-order Jet."""

    def comps(uu, vv, tt):
        J = jet_fn(uu, vv, tt)
        return current(uu, vv, tt, J.v, J.g[..., 0], J.g[..., 1], J.g[..., 2], eps, n, a, b)

    P_u, P_v, P_th = comps(u, v, th)
    dPv_du = (comps(u + h, v, th)[1] - comps(u - h, v, th)[1]) / (2 * h)
    dPu_dv = (comps(u, v + h, th)[0] - comps(u, v - h, th)[0]) / (2 * h)
    if _angular(n):
        dPth = (comps(u, v, th + h)[2] - comps(u, v, th - h)[2]) / (2 * h)
    else:
        dPth = 0.0 * P_th
    return divergence_from_partials(u, v, th, eps, n, P_u, P_v, P_th, dPu_dv, dPv_du, dPth)


def divergence_fd_density(jet_fn, u, v, th, eps, n, a, b, h):
    """Divergence by central differences of the densitized contravariant current."""

    def dens(uu, vv, tt):
        J = jet_fn(uu, vv, tt)
        P_u, P_v, P_th = current(uu, vv, tt, J.v, J.g[..., 0], J.g[..., 1], J.g[..., 2],
                                 eps, n, a, b)
        m = W.rho_bar(uu, vv, eps) ** (n - 1)
        sph = np.sin(tt) ** (n - 2) if _angular(n) else 1.0
        return m * sph * W.g_inv_uv() * P_v, m * sph * W.g_inv_uv() * P_u, m * sph * P_th

    rho = W.rho_bar(u, v, eps)
    d_u = (dens(u + h, v, th)[0] - dens(u - h, v, th)[0]) / (2 * h)
    d_v = (dens(u, v + h, th)[1] - dens(u, v - h, th)[1]) / (2 * h)
    vol = rho ** (n - 1) * (np.sin(th) ** (n - 2) if _angular(n) else 1.0)
    parts = [d_u / vol, d_v / vol]
    if _angular(n):
        d_th = (dens(u, v, th + h)[2] - dens(u, v, th - h)[2]) / (2 * h)
        parts.append(d_th / (vol * rho * rho))
    return sum(parts), sum(np.abs(q) for q in parts)


@dataclass
class IdentityTerms:
    L: np.ndarray
    Sw: np.ndarray
    div: np.ndarray
    div_scale: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    scale: np.ndarray
    Tpsi: np.ndarray
    Npsi: np.ndarray
    slash2: np.ndarray


def identity_terms(J: Jet, u, v, th, eps, n, a, b, div_pair) -> IdentityTerms:
    div, div_scale = div_pair
    f = W.hyperbolic_f(u, v)
    rho = W.rho_bar(u, v, eps)
    w = W.w_bar(u, v, eps, n)
    Fp = W.F_prime(f, a, b)
    A = W.A_fun(f, a, b)
    p, pu, pv, pth = J.v, J.g[..., 0], J.g[..., 1], J.g[..., 2]
    S = 0.5 * (u * pu + v * pv)
    Sw = S + w * p
    box = W.box_jet(J, u, v, th, eps, n)
    L = box + 2 * Fp * Sw + (A + eps * f * Fp / rho) * p
    s = 0.5 / np.sqrt(f)
    Tpsi = s * (-u * pu + v * pv)
    Npsi = s * (u * pu + v * pv)
    slash2 = pth * pth / (rho * rho) if _angular(n) else 0.0 * p
    k = eps * f / rho
    terms_rhs = [
        -2 * Fp * Sw * Sw,
        0.5 * k * (Tpsi**2 + slash2 - Npsi**2),
        -k * Fp * p * Sw,
        0.5 * (W.fA_prime(f, a, b) + k * A - W.box_w_closed(u, v, eps, n)) * p * p,
    ]
    rhs = sum(terms_rhs)
    lhs = -L * Sw + div
    scale = np.abs(L * Sw) + div_scale + sum(np.abs(t) for t in terms_rhs)
    return IdentityTerms(L, Sw, div, div_scale, lhs, rhs, scale, Tpsi, Npsi, slash2)


def _points_dtype(u):
    return np.asarray(u).dtype if np.asarray(u).dtype == np.longdouble else float


def identity_residual(tf: TestFunction, u, v, th, eps, n, a, b, h=None, route="fd"):
    """Relative residual |LHS - RHS| / scale of the pointwise identity."""
    dt = _points_dtype(u)
    u, v, th = (np.asarray(x, dtype=dt) for x in np.broadcast_arrays(u, v, th))
    f = W.hyperbolic_f(u, v)
    if np.any(f < 1e-3):
        raise ValueError("identity check requires f >= 1e-3")
    J = tf.jet(u, v, th, order=2, dtype=dt)
    if route == "exact":
        div = divergence_exact(J, u, v, th, eps, n, a, b)
    else:
        if h is None:
            h = default_step(u, v)
        fn = lambda uu, vv, tt: tf.jet(uu, vv, tt, order=1, dtype=dt)
        if route == "fd":
            div = divergence_fd(fn, u, v, th, eps, n, a, b, h)
        elif route == "fd_density":
            div = divergence_fd_density(fn, u, v, th, eps, n, a, b, h)
        else:
            raise ValueError(f"unknown route {route!r}")
    T = identity_terms(J, u, v, th, eps, n, a, b, div)
    return np.abs(T.lhs - T.rhs) / np.maximum(T.scale, 1e-300)


def default_step(u, v):
    return 1e-4 * np.maximum(1.0, np.asarray(v) - np.asarray(u))


def conjugated_jet(tf: TestFunction, u, v, th, a, b, dtype=float) -> Jet:
    """Jet of e^{-(F - F(p))} phi: the conjugate of phi, rescaled by the constant e^{F(p)}."""
    U, V, TH = jets.coords(u, v, th, 2, dtype)
    phi = tf.expr(U, V, TH)
    if not isinstance(phi, Jet):
        phi = Jet.const(phi, U)
    Fj = W.F_conj(-(U * V), a, b)
    shifted = Jet(Fj.v - Fj.v, Fj.g, Fj.H)
    return jets.exp(-shifted) * phi


@dataclass
class Margins:
    est: np.ndarray
    rev: np.ndarray
    est_scale: np.ndarray
    rev_scale: np.ndarray


def inequality_margins(tf: TestFunction, u, v, th, p) -> Margins:
    """Pointwise margins (LHS - RHS) of both inequalities, with their term scales.

    Both sides of the reversed inequality are divided by e^{-2F} at the point.
    """
    eps, n, a, b = p.eps, p.n, p.a, p.b
    u, v, th = (np.asarray(x, dtype=float) for x in np.broadcast_arrays(u, v, th))
    f = W.hyperbolic_f(u, v)
    rho = W.rho_bar(u, v, eps)
    k = eps * f / rho

    J = tf.jet(u, v, th)
    T = identity_terms(J, u, v, th, eps, n, a, b, divergence_exact(J, u, v, th, eps, n, a, b))
    Ntil = T.Npsi - (n - 1) / 4 / np.sqrt(f) * J.v
    lhs = f * T.L**2 / (4 * a) + T.div
    rhs_terms = [0.5 * k * (T.Tpsi**2 + T.slash2), 0.25 * a * Ntil**2,
                 0.25 * b * a * a / np.sqrt(f) * J.v**2]
    est = lhs - sum(rhs_terms)
    est_scale = np.abs(f * T.L**2 / (4 * a)) + T.div_scale + sum(rhs_terms)

    Jc = conjugated_jet(tf, u, v, th, a, b)
    Tc = identity_terms(Jc, u, v, th, eps, n, a, b, divergence_exact(Jc, u, v, th, eps, n, a, b))
    Jp = tf.jet(u, v, th)
    box_phi = W.box_jet(Jp, u, v, th, eps, n)
    pu, pv, pth = Jp.g[..., 0], Jp.g[..., 1], Jp.g[..., 2]
    slash2 = pth**2 / rho**2 if n >= 2 else 0.0 * pu
    lhs_c = f * box_phi**2 / (4 * a) + Tc.div
    rhs_c = [eps / (16 * rho) * ((u * pu) ** 2 + (v * pv) ** 2 + f * slash2),
             b * a * a / (8 * np.sqrt(f)) * Jp.v**2]
    rev = lhs_c - sum(rhs_c)
    rev_scale = np.abs(f * box_phi**2 / (4 * a)) + Tc.div_scale + sum(rhs_c)
    return Margins(est, rev, est_scale, rev_scale)


def conjugation_residual(tf: TestFunction, u, v, th, eps, n, a, b):
    """|L(e^{-F} phi) - e^{-F} box(phi)|, relative, with e^{-F(p)} scaled out."""
    u, v, th = (np.asarray(x, dtype=float) for x in np.broadcast_arrays(u, v, th))
    f = W.hyperbolic_f(u, v)
    rho = W.rho_bar(u, v, eps)
    Jc = conjugated_jet(tf, u, v, th, a, b)
    Fp = W.F_prime(f, a, b)
    w = W.w_bar(u, v, eps, n)
    Sw = 0.5 * (u * Jc.g[..., 0] + v * Jc.g[..., 1]) + w * Jc.v
    L = W.box_jet(Jc, u, v, th, eps, n) + 2 * Fp * Sw + (W.A_fun(f, a, b) + eps * f * Fp / rho) * Jc.v
    target = W.box_jet(tf.jet(u, v, th), u, v, th, eps, n)
    return np.abs(L - target) / np.maximum(1.0, np.abs(target))


def dirichlet_boundary_residual(tf: TestFunction, u, v, th, eps, n, a, b, kappa, c):
    """Boundary current on {sigma = 0}, sigma = (1 - kappa) v - (1 + kappa) u - c, for phi = sigma psi.

    Returns the relative gap between P*(N) and (1/2) zeta N f |N phi|^2 (zeta scaled out).
    """
    u, v, th = (np.asarray(x, dtype=float) for x in np.broadcast_arrays(u, v, th))
    U, V, TH = jets.coords(u, v, th)
    sigma = (1 - kappa) * V - (1 + kappa) * U - c
    base = tf.expr(U, V, TH)
    phi = sigma * base
    Fj = W.F_conj(-(U * V), a, b)
    psi = jets.exp(-Jet(Fj.v - Fj.v, Fj.g, Fj.H)) * phi
    P_u, P_v, _ = current(u, v, th, psi.v, psi.g[..., 0], psi.g[..., 1], psi.g[..., 2],
                          eps, n, a, b)
    s_u, s_v = -(1 + kappa), (1 - kappa)
    norm = np.sqrt(-s_u * s_v)
    Nu, Nv = W.g_inv_uv() * s_v / norm, W.g_inv_uv() * s_u / norm
    PN = P_u * Nu + P_v * Nv
    Nf = Nu * (-v) + Nv * (-u)
    Nphi = Nu * phi.g[..., 0] + Nv * phi.g[..., 1]
    target = 0.5 * Nf * Nphi**2
    return np.abs(PN - target) / np.maximum(np.abs(target), 1e-300)


# --- suite over the catalog ----------------------------------------------------

IDENTITY_TOL = 1e-6
MARGIN_TOL = -1e-8
DECAY_RANGE = (3.5, 4.5)


@dataclass
class SuiteRow:
    n: int
    a: float
    b: float
    eps: float
    points: int
    identity_residual: float  # worst relative residual at the default step
    identity_residual_half: float  # same at half the step
    margin_est: float  # smallest relative margin of the estimate
    margin_rev: float  # smallest relative margin of the reversed inequality
    margin_abs: float  # smallest absolute margin over both

    @property
    def decay(self) -> float:
        return self.identity_residual / self.identity_residual_half

    @property
    def passed(self) -> bool:
        return (self.identity_residual <= IDENTITY_TOL
                and DECAY_RANGE[0] <= self.decay <= DECAY_RANGE[1]
                and min(self.margin_est, self.margin_rev) >= MARGIN_TOL)


def identity_points(rng, count, R=1.0, r_lo=0.25, t_frac=0.5, eps=0.0):
    """Warped images of points with r_lo <= r <= R and |t| <= t_frac r."""
    r = rng.uniform(r_lo, R, count)
    t = rng.uniform(-t_frac, t_frac, count) * r
    th = rng.uniform(0.3, np.pi - 0.3, count)
    ub, vb, _ = W.conformal_map(0.5 * (t - r), 0.5 * (t + r), eps)
    return ub, vb, th


def margin_points(rng, count, R=1.0, f_min=1e-3, eps=0.0):
    """Warped images of points of D_P with r < R and f >= f_min."""
    r = rng.uniform(0.0, R, count)
    t = rng.uniform(-1, 1, count) * r
    u, v = 0.5 * (t - r), 0.5 * (t + r)
    keep = -u * v >= f_min
    u, v = u[keep], v[keep]
    th = rng.uniform(0.05, np.pi - 0.05, keep.sum())
    ub, vb, _ = W.conformal_map(u, v, eps)
    return ub, vb, th


def carleman_suite(ns=(1, 2, 3), a_factors=(1, 4), R=1.0, count=1000, seed=0,
                   extra_random=10) -> list[SuiteRow]:
    """Pointwise identity and both inequalities over the catalog for each parameter set."""
    from .testfuncs import catalog, random_trig

    rng = np.random.default_rng(seed)
    rows = []
    for n in ns:
        for af in a_factors:
            p = W.CarlemanParams.standard(n, R, af).validate()
            ub, vb, th = identity_points(rng, count, R, eps=p.eps)
            r1 = r2 = 0.0
            for tf in catalog(n):
                r1 = max(r1, float(identity_residual(tf, ub, vb, th, p.eps, n, p.a, p.b).max()))
                r2 = max(r2, float(identity_residual(tf, ub, vb, th, p.eps, n, p.a, p.b,
                                                     h=default_step(ub, vb) / 2).max()))
            mu, mv, mth = margin_points(rng, 4 * count, R, eps=p.eps)
            me = mr = ma = np.inf
            for tf in catalog(n) + [random_trig(rng, n) for _ in range(extra_random)]:
                M = inequality_margins(tf, mu, mv, mth, p)
                me = min(me, float((M.est / M.est_scale).min()))
                mr = min(mr, float((M.rev / M.rev_scale).min()))
                ma = min(ma, float(M.est.min()), float(M.rev.min()))
            rows.append(SuiteRow(n, p.a, p.b, p.eps, len(ub), r1, r2, me, mr, ma))
    return rows
