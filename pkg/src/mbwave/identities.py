"""Suite of pointwise identities for the warped metric, each checked by two routes.

Closed route: the closed form against an exact evaluation (jets or the Christoffel
assembly), at 1e-12 absolute-relative. FD route: the same quantity by central
differences at h and 2h; the residual must be small and decay at order 2 unless it
already sits at the rounding floor (then the identity is exact for the stencil).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from . import warped as W
from .testfuncs import TestFunction, catalog

CLOSED_TOL = 1e-12
FD_TOL = 1e-6
FD_STEP = 1e-4
ORDER_RANGE = (3.5, 4.5)
LD = np.longdouble

IDENTITY_NAMES = ("f_grad", "f_hess", "f_box", "f_rho_deriv", "f_rho_box", "pseudoconvex",
                  "w_box", "rf_conf", "conf_wave", "F_deriv")


@dataclass
class IdentityResult:
    name: str
    n: int
    eps: float
    points: int
    closed_residual: float
    fd_residual: float | None  # at h
    fd_residual_coarse: float | None  # at 2h
    fd_floor: float | None  # rounding floor estimate for the FD route

    @property
    def fd_ratio(self) -> float | None:
        if not self.fd_residual or self.fd_residual_coarse is None:
            return None
        return self.fd_residual_coarse / self.fd_residual

    @property
    def fd_exact(self) -> bool:
        """FD residual at the rounding floor: no truncation error to observe."""
        return self.fd_residual is not None and self.fd_residual <= self.fd_floor

    @property
    def passed(self) -> bool:
        ok = self.closed_residual <= CLOSED_TOL
        if self.fd_residual is not None:
            ok = ok and self.fd_residual <= FD_TOL
            r = self.fd_ratio
            in_order = r is not None and ORDER_RANGE[0] <= r <= ORDER_RANGE[1]
            ok = ok and (in_order or self.fd_exact)
        return ok


def _floor(dtype, order, h=FD_STEP, scale=100.0):
    """Rounding floor of a central difference of the given order at step h."""
    return scale * float(np.finfo(dtype).eps) / h**order


def rel(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)) / np.maximum(1.0, np.abs(b))))


def sample_points(rng, count, r_lo=0.5, r_hi=2.0, tmax=0.9):
    """Random exterior points (f > 0) with bounded |t|/r, plus a polar angle."""
    r = rng.uniform(r_lo, r_hi, count)
    t = rng.uniform(-tmax, tmax, count) * r
    th = rng.uniform(0.3, np.pi - 0.3, count)
    return 0.5 * (t - r), 0.5 * (t + r), th


def _jet_uv(u, v, th, dtype=float):
    return jets.coords(u, v, th, 2, dtype)


def _sph_christoffels_fd(u, v, eps, h):
    """Spherical Christoffel multipliers from central differences of rho_bar (the metric)."""
    dv_rho = (W.rho_bar(u, v + h, eps) - W.rho_bar(u, v - h, eps)) / (2 * h)
    du_rho = (W.rho_bar(u + h, v, eps) - W.rho_bar(u - h, v, eps)) / (2 * h)
    rho = W.rho_bar(u, v, eps)
    return dv_rho / (2 * rho), du_rho / (2 * rho)


def _f_partials_fd(u, v, h):
    f = W.hyperbolic_f
    return ((f(u + h, v) - f(u - h, v)) / (2 * h), (f(u, v + h) - f(u, v - h)) / (2 * h),
            (f(u + h, v + h) - f(u + h, v - h) - f(u - h, v + h) + f(u - h, v - h)) / (4 * h * h))


# --- per-identity checks; each returns (closed residual, fd function of h or None, floor) ---


def _f_grad(u, v, th, eps, n):
    H = W.warped_hessian_f(u, v, eps, n)
    f = W.hyperbolic_f(u, v)
    closed = max(rel(H["grad_u"], 0.5 * u), rel(H["grad_v"], 0.5 * v), rel(H["grad_sq"], f))

    def fd(h):
        fu, fv, _ = _f_partials_fd(u, v, h)
        gu, gv = W.g_inv_uv() * fv, W.g_inv_uv() * fu
        return max(rel(gu, 0.5 * u), rel(gv, 0.5 * v), rel(-fu * fv, f))

    return closed, fd, _floor(np.float64, 1)


def _f_hess(u, v, th, eps, n):
    H = W.warped_hessian_f(u, v, eps, n)
    f = W.hyperbolic_f(u, v)
    target = 0.5 + eps * f / W.rho_bar(u, v, eps)
    closed = max(rel(H["uv"], -1.0), rel(H["sph"], target))

    def fd(h):
        fu, fv, fuv = _f_partials_fd(u, v, h)
        Gu, Gv = _sph_christoffels_fd(u, v, eps, h)
        return max(rel(fuv, -1.0), rel(-Gu * fu - Gv * fv, target))

    return closed, fd, _floor(np.float64, 2)


def _f_box(u, v, th, eps, n):
    H = W.warped_hessian_f(u, v, eps, n)
    f = W.hyperbolic_f(u, v)
    closed = max(rel(H["box"], W.box_f_closed(u, v, eps, n)), rel(H["hess_grad_grad"], 0.5 * f))
    uL, vL, thL, eL = (np.asarray(a, dtype=LD) for a in (u, v, th, eps))

    def fd(h):
        g = lambda a, b, c: W.hyperbolic_f(a, b) + 0 * c
        box = W.box_fd(g, uL, vL, thL, eL, n, LD(h))
        fu, fv, fuv = _f_partials_fd(uL, vL, LD(h))
        gu, gv = W.g_inv_uv() * fv, W.g_inv_uv() * fu
        hgg = 2 * gu * gv * fuv
        return max(rel(box.astype(float), W.box_f_closed(u, v, eps, n)), rel(hgg.astype(float), 0.5 * f))

    return closed, fd, _floor(LD, 2)


def _f_over_rho_jet(u, v, th, eps, dtype=float):
    U, V, TH = _jet_uv(u, v, th, dtype)
    F = -(U * V)
    return F / ((V - U) + 2 * eps * F)


def _f_rho_deriv(u, v, th, eps, n):
    J = _f_over_rho_jet(u, v, th, eps)
    du, dv = W.f_over_rho_derivs_closed(u, v, eps)
    closed = max(rel(J.g[..., 0], du), rel(J.g[..., 1], dv))

    def fd(h):
        g = lambda a, b: W.hyperbolic_f(a, b) / W.rho_bar(a, b, eps)
        return max(rel((g(u + h, v) - g(u - h, v)) / (2 * h), du),
                   rel((g(u, v + h) - g(u, v - h)) / (2 * h), dv))

    return closed, fd, _floor(np.float64, 1)


def _f_rho_box(u, v, th, eps, n):
    J = _f_over_rho_jet(u, v, th, eps)
    target = W.box_f_over_rho_closed(u, v, eps, n)
    closed = rel(W.box_jet(J, u, v, th, eps, n), target)
    uL, vL, thL, eL = (np.asarray(a, dtype=LD) for a in (u, v, th, eps))

    def fd(h):
        g = lambda a, b, c: W.hyperbolic_f(a, b) / W.rho_bar(a, b, eL) + 0 * c
        return rel(W.box_fd(g, uL, vL, thL, eL, n, LD(h)).astype(float), target)

    return closed, fd, _floor(LD, 2)


def _pseudoconvex(u, v, th, eps, n):
    H = W.warped_hessian_f(u, v, eps, n)
    f = W.hyperbolic_f(u, v)
    c = eps * f / (2 * W.rho_bar(u, v, eps))
    closed = max(rel(H["pi_TT"], c), rel(H["pi_NN"], -c), rel(H["pi_sph"], c))

    def fd(h):
        fu, fv, fuv = _f_partials_fd(u, v, h)
        Gu, Gv = _sph_christoffels_fd(u, v, eps, h)
        hb = W.h_bar(u, v, eps)
        s = 0.5 / np.sqrt(f)
        Tu, Tv, Nu, Nv = -s * u, s * v, s * u, s * v
        # Gamma^mu_{uv} = 0 and the uu, vv Hessian entries vanish for f = -uv
        TT = 2 * Tu * Tv * fuv - hb * (-4.0 * Tu * Tv)
        NN = 2 * Nu * Nv * fuv - hb * (-4.0 * Nu * Nv)
        sph = -Gu * fu - Gv * fv - hb
        return max(rel(TT, c), rel(NN, -c), rel(sph, c))

    return closed, fd, _floor(np.float64, 2)


def _w_box(u, v, th, eps, n):
    U, V, TH = _jet_uv(u, v, th)
    F = -(U * V)
    Jw = (n - 1) / 4 + (n - 2) * eps * F / (2 * ((V - U) + 2 * eps * F))
    target = W.box_w_closed(u, v, eps, n)
    closed = rel(W.box_jet(Jw, u, v, th, eps, n), target)
    uL, vL, thL, eL = (np.asarray(a, dtype=LD) for a in (u, v, th, eps))

    def fd(h):
        g = lambda a, b, c: W.w_bar(a, b, eL, n) + 0 * c
        return rel(W.box_fd(g, uL, vL, thL, eL, n, LD(h)).astype(float), target)

    return closed, fd, _floor(LD, 2)


def _rf_conf(u, v, th, eps, n):
    ub, vb, xi = W.conformal_map(u, v, eps)
    f, r = W.hyperbolic_f(u, v), W.radius(u, v)
    closed = max(rel(W.hyperbolic_f(ub, vb), f / xi), rel(W.rho_bar(ub, vb, eps), r / xi))
    return closed, None, None


def conf_wave_closed(tf: TestFunction, u, v, th, eps, n):
    """Both sides of the conformal wave identity with exact jets."""
    ub, vb, xi = W.conformal_map(u, v, eps)
    UB, VB, TH = _jet_uv(ub, vb, th)
    X, Y = UB / (1 - eps * UB), VB / (1 + eps * VB)
    G = ((1 + eps * X) * (1 - eps * Y)) ** ((n - 1) / 2) * tf.expr(UB, VB, TH) if n > 1 else tf.expr(UB, VB, TH)
    pot = (n - 1) ** 2 * eps / (2 * W.rho_bar(ub, vb, eps))
    lhs = W.box_jet(G, ub, vb, th, eps, n) + pot * G.v
    U, V, TH2 = _jet_uv(u, v, th)
    phi = tf.expr(U / (1 + eps * U), V / (1 - eps * V), TH2)
    rhs = xi ** ((n + 3) / 2) * W.box_jet(phi, u, v, th, 0.0, n)
    return lhs, rhs


def _conf_wave(u, v, th, eps, n):
    closed = 0.0
    for tf in catalog(n):
        lhs, rhs = conf_wave_closed(tf, u, v, th, eps, n)
        closed = max(closed, rel(lhs, rhs))
    uL, vL, thL, eL = (np.asarray(a, dtype=LD) for a in (u, v, th, eps))

    def fd(h):
        m = 0.0
        for tf in catalog(n):
            lhs, rhs = W.conf_wave_sides(tf, uL, vL, thL, eL, n, LD(h))
            m = max(m, rel(lhs.astype(float), rhs.astype(float)))
        return m

    return closed, fd, _floor(LD, 2)


def _F_deriv(u, v, th, eps, n, a=None, b=0.1):
    a = float(n * n) if a is None else a
    f = W.hyperbolic_f(u, v)
    closed_w = rel(np.exp(-2 * W.F_conj(f, a, b)) / W.warped_weight(f, a, b), 1.0)
    U, V, TH = _jet_uv(f, v, th)  # f as a coordinate jet
    Jf = W.F_conj(U, a, b)
    closed = max(closed_w, rel(Jf.g[..., 0], W.F_prime(f, a, b)))

    def fd(h):
        hf = h * f  # relative step: F' ~ 1/f
        d = (W.F_conj(f + hf, a, b) - W.F_conj(f - hf, a, b)) / (2 * hf)
        return rel(d, W.F_prime(f, a, b))

    return closed, fd, _floor(np.float64, 1)


CHECKS = {
    "f_grad": _f_grad, "f_hess": _f_hess, "f_box": _f_box, "f_rho_deriv": _f_rho_deriv,
    "f_rho_box": _f_rho_box, "pseudoconvex": _pseudoconvex, "w_box": _w_box,
    "rf_conf": _rf_conf, "conf_wave": _conf_wave, "F_deriv": _F_deriv,
}


def check_identity(name: str, n: int, eps: float, count: int = 1000, seed: int = 0,
                   h: float = FD_STEP) -> IdentityResult:
    rng = np.random.default_rng(seed)
    u, v, th = sample_points(rng, count)
    closed, fd, floor = CHECKS[name](u, v, th, eps, n)
    r1 = r2 = None
    if fd is not None:
        r1, r2 = fd(h), fd(2 * h)
    return IdentityResult(name, n, eps, count, closed, r1, r2, floor)


def identity_suite(ns=(1, 2, 3), epss=(0.0, 0.02, 0.05), count: int = 1000, seed: int = 0,
                   names=IDENTITY_NAMES) -> list[IdentityResult]:
    return [check_identity(name, n, eps, count, seed) for name in names for n in ns for eps in epss]
