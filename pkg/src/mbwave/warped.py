"""Warped geometry: metric quantities, conformal map, Christoffel symbols and Carleman weights.

Coordinates are null coordinates (u, v) about the center plus, for n >= 2, the
polar angle theta of a zonal function on S^(n-1). The warped metric is
g = -2 (du dv + dv du) + rho^2 (round sphere), rho = r + 2 eps f, r = v - u, f = -u v.

Scalar functions accept numpy arrays or Jets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets

# concretization of "eps << b << 1/R": eps <= b/(EPS_B_RATIO n), b <= 1/(B_R_RATIO R)
EPS_B_RATIO = 100.0
B_R_RATIO = 10.0
_REL = 1e-12


@dataclass(frozen=True)
class WarpParams:
    eps: float
    n: int

    def __post_init__(self):
        if self.n < 1 or not np.isfinite(self.eps):
            raise ValueError("need n >= 1 and finite eps")


@dataclass(frozen=True)
class CarlemanParams:
    a: float
    b: float
    eps: float
    R: float
    n: int

    def violations(self) -> list[str]:
        out = []
        if not (self.a > 0 and self.b > 0 and self.eps > 0 and self.R > 0):
            out.append("a, b, eps, R must be positive")
        if self.a < self.n**2:
            out.append(f"a = {self.a} < n^2 = {self.n**2}")
        if self.eps > self.b / (EPS_B_RATIO * self.n) * (1 + _REL):
            out.append(f"eps = {self.eps} > b/({EPS_B_RATIO:g} n)")
        if self.b > 1.0 / (B_R_RATIO * self.R) * (1 + _REL):
            out.append(f"b = {self.b} > 1/({B_R_RATIO:g} R)")
        return out

    def validate(self) -> "CarlemanParams":
        bad = self.violations()
        if bad:
            raise ValueError("invalid Carleman parameters: " + "; ".join(bad))
        return self

    @classmethod
    def standard(cls, n: int, R: float, a_factor: float = 1.0) -> "CarlemanParams":
        b = 1.0 / (B_R_RATIO * R)
        return cls(a=a_factor * n**2, b=b, eps=b / (EPS_B_RATIO * n), R=R, n=n)


# --- scalar fields -----------------------------------------------------------


def hyperbolic_f(u, v):
    return -(u * v)


def radius(u, v):
    return v - u


def rho_bar(u, v, eps):
    return (v - u) + 2 * eps * hyperbolic_f(u, v)


def h_bar(u, v, eps):
    return 0.5 + eps * hyperbolic_f(u, v) / (2 * rho_bar(u, v, eps))


def w_bar(u, v, eps, n):
    return (n - 1) / 4 + (n - 2) * eps * hyperbolic_f(u, v) / (2 * rho_bar(u, v, eps))


def conformal_factor(u, v, eps):
    return (1 + eps * u) * (1 - eps * v)


def F_conj(f, a, b):
    return -a * (jets.log(f) + 2 * b * jets.sqrt(f))


def F_prime(f, a, b):
    return -a * (1 / f + b / jets.sqrt(f))


def A_fun(f, a, b):
    return a * a / f + b * a * (2 * a - 0.5) / jets.sqrt(f) + b * b * a * a


def fA_prime(f, a, b):
    """d/df of f A(f)."""
    return 0.5 * b * a * (2 * a - 0.5) / jets.sqrt(f) + b * b * a * a


@dataclass(frozen=True)
class WarpedScalars:
    rho: float
    h: float
    w: float
    xi: float
    F: float | None
    Fp: float | None
    A: float | None


def warped_scalars(u, v, eps, n, a=None, b=None) -> WarpedScalars:
    f = hyperbolic_f(u, v)
    F = Fp = A = None
    if a is not None:
        if np.any(np.asarray(f) <= 0):
            raise ValueError("F, F', A need f > 0")
        F, Fp, A = F_conj(f, a, b), F_prime(f, a, b), A_fun(f, a, b)
    return WarpedScalars(rho=rho_bar(u, v, eps), h=h_bar(u, v, eps), w=w_bar(u, v, eps, n),
                         xi=conformal_factor(u, v, eps), F=F, Fp=Fp, A=A)


# --- conformal map -----------------------------------------------------------


def conformal_map(u, v, eps):
    """(u, v) -> (u/(1 + eps u), v/(1 - eps v)) and the conformal factor xi."""
    d1 = 1 + eps * u
    d2 = 1 - eps * v
    if np.any(np.asarray(d1) == 0) or np.any(np.asarray(d2) == 0):
        raise ValueError("conformal map singular")
    return u / d1, v / d2, d1 * d2


def conformal_inverse(ub, vb, eps):
    return ub / (1 - eps * ub), vb / (1 + eps * vb)


# --- weights -----------------------------------------------------------------


def carleman_weight(u, v, p: CarlemanParams):
    """Weight about the center in Minkowski null coordinates, with the (1 - eps u)(1 + eps v) exponent factor."""
    f = hyperbolic_f(u, v)
    if np.any(np.asarray(f) <= 0):
        raise ValueError("weight defined only for f > 0")
    xi = conformal_factor(u, v, p.eps)
    den = np.sqrt((1 - p.eps * u) * (1 + p.eps * v))
    return (f / xi * np.exp(2 * p.b * np.sqrt(f) / den)) ** (2 * p.a)


def warped_weight(f, a, b):
    if np.any(np.asarray(f) <= 0):
        raise ValueError("weight defined only for f > 0")
    return (f * np.exp(2 * b * np.sqrt(f))) ** (2 * a)


def pullback_weight(u, v, p: CarlemanParams):
    """Warped weight composed with the conformal map: zeta_{a,b}(f/xi)."""
    return warped_weight(hyperbolic_f(u, v) / conformal_factor(u, v, p.eps), p.a, p.b)


# --- Christoffel symbols and Hessian of f ------------------------------------


def warped_christoffels(u, v, eps, n) -> dict:
    """Nonzero symbols; spherical blocks as multipliers of g_ab (upper u, v) or delta^a_b."""
    rho = rho_bar(u, v, eps)
    if np.any(np.asarray(rho) == 0):
        raise ValueError("rho = 0")
    return {
        "u_ab": (1 - 2 * eps * u) / (2 * rho),
        "v_ab": -(1 + 2 * eps * v) / (2 * rho),
        "a_ub": -(1 + 2 * eps * v) / rho,
        "a_vb": (1 - 2 * eps * u) / rho,
        "uv": 0.0,
    }


def g_inv_uv():
    return -0.5


def warped_hessian_f(u, v, eps, n) -> dict:
    """Hessian of f assembled from the Christoffel symbols, plus frame and trace values."""
    G = warped_christoffels(u, v, eps, n)
    fu, fv = -v, -u
    hess_uv = -1.0 - G["uv"] * (fu + fv)
    hess_uu = 0.0 * u
    hess_vv = 0.0 * v
    sph = -G["u_ab"] * fu - G["v_ab"] * fv
    box = 2 * g_inv_uv() * hess_uv + (n - 1) * sph
    out = {"uv": hess_uv, "uu": hess_uu, "vv": hess_vv, "sph": sph, "box": box}
    f = hyperbolic_f(u, v)
    if np.all(np.asarray(f) > 0):
        s = 0.5 / np.sqrt(f)
        Tu, Tv, Nu, Nv = -s * u, s * v, s * u, s * v
        out["TT"] = Tu * Tu * hess_uu + 2 * Tu * Tv * hess_uv + Tv * Tv * hess_vv
        out["NN"] = Nu * Nu * hess_uu + 2 * Nu * Nv * hess_uv + Nv * Nv * hess_vv
        gTT = 2 * (-2.0) * Tu * Tv
        gNN = 2 * (-2.0) * Nu * Nv
        h = h_bar(u, v, eps)
        out["pi_TT"] = out["TT"] - h * gTT
        out["pi_NN"] = out["NN"] - h * gNN
        out["pi_sph"] = sph - h
        # grad f = g^{uv}(f_v d_u + f_u d_v); |grad f|^2 and Hess(grad f, grad f)
        gu, gv = g_inv_uv() * fv, g_inv_uv() * fu
        out["grad_u"], out["grad_v"] = gu, gv
        out["grad_sq"] = 2 * (-2.0) * gu * gv
        out["hess_grad_grad"] = 2 * gu * gv * hess_uv
    return out


# --- closed forms ------------------------------------------------------------


def box_f_closed(u, v, eps, n):
    return (n + 1) / 2 + (n - 1) * eps * hyperbolic_f(u, v) / rho_bar(u, v, eps)


def f_over_rho_derivs_closed(u, v, eps):
    rho = rho_bar(u, v, eps)
    return -v * v / (rho * rho), u * u / (rho * rho)


def box_f_over_rho_closed(u, v, eps, n):
    rho = rho_bar(u, v, eps)
    f = hyperbolic_f(u, v)
    return (n - 1) / (2 * rho) * (1 - 2 * eps * f / rho) - (n - 3) * f / rho**3


def box_w_closed(u, v, eps, n):
    rho = rho_bar(u, v, eps)
    f = hyperbolic_f(u, v)
    return -(n - 2) * eps / (2 * rho) * ((n - 3) * f / rho**2 - (n - 1) / 2 * (1 - 2 * eps * f / rho))


def w_derivs_closed(u, v, eps, n):
    du, dv = f_over_rho_derivs_closed(u, v, eps)
    c = (n - 2) * eps / 2
    return c * du, c * dv


def scalar_curvature(u, v, eps, n):
    return -2 * eps * n * (n - 1) / rho_bar(u, v, eps)


# --- differential operators --------------------------------------------------


def box_from_derivs(u, v, th, eps, n, p_u, p_v, p_th, p_uv, p_thth):
    """Warped wave operator of a zonal function from its partial derivatives."""
    rho = rho_bar(u, v, eps)
    out = -p_uv - (n - 1) / (2 * rho) * ((1 - 2 * eps * u) * p_u - (1 + 2 * eps * v) * p_v)
    if n >= 2:
        out = out + (p_thth + (n - 2) * np.cos(th) / np.sin(th) * p_th) / (rho * rho)
    return out


def box_jet(J, u, v, th, eps, n):
    """Warped wave operator applied to a second-order jet."""
    return box_from_derivs(u, v, th, eps, n, J.g[..., 0], J.g[..., 1], J.g[..., 2],
                           J.H[..., 0, 1], J.H[..., 2, 2])


def grad_sq_from_derivs(u, v, eps, p_u, p_v, p_th, n):
    out = -p_u * p_v
    if n >= 2:
        rho = rho_bar(u, v, eps)
        out = out + p_th * p_th / (rho * rho)
    return out


def fd_partials(g, u, v, th, h):
    """Central differences (first, mixed uv, second theta) of a callable g(u, v, th)."""
    g0 = g(u, v, th)
    p_u = (g(u + h, v, th) - g(u - h, v, th)) / (2 * h)
    p_v = (g(u, v + h, th) - g(u, v - h, th)) / (2 * h)
    p_th = (g(u, v, th + h) - g(u, v, th - h)) / (2 * h)
    p_uv = (g(u + h, v + h, th) - g(u + h, v - h, th) - g(u - h, v + h, th)
            + g(u - h, v - h, th)) / (4 * h * h)
    p_thth = (g(u, v, th + h) - 2 * g0 + g(u, v, th - h)) / (h * h)
    return g0, p_u, p_v, p_th, p_uv, p_thth


def box_fd(g, u, v, th, eps, n, h):
    """Warped wave operator by central differences, assembled from the Christoffel symbols."""
    G = warped_christoffels(u, v, eps, n)
    rho = rho_bar(u, v, eps)
    _, p_u, p_v, p_th, p_uv, p_thth = fd_partials(g, u, v, th, h)
    # g^{uv} terms (Gamma^mu_uv = 0) plus the trace over the sphere block
    out = 2 * g_inv_uv() * p_uv - (n - 1) * (G["u_ab"] * p_u + G["v_ab"] * p_v)
    if n >= 2:
        out = out + (p_thth + (n - 2) * np.cos(th) / np.sin(th) * p_th) / (rho * rho)
    return out


# --- conformal identity ------------------------------------------------------


def conf_wave_sides(phibar, u, v, th, eps, n, h):
    """Both sides of the conformal wave identity at the Minkowski point (u, v, th), by FD.

    phibar is a callable on warped coordinates; phi = phibar composed with the conformal map.
    """
    ub, vb, xi = conformal_map(u, v, eps)

    def G(a, b, t):
        x, y = conformal_inverse(a, b, eps)
        return conformal_factor(x, y, eps) ** ((n - 1) / 2) * phibar(a, b, t)

    def phi(a, b, t):
        x, y, _ = conformal_map(a, b, eps)
        return phibar(x, y, t)

    pot = (n - 1) ** 2 * eps / (2 * rho_bar(ub, vb, eps))
    lhs = box_fd(G, ub, vb, th, eps, n, h) + pot * G(ub, vb, th)
    rhs = xi ** ((n + 3) / 2) * box_fd(phi, u, v, th, 0.0, n, h)
    return lhs, rhs
