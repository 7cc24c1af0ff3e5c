"""Moving 1+1D domains bounded by two timelike curves, their normals and observation regions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .minkowski import null_coords_arrays

TIMELIKE_MARGIN = 1e-6
MAX_ROOT_WINDOW = 1e3


class TimelikeMarginError(ValueError):
    pass


@dataclass(frozen=True)
class Linear:
    slope: float
    intercept: float = 0.0

    def __call__(self, t):
        return self.intercept + self.slope * np.asarray(t, dtype=float)

    def d1(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.slope)

    def d2(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class Sampled:
    """Cubic-spline curve through (knots, values); not-a-knot end conditions."""

    knots: tuple
    values: tuple
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if k.ndim != 1 or k.shape != y.shape or k.size < 4:
            raise ValueError("sampled curve needs >= 4 matching knots and values")
        object.__setattr__(self, "knots", tuple(k))
        object.__setattr__(self, "values", tuple(y))
        object.__setattr__(self, "_spline", CubicSpline(k, y))

    def __call__(self, t):
        return self._spline(np.asarray(t, dtype=float))

    def d1(self, t):
        return self._spline(np.asarray(t, dtype=float), 1)

    def d2(self, t):
        return self._spline(np.asarray(t, dtype=float), 2)


def curve_from_config(node) -> Linear | Sampled:
    if isinstance(node, (Linear, Sampled)):
        return node
    kind = node.get("kind", "linear")
    if kind == "linear":
        return Linear(float(node["slope"]), float(node.get("intercept", 0.0)))
    if kind == "sampled":
        return Sampled(tuple(node["knots"]), tuple(node["values"]))
    raise ValueError(f"unknown curve kind {kind!r}")


@dataclass(frozen=True)
class GTC1D:
    """Region lam1(t) < x < lam2(t) over the working window [t_min, t_max]."""

    lam1: Linear | Sampled
    lam2: Linear | Sampled
    t_min: float
    t_max: float
    eta: float = TIMELIKE_MARGIN
    n_check: int = 2001

    def __post_init__(self):
        if not self.t_max > self.t_min:
            raise ValueError("empty time window")
        t = np.linspace(self.t_min, self.t_max, self.n_check)
        if np.any(self.lam2(t) - self.lam1(t) <= 0.0):
            raise ValueError("curves cross: need lam1 < lam2 on the window")
        for name, lam in (("lam1", self.lam1), ("lam2", self.lam2)):
            worst = float(np.max(np.abs(lam.d1(t))))
            if worst > 1.0 - self.eta:
                raise TimelikeMarginError(
                    f"timelike margin violated: max |{name}'| = {worst:.6g} > 1 - {self.eta:g}"
                )

    def width(self, t):
        return self.lam2(t) - self.lam1(t)

    def curve(self, side: int):
        if side == 1:
            return self.lam1
        if side == 2:
            return self.lam2
        raise ValueError("side must be 1 (left) or 2 (right)")

    def beta(self, t, x):
        """Generator shift: Z = d_t + beta d_x is tangent to both curves."""
        L = self.width(t)
        return self.lam1.d1(t) + (np.asarray(x) - self.lam1(t)) * (self.lam2.d1(t) - self.lam1.d1(t)) / L

    def max_speed(self) -> float:
        t = np.linspace(self.t_min, self.t_max, self.n_check)
        return float(max(np.max(np.abs(self.lam1.d1(t))), np.max(np.abs(self.lam2.d1(t)))))

    def min_width(self) -> float:
        t = np.linspace(self.t_min, self.t_max, self.n_check)
        return float(np.min(self.width(t)))


def linear_domain(h1, h2, t_min, t_max, c1=0.0, c2=0.0) -> GTC1D:
    return GTC1D(Linear(h1, c1), Linear(h2, c2), t_min, t_max)


@dataclass(frozen=True)
class BoundaryNormal:
    nu_t: float
    nu: tuple
    side: int


def _check_speed(lp):
    lp = np.asarray(lp, dtype=float)
    if np.any(np.abs(lp) >= 1.0):
        raise TimelikeMarginError("timelike margin violated: |lambda'| >= 1")


def normal_components(dom: GTC1D, side: int, tau):
    """Vectorized outward unit normal (nu_t, nu) on one side."""
    lp = dom.curve(side).d1(tau)
    _check_speed(lp)
    s = 1.0 / np.sqrt(1.0 - lp * lp)
    sign = -1.0 if side == 1 else 1.0
    return sign * lp * s, sign * s


def boundary_normal_1d(dom: GTC1D, side: int, tau: float) -> BoundaryNormal:
    nu_t, nu = normal_components(dom, side, float(tau))
    return BoundaryNormal(float(nu_t), (float(nu),), side)


def normal_derivatives(dom: GTC1D, side: int, tau, center):
    """(N f_P, N r_P, N t_P) at the boundary point of parameter tau on one side."""
    t0, x0 = center
    nu_t, nu = normal_components(dom, side, tau)
    t_P = np.asarray(tau, dtype=float) - t0
    x_P = dom.curve(side)(tau) - x0
    r = np.abs(x_P)
    if np.any(r == 0.0):
        raise ValueError("N r_P undefined where r_P = 0")
    Nr = x_P * nu / r
    Nf = 0.5 * (r * Nr - t_P * nu_t)
    return Nf, Nr, nu_t


def cos_theta(nu_t, nu, x_P, r):
    """cos of the angle between the spatial normal and x_P (1D: a sign)."""
    return x_P * nu / (r * np.sqrt(1.0 + nu_t * nu_t))


# --- optimal timespans -----------------------------------------------------


def _bisect_crossing(g, dt0=1e-3, tmax=MAX_ROOT_WINDOW):
    """Root T > 0 of a strictly decreasing g with g(0) > 0, bracketed to adjacent floats."""
    if not g(0.0) > 0.0:
        raise ValueError("null ray starts on the wrong side of the target curve")
    lo, hi = 0.0, dt0
    while g(hi) > 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > tmax:
            raise ValueError("null ray does not reach the opposite curve within the window")
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return lo if abs(g(lo)) < abs(g(hi)) else hi


def optimal_times_1d(lam1, lam2, tau_minus: float) -> dict:
    """Null-ray crossing times for one- and two-sided observation from tau_minus."""
    l1 = lambda t: float(lam1(t))
    l2 = lambda t: float(lam2(t))
    tm = float(tau_minus)
    # leftward ray from the right curve reaches the left curve
    T_minus = _bisect_crossing(lambda T: (l2(tm) - T) - l1(tm + T))
    s = tm + T_minus
    T_plus = _bisect_crossing(lambda T: l2(s + T) - (l1(s) + T))
    T2 = _bisect_crossing(lambda T: l2(tm + T) - (l1(tm) + T))
    return {
        "T_minus": T_minus,
        "T_plus": T_plus,
        "T_onesided": T_minus + T_plus,
        "T1": T_minus,
        "T2": T2,
        "T_twosided": max(T_minus, T2),
    }


def optimal_times_linear_closed_form(h1: float, h2: float, tau_minus: float) -> dict:
    """Closed forms for lam_i = h_i t (expanding with tau_minus > 0, closing with tau_minus < 0)."""
    d = abs(h2 - h1) * abs(tau_minus)
    T1 = d / (1.0 + h1)
    T2 = d / (1.0 - h2)
    T = 2.0 * d / ((1.0 + h1) * (1.0 - h2))
    return {"T_minus": T1, "T_plus": T - T1, "T_onesided": T, "T1": T1, "T2": T2,
            "T_twosided": max(T1, T2)}


# --- region scans ------------------------------------------------------------


REGION_HEADER = ("tau,t,x,fP,NfP,NrP,S,costheta,in_gamma_plus,in_gamma_Pdelta,in_gamma_dagger")


@dataclass(frozen=True)
class RegionSample:
    side: int
    tau: float
    t: float
    x: float
    fP: float
    NfP: float
    NrP: float
    S: float
    costheta: float
    in_gamma_plus: bool
    in_gamma_Pdelta: bool
    in_gamma_dagger: bool


def sup_radius(dom: GTC1D, center, t_lo, t_hi, samples: int = 10_000) -> float:
    """Sampled sup of r_P over the domain intersected with the cone exterior."""
    m = max(int(np.sqrt(samples)), 2)
    t = np.linspace(t_lo, t_hi, m)[:, None]
    y = np.linspace(0.0, 1.0, m)[None, :]
    x = dom.lam1(t) + y * dom.width(t)
    r, _, _, f = null_coords_arrays(np.broadcast_to(t, x.shape), x, center[0], center[1])
    inside = f > 0.0
    if not np.any(inside):
        raise ValueError("domain does not meet the cone exterior of the center")
    return float(np.max(r[inside]))


def region_scan(dom: GTC1D, center, delta: float, window, samples: int = 201,
                r_samples: int = 10_000, R_plus: float | None = None) -> list[RegionSample]:
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    t_lo, t_hi = window
    if not t_hi > t_lo or samples < 1:
        raise ValueError("empty window")
    if R_plus is None:
        R_plus = sup_radius(dom, center, t_lo, t_hi, r_samples)
    tau = np.linspace(t_lo, t_hi, samples)
    out = []
    for side in (1, 2):
        x = dom.curve(side)(tau)
        r, _, _, f = null_coords_arrays(tau, x, center[0], center[1])
        nu_t, nu = normal_components(dom, side, tau)
        t_P = tau - center[0]
        x_P = x - center[1]
        with np.errstate(divide="ignore", invalid="ignore"):
            Nr = np.where(r > 0, x_P * nu / np.where(r > 0, r, 1.0), 0.0)
            cth = np.where(r > 0, cos_theta(nu_t, nu, x_P, np.where(r > 0, r, 1.0)), 0.0)
        Nf = 0.5 * (r * Nr - t_P * nu_t)
        S = (1.0 - delta**2 * r / R_plus) * Nf + (delta**2 * f / R_plus) * Nr
        ext = f > 0.0
        tn = t_P * nu_t
        with np.errstate(divide="ignore", invalid="ignore"):
            thresh = (1.0 - delta**2) ** np.sign(tn) * tn / (r * np.sqrt(1.0 + nu_t**2))
        g_plus = ext & (S > 0.0)
        g_pd = ext & (cth > thresh)
        g_dag = ext & (Nf > 0.0)
        for k in range(samples):
            out.append(RegionSample(side, float(tau[k]), float(tau[k]), float(x[k]), float(f[k]),
                                    float(Nf[k]), float(Nr[k]), float(S[k]), float(cth[k]),
                                    bool(g_plus[k]), bool(g_pd[k]), bool(g_dag[k])))
    return out
