"""Manufactured solutions phi = e^{s t} sin(k pi y), y = (x - lam1)/L, with exact forcing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gtc import GTC1D
from .solver import CauchyData, Coefficients


@dataclass(frozen=True)
class ManufacturedSolution:
    dom: GTC1D
    coeffs: Coefficients
    k: int = 1
    s: float = 1.0

    def _y(self, t, x):
        d = self.dom
        L = d.width(t)
        l1p = d.lam1.d1(t)
        Lp = d.lam2.d1(t) - l1p
        Lpp = d.lam2.d2(t) - d.lam1.d2(t)
        y = (np.asarray(x, dtype=float) - d.lam1(t)) / L
        c = l1p + y * Lp
        y_t = -c / L
        y_tt = -(d.lam1.d2(t) + y_t * Lp + y * Lpp) / L + c * Lp / L**2
        return y, L, y_t, y_tt

    def derivatives(self, t, x):
        """(phi, phi_t, phi_x, phi_tt, phi_xx)."""
        y, L, y_t, y_tt = self._y(t, x)
        kp = self.k * np.pi
        e = np.exp(self.s * np.asarray(t, dtype=float))
        S, C = np.sin(kp * y), np.cos(kp * y)
        phi = e * S
        phi_t = e * (self.s * S + kp * C * y_t)
        phi_x = e * kp * C / L
        phi_tt = e * (self.s**2 * S + 2 * self.s * kp * C * y_t - kp**2 * S * y_t**2 + kp * C * y_tt)
        phi_xx = -e * kp**2 * S / L**2
        return phi, phi_t, phi_x, phi_tt, phi_xx

    def __call__(self, t, x):
        return self.derivatives(t, x)[0]

    def forcing(self, t, x):
        """-phi_tt + phi_xx + X^t phi_t + X^x phi_x + V phi."""
        phi, pt, px, ptt, pxx = self.derivatives(t, x)
        out = -ptt + pxx
        co = self.coeffs
        if co.Xt is not None:
            out = out + co.Xt(t, x) * pt
        if co.Xx is not None:
            out = out + co.Xx(t, x) * px
        if co.V is not None:
            out = out + co.V(t, x) * phi
        return out

    def data(self, t0: float) -> CauchyData:
        return CauchyData(lambda x: self.derivatives(t0, x)[0], lambda x: self.derivatives(t0, x)[1])


def mms_errors(ms: ManufacturedSolution, t0: float, t1: float, levels=((50, 150), (100, 300), (200, 600))):
    """Max nodal errors of solve_forward against the manufactured solution on successive grids."""
    from .solver import certified_grid, solve_forward

    errs, grids = [], []
    for nx, nt in levels:
        g = certified_grid(ms.dom, t0, t1, nx, nt)
        fld = solve_forward(ms.dom, ms.coeffs, ms.data(t0), g, forcing=ms.forcing)
        errs.append(float(np.max(np.abs(fld.values - ms(fld.disc.T, fld.disc.X)))))
        grids.append((g.nx, g.nt))
    return errs, grids
