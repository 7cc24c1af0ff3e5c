"""Catalog of zonal test functions psi(u, v, theta) = radial(u, v) * Y(theta) with exact jets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jets
from .jets import Jet


def _radial_catalog():
    return {
        "poly_u2v": lambda U, V: U * U * V,
        "poly_mixed": lambda U, V: (1 + 0.5 * U) * (2 - V) ** 2,
        "poly_cubic": lambda U, V: U * U * U - 2 * U * V + V * V + 0.3,
        "trig_sum": lambda U, V: jets.sin(1.3 * U + 0.7 * V + 0.2),
        "trig_prod": lambda U, V: jets.cos(0.9 * U) * jets.sin(1.1 * V + 0.4),
        "exp_trig": lambda U, V: jets.exp(0.3 * V - 0.2 * U) * jets.cos(U - V),
    }


def zonal_harmonic(n: int, ell: int) -> Callable:
    """Zonal spherical harmonic of degree ell on S^(n-1) as a function of the polar angle."""
    if n == 1:
        if ell != 0:
            raise ValueError("n = 1 has no angular dependence")
        return lambda TH: 1.0
    if n == 2:
        return lambda TH: jets.cos(ell * TH) if ell else 1.0
    if n == 3:
        if ell == 0:
            return lambda TH: 1.0
        if ell == 1:
            return lambda TH: jets.cos(TH)
        if ell == 2:
            return lambda TH: 1.5 * jets.cos(TH) * jets.cos(TH) - 0.5
    raise ValueError(f"no zonal harmonic for n={n}, ell={ell}")


@dataclass(frozen=True)
class TestFunction:
    name: str
    n: int
    radial: Callable
    angular: Callable

    def expr(self, U, V, TH):
        y = self.angular(TH)
        r = self.radial(U, V)
        return r * y if not (isinstance(y, float) and y == 1.0) else r

    def __call__(self, u, v, th=0.0):
        return self.expr(*np.broadcast_arrays(u, v, th))

    def jet(self, u, v, th=0.0, order: int = 2, dtype=float) -> Jet:
        U, V, TH = jets.coords(u, v, th, order, dtype)
        out = self.expr(U, V, TH)
        if not isinstance(out, Jet):
            out = Jet.const(out, U)
        return out


def angular_degrees(n: int):
    return (0,) if n == 1 else (0, 1, 2)


def catalog(n: int) -> list[TestFunction]:
    out = []
    for name, rad in _radial_catalog().items():
        for ell in angular_degrees(n):
            out.append(TestFunction(f"{name}_Y{ell}", n, rad, zonal_harmonic(n, ell)))
    return out


def random_trig(rng: np.random.Generator, n: int) -> TestFunction:
    k1, k2 = rng.uniform(-2.0, 2.0, size=2)
    c = rng.uniform(0.0, 2.0 * np.pi)
    amp = rng.uniform(0.5, 1.5)
    ell = int(rng.choice(angular_degrees(n)))
    rad = lambda U, V: amp * jets.sin(k1 * U + k2 * V + c)
    return TestFunction(f"trig_{k1:.3f}_{k2:.3f}_{c:.3f}_Y{ell}", n, rad, zonal_harmonic(n, ell))


def zero_function(n: int) -> TestFunction:
    return TestFunction("zero", n, lambda U, V: 0.0 * U, zonal_harmonic(n, 0))
