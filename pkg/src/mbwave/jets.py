"""Forward-mode second-order jets in three variables (u, v, theta), vectorized over points.

A Jet carries a value, a gradient (..., 3) and optionally a Hessian (..., 3, 3).
Arithmetic follows the product and chain rules, so closed-form test functions
written with these operations come with exact first and second derivatives.
"""

from __future__ import annotations

import numpy as np

NVAR = 3


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


class Jet:
    __slots__ = ("v", "g", "H")
    __array_ufunc__ = None

    def __init__(self, v, g, H=None):
        self.v = v
        self.g = g
        self.H = H

    @staticmethod
    def const(c, like: "Jet"):
        c = np.broadcast_to(np.asarray(c, dtype=like.v.dtype), like.v.shape)
        g = np.zeros_like(like.g)
        H = None if like.H is None else np.zeros_like(like.H)
        return Jet(c.copy(), g, H)

    @staticmethod
    def variable(x, k: int, order: int = 2):
        x = np.asarray(x)
        g = np.zeros(x.shape + (NVAR,), dtype=x.dtype)
        g[..., k] = 1
        H = np.zeros(x.shape + (NVAR, NVAR), dtype=x.dtype) if order >= 2 else None
        return Jet(x.copy(), g, H)

    def first_order(self) -> "Jet":
        return Jet(self.v, self.g, None)

    def partial(self, k: int) -> "Jet":
        """First-order jet of the k-th partial derivative (needs the Hessian)."""
        if self.H is None:
            raise ValueError("partial() needs a second-order jet")
        return Jet(self.g[..., k], self.H[..., k, :], None)

    def _coerce(self, other):
        return other if isinstance(other, Jet) else Jet.const(other, self)

    def __add__(self, other):
        o = self._coerce(other)
        H = None if self.H is None or o.H is None else self.H + o.H
        return Jet(self.v + o.v, self.g + o.g, H)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.v, -self.g, None if self.H is None else -self.H)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=self.v.dtype)
            return Jet(self.v * c, self.g * c[..., None],
                       None if self.H is None else self.H * c[..., None, None])
        a, b = self, other
        g = a.v[..., None] * b.g + b.v[..., None] * a.g
        H = None
        if a.H is not None and b.H is not None:
            H = (a.v[..., None, None] * b.H + b.v[..., None, None] * a.H
                 + _outer(a.g, b.g) + _outer(b.g, a.g))
        return Jet(a.v * b.v, g, H)

    __rmul__ = __mul__

    def apply(self, f0, f1, f2):
        """Chain rule for a scalar function with value/derivative arrays f0, f1, f2."""
        g = f1[..., None] * self.g
        H = None
        if self.H is not None:
            H = f2[..., None, None] * _outer(self.g, self.g) + f1[..., None, None] * self.H
        return Jet(f0, g, H)

    def reciprocal(self):
        iv = 1 / self.v
        return self.apply(iv, -iv * iv, 2 * iv * iv * iv)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self * (1 / np.asarray(other, dtype=self.v.dtype))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        p = float(p)
        if p == 2.0:
            return self * self
        v = self.v
        return self.apply(v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))


def sqrt(x):
    if not isinstance(x, Jet):
        return np.sqrt(x)
    return x ** 0.5


def exp(x):
    if not isinstance(x, Jet):
        return np.exp(x)
    e = np.exp(x.v)
    return x.apply(e, e, e)


def log(x):
    if not isinstance(x, Jet):
        return np.log(x)
    iv = 1 / x.v
    return x.apply(np.log(x.v), iv, -iv * iv)


def sin(x):
    if not isinstance(x, Jet):
        return np.sin(x)
    s, c = np.sin(x.v), np.cos(x.v)
    return x.apply(s, c, -s)


def cos(x):
    if not isinstance(x, Jet):
        return np.cos(x)
    s, c = np.sin(x.v), np.cos(x.v)
    return x.apply(c, -s, -c)


def coords(u, v, th, order: int = 2, dtype=float):
    """Coordinate jets U, V, TH at the given points."""
    u, v, th = (np.asarray(a, dtype=dtype) for a in np.broadcast_arrays(u, v, th))
    return (Jet.variable(u, 0, order), Jet.variable(v, 1, order), Jet.variable(th, 2, order))
