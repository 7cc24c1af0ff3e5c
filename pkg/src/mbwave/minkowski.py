"""Pointwise Minkowski geometry relative to a center point, in 1+n dimensions."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


@dataclass(frozen=True)
class SpacetimePoint:
    """An event (t, x) with x a spatial vector of length n >= 1."""

    t: float
    x: tuple

    def __post_init__(self):
        x = tuple(float(c) for c in np.atleast_1d(self.x))
        if len(x) < 1:
            raise ValueError("spatial dimension must be >= 1")
        if not (np.isfinite(self.t) and all(np.isfinite(x))):
            raise ValueError("point components must be finite")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return len(self.x)


def point(t, *x) -> SpacetimePoint:
    """Shorthand constructor: point(t, x1, ..., xn)."""
    return SpacetimePoint(t, x)


@dataclass(frozen=True)
class NullCoords:
    """Shifted radius, null coordinates and hyperbolic function about a center."""

    r: float
    u: float
    v: float
    f: float
    t_P: float
    x_P: tuple


@dataclass(frozen=True)
class ConeFrame:
    """Coefficients of T and N in the (d_u, d_v) basis."""

    T: tuple
    N: tuple


class Chronology(str, Enum):
    FUTURE = "future"
    PAST = "past"
    NONE = "none"


def null_coords(p: SpacetimePoint, center: SpacetimePoint) -> NullCoords:
    if p.n != center.n:
        raise ValueError("dimension mismatch between point and center")
    x_P = tuple(a - b for a, b in zip(p.x, center.x))
    t_P = p.t - center.t
    r = float(np.sqrt(sum(c * c for c in x_P)))
    u = 0.5 * (t_P - r)
    v = 0.5 * (t_P + r)
    return NullCoords(r=r, u=u, v=v, f=-u * v, t_P=t_P, x_P=x_P)


def null_coords_arrays(t, x, t0=0.0, x0=0.0):
    """Vectorized (r, u, v, f) for 1D or radial data; x may be an (..., n) array."""
    t_P = np.asarray(t, dtype=float) - t0
    x_P = np.asarray(x, dtype=float) - np.asarray(x0, dtype=float)
    r = np.abs(x_P) if x_P.ndim == t_P.ndim else np.linalg.norm(x_P, axis=-1)
    u = 0.5 * (t_P - r)
    v = 0.5 * (t_P + r)
    return r, u, v, -u * v


def in_cone_exterior(p: SpacetimePoint, center: SpacetimePoint) -> bool:
    return null_coords(p, center).f > 0.0


def chronological_relation(p: SpacetimePoint, q: SpacetimePoint) -> Chronology:
    """Relation of p to q: future if p lies in the open future cone of q."""
    c = null_coords(p, q)
    if c.f < 0.0:
        return Chronology.FUTURE if c.t_P > 0.0 else Chronology.PAST
    return Chronology.NONE


def cone_frame_uv(u: float, v: float) -> ConeFrame:
    f = -u * v
    if not f > 0.0:
        raise ValueError("cone frame requires f > 0 (point outside the null cone)")
    s = 0.5 / np.sqrt(f)
    return ConeFrame(T=(-s * u, s * v), N=(s * u, s * v))


def cone_frame(p: SpacetimePoint, center: SpacetimePoint) -> ConeFrame:
    c = null_coords(p, center)
    return cone_frame_uv(c.u, c.v)


def apply_uv(coeffs, du: float, dv: float) -> float:
    """Apply a (c_u, c_v) vector to a function with partials (du, dv)."""
    return coeffs[0] * du + coeffs[1] * dv
