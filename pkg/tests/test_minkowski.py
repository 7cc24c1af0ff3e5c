import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mbwave.minkowski import (Chronology, chronological_relation, cone_frame, cone_frame_uv,
                              in_cone_exterior, null_coords, point)

coord = st.floats(-50, 50, allow_nan=False)


def test_null_coords_example():
    c = null_coords(point(3, 4), point(0, 0))
    assert (c.r, c.u, c.v, c.f) == (4.0, -0.5, 3.5, 1.75)


def test_null_coords_coincident():
    c = null_coords(point(1, 2, 3), point(1, 2, 3))
    assert (c.r, c.u, c.v, c.f) == (0.0, 0.0, 0.0, 0.0)


def test_null_coords_symmetric_slice():
    c = null_coords(point(0, 2), point(0, 0))
    assert (c.u, c.v, c.f) == (-1.0, 1.0, 1.0)


def test_point_validation():
    with pytest.raises(ValueError):
        point(np.inf, 0.0)
    with pytest.raises(ValueError):
        null_coords(point(0, 1), point(0, 1, 2))


def test_cone_exterior_examples():
    o = point(0, 0)
    assert in_cone_exterior(point(0, 2), o)
    assert not in_cone_exterior(point(2, 0), o)
    assert not in_cone_exterior(point(1, 1), o)


def test_chronology_examples():
    o = point(0, 0)
    assert chronological_relation(point(2, 0.5), o) is Chronology.FUTURE
    assert chronological_relation(point(-2, 0.5), o) is Chronology.PAST
    assert chronological_relation(point(1, 5), o) is Chronology.NONE


def test_cone_frame_examples():
    fr = cone_frame_uv(-1.0, 1.0)
    assert fr.T == pytest.approx((0.5, 0.5)) and fr.N == pytest.approx((-0.5, 0.5))
    fr = cone_frame_uv(-4.0, 1.0)
    assert fr.T == pytest.approx((1.0, 0.25)) and fr.N == pytest.approx((-1.0, 0.25))
    with pytest.raises(ValueError):
        cone_frame(point(2, 0), point(0, 0))


@given(coord, coord, coord, coord, coord, coord)
def test_exterior_bounds(t, x, y, t0, x0, y0):
    c = null_coords(point(t, x, y), point(t0, x0, y0))
    if c.f > 1e-9 * max(1.0, c.r * c.r):
        assert 0 < -c.u < c.r and 0 < c.v < c.r and 0 < c.f < c.r * c.r


@given(coord, coord, coord, coord, coord, coord)
def test_translation_invariance(t, x, t0, x0, a, b):
    c1 = null_coords(point(t, x), point(t0, x0))
    c2 = null_coords(point(t + a, x + b), point(t0 + a, x0 + b))
    assert c2.f == pytest.approx(c1.f, rel=1e-9, abs=1e-9 * (1 + abs(a) + abs(b)) ** 2)


@given(coord, coord, coord, coord)
def test_reconstruction(t, x, t0, x0):
    c = null_coords(point(t, x), point(t0, x0))
    assert abs((c.u + c.v) - c.t_P) <= 2 * np.spacing(max(abs(c.t_P), c.r, 1e-300)) * 2
    assert abs((c.v - c.u) - c.r) <= 2 * np.spacing(max(abs(c.t_P), c.r, 1e-300)) * 2
    assert c.f == -c.u * c.v


@given(st.floats(-10, -1e-3), st.floats(1e-3, 10))
def test_frame_tangent_kills_f(u, v):
    fr = cone_frame_uv(u, v)
    # f = -uv: df = (-v, -u)
    assert abs(fr.T[0] * (-v) + fr.T[1] * (-u)) <= 1e-12 * (abs(u) + abs(v)) * max(abs(fr.T[0]), abs(fr.T[1]))
