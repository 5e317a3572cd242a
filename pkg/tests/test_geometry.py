import numpy as np
import pytest
from hypothesis import given, strategies as st

from nfisac.errors import GeometryError
from nfisac.geometry import ArrayGeometry, angle_between, build_upa, rayleigh_distance

finite = st.floats(-10, 10, allow_nan=False)
vec = st.tuples(finite, finite, finite).filter(lambda v: np.linalg.norm(v) > 1e-3)


def test_upa_10x10_half_wavelength():
    arr = build_upa(10, 10, 0.005)
    assert arr.n_elements == 100
    assert np.allclose(arr.elements[:, 2], 0.0)
    assert np.allclose(arr.elements[:, :2].min(axis=0), -0.0225)
    assert np.allclose(arr.elements[:, :2].max(axis=0), 0.0225)
    # the element-grid diagonal, 0.045 * sqrt(2)
    assert arr.aperture == pytest.approx(0.045 * np.sqrt(2), rel=1e-12)
    assert np.allclose(arr.center, 0.0, atol=1e-12)


def test_row_major_order():
    arr = build_upa(2, 3, 1.0)
    # columns run along x, rows along normal x axis = y
    assert np.allclose(arr.elements[1] - arr.elements[0], [1, 0, 0])
    assert np.allclose(arr.elements[3] - arr.elements[0], [0, 1, 0])


def test_single_element_and_pair():
    one = build_upa(1, 1, 0.01, center=(1, 2, 3))
    assert one.n_elements == 1 and one.aperture == 0.0
    assert np.allclose(one.elements[0], [1, 2, 3])
    two = build_upa(2, 1, 0.01)
    assert two.aperture == pytest.approx(0.01)


def test_offset_center_and_normal():
    arr = build_upa(4, 5, 0.1, center=(0, 0.06, 0), normal=(0, 0, 2))
    assert np.allclose(arr.center, [0, 0.06, 0], atol=1e-9)
    assert np.linalg.norm(arr.normal) == pytest.approx(1.0, abs=1e-12)


def test_degenerate_axes():
    with pytest.raises(GeometryError):
        build_upa(2, 2, 0.01, normal=(1, 0, 0), in_plane_axis=(2, 0, 0))
    with pytest.raises(GeometryError):
        build_upa(0, 2, 0.01)
    with pytest.raises(GeometryError):
        build_upa(2, 2, -1.0)


def test_geometry_is_immutable():
    arr = build_upa(2, 2, 0.01)
    with pytest.raises(ValueError):
        arr.elements[0, 0] = 1.0


def test_geometry_validation():
    with pytest.raises(GeometryError):
        ArrayGeometry(np.zeros((0, 3)), np.array([0, 0, 1.0]))
    with pytest.raises(GeometryError):
        ArrayGeometry(np.zeros((1, 3)), np.array([0, 0, 2.0]))


def test_rayleigh_distance():
    assert rayleigh_distance(0.071, 0.01) == pytest.approx(1.0082, abs=1e-12)
    assert rayleigh_distance(0.0, 0.01) == 0.0
    assert rayleigh_distance(0.1, 0.01) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        rayleigh_distance(0.1, 0.0)
    with pytest.raises(ValueError):
        rayleigh_distance(-0.1, 0.01)


@given(st.floats(0.001, 1), st.floats(0.001, 1), st.floats(0.001, 0.1))
def test_rayleigh_monotone(d1, d2, lam):
    lo, hi = sorted((d1, d2))
    assert rayleigh_distance(lo, lam) <= rayleigh_distance(hi, lam)
    assert rayleigh_distance(hi, lam) >= rayleigh_distance(hi, 2 * lam)


def test_angle_examples():
    w = np.array([0, 0, 1.0])
    assert angle_between(w, w) == pytest.approx(0.0)
    assert angle_between([1, 0, 0], w) == pytest.approx(np.pi / 2)
    assert angle_between([0, 1, 1], w) == pytest.approx(np.pi / 4)
    assert angle_between(-w, w) == pytest.approx(np.pi)
    with pytest.raises(ValueError):
        angle_between([0, 0, 0], w)


@given(vec, vec, st.floats(0.01, 100), st.floats(0.01, 100))
def test_angle_symmetric_and_scale_invariant(p, w, a, b):
    p, w = np.array(p), np.array(w)
    ref = angle_between(p, w)
    assert 0.0 <= ref <= np.pi
    assert angle_between(w, p) == pytest.approx(ref, abs=1e-9)
    assert angle_between(a * p, b * w) == pytest.approx(ref, abs=1e-7)
