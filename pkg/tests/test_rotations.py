import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rodmech import rotations as rot
from rodmech.checks import quat_from_rodrigues, quat_mul, rodrigues_from_quat
from rodmech.errors import AngleOutOfRange, CompositionSingular, NotAntisymmetric

TAN_3PI_8 = 2 * np.tan(3 * np.pi / 8)

vec = arrays(np.float64, 3, elements=st.floats(-10, 10, allow_nan=False))


@st.composite
def euler(draw, max_angle=np.pi - 0.05):
    axis = draw(arrays(np.float64, 3, elements=st.floats(-1, 1)).filter(lambda a: np.linalg.norm(a) > 1e-3))
    angle = draw(st.floats(0, max_angle))
    return angle * axis / np.linalg.norm(axis)


def assert_rotation(R, tol=1e-12):
    np.testing.assert_allclose(R @ R.T, np.eye(3), atol=tol)
    assert abs(np.linalg.det(R) - 1) < tol


# --- frozen examples


def test_skew_examples():
    np.testing.assert_array_equal(rot.skew([0, 0, 0]), np.zeros((3, 3)))
    np.testing.assert_array_equal(rot.skew([2, 0, 0]), [[0, 0, 0], [0, 0, -2], [0, 2, 0]])


def test_unskew_examples():
    np.testing.assert_array_equal(rot.unskew(np.zeros((3, 3))), [0, 0, 0])
    np.testing.assert_array_equal(rot.unskew([[0, 0, 0], [0, 0, -2], [0, 2, 0]]), [2, 0, 0])
    with pytest.raises(NotAntisymmetric):
        rot.unskew(np.eye(3))


def test_rodrigues_from_euler_examples():
    np.testing.assert_array_equal(rot.rodrigues_from_euler([0, 0, 0]), [0, 0, 0])
    np.testing.assert_allclose(rot.rodrigues_from_euler([np.pi / 2, 0, 0]), [2, 0, 0], rtol=1e-15)
    np.testing.assert_allclose(rot.rodrigues_from_euler([0, 3 * np.pi / 4, 0]), [0, 4.828427124746190, 0], rtol=1e-14)


def test_rodrigues_from_euler_rejects_half_turn():
    with pytest.raises(AngleOutOfRange):
        rot.rodrigues_from_euler([np.pi, 0, 0])


def test_euler_from_rodrigues_examples():
    np.testing.assert_array_equal(rot.euler_from_rodrigues([0, 0, 0]), [0, 0, 0])
    np.testing.assert_allclose(rot.euler_from_rodrigues([2, 0, 0]), [np.pi / 2, 0, 0], rtol=1e-15)
    np.testing.assert_allclose(rot.euler_from_rodrigues([0, TAN_3PI_8, 0]), [0, 3 * np.pi / 4, 0], rtol=1e-15)


def test_rotation_from_rodrigues_examples():
    np.testing.assert_array_equal(rot.rotation_from_rodrigues([0, 0, 0]), np.eye(3))
    np.testing.assert_allclose(rot.rotation_from_rodrigues([2, 0, 0]), [[1, 0, 0], [0, 0, -1], [0, 1, 0]], atol=1e-15)


def test_compose_examples():
    a = np.array([0.3, -1.2, 0.7])
    np.testing.assert_array_equal(rot.compose(a, [0, 0, 0]), a)
    np.testing.assert_array_equal(rot.compose([0, 0, 0], a), a)
    np.testing.assert_allclose(rot.compose(a, -a), [0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(rot.compose([2, 0, 0], [0, 2, 0]), [2, 2, -2], rtol=1e-15)


def test_compose_singular():
    # a.b = 4 exactly: composed angle is a half turn
    with pytest.raises(CompositionSingular):
        rot.compose([2, 0, 0], [2, 0, 0])


def test_compose_past_half_turn_flips_axis():
    # 120 deg + 120 deg about x = 240 deg = -120 deg
    a = rot.rodrigues_from_euler([2 * np.pi / 3, 0, 0])
    np.testing.assert_allclose(rot.compose(a, a), -a, rtol=1e-14)


def test_invert_examples():
    np.testing.assert_array_equal(rot.invert([0, 0, 0]), [0, 0, 0])
    np.testing.assert_array_equal(rot.invert([2, 0, 0]), [-2, 0, 0])


def test_relative_rotation_examples():
    a = np.array([0.4, 0.1, -2.0])
    np.testing.assert_allclose(rot.relative_rotation(a, a), [0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(rot.relative_rotation([2, 0, 0], [0, 0, 0]), [2, 0, 0])


def test_rotation_metric_examples():
    assert rot.rotation_metric([0, 0, 0]) == 0
    assert rot.rotation_metric([2, 0, 0]) == pytest.approx(np.pi / 2, rel=1e-15)
    assert rot.rotation_metric([0, TAN_3PI_8, 0]) == pytest.approx(3 * np.pi / 4, rel=1e-15)


def test_broadcasting_rows():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(5, 3))
    b = 0.3 * rng.normal(size=(5, 3))
    c = rot.compose(a, b)
    for k in range(5):
        np.testing.assert_array_equal(c[k], rot.compose(a[k], b[k]))


# --- properties


@given(vec, vec)
def test_skew_is_cross(v, w):
    np.testing.assert_allclose(rot.skew(v) @ w, np.cross(v, w), atol=1e-12)
    np.testing.assert_array_equal(rot.unskew(rot.skew(v)), v)


@given(euler())
def test_euler_round_trip(theta):
    np.testing.assert_allclose(rot.euler_from_rodrigues(rot.rodrigues_from_euler(theta)), theta, atol=1e-12)


@given(euler(max_angle=1e-3))
def test_small_angle_limit(theta):
    a = rot.rodrigues_from_euler(theta)
    np.testing.assert_allclose(a, theta, atol=1e-9)


@given(vec)
def test_rotation_matrix_valid(a):
    R = rot.rotation_from_rodrigues(a)
    assert_rotation(R)
    # axis is fixed and the angle matches the metric
    np.testing.assert_allclose(R @ a, a, atol=1e-12 * max(1, np.linalg.norm(a)))
    cos_angle = (np.trace(R) - 1) / 2
    assert np.arccos(np.clip(cos_angle, -1, 1)) == pytest.approx(rot.rotation_metric(a), abs=1e-7)


@given(vec, vec)
def test_rotate_matches_matrix(a, v):
    np.testing.assert_allclose(rot.rotate(a, v), rot.rotation_from_rodrigues(a) @ v, atol=1e-12 * (1 + np.linalg.norm(v)))


@settings(max_examples=200)
@given(euler(), euler())
def test_compose_matches_matrix_and_quaternion(ta, tb):
    a = rot.rodrigues_from_euler(ta)
    b = rot.rodrigues_from_euler(tb)
    if abs(4 - a @ b) < 1e-3:
        return
    c = rot.compose(a, b)
    np.testing.assert_allclose(
        rot.rotation_from_rodrigues(c), rot.rotation_from_rodrigues(b) @ rot.rotation_from_rodrigues(a), atol=1e-10
    )
    q = quat_mul(quat_from_rodrigues(b), quat_from_rodrigues(a))
    np.testing.assert_allclose(c, rodrigues_from_quat(q), rtol=1e-8, atol=1e-10)


@given(vec)
def test_invert_is_transpose(a):
    np.testing.assert_allclose(rot.rotation_from_rodrigues(rot.invert(a)), rot.rotation_from_rodrigues(a).T, atol=1e-15)


@given(euler(max_angle=1.4), euler(max_angle=1.4))
def test_relative_rotation_identity(ti, tj):
    ai = rot.rodrigues_from_euler(ti)
    aj = rot.rodrigues_from_euler(tj)
    Ri = rot.rotation_from_rodrigues(ai)
    Rj = rot.rotation_from_rodrigues(aj)
    np.testing.assert_allclose(rot.rotation_from_rodrigues(rot.relative_rotation(ai, aj)), Ri @ Rj.T, atol=1e-12)
