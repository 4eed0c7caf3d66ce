import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from labelgap.errors import CollinearReference, DegenerateAngle, InvalidTrajectory, ParseError, TooShort
from labelgap.kinematics import (
    MARKERS,
    Trajectory,
    frame_times,
    gaussian_smooth,
    joint_angle,
    read_csv,
    resample,
    speed_profile,
    to_back_frame,
    write_csv,
)

BACK_LOCAL = np.array([[-0.5, 0.0, 0.0], [0.5, 0.0, 0.0], [0.0, 1.0, 0.0]])


def _traj(markers, fs=500.0):
    return Trajectory(frame_times(len(markers), fs), markers, fs)


def _body(n=5, seed=0):
    """Random arm markers with an axis-aligned back frame centred at the origin."""
    rng = np.random.default_rng(seed)
    m = np.zeros((n, 6, 3))
    m[:, :3] = rng.normal(size=(n, 3, 3))
    # centroid of BACK_LOCAL is (0, 1/3, 0); shift so it sits at the origin
    m[:, 3:] = BACK_LOCAL - BACK_LOCAL.mean(axis=0)
    return m


def _rotation(axis, angle):
    axis = np.asarray(axis, float) / np.linalg.norm(axis)
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * K @ K


def test_trajectory_rejects_nonuniform_time():
    m = np.zeros((3, 6, 3))
    with pytest.raises(InvalidTrajectory):
        Trajectory(np.array([0.0, 0.002, 0.005]), m, 500.0)
    with pytest.raises(InvalidTrajectory):
        Trajectory(np.array([0.0]), m[:1], 500.0)


def test_back_frame_identity():
    m = _body()
    m[:, 0] = [1.0, 2.0, 3.0]
    out = to_back_frame(_traj(m))
    np.testing.assert_allclose(out.markers[:, 0], np.tile([1.0, 2.0, 3.0], (5, 1)), atol=1e-12)


def test_back_frame_translation_invariant():
    m = _body()
    a = to_back_frame(_traj(m)).markers
    b = to_back_frame(_traj(m + np.array([5.0, 0.0, 0.0]))).markers
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_back_frame_rotation_about_z():
    m = _body()
    R = _rotation([0, 0, 1], math.pi / 2)
    a = to_back_frame(_traj(m)).markers
    b = to_back_frame(_traj(m @ R.T)).markers
    np.testing.assert_allclose(a, b, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    axis=st.tuples(*[st.floats(-1, 1) for _ in range(3)]).filter(lambda v: np.linalg.norm(v) > 0.1),
    angle=st.floats(-math.pi, math.pi),
    shift=st.tuples(*[st.floats(-10, 10) for _ in range(3)]),
)
def test_back_frame_rigid_invariance(axis, angle, shift):
    m = _body(4, seed=3)
    R = _rotation(axis, angle)
    moved = m @ R.T + np.asarray(shift)
    np.testing.assert_allclose(to_back_frame(_traj(m)).markers, to_back_frame(_traj(moved)).markers, atol=1e-9)


def test_back_frame_collinear():
    m = _body()
    m[:, 5] = [2.0, 0.0 - 1 / 3, 0.0]  # on the line through back1 and back2
    m[:, 3] = [-0.5, -1 / 3, 0.0]
    m[:, 4] = [0.5, -1 / 3, 0.0]
    with pytest.raises(CollinearReference):
        to_back_frame(_traj(m))


def test_speed_constant_position_is_zero():
    m = np.tile(_body(1)[0], (50, 1, 1))
    assert np.all(speed_profile(_traj(m), "hand", 0.025) == 0.0)


def test_speed_linear_motion():
    n, fs = 201, 500.0
    d, T = 0.3, (n - 1) / fs
    m = np.tile(_body(1)[0], (n, 1, 1))
    m[:, 0, 0] = np.linspace(0, d, n)
    s = speed_profile(_traj(m, fs), "hand", 0.0)
    np.testing.assert_allclose(s[1:-1], d / T, rtol=1e-9)
    assert np.all(s >= 0)


def test_speed_min_jerk_peak():
    fs, T, d = 500.0, 1.0, 0.4
    tau = np.linspace(0, 1, int(T * fs) + 1)
    m = np.tile(_body(1)[0], (len(tau), 1, 1))
    m[:, 0, 0] = d * (10 * tau**3 - 15 * tau**4 + 6 * tau**5)
    s = speed_profile(_traj(m, fs), "hand", 0.0)
    assert abs(s.max() - 1.875 * d / T) / (1.875 * d / T) < 0.005


def test_gaussian_smooth_kernel_and_edges():
    x = np.zeros(41)
    x[20] = 1.0
    y = gaussian_smooth(x, 2.0)
    half = math.ceil(3 * 2.0)
    assert np.all(y[20 - half:20 + half + 1] > 0)
    assert np.all(y[:20 - half] == 0) and np.all(y[20 + half + 1:] == 0)
    np.testing.assert_allclose(y.sum(), 1.0, rtol=1e-12)
    # renormalisation keeps constants constant, edges included
    np.testing.assert_allclose(gaussian_smooth(np.full(30, 2.5), 4.0), 2.5, rtol=1e-12)


def test_joint_angle_examples():
    assert joint_angle((1, 0, 0), (0, 0, 0), (-1, 0, 0)) == pytest.approx(math.pi)
    assert joint_angle((1, 0, 0), (0, 0, 0), (0, 1, 0)) == pytest.approx(math.pi / 2)
    assert joint_angle((1, 0, 0), (0, 0, 0), (0.5, math.sqrt(3) / 2, 0)) == pytest.approx(math.pi / 3)
    with pytest.raises(DegenerateAngle):
        joint_angle((0, 0, 0), (0, 0, 0), (1, 0, 0))


vec = st.tuples(*[st.floats(-5, 5) for _ in range(3)]).filter(lambda v: np.linalg.norm(v) > 1e-3)


@settings(max_examples=60, deadline=None)
@given(a=vec, c=vec, sa=st.floats(0.1, 10), sc=st.floats(0.1, 10))
def test_joint_angle_symmetric_and_scale_invariant(a, c, sa, sc):
    b = np.zeros(3)
    ang = joint_angle(a, b, c)
    assert 0.0 <= ang <= math.pi
    assert joint_angle(c, b, a) == pytest.approx(ang, abs=1e-12)
    assert joint_angle(np.multiply(a, sa), b, np.multiply(c, sc)) == pytest.approx(ang, abs=1e-6)


def test_resample_examples():
    np.testing.assert_allclose(resample(np.array([0.0, 1.0]), np.array([0.0, 1.0]), 3), [0.0, 0.5, 1.0])
    t = np.linspace(0, 1, 7)
    v = np.random.default_rng(0).normal(size=(7, 2))
    np.testing.assert_allclose(resample(t, v, 7), v, atol=1e-12)
    np.testing.assert_allclose(resample(t, np.full((7, 3), 4.0), 11), 4.0)
    with pytest.raises(TooShort):
        resample(np.array([0.0]), np.array([1.0]), 5)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=2, max_size=40), st.integers(2, 80))
def test_resample_within_envelope(vals, L):
    t = np.arange(len(vals), dtype=float)
    out = resample(t, np.array(vals), L)
    assert out[0] == vals[0] and out[-1] == vals[-1]
    assert np.all(out >= min(vals) - 1e-9) and np.all(out <= max(vals) + 1e-9)


def test_csv_round_trip(tmp_path):
    m = np.random.default_rng(1).normal(size=(20, 6, 3))
    traj = _traj(m)
    write_csv(tmp_path / "r.csv", traj)
    header = (tmp_path / "r.csv").read_text().splitlines()[0]
    assert header.startswith("t,hand.x,hand.y,hand.z,elbow.x") and header.endswith("back3.z")
    back = read_csv(tmp_path / "r.csv")
    assert np.array_equal(back.markers, traj.markers) and np.array_equal(back.t, traj.t)
    assert len(MARKERS) == 6


def test_csv_parse_error_names_line(tmp_path):
    m = np.zeros((3, 6, 3))
    write_csv(tmp_path / "r.csv", _traj(m))
    lines = (tmp_path / "r.csv").read_text().splitlines()
    lines[2] = lines[2].replace("0", "x", 1)
    (tmp_path / "r.csv").write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as exc:
        read_csv(tmp_path / "r.csv")
    assert exc.value.line == 3 and "r.csv:3" in str(exc.value)
