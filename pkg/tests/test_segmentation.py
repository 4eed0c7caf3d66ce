import numpy as np
import pytest

from labelgap.errors import ParseError, ZeroSignal
from labelgap.kinematics import Trajectory, frame_times
from labelgap.segmentation import (
    Segment,
    SegmentationParams,
    bell_fit,
    bell_shaped,
    detect_boundaries,
    min_jerk_speed_template,
    read_segments,
    segment,
    segment_speed,
    write_segments,
)
from labelgap.synthgen import NOISELESS, ScenarioSpec, generate_recording
from labelgap.vocab import LabelClass

FS = 500.0
TOL = int(0.040 * FS)  # +-40 ms in samples


def _unit_speed(d, T, fs=FS):
    """Analytic min-jerk speed of a move of length d over T seconds."""
    tau = np.linspace(0.0, 1.0, int(round(T * fs)) + 1)
    return d / T * (30 * tau**2 - 60 * tau**3 + 30 * tau**4)


def test_monotonic_speed_has_no_boundaries():
    assert detect_boundaries(np.linspace(0.1, 1.0, 200)) == []


def test_zero_speed_no_boundaries_no_segments():
    assert detect_boundaries(np.zeros(300)) == []
    assert segment_speed(np.zeros(300), FS) == []


def test_two_units_junction_found():
    a, b = _unit_speed(0.3, 0.8), _unit_speed(0.25, 0.6)
    speed = np.concatenate([a, b])
    j = len(a)
    bounds = detect_boundaries(speed, sample_rate=FS)
    assert min(abs(x - j) for x in bounds) <= 1
    segs = segment_speed(speed, FS)
    assert len(segs) == 2
    assert abs(segs[0].start - 0) <= TOL and abs(segs[0].end - j) <= TOL
    assert abs(segs[1].start - j) <= TOL and abs(segs[1].end - len(speed)) <= TOL


def test_single_reach_spans_active_region():
    rest = np.zeros(250)
    speed = np.concatenate([rest, _unit_speed(0.4, 1.0), rest])
    segs = segment_speed(speed, FS)
    assert len(segs) == 1
    active = np.flatnonzero(speed >= SegmentationParams().v_min)
    s = segs[0]
    assert s.start <= active[0] and s.end >= active[-1] + 1
    assert abs(s.start - 250) <= TOL and abs(s.end - (250 + 501)) <= TOL
    assert s.provenance == "trajectory" and s.label is None and bell_shaped(s)


def test_short_fragment_merged_not_kept():
    # a brief blip right after a unit is absorbed rather than becoming a unit
    unit = _unit_speed(0.3, 0.8)
    blip = 0.3 * _unit_speed(0.01, 0.04)[1:]
    speed = np.concatenate([np.zeros(100), unit, blip + 0.06, np.zeros(200)])
    segs = segment_speed(speed, FS)
    min_len = SegmentationParams().min_duration * FS
    assert all(len(s) >= min_len for s in segs)
    assert len(segs) == 1


def test_noiseless_recording_eight_units():
    traj, truth = generate_recording(ScenarioSpec(noise=NOISELESS, seed=3))
    segs = segment(traj)
    assert len(segs) == 8
    for s, t in zip(segs, truth):
        assert abs(s.start - t.start) <= TOL and abs(s.end - t.end) <= TOL
        assert bell_shaped(s)


def test_pure_rest_recording():
    traj, _ = generate_recording(ScenarioSpec(noise=NOISELESS, seed=3))
    still = np.repeat(traj.markers[:1], 800, axis=0)
    assert segment(Trajectory(frame_times(800, FS), still, FS)) == []


def test_bell_fit_exact_template():
    d, T = 0.3, 0.7
    s = _unit_speed(d, T)
    amp, nrmse = bell_fit(s)
    assert s.max() == pytest.approx(1.875 * d / T, rel=1e-3)
    assert nrmse < 0.02
    assert amp == pytest.approx(d / T, rel=1e-9)


def test_bell_fit_constant():
    c, L = 0.7, 50
    g = min_jerk_speed_template(L)
    amp, nrmse = bell_fit(np.full(L, c))
    assert amp == pytest.approx(c * g.sum() / np.dot(g, g), rel=1e-12)
    assert nrmse > 0.2


def test_bell_fit_scaling():
    s = _unit_speed(0.2, 0.5) + 0.01 * np.sin(np.arange(251))
    a1, n1 = bell_fit(s)
    a3, n3 = bell_fit(3 * s)
    assert a3 == pytest.approx(3 * a1, rel=1e-12)
    assert abs(n3 - n1) < 1e-9


def test_bell_fit_errors():
    with pytest.raises(ZeroSignal):
        bell_fit(np.zeros(10))
    with pytest.raises(ValueError):
        bell_fit([1.0, 2.0])


def test_bell_shaped_threshold():
    p = SegmentationParams(bell_nrmse_max=0.2)
    assert bell_shaped(Segment(0, 10, nrmse=0.2, provenance="trajectory"), p)
    assert not bell_shaped(Segment(0, 10, nrmse=0.21, provenance="trajectory"), p)
    assert not bell_shaped(Segment(0, 10), p)


def test_params_validation():
    with pytest.raises(ValueError):
        SegmentationParams(v_min=0)
    with pytest.raises(ValueError):
        SegmentationParams(prominence=1.0)


def test_segment_jsonl_round_trip(tmp_path):
    segs = [
        Segment(0, 120, LabelClass(0), "truth"),
        Segment(130, 400, None, "trajectory", 0.0375),
        Segment(410, 700, LabelClass(7), "video"),
    ]
    write_segments(tmp_path / "s.jsonl", segs)
    assert read_segments(tmp_path / "s.jsonl") == segs
    write_segments(tmp_path / "e.jsonl", [])
    assert (tmp_path / "e.jsonl").read_text() == ""
    assert read_segments(tmp_path / "e.jsonl") == []


def test_segment_jsonl_malformed_line(tmp_path):
    p = tmp_path / "s.jsonl"
    write_segments(p, [Segment(0, 10), Segment(10, 20)])
    p.write_text(p.read_text() + '{"start": 30, "end": 20}\n')
    with pytest.raises(ParseError) as exc:
        read_segments(p)
    assert exc.value.line == 3 and "s.jsonl:3" in str(exc.value)
