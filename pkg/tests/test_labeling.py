import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from labelgap.labeling import VideoLabelParams, iou, trajectory_labels, video_labels
from labelgap.segmentation import Segment
from labelgap.vocab import LabelClass, SpeedClass

A, B, C = LabelClass(1), LabelClass(4), LabelClass(6)


def _truth():
    return [Segment(100, 400, A), Segment(450, 700, B), Segment(760, 1000, C)]


def test_iou_values():
    assert iou(Segment(0, 10), Segment(0, 10)) == 1.0
    assert iou(Segment(0, 10), Segment(10, 20)) == 0.0
    assert iou(Segment(0, 10), Segment(5, 15)) == pytest.approx(5 / 15)


def test_trajectory_labels_identity():
    truth = _truth()
    detected = [Segment(s.start, s.end, None, "trajectory") for s in truth]
    out = trajectory_labels(detected, truth)
    assert [(s.start, s.end, s.label) for s in out] == [(s.start, s.end, s.label) for s in truth]
    assert all(s.provenance == "trajectory" for s in out)


def test_trajectory_labels_majority_overlap():
    # detected [100, 200): 70% of it lies in A, 20% in B
    d = Segment(100, 200, None, "trajectory")
    truth = [Segment(100, 170, A), Segment(180, 230, B)]
    assert iou(d, truth[0]) == pytest.approx(0.7) and iou(d, truth[1]) == pytest.approx(20 / 130)
    out = trajectory_labels([d], truth)
    assert len(out) == 1 and out[0].label == A and (out[0].start, out[0].end) == (100, 200)


def test_trajectory_labels_low_overlap_dropped():
    truth = [Segment(70, 100, A)]
    d = Segment(0, 100, None, "trajectory")
    assert iou(d, truth[0]) == pytest.approx(0.3)
    assert trajectory_labels([d], truth) == []


def test_video_identity_limit():
    p = VideoLabelParams(fps=500.0, jitter_std={s: 0.0 for s in SpeedClass}, seed=3)
    out = video_labels(_truth(), p, "fast", 500.0)
    assert [(s.start, s.end, s.label) for s in out] == [(s.start, s.end, s.label) for s in _truth()]
    assert all(s.provenance == "video" for s in out)


def test_video_frame_snapping():
    p = VideoLabelParams(fps=30.0, jitter_std={s: 0.0 for s in SpeedClass})
    out = video_labels([Segment(515, 1000, A)], p, "slow", 500.0)
    # 1.03 s lands on video frame 31, i.e. 31/30 s
    assert out[0].start == round(31 / 30 * 500)
    assert out[0].end == 1000  # 2.0 s is already on the frame grid


def test_video_seed_determinism():
    p = VideoLabelParams(seed=11)
    a = video_labels(_truth(), p, "normal", 500.0)
    assert a == video_labels(_truth(), p, "normal", 500.0)
    assert a != video_labels(_truth(), p.with_seed(12), "normal", 500.0)


def test_video_params_validation():
    with pytest.raises(ValueError):
        VideoLabelParams(fps=0)
    with pytest.raises(ValueError):
        VideoLabelParams(jitter_std={"slow": -0.1})


@st.composite
def _truth_lists(draw):
    n = draw(st.integers(1, 8))
    gaps = draw(st.lists(st.integers(0, 300), min_size=n, max_size=n))
    lens = draw(st.lists(st.integers(1, 400), min_size=n, max_size=n))
    out, t = [], 0
    for g, ln in zip(gaps, lens):
        t += g
        out.append(Segment(t, t + ln, LabelClass(draw(st.integers(0, 7)))))
        t += ln
    return out


@settings(max_examples=80, deadline=None)
@given(
    truth=_truth_lists(),
    fps=st.sampled_from([10.0, 25.0, 30.0, 60.0, 500.0]),
    jitter=st.floats(0.0, 1.0),
    speed=st.sampled_from(list(SpeedClass)),
    seed=st.integers(0, 2**32),
)
def test_video_clamping_contract(truth, fps, jitter, speed, seed):
    p = VideoLabelParams(fps, {s: jitter for s in SpeedClass}, seed)
    n_frames = truth[-1].end + 50
    out = video_labels(truth, p, speed, 500.0, n_frames)
    b = np.array([[s.start, s.end] for s in out]).ravel()
    assert np.all(np.diff(b) > 0)
    assert all(len(s) >= 2 for s in out)
    assert b[0] >= 0 and b[-1] <= n_frames
    assert [s.label for s in out] == [s.label for s in truth]
