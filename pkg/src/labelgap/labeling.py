"""The two ways of attaching class labels to movement units.

Trajectory labeling keeps the boundaries found by automatic segmentation
and takes each unit's class from the ground-truth unit it overlaps most
(standing in for an annotator correcting the automatic result).  Video
labeling reads boundaries off a video: every true boundary is shifted by a
human timing error and snapped to the video frame grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .segmentation import Segment
from .vocab import SpeedClass

IOU_THRESHOLD = 0.5
MIN_FRAMES = 2


def _default_jitter():
    # timing error grows with movement speed; magnitudes set so that video
    # labels lose roughly 10-25 points of fast-test accuracy
    return {SpeedClass.slow: 0.12, SpeedClass.normal: 0.18, SpeedClass.fast: 0.36}


@dataclass(frozen=True)
class VideoLabelParams:
    fps: float = 30.0
    jitter_std: dict = field(default_factory=_default_jitter)
    seed: int = 0

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        jit = {SpeedClass(k): float(v) for k, v in self.jitter_std.items()}
        if any(v < 0 for v in jit.values()):
            raise ValueError("jitter_std must be non-negative")
        object.__setattr__(self, "jitter_std", jit)

    def with_seed(self, seed: int) -> "VideoLabelParams":
        return VideoLabelParams(self.fps, dict(self.jitter_std), seed)


def iou(a: Segment, b: Segment) -> float:
    inter = min(a.end, b.end) - max(a.start, b.start)
    if inter <= 0:
        return 0.0
    return inter / (max(a.end, b.end) - min(a.start, b.start))


def trajectory_labels(detected, truth, threshold: float = IOU_THRESHOLD) -> list[Segment]:
    """Label detected segments by their best-overlapping truth segment.

    Detected segments whose best IoU does not exceed ``threshold`` are
    dropped; boundaries are kept as detected.
    """
    out = []
    j0 = 0
    for seg in detected:
        while j0 < len(truth) and truth[j0].end <= seg.start:
            j0 += 1
        best, best_iou = None, 0.0
        j = j0
        while j < len(truth) and truth[j].start < seg.end:
            v = iou(seg, truth[j])
            if v > best_iou:
                best, best_iou = truth[j], v
            j += 1
        if best is not None and best_iou > threshold:
            out.append(Segment(seg.start, seg.end, best.label, "trajectory", seg.nrmse))
    return out


def video_labels(truth, params: VideoLabelParams, speed, sample_rate: float, n_frames: int | None = None) -> list[Segment]:
    """Simulate boundaries read off a ``params.fps`` video by a human labeler.

    Each boundary time gets Gaussian timing error with the speed's
    ``jitter_std``, is rounded to the nearest video frame, and mapped back to
    the motion-capture frame grid.  Boundaries are then re-sorted and pushed
    apart so that they strictly increase and each segment keeps at least two
    frames.
    """
    if not truth:
        return []
    speed = SpeedClass(speed)
    std = params.jitter_std[speed]
    rng = np.random.default_rng(params.seed)
    times = np.array([[s.start, s.end] for s in truth], dtype=float).ravel() / sample_rate
    eps = rng.normal(0.0, std, len(times)) if std > 0 else np.zeros(len(times))
    snapped = np.round((times + eps) * params.fps) / params.fps
    b = np.sort(np.round(snapped * sample_rate).astype(np.int64))
    gaps = np.tile([MIN_FRAMES, 1], len(truth))  # gaps[k] = minimum b[k+1] - b[k]
    b[0] = max(b[0], 0)
    for k in range(1, len(b)):
        b[k] = max(b[k], b[k - 1] + gaps[k - 1])
    if n_frames is not None and b[-1] > n_frames:
        b[-1] = n_frames
        for k in range(len(b) - 2, -1, -1):
            b[k] = min(b[k], b[k + 1] - gaps[k])
        if b[0] < 0:
            raise ValueError("recording too short to hold the labeled segments")
    return [
        Segment(int(b[2 * i]), int(b[2 * i + 1]), seg.label, "video")
        for i, seg in enumerate(truth)
    ]
