"""Fixed-size feature matrices for labeled movement units.

Per frame the channels are (in this order, when enabled):

=================  =====  ==========================================
group              width  content
=================  =====  ==========================================
hand_pos           3      hand position in the back frame
elbow_pos          3      elbow position
shoulder_pos       3      shoulder position
hand_vel           3      hand velocity (central differences)
forearm_dir        3      unit vector from elbow to hand
elbow_angle        1      angle hand-elbow-shoulder
shoulder_angle     1      angle elbow-shoulder-back centroid
=================  =====  ==========================================

Every channel is linearly resampled to a common length, then min-max
normalised with ranges fitted on training data only.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSegment, EmptyTrainingSet, ParseError
from .kinematics import BACK, ELBOW, HAND, SHOULDER, Trajectory, joint_angles, resample, velocity
from .segmentation import Segment
from .vocab import LabelClass

CHANNEL_GROUPS = {
    "hand_pos": 3,
    "elbow_pos": 3,
    "shoulder_pos": 3,
    "hand_vel": 3,
    "forearm_dir": 3,
    "elbow_angle": 1,
    "shoulder_angle": 1,
}


@dataclass(frozen=True)
class FeatureConfig:
    length: int = 50
    channels: tuple = tuple(CHANNEL_GROUPS)

    def __post_init__(self):
        if self.length < 2:
            raise ValueError("resample length must be >= 2")
        unknown = [c for c in self.channels if c not in CHANNEL_GROUPS]
        if unknown or not self.channels:
            raise ValueError(f"unknown or empty channel selection: {unknown}")
        # canonical order regardless of how the selection was written
        object.__setattr__(self, "channels", tuple(c for c in CHANNEL_GROUPS if c in self.channels))

    @property
    def width(self) -> int:
        return sum(CHANNEL_GROUPS[c] for c in self.channels)


@dataclass
class FeatureMatrix:
    values: np.ndarray
    label: LabelClass | None = None


def _channels(traj: Trajectory, cfg: FeatureConfig, hand_vel: np.ndarray, lo: int, hi: int) -> np.ndarray:
    m = traj.markers[lo:hi]
    hand, elbow, shoulder = m[:, HAND], m[:, ELBOW], m[:, SHOULDER]
    cols = []
    for name in cfg.channels:
        if name == "hand_pos":
            cols.append(hand)
        elif name == "elbow_pos":
            cols.append(elbow)
        elif name == "shoulder_pos":
            cols.append(shoulder)
        elif name == "hand_vel":
            cols.append(hand_vel[lo:hi])
        elif name == "forearm_dir":
            d = hand - elbow
            cols.append(d / np.linalg.norm(d, axis=1, keepdims=True))
        elif name == "elbow_angle":
            cols.append(joint_angles(hand, elbow, shoulder)[:, None])
        elif name == "shoulder_angle":
            centroid = m[:, BACK].mean(axis=1)
            cols.append(joint_angles(elbow, shoulder, centroid)[:, None])
    return np.concatenate(cols, axis=1)


def extract(traj: Trajectory, seg: Segment, cfg: FeatureConfig | None = None, hand_vel: np.ndarray | None = None) -> FeatureMatrix:
    """Raw (unnormalised) ``length x width`` features of one segment.

    ``traj`` must already be in the back frame.  ``hand_vel`` may be passed
    to reuse a velocity computed once for the whole recording.
    """
    cfg = cfg or FeatureConfig()
    if seg.end > len(traj) or seg.end - seg.start < 2:
        raise DegenerateSegment(f"segment [{seg.start}, {seg.end}) unusable for a {len(traj)}-frame recording")
    if hand_vel is None:
        hand_vel = velocity(traj, "hand")
    raw = _channels(traj, cfg, hand_vel, seg.start, seg.end)
    return FeatureMatrix(resample(traj.t[seg.start:seg.end], raw, cfg.length), seg.label)


def extract_all(traj: Trajectory, segments, cfg: FeatureConfig | None = None) -> list[FeatureMatrix]:
    vel = velocity(traj, "hand")
    return [extract(traj, s, cfg, vel) for s in segments]


@dataclass(frozen=True)
class Normalizer:
    mins: np.ndarray
    maxs: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Scale raw values (..., width) into [0, 1] per channel."""
        span = self.maxs - self.mins
        flat = span == 0
        safe = np.where(flat, 1.0, span)
        out = np.clip((values - self.mins) / safe, 0.0, 1.0)
        return np.where(flat, 0.5, out)

    def to_dict(self) -> dict:
        return {"mins": self.mins.tolist(), "maxs": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d) -> "Normalizer":
        return cls(np.asarray(d["mins"], dtype=float), np.asarray(d["maxs"], dtype=float))


def fit_normalizer(train) -> Normalizer:
    """Per-channel min/max over a list of FeatureMatrix or an (n, L, D) array."""
    arr = _stack(train)
    if arr.shape[0] == 0:
        raise EmptyTrainingSet("cannot fit a normalizer on an empty training set")
    return Normalizer(arr.min(axis=(0, 1)), arr.max(axis=(0, 1)))


def apply(normalizer: Normalizer, m: FeatureMatrix) -> FeatureMatrix:
    return FeatureMatrix(normalizer.apply(m.values), m.label)


def _stack(items) -> np.ndarray:
    if isinstance(items, np.ndarray):
        return items
    items = list(items)
    if not items:
        return np.empty((0, 0, 0))
    return np.stack([m.values for m in items])


def flatten(m) -> np.ndarray:
    """Time-major concatenation: row 0 channels, then row 1, ..."""
    values = m.values if isinstance(m, FeatureMatrix) else np.asarray(m)
    return values.reshape(-1).copy()


def unflatten(vec, length: int, width: int, label=None) -> FeatureMatrix:
    return FeatureMatrix(np.asarray(vec, dtype=float).reshape(length, width), label)


def write_feature_csv(path, matrices) -> None:
    """One row per segment: label name, then ``length * width`` raw values."""
    arr = _stack(matrices)
    n_feat = arr.shape[1] * arr.shape[2] if arr.size else 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label"] + [f"f{i}" for i in range(n_feat)])
        for m, row in zip(matrices, arr.reshape(len(arr), -1)):
            w.writerow([LabelClass(m.label).name] + [repr(float(v)) for v in row])


def read_feature_csv(path, length: int, width: int) -> list[FeatureMatrix]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != "label" or len(header) != 1 + length * width:
            raise ParseError(path, 1, f"expected label + {length * width} feature columns")
        for lineno, row in enumerate(reader, start=2):
            try:
                if len(row) != len(header):
                    raise ValueError(f"expected {len(header)} fields, got {len(row)}")
                out.append(unflatten([float(v) for v in row[1:]], length, width, LabelClass[row[0]]))
            except (ValueError, KeyError) as exc:
                raise ParseError(path, lineno, str(exc)) from None
    return out
