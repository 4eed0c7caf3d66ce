"""Split a recording into movement units with bell-shaped hand speed.

The pipeline is deterministic: smooth the hand speed, keep velocity minima
that are deep relative to the peaks on either side, add the edges of
activity (crossings of ``v_min``), drop resting stretches, merge fragments
that are too short, and annotate each unit with how well its speed matches
the minimum-jerk bell.
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, ZeroSignal
from .kinematics import DEFAULT_SAMPLE_RATE, Trajectory, smoothed_velocity
from .vocab import PROVENANCES, LabelClass

# span of the onset flank used to extrapolate motion start, in units of v_min
FLANK_LOW = 0.5
FLANK_TOP = 4.0


@dataclass(frozen=True)
class Segment:
    """Half-open frame range ``[start, end)`` with an optional class label."""

    start: int
    end: int
    label: LabelClass | None = None
    provenance: str = "truth"
    nrmse: float | None = None

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid segment bounds [{self.start}, {self.end})")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.label is not None and not isinstance(self.label, LabelClass):
            object.__setattr__(self, "label", LabelClass(self.label))

    def __len__(self):
        return self.end - self.start

    def with_label(self, label, provenance=None) -> "Segment":
        return Segment(self.start, self.end, label, provenance or self.provenance, self.nrmse)


@dataclass(frozen=True)
class SegmentationParams:
    sigma_s: float = 0.025
    v_min: float = 0.05
    min_duration: float = 0.15
    prominence: float = 0.5
    bell_nrmse_max: float = 0.35

    def __post_init__(self):
        if min(self.sigma_s, self.v_min, self.min_duration, self.prominence, self.bell_nrmse_max) <= 0:
            raise ValueError("segmentation parameters must be positive")
        if self.prominence >= 1 or self.bell_nrmse_max > 1:
            raise ValueError("prominence must be < 1 and bell_nrmse_max <= 1")


class _RangeMax:
    """Sparse table for O(1) inclusive range-maximum queries."""

    def __init__(self, x):
        x = np.asarray(x, dtype=float)
        self.levels = [x]
        k = 1
        while 2 * k <= len(x):
            prev = self.levels[-1]
            self.levels.append(np.maximum(prev[:-k], prev[k:]))
            k *= 2

    def __call__(self, lo, hi):
        j = (hi - lo + 1).bit_length() - 1
        lvl = self.levels[j]
        return max(lvl[lo], lvl[hi - (1 << j) + 1])


def _local_minima(speed):
    s = speed
    # strict descent on the left, non-strict ascent on the right: a plateau
    # is represented by its first sample
    inner = np.flatnonzero((s[1:-1] < s[:-2]) & (s[1:-1] <= s[2:])) + 1
    return inner


def _prominent_minima(speed, prominence):
    cands = _local_minima(speed)
    if len(cands) == 0:
        return []
    rmax = _RangeMax(speed)
    n = len(speed)
    # deepest first; equal depths resolved toward the earlier index
    order = sorted(cands.tolist(), key=lambda m: (speed[m], m))
    accepted: list[int] = []
    for m in order:
        pos = bisect.bisect_left(accepted, m)
        lo = accepted[pos - 1] if pos > 0 else 0
        hi = accepted[pos] if pos < len(accepted) else n - 1
        left_peak = rmax(lo, m)
        right_peak = rmax(m, hi)
        if speed[m] < (1.0 - prominence) * min(left_peak, right_peak):
            accepted.insert(pos, m)
    return accepted


def _runs(mask):
    """(start, end, value) for maximal runs of equal values in a boolean array."""
    change = np.flatnonzero(mask[1:] != mask[:-1]) + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [len(mask)]])
    return [(int(a), int(b), bool(mask[a])) for a, b in zip(starts, ends)]


def _activity_edges(speed, v_min, bridge):
    """Edges of activity as ``(index, rising, limit)`` triples.

    Dips below ``v_min`` shorter than ``bridge`` samples between two active
    stretches are treated as active.  ``limit`` is the furthest an edge may
    later be moved into the adjacent rest stretch (its midpoint).
    """
    above = speed >= v_min
    runs = _runs(above)
    for i, (a, b, val) in enumerate(runs):
        if not val and 0 < i < len(runs) - 1 and b - a < bridge:
            above[a:b] = True
    runs = _runs(above)
    edges = []
    n = len(speed)
    for i, (a, b, val) in enumerate(runs):
        if not val:
            continue
        if a > 0:
            r0 = runs[i - 1][0]
            edges.append((a, True, 0 if r0 == 0 else (r0 + a + 1) // 2))
        if b < n:
            r1 = runs[i + 1][1]
            edges.append((b, False, n if r1 == n else (b + r1) // 2))
    return edges


def _refine_edge(speed, vel, edge, v_min, rising, limit):
    """Move an activity edge from the ``v_min`` crossing to the motion onset.

    The flank is the velocity projected on the local direction of motion
    (plain speed when ``vel`` is None); the projection keeps sensor noise
    zero-mean where the norm would rectify it.  A least-squares line through
    the flank between ``FLANK_LOW`` and ``FLANK_TOP`` times ``v_min`` is
    extrapolated to zero.  Edges only move outward, never past ``limit``.
    """
    n = len(speed)
    step = 1 if rising else -1
    a = edge if rising else edge - 1
    b = a
    while 0 <= b + step < n and speed[b] < FLANK_TOP * v_min:
        b += step
    if vel is None:
        flank = speed
    else:
        u = vel[min(a, b):max(a, b) + 1].mean(axis=0)
        norm = np.linalg.norm(u)
        flank = vel @ (u / norm) if norm > 0 else speed
    c = a
    while 0 <= c - step < n and flank[c - step] >= FLANK_LOW * v_min and (c - step - limit) * step > 0:
        c -= step
    idx = np.arange(min(b, c), max(b, c) + 1)
    if len(idx) < 4:
        return edge
    mid = idx.mean()
    slope, icpt = np.polyfit(idx - mid, flank[idx], 1)
    if (slope <= 0) if rising else (slope >= 0):
        return edge
    zero = mid - icpt / slope
    if rising:
        return int(min(edge, max(limit, round(zero))))
    return int(max(edge, min(limit, round(zero) + 1)))


def detect_boundaries(speed, params: SegmentationParams | None = None, sample_rate: float = DEFAULT_SAMPLE_RATE,
                      velocity=None, refine: bool = True) -> list[int]:
    """Candidate unit boundaries (sorted frame indices) in a speed profile.

    Prominent velocity minima plus the (refined) edges of activity.  Pass the
    smoothed ``velocity`` vectors the speed was computed from to sharpen the
    edge estimates.
    """
    params = params or SegmentationParams()
    speed = np.asarray(speed, dtype=float)
    if len(speed) < 3:
        raise ValueError("speed profile needs at least 3 samples")
    out = set(_prominent_minima(speed, params.prominence))
    bridge = params.min_duration * sample_rate / 3.0
    for e, rising, limit in _activity_edges(speed, params.v_min, bridge):
        out.add(_refine_edge(speed, velocity, e, params.v_min, rising, limit) if refine else e)
    return sorted(b for b in out if 0 < b < len(speed))


def min_jerk_speed_template(length: int) -> np.ndarray:
    tau = np.linspace(0.0, 1.0, length)
    return 30 * tau**2 - 60 * tau**3 + 30 * tau**4


def bell_fit(speed_segment) -> tuple[float, float]:
    """Least-squares fit of the minimum-jerk speed bell.

    Returns ``(amplitude, nrmse)`` where nrmse is the residual RMS divided by
    the segment's peak speed.
    """
    s = np.asarray(speed_segment, dtype=float)
    if len(s) < 4:
        raise ValueError("bell fit needs at least 4 samples")
    peak = float(np.max(s))
    if peak == 0:
        raise ZeroSignal("cannot fit a bell to an all-zero speed segment")
    g = min_jerk_speed_template(len(s))
    amp = float(np.dot(s, g) / np.dot(g, g))
    rmse = math.sqrt(float(np.mean((s - amp * g) ** 2)))
    return amp, rmse / peak


def segment_speed(speed, sample_rate: float, params: SegmentationParams | None = None, velocity=None) -> list[Segment]:
    """Segment a precomputed speed profile; see :func:`segment`."""
    params = params or SegmentationParams()
    speed = np.asarray(speed, dtype=float)
    n = len(speed)
    if n < 3:
        return []
    bounds = [0] + detect_boundaries(speed, params, sample_rate, velocity) + [n]
    spans = [[a, b] for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    active = [sp for sp in spans if np.max(speed[sp[0]:sp[1]]) >= params.v_min]
    min_len = params.min_duration * sample_rate
    while True:
        short = [i for i, (a, b) in enumerate(active) if b - a < min_len]
        if not short:
            break
        i = short[0]
        a, b = active[i]
        left = i > 0 and active[i - 1][1] == a
        right = i + 1 < len(active) and active[i + 1][0] == b
        if left and right:
            # dissolve the weaker (higher-speed) of the two shared boundaries
            left = speed[a] >= speed[b - 1 if b == n else b]
            right = not left
        if left:
            active[i - 1][1] = b
            del active[i]
        elif right:
            active[i + 1][0] = a
            del active[i]
        else:
            del active[i]
    segments = []
    for a, b in active:
        nrmse = bell_fit(speed[a:b])[1] if b - a >= 4 else None
        segments.append(Segment(int(a), int(b), None, "trajectory", nrmse))
    return segments


def bell_shaped(seg: Segment, params: SegmentationParams | None = None) -> bool:
    """Whether a detected unit's speed fits the bell within ``bell_nrmse_max``.

    Annotation only: units are never dropped for a poor fit.
    """
    params = params or SegmentationParams()
    return seg.nrmse is not None and seg.nrmse <= params.bell_nrmse_max


def segment(traj: Trajectory, params: SegmentationParams | None = None) -> list[Segment]:
    """Detect movement units in the hand-speed profile of ``traj``."""
    params = params or SegmentationParams()
    vel = smoothed_velocity(traj, "hand", params.sigma_s)
    return segment_speed(np.linalg.norm(vel, axis=1), traj.sample_rate, params, vel)


def segment_to_dict(seg: Segment) -> dict:
    d = {
        "start": seg.start,
        "end": seg.end,
        "label": None if seg.label is None else LabelClass(seg.label).name,
        "provenance": seg.provenance,
    }
    if seg.nrmse is not None:
        d["nrmse"] = seg.nrmse
    return d


def segment_from_dict(d: dict) -> Segment:
    label = d.get("label")
    return Segment(
        int(d["start"]),
        int(d["end"]),
        None if label is None else LabelClass[label],
        d.get("provenance", "truth"),
        d.get("nrmse"),
    )


def write_segments(path, segments) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for seg in segments:
            fh.write(json.dumps(segment_to_dict(seg), sort_keys=True) + "\n")


def read_segments(path) -> list[Segment]:
    path = Path(path)
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                if not isinstance(d, dict):
                    raise ValueError("expected a JSON object")
                out.append(segment_from_dict(d))
            except (ValueError, KeyError, TypeError) as exc:
                raise ParseError(path, lineno, f"bad segment record: {exc}") from None
    return out
