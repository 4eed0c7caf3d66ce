"""Marker trajectories: storage, body-frame transform, speed, joint angles, resampling."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CollinearReference, DegenerateAngle, InvalidTrajectory, ParseError, TooShort

MARKERS = ("hand", "elbow", "shoulder", "back1", "back2", "back3")
HAND, ELBOW, SHOULDER = 0, 1, 2
BACK = slice(3, 6)
DEFAULT_SAMPLE_RATE = 500.0
DEFAULT_SIGMA_S = 0.025

CSV_HEADER = ["t"] + [f"{m}.{ax}" for m in MARKERS for ax in "xyz"]


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled marker positions.

    ``t`` has shape (n,), ``markers`` has shape (n, 6, 3) in the order of
    :data:`MARKERS` (hand, elbow, shoulder, three back markers).
    """

    t: np.ndarray
    markers: np.ndarray
    sample_rate: float = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        m = np.asarray(self.markers, dtype=float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "markers", m)
        if t.ndim != 1 or len(t) < 2:
            raise InvalidTrajectory("trajectory needs at least 2 frames")
        if m.shape != (len(t), len(MARKERS), 3):
            raise InvalidTrajectory(f"markers must have shape ({len(t)}, 6, 3), got {m.shape}")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(m))):
            raise InvalidTrajectory("non-finite values in trajectory")
        if self.sample_rate <= 0:
            raise InvalidTrajectory("sample_rate must be positive")
        dt = np.diff(t)
        if np.any(dt <= 0) or np.max(np.abs(dt - 1.0 / self.sample_rate)) > 1e-9:
            raise InvalidTrajectory("timestamps must be strictly increasing and uniform at 1/sample_rate")

    def __len__(self):
        return len(self.t)

    def marker(self, name: str) -> np.ndarray:
        return self.markers[:, MARKERS.index(name), :]

    def replace_markers(self, markers: np.ndarray) -> "Trajectory":
        return Trajectory(self.t, markers, self.sample_rate)


def frame_times(n: int, sample_rate: float) -> np.ndarray:
    return np.arange(n) / sample_rate


def to_back_frame(traj: Trajectory, tol: float = 1e-6) -> Trajectory:
    """Express every marker in the body frame spanned by the three back markers.

    Origin is the back-marker centroid; the first axis points from back1 to
    back2, the third is normal to the back plane, the second completes a
    right-handed frame.
    """
    m = traj.markers
    b1, b2, b3 = m[:, 3], m[:, 4], m[:, 5]
    e12 = b2 - b1
    e13 = b3 - b1
    for a, b in ((b1, b2), (b1, b3), (b2, b3)):
        if np.min(np.linalg.norm(a - b, axis=1)) <= tol:
            raise CollinearReference("back markers coincide")
    n3 = np.cross(e12, e13)
    n3_norm = np.linalg.norm(n3, axis=1)
    # sine of the angle at back1 must be non-negligible
    if np.min(n3_norm / (np.linalg.norm(e12, axis=1) * np.linalg.norm(e13, axis=1))) <= tol:
        raise CollinearReference("back markers are collinear")
    ax1 = e12 / np.linalg.norm(e12, axis=1)[:, None]
    ax3 = n3 / n3_norm[:, None]
    ax2 = np.cross(ax3, ax1)
    rot = np.stack([ax1, ax2, ax3], axis=1)  # (n, 3, 3), rows are the axes
    origin = (b1 + b2 + b3) / 3.0
    local = np.einsum("nij,nkj->nki", rot, m - origin[:, None, :])
    return traj.replace_markers(local)


def gaussian_smooth(x: np.ndarray, sigma_samples: float) -> np.ndarray:
    """Truncated Gaussian filter along axis 0, renormalised at the edges.

    The kernel half-width is ``ceil(3 * sigma_samples)``; ``sigma_samples == 0``
    returns a copy of the input.
    """
    x = np.asarray(x, dtype=float)
    if sigma_samples < 0:
        raise ValueError("sigma must be non-negative")
    if sigma_samples == 0:
        return x.copy()
    half = int(math.ceil(3.0 * sigma_samples))
    k = np.exp(-0.5 * (np.arange(-half, half + 1) / sigma_samples) ** 2)
    flat = x.reshape(len(x), -1)
    weight = _conv_same(np.ones(len(x)), k)
    out = np.empty_like(flat)
    for j in range(flat.shape[1]):
        out[:, j] = _conv_same(flat[:, j], k) / weight
    return out.reshape(x.shape)


def _conv_same(x, k):
    # np.convolve(mode="same") centres on the longer operand; keep x-centred output
    full = np.convolve(x, k, mode="full")
    half = (len(k) - 1) // 2
    return full[half:half + len(x)]


def velocity(traj: Trajectory, marker: str | int = "hand") -> np.ndarray:
    """Central-difference velocity (one-sided at the ends), shape (n, 3)."""
    idx = MARKERS.index(marker) if isinstance(marker, str) else marker
    return np.gradient(traj.markers[:, idx, :], 1.0 / traj.sample_rate, axis=0, edge_order=1)


def smoothed_velocity(traj: Trajectory, marker: str | int = "hand", sigma_s: float = DEFAULT_SIGMA_S) -> np.ndarray:
    if sigma_s < 0:
        raise ValueError("sigma_s must be non-negative")
    return gaussian_smooth(velocity(traj, marker), sigma_s * traj.sample_rate)


def speed_profile(traj: Trajectory, marker: str | int = "hand", sigma_s: float = DEFAULT_SIGMA_S) -> np.ndarray:
    """Smoothed speed of one marker in m/s, same length as the trajectory.

    The velocity vector is Gaussian-smoothed per axis before taking the norm,
    so zero-mean sensor noise averages out instead of accumulating as a
    positive bias in the magnitude.
    """
    return np.linalg.norm(smoothed_velocity(traj, marker, sigma_s), axis=1)


def joint_angle(a, b, c) -> float:
    """Angle at vertex ``b`` between rays b->a and b->c, in radians."""
    u = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    w = np.asarray(c, dtype=float) - np.asarray(b, dtype=float)
    nu, nw = np.linalg.norm(u), np.linalg.norm(w)
    if nu <= 1e-9 or nw <= 1e-9:
        raise DegenerateAngle("joint angle undefined for zero-length ray")
    return float(np.arccos(np.clip(np.dot(u, w) / (nu * nw), -1.0, 1.0)))


def joint_angles(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Vectorised :func:`joint_angle` over rows of (n, 3) arrays."""
    u = a - b
    w = c - b
    nu = np.linalg.norm(u, axis=1)
    nw = np.linalg.norm(w, axis=1)
    if np.min(nu) <= 1e-9 or np.min(nw) <= 1e-9:
        raise DegenerateAngle("joint angle undefined for zero-length ray")
    cos = np.einsum("ij,ij->i", u, w) / (nu * nw)
    return np.arccos(np.clip(cos, -1.0, 1.0))


def resample(t: np.ndarray, values: np.ndarray, length: int) -> np.ndarray:
    """Linearly interpolate ``values`` (n, channels) at ``length`` uniform times."""
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(t) < 2:
        raise TooShort("need at least 2 samples to resample")
    if length < 2:
        raise ValueError("resample length must be >= 2")
    one_d = values.ndim == 1
    v = values[:, None] if one_d else values
    grid = np.linspace(t[0], t[-1], length)
    out = np.column_stack([np.interp(grid, t, v[:, j]) for j in range(v.shape[1])])
    return out[:, 0] if one_d else out


def write_csv(path, traj: Trajectory) -> None:
    flat = np.column_stack([traj.t, traj.markers.reshape(len(traj), -1)])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        np.savetxt(fh, flat, delimiter=",", fmt="%.17g")


def read_csv(path, sample_rate: float = DEFAULT_SAMPLE_RATE) -> Trajectory:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header != CSV_HEADER:
            raise ParseError(path, 1, "unexpected trajectory CSV header")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            parts = line.strip().split(",")
            if len(parts) != len(CSV_HEADER):
                raise ParseError(path, lineno, f"expected {len(CSV_HEADER)} fields, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
    data = np.array(rows, dtype=float).reshape(-1, len(CSV_HEADER))
    return Trajectory(data[:, 0], data[:, 1:].reshape(-1, len(MARKERS), 3), sample_rate)
