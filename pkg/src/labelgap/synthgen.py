"""Synthetic stacking-scenario recordings with ground-truth movement units.

A subject stacks four bricks on the middle of a table: green first, then
red/blue/yellow in one of six orders.  Each brick produces a reach
(middle -> brick position) and a carry (brick position -> middle), each a
minimum-jerk unit with a small vertical lift.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateMove, InvalidConfig, MissingDataset, ParseError
from .kinematics import DEFAULT_SAMPLE_RATE, MARKERS, Trajectory, frame_times, gaussian_smooth, read_csv, write_csv
from .seeding import derive_seed
from .segmentation import Segment, read_segments, write_segments
from .vocab import LabelClass, SpeedClass

COLOR_POSITION = {"green": "front", "red": "left", "blue": "right", "yellow": "down"}
STACKING_ORDERS = [tuple(p) for p in itertools.permutations(("red", "blue", "yellow"))]
DEFAULT_UNIT_DURATION = {SpeedClass.slow: 1.6, SpeedClass.normal: 1.0, SpeedClass.fast: 0.5}
DEFAULT_REPETITIONS = {SpeedClass.slow: 3, SpeedClass.normal: 3, SpeedClass.fast: 4}

SHOULDER_ANCHOR = np.array([0.0, -0.18, 0.42])
BACK_TRIANGLE = np.array([[-0.12, 0.10, 0.40], [-0.12, -0.10, 0.40], [-0.12, 0.0, 0.18]])
ELBOW_DROP = 0.05
REST_LEAD_S = 0.5
REST_GAP_S = (0.1, 0.3)
NOISE_SMOOTH_S = 0.010


@dataclass(frozen=True)
class TableLayout:
    # every brick sits 0.55 m from the stack; shorter reaches let the lift
    # dominate the speed profile and it stops looking like a single bell
    middle: tuple = (0.60, 0.00, 0.00)
    front: tuple = (1.15, 0.00, 0.00)
    left: tuple = (0.60, 0.55, 0.00)
    right: tuple = (0.60, -0.55, 0.00)
    down: tuple = (0.05, 0.00, 0.00)
    lift_height: float = 0.08

    def __post_init__(self):
        pts = self.positions()
        for a, b in itertools.combinations(pts, 2):
            if np.linalg.norm(np.subtract(pts[a], pts[b])) < 0.1:
                raise InvalidConfig(f"table positions {a} and {b} closer than 0.1 m")
        if self.lift_height < 0:
            raise InvalidConfig("lift_height must be non-negative")

    def positions(self) -> dict:
        return {k: np.asarray(getattr(self, k), dtype=float) for k in ("middle", "front", "left", "right", "down")}


@dataclass(frozen=True)
class NoiseParams:
    pos_std: float = 0.002
    duration_cv: float = 0.1
    endpoint_std: float = 0.01

    def __post_init__(self):
        if min(self.pos_std, self.duration_cv, self.endpoint_std) < 0:
            raise InvalidConfig("noise parameters must be non-negative")


NOISELESS = NoiseParams(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ScenarioSpec:
    stacking_order: tuple = ("red", "blue", "yellow")
    repetitions: int = 1
    speed: SpeedClass = SpeedClass.normal
    noise: NoiseParams = field(default_factory=NoiseParams)
    seed: int = 0
    unit_duration: float | None = None
    sample_rate: float = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        if sorted(self.stacking_order) != ["blue", "red", "yellow"]:
            raise InvalidConfig(f"stacking order must permute red/blue/yellow, got {self.stacking_order}")
        if self.repetitions < 1:
            raise InvalidConfig("repetitions must be >= 1")

    @property
    def duration(self) -> float:
        return self.unit_duration if self.unit_duration is not None else DEFAULT_UNIT_DURATION[SpeedClass(self.speed)]


def min_jerk_path(p0, p1, T: float, lift: float = 0.0, sample_rate: float = DEFAULT_SAMPLE_RATE) -> np.ndarray:
    """Minimum-jerk point-to-point path with a sin^2 vertical lift.

    Returns ``round(T * sample_rate) + 1`` positions; the first is ``p0`` and
    the last is ``p1`` exactly.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    if T <= 0:
        raise ValueError("duration must be positive")
    if np.array_equal(p0, p1):
        raise DegenerateMove("start and end positions coincide")
    n = max(int(round(T * sample_rate)), 2)
    tau = np.arange(n + 1) / n
    return _min_jerk_at(p0, p1, tau, lift)


def _min_jerk_at(p0, p1, tau, lift):
    s = 10 * tau**3 - 15 * tau**4 + 6 * tau**5
    x = p0 + np.outer(s, p1 - p0)
    x[:, 2] += lift * np.sin(np.pi * tau) ** 2
    x[0], x[-1] = p0, p1
    return x


def arm_follow(hand: np.ndarray, layout: TableLayout | None = None):
    """Elbow, shoulder and back-marker streams that follow the hand linearly.

    Returns ``(elbow, shoulder, back)`` with shapes (n, 3), (n, 3), (n, 3, 3).
    """
    layout = layout or TableLayout()
    disp = np.asarray(hand, dtype=float) - layout.positions()["middle"]
    shoulder = SHOULDER_ANCHOR + 0.05 * disp
    elbow = 0.5 * shoulder + 0.5 * hand - np.array([0.0, 0.0, ELBOW_DROP])
    back = BACK_TRIANGLE[None, :, :] + 0.02 * disp[:, None, :]
    return elbow, shoulder, back


def unit_sequence(order, repetitions: int = 1):
    """(start position, end position, label) for every unit of a recording."""
    units = []
    for _ in range(repetitions):
        for color in ("green",) + tuple(order):
            pos = COLOR_POSITION[color]
            units.append(("middle", pos, LabelClass.reach(pos)))
            units.append((pos, "middle", LabelClass.carry(pos)))
    return units


def generate_recording(spec: ScenarioSpec, layout: TableLayout | None = None):
    """Synthesize one recording; returns ``(trajectory, truth_segments)``."""
    layout = layout or TableLayout()
    rng = np.random.default_rng(spec.seed)
    fs = spec.sample_rate
    places = layout.positions()
    noise = spec.noise

    def visit(name):
        return places[name] + rng.normal(0.0, noise.endpoint_std, 3) if noise.endpoint_std > 0 else places[name].copy()

    lead = int(round(REST_LEAD_S * fs))
    current = visit("middle")
    pieces = [np.repeat(current[None, :], lead, axis=0)]
    cursor = lead
    truth = []
    units = unit_sequence(spec.stacking_order, spec.repetitions)
    for i, (_, dst, label) in enumerate(units):
        T = spec.duration * rng.normal(1.0, noise.duration_cv) if noise.duration_cv > 0 else spec.duration
        T = max(T, 0.3 * spec.duration)
        target = visit(dst)
        path = min_jerk_path(current, target, T, layout.lift_height, fs)
        # the first sample coincides with the last rest sample
        pieces.append(path[1:])
        start = cursor - 1
        cursor += len(path) - 1
        truth.append(Segment(start, cursor, label, "truth"))
        current = target
        gap = REST_LEAD_S if i == len(units) - 1 else rng.uniform(*REST_GAP_S)
        n_rest = int(round(gap * fs))
        pieces.append(np.repeat(current[None, :], n_rest, axis=0))
        cursor += n_rest
    hand = np.concatenate(pieces)
    elbow, shoulder, back = arm_follow(hand, layout)
    markers = np.concatenate([hand[:, None], elbow[:, None], shoulder[:, None], back], axis=1)
    if noise.pos_std > 0:
        white = rng.normal(0.0, noise.pos_std, markers.shape)
        markers = markers + gaussian_smooth(white, NOISE_SMOOTH_S * fs)
    traj = Trajectory(frame_times(len(hand), fs), markers, fs)
    return traj, truth


@dataclass
class Recording:
    name: str
    speed: SpeedClass
    order: tuple
    repetition: int
    trajectory: Trajectory
    truth: list


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    noise: NoiseParams = field(default_factory=NoiseParams)
    layout: TableLayout = field(default_factory=TableLayout)
    unit_duration: dict = field(default_factory=lambda: dict(DEFAULT_UNIT_DURATION))
    repetitions: dict = field(default_factory=lambda: dict(DEFAULT_REPETITIONS))
    sample_rate: float = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        d = {SpeedClass(k): float(v) for k, v in self.unit_duration.items()}
        if not d[SpeedClass.slow] > d[SpeedClass.normal] > d[SpeedClass.fast] > 0:
            raise InvalidConfig("unit durations must satisfy slow > normal > fast > 0")


def recording_specs(cfg: SynthConfig):
    """Yield ``(name, ScenarioSpec, speed, order, repetition)`` in canonical order."""
    for si, speed in enumerate(SpeedClass):
        for oi, order in enumerate(STACKING_ORDERS):
            for rep in range(cfg.repetitions[speed]):
                spec = ScenarioSpec(
                    stacking_order=order,
                    repetitions=1,
                    speed=speed,
                    noise=cfg.noise,
                    seed=derive_seed(cfg.seed, si, oi, rep),
                    unit_duration=cfg.unit_duration[speed],
                    sample_rate=cfg.sample_rate,
                )
                yield f"{speed.value}_{'-'.join(order)}_r{rep}", spec, speed, order, rep


def _make(item, layout):
    name, spec, speed, order, rep = item
    traj, truth = generate_recording(spec, layout)
    return Recording(name, speed, order, rep, traj, truth)


def generate_dataset(cfg: SynthConfig | None = None, seed: int | None = None, pool=None) -> list[Recording]:
    """All recordings for the three speeds; 144/144/192 units with the defaults.

    ``pool`` may be any executor with a ``map`` method; output does not
    depend on it.
    """
    cfg = cfg or SynthConfig()
    if seed is not None:
        cfg = SynthConfig(seed, cfg.noise, cfg.layout, cfg.unit_duration, cfg.repetitions, cfg.sample_rate)
    items = list(recording_specs(cfg))
    mapper = pool.map if pool is not None else map
    return list(mapper(_make, items, itertools.repeat(cfg.layout)))


def dataset_counts(recordings) -> dict:
    counts = {s.value: {"segments": 0, "per_class": {c.name: 0 for c in LabelClass}} for s in SpeedClass}
    for rec in recordings:
        c = counts[SpeedClass(rec.speed).value]
        c["segments"] += len(rec.truth)
        for seg in rec.truth:
            c["per_class"][LabelClass(seg.label).name] += 1
    return counts


def write_dataset(directory, recordings, cfg: SynthConfig) -> dict:
    """Write trajectory CSV + truth JSON-lines per recording and ``manifest.json``."""
    directory = Path(directory)
    (directory / "recordings").mkdir(parents=True, exist_ok=True)
    entries = []
    for rec in recordings:
        write_csv(directory / "recordings" / f"{rec.name}.csv", rec.trajectory)
        write_segments(directory / "recordings" / f"{rec.name}.truth.jsonl", rec.truth)
        entries.append({"name": rec.name, "speed": SpeedClass(rec.speed).value, "order": list(rec.order),
                        "repetition": rec.repetition, "frames": len(rec.trajectory)})
    counts = dataset_counts(recordings)
    manifest = {
        "seed": cfg.seed,
        "sample_rate": cfg.sample_rate,
        "params": {
            "noise": asdict(cfg.noise),
            "layout": asdict(cfg.layout),
            "unit_duration": {SpeedClass(k).value: v for k, v in cfg.unit_duration.items()},
            "repetitions": {SpeedClass(k).value: v for k, v in cfg.repetitions.items()},
        },
        "counts": counts,
        "total_segments": sum(c["segments"] for c in counts.values()),
        "recordings": entries,
    }
    with open(directory / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def read_manifest(directory) -> dict:
    path = Path(directory) / "manifest.json"
    if not path.is_file():
        raise MissingDataset(f"no dataset at {directory} (manifest.json not found)")
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, exc.msg) from None


def load_dataset(directory) -> tuple[list[Recording], dict]:
    """Read back a directory written by :func:`write_dataset`."""
    directory = Path(directory)
    manifest = read_manifest(directory)
    fs = float(manifest["sample_rate"])
    recs = []
    for e in manifest["recordings"]:
        base = directory / "recordings" / e["name"]
        for suffix in (".csv", ".truth.jsonl"):
            if not base.with_name(base.name + suffix).is_file():
                raise MissingDataset(f"recording file {base.name + suffix} missing from {directory}")
        traj = read_csv(base.with_name(base.name + ".csv"), fs)
        truth = read_segments(base.with_name(base.name + ".truth.jsonl"))
        recs.append(Recording(e["name"], SpeedClass(e["speed"]), tuple(e["order"]), int(e["repetition"]), traj, truth))
    return recs, manifest
