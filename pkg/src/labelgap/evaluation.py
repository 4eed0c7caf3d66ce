"""Evaluation protocol: train on one speed, test on fast movements.

For every (train speed, labeling, model family) cell:

1. the chosen labeling is applied to the recordings of both speeds;
2. the training set is split into stratified folds; for each fold a
   normalizer is fitted on its training part only, hyperparameters are
   grid-searched by inner cross-validation on that same part, and one
   fold-model is fitted;
3. every fold-model is scored on the whole fast-speed set, labeled with the
   same technique;
4. accuracy is summarised as mean and (population) std across fold-models.

Training and scoring are separate steps (:func:`train_cell`,
:func:`evaluate_cell`) so they can run as separate commands and still give
the same report as a single run.
"""
from __future__ import annotations

import csv
import io
import json
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .classifiers.search import FAMILIES, ParamGrid, get_family, grid_search
from .errors import EmptyTrainingSet, InvalidConfig, LengthMismatch
from .features import FeatureConfig, FeatureMatrix, Normalizer, extract_all, fit_normalizer
from .folds import stratified_folds
from .kinematics import to_back_frame
from .labeling import VideoLabelParams, trajectory_labels, video_labels
from .seeding import derive_seed
from .segmentation import SegmentationParams, segment
from .vocab import N_CLASSES, PROVENANCES, LabelClass, SpeedClass

LABELINGS = ("trajectory", "video")
TRAIN_SPEEDS = ("slow", "normal")
COMBINED = "slow+normal"
TEST_SPEED = "fast"

# stream tags for derived seeds
_VIDEO_STREAM = 101
_FOLD_STREAM = 102
_SEARCH_STREAM = 103
_MODEL_STREAM = 104

REPORT_FORMAT = "labelgap-report"
REPORT_VERSION = 1
CSV_COLUMNS = ("train_speed", "labeling", "family", "mean_acc", "std_acc", "mean_macro_f1", "gap")


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    macro_f1: float
    confusion: np.ndarray  # rows = truth, columns = prediction

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "precision": self.precision.tolist(),
            "recall": self.recall.tolist(),
            "f1": self.f1.tolist(),
            "confusion": self.confusion.tolist(),
        }


def compute_metrics(pred, truth, n_classes: int = N_CLASSES) -> Metrics:
    """Accuracy, per-class precision/recall/F1 and macro-F1.

    Classes without predictions (or without true samples) get precision
    (recall) 0; F1 is 0 whenever precision + recall is 0.  Macro-F1 averages
    over the classes that occur in ``truth``.
    """
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if len(pred) != len(truth):
        raise LengthMismatch(f"{len(pred)} predictions for {len(truth)} labels")
    if len(truth) == 0:
        raise LengthMismatch("cannot score an empty prediction set")
    conf = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(conf, (truth, pred), 1)
    tp = np.diag(conf).astype(float)
    n_pred = conf.sum(axis=0).astype(float)
    n_true = conf.sum(axis=1).astype(float)
    precision = np.divide(tp, n_pred, out=np.zeros(n_classes), where=n_pred > 0)
    recall = np.divide(tp, n_true, out=np.zeros(n_classes), where=n_true > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros(n_classes), where=denom > 0)
    present = n_true > 0
    return Metrics(float(tp.sum() / len(truth)), precision, recall, f1, float(f1[present].mean()), conf)


@dataclass(frozen=True)
class EvalConfig:
    seed: int = 0
    families: tuple = tuple(FAMILIES)
    labelings: tuple = LABELINGS
    train_speeds: tuple = TRAIN_SPEEDS
    combined: bool = False
    k_folds: int = 5
    inner_folds: int = 3
    grids: dict = field(default_factory=lambda: {k: f.default_grid for k, f in FAMILIES.items()})
    segmentation: SegmentationParams = field(default_factory=SegmentationParams)
    video: VideoLabelParams = field(default_factory=VideoLabelParams)
    features: FeatureConfig = field(default_factory=FeatureConfig)

    def __post_init__(self):
        for f in self.families:
            get_family(f)
        bad = [x for x in self.labelings if x not in LABELINGS]
        if bad or not self.labelings:
            raise InvalidConfig(f"labelings must be drawn from {LABELINGS}, got {list(self.labelings)}")
        bad = [x for x in self.train_speeds if x not in TRAIN_SPEEDS]
        if bad:
            raise InvalidConfig(f"train speeds must be drawn from {TRAIN_SPEEDS}, got {list(self.train_speeds)}")
        if self.k_folds < 2 or self.inner_folds < 2:
            raise InvalidConfig("k_folds and inner_folds must be >= 2")

    @property
    def speeds(self) -> tuple:
        return tuple(self.train_speeds) + ((COMBINED,) if self.combined else ())

    def grid(self, family: str) -> ParamGrid:
        return self.grids.get(family, FAMILIES[family].default_grid)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "families": list(self.families),
            "labelings": list(self.labelings),
            "train_speeds": list(self.speeds),
            "test_speed": TEST_SPEED,
            "k_folds": self.k_folds,
            "inner_folds": self.inner_folds,
            "grids": {f: self.grid(f).to_dict() for f in self.families},
            "segmentation": asdict(self.segmentation),
            "video": {"fps": self.video.fps, "jitter_std": {k.value: v for k, v in self.video.jitter_std.items()}},
            "features": {"length": self.features.length, "channels": list(self.features.channels)},
        }


def recording_key(name: str) -> int:
    """Stable integer identifying a recording, for per-recording seeds."""
    return zlib.crc32(name.encode("utf-8"))


def label_recording(rec, labeling: str, cfg: EvalConfig, detected=None) -> list:
    """Labeled segments of one recording under ``labeling``.

    ``detected`` may pass precomputed automatic segments (trajectory
    labeling); otherwise they are computed here.
    """
    if labeling == "trajectory":
        if detected is None:
            detected = segment(rec.trajectory, cfg.segmentation)
        return trajectory_labels(detected, rec.truth)
    if labeling == "video":
        params = cfg.video.with_seed(derive_seed(cfg.seed, _VIDEO_STREAM, recording_key(rec.name)))
        return video_labels(rec.truth, params, rec.speed, rec.trajectory.sample_rate, len(rec.trajectory))
    if labeling == "truth":
        return list(rec.truth)
    raise InvalidConfig(f"unknown labeling {labeling!r}; expected one of {PROVENANCES}")


def recording_features(rec, segments, cfg: EvalConfig) -> list[FeatureMatrix]:
    return extract_all(to_back_frame(rec.trajectory), segments, cfg.features)


def speeds_of(train_speed: str) -> tuple:
    return tuple(train_speed.split("+"))


@dataclass
class LabeledSet:
    """Raw feature tensor (n, L, D) with class codes for one speed and labeling."""

    X: np.ndarray
    y: np.ndarray

    @classmethod
    def from_matrices(cls, mats, length, width):
        if not mats:
            return cls(np.empty((0, length, width)), np.empty(0, dtype=np.int64))
        return cls(np.stack([m.values for m in mats]), np.array([int(m.label) for m in mats], dtype=np.int64))

    def concat(self, other: "LabeledSet") -> "LabeledSet":
        return LabeledSet(np.concatenate([self.X, other.X]), np.concatenate([self.y, other.y]))


def build_sets(recordings, cfg: EvalConfig, pool=None) -> dict:
    """Feature sets keyed by ``(speed, labeling)`` for every speed involved."""
    wanted = {SpeedClass(s) for ts in cfg.speeds for s in speeds_of(ts)} | {SpeedClass.fast}
    jobs = [(r, lab) for lab in cfg.labelings for r in recordings if SpeedClass(r.speed) in wanted]

    def run(job):
        rec, lab = job
        return recording_features(rec, label_recording(rec, lab, cfg), cfg)

    mats = list(pool.map(run, jobs)) if pool is not None else [run(j) for j in jobs]
    grouped = {}
    for (rec, lab), m in zip(jobs, mats):
        grouped.setdefault((SpeedClass(rec.speed).value, lab), []).extend(m)
    return {k: LabeledSet.from_matrices(v, cfg.features.length, cfg.features.width) for k, v in grouped.items()}


def train_set(sets: dict, train_speed: str, labeling: str) -> LabeledSet:
    parts = [sets[(s, labeling)] for s in speeds_of(train_speed)]
    out = parts[0]
    for p in parts[1:]:
        out = out.concat(p)
    return out


@dataclass
class FoldModel:
    fold: int
    params: dict
    cv_scores: tuple
    normalizer: Normalizer
    model: object
    n_train: int
    seed: int


def _flat(normalizer: Normalizer, X: np.ndarray) -> np.ndarray:
    return normalizer.apply(X).reshape(len(X), -1)


def train_cell(data: LabeledSet, family: str, grid: ParamGrid, seed: int, k_folds: int = 5, inner_folds: int = 3,
               pool=None) -> list[FoldModel]:
    """Fit one model per outer fold; each sees only its fold's training part."""
    fam = get_family(family)
    if len(data.y) == 0:
        raise EmptyTrainingSet("no labeled training segments")
    folds = stratified_folds(data.y, k_folds, derive_seed(seed, _FOLD_STREAM))

    def run(i):
        tr, _ = folds.train_test(i)
        norm = fit_normalizer(data.X[tr])
        Xtr = _flat(norm, data.X[tr])
        search = grid_search(fam, grid, Xtr, data.y[tr], inner_folds, derive_seed(seed, _SEARCH_STREAM, i))
        model_seed = derive_seed(seed, _MODEL_STREAM, i)
        model = fam.fit(Xtr, data.y[tr], search.best, model_seed)
        return FoldModel(i, search.best, search.scores, norm, model, len(tr), model_seed)

    idx = range(folds.k)
    return list(pool.map(run, idx)) if pool is not None else [run(i) for i in idx]


def evaluate_cell(fold_models, test: LabeledSet, family: str) -> dict:
    fam = get_family(family)
    folds = []
    for fm in fold_models:
        pred = fam.predict(fm.model, _flat(fm.normalizer, test.X))
        m = compute_metrics(pred, test.y)
        folds.append({"fold": fm.fold, "params": fm.params, "cv_scores": list(fm.cv_scores), "n_train": fm.n_train,
                      **m.to_dict()})
    acc = np.array([f["accuracy"] for f in folds])
    f1 = np.array([f["macro_f1"] for f in folds])
    return {
        "family": family,
        "n_test": int(len(test.y)),
        "mean_acc": float(acc.mean()),
        "std_acc": float(acc.std()),
        "mean_macro_f1": float(f1.mean()),
        "folds": folds,
    }


def cell_seed(seed: int, train_speed: str, labeling: str, family: str) -> int:
    """Per-cell seed keyed by names, so filtering cells does not shift others."""
    return derive_seed(seed, *(recording_key(x) for x in (train_speed, labeling, family)))


def run_protocol(sets: dict, train_speed: str, labeling: str, family: str, cfg: EvalConfig, pool=None) -> dict:
    data = train_set(sets, train_speed, labeling)
    models = train_cell(data, family, cfg.grid(family), cell_seed(cfg.seed, train_speed, labeling, family),
                        cfg.k_folds, cfg.inner_folds, pool)
    cell = evaluate_cell(models, sets[(TEST_SPEED, labeling)], family)
    return {"train_speed": train_speed, "labeling": labeling, **cell}


def cells_of(cfg: EvalConfig) -> list[tuple]:
    return [(s, lab, fam) for s in cfg.speeds for lab in cfg.labelings for fam in cfg.families]


def assemble_report(cells: list, cfg: EvalConfig) -> dict:
    """Add labeling gaps and wrap cells into the report document."""
    by_key = {(c["train_speed"], c["labeling"], c["family"]): c for c in cells}
    gaps = []
    for s in cfg.speeds:
        for fam in cfg.families:
            t, v = by_key.get((s, "trajectory", fam)), by_key.get((s, "video", fam))
            gap = None if t is None or v is None else t["mean_acc"] - v["mean_acc"]
            for c in (t, v):
                if c is not None:
                    c["gap"] = gap
            if gap is not None:
                gaps.append({"train_speed": s, "family": fam, "gap": gap})
    return {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "config": cfg.to_dict(),
        "cells": [by_key[k] for k in cells_of(cfg)],
        "gaps": gaps,
    }


def compare_labelings(recordings, cfg: EvalConfig | None = None, pool=None, sets=None) -> dict:
    """Run every (train speed, labeling, family) cell and report labeling gaps."""
    cfg = cfg or EvalConfig()
    if sets is None:
        sets = build_sets(recordings, cfg, pool)
    cells = [run_protocol(sets, s, lab, fam, cfg, pool) for s, lab, fam in cells_of(cfg)]
    return assemble_report(cells, cfg)


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in report["cells"]:
        gap = c.get("gap")
        w.writerow([c["train_speed"], c["labeling"], c["family"], repr(c["mean_acc"]), repr(c["std_acc"]),
                    repr(c["mean_macro_f1"]), "" if gap is None else repr(gap)])
    return buf.getvalue()


def write_report(report: dict, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report_json(report), encoding="utf-8")
    (out / "report.csv").write_text(report_csv(report), encoding="utf-8")


__all__ = [
    "Metrics", "compute_metrics", "EvalConfig", "label_recording", "build_sets", "train_cell", "evaluate_cell",
    "run_protocol", "compare_labelings", "assemble_report", "report_json", "report_csv", "write_report",
    "LabeledSet", "FoldModel", "LabelClass", "LABELINGS", "TRAIN_SPEEDS", "COMBINED", "TEST_SPEED",
]
