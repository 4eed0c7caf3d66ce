"""Run configuration from ``section.key = value`` text files.

Blank lines and lines starting with ``#`` are ignored.  Every key must be
listed in :data:`SCHEMA`; values are parsed and checked when loaded.
Lists are comma-separated.  Command-line flags override file values.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .classifiers.search import FAMILIES, ParamGrid
from .errors import InvalidConfig
from .evaluation import LABELINGS, TRAIN_SPEEDS, EvalConfig
from .features import CHANNEL_GROUPS, FeatureConfig
from .labeling import VideoLabelParams
from .segmentation import SegmentationParams
from .synthgen import DEFAULT_REPETITIONS, DEFAULT_UNIT_DURATION, NoiseParams, SynthConfig, TableLayout
from .vocab import SpeedClass

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _uint(s: str) -> int:
    v = int(s)
    if not 0 <= v < 2**64:
        raise ValueError(f"expected an unsigned 64-bit integer, got {s!r}")
    return v


def _pos_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise ValueError(f"expected a positive integer, got {s!r}")
    return v


def _nonneg(s: str) -> float:
    v = float(s)
    if not v >= 0:
        raise ValueError(f"expected a non-negative number, got {s!r}")
    return v


def _pos(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise ValueError(f"expected a positive number, got {s!r}")
    return v


def _list(item, choices=None):
    def parse(s: str) -> tuple:
        parts = [p.strip() for p in s.split(",") if p.strip()]
        if not parts:
            raise ValueError("expected a non-empty comma-separated list")
        vals = tuple(item(p) for p in parts)
        if choices is not None:
            bad = [v for v in vals if v not in choices]
            if bad:
                raise ValueError(f"{bad} not among {list(choices)}")
        return vals

    return parse


def _depth(s: str):
    return None if s.strip().lower() == "none" else _pos_int(s)


_layout = TableLayout()
_video = VideoLabelParams()
_seg = SegmentationParams()

# key -> (parser, default)
SCHEMA = {
    "run.seed": (_uint, 0),
    "run.threads": (_pos_int, 1),
    "run.out": (str, "out"),
    "run.data": (str, ""),
    "run.plots": (_bool, False),
    "run.families": (_list(str, tuple(FAMILIES)), tuple(FAMILIES)),
    "run.labelings": (_list(str, LABELINGS), LABELINGS),
    "run.train_speeds": (_list(str, TRAIN_SPEEDS), TRAIN_SPEEDS),
    "run.combined": (_bool, False),
    "synth.sample_rate": (_pos, 500.0),
    "synth.pos_std": (_nonneg, NoiseParams().pos_std),
    "synth.duration_cv": (_nonneg, NoiseParams().duration_cv),
    "synth.endpoint_std": (_nonneg, NoiseParams().endpoint_std),
    "synth.lift_height": (_nonneg, _layout.lift_height),
    **{f"synth.duration_{s.value}": (_pos, DEFAULT_UNIT_DURATION[s]) for s in SpeedClass},
    **{f"synth.repetitions_{s.value}": (_pos_int, DEFAULT_REPETITIONS[s]) for s in SpeedClass},
    "segmentation.sigma_s": (_pos, _seg.sigma_s),
    "segmentation.v_min": (_pos, _seg.v_min),
    "segmentation.min_duration": (_pos, _seg.min_duration),
    "segmentation.prominence": (_pos, _seg.prominence),
    "segmentation.bell_nrmse_max": (_pos, _seg.bell_nrmse_max),
    "video.fps": (_pos, _video.fps),
    **{f"video.jitter_{s.value}": (_nonneg, _video.jitter_std[s]) for s in SpeedClass},
    "features.length": (_pos_int, 50),
    "features.channels": (_list(str, tuple(CHANNEL_GROUPS)), tuple(CHANNEL_GROUPS)),
    "eval.k_folds": (_pos_int, 5),
    "eval.inner_folds": (_pos_int, 3),
    "grid.knn.k": (_list(_pos_int), (1, 3, 5, 7)),
    "grid.forest.n_trees": (_list(_pos_int), (50, 100)),
    "grid.forest.max_depth": (_list(_depth), (8, 16)),
    "grid.gbt.rounds": (_list(_pos_int), (50, 100)),
    "grid.gbt.learning_rate": (_list(_pos), (0.1, 0.3)),
    "grid.gbt.max_depth": (_list(_pos_int), (3, 4)),
    "grid.gbt.reg_lambda": (_list(_nonneg), (1.0,)),
    "grid.gbt.gamma": (_list(_nonneg), (0.0,)),
}


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=lambda: {k: d for k, (_, d) in SCHEMA.items()})

    def __getitem__(self, key):
        return self.values[key]

    def updated(self, overrides: dict) -> "RunConfig":
        """New config with already-typed values replaced; keys are checked."""
        for k in overrides:
            if k not in SCHEMA:
                raise InvalidConfig(f"unknown config key {k!r}")
        return RunConfig({**self.values, **overrides})

    def parsed(self, raw: dict, source: str = "<override>") -> "RunConfig":
        """New config with string values parsed through the schema."""
        out = {}
        for k, v in raw.items():
            out[k] = parse_value(k, v, source)
        return self.updated(out)

    @property
    def out_dir(self) -> Path:
        return Path(self["run.out"])

    @property
    def data_dir(self) -> Path:
        return Path(self["run.data"]) if self["run.data"] else self.out_dir / "data"

    def synth(self) -> SynthConfig:
        layout = TableLayout(lift_height=self["synth.lift_height"])
        noise = NoiseParams(self["synth.pos_std"], self["synth.duration_cv"], self["synth.endpoint_std"])
        return SynthConfig(
            seed=self["run.seed"],
            noise=noise,
            layout=layout,
            unit_duration={s: self[f"synth.duration_{s.value}"] for s in SpeedClass},
            repetitions={s: self[f"synth.repetitions_{s.value}"] for s in SpeedClass},
            sample_rate=self["synth.sample_rate"],
        )

    def segmentation(self) -> SegmentationParams:
        return SegmentationParams(*(self[f"segmentation.{k}"] for k in
                                    ("sigma_s", "v_min", "min_duration", "prominence", "bell_nrmse_max")))

    def video(self) -> VideoLabelParams:
        return VideoLabelParams(self["video.fps"], {s: self[f"video.jitter_{s.value}"] for s in SpeedClass})

    def grids(self) -> dict:
        out = {}
        for fam in FAMILIES:
            prefix = f"grid.{fam}."
            out[fam] = ParamGrid({k[len(prefix):]: list(v) for k, v in self.values.items() if k.startswith(prefix)})
        return out

    def evaluation(self) -> EvalConfig:
        try:
            return EvalConfig(
                seed=self["run.seed"],
                families=self["run.families"],
                labelings=self["run.labelings"],
                train_speeds=self["run.train_speeds"],
                combined=self["run.combined"],
                k_folds=self["eval.k_folds"],
                inner_folds=self["eval.inner_folds"],
                grids=self.grids(),
                segmentation=self.segmentation(),
                video=self.video(),
                features=FeatureConfig(self["features.length"], self["features.channels"]),
            )
        except ValueError as exc:
            raise InvalidConfig(str(exc)) from None


def parse_value(key: str, raw: str, source: str = "<override>"):
    if key not in SCHEMA:
        raise InvalidConfig(f"{source}: unknown config key {key!r}")
    parser = SCHEMA[key][0]
    try:
        return parser(raw.strip())
    except ValueError as exc:
        raise InvalidConfig(f"{source}: bad value for {key}: {exc}") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise InvalidConfig(f"{source}:{lineno}: expected 'section.key = value'")
        key, raw = (p.strip() for p in s.split("=", 1))
        values[key] = parse_value(key, raw, f"{source}:{lineno}")
    return values


def load_config(path=None) -> RunConfig:
    cfg = RunConfig()
    if path is None:
        return cfg
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc.strerror}") from None
    return cfg.updated(parse_config_text(text, str(path)))
