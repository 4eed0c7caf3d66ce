"""Command-line entry point.

Stages read and write under the output directory (``--out``)::

    data/                    synth: manifest.json + recordings/*.csv, *.truth.jsonl
    segments/NAME.jsonl      segment: automatically detected units
    labels/LABELING/NAME.jsonl
    features/LABELING/SPEED.csv
    models/SPEED/LABELING/FAMILY/foldI.json
    report.json, report.csv, *.svg

``experiment`` runs everything after ``synth`` in one go and writes the same
report as running ``segment``, ``label``, ``features``, ``train`` and
``eval`` one after the other.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

from . import evaluation as ev
from .classifiers.io import load_model, save_model
from .config import RunConfig, load_config, parse_value
from .errors import LabelGapError, MissingDataset
from .features import FeatureMatrix, read_feature_csv, write_feature_csv
from .plots import write_report_plots
from .segmentation import bell_shaped, read_segments, segment, write_segments
from .synthgen import generate_dataset, load_dataset, write_dataset
from .vocab import SpeedClass


def _global_flags(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", metavar="PATH", default=S, help="config file of 'section.key = value' lines")
    p.add_argument("--seed", metavar="U64", default=S, help="master seed (the only source of randomness)")
    p.add_argument("--threads", metavar="N", default=S, help="worker threads; results do not depend on it")
    p.add_argument("--out", metavar="DIR", default=S, help="output directory (default: out)")
    p.add_argument("--data", metavar="DIR", default=S, help="dataset directory (default: OUT/data)")
    p.add_argument("--plots", action="store_true", default=S, help="also write SVG bar charts")
    p.add_argument("--families", metavar="LIST", default=S, help="comma-separated subset of knn,forest,gbt")
    p.add_argument("--labeling", metavar="LIST", default=S, help="comma-separated subset of trajectory,video")
    p.add_argument("--combined", action="store_true", default=S, help="also train on slow+normal together")
    p.add_argument("--set", metavar="KEY=VALUE", action="append", default=S, dest="overrides",
                   help="override one config key (repeatable)")


COMMANDS = {
    "synth": "generate the synthetic dataset",
    "segment": "detect movement units in every recording",
    "label": "label segments by trajectory and/or video technique",
    "features": "extract raw feature matrices per speed and labeling",
    "train": "grid-search and fit the fold models of every cell",
    "eval": "score saved fold models on the fast-speed set and write the report",
    "experiment": "segment, label, extract, train and evaluate in one run",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common)
    parser = argparse.ArgumentParser(prog="labelgap", parents=[common],
                                     description="Labeling-technique comparison on synthetic manipulation movements.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for name, help_text in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text, description=help_text)
    return parser


_FLAG_KEYS = {
    "seed": "run.seed",
    "threads": "run.threads",
    "out": "run.out",
    "data": "run.data",
    "families": "run.families",
    "labeling": "run.labelings",
}


def resolve_config(args) -> RunConfig:
    cfg = load_config(getattr(args, "config", None))
    raw = {}
    for flag, key in _FLAG_KEYS.items():
        if hasattr(args, flag):
            raw[key] = getattr(args, flag)
    for item in getattr(args, "overrides", []) or []:
        if "=" not in item:
            raise LabelGapError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        raw[k.strip()] = v
    typed = {k: parse_value(k, v, "command line") for k, v in raw.items()}
    if getattr(args, "plots", False):
        typed["run.plots"] = True
    if getattr(args, "combined", False):
        typed["run.combined"] = True
    return cfg.updated(typed)


@contextmanager
def worker_pool(n: int):
    if n <= 1:
        yield None
        return
    with ThreadPoolExecutor(max_workers=n) as pool:
        yield pool


# -- paths -----------------------------------------------------------------

def _segments_path(cfg, name):
    return cfg.out_dir / "segments" / f"{name}.jsonl"


def _labels_path(cfg, labeling, name):
    return cfg.out_dir / "labels" / labeling / f"{name}.jsonl"


def _features_path(cfg, labeling, speed):
    return cfg.out_dir / "features" / labeling / f"{speed}.csv"


def _model_path(cfg, speed, labeling, family, fold):
    return cfg.out_dir / "models" / speed / labeling / family / f"fold{fold}.json"


def _require(path: Path, hint: str) -> Path:
    if not path.is_file():
        raise MissingDataset(f"{path} not found; {hint}")
    return path


def _load(cfg: RunConfig):
    return load_dataset(cfg.data_dir)


# -- commands --------------------------------------------------------------

def cmd_synth(cfg: RunConfig, pool) -> int:
    synth = cfg.synth()
    recs = generate_dataset(synth, pool=pool)
    manifest = write_dataset(cfg.data_dir, recs, synth)
    for speed, c in manifest["counts"].items():
        print(f"{speed}: {c['segments']} segments")
    print(f"total: {manifest['total_segments']} segments in {len(recs)} recordings -> {cfg.data_dir}")
    return 0


def cmd_segment(cfg: RunConfig, pool) -> int:
    recs, _ = _load(cfg)
    params = cfg.segmentation()
    out = cfg.out_dir / "segments"
    out.mkdir(parents=True, exist_ok=True)
    mapper = pool.map if pool is not None else map
    found = list(mapper(lambda r: segment(r.trajectory, params), recs))
    for rec, segs in zip(recs, found):
        write_segments(_segments_path(cfg, rec.name), segs)
    n_bell = sum(bell_shaped(s, params) for segs in found for s in segs)
    print(f"segmented {len(recs)} recordings: {sum(map(len, found))} units ({n_bell} bell-shaped) -> {out}")
    return 0


def cmd_label(cfg: RunConfig, pool) -> int:
    recs, _ = _load(cfg)
    ecfg = cfg.evaluation()
    for labeling in ecfg.labelings:
        (cfg.out_dir / "labels" / labeling).mkdir(parents=True, exist_ok=True)
        total = 0
        for rec in recs:
            detected = None
            if labeling == "trajectory":
                detected = read_segments(_require(_segments_path(cfg, rec.name), "run 'segment' first"))
            segs = ev.label_recording(rec, labeling, ecfg, detected)
            write_segments(_labels_path(cfg, labeling, rec.name), segs)
            total += len(segs)
        print(f"{labeling}: {total} labeled segments")
    return 0


def cmd_features(cfg: RunConfig, pool) -> int:
    recs, _ = _load(cfg)
    ecfg = cfg.evaluation()
    speeds = [s.value for s in SpeedClass]
    for labeling in ecfg.labelings:
        (cfg.out_dir / "features" / labeling).mkdir(parents=True, exist_ok=True)
        for speed in speeds:
            group = [r for r in recs if SpeedClass(r.speed).value == speed]

            def run(rec, labeling=labeling):
                segs = read_segments(_require(_labels_path(cfg, labeling, rec.name), "run 'label' first"))
                return ev.recording_features(rec, segs, ecfg)

            mapper = pool.map if pool is not None else map
            mats = [m for ms in mapper(run, group) for m in ms]
            write_feature_csv(_features_path(cfg, labeling, speed), mats)
            print(f"{labeling}/{speed}: {len(mats)} feature rows")
    return 0


def _read_set(cfg, ecfg, labeling, speed) -> ev.LabeledSet:
    path = _require(_features_path(cfg, labeling, speed), "run 'features' first")
    mats: list[FeatureMatrix] = read_feature_csv(path, ecfg.features.length, ecfg.features.width)
    return ev.LabeledSet.from_matrices(mats, ecfg.features.length, ecfg.features.width)


def _read_sets(cfg, ecfg) -> dict:
    speeds = {s for ts in ecfg.speeds for s in ev.speeds_of(ts)} | {ev.TEST_SPEED}
    return {(s, lab): _read_set(cfg, ecfg, lab, s) for lab in ecfg.labelings for s in sorted(speeds)}


def cmd_train(cfg: RunConfig, pool) -> int:
    ecfg = cfg.evaluation()
    sets = _read_sets(cfg, ecfg)
    for speed, labeling, family in ev.cells_of(ecfg):
        data = ev.train_set(sets, speed, labeling)
        seed = ev.cell_seed(ecfg.seed, speed, labeling, family)
        models = ev.train_cell(data, family, ecfg.grid(family), seed, ecfg.k_folds, ecfg.inner_folds, pool)
        for fm in models:
            path = _model_path(cfg, speed, labeling, family, fm.fold)
            path.parent.mkdir(parents=True, exist_ok=True)
            meta = {"train_speed": speed, "labeling": labeling, "fold": fm.fold, "n_train": fm.n_train,
                    "cv_scores": list(fm.cv_scores)}
            save_model(path, fm.model, fm.params, fm.seed, fm.normalizer, meta)
        print(f"{speed}/{labeling}/{family}: {len(models)} fold models, params {[m.params for m in models]}")
    return 0


def _load_fold_models(cfg, ecfg, speed, labeling, family) -> list:
    out = []
    for i in range(ecfg.k_folds):
        path = _require(_model_path(cfg, speed, labeling, family, i), "run 'train' first")
        model, rec = load_model(path)
        meta = rec["meta"]
        out.append(ev.FoldModel(int(meta["fold"]), rec["params"], tuple(meta["cv_scores"]), rec["normalizer"], model,
                                int(meta["n_train"]), rec["seed"]))
    return out


def _emit(cfg: RunConfig, report: dict) -> None:
    ev.write_report(report, cfg.out_dir)
    print(ev.report_csv(report), end="")
    if cfg["run.plots"]:
        paths = write_report_plots(report, cfg.out_dir)
        print(f"wrote {len(paths)} charts")


def cmd_eval(cfg: RunConfig, pool) -> int:
    ecfg = cfg.evaluation()
    tests = {lab: _read_set(cfg, ecfg, lab, ev.TEST_SPEED) for lab in ecfg.labelings}
    cells = []
    for speed, labeling, family in ev.cells_of(ecfg):
        models = _load_fold_models(cfg, ecfg, speed, labeling, family)
        cell = ev.evaluate_cell(models, tests[labeling], family)
        cells.append({"train_speed": speed, "labeling": labeling, **cell})
    _emit(cfg, ev.assemble_report(cells, ecfg))
    return 0


def cmd_experiment(cfg: RunConfig, pool) -> int:
    recs, _ = _load(cfg)
    report = ev.compare_labelings(recs, cfg.evaluation(), pool)
    _emit(cfg, report)
    return 0


HANDLERS = {
    "synth": cmd_synth,
    "segment": cmd_segment,
    "label": cmd_label,
    "features": cmd_features,
    "train": cmd_train,
    "eval": cmd_eval,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        with worker_pool(cfg["run.threads"]) as pool:
            return HANDLERS[args.command](cfg, pool)
    except LabelGapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        where = f" {exc.filename}" if exc.filename else ""
        print(f"error: I/O failure{where}: {exc.strerror or exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
