import pytest

from labelgap.config import SCHEMA, RunConfig, load_config, parse_config_text, parse_value
from labelgap.errors import InvalidConfig
from labelgap.vocab import SpeedClass


def test_defaults_build_every_stage():
    cfg = RunConfig()
    assert cfg.synth().repetitions == {SpeedClass.slow: 3, SpeedClass.normal: 3, SpeedClass.fast: 4}
    assert cfg.segmentation().v_min == 0.05
    assert cfg.video().fps == 30.0
    ecfg = cfg.evaluation()
    assert ecfg.families == ("knn", "forest", "gbt") and ecfg.k_folds == 5
    assert cfg.grids()["knn"].values == {"k": [1, 3, 5, 7]}
    assert cfg.data_dir.as_posix() == "out/data"


def test_parse_config_text(tmp_path):
    text = "# comment\n\nrun.seed = 7\ngrid.knn.k = 1, 5\ngrid.forest.max_depth = 4,none\nrun.families = knn\n"
    vals = parse_config_text(text)
    assert vals == {"run.seed": 7, "grid.knn.k": (1, 5), "grid.forest.max_depth": (4, None),
                    "run.families": ("knn",)}
    p = tmp_path / "c.cfg"
    p.write_text(text)
    cfg = load_config(p)
    assert cfg["run.seed"] == 7 and cfg.evaluation().families == ("knn",)


def test_unknown_key_and_bad_values():
    with pytest.raises(InvalidConfig, match="c.cfg:2"):
        parse_config_text("run.seed = 1\nrun.colour = red\n", "c.cfg")
    with pytest.raises(InvalidConfig):
        parse_value("run.seed", "-3")
    with pytest.raises(InvalidConfig):
        parse_value("run.threads", "0")
    with pytest.raises(InvalidConfig):
        parse_value("run.families", "knn,svm")
    with pytest.raises(InvalidConfig):
        parse_config_text("just words\n")
    with pytest.raises(InvalidConfig):
        RunConfig().updated({"nope": 1})


def test_missing_config_file(tmp_path):
    with pytest.raises(InvalidConfig):
        load_config(tmp_path / "absent.cfg")


def test_cross_field_errors_surface_as_invalid_config():
    cfg = RunConfig().updated({"eval.k_folds": 1})
    with pytest.raises(InvalidConfig):
        cfg.evaluation()


def test_every_default_round_trips_through_its_parser():
    for key, (parser, default) in SCHEMA.items():
        if isinstance(default, tuple):
            raw = ",".join("none" if v is None else str(v) for v in default)
        else:
            raw = str(default).lower() if isinstance(default, bool) else str(default)
        if raw == "":
            continue
        assert parse_value(key, raw) == default, key
