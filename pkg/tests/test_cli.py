import csv
import json
import re
import shutil

import pytest

from ecoltc import cli
from ecoltc.config import ScenarioConfig, apply_overrides, from_dict, load_config
from ecoltc.coupling import read_trace
from ecoltc.exceptions import IoError, SchemaMismatch
from ecoltc.pipeline import load_models
from ecoltc.synth import HOURS_PER_YEAR

from .runs import TINY, snapshot, write_config

ERROR_LINE = re.compile(r'^error: code=(\w+) message="[^"\n]*"$')


def _error_code(capsys, argv):
    rc = cli.main(argv)
    err = capsys.readouterr().err.strip().splitlines()
    assert rc == 2
    assert len(err) == 1 and ERROR_LINE.match(err[0]), err
    return ERROR_LINE.match(err[0]).group(1)


# -- config ----------------------------------------------------------------------


def test_defaults_encode_case_study():
    cfg = ScenarioConfig()
    assert cfg.farm_sizes == [450.0, 500.0, 550.0]
    assert cfg.presets == ["rcp45", "rcp85"]
    assert (cfg.start_year, cfg.end_year, cfg.n_years) == (2006, 2096, 90)
    assert cfg.oil_controller.n_hidden == 8 and cfg.diesel_controller.n_hidden == 12
    assert cfg.growth.n_hidden == 20 and cfg.growth.epochs == 200
    assert cfg.oil_plant.epochs == 125 and cfg.oil_plant.n_hidden == "auto"
    assert load_config() == cfg


def test_overrides_parse_yaml_scalars():
    data = apply_overrides({}, ["seeds.data=7", "farm_sizes=[100, 200]", "growth.bptt_window=null"])
    cfg = from_dict(data)
    assert cfg.seeds.data == 7 and cfg.seeds.training == 0
    assert cfg.farm_sizes == [100.0, 200.0]
    assert cfg.growth.bptt_window is None and cfg.growth.n_hidden == 20


@pytest.mark.parametrize("data", [
    {"farm_sizes": [0]},
    {"farm_sizes": []},
    {"end_year": 2006},
    {"presets": ["rcp26"]},
    {"bogus": 1},
    {"seeds": {"bogus": 1}},
    {"seeds": 3},
    {"plant_hours": 10},
])
def test_invalid_configs(data):
    with pytest.raises(SchemaMismatch):
        from_dict(data)


def test_config_file_errors(tmp_path):
    with pytest.raises(IoError):
        load_config(tmp_path / "missing.yaml")
    with pytest.raises(SchemaMismatch):
        load_config(None, ["no_equals_sign"])
    with pytest.raises(SchemaMismatch):
        load_config(None, ["end_year.x=1"])


# -- error reporting -------------------------------------------------------------


def test_parser_has_every_subcommand():
    sub = next(a for a in cli.build_parser()._actions if a.dest == "command")
    assert set(sub.choices) >= {"gen-data", "train", "simulate", "sweep", "assess", "plot", "run"}


@pytest.mark.parametrize("argv, code", [
    (["gen-data", "--set", "foo=1"], "SchemaMismatch"),
    (["gen-data", "--set", "end_year=2000"], "SchemaMismatch"),
    (["gen-data", "--config", "does-not-exist.yaml"], "IoError"),
    (["train"], "MissingDataset"),
    (["simulate"], "MissingDataset"),
    (["assess"], "MissingDataset"),
    (["plot"], "MissingDataset"),
])
def test_errors_exit_nonzero_with_one_parseable_line(tmp_path, capsys, argv, code):
    assert _error_code(capsys, argv + ["--out", str(tmp_path / "run")]) == code


def test_assess_rejects_non_trace_directory(tmp_path, capsys):
    (tmp_path / "junk").mkdir()
    assert _error_code(capsys, ["assess", str(tmp_path / "junk"), "--out", str(tmp_path)]) == "SchemaMismatch"


def test_simulate_without_models(tmp_path, capsys):
    cfg = write_config(tmp_path / "tiny.yaml")
    out = str(tmp_path / "run")
    assert cli.main(["gen-data", "--config", str(cfg), "--out", out]) == 0
    capsys.readouterr()
    assert _error_code(capsys, ["simulate", "--config", str(cfg), "--out", out]) == "UntrainedModels"


# -- reduced end-to-end run ------------------------------------------------------


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = write_config(root / "tiny.yaml")
    out = root / "run"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out), "--seed", "3"]) == 0
    return cfg, out


def test_gen_data_files(tiny_run):
    _, out = tiny_run
    data = out / "data"
    for name in ("oil_plant", "diesel_plant", "demand", "climate_rcp45", "climate_rcp85",
                 "growth_rcp45", "growth_rcp85"):
        assert (data / f"{name}.csv").exists() and (data / f"{name}.csv.meta.json").exists()
    n_years = TINY["end_year"] - 2006
    assert sum(1 for _ in open(data / "oil_plant.csv")) == TINY["plant_hours"] + 1
    assert sum(1 for _ in open(data / "demand.csv")) == n_years * HOURS_PER_YEAR + 1
    assert sum(1 for _ in open(data / "climate_rcp85.csv")) == n_years * HOURS_PER_YEAR + 1


def test_train_writes_models_and_losses(tiny_run):
    _, out = tiny_run
    models = out / "models"
    for preset in ("rcp45", "rcp85"):
        loaded = load_models(out, preset)
        assert set(loaded) == {"oil_plant", "diesel_plant", "oil_controller", "diesel_controller", "growth"}
    for name in ("oil_plant", "diesel_plant", "growth_rcp45", "growth_rcp85", "oil_controller", "diesel_controller"):
        assert (models / f"{name}.loss.csv").exists()
    metrics = json.loads((models / "metrics.json").read_text())
    assert set(metrics["test_rmse"]) >= {"oil_plant", "diesel_plant", "growth_rcp45", "growth_rcp85"}


def test_sweep_is_cartesian_product(tiny_run):
    _, out = tiny_run
    dirs = sorted(p.name for p in (out / "traces").iterdir())
    assert dirs == ["rcp45_450ha", "rcp45_550ha", "rcp85_450ha", "rcp85_550ha"]
    with open(out / "comparison.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    assert {"first_failure_year", "waste_cum_Mg", "import_cum_Mg", "final_stock_Mg"} <= set(rows[0])
    for d in dirs:
        tr = read_trace(out / "traces" / d)
        assert tr.n_years == TINY["end_year"] - 2006


def test_reports_and_plots(tiny_run):
    _, out = tiny_run
    for d in (out / "traces").iterdir():
        report = json.loads((out / "reports" / f"{d.name}.json").read_text())
        assert report["schema_version"] == "1.0" and report["run"]["name"] == d.name
        assert (out / "reports" / f"{d.name}.txt").exists()
    for fig, kinds in (("production", ["production"]), ("waste_stock", ["waste", "stock"]), ("imports", ["imports"])):
        svg = (out / "plots" / f"{fig}.svg").read_text()
        for kind in kinds:
            assert len(re.findall(rf'id="series-{kind}-', svg)) == 4


def test_stagewise_commands_reproduce_run(tiny_run, tmp_path):
    cfg, out = tiny_run
    other = str(tmp_path / "run")
    for cmd in ("gen-data", "train", "sweep", "assess", "plot"):
        assert cli.main([cmd, "--config", str(cfg), "--out", other, "--seed", "3"]) == 0
    a, b = snapshot(out), snapshot(other)
    assert set(a) == set(b)
    differing = [k for k in a if a[k] != b[k]]
    # only the resolved config records the output directory
    assert differing == ["config.resolved.yaml"]


def test_explicit_thresholds_and_selection(tiny_run, tmp_path, capsys):
    _, out = tiny_run
    trace = out / "traces" / "rcp45_550ha"
    assert cli.main(["assess", str(trace), "--min", "0", "--max", "1e9", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "reports" / "rcp45_550ha.json").read_text())
    assert report["thresholds"]["min_threshold"] == 0.0 and report["deviations"] == []
    assert "rcp45_550ha" in capsys.readouterr().out


def test_simulate_subset(tiny_run, tmp_path):
    cfg, out = tiny_run
    shutil.copytree(out / "data", tmp_path / "data")
    shutil.copytree(out / "models", tmp_path / "models")
    argv = ["simulate", "--config", str(cfg), "--out", str(tmp_path), "--seed", "3", "--preset", "rcp85", "--farm", "450"]
    assert cli.main(argv) == 0
    assert [p.name for p in (tmp_path / "traces").iterdir()] == ["rcp85_450ha"]
    a = snapshot(tmp_path / "traces" / "rcp85_450ha")
    assert a == snapshot(out / "traces" / "rcp85_450ha")


def test_seed_changes_data(tiny_run, tmp_path):
    cfg, out = tiny_run
    assert cli.main(["gen-data", "--config", str(cfg), "--out", str(tmp_path), "--seed", "4"]) == 0
    assert (tmp_path / "data" / "oil_plant.csv").read_bytes() != (out / "data" / "oil_plant.csv").read_bytes()
