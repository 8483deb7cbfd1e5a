import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from partialnet import pipeline
from partialnet.cli import main
from partialnet.classical import EdgeScores
from partialnet.config import ExperimentConfig, env_overrides, load_config
from partialnet.exceptions import ReconciliationError
from partialnet.simulate import read_tree_json
from partialnet.stats import read_dataset_csv


def small(tmp_path, **kw):
    base = dict(p=5, n_list=[50], tree_count=2, mc_draws=200, output_dir=str(tmp_path / "out"), jobs=1)
    base.update(kw)
    return ExperimentConfig(**base)


# -- configuration ---------------------------------------------------------------


def test_defaults_and_auto_mode():
    cfg = ExperimentConfig()
    assert (cfg.p, cfg.n_list, cfg.tree_count, cfg.mc_draws) == (100, [50, 250, 500, 1000], 500, 1000)
    assert cfg.mode_for(1000) == "full"
    assert cfg.mode_for(50) == "local"
    assert cfg.replace(mode="full").mode_for(50) == "full"


def test_validation():
    for bad in (dict(n_list=[]), dict(tree_count=0), dict(engines=["x"]), dict(mode="fast"), dict(master_seed=-1)):
        with pytest.raises(ValueError):
            ExperimentConfig(**bad)


def test_precedence(tmp_path):
    toml = tmp_path / "c.toml"
    toml.write_text('[experiment]\np = 12\ntree_count = 7\nn_list = [20, 40]\nmode = "full"\n')
    env = {"PARTIALNET_TREE_COUNT": "3", "PARTIALNET_N_LIST": "30,60", "OTHER": "1"}
    cfg = load_config(toml, desk_scale=True, environ=env, overrides={"p": 9, "master_seed": None})
    assert cfg.p == 9  # command line wins
    assert cfg.tree_count == 3  # env beats file
    assert cfg.n_list == [30, 60]
    assert cfg.mode == "full"  # file beats preset and defaults
    desk = load_config(desk_scale=True, environ={})
    assert (desk.p, desk.n_list, desk.tree_count) == (20, [10, 50, 100, 200], 50)
    assert env_overrides({"PARTIALNET_CAP_OVERRIDE": "none", "PARTIALNET_NOPE": "1"}) == {"cap_override": "none"}
    assert load_config(environ={"PARTIALNET_CAP_OVERRIDE": "none"}).cap_override is None
    with pytest.raises(ValueError):
        load_config(environ={"PARTIALNET_MODE": "sideways"})
    bad = tmp_path / "bad.toml"
    bad.write_text("unknown_key = 1\n")
    with pytest.raises(ValueError):
        load_config(bad, environ={})


# -- commands --------------------------------------------------------------------


def test_simulate_layout_and_determinism(tmp_path):
    cfg = small(tmp_path, p=2, tree_count=1)
    pipeline.cmd_simulate(cfg)
    layout = pipeline.Layout(Path(cfg.output_dir))
    tree = read_tree_json(layout.tree(0))
    assert tree.edges == [(0, 1)]
    first = layout.dataset(50, 0, "study").read_bytes()
    pipeline.cmd_simulate(cfg)
    assert layout.dataset(50, 0, "study").read_bytes() == first
    assert read_dataset_csv(layout.dataset(50, 0, "pilot")).n == 50


def test_many_trees_have_p_minus_one_edges(tmp_path):
    cfg = small(tmp_path, p=100, n_list=[5], tree_count=20)
    pipeline.cmd_simulate(cfg)
    layout = pipeline.Layout(Path(cfg.output_dir))
    assert all(len(read_tree_json(layout.tree(r)).edges) == 99 for r in range(20))


def test_minimal_experiment(tmp_path):
    cfg = small(tmp_path)
    summary, ok = pipeline.cmd_experiment(cfg)
    assert ok
    root = Path(cfg.output_dir)
    for engine in cfg.engines:
        for rep in range(2):
            text = (root / "scores" / "n0050" / engine / f"rep{rep:04d}.csv").read_text()
            assert len(text.strip().splitlines()) == 1 + 10
            assert (root / "roc" / "n0050" / engine / f"rep{rep:04d}.csv").exists()
        assert (root / "plots" / f"roc_by_n_{engine}.svg").exists()
    assert (root / "plots" / "roc_engines_n0050.svg").exists()
    assert all(0 <= r["mean_auc"] <= 1 for r in summary["results"])
    assert {r["mode"] for r in summary["results"]} == {"full"}  # auto with n > p
    manifest = json.loads((root / "manifest.json").read_text())
    assert {"simulate", "infer", "evaluate", "config", "software_version"} <= set(manifest)
    assert json.loads((root / "summary.json").read_text()) == summary


def test_perfect_scores_give_unit_auc(tmp_path):
    cfg = small(tmp_path, engines=["classical"])
    pipeline.cmd_simulate(cfg)
    layout = pipeline.Layout(Path(cfg.output_dir))
    for rep in range(2):
        tree = read_tree_json(layout.tree(rep))
        score = np.where(tree.adjacency, 0.0, 1.0)
        np.fill_diagonal(score, 0.0)
        path = layout.scores(50, "classical", rep)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(EdgeScores(np.eye(5), score, np.zeros((5, 5)), "classical-p").to_csv())
    summary = pipeline.cmd_evaluate(cfg)
    assert summary["results"][0]["mean_auc"] == 1.0
    avg = (layout.average_roc(50, "classical")).read_text().splitlines()
    assert avg[2] == "0.01,1.0"


def test_missing_scores_raise_reconciliation(tmp_path):
    cfg = small(tmp_path)
    pipeline.cmd_experiment(cfg)
    pipeline.Layout(Path(cfg.output_dir)).scores(50, "bayesian", 1).unlink()
    with pytest.raises(ReconciliationError, match="rep0001 n=50 bayesian"):
        pipeline.cmd_evaluate(cfg)


def test_failures_are_recorded(tmp_path):
    # n = 5 is below the local-mode minimum
    cfg = small(tmp_path, p=8, n_list=[5], engines=["classical"])
    summary, ok = pipeline.cmd_experiment(cfg)
    assert not ok
    manifest = json.loads((Path(cfg.output_dir) / "manifest.json").read_text())
    assert len(manifest["infer"]["failures"]) == 2
    assert "SampleTooSmallError" in manifest["infer"]["failures"][0]["error"]
    assert summary["results"] == []


def test_cap_sweep_series(tmp_path):
    cfg = small(tmp_path, p=8, n_list=[40], cap_sweep=[1, 2])
    summary, ok = pipeline.cmd_experiment(cfg)
    assert ok
    rows = summary["cap_sweep"]
    assert {(r["engine"], r["cap"]) for r in rows} == {(e, c) for e in cfg.engines for c in (1, 2)}
    root = Path(cfg.output_dir)
    assert (root / "plots" / "cap_sweep.svg").exists()
    scores = EdgeScores.from_csv((root / "scores" / "cap002" / "n0040" / "classical" / "rep0000.csv").read_text(), "classical-p")
    assert scores.conditioning_size.max() <= 2


def test_streams_are_keyed():
    cfg = ExperimentConfig(master_seed=2**64 - 1)
    a = pipeline.engine_rng(cfg, 3, 50, "bayesian", None).random()
    b = pipeline.engine_rng(cfg, 3, 50, "bayesian", 0).random()
    c = pipeline.engine_rng(cfg, 3, 50, "bayesian", None).random()
    assert a == c and a != b
    assert pipeline.data_rng(cfg, 0, 10).random() != pipeline.data_rng(cfg, 1, 10).random()


# -- command line ----------------------------------------------------------------


def test_cli_experiment(tmp_path, capsys):
    out = tmp_path / "cli"
    code = main(["experiment", "--p", "5", "--n", "30", "--trees", "2", "--draws", "100", "--out", str(out), "--jobs", "1"])
    assert code == 0
    printed = json.loads(capsys.readouterr().out)
    assert len(printed) == 2
    assert main(["evaluate", "--p", "5", "--n", "30", "--trees", "2", "--out", str(out)]) == 0


def test_cli_errors(tmp_path, capsys):
    assert main(["simulate", "--trees", "0", "--out", str(tmp_path)]) == 2
    assert main(["evaluate", "--p", "5", "--n", "30", "--trees", "1", "--out", str(tmp_path / "empty")]) == 1
    assert "missing" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "partialnet", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "experiment" in res.stdout and "PARTIALNET_" in res.stdout


def test_default_cap_grid(tmp_path):
    cfg = ExperimentConfig(cap_sweep=[2, 5, 10, 20], cap_sweep_tenth=True)
    assert cfg.caps_for(50) == [2, 5, 10, 20]
    assert cfg.caps_for(1000) == [2, 5, 10, 20, 100]
    out = tmp_path / "grid"
    code = main(["experiment", "--p", "6", "--n", "30", "--trees", "1", "--draws", "50", "--engine", "classical",
                 "--cap-sweep", "default", "--out", str(out), "--jobs", "1"])
    assert code == 0
    rows = json.loads((out / "summary.json").read_text())["cap_sweep"]
    assert [r["cap"] for r in rows] == [2, 3, 5, 10, 20]
