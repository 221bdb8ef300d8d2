import hashlib
import json
import os

import numpy as np
import pytest

from wecfarm import cli, climate, optimize, surrogate
from wecfarm.dynamics import PtoSettings
from wecfarm.hydro import Environment, FrequencyGrid, ReferenceProvider, WecGeometry
from wecfarm.mbe import Layout

DATA = os.path.join(os.path.dirname(__file__), "..", "data")


def sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


@pytest.fixture(scope="module")
def site_path(tmp_path_factory):
    out = tmp_path_factory.mktemp("site")
    rc = cli.main([
        "sites", "build",
        "--records", os.path.join(DATA, "site_alpha.csv"),
        "--config", os.path.join(DATA, "site_alpha_config.json"),
        "--out-dir", str(out),
    ])
    assert rc == 0
    return str(out / "alpha.json")


@pytest.fixture(scope="module")
def design_path(tmp_path_factory):
    design = optimize.DesignPoint(
        geometry=WecGeometry(radius=3.0, slenderness=1.5),
        pto=PtoSettings(stiffness=-6e4, damping=8e4),
        layout=Layout([[0.0, 0.0], [42.0, 16.0], [88.0, -24.0]]),
        site_id="alpha",
    )
    path = tmp_path_factory.mktemp("design") / "design.json"
    with open(path, "w") as fh:
        json.dump(optimize.design_to_dict(design), fh)
    return str(path)


def test_sites_build_outputs_and_manifest(site_path):
    out = os.path.dirname(site_path)
    site = climate.load_site(site_path)
    assert site.site_id == "alpha"
    assert site.probability.shape == (20, 20)
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    assert manifest["command"] == "sites build"
    records = os.path.join(DATA, "site_alpha.csv")
    recorded = {os.path.basename(k): v for k, v in manifest["inputs"].items()}
    assert recorded["site_alpha.csv"] == sha256(records)
    assert any(p.endswith("alpha_probability.svg") for p in manifest["outputs"])
    # exactly one manifest in the run directory
    assert sum(f == "manifest.json" for f in os.listdir(out)) == 1


def test_sites_build_bimodal_record_set(tmp_path):
    rc = cli.main([
        "sites", "build",
        "--records", os.path.join(DATA, "site_bravo.csv"),
        "--config", os.path.join(DATA, "site_bravo_config.json"),
        "--out-dir", str(tmp_path),
    ])
    assert rc == 0
    site = climate.load_site(str(tmp_path / "bravo.json"))
    p = site.probability
    interior = p[1:-1, 1:-1]
    neighbors = [
        p[1 + di : p.shape[0] - 1 + di, 1 + dj : p.shape[1] - 1 + dj]
        for di in (-1, 0, 1)
        for dj in (-1, 0, 1)
        if (di, dj) != (0, 0)
    ]
    is_peak = np.all([interior > nb for nb in neighbors], axis=0)
    peaks = is_peak & (interior > 0.2 * p.max())
    assert peaks.sum() == 2


def test_sites_build_malformed_csv(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("hs_m,tp_s\n1.0,notanumber\n")
    rc = cli.main([
        "sites", "build", "--records", str(bad),
        "--config", os.path.join(DATA, "site_alpha_config.json"),
        "--out-dir", str(tmp_path / "run"),
    ])
    assert rc == 1
    assert capsys.readouterr().err.startswith("error:")


def test_usage_error_maps_to_validation_exit(capsys):
    assert cli.main(["sites", "build", "--no-such-flag"]) == 1
    assert cli.main(["--help"]) == 0
    capsys.readouterr()


def test_missing_site_file_is_validation_error(design_path, tmp_path, capsys):
    rc = cli.main([
        "eval", "--design", design_path, "--site", str(tmp_path / "nope.json"),
        "--out-dir", str(tmp_path / "run"),
    ])
    assert rc == 1
    assert "site file not found" in capsys.readouterr().err


def test_eval_prints_result_and_writes_manifest(site_path, design_path, tmp_path, capsys):
    rc = cli.main([
        "eval", "--design", design_path, "--site", site_path,
        "--out-dir", str(tmp_path),
    ])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["p_v"] > 0 and doc["feasible"] is True
    on_disk = json.load(open(tmp_path / "evaluation.json"))
    assert on_disk == doc
    manifest = json.load(open(tmp_path / "manifest.json"))
    assert str(tmp_path / "evaluation.json") in manifest["outputs"]


def test_out_root_env_var(site_path, design_path, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ROOT_ENV, str(tmp_path))
    monkeypatch.chdir(tmp_path)
    rc = cli.main(["eval", "--design", design_path, "--site", site_path])
    assert rc == 0
    assert (tmp_path / "eval" / "evaluation.json").exists()


def _run_tiny_study(site_path, out, seed=None, study="II"):
    cfg = {
        "study": study,
        "n_devices": 3,
        "ga": {"population": 4, "generations": 2, "seed": 9},
    }
    cfg_path = os.path.join(out, "study.json")
    os.makedirs(out, exist_ok=True)
    with open(cfg_path, "w") as fh:
        json.dump(cfg, fh)
    argv = ["optimize", "--config", cfg_path, "--site", site_path, "--out-dir", out]
    if seed is not None:
        argv += ["--seed", str(seed)]
    return cli.main(argv)


def test_optimize_run_artifacts(site_path, tmp_path, capsys):
    out = str(tmp_path / "run")
    assert _run_tiny_study(site_path, out) == 0
    capsys.readouterr()
    best = json.load(open(os.path.join(out, "best_design.json")))
    design = optimize.design_from_dict(best)
    assert design.layout.n == 3
    assert best["evaluation"]["feasible"] is True
    with open(os.path.join(out, "history.csv")) as fh:
        lines = fh.read().strip().splitlines()
    assert lines[0].split(",")[0] == "generation"
    assert len(lines) == 1 + 2  # header plus one row per generation
    for name in ("layout.svg", "convergence.svg", "config_snapshot.json", "manifest.json"):
        assert os.path.exists(os.path.join(out, name)), name


def test_optimize_rerun_is_numerically_identical(site_path, tmp_path, capsys):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    assert _run_tiny_study(site_path, a) == 0
    assert _run_tiny_study(site_path, b) == 0
    capsys.readouterr()
    for name in ("history.csv", "best_design.json", "layout.svg", "convergence.svg"):
        assert open(os.path.join(a, name)).read() == open(os.path.join(b, name)).read(), name


def test_optimize_seed_flag_overrides_config(site_path, tmp_path, capsys):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    assert _run_tiny_study(site_path, a, seed=9) == 0
    assert _run_tiny_study(site_path, b, seed=10) == 0
    capsys.readouterr()
    assert json.load(open(os.path.join(a, "best_design.json")))["seed"] == 9
    assert json.load(open(os.path.join(b, "best_design.json")))["seed"] == 10


def test_optimize_study_control_mismatch_is_config_error(site_path, tmp_path, capsys):
    cfg = {
        "study": "III",
        "n_devices": 3,
        "fixed_control": [-6e4, 8e4],
        "ga": {"population": 4, "generations": 1},
    }
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps(cfg))
    rc = cli.main([
        "optimize", "--config", str(cfg_path), "--site", site_path,
        "--out-dir", str(tmp_path / "run"),
    ])
    assert rc == 1
    assert capsys.readouterr().err.startswith("error:")


def test_benchmark_cheating_is_exactly_zero(site_path, tmp_path, capsys):
    cfg = tmp_path / "bench.json"
    cfg.write_text(json.dumps({"n": 100, "n_devices": 3, "seed": 5}))
    out = str(tmp_path / "run")
    rc = cli.main([
        "analyze", "benchmark", "--cheat", "--config", str(cfg),
        "--site", site_path, "--out-dir", out,
    ])
    assert rc == 0
    capsys.readouterr()
    doc = json.load(open(os.path.join(out, "benchmark.json")))
    assert doc["percentiles"]["99"] == 0.0
    assert doc["skipped"] == 0
    with open(os.path.join(out, "errors.csv")) as fh:
        rows = fh.read().strip().splitlines()
    assert len(rows) == 101
    assert os.path.exists(os.path.join(out, "error_histogram.svg"))
    assert os.path.exists(os.path.join(out, "scatter.svg"))


def test_benchmark_without_models_is_config_error(site_path, tmp_path, capsys):
    rc = cli.main([
        "analyze", "benchmark", "--provider", "surrogate",
        "--site", site_path, "--out-dir", str(tmp_path),
    ])
    assert rc == 1
    assert "--models" in capsys.readouterr().err


def test_random_layouts_deterministic(site_path, design_path, tmp_path, capsys):
    outs = []
    for name in ("a", "b"):
        out = str(tmp_path / name)
        rc = cli.main([
            "analyze", "random-layouts", "--design", design_path,
            "--site", site_path, "--n", "100", "--seed", "2", "--out-dir", out,
        ])
        assert rc == 0
        outs.append(json.load(open(os.path.join(out, "random_layouts.json"))))
    capsys.readouterr()
    assert outs[0] == outs[1]
    assert 0.0 <= outs[0]["percentile"] <= 100.0
    assert outs[0]["n"] == 100


def test_sensitivity_artifacts(site_path, design_path, tmp_path, capsys):
    out = str(tmp_path / "run")
    rc = cli.main([
        "analyze", "sensitivity", "--design", design_path, "--site", site_path,
        "--wec", "1", "--resolution", "10", "--out-dir", out,
    ])
    assert rc == 0
    capsys.readouterr()
    doc = json.load(open(os.path.join(out, "sensitivity.json")))
    assert len(doc["values"]) == 10 and len(doc["values"][0]) == 10
    assert doc["argmax_offset"] >= 0.0
    assert os.path.exists(os.path.join(out, "sensitivity.svg"))


def test_surrogate_train_writes_models(tmp_path, monkeypatch, capsys):
    grid = FrequencyGrid.default(count=30)
    env = Environment()
    oracle = ReferenceProvider()
    rng = np.random.default_rng(3)
    tiny = {}
    for kind in ("single", "pair"):
        inputs = surrogate.sample_inputs(kind, 60, rng)
        ids = (
            surrogate.SINGLE_TARGET_IDS if kind == "single" else surrogate.PAIR_TARGET_IDS
        )
        datasets = {
            tid: surrogate.Dataset(
                tid, inputs,
                surrogate.label_inputs(tid, inputs, grid, env, oracle),
                grid, env,
            )
            for tid in ids
        }
        config = surrogate.CommitteeConfig(hidden=(8, 8), epochs=10, round_epochs=5, min_samples=10)
        for tid in ids:
            tiny[tid] = surrogate.train_committee(datasets[tid], config)

    monkeypatch.setattr(
        surrogate, "train_standard_committees", lambda *a, **k: tiny
    )
    out = str(tmp_path / "models")
    rc = cli.main(["surrogate", "train", "--out-dir", out])
    assert rc == 0
    capsys.readouterr()
    for tid in surrogate.ALL_TARGET_IDS:
        assert os.path.exists(os.path.join(out, f"committee_{tid}.json")), tid
        assert os.path.exists(os.path.join(out, f"dataset_{tid}.csv")), tid
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    assert len(manifest["outputs"]) == 20

    # under-trained committees must fail the validation gate
    rc = cli.main([
        "surrogate", "validate", "--models", out, "--out-dir", str(tmp_path / "val"),
    ])
    assert rc == 2
    assert "above the" in capsys.readouterr().err


def test_surrogate_validate_cheat_is_zero(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"frequency_count": 30}))
    out = str(tmp_path / "run")
    rc = cli.main([
        "surrogate", "validate", "--cheat", "--config", str(cfg), "--out-dir", out,
    ])
    assert rc == 0
    capsys.readouterr()
    doc = json.load(open(os.path.join(out, "validation.json")))
    assert doc["failed"] == []
    assert all(row["mean_mse"] == 0.0 for row in doc["maps"])
    assert len(doc["maps"]) == 10
