import json
import math

import numpy as np
import pytest

from fyonline.cli import main

LN2 = math.log(2.0)


def _write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _demo_cfg(T=200, seed=0, **extra):
    cfg = {
        "triple": {"name": "multiclass", "d": 3},
        "learner": {"learner": "ogd_const"},
        "stream": {"kind": "linear_model", "n_features": 4, "u_scale": 1.0},
        "T": T,
        "seed": seed,
        "C": 1.0,
    }
    cfg.update(extra)
    return cfg


def test_run_writes_artifacts_and_bound(tmp_path, capsys):
    cfg_path = _write_cfg(tmp_path, _demo_cfg())
    out = tmp_path / "out"
    code = main(["run", "--config", cfg_path, "--out", str(out)])
    captured = capsys.readouterr()
    assert code == 0
    assert (out / "trace.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    bound = summary["bound_constants"]["expected_regret_bound"]
    # C=1, unit-norm planted scorer
    assert bound == pytest.approx(1.0 / (2.0 * (1.0 - LN2) * LN2), rel=1e-9)
    assert "config hash" in captured.out
    assert "expected-regret bound" in captured.out


def test_run_empty_horizon(tmp_path):
    cfg_path = _write_cfg(tmp_path, _demo_cfg(T=0))
    out = tmp_path / "out"
    code = main(["run", "--config", cfg_path, "--out", str(out)])
    assert code == 0
    lines = (out / "trace.csv").read_text().strip().split("\n")
    assert len(lines) == 1  # header only


def test_run_rejects_gated_configuration(tmp_path, capsys):
    cfg = {
        "triple": {"name": "multilabel", "d": 16},
        "learner": {"learner": "ogd_const", "eta": 0.1},
        "T": 10,
        "seed": 0,
    }
    cfg_path = _write_cfg(tmp_path, cfg)
    code = main(["run", "--config", cfg_path, "--out", str(tmp_path / "o")])
    captured = capsys.readouterr()
    assert code == 2
    assert "lambda > 4*gamma/nu" in captured.err


def test_run_missing_config(tmp_path, capsys):
    code = main(["run", "--config", str(tmp_path / "absent.json")])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_run_json_format(tmp_path):
    cfg_path = _write_cfg(tmp_path, _demo_cfg(T=20))
    out = tmp_path / "out"
    code = main(["run", "--config", cfg_path, "--out", str(out), "--format", "json"])
    assert code == 0
    data = json.loads((out / "trace.json").read_text())
    assert len(data) == 20
    assert data[0]["t"] == 1


def test_run_seed_override_changes_the_hash(tmp_path, capsys):
    cfg_path = _write_cfg(tmp_path, _demo_cfg(T=20, seed=0))
    main(["run", "--config", cfg_path, "--out", str(tmp_path / "a")])
    first = capsys.readouterr().out
    main(["run", "--config", cfg_path, "--out", str(tmp_path / "b"), "--seed", "1"])
    second = capsys.readouterr().out
    h1 = [l for l in first.splitlines() if l.startswith("config hash")][0]
    h2 = [l for l in second.splitlines() if l.startswith("config hash")][0]
    assert h1 != h2


def test_reruns_are_byte_identical(tmp_path):
    cfg_path = _write_cfg(tmp_path, _demo_cfg(T=100))
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", cfg_path, "--out", str(a)]) == 0
    assert main(["run", "--config", cfg_path, "--out", str(b)]) == 0
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()


def test_summary_reproduces_the_config_hash(tmp_path, capsys):
    cfg = _demo_cfg(T=30)
    cfg_path = _write_cfg(tmp_path, cfg)
    out = tmp_path / "out"
    main(["run", "--config", cfg_path, "--out", str(out)])
    from fyonline import config_hash

    summary = json.loads((out / "summary.json").read_text())
    assert summary["metadata"]["config_hash"] == config_hash(cfg)


def test_constants_multiclass(capsys):
    code = main(["constants", "--triple", "multiclass", "--d", "2"])
    out = capsys.readouterr().out
    assert code == 0
    assert "0.30685281944" in out
    assert "default_eta" in out
    assert "2.35079319708" in out
    assert "enumeration_check" in out


def test_constants_reports_gate_failure(capsys):
    # informational: only unknown triples are usage errors
    code = main(["constants", "--triple", "permutation", "--d", "3"])
    out = capsys.readouterr().out
    assert code == 0
    assert "FAILS" in out
    assert "lambda > 4*gamma/nu" in out


def test_constants_unknown_triple(capsys):
    code = main(["constants", "--triple", "mystery"])
    assert code == 2


def test_verify_oracles_through_the_cli(capsys):
    code = main(["verify", "oracles"])
    out = capsys.readouterr().out
    assert code == 0
    assert "suite oracles: PASS" in out


def test_verify_unknown_suite_is_a_usage_error():
    with pytest.raises(SystemExit):
        main(["verify", "everything"])


def test_sweep_runs_the_grid(tmp_path):
    sweep = {
        "base": _demo_cfg(T=20),
        "grid": {"seed": [0, 1]},
    }
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(sweep))
    out = tmp_path / "runs"
    code = main(["sweep", "--config", str(path), "--out", str(out)])
    assert code == 0
    subdirs = sorted(p.name for p in out.iterdir())
    assert len(subdirs) == 2
    for sub in subdirs:
        assert (out / sub / "summary.json").exists()
