import json
import subprocess
import sys

import pytest

from lrseg.cli import EXIT_CHECKS, EXIT_CONFIG, EXIT_OK, EXIT_STAGE, main
from lrseg.config import emit_config, parse_config
from lrseg.demos import two_slab_2d


@pytest.fixture
def small_config(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(emit_config(two_slab_2d(h=1 / 32, amplitude=1e4)))
    return p


def test_demo_emit(tmp_path):
    out = tmp_path / "d.yaml"
    assert main(["demo", "four_quadrant_2d", "--kernel", "sup", "--emit", str(out)]) == EXIT_OK
    cfg = parse_config(out)
    assert cfg.K == 4 and cfg.solver.kernel == "sup"


def test_demo_stdout(capsys):
    assert main(["demo", "two_slab_3d"]) == EXIT_OK
    assert "dimension: 3" in capsys.readouterr().out


def test_unknown_demo_exits_2(capsys):
    assert main(["demo", "nope"]) == EXIT_CONFIG
    assert "known demos" in capsys.readouterr().err


def test_bad_config_exits_2(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("domain: {h: 0.1}\npopulations: []\n")
    assert main(["validate", str(p)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_bad_threads(small_config):
    assert main(["validate", str(small_config), "--threads", "0"]) == EXIT_CONFIG


def test_verify_without_analyze(small_config, tmp_path, capsys):
    assert main(["verify", str(small_config), "--out", str(tmp_path / "o")]) == EXIT_STAGE
    assert "run 'analyze' first" in capsys.readouterr().err


def test_analyze_without_solve(small_config, tmp_path, capsys):
    assert main(["analyze", str(small_config), "--out", str(tmp_path / "o")]) == EXIT_STAGE
    assert "run 'solve' first" in capsys.readouterr().err


def _manifest(d):
    return json.loads((d / "manifest.json").read_text())


def test_pipeline_artifacts_and_determinism(small_config, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    rc = main(["run", str(small_config), "--out", str(a)])
    assert rc in (EXIT_OK, EXIT_CHECKS)
    m = _manifest(a)
    paths = {x["path"] for x in m["artifacts"]}
    assert len(paths) >= 6
    for rel in ("config.yaml", "diagnostics.csv", "fields/u_0.csv", "classification.csv",
                "checks.json", "structure_summary.json"):
        assert rel in paths and (a / rel).exists()
    assert set(m["timings"]) == {"validate", "solve", "analyze", "verify"}
    assert rc == (EXIT_CHECKS if m["checks_passed"] is False else EXIT_OK)

    assert main(["run", str(small_config), "--out", str(b)]) == rc
    assert _manifest(b)["artifacts"] == m["artifacts"]
    assert _manifest(b)["config_hash"] == m["config_hash"]


def test_stagewise_matches_run(small_config, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["run", str(small_config), "--out", str(a)])
    for stage in ("validate", "solve", "analyze", "verify"):
        main([stage, str(small_config), "--out", str(b)])
    sums = lambda d: {x["path"]: x["sha256"] for x in _manifest(d)["artifacts"]}
    assert sums(a) == sums(b)


def test_json_tables(small_config, tmp_path):
    main(["run", str(small_config), "--out", str(tmp_path), "--format", "json",
          "--stages", "solve"])
    rows = json.loads((tmp_path / "diagnostics.json").read_text())
    assert rows and set(rows[0]) == {"eps", "residual", "iterations", "overlap",
                                     "min_distance"}


def test_out_dir_env(small_config, tmp_path, monkeypatch):
    monkeypatch.setenv("LRSEG_OUT_DIR", str(tmp_path / "env"))
    assert main(["validate", str(small_config)]) == EXIT_OK
    assert (tmp_path / "env" / "validation.json").exists()


def test_console_script_version():
    r = subprocess.run([sys.executable, "-m", "lrseg.cli", "--version"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("lrseg ")
