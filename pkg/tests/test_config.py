import textwrap

import pytest

from lrseg.config import (AnalysisConfig, ConfigError, SolverConfig, config_to_dict,
                          emit_config, parse_config, parse_config_text)
from lrseg.demos import DEMOS, demo

MINIMAL = """\
domain:
  shape: {kind: disk, center: [0.0, 0.0], radius: 1.0}
  h: 0.0625
  R: 0.25
populations:
  - profile: {kind: constant, amplitude: 1.0}
  - profile: {kind: zero}
"""


def test_minimal_config_gets_defaults():
    cfg = parse_config_text(MINIMAL)
    assert cfg.K == 2
    assert cfg.domain.dimension == 2
    assert cfg.solver == SolverConfig()
    assert cfg.analysis == AnalysisConfig()
    assert cfg.eps_start() == 0.25 and cfg.eps_min() == 0.0625


def test_negative_radius_names_key():
    with pytest.raises(ConfigError) as exc:
        parse_config_text(MINIMAL.replace("R: 0.25", "R: -1"))
    assert exc.value.key == "domain.R"
    assert exc.value.line == 4


def test_radius_below_four_cells():
    with pytest.raises(ConfigError, match="4h"):
        parse_config_text(MINIMAL.replace("R: 0.25", "R: 0.125"))


def test_unknown_key_rejected():
    text = MINIMAL + "solver:\n  omega_typo: 1.0\n"
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text)
    assert exc.value.key == "solver.omega_typo"
    assert "unknown key" in str(exc.value)


@pytest.mark.parametrize("extra, key", [
    ("solver:\n  kernel: median\n", "solver.kernel"),
    ("solver:\n  max_iterations: 2.5\n", "solver.max_iterations"),
    ("analysis:\n  tau_rel: yes\n", "analysis.tau_rel"),
    ("output:\n  formats: [xml]\n", "output.formats"),
])
def test_bad_values(extra, key):
    with pytest.raises(ConfigError) as exc:
        parse_config_text(MINIMAL + extra)
    assert exc.value.key.startswith(key)


def test_population_needs_one_source():
    bad = MINIMAL.replace("  - profile: {kind: zero}\n", "  - {}\n")
    with pytest.raises(ConfigError, match="exactly one"):
        parse_config_text(bad)


def test_malformed_yaml():
    with pytest.raises(ConfigError, match="malformed"):
        parse_config_text("domain: [1, 2")
    with pytest.raises(ConfigError, match="empty"):
        parse_config_text("")


def test_scientific_notation_strings():
    cfg = parse_config_text(MINIMAL + "solver:\n  tolerance: 1e7\n")
    assert cfg.solver.tolerance == 1e7


@pytest.mark.parametrize("name", DEMOS)
def test_round_trip(name, tmp_path):
    cfg = demo(name)
    p = tmp_path / "c.yaml"
    p.write_text(emit_config(cfg))
    back = parse_config(p)
    assert config_to_dict(back) == config_to_dict(cfg)
    assert emit_config(back) == emit_config(cfg)


def test_unknown_demo():
    with pytest.raises(ValueError):
        demo("nope")


def test_csv_path_resolved_relative_to_config(tmp_path):
    (tmp_path / "u.csv").write_text("x,y,value\n")
    text = MINIMAL.replace("  - profile: {kind: zero}\n", "  - csv: u.csv\n")
    p = tmp_path / "c.yaml"
    p.write_text(textwrap.dedent(text))
    cfg = parse_config(p)
    assert cfg.populations[1].csv.endswith("u.csv")
