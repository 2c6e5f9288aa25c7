import json
import os

import numpy as np
import pytest

from fracnorm.domain import DomainSpec, build_domain
from fracnorm.functions import BBM_SET, EQUIVALENCE_SET, function_library
from fracnorm.norms import weighted_lp_norm
from fracnorm.harness import ConfigError, parse_config, run_suite
from fracnorm.cli import main as cli_main


def _base_config(tmp_path, **updates):
    cfg = {
        "domain": {"kind": "unit_square"},
        "resolution": 16,
        "s": [0.5],
        "p": 2.0,
        "alpha": [0.0],
        "tau": [0.25, 0.5, 0.75],
        "functions": ["linear_x1", "sine2d"],
        "lambda_grid": {"count": 6},
        "suites": ["whitney-props"],
        "seed": 42,
        "out_dir": str(tmp_path / "out"),
    }
    cfg.update(updates)
    return cfg


# -- function library ---------------------------------------------------------


def test_library_registrations():
    lib = function_library()
    for fid in EQUIVALENCE_SET + BBM_SET + ("const_1", "dist_pow_m01"):
        assert fid in lib


def test_library_values(square16):
    lib = function_library()
    one = lib["const_1"].evaluate(square16, np.array([0.3]), np.array([0.9]))
    assert one[0] == 1.0
    dv = lib["dist_pow_1"].evaluate(square16, np.array([0.5]), np.array([0.5]))
    assert dv[0] == 0.5
    osc = lib["osc"].sample(square16)
    assert np.all(np.isfinite(osc.values))


def test_negative_power_finite_and_refinement_stable():
    lib = function_library()
    vals = {}
    for res in (16, 32, 64):
        dom = build_domain(DomainSpec("unit_square"), res)
        d = dom.distance_field()
        f = lib["dist_pow_m01"].sample(dom, d)
        assert np.all(np.isfinite(f.values))
        vals[res] = weighted_lp_norm(f, d, 0.5 * 2.0, 2.0)
    assert vals[32] / vals[64] == pytest.approx(1.0, abs=0.02)


# -- config parsing -----------------------------------------------------------


def test_parse_config_full(tmp_path):
    cfg = parse_config(_base_config(tmp_path))
    assert cfg.domain.kind == "unit_square"
    assert cfg.resolution == 16
    assert cfg.function_ids == ("linear_x1", "sine2d")


def test_parse_config_accepts_inline_resolution(tmp_path):
    raw = _base_config(tmp_path)
    raw["domain"] = {"kind": "power_cusp", "gamma": 2.0, "resolution": 24}
    del raw["resolution"]
    cfg = parse_config(raw)
    assert cfg.resolution == 24 and cfg.domain.gamma == 2.0


@pytest.mark.parametrize("field,value,message", [
    ("functions", [], "no functions selected"),
    ("functions", ["nope"], "unknown function"),
    ("s", [1.5], "'s'"),
    ("p", 0.5, "'p'"),
    ("alpha", [-1], "'alpha'"),
    ("suites", ["bogus"], "unknown suite"),
    ("resolution", 4, "resolution"),
])
def test_parse_config_field_errors(tmp_path, field, value, message):
    raw = _base_config(tmp_path)
    raw[field] = value
    with pytest.raises(ConfigError, match=message):
        parse_config(raw)


def test_parse_config_reports_json_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "domain": {"kind": "unit_square"},\n  broken\n}')
    with pytest.raises(ConfigError, match="line 3"):
        parse_config(path)


def test_parse_config_rejects_unknown_fields(tmp_path):
    raw = _base_config(tmp_path)
    raw["banana"] = 1
    with pytest.raises(ConfigError, match="banana"):
        parse_config(raw)


# -- suites and CLI -----------------------------------------------------------


def test_run_suite_writes_artifacts(tmp_path):
    cfg = parse_config(_base_config(tmp_path, suites=["whitney-props", "lemma31"]))
    status = run_suite(cfg, echo=None)
    assert status == 0
    out = tmp_path / "out"
    assert (out / "whitney-props.csv").exists()
    assert (out / "lemma31.csv").exists()
    summary = (out / "summary.csv").read_text().splitlines()
    assert summary[0] == "suite,assertion,measured,bound,verdict"
    assert all(line.endswith(",pass") for line in summary[1:])


def test_cli_subcommands(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(_base_config(tmp_path)))
    out = str(tmp_path / "cli_out")
    assert cli_main(["domain", "--config", str(cfg_path), "--out", out]) == 0
    assert os.path.exists(os.path.join(out, "distance.csv"))
    assert cli_main(["whitney", "--config", str(cfg_path), "--out", out]) == 0
    assert os.path.exists(os.path.join(out, "whitney.csv"))
    assert cli_main(["seminorm", "--config", str(cfg_path), "--out", out]) == 0
    assert os.path.exists(os.path.join(out, "seminorms.csv"))
    assert cli_main(["kfunc", "--config", str(cfg_path), "--out", out]) == 0
    assert os.path.exists(os.path.join(out, "kcurve_linear_x1_a0.csv"))
    assert cli_main(["bbm", "--config", str(cfg_path), "--out", out]) == 0
    assert os.path.exists(os.path.join(out, "bbm.csv"))
    assert cli_main(["verify", "--config", str(cfg_path), "--out", out]) == 0
    assert os.path.exists(os.path.join(out, "summary.csv"))


def test_cli_rejects_bad_config(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(_base_config(tmp_path, functions=[])))
    assert cli_main(["verify", "--config", str(cfg_path)]) == 2


def test_seed_override_changes_triples(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(_base_config(tmp_path, suites=["lemma31"])))
    out1 = str(tmp_path / "o1")
    out2 = str(tmp_path / "o2")
    assert cli_main(["verify", "--config", str(cfg_path), "--out", out1,
                     "--seed", "1"]) == 0
    assert cli_main(["verify", "--config", str(cfg_path), "--out", out2,
                     "--seed", "2"]) == 0
    a = open(os.path.join(out1, "lemma31.csv")).read()
    b = open(os.path.join(out2, "lemma31.csv")).read()
    assert a != b
