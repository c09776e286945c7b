from __future__ import annotations

import json

import pytest

from cflat.cli import ConfigError, main, parse_config
from cflat.fields import UPoly


def test_parse_config():
    conf = parse_config("family = sim_f2  # comment\nn = 3\na = 1 0 0.5\nB1 = 1\nclaims = c04_* c03_*\n")
    assert conf["family"] == "sim_f2" and conf["n"] == 3
    assert conf["a"] == UPoly((1.0, 0.0, 0.5))
    assert conf["B1"] == UPoly((1.0,))
    assert conf["claims"] == ("c04_*", "c03_*")


@pytest.mark.parametrize("text", ["bogus = 1", "n = three", "a =", "no equals sign"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_invalid_config_key_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("family = sim_f2\nwibble = 2\n")
    assert main(["verify", "--config", str(cfg)]) == 2
    assert "unknown key" in capsys.readouterr().err


def test_usage_error_exit_2():
    assert main(["verify", "--no-such-flag"]) == 2
    assert main([]) == 2


def test_empty_selection(tmp_path):
    out = tmp_path / "r.jsonl"
    assert main(["claims", "--only", "--json", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["total"] == 0


def test_report_format_and_determinism(tmp_path):
    paths = [tmp_path / "a.jsonl", tmp_path / "b.jsonl"]
    for p in paths:
        code = main(["verify", "--family", "sim_f2", "--group", "walker", "--n", "2", "--samples", "5",
                     "--json", str(p)])
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    rows = [json.loads(x) for x in paths[0].read_text().splitlines()]
    claims, summary = rows[:-1], rows[-1]
    assert [r["claim_id"] for r in claims] == sorted(r["claim_id"] for r in claims)
    assert list(claims[0]) == ["claim_id", "family", "n", "samples", "max_residual", "tolerance", "pass",
                               "elapsed_ms", "seed"]
    for r in claims:
        assert r["pass"] == (r["max_residual"] <= r["tolerance"])
        assert r["seed"] == 42
    assert summary["summary"] is True and summary["passed"] == len(claims)


def test_gt_original_must_fail_claim(tmp_path):
    cfg = tmp_path / "gt.cfg"
    cfg.write_text("family = gt_original\nsamples = 10\n")
    out = tmp_path / "gt.jsonl"
    assert main(["verify", "--config", str(cfg), "--json", str(out)]) == 0
    rows = [json.loads(x) for x in out.read_text().splitlines()[:-1]]
    assert [r["claim_id"] for r in rows] == ["c06_weyl_nonzero:gt_original"]
    assert rows[0]["pass"]


def test_failure_exit_1(capsys):
    # an absurd tolerance makes an ordinary claim fail
    assert main(["verify", "--family", "sim_f2", "--group", "weyl", "--n", "2", "--samples", "3",
                 "--tol", "1e-300"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_family_constraint_is_skipped(tmp_path, capsys):
    cfg = tmp_path / "f2.cfg"
    cfg.write_text("family = sim_f2\nn = 2\nB1 = 0\nB2 = 0\n")
    assert main(["verify", "--config", str(cfg), "--group", "scalar", "--samples", "3"]) == 2
    assert "SKIP" in capsys.readouterr().out


def test_config_parameters_are_used(tmp_path, capsys):
    cfg = tmp_path / "f1.cfg"
    cfg.write_text("family = ppwave_f1\nn = 2\na = 2\n")
    assert main(["verify", "--config", str(cfg), "--group", "ricci", "--samples", "5"]) == 0
    assert "c03_ricci:ppwave_f1:n2" in capsys.readouterr().out


def test_holonomy_verb(tmp_path, capsys):
    out = tmp_path / "h.json"
    assert main(["holonomy", "--family", "gt_corrected", "--n", "2", "--count", "5", "--json", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["label"] == "so(1,1)+so(2)"
    assert rep["bracket_closed_dim"] == 2


def test_holonomy_needs_family():
    assert main(["holonomy"]) == 2


@pytest.mark.parametrize("kind", ["gt", "rotation", "gauge"])
def test_transform_verb(kind):
    assert main(["transform", "--kind", kind, "--n", "2", "--samples", "10"]) == 0
