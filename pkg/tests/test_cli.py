from __future__ import annotations

import json
import subprocess
import sys

import pytest

from heisenberg_pam import cli
from heisenberg_pam.errors import ConfigError


def _run(tmp_path, *args):
    out = tmp_path / "out.json"
    code = cli.main([*args, "--output", str(out)])
    return code, out


def test_heat_eval_at_identity(tmp_path):
    code, out = _run(tmp_path, "heat-eval", "--t", "1", "--point", "0,0,0")
    assert code == 0
    data = json.loads(out.read_text())
    assert data["data"][0]["value"] == pytest.approx(0.0625, rel=1e-6)
    assert data["meta"]["command"] == "heat-eval"
    assert "runtime_ms" not in data["meta"]


def test_multiple_times_and_timings(tmp_path):
    code, out = _run(tmp_path, "heat-eval", "--t", "0.5,2", "--timings")
    data = json.loads(out.read_text())
    assert code == 0 and len(data["data"]) == 2
    assert data["data"][0]["value"] == pytest.approx(0.25, rel=1e-6)
    assert data["meta"]["runtime_ms"] >= 0


def test_alpha_outside_range_exits_2(tmp_path, capsys):
    code, out = _run(tmp_path, "moments-fk", "--alpha", "1.2", "--seed", "1")
    assert code == 2 and not out.exists()
    err = capsys.readouterr().err
    assert "alpha" in err and "(0.5, 1)" in err


def test_randomized_command_needs_seed(tmp_path, capsys):
    code, _ = _run(tmp_path, "bm-sample")
    assert code == 2
    assert "seed" in capsys.readouterr().err


def test_csv_format(tmp_path):
    out = tmp_path / "g.csv"
    assert cli.main(["green-eval", "--alpha", "1.5", "--point", "1,0,0", "--format", "csv", "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# command: ")
    header = [ln for ln in lines if not ln.startswith("#")][0]
    assert header.split(",") == ["alpha", "point", "value"]


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"alpha": 0.6, "samples": 50, "t_values": [0.5]}))
    cfg = cli.build_config("moments-fk", {"alpha": 0.7, "samples": None}, str(cfg_file))
    assert cfg.alpha == 0.7 and cfg.samples == 50 and cfg.t_values == (0.5,)
    assert cli.build_config("mild-solve", {}).steps == 10


def test_config_errors_name_field(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"alpah": 0.6}))
    with pytest.raises(ConfigError) as exc:
        cli.build_config("heat-eval", {}, str(cfg_file))
    assert exc.value.field == "alpah"
    with pytest.raises(ConfigError) as exc:
        cli.build_config("heat-eval", {"point": (0.0, 0.0)})
    assert exc.value.field == "point"
    with pytest.raises(ConfigError) as exc:
        cli.build_config("heat-eval", {"t_values": (-1.0,)})
    assert exc.value.field == "t_values"


def test_bm_sample_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert cli.main(["bm-sample", "--seed", "4", "--samples", "20", "--steps", "16", "--output", str(p)]) == 0
    assert json.loads(a.read_text())["data"] == json.loads(b.read_text())["data"]


def test_verify_all_byte_identical(tmp_path):
    out = tmp_path / "v.json"
    assert cli.main(["verify-all", "--seed", "0", "--output", str(out)]) == 0
    first = out.read_bytes()
    assert cli.main(["verify-all", "--seed", "0", "--output", str(out)]) == 0
    assert out.read_bytes() == first
    assert all(row["passed"] for row in json.loads(first)["data"])


def test_module_entry_point(tmp_path):
    out = tmp_path / "h.json"
    proc = subprocess.run(
        [sys.executable, "-m", "heisenberg_pam", "heat-eval", "--output", str(out)], capture_output=True, text=True
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["data"][0]["value"] == pytest.approx(0.0625, rel=1e-6)
