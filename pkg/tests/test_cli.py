import json

import numpy as np
import pytest

from hyperfine.cli import (
    CHECK_KEYS,
    COMMANDS,
    REPORT_KEYS,
    format_float,
    main,
    parse_config,
    run,
    write_outputs,
)
from hyperfine.errors import ConfigInvalid

E1 = {"1": [[1.0]]}
A = np.array([[0.5, 0.2], [0.0, -0.3]])
TUPLE = {"0": A.tolist(), "1": (0.3 * np.eye(2) + 1.2 * A).tolist()}

CONFIGS = {
    "verify-fueter-sce": {"n": 3, "seeds": ["z^2"], "points": 10},
    "verify-chains": {"n": 3, "seeds": ["z^3"], "points": 5},
    "verify-kernels": {"n": 5, "points": 5},
    "s-spectrum": {"n": 3, "T": E1},
    "calculus-compare": {"n": 3, "f": "z^2", "T": E1},
    "quadrature-study": {"n": 3, "T": TUPLE},
}


def write(tmp_path, cfg, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def test_config_defaults():
    cfg = parse_config({"n": 5}, "verify-kernels")
    assert cfg.command == "verify-kernels" and cfg.n == 5
    assert cfg.tolerance("residual") == 1e-10
    q = parse_config({"T": E1}, "quadrature-study")
    assert q.nodes == [32, 64, 128, 256, 512] and q.f == "exp"


def test_config_field_errors():
    raw = {
        "n": 4,
        "seeds": ["sin"],
        "T": [[[1.0]], [[1.0, 2.0]]],
        "contour": {"nodes": 100, "radii": [-1]},
        "tolerances": {"residual": 0},
        "bogus": 1,
        "rng_seed": -3,
    }
    with pytest.raises(ConfigInvalid) as info:
        parse_config(raw, "calculus-compare")
    errors = info.value.errors
    for key in ("n", "seeds", "T", "contour.nodes", "contour.radii", "tolerances.residual", "bogus", "rng_seed"):
        assert key in errors
    assert "contour.nodes" in str(info.value)


@pytest.mark.parametrize("N, ok", [(16, False), (32, True), (48, False), (4096, True), (8192, False)])
def test_node_counts(N, ok):
    raw = {"T": E1, "contour": {"nodes": N}}
    if ok:
        assert parse_config(raw, "calculus-compare").nodes == [N]
    else:
        with pytest.raises(ConfigInvalid):
            parse_config(raw, "calculus-compare")


def test_matrix_validation():
    with pytest.raises(ConfigInvalid, match="different sizes"):
        parse_config({"T": {"0": [[1.0]], "1": [[1.0, 0.0], [0.0, 1.0]]}}, "s-spectrum")
    with pytest.raises(ConfigInvalid, match="square"):
        parse_config({"T": {"0": [[1.0, 2.0]]}}, "s-spectrum")
    with pytest.raises(ConfigInvalid, match="expected 4 matrices"):
        parse_config({"T": [[[1.0]]]}, "s-spectrum")
    with pytest.raises(ConfigInvalid, match="required"):
        parse_config({}, "s-spectrum")
    cfg = parse_config({"T": E1}, "s-spectrum")
    assert cfg.T == [[[0.0]], [[1.0]], [[0.0]], [[0.0]]]


def test_command_mismatch():
    with pytest.raises(ConfigInvalid, match="command"):
        parse_config({"command": "s-spectrum", "T": E1}, "verify-kernels")


@pytest.mark.parametrize("command", COMMANDS)
def test_report_schema_is_fixed(command):
    report, _ = run(parse_config(CONFIGS[command], command))
    assert tuple(report) == REPORT_KEYS
    assert report["checks"]
    for check in report["checks"]:
        assert tuple(check) == CHECK_KEYS
    assert set(report["environment"]) == {"precision", "version", "numpy", "python"}
    assert set(report["timing"]) == {"seconds"}
    assert set(report["config"]) == set(parse_config(CONFIGS[command], command).echo())


def test_fueter_sce_example():
    report, _ = run(parse_config({"n": 3, "seeds": ["z^2"]}, "verify-fueter-sce"))
    assert len(report["checks"]) == 1
    c = report["checks"][0]
    assert c["name"] == "D∘T_FS2 residual" and c["tolerance"] == 1e-9 and c["pass"]


def test_spectrum_csv_example(tmp_path):
    code = main(["s-spectrum", "--config", str(write(tmp_path, {"n": 3, "T": E1})), "--out", str(tmp_path / "o")])
    assert code == 0
    rows = (tmp_path / "o" / "s-spectrum.csv").read_text().splitlines()
    assert rows == ["center,radius,multiplicity", "0,1,1"]


def test_calculus_compare_example():
    report, _ = run(parse_config({"n": 3, "f": "z^2", "T": E1}, "calculus-compare"))
    c = report["checks"][0]
    assert c["name"] == "|contour - direct|" and c["max_residual"] < 1e-8 and report["passed"]


def test_calculus_compare_independence_check():
    cfg = {"n": 3, "f": "z^3", "T": TUPLE, "contour": {"planes": [[1, 0, 0], [0, 1, 1]], "radii": [1.5, 3.0]}}
    report, _ = run(parse_config(cfg, "calculus-compare"))
    names = [c["name"] for c in report["checks"]]
    assert names == ["|contour - direct|", "contour independence"]
    assert report["passed"]


def test_quadrature_csv(tmp_path):
    code = main(["quadrature-study", "--config", str(write(tmp_path, CONFIGS["quadrature-study"])), "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "quadrature-study.csv").read_text().splitlines()
    assert lines[0] == "N,error"
    assert [int(r.split(",")[0]) for r in lines[1:]] == [32, 64, 128, 256, 512]
    errors = [float(r.split(",")[1]) for r in lines[1:]]
    assert errors[0] > errors[1] > 1e-14


def test_module_error_becomes_failed_check(tmp_path):
    bad = {"n": 3, "T": {"0": [[0.0, 1.0], [0.0, 0.0]], "1": [[0.0, 0.0], [1.0, 0.0]]}}
    report, _ = run(parse_config(bad, "calculus-compare"))
    c = report["checks"][0]
    assert not c["pass"] and c["max_residual"] is None and c["error"].startswith("NonCommuting")
    code = main(["calculus-compare", "--config", str(write(tmp_path, bad)), "--out", str(tmp_path)])
    assert code == 1


def test_failing_check_sets_exit_code(tmp_path):
    cfg = {"n": 3, "seeds": ["z^3"], "points": 5, "tolerances": {"residual": 1e-30}}
    assert main(["verify-fueter-sce", "--config", str(write(tmp_path, cfg)), "--out", str(tmp_path)]) == 1


def test_invalid_config_exit_code(tmp_path, capsys):
    assert main(["s-spectrum", "--config", str(write(tmp_path, {"n": 2})), "--out", str(tmp_path)]) == 2
    assert "n: must be 3 or 5" in capsys.readouterr().err
    (tmp_path / "broken.json").write_text("{")
    assert main(["s-spectrum", "--config", str(tmp_path / "broken.json")]) == 2


def test_rng_seed_override(tmp_path):
    p = write(tmp_path, CONFIGS["verify-fueter-sce"])
    main(["verify-fueter-sce", "--config", str(p), "--out", str(tmp_path / "a"), "--rng-seed", "7"])
    report = json.loads((tmp_path / "a" / "verify-fueter-sce.json").read_text())
    assert report["config"]["rng_seed"] == 7


def _numeric(path):
    report = json.loads(path.read_text())
    report.pop("timing")
    return json.dumps(report, sort_keys=True).encode()


@pytest.mark.parametrize("command", ["verify-chains", "quadrature-study", "s-spectrum"])
def test_determinism(tmp_path, monkeypatch, command):
    p = write(tmp_path, CONFIGS[command])
    main([command, "--config", str(p), "--out", str(tmp_path / "a"), "--rng-seed", "11"])
    monkeypatch.setenv("HYPERFINE_THREADS", "4")
    main([command, "--config", str(p), "--out", str(tmp_path / "b"), "--rng-seed", "11"])
    assert _numeric(tmp_path / "a" / f"{command}.json") == _numeric(tmp_path / "b" / f"{command}.json")


def test_different_seeds_change_samples(tmp_path):
    a, _ = run(parse_config({**CONFIGS["verify-fueter-sce"], "seeds": ["exp"]}, "verify-fueter-sce", 1))
    b, _ = run(parse_config({**CONFIGS["verify-fueter-sce"], "seeds": ["exp"]}, "verify-fueter-sce", 2))
    assert a["checks"][0]["max_residual"] != b["checks"][0]["max_residual"]


def test_format_float():
    assert format_float(0.0) == "0"
    assert format_float(-0.0) == "0"
    assert format_float(1.0) == "1"
    assert format_float(3) == "3"
    assert format_float(0.1) == "0.1"
    assert float(format_float(1 / 3)) == 1 / 3
    assert format_float(1e-20) == "1e-20"


def test_nonfinite_values_serialize(tmp_path):
    report = {"command": "s-spectrum", "checks": [{"max_residual": float("inf")}]}
    from hyperfine.cli import _json_safe

    paths = write_outputs(_json_safe(report), [], tmp_path)
    assert json.loads(paths[0].read_text())["checks"][0]["max_residual"] == "inf"


@pytest.mark.parametrize("command", COMMANDS)
def test_report_matches_golden_schema(command):
    from pathlib import Path

    golden = json.loads((Path(__file__).parent / "golden" / "report_schema.json").read_text(encoding="utf-8"))[command]
    report, _ = run(parse_config(CONFIGS[command], command))
    assert list(report) == golden["report"]
    assert list(report["config"]) == golden["config"]
    assert [list(c) for c in report["checks"]] == [golden["check"]] * len(report["checks"])
    assert [c["name"] for c in report["checks"]] == golden["check_names"]
    assert list(report["environment"]) == golden["environment"]
    assert list(report["timing"]) == golden["timing"]
