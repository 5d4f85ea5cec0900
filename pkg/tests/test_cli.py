import json

import pytest

from fracdiss.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main, run_config, verify_all
from fracdiss.fieldio import field_from_csv, read_field
from fracdiss.runner import ConfigError, apply_override, validate

POINT = {"kind": "capacity-bracket", "n": 1, "alpha": 0.5, "p": 2, "q": 2, "gap_tol": 1e-6,
         "grid": {"L": 4, "N": 32, "T": 1, "M": 8}, "set": {"kind": "point", "k": 4, "index": [16]}}

SCALING = {"kind": "capacity-scaling", "n": 1, "alpha": 0.25, "p": 2, "q": 2, "radii": [1, 0.5, 0.25, 0.125]}


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_run_writes_artifacts(tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(_write(tmp_path, POINT)), "--out", str(out)]) == EXIT_OK
    for name in ("results.json", "verdict.json", "provenance.json"):
        assert (out / name).exists()
    assert json.loads((out / "results.json").read_text())["config"] == POINT
    assert json.loads((out / "verdict.json").read_text())["verdict"] == "PASS"


def test_missing_field_is_config_error(tmp_path, capsys):
    cfg = {k: v for k, v in POINT.items() if k != "q"}
    assert main(["run", str(_write(tmp_path, cfg))]) == EXIT_CONFIG
    assert "q" in capsys.readouterr().out
    with pytest.raises(ConfigError) as err:
        validate(cfg)
    assert err.value.field == "q"


def test_randomized_kinds_need_seed():
    cfg = {"kind": "holder", "n": 1, "alpha": 0.5, "p": 4, "q": 4,
           "grid": {"L": 8, "N": 64, "T": 4, "M": 32}, "base_point": {"t": 2.0, "x": [0.0]}}
    with pytest.raises(ConfigError) as err:
        validate(cfg)
    assert err.value.field == "seed"


def test_bad_values_are_config_errors(tmp_path):
    assert run_config(dict(POINT, n=3))[0] == EXIT_CONFIG
    assert run_config(dict(POINT, kind="nope"))[0] == EXIT_CONFIG
    assert run_config(dict(POINT, p=0.5))[0] == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", str(bad)]) == EXIT_CONFIG


def test_reruns_are_byte_identical(tmp_path):
    cfg = _write(tmp_path, SCALING)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(cfg), "--out", str(a)]) == EXIT_OK
    assert main(["run", str(cfg), "--out", str(b)]) == EXIT_OK
    for name in ("results.json", "results.csv", "verdict.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    first = (a / "results.csv").read_text().splitlines()[0]
    assert json.loads(first[2:]) == SCALING


def test_set_override(tmp_path):
    out = tmp_path / "o"
    cfg = _write(tmp_path, POINT)
    assert main(["run", str(cfg), "--set", "set.index=[10]", "--set", "grid.N=64", "--out", str(out)]) == EXIT_OK
    used = json.loads((out / "results.json").read_text())["config"]
    assert used["set"]["index"] == [10] and used["grid"]["N"] == 64


def test_apply_override_parsing():
    cfg = {"a": {"b": 1}}
    apply_override(cfg, "a.c.d=2.5")
    apply_override(cfg, "name=hello")
    assert cfg == {"a": {"b": 1, "c": {"d": 2.5}}, "name": "hello"}
    with pytest.raises(ConfigError):
        apply_override(cfg, "novalue")
    with pytest.raises(ConfigError):
        apply_override(cfg, "a.b.c=1")


def test_empty_manifest(tmp_path, capsys):
    path = _write(tmp_path, {"experiments": []}, "m.json")
    assert main(["verify", str(path)]) == EXIT_OK
    assert "0/0" in capsys.readouterr().out


def test_wrong_expectation_fails(tmp_path):
    manifest = {"experiments": [{"name": "scaling", "anchor": "power law", "config": SCALING,
                                 "expect": {"verdict": "PASS",
                                            "values": {"fitted_exponent": {"value": 0.9, "rel_tol": 0.1}}}}]}
    lines = []

    class Sink:
        def write(self, s):
            lines.append(s)

    assert verify_all(manifest, stream=Sink()) == EXIT_FAIL
    assert any("MISMATCH" in s for s in lines)


def test_manifest_with_relative_config(tmp_path, capsys):
    _write(tmp_path, POINT, "point.json")
    path = _write(tmp_path, {"experiments": [{"name": "pt", "config": "point.json"}]}, "m.json")
    assert main(["verify", str(path), "--out", str(tmp_path / "runs")]) == EXIT_OK
    assert (tmp_path / "runs" / "pt" / "verdict.json").exists()


def test_failing_check_exits_one(tmp_path):
    cfg = dict(SCALING, tol=1e-9)
    code, verdict = run_config(cfg)
    assert code == EXIT_FAIL and verdict["verdict"] == "FAIL"


def test_dump_kernel(tmp_path):
    b, c = tmp_path / "k.bin", tmp_path / "k.csv"
    assert main(["dump-kernel", "0.5", "1.0", "1", "32", "512", "--out", str(b)]) == EXIT_OK
    assert main(["dump-kernel", "0.5", "1.0", "1", "32", "512", "--out", str(c)]) == EXIT_OK
    fb, extra = read_field(b)
    fc, _ = field_from_csv(c.read_text())
    assert (fb.values == fc.values).all()
    assert extra["alpha"] == 0.5 and abs(extra["total_mass"] - 1) < 1e-6


def test_dump_kernel_guard(tmp_path):
    assert main(["dump-kernel", "0.25", "1e-4", "1", "32", "64", "--out", str(tmp_path / "k.bin")]) == EXIT_CONFIG
