import json
import subprocess
import sys

import pytest

from steinfield import __version__
from steinfield.cli import THREADS_ENV, main
from steinfield.config import SCHEMA, load_config, parse_config
from steinfield.errors import ConfigError


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_defaults_filled_in():
    cfg = parse_config("experiment: kernel\n")
    assert cfg.experiment == "kernel" and cfg.seed == 0
    assert cfg["grid"]["size"] == SCHEMA["grid"]["size"][1]
    assert cfg["sweep"]["n1"] == [8, 64, 512, 4096]


def test_int_promoted_to_float():
    cfg = parse_config("experiment: bounds\nbounds:\n  p: 4\n")
    assert cfg["bounds"]["p"] == 4.0 and isinstance(cfg["bounds"]["p"], float)


@pytest.mark.parametrize("text,line,fragment", [
    ("experiment: kernel\ngrid:\n  sise: 4\n", 3, "unknown key 'grid.sise'"),
    ("experiment: kernel\ngrid:\n  size: -4\n", 3, "'grid.size' must be positive"),
    ("experiment: kernel\n\ngrid:\n  size: four\n", 4, "'grid.size' must be int"),
    ("experiment: kernel\nkernel:\n  type: rbf\n", 3, "must be one of"),
    ("experiment: kernel\nsweep:\n  n1:\n    - 8\n    - x\n", 5, "'sweep.n1[1]' must be a number"),
    ("experiment: kernel\ngrid: [1, 2\n", 3, "syntax error"),
    ("experiment: nothing\n", 1, "must be one of"),
    ("experiment: kernel\nseed: true\n", 2, "'seed' must be int"),
])
def test_errors_carry_line(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text, "c.yaml")
    assert info.value.line == line
    assert fragment in str(info.value)
    assert str(info.value).startswith(f"c.yaml:{line}: ")


def test_missing_experiment_and_mismatch():
    with pytest.raises(ConfigError, match="missing required key 'experiment'"):
        parse_config("seed: 3\n")
    with pytest.raises(ConfigError, match="not 'bounds'"):
        parse_config("experiment: kernel\n", experiment="bounds")
    assert parse_config("seed: 3\n", experiment="bounds").experiment == "bounds"


def test_json_config_accepted(tmp_path):
    p = write(tmp_path, json.dumps({"experiment": "kernel", "grid": {"size": 6}}), "c.json")
    cfg = load_config(p)
    assert cfg["grid"]["size"] == 6
    p = write(tmp_path, '{\n  "experiment": "kernel",\n  "grid": {"size": 0}\n}\n', "bad.json")
    with pytest.raises(ConfigError) as info:
        load_config(p)
    assert info.value.line == 3


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(tmp_path / "missing.yaml")


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert capsys.readouterr().out.strip() == __version__


def test_console_script_runs(tmp_path):
    p = write(tmp_path, "grid:\n  sise: 4\n")
    proc = subprocess.run([sys.executable, "-m", "steinfield.cli", "kernel", "--config", str(p)],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert f"{p}:2: unknown key 'grid.sise'" in proc.stderr


def test_exit_code_config(tmp_path, capsys):
    p = write(tmp_path, "grid:\n  n: 2\n  construction: equiangular\n")
    assert main(["kernel", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "cfg.yaml:3" in capsys.readouterr().err
    p = write(tmp_path, "network:\n  widths: [2, 0, 1]\n", "w.yaml")
    assert main(["kernel", "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_exit_code_regime(tmp_path, capsys):
    p = write(tmp_path, "network:\n  widths: [2, 10, 10, 1]\n  c_w: [1, 2, 2]\n  c_b: [0, 0, 0]\n")
    assert main(["bounds", "--config", str(p), "--out", str(tmp_path / "o")]) == 3
    assert "sequential-limit condition violated" in capsys.readouterr().err


def test_exit_code_numerical(tmp_path, capsys):
    # default tail tolerance on S^1 with iota = 1 needs more than the degree cap
    p = write(tmp_path, "sample:\n  type: smoothing-kl\ngrid:\n  size: 8\nmc:\n  draws: 10\n")
    assert main(["sample", "--config", str(p), "--out", str(tmp_path / "o")]) == 4
    assert "numerical failure" in capsys.readouterr().err


def test_bounds_report(tmp_path, capsys):
    p = write(tmp_path, "network:\n  widths: [2, 100000000, 10, 1]\n  c_w: [1, 2, 2]\n  c_b: [0, 0, 0]\n")
    out = tmp_path / "o"
    assert main(["bounds", "--config", str(p), "--out", str(out)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["width_exponent"] == pytest.approx(1 / 14, abs=1e-6)
    assert (out / "bounds.csv").exists() and (out / "metadata.json").exists()


def test_threads_from_env(tmp_path, monkeypatch):
    p = write(tmp_path, "experiment: regularize-check\nregularize:\n  epsilons: [0.1]\n  max_degree: 2\n")
    monkeypatch.setenv(THREADS_ENV, "3")
    assert main(["regularize-check", "--config", str(p), "--out", str(tmp_path / "a")]) == 0
    assert json.loads((tmp_path / "a" / "metadata.json").read_text())["threads"] == 3
    assert main(["regularize-check", "--config", str(p), "--out", str(tmp_path / "b"), "--threads", "2"]) == 0
    assert json.loads((tmp_path / "b" / "metadata.json").read_text())["threads"] == 2
    monkeypatch.setenv(THREADS_ENV, "many")
    assert main(["regularize-check", "--config", str(p), "--out", str(tmp_path / "c")]) == 2


def test_metadata_contents(tmp_path):
    p = write(tmp_path, "grid:\n  size: 4\nseed: 11\n")
    out = tmp_path / "o"
    assert main(["kernel", "--config", str(p), "--out", str(out), "--seed", "5"]) == 0
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["seed"] == 5 and meta["version"] == __version__
    assert meta["config"]["grid"]["size"] == 4 and meta["experiment"] == "kernel"
    assert meta["wall_time_s"] >= 0


SMALL = {
    "kernel": "grid:\n  size: 6\nnetwork:\n  activation: tanh\n",
    "sample": "grid:\n  size: 6\nmc:\n  draws: 50\n",
    "convergence": "grid:\n  size: 4\nmc:\n  draws: 200\n  bootstrap: 5\nsweep:\n  n1: [8, 64]\nrepetitions: 2\n",
    "chaining-check": "chaining:\n  draws: 300\n  grid_size: 32\n  truncation_K: 16\n",
    "stein-check": "stein:\n  count: 4\n  trials: 2\n",
}


def _csv_bytes(out):
    return {p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))}


@pytest.mark.parametrize("experiment", sorted(SMALL))
def test_rerun_is_byte_identical(tmp_path, experiment):
    p = write(tmp_path, SMALL[experiment])
    codes, outputs = [], []
    for name, threads in (("a", "1"), ("b", "1"), ("c", "2")):
        out = tmp_path / name
        codes.append(main([experiment, "--config", str(p), "--out", str(out), "--seed", "7",
                           "--threads", threads]))
        outputs.append(_csv_bytes(out))
    assert codes[0] == codes[1] == codes[2]
    assert outputs[0] and outputs[0] == outputs[1] == outputs[2]


def test_seed_changes_output(tmp_path):
    p = write(tmp_path, SMALL["sample"])
    main(["sample", "--config", str(p), "--out", str(tmp_path / "a"), "--seed", "1"])
    main(["sample", "--config", str(p), "--out", str(tmp_path / "b"), "--seed", "2"])
    assert _csv_bytes(tmp_path / "a") != _csv_bytes(tmp_path / "b")


def test_stein_check_exit_semantics(tmp_path):
    p = write(tmp_path, SMALL["stein-check"])
    assert main(["stein-check", "--config", str(p), "--out", str(tmp_path / "o")]) == 0
    reports = json.loads((tmp_path / "o" / "metadata.json").read_text())
    assert reports["ok"] is True


def test_exponent_notation_is_numeric(tmp_path):
    cfg = parse_config("experiment: bounds\nbounds:\n  p: 1e9\n  iota: 1E-9\n  dF: -2.5e+0\n")
    assert cfg["bounds"]["p"] == 1e9 and cfg["bounds"]["iota"] == 1e-9 and cfg["bounds"]["dF"] == -2.5
    p = write(tmp_path, '{"experiment": "bounds", "bounds": {"p": 1e9}}', "c.json")
    assert load_config(p)["bounds"]["p"] == 1e9
    assert parse_config("experiment: kernel\noutput: 1e3x\n")["output"] == "1e3x"


def test_shipped_configs_parse():
    from pathlib import Path
    configs = sorted((Path(__file__).parents[1] / "configs").glob("*.*"))
    assert len(configs) >= 7
    for p in configs:
        load_config(p)
