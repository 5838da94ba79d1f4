import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from wkam.cli import load_config, main
from wkam.io import KernelCache, read_grid


def write_cfg(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def summary(out: Path, name="summary.txt") -> dict:
    return dict(line.split("=", 1) for line in (out / name).read_text().splitlines())


def run(argv, capsys=None):
    code = main(argv)
    err = capsys.readouterr().err if capsys is not None else ""
    return code, err


PENDULUM = """
[run]
n = 64
tau = 0.05
[model]
name = pendulum(1)
"""


@pytest.fixture
def cache_env(tmp_path, monkeypatch):
    d = tmp_path / "cache"
    monkeypatch.setenv("WKAM_CACHE_DIR", str(d))
    return d


# ---------------------------------------------------------------- errors

def test_missing_config_exit_2(tmp_path, capsys):
    code, err = run(["solve", "--config", str(tmp_path / "nope.cfg")], capsys)
    assert code == 2
    assert err.strip() == "wkam: exit=2 reason=config: not found"


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "a.cfg", PENDULUM + "colour = blue\n")
    code, err = run(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")],
                    capsys)
    assert code == 2 and "unknown key model.colour" in err
    assert not (tmp_path / "o").exists()


def test_unknown_section_and_bad_values(tmp_path, capsys):
    for text, msg in (("[extra]\nx = 1\n", "unknown section extra"),
                      ("[run]\nn = -3\n", "bad value run.n"),
                      ("[run]\nformat = xml\n", "bad value run.format"),
                      ("[ladder]\nlevels = 64:0.1,128:0.05\n", "at least 3 levels"),
                      ("[pair x]\ng = quadratic\n", "needs G and H"),
                      ("[pair x]\ng = quadratic\nh = quadratic\nexpect = maybe\n", "expect")):
        cfg = write_cfg(tmp_path / "b.cfg", text)
        code, err = run(["solve", "--config", str(cfg)], capsys)
        assert code == 2 and msg in err, text
        assert err.count("\n") == 1


def test_bad_model_spec(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "a.cfg", "[model]\nname = nonsense(3)\n")
    code, err = run(["solve", "--config", str(cfg), "--out", str(tmp_path)], capsys)
    assert code == 2 and "reason=model:" in err


def test_profile_must_match_command(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "a.cfg", "[run]\nprofile = alpha\n")
    code, err = run(["solve", "--config", str(cfg)], capsys)
    assert code == 2 and "profile alpha" in err


def test_bad_arguments(capsys):
    assert main(["frobnicate"]) == 2
    assert "reason=usage" in capsys.readouterr().err


def test_nonconvergence_exit_3(tmp_path, capsys, cache_env):
    cfg = write_cfg(tmp_path / "a.cfg", PENDULUM.replace("tau = 0.05", "tau = 0.05\nmax_iter = 3"))
    code, err = run(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")],
                    capsys)
    assert code == 3 and "solver: not converged" in err
    assert summary(tmp_path / "o")["converged"] == "False"


def test_flags_override_config(tmp_path):
    cfg = write_cfg(tmp_path / "a.cfg", PENDULUM)
    c = load_config(cfg)
    assert c.get("run", "n") == 64 and c.get("model", "name") == "pendulum(1)"
    assert load_config(None).get("run", "n") == 128


# ---------------------------------------------------------------- commands

def test_solve_outputs(tmp_path, cache_env):
    cfg = write_cfg(tmp_path / "a.cfg", PENDULUM)
    out = tmp_path / "o"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    s = summary(out)
    assert abs(float(s["alpha"]) - 1.0) <= 0.05
    assert abs(float(s["alpha"]) - float(s["alpha_karp"])) <= 1e-8
    u, meta = read_grid(out / "u_minus.bin", with_meta=True)
    assert u.shape == (64,) and meta["label"] == "pendulum(1)"
    assert abs(float(meta["alpha"]) - 1.0) <= 0.05
    assert (out / "u_plus.bin").exists() and (out / "history_minus.csv").exists()


def test_solve_csv_format(tmp_path, cache_env):
    cfg = write_cfg(tmp_path / "a.cfg", PENDULUM)
    out = tmp_path / "o"
    assert main(["solve", "--config", str(cfg), "--out", str(out), "--format", "csv"]) == 0
    lines = (out / "u_minus.csv").read_text().splitlines()
    assert lines[0] == "x,u_minus" and len(lines) == 65
    bin_out = tmp_path / "b"
    main(["solve", "--config", str(cfg), "--out", str(bin_out)])
    col = np.array([float(line.split(",")[1]) for line in lines[1:]])
    assert np.array_equal(col, read_grid(bin_out / "u_minus.bin"))


def test_alpha_command(tmp_path, cache_env):
    cfg = write_cfg(tmp_path / "a.cfg", PENDULUM.replace("n = 64", "n = 32").replace(
        "tau = 0.05", "tau = 0.1\nn_p = 257\nn_v = 257") +
        "partner = composed(pendulum(1),affine(2,1))\n[alpha]\nc_count = 17\n")
    out = tmp_path / "o"
    assert main(["alpha", "--config", str(cfg), "--out", str(out)]) == 0
    s = summary(out)
    assert int(s["flats"]) >= 1 and s["compare.passed"] == "True"
    assert abs(float(s["flat0.alpha"]) - 1.0) <= 0.1
    assert len((out / "alpha.csv").read_text().splitlines()) == 18


def test_peierls_and_aubry_commands(tmp_path, cache_env):
    cfg = write_cfg(tmp_path / "a.cfg", PENDULUM)
    out = tmp_path / "o"
    assert main(["peierls", "--config", str(cfg), "--out", str(out)]) == 0
    h = read_grid(out / "barrier.bin")
    assert h.shape == (64, 64) and int(np.argmin(np.diag(h))) == 0
    assert main(["aubry", "--config", str(cfg), "--out", str(out)]) == 0
    s = summary(out)
    assert s["peierls_nodes"].split(",")[0] == "0"
    assert float(s["hausdorff_nodes"]) <= 2
    assert "0" in (out / "aubry_pairs.txt").read_text().split()


def test_regularize_command(tmp_path, cache_env):
    cfg = write_cfg(tmp_path / "a.cfg", PENDULUM.replace("n = 64", "n = 128").replace(
        "tau = 0.05", "tau = 0.025") + "partner = composed(pendulum(1),quad(1))\n")
    out = tmp_path / "o"
    assert main(["regularize", "--config", str(cfg), "--out", str(out)]) == 0
    s = summary(out)
    assert float(s["violation_out"]) <= float(s["violation_in"]) + 5e-3
    assert float(s["partner0.violation_out"]) <= float(s["partner0.violation_in"]) + 5e-3
    assert (out / "smoothness.csv").exists()


def test_regularize_refuses_bad_seed(tmp_path, capsys, cache_env):
    cfg = write_cfg(tmp_path / "a.cfg", PENDULUM + "partner = pendulum(1,2)\n"
                    "[regularize]\nseed = uminus\n")
    code, err = run(["regularize", "--config", str(cfg), "--out", str(tmp_path / "o")],
                    capsys)
    assert code == 2 and "subsolution" in err


COMMUTE = """
[run]
n_p = 257
n_v = 257
[ladder]
levels = 32:0.1,64:0.05,128:0.025
[pair same]
G = pendulum(1)
H = pendulum(1)
expect = pass
"""


def test_commute_check_identical_pair(tmp_path, cache_env):
    cfg = write_cfg(tmp_path / "c.cfg", COMMUTE + "[pair control]\nG = pendulum(1)\n"
                    "H = pendulum(1,2)\nexpect = commutation=fail\n")
    out = tmp_path / "o"
    assert main(["commute-check", "--config", str(cfg), "--out", str(out)]) == 0
    s = summary(out)
    assert s["mismatches"] == "0"
    kv = summary(out, "summary_same.txt")
    for i in range(3):
        assert float(kv[f"level{i}.kernel_residual"]) == 0.0
        assert float(kv[f"level{i}.cross_GH"]) <= 1e-9
    assert (out / "report_same.txt").exists()


def test_commute_check_adds_negative_control(tmp_path, cache_env):
    cfg = write_cfg(tmp_path / "c.cfg", COMMUTE)
    out = tmp_path / "o"
    assert main(["commute-check", "--config", str(cfg), "--out", str(out)]) == 0
    s = summary(out)
    assert s["pairs"] == "same,control" and "negative control" in s["notes"]


def test_commute_check_mismatch_exit_4(tmp_path, capsys, cache_env):
    cfg = write_cfg(tmp_path / "c.cfg", COMMUTE.replace("expect = pass", "expect = commutation=fail"))
    code, err = run(["commute-check", "--config", str(cfg), "--out", str(tmp_path / "o")],
                    capsys)
    assert code == 4 and "verdict mismatch same.commutation=pass" in err


# ---------------------------------------------------------------- determinism and cache

def _files(d: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.is_file()}


def test_threads_bitwise_identical_outputs(tmp_path, cache_env):
    cfg = write_cfg(tmp_path / "a.cfg", PENDULUM)
    for k in ("1", "8"):
        assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / k),
                     "--threads", k, "--no-cache"]) == 0
    assert _files(tmp_path / "1") == _files(tmp_path / "8")


def test_cache_hit_equals_cold_run(tmp_path, cache_env, capsys):
    cfg = write_cfg(tmp_path / "a.cfg", PENDULUM)
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "cold"), "--no-cache"]) == 0
    assert not cache_env.exists()
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "fill")]) == 0
    assert len(KernelCache(cache_env).entries()) == 2
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "hit")]) == 0
    assert _files(tmp_path / "cold") == _files(tmp_path / "hit") == _files(tmp_path / "fill")
    capsys.readouterr()
    assert main(["cache", "inspect"]) == 0
    text = capsys.readouterr().out
    assert "entries=2" in text and "label=pendulum(1)" in text
    assert main(["cache", "clear"]) == 0
    assert "removed=2" in capsys.readouterr().out
    assert KernelCache(cache_env).entries() == []


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "wkam.cli", "--version"], capture_output=True,
                         text=True)
    assert res.returncode == 0 and res.stdout.startswith("wkam ")
