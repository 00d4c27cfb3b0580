import subprocess
import sys
from pathlib import Path

import pytest

from ratos_sim.cli import apply_overrides, config_hash, main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def summary(prefix):
    lines = Path(f"{prefix}_summary.txt").read_text().splitlines()
    return dict(line.split(": ", 1) for line in lines if ": " in line and not line.startswith("file"))


def test_spectrum_reports_window_width(tmp_path):
    out = tmp_path / "spectrum"
    code = main(["spectrum", "--config", str(CONFIGS / "spectrum.yaml"), "--out", str(out),
                 "--set", "spectrum.scan=null"])
    assert code == 0
    s = summary(out)
    assert float(s["fwhm_predicted"]) == pytest.approx(1.5616, abs=1e-4)
    assert float(s["fwhm_from_curve"]) == pytest.approx(1.5616, abs=1e-3)


def test_hom_reports_half(tmp_path):
    out = tmp_path / "hom"
    code = main(["hom", "--config", str(CONFIGS / "hom.yaml"), "--out", str(out), "--set", "hom.dynamics=null",
                 "--set", "hom.grid_steps=8"])
    assert code == 0
    assert summary(out)["first_coupling_probability"] == "0.500000"
    rows = Path(f"{out}_coupling.csv").read_text().splitlines()
    assert rows[0].startswith("# config_sha256=")
    assert rows[1] == "input,ratios,coupling_probability"
    assert rows[2].endswith(",0.500000")


def test_darkstate_check_residual(tmp_path):
    out = tmp_path / "ds"
    assert main(["darkstate-check", "--config", str(CONFIGS / "darkstate_check.yaml"), "--out", str(out),
                 "--set", "check.draws=3"]) == 0
    assert float(summary(out)["max_residual"]) <= 1e-10


def test_outputs_are_deterministic(tmp_path):
    args = ["transform-check", "--config", str(CONFIGS / "transform_check.yaml"), "--set", "check.draws=10"]
    assert main(args + ["--out", str(tmp_path / "a" / "run")]) == 0
    assert main(args + ["--out", str(tmp_path / "b" / "run")]) == 0
    for name in ("run_transforms.csv", "run_summary.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert main(["transform-check", "--config", str(CONFIGS / "transform_check.yaml"), "--set", "check.draws=10",
                 "--set", "seed=8", "--out", str(tmp_path / "c" / "run")]) == 0
    assert (tmp_path / "a" / "run_transforms.csv").read_bytes() != (tmp_path / "c" / "run_transforms.csv").read_bytes()


def test_every_csv_has_hash_and_header(tmp_path):
    out = tmp_path / "r"
    assert main(["ratos", "--config", str(CONFIGS / "ratos.yaml"), "--out", str(out),
                 "--set", "model.N=3", "--set", "ratos.fade_times=[1.0, 2.0]"]) == 0
    text = Path(f"{out}_sweep.csv").read_text().splitlines()
    assert text[0].startswith("# config_sha256=") and len(text[0]) == len("# config_sha256=") + 64
    assert text[1] == "fade_T,fidelity,infidelity,absorbed"
    assert len(text) == 4


def test_exit_codes(tmp_path):
    cfg = CONFIGS / "ratos.yaml"
    assert main(["nonsense", "--config", str(cfg)]) == 2
    assert main(["ratos", "--config", str(tmp_path / "missing.yaml")]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("scenario: ratos\nmodel: [unclosed\n")
    assert main(["ratos", "--config", str(bad)]) == 2
    out = str(tmp_path / "x")
    assert main(["spectrum", "--config", str(cfg), "--out", out]) == 2
    assert main(["ratos", "--config", str(cfg), "--out", out, "--set", "seed=null"]) == 2
    assert main(["ratos", "--config", str(cfg), "--out", out, "--set", "ratos.mode_j=5"]) == 2
    assert main(["ratos", "--config", str(cfg), "--out", out, "--set", "model.N=-1"]) == 2
    assert main(["ratos", "--config", str(cfg), "--out", out, "--set", "broken"]) == 2
    # a far too coarse step makes the lossless evolution blow up
    assert main(["ratos", "--config", str(cfg), "--out", out, "--set", "model.N=3",
                 "--set", "ratos.fade_times=[100.0]", "--set", "ratos.dt=1.0"]) == 3


def test_overrides_and_hash():
    cfg = {"seed": 1, "model": {"N": 2}, "output": "a"}
    new = apply_overrides(cfg, ["model.N=5", "model.g='1+2j'", "extra.deep.key=[1, 2]"])
    assert new["model"] == {"N": 5, "g": "1+2j"}
    assert new["extra"]["deep"]["key"] == [1, 2]
    assert cfg["model"]["N"] == 2
    assert config_hash(cfg) == config_hash({**cfg, "output": "b"})
    assert config_hash(cfg) != config_hash(new)


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ratos_sim.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "darkstate-check" in proc.stdout
