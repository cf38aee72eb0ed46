import json
import subprocess
import sys
from pathlib import Path

import pytest

from fpga3d.arch import reference_arch_text
from fpga3d.cli import (ARTIFACTS, FlowConfig, main, run_flow, run_place, run_route,
                        stage_seed)
from fpga3d.errors import MissingPrerequisite
from fpga3d.synth import synthetic_blif


@pytest.fixture
def design(tmp_path):
    arch = tmp_path / "arch.toml"
    arch.write_text(reference_arch_text())
    blif = tmp_path / "c.blif"
    blif.write_text(synthetic_blif(20, seed=11))
    return arch, blif


def args(design, out, *extra):
    arch, blif = design
    return ["--arch", str(arch), "--blif", str(blif), "--out-dir", str(out), *extra]


def artifacts(out: Path):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def test_stage_seed_stable():
    assert stage_seed(1, 0) == stage_seed(1, 0)
    assert stage_seed(1, 0) != stage_seed(1, 1) != stage_seed(2, 1)


def test_missing_prerequisite(design, tmp_path):
    arch, blif = design
    cfg = FlowConfig(str(arch), str(blif), str(tmp_path / "empty"))
    with pytest.raises(MissingPrerequisite):
        run_place(cfg)
    with pytest.raises(MissingPrerequisite):
        run_route(cfg)
    assert main(["route", *args(design, tmp_path / "empty")]) == 1


def test_staged_equals_end_to_end(design, tmp_path):
    whole, staged = tmp_path / "whole", tmp_path / "staged"
    assert main(["flow", *args(design, whole, "--width", "10")]) == 0
    for stage in ("partition", "place", "route", "sta", "report"):
        assert main([stage, *args(design, staged, "--width", "10")]) == 0
    assert artifacts(whole) == artifacts(staged)
    assert set(artifacts(whole)) == set(ARTIFACTS)


def test_route_fixed_width(design, tmp_path):
    out = tmp_path / "o"
    for stage in ("partition", "place", "route"):
        assert main([stage, *args(design, out, "--width", "8")]) == 0
    summary = json.loads((out / "routing.json").read_text())
    assert summary["w"] == 8 and summary["success"]
    assert (out / "routing.txt").read_text().startswith("# routing w 8 ")


def test_machine_report(design, tmp_path, capsys):
    out = tmp_path / "m"
    assert main(["flow", *args(design, out, "--format", "machine", "--seed", "3")]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["tiers"] == 2 and doc["wmin"] >= 2 and doc["cpd"] > 0
    assert json.loads((out / "report.json").read_text()) == doc


def test_exit_codes(design, tmp_path):
    arch, blif = design
    assert main(["flow", "--arch", str(tmp_path / "nope.toml"), "--blif", str(blif)]) == 2
    assert main(["flow", *args(design, tmp_path / "x", "--width", "3")]) == 2
    assert main(["flow", *args(design, tmp_path / "x", "--tiers", "0")]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text(reference_arch_text().replace("lut_size = 6", "lut_size = 1"))
    assert main(["flow", "--arch", str(bad), "--blif", str(blif)]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["flow", "--arch", str(arch)])
    assert exc.value.code == 2
    # unroutable at a fixed narrow width with one router iteration
    assert main(["flow", *args(design, tmp_path / "u", "--width", "2", "--max-route-iters", "1",
                               "--tiers", "1")]) == 1


def test_flow_determinism(design, tmp_path):
    arch, blif = design
    a, b = tmp_path / "a", tmp_path / "b"
    run_flow(FlowConfig(str(arch), str(blif), str(a), seed=5))
    run_flow(FlowConfig(str(arch), str(blif), str(b), seed=5))
    assert artifacts(a) == artifacts(b)


def test_console_entry(tmp_path):
    out = subprocess.run([sys.executable, "-m", "fpga3d.cli", "synth", "--luts", "5"],
                         capture_output=True, text=True, check=True).stdout
    assert out.startswith(".model syn5_0")
    ref = subprocess.run([sys.executable, "-m", "fpga3d.cli", "ref-arch"],
                         capture_output=True, text=True, check=True).stdout
    assert ref == reference_arch_text()
