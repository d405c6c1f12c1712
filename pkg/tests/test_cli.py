import json
from pathlib import Path

import numpy as np
import pytest

from blowuplab.cli import main


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, out


class TestMoments:
    def test_zero_delta_row(self, capsys):
        code, out = run(capsys, ["moments", "--n", "3", "--delta", "0", "--order", "64"])
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith("n,delta_1,B,")
        b_val = float(lines[1].split(",")[2])
        assert b_val == pytest.approx(-6.2831853, abs=1e-6)

    def test_mc_check_agrees(self, capsys):
        code, out = run(
            capsys,
            [
                "moments",
                "--n",
                "4",
                "--delta",
                "1e-3,0",
                "--order",
                "64",
                "--mc-check",
                "100000",
                "--seed",
                "7",
            ],
        )
        assert code == 0
        report = json.loads(out[out.index("{") :])
        assert report["mc_check"][0]["max_abs_z"] <= 3.0

    def test_validation_exit_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["moments", "--n", "1", "--delta", ""])
        assert exc.value.code == 2

    def test_writes_csv_and_manifest(self, capsys, tmp_path):
        out_path = tmp_path / "mom.csv"
        code, _ = run(
            capsys,
            ["moments", "--n", "3", "--delta", "0", "--delta", "1e-3", "-o", str(out_path)],
        )
        assert code == 0
        assert out_path.exists()
        manifest = json.loads((tmp_path / "mom.manifest.json").read_text())
        assert manifest["command"] == "moments"


class TestIterate:
    def test_converged_fixed_point(self, capsys):
        code, out = run(
            capsys,
            [
                "iterate", "--n", "3", "--tau0", "10", "--delta0", "0",
                "--steps", "50", "--order", "32", "--c-gamma", "0",
            ],
        )
        assert code == 0
        summary = json.loads(out[out.index("{") :])
        assert summary["classification"]["kind"] == "converged"
        assert max(abs(d) for d in summary["classification"]["delta_inf"]) < 1e-12

    def test_deterministic_outputs(self, capsys, tmp_path):
        argv = [
            "iterate", "--n", "4", "--tau0", "10", "--delta0", "1e-3,0",
            "--steps", "10", "--order", "32", "--c-gamma", "0", "--seed", "5",
        ]
        code1, _ = run(capsys, argv + ["-o", str(tmp_path / "a")])
        code2, _ = run(capsys, argv + ["-o", str(tmp_path / "b")])
        assert code1 == code2 == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_manifest_replay_byte_identical(self, capsys, tmp_path):
        argv = [
            "iterate", "--n", "3", "--tau0", "10", "--delta0", "0",
            "--steps", "15", "--order", "32", "--c-gamma", "0",
            "-o", str(tmp_path / "orig"),
        ]
        run(capsys, argv)
        code, _ = run(
            capsys,
            [
                "iterate",
                "--manifest",
                str(tmp_path / "orig.manifest.json"),
                "-o",
                str(tmp_path / "replay"),
            ],
        )
        assert code == 0
        assert (tmp_path / "orig.csv").read_bytes() == (
            tmp_path / "replay.csv"
        ).read_bytes()

    def test_escape_classification(self, capsys):
        code, out = run(
            capsys,
            [
                "iterate", "--n", "4", "--tau0", "10", "--delta0", "0.05,0",
                "--steps", "250", "--order", "48", "--gamma", "0.1", "--c-gamma", "0",
            ],
        )
        assert code == 0
        summary = json.loads(out[out.index("{") :])
        assert summary["classification"]["kind"] == "escaped"


class TestSweep:
    def test_grid_csv(self, capsys, tmp_path):
        code, _ = run(
            capsys,
            [
                "sweep", "--n", "3", "--tau0-range", "10:20:2",
                "--delta0-range", "0:0.05:2", "--steps", "10", "--order", "32",
                "--c-gamma", "0", "--workers", "1", "-o", str(tmp_path / "sw"),
            ],
        )
        assert code == 0
        lines = (tmp_path / "sw.csv").read_text().splitlines()
        assert lines[0] == "tau0,delta0_1,classification,step,final_tau,final_ratio"
        assert len(lines) == 5
        assert json.loads((tmp_path / "sw.manifest.json").read_text())["command"] == "sweep"


class TestFourier2D:
    def test_report(self, capsys):
        code, out = run(capsys, ["fourier2d", "--max-degree", "40", "--frame", "rotated"])
        assert code == 0
        report = json.loads(out)
        assert report["max_degree"] == 40
        assert report["reconstruction_max_err"] < report["tail_bound"]
        # q off-diagonal is -1/(2 pi)
        assert report["q_matrix"][1] == pytest.approx(-0.15915494, abs=1e-8)


class TestProjectGrid:
    def test_synthetic_half_step(self, capsys):
        code, out = run(
            capsys,
            [
                "project-grid", "--synthetic", "p0-plus-ztilde", "--tau0", "10",
                "--h", "0.0078125", "--r", "1.0", "--half-step",
            ],
        )
        assert code == 0
        report = json.loads(out)
        assert "r=1" in report and "r=0.5" in report
        tau_half = report["r=0.5"]["tau"]
        assert tau_half == pytest.approx(10.0 + 0.1103178, abs=1e-3)

    def test_field_file_round_trip(self, capsys, tmp_path):
        from blowuplab import gridproj

        field = gridproj.SampledField.from_function(
            lambda x: x[:, 0] ** 2 - x[:, 1] ** 2, 2, 1 / 16, 0.6
        )
        field.save(tmp_path / "f.bin")
        code, out = run(
            capsys, ["project-grid", "--input", str(tmp_path / "f.json"), "--r", "0.4"]
        )
        assert code == 0
        report = json.loads(out)
        assert report["r=0.4"]["tau"] == pytest.approx(1.0, abs=1e-9)


class TestVerify:
    def test_filter_runs_subset(self, capsys):
        code, out = run(capsys, ["verify", "--filter", "fixed point"])
        assert "A7" in out
        assert "A1" not in out
        assert code == 0

    def test_fourier2d_filter(self, capsys):
        code, out = run(capsys, ["verify", "--filter", "fourier2d"])
        assert "A3" in out and "A7" not in out

    def test_induced_failure_names_criterion(self, capsys):
        code, out = run(capsys, ["verify", "--filter", "zero-delta", "--order", "2"])
        assert code == 1
        assert "FAIL A2" in out

    def test_unknown_filter_exit_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["verify", "--filter", "no-such-criterion"])
        assert exc.value.code == 2
