import json
import math
import os

import numpy as np
import pytest

from bozk.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, execute
from bozk.grid import RealField, make_grid
from bozk.io import read_snapshot, write_snapshot
from bozk.manifest import ManifestError, parse_manifest_text
from bozk.weights import WeightSpec

SIM_CFG = """
grid.nx = 48
grid.ny = 48
grid.lx = 16pi
grid.ly = 16pi
data.kind = gaussian
data.amplitude = 0.5
data.sigma_x = 1.5
data.sigma_y = 1.5
solver.dt = 5e-3
solver.t_final = 0.05
solver.stride = 5
diag.hs = 2
diag.weights = poly:1
seed = 3
"""


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestManifest:
    def test_pi_lengths_and_weights(self):
        m = parse_manifest_text(SIM_CFG)
        assert math.isclose(m.lx, 16 * math.pi)
        assert m.weights == (WeightSpec.polynomial(1.0),)
        assert m.hs_orders == (2.0,)

    def test_unknown_key_rejected(self):
        with pytest.raises(ManifestError, match="unknown key"):
            parse_manifest_text("grid.nphi = 12\n")

    def test_bad_value_rejected(self):
        with pytest.raises(ManifestError):
            parse_manifest_text("grid.nx = twelve\n")
        with pytest.raises(ManifestError):
            parse_manifest_text("solver.dealias = maybe\n")
        with pytest.raises(ManifestError):
            parse_manifest_text("diag.weights = poly\n")

    def test_comments_and_blanks(self):
        m = parse_manifest_text("# hi\n\ngrid.nx = 16 # inline\n")
        assert m.nx == 16

    def test_invalid_grid_caught_eagerly(self):
        with pytest.raises(ManifestError):
            parse_manifest_text("grid.nx = 33\n")


class TestSnapshot:
    def test_roundtrip(self, tmp_path):
        g = make_grid(16, 24, 3.0, 5.0)
        rng = np.random.default_rng(0)
        f = RealField(g, rng.standard_normal((24, 16)))
        p = tmp_path / "f.bozk"
        write_snapshot(p, f)
        raw = p.read_bytes()
        assert raw[:4] == b"BOZK"
        back = read_snapshot(p)
        assert back.grid == g
        assert np.array_equal(back.samples, f.samples)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "junk.bozk"
        p.write_bytes(b"NOPE" + b"\0" * 64)
        with pytest.raises(ValueError):
            read_snapshot(p)


class TestExecute:
    def test_simulate_writes_schema(self, tmp_path):
        cfg = write_cfg(tmp_path, SIM_CFG)
        out = tmp_path / "out"
        assert execute(["simulate", "--config", cfg, "--out", str(out), "--quiet"]) == EXIT_OK
        header = (out / "series.csv").read_text().splitlines()[0].split(",")
        assert header == ["t", "l2", "hs_2", "zmode_linf_drift", "moment_x", "w_poly1"]
        summary = json.loads((out / "summary.json").read_text())
        assert "conservation" in summary
        assert (out / "final.bozk").exists()

    def test_config_error_exit_and_no_files(self, tmp_path):
        cfg = write_cfg(tmp_path, "grid.nx = 47\n")
        out = tmp_path / "outbad"
        assert execute(["simulate", "--config", cfg, "--out", str(out)]) == EXIT_CONFIG
        assert not out.exists() or not list(out.iterdir())

    def test_cfl_violation_exit_three(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            SIM_CFG.replace("data.amplitude = 0.5", "data.amplitude = 60")
            .replace("solver.dt = 5e-3", "solver.dt = 0.05")
            .replace("solver.t_final = 0.05", "solver.t_final = 0.2"),
        )
        out = tmp_path / "outcfl"
        assert execute(["simulate", "--config", cfg, "--out", str(out)]) == EXIT_NUMERIC
        abort = json.loads((out / "abort.json").read_text())
        assert abort["reason"] == "cfl_audit"

    def test_linear_and_diagnose(self, tmp_path):
        cfg = write_cfg(tmp_path, SIM_CFG)
        out = tmp_path / "outlin"
        assert execute(["linear", "--config", cfg, "--out", str(out), "--quiet"]) == EXIT_OK
        outd = tmp_path / "outd"
        assert execute(["diagnose", "--config", cfg, "--out", str(outd), "--quiet"]) == EXIT_OK
        rows = (outd / "diagnose.csv").read_text().splitlines()
        assert rows[0] == "norm,value"
        assert any(r.startswith("l2,") for r in rows)

    def test_picard_subcommand(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            SIM_CFG + "picard.t_final = 0.02\npicard.mu = 0.1\n",
        )
        out = tmp_path / "outpic"
        assert execute(["picard", "--config", cfg, "--out", str(out), "--quiet"]) == EXIT_OK
        lines = (out / "picard_residuals.csv").read_text().splitlines()
        assert lines[0] == "iteration,residual"
        assert len(lines) >= 3

    def test_uc_subcommand(self, tmp_path):
        text = SIM_CFG.replace("grid.nx = 48", "grid.nx = 96").replace(
            "grid.ny = 48", "grid.ny = 96"
        ).replace("data.kind = gaussian", "data.kind = dx_gaussian")
        text = text.replace("solver.stride = 5", "solver.stride = 2")
        cfg = write_cfg(tmp_path, text + "uc.r_list = 1\nuc.s = 2\nuc.t = 0.5\n")
        out = tmp_path / "outuc"
        assert execute(["uc", "--config", cfg, "--out", str(out), "--quiet"]) == EXIT_OK
        report = (out / "uc_report.csv").read_text().splitlines()
        assert report[0] == "level,window_norm,ratio,verdict"
        assert report[1].endswith("persists")
        assert (out / "persistence.csv").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["b1_verdict"] == "persists"
        assert "moment" in summary

    def test_file_data_roundtrip(self, tmp_path):
        g = make_grid(48, 48, 16 * math.pi, 16 * math.pi)
        snap = tmp_path / "seed.bozk"
        from bozk import fields

        write_snapshot(snap, fields.gaussian(g, 0.4))
        text = SIM_CFG.replace("data.kind = gaussian", "data.kind = file")
        cfg = write_cfg(tmp_path, text + f"data.path = {snap}\n")
        out = tmp_path / "outfile"
        assert execute(["simulate", "--config", cfg, "--out", str(out), "--quiet"]) == EXIT_OK

    def test_reproducibility_byte_identical(self, tmp_path):
        cfg = write_cfg(tmp_path, SIM_CFG)
        o1, o2 = tmp_path / "r1", tmp_path / "r2"
        execute(["simulate", "--config", cfg, "--out", str(o1), "--seed", "9", "--quiet"])
        execute(["simulate", "--config", cfg, "--out", str(o2), "--seed", "9", "--quiet"])
        assert (o1 / "series.csv").read_bytes() == (o2 / "series.csv").read_bytes()
        assert (o1 / "final.bozk").read_bytes() == (o2 / "final.bozk").read_bytes()

    def test_thread_cap_env(self, tmp_path, monkeypatch):
        cfg = write_cfg(tmp_path, SIM_CFG)
        monkeypatch.setenv("BOZK_THREADS", "2")
        out = tmp_path / "outthr"
        assert execute(["simulate", "--config", cfg, "--out", str(out), "--quiet"]) == EXIT_OK
        monkeypatch.setenv("BOZK_THREADS", "lots")
        assert execute(["simulate", "--config", cfg, "--out", str(out)]) == EXIT_CONFIG

    def test_missing_config(self, tmp_path):
        assert execute(["simulate", "--config", str(tmp_path / "nope.cfg")]) == EXIT_CONFIG

    def test_verify_on_defaults(self, tmp_path):
        out = tmp_path / "outv"
        assert execute(["verify", "--out", str(out), "--quiet"]) == EXIT_OK
        lines = (out / "verify.csv").read_text().splitlines()
        assert lines[0] == "suite,check,measured,reference,passed"
        assert all(line.endswith("true") for line in lines[1:])

    def test_uc_domain_growth_output(self, tmp_path):
        text = """
grid.nx = 128
grid.ny = 128
grid.lx = 16pi
grid.ly = 16pi
data.kind = gaussian
data.amplitude = 0.75
data.sigma_x = 1.2
data.sigma_y = 1.2
solver.dt = 2e-3
solver.t_final = 0.1
solver.stride = 10
uc.r_list = 1
uc.s = 2
uc.doublings = 1
"""
        cfg = write_cfg(tmp_path, text)
        out = tmp_path / "outg"
        assert execute(["uc", "--config", cfg, "--out", str(out), "--quiet"]) == EXIT_OK
        header = (out / "growth.csv").read_text().splitlines()[0]
        assert header == "length,ind_2,ind_2.5"
        summary = json.loads((out / "summary.json").read_text())
        assert "domain_growth" in summary

    def test_two_solitary_bumps_family(self, tmp_path):
        text = SIM_CFG.replace("data.kind = gaussian", "data.kind = two_solitary_bumps")
        cfg = write_cfg(tmp_path, text + "data.width = 2\ndata.separation = 10\n")
        out = tmp_path / "outb"
        assert execute(["simulate", "--config", cfg, "--out", str(out), "--quiet"]) == EXIT_OK
