"""Command-line front end: subcommands, exit codes, determinism."""

import json

import numpy as np
import pytest

from qdiffract import cli

PATTERN_CONFIG = """
plane_side = 1.0

[aperture]
kind = "double_slit"
width = 1e-7
separation = 0.25

[grid]
half_extent = 8

[input]
kind = "beam_splitter_fock"
n = 1
r = 0.7071067811865476
t = 0.7071067811865476
modes = [[1, 0], [-1, 0]]

[pattern]
modes = [[-8,0],[-7,0],[-6,0],[-5,0],[-4,0],[-3,0],[-2,0],[-1,0],[0,0],
         [1,0],[2,0],[3,0],[4,0],[5,0],[6,0],[7,0],[8,0]]
"""


def write_config(tmp_path, text, name="scenario.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


class TestPattern:
    def test_fringe_visibility_one(self, tmp_path, capsys):
        cfg = write_config(tmp_path, PATTERN_CONFIG)
        out = tmp_path / "pattern.json"
        code = cli.main(["pattern", "--config", cfg, "--out", str(out),
                         "--format", "json"])
        assert code == 0
        doc = read_json(out)
        assert doc["metadata"]["visibility"] == pytest.approx(1.0, abs=1e-10)
        assert doc["config"]["input"]["kind"] == "beam_splitter_fock"

    def test_decorrelate_kills_visibility(self, tmp_path):
        cfg = write_config(tmp_path, PATTERN_CONFIG)
        out = tmp_path / "pattern.json"
        code = cli.main(["pattern", "--config", cfg, "--out", str(out),
                         "--format", "json", "--decorrelate"])
        assert code == 0
        doc = read_json(out)
        assert doc["metadata"]["visibility"] == pytest.approx(0.0, abs=1e-10)

    def test_full_plane_thermal_single_row(self, tmp_path):
        cfg = write_config(tmp_path, """
[aperture]
kind = "rectangle"
width = 1.0
height = 1.0

[grid]
half_extent = 3

[input]
kind = "thermal"
mean_n = 0.8
mode = [1, 0]
""")
        out = tmp_path / "pattern.json"
        assert cli.main(["pattern", "--config", cfg, "--out", str(out),
                         "--format", "json"]) == 0
        doc = read_json(out)
        bright = [[r[0], r[1]] for r in doc["rows"] if r[4] > 1e-15]
        assert bright == [[1, 0]]
        row = [r for r in doc["rows"] if r[:2] == [1, 0]][0]
        assert row[4] == pytest.approx(0.8)

    def test_grid_nmax_override(self, tmp_path):
        cfg = write_config(tmp_path, """
[aperture]
kind = "rectangle"
width = 1.0
height = 1.0

[input]
kind = "thermal"
mean_n = 0.5
""")
        out = tmp_path / "p.json"
        assert cli.main(["pattern", "--config", cfg, "--grid-nmax", "1",
                         "--out", str(out), "--format", "json"]) == 0
        assert len(read_json(out)["rows"]) == 9


class TestEtaScan:
    def test_reference_values(self, tmp_path):
        out = tmp_path / "eta.csv"
        assert cli.main(["eta-scan", "--out", str(out)]) == 0
        rows = [line.split(",") for line in out.read_text().splitlines()
                if line and not line.startswith("#")][1:]
        table = {float(f): float(e) for f, e in rows}
        assert table[0.0] == pytest.approx(-0.5, abs=1e-12)
        assert table[1.0] == pytest.approx(0.0, abs=1e-12)
        assert table[10.0] == pytest.approx(0.75, abs=1e-12)
        etas = [float(e) for _, e in rows]
        assert all(a < b for a, b in zip(etas, etas[1:]))

    def test_geometry_derived_couplings(self, tmp_path):
        cfg = write_config(tmp_path, """
[aperture]
kind = "double_slit"
width = 0.05
separation = 0.2

[eta_scan]
modes = [[1, 0], [2, 0]]
incident_mode = [0, 0]
points = 3
""")
        out = tmp_path / "eta.json"
        assert cli.main(["eta-scan", "--config", cfg, "--out", str(out),
                         "--format", "json"]) == 0
        doc = read_json(out)
        assert doc["metadata"]["h1"] > 1.0

    def test_mode_on_null_is_config_error(self, tmp_path, capsys):
        cfg = write_config(tmp_path, """
[aperture]
kind = "double_slit"
width = 0.05
separation = 0.2

[eta_scan]
modes = [[0, 1], [1, 0]]
""")
        assert cli.main(["eta-scan", "--config", cfg]) == 2
        assert "null" in capsys.readouterr().err


class TestGammaScan:
    def test_peak_metadata(self, tmp_path):
        out = tmp_path / "gamma.csv"
        assert cli.main(["gamma-scan", "--out", str(out)]) == 0
        header = {line.split(" = ")[0][2:]: float(line.split(" = ")[1])
                  for line in out.read_text().splitlines()
                  if line.startswith("# ") and " = " in line}
        assert 0.95 <= header["argmax_mode_mean_n"] <= 1.25
        assert 0.24 <= header["max_gamma"] <= 0.26

    def test_endpoints(self, tmp_path):
        cfg = write_config(tmp_path, """
[gamma_scan]
y_min = 0.0
y_max = 1000.0
points = 101
""")
        out = tmp_path / "gamma.json"
        assert cli.main(["gamma-scan", "--config", cfg, "--out", str(out),
                         "--format", "json"]) == 0
        rows = read_json(out)["rows"]
        assert rows[0][2] == pytest.approx(0.0, abs=1e-12)
        tail = [r[2] for r in rows[-5:]]
        assert all(g < 0.05 for g in tail)
        assert all(a > b for a, b in zip(tail, tail[1:]))


class TestGhost:
    def test_curve_follows_factor_squared(self, tmp_path):
        cfg = write_config(tmp_path, """
[aperture]
kind = "double_slit"
width = 0.05
separation = 0.2

[grid]
half_extent = 6

[input]
kind = "spdc"
amplitude = 0.2
pair_modes = [[-2,0],[-1,0],[0,0],[1,0],[2,0]]

[ghost]
fixed_mode = [1, 0]
""")
        out = tmp_path / "ghost.json"
        assert cli.main(["ghost", "--config", cfg, "--out", str(out),
                         "--format", "json"]) == 0
        doc = read_json(out)
        norm2 = doc["metadata"]["pair_norm_squared"]
        assert norm2 == pytest.approx(1 + 5 * 0.04)
        for row in doc["rows"]:
            assert row[5] == pytest.approx(row[4] / norm2, rel=1e-12)

    def test_requires_spdc_input(self, tmp_path, capsys):
        cfg = write_config(tmp_path, """
[aperture]
kind = "disk"
radius = 0.2

[input]
kind = "thermal"
mean_n = 1.0
""")
        assert cli.main(["ghost", "--config", cfg]) == 2


class TestVerify:
    def test_default_suite_passes(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        code = cli.main(["verify", "--out", str(out)])
        captured = capsys.readouterr().out
        assert code == 0, captured
        report = read_json(out)
        assert report["passed"] is True
        assert all(c["passed"] for c in report["checks"])
        assert len(report["checks"]) >= 8

    def test_tiny_cutoff_surfaces_overflow(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        code = cli.main(["verify", "--cutoff", "2", "--out", str(out)])
        assert code == 3
        report = read_json(out)
        failed = [c for c in report["checks"] if not c["passed"]]
        assert failed
        texts = " ".join(c.get("exception", "") for c in failed)
        assert "CutoffOverflowError" in texts


class TestConfigErrors:
    def test_missing_file(self, capsys):
        assert cli.main(["pattern", "--config", "/nonexistent.toml"]) == 2

    def test_malformed_toml(self, tmp_path):
        cfg = write_config(tmp_path, "not [valid toml")
        assert cli.main(["pattern", "--config", cfg]) == 2

    def test_missing_section(self, tmp_path):
        cfg = write_config(tmp_path, "[grid]\nhalf_extent = 4\n")
        assert cli.main(["pattern", "--config", cfg]) == 2

    def test_bad_aperture_geometry(self, tmp_path):
        cfg = write_config(tmp_path, """
[aperture]
kind = "double_slit"
width = 0.3
separation = 0.1

[input]
kind = "thermal"
mean_n = 1.0
""")
        assert cli.main(["pattern", "--config", cfg]) == 2

    def test_unknown_state_kind(self, tmp_path):
        cfg = write_config(tmp_path, """
[aperture]
kind = "disk"
radius = 0.2

[input]
kind = "squeezed"
""")
        assert cli.main(["pattern", "--config", cfg]) == 2


def test_byte_identical_reruns(tmp_path):
    cfg = write_config(tmp_path, PATTERN_CONFIG)
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    assert cli.main(["pattern", "--config", cfg, "--out", str(first)]) == 0
    assert cli.main(["pattern", "--config", cfg, "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    ga = tmp_path / "ga.json"
    gb = tmp_path / "gb.json"
    assert cli.main(["gamma-scan", "--out", str(ga), "--format", "json"]) == 0
    assert cli.main(["gamma-scan", "--out", str(gb), "--format", "json"]) == 0
    assert ga.read_bytes() == gb.read_bytes()


def test_output_embeds_resolved_config(tmp_path):
    cfg = write_config(tmp_path, PATTERN_CONFIG)
    out = tmp_path / "p.csv"
    assert cli.main(["pattern", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[1].startswith("# config: ")
    embedded = json.loads(lines[1][len("# config: "):])
    assert embedded["aperture"]["separation"] == 0.25
    assert embedded["decorrelate"] is False


def test_stdout_when_no_out_path(capsys):
    assert cli.main(["eta-scan"]) == 0
    captured = capsys.readouterr().out
    assert "fano,eta" in captured
