"""Config parsing, file formats, CLI subcommands."""

import os

import numpy as np
import pytest

import nlsinv as nv
from nlsinv import formats
from nlsinv.cli import main
from nlsinv.config import apply_overrides, parse_config

TINY_CONFIG = """
# quick end-to-end configuration
n_per_side = 21
dt = 2e-3
horizon = 0.2
n_modes = 6
exponent_p = 2.0
noise_delta = 0.1
noise_seed = 7
lambda = 20
beta = 5
focus_x = 0
focus_y = 8
epsilon = 1e-6
k_max = 3
phantom = test1
"""


@pytest.fixture()
def tiny_config_path(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY_CONFIG, encoding="utf-8")
    return str(path)


class TestConfigParsing:
    def test_full_parse(self):
        cfg = parse_config(TINY_CONFIG)
        assert cfg.n_per_side == 21
        assert cfg.dt == 2e-3
        assert cfg.lambda_ == 20.0
        assert cfg.focus == (0.0, 8.0)
        assert len(cfg.phantom.parts) == 2

    def test_unknown_key_reports_line(self):
        with pytest.raises(ValueError, match="line 2.*lamda"):
            parse_config("n_per_side = 21\nlamda = 20", require_core=False)

    def test_missing_required_key_named(self):
        text = TINY_CONFIG.replace("dt = 2e-3", "")
        with pytest.raises(ValueError, match="'dt'"):
            parse_config(text)

    def test_duplicate_key_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            parse_config("dt = 1e-3\ndt = 2e-3", require_core=False)

    def test_malformed_line_rejected(self):
        with pytest.raises(ValueError, match="line 1"):
            parse_config("this is not a key value pair", require_core=False)

    def test_bad_number_rejected(self):
        with pytest.raises(ValueError, match="line 1"):
            parse_config("dt = banana", require_core=False)

    def test_part_entries(self):
        text = TINY_CONFIG.replace(
            "phantom = test1",
            "part1 = disk real 1.0 -0.25 0.15 0.18\n"
            "part2 = square_ring imag 2.0 0.05 0.05 0.60 0.42",
        )
        cfg = parse_config(text)
        assert len(cfg.phantom.parts) == 2
        assert isinstance(cfg.phantom.parts[0].shape, nv.Disk)
        assert isinstance(cfg.phantom.parts[1].shape, nv.SquareRing)

    def test_part_and_canonical_conflict(self):
        text = TINY_CONFIG + "part1 = disk real 1.0 0 0 0.1\n"
        with pytest.raises(ValueError, match="not both"):
            parse_config(text)

    def test_bad_part_shape(self):
        with pytest.raises(ValueError, match="unknown shape"):
            parse_config("part1 = blob real 1.0 0 0 0.1", require_core=False)
        with pytest.raises(ValueError, match="parameters"):
            parse_config("part1 = disk real 1.0 0 0", require_core=False)

    def test_overrides(self):
        cfg = parse_config(TINY_CONFIG)
        patched = apply_overrides(cfg, ["epsilon=1e-8", "k_max=5", "focus_y=9"])
        assert patched.epsilon == 1e-8
        assert patched.k_max == 5
        assert patched.focus == (0.0, 9.0)
        assert patched.dt == cfg.dt
        with pytest.raises(ValueError, match="unknown key"):
            apply_overrides(cfg, ["epsilonn=1e-8"])


class TestFormats:
    def test_grid_round_trip(self, tmp_path):
        grid = nv.build_grid(1.0, 9)
        rng = np.random.default_rng(0)
        field = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
        path = str(tmp_path / "field.csv")
        formats.write_grid_csv(path, grid, field)
        axis, back = formats.read_grid_csv(path)
        assert np.array_equal(axis, grid.axis_nodes)
        assert np.array_equal(back, field)

    def test_trace_round_trip(self, tmp_path):
        grid = nv.build_grid(1.0, 9)
        trace = nv.run_forward(grid, nv.test1_phantom(), 0.01, 1e-3, 2.0, 1.0)
        path = str(tmp_path / "trace.csv")
        formats.write_trace_csv(path, trace, grid)
        back = formats.read_trace_csv(path)
        assert back.grid_n_per_side == 9
        assert back.grid_half_width == 1.0
        assert np.array_equal(back.times, trace.times)
        assert np.array_equal(back.values, trace.values)

    def test_modal_round_trip(self, tmp_path):
        grid = nv.build_grid(1.0, 9)
        rng = np.random.default_rng(1)
        coeffs = rng.standard_normal((3, grid.n_interior)) + 1j * rng.standard_normal(
            (3, grid.n_interior)
        )
        modal = nv.ModalField(2, (1.0, 9), coeffs)
        path = str(tmp_path / "modal.csv")
        formats.write_modal_csv(path, modal, grid)
        back = formats.read_modal_csv(path)
        assert back.n_modes == 2
        assert back.grid_ref == (1.0, 9)
        assert np.array_equal(back.coeffs, coeffs)

    def test_metrics_round_trip(self, tmp_path):
        records = [
            nv.IterationRecord(0, 1.0, 0.5, 100, 9.9e-9),
            nv.IterationRecord(1, 0.01, 0.05, 50, 1.2e-9),
        ]
        path = str(tmp_path / "metrics.csv")
        formats.write_metrics_csv(path, records)
        back = formats.read_metrics_csv(path)
        assert back == records

    def test_no_partial_files(self, tmp_path):
        grid = nv.build_grid(1.0, 9)
        field = np.zeros((9, 9), dtype=complex)
        formats.write_grid_csv(str(tmp_path / "a.csv"), grid, field)
        leftovers = [p for p in os.listdir(tmp_path) if p.endswith(".part")]
        assert leftovers == []

    def test_basis_csv(self, tmp_path):
        basis = nv.build_basis(0.2, 3, 32)
        path = str(tmp_path / "basis.csv")
        formats.write_basis_csv(path, basis)
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
        assert header == "node_index,t,weight,psi_0,psi_1,psi_2,psi_3"


class TestCli:
    def run(self, *argv):
        return main(list(argv))

    def test_forward_writes_both_traces(self, tiny_config_path, tmp_path, capsys):
        out = str(tmp_path / "out")
        assert self.run("forward", "--config", tiny_config_path, "--output-dir", out) == 0
        assert os.path.exists(os.path.join(out, "tiny_trace_clean.csv"))
        assert os.path.exists(os.path.join(out, "tiny_trace_noisy.csv"))

    def test_forward_clean_only_when_no_noise(self, tiny_config_path, tmp_path):
        out = str(tmp_path / "out")
        assert (
            self.run(
                "forward",
                "--config",
                tiny_config_path,
                "--set",
                "noise_delta=0",
                "--output-dir",
                out,
            )
            == 0
        )
        assert os.path.exists(os.path.join(out, "tiny_trace_clean.csv"))
        assert not os.path.exists(os.path.join(out, "tiny_trace_noisy.csv"))

    def test_invert_end_to_end_and_determinism(self, tiny_config_path, tmp_path):
        out = str(tmp_path / "out")
        self.run("forward", "--config", tiny_config_path, "--output-dir", out)
        trace = os.path.join(out, "tiny_trace_noisy.csv")
        assert self.run("invert", "--config", tiny_config_path, "--trace", trace,
                        "--output-dir", out) == 0
        metrics = os.path.join(out, "tiny_metrics.csv")
        for name in ("tiny_metrics.csv", "tiny_modal.csv", "tiny_u0.csv", "tiny_summary.txt"):
            assert os.path.exists(os.path.join(out, name))
        first = open(metrics, "rb").read()
        self.run("invert", "--config", tiny_config_path, "--trace", trace, "--output-dir", out)
        second = open(metrics, "rb").read()
        assert first == second
        summary = open(os.path.join(out, "tiny_summary.txt"), encoding="utf-8").read()
        assert "max_abs_real" in summary and "rel_amplitude_error_real" in summary

    def test_invert_grid_mismatch(self, tiny_config_path, tmp_path):
        out = str(tmp_path / "out")
        self.run("forward", "--config", tiny_config_path, "--output-dir", out)
        trace = os.path.join(out, "tiny_trace_noisy.csv")
        with pytest.raises(SystemExit, match="does not"):
            self.run(
                "invert",
                "--config",
                tiny_config_path,
                "--set",
                "n_per_side=31",
                "--trace",
                trace,
                "--output-dir",
                out,
            )

    def test_invert_truncated_trace_rejected(self, tiny_config_path, tmp_path):
        out = str(tmp_path / "out")
        self.run("forward", "--config", tiny_config_path, "--output-dir", out)
        trace = os.path.join(out, "tiny_trace_noisy.csv")
        lines = open(trace, encoding="utf-8").read().splitlines()
        clipped = os.path.join(out, "clipped.csv")
        with open(clipped, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines[:-7]) + "\n")
        assert self.run("invert", "--config", tiny_config_path, "--trace", clipped,
                        "--output-dir", out) == 2

    def test_diagnose(self, tiny_config_path, tmp_path, capsys):
        out = str(tmp_path / "out")
        assert self.run("diagnose", "--config", tiny_config_path, "--output-dir", out) == 0
        captured = capsys.readouterr().out
        assert "gram deviation" in captured
        for name in (
            "tiny_basis_check.csv",
            "tiny_basis_table.csv",
            "tiny_carleman.csv",
            "tiny_truncation.csv",
        ):
            assert os.path.exists(os.path.join(out, name))
        ratios = np.loadtxt(os.path.join(out, "tiny_carleman.csv"), delimiter=",", skiprows=1)
        assert np.all(ratios[:, 1] > 0)
        tails = np.loadtxt(os.path.join(out, "tiny_truncation.csv"), delimiter=",", skiprows=1)
        assert np.all(np.diff(tails[:, 1]) < 0)

    def test_phantom_dump(self, tiny_config_path, tmp_path):
        out = str(tmp_path / "out")
        assert self.run("phantom", "--config", tiny_config_path, "--output-dir", out) == 0
        axis, field = formats.read_grid_csv(os.path.join(out, "tiny_phantom.csv"))
        grid = nv.build_grid(1.0, 21)
        expected = grid.to_full(nv.rasterize_phantom(grid, nv.test1_phantom()))
        assert np.array_equal(field, expected)

    def test_report_renders_figures(self, tiny_config_path, tmp_path):
        out = str(tmp_path / "out")
        self.run("forward", "--config", tiny_config_path, "--output-dir", out)
        trace = os.path.join(out, "tiny_trace_noisy.csv")
        self.run("invert", "--config", tiny_config_path, "--trace", trace, "--output-dir", out)
        assert self.run("report", "--config", tiny_config_path, "--output-dir", out) == 0
        for name in (
            "tiny_u0_comp_real.png",
            "tiny_u0_comp_imag.png",
            "tiny_u0_true_real.png",
            "tiny_u0_true_imag.png",
            "tiny_metrics.png",
        ):
            assert os.path.exists(os.path.join(out, name))

    def test_outdir_env_override(self, tiny_config_path, tmp_path, monkeypatch):
        env_out = str(tmp_path / "env_out")
        monkeypatch.setenv("NLSINV_OUTDIR", env_out)
        assert self.run("phantom", "--config", tiny_config_path) == 0
        assert os.path.exists(os.path.join(env_out, "tiny_phantom.csv"))
