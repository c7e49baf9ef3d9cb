"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one PASS line with the measured numbers (run with ``-s`` to
see them on a green suite).  The desk-scale reconstructions are shared
session fixtures, so the full gate costs roughly three desk runs.
"""

import os
import time

import numpy as np
import pytest

import nlsinv as nv
from nlsinv import formats
from nlsinv.cli import main as cli_main
from nlsinv.forward_sim import _step_operator
from nlsinv.reduction import ModalField

from conftest import desk_config, half_max_centroid
from test_reduction import materialized_frozen_term


def report(name: str, detail: str) -> None:
    print(f"ACCEPTANCE {name}: PASS ({detail})")


class TestBasisCorrectness:
    def test_gram_and_stiffness_identity(self):
        start = time.perf_counter()
        basis = nv.build_basis(0.2, 65, 256)
        gram_dev = nv.gram_deviation(basis)
        idx = np.arange(66)
        parity = 1.0 - (-1.0) ** (idx[:, None] + idx[None, :])
        expected = 2.0 * np.eye(66) + np.sqrt(
            np.outer(2 * idx + 1.0, 2 * idx + 1.0)
        ) * parity / 0.2
        s_dev = float(np.max(np.abs(basis.s_matrix + basis.s_matrix.T - expected)))
        elapsed = time.perf_counter() - start
        assert gram_dev < 1e-9
        assert s_dev < 1e-8
        assert elapsed < 5.0
        report(
            "basis-correctness",
            f"gram={gram_dev:.2e}, s-identity={s_dev:.2e}, {elapsed:.2f}s",
        )


class TestForwardSolverOrder:
    @staticmethod
    def terminal_error(n_per_side: int, dt: float, horizon: float = 0.2) -> float:
        grid = nv.build_grid(1.0, n_per_side)
        x, y = grid.interior_xy()
        u0 = (np.sin(np.pi * (x + 1) / 2) * np.sin(np.pi * (y + 1) / 2)).astype(complex)
        solver = _step_operator(grid, dt)
        u = u0.copy()
        for _ in range(round(horizon / dt)):
            u = nv.step(grid, u, dt, 2.0, 0.0, _solver=solver)
        exact = np.exp(-1j * np.pi**2 / 2 * horizon) * u0
        return float(np.sqrt(grid.spacing**2 * np.sum(np.abs(u - exact) ** 2)))

    def test_first_order_time_second_order_space(self):
        start = time.perf_counter()
        dt_ratio = self.terminal_error(81, 2e-3) / self.terminal_error(81, 1e-3)
        h_ratio = self.terminal_error(21, 2e-5) / self.terminal_error(41, 2e-5)
        elapsed = time.perf_counter() - start
        assert 1.5 <= dt_ratio <= 2.5
        assert 3.0 <= h_ratio <= 5.0
        assert elapsed < 60.0
        report(
            "forward-order",
            f"dt-ratio={dt_ratio:.3f} in [1.5,2.5], h-ratio={h_ratio:.3f} in [3,5], "
            f"{elapsed:.1f}s",
        )


class TestReducedOperatorOracle:
    def test_collapsed_equals_materialized(self):
        start = time.perf_counter()
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(20):
            n_modes = int(rng.integers(0, 5))           # N <= 4
            grid = nv.build_grid(1.0, 5)                # 9 interior nodes (<= 25)
            basis = nv.build_basis(0.2, n_modes, 64)
            shape = (n_modes + 1, grid.n_interior)
            coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
            phi = ModalField(n_modes, (1.0, 5), coeffs)
            p = float(rng.uniform(1.2, 5.0))
            fast = nv.frozen_nonlinearity(basis, phi, 1.0, p)
            slow = materialized_frozen_term(basis, phi, 1.0, p)
            worst = max(worst, float(np.max(np.abs(fast - slow)) / np.max(np.abs(slow))))
        elapsed = time.perf_counter() - start
        assert worst < 1e-10
        report("reduced-operator-oracle", f"20 instances, worst rel dev={worst:.2e}, {elapsed:.1f}s")


class TestManufacturedConsistency:
    def test_epsilon_ladder(self):
        start = time.perf_counter()
        grid = nv.build_grid(1.0, 41)
        n_modes = 12
        basis = nv.build_basis(0.2, n_modes)
        x, y = grid.interior_xy()
        bump = np.sin(np.pi * (x + 1) / 2) ** 2 * np.sin(np.pi * (y + 1) / 2) ** 2
        amps = (0.5 + 0.3j) * 0.6 ** np.arange(n_modes + 1)
        coeffs = np.outer(amps, bump).astype(complex)
        u_star = ModalField(n_modes, (1.0, 41), coeffs)
        data = nv.ModalBoundaryData(n_modes, (grid.trace_op @ coeffs.T).T)
        g_star = -(1j * (basis.s_matrix @ coeffs) + (grid.laplacian @ coeffs.T).T)

        errors = []
        for epsilon in (1e-4, 1e-6, 1e-8):
            cfg = desk_config(n_modes=n_modes, epsilon=epsilon, k_max=1)
            weight = nv.build_weight(grid, cfg.focus, cfg.lambda_, cfg.beta)
            problem = nv.assemble_frozen_ls(grid, basis, weight, data, g_star, cfg)
            sol, info = nv.solve_ls(problem, cfg.ls_tol, cfg.ls_max_iter)
            assert info.converged
            errors.append(nv.weighted_error(grid, sol, u_star, weight, cfg))
        elapsed = time.perf_counter() - start
        assert errors[0] > errors[1] > errors[2]
        assert errors[2] < 1e-3
        assert elapsed < 120.0
        report(
            "manufactured-consistency",
            "errors=" + ", ".join(f"{e:.2e}" for e in errors) + f", {elapsed:.1f}s",
        )


class TestDeskScaleReconstruction:
    def test_test1_quality(self, desk_grid, desk_reconstructions):
        rep, elapsed = desk_reconstructions[0.1]
        summary = rep.amplitude_summary
        err_re = summary["rel_amplitude_error_real"]
        err_im = summary["rel_amplitude_error_imag"]
        assert err_re <= 0.25
        assert err_im <= 0.25

        re_centroid = half_max_centroid(desk_grid, rep.u0_field.real)
        im_centroid = half_max_centroid(desk_grid, rep.u0_field.imag)
        d_re = np.hypot(re_centroid[0] + 0.25, re_centroid[1] - 0.15)
        d_im = np.hypot(im_centroid[0] - 0.20, im_centroid[1] + 0.20)
        assert d_re <= 0.1
        assert d_im <= 0.1

        changes = [r.rel_change for r in rep.history]
        assert all(a >= b for a, b in zip(changes[3:], changes[4:]))
        assert changes[-1] < 1e-2
        assert elapsed < 900.0
        report(
            "desk-test1",
            f"amp errors {err_re:.1%}/{err_im:.1%} <= 25%, centroid off "
            f"{d_re:.3f}/{d_im:.3f} <= 0.1, final rel change {changes[-1]:.1e}, "
            f"{elapsed:.0f}s",
        )


class TestStabilityUnderNoise:
    def test_error_nondecreasing_in_delta(self, desk_grid, desk_reconstructions):
        cfg = desk_config()
        weight = nv.build_weight(desk_grid, cfg.focus, cfg.lambda_, cfg.beta)
        clean = desk_reconstructions[0.0][0].final_modal
        errors = [
            nv.weighted_error(desk_grid, desk_reconstructions[d][0].final_modal, clean, weight, cfg)
            for d in (0.0, 0.05, 0.1)
        ]
        total_time = sum(t for _, t in desk_reconstructions.values())
        one_run = desk_reconstructions[0.1][1]
        assert errors[0] == 0.0
        assert errors[0] <= errors[1] <= errors[2]
        assert total_time <= 3.0 * one_run * 1.5  # generous scheduling slack
        report(
            "noise-stability",
            "weighted errors " + ", ".join(f"{e:.3e}" for e in errors) + " nondecreasing",
        )


class TestMetricFloor:
    def test_denominator_floor_exact(self):
        grid = nv.build_grid(1.0, 11)
        basis = nv.build_basis(0.2, 2)
        coeffs = np.zeros((3, grid.n_interior), dtype=complex)
        coeffs[1] = 1e-4  # constant mode: tiny Laplacian norm
        u = ModalField(2, (1.0, 11), coeffs)
        g = np.zeros_like(coeffs)
        h = grid.spacing
        lap = (grid.laplacian @ coeffs.T).T
        lap_norm = float(np.sqrt(h**2 * np.sum(np.abs(lap) ** 2)))
        assert lap_norm < 1e-2
        numerator = float(
            np.sqrt(h**2 * np.sum(np.abs(1j * (basis.s_matrix @ coeffs) + lap) ** 2))
        )
        value = nv.residual_metric(grid, basis, u, g)
        assert value == numerator / 1e-2
        report("metric-floor", f"||lap u||={lap_norm:.2e} < 1e-2, denominator pinned at 1e-2")


class TestDeterminism:
    def test_byte_identical_metrics(self, tmp_path):
        config_text = (
            "n_per_side = 31\ndt = 2e-3\nhorizon = 0.2\nn_modes = 8\n"
            "noise_delta = 0.1\nnoise_seed = 42\nk_max = 4\nphantom = test1\n"
        )
        cfg_path = tmp_path / "determinism.cfg"
        cfg_path.write_text(config_text, encoding="utf-8")
        out = str(tmp_path / "out")
        assert cli_main(["forward", "--config", str(cfg_path), "--output-dir", out]) == 0
        trace = os.path.join(out, "determinism_trace_noisy.csv")
        argv = ["invert", "--config", str(cfg_path), "--trace", trace, "--output-dir", out]
        assert cli_main(argv) == 0
        metrics = os.path.join(out, "determinism_metrics.csv")
        first = open(metrics, "rb").read()
        assert cli_main(argv) == 0
        second = open(metrics, "rb").read()
        assert first == second
        report("determinism", f"metrics CSV byte-identical across runs ({len(first)} bytes)")


@pytest.mark.skipif(
    not os.environ.get("NLSINV_FULL_SCALE"),
    reason="full-scale run takes hours; set NLSINV_FULL_SCALE=1 to enable",
)
class TestFullScaleOptional:
    def test_paper_scale_amplitudes(self):
        grid = nv.build_grid(1.0, 61)
        basis = nv.build_basis(0.2, 65)
        trace = nv.run_forward(grid, nv.test1_phantom(), 0.2, 1.25e-4, 2.0, 1.0)
        noisy = nv.add_noise(trace, 0.1, 42)
        cfg = desk_config(n_modes=65)
        weight = nv.build_weight(grid, cfg.focus, cfg.lambda_, cfg.beta)
        data = nv.project_trace(basis, noisy)
        truth = nv.rasterize_phantom(grid, nv.test1_phantom())
        rep = nv.picard_solve(grid, basis, weight, data, cfg, 2.0, 1.0, truth=truth)
        err_re = rep.amplitude_summary["rel_amplitude_error_real"]
        err_im = rep.amplitude_summary["rel_amplitude_error_imag"]
        # Published run: 4.83% and 9.91%; a different noise realization moves
        # these by a few points.
        assert abs(err_re - 0.0483) <= 0.05
        assert abs(err_im - 0.0991) <= 0.05
        report("full-scale", f"amp errors {err_re:.2%}/{err_im:.2%}")
