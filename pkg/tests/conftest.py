"""Shared fixtures.

The desk-scale reconstruction runs are the expensive pieces (about two
minutes each), so they are computed once per session and shared between the
unit tests and the acceptance gate.
"""

from __future__ import annotations

import time
import warnings

import numpy as np
import pytest

import nlsinv as nv

DESK_NX = 41
DESK_N_MODES = 24
DESK_DT = 1e-3
HORIZON = 0.2
DESK_SEED = 42


@pytest.fixture(scope="session")
def desk_grid():
    return nv.build_grid(1.0, DESK_NX)


@pytest.fixture(scope="session")
def desk_basis():
    return nv.build_basis(HORIZON, DESK_N_MODES)


@pytest.fixture(scope="session")
def desk_clean_trace(desk_grid):
    return nv.run_forward(desk_grid, nv.test1_phantom(), HORIZON, DESK_DT, 2.0, 1.0)


def desk_config(**overrides) -> nv.InversionConfig:
    base = dict(
        lambda_=20.0,
        beta=5.0,
        focus=(0.0, 8.0),
        epsilon=1e-6,
        n_modes=DESK_N_MODES,
        k_max=10,
        seed=DESK_SEED,
    )
    base.update(overrides)
    return nv.InversionConfig(**base)


@pytest.fixture(scope="session")
def desk_reconstructions(desk_grid, desk_basis, desk_clean_trace):
    """Test-1 desk reconstructions at noise 0, 0.05, 0.1: delta -> (report, seconds)."""
    cfg = desk_config()
    weight = nv.build_weight(desk_grid, cfg.focus, cfg.lambda_, cfg.beta)
    truth = nv.rasterize_phantom(desk_grid, nv.test1_phantom())
    runs = {}
    for delta in (0.0, 0.05, 0.1):
        trace = nv.add_noise(desk_clean_trace, delta, DESK_SEED)
        data = nv.project_trace(desk_basis, trace)
        start = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            report = nv.picard_solve(
                desk_grid, desk_basis, weight, data, cfg, 2.0, 1.0, truth=truth
            )
        runs[delta] = (report, time.perf_counter() - start)
    return runs


def half_max_centroid(grid, field: np.ndarray) -> tuple[float, float]:
    """Centroid of the half-maximum region of a nonnegative 2-D field."""
    x, y = np.meshgrid(grid.axis_nodes, grid.axis_nodes, indexing="xy")
    mask = field > 0.5 * field.max()
    return float(x[mask].mean()), float(y[mask].mean())
