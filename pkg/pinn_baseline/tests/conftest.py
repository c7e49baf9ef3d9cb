"""Shared fixtures: desk-scale Test-1 trace produced through the main
pipeline's CLI (its external interface); the baseline never imports it."""

from __future__ import annotations

import os
import shutil
import subprocess

import pytest

DESK_FORWARD_CONFIG = """\
n_per_side = 41
dt = 1e-3
horizon = 0.2
n_modes = 24
exponent_p = 2.0
phantom = test1
noise_delta = 0.1
noise_seed = 42
"""


@pytest.fixture(scope="session")
def test1_trace_path(tmp_path_factory) -> str:
    exe = shutil.which("nlsinv")
    if exe is None:
        pytest.skip("main pipeline CLI not installed; cannot generate Test-1 data")
    root = tmp_path_factory.mktemp("trace")
    cfg = root / "test1.cfg"
    cfg.write_text(DESK_FORWARD_CONFIG, encoding="utf-8")
    subprocess.run(
        [exe, "forward", "--config", str(cfg), "--output-dir", str(root)],
        check=True,
        capture_output=True,
    )
    path = root / "test1_trace_noisy.csv"
    assert os.path.exists(path)
    return str(path)
