"""Evaluate a trained network at t = 0 and emit the shared grid CSV."""

from __future__ import annotations

import numpy as np
import torch

from .config import PinnConfig
from .data import write_grid_csv
from .model import build_model


def load_model(path: str):
    payload = torch.load(path, weights_only=False)
    cfg = PinnConfig(**payload["config"])
    model = build_model(cfg)
    model.load_state_dict(payload["state"])
    model.eval()
    return model, cfg


def evaluate_u0(model_path: str, out_path: str, n_per_side: int | None = None) -> np.ndarray:
    """Sample u(x, 0) on the uniform grid and write it in grid CSV format."""
    model, cfg = load_model(model_path)
    n = n_per_side or cfg.n_per_side
    if n < 2:
        raise ValueError(f"n_per_side must be at least 2, got {n}")
    axis = np.linspace(-cfg.half_width, cfg.half_width, n)
    xg, yg = np.meshgrid(axis, axis, indexing="xy")
    xyt = np.column_stack([xg.ravel(), yg.ravel(), np.zeros(n * n)])
    with torch.no_grad():
        out = model(torch.from_numpy(xyt)).numpy()
    field = (out[:, 0] + 1j * out[:, 1]).reshape(n, n)
    if not np.all(np.isfinite(out)):
        raise RuntimeError("trained network produced non-finite values")
    write_grid_csv(out_path, axis, field)
    return field
