"""Fully connected tanh network mapping (x, y, t) to (Re u, Im u)."""

from __future__ import annotations

import torch
from torch import nn

from .config import PinnConfig


class WaveFieldNet(nn.Module):
    """3 -> width x hidden_layers -> 2 feedforward network, tanh throughout.

    Inputs are affinely mapped onto the unit cube before the first layer
    (the raw time coordinate spans only (0, T), which conditions the
    optimization poorly), and tanh keeps the map smooth enough for the
    second derivatives in the equation residual.
    """

    def __init__(self, cfg: PinnConfig):
        super().__init__()
        layers: list[nn.Module] = [nn.Linear(3, cfg.width), nn.Tanh()]
        for _ in range(cfg.hidden_layers - 1):
            layers += [nn.Linear(cfg.width, cfg.width), nn.Tanh()]
        layers.append(nn.Linear(cfg.width, 2))
        self.stack = nn.Sequential(*layers)
        self.register_buffer(
            "in_scale",
            torch.tensor([1.0 / cfg.half_width, 1.0 / cfg.half_width, 2.0 / cfg.horizon]),
        )
        self.register_buffer("in_shift", torch.tensor([0.0, 0.0, -1.0]))

    def forward(self, xyt: torch.Tensor) -> torch.Tensor:
        return self.stack(xyt * self.in_scale + self.in_shift)


def build_model(cfg: PinnConfig) -> WaveFieldNet:
    """Seeded construction so initialization is reproducible."""
    torch.manual_seed(cfg.seed)
    return WaveFieldNet(cfg).double()
