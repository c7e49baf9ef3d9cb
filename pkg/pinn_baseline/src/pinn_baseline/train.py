"""Unsupervised training against the equation residual and boundary data.

The loss is ``w_int * L_int + w_D * L_D + w_N * L_N``: the squared equation
residual at interior collocation points, the squared Dirichlet mismatch on
the boundary, and the squared Neumann mismatch against the measured trace,
all derivatives by automatic differentiation.  The collocation sets (sized
by the configured batch sizes) are drawn once per run, uniformly in the
space-time cylinder resp. by arclength and time on its lateral boundary,
from a counter-based generator; every epoch is one full-batch optimizer
step over them, so runs are seed-reproducible.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import torch

from .config import PinnConfig
from .data import BoundaryTrace, boundary_point, interpolate_trace
from .model import WaveFieldNet, build_model


@dataclass
class EpochRecord:
    epoch: int
    total: float
    interior: float
    dirichlet: float
    neumann: float


def _interior_batch(rng, cfg: PinnConfig) -> torch.Tensor:
    pts = rng.uniform(
        low=[-cfg.half_width, -cfg.half_width, 0.0],
        high=[cfg.half_width, cfg.half_width, cfg.horizon],
        size=(cfg.batch_interior, 3),
    )
    return torch.from_numpy(pts)


def _boundary_batch(rng, cfg: PinnConfig, count: int):
    s = rng.uniform(0.0, 8.0 * cfg.half_width, size=count)
    t = rng.uniform(0.0, cfg.horizon, size=count)
    xy, nx, ny = boundary_point(s, cfg.half_width)
    xyt = np.column_stack([xy, t])
    return torch.from_numpy(xyt), torch.from_numpy(nx), torch.from_numpy(ny), s, t


def interior_residual(model: WaveFieldNet, xyt: torch.Tensor, cfg: PinnConfig) -> torch.Tensor:
    """Mean squared equation residual |i u_t + lap u + q |u|^{p-1} u|^2."""
    xyt = xyt.clone().requires_grad_(True)
    out = model(xyt)
    u_re, u_im = out[:, 0], out[:, 1]

    grads = []
    for component in (u_re, u_im):
        (g,) = torch.autograd.grad(component.sum(), xyt, create_graph=True)
        grads.append(g)
    lap = []
    for g in grads:
        gxx = torch.autograd.grad(g[:, 0].sum(), xyt, create_graph=True)[0][:, 0]
        gyy = torch.autograd.grad(g[:, 1].sum(), xyt, create_graph=True)[0][:, 1]
        lap.append(gxx + gyy)
    ut_re, ut_im = grads[0][:, 2], grads[1][:, 2]

    magnitude = torch.sqrt(u_re**2 + u_im**2 + 1e-30)
    envelope = cfg.q_const * magnitude ** (cfg.exponent_p - 1.0)
    # i u_t + lap u + q |u|^{p-1} u, split into real and imaginary parts.
    res_re = -ut_im + lap[0] + envelope * u_re
    res_im = ut_re + lap[1] + envelope * u_im
    return torch.mean(res_re**2 + res_im**2)


def dirichlet_loss(model: WaveFieldNet, xyt: torch.Tensor) -> torch.Tensor:
    out = model(xyt)
    return torch.mean(out[:, 0] ** 2 + out[:, 1] ** 2)


def neumann_loss(
    model: WaveFieldNet,
    xyt: torch.Tensor,
    nx: torch.Tensor,
    ny: torch.Tensor,
    target: np.ndarray,
) -> torch.Tensor:
    xyt = xyt.clone().requires_grad_(True)
    out = model(xyt)
    mismatch = []
    for component, data in ((out[:, 0], target.real), (out[:, 1], target.imag)):
        (g,) = torch.autograd.grad(component.sum(), xyt, create_graph=True)
        normal_derivative = g[:, 0] * nx + g[:, 1] * ny
        mismatch.append(normal_derivative - torch.from_numpy(data))
    return torch.mean(mismatch[0] ** 2 + mismatch[1] ** 2)


def train(
    trace: BoundaryTrace,
    cfg: PinnConfig,
    model_path: str,
    history_path: str,
    log_every: int = 0,
) -> list[EpochRecord]:
    """Run the optimization; writes the model file and per-epoch loss CSV.

    Aborts with the offending epoch if the loss stops being finite.
    """
    if abs(trace.half_width - cfg.half_width) > 1e-12 or abs(
        trace.times[-1] - cfg.horizon
    ) > 1e-9 * cfg.horizon:
        raise ValueError(
            f"trace domain (R={trace.half_width}, T={trace.times[-1]}) does not match "
            f"config (R={cfg.half_width}, T={cfg.horizon})"
        )
    model = build_model(cfg)
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)

    xyt_int = _interior_batch(rng, cfg)
    xyt_d, _, _, _, _ = _boundary_batch(rng, cfg, cfg.batch_dirichlet)
    xyt_n, nx, ny, s, t = _boundary_batch(rng, cfg, cfg.batch_neumann)
    target = interpolate_trace(trace, s, t)

    history: list[EpochRecord] = []
    for epoch in range(cfg.epochs):
        optimizer.zero_grad()
        l_int = interior_residual(model, xyt_int, cfg)
        l_d = dirichlet_loss(model, xyt_d)
        l_n = neumann_loss(model, xyt_n, nx, ny, target)
        loss = cfg.w_interior * l_int + cfg.w_dirichlet * l_d + cfg.w_neumann * l_n
        if not torch.isfinite(loss):
            raise RuntimeError(f"non-finite loss at epoch {epoch}")
        loss.backward()
        optimizer.step()

        record = EpochRecord(
            epoch, loss.item(), l_int.item(), l_d.item(), l_n.item()
        )
        history.append(record)
        if log_every and epoch % log_every == 0:
            print(
                f"epoch {epoch}: total={record.total:.6g} int={record.interior:.6g} "
                f"dirichlet={record.dirichlet:.6g} neumann={record.neumann:.6g}"
            )

    os.makedirs(os.path.dirname(os.path.abspath(model_path)), exist_ok=True)
    torch.save({"config": cfg.__dict__, "state": model.state_dict()}, model_path)
    write_history_csv(history_path, history)
    return history


def write_history_csv(path: str, history: list[EpochRecord]) -> None:
    lines = ["epoch,total,int,dirichlet,neumann"]
    for rec in history:
        lines.append(
            f"{rec.epoch},{rec.total!r},{rec.interior!r},{rec.dirichlet!r},{rec.neumann!r}"
        )
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
