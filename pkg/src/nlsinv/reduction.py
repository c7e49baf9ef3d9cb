"""Time-dimensional reduction of the space-time problem.

Projects boundary data onto the time basis, evaluates the frozen nonlinear
modal term, and forms residuals of the truncated coupled elliptic system
``i sum_n s[m,n] u_n + lap u_m + g_m = 0``.

The frozen term is never assembled as the full (N+1)^2 per-node tensor:
reconstructing the time signal at the quadrature nodes and projecting the
nonlinearity back is algebraically identical and keeps memory at
O(N * n_interior).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .spatial_grid import SpatialGrid
from .time_basis import TimeBasis

__all__ = [
    "ModalField",
    "ModalBoundaryData",
    "zero_modal_field",
    "project_trace",
    "frozen_nonlinearity",
    "reduced_residual",
    "truncation_residual_report",
]


@dataclass(frozen=True)
class ModalField:
    """Stack of complex coefficient fields u_0..u_N on the interior nodes."""

    n_modes: int
    grid_ref: tuple[float, int]        # (half_width, n_per_side)
    coeffs: np.ndarray                 # (N+1, n_interior) complex

    def __post_init__(self):
        if self.coeffs.shape[0] != self.n_modes + 1:
            raise ValueError(
                f"coeffs has {self.coeffs.shape[0]} modes, expected {self.n_modes + 1}"
            )

    @property
    def n_interior(self) -> int:
        return self.coeffs.shape[1]


@dataclass(frozen=True)
class ModalBoundaryData:
    """Projected Neumann data f_m on the boundary nodes."""

    n_modes: int
    coeffs: np.ndarray                 # (N+1, n_boundary) complex

    def __post_init__(self):
        if self.coeffs.shape[0] != self.n_modes + 1:
            raise ValueError(
                f"coeffs has {self.coeffs.shape[0]} modes, expected {self.n_modes + 1}"
            )


def zero_modal_field(grid: SpatialGrid, n_modes: int) -> ModalField:
    return ModalField(
        n_modes=n_modes,
        grid_ref=(grid.half_width, grid.n_per_side),
        coeffs=np.zeros((n_modes + 1, grid.n_interior), dtype=complex),
    )


def _interp_weights(basis: TimeBasis, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bin indices and fractions mapping the uniform grid to the quad nodes."""
    dt = times[1] - times[0]
    pos = basis.quad_nodes / dt
    idx = np.clip(np.floor(pos).astype(int), 0, times.size - 2)
    frac = pos - idx
    return idx, frac


def project_trace(basis: TimeBasis, trace) -> ModalBoundaryData:
    """Project a recorded trace onto the basis modes, node by node."""
    if abs(trace.horizon - basis.horizon) > 1e-12 * basis.horizon:
        raise ValueError(
            f"trace horizon {trace.horizon} does not match basis horizon {basis.horizon}"
        )
    idx, frac = _interp_weights(basis, trace.times)
    at_quad = trace.values[:, idx] * (1.0 - frac)[None, :] + trace.values[:, idx + 1] * frac[None, :]
    wpsi = basis.psi_table * basis.weighted_quad[None, :]
    return ModalBoundaryData(n_modes=basis.n_modes, coeffs=wpsi @ at_quad.T)


def frozen_nonlinearity(
    basis: TimeBasis,
    phi: ModalField,
    q_field: Union[float, np.ndarray] = 1.0,
    p: float = 2.0,
) -> np.ndarray:
    """Frozen nonlinear modal term g_m(x) evaluated at the iterate phi.

    Reconstructs ``Phi(x, t_q) = sum_l phi_l(x) psi_l(t_q)`` at the
    quadrature nodes, forms ``q |Phi|^{p-1} Phi``, and projects back onto
    each mode with the weighted rule.  Equals the double sum over the modal
    coupling tensor contracted with phi, without materializing the tensor.
    """
    if p <= 1.0:
        raise ValueError(f"p must exceed 1, got {p}")
    if basis.n_modes != phi.n_modes:
        raise ValueError(f"basis has N={basis.n_modes}, field has N={phi.n_modes}")
    phi_t = phi.coeffs.T @ basis.psi_table            # (n_interior, n_quad)
    q = np.asarray(q_field)
    if q.ndim == 1:
        q = q[:, None]
    nonlinear = q * np.abs(phi_t) ** (p - 1.0) * phi_t
    wpsi = basis.psi_table * basis.weighted_quad[None, :]
    return wpsi @ nonlinear.T                         # (N+1, n_interior)


def reduced_residual(
    grid: SpatialGrid, basis: TimeBasis, u: ModalField, g: np.ndarray
) -> np.ndarray:
    """Residual of the truncated coupled system at (u, g), mode by node."""
    g = np.asarray(g)
    if u.coeffs.shape != g.shape:
        raise ValueError(f"field shape {u.coeffs.shape} does not match term shape {g.shape}")
    if u.n_interior != grid.n_interior:
        raise ValueError(
            f"field has {u.n_interior} interior nodes, grid has {grid.n_interior}"
        )
    lap = (grid.laplacian @ u.coeffs.T).T
    return 1j * (basis.s_matrix @ u.coeffs) + lap + g


def truncation_residual_report(
    basis: TimeBasis, data: np.ndarray, n_list
) -> list[tuple[int, float]]:
    """Weighted L2-in-time norm of the tail left after an N-mode projection.

    ``data`` is sampled on the uniform forward time grid over [0, T]; it may
    be a single signal or a (node, time) array, in which case the tails are
    stacked over nodes.  Demonstrates the decay of the discarded-mode
    residual as N grows.
    """
    data = np.atleast_2d(np.asarray(data))
    times = np.linspace(0.0, basis.horizon, data.shape[1])
    idx, frac = _interp_weights(basis, times)
    at_quad = data[:, idx] * (1.0 - frac)[None, :] + data[:, idx + 1] * frac[None, :]
    wq = basis.weighted_quad
    wpsi = basis.psi_table * wq[None, :]
    coeffs = wpsi @ at_quad.T                          # (N+1, n_signals)

    report = []
    for n in n_list:
        if not (0 <= n <= basis.n_modes):
            raise ValueError(f"requested N={n} outside basis range 0..{basis.n_modes}")
        recon = coeffs[: n + 1].T @ basis.psi_table[: n + 1]
        tail = at_quad - recon
        report.append((int(n), float(np.sqrt(np.sum(wq[None, :] * np.abs(tail) ** 2)))))
    return report
