"""Carleman-weighted regularized least squares and the Picard iteration.

Each iteration freezes the nonlinear modal term at the current iterate and
solves a linear weighted least-squares problem whose squared residual equals
the weighted functional: interior rows carry the reduced-system residual
under the Carleman weight, boundary rows the Neumann mismatch scaled by
lambda^3, and regularization rows a discrete second-order Sobolev surrogate
scaled by sqrt(epsilon).  The Dirichlet condition is built in because the
unknowns are interior values only.

The least-squares operator does not depend on the iterate (only the
right-hand side does), so its normal-equation factorization is computed once
per configuration and reused across the Picard sweep.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.sparse as sparse
from scipy.sparse.linalg import splu

from .reduction import (
    ModalBoundaryData,
    ModalField,
    frozen_nonlinearity,
    zero_modal_field,
)
from .spatial_grid import CarlemanWeight, SpatialGrid
from .time_basis import TimeBasis

__all__ = [
    "InversionConfig",
    "IterationRecord",
    "ReconstructionReport",
    "FrozenLeastSquares",
    "LsSolveInfo",
    "assemble_frozen_ls",
    "solve_ls",
    "picard_solve",
    "rel_change",
    "residual_metric",
    "reconstruct_u0",
    "weighted_error",
    "RESIDUAL_FLOOR",
]

# Floor in the dimensionless residual denominator.
RESIDUAL_FLOOR = 1e-2

# Above this many complex unknowns the sparse LU of the normal matrix stops
# paying for itself on this problem family; CGLS takes over.
_DIRECT_LIMIT = 6_000


@dataclass(frozen=True)
class InversionConfig:
    """Artificial parameters of the inversion.

    ``admissible_bound`` is recorded and checked after the fact (a warning,
    not a constraint): the least-squares steps themselves are unconstrained.
    ``reg_weights`` are the (value, gradient, Laplacian) weights of the
    discrete second-order regularizer.
    """

    lambda_: float
    beta: float
    focus: tuple[float, float]
    epsilon: float
    n_modes: int
    k_max: int
    reg_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    ls_tol: float = 1e-8
    ls_max_iter: int = 20_000
    admissible_bound: float = 100.0
    seed: int = 0

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.lambda_ <= 0.0:
            raise ValueError(f"lambda_ must be positive, got {self.lambda_}")
        if self.k_max < 1:
            raise ValueError(f"k_max must be >= 1, got {self.k_max}")
        if self.n_modes < 0:
            raise ValueError(f"n_modes must be >= 0, got {self.n_modes}")
        if self.admissible_bound <= 0.0:
            raise ValueError("admissible_bound must be positive")
        if any(w < 0.0 for w in self.reg_weights):
            raise ValueError("reg_weights must be nonnegative")


@dataclass(frozen=True)
class IterationRecord:
    index: int
    rel_change: float
    residual: float
    ls_iterations: int
    ls_final_residual: float


@dataclass(frozen=True)
class ReconstructionReport:
    history: tuple[IterationRecord, ...]
    final_modal: ModalField
    u0_field: np.ndarray               # (N_x, N_x), zero on the boundary
    amplitude_summary: dict


@dataclass
class FrozenLeastSquares:
    """Stacked rectangular system for one frozen Picard step."""

    matrix: sparse.csr_matrix
    rhs: np.ndarray
    n_modes: int
    n_interior: int
    grid_ref: tuple[float, int]
    interior_scale: np.ndarray         # sqrt(h^2 * w_int), for rhs updates
    boundary_rhs: np.ndarray           # scaled data block, iterate-independent

    def rhs_for(self, g: np.ndarray) -> np.ndarray:
        """Right-hand side for a new frozen term; the operator is unchanged."""
        interior = -(g * self.interior_scale[None, :]).ravel()
        tail = np.zeros(self.matrix.shape[0] - interior.size - self.boundary_rhs.size)
        return np.concatenate([interior, self.boundary_rhs, tail])


@dataclass(frozen=True)
class LsSolveInfo:
    iterations: int
    final_residual: float
    converged: bool
    method: str


def assemble_frozen_ls(
    grid: SpatialGrid,
    basis: TimeBasis,
    weight: CarlemanWeight,
    data: ModalBoundaryData,
    g: np.ndarray,
    cfg: InversionConfig,
) -> FrozenLeastSquares:
    """Assemble the weighted least-squares problem for one frozen step.

    Row blocks, each scaled so its squared Euclidean norm equals the matching
    term of the functional:

    * interior: sqrt(h^2 w) * [i sum_n s[m,n] u_n + lap u_m + g_m]
    * boundary: sqrt(lambda^3 h w) * [trace(u_m) - f_m]
    * regularization: sqrt(eps) * [sqrt(w0 h^2) u_m,
      sqrt(w1 h^2) grad u_m, sqrt(w2 h^2) lap u_m]
    """
    n = cfg.n_modes
    if basis.n_modes != n or data.n_modes != n:
        raise ValueError(
            f"mode counts disagree: cfg N={n}, basis N={basis.n_modes}, data N={data.n_modes}"
        )
    g = np.asarray(g)
    if g.shape != (n + 1, grid.n_interior):
        raise ValueError(f"frozen term has shape {g.shape}, expected {(n + 1, grid.n_interior)}")
    if data.coeffs.shape[1] != grid.n_boundary:
        raise ValueError("data does not match the grid boundary list")
    if (weight.lambda_, weight.beta, weight.focus) != (cfg.lambda_, cfg.beta, cfg.focus):
        raise ValueError("weight was not built from this configuration")

    h = grid.spacing
    eye = sparse.eye(n + 1, format="csr")
    s_op = sparse.csr_matrix(basis.s_matrix)

    d_int = np.sqrt(h**2 * weight.interior_weight)
    a_interior = 1j * sparse.kron(s_op, sparse.diags(d_int)) + sparse.kron(
        eye, sparse.diags(d_int) @ grid.laplacian
    )

    d_bd = np.sqrt(cfg.lambda_**3 * h * weight.boundary_weight)
    a_boundary = sparse.kron(eye, sparse.diags(d_bd) @ grid.trace_op)

    w0, w1, w2 = cfg.reg_weights
    sq_eps = np.sqrt(cfg.epsilon)
    n_unknowns = (n + 1) * grid.n_interior
    reg_blocks = [
        sq_eps * np.sqrt(w0 * h**2) * sparse.eye(n_unknowns, format="csr"),
        sq_eps * np.sqrt(w1 * h**2) * sparse.kron(eye, grid.grad_x),
        sq_eps * np.sqrt(w1 * h**2) * sparse.kron(eye, grid.grad_y),
        sq_eps * np.sqrt(w2 * h**2) * sparse.kron(eye, grid.laplacian),
    ]

    matrix = sparse.vstack([a_interior, a_boundary] + reg_blocks, format="csr", dtype=complex)
    boundary_rhs = (data.coeffs * d_bd[None, :]).ravel()
    problem = FrozenLeastSquares(
        matrix=matrix,
        rhs=np.empty(0),
        n_modes=n,
        n_interior=grid.n_interior,
        grid_ref=(grid.half_width, grid.n_per_side),
        interior_scale=d_int,
        boundary_rhs=boundary_rhs,
    )
    problem.rhs = problem.rhs_for(g)
    return problem


class _NormalSolver:
    """Least-squares solver with diagonal column scaling.

    Solves ``min ||A x - b||`` through the normal equations of the
    column-scaled system.  Small problems factorize the scaled normal matrix
    once (sparse LU, reused across right-hand sides) and polish by iterative
    refinement; larger ones run CGLS on the scaled rectangular system, which
    supports warm starts from a previous iterate.  Convergence is measured
    by the relative normal-equation residual ``||A^H (b - A x)|| / ||A^H b||``.
    """

    def __init__(self, matrix: sparse.csr_matrix, ls_tol: float, ls_max_iter: int):
        self.ls_tol = ls_tol
        self.ls_max_iter = ls_max_iter
        col_sq = np.asarray(matrix.multiply(matrix.conj()).real.sum(axis=0)).ravel()
        col_sq[col_sq == 0.0] = 1.0
        self.col_scale = 1.0 / np.sqrt(col_sq)
        self.scaled = (matrix @ sparse.diags(self.col_scale)).tocsr()
        self.scaled_h = self.scaled.conj().T.tocsr()
        self.direct = matrix.shape[1] <= _DIRECT_LIMIT
        if self.direct:
            normal = (self.scaled_h @ self.scaled).tocsc()
            self.normal = normal
            self.lu = splu(normal)

    def solve(
        self, rhs: np.ndarray, x0: np.ndarray | None = None
    ) -> tuple[np.ndarray, LsSolveInfo]:
        atb = self.scaled_h @ rhs
        atb_norm = np.linalg.norm(atb)
        if atb_norm == 0.0:
            info = LsSolveInfo(0, 0.0, True, "direct" if self.direct else "cgls")
            return np.zeros(self.scaled.shape[1], dtype=complex), info
        if self.direct:
            y, info = self._solve_direct(atb, atb_norm)
        else:
            y0 = None if x0 is None else x0 / self.col_scale
            y, info = self._solve_cgls(rhs, atb_norm, y0)
        return self.col_scale * y, info

    def _solve_direct(self, atb, atb_norm):
        y = self.lu.solve(atb)
        iterations = 1
        rel = np.linalg.norm(atb - self.normal @ y) / atb_norm
        while rel > self.ls_tol and iterations < self.ls_max_iter:
            y = y + self.lu.solve(atb - self.normal @ y)
            iterations += 1
            rel = np.linalg.norm(atb - self.normal @ y) / atb_norm
        return y, LsSolveInfo(iterations, float(rel), bool(rel <= self.ls_tol), "direct")

    def _solve_cgls(self, rhs, atb_norm, y0=None):
        if y0 is None:
            y = np.zeros(self.scaled.shape[1], dtype=complex)
            r = rhs.astype(complex)
        else:
            y = y0.astype(complex)
            r = rhs - self.scaled @ y
        s = self.scaled_h @ r
        rel = np.linalg.norm(s) / atb_norm
        if rel <= self.ls_tol:
            return y, LsSolveInfo(0, float(rel), True, "cgls")
        p = s.copy()
        gamma = float(np.vdot(s, s).real)
        iterations = 0
        for iterations in range(1, self.ls_max_iter + 1):
            q = self.scaled @ p
            alpha = gamma / float(np.vdot(q, q).real)
            y += alpha * p
            r -= alpha * q
            s = self.scaled_h @ r
            gamma_new = float(np.vdot(s, s).real)
            rel = np.sqrt(gamma_new) / atb_norm
            if rel <= self.ls_tol:
                break
            p = s + (gamma_new / gamma) * p
            gamma = gamma_new
        return y, LsSolveInfo(iterations, float(rel), bool(rel <= self.ls_tol), "cgls")


def solve_ls(
    problem: FrozenLeastSquares,
    ls_tol: float = 1e-8,
    ls_max_iter: int = 20_000,
) -> tuple[ModalField, LsSolveInfo]:
    """Minimize the stacked residual norm; returns the modal field and solve info.

    The method is equivalent to solving the normal equations of the scaled
    system; ``info`` reports the iteration count and the final relative
    normal-equation residual.  Hitting the iteration cap is reported, not
    raised.
    """
    solver = _NormalSolver(problem.matrix, ls_tol, ls_max_iter)
    x, info = solver.solve(problem.rhs)
    if not info.converged:
        warnings.warn(
            f"least-squares solve stopped at residual {info.final_residual:.3e} "
            f"after {info.iterations} iterations",
            RuntimeWarning,
        )
    coeffs = x.reshape(problem.n_modes + 1, problem.n_interior)
    modal = ModalField(n_modes=problem.n_modes, grid_ref=problem.grid_ref, coeffs=coeffs)
    return modal, info


def _stacked_norm(coeffs: np.ndarray, h: float) -> float:
    """Discrete L2 norm over modes and interior nodes, h^2-scaled."""
    return float(np.sqrt(h**2 * np.sum(np.abs(coeffs) ** 2)))


def _grid_spacing(grid_ref: tuple[float, int]) -> float:
    half_width, n_per_side = grid_ref
    return 2.0 * half_width / (n_per_side - 1)


def rel_change(u_next: ModalField, u_prev: ModalField) -> float:
    """Relative change between consecutive iterates, 0 when both vanish."""
    if u_next.coeffs.shape != u_prev.coeffs.shape:
        raise ValueError("iterates have different shapes")
    h = _grid_spacing(u_next.grid_ref)
    num = _stacked_norm(u_next.coeffs - u_prev.coeffs, h)
    den = _stacked_norm(u_next.coeffs, h)
    if den == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return num / den


def residual_metric(
    grid: SpatialGrid, basis: TimeBasis, u: ModalField, g_of_u: np.ndarray
) -> float:
    """Dimensionless reduced-system residual with the 1e-2 denominator floor."""
    g_of_u = np.asarray(g_of_u)
    if u.coeffs.shape != g_of_u.shape:
        raise ValueError("frozen term shape does not match the field")
    h = grid.spacing
    lap = (grid.laplacian @ u.coeffs.T).T
    num = _stacked_norm(1j * (basis.s_matrix @ u.coeffs) + lap + g_of_u, h)
    den = max(_stacked_norm(lap, h), RESIDUAL_FLOOR)
    return num / den


def reconstruct_u0(basis: TimeBasis, u: ModalField) -> np.ndarray:
    """Initial wave field: sum_n u_n(x) psi_n(0) on the full grid, zero boundary."""
    if basis.n_modes != u.n_modes:
        raise ValueError(f"basis has N={basis.n_modes}, field has N={u.n_modes}")
    interior = basis.psi_at_zero @ u.coeffs
    _, n_per_side = u.grid_ref
    m = n_per_side - 2
    full = np.zeros((n_per_side, n_per_side), dtype=complex)
    full[1:-1, 1:-1] = interior.reshape(m, m)
    return full


def weighted_error(
    grid: SpatialGrid,
    u: ModalField,
    v: ModalField,
    weight: CarlemanWeight,
    cfg: InversionConfig,
) -> float:
    """Norm of u - v in the weighted metric used by the contraction analysis.

    Combines the weighted interior mass, twice the weighted boundary Neumann
    mismatch, and (2 eps / lambda^3) times the discrete regularizer, all
    discretized exactly as in the assembly.
    """
    if u.coeffs.shape != v.coeffs.shape:
        raise ValueError("fields have different shapes")
    d = u.coeffs - v.coeffs
    h = grid.spacing
    interior = h**2 * np.sum(weight.interior_weight[None, :] * np.abs(d) ** 2)
    trace = (grid.trace_op @ d.T).T
    boundary = 2.0 * h * np.sum(weight.boundary_weight[None, :] * np.abs(trace) ** 2)
    w0, w1, w2 = cfg.reg_weights
    gx = (grid.grad_x @ d.T).T
    gy = (grid.grad_y @ d.T).T
    lap = (grid.laplacian @ d.T).T
    surrogate = h**2 * (
        w0 * np.sum(np.abs(d) ** 2)
        + w1 * (np.sum(np.abs(gx) ** 2) + np.sum(np.abs(gy) ** 2))
        + w2 * np.sum(np.abs(lap) ** 2)
    )
    return float(np.sqrt(interior + boundary + 2.0 * cfg.epsilon / cfg.lambda_**3 * surrogate))


def picard_solve(
    grid: SpatialGrid,
    basis: TimeBasis,
    weight: CarlemanWeight,
    data: ModalBoundaryData,
    cfg: InversionConfig,
    p: float,
    q_field: Union[float, np.ndarray] = 1.0,
    truth: np.ndarray | None = None,
) -> ReconstructionReport:
    """Run the frozen-term fixed-point iteration from the zero initial guess.

    Each sweep freezes the nonlinearity at the current iterate, solves the
    weighted least-squares problem, and records the relative change and the
    dimensionless residual.  The operator factorization is shared by all
    sweeps.  ``truth``, when given, is the exact initial field on the
    interior nodes and enables relative amplitude errors in the summary.
    """
    u = zero_modal_field(grid, cfg.n_modes)
    g = np.zeros_like(u.coeffs)
    problem = assemble_frozen_ls(grid, basis, weight, data, g, cfg)
    solver = _NormalSolver(problem.matrix, cfg.ls_tol, cfg.ls_max_iter)

    history: list[IterationRecord] = []
    sup_norm = 0.0
    warm = None
    for k in range(cfg.k_max):
        x, info = solver.solve(problem.rhs_for(g), x0=warm)
        warm = x
        if not np.all(np.isfinite(x)):
            raise RuntimeError(f"non-finite iterate at sweep {k}")
        if not info.converged:
            warnings.warn(
                f"sweep {k}: least-squares stopped at residual {info.final_residual:.3e}",
                RuntimeWarning,
            )
        u_new = ModalField(
            n_modes=cfg.n_modes,
            grid_ref=(grid.half_width, grid.n_per_side),
            coeffs=x.reshape(cfg.n_modes + 1, grid.n_interior),
        )
        change = rel_change(u_new, u)
        g = frozen_nonlinearity(basis, u_new, q_field, p)
        res = residual_metric(grid, basis, u_new, g)
        history.append(
            IterationRecord(
                index=k,
                rel_change=change,
                residual=res,
                ls_iterations=info.iterations,
                ls_final_residual=info.final_residual,
            )
        )
        sup_norm = max(sup_norm, float(np.max(np.abs(u_new.coeffs), initial=0.0)))
        u = u_new

    if sup_norm > cfg.admissible_bound:
        warnings.warn(
            f"iterate sup-norm {sup_norm:.3g} exceeded the recorded admissible bound "
            f"{cfg.admissible_bound:.3g}",
            RuntimeWarning,
        )

    u0 = reconstruct_u0(basis, u)
    summary = {
        "max_abs_real": float(np.max(np.abs(u0.real))),
        "max_abs_imag": float(np.max(np.abs(u0.imag))),
        "sup_norm_modal": sup_norm,
    }
    if truth is not None:
        truth = np.asarray(truth)
        if truth.shape == (grid.n_interior,):
            truth_full = grid.to_full(truth)
        elif truth.shape == u0.shape:
            truth_full = truth
        else:
            raise ValueError("truth must be an interior field or a full-grid field")
        for part, key in ((np.real, "real"), (np.imag, "imag")):
            true_amp = float(np.max(np.abs(part(truth_full))))
            comp_amp = summary[f"max_abs_{key}"]
            if true_amp > 0.0:
                summary[f"rel_amplitude_error_{key}"] = abs(comp_amp - true_amp) / true_amp
    return ReconstructionReport(
        history=tuple(history),
        final_modal=u,
        u0_field=u0,
        amplitude_summary=summary,
    )
