"""Uniform Cartesian grid on the square (-R, R)^2.

Holds the interior index map, the five-point Laplacian with homogeneous
Dirichlet condition, the one-sided Neumann trace stencil on the boundary, and
the Carleman weight fields.  All operators act on flat interior vectors
indexed y-outer / x-inner; corners carry no Neumann data (their outward
normal is undefined), so the boundary list has 4*(N_x - 2) nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

__all__ = [
    "SpatialGrid",
    "CarlemanWeight",
    "build_grid",
    "laplacian_apply",
    "neumann_trace",
    "build_weight",
    "carleman_diagnostic",
]

# Largest exponent 2*lambda*r^-beta that keeps the weight finite in doubles.
_EXP_CEILING = 700.0


@dataclass(frozen=True)
class SpatialGrid:
    """Grid geometry plus the sparse stencil operators.

    ``laplacian`` is the five-point operator on interior nodes (off-grid
    neighbours are zero, i.e. homogeneous Dirichlet).  ``trace_op`` maps an
    interior field to the outward normal derivative on the boundary nodes via
    the second-order one-sided stencil (u2 - 4*u1) / (2h), the boundary value
    itself being zero.  ``grad_x``/``grad_y`` are centered differences with
    the same Dirichlet convention.
    """

    half_width: float
    n_per_side: int
    spacing: float
    axis_nodes: np.ndarray          # (N_x,) coordinates along one axis
    boundary_ij: np.ndarray         # (n_bd, 2) lattice indices (i=x, j=y)
    boundary_xy: np.ndarray         # (n_bd, 2) coordinates
    boundary_normals: np.ndarray    # (n_bd, 2) outward unit normals
    laplacian: sparse.csr_matrix
    trace_op: sparse.csr_matrix
    grad_x: sparse.csr_matrix
    grad_y: sparse.csr_matrix

    @property
    def n_interior(self) -> int:
        return (self.n_per_side - 2) ** 2

    @property
    def n_boundary(self) -> int:
        return self.boundary_ij.shape[0]

    def interior_flat(self, i: int, j: int) -> int:
        """Flat index of interior lattice point (i, j), 1 <= i, j <= N_x - 2."""
        m = self.n_per_side - 2
        if not (1 <= i <= m and 1 <= j <= m):
            raise IndexError(f"({i}, {j}) is not an interior lattice point")
        return (j - 1) * m + (i - 1)

    def interior_ij(self, k: int) -> tuple[int, int]:
        """Inverse of :meth:`interior_flat`."""
        m = self.n_per_side - 2
        if not (0 <= k < m * m):
            raise IndexError(f"flat index {k} out of range")
        return k % m + 1, k // m + 1

    def interior_xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates of all interior nodes as flat arrays (x, y)."""
        inner = self.axis_nodes[1:-1]
        xg, yg = np.meshgrid(inner, inner, indexing="xy")
        return xg.ravel(), yg.ravel()

    def to_full(self, field: np.ndarray) -> np.ndarray:
        """Embed a flat interior field into an (N_x, N_x) array, zero boundary.

        Row index = y, column index = x.
        """
        field = np.asarray(field)
        m = self.n_per_side - 2
        if field.shape != (m * m,):
            raise ValueError(f"expected interior field of length {m * m}, got {field.shape}")
        full = np.zeros((self.n_per_side, self.n_per_side), dtype=field.dtype)
        full[1:-1, 1:-1] = field.reshape(m, m)
        return full


@dataclass(frozen=True)
class CarlemanWeight:
    """Carleman weight exp(2*lambda*r^-beta), r = |x - x0|, focus x0 outside.

    ``boundary_weight_scaled`` carries the lambda^3 factor used by the
    boundary-misfit block of the least-squares functional.
    """

    focus: tuple[float, float]
    lambda_: float
    beta: float
    interior_weight: np.ndarray
    boundary_weight: np.ndarray

    @property
    def boundary_weight_scaled(self) -> np.ndarray:
        return self.lambda_**3 * self.boundary_weight


def build_grid(half_width: float, n_per_side: int) -> SpatialGrid:
    """Build the grid and its stencil operators.

    The boundary list is traversed bottom edge left-to-right, right edge
    bottom-to-top, top edge right-to-left, left edge top-to-bottom, with the
    four corners excluded.
    """
    if half_width <= 0.0:
        raise ValueError(f"half_width must be positive, got {half_width}")
    if n_per_side < 5:
        raise ValueError(f"n_per_side must be >= 5, got {n_per_side}")

    nx = int(n_per_side)
    h = 2.0 * half_width / (nx - 1)
    axis = -half_width + h * np.arange(nx)
    m = nx - 2

    # Interior operators via Kronecker products; flat index (j-1)*m + (i-1).
    one_d = sparse.diags(
        [np.ones(m - 1), -2.0 * np.ones(m), np.ones(m - 1)], [-1, 0, 1], format="csr"
    )
    eye = sparse.eye(m, format="csr")
    lap = (sparse.kron(eye, one_d) + sparse.kron(one_d, eye)).tocsr() / h**2

    d_one = sparse.diags([-np.ones(m - 1), np.ones(m - 1)], [-1, 1], format="csr") / (2.0 * h)
    grad_x = sparse.kron(eye, d_one).tocsr()
    grad_y = sparse.kron(d_one, eye).tocsr()

    # Boundary traversal with inward neighbour chains for the trace stencil.
    edge = np.arange(1, nx - 1)
    bottom = np.stack([edge, np.zeros_like(edge)], axis=1)
    right = np.stack([np.full_like(edge, nx - 1), edge], axis=1)
    top = np.stack([edge[::-1], np.full_like(edge, nx - 1)], axis=1)
    left = np.stack([np.zeros_like(edge), edge[::-1]], axis=1)
    boundary_ij = np.concatenate([bottom, right, top, left])
    normals = np.concatenate(
        [
            np.tile([0.0, -1.0], (m, 1)),
            np.tile([1.0, 0.0], (m, 1)),
            np.tile([0.0, 1.0], (m, 1)),
            np.tile([-1.0, 0.0], (m, 1)),
        ]
    )
    boundary_xy = axis[boundary_ij].astype(float)

    rows, cols, vals = [], [], []
    for b, ((i, j), (ni, nj)) in enumerate(zip(boundary_ij, normals.astype(int))):
        # First and second interior nodes along the inward normal.
        i1, j1 = i - ni, j - nj
        i2, j2 = i - 2 * ni, j - 2 * nj
        k1 = (j1 - 1) * m + (i1 - 1)
        k2 = (j2 - 1) * m + (i2 - 1)
        rows += [b, b]
        cols += [k1, k2]
        vals += [-4.0 / (2.0 * h), 1.0 / (2.0 * h)]
    trace_op = sparse.csr_matrix(
        (vals, (rows, cols)), shape=(boundary_ij.shape[0], m * m)
    )

    return SpatialGrid(
        half_width=float(half_width),
        n_per_side=nx,
        spacing=h,
        axis_nodes=axis,
        boundary_ij=boundary_ij,
        boundary_xy=boundary_xy,
        boundary_normals=normals,
        laplacian=lap,
        trace_op=trace_op,
        grad_x=grad_x,
        grad_y=grad_y,
    )


def laplacian_apply(grid: SpatialGrid, field: np.ndarray) -> np.ndarray:
    """Five-point Laplacian of a flat interior field."""
    field = np.asarray(field)
    if field.shape != (grid.n_interior,):
        raise ValueError(f"expected field of length {grid.n_interior}, got {field.shape}")
    return grid.laplacian @ field


def neumann_trace(grid: SpatialGrid, field: np.ndarray) -> np.ndarray:
    """Outward normal derivative on the boundary nodes.

    Second-order one-sided stencil with the homogeneous Dirichlet value
    substituted; exact for profiles quadratic in the normal coordinate.
    """
    field = np.asarray(field)
    if field.shape != (grid.n_interior,):
        raise ValueError(f"expected field of length {grid.n_interior}, got {field.shape}")
    return grid.trace_op @ field


def _focus_distance(grid: SpatialGrid, focus: tuple[float, float]) -> float:
    """Distance from the focus to the closed square."""
    fx, fy = focus
    r = grid.half_width
    cx = min(max(fx, -r), r)
    cy = min(max(fy, -r), r)
    return float(np.hypot(fx - cx, fy - cy))


def build_weight(
    grid: SpatialGrid, focus: tuple[float, float], lambda_: float, beta: float
) -> CarlemanWeight:
    """Evaluate the Carleman weight on interior and boundary nodes.

    The focus must lie strictly outside the closed square; construction fails
    if the exponent would overflow double precision.
    """
    if lambda_ < 0.0:
        raise ValueError(f"lambda_ must be nonnegative, got {lambda_}")
    if beta <= 0.0:
        raise ValueError(f"beta must be positive, got {beta}")
    dist = _focus_distance(grid, focus)
    if dist <= 0.0:
        raise ValueError(f"focus {focus} must lie strictly outside the closed domain")
    if 2.0 * lambda_ * dist ** (-beta) > _EXP_CEILING:
        raise ValueError(
            f"weight overflows: 2*lambda*r_min^-beta = {2.0 * lambda_ * dist ** (-beta):.3g} > {_EXP_CEILING}"
        )

    fx, fy = focus
    xi, yi = grid.interior_xy()
    r_int = np.hypot(xi - fx, yi - fy)
    r_bd = np.hypot(grid.boundary_xy[:, 0] - fx, grid.boundary_xy[:, 1] - fy)
    return CarlemanWeight(
        focus=(float(fx), float(fy)),
        lambda_=float(lambda_),
        beta=float(beta),
        interior_weight=np.exp(2.0 * lambda_ * r_int ** (-beta)),
        boundary_weight=np.exp(2.0 * lambda_ * r_bd ** (-beta)),
    )


def _support_touches_margin(grid: SpatialGrid, field: np.ndarray, layers: int = 2) -> bool:
    m = grid.n_per_side - 2
    f = np.abs(field.reshape(m, m))
    mask = np.zeros((m, m), dtype=bool)
    mask[layers:-layers, layers:-layers] = True
    return bool(np.any(f[~mask] != 0.0))


def carleman_diagnostic(grid: SpatialGrid, weight: CarlemanWeight, field: np.ndarray) -> float:
    """Ratio of the weighted Laplacian energy to the weighted lower-order terms.

    Computes ``int w |lap u|^2 / int w (lambda^3 |u|^2 + lambda |grad u|^2)``
    with discrete sums over interior nodes.  The field must vanish within two
    layers of the boundary so the boundary contribution is negligible at
    stencil accuracy.  Reported per lambda; only positivity is meaningful
    (the constant in the underlying estimate is not computable).
    """
    field = np.asarray(field)
    if field.shape != (grid.n_interior,):
        raise ValueError(f"expected field of length {grid.n_interior}, got {field.shape}")
    if not np.any(field):
        raise ValueError("diagnostic undefined for the zero field")
    if _support_touches_margin(grid, field):
        raise ValueError("field must vanish within two layers of the boundary")

    w = weight.interior_weight
    lam = weight.lambda_
    lap = grid.laplacian @ field
    gx = grid.grad_x @ field
    gy = grid.grad_y @ field
    num = float(np.sum(w * np.abs(lap) ** 2))
    den = float(np.sum(w * (lam**3 * np.abs(field) ** 2 + lam * (np.abs(gx) ** 2 + np.abs(gy) ** 2))))
    if den == 0.0:
        raise ValueError("diagnostic undefined: lower-order terms vanish (lambda == 0?)")
    return num / den
