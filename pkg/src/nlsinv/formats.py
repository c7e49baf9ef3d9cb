"""Delimited file formats shared by the CLI and external consumers.

All writers are atomic (write to a temporary file in the target directory,
then rename), emit UTF-8 text with LF endings, and print floats with
``repr`` so a read-back reproduces the exact double.  Formats:

* grid CSV:    ``x,y,re,im``           row-major, y outer / x inner
* trace CSV:   ``node_id,x,y,t,re,im`` node outer / time inner
* modal CSV:   ``mode,x,y,re,im``      mode outer, interior nodes only
* metrics CSV: ``iter,rel_change,residual,ls_iterations,ls_residual``
* basis CSV:   ``node_index,t,weight,psi_0,...,psi_N``
"""

from __future__ import annotations

import os
import tempfile
from typing import Iterable

import numpy as np

from .carleman_picard import IterationRecord
from .forward_sim import SpaceTimeTrace
from .reduction import ModalField
from .spatial_grid import SpatialGrid
from .time_basis import TimeBasis

__all__ = [
    "atomic_write_text",
    "write_grid_csv",
    "read_grid_csv",
    "write_trace_csv",
    "read_trace_csv",
    "write_modal_csv",
    "read_modal_csv",
    "write_metrics_csv",
    "read_metrics_csv",
    "write_basis_csv",
]


def atomic_write_text(path: str, content: str) -> None:
    """Write text so that a partial file can never be observed."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value: float) -> str:
    return repr(float(value))


def write_grid_csv(path: str, grid: SpatialGrid, field: np.ndarray) -> None:
    """Write a full-grid complex field, row-major with y outer and x inner."""
    field = np.asarray(field)
    nx = grid.n_per_side
    if field.shape != (nx, nx):
        raise ValueError(f"expected a ({nx}, {nx}) field, got {field.shape}")
    lines = ["x,y,re,im"]
    axis = grid.axis_nodes
    for j in range(nx):
        for i in range(nx):
            v = complex(field[j, i])
            lines.append(f"{_fmt(axis[i])},{_fmt(axis[j])},{_fmt(v.real)},{_fmt(v.imag)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_grid_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Read a grid CSV; returns (axis_nodes, field) with field[j, i] at (x_i, y_j)."""
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if raw.shape[1] != 4:
        raise ValueError(f"grid CSV must have 4 columns, found {raw.shape[1]}")
    n = int(round(np.sqrt(raw.shape[0])))
    if n * n != raw.shape[0]:
        raise ValueError(f"grid CSV has {raw.shape[0]} rows, not a square grid")
    axis = raw[:n, 0]
    field = (raw[:, 2] + 1j * raw[:, 3]).reshape(n, n)
    return axis, field


def write_trace_csv(path: str, trace: SpaceTimeTrace, grid: SpatialGrid) -> None:
    """Write Neumann data; one row per (boundary node, time level)."""
    if trace.values.shape[0] != grid.n_boundary:
        raise ValueError("trace does not match the grid boundary list")
    lines = ["node_id,x,y,t,re,im"]
    xy = grid.boundary_xy
    for b in range(grid.n_boundary):
        for n, t in enumerate(trace.times):
            v = trace.values[b, n]
            lines.append(
                f"{b},{_fmt(xy[b, 0])},{_fmt(xy[b, 1])},{_fmt(t)},{_fmt(v.real)},{_fmt(v.imag)}"
            )
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_trace_csv(path: str) -> SpaceTimeTrace:
    """Read a trace CSV; the grid descriptor is recovered from the node list.

    The noise metadata is not stored in the file, so the returned trace
    reports noise_level 0 / seed 0 regardless of how it was produced.
    """
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if raw.shape[1] != 6:
        raise ValueError(f"trace CSV must have 6 columns, found {raw.shape[1]}")
    node_ids = raw[:, 0].astype(int)
    n_nodes = node_ids.max() + 1
    if raw.shape[0] % n_nodes != 0:
        raise ValueError("trace CSV rows do not factor into (nodes x times)")
    n_times = raw.shape[0] // n_nodes
    if np.any(node_ids != np.repeat(np.arange(n_nodes), n_times)):
        raise ValueError("trace CSV rows are not ordered node-major")
    if n_nodes % 4 != 0:
        raise ValueError(f"boundary node count {n_nodes} is not 4*(N_x - 2)")
    n_per_side = n_nodes // 4 + 2
    half_width = float(np.max(np.abs(raw[:, 1:3])))
    times = raw[:n_times, 3]
    values = (raw[:, 4] + 1j * raw[:, 5]).reshape(n_nodes, n_times)
    return SpaceTimeTrace(
        grid_half_width=half_width,
        grid_n_per_side=n_per_side,
        times=times,
        values=values,
    )


def write_modal_csv(path: str, modal: ModalField, grid: SpatialGrid) -> None:
    """Write modal coefficient fields, mode outer, interior nodes y-outer."""
    if modal.n_interior != grid.n_interior:
        raise ValueError("modal field does not match the grid")
    x, y = grid.interior_xy()
    lines = ["mode,x,y,re,im"]
    for m in range(modal.n_modes + 1):
        row = modal.coeffs[m]
        for k in range(grid.n_interior):
            lines.append(
                f"{m},{_fmt(x[k])},{_fmt(y[k])},{_fmt(row[k].real)},{_fmt(row[k].imag)}"
            )
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_modal_csv(path: str) -> ModalField:
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if raw.shape[1] != 5:
        raise ValueError(f"modal CSV must have 5 columns, found {raw.shape[1]}")
    modes = raw[:, 0].astype(int)
    n_modes = modes.max()
    n_interior = raw.shape[0] // (n_modes + 1)
    if (n_modes + 1) * n_interior != raw.shape[0]:
        raise ValueError("modal CSV rows do not factor into (modes x nodes)")
    m = int(round(np.sqrt(n_interior)))
    if m * m != n_interior:
        raise ValueError(f"modal CSV node count {n_interior} is not a square")
    # Interior nodes reach R - h = R*(m-1)/(m+1) from the origin.
    half_width = float(np.max(np.abs(raw[:, 1:3]))) * (m + 1) / (m - 1)
    coeffs = (raw[:, 3] + 1j * raw[:, 4]).reshape(n_modes + 1, n_interior)
    return ModalField(n_modes=int(n_modes), grid_ref=(half_width, m + 2), coeffs=coeffs)


def write_metrics_csv(path: str, records: Iterable[IterationRecord]) -> None:
    lines = ["iter,rel_change,residual,ls_iterations,ls_residual"]
    for rec in records:
        lines.append(
            f"{rec.index},{_fmt(rec.rel_change)},{_fmt(rec.residual)},"
            f"{rec.ls_iterations},{_fmt(rec.ls_final_residual)}"
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_metrics_csv(path: str) -> list[IterationRecord]:
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if raw.size == 0:
        return []
    if raw.shape[1] != 5:
        raise ValueError(f"metrics CSV must have 5 columns, found {raw.shape[1]}")
    return [
        IterationRecord(
            index=int(row[0]),
            rel_change=float(row[1]),
            residual=float(row[2]),
            ls_iterations=int(row[3]),
            ls_final_residual=float(row[4]),
        )
        for row in raw
    ]


def write_basis_csv(path: str, basis: TimeBasis) -> None:
    """Dump the quadrature rule and mode tables for debugging."""
    header = "node_index,t,weight," + ",".join(f"psi_{n}" for n in range(basis.n_modes + 1))
    lines = [header]
    for q in range(basis.n_quad):
        cells = [str(q), _fmt(basis.quad_nodes[q]), _fmt(basis.quad_weights[q])]
        cells += [_fmt(basis.psi_table[n, q]) for n in range(basis.n_modes + 1)]
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")
