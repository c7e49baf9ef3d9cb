"""Shared-file-format access and boundary geometry.

This package talks to the main pipeline only through its delimited files:
the trace CSV (``node_id,x,y,t,re,im``, node-major) read here, and the grid
CSV (``x,y,re,im``, y outer / x inner) written by the evaluator.  The
boundary traversal in the trace runs bottom edge left-to-right, right edge
bottom-to-top, top edge right-to-left, left edge top-to-bottom, which makes
the node arclengths strictly increasing along the perimeter.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BoundaryTrace:
    """Neumann data on boundary nodes x uniform time levels."""

    half_width: float
    n_per_side: int
    node_xy: np.ndarray       # (n_nodes, 2)
    times: np.ndarray         # (n_times,)
    values: np.ndarray        # (n_nodes, n_times) complex
    arclengths: np.ndarray    # (n_nodes,) position along the perimeter

    @property
    def perimeter(self) -> float:
        return 8.0 * self.half_width


def _node_arclengths(xy: np.ndarray, half_width: float) -> np.ndarray:
    """Perimeter coordinate of each node, counterclockwise from (-R, -R)."""
    r = half_width
    x, y = xy[:, 0], xy[:, 1]
    s = np.empty(len(xy))
    bottom = y == -r
    right = x == r
    top = y == r
    left = x == -r
    s[bottom] = x[bottom] + r
    s[right] = 2 * r + (y[right] + r)
    s[top] = 4 * r + (r - x[top])
    s[left] = 6 * r + (r - y[left])
    return s


def read_trace_csv(path: str) -> BoundaryTrace:
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if raw.shape[1] != 6:
        raise ValueError(f"trace CSV must have 6 columns, found {raw.shape[1]}")
    node_ids = raw[:, 0].astype(int)
    n_nodes = node_ids.max() + 1
    if raw.shape[0] % n_nodes != 0:
        raise ValueError("trace CSV rows do not factor into (nodes x times)")
    n_times = raw.shape[0] // n_nodes
    half_width = float(np.max(np.abs(raw[:, 1:3])))
    node_xy = raw[::n_times, 1:3]
    times = raw[:n_times, 3]
    values = (raw[:, 4] + 1j * raw[:, 5]).reshape(n_nodes, n_times)
    if n_nodes % 4 != 0:
        raise ValueError(f"boundary node count {n_nodes} is not 4*(N_x - 2)")
    return BoundaryTrace(
        half_width=half_width,
        n_per_side=n_nodes // 4 + 2,
        node_xy=node_xy,
        times=times,
        values=values,
        arclengths=_node_arclengths(node_xy, half_width),
    )


def interpolate_trace(trace: BoundaryTrace, s: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of the data in (arclength, time).

    Arclength is treated periodically over the perimeter; time is clamped
    to the recorded interval.
    """
    s = np.mod(s, trace.perimeter)
    s_nodes = trace.arclengths
    period = trace.perimeter
    # Extend one node on each side for periodic wrap.
    s_ext = np.concatenate([[s_nodes[-1] - period], s_nodes, [s_nodes[0] + period]])
    rows = np.concatenate([[len(s_nodes) - 1], np.arange(len(s_nodes)), [0]])

    si = np.searchsorted(s_ext, s, side="right") - 1
    si = np.clip(si, 0, len(s_ext) - 2)
    s0, s1 = s_ext[si], s_ext[si + 1]
    ws = np.where(s1 > s0, (s - s0) / np.where(s1 > s0, s1 - s0, 1.0), 0.0)

    dt = trace.times[1] - trace.times[0]
    ti = np.clip((t / dt).astype(int), 0, len(trace.times) - 2)
    wt = np.clip(t / dt - ti, 0.0, 1.0)

    v00 = trace.values[rows[si], ti]
    v01 = trace.values[rows[si], ti + 1]
    v10 = trace.values[rows[si + 1], ti]
    v11 = trace.values[rows[si + 1], ti + 1]
    return (
        (1 - ws) * ((1 - wt) * v00 + wt * v01) + ws * ((1 - wt) * v10 + wt * v11)
    )


def boundary_point(s: np.ndarray, half_width: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Map arclength to (x, y) and the outward unit normal on the square."""
    r = half_width
    s = np.mod(s, 8.0 * r)
    x = np.empty_like(s)
    y = np.empty_like(s)
    nx = np.zeros_like(s)
    ny = np.zeros_like(s)
    edge = (s // (2.0 * r)).astype(int)
    u = s - 2.0 * r * edge
    bottom = edge == 0
    x[bottom], y[bottom], ny[bottom] = u[bottom] - r, -r, -1.0
    right = edge == 1
    x[right], y[right], nx[right] = r, u[right] - r, 1.0
    top = edge == 2
    x[top], y[top], ny[top] = r - u[top], r, 1.0
    left = edge == 3
    x[left], y[left], nx[left] = -r, r - u[left], -1.0
    return np.stack([x, y], axis=1), nx, ny


def write_grid_csv(path: str, axis: np.ndarray, field: np.ndarray) -> None:
    """Write a full-grid complex field in the shared grid CSV format."""
    n = axis.size
    if field.shape != (n, n):
        raise ValueError(f"expected a ({n}, {n}) field, got {field.shape}")
    lines = ["x,y,re,im"]
    for j in range(n):
        for i in range(n):
            v = complex(field[j, i])
            lines.append(
                f"{float(axis[i])!r},{float(axis[j])!r},{v.real!r},{v.imag!r}"
            )
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write("\n".join(lines) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
