"""Figure rendering for the report path of the CLI.

Renders the reconstructed (and, when available, true) initial-field heat
maps plus the iteration metric curves to image files next to the delimited
output.  Uses the Agg backend so it works headless.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .carleman_picard import IterationRecord

__all__ = ["render_field_figure", "render_metrics_figure"]


def render_field_figure(
    path: str,
    axis: np.ndarray,
    field: np.ndarray,
    title: str,
    symmetric: bool = False,
) -> str:
    """Heat map of one real 2-D field over the square; returns the path."""
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    extent = (axis[0], axis[-1], axis[0], axis[-1])
    if symmetric:
        vmax = float(np.max(np.abs(field))) or 1.0
        kwargs = {"vmin": -vmax, "vmax": vmax, "cmap": "RdBu_r"}
    else:
        kwargs = {"cmap": "viridis"}
    im = ax.imshow(field, origin="lower", extent=extent, **kwargs)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(title)
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_metrics_figure(path: str, records: list[IterationRecord]) -> str:
    """Relative change and dimensionless residual versus iteration."""
    iters = [r.index for r in records]
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.2))
    axes[0].semilogy(iters, [max(r.rel_change, 1e-300) for r in records], "o-")
    axes[0].set_xlabel("iteration")
    axes[0].set_title("relative change")
    axes[1].semilogy(iters, [max(r.residual, 1e-300) for r in records], "s-")
    axes[1].set_xlabel("iteration")
    axes[1].set_title("dimensionless residual")
    for ax in axes:
        ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_reconstruction_report(
    out_dir: str,
    tag: str,
    axis: np.ndarray,
    u0: np.ndarray,
    truth: np.ndarray | None = None,
    records: list[IterationRecord] | None = None,
) -> list[str]:
    """Render the full figure set for one inversion; returns written paths."""
    written = []
    pairs = [("comp_real", u0.real, "computed Re u0"), ("comp_imag", u0.imag, "computed Im u0")]
    if truth is not None:
        pairs += [("true_real", truth.real, "true Re u0"), ("true_imag", truth.imag, "true Im u0")]
    for stem, field, title in pairs:
        written.append(
            render_field_figure(
                os.path.join(out_dir, f"{tag}_u0_{stem}.png"), axis, field, title, symmetric=True
            )
        )
    if records:
        written.append(
            render_metrics_figure(os.path.join(out_dir, f"{tag}_metrics.png"), records)
        )
    return written
