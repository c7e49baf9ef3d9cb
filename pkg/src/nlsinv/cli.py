"""Subcommand CLI orchestrating the full reconstruction pipeline.

Subcommands: ``forward`` (generate trace files), ``invert`` (run the
fixed-point reconstruction on a trace file), ``diagnose`` (discretization
health checks), ``phantom`` (rasterize the configured initial field), and
``report`` (render figures from previously written CSV output).  Every
subcommand takes ``--config PATH`` plus repeatable ``--set key=value``
overrides; the ``NLSINV_OUTDIR`` environment variable overrides the
configured output directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import formats, report
from .carleman_picard import picard_solve, reconstruct_u0
from .config import PipelineConfig, apply_overrides, load_config
from .forward_sim import add_noise, rasterize_phantom, run_forward
from .reduction import project_trace, truncation_residual_report
from .spatial_grid import build_grid, build_weight, carleman_diagnostic
from .time_basis import build_basis, gram_deviation

OUTDIR_ENV = "NLSINV_OUTDIR"


def _resolve_config(args) -> PipelineConfig:
    cfg = load_config(args.config)
    cfg = apply_overrides(cfg, args.set or [])
    out_dir = os.environ.get(OUTDIR_ENV) or args.output_dir or cfg.output_dir
    return replace(cfg, output_dir=out_dir)


def _out(cfg: PipelineConfig, suffix: str) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    return os.path.join(cfg.output_dir, f"{cfg.tag}_{suffix}")


def cmd_forward(args) -> int:
    cfg = _resolve_config(args)
    grid = build_grid(cfg.half_width, cfg.n_per_side)
    trace = run_forward(grid, cfg.phantom, cfg.horizon, cfg.dt, cfg.exponent_p, cfg.q_const)
    clean_path = _out(cfg, "trace_clean.csv")
    formats.write_trace_csv(clean_path, trace, grid)
    print(f"wrote {clean_path}  ({trace.values.shape[0]} nodes x {trace.values.shape[1]} levels)")
    if cfg.noise_delta > 0.0:
        noisy = add_noise(trace, cfg.noise_delta, cfg.noise_seed)
        noisy_path = _out(cfg, "trace_noisy.csv")
        formats.write_trace_csv(noisy_path, noisy, grid)
        print(f"wrote {noisy_path}  (delta={cfg.noise_delta}, seed={cfg.noise_seed})")
    return 0


def cmd_invert(args) -> int:
    cfg = _resolve_config(args)
    trace = formats.read_trace_csv(args.trace)
    if trace.grid_n_per_side != cfg.n_per_side or not np.isclose(
        trace.grid_half_width, cfg.half_width
    ):
        raise SystemExit(
            f"trace grid (R={trace.grid_half_width}, N_x={trace.grid_n_per_side}) does not "
            f"match config grid (R={cfg.half_width}, N_x={cfg.n_per_side})"
        )
    grid = build_grid(cfg.half_width, cfg.n_per_side)
    basis = build_basis(cfg.horizon, cfg.n_modes, cfg.n_quad)
    weight = build_weight(grid, cfg.focus, cfg.lambda_, cfg.beta)
    data = project_trace(basis, trace)
    truth = rasterize_phantom(grid, cfg.phantom)
    result = picard_solve(
        grid,
        basis,
        weight,
        data,
        cfg.inversion_config(),
        cfg.exponent_p,
        cfg.q_const,
        truth=truth,
    )

    metrics_path = _out(cfg, "metrics.csv")
    formats.write_metrics_csv(metrics_path, result.history)
    modal_path = _out(cfg, "modal.csv")
    formats.write_modal_csv(modal_path, result.final_modal, grid)
    u0_path = _out(cfg, "u0.csv")
    formats.write_grid_csv(u0_path, grid, result.u0_field)
    true_path = _out(cfg, "u0_true.csv")
    formats.write_grid_csv(true_path, grid, grid.to_full(truth))

    summary_lines = [f"iterations: {len(result.history)}"]
    for key, value in sorted(result.amplitude_summary.items()):
        summary_lines.append(f"{key}: {value:.6g}")
    last = result.history[-1]
    summary_lines.append(f"final_rel_change: {last.rel_change:.6g}")
    summary_lines.append(f"final_residual: {last.residual:.6g}")
    summary_path = _out(cfg, "summary.txt")
    formats.atomic_write_text(summary_path, "\n".join(summary_lines) + "\n")
    for path in (metrics_path, modal_path, u0_path, true_path, summary_path):
        print(f"wrote {path}")
    print("\n".join(summary_lines))
    return 0


def cmd_diagnose(args) -> int:
    cfg = _resolve_config(args)
    basis = build_basis(cfg.horizon, cfg.n_modes, cfg.n_quad)
    grid = build_grid(cfg.half_width, cfg.n_per_side)

    # Basis health: Gram identity and the integration-by-parts identity
    # s[m,n] + s[n,m] = 2 delta + sqrt((2m+1)(2n+1)) (1 - (-1)^{m+n}) / T.
    n = basis.n_modes
    idx = np.arange(n + 1)
    parity = 1.0 - (-1.0) ** (idx[:, None] + idx[None, :])
    expected = 2.0 * np.eye(n + 1) + np.sqrt(
        np.outer(2 * idx + 1.0, 2 * idx + 1.0)
    ) * parity / basis.horizon
    s_dev = float(np.max(np.abs(basis.s_matrix + basis.s_matrix.T - expected)))
    basis_path = _out(cfg, "basis_check.csv")
    formats.atomic_write_text(
        basis_path,
        "quantity,value\n"
        f"gram_deviation,{gram_deviation(basis)!r}\n"
        f"s_identity_deviation,{s_dev!r}\n",
    )
    table_path = _out(cfg, "basis_table.csv")
    formats.write_basis_csv(table_path, basis)
    print(f"wrote {basis_path}")
    print(f"wrote {table_path}")
    print(f"gram deviation: {gram_deviation(basis):.3e}")

    # Carleman ratio ladder on a smooth compactly supported bump.
    x, y = grid.interior_xy()
    a = cfg.half_width - 2.5 * grid.spacing

    def bump(s):
        out = np.zeros_like(s)
        inside = np.abs(s) < a
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - (s[inside] / a) ** 2))
        return out

    field = bump(x) * bump(y)
    lines = ["lambda,ratio"]
    for lam in (cfg.lambda_, 2 * cfg.lambda_, 4 * cfg.lambda_):
        w = build_weight(grid, cfg.focus, lam, cfg.beta)
        ratio = carleman_diagnostic(grid, w, field.astype(complex))
        lines.append(f"{lam!r},{ratio!r}")
        print(f"carleman ratio at lambda={lam:g}: {ratio:.4g}")
    carleman_path = _out(cfg, "carleman.csv")
    formats.atomic_write_text(carleman_path, "\n".join(lines) + "\n")
    print(f"wrote {carleman_path}")

    # Truncation tails of a smooth probe signal on the forward time grid.
    n_levels = round(cfg.horizon / cfg.dt) + 1
    times = np.linspace(0.0, cfg.horizon, n_levels)
    probe = np.exp(1j * times)
    ladder = sorted({k for k in (2, 4, 8, 16, 32) if k < basis.n_modes} | {basis.n_modes})
    tails = truncation_residual_report(basis, probe, ladder)
    trunc_path = _out(cfg, "truncation.csv")
    formats.atomic_write_text(
        trunc_path,
        "n_modes,tail\n" + "\n".join(f"{k},{tail!r}" for k, tail in tails) + "\n",
    )
    for k, tail in tails:
        print(f"truncation tail at N={k}: {tail:.4e}")
    print(f"wrote {trunc_path}")
    return 0


def cmd_phantom(args) -> int:
    cfg = _resolve_config(args)
    grid = build_grid(cfg.half_width, cfg.n_per_side)
    field = rasterize_phantom(grid, cfg.phantom)
    path = _out(cfg, "phantom.csv")
    formats.write_grid_csv(path, grid, grid.to_full(field))
    print(f"wrote {path}")
    return 0


def cmd_report(args) -> int:
    cfg = _resolve_config(args)
    u0_path = _out(cfg, "u0.csv")
    if not os.path.exists(u0_path):
        raise SystemExit(f"missing {u0_path}; run 'invert' first")
    axis, u0 = formats.read_grid_csv(u0_path)
    truth = None
    true_path = _out(cfg, "u0_true.csv")
    if os.path.exists(true_path):
        truth = formats.read_grid_csv(true_path)[1]
    records = None
    metrics_path = _out(cfg, "metrics.csv")
    if os.path.exists(metrics_path):
        records = formats.read_metrics_csv(metrics_path)
    written = report.render_reconstruction_report(
        cfg.output_dir, cfg.tag, axis, u0, truth, records
    )
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlsinv",
        description="Initial wave field reconstruction from lateral Neumann data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="path to a key = value config file")
        p.add_argument(
            "--set",
            action="append",
            metavar="KEY=VALUE",
            help="override a config key (repeatable)",
        )
        p.add_argument("--output-dir", default=None, help="override the output directory")

    p_forward = sub.add_parser("forward", help="simulate and write trace CSVs")
    common(p_forward)
    p_forward.set_defaults(func=cmd_forward)

    p_invert = sub.add_parser("invert", help="reconstruct the initial field from a trace CSV")
    common(p_invert)
    p_invert.add_argument("--trace", required=True, help="trace CSV to invert")
    p_invert.set_defaults(func=cmd_invert)

    p_diag = sub.add_parser("diagnose", help="write discretization diagnostics")
    common(p_diag)
    p_diag.set_defaults(func=cmd_diagnose)

    p_phantom = sub.add_parser("phantom", help="rasterize the configured phantom to a grid CSV")
    common(p_phantom)
    p_phantom.set_defaults(func=cmd_phantom)

    p_report = sub.add_parser("report", help="render figures from written CSV output")
    common(p_report)
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
