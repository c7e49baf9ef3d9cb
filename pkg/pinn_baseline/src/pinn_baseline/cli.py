"""Train / evaluate commands for the network baseline."""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .data import read_trace_csv
from .evaluate import evaluate_u0
from .train import train


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    trace = read_trace_csv(args.trace)
    history = train(
        trace, cfg, args.model, args.history, log_every=args.log_every
    )
    last = history[-1]
    print(
        f"trained {len(history)} epochs: total {history[0].total:.6g} -> {last.total:.6g}"
    )
    print(f"wrote {args.model}")
    print(f"wrote {args.history}")
    return 0


def cmd_evaluate(args) -> int:
    evaluate_u0(args.model, args.out, args.n_per_side)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pinn-baseline",
        description="Direct unsupervised network baseline trained on trace CSV data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train on a trace CSV")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--trace", required=True)
    p_train.add_argument("--model", required=True, help="output model file")
    p_train.add_argument("--history", required=True, help="output loss history CSV")
    p_train.add_argument("--log-every", type=int, default=0)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="sample u(x, 0) onto a grid CSV")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--out", required=True)
    p_eval.add_argument("--n-per-side", type=int, default=None)
    p_eval.set_defaults(func=cmd_evaluate)
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
