"""Flat ``key = value`` pipeline configuration.

Unknown keys are hard errors so a typo in a tuning parameter cannot pass
silently; parse failures report the offending line number.  Phantoms are
given either by a canonical name (``phantom = test1``) or by numbered typed
primitive entries::

    part1 = disk real 1.0 -0.25 0.15 0.18
    part2 = square_ring imag 2.0 0.05 0.05 0.60 0.42

Shape argument orders: disk cx cy r | rect xmin xmax ymin ymax |
square_ring cx cy outer inner | annulus cx cy r_in r_out |
strip slope offset half_width xmin xmax ymin ymax.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field, fields, replace

from .carleman_picard import InversionConfig
from .forward_sim import (
    Annulus,
    Disk,
    Phantom,
    PhantomPart,
    Rectangle,
    SlantedStrip,
    SquareRing,
    test1_phantom,
    test2_phantom,
    test3_phantom,
)

__all__ = ["PipelineConfig", "parse_config", "load_config", "apply_overrides"]

_CANONICAL = {"test1": test1_phantom, "test2": test2_phantom, "test3": test3_phantom}

_SHAPE_ARITY = {
    "disk": 3,
    "rect": 4,
    "square_ring": 4,
    "annulus": 4,
    "strip": 7,
}


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one run needs: forward model, noise, inversion, outputs."""

    # forward model
    half_width: float = 1.0
    n_per_side: int = 61
    horizon: float = 0.2
    dt: float = 1.25e-4
    exponent_p: float = 2.0
    q_const: float = 1.0
    phantom: Phantom = field(default_factory=test1_phantom)
    # noise
    noise_delta: float = 0.1
    noise_seed: int = 42
    # inversion
    lambda_: float = 20.0
    beta: float = 5.0
    focus: tuple[float, float] = (0.0, 8.0)
    epsilon: float = 1e-6
    n_modes: int = 65
    k_max: int = 10
    reg_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    ls_tol: float = 1e-8
    ls_max_iter: int = 20_000
    admissible_bound: float = 100.0
    n_quad: int | None = None
    # outputs
    output_dir: str = "."
    tag: str = "run"

    def inversion_config(self) -> InversionConfig:
        return InversionConfig(
            lambda_=self.lambda_,
            beta=self.beta,
            focus=self.focus,
            epsilon=self.epsilon,
            n_modes=self.n_modes,
            k_max=self.k_max,
            reg_weights=self.reg_weights,
            ls_tol=self.ls_tol,
            ls_max_iter=self.ls_max_iter,
            admissible_bound=self.admissible_bound,
            seed=self.noise_seed,
        )


_SCALAR_KEYS = {
    "half_width": float,
    "n_per_side": int,
    "horizon": float,
    "dt": float,
    "exponent_p": float,
    "q_const": float,
    "noise_delta": float,
    "noise_seed": int,
    "lambda": float,
    "beta": float,
    "focus_x": float,
    "focus_y": float,
    "epsilon": float,
    "n_modes": int,
    "k_max": int,
    "reg_w0": float,
    "reg_w1": float,
    "reg_w2": float,
    "ls_tol": float,
    "ls_max_iter": int,
    "admissible_bound": float,
    "n_quad": int,
    "output_dir": str,
    "tag": str,
}

_PART_RE = re.compile(r"^part(\d+)$")

# A config file must pin the core discretization explicitly; everything else
# carries documented defaults.
_REQUIRED_KEYS = ("n_per_side", "dt", "horizon", "n_modes")


def _parse_part(value: str, lineno: int) -> PhantomPart:
    tokens = value.split()
    if len(tokens) < 3:
        raise ValueError(f"line {lineno}: phantom part needs 'shape target amplitude ...'")
    shape_name, target = tokens[0], tokens[1]
    if shape_name not in _SHAPE_ARITY:
        raise ValueError(
            f"line {lineno}: unknown shape {shape_name!r}; expected one of {sorted(_SHAPE_ARITY)}"
        )
    if target not in ("real", "imag"):
        raise ValueError(f"line {lineno}: target must be 'real' or 'imag', got {target!r}")
    try:
        numbers = [float(tok) for tok in tokens[2:]]
    except ValueError as exc:
        raise ValueError(f"line {lineno}: bad number in phantom part: {exc}") from None
    amplitude, params = numbers[0], numbers[1:]
    if len(params) != _SHAPE_ARITY[shape_name]:
        raise ValueError(
            f"line {lineno}: shape {shape_name!r} takes {_SHAPE_ARITY[shape_name]} "
            f"parameters, got {len(params)}"
        )
    if shape_name == "disk":
        shape = Disk((params[0], params[1]), params[2])
    elif shape_name == "rect":
        shape = Rectangle(*params)
    elif shape_name == "square_ring":
        shape = SquareRing((params[0], params[1]), params[2], params[3])
    elif shape_name == "annulus":
        shape = Annulus((params[0], params[1]), params[2], params[3])
    else:
        shape = SlantedStrip(*params)
    return PhantomPart(shape, amplitude, target)


def parse_config(text: str, name: str = "<config>", require_core: bool = True) -> PipelineConfig:
    """Parse config text; unknown keys and malformed lines raise ValueError.

    ``require_core`` demands the core discretization keys; it is switched
    off for ``--set`` override fragments.
    """
    values: dict = {}
    parts: dict[int, PhantomPart] = {}
    canonical: str | None = None

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{name} line {lineno}: expected 'key = value', got {raw_line!r}")
        key, value = (piece.strip() for piece in line.split("=", 1))
        part_match = _PART_RE.match(key)
        if part_match:
            index = int(part_match.group(1))
            if index in parts:
                raise ValueError(f"{name} line {lineno}: duplicate key {key!r}")
            parts[index] = _parse_part(value, lineno)
            continue
        if key == "phantom":
            if value not in _CANONICAL:
                raise ValueError(
                    f"{name} line {lineno}: phantom must be one of {sorted(_CANONICAL)}"
                )
            canonical = value
            continue
        if key not in _SCALAR_KEYS:
            raise ValueError(f"{name} line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValueError(f"{name} line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _SCALAR_KEYS[key](value)
        except ValueError:
            raise ValueError(
                f"{name} line {lineno}: cannot parse {value!r} as {_SCALAR_KEYS[key].__name__}"
            ) from None

    if canonical is not None and parts:
        raise ValueError(f"{name}: give either 'phantom = ...' or part<N> entries, not both")
    if require_core:
        for key in _REQUIRED_KEYS:
            if key not in values:
                raise ValueError(f"{name}: missing required key {key!r}")

    kwargs: dict = {}
    for key, val in values.items():
        if key == "lambda":
            kwargs["lambda_"] = val
        elif key in ("focus_x", "focus_y", "reg_w0", "reg_w1", "reg_w2"):
            continue
        else:
            kwargs[key] = val
    defaults = PipelineConfig()
    kwargs["focus"] = (
        values.get("focus_x", defaults.focus[0]),
        values.get("focus_y", defaults.focus[1]),
    )
    kwargs["reg_weights"] = (
        values.get("reg_w0", defaults.reg_weights[0]),
        values.get("reg_w1", defaults.reg_weights[1]),
        values.get("reg_w2", defaults.reg_weights[2]),
    )
    if canonical is not None:
        kwargs["phantom"] = _CANONICAL[canonical]()
    elif parts:
        kwargs["phantom"] = Phantom(tuple(parts[i] for i in sorted(parts)))
    return PipelineConfig(**kwargs)


def load_config(path: str) -> PipelineConfig:
    """Load a config file; the tag defaults to the file stem when unset."""
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    cfg = parse_config(text, name=os.path.basename(path))
    has_tag = any(
        re.match(r"^\s*tag\s*=", line.split("#", 1)[0]) for line in text.splitlines()
    )
    if not has_tag:
        cfg = replace(cfg, tag=os.path.splitext(os.path.basename(path))[0])
    return cfg


def apply_overrides(cfg: PipelineConfig, overrides: list[str]) -> PipelineConfig:
    """Apply ``--set key=value`` pairs on top of a parsed config."""
    if not overrides:
        return cfg
    text = "\n".join(overrides)
    patch = parse_config(text, name="<override>", require_core=False)
    changed: dict = {}
    parsed_keys = set()
    for item in overrides:
        key = item.split("=", 1)[0].strip()
        parsed_keys.add(key)
    for f in fields(PipelineConfig):
        if f.name == "phantom":
            if "phantom" in parsed_keys or any(_PART_RE.match(k) for k in parsed_keys):
                changed["phantom"] = patch.phantom
        elif f.name == "lambda_":
            if "lambda" in parsed_keys:
                changed["lambda_"] = patch.lambda_
        elif f.name == "focus":
            if {"focus_x", "focus_y"} & parsed_keys:
                changed["focus"] = (
                    patch.focus[0] if "focus_x" in parsed_keys else cfg.focus[0],
                    patch.focus[1] if "focus_y" in parsed_keys else cfg.focus[1],
                )
        elif f.name == "reg_weights":
            if {"reg_w0", "reg_w1", "reg_w2"} & parsed_keys:
                merged = list(cfg.reg_weights)
                for i, key in enumerate(("reg_w0", "reg_w1", "reg_w2")):
                    if key in parsed_keys:
                        merged[i] = patch.reg_weights[i]
                changed["reg_weights"] = tuple(merged)
        elif f.name in parsed_keys:
            changed[f.name] = getattr(patch, f.name)
    return replace(cfg, **changed)
