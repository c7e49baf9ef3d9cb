"""Training configuration, parsed from the same flat key = value format the
main pipeline uses."""

from __future__ import annotations

from dataclasses import dataclass, fields


@dataclass(frozen=True)
class PinnConfig:
    """Network, loss and sampling parameters.

    Defaults follow the reference setup: six tanh layers of width 256,
    loss weights (1, 20, 20) for the interior residual, Dirichlet and
    Neumann terms, Adam at 1e-3 for 4000 epochs with collocation batches
    of 1024 / 512 / 512.
    """

    hidden_layers: int = 6
    width: int = 256
    w_interior: float = 1.0
    w_dirichlet: float = 20.0
    w_neumann: float = 20.0
    learning_rate: float = 1e-3
    epochs: int = 4000
    batch_interior: int = 1024
    batch_dirichlet: int = 512
    batch_neumann: int = 512
    exponent_p: float = 2.0
    q_const: float = 1.0
    seed: int = 0
    # domain of the trace being fitted
    half_width: float = 1.0
    horizon: float = 0.2
    n_per_side: int = 41

    def __post_init__(self):
        if self.hidden_layers < 1 or self.width < 1:
            raise ValueError("network needs at least one hidden layer of positive width")
        if min(self.w_interior, self.w_dirichlet, self.w_neumann) < 0:
            raise ValueError("loss weights must be nonnegative")
        if min(self.batch_interior, self.batch_dirichlet, self.batch_neumann) < 1:
            raise ValueError("batch sizes must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.exponent_p <= 1.0:
            raise ValueError("exponent_p must exceed 1")


_KEY_TYPES = {
    "hidden_layers": int,
    "width": int,
    "w_interior": float,
    "w_dirichlet": float,
    "w_neumann": float,
    "learning_rate": float,
    "epochs": int,
    "batch_interior": int,
    "batch_dirichlet": int,
    "batch_neumann": int,
    "exponent_p": float,
    "q_const": float,
    "seed": int,
    "half_width": float,
    "horizon": float,
    "n_per_side": int,
}


def parse_config(text: str, name: str = "<config>") -> PinnConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{name} line {lineno}: expected 'key = value'")
        key, value = (piece.strip() for piece in line.split("=", 1))
        if key not in _KEY_TYPES:
            raise ValueError(f"{name} line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValueError(f"{name} line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _KEY_TYPES[key](value)
        except ValueError:
            raise ValueError(f"{name} line {lineno}: cannot parse {value!r}") from None
    return PinnConfig(**values)


def load_config(path: str) -> PinnConfig:
    with open(path, encoding="utf-8") as handle:
        return parse_config(handle.read(), name=path)


def config_summary(cfg: PinnConfig) -> str:
    return ", ".join(f"{f.name}={getattr(cfg, f.name)}" for f in fields(cfg))
