"""Direct unsupervised physics-informed baseline for the initial-field
reconstruction, consuming the pipeline's trace CSV and emitting its grid CSV."""

from .config import PinnConfig, load_config, parse_config
from .data import BoundaryTrace, interpolate_trace, read_trace_csv, write_grid_csv
from .evaluate import evaluate_u0, load_model
from .model import WaveFieldNet, build_model
from .train import EpochRecord, train

__version__ = "0.1.0"
