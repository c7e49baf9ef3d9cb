"""Initial wave field reconstruction for a 2-D nonlinear Schrodinger model.

The library generates lateral Neumann data with a semi-implicit forward
solver, reduces the time dimension with a weighted Legendre-exponential
basis, and reconstructs the initial field through a Carleman-weighted
fixed-point iteration over frozen linearizations.
"""

from .carleman_picard import (
    InversionConfig,
    IterationRecord,
    LsSolveInfo,
    ReconstructionReport,
    assemble_frozen_ls,
    picard_solve,
    reconstruct_u0,
    rel_change,
    residual_metric,
    solve_ls,
    weighted_error,
)
from .config import PipelineConfig, load_config, parse_config
from .forward_sim import (
    Annulus,
    Disk,
    Phantom,
    PhantomPart,
    Rectangle,
    SlantedStrip,
    SpaceTimeTrace,
    SquareRing,
    add_noise,
    rasterize_phantom,
    run_forward,
    step,
    test1_phantom,
    test2_phantom,
    test3_phantom,
)
from .reduction import (
    ModalBoundaryData,
    ModalField,
    frozen_nonlinearity,
    project_trace,
    reduced_residual,
    truncation_residual_report,
    zero_modal_field,
)
from .spatial_grid import (
    CarlemanWeight,
    SpatialGrid,
    build_grid,
    build_weight,
    carleman_diagnostic,
    laplacian_apply,
    neumann_trace,
)
from .time_basis import (
    TimeBasis,
    build_basis,
    coefficient_decay_report,
    gram_deviation,
    gram_matrix,
    project_signal,
    s_matrix,
    weighted_inner,
)

__version__ = "0.1.0"
