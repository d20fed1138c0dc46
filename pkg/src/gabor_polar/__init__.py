"""Phase-retrievable multi-window Gabor frames built by polarization."""
from .core import (
    DimensionError,
    coordwise_product,
    dft,
    inner,
    inverse_dft,
    make_rng,
    modulate,
    phase_distance,
    tf_shift,
    translate,
)
from .framegen import (
    Lattice,
    MeasurementVector,
    MultiWindowGaborFrame,
    Window,
    assemble_frame,
    build_auxiliary,
    full_spark_check,
    measure,
    random_window,
)
from .phasegraph import (
    build_edges,
    component_bound,
    connected_components,
    prune_edges,
    spectral_gap,
)
from .recover import (
    ReconstructionResult,
    SubspacePrior,
    angular_sync,
    propagate_phases,
    reconstruct,
    reconstruct_subspace,
    relative_phase,
    solve_coefficients,
)
from .settools import (
    IndexSet,
    beta,
    check_pseudorandom,
    density,
    difference_set,
    fourier_bias,
    random_subset,
)

__version__ = "0.1.0"
