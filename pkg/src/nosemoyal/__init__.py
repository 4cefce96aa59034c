"""Generalized Moyal brackets and quantum Nose-Hoover dynamics on phase-space grids."""

__version__ = "0.1.0"

from .brackets import (  # noqa: E402
    BracketOrder,
    StructureTensor,
    bidifferential_term,
    moyal_bracket,
    moyal_bracket_spectral,
    nose_tensor,
    poisson_bracket,
    spectral_derivative,
)
from .errors import (  # noqa: E402
    ConfigError,
    DegenerateFieldError,
    GridError,
    HbarMismatch,
    IntegratorBlowup,
    NormalizationError,
    PhaseSpaceError,
    TensorGridMismatch,
    UnsupportedMode,
)
from .grid import (  # noqa: E402
    Axis,
    GridField,
    HamiltonianSpec,
    PhaseSpaceGrid,
    WignerFunction,
    compute_average,
    marginal,
    renormalize,
    wigner_transform_pure_state,
)
from .nose import (  # noqa: E402
    ChainSpec,
    ExtendedPoint,
    NoseParams,
    NoseSystem,
    compressibility,
    nh_step,
    nhc_step,
    nose_hamiltonian,
    nose_vector_field,
    sample_canonical,
    stationary_density_extended,
)
from .propagation import (  # noqa: E402
    EvolutionConfig,
    GeneratorSpec,
    apply_adjoint_generator,
    apply_generator,
    evolve,
    qnh_rhs,
    split_step_wigner,
)
from .stationary import (  # noqa: E402
    ExpansionResult,
    ho_canonical_wigner_exact,
    qc_stationarity_residual,
    wigner_kirkwood_order2,
)
