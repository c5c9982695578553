"""Numerics for asymptotically commuting measurement systems.

POVM families and their symmetrised joint-measurement product, correlation
matrices, projective / commuting / unitary dilations, and see-saw estimates
of commuting versus almost commuting Bell-type operator norms.
"""

from .config import TOL, Tolerance, tolerances
from .errors import *  # noqa: F401,F403
from .linalg import (
    Isometry,
    commutator_norm,
    compress,
    hermitian_eig,
    op_norm,
    psd_sqrt,
    round_to_projection,
)
from .measurement import (
    CorrelationMatrix,
    MeasurementSystem,
    PovmFamily,
    ProjectivePovm,
    correlation_matrix,
    max_commutator,
    random_measurement_system,
    random_povm,
    random_projective_povm,
    round_to_projective_povm,
    star_product,
    validate_povm,
    voiculescu_pair,
)
from .dilation import (
    DilationResult,
    FolnerParams,
    TorusShift,
    contraction_dilation,
    contraction_dilation_pair,
    dilation_report,
    folner_bound,
    folner_dilation,
    naimark_projective_dilation,
)
from .bell import (
    BellProblem,
    SeesawConfig,
    SweepResult,
    bell_objective,
    chsh_problem,
    epsilon_sweep,
    normalize_first_unitaries,
    seesaw_commuting,
    seesaw_eps_commuting,
)

__version__ = "0.1.0"
