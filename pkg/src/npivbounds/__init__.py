"""Partial-identification estimation for nonparametric IV models whose
instruments may be mildly invalid.

The package estimates lower and upper envelopes of the set of structural
functions compatible with a bounded conditional-moment deviation and linear
shape restrictions, via a B-spline series first stage and linear programs on
evaluation grids, together with exact discrete-population oracles used for
verification.
"""

from .bounds import (
    BandDiagnostics,
    BoundsConfig,
    EnvelopeBand,
    SweepResult,
    assemble_program,
    build_grids,
    estimate_envelope_sweep,
    estimate_envelopes,
    worst_case_bias_of,
)
from .errors import (
    DataFormatError,
    DegenerateDomainError,
    DomainError,
    EmptyIdentifiedSetError,
    InfeasibleProblemError,
    InvalidConfigurationError,
    InvalidInputError,
    NpivBoundsError,
    SingularDesignError,
    SolverFailureError,
)
from .firststage import FirstStageFit, Sample, fit_first_stage, gram_matrix, predict, predict_grid
from .lpsolve import INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram, LPResult, solve, solve_many
from .oracle import (
    DiscreteModel,
    discrete_dgp_sampler,
    discrete_envelopes,
    discrete_model_from_dict,
    discrete_model_to_dict,
    functional_bias,
    functional_bias_ellipsoid,
    load_discrete_model,
)
from .shapes import (
    ShapeRow,
    ShapeSpec,
    default_engel_spec,
    load_shape_spec,
    materialize_rows,
    shape_spec_from_config,
    shape_spec_to_config,
)
from .splines import (
    BSplineBasis,
    basis_matrix,
    build_basis,
    constrained_sup_approx,
    eval_basis,
    eval_basis_deriv,
)
from .synth import (
    CATALOGUE_VERSION,
    H0_CATALOGUE,
    U0_KINDS,
    ContinuousDGP,
    StructuralCurve,
    generate,
    make_dgp,
    population_reduced_form,
)

__version__ = "0.1.0"
