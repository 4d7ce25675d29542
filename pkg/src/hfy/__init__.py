"""Hopfield-Fenchel-Young associative memories built on sparse argmax maps and SparseMAP."""

from .exceptions import ConvergenceError, InputError, ParameterError, PatternGenerationError
from .transforms import (
    EntropyKind,
    MarginSpec,
    conjugate,
    entmax_bisect,
    fy_loss,
    fy_loss_grad,
    margin_of,
    negentropy,
    normmax_bisect,
    softmax,
    sparsemax,
    support,
    transform,
)
from .structured import (
    ActiveSetConfig,
    FactorGraph,
    Marginals,
    Structure,
    enumerate_structures,
    ksubsets_projection,
    map_oracle,
    sparsemap,
    structured_fy_loss,
    structured_fy_loss_grad,
    structured_margin_check,
)
from .hopfield import (
    PatternSet,
    RetrievalConfig,
    RetrievalResult,
    SeparationReport,
    capacity_eps_bound,
    capacity_trial,
    energy,
    energy_bounds,
    make_method,
    random_capacity_trial,
    retrieve,
    separation_report,
    update_step,
)
from .estimators import HopfieldMemory, RegularizedArgmax

__version__ = "0.1.0"
