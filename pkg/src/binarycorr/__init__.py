"""Correlated binary vectors with specified marginals and non-negative correlation structures."""

from .constraints import (
    FeasibilityError,
    FeasibilityReport,
    Verdict,
    check_applicability,
    check_prentice,
    prentice_upper,
)
from .core import (
    Algorithm,
    DecayingProduct,
    Exchangeable,
    General,
    KDependent,
    MarginalVector,
    OneDependent,
    SampleMatrix,
    spec_digest,
)
from .generators import GenerationPlan, dispatch_one_dep, generate, make_plan
from .rng import RandomStream, new_stream

__version__ = "0.1.0"
