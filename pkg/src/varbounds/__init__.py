"""Variance bounds for weighted sums of correlated random variables."""

from .bounds import (
    BoundReport,
    bound_report,
    bound_theorem1,
    bound_theorem1prime,
    bound_theorem4,
    bound_theorem5,
    check_A_psd,
    covariance_sum_bounds,
    exact_variance,
    principal_minor,
)
from .errors import GenerationFailure, InvalidInput, InvalidModel, InvariantViolation, NotApplicable, VarBoundsError
from .lln import LLNDiagnostic, Verdict, lln_diagnostic, theorem12_check
from .model import (
    CorrelationMatrix,
    CovarianceModel,
    VarianceProfile,
    WeightClass,
    WeightVector,
    classify_weights,
    load_instance,
    random_correlation,
)
from .processes import RunningMeanNormal, Telegraph, UserKernel, mc_estimate, make_process
from .table1 import Table1Row, run_table1
from .tails import tail_bound_mean, tail_bound_standardized, tail_bound_weighted

__version__ = "0.1.0"
