"""Numerical laboratory for Fourier multiplier operators on the critical
Sobolev line |1/p - 1/2| = s/n.

The package builds a randomized multi-scale multiplier family with bounded
dilation-invariant Sobolev norm, applies it to a wide test function through
two independent routes, and measures the growth of the L^p operator ratio
across the top scale K: flat multiplier norms against a rising operator
ratio demonstrate that no uniform bound exists on the critical line.
"""

__version__ = "0.1.0"

from .counterexample import (
    CounterexampleMultiplier,
    MultiplierSpec,
    c_coeff,
    eval_multiplier,
    index_set,
    locate,
    sample_multiplier,
    sign,
    support_disjointness_check,
)
from .errors import (
    ConstructionError,
    FmlabError,
    GridMismatchError,
    InvalidDataError,
    InvalidExponentError,
    InvalidRangeError,
    ResolutionError,
    UnsupportedDimensionError,
)
from .fields import Grid, SampledField, load_field, save_field
from .norms import (
    SmoothnessParams,
    bessel_potential,
    besov_norm,
    hormander_multiplier_norm,
    lorentz_norm,
    lorentz_sobolev_norm,
    riesz_potential,
    sobolev_norm,
)
from .operator import (
    ClosedFormPlan,
    ScenarioParams,
    apply_closed_form,
    apply_spectral,
    f_lp_norm,
    khintchine_mc,
    lower_bound_partial_sum,
    square_function,
    square_functional,
    test_function_hat,
)
from .experiment import (
    FitResult,
    SweepRecord,
    contradiction_report,
    fit_exponent,
    run_negative_control,
    run_sweep,
)
from .transforms import fourier_forward, fourier_inverse, lp_norm, rearrangement

__all__ = [name for name in dir() if not name.startswith("_")]
