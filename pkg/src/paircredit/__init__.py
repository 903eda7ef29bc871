"""paircredit: two-firm first-passage credit model with counterparty risk.

Closed-form joint default-time laws for two correlated barrier-default firms,
the legs and fair values of a CDS bearing counterparty risk and of a
first-to-default swap, plus an independent Monte Carlo oracle for everything.
"""

__version__ = "0.1.0"

from .errors import (
    DegenerateContract,
    DomainError,
    NoRoot,
    OverflowSignal,
    PairCreditError,
    QuadratureFailure,
    SeriesNoConvergence,
)
from .jointlaw import (
    NormalizationResult,
    WedgeDensityParams,
    girsanov_weight,
    hitting_density_from_gradient,
    hitting_density_horizontal,
    hitting_density_slanted,
    normalization_check,
    survival_density_q,
    survival_prob,
)
from .mc import (
    FirstPassageSample,
    HittingHistogram,
    McConfig,
    McEstimate,
    mc_hitting_histogram,
    mc_leg,
    mc_single_name,
    simulate_first_passage,
)
from .params import (
    CdsContract,
    FirmParams,
    FtdContract,
    MarketParams,
    WedgeGeometry,
    derive_wedge,
    drift_nu,
)
from .pricing import (
    LegValue,
    cds_fair_value,
    cds_par_spread,
    counterparty_default_leg,
    fee_leg,
    ftd_default_leg,
    ftd_fair_spread,
    single_name_par_spread,
    standard_default_leg,
)
from .quadrature import QuadSpec, adaptive_gauss_kronrod, integrate_time_radius, integrate_wedge
from .scenario import Scenario, ScenarioError, load_scenario
from .singlename import (
    SingleNameCoeffs,
    cds_value_at_default,
    conditional_default_prob,
    discounted_hitting_factor,
    gaussian_exp_integral,
    h_tilde,
)
from .specfun import SeriesTolerances, bessel_i, log_bessel_i, normal_cdf

__all__ = [
    "__version__",
    "PairCreditError", "DomainError", "OverflowSignal", "SeriesNoConvergence",
    "QuadratureFailure", "NoRoot", "DegenerateContract",
    "FirmParams", "MarketParams", "CdsContract", "FtdContract", "WedgeGeometry",
    "drift_nu", "derive_wedge",
    "SeriesTolerances", "normal_cdf", "bessel_i", "log_bessel_i",
    "QuadSpec", "adaptive_gauss_kronrod", "integrate_time_radius", "integrate_wedge",
    "SingleNameCoeffs", "conditional_default_prob", "gaussian_exp_integral",
    "discounted_hitting_factor", "cds_value_at_default", "h_tilde",
    "WedgeDensityParams", "NormalizationResult", "survival_density_q", "girsanov_weight",
    "hitting_density_horizontal", "hitting_density_slanted", "survival_prob",
    "normalization_check", "hitting_density_from_gradient",
    "LegValue", "counterparty_default_leg", "standard_default_leg", "fee_leg",
    "cds_fair_value", "cds_par_spread", "ftd_default_leg", "ftd_fair_spread",
    "single_name_par_spread",
    "McConfig", "McEstimate", "FirstPassageSample", "HittingHistogram",
    "simulate_first_passage", "mc_leg", "mc_hitting_histogram", "mc_single_name",
    "Scenario", "ScenarioError", "load_scenario",
]
