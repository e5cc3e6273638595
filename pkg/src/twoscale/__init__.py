"""Exact tail asymptotics for two-timescale subordinated Levy models.

The library evaluates P(A(psi_n B(phi_n)) >= u n) for a Levy process A run on
the clock of a subordinator B, with power-law timescales phi_n = n**f and
psi_n = n**(1-f).  It provides the tilting-equation solver and twisting
expansions, the fast/slow/single-timescale tail approximations (lattice and
non-lattice), Edgeworth diagnostics for the tilted law, exact and Monte Carlo
oracles, and the overdispersed-arrival application with its reference tables.
"""

from .asymptotics import (
    AsymptoticEstimate,
    RegimeInfo,
    approx_fast,
    approx_single_timescale,
    approx_slow,
    classify,
    lattice_factor,
    log_asymptote,
)
from .edgeworth import (
    EdgeworthDiagnostic,
    EdgeworthExpansion,
    build_expansion,
    diagnostic,
    hermite,
    standardization,
    tilted_cdf_approx,
    tilted_negbin_cdf,
)
from .errors import (
    DomainError,
    LatticeError,
    NoSolutionError,
    NotRareError,
    OrderError,
    ParamError,
    RegimeError,
    SeriesUnavailable,
    TwoscaleError,
    UnsupportedSignError,
)
from .levy import CharExponent, ModelPair, PowerScaling, lmgf, load_model, mean_variance
from .models import (
    CompoundPoissonGammaLaw,
    NegBinLaw,
    WorkedModel,
    exact_law,
    fast_series_coeffs,
    slow_series_coeffs,
)
from .oracle import (
    OracleResult,
    RigorousBound,
    StatisticalBound,
    compound_poisson_gamma_tail,
    is_tail,
    negbin_tail,
    plain_mc_tail,
)
from .overdispersion import (
    ApproxTable,
    ArrivalQuery,
    pi_exact,
    pi_fast,
    pi_gamma,
    pi_hat_fast,
    pi_hat_slow,
    pi_pois,
    pi_slow,
    reproduce_tables,
)
from .twist import (
    FastExpansion,
    SlowExpansion,
    TwistSolution,
    direct_exponent,
    fast_expansion,
    slow_expansion,
    solve_twist,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticEstimate",
    "RegimeInfo",
    "approx_fast",
    "approx_single_timescale",
    "approx_slow",
    "classify",
    "lattice_factor",
    "log_asymptote",
    "EdgeworthDiagnostic",
    "EdgeworthExpansion",
    "build_expansion",
    "diagnostic",
    "hermite",
    "standardization",
    "tilted_cdf_approx",
    "tilted_negbin_cdf",
    "DomainError",
    "LatticeError",
    "NoSolutionError",
    "NotRareError",
    "OrderError",
    "ParamError",
    "RegimeError",
    "SeriesUnavailable",
    "TwoscaleError",
    "UnsupportedSignError",
    "CharExponent",
    "ModelPair",
    "PowerScaling",
    "lmgf",
    "load_model",
    "mean_variance",
    "CompoundPoissonGammaLaw",
    "NegBinLaw",
    "WorkedModel",
    "exact_law",
    "fast_series_coeffs",
    "slow_series_coeffs",
    "OracleResult",
    "RigorousBound",
    "StatisticalBound",
    "compound_poisson_gamma_tail",
    "is_tail",
    "negbin_tail",
    "plain_mc_tail",
    "ApproxTable",
    "ArrivalQuery",
    "pi_exact",
    "pi_fast",
    "pi_gamma",
    "pi_hat_fast",
    "pi_hat_slow",
    "pi_pois",
    "pi_slow",
    "reproduce_tables",
    "FastExpansion",
    "SlowExpansion",
    "TwistSolution",
    "direct_exponent",
    "fast_expansion",
    "slow_expansion",
    "solve_twist",
]
