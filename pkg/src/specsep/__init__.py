"""Limiting spectra and Monte-Carlo tests for renormalized separable sample covariance matrices."""

from .gof import TestReport, cvm_statistic, l2_statistic, monte_carlo_null, qq_data, run_test
from .lsd import BetaSolution, LsdCurve, beta_polynomial, build_curve, cdf, density_at, omega, solve_beta
from .mixture import (
    AtomicMixture,
    ExplicitEigenvalues,
    Model,
    ModelError,
    MomentPair,
    SpectralMoments,
    build_two_block_B,
    moments_of,
)
from .randmat import EmpiricalDistribution, EntryLaw, SampledModel, esd_cdf, fluctuation_sample, sample_C_n, sample_S_n_eigs
from .semicircle import FluctuationMixture, ScaledSemicircle, mixture_cdf, sc_cdf
from .stieltjes import StieltjesPair, density_inversion, solve_system

__version__ = "0.1.0"
