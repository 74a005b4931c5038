"""L2 and Cramer-von Mises distances between an ESD and the LSD, with Monte-Carlo calibration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import lsd
from .lsd import LsdCurve
from .mixture import AtomicMixture, build_two_block_B
from .randmat import (
    EmpiricalDistribution,
    EntryLaw,
    SampledModel,
    esd_cdf,
    realize_atoms,
    run_replicates,
    sample_C_n,
)

QUANTILE_PROBS = (0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.98, 0.99)
H_START = 1e-3
H_TOL = 1e-6
_MAX_HALVINGS = 8

# lanes keep the null replicates and simulated observations on disjoint streams
NULL_LANE = 0
OBSERVED_LANE = 1


def _bounds(esd: EmpiricalDistribution, curve: LsdCurve) -> tuple[float, float]:
    if curve.support:
        lo, hi = curve.support[0][0], curve.support[-1][1]
    else:
        lo, hi = float(curve.grid[0]), float(curve.grid[-1])
    if curve.atom_at_zero > 0:
        lo, hi = min(lo, 0.0), max(hi, 0.0)
    return min(lo, esd.samples[0]) - 1.0, max(hi, esd.samples[-1]) + 1.0


def _trapezoid(esd, curve, lo, hi, h, weight: Callable | None) -> float:
    """Trapezoid rule on a uniform grid refined by every sample point and the origin.

    F_hat is constant between consecutive nodes, so each panel uses its
    right-continuous value and the left limit of F at the panel's right end.
    """
    uniform = np.linspace(lo, hi, int(math.ceil((hi - lo) / h)) + 1)
    nodes = np.union1d(uniform, esd.samples[(esd.samples > lo) & (esd.samples < hi)])
    if lo < 0 < hi:
        nodes = np.union1d(nodes, [0.0])
    left, right = nodes[:-1], nodes[1:]
    f_hat = esd_cdf(esd, left)
    d_left = f_hat - lsd.cdf(curve, left)
    d_right = f_hat - lsd.cdf(curve, np.nextafter(right, -np.inf))
    g_left, g_right = d_left**2, d_right**2
    if weight is not None:
        g_left = g_left * weight(left)
        g_right = g_right * weight(right)
    return float(np.sum((right - left) * 0.5 * (g_left + g_right)))


def _adaptive(esd, curve, lo, hi, weight=None, h: float = H_START, tol: float = H_TOL) -> float:
    prev = _trapezoid(esd, curve, lo, hi, h, weight)
    for _ in range(_MAX_HALVINGS):
        h /= 2
        cur = _trapezoid(esd, curve, lo, hi, h, weight)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    return prev


def l2_statistic(esd: EmpiricalDistribution, curve: LsdCurve) -> float:
    """L_n = int |F_hat(x) - F(x)|^2 dx."""
    lo, hi = _bounds(esd, curve)
    return _adaptive(esd, curve, lo, hi)


def cvm_statistic(esd: EmpiricalDistribution, curve: LsdCurve) -> float:
    """V_n = int |F_hat - F|^2 dF.

    The continuous part integrates against the density; an atom of F at 0
    adds |F_hat(0) - F(0)|^2 F({0}) with both CDFs taken right-continuous.
    """
    lo, hi = float(curve.grid[0]), float(curve.grid[-1])
    value = _adaptive(esd, curve, lo, hi, weight=curve.pdf)
    if curve.atom_at_zero > 0:
        value += (esd_cdf(esd, 0.0) - lsd.cdf(curve, 0.0)) ** 2 * curve.atom_at_zero
    return value


STATISTICS = {"L2": l2_statistic, "CVM": cvm_statistic}


def quantiles(sample: Sequence[float], probs: Sequence[float] = QUANTILE_PROBS) -> dict[float, float]:
    """Linear interpolation between order statistics."""
    q = np.quantile(np.asarray(sample, dtype=float), probs, method="linear")
    return {float(p): float(v) for p, v in zip(probs, q)}


@dataclass
class NullDistribution:
    sample: np.ndarray
    curve: LsdCurve
    seed: int
    statistic: str = "L2"
    quantiles: dict[float, float] = field(init=False)

    def __post_init__(self):
        self.sample = np.sort(np.asarray(self.sample, dtype=float))
        self.quantiles = quantiles(self.sample)

    @property
    def replicates(self) -> int:
        return self.sample.size

    def p_value(self, observed: float) -> float:
        exceed = self.sample.size - np.searchsorted(self.sample, observed, side="left")
        return (1 + int(exceed)) / (self.sample.size + 1)


@dataclass
class TestReport:
    statistic: float
    null_quantiles: dict[float, float]
    p_value: float
    replicates: int
    seed: int

    __test__ = False

    def to_json(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "quantiles": {repr(p): v for p, v in self.null_quantiles.items()},
            "replicates": self.replicates,
            "seed": self.seed,
        }


def null_model(A0: AtomicMixture, b: float, b2: float, p: int, n: int, seed: int) -> SampledModel:
    """H0 sampling model: A_0 realized at dimension p and the two-block B_0."""
    return SampledModel(realize_atoms(A0, p), build_two_block_B(b, b2, n), EntryLaw.GAUSSIAN, seed, lane=NULL_LANE)


def monte_carlo_null(
    A0: AtomicMixture,
    b: float,
    b2: float,
    p: int,
    n: int,
    replicates: int,
    seed: int,
    *,
    threads: int | None = None,
    curve: LsdCurve | None = None,
    statistic: str = "L2",
) -> NullDistribution:
    """Null sample of the statistic from Gaussian draws of C_n0 under (A_0, B_0)."""
    model = null_model(A0, b, b2, p, n, seed)
    if curve is None:
        curve = lsd.build_curve(A0, b2)
    stat = STATISTICS[statistic]
    sample = run_replicates(lambda r: stat(sample_C_n(model, r), curve), replicates, threads)
    return NullDistribution(np.array(sample), curve, seed, statistic)


def run_test(
    observed_eigs: EmpiricalDistribution,
    A0: AtomicMixture,
    b: float,
    b2: float,
    p: int,
    n: int,
    replicates: int,
    seed: int,
    *,
    threads: int | None = None,
    null: NullDistribution | None = None,
) -> TestReport:
    """Test H0 for eigenvalues of sqrt(n/p)(n^-1 Y Y* - b A_0).

    A precomputed `null` (same A_0, moments and dimensions) skips the simulation.
    """
    if null is None:
        null = monte_carlo_null(A0, b, b2, p, n, replicates, seed, threads=threads)
    observed = STATISTICS[null.statistic](observed_eigs, null.curve)
    return TestReport(observed, dict(null.quantiles), null.p_value(observed), null.replicates, null.seed)


def qq_data(null_sample, alt_sample, probs: Sequence[float] = QUANTILE_PROBS) -> list[tuple[float, float]]:
    if len(null_sample) < 100 or len(alt_sample) < 100:
        raise ValueError("QQ data needs at least 100 values per sample")
    q0 = np.quantile(np.asarray(null_sample, dtype=float), probs, method="linear")
    q1 = np.quantile(np.asarray(alt_sample, dtype=float), probs, method="linear")
    return [(float(a), float(b)) for a, b in zip(q0, q1)]


def summarize(values: Sequence[float]) -> tuple[float, float]:
    """Mean and sample standard deviation."""
    v = np.asarray(values, dtype=float)
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0
