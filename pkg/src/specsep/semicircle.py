"""Scaled semicircle laws and the finite mixture governing eigenvalue fluctuations of S_n."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mixture import AtomicMixture


@dataclass(frozen=True)
class ScaledSemicircle:
    """Semicircle law on [-2 sigma, 2 sigma]."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")

    @property
    def support(self) -> tuple[float, float]:
        return (-2 * self.sigma, 2 * self.sigma)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        r2 = 4 * self.sigma**2
        return np.sqrt(np.clip(r2 - x**2, 0, None)) / (2 * math.pi * self.sigma**2)


def sc_cdf(law: ScaledSemicircle, x):
    """Closed-form CDF: 1/2 + x sqrt(4 s^2 - x^2) / (4 pi s^2) + arcsin(x / 2s) / pi on the support."""
    s = law.sigma
    t = np.clip(np.asarray(x, dtype=float), -2 * s, 2 * s)
    value = 0.5 + t * np.sqrt(4 * s * s - t * t) / (4 * math.pi * s * s) + np.arcsin(t / (2 * s)) / math.pi
    value = np.clip(value, 0.0, 1.0)
    return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class FluctuationMixture:
    """sum_j c_j F_sc(x; sigma_j); components with sigma_j = 0 are point masses at 0."""

    weights: tuple[float, ...]
    sigmas: tuple[float, ...]

    def __post_init__(self):
        if len(self.weights) != len(self.sigmas) or not self.weights:
            raise ValueError("weights and sigmas must be nonempty and of equal length")
        if abs(math.fsum(self.weights) - 1) > 1e-12:
            raise ValueError("weights must sum to 1")
        if any(s < 0 for s in self.sigmas):
            raise ValueError("sigmas must be >= 0")

    @classmethod
    def from_mixture(cls, mix: AtomicMixture, b2: float) -> "FluctuationMixture":
        """Component j has scale sqrt(b2 c_j) * alpha_j."""
        sigmas = tuple(math.sqrt(b2 * c) * a for a, c in zip(mix.atoms, mix.weights))
        return cls(mix.weights, sigmas)


def mixture_cdf(law: FluctuationMixture, x):
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for c, s in zip(law.weights, law.sigmas):
        if s > 0:
            total = total + c * np.asarray(sc_cdf(ScaledSemicircle(s), x))
        else:
            total = total + c * (x >= 0)
    total = np.clip(total, 0.0, 1.0)
    return float(total) if np.ndim(total) == 0 else total
