"""Covariance factor descriptions: the atomic spatial spectrum and the temporal factor."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

import numpy as np

WEIGHT_TOL = 1e-12


class ModelError(ValueError):
    """Raised for an invalid covariance model."""


class InfeasibleModelError(ModelError):
    """A moment pair that no two-block B can realize."""


@dataclass(frozen=True)
class AtomicMixture:
    """Discrete limiting spectrum of A_p: atoms (descending) with proportions."""

    atoms: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        atoms = tuple(float(a) for a in self.atoms)
        weights = tuple(float(w) for w in self.weights)
        if len(atoms) == 0 or len(atoms) != len(weights):
            raise ModelError("atoms and weights must be nonempty and of equal length")
        if any(not math.isfinite(a) or a < 0 for a in atoms):
            raise ModelError(f"atoms must be finite and >= 0, got {atoms}")
        if any(not (0 < w <= 1) for w in weights):
            raise ModelError(f"weights must lie in (0, 1], got {weights}")
        if abs(math.fsum(weights) - 1.0) > WEIGHT_TOL:
            raise ModelError(f"weights sum to {math.fsum(weights)!r}, expected 1")
        if any(a <= b for a, b in zip(atoms, atoms[1:])):
            raise ModelError(f"atoms must be strictly decreasing, got {atoms}")
        if atoms[0] <= 0:
            raise ModelError("spectrum is degenerate at zero")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> "AtomicMixture":
        """Build from (atom, weight) pairs in any order; repeated atoms are merged."""
        merged: dict[float, float] = {}
        for atom, weight in pairs:
            merged[float(atom)] = merged.get(float(atom), 0.0) + float(weight)
        ordered = sorted(merged.items(), key=lambda kv: -kv[0])
        return cls(tuple(a for a, _ in ordered), tuple(w for _, w in ordered))

    @classmethod
    def from_lists(cls, atoms: Iterable[float], weights: Iterable[float]) -> "AtomicMixture":
        return cls.from_pairs(zip(atoms, weights))

    @property
    def zero_mass(self) -> float:
        """F^A({0})."""
        return self.weights[-1] if self.atoms[-1] == 0.0 else 0.0

    def positive(self) -> tuple[np.ndarray, np.ndarray]:
        """Strictly positive atoms and their weights as arrays."""
        a = np.asarray(self.atoms)
        c = np.asarray(self.weights)
        keep = a > 0
        return a[keep], c[keep]

    def mean(self) -> float:
        return float(np.dot(self.atoms, self.weights))

    def to_json(self) -> dict:
        return {"atoms": list(self.atoms), "weights": list(self.weights)}


@dataclass(frozen=True)
class SpectralMoments:
    """Limits of n^-1 tr(B_n) and n^-1 tr(B_n^2)."""

    b: float
    b2: float

    def __post_init__(self):
        if not (self.b > 0 and self.b2 > 0):
            raise ModelError(f"spectral moments must be positive, got ({self.b}, {self.b2})")
        # small relative slack: moments computed from eigenvalue lists carry roundoff
        if self.b2 < self.b**2 * (1 - 1e-12):
            raise ModelError(f"b2={self.b2} < b^2={self.b**2} violates Cauchy-Schwarz")


@dataclass(frozen=True)
class ExplicitEigenvalues:
    values: tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if any(not math.isfinite(v) or v < 0 for v in values):
            raise ModelError("B eigenvalues must be finite and >= 0")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class MomentPair:
    b: float
    b2: float

    def __post_init__(self):
        SpectralMoments(self.b, self.b2)


BFactorSpec = ExplicitEigenvalues | MomentPair


def moments_of(spec: BFactorSpec, n: int) -> SpectralMoments:
    if n < 2:
        raise ModelError(f"n must be >= 2, got {n}")
    if isinstance(spec, MomentPair):
        return SpectralMoments(spec.b, spec.b2)
    values = np.asarray(spec.values)
    if values.size != n:
        raise ModelError(f"expected {n} B eigenvalues, got {values.size}")
    return SpectralMoments(math.fsum(values) / n, math.fsum(values**2) / n)


def build_two_block_B(b: float, b2: float, n: int) -> np.ndarray:
    """Eigenvalues of the two-block B_0 = diag(beta_1 I, beta_2 I) matching (b, b2).

    The larger block value comes first.
    """
    if n <= 0 or n % 2:
        raise ModelError(f"two-block construction needs an even n, got {n}")
    disc = b2 - b * b
    if disc < 0:
        raise InfeasibleModelError(f"infeasible moment pair: b2={b2} < b^2={b * b}")
    root = math.sqrt(disc)
    hi, lo = b + root, b - root
    if lo < 0:
        raise InfeasibleModelError(f"infeasible moment pair: block value {lo} < 0 (needs b2 <= 2 b^2)")
    half = n // 2
    return np.concatenate([np.full(half, hi), np.full(half, lo)])


@dataclass(frozen=True)
class Model:
    """A JSON model file: spatial mixture plus temporal factor."""

    A: AtomicMixture
    B: BFactorSpec

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "Model":
        try:
            a = data["A"]
            mix = AtomicMixture.from_lists(a["atoms"], a["weights"])
            b = data["B"]
            if "moments" in b:
                b_bar, b2 = b["moments"]
                spec: BFactorSpec = MomentPair(float(b_bar), float(b2))
            elif "eigenvalues" in b:
                spec = ExplicitEigenvalues(tuple(b["eigenvalues"]))
            else:
                raise ModelError('B needs "moments" or "eigenvalues"')
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ModelError):
                raise
            raise ModelError(f"malformed model: {exc!r}") from exc
        return cls(mix, spec)

    def to_json(self) -> dict:
        if isinstance(self.B, MomentPair):
            b = {"moments": [self.B.b, self.B.b2]}
        else:
            b = {"eigenvalues": list(self.B.values)}
        return {"A": self.A.to_json(), "B": b}

    def moments(self, n: int | None = None) -> SpectralMoments:
        """Spectral moments of B; an explicit list defines its own n."""
        if n is None and isinstance(self.B, ExplicitEigenvalues):
            n = len(self.B.values)
        return moments_of(self.B, 2 if n is None else n)

    def b_eigs(self, n: int) -> np.ndarray:
        """Eigenvalues of B_n: explicit list, or the two-block realization of the moments."""
        if isinstance(self.B, ExplicitEigenvalues):
            moments_of(self.B, n)
            return np.asarray(self.B.values)
        return build_two_block_B(self.B.b, self.B.b2, n)
