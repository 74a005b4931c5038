"""Sampling of separable sample covariance matrices and their spectra."""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np
from threadpoolctl import threadpool_limits

from .mixture import AtomicMixture, Model

T = TypeVar("T")
_MASK64 = (1 << 64) - 1


class EntryLaw(str, enum.Enum):
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    UNIFORM = "uniform"
    COMPLEX_GAUSSIAN = "complex"

    @property
    def is_complex(self) -> bool:
        return self is EntryLaw.COMPLEX_GAUSSIAN


def stream(seed: int, replicate: int = 0, lane: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, replicate, lane); independent of scheduling."""
    key = ((seed & _MASK64) << 64) | ((replicate & 0xFFFFFFFF) << 32) | (lane & 0xFFFFFFFF)
    return np.random.Generator(np.random.Philox(key=key))


def draw_entries(law: EntryLaw, shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """i.i.d. entries with mean 0 and E|x|^2 = 1."""
    if law is EntryLaw.GAUSSIAN:
        return rng.standard_normal(shape)
    if law is EntryLaw.RADEMACHER:
        return rng.integers(0, 2, size=shape).astype(float) * 2.0 - 1.0
    if law is EntryLaw.UNIFORM:
        return rng.uniform(-math.sqrt(3), math.sqrt(3), size=shape)
    if law is EntryLaw.COMPLEX_GAUSSIAN:
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
    raise ValueError(f"unknown entry law {law!r}")


def apportion(weights: Sequence[float], total: int) -> list[int]:
    """Largest-remainder split of `total` into integer parts proportional to `weights`."""
    quotas = [w * total for w in weights]
    parts = [math.floor(q) for q in quotas]
    short = total - sum(parts)
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - parts[i]), i))
    for i in order[:short]:
        parts[i] += 1
    return parts


def realize_atoms(mix: AtomicMixture, p: int) -> np.ndarray:
    """Diagonal of Lambda: each atom repeated by its apportioned multiplicity, descending."""
    return np.repeat(np.asarray(mix.atoms), apportion(mix.weights, p))


@dataclass(frozen=True)
class EmpiricalDistribution:
    samples: np.ndarray

    def __post_init__(self):
        arr = np.sort(np.asarray(self.samples, dtype=float).ravel())
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self):
        return self.samples.size


def esd_cdf(ed: EmpiricalDistribution, x):
    if len(ed) == 0:
        raise ValueError("empty sample")
    value = np.searchsorted(ed.samples, x, side="right") / len(ed)
    return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class SampledModel:
    """Concrete (p, n) realization of a model.

    `rotate_root` replaces Lambda^{1/2} by U Lambda^{1/2} V* with Haar U, V.
    `lane` separates random streams of models sharing a seed (null vs observed).
    """

    a_eigs: np.ndarray
    b_eigs: np.ndarray
    entry_law: EntryLaw = EntryLaw.GAUSSIAN
    seed: int = 0
    rotate_root: bool = False
    lane: int = 0

    def __post_init__(self):
        a = np.asarray(self.a_eigs, dtype=float)
        b = np.asarray(self.b_eigs, dtype=float)
        if a.ndim != 1 or b.ndim != 1:
            raise ValueError("a_eigs and b_eigs must be 1-d")
        if np.any(a < 0) or np.any(b < 0):
            raise ValueError("covariance eigenvalues must be >= 0")
        if a.size < 2 or b.size < a.size:
            raise ValueError(f"need 2 <= p <= n, got p={a.size}, n={b.size}")
        object.__setattr__(self, "a_eigs", a)
        object.__setattr__(self, "b_eigs", b)
        object.__setattr__(self, "entry_law", EntryLaw(self.entry_law))

    @classmethod
    def from_model(cls, model: Model, p: int, n: int, law=EntryLaw.GAUSSIAN, seed: int = 0, rotate_root=False):
        return cls(realize_atoms(model.A, p), model.b_eigs(n), EntryLaw(law), seed, rotate_root)

    @property
    def p(self) -> int:
        return self.a_eigs.size

    @property
    def n(self) -> int:
        return self.b_eigs.size

    @property
    def b_mean(self) -> float:
        return math.fsum(self.b_eigs) / self.n


def symmetric_eigvals(m: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of a real symmetric or complex Hermitian matrix (LAPACK)."""
    # LAPACK can return finite garbage for NaN input
    if not np.all(np.isfinite(m)):
        raise np.linalg.LinAlgError("matrix has non-finite entries")
    w = np.linalg.eigvalsh(m)
    if not np.all(np.isfinite(w)):
        raise np.linalg.LinAlgError("eigensolver returned non-finite eigenvalues")
    return w


def _haar(rng: np.random.Generator, p: int, complex_: bool) -> np.ndarray:
    z = rng.standard_normal((p, p))
    if complex_:
        z = (z + 1j * rng.standard_normal((p, p))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def _gram(model: SampledModel, replicate: int, x: np.ndarray | None):
    """Return (S_n, U) where U rotates the diagonal A (identity unless rotate_root)."""
    rng = stream(model.seed, replicate, model.lane)
    if x is None:
        x = draw_entries(model.entry_law, (model.p, model.n), rng)
    elif x.shape != (model.p, model.n):
        raise ValueError(f"X must have shape {(model.p, model.n)}, got {x.shape}")
    y = x * np.sqrt(model.b_eigs)[None, :]
    root = np.sqrt(model.a_eigs)
    if model.rotate_root:
        rot = stream(model.seed, replicate, lane=model.lane | 0x80000000)
        cplx = np.iscomplexobj(x)
        u, v = _haar(rot, model.p, cplx), _haar(rot, model.p, cplx)
        y = (u * root[None, :]) @ (v.conj().T @ y)
    else:
        u = None
        y = root[:, None] * y
    return (y @ y.conj().T) / model.n, u


def sample_C_n(
    model: SampledModel,
    replicate: int = 0,
    *,
    center: np.ndarray | None = None,
    x: np.ndarray | None = None,
) -> EmpiricalDistribution:
    """Eigenvalues of sqrt(n/p) (S_n - diag(center)); center defaults to n^-1 tr(B) a_eigs.

    `center` lets a test recenter data from one model by the null's b A_0.
    """
    s, u = _gram(model, replicate, x)
    shift = model.b_mean * model.a_eigs if center is None else np.asarray(center, dtype=float)
    if shift.shape != (model.p,):
        raise ValueError("center must have length p")
    if u is None:
        s[np.diag_indices_from(s)] -= shift
    else:
        s = s - (u * shift[None, :]) @ u.conj().T
    c = math.sqrt(model.n / model.p) * s
    return EmpiricalDistribution(symmetric_eigvals(c))


def sample_S_n_eigs(model: SampledModel, replicate: int = 0, *, x: np.ndarray | None = None) -> np.ndarray:
    """Eigenvalues of S_n = n^-1 Y Y*, descending."""
    s, _ = _gram(model, replicate, x)
    return symmetric_eigvals(s)[::-1]


def fluctuation_sample(model: SampledModel, replicate: int = 0, *, x: np.ndarray | None = None) -> EmpiricalDistribution:
    """sqrt(n/p) (lambda_j(S_n) - n^-1 tr(B) lambda_j(A_p)), eigenvalues paired by descending rank."""
    lam = sample_S_n_eigs(model, replicate, x=x)
    a_desc = np.sort(model.a_eigs)[::-1]
    return EmpiricalDistribution(math.sqrt(model.n / model.p) * (lam - model.b_mean * a_desc))


def kolmogorov_distance(ed: EmpiricalDistribution, cdf: Callable) -> float:
    """sup |F_hat - F| for continuous-or-atomic F, checked on both sides of each jump."""
    xs = ed.samples
    f = np.asarray(cdf(xs), dtype=float)
    f_left = np.asarray(cdf(np.nextafter(xs, -np.inf)), dtype=float)
    k = len(ed)
    upper = np.searchsorted(xs, xs, side="right") / k
    lower = np.searchsorted(xs, xs, side="left") / k
    return float(max(np.max(np.abs(upper - f)), np.max(np.abs(lower - f_left))))


def two_sample_ks(a: EmpiricalDistribution, b: EmpiricalDistribution) -> float:
    pts = np.concatenate([a.samples, b.samples])
    return float(np.max(np.abs(esd_cdf(a, pts) - esd_cdf(b, pts))))


def default_threads() -> int:
    return os.cpu_count() or 1


def run_replicates(fn: Callable[[int], T], replicates: int, threads: int | None = None) -> list[T]:
    """fn(0), ..., fn(replicates - 1) in index order.

    BLAS is held to one thread so every replicate's floating point result is
    identical whatever the worker count.
    """
    threads = default_threads() if threads is None else max(1, int(threads))
    with threadpool_limits(limits=1):
        if threads == 1 or replicates <= 1:
            return [fn(i) for i in range(replicates)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, range(replicates)))
