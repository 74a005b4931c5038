"""Stieltjes transform of the LSD on the upper half plane, and a density oracle.

For Im z > 0,

    beta(z) = -sum_j c_j a_j / (z + b2 a_j beta(z)),
    s(z)    = -sum_j c_j     / (z + b2 a_j beta(z)).

The beta map sends C+ into C+ and is a contraction there, so plain
fixed-point iteration from beta = i converges.  The contraction modulus
tends to 1 as Im z -> 0, which is what the damping and Newton stages are for.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .mixture import AtomicMixture

STEP_TOL = 1e-13
RESIDUAL_TOL = 1e-12
MAX_ITER = 10_000
DAMPING_ROUND = 1_000
DEFAULT_LADDER = (1e-2, 1e-3, 1e-4)


class ConvergenceError(ArithmeticError):
    """The beta fixed point did not converge to a Herglotz solution."""


@dataclass(frozen=True)
class StieltjesPair:
    z: complex
    s: complex
    beta: complex
    iterations: int
    residual: float


def _terms(mix: AtomicMixture, b2: float):
    a = np.asarray(mix.atoms)
    c = np.asarray(mix.weights)
    return a, c


def _beta_map(a, c, b2, z, beta):
    return -np.sum(c * a / (z[:, None] + b2 * a * beta[:, None]), axis=1)


def _residual(a, c, b2, z, beta):
    return np.abs(beta - _beta_map(a, c, b2, z, beta))


def _solve_many(mix: AtomicMixture, b2: float, z: np.ndarray, start: np.ndarray | None = None):
    """Vectorized solver; returns (beta, iterations, residual) arrays."""
    a, c = _terms(mix, b2)
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise ValueError("z must lie in the upper half plane")
    beta = np.full(z.shape, 1j) if start is None else np.asarray(start, dtype=complex).copy()
    iters = np.zeros(z.shape, dtype=int)
    active = np.ones(z.shape, dtype=bool)

    for _ in range(MAX_ITER):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        new = _beta_map(a, c, b2, z[idx], beta[idx])
        done = np.abs(new - beta[idx]) < STEP_TOL
        beta[idx] = new
        iters[idx] += 1
        active[idx[done]] = False

    eta = 0.5
    while active.any() and eta > 1e-3:
        for _ in range(DAMPING_ROUND):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            new = (1 - eta) * beta[idx] + eta * _beta_map(a, c, b2, z[idx], beta[idx])
            done = np.abs(new - beta[idx]) < STEP_TOL * eta
            beta[idx] = new
            iters[idx] += 1
            active[idx[done]] = False
        eta /= 2

    if active.any():
        idx = np.flatnonzero(active)
        beta[idx] = _newton(a, c, b2, z[idx], beta[idx])

    return beta, iters, _residual(a, c, b2, z, beta)


def _newton(a, c, b2, z, beta, steps: int = 50):
    """Newton polish on g(beta) = beta - map(beta); steps that leave C+ are rejected."""
    for _ in range(steps):
        den = z[:, None] + b2 * a * beta[:, None]
        g = beta + np.sum(c * a / den, axis=1)
        dg = 1.0 - np.sum(c * b2 * a**2 / den**2, axis=1)
        trial = beta - g / dg
        ok = (trial.imag > 0) & np.isfinite(trial)
        beta = np.where(ok, trial, beta)
        if np.all(np.abs(g) < RESIDUAL_TOL * 1e-2):
            break
    return beta


def _finish(mix, b2, z, beta, iters, resid) -> list[StieltjesPair]:
    a, c = _terms(mix, b2)
    s = -np.sum(c / (z[:, None] + b2 * a * beta[:, None]), axis=1)
    bad = (resid >= RESIDUAL_TOL) | (beta.imag <= 0) | (s.imag <= 0)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise ConvergenceError(
            f"no Herglotz solution at z={z[k]}: residual={resid[k]:.3e}, beta={beta[k]}"
        )
    return [StieltjesPair(complex(zz), complex(ss), complex(bb), int(it), float(r))
            for zz, ss, bb, it, r in zip(z, s, beta, iters, resid)]


def solve_system(mix: AtomicMixture, b2: float, z: complex, start: complex | None = None) -> StieltjesPair:
    """Solve for (s(z), beta(z)) at a single point of the upper half plane."""
    zz = np.array([complex(z)])
    st = None if start is None else np.array([complex(start)])
    beta, iters, resid = _solve_many(mix, b2, zz, st)
    return _finish(mix, b2, zz, beta, iters, resid)[0]


def solve_grid(mix: AtomicMixture, b2: float, zs: Sequence[complex], start=None) -> list[StieltjesPair]:
    zz = np.asarray(zs, dtype=complex)
    beta, iters, resid = _solve_many(mix, b2, zz, start)
    return _finish(mix, b2, zz, beta, iters, resid)


def _richardson(eps: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Neville extrapolation to eps = 0; values has shape (len(eps), N)."""
    table = [v.copy() for v in values]
    k = len(eps)
    for level in range(1, k):
        for i in range(k - level):
            e0, e1 = eps[i], eps[i + level]
            table[i] = (e0 * table[i + 1] - e1 * table[i]) / (e0 - e1)
    return table[0]


def density_inversion_many(
    mix: AtomicMixture, b2: float, xs, eps_ladder: Sequence[float] = DEFAULT_LADDER
) -> np.ndarray:
    """Im s(x + i eps) / pi, extrapolated to eps -> 0 over the ladder."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ladder = np.asarray(sorted(eps_ladder, reverse=True), dtype=float)
    if ladder.size == 0 or np.any(ladder <= 0):
        raise ValueError("eps_ladder must be a nonempty list of positive numbers")

    a_pos, c_pos = mix.positive()
    # continuation down from Im z = 1 keeps every solve inside its basin
    warm = None
    for eps in (1.0, 0.1):
        if eps > ladder[0]:
            warm = _solve_many(mix, b2, xs + 1j * eps, warm)[0]
    rows = []
    for eps in ladder:
        z = xs + 1j * eps
        beta, iters, resid = _solve_many(mix, b2, z, warm)
        _finish(mix, b2, z, beta, iters, resid)
        # the a = 0 term of s is exactly -c_0 / z: the atom at the origin, not density
        s_cont = -np.sum(c_pos / (z[:, None] + b2 * a_pos * beta[:, None]), axis=1)
        rows.append(s_cont.imag / np.pi)
        warm = beta
    return np.maximum(_richardson(ladder, np.array(rows)), 0.0)


def density_inversion(
    mix: AtomicMixture, b2: float, x: float, eps_ladder: Sequence[float] = DEFAULT_LADDER
) -> float:
    if x == 0:
        raise ValueError("x must be nonzero")
    return float(density_inversion_many(mix, b2, [x], eps_ladder)[0])
