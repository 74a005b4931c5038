"""Limiting spectral density of C_n for an atomic spatial spectrum.

For real x != 0 the boundary value beta(x) is a root of

    beta = -sum_j c_j a_j / (x + b2 a_j beta),

which, after clearing denominators, is a polynomial of degree m+ + 1
(m+ = number of positive atoms).  Every root is computed, polished on the
rational equation, and the admissible one is kept: Im beta >= 0,
x Re beta < 0 and omega(x) <= 1.  On the support omega = 1, and the
Stieltjes inversion Im s(x) / pi reduces to

    f(x) = -2 b2 Re beta Im beta / (pi x).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .mixture import AtomicMixture

TAU_IM = 1e-9
TAU_RE = 1e-12
TAU_OMEGA = 1e-7
ORIGIN_GAP = 1e-3
_NEWTON_STEPS = 30


class SolverError(ArithmeticError):
    """No usable root of the beta equation."""


@dataclass(frozen=True)
class BetaSolution:
    x: float
    beta: complex
    omega: float
    admissible: bool
    b2: float = 1.0


def _polymul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise product of polynomials stored highest degree first, shape (N, k)."""
    out = np.zeros((p.shape[0], p.shape[1] + q.shape[1] - 1), dtype=np.result_type(p, q))
    for i in range(p.shape[1]):
        out[:, i : i + q.shape[1]] += p[:, i : i + 1] * q
    return out


def _coefficients(mix: AtomicMixture, b2: float, xs: np.ndarray) -> np.ndarray:
    """Coefficients (highest first) of the cleared beta polynomial for every x in xs.

    P(beta) = beta prod_j (x + b2 a_j beta) + sum_j c_j a_j prod_{k != j} (x + b2 a_k beta)
    over the positive atoms.
    """
    a, c = mix.positive()
    xs = np.asarray(xs, dtype=float)
    n = xs.size
    factors = [np.column_stack([np.full(n, b2 * aj), xs]) for aj in a]
    one = np.ones((n, 1))

    total = _polymul(np.column_stack([np.ones(n), np.zeros(n)]), _product(factors, one))
    for j, (aj, cj) in enumerate(zip(a, c)):
        rest = _product(factors[:j] + factors[j + 1 :], one)
        total[:, -rest.shape[1] :] += cj * aj * rest
    return total


def _product(factors: list[np.ndarray], one: np.ndarray) -> np.ndarray:
    out = one
    for f in factors:
        out = _polymul(out, f)
    return out


def beta_polynomial(mix: AtomicMixture, b2: float, x: float) -> np.ndarray:
    """Coefficients of the beta polynomial at x, highest degree first (numpy.roots order)."""
    if x == 0:
        raise ValueError("x must be nonzero")
    return _coefficients(mix, b2, np.array([float(x)]))[0]


def beta_residual(mix: AtomicMixture, b2: float, x, beta) -> np.ndarray:
    """|beta + sum_j c_j a_j / (x + b2 a_j beta)|, broadcasting over x and beta."""
    a, c = mix.positive()
    x = np.asarray(x)[..., None]
    beta = np.asarray(beta)[..., None]
    return np.abs(beta[..., 0] + np.sum(c * a / (x + b2 * a * beta), axis=-1))


def omega(mix: AtomicMixture, b2: float, x, beta) -> np.ndarray | float:
    """omega(x) = sum_j c_j b2 a_j^2 / |x + b2 a_j beta|^2."""
    a, c = mix.positive()
    xa = np.asarray(x)[..., None]
    ba = np.asarray(beta)[..., None]
    denom = np.abs(xa + b2 * a * ba) ** 2
    with np.errstate(divide="raise", invalid="raise"):
        try:
            value = np.sum(c * b2 * a**2 / denom, axis=-1)
        except FloatingPointError as exc:
            raise ZeroDivisionError("candidate root makes a denominator vanish") from exc
    return float(value) if np.ndim(value) == 0 else value


def _roots(coef: np.ndarray) -> np.ndarray:
    """Batched companion-matrix roots; coef has shape (N, d + 1)."""
    n, d1 = coef.shape
    d = d1 - 1
    comp = np.zeros((n, d, d))
    comp[:, 0, :] = -coef[:, 1:] / coef[:, :1]
    if d > 1:
        idx = np.arange(d - 1)
        comp[:, idx + 1, idx] = 1.0
    return np.linalg.eigvals(comp)


def _polish(mix: AtomicMixture, b2: float, xs: np.ndarray, betas: np.ndarray) -> np.ndarray:
    """Newton steps on g(beta) = beta + sum c a / (x + b2 a beta); a step is kept only if it helps."""
    a, c = mix.positive()
    x = xs[:, None, None]
    beta = betas.astype(complex)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(_NEWTON_STEPS):
            den = x + b2 * a * beta[..., None]
            g = beta + np.sum(c * a / den, axis=-1)
            dg = 1.0 - np.sum(c * b2 * a**2 / den**2, axis=-1)
            trial = beta - g / dg
            den_t = x + b2 * a * trial[..., None]
            g_t = trial + np.sum(c * a / den_t, axis=-1)
            better = np.isfinite(g_t) & (np.abs(g_t) < np.abs(g))
            if not better.any():
                break
            beta = np.where(better, trial, beta)
    return beta


def _candidates(mix: AtomicMixture, b2: float, xs: np.ndarray):
    xs = np.asarray(xs, dtype=float)
    betas = _polish(mix, b2, xs, _roots(_coefficients(mix, b2, xs)))
    a, c = mix.positive()
    with np.errstate(divide="ignore", invalid="ignore"):
        den = np.abs(xs[:, None, None] + b2 * a * betas[..., None]) ** 2
        omegas = np.sum(c * b2 * a**2 / den, axis=-1)
    return betas, omegas


def _select(x: float, b2: float, betas: np.ndarray, omegas: np.ndarray, hint: complex | None) -> BetaSolution:
    finite = np.isfinite(betas) & np.isfinite(omegas)
    betas, omegas = betas[finite], omegas[finite]
    if betas.size == 0:
        raise SolverError(f"no finite root at x={x}")
    sign_ok = x * betas.real < TAU_RE
    complex_ok = sign_ok & (betas.imag > TAU_IM) & (omegas <= 1 + TAU_OMEGA)
    if complex_ok.any():
        pool, pool_w = betas[complex_ok], omegas[complex_ok]
        k = int(np.argmin(np.abs(pool - hint))) if hint is not None else int(np.argmax(pool.imag))
        return BetaSolution(x, complex(pool[k]), float(pool_w[k]), True, b2)

    real = np.abs(betas.imag) <= TAU_IM
    if not real.any():
        real = np.abs(betas.imag) == np.abs(betas.imag).min()
    ok = real & sign_ok & (omegas <= 1 + TAU_OMEGA)
    mask = ok if ok.any() else real
    pool, pool_w = betas[mask], omegas[mask]
    if hint is not None:
        k = int(np.argmin(np.abs(pool - hint)))
    else:
        k = int(np.argmin(np.abs(pool_w - 1.0)))
    return BetaSolution(x, complex(pool[k].real, 0.0), float(pool_w[k]), False, b2)


def solve_beta(mix: AtomicMixture, b2: float, x: float, hint: complex | None = None) -> BetaSolution:
    """Admissible root of the beta equation at a single x != 0."""
    if x == 0:
        raise ValueError("x must be nonzero")
    betas, omegas = _candidates(mix, b2, np.array([float(x)]))
    return _select(float(x), b2, betas[0], omegas[0], hint)


def density_at(sol: BetaSolution) -> float:
    if not sol.admissible:
        return 0.0
    return max(0.0, -2.0 * sol.b2 * sol.beta.real * sol.beta.imag / (math.pi * sol.x))


def default_range(mix: AtomicMixture, b2: float) -> float:
    """Half-width of a grid that covers the support with margin.

    The edge of the generalized Wigner limit is bounded by
    2 sqrt(b2 * max(a) * mean(a)).
    """
    return 1.1 * 2.0 * math.sqrt(b2 * max(mix.atoms) * mix.mean()) + 0.1


@dataclass
class LsdCurve:
    grid: np.ndarray
    beta: np.ndarray
    omega: np.ndarray
    density: np.ndarray
    support: list[tuple[float, float]]
    atom_at_zero: float
    cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        steps = np.diff(self.grid) * 0.5 * (self.density[1:] + self.density[:-1])
        self.cumulative = np.concatenate([[0.0], np.cumsum(steps)])

    @property
    def mass(self) -> float:
        return self.atom_at_zero + float(self.cumulative[-1])

    def pdf(self, x):
        return np.interp(x, self.grid, self.density, left=0.0, right=0.0)


def _sweep(mix, b2, xs: np.ndarray) -> list[BetaSolution]:
    betas, omegas = _candidates(mix, b2, xs)
    out = []
    hint = None
    for i, x in enumerate(xs):
        sol = _select(float(x), b2, betas[i], omegas[i], hint)
        out.append(sol)
        hint = sol.beta
    return out


def _in_support(mix, b2, x: float) -> bool:
    return solve_beta(mix, b2, x).admissible


def _bisect_edge(mix, b2, inside: float, outside: float, tol: float) -> float:
    while abs(inside - outside) > tol:
        mid = 0.5 * (inside + outside)
        if _in_support(mix, b2, mid):
            inside = mid
        else:
            outside = mid
    return 0.5 * (inside + outside)


def build_curve(
    mix: AtomicMixture,
    b2: float,
    x_min: float | None = None,
    x_max: float | None = None,
    step: float = 1e-3,
    origin_gap: float = ORIGIN_GAP,
) -> LsdCurve:
    """Sweep outward from +-origin_gap on each side, threading beta continuity."""
    if x_min is None or x_max is None:
        r = default_range(mix, b2)
        x_min = -r if x_min is None else x_min
        x_max = r if x_max is None else x_max
    if not (x_min < -origin_gap < origin_gap < x_max) or step <= 0:
        raise ValueError("need x_min < -origin_gap < origin_gap < x_max and step > 0")

    right = origin_gap + step * np.arange(int(math.floor((x_max - origin_gap) / step + 1e-9)) + 1)
    left = -(origin_gap + step * np.arange(int(math.floor((-origin_gap - x_min) / step + 1e-9)) + 1))
    sols = _sweep(mix, b2, left)[::-1] + _sweep(mix, b2, right)

    grid = np.concatenate([left[::-1], right])
    beta = np.array([s.beta for s in sols])
    om = np.array([s.omega for s in sols])
    dens = np.array([density_at(s) for s in sols])
    inside = np.array([s.admissible for s in sols])
    n_left = left.size

    support = []
    tol = step / 100
    i = 0
    while i < grid.size:
        if not inside[i]:
            i += 1
            continue
        j = i
        while j + 1 < grid.size and inside[j + 1] and not (j + 1 == n_left):
            j += 1
        lo = grid[i] if i == 0 or i == n_left else _bisect_edge(mix, b2, grid[i], grid[i - 1], tol)
        last = grid.size - 1
        hi = grid[j] if j == last or j == n_left - 1 else _bisect_edge(mix, b2, grid[j], grid[j + 1], tol)
        support.append([lo, hi, i, j])
        i = j + 1

    merged: list[list] = []
    for iv in support:
        # a run ending at -gap and one starting at +gap are one interval across the origin
        if merged and merged[-1][3] == n_left - 1 and iv[2] == n_left:
            merged[-1][1], merged[-1][3] = iv[1], iv[3]
        else:
            merged.append(iv)
    for lo, hi, i, j in merged:
        if j - i + 1 < 8:
            warnings.warn(f"support interval [{lo:.4g}, {hi:.4g}] has fewer than 8 grid points", stacklevel=2)

    return LsdCurve(
        grid=grid,
        beta=beta,
        omega=om,
        density=dens,
        support=[(float(lo), float(hi)) for lo, hi, _, _ in merged],
        atom_at_zero=mix.zero_mass,
    )


def cdf(curve: LsdCurve, x):
    """F(x): cumulative trapezoid of the density plus the atom at 0 for x >= 0, clamped."""
    xa = np.asarray(x, dtype=float)
    cont = np.interp(xa, curve.grid, curve.cumulative, left=0.0, right=curve.cumulative[-1])
    value = np.clip(cont + curve.atom_at_zero * (xa >= 0), 0.0, 1.0)
    return float(value) if np.ndim(value) == 0 else value
