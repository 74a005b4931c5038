"""Command-line entry point: densities, simulations, tests and table sweeps."""

from __future__ import annotations

import functools
import math
import sys
from dataclasses import dataclass

import click
import numpy as np
from threadpoolctl import threadpool_limits

from . import gof, io, lsd, randmat, semicircle, stieltjes
from .mixture import AtomicMixture, InfeasibleModelError, Model, ModelError, MomentPair

EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_INFEASIBLE = 4

TABLE1_P = (33, 66, 99, 201, 600)
TABLE1_N = (1000, 3300, 10000, 40000, 240000)
H0_MODEL = Model(AtomicMixture.from_lists([1, 2, 3], [1 / 3] * 3), MomentPair(1.0, 1.0))


@dataclass(frozen=True)
class RunConfig:
    p: int
    n: int
    replicates: int = 1
    seed: int = 0
    threads: int | None = None

    def __post_init__(self):
        if self.p < 2 or self.p >= self.n:
            raise ModelError(f"need 2 <= p < n, got p={self.p}, n={self.n}")
        if self.replicates < 1:
            raise ModelError("replicates must be >= 1")


def guarded(fn):
    """Map library errors onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except InfeasibleModelError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INFEASIBLE)
        except (ModelError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INPUT)
        except (ArithmeticError, np.linalg.LinAlgError) as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(EXIT_NUMERIC)

    return wrapper


seed_option = click.option(
    "--seed", type=int, envvar="SPECSEP_SEED", default=0, show_default=True,
    help="Base seed (falls back to $SPECSEP_SEED).",
)
threads_option = click.option(
    "--threads", type=click.IntRange(min=1), default=None, help="Replicate workers (default: all cores)."
)
law_option = click.option(
    "--law", type=click.Choice([law.value for law in randmat.EntryLaw]), default="gaussian", show_default=True
)


@click.group()
def main():
    """Spectra of renormalized separable sample covariance matrices when p/n -> 0."""


@main.command()
@click.argument("model_path", metavar="MODEL")
@click.option("--b2", type=float, default=None, help="Override n^-1 tr(B^2).")
@click.option("--grid", nargs=3, type=float, default=None, metavar="XMIN XMAX STEP")
@click.option("--origin-gap", type=float, default=lsd.ORIGIN_GAP, show_default=True)
@click.option("--oracle", is_flag=True, help="Add the Stieltjes-inversion density column.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@guarded
def density(model_path, b2, grid, origin_gap, oracle, out):
    """Limiting density curve as CSV, with support and atom mass in OUT.json."""
    model = io.load_model(model_path)
    b2 = model.moments().b2 if b2 is None else b2
    if grid:
        curve = lsd.build_curve(model.A, b2, grid[0], grid[1], grid[2], origin_gap)
    else:
        curve = lsd.build_curve(model.A, b2, origin_gap=origin_gap)
    meta = io.curve_meta(curve) | {"b2": b2, "model": model.to_json()}
    extra = None
    if oracle:
        ref = stieltjes.density_inversion_many(model.A, b2, curve.grid)
        dev = np.abs(ref - curve.density)
        interior = _interior(curve, margin=0.05)
        meta["oracle_max_deviation"] = float(dev.max())
        meta["oracle_max_deviation_interior"] = float(dev[interior].max()) if interior.any() else 0.0
        extra = {"oracle_density": ref}
    io.write_curve(curve, out, extra)
    io.dump_json(meta, io.sidecar_path(out))
    click.echo(io.dump_json(meta, None), nl=False)


def _interior(curve: lsd.LsdCurve, margin: float) -> np.ndarray:
    x = curve.grid
    mask = np.zeros(x.shape, dtype=bool)
    for lo, hi in curve.support:
        mask |= (x > lo + margin) & (x < hi - margin)
    return mask & (np.abs(x) > 10 * lsd.ORIGIN_GAP)


def _lsd_for(model: Model, n: int) -> tuple[lsd.LsdCurve, float, float]:
    m = model.moments(n)
    return lsd.build_curve(model.A, m.b2), m.b, m.b2


@main.command()
@click.argument("model_path", metavar="MODEL")
@click.option("--p", type=int, required=True)
@click.option("--n", type=int, required=True)
@click.option("--reps", type=int, default=100, show_default=True)
@seed_option
@law_option
@threads_option
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Eigenvalue CSV.")
@click.option("--summary", type=click.Path(dir_okay=False), default=None, help="Summary JSON.")
@guarded
def simulate(model_path, p, n, reps, seed, law, threads, out, summary):
    """Simulate C_n and report mean and sd of L_n against the LSD."""
    cfg = RunConfig(p, n, reps, seed, threads)
    model = io.load_model(model_path)
    sampled = randmat.SampledModel.from_model(model, p, n, law, seed)
    curve, _, b2 = _lsd_for(model, n)

    def one(r):
        ed = randmat.sample_C_n(sampled, r)
        return ed, gof.l2_statistic(ed, curve)

    results = randmat.run_replicates(one, cfg.replicates, cfg.threads)
    stats = [s for _, s in results]
    mean, sd = gof.summarize(stats)
    report = {
        "p": p, "n": n, "replicates": reps, "seed": seed, "law": law, "b2": b2,
        "mean_L": mean, "sd_L": sd, "statistics": stats,
    }
    if out:
        rows = ((r, i, float(v)) for r, (ed, _) in enumerate(results) for i, v in enumerate(ed.samples))
        io.write_rows(out, ["replicate", "index", "eigenvalue"], rows)
    click.echo(io.dump_json(report, summary), nl=False)


def _null_params(model0: Model, n: int):
    """H0 fixes only the two spectral moments of B, even when B is given explicitly."""
    m = model0.moments(n)
    return m.b, m.b2


@main.command("null-dist")
@click.argument("model_path", metavar="MODEL0")
@click.option("--p", type=int, required=True)
@click.option("--n", type=int, required=True)
@click.option("--reps", type=int, default=500, show_default=True)
@seed_option
@threads_option
@click.option("--statistic", type=click.Choice(sorted(gof.STATISTICS)), default="L2", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Null sample CSV.")
@click.option("--report", type=click.Path(dir_okay=False), default=None)
@guarded
def null_dist(model_path, p, n, reps, seed, threads, statistic, out, report):
    """Monte-Carlo null distribution of the test statistic."""
    cfg = RunConfig(p, n, reps, seed, threads)
    model0 = io.load_model(model_path)
    b, b2 = _null_params(model0, n)
    null = gof.monte_carlo_null(model0.A, b, b2, p, n, cfg.replicates, seed, threads=cfg.threads, statistic=statistic)
    if out:
        io.write_rows(out, ["rank", "statistic"], enumerate(map(float, null.sample)))
    mean, sd = gof.summarize(null.sample)
    data = {
        "p": p, "n": n, "replicates": reps, "seed": seed, "statistic": statistic,
        "mean": mean, "sd": sd, "quantiles": {repr(k): v for k, v in null.quantiles.items()},
    }
    click.echo(io.dump_json(data, report), nl=False)


@main.command()
@click.argument("null_path", metavar="MODEL0")
@click.option("--observed", type=click.Path(dir_okay=False), default=None, help="CSV of C_n eigenvalues.")
@click.option("--data", type=click.Path(dir_okay=False), default=None,
              help="CSV data matrix Y (p rows in the eigenbasis of A_0, descending atoms).")
@click.option("--simulate-under", "alt_path", type=click.Path(dir_okay=False), default=None, metavar="MODEL1")
@click.option("--p", type=int, default=None)
@click.option("--n", type=int, default=None)
@click.option("--reps", type=int, default=500, show_default=True)
@seed_option
@law_option
@threads_option
@click.option("--center", type=click.Choice(["null", "own"]), default="null", show_default=True,
              help="Recenter simulated data by b0 A_0 (the test) or by its own n^-1 tr(B_1) A_1.")
@click.option("--alt-reps", type=int, default=0, help="Also simulate this many alternative statistics for QQ data.")
@click.option("--qq", type=click.Path(dir_okay=False), default=None, help="QQ pairs CSV (needs --alt-reps >= 100).")
@click.option("--null-out", type=click.Path(dir_okay=False), default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Report JSON.")
@guarded
def test(null_path, observed, data, alt_path, p, n, reps, seed, law, threads, center, alt_reps, qq, null_out, out):
    """Monte-Carlo test of H0: covariance A_0 (x) B with the given moments of B."""
    sources = [s for s in (observed, data, alt_path) if s]
    if len(sources) != 1:
        raise ModelError("give exactly one of --observed, --data, --simulate-under")
    model0 = io.load_model(null_path)

    if observed:
        eigs = io.read_eigenvalues(observed)
        p = eigs.size if p is None else p
        if eigs.size != p:
            raise ModelError(f"--p={p} but {eigs.size} eigenvalues given")
    elif data:
        y = io.read_matrix(data)
        p, n = y.shape
    if p is None or n is None:
        raise ModelError("--p and --n are required")
    cfg = RunConfig(p, n, reps, seed, threads)
    b, b2 = _null_params(model0, n)
    a0 = randmat.realize_atoms(model0.A, p)

    if observed:
        obs = randmat.EmpiricalDistribution(eigs)
    elif data:
        s = y @ y.conj().T / n
        s[np.diag_indices_from(s)] -= b * a0
        obs = randmat.EmpiricalDistribution(randmat.symmetric_eigvals(math.sqrt(n / p) * s))

    null = gof.monte_carlo_null(model0.A, b, b2, p, n, cfg.replicates, seed, threads=cfg.threads)
    report_extra = {}
    if alt_path:
        alt = randmat.SampledModel.from_model(io.load_model(alt_path), p, n, law, seed)
        alt = randmat.SampledModel(alt.a_eigs, alt.b_eigs, alt.entry_law, seed, lane=gof.OBSERVED_LANE)
        ctr = b * a0 if center == "null" else None
        obs = randmat.sample_C_n(alt, 0, center=ctr)
        if alt_reps:
            stats = randmat.run_replicates(
                lambda r: gof.l2_statistic(randmat.sample_C_n(alt, r, center=ctr), null.curve), alt_reps, cfg.threads
            )
            report_extra["alternative_quantiles"] = {repr(k): v for k, v in gof.quantiles(stats).items()}
            if qq:
                io.write_rows(qq, ["probability", "q_null", "q_alt"],
                              ((pr, a, b_) for pr, (a, b_) in zip(gof.QUANTILE_PROBS, gof.qq_data(null.sample, stats))))
    elif qq:
        raise ModelError("--qq needs --simulate-under with --alt-reps")

    rep = gof.run_test(obs, model0.A, b, b2, p, n, reps, seed, null=null)
    if null_out:
        io.write_rows(null_out, ["rank", "statistic"], enumerate(map(float, null.sample)))
    click.echo(io.dump_json(rep.to_json() | report_extra, out), nl=False)


@main.command()
@click.argument("model_path", metavar="MODEL")
@click.option("--p", type=int, required=True)
@click.option("--n", type=int, required=True)
@seed_option
@law_option
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Fluctuation sample CSV.")
@click.option("--cdf-out", type=click.Path(dir_okay=False), default=None, help="x, empirical CDF, mixture CDF.")
@guarded
def fluctuation(model_path, p, n, seed, law, out, cdf_out):
    """Eigenvalue fluctuations of S_n against the semicircle mixture law."""
    RunConfig(p, n, 1, seed)
    model = io.load_model(model_path)
    sampled = randmat.SampledModel.from_model(model, p, n, law, seed)
    b2 = model.moments(n).b2
    mixlaw = semicircle.FluctuationMixture.from_mixture(model.A, b2)
    cdf = functools.partial(semicircle.mixture_cdf, mixlaw)
    with threadpool_limits(limits=1):
        ed = randmat.fluctuation_sample(sampled)
    ks = randmat.kolmogorov_distance(ed, cdf)
    if out:
        io.write_rows(out, ["fluctuation"], ([float(v)] for v in ed.samples))
    if cdf_out:
        edge = 2.5 * max(mixlaw.sigmas) + 0.5
        xs = np.linspace(-edge, edge, 1001)
        io.write_rows(cdf_out, ["x", "empirical", "mixture"],
                      zip(map(float, xs), map(float, randmat.esd_cdf(ed, xs)), map(float, cdf(xs))))
    report = {"p": p, "n": n, "seed": seed, "law": law, "b2": b2, "sigmas": list(mixlaw.sigmas),
              "weights": list(mixlaw.weights), "ks_distance": ks}
    click.echo(io.dump_json(report, None), nl=False)


@main.command()
@click.option("--model", "model_path", default=None, help="Defaults to atoms {1,2,3} in thirds, B = I.")
@click.option("--reps", type=int, default=100, show_default=True)
@seed_option
@threads_option
@click.option("--max-cost", type=float, default=2e10, show_default=True,
              help="Skip cells with reps * p^2 * n above this.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@guarded
def table1(model_path, reps, seed, threads, max_cost, out):
    """Mean and sd of L_n over the (p, n) grid, cheap cells only."""
    model = H0_MODEL if model_path is None else io.load_model(model_path)
    if not isinstance(model.B, MomentPair):
        raise ModelError("table1 needs a model with B given by moments")
    curve = lsd.build_curve(model.A, model.B.b2)
    rows, skipped = [], []
    for p in TABLE1_P:
        for n in TABLE1_N:
            if reps * p * p * n > max_cost or p >= n:
                skipped.append([p, n])
                continue
            null = gof.monte_carlo_null(model.A, model.B.b, model.B.b2, p, n, reps, seed, threads=threads, curve=curve)
            mean, sd = gof.summarize(null.sample)
            rows.append((p, n, mean, sd, reps))
    if out:
        io.write_rows(out, ["p", "n", "mean_L", "sd_L", "replicates"], rows)
    data = {"cells": [dict(zip(["p", "n", "mean_L", "sd_L", "replicates"], r)) for r in rows], "skipped": skipped}
    click.echo(io.dump_json(data, None), nl=False)


if __name__ == "__main__":
    main()
