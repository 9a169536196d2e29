"""Experiment runners. Each returns a list of row dicts matching its CSV
schema and writes the CSV (plus a ``.meta.json`` sidecar) when the plan
names an output path."""

from __future__ import annotations

import logging
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence

import numpy as np

from .. import __version__
from ..distributions import closed_form, sample, von_mises_params, sample_von_mises_sine
from ..estimators import EstimatorSpec, decimate, estimate, shuffle_surrogate
from ..index import HybridIndex
from ..space import TWO_PI, PeriodicSpace, PointCloud
from ..vicsek import VicsekConfig, extract_records, simulate
from .complexity import ComplexityModel
from .io import resolve_output, write_csv, write_meta
from .plans import ExperimentPlan

log = logging.getLogger(__name__)

THREADS_ENV = "TORINFO_THREADS"
SUPPORTED = {
    "von_mises": ("mi",),
    "hahs_pethel": ("te",),
}


def derive_seed(root: int, *keys: int) -> int:
    """Independent 63-bit seed for one cell of an experiment."""
    ss = np.random.SeedSequence(int(root), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def resolve_workers(workers: Optional[int] = None) -> int:
    """Positive values are taken as given; 0 or None means auto: the
    ``TORINFO_THREADS`` variable if set, else the CPU count."""
    if workers is not None and workers > 0:
        return int(workers)
    env = os.environ.get(THREADS_ENV, "auto").strip().lower()
    if env and env != "auto":
        return max(1, int(env))
    return os.cpu_count() or 1


def _map(fn: Callable, tasks: Sequence, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def mean_se(values) -> tuple:
    """Mean and standard error of the mean (NaN s.e. for one value)."""
    v = np.asarray(values, dtype=float)
    mean = math.fsum(v.tolist()) / v.size
    se = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
    return mean, se


def _finish(plan: ExperimentPlan, kind: str, rows: list, extra: Optional[dict] = None):
    if plan.output:
        path = resolve_output(plan.output)
        write_csv(path, kind, rows)
        meta = {"plan": plan.as_dict(), "version": __version__}
        meta.update(extra or {})
        write_meta(path, meta)
        log.info("wrote %s (%d rows)", path, len(rows))
    return rows


def _params_text(params: dict) -> str:
    return ";".join(f"{k}={v}" for k, v in sorted(params.items()))


# ---------------------------------------------------------------- accuracy

def _accuracy_task(task):
    dist, params, metric, n, seed, k, backends = task
    cloud = sample(dist, metric, n, seed, params)
    return [estimate(cloud, EstimatorSpec(metric, k=k, backend=b, seed=seed)).value
            for b in backends]


def run_accuracy(plan: ExperimentPlan, workers: Optional[int] = None) -> List[dict]:
    """Mean, standard error and bias against the closed form per cell.

    Every backend sees the same samples, so backend columns are paired.
    """
    workers = resolve_workers(workers or plan.workers)
    rows = []
    for di, (dist, params) in enumerate(plan.distributions):
        metrics = [m for m in plan.metrics if m in SUPPORTED.get(dist, plan.metrics)]
        for mi, metric in enumerate(metrics):
            for n in plan.N:
                try:
                    exact = closed_form(metric, dist, params)
                except (ValueError, KeyError):
                    exact = math.nan
                tasks = [(dist, params, metric, n,
                          derive_seed(plan.seed, di, mi, n, rep), plan.k,
                          tuple(plan.backends)) for rep in range(plan.reps)]
                error = None
                try:
                    values = np.array(_map(_accuracy_task, tasks, workers))
                except Exception as exc:  # recorded per row, run continues
                    log.error("%s %s N=%d failed: %s", dist, metric, n, exc)
                    error = f"{type(exc).__name__}: {exc}"
                    values = np.full((plan.reps, len(plan.backends)), math.nan)
                for bi, backend in enumerate(plan.backends):
                    mean, se = mean_se(values[:, bi])
                    text = _params_text(params)
                    if error:
                        text = f"{text};error={error}" if text else f"error={error}"
                    rows.append(dict(distribution=dist, params=text, metric=metric,
                                     backend=backend, k=plan.k, N=n, reps=plan.reps,
                                     mean=mean, se_e4=se * 1e4, exact=exact,
                                     bias=mean - exact))
    return _finish(plan, "accuracy", rows)


# ------------------------------------------------------------- vicsek data

def vicsek_records(plan: ExperimentPlan, eta: float, seed: int, tau: Optional[int] = None):
    cfg = VicsekConfig(M=plan.M, rho=plan.rho, s=plan.s, eta=float(eta),
                       tau=plan.tau if tau is None else tau, seed=seed)
    traj = simulate(cfg)
    return cfg, traj, extract_records(traj)


# -------------------------------------------------------------------- perf

def _timed(cloud, spec, repeats):
    runs = [estimate(cloud, spec) for _ in range(repeats)]
    build = statistics.median(r.timings["knn_build"] + r.timings["fr_build"] for r in runs)
    query = statistics.median(r.timings["knn_query"] + r.timings["fr_query"] for r in runs)
    total = statistics.median(r.total_seconds for r in runs)
    values = {r.value for r in runs}
    if len(values) != 1:
        raise RuntimeError("estimator returned different values on repeat runs")
    return runs[0].value, build, query, total


def run_perf(plan: ExperimentPlan) -> List[dict]:
    """Time and peak memory per backend on truncated Vicsek record clouds.

    Cells run serially so that timings are not disturbed. Timing is the
    median over ``timing_repeats`` runs; peak memory comes from one extra
    traced run.
    """
    need = max(plan.N_I)
    seed = derive_seed(plan.seed, 0)
    cfg, traj, rec = vicsek_records(plan, plan.eta[0], seed)
    del traj
    rows = []
    for metric in plan.metrics:
        full = rec.cloud(metric)
        if full.n < need:
            log.warning("only %d %s records, fewer than N_I=%d", full.n, metric, need)
        for n_i in plan.N_I:
            if n_i > full.n:
                for backend in plan.backends:
                    rows.append(dict(backend=backend, metric=metric, N_I=n_i,
                                     value="error=not enough records"))
                continue
            cloud = full.take(np.arange(n_i))
            for backend in plan.backends:
                spec = EstimatorSpec(metric, k=plan.k, backend=backend, seed=seed)
                try:
                    value, build, query, total = _timed(cloud, spec, plan.timing_repeats)
                    peak = estimate(cloud, spec, track_memory=True).peak_mem_bytes
                except MemoryError:
                    rows.append(dict(backend=backend, metric=metric, N_I=n_i,
                                     value="error=out of memory"))
                    continue
                log.info("perf %s %s N_I=%d total=%.3fs", backend, metric, n_i, total)
                rows.append(dict(backend=backend, metric=metric, N_I=n_i,
                                 build_s=build, query_s=query, total_s=total,
                                 peak_mem_bytes=peak, value=value))
    return _finish(plan, "perf", rows, {"vicsek_seed": seed,
                                         "records": {m: int(rec.cloud(m).n)
                                                     for m in plan.metrics}})


# -------------------------------------------------------------- complexity

def measured_tier_fractions(N: int, k: int, D: int, clouds: int, seed: int):
    """Fraction of kNN queries answered beyond the first tree, and by the
    linear scan, for uniform points on ``[0, 2pi)^D``."""
    tally = np.zeros(3, dtype=np.int64)
    for c in range(clouds):
        rng = np.random.default_rng(derive_seed(seed, D, N, k, c))
        cloud = PointCloud(rng.random((N, D)) * TWO_PI, PeriodicSpace.torus(D))
        index = HybridIndex().fit(cloud)
        index.knn_distances(k)
        tally += index.tier_tally
    total = tally.sum()
    return (tally[1] + tally[2]) / total, tally[2] / total


def run_complexity(plan: ExperimentPlan) -> List[dict]:
    rows = []
    for D in plan.dims:
        for n in plan.N:
            model = ComplexityModel(D=D, k=plan.k, N=n)
            a, b = measured_tier_fractions(n, plan.k, D, plan.reps, plan.seed)
            rows.append(dict(D=D, N=n, k=plan.k, eps=model.eps, alpha=model.alpha,
                             beta=model.beta, measured_alpha=float(a),
                             measured_beta=float(b), clouds=plan.reps,
                             predicted_cost=model.cost()))
    return _finish(plan, "complexity", rows)


# --------------------------------------------------------------- stability

SOURCE_COLUMN = {"mi": 1, "te": 2, "gte": 2}


def stability_cells(cloud: PointCloud, metric: str, k: int, fraction: float,
                    subsets: int, seed: int, backend: str = "vp"):
    """Unmodified, shuffled-source and decimated estimates for one cloud."""
    spec = EstimatorSpec(metric, k=k, backend=backend, seed=seed)
    base = estimate(cloud, spec).value
    shuffled = estimate(shuffle_surrogate(cloud, SOURCE_COLUMN[metric], seed), spec).value
    dec = [estimate(decimate(cloud, fraction, derive_seed(seed, j), k), spec).value
           for j in range(subsets)]
    return base, shuffled, dec


def run_stability(plan: ExperimentPlan) -> List[dict]:
    """Shuffle and decimation surrogates of Vicsek estimates across noise.

    The decimated row holds the mean over subsets; its ``se_e4`` is the
    standard error of that mean.
    """
    rows = []
    for ei, eta in enumerate(plan.eta):
        seed = derive_seed(plan.seed, ei)
        _, _, rec = vicsek_records(plan, eta, seed)
        for metric in plan.metrics:
            base, shuffled, dec = stability_cells(
                rec.cloud(metric), metric, plan.k, plan.fraction, plan.subsets,
                seed, plan.backends[0])
            mean, se = mean_se(dec)
            rows.append(dict(eta=eta, metric=metric, variant="unmodified",
                             value=base, se_e4=None))
            rows.append(dict(eta=eta, metric=metric, variant="shuffled",
                             value=shuffled, se_e4=None))
            rows.append(dict(eta=eta, metric=metric, variant="decimated",
                             value=mean, se_e4=se * 1e4))
            log.info("stability eta=%.3f %s base=%.4f shuffled=%.4f dec=%.4f",
                     eta, metric, base, shuffled, mean)
    return _finish(plan, "stability", rows)


# ------------------------------------------------------------- periodicity

def unwrapped_cloud(cloud: PointCloud) -> PointCloud:
    """Angles re-expressed on ``[-pi, pi)`` with periodicity switched off."""
    data = np.mod(cloud.data + math.pi, TWO_PI) - math.pi
    return PointCloud(data, PeriodicSpace.aperiodic(cloud.dims))


def _periodicity_task(task):
    params, mu, n, seed, k, backend = task
    cloud = sample_von_mises_sine(params["kappa1"], params["kappa2"], params["lam"],
                                  mu, mu, n, seed)
    spec = EstimatorSpec("mi", k=k, backend=backend, seed=seed)
    wrapped = estimate(cloud, spec).value
    plain = estimate(unwrapped_cloud(cloud), spec).value
    return wrapped, plain


def run_periodicity(plan: ExperimentPlan, workers: Optional[int] = None) -> List[dict]:
    """Sine-model von Mises MI with and without periodic distances.

    Both variants use the same samples, and repetition ``j`` draws the same
    relative sample at every ``mu``. The unwrapped variant places the cut of
    the angle range at +-pi.
    """
    workers = resolve_workers(workers or plan.workers)
    params = von_mises_params({"set": plan.von_mises_set})
    exact = closed_form("mi", "von_mises", params)
    n = plan.N[0]
    backend = plan.backends[0]
    rows = []
    for mu in plan.mu:
        # the same draws for every mu: each shift moves one fixed data set
        tasks = [(params, mu, n, derive_seed(plan.seed, rep), plan.k, backend)
                 for rep in range(plan.reps)]
        values = np.array(_map(_periodicity_task, tasks, workers))
        for col, wrapped in ((0, True), (1, False)):
            mean, se = mean_se(values[:, col])
            rows.append(dict(mu=mu, wrapped=wrapped, mean=mean, se_e4=se * 1e4,
                             exact=exact))
    return _finish(plan, "periodicity", rows)


RUNNERS = {
    "accuracy": run_accuracy,
    "perf": run_perf,
    "complexity": run_complexity,
    "stability": run_stability,
    "periodicity": run_periodicity,
}


def run_plan(plan: ExperimentPlan, allow_full_scale: bool = False) -> List[dict]:
    if plan.full_scale and not allow_full_scale:
        raise PermissionError("this plan is marked full_scale; pass the "
                              "full-scale flag to run it")
    t0 = time.perf_counter()
    rows = RUNNERS[plan.kind](plan)
    log.info("%s plan finished in %.1fs", plan.kind, time.perf_counter() - t0)
    return rows
