"""Exact-jump simulation of the Markov chain on a graph.

Trajectories are driven by a counter-based Philox generator seeded from
a :class:`numpy.random.SeedSequence`; replicas use spawned child
sequences, so each replica is reproducible on its own and independent of
how many run in parallel.  Statistics are gathered after a burn-in and
split into equal-length batches for batch-means error bars.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._backend import get_kernels
from .errors import NonfiniteRate, TooShort
from .graph import PLUS, WeightedDigraph
from .markov import CurrentVector, lambda_coefficients, stationary

DEFAULT_BATCHES = 20
DEFAULT_BURN_IN_FRACTION = 0.05


@dataclass
class TrajectoryStats:
    """Occupation times and signed crossings collected on ``[burn_in, horizon)``."""

    horizon: float
    burn_in: float
    occupation_time: np.ndarray
    signed_crossings: np.ndarray
    batch_occupation: np.ndarray
    batch_crossings: np.ndarray
    jumps: int
    seed: object
    converted_from_exact: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def total_time(self) -> float:
        return self.horizon - self.burn_in

    @property
    def n_batches(self) -> int:
        return self.batch_occupation.shape[0]

    def to_dict(self, g: WeightedDigraph | None = None) -> dict:
        lab = (lambda v: g.labels[v]) if g is not None else str
        plab = (lambda k: g.pair_label(k)) if g is not None else str
        return {
            "seed": self.seed,
            "horizon": self.horizon,
            "burn_in": self.burn_in,
            "total_time": self.total_time,
            "jumps": self.jumps,
            "batches": self.n_batches,
            "converted_from_exact": self.converted_from_exact,
            "occupation_time": {lab(v): float(t) for v, t in enumerate(self.occupation_time)},
            "signed_crossings": {plab(k): int(c) for k, c in enumerate(self.signed_crossings)},
        }


def _float_tables(g: WeightedDigraph):
    """CSR out-edge table with float rates for the jump kernel."""
    starts, targets, rates, pair_of, sign_of = [0], [], [], [], []
    exit_rates = []
    for v in range(g.n):
        total = 0.0
        for e in g.out_edges(v):
            r = float(g.rate(e))
            if not math.isfinite(r) or r < 0:
                raise NonfiniteRate(f"rate of {g.edge_label(e)} is {r}")
            targets.append(e.target)
            rates.append(r)
            pair_of.append(e.pair)
            sign_of.append(1 if e.sign == PLUS else -1)
            total += r
        if not (total > 0 and math.isfinite(total)):
            raise NonfiniteRate(f"exit rate of vertex {g.labels[v]} is {total}")
        exit_rates.append(total)
        starts.append(len(targets))
    return (np.array(starts, dtype=np.intc), np.array(targets, dtype=np.intc), np.array(rates),
            np.array(pair_of, dtype=np.intc), np.array(sign_of, dtype=np.intc), np.array(exit_rates))


def make_rng(seed) -> np.random.Generator:
    """Philox generator from an integer seed or a SeedSequence."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


def simulate(g: WeightedDigraph, horizon: float, burn_in: float | None = None, seed=0,
             n_batches: int = DEFAULT_BATCHES, start: int = 0, kernels: str | None = None) -> TrajectoryStats:
    """Run one trajectory from vertex ``start`` until time ``horizon``.

    ``burn_in`` defaults to 5% of the horizon.  ``seed`` is an integer or
    a :class:`numpy.random.SeedSequence`.
    """
    if burn_in is None:
        burn_in = DEFAULT_BURN_IN_FRACTION * horizon
    if not (math.isfinite(horizon) and horizon > burn_in >= 0):
        raise TooShort(f"need horizon > burn_in >= 0, got horizon={horizon}, burn_in={burn_in}")
    if n_batches < 1:
        raise ValueError("need at least one batch")
    starts, targets, rates, pair_of, sign_of, exit_rates = _float_tables(g)
    k = get_kernels(kernels)
    rng = make_rng(seed)
    occ, cross, b_occ, b_cross, jumps = k.gillespie(
        starts, targets, rates, pair_of, sign_of, exit_rates, g.pair_count,
        int(start), float(horizon), float(burn_in), int(n_batches), rng)
    seed_repr = seed if isinstance(seed, (int, np.integer)) else list(getattr(seed, "spawn_key", ()))
    return TrajectoryStats(float(horizon), float(burn_in), np.asarray(occ), np.asarray(cross),
                           np.asarray(b_occ), np.asarray(b_cross), int(jumps),
                           int(seed_repr) if isinstance(seed_repr, (int, np.integer)) else seed_repr,
                           g.exact, {"backend": k.BACKEND})


def _batch_stats(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    b = values.shape[0]
    mean = values.mean(axis=0)
    if b < 2:
        return mean, np.full_like(mean, np.inf, dtype=float)
    return mean, values.std(axis=0, ddof=1) / math.sqrt(b)


def estimate_currents(stats: TrajectoryStats) -> CurrentVector:
    """Currents with batch-means standard errors."""
    if stats.total_time <= 0:
        raise TooShort("no time left after burn-in")
    blen = stats.total_time / stats.n_batches
    j = stats.signed_crossings / stats.total_time
    _, se = _batch_stats(stats.batch_crossings / blen)
    return CurrentVector(tuple(float(x) for x in j), tuple(float(x) for x in se))


def estimate_occupation(stats: TrajectoryStats) -> tuple[np.ndarray, np.ndarray]:
    """Occupation fractions and their batch-means standard errors."""
    if stats.total_time <= 0:
        raise TooShort("no time left after burn-in")
    blen = stats.total_time / stats.n_batches
    frac = stats.occupation_time / stats.total_time
    _, se = _batch_stats(stats.batch_occupation / blen)
    return frac, se


def mean_jump_rate(g: WeightedDigraph) -> float:
    """Stationary expected number of jumps per unit time."""
    p = stationary(g.to_float(), cross_check=False).probabilities
    return float(sum(p[v] * sum(float(g.rate(e)) for e in g.out_edges(v)) for v in range(g.n)))


def horizon_for_jumps(g: WeightedDigraph, jumps: float) -> float:
    return float(jumps) / mean_jump_rate(g)


def _replica(args):
    g, horizon, burn_in, child, n_batches, kernels = args
    return simulate(g, horizon, burn_in, child, n_batches, kernels=kernels)


def default_workers() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def simulate_replicas(g: WeightedDigraph, horizon: float, replicas: int, seed: int = 0,
                      burn_in: float | None = None, n_batches: int = DEFAULT_BATCHES,
                      workers: int | None = None, kernels: str | None = None) -> list[TrajectoryStats]:
    """Independent replicas with seeds spawned from ``seed``.

    Results do not depend on ``workers``; replica ``i`` always uses child
    sequence ``i``.
    """
    children = np.random.SeedSequence(seed).spawn(replicas)
    jobs = [(g, horizon, burn_in, c, n_batches, kernels) for c in children]
    workers = default_workers() if workers is None else max(1, workers)
    if workers == 1 or replicas == 1:
        out = [_replica(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, replicas)) as pool:
            out = list(pool.map(_replica, jobs))
    for i, s in enumerate(out):
        s.seed = {"root": seed, "replica": i}
    return out


def compare_currents(stats: TrajectoryStats, analytic, sigmas: float = 3.0) -> list[dict]:
    """Per-pair z-scores of the estimated currents against ``analytic`` values."""
    est = estimate_currents(stats)
    out = []
    for k, (j, se) in enumerate(zip(est.values, est.errors)):
        a = float(analytic[k])
        z = (j - a) / se if se > 0 else (0.0 if j == a else math.inf)
        out.append({"pair": k, "estimate": j, "stderr": se, "analytic": a, "z": z, "ok": abs(z) <= sigmas})
    return out


def empirical_linearity(g: WeightedDigraph, pair: int, settings, horizon: float, seed: int = 0,
                        n_batches: int = DEFAULT_BATCHES, kernels: str | None = None) -> dict:
    """Check the affine law between simulated currents at several input-rate settings.

    For every setting the per-batch residual ``j_e - lambda0 - lambda1 j_in``
    is averaged and compared with its batch-means error, which accounts for
    the correlation between the two estimated currents.  A least-squares
    line through the per-setting estimates is reported next to the exact
    coefficients.
    """
    from .markov import _with_pair_rates

    lam = lambda_coefficients(g, pair)
    children = np.random.SeedSequence(seed).spawn(len(settings))
    per_setting = []
    for (fwd, bwd), child in zip(settings, children):
        h = _with_pair_rates(g, {pair: (fwd, bwd)})
        st = simulate(h, horizon, None, child, n_batches, kernels=kernels)
        blen = st.total_time / st.n_batches
        bj = st.batch_crossings / blen
        per_setting.append((bj.mean(axis=0), bj))
    zmax = 0.0
    rows = []
    for e in range(g.pair_count):
        l0, l1 = (float(c) for c in lam.coefficients[e])
        zs = []
        for _, bj in per_setting:
            resid = bj[:, e] - l0 - l1 * bj[:, pair]
            m, se = _batch_stats(resid)
            zs.append(float(m / se) if se > 0 else 0.0)
        xs = np.array([m[pair] for m, _ in per_setting])
        ys = np.array([m[e] for m, _ in per_setting])
        slope, intercept = np.polyfit(xs, ys, 1) if len(set(np.round(xs, 15))) > 1 else (np.nan, np.nan)
        zmax = max(zmax, max(abs(z) for z in zs))
        rows.append({"pair": e, "lambda0": l0, "lambda1": l1, "fit_intercept": float(intercept),
                     "fit_slope": float(slope), "z": zs})
    return {"max_abs_z": zmax, "pairs": rows}
