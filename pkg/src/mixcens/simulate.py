"""Synthetic data from the observation model and replicated experiments.

Each replication draws from its own generator, seeded from
``(config.seed, replication)`` through :class:`numpy.random.SeedSequence`
spawn keys, so results do not depend on execution order or worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Mapping, Optional

import numpy as np

from .distributions import DistributionSpec, exponential, weibull
from .errors import MixcensError
from .model import Dataset, Observation, ReportingPolicy, eval_q, exp_decay

THREADS_ENV = "MIXCENS_THREADS"


@dataclass(frozen=True)
class SimulationConfig:
    f: DistributionSpec
    g: DistributionSpec
    q: ReportingPolicy
    n: int
    seed: int = 0
    replications: int = 1

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if int(self.replications) < 1:
            raise ValueError(f"replications must be at least 1, got {self.replications}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "replications", int(self.replications))
        object.__setattr__(self, "seed", int(self.seed))

    def with_(self, **changes) -> "SimulationConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "f": self.f.to_dict(),
            "g": self.g.to_dict(),
            "q": self.q.to_dict() if hasattr(self.q, "to_dict") else repr(self.q),
            "n": self.n,
            "seed": self.seed,
            "replications": self.replications,
        }


def setting(number: int, n: int = 1000, seed: int = 0, replications: int = 1) -> SimulationConfig:
    """The two benchmark settings.

    Setting 1: T ~ Exp(4), W ~ Exp(10). Setting 2: T ~ Weibull(4, 2),
    W ~ Exp(10). Both announce with probability ``exp(-12 t)``.
    """
    if number == 1:
        f = exponential(4.0)
    elif number == 2:
        f = weibull(4.0, 2.0)
    else:
        raise ValueError(f"unknown setting {number}; expected 1 or 2")
    return SimulationConfig(f, exponential(10.0), exp_decay(12.0), n, seed, replications)


def replication_rng(seed: int, replication: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(replication),)))


def derive_seed(seed: int, *key: int) -> int:
    """Child 64-bit seed for a keyed sub-experiment."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def draw_latent(config: SimulationConfig, rng: np.random.Generator, size: Optional[int] = None):
    """Draw latent ``(T, W, B)`` arrays; ``B ~ Bernoulli(q(T))``."""
    n = config.n if size is None else int(size)
    t = config.f.sample(rng, n)
    w = config.g.sample(rng, n)
    b = (rng.random(n) < eval_q(config.q, t)).astype(np.int8)
    return t, w, b


def observe(t, w, b):
    """Turn latent values into what is recorded.

    Scalars give an :class:`Observation`, arrays a :class:`Dataset`.
    """
    t_arr, w_arr, b_arr = np.asarray(t, dtype=float), np.asarray(w, dtype=float), np.asarray(b)
    delta = (t_arr < w_arr).astype(np.int8)
    y = (delta * (b_arr != 0)).astype(np.int8)
    u = np.where(y == 1, t_arr, w_arr)
    if u.ndim == 0:
        return Observation(float(u), int(delta), int(y))
    return Dataset(u, delta, y)


def simulate_dataset(config: SimulationConfig, replication: int = 0) -> Dataset:
    rng = replication_rng(config.seed, replication)
    return observe(*draw_latent(config, rng))


# ---------------------------------------------------------------------------
# Replicated experiments


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _estimate_parametric(data, config, grid=None):
    from .parametric import fit_parametric

    return fit_parametric(data, "exponential", "exponential").survival


def _estimate_nonparametric(data, config, grid=None):
    from .nonparametric import estimate_F

    return estimate_F(data, grid=grid)


def _estimate_oracle(data, config, grid=None):
    return config.f.survival


ESTIMATORS: Mapping[str, Callable] = {
    "parametric": _estimate_parametric,
    "nonparametric": _estimate_nonparametric,
    "oracle": _estimate_oracle,
}


def _run_one(args):
    config, names, grid, replication = args
    from .evaluation import mse

    data = simulate_dataset(config, replication)
    out = {}
    for name in names:
        try:
            curve = ESTIMATORS[name](data, config, grid)
            out[name] = (mse(curve, config.f), None)
        except MixcensError as exc:
            out[name] = (None, f"{type(exc).__name__}: {exc}")
    return replication, out


def run_replications(
    config: SimulationConfig,
    estimators: Iterable[str] = ("parametric", "nonparametric"),
    grid=None,
    *,
    workers: Optional[int] = None,
):
    """Simulate ``config.replications`` datasets and score each estimator by MSE.

    Returns a dict mapping estimator name to :class:`~mixcens.evaluation.MseSummary`.
    Estimator failures are counted and excluded from the aggregates.
    """
    from .evaluation import summarize

    names = list(estimators)
    unknown = [e for e in names if e not in ESTIMATORS]
    if unknown:
        raise ValueError(f"unknown estimators {unknown}; available: {sorted(ESTIMATORS)}")
    workers = default_workers() if workers is None else int(workers)
    jobs = [(config, names, grid, r) for r in range(config.replications)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_run_one(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    summaries = {}
    for name in names:
        values = [res[name][0] for _, res in results if res[name][1] is None]
        errors = [(r, res[name][1]) for r, res in results if res[name][1] is not None]
        summaries[name] = summarize(name, config.n, values, errors)
    return summaries
