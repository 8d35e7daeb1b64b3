"""Accuracy metrics and the two-setting MSE experiment."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .distributions import DistributionSpec

MSE_DRAWS = 100_000
TABLE_NS = (100, 200, 500, 1000, 2000)
TABLE_SCALE = 1e3


def mse(curve: Callable, f0: DistributionSpec, *, draws: int = MSE_DRAWS) -> float:
    """``E[(S_hat(T) - S_0(T))^2]`` for ``T ~ f0``.

    ``curve`` is any survival function of time; a
    :class:`~mixcens.nonparametric.SurvivalCurve` is read by step
    interpolation and holds its last value past the window end. The
    expectation is a quasi-Monte Carlo average over the ``draws`` midpoint
    quantiles ``f0.ppf((i + 1/2) / draws)``.
    """
    grid = getattr(curve, "grid", None)
    if grid is not None and np.size(grid) == 0:
        raise ValueError("cannot score an empty curve")
    u = (np.arange(draws) + 0.5) / draws
    t = f0.ppf(u)
    diff = np.asarray(curve(t), dtype=float) - f0.survival(t)
    return float(np.mean(diff * diff))


def rate_slope(errors: Sequence[float], ns: Sequence[float]) -> float:
    """Least-squares slope of ``log(error)`` against ``log(n)``."""
    errors = np.asarray(errors, dtype=float)
    ns = np.asarray(ns, dtype=float)
    if errors.shape != ns.shape:
        raise ValueError("errors and ns must have equal lengths")
    if ns.size < 4:
        raise ValueError(f"need at least 4 sample sizes, got {ns.size}")
    if np.any(errors <= 0) or np.any(ns <= 0):
        raise ValueError("errors and sample sizes must be positive")
    slope, _ = np.polyfit(np.log(ns), np.log(errors), 1)
    return float(slope)


@dataclass
class MseSummary:
    estimator: str
    n: int
    mean: float
    median: float
    sd: float
    replications: int
    failures: int
    setting: Optional[int] = None
    values: tuple = ()
    errors: tuple = field(default=(), repr=False)

    def scaled(self, factor: float = TABLE_SCALE) -> tuple:
        return self.mean * factor, self.median * factor, self.sd * factor


def summarize(estimator: str, n: int, values: Iterable[float], errors=(), setting=None) -> MseSummary:
    values = np.asarray(list(values), dtype=float)
    errors = tuple(errors)
    if values.size:
        mean, median = float(values.mean()), float(np.median(values))
        sd = float(values.std(ddof=1)) if values.size > 1 else float("nan")
    else:
        mean = median = sd = float("nan")
    return MseSummary(
        estimator=estimator,
        n=int(n),
        mean=mean,
        median=median,
        sd=sd,
        replications=int(values.size + len(errors)),
        failures=len(errors),
        setting=setting,
        values=tuple(values.tolist()),
        errors=errors,
    )


def table1_harness(
    ns: Sequence[int] = TABLE_NS,
    reps: int = 100,
    seed: int = 0,
    *,
    settings: Sequence[int] = (1, 2),
    workers: Optional[int] = None,
) -> list:
    """MSE of the parametric and nonparametric estimators for each setting and n.

    The parametric fit assumes exponential patience and waiting times in
    both settings, so setting 2 is misspecified. Each (setting, n) cell gets
    its own seed derived from ``seed``. Returns a flat list of
    :class:`MseSummary`, ordered by setting, n, then estimator.
    """
    from .simulate import derive_seed, run_replications, setting as make_setting

    out = []
    for s in settings:
        for n in ns:
            config = make_setting(s, n=n, seed=derive_seed(seed, s, n), replications=reps)
            summaries = run_replications(config, ("parametric", "nonparametric"), workers=workers)
            for name in ("parametric", "nonparametric"):
                summaries[name].setting = s
                out.append(summaries[name])
    return out
