"""Nonparametric estimation of the patience-time distribution.

The estimate of ``F`` combines

* the empirical shares of served and silent-leave patients,
* boundary-reflected kernel density estimates of the recorded time within
  those two categories,
* a Nelson-Aalen style estimate of ``A(t) = int_0^t q f`` built from the
  reported departures,

through :func:`mixcens.model.plugin_cdf`. The raw plug-in is then clamped to
[0, 1] and made monotone by isotonic regression.

The waiting-time survival is a Kaplan-Meier estimate in which served and
silent-leave patients are events and reported departures are censorings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.optimize import isotonic_regression

from .errors import InsufficientDataError, WindowExceededError
from .model import Dataset, plugin_cdf

DEFAULT_GRID_POINTS = 200
_CHUNK = 2**22


# ---------------------------------------------------------------------------
# Curves


@dataclass(frozen=True)
class StepCurve:
    """Right-continuous step function.

    Takes ``initial`` before ``times[0]`` and ``values[j]`` on
    ``[times[j], times[j+1])``.
    """

    times: np.ndarray
    values: np.ndarray
    initial: float = 0.0

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("jump times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.times, t, side="right") - 1
        out = np.where(idx >= 0, self.values[np.maximum(idx, 0)] if self.values.size else self.initial, self.initial)
        return out[()] if out.ndim == 0 else out


@dataclass
class SurvivalCurve:
    """Estimated survival function on a grid, read by step interpolation.

    ``values`` are the final (clamped, monotone) survival estimates. For the
    plug-in estimator ``raw`` holds the unprocessed ``1 - F_hat`` and
    ``a_hat`` the reported-abandonment estimate at each grid time.
    ``excluded`` lists grid times dropped because the plug-in was undefined.
    """

    grid: np.ndarray
    values: np.ndarray
    tau: float
    method: str
    raw: Optional[np.ndarray] = None
    a_hat: Optional[np.ndarray] = None
    excluded: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.size == 0:
            raise ValueError("a survival curve needs at least one grid point")
        if self.grid.shape != self.values.shape:
            raise ValueError("grid and values must have equal shapes")

    def __call__(self, t):
        """Survival at ``t``: value at the largest grid time <= t.

        Times before the first grid point read the first value; times past
        the last read the last value.
        """
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.grid, t, side="right") - 1, 0, self.grid.size - 1)
        out = self.values[idx]
        return out[()] if out.ndim == 0 else out

    @property
    def cdf_values(self) -> np.ndarray:
        return 1.0 - self.values


# ---------------------------------------------------------------------------
# Kernels


@dataclass(frozen=True)
class KernelSpec:
    """Kernel density settings.

    ``bandwidth='auto'`` selects Silverman's rule of thumb on the sample.
    """

    kernel: str = "epanechnikov"
    bandwidth: Union[float, str] = "auto"
    boundary: str = "reflection"

    def __post_init__(self):
        if self.kernel not in ("epanechnikov", "gaussian"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.boundary not in ("reflection", "none"):
            raise ValueError(f"unknown boundary rule {self.boundary!r}")
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "auto":
                raise ValueError(f"bandwidth must be positive or 'auto', got {self.bandwidth!r}")
        elif not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth!r}")

    def to_dict(self) -> dict:
        return {"kernel": self.kernel, "bandwidth": self.bandwidth, "boundary": self.boundary}


def _epanechnikov(z):
    return np.where(np.abs(z) < 1.0, 0.75 * (1.0 - z * z), 0.0)


def _gaussian(z):
    return np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)


_KERNELS = {"epanechnikov": _epanechnikov, "gaussian": _gaussian}


def silverman_bandwidth(x) -> float:
    """``0.9 * min(sd, IQR / 1.34) * m^(-1/5)``, falling back to ``sd`` when the IQR is 0."""
    x = np.asarray(x, dtype=float)
    m = x.size
    sd = float(np.std(x, ddof=1)) if m > 1 else 0.0
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if spread <= 0:
        spread = sd
    if spread <= 0:
        raise InsufficientDataError(f"cannot choose a bandwidth for {m} observation(s) with zero spread")
    return 0.9 * spread * m ** (-0.2)


def kernel_density(subset, spec: KernelSpec, t, *, category: Optional[int] = None):
    """Kernel density estimate of ``subset`` at times ``t``.

    With ``boundary='reflection'`` the sample is mirrored about 0, which keeps
    the full probability mass on [0, inf).
    """
    x = np.sort(np.asarray(subset, dtype=float).ravel())
    if x.size == 0:
        which = f" in category {category}" if category is not None else ""
        raise InsufficientDataError(f"no observations{which} to estimate a density from", category=category)
    h = silverman_bandwidth(x) if spec.bandwidth == "auto" else float(spec.bandwidth)
    kern = _KERNELS[spec.kernel]
    t_arr = np.asarray(t, dtype=float)
    flat = t_arr.ravel()
    out = np.empty(flat.size)
    step = max(1, _CHUNK // x.size)
    for start in range(0, flat.size, step):
        tt = flat[start : start + step, None]
        s = kern((tt - x) / h).sum(axis=1)
        if spec.boundary == "reflection":
            s += kern((tt + x) / h).sum(axis=1)
        out[start : start + step] = s
    out /= x.size * h
    out = out.reshape(t_arr.shape)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Empirical quantities


def empirical_category_probs(data: Dataset) -> tuple:
    """Shares of served, reported and silent-leave observations."""
    n1, n2, _ = data.counts()
    p1 = n1 / data.n
    p2 = n2 / data.n
    return p1, p2, 1.0 - (p1 + p2)


def counting_N(data: Dataset, t):
    """Fraction of reported departures at or before ``t``."""
    s = np.sort(data.u[data.y == 1])
    out = np.searchsorted(s, np.asarray(t, dtype=float), side="right") / data.n
    return out[()] if np.ndim(out) == 0 else out


def at_risk_Y(data: Dataset, t):
    """Fraction of recorded times at or after ``t``."""
    s = np.sort(data.u)
    out = (data.n - np.searchsorted(s, np.asarray(t, dtype=float), side="left")) / data.n
    return out[()] if np.ndim(out) == 0 else out


def risk_floor(n: int) -> float:
    """Smallest at-risk fraction allowed inside the estimation window."""
    return min(max(5.0 / n, 0.01), 1.0)


def estimation_window(data: Dataset) -> float:
    """Largest ``t`` whose at-risk fraction is at least :func:`risk_floor`."""
    k = int(np.ceil(risk_floor(data.n) * data.n - 1e-9))
    k = min(max(k, 1), data.n)
    return float(np.sort(data.u)[data.n - k])


def d_hat_curve(data: Dataset) -> StepCurve:
    """Cumulative reported-departure hazard, tied event times merged into one jump."""
    events = data.u[data.y == 1]
    if events.size == 0:
        return StepCurve(np.empty(0), np.empty(0), 0.0)
    times, counts = np.unique(events, return_counts=True)
    at_risk = data.n - np.searchsorted(np.sort(data.u), times, side="left")
    return StepCurve(times, np.cumsum(counts / at_risk), 0.0)


def a_hat_curve(data: Dataset) -> StepCurve:
    """``A_hat = 1 - exp(-D_hat)`` over all reported-departure times."""
    d = d_hat_curve(data)
    return StepCurve(d.times, -np.expm1(-d.values), 0.0)


def report_cdf_A_hat(data: Dataset, t, *, tau: Optional[float] = None):
    """Estimate ``A(t)`` at times within the window ``[0, tau]``.

    ``tau`` defaults to :func:`estimation_window`.
    """
    tau = estimation_window(data) if tau is None else float(tau)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr > tau):
        raise WindowExceededError(f"time {float(t_arr.max()):g} exceeds the estimation window tau={tau:g}")
    return a_hat_curve(data)(t_arr)


# ---------------------------------------------------------------------------
# Plug-in estimator of F


def _require_categories(data: Dataset):
    n1, _, n3 = data.counts()
    if n1 == 0:
        raise InsufficientDataError("no served observations (category 1, C1); cannot estimate r1", category=1)
    if n3 == 0:
        raise InsufficientDataError("no silent-leave observations (category 3, C3); cannot estimate r3", category=3)


def default_grid(data: Dataset, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    return np.linspace(0.0, estimation_window(data), points)


def estimate_F(data: Dataset, kernel: Optional[KernelSpec] = None, grid=None) -> SurvivalCurve:
    """Plug-in estimate of the patience-time survival on ``grid``.

    ``grid`` defaults to 200 equally spaced points on ``[0, tau]``. Returned
    ``values`` are ``1 - F_hat`` after clamping and isotonic regression;
    ``raw`` keeps the unprocessed plug-in.
    """
    kernel = KernelSpec() if kernel is None else kernel
    _require_categories(data)
    tau = estimation_window(data)
    grid = default_grid(data) if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-d array")
    if np.any(np.diff(grid) <= 0) or grid[0] < 0:
        raise ValueError("grid must be nonnegative and strictly increasing")
    if grid[-1] > tau:
        raise WindowExceededError(f"grid extends to {grid[-1]:g}, beyond the estimation window tau={tau:g}")

    p1, _, p3 = empirical_category_probs(data)
    r1 = kernel_density(data.times(1), kernel, grid, category=1)
    r3 = kernel_density(data.times(3), kernel, grid, category=3)
    a = a_hat_curve(data)(grid)
    raw_F = plugin_cdf(p1, p3, r1, r3, a)

    ok = np.isfinite(raw_F)
    excluded = tuple(grid[~ok].tolist())
    if not ok.any():
        raise InsufficientDataError("the plug-in denominator vanishes at every grid point")
    fitted = isotonic_regression(np.clip(raw_F[ok], 0.0, 1.0), increasing=True).x
    return SurvivalCurve(
        grid=grid[ok],
        values=1.0 - fitted,
        tau=float(grid[ok][-1]),
        method="nonparametric",
        raw=1.0 - raw_F[ok],
        a_hat=a[ok],
        excluded=excluded,
        meta={"kernel": kernel.to_dict(), "n": data.n, "window": tau, "counts": data.counts()},
    )


# ---------------------------------------------------------------------------
# Kaplan-Meier for the waiting time


def km_waiting_survival(data: Dataset) -> SurvivalCurve:
    """Product-limit estimate of the waiting-time survival.

    The recorded time equals ``W`` for served and silent-leave patients
    (events) and is a lower bound on ``W`` for reported departures
    (censorings). At tied times events are counted before censorings.

    The product ``prod_j (R_j / Y_j)``, with ``Y_j`` at risk and ``R_j`` past
    the j-th event time, is evaluated as
    ``(R_j / Y_1) * prod_{k<j} (1 + C_k / Y_{k+1})`` where ``C_k`` counts the
    censorings between consecutive event times. Without censoring every
    correction factor is exactly 1 and the levels equal the empirical
    survival of ``U``.
    """
    event_mask = data.y == 0
    events = data.u[event_mask]
    u_sorted = np.sort(data.u)
    if events.size == 0:
        return SurvivalCurve(np.array([0.0]), np.array([1.0]), float(u_sorted[-1]), "kaplan-meier")
    times, d = np.unique(events, return_counts=True)
    at_risk = data.n - np.searchsorted(u_sorted, times, side="left")
    past = at_risk - d
    censored_between = past[:-1] - at_risk[1:]
    correction = np.concatenate(([1.0], np.cumprod(1.0 + censored_between / at_risk[1:])))
    values = past / at_risk[0] * correction
    if times[0] > 0:
        times = np.concatenate(([0.0], times))
        values = np.concatenate(([1.0], values))
    return SurvivalCurve(times, values, float(u_sorted[-1]), "kaplan-meier", meta={"n": data.n})
