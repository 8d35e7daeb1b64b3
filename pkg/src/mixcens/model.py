"""Observation model: categories, sub-densities and population identities.

A patient has patience time ``T ~ f`` and (virtual) waiting time ``W ~ g``,
independent. A leaver announces departure with probability ``q(T)``. The
recorded triple is ``(U, delta, Y)`` with ``delta = 1{T < W}`` and
``U = Y*T + (1 - Y)*W``, giving three categories:

1. served (delta=0, Y=0, U=W): T right-censored at W;
2. reported leave (delta=1, Y=1, U=T): T observed;
3. silent leave (delta=1, Y=0, U=W): T left-censored at W.

The functions here evaluate the category sub-densities ``h_i``, their masses,
the reported-abandonment sub-CDF ``A(t) = int_0^t q f`` and the identity that
recovers ``F`` from ``h_1``, ``h_3`` and ``A``. They serve as ground truth for
the estimators.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy import integrate, optimize

from .distributions import DistributionSpec
from .errors import InvalidObservationError, ModelDegeneracyError, QuadratureError

QUAD_TOL = 1e-8
TAIL_SURVIVAL = 1e-12


class Category(enum.IntEnum):
    SERVED = 1
    REPORTED = 2
    SILENT = 3


@dataclass(frozen=True)
class Observation:
    """One recorded triple ``(u, delta, y)``."""

    u: float
    delta: int
    y: int

    def __post_init__(self):
        _check_triple(self.u, self.delta, self.y)
        object.__setattr__(self, "u", float(self.u))
        object.__setattr__(self, "delta", int(self.delta))
        object.__setattr__(self, "y", int(self.y))

    @property
    def category(self) -> Category:
        return classify(self)


def _check_triple(u, delta, y, where=""):
    if delta not in (0, 1) or y not in (0, 1):
        raise InvalidObservationError(f"{where}delta and y must be 0 or 1, got delta={delta!r}, y={y!r}")
    if y == 1 and delta == 0:
        raise InvalidObservationError(
            f"{where}delta=0 with y=1 is impossible: a reported departure implies T < W"
        )
    try:
        u = float(u)
    except (TypeError, ValueError):
        raise InvalidObservationError(f"{where}u must be a number, got {u!r}") from None
    if not np.isfinite(u) or u < 0:
        raise InvalidObservationError(f"{where}u must be finite and nonnegative, got {u!r}")


def classify(obs) -> Category:
    """Map an observation (or a ``(u, delta, y)`` tuple) to its category."""
    if isinstance(obs, Observation):
        delta, y = obs.delta, obs.y
    else:
        u, delta, y = obs
        _check_triple(u, delta, y)
    if delta == 0 and y == 0:
        return Category.SERVED
    if delta == 1 and y == 1:
        return Category.REPORTED
    if delta == 1 and y == 0:
        return Category.SILENT
    raise InvalidObservationError(f"no category for delta={delta}, y={y}")


class Dataset:
    """Column-oriented collection of observations.

    Stores ``u`` as float64 and ``delta``, ``y`` as int8 arrays. The category
    of each row is derived from ``(delta, y)`` on demand.
    """

    __slots__ = ("u", "delta", "y")

    def __init__(self, u, delta, y):
        u = np.array(u, dtype=float).ravel()
        delta_raw = np.asarray(delta).ravel()
        y_raw = np.asarray(y).ravel()
        if not (u.shape == delta_raw.shape == y_raw.shape):
            raise InvalidObservationError("u, delta and y must have equal lengths")
        if u.size < 1:
            raise InvalidObservationError("a dataset needs at least one observation")
        bad_bits = ~np.isin(delta_raw, (0, 1)) | ~np.isin(y_raw, (0, 1))
        if bad_bits.any():
            i = int(np.flatnonzero(bad_bits)[0])
            raise InvalidObservationError(f"row {i}: delta and y must be 0 or 1")
        delta = delta_raw.astype(np.int8)
        y = y_raw.astype(np.int8)
        bad = (y == 1) & (delta == 0)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise InvalidObservationError(f"row {i}: delta=0 with y=1 is impossible")
        bad = ~np.isfinite(u) | (u < 0)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise InvalidObservationError(f"row {i}: u must be finite and nonnegative, got {u[i]!r}")
        u.setflags(write=False)
        delta.setflags(write=False)
        y.setflags(write=False)
        self.u = u
        self.delta = delta
        self.y = y

    @classmethod
    def from_observations(cls, observations: Iterable) -> "Dataset":
        rows = [o if isinstance(o, Observation) else Observation(*o) for o in observations]
        return cls([o.u for o in rows], [o.delta for o in rows], [o.y for o in rows])

    @property
    def n(self) -> int:
        return self.u.size

    def __len__(self):
        return self.u.size

    @property
    def observations(self) -> list:
        return [Observation(u, d, y) for u, d, y in zip(self.u.tolist(), self.delta.tolist(), self.y.tolist())]

    @property
    def categories(self) -> np.ndarray:
        # (0,0)->1, (1,1)->2, (1,0)->3
        return (1 + self.delta * (2 - self.y)).astype(np.int8)

    def counts(self) -> tuple:
        cat = self.categories
        return tuple(int(np.count_nonzero(cat == c)) for c in (1, 2, 3))

    def times(self, category: int) -> np.ndarray:
        return self.u[self.categories == category]

    def take(self, index) -> "Dataset":
        return Dataset(self.u[index], self.delta[index], self.y[index])

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            np.array_equal(self.u, other.u)
            and np.array_equal(self.delta, other.delta)
            and np.array_equal(self.y, other.y)
        )

    def __repr__(self):
        n1, n2, n3 = self.counts()
        return f"Dataset(n={self.n}, served={n1}, reported={n2}, silent={n3})"


# ---------------------------------------------------------------------------
# Reporting policies


@dataclass(frozen=True)
class ReportingPolicy:
    """Announcement probability ``q(t) = pr(Y=1 | T=t)``.

    ``kind`` is one of ``'exp_decay'`` (``exp(-c t)``), ``'exp_rise'``
    (``1 - exp(-c t)``) or ``'constant'`` (``p``).
    """

    kind: str
    param: float

    KINDS = ("exp_decay", "exp_rise", "constant")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown reporting policy {self.kind!r}; expected one of {self.KINDS}")
        p = float(self.param)
        if self.kind == "constant" and not 0.0 <= p <= 1.0:
            raise ValueError(f"constant reporting probability must lie in [0, 1], got {p}")
        if self.kind != "constant" and not (np.isfinite(p) and p >= 0):
            raise ValueError(f"reporting rate must be nonnegative, got {p}")
        object.__setattr__(self, "param", p)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "exp_decay":
            return np.exp(-self.param * t)
        if self.kind == "exp_rise":
            return -np.expm1(-self.param * t)
        return np.full_like(t, self.param)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "param": self.param}


def exp_decay(c: float) -> ReportingPolicy:
    return ReportingPolicy("exp_decay", c)


def exp_rise(c: float) -> ReportingPolicy:
    return ReportingPolicy("exp_rise", c)


def constant(p: float) -> ReportingPolicy:
    return ReportingPolicy("constant", p)


def eval_q(q: Callable, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return np.broadcast_to(np.asarray(q(t), dtype=float), t.shape)


# ---------------------------------------------------------------------------
# Quadrature


def quad(fn, a: float, b: float, *, tol: float = QUAD_TOL, limit: int = 200) -> float:
    """Adaptive Gauss-Kronrod quadrature that raises instead of warning."""
    if b <= a:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, abserr, info, *msg = integrate.quad(fn, a, b, epsabs=tol, epsrel=tol, limit=limit, full_output=1)
    if msg and abserr > 10 * max(tol, tol * abs(value)):
        raise QuadratureError(
            f"quadrature on [{a:g}, {b:g}] did not converge: {msg[0]} (value={value:g}, abserr={abserr:g})",
            value=value,
            abserr=abserr,
            interval=(a, b),
        )
    return value


def tail_cutoff(*dists: DistributionSpec, survival: float = TAIL_SURVIVAL) -> float:
    """Time beyond which every given distribution has survival below ``survival``."""
    return float(max(d.isf(survival) for d in dists))


# ---------------------------------------------------------------------------
# Sub-densities and category probabilities


def _scalar_map(fn, t):
    t_arr = np.asarray(t, dtype=float)
    out = np.array([fn(float(s)) for s in t_arr.ravel()]).reshape(t_arr.shape)
    return out[()] if out.ndim == 0 else out


def report_integral_A(t, f: DistributionSpec, q: Callable):
    """``A(t) = int_0^t q(s) f(s) ds``, the probability of a reported departure by ``t``.

    ``t = inf`` gives the total reporting probability ``pr(Y = 1)``.
    """
    if isinstance(q, ReportingPolicy) and q.kind == "constant":
        t_arr = np.asarray(t, dtype=float)
        out = q.param * f.cdf(t_arr)
        return out[()] if out.ndim == 0 else out
    t_end = tail_cutoff(f)

    def one(s):
        if s <= 0:
            return 0.0
        s_eff = min(s, t_end)
        v = quad(lambda x: float(eval_q(q, x)) * float(f.pdf(x)), 0.0, s_eff)
        return min(max(v, 0.0), float(f.cdf(s)))

    return _scalar_map(one, t)


def _left_mass(t, f, q):
    """``int_0^t (1 - q(x)) f(x) dx``."""
    if isinstance(q, ReportingPolicy) and q.kind == "constant":
        return (1.0 - q.param) * float(f.cdf(t))
    return quad(lambda x: (1.0 - float(eval_q(q, x))) * float(f.pdf(x)), 0.0, min(t, tail_cutoff(f)))


def sub_density_h(i: int, t, f: DistributionSpec, g: DistributionSpec, q: Callable):
    """Sub-density ``h_i(t) = d/dt pr(U <= t, C = i)``.

    h_1 = g Fbar, h_2 = q f Gbar, h_3 = g * int_0^t (1 - q) f.
    """
    i = int(i)
    t_arr = np.asarray(t, dtype=float)
    if i == 1:
        out = g.pdf(t_arr) * f.survival(t_arr)
    elif i == 2:
        out = eval_q(q, t_arr) * f.pdf(t_arr) * g.survival(t_arr)
    elif i == 3:
        out = g.pdf(t_arr) * _scalar_map(lambda s: _left_mass(s, f, q) if s > 0 else 0.0, t_arr)
    else:
        raise ValueError(f"category index must be 1, 2 or 3, got {i}")
    out = np.asarray(out, dtype=float)
    return out[()] if out.ndim == 0 else out


def category_prob(i: int, f: DistributionSpec, g: DistributionSpec, q: Callable) -> float:
    """``pr(C = i) = int_0^inf h_i``.

    Category 3 is integrated in its swapped order,
    ``int_0^inf (1 - q(x)) f(x) Gbar(x) dx``, which avoids a nested quadrature.
    """
    i = int(i)
    end = tail_cutoff(f, g)
    if i == 1:
        return quad(lambda t: float(g.pdf(t) * f.survival(t)), 0.0, end)
    if i == 2:
        return quad(lambda t: float(eval_q(q, t) * f.pdf(t) * g.survival(t)), 0.0, end)
    if i == 3:
        return quad(lambda t: float((1.0 - eval_q(q, t)) * f.pdf(t) * g.survival(t)), 0.0, end)
    raise ValueError(f"category index must be 1, 2 or 3, got {i}")


def category_probs(f, g, q) -> tuple:
    return tuple(category_prob(i, f, g, q) for i in (1, 2, 3))


def conditional_density_r(i: int, t, f: DistributionSpec, g: DistributionSpec, q: Callable, *, prob=None):
    """Density of ``U`` given ``C = i``: ``h_i / pr(C = i)``."""
    p = category_prob(i, f, g, q) if prob is None else prob
    if not p > 0:
        raise ModelDegeneracyError(f"category {i} has zero probability; r_{i} is undefined")
    return sub_density_h(i, t, f, g, q) / p


def plugin_cdf(p1, p3, r1, r3, a):
    """Recover ``F`` from category masses, conditional densities and ``A``.

    ``F = (p3 r3 + p1 r1 A) / (p3 r3 + p1 r1)``. Arguments broadcast; the
    result is NaN where the denominator vanishes.
    """
    p1, p3, r1, r3, a = (np.asarray(x, dtype=float) for x in (p1, p3, r1, r3, a))
    left = p3 * r3
    right = p1 * r1
    den = left + right
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, (left + right * a) / np.where(den > 0, den, 1.0), np.nan)
    return out[()] if out.ndim == 0 else out


def population_F_reconstruct(t, f: DistributionSpec, g: DistributionSpec, q: Callable):
    """Evaluate the reconstruction of ``F(t)`` from population quantities.

    Should agree with ``f.cdf(t)`` up to quadrature error.
    """
    p1 = category_prob(1, f, g, q)
    p3 = category_prob(3, f, g, q)
    r1 = conditional_density_r(1, t, f, g, q, prob=p1)
    r3 = conditional_density_r(3, t, f, g, q, prob=p3)
    return plugin_cdf(p1, p3, r1, r3, report_integral_A(t, f, q))


def population_survival_U(t, f: DistributionSpec, g: DistributionSpec, q: Callable):
    """``pr(U > t) = Gbar(t) (1 - A(t))``."""
    return g.survival(t) * (1.0 - report_integral_A(t, f, q))


def population_median_U(f: DistributionSpec, g: DistributionSpec, q: Callable) -> float:
    hi = tail_cutoff(f, g)
    return optimize.brentq(lambda t: float(population_survival_U(t, f, g, q)) - 0.5, 0.0, hi, xtol=1e-12)

