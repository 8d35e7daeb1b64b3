"""Exponential and Weibull families for patience and waiting times.

Both families share the survival convention ``S(t) = exp(-(rate * t) ** shape)``
so a Weibull with ``shape=1`` coincides with the Exponential of the same rate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

EXPONENTIAL = "exponential"
WEIBULL = "weibull"
FAMILIES = (EXPONENTIAL, WEIBULL)


@dataclass(frozen=True)
class DistributionSpec:
    """A member of the Exponential or Weibull family.

    Parameters
    ----------
    family : {'exponential', 'weibull'}
    rate : float
        Positive rate, in 1/time units.
    shape : float, optional
        Positive shape. Required for Weibull, must be omitted for Exponential.
    """

    family: str
    rate: float
    shape: Optional[float] = None

    def __post_init__(self):
        family = str(self.family).lower()
        if family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "family", family)
        rate = float(self.rate)
        if not np.isfinite(rate) or rate <= 0:
            raise ValueError(f"rate must be positive and finite, got {self.rate!r}")
        object.__setattr__(self, "rate", rate)
        if family == WEIBULL:
            if self.shape is None:
                raise ValueError("weibull requires a shape parameter")
            shape = float(self.shape)
            if not np.isfinite(shape) or shape <= 0:
                raise ValueError(f"shape must be positive and finite, got {self.shape!r}")
            object.__setattr__(self, "shape", shape)
        elif self.shape is not None:
            raise ValueError("exponential takes no shape parameter")

    # -- parameter vector plumbing used by the likelihood code --------------

    @property
    def k(self) -> float:
        """Effective shape (1 for the Exponential)."""
        return 1.0 if self.shape is None else self.shape

    @property
    def params(self) -> np.ndarray:
        if self.family == EXPONENTIAL:
            return np.array([self.rate])
        return np.array([self.rate, self.shape])

    @staticmethod
    def n_params(family: str) -> int:
        return 1 if family.lower() == EXPONENTIAL else 2

    @classmethod
    def from_params(cls, family: str, params) -> "DistributionSpec":
        params = np.atleast_1d(np.asarray(params, dtype=float))
        if family.lower() == EXPONENTIAL:
            return cls(EXPONENTIAL, params[0])
        return cls(WEIBULL, params[0], params[1])

    # -- evaluation ------------------------------------------------------------

    def _cumhaz(self, t):
        t = np.asarray(t, dtype=float)
        if self.family == EXPONENTIAL:
            return self.rate * t
        return (self.rate * t) ** self.shape

    def survival(self, t):
        return np.exp(-self._cumhaz(t))

    def cdf(self, t):
        return 1.0 - self.survival(t)

    def logsf(self, t):
        return -self._cumhaz(t)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.family == EXPONENTIAL:
            return self.rate * np.exp(-self.rate * t)
        k, lam = self.shape, self.rate
        with np.errstate(divide="ignore", invalid="ignore"):
            return k * lam * (lam * t) ** (k - 1.0) * np.exp(-((lam * t) ** k))

    def logpdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.family == EXPONENTIAL:
            return np.log(self.rate) - self.rate * t
        k, lam = self.shape, self.rate
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.log(k) + np.log(lam) + (k - 1.0) * np.log(lam * t) - (lam * t) ** k
        if k == 1.0:
            out = np.where(t == 0, np.log(k * lam), out)
        return out

    def ppf(self, p):
        """Inverse CDF."""
        p = np.asarray(p, dtype=float)
        return (-np.log1p(-p)) ** (1.0 / self.k) / self.rate

    def isf(self, p):
        """Inverse survival function: the time at which ``survival == p``."""
        p = np.asarray(p, dtype=float)
        return (-np.log(p)) ** (1.0 / self.k) / self.rate

    def mean(self) -> float:
        from math import gamma

        return gamma(1.0 + 1.0 / self.k) / self.rate

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` i.i.d. times by inverting the CDF at ``rng.random(n)``."""
        if n < 1:
            raise ValueError(f"n must be at least 1, got {n}")
        return self.ppf(rng.random(n))

    # -- score functions (derivatives w.r.t. the parameter vector) ----------

    def dlogpdf(self, t) -> np.ndarray:
        """Gradient of ``logpdf`` with respect to ``params``, shape (len(t), p)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        lam = self.rate
        if self.family == EXPONENTIAL:
            return (1.0 / lam - t)[:, None]
        k = self.shape
        z = lam * t
        zk = z**k
        with np.errstate(divide="ignore", invalid="ignore"):
            d_rate = k / lam - k * zk / lam
            d_shape = 1.0 / k + np.log(z) * (1.0 - zk)
        return np.column_stack([d_rate, d_shape])

    def dlogsf(self, t) -> np.ndarray:
        """Gradient of ``logsf`` with respect to ``params``, shape (len(t), p)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        lam = self.rate
        if self.family == EXPONENTIAL:
            return (-t)[:, None]
        k = self.shape
        z = lam * t
        zk = z**k
        with np.errstate(divide="ignore", invalid="ignore"):
            d_shape = np.where(z > 0, -zk * np.log(np.where(z > 0, z, 1.0)), 0.0)
        return np.column_stack([-k * zk / lam, d_shape])

    def describe(self) -> str:
        if self.family == EXPONENTIAL:
            return f"Exp(rate={self.rate:g})"
        return f"Weibull(rate={self.rate:g}, shape={self.shape:g})"

    def to_dict(self) -> dict:
        out = {"family": self.family, "rate": self.rate}
        if self.shape is not None:
            out["shape"] = self.shape
        return out


def exponential(rate: float) -> DistributionSpec:
    return DistributionSpec(EXPONENTIAL, rate)


def weibull(rate: float, shape: float) -> DistributionSpec:
    return DistributionSpec(WEIBULL, rate, shape)
