"""Two-stage parametric estimation.

Stage one maximizes the part of the full log-likelihood that involves the
waiting-time parameters ``gamma``. That part does not depend on the
patience-time parameters ``theta`` or on the reporting function ``q``::

    sum_{Y=0} log g(U; gamma) + sum_{Y=1} log Gbar(U; gamma)

Stage two maximizes the likelihood of the served patients conditional on
being served, with ``gamma`` fixed at its estimate::

    sum_{C=1} [log g(U; gamma) + log Fbar(U; theta) - log Z(theta, gamma)],
    Z(theta, gamma) = int_0^inf g(s; gamma) Fbar(s; theta) ds.

Neither stage needs ``q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .distributions import EXPONENTIAL, FAMILIES, DistributionSpec
from .errors import EstimationError, InsufficientDataError, MixcensError
from .model import Dataset, eval_q, quad, tail_cutoff

PARAM_FLOOR = 1e-8
SIMPLEX_XATOL = 1e-8
SIMPLEX_MAXITER = 2000
NORMALIZER_TOL = 1e-10
START_SCALES = (0.5, 1.0, 2.0)


def _check_family(family: str) -> str:
    family = family.lower()
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    return family


def _sum_or_neg_inf(terms) -> float:
    # fsum is exactly rounded, so the value does not depend on row order
    terms = np.asarray(terms, dtype=float)
    if not np.all(np.isfinite(terms)):
        return -np.inf
    return math.fsum(terms.tolist())


# ---------------------------------------------------------------------------
# Log-likelihoods


def full_loglik_gamma(data: Dataset, g: DistributionSpec) -> float:
    """Waiting-time part of the full log-likelihood; ``-inf`` off the support."""
    reported = data.y == 1
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.concatenate([g.logpdf(data.u[~reported]), g.logsf(data.u[reported])])
    return _sum_or_neg_inf(terms)


def full_loglik(data: Dataset, f: DistributionSpec, g: DistributionSpec, q: Callable) -> float:
    """Complete log-likelihood including the ``theta`` and ``q`` terms.

    Slow (one quadrature per silent-leave observation); used to check that
    the ``gamma`` maximizer does not move with ``theta``.
    """
    cat = data.categories
    u = data.u
    with np.errstate(divide="ignore", invalid="ignore"):
        total = full_loglik_gamma(data, g)
        total += _sum_or_neg_inf(f.logsf(u[cat == 1]))
        u2 = u[cat == 2]
        total += _sum_or_neg_inf(np.log(eval_q(q, u2)) + f.logpdf(u2))
        end = tail_cutoff(f)
        for s in u[cat == 3]:
            mass = quad(lambda x: (1.0 - float(eval_q(q, x))) * float(f.pdf(x)), 0.0, min(float(s), end))
            total += np.log(mass) if mass > 0 else -np.inf
    return -np.inf if np.isnan(total) else total


def partial_normalizer(f: DistributionSpec, g: DistributionSpec) -> float:
    """``Z = int_0^inf g Fbar = pr(W <= T)``; closed form for two exponentials."""
    if f.family == EXPONENTIAL and g.family == EXPONENTIAL:
        return g.rate / (g.rate + f.rate)
    return quad(lambda s: float(g.pdf(s) * f.survival(s)), 0.0, tail_cutoff(f, g), tol=NORMALIZER_TOL)


def partial_loglik_theta(data: Dataset, f: DistributionSpec, g: DistributionSpec) -> float:
    """Log-likelihood of the served patients conditional on being served."""
    served = data.u[data.categories == 1]
    if served.size == 0:
        raise InsufficientDataError("no served observations (category 1); partial likelihood is empty", category=1)
    z = partial_normalizer(f, g)
    if not z > 0:
        return -np.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = g.logpdf(served) + f.logsf(served)
    return _sum_or_neg_inf(terms) - served.size * np.log(z)


# ---------------------------------------------------------------------------
# Simplex search over log-parameters


@dataclass
class SimplexResult:
    params: np.ndarray
    value: float
    converged: bool
    iterations: int
    trace: list = field(default_factory=list)


def _maximize_log_params(objective: Callable, start: np.ndarray) -> SimplexResult:
    """Maximize ``objective(params)`` by Nelder-Mead on ``log(params)``.

    Runs from each of ``START_SCALES * start`` and keeps the best converged
    run. Stops when the simplex diameter in log space drops below
    ``SIMPLEX_XATOL``, i.e. a relative tolerance on the parameters.
    """
    lower = np.full(start.size, np.log(PARAM_FLOOR))

    def neg(z):
        v = objective(np.exp(z))
        return np.inf if not np.isfinite(v) else -v

    trace = []
    best = None
    total_iter = 0
    for scale in START_SCALES:
        z0 = np.maximum(np.log(start * scale), lower)
        res = optimize.minimize(
            neg,
            z0,
            method="Nelder-Mead",
            bounds=[(lo, None) for lo in lower],
            options={"xatol": SIMPLEX_XATOL, "fatol": np.inf, "maxiter": SIMPLEX_MAXITER * start.size},
        )
        total_iter += int(res.nit)
        trace.append({"start": np.exp(z0).tolist(), "params": np.exp(res.x).tolist(), "value": -float(res.fun),
                      "converged": bool(res.success), "iterations": int(res.nit)})
        if res.success and np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise EstimationError("simplex search did not converge from any start", diagnostics={"trace": trace})
    return SimplexResult(np.exp(best.x), -float(best.fun), True, total_iter, trace)


# ---------------------------------------------------------------------------
# Stage one: waiting time


@dataclass
class GammaFit:
    spec: DistributionSpec
    loglik: float
    stderr: Optional[np.ndarray]
    converged: bool
    iterations: int
    method: str


def _gamma_closed_form(data: Dataset) -> float:
    total = float(np.sum(data.u))
    count = int(np.count_nonzero(data.y == 0))
    if total <= 0:
        raise EstimationError("all recorded times are zero; the waiting-time rate is unidentified")
    if count == 0:
        raise EstimationError("every observation is a reported departure; no waiting-time density term")
    return count / total


def mle_gamma(data: Dataset, family: str = EXPONENTIAL, method: str = "auto", stderr: bool = True) -> GammaFit:
    """Maximum likelihood estimate of the waiting-time distribution.

    ``method='auto'`` uses the closed form ``#{Y=0} / sum(U)`` for the
    Exponential and the simplex search otherwise; ``'simplex'`` forces the
    numerical path.
    """
    family = _check_family(family)
    if method not in ("auto", "closed_form", "simplex"):
        raise ValueError(f"unknown method {method!r}")
    if method == "closed_form" and family != EXPONENTIAL:
        raise ValueError("closed form is only available for the exponential family")
    if family == EXPONENTIAL and method in ("auto", "closed_form"):
        spec = DistributionSpec(EXPONENTIAL, _gamma_closed_form(data))
        fit = GammaFit(spec, full_loglik_gamma(data, spec), None, True, 0, "closed_form")
    else:
        if np.sum(data.u) <= 0 or not np.any(data.y == 0):
            raise EstimationError("degenerate data: no waiting-time density term or all times zero")
        start = np.ones(DistributionSpec.n_params(family))
        start[0] = 1.0 / float(np.mean(data.u))
        res = _maximize_log_params(lambda p: full_loglik_gamma(data, DistributionSpec.from_params(family, p)), start)
        spec = DistributionSpec.from_params(family, res.params)
        fit = GammaFit(spec, res.value, None, res.converged, res.iterations, "simplex")
    if stderr:
        fit.stderr = gamma_sandwich_stderr(data, fit.spec)
    return fit


def gamma_score(data: Dataset, g: DistributionSpec) -> np.ndarray:
    """Per-observation score of the waiting-time log-likelihood, shape (n, p)."""
    reported = (data.y == 1)[:, None]
    return np.where(reported, g.dlogsf(data.u), g.dlogpdf(data.u))


def gamma_sandwich_cov(data: Dataset, g: DistributionSpec) -> np.ndarray:
    """Sandwich covariance ``A^-1 B A^-1 / n`` of the waiting-time estimate.

    ``A`` is the mean score derivative (analytic for the Exponential, central
    differences otherwise) and ``B`` the mean outer product of scores.
    """
    psi = gamma_score(data, g)
    n = data.n
    outer = psi.T @ psi / n
    if g.family == EXPONENTIAL:
        slope = np.array([[-np.count_nonzero(data.y == 0) / n / g.rate**2]])
    else:
        p0 = g.params
        slope = np.empty((p0.size, p0.size))
        for j in range(p0.size):
            h = 1e-5 * p0[j]
            up, down = p0.copy(), p0.copy()
            up[j] += h
            down[j] -= h
            s_up = gamma_score(data, DistributionSpec.from_params(g.family, up)).mean(axis=0)
            s_down = gamma_score(data, DistributionSpec.from_params(g.family, down)).mean(axis=0)
            slope[:, j] = (s_up - s_down) / (2 * h)
        slope = 0.5 * (slope + slope.T)
    inv = np.linalg.inv(slope)
    return inv @ outer @ inv / n


def gamma_sandwich_stderr(data: Dataset, g: DistributionSpec) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        return np.sqrt(np.diag(gamma_sandwich_cov(data, g)))


# ---------------------------------------------------------------------------
# Stage two: patience time


@dataclass
class ThetaFit:
    spec: DistributionSpec
    loglik: float
    converged: bool
    iterations: int
    at_boundary: bool
    method: str
    trace: list = field(default_factory=list)


def theta_closed_form(data: Dataset, g: DistributionSpec) -> float:
    """Exponential/Exponential maximizer ``n1 / sum_{C=1} U - gamma`` (may be <= 0)."""
    served = data.u[data.categories == 1]
    if served.size == 0:
        raise InsufficientDataError("no served observations (category 1)", category=1)
    return served.size / float(np.sum(served)) - g.rate


def _theta_start(data: Dataset, g: DistributionSpec, family: str) -> np.ndarray:
    # competing-exponentials moment match: pr(C=1) = gamma / (gamma + theta)
    p1 = np.count_nonzero(data.categories == 1) / data.n
    theta0 = g.rate * (1.0 - p1) / p1 if p1 < 1 else 0.0
    start = np.ones(DistributionSpec.n_params(family))
    start[0] = max(theta0, 1e-3 * g.rate)
    return start


def mle_theta_partial(data: Dataset, family: str, g: DistributionSpec, method: str = "simplex") -> ThetaFit:
    """Maximize the served-patient partial likelihood over ``theta`` with ``g`` fixed.

    ``method='closed_form'`` is available when both families are Exponential.
    A maximizer at the positivity floor is returned with ``at_boundary=True``.
    """
    family = _check_family(family)
    if method == "closed_form":
        if family != EXPONENTIAL or g.family != EXPONENTIAL:
            raise ValueError("closed form requires exponential patience and waiting times")
        theta = theta_closed_form(data, g)
        at_boundary = theta <= PARAM_FLOOR
        spec = DistributionSpec(EXPONENTIAL, max(theta, PARAM_FLOOR))
        return ThetaFit(spec, partial_loglik_theta(data, spec, g), True, 0, at_boundary, "closed_form")
    if method != "simplex":
        raise ValueError(f"unknown method {method!r}")
    if not np.any(data.categories == 1):
        raise InsufficientDataError("no served observations (category 1)", category=1)
    res = _maximize_log_params(
        lambda p: partial_loglik_theta(data, DistributionSpec.from_params(family, p), g),
        _theta_start(data, g, family),
    )
    spec = DistributionSpec.from_params(family, res.params)
    at_boundary = bool(np.any(res.params <= PARAM_FLOOR * (1 + 1e-6)))
    return ThetaFit(spec, res.value, res.converged, res.iterations, at_boundary, "simplex", res.trace)


# ---------------------------------------------------------------------------
# Combined fit


@dataclass
class FitResult:
    f_family: str
    g_family: str
    gamma_hat: np.ndarray
    theta_hat: np.ndarray
    loglik_full: float
    loglik_partial: float
    converged: dict
    iterations: dict
    gamma_stderr: Optional[np.ndarray] = None
    at_boundary: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def g_spec(self) -> DistributionSpec:
        return DistributionSpec.from_params(self.g_family, self.gamma_hat)

    @property
    def f_spec(self) -> DistributionSpec:
        return DistributionSpec.from_params(self.f_family, self.theta_hat)

    def survival(self, t):
        """Fitted patience-time survival."""
        return self.f_spec.survival(t)

    def to_dict(self) -> dict:
        return {
            "method": "parametric",
            "f_family": self.f_family,
            "g_family": self.g_family,
            "gamma_hat": self.gamma_hat.tolist(),
            "theta_hat": self.theta_hat.tolist(),
            "gamma_stderr": None if self.gamma_stderr is None else self.gamma_stderr.tolist(),
            "loglik_full": self.loglik_full,
            "loglik_partial": self.loglik_partial,
            "converged": dict(self.converged),
            "iterations": dict(self.iterations),
            "at_boundary": self.at_boundary,
        }


def fit_parametric(
    data: Dataset,
    f_family: str = EXPONENTIAL,
    g_family: str = EXPONENTIAL,
    *,
    gamma_method: str = "auto",
    theta_method: str = "simplex",
    stderr: bool = True,
) -> FitResult:
    """Run both stages and collect the estimates."""
    gfit = mle_gamma(data, g_family, method=gamma_method, stderr=stderr)
    tfit = mle_theta_partial(data, f_family, gfit.spec, method=theta_method)
    return FitResult(
        f_family=_check_family(f_family),
        g_family=gfit.spec.family,
        gamma_hat=gfit.spec.params,
        theta_hat=tfit.spec.params,
        loglik_full=gfit.loglik,
        loglik_partial=tfit.loglik,
        converged={"gamma": gfit.converged, "theta": tfit.converged},
        iterations={"gamma": gfit.iterations, "theta": tfit.iterations},
        gamma_stderr=gfit.stderr,
        at_boundary=tfit.at_boundary,
        diagnostics={"gamma_method": gfit.method, "theta_method": tfit.method, "theta_trace": tfit.trace},
    )


# ---------------------------------------------------------------------------
# Bootstrap


@dataclass
class BootstrapCI:
    lower: np.ndarray
    upper: np.ndarray
    level: float
    estimates: np.ndarray
    failures: int


def bootstrap_theta_ci(
    data: Dataset,
    f_family: str = EXPONENTIAL,
    g_family: str = EXPONENTIAL,
    B: int = 200,
    level: float = 0.95,
    seed: int = 0,
    *,
    theta_method: str = "simplex",
) -> BootstrapCI:
    """Percentile bootstrap interval for ``theta`` resampling observations."""
    if B < 100:
        raise ValueError(f"need at least 100 resamples, got {B}")
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    fit_parametric(data, f_family, g_family, theta_method=theta_method, stderr=False)
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    estimates = []
    failures = 0
    for _ in range(B):
        idx = rng.integers(0, data.n, data.n)
        try:
            fit = fit_parametric(data.take(idx), f_family, g_family, theta_method=theta_method, stderr=False)
        except MixcensError:
            failures += 1
            continue
        estimates.append(fit.theta_hat)
    if failures > 0.05 * B:
        raise EstimationError(f"{failures} of {B} bootstrap resamples failed", diagnostics={"failures": failures})
    est = np.array(estimates)
    alpha = 1.0 - level
    lower, upper = np.quantile(est, [alpha / 2, 1 - alpha / 2], axis=0)
    return BootstrapCI(lower, upper, level, est, failures)
