"""Log-domain special functions and the double gamma / double inverse-gamma distributions.

The order-selection machinery scores each candidate subspace dimension by the
probability that a gamma variate (signal-plus-noise energy) dominates an
independent gamma variate (residual energy).  That probability is a regularized
incomplete beta function with integer shapes, which admits a finite
negative-binomial sum; everything here is evaluated in log domain via
log-sum-exp so large degree counts (thousands) never overflow.

Shapes are restricted to positive integers throughout: the finite-sum
identities rely on Gamma(n) = (n-1)!.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

__all__ = [
    "GammaParams",
    "DominancePair",
    "log_gamma",
    "reg_lower_inc_gamma",
    "reg_inc_beta",
    "log_reg_inc_beta",
    "prob_dominance",
    "log_q_sum",
    "double_gamma_pdf",
    "double_invgamma_pdf",
    "double_moment",
    "sample_dominance_pair",
    "dominance_frequency",
]

_MAX_EXACT_FACTORIAL = 20
_FACTORIALS = [math.factorial(i) for i in range(_MAX_EXACT_FACTORIAL + 1)]


@dataclass(frozen=True)
class GammaParams:
    """Integer-shape gamma distribution, density ~ x^(shape-1) exp(-rate*x)."""

    shape: int
    rate: float

    def __post_init__(self):
        if int(self.shape) != self.shape or self.shape < 1:
            raise ValueError(f"shape must be a positive integer, got {self.shape}")
        if not self.rate > 0:
            raise ValueError(f"rate must be positive, got {self.rate}")


@dataclass(frozen=True)
class DominancePair:
    """Two independent (inverse-)gamma variates X, Y conditioned on their order.

    alpha/beta are the integer signal/noise degrees, s_x/s_y the rates.
    q is stored as s_y/(s_x+s_y) and p as 1-q so that p + q == 1 exactly.
    """

    alpha: int
    beta: int
    s_x: float
    s_y: float
    p: float = field(init=False)
    q: float = field(init=False)

    def __post_init__(self):
        if int(self.alpha) != self.alpha or self.alpha < 1:
            raise ValueError(f"alpha must be a positive integer, got {self.alpha}")
        if int(self.beta) != self.beta or self.beta < 1:
            raise ValueError(f"beta must be a positive integer, got {self.beta}")
        if not (self.s_x > 0 and self.s_y > 0):
            raise ValueError("rates s_x, s_y must be positive")
        q = self.s_y / (self.s_x + self.s_y)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", 1.0 - q)


def log_gamma(x):
    """log Gamma(x) for x > 0; exact factorial for integer x <= 20."""
    if not x > 0:
        raise ValueError(f"log_gamma requires x > 0, got {x}")
    if x == int(x) and x <= _MAX_EXACT_FACTORIAL + 1:
        return math.log(_FACTORIALS[int(x) - 1])
    return math.lgamma(x)


def _log_upper_series(n, x):
    """log of Gamma(n,x)/Gamma(n) = log sum_{k=0}^{n-1} x^k e^{-x} / k!."""
    if x == 0:
        return 0.0
    k = np.arange(n)
    return min(float(logsumexp(k * math.log(x) - x - gammaln(k + 1))), 0.0)


def reg_lower_inc_gamma(n, x):
    """Regularized lower incomplete gamma gamma(n,x)/Gamma(n), integer n >= 1.

    Uses the finite series 1 - sum_{k<n} x^k e^{-x}/k!, with the sum taken in
    log domain so large x does not overflow.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if x == 0:
        return 0.0
    return float(-np.expm1(_log_upper_series(int(n), x)))


def log_reg_inc_beta(p, n, m):
    """log I_p(n,m) for positive integer shapes, via the negative-binomial sum.

    I_p(n,m) = sum_{i=0}^{m-1} C(n+i-1, i) p^n (1-p)^i, a sum of positive
    terms, so the log-sum-exp evaluation keeps full relative accuracy even
    when I_p underflows.  Accepts scalar or array p.
    """
    if int(n) != n or n < 1 or int(m) != m or m < 1:
        raise ValueError(f"shapes must be positive integers, got n={n}, m={m}")
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr < 0) or np.any(p_arr > 1):
        raise ValueError("p must lie in [0, 1]")
    n, m = int(n), int(m)
    i = np.arange(m)
    log_coef = gammaln(n + i) - gammaln(i + 1) - gammaln(n)
    # p = 0 or 1 hits log(0) and 0 * -inf in the terms; both endpoints are
    # overwritten with their exact values below
    with np.errstate(divide="ignore", invalid="ignore"):
        log_terms = (
            log_coef
            + n * np.log(p_arr)[..., None]
            + i * np.log1p(-p_arr)[..., None]
        )
    out = logsumexp(log_terms, axis=-1)
    out = np.minimum(out, 0.0)
    # exact endpoints: I_0 = 0, I_1 = 1
    out = np.where(p_arr == 1.0, 0.0, out)
    if out.ndim == 0:
        return float(out)
    return out


def reg_inc_beta(p, n, m):
    """Regularized incomplete beta I_p(n,m) for positive integer shapes."""
    return np.exp(log_reg_inc_beta(p, n, m))


def prob_dominance(pair: DominancePair):
    """Pr[X <= Y] for the independent gamma pair (= Pr[X >= Y] inverse-gamma)."""
    return reg_inc_beta(pair.p, pair.alpha, pair.beta)


def log_q_sum(alpha, beta, q):
    """log of the finite dominance sum used by the order scores.

    Q = sum_{i=0}^{beta-1} Gamma(beta) Gamma(alpha+i) / (i! Gamma(alpha+beta))
        * q^-(beta-i),
    equal to I_p(alpha,beta) / (p * q * B_p(alpha,beta)) wherever the latter
    does not overflow.  alpha == 0 is the empty-subspace convention: Q = 1.
    """
    if int(alpha) != alpha or alpha < 0 or int(beta) != beta or beta < 1:
        raise ValueError(f"bad degrees alpha={alpha}, beta={beta}")
    if alpha == 0:
        return 0.0
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    alpha, beta = int(alpha), int(beta)
    i = np.arange(beta)
    log_terms = (
        gammaln(beta)
        + gammaln(alpha + i)
        - gammaln(i + 1)
        - gammaln(alpha + beta)
        - (beta - i) * math.log(q)
    )
    return float(logsumexp(log_terms))


def _log_gamma_pdf(x, n, s):
    return n * math.log(s) + (n - 1) * math.log(x) - s * x - gammaln(n)


def _log_invgamma_pdf(x, n, s):
    return n * math.log(s) - (n + 1) * math.log(x) - s / x - gammaln(n)


def _log_lower_series(n, x):
    """log of gamma(n,x)/Gamma(n)."""
    if x == 0:
        return -math.inf
    val = -np.expm1(_log_upper_series(n, x))
    if val <= 0:
        return -math.inf
    return float(np.log(val))


def double_gamma_pdf(x, pair: DominancePair, which):
    """Density of one member of a gamma pair (X, Y) conditioned on X <= Y.

    which='lower' is the marginal of X (the dominated variate),
    which='upper' the marginal of Y.
    """
    if not x > 0:
        raise ValueError(f"x must be positive, got {x}")
    a, b, sx, sy = pair.alpha, pair.beta, pair.s_x, pair.s_y
    log_ip = log_reg_inc_beta(pair.p, a, b)
    if which == "lower":
        log_pdf = _log_upper_series(b, sy * x) + _log_gamma_pdf(x, a, sx) - log_ip
    elif which == "upper":
        log_pdf = _log_lower_series(a, sx * x) + _log_gamma_pdf(x, b, sy) - log_ip
    else:
        raise ValueError(f"which must be 'lower' or 'upper', got {which!r}")
    return math.exp(log_pdf) if log_pdf > -745 else 0.0


def double_invgamma_pdf(x, pair: DominancePair, which):
    """Density of one member of an inverse-gamma pair (X, Y) given X >= Y.

    which='upper' is the marginal of X (the dominating variate),
    which='lower' the marginal of Y.  Mirror of double_gamma_pdf under
    x -> 1/x.
    """
    if not x > 0:
        raise ValueError(f"x must be positive, got {x}")
    a, b, sx, sy = pair.alpha, pair.beta, pair.s_x, pair.s_y
    log_ip = log_reg_inc_beta(pair.p, a, b)
    if which == "upper":
        log_pdf = _log_upper_series(b, sy / x) + _log_invgamma_pdf(x, a, sx) - log_ip
    elif which == "lower":
        log_pdf = _log_lower_series(a, sx / x) + _log_invgamma_pdf(x, b, sy) - log_ip
    else:
        raise ValueError(f"which must be 'upper' or 'lower', got {which!r}")
    return math.exp(log_pdf) if log_pdf > -745 else 0.0


def double_moment(pair: DominancePair, k, family, which):
    """Closed-form k-th moment of the double (inverse-)gamma marginals.

    All four moments are a plain (inverse-)gamma moment times a ratio of
    incomplete beta values with a shifted shape.  Inverse-gamma moments
    require shape - k >= 1.
    """
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    a, b, sx, sy = pair.alpha, pair.beta, pair.s_x, pair.s_y
    k = int(k)
    log_ip = log_reg_inc_beta(pair.p, a, b)
    if family == "gamma":
        if which == "x":
            log_m = (
                gammaln(a + k) - gammaln(a) - k * math.log(sx)
                + log_reg_inc_beta(pair.p, a + k, b) - log_ip
            )
        elif which == "y":
            log_m = (
                gammaln(b + k) - gammaln(b) - k * math.log(sy)
                + log_reg_inc_beta(pair.p, a, b + k) - log_ip
            )
        else:
            raise ValueError(f"which must be 'x' or 'y', got {which!r}")
    elif family == "invgamma":
        if which == "x":
            if a - k < 1:
                raise ValueError(f"alpha - k must be >= 1, got alpha={a}, k={k}")
            log_m = (
                gammaln(a - k) - gammaln(a) + k * math.log(sx)
                + log_reg_inc_beta(pair.p, a - k, b) - log_ip
            )
        elif which == "y":
            if b - k < 1:
                raise ValueError(f"beta - k must be >= 1, got beta={b}, k={k}")
            log_m = (
                gammaln(b - k) - gammaln(b) + k * math.log(sy)
                + log_reg_inc_beta(pair.p, a, b - k) - log_ip
            )
        else:
            raise ValueError(f"which must be 'x' or 'y', got {which!r}")
    else:
        raise ValueError(f"family must be 'gamma' or 'invgamma', got {family!r}")
    return float(np.exp(log_m))


def sample_dominance_pair(params_x: GammaParams, params_y: GammaParams, rng):
    """One draw of the independent pair (X, Y) plus the indicator X <= Y."""
    x = rng.gamma(params_x.shape, 1.0 / params_x.rate)
    y = rng.gamma(params_y.shape, 1.0 / params_y.rate)
    return x, y, bool(x <= y)


def dominance_frequency(params_x: GammaParams, params_y: GammaParams, n, rng):
    """Empirical Pr[X <= Y] over n independent draws (Monte Carlo oracle)."""
    x = rng.gamma(params_x.shape, 1.0 / params_x.rate, size=n)
    y = rng.gamma(params_y.shape, 1.0 / params_y.rate, size=n)
    return float(np.mean(x <= y))
