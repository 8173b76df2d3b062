"""Core types and pure math for the county-level renewal model.

The model: on day t, region c reports a Poisson number of new cases whose
mean is R_c(t) times the transfer-adjusted active cases Lambda_c(t), where
R_c(t) is Gamma(a, s) distributed across regions. Marginally the counts are
negative binomial; the Gamma prior is conjugate, so per-region posteriors
are available in closed form.
"""

from __future__ import annotations

import datetime
import math
from dataclasses import dataclass

import numpy as np
from scipy import special


@dataclass(frozen=True)
class GenerationTimePmf:
    """Discrete generation-time distribution w(tau) on integer days.

    ``weights[j]`` is the probability that a secondary infection occurs
    ``support_start + j`` days after the primary's own infection.
    """

    support_start: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        if int(self.support_start) != self.support_start or self.support_start < 1:
            raise ValueError("support_start must be an integer >= 1")
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty 1-d array")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")

    @property
    def support_end(self) -> int:
        """Largest lag (in days) with positive support."""
        return self.support_start + len(self.weights) - 1

    @property
    def days(self) -> np.ndarray:
        return np.arange(self.support_start, self.support_end + 1)

    @property
    def mean(self) -> float:
        return float(np.dot(self.days, self.weights))


def trapezoid_pmf(
    support_start: int, ramp_up_len: int, plateau_len: int, ramp_down_len: int
) -> GenerationTimePmf:
    """Trapezoidal generation-time pmf.

    Weights rise linearly over the ramp-up, sit flat over the plateau, and
    fall linearly (mirroring the ramp-up construction) over the ramp-down,
    then are normalized to sum to 1. ``trapezoid_pmf(1, 3, 4, 3)`` gives
    weights proportional to 1,2,3,4,4,4,4,3,2,1 on days 1-10 (mean 5.5).
    """
    for name, val in (
        ("ramp_up_len", ramp_up_len),
        ("plateau_len", plateau_len),
        ("ramp_down_len", ramp_down_len),
    ):
        if val < 1:
            raise ValueError(f"{name} must be >= 1, got {val}")
    up = np.arange(1, ramp_up_len + 1) / (ramp_up_len + 1)
    flat = np.ones(plateau_len)
    down = np.arange(ramp_down_len, 0, -1) / (ramp_down_len + 1)
    w = np.concatenate([up, flat, down])
    return GenerationTimePmf(support_start, w / w.sum())


@dataclass(frozen=True)
class IncidencePanel:
    """K regions x T days of nonnegative integer case counts."""

    region_ids: tuple
    dates: tuple
    counts: np.ndarray  # shape (K, T), int64

    def __post_init__(self):
        ids = tuple(str(r) for r in self.region_ids)
        dates = tuple(self.dates)
        counts = np.asarray(self.counts)
        if not np.issubdtype(counts.dtype, np.integer):
            if not np.all(counts == np.floor(counts)):
                raise ValueError("counts must be integers")
            counts = counts.astype(np.int64)
        else:
            counts = counts.astype(np.int64)
        counts.flags.writeable = False
        object.__setattr__(self, "region_ids", ids)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "counts", counts)
        if len(set(ids)) != len(ids):
            raise ValueError("region_ids must be unique")
        if len(ids) < 1:
            raise ValueError("need at least one region")
        if counts.shape != (len(ids), len(dates)):
            raise ValueError(
                f"counts shape {counts.shape} does not match "
                f"{len(ids)} regions x {len(dates)} dates"
            )
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        for d0, d1 in zip(dates, dates[1:]):
            if (d1 - d0) != datetime.timedelta(days=1):
                raise ValueError("dates must be consecutive calendar days")

    @property
    def n_regions(self) -> int:
        return len(self.region_ids)

    @property
    def n_days(self) -> int:
        return len(self.dates)


def compute_phi(panel: IncidencePanel, w: GenerationTimePmf, t: int) -> np.ndarray:
    """Expected active cases Phi_c(t) = sum_tau I_c(t - tau) w(tau).

    Lags reaching before the start of the panel contribute zero.
    """
    if t < 0 or t >= panel.n_days:
        raise IndexError(f"day index {t} outside panel of {panel.n_days} days")
    phi = np.zeros(panel.n_regions)
    for tau, wt in zip(w.days, w.weights):
        if t - tau >= 0:
            phi += panel.counts[:, t - tau] * wt
    return phi


def phi_matrix(panel: IncidencePanel, w: GenerationTimePmf) -> np.ndarray:
    """Phi_c(t) for every day of the panel at once, shape (K, T)."""
    K, T = panel.counts.shape
    phi = np.zeros((K, T))
    for tau, wt in zip(w.days, w.weights):
        if tau < T:
            phi[:, tau:] += panel.counts[:, : T - tau] * wt
    return phi


def compute_lambda(phi: np.ndarray, p: float) -> np.ndarray:
    """Transfer-adjusted active cases.

    Lambda_c = (1-p) Phi_c + p/(K-1) * sum_{c' != c} Phi_{c'}. A fraction p
    of each region's active cases is redistributed equally among the other
    regions; total mass is preserved.
    """
    phi = np.asarray(phi, dtype=np.float64)
    K = phi.shape[0]
    if K < 2:
        raise ValueError("transfer redistribution requires at least 2 regions")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"transfer fraction must be in [0, 1], got {p}")
    total = phi.sum()
    return (1.0 - p) * phi + p * (total - phi) / (K - 1)


def naive_r_hat(panel: IncidencePanel, w: GenerationTimePmf, t: int):
    """Country-level ratio estimator I(t) / Phi(t).

    The panel is summed over regions first. Returns None when Phi(t) = 0.
    """
    if t < 0 or t >= panel.n_days:
        raise IndexError(f"day index {t} outside panel of {panel.n_days} days")
    country = panel.counts.sum(axis=0)
    phi = 0.0
    for tau, wt in zip(w.days, w.weights):
        if t - tau >= 0:
            phi += country[t - tau] * wt
    if phi == 0.0:
        return None
    return float(country[t]) / phi


def negbin_logpmf(i: int, a: float, m: float) -> float:
    """Log-pmf of the Gamma-Poisson mixture count with shape a and mean a*m.

    m is the scaled Poisson divisor s * Lambda_c. For m = 0 the count is
    almost surely 0: returns 0.0 for i = 0 and -inf otherwise.
    """
    if i < 0 or int(i) != i:
        raise ValueError(f"count must be a nonnegative integer, got {i}")
    if a <= 0:
        raise ValueError(f"shape must be positive, got {a}")
    if m < 0:
        raise ValueError(f"mean parameter must be nonnegative, got {m}")
    if m == 0.0:
        return 0.0 if i == 0 else -math.inf
    return float(
        special.gammaln(a + i)
        - special.gammaln(a)
        - special.gammaln(i + 1.0)
        + i * math.log(m / (1.0 + m))
        - a * math.log1p(m)
    )


@dataclass(frozen=True)
class GammaPosterior:
    """Gamma(shape, scale) distribution of a region's reproduction number."""

    shape: float
    scale: float

    def __post_init__(self):
        if self.shape <= 0 or self.scale <= 0:
            raise ValueError("shape and scale must be positive")

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @property
    def variance(self) -> float:
        return self.shape * self.scale**2

    def cdf(self, x: float) -> float:
        if x <= 0:
            return 0.0
        return float(special.gammainc(self.shape, x / self.scale))

    def quantile(self, q: float) -> float:
        return gamma_quantile(self, q)


def posterior(a: float, s: float, lambda_c: float, i_c: int) -> GammaPosterior:
    """Conjugate Gamma posterior of R_c given the day's count.

    Prior Gamma(a, s) and Poisson likelihood with divisor lambda_c give
    posterior Gamma(a + i_c, s / (1 + s * lambda_c)).
    """
    if a <= 0 or s <= 0:
        raise ValueError("prior shape and scale must be positive")
    if lambda_c < 0:
        raise ValueError("lambda must be nonnegative")
    if i_c < 0 or int(i_c) != i_c:
        raise ValueError("count must be a nonnegative integer")
    return GammaPosterior(a + i_c, s / (1.0 + s * lambda_c))


def gamma_quantile(post: GammaPosterior, q: float) -> float:
    """Inverse CDF of a Gamma(shape, scale) distribution."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile probability must lie in (0, 1), got {q}")
    return float(special.gammaincinv(post.shape, q)) * post.scale
