import math

import numpy as np
import pytest

from countyrt import kernels, negbin_logpmf
from countyrt.kernels import LOGPMF_SENTINEL, negloglik_numpy


def literal_negloglik(counts, phi, a, s, p):
    """Independently coded sum of NB terms (double-implementation oracle)."""
    K = len(phi)
    total = sum(phi)
    nll = 0.0
    for c in range(K):
        lam = (1 - p) * phi[c] + p * (total - phi[c]) / (K - 1)
        m = s * lam
        i = int(counts[c])
        if m == 0:
            nll -= 0.0 if i == 0 else LOGPMF_SENTINEL
        else:
            nll -= (
                math.lgamma(a + i)
                - math.lgamma(a)
                - math.lgamma(i + 1)
                + i * math.log(m / (1 + m))
                - a * math.log1p(m)
            )
    return nll


def random_cases(seed, n=30):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        K = int(rng.integers(2, 12))
        counts = rng.integers(0, 40, size=K).astype(float)
        phi = rng.uniform(0, 50, size=K)
        phi[rng.uniform(size=K) < 0.2] = 0.0
        a = float(rng.uniform(0.1, 30))
        s = float(rng.uniform(0.01, 5))
        p = float(rng.uniform(0, 1))
        yield counts, phi, a, s, p


def test_numpy_matches_literal():
    for counts, phi, a, s, p in random_cases(11):
        assert negloglik_numpy(counts, phi, a, s, p) == pytest.approx(
            literal_negloglik(counts, phi, a, s, p), rel=1e-10, abs=1e-8
        )


def test_active_backend_matches_numpy():
    for counts, phi, a, s, p in random_cases(12):
        assert kernels.day_negloglik(counts, phi, a, s, p) == pytest.approx(
            negloglik_numpy(counts, phi, a, s, p), rel=1e-10, abs=1e-10
        )


@pytest.mark.skipif(kernels.negloglik_jit is None, reason="numba backend unavailable")
def test_jit_matches_numpy():
    for counts, phi, a, s, p in random_cases(13):
        jit_val = kernels.negloglik_jit(
            np.ascontiguousarray(counts), np.ascontiguousarray(phi), a, s, p
        )
        assert jit_val == pytest.approx(
            negloglik_numpy(counts, phi, a, s, p), rel=1e-10, abs=1e-10
        )


def test_matches_public_pmf_sum():
    counts = np.array([3.0, 0.0, 7.0])
    phi = np.array([5.0, 2.0, 9.0])
    a, s, p = 2.5, 0.4, 0.15
    K = 3
    lam = (1 - p) * phi + p * (phi.sum() - phi) / (K - 1)
    expected = -sum(
        negbin_logpmf(int(counts[c]), a, s * lam[c]) for c in range(K)
    )
    assert kernels.day_negloglik(counts, phi, a, s, p) == pytest.approx(expected)


def test_large_shape_stays_accurate():
    # lgamma(a+i) - lgamma(a) = sum log(a+j) exactly; naive subtraction
    # loses ~1e-4 at this scale
    counts = np.array([12.0, 3.0])
    phi = np.array([10.0, 4.0])
    a = 1e9
    s = 1.0 / a
    literal_sum = 0.0
    lam = phi  # p = 0
    for c, i in enumerate(counts.astype(int)):
        m = s * lam[c]
        rising = sum(math.log(a + j) for j in range(i))
        literal_sum -= (
            rising - math.lgamma(i + 1) + i * math.log(m / (1 + m)) - a * math.log1p(m)
        )
    got = kernels.day_negloglik(counts, phi, a, s, 0.0)
    assert got == pytest.approx(literal_sum, rel=1e-12)


def test_zero_phi_all_zero_counts_is_zero():
    assert kernels.day_negloglik(
        np.zeros(4), np.zeros(4), 1.0, 1.0, 0.3
    ) == pytest.approx(0.0)


def test_impossible_observation_uses_sentinel():
    val = kernels.day_negloglik(
        np.array([2.0, 0.0]), np.zeros(2), 1.0, 1.0, 0.0
    )
    assert val == pytest.approx(-LOGPMF_SENTINEL)
