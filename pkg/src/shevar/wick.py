"""Moments of centered multivariate Gaussians by pairing expansion.

``gaussian_moment`` sums over all perfect matchings of the index multiset,
so its cost grows like the double factorial of the total degree; degrees up
to ~16 are fine, beyond that use Monte Carlo.  ``pair_moment_coeffs`` gives
the classic closed form for ``E[X^p Y^q]`` of a correlated standard-normal
pair as a polynomial in the correlation, which vectorises over many lags.
"""

from __future__ import annotations

import math

import numpy as np

MAX_DEGREE = 20


def gaussian_moment(cov: np.ndarray, indices) -> float:
    """``E[X_{i_1} ... X_{i_m}]`` for ``X ~ N(0, cov)``.

    ``indices`` is a sequence of variable indices, repeats allowed.  Odd
    degree gives 0.  Exact (up to rounding) for any covariance matrix.
    """
    idx = tuple(sorted(indices))
    if len(idx) % 2 == 1:
        return 0.0
    if len(idx) > MAX_DEGREE:
        raise ValueError(f"moment degree {len(idx)} exceeds MAX_DEGREE={MAX_DEGREE}")
    cov = np.asarray(cov, dtype=float)
    cache: dict[tuple, float] = {}

    def rec(rest: tuple) -> float:
        if not rest:
            return 1.0
        val = cache.get(rest)
        if val is not None:
            return val
        first, tail = rest[0], rest[1:]
        total = 0.0
        for j in range(len(tail)):
            c = cov[first, tail[j]]
            if c != 0.0:
                total += c * rec(tail[:j] + tail[j + 1:])
        cache[rest] = total
        return total

    return rec(idx)


def monomial_moment(cov: np.ndarray, exponents) -> float:
    """``E[prod_i X_i^{e_i}]`` for ``X ~ N(0, cov)`` with integer exponents."""
    idx = []
    for i, e in enumerate(exponents):
        if e != int(e) or e < 0:
            raise ValueError("exponents must be nonnegative integers")
        idx.extend([i] * int(e))
    return gaussian_moment(cov, idx)


def pair_moment_coeffs(p: int, q: int) -> np.ndarray:
    """Coefficients ``a_j`` with ``E[X^p Y^q] = sum_j a_j c^j`` for standard
    normal (X, Y) with correlation c.

    ``a_j = p! q! / (j! ((p-j)/2)! ((q-j)/2)! 2^((p+q-2j)/2))`` when ``p - j``
    and ``q - j`` are both even and nonnegative, else 0.
    """
    coeffs = np.zeros(min(p, q) + 1)
    for j in range(min(p, q) + 1):
        if (p - j) % 2 or (q - j) % 2:
            continue
        coeffs[j] = (
            math.factorial(p) * math.factorial(q)
            / (math.factorial(j)
               * math.factorial((p - j) // 2)
               * math.factorial((q - j) // 2)
               * 2.0 ** ((p + q - 2 * j) / 2))
        )
    return coeffs
