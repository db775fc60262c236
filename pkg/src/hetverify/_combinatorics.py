"""Binomials and factorials, exact when they fit in 64 bits, log-gamma otherwise."""

import math

from .errors import ParameterError

#: Largest Fock index accepted by the estimator functions.
MAX_INDEX = 64

_INT64_MAX = 2**63 - 1


def check_index(n, name="index", max_index=MAX_INDEX):
    if int(n) != n or n < 0:
        raise ParameterError(f"{name} must be a non-negative integer, got {n!r}")
    if n > max_index:
        raise ParameterError(f"{name}={n} exceeds the combinatorics guard ({max_index})")
    return int(n)


def log_binom(n, k):
    if k < 0 or k > n:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def binom(n, k):
    """Binomial coefficient as a float; exact integer arithmetic when it fits."""
    if k < 0 or k > n:
        return 0.0
    if n <= 66:
        value = math.comb(n, k)
        if value <= _INT64_MAX:
            return float(value)
    return math.exp(log_binom(n, k))


def log_factorial(n):
    return math.lgamma(n + 1)


def sqrt_factorial(n):
    if n <= 20:
        return math.sqrt(math.factorial(n))
    return math.exp(0.5 * log_factorial(n))

