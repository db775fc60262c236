"""Heterodyne estimators of Fock-basis density-matrix elements.

The functions here map a heterodyne outcome ``z`` to a real or complex number
whose expectation under the Husimi Q function of a state ``rho`` is (up to a
controlled bias) the matrix element ``rho[k, l]``:

* :func:`laguerre2d` -- the normalised two-dimensional Laguerre polynomials,
* :func:`f_kl` -- the damped single-term estimators,
* :func:`g_kl` -- the order-``p`` estimators whose bias is ``O(eta**p)``,
* :func:`g_core` -- the fidelity estimator for a core state.

All functions accept scalar or array ``z`` and broadcast over it.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._combinatorics import MAX_INDEX, binom, check_index, log_binom
from .errors import NumericalError, ParameterError, ValidationError

NORM_TOL = 1e-10


@dataclass(frozen=True)
class EstimatorConfig:
    """Order ``p`` and damping ``eta`` of the heterodyne estimators."""

    p: int
    eta: float

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ParameterError(f"estimator order p must be a positive integer, got {self.p!r}")
        if not 0.0 < self.eta < 1.0:
            raise ParameterError(f"eta must lie in (0, 1), got {self.eta!r}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "eta", float(self.eta))


@dataclass(frozen=True)
class EstimatorConstants:
    """State-dependent constants entering the sample-size formulas.

    Attributes
    ----------
    a : float
        Bias prefactor, ``(sum_n |c_n| sqrt(binom(n+p, n)))**2``.
    b : float
        Range prefactor of ``eta**c * g_C`` at the configured ``eta``.
    k_big : float
        Exponent denominator of the i.i.d. failure probability.
    eta_max : float
        Largest admissible ``eta`` for the requested precision.
    g_cp : float
        Constant of the non-i.i.d. Hoeffding term.
    """

    a: float
    b: float
    k_big: float
    eta_max: float
    g_cp: float


def _check_eta(eta):
    if not 0.0 < eta < 1.0:
        raise ParameterError(f"eta must lie in (0, 1), got {eta!r}")


def _coefficients(state):
    coeffs = getattr(state, "coefficients", state)
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    if coeffs.ndim != 1 or coeffs.size == 0:
        raise ValidationError("core state needs a non-empty 1-d coefficient vector")
    norm = float(np.sum(np.abs(coeffs) ** 2))
    if abs(norm - 1.0) > NORM_TOL:
        raise ValidationError(f"core state is not normalised (norm^2 = {norm!r})")
    return coeffs


def _finite(value, what):
    if not np.all(np.isfinite(value)):
        raise NumericalError(f"non-finite value while evaluating {what}")
    return value


def _laguerre_coefficient(k, l, p):
    # sqrt(k! l!) (-1)^p / (p! (k-p)! (l-p)!)
    if max(k, l) <= 20:
        mag = math.sqrt(math.factorial(k) * math.factorial(l)) / (
            math.factorial(p) * math.factorial(k - p) * math.factorial(l - p)
        )
    else:
        mag = math.exp(
            0.5 * (math.lgamma(k + 1) + math.lgamma(l + 1))
            - math.lgamma(p + 1)
            - math.lgamma(k - p + 1)
            - math.lgamma(l - p + 1)
        )
    return -mag if p % 2 else mag


def _powers(z, n):
    out = [np.ones_like(z)]
    for _ in range(n):
        out.append(out[-1] * z)
    return out


def laguerre2d(k, l, z):
    """Normalised 2D Laguerre polynomial ``L_{k,l}(z)``.

    ``L_{k,l}(z) = sum_p sqrt(k! l!) (-1)^p / (p! (k-p)! (l-p)!) z^(l-p) conj(z)^(k-p)``
    """
    k = check_index(k, "k")
    l = check_index(l, "l")
    z = np.asarray(z, dtype=complex)
    zp = _powers(z, l)
    zcp = _powers(np.conj(z), k)
    out = np.zeros_like(z)
    for p in range(min(k, l) + 1):
        out = out + _laguerre_coefficient(k, l, p) * zp[l - p] * zcp[k - p]
    return out[()] if out.ndim == 0 else out


def f_kl(k, l, z, eta):
    """Single-term estimator of ``rho[k, l]`` with damping ``eta``."""
    _check_eta(eta)
    z = np.asarray(z, dtype=complex)
    x = z.real**2 + z.imag**2
    prefactor = eta ** (-1.0 - 0.5 * (k + l))
    value = prefactor * np.exp((1.0 - 1.0 / eta) * x) * laguerre2d(l, k, z / math.sqrt(eta))
    return _finite(value, f"f_{k},{l}")


def g_kl(k, l, z, cfg):
    """Order-``p`` estimator of ``rho[k, l]``; equals :func:`f_kl` for ``p == 1``."""
    k = check_index(k, "k")
    l = check_index(l, "l")
    check_index(max(k, l) + cfg.p - 1, "k + p - 1")
    eta = cfg.eta
    total = 0.0
    for j in range(cfg.p):
        weight = (-eta) ** j * math.sqrt(binom(k + j, k) * binom(l + j, l))
        total = total + weight * f_kl(k + j, l + j, z, eta)
    return _finite(total, f"g_{k},{l}")


def g_core(state, cfg, z):
    """Fidelity estimator for the core state ``state`` at outcome(s) ``z``.

    The sum over matrix elements is Hermitian, so the result is real; a
    non-negligible imaginary part raises :class:`NumericalError`.
    """
    coeffs = _coefficients(state)
    z = np.asarray(z, dtype=complex)
    total = np.zeros_like(z)
    for k, ck in enumerate(coeffs):
        if ck == 0:
            continue
        for l, cl in enumerate(coeffs):
            if cl == 0:
                continue
            total = total + np.conj(ck) * cl * g_kl(k, l, z, cfg)
    real = total.real
    if np.any(np.abs(total.imag) >= 1e-10 * (1.0 + np.abs(real))):
        raise NumericalError("fidelity estimator has a non-vanishing imaginary part")
    return real[()] if real.ndim == 0 else real


def _bias_term_log(k, l, p, eta, q):
    return q * math.log(eta) + log_binom(q - 1, p - 1) + 0.5 * (log_binom(k + q, k) + log_binom(l + q, l))


def _bias_ratio(k, l, p, q):
    return (q - p + 1) * (q + 1) / (q * math.sqrt((k + q + 1) * (l + q + 1)))


def first_dominant_order(k, l, cfg, max_steps=10**7):
    """Smallest ``q0 >= p`` from which the bias series terms stop increasing."""
    q = cfg.p
    while cfg.eta > _bias_ratio(k, l, cfg.p, q):
        q += 1
        if q - cfg.p > max_steps:
            raise NumericalError("bias-bound search did not terminate")
    return q


def bias_bound(k, l, cfg):
    """Worst-case ``|E[g_kl] - rho_kl|`` over all states.

    Inside the regime ``eta <= (p+1) / (p sqrt((k+p+1)(l+p+1)))`` this is
    ``eta**p sqrt(binom(k+p, k) binom(l+p, l))``; above it the maximising
    order ``q0`` is located by incrementing ``q``.
    """
    k = check_index(k, "k")
    l = check_index(l, "l")
    q0 = first_dominant_order(k, l, cfg)
    return math.exp(_bias_term_log(k, l, cfg.p, cfg.eta, q0))


def closed_form_regime_eta(k, l, p):
    """Largest ``eta`` for which the closed-form bias bound applies."""
    return (p + 1) / (p * math.sqrt((k + p + 1) * (l + p + 1)))


def range_bound(k, l, cfg):
    """Analytic upper bound on ``sup_z |g_kl(z)|``."""
    k = check_index(k, "k")
    l = check_index(l, "l")
    hi, lo = max(k, l), min(k, l)
    log_value = (
        -(1.0 + 0.5 * (k + l)) * math.log(cfg.eta)
        + log_binom(hi + cfg.p, cfg.p - 1)
        + 0.5 * (abs(l - k) * math.log(2.0) + log_binom(hi, lo))
    )
    return math.exp(log_value)


def b_constant(state, cfg, eta=None):
    """Range prefactor ``B_C^(p)(eta)`` so that ``|g_C| <= B / eta**c``."""
    coeffs = _coefficients(state)
    eta = cfg.eta if eta is None else eta
    c, p = coeffs.size, cfg.p
    total = 0.0
    for k in range(c):
        for l in range(c):
            weight = abs(coeffs[k] * coeffs[l])
            if weight == 0:
                continue
            hi, lo = max(k, l), min(k, l)
            total += weight * math.exp(
                (c - 1 - 0.5 * (k + l)) * math.log(eta)
                + log_binom(hi + p, p - 1)
                + 0.5 * (abs(l - k) * math.log(2.0) + log_binom(hi, lo))
            )
    return total


def a_constant(state, p):
    coeffs = _coefficients(state)
    return sum(abs(cn) * math.sqrt(binom(n + p, n)) for n, cn in enumerate(coeffs)) ** 2


def max_admissible_eta(state, p, epsilon):
    """Admissible damping cap for precision ``epsilon`` (single copy)."""
    coeffs = _coefficients(state)
    c = coeffs.size
    a = a_constant(coeffs, p)
    return min((c * epsilon / ((c + p) * a)) ** (1.0 / p), (p + 1) / (p * (p + c)))


def constants_for(state, cfg, epsilon, m_copies=1):
    """Evaluate all sample-size constants for ``state`` and ``cfg``.

    ``epsilon`` is the precision on the ``m_copies``-fold fidelity, so the
    admissible ``eta`` and the non-i.i.d. constant use ``epsilon / m_copies``.
    """
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon!r}")
    if int(m_copies) != m_copies or m_copies < 1:
        raise ParameterError(f"m_copies must be a positive integer, got {m_copies!r}")
    coeffs = _coefficients(state)
    c, p = coeffs.size, cfg.p
    eps = epsilon / m_copies
    a = a_constant(coeffs, p)
    b = b_constant(coeffs, cfg)

    log_a, log_b = math.log(a), math.log(b)
    log_k1 = (
        math.log(2.0)
        + (2.0 * c / p) * log_a
        + 2.0 * log_b
        + (2.0 + 2.0 * c / p) * math.log(c + p)
        - (2.0 * c / p) * math.log(c)
        - 2.0 * math.log(p)
    )
    log_k2 = (
        math.log(2.0)
        + (2 * c - 2) * math.log(p)
        + 2.0 * log_b
        + (2 * c + 2) * math.log(c + p)
        - 2 * c * math.log(p + 1)
    )
    log_k = max(log_k1, log_k2)
    if log_k > 709.0:
        raise NumericalError("K constant overflows double precision")

    eta_g = min((eps / a) ** (1.0 / p), 1.0)
    if eta_g >= 1.0:
        b_g = b_constant(coeffs, cfg, eta=1.0)
    else:
        b_g = b_constant(coeffs, cfg, eta=eta_g)
    g_cp = eps ** (c - c / p) * a ** (c / p) * b_g

    return EstimatorConstants(
        a=a,
        b=b,
        k_big=math.exp(log_k),
        eta_max=max_admissible_eta(coeffs, p, eps),
        g_cp=g_cp,
    )


class CoreEstimator:
    """Vectorised evaluator of :func:`g_core` for bulk sample processing.

    The estimator is expanded once into the form
    ``exp((1 - 1/eta)|z|^2) * sum_{a,b} C[a, b] z^a conj(z)^b`` and then
    evaluated with Horner's rule in ``|z|^2``. Results agree with
    :func:`g_core` to rounding.
    """

    def __init__(self, state, cfg):
        self.coefficients = _coefficients(state)
        self.cfg = cfg
        self.support = self.coefficients.size
        check_index(self.support - 1 + cfg.p - 1, "support + p")
        self._decay = 1.0 - 1.0 / cfg.eta
        self._diagonal, self._offdiag = self._compile()

    def _compile(self):
        eta, p = self.cfg.eta, self.cfg.p
        deg = self.support + p
        table = np.zeros((deg, deg), dtype=complex)
        for k, ck in enumerate(self.coefficients):
            for l, cl in enumerate(self.coefficients):
                weight_kl = np.conj(ck) * cl
                if weight_kl == 0:
                    continue
                for j in range(p):
                    big_k, big_l = k + j, l + j
                    w = weight_kl * (-eta) ** j * math.sqrt(binom(k + j, k) * binom(l + j, l))
                    # f_{K,L}: monomials z^(K-q) conj(z)^(L-q)
                    for q in range(min(big_k, big_l) + 1):
                        coef = _laguerre_coefficient(big_l, big_k, q) * eta ** (-1.0 - (big_k + big_l) + q)
                        table[big_k - q, big_l - q] += w * coef
        diagonal = np.real(np.diag(table)).copy()
        offdiag = []
        for d in range(1, deg):
            poly = np.array([table[a, a + d] for a in range(deg - d)])
            if np.any(poly != 0):
                offdiag.append((d, poly))
        return diagonal, offdiag

    @staticmethod
    def _horner(coeffs, x):
        out = np.full_like(x, coeffs[-1], dtype=np.result_type(coeffs, x))
        for c in coeffs[-2::-1]:
            out *= x
            out += c
        return out

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        x = z.real * z.real + z.imag * z.imag
        poly = self._horner(self._diagonal, x)
        if self._offdiag:
            zc = np.conj(z)
            zc_power = np.ones_like(z)
            last = 0
            for d, coeffs in self._offdiag:
                for _ in range(d - last):
                    zc_power = zc_power * zc
                last = d
                poly += 2.0 * (zc_power * self._horner(coeffs, x)).real
        return poly * np.exp(self._decay * x)

    def sums(self, z):
        """Return ``(sum g, sum g**2)`` over the outcomes ``z``."""
        values = self(z)
        if not np.all(np.isfinite(values)):
            raise NumericalError("non-finite estimator value")
        return float(np.sum(values)), float(np.dot(values, values))


def fock_core(n):
    """Coefficient vector of the Fock state ``|n>`` as a core state."""
    coeffs = np.zeros(n + 1, dtype=complex)
    coeffs[n] = 1.0
    return coeffs


__all__ = [
    "EstimatorConfig",
    "EstimatorConstants",
    "CoreEstimator",
    "MAX_INDEX",
    "laguerre2d",
    "f_kl",
    "g_kl",
    "g_core",
    "bias_bound",
    "range_bound",
    "constants_for",
    "a_constant",
    "b_constant",
    "max_admissible_eta",
    "closed_form_regime_eta",
    "first_dominant_order",
    "fock_core",
]
