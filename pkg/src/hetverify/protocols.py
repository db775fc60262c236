"""Verification protocols, sample-size planners and failure probabilities.

* Protocol 1 -- single-mode fidelity estimation (:func:`protocol1_estimate`,
  :func:`protocol1_plan`).
* Protocol 2 -- multimode fidelity witness (:func:`protocol2_witness`,
  :func:`protocol2_plan`).
* Protocol 3 -- Boson Sampling accept/abort (:func:`protocol3_verify`,
  :func:`protocol3_plan`).
* Protocols 4 and 5 -- the versions without the i.i.d. assumption: random
  discarding and an energy test (:func:`noniid_postprocess`) together with the
  four confidence terms (:func:`noniid_confidence`).

Planners invert the exact finite-``N`` failure probabilities and guarantee
``P(N) <= delta < P(N - 1)``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._combinatorics import log_binom
from .errors import ParameterError, ValidationError
from .estimators import CoreEstimator, EstimatorConfig, constants_for
from .sampler import SampleBatch, verifier_transform
from .states import CoreState, PassiveUnitary, TargetSpec


# -- request / result types ------------------------------------------------------


@dataclass(frozen=True)
class PlanRequest:
    """Precision ``epsilon``, failure probability ``delta`` and copies ``m_copies``.

    ``cfg`` is one :class:`EstimatorConfig` or one per mode; ``eta=None`` in
    a mode's config is not allowed, use :func:`default_config` instead.
    """

    epsilon: float
    delta: float
    target: object
    cfg: object
    m_copies: int = 1

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon!r}")
        if not 0 < self.delta < 1:
            raise ParameterError(f"delta must lie in (0, 1), got {self.delta!r}")
        if int(self.m_copies) != self.m_copies or self.m_copies < 1:
            raise ParameterError(f"m_copies must be a positive integer, got {self.m_copies!r}")

    @property
    def modes(self):
        return self.target.modes if isinstance(self.target, TargetSpec) else 1

    def configs(self):
        return _per_mode(self.cfg, self.modes)


@dataclass(frozen=True)
class PlanResult:
    """Planned number of shots and the constants behind it."""

    shots_required: int
    constants: tuple
    formula_tag: str
    failure_probability: float
    shots_real: float = math.nan
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.shots_required < 1:
            raise ValidationError("a plan needs at least one shot")

    def to_dict(self):
        return {
            "shots_required": int(self.shots_required),
            "formula_tag": self.formula_tag,
            "failure_probability": float(self.failure_probability),
            "shots_real": None if math.isnan(self.shots_real) else float(self.shots_real),
            "constants": [
                None if c is None else {k: float(getattr(c, k)) for k in ("a", "b", "k_big", "eta_max", "g_cp")}
                for c in self.constants
            ],
            "params": _jsonable(self.params),
        }


@dataclass(frozen=True)
class EnergyTestConfig:
    """Split ``N = N' + K + Q`` and per-mode energy thresholds and allowances."""

    n_estimate: int
    k_energy: int
    q_discard: int
    e_threshold: tuple
    s_allowance: tuple

    def __post_init__(self):
        for name in ("n_estimate", "k_energy", "q_discard"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ParameterError(f"{name} must be a non-negative integer, got {v!r}")
        e = tuple(float(x) for x in np.atleast_1d(self.e_threshold))
        s = tuple(int(x) for x in np.atleast_1d(self.s_allowance))
        if len(e) != len(s):
            raise ParameterError("need one energy threshold and one allowance per mode")
        if any(x < 0 for x in e) or any(x < 0 for x in s):
            raise ParameterError("energy thresholds and allowances must be non-negative")
        object.__setattr__(self, "e_threshold", e)
        object.__setattr__(self, "s_allowance", s)

    @property
    def total(self):
        return self.n_estimate + self.k_energy + self.q_discard


@dataclass
class VerificationReport:
    """Outcome of a witness estimation or an accept/abort verification."""

    per_mode_fidelity: list
    witness: float
    threshold: float = None
    decision: str = None
    tvd_bound: float = None
    failure_probabilities: dict = field(default_factory=dict)
    plan: PlanResult = None
    formula_tag: str = ""
    per_mode_stderr: list = field(default_factory=list)
    shots: int = 0
    flags: dict = field(default_factory=dict)

    @property
    def accepted(self):
        return self.decision == "accept"

    def to_dict(self):
        return {
            "format": "hetverify-report-v1",
            "decision": self.decision,
            "witness": None if self.witness is None else float(self.witness),
            "threshold": None if self.threshold is None else float(self.threshold),
            "per_mode_fidelity": [float(f) for f in self.per_mode_fidelity],
            "per_mode_stderr": [float(s) for s in self.per_mode_stderr],
            "tvd_bound": None if self.tvd_bound is None else float(self.tvd_bound),
            "failure_probabilities": {k: float(v) for k, v in self.failure_probabilities.items()},
            "plan": None if self.plan is None else self.plan.to_dict(),
            "formula_tag": self.formula_tag,
            "shots": int(self.shots),
            "flags": _jsonable(self.flags),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _per_mode(cfg, m):
    if isinstance(cfg, EstimatorConfig):
        return [cfg] * m
    cfgs = list(cfg)
    if len(cfgs) != m:
        raise ParameterError(f"need {m} estimator configs, got {len(cfgs)}")
    return cfgs


def _core_states(target):
    if isinstance(target, TargetSpec):
        return list(target.core_states)
    return [target if isinstance(target, CoreState) else CoreState(target)]


# -- streaming estimation ----------------------------------------------------------


class WitnessAccumulator:
    """Mergeable per-mode running sums of the fidelity estimators.

    ``update`` takes a block of output-frame outcomes ``gamma`` (``n x m``),
    maps it to the input frame with ``alpha = U^dag (gamma - beta)`` and
    accumulates ``sum g`` and ``sum g^2`` for each mode.
    """

    def __init__(self, core_states, cfgs, unitary=None, beta=None):
        self.core_states = [c if isinstance(c, CoreState) else CoreState(c) for c in core_states]
        m = len(self.core_states)
        self.cfgs = _per_mode(cfgs, m)
        self.unitary = None if unitary is None else (
            unitary if isinstance(unitary, PassiveUnitary) else PassiveUnitary(unitary)
        )
        self.beta = None if beta is None else np.asarray(beta, dtype=complex)
        self._estimators = [CoreEstimator(c, g) for c, g in zip(self.core_states, self.cfgs)]
        self.count = 0
        self.sums = np.zeros(m)
        self.sumsq = np.zeros(m)

    @property
    def modes(self):
        return len(self.core_states)

    def update(self, gamma):
        data = gamma.data if isinstance(gamma, SampleBatch) else np.asarray(gamma, dtype=complex)
        if data.ndim == 1:
            data = data[:, None]
        if data.shape[1] != self.modes:
            raise ValidationError(f"samples have {data.shape[1]} modes, target has {self.modes}")
        if self.unitary is None:
            alpha_t = data.T
        else:
            # alpha^T = conj(U)^T (gamma - beta)^T, one contiguous row per mode
            shifted = data - self.beta if self.beta is not None and np.any(self.beta) else data
            alpha_t = self.unitary.matrix.conj().T @ shifted.T
        for i, est in enumerate(self._estimators):
            s1, s2 = est.sums(alpha_t[i])
            self.sums[i] += s1
            self.sumsq[i] += s2
        self.count += data.shape[0]
        return self

    def merge(self, other):
        if other.modes != self.modes:
            raise ValidationError("cannot merge accumulators over different modes")
        self.count += other.count
        self.sums += other.sums
        self.sumsq += other.sumsq
        return self

    def means(self):
        if self.count == 0:
            raise ValidationError("no samples were accumulated")
        return self.sums / self.count

    def stderrs(self):
        if self.count < 2:
            return np.full(self.modes, math.inf)
        mean = self.sums / self.count
        var = np.maximum(self.sumsq / self.count - mean**2, 0.0) * self.count / (self.count - 1)
        return np.sqrt(var / self.count)


def _clamp(values):
    return np.clip(np.asarray(values, dtype=float), 0.0, 1.0)


def witness_from_means(means, m_copies=1):
    """``W = 1 - sum_i (1 - F_i^M)`` with each mean clamped to ``[0, 1]`` first."""
    f = _clamp(means) ** m_copies
    return float(1.0 - np.sum(1.0 - f)), f


def _blocks(samples):
    if isinstance(samples, SampleBatch):
        yield samples.data
        return
    if isinstance(samples, np.ndarray):
        yield samples
        return
    for chunk in samples:
        if isinstance(chunk, tuple):
            chunk = chunk[1]
        yield chunk.data if isinstance(chunk, SampleBatch) else chunk


def protocol1_estimate(samples, target, cfg, m_copies=1):
    """Single-mode fidelity estimate ``clamp(mean g_C)^M``."""
    acc = WitnessAccumulator([target], cfg)
    for block in _blocks(samples):
        block = np.asarray(block, dtype=complex).reshape(-1, 1)
        acc.update(block)
    if acc.count == 0:
        raise ValidationError("protocol 1 needs at least one sample")
    return float(_clamp(acc.means()[0]) ** m_copies)


def protocol2_witness(samples, target, cfg, m_copies=1, plan=None):
    """Fidelity-witness estimate for a multimode target (no accept/abort decision)."""
    acc = WitnessAccumulator(target.core_states, cfg, target.unitary, target.beta)
    for block in _blocks(samples):
        acc.update(block)
    if acc.count == 0:
        raise ValidationError("protocol 2 needs at least one sample")
    w, f = witness_from_means(acc.means(), m_copies)
    probs = {}
    if plan is not None:
        probs["P_W_iid"] = plan.failure_probability
    return VerificationReport(
        per_mode_fidelity=list(f),
        witness=w,
        plan=plan,
        formula_tag="protocol2",
        per_mode_stderr=list(acc.stderrs()),
        shots=acc.count,
        failure_probabilities=probs,
    )


def accept_decision(witness, lam, epsilon):
    """Accept iff ``W >= 1 - lambda + epsilon``."""
    return "accept" if witness >= 1.0 - lam + epsilon else "abort"


def tvd_bound(fidelity_lower_bound):
    """Total-variation certificate ``sqrt(1 - F)`` for a fidelity lower bound ``F``."""
    f = float(fidelity_lower_bound)
    if not 0.0 <= f <= 1.0:
        raise ParameterError(f"fidelity must lie in [0, 1], got {f!r}")
    return math.sqrt(1.0 - f)


def _check_bs(epsilon, lam, p, modes, n_photons):
    if p % 2:
        raise ParameterError(f"Boson Sampling verification needs an even order p, got {p}")
    if not 0 < epsilon < lam:
        raise ParameterError(f"need 0 < epsilon < lambda, got epsilon={epsilon!r}, lambda={lam!r}")
    if not 0 <= n_photons <= modes:
        raise ParameterError(f"need 0 <= n_photons <= modes, got {n_photons} and {modes}")


def bs_cores(modes, n_photons):
    return [CoreState.fock(1)] * n_photons + [CoreState.fock(0)] * (modes - n_photons)


def protocol3_verify(samples, unitary, n_photons, lam, epsilon, cfg=None, m_copies=1, plan=None):
    """Boson Sampling verification: witness from one-sided Fock estimators and accept/abort."""
    cfg = cfg or EstimatorConfig(2, 0.3)
    unitary = unitary if isinstance(unitary, PassiveUnitary) else PassiveUnitary(unitary)
    m = unitary.modes
    _check_bs(epsilon, lam, cfg.p, m, n_photons)
    if not 0 < lam <= 1:
        raise ParameterError(f"lambda must lie in (0, 1], got {lam!r}")
    acc = WitnessAccumulator(bs_cores(m, n_photons), cfg, unitary, None)
    for block in _blocks(samples):
        acc.update(block)
    if acc.count == 0:
        raise ValidationError("protocol 3 needs at least one sample")
    w, f = witness_from_means(acc.means(), m_copies)
    decision = accept_decision(w, lam, epsilon)
    probs = {}
    if plan is not None:
        probs["P_BS_iid"] = plan.failure_probability
    return VerificationReport(
        per_mode_fidelity=list(f),
        witness=w,
        threshold=1.0 - lam + epsilon,
        decision=decision,
        tvd_bound=tvd_bound(1.0 - lam) if decision == "accept" else None,
        failure_probabilities=probs,
        plan=plan,
        formula_tag="protocol3",
        per_mode_stderr=list(acc.stderrs()),
        shots=acc.count,
    )


# -- failure probabilities and planners -----------------------------------------------


def _exponent(c, p):
    return 2.0 + 2.0 * c / p


def protocol1_failure(shots, epsilon, k_big, c, p, m_copies=1):
    """``2 exp[-N eps^e / (M^e K)]`` with ``e = 2 + 2c/p``."""
    e = _exponent(c, p)
    return 2.0 * math.exp(-shots * (epsilon / m_copies) ** e / k_big)


def protocol2_failure(shots, epsilon, terms, m_copies=1):
    """Union bound ``sum_i 2 exp[-N eps^e_i / ((M m)^e_i K_i)]`` over ``terms = [(c, p, K), ...]``."""
    m = len(terms)
    total = 0.0
    for c, p, k_big in terms:
        e = _exponent(c, p)
        total += 2.0 * math.exp(-shots * (epsilon / (m_copies * m)) ** e / k_big)
    return total


def protocol3_failure(shots, epsilon, modes, n_photons, p, eta, m_copies=1):
    """Two-term union bound for Fock-state witnesses with ``epsilon -> epsilon / M``."""
    eps = epsilon / m_copies
    m = modes
    vac = 2.0 * (m - n_photons) * math.exp(-shots * eps**2 * eta**2 / (2.0 * p**2 * m**2))
    one = 2.0 * n_photons * math.exp(-2.0 * shots * eps**2 * eta**4 / (p**2 * (p + 1) ** 2 * m**2))
    return vac + one


def smallest_shots(failure, delta, start=1):
    """Smallest integer ``N >= 1`` with ``failure(N) <= delta`` for decreasing ``failure``."""
    lo = max(1, int(start))
    if failure(lo) <= delta:
        while lo > 1 and failure(lo - 1) <= delta:
            lo = max(1, lo // 2)
        hi = lo
        lo = 0
        while failure(hi) > delta:
            hi *= 2
    else:
        hi = lo * 2
        while failure(hi) > delta:
            lo, hi = hi, hi * 2
            if hi > 1 << 62:
                raise ParameterError("planned number of shots exceeds 2**62")
    # invariant: failure(hi) <= delta, and lo == 0 or failure(lo) > delta
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if failure(mid) <= delta:
            hi = mid
        else:
            lo = mid
    return max(hi, 1)


def _refine(n, failure, delta):
    n = max(1, int(n))
    while failure(n) > delta:
        n += 1
    while n > 1 and failure(n - 1) <= delta:
        n -= 1
    return n


def default_config(state, p, epsilon, m_copies=1):
    """Order ``p`` with the admissible damping cap as ``eta``."""
    state = state if isinstance(state, CoreState) else CoreState(state)
    cap = constants_for(state, EstimatorConfig(p, 0.5), epsilon, m_copies).eta_max
    return EstimatorConfig(p, min(cap, 1.0 - 1e-12))


def _admissible_constants(state, cfg, epsilon, m_copies, label):
    consts = constants_for(state, cfg, epsilon, m_copies)
    if cfg.eta > consts.eta_max * (1 + 1e-12):
        raise ParameterError(
            f"{label}: eta={cfg.eta!r} exceeds the admissible cap {consts.eta_max!r} "
            f"for p={cfg.p}; pass eta <= {consts.eta_max:.6g}"
        )
    return consts


def protocol1_plan(req):
    """Shots for Protocol 1 from ``N = ceil((M/eps)^e K ln(2/delta))``."""
    state = _core_states(req.target)[0]
    cfg = req.configs()[0]
    consts = _admissible_constants(state, cfg, req.epsilon, req.m_copies, "protocol 1")
    c, p = state.support, cfg.p
    e = _exponent(c, p)
    log_real = e * math.log(req.m_copies / req.epsilon) + math.log(consts.k_big) + math.log(math.log(2.0 / req.delta))
    if log_real > math.log(2.0**62):
        raise ParameterError("planned number of shots exceeds 2**62")
    real = math.exp(log_real)

    def failure(n):
        return protocol1_failure(n, req.epsilon, consts.k_big, c, p, req.m_copies)

    n = _refine(math.ceil(real), failure, req.delta)
    return PlanResult(
        shots_required=n,
        constants=(consts,),
        formula_tag="protocol1:P_C_iid",
        failure_probability=failure(n),
        shots_real=real,
        params={"epsilon": req.epsilon, "delta": req.delta, "m_copies": req.m_copies, "c": c, "p": p, "eta": cfg.eta},
    )


def protocol2_plan(req):
    """Shots for Protocol 2 by bisection on the union-bound failure probability."""
    cores = _core_states(req.target)
    cfgs = req.configs()
    m = len(cores)
    consts = []
    terms = []
    for i, (core, cfg) in enumerate(zip(cores, cfgs)):
        k = _admissible_constants(core, cfg, req.epsilon / m, req.m_copies, f"protocol 2 mode {i}")
        consts.append(k)
        terms.append((core.support, cfg.p, k.k_big))

    def failure(n):
        return protocol2_failure(n, req.epsilon, terms, req.m_copies)

    # each term alone gives a lower bound on N; start the search there
    start = max(
        math.ceil(((req.m_copies * m) / req.epsilon) ** _exponent(c, p) * k * math.log(2.0 / req.delta))
        for c, p, k in terms
    )
    n = smallest_shots(failure, req.delta, start=start)
    return PlanResult(
        shots_required=n,
        constants=tuple(consts),
        formula_tag="protocol2:P_W_iid",
        failure_probability=failure(n),
        params={
            "epsilon": req.epsilon,
            "delta": req.delta,
            "m_copies": req.m_copies,
            "modes": m,
            "c": [c for c, _, _ in terms],
            "p": [p for _, p, _ in terms],
            "eta": [cfg.eta for cfg in cfgs],
        },
    )


def protocol3_plan(epsilon, delta, modes, n_photons, cfg=None, m_copies=1):
    """Shots for Boson Sampling verification by bisection on the two-term failure probability."""
    cfg = cfg or EstimatorConfig(2, 0.3)
    if cfg.p % 2:
        raise ParameterError(f"Boson Sampling verification needs an even order p, got {cfg.p}")
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon!r}")
    if not 0 < delta < 1:
        raise ParameterError(f"delta must lie in (0, 1), got {delta!r}")
    if int(modes) != modes or modes < 1 or not 0 <= n_photons <= modes:
        raise ParameterError(f"need modes >= 1 and 0 <= n_photons <= modes, got {modes}, {n_photons}")

    def failure(n):
        return protocol3_failure(n, epsilon, modes, n_photons, cfg.p, cfg.eta, m_copies)

    n = smallest_shots(failure, delta)
    return PlanResult(
        shots_required=n,
        constants=(None,) * modes,
        formula_tag="protocol3:P_BS_iid",
        failure_probability=failure(n),
        params={
            "epsilon": epsilon,
            "delta": delta,
            "modes": modes,
            "n_photons": n_photons,
            "p": cfg.p,
            "eta": cfg.eta,
            "m_copies": m_copies,
        },
    )


def grid_search_plan(req, p_values, eta_fractions=(1.0,)):
    """Smallest planned ``N`` over orders ``p_values`` and fractions of the admissible ``eta``.

    A convenience scan over the free parameters; it makes no optimality claim
    beyond the grid it is given.
    """
    cores = _core_states(req.target)
    m = len(cores)
    best = None
    for p in p_values:
        for frac in eta_fractions:
            cfgs = []
            for core in cores:
                cap = constants_for(core, EstimatorConfig(p, 0.5), req.epsilon / m, req.m_copies).eta_max
                cfgs.append(EstimatorConfig(p, min(cap * frac, 1.0 - 1e-12)))
            trial = PlanRequest(req.epsilon, req.delta, req.target, cfgs, req.m_copies)
            plan = protocol1_plan(trial) if m == 1 and not isinstance(req.target, TargetSpec) else protocol2_plan(trial)
            if best is None or plan.shots_required < best.shots_required:
                best = plan
    return best


# -- without the i.i.d. assumption --------------------------------------------------


@dataclass
class NonIIDOutcome:
    """Result of discarding and the energy test."""

    kept: np.ndarray
    energy_counts: tuple
    aborted: bool
    config: EnergyTestConfig
    permutation_seed: int

    def report(self, lam=None, epsilon=None):
        return VerificationReport(
            per_mode_fidelity=[],
            witness=None,
            decision="abort" if self.aborted else None,
            formula_tag="energy-test",
            flags={"energy_counts": list(self.energy_counts), "allowances": list(self.config.s_allowance)},
        )


def noniid_postprocess(batch, etc, seed, unitary=None, beta=None):
    """Random discarding and the per-mode energy test.

    Shots are permuted with ``seed``; the first ``N'`` are kept for
    estimation, the next ``K`` feed the energy test and the last ``Q`` are
    discarded. Energies are counted in the input frame ``U^dag (gamma - beta)``.
    The outcome aborts iff ``R_i > S_i`` for some mode.
    """
    data = batch.data if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=complex)
    if data.ndim == 1:
        data = data[:, None]
    n, m = data.shape
    if etc.total != n:
        raise ParameterError(f"N' + K + Q = {etc.total} does not match the {n} shots")
    if len(etc.e_threshold) != m:
        raise ParameterError(f"energy test configured for {len(etc.e_threshold)} modes, samples have {m}")
    perm = np.random.default_rng(seed).permutation(n)
    used = data[perm[: etc.n_estimate + etc.k_energy]]
    alpha = used if unitary is None else verifier_transform(used, unitary, beta)
    energy = alpha[etc.n_estimate :]
    e = np.asarray(etc.e_threshold)
    counts = np.sum(np.abs(energy) ** 2 + 1.0 > e, axis=0)
    aborted = bool(np.any(counts > np.asarray(etc.s_allowance)))
    kept = used[: etc.n_estimate]
    return NonIIDOutcome(kept, tuple(int(r) for r in counts), aborted, etc, int(seed))


def _support_bracket(n_est, k, q, m_copies, s):
    return q / (4.0 * (n_est + m_copies + q)) - 2.0 * s / k


def _log_support(n_est, k, q, m_copies, s):
    bracket = _support_bracket(n_est, k, q, m_copies, s)
    return math.log(8.0) + 1.5 * math.log(k) - k / 9.0 * bracket**2


def _log_definetti(n_est, q, m_copies, e):
    n = n_est + m_copies + q
    if q == 0:
        return -math.inf if e > 0 else -q * (q + 4.0) / (8.0 * n)
    return 0.5 * e**2 * math.log(q / 4.0) - q * (q + 4.0) / (8.0 * n)


def _choice(n_est, q, m_copies):
    return m_copies * (q + m_copies - 1.0) / (n_est + m_copies)


def _hoeffding_bracket(n_est, q, m_copies, epsilon, g_cp, c, p):
    return epsilon ** (1.0 + c / p) / g_cp - 2.0 * q * m_copies ** (1.0 + c / p) / n_est


def _log_hoeffding(n_est, q, m_copies, epsilon, g_cp, c, p):
    if n_est <= 0:
        raise ParameterError("Hoeffding term needs N' > 0")
    rest = n_est + m_copies - q
    if rest < 0:
        raise ParameterError(f"Hoeffding term needs Q <= N' + M, got Q={q} and N' + M={n_est + m_copies}")
    bracket = _hoeffding_bracket(n_est, q, m_copies, epsilon, g_cp, c, p)
    return (
        math.log(2.0)
        + log_binom(n_est + m_copies, q)
        - rest / (2.0 * m_copies ** _exponent(c, p)) * bracket**2
    )


def _exp(log_value):
    return math.inf if log_value > 709.0 else math.exp(log_value)


def noniid_confidence(n_estimate, k_energy, q_discard, m_copies, e_threshold, s_allowance, epsilon, cores, cfgs):
    """The four failure-probability terms without the i.i.d. assumption.

    For ``m`` modes each term is the per-mode union bound with ``epsilon / m``
    substituted; ``e_threshold`` and ``s_allowance`` may be per mode. Returns
    a dict with keys ``support``, ``definetti``, ``choice``, ``hoeffding`` and
    ``total``, plus ``per_mode`` details and ``regime_ok``. The bracketed
    differences inside the support and Hoeffding exponents are squared, so the
    formulas evaluate for any sign, but the bounds only carry meaning while
    both are positive; ``regime_ok`` records that. Arguments outside the
    formulas' domain (``K <= 0``, ``Q > N' + M``) raise
    :class:`ParameterError`; overflow gives ``inf``.
    """
    cores = [c if isinstance(c, CoreState) else CoreState(c) for c in (cores if isinstance(cores, (list, tuple)) else [cores])]
    m = len(cores)
    cfgs = _per_mode(cfgs, m)
    e_thr = np.broadcast_to(np.asarray(e_threshold, dtype=float), (m,))
    s_all = np.broadcast_to(np.asarray(s_allowance, dtype=float), (m,))
    for name, v in (("N'", n_estimate), ("K", k_energy), ("Q", q_discard), ("M", m_copies)):
        if v < 0 or int(v) != v:
            raise ParameterError(f"{name} must be a non-negative integer, got {v!r}")
    if k_energy <= 0 or m_copies < 1:
        raise ParameterError("need K > 0 and M >= 1")
    if not epsilon > 0:
        raise ParameterError("epsilon must be positive")
    eps = epsilon / m
    out = {"support": 0.0, "definetti": 0.0, "choice": 0.0, "hoeffding": 0.0}
    per_mode = []
    for core, cfg, e, s in zip(cores, cfgs, e_thr, s_all):
        g_cp = constants_for(core, cfg, eps, m_copies).g_cp
        brackets = (
            _support_bracket(n_estimate, k_energy, q_discard, m_copies, s),
            _hoeffding_bracket(n_estimate, q_discard, m_copies, eps, g_cp, core.support, cfg.p)
            if n_estimate > 0
            else -math.inf,
        )
        terms = {
            "support": _exp(_log_support(n_estimate, k_energy, q_discard, m_copies, s)),
            "definetti": _exp(_log_definetti(n_estimate, q_discard, m_copies, e)),
            "choice": _choice(n_estimate, q_discard, m_copies),
            "hoeffding": _exp(_log_hoeffding(n_estimate, q_discard, m_copies, eps, g_cp, core.support, cfg.p)),
        }
        for key, value in terms.items():
            out[key] += value
        terms["regime_ok"] = bool(brackets[0] > 0 and brackets[1] > 0)
        per_mode.append(terms)
    out["total"] = sum(out[k] for k in ("support", "definetti", "choice", "hoeffding"))
    out["per_mode"] = per_mode
    out["regime_ok"] = all(t["regime_ok"] for t in per_mode)
    return out


def noniid_preset(core, p, m_copies, epsilon, scale=1.0, modes=1):
    """Parameters following the asymptotic scalings suggested for the non-i.i.d. protocol.

    ``N' = K = scale * M^(7+4c/p) / eps^(4+4c/p)``,
    ``Q = scale * M^(4+2c/p) / eps^(2+2c/p)``, ``E = ceil(log M) + 1`` and
    ``S = floor(sqrt(Q))`` (so ``S = o(Q)``), with ``eps -> eps / modes``.
    Only the scalings are prescribed; the constants are a free choice.
    """
    core = core if isinstance(core, CoreState) else CoreState(core)
    c = core.support
    eps = epsilon / modes
    n_est = int(math.ceil(scale * m_copies ** (7 + 4 * c / p) / eps ** (4 + 4 * c / p)))
    q = int(math.ceil(scale * m_copies ** (4 + 2 * c / p) / eps ** (2 + 2 * c / p)))
    e = math.ceil(math.log(max(m_copies, 1))) + 1
    s = int(math.floor(math.sqrt(q)))
    return {"n_estimate": n_est, "k_energy": n_est, "q_discard": q, "e_threshold": e, "s_allowance": s}


__all__ = [
    "PlanRequest",
    "PlanResult",
    "EnergyTestConfig",
    "VerificationReport",
    "WitnessAccumulator",
    "NonIIDOutcome",
    "protocol1_estimate",
    "protocol1_plan",
    "protocol1_failure",
    "protocol2_witness",
    "protocol2_plan",
    "protocol2_failure",
    "protocol3_verify",
    "protocol3_plan",
    "protocol3_failure",
    "noniid_postprocess",
    "noniid_confidence",
    "noniid_preset",
    "tvd_bound",
    "accept_decision",
    "witness_from_means",
    "default_config",
    "grid_search_plan",
    "smallest_shots",
    "bs_cores",
]
