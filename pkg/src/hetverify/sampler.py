"""Seeded heterodyne sampling of simulated provers.

Balanced heterodyne outcomes of a state are draws from its Husimi function
``Q(alpha) = <alpha|rho|alpha> / pi``. Outcomes of the unbalanced measurement
of a displaced, squeezed, interfered state are never simulated directly: by
the covariance of the heterodyne POVM they follow from input-frame samples
through ``gamma = U alpha + beta`` (:func:`forward_transform`), and the
verifier undoes this with :func:`verifier_transform`.

Every block of shots gets its own stream, seeded from ``(seed, tag, mode,
block)`` through a ``SeedSequence`` spawn key, so a batch is bit-identical for equal inputs regardless of how
blocks are scheduled across workers.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ParameterError, ValidationError
from .states import CoreState, FockDensityMatrix, PassiveUnitary, TargetSpec, apply_loss

#: Shots per independently seeded block.
BLOCK = 1 << 16
_EXP_SUM_MAX = 4

#: Consecutive rejections tolerated before the envelope is declared broken.
MAX_REJECTIONS = 10**6

_TAGS = {"core": 1, "density": 2, "coherent": 3, "mixture": 4}


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """``N x m`` heterodyne outcomes with their seed and prover tag."""

    data: np.ndarray
    seed: int = 0
    prover_tag: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2:
            raise ValidationError(f"sample data must be N x m, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValidationError("sample data contains non-finite entries")
        object.__setattr__(self, "data", data)

    @property
    def shots(self):
        return self.data.shape[0]

    @property
    def modes(self):
        return self.data.shape[1]

    def replace(self, data):
        return SampleBatch(data, self.seed, self.prover_tag, dict(self.metadata))


def _generator(seed, *key):
    ss = np.random.SeedSequence(entropy=int(seed) & ((1 << 64) - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.SFC64(ss))


def _complex_normal(rng, n):
    # E|z|^2 = 1, i.e. samples of Q for the vacuum
    z = rng.standard_normal(2 * n).view(complex)
    return z * math.sqrt(0.5)


def _fock_radial(rng, k, n):
    """``n`` draws of ``Q`` for the Fock state ``|k>``."""
    z = _complex_normal(rng, n)
    if k == 0:
        return z
    r2 = z.real * z.real + z.imag * z.imag
    extra = rng.standard_exponential(n) if k == 1 else rng.standard_gamma(k, n)
    return z * np.sqrt((r2 + extra) / r2)


def _fock_mixture(rng, probs, n):
    probs = np.asarray(probs, dtype=float)
    probs = probs / probs.sum()
    if np.count_nonzero(probs) == 1:
        return _fock_radial(rng, int(np.flatnonzero(probs)[0]), n)
    top = int(np.flatnonzero(probs)[-1])
    levels = np.searchsorted(np.cumsum(probs), rng.random(n), side="right")
    levels = np.minimum(levels, top)
    z = _complex_normal(rng, n)
    r2 = z.real * z.real + z.imag * z.imag
    if top <= _EXP_SUM_MAX:
        # Gamma(k, 1) as a sum of k unit exponentials, avoiding masked scatters
        extra = np.zeros(n)
        for j in range(top):
            extra += rng.standard_exponential(n) * (levels > j)
    else:
        extra = np.zeros(n)
        for k in np.unique(levels):
            if k == 0:
                continue
            sel = levels == k
            extra[sel] = rng.standard_gamma(k, int(sel.sum()))
    return z * np.sqrt((r2 + extra) / r2)


def _clean_coefficients(coeffs):
    c = np.asarray(coeffs, dtype=complex).copy()
    c[np.abs(c) ** 2 < 1e-28] = 0.0
    return c / np.linalg.norm(c)


def _pure_rejection(rng, coeffs, n):
    """Rejection sampling of ``Q`` for a pure state with Fock amplitudes ``coeffs``.

    Proposal: a Fock level ``k`` with probability ``|c_k|^2`` and then a draw
    from ``Q_k``. By Cauchy-Schwarz ``Q_psi <= c' sum_k |c_k|^2 Q_k`` with
    ``c'`` the number of non-zero amplitudes, so the ratio below is a valid
    acceptance probability with mean ``1 / c'``.
    """
    c = _clean_coefficients(coeffs)
    support = np.flatnonzero(c)
    if support.size == 1:
        return _fock_radial(rng, int(support[0]), n)
    probs = np.abs(c) ** 2
    c_count = support.size
    top = int(support[-1])
    log_fact = np.array([0.5 * math.lgamma(j + 1) for j in range(top + 1)])
    out = np.empty(n, dtype=complex)
    filled = 0
    misses = 0
    while filled < n:
        want = int((n - filled) * c_count * 1.1) + 16
        alpha = _fock_mixture(rng, probs[: top + 1], want)
        # u_j = conj(alpha)^j / sqrt(j!) in log-magnitude form to avoid overflow
        logx = np.log(np.maximum(np.abs(alpha), 1e-300))
        phase = np.exp(-1j * np.angle(alpha))
        amp = np.zeros(want, dtype=complex)
        weight = np.zeros(want)
        lmax = np.max([j * logx - log_fact[j] for j in support], axis=0)
        for j in support:
            u = np.exp(j * logx - log_fact[j] - lmax) * phase**j
            amp += c[j] * u
            weight += probs[j] * np.abs(u) ** 2
        ratio = np.abs(amp) ** 2 / (c_count * weight)
        accept = rng.random(want) < ratio
        got = alpha[accept]
        if got.size == 0:
            misses += want
            if misses > MAX_REJECTIONS:
                raise NumericalError("rejection sampler starved; the envelope is inconsistent")
            continue
        misses = 0
        take = min(got.size, n - filled)
        out[filled : filled + take] = got[:take]
        filled += take
    return out


def _density_sampler(rho):
    """Return ``draw(rng, n)`` sampling ``Q`` of a single-mode density matrix."""
    entries = rho.entries
    diag = np.real(np.diag(entries)).copy()
    if np.allclose(entries, np.diag(np.diag(entries)), atol=1e-15, rtol=0):
        diag = np.clip(diag, 0.0, None)
        return lambda rng, n: _fock_mixture(rng, diag, n)
    weights, vecs = rho.spectral()
    keep = weights > 1e-15
    weights, vecs = weights[keep] / weights[keep].sum(), vecs[:, keep]

    def draw(rng, n):
        if weights.size == 1:
            return _pure_rejection(rng, vecs[:, 0], n)
        pick = np.searchsorted(np.cumsum(weights), rng.random(n), side="right")
        pick = np.minimum(pick, weights.size - 1)
        out = np.empty(n, dtype=complex)
        for j in np.unique(pick):
            sel = pick == j
            out[sel] = _pure_rejection(rng, vecs[:, j], int(sel.sum()))
        return out

    return draw


def _core_sampler(state):
    coeffs = state.coefficients if isinstance(state, CoreState) else CoreState(state).coefficients
    return lambda rng, n: _pure_rejection(rng, coeffs, n)


def _blocked(draw, shots, seed, tag, mode=0, block=BLOCK):
    out = np.empty(shots, dtype=complex)
    for b, start in enumerate(range(0, shots, block)):
        n = min(block, shots - start)
        out[start : start + n] = draw(_generator(seed, tag, mode, b), n)
    return out


def _check_shots(shots):
    if int(shots) != shots or shots < 0:
        raise ParameterError(f"shots must be a non-negative integer, got {shots!r}")
    return int(shots)


def sample_core_q(state, shots, seed):
    """``shots`` i.i.d. draws from the Husimi function of a core state."""
    shots = _check_shots(shots)
    return _blocked(_core_sampler(state), shots, seed, _TAGS["core"])


def sample_density_q(rho, shots, seed):
    """``shots`` i.i.d. draws from the Husimi function of a single-mode density matrix."""
    shots = _check_shots(shots)
    if not isinstance(rho, FockDensityMatrix):
        rho = FockDensityMatrix(rho)
    if rho.modes != 1:
        raise ValidationError("sample_density_q needs a single-mode state")
    return _blocked(_density_sampler(rho), shots, seed, _TAGS["density"])


# -- frame transformations -----------------------------------------------------


def _frame(unitary, beta, m):
    u = unitary.matrix if isinstance(unitary, PassiveUnitary) else np.asarray(unitary, dtype=complex)
    if u.shape != (m, m):
        raise ValidationError(f"unitary of shape {u.shape} does not act on {m} modes")
    beta = np.zeros(m, dtype=complex) if beta is None else np.asarray(beta, dtype=complex).reshape(-1)
    if beta.shape != (m,):
        raise ValidationError(f"beta must have {m} entries")
    return u, beta


def _unwrap(batch):
    if isinstance(batch, SampleBatch):
        return batch.data, batch
    data = np.asarray(batch, dtype=complex)
    return (data[:, None] if data.ndim == 1 else data), None


def forward_transform(batch, unitary, beta=None):
    """Map input-frame outcomes to ``gamma = U alpha + beta`` shot by shot."""
    data, wrapper = _unwrap(batch)
    u, beta = _frame(unitary, beta, data.shape[1])
    out = data @ u.T
    if np.any(beta):
        out += beta
    return wrapper.replace(out) if wrapper is not None else out


def verifier_transform(batch, unitary, beta=None):
    """Recover input-frame outcomes ``alpha = U^dag (gamma - beta)`` shot by shot."""
    data, wrapper = _unwrap(batch)
    u, beta = _frame(unitary, beta, data.shape[1])
    out = (data - beta) @ u.conj() if np.any(beta) else data @ u.conj()
    return wrapper.replace(out) if wrapper is not None else out


# -- prover models -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProverModel:
    """A simulated prover: what it sends when asked for copies of ``target``.

    Use the constructors :meth:`ideal`, :meth:`lossy`, :meth:`substitute`,
    :meth:`coherent_spoof` and :meth:`block_noniid`.
    """

    kind: str
    target: TargetSpec
    params: dict = field(default_factory=dict)

    @classmethod
    def ideal(cls, target):
        return cls("ideal", target)

    @classmethod
    def lossy(cls, target, tau):
        taus = np.broadcast_to(np.asarray(tau, dtype=float), (target.modes,)).copy()
        if np.any(taus < 0) or np.any(taus > 1):
            raise ParameterError("transmissivities must lie in [0, 1]")
        return cls("lossy", target, {"tau": taus})

    @classmethod
    def substitute(cls, target, states):
        states = tuple(s if isinstance(s, FockDensityMatrix) else FockDensityMatrix(s) for s in states)
        if len(states) != target.modes or any(s.modes != 1 for s in states):
            raise ValidationError("substitute needs one single-mode state per target mode")
        return cls("substitute", target, {"states": states})

    @classmethod
    def coherent_spoof(cls, target, amplitudes=None):
        """Coherent states with output-frame amplitudes (default: the ideal mean field)."""
        if amplitudes is None:
            means = np.array([c.mean_amplitude() for c in target.core_states])
            amplitudes = target.unitary.matrix @ means + target.beta
        amplitudes = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amplitudes.shape != (target.modes,):
            raise ValidationError("need one coherent amplitude per mode")
        return cls("coherent_spoof", target, {"amplitudes": amplitudes})

    @classmethod
    def block_noniid(cls, target, good_count, bad_model):
        if int(good_count) != good_count or good_count < 0:
            raise ParameterError("good_count must be a non-negative integer")
        if bad_model.target.modes != target.modes:
            raise ValidationError("bad model acts on a different number of modes")
        return cls("block_noniid", target, {"good_count": int(good_count), "bad_model": bad_model})

    @property
    def tag(self):
        if self.kind == "lossy":
            return "lossy:" + ",".join(f"{t:g}" for t in self.params["tau"])
        if self.kind == "block_noniid":
            return f"block_noniid:{self.params['good_count']}:{self.params['bad_model'].tag}"
        return self.kind

    def _mode_samplers(self):
        t = self.target
        if self.kind == "ideal":
            return [_core_sampler(c) for c in t.core_states]
        if self.kind == "lossy":
            out = []
            for c, tau in zip(t.core_states, self.params["tau"]):
                rho = FockDensityMatrix.from_pure(c.coefficients)
                out.append(_density_sampler(apply_loss(rho, float(tau))))
            return out
        if self.kind == "substitute":
            return [_density_sampler(s) for s in self.params["states"]]
        raise AssertionError(self.kind)

    def _block(self, seed, index, start, n, samplers):
        t = self.target
        if self.kind == "coherent_spoof":
            amps = self.params["amplitudes"]
            cols = [amps[i] + _complex_normal(_generator(seed, _TAGS["coherent"], i, index), n) for i in range(t.modes)]
            return np.stack(cols, axis=1)
        if self.kind == "block_noniid":
            good = self.params["good_count"]
            bad = self.params["bad_model"]
            if start + n <= good:
                return ProverModel.ideal(t)._block(seed, index, start, n, samplers[0])
            if start >= good:
                return bad._block(seed, index, start, n, samplers[1])
            split = good - start
            head = ProverModel.ideal(t)._block(seed, index, start, n, samplers[0])[:split]
            tail = bad._block(seed, index, start, n, samplers[1])[split:]
            return np.concatenate([head, tail])
        tag = _TAGS["density"] if self.kind != "ideal" else _TAGS["core"]
        # mode-major fill keeps each draw contiguous
        alpha = np.empty((t.modes, n), dtype=complex)
        for i, draw in enumerate(samplers):
            alpha[i] = draw(_generator(seed, tag, i, index), n)
        return forward_transform(alpha.T, t.unitary, t.beta)

    def _samplers(self):
        if self.kind == "coherent_spoof":
            return None
        if self.kind == "block_noniid":
            return (ProverModel.ideal(self.target)._samplers(), self.params["bad_model"]._samplers())
        return self._mode_samplers()


def worker_count():
    """Worker cap from ``HETVERIFY_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("HETVERIFY_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError as exc:
        raise ParameterError(f"HETVERIFY_THREADS must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ParameterError("HETVERIFY_THREADS must be non-negative")
    return n or (os.cpu_count() or 1)


def iter_prover_blocks(model, shots, seed, block=BLOCK, workers=None):
    """Yield ``(start, gamma_block)`` pairs covering ``shots`` outcomes in order.

    Blocks are generated independently from their own streams, so the
    concatenation does not depend on ``workers``.
    """
    shots = _check_shots(shots)
    samplers = model._samplers()
    starts = list(range(0, shots, block))
    workers = worker_count() if workers is None else max(1, int(workers))

    def make(b):
        start = starts[b]
        return start, model._block(seed, b, start, min(block, shots - start), samplers)

    if workers == 1 or len(starts) <= 1:
        for b in range(len(starts)):
            yield make(b)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # bounded look-ahead keeps memory proportional to the worker count
        pending = []
        for b in range(len(starts)):
            pending.append(pool.submit(make, b))
            if len(pending) >= 2 * workers:
                yield pending.pop(0).result()
        for fut in pending:
            yield fut.result()


def sample_prover(model, shots, seed, workers=None):
    """Simulate ``shots`` heterodyne outcomes of ``model`` as a :class:`SampleBatch`."""
    shots = _check_shots(shots)
    data = np.empty((shots, model.target.modes), dtype=complex)
    for start, chunk in iter_prover_blocks(model, shots, seed, workers=workers):
        data[start : start + chunk.shape[0]] = chunk
    return SampleBatch(data, seed=int(seed), prover_tag=model.tag)


__all__ = [
    "BLOCK",
    "SampleBatch",
    "ProverModel",
    "sample_core_q",
    "sample_density_q",
    "forward_transform",
    "verifier_transform",
    "iter_prover_blocks",
    "sample_prover",
    "worker_count",
]
