"""State model and exact truncated-Fock-space oracle.

Single-mode core states, multimode targets ``S(xi) D(beta) U (x)_i |C_i>``,
truncated density matrices, and brute-force evaluation of fidelities,
estimator expectations and heterodyne POVM values. Everything here is meant
for desk-scale cross-validation (a handful of modes, ``d <= 10`` per mode).
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ._combinatorics import binom
from .errors import ParameterError, TruncationError, ValidationError

NORM_TOL = 1e-10
UNITARY_TOL = 1e-8
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-8
PSD_TOL = 1e-9
DEFICIT_TOL = 1e-6


def _as_vector(values):
    return np.atleast_1d(np.asarray(values, dtype=complex)).copy()


@dataclass(frozen=True, eq=False)
class CoreState:
    """Normalised single-mode pure state with finite Fock support.

    ``coefficients[n]`` is the amplitude of ``|n>``; the support size ``c`` is
    the length of the vector.
    """

    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = _as_vector(self.coefficients)
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ValidationError("core state needs at least one coefficient")
        norm = float(np.sum(np.abs(coeffs) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"core state is not normalised (norm^2 = {norm!r})")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def fock(cls, n):
        coeffs = np.zeros(n + 1, dtype=complex)
        coeffs[n] = 1.0
        return cls(coeffs)

    @classmethod
    def normalised(cls, coefficients):
        coeffs = _as_vector(coefficients)
        return cls(coeffs / np.linalg.norm(coeffs))

    @property
    def support(self):
        return self.coefficients.size

    def padded(self, dim):
        if dim < self.support:
            raise ValidationError(f"truncation {dim} is smaller than the core support {self.support}")
        out = np.zeros(dim, dtype=complex)
        out[: self.support] = self.coefficients
        return out

    def mean_amplitude(self):
        """``<C| a |C>``."""
        c = self.coefficients
        n = np.arange(1, c.size)
        return complex(np.sum(np.conj(c[:-1]) * np.sqrt(n) * c[1:]))

    def __eq__(self, other):
        return isinstance(other, CoreState) and np.array_equal(self.coefficients, other.coefficients)

    def __hash__(self):
        return hash(self.coefficients.tobytes())

    def __repr__(self):
        return f"CoreState({self.coefficients.tolist()!r})"


@dataclass(frozen=True, eq=False)
class PassiveUnitary:
    """``m x m`` unitary describing a passive linear interferometer."""

    matrix: np.ndarray

    def __post_init__(self):
        u = np.atleast_2d(np.asarray(self.matrix, dtype=complex)).copy()
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValidationError(f"unitary must be square, got shape {u.shape}")
        err = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
        if err > UNITARY_TOL:
            raise ValidationError(f"matrix is not unitary (max |U^dag U - 1| = {err:.3g})")
        u.setflags(write=False)
        object.__setattr__(self, "matrix", u)

    @classmethod
    def identity(cls, m):
        return cls(np.eye(m, dtype=complex))

    @property
    def modes(self):
        return self.matrix.shape[0]

    @property
    def dagger(self):
        return PassiveUnitary(self.matrix.conj().T)

    def __eq__(self, other):
        return isinstance(other, PassiveUnitary) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash(self.matrix.tobytes())


@dataclass(frozen=True, eq=False)
class TargetSpec:
    """Target ``|psi> = S(xi) D(beta) U (x)_i |C_i>`` over ``m`` modes."""

    core_states: tuple
    unitary: PassiveUnitary
    beta: np.ndarray = None
    xi: np.ndarray = None

    def __post_init__(self):
        cores = tuple(c if isinstance(c, CoreState) else CoreState(c) for c in self.core_states)
        m = len(cores)
        if m == 0:
            raise ValidationError("target needs at least one mode")
        unitary = self.unitary if isinstance(self.unitary, PassiveUnitary) else PassiveUnitary(self.unitary)
        if unitary.modes != m:
            raise ValidationError(f"unitary acts on {unitary.modes} modes, target has {m}")
        beta = np.zeros(m, dtype=complex) if self.beta is None else _as_vector(self.beta)
        xi = np.zeros(m, dtype=complex) if self.xi is None else _as_vector(self.xi)
        if beta.shape != (m,) or xi.shape != (m,):
            raise ValidationError("beta and xi must have one entry per mode")
        beta.setflags(write=False)
        xi.setflags(write=False)
        object.__setattr__(self, "core_states", cores)
        object.__setattr__(self, "unitary", unitary)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "xi", xi)

    @property
    def modes(self):
        return len(self.core_states)

    @classmethod
    def product(cls, core_states):
        return cls(tuple(core_states), PassiveUnitary.identity(len(core_states)))

    @classmethod
    def boson_sampling(cls, unitary, n_photons):
        """Single photons in the first ``n_photons`` modes, vacuum elsewhere."""
        unitary = unitary if isinstance(unitary, PassiveUnitary) else PassiveUnitary(unitary)
        m = unitary.modes
        if not 0 <= n_photons <= m:
            raise ParameterError(f"need 0 <= n_photons <= modes, got {n_photons} and {m}")
        cores = [CoreState.fock(1)] * n_photons + [CoreState.fock(0)] * (m - n_photons)
        return cls(tuple(cores), unitary)

    def __eq__(self, other):
        return (
            isinstance(other, TargetSpec)
            and self.core_states == other.core_states
            and self.unitary == other.unitary
            and np.array_equal(self.beta, other.beta)
            and np.array_equal(self.xi, other.xi)
        )

    def __hash__(self):
        return hash((self.core_states, self.unitary, self.beta.tobytes(), self.xi.tobytes()))


@dataclass(frozen=True, eq=False)
class FockDensityMatrix:
    """Truncated Fock-basis density matrix over one or more modes.

    ``dims`` lists the per-mode truncations; ``entries`` is the
    ``prod(dims) x prod(dims)`` matrix in row-major (C-order) tensor basis.
    """

    entries: np.ndarray
    dims: tuple = field(default=None)

    def __post_init__(self):
        rho = np.atleast_2d(np.asarray(self.entries, dtype=complex)).copy()
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValidationError(f"density matrix must be square, got {rho.shape}")
        dims = (rho.shape[0],) if self.dims is None else tuple(int(d) for d in self.dims)
        if int(np.prod(dims)) != rho.shape[0]:
            raise ValidationError(f"dims {dims} do not match matrix size {rho.shape[0]}")
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > HERMITIAN_TOL:
            raise ValidationError(f"density matrix is not Hermitian (deviation {herm:.3g})")
        rho = 0.5 * (rho + rho.conj().T)
        tr = float(np.real(np.trace(rho)))
        if not 1.0 - TRACE_TOL <= tr <= 1.0 + HERMITIAN_TOL:
            raise ValidationError(f"trace {tr!r} outside [1 - {TRACE_TOL}, 1]")
        low = float(np.min(np.linalg.eigvalsh(rho)))
        if low < -PSD_TOL:
            raise ValidationError(f"density matrix has eigenvalue {low:.3g} < -{PSD_TOL}")
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self):
        return self.entries.shape[0]

    @property
    def modes(self):
        return len(self.dims)

    @classmethod
    def from_pure(cls, vector, dims=None):
        v = _as_vector(vector)
        return cls(np.outer(v, v.conj()), dims)

    @classmethod
    def fock(cls, n, dim):
        v = np.zeros(dim, dtype=complex)
        v[n] = 1.0
        return cls.from_pure(v)

    @classmethod
    def mixture(cls, weights, states):
        weights = np.asarray(weights, dtype=float)
        entries = sum(w * s.entries for w, s in zip(weights, states))
        return cls(entries, states[0].dims)

    @classmethod
    def coherent(cls, alpha, dim):
        v = coherent_fock(alpha, dim)
        return cls(np.outer(v, v.conj()))

    def tensor(self, other):
        return FockDensityMatrix(np.kron(self.entries, other.entries), self.dims + other.dims)

    def reduced(self, mode):
        """Partial trace onto a single mode."""
        m = self.modes
        if m == 1:
            return self
        t = self.entries.reshape(self.dims + self.dims)
        keep = mode
        axes_in = list(range(2 * m))
        for i in range(m):
            if i != keep:
                axes_in[m + i] = i
        out = np.einsum(t, axes_in, [keep, m + keep])
        return FockDensityMatrix(out)

    def spectral(self):
        """Eigenpairs with tiny negative eigenvalues clipped and weights renormalised."""
        w, v = np.linalg.eigh(self.entries)
        w = np.clip(w, 0.0, None)
        w = w / w.sum()
        return w, v


def coherent_fock(alpha, dim):
    """Truncated Fock amplitudes of the coherent state ``|alpha>``."""
    n = np.arange(dim)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    alpha = complex(alpha)
    if alpha == 0:
        v = np.zeros(dim, dtype=complex)
        v[0] = 1.0
        return v
    mag = np.exp(-0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * log_fact)
    return mag * np.exp(1j * n * np.angle(alpha))


def annihilation(dim):
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def displacement_operator(beta, dim):
    """Truncated ``exp(beta a^dag - conj(beta) a)``."""
    a = annihilation(dim)
    return scipy.linalg.expm(beta * a.conj().T - np.conj(beta) * a)


def squeezing_operator(xi, dim):
    """Truncated ``exp((conj(xi) a^2 - xi a^dag^2) / 2)``."""
    a = annihilation(dim)
    a2 = a @ a
    return scipy.linalg.expm(0.5 * (np.conj(xi) * a2 - xi * a2.conj().T))


def _working_dim(dim, alpha=0.0, xi=0.0):
    r = abs(xi)
    spread = abs(alpha) ** 2 * math.exp(2 * r) + math.sinh(r) ** 2
    return int(dim + 40 + 8 * spread)


def squeezed_coherent_fock(alpha, xi, dim, tol=DEFICIT_TOL, return_deficit=False):
    """Fock amplitudes of ``S(xi) D(alpha) |0>`` truncated to ``dim`` levels.

    The operators are exponentiated in a larger working space; the returned
    vector holds its first ``dim`` entries, and the missing norm is the
    truncation deficit. Raises :class:`TruncationError` when it exceeds ``tol``.
    """
    work = _working_dim(dim, alpha, xi)
    vac = np.zeros(work, dtype=complex)
    vac[0] = 1.0
    v = squeezing_operator(xi, work) @ (displacement_operator(alpha, work) @ vac)
    v = v[:dim]
    deficit = max(0.0, 1.0 - float(np.vdot(v, v).real))
    if deficit > tol:
        raise TruncationError(
            f"truncation {dim} loses norm {deficit:.3g} for alpha={alpha}, xi={xi}", deficit
        )
    return (v, deficit) if return_deficit else v


def _loss_kraus(tau, dim):
    ops = []
    for j in range(dim):
        e = np.zeros((dim, dim))
        for n in range(j, dim):
            e[n - j, n] = math.sqrt(binom(n, j) * tau ** (n - j) * (1.0 - tau) ** j)
        ops.append(e)
    return ops


def apply_loss(rho, tau, mode=None):
    """Pure-loss channel with transmissivity ``tau`` on one mode (all modes if ``mode`` is None)."""
    if not 0.0 <= tau <= 1.0:
        raise ParameterError(f"transmissivity must lie in [0, 1], got {tau!r}")
    modes = range(rho.modes) if mode is None else [mode]
    entries = rho.entries
    for i in modes:
        d = rho.dims[i]
        kraus = _loss_kraus(tau, d)
        out = np.zeros_like(entries)
        for e in kraus:
            op = _embed(e, i, rho.dims)
            out += op @ entries @ op.conj().T
        entries = out
    return FockDensityMatrix(entries, rho.dims)


def _embed(op, mode, dims):
    out = np.ones((1, 1))
    for i, d in enumerate(dims):
        out = np.kron(out, op if i == mode else np.eye(d))
    return out


def _target_vector(target, dims):
    if isinstance(target, CoreState):
        target = [target]
    if isinstance(target, (list, tuple)):
        if len(target) != len(dims):
            raise ValidationError(f"target has {len(target)} modes, state has {len(dims)}")
        v = np.ones(1, dtype=complex)
        for core, d in zip(target, dims):
            core = core if isinstance(core, CoreState) else CoreState(core)
            v = np.kron(v, core.padded(d))
        return v
    v = _as_vector(target)
    if v.size != int(np.prod(dims)):
        raise ValidationError("target vector does not match the state dimension")
    return v


def fidelity_pure(target, rho):
    """``<psi| rho |psi>`` for a pure target (core state, product of core states, or vector)."""
    v = _target_vector(target, rho.dims)
    f = float(np.real(np.vdot(v, rho.entries @ v)))
    return min(max(f, 0.0), 1.0)


def expectation_g_exact(rho, k, l, cfg):
    """Exact Q-function expectation of ``g_kl`` for a truncated single-mode ``rho``."""
    if rho.modes != 1:
        raise ValidationError("expectation_g_exact needs a single-mode state")
    d = rho.dim
    r = rho.entries
    if max(k, l) >= d:
        return 0j
    total = complex(r[k, l])
    sign = -1.0 if cfg.p % 2 == 0 else 1.0
    tail = 0j
    for q in range(cfg.p, d - max(k, l)):
        weight = cfg.eta**q * binom(q - 1, cfg.p - 1) * math.sqrt(binom(k + q, k) * binom(l + q, l))
        tail += r[k + q, l + q] * weight
    return total + sign * tail


def witness_exact(per_mode_fidelities):
    """Fidelity witness ``1 - sum_i (1 - F_i)``."""
    f = np.asarray(per_mode_fidelities, dtype=float)
    if np.any(f < 0.0) or np.any(f > 1.0):
        raise ParameterError("per-mode fidelities must lie in [0, 1]")
    return float(1.0 - np.sum(1.0 - f))


def haar_unitary(m, seed):
    """Haar-random ``m x m`` unitary from the QR decomposition of a Ginibre matrix."""
    if m < 1:
        raise ParameterError(f"need m >= 1, got {m}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return PassiveUnitary(q * (d / np.abs(d)))


# -- multimode Fock-space machinery -------------------------------------------


def _apply_mode(tensor, op, mode):
    out = np.tensordot(op, tensor, axes=([1], [mode]))
    return np.moveaxis(out, 0, mode)


def _givens_factors(u):
    """Write ``u = G_1^dag ... G_K^dag D`` with adjacent-mode rotations ``G`` and diagonal ``D``.

    Returns ``(rotations, phases)`` where ``rotations`` lists ``(i, w)`` with
    ``w`` the 2x2 block of ``G^dag`` on modes ``(i, i + 1)``, in the order
    ``G_1^dag, ..., G_K^dag``.
    """
    a = np.array(u, dtype=complex)
    m = a.shape[0]
    rotations = []
    for c in range(m - 1):
        for r in range(m - 1, c, -1):
            x, y = a[r - 1, c], a[r, c]
            norm = math.hypot(abs(x), abs(y))
            if abs(y) == 0.0 or norm == 0.0:
                continue
            g = np.array([[np.conj(x), np.conj(y)], [-y, x]]) / norm
            a[[r - 1, r], :] = g @ a[[r - 1, r], :]
            rotations.append((r - 1, g.conj().T))
    return rotations, np.diag(a).copy()


def _sector_operator(w, k):
    """Action of the 2x2 unitary ``w`` on the two-mode states with ``k`` photons.

    Basis ``|p, k - p>``, ``p = 0..k``; built from the Hermitian generator
    ``h`` with ``w = exp(i h)``, which is tridiagonal in this basis.
    """
    vals, vecs = np.linalg.eig(w)
    h = (vecs * np.angle(vals)) @ np.linalg.inv(vecs)
    h = 0.5 * (h + h.conj().T)
    p = np.arange(k + 1)
    gen = np.diag(h[0, 0].real * p + h[1, 1].real * (k - p)).astype(complex)
    # h01 a_0^dag a_1 : |p, k-p> -> sqrt((p+1)(k-p)) |p+1, k-p-1>
    off = h[0, 1] * np.sqrt((p[:-1] + 1.0) * (k - p[:-1]))
    gen[p[1:], p[:-1]] = off
    gen[p[:-1], p[1:]] = np.conj(off)
    e, v = np.linalg.eigh(gen)
    return (v * np.exp(1j * e)) @ v.conj().T


def _two_mode_action(tensor, w, i, cutoff):
    t = np.moveaxis(tensor, (i, i + 1), (0, 1))
    out = np.zeros_like(t)
    for k in range(cutoff):
        p = np.arange(k + 1)
        block = t[p, k - p]
        out[p, k - p] = np.tensordot(_sector_operator(w, k), block, axes=([1], [0]))
    return np.moveaxis(out, (0, 1), (i, i + 1))


def passive_fock_operator_action(tensor, unitary):
    """Apply the Fock-space operator of a passive interferometer to ``tensor``.

    ``U`` is factored into adjacent two-mode rotations and phases; each factor
    conserves photon number and acts exactly on the states whose total photon
    number is below the per-mode cutoff. Amplitudes at or above that total are
    dropped.
    """
    u = unitary.matrix if isinstance(unitary, PassiveUnitary) else np.asarray(unitary, dtype=complex)
    shape = tensor.shape
    m = len(shape)
    if u.shape != (m, m):
        raise ValidationError(f"unitary of shape {u.shape} does not act on {m} modes")
    cutoff = min(shape)
    grids = np.meshgrid(*[np.arange(d) for d in shape], indexing="ij", sparse=True)
    total = sum(grids) if m else np.zeros(())
    out = np.where(total < cutoff, tensor, 0).astype(complex)
    if m == 0:
        return out
    rotations, phases = _givens_factors(u)
    # operators compose like the matrices, so the rightmost factor acts first
    for i, ph in enumerate(phases):
        n = np.arange(shape[i]).reshape((-1,) + (1,) * (m - 1 - i))
        out = out * np.exp(1j * np.angle(ph) * n)
    for i, w in reversed(rotations):
        out = _two_mode_action(out, w, i, cutoff)
    return out


def _apply_gaussian_layer(tensor, beta, xi):
    d = tensor.shape
    for i in range(len(d)):
        if beta[i] != 0:
            tensor = _apply_mode(tensor, displacement_operator(beta[i], d[i]), i)
        if xi[i] != 0:
            tensor = _apply_mode(tensor, squeezing_operator(xi[i], d[i]), i)
    return tensor


def _default_cutoff(dims, scale):
    return int(sum(d - 1 for d in dims) + 1 + 16 + 6 * scale)


def target_state_vector(target, dims, cutoff=None, tol=DEFICIT_TOL, return_deficit=False):
    """Amplitudes of ``S(xi) D(beta) U (x)_i |C_i>`` in the truncation ``dims``."""
    dims = tuple(dims)
    if len(dims) != target.modes:
        raise ValidationError("dims must list one truncation per mode")
    scale = float(np.max(np.abs(target.beta)) ** 2 + np.max(np.sinh(np.abs(target.xi))) ** 2)
    scale += sum(c.support for c in target.core_states)
    cutoff = cutoff or _default_cutoff(dims, scale)
    tensor = np.array(1.0 + 0j)
    for core in target.core_states:
        tensor = np.multiply.outer(tensor, core.padded(cutoff))
    tensor = passive_fock_operator_action(tensor, target.unitary)
    tensor = _apply_gaussian_layer(tensor, target.beta, target.xi)
    v = tensor[tuple(slice(0, d) for d in dims)].reshape(-1)
    deficit = max(0.0, 1.0 - float(np.vdot(v, v).real))
    if deficit > tol:
        raise TruncationError(f"truncation {dims} loses norm {deficit:.3g} of the target", deficit)
    return (v, deficit) if return_deficit else v


def input_frame_reduced_states(rho, target, cutoff=None, tol=DEFICIT_TOL):
    """Single-mode reduced states of ``V^dag rho V`` with ``V = S(xi) D(beta) U``.

    These are the states whose fidelities with the core states ``C_i`` enter
    the exact fidelity witness of a multimode target.
    """
    dims = rho.dims
    if len(dims) != target.modes:
        raise ValidationError("state and target have different numbers of modes")
    scale = float(np.max(np.abs(target.beta)) ** 2 + np.max(np.sinh(np.abs(target.xi))) ** 2)
    cutoff = cutoff or _default_cutoff(dims, scale)
    weights, vecs = rho.spectral()
    m = len(dims)
    reduced = [np.zeros((cutoff, cutoff), dtype=complex) for _ in range(m)]
    kept = 0.0
    udag = PassiveUnitary(target.unitary.matrix.conj().T)
    for w, v in zip(weights, vecs.T):
        if w <= 0:
            continue
        t = np.zeros((cutoff,) * m, dtype=complex)
        t[tuple(slice(0, d) for d in dims)] = v.reshape(dims)
        for i in range(m):
            if target.xi[i] != 0:
                t = _apply_mode(t, squeezing_operator(-target.xi[i], cutoff), i)
            if target.beta[i] != 0:
                t = _apply_mode(t, displacement_operator(-target.beta[i], cutoff), i)
        t = passive_fock_operator_action(t, udag)
        kept += w * float(np.vdot(t, t).real)
        for i in range(m):
            flat = np.moveaxis(t, i, 0).reshape(cutoff, -1)
            reduced[i] += w * flat @ flat.conj().T
    deficit = max(0.0, 1.0 - kept)
    if deficit > tol:
        raise TruncationError(f"cutoff {cutoff} loses norm {deficit:.3g} of V^dag rho V", deficit)
    out = []
    for r in reduced:
        r = 0.5 * (r + r.conj().T)
        r = r / np.real(np.trace(r))
        out.append(FockDensityMatrix(r))
    return out


def povm_value_direct(rho, gamma, xi):
    """``Tr(rho Pi^xi_gamma)`` from product squeezed-coherent amplitudes."""
    gamma = _as_vector(gamma)
    xi = _as_vector(xi)
    v = np.ones(1, dtype=complex)
    for g, x, d in zip(gamma, xi, rho.dims):
        v = np.kron(v, squeezed_coherent_fock(g, x, d, tol=1.0))
    return float(np.real(np.vdot(v, rho.entries @ v))) / math.pi ** rho.modes


def povm_value_transformed(rho, unitary, beta, xi, alpha, cutoff=None):
    """``Tr(V^dag rho V Pi^0_alpha)`` with ``V = S(xi) D(beta) U`` applied in Fock space."""
    dims = rho.dims
    beta = _as_vector(beta)
    xi = _as_vector(xi)
    alpha = _as_vector(alpha)
    u = unitary.matrix if isinstance(unitary, PassiveUnitary) else np.asarray(unitary, dtype=complex)
    mean = float(np.sum(np.abs(alpha) ** 2))
    scale = float(np.max(np.abs(beta)) ** 2 + np.max(np.sinh(np.abs(xi))) ** 2)
    cutoff = cutoff or int(max(dims) + 12 + mean + 8 * math.sqrt(mean) + 6 * scale)
    tensor = np.array(1.0 + 0j)
    for a in alpha:
        tensor = np.multiply.outer(tensor, coherent_fock(a, cutoff))
    tensor = passive_fock_operator_action(tensor, u)
    tensor = _apply_gaussian_layer(tensor, beta, xi)
    v = tensor[tuple(slice(0, d) for d in dims)].reshape(-1)
    return float(np.real(np.vdot(v, rho.entries @ v))) / math.pi ** rho.modes


def random_density_matrix(dims, rank=None, seed=None):
    """Random mixed state with Ginibre-distributed eigenvectors."""
    dims = (dims,) if np.isscalar(dims) else tuple(dims)
    d = int(np.prod(dims))
    rank = d if rank is None else rank
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return FockDensityMatrix(rho / np.trace(rho).real, dims)


def random_core_state(support, seed=None):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(support) + 1j * rng.standard_normal(support)
    return CoreState.normalised(v)


__all__ = [
    "CoreState",
    "PassiveUnitary",
    "TargetSpec",
    "FockDensityMatrix",
    "coherent_fock",
    "squeezed_coherent_fock",
    "displacement_operator",
    "squeezing_operator",
    "apply_loss",
    "fidelity_pure",
    "expectation_g_exact",
    "witness_exact",
    "haar_unitary",
    "passive_fock_operator_action",
    "target_state_vector",
    "input_frame_reduced_states",
    "povm_value_direct",
    "povm_value_transformed",
    "random_density_matrix",
    "random_core_state",
]
