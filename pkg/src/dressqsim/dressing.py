"""Dressing transformations: one static classical-noise realization per channel.

A channel ``a`` defines a unitary ``V_a``; the noisy Hamiltonian is
``H_a = V_a H V_a^dag``. For weak channels the linearized form
``H + i eps [H, P]`` is available per family.

Sign conventions (kept consistent between the exact and first-order forms):

* spin ``z``: ``V = prod_i exp(-i a_i Z_i)`` rotates ``X_i`` by ``2 a_i``.
* oscillator: ``V = prod exp(-i a_j m_j x_j) prod exp(-i beta_j p_j)``
  maps ``p -> p + a m`` and ``x -> x - beta``; ``beta`` is solved so the
  linear ``x`` coupling of the dressed Hamiltonian equals ``aprime``.
* spin-boson: ``V = exp(-i a0 Z) prod exp(a* b - a b^dag)`` maps
  ``b -> b + a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
import scipy.linalg

from .errors import ConfigError, DressingError
from .linalg import (
    DEFAULT_POLICY,
    PAULI_Y,
    PAULI_Z,
    NumericalPolicy,
    check_hermitian,
    commutator,
    conjugate,
    expm_antihermitian,
    expm_hermitian,
    kron_all,
)
from .models import (
    BcsSpec,
    FermionAlgebra,
    ModelSpec,
    OscillatorSpec,
    SpinBosonSpec,
    SpinModelSpec,
    annihilation,
    fermion_operator,
    hilbert_dim,
    oscillator_hamiltonian,
    quadratures,
    site_operator,
    spinboson_hamiltonian,
)

__all__ = [
    "NoNoise",
    "SpinZChannel",
    "OscillatorChannel",
    "SpinBosonChannel",
    "BcsChannel",
    "GenericChannel",
    "NoiseChannel",
    "ChannelEnsemble",
    "EnsembleDescriptor",
    "build_dressing_unitary",
    "build_bcs_dressing",
    "bcs_generator",
    "momentum_shift_couplings",
    "dress_exact",
    "dress_closed_form",
    "dress_first_order",
    "dressed_hamiltonians",
    "oscillator_position_shifts",
    "sample_ensemble",
    "scale_channel",
]


@dataclass(frozen=True)
class NoNoise:
    """The noiseless channel, ``V = I``."""


@dataclass(frozen=True)
class SpinZChannel:
    a: tuple[float, ...]


@dataclass(frozen=True)
class OscillatorChannel:
    a: tuple[float, ...]
    aprime: tuple[float, ...]


@dataclass(frozen=True)
class SpinBosonChannel:
    a0: float
    a: tuple[complex, ...] = ()


@dataclass(frozen=True)
class BcsChannel:
    q: int
    g: tuple[float, ...]
    qprime: int = 0
    angle: float = math.pi / 2


@dataclass(frozen=True, eq=False)
class GenericChannel:
    P: np.ndarray
    eps: float = 1.0


NoiseChannel = Union[NoNoise, SpinZChannel, OscillatorChannel, SpinBosonChannel, BcsChannel, GenericChannel]


@dataclass(frozen=True)
class ChannelEnsemble:
    """Weighted channels ``{(p_a, a)}`` with ``sum p_a = 1``."""

    entries: tuple[tuple[float, NoiseChannel], ...]
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        entries = tuple((float(p), ch) for p, ch in self.entries)
        if not entries:
            raise DressingError("ensemble has no channels")
        weights = np.array([p for p, _ in entries])
        if np.any(weights < 0):
            raise DressingError("ensemble weights must be non-negative")
        if abs(weights.sum() - 1.0) > DEFAULT_POLICY.weight_atol * max(1, len(entries)):
            raise DressingError(f"ensemble weights sum to {weights.sum():.15g}, expected 1")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def noiseless(cls) -> "ChannelEnsemble":
        return cls(((1.0, NoNoise()),), {"kind": "noiseless"})

    @property
    def weights(self) -> np.ndarray:
        return np.array([p for p, _ in self.entries])

    @property
    def channels(self) -> list:
        return [ch for _, ch in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def _incompatible(channel, model) -> DressingError:
    return DressingError(
        f"channel {type(channel).__name__} is incompatible with model {type(model).__name__}"
    )


def _check_length(values, n: int, name: str) -> None:
    if len(values) != n:
        raise DressingError(f"{name} has {len(values)} entries, model needs {n}")


def oscillator_position_shifts(spec: OscillatorSpec, aprime) -> np.ndarray:
    """Shifts ``beta`` with ``x -> x - beta`` producing the coupling ``sum aprime_j x_j``.

    The quadratic potential ``x^T K x / 2`` picks up ``-(K beta) . x`` under
    the shift, so ``beta = -K^{-1} aprime``. For uncoupled sites this is
    ``-aprime_j / k_j``.
    """
    return -np.linalg.solve(spec.stiffness_matrix(), np.asarray(aprime, dtype=float))


def bcs_generator(channel: BcsChannel, L: int) -> np.ndarray:
    """Single-particle antisymmetric generator on the down-spin modes.

    Entry ``[q-k, q'-k]`` carries ``+angle*g(k)`` and its transpose
    ``-angle*g(k)``; contributions of different ``k`` add.
    """
    _check_length(channel.g, L, "g")
    K = np.zeros((L, L))
    for k, gk in enumerate(channel.g):
        m, n = (channel.q - k) % L, (channel.qprime - k) % L
        K[m, n] += channel.angle * gk
        K[n, m] -= channel.angle * gk
    return K


def build_bcs_dressing(channel: BcsChannel, spec: BcsSpec, policy: NumericalPolicy = DEFAULT_POLICY):
    """Many-body ``V_q = exp(sum_mn K_mn c^dag_{m down} c_{n down})``."""
    L = spec.L
    if channel.q % L == channel.qprime % L:
        raise DressingError(f"q = q' = {channel.q % L} (mod L): the generator is degenerate")
    K = bcs_generator(channel, L)
    if np.any(np.asarray(channel.g) != 0) and not np.any(K):
        raise DressingError(
            f"couplings g={tuple(channel.g)} cancel exactly for L={L}, q={channel.q}, "
            f"q'={channel.qprime}; the channel would be the identity"
        )
    A = _bcs_many_body_generator(channel, spec)
    return expm_antihermitian(A, policy)


def momentum_shift_couplings(L: int, q: int, qprime: int = 0, angle: float = math.pi / 2) -> tuple[float, ...]:
    """Couplings ``g`` making ``V_q`` an exact down-spin momentum shift by ``q - q'``.

    The target single-particle map is the cyclic shift ``S^(q-q')`` (with one
    sign flipped when needed so it has a real logarithm). Raises when the
    shift is not reachable with generators supported on the ``(q-k, q'-k)``
    mode pairs, which happens for ``L >= 4`` in general.
    """
    d = (q - qprime) % L
    if d == 0:
        raise DressingError("q = q' (mod L): no shift to realize")
    target = np.roll(np.eye(L), d, axis=0)
    if np.linalg.det(target) < 0:
        target[:, 0] *= -1
    K = scipy.linalg.logm(target)
    if np.max(np.abs(K.imag)) > 1e-10:
        raise DressingError(f"shift by {d} on L={L} modes has no real generator")
    K = K.real
    basis = []
    for k in range(L):
        E = np.zeros((L, L))
        m, n = (q - k) % L, (qprime - k) % L
        E[m, n] += angle
        E[n, m] -= angle
        basis.append(E.ravel())
    M = np.array(basis).T
    g, *_ = np.linalg.lstsq(M, K.ravel(), rcond=None)
    if np.max(np.abs(M @ g - K.ravel())) > 1e-10:
        raise DressingError(f"shift by {d} on L={L} modes is not reachable with (q-k, q'-k) pair rotations")
    return tuple(float(x) for x in g)


def _spin_boson_mode_unitary(alpha: complex, n_max: int, policy) -> np.ndarray:
    b = annihilation(n_max)
    gen = np.conj(alpha) * b - alpha * b.conj().T
    return expm_antihermitian(gen, policy)


def build_dressing_unitary(channel: NoiseChannel, model: ModelSpec, policy: NumericalPolicy = DEFAULT_POLICY):
    """Exact dressing unitary on the model's (possibly truncated) Hilbert space.

    Bosonic displacements exponentiate the truncated generator, so ``V`` is
    exactly unitary on the kept levels.
    """
    dim = hilbert_dim(model)
    if isinstance(channel, NoNoise):
        return np.eye(dim, dtype=complex)
    if isinstance(channel, GenericChannel):
        P = check_hermitian(channel.P, policy)
        if P.shape[0] != dim:
            raise DressingError(f"generator dimension {P.shape[0]} does not match model dimension {dim}")
        return expm_hermitian(P, -1j * channel.eps, policy)
    if isinstance(channel, SpinZChannel):
        if not isinstance(model, SpinModelSpec):
            raise _incompatible(channel, model)
        _check_length(channel.a, model.n_qubits, "a")
        factors = [expm_antihermitian(-1j * a * PAULI_Z, policy) for a in channel.a]
        return kron_all(factors, policy)
    if isinstance(channel, OscillatorChannel):
        if not isinstance(model, OscillatorSpec):
            raise _incompatible(channel, model)
        _check_length(channel.a, model.n_sites, "a")
        _check_length(channel.aprime, model.n_sites, "aprime")
        beta = oscillator_position_shifts(model, channel.aprime)
        x_factors, p_factors = [], []
        for m, k, a, bj in zip(model.masses, model.stiffness, channel.a, beta):
            x, p, _, _ = quadratures(m, k, model.n_max)
            x_factors.append(expm_hermitian(x, -1j * a * m, policy))
            p_factors.append(expm_hermitian(p, -1j * bj, policy))
        return kron_all(x_factors, policy) @ kron_all(p_factors, policy)
    if isinstance(channel, SpinBosonChannel):
        if not isinstance(model, SpinBosonSpec):
            raise _incompatible(channel, model)
        _check_length(channel.a, len(model.modes), "a")
        factors = [expm_antihermitian(-1j * channel.a0 * PAULI_Z, policy)]
        factors += [_spin_boson_mode_unitary(alpha, model.n_max, policy) for alpha in channel.a]
        return kron_all(factors, policy)
    if isinstance(channel, BcsChannel):
        if not isinstance(model, BcsSpec):
            raise _incompatible(channel, model)
        return build_bcs_dressing(channel, model, policy)
    raise DressingError(f"unknown channel type {type(channel).__name__}")


def dress_exact(H, V, policy: NumericalPolicy = DEFAULT_POLICY) -> np.ndarray:
    return conjugate(H, V, policy)


def dress_closed_form(channel: NoiseChannel, model: ModelSpec, policy: NumericalPolicy = DEFAULT_POLICY):
    """Untruncated ``V H V^dag`` in closed form, projected onto the kept levels.

    Only defined for the bosonic families, where the dressing is a pure
    phase-space shift. Unlike :func:`dress_exact` on a truncated basis, this
    converges to the infinite model as ``n_max`` grows.
    """
    if isinstance(model, OscillatorSpec):
        if isinstance(channel, NoNoise):
            return oscillator_hamiltonian(model, policy=policy)
        if not isinstance(channel, OscillatorChannel):
            raise _incompatible(channel, model)
        beta = oscillator_position_shifts(model, channel.aprime)
        p_shift = np.asarray(channel.a) * np.asarray(model.masses)
        return oscillator_hamiltonian(model, x_shift=beta, p_shift=p_shift, policy=policy)
    if isinstance(model, SpinBosonSpec):
        if isinstance(channel, NoNoise):
            return spinboson_hamiltonian(model, policy=policy)
        if not isinstance(channel, SpinBosonChannel):
            raise _incompatible(channel, model)
        _check_length(channel.a, len(model.modes), "a")
        theta = 2 * channel.a0
        field_ = (model.B * math.cos(theta), model.B * math.sin(theta), 0.0)
        return spinboson_hamiltonian(model, spin_field=field_, displacements=channel.a, policy=policy)
    raise DressingError(f"no closed-form dressing for model {type(model).__name__}")


def dress_first_order(H, channel: NoiseChannel, model: ModelSpec, policy: NumericalPolicy = DEFAULT_POLICY):
    """Linearized dressed Hamiltonian, dropping constants and ``O(a^2)`` terms."""
    H = check_hermitian(H, policy)
    if isinstance(channel, NoNoise):
        return H.copy()
    if isinstance(channel, GenericChannel):
        P = check_hermitian(channel.P, policy)
        return _hermitize(H + 1j * channel.eps * commutator(H, P))
    if isinstance(channel, SpinZChannel):
        if not isinstance(model, SpinModelSpec):
            raise _incompatible(channel, model)
        _check_length(channel.a, model.n_qubits, "a")
        out = H.astype(complex)
        for i, a in enumerate(channel.a):
            out = out + 2 * model.B * a * site_operator(PAULI_Y, i, model.dims, policy)
        return _hermitize(out)
    if isinstance(channel, OscillatorChannel):
        if not isinstance(model, OscillatorSpec):
            raise _incompatible(channel, model)
        _check_length(channel.a, model.n_sites, "a")
        _check_length(channel.aprime, model.n_sites, "aprime")
        out = H.astype(complex)
        for j, (m, k, a, ap) in enumerate(zip(model.masses, model.stiffness, channel.a, channel.aprime)):
            x, p, _, _ = quadratures(m, k, model.n_max)
            out = out + site_operator(a * p + ap * x, j, model.dims, policy)
        return _hermitize(out)
    if isinstance(channel, SpinBosonChannel):
        if not isinstance(model, SpinBosonSpec):
            raise _incompatible(channel, model)
        _check_length(channel.a, len(model.modes), "a")
        dims = model.dims
        out = H.astype(complex) + 2 * model.B * channel.a0 * site_operator(PAULI_Y, 0, dims, policy)
        bz = sum(lam * 2 * complex(alpha).real for (_, lam), alpha in zip(model.modes, channel.a))
        out = out + bz * site_operator(PAULI_Z, 0, dims, policy)
        b = annihilation(model.n_max)
        for idx, ((omega, _), alpha) in enumerate(zip(model.modes, channel.a)):
            term = omega * (alpha * b.conj().T + np.conj(alpha) * b)
            out = out + site_operator(term, idx + 1, dims, policy)
        return _hermitize(out)
    if isinstance(channel, BcsChannel):
        if not isinstance(model, BcsSpec):
            raise _incompatible(channel, model)
        V_gen = _bcs_many_body_generator(channel, model)
        # V = exp(A) = exp(-i P) with P = iA, so H + i[H, P] = H - [H, A].
        return _hermitize(H - commutator(H, V_gen))
    raise DressingError(f"unknown channel type {type(channel).__name__}")


def _bcs_many_body_generator(channel: BcsChannel, spec: BcsSpec) -> np.ndarray:
    K = bcs_generator(channel, spec.L)
    alg = FermionAlgebra(spec.L)
    dim = 2 ** alg.n_modes
    A = np.zeros((dim, dim), dtype=complex)
    for m in range(spec.L):
        for n in range(spec.L):
            if K[m, n] != 0:
                A += K[m, n] * (
                    fermion_operator(alg, alg.mode_index(m, "down"), "create")
                    @ fermion_operator(alg, alg.mode_index(n, "down"), "annihilate")
                )
    return A


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def dressed_hamiltonians(
    H,
    ensemble: ChannelEnsemble,
    model: ModelSpec,
    mode: str = "exact",
    policy: NumericalPolicy = DEFAULT_POLICY,
) -> list[tuple[float, np.ndarray]]:
    """``[(p_a, H_a)]`` for every channel; ``mode`` is ``exact`` or ``first_order``."""
    out = []
    for p, ch in ensemble.entries:
        if mode == "exact":
            Ha = dress_exact(H, build_dressing_unitary(ch, model, policy), policy)
        elif mode == "first_order":
            Ha = dress_first_order(H, ch, model, policy)
        else:
            raise ConfigError(f"unknown dressing mode {mode!r}", key="dressing_mode")
        out.append((p, Ha))
    return out


def scale_channel(channel: NoiseChannel, eps: float) -> NoiseChannel:
    """Multiply every continuous noise parameter of ``channel`` by ``eps``."""
    if isinstance(channel, NoNoise):
        return channel
    if isinstance(channel, SpinZChannel):
        return SpinZChannel(tuple(eps * a for a in channel.a))
    if isinstance(channel, OscillatorChannel):
        return OscillatorChannel(tuple(eps * a for a in channel.a), tuple(eps * a for a in channel.aprime))
    if isinstance(channel, SpinBosonChannel):
        return SpinBosonChannel(eps * channel.a0, tuple(eps * a for a in channel.a))
    if isinstance(channel, BcsChannel):
        return BcsChannel(channel.q, tuple(eps * g for g in channel.g), channel.qprime, channel.angle)
    if isinstance(channel, GenericChannel):
        return GenericChannel(channel.P, eps * channel.eps)
    raise DressingError(f"unknown channel type {type(channel).__name__}")


# ---------------------------------------------------------------- sampling

FAMILIES = ("spin_z", "oscillator", "spin_boson", "bcs_q", "generic")
DISTRIBUTIONS = ("gaussian", "uniform", "discrete")


@dataclass(frozen=True)
class EnsembleDescriptor:
    """How to build a :class:`ChannelEnsemble`.

    ``gaussian`` draws every scalar parameter from ``N(0, sigma)``,
    ``uniform`` from ``U(-half_width, half_width)``; complex parameters draw
    real and imaginary parts independently. ``discrete`` returns
    ``channels`` with ``weights`` (uniform when omitted).
    """

    family: str
    distribution: str = "gaussian"
    count: int = 1
    sigma: float = 0.0
    half_width: float = 0.0
    q: int = 1
    qprime: int = 0
    angle: float = math.pi / 2
    eps: float = 1.0
    channels: tuple = ()
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; expected one of {FAMILIES}", key="ensemble.family")
        if self.distribution not in DISTRIBUTIONS:
            raise ConfigError(
                f"unknown distribution {self.distribution!r}; expected one of {DISTRIBUTIONS}",
                key="ensemble.distribution",
            )
        if self.distribution != "discrete" and self.count < 1:
            raise ConfigError("count must be at least 1", key="ensemble.count")
        if self.sigma < 0 or not math.isfinite(self.sigma):
            raise ConfigError("sigma must be finite and non-negative", key="ensemble.sigma")
        if self.half_width < 0 or not math.isfinite(self.half_width):
            raise ConfigError("half_width must be finite and non-negative", key="ensemble.half_width")
        if self.distribution == "discrete" and not self.channels:
            raise ConfigError("discrete ensemble needs an explicit channel list", key="ensemble.channels")


def _draw(rng: np.random.Generator, desc: EnsembleDescriptor, size) -> np.ndarray:
    if desc.distribution == "gaussian":
        return rng.normal(0.0, desc.sigma, size) if desc.sigma > 0 else np.zeros(size)
    return rng.uniform(-desc.half_width, desc.half_width, size) if desc.half_width > 0 else np.zeros(size)


def _sample_channel(desc: EnsembleDescriptor, model: ModelSpec, rng: np.random.Generator) -> NoiseChannel:
    fam = desc.family
    if fam == "spin_z":
        if not isinstance(model, SpinModelSpec):
            raise _incompatible(SpinZChannel(()), model)
        return SpinZChannel(tuple(_draw(rng, desc, model.n_qubits)))
    if fam == "oscillator":
        if not isinstance(model, OscillatorSpec):
            raise _incompatible(OscillatorChannel((), ()), model)
        return OscillatorChannel(tuple(_draw(rng, desc, model.n_sites)), tuple(_draw(rng, desc, model.n_sites)))
    if fam == "spin_boson":
        if not isinstance(model, SpinBosonSpec):
            raise _incompatible(SpinBosonChannel(0.0), model)
        a0 = float(_draw(rng, desc, 1)[0])
        parts = _draw(rng, desc, (len(model.modes), 2))
        return SpinBosonChannel(a0, tuple(complex(re, im) for re, im in parts))
    if fam == "bcs_q":
        if not isinstance(model, BcsSpec):
            raise _incompatible(BcsChannel(1, ()), model)
        return BcsChannel(desc.q, tuple(_draw(rng, desc, model.L)), desc.qprime, desc.angle)
    dim = hilbert_dim(model)
    re = _draw(rng, desc, (dim, dim))
    im = _draw(rng, desc, (dim, dim))
    upper = np.triu(re + 1j * im, 1)
    P = upper + upper.conj().T + np.diag(np.diag(re))
    return GenericChannel(P, desc.eps)


def sample_ensemble(desc: EnsembleDescriptor, master_seed: int, model: ModelSpec) -> ChannelEnsemble:
    """Draw ``desc.count`` equally weighted channels.

    Channel ``i`` uses its own generator seeded from ``(master_seed, i)``,
    so entry ``i`` does not depend on ``count`` or on evaluation order.
    """
    provenance = {
        "family": desc.family,
        "distribution": desc.distribution,
        "count": desc.count,
        "sigma": desc.sigma,
        "half_width": desc.half_width,
        "master_seed": int(master_seed),
    }
    if desc.distribution == "discrete":
        n = len(desc.channels)
        weights = desc.weights if desc.weights is not None else (1.0 / n,) * n
        if len(weights) != n:
            raise ConfigError(f"{len(weights)} weights for {n} channels", key="ensemble.weights")
        return ChannelEnsemble(tuple(zip(weights, desc.channels)), provenance)
    entries = []
    for i in range(desc.count):
        rng = np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=(i,)))
        entries.append((1.0 / desc.count, _sample_channel(desc, model, rng)))
    return ChannelEnsemble(tuple(entries), provenance)
