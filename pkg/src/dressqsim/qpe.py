"""Generalized quantum phase estimation over a classical mixture of channels.

Phase convention: ``E t = -pi j / 2^(n-1)``, i.e. register outcome ``j``
estimates the phase ``phi = frac(-E t / 2 pi) = j / 2^n``. Energies are
reported in the alias window ``[-pi/t, pi/t)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dressing import ChannelEnsemble, NoNoise, build_dressing_unitary, dress_exact, dress_first_order
from .errors import CapacityError, ConfigError, ContractViolation
from .evolution import Propagator, map_channels
from .linalg import DEFAULT_POLICY, NumericalPolicy, Spectrum, eigh, pairwise_sum, spectral_norm

__all__ = [
    "QpeConfig",
    "QpeResult",
    "default_evolution_time",
    "channel_coefficients",
    "kernel_probabilities",
    "qpe_kernel_distribution",
    "qpe_circuit_distribution",
    "inverse_qft",
    "energy_estimate",
    "run_generalized_qpe",
]

_MAX_AMPLITUDES = 2**20


def default_evolution_time(H, policy: NumericalPolicy = DEFAULT_POLICY) -> float:
    """``0.9 pi / ||H||``: keeps the whole spectrum inside one alias window."""
    norm = spectral_norm(H, policy)
    return 0.9 * np.pi / norm if norm > 0 else 1.0


@dataclass
class QpeConfig:
    """Generalized-QPE run settings.

    Give the initial state either as ``initial_coefficients`` over the
    noiseless eigenbasis or as a state vector ``initial_state`` in the
    computational basis. ``reading`` selects how a channel sees the state:
    ``"reexpand"`` keeps the physical state fixed and re-expands it in the
    dressed eigenbasis; ``"dressed"`` prepares ``V_a |psi>`` instead.
    """

    n_register: int
    ensemble: ChannelEnsemble = field(default_factory=ChannelEnsemble.noiseless)
    t_evolution: float | None = None
    initial_coefficients: np.ndarray | None = None
    initial_state: np.ndarray | None = None
    mode: str = "kernel"
    reading: str = "reexpand"
    dressing: str = "exact"

    def __post_init__(self):
        if self.n_register < 1:
            raise ConfigError("n_register must be at least 1", key="qpe.n_register")
        if self.mode not in ("kernel", "circuit"):
            raise ConfigError(f"unknown mode {self.mode!r}", key="qpe.mode")
        if self.mode == "circuit" and self.n_register > 12:
            raise ConfigError("circuit mode supports at most 12 register qubits", key="qpe.n_register")
        if self.reading not in ("reexpand", "dressed"):
            raise ConfigError(f"unknown reading {self.reading!r}", key="qpe.reading")
        if self.dressing not in ("exact", "first_order"):
            raise ConfigError(f"unknown dressing mode {self.dressing!r}", key="dressing_mode")
        if (self.initial_coefficients is None) == (self.initial_state is None):
            raise ConfigError("give exactly one of initial_coefficients or initial_state", key="qpe.initial_state")


@dataclass
class QpeResult:
    n_register: int
    t: float
    histogram: np.ndarray
    per_channel: list[np.ndarray] | None
    energy_estimates: list[tuple[int, float, float]]

    def support(self, floor: float = DEFAULT_POLICY.support_floor) -> set[int]:
        return {int(j) for j in np.flatnonzero(self.histogram > floor)}


def _normalized(c, policy: NumericalPolicy) -> np.ndarray:
    c = np.asarray(c, dtype=complex).ravel()
    if abs(np.vdot(c, c).real - 1) > policy.coefficient_atol:
        raise ContractViolation(f"coefficients are not normalized (norm^2 = {np.vdot(c, c).real:.15g})")
    return c


def channel_coefficients(C, V, spectrum: Spectrum, policy: NumericalPolicy = DEFAULT_POLICY) -> np.ndarray:
    """``C^a_u = sum_v <u| V^dag |v> C_v`` over the noiseless eigenvectors."""
    C = _normalized(C, policy)
    V = np.asarray(V, dtype=complex)
    W = spectrum.eigenvectors
    if V.shape != W.shape or len(C) != W.shape[0]:
        raise ContractViolation(f"dimension mismatch: C {C.shape}, V {V.shape}, eigenbasis {W.shape}")
    Ca = W.conj().T @ V.conj().T @ W @ C
    return _normalized(Ca, policy)


def kernel_probabilities(phi, n: int) -> np.ndarray:
    """``|K_n(phi, j)|^2`` for every ``j``; rows follow ``phi``.

    ``|K|^2 = sin^2(2^n pi d) / (4^n sin^2(pi d))`` with ``d = phi - j/2^n``,
    evaluated through the wrapped offset so exact hits give exactly 1.
    """
    N = 2**n
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    d = phi[:, None] - np.arange(N)[None, :] / N
    d = d - np.round(d)
    small = np.abs(d) < 1e-14
    safe = np.where(small, 0.5, d)
    p = (np.sin(N * np.pi * safe) / (N * np.sin(np.pi * safe))) ** 2
    return np.where(small, 1.0, p)


def _group_degenerate(energies, weights, tol: float):
    order = np.argsort(energies, kind="stable")
    e = np.asarray(energies, dtype=float)[order]
    w = np.asarray(weights, dtype=float)[order]
    groups_e, groups_w = [], []
    for ei, wi in zip(e, w):
        if groups_e and ei - groups_e[-1][-1] <= tol:
            groups_e[-1].append(ei)
            groups_w[-1] += wi
        else:
            groups_e.append([ei])
            groups_w.append(wi)
    return np.array([np.mean(g) for g in groups_e]), np.array(groups_w)


def qpe_kernel_distribution(energies, weights, t: float, n: int, degeneracy_tol: float = 1e-9) -> np.ndarray:
    """Outcome distribution ``P(j) = sum_u w_u |K_n(phi_u, j)|^2``.

    Weights inside a degenerate block are summed first, which makes the
    result independent of the eigenbasis chosen within the block.
    """
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < -1e-15):
        raise ContractViolation("weights must be non-negative")
    if abs(weights.sum() - 1) > 1e-9:
        raise ContractViolation(f"weights sum to {weights.sum():.15g}, expected 1")
    e, w = _group_degenerate(energies, np.clip(weights, 0, None), degeneracy_tol * (1 + np.max(np.abs(energies))))
    phi = np.mod(-e * t / (2 * np.pi), 1.0)
    return w @ kernel_probabilities(phi, n)


def _apply_hadamard(state: np.ndarray, axis: int) -> np.ndarray:
    s0 = np.take(state, 0, axis=axis)
    s1 = np.take(state, 1, axis=axis)
    return np.stack([(s0 + s1), (s0 - s1)], axis=axis) / np.sqrt(2)


def _apply_controlled_phase(state: np.ndarray, a: int, b: int, angle: float) -> np.ndarray:
    idx = [slice(None)] * state.ndim
    idx[a] = 1
    idx[b] = 1
    state = state.copy()
    state[tuple(idx)] *= np.exp(1j * angle)
    return state


def inverse_qft(state: np.ndarray, n: int) -> np.ndarray:
    """Gate-level inverse QFT on the first ``n`` axes (axis 0 most significant).

    Maps ``|k> -> 2^(-n/2) sum_j exp(-2 pi i j k / 2^n) |j>``.
    """
    for r in range(n // 2):
        state = np.swapaxes(state, r, n - 1 - r)
    for r in reversed(range(n)):
        for s in reversed(range(r + 1, n)):
            state = _apply_controlled_phase(state, r, s, -2 * np.pi / 2 ** (s - r + 1))
        state = _apply_hadamard(state, r)
    return state


def qpe_circuit_distribution(H, psi, t: float, n: int, policy: NumericalPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Statevector simulation of textbook QPE with ``U = exp(-i H t)``.

    Register qubit ``r`` (0 = most significant) controls ``U^(2^(n-1-r))``;
    powers come from repeated squaring of ``U``.
    """
    psi = np.asarray(psi, dtype=complex).ravel()
    d = len(psi)
    if np.shape(H) != (d, d):
        raise ContractViolation(f"Hamiltonian shape {np.shape(H)} does not match state dimension {d}")
    if 2**n * d > _MAX_AMPLITUDES:
        raise CapacityError(f"2^{n} x {d} amplitudes exceed the circuit limit {_MAX_AMPLITUDES}")
    psi = _normalized(psi, policy)
    U = Propagator(H, policy)(t)
    powers = [U]
    for _ in range(n - 1):
        powers.append(powers[-1] @ powers[-1])

    state = np.zeros((2,) * n + (d,), dtype=complex)
    state[(0,) * n] = psi
    for r in range(n):
        state = _apply_hadamard(state, r)
    for r in range(n):
        idx = [slice(None)] * (n + 1)
        idx[r] = 1
        idx = tuple(idx)
        state[idx] = state[idx] @ powers[n - 1 - r].T
    state = inverse_qft(state, n)
    return np.sum(np.abs(state.reshape(2**n, d)) ** 2, axis=1)


def energy_estimate(j, n: int, t: float):
    """``-pi j / (2^(n-1) t)`` wrapped into ``[-pi/t, pi/t)``."""
    window = 2 * np.pi / t
    e = -np.pi * np.asarray(j, dtype=float) / (2 ** (n - 1) * t)
    return np.mod(e + window / 2, window) - window / 2


def _initial_state(cfg: QpeConfig, spectrum: Spectrum, policy) -> tuple[np.ndarray, np.ndarray]:
    """``(C, psi)``: eigenbasis coefficients and computational-basis vector."""
    W = spectrum.eigenvectors
    if cfg.initial_coefficients is not None:
        C = np.asarray(cfg.initial_coefficients, dtype=complex).ravel()
        if len(C) != W.shape[0]:
            raise ConfigError(f"{len(C)} coefficients for dimension {W.shape[0]}", key="qpe.initial_coefficients")
        C = _normalized(C, policy)
        return C, W @ C
    psi = np.asarray(cfg.initial_state, dtype=complex).ravel()
    if len(psi) != W.shape[0]:
        raise ConfigError(f"state of length {len(psi)} for dimension {W.shape[0]}", key="qpe.initial_state")
    psi = psi / np.linalg.norm(psi)
    return W.conj().T @ psi, psi


def run_generalized_qpe(
    cfg: QpeConfig,
    H,
    model,
    policy: NumericalPolicy = DEFAULT_POLICY,
    threads: int = 1,
    keep_per_channel: bool = True,
) -> QpeResult:
    """Mixed-channel QPE histogram ``sum_a p_a P_a(j)``.

    In kernel mode with exact dressing every channel shares the noiseless
    energies; only the weights ``|C^a_u|^2`` depend on the channel.
    """
    spectrum = eigh(H, policy)
    t = cfg.t_evolution if cfg.t_evolution is not None else default_evolution_time(H, policy)
    n = cfg.n_register
    C, psi = _initial_state(cfg, spectrum, policy)

    def one_channel(channel):
        V = build_dressing_unitary(channel, model, policy)
        state = V @ psi if cfg.reading == "dressed" else psi
        if cfg.dressing == "exact":
            Ha = dress_exact(H, V, policy)
        else:
            Ha = dress_first_order(H, channel, model, policy)
        if cfg.mode == "circuit":
            return qpe_circuit_distribution(Ha, state, t, n, policy)
        if cfg.dressing == "exact":
            Ca = C if cfg.reading == "dressed" else channel_coefficients(C, V, spectrum, policy)
            return qpe_kernel_distribution(spectrum.eigenvalues, np.abs(Ca) ** 2, t, n)
        spec_a = eigh(Ha, policy)
        weights = np.abs(spec_a.eigenvectors.conj().T @ state) ** 2
        return qpe_kernel_distribution(spec_a.eigenvalues, weights / weights.sum(), t, n)

    channels = [ch if ch is not None else NoNoise() for ch in cfg.ensemble.channels]
    per_channel = map_channels(one_channel, channels, threads)
    hist = pairwise_sum(p * h for p, h in zip(cfg.ensemble.weights, per_channel))
    if abs(hist.sum() - 1) > policy.histogram_atol:
        raise ContractViolation(f"histogram sums to {hist.sum():.15g}")
    js = np.flatnonzero(hist > policy.support_floor)
    estimates = [(int(j), float(energy_estimate(j, n, t)), float(hist[j])) for j in js]
    return QpeResult(n, t, hist, per_channel if keep_per_channel else None, estimates)
