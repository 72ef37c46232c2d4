"""Channel-averaged unitary evolution of density matrices.

``rho(t) = sum_a p_a exp(-i H_a t) rho0 exp(i H_a t)``, evaluated exactly
per channel through one eigendecomposition of each ``H_a``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .linalg import DEFAULT_POLICY, NumericalPolicy, Spectrum, as_matrix, eigh, pairwise_sum

__all__ = [
    "TimeGrid",
    "Propagator",
    "propagator",
    "check_density_matrix",
    "pure_state",
    "evolve_channel",
    "evolve_averaged",
    "map_channels",
]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sample times ``t_start + k dt`` for ``k < n_samples``."""

    t_start: float = 0.0
    dt: float = 0.1
    n_samples: int = 1

    def __post_init__(self):
        if self.n_samples < 1:
            raise ContractViolation("n_samples must be at least 1")
        if not self.dt > 0:
            raise ContractViolation("dt must be positive")

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_samples)


class Propagator:
    """``U(t) = exp(-i H t)`` backed by a single eigendecomposition of ``H``."""

    def __init__(self, H, policy: NumericalPolicy = DEFAULT_POLICY, spectrum: Spectrum | None = None):
        self.spectrum = spectrum if spectrum is not None else eigh(H, policy)

    def __call__(self, t: float) -> np.ndarray:
        v = self.spectrum.eigenvectors
        return (v * np.exp(-1j * self.spectrum.eigenvalues * t)) @ v.conj().T

    def batch(self, times) -> np.ndarray:
        """Stack of ``U(t)`` for every ``t`` in ``times``, shape ``(n_t, d, d)``."""
        v = self.spectrum.eigenvectors
        phases = np.exp(-1j * np.outer(np.asarray(times), self.spectrum.eigenvalues))
        return np.einsum("ik,tk,jk->tij", v, phases, v.conj(), optimize=True)


def propagator(H, t: float, policy: NumericalPolicy = DEFAULT_POLICY) -> np.ndarray:
    return Propagator(H, policy)(t)


def check_density_matrix(rho, policy: NumericalPolicy = DEFAULT_POLICY) -> np.ndarray:
    rho = as_matrix(rho)
    if np.max(np.abs(rho - rho.conj().T)) > policy.trace_atol:
        raise ContractViolation("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1) > policy.trace_atol:
        raise ContractViolation(f"density matrix trace is {tr.real:.15g}, expected 1")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] < -policy.positivity_atol:
        raise ContractViolation("density matrix is not positive semidefinite")
    return rho


def pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def evolve_channel(prop: Propagator, rho0: np.ndarray, times) -> np.ndarray:
    """``U(t) rho0 U(t)^dag`` for all ``times``; computed in the eigenbasis."""
    v = prop.spectrum.eigenvectors
    e = prop.spectrum.eigenvalues
    rho_eig = v.conj().T @ rho0 @ v
    gaps = e[:, None] - e[None, :]
    phases = np.exp(-1j * np.asarray(times)[:, None, None] * gaps[None])
    return np.einsum("ik,tkl,jl->tij", v, phases * rho_eig[None], v.conj(), optimize=True)


def map_channels(fn, items, threads: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally on a thread pool; order preserved."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def evolve_averaged(
    H_list,
    rho0,
    grid: TimeGrid,
    policy: NumericalPolicy = DEFAULT_POLICY,
    threads: int = 1,
) -> np.ndarray:
    """Channel-averaged density matrices on ``grid``, shape ``(n_samples, d, d)``.

    ``H_list`` is a sequence of ``(p_a, H_a)``. Per-channel orbits may be
    computed concurrently; they are always combined in list order.
    """
    H_list = list(H_list)
    if not H_list:
        raise ContractViolation("empty channel list")
    rho0 = check_density_matrix(rho0, policy)
    weights = np.array([p for p, _ in H_list], dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1) > policy.weight_atol * len(weights):
        raise ContractViolation(f"channel weights must be non-negative and sum to 1 (sum = {weights.sum():.15g})")
    d = rho0.shape[0]
    for _, H in H_list:
        if np.shape(H) != (d, d):
            raise ContractViolation(f"Hamiltonian shape {np.shape(H)} does not match rho0 {rho0.shape}")
    times = grid.times

    def orbit(item):
        p, H = item
        return p * evolve_channel(Propagator(H, policy), rho0, times)

    return pairwise_sum(map_channels(orbit, H_list, threads))
