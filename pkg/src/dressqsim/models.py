"""Hamiltonian families on explicit finite bases.

Basis ordering: site/qubit/mode 0 is the most significant tensor factor.
Bosonic modes keep occupations ``0..n_max-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import CapacityError, ContractViolation
from .linalg import (
    DEFAULT_POLICY,
    PAULI_I,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    NumericalPolicy,
    check_hermitian,
    kron_all,
)

__all__ = [
    "SpinModelSpec",
    "OscillatorSpec",
    "SpinBosonSpec",
    "BcsSpec",
    "MatrixModelSpec",
    "ModelSpec",
    "FermionAlgebra",
    "site_operator",
    "annihilation",
    "quadratures",
    "fermion_operator",
    "pair_annihilation",
    "build_spin_hamiltonian",
    "build_oscillator_hamiltonian",
    "build_spinboson_hamiltonian",
    "build_bcs_hamiltonian",
    "pairing_hamiltonian",
    "pair_hopping_mask",
    "build_hamiltonian",
    "hilbert_dim",
]


def _check_capacity(dim: int, policy: NumericalPolicy, what: str) -> None:
    if dim > policy.max_dim:
        raise CapacityError(f"{what}: Hilbert dimension {dim} exceeds max {policy.max_dim}")


@dataclass(frozen=True)
class SpinModelSpec:
    """Transverse-field qubit Hamiltonian ``B sum X_i + h(Z)``.

    ``cost`` selects ``h``: ``"ising"`` uses the local fields ``h`` and the
    ``couplings`` list of ``(i, j, J_ij)`` with ``i < j``; ``"grover"`` uses
    ``I - |s><s|`` with ``s = index_state``.
    """

    n_qubits: int
    B: float
    cost: str = "ising"
    h: tuple[float, ...] = ()
    couplings: tuple[tuple[int, int, float], ...] = ()
    index_state: int = 0

    def __post_init__(self):
        if self.n_qubits < 1 or self.n_qubits > 12:
            raise ContractViolation(f"n_qubits must be in [1, 12], got {self.n_qubits}")
        if self.cost not in ("ising", "grover"):
            raise ContractViolation(f"unknown cost term {self.cost!r}")
        h = tuple(float(x) for x in self.h) or (0.0,) * self.n_qubits
        if len(h) != self.n_qubits:
            raise ContractViolation(f"h has length {len(h)}, expected {self.n_qubits}")
        object.__setattr__(self, "h", h)
        seen = set()
        couplings = []
        for i, j, J in self.couplings:
            i, j = int(i), int(j)
            if not 0 <= i < j < self.n_qubits:
                raise ContractViolation(f"coupling ({i}, {j}) must satisfy 0 <= i < j < n")
            if (i, j) in seen:
                raise ContractViolation(f"duplicate coupling ({i}, {j})")
            seen.add((i, j))
            couplings.append((i, j, float(J)))
        object.__setattr__(self, "couplings", tuple(couplings))
        if self.cost == "grover" and not 0 <= self.index_state < 2**self.n_qubits:
            raise ContractViolation(f"index_state {self.index_state} out of range")

    @property
    def dims(self) -> list[int]:
        return [2] * self.n_qubits


@dataclass(frozen=True)
class OscillatorSpec:
    """Coupled harmonic sites with quadratic on-site and pair potentials.

    ``couplings`` holds ``(i, j, k_ij)`` pair stiffnesses.
    """

    masses: tuple[float, ...]
    stiffness: tuple[float, ...]
    couplings: tuple[tuple[int, int, float], ...] = ()
    n_max: int = 8

    def __post_init__(self):
        masses = tuple(float(m) for m in self.masses)
        stiffness = tuple(float(k) for k in self.stiffness)
        if not masses or len(masses) != len(stiffness):
            raise ContractViolation("masses and stiffness must be non-empty and equal length")
        if any(m <= 0 for m in masses) or any(k <= 0 for k in stiffness):
            raise ContractViolation("masses and on-site stiffnesses must be positive")
        if self.n_max < 2:
            raise ContractViolation("n_max must be at least 2")
        couplings = []
        for i, j, kij in self.couplings:
            i, j = int(i), int(j)
            if not 0 <= i < j < len(masses):
                raise ContractViolation(f"coupling ({i}, {j}) must satisfy 0 <= i < j < n_sites")
            if kij < 0:
                raise ContractViolation("pair stiffness must be non-negative")
            couplings.append((i, j, float(kij)))
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "stiffness", stiffness)
        object.__setattr__(self, "couplings", tuple(couplings))

    @property
    def n_sites(self) -> int:
        return len(self.masses)

    @property
    def dims(self) -> list[int]:
        return [self.n_max] * self.n_sites

    def stiffness_matrix(self) -> np.ndarray:
        """Quadratic form ``K`` with ``V = x^T K x / 2``."""
        K = np.diag(self.stiffness)
        for i, j, kij in self.couplings:
            K[i, i] += kij
            K[j, j] += kij
            K[i, j] -= kij
            K[j, i] -= kij
        return K

    def normal_mode_frequencies(self) -> np.ndarray:
        m = np.asarray(self.masses)
        dyn = self.stiffness_matrix() / np.sqrt(np.outer(m, m))
        return np.sqrt(np.linalg.eigvalsh(dyn))


@dataclass(frozen=True)
class SpinBosonSpec:
    """One spin coupled through ``sigma^z`` to truncated bosonic modes.

    ``modes`` holds ``(omega, lam)`` per mode.
    """

    B: float
    modes: tuple[tuple[float, float], ...] = ()
    n_max: int = 8

    def __post_init__(self):
        modes = tuple((float(w), float(lam)) for w, lam in self.modes)
        if any(w <= 0 for w, _ in modes):
            raise ContractViolation("mode frequencies must be positive")
        if self.n_max < 2:
            raise ContractViolation("n_max must be at least 2")
        object.__setattr__(self, "modes", modes)

    @property
    def dims(self) -> list[int]:
        return [2] + [self.n_max] * len(self.modes)


@dataclass(frozen=True)
class BcsSpec:
    """Pairing Hamiltonian on ``L`` momentum modes with both spins.

    Either ``G`` (constant pairing) or the full symmetric ``V`` matrix.
    """

    eps: tuple[float, ...]
    G: float | None = None
    V: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps)
        if not eps:
            raise ContractViolation("eps must be non-empty")
        if (self.G is None) == (self.V is None):
            raise ContractViolation("give exactly one of G or V")
        if self.V is not None:
            V = np.asarray(self.V, dtype=float)
            if V.shape != (len(eps), len(eps)):
                raise ContractViolation(f"V must be {len(eps)}x{len(eps)}, got {V.shape}")
            if not np.allclose(V, V.T, atol=0):
                raise ContractViolation("V must be symmetric")
            object.__setattr__(self, "V", tuple(tuple(row) for row in V))
        object.__setattr__(self, "eps", eps)

    @property
    def L(self) -> int:
        return len(self.eps)

    @property
    def dims(self) -> list[int]:
        return [2] * (2 * self.L)

    def interaction(self) -> np.ndarray:
        if self.V is not None:
            return np.asarray(self.V, dtype=float)
        return np.full((self.L, self.L), float(self.G))


@dataclass(frozen=True)
class MatrixModelSpec:
    """A user-supplied Hermitian matrix, for tests and generic dressings.

    ``matrix`` is stored as nested tuples so the spec stays hashable.
    """

    matrix: tuple[tuple[complex, ...], ...]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ContractViolation(f"matrix must be square and non-empty, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > DEFAULT_POLICY.hermitian_rtol * max(1.0, np.max(np.abs(m))):
            raise ContractViolation("matrix must be Hermitian")
        object.__setattr__(self, "matrix", tuple(tuple(row) for row in m))

    @property
    def dims(self) -> list[int]:
        return [len(self.matrix)]


ModelSpec = Union[SpinModelSpec, OscillatorSpec, SpinBosonSpec, BcsSpec, MatrixModelSpec]


def hilbert_dim(spec: ModelSpec) -> int:
    return math.prod(spec.dims)


def site_operator(op, site: int, dims: Sequence[int], policy: NumericalPolicy = DEFAULT_POLICY):
    """Embed a single-site operator into the full tensor-product space."""
    _check_capacity(math.prod(dims), policy, "site_operator")
    factors = [np.eye(d, dtype=complex) for d in dims]
    factors[site] = np.asarray(op, dtype=complex)
    return kron_all(factors, policy)


def annihilation(n_max: int) -> np.ndarray:
    """Truncated bosonic ``b`` on occupations ``0..n_max-1``."""
    return np.diag(np.sqrt(np.arange(1, n_max)), k=1).astype(complex)


def quadratures(mass: float, stiffness: float, n_max: int):
    """Position/momentum on a truncated Fock space, plus their squares.

    Returns ``(x, p, x2, p2)``. The squares are the compressions of the
    untruncated ``x**2`` and ``p**2`` onto the kept levels, so a Hamiltonian
    assembled from them is an exact projection of the infinite model.
    """
    omega = math.sqrt(stiffness / mass)
    x_scale = 1.0 / math.sqrt(2.0 * mass * omega)
    p_scale = math.sqrt(mass * omega / 2.0)

    def xp(n):
        b = annihilation(n)
        return x_scale * (b + b.T), 1j * p_scale * (b.T - b)

    x, p = xp(n_max)
    xb, pb = xp(n_max + 1)
    x2 = (xb @ xb)[:n_max, :n_max]
    p2 = (pb @ pb)[:n_max, :n_max]
    return x, p, x2, p2


def build_spin_hamiltonian(spec: SpinModelSpec, policy: NumericalPolicy = DEFAULT_POLICY):
    n = spec.n_qubits
    dim = 2**n
    _check_capacity(dim, policy, "spin model")
    H = np.zeros((dim, dim), dtype=complex)
    for i in range(n):
        H += spec.B * site_operator(PAULI_X, i, spec.dims, policy)
    if spec.cost == "ising":
        # sigma^z is diagonal: assemble h(Z) from bit patterns directly.
        bits = (np.arange(dim)[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
        z = 1.0 - 2.0 * bits
        diag = z @ np.asarray(spec.h)
        for i, j, J in spec.couplings:
            diag = diag + J * z[:, i] * z[:, j]
        H += np.diag(diag)
    else:
        H += np.eye(dim)
        H[spec.index_state, spec.index_state] -= 1.0
    return check_hermitian(H, policy)


def oscillator_hamiltonian(
    spec: OscillatorSpec,
    x_shift=None,
    p_shift=None,
    policy: NumericalPolicy = DEFAULT_POLICY,
) -> np.ndarray:
    """``H(x - x_shift, p + p_shift)`` projected onto the truncated basis.

    With zero shifts this is the bare Hamiltonian. Nonzero shifts give the
    closed form of the untruncated displaced Hamiltonian.
    """
    n = spec.n_sites
    dims = spec.dims
    dim = math.prod(dims)
    _check_capacity(dim, policy, "oscillator model")
    xs = np.zeros(n) if x_shift is None else np.asarray(x_shift, dtype=float)
    ps = np.zeros(n) if p_shift is None else np.asarray(p_shift, dtype=float)
    eye = np.eye(spec.n_max)

    X, X2 = [], []
    H = np.zeros((dim, dim), dtype=complex)
    for i, (m, k) in enumerate(zip(spec.masses, spec.stiffness)):
        x, p, x2, p2 = quadratures(m, k, spec.n_max)
        xi = x - xs[i] * eye
        xi2 = x2 - 2 * xs[i] * x + xs[i] ** 2 * eye
        pi2 = p2 + 2 * ps[i] * p + ps[i] ** 2 * eye
        X.append(site_operator(xi, i, dims, policy))
        X2.append(site_operator(xi2, i, dims, policy))
        H += site_operator(pi2 / (2 * m) + 0.5 * k * xi2, i, dims, policy)
    for i, j, kij in spec.couplings:
        H += 0.5 * kij * (X2[i] + X2[j] - 2 * X[i] @ X[j])
    H = 0.5 * (H + H.conj().T)
    return check_hermitian(H, policy)


def build_oscillator_hamiltonian(spec: OscillatorSpec, policy: NumericalPolicy = DEFAULT_POLICY):
    return oscillator_hamiltonian(spec, policy=policy)


def spinboson_hamiltonian(
    spec: SpinBosonSpec,
    spin_field=(None, 0.0, 0.0),
    displacements=None,
    policy: NumericalPolicy = DEFAULT_POLICY,
) -> np.ndarray:
    """Spin-boson Hamiltonian with optional extra spin field and mode shifts.

    ``spin_field = (bx, by, bz)`` replaces the transverse term ``B sigma^x``
    by ``bx sigma^x + by sigma^y + bz sigma^z`` (``bx=None`` keeps ``B``).
    ``displacements`` substitutes ``b_alpha -> b_alpha + d_alpha``.
    """
    dims = spec.dims
    dim = math.prod(dims)
    _check_capacity(dim, policy, "spin-boson model")
    bx, by, bz = spin_field
    bx = spec.B if bx is None else bx
    spin = bx * PAULI_X + by * PAULI_Y + bz * PAULI_Z
    H = site_operator(spin, 0, dims, policy)
    sz = site_operator(PAULI_Z, 0, dims, policy)
    d = np.zeros(len(spec.modes), dtype=complex) if displacements is None else np.asarray(displacements, dtype=complex)
    eye = np.eye(spec.n_max)
    for alpha, (omega, lam) in enumerate(spec.modes):
        b = annihilation(spec.n_max) + d[alpha] * eye
        bd = b.conj().T
        site = alpha + 1
        H += lam * sz @ site_operator(b + bd, site, dims, policy)
        H += omega * site_operator(bd @ b, site, dims, policy)
    H = 0.5 * (H + H.conj().T)
    return check_hermitian(H, policy)


def build_spinboson_hamiltonian(spec: SpinBosonSpec, policy: NumericalPolicy = DEFAULT_POLICY):
    return spinboson_hamiltonian(spec, policy=policy)


@dataclass(frozen=True)
class FermionAlgebra:
    """Jordan-Wigner encoding of ``2L`` spinful momentum modes.

    Site order: all spin-up modes by ``k``, then all spin-down modes.
    """

    L: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_modes(self) -> int:
        return 2 * self.L

    def mode_index(self, k: int, spin: str) -> int:
        if spin not in ("up", "down"):
            raise ContractViolation(f"spin must be 'up' or 'down', got {spin!r}")
        k = k % self.L
        return k if spin == "up" else self.L + k

    def annihilator(self, mode: int) -> np.ndarray:
        if not 0 <= mode < self.n_modes:
            raise ContractViolation(f"mode {mode} out of range [0, {self.n_modes})")
        if mode not in self._cache:
            lowering = np.array([[0, 1], [0, 0]], dtype=complex)
            factors = [PAULI_Z] * mode + [lowering] + [PAULI_I] * (self.n_modes - mode - 1)
            self._cache[mode] = kron_all(factors)
        return self._cache[mode]


def fermion_operator(alg: FermionAlgebra, mode: int, kind: str) -> np.ndarray:
    """``kind`` is one of ``"annihilate"``, ``"create"``, ``"number"``."""
    c = alg.annihilator(mode)
    if kind == "annihilate":
        return c
    if kind == "create":
        return c.conj().T
    if kind == "number":
        return c.conj().T @ c
    raise ContractViolation(f"unknown fermion operator kind {kind!r}")


def pair_annihilation(alg: FermionAlgebra, q: int, k: int) -> np.ndarray:
    """``eta_q(k) = c_{k up} c_{q-k down}``."""
    return alg.annihilator(alg.mode_index(k, "up")) @ alg.annihilator(alg.mode_index(q - k, "down"))


def pairing_hamiltonian(alg: FermionAlgebra, eps_up, eps_down, V, q: int = 0) -> np.ndarray:
    """``sum_k eps_up n_k^ + eps_down n_kv + sum V_kk' eta_q^dag(k') eta_q(k)``."""
    dim = 2**alg.n_modes
    _check_capacity(dim, DEFAULT_POLICY, "BCS model")
    H = np.zeros((dim, dim), dtype=complex)
    for k in range(alg.L):
        H += eps_up[k] * fermion_operator(alg, alg.mode_index(k, "up"), "number")
        H += eps_down[k] * fermion_operator(alg, alg.mode_index(k, "down"), "number")
    eta = [pair_annihilation(alg, q, k) for k in range(alg.L)]
    for k in range(alg.L):
        for kp in range(alg.L):
            if V[k][kp] != 0:
                H += V[k][kp] * eta[kp].conj().T @ eta[k]
    return H


def build_bcs_hamiltonian(spec: BcsSpec, policy: NumericalPolicy = DEFAULT_POLICY):
    _check_capacity(2 ** (2 * spec.L), policy, "BCS model")
    alg = FermionAlgebra(spec.L)
    H = pairing_hamiltonian(alg, spec.eps, spec.eps, spec.interaction(), q=0)
    return check_hermitian(H, policy)


def build_hamiltonian(spec: ModelSpec, policy: NumericalPolicy = DEFAULT_POLICY) -> np.ndarray:
    if isinstance(spec, SpinModelSpec):
        return build_spin_hamiltonian(spec, policy)
    if isinstance(spec, OscillatorSpec):
        return build_oscillator_hamiltonian(spec, policy)
    if isinstance(spec, SpinBosonSpec):
        return build_spinboson_hamiltonian(spec, policy)
    if isinstance(spec, BcsSpec):
        return build_bcs_hamiltonian(spec, policy)
    if isinstance(spec, MatrixModelSpec):
        _check_capacity(len(spec.matrix), policy, "matrix model")
        m = np.asarray(spec.matrix, dtype=complex)
        return 0.5 * (m + m.conj().T)
    raise ContractViolation(f"unknown model spec {type(spec).__name__}")


def pair_hopping_mask(L: int, q: int) -> np.ndarray:
    """Occupation-basis entries that ``sum eta_q^dag(k') eta_q(k)`` can reach.

    The diagonal is always allowed (number operators). Used to check that a
    dressed pairing Hamiltonian only scatters total-momentum-``q`` pairs.
    """
    alg = FermionAlgebra(L)
    mask = np.eye(2**alg.n_modes, dtype=bool)
    eta = [pair_annihilation(alg, q, k) for k in range(L)]
    for k in range(L):
        for kp in range(L):
            mask |= np.abs(eta[kp].conj().T @ eta[k]) > 0
    return mask
