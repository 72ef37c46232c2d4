"""Dense complex linear algebra used by every model, channel and readout.

Operators are plain ``numpy`` complex arrays. The role of an array
(Hermitian, unitary) is enforced at the boundaries by the ``check_*``
helpers, with tolerances taken from a :class:`NumericalPolicy`.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import CapacityError, ContractViolation, NumericalError

__all__ = [
    "NumericalPolicy",
    "DEFAULT_POLICY",
    "Spectrum",
    "as_matrix",
    "check_hermitian",
    "check_unitary",
    "kron",
    "kron_all",
    "eigh",
    "expm_antihermitian",
    "expm_hermitian",
    "conjugate",
    "adjoint",
    "commutator",
    "trace",
    "frobenius_norm",
    "spectral_norm",
    "outer_product",
    "weighted_sum",
    "pairwise_sum",
    "PAULI_I",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
]


@dataclass(frozen=True)
class NumericalPolicy:
    """Tolerances and capacity limits used across the package."""

    hermitian_rtol: float = 1e-12
    unitary_atol: float = 1e-10
    spectrum_rtol: float = 1e-9
    reconstruction_rtol: float = 1e-8
    trace_atol: float = 1e-10
    positivity_atol: float = 1e-9
    weight_atol: float = 1e-12
    coefficient_atol: float = 1e-10
    histogram_atol: float = 1e-9
    support_floor: float = 1e-12
    max_dim: int = 4096

    def replace(self, **overrides) -> "NumericalPolicy":
        return dataclasses.replace(self, **overrides)


DEFAULT_POLICY = NumericalPolicy()


PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues and the matching orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def gaps(self) -> np.ndarray:
        """Matrix of all differences ``E_u - E_v`` indexed ``[u, v]``."""
        e = self.eigenvalues
        return e[:, None] - e[None, :]


def as_matrix(a, square: bool = True) -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ContractViolation(f"expected a 2-D matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ContractViolation("matrix has non-finite entries")
    return m


def _max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


def check_hermitian(h, policy: NumericalPolicy = DEFAULT_POLICY) -> np.ndarray:
    m = as_matrix(h)
    scale = _max_abs(m)
    if _max_abs(m - m.conj().T) > policy.hermitian_rtol * scale:
        raise ContractViolation(
            f"operator is not Hermitian: max|M - M^dag| = {_max_abs(m - m.conj().T):.3e}"
        )
    return m


def check_unitary(u, policy: NumericalPolicy = DEFAULT_POLICY) -> np.ndarray:
    m = as_matrix(u)
    err = _max_abs(m.conj().T @ m - np.eye(m.shape[0]))
    if err > policy.unitary_atol:
        raise ContractViolation(f"operator is not unitary: max|U^dag U - I| = {err:.3e}")
    return m


def kron(a, b, policy: NumericalPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Kronecker product; the first factor is the most significant index."""
    a = as_matrix(a, square=False)
    b = as_matrix(b, square=False)
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if max(rows, cols) > policy.max_dim:
        raise CapacityError(
            f"Kronecker product of shape ({rows}, {cols}) exceeds max dimension {policy.max_dim}"
        )
    return np.kron(a, b)


def kron_all(factors, policy: NumericalPolicy = DEFAULT_POLICY) -> np.ndarray:
    return reduce(lambda x, y: kron(x, y, policy), factors)


def eigh(h, policy: NumericalPolicy = DEFAULT_POLICY) -> Spectrum:
    """Hermitian eigendecomposition with ascending eigenvalues.

    Inside a degenerate block any orthonormal basis may be returned.
    """
    m = check_hermitian(h, policy)
    # LAPACK reads one triangle only; feed it the exactly Hermitian part.
    m = 0.5 * (m + m.conj().T)
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigensolver failed on {m.shape[0]}x{m.shape[0]} matrix "
            f"(max|M| = {_max_abs(m):.3e}): {exc}"
        ) from exc
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(v))):
        raise NumericalError("eigensolver returned non-finite values")
    return Spectrum(eigenvalues=w, eigenvectors=v)


def expm_hermitian(h, coeff: complex, policy: NumericalPolicy = DEFAULT_POLICY) -> np.ndarray:
    """``exp(coeff * H)`` for Hermitian ``H`` via its eigendecomposition."""
    spec = eigh(h, policy)
    v = spec.eigenvectors
    return (v * np.exp(coeff * spec.eigenvalues)) @ v.conj().T


def expm_antihermitian(g, policy: NumericalPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Unitary ``exp(G)`` of an anti-Hermitian generator ``G``.

    ``iG`` is Hermitian with eigenpairs ``(lam, V)``, so
    ``exp(G) = V diag(exp(-i lam)) V^dag``.
    """
    g = as_matrix(g)
    scale = _max_abs(g)
    if _max_abs(g + g.conj().T) > policy.hermitian_rtol * scale:
        raise ContractViolation(
            f"generator is not anti-Hermitian: max|G + G^dag| = {_max_abs(g + g.conj().T):.3e}"
        )
    return expm_hermitian(1j * g, -1j, policy)


def adjoint(m) -> np.ndarray:
    return np.asarray(m).conj().T


def conjugate(h, u, policy: NumericalPolicy = DEFAULT_POLICY) -> np.ndarray:
    """``U H U^dag``, re-symmetrized to remove roundoff drift."""
    h = as_matrix(h)
    u = as_matrix(u)
    if h.shape != u.shape:
        raise ContractViolation(f"dimension mismatch: H {h.shape} vs U {u.shape}")
    m = u @ h @ u.conj().T
    return 0.5 * (m + m.conj().T)


def commutator(a, b) -> np.ndarray:
    return a @ b - b @ a


def trace(m) -> complex:
    return complex(np.trace(m))


def frobenius_norm(m) -> float:
    return float(np.linalg.norm(m, "fro"))


def spectral_norm(m, policy: NumericalPolicy = DEFAULT_POLICY) -> float:
    """Largest singular value, from the top eigenvalue of ``M^dag M``."""
    m = as_matrix(m, square=False)
    if m.size == 0:
        return 0.0
    gram = m.conj().T @ m
    top = eigh(0.5 * (gram + gram.conj().T), policy).eigenvalues[-1]
    return float(np.sqrt(max(top, 0.0)))


def outer_product(ket, bra=None) -> np.ndarray:
    """``|ket><bra|``; ``bra`` defaults to ``ket``."""
    ket = np.asarray(ket, dtype=complex).ravel()
    bra = ket if bra is None else np.asarray(bra, dtype=complex).ravel()
    return np.outer(ket, bra.conj())


def pairwise_sum(terms):
    """Sum a sequence of arrays with a fixed balanced-tree order.

    The result depends only on the order of ``terms``, never on how they
    were produced, which keeps parallel reductions reproducible.
    """
    terms = list(terms)
    if not terms:
        raise ValueError("pairwise_sum of an empty sequence")
    while len(terms) > 1:
        paired = [terms[i] + terms[i + 1] for i in range(0, len(terms) - 1, 2)]
        if len(terms) % 2:
            paired.append(terms[-1])
        terms = paired
    return terms[0]


def weighted_sum(weights, matrices):
    """``sum_a w_a M_a`` reduced in deterministic pairwise order."""
    return pairwise_sum(w * np.asarray(m) for w, m in zip(weights, matrices))
