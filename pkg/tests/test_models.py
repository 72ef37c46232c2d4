import itertools

import numpy as np
import pytest

from dressqsim.errors import CapacityError, ContractViolation
from dressqsim.linalg import PAULI_X, PAULI_Z, eigh, kron_all
from dressqsim.models import (
    BcsSpec,
    FermionAlgebra,
    OscillatorSpec,
    SpinBosonSpec,
    SpinModelSpec,
    build_bcs_hamiltonian,
    build_hamiltonian,
    build_oscillator_hamiltonian,
    build_spin_hamiltonian,
    build_spinboson_hamiltonian,
    fermion_operator,
    site_operator,
)

from oracles import bcs_occupation_hamiltonian, jacobi_eigenvalues


def is_hermitian(h):
    return np.max(np.abs(h - h.conj().T)) <= 1e-12 * max(np.max(np.abs(h)), 1e-300)


# ---------------------------------------------------------------- spins


def test_single_qubit_transverse_field():
    H = build_spin_hamiltonian(SpinModelSpec(1, 1.0))
    np.testing.assert_allclose(H, PAULI_X)
    np.testing.assert_allclose(eigh(H).eigenvalues, [-1, 1], atol=1e-15)


def test_classical_ising_pair():
    H = build_spin_hamiltonian(SpinModelSpec(2, 0.0, couplings=((0, 1, 1.0),)))
    np.testing.assert_allclose(H, np.diag([1, -1, -1, 1]))


def test_two_qubit_ising_against_jacobi():
    spec = SpinModelSpec(2, 0.5, h=(0.3, -0.2), couplings=((0, 1, 0.8),))
    H = build_spin_hamiltonian(spec)
    # independent assembly straight from Pauli tensor products
    X0, X1 = np.kron(PAULI_X, np.eye(2)), np.kron(np.eye(2), PAULI_X)
    Z0, Z1 = np.kron(PAULI_Z, np.eye(2)), np.kron(np.eye(2), PAULI_Z)
    ref = 0.5 * (X0 + X1) + 0.3 * Z0 - 0.2 * Z1 + 0.8 * Z0 @ Z1
    np.testing.assert_allclose(H, ref, atol=1e-15)
    np.testing.assert_allclose(eigh(H).eigenvalues, jacobi_eigenvalues(ref), atol=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_grover_cost_is_projector_complement(n):
    for s in range(2**n):
        H = build_spin_hamiltonian(SpinModelSpec(n, 0.0, cost="grover", index_state=s))
        for x in range(2**n):
            e = np.zeros(2**n)
            e[x] = 1
            np.testing.assert_allclose(H @ e, 0 if x == s else e, atol=0)


def test_spin_spec_validation():
    with pytest.raises(ContractViolation):
        SpinModelSpec(13, 1.0)
    with pytest.raises(ContractViolation):
        SpinModelSpec(3, 1.0, couplings=((1, 0, 1.0),))
    with pytest.raises(ContractViolation):
        SpinModelSpec(3, 1.0, couplings=((0, 1, 1.0), (0, 1, 2.0)))


# ---------------------------------------------------------------- oscillators


def test_single_oscillator_ladder():
    H = build_oscillator_hamiltonian(OscillatorSpec((1.0,), (1.0,), n_max=8))
    np.testing.assert_allclose(eigh(H).eigenvalues[:4], [0.5, 1.5, 2.5, 3.5], atol=1e-6)


def test_uncoupled_oscillators_direct_sum():
    spec = OscillatorSpec((1.0, 2.0), (1.0, 3.0), n_max=6)
    single = [
        eigh(build_oscillator_hamiltonian(OscillatorSpec((m,), (k,), n_max=6))).eigenvalues
        for m, k in zip(spec.masses, spec.stiffness)
    ]
    expected = np.sort([a + b for a in single[0] for b in single[1]])
    np.testing.assert_allclose(eigh(build_oscillator_hamiltonian(spec)).eigenvalues, expected, atol=1e-12)


def test_coupled_oscillators_normal_modes():
    k, m, k12 = 1.0, 1.0, 0.2
    spec = OscillatorSpec((m, m), (k, k), ((0, 1, k12),), n_max=10)
    w_plus, w_minus = np.sqrt(k / m), np.sqrt((k + 2 * k12) / m)
    levels = sorted((a + 0.5) * w_plus + (b + 0.5) * w_minus for a in range(6) for b in range(6))
    np.testing.assert_allclose(eigh(build_oscillator_hamiltonian(spec)).eigenvalues[:3], levels[:3], atol=1e-4)


def test_oscillator_levels_converge_monotonically():
    previous = None
    for n_max in (4, 6, 8, 10, 12):
        spec = OscillatorSpec((1.0, 1.3), (1.0, 0.7), ((0, 1, 0.4),), n_max=n_max)
        low = eigh(build_oscillator_hamiltonian(spec)).eigenvalues[:4]
        if previous is not None:
            assert np.all(low <= previous + 1e-12)
        previous = low


def test_oscillator_capacity():
    with pytest.raises(CapacityError):
        build_oscillator_hamiltonian(OscillatorSpec((1.0,) * 3, (1.0,) * 3, n_max=17))


# ---------------------------------------------------------------- spin-boson


def test_spin_boson_without_modes():
    np.testing.assert_allclose(build_spinboson_hamiltonian(SpinBosonSpec(0.7)), 0.7 * PAULI_X)


def test_spin_boson_displaced_oscillators():
    omega, lam = 1.0, 0.3
    H = build_spinboson_hamiltonian(SpinBosonSpec(0.0, ((omega, lam),), n_max=12))
    e = eigh(H).eigenvalues
    expected = np.repeat(np.arange(6) * omega - lam**2 / omega, 2)
    np.testing.assert_allclose(e[:12], expected, atol=1e-6)


def test_spin_boson_truncation_convergence():
    low = eigh(build_spinboson_hamiltonian(SpinBosonSpec(0.2, ((1.0, 0.3),), n_max=12))).eigenvalues[:6]
    ref = eigh(build_spinboson_hamiltonian(SpinBosonSpec(0.2, ((1.0, 0.3),), n_max=20))).eigenvalues[:6]
    np.testing.assert_allclose(low, ref, atol=1e-6)


@pytest.mark.parametrize("B", [0.0, 0.4, -1.3])
def test_spin_boson_parity_conserved(B):
    spec = SpinBosonSpec(B, ((1.0, 0.3), (0.6, -0.2)), n_max=5)
    H = build_spinboson_hamiltonian(spec)
    boson_parity = np.diag((-1.0) ** np.arange(spec.n_max))
    parity = kron_all([PAULI_X, boson_parity, boson_parity])
    assert np.max(np.abs(H @ parity - parity @ H)) <= 1e-10


# ---------------------------------------------------------------- fermions / BCS


def test_single_mode_annihilator():
    alg = FermionAlgebra(1)
    c = fermion_operator(alg, 0, "annihilate")
    np.testing.assert_array_equal(c, np.kron([[0, 1], [0, 0]], np.eye(2)))


@pytest.mark.parametrize("L", [1, 2, 3])
def test_canonical_anticommutation(L):
    alg = FermionAlgebra(L)
    dim = 2**alg.n_modes
    for i, j in itertools.product(range(alg.n_modes), repeat=2):
        ci = fermion_operator(alg, i, "annihilate")
        cj = fermion_operator(alg, j, "annihilate")
        cjd = fermion_operator(alg, j, "create")
        np.testing.assert_allclose(ci @ cjd + cjd @ ci, np.eye(dim) * (i == j), atol=0)
        np.testing.assert_allclose(ci @ cj + cj @ ci, 0, atol=0)


def test_number_operator():
    alg = FermionAlgebra(2)
    for m in range(4):
        c = fermion_operator(alg, m, "annihilate")
        np.testing.assert_array_equal(fermion_operator(alg, m, "number"), c.conj().T @ c)


def test_fermion_mode_out_of_range():
    with pytest.raises(ContractViolation):
        fermion_operator(FermionAlgebra(2), 4, "annihilate")


def test_bcs_single_mode():
    e, g = 0.7, -0.3
    np.testing.assert_allclose(eigh(build_bcs_hamiltonian(BcsSpec((e,), G=g))).eigenvalues, sorted([0, e, e, 2 * e + g]), atol=1e-14)


def test_bcs_free_fermions_subset_sums():
    eps = (0.3, -0.45)
    energies = list(eps) * 2
    sums = sorted(sum(c) for r in range(5) for c in itertools.combinations(energies, r))
    np.testing.assert_allclose(eigh(build_bcs_hamiltonian(BcsSpec(eps, G=0.0))).eigenvalues, sums, atol=1e-14)


def test_bcs_against_occupation_basis():
    eps = (0.1, 0.2, 0.3)
    G = -0.5
    H = build_bcs_hamiltonian(BcsSpec(eps, G=G))
    ref = bcs_occupation_hamiltonian(eps, np.full((3, 3), G))
    np.testing.assert_allclose(H, ref, atol=1e-14)
    np.testing.assert_allclose(eigh(H).eigenvalues, np.linalg.eigvalsh(ref), atol=1e-12)


def test_bcs_general_interaction_against_occupation_basis():
    rng = np.random.default_rng(4)
    V = rng.normal(size=(3, 3))
    V = V + V.T
    eps = tuple(rng.normal(size=3))
    H = build_bcs_hamiltonian(BcsSpec(eps, V=tuple(map(tuple, V))))
    np.testing.assert_allclose(H, bcs_occupation_hamiltonian(eps, V), atol=1e-13)


@pytest.mark.parametrize("L", [2, 3])
def test_bcs_conserves_particle_number(L):
    rng = np.random.default_rng(L)
    H = build_bcs_hamiltonian(BcsSpec(tuple(rng.normal(size=L)), G=-0.8))
    alg = FermionAlgebra(L)
    N = sum(fermion_operator(alg, m, "number") for m in range(alg.n_modes))
    assert np.max(np.abs(H @ N - N @ H)) <= 1e-10


def test_bcs_capacity():
    with pytest.raises(CapacityError):
        build_bcs_hamiltonian(BcsSpec((0.1,) * 7, G=1.0))


@pytest.mark.parametrize(
    "spec",
    [
        SpinModelSpec(3, 0.4, h=(0.1, 0.2, 0.3), couplings=((0, 2, 0.5),)),
        SpinModelSpec(2, 0.4, cost="grover", index_state=2),
        OscillatorSpec((1.0, 2.0), (0.5, 1.5), ((0, 1, 0.3),), n_max=5),
        SpinBosonSpec(0.3, ((1.0, 0.2),), n_max=6),
        BcsSpec((0.1, -0.2), G=0.4),
    ],
)
def test_builders_return_hermitian(spec):
    assert is_hermitian(build_hamiltonian(spec))


def test_site_operator_ordering():
    op = site_operator(PAULI_Z, 0, [2, 3])
    np.testing.assert_allclose(np.diag(op).real, [1, 1, 1, -1, -1, -1])
