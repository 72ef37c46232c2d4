import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dressqsim.dressing import EnsembleDescriptor, dressed_hamiltonians, sample_ensemble
from dressqsim.errors import ContractViolation
from dressqsim.evolution import (
    Propagator,
    TimeGrid,
    check_density_matrix,
    evolve_averaged,
    propagator,
    pure_state,
)
from dressqsim.linalg import PAULI_X, PAULI_Z
from dressqsim.models import SpinModelSpec, build_hamiltonian

from oracles import random_hermitian, series_expm

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def trace_distance(a, b):
    return 0.5 * np.abs(np.linalg.eigvalsh(a - b)).sum()


def test_propagator_at_zero():
    H = random_hermitian(np.random.default_rng(0), 4)
    np.testing.assert_allclose(propagator(H, 0.0), np.eye(4), atol=1e-14)


def test_propagator_half_turn():
    np.testing.assert_allclose(propagator(PAULI_Z, np.pi), -np.eye(2), atol=1e-15)


def test_propagator_group_property():
    prop = Propagator(random_hermitian(np.random.default_rng(1), 5))
    np.testing.assert_allclose(prop(0.3) @ prop(1.1), prop(1.4), atol=1e-12)


def test_batch_matches_single():
    prop = Propagator(random_hermitian(np.random.default_rng(2), 3))
    times = [0.0, 0.4, 2.5]
    for U, t in zip(prop.batch(times), times):
        np.testing.assert_allclose(U, prop(t), atol=1e-13)


def test_single_channel_stays_pure():
    rho0 = pure_state([1, 0])
    rho = evolve_averaged([(1.0, PAULI_X)], rho0, TimeGrid(0, 0.37, 20))
    for r in rho:
        assert np.trace(r @ r).real == pytest.approx(1.0, abs=1e-12)


def test_two_channel_mixture():
    # opposite fields leave |0><0| populations equal but average away the coherence
    rho0 = pure_state([1, 1])
    t = np.pi / 4
    rho = evolve_averaged([(0.5, PAULI_Z), (0.5, -PAULI_Z)], rho0, TimeGrid(t, 1.0, 1))[0]
    np.testing.assert_allclose(rho, np.diag([0.5, 0.5]) + 0.5 * np.cos(2 * t) * PAULI_X, atol=1e-14)


def test_averaged_matches_series_oracle():
    spec = SpinModelSpec(3, 0.6, h=(0.5, -0.3, 0.2), couplings=((0, 1, 0.7), (1, 2, -0.4)))
    H = build_hamiltonian(spec)
    ens = sample_ensemble(EnsembleDescriptor("spin_z", count=50, sigma=0.3), 5, spec)
    H_list = dressed_hamiltonians(H, ens, spec)
    rng = np.random.default_rng(9)
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    rho0 = pure_state(psi)
    grid = TimeGrid(0.0, 0.7, 6)
    rho = evolve_averaged(H_list, rho0, grid)
    for r, t in zip(rho, grid.times):
        ref = np.zeros((8, 8), dtype=complex)
        for p, Ha in H_list:
            U = series_expm(-1j * t * Ha)
            ref += p * U @ rho0 @ U.conj().T
        assert trace_distance(r, ref) <= 1e-7


def test_identical_channels_collapse():
    H = random_hermitian(np.random.default_rng(3), 4)
    rho0 = pure_state([1, 0, 0, 0])
    grid = TimeGrid(0, 0.5, 8)
    single = evolve_averaged([(1.0, H)], rho0, grid)
    many = evolve_averaged([(0.25, H)] * 4, rho0, grid)
    np.testing.assert_allclose(many, single, atol=1e-13)


def test_threads_do_not_change_result():
    rng = np.random.default_rng(4)
    H_list = [(0.2, random_hermitian(rng, 4)) for _ in range(5)]
    rho0 = pure_state([1, 1, 0, 0])
    grid = TimeGrid(0, 0.3, 7)
    np.testing.assert_array_equal(evolve_averaged(H_list, rho0, grid, threads=1), evolve_averaged(H_list, rho0, grid, threads=4))


def test_contract_violations():
    with pytest.raises(ContractViolation):
        check_density_matrix(np.diag([0.6, 0.6]))
    with pytest.raises(ContractViolation):
        check_density_matrix(np.diag([1.2, -0.2]))
    with pytest.raises(ContractViolation):
        evolve_averaged([(0.5, PAULI_X)], pure_state([1, 0]), TimeGrid())
    with pytest.raises(ContractViolation):
        evolve_averaged([(1.0, np.eye(4))], pure_state([1, 0]), TimeGrid())
    with pytest.raises(ContractViolation):
        TimeGrid(dt=0.0)


@settings(max_examples=25, deadline=None)
@given(seed=seeds, n_ch=st.integers(1, 6))
def test_averaged_state_is_density_matrix(seed, n_ch):
    rng = np.random.default_rng(seed)
    d = 4
    w = rng.random(n_ch) + 0.1
    w /= w.sum()
    H_list = [(float(p), random_hermitian(rng, d)) for p in w]
    rho0 = pure_state(rng.normal(size=d) + 1j * rng.normal(size=d))
    rho = evolve_averaged(H_list, rho0, TimeGrid(0, 0.4, 10))
    purity = []
    for r in rho:
        assert abs(np.trace(r) - 1) <= 1e-10
        assert np.linalg.eigvalsh(r)[0] >= -1e-9
        purity.append(np.trace(r @ r).real)
    assert max(purity) <= 1 + 1e-10
    assert purity[0] == pytest.approx(1.0, abs=1e-10)
