"""Invariant suites run by ``dressqsim validate``.

Each check returns a :class:`CheckResult`; a raised package error counts
as a failure of that check, never of the suite. The study helpers at the
top are shared with the experiment scripts.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .dressing import (
    BcsChannel,
    EnsembleDescriptor,
    GenericChannel,
    OscillatorChannel,
    SpinBosonChannel,
    SpinZChannel,
    build_dressing_unitary,
    dress_closed_form,
    dress_exact,
    dress_first_order,
    dressed_hamiltonians,
    momentum_shift_couplings,
    sample_ensemble,
    scale_channel,
)
from .errors import DressqsimError
from .evolution import TimeGrid, evolve_averaged, pure_state
from .fid import FidConfig, fid_signal, ladder_observable, run_fid
from .linalg import DEFAULT_POLICY, NumericalPolicy, check_unitary, conjugate, eigh, spectral_norm
from .models import (
    BcsSpec,
    FermionAlgebra,
    MatrixModelSpec,
    OscillatorSpec,
    SpinBosonSpec,
    SpinModelSpec,
    build_hamiltonian,
    pair_hopping_mask,
    pairing_hamiltonian,
)
from .qpe import QpeConfig, qpe_circuit_distribution, qpe_kernel_distribution, run_generalized_qpe

# reference models shared by the checks, the scripts and the acceptance tests
ISING3 = SpinModelSpec(3, 0.6, h=(0.5, -0.3, 0.2), couplings=((0, 1, 0.7), (0, 2, 0.3), (1, 2, -0.4)))
OSC2 = dict(masses=(1.0, 1.3), stiffness=(1.0, 0.7), couplings=((0, 1, 0.4),))
SB1 = dict(B=0.5, modes=((1.0, 0.3),))
BCS3 = BcsSpec((0.1, 0.25, 0.45), G=-0.5)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "seconds": round(self.seconds, 3), "detail": self.detail}


# ---------------------------------------------------------------- studies


def anti_aliased_grid(H, n_samples: int, fraction: float = 0.5, policy: NumericalPolicy = DEFAULT_POLICY) -> TimeGrid:
    """Grid with ``dt = fraction * pi / (E_max - E_min)``."""
    e = eigh(H, policy).eigenvalues
    width = float(e[-1] - e[0])
    return TimeGrid(0.0, fraction * math.pi / width if width > 0 else 0.1, n_samples)


def max_spectral_deviation(H, H_list, policy: NumericalPolicy = DEFAULT_POLICY) -> float:
    e0 = eigh(H, policy).eigenvalues
    return max(float(np.max(np.abs(eigh(Ha, policy).eigenvalues - e0))) for _, Ha in H_list)


def truncation_study(family: str, n_max_values, sigma: float = 0.1, seed: int = 0, policy: NumericalPolicy = DEFAULT_POLICY):
    """Lowest-level deviation of closed-form dressed bosonic models per truncation.

    Returns ``[(n_max, deviation)]`` where deviation is the largest error of
    the lowest ``n_max // 2`` dressed eigenvalues against the untruncated
    reference: normal-mode levels for oscillators, a 60-level noiseless
    calculation for the spin-boson model.
    """
    rng = np.random.default_rng(seed)
    out = []
    if family == "oscillator":
        channel = OscillatorChannel(tuple(rng.normal(0, sigma, 2)), tuple(rng.normal(0, sigma, 2)))
        w = OscillatorSpec(n_max=2, **OSC2).normal_mode_frequencies()
        levels = sorted((a + 0.5) * w[0] + (b + 0.5) * w[1] for a in range(40) for b in range(40))
        for n_max in n_max_values:
            Ha = dress_closed_form(channel, OscillatorSpec(n_max=n_max, **OSC2), policy)
            k = n_max // 2
            out.append((n_max, float(np.max(np.abs(eigh(Ha, policy).eigenvalues[:k] - levels[:k])))))
        return out
    if family == "spin_boson":
        a = rng.normal(0, sigma, 3)
        channel = SpinBosonChannel(float(a[0]), (complex(a[1], a[2]),))
        ref = eigh(build_hamiltonian(SpinBosonSpec(n_max=60, **SB1)), policy).eigenvalues
        for n_max in n_max_values:
            Ha = dress_closed_form(channel, SpinBosonSpec(n_max=n_max, **SB1), policy)
            k = n_max // 2
            out.append((n_max, float(np.max(np.abs(eigh(Ha, policy).eigenvalues[:k] - ref[:k])))))
        return out
    raise ValueError(f"no truncation study for family {family!r}")


def first_order_cases():
    """``(label, model, channel, closed_form)`` at unit scale, one per family."""
    rng = np.random.default_rng(2024)
    bcs = BcsSpec((0.1, 0.25, 0.45), G=-0.5)
    return [
        ("spin_z", ISING3, SpinZChannel((0.9, -1.1, 0.4)), False),
        ("oscillator", OscillatorSpec(n_max=10, **OSC2), OscillatorChannel((0.7, -1.2), (0.5, 0.9)), True),
        ("spin_boson", SpinBosonSpec(n_max=12, **SB1), SpinBosonChannel(0.7, (0.5 - 0.3j,)), True),
        ("bcs_q", bcs, BcsChannel(1, (0.8, -0.4, 1.1)), False),
        ("generic", ISING3, GenericChannel(_random_hermitian(rng, 8)), False),
    ]


def first_order_ratios(model, channel, closed: bool, eps_values=(1e-1, 1e-2, 1e-3), policy: NumericalPolicy = DEFAULT_POLICY):
    """``||H_exact - H_first|| / eps^2`` for each ``eps``.

    Bosonic families use the closed-form dressing as the exact reference,
    since conjugating by a truncated unitary adds an ``O(eps)`` edge error.
    """
    H = build_hamiltonian(model, policy)
    ratios = []
    for eps in eps_values:
        ch = scale_channel(channel, eps)
        if closed:
            exact = dress_closed_form(ch, model, policy)
        else:
            exact = dress_exact(H, build_dressing_unitary(ch, model, policy), policy)
        ratios.append(spectral_norm(exact - dress_first_order(H, ch, model, policy), policy) / eps**2)
    return ratios


def spectral_expansion_signal(H, rho0, O, times, policy: NumericalPolicy = DEFAULT_POLICY):
    """``sum_uv rho_uv O_vu exp(-i (E_u - E_v) t)`` in the eigenbasis of ``H``."""
    s = eigh(H, policy)
    v = s.eigenvectors
    amp = (v.conj().T @ rho0 @ v) * (v.conj().T @ O @ v).T
    return np.exp(-1j * np.multiply.outer(np.asarray(times), s.gaps().ravel())) @ amp.ravel()


def bcs_shift_report(spec: BcsSpec, q: int, policy: NumericalPolicy = DEFAULT_POLICY) -> dict:
    """Errors of the exact momentum-shift dressing against the ``q``-pair form."""
    L = spec.L
    alg = FermionAlgebra(L)
    V = build_dressing_unitary(BcsChannel(q, tuple(momentum_shift_couplings(L, q))), spec, policy)
    eps_down = [spec.eps[(k - q) % L] for k in range(L)]
    kinetic = pairing_hamiltonian(alg, spec.eps, spec.eps, np.zeros((L, L)))
    H = build_hamiltonian(spec, policy)
    Hq = conjugate(H, V, policy)
    return {
        "single_particle_error": float(np.max(np.abs(conjugate(kinetic, V, policy) - pairing_hamiltonian(alg, spec.eps, eps_down, np.zeros((L, L)))))),
        "spectrum_error": float(np.max(np.abs(eigh(Hq, policy).eigenvalues - eigh(H, policy).eigenvalues))),
        "outside_pair_moves": float(np.max(np.abs(Hq[~pair_hopping_mask(L, q)]), initial=0.0)),
        "q_pairing_form_error": float(np.max(np.abs(Hq - pairing_hamiltonian(alg, spec.eps, eps_down, spec.interaction(), q=q)))),
    }


def on_grid_diagonal_model(n: int, t: float, js) -> MatrixModelSpec:
    return MatrixModelSpec(np.diag(-math.pi * np.asarray(js, dtype=float) / (2 ** (n - 1) * t)))


def _random_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


# ---------------------------------------------------------------- checks


def check_dressing_unitarity(policy, seed, opts):
    models = [ISING3, OscillatorSpec(n_max=6, **OSC2), SpinBosonSpec(n_max=8, **SB1), BcsSpec((0.1, 0.3), G=-0.5), MatrixModelSpec(np.eye(6))]
    families = ["spin_z", "oscillator", "spin_boson", "bcs_q", "generic"]
    worst = {}
    for fam, model in zip(families, models):
        ens = sample_ensemble(EnsembleDescriptor(fam, count=3, sigma=0.3), seed, model)
        err = 0.0
        for ch in ens.channels:
            V = build_dressing_unitary(ch, model, policy)
            check_unitary(V, policy)
            err = max(err, float(np.max(np.abs(V @ V.conj().T - np.eye(len(V))))))
        worst[fam] = err
    return True, {"max_unitarity_error": worst, "unitary_atol": policy.unitary_atol}


def check_spectral_invariance(policy, seed, opts):
    count, sigma = opts.get("channels", 20), opts.get("sigma", 0.3)
    detail, ok = {}, True
    for label, model, fam in [("spin_n3", ISING3, "spin_z"), ("bcs_L2", BcsSpec((0.1, 0.3), G=-0.5), "bcs_q"), ("bcs_L3", BCS3, "bcs_q")]:
        H = build_hamiltonian(model, policy)
        ens = sample_ensemble(EnsembleDescriptor(fam, count=count, sigma=sigma), seed, model)
        dev = max_spectral_deviation(H, dressed_hamiltonians(H, ens, model, policy=policy), policy)
        bound = policy.spectrum_rtol * (1 + spectral_norm(H, policy))
        detail[label] = {"max_deviation": dev, "bound": bound}
        ok &= dev <= bound
    return ok, detail


def check_truncation_convergence(policy, seed, opts):
    detail, ok = {}, True
    for fam, values in [("oscillator", (6, 8, 10)), ("spin_boson", (8, 12))]:
        devs = truncation_study(fam, values, 0.1, seed, policy)
        seq = [d for _, d in devs]
        detail[fam] = devs
        ok &= all(b < a for a, b in zip(seq, seq[1:]))
    return ok, detail


def check_first_order_scaling(policy, seed, opts):
    detail, ok = {}, True
    for label, model, ch, closed in first_order_cases():
        r = first_order_ratios(model, ch, closed, policy=policy)
        detail[label] = r
        ok &= max(r) / min(r) < 2
    return ok, detail


def check_density_matrices(policy, seed, opts):
    H = build_hamiltonian(ISING3, policy)
    ens = sample_ensemble(EnsembleDescriptor("spin_z", count=opts.get("channels", 20), sigma=0.3), seed, ISING3)
    rho0 = pure_state(np.ones(8))
    rho = evolve_averaged(dressed_hamiltonians(H, ens, ISING3, policy=policy), rho0, TimeGrid(0, 0.3, 30), policy)
    trace_err = float(np.max(np.abs(np.trace(rho, axis1=1, axis2=2) - 1)))
    min_eig = float(min(np.linalg.eigvalsh(r)[0] for r in rho))
    purity = [float(np.trace(r @ r).real) for r in rho]
    ok = trace_err <= policy.trace_atol and min_eig >= -policy.positivity_atol and max(purity) <= 1 + 1e-9
    return ok, {"trace_error": trace_err, "min_eigenvalue": min_eig, "max_purity": max(purity), "final_purity": purity[-1]}


def check_fid_expansion(policy, seed, opts):
    H = build_hamiltonian(ISING3, policy)
    ens = sample_ensemble(EnsembleDescriptor("spin_z", count=5, sigma=0.1), seed, ISING3)
    rho0 = pure_state(np.ones(8))
    O = ladder_observable(ISING3.dims, 0)
    grid = anti_aliased_grid(H, 1024, policy=policy)
    worst = 0.0
    for p, Ha in dressed_hamiltonians(H, ens, ISING3, policy=policy):
        sig = fid_signal([(1.0, Ha)], rho0, FidConfig(grid, O), policy, reference=eigh(H, policy))
        ref = spectral_expansion_signal(Ha, rho0, O, grid.times, policy)
        worst = max(worst, float(np.max(np.abs(sig - ref)) / np.max(np.abs(ref))))
    return worst <= 1e-8, {"max_relative_error": worst}


def check_fid_peaks(policy, seed, opts):
    H = build_hamiltonian(ISING3, policy)
    cfg = FidConfig(anti_aliased_grid(H, opts.get("fid_samples", 2048), policy=policy), ladder_observable(ISING3.dims, 0), window="hann")
    detail, ok = {}, True
    for sigma in (0.0, 0.05):
        ens = sample_ensemble(EnsembleDescriptor("spin_z", count=opts.get("channels", 20), sigma=sigma), seed, ISING3)
        res = run_fid(dressed_hamiltonians(H, ens, ISING3, policy=policy), H, pure_state(np.ones(8)), cfg, policy=policy)
        worst = max((m.delta for m in res.report.matches), default=0.0)
        detail[f"sigma_{sigma}"] = {"peaks": len(res.peaks), "max_delta_bins": worst / res.bin_width}
        ok &= bool(res.peaks) and res.report.all_matched
    return ok, detail


def check_qpe_kernel_circuit(policy, seed, opts):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for d, n in itertools.islice(itertools.cycle([(2, 3), (4, 4), (8, 5)]), opts.get("qpe_instances", 6)):
        H = _random_hermitian(rng, d)
        psi = rng.normal(size=d) + 1j * rng.normal(size=d)
        psi /= np.linalg.norm(psi)
        t = float(rng.uniform(0.2, 1.5))
        s = eigh(H, policy)
        kern = qpe_kernel_distribution(s.eigenvalues, np.abs(s.eigenvectors.conj().T @ psi) ** 2, t, n)
        worst = max(worst, float(np.max(np.abs(kern - qpe_circuit_distribution(H, psi, t, n, policy)))))
    return worst <= 1e-9, {"max_bin_difference": worst}


def check_qpe_dummy_index(policy, seed, opts):
    n, t = 6, 0.9
    js = [2, 9, 17, 33, 40, 58]
    model = on_grid_diagonal_model(n, t, js)
    H = build_hamiltonian(model, policy)
    psi = np.arange(1, 7) / np.linalg.norm(np.arange(1, 7))
    ens = sample_ensemble(EnsembleDescriptor("generic", count=opts.get("channels", 20), sigma=0.2), seed, model)
    detail, ok = {"noiseless_support": js}, True
    for reading in ("reexpand", "dressed"):
        res = run_generalized_qpe(QpeConfig(n, ens, t, initial_state=psi, reading=reading), H, model, policy)
        support = sorted(res.support(policy.support_floor))
        detail[reading] = {"support": support, "histogram_sum": float(res.histogram.sum())}
        ok &= support == js and abs(res.histogram.sum() - 1) <= policy.histogram_atol
    return ok, detail


def check_bcs_structure(policy, seed, opts):
    report = bcs_shift_report(BCS3, 1, policy)
    ok = report["single_particle_error"] <= 1e-9 and report["spectrum_error"] <= 1e-9 and report["outside_pair_moves"] <= 1e-9
    return ok, report


CHECKS = {
    "dressing_unitarity": check_dressing_unitarity,
    "spectral_invariance": check_spectral_invariance,
    "truncation_convergence": check_truncation_convergence,
    "first_order_scaling": check_first_order_scaling,
    "density_matrices": check_density_matrices,
    "fid_spectral_expansion": check_fid_expansion,
    "fid_peak_invariance": check_fid_peaks,
    "qpe_kernel_circuit": check_qpe_kernel_circuit,
    "qpe_dummy_index": check_qpe_dummy_index,
    "bcs_structure": check_bcs_structure,
}


def run_checks(policy: NumericalPolicy = DEFAULT_POLICY, seed: int = 0, options: dict | None = None) -> list[CheckResult]:
    """Run the selected checks (``options["checks"]``, default all) in a fixed order."""
    options = dict(options or {})
    names = options.get("checks") or list(CHECKS)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        from .errors import ConfigError

        raise ConfigError(f"unknown checks {unknown}; expected a subset of {list(CHECKS)}", key="validate.checks")
    results = []
    for name in names:
        start = time.perf_counter()
        try:
            passed, detail = CHECKS[name](policy, seed, options)
        except DressqsimError as exc:
            passed, detail = False, {"error": f"{type(exc).__name__}: {exc}"}
        results.append(CheckResult(name, bool(passed), detail, time.perf_counter() - start))
    return results
