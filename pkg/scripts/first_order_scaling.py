"""Accuracy of the linearized dressing.

Prints ||H_exact - H_first|| / eps^2 per family (flat means second-order
accurate), then the FID peak shift and QPE leakage produced by first-order
dressing as the noise grows.
"""

import argparse

import numpy as np

from dressqsim.dressing import ChannelEnsemble, GenericChannel, SpinZChannel, dress_first_order
from dressqsim.evolution import pure_state
from dressqsim.fid import FidConfig, ladder_observable, run_fid
from dressqsim.models import build_hamiltonian
from dressqsim.qpe import QpeConfig, run_generalized_qpe
from dressqsim.validate import ISING3, anti_aliased_grid, first_order_cases, first_order_ratios, on_grid_diagonal_model


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--eps", type=float, nargs="+", default=[1e-1, 1e-2, 1e-3, 1e-4])
    p.add_argument("--sigmas", type=float, nargs="+", default=[0.01, 0.02, 0.04, 0.08])
    args = p.parse_args()

    print("ratio ||exact - first|| / eps^2")
    for label, model, channel, closed in first_order_cases():
        ratios = first_order_ratios(model, channel, closed, args.eps)
        print(f"  {label:11s} " + " ".join(f"{r:9.4f}" for r in ratios))

    H = build_hamiltonian(ISING3)
    cfg = FidConfig(anti_aliased_grid(H, 16384), ladder_observable(ISING3.dims, 0), window="hann")
    rho0 = pure_state(np.ones(8))
    n, t, js = 5, 0.9, [3, 11, 20, 27]
    model = on_grid_diagonal_model(n, t, js)
    Hd = build_hamiltonian(model)
    P = np.random.default_rng(6).normal(size=(4, 4))
    P = P + P.T
    print("sigma   FID peak shift   QPE leakage")
    for sigma in args.sigmas:
        ch = SpinZChannel((sigma, -0.7 * sigma, 0.5 * sigma))
        res = run_fid([(1.0, dress_first_order(H, ch, ISING3))], H, rho0, cfg)
        shift = max(m.delta for m in res.report.matches)
        ens = ChannelEnsemble(((1.0, GenericChannel(P, sigma)),))
        q = run_generalized_qpe(QpeConfig(n, ens, t, initial_state=np.ones(4) / 2, dressing="first_order"), Hd, model)
        print(f"{sigma:5.3f}   {shift:14.3e}   {1 - q.histogram[js].sum():11.3e}")


if __name__ == "__main__":
    main()
