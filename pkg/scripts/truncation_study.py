"""Low-level error of dressed bosonic models versus Fock truncation.

Uses the closed-form dressing (shifted quadratures projected onto the kept
levels) and compares its lowest levels with the untruncated reference.
Conjugating by the truncated displacement unitary is instead isospectral
with the truncated noiseless model, so it needs no separate study.
"""

import argparse

from dressqsim.validate import truncation_study


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=5)
    p.add_argument("--osc-nmax", type=int, nargs="+", default=[4, 6, 8, 10, 12, 14, 16])
    p.add_argument("--sb-nmax", type=int, nargs="+", default=[4, 8, 12, 16, 20])
    args = p.parse_args()

    for family, values in (("oscillator", args.osc_nmax), ("spin_boson", args.sb_nmax)):
        print(f"{family}: lowest n_max/2 levels, closed-form dressing, sigma={args.sigma}")
        for n_max, dev in truncation_study(family, values, args.sigma, args.seed):
            print(f"  n_max={n_max:3d}  max deviation {dev:.3e}")


if __name__ == "__main__":
    main()
