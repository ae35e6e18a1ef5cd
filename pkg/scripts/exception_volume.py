"""Exception-volume ratios for a fixed rank-one U and for U growing with T.

With U fixed the hit set is a tube of radius sqrt(s) Phi(T) around a fixed line, so the
estimate scales like Phi(T)^(s-1) while the reference T Phi(T)^(s-1) carries an extra T.
Scaling U with T restores a bounded ratio.

Usage: python3 scripts/exception_volume.py [--samples 100000]
"""
import argparse

import numpy as np

from denseforest.diophantine import PhiSpec, exception_volume_mc


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--samples", type=int, default=100_000)
    parser.add_argument("--T", default="4,8,16")
    args = parser.parse_args()
    phi = PhiSpec(1.0, 2.0)
    Ts = [int(t) for t in args.T.split(",")]
    for label, make in (("fixed U = (1,1,1)", lambda T: np.ones((3, 1))),
                        ("U = (T,T,T)/2", lambda T: np.full((3, 1), T // 2))):
        ests = [exception_volume_mc(make(T), T, phi, 1.0, args.samples) for T in Ts]
        ratios = [e.ratio for e in ests]
        spread = max(ratios) / min(ratios) if min(ratios) > 0 else float("inf")
        print(f"{label:20s} ratios {[round(r, 3) for r in ratios]} largest/smallest {spread:.2f}")


if __name__ == "__main__":
    main()
