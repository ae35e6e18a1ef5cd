"""Violation reconstruction over random tuples, and bad-pair margins of the golden ratio.

Usage: python3 scripts/udt_survey.py [--tuples 200]
"""
import argparse

import numpy as np

from denseforest.diophantine import PhiSpec, bad_pair_margin, udt_violation_consistency
from denseforest.forest import PHI


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--tuples", type=int, default=200)
    args = parser.parse_args()
    for T in (10, 100, 1000):
        print(f"bad pair margin of phi at T={T}: {bad_pair_margin(PHI, T):.10f}")
    rng = np.random.default_rng(0)
    phi = PhiSpec(0.3, 1.2)
    found = failures = 0
    worst = 0.0
    for k in range(args.tuples):
        rep = udt_violation_consistency(rng.random((3, 1)), phi, seed=k)
        found += rep.found
        failures += len(rep.failures)
        worst = max([worst] + [c.residual / c.bound for c in rep.checks])
    print(f"{args.tuples} tuples: {found} violations, {failures} failures, largest residual/bound {worst:.3f}")


if __name__ == "__main__":
    main()
