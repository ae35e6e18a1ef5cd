"""Empty-slab certificate for the golden cut-and-project set, verified at growing radii.

Usage: python3 scripts/golden_slab.py [--radii 100,1000,10000]
"""
import argparse
import time

import numpy as np

from denseforest.forest import generate, golden_cut_project
from denseforest.lattice import Window
from denseforest.visibility import empty_slab_certificate, verify_slab


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--radii", default="100,1000,10000")
    args = parser.parse_args()
    spec = golden_cut_project()
    for r in (float(x) for x in args.radii.split(",")):
        start = time.perf_counter()
        window = Window(np.zeros(2), r)
        cert = empty_slab_certificate(spec, window)
        cloud = generate(spec, window)
        print(f"r={r:g}: q={cert.q} eps={cert.epsilon:.4f} points={len(cloud)} "
              f"verified={verify_slab(cert, cloud)} widened-2x={verify_slab(cert.widened(2), cloud)} "
              f"({time.perf_counter() - start:.1f}s)")


if __name__ == "__main__":
    main()
