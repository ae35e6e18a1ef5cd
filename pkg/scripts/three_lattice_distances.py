"""Minimum pairwise distance of the three-lattice forest across window radii.

Usage: python3 scripts/three_lattice_distances.py [--radii 250,500,1000]
"""
import argparse

import numpy as np

from denseforest.forest import THREE_LATTICE, generate, min_pairwise_distance, three_lattice_forest
from denseforest.lattice import Window


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--radii", default="250,500,1000")
    args = parser.parse_args()
    print("(alpha+gamma)(beta+delta) =", THREE_LATTICE.identity_product())
    print("gamma/(delta(alpha+gamma)) =", THREE_LATTICE.identity_ratio())
    forest = three_lattice_forest()
    for r in (float(x) for x in args.radii.split(",")):
        cloud = generate(forest, Window(np.zeros(2), r))
        print(f"r={r:g}: {len(cloud)} points, min distance {min_pairwise_distance(cloud.points):.15f}")


if __name__ == "__main__":
    main()
