"""Max-empty-segment curves for Z^2, the Peres forest and the three-lattice forest.

Usage: python3 scripts/visibility_curves.py [--radius 2000] [--line-budget 50000] [--out results]
"""
import argparse
import json
from pathlib import Path

import numpy as np

from denseforest.cli import dumps
from denseforest.forest import peres_forest, three_lattice_forest
from denseforest.lattice import Grid, Lattice, Window
from denseforest.svg import emit_curve_svg
from denseforest.visibility import visibility_curve


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--radius", type=float, default=2000.0)
    parser.add_argument("--eps", default="0.4,0.2,0.1")
    parser.add_argument("--line-budget", type=int, default=50_000)
    parser.add_argument("--out", default="results")
    args = parser.parse_args()
    eps = [float(e) for e in args.eps.split(",")]
    out = Path(args.out)
    out.mkdir(exist_ok=True)
    window = Window(np.zeros(2), args.radius)
    forests = {"Z2": Grid(Lattice(np.eye(2))), "peres": peres_forest(), "three_lattice": three_lattice_forest()}
    for name, spec in forests.items():
        rep = visibility_curve(spec, eps, window, line_budget=args.line_budget)
        (out / f"visibility_{name}.json").write_text(dumps(rep.to_json()))
        emit_curve_svg(eps, rep.lengths, out / f"visibility_{name}.svg", rep.slope)
        print(f"{name:14s} lengths {[round(x, 3) for x in rep.lengths]} slope {rep.slope:.3f} "
              f"monotone {rep.monotone} not-a-forest {rep.not_a_forest}")


if __name__ == "__main__":
    main()
