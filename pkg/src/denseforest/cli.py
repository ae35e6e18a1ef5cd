"""Command-line entry point: ``dfl <command> [options]``.

Every command turns its flags into a config dict, ``run`` dispatches it and returns a
RunReport whose JSON form embeds the config, the results and named pass/fail assertions.
Exit status: 0 all assertions hold, 1 an assertion failed, 2 usage error or unknown command,
3 malformed spec or input, 4 budget exceeded.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .diophantine import (PhiSpec, alpha_exponent, convergence_threshold, exception_volume_mc,
                          phi_visibility_exponent, udt_certified_inf)
from .errors import BudgetExceededError, CertificateError, SpecError
from .forest import (BUILTINS, axis_circle_section, generate, load_spec, min_pairwise_distance,
                     section_from_json, tbg_union)
from .lattice import Window, write_points_csv
from .svg import emit_curve_svg, emit_scatter_svg
from .torus import Counterexample, certify_unavoidable, check_propreduc, reduction_length
from .visibility import DEFAULT_LINE_BUDGET, DEFAULT_REFINE, empty_slab_certificate, verify_slab, visibility_curve

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_SPEC, EXIT_BUDGET = 0, 1, 2, 3, 4
SECTIONS = {"axis_circle": axis_circle_section}


@dataclass
class RunReport:
    command: str
    config: dict
    results: dict = field(default_factory=dict)
    assertions: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.assertions.values())

    def to_json(self, timing: bool = False) -> dict:
        out = {"command": self.command, "version": __version__, "config": self.config,
               "results": self.results, "assertions": self.assertions, "passed": self.passed,
               "artifacts": self.artifacts}
        if timing:
            out["wall_clock"] = self.wall_clock
        return out


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ---------------------------------------------------------------- helpers

def _spec(cfg: dict):
    if cfg.get("builtin"):
        if cfg["builtin"] not in BUILTINS:
            raise SpecError(f"unknown builtin forest {cfg['builtin']!r}; choose from {sorted(BUILTINS)}")
        return BUILTINS[cfg["builtin"]]()
    if cfg.get("spec"):
        return load_spec(cfg["spec"])
    raise SpecError("give --spec FILE or --builtin NAME")


def _window(cfg: dict, dim: int) -> Window:
    centre = cfg.get("center") or [0.0] * dim
    return Window(np.asarray(centre, float), float(cfg["radius"]))


def _floats(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v]


def _int_range(text) -> list:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    text = str(text)
    if ".." in text:
        a, b = text.split("..")
        return list(range(int(a), int(b) + 1))
    return [int(v) for v in text.split(",")]


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise SpecError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(f"malformed JSON in {path}: {exc}") from exc


# ---------------------------------------------------------------- commands

def cmd_gen(cfg, rep: RunReport):
    spec = _spec(cfg)
    window = _window(cfg, spec.dim)
    cloud = generate(spec, window)
    rep.results["points"] = len(cloud)
    if cfg.get("out"):
        write_points_csv(cloud.points, cfg["out"])
        rep.artifacts.append(cfg["out"])
    if cfg.get("svg"):
        emit_scatter_svg(cloud, cfg["svg"], window)
        rep.artifacts.append(cfg["svg"])
    if cfg.get("min_distance") and len(cloud) > 1:
        dmin = min_pairwise_distance(cloud.points)
        rep.results["min_distance"] = dmin
        rep.assertions["uniformly_discrete"] = dmin > 0


def cmd_visibility(cfg, rep: RunReport):
    spec = _spec(cfg)
    window = _window(cfg, 2)
    vis = visibility_curve(spec, _floats(cfg["eps"]), window, line_budget=int(cfg.get("line_budget", DEFAULT_LINE_BUDGET)),
                           refine=int(cfg.get("refine", DEFAULT_REFINE)))
    rep.results.update(vis.to_json())
    rep.assertions["monotone"] = vis.monotone
    rep.assertions["witnesses_verified"] = all(r.verified for r in vis.records)
    if cfg.get("max_slope") is not None:
        rep.assertions["slope_bound"] = bool(vis.slope <= float(cfg["max_slope"]))
    if cfg.get("svg"):
        emit_curve_svg(_floats(cfg["eps"]), vis.lengths, cfg["svg"], vis.slope)
        rep.artifacts.append(cfg["svg"])


def cmd_slab(cfg, rep: RunReport):
    spec = _spec(cfg)
    window = _window(cfg, spec.dim)
    cert = empty_slab_certificate(spec, window, seed=int(cfg.get("seed", 0)))
    rep.results["certificate"] = cert.to_json()
    if cfg.get("verify"):
        cloud = generate(spec, window)
        rep.results["points"] = len(cloud)
        rep.assertions["slab_verified"] = verify_slab(cert, cloud)
        rep.assertions["widened_gap_rejected"] = not verify_slab(cert.widened(2.0), cloud)


def cmd_equidist(cfg, rep: RunReport):
    d, eps, samples = int(cfg["d"]), float(cfg["eps"]), int(cfg["samples"])
    rng = np.random.default_rng(int(cfg.get("seed", 0)))
    half = samples // 2
    per_axis = max(1, int(round(half ** (1.0 / d))))
    ticks = (np.arange(per_axis) + 0.5) / per_axis
    grid = np.stack(np.meshgrid(*([ticks] * d), indexing="ij"), axis=-1).reshape(-1, d)
    xs = np.vstack([grid, rng.random((samples - len(grid), d))])
    res = check_propreduc(d, eps, xs)
    rep.results.update({"M": reduction_length(d, eps), "samples": res.samples, "not_dense": res.not_dense,
                        "violations": [list(v) for v in res.violations]})
    rep.assertions["no_violations"] = res.ok


def cmd_unavoidable(cfg, rep: RunReport):
    if cfg.get("section"):
        section = section_from_json(_read_json(cfg["section"]))
    else:
        name = cfg.get("builtin_section", "axis_circle")
        if name not in SECTIONS:
            raise SpecError(f"unknown section {name!r}")
        section = SECTIONS[name]()
    out = certify_unavoidable(section, float(cfg.get("max_bound", 400.0)))
    if isinstance(out, Counterexample):
        rep.results["counterexample"] = {"q": list(out.q), "gap": list(out.gap)}
        rep.assertions["certified"] = False
    else:
        rep.results["certificate"] = {"q_tail_bound": out.q_bound, "checked": out.checked,
                                      "sigma_min": out.sigma_min, "min_length": out.min_length,
                                      "segments_used": list(out.segments_used)}
        rep.assertions["certified"] = True


def cmd_udt(cfg, rep: RunReport):
    theta = _read_json(cfg["theta"]) if isinstance(cfg["theta"], str) else cfg["theta"]
    if isinstance(theta, dict):
        theta = theta.get("thetas", theta.get("theta"))
    out = udt_certified_inf(theta, int(cfg["T"]), float(cfg["mesh"]))
    rep.results.update({"T": out.T, "mesh": out.mesh, "raw": out.raw, "slack": out.slack,
                        "certified": out.certified, "argmin": list(out.argmin)})
    rep.assertions["certified_positive"] = out.certified > 0


def cmd_udt_exponents(cfg, rep: RunReport):
    rows = []
    ok = True
    for n in _int_range(cfg["n"]):
        for s in _int_range(cfg["s"]):
            if s < n:
                continue
            d = n - 1
            alpha = alpha_exponent(n, s)
            lhs = phi_visibility_exponent(d, convergence_threshold(s, d))
            ok &= lhs == d + alpha
            rows.append({"n": n, "s": s, "alpha": alpha, "threshold": convergence_threshold(s, d),
                         "visibility_exponent": lhs})
    rep.results["rows"] = rows
    rep.assertions["identity"] = bool(ok)
    if cfg.get("table"):
        with open(cfg["table"], "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "s", "alpha", "threshold", "visibility_exponent"])
            for r in rows:
                writer.writerow([r["n"], r["s"], str(r["alpha"]), str(r["threshold"]), str(r["visibility_exponent"])])
        rep.artifacts.append(cfg["table"])


def cmd_udt_mc(cfg, rep: RunReport):
    U = _read_json(cfg["U"]) if isinstance(cfg["U"], str) else cfg["U"]
    if isinstance(U, dict):
        U = U["U"]
    phi = PhiSpec.parse(cfg["phi"])
    rows = []
    for T in _int_range(cfg["T"]):
        est = exception_volume_mc(U, T, phi, float(cfg.get("N", 1)), int(cfg.get("samples", 100_000)),
                                  seed=int(cfg.get("seed", 0)))
        rows.append({"T": T, "hits": est.hits, "estimate": est.estimate, "stderr": est.stderr,
                     "bound": est.bound, "ratio": est.ratio, "note": est.note})
    rep.results["rows"] = rows
    ratios = [r["ratio"] for r in rows if r["ratio"] > 0]
    spread = max(ratios) / min(ratios) if ratios else math.inf
    rep.results["ratio_spread"] = spread
    rep.assertions["ratio_spread_le_3"] = bool(spread <= 3)


def cmd_tbg(cfg, rep: RunReport):
    angles = _floats(cfg["angles"])
    union = tbg_union(int(cfg["k"]), angles)
    window = _window(cfg, 2)
    cloud = generate(union, window)
    rep.results["grids"] = len(union.grids)
    rep.results["points"] = len(cloud)
    if cfg.get("out"):
        write_points_csv(cloud.points, cfg["out"])
        rep.artifacts.append(cfg["out"])
    if cfg.get("svg"):
        emit_scatter_svg(cloud, cfg["svg"], window)
        rep.artifacts.append(cfg["svg"])


def cmd_report(cfg, rep: RunReport):
    configs = _read_json(cfg["config"])
    if isinstance(configs, dict):
        configs = configs.get("runs", [configs])
    for i, sub in enumerate(configs):
        child = run(sub)
        rep.results[f"run_{i}"] = child.to_json()
        rep.assertions[f"run_{i}:{child.command}"] = child.passed


COMMANDS = {"gen": cmd_gen, "visibility": cmd_visibility, "slab": cmd_slab, "equidist": cmd_equidist,
            "unavoidable": cmd_unavoidable, "udt": cmd_udt, "udt-exponents": cmd_udt_exponents,
            "udt-mc": cmd_udt_mc, "tbg": cmd_tbg, "report": cmd_report}


def run(config: dict) -> RunReport:
    """Dispatch a config dict {"command": name, ...parameters}."""
    command = config.get("command")
    if command not in COMMANDS:
        raise KeyError(f"unknown command {command!r}")
    cfg = {k: v for k, v in config.items() if v is not None}
    rep = RunReport(command, cfg)
    start = time.perf_counter()
    COMMANDS[command](cfg, rep)
    rep.wall_clock = time.perf_counter() - start
    return rep


# ---------------------------------------------------------------- argparse

def _common(p: argparse.ArgumentParser, spec: bool = False, radius: bool = False):
    if spec:
        p.add_argument("--spec", help="forest spec JSON file")
        p.add_argument("--builtin", help=f"builtin forest: {', '.join(sorted(BUILTINS))}")
    if radius:
        p.add_argument("--radius", type=float, required=True, help="sup-norm window radius")
        p.add_argument("--center", type=_floats, help="window centre, comma separated")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--report", help="write the JSON run report here")
    p.add_argument("--timing", action="store_true", help="include wall-clock time in the JSON report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dfl", description="Dense forest experiments.")
    parser.add_argument("--threads", type=int, help="worker threads (env DFL_THREADS overrides)")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("gen", help="generate a point cloud")
    _common(p, spec=True, radius=True)
    p.add_argument("--out", help="CSV output")
    p.add_argument("--svg", help="scatter SVG output")
    p.add_argument("--min-distance", action="store_true", help="also report the minimum pairwise distance")

    p = sub.add_parser("visibility", help="longest empty segment against epsilon")
    _common(p, spec=True, radius=True)
    p.add_argument("--eps", required=True, help="decreasing epsilons, comma separated")
    p.add_argument("--line-budget", type=int, default=DEFAULT_LINE_BUDGET)
    p.add_argument("--refine", type=int, default=DEFAULT_REFINE)
    p.add_argument("--max-slope", type=float, help="assert the fitted slope is at most this")
    p.add_argument("--svg", help="log-log curve SVG output")

    p = sub.add_parser("slab", help="empty-slab certificate for a cut-and-project spec")
    _common(p, spec=True, radius=True)
    p.add_argument("--verify", action="store_true", help="generate the cloud and verify the certificate")
    p.add_argument("--out", help="certificate JSON output")

    p = sub.add_parser("equidist", help="check that non-dense orbits have small-dual witnesses")
    _common(p)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--samples", type=int, default=10_000)

    p = sub.add_parser("unavoidable", help="certify a piecewise linear section of T^3")
    _common(p)
    p.add_argument("--section", help="section JSON: list of [a, b] endpoint pairs")
    p.add_argument("--builtin-section", default="axis_circle", help="builtin section name")
    p.add_argument("--max-bound", type=float, default=400.0)

    p = sub.add_parser("udt", help="grid-certified margin of a tuple")
    _common(p)
    p.add_argument("--theta", required=True, help="JSON file with an s x d array")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--mesh", type=float, required=True)

    p = sub.add_parser("udt-exponents", help="exact exponent table")
    _common(p)
    p.add_argument("--n", default="2..6", help="value, list or range a..b")
    p.add_argument("--s", default="2..50", help="value, list or range a..b")
    p.add_argument("--table", help="CSV output")

    p = sub.add_parser("udt-mc", help="Monte Carlo exception volume")
    _common(p)
    p.add_argument("--U", required=True, help="JSON file with an s x d integer matrix")
    p.add_argument("--T", default="4,8,16")
    p.add_argument("--phi", default="T^-2", help="e.g. 'T^-2' or '0.3*T^-1.2'")
    p.add_argument("--N", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=100_000)

    p = sub.add_parser("tbg", help="union of rotated honeycomb lattices")
    _common(p, radius=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--angles", required=True, help="rotation angles in radians, comma separated")
    p.add_argument("--out", help="CSV output")
    p.add_argument("--svg", help="scatter SVG output")

    p = sub.add_parser("report", help="run a list of configs and collect one report")
    _common(p)
    p.add_argument("--config", required=True, help="JSON config or {\"runs\": [...]}")
    return parser


def set_threads(requested: int | None) -> int:
    import numba
    env = os.environ.get("DFL_THREADS")
    n = int(env) if env else requested
    if n:
        n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
        numba.set_num_threads(n)
    return numba.get_num_threads()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    set_threads(args.threads)
    config = {k: v for k, v in vars(args).items() if k not in ("threads", "report", "timing")}
    print(f"dfl {args.command}: seed {args.seed}", file=sys.stderr)
    try:
        rep = run(config)
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (SpecError, CertificateError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    text = dumps(rep.to_json(args.timing))
    if args.report:
        Path(args.report).write_text(text)
    if args.command == "slab" and getattr(args, "out", None):
        Path(args.out).write_text(dumps(rep.results["certificate"]))
    sys.stdout.write(text)
    print(f"{'PASS' if rep.passed else 'FAIL'} in {rep.wall_clock:.2f}s", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
