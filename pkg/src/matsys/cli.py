"""Command line front end: scenarios, probes, range curves, and scans.

Commands read a JSON config (matrices as row-major [[re, im], ...] pair
nests), write JSON/CSV artifacts atomically into the output directory, and
return a CI-friendly exit code: 0 all checks passed, 1 a check failed,
2 the config or arguments are invalid, 3 a solver gave up (partial output
is written and flagged).  Identical config and seed give byte-identical
outputs; reports carry no timestamps.

The probe command samples randomly, so it requires a seed, either as
--seed or as a "seed" config entry.  MATSYS_THREADS bounds the worker
processes of the probe distance solver (0 picks the CPU count).
"""

import argparse
import json
import os
import sys as _stdsys

import numpy as np

from ._io import atomic_write_json, atomic_write_text, matrix_from_pairs
from .errors import (
    Infeasible,
    MatsysError,
    MaxIterExceeded,
    NonConvergence,
    UnknownExample,
)
from .maxent import discontinuity_scan
from .numrange import boundary_curve, strong_continuity_test
from .openness import openness_probe
from .scenarios import SCENARIOS, run_scenario
from .systems import build_system

__all__ = ["main"]


class ConfigError(ValueError):
    """Invalid command line arguments or config file contents."""


_SOLVER_ERRORS = (NonConvergence, Infeasible, MaxIterExceeded)


def _load_config(path, required=True):
    if path is None:
        if required:
            raise ConfigError("--config is required for this command")
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _check_keys(cfg, allowed, where):
    unknown = sorted(set(cfg) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown {where} config keys: {', '.join(unknown)}")


def _matrix(cfg, key):
    if key not in cfg:
        raise ConfigError(f"config is missing the {key!r} matrix")
    return matrix_from_pairs(cfg[key])


def _matrices(cfg, key):
    if key not in cfg or not isinstance(cfg[key], list) or not cfg[key]:
        raise ConfigError(f"config needs a nonempty list of matrices under {key!r}")
    return [matrix_from_pairs(m) for m in cfg[key]]


def _as_complex(value, key):
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"{key!r} must be a number or an [re, im] pair")


def _out_path(args, filename):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, filename)


def _cmd_example(args):
    cfg = _load_config(args.config, required=False)
    _check_keys(cfg, {"params"}, "example")
    params = cfg.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("'params' must be an object of scenario arguments")
    seed = args.seed if args.seed is not None else 0
    if args.name not in SCENARIOS:
        known = ", ".join(sorted(SCENARIOS))
        raise UnknownExample(f"unknown example {args.name!r}; registered: {known}")
    dest = _out_path(args, f"{args.name}.json")
    try:
        report = run_scenario(args.name, seed=seed, **params)
    except TypeError as exc:
        raise ConfigError(f"bad scenario params: {exc}") from exc
    except _SOLVER_ERRORS as exc:
        atomic_write_json(dest, {
            "name": args.name,
            "seed": int(seed),
            "partial": True,
            "error": str(exc),
        })
        return 3
    atomic_write_json(dest, report)
    return 0 if report["passed"] else 1


_PROBE_KEYS = {
    "generators", "center", "seed", "radii", "samples", "floor",
    "slope", "stability", "dykstra_tol", "max_iter", "expect_verdict",
}


def _run_probe(args, cfg):
    gens = _matrices(cfg, "generators")
    center = _matrix(cfg, "center")
    sys = build_system(center.shape[0], gens)
    seed = args.seed if args.seed is not None else cfg.get("seed")
    if seed is None:
        raise ConfigError("the probe samples randomly; give --seed or a 'seed' config entry")
    kwargs = {"seed": int(seed)}
    if "radii" in cfg:
        kwargs["radii"] = tuple(float(r) for r in cfg["radii"])
    for key, cast in (
        ("samples", int), ("floor", float), ("slope", float),
        ("stability", float), ("dykstra_tol", float), ("max_iter", int),
    ):
        if key in cfg:
            kwargs[key] = cast(cfg[key])
    dest = _out_path(args, "probe.json")
    try:
        report = openness_probe(sys, center, **kwargs)
    except _SOLVER_ERRORS as exc:
        atomic_write_json(dest, {"partial": True, "error": str(exc), "seed": int(seed)})
        return 3
    payload = report.to_json()
    status = 0
    if "expect_verdict" in cfg:
        payload["expected_verdict"] = str(cfg["expect_verdict"])
        if report.verdict != cfg["expect_verdict"]:
            status = 1
    atomic_write_json(dest, payload)
    return status


_NUMRANGE_KEYS = {
    "a1", "a2", "grid_size", "all_branches", "z", "theta0", "tol",
    "continuity_grid", "expect_verdict",
}


def _cmd_numrange(args):
    cfg = _load_config(args.config)
    _check_keys(cfg, _NUMRANGE_KEYS, "numrange")
    a1 = _matrix(cfg, "a1")
    a2 = _matrix(cfg, "a2")
    grid_size = int(cfg.get("grid_size", 360))
    all_branches = bool(cfg.get("all_branches", False))
    curve = boundary_curve(a1, a2, grid_size=grid_size, all_branches=all_branches)
    lines = ["theta,branch,re,im"]
    for theta, branch, point in zip(curve.thetas, curve.provenance, curve.points):
        lines.append(
            f"{theta:.17g},{int(branch)},{point.real:.17g},{point.imag:.17g}"
        )
    atomic_write_text(_out_path(args, "boundary.csv"), "\n".join(lines) + "\n")
    payload = {
        "grid_size": grid_size,
        "all_branches": all_branches,
        "num_points": int(curve.points.size),
    }
    status = 0
    if ("z" in cfg) != ("theta0" in cfg):
        raise ConfigError("the splitting test needs both 'z' and 'theta0'")
    if "z" in cfg:
        rep = strong_continuity_test(
            a1, a2,
            _as_complex(cfg["z"], "z"),
            float(cfg["theta0"]),
            tol=float(cfg.get("tol", 1e-6)),
            grid_size=int(cfg.get("continuity_grid", 720)),
        )
        payload["splitting"] = {
            "verdict": rep.verdict,
            "matched_branches": list(rep.matched),
            "theta0": rep.theta0,
            "tol": rep.tol,
            "grid_size": rep.grid_size,
            "grid_based": rep.grid_based,
        }
        if "expect_verdict" in cfg:
            payload["splitting"]["expected_verdict"] = str(cfg["expect_verdict"])
            if rep.verdict != cfg["expect_verdict"]:
                status = 1
    atomic_write_json(_out_path(args, "numrange.json"), payload)
    return status


_SCAN_KEYS = {
    "generators", "path_points", "path", "steps", "tau", "jump_factor",
    "family_tol", "distance_floor", "mode",
}


def _cmd_scan(args):
    cfg = _load_config(args.config)
    _check_keys(cfg, _SCAN_KEYS, "scan")
    gens = _matrices(cfg, "generators")
    if ("path_points" in cfg) == ("path" in cfg):
        raise ConfigError("give exactly one of 'path_points' or 'path'")
    if "path_points" in cfg:
        points = _matrices(cfg, "path_points")
    else:
        spec = cfg["path"]
        if not isinstance(spec, dict) or "start" not in spec or "end" not in spec:
            raise ConfigError("'path' must be an object with 'start' and 'end' matrices")
        start = matrix_from_pairs(spec["start"])
        end = matrix_from_pairs(spec["end"])
        steps = int(cfg.get("steps", 200))
        if steps < 2:
            raise ConfigError("'steps' must be at least 2")
        points = [(1.0 - t) * start + t * end for t in np.linspace(0.0, 1.0, steps)]
    sys = build_system(points[0].shape[0], gens)
    kwargs = {}
    if "tau" in cfg:
        kwargs["tau"] = matrix_from_pairs(cfg["tau"])
    for key, cast in (
        ("jump_factor", float), ("family_tol", float),
        ("distance_floor", float), ("mode", str),
    ):
        if key in cfg:
            kwargs[key] = cast(cfg[key])
    csv_dest = _out_path(args, "scan.csv")
    json_dest = _out_path(args, "scan.json")
    try:
        table = discontinuity_scan(sys, points, **kwargs)
    except _SOLVER_ERRORS as exc:
        atomic_write_json(json_dest, {"partial": True, "error": str(exc)})
        return 3
    atomic_write_text(csv_dest, table.to_csv())
    atomic_write_json(json_dest, {
        "num_points": int(table.params.size),
        "jumps": [float(j) for j in table.jumps],
        "all_converged": bool(np.all(table.converged)),
    })
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="matsys",
        description="matrix system bodies: scenario reports, openness probes, "
        "range boundary curves, and entropy-distance scans",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("example", help="run a registered scenario, write <name>.json")
    ex.add_argument("name", help="registered scenario identifier")
    ex.set_defaults(func=_cmd_example)

    pr = sub.add_parser("probe", help="openness probe from a config, write probe.json")
    pr.set_defaults(func=_run_probe_entry)

    nr = sub.add_parser(
        "numrange",
        help="range boundary curve and optional splitting test, "
        "write boundary.csv and numrange.json",
    )
    nr.set_defaults(func=_cmd_numrange)

    sc = sub.add_parser(
        "scan", help="entropy-distance scan along a path, write scan.csv and scan.json"
    )
    sc.set_defaults(func=_cmd_scan)

    for p in (ex, pr, nr, sc):
        p.add_argument("--config", help="JSON problem description")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--seed", type=int, default=None, help="random seed")
    return parser


def _run_probe_entry(args):
    cfg = _load_config(args.config)
    _check_keys(cfg, _PROBE_KEYS, "probe")
    return _run_probe(args, cfg)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UnknownExample) as exc:
        print(f"matsys: {exc}", file=_stdsys.stderr)
        return 2
    except _SOLVER_ERRORS as exc:
        # a solver failure that escaped a command before any output was set up
        print(f"matsys: {exc}", file=_stdsys.stderr)
        return 3
    except MatsysError as exc:
        # validation failures from the library: bad matrices, bad domains
        print(f"matsys: {exc}", file=_stdsys.stderr)
        return 2
    except ValueError as exc:
        print(f"matsys: {exc}", file=_stdsys.stderr)
        return 2


if __name__ == "__main__":
    _stdsys.exit(main())
