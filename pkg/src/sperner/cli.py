"""Command-line entry point: ``sperner <subcommand> [flags]``.

Exit codes: 0 success, 2 invalid arguments, 3 search stopped by its budget.
Relative ``--out`` paths are resolved against ``$SPERNER_OUT_DIR`` when set.
"""
from __future__ import annotations

import argparse
import csv
import importlib.resources
import io
import json
import os
import shlex
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, geometry, lattice, render
from . import labeling as lab
from . import search as srch
from .errors import SpernerError

OUT_DIR_ENV = "SPERNER_OUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_BUDGET = 0, 2, 3


class _UsageError(Exception):
    pass


def load_schema(name: str) -> dict:
    """The JSON schema shipped for subcommand output ``name`` (e.g. ``"stats"``)."""
    resource = importlib.resources.files("sperner") / "schemas" / f"{name}.schema.json"
    return json.loads(resource.read_text(encoding="utf-8"))


# ---------------------------------------------------------------- output helpers


def _resolve_out(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get(OUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _write_file(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _flatten(obj: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in obj.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, name + "."))
        elif isinstance(value, list):
            flat[name] = json.dumps(value)
        else:
            flat[name] = value
    return flat


def _emit(payload: dict, args: argparse.Namespace, argv: Sequence[str]) -> None:
    provenance = {"version": __version__, "argv": list(argv), "seed": getattr(args, "seed", None)}
    fmt = args.format
    if fmt == "json":
        sys.stdout.write(json.dumps({**payload, "provenance": provenance}, sort_keys=True) + "\n")
    elif fmt == "csv":
        flat = _flatten(payload)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(list(flat))
        writer.writerow(list(flat.values()))
        sys.stdout.write(buf.getvalue())
    else:
        for key, value in _flatten(payload).items():
            sys.stdout.write(f"{key}: {value}\n")


# ---------------------------------------------------------------- subcommands


def _need(args: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise _UsageError("missing required flag(s): " + ", ".join("--" + n for n in missing))


def cmd_enumerate(args, argv) -> int:
    _need(args, "k", "q")
    k, q = args.k, args.q
    out = _resolve_out(args.out)
    if args.cells:
        points = lattice.vertex_array(k, q - 1) if q >= 1 else None
        if points is None:
            raise _UsageError("--cells needs q >= 1")
    else:
        points = lattice.vertex_array(k, q)
    buf = io.StringIO()
    lattice.write_lattice(buf, k, q, cells=args.cells)
    if out is not None:
        _write_file(out, buf.getvalue())
    if args.format == "text" and out is None:
        sys.stdout.write(buf.getvalue())
        return EXIT_OK
    if args.format == "csv" and out is None:
        w = io.StringIO()
        writer = csv.writer(w, lineterminator="\r\n")
        writer.writerow([f"a{i}" for i in range(1, k + 1)])
        writer.writerows(points.tolist())
        sys.stdout.write(w.getvalue())
        return EXIT_OK
    payload = {
        "k": k,
        "q": q,
        "kind": "cells" if args.cells else "vertices",
        "count": int(points.shape[0]),
        "file": str(out) if out else None,
    }
    if out is None:
        payload["points"] = points.tolist()
    _emit(payload, args, argv)
    return EXIT_OK


def _build_labeling(args) -> lab.Labeling:
    if getattr(args, "input", None):
        return lab.read_labeling(Path(args.input).read_text(encoding="utf-8"))
    _need(args, "k", "q")
    if args.strategy == "random":
        return lab.random_admissible(args.k, args.q, np.random.default_rng(args.seed))
    if args.strategy == "top-coordinate":
        return lab.top_coordinate(args.k, args.q, force=args.force)
    return lab.STRATEGIES[args.strategy](args.k, args.q)


def _stats_payload(labeling: lab.Labeling, with_phi: bool = False) -> dict:
    stats = lab.compute_stats(labeling)
    payload = {"k": labeling.k, "q": labeling.q}
    payload.update(stats.to_json(bound=lab.nonmono_lower_bound(labeling.k, labeling.q)))
    if with_phi and labeling.q >= 2 and stats.admissible:
        w = lab.phi_witness(labeling)
        payload["phi"] = {"total": w.total, "capacity": w.capacity, "valid": w.valid, "disjoint": w.disjoint}
    return payload


def cmd_label(args, argv) -> int:
    labeling = _build_labeling(args)
    buf = io.StringIO()
    lab.write_labeling(buf, labeling)
    out = _resolve_out(args.out)
    if out is not None:
        _write_file(out, buf.getvalue())
    if args.stats:
        payload = _stats_payload(labeling)
        payload["strategy"] = args.strategy
        payload["file"] = str(out) if out else None
        _emit(payload, args, argv)
    elif out is None:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_stats(args, argv) -> int:
    if not args.input:
        raise _UsageError("stats needs --in FILE")
    labeling = _build_labeling(args)
    _emit(_stats_payload(labeling, with_phi=args.phi), args, argv)
    return EXIT_OK


def cmd_verify_bound(args, argv) -> int:
    _need(args, "k", "q")
    k, q = args.k, args.q
    bound = lab.nonmono_lower_bound(k, q)
    cells = lattice.lattice_size(k, q - 1)
    capacity = lattice.lattice_size(k, q - 2)
    fc = lab.compute_stats(lab.first_choice(k, q))
    payload = {
        "k": k,
        "q": q,
        "bound": bound,
        "vertices": lattice.lattice_size(k, q),
        "cells": cells,
        "mono_capacity": capacity,
        "identity_holds": cells - capacity == bound,
        "first_choice_nonmono": fc.nonmonochromatic_count,
        "meets_bound": fc.nonmonochromatic_count == bound,
    }
    _emit(payload, args, argv)
    return EXIT_OK


def cmd_search(args, argv) -> int:
    _need(args, "k", "q")
    objective = srch.Objective(args.objective.replace("-", "_"))
    if args.heuristic:
        if objective is not srch.Objective.MIN_MAX_COLORS:
            raise _UsageError("--heuristic supports --objective min-max-colors only")
        result = srch.random_restart_min_max_colors(
            args.k, args.q, seed=args.seed, iters=args.iters, restarts=args.restarts
        )
    else:
        spec = srch.SearchSpec(
            args.k,
            args.q,
            objective,
            node_limit=args.node_limit,
            time_limit=args.time_limit,
            prune=not args.no_prune,
            use_bound=not args.no_bound,
            workers=args.workers,
        )
        result = srch.exhaustive_search(spec)
    out = _resolve_out(args.out)
    if out is None and os.environ.get(OUT_DIR_ENV):
        out = _resolve_out(f"witness_{objective.value}_k{args.k}_q{args.q}.labeling")
    if out is not None:
        buf = io.StringIO()
        lab.write_labeling(buf, result.witness)
        _write_file(out, buf.getvalue())
    payload = result.to_json(witness_file=str(out) if out else None)
    payload["heuristic"] = bool(args.heuristic)
    _emit(payload, args, argv)
    if not args.heuristic and not result.proven_optimal:
        return EXIT_BUDGET
    return EXIT_OK


def _parse_z(text: str | None, k: int) -> geometry.VoronoiSpec:
    if text is None:
        return geometry.VoronoiSpec.centered(k)
    z = [float(t) for t in text.split(",")]
    if len(z) != k:
        raise _UsageError(f"--z needs {k} comma-separated values")
    return geometry.VoronoiSpec(np.array(z))


def cmd_measure(args, argv) -> int:
    _need(args, "k")
    spec = _parse_z(args.z, args.k)
    report = geometry.mc_minkowski_content(spec, args.eps, args.samples, seed=args.seed, workers=args.workers)
    payload = report.to_json()
    if np.allclose(spec.z, geometry.barycenter(args.k)):
        payload["neighborhood_volume_exact"] = geometry.eps_neighborhood_volume_exact(args.k, args.eps)
    _emit(payload, args, argv)
    return EXIT_OK


def cmd_square_demo(args, argv) -> int:
    deltas = [float(t) for t in args.deltas.split(",")]
    _emit(geometry.square_demo(deltas).to_json(), args, argv)
    return EXIT_OK


def cmd_render(args, argv) -> int:
    if args.k is None:
        args.k = 3
    if args.voronoi:
        spec = _parse_z(args.z, args.k)
        svg = render.render_voronoi_svg(spec)
        summary = {"kind": "voronoi", "z": spec.z.tolist()}
    else:
        if args.input is None and args.strategy is None:
            labeling = None
            _need(args, "q")
            q = args.q
        else:
            labeling = _build_labeling(args)
            q = labeling.q
        if (labeling.k if labeling else args.k) != 3:
            raise _UsageError("render supports k = 3 only")
        svg = render.render_lattice_svg(q, labeling)
        summary = {"kind": "lattice", "q": q, **render.summarize_lattice_render(q, labeling)}
    out = _resolve_out(args.out)
    if out is None:
        sys.stdout.write(svg)
        return EXIT_OK
    _write_file(out, svg)
    summary["file"] = str(out)
    _emit(summary, args, argv)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--k", type=int)
    common.add_argument("--q", type=int)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out")
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1)

    parser = argparse.ArgumentParser(prog="sperner", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"sperner {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", parents=[common], help="dump V(k,q) or the cell bases of E(k,q)")
    p.add_argument("--cells", action="store_true")
    p.set_defaults(func=cmd_enumerate)

    strategies = (*lab.STRATEGIES, "random")
    p = sub.add_parser("label", parents=[common], help="build a labeling and optionally report its stats")
    p.add_argument("--strategy", choices=strategies, default="first-choice")
    p.add_argument("--force", action="store_true", help="allow top-coordinate outside k>=4, q>=k^2")
    p.add_argument("--stats", action="store_true")
    p.set_defaults(func=cmd_label, input=None)

    p = sub.add_parser("stats", parents=[common], help="statistics of a labeling file")
    p.add_argument("--in", dest="input")
    p.add_argument("--phi", action="store_true", help="include the injection certificate")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("verify-bound", parents=[common], help="counting identity and first-choice tightness")
    p.set_defaults(func=cmd_verify_bound)

    p = sub.add_parser("search", parents=[common], help="exhaustive or heuristic labeling search")
    p.add_argument("--objective", choices=("min-nonmono", "min-max-colors"), default="min-nonmono")
    p.add_argument("--no-prune", action="store_true")
    p.add_argument("--no-bound", action="store_true", help="do not stop early at the known lower bound")
    p.add_argument("--node-limit", type=int, default=10**8)
    p.add_argument("--time-limit", type=float, default=60.0)
    p.add_argument("--heuristic", action="store_true")
    p.add_argument("--iters", type=int, default=10_000)
    p.add_argument("--restarts", type=int, default=4)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("measure", parents=[common], help="Monte Carlo Minkowski content of a separating set")
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--z", help="comma-separated interior base point (default: barycenter)")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("square-demo", parents=[common], help="separating lengths in the unit square")
    p.add_argument("--deltas", default="0.2,0.1,0.05,0.01")
    p.set_defaults(func=cmd_square_demo)

    p = sub.add_parser("render", parents=[common], help="SVG of a k=3 lattice, labeling or partition")
    p.add_argument("--strategy", choices=strategies)
    p.add_argument("--in", dest="input")
    p.add_argument("--force", action="store_true")
    p.add_argument("--voronoi", action="store_true")
    p.add_argument("--z")
    p.set_defaults(func=cmd_render)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    print(f"# sperner {__version__} argv={shlex.join(argv)} seed={args.seed}", file=sys.stderr)
    try:
        return args.func(args, argv)
    except (_UsageError, SpernerError, OSError, ValueError) as exc:
        print(f"sperner {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
