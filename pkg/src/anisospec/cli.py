"""Command-line interface.

Subcommands: ``spectrum``, ``tree``, ``subdivide``, ``contours``, ``synth`` and
``oracle``. Settings come from command-line flags, then from an optional JSON
file given with ``--config`` (same field names as the long flags, with dashes
replaced by underscores), then from built-in defaults.

Exit status is 0 on success, 1 for input or validation problems and 2 for
numerical failures inside a kernel.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .area import linear_area_curve, mc_sublevel_area, piece_sublevel_area
from .contours import extract_contours, write_contours_csv
from .export import suffixed, write_json, write_spectrum
from .mesh import anisotropy, generate_synthetic, save_mesh
from .quadric import write_quadrics_csv
from .spectrum import DEFAULT_BINS, compare_modes
from .subdivision import subdivide_mesh
from .topology import mode_join_tree, split_tree
from .validation import (
    AnisoError,
    MeshValidationError,
    NumericalError,
    check_bins,
    check_mesh,
    check_modes,
    check_workers,
)

log = logging.getLogger("anisospec")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERIC = 2

DEFAULTS = {
    "input": None,
    "output": None,
    "modes": "abc",
    "bins": DEFAULT_BINS,
    "seed": 0,
    "workers": 1,
    "isovalues": None,
    "samples": 1_000_000,
    "grid": 5,
    "perturb": False,
    "split": False,
    "refine": 2,
    "quadrics": None,
    "tol": None,
    "tri": 0,
    "value": None,
}

# per-command defaults that differ from the common ones
COMMAND_DEFAULTS = {
    "tree": {"modes": "c"},
    "contours": {"modes": "c"},
    "oracle": {"modes": "c"},
}


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors (exit 1); 2 is reserved for numerical failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, *, needs_input=True) -> None:
    S = argparse.SUPPRESS
    if needs_input:
        p.add_argument("--input", "-i", default=S, help="mesh file (.json, or .csv grid with x,y,e,f,g)")
    p.add_argument("--output", "-o", default=S, help="output file")
    p.add_argument("--modes", default=S, help="interpolation modes, e.g. a,b,c")
    p.add_argument("--bins", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--workers", type=int, default=S)
    p.add_argument("--config", default=S, help="JSON file with default settings")
    p.add_argument("-v", "--verbose", action="store_true", default=S, help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = _Parser(prog="anisospec", description="Exact anisotropy spectra, join trees and contours.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("spectrum", help="cumulative histograms and densities")
    _common(p)

    p = sub.add_parser("tree", help="join tree (and optional split tree) as JSON")
    _common(p)
    p.add_argument("--split", action="store_true", default=S, help="also write the split tree")
    p.add_argument("--refine", type=int, default=S, help="refinement levels for mode c")

    p = sub.add_parser("subdivide", help="export the monotone subdivision")
    _common(p)
    p.add_argument("--quadrics", default=S, help="also dump per-triangle quadric coefficients as CSV")

    p = sub.add_parser("contours", help="isocontour polylines as CSV")
    _common(p)
    p.add_argument("--isovalue", dest="isovalues", type=float, action="append", default=S)
    p.add_argument("--tol", type=float, default=S, help="chordal tolerance for mode c")

    p = sub.add_parser("synth", help="write a synthetic tensor mesh")
    _common(p, needs_input=False)
    p.add_argument("--grid", type=int, default=S, help="vertices per side")
    p.add_argument("--perturb", action="store_true", default=S, help="randomly rotate eigenvectors")

    p = sub.add_parser("oracle", help="Monte Carlo sublevel area of one input triangle")
    _common(p)
    p.add_argument("--tri", type=int, default=S)
    p.add_argument("--value", type=float, default=S)
    p.add_argument("--samples", type=int, default=S)
    return parser


def resolve_config(ns: argparse.Namespace) -> dict:
    """Merge flags over the config file over defaults."""
    cfg = dict(DEFAULTS)
    cfg.update(COMMAND_DEFAULTS.get(ns.command, {}))
    given = vars(ns)
    if given.get("config"):
        with open(given["config"], encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        if not isinstance(file_cfg, dict):
            raise ValueError("config file must hold a JSON object")
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        cfg.update(file_cfg)
    cfg.update({k: v for k, v in given.items() if k in DEFAULTS})
    cfg["command"] = ns.command
    cfg["bins"] = check_bins(cfg["bins"])
    cfg["workers"] = check_workers(cfg["workers"])
    cfg["modes"] = check_modes(cfg["modes"])
    if isinstance(cfg["isovalues"], (int, float)):
        cfg["isovalues"] = [cfg["isovalues"]]
    return cfg


def _require(cfg, *keys):
    for k in keys:
        if cfg.get(k) is None:
            raise ValueError(f"--{k} is required for '{cfg['command']}'")


def cmd_spectrum(cfg) -> int:
    _require(cfg, "input", "output")
    mesh = check_mesh(cfg["input"])
    sub = subdivide_mesh(mesh)
    report = compare_modes(sub, cfg["bins"], cfg["modes"], cfg["workers"])
    write_spectrum(report, cfg["output"])
    area = mesh.total_area()
    for m, spec in report.spectra.items():
        top = float(spec.cumulative[-1])
        print(f"mode {m}: cumulative[B]={top!r} mesh area={area!r} rel.err={abs(top - area) / area:.3e} "
              f"mean={report.means[m]:.6g}", file=sys.stderr)
    if report.bias_violation is not None:
        print(f"max(CH_b - CH_c) = {report.bias_violation:.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_tree(cfg) -> int:
    _require(cfg, "input", "output")
    mesh = check_mesh(cfg["input"])
    sub = subdivide_mesh(mesh)
    modes = cfg["modes"]
    for m in modes:
        path = cfg["output"] if len(modes) == 1 else suffixed(cfg["output"], m)
        tree = mode_join_tree(sub, m, int(cfg["refine"]))
        write_json(tree.to_dict(), path)
        print(f"mode {m}: {len(tree.nodes)} nodes, {len(tree.leaves)} minima, "
              f"{len(tree.degenerate_leaves())} degenerate", file=sys.stderr)
        if cfg["split"]:
            st = split_tree(mesh if m == "a" else sub)
            write_json(st.to_dict(), suffixed(path, "split"))
    return EXIT_OK


def cmd_subdivide(cfg) -> int:
    _require(cfg, "input", "output")
    mesh = check_mesh(cfg["input"])
    sub = subdivide_mesh(mesh)
    write_json(sub.to_dict(), cfg["output"])
    if cfg["quadrics"]:
        write_quadrics_csv(sub.quadrics, cfg["quadrics"])
    print(f"{mesh.n_triangles} triangles -> {sub.n_triangles} monotone pieces", file=sys.stderr)
    return EXIT_OK


def cmd_contours(cfg) -> int:
    _require(cfg, "input", "output", "isovalues")
    mesh = check_mesh(cfg["input"])
    sub = subdivide_mesh(mesh)
    for m in cfg["modes"]:
        sets = [extract_contours(sub, m, v, cfg["tol"], cfg["workers"]) for v in cfg["isovalues"]]
        path = cfg["output"] if len(cfg["modes"]) == 1 else suffixed(cfg["output"], m)
        write_contours_csv(sets, path)
        print(f"mode {m}: " + ", ".join(f"v={s.isovalue!r}: {len(s)} polylines" for s in sets), file=sys.stderr)
    return EXIT_OK


def cmd_synth(cfg) -> int:
    _require(cfg, "output")
    mesh = generate_synthetic(int(cfg["grid"]), seed=int(cfg["seed"]), perturb_directions=bool(cfg["perturb"]))
    save_mesh(mesh, cfg["output"])
    print(f"{mesh.n_vertices} vertices, {mesh.n_triangles} triangles", file=sys.stderr)
    return EXIT_OK


def cmd_oracle(cfg) -> int:
    """Monte Carlo estimate for one input triangle; prints ``estimate,std_error``.

    Mode ``c`` samples the tensor field and evaluates the anisotropy exactly,
    modes ``a`` and ``b`` evaluate their linear interpolants. The exact kernel
    value is reported on stderr for comparison.
    """
    _require(cfg, "input", "value")
    mesh = check_mesh(cfg["input"])
    k = int(cfg["tri"])
    if not 0 <= k < mesh.n_triangles:
        raise ValueError(f"--tri {k} is out of range (mesh has {mesh.n_triangles} triangles)")
    if len(cfg["modes"]) != 1:
        raise ValueError("oracle takes a single mode")
    mode = cfg["modes"][0]
    v = float(cfg["value"])
    ids = mesh.triangles[k]
    tri = mesh.vertices[ids]
    sub = subdivide_mesh(mesh)
    pieces = [i for i, p in enumerate(sub.pieces) if p.parent == k]
    if mode == "c":
        tens = mesh.tensors[ids]

        def evaluate(pts):
            return anisotropy(_barycentric_rows(pts, tri) @ tens)

        exact = sum(float(piece_sublevel_area(sub.pieces[i], v)) for i in pieces)
    else:
        if mode == "a":
            vals = mesh.vertex_anisotropy()[ids]

            def evaluate(pts):
                return _barycentric_rows(pts, tri) @ vals

            exact = float(linear_area_curve(vals, abs(_area(tri)), v))
        else:
            evaluate = _piecewise_linear_evaluator(sub, pieces)
            exact = sum(float(linear_area_curve(sub.values[sub.triangles[i]], sub.pieces[i].area, v)) for i in pieces)
    est, se = mc_sublevel_area(evaluate, tri, v, int(cfg["samples"]), seed=int(cfg["seed"]))
    est, se = float(est), float(se)
    line = f"{est!r},{se!r}"
    print(line)
    if cfg["output"]:
        with open(cfg["output"], "w", encoding="utf-8") as fh:
            fh.write("estimate,std_error\n" + line + "\n")
    z = (est - exact) / se if se > 0 else 0.0
    print(f"exact={exact!r} z={z:.3f}", file=sys.stderr)
    return EXIT_OK


def _area(tri):
    d1, d2 = tri[1] - tri[0], tri[2] - tri[0]
    return 0.5 * (d1[0] * d2[1] - d1[1] * d2[0])


def _barycentric_rows(pts, tri):
    m = np.column_stack([tri[1] - tri[0], tri[2] - tri[0]])
    uv = np.linalg.solve(m, (np.asarray(pts) - tri[0]).T).T
    return np.column_stack([1.0 - uv.sum(axis=1), uv])


def _piecewise_linear_evaluator(sub, pieces):
    def evaluate(pts):
        out = np.full(len(pts), np.inf)
        for i in pieces:
            tri = sub.vertices[sub.triangles[i]]
            b = _barycentric_rows(pts, tri)
            inside = np.all(b >= -1e-12, axis=1) & np.isinf(out)
            out[inside] = b[inside] @ sub.values[sub.triangles[i]]
        return out

    return evaluate


COMMANDS = {
    "spectrum": cmd_spectrum,
    "tree": cmd_tree,
    "subdivide": cmd_subdivide,
    "contours": cmd_contours,
    "synth": cmd_synth,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = resolve_config(ns)
        log.info("%s: %s", cfg["command"], {k: v for k, v in cfg.items() if v is not None and k != "command"})
        return COMMANDS[cfg["command"]](cfg)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MeshValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AnisoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
