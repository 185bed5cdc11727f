"""Command-line entry point.

Exit codes: 0 when every check passes, 1 when a numerical check fails,
2 for usage errors and instances the checks do not apply to.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .field import CalibrationField, TangentFrame, deficit, diagnostics, divergence_trace, eval_W
from .fuzz import CONDITIONING_YMAX, fuzz
from .mesh import MeshFormatError, TriMesh, load_mesh, mesh_area, save_mesh
from .minimize import MeshDegenerateError, SolverConfig, minimize, perturbed_disk_problem
from .surfaces import CatenoidPiece, FlatDisk, MinimalCone, catenoid_c_max
from .verify import InvalidInstance, dumps, ladder_csv, verify

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("ballbound")


class UsageError(Exception):
    """Bad flag values or flag combinations; reported before any work."""


# ------------------------------------------------------------------ parsing


def _vector(text: str) -> np.ndarray:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"non-finite entry in {text!r}")
    return np.array(vals)


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _frame(text: str) -> np.ndarray:
    """Rows separated by ';', entries by ','."""
    rows = [_vector(row) for row in text.split(";")]
    if len({len(r) for r in rows}) != 1:
        raise argparse.ArgumentTypeError("frame rows must have equal length")
    return np.array(rows)


def _tol_override(text: str) -> tuple:
    key, sep, val = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return key.strip(), float(val)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad tolerance value in {text!r}") from None


def _positive_int(text: str) -> int:
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {val}")
    return val


def _dimension(args, *vectors) -> int:
    """Ambient dimension from the vector flags, cross-checked against --n."""
    dims = {len(v) for v in vectors if v is not None}
    if getattr(args, "n", None) is not None:
        dims.add(args.n)
    if len(dims) > 1:
        raise UsageError(f"inconsistent ambient dimensions {sorted(dims)} across --n and vector flags")
    return dims.pop() if dims else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ballbound", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    field = sub.add_parser("field", help="evaluate or fuzz the calibration field")
    fsub = field.add_subparsers(dest="field_command", required=True)

    ev = fsub.add_parser("eval", help="W, trace, deficit and diagnostics at one point")
    ev.add_argument("--k", type=int, required=True)
    ev.add_argument("--n", type=int)
    ev.add_argument("--y", type=_vector, required=True)
    ev.add_argument("--x", type=_vector, required=True)
    ev.add_argument("--frame", type=_frame, help="k rows separated by ';', e.g. '1,0,0;0,1,0'")

    fz = fsub.add_parser("fuzz", help="random search for violations of the trace inequality")
    fz.add_argument("--samples", type=_positive_int, default=100_000)
    fz.add_argument("--seed", type=int, required=True)
    fz.add_argument("--k-set", type=_int_list, default=(2, 3, 4))
    fz.add_argument("--n-set", type=_int_list, default=(3, 4, 5, 7))
    fz.add_argument("--ymax", type=float, default=CONDITIONING_YMAX)
    fz.add_argument("--min-dist", type=float, default=1e-3)
    fz.add_argument("--out", type=Path)

    sf = sub.add_parser("surface", help="analytic surface oracle and mesh export")
    _family_flags(sf)
    sf.add_argument("--export", type=Path, help="write an OBJ mesh (k = 2 families)")
    sf.add_argument("--resolution", type=_positive_int, default=16)
    sf.add_argument("--density", type=_positive_int, help="also report the total quadrature weight")
    sf.add_argument("--jitter", type=float, default=0.0, help="normal jitter of interior disk vertices")
    sf.add_argument("--seed", type=int, default=0)

    sv = sub.add_parser("solve", help="discrete area minimisation of an OBJ mesh")
    sv.add_argument("--input", type=Path, required=True)
    sv.add_argument("--y", type=_vector, help="pin target; must match the sidecar when both exist")
    sv.add_argument("--iters", type=_positive_int, default=SolverConfig.max_iterations)
    sv.add_argument("--tol", type=float, default=SolverConfig.tol)
    sv.add_argument("--relaxation", type=float, default=SolverConfig.relaxation)
    sv.add_argument("--remesh", action="store_true")
    sv.add_argument("--min-angle", type=float, default=SolverConfig.min_angle_deg)
    sv.add_argument("--seed", type=int, default=0)
    sv.add_argument("--out", type=Path, required=True, help="output OBJ; the report goes to <stem>.report.json")

    vf = sub.add_parser("verify", help="bound, identity, flux limit and rigidity checks")
    src = vf.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", type=Path, help="OBJ mesh")
    src.add_argument("--family", choices=("flatdisk", "catenoid", "cone"))
    _family_flags(vf, with_family=False)
    vf.add_argument("--r-ladder", type=_vector, default=np.array([0.1, 0.05, 0.025]))
    vf.add_argument("--identity-r", type=float, default=1e-2)
    vf.add_argument("--density", type=_positive_int, default=8)
    vf.add_argument("--tol", type=_tol_override, action="append", default=[], help="NAME=VALUE override")
    vf.add_argument("--format", choices=("json", "csv"), default="json")
    vf.add_argument("--out", type=Path, help="write the report here instead of stdout")
    return parser


def _family_flags(p: argparse.ArgumentParser, with_family: bool = True) -> None:
    if with_family:
        p.add_argument("--family", choices=("flatdisk", "catenoid", "cone"), required=True)
    p.add_argument("--k", type=int, default=None, help="disk dimension (default 2)")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--y", type=_vector, help="prescribed point (default: the family's through-point)")
    p.add_argument("--d", type=float, default=None, help="flat disk: distance of the plane from the origin")
    p.add_argument("--c", type=float, default=None, help="catenoid waist radius")


# ----------------------------------------------------------------- surfaces


def _make_surface(args):
    fam = args.family
    k = 2 if args.k is None else args.k
    if fam == "flatdisk":
        if args.c is not None:
            raise UsageError("--c applies to the catenoid only")
        n = _dimension(args, args.y) if (args.y is not None or args.n is not None) else k + 1
        d = 0.0 if args.d is None else args.d
        if not 0 <= d < 1:
            raise UsageError(f"--d must lie in [0, 1), got {d}")
        return FlatDisk.at_distance(d, k, n, args.y)
    if args.d is not None:
        raise UsageError("--d applies to flat disks only")
    if fam == "catenoid":
        if args.k not in (None, 2) or _dimension(args, args.y) != 3:
            raise UsageError("the catenoid has k = 2, n = 3")
        if args.c is None:
            raise UsageError("--c is required for the catenoid")
        if not 0 < args.c < 1:
            raise UsageError(
                f"catenoid waist c={args.c} is not admissible: a rim height z1 exists only for "
                f"0 < c < {catenoid_c_max():.12g}"
            )
        return CatenoidPiece(args.c)
    if args.c is not None:
        raise UsageError("--c applies to the catenoid only")
    if args.k not in (None, 3) or (args.y is not None or args.n is not None) and _dimension(args, args.y) != 4:
        raise UsageError("the cone has k = 3, n = 4")
    return MinimalCone()


def _field_for(surface_k: int, args, default_y) -> CalibrationField:
    y = default_y if args.y is None else args.y
    return CalibrationField(y, surface_k)


# ----------------------------------------------------------------- commands


def cmd_field_eval(args) -> tuple[int, str]:
    n = _dimension(args, args.y, args.x)
    if args.frame is not None and args.frame.shape[1] != n:
        raise UsageError(f"frame vectors have dimension {args.frame.shape[1]}, expected {n}")
    field = CalibrationField(args.y, args.k)
    out = {"k": field.k, "n": n, "y": args.y.tolist(), "x": args.x.tolist(), "W": eval_W(field, args.x).tolist()}
    if args.frame is not None:
        frame = TangentFrame(args.frame)
        diag = diagnostics(field, args.x, frame)
        out["div"] = float(divergence_trace(field, args.x, frame))
        out["deficit"] = float(deficit(field, args.x, frame))
        out["tangential_y_sq"] = float(diag.tangential_y_sq)
        out["normal_xy_sq"] = float(diag.normal_xy_sq)
    else:
        out["div"] = out["deficit"] = None
    dist = float(np.linalg.norm(args.x - args.y))
    out["Q"] = float(1.0 - 2.0 * args.x @ args.y + args.y @ args.y)
    out["dist"] = dist
    return EXIT_OK, dumps(out)


def cmd_field_fuzz(args) -> tuple[int, str]:
    if not 0 <= args.ymax < 1:
        raise UsageError("--ymax must lie in [0, 1)")
    if not args.min_dist > 0:
        raise UsageError("--min-dist must be positive")
    if any(k < 2 for k in args.k_set) or any(n < 2 for n in args.n_set):
        raise UsageError("dimensions in --k-set and --n-set must be >= 2")
    if not any(k <= n for k in args.k_set for n in args.n_set):
        raise UsageError("no admissible (k, n) pair with k <= n")
    res = fuzz(args.samples, args.seed, args.k_set, args.n_set, args.ymax, args.min_dist)
    report = res.to_dict()
    report["passed"] = res.passed()
    text = dumps(report)
    if args.out is not None:
        args.out.write_text(text, encoding="utf-8")
    if report["conditioning_warning"]:
        log.warning("|y| up to %g exceeds %g: the closed form is poorly conditioned there", args.ymax, CONDITIONING_YMAX)
    return (EXIT_OK if res.passed() else EXIT_FAIL), text


def cmd_surface(args) -> tuple[int, str]:
    surf = _make_surface(args)
    if args.jitter < 0:
        raise UsageError("--jitter must be nonnegative")
    if args.jitter and surf.family != "flatdisk":
        raise UsageError("--jitter applies to flat disks only")
    if args.export is not None and surf.k != 2:
        raise UsageError("mesh export is available for k = 2 families only")
    out = {"surface": surf.describe(), "area": surf.area(), "through_point": surf.through_point.tolist()}
    if surf.family == "catenoid":
        out["c_max"] = catenoid_c_max()
    if args.density is not None:
        out["quadrature_weight"] = surf.sample(args.density).total_weight
    if args.export is not None:
        if args.jitter:
            if float(np.linalg.norm(surf._param_of(surf.through_point))) > 1e-12:
                raise UsageError("jittered disks are centred on the foot point of the plane")
            mesh = perturbed_disk_problem(surf.foot, args.resolution, args.jitter, args.seed)
        else:
            mesh = surf.to_mesh(args.resolution)
        save_mesh(mesh, args.export)
        out["mesh"] = {
            "path": str(args.export),
            "vertices": len(mesh.vertices),
            "triangles": len(mesh.triangles),
            "area": mesh_area(mesh),
        }
    return EXIT_OK, dumps(out)


def _pin(mesh: TriMesh, y) -> None:
    if y is None:
        if mesh.pinned is None:
            raise UsageError("the mesh has no pinned vertex; pass --y")
        return
    if len(y) != mesh.n:
        raise UsageError(f"--y has dimension {len(y)} but the mesh lives in R^{mesh.n}")
    if mesh.pinned is not None:
        if np.linalg.norm(mesh.pinned_point - y) > 1e-12:
            raise UsageError("--y differs from the pinned point recorded in the sidecar")
        return
    dist = np.linalg.norm(mesh.vertices - y, axis=1)
    i = int(np.argmin(dist))
    if dist[i] > 1e-9 or mesh.boundary[i]:
        raise UsageError("no interior vertex of the mesh sits at --y")
    mesh.pinned, mesh.pinned_point = i, np.array(y, dtype=float)


def cmd_solve(args) -> tuple[int, str]:
    try:
        cfg = SolverConfig(
            max_iterations=args.iters,
            tol=args.tol,
            relaxation=args.relaxation,
            remesh=args.remesh,
            min_angle_deg=args.min_angle,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    mesh = load_mesh(args.input)
    _pin(mesh, args.y)
    res = minimize(mesh, cfg)
    save_mesh(res.mesh, args.out)
    report = {"input": str(args.input), "output": str(args.out), **res.to_dict()}
    text = dumps(report)
    args.out.with_suffix(".report.json").write_text(text, encoding="utf-8")
    return (EXIT_OK if res.converged else EXIT_FAIL), text


def cmd_verify(args) -> tuple[int, str]:
    ladder = [float(r) for r in args.r_ladder]
    if len(ladder) < 2 or any(r <= 0 for r in ladder):
        raise UsageError("--r-ladder needs at least two positive radii")
    if not args.identity_r > 0:
        raise UsageError("--identity-r must be positive")
    overrides = dict(args.tol) or None
    if args.input is not None:
        for flag in ("d", "c"):
            if getattr(args, flag) is not None:
                raise UsageError(f"--{flag} does not apply to mesh input")
        mesh = load_mesh(args.input)
        if args.k not in (None, 2):
            raise UsageError("meshes are 2-dimensional")
        if args.y is not None:
            y = args.y
        elif mesh.pinned is not None:
            y = mesh.pinned_point
        else:
            raise UsageError("the mesh has no pinned vertex; pass --y")
        if len(y) != mesh.n or (args.n is not None and args.n != mesh.n):
            raise UsageError(f"y and --n must match the mesh dimension {mesh.n}")
        source, field = mesh, CalibrationField(y, 2)
    else:
        source = _make_surface(args)
        field = _field_for(source.k, args, source.through_point)
    report = verify(source, field, ladder, args.density, args.identity_r, overrides)
    text = report.to_json() if args.format == "json" else ladder_csv(report.flux_values)
    if args.out is not None:
        args.out.write_text(text, encoding="utf-8")
        if args.format == "csv":
            # the full JSON report is always written next to the CSV
            args.out.with_suffix(".json").write_text(report.to_json(), encoding="utf-8")
    return (EXIT_OK if report.passed else EXIT_FAIL), text


COMMANDS = {
    ("field", "eval"): cmd_field_eval,
    ("field", "fuzz"): cmd_field_fuzz,
    ("surface", None): cmd_surface,
    ("solve", None): cmd_solve,
    ("verify", None): cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    handler = COMMANDS[(args.command, getattr(args, "field_command", None))]
    try:
        code, text = handler(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ballbound: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidInstance as exc:
        print(f"ballbound: invalid instance: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MeshFormatError as exc:
        print(f"ballbound: malformed mesh: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MeshDegenerateError as exc:
        print(f"ballbound: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, NotImplementedError) as exc:
        print(f"ballbound: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "out", None) is None or args.command == "solve":
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
