"""Numerical form of the divergence-theorem argument for the area bound.

For a minimal surface Sigma through y with boundary on the unit sphere,

    int_{Sigma \\ B_r(y)} (1 - div W) = |Sigma \\ B_r(y)| - int_{Sigma cap dB_r(y)} <W, nu>

because W vanishes on the sphere. The left side is nonnegative pointwise,
and the flux on the right tends to ``|B^k| (1 - |y|^2)^(k/2)`` as r -> 0 at
a smooth point. This module evaluates every piece by quadrature, either on
an analytic surface or on a triangle mesh, and gathers the outcome in a
:class:`VerificationReport`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import field as fld
from .field import CalibrationField
from .mesh import TriMesh, mesh_area, triangle_areas, triangle_frames
from .surfaces import AnalyticSurface, SphereSlice, SurfaceSamples, unit_ball_volume

SCHEMA_VERSION = 1

Source = Union[AnalyticSurface, TriMesh]

ANALYTIC_TOLERANCES = {
    "bound_abs": 1e-10,
    "identity_rel": 1e-3,
    "flux_limit_rel": 5e-3,
    "deficit_slack": fld.DEFICIT_SLACK,
    "equality_residual": 1e-12,
    "contains_y": 1e-9,
}

MESH_TOLERANCES = {
    "bound_rel": 1e-2,
    "identity_rel": 5e-2,
    "flux_limit_rel": 1e-2,
    "deficit_slack": fld.DEFICIT_SLACK,
    "equality_residual": 1e-12,
    "contains_y": 1e-9,
}

# mesh runs never slice closer to y than this
MESH_R_MIN = 1e-4


class InvalidInstance(ValueError):
    """The surface does not pass through y, so the theorem does not apply."""


def area_bound(k: int, y) -> float:
    """``|B^k| (1 - |y|^2)^(k/2)``."""
    y = np.asarray(y, dtype=float)
    return unit_ball_volume(k) * (1.0 - float(y @ y)) ** (k / 2)


# ------------------------------------------------------------ mesh clipping


_BARY = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])


def _three_point(corners: np.ndarray, areas: np.ndarray, frames: np.ndarray):
    """Symmetric 3-point rule (exact for quadratics) on a batch of triangles."""
    pts = np.einsum("qj,tjd->tqd", _BARY, corners).reshape(-1, corners.shape[-1])
    w = np.repeat(areas / 3.0, 3)
    return pts, np.repeat(frames, 3, axis=0), w


def _segment_distance(a: np.ndarray, b: np.ndarray, y: np.ndarray) -> np.ndarray:
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    t = np.clip(np.einsum("ij,ij->i", y - a, d) / np.where(dd > 0, dd, 1.0), 0.0, 1.0)
    return np.linalg.norm(a + t[:, None] * d - y, axis=1)


def _sphere_crossing(a: np.ndarray, b: np.ndarray, y: np.ndarray, r: float) -> np.ndarray:
    """Point where the segment from ``a`` (inside) to ``b`` (outside) meets the sphere."""
    d = b - a
    A = d @ d
    B = (a - y) @ d
    C = (a - y) @ (a - y) - r * r
    t = (-B + math.sqrt(B * B - A * C)) / A
    return a + t * d


MAX_SPLIT_DEPTH = 30


def _split4(P: np.ndarray) -> np.ndarray:
    """Midpoint subdivision of a batch of triangles, (F, 3, n) -> (4F, 3, n)."""
    a, b, c = P[:, 0], P[:, 1], P[:, 2]
    ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
    kids = np.stack(
        [np.stack([a, ab, ca], 1), np.stack([ab, b, bc], 1), np.stack([ca, bc, c], 1), np.stack([ab, bc, ca], 1)],
        axis=1,
    )
    return kids.reshape(-1, 3, P.shape[-1])


def mesh_resolution_near(mesh: TriMesh, y) -> float:
    """Longest edge among triangles touching the vertex nearest to y."""
    y = np.asarray(y, dtype=float)
    v = mesh.pinned if mesh.pinned is not None else int(np.argmin(np.linalg.norm(mesh.vertices - y, axis=1)))
    star = mesh.triangles[np.any(mesh.triangles == v, axis=1)]
    p = mesh.vertices[star]
    edges = np.concatenate([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]])
    return float(np.linalg.norm(edges, axis=1).max())


def clip_mesh(mesh: TriMesh, y, r: float) -> tuple[SurfaceSamples, Optional[SphereSlice]]:
    """Quadrature on ``mesh \\ B_r(y)`` and on the slice ``mesh cap dB_r(y)``.

    Triangles crossing the sphere are cut along the chord between the two
    edge crossings; the chord carries a midpoint rule with conormal equal to
    the normalised projection of ``-(x - y)`` onto the triangle plane.
    """
    y = np.asarray(y, dtype=float)
    P = mesh.vertices[mesh.triangles]
    frames = triangle_frames(mesh)
    if r <= 0:
        areas = triangle_areas(mesh.vertices, mesh.triangles)
        pts, frs, w = _three_point(P, areas, frames)
        return SurfaceSamples(pts, frs, w), None

    # An edge with both ends outside can still cut into B_r(y). Such faces
    # are split at edge midpoints (the surface is unchanged) until every
    # crossing edge has an endpoint inside.
    for _ in range(MAX_SPLIT_DEPTH):
        inside = np.linalg.norm(P - y, axis=2) < r
        dipped = np.zeros(len(P), dtype=bool)
        for j in range(3):
            both_out = ~inside[:, j] & ~inside[:, (j + 1) % 3]
            dipped |= both_out & (_segment_distance(P[:, j], P[:, (j + 1) % 3], y) < r)
        if not dipped.any():
            break
        P = np.concatenate([P[~dipped], _split4(P[dipped])])
        frames = np.concatenate([frames[~dipped], np.repeat(frames[dipped], 4, axis=0)])
    else:
        raise ValueError(f"r={r:g} is below the mesh resolution near y (sphere grazes an edge)")
    areas = triangle_areas(P.reshape(-1, P.shape[-1]), np.arange(3 * len(P)).reshape(-1, 3))
    n_in = inside.sum(axis=1)
    outside = n_in == 0
    crossing = (n_in > 0) & (n_in < 3)
    if np.any(outside):
        # an isolated sphere inside a single face is just as unresolved
        e1, e2 = frames[outside, 0], frames[outside, 1]
        rel = y - P[outside, 0]
        c1, c2 = np.einsum("ij,ij->i", rel, e1), np.einsum("ij,ij->i", rel, e2)
        off = np.linalg.norm(rel - c1[:, None] * e1 - c2[:, None] * e2, axis=1)
        if np.any(off < r):
            q = P[outside]
            bary = _barycentric(q, y)
            if np.any(np.all(bary >= 0, axis=1) & (off < r)):
                raise ValueError(f"r={r:g} is below the mesh resolution near y (B_r(y) sits inside a face)")

    pts, frs, w = _three_point(P[outside], areas[outside], frames[outside])
    pts_l, frs_l, w_l = [pts], [frs], [w]
    sl_pts, sl_nu, sl_w, chord_dist = [], [], [], []
    for t in np.flatnonzero(crossing):
        corners, ins = P[t], inside[t]
        poly, cut = [], []
        for j in range(3):
            a, b = corners[j], corners[(j + 1) % 3]
            if not ins[j]:
                poly.append(a)
            if ins[j] != ins[(j + 1) % 3]:
                x = _sphere_crossing(a, b, y, r) if ins[j] else _sphere_crossing(b, a, y, r)
                poly.append(x)
                cut.append(x)
        sub = np.array([[poly[0], poly[i], poly[i + 1]] for i in range(1, len(poly) - 1)])
        sub_areas = triangle_areas(sub.reshape(-1, sub.shape[-1]), np.arange(3 * len(sub)).reshape(-1, 3))
        p, f, ww = _three_point(sub, sub_areas, np.repeat(frames[t][None], len(sub), axis=0))
        pts_l.append(p)
        frs_l.append(f)
        w_l.append(ww)
        chord_dist.append(float(_segment_distance(cut[0][None], cut[1][None], y)[0]))
        mid = 0.5 * (cut[0] + cut[1])
        e = frames[t]
        proj = e.T @ (e @ (mid - y))
        sl_pts.append(mid)
        sl_nu.append(-proj / np.linalg.norm(proj))
        sl_w.append(float(np.linalg.norm(cut[1] - cut[0])))
    if not sl_pts:
        raise ValueError(f"no triangle crosses the sphere of radius {r:g} about y")
    # chords cut slightly into B_r(y); nothing is closer to y than the nearest chord
    samples = SurfaceSamples(
        np.concatenate(pts_l), np.concatenate(frs_l), np.concatenate(w_l), inner_radius=min(chord_dist)
    )
    return samples, SphereSlice(r, np.array(sl_pts), np.array(sl_nu), np.array(sl_w))


def _barycentric(tri: np.ndarray, p: np.ndarray) -> np.ndarray:
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    v0, v1, v2 = b - a, c - a, p - a
    d00 = np.einsum("ij,ij->i", v0, v0)
    d01 = np.einsum("ij,ij->i", v0, v1)
    d11 = np.einsum("ij,ij->i", v1, v1)
    d20 = np.einsum("ij,ij->i", v2, v0)
    d21 = np.einsum("ij,ij->i", v2, v1)
    den = d00 * d11 - d01 * d01
    v = (d11 * d20 - d01 * d21) / den
    w = (d00 * d21 - d01 * d20) / den
    return np.column_stack([1 - v - w, v, w])


# ------------------------------------------------------------- integrals


def surface_samples(source: Source, field: CalibrationField, r: float, density: int) -> SurfaceSamples:
    if isinstance(source, TriMesh):
        return clip_mesh(source, field.y, r)[0]
    return source.sample(density, exclude_radius=r, around=field.y)


def sphere_slice(source: Source, field: CalibrationField, r: float) -> SphereSlice:
    if isinstance(source, TriMesh):
        return clip_mesh(source, field.y, r)[1]
    return source.boundary_circle(r, field.y)


def integrate_deficit(samples: SurfaceSamples, field: CalibrationField, r: float) -> float:
    """``sum w * (1 - div W)`` over samples that all lie outside ``B_r(y)``."""
    if r < field.r_min:
        raise ValueError(f"r={r:g} is below r_min={field.r_min:g}")
    dist = np.linalg.norm(samples.points - field.y, axis=1)
    inner = r if samples.inner_radius is None else min(r, samples.inner_radius)
    if np.any(dist < inner * (1 - 1e-12)):
        raise ValueError(f"a sample lies inside B_r(y) (distance {dist.min():.6g} < {inner:.6g})")
    values = fld.deficit(field, samples.points, samples.frames)
    return float(math.fsum(samples.weights * values))


def flux_integral(source: Source, field: CalibrationField, r: float) -> float:
    """``int <W, nu>`` over ``Sigma cap dB_r(y)`` with the inward conormal."""
    sl = sphere_slice(source, field, r)
    W = fld.eval_W(field, sl.points)
    return float(math.fsum(sl.weights * np.einsum("ij,ij->i", W, sl.conormals)))


def equality_residual(samples: SurfaceSamples, field: CalibrationField) -> float:
    """Max of ``normal_xy_sq + tangential_y_sq``; zero only on the flat disk normal to y."""
    d = fld.diagnostics(field, samples.points, samples.frames)
    return float(np.max(d.normal_xy_sq + d.tangential_y_sq))


def _area_of(source: Source) -> float:
    return mesh_area(source) if isinstance(source, TriMesh) else source.area()


def _is_mesh(source: Source) -> bool:
    return isinstance(source, TriMesh)


def _tolerances(source: Source, overrides: Optional[dict] = None) -> dict:
    tol = dict(MESH_TOLERANCES if _is_mesh(source) else ANALYTIC_TOLERANCES)
    if overrides:
        unknown = set(overrides) - set(tol)
        if unknown:
            raise ValueError(f"unknown tolerance(s): {sorted(unknown)}")
        tol.update(overrides)
    return tol


def y_offset(source: Source, y) -> float:
    """Distance-like measure of how far the surface is from passing through y."""
    y = np.asarray(y, dtype=float)
    if _is_mesh(source):
        if source.pinned is not None:
            return float(np.linalg.norm(source.vertices[source.pinned] - y))
        return float(np.linalg.norm(source.vertices - y, axis=1).min())
    return source.residual(y)


def _require_through(source: Source, field: CalibrationField, tol: float) -> None:
    if source.n != field.n:
        raise InvalidInstance(f"surface lives in R^{source.n} but y is in R^{field.n}")
    k = 2 if _is_mesh(source) else source.k
    if k != field.k:
        raise InvalidInstance(f"surface dimension {k} does not match field k={field.k}")
    off = y_offset(source, field.y)
    if off > tol:
        raise InvalidInstance(f"the surface does not pass through y (offset {off:.3g} > {tol:g})")


# ------------------------------------------------------------- checks


@dataclass
class BoundCheck:
    area: float
    bound: float
    margin: float
    tol: float
    passed: bool


@dataclass
class IdentityCheck:
    r: float
    density: int
    lhs: float
    rhs: float
    gap: float
    tol: float
    passed: bool


@dataclass
class FluxLimitStudy:
    values: list
    order: int
    extrapolated: float
    target: float
    rel_error: float
    tol: float
    dropped: list
    passed: bool


def bound_tolerance(source: Source, bound: float, tol: dict) -> float:
    return tol["bound_rel"] * bound if _is_mesh(source) else tol["bound_abs"]


def check_bound(source: Source, field: CalibrationField, tolerances: Optional[dict] = None) -> BoundCheck:
    """``margin = area - bound``; passes unless the margin is below ``-tol``."""
    tol = _tolerances(source, tolerances)
    _require_through(source, field, tol["contains_y"])
    area = _area_of(source)
    bound = area_bound(field.k, field.y)
    t = bound_tolerance(source, bound, tol)
    margin = area - bound
    return BoundCheck(area, bound, margin, t, margin >= -t)


def check_identity(
    source: Source, field: CalibrationField, r: float, density: int = 8, tolerances: Optional[dict] = None
) -> IdentityCheck:
    tol = _tolerances(source, tolerances)
    samples = surface_samples(source, field, r, density)
    lhs = integrate_deficit(samples, field, r)
    rhs = samples.total_weight - flux_integral(source, field, r)
    gap = abs(lhs - rhs)
    t = tol["identity_rel"]
    return IdentityCheck(r, density, lhs, rhs, gap, t, gap <= t * max(1.0, abs(rhs)))


def richardson(r_small: float, f_small: float, r_big: float, f_big: float, order: int) -> float:
    """Limit of ``f(r) = L + C r^order`` through two samples."""
    q = (r_big / r_small) ** order
    return (q * f_small - f_big) / (q - 1.0)


def _noisy_tail(values: list) -> bool:
    """Smallest-r flux breaks the trend of the ladder (sign flip or growth)."""
    if len(values) < 3:
        return False
    f = [v for _, v in values]
    d_prev, d_last = f[-2] - f[-3], f[-1] - f[-2]
    noise = 1e-13 * max(1.0, abs(f[-1]))
    if abs(d_prev) <= noise:
        return False
    flipped = np.sign(d_last) != np.sign(d_prev) and abs(d_last) > noise
    return flipped or abs(d_last) > abs(d_prev)


def flux_limit_study(
    source: Source, field: CalibrationField, r_ladder: Sequence[float], tolerances: Optional[dict] = None
) -> FluxLimitStudy:
    """Fluxes on a decreasing r-ladder, extrapolated to r -> 0.

    The flux differs from its limit by ``O(r^k)`` (the area and deficit
    integral of ``Sigma cap B_r``), so Richardson uses order k.
    """
    tol = _tolerances(source, tolerances)
    ladder = sorted((float(r) for r in r_ladder), reverse=True)
    if len(ladder) < 2:
        raise ValueError("flux limit study needs at least two radii")
    floor = MESH_R_MIN if _is_mesh(source) else field.r_min
    if ladder[-1] < floor:
        raise ValueError(f"r-ladder goes below r_min={floor:g}")
    values = [(r, flux_integral(source, field, r)) for r in ladder]
    dropped = []
    while _noisy_tail(values):
        dropped.append(values.pop()[0])
    (r_big, f_big), (r_small, f_small) = values[-2], values[-1]
    limit = richardson(r_small, f_small, r_big, f_big, field.k)
    target = area_bound(field.k, field.y)
    rel = abs(limit - target) / target
    t = tol["flux_limit_rel"]
    return FluxLimitStudy(values, field.k, limit, target, rel, t, dropped, rel <= t)


# ------------------------------------------------------------------ report


def derive_verdicts(report: dict) -> dict:
    """Recompute every verdict from stored numbers and tolerances only."""
    tol = report["tolerances"]
    bound_tol = tol["bound_rel"] * report["bound"] if "bound_rel" in tol else tol["bound_abs"]
    equality_attained = report["margin"] <= bound_tol
    return {
        "bound": report["margin"] >= -bound_tol,
        "identity": report["identity_gap"] <= tol["identity_rel"] * max(1.0, abs(report["identity_rhs"])),
        "flux_limit": abs(report["flux_limit_extrapolated"] - report["flux_limit_target"])
        <= tol["flux_limit_rel"] * report["flux_limit_target"],
        "deficit_nonnegative": report["deficit_min"] >= -tol["deficit_slack"],
        # equality forces the flat disk orthogonal to y
        "rigidity": (not equality_attained) or report["equality_residual"] <= tol["equality_residual"],
    }


@dataclass
class VerificationReport:
    surface: dict
    y: list
    k: int
    n: int
    area: float
    bound: float
    margin: float
    identity_r: float
    identity_density: int
    identity_lhs: float
    identity_rhs: float
    identity_gap: float
    flux_values: list
    flux_dropped: list
    flux_limit_extrapolated: float
    flux_limit_target: float
    deficit_min: float
    equality_residual: float
    tolerances: dict
    notes: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if not self.verdicts:
            self.verdicts = derive_verdicts(self.to_dict())

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "surface": self.surface,
            "y": list(self.y),
            "k": self.k,
            "n": self.n,
            "area": self.area,
            "bound": self.bound,
            "margin": self.margin,
            "identity_r": self.identity_r,
            "identity_density": self.identity_density,
            "identity_lhs": self.identity_lhs,
            "identity_rhs": self.identity_rhs,
            "identity_gap": self.identity_gap,
            "flux_values": [[r, f] for r, f in self.flux_values],
            "flux_dropped": list(self.flux_dropped),
            "flux_limit_extrapolated": self.flux_limit_extrapolated,
            "flux_limit_target": self.flux_limit_target,
            "deficit_min": self.deficit_min,
            "equality_residual": self.equality_residual,
            "tolerances": dict(self.tolerances),
            "notes": dict(self.notes),
            "verdicts": dict(self.verdicts),
            "passed": self.passed if self.verdicts else None,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def flux_csv(self) -> str:
        return ladder_csv(self.flux_values)


def ladder_csv(values) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["r", "flux"])
    for r, f in values:
        writer.writerow([format(r, ".17g"), format(f, ".17g")])
    return buf.getvalue()


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return {None: "null", True: "true", False: "false"}[obj]
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}{_encode(str(k), indent, level)}: {_encode(v, indent, level + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in seq):
            return "[" + ", ".join(_encode(v, indent, level) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in seq) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float printed to 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


def verify(
    source: Source,
    field: CalibrationField,
    r_ladder: Sequence[float] = (0.1, 0.05, 0.025),
    density: int = 8,
    identity_r: float = 1e-2,
    tolerances: Optional[dict] = None,
) -> VerificationReport:
    """Run bound, identity, flux-limit, deficit and rigidity checks.

    Raises :class:`InvalidInstance` when the surface misses y. For meshes the
    identity radius and the r-ladder are clipped from below at the resolvable
    scale near y, recorded as ``notes["valid_r_min"]``.
    """
    tol = _tolerances(source, tolerances)
    bound = check_bound(source, field, tolerances)
    notes = {}
    ladder = list(r_ladder)
    if _is_mesh(source):
        valid = max(MESH_R_MIN, 2.0 * mesh_resolution_near(source, field.y))
        notes["valid_r_min"] = valid
        if identity_r < valid:
            notes["identity_r_requested"] = identity_r
            identity_r = valid
        kept = [r for r in ladder if r >= valid]
        if len(kept) < 2:
            kept = [4 * valid, 2 * valid, valid]
            notes["r_ladder_replaced"] = True
        ladder = kept
    ident = check_identity(source, field, identity_r, density, tolerances)
    study = flux_limit_study(source, field, ladder, tolerances)
    samples = surface_samples(source, field, identity_r, density)
    dmin = float(np.min(fld.deficit(field, samples.points, samples.frames)))
    eq = equality_residual(samples, field)
    desc = {"family": "mesh", "vertices": len(source.vertices), "triangles": len(source.triangles)} if _is_mesh(
        source
    ) else source.describe()
    return VerificationReport(
        surface=desc,
        y=[float(v) for v in field.y],
        k=field.k,
        n=field.n,
        area=bound.area,
        bound=bound.bound,
        margin=bound.margin,
        identity_r=ident.r,
        identity_density=ident.density,
        identity_lhs=ident.lhs,
        identity_rhs=ident.rhs,
        identity_gap=ident.gap,
        flux_values=study.values,
        flux_dropped=study.dropped,
        flux_limit_extrapolated=study.extrapolated,
        flux_limit_target=study.target,
        deficit_min=dmin,
        equality_residual=eq,
        tolerances=tol,
        notes=notes,
    )
