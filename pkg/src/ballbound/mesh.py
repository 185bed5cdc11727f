"""Triangle meshes in R^n: geometry, validation, builders and OBJ I/O.

OBJ files are plain ASCII with 1-based ``f i j k`` lines. Meshes whose
ambient dimension is not 3 carry a ``# ambient n`` header comment and ``v``
lines with exactly n coordinates. Boundary and pinned-vertex metadata live
in a JSON sidecar next to the OBJ file (same stem, ``.json`` suffix)::

    {"index_base": 0, "boundary": [...], "pinned": {"index": i, "y": [...]}}

Sidecar indices are 0-based.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .field import TangentFrame

SPHERE_TOL = 1e-9


class MeshFormatError(ValueError):
    """Malformed or invalid mesh file; ``lineno`` is 1-based when known."""

    def __init__(self, message: str, lineno: Optional[int] = None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if lineno is not None:
            where += f":{lineno}" if where else f"line {lineno}"
        super().__init__(f"{where}: {message}" if where else message)


@dataclass
class TriMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray = None
    pinned: Optional[int] = None
    pinned_point: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vertices = np.array(self.vertices, dtype=float)
        self.triangles = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        if self.vertices.ndim != 2:
            raise ValueError("vertices must be a (V, n) array")
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)):
            raise ValueError("triangle index out of range")
        if self.boundary is None:
            self.boundary = boundary_vertices(self.triangles, len(self.vertices))
        else:
            self.boundary = np.array(self.boundary, dtype=bool)
        if self.pinned is not None:
            self.pinned = int(self.pinned)
            if self.pinned_point is None:
                self.pinned_point = self.vertices[self.pinned].copy()
            self.pinned_point = np.array(self.pinned_point, dtype=float)

    @property
    def n(self) -> int:
        return self.vertices.shape[1]

    def copy(self) -> "TriMesh":
        return TriMesh(
            self.vertices.copy(),
            self.triangles.copy(),
            self.boundary.copy(),
            self.pinned,
            None if self.pinned_point is None else self.pinned_point.copy(),
            dict(self.meta),
        )

    def free_vertices(self) -> np.ndarray:
        """Indices of vertices that are neither on the boundary nor pinned."""
        free = ~self.boundary
        if self.pinned is not None:
            free[self.pinned] = False
        return np.flatnonzero(free)

    def edges(self) -> np.ndarray:
        """Unique undirected edges, sorted, shape (E, 2)."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)


def boundary_vertices(triangles: np.ndarray, nv: int) -> np.ndarray:
    t = np.asarray(triangles).reshape(-1, 3)
    e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    flags = np.zeros(nv, dtype=bool)
    flags[uniq[counts == 1].ravel()] = True
    return flags


# ---------------------------------------------------------------- geometry


def triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Areas from the 2x2 Gram determinant of two edge vectors (any n)."""
    p = vertices[triangles]
    a = p[:, 1] - p[:, 0]
    b = p[:, 2] - p[:, 0]
    aa = np.einsum("ij,ij->i", a, a)
    bb = np.einsum("ij,ij->i", b, b)
    ab = np.einsum("ij,ij->i", a, b)
    return 0.5 * np.sqrt(np.maximum(aa * bb - ab * ab, 0.0))


def mesh_area(mesh: TriMesh) -> float:
    """Total area; degenerate triangles contribute zero."""
    return float(math.fsum(triangle_areas(mesh.vertices, mesh.triangles)))


def degenerate_triangles(mesh: TriMesh, tol: float = 1e-14) -> np.ndarray:
    areas = triangle_areas(mesh.vertices, mesh.triangles)
    scale = max(float(np.abs(mesh.vertices).max()), 1.0) ** 2
    return np.flatnonzero(areas <= tol * scale)


def triangle_frames(mesh: TriMesh, first_edge: int = 0) -> np.ndarray:
    """Orthonormal 2-frames spanning each triangle, shape (F, 2, n).

    Gram-Schmidt on the two edges leaving corner ``first_edge``.
    """
    p = mesh.vertices[np.roll(mesh.triangles, -first_edge, axis=1)]
    a = p[:, 1] - p[:, 0]
    b = p[:, 2] - p[:, 0]
    la = np.linalg.norm(a, axis=1)
    e1 = a / la[:, None]
    b = b - np.einsum("ij,ij->i", b, e1)[:, None] * e1
    lb = np.linalg.norm(b, axis=1)
    if np.any(la == 0) or np.any(lb <= 1e-15 * np.maximum(la, 1.0)):
        raise ValueError("degenerate triangle has no tangent frame")
    e2 = b / lb[:, None]
    return np.stack([e1, e2], axis=1)


def frame_of_triangle(mesh: TriMesh, index: int, first_edge: int = 0) -> TangentFrame:
    sub = TriMesh(mesh.vertices, mesh.triangles[[index]], boundary=np.zeros(len(mesh.vertices), bool))
    return TangentFrame(triangle_frames(sub, first_edge)[0])


def triangle_angles(mesh: TriMesh) -> np.ndarray:
    """Interior angles, shape (F, 3); column j is the angle at corner j."""
    p = mesh.vertices[mesh.triangles]
    out = np.empty(mesh.triangles.shape)
    for j in range(3):
        u = p[:, (j + 1) % 3] - p[:, j]
        v = p[:, (j + 2) % 3] - p[:, j]
        cos = np.einsum("ij,ij->i", u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        out[:, j] = np.arccos(np.clip(cos, -1.0, 1.0))
    return out


def sphere_deviation(mesh: TriMesh) -> float:
    """Max | |v| - 1 | over boundary vertices."""
    if not mesh.boundary.any():
        return 0.0
    return float(np.abs(np.linalg.norm(mesh.vertices[mesh.boundary], axis=1) - 1.0).max())


def pinned_displacement(mesh: TriMesh) -> float:
    if mesh.pinned is None:
        return 0.0
    return float(np.linalg.norm(mesh.vertices[mesh.pinned] - mesh.pinned_point))


# -------------------------------------------------------------- validation


def _face_problems(triangles: np.ndarray) -> list[tuple[int, str]]:
    """(face index, message) for non-manifold edges and orientation clashes."""
    problems = []
    half = {}
    undirected = defaultdict(int)
    for f, tri in enumerate(triangles):
        a, b, c = (int(v) for v in tri)
        if len({a, b, c}) < 3:
            problems.append((f, "face repeats a vertex"))
            continue
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            undirected[key] += 1
            if undirected[key] > 2:
                problems.append((f, f"edge ({u + 1}, {v + 1}) is shared by more than two faces"))
            elif (u, v) in half:
                problems.append((f, f"edge ({u + 1}, {v + 1}) has inconsistent orientation"))
            half[(u, v)] = f
    return problems


def check_boundary_loops(mesh: TriMesh) -> None:
    t = mesh.triangles
    e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    bedges = uniq[counts == 1]
    degree = np.bincount(bedges.ravel(), minlength=len(mesh.vertices))
    bad = np.flatnonzero((degree != 0) & (degree != 2))
    if bad.size:
        raise ValueError(f"boundary is not a union of simple loops at vertex {int(bad[0])}")


def validate_mesh(mesh: TriMesh, min_angle: float = 0.0) -> None:
    """Raise ValueError unless the mesh is an oriented edge-manifold."""
    problems = _face_problems(mesh.triangles)
    if problems:
        f, msg = problems[0]
        raise ValueError(f"face {f}: {msg}")
    check_boundary_loops(mesh)
    if degenerate_triangles(mesh).size:
        raise ValueError("mesh has degenerate triangles")
    if min_angle > 0 and triangle_angles(mesh).min() < min_angle:
        raise ValueError(f"minimum angle {math.degrees(triangle_angles(mesh).min()):.3g} deg below threshold")


# ------------------------------------------------------------------ builders


def _ring_stitch(inner: np.ndarray, inner_ang: np.ndarray, outer: np.ndarray, outer_ang: np.ndarray) -> list:
    """Triangulate the band between two closed rings by merging angles.

    Angles are increasing in [start, start + 2pi); output triangles are
    counterclockwise for increasing angle.
    """
    tris = []
    i = j = 0
    ni, no = len(inner), len(outer)
    while i < ni or j < no:
        next_i = inner_ang[i + 1] if i + 1 < ni else inner_ang[0] + 2 * np.pi
        next_o = outer_ang[j + 1] if j + 1 < no else outer_ang[0] + 2 * np.pi
        a, b = inner[i % ni], outer[j % no]
        if j < no and (i >= ni or next_o <= next_i):
            tris.append((a, b, outer[(j + 1) % no]))
            j += 1
        else:
            tris.append((a, b, inner[(i + 1) % ni]))
            i += 1
    return tris


def disk_mesh(rings: int, center, frame, radius: float, first_ring: int = 6) -> TriMesh:
    """Concentric-ring triangulation of a flat disk.

    Ring ``j`` has ``first_ring * j`` equally spaced vertices at radius
    ``radius * j / rings``; vertex 0 is the centre and is pinned. The mesh
    has ``first_ring * rings**2`` triangles.
    """
    center = np.asarray(center, dtype=float)
    frame = np.asarray(frame, dtype=float)
    pts = [np.zeros(2)]
    idx = [np.array([0])]
    angs = [np.array([0.0])]
    count = 1
    tris = []
    for j in range(1, rings + 1):
        m = first_ring * j
        # stagger alternate rings to keep angles away from zero
        ang = (np.arange(m) + 0.5 * (j % 2)) * 2 * np.pi / m
        rr = radius * j / rings
        pts.append(np.column_stack([rr * np.cos(ang), rr * np.sin(ang)]))
        ids = np.arange(count, count + m)
        count += m
        if j == 1:
            tris += [(0, ids[q], ids[(q + 1) % m]) for q in range(m)]
        else:
            tris += _ring_stitch(idx[-1], angs[-1], ids, ang)
        idx.append(ids)
        angs.append(ang)
    uv = np.vstack(pts)
    verts = center + uv @ frame
    boundary = np.zeros(count, dtype=bool)
    boundary[idx[-1]] = True
    return TriMesh(verts, np.array(tris), boundary, pinned=0, pinned_point=center)


def tube_mesh(
    profile: np.ndarray,
    heights: np.ndarray,
    segments: int,
    basis: np.ndarray,
) -> TriMesh:
    """Surface of revolution with radii ``profile`` at ``heights``.

    ``basis`` rows are (a1, a2, axis). Vertex ``(ring, s)`` sits at angle
    ``2 pi s / segments`` measured from a1, so angle zero is on a1.
    """
    profile = np.asarray(profile, dtype=float)
    heights = np.asarray(heights, dtype=float)
    theta = 2 * np.pi * np.arange(segments) / segments
    rings = len(heights)
    local = np.empty((rings, segments, 3))
    local[..., 0] = profile[:, None] * np.cos(theta)
    local[..., 1] = profile[:, None] * np.sin(theta)
    local[..., 2] = heights[:, None]
    verts = local.reshape(-1, 3) @ np.asarray(basis, dtype=float)
    tris = []
    for i in range(rings - 1):
        for s in range(segments):
            a = i * segments + s
            b = i * segments + (s + 1) % segments
            c = (i + 1) * segments + s
            d = (i + 1) * segments + (s + 1) % segments
            # alternate the diagonal so the pattern has no preferred twist
            if (i + s) % 2 == 0:
                tris += [(a, b, d), (a, d, c)]
            else:
                tris += [(a, b, c), (b, d, c)]
    boundary = np.zeros(rings * segments, dtype=bool)
    boundary[:segments] = True
    boundary[-segments:] = True
    return TriMesh(verts, np.array(tris), boundary)


# ------------------------------------------------------------------------ I/O


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def save_mesh(mesh: TriMesh, path) -> None:
    """Write OBJ plus JSON sidecar; floats keep 17 significant digits."""
    path = Path(path)
    lines = ["# ballbound triangle mesh"]
    if mesh.n != 3:
        lines.append(f"# ambient {mesh.n}")
    for v in mesh.vertices:
        lines.append("v " + " ".join(format(float(c), ".17g") for c in v))
    for t in mesh.triangles:
        lines.append(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    side = {"index_base": 0, "boundary": [int(i) for i in np.flatnonzero(mesh.boundary)]}
    if mesh.pinned is not None:
        side["pinned"] = {"index": mesh.pinned, "y": [float(c) for c in mesh.pinned_point]}
    _sidecar(path).write_text(json.dumps(side) + "\n", encoding="utf-8")


def _parse_float(tok: str, lineno: int, path) -> float:
    try:
        val = float(tok)
    except ValueError:
        raise MeshFormatError(f"bad coordinate {tok!r}", lineno, path) from None
    if not math.isfinite(val):
        raise MeshFormatError(f"non-finite coordinate {tok!r}", lineno, path)
    return val


def load_mesh(path, validate_ball: bool = False, ball_tol: float = 1e-9) -> TriMesh:
    """Read an OBJ mesh (and its sidecar, when present).

    Raises MeshFormatError naming the offending line for malformed input,
    0-based or out-of-range indices, non-manifold or inconsistently oriented
    faces, and, with ``validate_ball``, vertices outside the unit ball.
    """
    path = Path(path)
    ambient = None
    verts, vlines, faces, flines = [], [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            parts = raw.split()
            if not parts:
                continue
            if parts[0].startswith("#"):
                if len(parts) >= 3 and parts[0] == "#" and parts[1] == "ambient":
                    if verts:
                        raise MeshFormatError("'# ambient' header must precede vertices", lineno, path)
                    try:
                        ambient = int(parts[2])
                    except ValueError:
                        raise MeshFormatError(f"bad ambient dimension {parts[2]!r}", lineno, path) from None
                    if ambient < 2:
                        raise MeshFormatError("ambient dimension must be >= 2", lineno, path)
                continue
            tag = parts[0]
            if tag == "v":
                want = 3 if ambient is None else ambient
                if len(parts) - 1 != want:
                    raise MeshFormatError(f"vertex needs {want} coordinates, got {len(parts) - 1}", lineno, path)
                verts.append([_parse_float(t, lineno, path) for t in parts[1:]])
                vlines.append(lineno)
            elif tag == "f":
                if len(parts) != 4:
                    raise MeshFormatError(f"only triangles are supported, got {len(parts) - 1} corners", lineno, path)
                tri = []
                for tok in parts[1:]:
                    try:
                        idx = int(tok.split("/")[0])
                    except ValueError:
                        raise MeshFormatError(f"bad face index {tok!r}", lineno, path) from None
                    if idx == 0:
                        raise MeshFormatError("face index 0: OBJ indices are 1-based", lineno, path)
                    if idx < 0:
                        raise MeshFormatError(f"relative face index {idx} is not supported", lineno, path)
                    tri.append(idx - 1)
                faces.append(tri)
                flines.append(lineno)
            elif tag in ("vn", "vt", "o", "g", "s", "usemtl", "mtllib"):
                continue
            else:
                raise MeshFormatError(f"unknown record {tag!r}", lineno, path)
    if not verts:
        raise MeshFormatError("no vertices", None, path)
    nv = len(verts)
    for tri, lineno in zip(faces, flines):
        for idx in tri:
            if idx >= nv:
                raise MeshFormatError(f"face index {idx + 1} out of range (mesh has {nv} vertices)", lineno, path)
    tris = np.array(faces, dtype=np.int64).reshape(-1, 3)
    problems = _face_problems(tris)
    if problems:
        f, msg = problems[0]
        raise MeshFormatError(msg, flines[f], path)
    vertices = np.array(verts, dtype=float)
    if validate_ball:
        norms = np.linalg.norm(vertices, axis=1)
        bad = np.flatnonzero(norms > 1.0 + ball_tol)
        if bad.size:
            i = int(bad[0])
            raise MeshFormatError(f"vertex outside the unit ball (|v| = {norms[i]:.17g})", vlines[i], path)

    boundary = None
    pinned = pinned_point = None
    side = _sidecar(path)
    if side.exists():
        try:
            meta = json.loads(side.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise MeshFormatError(f"bad sidecar JSON: {exc.msg}", exc.lineno, side) from None
        base = int(meta.get("index_base", 0))
        if "boundary" in meta:
            ids = np.array(meta["boundary"], dtype=np.int64) - base
            if ids.size and (ids.min() < 0 or ids.max() >= nv):
                raise MeshFormatError("boundary index out of range", None, side)
            boundary = np.zeros(nv, dtype=bool)
            boundary[ids] = True
        if meta.get("pinned") is not None:
            pinned = int(meta["pinned"]["index"]) - base
            if not 0 <= pinned < nv:
                raise MeshFormatError("pinned index out of range", None, side)
            pinned_point = np.array(meta["pinned"].get("y", vertices[pinned]), dtype=float)
            if pinned_point.shape != (vertices.shape[1],):
                raise MeshFormatError("pinned point has the wrong dimension", None, side)
    mesh = TriMesh(vertices, tris, boundary, pinned, pinned_point)
    try:
        check_boundary_loops(mesh)
    except ValueError as exc:
        raise MeshFormatError(str(exc), None, path) from None
    return mesh
