"""Discrete minimal surfaces (k = 2) with boundary on the unit sphere.

Each iteration assembles the cotangent Laplacian of the current mesh and
solves the Dirichlet problem for the free vertices, with boundary vertices
and the pinned vertex held fixed (Pinkall-Polthier). The new positions
minimise the Dirichlet energy measured in the old metric, which bounds the
new area from above, so a full step never increases the area. Steps that
do increase it (roundoff, remeshing) are retried with half the relaxation.

After every step boundary vertices are re-projected onto the unit sphere
and the pinned vertex is reset to y.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .mesh import (
    TriMesh,
    mesh_area,
    pinned_displacement,
    sphere_deviation,
    triangle_angles,
    triangle_areas,
    validate_mesh,
)

log = logging.getLogger(__name__)


class MeshDegenerateError(RuntimeError):
    """The solver produced triangles below the minimum angle."""


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 500
    tol: float = 1e-10
    window: int = 10
    relaxation: float = 1.0
    min_relaxation: float = 1.0 / 1024
    remesh: bool = False
    min_angle_deg: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if not 0 < self.min_relaxation <= self.relaxation < 2:
            raise ValueError("need 0 < min_relaxation <= relaxation < 2")


@dataclass
class SolveResult:
    mesh: TriMesh
    converged: bool
    iterations: int
    area_history: list
    gradient_norm: float
    sphere_deviation: list = field(default_factory=list)
    pinned_displacement: list = field(default_factory=list)
    rejected_steps: int = 0
    flips: int = 0
    min_angle_deg: float = float("nan")
    message: str = ""

    @property
    def area(self) -> float:
        return self.area_history[-1]

    def monotone(self) -> bool:
        a = np.asarray(self.area_history)
        return bool(np.all(np.diff(a) <= 0))

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "area": self.area,
            "initial_area": self.area_history[0],
            "gradient_norm": self.gradient_norm,
            "max_sphere_deviation": max(self.sphere_deviation),
            "max_pinned_displacement": max(self.pinned_displacement),
            "monotone": self.monotone(),
            "rejected_steps": self.rejected_steps,
            "flips": self.flips,
            "min_angle_deg": self.min_angle_deg,
            "area_history": list(self.area_history),
            "message": self.message,
        }


def cotan_laplacian(vertices: np.ndarray, triangles: np.ndarray) -> sparse.csr_matrix:
    """Stiffness matrix ``L`` with ``L_ij = -(cot a_ij + cot b_ij) / 2``.

    ``L @ X`` is the gradient of the total area with respect to the vertex
    positions ``X``.
    """
    p = vertices[triangles]
    nv = len(vertices)
    rows, cols, vals = [], [], []
    for j in range(3):
        # corner j is opposite the edge (j+1, j+2)
        u = p[:, (j + 1) % 3] - p[:, j]
        v = p[:, (j + 2) % 3] - p[:, j]
        dot = np.einsum("ij,ij->i", u, v)
        cross = np.sqrt(np.maximum(np.einsum("ij,ij->i", u, u) * np.einsum("ij,ij->i", v, v) - dot**2, 0.0))
        cot = dot / cross
        a, b = triangles[:, (j + 1) % 3], triangles[:, (j + 2) % 3]
        w = 0.5 * cot
        rows += [a, b, a, b]
        cols += [b, a, a, b]
        vals += [-w, -w, w, w]
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nv, nv)
    )


def area_gradient_norm(mesh: TriMesh) -> float:
    """Euclidean norm of the area gradient restricted to free vertices."""
    g = cotan_laplacian(mesh.vertices, mesh.triangles) @ mesh.vertices
    free = mesh.free_vertices()
    return float(np.linalg.norm(g[free]))


def _enforce_constraints(mesh: TriMesh) -> None:
    b = mesh.boundary
    if b.any():
        mesh.vertices[b] /= np.linalg.norm(mesh.vertices[b], axis=1)[:, None]
    if mesh.pinned is not None:
        mesh.vertices[mesh.pinned] = mesh.pinned_point


def _laplace_step(mesh: TriMesh) -> np.ndarray:
    X = mesh.vertices
    L = cotan_laplacian(X, mesh.triangles).tocsc()
    free = mesh.free_vertices()
    fixed = np.setdiff1d(np.arange(len(X)), free)
    target = X.copy()
    if free.size == 0:
        return target
    lu = splu(L[free][:, free].tocsc())
    rhs = -(L[free][:, fixed] @ X[fixed])
    target[free] = lu.solve(np.asarray(rhs))
    return target


def delaunay_flips(mesh: TriMesh, max_passes: int = 20) -> int:
    """Flip interior edges whose opposite angles sum beyond pi.

    A flip is applied only when it does not increase the area. Returns the
    number of flips performed; the mesh is modified in place.
    """
    flips = 0
    tris = mesh.triangles
    X = mesh.vertices
    for _ in range(max_passes):
        changed = False
        owner = {}
        for f, t in enumerate(tris):
            for j in range(3):
                owner[(int(t[j]), int(t[(j + 1) % 3]))] = (f, j)
        seen = set()
        touched = set()
        for (a, b), (f, j) in list(owner.items()):
            if (b, a) not in owner or (b, a) in seen:
                continue
            seen.add((a, b))
            g, i = owner[(b, a)]
            if f in touched or g in touched:
                continue
            c = int(tris[f][(j + 2) % 3])
            d = int(tris[g][(i + 2) % 3])
            if c == d:
                continue
            ang_c = _angle(X[c], X[a], X[b])
            ang_d = _angle(X[d], X[b], X[a])
            if ang_c + ang_d <= math.pi + 1e-12:
                continue
            old = triangle_areas(X, np.array([tris[f], tris[g]])).sum()
            new_tris = np.array([[c, a, d], [d, b, c]])
            if triangle_areas(X, new_tris).sum() > old * (1 + 1e-14):
                continue
            # the new edge (c, d) must not already exist
            if (c, d) in owner or (d, c) in owner:
                continue
            tris[f] = new_tris[0]
            tris[g] = new_tris[1]
            touched.update((f, g))
            flips += 1
            changed = True
        if not changed:
            break
    mesh.triangles = tris
    return flips


def _angle(apex, p, q) -> float:
    u, v = p - apex, q - apex
    cos = float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))
    return math.acos(min(1.0, max(-1.0, cos)))


def minimize(mesh: TriMesh, config: SolverConfig = SolverConfig()) -> SolveResult:
    """Minimise area with boundary on the sphere and the pinned vertex at y.

    Terminates when the relative area decrease over ``config.window``
    accepted iterations falls below ``config.tol``; otherwise the last
    (and best) iterate is returned with ``converged=False``.
    """
    work = mesh.copy()
    validate_mesh(work)
    if sphere_deviation(work) > 1e-6:
        raise ValueError("boundary vertices must start on the unit sphere")
    if work.pinned is not None and pinned_displacement(work) > 1e-9:
        raise ValueError("pinned vertex must start at its target point")
    _enforce_constraints(work)
    min_angle = math.radians(config.min_angle_deg)

    areas = [mesh_area(work)]
    sphere = [sphere_deviation(work)]
    pinned = [pinned_displacement(work)]
    omega = config.relaxation
    rejected = flips = 0
    converged = False
    message = "maximum iterations reached"
    it = 0
    for it in range(1, config.max_iterations + 1):
        target = _laplace_step(work)
        while True:
            trial = work.copy()
            trial.vertices = work.vertices + omega * (target - work.vertices)
            _enforce_constraints(trial)
            a_new = mesh_area(trial)
            if a_new <= areas[-1]:
                break
            rejected += 1
            omega *= 0.5
            if omega < config.min_relaxation:
                break
        if omega < config.min_relaxation:
            # no admissible step left: the iterate is stationary to roundoff
            converged = True
            message = "step rejected at minimum relaxation"
            it -= 1
            break
        worst = float(triangle_angles(trial).min())
        if worst < min_angle:
            if not config.remesh:
                raise MeshDegenerateError(
                    f"iteration {it}: minimum angle {math.degrees(worst):.3g} deg is below "
                    f"{config.min_angle_deg:g} deg and remeshing is disabled"
                )
            flips += delaunay_flips(trial)
            a_new = mesh_area(trial)
            if a_new > areas[-1] or triangle_angles(trial).min() < min_angle:
                raise MeshDegenerateError(f"iteration {it}: remeshing could not restore the minimum angle")
        work = trial
        areas.append(a_new)
        sphere.append(sphere_deviation(work))
        pinned.append(pinned_displacement(work))
        omega = min(config.relaxation, 2 * omega)
        if it >= config.window:
            drop = (areas[-1 - config.window] - areas[-1]) / areas[-1]
            if drop < config.tol:
                converged = True
                message = "relative area decrease below tolerance"
                break
    log.debug("minimize: %s after %d iterations, area %.17g", message, it, areas[-1])
    return SolveResult(
        mesh=work,
        converged=converged,
        iterations=it,
        area_history=areas,
        gradient_norm=area_gradient_norm(work),
        sphere_deviation=sphere,
        pinned_displacement=pinned,
        rejected_steps=rejected,
        flips=flips,
        min_angle_deg=math.degrees(float(triangle_angles(work).min())),
        message=message,
    )


# ---------------------------------------------------------- test problems


def perturbed_disk_problem(y, rings: int, jitter: float = 0.05, seed: int = 0) -> TriMesh:
    """Flat disk through y orthogonal to y, interior vertices pushed off-plane.

    Each interior vertex other than the pinned centre moves along the plane
    normal by a uniform amount in ``[-jitter, jitter]``.
    """
    from .surfaces import FlatDisk

    y = np.asarray(y, dtype=float)
    disk = FlatDisk.orthogonal_to(y)
    mesh = disk.to_mesh(rings)
    normal = y / np.linalg.norm(y) if np.linalg.norm(y) > 0 else np.eye(len(y))[-1]
    rng = np.random.default_rng(seed)
    free = mesh.free_vertices()
    mesh.vertices[free] += rng.uniform(-jitter, jitter, size=len(free))[:, None] * normal
    return mesh


def catenoid_problem(c: float, resolution: int) -> TriMesh:
    """Cylinder-topology start mesh for the catenoid with waist c.

    Rings sit at the catenoid's heights but the profile is the parabola
    through the waist radius c and the rim radius, so the start is not
    minimal; the waist vertex is pinned at ``(c, 0, 0)``.
    """
    from .mesh import tube_mesh
    from .surfaces import CatenoidPiece

    cat = CatenoidPiece(c)
    heights = np.linspace(-cat.z1, cat.z1, 2 * resolution + 1)
    profile = cat.rim_radius - (cat.rim_radius - c) * (1 - (heights / cat.z1) ** 2)
    mesh = tube_mesh(profile, heights, 4 * resolution, cat.basis)
    rim = mesh.boundary
    mesh.vertices[rim] /= np.linalg.norm(mesh.vertices[rim], axis=1)[:, None]
    mesh.pinned = resolution * 4 * resolution
    mesh.pinned_point = cat.through_point.copy()
    mesh.vertices[mesh.pinned] = mesh.pinned_point
    return mesh
