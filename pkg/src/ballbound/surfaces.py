"""Exact minimal surfaces in the unit ball with area oracles and samplers.

Three families are provided:

``FlatDisk``
    intersection of an affine k-plane (k = 2 or 3) with the unit ball.
``CatenoidPiece``
    the part of the catenoid ``rho = c cosh(z / c)`` inside the ball, cut at
    the height ``z1`` where it meets the sphere. It passes through the waist
    point ``c * a1``. A root exists exactly for ``0 < c < 1``.
``MinimalCone``
    the cone over the Clifford torus ``S^1(1/sqrt 2) x S^1(1/sqrt 2)`` in
    R^4 (k = 3), singular at the origin.

Samplers return quadrature rules: points, tangent frames and weights. When a
ball ``B_r(y)`` is excluded around a point of a two-dimensional family the
rule is built in polar coordinates about ``y`` in parameter space, with the
inner radius solved so that the cut is conforming; the radial direction is
graded geometrically so that the ``1/r`` scale near ``y`` is resolved.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from .mesh import TriMesh, disk_mesh, tube_mesh

CONTAIN_TOL = 1e-9


def unit_ball_volume(k: int) -> float:
    """Volume of the unit k-ball, ``pi^(k/2) / Gamma(k/2 + 1)``."""
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


def gauss_legendre(m: int, a: float = 0.0, b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(m)
    return a + (b - a) * (x + 1) / 2, w * (b - a) / 2


def sphere_rule(k: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes on S^(k-1) in R^k and weights summing to its area (k = 2, 3)."""
    if k == 2:
        phi = 2 * np.pi * np.arange(m) / m
        return np.column_stack([np.cos(phi), np.sin(phi)]), np.full(m, 2 * np.pi / m)
    if k == 3:
        cos_t, w_t = gauss_legendre(m, -1.0, 1.0)
        phi = 2 * np.pi * np.arange(2 * m) / (2 * m)
        sin_t = np.sqrt(1 - cos_t**2)
        pts = np.stack(
            [
                np.outer(sin_t, np.cos(phi)),
                np.outer(sin_t, np.sin(phi)),
                np.broadcast_to(cos_t[:, None], (m, 2 * m)),
            ],
            axis=-1,
        ).reshape(-1, 3)
        return pts, np.outer(w_t, np.full(2 * m, np.pi / m)).ravel()
    raise NotImplementedError(f"sphere rule for k={k}")


def orthonormal_columns(J: np.ndarray) -> np.ndarray:
    """Frames (..., k, n) spanning the columns of Jacobians (..., n, k)."""
    q, r = np.linalg.qr(J)
    s = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    s[s == 0] = 1.0
    return np.swapaxes(q * s[..., None, :], -1, -2)


@dataclass(frozen=True)
class SurfaceSamples:
    """Quadrature rule on (part of) a surface.

    ``excluded_measure`` is area that belongs to the integration domain but
    carries no sample (the cone's apex ball); it is known analytically.
    ``inner_radius``, when set, is the distance to y below which no sample
    can lie; a polygonal cut of ``B_r(y)`` sits slightly inside the sphere.
    """

    points: np.ndarray
    frames: np.ndarray
    weights: np.ndarray
    excluded_measure: float = 0.0
    inner_radius: Optional[float] = None

    @property
    def total_weight(self) -> float:
        return float(math.fsum(self.weights)) + self.excluded_measure

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class SphereSlice:
    """Quadrature rule on ``Sigma cap dB_r(y)`` with the inward conormal."""

    r: float
    points: np.ndarray
    conormals: np.ndarray
    weights: np.ndarray

    @property
    def measure(self) -> float:
        return float(math.fsum(self.weights))


class AnalyticSurface(ABC):
    family: str
    k: int
    n: int

    @property
    @abstractmethod
    def through_point(self) -> np.ndarray:
        """The designated point y the surface passes through."""

    @abstractmethod
    def area(self) -> float: ...

    @abstractmethod
    def residual(self, y) -> float:
        """How far ``y`` is from lying on the surface (0 when it does)."""

    def contains(self, y, tol: float = CONTAIN_TOL) -> bool:
        return self.residual(y) <= tol

    @abstractmethod
    def sample(self, density: int, exclude_radius: float = 0.0, around=None) -> SurfaceSamples: ...

    @abstractmethod
    def boundary_circle(self, r: float, y=None, m: int = 256) -> SphereSlice: ...

    @abstractmethod
    def boundary_points(self, m: int = 256) -> np.ndarray: ...

    @abstractmethod
    def describe(self) -> dict: ...

    def to_mesh(self, resolution: int) -> TriMesh:
        raise NotImplementedError(f"{self.family} surfaces have no triangle-mesh export")

    def _around(self, around) -> np.ndarray:
        y = self.through_point if around is None else np.asarray(around, dtype=float)
        if not self.contains(y):
            raise ValueError("the exclusion centre does not lie on the surface")
        return y


class _PolarPatch(AnalyticSurface):
    """Two-dimensional surfaces given by a chart on a star-shaped domain."""

    @abstractmethod
    def _X(self, u: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _J(self, u: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _param_of(self, y: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _edge_radius(self, u0: np.ndarray, omega: np.ndarray) -> np.ndarray: ...

    def _corners(self, u0: np.ndarray) -> list[float]:
        return []

    def _slice_radius(self, u0: np.ndarray, y: np.ndarray, r: float, omega: np.ndarray) -> np.ndarray:
        """Parameter radius along each ray where ``|X - y| = r`` (Newton)."""
        rho = np.full(len(omega), r, dtype=float)
        for _ in range(60):
            u = u0 + rho[:, None] * omega
            d = self._X(u) - y
            g = np.einsum("ij,ij->i", d, d) - r * r
            dg = 2 * np.einsum("ij,ijk,ik->i", d, self._J(u), omega)
            if np.any(dg <= 0):
                raise ValueError(f"slice at r={r:g} is not star-shaped about y")
            step = g / dg
            rho = rho - step
            # X - y carries absolute roundoff of order eps * |X|
            if np.all(np.abs(step) <= 16 * np.finfo(float).eps * (1.0 + rho + np.abs(u0).max())):
                break
        else:
            raise ValueError(f"slice radius did not converge at r={r:g}")
        return rho

    def _check_slice(self, u0, y, r, rho_in, omega):
        edge = self._edge_radius(u0, omega)
        if np.any(rho_in >= edge):
            raise ValueError(f"r={r:g} is too large: the sphere around y reaches the boundary of the surface")
        # monotone distance along every ray up to the cut
        for t in np.linspace(0.05, 1.0, 20):
            u = u0 + (t * rho_in)[:, None] * omega
            d = self._X(u) - y
            if np.any(np.einsum("ij,ijk,ik->i", d, self._J(u), omega) <= 0):
                raise ValueError(f"r={r:g} is too large: the slice is not a single circle")

    def _phi_rule(self, u0: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
        corners = sorted(self._corners(u0))
        if not corners:
            phi = 2 * np.pi * np.arange(4 * m) / (4 * m)
            return phi, np.full(4 * m, 2 * np.pi / (4 * m))
        ends = corners + [corners[0] + 2 * np.pi]
        nodes, weights = [], []
        for a, b in zip(ends[:-1], ends[1:]):
            x, w = gauss_legendre(m, a, b)
            nodes.append(x)
            weights.append(w)
        return np.concatenate(nodes), np.concatenate(weights)

    def _polar_samples(self, density: int, y: np.ndarray, r: float) -> SurfaceSamples:
        u0 = self._param_of(y)
        phi, w_phi = self._phi_rule(u0, 4 * density)
        omega = np.column_stack([np.cos(phi), np.sin(phi)])
        rho_out = self._edge_radius(u0, omega)
        tau, w_tau = gauss_legendre(4 * density)
        if r > 0:
            rho_in = self._slice_radius(u0, y, r, omega)
            self._check_slice(u0, y, r, rho_in, omega)
            span = np.log(rho_out / rho_in)
            rho = rho_in[:, None] * np.exp(np.outer(span, tau))
            drho = rho * span[:, None]
        else:
            rho = np.outer(rho_out, tau)
            drho = np.broadcast_to(rho_out[:, None], rho.shape)
        u = u0 + rho[..., None] * omega[:, None, :]
        J = self._J(u.reshape(-1, 2))
        gram = np.einsum("...ia,...ib->...ab", J, J)
        jac = np.sqrt(np.linalg.det(gram))
        weights = (w_phi[:, None] * w_tau[None, :] * drho * rho).ravel() * jac
        return SurfaceSamples(self._X(u.reshape(-1, 2)), orthonormal_columns(J), weights)

    def _polar_slice(self, r: float, y: np.ndarray, m: int) -> SphereSlice:
        u0 = self._param_of(y)
        phi = 2 * np.pi * np.arange(m) / m
        omega = np.column_stack([np.cos(phi), np.sin(phi)])
        perp = np.column_stack([-omega[:, 1], omega[:, 0]])
        rho = self._slice_radius(u0, y, r, omega)
        self._check_slice(u0, y, r, rho, omega)
        u = u0 + rho[:, None] * omega
        x = self._X(u)
        J = self._J(u)
        d = x - y
        g_rho = np.einsum("ij,ijk,ik->i", d, J, omega)
        g_phi = rho * np.einsum("ij,ijk,ik->i", d, J, perp)
        drho = -g_phi / g_rho
        tangent = np.einsum("ijk,ik->ij", J, drho[:, None] * omega + rho[:, None] * perp)
        frames = orthonormal_columns(J)
        proj = np.einsum("iaj,ia->ij", frames, np.einsum("iaj,ij->ia", frames, d))
        nu = -proj / np.linalg.norm(proj, axis=1)[:, None]
        weights = np.linalg.norm(tangent, axis=1) * (2 * np.pi / m)
        return SphereSlice(r, x, nu, weights)


# ------------------------------------------------------------------ flat disk


class FlatDisk(_PolarPatch):
    """Intersection of the affine plane ``basepoint + span(frame)`` with the ball."""

    family = "flatdisk"

    def __init__(self, basepoint, frame, y=None):
        frame = np.atleast_2d(np.asarray(frame, dtype=float))
        basepoint = np.asarray(basepoint, dtype=float)
        k, n = frame.shape
        if k not in (2, 3) or k >= n + 1:
            raise ValueError(f"flat disks need k in (2, 3) and k <= n, got k={k}, n={n}")
        if np.abs(frame @ frame.T - np.eye(k)).max() > 1e-12:
            raise ValueError("spanning frame must be orthonormal")
        if basepoint.shape != (n,):
            raise ValueError("basepoint has the wrong dimension")
        self.k, self.n = k, n
        self.frame = frame
        self.foot = basepoint - frame.T @ (frame @ basepoint)
        self.d = float(np.linalg.norm(self.foot))
        if self.d >= 1.0:
            raise ValueError(f"the plane misses the open unit ball (distance {self.d:.17g})")
        self.radius = math.sqrt(1.0 - self.d**2)
        self._y = self.foot.copy() if y is None else np.asarray(y, dtype=float)

    @classmethod
    def orthogonal_to(cls, y, k: int = 2) -> "FlatDisk":
        """The equality configuration: the k-plane through y normal to y.

        For ``y = 0`` this is the coordinate k-plane.
        """
        y = np.asarray(y, dtype=float)
        n = y.size
        if np.linalg.norm(y) == 0:
            return cls(y, np.eye(n)[:k], y)
        if k > n - 1:
            raise ValueError(f"no {k}-plane orthogonal to y in R^{n}")
        q, _ = np.linalg.qr(np.column_stack([y, np.eye(n)]))
        return cls(y, q[:, 1 : k + 1].T, y)

    @classmethod
    def at_distance(cls, d: float, k: int = 2, n: Optional[int] = None, y=None) -> "FlatDisk":
        """Coordinate k-plane shifted by ``d`` along the last axis.

        Its through-point is ``y`` when given, else the foot point.
        """
        n = k + 1 if n is None else n
        if k >= n:
            raise ValueError(f"a shifted {k}-plane needs n > k, got n={n}")
        base = np.zeros(n)
        base[-1] = d
        return cls(base, np.eye(n)[:k], y)

    @classmethod
    def containing(cls, y, direction, basepoint=None) -> "FlatDisk":
        """The 2-plane through ``basepoint`` (default origin) spanned by
        ``y - basepoint`` and ``direction``."""
        y = np.asarray(y, dtype=float)
        base = np.zeros_like(y) if basepoint is None else np.asarray(basepoint, dtype=float)
        q, r = np.linalg.qr(np.column_stack([y - base, direction]))
        if abs(r[1, 1]) < 1e-12:
            raise ValueError("direction is parallel to y - basepoint")
        return cls(base, (q * np.sign(np.diag(r))).T, y)

    @property
    def through_point(self) -> np.ndarray:
        return self._y

    def area(self) -> float:
        return unit_ball_volume(self.k) * (1.0 - self.d**2) ** (self.k / 2)

    def _coords(self, y):
        y = np.asarray(y, dtype=float)
        rel = y - self.foot
        u = self.frame @ rel
        return u, float(np.linalg.norm(rel - self.frame.T @ u))

    def residual(self, y) -> float:
        u, off = self._coords(y)
        return off + max(0.0, float(np.linalg.norm(u)) - self.radius)

    def _X(self, u):
        return self.foot + u @ self.frame

    def _J(self, u):
        return np.broadcast_to(self.frame.T, u.shape[:-1] + self.frame.T.shape)

    def _param_of(self, y):
        return self._coords(y)[0]

    def _edge_radius(self, u0, omega):
        b = omega @ u0
        return -b + np.sqrt(b * b - u0 @ u0 + self.radius**2)

    def _centered(self, y) -> bool:
        return float(np.linalg.norm(self._param_of(y))) <= 1e-12

    def sample(self, density: int, exclude_radius: float = 0.0, around=None) -> SurfaceSamples:
        if density < 1:
            raise ValueError("density must be a positive integer")
        y = self._around(around)
        centered = exclude_radius == 0 or self._centered(y)
        if self.k == 2 and not centered:
            return self._polar_samples(density, y, exclude_radius)
        if not centered:
            raise NotImplementedError("off-centre exclusion is only implemented for k = 2")
        inner = exclude_radius
        if inner >= self.radius:
            raise ValueError("exclusion radius covers the whole disk")
        rho, w_rho = gauss_legendre(4 * density, inner, self.radius)
        dirs, w_dir = sphere_rule(self.k, 4 * density)
        pts = self.foot + (rho[:, None, None] * dirs[None, :, :]).reshape(-1, self.k) @ self.frame
        weights = np.outer(w_rho * rho ** (self.k - 1), w_dir).ravel()
        frames = np.broadcast_to(self.frame, (len(weights),) + self.frame.shape)
        return SurfaceSamples(pts, frames, weights)

    def boundary_circle(self, r: float, y=None, m: int = 256) -> SphereSlice:
        y = self._around(y)
        u0 = self._param_of(y)
        if not 0 < r < self.radius - float(np.linalg.norm(u0)):
            raise ValueError(f"r={r:g} is too large: the sphere around y reaches the rim of the disk")
        dirs, w = sphere_rule(self.k, m if self.k == 2 else max(m // 8, 8))
        offsets = r * dirs @ self.frame
        return SphereSlice(r, y + offsets, -offsets / r, w * r ** (self.k - 1))

    def boundary_points(self, m: int = 256) -> np.ndarray:
        dirs, _ = sphere_rule(self.k, m if self.k == 2 else max(m // 8, 8))
        return self.foot + self.radius * dirs @ self.frame

    def to_mesh(self, resolution: int) -> TriMesh:
        if self.k != 2:
            return super().to_mesh(resolution)
        mesh = disk_mesh(resolution, self.foot, self.frame, self.radius)
        # project the rim exactly onto the sphere
        rim = mesh.boundary
        mesh.vertices[rim] /= np.linalg.norm(mesh.vertices[rim], axis=1)[:, None]
        if not self._centered(self._y):
            mesh.pinned = mesh.pinned_point = None
        return mesh

    def describe(self) -> dict:
        return {
            "family": self.family,
            "k": self.k,
            "n": self.n,
            "basepoint": self.foot.tolist(),
            "frame": self.frame.tolist(),
            "distance_to_origin": self.d,
        }


# ------------------------------------------------------------------- catenoid


def catenoid_height(c: float) -> float:
    """Unique root z1 in (0, 1) of ``c^2 cosh^2(z/c) + z^2 = 1``."""
    if not 0 < c < 1:
        raise ValueError(f"catenoid waist c={c!r} is not admissible: need 0 < c < 1 for a root z1 in (0, 1)")
    def g(z):
        return (c * math.cosh(z / c)) ** 2 + z * z - 1.0

    # g(0) = c^2 - 1 < 0 and g(1) > 0; g is increasing on (0, 1)
    # c cosh(z/c) reaches 1 at c acosh(1/c), where g > 0 already
    hi = min(1.0, c * math.acosh(1.0 / c))
    return brentq(g, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def catenoid_c_max(tol: float = 1e-14) -> float:
    """Supremum of admissible waists, located by bisection on root existence.

    The root exists exactly when ``g(0) = c^2 - 1 < 0``, so this returns 1.
    """
    def has_root(c):
        lo_sign = c * c - 1.0 < 0
        hi_sign = (c * math.cosh(1.0 / c)) ** 2 > 0
        return lo_sign and hi_sign

    lo, hi = 1e-3, 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if has_root(mid):
            lo = mid
        else:
            hi = mid
    return hi


class CatenoidPiece(_PolarPatch):
    """``{rho = c cosh(z/c), |z| <= z1}`` about ``axis``; y is the waist point ``c * a1``."""

    family = "catenoid"
    k = 2
    n = 3

    def __init__(self, c: float, axis=(0.0, 0.0, 1.0)):
        self.c = float(c)
        self.z1 = catenoid_height(self.c)
        axis = np.asarray(axis, dtype=float)
        if axis.shape != (3,) or not abs(np.linalg.norm(axis) - 1.0) < 1e-12:
            raise ValueError("axis must be a unit vector in R^3")
        q, r = np.linalg.qr(np.column_stack([axis, np.eye(3)]))
        # positive diagonal of r: the default axis gives a1 = e1, a2 = e2
        q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
        a1, a2 = q[:, 1], q[:, 2]
        if np.dot(np.cross(a1, a2), axis) < 0:
            a2 = -a2
        self.basis = np.array([a1, a2, axis]) + 0.0  # no negative zeros in reports
        self.rim_radius = self.c * math.cosh(self.z1 / self.c)

    @property
    def through_point(self) -> np.ndarray:
        return self.c * self.basis[0]

    def area(self) -> float:
        c, z1 = self.c, self.z1
        return 2 * math.pi * c * (z1 + 0.5 * c * math.sinh(2 * z1 / c))

    def area_by_quadrature(self, m: int = 64) -> float:
        """Independent check of ``area``: Gauss-Legendre on ``2 pi c cosh^2(z/c)``."""
        z, w = gauss_legendre(m, -self.z1, self.z1)
        return float(math.fsum(w * 2 * math.pi * self.c * np.cosh(z / self.c) ** 2))

    def residual(self, y) -> float:
        local = self.basis @ np.asarray(y, dtype=float)
        rho = math.hypot(local[0], local[1])
        z = local[2]
        over = max(0.0, abs(z) - self.z1)
        return abs(rho - self.c * math.cosh(min(abs(z), self.z1) / self.c)) + over

    # chart: u = (a, z) with a = c * theta, so the chart is isometric at the waist
    def _X(self, u):
        c = self.c
        theta = u[..., 0] / c
        rad = c * np.cosh(u[..., 1] / c)
        local = np.stack([rad * np.cos(theta), rad * np.sin(theta), u[..., 1]], axis=-1)
        return local @ self.basis

    def _J(self, u):
        c = self.c
        theta = u[..., 0] / c
        ch, sh = np.cosh(u[..., 1] / c), np.sinh(u[..., 1] / c)
        da = np.stack([-ch * np.sin(theta), ch * np.cos(theta), np.zeros_like(ch)], axis=-1) @ self.basis
        dz = np.stack([sh * np.cos(theta), sh * np.sin(theta), np.ones_like(ch)], axis=-1) @ self.basis
        return np.stack([da, dz], axis=-1)

    def _param_of(self, y):
        local = self.basis @ np.asarray(y, dtype=float)
        return np.array([self.c * math.atan2(local[1], local[0]), local[2]])

    def _half_widths(self):
        return self.c * math.pi, self.z1

    def _edge_radius(self, u0, omega):
        ha, hz = self._half_widths()
        with np.errstate(divide="ignore"):
            ta = np.where(omega[:, 0] > 0, (ha - u0[0]) / omega[:, 0], (-ha - u0[0]) / omega[:, 0])
            tz = np.where(omega[:, 1] > 0, (hz - u0[1]) / omega[:, 1], (-hz - u0[1]) / omega[:, 1])
        ta = np.where(omega[:, 0] == 0, np.inf, ta)
        tz = np.where(omega[:, 1] == 0, np.inf, tz)
        return np.minimum(ta, tz)

    def _corners(self, u0):
        ha, hz = self._half_widths()
        return [
            math.atan2(sz * hz - u0[1], sa * ha - u0[0])
            for sa, sz in ((1, 1), (-1, 1), (-1, -1), (1, -1))
        ]

    def sample(self, density: int, exclude_radius: float = 0.0, around=None) -> SurfaceSamples:
        if density < 1:
            raise ValueError("density must be a positive integer")
        if exclude_radius > 0:
            return self._polar_samples(density, self._around(around), exclude_radius)
        m_a = 16 * density
        a = self.c * (2 * np.pi * np.arange(m_a) / m_a - np.pi)
        z, w_z = gauss_legendre(8 * density, -self.z1, self.z1)
        u = np.stack(np.meshgrid(a, z, indexing="ij"), axis=-1).reshape(-1, 2)
        jac = np.cosh(u[:, 1] / self.c) ** 2
        weights = (2 * np.pi * self.c / m_a) * np.tile(w_z, m_a) * jac
        J = self._J(u)
        return SurfaceSamples(self._X(u), orthonormal_columns(J), weights)

    def boundary_circle(self, r: float, y=None, m: int = 256) -> SphereSlice:
        return self._polar_slice(r, self._around(y), m)

    def boundary_points(self, m: int = 256) -> np.ndarray:
        a = self.c * 2 * np.pi * np.arange(m) / m
        u = np.concatenate(
            [np.column_stack([a, np.full(m, self.z1)]), np.column_stack([a, np.full(m, -self.z1)])]
        )
        return self._X(u)

    def tangent_frame(self, u) -> np.ndarray:
        return orthonormal_columns(self._J(np.asarray(u, dtype=float)))

    def mean_curvature_fd(self, h: float = 1e-3, grid: int = 24) -> float:
        """Sup-norm of the mean curvature from central differences of the chart."""
        a = self.c * np.linspace(-np.pi, np.pi, grid, endpoint=False)
        z = np.linspace(-0.9 * self.z1, 0.9 * self.z1, grid)
        u = np.stack(np.meshgrid(a, z, indexing="ij"), axis=-1).reshape(-1, 2)
        ea, ez = np.array([h, 0.0]), np.array([0.0, h])
        X = self._X
        x0 = X(u)
        xa = (X(u + ea) - X(u - ea)) / (2 * h)
        xz = (X(u + ez) - X(u - ez)) / (2 * h)
        xaa = (X(u + ea) - 2 * x0 + X(u - ea)) / h**2
        xzz = (X(u + ez) - 2 * x0 + X(u - ez)) / h**2
        xaz = (X(u + ea + ez) - X(u + ea - ez) - X(u - ea + ez) + X(u - ea - ez)) / (4 * h * h)
        nrm = np.cross(xa, xz)
        nrm /= np.linalg.norm(nrm, axis=1)[:, None]
        E, F, G = (np.einsum("ij,ij->i", p, q) for p, q in ((xa, xa), (xa, xz), (xz, xz)))
        L, M, N = (np.einsum("ij,ij->i", p, nrm) for p in (xaa, xaz, xzz))
        H = (E * N - 2 * F * M + G * L) / (2 * (E * G - F * F))
        return float(np.abs(H).max())

    def to_mesh(self, resolution: int) -> TriMesh:
        """Mesh with ``2 * resolution + 1`` rings and ``4 * resolution`` segments.

        The waist point is a vertex and is pinned.
        """
        heights = np.linspace(-self.z1, self.z1, 2 * resolution + 1)
        mesh = tube_mesh(self.c * np.cosh(heights / self.c), heights, 4 * resolution, self.basis)
        rim = mesh.boundary
        mesh.vertices[rim] /= np.linalg.norm(mesh.vertices[rim], axis=1)[:, None]
        mesh.pinned = resolution * 4 * resolution
        mesh.pinned_point = self.through_point.copy()
        mesh.vertices[mesh.pinned] = mesh.pinned_point
        return mesh

    def describe(self) -> dict:
        return {"family": self.family, "k": 2, "n": 3, "c": self.c, "z1": self.z1, "axis": self.basis[2].tolist()}


# ----------------------------------------------------------------------- cone


class MinimalCone(AnalyticSurface):
    """Cone over the Clifford torus in R^4, truncated by the unit ball.

    Samples stay outside ``B_delta(0)``; the missing volume ``(2 pi^2 / 3)
    delta^3`` is reported as ``excluded_measure``.
    """

    family = "cone"
    k = 3
    n = 4
    link_area = 2 * math.pi**2

    def __init__(self, delta: float = 1e-3):
        if not 0 < delta < 1:
            raise ValueError("apex exclusion radius must lie in (0, 1)")
        self.delta = float(delta)

    @property
    def through_point(self) -> np.ndarray:
        return np.zeros(4)

    def area(self) -> float:
        return self.link_area / self.k

    def residual(self, y) -> float:
        y = np.asarray(y, dtype=float)
        return abs(math.hypot(y[0], y[1]) - math.hypot(y[2], y[3])) + max(0.0, float(np.linalg.norm(y)) - 1.0)

    def _apex_only(self, y):
        if np.linalg.norm(np.asarray(y, dtype=float)) > 1e-12:
            raise NotImplementedError("cone slices are only implemented about the apex")

    @staticmethod
    def _torus(m: int):
        ang = 2 * np.pi * np.arange(m) / m
        al, be = (g.ravel() for g in np.meshgrid(ang, ang, indexing="ij"))
        unit = np.column_stack([np.cos(al), np.sin(al), np.cos(be), np.sin(be)]) / math.sqrt(2)
        return al, be, unit

    def sample(self, density: int, exclude_radius: float = 0.0, around=None) -> SurfaceSamples:
        if density < 1:
            raise ValueError("density must be a positive integer")
        y = self._around(around)
        if exclude_radius > 0:
            self._apex_only(y)
        t0 = max(self.delta, exclude_radius)
        t, w_t = gauss_legendre(4 * density, t0, 1.0)
        m = 8 * density
        al, be, unit = self._torus(m)
        z = np.zeros_like(al)
        e2 = np.column_stack([-np.sin(al), np.cos(al), z, z])
        e3 = np.column_stack([z, z, -np.sin(be), np.cos(be)])
        frame = np.stack([unit, e2, e3], axis=1)
        pts = (t[:, None, None] * unit[None]).reshape(-1, 4)
        weights = np.outer(w_t * t**2 / 2, np.full(len(al), (2 * np.pi / m) ** 2)).ravel()
        frames = np.broadcast_to(frame[None], (len(t),) + frame.shape).reshape(-1, 3, 4)
        missing = self.area() * (t0**3 - exclude_radius**3)
        return SurfaceSamples(pts, frames, weights, excluded_measure=missing)

    def boundary_circle(self, r: float, y=None, m: int = 64) -> SphereSlice:
        y = self._around(y)
        self._apex_only(y)
        if not 0 < r < 1:
            raise ValueError(f"r={r:g} must lie in (0, 1)")
        _, _, unit = self._torus(m)
        weights = np.full(len(unit), r**2 / 2 * (2 * np.pi / m) ** 2)
        return SphereSlice(r, r * unit, -unit, weights)

    def boundary_points(self, m: int = 64) -> np.ndarray:
        return self._torus(m)[2]

    def describe(self) -> dict:
        return {"family": self.family, "k": 3, "n": 4, "link": "clifford", "apex_exclusion": self.delta}
