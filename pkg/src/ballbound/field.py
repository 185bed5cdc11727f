"""The calibration field W attached to a point y of the unit ball.

For a prescribed point ``y`` with ``|y| < 1`` and a dimension ``k >= 2`` the
field is

    W(x) = -1/k (s^(k/2) - 1) (x - y) + 1/(k-2) (s^((k-2)/2) - 1) y     (k > 2)
    W(x) = -1/2 (s - 1) (x - y) + 1/2 log(s) y                            (k = 2)

with ``s = Q / |x - y|^2`` and ``Q = 1 - 2<x, y> + |y|^2``. Its trace over any
orthonormal k-frame never exceeds one, it vanishes on the unit sphere, and it
blows up like ``|x - y|^(1-k)`` at ``y``.

Every evaluator here is vectorised: points have shape ``(..., n)`` and frames
``(..., k, n)``; leading axes broadcast against each other.

Numerically, ``s - 1 = (1 - |x|^2) / |x - y|^2`` exactly, and everything is
written in terms of that quantity so the boundary cancellation happens in
closed form instead of by subtracting two nearly equal numbers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

BALL_TOL = 1e-12
FRAME_BUILD_TOL = 1e-12
FRAME_USE_TOL = 1e-9
DEFICIT_SLACK = 1e-10
DEFAULT_R_MIN = 1e-9


@dataclass(frozen=True, eq=False)
class CalibrationField:
    """The pair ``(y, k)`` defining W on ``B^n \\ {y}``.

    ``r_min`` is the smallest admissible distance to ``y``; the field is
    never evaluated closer than that.
    """

    y: np.ndarray
    k: int
    r_min: float = DEFAULT_R_MIN

    def __post_init__(self):
        y = np.array(self.y, dtype=float)
        if y.ndim != 1 or y.size == 0:
            raise ValueError("y must be a non-empty vector")
        if int(self.k) != self.k:
            raise ValueError(f"k must be an integer, got {self.k!r}")
        k = int(self.k)
        if not 2 <= k <= y.size:
            raise ValueError(f"need 2 <= k <= n, got k={k}, n={y.size}")
        if not np.linalg.norm(y) < 1.0:
            raise ValueError(f"y must lie in the open unit ball, |y| = {np.linalg.norm(y)!r}")
        if not self.r_min > 0:
            raise ValueError("r_min must be positive")
        y.flags.writeable = False
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "k", k)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def log_branch(self) -> bool:
        return self.k == 2


@dataclass(frozen=True, eq=False)
class TangentFrame:
    """Orthonormal k-frame in R^n, stored as the rows of ``vectors``."""

    vectors: np.ndarray
    tol: float = FRAME_BUILD_TOL

    def __post_init__(self):
        e = np.array(self.vectors, dtype=float)
        if e.ndim != 2 or e.shape[0] > e.shape[1]:
            raise ValueError(f"frame must have shape (k, n) with k <= n, got {e.shape}")
        dev = gram_deviation(e)
        if dev > self.tol:
            raise ValueError(f"frame is not orthonormal: Gram deviation {dev:.3e} > {self.tol:.1e}")
        e.flags.writeable = False
        object.__setattr__(self, "vectors", e)

    @classmethod
    def from_vectors(cls, vectors) -> "TangentFrame":
        """Orthonormalise spanning vectors (Gram-Schmidt order preserved)."""
        v = np.atleast_2d(np.asarray(vectors, dtype=float))
        q, r = np.linalg.qr(v.T)
        if np.any(np.abs(np.diag(r)) < 1e-14 * max(1.0, np.abs(r).max())):
            raise ValueError("vectors are linearly dependent")
        q = q * np.sign(np.diag(r))
        return cls(q.T)

    @property
    def k(self) -> int:
        return self.vectors.shape[0]

    @property
    def n(self) -> int:
        return self.vectors.shape[1]

    def projector(self) -> np.ndarray:
        return self.vectors.T @ self.vectors


FrameLike = Union[TangentFrame, np.ndarray]


@dataclass(frozen=True)
class FieldDiagnostics:
    """Scalar ingredients of the trace formula at ``(x, frame)``.

    Q is ``1 - 2<x,y> + |y|^2``, ``dist`` is ``|x - y|``,
    ``tangential_y_sq`` is ``sum <y, e_i>^2`` and ``normal_xy_sq`` is the
    squared length of the part of ``x - y`` normal to the frame.
    """

    Q: np.ndarray
    dist: np.ndarray
    tangential_y_sq: np.ndarray
    normal_xy_sq: np.ndarray


def gram_deviation(frames) -> float:
    """Max entrywise deviation of ``E E^T`` from the identity."""
    e = np.asarray(frames, dtype=float)
    gram = e @ np.swapaxes(e, -1, -2)
    return float(np.abs(gram - np.eye(e.shape[-2])).max())


def _frame_array(frame: FrameLike, field: CalibrationField) -> np.ndarray:
    e = frame.vectors if isinstance(frame, TangentFrame) else np.asarray(frame, dtype=float)
    if e.ndim < 2 or e.shape[-1] != field.n or e.shape[-2] != field.k:
        raise ValueError(f"frame must have shape (..., {field.k}, {field.n}), got {e.shape}")
    dev = gram_deviation(e)
    if dev > FRAME_USE_TOL:
        raise ValueError(f"frame is not orthonormal: Gram deviation {dev:.3e} > {FRAME_USE_TOL:.0e}")
    return e


def _checked_points(field: CalibrationField, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Validate the points and return ``(x, x - y, |x - y|)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (field.n,):
        raise ValueError(f"points must have trailing dimension {field.n}, got shape {x.shape}")
    norm = np.linalg.norm(x, axis=-1)
    if np.any(norm > 1.0 + BALL_TOL):
        raise ValueError(f"point outside the closed unit ball: |x| = {float(norm.max())!r}")
    xy = x - field.y
    dist = np.linalg.norm(xy, axis=-1)
    if np.any(dist < field.r_min):
        raise ValueError(
            f"point within r_min={field.r_min:g} of y; W is singular at y (|x - y| = {float(dist.min())!r})"
        )
    return x, xy, dist


def w_kernel(y: np.ndarray, k: int, x: np.ndarray) -> np.ndarray:
    """W for arrays of y and x that broadcast; no domain checks."""
    xy = x - y
    dist_sq = np.einsum("...i,...i->...", xy, xy)
    log_s = np.log1p((1.0 - np.einsum("...i,...i->...", x, x)) / dist_sq)
    if k == 2:
        radial = -0.5 * np.expm1(log_s)
        axial = 0.5 * log_s
    else:
        radial = -np.expm1(0.5 * k * log_s) / k
        axial = np.expm1(0.5 * (k - 2) * log_s) / (k - 2)
    return radial[..., None] * xy + axial[..., None] * y


def deficit_kernel(y: np.ndarray, k: int, x: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Deficit for broadcasting arrays of y, x and frames; no domain checks."""
    xy = x - y
    dist_sq = np.einsum("...i,...i->...", xy, xy)
    log_s = np.log1p((1.0 - np.einsum("...i,...i->...", x, x)) / dist_sq)
    coeff_y = np.einsum("...ij,...j->...i", e, y)
    coeff_xy = np.einsum("...ij,...j->...i", e, xy)
    normal = xy - np.einsum("...i,...ij->...j", coeff_xy, e)
    tangential_y_sq = np.einsum("...i,...i->...", coeff_y, coeff_y)
    normal_xy_sq = np.einsum("...i,...i->...", normal, normal)
    return (np.exp(0.5 * k * log_s) * normal_xy_sq + np.exp(0.5 * (k - 4) * log_s) * tangential_y_sq) / dist_sq


def eval_W(field: CalibrationField, x) -> np.ndarray:
    """Evaluate W at one point or a batch of points."""
    x, _, _ = _checked_points(field, x)
    return w_kernel(field.y, field.k, x)


def diagnostics(field: CalibrationField, x, frame: FrameLike) -> FieldDiagnostics:
    x, xy, dist = _checked_points(field, x)
    e = _frame_array(frame, field)
    Q = 1.0 - 2.0 * (x @ field.y) + field.y @ field.y
    coeff_y = e @ field.y
    coeff_xy = np.einsum("...ij,...j->...i", e, xy)
    normal = xy - np.einsum("...i,...ij->...j", coeff_xy, e)
    return FieldDiagnostics(
        Q=Q,
        dist=dist,
        tangential_y_sq=np.einsum("...i,...i->...", coeff_y, coeff_y),
        normal_xy_sq=np.einsum("...i,...i->...", normal, normal),
    )


def deficit(field: CalibrationField, x, frame: FrameLike) -> np.ndarray:
    """Pointwise ``1 - tr_frame(DW)``; nonnegative for every admissible input."""
    x, _, _ = _checked_points(field, x)
    e = _frame_array(frame, field)
    return deficit_kernel(field.y, field.k, x, e)


def divergence_trace(field: CalibrationField, x, frame: FrameLike) -> np.ndarray:
    """``sum_i <D_{e_i} W, e_i>`` from its closed form."""
    return 1.0 - deficit(field, x, frame)


def divergence_trace_fd(field: CalibrationField, x, frame: FrameLike, h) -> np.ndarray:
    """Central-difference estimate of the frame trace of DW.

    ``h`` may be a scalar or broadcast against the batch shape of ``x``.
    """
    h = np.asarray(h, dtype=float)
    if np.any(~(h > 0)):
        raise ValueError("finite-difference step must be positive")
    x = np.asarray(x, dtype=float)
    e = _frame_array(frame, field)
    total = 0.0
    for i in range(field.k):
        step = h[..., None] * e[..., i, :]
        try:
            w_plus = eval_W(field, x + step)
            w_minus = eval_W(field, x - step)
        except ValueError as exc:
            raise ValueError(f"finite-difference stencil leaves the domain: {exc}") from exc
        total = total + np.einsum("...j,...j->...", w_plus - w_minus, e[..., i, :]) / (2.0 * h)
    return total


def asymptotic_leading(field: CalibrationField, x) -> np.ndarray:
    """Leading singular term ``-(1 - |y|^2)^(k/2) (x - y) / (k |x - y|^k)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (field.n,):
        raise ValueError(f"points must have trailing dimension {field.n}")
    xy = x - field.y
    dist = np.linalg.norm(xy, axis=-1)
    if np.any(dist == 0):
        raise ValueError("leading term is undefined at x = y")
    k = field.k
    scale = (1.0 - field.y @ field.y) ** (0.5 * k) / (k * dist**k)
    return -scale[..., None] * xy


def is_equality_point(diag: FieldDiagnostics, tol: float = 1e-12) -> np.ndarray:
    """True where both nonnegative terms of the deficit vanish.

    Those are exactly the points where the deficit is zero: x - y lies in
    the plane and y is normal to it.
    """
    return (diag.normal_xy_sq <= tol) & (diag.tangential_y_sq <= tol)


def random_frames(rng: np.random.Generator, size, n: int, k: int) -> np.ndarray:
    """Haar-distributed orthonormal k-frames, shape ``(*size, k, n)``."""
    if k > n:
        raise ValueError(f"cannot fit a {k}-frame in R^{n}")
    size = (size,) if np.isscalar(size) else tuple(size)
    g = rng.standard_normal(size + (n, k))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    signs[signs == 0] = 1.0
    q = q * signs[..., None, :]
    return np.swapaxes(q, -1, -2)


def random_frame(n: int, k: int, seed) -> TangentFrame:
    """One seeded random orthonormal k-frame in R^n."""
    if k > n:
        raise ValueError(f"cannot fit a {k}-frame in R^{n}")
    rng = np.random.default_rng(seed)
    return TangentFrame(random_frames(rng, (), n, k))
