"""Seeded random search for violations of the pointwise trace inequality.

Samples are split over the admissible (k, n) pairs. Every pair draws from
its own child of ``SeedSequence(seed)``, so the result does not depend on
how many workers run the groups or in which order they finish.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .field import deficit_kernel, random_frames, w_kernel

WORKERS_ENV = "BALLBOUND_MAX_WORKERS"
DEFAULT_K_SET = (2, 3, 4)
DEFAULT_N_SET = (3, 4, 5, 7)
CONDITIONING_YMAX = 0.95
# step relative to min(1, |x - y|); the h and h/2 quotients are combined
# to cancel the h^2 term
FD_REL_STEP = 1e-3
BOUNDARY_FRACTION = 0.1
NEAR_EQUALITY_FRACTION = 0.1


@dataclass
class GroupResult:
    k: int
    n: int
    samples: int
    min_deficit: float
    argmin: dict
    fd_checked: int
    fd_max_rel_err: float
    near_equality_min_deficit: float = np.inf


@dataclass
class FuzzResult:
    samples: int
    seed: int
    k_set: tuple
    n_set: tuple
    ymax: float
    min_dist: float
    groups: list = field(default_factory=list)

    @property
    def min_deficit(self) -> float:
        return min(g.min_deficit for g in self.groups)

    @property
    def fd_max_rel_err(self) -> float:
        return max(g.fd_max_rel_err for g in self.groups)

    @property
    def fd_checked(self) -> int:
        return sum(g.fd_checked for g in self.groups)

    @property
    def near_equality_min_deficit(self) -> float:
        return min(g.near_equality_min_deficit for g in self.groups)

    def passed(self, deficit_slack: float = 1e-10, fd_tol: float = 1e-6) -> bool:
        return (
            self.min_deficit >= -deficit_slack
            and self.near_equality_min_deficit >= -deficit_slack
            and self.fd_max_rel_err <= fd_tol
        )

    def to_dict(self) -> dict:
        # first group attaining the minimum, so ties resolve by group order
        worst = min(self.groups, key=lambda g: g.min_deficit)
        out = {
            "samples": self.samples,
            "seed": self.seed,
            "k_set": list(self.k_set),
            "n_set": list(self.n_set),
            "ymax": self.ymax,
            "min_dist": self.min_dist,
            "min_deficit": self.min_deficit,
            "argmin": worst.argmin,
            "fd_checked": self.fd_checked,
            "fd_max_rel_err": self.fd_max_rel_err,
            "near_equality_min_deficit": _finite(self.near_equality_min_deficit),
            "conditioning_warning": self.ymax > CONDITIONING_YMAX,
            "groups": [
                {
                    "k": g.k,
                    "n": g.n,
                    "samples": g.samples,
                    "min_deficit": g.min_deficit,
                    "fd_checked": g.fd_checked,
                    "fd_max_rel_err": g.fd_max_rel_err,
                    "near_equality_min_deficit": _finite(g.near_equality_min_deficit),
                }
                for g in self.groups
            ],
        }
        return out


def _finite(v: float):
    return v if np.isfinite(v) else None


def max_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        val = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    if val < 1:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return val


def _uniform_ball(rng: np.random.Generator, m: int, n: int, radius) -> np.ndarray:
    g = rng.standard_normal((m, n))
    g /= np.linalg.norm(g, axis=1)[:, None]
    return g * (radius * rng.random(m) ** (1.0 / n))[:, None]


def _draw_pairs(rng, m: int, n: int, ymax: float, min_dist: float):
    """Points y with ``|y| <= ymax`` and x in the closed ball, ``|x - y| >= min_dist``.

    A fixed fraction of the x samples sits exactly on the unit sphere.
    """
    ys = np.empty((0, n))
    xs = np.empty((0, n))
    while len(ys) < m:
        want = m - len(ys)
        y = _uniform_ball(rng, want, n, ymax)
        x = _uniform_ball(rng, want, n, 1.0)
        on_sphere = rng.random(want) < BOUNDARY_FRACTION
        x[on_sphere] /= np.linalg.norm(x[on_sphere], axis=1)[:, None]
        keep = np.linalg.norm(x - y, axis=1) >= min_dist
        ys = np.vstack([ys, y[keep]])
        xs = np.vstack([xs, x[keep]])
    return ys, xs


def _near_equality(rng, m: int, n: int, k: int, ymax: float, min_dist: float):
    """Near-equality configurations: ``(y, x, frame)`` with a tiny deficit.

    The frame is a small tilt of a k-plane orthogonal to y, and x is a point
    of that plane through y pushed slightly off it. Both deficit terms are
    then tiny and the closed form works in its cancellation regime.
    """
    y = _uniform_ball(rng, m, n, ymax)
    ynorm = np.linalg.norm(y, axis=1)
    unit = np.where(ynorm[:, None] > 0, y / np.maximum(ynorm, 1e-300)[:, None], np.eye(n)[0])
    # random k-frame in the orthogonal complement of y
    g = rng.standard_normal((m, n, k))
    g -= unit[:, :, None] * np.einsum("in,ink->ik", unit, g)[:, None, :]
    q, _ = np.linalg.qr(g)
    plane = np.swapaxes(q, -1, -2)
    radius = np.sqrt(1.0 - ynorm**2)
    coeff = rng.standard_normal((m, k))
    coeff /= np.linalg.norm(coeff, axis=1)[:, None]
    t = np.maximum(radius * rng.random(m), min_dist)
    eps = 10.0 ** rng.uniform(-8, -2, m)
    x = y + t[:, None] * np.einsum("ik,ikn->in", coeff, plane) + (eps * t)[:, None] * rng.standard_normal((m, n))
    xnorm = np.linalg.norm(x, axis=1)
    x[xnorm > 1.0] /= xnorm[xnorm > 1.0, None]
    q, r = np.linalg.qr(np.swapaxes(plane + eps[:, None, None] * rng.standard_normal(plane.shape), -1, -2))
    sign = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    frames = np.swapaxes(q * sign[:, None, :], -1, -2)
    keep = np.linalg.norm(x - y, axis=1) >= min_dist
    return y[keep], x[keep], frames[keep]


def _fd_trace(ys, k, xs, frames, h):
    total = np.zeros(len(xs))
    h = np.broadcast_to(np.asarray(h, dtype=float), (len(xs),))
    for i in range(k):
        step = h[:, None] * frames[:, i, :]
        diff = w_kernel(ys, k, xs + step) - w_kernel(ys, k, xs - step)
        total += np.einsum("ij,ij->i", diff, frames[:, i, :]) / (2.0 * h)
    return total


def fd_trace_extrapolated(ys, k, xs, frames, h):
    """``(4 D(h/2) - D(h)) / 3`` for central-difference traces D."""
    return (4.0 * _fd_trace(ys, k, xs, frames, 0.5 * h) - _fd_trace(ys, k, xs, frames, h)) / 3.0


def _group(k: int, n: int, m: int, seq: np.random.SeedSequence, ymax: float, min_dist: float) -> GroupResult:
    rng = np.random.default_rng(seq)
    ys, xs = _draw_pairs(rng, m, n, ymax, min_dist)
    frames = random_frames(rng, m, n, k)
    d = np.linalg.norm(xs - ys, axis=1)
    defs = deficit_kernel(ys, k, xs, frames)
    # central differences need the whole stencil inside the ball
    h = FD_REL_STEP * np.minimum(1.0, d)
    ok = np.linalg.norm(xs, axis=1) + h < 1.0
    exact = 1.0 - defs[ok]
    approx = fd_trace_extrapolated(ys[ok], k, xs[ok], frames[ok], h[ok])
    rel = np.abs(exact - approx) / np.maximum(1.0, np.abs(exact))
    j = int(np.argmin(defs))
    arg = {
        "k": k,
        "n": n,
        "y": ys[j].tolist(),
        "x": xs[j].tolist(),
        "frame": frames[j].tolist(),
        "dist": float(d[j]),
        "deficit": float(defs[j]),
    }
    # no k-plane is orthogonal to a nonzero y when k = n
    stress = np.inf
    if k < n:
        ny, nx, nf = _near_equality(rng, max(1, int(NEAR_EQUALITY_FRACTION * m)), n, k, ymax, min_dist)
        if len(ny):
            stress = float(deficit_kernel(ny, k, nx, nf).min())
    return GroupResult(k, n, m, float(defs[j]), arg, int(ok.sum()), float(rel.max(initial=0.0)), stress)


def fuzz(
    samples: int,
    seed: int,
    k_set=DEFAULT_K_SET,
    n_set=DEFAULT_N_SET,
    ymax: float = CONDITIONING_YMAX,
    min_dist: float = 1e-3,
    workers: int | None = None,
) -> FuzzResult:
    """Sample ``(x, y, frame)`` triples and record the worst deficit and FD error."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not 0 <= ymax < 1:
        raise ValueError("ymax must lie in [0, 1)")
    if not min_dist > 0:
        raise ValueError("min_dist must be positive")
    pairs = [(k, n) for n in sorted(set(n_set)) for k in sorted(set(k_set)) if 2 <= k <= n]
    if not pairs:
        raise ValueError("no admissible (k, n) pair with 2 <= k <= n")
    counts = [samples // len(pairs) + (1 if i < samples % len(pairs) else 0) for i in range(len(pairs))]
    seqs = np.random.SeedSequence(seed).spawn(len(pairs))
    jobs = [(k, n, m, s) for (k, n), m, s in zip(pairs, counts, seqs) if m > 0]
    workers = max_workers() if workers is None else workers
    run = lambda job: _group(*job, ymax, min_dist)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            groups = list(pool.map(run, jobs))
    else:
        groups = [run(job) for job in jobs]
    return FuzzResult(samples, seed, tuple(sorted(set(k_set))), tuple(sorted(set(n_set))), ymax, min_dist, groups)
