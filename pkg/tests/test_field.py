import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ballbound.field import (
    CalibrationField,
    TangentFrame,
    asymptotic_leading,
    deficit,
    diagnostics,
    divergence_trace,
    divergence_trace_fd,
    eval_W,
    gram_deviation,
    is_equality_point,
    random_frame,
    random_frames,
)


def test_w_log_branch_value():
    f = CalibrationField([0.0, 0.0, 0.0], 2)
    np.testing.assert_allclose(eval_W(f, [0.5, 0, 0]), [-0.75, 0, 0], rtol=0, atol=1e-15)


def test_w_power_branch_value():
    f = CalibrationField([0.0, 0.0, 0.0], 3)
    np.testing.assert_allclose(eval_W(f, [0, 0.5, 0]), [0, -7 / 6, 0], rtol=1e-15, atol=0)


def test_w_vanishes_at_boundary_point():
    f = CalibrationField([0.3, 0.0, 0.0], 3)
    assert np.abs(eval_W(f, [1.0, 0, 0])).max() == 0.0


@pytest.mark.parametrize("k,n", [(2, 3), (3, 3), (3, 5), (4, 7), (5, 6)])
def test_w_matches_high_precision_oracle(k, n):
    rng = np.random.default_rng(k * 10 + n)
    y = rng.uniform(-0.4, 0.4, n)
    f = CalibrationField(y, k)
    for _ in range(5):
        x = rng.uniform(-0.5, 0.5, n)
        ref = np.array([float(v) for v in oracles.W(y, k, x)])
        np.testing.assert_allclose(eval_W(f, x), ref, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("k,n", [(2, 3), (3, 4), (4, 5)])
def test_trace_matches_high_precision_derivative(k, n):
    rng = np.random.default_rng(3 * k + n)
    y = rng.uniform(-0.3, 0.3, n)
    f = CalibrationField(y, k)
    for _ in range(3):
        x = rng.uniform(-0.5, 0.5, n)
        frame = random_frames(rng, (), n, k)
        ref = float(oracles.trace(y, k, x, frame.tolist()))
        assert divergence_trace(f, x, frame) == pytest.approx(ref, rel=1e-11, abs=1e-11)


def test_trace_equality_configuration_is_one():
    f = CalibrationField([0, 0, 0.6], 2)
    frame = TangentFrame([[1, 0, 0], [0, 1, 0]])
    assert divergence_trace(f, [0.3, 0, 0.6], frame) == pytest.approx(1.0, abs=1e-15)
    assert deficit(f, [0.3, 0, 0.6], frame) == 0.0


def test_trace_and_deficit_radial_example():
    f = CalibrationField([0, 0, 0], 2)
    frame = TangentFrame([[0, 1, 0], [0, 0, 1]])
    assert divergence_trace(f, [0.5, 0, 0], frame) == pytest.approx(-3.0, abs=1e-14)
    assert deficit(f, [0.5, 0, 0], frame) == pytest.approx(4.0, abs=1e-14)


def test_fd_trace_radial_example():
    f = CalibrationField([0, 0, 0], 2)
    frame = TangentFrame([[0, 1, 0], [0, 0, 1]])
    assert divergence_trace_fd(f, [0.5, 0, 0], frame, 1e-4) == pytest.approx(-3.0, abs=1e-6)


def test_fd_trace_random_k3():
    f = CalibrationField([0.2, 0.1, 0.0], 3)
    rng = np.random.default_rng(11)
    for _ in range(20):
        x = rng.uniform(-0.5, 0.5, 3)
        if np.linalg.norm(x - f.y) < 0.05:
            continue
        frame = random_frames(rng, (), 3, 3)
        exact = divergence_trace(f, x, frame)
        assert divergence_trace_fd(f, x, frame, 1e-5) == pytest.approx(exact, rel=1e-6, abs=1e-6)


def test_fd_trace_in_plane_through_origin():
    f = CalibrationField([0, 0, 0], 2)
    frame = TangentFrame([[1, 0, 0], [0, 1, 0]])
    assert divergence_trace_fd(f, [0.3, 0.2, 0], frame, 1e-4) == pytest.approx(1.0, abs=1e-6)


def test_fd_rejects_bad_step_and_stencil():
    f = CalibrationField([0, 0, 0], 2)
    frame = TangentFrame([[1, 0, 0], [0, 1, 0]])
    with pytest.raises(ValueError):
        divergence_trace_fd(f, [0.3, 0, 0], frame, 0.0)
    with pytest.raises(ValueError, match="stencil"):
        divergence_trace_fd(f, [1.0, 0, 0], frame, 1e-3)


def test_asymptotic_leading_examples():
    f = CalibrationField([0, 0, 0], 2)
    np.testing.assert_allclose(asymptotic_leading(f, [0.1, 0, 0]), [-5.0, 0, 0], rtol=1e-15)
    g = CalibrationField([0, 0, 0.6], 2)
    np.testing.assert_allclose(asymptotic_leading(g, [1e-3, 0, 0.6]), [-320.0, 0, 0], rtol=1e-9)
    with pytest.raises(ValueError):
        asymptotic_leading(g, [0, 0, 0.6])


@pytest.mark.parametrize("k", [2, 3])
def test_asymptotic_remainder_vanishes(k):
    y = np.array([0.0, 0.6, 0.0])
    f = CalibrationField(y, k)
    d = np.array([1.0, 1.0, 1.0]) / math.sqrt(3)
    rem = [
        t ** (k - 1) * np.linalg.norm(eval_W(f, y + t * d) - asymptotic_leading(f, y + t * d))
        for t in (1e-2, 1e-3, 1e-4)
    ]
    scale = (1 - 0.36) ** (k / 2) / k  # t^(k-1) |leading term|
    assert rem[0] > rem[1] > rem[2]
    assert rem[2] < 1e-2 * scale


def test_y_zero_field_is_radial():
    rng = np.random.default_rng(5)
    for k in (2, 3, 4):
        f = CalibrationField(np.zeros(4), k)
        x = rng.uniform(-0.5, 0.5, (50, 4))
        w = eval_W(f, x)
        cross = w - (np.einsum("ij,ij->i", w, x) / np.einsum("ij,ij->i", x, x))[:, None] * x
        assert np.abs(cross).max() <= 1e-14 * np.abs(w).max()


def test_boundary_vanishing_batch():
    rng = np.random.default_rng(9)
    for k in (2, 3, 4, 5):
        f = CalibrationField(rng.uniform(-0.4, 0.4, 6), k)
        x = rng.standard_normal((2000, 6))
        x /= np.linalg.norm(x, axis=1)[:, None]
        assert np.abs(eval_W(f, x)).max() <= 1e-12


def test_frame_rotation_invariance():
    rng = np.random.default_rng(2)
    f = CalibrationField([0.1, -0.3, 0.2, 0.05], 3)
    x = np.array([0.4, 0.1, -0.2, 0.3])
    e = random_frames(rng, (), 4, 3)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    assert divergence_trace(f, x, q @ e) == pytest.approx(divergence_trace(f, x, e), abs=1e-12)


def test_equality_detector_both_directions():
    f = CalibrationField([0, 0, 0.6], 2)
    flat = TangentFrame([[1, 0, 0], [0, 1, 0]])
    assert is_equality_point(diagnostics(f, [0.2, 0.1, 0.6], flat))
    tilted = TangentFrame.from_vectors([[1, 0, 0.1], [0, 1, 0]])
    diag = diagnostics(f, [0.2, 0.1, 0.6], tilted)
    assert not is_equality_point(diag)
    assert deficit(f, [0.2, 0.1, 0.6], tilted) > 0


def test_diagnostics_invariants():
    rng = np.random.default_rng(4)
    f = CalibrationField([0.3, 0.2, -0.1], 2)
    x = rng.uniform(-0.57, 0.57, (500, 3))
    frames = random_frames(rng, 500, 3, 2)
    d = diagnostics(f, x, frames)
    assert np.all(d.Q >= d.dist**2 * (1 - 1e-14))
    assert np.all(d.normal_xy_sq >= -1e-12)
    assert np.all(d.tangential_y_sq >= 0)


@pytest.mark.parametrize(
    "y,k,err",
    [
        ([1.0, 0, 0], 2, "open unit ball"),
        ([0.1, 0, 0], 4, "2 <= k <= n"),
        ([0.1, 0, 0], 1, "2 <= k <= n"),
        ([0.1, 0, 0], 2.5, "integer"),
    ],
)
def test_field_validation(y, k, err):
    with pytest.raises(ValueError, match=err):
        CalibrationField(y, k)


def test_domain_errors():
    f = CalibrationField([0.1, 0, 0], 2)
    with pytest.raises(ValueError, match="singular"):
        eval_W(f, [0.1, 0, 0])
    with pytest.raises(ValueError, match="outside"):
        eval_W(f, [1.0 + 1e-9, 0, 0])
    eval_W(f, [1.0 + 1e-13, 0, 0])
    with pytest.raises(ValueError, match="orthonormal"):
        deficit(f, [0.5, 0, 0], np.array([[1, 0, 0], [0.1, 1, 0]]))
    with pytest.raises(ValueError, match="orthonormal"):
        TangentFrame([[1, 0, 0], [1e-10, 1, 0]])


def test_random_frame_properties():
    fr = random_frame(3, 3, 0)
    assert abs(abs(np.linalg.det(fr.vectors)) - 1) <= 1e-12
    g = random_frame(5, 2, 7)
    assert gram_deviation(g.vectors) <= 1e-12
    assert np.array_equal(random_frame(5, 2, 7).vectors, g.vectors)
    with pytest.raises(ValueError):
        random_frame(2, 3, 0)


unit = st.floats(-1, 1, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(
    k=st.integers(2, 4),
    extra=st.integers(0, 3),
    seed=st.integers(0, 2**32 - 1),
    ynorm=st.floats(0, 0.95),
    xnorm=st.floats(0, 1),
)
def test_deficit_nonnegative_property(k, extra, seed, ynorm, xnorm):
    n = k + extra
    rng = np.random.default_rng(seed)
    y = rng.standard_normal(n)
    y *= ynorm / np.linalg.norm(y)
    x = rng.standard_normal(n)
    x *= xnorm / np.linalg.norm(x)
    if np.linalg.norm(x - y) < 1e-6:
        return
    f = CalibrationField(y, k)
    frame = random_frames(rng, (), n, k)
    assert deficit(f, x, frame) >= -1e-10
