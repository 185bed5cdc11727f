import numpy as np
import pytest

from ballbound.field import CalibrationField, divergence_trace, random_frames
from ballbound.fuzz import WORKERS_ENV, fd_trace_extrapolated, fuzz, max_workers
from ballbound.verify import dumps


def test_small_run_passes():
    res = fuzz(4000, seed=1)
    assert res.passed()
    assert res.min_deficit >= -1e-10
    assert res.fd_max_rel_err <= 1e-6
    assert res.fd_checked > 0
    assert len(res.groups) == 11  # (k, n) pairs with k <= n


def test_groups_cover_admissible_pairs():
    res = fuzz(100, seed=0, k_set=(2, 3), n_set=(3,))
    assert [(g.k, g.n) for g in res.groups] == [(2, 3), (3, 3)]
    assert sum(g.samples for g in res.groups) == 100


def test_seeded_runs_are_byte_identical():
    a = dumps(fuzz(2000, seed=42).to_dict())
    b = dumps(fuzz(2000, seed=42).to_dict())
    assert a == b
    assert a != dumps(fuzz(2000, seed=43).to_dict())


def test_worker_count_does_not_change_result():
    assert dumps(fuzz(2000, 7, workers=1).to_dict()) == dumps(fuzz(2000, 7, workers=4).to_dict())


def test_argmin_reproduces_min_deficit():
    res = fuzz(3000, seed=5)
    am = res.to_dict()["argmin"]
    from ballbound.field import deficit

    f = CalibrationField(am["y"], am["k"])
    val = deficit(f, np.array(am["x"]), np.array(am["frame"]))
    assert val == pytest.approx(res.min_deficit, abs=1e-15)


def test_conditioning_flag():
    assert not fuzz(50, 0, ymax=0.95).to_dict()["conditioning_warning"]
    assert fuzz(50, 0, ymax=0.99).to_dict()["conditioning_warning"]


def test_fd_oracle_matches_closed_form():
    rng = np.random.default_rng(0)
    ys = rng.uniform(-0.3, 0.3, (20, 4))
    xs = rng.uniform(-0.4, 0.4, (20, 4))
    frames = random_frames(rng, 20, 4, 3)
    fd = fd_trace_extrapolated(ys, 3, xs, frames, 1e-3)
    exact = [divergence_trace(CalibrationField(y, 3), x, e) for y, x, e in zip(ys, xs, frames)]
    np.testing.assert_allclose(fd, exact, rtol=1e-8, atol=1e-10)


@pytest.mark.parametrize(
    "kwargs,msg",
    [
        ({"samples": 0, "seed": 0}, "samples"),
        ({"samples": 10, "seed": 0, "ymax": 1.0}, "ymax"),
        ({"samples": 10, "seed": 0, "min_dist": 0.0}, "min_dist"),
        ({"samples": 10, "seed": 0, "k_set": (5,), "n_set": (3, 4)}, "admissible"),
    ],
)
def test_argument_validation(kwargs, msg):
    with pytest.raises(ValueError, match=msg):
        fuzz(**kwargs)


def test_worker_env(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    assert max_workers() == 1
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert max_workers() == 3
    for bad in ("0", "two"):
        monkeypatch.setenv(WORKERS_ENV, bad)
        with pytest.raises(ValueError, match=WORKERS_ENV):
            max_workers()
