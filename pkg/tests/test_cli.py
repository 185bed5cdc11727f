import json
import math

import numpy as np
import pytest

from ballbound.cli import main
from ballbound.mesh import load_mesh, save_mesh
from ballbound.minimize import catenoid_problem, perturbed_disk_problem
from ballbound.surfaces import CatenoidPiece, FlatDisk


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out), err


# ------------------------------------------------------------------ field


def test_field_eval_log_branch(capsys):
    code, out, _ = run_json(capsys, "field", "eval", "--k", "2", "--y", "0,0,0", "--x", "0.5,0,0")
    assert code == 0
    np.testing.assert_allclose(out["W"], [-0.75, 0, 0], atol=1e-15)
    assert out["div"] is None and out["Q"] == 1.0 and out["dist"] == 0.5


def test_field_eval_boundary_vanishes(capsys):
    code, out, _ = run_json(capsys, "field", "eval", "--k", "3", "--y", "0.3,0,0", "--x", "1,0,0")
    assert code == 0 and out["W"] == [0.0, 0.0, 0.0]


def test_field_eval_with_frame(capsys):
    code, out, _ = run_json(
        capsys, "field", "eval", "--k", "2", "--y", "0,0,0", "--x", "0.5,0,0", "--frame", "0,1,0;0,0,1"
    )
    assert code == 0
    assert out["div"] == pytest.approx(-3.0, abs=1e-14)
    assert out["deficit"] == pytest.approx(4.0, abs=1e-14)
    assert set(out) >= {"W", "div", "deficit", "Q", "dist"}


def test_field_eval_prints_17_digits(capsys):
    _, out, _ = run(capsys, "field", "eval", "--k", "2", "--y", "0,0,0", "--x", "0.1,0,0")
    assert "0.10000000000000001" in out


@pytest.mark.parametrize(
    "argv",
    [
        ["field", "eval", "--y", "0,0,0", "--x", "0.5,0,0"],
        ["field", "eval", "--k", "2", "--y", "0.1,0,0", "--x", "0.1,0,0"],
        ["field", "eval", "--k", "2", "--y", "0,0", "--x", "0.5,0,0"],
        ["field", "eval", "--k", "2", "--n", "4", "--y", "0,0,0", "--x", "0.5,0,0"],
        ["field", "eval", "--k", "2", "--y", "0,0,0", "--x", "0.5,0,0", "--frame", "1,0;0,1"],
        ["field", "eval", "--k", "2", "--y", "0,a,0", "--x", "0.5,0,0"],
    ],
    ids=["missing-k", "x-equals-y", "dimension-mismatch", "n-mismatch", "short-frame", "bad-float"],
)
def test_field_eval_usage_errors(capsys, argv):
    with pytest.raises(SystemExit) as info:
        code = main(argv)
        raise SystemExit(code)
    assert info.value.code == 2
    assert capsys.readouterr().err


def test_field_fuzz_deterministic(capsys, tmp_path):
    argv = ["field", "fuzz", "--samples", "3000", "--seed", "9"]
    c1, out1, _ = run(capsys, *argv)
    c2, out2, _ = run(capsys, *argv)
    assert c1 == c2 == 0 and out1 == out2
    data = json.loads(out1)
    assert data["passed"] and data["min_deficit"] >= -1e-10
    assert {"samples", "min_deficit", "argmin", "fd_max_rel_err"} <= set(data)
    assert main(argv + ["--out", str(tmp_path / "f.json")]) == 0
    assert (tmp_path / "f.json").read_text() == out1


def test_field_fuzz_conditioning_warning(capsys, caplog):
    code, out, _ = run_json(capsys, "field", "fuzz", "--samples", "500", "--seed", "1", "--ymax", "0.999")
    assert code in (0, 1)
    assert out["conditioning_warning"] is True
    assert "poorly conditioned" in caplog.text


@pytest.mark.parametrize(
    "extra",
    [["--samples", "0"], ["--ymax", "1.0"], ["--min-dist", "0"], ["--k-set", "5", "--n-set", "3"], ["--k-set", "x"]],
)
def test_field_fuzz_bad_flags(capsys, extra):
    with pytest.raises(SystemExit) as info:
        raise SystemExit(main(["field", "fuzz", "--seed", "0", *extra]))
    assert info.value.code == 2


# ---------------------------------------------------------------- surface


def test_surface_flat_disk_area(capsys):
    code, out, _ = run_json(capsys, "surface", "--family", "flatdisk", "--d", "0.6", "--k", "2")
    assert code == 0
    assert out["area"] == pytest.approx(2.0106193, abs=1e-7)


def test_surface_cone_area(capsys):
    code, out, _ = run_json(capsys, "surface", "--family", "cone")
    assert code == 0
    assert out["area"] == pytest.approx(2 * math.pi**2 / 3, rel=1e-15)
    assert out["area"] == pytest.approx(6.5797363, abs=1e-7)


def test_surface_catenoid_admissible_and_not(capsys):
    code, out, _ = run_json(capsys, "surface", "--family", "catenoid", "--c", "0.9")
    # c = 0.9 is below c_max = 1, so a rim height exists
    assert code == 0 and out["surface"]["z1"] > 0
    code, _, err = run(capsys, "surface", "--family", "catenoid", "--c", "1.2")
    assert code == 2 and "not admissible" in err


def test_surface_export_and_density(capsys, tmp_path):
    path = tmp_path / "disk.obj"
    code, out, _ = run_json(
        capsys, "surface", "--family", "flatdisk", "--d", "0.6", "--export", str(path), "--resolution", "6",
        "--density", "4",
    )
    assert code == 0
    assert out["quadrature_weight"] == pytest.approx(0.64 * math.pi, rel=1e-12)
    mesh = load_mesh(path)
    assert len(mesh.triangles) == out["mesh"]["triangles"]
    assert mesh.pinned is not None


@pytest.mark.parametrize(
    "argv",
    [
        ["surface", "--family", "flatdisk", "--d", "1.2"],
        ["surface", "--family", "flatdisk", "--c", "0.5"],
        ["surface", "--family", "catenoid"],
        ["surface", "--family", "catenoid", "--c", "0.5", "--k", "3"],
        ["surface", "--family", "cone", "--d", "0.1"],
        ["surface", "--family", "cone", "--export", "x.obj"],
        ["surface", "--family", "catenoid", "--c", "0.5", "--jitter", "0.1"],
    ],
)
def test_surface_usage_errors(capsys, argv):
    assert main(argv) == 2


# ------------------------------------------------------------------ solve


def test_solve_perturbed_disk(capsys, tmp_path):
    src, out = tmp_path / "start.obj", tmp_path / "flat.obj"
    save_mesh(perturbed_disk_problem([0, 0, 0.6], 8), src)
    code, rep, _ = run_json(capsys, "solve", "--input", str(src), "--out", str(out))
    assert code == 0 and rep["converged"]
    assert rep["area"] == pytest.approx(0.64 * math.pi, rel=5e-3)
    assert json.loads((tmp_path / "flat.report.json").read_text()) == rep
    assert load_mesh(out).pinned == load_mesh(src).pinned


def test_solve_catenoid(capsys, tmp_path):
    src, out = tmp_path / "tube.obj", tmp_path / "cat.obj"
    save_mesh(catenoid_problem(0.5, 6), src)
    code, rep, _ = run_json(
        capsys, "solve", "--input", str(src), "--out", str(out), "--iters", "3000", "--relaxation", "1.8"
    )
    assert code == 0
    assert rep["area"] == pytest.approx(CatenoidPiece(0.5).area(), rel=1e-2)


def test_solve_fixed_point(capsys, tmp_path):
    src, out = tmp_path / "eq.obj", tmp_path / "eq2.obj"
    save_mesh(FlatDisk.at_distance(0.0).to_mesh(6), src)
    code, _, _ = run_json(capsys, "solve", "--input", str(src), "--out", str(out), "--iters", "50")
    assert code == 0
    assert np.abs(load_mesh(out).vertices - load_mesh(src).vertices).max() <= 1e-10


def test_solve_unconverged_exits_one(capsys, tmp_path):
    src = tmp_path / "tube.obj"
    save_mesh(catenoid_problem(0.5, 4), src)
    code, rep, _ = run_json(capsys, "solve", "--input", str(src), "--out", str(tmp_path / "o.obj"), "--iters", "3")
    assert code == 1 and not rep["converged"]


def test_solve_degenerate_exits_one(capsys, tmp_path):
    src = tmp_path / "fine.obj"
    save_mesh(perturbed_disk_problem([0, 0, 0.6], 32), src)
    code, _, err = run(capsys, "solve", "--input", str(src), "--out", str(tmp_path / "o.obj"), "--min-angle", "5")
    assert code == 1 and "remeshing" in err


def test_solve_malformed_mesh(capsys, tmp_path):
    src = tmp_path / "bad.obj"
    src.write_text("v 0 0 0\nv 1 0 0\nf 1 2 3\n")
    code, _, err = run(capsys, "solve", "--input", str(src), "--out", str(tmp_path / "o.obj"))
    assert code == 2 and "bad.obj:3" in err


def test_solve_pin_mismatch(capsys, tmp_path):
    src = tmp_path / "start.obj"
    save_mesh(perturbed_disk_problem([0, 0, 0.6], 4), src)
    code = main(["solve", "--input", str(src), "--out", str(tmp_path / "o.obj"), "--y", "0,0,0.5"])
    assert code == 2


# ----------------------------------------------------------------- verify


def test_verify_equality_case(capsys):
    code, rep, _ = run_json(capsys, "verify", "--family", "flatdisk", "--d", "0.6")
    assert code == 0 and rep["passed"]
    assert abs(rep["margin"]) <= 1e-10
    assert rep["equality_residual"] <= 1e-12
    assert rep["schema_version"] == 1


def test_verify_catenoid(capsys):
    code, rep, _ = run_json(capsys, "verify", "--family", "catenoid", "--c", "0.5")
    assert code == 0 and rep["margin"] > 0


def test_verify_disk_missing_y(capsys):
    code, _, err = run(capsys, "verify", "--family", "flatdisk", "--d", "0.6", "--y", "0,0,0.5")
    assert code == 2 and "does not pass through" in err


def test_verify_cone_flux_limit_fails(capsys, tmp_path):
    out = tmp_path / "cone.json"
    code, _, _ = run(capsys, "verify", "--family", "cone", "--out", str(out))
    rep = json.loads(out.read_text())
    assert code == 1 and not rep["verdicts"]["flux_limit"]
    assert rep["verdicts"]["bound"]


def test_verify_csv_writes_json_too(capsys, tmp_path):
    out = tmp_path / "ladder.csv"
    code, text, _ = run(capsys, "verify", "--family", "flatdisk", "--d", "0.6", "--format", "csv", "--out", str(out))
    assert code == 0 and text == ""
    rows = out.read_text().splitlines()
    assert rows[0] == "r,flux" and len(rows) == 4
    assert json.loads((tmp_path / "ladder.json").read_text())["passed"]


def test_verify_tolerance_override(capsys):
    code, rep, _ = run_json(
        capsys, "verify", "--family", "cone", "--tol", "flux_limit_rel=0.6"
    )
    assert code == 0 and rep["tolerances"]["flux_limit_rel"] == 0.6
    assert main(["verify", "--family", "cone", "--tol", "nope=1"]) == 2
    with pytest.raises(SystemExit) as info:
        main(["verify", "--family", "cone", "--tol", "nonsense"])
    assert info.value.code == 2


def test_verify_mesh_input(capsys, tmp_path):
    src, out = tmp_path / "start.obj", tmp_path / "flat.obj"
    save_mesh(perturbed_disk_problem([0, 0, 0.6], 12), src)
    assert main(["solve", "--input", str(src), "--out", str(out)]) == 0
    capsys.readouterr()
    code, rep, _ = run_json(capsys, "verify", "--input", str(out))
    assert code == 0
    assert rep["surface"]["family"] == "mesh" and "valid_r_min" in rep["notes"]


def test_verify_is_byte_identical(capsys):
    _, a, _ = run(capsys, "verify", "--family", "catenoid", "--c", "0.5")
    _, b, _ = run(capsys, "verify", "--family", "catenoid", "--c", "0.5")
    assert a == b


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "--family", "flatdisk", "--r-ladder", "0.1"],
        ["verify", "--family", "flatdisk", "--r-ladder", "0.1,-0.05"],
        ["verify", "--family", "flatdisk", "--identity-r", "0"],
        ["verify", "--family", "flatdisk", "--y", "0,0,0.6", "--n", "4"],
    ],
)
def test_verify_usage_errors(argv):
    assert main(argv) == 2
