import math

import numpy as np
import pytest

from ballbound.field import CalibrationField, divergence_trace
from ballbound.mesh import (
    MeshFormatError,
    TriMesh,
    disk_mesh,
    frame_of_triangle,
    load_mesh,
    mesh_area,
    save_mesh,
    triangle_areas,
    triangle_frames,
    validate_mesh,
)
from ballbound.surfaces import CatenoidPiece, FlatDisk

XY = np.array([[1.0, 0, 0], [0, 1.0, 0]])


def test_right_triangle_area():
    m = TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    assert mesh_area(m) == 0.5


def test_gram_determinant_area_in_r5():
    v = np.zeros((3, 5))
    v[1, 3] = 2.0
    v[2, 4] = 3.0
    assert triangle_areas(v, np.array([[0, 1, 2]]))[0] == pytest.approx(3.0, rel=1e-15)


def test_planar_disk_10k_triangles():
    m = disk_mesh(41, np.zeros(3), XY, 1.0)
    assert len(m.triangles) >= 10_000
    assert mesh_area(m) == pytest.approx(math.pi, rel=1e-3)
    validate_mesh(m)


def test_disk_refinement_ladder_converges():
    errs = [abs(mesh_area(disk_mesh(r, np.zeros(3), XY, 1.0)) - math.pi) for r in (8, 16, 32)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_exported_catenoid_mesh_area():
    cat = CatenoidPiece(0.5)
    assert mesh_area(cat.to_mesh(24)) == pytest.approx(cat.area(), rel=5e-3)


def test_frame_of_planar_triangle():
    m = FlatDisk.at_distance(0.6).to_mesh(4)
    for t in range(len(m.triangles)):
        fr = frame_of_triangle(m, t)
        assert np.abs(fr.vectors[:, 2]).max() <= 1e-15


def test_frame_perpendicular_to_normal_and_edge_independent():
    rng = np.random.default_rng(0)
    v = rng.uniform(-0.5, 0.5, (3, 3))
    m = TriMesh(v, [[0, 1, 2]])
    normal = np.cross(v[1] - v[0], v[2] - v[0])
    normal /= np.linalg.norm(normal)
    f = CalibrationField([0.1, 0.2, 0.0], 2)
    x = v.mean(axis=0)
    traces = []
    for first in range(3):
        fr = frame_of_triangle(m, 0, first)
        assert np.abs(fr.vectors @ normal).max() <= 1e-12
        traces.append(divergence_trace(f, x, fr))
    assert max(traces) - min(traces) <= 1e-12


def test_degenerate_triangle_has_no_frame():
    m = TriMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])
    with pytest.raises(ValueError, match="degenerate"):
        triangle_frames(m)


def test_round_trip_preserves_everything(tmp_path):
    mesh = CatenoidPiece(0.5).to_mesh(3)
    mesh.vertices[5] += np.array([1e-13, -3e-17, 0.1234567890123456789])
    save_mesh(mesh, tmp_path / "m.obj")
    back = load_mesh(tmp_path / "m.obj")
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.triangles, mesh.triangles)
    assert np.array_equal(back.boundary, mesh.boundary)
    assert back.pinned == mesh.pinned
    assert np.array_equal(back.pinned_point, mesh.pinned_point)


def test_round_trip_higher_ambient_dimension(tmp_path):
    v = np.array([[0, 0, 0, 0], [0.5, 0, 0, 0.1], [0, 0.5, 0.2, 0]])
    m = TriMesh(v, [[0, 1, 2]])
    save_mesh(m, tmp_path / "r4.obj")
    assert (tmp_path / "r4.obj").read_text().splitlines()[1] == "# ambient 4"
    back = load_mesh(tmp_path / "r4.obj")
    assert np.array_equal(back.vertices, v)


def _write(tmp_path, text, name="bad.obj"):
    p = tmp_path / name
    p.write_text(text)
    return p


TRI = "v 0 0 0\nv 1 0 0\nv 0 1 0\n"


@pytest.mark.parametrize(
    "body,line,msg",
    [
        (TRI + "f 0 1 2\n", 4, "1-based"),
        (TRI + "f 1 2 4\n", 4, "out of range"),
        (TRI + "f -1 -2 -3\n", 4, "relative"),
        ("v 0 0 0\nv 1 zero 0\n", 2, "bad coordinate"),
        ("v 0 0\n", 1, "3 coordinates"),
        (TRI + "f 1 2 3 1\n", 4, "triangles"),
        (TRI + "vx 1\n", 4, "unknown record"),
    ],
)
def test_malformed_files_name_the_line(tmp_path, body, line, msg):
    with pytest.raises(MeshFormatError, match=msg) as info:
        load_mesh(_write(tmp_path, body))
    assert info.value.lineno == line
    assert f":{line}:" in str(info.value)


def test_non_manifold_edge_is_rejected(tmp_path):
    body = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 -1 0\nv 0 0 1\nf 1 2 3\nf 2 1 4\nf 1 2 5\n"
    with pytest.raises(MeshFormatError, match="more than two faces") as info:
        load_mesh(_write(tmp_path, body))
    assert info.value.lineno == 8


def test_inconsistent_orientation_is_rejected(tmp_path):
    body = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3\nf 2 3 4\n"
    with pytest.raises(MeshFormatError, match="orientation"):
        load_mesh(_write(tmp_path, body))


def test_vertex_outside_ball_flagged_on_request(tmp_path):
    p = _write(tmp_path, "v 1.5 0 0\nv 0 0.5 0\nv 0 0 0.5\nf 1 2 3\n")
    load_mesh(p)
    with pytest.raises(MeshFormatError, match="outside the unit ball") as info:
        load_mesh(p, validate_ball=True)
    assert info.value.lineno == 1


def test_sidecar_out_of_range(tmp_path):
    p = _write(tmp_path, TRI + "f 1 2 3\n", "s.obj")
    (tmp_path / "s.json").write_text('{"index_base": 0, "boundary": [0, 1, 7]}')
    with pytest.raises(MeshFormatError, match="boundary index"):
        load_mesh(p)
