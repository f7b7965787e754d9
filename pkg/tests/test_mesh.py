"""Mesh container, file ingestion, surface sampling, nearest-face queries."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from partgrasp import (
    DegenerateMesh,
    IndexOutOfRange,
    ParseError,
    TriMesh,
    load_mesh,
    nearest_face,
    sample_surface,
)
from conftest import soup_mesh, write_obj
from oracles import point_triangle_distance

RIGHT_TRIANGLE = TriMesh(
    [[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 3.0, 0.0]],
    [[0, 1, 2]],
)


class TestTriMesh:
    def test_face_area_matches_hand_value(self):
        assert RIGHT_TRIANGLE.face_area[0] == pytest.approx(3.0, abs=1e-15)
        assert RIGHT_TRIANGLE.total_area == pytest.approx(3.0, abs=1e-15)

    def test_face_normal_is_unit_and_right_handed(self):
        n = RIGHT_TRIANGLE.face_normal[0]
        assert np.allclose(n, [0.0, 0.0, 1.0], atol=1e-15)

    def test_dangling_vertex_index_rejected(self):
        with pytest.raises(IndexOutOfRange):
            TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 3]])
        with pytest.raises(IndexOutOfRange):
            TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[-1, 1, 2]])

    def test_repeated_vertex_in_face_rejected(self):
        with pytest.raises(DegenerateMesh):
            TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 0, 2]])

    def test_zero_total_area_rejected(self):
        with pytest.raises(DegenerateMesh):
            TriMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])

    def test_arrays_read_only(self):
        with pytest.raises(ValueError):
            RIGHT_TRIANGLE.vertices[0, 0] = 5.0

    def test_bounding_radius_encloses_every_vertex(self):
        mesh = soup_mesh(np.random.default_rng(0))
        r = mesh.bounding_radius()
        d = np.linalg.norm(mesh.vertices - mesh.bbox_center(), axis=1)
        assert np.all(d <= r + 1e-12)


class TestLoadMesh:
    def test_obj_round_trip_is_exact(self, tmp_path):
        mesh = soup_mesh(np.random.default_rng(1))
        path = write_obj(tmp_path / "m.obj", mesh)
        back = load_mesh(path)
        assert np.array_equal(back.vertices, mesh.vertices)
        assert np.array_equal(back.faces, mesh.faces)

    def test_obj_negative_indices(self, tmp_path):
        p = tmp_path / "neg.obj"
        p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n")
        mesh = load_mesh(p)
        assert np.array_equal(mesh.faces, [[0, 1, 2]])

    def test_obj_quad_fan_triangulation(self, tmp_path):
        p = tmp_path / "quad.obj"
        p.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        mesh = load_mesh(p)
        assert np.array_equal(mesh.faces, [[0, 1, 2], [0, 2, 3]])

    def test_obj_slash_attributes_ignored(self, tmp_path):
        p = tmp_path / "tex.obj"
        p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3\n")
        assert load_mesh(p).face_count == 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_mesh(tmp_path / "absent.obj")

    def test_garbage_rejected(self, tmp_path):
        p = tmp_path / "bad.obj"
        p.write_text("v 1 2\nf 1 2 3\n")
        with pytest.raises(ParseError):
            load_mesh(p)

    def test_ply_ascii_round_trip(self, tmp_path):
        mesh = soup_mesh(np.random.default_rng(2), max_faces=10)
        p = tmp_path / "m.ply"
        lines = [
            "ply", "format ascii 1.0",
            f"element vertex {len(mesh.vertices)}",
            "property float64 x", "property float64 y", "property float64 z",
            f"element face {mesh.face_count}",
            "property list uchar int vertex_indices",
            "end_header",
        ]
        for v in mesh.vertices:
            lines.append(f"{float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
        for f in mesh.faces:
            lines.append(f"3 {f[0]} {f[1]} {f[2]}")
        p.write_text("\n".join(lines) + "\n")
        back = load_mesh(p)
        assert np.array_equal(back.vertices, mesh.vertices)
        assert np.array_equal(back.faces, mesh.faces)

    def test_ply_binary_little_endian(self, tmp_path):
        import struct

        p = tmp_path / "b.ply"
        header = (
            "ply\nformat binary_little_endian 1.0\n"
            "element vertex 3\n"
            "property float x\nproperty float y\nproperty float z\n"
            "element face 1\n"
            "property list uchar int vertex_indices\n"
            "end_header\n"
        )
        verts = [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)]
        with open(p, "wb") as fh:
            fh.write(header.encode())
            for v in verts:
                fh.write(struct.pack("<3f", *v))
            fh.write(struct.pack("<B3i", 3, 0, 1, 2))
        mesh = load_mesh(p)
        assert mesh.face_count == 1
        assert np.allclose(mesh.vertices, verts)


class TestSampleSurface:
    def test_samples_lie_on_their_faces(self):
        mesh = soup_mesh(np.random.default_rng(3))
        samples = sample_surface(mesh, 200, seed=7)
        assert len(samples) == 200
        for s in samples[:50]:
            tri = mesh.triangles()[s.face_index]
            d = point_triangle_distance(tuple(s.point), *map(tuple, tri))
            assert d < 1e-9

    def test_deterministic(self):
        mesh = soup_mesh(np.random.default_rng(4))
        a = sample_surface(mesh, 64, seed=11)
        b = sample_surface(mesh, 64, seed=11)
        assert all(np.array_equal(x.point, y.point) and x.face_index == y.face_index
                   for x, y in zip(a, b))

    def test_area_proportional_allocation(self):
        # two faces, one 99x the area of the other
        mesh = TriMesh(
            [[0, 0, 0], [1, 0, 0], [0, 1, 0], [10, 10, 0], [20, 10, 0], [10, 20, 0]],
            [[0, 1, 2], [3, 4, 5]],
        )
        samples = sample_surface(mesh, 2000, seed=0)
        big = sum(1 for s in samples if s.face_index == 1)
        assert big / 2000 > 0.95


class TestNearestFace:
    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            mesh = soup_mesh(rng, max_faces=30)
            tris = [tuple(map(tuple, t)) for t in mesh.triangles()]
            for point in rng.uniform(-1.5, 1.5, size=(20, 3)):
                face, dist = nearest_face(mesh, point)
                oracle = [point_triangle_distance(tuple(point), *t) for t in tris]
                best = min(oracle)
                assert dist == pytest.approx(best, abs=1e-9)
                assert oracle[face] == pytest.approx(best, abs=1e-9)

    def test_point_on_surface_returns_zero(self):
        face, dist = nearest_face(RIGHT_TRIANGLE, [0.5, 0.5, 0.0])
        assert face == 0
        assert dist == pytest.approx(0.0, abs=1e-15)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_distance_never_exceeds_any_vertex_distance(self, seed):
        rng = np.random.default_rng(seed)
        mesh = soup_mesh(rng, max_faces=12)
        point = rng.uniform(-2, 2, size=3)
        _, dist = nearest_face(mesh, point)
        vertex_min = float(np.linalg.norm(mesh.vertices - point, axis=1).min())
        assert dist <= vertex_min + 1e-12
