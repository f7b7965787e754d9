"""Shared fixtures and generators for the test suite."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from partgrasp import Detection, TriMesh, make_fixture


def soup_mesh(rng: np.random.Generator, max_faces: int = 50) -> TriMesh:
    """Random triangle soup: every face owns its three vertices."""
    n = int(rng.integers(4, max_faces + 1))
    vertices = rng.uniform(-1.0, 1.0, size=(3 * n, 3))
    faces = np.arange(3 * n, dtype=np.int64).reshape(n, 3)
    return TriMesh(vertices, faces)


def compact_partition(raw) -> tuple[np.ndarray, int]:
    """First-occurrence relabeling to contiguous part ids starting at 0."""
    mapping: dict[int, int] = {}
    out = []
    for v in raw:
        v = int(v)
        if v not in mapping:
            mapping[v] = len(mapping)
        out.append(mapping[v])
    return np.asarray(out, dtype=np.int64), len(mapping)


def random_partition(rng: np.random.Generator, face_count: int,
                     max_parts: int = 6) -> tuple[np.ndarray, int]:
    raw = rng.integers(0, int(rng.integers(1, max_parts + 1)), size=face_count)
    return compact_partition(raw)


def random_detections(rng: np.random.Generator, view_count: int,
                      prompt_count: int, image_size=(64, 64)) -> list[Detection]:
    w, h = image_size
    out = []
    for view in range(view_count):
        for j in range(prompt_count):
            for _ in range(int(rng.integers(0, 3))):
                xs = np.sort(rng.uniform(0.0, w, size=2))
                ys = np.sort(rng.uniform(0.0, h, size=2))
                conf = float(rng.uniform(0.05, 1.0))
                out.append(Detection(view, j, (float(xs[0]), float(ys[0]),
                                               float(xs[1] + 1.0), float(ys[1] + 1.0)),
                                     conf))
    return out


def write_obj(path, mesh: TriMesh) -> Path:
    """Full-precision OBJ dump (repr round-trips float64 exactly)."""
    path = Path(path)
    with open(path, "w") as f:
        for v in mesh.vertices:
            f.write(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
        for a, b, c in mesh.faces:
            f.write(f"f {a + 1} {b + 1} {c + 1}\n")
    return path


def write_labels(path, labels) -> Path:
    path = Path(path)
    arr = getattr(labels, "face_label", labels)
    path.write_text(json.dumps({"labels": [int(v) for v in arr]}))
    return path


@pytest.fixture(scope="session")
def hammer_fixture():
    return make_fixture("hammer", seed=5)


@pytest.fixture(scope="session")
def mug_fixture():
    return make_fixture("mug", seed=2)
