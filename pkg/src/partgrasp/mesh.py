"""Triangle mesh container, loaders, surface sampling, and nearest-face queries."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateMesh, IndexOutOfRange, ParseError

AREA_EPS = 1e-12


class TriMesh:
    """Indexed triangle surface with per-face area and normal caches.

    Arrays are set read-only after construction; instances are safe to share
    across workers.
    """

    def __init__(self, vertices: np.ndarray, faces: np.ndarray):
        vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
        if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
            bad = int(np.flatnonzero((faces < 0).any(axis=1) | (faces >= len(vertices)).any(axis=1))[0])
            raise IndexOutOfRange(
                f"face {bad} references vertex outside [0, {len(vertices)})"
            )
        repeated = (
            (faces[:, 0] == faces[:, 1])
            | (faces[:, 1] == faces[:, 2])
            | (faces[:, 0] == faces[:, 2])
        )
        if repeated.any():
            raise DegenerateMesh(f"face {int(np.flatnonzero(repeated)[0])} repeats a vertex index")

        self.vertices = vertices
        self.faces = faces
        tri = vertices[faces]
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        norms = np.linalg.norm(cross, axis=1)
        self.face_area = 0.5 * norms
        with np.errstate(invalid="ignore", divide="ignore"):
            self.face_normal = np.where(
                norms[:, None] > AREA_EPS, cross / np.where(norms == 0, 1.0, norms)[:, None], 0.0
            )
        if self.face_area.sum() <= 0.0:
            raise DegenerateMesh("mesh has zero total surface area")
        for arr in (self.vertices, self.faces, self.face_area, self.face_normal):
            arr.setflags(write=False)

    @property
    def face_count(self) -> int:
        return len(self.faces)

    @property
    def total_area(self) -> float:
        return float(self.face_area.sum())

    def triangles(self) -> np.ndarray:
        """(f, 3, 3) array of face vertex positions."""
        return self.vertices[self.faces]

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def bbox_center(self) -> np.ndarray:
        lo, hi = self.bbox()
        return 0.5 * (lo + hi)

    def bounding_radius(self) -> float:
        """Radius of the sphere around the bbox center enclosing all vertices."""
        return float(np.linalg.norm(self.vertices - self.bbox_center(), axis=1).max())


@dataclass(frozen=True)
class SurfaceSample:
    point: np.ndarray
    face_index: int
    normal: np.ndarray


def load_mesh(path: str | Path, format: str | None = None) -> TriMesh:
    """Load an OBJ or PLY triangle mesh; polygons are fan-triangulated.

    Face order is preserved from the file. Raises ParseError on malformed
    input, IndexOutOfRange on dangling face indices, DegenerateMesh when the
    surface has zero area.
    """
    path = Path(path)
    if not path.exists():
        raise ParseError(f"mesh file not found: {path}")
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt == "obj":
        vertices, faces = _parse_obj(path)
    elif fmt == "ply":
        vertices, faces = _parse_ply(path)
    else:
        raise ParseError(f"unsupported mesh format: {fmt!r}")
    if not faces:
        raise ParseError(f"no faces found in {path}")
    return TriMesh(np.array(vertices, dtype=np.float64), np.array(faces, dtype=np.int64))


def _parse_obj(path: Path) -> tuple[list, list]:
    vertices: list[list[float]] = []
    faces: list[list[int]] = []
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tag, *rest = line.split()
            if tag == "v":
                if len(rest) < 3:
                    raise ParseError(f"{path}:{lineno}: vertex needs 3 coordinates")
                try:
                    vertices.append([float(x) for x in rest[:3]])
                except ValueError as exc:
                    raise ParseError(f"{path}:{lineno}: bad vertex: {exc}") from exc
            elif tag == "f":
                if len(rest) < 3:
                    raise ParseError(f"{path}:{lineno}: face needs >= 3 vertices")
                idx = []
                for token in rest:
                    head = token.split("/")[0]
                    try:
                        i = int(head)
                    except ValueError as exc:
                        raise ParseError(f"{path}:{lineno}: bad face index {token!r}") from exc
                    # OBJ indices are 1-based; negative indices count from the end
                    idx.append(i - 1 if i > 0 else len(vertices) + i)
                for a, b in zip(idx[1:], idx[2:]):
                    faces.append([idx[0], a, b])
    return vertices, faces


_PLY_TYPES = {
    "char": ("b", 1), "int8": ("b", 1),
    "uchar": ("B", 1), "uint8": ("B", 1),
    "short": ("h", 2), "int16": ("h", 2),
    "ushort": ("H", 2), "uint16": ("H", 2),
    "int": ("i", 4), "int32": ("i", 4),
    "uint": ("I", 4), "uint32": ("I", 4),
    "float": ("f", 4), "float32": ("f", 4),
    "double": ("d", 8), "float64": ("d", 8),
}


def _parse_ply(path: Path) -> tuple[list, list]:
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"ply":
            raise ParseError(f"{path}: missing ply magic")
        fmt = None
        elements: list[tuple[str, int, list]] = []
        while True:
            line = fh.readline()
            if not line:
                raise ParseError(f"{path}: unterminated ply header")
            words = line.decode("ascii", errors="replace").split()
            if not words:
                continue
            if words[0] == "format":
                fmt = words[1]
            elif words[0] == "element":
                elements.append((words[1], int(words[2]), []))
            elif words[0] == "property":
                if not elements:
                    raise ParseError(f"{path}: property before element")
                if words[1] == "list":
                    elements[-1][2].append(("list", words[2], words[3], words[4]))
                else:
                    elements[-1][2].append(("scalar", words[1], words[2]))
            elif words[0] == "end_header":
                break
        if fmt not in ("ascii", "binary_little_endian"):
            raise ParseError(f"{path}: unsupported ply format {fmt!r}")
        try:
            if fmt == "ascii":
                return _read_ply_ascii(fh, elements)
            return _read_ply_binary(fh, elements)
        except (ValueError, struct.error, IndexError) as exc:
            raise ParseError(f"{path}: {exc}") from exc


def _take_vertex(props, values) -> list[float]:
    names = [p[2] for p in props if p[0] == "scalar"]
    return [float(values[names.index(k)]) for k in ("x", "y", "z")]


def _read_ply_ascii(fh, elements) -> tuple[list, list]:
    vertices, faces = [], []
    for name, count, props in elements:
        for _ in range(count):
            row = fh.readline().split()
            if not row:
                raise ParseError("truncated ply body")
            if name == "vertex":
                vertices.append(_take_vertex(props, row))
            elif name == "face":
                n = int(row[0])
                idx = [int(x) for x in row[1 : 1 + n]]
                for a, b in zip(idx[1:], idx[2:]):
                    faces.append([idx[0], a, b])
    return vertices, faces


def _read_ply_binary(fh, elements) -> tuple[list, list]:
    vertices, faces = [], []
    for name, count, props in elements:
        for _ in range(count):
            values = []
            for prop in props:
                if prop[0] == "scalar":
                    code, size = _PLY_TYPES[prop[1]]
                    values.append(struct.unpack("<" + code, fh.read(size))[0])
                else:
                    ccode, csize = _PLY_TYPES[prop[1]]
                    icode, isize = _PLY_TYPES[prop[2]]
                    n = struct.unpack("<" + ccode, fh.read(csize))[0]
                    values.append(list(struct.unpack(f"<{n}{icode}", fh.read(isize * n))))
            if name == "vertex":
                vertices.append(_take_vertex(props, values))
            elif name == "face":
                idx = next(v for v in values if isinstance(v, list))
                for a, b in zip(idx[1:], idx[2:]):
                    faces.append([idx[0], a, b])
    return vertices, faces


def sample_surface_arrays(
    mesh: TriMesh, count: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Area-uniform surface samples as arrays: (points, face indices, normals)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    total = mesh.face_area.sum()
    if total <= 0.0:
        raise DegenerateMesh("cannot sample a zero-area mesh")
    probs = mesh.face_area / total
    face_idx = rng.choice(len(probs), size=count, p=probs)
    tri = mesh.vertices[mesh.faces[face_idx]]
    # sqrt warp gives uniform density over each triangle
    r1 = np.sqrt(rng.random(count))
    r2 = rng.random(count)
    a = 1.0 - r1
    b = r1 * (1.0 - r2)
    c = r1 * r2
    points = a[:, None] * tri[:, 0] + b[:, None] * tri[:, 1] + c[:, None] * tri[:, 2]
    return points, face_idx, mesh.face_normal[face_idx]


def sample_surface(mesh: TriMesh, count: int, seed: int) -> list[SurfaceSample]:
    """Sample `count` points with per-face probability proportional to area.

    Deterministic for a fixed (mesh, count, seed).
    """
    rng = np.random.default_rng(seed)
    points, face_idx, normals = sample_surface_arrays(mesh, count, rng)
    return [
        SurfaceSample(point=p, face_index=int(i), normal=n)
        for p, i, n in zip(points, face_idx, normals)
    ]


def _closest_points_on_triangles(tri: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Closest point to `query` on each closed triangle of a (n,3,3) array.

    Vectorized region classification from Ericson's "Real-Time Collision
    Detection" (ClosestPtPointTriangle).
    """
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ab = b - a
    ac = c - a
    ap = query - a

    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    result = np.empty_like(a)
    remain = np.ones(len(tri), dtype=bool)

    is_a = (d1 <= 0.0) & (d2 <= 0.0)
    result[is_a] = a[is_a]
    remain &= ~is_a

    bp = query - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    is_b = (d3 >= 0.0) & (d4 <= d3) & remain
    result[is_b] = b[is_b]
    remain &= ~is_b

    vc = d1 * d4 - d3 * d2
    is_ab = (vc <= 0.0) & (d1 >= 0.0) & (d3 <= 0.0) & remain
    if is_ab.any():
        denom = d1[is_ab] - d3[is_ab]
        v = np.where(denom != 0.0, d1[is_ab] / np.where(denom == 0.0, 1.0, denom), 0.0)
        result[is_ab] = a[is_ab] + v[:, None] * ab[is_ab]
        remain &= ~is_ab

    cp = query - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    is_c = (d6 >= 0.0) & (d5 <= d6) & remain
    result[is_c] = c[is_c]
    remain &= ~is_c

    vb = d5 * d2 - d1 * d6
    is_ac = (vb <= 0.0) & (d2 >= 0.0) & (d6 <= 0.0) & remain
    if is_ac.any():
        denom = d2[is_ac] - d6[is_ac]
        w = np.where(denom != 0.0, d2[is_ac] / np.where(denom == 0.0, 1.0, denom), 0.0)
        result[is_ac] = a[is_ac] + w[:, None] * ac[is_ac]
        remain &= ~is_ac

    va = d3 * d6 - d5 * d4
    is_bc = (va <= 0.0) & ((d4 - d3) >= 0.0) & ((d5 - d6) >= 0.0) & remain
    if is_bc.any():
        denom = (d4[is_bc] - d3[is_bc]) + (d5[is_bc] - d6[is_bc])
        w = np.where(denom != 0.0, (d4[is_bc] - d3[is_bc]) / np.where(denom == 0.0, 1.0, denom), 0.0)
        result[is_bc] = b[is_bc] + w[:, None] * (c[is_bc] - b[is_bc])
        remain &= ~is_bc

    if remain.any():
        denom = va[remain] + vb[remain] + vc[remain]
        denom = np.where(denom == 0.0, 1.0, denom)
        v = (vb[remain] / denom)[:, None]
        w = (vc[remain] / denom)[:, None]
        result[remain] = a[remain] + v * ab[remain] + w * ac[remain]
    return result


def nearest_face(mesh: TriMesh, point) -> tuple[int, float]:
    """Face whose closed triangle is nearest to `point`; ties take the lowest index."""
    if mesh.face_count == 0:
        raise DegenerateMesh("mesh has no faces")
    query = np.asarray(point, dtype=np.float64).reshape(3)
    closest = _closest_points_on_triangles(mesh.triangles(), query)
    dist = np.linalg.norm(closest - query, axis=1)
    idx = int(np.argmin(dist))
    return idx, float(dist[idx])
