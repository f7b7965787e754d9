"""Seeded synthetic fixtures: convex-primitive assemblies with known labels.

Each archetype composes a few convex primitives (grid boxes, prisms,
icospheres) into a recognizable object. Primitives are welded internally but
never to each other, and neighbors are separated by a hair-width gap, so the
construction part of every face is unambiguous ground truth for both
segmentation and decomposition. Seeds jitter dimensions and apply a random
rigid rotation; the same (archetype, seed, cell) always rebuilds the same
fixture bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decomp import Decomposition
from .detect import GroundTruthLabels, PromptSet
from .mesh import TriMesh
from .render import _random_rotation

ARCHETYPES = ("hammer", "mug", "knife", "dumbbell")

_GAP = 0.012  # island separation between touching primitives


@dataclass(frozen=True)
class Fixture:
    mesh: TriMesh
    labels: GroundTruthLabels
    prompts: PromptSet
    archetype: str
    seed: int
    construction_parts: np.ndarray  # per-face source-primitive index
    target_prompt: int  # the functional part a grasp should land on


def construction_decomposition(fixture: Fixture, threshold: float = 0.01) -> Decomposition:
    """The fixture's own primitive provenance as a Decomposition."""
    parts = fixture.construction_parts
    return Decomposition(
        threshold=threshold,
        part_of_face=parts,
        part_count=int(parts.max()) + 1,
    )


# ---------------------------------------------------------------------------
# primitive builders (each returns welded (vertices, faces))


def _weld(verts: np.ndarray, faces: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    uniq, inverse = np.unique(verts, axis=0, return_inverse=True)
    return uniq, inverse[faces]


def _grid_faces(nu: int, nv: int, flip: bool) -> np.ndarray:
    idx = np.arange((nu + 1) * (nv + 1)).reshape(nu + 1, nv + 1)
    a = idx[:-1, :-1].ravel()
    b = idx[1:, :-1].ravel()
    c = idx[1:, 1:].ravel()
    d = idx[:-1, 1:].ravel()
    faces = np.concatenate(
        [np.column_stack([a, b, c]), np.column_stack([a, c, d])], axis=0
    )
    return faces[:, ::-1] if flip else faces


def box_island(center, size, cell: float) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned box around `center`, each side gridded at ~cell spacing.

    All six sides draw coordinates from shared per-axis linspace arrays, so
    shared edges and corners are bitwise identical and weld exactly.
    """
    center = np.asarray(center, dtype=np.float64)
    half = np.asarray(size, dtype=np.float64) / 2.0
    n = np.maximum(1, np.round(2.0 * half / cell)).astype(int)
    coords = [center[i] + np.linspace(-half[i], half[i], n[i] + 1) for i in range(3)]
    all_v, all_f = [], []
    base = 0
    for axis in range(3):
        u_axis, v_axis = (axis + 1) % 3, (axis + 2) % 3
        for sign in (1.0, -1.0):
            gu, gv = np.meshgrid(coords[u_axis], coords[v_axis], indexing="ij")
            verts = np.empty(gu.shape + (3,))
            verts[..., axis] = coords[axis][-1] if sign > 0 else coords[axis][0]
            verts[..., u_axis] = gu
            verts[..., v_axis] = gv
            all_v.append(verts.reshape(-1, 3))
            all_f.append(_grid_faces(n[u_axis], n[v_axis], sign < 0) + base)
            base += len(all_v[-1])
    return _weld(np.concatenate(all_v), np.concatenate(all_f))


def prism_island(center, radius: float, height: float, sides: int,
                 cell: float) -> tuple[np.ndarray, np.ndarray]:
    """Regular prism along z (cylinder stand-in), capped with fans."""
    center = np.asarray(center, dtype=np.float64)
    nz = max(1, int(round(height / cell)))
    angles = 2.0 * np.pi * np.arange(sides) / sides
    ring = np.column_stack([np.cos(angles), np.sin(angles)]) * radius
    zs = np.linspace(-height / 2.0, height / 2.0, nz + 1)
    rings = np.concatenate(
        [np.column_stack([ring, np.full(sides, z)]) for z in zs], axis=0
    )
    verts = [rings + center]
    faces = []
    for level in range(nz):
        lo = level * sides
        hi = (level + 1) * sides
        for k in range(sides):
            a, b = lo + k, lo + (k + 1) % sides
            c, d = hi + (k + 1) % sides, hi + k
            faces.append([a, b, c])
            faces.append([a, c, d])
    top_center = len(rings)
    bottom_center = len(rings) + 1
    verts.append(np.array([center + [0, 0, height / 2.0],
                           center + [0, 0, -height / 2.0]]))
    top_lo = nz * sides
    for k in range(sides):
        faces.append([top_center, top_lo + k, top_lo + (k + 1) % sides])
        faces.append([bottom_center, (k + 1) % sides, k])
    return np.concatenate(verts), np.asarray(faces, dtype=np.int64)


def icosphere_island(center, radius: float, subdiv: int = 2) -> tuple[np.ndarray, np.ndarray]:
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
            (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
            (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = np.array(
        [
            (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
            (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
            (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
            (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
        ],
        dtype=np.int64,
    )
    for _ in range(subdiv):
        edge_mid: dict[tuple[int, int], int] = {}
        new_faces = []
        verts_list = list(verts)

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key not in edge_mid:
                mid = verts_list[a] + verts_list[b]
                mid = mid / np.linalg.norm(mid)
                edge_mid[key] = len(verts_list)
                verts_list.append(mid)
            return edge_mid[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
        verts = np.asarray(verts_list)
        faces = np.asarray(new_faces, dtype=np.int64)
    return verts * radius + np.asarray(center, dtype=np.float64), faces


# ---------------------------------------------------------------------------
# archetypes


def _assemble(pieces, prompts, piece_prompt, archetype, seed, target_prompt, rng):
    all_v, all_f, part_of_face = [], [], []
    base = 0
    for k, (verts, faces) in enumerate(pieces):
        all_v.append(verts)
        all_f.append(faces + base)
        part_of_face.append(np.full(len(faces), k, dtype=np.int64))
        base += len(verts)
    verts = np.concatenate(all_v)
    rot = _random_rotation(rng)
    verts = verts @ rot.T
    mesh = TriMesh(verts, np.concatenate(all_f))
    parts = np.concatenate(part_of_face)
    labels = GroundTruthLabels(np.asarray(piece_prompt, dtype=np.int64)[parts])
    return Fixture(
        mesh=mesh,
        labels=labels,
        prompts=PromptSet(prompts),
        archetype=archetype,
        seed=seed,
        construction_parts=parts,
        target_prompt=target_prompt,
    )


def _build_hammer(rng, cell):
    s = rng.uniform(0.90, 1.10, size=3)
    handle_len, handle_w = 0.58 * s[0], 0.07 * s[1]
    head = np.array([0.42, 0.36, 0.20]) * s[2]
    handle_top = handle_len / 2.0
    pieces = [
        box_island((0, 0, 0), (handle_w, handle_w, handle_len), cell),
        box_island((0, 0, handle_top + _GAP + head[2] / 2.0), head, cell),
    ]
    return pieces, ("handle", "head"), (0, 1), 0


def _build_knife(rng, cell):
    s = rng.uniform(0.90, 1.10, size=3)
    handle_len, handle_w = 0.46 * s[0], 0.06 * s[1]
    blade = np.array([0.38, 0.34, 0.20]) * s[2]
    blade_z = handle_len / 2.0 + _GAP + blade[2] / 2.0
    pieces = [
        box_island((0, 0, 0), (handle_w, handle_w, handle_len), cell),
        box_island((0, 0, blade_z), blade, cell),
    ]
    return pieces, ("handle", "blade"), (0, 1), 0


def _build_mug(rng, cell):
    s = rng.uniform(0.90, 1.10, size=2)
    radius, height = 0.30 * s[0], 0.60 * s[1]
    grip = 0.08
    reach = 0.30
    arm_x = radius + _GAP + reach / 2.0
    post_x = radius + _GAP + reach - grip / 2.0
    arm_dz = height * 0.27
    pieces = [
        prism_island((0, 0, 0), radius, height, 16, cell),
        box_island((arm_x, 0, arm_dz), (reach, grip, grip), cell),
        box_island((post_x, 0, 0), (grip, grip, 2 * arm_dz - grip - 2 * _GAP), cell),
        box_island((arm_x, 0, -arm_dz), (reach, grip, grip), cell),
    ]
    return pieces, ("body", "handle"), (0, 1, 1, 1), 1


def _build_dumbbell(rng, cell):
    s = rng.uniform(0.90, 1.10, size=2)
    bar_len = 0.50 * s[0]
    inner_r, outer_r = 0.27 * s[1], 0.16 * s[1]
    plate_t = 0.08
    inner_z = bar_len / 2.0 + _GAP + plate_t / 2.0
    outer_z = bar_len / 2.0 + 2.0 * _GAP + 1.5 * plate_t
    pieces = [prism_island((0, 0, 0), 0.07, bar_len, 10, cell)]
    for sign in (1.0, -1.0):
        pieces.append(prism_island((0, 0, sign * inner_z), inner_r, plate_t, 16, cell))
        pieces.append(prism_island((0, 0, sign * outer_z), outer_r, plate_t, 16, cell))
    return pieces, ("bar", "weight"), (0, 1, 1, 1, 1), 0


_BUILDERS = {
    "hammer": _build_hammer,
    "knife": _build_knife,
    "mug": _build_mug,
    "dumbbell": _build_dumbbell,
}


def make_fixture(archetype: str, seed: int, cell: float = 0.05) -> Fixture:
    """Build one seeded fixture; smaller `cell` means finer tessellation."""
    if archetype not in _BUILDERS:
        raise ValueError(f"unknown archetype {archetype!r}, choose from {ARCHETYPES}")
    rng = np.random.default_rng([ARCHETYPES.index(archetype), seed & 0xFFFFFFFFFFFFFFFF])
    pieces, prompts, piece_prompt, target = _BUILDERS[archetype](rng, cell)
    return _assemble(pieces, prompts, piece_prompt, archetype, seed, target, rng)
