"""Face-partition decompositions at a ladder of convexity thresholds.

Two sources: a JSON import boundary for externally computed decompositions,
and a built-in recursive splitter. The splitter measures a component's
concavity as the largest distance from its surface (deterministic
low-discrepancy samples plus its vertices) to its convex hull, normalized by
the mesh bounding-sphere radius. A disconnected component splits along its
edge-connected pieces; a connected one is cut perpendicular to one of its
principal axes at the position minimizing the children's combined concavity.

A decomposition's structure depends only on the mesh: cut choices never look
at the threshold, so one recursion tree serves every threshold in a ladder.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull, QhullError

from .errors import DegenerateMesh, LengthMismatch, ParseError
from .mesh import TriMesh

MAX_DEPTH = 12
CONCAVITY_SAMPLES = 2000
SEARCH_SAMPLES = 400


@dataclass(frozen=True)
class Decomposition:
    """Partition of faces into parts at one concavity threshold."""

    threshold: float
    part_of_face: np.ndarray
    part_count: int
    guard_fired: bool = False

    def __post_init__(self):
        arr = np.asarray(self.part_of_face, dtype=np.int64).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "part_of_face", arr)
        if self.threshold <= 0.0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        if arr.size == 0:
            raise ValueError("decomposition covers no faces")
        if arr.min() < 0 or arr.max() != self.part_count - 1 or \
                len(np.unique(arr)) != self.part_count:
            raise ValueError("part indices must form a contiguous range [0, n)")


@dataclass(frozen=True)
class ThresholdLadder:
    """Retained decompositions ordered fine to coarse, duplicates dropped."""

    thresholds: tuple[float, ...]
    decompositions: tuple[Decomposition, ...]

    def __post_init__(self):
        if not self.decompositions:
            raise ValueError("ladder must contain at least one decomposition")
        if len(self.thresholds) != len(self.decompositions):
            raise ValueError("thresholds and decompositions must align")
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValueError("thresholds must be strictly increasing")

    def __len__(self) -> int:
        return len(self.decompositions)

    @property
    def finest(self) -> Decomposition:
        return self.decompositions[0]


def _compact(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """Relabel to [0, n) by first occurrence in face order."""
    uniq, first = np.unique(labels, return_index=True)
    rank = np.empty(len(uniq), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(uniq))
    return rank[np.searchsorted(uniq, labels)], len(uniq)


def load_decomposition(path, mesh: TriMesh) -> Decomposition:
    """Read {"threshold":float,"part_of_face":[int,...]} and compact part ids."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"decomposition file not found: {path}")
    try:
        blob = json.loads(path.read_text())
        threshold = float(blob["threshold"])
        part_of_face = np.asarray(blob["part_of_face"], dtype=np.int64)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if len(part_of_face) != mesh.face_count:
        raise LengthMismatch(
            f"{path}: {len(part_of_face)} part labels for {mesh.face_count} faces"
        )
    labels, count = _compact(part_of_face)
    return Decomposition(threshold=threshold, part_of_face=labels, part_count=count)


def save_decomposition(path, decomposition: Decomposition) -> None:
    Path(path).write_text(
        json.dumps(
            {
                "threshold": decomposition.threshold,
                "part_of_face": decomposition.part_of_face.tolist(),
            }
        )
    )


# ---------------------------------------------------------------------------
# concavity measurement


def _radical_inverse(indices: np.ndarray, base: int) -> np.ndarray:
    out = np.zeros(len(indices), dtype=np.float64)
    denom = np.ones(len(indices), dtype=np.float64)
    n = indices.astype(np.int64).copy()
    while n.max(initial=0) > 0:
        denom *= base
        out += (n % base) / denom
        n //= base
    return out


_BARY_CACHE: dict[int, np.ndarray] = {}


def _bary_table(count: int) -> np.ndarray:
    """First `count` low-discrepancy barycentric triples (shared by all faces)."""
    have = max(_BARY_CACHE) if _BARY_CACHE else 0
    if count > have:
        idx = np.arange(1, count + 1)
        r1 = np.sqrt(_radical_inverse(idx, 2))
        r2 = _radical_inverse(idx, 3)
        table = np.column_stack([1.0 - r1, r1 * (1.0 - r2), r1 * r2])
        _BARY_CACHE.clear()
        _BARY_CACHE[count] = table
    key = max(_BARY_CACHE)
    return _BARY_CACHE[key][:count]


def _surface_points(mesh: TriMesh, faces: np.ndarray, budget: int) -> np.ndarray:
    """Deterministic area-spread samples on a face subset, plus its vertices.

    Per-face counts come from largest-remainder allocation of the budget over
    face areas, so the result is seed-free and identical across runs.
    """
    areas = mesh.face_area[faces]
    total = areas.sum()
    verts = mesh.vertices[np.unique(mesh.faces[faces])]
    if total <= 0.0 or budget <= 0:
        return verts
    exact = areas * (budget / total)
    base = np.floor(exact).astype(np.int64)
    short = budget - int(base.sum())
    if short > 0:
        order = np.lexsort((np.arange(len(faces)), -(exact - base)))
        base[order[:short]] += 1
    if base.sum() == 0:
        return verts
    tri = mesh.vertices[mesh.faces[faces]]
    tri_rep = np.repeat(tri, base, axis=0)
    starts = np.repeat(np.cumsum(base) - base, base)
    local = np.arange(len(tri_rep)) - starts
    bary = _bary_table(int(base.max()))[local]
    pts = np.einsum("nk,nkd->nd", bary, tri_rep)
    return np.concatenate([verts, pts], axis=0)


def _hull_depth(points: np.ndarray) -> float:
    """Largest distance from a point to the convex hull boundary of the set.

    For a point inside the hull the distance to the boundary is the minimum
    over facet planes of the inward offset; degenerate (flat) sets are convex
    and score zero.
    """
    if len(points) < 4:
        return 0.0
    try:
        hull = ConvexHull(points)
    except QhullError:
        return 0.0
    eq = hull.equations  # outward normals: A @ x + b <= 0 inside
    inward = -(points @ eq[:, :3].T + eq[:, 3])
    return float(max(0.0, inward.min(axis=1).max()))


def measure_concavity(
    mesh: TriMesh, faces: np.ndarray, budget: int = CONCAVITY_SAMPLES
) -> float:
    """Component concavity: max sample-to-hull distance / mesh bounding radius."""
    radius = mesh.bounding_radius()
    if radius <= 0.0:
        raise DegenerateMesh("mesh has zero spatial extent")
    return _hull_depth(_surface_points(mesh, faces, budget)) / radius


# ---------------------------------------------------------------------------
# recursive splitting


@dataclass
class _Node:
    faces: np.ndarray
    concavity: float
    children: tuple["_Node", "_Node"] | None = None
    guard: bool = False  # leaf left above-threshold by depth/degeneracy guard


def _separation_cuts(vmin: np.ndarray, vmax: np.ndarray, limit: int = 8) -> list[float]:
    """Midpoints of projection intervals crossed by no face.

    A vertex gap (a, b) with zero active face intervals is a plane where the
    surface is absent — the natural place to part disconnected components.
    """
    uniq = np.unique(np.concatenate([vmin, vmax]))
    if len(uniq) < 2:
        return []
    mids = 0.5 * (uniq[:-1] + uniq[1:])
    active = (
        np.searchsorted(np.sort(vmin), mids, side="right")
        - np.searchsorted(np.sort(vmax), mids, side="right")
    )
    widths = np.diff(uniq)
    open_gaps = (active == 0) & (widths > 1e-12)
    idx = np.flatnonzero(open_gaps)
    if len(idx) > limit:
        idx = idx[np.argsort(widths[idx], kind="stable")[-limit:]]
        idx = np.sort(idx)
    return [float(m) for m in mids[idx]]


def _quantile_cuts(t: np.ndarray, weights: np.ndarray) -> list[float]:
    order = np.argsort(t, kind="stable")
    cw = np.cumsum(weights[order])
    total = cw[-1]
    cuts = []
    for q in (0.2, 0.35, 0.5, 0.65, 0.8):
        k = int(np.searchsorted(cw, q * total))
        cuts.append(float(t[order[min(k, len(t) - 1)]]))
    cuts.append(float(np.average(t, weights=weights)) if total > 0 else float(t.mean()))
    return cuts


def _choose_cut(mesh: TriMesh, faces: np.ndarray, t: np.ndarray,
                weights: np.ndarray, vmin: np.ndarray, vmax: np.ndarray,
                ) -> tuple[tuple[float, float], float] | None:
    """Best cut position along the axis, with its score.

    Candidates are area quantiles, the weighted mean, and every face-free
    projection gap. The score minimizes the children's combined concavity
    (quantized, relative to the mesh bounding radius) — a sum, so carving
    off one convex component beats symmetrically halving a concave shape.
    Ties are broken by the widest clearance between the children's vertex
    intervals, then by cut position. Concavities during the search use a
    reduced sample budget. Returns ``(score, cut)`` or None if no cut
    separates the faces.
    """
    lo, hi = float(t.min()), float(t.max())
    if not hi > lo:
        return None
    radius = mesh.bounding_radius()

    def objective(cut: float) -> tuple[float, float]:
        left_mask = t <= cut
        left = faces[left_mask]
        right = faces[~left_mask]
        if len(left) == 0 or len(right) == 0:
            return (math.inf, math.inf)
        conc = (
            _hull_depth(_surface_points(mesh, left, SEARCH_SAMPLES))
            + _hull_depth(_surface_points(mesh, right, SEARCH_SAMPLES))
        ) / radius
        margin = float(vmin[~left_mask].min() - vmax[left_mask].max())
        return (round(conc, 9), -margin)

    coarse = sorted(set(_quantile_cuts(t, weights) + _separation_cuts(vmin, vmax)))
    scored = [(objective(c), c) for c in coarse]
    best_obj, best = min(scored, key=lambda s: (s[0], s[1]))
    if not math.isfinite(best_obj[0]):
        return None

    idx = coarse.index(best)
    lo_n = coarse[idx - 1] if idx > 0 else lo
    hi_n = coarse[idx + 1] if idx + 1 < len(coarse) else hi
    for c in np.linspace(lo_n, hi_n, 6)[1:-1]:
        obj = objective(float(c))
        if obj < best_obj:
            best_obj, best = obj, float(c)
    return best_obj, best


def _split_once(mesh: TriMesh, faces: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    corners = mesh.vertices[mesh.faces[faces]]
    centroids = corners.mean(axis=1)
    weights = mesh.face_area[faces]
    total = weights.sum()
    if total <= 0.0 or len(faces) < 2:
        return None
    # score the best cut on every axis (largest variance first) and keep the
    # overall winner; a zero-concavity cut with positive clearance is perfect,
    # so the remaining axes are skipped
    best: tuple[tuple[float, float], int, float, np.ndarray] | None = None
    for order, axis in enumerate(_pca_axes(centroids, weights)):
        t = centroids @ axis
        vproj = corners @ axis
        found = _choose_cut(mesh, faces, t, weights,
                            vproj.min(axis=1), vproj.max(axis=1))
        if found is None:
            continue
        score, cut = found
        if best is None or (score, order, cut) < (best[0], best[1], best[2]):
            best = (score, order, cut, t)
        if score[0] == 0.0 and score[1] < 0.0:
            break
    if best is None:
        return None
    _, _, cut, t = best
    left = faces[t <= cut]
    right = faces[t > cut]
    if len(left) and len(right):
        return left, right
    return None


MAX_GROUP_COMPONENTS = 16


def _pca_axes(points: np.ndarray, weights: np.ndarray) -> list[np.ndarray]:
    """Weighted principal axes, dominant first, signs canonicalized."""
    total = weights.sum()
    mean = np.average(points, axis=0, weights=weights)
    diff = points - mean
    cov = (diff * weights[:, None]).T @ diff / total
    _, eigvecs = np.linalg.eigh(cov)
    axes = []
    for k in range(2, -1, -1):
        axis = eigvecs[:, k]
        if axis[np.argmax(np.abs(axis))] < 0:
            axis = -axis
        axes.append(axis)
    return axes


def _component_split(mesh: TriMesh, faces: np.ndarray,
                     adjacency: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    """Split a disconnected face set along its edge-connected components.

    Whole components are grouped into the two children that minimize the
    combined child concavity, searching boundaries between consecutive
    component centroids along the centroids' principal axes — the same
    objective as the geometric cut search, so the recursion's intermediate
    nodes stay meaningful (a body parts from a multi-piece handle before the
    handle parts into its pieces). Returns None when the set is connected;
    beyond MAX_GROUP_COMPONENTS pieces (triangle-soup territory, where parts
    are enforced per-component at cut time anyway) the grouping falls back
    to balanced label halves.
    """
    inside = np.zeros(mesh.face_count, dtype=bool)
    inside[faces] = True
    keep = inside[adjacency[:, 0]] & inside[adjacency[:, 1]] if len(adjacency) else \
        np.zeros(0, dtype=bool)
    pairs = adjacency[keep]
    local = np.full(mesh.face_count, -1, dtype=np.int64)
    local[faces] = np.arange(len(faces))
    graph = coo_matrix(
        (np.ones(len(pairs), dtype=np.int8), (local[pairs[:, 0]], local[pairs[:, 1]])),
        shape=(len(faces), len(faces)),
    )
    count, labels = connected_components(graph, directed=False)
    if count < 2:
        return None

    corners = mesh.vertices[mesh.faces[faces]]
    areas = mesh.face_area[faces]
    comp_area = np.bincount(labels, weights=areas, minlength=count)
    best: tuple[tuple[float, float, int, float], np.ndarray] | None = None
    if count <= MAX_GROUP_COMPONENTS and comp_area.min() > 0.0:
        centroids = corners.mean(axis=1)
        comp_centroid = np.zeros((count, 3))
        for d in range(3):
            comp_centroid[:, d] = np.bincount(
                labels, weights=centroids[:, d] * areas, minlength=count
            )
        comp_centroid /= comp_area[:, None]
        radius = mesh.bounding_radius()
        for order, axis in enumerate(_pca_axes(comp_centroid, comp_area)):
            proj = comp_centroid @ axis
            vproj = corners @ axis
            fmin, fmax = vproj.min(axis=1), vproj.max(axis=1)
            ranks = np.argsort(proj, kind="stable")
            sorted_proj = proj[ranks]
            for k in range(count - 1):
                if not sorted_proj[k + 1] > sorted_proj[k]:
                    continue
                cut = 0.5 * (sorted_proj[k] + sorted_proj[k + 1])
                left_mask = np.isin(labels, ranks[: k + 1])
                conc = round(
                    (_hull_depth(_surface_points(mesh, faces[left_mask], SEARCH_SAMPLES))
                     + _hull_depth(_surface_points(mesh, faces[~left_mask], SEARCH_SAMPLES)))
                    / radius,
                    9,
                )
                margin = float(fmin[~left_mask].min() - fmax[left_mask].max())
                key = (conc, -margin, order, cut)
                if best is None or key < best[0]:
                    best = (key, left_mask)
            if best is not None and best[0][0] == 0.0 and best[0][1] < 0.0:
                break
    if best is not None:
        return faces[best[1]], faces[~best[1]]
    half = count // 2 + count % 2
    return faces[labels < half], faces[labels >= half]


def _build_tree(mesh: TriMesh, stop_threshold: float,
                adjacency: np.ndarray) -> _Node:
    root = _Node(np.arange(mesh.face_count, dtype=np.int64),
                 measure_concavity(mesh, np.arange(mesh.face_count)))
    stack = [(root, 0)]
    while stack:
        node, depth = stack.pop()
        if node.concavity <= stop_threshold:
            continue
        if depth >= MAX_DEPTH:
            node.guard = True
            continue
        split = _component_split(mesh, node.faces, adjacency)
        if split is None:
            split = _split_once(mesh, node.faces)
        if split is None:
            node.guard = True
            continue
        left, right = split
        node.children = (
            _Node(left, measure_concavity(mesh, left)),
            _Node(right, measure_concavity(mesh, right)),
        )
        stack.append((node.children[1], depth + 1))
        stack.append((node.children[0], depth + 1))
    return root


def _face_adjacency_pairs(mesh: TriMesh) -> np.ndarray:
    """(k, 2) pairs of faces sharing an edge."""
    f = mesh.faces
    edges = np.sort(
        np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [0, 2]]], axis=0), axis=1
    )
    owners = np.tile(np.arange(len(f), dtype=np.int64), 3)
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    edges, owners = edges[order], owners[order]
    same = (edges[1:] == edges[:-1]).all(axis=1)
    return np.column_stack([owners[:-1][same], owners[1:][same]])




class DecompositionTree:
    """One recursion tree reused for every threshold at or above its stop value."""

    def __init__(self, mesh: TriMesh, stop_threshold: float):
        if stop_threshold <= 0.0:
            raise ValueError("threshold must be positive")
        self.mesh = mesh
        self.stop_threshold = stop_threshold
        self._adjacency = _face_adjacency_pairs(mesh)
        self.root = _build_tree(mesh, stop_threshold, self._adjacency)

    def cut(self, threshold: float) -> Decomposition:
        if threshold < self.stop_threshold:
            raise ValueError(
                f"tree was built for thresholds >= {self.stop_threshold}, got {threshold}"
            )
        labels = np.empty(self.mesh.face_count, dtype=np.int64)
        guard_fired = False
        stack = [self.root]
        next_id = 0
        while stack:
            node = stack.pop()
            if node.concavity <= threshold or node.children is None:
                labels[node.faces] = next_id
                next_id += 1
                if node.children is None and node.guard and node.concavity > threshold:
                    guard_fired = True
            else:
                stack.append(node.children[1])
                stack.append(node.children[0])
        labels, count = _compact(labels)
        return Decomposition(
            threshold=threshold,
            part_of_face=labels,
            part_count=count,
            guard_fired=guard_fired,
        )


def builtin_decompose(mesh: TriMesh, threshold: float) -> Decomposition:
    """Recursive concavity-guided binary splitting; see the module docstring."""
    return DecompositionTree(mesh, threshold).cut(threshold)


def sweep_thresholds(th_min: float, th_max: float, step: float) -> list[float]:
    if not 0.0 < th_min <= th_max:
        raise ValueError(f"need 0 < th_min <= th_max, got {th_min}, {th_max}")
    if step <= 0.0:
        raise ValueError("step must be positive")
    count = int(math.floor((th_max - th_min) / step + 1e-9)) + 1
    return [round(th_min + i * step, 12) for i in range(count)]


def build_ladder(
    mesh: TriMesh,
    th_min: float = 0.01,
    th_max: float = 0.25,
    step: float = 0.01,
    source: str = "builtin",
) -> ThresholdLadder:
    """Decompose at every swept threshold, dropping exact-duplicate partitions.

    source is "builtin" or a directory of th_<value>.json files (the import
    path for externally computed decompositions).
    """
    if source == "builtin":
        thresholds = sweep_thresholds(th_min, th_max, step)
        tree = DecompositionTree(mesh, thresholds[0])
        decomps = [tree.cut(th) for th in thresholds]
    else:
        directory = Path(source)
        if not directory.is_dir():
            raise ParseError(f"decomposition directory not found: {directory}")
        found = []
        for child in sorted(directory.glob("th_*.json")):
            match = re.fullmatch(r"th_([0-9.eE+-]+)\.json", child.name)
            if not match:
                continue
            try:
                th = float(match.group(1))
            except ValueError as exc:
                raise ParseError(f"bad threshold in file name {child.name}") from exc
            if th_min - 1e-9 <= th <= th_max + 1e-9:
                found.append((th, child))
        if not found:
            raise ParseError(f"no th_*.json files in [{th_min}, {th_max}] under {directory}")
        found.sort(key=lambda pair: pair[0])
        thresholds = [th for th, _ in found]
        decomps = [load_decomposition(path, mesh) for _, path in found]

    return dedup_ladder(thresholds, decomps)


def dedup_ladder(thresholds: list[float], decomps: list[Decomposition]) -> ThresholdLadder:
    """Keep only thresholds whose partition differs from the previous retained one."""
    kept_th: list[float] = []
    kept: list[Decomposition] = []
    for th, dec in zip(thresholds, decomps):
        if kept and np.array_equal(kept[-1].part_of_face, dec.part_of_face):
            continue
        kept_th.append(th)
        kept.append(dec)
    return ThresholdLadder(thresholds=tuple(kept_th), decompositions=tuple(kept))
