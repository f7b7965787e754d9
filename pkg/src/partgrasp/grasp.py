"""Grasp candidates: import, naive antipodal synthesis, and part-aware selection.

Candidates normally come from an external generator via JSON; the antipodal
sampler exists so the pipeline runs end-to-end without one. A candidate is
assigned to the part of its nearest surface face, and selection keeps the
top-k most confident candidates on the target part.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadQuaternion, EmptySelection, NoValidGrasps, ParseError
from .fusion import LabelMap
from .mesh import TriMesh, nearest_face, sample_surface_arrays

QUAT_TOL = 1e-3


@dataclass(frozen=True)
class GraspCandidate:
    position: np.ndarray
    orientation: np.ndarray  # unit quaternion (w, x, y, z)
    width: float
    confidence: float


@dataclass(frozen=True)
class PartAssignment:
    candidate_index: int
    face_index: int
    part_label: int  # prompt index or UNKNOWN
    distance: float


def load_grasps(path) -> list[GraspCandidate]:
    """Read {"grasps":[{"position","quaternion","width","confidence"}]}.

    Quaternions within 1e-3 of unit norm are renormalized; anything further
    off is rejected as corrupt rather than silently fixed.
    """
    path = Path(path)
    if not path.exists():
        raise ParseError(f"grasp file not found: {path}")
    try:
        blob = json.loads(path.read_text())
        records = blob["grasps"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    out = []
    for k, rec in enumerate(records):
        try:
            position = np.asarray([float(v) for v in rec["position"]], dtype=np.float64)
            quat = np.asarray([float(v) for v in rec["quaternion"]], dtype=np.float64)
            width = float(rec["width"])
            conf = float(rec["confidence"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: grasp {k} malformed: {exc}") from exc
        if position.shape != (3,) or quat.shape != (4,):
            raise ParseError(f"{path}: grasp {k} has wrong-sized position/quaternion")
        if width <= 0.0:
            raise ParseError(f"{path}: grasp {k} width must be positive")
        if not 0.0 <= conf <= 1.0:
            raise ParseError(f"{path}: grasp {k} confidence outside [0, 1]")
        norm = float(np.linalg.norm(quat))
        if abs(norm - 1.0) > QUAT_TOL:
            raise BadQuaternion(f"{path}: grasp {k} quaternion norm {norm:.6f}")
        out.append(GraspCandidate(position, quat / norm, width, conf))
    return out


def save_grasps(path, grasps: list[GraspCandidate]) -> None:
    blob = {
        "grasps": [
            {
                "position": g.position.tolist(),
                "quaternion": g.orientation.tolist(),
                "width": g.width,
                "confidence": g.confidence,
            }
            for g in grasps
        ]
    }
    Path(path).write_text(json.dumps(blob, indent=2))


def _quat_from_matrix(m: np.ndarray) -> np.ndarray:
    """Unit quaternion (w,x,y,z) for a rotation matrix, w >= 0."""
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s, (m[2, 1] - m[1, 2]) / s,
                      (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s])
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array([(m[2, 1] - m[1, 2]) / s, 0.25 * s,
                      (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s])
    elif m[1, 1] >= m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array([(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s,
                      0.25 * s, (m[1, 2] + m[2, 1]) / s])
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array([(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s,
                      (m[1, 2] + m[2, 1]) / s, 0.25 * s])
    q = q / np.linalg.norm(q)
    if q[0] < 0.0:
        q = -q
    return q


def _closing_frame(axis: np.ndarray) -> np.ndarray:
    """Rotation whose x-column (gripper closing axis) equals `axis`."""
    helper = np.array([0.0, 0.0, 1.0])
    if abs(float(np.dot(axis, helper))) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    y = np.cross(helper, axis)
    y = y / np.linalg.norm(y)
    z = np.cross(axis, y)
    return np.column_stack([axis, y, z])


def sample_antipodal(
    mesh: TriMesh, count: int, max_width: float, seed: int
) -> list[GraspCandidate]:
    """Draw surface point pairs with opposing normals as pinch-grasp stand-ins.

    A pair (p, q) qualifies when dot(n_p, n_q) < -0.5 and |p - q| <= max_width;
    the grasp sits at the midpoint with the closing axis along q - p and
    confidence equal to the normal opposition. Gives up with NoValidGrasps
    after 100 x count candidate pairs with zero acceptances.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if max_width <= 0.0:
        raise ValueError("max_width must be positive")
    rng = np.random.default_rng(seed)
    out: list[GraspCandidate] = []
    trials = 0
    max_trials = 100 * count
    chunk = max(64, 4 * count)
    while len(out) < count and trials < max_trials:
        n_pairs = min(chunk, max_trials - trials)
        points, _, normals = sample_surface_arrays(mesh, 2 * n_pairs, rng)
        p, q = points[0::2], points[1::2]
        np_, nq = normals[0::2], normals[1::2]
        opposition = np.einsum("ij,ij->i", np_, nq)
        gap = np.linalg.norm(q - p, axis=1)
        ok = (opposition < -0.5) & (gap <= max_width) & (gap > 0.0)
        for i in np.flatnonzero(ok):
            axis = (q[i] - p[i]) / gap[i]
            out.append(
                GraspCandidate(
                    position=0.5 * (p[i] + q[i]),
                    orientation=_quat_from_matrix(_closing_frame(axis)),
                    width=float(gap[i]),
                    confidence=float(min(1.0, -opposition[i])),
                )
            )
            if len(out) == count:
                break
        trials += n_pairs
    if not out:
        raise NoValidGrasps(
            f"no antipodal pair within width {max_width} after {max_trials} trials"
        )
    return out[:count]


def assign_parts(
    candidates: list[GraspCandidate], mesh: TriMesh, labels: LabelMap
) -> list[PartAssignment]:
    """Map each candidate to the part label of its nearest surface face."""
    if len(labels.label) != mesh.face_count:
        raise ValueError(
            f"{len(labels.label)} labels for {mesh.face_count} faces"
        )
    out = []
    for k, cand in enumerate(candidates):
        face, dist = nearest_face(mesh, cand.position)
        out.append(
            PartAssignment(
                candidate_index=k,
                face_index=face,
                part_label=int(labels.label[face]),
                distance=dist,
            )
        )
    return out


def select_grasps(
    assignments: list[PartAssignment],
    candidates: list[GraspCandidate],
    target_prompt: int,
    top_k: int = 10,
) -> list[GraspCandidate]:
    """Top-k on-target candidates by confidence (ties keep input order)."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    on_target = [a.candidate_index for a in assignments if a.part_label == target_prompt]
    if not on_target:
        raise EmptySelection(f"no grasp candidate on target prompt {target_prompt}")
    ranked = sorted(on_target, key=lambda i: -candidates[i].confidence)
    return [candidates[i] for i in ranked[:top_k]]
