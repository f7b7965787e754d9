"""Coarse relevance scoring: confidence-weighted visible-pixel votes.

S[i, j] = sum over detections d of prompt j of V(i, d.bbox) * d.confidence,
where V counts the pixels of face i inside the box in d's view. Accumulation
order is fixed (ascending view index, then detection order within the view)
so parallel and serial runs produce bit-identical matrices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .detect import Detection
from .errors import ParseError, ViewMismatch
from .mesh import TriMesh
from .render import FaceIdBuffer, bbox_face_counts


@dataclass(frozen=True)
class ScoreMatrix:
    """f x m grid of non-negative face-vs-prompt relevance scores."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"score matrix must be 2-D, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("score matrix contains non-finite entries")
        if arr.size and arr.min() < 0.0:
            raise ValueError("score matrix contains negative entries")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def face_count(self) -> int:
        return self.values.shape[0]

    @property
    def prompt_count(self) -> int:
        return self.values.shape[1]


def per_view_scores(
    buffer: FaceIdBuffer,
    detections: list[Detection],
    face_count: int,
    prompt_count: int,
) -> np.ndarray:
    """Partial score matrix from one view's detections, in list order."""
    partial = np.zeros((face_count, prompt_count), dtype=np.float64)
    for det in detections:
        counts = bbox_face_counts(buffer, det.bbox, face_count)
        partial[:, det.prompt_index] += counts * det.confidence
    return partial


def group_by_view(detections: list[Detection]) -> dict[int, list[Detection]]:
    grouped: dict[int, list[Detection]] = {}
    for det in detections:
        grouped.setdefault(det.view_index, []).append(det)
    return grouped


def coarse_scores(
    mesh: TriMesh,
    buffers: list[FaceIdBuffer],
    detections: list[Detection],
    prompt_count: int,
) -> ScoreMatrix:
    """Accumulate the f x m vote matrix over every detection in every view."""
    if prompt_count < 1:
        raise ValueError("prompt_count must be >= 1")
    by_view = {b.view_index: b for b in buffers}
    if len(by_view) != len(buffers):
        raise ViewMismatch("duplicate view indices among buffers")
    grouped = group_by_view(detections)
    missing = sorted(set(grouped) - set(by_view))
    if missing:
        raise ViewMismatch(f"detections reference views without buffers: {missing}")

    total = np.zeros((mesh.face_count, prompt_count), dtype=np.float64)
    for view in sorted(grouped):
        total += per_view_scores(by_view[view], grouped[view], mesh.face_count, prompt_count)
    return ScoreMatrix(total)


def save_score_matrix(path, matrix: ScoreMatrix, prompts: list[str]) -> None:
    """Binary little-endian float64 dump with a JSON shape sidecar."""
    path = Path(path)
    matrix.values.astype("<f8").tofile(path)
    sidecar = {"f": matrix.face_count, "m": matrix.prompt_count, "prompts": list(prompts)}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar))


def load_score_matrix(path) -> tuple[ScoreMatrix, list[str]]:
    path = Path(path)
    sidecar_path = path.with_suffix(path.suffix + ".json")
    if not path.exists() or not sidecar_path.exists():
        raise ParseError(f"score matrix dump incomplete at {path}")
    try:
        sidecar = json.loads(sidecar_path.read_text())
        f, m = int(sidecar["f"]), int(sidecar["m"])
        values = np.fromfile(path, dtype="<f8")
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if values.size != f * m:
        raise ParseError(f"{path}: expected {f * m} values, found {values.size}")
    return ScoreMatrix(values.reshape(f, m)), list(sidecar.get("prompts", []))
