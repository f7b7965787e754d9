"""Score refinement over decomposition ladders, and final labeling.

Two policies operate on the coarse score matrix:

* fusion: every face's row gains its part's doubly-normalized area-weighted
  relevance vector, summed across all ladder thresholds against the ORIGINAL
  matrix, optionally followed by the fine-grained pass that replaces each row
  with its finest part's unnormalized area-weighted aggregate so parts label
  uniformly.
* spreading: sequential fine-to-coarse propagation where each threshold's
  additive term is computed from a snapshot of the matrix state before that
  threshold.

All aggregations run over faces in ascending index order so results are
reproducible bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .decomp import Decomposition, ThresholdLadder
from .errors import DimensionMismatch
from .mesh import TriMesh
from .scoring import ScoreMatrix

UNKNOWN = -1

LABEL_SOURCES = ("coarse", "fused", "spread")

# 16-entry palette for colored exports; UNKNOWN renders gray
_PALETTE = np.array(
    [
        (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200),
        (245, 130, 48), (145, 30, 180), (70, 240, 240), (240, 50, 230),
        (210, 245, 60), (250, 190, 212), (0, 128, 128), (220, 190, 255),
        (170, 110, 40), (255, 250, 200), (128, 0, 0), (170, 255, 195),
    ],
    dtype=np.uint8,
)
_UNKNOWN_COLOR = np.array((128, 128, 128), dtype=np.uint8)


@dataclass(frozen=True)
class PartScore:
    part_index: int
    threshold: float
    score: np.ndarray


@dataclass(frozen=True)
class LabelMap:
    """Per-face prompt index, UNKNOWN where no evidence reached the face."""

    label: np.ndarray
    source: str

    def __post_init__(self):
        arr = np.asarray(self.label, dtype=np.int64).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "label", arr)
        if self.source not in LABEL_SOURCES:
            raise ValueError(f"source must be one of {LABEL_SOURCES}, got {self.source!r}")


def _check_alignment(scores: ScoreMatrix, mesh: TriMesh,
                     decomposition: Decomposition) -> None:
    if scores.face_count != mesh.face_count:
        raise DimensionMismatch(
            f"score matrix has {scores.face_count} rows for {mesh.face_count} faces"
        )
    if len(decomposition.part_of_face) != mesh.face_count:
        raise DimensionMismatch(
            f"decomposition covers {len(decomposition.part_of_face)} faces, "
            f"mesh has {mesh.face_count}"
        )


def _part_sums(values: np.ndarray, area: np.ndarray, part: np.ndarray,
               part_count: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-part (sum of area*row, sum of area, face count), face order fixed."""
    weighted = np.empty((part_count, values.shape[1]), dtype=np.float64)
    for j in range(values.shape[1]):
        weighted[:, j] = np.bincount(part, weights=area * values[:, j],
                                     minlength=part_count)
    part_area = np.bincount(part, weights=area, minlength=part_count)
    sizes = np.bincount(part, minlength=part_count)
    return weighted, part_area, sizes


def _relevance_rows(values: np.ndarray, area: np.ndarray, part: np.ndarray,
                    part_count: int, rev_norm: str) -> np.ndarray:
    weighted, part_area, sizes = _part_sums(values, area, part, part_count)
    if rev_norm == "paper":
        denom = sizes * part_area
    elif rev_norm == "mean":
        denom = part_area
    else:
        raise ValueError(f"rev_norm must be 'paper' or 'mean', got {rev_norm!r}")
    safe = np.where(denom > 0.0, denom, 1.0)
    rows = weighted / safe[:, None]
    rows[denom <= 0.0] = 0.0
    return rows


def part_relevance(
    scores: ScoreMatrix,
    mesh: TriMesh,
    decomposition: Decomposition,
    rev_norm: str = "paper",
) -> list[PartScore]:
    """Area-weighted relevance of each part, divided again by its face count.

    The extra division by part size is deliberate (config rev_norm="mean"
    restores a plain area-weighted mean); zero-area parts score zero.
    """
    _check_alignment(scores, mesh, decomposition)
    rows = _relevance_rows(
        scores.values, mesh.face_area, decomposition.part_of_face,
        decomposition.part_count, rev_norm,
    )
    return [
        PartScore(part_index=k, threshold=decomposition.threshold, score=rows[k])
        for k in range(decomposition.part_count)
    ]


def multi_fusion(
    scores: ScoreMatrix,
    mesh: TriMesh,
    ladder: ThresholdLadder,
    rev_norm: str = "paper",
) -> ScoreMatrix:
    """Add every threshold's part-relevance vector to its member faces' rows.

    All thresholds read the original matrix; the input is not modified.
    """
    out = scores.values.copy()
    for dec in ladder.decompositions:
        _check_alignment(scores, mesh, dec)
        rows = _relevance_rows(
            scores.values, mesh.face_area, dec.part_of_face, dec.part_count, rev_norm
        )
        out += rows[dec.part_of_face]
    return ScoreMatrix(out)


def fine_opt(scores: ScoreMatrix, mesh: TriMesh, finest: Decomposition) -> ScoreMatrix:
    """Replace each row with its finest part's unnormalized area-weighted sum.

    Output rows are exactly constant within every part, which is what makes
    whole parts carry a single label downstream.
    """
    _check_alignment(scores, mesh, finest)
    weighted, _, _ = _part_sums(
        scores.values, mesh.face_area, finest.part_of_face, finest.part_count
    )
    return ScoreMatrix(weighted[finest.part_of_face])


def geo_spreading(
    scores: ScoreMatrix,
    mesh: TriMesh,
    ladder: ThresholdLadder,
) -> ScoreMatrix:
    """Sequential fine-to-coarse propagation (the comparison policy).

    At each threshold every face gains its part's area-weighted mean row —
    taken from the matrix state before that threshold — divided by the ladder
    length; later thresholds therefore see earlier updates.
    """
    ladder_len = len(ladder)
    out = scores.values.copy()
    for dec in ladder.decompositions:
        _check_alignment(scores, mesh, dec)
        weighted, part_area, _ = _part_sums(
            out, mesh.face_area, dec.part_of_face, dec.part_count
        )
        denom = ladder_len * part_area
        safe = np.where(denom > 0.0, denom, 1.0)
        rows = weighted / safe[:, None]
        rows[denom <= 0.0] = 0.0
        out += rows[dec.part_of_face]
    return ScoreMatrix(out)


def argmax_labels(scores: ScoreMatrix, source: str = "coarse") -> LabelMap:
    """Row-wise argmax; ties go to the lowest prompt index, all-zero rows to UNKNOWN."""
    values = scores.values
    label = np.argmax(values, axis=1).astype(np.int64)
    label[(values == 0.0).all(axis=1)] = UNKNOWN
    return LabelMap(label=label, source=source)


def load_label_map(path) -> tuple[LabelMap, list[str]]:
    from .errors import ParseError

    path = Path(path)
    if not path.exists():
        raise ParseError(f"label map file not found: {path}")
    try:
        blob = json.loads(path.read_text())
        labels = np.asarray(blob["labels"], dtype=np.int64)
        source = blob.get("source", "coarse")
        prompts = list(blob.get("prompts", []))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return LabelMap(label=labels, source=source), prompts


def save_label_map(path, labels: LabelMap, prompts: list[str]) -> None:
    Path(path).write_text(
        json.dumps(
            {
                "labels": labels.label.tolist(),
                "prompts": list(prompts),
                "source": labels.source,
            }
        )
    )


def export_colored_ply(path, mesh: TriMesh, labels: LabelMap) -> None:
    """ASCII PLY with per-face colors from the fixed palette."""
    if len(labels.label) != mesh.face_count:
        raise DimensionMismatch(
            f"{len(labels.label)} labels for {mesh.face_count} faces"
        )
    colors = np.where(
        (labels.label >= 0)[:, None],
        _PALETTE[labels.label % len(_PALETTE)],
        _UNKNOWN_COLOR,
    )
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(mesh.vertices)}",
        "property double x",
        "property double y",
        "property double z",
        f"element face {mesh.face_count}",
        "property list uchar int vertex_indices",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
        "end_header",
    ]
    lines.extend(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}" for v in mesh.vertices)
    lines.extend(
        f"3 {f[0]} {f[1]} {f[2]} {c[0]} {c[1]} {c[2]}"
        for f, c in zip(mesh.faces, colors)
    )
    Path(path).write_text("\n".join(lines) + "\n")
