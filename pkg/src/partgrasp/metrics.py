"""Evaluation metrics: segmentation mIoU, part-selection accuracy, pose spread."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detect import GroundTruthLabels
from .errors import EmptyInput, LengthMismatch
from .fusion import UNKNOWN, LabelMap


@dataclass(frozen=True)
class SegMetrics:
    per_label_iou: np.ndarray
    miou: float
    unknown_fraction: float


@dataclass(frozen=True)
class GraspMetrics:
    part_sel: float
    pose_variance: float


def miou(
    pred: LabelMap,
    truth: GroundTruthLabels,
    weighting: str = "face_area",
    face_areas: np.ndarray | None = None,
    prompt_count: int | None = None,
) -> SegMetrics:
    """Mean IoU over the labels present in ground truth.

    Each face contributes its area (default) or one count to intersections
    and unions; UNKNOWN predictions match no label, so they count against
    every union they appear in. Accepts LabelMap/GroundTruthLabels or any
    integer array-likes.
    """
    p = np.asarray(getattr(pred, "label", pred), dtype=np.int64).reshape(-1)
    t = np.asarray(getattr(truth, "face_label", truth), dtype=np.int64).reshape(-1)
    if len(p) != len(t):
        raise LengthMismatch(f"{len(p)} predictions for {len(t)} truth labels")
    if weighting == "face_area":
        if face_areas is None:
            raise ValueError("face_area weighting requires face_areas")
        w = np.asarray(face_areas, dtype=np.float64)
        if len(w) != len(t):
            raise LengthMismatch(f"{len(w)} areas for {len(t)} faces")
    elif weighting == "face_count":
        w = np.ones(len(t), dtype=np.float64)
    else:
        raise ValueError(f"weighting must be 'face_area' or 'face_count', got {weighting!r}")

    m = int(prompt_count) if prompt_count is not None else int(
        max(t.max(initial=-1), p.max(initial=-1)) + 1
    )
    m = max(m, 1)
    per_label = np.zeros(m, dtype=np.float64)
    for j in range(m):
        inter = float(w[(p == j) & (t == j)].sum())
        union = float(w[(p == j) | (t == j)].sum())
        per_label[j] = inter / union if union > 0.0 else 0.0

    present = np.unique(t)
    present = present[(present >= 0) & (present < m)]
    mean = float(per_label[present].mean()) if len(present) else 0.0
    total = float(w.sum())
    unknown = float(w[p == UNKNOWN].sum()) / total if total > 0.0 else 0.0
    return SegMetrics(per_label_iou=per_label, miou=mean, unknown_fraction=unknown)


def part_selection_accuracy(results: list[bool]) -> float:
    """Fraction of fixtures whose top-ranked grasp landed on the target part.

    Callers record an EmptySelection outcome as False before calling.
    """
    if not results:
        raise EmptyInput("no selection outcomes to aggregate")
    return float(sum(bool(r) for r in results)) / len(results)


def canonicalize_quaternions(quats: np.ndarray) -> np.ndarray:
    """Resolve the double cover: flip each quaternion so its first nonzero
    component is positive (w >= 0, exact-zero w handled by the next component)."""
    q = np.asarray(quats, dtype=np.float64).reshape(-1, 4).copy()
    for row in q:
        nz = np.flatnonzero(row != 0.0)
        if len(nz) and row[nz[0]] < 0.0:
            row *= -1.0
    return q


def quaternion_variance(grasps) -> float:
    """Sum of per-component population variances after sign canonicalization.

    Accepts GraspCandidates or raw (w,x,y,z) arrays; q and -q are the same
    rotation and contribute identically.
    """
    if len(grasps) == 0:
        raise EmptyInput("no grasps to measure")
    quats = np.stack([np.asarray(getattr(g, "orientation", g), dtype=np.float64)
                      for g in grasps])
    q = canonicalize_quaternions(quats)
    return float(q.var(axis=0, ddof=0).sum())
