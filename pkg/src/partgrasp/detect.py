"""Bounding-box detection records: file ingestion and noisy synthesis.

The detector itself is an input boundary. Real detections arrive as JSON from
any external model; mock_detect manufactures them from ground-truth labels so
the whole pipeline can be exercised closed-loop.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import IndexOutOfRange, LengthMismatch, ParseError, UnknownPrompt
from .render import EMPTY, FaceIdBuffer

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PromptSet:
    """Ordered part-name prompts; index j in the score matrix is file order."""

    prompts: tuple[str, ...]

    def __init__(self, prompts):
        object.__setattr__(self, "prompts", tuple(prompts))
        if not self.prompts:
            raise ValueError("prompt set must be non-empty")
        if len(set(self.prompts)) != len(self.prompts):
            raise ValueError("prompt set contains duplicates")

    def __len__(self) -> int:
        return len(self.prompts)

    def index_of(self, prompt: str) -> int:
        try:
            return self.prompts.index(prompt)
        except ValueError:
            raise UnknownPrompt(f"prompt {prompt!r} not in {list(self.prompts)}") from None


@dataclass(frozen=True)
class Detection:
    view_index: int
    prompt_index: int
    bbox: tuple[float, float, float, float]  # x_min, y_min, x_max, y_max (exclusive max)
    confidence: float


@dataclass(frozen=True)
class GroundTruthLabels:
    """Per-face prompt indices aligned to mesh face order."""

    face_label: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.face_label, dtype=np.int64).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "face_label", arr)

    def validate(self, face_count: int, prompt_count: int) -> "GroundTruthLabels":
        if len(self.face_label) != face_count:
            raise LengthMismatch(
                f"{len(self.face_label)} labels for {face_count} faces"
            )
        if self.face_label.size and (
            self.face_label.min() < 0 or self.face_label.max() >= prompt_count
        ):
            bad = int(np.flatnonzero(
                (self.face_label < 0) | (self.face_label >= prompt_count)
            )[0])
            raise IndexOutOfRange(
                f"label {int(self.face_label[bad])} at face {bad} outside [0, {prompt_count})"
            )
        return self


@dataclass(frozen=True)
class NoiseConfig:
    """Corruption applied to synthesized detections; zeros mean a perfect detector."""

    jitter_frac: float = 0.0
    conf_noise: float = 0.0
    drop_prob: float = 0.0
    spurious_rate: float = 0.0
    min_pixels: int = 20


def _clip_bbox(bbox, w: int, h: int) -> tuple[float, float, float, float]:
    x0, y0, x1, y1 = (float(v) for v in bbox)
    return (
        min(max(x0, 0.0), float(w)),
        min(max(y0, 0.0), float(h)),
        min(max(x1, 0.0), float(w)),
        min(max(y1, 0.0), float(h)),
    )


def load_detections(path, prompt_set: PromptSet, image_size: tuple[int, int]) -> list[Detection]:
    """Read the detection JSON contract; clip boxes and drop empty ones.

    Schema: {"image_size":[w,h],"detections":[{"view":int,"prompt":str,
    "bbox":[x0,y0,x1,y1],"confidence":float}]}
    """
    path = Path(path)
    if not path.exists():
        raise ParseError(f"detection file not found: {path}")
    try:
        blob = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(blob, dict) or "detections" not in blob:
        raise ParseError(f"{path}: missing 'detections' key")

    w, h = image_size
    out: list[Detection] = []
    dropped = 0
    for k, rec in enumerate(blob["detections"]):
        try:
            view = int(rec["view"])
            prompt = rec["prompt"]
            bbox = [float(v) for v in rec["bbox"]]
            conf = float(rec["confidence"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: detection {k} malformed: {exc}") from exc
        if len(bbox) != 4:
            raise ParseError(f"{path}: detection {k} bbox needs 4 numbers")
        if not 0.0 <= conf <= 1.0:
            raise ParseError(f"{path}: detection {k} confidence {conf} outside [0, 1]")
        prompt_index = prompt_set.index_of(prompt)
        clipped = _clip_bbox(bbox, w, h)
        if clipped[0] >= clipped[2] or clipped[1] >= clipped[3]:
            dropped += 1
            continue
        out.append(Detection(view, prompt_index, clipped, conf))
    if dropped:
        log.warning("%s: dropped %d zero-area detections after clipping", path, dropped)
    return out


def save_detections(path, detections: list[Detection], prompt_set: PromptSet,
                    image_size: tuple[int, int]) -> None:
    blob = {
        "image_size": list(image_size),
        "detections": [
            {
                "view": d.view_index,
                "prompt": prompt_set.prompts[d.prompt_index],
                "bbox": list(d.bbox),
                "confidence": d.confidence,
            }
            for d in detections
        ],
    }
    Path(path).write_text(json.dumps(blob, indent=2))


def load_labels(path, face_count: int | None = None,
                prompt_count: int | None = None) -> GroundTruthLabels:
    """Read {"labels":[int,...]} aligned to face order."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"label file not found: {path}")
    try:
        blob = json.loads(path.read_text())
        labels = np.asarray(blob["labels"], dtype=np.int64)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    gt = GroundTruthLabels(labels)
    if face_count is not None and prompt_count is not None:
        gt.validate(face_count, prompt_count)
    return gt


def mock_detect(
    buffer: FaceIdBuffer,
    labels: GroundTruthLabels,
    noise: NoiseConfig,
    seed: int,
    prompt_count: int | None = None,
) -> list[Detection]:
    """Synthesize detections for one view from ground truth, then corrupt them.

    Detections are instance-level, the way open-vocabulary detectors emit
    them: each 8-connected pixel blob of a prompt with at least
    noise.min_pixels visible pixels yields its own tight bbox at confidence
    1.0 (two objects of the same prompt produce two boxes, never one box
    spanning the gap between them). Noise jitters corners by +/- jitter_frac
    x the box side, scales confidence by U[1-conf_noise, 1], drops
    detections with drop_prob, and appends Poisson(spurious_rate) spurious
    boxes at confidence <= 0.3. The random stream is keyed on
    (seed, view_index) so views corrupt independently of scheduling.
    """
    face_label = labels.face_label
    m = int(prompt_count) if prompt_count is not None else int(face_label.max()) + 1
    w, h = buffer.image_size
    rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, buffer.view_index])

    covered = buffer.pixels != EMPTY
    pixel_prompt = np.full(buffer.pixels.shape, -1, dtype=np.int64)
    pixel_prompt[covered] = face_label[buffer.pixels[covered]]

    eight = np.ones((3, 3), dtype=bool)
    out: list[Detection] = []
    for j in range(m):
        blobs, blob_count = ndimage.label(pixel_prompt == j, structure=eight)
        for blob_id in range(1, blob_count + 1):
            ys, xs = np.nonzero(blobs == blob_id)
            if len(xs) < noise.min_pixels:
                continue
            # tight inclusive-exclusive bbox of the instance's pixels
            bx0, bx1 = float(xs.min()), float(xs.max()) + 1.0
            by0, by1 = float(ys.min()), float(ys.max()) + 1.0

            jit = rng.uniform(-1.0, 1.0, size=4)
            side_x = (bx1 - bx0) * noise.jitter_frac
            side_y = (by1 - by0) * noise.jitter_frac
            bbox = _clip_bbox(
                (bx0 + jit[0] * side_x, by0 + jit[1] * side_y,
                 bx1 + jit[2] * side_x, by1 + jit[3] * side_y),
                w, h,
            )
            conf = 1.0 * rng.uniform(1.0 - noise.conf_noise, 1.0)
            dropped = rng.random() < noise.drop_prob
            if dropped or bbox[0] >= bbox[2] or bbox[1] >= bbox[3]:
                continue
            out.append(Detection(buffer.view_index, j, bbox, float(min(conf, 1.0))))

    for _ in range(int(rng.poisson(noise.spurious_rate))):
        xs = np.sort(rng.uniform(0.0, w, size=2))
        ys = np.sort(rng.uniform(0.0, h, size=2))
        x0, x1 = float(xs[0]), float(max(xs[1], min(xs[0] + 1.0, w)))
        y0, y1 = float(ys[0]), float(max(ys[1], min(ys[0] + 1.0, h)))
        prompt = int(rng.integers(0, m))
        conf = 0.3 * (1.0 - rng.random())  # in (0, 0.3]
        out.append(Detection(buffer.view_index, prompt, (x0, y0, x1, y1), conf))
    return out
