"""Desk-scale experiment harness: ablations over pipeline variants and the
fusion-versus-spreading threshold sweep, on seeded synthetic fixtures."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .decomp import DecompositionTree, dedup_ladder, sweep_thresholds, ThresholdLadder
from .detect import NoiseConfig
from .errors import NoValidGrasps
from .fixtures import ARCHETYPES, Fixture, construction_decomposition, make_fixture
from .fusion import argmax_labels, fine_opt, geo_spreading, multi_fusion
from .grasp import GraspCandidate, PartAssignment, assign_parts, sample_antipodal
from .metrics import miou, part_selection_accuracy, quaternion_variance
from .pipeline import VARIANTS, detect_all, label_variant, render_views
from .render import make_view_sphere
from .scoring import coarse_scores


@dataclass(frozen=True)
class ExperimentConfig:
    archetypes: tuple[str, ...] = ARCHETYPES
    fixture_count: int = 50
    base_seed: int = 0
    cell: float = 0.05
    view_count: int = 10
    image_size: tuple[int, int] = (192, 192)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    variants: tuple[str, ...] = VARIANTS
    th_min: float = 0.01
    th_max: float = 0.25
    th_step: float = 0.01
    rev_norm: str = "paper"
    decomposition_source: str = "builtin"  # or "construction"
    grasp_count: int = 200
    max_width: float = 0.3
    top_k: int = 10
    workers: int = 1

    def __post_init__(self):
        unknown = set(self.variants) - set(VARIANTS)
        if unknown:
            raise ValueError(f"unknown variants {sorted(unknown)}; choose from {VARIANTS}")
        bad = set(self.archetypes) - set(ARCHETYPES)
        if bad:
            raise ValueError(f"unknown archetypes {sorted(bad)}; choose from {ARCHETYPES}")
        if self.decomposition_source not in ("builtin", "construction"):
            raise ValueError(
                f"decomposition_source must be builtin or construction, "
                f"got {self.decomposition_source!r}"
            )
        if self.fixture_count < 1:
            raise ValueError("fixture_count must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["archetypes"] = list(self.archetypes)
        d["image_size"] = list(self.image_size)
        d["variants"] = list(self.variants)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if "noise" in data and isinstance(data["noise"], dict):
            data["noise"] = NoiseConfig(**data["noise"])
        for key in ("archetypes", "variants"):
            if key in data:
                data[key] = tuple(data[key])
        if "image_size" in data:
            size = data["image_size"]
            data["image_size"] = (size, size) if isinstance(size, int) else tuple(size)
        return cls(**data)

    def hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()
        ).hexdigest()[:16]


def experiment_fixtures(config: ExperimentConfig) -> list[Fixture]:
    return [
        make_fixture(
            config.archetypes[i % len(config.archetypes)],
            config.base_seed + i,
            cell=config.cell,
        )
        for i in range(config.fixture_count)
    ]


def rank_on_target(
    assignments: list[PartAssignment],
    candidates: list[GraspCandidate],
    target_prompt: int,
) -> list[int]:
    """Candidate indices on the target part, best confidence first (stable)."""
    idxs = [a.candidate_index for a in assignments if a.part_label == target_prompt]
    return sorted(idxs, key=lambda i: -candidates[i].confidence)


def _fixture_ladder(fixture: Fixture, config: ExperimentConfig) -> ThresholdLadder:
    if config.decomposition_source == "construction":
        dec = construction_decomposition(fixture, threshold=config.th_min)
        return ThresholdLadder(thresholds=(config.th_min,), decompositions=(dec,))
    thresholds = sweep_thresholds(config.th_min, config.th_max, config.th_step)
    tree = DecompositionTree(fixture.mesh, thresholds[0])
    return dedup_ladder(thresholds, [tree.cut(th) for th in thresholds])


def _prepare(fixture: Fixture, config: ExperimentConfig):
    """Render, detect, and score one fixture (shared across variants)."""
    mesh = fixture.mesh
    cameras = make_view_sphere(
        config.view_count, mesh, fixture.seed, image_size=config.image_size
    )
    buffers = render_views(mesh, cameras)
    detections = detect_all(
        buffers, fixture.labels, config.noise, fixture.seed,
        prompt_count=len(fixture.prompts),
    )
    scores = coarse_scores(mesh, buffers, detections, len(fixture.prompts))
    ladder = _fixture_ladder(fixture, config)
    return scores, ladder


def evaluate_fixture(fixture: Fixture, config: ExperimentConfig) -> dict:
    """Per-variant segmentation and grasp metrics for one fixture."""
    mesh = fixture.mesh
    scores, ladder = _prepare(fixture, config)
    try:
        candidates = sample_antipodal(
            mesh, config.grasp_count, config.max_width, fixture.seed
        )
    except NoValidGrasps:
        candidates = []

    truth = fixture.labels.face_label
    target = fixture.target_prompt
    out = {
        "archetype": fixture.archetype,
        "seed": fixture.seed,
        "miou": {},
        "unknown": {},
        "sel_ok": {},
        "pose_var": {},
    }
    for variant in config.variants:
        labels = label_variant(scores, mesh, ladder, variant, config.rev_norm)
        seg = miou(
            labels, fixture.labels,
            weighting="face_area", face_areas=mesh.face_area,
            prompt_count=len(fixture.prompts),
        )
        out["miou"][variant] = seg.miou
        out["unknown"][variant] = seg.unknown_fraction

        sel_ok, pose_var = False, None
        if candidates:
            assignments = assign_parts(candidates, mesh, labels)
            ranked = rank_on_target(assignments, candidates, target)
            if ranked:
                top_face = assignments[ranked[0]].face_index
                sel_ok = bool(truth[top_face] == target)
                selected = [candidates[i] for i in ranked[: config.top_k]]
                pose_var = quaternion_variance(selected)
        out["sel_ok"][variant] = sel_ok
        out["pose_var"][variant] = pose_var
    return out


def run_experiment(config: ExperimentConfig) -> dict:
    """Evaluate every fixture under every variant and aggregate."""
    fixtures = experiment_fixtures(config)
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(lambda f: evaluate_fixture(f, config), fixtures))
    else:
        records = [evaluate_fixture(f, config) for f in fixtures]

    variants_report = []
    for variant in config.variants:
        mious = np.array([r["miou"][variant] for r in records])
        sel = [r["sel_ok"][variant] for r in records]
        pose = [r["pose_var"][variant] for r in records if r["pose_var"][variant] is not None]
        variants_report.append(
            {
                "name": variant,
                "miou_mean": float(mious.mean()),
                "miou_std": float(mious.std(ddof=0)),
                "part_sel": part_selection_accuracy(sel),
                "pose_var": float(np.mean(pose)) if pose else 0.0,
            }
        )
    return {
        "config_hash": config.hash(),
        "variants": variants_report,
        "fixtures": records,
    }


def report_table(report: dict) -> str:
    """Fixed-width human-readable summary of a run_experiment report."""
    lines = [
        f"{'variant':<16} {'miou_mean':>10} {'miou_std':>10} {'part_sel':>9} {'pose_var':>9}",
        "-" * 58,
    ]
    for row in report["variants"]:
        lines.append(
            f"{row['name']:<16} {row['miou_mean']:>10.4f} {row['miou_std']:>10.4f} "
            f"{row['part_sel']:>9.3f} {row['pose_var']:>9.4f}"
        )
    return "\n".join(lines)


def run_threshold_sweep(config: ExperimentConfig) -> list[dict]:
    """Mean mIoU of the fusion policy vs. spreading at every finest threshold.

    For each fixture the decomposition tree is cut once per swept threshold;
    the ladder for finest threshold th_f is the deduped tail of the sweep
    starting at th_f.
    """
    if config.decomposition_source != "builtin":
        raise ValueError("threshold sweep requires the builtin decomposer")
    thresholds = sweep_thresholds(config.th_min, config.th_max, config.th_step)
    fixtures = experiment_fixtures(config)

    def per_fixture(fixture: Fixture) -> tuple[list[float], list[float]]:
        mesh = fixture.mesh
        cameras = make_view_sphere(
            config.view_count, mesh, fixture.seed, image_size=config.image_size
        )
        buffers = render_views(mesh, cameras)
        detections = detect_all(
            buffers, fixture.labels, config.noise, fixture.seed,
            prompt_count=len(fixture.prompts),
        )
        scores = coarse_scores(mesh, buffers, detections, len(fixture.prompts))
        tree = DecompositionTree(mesh, thresholds[0])
        cuts = [tree.cut(th) for th in thresholds]
        fused_by_th, spread_by_th = [], []
        for k in range(len(thresholds)):
            ladder = dedup_ladder(thresholds[k:], cuts[k:])
            fused = fine_opt(
                multi_fusion(scores, mesh, ladder, rev_norm=config.rev_norm),
                mesh, ladder.finest,
            )
            spread = geo_spreading(scores, mesh, ladder)
            for matrix, sink, source in (
                (fused, fused_by_th, "fused"),
                (spread, spread_by_th, "spread"),
            ):
                seg = miou(
                    argmax_labels(matrix, source=source), fixture.labels,
                    weighting="face_area", face_areas=mesh.face_area,
                    prompt_count=len(fixture.prompts),
                )
                sink.append(seg.miou)
        return fused_by_th, spread_by_th

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(per_fixture, fixtures))
    else:
        results = [per_fixture(f) for f in fixtures]

    fused_all = np.array([r[0] for r in results])
    spread_all = np.array([r[1] for r in results])
    return [
        {
            "threshold": thresholds[k],
            "fusion_miou": float(fused_all[:, k].mean()),
            "spreading_miou": float(spread_all[:, k].mean()),
        }
        for k in range(len(thresholds))
    ]
