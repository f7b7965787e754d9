"""Command-line front end: segment, grasp, eval, decompose, render-debug.

Exit codes: 0 success, 1 parse failure (missing/corrupt input files),
2 validation failure (inconsistent inputs or bad config), 3 empty result
(no grasp on the target part / no valid candidates).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .config import PipelineConfig, load_pipeline_config, load_yaml
from .decomp import build_ladder, builtin_decompose, save_decomposition
from .detect import PromptSet, load_detections, load_labels
from .errors import (
    BadQuaternion,
    DegenerateMesh,
    DimensionMismatch,
    EmptyInput,
    EmptySelection,
    IndexOutOfRange,
    LengthMismatch,
    NoValidGrasps,
    ParseError,
    UnknownPrompt,
    ViewMismatch,
)
from .experiment import (
    ExperimentConfig,
    report_table,
    run_experiment,
    run_threshold_sweep,
)
from .fusion import export_colored_ply, load_label_map, save_label_map
from .grasp import assign_parts, load_grasps, sample_antipodal, save_grasps, select_grasps
from .mesh import load_mesh
from .pipeline import run_segmentation
from .render import buffer_to_png, make_view_sphere, rasterize
from .scoring import save_score_matrix

log = logging.getLogger("partgrasp")

PARSE_ERRORS = (ParseError, BadQuaternion, IndexOutOfRange)
VALIDATION_ERRORS = (
    DegenerateMesh,
    ViewMismatch,
    DimensionMismatch,
    LengthMismatch,
    UnknownPrompt,
    ValueError,
)
EMPTY_ERRORS = (EmptySelection, NoValidGrasps, EmptyInput)


def _config_from_args(args) -> PipelineConfig:
    base = load_pipeline_config(args.config) if args.config else PipelineConfig()
    overrides = {
        "mesh_path": getattr(args, "mesh", None),
        "labels_path": getattr(args, "labels_gt", None),
        "variant": getattr(args, "policy", None),
        "seed": getattr(args, "seed", None),
        "workers": getattr(args, "workers", None),
        "target_prompt": getattr(args, "target", None),
        "top_k": getattr(args, "top_k", None),
    }
    return base.override(**overrides)


def _segment(config: PipelineConfig, out_dir: Path, debug: bool = False):
    if not config.mesh_path:
        raise ValueError("config needs mesh_path")
    if not config.prompts:
        raise ValueError("config needs a non-empty prompt list")
    mesh = load_mesh(config.mesh_path)
    prompts = PromptSet(config.prompts)

    detections = None
    gt = None
    if config.detection_source == "file":
        if not config.detection_path:
            raise ValueError("detection_source=file requires detection_path")
        detections = load_detections(config.detection_path, prompts, config.image_size)
    else:
        if not config.labels_path:
            raise ValueError("detection_source=mock requires labels_path (ground truth)")
        gt = load_labels(config.labels_path, mesh.face_count, len(prompts))

    result = run_segmentation(
        mesh,
        gt,
        len(prompts),
        seed=config.seed,
        view_count=config.view_count,
        image_size=config.image_size,
        noise=config.noise,
        th_min=config.th_min,
        th_max=config.th_max,
        th_step=config.th_step,
        decomposition_source=config.decomposition_source,
        variant=config.variant,
        rev_norm=config.rev_norm,
        workers=config.workers,
        detections=detections,
    )

    out_dir.mkdir(parents=True, exist_ok=True)
    labels_path = out_dir / "labels.json"
    save_label_map(labels_path, result.labels, list(prompts.prompts))
    export_colored_ply(out_dir / "labels.ply", mesh, result.labels)
    if debug:
        save_score_matrix(out_dir / "scores.bin", result.coarse, list(prompts.prompts))
        save_score_matrix(out_dir / "refined.bin", result.refined, list(prompts.prompts))
        for buffer in result.buffers:
            buffer_to_png(buffer, out_dir / f"view_{buffer.view_index:02d}.png")
    return mesh, prompts, result


def cmd_segment(args) -> int:
    config = _config_from_args(args)
    out_dir = Path(args.out_dir)
    _segment(config, out_dir, debug=args.debug)
    print(f"wrote {out_dir / 'labels.json'} and {out_dir / 'labels.ply'}")
    return 0


def cmd_grasp(args) -> int:
    config = _config_from_args(args)
    if not config.mesh_path:
        raise ValueError("config needs mesh_path")
    if not config.prompts:
        raise ValueError("config needs a non-empty prompt list")
    mesh = load_mesh(config.mesh_path)
    prompts = PromptSet(config.prompts)

    if args.labels:
        labels, _ = load_label_map(args.labels)
        if len(labels.label) != mesh.face_count:
            raise DimensionMismatch(
                f"{len(labels.label)} labels for {mesh.face_count} faces"
            )
    else:
        _, _, result = _segment(config, Path(args.out_dir), debug=False)
        labels = result.labels

    if config.target_prompt is None:
        raise ValueError("target_prompt is required (config key or --target)")
    target = prompts.index_of(config.target_prompt)

    if config.grasp_source == "file":
        if not config.grasp_path:
            raise ValueError("grasp_source=file requires grasp_path")
        candidates = load_grasps(config.grasp_path)
    else:
        candidates = sample_antipodal(
            mesh, config.grasp_count, config.max_width, config.seed
        )
    assignments = assign_parts(candidates, mesh, labels)
    selected = select_grasps(assignments, candidates, target, config.top_k)

    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_grasps(out_path, selected)
    print(f"wrote {len(selected)} grasps to {out_path}")
    return 0


def cmd_eval(args) -> int:
    data = load_yaml(args.config) if args.config else {}
    config = ExperimentConfig.from_dict(data)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if args.mode == "ablation":
        report = run_experiment(config)
        out_path.write_text(json.dumps(report, indent=2, sort_keys=True))
        print(report_table(report))
        print(f"report written to {out_path}")
    else:
        rows = run_threshold_sweep(config)
        with open(out_path, "w", newline="") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["threshold", "fusion_miou", "spreading_miou"]
            )
            writer.writeheader()
            writer.writerows(rows)
        print(f"sweep written to {out_path}")
    return 0


def cmd_decompose(args) -> int:
    mesh = load_mesh(args.mesh)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if args.ladder:
        ladder = build_ladder(mesh, args.th_min, args.th_max, args.step)
        out_path.mkdir(parents=True, exist_ok=True)
        for th, dec in zip(ladder.thresholds, ladder.decompositions):
            save_decomposition(out_path / f"th_{th:g}.json", dec)
        print(f"wrote {len(ladder)} decompositions to {out_path}")
    else:
        dec = builtin_decompose(mesh, args.threshold)
        save_decomposition(out_path, dec)
        print(f"wrote {dec.part_count} parts to {out_path}")
    return 0


def cmd_render_debug(args) -> int:
    mesh = load_mesh(args.mesh)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cameras = make_view_sphere(
        args.views, mesh, args.seed, image_size=(args.size, args.size)
    )
    for i, cam in enumerate(cameras):
        buffer = rasterize(mesh, cam, view_index=i)
        buffer_to_png(buffer, out_dir / f"view_{i:02d}.png")
    print(f"wrote {len(cameras)} face-id renders to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="partgrasp",
        description="Training-free mesh part segmentation and grasp-region selection",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_seg = sub.add_parser("segment", help="label mesh faces by prompt")
    p_seg.add_argument("--config", help="YAML pipeline config")
    p_seg.add_argument("--mesh", help="mesh path (overrides config)")
    p_seg.add_argument("--labels-gt", dest="labels_gt",
                       help="ground-truth labels JSON for mock detection")
    p_seg.add_argument("--policy", choices=["coarse", "coarse+fusion",
                                            "coarse+fineopt", "full", "spreading"])
    p_seg.add_argument("--seed", type=int)
    p_seg.add_argument("--workers", type=int)
    p_seg.add_argument("--out-dir", default="segment_out")
    p_seg.add_argument("--debug", action="store_true",
                       help="also dump score matrices and face-id PNGs")
    p_seg.set_defaults(func=cmd_segment)

    p_grasp = sub.add_parser("grasp", help="select top-k grasps on the target part")
    p_grasp.add_argument("--config", help="YAML pipeline config")
    p_grasp.add_argument("--mesh")
    p_grasp.add_argument("--labels", help="label map JSON from `segment`")
    p_grasp.add_argument("--labels-gt", dest="labels_gt")
    p_grasp.add_argument("--target", help="target prompt string")
    p_grasp.add_argument("--top-k", dest="top_k", type=int)
    p_grasp.add_argument("--policy", choices=["coarse", "coarse+fusion",
                                              "coarse+fineopt", "full", "spreading"])
    p_grasp.add_argument("--seed", type=int)
    p_grasp.add_argument("--workers", type=int)
    p_grasp.add_argument("--out", default="grasps.json")
    p_grasp.add_argument("--out-dir", default="segment_out",
                         help="where segmentation artifacts go if labels are not given")
    p_grasp.set_defaults(func=cmd_grasp)

    p_eval = sub.add_parser("eval", help="run the ablation or threshold sweep")
    p_eval.add_argument("--config", help="YAML experiment config")
    p_eval.add_argument("--mode", choices=["ablation", "sweep"], default="ablation")
    p_eval.add_argument("--out", default="report.json")
    p_eval.set_defaults(func=cmd_eval)

    p_dec = sub.add_parser("decompose", help="run the builtin decomposer")
    p_dec.add_argument("--mesh", required=True)
    p_dec.add_argument("--threshold", type=float, default=0.05)
    p_dec.add_argument("--ladder", action="store_true",
                       help="dump the whole threshold ladder into a directory")
    p_dec.add_argument("--th-min", dest="th_min", type=float, default=0.01)
    p_dec.add_argument("--th-max", dest="th_max", type=float, default=0.25)
    p_dec.add_argument("--step", type=float, default=0.01)
    p_dec.add_argument("--out", default="decomposition.json")
    p_dec.set_defaults(func=cmd_decompose)

    p_dbg = sub.add_parser("render-debug", help="dump face-id renders as PNG")
    p_dbg.add_argument("--mesh", required=True)
    p_dbg.add_argument("--views", type=int, default=10)
    p_dbg.add_argument("--size", type=int, default=512)
    p_dbg.add_argument("--seed", type=int, default=0)
    p_dbg.add_argument("--out-dir", default="render_debug")
    p_dbg.set_defaults(func=cmd_render_debug)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except PARSE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EMPTY_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
