#!/usr/bin/env python3
"""Write a ready-to-run demo workspace for the command-line interface.

Produces, in the target directory (default ``demo/``):

* ``hammer.obj``      — a procedurally built hammer mesh;
* ``gt_labels.json``  — its per-face ground-truth prompt labels;
* ``config.yaml``     — a pipeline config wired to the two files above,
  with mild detector noise so the refinement stage has work to do.

Afterwards ``partgrasp segment --config demo/config.yaml --out-dir demo/out``
and ``partgrasp grasp --config demo/config.yaml --out-dir demo/out`` run
end to end.
"""

import argparse
import json
import sys
from pathlib import Path

from partgrasp import TriMesh, make_fixture


def write_obj(path: Path, mesh: TriMesh) -> None:
    """Full-precision OBJ dump (repr round-trips float64 exactly)."""
    with open(path, "w") as f:
        for v in mesh.vertices:
            f.write(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
        for a, b, c in mesh.faces:
            f.write(f"f {a + 1} {b + 1} {c + 1}\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", type=Path, default=Path("demo"))
    parser.add_argument("--archetype", default="hammer")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    fixture = make_fixture(args.archetype, seed=args.seed)
    args.out_dir.mkdir(parents=True, exist_ok=True)

    mesh_path = args.out_dir / f"{args.archetype}.obj"
    write_obj(mesh_path, fixture.mesh)
    labels_path = args.out_dir / "gt_labels.json"
    labels_path.write_text(json.dumps(
        {"labels": [int(v) for v in fixture.labels.face_label]}))

    prompts = ", ".join(fixture.prompts.prompts)
    target = fixture.prompts.prompts[fixture.target_prompt]
    config_path = args.out_dir / "config.yaml"
    config_path.write_text("\n".join([
        f"mesh_path: {mesh_path}",
        f"labels_path: {labels_path}",
        f"prompts: [{prompts}]",
        "view_count: 8",
        "image_size: 192",
        "th_min: 0.01",
        "th_max: 0.25",
        "th_step: 0.02",
        "noise: {jitter_frac: 0.1, conf_noise: 0.1, drop_prob: 0.1, spurious_rate: 0.3}",
        "grasp_count: 100",
        "max_width: 0.3",
        f"target_prompt: {target}",
        "top_k: 5",
        "seed: 0",
        "",
    ]))

    print(f"wrote {mesh_path} ({fixture.mesh.face_count} faces), "
          f"{labels_path}, {config_path}")
    print(f"try: partgrasp segment --config {config_path} "
          f"--out-dir {args.out_dir / 'out'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
