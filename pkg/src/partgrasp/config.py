"""Pipeline configuration: one YAML document drives the CLI subcommands."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .detect import NoiseConfig
from .errors import ParseError
from .pipeline import VARIANTS


@dataclass(frozen=True)
class PipelineConfig:
    """Everything cmd_segment / cmd_grasp need; defaults follow the reference
    operating point (10 views, 512 px, thresholds 0.01-0.25 step 0.01, top-10)."""

    mesh_path: str = ""
    prompts: tuple[str, ...] = ()
    view_count: int = 10
    image_size: tuple[int, int] = (512, 512)
    th_min: float = 0.01
    th_max: float = 0.25
    th_step: float = 0.01
    rev_norm: str = "paper"
    detection_source: str = "mock"  # mock | file
    detection_path: str | None = None
    labels_path: str | None = None  # ground truth, required for mock detection
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    decomposition_source: str = "builtin"  # builtin | directory of th_*.json
    grasp_source: str = "antipodal"  # antipodal | file
    grasp_path: str | None = None
    grasp_count: int = 200
    max_width: float = 0.3
    target_prompt: str | None = None
    top_k: int = 10
    seed: int = 0
    variant: str = "full"
    workers: int = 1

    def __post_init__(self):
        if self.view_count < 1:
            raise ValueError("view_count must be >= 1")
        w, h = self.image_size
        if w < 16 or h < 16:
            raise ValueError("image_size must be at least 16x16")
        if not 0.0 < self.th_min <= self.th_max:
            raise ValueError("need 0 < th_min <= th_max")
        if self.th_step <= 0.0:
            raise ValueError("th_step must be positive")
        if self.rev_norm not in ("paper", "mean"):
            raise ValueError(f"rev_norm must be paper or mean, got {self.rev_norm!r}")
        if self.detection_source not in ("mock", "file"):
            raise ValueError(f"detection_source must be mock or file, got {self.detection_source!r}")
        if self.grasp_source not in ("antipodal", "file"):
            raise ValueError(f"grasp_source must be antipodal or file, got {self.grasp_source!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.grasp_count < 1:
            raise ValueError("grasp_count must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if isinstance(data.get("noise"), dict):
            data["noise"] = NoiseConfig(**data["noise"])
        if "prompts" in data:
            data["prompts"] = tuple(data["prompts"])
        if "image_size" in data:
            size = data["image_size"]
            data["image_size"] = (size, size) if isinstance(size, int) else tuple(size)
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["prompts"] = list(self.prompts)
        d["image_size"] = list(self.image_size)
        return d

    def override(self, **kwargs) -> "PipelineConfig":
        """New config with the non-None kwargs replacing current values."""
        data = self.to_dict()
        for key, value in kwargs.items():
            if value is not None:
                data[key] = value
        return PipelineConfig.from_dict(data)


def load_yaml(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ParseError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: invalid YAML: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ParseError(f"{path}: config must be a mapping")
    return data


def load_pipeline_config(path) -> PipelineConfig:
    return PipelineConfig.from_dict(load_yaml(path))
