"""YAML-backed pipeline and experiment configuration."""

import pytest

from partgrasp import ExperimentConfig, NoiseConfig, ParseError
from partgrasp.config import PipelineConfig, load_pipeline_config, load_yaml


def write_yaml(tmp_path, text, name="config.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadYaml:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError, match="not found"):
            load_yaml(tmp_path / "absent.yaml")

    def test_invalid_yaml(self, tmp_path):
        path = write_yaml(tmp_path, "prompts: [unclosed\n")
        with pytest.raises(ParseError, match="invalid YAML"):
            load_yaml(path)

    def test_non_mapping_rejected(self, tmp_path):
        path = write_yaml(tmp_path, "- just\n- a\n- list\n")
        with pytest.raises(ParseError, match="mapping"):
            load_yaml(path)

    def test_empty_file_is_empty_mapping(self, tmp_path):
        path = write_yaml(tmp_path, "")
        assert load_yaml(path) == {}


class TestPipelineConfig:
    def test_defaults(self):
        config = PipelineConfig()
        assert config.view_count == 10
        assert config.image_size == (512, 512)
        assert (config.th_min, config.th_max, config.th_step) == (0.01, 0.25, 0.01)
        assert config.noise == NoiseConfig()
        assert config.variant == "full"

    def test_load_from_yaml(self, tmp_path):
        path = write_yaml(
            tmp_path,
            "\n".join([
                "mesh_path: mesh.obj",
                "prompts: [handle, head]",
                "view_count: 6",
                "image_size: 128",
                "noise:",
                "  jitter_frac: 0.15",
                "  drop_prob: 0.2",
                "target_prompt: handle",
                "seed: 3",
            ]),
        )
        config = load_pipeline_config(path)
        assert config.mesh_path == "mesh.obj"
        assert config.prompts == ("handle", "head")
        assert config.image_size == (128, 128)
        assert config.noise == NoiseConfig(jitter_frac=0.15, drop_prob=0.2)
        assert config.seed == 3

    def test_rectangular_image_size(self, tmp_path):
        path = write_yaml(tmp_path, "image_size: [192, 96]\n")
        assert load_pipeline_config(path).image_size == (192, 96)

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError, match="unknown config keys.*resolution"):
            PipelineConfig.from_dict({"resolution": 512})

    @pytest.mark.parametrize(
        "overrides",
        [
            {"view_count": 0},
            {"image_size": (8, 64)},
            {"th_min": 0.0},
            {"th_min": 0.3, "th_max": 0.2},
            {"th_step": 0.0},
            {"rev_norm": "median"},
            {"detection_source": "oracle"},
            {"grasp_source": "magic"},
            {"variant": "turbo"},
            {"top_k": 0},
            {"grasp_count": 0},
            {"workers": 0},
        ],
    )
    def test_validation_rejects(self, overrides):
        with pytest.raises(ValueError):
            PipelineConfig(**overrides)

    def test_override_replaces_only_non_none(self):
        base = PipelineConfig(mesh_path="a.obj", seed=1, top_k=5)
        out = base.override(seed=9, mesh_path=None, workers=4)
        assert out.seed == 9
        assert out.mesh_path == "a.obj"
        assert out.workers == 4
        assert out.top_k == 5
        assert base.seed == 1  # original untouched

    def test_round_trip_through_dict(self):
        base = PipelineConfig(
            prompts=("a", "b"), image_size=(64, 48),
            noise=NoiseConfig(spurious_rate=0.5),
        )
        again = PipelineConfig.from_dict(base.to_dict())
        assert again == base


class TestExperimentConfig:
    def test_defaults_have_zero_noise(self):
        config = ExperimentConfig()
        assert config.noise == NoiseConfig(
            jitter_frac=0.0, conf_noise=0.0, drop_prob=0.0, spurious_rate=0.0
        )
        assert config.fixture_count == 50
        assert config.image_size == (192, 192)

    def test_from_dict_round_trip(self):
        base = ExperimentConfig(
            fixture_count=4, image_size=(96, 96),
            noise=NoiseConfig(jitter_frac=0.1),
            archetypes=("mug", "hammer"),
        )
        again = ExperimentConfig.from_dict(base.to_dict())
        assert again == base

    def test_from_dict_coercions(self):
        config = ExperimentConfig.from_dict(
            {"image_size": 64, "archetypes": ["knife"], "variants": ["coarse"],
             "noise": {"drop_prob": 0.2}}
        )
        assert config.image_size == (64, 64)
        assert config.archetypes == ("knife",)
        assert config.variants == ("coarse",)
        assert config.noise.drop_prob == 0.2

    @pytest.mark.parametrize(
        "overrides",
        [
            {"variants": ("coarse", "psychic")},
            {"archetypes": ("mug", "teapot")},
            {"decomposition_source": "oracle"},
            {"fixture_count": 0},
        ],
    )
    def test_validation_rejects(self, overrides):
        with pytest.raises(ValueError):
            ExperimentConfig(**overrides)

    def test_hash_is_stable_and_sensitive(self):
        a = ExperimentConfig()
        b = ExperimentConfig()
        c = ExperimentConfig(base_seed=1)
        assert a.hash() == b.hash()
        assert a.hash() != c.hash()
        assert len(a.hash()) == 16
        int(a.hash(), 16)  # hex digest prefix
