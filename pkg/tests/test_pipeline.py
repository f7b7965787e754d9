"""End-to-end pipeline wiring: variant dispatch and worker-count determinism."""

import numpy as np
import pytest

from partgrasp import (
    NoiseConfig,
    ScoreMatrix,
    ThresholdLadder,
    UNKNOWN,
    build_ladder,
    builtin_decompose,
    fine_opt,
    multi_fusion,
    run_segmentation,
)
from partgrasp.pipeline import (
    VARIANTS,
    detect_all,
    label_variant,
    refine_scores,
    render_views,
)
from partgrasp.render import make_view_sphere

NOISE = NoiseConfig(jitter_frac=0.1, conf_noise=0.1, drop_prob=0.1,
                    spurious_rate=0.3)


@pytest.fixture(scope="module")
def segmented(hammer_fixture):
    return run_segmentation(
        hammer_fixture.mesh,
        hammer_fixture.labels,
        prompt_count=2,
        seed=0,
        view_count=4,
        image_size=(96, 96),
        noise=NOISE,
        th_min=0.01,
        th_max=0.25,
        th_step=0.06,
    )


class TestWorkerDeterminism:
    def test_results_identical_across_worker_counts(self, hammer_fixture,
                                                    segmented):
        threaded = run_segmentation(
            hammer_fixture.mesh,
            hammer_fixture.labels,
            prompt_count=2,
            seed=0,
            view_count=4,
            image_size=(96, 96),
            noise=NOISE,
            th_min=0.01,
            th_max=0.25,
            th_step=0.06,
            workers=3,
        )
        assert np.array_equal(threaded.coarse.values, segmented.coarse.values)
        assert np.array_equal(threaded.refined.values, segmented.refined.values)
        assert np.array_equal(threaded.labels.label, segmented.labels.label)
        assert threaded.detections == segmented.detections

    def test_render_views_preserves_view_order(self, hammer_fixture):
        cameras = make_view_sphere(5, hammer_fixture.mesh, 0,
                                   image_size=(64, 64))
        buffers = render_views(hammer_fixture.mesh, cameras, workers=4)
        assert [b.view_index for b in buffers] == list(range(5))
        serial = render_views(hammer_fixture.mesh, cameras, workers=1)
        for threaded, plain in zip(buffers, serial):
            assert np.array_equal(threaded.pixels, plain.pixels)

    def test_detect_all_concatenates_in_view_order(self, hammer_fixture):
        cameras = make_view_sphere(4, hammer_fixture.mesh, 0,
                                   image_size=(64, 64))
        buffers = render_views(hammer_fixture.mesh, cameras)
        serial = detect_all(buffers, hammer_fixture.labels, NOISE, 0,
                            prompt_count=2)
        threaded = detect_all(buffers, hammer_fixture.labels, NOISE, 0,
                              prompt_count=2, workers=3)
        assert serial == threaded
        views = [d.view_index for d in serial]
        assert views == sorted(views)


class TestVariantDispatch:
    def test_coarse_passthrough(self, hammer_fixture, segmented):
        ladder = segmented.ladder
        out = refine_scores(segmented.coarse, hammer_fixture.mesh, ladder,
                            variant="coarse")
        assert out is segmented.coarse

    def test_full_is_fusion_then_fineopt(self, hammer_fixture, segmented):
        mesh, ladder = hammer_fixture.mesh, segmented.ladder
        want = fine_opt(multi_fusion(segmented.coarse, mesh, ladder),
                        mesh, ladder.finest)
        got = refine_scores(segmented.coarse, mesh, ladder, variant="full")
        assert np.array_equal(got.values, want.values)
        assert np.array_equal(segmented.refined.values, want.values)

    def test_unknown_variant_rejected(self, hammer_fixture, segmented):
        with pytest.raises(ValueError, match="variant"):
            refine_scores(segmented.coarse, hammer_fixture.mesh,
                          segmented.ladder, variant="psychic")

    @pytest.mark.parametrize(
        "variant,source",
        [("coarse", "coarse"), ("coarse+fusion", "fused"),
         ("coarse+fineopt", "fused"), ("full", "fused"),
         ("spreading", "spread")],
    )
    def test_label_sources(self, hammer_fixture, segmented, variant, source):
        assert variant in VARIANTS
        labels = label_variant(segmented.coarse, hammer_fixture.mesh,
                               segmented.ladder, variant)
        assert labels.source == source


class TestInjectedArtifacts:
    def test_injected_detections_bypass_the_mock(self, hammer_fixture):
        result = run_segmentation(
            hammer_fixture.mesh,
            hammer_fixture.labels,
            prompt_count=2,
            seed=0,
            view_count=3,
            image_size=(64, 64),
            detections=[],
        )
        assert result.detections == []
        assert (result.coarse.values == 0.0).all()
        assert (result.labels.label == UNKNOWN).all()

    def test_injected_ladder_is_used_verbatim(self, hammer_fixture):
        mesh = hammer_fixture.mesh
        dec = builtin_decompose(mesh, 0.2)
        ladder = ThresholdLadder(thresholds=(0.2,), decompositions=(dec,))
        result = run_segmentation(
            hammer_fixture.mesh,
            hammer_fixture.labels,
            prompt_count=2,
            seed=0,
            view_count=3,
            image_size=(64, 64),
            ladder=ladder,
        )
        assert result.ladder is ladder

    def test_builtin_ladder_matches_build_ladder(self, hammer_fixture,
                                                 segmented):
        want = build_ladder(hammer_fixture.mesh, th_min=0.01, th_max=0.25,
                            step=0.06)
        assert segmented.ladder.thresholds == want.thresholds
        for got, ref in zip(segmented.ladder.decompositions,
                            want.decompositions):
            assert np.array_equal(got.part_of_face, ref.part_of_face)
