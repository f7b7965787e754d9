"""Training-free mesh part segmentation and grasp-region selection.

Faces are scored by back-projecting 2D bounding-box detections from many
viewpoints, refined with convexity-guided score fusion over a decomposition
ladder, and the resulting part labels drive task-appropriate grasp selection.
"""

from .decomp import (
    Decomposition,
    DecompositionTree,
    ThresholdLadder,
    build_ladder,
    builtin_decompose,
    dedup_ladder,
    load_decomposition,
    measure_concavity,
    save_decomposition,
    sweep_thresholds,
)
from .detect import (
    Detection,
    GroundTruthLabels,
    NoiseConfig,
    PromptSet,
    load_detections,
    load_labels,
    mock_detect,
    save_detections,
)
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
    PartGraspError,
    UnknownPrompt,
    ViewMismatch,
)
from .fixtures import ARCHETYPES, Fixture, construction_decomposition, make_fixture
from .fusion import (
    UNKNOWN,
    LabelMap,
    PartScore,
    argmax_labels,
    export_colored_ply,
    fine_opt,
    geo_spreading,
    load_label_map,
    multi_fusion,
    part_relevance,
    save_label_map,
)
from .grasp import (
    GraspCandidate,
    PartAssignment,
    assign_parts,
    load_grasps,
    sample_antipodal,
    save_grasps,
    select_grasps,
)
from .mesh import SurfaceSample, TriMesh, load_mesh, nearest_face, sample_surface
from .metrics import (
    GraspMetrics,
    SegMetrics,
    miou,
    part_selection_accuracy,
    quaternion_variance,
)
from .experiment import (
    ExperimentConfig,
    report_table,
    run_experiment,
    run_threshold_sweep,
)
from .pipeline import SegmentationResult, VARIANTS, run_segmentation
from .render import (
    EMPTY,
    Camera,
    FaceIdBuffer,
    bbox_face_counts,
    bbox_pixel_range,
    buffer_to_png,
    make_view_sphere,
    rasterize,
    visible_pixel_count,
)
from .scoring import (
    ScoreMatrix,
    coarse_scores,
    load_score_matrix,
    per_view_scores,
    save_score_matrix,
)

__version__ = "0.1.0"
