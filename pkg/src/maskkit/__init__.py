"""maskkit: deterministic patch-mask generation and analysis for masked image modeling."""

__version__ = "0.1.0"

from .grid import (
    GrayImage,
    MaskMap,
    PatchGrid,
    apply_mask,
    bare_grid,
    complement,
    exact_fraction,
    masked_ratio,
    partition,
    random_masked_count,
    target_masked_count,
)
from .patterns import (
    GENERATOR_NAME,
    BlockPlacement,
    BlockwiseSpec,
    CandidateSet,
    MeshSpec,
    PatternSpec,
    RandomSpec,
    SquareSpec,
    gen_blockwise,
    gen_blockwise_logged,
    gen_mesh,
    gen_random,
    gen_square,
    generate,
    mesh_candidates,
    spec_fields,
    square_cells,
)
from .occlusion import (
    OcclusionEstimate,
    Region,
    exact_mesh_occlusion,
    exact_random_occlusion,
    mc_occlusion,
    patch_mask_frequency,
)
from .propagation import (
    StageStack,
    SupportMap,
    dense_propagate,
    downsample_mask,
    pattern_loss_depth,
    sparse_propagate,
    support_from_mask,
)
from .augment import (
    CropSpec,
    cutmix,
    mix_labels,
    mixup_pixels,
    random_flip,
    random_resized_crop,
    sample_lambda,
)
from .metrics import (
    ClassWeights,
    ConfusionCounts,
    MetricsReport,
    class_weights,
    confusion_from_pairs,
    format_percent,
    metrics,
)

__all__ = [name for name in dir() if not name.startswith("_")]
