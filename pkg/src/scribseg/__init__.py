"""Weakly supervised saliency: losses, affinity tools, and a desk benchmark.

Scribble annotations label a few foreground and background pixels per
image. The training objective combines a partial cross entropy on those
pixels with three dense consistency terms: a bilateral pairwise
smoothness, a structure consistency between scales, and an affinity
compactness over patch-feature graphs.
"""

from .affinity import (
    Bipartition,
    SimilarityGraph,
    build_graph,
    cosine_similarity,
    gsa_set_energy,
    guarded_ratio,
    ncut_energy,
    set_association,
    set_association_factored,
    spectral_bipartition,
)
from .errors import (
    BadMagicError,
    ConfigError,
    DegenerateFeaturesError,
    DimensionMismatchError,
    EmptyBackgroundError,
    EmptyForegroundError,
    EmptyGroundTruthError,
    EmptySupervisionError,
    FormatError,
    GenerationError,
    InvalidArgumentError,
    IsolatedNodeError,
    MaskValueError,
    NonFiniteValueError,
    ScribsegError,
    TrainingError,
    TruncatedPayloadError,
    VersionMismatchError,
)
from .grids import (
    BACKGROUND,
    FOREGROUND,
    UNLABELED,
    FeatureField,
    PatchSaliency,
    RgbImage,
    SaliencyMap,
    ScribbleMask,
    pool_adjoint,
    pool_array,
    resample_adjoint,
    resample_array,
    resample_bilinear,
    validate_pair,
)
from .losses import (
    CompositeInputs,
    CompositeResult,
    LossResult,
    LossWeights,
    LscKernelConfig,
    PairLossResult,
    SsimConfig,
    composite_loss,
    gsa_loss,
    gsa_loss_flat,
    lsc_loss,
    minimize_gsa_pgd,
    partial_cross_entropy,
    ssc_loss,
    ssim,
)
from .metrics import (
    MetricReport,
    adaptive_threshold,
    e_measure,
    evaluate_many,
    evaluate_pair,
    iou,
    iou_at_adaptive,
    mae,
    mean_f_measure,
    write_report_csv,
)
from .synth import (
    SceneSpec,
    SyntheticScene,
    generate_dataset,
    generate_scene,
    hflip_scene,
    planted_field,
    standard_benchmark,
)
from .training import (
    SaliencyHead,
    TrainConfig,
    TrainResult,
    arrays_to_head,
    head_to_arrays,
    init_head,
    predict,
    train,
)

__version__ = "0.1.0"
