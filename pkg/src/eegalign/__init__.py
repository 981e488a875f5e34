"""Layer-wise alignment of word-level EEG responses with pretrained stimulus embeddings.

The pipeline turns a continuous EEG recording plus word alignments into
per-word feature tensors, reduces per-layer embedding stacks to compact
stimulus codes, and measures how well each layer (or aggregation of
layers) predicts the EEG via cross-validated ridge regression.
"""

__version__ = "0.1.0"

from .core import (
    EMBEDDING_LAYERS,
    FEATURE_SHAPE,
    EmbeddingStack,
    FeatureTensor,
    ModelId,
    Recording,
    WordAlignment,
    validate_recording,
)
from .sigproc import (
    Segment,
    SegmentReject,
    envelope,
    highpass_filter,
    notch_filter,
    segment_words,
    smooth,
)
from .features import (
    DEFAULT_BANDS,
    FrameGrid,
    PostprocStats,
    compute_feature_tensor,
    frame_segment,
    postprocess,
)
from .dimred import ConvergenceError, IcaModel, PcaModel, ica_fit, ica_transform, pca_fit, pca_transform
from .align import (
    DEFAULT_ALPHAS,
    CvTable,
    DesignMatrix,
    RetrievalResult,
    RidgeModel,
    Strategy,
    SweepConfig,
    SweepResult,
    best_result,
    build_design,
    contrastive_retrieval,
    layer_sweep,
    regression_metrics,
    ridge_cv,
    ridge_fit,
    score,
    split_train_test,
)
from .report import (
    Montage,
    channel_weight_map,
    default_montage,
    read_montage,
    render_sweep_figure,
    render_topomap_svg,
    write_results,
)
from .synth import SynthSpec, gen_dataset, ols_oracle, write_synth_dataset

__all__ = [
    "EMBEDDING_LAYERS",
    "FEATURE_SHAPE",
    "DEFAULT_ALPHAS",
    "DEFAULT_BANDS",
    "ConvergenceError",
    "CvTable",
    "DesignMatrix",
    "EmbeddingStack",
    "FeatureTensor",
    "FrameGrid",
    "IcaModel",
    "ModelId",
    "Montage",
    "PcaModel",
    "PostprocStats",
    "Recording",
    "RetrievalResult",
    "RidgeModel",
    "Segment",
    "SegmentReject",
    "Strategy",
    "SweepConfig",
    "SweepResult",
    "SynthSpec",
    "WordAlignment",
    "best_result",
    "build_design",
    "channel_weight_map",
    "compute_feature_tensor",
    "contrastive_retrieval",
    "default_montage",
    "envelope",
    "frame_segment",
    "gen_dataset",
    "highpass_filter",
    "ica_fit",
    "ica_transform",
    "layer_sweep",
    "notch_filter",
    "ols_oracle",
    "pca_fit",
    "pca_transform",
    "postprocess",
    "read_montage",
    "regression_metrics",
    "render_sweep_figure",
    "render_topomap_svg",
    "ridge_cv",
    "ridge_fit",
    "score",
    "segment_words",
    "smooth",
    "split_train_test",
    "validate_recording",
    "write_results",
    "write_synth_dataset",
]
