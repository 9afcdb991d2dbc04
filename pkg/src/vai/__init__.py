"""Visual AI Index: seven low-level visual metrics aggregated into a [0,100]
cohort score, plus detector accuracy/recall/precision evaluation."""

from .errors import (
    ContractError,
    CoverageError,
    DecodeError,
    DegeneratePoolError,
    DegenerateScalingError,
    DimensionError,
    EmptyInputError,
    FormatError,
    ManifestError,
    VaiError,
)
from .raster import (
    GrayBuffer,
    HsvBuffer,
    PixelBuffer,
    decode_image,
    encode_png,
    load_image,
    resize_bilinear,
    resize_longest_side,
    to_grayscale,
    to_hsv,
)
from .filters import (
    SOBEL_X,
    SOBEL_Y,
    EdgeMap,
    GradientField,
    Kernel,
    canny,
    default_kernel_size,
    convolve_replicate,
    convolve_valid,
    gaussian_blur,
    gaussian_kernel,
    gradient_magnitude,
    laplacian,
    sobel_gradients,
)
from .texture import Histogram, LbpCodeMap, entropy, lbp_code_map, normalized_histogram
from .metrics import (
    METRIC_ABBREV,
    METRIC_FIELDS,
    MetricConfig,
    MetricVector,
    color_distribution,
    compute_all,
    contextual_relevance,
    image_contrast,
    image_sharpness,
    image_smoothness,
    object_coherence,
    texture_complexity,
)
from .index import (
    Cohort,
    CohortStats,
    VaiScore,
    cohort_raw,
    pool_normalize,
    scale_scores,
    vai_raw,
)
from .detector_eval import (
    ConfusionMatrix,
    EvalMetrics,
    EvalTable,
    PredictionRecord,
    confusion,
    eval_table,
    load_predictions,
    parse_predictions,
)
from .report import (
    ImageRow,
    ScoreReport,
    accuracy_matrix_csv,
    emit_csv,
    emit_json,
    eval_csv,
    lbp_visualization,
    metrics_csv,
    parse_eval_csv,
    report_from_dict,
    scatter_matrix_svg,
)

__version__ = "0.1.0"
