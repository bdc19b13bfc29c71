"""Single-electrode, feature-based inter-subject correlation for
multi-channel biosignal recordings: overall and sliding-window synchrony
with the full multiple-comparison / rank-test statistical apparatus, plus
a deterministic synthetic-cohort validator."""

from ._backend import available_backends, backend_name
from .corr import (
    DynamicIsc,
    OverallIscTensor,
    PairIndex,
    WindowSpec,
    dynamic_isc_batch,
    enumerate_pairs,
    pcc,
    pcc_p_value,
    sliding_window_isc,
    overall_isc,
)
from .errors import ConfigError, DataValidationError, DegenerateDataError, EegsyncError
from .features import (
    extract_differential_entropy,
    extract_first_difference,
    extract_original,
    extract_series,
)
from .model import (
    FeatureConfig,
    FeatureKind,
    FeatureSeries,
    Montage,
    MONTAGE_10_20_62,
    Recording,
    StimulusCatalog,
    StimulusInfo,
    de_config,
    validate_recording,
)
from .pipeline import (
    AnalysisReport,
    ConsistencyScore,
    category_test,
    compose_report,
    consistency,
    run_consistency,
    run_dynamic,
    run_overall,
)
from .preprocess import (
    BandDef,
    DEFAULT_BANDS,
    band_spectrum_variance,
    notch_filter,
)
from .stats import (
    PTensor,
    TestResult,
    bh_fdr,
    bonferroni,
    one_sample_t,
    synchronized_percentage,
    wilcoxon_signed_rank,
    window_significance,
    zscore,
)
from .synth import Burst, GroundTruth, SynthConfig, generate_cohort

__version__ = "0.1.0"
