"""soco: soundness and completeness evaluation for feature attribution maps.

The library measures how faithfully an attribution map reflects a model's
actual use of features, via two complementary accuracy-based metrics plus
the classic order-based baselines they are designed to improve on, and
ships a fully synthetic validation world where exact ground truth is known.
"""

from ._version import __version__
from .analysis import (
    CurveSet,
    TrialSummary,
    aggregate_trials,
    hausdorff_distance,
    min_pairwise_hausdorff,
    pairwise_hausdorff,
)
from .core import (
    AttributionMap,
    ConfigError,
    DataError,
    Dataset,
    EvalCurve,
    Model,
    ModelBridgeError,
    Sample,
    SocoError,
    accuracy,
    normalize_attribution,
)
from .experiment import (
    ExperimentConfig,
    RunManifest,
    ValidationResult,
    ValidationSettings,
    load_config,
    parse_config,
    run_experiment,
    run_validation,
)
from .io import (
    emit_plot_data,
    read_curve,
    read_dataset,
    read_maps,
    write_curve,
    write_dataset,
    write_maps,
)
from .metrics import (
    CompletenessConfig,
    SoundnessConfig,
    align_soundness,
    auc,
    completeness_curve,
    order_based_curve,
    road_curve,
    soundness_curve,
)
from .models import (
    ExternalModel,
    ExternalModelSpec,
    MlpModel,
    MlpWeights,
    external_model_call,
    mlp_predict,
)
from .modify import (
    ModScheme,
    apply_scheme,
    craft_pooling,
    craft_rect,
    modify_constant,
    modify_partial,
    modify_random,
    synth_introduce,
    synth_remove,
)
from .perturb import (
    Imputer,
    apply_imputer,
    impute_grid,
    impute_tabular,
    mask_by_ratio,
    mask_by_threshold,
    rank_features,
)
from .rng import substream
from .synthetic import (
    LinearStepModel,
    OracleInfo,
    generate_synthetic,
    ground_truth_attribution,
    linear_step_predict,
    oracle_info,
)

__all__ = [
    "__version__",
    "AttributionMap",
    "CompletenessConfig",
    "ConfigError",
    "CurveSet",
    "DataError",
    "Dataset",
    "EvalCurve",
    "ExperimentConfig",
    "ExternalModel",
    "ExternalModelSpec",
    "Imputer",
    "LinearStepModel",
    "MlpModel",
    "MlpWeights",
    "ModScheme",
    "Model",
    "ModelBridgeError",
    "OracleInfo",
    "RunManifest",
    "Sample",
    "SocoError",
    "SoundnessConfig",
    "TrialSummary",
    "ValidationResult",
    "ValidationSettings",
    "accuracy",
    "aggregate_trials",
    "align_soundness",
    "apply_imputer",
    "apply_scheme",
    "auc",
    "completeness_curve",
    "craft_pooling",
    "craft_rect",
    "emit_plot_data",
    "external_model_call",
    "generate_synthetic",
    "ground_truth_attribution",
    "hausdorff_distance",
    "impute_grid",
    "impute_tabular",
    "linear_step_predict",
    "load_config",
    "mask_by_ratio",
    "mask_by_threshold",
    "min_pairwise_hausdorff",
    "mlp_predict",
    "modify_constant",
    "modify_partial",
    "modify_random",
    "normalize_attribution",
    "oracle_info",
    "order_based_curve",
    "pairwise_hausdorff",
    "parse_config",
    "rank_features",
    "read_curve",
    "read_dataset",
    "read_maps",
    "road_curve",
    "run_experiment",
    "run_validation",
    "soundness_curve",
    "substream",
    "synth_introduce",
    "synth_remove",
    "write_curve",
    "write_dataset",
    "write_maps",
]
