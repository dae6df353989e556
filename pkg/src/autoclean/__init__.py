"""Automated rejection and repair of bad trials and sensors."""

from .core import (
    EpochsTensor,
    RejectLog,
    SensorLayout,
    ThresholdModel,
    load_epochs,
    load_reject_log,
    save_epochs,
    save_reject_log,
)
from .metrics import (
    AmplitudeMatrix,
    EvokedMatrix,
    eval_l2,
    eval_linf,
    peak_to_peak,
    trial_mean,
    trial_median,
)
from .interpolation import (
    InterpolationOperator,
    augment,
    build_operator,
    interpolate_sensors,
)
from .optim import (
    ObservationSet,
    SearchResult,
    expected_improvement,
    gp_posterior,
    grid_search_pairs,
    minimize_scalar,
)
from .reject_global import (
    FoldPlan,
    apply_global,
    cv_error_global,
    fit_global,
    make_folds,
)
from .reject_local import (
    LocalFitConfig,
    LocalModel,
    cv_error_local,
    fit_local,
    fit_sensor_thresholds,
    indicator,
    repair_plan,
    score_sensors,
    transform,
)
from .baselines import faster_bad_sensors, ransac_bad_sensors, sns_clean
from .synth import (
    BenchReport,
    GroundTruth,
    SimConfig,
    benchmark,
    detection_scores,
    simulate,
)
from .review import (
    OverrideEntry,
    OverrideSet,
    apply_overrides,
    make_review_bundle,
    serve_review,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
