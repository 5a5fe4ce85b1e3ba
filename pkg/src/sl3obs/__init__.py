"""sl3obs: recursive homography estimation on SL(3) from point-feature
directions and (partial) velocity measurements, with a synthetic planar-scene
simulator."""

from .consistency import ConsistencyReport, check_consistent, cross_validate, stabilizer_nullity
from .errors import (
    BehindCamera,
    ConfigError,
    DegenerateGeometry,
    MissingVelocity,
    OracleDisagreement,
    SingularMatrix,
    Sl3obsError,
)
from .observer import (
    GAINS_DEFAULT,
    GAINS_SLOW_ADAPT,
    FeatureFrame,
    Gains,
    ObserverMode,
    ObserverState,
    aggregate_cost,
    canonical_error,
    innovation,
    lyapunov_adaptive,
    lyapunov_full,
    output_errors,
    rk4_renorm_step,
    step,
    step_adaptive_gamma,
    step_adaptive_gamma1,
    step_full,
    trace_positivity_check,
)
from .scene import (
    CameraIntrinsics,
    CameraState,
    DriftTrajectory,
    OrbitTrajectory,
    PlaneParams,
    RigidVelocity,
    StaticTrajectory,
    WaypointTrajectory,
    d_rate,
    default_feature_square,
    direction_to_pixel,
    gamma1_term,
    gamma_term,
    pixel_to_direction,
    project_features,
    rigid_step,
    true_group_velocity,
    true_homography,
)
from .sim import (
    CSV_COLUMNS,
    DropoutWindow,
    NoiseSpec,
    RunLog,
    Scenario,
    emit_csv,
    emit_json,
    load_run_log,
    load_scenario,
    run_scenario,
)
from .sl3 import (
    AlgebraElement,
    GroupElement,
    ProjectivePoint,
    adjoint,
    canonicalize,
    exp_sl3,
    group_action,
    lie_bracket,
    measurement_map,
    normalize_to_sl3,
    projector,
    skew,
)

__version__ = "0.1.0"
