"""Upright placement stack: rotation math, procedural objects, resting
simulation, depth rendering and the evaluation harness."""

from upright._core import (
    Camera,
    CameraRig,
    CameraStudyConfig,
    ControllerConfig,
    DatasetConfig,
    DatasetRecord,
    DepthImage,
    EvalConfig,
    EvalResult,
    Family,
    FilterResult,
    HarnessConfig,
    Method,
    ObjectModel,
    ObjectsConfig,
    OutputRep,
    Policy,
    QualityEstimatorConfig,
    QualityModelConfig,
    QualityModelReport,
    RestState,
    RigConfig,
    Rng,
    Rotation,
    RotationEstimatorConfig,
    SimParams,
    TrialRow,
    TrialStep,
    Vec3,
    __version__,
    build_object_set,
    canonical_config_string,
    canonicalize_execution,
    config_fingerprint,
    degrees,
    evaluate,
    filter_rotation_stream,
    from_axis_angle,
    from_quaternion,
    from_sixd,
    gen_dataset,
    gen_objects,
    generate_object,
    geodesic_distance,
    ground_truth_rotation,
    is_upright,
    load_config,
    load_dataset,
    load_traces,
    parse_config,
    placement_quality_label,
    radians,
    random_rotation,
    render_depth,
    rig_cameras,
    rotation_about_z,
    rotation_angle,
    run_eval,
    settle,
    stability_check,
    to_axis_angle,
    to_quaternion,
    to_sixd,
    train_quality_model,
    upright_angle,
    validate_config,
    write_report,
)

__all__ = [name for name in dir() if not name.startswith("_")]
