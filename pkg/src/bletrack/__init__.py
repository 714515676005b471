"""Indoor localization from BLE beacon hits and waist-worn IMU streams.

Library layout:

- geometry: positions, room polygons, floor plans, membership tests
- pathloss: RSSI <-> distance (log-distance law) and exponent calibration
- registry: fixed receiver positions and per-device channel parameters
- trilateration: baseline Gauss-Newton and hit-density-weighted adaptive fixes
- deadreckoning: low-pass, step detection, orientation filter, trajectories
- fusion: equal-weight BLE+IMU tracker
- simulator: deterministic synthetic trajectories, BLE channel, IMU streams
- ingest: file formats, batch loading, watermark-ordered streaming
- evaluation: positioning error, room accuracy, coverage grids, comparisons
- layouts: the synthetic benchmark site
- cli: simulate / calibrate / localize / evaluate / coverage subcommands
"""

__version__ = "0.1.0"

from .deadreckoning import (
    ImuDelta,
    ImuSample,
    MadgwickFilter,
    PdrConfig,
    Quaternion,
    StepEvent,
    StepTrajectory,
    dead_reckon,
    detect_steps,
    heading_of,
    integrate_trajectory,
    lowpass,
    madgwick_update,
)
from .evaluation import (
    CoverageGrid,
    EvalConfig,
    EvaluationReport,
    compare_methods,
    coverage_heatmap,
    positioning_error,
    room_accuracy,
)
from .fusion import FusedTrack, TrackFix, fuse_step, run_tracker
from .geometry import (
    FloorPlan,
    Position2D,
    RoomPolygon,
    euclidean_distance,
    point_in_room,
)
from .ingest import SessionBundle, StreamFeed, load_bundle, load_bundle_dir, stream_feed
from .pathloss import PathLossParams, RssiHit, calibrate_n, distance_to_rssi, rssi_to_distance
from .registry import DeviceEntry, DeviceRegistry
from .simulator import (
    GroundTruth,
    ProbeResult,
    SimulationConfig,
    SubjectPath,
    build_ground_truth,
    simulate_ble,
    simulate_coverage_probe,
    simulate_imu,
)
from .trilateration import (
    BleFix,
    HitWindow,
    adaptive_track,
    adaptive_trilaterate,
    baseline_track,
    baseline_trilaterate,
    build_windows,
)

__all__ = [
    "__version__",
    "BleFix",
    "CoverageGrid",
    "DeviceEntry",
    "DeviceRegistry",
    "EvalConfig",
    "EvaluationReport",
    "FloorPlan",
    "FusedTrack",
    "GroundTruth",
    "HitWindow",
    "ImuDelta",
    "ImuSample",
    "MadgwickFilter",
    "PathLossParams",
    "PdrConfig",
    "Position2D",
    "ProbeResult",
    "Quaternion",
    "RoomPolygon",
    "RssiHit",
    "SessionBundle",
    "SimulationConfig",
    "StepEvent",
    "StepTrajectory",
    "StreamFeed",
    "SubjectPath",
    "TrackFix",
    "adaptive_track",
    "adaptive_trilaterate",
    "baseline_track",
    "baseline_trilaterate",
    "build_ground_truth",
    "build_windows",
    "calibrate_n",
    "compare_methods",
    "coverage_heatmap",
    "dead_reckon",
    "detect_steps",
    "distance_to_rssi",
    "euclidean_distance",
    "fuse_step",
    "heading_of",
    "integrate_trajectory",
    "load_bundle",
    "load_bundle_dir",
    "lowpass",
    "madgwick_update",
    "point_in_room",
    "positioning_error",
    "room_accuracy",
    "rssi_to_distance",
    "run_tracker",
    "simulate_ble",
    "simulate_coverage_probe",
    "simulate_imu",
    "stream_feed",
]
