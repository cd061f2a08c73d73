//! Event-camera pole mapping: iterative Hough line detection, spatio-temporal
//! tracking and planar DLT triangulation into a landmark map.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod camera;
pub mod config;
pub mod error;
pub mod event;
pub mod hough;
pub mod kv;
pub mod pipeline;
pub mod plot;
pub mod pose;
pub mod scalar;
pub mod sim;
pub mod track;
pub mod triangulate;

pub use bench::{bench, BenchReport, Summary};
pub use camera::{build_undistortion_lut, undistort_event, CameraIntrinsics, Distortion, UndistortionLut};
pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use event::{load_events, write_events, Event, EventFormat, Polarity, SensorSize};
pub use hough::{Cell, CellUpdateSet, Detection, Detector, DistanceMetric, HoughConfig, HoughState};
pub use pipeline::{run_pipeline, PipelineOutput, PipelineStats};
pub use pose::{Pose2, PoseLog};
pub use scalar::Scalar;
pub use sim::{profile_eval, simulate, Pole, Scene, SceneFile, SensorConfig, SimOutput, VelocityProfile};
pub use track::{pair_tracks, PolarityTrack, SpatioTemporalPoint, Track, Tracker, TrackerConfig, TravelDirection};
pub use triangulate::{
    accumulate_map, build_dlt_matrix, match_and_rmse, triangulate, EvalReport, GroundTruthPole, Landmark, LandmarkMap,
    TriangulationConfig,
};

pub type Intrinsics = CameraIntrinsics<f64>;
pub type Intrinsics32 = CameraIntrinsics<f32>;
pub type Pose = Pose2<f64>;
pub type Pose32 = Pose2<f32>;
pub type Poses = PoseLog<f64>;
pub type Poses32 = PoseLog<f32>;
pub type Map = LandmarkMap<f64>;
pub type Map32 = LandmarkMap<f32>;
