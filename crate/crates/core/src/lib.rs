//! LiDAR deployment toolkit.
//!
//! Simulates mechanical rotating LiDAR returns on vehicle boxes, scores each
//! vehicle with grid-occupancy perception entropy (PE-VGOP) and searches the
//! mount height and tilt that maximize it over a traffic scenario.
//!
//! - [`geometry`]: beam model, tilt rotations and deployed ray sets
//! - [`scene`]: vehicles, scenarios and trajectory ingestion
//! - [`raycast`]: nearest-hit ray casting with occlusion
//! - [`metric`]: vehicle-frame projection, VGOP and entropy
//! - [`optimize`]: deployment objective and the DE-PSO solver

pub mod geometry;
pub mod metric;
pub mod optimize;
pub mod raycast;
pub mod scene;

pub use geometry::{beam_direction, deploy_rays, tilt_matrix, Deployment, LidarModel, RaySet, RotationMatrix};
pub use metric::{evaluate_frame, pe_vgop, GridSpec, VgopReport};
pub use optimize::{fitness, run_optimizer, ObjectiveParams, SearchSpace, SwarmParams};
pub use raycast::{cast_frame, LabeledPointCloud};
pub use scene::{load_scenario, Scenario, ScenarioFormat, ScenarioFrame, Vehicle};
