//! Plain-text exports. Every file starts with the run's header comment.

use std::fmt::Write as _;
use std::path::Path;

use lidar_deploy::geometry::Deployment;
use lidar_deploy::optimize::{FitnessRecord, SearchSpace};

use crate::error::CliError;

pub const CLOUD_HEADER: &str = "frame_id,vehicle_id,beam_index,azimuth_index,x,y,z,range";
pub const MANIFEST_HEADER: &str = "frame_id,file,points,vehicle_points,ground_points";
pub const SUMMARY_HEADER: &str = "frames,vehicles,detected,proxy_recall,mean_entropy,min_entropy,fitness";

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::output(path, e))
}

pub fn write_file(path: &Path, header: &str, body: &str) -> Result<(), CliError> {
    let mut text = String::with_capacity(header.len() + body.len() + 1);
    text.push_str(header);
    text.push('\n');
    text.push_str(body);
    std::fs::write(path, text).map_err(|e| CliError::output(path, e))
}

/// The header comment of an export, without the leading `# `.
pub fn header_of(text: &str) -> Option<&str> {
    text.lines().next()?.strip_prefix("# ")
}

/// TOML table describing a mount.
pub fn deployment_table(out: &mut String, name: &str, d: &Deployment, fitness: f64, recall: f64) {
    let _ = writeln!(out, "[{name}]");
    let _ = writeln!(out, "height = {:.9}", d.position.z);
    let _ = writeln!(out, "tilt_x_deg = {:.9}", d.tilt_x_deg());
    let _ = writeln!(out, "tilt_y_deg = {:.9}", d.tilt_y_deg());
    let _ = writeln!(out, "x = {:.9}", d.position.x);
    let _ = writeln!(out, "y = {:.9}", d.position.y);
    let _ = writeln!(out, "fitness = {fitness:.9}");
    let _ = writeln!(out, "proxy_recall = {recall:.9}");
}

pub fn history_csv(space: &SearchSpace, history: &[FitnessRecord]) -> String {
    let names: Vec<&str> = space.bounds().iter().map(|b| b.dimension.name()).collect();
    let mut out = String::from("iteration,particle");
    for n in &names {
        let _ = write!(out, ",{n}");
    }
    for n in &names {
        let _ = write!(out, ",v_{n}");
    }
    out.push_str(",fitness,personal_best,global_best\n");
    for r in history {
        let _ = write!(out, "{},{}", r.iteration, r.particle);
        for x in r.position.iter().chain(&r.velocity) {
            let _ = write!(out, ",{x:.9}");
        }
        let _ = writeln!(out, ",{:.9},{:.9},{:.9}", r.fitness, r.personal_best, r.global_best);
    }
    out
}
