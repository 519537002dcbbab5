//! Sensor-intrinsic beam geometry and the deployment transform.
//!
//! A mechanical LiDAR is described by its fixed beam elevations and the
//! azimuth step of its sweep. A beam at azimuth `α` and elevation `β` points
//! along `(sin α cos β, cos α cos β, sin β)`, so azimuth zero faces +Y and
//! azimuth grows clockwise towards +X when seen from above.
//!
//! Angles are degrees in presets and configs, radians everywhere else.

use std::path::Path;

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used when checking that the azimuth step divides a full turn.
const RESOLUTION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("lidar model has no vertical angles")]
    NoBeams,
    #[error("vertical angle {0} deg is outside (-90, 90)")]
    BadElevation(f64),
    #[error("duplicate vertical angle {0} deg")]
    DuplicateElevation(f64),
    #[error("horizontal resolution {0} deg must be positive and divide 360")]
    BadResolution(f64),
    #[error("range limits must satisfy 0 <= min ({min}) < max ({max})")]
    BadRange { min: f64, max: f64 },
    #[error("deployment height {0} m is below ground")]
    BelowGround(f64),
    #[error("deployment field {0} is not finite")]
    NonFinite(&'static str),
    #[error("reading preset {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing preset {path}: {message}")]
    Parse { path: String, message: String },
}

/// On-disk layout of a LiDAR preset.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LidarPreset {
    pub name: String,
    pub vertical_angles: Vec<f64>,
    pub horizontal_resolution_deg: f64,
    #[serde(default)]
    pub min_range_m: f64,
    pub max_range_m: f64,
}

/// Intrinsic geometry of a mechanical rotating LiDAR.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarModel {
    name: String,
    /// Sorted beam elevations, degrees.
    vertical_angles: Vec<f64>,
    horizontal_resolution: f64,
    min_range: f64,
    max_range: f64,
    azimuth_count: usize,
}

impl LidarModel {
    pub fn new(
        name: impl Into<String>,
        mut vertical_angles: Vec<f64>,
        horizontal_resolution_deg: f64,
        min_range: f64,
        max_range: f64,
    ) -> Result<Self, GeometryError> {
        if vertical_angles.is_empty() {
            return Err(GeometryError::NoBeams);
        }
        if let Some(&bad) = vertical_angles.iter().find(|a| !a.is_finite() || a.abs() >= 90.0) {
            return Err(GeometryError::BadElevation(bad));
        }
        vertical_angles.sort_by(f64::total_cmp);
        if let Some(w) = vertical_angles.windows(2).find(|w| w[0] == w[1]) {
            return Err(GeometryError::DuplicateElevation(w[0]));
        }
        if !(horizontal_resolution_deg.is_finite() && horizontal_resolution_deg > 0.0) {
            return Err(GeometryError::BadResolution(horizontal_resolution_deg));
        }
        let steps = 360.0 / horizontal_resolution_deg;
        if (steps - steps.round()).abs() > RESOLUTION_TOL * steps.max(1.0) || steps.round() < 1.0 {
            return Err(GeometryError::BadResolution(horizontal_resolution_deg));
        }
        if !(min_range.is_finite() && max_range.is_finite() && 0.0 <= min_range && min_range < max_range) {
            return Err(GeometryError::BadRange {
                min: min_range,
                max: max_range,
            });
        }
        Ok(Self {
            name: name.into(),
            vertical_angles,
            horizontal_resolution: horizontal_resolution_deg,
            min_range,
            max_range,
            azimuth_count: steps.round() as usize,
        })
    }

    pub fn from_preset(preset: LidarPreset) -> Result<Self, GeometryError> {
        Self::new(
            preset.name,
            preset.vertical_angles,
            preset.horizontal_resolution_deg,
            preset.min_range_m,
            preset.max_range_m,
        )
    }

    pub fn to_preset(&self) -> LidarPreset {
        LidarPreset {
            name: self.name.clone(),
            vertical_angles: self.vertical_angles.clone(),
            horizontal_resolution_deg: self.horizontal_resolution,
            min_range_m: self.min_range,
            max_range_m: self.max_range,
        }
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, GeometryError> {
        let preset: LidarPreset = toml::from_str(text).map_err(|e| GeometryError::Parse {
            path: origin.to_string(),
            message: e.message().to_string(),
        })?;
        Self::from_preset(preset)
    }

    /// Loads a preset document from disk.
    pub fn load(path: &Path) -> Result<Self, GeometryError> {
        let text = std::fs::read_to_string(path).map_err(|source| GeometryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    /// RS-16: 16 beams spread uniformly over -15..+15 deg, 50 m range.
    pub fn rs16() -> Self {
        Self::from_toml_str(RS16_PRESET, "rs16.toml").expect("bundled preset is valid")
    }

    /// RS-32: 32 beams spread uniformly over -16..+15 deg, 80 m range.
    pub fn rs32() -> Self {
        Self::from_toml_str(RS32_PRESET, "rs32.toml").expect("bundled preset is valid")
    }

    /// RS-80: 80 beams over -25..+15 deg, concentrated around the horizon,
    /// 150 m range. The per-beam table is an approximation of the vendor's
    /// uneven distribution.
    pub fn rs80() -> Self {
        Self::from_toml_str(RS80_PRESET, "rs80.toml").expect("bundled preset is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Beam elevations in degrees, ascending.
    pub fn vertical_angles(&self) -> &[f64] {
        &self.vertical_angles
    }

    pub fn horizontal_resolution_deg(&self) -> f64 {
        self.horizontal_resolution
    }

    pub fn min_range(&self) -> f64 {
        self.min_range
    }

    pub fn max_range(&self) -> f64 {
        self.max_range
    }

    pub fn beam_count(&self) -> usize {
        self.vertical_angles.len()
    }

    /// Number of azimuth steps in one revolution.
    pub fn azimuth_count(&self) -> usize {
        self.azimuth_count
    }

    pub fn ray_count(&self) -> usize {
        self.beam_count() * self.azimuth_count
    }

    /// Azimuth of step `index`, radians.
    pub fn azimuth(&self, index: usize) -> f64 {
        (index as f64 * self.horizontal_resolution).to_radians()
    }
}

pub const RS16_PRESET: &str = include_str!("../presets/rs16.toml");
pub const RS32_PRESET: &str = include_str!("../presets/rs32.toml");
pub const RS80_PRESET: &str = include_str!("../presets/rs80.toml");

/// Sensor mount: position and tilt about the X and Y axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deployment {
    pub position: Point3<f64>,
    /// Radians.
    pub tilt_x: f64,
    /// Radians.
    pub tilt_y: f64,
}

impl Deployment {
    pub fn new(position: Point3<f64>, tilt_x: f64, tilt_y: f64) -> Result<Self, GeometryError> {
        if !position.coords.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::NonFinite("position"));
        }
        if !tilt_x.is_finite() {
            return Err(GeometryError::NonFinite("tilt_x"));
        }
        if !tilt_y.is_finite() {
            return Err(GeometryError::NonFinite("tilt_y"));
        }
        if position.z < 0.0 {
            return Err(GeometryError::BelowGround(position.z));
        }
        Ok(Self {
            position,
            tilt_x,
            tilt_y,
        })
    }

    /// Builds a deployment from a position and tilt angles in degrees.
    pub fn from_degrees(x: f64, y: f64, height: f64, tilt_x_deg: f64, tilt_y_deg: f64) -> Result<Self, GeometryError> {
        Self::new(
            Point3::new(x, y, height),
            tilt_x_deg.to_radians(),
            tilt_y_deg.to_radians(),
        )
    }

    pub fn tilt_x_deg(&self) -> f64 {
        self.tilt_x.to_degrees()
    }

    pub fn tilt_y_deg(&self) -> f64 {
        self.tilt_y.to_degrees()
    }

    pub fn rotation(&self) -> RotationMatrix {
        tilt_matrix(self.tilt_x, self.tilt_y)
    }
}

/// A proper rotation in 3D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Rotation about +X by `theta`; carries +Y towards +Z.
    pub fn about_x(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self(Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
    }

    /// Rotation about +Y by `theta`; carries +Z towards +X.
    pub fn about_y(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self(Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
    }

    /// Rotation about +Z by `theta`; used for vehicle yaw.
    pub fn about_z(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Applies the inverse rotation.
    pub fn apply_inverse(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0.tr_mul(v)
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }

    /// Largest entry of `|MᵀM − I|` together with `|det M − 1|`.
    pub fn orthonormality_error(&self) -> (f64, f64) {
        let gram = self.0.tr_mul(&self.0) - Matrix3::identity();
        (gram.amax(), (self.0.determinant() - 1.0).abs())
    }
}

/// Unit direction of a beam at `azimuth`, `elevation` (radians).
pub fn beam_direction(azimuth: f64, elevation: f64) -> Vector3<f64> {
    let (sa, ca) = azimuth.sin_cos();
    let (sb, cb) = elevation.sin_cos();
    Vector3::new(sa * cb, ca * cb, sb)
}

/// `R_x(tilt_x) · R_y(tilt_y)`.
pub fn tilt_matrix(tilt_x: f64, tilt_y: f64) -> RotationMatrix {
    RotationMatrix::about_x(tilt_x).compose(&RotationMatrix::about_y(tilt_y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Point3<f64>,
    pub direction: Vector3<f64>,
    pub beam_index: u32,
    pub azimuth_index: u32,
}

impl Ray {
    pub fn at(&self, t: f64) -> Point3<f64> {
        self.origin + self.direction * t
    }
}

/// All rays of one revolution for a deployed sensor.
///
/// Directions are evaluated on demand from cached sine/cosine tables so the
/// ray caster can visit only the rays that may reach a target. Ray `(b, a)`
/// is `rotation · beam_direction(azimuth(a), elevation(b))`.
#[derive(Debug, Clone)]
pub struct RaySet {
    origin: Point3<f64>,
    rotation: RotationMatrix,
    elevations: Vec<f64>,
    elevation_trig: Vec<(f64, f64)>,
    azimuth_step: f64,
    azimuth_trig: Vec<(f64, f64)>,
}

impl RaySet {
    pub fn origin(&self) -> Point3<f64> {
        self.origin
    }

    pub fn rotation(&self) -> &RotationMatrix {
        &self.rotation
    }

    pub fn beam_count(&self) -> usize {
        self.elevations.len()
    }

    pub fn azimuth_count(&self) -> usize {
        self.azimuth_trig.len()
    }

    pub fn len(&self) -> usize {
        self.beam_count() * self.azimuth_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Beam elevations in the sensor frame, radians ascending.
    pub fn elevations(&self) -> &[f64] {
        &self.elevations
    }

    /// Azimuth step, radians.
    pub fn azimuth_step(&self) -> f64 {
        self.azimuth_step
    }

    /// Direction in the sensor's own (untilted) frame.
    pub fn sensor_direction(&self, beam: usize, azimuth: usize) -> Vector3<f64> {
        let (sb, cb) = self.elevation_trig[beam];
        let (sa, ca) = self.azimuth_trig[azimuth];
        Vector3::new(sa * cb, ca * cb, sb)
    }

    /// World-frame direction of ray `(beam, azimuth)`.
    pub fn direction(&self, beam: usize, azimuth: usize) -> Vector3<f64> {
        self.rotation.apply(&self.sensor_direction(beam, azimuth))
    }

    pub fn ray(&self, beam: usize, azimuth: usize) -> Ray {
        Ray {
            origin: self.origin,
            direction: self.direction(beam, azimuth),
            beam_index: beam as u32,
            azimuth_index: azimuth as u32,
        }
    }

    /// Every ray, ordered by `(beam_index, azimuth_index)`.
    pub fn iter(&self) -> impl Iterator<Item = Ray> + '_ {
        (0..self.beam_count()).flat_map(move |b| (0..self.azimuth_count()).map(move |a| self.ray(b, a)))
    }
}

/// Places the sensor: one ray per (elevation, azimuth) pair, sharing the
/// mount position as origin and rotated by the tilt matrix.
pub fn deploy_rays(model: &LidarModel, deployment: &Deployment) -> RaySet {
    let elevations: Vec<f64> = model.vertical_angles.iter().map(|d| d.to_radians()).collect();
    let elevation_trig = elevations.iter().map(|e| e.sin_cos()).collect();
    let azimuth_trig = (0..model.azimuth_count).map(|j| model.azimuth(j).sin_cos()).collect();
    RaySet {
        origin: deployment.position,
        rotation: deployment.rotation(),
        elevations,
        elevation_trig,
        azimuth_step: model.horizontal_resolution.to_radians(),
        azimuth_trig,
    }
}

/// Elevation of a direction above the XY plane, radians.
pub fn elevation_of(direction: &Vector3<f64>) -> f64 {
    direction.z.atan2(direction.xy().norm())
}
