//! Vehicles, per-frame scenarios and trajectory-file ingestion.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::RotationMatrix;

pub const FEET_TO_METERS: f64 = 0.3048;

/// Passenger-car dimensions used when a source omits them (l, w, h in meters).
pub const DEFAULT_DIMENSIONS: (f64, f64, f64) = (4.5, 1.8, 1.5);

pub const CANONICAL_HEADER: [&str; 8] = [
    "frame_id",
    "vehicle_id",
    "x_m",
    "y_m",
    "heading_deg",
    "length_m",
    "width_m",
    "height_m",
];

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("bad value in row {row}, column {column}")]
    BadValue { row: usize, column: String },
    #[error("scenario has no rows")]
    EmptyScenario,
    #[error("vehicle {vehicle} appears twice in frame {frame}")]
    DuplicateVehicle { frame: u64, vehicle: u32 },
    #[error("frame {0} appears twice")]
    DuplicateFrame(u64),
    #[error("invalid vehicle {id}: {reason}")]
    InvalidVehicle { id: u32, reason: &'static str },
    #[error("reading {path}: {message}")]
    Io { path: String, message: String },
}

/// Wraps an angle into `[-π, π)`.
pub fn normalize_heading(theta: f64) -> f64 {
    let wrapped = (theta + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if wrapped >= PI {
        wrapped - TAU
    } else {
        wrapped
    }
}

/// An oriented vehicle box. Local +X is the vehicle's forward direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vehicle {
    pub id: u32,
    pub center: Point3<f64>,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    /// Radians in `[-π, π)`.
    pub heading: f64,
}

impl Vehicle {
    pub fn new(
        id: u32,
        center: Point3<f64>,
        length: f64,
        width: f64,
        height: f64,
        heading: f64,
    ) -> Result<Self, SceneError> {
        for v in [length, width, height] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SceneError::InvalidVehicle {
                    id,
                    reason: "dimensions must be positive",
                });
            }
        }
        if !(heading.is_finite() && center.coords.iter().all(|c| c.is_finite())) {
            return Err(SceneError::InvalidVehicle {
                id,
                reason: "pose must be finite",
            });
        }
        Ok(Self {
            id,
            center,
            length,
            width,
            height,
            heading: normalize_heading(heading),
        })
    }

    /// A vehicle resting on the ground plane: center height is `height / 2`.
    pub fn on_ground(
        id: u32,
        x: f64,
        y: f64,
        heading: f64,
        length: f64,
        width: f64,
        height: f64,
    ) -> Result<Self, SceneError> {
        Self::new(id, Point3::new(x, y, height / 2.0), length, width, height, heading)
    }

    pub fn half_extents(&self) -> Vector3<f64> {
        Vector3::new(self.length / 2.0, self.width / 2.0, self.height / 2.0)
    }

    pub fn yaw(&self) -> RotationMatrix {
        RotationMatrix::about_z(self.heading)
    }

    /// Radius of the sphere around the center that encloses the box.
    pub fn bounding_radius(&self) -> f64 {
        self.half_extents().norm()
    }

    /// World point expressed in the box frame.
    pub fn to_local(&self, p: &Point3<f64>) -> Vector3<f64> {
        self.yaw().apply_inverse(&(p - self.center))
    }

    /// Whether `p` lies inside the box grown by `margin` on every face.
    pub fn contains(&self, p: &Point3<f64>, margin: f64) -> bool {
        let local = self.to_local(p);
        let half = self.half_extents();
        (0..3).all(|k| local[k].abs() <= half[k] + margin)
    }
}

/// The eight corners of the vehicle's box in world coordinates.
///
/// Corner `i` takes the `+` half-extent on local X when bit 0 of `i` is set,
/// on local Y for bit 1 and on local Z for bit 2; `-` otherwise.
pub fn obb_corners(vehicle: &Vehicle) -> [Point3<f64>; 8] {
    let half = vehicle.half_extents();
    let yaw = vehicle.yaw();
    std::array::from_fn(|i| {
        let sign = |bit: usize| if i & (1 << bit) != 0 { 1.0 } else { -1.0 };
        let offset = Vector3::new(sign(0) * half.x, sign(1) * half.y, sign(2) * half.z);
        vehicle.center + yaw.apply(&offset)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFrame {
    pub frame_id: u64,
    pub vehicles: Vec<Vehicle>,
}

impl ScenarioFrame {
    pub fn new(frame_id: u64, vehicles: Vec<Vehicle>) -> Result<Self, SceneError> {
        let mut ids: Vec<u32> = vehicles.iter().map(|v| v.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(SceneError::DuplicateVehicle {
                frame: frame_id,
                vehicle: w[0],
            });
        }
        Ok(Self { frame_id, vehicles })
    }

    pub fn vehicle(&self, id: u32) -> Option<&Vehicle> {
        self.vehicles.iter().find(|v| v.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioFormat {
    CanonicalCsv,
    Ngsim,
}

impl std::str::FromStr for ScenarioFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "canonical-csv" | "csv" => Ok(Self::CanonicalCsv),
            "ngsim" => Ok(Self::Ngsim),
            other => Err(format!("unknown scenario format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioMetadata {
    pub source: Option<PathBuf>,
    /// Unit system of the source file; stored values are always meters.
    pub source_units: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    frames: Vec<ScenarioFrame>,
    pub metadata: ScenarioMetadata,
}

impl Scenario {
    /// Frames are sorted by id; ids must be unique.
    pub fn new(mut frames: Vec<ScenarioFrame>, metadata: ScenarioMetadata) -> Result<Self, SceneError> {
        frames.sort_by_key(|f| f.frame_id);
        if let Some(w) = frames.windows(2).find(|w| w[0].frame_id == w[1].frame_id) {
            return Err(SceneError::DuplicateFrame(w[0].frame_id));
        }
        Ok(Self { frames, metadata })
    }

    pub fn from_frames(frames: Vec<ScenarioFrame>) -> Result<Self, SceneError> {
        Self::new(
            frames,
            ScenarioMetadata {
                source: None,
                source_units: "m",
            },
        )
    }

    pub fn frames(&self) -> &[ScenarioFrame] {
        &self.frames
    }

    pub fn vehicle_count(&self) -> usize {
        self.frames.iter().map(|f| f.vehicles.len()).sum()
    }

    /// Every `stride`-th frame starting with the first.
    pub fn strided(&self, stride: usize) -> impl Iterator<Item = &ScenarioFrame> {
        self.frames.iter().step_by(stride.max(1))
    }

    /// Canonical CSV text with a header row.
    pub fn to_canonical_csv(&self) -> String {
        let mut out = CANONICAL_HEADER.join(",");
        out.push('\n');
        for frame in &self.frames {
            for v in &frame.vehicles {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    frame.frame_id,
                    v.id,
                    v.center.x,
                    v.center.y,
                    v.heading.to_degrees(),
                    v.length,
                    v.width,
                    v.height
                );
            }
        }
        out
    }
}

struct Row {
    frame: u64,
    vehicle: Vehicle,
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize, SceneError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| SceneError::MissingColumn(name.to_string()))
}

fn field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    index: usize,
    row: usize,
    column: &str,
) -> Result<T, SceneError> {
    record
        .get(index)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| SceneError::BadValue {
            row,
            column: column.to_string(),
        })
}

fn positive(value: f64, row: usize, column: &str) -> Result<f64, SceneError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(SceneError::BadValue {
            row,
            column: column.to_string(),
        })
    }
}

fn finite(value: f64, row: usize, column: &str) -> Result<f64, SceneError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(SceneError::BadValue {
            row,
            column: column.to_string(),
        })
    }
}

fn parse_canonical(reader: &mut csv::Reader<&[u8]>) -> Result<Vec<Row>, SceneError> {
    let headers = reader.headers().map_err(csv_error)?.clone();
    let idx: Vec<usize> = CANONICAL_HEADER
        .iter()
        .map(|name| column_index(&headers, name))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(csv_error)?;
        let frame: u64 = field(&record, idx[0], row, CANONICAL_HEADER[0])?;
        let id: u32 = field(&record, idx[1], row, CANONICAL_HEADER[1])?;
        let x = finite(
            field(&record, idx[2], row, CANONICAL_HEADER[2])?,
            row,
            CANONICAL_HEADER[2],
        )?;
        let y = finite(
            field(&record, idx[3], row, CANONICAL_HEADER[3])?,
            row,
            CANONICAL_HEADER[3],
        )?;
        let heading: f64 = finite(
            field(&record, idx[4], row, CANONICAL_HEADER[4])?,
            row,
            CANONICAL_HEADER[4],
        )?;
        let l = positive(
            field(&record, idx[5], row, CANONICAL_HEADER[5])?,
            row,
            CANONICAL_HEADER[5],
        )?;
        let w = positive(
            field(&record, idx[6], row, CANONICAL_HEADER[6])?,
            row,
            CANONICAL_HEADER[6],
        )?;
        let h = positive(
            field(&record, idx[7], row, CANONICAL_HEADER[7])?,
            row,
            CANONICAL_HEADER[7],
        )?;
        let vehicle = Vehicle::on_ground(id, x, y, heading.to_radians(), l, w, h)?;
        rows.push(Row { frame, vehicle });
    }
    Ok(rows)
}

/// Column names read from an NGSIM trajectory file. Everything else is ignored.
pub mod ngsim_columns {
    pub const VEHICLE_ID: &str = "Vehicle_ID";
    pub const FRAME_ID: &str = "Frame_ID";
    /// Lateral position, feet.
    pub const LOCAL_X: &str = "Local_X";
    /// Longitudinal position along the direction of travel, feet.
    pub const LOCAL_Y: &str = "Local_Y";
    pub const LENGTH: &str = "v_Length";
    pub const WIDTH: &str = "v_Width";
    /// 1 = motorcycle, 2 = auto, 3 = truck. Optional.
    pub const CLASS: &str = "v_Class";
}

/// Box height assumed for an NGSIM vehicle class, meters.
pub fn ngsim_class_height(class: Option<u32>) -> f64 {
    match class {
        Some(1) => 1.2,
        Some(3) => 3.5,
        _ => DEFAULT_DIMENSIONS.2,
    }
}

fn parse_ngsim(reader: &mut csv::Reader<&[u8]>) -> Result<Vec<Row>, SceneError> {
    use ngsim_columns::*;
    let headers = reader.headers().map_err(csv_error)?.clone();
    let id_i = column_index(&headers, VEHICLE_ID)?;
    let frame_i = column_index(&headers, FRAME_ID)?;
    let x_i = column_index(&headers, LOCAL_X)?;
    let y_i = column_index(&headers, LOCAL_Y)?;
    let len_i = column_index(&headers, LENGTH).ok();
    let wid_i = column_index(&headers, WIDTH).ok();
    let class_i = column_index(&headers, CLASS).ok();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(csv_error)?;
        let id: u32 = field(&record, id_i, row, VEHICLE_ID)?;
        let frame: u64 = field(&record, frame_i, row, FRAME_ID)?;
        let x = finite(field::<f64>(&record, x_i, row, LOCAL_X)?, row, LOCAL_X)? * FEET_TO_METERS;
        let y = finite(field::<f64>(&record, y_i, row, LOCAL_Y)?, row, LOCAL_Y)? * FEET_TO_METERS;
        let l = match len_i {
            Some(c) => positive(field(&record, c, row, LENGTH)?, row, LENGTH)? * FEET_TO_METERS,
            None => DEFAULT_DIMENSIONS.0,
        };
        let w = match wid_i {
            Some(c) => positive(field(&record, c, row, WIDTH)?, row, WIDTH)? * FEET_TO_METERS,
            None => DEFAULT_DIMENSIONS.1,
        };
        let class = class_i.and_then(|c| record.get(c)).and_then(|s| s.trim().parse().ok());
        // Traffic in the NGSIM local frame runs along +Local_Y.
        let vehicle = Vehicle::on_ground(id, x, y, FRAC_PI_2, l, w, ngsim_class_height(class))?;
        rows.push(Row { frame, vehicle });
    }
    Ok(rows)
}

fn csv_error(e: csv::Error) -> SceneError {
    SceneError::Io {
        path: String::new(),
        message: e.to_string(),
    }
}

/// Parses scenario text in the given format.
pub fn parse_scenario(text: &str, format: ScenarioFormat, source: Option<PathBuf>) -> Result<Scenario, SceneError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let (rows, units) = match format {
        ScenarioFormat::CanonicalCsv => (parse_canonical(&mut reader)?, "m"),
        ScenarioFormat::Ngsim => (parse_ngsim(&mut reader)?, "ft"),
    };
    if rows.is_empty() {
        return Err(SceneError::EmptyScenario);
    }
    let mut grouped: BTreeMap<u64, Vec<Vehicle>> = BTreeMap::new();
    for row in rows {
        grouped.entry(row.frame).or_default().push(row.vehicle);
    }
    let frames = grouped
        .into_iter()
        .map(|(id, vehicles)| ScenarioFrame::new(id, vehicles))
        .collect::<Result<Vec<_>, _>>()?;
    Scenario::new(
        frames,
        ScenarioMetadata {
            source,
            source_units: units,
        },
    )
}

/// Reads a scenario file.
pub fn load_scenario(path: &Path, format: ScenarioFormat) -> Result<Scenario, SceneError> {
    let text = std::fs::read_to_string(path).map_err(|e| SceneError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scenario(&text, format, Some(path.to_path_buf())).map_err(|e| match e {
        SceneError::Io { message, .. } => SceneError::Io {
            path: path.display().to_string(),
            message,
        },
        other => other,
    })
}

/// Layout of a synthetic straight multi-lane road seen from a roadside mount
/// at the origin. Lanes run parallel to the Y axis and extend towards -Y,
/// the side a positive `tilt_x` turns the beams down onto.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadSceneParams {
    pub lanes: usize,
    pub lane_width: f64,
    /// Lateral offset of the first lane's center, meters.
    pub first_lane_x: f64,
    pub vehicles_per_frame: usize,
    pub frames: usize,
    /// Closest and farthest initial longitudinal distance, meters.
    pub near: f64,
    pub far: f64,
    /// Time between frames, seconds.
    pub frame_dt: f64,
    pub speed_range: (f64, f64),
    pub seed: u64,
}

impl Default for RoadSceneParams {
    fn default() -> Self {
        Self {
            lanes: 5,
            lane_width: 3.6,
            first_lane_x: 3.0,
            vehicles_per_frame: 20,
            frames: 10,
            near: 6.0,
            far: 70.0,
            frame_dt: 0.1,
            speed_range: (8.0, 15.0),
            seed: 7,
        }
    }
}

/// Generates default-size vehicles driving along the lanes. Vehicles share
/// their lane's speed so the initial spacing is kept in every frame.
pub fn synthetic_road(params: &RoadSceneParams) -> Scenario {
    let (l, w, h) = DEFAULT_DIMENSIONS;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let lanes = params.lanes.max(1);
    let min_gap = l + 2.0;
    let speeds: Vec<f64> = (0..lanes)
        .map(|_| rng.gen_range(params.speed_range.0..=params.speed_range.1))
        .collect();

    let mut starts: Vec<(usize, f64)> = Vec::with_capacity(params.vehicles_per_frame);
    for n in 0..params.vehicles_per_frame {
        let lane = n % lanes;
        let mut attempts = 0;
        let y = loop {
            let y = -rng.gen_range(params.near..params.far);
            attempts += 1;
            if attempts > 1000 || starts.iter().all(|&(ln, yy)| ln != lane || (yy - y).abs() >= min_gap) {
                break y;
            }
        };
        starts.push((lane, y));
    }

    let frames = (0..params.frames)
        .map(|f| {
            let t = f as f64 * params.frame_dt;
            let vehicles = starts
                .iter()
                .enumerate()
                .map(|(i, &(lane, y0))| {
                    // Near lanes carry traffic away from the sensor, far lanes towards it.
                    let away = lane < lanes.div_ceil(2);
                    // Approaching traffic starts far enough out to stay on the -Y side.
                    let travel = speeds[lane] * (params.frames.saturating_sub(1)) as f64 * params.frame_dt;
                    let (heading, y) = if away {
                        (-FRAC_PI_2, y0 - speeds[lane] * t)
                    } else {
                        (FRAC_PI_2, y0 - travel + speeds[lane] * t)
                    };
                    let x = params.first_lane_x + lane as f64 * params.lane_width;
                    Vehicle::on_ground(i as u32 + 1, x, y, heading, l, w, h).expect("default dimensions are valid")
                })
                .collect();
            ScenarioFrame {
                frame_id: f as u64,
                vehicles,
            }
        })
        .collect();
    Scenario::from_frames(frames).expect("generated frame ids are unique")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn extents(corners: &[Point3<f64>; 8], axis: usize) -> (f64, f64) {
        let lo = corners.iter().map(|c| c[axis]).fold(f64::INFINITY, f64::min);
        let hi = corners.iter().map(|c| c[axis]).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    #[test]
    fn one_row_canonical() {
        let text = "frame_id,vehicle_id,x_m,y_m,heading_deg,length_m,width_m,height_m\n0,7,10.0,3.5,90,4.5,1.8,1.5\n";
        let s = parse_scenario(text, ScenarioFormat::CanonicalCsv, None).unwrap();
        assert_eq!(s.frames().len(), 1);
        let v = s.frames()[0].vehicles[0];
        assert_eq!(v.id, 7);
        assert_eq!((v.center.x, v.center.y, v.center.z), (10.0, 3.5, 0.75));
        assert!((v.heading - FRAC_PI_2).abs() < 1e-15);
        assert_eq!((v.length, v.width, v.height), (4.5, 1.8, 1.5));
    }

    #[test]
    fn header_only_is_empty() {
        let text = "frame_id,vehicle_id,x_m,y_m,heading_deg,length_m,width_m,height_m\n";
        assert!(matches!(
            parse_scenario(text, ScenarioFormat::CanonicalCsv, None),
            Err(SceneError::EmptyScenario)
        ));
    }

    #[test]
    fn missing_column_is_named() {
        let text = "frame_id,vehicle_id,x_m,y_m,heading_deg,length_m,width_m\n0,1,0,0,0,1,1\n";
        match parse_scenario(text, ScenarioFormat::CanonicalCsv, None) {
            Err(SceneError::MissingColumn(c)) => assert_eq!(c, "height_m"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_values_report_row_and_column() {
        let head = "frame_id,vehicle_id,x_m,y_m,heading_deg,length_m,width_m,height_m\n";
        let cases = [
            ("0,1,0,0,0,4.5,1.8,1.5\n0,2,abc,0,0,4.5,1.8,1.5\n", 2, "x_m"),
            ("0,1,0,0,0,-4.5,1.8,1.5\n", 1, "length_m"),
            ("0,1,0,0,0,4.5,0,1.5\n", 1, "width_m"),
        ];
        for (body, want_row, want_col) in cases {
            match parse_scenario(&format!("{head}{body}"), ScenarioFormat::CanonicalCsv, None) {
                Err(SceneError::BadValue { row, column }) => {
                    assert_eq!((row, column.as_str()), (want_row, want_col));
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn duplicate_vehicle_in_frame() {
        let text =
            "frame_id,vehicle_id,x_m,y_m,heading_deg,length_m,width_m,height_m\n0,1,0,0,0,4,2,1\n0,1,5,0,0,4,2,1\n";
        assert!(matches!(
            parse_scenario(text, ScenarioFormat::CanonicalCsv, None),
            Err(SceneError::DuplicateVehicle { frame: 0, vehicle: 1 })
        ));
    }

    #[test]
    fn frames_grouped_and_sorted() {
        let text = "frame_id,vehicle_id,x_m,y_m,heading_deg,length_m,width_m,height_m\n5,1,0,0,0,4,2,1\n2,1,0,0,0,4,2,1\n5,2,9,0,0,4,2,1\n";
        let s = parse_scenario(text, ScenarioFormat::CanonicalCsv, None).unwrap();
        let ids: Vec<u64> = s.frames().iter().map(|f| f.frame_id).collect();
        assert_eq!(ids, vec![2, 5]);
        assert_eq!(s.frames()[1].vehicles.len(), 2);
    }

    #[test]
    fn ngsim_feet_to_meters() {
        let text = "Vehicle_ID,Frame_ID,Total_Frames,Global_Time,Local_X,Local_Y,v_Length,v_Width,v_Class\n\
                    3,12,100,0,10.0,100.0,14.76,6.0,2\n\
                    4,12,100,0,20.0,150.0,40.0,8.5,3\n";
        let s = parse_scenario(text, ScenarioFormat::Ngsim, None).unwrap();
        let v = s.frames()[0].vehicles[0];
        assert!((v.length - 14.76 * 0.3048).abs() < 1e-12);
        assert!((v.length - 4.4988).abs() < 1e-3);
        assert!((v.center.x - 3.048).abs() < 1e-12);
        assert!((v.center.y - 30.48).abs() < 1e-12);
        assert_eq!(v.height, 1.5);
        assert_eq!(s.frames()[0].vehicles[1].height, 3.5);
        assert_eq!(s.metadata.source_units, "ft");
    }

    #[test]
    fn ngsim_requires_position_columns() {
        let text = "Vehicle_ID,Frame_ID,Local_X\n1,1,0\n";
        assert!(matches!(
            parse_scenario(text, ScenarioFormat::Ngsim, None),
            Err(SceneError::MissingColumn(c)) if c == "Local_Y"
        ));
    }

    #[test]
    fn heading_normalization() {
        assert_eq!(normalize_heading(PI), -PI);
        assert!((normalize_heading(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-12);
        assert_eq!(normalize_heading(0.0), 0.0);
        assert!((normalize_heading(-PI - 0.1) - (PI - 0.1)).abs() < 1e-12);
        for k in -50..50 {
            let h = normalize_heading(k as f64 * 0.77);
            assert!((-PI..PI).contains(&h));
        }
    }

    #[test]
    fn corners_axis_aligned() {
        let v = Vehicle::new(1, Point3::new(0.0, 0.0, 0.75), 4.0, 2.0, 1.5, 0.0).unwrap();
        let c = obb_corners(&v);
        assert_eq!(extents(&c, 0), (-2.0, 2.0));
        assert_eq!(extents(&c, 1), (-1.0, 1.0));
        assert_eq!(extents(&c, 2), (0.0, 1.5));
        // Documented ordering.
        assert_eq!(c[0], Point3::new(-2.0, -1.0, 0.0));
        assert_eq!(c[7], Point3::new(2.0, 1.0, 1.5));
    }

    #[test]
    fn corners_quarter_turn() {
        let v = Vehicle::new(1, Point3::new(0.0, 0.0, 0.75), 4.0, 2.0, 1.5, FRAC_PI_2).unwrap();
        let c = obb_corners(&v);
        let (x0, x1) = extents(&c, 0);
        let (y0, y1) = extents(&c, 1);
        assert!((x0 + 1.0).abs() < 1e-12 && (x1 - 1.0).abs() < 1e-12);
        assert!((y0 + 2.0).abs() < 1e-12 && (y1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn corners_eighth_turn() {
        let v = Vehicle::new(1, Point3::new(0.0, 0.0, 0.75), 4.0, 2.0, 1.5, PI / 4.0).unwrap();
        let (x0, x1) = extents(&obb_corners(&v), 0);
        let want = 3.0 * 2f64.sqrt() / 2.0;
        assert!(((x1 - x0) / 2.0 - want).abs() < 1e-9);
    }

    #[test]
    fn synthetic_road_layout() {
        let params = RoadSceneParams::default();
        let s = synthetic_road(&params);
        assert_eq!(s.frames().len(), 10);
        assert_eq!(s.vehicle_count(), 200);
        assert_eq!(s, synthetic_road(&params));
        for frame in s.frames() {
            // No two boxes in the same lane overlap.
            for a in &frame.vehicles {
                assert!(a.center.y < 0.0);
                for b in &frame.vehicles {
                    if a.id != b.id && a.center.x == b.center.x {
                        assert!((a.center.y - b.center.y).abs() >= a.length);
                    }
                }
            }
        }
    }
}
