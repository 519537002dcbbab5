//! Vehicle grid occupancy probability (VGOP) and perception entropy.
//!
//! Vehicle points are moved into the box frame, projected onto the top
//! (x, y), side (x, z) and front (y, z) planes and rasterized on square
//! cells. The occupied fraction of each view feeds a three-term binary
//! entropy, `E = -Σ p log₂ p`, which peaks at `p = 1/e` per view.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{Point3, Vector3};
use thiserror::Error;

use crate::raycast::{HitLabel, LabeledPointCloud};
use crate::scene::{ScenarioFrame, Vehicle};

/// Points this far outside the box still snap to the boundary cell.
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;

/// Upper bound of [`pe_vgop`]: `3 log₂(e) / e`.
pub const MAX_ENTROPY: f64 = 3.0 * std::f64::consts::LOG2_E / std::f64::consts::E;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("point cloud is for frame {cloud} but the scenario frame is {frame}")]
    FrameMismatch { cloud: u64, frame: u64 },
    #[error("cell areas must be positive")]
    BadGrid,
    #[error("voxel edge must be positive")]
    BadVoxelEdge,
}

/// Cell areas of the three projection grids, m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub mu_top: f64,
    pub mu_side: f64,
    pub mu_front: f64,
}

impl Default for GridSpec {
    /// 0.05 m × 0.05 m cells in every view.
    fn default() -> Self {
        Self::uniform(0.0025)
    }
}

impl GridSpec {
    pub fn new(mu_top: f64, mu_side: f64, mu_front: f64) -> Result<Self, MetricError> {
        if [mu_top, mu_side, mu_front].iter().all(|m| m.is_finite() && *m > 0.0) {
            Ok(Self {
                mu_top,
                mu_side,
                mu_front,
            })
        } else {
            Err(MetricError::BadGrid)
        }
    }

    pub fn uniform(mu: f64) -> Self {
        Self {
            mu_top: mu,
            mu_side: mu,
            mu_front: mu,
        }
    }
}

/// Box dimensions of a vehicle, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimensions {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl From<&Vehicle> for Dimensions {
    fn from(v: &Vehicle) -> Self {
        Self {
            length: v.length,
            width: v.width,
            height: v.height,
        }
    }
}

/// `ceil(x)`, except that values within relative 1e-9 of an integer round
/// to it. Keeps exact divisions like `4.5 * 1.8 / 0.0025` from gaining a cell.
pub(crate) fn ceil_tol(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// World points expressed in the vehicle frame: `(p − C) · R_yaw` with `p`
/// as a row vector, i.e. `R_yawᵀ (p − C)`.
pub fn to_vehicle_frame(points: &[Point3<f64>], vehicle: &Vehicle) -> Vec<Vector3<f64>> {
    let (s, c) = vehicle.heading.sin_cos();
    points
        .iter()
        .map(|p| {
            let d = p - vehicle.center;
            // Row vector times the columns of R_yaw.
            Vector3::new(d.x * c + d.y * s, -d.x * s + d.y * c, d.z)
        })
        .collect()
}

/// Occupied cells of the three views as sorted `(u, v)` index pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ViewOccupancy {
    /// `(x, y)` cells.
    pub top: Vec<(u32, u32)>,
    /// `(x, z)` cells.
    pub side: Vec<(u32, u32)>,
    /// `(y, z)` cells.
    pub front: Vec<(u32, u32)>,
}

impl ViewOccupancy {
    pub fn counts(&self) -> [usize; 3] {
        [self.top.len(), self.side.len(), self.front.len()]
    }
}

/// One axis of a projection grid.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Axis {
    half: f64,
    edge: f64,
    cells: u32,
}

impl Axis {
    pub(crate) fn new(extent: f64, edge: f64) -> Self {
        Self {
            half: extent / 2.0,
            edge,
            cells: ceil_tol(extent / edge).max(1.0) as u32,
        }
    }

    pub(crate) fn contains(&self, x: f64) -> bool {
        x.abs() <= self.half + BOUNDARY_TOLERANCE
    }

    /// Floor index from the min corner, clamped into the grid.
    pub(crate) fn index(&self, x: f64) -> u32 {
        let i = ((x + self.half) / self.edge).floor();
        i.clamp(0.0, (self.cells - 1) as f64) as u32
    }

    pub(crate) fn cells(&self) -> u32 {
        self.cells
    }
}

fn sorted_unique(mut cells: Vec<(u32, u32)>) -> Vec<(u32, u32)> {
    cells.sort_unstable();
    cells.dedup();
    cells
}

/// Rasterizes vehicle-frame points on the three projection grids.
/// Points outside the box by more than [`BOUNDARY_TOLERANCE`] are dropped.
pub fn project_and_grid(points_veh: &[Vector3<f64>], dims: Dimensions, grid: &GridSpec) -> ViewOccupancy {
    let edge_t = grid.mu_top.sqrt();
    let edge_s = grid.mu_side.sqrt();
    let edge_f = grid.mu_front.sqrt();
    let (tx, ty) = (Axis::new(dims.length, edge_t), Axis::new(dims.width, edge_t));
    let (sx, sz) = (Axis::new(dims.length, edge_s), Axis::new(dims.height, edge_s));
    let (fy, fz) = (Axis::new(dims.width, edge_f), Axis::new(dims.height, edge_f));

    let mut top = Vec::with_capacity(points_veh.len());
    let mut side = Vec::with_capacity(points_veh.len());
    let mut front = Vec::with_capacity(points_veh.len());
    for p in points_veh {
        if !(tx.contains(p.x) && ty.contains(p.y) && sz.contains(p.z)) {
            continue;
        }
        top.push((tx.index(p.x), ty.index(p.y)));
        side.push((sx.index(p.x), sz.index(p.z)));
        front.push((fy.index(p.y), fz.index(p.z)));
    }
    ViewOccupancy {
        top: sorted_unique(top),
        side: sorted_unique(side),
        front: sorted_unique(front),
    }
}

/// Cell counts `[N_top, N_side, N_front]`, each `ceil(area / μ)`.
pub fn grid_counts(dims: Dimensions, grid: &GridSpec) -> [u64; 3] {
    [
        ceil_tol(dims.length * dims.width / grid.mu_top) as u64,
        ceil_tol(dims.length * dims.height / grid.mu_side) as u64,
        ceil_tol(dims.width * dims.height / grid.mu_front) as u64,
    ]
}

/// Occupancy probabilities `(p_top, p_side, p_front)`.
///
/// Capped at 1: with non-integral cell counts the floor-indexed grid can hold
/// slightly more cells than `ceil(area / μ)`.
pub fn vgop(occupied: [usize; 3], dims: Dimensions, grid: &GridSpec) -> [f64; 3] {
    let n = grid_counts(dims, grid);
    std::array::from_fn(|k| (occupied[k] as f64 / n[k] as f64).min(1.0))
}

/// Perception entropy in bits with `0 · log₂ 0 = 0`.
pub fn pe_vgop(p: [f64; 3]) -> f64 {
    p.iter().map(|&q| if q > 0.0 { -q * q.log2() } else { 0.0 }).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VgopReport {
    pub vehicle_id: u32,
    pub point_count: usize,
    /// `[N_top, N_side, N_front]`.
    pub cells: [u64; 3],
    pub occupied: [usize; 3],
    /// `[p_top, p_side, p_front]`.
    pub probability: [f64; 3],
    /// Bits.
    pub entropy: f64,
}

impl VgopReport {
    pub fn p_top(&self) -> f64 {
        self.probability[0]
    }

    pub fn p_side(&self) -> f64 {
        self.probability[1]
    }

    pub fn p_front(&self) -> f64 {
        self.probability[2]
    }

    /// Mean of the three view probabilities; the detection indicator input.
    pub fn mean_vgop(&self) -> f64 {
        self.probability.iter().sum::<f64>() / 3.0
    }

    pub fn detected(&self, delta: f64) -> bool {
        self.mean_vgop() >= delta
    }
}

pub const REPORT_HEADER: &str = "frame_id,vehicle_id,point_count,n_top,n_side,n_front,\
occupied_top,occupied_side,occupied_front,p_top,p_side,p_front,mean_vgop,entropy";

/// Appends one report row in [`REPORT_HEADER`] order.
pub fn write_report_row(out: &mut String, frame_id: u64, r: &VgopReport) {
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{:.9},{:.9},{:.9},{:.9},{:.9}",
        frame_id,
        r.vehicle_id,
        r.point_count,
        r.cells[0],
        r.cells[1],
        r.cells[2],
        r.occupied[0],
        r.occupied[1],
        r.occupied[2],
        r.probability[0],
        r.probability[1],
        r.probability[2],
        r.mean_vgop(),
        r.entropy
    );
}

/// Full metric pipeline for one vehicle's world-frame points.
pub fn evaluate_vehicle(points: &[Point3<f64>], vehicle: &Vehicle, grid: &GridSpec) -> VgopReport {
    let dims = Dimensions::from(vehicle);
    let local = to_vehicle_frame(points, vehicle);
    let occupied = project_and_grid(&local, dims, grid).counts();
    let probability = vgop(occupied, dims, grid);
    VgopReport {
        vehicle_id: vehicle.id,
        point_count: points.len(),
        cells: grid_counts(dims, grid),
        occupied,
        probability,
        entropy: pe_vgop(probability),
    }
}

/// World positions of the cloud grouped by vehicle id.
fn points_by_vehicle(cloud: &LabeledPointCloud) -> BTreeMap<u32, Vec<Point3<f64>>> {
    let mut grouped: BTreeMap<u32, Vec<Point3<f64>>> = BTreeMap::new();
    for p in &cloud.points {
        if let HitLabel::Vehicle(id) = p.label {
            grouped.entry(id).or_default().push(p.position);
        }
    }
    grouped
}

/// One report per vehicle of the frame, in frame order. Vehicles without
/// returns get all-zero probabilities and zero entropy.
pub fn evaluate_frame(
    cloud: &LabeledPointCloud,
    frame: &ScenarioFrame,
    grid: &GridSpec,
) -> Result<Vec<VgopReport>, MetricError> {
    if cloud.frame_id != frame.frame_id {
        return Err(MetricError::FrameMismatch {
            cloud: cloud.frame_id,
            frame: frame.frame_id,
        });
    }
    let grouped = points_by_vehicle(cloud);
    Ok(frame
        .vehicles
        .iter()
        .map(|v| evaluate_vehicle(grouped.get(&v.id).map_or(&[][..], Vec::as_slice), v, grid))
        .collect())
}

/// Simple point-statistics proxies for comparison against PE-VGOP.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineMetrics {
    pub vehicle_id: u32,
    pub point_count: usize,
    pub occupied_voxels: usize,
    pub total_voxels: u64,
    /// `-q log₂ q` with `q` the occupied fraction of the box's voxels.
    pub voxel_entropy: f64,
}

/// Point count, occupied 3D voxels and a one-term voxel entropy per vehicle.
pub fn baseline_metrics(
    cloud: &LabeledPointCloud,
    frame: &ScenarioFrame,
    voxel_edge: f64,
) -> Result<Vec<BaselineMetrics>, MetricError> {
    if !(voxel_edge.is_finite() && voxel_edge > 0.0) {
        return Err(MetricError::BadVoxelEdge);
    }
    if cloud.frame_id != frame.frame_id {
        return Err(MetricError::FrameMismatch {
            cloud: cloud.frame_id,
            frame: frame.frame_id,
        });
    }
    let grouped = points_by_vehicle(cloud);
    Ok(frame
        .vehicles
        .iter()
        .map(|v| {
            let points = grouped.get(&v.id).map_or(&[][..], Vec::as_slice);
            let axes = [
                Axis::new(v.length, voxel_edge),
                Axis::new(v.width, voxel_edge),
                Axis::new(v.height, voxel_edge),
            ];
            let total: u64 = axes.iter().map(|a| a.cells() as u64).product();
            let mut voxels: Vec<[u32; 3]> = to_vehicle_frame(points, v)
                .iter()
                .filter(|p| (0..3).all(|k| axes[k].contains(p[k])))
                .map(|p| std::array::from_fn(|k| axes[k].index(p[k])))
                .collect();
            voxels.sort_unstable();
            voxels.dedup();
            let q = voxels.len() as f64 / total as f64;
            BaselineMetrics {
                vehicle_id: v.id,
                point_count: points.len(),
                occupied_voxels: voxels.len(),
                total_voxels: total,
                voxel_entropy: if q > 0.0 { -q * q.log2() } else { 0.0 },
            }
        })
        .collect())
}
