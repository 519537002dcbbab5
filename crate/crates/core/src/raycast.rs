//! Analytic ray casting of deployed LiDAR rays against vehicle boxes.
//!
//! Each ray returns at most one point: the nearest intersection among all
//! vehicles and the ground plane `z = 0`. Hits closer than the sensor's
//! minimum range consume the ray without producing a point.
//!
//! Only rays that can reach a vehicle's bounding sphere are tested against
//! it. The candidate set is derived per beam in the sensor frame, so the work
//! per frame scales with the solid angle the vehicles cover rather than with
//! the full ray count.

use std::fmt::Write as _;

use nalgebra::{Point3, Vector3};

use crate::geometry::{LidarModel, RaySet};
use crate::scene::{ScenarioFrame, Vehicle};

/// Slack on the culling cone so rounding never drops a true hit.
const CULL_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HitLabel {
    Vehicle(u32),
    Ground,
}

impl HitLabel {
    pub fn vehicle_id(&self) -> Option<u32> {
        match self {
            HitLabel::Vehicle(id) => Some(*id),
            HitLabel::Ground => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint {
    pub position: Point3<f64>,
    pub label: HitLabel,
    pub beam_index: u32,
    pub azimuth_index: u32,
    pub range: f64,
}

/// Points of one frame ordered by `(beam_index, azimuth_index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPointCloud {
    pub frame_id: u64,
    pub points: Vec<LabeledPoint>,
}

impl LabeledPointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Writes `frame_id,vehicle_id,beam_index,azimuth_index,x,y,z,range`
    /// rows with six decimals; ground returns carry vehicle id `-1`.
    pub fn write_csv(&self, out: &mut String) {
        for p in &self.points {
            let id = p.label.vehicle_id().map_or(-1, i64::from);
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
                self.frame_id, id, p.beam_index, p.azimuth_index, p.position.x, p.position.y, p.position.z, p.range
            );
        }
    }
}

/// Entry distance of a ray into a vehicle box, if any.
///
/// The ray is moved into the box frame and clipped against the three slabs.
/// A ray parallel to a slab hits only when its origin lies in `[-h, h)` for
/// that axis, and an entry that coincides with the exit (a ray grazing an
/// edge) is a miss. A ray starting inside the box returns 0.
pub fn ray_obb_intersect(origin: &Point3<f64>, direction: &Vector3<f64>, vehicle: &Vehicle) -> Option<f64> {
    let yaw = vehicle.yaw();
    let o = yaw.apply_inverse(&(origin - vehicle.center));
    let d = yaw.apply_inverse(direction);
    let half = vehicle.half_extents();
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    for k in 0..3 {
        if d[k] == 0.0 {
            if o[k] < -half[k] || o[k] >= half[k] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d[k];
        let mut t0 = (-half[k] - o[k]) * inv;
        let mut t1 = (half[k] - o[k]) * inv;
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        t_near = t_near.max(t0);
        t_far = t_far.min(t1);
    }
    if t_near >= t_far || t_far <= 0.0 {
        return None;
    }
    Some(t_near.max(0.0))
}

/// Distance along the ray to the ground plane, if it heads down to it.
pub fn ground_intersect(origin: &Point3<f64>, direction: &Vector3<f64>) -> Option<f64> {
    if direction.z < 0.0 && origin.z >= 0.0 {
        Some(-origin.z / direction.z)
    } else {
        None
    }
}

/// Inclusive azimuth index range, possibly wrapping past the last index.
#[derive(Debug, Clone, Copy)]
enum AzimuthWindow {
    All,
    Span { start: i64, end: i64 },
}

/// Rays of one beam that may meet a sphere seen at sensor-frame elevation
/// `el_c`, azimuth `az_c` and angular radius `half_angle`.
///
/// A unit ray at `(α, β)` is within `half_angle` of the center direction iff
/// `cos β cos β_c (1 − cos Δα) ≤ cos(β − β_c) − cos(half_angle)`.
fn azimuth_window(beam_elev: f64, el_c: f64, az_c: f64, half_angle: f64, step: f64) -> Option<AzimuthWindow> {
    let slack = (beam_elev - el_c).cos() - half_angle.cos();
    if slack < -CULL_MARGIN {
        return None;
    }
    let scale = beam_elev.cos() * el_c.cos();
    if scale <= 1e-12 {
        return Some(AzimuthWindow::All);
    }
    let rhs = slack.max(0.0) / scale;
    if rhs >= 2.0 {
        return Some(AzimuthWindow::All);
    }
    let delta = (1.0 - rhs).clamp(-1.0, 1.0).acos() + step + CULL_MARGIN;
    if delta >= std::f64::consts::PI {
        return Some(AzimuthWindow::All);
    }
    let start = ((az_c - delta) / step).ceil() as i64;
    let end = ((az_c + delta) / step).floor() as i64;
    Some(AzimuthWindow::Span { start, end })
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    ray: usize,
    t: f64,
    vehicle: u32,
}

/// Nearest vehicle hit for every ray that meets some vehicle, ordered by ray
/// index. Ties in distance go to the lower vehicle id.
fn nearest_vehicle_hits(rays: &RaySet, frame: &ScenarioFrame, max_range: f64) -> Vec<Hit> {
    let origin = rays.origin();
    let rotation = rays.rotation();
    let az_count = rays.azimuth_count();
    let step = rays.azimuth_step();
    let mut hits = Vec::new();

    for vehicle in &frame.vehicles {
        let c = rotation.apply_inverse(&(vehicle.center - origin));
        let dist = c.norm();
        let radius = vehicle.bounding_radius() * (1.0 + 1e-9) + 1e-9;
        if dist - radius > max_range {
            continue;
        }
        let inside = dist <= radius;
        let (el_c, az_c, half_angle) = if inside {
            (0.0, 0.0, std::f64::consts::PI)
        } else {
            (
                (c.z / dist).clamp(-1.0, 1.0).asin(),
                c.x.atan2(c.y),
                (radius / dist).asin(),
            )
        };

        for (b, &elev) in rays.elevations().iter().enumerate() {
            let window = if inside {
                Some(AzimuthWindow::All)
            } else {
                azimuth_window(elev, el_c, az_c, half_angle, step)
            };
            let mut visit = |a: usize| {
                let dir = rays.direction(b, a);
                if let Some(t) = ray_obb_intersect(&origin, &dir, vehicle) {
                    hits.push(Hit {
                        ray: b * az_count + a,
                        t,
                        vehicle: vehicle.id,
                    });
                }
            };
            match window {
                None => {}
                Some(AzimuthWindow::Span { start, end }) if end - start + 1 < az_count as i64 => {
                    for i in start..=end {
                        visit(i.rem_euclid(az_count as i64) as usize);
                    }
                }
                Some(_) => (0..az_count).for_each(&mut visit),
            }
        }
    }

    hits.sort_by(|a, b| {
        a.ray
            .cmp(&b.ray)
            .then(a.t.total_cmp(&b.t))
            .then(a.vehicle.cmp(&b.vehicle))
    });
    hits.dedup_by_key(|h| h.ray);
    hits
}

fn point_for(rays: &RaySet, ray: usize, t: f64, label: HitLabel) -> LabeledPoint {
    let az_count = rays.azimuth_count();
    let (b, a) = (ray / az_count, ray % az_count);
    let r = rays.ray(b, a);
    LabeledPoint {
        position: r.at(t),
        label,
        beam_index: b as u32,
        azimuth_index: a as u32,
        range: t,
    }
}

/// Resolves the nearest hit against the ground and the sensor range limits.
fn resolve(rays: &RaySet, hit: &Hit, model: &LidarModel) -> Option<LabeledPoint> {
    let az_count = rays.azimuth_count();
    let dir = rays.direction(hit.ray / az_count, hit.ray % az_count);
    let (t, label) = match ground_intersect(&rays.origin(), &dir) {
        Some(g) if g < hit.t => (g, HitLabel::Ground),
        _ => (hit.t, HitLabel::Vehicle(hit.vehicle)),
    };
    (model.min_range() <= t && t <= model.max_range()).then(|| point_for(rays, hit.ray, t, label))
}

/// Returns only the vehicle points of a frame, skipping the ground sweep.
/// Identical to the vehicle subset of [`cast_frame`].
pub fn cast_vehicle_points(rays: &RaySet, frame: &ScenarioFrame, model: &LidarModel) -> LabeledPointCloud {
    let points = nearest_vehicle_hits(rays, frame, model.max_range())
        .iter()
        .filter_map(|h| resolve(rays, h, model))
        .filter(|p| p.label != HitLabel::Ground)
        .collect();
    LabeledPointCloud {
        frame_id: frame.frame_id,
        points,
    }
}

/// Casts every ray of the deployed sensor into the frame.
pub fn cast_frame(rays: &RaySet, frame: &ScenarioFrame, model: &LidarModel) -> LabeledPointCloud {
    let hits = nearest_vehicle_hits(rays, frame, model.max_range());
    let origin = rays.origin();
    let mut points = Vec::new();
    let mut next = hits.iter().peekable();
    for ray in 0..rays.len() {
        if let Some(hit) = next.next_if(|h| h.ray == ray) {
            points.extend(resolve(rays, hit, model));
            continue;
        }
        let az_count = rays.azimuth_count();
        let dir = rays.direction(ray / az_count, ray % az_count);
        if let Some(g) = ground_intersect(&origin, &dir) {
            if model.min_range() <= g && g <= model.max_range() {
                points.push(point_for(rays, ray, g, HitLabel::Ground));
            }
        }
    }
    LabeledPointCloud {
        frame_id: frame.frame_id,
        points,
    }
}

/// Points that belong to one vehicle.
pub fn vehicle_points(cloud: &LabeledPointCloud, vehicle_id: u32) -> Vec<&LabeledPoint> {
    cloud
        .points
        .iter()
        .filter(|p| p.label == HitLabel::Vehicle(vehicle_id))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{deploy_rays, Deployment};

    fn boxed(id: u32, x: f64, y: f64, z: f64, heading: f64) -> Vehicle {
        Vehicle::new(id, Point3::new(x, y, z), 2.0, 2.0, 2.0, heading).unwrap()
    }

    #[test]
    fn axis_aligned_hit_and_miss() {
        let o = Point3::new(0.0, 0.0, 1.0);
        let d = Vector3::new(0.0, 1.0, 0.0);
        let t = ray_obb_intersect(&o, &d, &boxed(1, 0.0, 10.0, 1.0, 0.0)).unwrap();
        assert!((t - 9.0).abs() < 1e-12);
        assert_eq!(ray_obb_intersect(&o, &d, &boxed(1, 10.0, 0.0, 1.0, 0.0)), None);
    }

    #[test]
    fn box_behind_and_inside() {
        let o = Point3::new(0.0, 0.0, 1.0);
        let d = Vector3::new(0.0, 1.0, 0.0);
        assert_eq!(ray_obb_intersect(&o, &d, &boxed(1, 0.0, -10.0, 1.0, 0.0)), None);
        assert_eq!(ray_obb_intersect(&o, &d, &boxed(1, 0.0, 0.5, 1.0, 0.0)), Some(0.0));
    }

    #[test]
    fn grazing_is_half_open() {
        let d = Vector3::new(0.0, 1.0, 0.0);
        let b = boxed(1, 0.0, 10.0, 1.0, 0.0);
        // Along the low x face: inside the half-open slab.
        assert!(ray_obb_intersect(&Point3::new(-1.0, 0.0, 1.0), &d, &b).is_some());
        // Along the high x face: outside.
        assert!(ray_obb_intersect(&Point3::new(1.0, 0.0, 1.0), &d, &b).is_none());
    }

    #[test]
    fn ground_plane() {
        let o = Point3::new(0.0, 0.0, 2.0);
        let t = ground_intersect(&o, &Vector3::new(0.0, 0.6, -0.8)).unwrap();
        assert!((t - 2.5).abs() < 1e-12);
        assert!(ground_intersect(&o, &Vector3::new(0.0, 1.0, 0.0)).is_none());
    }

    fn single_frame(vehicles: Vec<Vehicle>) -> ScenarioFrame {
        ScenarioFrame::new(0, vehicles).unwrap()
    }

    #[test]
    fn nearer_box_occludes_farther() {
        let model = LidarModel::new("t", vec![-1.0, 0.0, 1.0], 1.0, 0.0, 100.0).unwrap();
        let dep = Deployment::from_degrees(0.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        let rays = deploy_rays(&model, &dep);
        let near = Vehicle::on_ground(2, 0.0, 10.0, 0.0, 2.0, 2.0, 2.0).unwrap();
        let far = Vehicle::on_ground(1, 0.0, 20.0, 0.0, 2.0, 2.0, 2.0).unwrap();
        let cloud = cast_frame(&rays, &single_frame(vec![far, near]), &model);
        assert!(!vehicle_points(&cloud, 2).is_empty());
        assert!(vehicle_points(&cloud, 1).is_empty());
    }

    #[test]
    fn beyond_max_range_yields_nothing() {
        let model = LidarModel::new("t", vec![-1.0, 0.0, 1.0], 1.0, 0.0, 50.0).unwrap();
        let dep = Deployment::from_degrees(0.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        let rays = deploy_rays(&model, &dep);
        let v = Vehicle::on_ground(1, 0.0, 60.0, 0.0, 4.5, 1.8, 1.5).unwrap();
        let frame = single_frame(vec![v]);
        assert!(vehicle_points(&cast_frame(&rays, &frame, &model), 1).is_empty());
        assert!(cast_vehicle_points(&rays, &frame, &model).is_empty());
    }

    #[test]
    fn near_blind_zone_consumes_ray() {
        let model = LidarModel::new("t", vec![0.0], 1.0, 5.0, 50.0).unwrap();
        let dep = Deployment::from_degrees(0.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        let rays = deploy_rays(&model, &dep);
        let near = Vehicle::on_ground(1, 0.0, 3.0, 0.0, 1.0, 1.0, 2.0).unwrap();
        let far = Vehicle::on_ground(2, 0.0, 20.0, 0.0, 1.0, 1.0, 2.0).unwrap();
        let cloud = cast_frame(&rays, &single_frame(vec![near, far]), &model);
        assert!(vehicle_points(&cloud, 1).is_empty());
        // The azimuth-0 ray is blocked by the near box and must not reach the far one.
        assert!(vehicle_points(&cloud, 2).iter().all(|p| p.azimuth_index != 0));
    }

    #[test]
    fn labels_partition_cloud() {
        let model = LidarModel::rs16();
        let dep = Deployment::from_degrees(0.0, 0.0, 3.0, 8.0, 0.0).unwrap();
        let rays = deploy_rays(&model, &dep);
        let vs = vec![
            Vehicle::on_ground(1, 4.0, -12.0, 1.0, 4.5, 1.8, 1.5).unwrap(),
            Vehicle::on_ground(2, 8.0, -20.0, -1.6, 4.5, 1.8, 1.5).unwrap(),
        ];
        let cloud = cast_frame(&rays, &single_frame(vs), &model);
        let n1 = vehicle_points(&cloud, 1).len();
        let n2 = vehicle_points(&cloud, 2).len();
        let ground = cloud.points.iter().filter(|p| p.label == HitLabel::Ground).count();
        assert!(n1 > 0 && n2 > 0 && ground > 0);
        assert_eq!(n1 + n2 + ground, cloud.len());
        assert!(vehicle_points(&cloud, 99).is_empty());
        assert!(cloud.len() <= rays.len());
        let vehicles_only = cast_vehicle_points(&rays, &single_frame(vec![]), &model);
        assert!(vehicles_only.is_empty());
    }

    #[test]
    fn vehicle_points_filters_by_label() {
        let p = |label| LabeledPoint {
            position: Point3::origin(),
            label,
            beam_index: 0,
            azimuth_index: 0,
            range: 1.0,
        };
        let cloud = LabeledPointCloud {
            frame_id: 0,
            points: vec![
                p(HitLabel::Vehicle(1)),
                p(HitLabel::Vehicle(1)),
                p(HitLabel::Vehicle(2)),
            ],
        };
        assert_eq!(vehicle_points(&cloud, 1).len(), 2);
        assert!(vehicle_points(&cloud, 3).is_empty());
    }

    #[test]
    fn export_format() {
        let cloud = LabeledPointCloud {
            frame_id: 4,
            points: vec![LabeledPoint {
                position: Point3::new(1.0, -2.5, 0.125),
                label: HitLabel::Ground,
                beam_index: 3,
                azimuth_index: 17,
                range: 2.0,
            }],
        };
        let mut out = String::new();
        cloud.write_csv(&mut out);
        assert_eq!(out, "4,-1,3,17,1.000000,-2.500000,0.125000,2.000000\n");
    }
}
