//! Brute-force references used to cross-check the library.
//!
//! Everything here is written independently of the library's fast paths:
//! the ray–box test clips against world-frame face planes, the frame caster
//! visits every ray against every box, and the grid scan tests every cell.

#![allow(dead_code)]

use lidar_deploy::geometry::{LidarModel, RaySet};
use lidar_deploy::scene::{ScenarioFrame, Vehicle};
use nalgebra::{Point3, Vector3};
use rand::Rng;

/// Ray–box entry distance by clipping against the three pairs of face
/// planes expressed in world coordinates.
pub fn plane_clip_intersect(origin: &Point3<f64>, dir: &Vector3<f64>, v: &Vehicle) -> Option<f64> {
    let (s, c) = v.heading.sin_cos();
    let axes = [
        Vector3::new(c, s, 0.0),
        Vector3::new(-s, c, 0.0),
        Vector3::new(0.0, 0.0, 1.0),
    ];
    let half = [v.length / 2.0, v.width / 2.0, v.height / 2.0];
    let rel = origin - v.center;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for k in 0..3 {
        let e = axes[k].dot(&rel);
        let f = axes[k].dot(dir);
        if f == 0.0 {
            if e < -half[k] || e >= half[k] {
                return None;
            }
            continue;
        }
        let a = (-half[k] - e) / f;
        let b = (half[k] - e) / f;
        lo = lo.max(a.min(b));
        hi = hi.min(a.max(b));
    }
    if lo >= hi || hi <= 0.0 {
        None
    } else {
        Some(lo.max(0.0))
    }
}

/// First distance along the ray at which the sampled point lies in the box,
/// marching in steps of `step` up to `limit`.
pub fn march_intersect(origin: &Point3<f64>, dir: &Vector3<f64>, v: &Vehicle, step: f64, limit: f64) -> Option<f64> {
    let n = (limit / step).ceil() as usize;
    (0..=n)
        .map(|i| i as f64 * step)
        .find(|&t| v.contains(&(origin + dir * t), 0.0))
}

/// `(beam, azimuth, vehicle id or None for ground, range)` per returning ray.
pub type NaiveHit = (u32, u32, Option<u32>, f64);

/// Every ray against every vehicle and the ground; nearest wins, distance
/// ties go to the lower id, vehicles win ties with the ground.
pub fn naive_cast(rays: &RaySet, frame: &ScenarioFrame, model: &LidarModel) -> Vec<NaiveHit> {
    let mut out = Vec::new();
    for ray in rays.iter() {
        let mut best: Option<(f64, u32)> = None;
        for v in &frame.vehicles {
            if let Some(t) = plane_clip_intersect(&ray.origin, &ray.direction, v) {
                let better = match best {
                    None => true,
                    Some((bt, bid)) => t < bt || (t == bt && v.id < bid),
                };
                if better {
                    best = Some((t, v.id));
                }
            }
        }
        let ground = (ray.direction.z < 0.0).then(|| -ray.origin.z / ray.direction.z);
        let hit = match (best, ground) {
            (Some((t, _)), Some(g)) if g < t => (g, None),
            (Some((t, id)), _) => (t, Some(id)),
            (None, Some(g)) => (g, None),
            (None, None) => continue,
        };
        if model.min_range() <= hit.0 && hit.0 <= model.max_range() {
            out.push((ray.beam_index, ray.azimuth_index, hit.1, hit.0));
        }
    }
    out
}

/// Occupied cells of one view by scanning every cell and testing every point.
/// Cell `i` on an axis of extent `e` covers `[-e/2 + i·s, -e/2 + (i+1)·s)`;
/// the first and last cells also take points up to `tol` outside the box.
pub fn naive_view_cells(points: &[(f64, f64)], extent: (f64, f64), edge: f64, tol: f64) -> Vec<(u32, u32)> {
    let count = |e: f64| {
        let q = e / edge;
        if (q - q.round()).abs() < 1e-9 * q.max(1.0) {
            q.round() as u32
        } else {
            q.ceil() as u32
        }
    };
    let (nu, nv) = (count(extent.0), count(extent.1));
    let inside = |x: f64, e: f64, i: u32, n: u32| {
        let lo = if i == 0 {
            -e / 2.0 - tol
        } else {
            -e / 2.0 + i as f64 * edge
        };
        let hi = if i + 1 == n {
            e / 2.0 + tol
        } else {
            -e / 2.0 + (i + 1) as f64 * edge
        };
        if i + 1 == n {
            lo <= x && x <= hi
        } else {
            lo <= x && x < hi
        }
    };
    let mut cells = Vec::new();
    for i in 0..nu {
        for j in 0..nv {
            if points
                .iter()
                .any(|&(u, v)| inside(u, extent.0, i, nu) && inside(v, extent.1, j, nv))
            {
                cells.push((i, j));
            }
        }
    }
    cells
}

/// A frame of non-overlapping default-ish vehicles scattered around the origin.
pub fn random_frame<R: Rng>(rng: &mut R, frame_id: u64, max_vehicles: usize, reach: f64) -> ScenarioFrame {
    let count = rng.gen_range(1..=max_vehicles);
    let mut vehicles: Vec<Vehicle> = Vec::new();
    let mut attempts = 0;
    while vehicles.len() < count && attempts < 1000 {
        attempts += 1;
        let r = rng.gen_range(4.0..reach);
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let l = rng.gen_range(3.5..6.0);
        let w = rng.gen_range(1.6..2.2);
        let h = rng.gen_range(1.3..2.5);
        let v = Vehicle::on_ground(
            vehicles.len() as u32 + 1,
            r * phi.cos(),
            r * phi.sin(),
            rng.gen_range(-3.1..3.1),
            l,
            w,
            h,
        )
        .unwrap();
        let clear = vehicles
            .iter()
            .all(|o| (o.center - v.center).xy().norm() > o.bounding_radius() + v.bounding_radius());
        if clear {
            vehicles.push(v);
        }
    }
    ScenarioFrame::new(frame_id, vehicles).unwrap()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
