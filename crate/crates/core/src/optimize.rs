//! Deployment objective and the DE-PSO search.
//!
//! The objective rewards every detectable vehicle with its perception entropy
//! and charges a constant penalty for every vehicle whose mean VGOP stays
//! below the detection threshold. The solver is a particle swarm whose
//! velocity is, with probability `γ` per particle and iteration, replaced by
//! a differential-evolution step `w₂ (P_j − P_k)`.
//!
//! Iterations are synchronous: all moves of an iteration are computed from
//! the swarm state at its start, fitness values are evaluated (possibly in
//! parallel), then personal and global bests are updated in particle order.
//! All random numbers come from one seeded stream drawn in particle order, so
//! results do not depend on how evaluations are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{deploy_rays, Deployment, GeometryError, LidarModel};
use crate::metric::{evaluate_frame, GridSpec, VgopReport};
use crate::raycast::cast_vehicle_points;
use crate::scene::{Scenario, ScenarioFrame};

#[derive(Debug, Error, PartialEq)]
pub enum OptimizeError {
    #[error("invalid swarm parameters: {0}")]
    InvalidSwarm(String),
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("invalid objective parameters: {0}")]
    InvalidObjective(String),
}

/// A searchable deployment coordinate. Tilts are in degrees, the rest in meters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Height,
    TiltX,
    TiltY,
    X,
    Y,
}

impl Dimension {
    pub fn name(&self) -> &'static str {
        match self {
            Dimension::Height => "height",
            Dimension::TiltX => "tilt_x_deg",
            Dimension::TiltY => "tilt_y_deg",
            Dimension::X => "x",
            Dimension::Y => "y",
        }
    }

    fn read(&self, d: &Deployment) -> f64 {
        match self {
            Dimension::Height => d.position.z,
            Dimension::TiltX => d.tilt_x_deg(),
            Dimension::TiltY => d.tilt_y_deg(),
            Dimension::X => d.position.x,
            Dimension::Y => d.position.y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub dimension: Dimension,
    pub lower: f64,
    pub upper: f64,
}

/// Box-constrained search space over a subset of deployment coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    bounds: Vec<Bound>,
}

impl SearchSpace {
    pub fn new(bounds: Vec<Bound>) -> Result<Self, OptimizeError> {
        if bounds.is_empty() {
            return Err(OptimizeError::InvalidSpace("no dimensions".into()));
        }
        for (i, b) in bounds.iter().enumerate() {
            if !(b.lower.is_finite() && b.upper.is_finite() && b.lower < b.upper) {
                return Err(OptimizeError::InvalidSpace(format!(
                    "{} needs lower < upper, got [{}, {}]",
                    b.dimension.name(),
                    b.lower,
                    b.upper
                )));
            }
            if bounds[..i].iter().any(|o| o.dimension == b.dimension) {
                return Err(OptimizeError::InvalidSpace(format!(
                    "{} listed twice",
                    b.dimension.name()
                )));
            }
            if b.dimension == Dimension::Height && b.lower < 0.0 {
                return Err(OptimizeError::InvalidSpace("height below ground".into()));
            }
        }
        Ok(Self { bounds })
    }

    /// Mount height 2–4.5 m and X tilt 0–25°.
    pub fn height_and_tilt() -> Self {
        Self::new(vec![
            Bound {
                dimension: Dimension::Height,
                lower: 2.0,
                upper: 4.5,
            },
            Bound {
                dimension: Dimension::TiltX,
                lower: 0.0,
                upper: 25.0,
            },
        ])
        .expect("static bounds are valid")
    }

    pub fn bounds(&self) -> &[Bound] {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    pub fn contains(&self, position: &[f64]) -> bool {
        position.len() == self.len()
            && self
                .bounds
                .iter()
                .zip(position)
                .all(|(b, &x)| b.lower <= x && x <= b.upper)
    }

    /// Overrides the searched coordinates of `base`.
    pub fn to_deployment(&self, position: &[f64], base: &Deployment) -> Result<Deployment, GeometryError> {
        let mut p = base.position;
        let (mut tx, mut ty) = (base.tilt_x_deg(), base.tilt_y_deg());
        for (b, &x) in self.bounds.iter().zip(position) {
            match b.dimension {
                Dimension::Height => p.z = x,
                Dimension::TiltX => tx = x,
                Dimension::TiltY => ty = x,
                Dimension::X => p.x = x,
                Dimension::Y => p.y = x,
            }
        }
        Deployment::from_degrees(p.x, p.y, p.z, tx, ty)
    }

    /// Searched coordinates of a deployment.
    pub fn position_of(&self, deployment: &Deployment) -> Vec<f64> {
        self.bounds.iter().map(|b| b.dimension.read(deployment)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwarmParams {
    pub iterations: usize,
    pub particles: usize,
    /// w₁
    pub inertia: f64,
    /// w₂
    pub differential_weight: f64,
    /// a₁
    pub cognitive: f64,
    /// a₂
    pub social: f64,
    /// γ
    pub differential_threshold: f64,
    pub seed: u64,
}

impl Default for SwarmParams {
    fn default() -> Self {
        Self {
            iterations: 100,
            particles: 20,
            inertia: 0.7,
            differential_weight: 0.5,
            cognitive: 0.3,
            social: 0.2,
            differential_threshold: 0.1,
            seed: 0,
        }
    }
}

impl SwarmParams {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let fail = |m: &str| Err(OptimizeError::InvalidSwarm(m.to_string()));
        if self.iterations < 1 {
            return fail("need at least one iteration");
        }
        if self.particles < 1 {
            return fail("need at least one particle");
        }
        if self.particles < 4 && self.differential_threshold > 0.0 {
            return fail("differential mutation needs at least 4 particles");
        }
        if !(0.0..=1.0).contains(&self.differential_threshold) {
            return fail("differential threshold must lie in [0, 1]");
        }
        let coefficients = [self.inertia, self.differential_weight, self.cognitive, self.social];
        if !coefficients.iter().all(|c| c.is_finite() && *c >= 0.0) {
            return fail("weights and accelerations must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveParams {
    /// Detection threshold on the mean VGOP.
    pub delta: f64,
    /// Constant loss; each undetected vehicle contributes `-|loss|`.
    pub loss: f64,
    pub grid: GridSpec,
    /// Sum over every `frame_stride`-th frame.
    pub frame_stride: usize,
}

impl Default for ObjectiveParams {
    fn default() -> Self {
        Self {
            delta: 0.005,
            loss: -1.0,
            grid: GridSpec::default(),
            frame_stride: 1,
        }
    }
}

impl ObjectiveParams {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(OptimizeError::InvalidObjective("delta must lie in (0, 1)".into()));
        }
        if !self.loss.is_finite() {
            return Err(OptimizeError::InvalidObjective("loss must be finite".into()));
        }
        if self.frame_stride == 0 {
            return Err(OptimizeError::InvalidObjective(
                "frame stride must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Objective contribution of one vehicle.
    pub fn contribution(&self, report: &VgopReport) -> f64 {
        if report.detected(self.delta) {
            report.entropy
        } else {
            -self.loss.abs()
        }
    }
}

/// Per-vehicle reports of every evaluated frame for one deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentEvaluation {
    pub frames: Vec<(u64, Vec<VgopReport>)>,
}

impl DeploymentEvaluation {
    pub fn reports(&self) -> impl Iterator<Item = &VgopReport> {
        self.frames.iter().flat_map(|(_, r)| r.iter())
    }

    pub fn fitness(&self, params: &ObjectiveParams) -> f64 {
        self.reports().map(|r| params.contribution(r)).sum()
    }

    pub fn vehicle_count(&self) -> usize {
        self.reports().count()
    }

    pub fn detected_count(&self, delta: f64) -> usize {
        self.reports().filter(|r| r.detected(delta)).count()
    }

    /// Detected / total with detection given by the VGOP threshold.
    /// Zero when there are no vehicles.
    pub fn proxy_recall(&self, delta: f64) -> f64 {
        match self.vehicle_count() {
            0 => 0.0,
            n => self.detected_count(delta) as f64 / n as f64,
        }
    }
}

fn evaluate_frame_at(
    frame: &ScenarioFrame,
    rays: &crate::geometry::RaySet,
    model: &LidarModel,
    grid: &GridSpec,
) -> (u64, Vec<VgopReport>) {
    let cloud = cast_vehicle_points(rays, frame, model);
    let reports = evaluate_frame(&cloud, frame, grid).expect("cloud is cast from this frame");
    (frame.frame_id, reports)
}

/// Simulates the deployment on the configured frames and scores every vehicle.
pub fn evaluate_deployment(
    deployment: &Deployment,
    scenario: &Scenario,
    model: &LidarModel,
    params: &ObjectiveParams,
) -> DeploymentEvaluation {
    let rays = deploy_rays(model, deployment);
    let frames: Vec<&ScenarioFrame> = scenario.strided(params.frame_stride).collect();
    let frames = frames
        .par_iter()
        .map(|f| evaluate_frame_at(f, &rays, model, &params.grid))
        .collect();
    DeploymentEvaluation { frames }
}

/// Sum over vehicles of entropy when detected and `-|C|` otherwise.
pub fn fitness(deployment: &Deployment, scenario: &Scenario, model: &LidarModel, params: &ObjectiveParams) -> f64 {
    evaluate_deployment(deployment, scenario, model, params).fitness(params)
}

/// `w₁ v + a₁ r₁ (p_best − p) + a₂ r₂ (g_best − p)`.
#[allow(clippy::too_many_arguments)]
pub fn pso_velocity(
    velocity: &[f64],
    position: &[f64],
    personal_best: &[f64],
    global_best: &[f64],
    inertia: f64,
    cognitive: f64,
    social: f64,
    r1: f64,
    r2: f64,
) -> Vec<f64> {
    (0..velocity.len())
        .map(|d| {
            inertia * velocity[d]
                + cognitive * r1 * (personal_best[d] - position[d])
                + social * r2 * (global_best[d] - position[d])
        })
        .collect()
}

pub fn position_update(position: &[f64], velocity: &[f64]) -> Vec<f64> {
    position.iter().zip(velocity).map(|(p, v)| p + v).collect()
}

/// Velocity that moves particle `i` onto the mutant `P_i + w₂ (P_j − P_k)`.
/// `P_i` is not needed to form it; the position update adds it back.
pub fn de_mutation(_position_i: &[f64], position_j: &[f64], position_k: &[f64], differential_weight: f64) -> Vec<f64> {
    position_j
        .iter()
        .zip(position_k)
        .map(|(j, k)| differential_weight * (j - k))
        .collect()
}

/// Snaps each coordinate into its bound.
pub fn clamp(position: &[f64], space: &SearchSpace) -> Vec<f64> {
    position
        .iter()
        .zip(space.bounds())
        .map(|(&x, b)| {
            if x < b.lower {
                b.lower
            } else if x > b.upper {
                b.upper
            } else {
                x
            }
        })
        .collect()
}

/// Something the swarm maximizes.
pub trait Objective: Sync {
    fn evaluate(&self, position: &[f64]) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, position: &[f64]) -> f64 {
        self(position)
    }
}

/// The deployment objective over a scenario, searched in `space` around `base`.
pub struct DeploymentObjective<'a> {
    pub scenario: &'a Scenario,
    pub model: &'a LidarModel,
    pub params: &'a ObjectiveParams,
    pub space: &'a SearchSpace,
    pub base: Deployment,
}

impl Objective for DeploymentObjective<'_> {
    fn evaluate(&self, position: &[f64]) -> f64 {
        let deployment = self
            .space
            .to_deployment(position, &self.base)
            .expect("clamped positions map to valid deployments");
        fitness(&deployment, self.scenario, self.model, self.params)
    }
}

/// State of one particle after an iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessRecord {
    /// 1-based.
    pub iteration: usize,
    pub particle: usize,
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub fitness: f64,
    pub personal_best: f64,
    pub global_best: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmResult {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// `iterations × particles` records, iteration-major.
    pub history: Vec<FitnessRecord>,
}

struct Draw {
    r1: f64,
    r2: f64,
    mutation: Option<(usize, usize)>,
}

fn pick_other(rng: &mut ChaCha8Rng, n: usize, exclude: &[usize]) -> usize {
    loop {
        let c = rng.gen_range(0..n);
        if !exclude.contains(&c) {
            return c;
        }
    }
}

fn evaluate_all<O: Objective>(objective: &O, positions: &[Vec<f64>]) -> Vec<f64> {
    positions.par_iter().map(|p| objective.evaluate(p)).collect()
}

/// Maximizes `objective` over `space` with DE-PSO.
pub fn run_swarm<O: Objective>(
    objective: &O,
    space: &SearchSpace,
    swarm: &SwarmParams,
) -> Result<SwarmResult, OptimizeError> {
    swarm.validate()?;
    let n = swarm.particles;
    let mut rng = ChaCha8Rng::seed_from_u64(swarm.seed);

    let mut positions: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            space
                .bounds()
                .iter()
                .map(|b| rng.gen_range(b.lower..=b.upper))
                .collect()
        })
        .collect();
    let mut velocities = vec![vec![0.0; space.len()]; n];
    let initial = evaluate_all(objective, &positions);
    let mut personal_best = positions.clone();
    let mut personal_best_fitness = initial.clone();
    let mut best_index = 0;
    for (i, &f) in initial.iter().enumerate() {
        if f > initial[best_index] {
            best_index = i;
        }
    }
    let mut global_best = positions[best_index].clone();
    let mut global_best_fitness = initial[best_index];

    let mut history = Vec::with_capacity(swarm.iterations * n);
    for iteration in 1..=swarm.iterations {
        let draws: Vec<Draw> = (0..n)
            .map(|i| {
                let r1 = rng.gen::<f64>();
                let r2 = rng.gen::<f64>();
                let r3 = rng.gen::<f64>();
                let mutation = (r3 < swarm.differential_threshold).then(|| {
                    let j = pick_other(&mut rng, n, &[i]);
                    let k = pick_other(&mut rng, n, &[i, j]);
                    (j, k)
                });
                Draw { r1, r2, mutation }
            })
            .collect();

        let mut next_positions = Vec::with_capacity(n);
        for (i, draw) in draws.iter().enumerate() {
            let mut v = pso_velocity(
                &velocities[i],
                &positions[i],
                &personal_best[i],
                &global_best,
                swarm.inertia,
                swarm.cognitive,
                swarm.social,
                draw.r1,
                draw.r2,
            );
            if let Some((j, k)) = draw.mutation {
                v = de_mutation(&positions[i], &positions[j], &positions[k], swarm.differential_weight);
            }
            next_positions.push(clamp(&position_update(&positions[i], &v), space));
            velocities[i] = v;
        }
        positions = next_positions;

        let values = evaluate_all(objective, &positions);
        for (i, &f) in values.iter().enumerate() {
            if f > personal_best_fitness[i] {
                personal_best_fitness[i] = f;
                personal_best[i] = positions[i].clone();
            }
            if f > global_best_fitness {
                global_best_fitness = f;
                global_best = positions[i].clone();
            }
            history.push(FitnessRecord {
                iteration,
                particle: i,
                position: positions[i].clone(),
                velocity: velocities[i].clone(),
                fitness: f,
                personal_best: personal_best_fitness[i],
                global_best: global_best_fitness,
            });
        }
    }

    Ok(SwarmResult {
        best_position: global_best,
        best_fitness: global_best_fitness,
        history,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best: Deployment,
    pub best_fitness: f64,
    pub history: Vec<FitnessRecord>,
}

/// Searches the deployment that maximizes [`fitness`] on `scenario`.
/// Coordinates outside `space` are taken from `base`.
pub fn run_optimizer(
    scenario: &Scenario,
    model: &LidarModel,
    space: &SearchSpace,
    swarm: &SwarmParams,
    objective: &ObjectiveParams,
    base: &Deployment,
) -> Result<OptimizationResult, OptimizeError> {
    objective.validate()?;
    let target = DeploymentObjective {
        scenario,
        model,
        params: objective,
        space,
        base: *base,
    };
    let result = run_swarm(&target, space, swarm)?;
    let best = space
        .to_deployment(&result.best_position, base)
        .map_err(|e| OptimizeError::InvalidSpace(e.to_string()))?;
    Ok(OptimizationResult {
        best,
        best_fitness: result.best_fitness,
        history: result.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn velocity_examples() {
        let v = pso_velocity(
            &[0.0, 0.0],
            &[1.0, 2.0],
            &[1.0, 2.0],
            &[1.0, 2.0],
            0.7,
            0.3,
            0.2,
            0.4,
            0.9,
        );
        assert_eq!(v, vec![0.0, 0.0]);
        let v = pso_velocity(
            &[0.0, 0.0],
            &[3.0, 5.0],
            &[3.0, 5.0],
            &[4.0, 10.0],
            0.7,
            0.3,
            0.2,
            0.3,
            0.5,
        );
        assert!(close(&v, &[0.1, 0.5]));
        let v = pso_velocity(
            &[1.5, -2.0],
            &[3.0, 5.0],
            &[0.0, 0.0],
            &[9.0, 9.0],
            1.0,
            0.0,
            0.0,
            0.8,
            0.2,
        );
        assert_eq!(v, vec![1.5, -2.0]);
    }

    #[test]
    fn position_examples() {
        assert_eq!(position_update(&[1.0, 2.0], &[0.0, 0.0]), vec![1.0, 2.0]);
        assert_eq!(position_update(&[2.0, 0.0], &[0.5, 3.0]), vec![2.5, 3.0]);
    }

    #[test]
    fn mutation_examples() {
        assert_eq!(de_mutation(&[0.0, 0.0], &[1.0, 1.0], &[1.0, 1.0], 0.5), vec![0.0, 0.0]);
        let v = de_mutation(&[3.0, 0.0], &[4.0, 20.0], &[2.0, 10.0], 0.5);
        assert_eq!(v, vec![1.0, 5.0]);
        assert_eq!(position_update(&[3.0, 0.0], &v), vec![4.0, 5.0]);
    }

    #[test]
    fn clamp_examples() {
        let space = SearchSpace::height_and_tilt();
        assert_eq!(clamp(&[5.0, 12.0], &space), vec![4.5, 12.0]);
        assert_eq!(clamp(&[3.0, -3.0], &space), vec![3.0, 0.0]);
        assert_eq!(clamp(&[3.7, 12.0], &space), vec![3.7, 12.0]);
    }

    #[test]
    fn swarm_validation() {
        let space = SearchSpace::height_and_tilt();
        let flat = |_: &[f64]| 0.0;
        let small = SwarmParams {
            particles: 3,
            ..SwarmParams::default()
        };
        assert!(matches!(
            run_swarm(&flat, &space, &small),
            Err(OptimizeError::InvalidSwarm(_))
        ));
        let pure_pso = SwarmParams {
            particles: 3,
            differential_threshold: 0.0,
            iterations: 2,
            ..SwarmParams::default()
        };
        assert!(run_swarm(&flat, &space, &pure_pso).is_ok());
        let zero_iter = SwarmParams {
            iterations: 0,
            ..SwarmParams::default()
        };
        assert!(run_swarm(&flat, &space, &zero_iter).is_err());
        assert!(SearchSpace::new(vec![Bound {
            dimension: Dimension::Height,
            lower: 3.0,
            upper: 3.0
        }])
        .is_err());
    }

    #[test]
    fn constant_fitness() {
        let space = SearchSpace::height_and_tilt();
        let swarm = SwarmParams {
            iterations: 5,
            ..SwarmParams::default()
        };
        let r = run_swarm(&|_: &[f64]| 2.5, &space, &swarm).unwrap();
        assert_eq!(r.best_fitness, 2.5);
        assert!(space.contains(&r.best_position));
        assert_eq!(r.history.len(), 5 * 20);
    }

    #[test]
    fn history_counts_and_bounds() {
        let space = SearchSpace::height_and_tilt();
        let swarm = SwarmParams {
            iterations: 1,
            particles: 4,
            ..SwarmParams::default()
        };
        let f = |p: &[f64]| -(p[0] - 3.0).powi(2) - (p[1] - 20.0).powi(2);
        let r = run_swarm(&f, &space, &swarm).unwrap();
        assert_eq!(r.history.len(), 4);
        assert!(r.history.iter().all(|h| h.iteration == 1));
    }

    #[test]
    fn inertia_only_swarm_stays_put() {
        let space = SearchSpace::height_and_tilt();
        let swarm = SwarmParams {
            iterations: 10,
            particles: 6,
            inertia: 1.0,
            cognitive: 0.0,
            social: 0.0,
            differential_threshold: 0.0,
            ..SwarmParams::default()
        };
        let f = |p: &[f64]| p[0] + p[1];
        let r = run_swarm(&f, &space, &swarm).unwrap();
        let first: Vec<&Vec<f64>> = r.history[..6].iter().map(|h| &h.position).collect();
        for chunk in r.history.chunks(6) {
            for (h, p0) in chunk.iter().zip(&first) {
                assert_eq!(&h.position, *p0);
                assert_eq!(h.velocity, vec![0.0, 0.0]);
            }
        }
    }

    #[test]
    fn dimension_mapping() {
        let space = SearchSpace::new(vec![
            Bound {
                dimension: Dimension::TiltX,
                lower: 0.0,
                upper: 25.0,
            },
            Bound {
                dimension: Dimension::Height,
                lower: 2.0,
                upper: 4.5,
            },
        ])
        .unwrap();
        let base = Deployment::from_degrees(1.0, -2.0, 2.0, 0.0, 3.0).unwrap();
        let d = space.to_deployment(&[12.0, 3.5], &base).unwrap();
        assert_eq!((d.position.x, d.position.y, d.position.z), (1.0, -2.0, 3.5));
        assert!((d.tilt_x_deg() - 12.0).abs() < 1e-12);
        assert!((d.tilt_y_deg() - 3.0).abs() < 1e-12);
        let back = space.position_of(&d);
        assert!(close(&back, &[12.0, 3.5]));
    }

    #[test]
    fn contribution_uses_mean_vgop() {
        let params = ObjectiveParams::default();
        let report = |p: [f64; 3], entropy| VgopReport {
            vehicle_id: 1,
            point_count: 1,
            cells: [1, 1, 1],
            occupied: [0, 0, 0],
            probability: p,
            entropy,
        };
        assert_eq!(params.contribution(&report([0.01, 0.0, 0.006], 1.2)), 1.2);
        assert_eq!(params.contribution(&report([0.0; 3], 0.0)), -1.0);
        let c1 = ObjectiveParams { loss: 1.0, ..params };
        assert_eq!(c1.contribution(&report([0.0; 3], 0.0)), -1.0);
    }
}
