use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lidar_deploy::geometry::{deploy_rays, Deployment};
use lidar_deploy::metric::{write_report_row, REPORT_HEADER};
use lidar_deploy::optimize::{evaluate_deployment, run_optimizer, DeploymentEvaluation, OptimizeError};
use lidar_deploy::raycast::cast_frame;
use lidar_deploy::scene::{synthetic_road, RoadSceneParams};
use sha2::{Digest, Sha256};

use crate::config::{self, RunConfig, Setup};
use crate::error::CliError;
use crate::export::{self, CLOUD_HEADER, MANIFEST_HEADER, SUMMARY_HEADER};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSummary {
    pub frames: usize,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateSummary {
    pub frames: usize,
    pub vehicles: usize,
    pub detected: usize,
    pub proxy_recall: f64,
    pub mean_entropy: f64,
    pub min_entropy: f64,
    pub fitness: f64,
}

impl EvaluateSummary {
    fn new(eval: &DeploymentEvaluation, config: &RunConfig) -> Self {
        let delta = config.objective.delta;
        let entropies: Vec<f64> = eval.reports().map(|r| r.entropy).collect();
        let (mean_entropy, min_entropy) = if entropies.is_empty() {
            (0.0, 0.0)
        } else {
            (
                entropies.iter().sum::<f64>() / entropies.len() as f64,
                entropies.iter().copied().fold(f64::INFINITY, f64::min),
            )
        };
        Self {
            frames: eval.frames.len(),
            vehicles: eval.vehicle_count(),
            detected: eval.detected_count(delta),
            proxy_recall: eval.proxy_recall(delta),
            mean_entropy,
            min_entropy,
            fitness: eval.fitness(&config.objective),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeSummary {
    pub best: Deployment,
    pub best_fitness: f64,
    pub best_recall: f64,
    pub baseline: Deployment,
    pub baseline_fitness: f64,
    pub baseline_recall: f64,
    pub history_len: usize,
}

/// Casts every selected frame and writes one cloud per frame plus `manifest.csv`.
pub fn simulate(config: &RunConfig) -> Result<SimulateSummary, CliError> {
    let deployment = config.deployment().expect("simulate runs with a fixed mount");
    let clouds = config.out.join("clouds");
    export::create_dir(&clouds)?;
    let header = config.header();
    let rays = deploy_rays(&config.model, deployment);
    let mut manifest = format!("{MANIFEST_HEADER}\n");
    let mut summary = SimulateSummary { frames: 0, points: 0 };
    for frame in config.scenario.strided(config.objective.frame_stride) {
        let cloud = cast_frame(&rays, frame, &config.model);
        let name = format!("frame_{:06}.csv", frame.frame_id);
        let mut body = format!("{CLOUD_HEADER}\n");
        cloud.write_csv(&mut body);
        export::write_file(&clouds.join(&name), &header, &body)?;
        let vehicle = cloud.points.iter().filter(|p| p.label.vehicle_id().is_some()).count();
        let _ = writeln!(
            manifest,
            "{},clouds/{name},{},{vehicle},{}",
            frame.frame_id,
            cloud.len(),
            cloud.len() - vehicle
        );
        summary.frames += 1;
        summary.points += cloud.len();
    }
    export::write_file(&config.out.join("manifest.csv"), &header, &manifest)?;
    Ok(summary)
}

/// Scores every vehicle and writes `vgop_report.csv` and `summary.csv`.
pub fn evaluate(config: &RunConfig) -> Result<EvaluateSummary, CliError> {
    let deployment = config.deployment().expect("evaluate runs with a fixed mount");
    export::create_dir(&config.out)?;
    let eval = evaluate_deployment(deployment, &config.scenario, &config.model, &config.objective);
    let header = config.header();

    let mut rows = format!("{REPORT_HEADER}\n");
    for (frame_id, reports) in &eval.frames {
        for r in reports {
            write_report_row(&mut rows, *frame_id, r);
        }
    }
    export::write_file(&config.out.join("vgop_report.csv"), &header, &rows)?;

    let s = EvaluateSummary::new(&eval, config);
    let body = format!(
        "{SUMMARY_HEADER}\n{},{},{},{:.9},{:.9},{:.9},{:.9}\n",
        s.frames, s.vehicles, s.detected, s.proxy_recall, s.mean_entropy, s.min_entropy, s.fitness
    );
    export::write_file(&config.out.join("summary.csv"), &header, &body)?;
    Ok(s)
}

/// Runs the swarm and writes `best.toml` and `history.csv`.
pub fn optimize(config: &RunConfig) -> Result<OptimizeSummary, CliError> {
    let Setup::Search { space, base } = &config.setup else {
        panic!("optimize runs with a search space");
    };
    config
        .swarm
        .validate()
        .map_err(|e| CliError::Optimizer(e.to_string()))?;
    export::create_dir(&config.out)?;

    let result = run_optimizer(
        &config.scenario,
        &config.model,
        space,
        &config.swarm,
        &config.objective,
        base,
    )
    .map_err(|e| match e {
        OptimizeError::InvalidSwarm(_) => CliError::Optimizer(e.to_string()),
        other => CliError::Config(other.to_string()),
    })?;
    let delta = config.objective.delta;
    let best_eval = evaluate_deployment(&result.best, &config.scenario, &config.model, &config.objective);
    let base_eval = evaluate_deployment(base, &config.scenario, &config.model, &config.objective);
    let summary = OptimizeSummary {
        best: result.best,
        best_fitness: result.best_fitness,
        best_recall: best_eval.proxy_recall(delta),
        baseline: *base,
        baseline_fitness: base_eval.fitness(&config.objective),
        baseline_recall: base_eval.proxy_recall(delta),
        history_len: result.history.len(),
    };

    let header = config.header();
    let mut body = String::new();
    export::deployment_table(
        &mut body,
        "best",
        &summary.best,
        summary.best_fitness,
        summary.best_recall,
    );
    body.push('\n');
    export::deployment_table(
        &mut body,
        "baseline",
        &summary.baseline,
        summary.baseline_fitness,
        summary.baseline_recall,
    );
    body.push('\n');
    let _ = writeln!(body, "[gain]");
    let _ = writeln!(body, "fitness = {:.9}", summary.best_fitness - summary.baseline_fitness);
    let _ = writeln!(
        body,
        "proxy_recall = {:.9}",
        summary.best_recall - summary.baseline_recall
    );
    export::write_file(&config.out.join("best.toml"), &header, &body)?;
    export::write_file(
        &config.out.join("history.csv"),
        &header,
        &export::history_csv(space, &result.history),
    )?;
    Ok(summary)
}

fn read_export(dir: &Path, name: &str) -> Result<Option<String>, CliError> {
    let path = dir.join(name);
    match std::fs::read_to_string(&path) {
        Ok(text) => Ok(Some(text)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(CliError::config(&path, e)),
    }
}

/// CSV rows after the header comment and the column header.
fn data_rows(text: &str) -> impl Iterator<Item = Vec<&str>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').collect())
}

fn malformed(dir: &Path, name: &str) -> CliError {
    CliError::config(&dir.join(name), "malformed export")
}

/// Summarizes whatever exports exist in `dir` into `report.txt`; returns its text.
pub fn report(dir: &Path) -> Result<String, CliError> {
    let mut header: Option<String> = None;
    let mut body = String::new();
    let mut section = |name: &str, text: &str, body: &mut String| {
        let h = export::header_of(text).unwrap_or("").to_string();
        let _ = writeln!(body, "[{}]", name.replace('.', "_"));
        let _ = writeln!(body, "source = {h:?}");
        header.get_or_insert(h);
    };

    if let Some(text) = read_export(dir, "manifest.csv")? {
        section("manifest.csv", &text, &mut body);
        let (mut frames, mut points, mut vehicle) = (0usize, 0usize, 0usize);
        for row in data_rows(&text) {
            let n = |i: usize| row.get(i).and_then(|s| s.parse::<usize>().ok());
            frames += 1;
            points += n(2).ok_or_else(|| malformed(dir, "manifest.csv"))?;
            vehicle += n(3).ok_or_else(|| malformed(dir, "manifest.csv"))?;
        }
        let _ = writeln!(
            body,
            "frames = {frames}\npoints = {points}\nvehicle_points = {vehicle}\n"
        );
    }

    if let Some(text) = read_export(dir, "summary.csv")? {
        section("summary.csv", &text, &mut body);
        let row = data_rows(&text).next().ok_or_else(|| malformed(dir, "summary.csv"))?;
        for (k, v) in SUMMARY_HEADER.split(',').zip(row) {
            let _ = writeln!(body, "{k} = {v}");
        }
        body.push('\n');
    }

    if let Some(text) = read_export(dir, "best.toml")? {
        section("best.toml", &text, &mut body);
        let value: toml::Table = text.parse().map_err(|_| malformed(dir, "best.toml"))?;
        let get = |table: &str, key: &str| {
            value
                .get(table)
                .and_then(|t| t.get(key))
                .and_then(toml::Value::as_float)
                .ok_or_else(|| malformed(dir, "best.toml"))
        };
        for key in ["height", "tilt_x_deg", "tilt_y_deg", "fitness", "proxy_recall"] {
            let _ = writeln!(
                body,
                "{key} = {:.9} (baseline {:.9})",
                get("best", key)?,
                get("baseline", key)?
            );
        }
        body.push('\n');
    }

    if let Some(text) = read_export(dir, "history.csv")? {
        section("history.csv", &text, &mut body);
        let rows: Vec<Vec<&str>> = data_rows(&text).collect();
        let last = rows.last().ok_or_else(|| malformed(dir, "history.csv"))?;
        let iterations = last
            .first()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| malformed(dir, "history.csv"))?;
        let best = last.last().ok_or_else(|| malformed(dir, "history.csv"))?;
        let _ = writeln!(
            body,
            "records = {}\niterations = {iterations}\nglobal_best = {best}\n",
            rows.len()
        );
    }

    let Some(header) = header else {
        return Err(CliError::config(dir, "no exports to report on"));
    };
    let text = format!("# {header}\n{body}");
    let path = dir.join("report.txt");
    std::fs::write(&path, &text).map_err(|e| CliError::output(&path, e))?;
    Ok(text)
}

/// Writes a synthetic multi-lane road as canonical CSV to `out/scene.csv`.
pub fn scene(params: &RoadSceneParams, out: &Path) -> Result<PathBuf, CliError> {
    export::create_dir(out)?;
    let digest: String = Sha256::digest(format!("{params:?}").as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let header = format!("# config_hash={digest} seed={}", params.seed);
    let path = out.join("scene.csv");
    export::write_file(&path, &header, &synthetic_road(params).to_canonical_csv())?;
    Ok(path)
}

/// Resolves the output directory for `report`.
pub fn report_dir(config: Option<&Path>, out: Option<&Path>) -> Result<PathBuf, CliError> {
    let file = config.map(config::read_file).transpose()?;
    config::output_dir(config, file.as_ref(), out)
}
