//! Run configuration: one TOML file per run, paths relative to the file,
//! command-line flags override file values.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lidar_deploy::geometry::{Deployment, LidarModel};
use lidar_deploy::metric::GridSpec;
use lidar_deploy::optimize::{Bound, ObjectiveParams, SearchSpace, SwarmParams};
use lidar_deploy::scene::{parse_scenario, Scenario, ScenarioFormat};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Fixed mount used as the comparison baseline by `optimize`.
pub const BASELINE_HEIGHT: f64 = 2.0;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub lidar: Option<LidarSection>,
    pub scenario: Option<ScenarioSection>,
    pub deployment: Option<DeploymentSection>,
    pub search: Option<SearchSection>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub objective: ObjectiveSection,
    #[serde(default)]
    pub swarm: SwarmSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LidarSection {
    /// `rs16`, `rs32`, `rs80` or a preset file.
    pub preset: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_format() -> String {
    "canonical-csv".into()
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeploymentSection {
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub y: f64,
    pub height: f64,
    #[serde(default)]
    pub tilt_x_deg: f64,
    #[serde(default)]
    pub tilt_y_deg: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    /// Mount position used for coordinates that are not searched.
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub y: f64,
    pub bounds: Vec<Bound>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub mu_top: f64,
    pub mu_side: f64,
    pub mu_front: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            mu_top: g.mu_top,
            mu_side: g.mu_side,
            mu_front: g.mu_front,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectiveSection {
    pub delta: f64,
    pub loss: f64,
    pub frame_stride: usize,
}

impl Default for ObjectiveSection {
    fn default() -> Self {
        let o = ObjectiveParams::default();
        Self {
            delta: o.delta,
            loss: o.loss,
            frame_stride: o.frame_stride,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwarmSection {
    pub iterations: usize,
    pub particles: usize,
    pub inertia: f64,
    pub differential_weight: f64,
    pub cognitive: f64,
    pub social: f64,
    pub differential_threshold: f64,
}

impl Default for SwarmSection {
    fn default() -> Self {
        let s = SwarmParams::default();
        Self {
            iterations: s.iterations,
            particles: s.particles,
            inertia: s.inertia,
            differential_weight: s.differential_weight,
            cognitive: s.cognitive,
            social: s.social,
            differential_threshold: s.differential_threshold,
        }
    }
}

/// Command-line values that replace the file's.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub preset: Option<String>,
    pub frames: Option<usize>,
}

/// What the command does with the mount.
#[derive(Debug, Clone)]
pub enum Setup {
    Fixed(Deployment),
    Search { space: SearchSpace, base: Deployment },
}

/// Which of the two mount sections a command needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Fixed,
    Search,
}

/// A validated run with all inputs loaded.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub model: LidarModel,
    pub scenario: Scenario,
    pub setup: Setup,
    pub objective: ObjectiveParams,
    pub swarm: SwarmParams,
    /// Hex SHA-256 of the resolved settings and input contents.
    pub hash: String,
}

impl RunConfig {
    pub fn deployment(&self) -> Option<&Deployment> {
        match &self.setup {
            Setup::Fixed(d) => Some(d),
            Setup::Search { .. } => None,
        }
    }

    /// `# config_hash=… seed=…`, the first line of every export.
    pub fn header(&self) -> String {
        format!("# config_hash={} seed={}", self.hash, self.seed)
    }
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

pub fn read_file(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::config(path, e.message()))
}

/// Output directory from the flag or, failing that, the file.
pub fn output_dir(
    config_path: Option<&Path>,
    file: Option<&ConfigFile>,
    flag: Option<&Path>,
) -> Result<PathBuf, CliError> {
    if let Some(out) = flag {
        return Ok(out.to_path_buf());
    }
    match (config_path, file.and_then(|f| f.out.as_ref())) {
        (Some(p), Some(out)) => Ok(base_dir(p).join(out)),
        _ => Err(CliError::Config(
            "no output directory: set `out` in the config or pass --out".into(),
        )),
    }
}

fn builtin_preset(name: &str) -> Option<(LidarModel, &'static str)> {
    use lidar_deploy::geometry::{RS16_PRESET, RS32_PRESET, RS80_PRESET};
    match name.to_ascii_lowercase().as_str() {
        "rs16" | "rs-16" => Some((LidarModel::rs16(), RS16_PRESET)),
        "rs32" | "rs-32" => Some((LidarModel::rs32(), RS32_PRESET)),
        "rs80" | "rs-80" => Some((LidarModel::rs80(), RS80_PRESET)),
        _ => None,
    }
}

/// Loads a preset by built-in name or from a file; returns the model and
/// the preset text for hashing.
pub fn load_preset(name_or_path: &str, relative_to: &Path) -> Result<(LidarModel, String), CliError> {
    if let Some((model, text)) = builtin_preset(name_or_path) {
        return Ok((model, text.to_string()));
    }
    let path = relative_to.join(name_or_path);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::config(&path, e))?;
    let model =
        LidarModel::from_toml_str(&text, &path.display().to_string()).map_err(|e| CliError::Config(e.to_string()))?;
    Ok((model, text))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunConfig {
    /// Reads, validates and loads everything a `mode` command needs.
    pub fn load(path: &Path, overrides: &Overrides, mode: Mode) -> Result<Self, CliError> {
        let file = read_file(path)?;
        Self::from_file(path, file, overrides, mode)
    }

    pub fn from_file(path: &Path, file: ConfigFile, overrides: &Overrides, mode: Mode) -> Result<Self, CliError> {
        let dir = base_dir(path);
        let bad = |m: &str| CliError::config(path, m);

        let seed = overrides.seed.or(file.seed).unwrap_or(0);
        let out = output_dir(Some(path), Some(&file), overrides.out.as_deref())?;

        let (model, preset_text) = match &overrides.preset {
            Some(p) => load_preset(p, Path::new(""))?,
            None => match &file.lidar {
                Some(l) => load_preset(&l.preset, &dir)?,
                None => return Err(bad("missing [lidar] preset")),
            },
        };

        let section = file
            .scenario
            .as_ref()
            .ok_or_else(|| bad("missing [scenario] section"))?;
        let format: ScenarioFormat = section.format.parse().map_err(|e: String| bad(&e))?;
        let scenario_path = dir.join(&section.path);
        let scenario_text = std::fs::read_to_string(&scenario_path).map_err(|e| CliError::config(&scenario_path, e))?;
        let scenario = parse_scenario(&scenario_text, format, Some(scenario_path.clone()))
            .map_err(|e| CliError::config(&scenario_path, e))?;

        let setup = match (mode, &file.deployment, &file.search) {
            (Mode::Fixed, Some(d), None) => Setup::Fixed(
                Deployment::from_degrees(d.x, d.y, d.height, d.tilt_x_deg, d.tilt_y_deg)
                    .map_err(|e| bad(&e.to_string()))?,
            ),
            (Mode::Search, None, Some(s)) => Setup::Search {
                space: SearchSpace::new(s.bounds.clone()).map_err(|e| bad(&e.to_string()))?,
                base: Deployment::from_degrees(s.x, s.y, BASELINE_HEIGHT, 0.0, 0.0).map_err(|e| bad(&e.to_string()))?,
            },
            (_, Some(_), Some(_)) => return Err(bad("give either [deployment] or [search], not both")),
            (Mode::Fixed, _, _) => return Err(bad("this command needs a [deployment] section")),
            (Mode::Search, _, _) => return Err(bad("this command needs a [search] section")),
        };

        let g = file.grid;
        let grid = GridSpec::new(g.mu_top, g.mu_side, g.mu_front).map_err(|e| bad(&e.to_string()))?;
        let objective = ObjectiveParams {
            delta: file.objective.delta,
            loss: file.objective.loss,
            grid,
            frame_stride: overrides.frames.unwrap_or(file.objective.frame_stride),
        };
        objective.validate().map_err(|e| bad(&e.to_string()))?;

        let s = file.swarm;
        let swarm = SwarmParams {
            iterations: s.iterations,
            particles: s.particles,
            inertia: s.inertia,
            differential_weight: s.differential_weight,
            cognitive: s.cognitive,
            social: s.social,
            differential_threshold: s.differential_threshold,
            seed,
        };

        let mut fp = String::new();
        let _ = writeln!(fp, "seed={seed}");
        let _ = writeln!(fp, "preset_sha256={}", sha256_hex(preset_text.as_bytes()));
        let _ = writeln!(fp, "scenario_format={format:?}");
        let _ = writeln!(fp, "scenario_sha256={}", sha256_hex(scenario_text.as_bytes()));
        match &setup {
            Setup::Fixed(d) => {
                let _ = writeln!(fp, "deployment={:?} {:?} {:?}", d.position, d.tilt_x, d.tilt_y);
            }
            Setup::Search { space, base } => {
                let _ = writeln!(fp, "search={:?} base={:?}", space.bounds(), base.position);
                let _ = writeln!(fp, "swarm={swarm:?}");
            }
        }
        let _ = writeln!(fp, "objective={objective:?}");
        let hash = sha256_hex(fp.as_bytes());

        Ok(Self {
            seed,
            out,
            model,
            scenario,
            setup,
            objective,
            swarm,
            hash,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_default() {
        let f: ConfigFile = toml::from_str("[lidar]\npreset = \"rs16\"\n").unwrap();
        assert_eq!(f.objective.delta, 0.005);
        assert_eq!(f.swarm.particles, 20);
        assert_eq!(f.grid.mu_side, 0.0025);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ConfigFile>("[swarm]\nparticle = 3\n").is_err());
    }

    #[test]
    fn search_bounds_parse() {
        let f: ConfigFile = toml::from_str(
            "[search]\nbounds = [{ dimension = \"height\", lower = 2.0, upper = 4.5 }, { dimension = \"tilt_x\", lower = 0.0, upper = 25.0 }]\n",
        )
        .unwrap();
        let s = SearchSpace::new(f.search.unwrap().bounds).unwrap();
        assert_eq!(s, SearchSpace::height_and_tilt());
    }

    #[test]
    fn builtin_presets_resolve() {
        assert_eq!(load_preset("RS80", Path::new("")).unwrap().0.beam_count(), 80);
        let err = load_preset("nowhere/rs99.toml", Path::new("base")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("base/nowhere/rs99.toml"));
    }
}
