//! Batch experiment front end: configuration, run artifacts, and the four
//! commands (`verify`, `solve`, `asymptotics`, `flux`).

pub mod asymptotics;
pub mod flux;
pub mod solve;
pub mod verify;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::CsvTable;
use crate::metrics::MetricSpec;
use crate::solver::SolverConfig;

pub const DEFAULT_SEED: u64 = 0xC0FFEE;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Verify,
    Solve,
    Asymptotics,
    Flux,
}

impl std::str::FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "verify" => Ok(Command::Verify),
            "solve" => Ok(Command::Solve),
            "asymptotics" => Ok(Command::Asymptotics),
            "flux" => Ok(Command::Flux),
            other => Err(Error::Config(format!("unknown command `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub radii: Vec<f64>,
    #[serde(default)]
    pub offsets: Vec<f64>,
    #[serde(default)]
    pub band_limits: Vec<usize>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyOptions {
    /// path to the golden closed-form table; embedded copy when absent
    #[serde(default)]
    pub golden_path: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceFamily {
    /// u = 0 spheres over translated charts
    Round,
    /// flow solutions warm-started per radius
    Solved,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsOptions {
    #[serde(default = "default_offset")]
    pub offset: f64,
    #[serde(default = "default_family")]
    pub family: SurfaceFamily,
}

fn default_offset() -> f64 {
    0.9
}
fn default_family() -> SurfaceFamily {
    SurfaceFamily::Round
}

impl Default for AsymptoticsOptions {
    fn default() -> Self {
        Self {
            offset: default_offset(),
            family: default_family(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxOptions {
    /// offsets for the closed-form cross-check of the radial moment
    /// combination (0 < xi < 1)
    #[serde(default = "default_check_offsets")]
    pub check_offsets: Vec<f64>,
}

fn default_check_offsets() -> Vec<f64> {
    vec![0.5, 0.9, 0.99]
}

impl Default for FluxOptions {
    fn default() -> Self {
        Self {
            check_offsets: default_check_offsets(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default = "default_band_limit")]
    pub band_limit: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_metric")]
    pub metric: MetricSpec,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub verify: VerifyOptions,
    #[serde(default)]
    pub asymptotics: AsymptoticsOptions,
    #[serde(default)]
    pub flux: FluxOptions,
}

fn default_band_limit() -> usize {
    32
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_metric() -> MetricSpec {
    MetricSpec::schwarzschild(2.0)
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            band_limit: default_band_limit(),
            seed: default_seed(),
            output_dir: None,
            metric: default_metric(),
            solver: None,
            sweep: SweepConfig::default(),
            verify: VerifyOptions::default(),
            asymptotics: AsymptoticsOptions::default(),
            flux: FluxOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.metric.validate()?;
        if let Some(solver) = &self.solver {
            solver.validate()?;
        }
        if self.band_limit < crate::sphere::MIN_BAND_LIMIT {
            return Err(Error::InvalidBandLimit(self.band_limit));
        }
        if self.band_limit > 1024 {
            return Err(Error::Config(format!(
                "band limit {} exceeds the configuration cap of 1024",
                self.band_limit
            )));
        }
        if !(self.asymptotics.offset > 0.0 && self.asymptotics.offset < 1.0) {
            return Err(Error::Config(format!(
                "asymptotics offset must lie in (0, 1), got {}",
                self.asymptotics.offset
            )));
        }
        for &b in &self.sweep.band_limits {
            if !(crate::sphere::MIN_BAND_LIMIT..=128).contains(&b) {
                return Err(Error::Config(format!(
                    "sweep band limit {b} must lie in [8, 128]"
                )));
            }
        }
        for &xi in &self.flux.check_offsets {
            if !(xi > 0.0 && xi < 1.0) {
                return Err(Error::Config(format!(
                    "flux check offset {xi} must lie in (0, 1)"
                )));
            }
        }
        for &r in &self.sweep.radii {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::Config(format!("sweep radius {r} must be positive")));
            }
        }
        for &xi in &self.sweep.offsets {
            if !(xi.is_finite() && xi >= 0.0) {
                return Err(Error::Config(format!("sweep offset {xi} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// Parse a TOML config.
pub fn parse_config_toml(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig =
        toml::from_str(text).map_err(|e| Error::Config(format!("toml config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parse a JSON config.
pub fn parse_config_json(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("json config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parse a config file, dispatching on the extension (default TOML).
pub fn parse_config_file(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => parse_config_json(&text),
        _ => parse_config_toml(&text),
    }
}

// ---------------------------------------------------------------------------
// run artifacts

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: Command,
    pub version: String,
    pub config: ExperimentConfig,
    /// per-table column documentation, keyed by file name
    pub schema: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(default)]
    pub timings_ms: BTreeMap<String, u64>,
}

pub struct RunArtifact {
    pub manifest_path: PathBuf,
    pub tables: Vec<PathBuf>,
    pub plots: Vec<PathBuf>,
    /// numeric failures observed during the run (0 = clean)
    pub failures: usize,
}

pub(crate) struct ArtifactWriter {
    dir: PathBuf,
    manifest: Manifest,
    tables: Vec<PathBuf>,
    plots: Vec<PathBuf>,
    started: Instant,
}

impl ArtifactWriter {
    pub fn new(command: Command, config: &ExperimentConfig, dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            schema: BTreeMap::new(),
            notes: Vec::new(),
            timings_ms: BTreeMap::new(),
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
            tables: Vec::new(),
            plots: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn document_table(&mut self, file: &str, columns: &[(&str, &str)]) {
        let mut doc = BTreeMap::new();
        for (name, desc) in columns {
            doc.insert(name.to_string(), desc.to_string());
        }
        self.manifest.schema.insert(file.to_string(), doc);
    }

    pub fn note(&mut self, s: String) {
        self.manifest.notes.push(s);
    }

    /// Write the manifest; called once before any table, and again at the
    /// end with timings filled in.
    pub fn write_manifest(&mut self) -> Result<PathBuf> {
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest)
            .map_err(|e| Error::Config(format!("manifest: {e}")))?;
        std::fs::write(&path, text)?;
        Ok(path)
    }

    pub fn write_table(&mut self, table: &CsvTable) -> Result<PathBuf> {
        let path = self.dir.join(format!("{}.csv", table.name));
        table.write_to(&path)?;
        self.tables.push(path.clone());
        Ok(path)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, text)?;
        Ok(path)
    }

    pub fn plot_path(&mut self, name: &str) -> PathBuf {
        let path = self.dir.join(name);
        self.plots.push(path.clone());
        path
    }

    pub fn finish(mut self, failures: usize) -> Result<RunArtifact> {
        let elapsed = self.started.elapsed().as_millis() as u64;
        self.manifest.timings_ms.insert("total".into(), elapsed);
        let manifest_path = self.write_manifest()?;
        Ok(RunArtifact {
            manifest_path,
            tables: self.tables,
            plots: self.plots,
            failures,
        })
    }
}

/// Run a command against a config, writing artifacts under `out_dir`.
pub fn run(command: Command, config: &ExperimentConfig, out_dir: &Path) -> Result<RunArtifact> {
    config.validate()?;
    match command {
        Command::Verify => verify::cmd_verify(config, out_dir),
        Command::Solve => solve::cmd_solve(config, out_dir),
        Command::Asymptotics => asymptotics::cmd_asymptotics(config, out_dir),
        Command::Flux => flux::cmd_flux(config, out_dir),
    }
}
