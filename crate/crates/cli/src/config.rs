//! JSON run configuration.

use serde::{Deserialize, Serialize};
use sta_cost::modes::{Drive, ModeSolverOptions};
use sta_cost::oracle::{Linearization, SampleSpec};
use sta_cost::oscillatory::OscOptions;
use sta_cost::{Domain, DrivingSpec, ProtocolSpec, SystemSpec, Vacuum, Window};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default, deserialize_with = "protocol_field")]
    pub protocol: Option<ProtocolSpec>,
    #[serde(default)]
    pub system: SystemSpec,
    pub drive: Option<DrivingSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub modes: ModesSection,
    pub fcurve: Option<FCurveSection>,
    #[serde(default)]
    pub fig1: Fig1Section,
    #[serde(default)]
    pub cost: CostSection,
    pub oracle: Option<OracleSection>,
    #[serde(default)]
    pub wigner: WignerSection,
}

// Serde buffers internally tagged enums, which hides the failing field from
// the path tracker; these mirrors keep the path.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ArctanFields {
    #[allow(dead_code)]
    kind: String,
    omega0: f64,
    delta: f64,
    tau: f64,
    window: Option<Window>,
    #[serde(default)]
    allow_inverted: bool,
    edge_tolerance: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TabulatedFields {
    #[allow(dead_code)]
    kind: String,
    samples: Vec<[f64; 2]>,
    window: Option<Window>,
    #[serde(default)]
    allow_inverted: bool,
    edge_tolerance: Option<f64>,
}

fn protocol_field<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<ProtocolSpec>, D::Error> {
    use serde::de::Error as _;
    let v = Option::<serde_json::Value>::deserialize(d)?;
    let Some(v) = v else { return Ok(None) };
    let named = |e: serde_path_to_error::Error<serde_json::Error>| D::Error::custom(format!("{}: {}", e.path(), e.inner()));
    match v.get("kind").and_then(|k| k.as_str()) {
        Some("arctan") => {
            let f: ArctanFields = serde_path_to_error::deserialize(v).map_err(named)?;
            Ok(Some(ProtocolSpec::Arctan {
                omega0: f.omega0,
                delta: f.delta,
                tau: f.tau,
                window: f.window,
                allow_inverted: f.allow_inverted,
                edge_tolerance: f.edge_tolerance,
            }))
        }
        Some("tabulated") => {
            let f: TabulatedFields = serde_path_to_error::deserialize(v).map_err(named)?;
            Ok(Some(ProtocolSpec::Tabulated {
                samples: f.samples,
                window: f.window,
                allow_inverted: f.allow_inverted,
                edge_tolerance: f.edge_tolerance,
            }))
        }
        Some(k) => Err(D::Error::custom(format!("kind: unknown protocol kind `{k}` (arctan | tabulated)"))),
        None => Err(D::Error::custom("kind: missing protocol kind")),
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub ode_rel: f64,
    pub ode_abs: f64,
    pub quad_abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let m = ModeSolverOptions::default();
        Tolerances { ode_rel: m.rtol, ode_abs: m.atol, quad_abs: OscOptions::default().abs_tol }
    }
}

impl Tolerances {
    pub fn validate(&self) -> anyhow::Result<()> {
        for (name, v) in [("ode_rel", self.ode_rel), ("ode_abs", self.ode_abs), ("quad_abs", self.quad_abs)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(sta_cost::Error::Config(format!("tolerances.{name} must be positive, got {v}")).into());
            }
        }
        Ok(())
    }

    pub fn ode(&self) -> ModeSolverOptions {
        ModeSolverOptions { rtol: self.ode_rel, atol: self.ode_abs, ..ModeSolverOptions::default() }
    }

    pub fn quad(&self) -> OscOptions {
        OscOptions { abs_tol: self.quad_abs, ..OscOptions::default() }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Sampling of the `protocol` table. Tabulated protocols default to their
/// own sample times.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { points: 2001 }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModesSection {
    pub drive: Drive,
    pub vacuum: Vacuum,
    pub output_points: usize,
}

impl Default for ModesSection {
    fn default() -> Self {
        ModesSection { drive: Drive::Counterdiabatic, vacuum: Vacuum::Adiabatic, output_points: 2001 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FCurveSection {
    pub x: Vec<f64>,
    #[serde(default = "half")]
    pub y: f64,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig1Section {
    pub x_grid: Option<Vec<f64>>,
    pub y: f64,
    /// Rows whose error estimate exceeds this fraction of F are flagged.
    pub rel_budget: f64,
}

impl Default for Fig1Section {
    fn default() -> Self {
        Fig1Section { x_grid: None, y: 0.5, rel_budget: 1e-8 }
    }
}

/// 40 log-spaced points over [0.1, 4].
pub fn default_fig1_grid() -> Vec<f64> {
    let (a, b) = (0.1_f64.ln(), 4.0_f64.ln());
    (0..40).map(|i| (a + (b - a) * i as f64 / 39.0).exp()).collect()
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostSection {
    pub n_initial: u32,
    pub domain: Domain,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub n_samples: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub n_initial: u32,
    #[serde(default)]
    pub linearization: Linearization,
    #[serde(default = "yes")]
    pub reject_negative: bool,
    /// When set, replaces the drive's variances by the linear-response
    /// scale with max|δΩ²|/Ω² ≈ this value.
    pub variance_target: Option<f64>,
    /// Per-sample CSV dump.
    pub samples_csv: Option<PathBuf>,
}

fn yes() -> bool {
    true
}

impl OracleSection {
    pub fn sample_spec(&self, seed: Option<u64>) -> SampleSpec {
        SampleSpec {
            n_samples: self.n_samples,
            seed: seed.unwrap_or(self.seed),
            n_initial: self.n_initial,
            linearization: self.linearization,
            reject_negative: self.reject_negative,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerSection {
    pub n_max: u32,
    /// J grid in units of ħ, log-spaced.
    pub j_min: f64,
    pub j_max: f64,
    pub j_points: usize,
    pub nu: f64,
    pub mu: f64,
}

impl Default for WignerSection {
    fn default() -> Self {
        WignerSection { n_max: 10, j_min: 0.01, j_max: 10.0, j_points: 201, nu: 1e-3, mu: 0.0 }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| sta_cost::Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            sta_cost::Error::Config(format!("field `{path}`: {}", e.inner()))
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(sta_cost::Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            ))
            .into());
        }
        cfg.tolerances.validate()?;
        cfg.system.validate()?;
        Ok(cfg)
    }

    pub fn empty() -> Self {
        RunConfig { schema_version: SCHEMA_VERSION, ..Default::default() }
    }

    pub fn require_protocol(&self) -> anyhow::Result<&ProtocolSpec> {
        self.protocol.as_ref().ok_or_else(|| sta_cost::Error::Config("`protocol` is required".into()).into())
    }

    pub fn require_drive(&self) -> anyhow::Result<&DrivingSpec> {
        self.drive.as_ref().ok_or_else(|| sta_cost::Error::Config("`drive` is required".into()).into())
    }
}
