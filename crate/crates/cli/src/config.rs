//! Experiment configuration.
//!
//! Configs are JSON. The canonical form is `serde_json` pretty printing with
//! a trailing newline; shipped configs are stored canonically so that they
//! round-trip byte for byte, and the config hash is taken over that form.

use crate::error::CliError;
use guidewave::discretize::WeightSpec;
use guidewave::linop::NormMethod;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub flavor: Flavor,
    pub domain: DomainConfig,
    pub grid: GridConfig,
    pub damping: DampingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeConfig>,
    pub weights: WeightSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitConfig>,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Flavor {
    WaveNeumann,
    WaveDirichlet,
    /// The wave equation on the line: a single transverse mode with `lambda = 0`.
    WaveEuclidean,
    /// Klein-Gordon on the line with mass `m`.
    KleinGordon { m: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// Width of the guide.
    #[serde(rename = "L")]
    pub length: f64,
    /// Number of transverse modes kept.
    #[serde(rename = "K")]
    pub modes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Half-width of the longitudinal box.
    #[serde(rename = "X")]
    pub half_width: f64,
    /// Interior nodes.
    #[serde(rename = "N")]
    pub n: usize,
    pub order: guidewave::discretize::StencilOrder,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DampingConfig {
    Constant { c0: f64 },
    LongRange { rho: f64, floor: f64 },
    Hole { r: f64, width: f64, rho: f64, floor: f64 },
}

impl DampingConfig {
    pub fn profile(&self) -> guidewave::DampingProfile64 {
        use guidewave::discretize::DampingProfile as P;
        match *self {
            Self::Constant { c0 } => P::Constant { value: c0 },
            Self::LongRange { rho, floor } => P::LongRange { rho, floor },
            Self::Hole { r, width, rho, floor } => P::Hole { radius: r, width, rho, floor },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitConfig {
    #[serde(flatten)]
    pub family: InitFamily,
    /// Number of smoothing steps applied to the data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing_k: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum InitFamily {
    /// The same Gaussian in `u0` and `u1` on each listed mode.
    Gaussian { center: f64, width: f64, amp_u0: f64, amp_u1: f64, modes: Vec<usize> },
    /// A sum of shapes placed on individual modes.
    Modal { components: Vec<Component> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    U0,
    U1,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub mode: usize,
    pub field: Slot,
    pub shape: Shape,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Gaussian { center: f64, width: f64, amp: f64 },
    /// `amp <x>^{-q}` with a cosine taper to zero on `[taper_start, taper_end]`.
    PowerTail { q: f64, taper_start: f64, taper_end: f64, amp: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: f64,
    pub dt: f64,
    /// First sample time after `t = 0`.
    pub t0: f64,
    pub sample_ratio: f64,
    /// Radius of the local energy.
    pub local_radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanKind {
    /// `R_N(z)` between Sobolev-weighted spaces.
    Wave,
    /// `(A - z)^{-1}` in the energy space.
    Energy,
    /// The four blocks of `Theta(z)`.
    Theta,
    /// Segment probe below the real axis.
    Gap,
    /// `(-h^2 Lap - i h a - 1)^{-1}`.
    Semiclassical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub kind: ScanKind,
    /// Spectral points as `[re, im]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub z_list: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub h_list: Vec<f64>,
    #[serde(default)]
    pub beta1: u8,
    #[serde(default)]
    pub beta2: u8,
    pub norm: NormConfig,
    /// Repeat the scan on a box enlarged by the guard factor.
    #[serde(default)]
    pub guard: bool,
    /// Restrict the maximum over modes to `lambda_k <= |z|^2 + margin`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_margin: Option<f64>,
    #[serde(default)]
    pub validate_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<GapConfig>,
    /// Slope of `log norm` against `log |z|` is fitted on `|z|` in this range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_range: Option<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormConfig {
    pub method: NormMethod,
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapConfig {
    pub gamma: f64,
    pub c_bound: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Window of the power fits.
    pub window: [f64; 2],
    /// Window of the exponential fits.
    pub exp_window: [f64; 2],
    pub tolerance: f64,
    /// Series whose exponent is also checked from below.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sharp: Vec<String>,
    /// Report verdicts as informative only.
    #[serde(default)]
    pub informative: bool,
}

impl ExperimentConfig {
    /// Parses a config, naming the offending field on failure.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| CliError::Config(format!("{}: {}", e.path(), e.inner())))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if overrides.is_empty() {
            return Self::from_json(&text);
        }
        let mut v: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        Self::from_json(&v.to_string())
    }

    pub fn canonical(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("configs always serialize");
        s.push('\n');
        s
    }

    /// Hex sha256 of the canonical form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn short_hash(&self) -> String {
        self.hash()[..16].to_string()
    }

    pub fn init(&self) -> Result<&InitConfig, CliError> {
        self.init.as_ref().ok_or_else(|| CliError::Config("init: missing".into()))
    }

    pub fn time(&self) -> Result<&TimeConfig, CliError> {
        self.time.as_ref().ok_or_else(|| CliError::Config("time: missing".into()))
    }

    pub fn scan(&self) -> Result<&ScanConfig, CliError> {
        self.scan.as_ref().ok_or_else(|| CliError::Config("scan: missing".into()))
    }

    pub fn fit(&self) -> Result<&FitConfig, CliError> {
        self.fit.as_ref().ok_or_else(|| CliError::Config("fit: missing".into()))
    }
}

/// Applies `--a.b.c=value`. The value is read as JSON when it parses, as a
/// string otherwise.
pub fn apply_override(root: &mut Value, arg: &str) -> Result<(), CliError> {
    let body = arg.strip_prefix("--").unwrap_or(arg);
    let (path, raw) = body.split_once('=').ok_or_else(|| CliError::Config(format!("override {arg:?} is not of the form --key.path=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let last = i + 1 == keys.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(key.to_string(), value);
                    return Ok(());
                }
                map.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = key.parse().map_err(|_| CliError::Config(format!("{path}: {key:?} is not an array index")))?;
                let len = items.len();
                let slot = items.get_mut(idx).ok_or_else(|| CliError::Config(format!("{path}: index {idx} out of range (len {len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(CliError::Config(format!("{path}: {key:?} is not inside an object"))),
        };
    }
    Err(CliError::Config(format!("override {arg:?} has an empty key")))
}
