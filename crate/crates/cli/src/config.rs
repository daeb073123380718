//! Experiment configuration: a TOML file naming one registered check and its
//! parameters.

use std::fmt;

use ap_lab_core::constructions::{discretize, SelfSimilarMeasure};
use ap_lab_core::fractal_spectral::{
    mollify, BesselPotential, FourierHandle, Gaussian, LebesgueCube, SigmaParams, SpikeSpectrum,
};
use ap_lab_core::group_fourier::GridDensity;
use ap_lab_core::verify::{band_limited_bump, CorollaryInput, CHECKS};
use ap_lab_core::ApError;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Problems with a configuration file. All of them map to exit code 64.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<ApError> for ConfigError {
    fn from(e: ApError) -> Self {
        ConfigError(e.to_string())
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

/// The file as written, with `params` still untyped.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub name: String,
    pub check: String,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub params: toml::Table,
}

/// Same layout as [`RawConfig`] with typed parameters; parsing the whole file
/// into it keeps line numbers in the diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Doc<P> {
    name: String,
    check: String,
    #[serde(default = "default_seeds")]
    seeds: Vec<u64>,
    #[serde(default)]
    out_dir: Option<String>,
    params: P,
}

/// A parsed, validated experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub seeds: Vec<u64>,
    #[serde(skip)]
    pub out_dir: Option<String>,
    #[serde(flatten)]
    pub check: Check,
}

impl ExperimentConfig {
    pub fn check_name(&self) -> &'static str {
        self.check.name()
    }

    /// SHA-256 of the canonical JSON of the experiment (output directory
    /// excluded), as lowercase hex.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("configs serialize");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "check", content = "params", rename_all = "snake_case")]
pub enum Check {
    L3count(L3CountParams),
    GowersThreshold(GowersParams),
    MassTelescoping(TelescopingParams),
    PolarConsistency(PolarParams),
    FrostmanFit(FrostmanParams),
    FractalCorollary(CorollaryParams),
    PointwiseDecay(DecayParams),
    SlSplit(SlParams),
}

impl Check {
    pub fn name(&self) -> &'static str {
        match self {
            Check::L3count(_) => "l3count",
            Check::GowersThreshold(_) => "gowers_threshold",
            Check::MassTelescoping(_) => "mass_telescoping",
            Check::PolarConsistency(_) => "polar_consistency",
            Check::FrostmanFit(_) => "frostman_fit",
            Check::FractalCorollary(_) => "fractal_corollary",
            Check::PointwiseDecay(_) => "pointwise_decay",
            Check::SlSplit(_) => "sl_split",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct L3CountParams {
    pub n: usize,
    pub size: usize,
    pub max_ripples: usize,
    pub max_amplitude: f64,
    #[serde(default)]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GowersParams {
    pub n: usize,
    pub delta: f64,
    pub size: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSearch {
    pub grid_max: f64,
    pub grid_step: f64,
    pub cutoff: f64,
    pub doublings: usize,
}

impl Default for BetaSearch {
    fn default() -> Self {
        Self { grid_max: 1.0, grid_step: 0.1, cutoff: 4096.0, doublings: 6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelescopingParams {
    pub measure: MeasureSpec,
    pub grid_n: usize,
    pub level_min: u32,
    pub level_max: u32,
    /// Defaults to the similarity dimension for self-similar measures.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Measured by cutoff doubling when absent.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub beta_search: BetaSearch,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarParams {
    pub density: DensitySpec,
    /// Density used to fit `C_d` once; the closed-form constant is used
    /// when absent.
    #[serde(default)]
    pub calibration: Option<DensitySpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Widths {
    /// Widths are `2^-k` for `k` in `[k_min, k_max]`.
    pub k_min: i32,
    pub k_max: i32,
}

impl Widths {
    pub fn values(&self) -> Vec<f64> {
        (self.k_min..=self.k_max).map(|k| 2f64.powi(-k)).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrostmanParams {
    pub density: DensitySpec,
    pub widths: Widths,
    pub s_target: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorollaryParams {
    pub input: CorollaryInput,
    pub density: DensitySpec,
    pub widths: Widths,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QSearch {
    pub q_min: f64,
    pub q_max: f64,
    pub q_step: f64,
    pub cutoff: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayParams {
    pub measure: MeasureSpec,
    /// Radii are `2^{k/2}` for `k` in `[k_min, k_max]`.
    pub radius_k_min: i32,
    pub radius_k_max: i32,
    pub sigma: SigmaParams,
    /// Measured on `q_search` when absent.
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub q_search: Option<QSearch>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlParams {
    pub d: usize,
    pub s_max: f64,
    pub s_step: f64,
    /// `(center, width)` of each Gaussian profile.
    pub profiles: Vec<(f64, f64)>,
    pub s_exponent: f64,
}

/// A measure given through its Fourier transform.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    MiddleThirds { d: usize },
    SelfSimilar { d: usize, b: usize, digits: Vec<usize>, #[serde(default)] weights: Option<Vec<f64>> },
    Lebesgue { d: usize },
    Bessel { d: usize, gamma: f64, #[serde(default)] band: Option<f64> },
    Gaussian { d: usize, s: f64 },
    Spikes { d: usize, freqs: Vec<i64>, amplitude: f64 },
}

/// Either a concrete measure type or a boxed handle.
pub enum Measure {
    SelfSimilar(SelfSimilarMeasure),
    Other(Box<dyn FourierHandle>),
}

impl Measure {
    pub fn handle(&self) -> &dyn FourierHandle {
        match self {
            Measure::SelfSimilar(m) => m,
            Measure::Other(b) => b.as_ref(),
        }
    }
}

fn check_dim(d: usize) -> Result<(), ConfigError> {
    if d == 0 || d > 2 {
        return Err(ConfigError(format!("measure dimension d = {d}: must be 1 or 2")));
    }
    Ok(())
}

impl MeasureSpec {
    pub fn build(&self) -> Result<Measure, ConfigError> {
        Ok(match self {
            MeasureSpec::MiddleThirds { d } => {
                check_dim(*d)?;
                Measure::SelfSimilar(SelfSimilarMeasure::middle_thirds(*d))
            }
            MeasureSpec::SelfSimilar { d, b, digits, weights } => Measure::SelfSimilar(match weights {
                Some(w) => SelfSimilarMeasure::new(*d, *b, digits.clone(), w.clone())?,
                None => SelfSimilarMeasure::uniform(*d, *b, digits.clone())?,
            }),
            MeasureSpec::Lebesgue { d } => {
                check_dim(*d)?;
                Measure::Other(Box::new(LebesgueCube { d: *d }))
            }
            MeasureSpec::Bessel { d, gamma, band } => {
                check_dim(*d)?;
                Measure::Other(Box::new(BesselPotential { d: *d, gamma: *gamma, band: *band }))
            }
            MeasureSpec::Gaussian { d, s } => {
                check_dim(*d)?;
                Measure::Other(Box::new(Gaussian { d: *d, s: *s }))
            }
            MeasureSpec::Spikes { d, freqs, amplitude } => {
                check_dim(*d)?;
                Measure::Other(Box::new(SpikeSpectrum { d: *d, freqs: freqs.clone(), amplitude: *amplitude }))
            }
        })
    }

    pub fn label(&self) -> String {
        serde_json::to_string(self).expect("specs serialize")
    }
}

/// A density sampled on `Z_N^d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Constant { d: usize, n: usize, value: f64 },
    PointMass { d: usize, n: usize },
    /// Fejér band-limited periodic Gaussian of width `s`.
    Bump { d: usize, n: usize, s: f64, center: f64, band: f64 },
    /// Exact level-`level` mass histogram of a self-similar measure.
    Discretized { measure: MeasureSpec, n: usize, level: usize },
    /// `φ_level ∗ μ` sampled on the grid.
    Mollified { measure: MeasureSpec, n: usize, level: u32 },
}

impl DensitySpec {
    pub fn build(&self) -> Result<GridDensity, ConfigError> {
        Ok(match self {
            DensitySpec::Constant { d, n, value } => GridDensity::constant(*d, *n, *value)?,
            DensitySpec::PointMass { d, n } => GridDensity::point_mass(*d, *n)?,
            DensitySpec::Bump { d, n, s, center, band } => band_limited_bump(*d, *n, *s, *center, *band)?,
            DensitySpec::Discretized { measure, n, level } => match measure.build()? {
                Measure::SelfSimilar(m) => discretize(&m, *n, *level)?,
                Measure::Other(_) => {
                    return Err(ConfigError("density kind `discretized` needs a self-similar measure".into()))
                }
            },
            DensitySpec::Mollified { measure, n, level } => mollify(measure.build()?.handle(), *level, *n)?,
        })
    }

    pub fn label(&self) -> String {
        serde_json::to_string(self).expect("specs serialize")
    }
}

fn typed<P: DeserializeOwned>(text: &str, origin: &str) -> Result<Doc<P>, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError(format!("{origin}: {}", e.to_string().trim_end())))
}

fn finish<P>(doc: Doc<P>, wrap: fn(P) -> Check) -> ExperimentConfig {
    ExperimentConfig { name: doc.name, seeds: doc.seeds, out_dir: doc.out_dir, check: wrap(doc.params) }
}

/// Parses a config from its text. `origin` prefixes every diagnostic.
pub fn parse(text: &str, origin: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = typed_raw(text, origin)?;
    let cfg = match raw.check.as_str() {
        "l3count" => finish(typed(text, origin)?, Check::L3count),
        "gowers_threshold" => finish(typed(text, origin)?, Check::GowersThreshold),
        "mass_telescoping" => finish(typed(text, origin)?, Check::MassTelescoping),
        "polar_consistency" => finish(typed(text, origin)?, Check::PolarConsistency),
        "frostman_fit" => finish(typed(text, origin)?, Check::FrostmanFit),
        "fractal_corollary" => finish(typed(text, origin)?, Check::FractalCorollary),
        "pointwise_decay" => finish(typed(text, origin)?, Check::PointwiseDecay),
        "sl_split" => finish(typed(text, origin)?, Check::SlSplit),
        other => {
            let known: Vec<&str> = CHECKS.iter().map(|c| c.0).collect();
            return Err(ConfigError(format!(
                "{origin}: field `check`: unknown check `{other}` (known: {})",
                known.join(", ")
            )));
        }
    };
    if cfg.seeds.is_empty() {
        return Err(ConfigError(format!("{origin}: field `seeds`: must list at least one seed")));
    }
    validate(&cfg).map_err(|e| ConfigError(format!("{origin}: {e}")))?;
    Ok(cfg)
}

fn typed_raw(text: &str, origin: &str) -> Result<RawConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError(format!("{origin}: {}", e.to_string().trim_end())))
}

/// Constraints that the core library would otherwise only report deep inside
/// a run.
fn validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    let grid = |field: &str, n: usize, min: usize| {
        if n < min {
            Err(ConfigError(format!("field `params.{field}`: transform size N = {n} must be at least {min}")))
        } else {
            Ok(())
        }
    };
    match &cfg.check {
        Check::L3count(p) => grid("n", p.n, 4),
        Check::GowersThreshold(p) => grid("n", p.n, 3),
        Check::MassTelescoping(p) => {
            if p.level_min > p.level_max {
                return Err(ConfigError("field `params.level_min`: exceeds `level_max`".into()));
            }
            let need = 2usize.saturating_pow(p.level_max + 2);
            if p.grid_n < need {
                return Err(ConfigError(format!(
                    "field `params.grid_n`: transform size N = {} must be at least 2^(level_max+2) = {need} \
                     so that the mollifier band 2^(level_max+1) stays below the Nyquist frequency N/2",
                    p.grid_n
                )));
            }
            Ok(())
        }
        Check::PointwiseDecay(p) => {
            if p.q.is_none() && p.q_search.is_none() {
                return Err(ConfigError("params: give either `q` or `q_search`".into()));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Sets `path` (dotted, relative to `params`, or `seed`) to `value` in the
/// raw config and re-parses it.
pub fn with_axis(raw: &RawConfig, path: &str, value: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut raw = raw.clone();
    if path == "seed" {
        let s = value.parse().map_err(|_| ConfigError(format!("axis `seed`: `{value}` is not an unsigned integer")))?;
        raw.seeds = vec![s];
    } else {
        let keys: Vec<&str> = path.split('.').collect();
        let (last, parents) = keys.split_last().expect("split yields one item");
        let mut table = &mut raw.params;
        for k in parents {
            table = match table.get_mut(*k) {
                Some(toml::Value::Table(t)) => t,
                _ => return Err(ConfigError(format!("unknown axis `{path}`: no table `{k}` in params"))),
            };
        }
        let parsed = match table.get(*last) {
            Some(toml::Value::Integer(_)) => value.parse().map(toml::Value::Integer).ok(),
            Some(toml::Value::Float(_)) => value.parse().map(toml::Value::Float).ok(),
            Some(toml::Value::String(_)) => Some(toml::Value::String(value.to_string())),
            Some(_) => return Err(ConfigError(format!("axis `{path}` is not a scalar"))),
            None => value
                .parse()
                .map(toml::Value::Integer)
                .or_else(|_| value.parse().map(toml::Value::Float))
                .ok(),
        };
        let v = parsed.ok_or_else(|| ConfigError(format!("axis `{path}`: cannot read `{value}` as a number")))?;
        table.insert(last.to_string(), v);
    }
    let text = toml::to_string(&raw).map_err(|e| ConfigError(e.to_string()))?;
    parse(&text, &format!("{path} = {value}")).map_err(|e| {
        if e.0.contains("unknown field") {
            ConfigError(format!("unknown axis `{path}` for check `{}`", raw.check))
        } else {
            e
        }
    })
}

pub fn read_raw(text: &str, origin: &str) -> Result<RawConfig, ConfigError> {
    typed_raw(text, origin)
}

/// Expands `a..b` (inclusive integer range) or a comma-separated list.
pub fn expand_values(spec: &str) -> Result<Vec<String>, ConfigError> {
    let spec = spec.trim();
    if let Some((a, b)) = spec.split_once("..") {
        let (a, b): (i64, i64) = match (a.trim().parse(), b.trim().parse()) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return Err(ConfigError(format!("--values: `{spec}` is not an integer range a..b"))),
        };
        if a > b {
            return Err(ConfigError(format!("--values: empty range `{spec}`")));
        }
        return Ok((a..=b).map(|v| v.to_string()).collect());
    }
    let vals: Vec<String> = spec.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    if vals.is_empty() {
        return Err(ConfigError("--values: the list of values is empty".into()));
    }
    Ok(vals)
}
