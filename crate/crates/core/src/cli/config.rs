//! Run configuration: a TOML file plus command-line flag overrides
//! (flags win).

use serde::{Deserialize, Serialize};

use crate::codec::RatePair;
use crate::decoders::DecodingMetric;
use crate::exponents::GridOpts;
use crate::measures::{CondPmf, JointPmf, Pmf};
use crate::montecarlo::SourceModel;
use crate::{Error, Result};

/// A scalar or a list in the TOML file; always a list in memory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::One(v) => vec![*v],
            Self::Many(v) => v.clone(),
        }
    }
}

fn default_one() -> OneOrMany {
    OneOrMany::One(0.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub kind: String,
    #[serde(default)]
    pub crossover: Option<f64>,
    #[serde(default)]
    pub x_alphabet: Option<usize>,
    #[serde(default)]
    pub y_alphabet: Option<usize>,
    /// Row-major `P(x, y)` entries for `kind = "joint"`.
    #[serde(default)]
    pub probs: Option<Vec<f64>>,
}

impl SourceSpec {
    pub fn build(&self) -> Result<SourceModel> {
        match self.kind.as_str() {
            "dsbs" => {
                let p = self.crossover.ok_or_else(|| {
                    Error::InvalidConfig("source.kind = \"dsbs\" needs source.crossover".into())
                })?;
                SourceModel::dsbs(p)
            }
            "joint" => {
                let (x, y) = match (self.x_alphabet, self.y_alphabet) {
                    (Some(x), Some(y)) => (x, y),
                    _ => {
                        return Err(Error::InvalidConfig(
                            "source.kind = \"joint\" needs x_alphabet and y_alphabet".into(),
                        ))
                    }
                };
                let probs = self.probs.clone().ok_or_else(|| {
                    Error::InvalidConfig("source.kind = \"joint\" needs source.probs".into())
                })?;
                SourceModel::new(JointPmf::new(x, y, probs)?)
            }
            other => Err(Error::InvalidConfig(format!(
                "unknown source kind {other:?} (expected \"dsbs\" or \"joint\")"
            ))),
        }
    }

    pub fn describe(&self) -> String {
        match self.kind.as_str() {
            "dsbs" => format!("dsbs({})", self.crossover.unwrap_or(f64::NAN)),
            _ => format!(
                "joint({}x{})",
                self.x_alphabet.unwrap_or(0),
                self.y_alphabet.unwrap_or(0)
            ),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    /// "tempered" | "mismatched" | "min_entropy" | "map_limit".
    #[serde(default = "default_metric_kind")]
    pub kind: String,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Rows indexed by the observation symbol: `P'(x|y)`. Required for
    /// "mismatched"; ignored otherwise.
    #[serde(default)]
    pub channel: Option<Vec<Vec<f64>>>,
    /// Base kind for "map_limit": "tempered" | "mismatched" | "min_entropy".
    #[serde(default)]
    pub base: Option<String>,
}

fn default_metric_kind() -> String {
    "tempered".into()
}

fn default_beta() -> f64 {
    1.0
}

impl Default for MetricSpec {
    fn default() -> Self {
        Self {
            kind: default_metric_kind(),
            beta: default_beta(),
            channel: None,
            base: None,
        }
    }
}

impl MetricSpec {
    pub fn build(&self, model: &SourceModel) -> Result<DecodingMetric> {
        self.build_kind(&self.kind, model)
    }

    fn build_kind(&self, kind: &str, model: &SourceModel) -> Result<DecodingMetric> {
        match kind {
            "tempered" => DecodingMetric::tempered(self.beta, model.p_x_given_y().clone()),
            "min_entropy" => DecodingMetric::min_entropy(self.beta),
            "mismatched" => {
                let rows = self.channel.as_ref().ok_or_else(|| {
                    Error::InvalidConfig("metric.kind = \"mismatched\" needs metric.channel".into())
                })?;
                let rows: Result<Vec<Pmf>> = rows.iter().map(|r| Pmf::new(r.clone())).collect();
                DecodingMetric::mismatched(self.beta, CondPmf::new(rows?)?)
            }
            "map_limit" => {
                let base = self.base.as_deref().unwrap_or("tempered");
                if base == "map_limit" {
                    return Err(Error::InvalidConfig(
                        "metric.base cannot itself be map_limit".into(),
                    ));
                }
                DecodingMetric::map_limit(self.build_kind(base, model)?)
            }
            other => Err(Error::InvalidConfig(format!(
                "unknown metric kind {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSpec {
    #[serde(default = "default_one")]
    pub r_s: OneOrMany,
    #[serde(default = "default_one")]
    pub r_w: OneOrMany,
}

impl Default for RatesSpec {
    fn default() -> Self {
        Self {
            r_s: default_one(),
            r_w: default_one(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    #[serde(default = "default_n_list")]
    pub n: Vec<u32>,
    #[serde(default = "default_codes")]
    pub codes: u32,
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Smallest blocklength admitted into exponent fits.
    #[serde(default = "default_fit_min_n")]
    pub fit_min_n: u32,
}

fn default_n_list() -> Vec<u32> {
    vec![4, 6, 8]
}

fn default_codes() -> u32 {
    10
}

fn default_trials() -> u64 {
    10_000
}

fn default_fit_min_n() -> u32 {
    4
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            n: default_n_list(),
            codes: default_codes(),
            trials: default_trials(),
            fit_min_n: default_fit_min_n(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSpec {
    /// Which exponents `exponent` and `sweep` evaluate.
    #[serde(default = "default_kinds")]
    pub kinds: Vec<String>,
}

fn default_kinds() -> Vec<String> {
    ["fr_random", "fr_map", "fa_types", "fa_gallager", "secrecy"]
        .map(String::from)
        .to_vec()
}

impl Default for ExponentSpec {
    fn default() -> Self {
        Self {
            kinds: default_kinds(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub csv: Option<String>,
    #[serde(default)]
    pub json: Option<String>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            csv: None,
            json: None,
        }
    }
}

/// The fully resolved run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub source: SourceSpec,
    #[serde(default)]
    pub metric: MetricSpec,
    #[serde(default)]
    pub rates: RatesSpec,
    #[serde(default)]
    pub simulation: SimulationSpec,
    #[serde(default)]
    pub exponent: ExponentSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_grid")]
    pub grid_resolution: u32,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_seed() -> u64 {
    1
}

fn default_grid() -> u32 {
    60
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.source.build()?;
        for r in self.rates.r_s.values().iter().chain(&self.rates.r_w.values()) {
            if !r.is_finite() || *r < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "rates must be finite and non-negative, got {r}"
                )));
            }
        }
        if self.simulation.n.is_empty() {
            return Err(Error::InvalidConfig("simulation.n must be non-empty".into()));
        }
        if self.simulation.codes == 0 || self.simulation.trials == 0 {
            return Err(Error::InvalidConfig(
                "simulation.codes and simulation.trials must be positive".into(),
            ));
        }
        if self.grid_resolution < 2 {
            return Err(Error::InvalidConfig("grid_resolution must be >= 2".into()));
        }
        let known = [
            "fr_random",
            "fr_map",
            "fa_types",
            "fa_gallager",
            "secrecy",
            "fr_expurgated",
            "fr_expurgated_sup_beta",
        ];
        for k in &self.exponent.kinds {
            if !known.contains(&k.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "unknown exponent kind {k:?} (expected one of {known:?})"
                )));
            }
        }
        Ok(())
    }

    /// Cross product of the configured rate lists.
    pub fn rate_pairs(&self) -> Result<Vec<RatePair>> {
        let mut out = Vec::new();
        for &r_s in &self.rates.r_s.values() {
            for &r_w in &self.rates.r_w.values() {
                out.push(RatePair::new(r_s, r_w)?);
            }
        }
        Ok(out)
    }

    pub fn grid_opts(&self) -> GridOpts {
        GridOpts::with_resolution(self.grid_resolution)
    }

    /// Stable 64-bit FNV-1a hash of the canonical JSON form, for row
    /// provenance.
    pub fn stable_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in canonical.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}
