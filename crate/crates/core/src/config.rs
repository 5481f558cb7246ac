//! Experiment configuration: JSON file, command-line overrides, validation and hashing.

use std::path::{Path, PathBuf};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::body::{BodySpec, ConvexBody};
use crate::decomposition::ReferenceSource;
use crate::error::{Error, Result};
use crate::lattice::{Annulus, SamplingScheme};
use crate::oracle::Variant;

/// Sample count used when only `--seed` asks for random sampling.
pub const DEFAULT_SAMPLES: u64 = 100_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Parseval,
    Sampling,
    /// Naive grid loop; needs a grid sampling scheme.
    BruteForce,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Parseval => "parseval",
            Estimator::Sampling => "sampling",
            Estimator::BruteForce => "brute_force",
        }
    }
}

/// Parameters of the `oracle` command. `t` is a decimal number or a `p/q` string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    #[serde(default = "default_oracle_n")]
    pub n: u32,
    #[serde(default = "default_oracle_t")]
    pub t: OracleT,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OracleT {
    Number(f64),
    Text(String),
}

fn default_variants() -> Vec<Variant> {
    vec![Variant::A, Variant::B]
}

fn default_oracle_n() -> u32 {
    3
}

fn default_oracle_t() -> OracleT {
    OracleT::Text("1/8".into())
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { variants: default_variants(), n: default_oracle_n(), t: default_oracle_t() }
    }
}

impl OracleT {
    /// The value as an exact rational when it has one with a 64-bit numerator and denominator.
    pub fn exact(&self) -> Result<Option<Rational64>> {
        match self {
            OracleT::Text(s) => match s.trim().parse::<Rational64>() {
                Ok(q) => Ok(Some(q)),
                Err(_) => {
                    let x: f64 = s.trim().parse().map_err(|_| Error::Config(format!("cannot parse oracle t {s:?}")))?;
                    Ok(dyadic(x))
                }
            },
            OracleT::Number(x) => Ok(dyadic(*x)),
        }
    }

    pub fn as_f64(&self) -> Result<f64> {
        match self.exact()? {
            Some(q) => Ok(*q.numer() as f64 / *q.denom() as f64),
            None => match self {
                OracleT::Number(x) => Ok(*x),
                OracleT::Text(s) => s.trim().parse().map_err(|_| Error::Config(format!("cannot parse oracle t {s:?}"))),
            },
        }
    }
}

/// `x` as `p / 2^k` when that is exact with `k <= 40`.
fn dyadic(x: f64) -> Option<Rational64> {
    if !x.is_finite() {
        return None;
    }
    for k in 0..=40 {
        let scaled = x * (1u64 << k) as f64;
        if scaled.fract() == 0.0 && scaled.abs() < 9.0e15 {
            return Some(Rational64::new(scaled as i64, 1i64 << k));
        }
    }
    None
}

/// Everything a run depends on. `out` and `workers` do not change results and are left out
/// of the embedded copy and the hash.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<BodySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub estimators: Vec<Estimator>,
    /// Lattice cutoff of Parseval and X; defaults follow the thickness.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<u64>,
    /// Lattice cutoff of Y when it differs from `cutoff`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_y: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingScheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_moment_order: Option<u32>,
    /// Reference variance for Z in `decompose`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSource>,
    #[serde(default)]
    pub allow_outside_hypothesis: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
}

/// Command-line values that override the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub cutoff: Option<u64>,
    pub grid: Option<u32>,
    pub samples: Option<u64>,
    pub alpha: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies flag overrides; returns notes about flags that had no effect.
    pub fn apply(&mut self, o: &Overrides) -> Vec<String> {
        let mut notes = Vec::new();
        if o.out.is_some() {
            self.out.clone_from(&o.out);
        }
        if let Some(f) = o.format {
            self.format = f;
        }
        if o.workers.is_some() {
            self.workers = o.workers;
        }
        if o.cutoff.is_some() {
            self.cutoff = o.cutoff;
        }
        if o.alpha.is_some() {
            self.alpha = o.alpha;
        }
        if let Some(m) = o.grid {
            self.sampling = Some(SamplingScheme::Grid { m });
        }
        if let Some(samples) = o.samples {
            let seed = match self.sampling {
                Some(SamplingScheme::Random { seed, .. }) => seed,
                _ => 0,
            };
            self.sampling = Some(SamplingScheme::Random { samples, seed: o.seed.unwrap_or(seed) });
        } else if let Some(seed) = o.seed {
            match &mut self.sampling {
                Some(SamplingScheme::Random { seed: s, .. }) => *s = seed,
                Some(SamplingScheme::Grid { .. }) => notes.push("--seed has no effect on grid sampling".into()),
                None => self.sampling = Some(SamplingScheme::Random { samples: DEFAULT_SAMPLES, seed }),
            }
        }
        notes
    }

    /// Canonical JSON of the result-determining fields.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`Self::canonical_json`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    fn require<T: Clone>(value: &Option<T>, name: &str, command: &str) -> Result<T> {
        value.clone().ok_or_else(|| Error::Config(format!("`{command}` needs `{name}` in the config")))
    }

    pub fn body(&self, command: &str) -> Result<ConvexBody<f64>> {
        Self::require(&self.body, "body", command)?.build()
    }

    pub fn annulus(&self, command: &str) -> Result<Annulus<f64>> {
        let body = self.body(command)?;
        let r = Self::require(&self.r, "r", command)?;
        let t = Self::require(&self.t, "t", command)?;
        Annulus::new(body, r, t)
    }

    pub fn sampling(&self, command: &str) -> Result<SamplingScheme> {
        let s = Self::require(&self.sampling, "sampling", command)?;
        s.validate()?;
        Ok(s)
    }

    pub fn r_list(&self, command: &str) -> Result<Vec<f64>> {
        let list = Self::require(&self.r_list, "r_list", command)?;
        if list.is_empty() || list.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::Config("r_list must be a nonempty list of positive radii".into()));
        }
        Ok(list)
    }

    pub fn workers(&self) -> Result<Option<usize>> {
        match self.workers {
            Some(0) => Err(Error::Config("--workers must be at least 1".into())),
            w => Ok(w),
        }
    }
}
