use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use semiclass::analysis::p_serde;
use semiclass::families::{builtin, from_expression, Family, FamilyId};
use semiclass::quantize::{GridPolicy, Method};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolSpec {
    Family(FamilyId),
    Expression(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PValue(#[serde(with = "p_serde")] pub f64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Assumptions,
    Spectrum,
    Scaling,
    Garding,
    Apriori,
    Microlocal,
    Moyal,
    QnBound,
    DerivativeBounds,
}

impl Check {
    pub fn as_str(&self) -> &'static str {
        match self {
            Check::Assumptions => "assumptions",
            Check::Spectrum => "spectrum",
            Check::Scaling => "scaling",
            Check::Garding => "garding",
            Check::Apriori => "apriori",
            Check::Microlocal => "microlocal",
            Check::Moyal => "moyal",
            Check::QnBound => "qn_bound",
            Check::DerivativeBounds => "derivative_bounds",
        }
    }
}

/// `h = h_tilde · 2^{-k}` for `k_min <= k <= k_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub h_tilde: f64,
    #[serde(default)]
    pub k_min: u32,
    pub k_max: u32,
}

impl SweepSpec {
    pub fn h_values(&self) -> Vec<f64> {
        (self.k_min..=self.k_max).map(|k| self.h_tilde * 0.5f64.powi(k as i32)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed `|δ̂(p) - δ(p)|`.
    pub fit: f64,
    /// Allowed `|λ/h - μ|` in the leading-order comparison.
    pub leading_order: f64,
    /// Allowed relative variation of the Gårding constant.
    pub garding: f64,
    /// Upper bound on `C̃`.
    pub apriori: f64,
    /// The remainder mass must stay below `h^microlocal_power`.
    pub microlocal_power: f64,
    /// Allowed max/min ratio of `‖Op(q^N)u‖` over the sweep.
    pub qn_factor: f64,
    /// Allowed ratio against the `h^{-n/4}` extrapolation.
    pub derivative_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            fit: 0.05,
            leading_order: 0.25,
            garding: 0.2,
            apriori: 10.0,
            microlocal_power: 2.0,
            qn_factor: 2.0,
            derivative_factor: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Microlocal scale exponent.
    pub delta: f64,
    /// Cluster radius `C` in `|λ| < C h` for ground states.
    pub ground_c: f64,
    pub spectrum_h: f64,
    pub spectrum_c: f64,
    pub microlocal_h: Vec<f64>,
    pub qn_powers: Vec<u32>,
    pub derivative_order: u32,
    /// The a priori check uses the sweep values with `k <= apriori_k_max`.
    pub apriori_k_max: u32,
    pub garding_h: Vec<f64>,
    pub assumption_radius: f64,
    pub assumption_samples: usize,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            delta: 0.4,
            ground_c: 3.0,
            spectrum_h: 0.05,
            spectrum_c: 5.0,
            microlocal_h: vec![0.05, 0.025],
            qn_powers: vec![1, 2],
            derivative_order: 2,
            apriori_k_max: 5,
            garding_h: vec![0.2, 0.1, 0.05, 0.025],
            assumption_radius: 20.0,
            assumption_samples: 4096,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub symbol: SymbolSpec,
    pub n: usize,
    pub grid: GridPolicy,
    #[serde(default = "default_method")]
    pub method: Method,
    pub sweep: SweepSpec,
    #[serde(default = "default_p_list")]
    pub p_list: Vec<PValue>,
    pub checks: Vec<Check>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub params: Params,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_method() -> Method {
    Method::SchrodingerSpectral
}

fn default_p_list() -> Vec<PValue> {
    vec![PValue(2.0), PValue(4.0), PValue(6.0), PValue(f64::INFINITY)]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_seed() -> u64 {
    0x5eed
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("schema violation at '{path}': {}", e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            bail!("schema violation at 'schema_version': expected {CONFIG_SCHEMA_VERSION}, got {}", self.schema_version);
        }
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            bail!("schema violation at 'name': use letters, digits, '-' and '_'");
        }
        if !(1..=2).contains(&self.n) {
            bail!("schema violation at 'n': dimension must be 1 or 2, got {}", self.n);
        }
        if !(self.sweep.h_tilde > 0.0 && self.sweep.h_tilde <= 1.0) {
            bail!("schema violation at 'sweep.h_tilde': must lie in (0, 1]");
        }
        if self.sweep.k_min > self.sweep.k_max {
            bail!("schema violation at 'sweep.k_min': exceeds k_max");
        }
        if self.p_list.iter().any(|p| p.0.is_nan() || p.0 < 2.0) {
            bail!("schema violation at 'p_list': exponents must be >= 2");
        }
        if self.checks.is_empty() {
            bail!("schema violation at 'checks': list at least one check");
        }
        if self.params.qn_powers.iter().any(|&p| p > 4) {
            bail!("schema violation at 'params.qn_powers': powers above 4 are not supported");
        }
        if self.params.derivative_order > 3 {
            bail!("schema violation at 'params.derivative_order': orders above 3 are not supported");
        }
        if !(self.params.delta > 0.0 && self.params.delta < 0.5) {
            bail!("schema violation at 'params.delta': must lie in (0, 1/2)");
        }
        Ok(())
    }

    /// Requested checks, deduplicated, in execution order.
    pub fn ordered_checks(&self) -> Vec<Check> {
        self.checks.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn wants(&self, c: Check) -> bool {
        self.checks.contains(&c)
    }

    pub fn family(&self) -> Result<Family> {
        Ok(match &self.symbol {
            SymbolSpec::Family(id) => builtin(*id, self.n),
            SymbolSpec::Expression(src) => from_expression(src, self.n)?,
        })
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.p_list.iter().map(|p| p.0).collect()
    }

    /// SHA-256 of the canonical JSON, ignoring where results are written.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        hex::encode(Sha256::digest(serde_json::to_vec(&c).expect("config serializes")))
    }

    pub fn run_dir(&self, out: Option<&Path>) -> PathBuf {
        out.unwrap_or(&self.output_dir).join(format!("{}-{}", self.name, &self.hash()[..12]))
    }
}
