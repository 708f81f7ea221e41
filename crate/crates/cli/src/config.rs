use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use poscub::bench::IntegrandKind;
use poscub::geometry::{Domain, WeightFunction};
use poscub::lscf::BuildOptions;
use poscub::points::{GeneratorKind, GeneratorSpec};
use poscub::spaces::{BasisFamily, BasisSpec};
use poscub::subsample::{KernelStrategy, SubsampleKind, SubsampleMethod};

use crate::CliError;

pub const CONFIG_KEYS: &str = "\
Config keys (JSON file via --config, single keys via --set key=value):
  domain            preset name (cube2, cube3, unit-cube2, unit-cube3, ball2, ball3,
                    nonstandard) or {\"kind\": \"box\"|\"ball\"|\"union\", \"params\": {...}};
                    default: [-1,1]^dim
  dim               dimension of the default domain (default 2)
  weight            one, chebyshev, radial-half, or {\"kind\": \"radial\", \"params\": {\"exponent\": p}}
  family            basis family: algebraic, trigonometric, cubic-phs (default algebraic)
  degree            basis degree (default 4)
  centers           number of PHS centers; overrides the degree-matched count
  generator         halton, sobol or random (default halton)
  seed              seed for random points and random Genz parameters (default 0)
  skip              leading raw sequence elements to drop (default 1 for QMC, 0 for random)
  count             number of points for `points` (default 1024)
  n_max             largest N tried by the builder (default 1048576)
  rank_tol          relative rank tolerance (default 1e-10)
  exact_tol         exactness tolerance, relative to 1 + |m| (default 1e-8)
  method            subsampling method: steinitz or nnls (default steinitz)
  kernel            Steinitz kernel columns: window or full (default window)
  zero_weight_tol   relative threshold for dropping weights (default 1e-13)
  nnls_tol          NNLS gradient tolerance, relative to |Phi^T m| (default 1e-10)
  max_iterations    NNLS outer iteration cap (default 10 K)
  degrees           degree list for genz-bench and ratio (default [1..10])
  generators        generator list for genz-bench (default [\"halton\"])
  integrands        oscillatory, product-peak, corner-peak, gaussian, arccos-product,
                    rational-sine, exp-square (default: the four Genz functions)
  trials            random trials per Genz function (default 20)
  refine            bisect for the lowest positive N in `ratio` (default true)
  rule              rule CSV for `subsample` and `verify`; the sidecar is the same path
                    with extension .json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainArg {
    Preset(String),
    Explicit(Domain),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightArg {
    Preset(String),
    Explicit(WeightFunction),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub domain: Option<DomainArg>,
    pub dim: Option<usize>,
    pub weight: WeightArg,
    pub family: BasisFamily,
    pub degree: usize,
    pub centers: Option<usize>,
    pub generator: GeneratorKind,
    pub seed: u64,
    pub skip: Option<u64>,
    pub count: usize,
    pub n_max: usize,
    pub rank_tol: f64,
    pub exact_tol: f64,
    pub method: SubsampleKind,
    pub kernel: KernelStrategy,
    pub zero_weight_tol: f64,
    pub nnls_tol: f64,
    pub max_iterations: Option<usize>,
    pub degrees: Vec<usize>,
    pub generators: Vec<GeneratorKind>,
    pub integrands: Vec<IntegrandKind>,
    pub trials: usize,
    pub refine: bool,
    pub rule: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let build = BuildOptions::default();
        let sub = SubsampleMethod::steinitz();
        RunConfig {
            domain: None,
            dim: None,
            weight: WeightArg::Preset("one".into()),
            family: BasisFamily::Algebraic,
            degree: 4,
            centers: None,
            generator: GeneratorKind::Halton,
            seed: 0,
            skip: None,
            count: 1024,
            n_max: build.n_max,
            rank_tol: build.rank_tol,
            exact_tol: build.exact_tol,
            method: sub.kind,
            kernel: sub.kernel,
            zero_weight_tol: sub.zero_weight_tol,
            nnls_tol: sub.nnls_residual_tol,
            max_iterations: None,
            degrees: (1..=10).collect(),
            generators: vec![GeneratorKind::Halton],
            integrands: poscub::bench::GenzKind::ALL.iter().map(|&k| IntegrandKind::Genz(k)).collect(),
            trials: poscub::bench::experiment::DEFAULT_TRIALS,
            refine: true,
            rule: None,
        }
    }
}

impl RunConfig {
    /// Config file, then `--set` overrides, then typed flags (already turned
    /// into overrides by the caller), in that order.
    pub fn load(path: Option<&Path>, overrides: &[(String, Value)]) -> Result<Self, CliError> {
        let mut root = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                serde_json::from_str::<Value>(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Map::new()),
        };
        let obj = root
            .as_object_mut()
            .ok_or_else(|| CliError::Config("config file must contain a JSON object".into()))?;
        for (k, v) in overrides {
            obj.insert(k.clone(), v.clone());
        }
        serde_json::from_value(root).map_err(|e| CliError::Config(e.to_string()))
    }

    /// SHA-256 of the effective configuration in its canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn domain(&self) -> Result<Domain, CliError> {
        let d = match &self.domain {
            Some(DomainArg::Preset(name)) => Domain::preset(name).map_err(config)?,
            Some(DomainArg::Explicit(d)) => d.clone(),
            None => Domain::cube(self.dim.unwrap_or(2), -1.0, 1.0).map_err(config)?,
        };
        d.validate().map_err(config)?;
        if let Some(dim) = self.dim.filter(|&n| n != d.dim()) {
            return Err(CliError::Config(format!("dim {dim} does not match the domain dimension {}", d.dim())));
        }
        Ok(d)
    }

    pub fn weight(&self) -> Result<WeightFunction, CliError> {
        match &self.weight {
            WeightArg::Preset(name) => WeightFunction::preset(name).map_err(config),
            WeightArg::Explicit(w) => Ok(w.clone()),
        }
    }

    pub fn basis(&self, dim: usize) -> BasisSpec {
        self.basis_of_degree(self.degree, dim)
    }

    pub fn basis_of_degree(&self, degree: usize, dim: usize) -> BasisSpec {
        match (self.family, self.centers) {
            (BasisFamily::CubicPhs, Some(centers)) => {
                BasisSpec::CubicPhs { centers, generator: GeneratorSpec::halton() }
            }
            (family, _) => BasisSpec::of_family(family, degree, dim),
        }
    }

    pub fn generator_spec(&self, kind: GeneratorKind) -> GeneratorSpec {
        let mut g = GeneratorSpec::of_kind(kind, self.seed);
        g.skip = self.skip;
        g
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions { n_max: self.n_max, rank_tol: self.rank_tol, exact_tol: self.exact_tol }
    }

    pub fn subsample_method(&self) -> SubsampleMethod {
        SubsampleMethod {
            kind: self.method,
            zero_weight_tol: self.zero_weight_tol,
            nnls_residual_tol: self.nnls_tol,
            max_iterations: self.max_iterations,
            kernel: self.kernel,
        }
    }

    pub fn rule_path(&self) -> Result<&Path, CliError> {
        self.rule.as_deref().ok_or_else(|| CliError::Config("a rule file is required (--rule or key `rule`)".into()))
    }
}

fn config(e: poscub::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// `key=value`, where the value is JSON if it parses as such and a string
/// otherwise.
pub fn parse_override(s: &str) -> Result<(String, Value), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let key = k.trim();
    if key.is_empty() {
        return Err(format!("empty key in `{s}`"));
    }
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((key.to_string(), value))
}

/// Degree lists as `a..b` (inclusive) or comma separated.
pub fn parse_degrees(s: &str) -> Result<Vec<usize>, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|e| format!("{s}: {e}"))?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|e| format!("{s}: {e}"))?;
        if a > b {
            return Err(format!("empty degree range `{s}`"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|e| format!("{s}: {e}"))).collect()
}
