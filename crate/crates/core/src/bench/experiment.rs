//! Error experiments against baselines, and the `N(K)` ratio experiment.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baseline::{legendre_estimate, legendre_nodes_per_axis, qmc_rule};
use super::genz::{checked_reference, GenzFunction, Integrand, IntegrandKind};
use crate::error::{Error, Result};
use crate::geometry::{Domain, WeightFunction};
use crate::lscf::{apply_rule, build_positive_lscf, try_ls_rule, BuildOptions, CubatureRule, Problem};
use crate::points::{DomainSampler, GeneratorKind, GeneratorSpec};
use crate::spaces::{BasisFamily, BasisSpec};
use crate::subsample::{subsample, SubsampleMethod};

pub const DEFAULT_TRIALS: usize = 20;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub domain: Domain,
    pub weight: WeightFunction,
    pub family: BasisFamily,
    pub degrees: Vec<usize>,
    pub generators: Vec<GeneratorKind>,
    pub integrands: Vec<IntegrandKind>,
    pub trials: usize,
    pub seed: u64,
    pub build: BuildOptions,
    pub subsample: SubsampleMethod,
}

impl ExperimentConfig {
    pub fn new(domain: Domain, weight: WeightFunction, family: BasisFamily, degrees: Vec<usize>) -> Self {
        ExperimentConfig {
            domain,
            weight,
            family,
            degrees,
            generators: vec![GeneratorKind::Halton],
            integrands: super::genz::GenzKind::ALL.iter().map(|&k| IntegrandKind::Genz(k)).collect(),
            trials: DEFAULT_TRIALS,
            seed: 0,
            build: BuildOptions::default(),
            subsample: SubsampleMethod::steinitz(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.weight.check_compatible(&self.domain)?;
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trial count must be at least 1".into()));
        }
        if self.degrees.is_empty() || self.generators.is_empty() || self.integrands.is_empty() {
            return Err(Error::InvalidParameter("degrees, generators and integrands must be nonempty".into()));
        }
        self.subsample.validate()
    }
}

/// One row of the error table; missing entries are failures of the
/// corresponding rule, described in `note`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub integrand: IntegrandKind,
    pub generator: GeneratorKind,
    pub degree: usize,
    pub k: usize,
    pub n_ls: Option<usize>,
    pub n_interp: Option<usize>,
    pub trial: usize,
    pub err_ls: Option<f64>,
    pub err_interp: Option<f64>,
    pub err_qmc: Option<f64>,
    pub err_legendre: Option<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub median: f64,
    pub max: f64,
}

impl Aggregate {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        Some(Aggregate { median, max: v[n - 1] })
    }
}

/// Median and maximum over trials for one (integrand, generator, degree) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub integrand: IntegrandKind,
    pub generator: GeneratorKind,
    pub degree: usize,
    pub ls: Option<Aggregate>,
    pub interp: Option<Aggregate>,
    pub qmc: Option<Aggregate>,
    pub legendre: Option<Aggregate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
    pub summaries: Vec<CellSummary>,
}

impl ErrorTable {
    pub fn summary(&self, integrand: IntegrandKind, generator: GeneratorKind, degree: usize) -> Option<&CellSummary> {
        self.summaries.iter().find(|s| s.integrand == integrand && s.generator == generator && s.degree == degree)
    }
}

fn rel_error(approx: f64, exact: f64) -> f64 {
    let err = (approx - exact).abs();
    if exact != 0.0 {
        err / exact.abs()
    } else {
        err
    }
}

struct Case {
    integrand: IntegrandKind,
    trial: usize,
    f: Integrand,
    reference: f64,
}

/// The rules of one (degree, generator) cell.
struct CellRules {
    k: usize,
    ls: Result<CubatureRule>,
    interp: Option<Result<CubatureRule>>,
    qmc: Option<CubatureRule>,
    legendre_n: Option<usize>,
}

fn build_cell(problem: &Problem, cfg: &ExperimentConfig, kind: GeneratorKind) -> CellRules {
    let spec = GeneratorSpec::of_kind(kind, cfg.seed);
    let k = problem.k();
    let ls = build_positive_lscf(problem, &spec, &cfg.build).map(|(rule, _)| rule);
    let (interp, qmc, legendre_n) = match &ls {
        Ok(rule) => (
            Some(subsample(rule, problem, &cfg.subsample).map(|s| s.rule)),
            qmc_rule(&rule.points, &cfg.domain, &cfg.weight).ok(),
            Some(legendre_nodes_per_axis(rule.len(), cfg.domain.dim())),
        ),
        Err(_) => (None, None, None),
    };
    CellRules { k, ls, interp, qmc, legendre_n }
}

/// Relative errors of the LS rule, its subsampled interpolatory rule, QMC on
/// the same points and the product Gauss–Legendre rule with a matched budget.
pub fn run_error_experiment(cfg: &ExperimentConfig) -> Result<ErrorTable> {
    cfg.validate()?;
    let dim = cfg.domain.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut drawn = Vec::new();
    for &integrand in &cfg.integrands {
        let trials = if integrand.is_random() { cfg.trials } else { 1 };
        for trial in 0..trials {
            let f = match integrand {
                IntegrandKind::Genz(kind) => Integrand::genz(GenzFunction::random(kind, dim, &mut rng), &cfg.domain),
                IntegrandKind::Fixed(t) => Integrand::Fixed(t),
            };
            drawn.push((integrand, trial + 1, f));
        }
    }
    let cases: Vec<Case> = drawn
        .into_par_iter()
        .map(|(integrand, trial, f)| {
            let reference = checked_reference(|x| f.eval(x), &cfg.domain, &cfg.weight)?;
            Ok(Case { integrand, trial, f, reference })
        })
        .collect::<Result<_>>()?;

    let problems: Vec<(usize, Problem)> = cfg
        .degrees
        .par_iter()
        .map(|&m| Ok((m, Problem::new(&BasisSpec::of_family(cfg.family, m, dim), &cfg.domain, &cfg.weight)?)))
        .collect::<Result<_>>()?;
    let mut jobs = Vec::new();
    for (m, p) in &problems {
        for &g in &cfg.generators {
            jobs.push((*m, p, g));
        }
    }
    let blocks: Vec<Vec<ErrorRow>> = jobs
        .into_par_iter()
        .map(|(degree, problem, generator)| {
            let cell = build_cell(problem, cfg, generator);
            let mut rows = Vec::with_capacity(cases.len());
            for case in &cases {
                let f = |x: &[f64]| case.f.eval(x);
                let mut note = Vec::new();
                let mut eval = |rule: Option<&Result<CubatureRule>>, label: &str| -> Option<f64> {
                    match rule? {
                        Ok(r) => match apply_rule(r, f) {
                            Ok(v) => Some(rel_error(v, case.reference)),
                            Err(e) => {
                                note.push(format!("{label}: {e}"));
                                None
                            }
                        },
                        Err(e) => {
                            note.push(format!("{label}: {e}"));
                            None
                        }
                    }
                };
                let err_ls = eval(Some(&cell.ls), "ls");
                let err_interp = eval(cell.interp.as_ref(), "interp");
                let err_qmc = cell.qmc.as_ref().and_then(|r| apply_rule(r, f).ok()).map(|v| rel_error(v, case.reference));
                let err_legendre = cell
                    .legendre_n
                    .and_then(|n| legendre_estimate(n, &cfg.domain, &cfg.weight, f).ok())
                    .map(|v| rel_error(v, case.reference));
                rows.push(ErrorRow {
                    integrand: case.integrand,
                    generator,
                    degree,
                    k: cell.k,
                    n_ls: cell.ls.as_ref().ok().map(|r| r.len()),
                    n_interp: cell.interp.as_ref().and_then(|r| r.as_ref().ok()).map(|r| r.len()),
                    trial: case.trial,
                    err_ls,
                    err_interp,
                    err_qmc,
                    err_legendre,
                    note: if note.is_empty() { None } else { Some(note.join("; ")) },
                });
            }
            rows
        })
        .collect();

    // deterministic order: integrand, generator, degree, trial
    let mut rows: Vec<ErrorRow> = blocks.into_iter().flatten().collect();
    let integrand_pos = |i: IntegrandKind| cfg.integrands.iter().position(|&x| x == i).unwrap_or(usize::MAX);
    let generator_pos = |g: GeneratorKind| cfg.generators.iter().position(|&x| x == g).unwrap_or(usize::MAX);
    rows.sort_by_key(|r| (integrand_pos(r.integrand), generator_pos(r.generator), r.degree, r.trial));
    let mut summaries: Vec<CellSummary> = Vec::new();
    for chunk in rows.chunk_by(|a, b| a.integrand == b.integrand && a.generator == b.generator && a.degree == b.degree) {
        let r0 = &chunk[0];
        summaries.push(CellSummary {
            integrand: r0.integrand,
            generator: r0.generator,
            degree: r0.degree,
            ls: Aggregate::of(chunk.iter().filter_map(|r| r.err_ls)),
            interp: Aggregate::of(chunk.iter().filter_map(|r| r.err_interp)),
            qmc: Aggregate::of(chunk.iter().filter_map(|r| r.err_qmc)),
            legendre: Aggregate::of(chunk.iter().filter_map(|r| r.err_legendre)),
        });
    }
    Ok(ErrorTable { rows, summaries })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioConfig {
    pub domain: Domain,
    pub weight: WeightFunction,
    pub family: BasisFamily,
    pub degrees: Vec<usize>,
    pub generator: GeneratorSpec,
    /// Bisect inside the last doubling interval for the lowest positive `N`.
    pub refine: bool,
    pub build: BuildOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub degree: usize,
    pub k: usize,
    pub n: usize,
    pub refined: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    #[serde(rename = "C")]
    pub c: f64,
    pub s: f64,
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioResult {
    pub rows: Vec<RatioRow>,
    /// `None` when fewer than three usable pairs remain.
    pub fit: Option<FitResult>,
    /// Degrees whose build failed, with the error text.
    pub failures: Vec<(usize, String)>,
}

/// The lowest `N` found for which the LS rule is positive: the doubling
/// result, optionally refined by bisection between the last failing and
/// the first succeeding `N`.
pub fn lowest_positive_n(problem: &Problem, gen: &GeneratorSpec, opts: &BuildOptions, refine: bool) -> Result<(usize, bool)> {
    let (_, report) = build_positive_lscf(problem, gen, opts)?;
    let hi = report.final_n;
    if !refine || report.attempts.len() < 2 {
        return Ok((hi, false));
    }
    let mut lo = report.attempts[report.attempts.len() - 2].n;
    let mut hi = hi;
    let mut sampler = DomainSampler::new(gen, &problem.domain, &problem.weight)?;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let (_, rule) = try_ls_rule(problem, &mut sampler, mid, opts.rank_tol)?;
        if rule.is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi, true))
}

pub fn run_ratio_experiment(cfg: &RatioConfig) -> Result<RatioResult> {
    cfg.domain.validate()?;
    cfg.weight.check_compatible(&cfg.domain)?;
    if cfg.degrees.is_empty() {
        return Err(Error::InvalidParameter("degree range must be nonempty".into()));
    }
    let dim = cfg.domain.dim();
    let outcomes: Vec<(usize, Result<RatioRow>)> = cfg
        .degrees
        .par_iter()
        .map(|&degree| {
            let row = Problem::new(&BasisSpec::of_family(cfg.family, degree, dim), &cfg.domain, &cfg.weight).and_then(|p| {
                let (n, refined) = lowest_positive_n(&p, &cfg.generator, &cfg.build, cfg.refine)?;
                Ok(RatioRow { degree, k: p.k(), n, refined })
            });
            (degree, row)
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (degree, r) in outcomes {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((degree, e.to_string())),
        }
    }
    let pairs: Vec<(usize, usize)> = rows.iter().filter(|r| r.k >= 2).map(|r| (r.k, r.n)).collect();
    let fit = fit_power_law(&pairs).ok();
    Ok(RatioResult { rows, fit, failures })
}

/// Ordinary least squares for `log N = log C + s log K`.
pub fn fit_power_law(pairs: &[(usize, usize)]) -> Result<FitResult> {
    if pairs.len() < 3 {
        return Err(Error::TooFewPairs(pairs.len()));
    }
    if pairs.iter().any(|&(k, n)| k == 0 || n == 0) {
        return Err(Error::InvalidParameter("power-law fit needs positive K and N".into()));
    }
    let xs: Vec<f64> = pairs.iter().map(|&(k, _)| (k as f64).ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|&(_, n)| (n as f64).ln()).collect();
    let len = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / len;
    let my = ys.iter().sum::<f64>() / len;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("power-law fit needs at least two distinct K".into()));
    }
    let s = sxy / sxx;
    let c = (my - s * mx).exp();
    if !s.is_finite() || !c.is_finite() {
        return Err(Error::NonFinite(vec![c, s]));
    }
    Ok(FitResult { c, s, pairs: pairs.to_vec() })
}
