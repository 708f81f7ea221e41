//! Least-squares cubature formulas.
//!
//! Given data points `x_1..x_N`, discrete weights `r_n = |Ω| ω(x_n) / N` and
//! the basis matrix `Φ` (`K × N`), the LS weights are the unique minimizer of
//! `‖R^{-1/2} w‖_2` subject to `Φ w = m`. With `v = R^{-1/2} w` this is a
//! minimum-norm problem for `A = Φ R^{1/2}`, solved through a pivoted QR of
//! `A^T`. [`build_positive_lscf`] doubles `N` from `K` until `Φ` has full rank
//! and every weight is positive.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, WeightFunction};
use crate::linalg::PivotedQr;
use crate::points::{DomainSampler, GeneratorSpec, PointSet, PointSource};
use crate::spaces::{eval_basis_matrix, make_basis, moments, Basis, BasisSpec, MomentVector};

pub const DEFAULT_RANK_TOL: f64 = 1e-10;
pub const DEFAULT_EXACT_TOL: f64 = 1e-8;
pub const DEFAULT_N_MAX: usize = 1 << 20;

/// `r_n = |Ω| ω(x_n) / N`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteWeights(pub Vec<f64>);

impl DiscreteWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn discrete_weights(pts: &PointSet, weight: &WeightFunction, volume: f64) -> Result<DiscreteWeights> {
    let n = pts.len() as f64;
    pts.iter()
        .enumerate()
        .map(|(i, x)| {
            let w = weight.eval(x);
            if w > 0.0 && w.is_finite() {
                Ok(volume * w / n)
            } else {
                Err(Error::ZeroWeight(i))
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(DiscreteWeights)
}

/// A domain, weight and basis, with the moments computed once.
#[derive(Clone, Debug)]
pub struct Problem {
    pub domain: Domain,
    pub weight: WeightFunction,
    pub basis: Basis,
    pub moments: MomentVector,
}

impl Problem {
    pub fn new(spec: &BasisSpec, domain: &Domain, weight: &WeightFunction) -> Result<Self> {
        weight.check_compatible(domain)?;
        let basis = make_basis(spec, domain)?;
        let moments = moments(&basis, domain, weight)?;
        Ok(Problem { domain: domain.clone(), weight: weight.clone(), basis, moments })
    }

    pub fn k(&self) -> usize {
        self.basis.len()
    }

    pub fn basis_matrix(&self, pts: &PointSet) -> Result<DMatrix<f64>> {
        eval_basis_matrix(&self.basis, pts)
    }

    pub fn discrete_weights(&self, pts: &PointSet) -> Result<DiscreteWeights> {
        discrete_weights(pts, &self.weight, self.domain.volume())
    }

    /// `1 + ‖m‖_2`, the scale of the exactness tolerance.
    pub fn residual_scale(&self) -> f64 {
        1.0 + self.moments.norm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    LeastSquares,
    Interpolatory,
    Qmc,
    ProductLegendre,
}

/// `C_N[f] = Σ w_n f(x_n)`.
#[derive(Clone, Debug)]
pub struct CubatureRule {
    pub points: PointSet,
    pub weights: Vec<f64>,
    pub basis: Option<BasisSpec>,
    /// `‖Φ w - m‖_2` at construction, when a basis is attached.
    pub residual: Option<f64>,
    pub positive: bool,
    pub kind: RuleKind,
}

impl CubatureRule {
    pub fn new(points: PointSet, weights: Vec<f64>, basis: Option<BasisSpec>, residual: Option<f64>, kind: RuleKind) -> Self {
        let positive = !weights.is_empty() && weights.iter().all(|&w| w > 0.0);
        CubatureRule { points, weights, basis, residual, positive, kind }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// `‖Φ w - m‖_2`.
pub fn moment_residual(phi: &DMatrix<f64>, w: &[f64], m: &[f64]) -> f64 {
    let mut r = 0.0;
    for k in 0..phi.nrows() {
        let mut s = -m[k];
        for (n, wn) in w.iter().enumerate() {
            s += phi[(k, n)] * wn;
        }
        r += s * s;
    }
    r.sqrt()
}

/// Outcome of one factorization: the numerical rank and, when it is full,
/// the LS weights.
struct LsSolve {
    rank: usize,
    weights: Option<Vec<f64>>,
}

fn solve_ls(phi: &DMatrix<f64>, r: &DiscreteWeights, m: &[f64], rank_tol: f64) -> LsSolve {
    let (k, n) = phi.shape();
    assert_eq!(r.len(), n);
    let sqrt_r: Vec<f64> = r.0.iter().map(|v| v.sqrt()).collect();
    let a = DMatrix::from_fn(n, k, |i, j| phi[(j, i)] * sqrt_r[i]);
    let qr = PivotedQr::new(a);
    let rank = qr.rank(rank_tol);
    if rank < k {
        return LsSolve { rank, weights: None };
    }
    let v = qr.solve_transposed_min_norm(m);
    LsSolve { rank, weights: Some(v.iter().zip(&sqrt_r).map(|(vi, s)| vi * s).collect()) }
}

/// LS weights: the minimizer of `‖R^{-1/2} w‖_2` subject to `Φ w = m`.
pub fn ls_weights(phi: &DMatrix<f64>, r: &DiscreteWeights, m: &MomentVector) -> Result<Vec<f64>> {
    ls_weights_with_tol(phi, r, m, DEFAULT_RANK_TOL)
}

pub fn ls_weights_with_tol(phi: &DMatrix<f64>, r: &DiscreteWeights, m: &MomentVector, rank_tol: f64) -> Result<Vec<f64>> {
    let s = solve_ls(phi, r, &m.values, rank_tol);
    s.weights.ok_or(Error::RankDeficient { rank: s.rank, expected: phi.nrows() })
}

/// Numerical rank of `Φ`: pivoted-QR diagonal entries above `rel_tol` times the largest.
pub fn rank_of(phi: &DMatrix<f64>, rel_tol: f64) -> usize {
    PivotedQr::new(phi.transpose()).rank(rel_tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub n_max: usize,
    pub rank_tol: f64,
    pub exact_tol: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { n_max: DEFAULT_N_MAX, rank_tol: DEFAULT_RANK_TOL, exact_tol: DEFAULT_EXACT_TOL }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub n: usize,
    pub rank: usize,
    /// Present when the rank was full and weights were computed.
    pub min_weight: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Success,
    RankCap,
    PositivityCap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub attempts: Vec<Attempt>,
    pub final_n: usize,
    pub terminated: Termination,
}

/// Tries the LS rule on the first `n` points of `source`.
pub fn try_ls_rule(problem: &Problem, source: &mut dyn PointSource, n: usize, rank_tol: f64) -> Result<(Attempt, Option<CubatureRule>)> {
    let pts = source.prefix(n)?;
    let phi = problem.basis_matrix(&pts)?;
    let r = problem.discrete_weights(&pts)?;
    let s = solve_ls(&phi, &r, &problem.moments.values, rank_tol);
    let Some(w) = s.weights else {
        return Ok((Attempt { n, rank: s.rank, min_weight: None }, None));
    };
    let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
    let attempt = Attempt { n, rank: s.rank, min_weight: Some(min) };
    if min > 0.0 {
        let residual = moment_residual(&phi, &w, &problem.moments.values);
        let rule = CubatureRule::new(pts, w, Some(problem.basis.spec.clone()), Some(residual), RuleKind::LeastSquares);
        Ok((attempt, Some(rule)))
    } else {
        Ok((attempt, None))
    }
}

/// Positive LS rule for `problem`, doubling `N` from `K`.
pub fn build_positive_lscf(problem: &Problem, gen: &GeneratorSpec, opts: &BuildOptions) -> Result<(CubatureRule, BuildReport)> {
    let mut sampler = DomainSampler::new(gen, &problem.domain, &problem.weight)?;
    build_positive_lscf_from(problem, &mut sampler, opts)
}

/// As [`build_positive_lscf`], drawing points from any nested source.
pub fn build_positive_lscf_from(
    problem: &Problem,
    source: &mut dyn PointSource,
    opts: &BuildOptions,
) -> Result<(CubatureRule, BuildReport)> {
    let k = problem.k();
    if opts.n_max < k {
        return Err(Error::InvalidParameter(format!("n_max = {} is below K = {k}", opts.n_max)));
    }
    let mut attempts = Vec::new();
    let mut n = k;
    while n <= opts.n_max {
        let (attempt, rule) = try_ls_rule(problem, source, n, opts.rank_tol)?;
        attempts.push(attempt);
        if let Some(rule) = rule {
            let bound = opts.exact_tol * problem.residual_scale();
            let residual = rule.residual.unwrap_or(f64::INFINITY);
            if residual > bound {
                return Err(Error::ExactnessViolated { residual, bound });
            }
            let report = BuildReport { attempts, final_n: n, terminated: Termination::Success };
            return Ok((rule, report));
        }
        n *= 2;
    }
    let last_full_rank = attempts.last().is_some_and(|a| a.rank == k);
    let final_n = attempts.last().map_or(0, |a| a.n);
    if last_full_rank {
        let report = BuildReport { attempts, final_n, terminated: Termination::PositivityCap };
        Err(Error::PositivityNotReached { n_max: opts.n_max, report: Box::new(report) })
    } else {
        let report = BuildReport { attempts, final_n, terminated: Termination::RankCap };
        Err(Error::UnisolvencyNotReached { n_max: opts.n_max, report: Box::new(report) })
    }
}

/// `Σ w_n f(x_n)`.
pub fn apply_rule(rule: &CubatureRule, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
    let mut sum = 0.0;
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::NonFinite(x.to_vec()));
        }
        sum += w * v;
    }
    Ok(sum)
}

/// `‖Φ w - m‖_2` recomputed from the rule's points.
pub fn exactness_residual(rule: &CubatureRule, problem: &Problem) -> Result<f64> {
    let phi = problem.basis_matrix(&rule.points)?;
    Ok(moment_residual(&phi, &rule.weights, &problem.moments.values))
}

/// Discrete orthonormal basis by Gram–Schmidt (two passes of modified
/// Gram–Schmidt) on the rows of `Φ` in the inner product
/// `[f, g]_N = Σ r_n f(x_n) g(x_n)`.
///
/// Returns `(B, T)` with `B = T Φ`, `T` lower triangular and
/// `B diag(r) B^T = I`.
pub fn discrete_orthonormalize(phi: &DMatrix<f64>, r: &DiscreteWeights) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (k, n) = phi.shape();
    let rw = r.as_slice();
    let inner = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(rw).map(|((x, y), w)| w * x * y).sum() };
    let mut b_rows: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut t_rows: Vec<Vec<f64>> = Vec::with_capacity(k);
    for row in 0..k {
        let orig: Vec<f64> = (0..n).map(|j| phi[(row, j)]).collect();
        let orig_norm = inner(&orig, &orig).sqrt();
        let mut v = orig;
        let mut t = vec![0.0; k];
        t[row] = 1.0;
        for _pass in 0..2 {
            for l in 0..row {
                let c = inner(&v, &b_rows[l]);
                for (vi, bi) in v.iter_mut().zip(&b_rows[l]) {
                    *vi -= c * bi;
                }
                for (ti, tl) in t.iter_mut().zip(&t_rows[l]) {
                    *ti -= c * tl;
                }
            }
        }
        let norm = inner(&v, &v).sqrt();
        if !(norm > DEFAULT_RANK_TOL * orig_norm) {
            return Err(Error::RankDeficient { rank: row, expected: k });
        }
        v.iter_mut().for_each(|x| *x /= norm);
        t.iter_mut().for_each(|x| *x /= norm);
        b_rows.push(v);
        t_rows.push(t);
    }
    let b = DMatrix::from_fn(k, n, |i, j| b_rows[i][j]);
    let t = DMatrix::from_fn(k, k, |i, j| t_rows[i][j]);
    Ok((b, t))
}

/// `I[π_k(·; r)] = (T m)_k`.
pub fn pi_moments(t: &DMatrix<f64>, m: &MomentVector) -> Vec<f64> {
    (t * DMatrix::from_column_slice(m.values.len(), 1, &m.values)).as_slice().to_vec()
}

/// `w_n = r_n Σ_k π_k(x_n; r) I[π_k(·; r)]`.
pub fn explicit_ls_weights(b: &DMatrix<f64>, r: &DiscreteWeights, pi_moments: &[f64]) -> Vec<f64> {
    (0..b.ncols())
        .map(|n| r.0[n] * (0..b.nrows()).map(|k| b[(k, n)] * pi_moments[k]).sum::<f64>())
        .collect()
}

/// `I[f̂] = Σ_k [f, π_k]_N I[π_k]` for the discrete weighted LS approximant
/// `f̂` of the samples `f_n = f(x_n)`.
pub fn ls_approximant_integral(phi: &DMatrix<f64>, r: &DiscreteWeights, m: &MomentVector, samples: &[f64]) -> Result<f64> {
    let (b, t) = discrete_orthonormalize(phi, r)?;
    let mu = pi_moments(&t, m);
    Ok((0..b.nrows())
        .map(|k| {
            let coeff: f64 = (0..b.ncols()).map(|n| r.0[n] * samples[n] * b[(k, n)]).sum();
            coeff * mu[k]
        })
        .sum())
}

/// `max_n |w_n^LS - r_n|` for each `N` in `n_list`.
pub fn qmc_drift(problem: &Problem, gen: &GeneratorSpec, n_list: &[usize], rank_tol: f64) -> Result<Vec<f64>> {
    let mut sampler = DomainSampler::new(gen, &problem.domain, &problem.weight)?;
    n_list
        .iter()
        .map(|&n| {
            let pts = sampler.prefix(n)?;
            let phi = problem.basis_matrix(&pts)?;
            let r = problem.discrete_weights(&pts)?;
            let w = ls_weights_with_tol(&phi, &r, &problem.moments, rank_tol)?;
            Ok(w.iter().zip(&r.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        })
        .collect()
}
