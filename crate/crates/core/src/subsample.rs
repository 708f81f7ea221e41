//! Compression of a positive LS rule to a positive interpolatory rule
//! (`N ≤ K`), by Steinitz exchange or by nonnegative least squares.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::PivotedQr;
use crate::lscf::{moment_residual, CubatureRule, Problem, RuleKind, DEFAULT_EXACT_TOL};

pub const DEFAULT_ZERO_WEIGHT_TOL: f64 = 1e-13;
pub const DEFAULT_NNLS_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsampleKind {
    Steinitz,
    Nnls,
}

impl FromStr for SubsampleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "steinitz" => Ok(SubsampleKind::Steinitz),
            "nnls" => Ok(SubsampleKind::Nnls),
            other => Err(Error::UnknownMethod(other.to_string())),
        }
    }
}

impl fmt::Display for SubsampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubsampleKind::Steinitz => "steinitz",
            SubsampleKind::Nnls => "nnls",
        })
    }
}

/// Which columns a Steinitz pass draws its kernel vector from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelStrategy {
    /// The first `K + 1` active columns; `O(K^3)` per pass.
    Window,
    /// All active columns; `O(N K^2)` per pass.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsampleMethod {
    pub kind: SubsampleKind,
    /// Weights at or below this fraction of the largest weight are dropped.
    pub zero_weight_tol: f64,
    /// NNLS stops once the projected gradient is below this times `‖Φ^T m‖_∞`.
    pub nnls_residual_tol: f64,
    /// NNLS outer iterations; `None` means `10 K`.
    pub max_iterations: Option<usize>,
    pub kernel: KernelStrategy,
}

impl SubsampleMethod {
    pub fn steinitz() -> Self {
        Self::of_kind(SubsampleKind::Steinitz)
    }

    pub fn nnls() -> Self {
        Self::of_kind(SubsampleKind::Nnls)
    }

    pub fn of_kind(kind: SubsampleKind) -> Self {
        SubsampleMethod {
            kind,
            zero_weight_tol: DEFAULT_ZERO_WEIGHT_TOL,
            nnls_residual_tol: DEFAULT_NNLS_TOL,
            max_iterations: None,
            kernel: KernelStrategy::Window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zero_weight_tol > 0.0) || !(self.nnls_residual_tol > 0.0) || self.max_iterations == Some(0) {
            return Err(Error::InvalidParameter("subsampling tolerances must be positive".into()));
        }
        Ok(())
    }
}

impl FromStr for SubsampleMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(Self::of_kind(s.parse()?))
    }
}

/// A compressed rule with the bookkeeping of how it was obtained.
#[derive(Clone, Debug)]
pub struct Subsampled {
    pub rule: CubatureRule,
    pub method: SubsampleMethod,
    /// Steinitz passes or NNLS outer iterations.
    pub passes: usize,
    pub residual_before: f64,
    pub residual_after: f64,
    /// False only for NNLS runs that hit the iteration cap.
    pub converged: bool,
}

/// A unit vector `a` with `Φ a ≈ 0`, oriented so that its first
/// non-negligible entry is positive (hence `max a_n > 0`).
pub fn kernel_vector(phi: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (k, n) = phi.shape();
    if n <= k {
        return Err(Error::TrivialKernel { active: n, k });
    }
    let mut a = PivotedQr::new(phi.transpose()).last_q_column();
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let amax = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let lead = a.iter().find(|v| v.abs() > 1e-8 * amax).copied().unwrap_or(0.0);
    let sign = if lead < 0.0 { -1.0 } else { 1.0 };
    a.iter_mut().for_each(|v| *v *= sign / norm);
    if a.iter().cloned().fold(f64::NEG_INFINITY, f64::max) <= 0.0 {
        a.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(a)
}

fn columns(phi: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(phi.nrows(), idx.len(), |i, j| phi[(i, idx[j])])
}

fn check_input(rule: &CubatureRule, problem: &Problem) -> Result<(DMatrix<f64>, f64, f64)> {
    if rule.points.dim() != problem.domain.dim() {
        return Err(Error::DimensionMismatch { expected: problem.domain.dim(), got: rule.points.dim() });
    }
    let phi = problem.basis_matrix(&rule.points)?;
    let before = moment_residual(&phi, &rule.weights, &problem.moments.values);
    let bound = DEFAULT_EXACT_TOL * problem.residual_scale();
    Ok((phi, before, bound))
}

/// Steinitz exchange: repeatedly moves along a kernel direction until a
/// weight vanishes, then drops the vanished points, until `N ≤ K`.
pub fn steinitz_reduce(rule: &CubatureRule, problem: &Problem, method: &SubsampleMethod) -> Result<Subsampled> {
    method.validate()?;
    let (phi, before, bound) = check_input(rule, problem)?;
    if !rule.weights.iter().all(|&w| w > 0.0) {
        return Err(Error::InvalidParameter("Steinitz reduction needs strictly positive weights".into()));
    }
    if before > bound {
        return Err(Error::ExactnessViolated { residual: before, bound });
    }
    let k = problem.k();
    let n0 = rule.len();
    let mut w = rule.weights.clone();
    let mut active: Vec<usize> = (0..n0).collect();
    let mut passes = 0;
    while active.len() > k {
        passes += 1;
        assert!(passes <= n0, "Steinitz reduction failed to remove a point");
        let window: Vec<usize> = match method.kernel {
            KernelStrategy::Window => active[..k + 1].to_vec(),
            KernelStrategy::Full => active.clone(),
        };
        let a = kernel_vector(&columns(&phi, &window))?;
        let (mut sigma, mut arg) = (f64::NEG_INFINITY, 0);
        for (j, &i) in window.iter().enumerate() {
            let q = a[j] / w[i];
            if q > sigma {
                sigma = q;
                arg = j;
            }
        }
        debug_assert!(sigma > 0.0);
        let wmax = active.iter().map(|&i| w[i]).fold(0.0, f64::max);
        for (j, &i) in window.iter().enumerate() {
            w[i] -= a[j] / sigma;
        }
        w[window[arg]] = 0.0;
        let cut = method.zero_weight_tol * wmax;
        active.retain(|&i| w[i] > cut);
    }
    let weights: Vec<f64> = active.iter().map(|&i| w[i]).collect();
    let after = moment_residual(&columns(&phi, &active), &weights, &problem.moments.values);
    if after > bound {
        return Err(Error::ExactnessViolated { residual: after, bound });
    }
    let reduced = CubatureRule::new(rule.points.select(&active), weights, rule.basis.clone(), Some(after), RuleKind::Interpolatory);
    Ok(Subsampled { rule: reduced, method: method.clone(), passes, residual_before: before, residual_after: after, converged: true })
}

/// Result of [`nnls_weights`].
#[derive(Clone, Debug, PartialEq)]
pub struct NnlsSolution {
    pub weights: Vec<f64>,
    /// `‖Φ w - m‖_2`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Lawson–Hanson active-set solution of `min ‖Φ w - m‖_2` subject to `w ≥ 0`.
pub fn nnls_weights(phi: &DMatrix<f64>, m: &[f64], method: &SubsampleMethod) -> Result<NnlsSolution> {
    method.validate()?;
    let (k, n) = phi.shape();
    if m.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: m.len() });
    }
    let max_iter = method.max_iterations.unwrap_or(10 * k);
    let gradient = |w: &[f64]| -> Vec<f64> {
        let mut r = m.to_vec();
        for (j, &wj) in w.iter().enumerate() {
            if wj != 0.0 {
                for i in 0..k {
                    r[i] -= phi[(i, j)] * wj;
                }
            }
        }
        (0..n).map(|j| (0..k).map(|i| phi[(i, j)] * r[i]).sum()).collect()
    };
    let scale = gradient(&vec![0.0; n]).iter().fold(0.0f64, |a, g| a.max(g.abs()));
    let tol = method.nnls_residual_tol * scale;

    let mut w = vec![0.0; n];
    let mut passive: Vec<usize> = Vec::new();
    let mut blocked = vec![false; n];
    let mut iterations = 0;
    let mut converged = false;
    // unconstrained LS on the passive columns; None if they are dependent
    let solve = |passive: &[usize]| -> Option<Vec<f64>> {
        let qr = PivotedQr::new(columns(phi, passive));
        if qr.rank(1e-12) < passive.len() {
            return None;
        }
        Some(qr.solve_least_squares(m, passive.len()))
    };

    while iterations < max_iter {
        let g = gradient(&w);
        let mut t = None;
        let mut best = tol;
        for j in 0..n {
            if w[j] == 0.0 && !passive.contains(&j) && !blocked[j] && g[j] > best {
                best = g[j];
                t = Some(j);
            }
        }
        let Some(t) = t else {
            converged = true;
            break;
        };
        iterations += 1;
        passive.push(t);
        // a dependent or non-improving candidate is skipped until the passive set changes
        let mut z = match solve(&passive) {
            Some(z) if z[z.len() - 1] > 0.0 => z,
            _ => {
                passive.pop();
                blocked[t] = true;
                continue;
            }
        };
        blocked.iter_mut().for_each(|b| *b = false);
        // inner loop: step back towards feasibility until z > 0 on the passive set
        while z.iter().any(|&v| v <= 0.0) {
            let mut alpha = f64::INFINITY;
            for (p, &j) in passive.iter().enumerate() {
                if z[p] <= 0.0 {
                    alpha = alpha.min(w[j] / (w[j] - z[p]));
                }
            }
            for (p, &j) in passive.iter().enumerate() {
                w[j] += alpha * (z[p] - w[j]);
            }
            let keep: Vec<usize> = passive.iter().copied().filter(|&j| w[j] > 0.0).collect();
            for &j in &passive {
                if !keep.contains(&j) {
                    w[j] = 0.0;
                }
            }
            passive = keep;
            if passive.is_empty() {
                z = Vec::new();
                break;
            }
            z = solve(&passive).expect("a subset of independent columns stays independent");
        }
        for (p, &j) in passive.iter().enumerate() {
            w[j] = z[p];
        }
    }
    let residual = moment_residual(phi, &w, m);
    Ok(NnlsSolution { weights: w, residual, iterations, converged })
}

/// Dispatches to [`steinitz_reduce`] or to [`nnls_weights`] on the rule's
/// points, keeping the support.
pub fn subsample(rule: &CubatureRule, problem: &Problem, method: &SubsampleMethod) -> Result<Subsampled> {
    match method.kind {
        SubsampleKind::Steinitz => steinitz_reduce(rule, problem, method),
        SubsampleKind::Nnls => {
            let (phi, before, _) = check_input(rule, problem)?;
            let sol = nnls_weights(&phi, &problem.moments.values, method)?;
            let support: Vec<usize> = (0..sol.weights.len()).filter(|&j| sol.weights[j] > 0.0).collect();
            let weights: Vec<f64> = support.iter().map(|&j| sol.weights[j]).collect();
            let reduced = CubatureRule::new(
                rule.points.select(&support),
                weights,
                rule.basis.clone(),
                Some(sol.residual),
                RuleKind::Interpolatory,
            );
            Ok(Subsampled {
                rule: reduced,
                method: method.clone(),
                passes: sol.iterations,
                residual_before: before,
                residual_after: sol.residual,
                converged: sol.converged,
            })
        }
    }
}
