//! Baseline rules: (Q)MC with the discrete weights, and tensor Gauss–Legendre.

use crate::error::{Error, Result};
use crate::geometry::{Domain, WeightFunction};
use crate::lscf::{discrete_weights, CubatureRule, RuleKind};
use crate::points::{PointSet, Provenance};
use crate::quadrature::gauss_legendre_interval;

/// `w_n = |Ω| ω(x_n) / N`.
pub fn qmc_rule(pts: &PointSet, domain: &Domain, weight: &WeightFunction) -> Result<CubatureRule> {
    let r = discrete_weights(pts, weight, domain.volume())?;
    Ok(CubatureRule::new(pts.clone(), r.0, None, None, RuleKind::Qmc))
}

/// Tensor product of the `n`-point Gauss–Legendre rule on a box; `N = n^d`.
/// The weights carry no `ω`; apply the rule to `f ω`.
pub fn product_legendre_rule(n: usize, domain: &Domain) -> Result<CubatureRule> {
    let Domain::Box { lower, upper } = domain else {
        return Err(Error::Unsupported("product Gauss-Legendre rule needs a box domain".into()));
    };
    if n == 0 {
        return Err(Error::InvalidParameter("product rule needs at least one node per axis".into()));
    }
    let d = lower.len();
    let axes: Vec<(Vec<f64>, Vec<f64>)> = lower.iter().zip(upper).map(|(&a, &b)| gauss_legendre_interval(n, a, b)).collect();
    let total = n.pow(d as u32);
    let mut coords = Vec::with_capacity(total * d);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let mut w = 1.0;
        for (axis, &i) in axes.iter().zip(&idx) {
            coords.push(axis.0[i]);
            w *= axis.1[i];
        }
        weights.push(w);
        // last axis fastest
        for j in (0..d).rev() {
            idx[j] += 1;
            if idx[j] < n {
                break;
            }
            idx[j] = 0;
        }
    }
    let pts = PointSet::new(d, coords, Provenance::default())?;
    Ok(CubatureRule::new(pts, weights, None, None, RuleKind::ProductLegendre))
}

/// Smallest `n` with `n^d ≥ target`.
pub fn legendre_nodes_per_axis(target: usize, dim: usize) -> usize {
    let mut n = ((target.max(1) as f64).powf(1.0 / dim as f64).floor() as usize).max(1);
    while n.pow(dim as u32) < target {
        n += 1;
    }
    while n > 1 && (n - 1).pow(dim as u32) >= target {
        n -= 1;
    }
    n
}

/// The product rule on the bounding box, applied to `f ω 1_Ω`.
pub fn legendre_estimate(n: usize, domain: &Domain, weight: &WeightFunction, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
    let (lower, upper) = domain.bounding_box();
    let rule = product_legendre_rule(n, &Domain::new_box(lower, upper)?)?;
    let mut sum = 0.0;
    for (x, w) in rule.points.iter().zip(&rule.weights) {
        if domain.contains_unchecked(x) {
            let om = weight.eval(x);
            if om > 0.0 {
                sum += w * f(x) * om;
            }
        }
    }
    Ok(sum)
}
