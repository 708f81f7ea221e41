//! Finite-dimensional function spaces `F_K(Ω)`: basis construction,
//! pointwise evaluation and moments `m_k = I[φ_k]`.
//!
//! Every basis starts with the constant function 1.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{gamma_half, Domain, WeightFunction};
use crate::points::{generate_in_domain, GeneratorSpec, PointSet};
use crate::quadrature::{reference_integrate_with_pole, reference_nodes, REFERENCE_LEVEL};

pub use crate::quadrature::reference_integrate;

/// Largest acceptable reference-quadrature error estimate, relative to `1 + |m_k|`.
pub const MOMENT_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "kebab-case")]
pub enum BasisSpec {
    /// Monomials `x^α` with `|α| <= degree`.
    Algebraic { degree: usize },
    /// `1`, and `cos`/`sin` of `2π α·x̃` for canonical `α` with `|α|_1 <= degree`.
    Trigonometric { degree: usize },
    /// `1` plus `‖x - c_j‖^3` for `centers` points drawn from `generator`.
    CubicPhs {
        centers: usize,
        #[serde(default = "GeneratorSpec::halton")]
        generator: GeneratorSpec,
    },
}

impl BasisSpec {
    /// The family's member indexed by `degree`. For PHS the center count is
    /// chosen so that `K` equals the algebraic dimension `binom(d+m, d)`.
    pub fn of_family(family: BasisFamily, degree: usize, dim: usize) -> Self {
        match family {
            BasisFamily::Algebraic => BasisSpec::Algebraic { degree },
            BasisFamily::Trigonometric => BasisSpec::Trigonometric { degree },
            BasisFamily::CubicPhs => BasisSpec::CubicPhs {
                centers: (binomial(dim + degree, dim) - 1).max(2),
                generator: GeneratorSpec::halton(),
            },
        }
    }

    pub fn family(&self) -> BasisFamily {
        match self {
            BasisSpec::Algebraic { .. } => BasisFamily::Algebraic,
            BasisSpec::Trigonometric { .. } => BasisFamily::Trigonometric,
            BasisSpec::CubicPhs { .. } => BasisFamily::CubicPhs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisFamily {
    Algebraic,
    Trigonometric,
    CubicPhs,
}

/// One basis function.
#[derive(Clone, Debug, PartialEq)]
pub enum BasisFunction {
    Constant,
    Monomial(Vec<u32>),
    Trig { freq: Vec<i64>, sine: bool },
    Cubic { center: Vec<f64> },
}

impl BasisFunction {
    pub fn descriptor(&self) -> String {
        let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(";");
        match self {
            BasisFunction::Constant => "1".into(),
            BasisFunction::Monomial(a) => format!("x^({})", join(&mut a.iter().map(u32::to_string))),
            BasisFunction::Trig { freq, sine } => format!(
                "{}({})",
                if *sine { "sin" } else { "cos" },
                join(&mut freq.iter().map(i64::to_string))
            ),
            BasisFunction::Cubic { center } => format!("phs({})", join(&mut center.iter().map(f64::to_string))),
        }
    }
}

/// A basis `φ_1 = 1, φ_2, ..., φ_K` on a fixed domain.
#[derive(Clone, Debug)]
pub struct Basis {
    pub spec: BasisSpec,
    dim: usize,
    functions: Vec<BasisFunction>,
    max_degree: usize,
    // affine map of the bounding box onto [0, 1]^d, for the trigonometric family
    lower: Vec<f64>,
    extent: Vec<f64>,
}

pub fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k.min(n));
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Multi-indices with `|α| = total`, first exponent descending.
fn compositions(dim: usize, total: usize) -> Vec<Vec<u32>> {
    if dim == 1 {
        return vec![vec![total as u32]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in compositions(dim - 1, total - first) {
            rest.insert(0, first as u32);
            out.push(rest);
        }
    }
    out
}

/// Integer vectors with `|α|_1 = total` whose first nonzero entry is positive.
fn canonical_frequencies(dim: usize, total: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for a in compositions(dim, total) {
        let nonzero: Vec<usize> = (0..dim).filter(|&i| a[i] != 0).collect();
        // the first nonzero entry keeps its sign; the others take both
        let free = nonzero.len().saturating_sub(1);
        for mask in 0..(1u64 << free) {
            let mut f: Vec<i64> = a.iter().map(|&v| v as i64).collect();
            for (bit, &i) in nonzero.iter().skip(1).enumerate() {
                if mask >> bit & 1 == 1 {
                    f[i] = -f[i];
                }
            }
            out.push(f);
        }
    }
    out
}

impl Basis {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn functions(&self) -> &[BasisFunction] {
        &self.functions
    }

    /// Writes `φ_k(x)` for all `k` into `out`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len());
        let mut powers: Vec<Vec<f64>> = Vec::new();
        if matches!(self.spec, BasisSpec::Algebraic { .. }) {
            powers = x
                .iter()
                .map(|&xi| {
                    let mut p = Vec::with_capacity(self.max_degree + 1);
                    let mut acc = 1.0;
                    for _ in 0..=self.max_degree {
                        p.push(acc);
                        acc *= xi;
                    }
                    p
                })
                .collect();
        }
        for (o, f) in out.iter_mut().zip(&self.functions) {
            *o = match f {
                BasisFunction::Constant => 1.0,
                BasisFunction::Monomial(a) => a.iter().zip(&powers).map(|(&k, p)| p[k as usize]).product(),
                BasisFunction::Trig { freq, sine } => {
                    let phase: f64 = freq
                        .iter()
                        .zip(x)
                        .zip(self.lower.iter().zip(&self.extent))
                        .map(|((&a, &xi), (lo, ext))| a as f64 * (xi - lo) / ext)
                        .sum::<f64>()
                        * 2.0
                        * PI;
                    if *sine {
                        phase.sin()
                    } else {
                        phase.cos()
                    }
                }
                BasisFunction::Cubic { center } => {
                    let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                    r2 * r2.sqrt()
                }
            };
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, &mut out);
        out
    }

    pub fn eval_one(&self, k: usize, x: &[f64]) -> f64 {
        // cheap enough for the uses outside the hot loops
        self.eval(x)[k]
    }
}

/// Builds the basis for `spec` on `domain`.
pub fn make_basis(spec: &BasisSpec, domain: &Domain) -> Result<Basis> {
    domain.validate()?;
    let dim = domain.dim();
    let (lower, upper) = domain.bounding_box();
    let extent: Vec<f64> = lower.iter().zip(&upper).map(|(a, b)| b - a).collect();
    let mut max_degree = 0;
    let functions = match spec {
        BasisSpec::Algebraic { degree } => {
            max_degree = *degree;
            (0..=*degree).flat_map(|t| compositions(dim, t)).map(BasisFunction::Monomial).collect()
        }
        BasisSpec::Trigonometric { degree } => {
            let mut fs = vec![BasisFunction::Constant];
            for t in 1..=*degree {
                for freq in canonical_frequencies(dim, t) {
                    fs.push(BasisFunction::Trig { freq: freq.clone(), sine: false });
                    fs.push(BasisFunction::Trig { freq, sine: true });
                }
            }
            fs
        }
        BasisSpec::CubicPhs { centers, generator } => {
            if *centers < 2 {
                return Err(Error::InvalidParameter(format!("PHS basis needs at least 2 centers, got {centers}")));
            }
            let pts = generate_in_domain(generator, domain, &WeightFunction::One, *centers)?;
            let mut keys: Vec<Vec<u64>> = pts.iter().map(|p| p.iter().map(|v| v.to_bits()).collect()).collect();
            keys.sort_unstable();
            keys.dedup();
            if keys.len() != *centers {
                return Err(Error::DuplicateCenters);
            }
            std::iter::once(BasisFunction::Constant)
                .chain(pts.iter().map(|c| BasisFunction::Cubic { center: c.to_vec() }))
                .collect()
        }
    };
    Ok(Basis { spec: spec.clone(), dim, functions, max_degree, lower, extent })
}

/// `Φ[k][n] = φ_k(x_n)`, a `K × N` matrix.
pub fn eval_basis_matrix(basis: &Basis, pts: &PointSet) -> Result<DMatrix<f64>> {
    if pts.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: pts.dim() });
    }
    let k = basis.len();
    let mut phi = DMatrix::zeros(k, pts.len());
    phi.as_mut_slice()
        .par_chunks_mut(k)
        .zip(pts.coords().par_chunks(pts.dim()))
        .for_each(|(col, x)| basis.eval_into(x, col));
    Ok(phi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMethod {
    ClosedForm,
    ReferenceQuadrature,
}

/// `m_k = I[φ_k]` for `k = 1..K`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentVector {
    pub values: Vec<f64>,
    pub method: MomentMethod,
    /// Per-moment error estimates, present for reference quadrature.
    pub error_estimates: Option<Vec<f64>>,
}

impl MomentVector {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn error_estimate(&self) -> Option<f64> {
        self.error_estimates.as_ref().map(|e| e.iter().cloned().fold(0.0, f64::max))
    }
}

/// `∫_{-1}^{1} x^k (1 - x^2)^{1/2} dx`.
fn chebyshev_moment_1d(k: u32) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let mut v = PI / 2.0;
    for j in 1..=k / 2 {
        let j = j as f64;
        v *= (2.0 * j - 1.0) / (2.0 * j + 2.0);
    }
    v
}

/// `∫_{S^{d-1}} θ^β dσ`: zero unless every `β_i` is even.
fn sphere_monomial(beta: &[u32]) -> f64 {
    if beta.iter().any(|b| b % 2 == 1) {
        return 0.0;
    }
    let num: f64 = beta.iter().map(|&b| gamma_half(b as usize + 1)).product();
    let total: usize = beta.iter().map(|&b| b as usize + 1).sum();
    2.0 * num / gamma_half(total)
}

/// `∫_{‖y‖<=r} y^β ‖y‖^p dy` for a ball centered at the origin.
fn centered_ball_monomial(beta: &[u32], radius: f64, p: f64) -> f64 {
    let s = sphere_monomial(beta);
    if s == 0.0 {
        return 0.0;
    }
    let e = beta.iter().sum::<u32>() as f64 + beta.len() as f64 + p;
    s * radius.powf(e) / e
}

/// `∫_{B(c, r)} x^α dx` via the binomial expansion of `(c + y)^α`.
fn shifted_ball_monomial(alpha: &[u32], center: &[f64], radius: f64) -> f64 {
    let d = alpha.len();
    let mut beta = vec![0u32; d];
    let mut total = 0.0;
    'outer: loop {
        let coeff: f64 = (0..d)
            .map(|i| binomial(alpha[i] as usize, beta[i] as usize) as f64 * center[i].powi((alpha[i] - beta[i]) as i32))
            .product();
        if coeff != 0.0 {
            total += coeff * centered_ball_monomial(&beta, radius, 0.0);
        }
        for i in 0..d {
            if beta[i] < alpha[i] {
                beta[i] += 1;
                continue 'outer;
            }
            beta[i] = 0;
        }
        break;
    }
    total
}

/// `∫_{box} exp(2πi α·x̃) dx` with `x̃` the basis' bounding-box coordinates.
fn box_fourier(freq: &[i64], lower: &[f64], upper: &[f64], basis: &Basis) -> (f64, f64) {
    let (mut re, mut im) = (1.0, 0.0);
    for i in 0..freq.len() {
        let t0 = (lower[i] - basis.lower[i]) / basis.extent[i];
        let t1 = (upper[i] - basis.lower[i]) / basis.extent[i];
        let (fr, fi) = if freq[i] == 0 {
            (t1 - t0, 0.0)
        } else {
            let w = 2.0 * PI * freq[i] as f64;
            ((w * t1).sin() / w - (w * t0).sin() / w, -(w * t1).cos() / w + (w * t0).cos() / w)
        };
        let jac = basis.extent[i];
        let (a, b) = (re * fr - im * fi, re * fi + im * fr);
        re = a * jac;
        im = b * jac;
    }
    (re, im)
}

fn closed_form(f: &BasisFunction, domain: &Domain, weight: &WeightFunction, basis: &Basis) -> Option<f64> {
    match (domain, weight, f) {
        (_, _, BasisFunction::Cubic { .. }) => None,
        (Domain::Box { .. } | Domain::Ball { .. }, WeightFunction::One, BasisFunction::Constant) => Some(domain.volume()),
        (Domain::Box { lower, upper }, WeightFunction::One, BasisFunction::Monomial(a)) => Some(
            a.iter()
                .zip(lower.iter().zip(upper))
                .map(|(&k, (lo, hi))| {
                    let e = k as i32 + 1;
                    (hi.powi(e) - lo.powi(e)) / e as f64
                })
                .product(),
        ),
        (Domain::Box { lower, upper }, WeightFunction::Chebyshev, BasisFunction::Monomial(a))
            if lower.iter().all(|&v| v == -1.0) && upper.iter().all(|&v| v == 1.0) =>
        {
            Some(a.iter().map(|&k| chebyshev_moment_1d(k)).product())
        }
        (Domain::Box { lower, upper }, WeightFunction::One, BasisFunction::Trig { freq, sine }) => {
            let (re, im) = box_fourier(freq, lower, upper, basis);
            Some(if *sine { im } else { re })
        }
        (Domain::Ball { center, radius }, WeightFunction::One, BasisFunction::Monomial(a)) => {
            Some(shifted_ball_monomial(a, center, *radius))
        }
        (Domain::Ball { center, radius }, WeightFunction::Radial { exponent }, BasisFunction::Monomial(a))
            if center.iter().all(|&c| c == 0.0) =>
        {
            Some(centered_ball_monomial(a, *radius, *exponent))
        }
        (Domain::Ball { center, radius }, WeightFunction::Radial { exponent }, BasisFunction::Constant)
            if center.iter().all(|&c| c == 0.0) =>
        {
            Some(centered_ball_monomial(&vec![0; center.len()], *radius, *exponent))
        }
        _ => None,
    }
}

/// Moments on a single box or ball: closed form where available, reference
/// quadrature for the rest.
fn member_moments(basis: &Basis, domain: &Domain, weight: &WeightFunction) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let k = basis.len();
    let mut values = vec![0.0; k];
    let mut estimates: Option<Vec<f64>> = None;
    let mut pending: Vec<usize> = Vec::new();
    for (i, f) in basis.functions().iter().enumerate() {
        match closed_form(f, domain, weight, basis) {
            Some(v) => values[i] = v,
            None => pending.push(i),
        }
    }
    if pending.is_empty() {
        return Ok((values, None));
    }
    let est = estimates.get_or_insert_with(|| vec![0.0; k]);
    let (smooth, cubic): (Vec<usize>, Vec<usize>) =
        pending.into_iter().partition(|&i| !matches!(basis.functions()[i], BasisFunction::Cubic { .. }));
    if !smooth.is_empty() {
        let fine = reference_nodes(domain, weight, REFERENCE_LEVEL, None)?;
        let coarse = reference_nodes(domain, weight, REFERENCE_LEVEL - 8, None)?;
        let mut buf = vec![0.0; k];
        let mut acc = |nodes: &crate::quadrature::NodeSet| -> Result<Vec<f64>> {
            let mut sums = vec![0.0; smooth.len()];
            for (x, w) in nodes.iter() {
                basis.eval_into(x, &mut buf);
                for (s, &i) in sums.iter_mut().zip(&smooth) {
                    if !buf[i].is_finite() {
                        return Err(Error::NonFinite(x.to_vec()));
                    }
                    *s += w * buf[i];
                }
            }
            Ok(sums)
        };
        let f = acc(&fine)?;
        let c = acc(&coarse)?;
        for (j, &i) in smooth.iter().enumerate() {
            values[i] = f[j];
            est[i] = (f[j] - c[j]).abs();
        }
    }
    for i in cubic {
        let BasisFunction::Cubic { center } = &basis.functions()[i] else { unreachable!() };
        let (v, e) = reference_integrate_with_pole(
            |x| {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                r2 * r2.sqrt()
            },
            domain,
            weight,
            REFERENCE_LEVEL,
            Some(center),
        )?;
        values[i] = v;
        est[i] = e;
    }
    Ok((values, estimates))
}

/// Moments of `basis` on `domain` with weight `weight`.
pub fn moments(basis: &Basis, domain: &Domain, weight: &WeightFunction) -> Result<MomentVector> {
    weight.check_compatible(domain)?;
    let members: Vec<&Domain> = match domain {
        Domain::Union { members } => members.iter().collect(),
        other => vec![other],
    };
    let k = basis.len();
    let mut values = vec![0.0; k];
    let mut estimates: Option<Vec<f64>> = None;
    for m in members {
        if let Domain::Union { .. } = m {
            return Err(Error::Unsupported("nested unions".into()));
        }
        let (v, e) = member_moments(basis, m, weight)?;
        for i in 0..k {
            values[i] += v[i];
        }
        if let Some(e) = e {
            let acc = estimates.get_or_insert_with(|| vec![0.0; k]);
            for i in 0..k {
                acc[i] += e[i];
            }
        }
    }
    if let Some(est) = &estimates {
        for (v, e) in values.iter().zip(est) {
            let tol = MOMENT_TOLERANCE * (1.0 + v.abs());
            if *e > tol {
                return Err(Error::QuadratureNotConverged { estimate: *e, tolerance: tol });
            }
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(vec![]));
    }
    if values[0] <= 0.0 {
        return Err(Error::InvalidParameter(format!("I[1] = {} is not positive", values[0])));
    }
    Ok(MomentVector {
        method: if estimates.is_some() { MomentMethod::ReferenceQuadrature } else { MomentMethod::ClosedForm },
        values,
        error_estimates: estimates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::PointSet;

    fn descriptors(b: &Basis) -> Vec<String> {
        b.functions().iter().map(BasisFunction::descriptor).collect()
    }

    #[test]
    fn algebraic_ordering() {
        let b = make_basis(&BasisSpec::Algebraic { degree: 2 }, &Domain::cube(2, -1.0, 1.0).unwrap()).unwrap();
        assert_eq!(b.len(), 6);
        assert_eq!(
            descriptors(&b),
            ["x^(0;0)", "x^(1;0)", "x^(0;1)", "x^(2;0)", "x^(1;1)", "x^(0;2)"]
        );
        let b0 = make_basis(&BasisSpec::Algebraic { degree: 0 }, &Domain::unit_ball(3).unwrap()).unwrap();
        assert_eq!(b0.len(), 1);
    }

    #[test]
    fn algebraic_dimension_formula() {
        for d in 1..=3 {
            let dom = Domain::cube(d, -1.0, 1.0).unwrap();
            for m in 0..=14 {
                let b = make_basis(&BasisSpec::Algebraic { degree: m }, &dom).unwrap();
                assert_eq!(b.len(), binomial(d + m, d), "d={d} m={m}");
            }
        }
    }

    #[test]
    fn trig_basis_small() {
        let b = make_basis(&BasisSpec::Trigonometric { degree: 1 }, &Domain::cube(2, -1.0, 1.0).unwrap()).unwrap();
        assert_eq!(descriptors(&b), ["1", "cos(1;0)", "sin(1;0)", "cos(0;1)", "sin(0;1)"]);
        let b2 = make_basis(&BasisSpec::Trigonometric { degree: 2 }, &Domain::cube(2, -1.0, 1.0).unwrap()).unwrap();
        // canonical α with |α|_1 = 2: (2,0), (1,1), (1,-1), (0,2)
        assert_eq!(b2.len(), 5 + 2 * 4);
    }

    #[test]
    fn trig_bounded_and_constant_first() {
        let dom = Domain::disk_and_square();
        let b = make_basis(&BasisSpec::Trigonometric { degree: 3 }, &dom).unwrap();
        let pts = generate_in_domain(&GeneratorSpec::halton(), &dom, &WeightFunction::One, 200).unwrap();
        let phi = eval_basis_matrix(&b, &pts).unwrap();
        for n in 0..pts.len() {
            assert_eq!(phi[(0, n)], 1.0);
            for k in 1..b.len() {
                assert!(phi[(k, n)].abs() <= 1.0);
            }
        }
    }

    #[test]
    fn basis_matrix_examples() {
        let dom = Domain::cube(1, -1.0, 1.0).unwrap();
        let pts = PointSet::from_points(1, &[vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
        let c = make_basis(&BasisSpec::Algebraic { degree: 0 }, &dom).unwrap();
        assert_eq!(eval_basis_matrix(&c, &pts).unwrap().as_slice(), &[1.0, 1.0, 1.0]);
        let b = make_basis(&BasisSpec::Algebraic { degree: 1 }, &dom).unwrap();
        let phi = eval_basis_matrix(&b, &pts).unwrap();
        assert_eq!(phi, DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 1.0, -1.0, 0.0, 1.0]));
        let phs = Basis {
            spec: BasisSpec::CubicPhs { centers: 1, generator: GeneratorSpec::halton() },
            dim: 1,
            functions: vec![BasisFunction::Constant, BasisFunction::Cubic { center: vec![0.0] }],
            max_degree: 0,
            lower: vec![-1.0],
            extent: vec![2.0],
        };
        assert_eq!(phs.eval(&[2.0]), vec![1.0, 8.0]);
    }

    #[test]
    fn phs_basis_uses_domain_points() {
        let dom = Domain::cube(2, -1.0, 1.0).unwrap();
        let spec = BasisSpec::CubicPhs { centers: 5, generator: GeneratorSpec::halton() };
        let b = make_basis(&spec, &dom).unwrap();
        assert_eq!(b.len(), 6);
        let BasisFunction::Cubic { center } = &b.functions()[1] else { panic!() };
        assert_eq!(center[0], 0.0);
        assert!((center[1] + 1.0 / 3.0).abs() < 1e-15);
        assert!(make_basis(&BasisSpec::CubicPhs { centers: 1, generator: GeneratorSpec::halton() }, &dom).is_err());
    }

    #[test]
    fn moment_examples() {
        let sq = Domain::cube(2, -1.0, 1.0).unwrap();
        let b = make_basis(&BasisSpec::Algebraic { degree: 2 }, &sq).unwrap();
        let m = moments(&b, &sq, &WeightFunction::One).unwrap();
        assert_eq!(m.method, MomentMethod::ClosedForm);
        assert!((m.values[3] - 4.0 / 3.0).abs() < 1e-15);

        let disk = Domain::unit_ball(2).unwrap();
        let b0 = make_basis(&BasisSpec::Algebraic { degree: 0 }, &disk).unwrap();
        assert!((moments(&b0, &disk, &WeightFunction::One).unwrap().values[0] - PI).abs() < 1e-15);
        let m = moments(&b0, &disk, &WeightFunction::Radial { exponent: 0.5 }).unwrap();
        assert!((m.values[0] - 4.0 * PI / 5.0).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_match_independent_values() {
        // mpmath values
        let sq = Domain::cube(2, -1.0, 1.0).unwrap();
        let b = make_basis(&BasisSpec::Algebraic { degree: 6 }, &sq).unwrap();
        let m = moments(&b, &sq, &WeightFunction::Chebyshev).unwrap();
        let idx = b.functions().iter().position(|f| *f == BasisFunction::Monomial(vec![2, 4])).unwrap();
        assert!((m.values[idx] - 0.077_106_284_383_510_61).abs() < 1e-16);

        let disk = Domain::unit_ball(2).unwrap();
        let b = make_basis(&BasisSpec::Algebraic { degree: 4 }, &disk).unwrap();
        let m = moments(&b, &disk, &WeightFunction::Radial { exponent: 0.5 }).unwrap();
        let idx = b.functions().iter().position(|f| *f == BasisFunction::Monomial(vec![2, 2])).unwrap();
        assert!((m.values[idx] - 0.120_830_486_676_530_5).abs() < 1e-15);

        let off = Domain::new_ball(vec![0.5, 0.25], 0.75).unwrap();
        let b = make_basis(&BasisSpec::Algebraic { degree: 4 }, &off).unwrap();
        let m = moments(&b, &off, &WeightFunction::One).unwrap();
        let idx = b.functions().iter().position(|f| *f == BasisFunction::Monomial(vec![3, 1])).unwrap();
        assert!((m.values[idx] - 0.148_412_641_227_935_8).abs() < 1e-15);
    }

    /// Every closed-form case agrees with reference quadrature at level 60.
    #[test]
    fn closed_form_vs_reference_quadrature() {
        let cases: Vec<(Domain, WeightFunction, BasisSpec)> = vec![
            (Domain::cube(2, -1.0, 1.0).unwrap(), WeightFunction::One, BasisSpec::Algebraic { degree: 8 }),
            (Domain::cube(3, -1.0, 1.0).unwrap(), WeightFunction::One, BasisSpec::Algebraic { degree: 5 }),
            (Domain::cube(2, 0.0, 1.0).unwrap(), WeightFunction::One, BasisSpec::Algebraic { degree: 6 }),
            (Domain::cube(2, -1.0, 1.0).unwrap(), WeightFunction::Chebyshev, BasisSpec::Algebraic { degree: 8 }),
            (Domain::cube(3, -1.0, 1.0).unwrap(), WeightFunction::Chebyshev, BasisSpec::Algebraic { degree: 4 }),
            (Domain::unit_ball(2).unwrap(), WeightFunction::One, BasisSpec::Algebraic { degree: 8 }),
            (Domain::unit_ball(2).unwrap(), WeightFunction::Radial { exponent: 0.5 }, BasisSpec::Algebraic { degree: 8 }),
            (Domain::unit_ball(3).unwrap(), WeightFunction::One, BasisSpec::Algebraic { degree: 4 }),
            (Domain::new_ball(vec![0.5, 0.25], 0.75).unwrap(), WeightFunction::One, BasisSpec::Algebraic { degree: 6 }),
            (Domain::disk_and_square(), WeightFunction::One, BasisSpec::Algebraic { degree: 8 }),
            (Domain::cube(2, -1.0, 1.0).unwrap(), WeightFunction::One, BasisSpec::Trigonometric { degree: 4 }),
            (Domain::disk_and_square(), WeightFunction::One, BasisSpec::Trigonometric { degree: 2 }),
        ];
        for (dom, w, spec) in cases {
            let b = make_basis(&spec, &dom).unwrap();
            let closed = moments(&b, &dom, &w).unwrap();
            let nodes = reference_nodes(&dom, &w, REFERENCE_LEVEL, None).unwrap();
            for k in 0..b.len() {
                let q = nodes.integrate(|x| b.eval_one(k, x)).unwrap();
                let scale = closed.values[k].abs().max(1.0);
                assert!(
                    (q - closed.values[k]).abs() <= 1e-12 * scale,
                    "{dom:?} {w:?} {}: {q} vs {}",
                    b.functions()[k].descriptor(),
                    closed.values[k]
                );
            }
        }
    }

    #[test]
    fn phs_moments_by_reference_quadrature() {
        let sq = Domain::cube(2, -1.0, 1.0).unwrap();
        let b = make_basis(&BasisSpec::CubicPhs { centers: 6, generator: GeneratorSpec::halton() }, &sq).unwrap();
        let m = moments(&b, &sq, &WeightFunction::One).unwrap();
        assert_eq!(m.method, MomentMethod::ReferenceQuadrature);
        assert!(m.error_estimate().unwrap() <= 1e-12);
        assert_eq!(m.values[0], 4.0);
        // ∫_{[-1,1]^2} ‖x‖^3 about the corner-free center (0, -1/3), cross-checked on a refined split
        let (v, _) = reference_integrate_with_pole(
            |x| (x[0] * x[0] + (x[1] + 1.0 / 3.0).powi(2)).powf(1.5),
            &sq,
            &WeightFunction::One,
            120,
            Some(&[0.0, -1.0 / 3.0]),
        )
        .unwrap();
        assert!((m.values[1] - v).abs() < 1e-12);
    }
}
