//! Classical quadrature used as ground truth: one-dimensional Gauss–Legendre
//! rules and the tensor/polar reference rules built from them.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{Domain, WeightFunction};

/// Nodes per axis used for reference integrals unless told otherwise.
pub const REFERENCE_LEVEL: usize = 60;

/// Difference in node count between the two levels compared for the error estimate.
const LEVEL_GAP: usize = 8;

/// `n`-point Gauss–Legendre rule on `[-1, 1]`, nodes ascending.
///
/// Nodes are the roots of `P_n`, found by Newton iteration from Chebyshev-like
/// initial guesses; weights are `2 / ((1 - x^2) P_n'(x)^2)`.
pub fn gauss_legendre_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x runs from the right end towards the middle
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_interval(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre_1d(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (x.iter().map(|t| mid + half * t).collect(), w.iter().map(|wi| wi * half).collect())
}

/// A flat list of nodes with weights that already include `ω`.
#[derive(Clone, Debug, Default)]
pub struct NodeSet {
    pub dim: usize,
    pub coords: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NodeSet {
    fn push(&mut self, x: &[f64], w: f64) {
        self.coords.extend_from_slice(x);
        self.weights.push(w);
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.coords.chunks_exact(self.dim).zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
        let mut sum = 0.0;
        for (x, w) in self.iter() {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::NonFinite(x.to_vec()));
            }
            sum += w * v;
        }
        Ok(sum)
    }
}

fn strictly_inside(domain: &Domain, p: &[f64]) -> bool {
    match domain {
        Domain::Box { lower, upper } => {
            p.iter().zip(lower.iter().zip(upper)).all(|(x, (a, b))| a < x && x < b)
        }
        Domain::Ball { center, radius } => {
            let r2: f64 = p.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
            r2 < radius * radius
        }
        Domain::Union { .. } => false,
    }
}

/// One axis of a box rule: Gauss–Legendre on each piece between breakpoints.
/// For the Chebyshev weight the substitution `x = cos θ` removes the
/// endpoint singularities of `(1 - x^2)^{1/2}`.
fn axis_rule(level: usize, a: f64, b: f64, cut: Option<f64>, chebyshev: bool) -> (Vec<f64>, Vec<f64>) {
    let mut pieces = vec![a];
    if let Some(c) = cut {
        if a < c && c < b {
            pieces.push(c);
        }
    }
    pieces.push(b);
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for seg in pieces.windows(2) {
        if chebyshev {
            let (t0, t1) = (seg[1].clamp(-1.0, 1.0).acos(), seg[0].clamp(-1.0, 1.0).acos());
            let (th, wt) = gauss_legendre_interval(level, t0, t1);
            for (t, w) in th.into_iter().zip(wt) {
                xs.push(t.cos());
                ws.push(w * t.sin());
            }
        } else {
            let (x, w) = gauss_legendre_interval(level, seg[0], seg[1]);
            xs.extend(x);
            ws.extend(w);
        }
    }
    (xs, ws)
}

fn box_nodes(lower: &[f64], upper: &[f64], weight: &WeightFunction, level: usize, pole: Option<&[f64]>, out: &mut NodeSet) {
    let d = lower.len();
    let chebyshev = matches!(weight, WeightFunction::Chebyshev);
    let axes: Vec<_> = (0..d)
        .map(|i| axis_rule(level, lower[i], upper[i], pole.map(|p| p[i]), chebyshev))
        .collect();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    'outer: loop {
        let mut w = 1.0;
        for i in 0..d {
            x[i] = axes[i].0[idx[i]];
            w *= axes[i].1[idx[i]];
        }
        out.push(&x, w * weight.eval(&x));
        for i in (0..d).rev() {
            idx[i] += 1;
            if idx[i] < axes[i].0.len() {
                continue 'outer;
            }
            idx[i] = 0;
        }
        break;
    }
}

/// Polar (d=2) or spherical (d=3) rule about `pole`, which must lie inside
/// the ball. The radial variable is substituted as `ρ = s^2`, which keeps
/// integrands such as `ρ^{1/2}` or `ρ^3` smooth in `s`.
fn ball_nodes(center: &[f64], radius: f64, pole: &[f64], weight: &WeightFunction, level: usize, out: &mut NodeSet) -> Result<()> {
    let d = center.len();
    let offset: Vec<f64> = pole.iter().zip(center).map(|(p, c)| p - c).collect();
    let off2: f64 = offset.iter().map(|v| v * v).sum();
    let mut directions: Vec<(Vec<f64>, f64)> = Vec::new();
    match d {
        2 => {
            let m = 2 * level;
            let h = 2.0 * PI / m as f64;
            for j in 0..m {
                let th = h * j as f64;
                directions.push((vec![th.cos(), th.sin()], h));
            }
        }
        3 => {
            let (ts, wts) = gauss_legendre_1d(level);
            let m = 2 * level;
            let h = 2.0 * PI / m as f64;
            for (t, wt) in ts.iter().zip(&wts) {
                let st = (1.0 - t * t).sqrt();
                for j in 0..m {
                    let ph = h * j as f64;
                    directions.push((vec![st * ph.cos(), st * ph.sin(), *t], wt * h));
                }
            }
        }
        _ => return Err(Error::Unsupported(format!("reference quadrature on balls in {d} dimensions"))),
    }
    let (s_nodes, s_weights) = gauss_legendre_1d(level);
    let mut x = vec![0.0; d];
    for (u, wu) in directions {
        let b: f64 = u.iter().zip(&offset).map(|(ui, oi)| ui * oi).sum();
        let disc = b * b - (off2 - radius * radius);
        let rho_max = (-b + disc.max(0.0).sqrt()).max(0.0);
        if rho_max == 0.0 {
            continue;
        }
        let s_max = rho_max.sqrt();
        for (t, wt) in s_nodes.iter().zip(&s_weights) {
            let s = 0.5 * s_max * (t + 1.0);
            let ws = 0.5 * s_max * wt;
            let rho = s * s;
            for i in 0..d {
                x[i] = pole[i] + rho * u[i];
            }
            // dρ = 2s ds, area element ρ^{d-1}
            let jac = 2.0 * s * rho.powi(d as i32 - 1);
            out.push(&x, wu * ws * jac * weight.eval(&x));
        }
    }
    Ok(())
}

/// Reference rule with `level` nodes per axis. `pole` marks a point where
/// the integrand is not smooth; boxes are split there and balls use polar
/// coordinates about it. For the radial weight the origin is used as the
/// pole when none is given.
pub fn reference_nodes(domain: &Domain, weight: &WeightFunction, level: usize, pole: Option<&[f64]>) -> Result<NodeSet> {
    if level == 0 {
        return Err(Error::InvalidParameter("quadrature level must be positive".into()));
    }
    let mut out = NodeSet { dim: domain.dim(), ..Default::default() };
    collect_nodes(domain, weight, level, pole, &mut out)?;
    Ok(out)
}

fn collect_nodes(domain: &Domain, weight: &WeightFunction, level: usize, pole: Option<&[f64]>, out: &mut NodeSet) -> Result<()> {
    let origin = vec![0.0; domain.dim()];
    let pole = pole.or(match weight {
        WeightFunction::Radial { .. } => Some(origin.as_slice()),
        _ => None,
    });
    match domain {
        Domain::Box { lower, upper } => {
            let cut = pole.filter(|p| strictly_inside(domain, p));
            box_nodes(lower, upper, weight, level, cut, out);
        }
        Domain::Ball { center, radius } => {
            let p = match pole {
                Some(p) if strictly_inside(domain, p) => p,
                _ => center.as_slice(),
            };
            ball_nodes(center, *radius, p, weight, level, out)?;
        }
        Domain::Union { members } => {
            for m in members {
                collect_nodes(m, weight, level, pole, out)?;
            }
        }
    }
    Ok(())
}

/// `∫_Ω f ω dx` with an error estimate `|Q_level - Q_{level-8}|`.
pub fn reference_integrate(
    f: impl Fn(&[f64]) -> f64,
    domain: &Domain,
    weight: &WeightFunction,
    level: usize,
) -> Result<(f64, f64)> {
    reference_integrate_with_pole(f, domain, weight, level, None)
}

pub(crate) fn reference_integrate_with_pole(
    f: impl Fn(&[f64]) -> f64,
    domain: &Domain,
    weight: &WeightFunction,
    level: usize,
    pole: Option<&[f64]>,
) -> Result<(f64, f64)> {
    if level <= LEVEL_GAP {
        return Err(Error::InvalidParameter(format!(
            "reference quadrature level must exceed {LEVEL_GAP}, got {level}"
        )));
    }
    let fine = reference_nodes(domain, weight, level, pole)?.integrate(&f)?;
    let coarse = reference_nodes(domain, weight, level - LEVEL_GAP, pole)?.integrate(&f)?;
    Ok((fine, (fine - coarse).abs()))
}
