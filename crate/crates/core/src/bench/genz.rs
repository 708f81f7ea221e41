//! Genz test integrands on `[0, 1]^d` and the fixed test integrands of the
//! other-domain experiments.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, WeightFunction};
use crate::quadrature::{reference_integrate, REFERENCE_LEVEL};

/// Relative error-estimate bound for reference values.
pub const REFERENCE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenzKind {
    Oscillatory,
    ProductPeak,
    CornerPeak,
    Gaussian,
}

impl GenzKind {
    pub const ALL: [GenzKind; 4] = [GenzKind::Oscillatory, GenzKind::ProductPeak, GenzKind::CornerPeak, GenzKind::Gaussian];

    pub fn name(self) -> &'static str {
        match self {
            GenzKind::Oscillatory => "oscillatory",
            GenzKind::ProductPeak => "product-peak",
            GenzKind::CornerPeak => "corner-peak",
            GenzKind::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for GenzKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GenzKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GenzKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown Genz function '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenzFunction {
    pub kind: GenzKind,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl GenzFunction {
    pub fn new(kind: GenzKind, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
        }
        if a.iter().chain(&b).any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter("Genz parameters must lie in [0, 1]".into()));
        }
        Ok(GenzFunction { kind, a, b })
    }

    /// `a` and `b` drawn uniformly from `[0, 1]^d`.
    pub fn random<R: Rng + ?Sized>(kind: GenzKind, dim: usize, rng: &mut R) -> Self {
        let a = (0..dim).map(|_| rng.gen::<f64>()).collect();
        let b = (0..dim).map(|_| rng.gen::<f64>()).collect();
        GenzFunction { kind, a, b }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        genz_eval(self, x)
    }
}

pub fn genz_eval(g: &GenzFunction, x: &[f64]) -> f64 {
    let (a, b) = (&g.a, &g.b);
    match g.kind {
        GenzKind::Oscillatory => (2.0 * PI * b[0] + a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>()).cos(),
        GenzKind::ProductPeak => a
            .iter()
            .zip(b)
            .zip(x)
            .map(|((ai, bi), xi)| 1.0 / (ai.powi(-2) + (xi - bi).powi(2)))
            .product(),
        GenzKind::CornerPeak => {
            let s: f64 = a.iter().zip(x).map(|(ai, xi)| ai * xi).sum();
            (1.0 + s).powi(-(x.len() as i32 + 1))
        }
        GenzKind::Gaussian => (-a.iter().zip(b).zip(x).map(|((ai, bi), xi)| (ai * (xi - bi)).powi(2)).sum::<f64>()).exp(),
    }
}

/// `∫_{[0,1]^d} g dx` by reference quadrature.
pub fn genz_reference(g: &GenzFunction) -> Result<f64> {
    let cube = Domain::cube(g.dim(), 0.0, 1.0)?;
    checked_reference(|x| genz_eval(g, x), &cube, &WeightFunction::One)
}

/// Reference value whose error estimate must stay below [`REFERENCE_TOL`]
/// relative to `max(1, |I|)`.
pub fn checked_reference(f: impl Fn(&[f64]) -> f64, domain: &Domain, weight: &WeightFunction) -> Result<f64> {
    let (value, estimate) = reference_integrate(f, domain, weight, REFERENCE_LEVEL)?;
    let tolerance = REFERENCE_TOL * value.abs().max(1.0);
    if estimate > tolerance {
        return Err(Error::QuadratureNotConverged { estimate, tolerance });
    }
    Ok(value)
}

/// The fixed integrands of the non-Genz experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestIntegrand {
    /// `arccos(x_1) arccos(x_2)`.
    ArccosProduct,
    /// `1 / (1 + x_1^2 + x_2^2) + sin x_1`.
    RationalSine,
    /// `exp(-x_1^2 - x_2^2)`.
    ExpSquare,
}

impl TestIntegrand {
    pub const ALL: [TestIntegrand; 3] = [TestIntegrand::ArccosProduct, TestIntegrand::RationalSine, TestIntegrand::ExpSquare];

    pub fn name(self) -> &'static str {
        match self {
            TestIntegrand::ArccosProduct => "arccos-product",
            TestIntegrand::RationalSine => "rational-sine",
            TestIntegrand::ExpSquare => "exp-square",
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            TestIntegrand::ArccosProduct => x.iter().map(|v| v.clamp(-1.0, 1.0).acos()).product(),
            TestIntegrand::RationalSine => 1.0 / (1.0 + x.iter().map(|v| v * v).sum::<f64>()) + x[0].sin(),
            TestIntegrand::ExpSquare => (-x.iter().map(|v| v * v).sum::<f64>()).exp(),
        }
    }
}

/// An experiment integrand: a randomized Genz family or a fixed function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntegrandKind {
    Genz(GenzKind),
    Fixed(TestIntegrand),
}

impl IntegrandKind {
    pub fn name(self) -> &'static str {
        match self {
            IntegrandKind::Genz(k) => k.name(),
            IntegrandKind::Fixed(t) => t.name(),
        }
    }

    pub fn is_random(self) -> bool {
        matches!(self, IntegrandKind::Genz(_))
    }
}

impl fmt::Display for IntegrandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntegrandKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(t) = TestIntegrand::ALL.into_iter().find(|t| t.name() == s) {
            return Ok(IntegrandKind::Fixed(t));
        }
        s.parse().map(IntegrandKind::Genz)
    }
}

/// A concrete integrand on a domain. Genz functions are evaluated at the
/// affine image of `x` in `[0, 1]^d` under the bounding-box map, which is
/// the identity on the unit cube.
#[derive(Clone, Debug)]
pub enum Integrand {
    Genz { g: GenzFunction, lower: Vec<f64>, extent: Vec<f64> },
    Fixed(TestIntegrand),
}

impl Integrand {
    pub fn genz(g: GenzFunction, domain: &Domain) -> Self {
        let (lower, upper) = domain.bounding_box();
        let extent = lower.iter().zip(&upper).map(|(l, u)| u - l).collect();
        Integrand::Genz { g, lower, extent }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Integrand::Genz { g, lower, extent } => {
                let u: Vec<f64> = x.iter().zip(lower).zip(extent).map(|((xi, l), e)| (xi - l) / e).collect();
                genz_eval(g, &u)
            }
            Integrand::Fixed(t) => t.eval(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genz_examples() {
        let g = GenzFunction::new(GenzKind::Gaussian, vec![0.0, 0.0], vec![0.3, 0.9]).unwrap();
        assert_eq!(g.eval(&[0.2, 0.7]), 1.0);
        let o = GenzFunction::new(GenzKind::Oscillatory, vec![0.0; 3], vec![0.0; 3]).unwrap();
        assert_eq!(o.eval(&[0.5, 0.1, 0.9]), 1.0);
        let c = GenzFunction::new(GenzKind::CornerPeak, vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert!((c.eval(&[1.0, 1.0]) - 1.0 / 27.0).abs() < 1e-17);
        assert!(GenzFunction::new(GenzKind::Gaussian, vec![1.5], vec![0.0]).is_err());
    }

    #[test]
    fn genz_reference_values() {
        // (√π erf(1/2))^2 and (π/4)^2
        let g = GenzFunction::new(GenzKind::Gaussian, vec![1.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert!((genz_reference(&g).unwrap() - 0.851_120_667_508_794_7).abs() < 1e-13);
        let p = GenzFunction::new(GenzKind::ProductPeak, vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert!((genz_reference(&p).unwrap() - PI * PI / 16.0).abs() < 1e-13);
        let o = GenzFunction::new(GenzKind::Oscillatory, vec![0.0, 0.0], vec![0.0, 0.4]).unwrap();
        assert!((genz_reference(&o).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_genz_references_converge() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for kind in GenzKind::ALL {
            for dim in [2, 3] {
                let g = GenzFunction::random(kind, dim, &mut rng);
                let v = genz_reference(&g).unwrap();
                assert!(v.is_finite() && v > -1.0 - 1e-12);
            }
        }
    }

    #[test]
    fn integrand_tags() {
        assert_eq!("gaussian".parse::<IntegrandKind>().unwrap(), IntegrandKind::Genz(GenzKind::Gaussian));
        assert_eq!("exp-square".parse::<IntegrandKind>().unwrap(), IntegrandKind::Fixed(TestIntegrand::ExpSquare));
        assert!("bogus".parse::<IntegrandKind>().is_err());
        assert_eq!(serde_json::to_string(&IntegrandKind::Genz(GenzKind::CornerPeak)).unwrap(), "\"corner-peak\"");
    }

    #[test]
    fn genz_on_other_boxes_is_rescaled() {
        let g = GenzFunction::new(GenzKind::CornerPeak, vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let sq = Domain::cube(2, -1.0, 1.0).unwrap();
        let f = Integrand::genz(g.clone(), &sq);
        assert!((f.eval(&[1.0, 1.0]) - g.eval(&[1.0, 1.0])).abs() < 1e-17);
        assert!((f.eval(&[-1.0, -1.0]) - 1.0).abs() < 1e-17);
    }
}
