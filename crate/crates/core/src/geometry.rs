//! Integration domains and weight functions.
//!
//! A [`Domain`] is a closed box, a closed ball, or a disjoint union of
//! domains. Membership uses `<=` comparisons, so boundary points count as
//! inside. A [`WeightFunction`] is the nonnegative density `ω` of the
//! integral `I[f] = ∫_Ω f ω dx`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bounded region of `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum Domain {
    /// Axis-aligned box `[lower_1, upper_1] × ... × [lower_d, upper_d]`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Closed Euclidean ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// Union of pairwise disjoint members of equal dimension.
    Union { members: Vec<Domain> },
}

impl Domain {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let d = Domain::Box { lower, upper };
        d.validate()?;
        Ok(d)
    }

    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let d = Domain::Ball { center, radius };
        d.validate()?;
        Ok(d)
    }

    /// Builds a union. Disjointness is the caller's responsibility; see
    /// [`Domain::overlap_witness`] for a sampled check.
    pub fn new_union(members: Vec<Domain>) -> Result<Self> {
        let d = Domain::Union { members };
        d.validate()?;
        Ok(d)
    }

    /// `[lo, hi]^d`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new_box(vec![lo; dim], vec![hi; dim])
    }

    /// Unit ball centered at the origin.
    pub fn unit_ball(dim: usize) -> Result<Self> {
        Self::new_ball(vec![0.0; dim], 1.0)
    }

    /// The two-dimensional nonstandard domain: the closed unit disk centered
    /// at the origin together with the square `[1, 2]^2`.
    pub fn disk_and_square() -> Self {
        Domain::Union {
            members: vec![
                Domain::Ball { center: vec![0.0, 0.0], radius: 1.0 },
                Domain::Box { lower: vec![1.0, 1.0], upper: vec![2.0, 2.0] },
            ],
        }
    }

    /// Named presets used by the command line and the experiment configs.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "cube2" => Self::cube(2, -1.0, 1.0),
            "cube3" => Self::cube(3, -1.0, 1.0),
            "unit-cube2" => Self::cube(2, 0.0, 1.0),
            "unit-cube3" => Self::cube(3, 0.0, 1.0),
            "ball2" => Self::unit_ball(2),
            "ball3" => Self::unit_ball(3),
            "nonstandard" => Ok(Self::disk_and_square()),
            other => Err(Error::InvalidDomain(format!("unknown domain preset `{other}`"))),
        }
    }

    /// Checks the structural invariants (positive extents, matching
    /// dimensions, nonempty unions).
    pub fn validate(&self) -> Result<()> {
        match self {
            Domain::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(Error::InvalidDomain(format!(
                        "box bounds have lengths {} and {}",
                        lower.len(),
                        upper.len()
                    )));
                }
                for (i, (a, b)) in lower.iter().zip(upper).enumerate() {
                    if !(a.is_finite() && b.is_finite() && a < b) {
                        return Err(Error::InvalidDomain(format!(
                            "box axis {i} has bounds [{a}, {b}]"
                        )));
                    }
                }
            }
            Domain::Ball { center, radius } => {
                if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidDomain("ball center is empty or non-finite".into()));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidDomain(format!("ball radius {radius} is not positive")));
                }
            }
            Domain::Union { members } => {
                let Some(first) = members.first() else {
                    return Err(Error::InvalidDomain("union has no members".into()));
                };
                let dim = first.dim();
                for m in members {
                    m.validate()?;
                    if m.dim() != dim {
                        return Err(Error::InvalidDomain(
                            "union members have different dimensions".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lower, .. } => lower.len(),
            Domain::Ball { center, .. } => center.len(),
            Domain::Union { members } => members[0].dim(),
        }
    }

    /// Membership test. Boundary points are inside.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self.contains_unchecked(x))
    }

    pub(crate) fn contains_unchecked(&self, x: &[f64]) -> bool {
        match self {
            Domain::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(xi, (a, b))| *a <= *xi && *xi <= *b),
            Domain::Ball { center, radius } => {
                let r2: f64 = x.iter().zip(center).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum();
                r2 <= radius * radius
            }
            Domain::Union { members } => members.iter().any(|m| m.contains_unchecked(x)),
        }
    }

    /// Exact `d`-dimensional volume.
    pub fn volume(&self) -> f64 {
        match self {
            Domain::Box { lower, upper } => lower.iter().zip(upper).map(|(a, b)| b - a).product(),
            Domain::Ball { center, radius } => unit_ball_volume(center.len()) * radius.powi(center.len() as i32),
            Domain::Union { members } => members.iter().map(Domain::volume).sum(),
        }
    }

    /// Smallest axis-aligned box containing the domain, as `(lower, upper)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Box { lower, upper } => (lower.clone(), upper.clone()),
            Domain::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Domain::Union { members } => {
                let (mut lo, mut hi) = members[0].bounding_box();
                for m in &members[1..] {
                    let (l, h) = m.bounding_box();
                    for i in 0..lo.len() {
                        lo[i] = lo[i].min(l[i]);
                        hi[i] = hi[i].max(h[i]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// For unions: returns the first probe point that lies in two members.
    pub fn overlap_witness<'a>(&self, probes: impl IntoIterator<Item = &'a [f64]>) -> Option<Vec<f64>> {
        let Domain::Union { members } = self else { return None };
        probes
            .into_iter()
            .find(|x| members.iter().filter(|m| m.contains_unchecked(x)).count() > 1)
            .map(<[f64]>::to_vec)
    }
}

/// Volume of the unit ball in `R^d`: `π^{d/2} / Γ(d/2 + 1)`.
pub(crate) fn unit_ball_volume(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma_half(d + 2)
}

/// `Γ(k/2)` for a positive integer `k`, by the recurrence `Γ(z+1) = zΓ(z)`.
pub(crate) fn gamma_half(k: usize) -> f64 {
    assert!(k > 0, "gamma_half needs a positive argument");
    let mut z;
    let mut g;
    if k % 2 == 0 {
        z = 1.0;
        g = 1.0;
    } else {
        z = 0.5;
        g = PI.sqrt();
    }
    while z < k as f64 / 2.0 - 0.25 {
        g *= z;
        z += 1.0;
    }
    g
}

/// The density `ω` of the integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum WeightFunction {
    /// `ω ≡ 1`.
    One,
    /// `ω(x) = Π_i (1 - x_i^2)^{1/2}`; only meaningful inside `[-1, 1]^d`.
    Chebyshev,
    /// `ω(x) = ‖x‖_2^p`, defined as 0 at the origin when `p > 0`.
    Radial { exponent: f64 },
}

impl WeightFunction {
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "one" => Ok(WeightFunction::One),
            "chebyshev" => Ok(WeightFunction::Chebyshev),
            "radial-half" => Ok(WeightFunction::Radial { exponent: 0.5 }),
            other => Err(Error::InvalidParameter(format!("unknown weight preset `{other}`"))),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            WeightFunction::One => 1.0,
            WeightFunction::Chebyshev => x.iter().map(|xi| (1.0 - xi * xi).max(0.0).sqrt()).product(),
            WeightFunction::Radial { exponent } => {
                let r = x.iter().map(|xi| xi * xi).sum::<f64>().sqrt();
                if r == 0.0 && *exponent > 0.0 {
                    0.0
                } else {
                    r.powf(*exponent)
                }
            }
        }
    }

    /// Rejects weights that are not finite and nonnegative on `domain`.
    pub fn check_compatible(&self, domain: &Domain) -> Result<()> {
        match self {
            WeightFunction::One => Ok(()),
            WeightFunction::Chebyshev => {
                let (lo, hi) = domain.bounding_box();
                if lo.iter().chain(&hi).all(|v| (-1.0..=1.0).contains(v)) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(
                        "the Chebyshev weight needs a domain inside [-1, 1]^d".into(),
                    ))
                }
            }
            WeightFunction::Radial { exponent } => {
                if !exponent.is_finite() || *exponent < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "radial weight exponent {exponent} must be finite and nonnegative"
                    )));
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn membership_examples() {
        let sq = Domain::cube(2, -1.0, 1.0).unwrap();
        assert!(sq.contains(&[0.0, 0.0]).unwrap());
        let disk = Domain::unit_ball(2).unwrap();
        assert!(!disk.contains(&[2.0, 0.0]).unwrap());
        let u = Domain::disk_and_square();
        assert!(u.contains(&[1.5, 1.5]).unwrap());
        assert!(u.contains(&[0.0, 1.0]).unwrap());
        assert!(!u.contains(&[0.9, 0.9]).unwrap());
        assert!(matches!(
            sq.contains(&[0.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn volumes() {
        assert_eq!(Domain::cube(2, -1.0, 1.0).unwrap().volume(), 4.0);
        assert!((Domain::unit_ball(2).unwrap().volume() - PI).abs() < 1e-15);
        assert!((Domain::unit_ball(3).unwrap().volume() - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((Domain::disk_and_square().volume() - (PI + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn gamma_half_values() {
        assert!((gamma_half(1) - PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half(2), 1.0);
        assert!((gamma_half(5) - 0.75 * PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half(8), 6.0);
    }

    #[test]
    fn weight_examples() {
        assert_eq!(WeightFunction::One.eval(&[3.0, -7.0]), 1.0);
        assert_eq!(WeightFunction::Chebyshev.eval(&[0.0, 0.0]), 1.0);
        assert_eq!(WeightFunction::Radial { exponent: 0.5 }.eval(&[1.0, 0.0]), 1.0);
        assert_eq!(WeightFunction::Radial { exponent: 0.5 }.eval(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn invalid_domains_are_rejected() {
        assert!(Domain::new_box(vec![0.0], vec![0.0]).is_err());
        assert!(Domain::new_box(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(Domain::new_ball(vec![0.0], -1.0).is_err());
        assert!(Domain::new_union(vec![]).is_err());
        assert!(WeightFunction::Chebyshev.check_compatible(&Domain::disk_and_square()).is_err());
    }

    #[test]
    fn serde_shape() {
        let d = Domain::unit_ball(2).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"kind":"ball","params":{"center":[0.0,0.0],"radius":1.0}}"#);
        let w: WeightFunction = serde_json::from_str(r#"{"kind":"radial","params":{"exponent":0.5}}"#).unwrap();
        assert_eq!(w, WeightFunction::Radial { exponent: 0.5 });
        let w: WeightFunction = serde_json::from_str(r#"{"kind":"one"}"#).unwrap();
        assert_eq!(w, WeightFunction::One);
    }

    fn mc_volume(domain: &Domain, samples: usize, seed: u64) -> f64 {
        let (lo, hi) = domain.bounding_box();
        let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = vec![0.0; lo.len()];
        let mut hits = 0usize;
        for _ in 0..samples {
            for i in 0..x.len() {
                x[i] = lo[i] + (hi[i] - lo[i]) * rng.gen::<f64>();
            }
            if domain.contains_unchecked(&x) {
                hits += 1;
            }
        }
        box_vol * hits as f64 / samples as f64
    }

    #[test]
    fn monte_carlo_volume_agrees() {
        for d in [
            Domain::cube(2, -1.0, 1.0).unwrap(),
            Domain::unit_ball(2).unwrap(),
            Domain::unit_ball(3).unwrap(),
            Domain::new_ball(vec![0.5, -0.25], 0.75).unwrap(),
            Domain::disk_and_square(),
        ] {
            let est = mc_volume(&d, 1_000_000, 7);
            let rel = (est - d.volume()).abs() / d.volume();
            assert!(rel <= 5e-3, "{d:?}: rel err {rel}");
        }
    }

    #[test]
    fn nonstandard_members_are_disjoint() {
        let d = Domain::disk_and_square();
        let (lo, hi) = d.bounding_box();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let probes: Vec<Vec<f64>> = (0..100_000)
            .map(|_| (0..2).map(|i| lo[i] + (hi[i] - lo[i]) * rng.gen::<f64>()).collect())
            .collect();
        assert!(d.overlap_witness(probes.iter().map(Vec::as_slice)).is_none());
        let overlapping = Domain::new_union(vec![
            Domain::unit_ball(2).unwrap(),
            Domain::cube(2, 0.0, 1.0).unwrap(),
        ])
        .unwrap();
        assert!(overlapping.overlap_witness(probes.iter().map(Vec::as_slice)).is_some());
    }

    #[test]
    fn weights_nonnegative_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cases = [
            (WeightFunction::One, Domain::disk_and_square()),
            (WeightFunction::Chebyshev, Domain::cube(2, -1.0, 1.0).unwrap()),
            (WeightFunction::Radial { exponent: 0.5 }, Domain::unit_ball(2).unwrap()),
        ];
        for (w, dom) in cases {
            let (lo, hi) = dom.bounding_box();
            let mut seen = 0;
            while seen < 100_000 {
                let x: Vec<f64> = (0..2).map(|i| lo[i] + (hi[i] - lo[i]) * rng.gen::<f64>()).collect();
                if dom.contains_unchecked(&x) {
                    let v = w.eval(&x);
                    assert!(v.is_finite() && v >= 0.0);
                    seen += 1;
                }
            }
        }
    }
}
