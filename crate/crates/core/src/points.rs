//! Point generation: Halton, Sobol and seeded uniform random sequences, and
//! their restriction to general domains by rejection.
//!
//! Raw sequences live in `[0, 1)^d` and are mapped affinely onto the
//! domain's bounding box. Candidates outside the domain, or where the weight
//! function vanishes, are discarded; the survivors keep their order, so a
//! point set of size `N` is always a prefix of the one of size `2N`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, WeightFunction};

/// Hard cap on raw candidates consumed by a single sampler.
pub const MAX_RAW_CANDIDATES: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    Halton,
    Sobol,
    Random,
}

impl std::str::FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "halton" => Ok(GeneratorKind::Halton),
            "sobol" => Ok(GeneratorKind::Sobol),
            "random" => Ok(GeneratorKind::Random),
            other => Err(Error::InvalidParameter(format!("unknown generator `{other}`"))),
        }
    }
}

impl std::fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GeneratorKind::Halton => "halton",
            GeneratorKind::Sobol => "sobol",
            GeneratorKind::Random => "random",
        })
    }
}

/// Which raw sequence to draw from, and how many leading elements to drop.
///
/// When `skip` is absent the default is used: 1 for Halton and Sobol (their
/// element 0 is the all-zeros corner), 0 for random.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skip: Option<u64>,
}

impl GeneratorSpec {
    pub fn halton() -> Self {
        GeneratorSpec { kind: GeneratorKind::Halton, seed: None, skip: None }
    }

    pub fn sobol() -> Self {
        GeneratorSpec { kind: GeneratorKind::Sobol, seed: None, skip: None }
    }

    pub fn random(seed: u64) -> Self {
        GeneratorSpec { kind: GeneratorKind::Random, seed: Some(seed), skip: None }
    }

    /// Builds a spec of the given kind; `seed` is used only for random.
    pub fn of_kind(kind: GeneratorKind, seed: u64) -> Self {
        match kind {
            GeneratorKind::Halton => Self::halton(),
            GeneratorKind::Sobol => Self::sobol(),
            GeneratorKind::Random => Self::random(seed),
        }
    }

    pub fn with_skip(mut self, skip: u64) -> Self {
        self.skip = Some(skip);
        self
    }

    pub fn effective_skip(&self) -> u64 {
        self.skip.unwrap_or(match self.kind {
            GeneratorKind::Halton | GeneratorKind::Sobol => 1,
            GeneratorKind::Random => 0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match (self.kind, self.seed) {
            (GeneratorKind::Random, None) => {
                Err(Error::InvalidParameter("random generator needs a seed".into()))
            }
            (GeneratorKind::Halton | GeneratorKind::Sobol, Some(_)) => Err(Error::InvalidParameter(
                format!("{} generator takes no seed", self.kind),
            )),
            _ => Ok(()),
        }
    }
}

/// Where a point set came from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Provenance {
    pub generator: Option<GeneratorSpec>,
    /// Raw sequence elements examined, accepted or not.
    pub candidates_consumed: u64,
}

/// An ordered list of `d`-dimensional points, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    pub provenance: Provenance,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch { expected: dim, got: coords.len() % dim });
        }
        Ok(PointSet { dim, coords, provenance })
    }

    /// A point set with no recorded generator.
    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords, Provenance { generator: None, candidates_consumed: points.len() as u64 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The first `n` points, with provenance carried over.
    pub fn prefix(&self, n: usize) -> PointSet {
        PointSet {
            dim: self.dim,
            coords: self.coords[..n * self.dim].to_vec(),
            provenance: self.provenance.clone(),
        }
    }

    /// Keeps the points whose index is in `keep` (in that order).
    pub fn select(&self, keep: &[usize]) -> PointSet {
        let mut coords = Vec::with_capacity(keep.len() * self.dim);
        for &i in keep {
            coords.extend_from_slice(self.point(i));
        }
        PointSet { dim: self.dim, coords, provenance: self.provenance.clone() }
    }
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes.iter().take_while(|&&p| p * p <= candidate).all(|&p| candidate % p != 0) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// Radical inverse of `index` in `base`, rounded once.
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut reversed = 0u64;
    let mut denom = 1u64;
    while index > 0 {
        reversed = reversed * base + index % base;
        denom *= base;
        index /= base;
    }
    reversed as f64 / denom as f64
}

/// Halton point with the given index: coordinate `j` is the radical inverse
/// of `index` in the `j`-th prime base. Index 0 is the origin.
pub fn halton_point(index: u64, dim: usize) -> Vec<f64> {
    first_primes(dim).into_iter().map(|p| radical_inverse(index, p)).collect()
}

/// Joe–Kuo primitive-polynomial data `(a, m_1..m_s)` for dimensions 2..=16.
/// Dimension 1 is the van der Corput sequence.
const SOBOL_TABLE: [(u32, &[u32]); 15] = [
    (0, &[1]),
    (1, &[1, 3]),
    (1, &[1, 3, 1]),
    (2, &[1, 1, 1]),
    (1, &[1, 1, 3, 3]),
    (4, &[1, 3, 5, 13]),
    (2, &[1, 1, 5, 5, 17]),
    (4, &[1, 1, 5, 5, 5]),
    (7, &[1, 1, 7, 11, 19]),
    (11, &[1, 1, 5, 1, 1]),
    (13, &[1, 1, 1, 3, 11]),
    (14, &[1, 3, 5, 5, 31]),
    (1, &[1, 3, 3, 9, 7, 49]),
    (13, &[1, 1, 1, 15, 21, 21]),
    (16, &[1, 3, 1, 13, 27, 49]),
];

pub const SOBOL_MAX_DIM: usize = SOBOL_TABLE.len() + 1;

const SOBOL_BITS: usize = 32;

fn sobol_directions(j: usize) -> [u32; SOBOL_BITS] {
    let mut v = [0u32; SOBOL_BITS];
    if j == 0 {
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = 1 << (SOBOL_BITS - 1 - i);
        }
        return v;
    }
    let (a, m) = SOBOL_TABLE[j - 1];
    let s = m.len();
    for i in 0..s {
        v[i] = m[i] << (SOBOL_BITS - 1 - i);
    }
    for i in s..SOBOL_BITS {
        let mut x = v[i - s] ^ (v[i - s] >> s);
        for k in 1..s {
            if (a >> (s - 1 - k)) & 1 == 1 {
                x ^= v[i - k];
            }
        }
        v[i] = x;
    }
    v
}

/// Precomputed direction numbers for the first `dim` Sobol coordinates.
#[derive(Clone, Debug)]
pub struct SobolTable {
    directions: Vec<[u32; SOBOL_BITS]>,
}

impl SobolTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > SOBOL_MAX_DIM {
            return Err(Error::SobolDimension { max: SOBOL_MAX_DIM, got: dim });
        }
        Ok(SobolTable { directions: (0..dim).map(sobol_directions).collect() })
    }

    /// Gray-code Sobol point `index` (point 0 is the origin).
    pub fn point(&self, index: u64) -> Vec<f64> {
        assert!(index < 1 << SOBOL_BITS, "Sobol index {index} exceeds the 32-bit table");
        let gray = index ^ (index >> 1);
        self.directions
            .iter()
            .map(|v| {
                let mut x = 0u32;
                let mut g = gray;
                let mut bit = 0;
                while g != 0 {
                    if g & 1 == 1 {
                        x ^= v[bit];
                    }
                    g >>= 1;
                    bit += 1;
                }
                x as f64 / (1u64 << SOBOL_BITS) as f64
            })
            .collect()
    }
}

pub fn sobol_point(index: u64, dim: usize) -> Result<Vec<f64>> {
    Ok(SobolTable::new(dim)?.point(index))
}

/// One uniform point in `[0, 1)^d` drawn from `rng`.
pub fn random_point<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::InvalidDimension(0));
    }
    Ok((0..dim).map(|_| rng.gen::<f64>()).collect())
}

enum RawStream {
    Halton { primes: Vec<u64>, next: u64 },
    Sobol { table: SobolTable, next: u64 },
    Random { rng: Box<ChaCha8Rng>, dim: usize },
}

impl RawStream {
    fn new(spec: &GeneratorSpec, dim: usize) -> Result<Self> {
        spec.validate()?;
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let skip = spec.effective_skip();
        Ok(match spec.kind {
            GeneratorKind::Halton => RawStream::Halton { primes: first_primes(dim), next: skip },
            GeneratorKind::Sobol => RawStream::Sobol { table: SobolTable::new(dim)?, next: skip },
            GeneratorKind::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.unwrap_or_default());
                for _ in 0..skip {
                    random_point(&mut rng, dim)?;
                }
                RawStream::Random { rng: Box::new(rng), dim }
            }
        })
    }

    fn next_point(&mut self) -> Vec<f64> {
        match self {
            RawStream::Halton { primes, next } => {
                let p = primes.iter().map(|&b| radical_inverse(*next, b)).collect();
                *next += 1;
                p
            }
            RawStream::Sobol { table, next } => {
                let p = table.point(*next);
                *next += 1;
                p
            }
            RawStream::Random { rng, dim } => (0..*dim).map(|_| rng.gen::<f64>()).collect(),
        }
    }
}

/// Anything that can hand out nested point-set prefixes.
pub trait PointSource {
    fn prefix(&mut self, n: usize) -> Result<PointSet>;
}

/// Incremental rejection sampler on a domain.
pub struct DomainSampler {
    stream: RawStream,
    domain: Domain,
    weight: WeightFunction,
    lower: Vec<f64>,
    extent: Vec<f64>,
    points: PointSet,
}

impl DomainSampler {
    pub fn new(spec: &GeneratorSpec, domain: &Domain, weight: &WeightFunction) -> Result<Self> {
        domain.validate()?;
        let dim = domain.dim();
        let (lower, upper) = domain.bounding_box();
        let extent = lower.iter().zip(&upper).map(|(a, b)| b - a).collect();
        Ok(DomainSampler {
            stream: RawStream::new(spec, dim)?,
            domain: domain.clone(),
            weight: weight.clone(),
            lower,
            extent,
            points: PointSet {
                dim,
                coords: Vec::new(),
                provenance: Provenance { generator: Some(spec.clone()), candidates_consumed: 0 },
            },
        })
    }

    /// Draws until at least `count` points have been accepted.
    pub fn extend_to(&mut self, count: usize) -> Result<&PointSet> {
        while self.points.len() < count {
            if self.points.provenance.candidates_consumed >= MAX_RAW_CANDIDATES {
                return Err(Error::AcceptanceRateTooLow {
                    accepted: self.points.len(),
                    consumed: self.points.provenance.candidates_consumed,
                });
            }
            let mut x = self.stream.next_point();
            self.points.provenance.candidates_consumed += 1;
            for ((xi, lo), ext) in x.iter_mut().zip(&self.lower).zip(&self.extent) {
                *xi = lo + ext * *xi;
            }
            if self.domain.contains_unchecked(&x) && self.weight.eval(&x) > 0.0 {
                self.points.coords.extend_from_slice(&x);
            }
        }
        Ok(&self.points)
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }
}

impl PointSource for DomainSampler {
    fn prefix(&mut self, n: usize) -> Result<PointSet> {
        self.extend_to(n)?;
        let mut p = self.points.prefix(n);
        // candidates consumed up to and including the n-th accepted point are
        // not tracked separately; report the total drawn so far.
        p.provenance.candidates_consumed = self.points.provenance.candidates_consumed;
        Ok(p)
    }
}

/// The first `count` points of `spec` that lie in `domain` with `ω > 0`.
pub fn generate_in_domain(
    spec: &GeneratorSpec,
    domain: &Domain,
    weight: &WeightFunction,
    count: usize,
) -> Result<PointSet> {
    if count == 0 {
        return Err(Error::InvalidParameter("point count must be at least 1".into()));
    }
    let mut sampler = DomainSampler::new(spec, domain, weight)?;
    sampler.extend_to(count)?;
    Ok(sampler.points)
}
