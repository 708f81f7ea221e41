//! Positive least-squares cubature on general domains.

pub mod bench;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod lscf;
pub mod points;
pub mod quadrature;
pub mod spaces;
pub mod subsample;

pub use error::{Error, Result};
pub use geometry::{Domain, WeightFunction};
pub use lscf::{build_positive_lscf, BuildOptions, BuildReport, CubatureRule, Problem, RuleKind};
pub use points::{GeneratorKind, GeneratorSpec, PointSet};
pub use spaces::{BasisFamily, BasisSpec};
