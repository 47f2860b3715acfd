//! Nonconcentration functionals for polynomial maps.
//!
//! The crate builds the Radon-like Jacobian functional `Φ_x` of a polynomial
//! family `γ`, analyzes its order of vanishing on the diagonal, evaluates the
//! associated Hausdorff-type density by optimization over linear changes of
//! variables, decides density positivity through a Newton-polytope criterion,
//! estimates the sup/integral nonconcentration functionals over finitely
//! described Borel sets, produces covering-based upper estimates for the
//! generalized Hausdorff measures, and verifies the resulting `L^p` bounds for
//! truncated Radon-like averaging operators by quadrature.
//!
//! All symbolic computation happens over exact rationals; floating point
//! enters only at evaluation and optimization boundaries.

pub mod density;
pub mod diagonal;
pub mod error;
pub mod fmat;
pub mod fpoly;
pub mod functionals;
pub mod gallery;
pub mod geometry;
pub mod hausdorff;
pub mod lp;
pub mod matrix;
pub mod optim;
pub mod poly;
pub mod radon;
pub mod rng;
pub mod sets;

pub use error::Error;
pub use poly::{Monomial, PolyVector, Polynomial, Rat};

/// Version string embedded in every emitted report.
pub const SCHEMA_VERSION: &str = "1.0";

/// Provenance of an expected value a report compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Paper,
    Derived,
    Trivial,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Paper => write!(f, "paper"),
            Provenance::Derived => write!(f, "derived"),
            Provenance::Trivial => write!(f, "trivial"),
        }
    }
}
