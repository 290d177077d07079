//! A laboratory for factorial residues modulo a prime.
//!
//! Every computation flows through a [`FieldCtx`]. On top of it sit the
//! polynomial constructions ([`poly`]), exact point counts on plane curves
//! ([`counts`]), progression spectra ([`fourier`]), residue sets of
//! factorials ([`census`]), union/product calculators ([`union`]) and
//! constructive factorial-product representations ([`factorizer`]).

pub mod census;
pub mod cli;
pub mod counts;
mod error;
pub mod factorizer;
pub mod field;
pub mod fourier;
pub mod poly;
pub mod union;

pub use census::{ResidueSet, WorkBudget};
pub use counts::{CountReport, ProgressionSpec};
pub use error::{Error, Result};
pub use factorizer::RepresentationCertificate;
pub use field::{FactorialTable, FieldCtx, Residue};
pub use poly::{BivarPoly, Poly};
