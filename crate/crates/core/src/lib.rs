//! Theta invariants of the lattice towers attached to highest-weight
//! representations of untwisted affine Kac-Moody algebras.
//!
//! The pipeline runs bottom-up: [`lattice`] handles finite-rank Euclidean
//! lattices, [`cartan`] and [`weights`] describe the representation,
//! [`repspace`] builds it exactly with its integral form, and [`probundle`]
//! assembles the projective system and decides theta-finiteness.

pub mod cartan;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod probundle;
pub mod report;
pub mod repspace;
pub mod symm;
pub mod weights;

pub use cartan::{AffineData, AffineRoot, AffineWeight, CartanMatrix, RootSystem};
pub use error::{Error, Result};
pub use lattice::{GramLattice, ThetaOptions};
pub use linalg::{QMatrix, Q};
pub use probundle::{
    build_pro_system, invariance_check, lower_bound_constants, strong_summability, theta_function, ProSystem,
    Side, SummabilityOptions, SummabilityReport, Verdict,
};
pub use repspace::{GroupElement, RepTruncation};
pub use symm::{eval_lambda, lambda_poly, LambdaPoly, UZMonomial};
pub use weights::WeightSystem;
