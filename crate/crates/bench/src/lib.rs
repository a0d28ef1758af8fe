//! Fixtures shared by the benchmarks.

use loopgroup_theta::cartan::{AffineData, CartanMatrix};
use loopgroup_theta::lattice::GramLattice;
use loopgroup_theta::linalg::{qf, QMatrix};
use loopgroup_theta::repspace::RepTruncation;
use loopgroup_theta::weights::WeightSystem;

/// The root lattice A_n scaled by `s`, a dense positive definite Gram.
pub fn root_lattice(n: usize, s: (i64, i64)) -> GramLattice {
    let g = QMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => qf(2 * s.0, s.1),
        1 => qf(-s.0, s.1),
        _ => qf(0, 1),
    });
    GramLattice::new(g).unwrap()
}

pub fn basic_module(cartan: CartanMatrix, levels: usize) -> WeightSystem {
    let ad = AffineData::from_cartan(cartan);
    WeightSystem::new(&ad, &ad.lambda_top(), levels).unwrap()
}

pub fn basic_truncation(cartan: CartanMatrix, levels: usize) -> RepTruncation {
    RepTruncation::build(&basic_module(cartan, levels), levels).unwrap()
}
