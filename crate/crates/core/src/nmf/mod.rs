//! Nonnegative matrix factorization: α-divergence cost and multiplicative
//! updates, the Euclidean baseline, and the multilayer (layer-stack) variant.

mod alpha;
mod control;
mod divergence;
mod multilayer;
mod standard;

pub use alpha::{AlphaNmf, run_alpha_nmf, update_a_alpha, update_x_alpha};
pub use control::{FitTrace, IterControl, StopReason};
pub use divergence::{alpha_divergence, effective_alpha};
pub use multilayer::{
    LayerStack, PassParams, PlnmfPass, normalize_stack, run_plnmf_pass, update_layer,
    update_x_multilayer,
};
pub use standard::{StandardNmf, frobenius_cost, standard_nmf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::{Matrix, NonNegMatrix};
use crate::scalar::Scalar;

/// Entry floor applied after every update and to the model before division.
pub const EPS_FLOOR: f64 = 1e-12;

/// Distance from 0 or 1 below which α is treated as the KL limit.
pub const ALPHA_LIMIT_TOL: f64 = 1e-6;

pub(crate) fn floor<T: Scalar>() -> T {
    T::lit(EPS_FLOOR)
}

/// Uniform(0.1, 1.0) initialization of a sequence of factor shapes, drawn
/// row-major in the given order from one seeded stream.
pub(crate) fn random_factors<T: Scalar>(
    shapes: &[(usize, usize)],
    seed: u64,
) -> Vec<NonNegMatrix<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shapes
        .iter()
        .map(|&(r, c)| {
            NonNegMatrix::new_unchecked(Matrix::from_fn(r, c, |_, _| {
                T::lit(rng.gen_range(0.1..1.0))
            }))
        })
        .collect()
}
