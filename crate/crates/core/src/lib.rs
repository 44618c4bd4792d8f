//! petlab: exact and statistical tooling for polynomial configurations in
//! the primes.
//!
//! The library is organized around one pipeline:
//!
//! * [`arith`] — sieves and multiplicative functions;
//! * [`sieve_measure`] — the W-tricked prime weight, the squared divisor-sum
//!   sieve measure with its smooth cutoff, and the dense-model weights;
//! * [`polyalg`] — exact multivariate integer polynomials, a small parser,
//!   and the PET (van der Corput) induction engine with runtime-verified
//!   claims;
//! * [`gowers`] — uniformity norms on cyclic groups with an FFT fast path;
//! * [`correlation`] — local factors over finite fields, Euler-factor
//!   comparisons, and seeded Monte-Carlo estimators for the correlation
//!   conditions;
//! * [`configs`] — configuration counting and a Bateman–Horn-style
//!   prediction.

pub mod arith;
pub mod configs;
pub mod correlation;
pub mod error;
pub mod gowers;
pub mod polyalg;
pub mod sieve_measure;

pub use error::{Error, Result};

pub(crate) mod numeric {
    /// Sum of a slice by fixed-shape pairwise reduction.
    ///
    /// The summation tree depends only on the slice length, so results are
    /// bit-identical regardless of how the inputs were produced (serially or
    /// by ordered parallel collection).
    pub fn pairwise_sum(xs: &[f64]) -> f64 {
        match xs.len() {
            0 => 0.0,
            1 => xs[0],
            2 => xs[0] + xs[1],
            n => {
                let mid = n / 2;
                pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
            }
        }
    }

}
