//! Floating-point abstraction shared by the numerical modules.
//!
//! Games report leaf utilities and nature probabilities as `f64`; everything
//! that aggregates them (expectations, regrets, dual parameters, sample
//! weights) is generic over [`Scalar`] so the solver can run in `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar type: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant. Never fails for finite inputs.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to scalar")
    }

    /// Converts a count.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count converts to scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Numerically stable `ln Σ exp(x_k)`.
pub fn log_sum_exp<S: Scalar>(xs: &[S]) -> S {
    let max = xs.iter().copied().fold(S::neg_infinity(), S::max);
    if !max.is_finite() {
        return max;
    }
    let sum: S = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Normalizes log-weights into probabilities summing to one.
pub fn normalize_log_weights<S: Scalar>(log_weights: &[S]) -> Vec<S> {
    let lse = log_sum_exp(log_weights);
    log_weights.iter().map(|&l| (l - lse).exp()).collect()
}

/// Effective sample size `exp(-Σ w ln w)` of normalized weights.
pub fn effective_sample_size<S: Scalar>(weights: &[S]) -> S {
    let entropy: S = weights
        .iter()
        .filter(|&&w| w > S::zero())
        .map(|&w| -w * w.ln())
        .sum();
    entropy.exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ess_of_uniform_weights_is_sample_size() {
        let w = vec![0.25f64; 4];
        assert!((effective_sample_size(&w) - 4.0).abs() < 1e-12);
        let w32 = vec![0.125f32; 8];
        assert!((effective_sample_size(&w32) - 8.0).abs() < 1e-4);
    }

    #[test]
    fn ess_of_point_mass_is_one() {
        assert_eq!(effective_sample_size(&[0.0, 1.0, 0.0]), 1.0);
    }

    #[test]
    fn log_sum_exp_handles_large_values() {
        let v = log_sum_exp(&[1000.0f64, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-9);
        let p = normalize_log_weights(&[1000.0f64, 1000.0 + 3f64.ln()]);
        assert!((p[0] - 0.25).abs() < 1e-12);
    }
}
