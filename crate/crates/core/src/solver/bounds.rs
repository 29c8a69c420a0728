use serde::{Deserialize, Serialize};

use crate::efg::GameType;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dual step for a deviation with empirical regret `r_star`, given the
/// regret bound `r_tilde`: `(1/(2R)) ln((R + r)/(R − r))`.
pub fn basic_update<S: Scalar>(r_star: S, r_tilde: S) -> Result<S> {
    if !(r_tilde > S::zero()) {
        return Err(Error::Domain(format!("regret bound {r_tilde} must be positive")));
    }
    if r_star < S::zero() || r_star >= r_tilde {
        return Err(Error::Domain(format!(
            "regret {r_star} outside [0, {r_tilde}) for the basic update"
        )));
    }
    let two = S::one() + S::one();
    Ok(((r_tilde + r_star) / (r_tilde - r_star)).ln() / (two * r_tilde))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationBound {
    pub rounds: u64,
    /// The looser `2 R² D / ε²`.
    pub loose: f64,
}

/// Number of rounds with regret at least `epsilon` that coordinate descent
/// can take when the relative entropy to the target is at most `d_bound`.
pub fn iteration_bound(epsilon: f64, r_tilde: f64, d_bound: f64) -> Result<IterationBound> {
    if !(epsilon > 0.0) || epsilon >= r_tilde {
        return Err(Error::Domain(format!("need 0 < epsilon ({epsilon}) < regret bound ({r_tilde})")));
    }
    if !(d_bound >= 0.0) {
        return Err(Error::Domain(format!("divergence bound {d_bound} must be nonnegative")));
    }
    let ratio = epsilon / r_tilde;
    let per_round = -0.5 * (-ratio * ratio).ln_1p();
    let x = d_bound / per_round;
    let snapped = x.round();
    let rounds = if (x - snapped).abs() <= 1e-12 * x.abs().max(1.0) {
        snapped
    } else {
        x.ceil()
    };
    Ok(IterationBound {
        rounds: rounds as u64,
        loose: 2.0 * r_tilde * r_tilde * d_bound / (epsilon * epsilon),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBounds {
    pub m: u64,
    pub m_nat: u64,
}

/// Hoeffding sizes for profile and scenario samples, with `ln |S| ≈ Γ` and
/// `ln |Φ| ≈ ln Γ + Γ`.
pub fn sample_bounds(epsilon: f64, delta: f64, game_type: GameType) -> SampleBounds {
    let gamma = game_type.gamma as f64;
    let ln_s = gamma;
    let ln_phi = gamma.ln() + gamma;
    let ln_inv_delta = -delta.ln();
    let r = game_type.r_max;
    let r_tilde = r + epsilon;
    let e2 = epsilon * epsilon;
    SampleBounds {
        m_nat: (2.0 * r * r * (ln_s + ln_phi + ln_inv_delta) / e2).ceil() as u64,
        m: (2.0 * r_tilde * r_tilde * (ln_phi + ln_inv_delta) / e2).ceil() as u64,
    }
}

/// Profile sample size per round: `m0 + floor(t / divisor)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schedule {
    pub m0: usize,
    pub divisor: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self { m0: 100, divisor: 10 }
    }
}

impl Schedule {
    pub fn size(&self, t: usize) -> usize {
        self.m0 + t / self.divisor.max(1)
    }
}

pub fn schedule_m(t: usize) -> usize {
    Schedule::default().size(t)
}
