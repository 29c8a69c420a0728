use serde::{Deserialize, Serialize};

use super::bounds::basic_update;
use crate::error::Result;
use crate::sampler::WeightedSample;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineSearchConfig {
    pub enabled: bool,
    /// Largest step as a multiple of the basic update.
    pub cap_factor: f64,
    /// Smallest post-update effective sample size as a fraction of M.
    pub ess_floor: f64,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            cap_factor: 1e5,
            ess_floor: (-1.0f64).exp(),
        }
    }
}

const REL_TOL: f64 = 1e-10;

/// Sign-preserving derivative of `Σ w_k exp(−Δ r_k)` up to a positive factor.
fn slope(weights: &[f64], regrets: &[f64], delta: f64) -> f64 {
    let shift = regrets.iter().map(|&r| -delta * r).fold(f64::NEG_INFINITY, f64::max);
    -weights
        .iter()
        .zip(regrets)
        .map(|(&w, &r)| w * r * (-delta * r - shift).exp())
        .sum::<f64>()
}

fn ess_after(weights: &[f64], regrets: &[f64], delta: f64) -> f64 {
    let logs: Vec<f64> = weights
        .iter()
        .zip(regrets)
        .map(|(&w, &r)| if w > 0.0 { w.ln() - delta * r } else { f64::NEG_INFINITY })
        .collect();
    let p = crate::scalar::normalize_log_weights(&logs);
    crate::scalar::effective_sample_size(&p)
}

/// Bisection for the last point of `[lo, hi]` where `pred` holds, assuming
/// it holds at `lo` and fails at `hi`.
fn bisect(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..400 {
        if hi - lo <= REL_TOL * hi.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Result of a line search along one dual coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineStep<S> {
    pub delta: S,
    /// Every weighted sample point has the same regret on this coordinate,
    /// so no step changes the normalized weights; the full cap is taken.
    pub uninformative: bool,
    /// The sample's minimizer lies beyond the cap.
    pub capped: bool,
}

/// Step along one dual coordinate that minimizes the weighted sample's
/// `Σ w_k exp(−Δ r_k)`, limited to `cap_factor` times the basic update and
/// by the effective sample size floor, but never below the basic update
/// (or the exact minimizer, if that is smaller).
pub fn line_search_delta<S: Scalar>(
    weights: &[S],
    regrets: &[S],
    r_tilde: S,
    config: &LineSearchConfig,
) -> Result<S> {
    Ok(line_search_step(weights, regrets, r_tilde, config)?.delta)
}

/// [`line_search_delta`], also reporting whether the step can move the weights.
pub fn line_search_step<S: Scalar>(
    weights: &[S],
    regrets: &[S],
    r_tilde: S,
    config: &LineSearchConfig,
) -> Result<LineStep<S>> {
    let w: Vec<f64> = weights.iter().map(|x| x.as_f64()).collect();
    let r: Vec<f64> = regrets.iter().map(|x| x.as_f64()).collect();
    let r_star: f64 = w.iter().zip(&r).map(|(a, b)| a * b).sum();
    let basic = basic_update(S::of(r_star.max(0.0)), r_tilde)?.as_f64();
    if basic <= 0.0 {
        return Ok(LineStep {
            delta: S::zero(),
            uninformative: false,
            capped: false,
        });
    }
    let cap = config.cap_factor.max(1.0) * basic;
    let mut support = w.iter().zip(&r).filter(|(&q, _)| q > 0.0).map(|(_, &x)| x);
    let first = support.next().unwrap_or(0.0);
    if support.all(|x| x == first) {
        return Ok(LineStep {
            delta: S::of(cap),
            uninformative: true,
            capped: true,
        });
    }
    let capped = slope(&w, &r, cap) < 0.0;
    let optimum = if capped {
        f64::INFINITY
    } else {
        bisect(0.0, cap, |d| slope(&w, &r, d) < 0.0)
    };
    let candidate = optimum.min(cap);
    let m = w.iter().filter(|&&x| x > 0.0).count() as f64;
    let floor = config.ess_floor * m;
    let delta = if ess_after(&w, &r, candidate) >= floor {
        candidate
    } else {
        let lowest = basic.min(optimum);
        if ess_after(&w, &r, lowest) < floor {
            lowest
        } else {
            bisect(lowest, candidate, |d| ess_after(&w, &r, d) >= floor)
        }
    };
    Ok(LineStep {
        delta: S::of(delta),
        uninformative: false,
        capped,
    })
}

/// [`line_search_delta`] for member `k` of Ψ on a weighted sample.
pub fn line_search_update<S: Scalar>(
    sample: &WeightedSample<S>,
    k: usize,
    r_tilde: S,
    config: &LineSearchConfig,
) -> Result<LineStep<S>> {
    let regrets: Vec<S> = sample
        .draws()
        .iter()
        .map(|d| d.regrets.get(k).copied().unwrap_or(S::zero()))
        .collect();
    line_search_step(sample.weights(), &regrets, r_tilde, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unconstrained() -> LineSearchConfig {
        LineSearchConfig {
            enabled: true,
            cap_factor: 5.0,
            ess_floor: 0.0,
        }
    }

    #[test]
    fn constant_regret_hits_the_cap() {
        let d = line_search_delta(&[0.5f64, 0.5], &[1.0, 1.0], 4.0, &unconstrained()).unwrap();
        let basic = basic_update(1.0f64, 4.0).unwrap();
        assert!((d - 5.0 * basic).abs() < 1e-12);
    }

    #[test]
    fn symmetric_regrets_give_no_step() {
        let d = line_search_delta(&[0.5f64, 0.5], &[1.0, -1.0], 4.0, &unconstrained()).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn interior_minimizer() {
        // 0.75 e^{-2Δ} + 0.25 e^{2Δ} is minimized at Δ = ln(3)/4.
        let cfg = LineSearchConfig {
            cap_factor: 100.0,
            ..unconstrained()
        };
        let d = line_search_delta(&[0.75f64, 0.25], &[2.0, -2.0], 10.0, &cfg).unwrap();
        assert!((d - 3f64.ln() / 4.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn ess_floor_limits_the_step() {
        let w = vec![0.25f64; 4];
        let r = vec![3.0, 0.0, 0.0, 0.0];
        let cfg = LineSearchConfig {
            enabled: true,
            cap_factor: 1000.0,
            ess_floor: 0.9,
        };
        let d = line_search_delta(&w, &r, 4.0, &cfg).unwrap();
        let basic = basic_update(0.75f64, 4.0).unwrap();
        assert!(d >= basic - 1e-15);
        assert!(d < 1000.0 * basic);
    }
}
