use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CertificateInputs, IterationBound, SolverConfig};
use crate::deviations::{DeviationRecord, DeviationSet};
use crate::efg::{ScenarioSample, SuccinctGame};
use crate::error::{Error, Result};
use crate::hash::mix64;
use crate::sampler::{Profile, WeightedSample};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateStatus {
    Converged,
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaEntry {
    pub deviation: DeviationRecord,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDescriptor {
    pub exhaustive: bool,
    pub size: usize,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedProfile {
    pub profile: Profile,
    pub weight: f64,
}

/// Serializable result of a run: the distribution (a weighted profile
/// sample), the dual weights that produced it, and run statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCertificate {
    pub game: String,
    pub parameters: serde_json::Value,
    pub config: SolverConfig,
    pub status: CertificateStatus,
    pub effective_epsilon: f64,
    pub rounds: usize,
    /// Round whose state is reported.
    pub reported_round: usize,
    pub r_star: f64,
    pub initial_r_star: f64,
    pub iteration_bound: Option<IterationBound>,
    pub lambda: Vec<LambdaEntry>,
    pub scenarios: ScenarioDescriptor,
    pub sample: Vec<WeightedProfile>,
    pub ess: f64,
    pub expected_utilities: Vec<f64>,
    pub wall_ms: u64,
    pub peak_mem_bytes: u64,
}

impl EquilibriumCertificate {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new<S: Scalar, G: SuccinctGame + ?Sized>(
        game: &G,
        config: &SolverConfig,
        inputs: &CertificateInputs,
        psi: &DeviationSet,
        psi_len: usize,
        lambda: &[S],
        sample: &WeightedSample<S>,
        scenarios: &ScenarioSample,
    ) -> Self {
        Self {
            game: game.name(),
            parameters: game.parameters(),
            config: config.clone(),
            status: inputs.status,
            effective_epsilon: inputs.effective_epsilon,
            rounds: inputs.rounds,
            reported_round: inputs.best_round,
            r_star: inputs.r_star,
            initial_r_star: inputs.initial_r_star,
            iteration_bound: inputs.iteration_bound,
            lambda: (0..psi_len)
                .map(|k| LambdaEntry {
                    deviation: psi.get(k).to_record(),
                    lambda: lambda.get(k).map_or(0.0, |x| x.as_f64()),
                })
                .collect(),
            scenarios: ScenarioDescriptor {
                exhaustive: scenarios.exhaustive,
                size: scenarios.len(),
                seed: scenarios.seed,
            },
            sample: sample
                .draws()
                .iter()
                .zip(sample.weights())
                .map(|(d, w)| WeightedProfile {
                    profile: d.profile.clone(),
                    weight: w.as_f64(),
                })
                .collect(),
            ess: sample.ess().as_f64(),
            expected_utilities: sample.expected_utility().iter().map(|x| x.as_f64()).collect(),
            wall_ms: inputs.wall_ms,
            peak_mem_bytes: inputs.peak_mem_bytes,
        }
    }

    pub fn is_converged(&self) -> bool {
        self.status == CertificateStatus::Converged
    }

    /// Profiles and weights of the certified distribution.
    pub fn distribution(&self) -> (Vec<Profile>, Vec<f64>) {
        self.sample.iter().map(|wp| (wp.profile.clone(), wp.weight)).unzip()
    }
}

/// Draws one profile from the certified distribution.
pub fn moderator_sample(certificate: &EquilibriumCertificate, seed: u64) -> Result<Profile> {
    if certificate.sample.is_empty() {
        return Err(Error::Config("certificate holds no profiles".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed));
    let total: f64 = certificate.sample.iter().map(|wp| wp.weight).sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for wp in &certificate.sample {
        acc += wp.weight;
        if u < acc {
            return Ok(wp.profile.clone());
        }
    }
    Ok(certificate.sample.last().expect("nonempty").profile.clone())
}
