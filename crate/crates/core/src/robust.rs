//! The adversarially robust ensemble.
//!
//! `m` independent [`DiscPred`] instances run side by side, each with regret
//! target `R/4` and its own random substream. Every day the instances vote
//! and the ensemble answers with the private median of the `m` votes over
//! `{0, 1}`. The private median hides which experts sit in which pool; the
//! composition accountant tracks the privacy cost of `T` such calls.

use crate::error::{Error, Result};
use crate::pool::{
    ceil_tolerant, discpred_pool_size, log2_squared, validate_discpred_params, DiscPred, ParamViolation,
};
use crate::privacy::{compose, priv_median_index, Composition, PrivacyBudget};
use crate::rng::{Seed, StreamRng};
use crate::stream::Forecaster;

/// `m = max(1, ceil(c sqrt(T) log2(n T)))`.
pub fn ensemble_size(n: usize, horizon: usize, c: f64) -> Result<usize> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Parameter(format!("ensemble constant must be positive (got {c})")));
    }
    let raw = c * (horizon as f64).sqrt() * (n as f64 * horizon as f64).log2();
    Ok((ceil_tolerant(raw) as usize).max(1))
}

/// Per-call privacy parameter and what it composes to over `T` calls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonPlan {
    pub epsilon_per_call: f64,
    pub delta_prime: f64,
    pub calls: usize,
    pub composed: Composition,
}

/// `eps0 = c' / (sqrt(T) log2(n T))`, composed over `T` calls with
/// `delta' = (n T)^-2`. Fails if the composed epsilon exceeds `target`.
pub fn per_call_epsilon(n: usize, horizon: usize, c_prime: f64, target: f64) -> Result<EpsilonPlan> {
    if !(c_prime > 0.0) || !c_prime.is_finite() {
        return Err(Error::Parameter(format!("epsilon constant must be positive (got {c_prime})")));
    }
    let nt = n as f64 * horizon as f64;
    if nt < 2.0 {
        return Err(Error::Parameter("need n T >= 2".into()));
    }
    let epsilon_per_call = c_prime / ((horizon as f64).sqrt() * nt.log2());
    let delta_prime = 1.0 / (nt * nt);
    let composed = compose(epsilon_per_call, 0.0, horizon, delta_prime)?;
    if composed.epsilon > target {
        return Err(Error::Config(format!(
            "composed epsilon {} over {horizon} calls exceeds the target {target}",
            composed.epsilon
        )));
    }
    Ok(EpsilonPlan { epsilon_per_call, delta_prime, calls: horizon, composed })
}

/// Checks `R > 64 log2^2 n / T`, `M <= R^2 T / (128 log2^2 n)` and that
/// `R/4` is a valid DiscPred regret.
pub fn validate_robust_params(n: usize, horizon: usize, regret: f64, mistakes: usize) -> Vec<ParamViolation> {
    let mut out = Vec::new();
    let threshold = 64.0 * log2_squared(n) / horizon as f64;
    if !(regret > threshold) {
        out.push(ParamViolation::RegretTooSmall { regret, threshold });
    }
    let l2 = log2_squared(n);
    let allowed = if l2 == 0.0 { f64::INFINITY } else { regret * regret * horizon as f64 / (128.0 * l2) };
    if !(mistakes as f64 <= allowed) {
        out.push(ParamViolation::TooManyMistakes { mistakes, allowed });
    }
    let quarter = regret / 4.0;
    for v in validate_discpred_params(n, horizon, quarter, 0) {
        if let ParamViolation::RegretTooSmall { threshold, .. } = v {
            out.push(ParamViolation::InstanceRegretTooSmall { regret: quarter, threshold });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    /// Target average regret `R`; each instance runs at `R/4`.
    pub regret: f64,
    /// DiscPred pool-size constant.
    pub alpha: f64,
    /// Ensemble-size constant `c`.
    pub size_constant: f64,
    /// Per-call epsilon constant `c'`.
    pub epsilon_constant: f64,
    /// Largest acceptable composed epsilon.
    pub epsilon_target: f64,
    /// Test mode: every instance draws from the same substream.
    pub shared_instance_seed: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            regret: 0.1,
            alpha: 1.0,
            size_constant: 1.0,
            epsilon_constant: 1.0,
            epsilon_target: 1.0,
            shared_instance_seed: false,
        }
    }
}

/// Privacy accounting attached to a run report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyLedger {
    pub epsilon_per_call: f64,
    pub delta_prime: f64,
    pub calls: usize,
    pub composed_epsilon: f64,
    pub composed_delta: f64,
    pub epsilon_target: f64,
}

impl PrivacyLedger {
    pub fn within_target(&self) -> bool {
        self.composed_epsilon <= self.epsilon_target
    }
}

#[derive(Debug, Clone)]
pub struct RobustEnsemble {
    experts: usize,
    horizon: usize,
    instances: Vec<DiscPred>,
    instance_capacity: usize,
    budget: PrivacyBudget,
    epsilon_target: f64,
    rng: StreamRng,
}

impl RobustEnsemble {
    pub fn new(n: usize, horizon: usize, config: EnsembleConfig, seed: Seed) -> Result<Self> {
        let m = ensemble_size(n, horizon, config.size_constant)?;
        let plan = per_call_epsilon(n, horizon, config.epsilon_constant, config.epsilon_target)?;
        let k = discpred_pool_size(n, config.regret / 4.0, horizon, config.alpha)?;
        Self::with_parts(n, horizon, m, k, plan.epsilon_per_call, plan.delta_prime, config, seed)
    }

    /// Explicit ensemble size, pool size and per-call epsilon.
    #[allow(clippy::too_many_arguments)]
    pub fn with_parts(
        n: usize,
        horizon: usize,
        m: usize,
        k: usize,
        epsilon_per_call: f64,
        delta_prime: f64,
        config: EnsembleConfig,
        seed: Seed,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::Parameter("ensemble needs at least one instance".into()));
        }
        let budget = PrivacyBudget::new(epsilon_per_call, 0.0, delta_prime)?;
        let instances = (0..m)
            .map(|i| {
                let index = if config.shared_instance_seed { 0 } else { i as u64 };
                DiscPred::new(n, k, seed, index).map(DiscPred::without_audit)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RobustEnsemble {
            experts: n,
            horizon,
            instances,
            instance_capacity: k,
            budget,
            epsilon_target: config.epsilon_target,
            rng: seed.substream("privmed", 0),
        })
    }

    pub fn size(&self) -> usize {
        self.instances.len()
    }

    pub fn instance_capacity(&self) -> usize {
        self.instance_capacity
    }

    pub fn instances(&self) -> &[DiscPred] {
        &self.instances
    }

    pub fn budget(&self) -> &PrivacyBudget {
        &self.budget
    }

    /// Each instance's vote for the day.
    pub fn votes(&mut self, predictions: &[bool]) -> Result<Vec<bool>> {
        self.instances.iter_mut().map(|inst| inst.predict(predictions)).collect()
    }

    /// `[zeros, ones]` among the instance votes.
    pub fn vote_histogram(&mut self, predictions: &[bool]) -> Result<[u64; 2]> {
        let mut hist = [0u64; 2];
        for inst in &mut self.instances {
            hist[usize::from(inst.predict(predictions)?)] += 1;
        }
        Ok(hist)
    }

    /// Private median of the votes; spends one call of the budget.
    pub fn robust_predict(&mut self, predictions: &[bool]) -> Result<bool> {
        if predictions.len() != self.experts {
            return Err(Error::DimensionMismatch { expected: self.experts, found: predictions.len() });
        }
        if self.budget.calls >= self.horizon {
            return Err(Error::BudgetExhausted { calls: self.budget.calls });
        }
        let hist = self.vote_histogram(predictions)?;
        let out = priv_median_index(&hist, self.budget.epsilon_per_call, &mut self.rng)? == 1;
        self.budget.calls += 1;
        Ok(out)
    }

    /// Every instance sees the true outcome and updates on its own substream.
    pub fn robust_update(&mut self, predictions: &[bool], outcome: bool) -> Result<()> {
        for inst in &mut self.instances {
            inst.update(predictions, outcome)?;
        }
        Ok(())
    }

    pub fn ledger(&self) -> PrivacyLedger {
        let c = self.budget.composed();
        PrivacyLedger {
            epsilon_per_call: self.budget.epsilon_per_call,
            delta_prime: self.budget.delta_prime,
            calls: self.budget.calls,
            composed_epsilon: c.epsilon,
            composed_delta: c.delta,
            epsilon_target: self.epsilon_target,
        }
    }

    #[cfg(test)]
    fn reverse_instances(&mut self) {
        self.instances.reverse();
    }
}

impl Forecaster for RobustEnsemble {
    fn name(&self) -> &str {
        "robust"
    }

    fn experts(&self) -> usize {
        self.experts
    }

    fn predict(&mut self, predictions: &[bool]) -> Result<bool> {
        self.robust_predict(predictions)
    }

    fn update(&mut self, predictions: &[bool], outcome: bool) -> Result<()> {
        self.robust_update(predictions, outcome)
    }

    /// Instance slots plus the two vote counters.
    fn memory_slots(&self) -> usize {
        self.instances.iter().map(|i| i.memory_slots()).sum::<usize>() + 2
    }

    fn privacy_ledger(&self) -> Option<PrivacyLedger> {
        Some(self.ledger())
    }
}
