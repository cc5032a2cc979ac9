//! Memory-bounded pool algorithms.
//!
//! Both algorithms run an unweighted majority vote over a small pool of
//! experts and delete every pool member that misses the day's outcome. They
//! differ only in how an emptied pool is refilled:
//!
//! * [`DeterministicPool`] walks `[n]` in index order, `k` experts at a time,
//!   restarting from expert 0 once every index has been used.
//! * [`DiscPred`] samples `k` experts uniformly without replacement from its
//!   own random substream.
//!
//! Majority ties predict 1. A wrong prediction is therefore backed by at
//! least `ceil(|P|/2)` pool members, all of which get deleted, so a pool of
//! size `k` survives at most `floor(log2 k) + 1` mistakes.

use std::fmt;

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::rng::{Seed, StreamRng};
use crate::stream::{Forecaster, TraceRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolMode {
    Deterministic,
    Sampled,
}

/// A pool installation, logged for audit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefillEvent {
    /// Days completed before this pool started predicting.
    pub day: usize,
    /// Ordinal of the pool; the initial pool is 0.
    pub index: usize,
    pub members: Vec<usize>,
}

impl fmt::Display for RefillEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let members: Vec<String> = self.members.iter().map(usize::to_string).collect();
        write!(f, "{} {} {}", self.day, self.index, members.join(","))
    }
}

#[derive(Debug, Clone)]
pub struct PoolState {
    experts: usize,
    capacity: usize,
    mode: PoolMode,
    /// Sorted active expert indices.
    pool: Vec<usize>,
    /// Deterministic mode: the not-yet-used set is `next..experts`.
    next: usize,
    /// Number of times the not-yet-used set was (re)initialized to `[n]`.
    cycles: usize,
    refills: usize,
    day: usize,
    audit: Option<Vec<RefillEvent>>,
}

impl PoolState {
    /// Deterministic state with the first pool `0..k` already installed.
    pub fn deterministic(experts: usize, capacity: usize) -> Result<Self> {
        check_capacity(experts, capacity)?;
        let mut state = PoolState {
            experts,
            capacity,
            mode: PoolMode::Deterministic,
            pool: Vec::with_capacity(capacity),
            next: experts,
            cycles: 0,
            refills: 0,
            day: 0,
            audit: Some(Vec::new()),
        };
        state.install_next_block();
        Ok(state)
    }

    /// Sampled state with an initial pool drawn from `rng`.
    pub fn sampled(experts: usize, capacity: usize, rng: &mut StreamRng) -> Result<Self> {
        check_capacity(experts, capacity)?;
        let mut state = PoolState {
            experts,
            capacity,
            mode: PoolMode::Sampled,
            pool: Vec::with_capacity(capacity),
            next: 0,
            cycles: 0,
            refills: 0,
            day: 0,
            audit: Some(Vec::new()),
        };
        state.install_sample(rng);
        Ok(state)
    }

    /// Stop recording refill events.
    pub fn without_audit(mut self) -> Self {
        self.audit = None;
        self
    }

    pub fn experts(&self) -> usize {
        self.experts
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn mode(&self) -> PoolMode {
        self.mode
    }

    pub fn members(&self) -> &[usize] {
        &self.pool
    }

    /// Deterministic mode only: the indices not yet used in this cycle.
    pub fn remaining(&self) -> std::ops::Range<usize> {
        match self.mode {
            PoolMode::Deterministic => self.next..self.experts,
            PoolMode::Sampled => 0..0,
        }
    }

    pub fn cycles(&self) -> usize {
        self.cycles
    }

    pub fn refills(&self) -> usize {
        self.refills
    }

    pub fn refill_log(&self) -> &[RefillEvent] {
        self.audit.as_deref().unwrap_or(&[])
    }

    /// Slots held: pool indices plus the cursor and cycle counter
    /// (deterministic) or the resample counter (sampled).
    pub fn memory_slots(&self) -> usize {
        match self.mode {
            PoolMode::Deterministic => self.pool.len() + 2,
            PoolMode::Sampled => self.pool.len() + 1,
        }
    }

    fn log_install(&mut self) {
        let event = RefillEvent { day: self.day, index: self.refills, members: self.pool.clone() };
        if let Some(log) = self.audit.as_mut() {
            log.push(event);
        }
    }

    fn install_next_block(&mut self) {
        if self.next >= self.experts {
            self.next = 0;
            self.cycles += 1;
        }
        let end = (self.next + self.capacity).min(self.experts);
        self.pool.clear();
        self.pool.extend(self.next..end);
        self.next = end;
        self.log_install();
    }

    fn install_sample(&mut self, rng: &mut StreamRng) {
        self.pool.clear();
        self.pool.extend(sample(rng, self.experts, self.capacity));
        self.pool.sort_unstable();
        self.log_install();
    }

    fn delete_incorrect(&mut self, predictions: &[bool], outcome: bool) -> Result<()> {
        if predictions.len() != self.experts {
            return Err(Error::DimensionMismatch { expected: self.experts, found: predictions.len() });
        }
        self.pool.retain(|&i| predictions[i] == outcome);
        self.day += 1;
        Ok(())
    }
}

fn check_capacity(experts: usize, capacity: usize) -> Result<()> {
    if experts == 0 {
        return Err(Error::Parameter("n must be positive".into()));
    }
    if capacity == 0 || capacity > experts {
        return Err(Error::Parameter(format!("pool capacity {capacity} outside [1, {experts}]")));
    }
    Ok(())
}

/// Majority bit of the pool members' predictions; ties predict 1.
pub fn pool_predict(state: &PoolState, predictions: &[bool]) -> Result<bool> {
    if state.pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if predictions.len() != state.experts {
        return Err(Error::DimensionMismatch { expected: state.experts, found: predictions.len() });
    }
    let ones = state.pool.iter().filter(|&&i| predictions[i]).count();
    Ok(2 * ones >= state.pool.len())
}

/// Delete wrong pool members; an emptied pool takes the next `k` unused
/// indices, restarting the cycle from `[n]` when none are left.
pub fn det_pool_update(state: &mut PoolState, predictions: &[bool], outcome: bool) -> Result<()> {
    if state.mode != PoolMode::Deterministic {
        return Err(Error::Config("det_pool_update on a sampled pool".into()));
    }
    state.delete_incorrect(predictions, outcome)?;
    if state.pool.is_empty() {
        state.refills += 1;
        state.install_next_block();
    }
    Ok(())
}

/// Delete wrong pool members; an emptied pool is resampled from `rng`.
pub fn discpred_update(state: &mut PoolState, predictions: &[bool], outcome: bool, rng: &mut StreamRng) -> Result<()> {
    if state.mode != PoolMode::Sampled {
        return Err(Error::Config("discpred_update on a deterministic pool".into()));
    }
    state.delete_incorrect(predictions, outcome)?;
    if state.pool.is_empty() {
        state.refills += 1;
        state.install_sample(rng);
    }
    Ok(())
}

/// Rounds up, but treats values within 1e-9 (relative) of an integer as
/// that integer so `16384 / (0.05 * 4096)` gives 80, not 81.
pub(crate) fn ceil_tolerant(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

fn check_regret(regret: f64, horizon: usize) -> Result<()> {
    if horizon == 0 || !(regret > 0.0 && regret <= 1.0) {
        return Err(Error::Parameter(format!(
            "need 0 < R <= 1 and T >= 1 (got R = {regret}, T = {horizon})"
        )));
    }
    Ok(())
}

fn clamp_pool(raw: f64, n: usize) -> usize {
    if raw.is_nan() || raw < 1.0 {
        1
    } else if raw >= n as f64 {
        n
    } else {
        raw as usize
    }
}

/// `k = clamp(ceil(2 n M log2(n) / (R T)), 1, n)`.
pub fn det_pool_size(n: usize, mistake_bound: usize, regret: f64, horizon: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::Parameter("n must be positive".into()));
    }
    check_regret(regret, horizon)?;
    let raw = 2.0 * n as f64 * mistake_bound as f64 * (n as f64).log2() / (regret * horizon as f64);
    Ok(clamp_pool(ceil_tolerant(raw), n))
}

/// `k = clamp(ceil(alpha n log2(n T) / (R T)), 1, n)`.
pub fn discpred_pool_size(n: usize, regret: f64, horizon: usize, alpha: f64) -> Result<usize> {
    if n == 0 {
        return Err(Error::Parameter("n must be positive".into()));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Parameter(format!("alpha must be positive (got {alpha})")));
    }
    check_regret(regret, horizon)?;
    let raw = alpha * n as f64 * (n as f64 * horizon as f64).log2() / (regret * horizon as f64);
    Ok(clamp_pool(ceil_tolerant(raw), n))
}

/// Largest number of mistakes one pool of size `k` can cause.
pub fn pool_mistake_cap(k: usize) -> usize {
    (usize::BITS - k.leading_zeros()) as usize
}

/// Worst case for the deterministic pool when the best expert errs at most
/// `mistake_bound` times: at most `M + 1` cycles, `ceil(n/k)` pools per cycle.
pub fn det_mistake_bound(n: usize, k: usize, mistake_bound: usize) -> usize {
    (mistake_bound + 1) * n.div_ceil(k) * pool_mistake_cap(k)
}

/// Algorithm mistakes made while each logged pool was installed, in log
/// order. A pool installed after day `d` serves days `d+1` up to the next
/// installation.
pub fn mistakes_per_pool(refills: &[RefillEvent], trace: &[TraceRow]) -> Vec<usize> {
    let cum = |day: usize| if day == 0 { 0 } else { trace[day - 1].cum_mistakes_alg };
    let last = trace.len();
    refills
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let end = refills.get(i + 1).map_or(last, |next| next.day).min(last);
            cum(end) - cum(e.day.min(last))
        })
        .collect()
}

/// A precondition that a parameter set fails.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamViolation {
    /// Needs `R > threshold`.
    RegretTooSmall { regret: f64, threshold: f64 },
    /// Needs `M <= allowed`.
    TooManyMistakes { mistakes: usize, allowed: f64 },
    /// The per-instance regret `R/4` is not a valid DiscPred input.
    InstanceRegretTooSmall { regret: f64, threshold: f64 },
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamViolation::RegretTooSmall { regret, threshold } => {
                write!(f, "R = {regret} must exceed {threshold}")
            }
            ParamViolation::TooManyMistakes { mistakes, allowed } => {
                write!(f, "M = {mistakes} exceeds the allowed {allowed}")
            }
            ParamViolation::InstanceRegretTooSmall { regret, threshold } => {
                write!(f, "instance regret R/4 = {regret} must exceed {threshold}")
            }
        }
    }
}

pub(crate) fn log2_squared(n: usize) -> f64 {
    let l = (n as f64).log2();
    l * l
}

pub(crate) fn allowed_mistakes(n: usize, horizon: usize, regret: f64) -> f64 {
    let l2 = log2_squared(n);
    if l2 == 0.0 {
        f64::INFINITY
    } else {
        regret * regret * horizon as f64 / (128.0 * l2)
    }
}

/// Checks `R > 16 log2^2(n) / T` and `M <= R^2 T / (128 log2^2(n))`.
/// An empty list means the parameters are valid.
pub fn validate_discpred_params(n: usize, horizon: usize, regret: f64, mistakes: usize) -> Vec<ParamViolation> {
    let mut out = Vec::new();
    let threshold = 16.0 * log2_squared(n) / horizon as f64;
    if !(regret > threshold) {
        out.push(ParamViolation::RegretTooSmall { regret, threshold });
    }
    let allowed = allowed_mistakes(n, horizon, regret);
    if !(mistakes as f64 <= allowed) {
        out.push(ParamViolation::TooManyMistakes { mistakes, allowed });
    }
    out
}

/// The deterministic pool algorithm.
#[derive(Debug, Clone)]
pub struct DeterministicPool {
    state: PoolState,
}

impl DeterministicPool {
    pub fn new(n: usize, capacity: usize) -> Result<Self> {
        Ok(DeterministicPool { state: PoolState::deterministic(n, capacity)? })
    }

    /// Pool size from `det_pool_size(n, M, R, T)`.
    pub fn for_target(n: usize, mistake_bound: usize, regret: f64, horizon: usize) -> Result<Self> {
        Self::new(n, det_pool_size(n, mistake_bound, regret, horizon)?)
    }

    pub fn state(&self) -> &PoolState {
        &self.state
    }
}

impl Forecaster for DeterministicPool {
    fn name(&self) -> &str {
        "detpool"
    }

    fn experts(&self) -> usize {
        self.state.experts
    }

    fn predict(&mut self, predictions: &[bool]) -> Result<bool> {
        pool_predict(&self.state, predictions)
    }

    fn update(&mut self, predictions: &[bool], outcome: bool) -> Result<()> {
        det_pool_update(&mut self.state, predictions, outcome)
    }

    fn memory_slots(&self) -> usize {
        self.state.memory_slots()
    }

    fn refill_log(&self) -> &[RefillEvent] {
        self.state.refill_log()
    }
}

/// The randomized pool algorithm for oblivious streams.
#[derive(Debug, Clone)]
pub struct DiscPred {
    state: PoolState,
    rng: StreamRng,
}

impl DiscPred {
    /// Instance `index` draws from substream `("discpred", index)` of `seed`.
    pub fn new(n: usize, capacity: usize, seed: Seed, index: u64) -> Result<Self> {
        let mut rng = seed.substream("discpred", index);
        let state = PoolState::sampled(n, capacity, &mut rng)?;
        Ok(DiscPred { state, rng })
    }

    pub fn for_target(n: usize, regret: f64, horizon: usize, alpha: f64, seed: Seed) -> Result<Self> {
        Self::new(n, discpred_pool_size(n, regret, horizon, alpha)?, seed, 0)
    }

    pub fn without_audit(mut self) -> Self {
        self.state = self.state.without_audit();
        self
    }

    pub fn state(&self) -> &PoolState {
        &self.state
    }
}

impl Forecaster for DiscPred {
    fn name(&self) -> &str {
        "discpred"
    }

    fn experts(&self) -> usize {
        self.state.experts
    }

    fn predict(&mut self, predictions: &[bool]) -> Result<bool> {
        pool_predict(&self.state, predictions)
    }

    fn update(&mut self, predictions: &[bool], outcome: bool) -> Result<()> {
        discpred_update(&mut self.state, predictions, outcome, &mut self.rng)
    }

    fn memory_slots(&self) -> usize {
        self.state.memory_slots()
    }

    fn refill_log(&self) -> &[RefillEvent] {
        self.state.refill_log()
    }
}
