//! Builds any forecaster from a name and a flat parameter set.

use std::fmt;
use std::str::FromStr;

use crate::baselines::{default_learning_rate, MultiplicativeWeights, WeightedMajority};
use crate::error::{Error, Result};
use crate::pool::{det_pool_size, discpred_pool_size, DeterministicPool, DiscPred};
use crate::rng::Seed;
use crate::robust::{EnsembleConfig, RobustEnsemble};
use crate::stream::Forecaster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmKind {
    Wm,
    Mw,
    DetPool,
    DiscPred,
    Robust,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 5] =
        [AlgorithmKind::Wm, AlgorithmKind::Mw, AlgorithmKind::DetPool, AlgorithmKind::DiscPred, AlgorithmKind::Robust];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmKind::Wm => "wm",
            AlgorithmKind::Mw => "mw",
            AlgorithmKind::DetPool => "detpool",
            AlgorithmKind::DiscPred => "discpred",
            AlgorithmKind::Robust => "robust",
        }
    }

    pub fn is_deterministic(self) -> bool {
        matches!(self, AlgorithmKind::Wm | AlgorithmKind::DetPool)
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?} (expected wm, mw, detpool, discpred, robust)")))
    }
}

/// Every tunable constant; each algorithm reads the ones it needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmParams {
    pub regret: f64,
    pub mistake_bound: usize,
    pub alpha: f64,
    pub c: f64,
    pub c_prime: f64,
    pub beta: f64,
    /// `None` uses `min(1/2, sqrt(ln n / T))`.
    pub eta: Option<f64>,
    pub epsilon_target: f64,
    /// Overrides the computed pool size of detpool/discpred.
    pub pool_size: Option<usize>,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        AlgorithmParams {
            regret: 0.1,
            mistake_bound: 0,
            alpha: 1.0,
            c: 1.0,
            c_prime: 1.0,
            beta: 0.5,
            eta: None,
            epsilon_target: 1.0,
            pool_size: None,
        }
    }
}

impl AlgorithmParams {
    pub fn ensemble(&self) -> EnsembleConfig {
        EnsembleConfig {
            regret: self.regret,
            alpha: self.alpha,
            size_constant: self.c,
            epsilon_constant: self.c_prime,
            epsilon_target: self.epsilon_target,
            shared_instance_seed: false,
        }
    }

    /// Pool size the algorithm would use (`None` for full-memory ones).
    pub fn pool_size_for(&self, kind: AlgorithmKind, n: usize, horizon: usize) -> Result<Option<usize>> {
        Ok(match kind {
            AlgorithmKind::DetPool => Some(match self.pool_size {
                Some(k) => k,
                None => det_pool_size(n, self.mistake_bound, self.regret, horizon)?,
            }),
            AlgorithmKind::DiscPred => Some(match self.pool_size {
                Some(k) => k,
                None => discpred_pool_size(n, self.regret, horizon, self.alpha)?,
            }),
            AlgorithmKind::Robust => Some(discpred_pool_size(n, self.regret / 4.0, horizon, self.alpha)?),
            AlgorithmKind::Wm | AlgorithmKind::Mw => None,
        })
    }

    pub fn build(&self, kind: AlgorithmKind, n: usize, horizon: usize, seed: Seed) -> Result<Box<dyn Forecaster>> {
        Ok(match kind {
            AlgorithmKind::Wm => Box::new(WeightedMajority::new(n, self.beta)?),
            AlgorithmKind::Mw => {
                let eta = self.eta.unwrap_or_else(|| default_learning_rate(n, horizon));
                Box::new(MultiplicativeWeights::new(n, eta, seed)?)
            }
            AlgorithmKind::DetPool => {
                let k = self.pool_size_for(kind, n, horizon)?.unwrap_or(n);
                Box::new(DeterministicPool::new(n, k)?)
            }
            AlgorithmKind::DiscPred => {
                let k = self.pool_size_for(kind, n, horizon)?.unwrap_or(n);
                Box::new(DiscPred::new(n, k, seed, 0)?)
            }
            AlgorithmKind::Robust => Box::new(RobustEnsemble::new(n, horizon, self.ensemble(), seed)?),
        })
    }
}
