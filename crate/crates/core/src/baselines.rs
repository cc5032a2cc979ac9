//! Full-memory reference algorithms: deterministic weighted majority and
//! randomized multiplicative weights. Both keep one weight per expert.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{Seed, StreamRng};
use crate::stream::Forecaster;

/// Weights drop below this and the whole vector is rescaled by its inverse.
const RESCALE_FLOOR: f64 = f64::from_bits(511 << 52); // 2^-512

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub weights: Vec<f64>,
}

impl WeightVector {
    pub fn uniform(n: usize) -> Self {
        WeightVector { weights: vec![1.0; n] }
    }

    /// Total weight behind `(prediction 0, prediction 1)`.
    pub fn support(&self, predictions: &[bool]) -> Result<(f64, f64)> {
        if predictions.len() != self.weights.len() {
            return Err(Error::DimensionMismatch { expected: self.weights.len(), found: predictions.len() });
        }
        let mut zero = 0.0;
        let mut one = 0.0;
        for (&w, &p) in self.weights.iter().zip(predictions) {
            if p {
                one += w;
            } else {
                zero += w;
            }
        }
        if zero + one <= 0.0 {
            return Err(Error::Degenerate("all expert weights are zero"));
        }
        Ok((zero, one))
    }

    /// Multiply the weight of every expert that missed `outcome` by `factor`.
    pub fn penalize(&mut self, predictions: &[bool], outcome: bool, factor: f64) -> Result<()> {
        if predictions.len() != self.weights.len() {
            return Err(Error::DimensionMismatch { expected: self.weights.len(), found: predictions.len() });
        }
        for (w, &p) in self.weights.iter_mut().zip(predictions) {
            if p != outcome {
                *w *= factor;
            }
        }
        self.rescale();
        Ok(())
    }

    fn rescale(&mut self) {
        let max = self.weights.iter().copied().fold(0.0, f64::max);
        if max > 0.0 && max < RESCALE_FLOOR {
            let up = 1.0 / RESCALE_FLOOR;
            self.weights.iter_mut().for_each(|w| *w *= up);
        }
    }
}

/// Weighted-majority vote; ties go to 1.
pub fn wm_predict(wv: &WeightVector, predictions: &[bool]) -> Result<bool> {
    let (zero, one) = wv.support(predictions)?;
    Ok(one >= zero)
}

pub fn wm_update(wv: &mut WeightVector, predictions: &[bool], outcome: bool, beta: f64) -> Result<()> {
    wv.penalize(predictions, outcome, beta)
}

/// Probability that multiplicative weights predicts 1.
pub fn mw_probability_one(wv: &WeightVector, predictions: &[bool]) -> Result<f64> {
    let (zero, one) = wv.support(predictions)?;
    Ok(one / (zero + one))
}

/// Sample a prediction proportional to supporting weight.
pub fn mw_step<R: Rng + ?Sized>(wv: &WeightVector, predictions: &[bool], rng: &mut R) -> Result<bool> {
    let p_one = mw_probability_one(wv, predictions)?;
    Ok(rng.gen::<f64>() < p_one)
}

pub fn mw_update(wv: &mut WeightVector, predictions: &[bool], outcome: bool, eta: f64) -> Result<()> {
    wv.penalize(predictions, outcome, 1.0 - eta)
}

/// `min(1/2, sqrt(ln n / T))`.
pub fn default_learning_rate(n: usize, horizon: usize) -> f64 {
    ((n as f64).ln() / horizon as f64).sqrt().min(0.5)
}

/// Mistake envelope for halving weighted majority: `2.41 (M + log2 n) + 1`.
pub fn wm_mistake_bound(best_mistakes: usize, n: usize) -> f64 {
    2.41 * (best_mistakes as f64 + (n as f64).log2()) + 1.0
}

#[derive(Debug, Clone)]
pub struct WeightedMajority {
    weights: WeightVector,
    beta: f64,
}

impl WeightedMajority {
    pub fn new(n: usize, beta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("n must be positive".into()));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Parameter(format!("update factor {beta} outside (0,1)")));
        }
        Ok(WeightedMajority { weights: WeightVector::uniform(n), beta })
    }

    pub fn halving(n: usize) -> Result<Self> {
        Self::new(n, 0.5)
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }
}

impl Forecaster for WeightedMajority {
    fn name(&self) -> &str {
        "wm"
    }

    fn experts(&self) -> usize {
        self.weights.weights.len()
    }

    fn predict(&mut self, predictions: &[bool]) -> Result<bool> {
        wm_predict(&self.weights, predictions)
    }

    fn update(&mut self, predictions: &[bool], outcome: bool) -> Result<()> {
        wm_update(&mut self.weights, predictions, outcome, self.beta)
    }

    fn memory_slots(&self) -> usize {
        self.weights.weights.len()
    }
}

#[derive(Debug, Clone)]
pub struct MultiplicativeWeights {
    weights: WeightVector,
    eta: f64,
    rng: StreamRng,
}

impl MultiplicativeWeights {
    pub fn new(n: usize, eta: f64, seed: Seed) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("n must be positive".into()));
        }
        if !(0.0..1.0).contains(&eta) {
            return Err(Error::Parameter(format!("learning rate {eta} outside [0,1)")));
        }
        Ok(MultiplicativeWeights { weights: WeightVector::uniform(n), eta, rng: seed.substream("mw", 0) })
    }

    pub fn with_default_rate(n: usize, horizon: usize, seed: Seed) -> Result<Self> {
        Self::new(n, default_learning_rate(n, horizon), seed)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }
}

impl Forecaster for MultiplicativeWeights {
    fn name(&self) -> &str {
        "mw"
    }

    fn experts(&self) -> usize {
        self.weights.weights.len()
    }

    fn predict(&mut self, predictions: &[bool]) -> Result<bool> {
        mw_step(&self.weights, predictions, &mut self.rng)
    }

    fn update(&mut self, predictions: &[bool], outcome: bool) -> Result<()> {
        mw_update(&mut self.weights, predictions, outcome, self.eta)
    }

    fn memory_slots(&self) -> usize {
        self.weights.weights.len()
    }
}
