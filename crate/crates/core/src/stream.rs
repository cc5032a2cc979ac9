//! Shared domain types and the daily predict/reveal loop.
//!
//! A run is `T` cycles of: the algorithm sees the day's `n` expert bits and
//! predicts, the outcome is revealed, the algorithm updates. The harness
//! keeps an omniscient [`RegretLedger`] and a [`MemoryMeter`] fed by the
//! algorithm's self-reported slot count.

use crate::adversary::{AdversaryConfig, GeneratorSpec};
use crate::error::{Error, Result};
use crate::pool::RefillEvent;
use crate::robust::PrivacyLedger;
use crate::rng::Seed;

/// One day's expert predictions and the true outcome.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DayRecord {
    pub predictions: Vec<bool>,
    pub outcome: bool,
}

impl DayRecord {
    pub fn new(predictions: Vec<bool>, outcome: bool) -> Self {
        DayRecord { predictions, outcome }
    }

    pub fn experts(&self) -> usize {
        self.predictions.len()
    }
}

/// A stored `T x n` prediction matrix plus the outcome column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpertMatrix {
    experts: usize,
    predictions: Vec<bool>,
    outcomes: Vec<bool>,
}

impl ExpertMatrix {
    pub fn from_days(experts: usize, days: &[DayRecord]) -> Result<Self> {
        let mut predictions = Vec::with_capacity(experts * days.len());
        let mut outcomes = Vec::with_capacity(days.len());
        for day in days {
            if day.experts() != experts {
                return Err(Error::DimensionMismatch { expected: experts, found: day.experts() });
            }
            predictions.extend_from_slice(&day.predictions);
            outcomes.push(day.outcome);
        }
        Self::from_flat(experts, predictions, outcomes)
    }

    /// Row-major flat predictions, `outcomes.len()` rows of `experts` bits.
    pub fn from_flat(experts: usize, predictions: Vec<bool>, outcomes: Vec<bool>) -> Result<Self> {
        if experts == 0 {
            return Err(Error::Config("matrix needs at least one expert".into()));
        }
        if outcomes.is_empty() {
            return Err(Error::Config("matrix needs at least one day".into()));
        }
        if predictions.len() != experts * outcomes.len() {
            return Err(Error::DimensionMismatch {
                expected: experts * outcomes.len(),
                found: predictions.len(),
            });
        }
        Ok(ExpertMatrix { experts, predictions, outcomes })
    }

    pub fn experts(&self) -> usize {
        self.experts
    }

    pub fn horizon(&self) -> usize {
        self.outcomes.len()
    }

    pub fn row(&self, day: usize) -> &[bool] {
        &self.predictions[day * self.experts..(day + 1) * self.experts]
    }

    pub fn outcome(&self, day: usize) -> bool {
        self.outcomes[day]
    }

    pub fn outcomes(&self) -> &[bool] {
        &self.outcomes
    }

    pub fn day(&self, day: usize) -> DayRecord {
        DayRecord::new(self.row(day).to_vec(), self.outcome(day))
    }

    pub fn days(&self) -> impl Iterator<Item = DayRecord> + '_ {
        (0..self.horizon()).map(|t| self.day(t))
    }

    pub fn expert_mistakes(&self) -> Vec<usize> {
        let mut counts = vec![0; self.experts];
        for t in 0..self.horizon() {
            let outcome = self.outcome(t);
            for (c, &p) in counts.iter_mut().zip(self.row(t)) {
                *c += usize::from(p != outcome);
            }
        }
        counts
    }

    /// `(index, mistakes)` of the best expert; ties go to the lowest index.
    pub fn best_expert(&self) -> (usize, usize) {
        argmin_lowest(&self.expert_mistakes())
    }
}

/// Best expert of a raw matrix given as rows of predictions.
pub fn best_expert(rows: &[Vec<bool>], outcomes: &[bool]) -> Result<(usize, usize)> {
    let experts = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || experts == 0 {
        return Err(Error::Config("empty matrix".into()));
    }
    if rows.len() != outcomes.len() {
        return Err(Error::DimensionMismatch { expected: rows.len(), found: outcomes.len() });
    }
    let mut counts = vec![0usize; experts];
    for (row, &outcome) in rows.iter().zip(outcomes) {
        if row.len() != experts {
            return Err(Error::DimensionMismatch { expected: experts, found: row.len() });
        }
        for (c, &p) in counts.iter_mut().zip(row) {
            *c += usize::from(p != outcome);
        }
    }
    Ok(argmin_lowest(&counts))
}

pub(crate) fn argmin_lowest(values: &[usize]) -> (usize, usize) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

/// Where a run's days come from.
#[derive(Debug, Clone)]
pub enum StreamSource {
    Matrix(ExpertMatrix),
    Generator(GeneratorSpec),
    Adaptive(AdversaryConfig),
}

#[derive(Debug, Clone)]
pub struct StreamSpec {
    pub experts: usize,
    pub horizon: usize,
    /// Claimed upper bound on the best expert's mistakes.
    pub mistake_bound: usize,
    pub source: StreamSource,
}

impl StreamSpec {
    pub fn from_matrix(matrix: ExpertMatrix, mistake_bound: usize) -> Result<Self> {
        let spec = StreamSpec {
            experts: matrix.experts(),
            horizon: matrix.horizon(),
            mistake_bound,
            source: StreamSource::Matrix(matrix),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.experts == 0 || self.horizon == 0 {
            return Err(Error::Config("stream needs n >= 1 and T >= 1".into()));
        }
        if self.mistake_bound > self.horizon {
            return Err(Error::Config(format!(
                "mistake bound {} exceeds horizon {}",
                self.mistake_bound, self.horizon
            )));
        }
        if let StreamSource::Matrix(m) = &self.source {
            if m.experts() != self.experts {
                return Err(Error::DimensionMismatch { expected: self.experts, found: m.experts() });
            }
            if m.horizon() != self.horizon {
                return Err(Error::DimensionMismatch { expected: self.horizon, found: m.horizon() });
            }
        }
        Ok(())
    }

    /// Realize an oblivious stream. Adaptive sources have no matrix until
    /// they are played against an algorithm.
    pub fn materialize(&self, seed: Seed) -> Result<ExpertMatrix> {
        self.validate()?;
        match &self.source {
            StreamSource::Matrix(m) => Ok(m.clone()),
            StreamSource::Generator(g) => {
                let m = g.generate(self.experts, self.horizon, seed)?;
                if m.experts() != self.experts || m.horizon() != self.horizon {
                    return Err(Error::DimensionMismatch { expected: self.experts, found: m.experts() });
                }
                Ok(m)
            }
            StreamSource::Adaptive(_) => Err(Error::Config(
                "adaptive sources must be run with play_adaptive_game".into(),
            )),
        }
    }
}

/// An online prediction algorithm over `n` binary experts.
pub trait Forecaster {
    fn name(&self) -> &str;

    fn experts(&self) -> usize;

    fn predict(&mut self, predictions: &[bool]) -> Result<bool>;

    fn update(&mut self, predictions: &[bool], outcome: bool) -> Result<()>;

    /// Expert-slots currently held: stored indices plus per-expert counters.
    fn memory_slots(&self) -> usize;

    fn refill_log(&self) -> &[RefillEvent] {
        &[]
    }

    fn privacy_ledger(&self) -> Option<PrivacyLedger> {
        None
    }
}

impl<F: Forecaster + ?Sized> Forecaster for Box<F> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn experts(&self) -> usize {
        (**self).experts()
    }
    fn predict(&mut self, predictions: &[bool]) -> Result<bool> {
        (**self).predict(predictions)
    }
    fn update(&mut self, predictions: &[bool], outcome: bool) -> Result<()> {
        (**self).update(predictions, outcome)
    }
    fn memory_slots(&self) -> usize {
        (**self).memory_slots()
    }
    fn refill_log(&self) -> &[RefillEvent] {
        (**self).refill_log()
    }
    fn privacy_ledger(&self) -> Option<PrivacyLedger> {
        (**self).privacy_ledger()
    }
}

/// Harness-side mistake accounting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegretLedger {
    pub horizon: usize,
    pub day: usize,
    pub alg_mistakes: usize,
    pub expert_mistakes: Vec<usize>,
}

impl RegretLedger {
    pub fn new(experts: usize, horizon: usize) -> Self {
        RegretLedger { horizon, day: 0, alg_mistakes: 0, expert_mistakes: vec![0; experts] }
    }

    pub fn record(&mut self, predictions: &[bool], prediction: bool, outcome: bool) {
        self.day += 1;
        self.alg_mistakes += usize::from(prediction != outcome);
        for (c, &p) in self.expert_mistakes.iter_mut().zip(predictions) {
            *c += usize::from(p != outcome);
        }
    }

    pub fn best_index(&self) -> usize {
        argmin_lowest(&self.expert_mistakes).0
    }

    pub fn best_mistakes(&self) -> usize {
        argmin_lowest(&self.expert_mistakes).1
    }

    pub fn is_final(&self) -> bool {
        self.day == self.horizon
    }
}

/// `(algMistakes - bestMistakes) / T` of a finished run.
pub fn average_regret(ledger: &RegretLedger) -> Result<f64> {
    if !ledger.is_final() {
        return Err(Error::NotFinalized { day: ledger.day, horizon: ledger.horizon });
    }
    let diff = ledger.alg_mistakes as f64 - ledger.best_mistakes() as f64;
    Ok(diff / ledger.horizon as f64)
}

/// Running record of expert-slots in use.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MemoryMeter {
    pub slots_in_use: usize,
    pub peak_slots: usize,
    pub budget: Option<usize>,
    /// First day (1-based) on which the budget was exceeded.
    pub violated_on: Option<usize>,
}

impl MemoryMeter {
    pub fn with_budget(budget: Option<usize>) -> Self {
        MemoryMeter { budget, ..Default::default() }
    }

    pub fn record(&mut self, slots: usize, day: usize) {
        self.slots_in_use = slots;
        self.peak_slots = self.peak_slots.max(slots);
        if let Some(b) = self.budget {
            if slots > b && self.violated_on.is_none() {
                self.violated_on = Some(day);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// 1-based day.
    pub day: usize,
    pub prediction: bool,
    pub outcome: bool,
    pub cum_mistakes_alg: usize,
    pub cum_mistakes_best: usize,
    /// Regret so far, normalized by days elapsed.
    pub avg_regret: f64,
    pub memory_slots: usize,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub algorithm: String,
    pub seed: Seed,
    pub ledger: RegretLedger,
    pub meter: MemoryMeter,
    pub trace: Vec<TraceRow>,
    pub refills: Vec<RefillEvent>,
    pub privacy: Option<PrivacyLedger>,
}

impl RunReport {
    pub fn mistakes(&self) -> usize {
        self.ledger.alg_mistakes
    }

    pub fn average_regret(&self) -> Result<f64> {
        average_regret(&self.ledger)
    }

    pub fn budget_violated(&self) -> bool {
        self.meter.violated_on.is_some()
    }
}

/// Step-by-step driver shared by [`run_stream`] and the adaptive game.
pub(crate) struct Session {
    ledger: RegretLedger,
    meter: MemoryMeter,
    trace: Vec<TraceRow>,
}

impl Session {
    pub(crate) fn new<F: Forecaster + ?Sized>(
        algorithm: &F,
        experts: usize,
        horizon: usize,
        budget: Option<usize>,
    ) -> Result<Self> {
        if algorithm.experts() != experts {
            return Err(Error::DimensionMismatch { expected: experts, found: algorithm.experts() });
        }
        let mut meter = MemoryMeter::with_budget(budget);
        meter.record(algorithm.memory_slots(), 0);
        Ok(Session { ledger: RegretLedger::new(experts, horizon), meter, trace: Vec::with_capacity(horizon) })
    }

    pub(crate) fn day(&self) -> usize {
        self.ledger.day
    }

    pub(crate) fn predict<F: Forecaster + ?Sized>(&mut self, algorithm: &mut F, day: &DayRecord) -> Result<bool> {
        let n = self.ledger.expert_mistakes.len();
        if day.experts() != n {
            return Err(Error::DimensionMismatch { expected: n, found: day.experts() });
        }
        let prediction = algorithm.predict(&day.predictions)?;
        self.meter.record(algorithm.memory_slots(), self.ledger.day + 1);
        Ok(prediction)
    }

    pub(crate) fn reveal<F: Forecaster + ?Sized>(
        &mut self,
        algorithm: &mut F,
        day: &DayRecord,
        prediction: bool,
    ) -> Result<()> {
        algorithm.update(&day.predictions, day.outcome)?;
        self.ledger.record(&day.predictions, prediction, day.outcome);
        let t = self.ledger.day;
        let slots = algorithm.memory_slots();
        self.meter.record(slots, t);
        let best = self.ledger.best_mistakes();
        self.trace.push(TraceRow {
            day: t,
            prediction,
            outcome: day.outcome,
            cum_mistakes_alg: self.ledger.alg_mistakes,
            cum_mistakes_best: best,
            avg_regret: (self.ledger.alg_mistakes as f64 - best as f64) / t as f64,
            memory_slots: slots,
        });
        Ok(())
    }

    pub(crate) fn finish<F: Forecaster + ?Sized>(self, algorithm: &F, seed: Seed) -> RunReport {
        RunReport {
            algorithm: algorithm.name().to_string(),
            seed,
            ledger: self.ledger,
            meter: self.meter,
            trace: self.trace,
            refills: algorithm.refill_log().to_vec(),
            privacy: algorithm.privacy_ledger(),
        }
    }
}

/// Run an algorithm over an oblivious stream.
pub fn run_stream<F: Forecaster + ?Sized>(algorithm: &mut F, stream: &StreamSpec, seed: Seed) -> Result<RunReport> {
    run_stream_with_budget(algorithm, stream, seed, None)
}

pub fn run_stream_with_budget<F: Forecaster + ?Sized>(
    algorithm: &mut F,
    stream: &StreamSpec,
    seed: Seed,
    budget: Option<usize>,
) -> Result<RunReport> {
    let matrix = stream.materialize(seed)?;
    run_matrix(algorithm, &matrix, seed, budget)
}

/// Run over a stored matrix directly.
pub fn run_matrix<F: Forecaster + ?Sized>(
    algorithm: &mut F,
    matrix: &ExpertMatrix,
    seed: Seed,
    budget: Option<usize>,
) -> Result<RunReport> {
    let mut session = Session::new(algorithm, matrix.experts(), matrix.horizon(), budget)?;
    for t in 0..matrix.horizon() {
        let day = matrix.day(t);
        let prediction = session.predict(algorithm, &day)?;
        session.reveal(algorithm, &day, prediction)?;
    }
    Ok(session.finish(algorithm, seed))
}
