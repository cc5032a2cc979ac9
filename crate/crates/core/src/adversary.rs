//! Hard instances, the reduction-based distinguisher and the adaptive game.
//!
//! BiasDetect instances are `T x n` bit matrices that are either all fair
//! coins (NO) or fair except for one biased column (YES). Read as an experts
//! stream with outcome 1 every day, a bit says whether that expert was right.
//!
//! The adaptive game lets an adversary pick each day's expert predictions
//! and outcome after seeing the algorithm's earlier predictions. The harness
//! replays every transcript against a fresh adversary to check that the
//! commitments depend on nothing else.

use std::fmt;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{Seed, StreamRng};
use crate::stream::{run_matrix, DayRecord, ExpertMatrix, Forecaster, RunReport, Session, StreamSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Yes,
    No,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Yes => "YES",
            Label::No => "NO",
        })
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "YES" => Ok(Label::Yes),
            "NO" => Ok(Label::No),
            _ => Err(Error::Config(format!("unknown label {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasDetectInstance {
    /// Outcomes are 1 on every day.
    pub matrix: ExpertMatrix,
    pub label: Label,
    pub planted: Option<usize>,
    /// The planted column is Bernoulli(1/2 + epsilon_bias); 0 for NO.
    pub epsilon_bias: f64,
    pub seed: u64,
}

/// Default bias of the padded construction.
pub const PADDED_BIAS: f64 = 0.25;

fn check_dims(n: usize, horizon: usize) -> Result<()> {
    if n == 0 || horizon == 0 {
        return Err(Error::Parameter("need n >= 1 and T >= 1".into()));
    }
    Ok(())
}

fn check_planted(n: usize, planted: usize) -> Result<()> {
    if planted >= n {
        return Err(Error::Parameter(format!("planted column {planted} outside [0, {n})")));
    }
    Ok(())
}

/// Fill `days` rows; column `planted` is Bernoulli(p), the rest fair.
fn draw_rows(n: usize, days: usize, planted: Option<(usize, f64)>, rng: &mut StreamRng, out: &mut Vec<bool>) {
    for _ in 0..days {
        for i in 0..n {
            let bit = match planted {
                Some((l, p)) if l == i => rng.gen_bool(p),
                _ => rng.gen(),
            };
            out.push(bit);
        }
    }
}

fn all_ones(horizon: usize) -> Vec<bool> {
    vec![true; horizon]
}

fn pick_planted(n: usize, planted: Option<usize>, seed: Seed) -> Result<usize> {
    match planted {
        Some(l) => {
            check_planted(n, l)?;
            Ok(l)
        }
        None => Ok(seed.substream("planted-column", 0).gen_range(0..n)),
    }
}

/// Every entry a fair coin.
pub fn gen_no(n: usize, horizon: usize, seed: Seed) -> Result<BiasDetectInstance> {
    check_dims(n, horizon)?;
    let mut rng = seed.substream("gen-no", 0);
    let mut bits = Vec::with_capacity(n * horizon);
    draw_rows(n, horizon, None, &mut rng, &mut bits);
    Ok(BiasDetectInstance {
        matrix: ExpertMatrix::from_flat(n, bits, all_ones(horizon))?,
        label: Label::No,
        planted: None,
        epsilon_bias: 0.0,
        seed: seed.value(),
    })
}

/// Column `L` is Bernoulli(1 - M/T), all others fair. `L` defaults to a
/// uniform draw from the seed.
pub fn gen_yes(n: usize, horizon: usize, mistakes: usize, planted: Option<usize>, seed: Seed) -> Result<BiasDetectInstance> {
    check_dims(n, horizon)?;
    if mistakes > horizon {
        return Err(Error::Parameter(format!("M = {mistakes} exceeds T = {horizon}")));
    }
    let l = pick_planted(n, planted, seed)?;
    let p = 1.0 - mistakes as f64 / horizon as f64;
    let mut rng = seed.substream("gen-yes", 0);
    let mut bits = Vec::with_capacity(n * horizon);
    draw_rows(n, horizon, Some((l, p)), &mut rng, &mut bits);
    Ok(BiasDetectInstance {
        matrix: ExpertMatrix::from_flat(n, bits, all_ones(horizon))?,
        label: Label::Yes,
        planted: Some(l),
        epsilon_bias: p - 0.5,
        seed: seed.value(),
    })
}

/// Length of the unpadded prefix, `floor(R T)` with float slack.
pub fn padded_prefix(regret: f64, horizon: usize) -> Result<usize> {
    let rt = regret * horizon as f64;
    if !rt.is_finite() {
        return Err(Error::Parameter(format!("R T = {rt} is not finite")));
    }
    let nearest = rt.round();
    let prefix = if (rt - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) { nearest } else { rt.floor() };
    if prefix < 1.0 {
        return Err(Error::Parameter(format!("R T = {rt} is below 1")));
    }
    Ok((prefix as usize).min(horizon))
}

/// A BiasDetect instance on the first `floor(R T)` days followed by all-zero
/// rows, so every expert is wrong on the padding.
pub fn gen_padded(
    n: usize,
    horizon: usize,
    regret: f64,
    bias: f64,
    case: Label,
    planted: Option<usize>,
    seed: Seed,
) -> Result<BiasDetectInstance> {
    check_dims(n, horizon)?;
    if !(bias > 0.0 && bias <= 0.5) {
        return Err(Error::Parameter(format!("bias {bias} outside (0, 1/2]")));
    }
    let prefix = padded_prefix(regret, horizon)?;
    let column = match case {
        Label::Yes => Some(pick_planted(n, planted, seed)?),
        Label::No => None,
    };
    let mut rng = seed.substream("gen-padded", 0);
    let mut bits = Vec::with_capacity(n * horizon);
    draw_rows(n, prefix, column.map(|l| (l, 0.5 + bias)), &mut rng, &mut bits);
    bits.resize(n * horizon, false);
    Ok(BiasDetectInstance {
        matrix: ExpertMatrix::from_flat(n, bits, all_ones(horizon))?,
        label: case,
        planted: column,
        epsilon_bias: if column.is_some() { bias } else { 0.0 },
        seed: seed.value(),
    })
}

/// How the planted expert of [`gen_planted`] errs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlantedNoise {
    /// Wrong on exactly this many uniformly chosen days.
    ExactMistakes(usize),
    /// Right with probability 1/2 + bias on each day.
    Bias(f64),
}

/// Fair outcomes and fair experts, except expert `L` which tracks the
/// outcome up to the given noise.
pub fn gen_planted(n: usize, horizon: usize, planted: Option<usize>, noise: PlantedNoise, seed: Seed) -> Result<ExpertMatrix> {
    check_dims(n, horizon)?;
    let l = pick_planted(n, planted, seed)?;
    let mut rng = seed.substream("gen-planted", 0);
    let mut wrong = vec![false; horizon];
    match noise {
        PlantedNoise::ExactMistakes(m) => {
            if m > horizon {
                return Err(Error::Parameter(format!("M = {m} exceeds T = {horizon}")));
            }
            for t in sample(&mut rng, horizon, m) {
                wrong[t] = true;
            }
        }
        PlantedNoise::Bias(b) => {
            if !(0.0..=0.5).contains(&b) {
                return Err(Error::Parameter(format!("bias {b} outside [0, 1/2]")));
            }
            for w in &mut wrong {
                *w = !rng.gen_bool(0.5 + b);
            }
        }
    }
    let mut bits = Vec::with_capacity(n * horizon);
    let mut outcomes = Vec::with_capacity(horizon);
    for &w in &wrong {
        let outcome: bool = rng.gen();
        for i in 0..n {
            bits.push(if i == l { outcome != w } else { rng.gen() });
        }
        outcomes.push(outcome);
    }
    ExpertMatrix::from_flat(n, bits, outcomes)
}

/// Recipe for an oblivious generated stream.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    Planted { planted: Option<usize>, noise: PlantedNoise },
    No,
    Yes { mistakes: usize, planted: Option<usize> },
    Padded { regret: f64, bias: f64, case: Label, planted: Option<usize> },
}

impl GeneratorSpec {
    pub fn generate(&self, n: usize, horizon: usize, seed: Seed) -> Result<ExpertMatrix> {
        match *self {
            GeneratorSpec::Planted { planted, noise } => gen_planted(n, horizon, planted, noise, seed),
            GeneratorSpec::No => Ok(gen_no(n, horizon, seed)?.matrix),
            GeneratorSpec::Yes { mistakes, planted } => Ok(gen_yes(n, horizon, mistakes, planted, seed)?.matrix),
            GeneratorSpec::Padded { regret, bias, case, planted } => {
                Ok(gen_padded(n, horizon, regret, bias, case, planted, seed)?.matrix)
            }
        }
    }
}

/// The instance as a stored-matrix stream; the claimed mistake bound is the
/// best column's realized count.
pub fn to_expert_stream(instance: &BiasDetectInstance) -> Result<StreamSpec> {
    let (_, best) = instance.matrix.best_expert();
    StreamSpec::from_matrix(instance.matrix.clone(), best)
}

pub fn default_threshold(horizon: usize) -> f64 {
    0.75 * horizon as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distinction {
    pub label: Label,
    pub correct_days: usize,
}

/// Run a fresh algorithm on the instance and answer YES iff it was right on
/// at least `threshold` days.
pub fn distinguish<F, A>(make_algorithm: A, instance: &BiasDetectInstance, threshold: f64) -> Result<Distinction>
where
    F: Forecaster,
    A: FnOnce(usize, usize) -> Result<F>,
{
    let horizon = instance.matrix.horizon();
    if !(threshold > 0.0 && threshold < horizon as f64) {
        return Err(Error::Parameter(format!("threshold {threshold} outside (0, {horizon})")));
    }
    let mut algorithm = make_algorithm(instance.matrix.experts(), horizon)?;
    let report = run_matrix(&mut algorithm, &instance.matrix, Seed(instance.seed), None)?;
    let correct_days = horizon - report.mistakes();
    let label = if correct_days as f64 >= threshold { Label::Yes } else { Label::No };
    Ok(Distinction { label, correct_days })
}

/// One completed day of an adaptive game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameDay {
    pub record: DayRecord,
    pub prediction: bool,
}

/// A player choosing each day's experts and outcome from the past.
pub trait Adversary {
    fn name(&self) -> &str;

    /// Commit the next day, given every completed day so far.
    fn commit(&mut self, history: &[GameDay]) -> Result<DayRecord>;

    /// Learn the algorithm's prediction for the day just committed.
    fn observe(&mut self, _day: &GameDay) {}
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdversaryKind {
    ObliviousReplay(ExpertMatrix),
    AgreementTracker,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryConfig {
    pub kind: AdversaryKind,
    pub best_expert: usize,
    pub mistake_budget: usize,
    /// Number of top-agreement experts treated as the suspected pool.
    pub suspected_pool: usize,
}

impl AdversaryConfig {
    pub fn agreement_tracker(best_expert: usize, suspected_pool: usize) -> Self {
        AdversaryConfig { kind: AdversaryKind::AgreementTracker, best_expert, mistake_budget: 0, suspected_pool }
    }

    /// Replay a stored matrix; the designated expert is its best column.
    pub fn oblivious_replay(matrix: ExpertMatrix) -> Self {
        let (best_expert, mistake_budget) = matrix.best_expert();
        AdversaryConfig { kind: AdversaryKind::ObliviousReplay(matrix), best_expert, mistake_budget, suspected_pool: 0 }
    }

    pub fn validate(&self, n: usize, horizon: usize) -> Result<()> {
        if self.best_expert >= n {
            return Err(Error::Config(format!("best expert {} outside [0, {n})", self.best_expert)));
        }
        match &self.kind {
            AdversaryKind::ObliviousReplay(m) => {
                if m.experts() != n || m.horizon() != horizon {
                    return Err(Error::Config(format!(
                        "replay matrix is {}x{}, game is {}x{}",
                        m.horizon(),
                        m.experts(),
                        horizon,
                        n
                    )));
                }
            }
            AdversaryKind::AgreementTracker => {
                if self.suspected_pool == 0 || self.suspected_pool + 1 > n {
                    return Err(Error::Config(format!(
                        "suspected pool size {} outside [1, {}]",
                        self.suspected_pool,
                        n.saturating_sub(1)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self, n: usize, horizon: usize, seed: Seed) -> Result<Box<dyn Adversary>> {
        self.validate(n, horizon)?;
        Ok(match &self.kind {
            AdversaryKind::ObliviousReplay(m) => Box::new(ObliviousReplay { matrix: m.clone() }),
            AdversaryKind::AgreementTracker => Box::new(AgreementTracker {
                config: self.clone(),
                scores: vec![0; n],
                rng: seed.substream("agreement-tracker", 0),
            }),
        })
    }
}

pub struct ObliviousReplay {
    matrix: ExpertMatrix,
}

impl Adversary for ObliviousReplay {
    fn name(&self) -> &str {
        "oblivious-replay"
    }

    fn commit(&mut self, history: &[GameDay]) -> Result<DayRecord> {
        let t = history.len();
        if t >= self.matrix.horizon() {
            return Err(Error::Config("replay matrix exhausted".into()));
        }
        Ok(self.matrix.day(t))
    }
}

/// Scores experts by how often they agreed with the algorithm, then makes
/// the outcome disagree with the majority of the top-scoring experts.
pub struct AgreementTracker {
    config: AdversaryConfig,
    scores: Vec<u64>,
    rng: StreamRng,
}

impl AgreementTracker {
    pub fn scores(&self) -> &[u64] {
        &self.scores
    }
}

impl Adversary for AgreementTracker {
    fn name(&self) -> &str {
        "agreement-tracker"
    }

    fn commit(&mut self, _history: &[GameDay]) -> Result<DayRecord> {
        agreement_tracker_step(&self.scores, &self.config, &mut self.rng)
    }

    fn observe(&mut self, day: &GameDay) {
        for (s, &p) in self.scores.iter_mut().zip(&day.record.predictions) {
            *s += u64::from(p == day.prediction);
        }
    }
}

/// Indices other than `excluded`, highest score first, ties to the lowest
/// index, truncated to `s`.
pub fn top_scored(scores: &[u64], excluded: usize, s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&i| i != excluded).collect();
    idx.sort_by(|&a, &b| scores[b].cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(s);
    idx
}

/// Every expert except `b` draws a fair bit; `b` and the outcome are then
/// set against the majority (ties count as 1) of the top-`s` experts.
pub fn agreement_tracker_step<R: Rng + ?Sized>(scores: &[u64], config: &AdversaryConfig, rng: &mut R) -> Result<DayRecord> {
    let n = scores.len();
    let b = config.best_expert;
    let s = config.suspected_pool;
    if b >= n {
        return Err(Error::Config(format!("best expert {b} outside [0, {n})")));
    }
    if s == 0 || s + 1 > n {
        return Err(Error::Config(format!("suspected pool size {s} outside [1, {}]", n.saturating_sub(1))));
    }
    let mut predictions: Vec<bool> = (0..n).map(|i| i != b && rng.gen()).collect();
    let suspects = top_scored(scores, b, s);
    let ones = suspects.iter().filter(|&&i| predictions[i]).count();
    let majority = 2 * ones >= suspects.len();
    predictions[b] = !majority;
    Ok(DayRecord::new(predictions, !majority))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameTranscript {
    pub adversary: String,
    pub config: AdversaryConfig,
    pub algorithm: String,
    pub seed: Seed,
    pub adversary_seed: Seed,
    pub days: Vec<GameDay>,
}

/// Play `T` days of the adaptive game. The adversary's seed is derived from
/// `seed`; the algorithm brings its own randomness.
pub fn play_adaptive_game<F: Forecaster + ?Sized>(
    algorithm: &mut F,
    config: &AdversaryConfig,
    n: usize,
    horizon: usize,
    seed: Seed,
) -> Result<(GameTranscript, RunReport)> {
    let adversary_seed = seed.child("adversary", 0);
    let (days, report, name) =
        play_game_with(algorithm, |s| config.build(n, horizon, s), n, horizon, seed, adversary_seed)?;
    let transcript = GameTranscript {
        adversary: name,
        config: config.clone(),
        algorithm: report.algorithm.clone(),
        seed,
        adversary_seed,
        days,
    };
    let b = config.best_expert;
    if report.ledger.expert_mistakes[b] > config.mistake_budget {
        return Err(Error::Config(format!(
            "designated expert {b} made {} mistakes, budget {}",
            report.ledger.expert_mistakes[b], config.mistake_budget
        )));
    }
    Ok((transcript, report))
}

/// Game loop over any adversary factory, followed by a causality replay
/// against a second adversary built from the same seed.
pub fn play_game_with<F, A>(
    algorithm: &mut F,
    mut make_adversary: A,
    n: usize,
    horizon: usize,
    seed: Seed,
    adversary_seed: Seed,
) -> Result<(Vec<GameDay>, RunReport, String)>
where
    F: Forecaster + ?Sized,
    A: FnMut(Seed) -> Result<Box<dyn Adversary>>,
{
    let mut adversary = make_adversary(adversary_seed)?;
    let mut session = Session::new(algorithm, n, horizon, None)?;
    let mut days: Vec<GameDay> = Vec::with_capacity(horizon);
    while session.day() < horizon {
        let record = adversary.commit(&days)?;
        if record.experts() != n {
            return Err(Error::DimensionMismatch { expected: n, found: record.experts() });
        }
        let prediction = session.predict(algorithm, &record)?;
        session.reveal(algorithm, &record, prediction)?;
        let day = GameDay { record, prediction };
        adversary.observe(&day);
        days.push(day);
    }
    verify_causality(&days, make_adversary(adversary_seed)?)?;
    let name = adversary.name().to_string();
    Ok((days, session.finish(algorithm, seed), name))
}

/// Feed the transcript's history to a fresh adversary and require it to
/// commit to exactly the recorded days.
pub fn verify_causality(days: &[GameDay], mut fresh: Box<dyn Adversary>) -> Result<()> {
    for (t, day) in days.iter().enumerate() {
        let again = fresh.commit(&days[..t])?;
        if again != day.record {
            return Err(Error::Causality {
                day: t + 1,
                detail: "commitment is not a function of the history".into(),
            });
        }
        fresh.observe(day);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::{DeterministicPool, DiscPred};
    use crate::stream::run_stream;
    use std::cell::Cell;
    use std::rc::Rc;

    fn column_ones(m: &ExpertMatrix, col: usize) -> usize {
        (0..m.horizon()).filter(|&t| m.row(t)[col]).count()
    }

    #[test]
    fn gen_no_is_fair_and_labelled() {
        let inst = gen_no(200, 1000, Seed(3)).unwrap();
        assert_eq!(inst.label, Label::No);
        assert_eq!(inst.planted, None);
        assert!(inst.matrix.outcomes().iter().all(|&o| o));
        let total: usize = (0..200).map(|c| column_ones(&inst.matrix, c)).sum();
        let mean = total as f64 / 200.0;
        let slack = 3.0 * (1000.0f64 / 4.0).sqrt() / 200f64.sqrt();
        assert!((mean - 500.0).abs() <= slack, "mean {mean}");
        assert_eq!(gen_no(200, 1000, Seed(3)).unwrap(), inst);
        assert_eq!(gen_no(1, 1, Seed(0)).unwrap().matrix.horizon(), 1);
    }

    #[test]
    fn gen_yes_column_moments() {
        let mut sum = 0.0;
        for s in 0..100 {
            let inst = gen_yes(4, 1000, 100, Some(2), Seed(s)).unwrap();
            sum += column_ones(&inst.matrix, 2) as f64;
        }
        let sd = (1000.0f64 * 0.9 * 0.1).sqrt();
        assert!((sum / 100.0 - 900.0).abs() <= 3.0 * sd / 10.0);
    }

    #[test]
    fn gen_yes_edges() {
        let inst = gen_yes(5, 64, 0, None, Seed(9)).unwrap();
        let l = inst.planted.unwrap();
        assert_eq!(column_ones(&inst.matrix, l), 64);
        assert_eq!(inst.matrix.best_expert(), (l, 0));
        let spec = to_expert_stream(&inst).unwrap();
        assert_eq!(spec.mistake_bound, 0);
        assert!(gen_yes(5, 10, 11, None, Seed(0)).is_err());
        assert!(gen_yes(5, 10, 1, Some(5), Seed(0)).is_err());
        assert_eq!(gen_yes(5, 10, 5, Some(0), Seed(0)).unwrap().epsilon_bias, 0.0);
    }

    #[test]
    fn padded_structure() {
        let inst = gen_padded(6, 400, 0.25, PADDED_BIAS, Label::No, None, Seed(1)).unwrap();
        for t in 100..400 {
            assert!(inst.matrix.row(t).iter().all(|&b| !b));
        }
        for c in 0..6 {
            assert!(column_ones(&inst.matrix, c) <= 100);
        }
        assert!(gen_padded(6, 10, 0.05, PADDED_BIAS, Label::No, None, Seed(1)).is_err());
        assert_eq!(padded_prefix(0.1, 30).unwrap(), 3);
    }

    #[test]
    fn padded_yes_moment() {
        let mut sum = 0.0;
        for s in 0..100 {
            let inst = gen_padded(3, 400, 0.25, 0.25, Label::Yes, Some(1), Seed(s)).unwrap();
            sum += column_ones(&inst.matrix, 1) as f64;
        }
        let sd = (100.0f64 * 0.75 * 0.25).sqrt();
        assert!((sum / 100.0 - 75.0).abs() <= 3.0 * sd / 10.0);
    }

    #[test]
    fn planted_exact_mistakes() {
        let m = gen_planted(16, 200, Some(5), PlantedNoise::ExactMistakes(7), Seed(2)).unwrap();
        assert_eq!(m.expert_mistakes()[5], 7);
        let m = gen_planted(16, 200, None, PlantedNoise::ExactMistakes(0), Seed(2)).unwrap();
        assert_eq!(m.best_expert().1, 0);
    }

    struct Always(bool, usize);

    impl Forecaster for Always {
        fn name(&self) -> &str {
            "always"
        }
        fn experts(&self) -> usize {
            self.1
        }
        fn predict(&mut self, _: &[bool]) -> Result<bool> {
            Ok(self.0)
        }
        fn update(&mut self, _: &[bool], _: bool) -> Result<()> {
            Ok(())
        }
        fn memory_slots(&self) -> usize {
            0
        }
    }

    #[test]
    fn distinguisher_edges() {
        let inst = gen_yes(8, 64, 0, None, Seed(4)).unwrap();
        let d = distinguish(|n, _| Ok(Always(false, n)), &inst, 48.0).unwrap();
        assert_eq!(d, Distinction { label: Label::No, correct_days: 0 });
        let d = distinguish(|n, _| crate::baselines::WeightedMajority::halving(n), &inst, 48.0).unwrap();
        assert_eq!(d.label, Label::Yes);
        assert!(d.correct_days as f64 >= 64.0 - 2.41 * 3.0 - 1.0);
        assert!(distinguish(|n, _| Ok(Always(true, n)), &inst, 64.0).is_err());
    }

    #[test]
    fn tracker_step_examples() {
        let config = AdversaryConfig::agreement_tracker(0, 1);
        // With n = 2 the only suspect is expert 1.
        let mut rng = Seed(0).substream("t", 0);
        for _ in 0..20 {
            let d = agreement_tracker_step(&[0, 0], &config, &mut rng).unwrap();
            assert_eq!(d.predictions[0], !d.predictions[1]);
            assert_eq!(d.outcome, d.predictions[0]);
        }
        assert_eq!(top_scored(&[0, 0, 0, 0, 0], 0, 3), vec![1, 2, 3]);
        assert_eq!(top_scored(&[9, 1, 5, 5, 0], 0, 2), vec![2, 3]);
        let bad = AdversaryConfig::agreement_tracker(0, 4);
        assert!(agreement_tracker_step(&[0; 4], &bad, &mut rng).is_err());
    }

    #[test]
    fn replay_matches_run_stream() {
        let m = gen_planted(10, 50, None, PlantedNoise::ExactMistakes(3), Seed(5)).unwrap();
        let config = AdversaryConfig::oblivious_replay(m.clone());
        let mut a = DiscPred::new(10, 3, Seed(8), 0).unwrap();
        let (transcript, game) = play_adaptive_game(&mut a, &config, 10, 50, Seed(8)).unwrap();
        let mut b = DiscPred::new(10, 3, Seed(8), 0).unwrap();
        let spec = StreamSpec::from_matrix(m.clone(), 3).unwrap();
        let plain = run_stream(&mut b, &spec, Seed(8)).unwrap();
        assert_eq!(game.trace, plain.trace);
        let days: Vec<DayRecord> = transcript.days.iter().map(|d| d.record.clone()).collect();
        assert_eq!(ExpertMatrix::from_days(10, &days).unwrap(), m);
    }

    #[test]
    fn tracker_keeps_best_expert_perfect_and_det_within_bound() {
        let (n, horizon) = (32, 512);
        let mut alg = DeterministicPool::for_target(n, 2, 0.5, horizon).unwrap();
        let k = alg.state().capacity();
        let config = AdversaryConfig::agreement_tracker(7, k.min(n - 1));
        let (_, report) = play_adaptive_game(&mut alg, &config, n, horizon, Seed(1)).unwrap();
        assert_eq!(report.ledger.expert_mistakes[7], 0);
        assert!(report.mistakes() as f64 <= 0.5 * horizon as f64);
    }

    #[test]
    fn games_are_deterministic() {
        let config = AdversaryConfig::agreement_tracker(0, 3);
        let run = || {
            let mut alg = DiscPred::new(8, 3, Seed(6), 0).unwrap();
            play_adaptive_game(&mut alg, &config, 8, 16, Seed(6)).unwrap().0
        };
        assert_eq!(run(), run());
    }

    /// Peeks at a coin the algorithm draws for the next day.
    struct Peeker {
        coin: Rc<Cell<bool>>,
    }

    impl Adversary for Peeker {
        fn name(&self) -> &str {
            "peeker"
        }
        fn commit(&mut self, _: &[GameDay]) -> Result<DayRecord> {
            let c = self.coin.get();
            Ok(DayRecord::new(vec![!c, !c], !c))
        }
    }

    struct Coin {
        coin: Rc<Cell<bool>>,
        rng: StreamRng,
    }

    impl Forecaster for Coin {
        fn name(&self) -> &str {
            "coin"
        }
        fn experts(&self) -> usize {
            2
        }
        fn predict(&mut self, _: &[bool]) -> Result<bool> {
            Ok(self.coin.get())
        }
        fn update(&mut self, _: &[bool], _: bool) -> Result<()> {
            self.coin.set(self.rng.gen());
            Ok(())
        }
        fn memory_slots(&self) -> usize {
            0
        }
    }

    #[test]
    fn peeking_adversary_is_caught() {
        let shared = Rc::new(Cell::new(false));
        let mut alg = Coin { coin: shared.clone(), rng: Seed(2).substream("coin", 0) };
        let mut first = true;
        let result = play_game_with(
            &mut alg,
            |_| {
                let coin = if first { shared.clone() } else { Rc::new(Cell::new(false)) };
                first = false;
                Ok(Box::new(Peeker { coin }) as Box<dyn Adversary>)
            },
            2,
            40,
            Seed(2),
            Seed(3),
        );
        assert!(matches!(result, Err(Error::Causality { .. })), "{result:?}");
    }

    #[test]
    fn tracker_transcripts_replay() {
        let config = AdversaryConfig::agreement_tracker(3, 2);
        let mut alg = DiscPred::new(6, 2, Seed(1), 0).unwrap();
        let (t, _) = play_adaptive_game(&mut alg, &config, 6, 30, Seed(1)).unwrap();
        let fresh = config.build(6, 30, t.adversary_seed).unwrap();
        verify_causality(&t.days, fresh).unwrap();
    }
}
