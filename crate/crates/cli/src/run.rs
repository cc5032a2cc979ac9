//! One fully seeded run: build the stream and the algorithm, play, check.

use expertstream_core::adversary::{gen_padded, play_adaptive_game, AdversaryConfig, GameTranscript};
use expertstream_core::baselines::wm_mistake_bound;
use expertstream_core::io::{fmt_sig, read_matrix};
use expertstream_core::pool::{det_mistake_bound, mistakes_per_pool, pool_mistake_cap, validate_discpred_params};
use expertstream_core::robust::{ensemble_size, validate_robust_params};
use expertstream_core::{
    gen_no, gen_planted, gen_yes, run_matrix, AlgorithmKind, ExpertMatrix, PlantedNoise, RunReport, Seed,
};

use crate::config::{AdversaryChoice, ExperimentConfig, StreamKind};
use crate::CliError;

/// Slots beyond the pool that a pool algorithm may hold.
pub const POOL_OVERHEAD: usize = 2;

pub const SUMMARY_HEADER: &str = "run_id,algorithm,n,T,seed,mistakes,best_mistakes,avg_regret,peak_slots,pool_size,\
proven_bound,target_mistakes,composed_epsilon,composed_delta,status";

/// The stream a seed selects. Generators and algorithms share the seed but
/// draw from differently labelled substreams.
pub fn build_matrix(cfg: &ExperimentConfig, seed: u64) -> Result<ExpertMatrix, CliError> {
    let (n, t, s) = (cfg.experts, cfg.horizon, Seed(seed));
    let m = match cfg.stream {
        StreamKind::Planted => {
            gen_planted(n, t, cfg.planted, PlantedNoise::ExactMistakes(cfg.params.mistake_bound), s)?
        }
        StreamKind::Biased => gen_planted(n, t, cfg.planted, PlantedNoise::Bias(cfg.bias), s)?,
        StreamKind::No => gen_no(n, t, s)?.matrix,
        StreamKind::Yes => gen_yes(n, t, cfg.params.mistake_bound, cfg.planted, s)?.matrix,
        StreamKind::Padded => gen_padded(n, t, cfg.params.regret, cfg.bias, cfg.case, cfg.planted, s)?.matrix,
        StreamKind::File => {
            let path = cfg.stream_file.as_ref().ok_or_else(|| CliError::config("stream_file is not set"))?;
            let m = read_matrix(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            if m.experts() != n || m.horizon() != t {
                return Err(CliError::config(format!(
                    "{} holds {} experts x {} days, config says n = {n}, T = {t}",
                    path.display(),
                    m.experts(),
                    m.horizon()
                )));
            }
            m
        }
    };
    Ok(m)
}

/// Precondition failures of the configured algorithm, rendered.
pub fn param_violations(cfg: &ExperimentConfig) -> Vec<String> {
    let (n, t, p) = (cfg.experts, cfg.horizon, &cfg.params);
    let v = match cfg.algorithm {
        AlgorithmKind::DiscPred => validate_discpred_params(n, t, p.regret, p.mistake_bound),
        AlgorithmKind::Robust => validate_robust_params(n, t, p.regret, p.mistake_bound),
        _ => Vec::new(),
    };
    v.iter().map(ToString::to_string).collect()
}

/// Refuse to run on violated preconditions unless asked to.
pub fn check_params(cfg: &ExperimentConfig, warn_only: bool) -> Result<(), CliError> {
    let v = param_violations(cfg);
    if v.is_empty() {
        return Ok(());
    }
    if warn_only {
        for msg in &v {
            eprintln!("warning: {msg}");
        }
        return Ok(());
    }
    Err(CliError::config(format!("parameter check failed (use --warn-params to run anyway): {}", v.join("; "))))
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run_id: String,
    pub seed: u64,
    pub report: RunReport,
    pub transcript: Option<GameTranscript>,
    pub pool_size: Option<usize>,
    /// Proven mistake bound checked after the run, if the algorithm has one.
    pub proven_bound: Option<f64>,
    pub violations: Vec<String>,
}

impl RunOutcome {
    pub fn violated(&self) -> bool {
        !self.violations.is_empty()
    }

    pub fn summary_row(&self, cfg: &ExperimentConfig) -> String {
        let r = &self.report;
        let regret = r.average_regret().map(fmt_sig).unwrap_or_default();
        let (eps, delta) = r
            .privacy
            .map(|l| (fmt_sig(l.composed_epsilon), fmt_sig(l.composed_delta)))
            .unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.run_id,
            r.algorithm,
            cfg.experts,
            cfg.horizon,
            self.seed,
            r.mistakes(),
            r.ledger.best_mistakes(),
            regret,
            r.meter.peak_slots,
            self.pool_size.map(|k| k.to_string()).unwrap_or_default(),
            self.proven_bound.map(fmt_sig).unwrap_or_default(),
            fmt_sig(cfg.params.regret * cfg.horizon as f64),
            eps,
            delta,
            if self.violated() { "violation" } else { "ok" }
        )
    }
}

fn suspected_pool(cfg: &ExperimentConfig, pool: Option<usize>) -> usize {
    let n = cfg.experts;
    cfg.suspected_pool.unwrap_or_else(|| pool.unwrap_or(n / 2)).clamp(1, n.saturating_sub(1).max(1))
}

/// Run the configured algorithm on one seed and check what is provable.
pub fn run_once(cfg: &ExperimentConfig, seed: u64) -> Result<RunOutcome, CliError> {
    let (n, t) = (cfg.experts, cfg.horizon);
    let mut alg = cfg.params.build(cfg.algorithm, n, t, Seed(seed))?;
    let pool = cfg.params.pool_size_for(cfg.algorithm, n, t)?;
    let (report, transcript) = match cfg.adversary {
        AdversaryChoice::None => (run_matrix(&mut alg, &build_matrix(cfg, seed)?, Seed(seed), cfg.budget)?, None),
        choice => {
            let adversary = match choice {
                AdversaryChoice::Replay => AdversaryConfig::oblivious_replay(build_matrix(cfg, seed)?),
                _ => AdversaryConfig::agreement_tracker(cfg.best_expert, suspected_pool(cfg, pool)),
            };
            let (transcript, report) = play_adaptive_game(&mut alg, &adversary, n, t, Seed(seed))?;
            (report, Some(transcript))
        }
    };

    let mut violations = Vec::new();
    let best = report.ledger.best_mistakes();
    let proven_bound = match cfg.algorithm {
        AlgorithmKind::DetPool => {
            let k = pool.unwrap_or(n);
            for (i, m) in mistakes_per_pool(&report.refills, &report.trace).into_iter().enumerate() {
                if m > pool_mistake_cap(k) {
                    violations.push(format!("pool {i} made {m} mistakes, cap {}", pool_mistake_cap(k)));
                }
            }
            Some(det_mistake_bound(n, k, best) as f64)
        }
        AlgorithmKind::Wm if cfg.params.beta == 0.5 => Some(wm_mistake_bound(best, n)),
        _ => None,
    };
    if let Some(b) = proven_bound {
        if report.mistakes() as f64 > b {
            violations.push(format!("{} mistakes exceed the proven bound {}", report.mistakes(), fmt_sig(b)));
        }
    }
    let slot_cap = match cfg.algorithm {
        AlgorithmKind::DetPool | AlgorithmKind::DiscPred => pool.map(|k| k + POOL_OVERHEAD),
        AlgorithmKind::Robust => {
            let m = ensemble_size(n, t, cfg.params.c)?;
            pool.map(|k| m * (k + POOL_OVERHEAD))
        }
        _ => None,
    };
    if let Some(cap) = slot_cap {
        if report.meter.peak_slots > cap {
            violations.push(format!("peak slots {} exceed {cap}", report.meter.peak_slots));
        }
    }
    if let (Some(day), Some(b)) = (report.meter.violated_on, report.meter.budget) {
        violations.push(format!("slot budget {b} exceeded on day {day}"));
    }
    if let Some(l) = report.privacy {
        if !l.within_target() {
            violations.push(format!("composed epsilon {} exceeds {}", fmt_sig(l.composed_epsilon), l.epsilon_target));
        }
    }
    Ok(RunOutcome {
        run_id: format!("{}-s{seed}", cfg.algorithm),
        seed,
        report,
        transcript,
        pool_size: pool,
        proven_bound,
        violations,
    })
}
