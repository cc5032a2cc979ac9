//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng as _;
use rayon::prelude::*;

use expertstream_cli::config::ExperimentConfig;
use expertstream_cli::run::{run_once, RunOutcome};
use expertstream_core::adversary::default_threshold;
use expertstream_core::baselines::wm_mistake_bound;
use expertstream_core::pool::mistakes_per_pool;
use expertstream_core::privacy::{
    binary_entropy, dp_ratio_audit, median_probabilities, priv_median, priv_median_index, rank_deviations,
    rank_error_bound, OrderedDomain,
};
use expertstream_core::robust::ensemble_size;
use expertstream_core::{
    compose, distinguish, gen_no, gen_yes, run_matrix, AlgorithmKind, DeterministicPool, ExpertMatrix, Forecaster,
    Label, MultiplicativeWeights, Seed, WeightedMajority,
};
use oracles::{compose_grid, compose_hp, literal_det, rel_err, LiteralDay};

const DET: &str = "algorithm = detpool\nn = 256\nT = 4096\nM = 4\nR = 0.05\nstream = planted\nseeds = 0..50\n";
const MW_BIASED: &str = "algorithm = mw\nn = 64\nT = 4096\nstream = biased\nbias = 0.25\nseeds = 0..50\n";
const ROBUST: &str =
    "algorithm = robust\nn = 128\nT = 1024\nM = 0\nR = 3.125\nc = 0.25\nc_prime = 0.25\nstream = planted\nseeds = 0..20\n";
const ATTACK: &str = "n = 128\nT = 1024\nM = 2\nR = 0.25\nc = 8\nc_prime = 2\nadversary = tracker\nseeds = 0..20\n";
const DISTINGUISH: &str = "algorithm = mw\nn = 64\nT = 2048\nM = 256\nlabels = both\nseeds = 0..200\n";

/// Slots an algorithm may hold beyond its pool.
const OVERHEAD: usize = 2;

fn config(text: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.apply_text(text, "criterion").expect("criterion config parses");
    cfg
}

fn with(text: &str, extra: &str) -> ExperimentConfig {
    config(&format!("{text}{extra}\n"))
}

fn run_all(cfg: &ExperimentConfig) -> Vec<RunOutcome> {
    cfg.seeds.par_iter().map(|&s| run_once(cfg, s).expect("run succeeds")).collect()
}

struct Suite {
    failed: usize,
    /// (label, peak slots, cap) for every pool-based run.
    slots: Vec<(String, usize, usize)>,
}

impl Suite {
    fn report(&mut self, id: usize, name: &str, ok: bool, detail: String, elapsed: Duration) {
        println!(
            "{} criterion {id:>2}: {name}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
        self.failed += usize::from(!ok);
    }

    fn track_slots(&mut self, cfg: &ExperimentConfig, outcomes: &[RunOutcome]) {
        let (n, t) = (cfg.experts, cfg.horizon);
        for o in outcomes {
            let k = o.pool_size.expect("pool algorithm");
            let cap = match cfg.algorithm {
                AlgorithmKind::Robust => ensemble_size(n, t, cfg.params.c).unwrap() * (k + OVERHEAD),
                _ => k + OVERHEAD,
            };
            self.slots.push((o.run_id.clone(), o.report.meter.peak_slots, cap));
        }
    }
}

fn wm_mistakes(n: usize, rows: &[Vec<bool>], outcomes: &[bool]) -> usize {
    let matrix = ExpertMatrix::from_days(
        n,
        &rows.iter().zip(outcomes).map(|(r, &o)| expertstream_core::DayRecord::new(r.clone(), o)).collect::<Vec<_>>(),
    )
    .unwrap();
    let mut wm = WeightedMajority::halving(n).unwrap();
    run_matrix(&mut wm, &matrix, Seed(0), None).unwrap().mistakes()
}

fn library_det(n: usize, k: usize, rows: &[Vec<bool>], outcomes: &[bool]) -> Vec<LiteralDay> {
    let mut alg = DeterministicPool::new(n, k).unwrap();
    rows.iter()
        .zip(outcomes)
        .map(|(row, &o)| {
            let pool = alg.state().members().to_vec();
            let prediction = alg.predict(row).unwrap();
            alg.update(row, o).unwrap();
            LiteralDay { pool, prediction }
        })
        .collect()
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (mean, var.sqrt())
}

/// Criteria 1, 2 and the first half of 4.
fn det_reference(suite: &mut Suite) -> (bool, String) {
    let start = Instant::now();
    let cfg = config(DET);
    let outcomes = run_all(&cfg);
    let elapsed = start.elapsed();
    let k = outcomes[0].pool_size.unwrap();
    let within = outcomes.iter().filter(|o| o.report.mistakes() <= 204).count();
    let worst = outcomes.iter().map(|o| o.report.mistakes()).max().unwrap();
    suite.report(
        1,
        "deterministic mistake bound",
        k == 80 && within == 50 && elapsed < Duration::from_secs(10),
        format!("k = {k}, {within}/50 runs <= 204 mistakes, worst {worst}"),
        elapsed,
    );

    let per_pool: Vec<usize> =
        outcomes.iter().flat_map(|o| mistakes_per_pool(&o.report.refills, &o.report.trace)).collect();
    let worst_pool = per_pool.iter().copied().max().unwrap_or(0);
    suite.report(
        2,
        "per-pool mistake cap",
        worst_pool <= 7,
        format!("{} pools, at most {worst_pool} mistakes per pool (cap 7)", per_pool.len()),
        Duration::ZERO,
    );
    suite.track_slots(&cfg, &outcomes);

    let wm_cfg = with(DET, "algorithm = wm");
    let wm = run_all(&wm_cfg);
    let bad = wm
        .iter()
        .filter(|o| o.report.mistakes() as f64 > wm_mistake_bound(o.report.ledger.best_mistakes(), 256))
        .count();
    (bad == 0, format!("{} planted streams, {bad} over", wm.len()))
}

/// Criterion 3 and the second half of 4.
fn brute_force(suite: &mut Suite, wm_planted: (bool, String)) {
    let start = Instant::now();
    let (n, horizon) = (3, 5);
    let mut mismatches = 0;
    let mut wm_over = 0;
    let mut streams = 0;
    for code in 0u32..1 << (n * horizon) {
        let rows: Vec<Vec<bool>> =
            (0..horizon).map(|t| (0..n).map(|i| (code >> (t * n + i)) & 1 == 1).collect()).collect();
        let outcomes = vec![true; horizon];
        for k in 1..=n {
            mismatches += usize::from(library_det(n, k, &rows, &outcomes) != literal_det(n, k, &rows, &outcomes));
        }
        let m = expertstream_core::best_expert(&rows, &outcomes).unwrap().1;
        wm_over += usize::from(wm_mistakes(n, &rows, &outcomes) as f64 > wm_mistake_bound(m, n));
        streams += 1;
    }
    let mut rng = Seed(3).substream("acceptance-random-streams", 0);
    let (n, horizon) = (6, 8);
    for _ in 0..10_000 {
        let rows: Vec<Vec<bool>> = (0..horizon).map(|_| (0..n).map(|_| rng.gen()).collect()).collect();
        let outcomes: Vec<bool> = (0..horizon).map(|_| rng.gen()).collect();
        let k = rng.gen_range(1..=n);
        mismatches += usize::from(library_det(n, k, &rows, &outcomes) != literal_det(n, k, &rows, &outcomes));
        let m = expertstream_core::best_expert(&rows, &outcomes).unwrap().1;
        wm_over += usize::from(wm_mistakes(n, &rows, &outcomes) as f64 > wm_mistake_bound(m, n));
        streams += 1;
    }
    suite.report(
        3,
        "brute-force equivalence with the literal transcription",
        mismatches == 0,
        format!("{} exhaustive runs + 10000 random streams, {mismatches} mismatches", 3 << 15),
        start.elapsed(),
    );
    let (planted_ok, planted_detail) = wm_planted;
    suite.report(
        4,
        "weighted majority envelope 2.41(M + log2 n) + 1",
        planted_ok && wm_over == 0,
        format!("{planted_detail}; {streams} small streams, {wm_over} over"),
        Duration::ZERO,
    );
}

fn mw_regret(suite: &mut Suite) {
    let start = Instant::now();
    let cfg = config(MW_BIASED);
    let regrets: Vec<f64> = run_all(&cfg).iter().map(|o| o.report.average_regret().unwrap()).collect();
    let (mean, sd) = mean_sd(&regrets);
    let envelope = 2.0 * (64f64.ln() / 4096.0).sqrt();
    let slack = 3.0 * sd / (regrets.len() as f64).sqrt();
    suite.report(
        5,
        "multiplicative weights regret",
        mean <= envelope + slack,
        format!("mean average regret {mean:.5} (sd {sd:.5}) vs {envelope:.5} + {slack:.5}"),
        start.elapsed(),
    );
}

fn composition(suite: &mut Suite) {
    let start = Instant::now();
    let worst = compose_grid()
        .into_iter()
        .map(|(e, d, k, dp)| {
            let c = compose(e, d, k, dp).unwrap();
            let (he, hd) = compose_hp(e, d, k, dp);
            rel_err(c.epsilon, he).max(rel_err(c.delta, hd))
        })
        .fold(0.0, f64::max);
    suite.report(
        6,
        "composition against 320-bit evaluation",
        worst <= 1e-12,
        format!("100 grid points, worst relative error {worst:.3e}"),
        start.elapsed(),
    );

    let start = Instant::now();
    let bad = (0..=10_000)
        .filter(|&i| {
            let p = i as f64 / 10_000.0;
            let h = binary_entropy(p).unwrap();
            let q = p * (1.0 - p);
            4.0 * q > h + 1e-12 || h > 2.0 * q.sqrt() + 1e-12
        })
        .count();
    suite.report(7, "binary entropy sandwich", bad == 0, format!("10001 grid points, {bad} violations"), start.elapsed());
}

fn privacy_audit(suite: &mut Suite) {
    let start = Instant::now();
    let domain = OrderedDomain::bits();
    // 49 vs 50 ones: the pair on which the exact median flips.
    let d: Vec<bool> = (0..100).map(|i| i < 49).collect();
    let mut d_prime = d.clone();
    d_prime[49] = true;
    let epsilon = 0.5;
    let trials = 1_000_000;
    let mut rng = Seed(8).substream("acceptance-audit", 0);
    let private =
        dp_ratio_audit(|db: &[bool], r| *priv_median(&domain, db, epsilon, r).unwrap(), &d, &d_prime, trials, epsilon, &mut rng)
            .unwrap();
    let deterministic = |db: &[bool], _: &mut _| 2 * db.iter().filter(|&&b| b).count() >= db.len();
    let control = dp_ratio_audit(deterministic, &d, &d_prime, trials, epsilon, &mut rng).unwrap();
    let elapsed = start.elapsed();
    let private_ok = private.max_log_ratio <= epsilon + private.rows.iter().map(|r| r.slack).fold(0.0, f64::max);
    suite.report(
        8,
        "private median audit",
        private_ok && !private.flagged && control.flagged && elapsed < Duration::from_secs(60),
        format!(
            "max log-ratio {:.4} (conservative {:.4}) vs eps {epsilon}; deterministic control {} ({})",
            private.max_log_ratio,
            private.max_conservative_log_ratio,
            if control.flagged { "flagged" } else { "NOT flagged" },
            control.max_log_ratio
        ),
        elapsed,
    );
}

fn privacy_utility(suite: &mut Suite) {
    let start = Instant::now();
    let (domain, size, epsilon, delta, runs) = (64usize, 200usize, 1.0, 0.05, 10_000u64);
    let bound = rank_error_bound(domain, epsilon, delta);
    let mut rng = Seed(9).substream("acceptance-utility", 0);
    let mut far = 0u64;
    for _ in 0..runs {
        let mut hist = vec![0u64; domain];
        for _ in 0..size {
            hist[rng.gen_range(0..domain)] += 1;
        }
        let idx = priv_median_index(&hist, epsilon, &mut rng).unwrap();
        far += u64::from(rank_deviations(&hist)[idx] > bound);
    }
    let rate = far as f64 / runs as f64;
    let limit = delta + 3.0 * (delta * (1.0 - delta) / runs as f64).sqrt();
    // Exact failure probability on a worst-case-shaped database, for the log line.
    let spread: Vec<u64> = (0..domain).map(|i| if i % 2 == 0 { 6 } else { 1 }).collect();
    let exact: f64 = median_probabilities(&spread, epsilon)
        .unwrap()
        .iter()
        .zip(rank_deviations(&spread))
        .filter(|(_, dev)| *dev > bound)
        .map(|(p, _)| p)
        .sum();
    suite.report(
        9,
        "private median rank error",
        rate <= limit,
        format!("rank error > {bound:.3} in {far}/{runs} runs ({rate:.4} <= {limit:.4}); spread-database exact rate {exact:.2e}"),
        start.elapsed(),
    );
}

fn robust_oblivious(suite: &mut Suite) {
    let start = Instant::now();
    let cfg = config(ROBUST);
    let outcomes = run_all(&cfg);
    let elapsed = start.elapsed();
    let target = cfg.params.mistake_bound as f64 + cfg.params.regret * cfg.horizon as f64;
    let within = outcomes.iter().filter(|o| o.report.mistakes() as f64 <= target).count();
    let ledgers: Vec<_> = outcomes.iter().map(|o| o.report.privacy.unwrap()).collect();
    let eps_ok = ledgers.iter().all(|l| {
        let (exact, _) = compose_hp(l.epsilon_per_call, 0.0, l.calls, l.delta_prime);
        l.composed_epsilon <= 1.0 && exact <= 1.0
    });
    let mistakes: Vec<usize> = outcomes.iter().map(|o| o.report.mistakes()).collect();
    suite.report(
        10,
        "robust ensemble on an oblivious stream",
        within >= 18 && eps_ok && elapsed < Duration::from_secs(300),
        format!(
            "{within}/20 runs <= M + RT = {target}, composed eps {:.4} (<= 1: {eps_ok}), mistakes {}..{} of T = 1024",
            ledgers[0].composed_epsilon,
            mistakes.iter().min().unwrap(),
            mistakes.iter().max().unwrap()
        ),
        elapsed,
    );
    suite.track_slots(&cfg, &outcomes);
}

fn adaptive_attack(suite: &mut Suite) {
    let start = Instant::now();
    let rt = 0.25 * 1024.0;
    let det_cfg = with(ATTACK, "algorithm = detpool");
    let det = run_all(&det_cfg);
    let det_ok = det.iter().filter(|o| o.report.mistakes() as f64 <= rt).count();
    let robust_cfg = with(ATTACK, "algorithm = robust");
    let robust = run_all(&robust_cfg);
    let robust_ok = robust.iter().filter(|o| o.report.average_regret().unwrap() <= 0.5).count();
    let disc_cfg = with(ATTACK, "algorithm = discpred");
    let disc = run_all(&disc_cfg);
    let elapsed = start.elapsed();

    println!("  attack table (agreement tracker, n = 128, T = 1024, s = pool size):");
    println!("  {:<9} {:>4} {:>14} {:>14} {:>10}", "algorithm", "k", "mean mistakes", "mean regret", "max regret");
    for (name, runs) in [("detpool", &det), ("discpred", &disc), ("robust", &robust)] {
        let regrets: Vec<f64> = runs.iter().map(|o| o.report.average_regret().unwrap()).collect();
        let mistakes: Vec<f64> = runs.iter().map(|o| o.report.mistakes() as f64).collect();
        println!(
            "  {:<9} {:>4} {:>14.1} {:>14.4} {:>10.4}",
            name,
            runs[0].pool_size.unwrap(),
            mean_sd(&mistakes).0,
            mean_sd(&regrets).0,
            regrets.iter().copied().fold(0.0, f64::max)
        );
    }
    suite.report(
        11,
        "adaptive agreement-tracker attack",
        det_ok == 20 && robust_ok >= 18,
        format!("detpool {det_ok}/20 <= RT; robust {robust_ok}/20 average regret <= 2R; discpred reported above"),
        elapsed,
    );
    suite.track_slots(&det_cfg, &det);
    suite.track_slots(&disc_cfg, &disc);
    suite.track_slots(&robust_cfg, &robust);
}

fn distinguisher(suite: &mut Suite) {
    let start = Instant::now();
    let (n, horizon, m) = (64, 2048, 256);
    let threshold = default_threshold(horizon);
    let results: Vec<(Label, Label)> = (0..200u64)
        .into_par_iter()
        .map(|s| {
            let inst =
                if s % 2 == 0 { gen_yes(n, horizon, m, None, Seed(s)).unwrap() } else { gen_no(n, horizon, Seed(s)).unwrap() };
            let d = distinguish(|n, t| MultiplicativeWeights::with_default_rate(n, t, Seed(s)), &inst, threshold).unwrap();
            (inst.label, d.label)
        })
        .collect();
    let elapsed = start.elapsed();
    let yes = results.iter().filter(|(l, _)| *l == Label::Yes).count();
    let correct = results.iter().filter(|(l, p)| l == p).count();
    suite.report(
        12,
        "distinguisher accuracy",
        yes == 100 && correct >= 190 && elapsed < Duration::from_secs(120),
        format!("{correct}/200 correct ({yes} YES / {} NO), threshold {threshold}", 200 - yes),
        elapsed,
    );
}

fn memory(suite: &mut Suite) {
    let over: Vec<&(String, usize, usize)> = suite.slots.iter().filter(|(_, peak, cap)| peak > cap).collect();
    let detail = format!("{} pool runs checked (constant {OVERHEAD}), {} over cap{}", suite.slots.len(), over.len(), {
        over.first().map(|(id, p, c)| format!(", e.g. {id} peak {p} > {c}")).unwrap_or_default()
    });
    let ok = over.is_empty() && !suite.slots.is_empty();
    suite.report(13, "memory accounting", ok, detail, Duration::ZERO);
}

fn binary(dir: &Path, args: &[&str], jobs: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_expertstream"))
        .args(args)
        .env("EXPERTSTREAM_JOBS", jobs)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn reproducibility(suite: &mut Suite) {
    let start = Instant::now();
    let dir = std::env::temp_dir().join(format!("expertstream-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let configs = [("det", DET), ("mw", MW_BIASED), ("robust", ROBUST), ("distinguish", DISTINGUISH)];
    for (name, text) in configs {
        std::fs::write(dir.join(format!("{name}.cfg")), text).unwrap();
    }
    std::fs::write(dir.join("attack.cfg"), format!("{ATTACK}algorithm = detpool\n")).unwrap();
    std::fs::write(dir.join("sweep.cfg"), "n = 64\nT = 512\nM = 2\nR = 0.25\ngrid.algorithm = detpool,wm,mw\n").unwrap();

    let commands: Vec<(&str, Vec<&str>)> = vec![
        ("simulate-det", vec!["simulate", "--config", "det.cfg"]),
        ("simulate-mw", vec!["simulate", "--config", "mw.cfg"]),
        ("simulate-robust", vec!["simulate", "--config", "robust.cfg", "--seeds", "0..4"]),
        ("attack", vec!["attack", "--config", "attack.cfg"]),
        ("distinguish", vec!["distinguish", "--config", "distinguish.cfg"]),
        ("sweep", vec!["sweep", "--config", "sweep.cfg", "--seeds", "0..20"]),
    ];
    let mut identical = 0;
    let mut differing = Vec::new();
    for (name, base) in &commands {
        let mut csvs: Vec<Vec<u8>> = Vec::new();
        for (run, jobs) in ["1", "1", "0"].iter().enumerate() {
            let out: PathBuf = dir.join(format!("{name}-{run}.csv"));
            let mut args = base.clone();
            let out_str = out.to_str().unwrap().to_string();
            args.extend(["--force", "--out", &out_str]);
            let stdout = binary(&dir, &args, jobs);
            let mut bytes = std::fs::read(&out).unwrap();
            bytes.extend(stdout);
            csvs.push(bytes);
        }
        if csvs.windows(2).all(|w| w[0] == w[1]) {
            identical += 1;
        } else {
            differing.push(*name);
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    suite.report(
        14,
        "byte-identical reruns",
        differing.is_empty(),
        format!(
            "{identical}/{} commands identical across three runs (jobs 1, 1, all){}",
            commands.len(),
            if differing.is_empty() { String::new() } else { format!("; differing: {differing:?}") }
        ),
        start.elapsed(),
    );
}

fn main() {
    // `cargo test -- <filter>` passes extra arguments; the suite always runs whole.
    let mut suite = Suite { failed: 0, slots: Vec::new() };
    let wm_planted = det_reference(&mut suite);
    brute_force(&mut suite, wm_planted);
    mw_regret(&mut suite);
    composition(&mut suite);
    privacy_audit(&mut suite);
    privacy_utility(&mut suite);
    robust_oblivious(&mut suite);
    adaptive_attack(&mut suite);
    distinguisher(&mut suite);
    memory(&mut suite);
    reproducibility(&mut suite);
    println!("acceptance: {} of 14 criteria passed", 14 - suite.failed);
    if suite.failed > 0 {
        std::process::exit(1);
    }
}
