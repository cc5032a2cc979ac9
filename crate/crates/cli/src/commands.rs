//! Subcommand bodies. Each returns the process exit status on success.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use expertstream_core::adversary::{default_threshold, distinguish as run_distinguisher, gen_padded};
use expertstream_core::io::{
    matrix_to_string, privacy_csv, refill_dump, trace_csv, trace_rows, transcript_csv, InstanceSidecar, TRACE_HEADER,
};
use expertstream_core::{gen_no, gen_yes, BiasDetectInstance, Label, Seed};

use crate::config::{AdversaryChoice, ExperimentConfig, StreamKind};
use crate::run::{check_params, run_once, RunOutcome, SUMMARY_HEADER};
use crate::{CliError, EXIT_CONFIG, EXIT_VIOLATION};

/// Switches shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub force: bool,
    pub warn_params: bool,
    pub jobs: Option<usize>,
}

/// Refuse to clobber an existing file unless forced.
pub fn guard_output(path: &Path, force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::config(format!("{} exists (use --force to overwrite)", path.display())));
    }
    Ok(())
}

fn write_output(path: &Path, contents: &str, force: bool) -> Result<(), CliError> {
    guard_output(path, force)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Write to `path`, or stdout when there is none.
fn emit(path: Option<&PathBuf>, contents: &str, force: bool) -> Result<(), CliError> {
    match path {
        Some(p) => write_output(p, contents, force),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn report_violations(outcomes: &[RunOutcome]) -> u8 {
    let mut status = 0;
    for o in outcomes.iter().filter(|o| o.violated()) {
        for v in &o.violations {
            eprintln!("guarantee violated in {}: {v}", o.run_id);
        }
        status = EXIT_VIOLATION;
    }
    status
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))
}

fn run_seeds(cfg: &ExperimentConfig, opts: &Options) -> Result<Vec<RunOutcome>, CliError> {
    let pool = thread_pool(opts.jobs)?;
    pool.install(|| cfg.seeds.par_iter().map(|&s| run_once(cfg, s)).collect())
}

/// Trace CSV to `out` (if set), summary table to stdout.
pub fn simulate(cfg: &ExperimentConfig, opts: &Options) -> Result<u8, CliError> {
    cfg.validate()?;
    check_params(cfg, opts.warn_params)?;
    let single = cfg.seeds.len() == 1;
    if !single && (cfg.refills_out.is_some() || cfg.privacy_out.is_some()) {
        return Err(CliError::config("refills_out and privacy_out need a single seed"));
    }
    for p in [&cfg.out, &cfg.refills_out, &cfg.privacy_out].into_iter().flatten() {
        guard_output(p, opts.force)?;
    }
    let outcomes = run_seeds(cfg, opts)?;
    if let Some(out) = &cfg.out {
        let mut trace = format!("{TRACE_HEADER}\n");
        for o in &outcomes {
            trace_rows(&o.run_id, &o.report, &mut trace);
        }
        write_output(out, &trace, opts.force)?;
    }
    if let (Some(path), Some(o)) = (&cfg.refills_out, outcomes.first()) {
        write_output(path, &refill_dump(&o.report.refills), opts.force)?;
    }
    if let (Some(path), Some(o)) = (&cfg.privacy_out, outcomes.first()) {
        let ledger = o
            .report
            .privacy
            .ok_or_else(|| CliError::config("privacy_out is only meaningful for algorithm = robust"))?;
        write_output(path, &privacy_csv(&ledger), opts.force)?;
    }
    let mut summary = format!("{SUMMARY_HEADER}\n");
    for o in &outcomes {
        let _ = writeln!(summary, "{}", o.summary_row(cfg));
    }
    print!("{summary}");
    Ok(report_violations(&outcomes))
}

/// Sweep CSV header. Grid axes sit between `cell` and `seed`; an
/// `algorithm` axis is reported in the fixed `algorithm` column instead.
pub fn sweep_header(cfg: &ExperimentConfig) -> String {
    let axes: Vec<&str> = cfg.grid.iter().map(|(k, _)| k.as_str()).filter(|&k| k != "algorithm").collect();
    let mut h = String::from("cell,");
    for a in &axes {
        h.push_str(a);
        h.push(',');
    }
    h.push_str("seed,algorithm,mistakes,best_mistakes,avg_regret,peak_slots,pool_size,status");
    h
}

/// Every grid cell for every seed; rows ordered by (cell, seed).
pub fn sweep(cfg: &ExperimentConfig, opts: &Options) -> Result<u8, CliError> {
    let cells = cfg.grid_cells();
    if cells.is_empty() {
        return Err(CliError::config("sweep needs at least one non-empty grid.<key> axis"));
    }
    if let Some(p) = &cfg.out {
        guard_output(p, opts.force)?;
    }
    let mut configs = Vec::with_capacity(cells.len());
    for cell in &cells {
        let mut c = cfg.clone();
        for (k, v) in cell {
            c.set(k, v)?;
        }
        c.validate()?;
        configs.push(c);
    }
    let tasks: Vec<(usize, u64)> =
        (0..cells.len()).flat_map(|i| cfg.seeds.iter().map(move |&s| (i, s))).collect();
    let pool = thread_pool(opts.jobs)?;
    let results: Vec<Result<RunOutcome, CliError>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, s)| {
                check_params(&configs[i], opts.warn_params)?;
                run_once(&configs[i], s)
            })
            .collect()
    });
    let mut out = sweep_header(cfg);
    out.push('\n');
    let mut status = 0u8;
    for (&(i, seed), result) in tasks.iter().zip(&results) {
        let _ = write!(out, "{i},");
        for (_, v) in cells[i].iter().filter(|(k, _)| k != "algorithm") {
            let _ = write!(out, "{v},");
        }
        match result {
            Ok(o) => {
                let r = &o.report;
                let _ = writeln!(
                    out,
                    "{seed},{},{},{},{},{},{},{}",
                    r.algorithm,
                    r.mistakes(),
                    r.ledger.best_mistakes(),
                    r.average_regret().map(expertstream_core::io::fmt_sig).unwrap_or_default(),
                    r.meter.peak_slots,
                    o.pool_size.map(|k| k.to_string()).unwrap_or_default(),
                    if o.violated() { "violation" } else { "ok" }
                );
                status = status.max(report_violations(std::slice::from_ref(o)));
            }
            Err(e) => {
                eprintln!("cell {i} seed {seed}: {e}");
                let _ = writeln!(out, "{seed},{},,,,,,error", configs[i].algorithm);
                status = status.max(e.code);
            }
        }
    }
    emit(cfg.out.as_ref(), &out, opts.force)?;
    Ok(status)
}

/// Adaptive games; summary table to `out` or stdout, optional transcripts.
pub fn attack(cfg: &ExperimentConfig, opts: &Options) -> Result<u8, CliError> {
    let mut cfg = cfg.clone();
    if cfg.adversary == AdversaryChoice::None {
        cfg.adversary = AdversaryChoice::Tracker;
    }
    cfg.validate()?;
    check_params(&cfg, opts.warn_params)?;
    if let Some(p) = &cfg.out {
        guard_output(p, opts.force)?;
    }
    let outcomes = run_seeds(&cfg, opts)?;
    if let Some(dir) = &cfg.transcripts {
        std::fs::create_dir_all(dir)?;
        for o in &outcomes {
            if let Some(t) = &o.transcript {
                let path = dir.join(format!("transcript_{}_seed{}.csv", cfg.algorithm, o.seed));
                write_output(&path, &transcript_csv(t), opts.force)?;
            }
        }
    }
    let mut summary = format!("{SUMMARY_HEADER}\n");
    for o in &outcomes {
        let _ = writeln!(summary, "{}", o.summary_row(&cfg));
    }
    emit(cfg.out.as_ref(), &summary, opts.force)?;
    Ok(report_violations(&outcomes))
}

/// The BiasDetect instance a seed selects.
pub fn instance_for(cfg: &ExperimentConfig, seed: u64) -> Result<BiasDetectInstance, CliError> {
    let label = cfg.labels.for_seed(seed);
    let (n, t, s) = (cfg.experts, cfg.horizon, Seed(seed));
    Ok(match (cfg.stream, label) {
        (StreamKind::Padded, case) => gen_padded(n, t, cfg.params.regret, cfg.bias, case, cfg.planted, s)?,
        (_, Label::Yes) => gen_yes(n, t, cfg.params.mistake_bound, cfg.planted, s)?,
        (_, Label::No) => gen_no(n, t, s)?,
    })
}

pub const DISTINGUISH_HEADER: &str = "seed,label,predicted,correct_days,threshold,correct";

/// Classify one instance per seed; accuracy goes to stderr.
pub fn distinguish(cfg: &ExperimentConfig, opts: &Options) -> Result<u8, CliError> {
    cfg.validate()?;
    if let Some(p) = &cfg.out {
        guard_output(p, opts.force)?;
    }
    let threshold = cfg.threshold.unwrap_or_else(|| default_threshold(cfg.horizon));
    let pool = thread_pool(opts.jobs)?;
    let rows: Vec<Result<(BiasDetectInstance, Label, usize), CliError>> = pool.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| {
                let inst = instance_for(cfg, seed)?;
                let d = run_distinguisher(
                    |n, t| cfg.params.build(cfg.algorithm, n, t, Seed(seed)),
                    &inst,
                    threshold,
                )?;
                Ok((inst, d.label, d.correct_days))
            })
            .collect()
    });
    let mut out = format!("{DISTINGUISH_HEADER}\n");
    let mut right = 0;
    for (&seed, row) in cfg.seeds.iter().zip(rows) {
        let (inst, predicted, correct_days) = row?;
        let ok = predicted == inst.label;
        right += usize::from(ok);
        let _ = writeln!(
            out,
            "{seed},{},{predicted},{correct_days},{},{}",
            inst.label,
            expertstream_core::io::fmt_sig(threshold),
            u8::from(ok)
        );
        if let Some(dir) = &cfg.instances_out {
            std::fs::create_dir_all(dir)?;
            write_output(&dir.join(format!("instance_seed{seed}.txt")), &matrix_to_string(&inst.matrix), opts.force)?;
            let sidecar = InstanceSidecar::of(&inst).to_line() + "\n";
            write_output(&dir.join(format!("instance_seed{seed}.json")), &sidecar, opts.force)?;
        }
    }
    emit(cfg.out.as_ref(), &out, opts.force)?;
    eprintln!("accuracy {right}/{}", cfg.seeds.len());
    Ok(0)
}

/// Quick internal consistency checks; exit 2 if any fail.
pub fn selftest() -> Result<u8, CliError> {
    let mut failed = 0;
    let mut check = |name: &str, ok: bool| {
        println!("{} {name}", if ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    };

    let cfg = ExperimentConfig { seeds: vec![0], ..Default::default() };
    let det = run_once(&cfg, 0)?;
    check("detpool planted n=256 T=4096 M=4 R=0.05 within 204 mistakes", det.report.mistakes() <= 204 && !det.violated());

    let wm_cfg = ExperimentConfig { algorithm: expertstream_core::AlgorithmKind::Wm, ..cfg.clone() };
    let wm = run_once(&wm_cfg, 0)?;
    check("weighted majority within 2.41(M + log2 n) + 1", !wm.violated());

    let c = expertstream_core::compose(0.01, 0.0, 100, 1e-6)?;
    check("advanced composition reference value", (c.epsilon - 0.545_652).abs() < 1e-6);

    let again = run_once(&cfg, 0)?;
    check(
        "identical seeds give identical traces",
        trace_csv("a", &det.report) == trace_csv("a", &again.report),
    );

    let small = ExperimentConfig { experts: 16, horizon: 64, adversary: AdversaryChoice::Tracker, ..cfg.clone() };
    let game = run_once(&small, 1);
    check("agreement tracker game passes the causality replay", game.is_ok());

    Ok(if failed == 0 { 0 } else { EXIT_VIOLATION })
}

/// Exit code for a failed command.
pub fn exit_code(e: &CliError) -> u8 {
    if e.code == 0 {
        EXIT_CONFIG
    } else {
        e.code
    }
}
