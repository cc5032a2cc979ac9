//! Flat `key = value` experiment configuration.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use expertstream_core::{AlgorithmKind, AlgorithmParams, Label};

use crate::CliError;

/// Where the days of a run come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    /// Fair outcomes; the planted expert is wrong on exactly `M` days.
    Planted,
    /// Fair outcomes; the planted expert is right with probability 1/2 + bias.
    Biased,
    No,
    Yes,
    Padded,
    /// A stored matrix file (`stream_file`).
    File,
}

impl FromStr for StreamKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "planted" => StreamKind::Planted,
            "biased" => StreamKind::Biased,
            "no" => StreamKind::No,
            "yes" => StreamKind::Yes,
            "padded" => StreamKind::Padded,
            "file" => StreamKind::File,
            _ => return Err(CliError::config(format!("unknown stream {s:?} (planted, biased, no, yes, padded, file)"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryChoice {
    None,
    Tracker,
    Replay,
}

impl FromStr for AdversaryChoice {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "none" => AdversaryChoice::None,
            "tracker" => AdversaryChoice::Tracker,
            "replay" => AdversaryChoice::Replay,
            _ => return Err(CliError::config(format!("unknown adversary {s:?} (none, tracker, replay)"))),
        })
    }
}

/// Which labels the distinguisher is tried on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelChoice {
    Yes,
    No,
    /// Even seeds YES, odd seeds NO.
    Both,
}

impl LabelChoice {
    pub fn for_seed(self, seed: u64) -> Label {
        match self {
            LabelChoice::Yes => Label::Yes,
            LabelChoice::No => Label::No,
            LabelChoice::Both if seed.is_multiple_of(2) => Label::Yes,
            LabelChoice::Both => Label::No,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: AlgorithmKind,
    pub experts: usize,
    pub horizon: usize,
    pub params: AlgorithmParams,
    pub stream: StreamKind,
    pub stream_file: Option<PathBuf>,
    pub planted: Option<usize>,
    pub bias: f64,
    pub case: Label,
    pub adversary: AdversaryChoice,
    pub best_expert: usize,
    /// Defaults to the attacked algorithm's pool size.
    pub suspected_pool: Option<usize>,
    pub threshold: Option<f64>,
    pub labels: LabelChoice,
    pub seeds: Vec<u64>,
    pub budget: Option<usize>,
    pub out: Option<PathBuf>,
    pub refills_out: Option<PathBuf>,
    pub privacy_out: Option<PathBuf>,
    pub transcripts: Option<PathBuf>,
    pub instances_out: Option<PathBuf>,
    /// Sweep axes, in first-seen order.
    pub grid: Vec<(String, Vec<String>)>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            algorithm: AlgorithmKind::DetPool,
            experts: 256,
            horizon: 4096,
            params: AlgorithmParams { regret: 0.05, mistake_bound: 4, ..Default::default() },
            stream: StreamKind::Planted,
            stream_file: None,
            planted: None,
            bias: 0.25,
            case: Label::Yes,
            adversary: AdversaryChoice::None,
            best_expert: 0,
            suspected_pool: None,
            threshold: None,
            labels: LabelChoice::Both,
            seeds: vec![0],
            budget: None,
            out: None,
            refills_out: None,
            privacy_out: None,
            transcripts: None,
            instances_out: None,
            grid: Vec::new(),
        }
    }
}

/// Every accepted key, for diagnostics.
pub const KEYS: &[&str] = &[
    "algorithm",
    "n",
    "T",
    "M",
    "R",
    "alpha",
    "c",
    "c_prime",
    "beta",
    "eta",
    "epsilon_target",
    "pool_size",
    "stream",
    "stream_file",
    "planted",
    "bias",
    "case",
    "adversary",
    "best",
    "s",
    "threshold",
    "labels",
    "seed",
    "seeds",
    "budget",
    "out",
    "refills_out",
    "privacy_out",
    "transcripts",
    "instances_out",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::config(format!("{key}: cannot parse {value:?}")))
}

fn optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>, CliError> {
    if value == "auto" || value.is_empty() {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

/// `7`, `1,2,5` or the half-open range `0..20`.
pub fn parse_seeds(value: &str) -> Result<Vec<u64>, CliError> {
    let value = value.trim();
    let seeds = if let Some((a, b)) = value.split_once("..") {
        let (a, b): (u64, u64) = (parse("seeds", a.trim())?, parse("seeds", b.trim())?);
        (a..b).collect()
    } else {
        value.split(',').map(|s| parse("seeds", s.trim())).collect::<Result<Vec<u64>, _>>()?
    };
    if seeds.is_empty() {
        return Err(CliError::config("seeds: empty seed list"));
    }
    Ok(seeds)
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        if let Some(axis) = key.strip_prefix("grid.") {
            if !KEYS.contains(&axis) || matches!(axis, "seed" | "seeds" | "out") {
                return Err(CliError::config(format!("grid.{axis}: not a sweepable key")));
            }
            let values: Vec<String> = value.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
            match self.grid.iter_mut().find(|(k, _)| k == axis) {
                Some(entry) => entry.1 = values,
                None => self.grid.push((axis.to_string(), values)),
            }
            return Ok(());
        }
        let p = &mut self.params;
        match key {
            "algorithm" => self.algorithm = value.parse().map_err(CliError::from)?,
            "n" => self.experts = parse(key, value)?,
            "T" => self.horizon = parse(key, value)?,
            "M" => p.mistake_bound = parse(key, value)?,
            "R" => p.regret = parse(key, value)?,
            "alpha" => p.alpha = parse(key, value)?,
            "c" => p.c = parse(key, value)?,
            "c_prime" => p.c_prime = parse(key, value)?,
            "beta" => p.beta = parse(key, value)?,
            "eta" => p.eta = optional(key, value)?,
            "epsilon_target" => p.epsilon_target = parse(key, value)?,
            "pool_size" => p.pool_size = optional(key, value)?,
            "stream" => self.stream = value.parse()?,
            "stream_file" => self.stream_file = path(value),
            "planted" => self.planted = optional(key, value)?,
            "bias" => self.bias = parse(key, value)?,
            "case" => self.case = value.parse().map_err(CliError::from)?,
            "adversary" => self.adversary = value.parse()?,
            "best" => self.best_expert = parse(key, value)?,
            "s" => self.suspected_pool = optional(key, value)?,
            "threshold" => self.threshold = optional(key, value)?,
            "labels" => {
                self.labels = match value {
                    "yes" => LabelChoice::Yes,
                    "no" => LabelChoice::No,
                    "both" => LabelChoice::Both,
                    _ => return Err(CliError::config(format!("labels: expected yes, no or both, got {value:?}"))),
                }
            }
            "seed" => self.seeds = vec![parse(key, value)?],
            "seeds" => self.seeds = parse_seeds(value)?,
            "budget" => self.budget = optional(key, value)?,
            "out" => self.out = path(value),
            "refills_out" => self.refills_out = path(value),
            "privacy_out" => self.privacy_out = path(value),
            "transcripts" => self.transcripts = path(value),
            "instances_out" => self.instances_out = path(value),
            _ => return Err(CliError::config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Apply `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("{origin}:{}: expected key = value", i + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| CliError::config(format!("{origin}:{}: {}", i + 1, e.message)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, file: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(file)
            .map_err(|e| CliError::config(format!("{}: {e}", file.display())))?;
        self.apply_text(&text, &file.display().to_string())
    }

    /// `key=value` override from the command line.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), CliError> {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::config(format!("--set {kv:?}: expected key=value")))?;
        self.set(k.trim(), v)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.experts == 0 || self.horizon == 0 {
            return Err(CliError::config("n and T must be positive"));
        }
        if self.stream == StreamKind::File && self.stream_file.is_none() {
            return Err(CliError::config("stream = file needs stream_file"));
        }
        if self.best_expert >= self.experts {
            return Err(CliError::config(format!("best = {} outside [0, {})", self.best_expert, self.experts)));
        }
        Ok(())
    }

    /// Every (axis assignments) cell of the sweep grid, in row-major order.
    pub fn grid_cells(&self) -> Vec<Vec<(String, String)>> {
        let mut cells: Vec<Vec<(String, String)>> = vec![Vec::new()];
        for (key, values) in &self.grid {
            let mut next = Vec::with_capacity(cells.len() * values.len());
            for cell in &cells {
                for v in values {
                    let mut c = cell.clone();
                    c.push((key.clone(), v.clone()));
                    next.push(c);
                }
            }
            cells = next;
        }
        if self.grid.is_empty() || cells.iter().all(|c| c.is_empty()) {
            return Vec::new();
        }
        cells
    }
}
