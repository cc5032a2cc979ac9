//! Differential-privacy tools: the exponential-mechanism private median,
//! the advanced-composition accountant, an empirical privacy auditor and the
//! binary entropy function.

use std::collections::BTreeMap;
use std::fmt::Display;

use rand::Rng;

use crate::error::{Error, Result};

/// A finite, strictly increasing output domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedDomain<T> {
    elements: Vec<T>,
}

impl<T: Ord + Clone> OrderedDomain<T> {
    pub fn new(elements: Vec<T>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Parameter("ordered domain must be non-empty".into()));
        }
        if elements.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter("ordered domain must be strictly increasing".into()));
        }
        Ok(OrderedDomain { elements })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn elements(&self) -> &[T] {
        &self.elements
    }

    pub fn index_of(&self, x: &T) -> Option<usize> {
        self.elements.binary_search(x).ok()
    }

    /// Count of database entries equal to each domain element.
    pub fn histogram(&self, database: &[T]) -> Result<Vec<u64>> {
        let mut hist = vec![0u64; self.len()];
        for d in database {
            let i = self
                .index_of(d)
                .ok_or_else(|| Error::Parameter("database element outside the domain".into()))?;
            hist[i] += 1;
        }
        Ok(hist)
    }
}

impl OrderedDomain<bool> {
    pub fn bits() -> Self {
        OrderedDomain { elements: vec![false, true] }
    }
}

/// How far domain element `j` is from being a median of the histogram:
/// `max(0, N/2 - #{d <= x_j}, N/2 - #{d >= x_j})`. Changing one database
/// entry moves it by at most 1.
pub fn rank_deviations(hist: &[u64]) -> Vec<f64> {
    let total: u64 = hist.iter().sum();
    let half = total as f64 / 2.0;
    let mut below = 0u64;
    hist.iter()
        .map(|&h| {
            let at_most = below + h;
            let at_least = total - below;
            below = at_most;
            (half - at_most as f64).max(half - at_least as f64).max(0.0)
        })
        .collect()
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Parameter(format!("epsilon must be positive and finite (got {epsilon})")));
    }
    Ok(())
}

/// Exponential-mechanism log-weights `-epsilon * deviation / 2`.
fn log_weights(hist: &[u64], epsilon: f64) -> Result<Vec<f64>> {
    check_epsilon(epsilon)?;
    if hist.iter().all(|&h| h == 0) {
        return Err(Error::Parameter("database must be non-empty".into()));
    }
    Ok(rank_deviations(hist).into_iter().map(|d| -epsilon * d / 2.0).collect())
}

/// Output distribution of the private median over the domain.
pub fn median_probabilities(hist: &[u64], epsilon: f64) -> Result<Vec<f64>> {
    let lw = log_weights(hist, epsilon)?;
    let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// Sample a domain index from the private median distribution.
pub fn priv_median_index<R: Rng + ?Sized>(hist: &[u64], epsilon: f64, rng: &mut R) -> Result<usize> {
    let lw = log_weights(hist, epsilon)?;
    let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut cumulative = Vec::with_capacity(lw.len());
    let mut acc = 0.0;
    for l in &lw {
        acc += (l - top).exp();
        cumulative.push(acc);
    }
    let u = rng.gen::<f64>() * acc;
    Ok(cumulative.iter().position(|&c| u < c).unwrap_or(lw.len() - 1))
}

/// `(epsilon, 0)`-private near-median of `database` over `domain`.
pub fn priv_median<'a, T: Ord + Clone, R: Rng + ?Sized>(
    domain: &'a OrderedDomain<T>,
    database: &[T],
    epsilon: f64,
    rng: &mut R,
) -> Result<&'a T> {
    if database.is_empty() {
        return Err(Error::Parameter("database must be non-empty".into()));
    }
    let hist = domain.histogram(database)?;
    Ok(&domain.elements[priv_median_index(&hist, epsilon, rng)?])
}

/// Rank error `m = (2/epsilon) ln(|X|/delta)` exceeded with probability at most `delta`.
pub fn rank_error_bound(domain_size: usize, epsilon: f64, delta: f64) -> f64 {
    2.0 / epsilon * (domain_size as f64 / delta).ln()
}

/// Composed guarantee for `k` adaptive calls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Composition {
    pub epsilon: f64,
    pub delta: f64,
}

/// Advanced composition:
/// `eps' = sqrt(2k ln(1/delta')) eps + 2k eps^2`, `delta_total = k delta + delta'`.
pub fn compose(epsilon: f64, delta: f64, calls: usize, delta_prime: f64) -> Result<Composition> {
    if !(delta_prime > 0.0 && delta_prime <= 1.0) {
        return Err(Error::Parameter(format!("delta' = {delta_prime} outside (0, 1]")));
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::Parameter(format!("epsilon = {epsilon} must be non-negative")));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Parameter(format!("delta = {delta} outside [0, 1)")));
    }
    let k = calls as f64;
    Ok(Composition {
        epsilon: (2.0 * k * (1.0 / delta_prime).ln()).sqrt() * epsilon + 2.0 * k * epsilon * epsilon,
        delta: k * delta + delta_prime,
    })
}

/// Per-call parameters plus a running call count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    pub epsilon_per_call: f64,
    pub delta_per_call: f64,
    pub calls: usize,
    pub delta_prime: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon_per_call: f64, delta_per_call: f64, delta_prime: f64) -> Result<Self> {
        compose(epsilon_per_call, delta_per_call, 0, delta_prime)?;
        Ok(PrivacyBudget { epsilon_per_call, delta_per_call, calls: 0, delta_prime })
    }

    pub fn composed(&self) -> Composition {
        compose(self.epsilon_per_call, self.delta_per_call, self.calls, self.delta_prime)
            .expect("validated at construction")
    }

    /// Composition if `calls` more calls were made.
    pub fn composed_after(&self, calls: usize) -> Composition {
        compose(self.epsilon_per_call, self.delta_per_call, self.calls + calls, self.delta_prime)
            .expect("validated at construction")
    }
}

/// `H(p) = -p log2 p - (1-p) log2 (1-p)`, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("p = {p} outside [0, 1]")));
    }
    let term = |x: f64| if x == 0.0 { 0.0 } else { -x * x.log2() };
    Ok(term(p) + term(1.0 - p))
}

/// Wilson score interval at `z` standard deviations.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// One output value's frequencies under the two databases.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub outcome: String,
    pub freq_d: f64,
    pub freq_d_prime: f64,
    /// `|ln(freq_d / freq_d_prime)|`, infinite if exactly one is zero.
    pub log_ratio: f64,
    /// Part of `log_ratio` explained by sampling error at 3 sigma.
    pub slack: f64,
    /// Log-ratio still implied after pulling both frequencies to the
    /// near ends of their Wilson intervals.
    pub lower_log_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
    pub trials: usize,
    pub epsilon_claimed: f64,
    pub max_log_ratio: f64,
    pub max_conservative_log_ratio: f64,
    /// Set when some output's ratio exceeds the claim beyond the slack.
    pub flagged: bool,
}

/// Sampling z-score used by the auditor.
pub const AUDIT_Z: f64 = 3.0;

/// Databases differ by replacing exactly one element.
pub fn are_neighbors<T: Ord + Clone>(d: &[T], d_prime: &[T]) -> bool {
    if d.len() != d_prime.len() {
        return false;
    }
    let mut a = d.to_vec();
    let mut b = d_prime.to_vec();
    a.sort();
    b.sort();
    let (mut i, mut j, mut only_a) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => {
                only_a += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    only_a += a.len() - i;
    only_a == 1
}

/// Run `mechanism` `trials` times on each database and compare the
/// per-output frequencies.
pub fn dp_ratio_audit<T, O, M, R>(
    mut mechanism: M,
    d: &[T],
    d_prime: &[T],
    trials: usize,
    epsilon_claimed: f64,
    rng: &mut R,
) -> Result<AuditReport>
where
    T: Ord + Clone,
    O: Ord + Display,
    M: FnMut(&[T], &mut R) -> O,
    R: Rng + ?Sized,
{
    if !are_neighbors(d, d_prime) {
        return Err(Error::Parameter("databases are not neighbors".into()));
    }
    if trials < 100_000 {
        return Err(Error::Parameter(format!("audit needs at least 1e5 trials (got {trials})")));
    }
    let mut counts: BTreeMap<O, (u64, u64)> = BTreeMap::new();
    for _ in 0..trials {
        counts.entry(mechanism(d, rng)).or_default().0 += 1;
    }
    for _ in 0..trials {
        counts.entry(mechanism(d_prime, rng)).or_default().1 += 1;
    }
    let n = trials as u64;
    let rows: Vec<AuditRow> = counts
        .into_iter()
        .map(|(outcome, (a, b))| {
            let freq_d = a as f64 / n as f64;
            let freq_d_prime = b as f64 / n as f64;
            let log_ratio = (freq_d.ln() - freq_d_prime.ln()).abs();
            let (lo_a, hi_a) = wilson_interval(a, n, AUDIT_Z);
            let (lo_b, hi_b) = wilson_interval(b, n, AUDIT_Z);
            let lower_log_ratio = if a >= b { (lo_a / hi_b).ln() } else { (lo_b / hi_a).ln() }.max(0.0);
            let slack = log_ratio - lower_log_ratio;
            AuditRow { outcome: outcome.to_string(), freq_d, freq_d_prime, log_ratio, slack, lower_log_ratio }
        })
        .collect();
    let max_log_ratio = rows.iter().map(|r| r.log_ratio).fold(0.0, f64::max);
    let max_conservative = rows.iter().map(|r| r.lower_log_ratio).fold(0.0, f64::max);
    Ok(AuditReport {
        rows,
        trials,
        epsilon_claimed,
        max_log_ratio,
        max_conservative_log_ratio: max_conservative,
        flagged: max_conservative > epsilon_claimed,
    })
}
