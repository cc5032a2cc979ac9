//! Independent reference implementations used to check the library.
#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode};

/// One day of the literal pool algorithm: the pool it voted with and its vote.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiteralDay {
    pub pool: Vec<usize>,
    pub prediction: bool,
}

/// Straight transcription of the deterministic pool algorithm: `S` starts
/// empty, is reset to `[n]` whenever it runs dry, `P` takes the first `k`
/// indices of `S`, and `P` votes by majority and loses its wrong members
/// every day until it is empty.
pub fn literal_det(n: usize, k: usize, rows: &[Vec<bool>], outcomes: &[bool]) -> Vec<LiteralDay> {
    let mut s: Vec<usize> = Vec::new();
    let mut p: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    let mut t = 0;
    while t < rows.len() {
        if s.is_empty() {
            s = (0..n).collect();
        }
        let take = k.min(s.len());
        p = s[..take].to_vec();
        s = s[take..].to_vec();
        while !p.is_empty() && t < rows.len() {
            let ones = p.iter().filter(|&&i| rows[t][i]).count();
            let zeros = p.len() - ones;
            let prediction = ones >= zeros;
            out.push(LiteralDay { pool: p.clone(), prediction });
            p.retain(|&i| rows[t][i] == outcomes[t]);
            t += 1;
        }
    }
    let _ = p;
    out
}

const P: usize = 320;
const RM: RoundingMode = RoundingMode::ToEven;

fn big(x: f64) -> BigFloat {
    BigFloat::from_f64(x, P)
}

fn to_f64(x: &BigFloat) -> f64 {
    format!("{x}").parse().expect("decimal rendering parses")
}

/// Advanced composition `(sqrt(2k ln(1/d')) e + 2k e^2, k d + d')` in
/// 320-bit arithmetic, rounded to f64 at the end.
pub fn compose_hp(epsilon: f64, delta: f64, k: usize, delta_prime: f64) -> (f64, f64) {
    let mut cc = Consts::new().expect("constants cache");
    let e = big(epsilon);
    let kk = BigFloat::from_f64(k as f64, P);
    let two_k = kk.mul(&big(2.0), P, RM);
    let ln_inv = big(1.0).div(&big(delta_prime), P, RM).ln(P, RM, &mut cc);
    let root = two_k.mul(&ln_inv, P, RM).sqrt(P, RM);
    let eps = root.mul(&e, P, RM).add(&two_k.mul(&e, P, RM).mul(&e, P, RM), P, RM);
    let del = kk.mul(&big(delta), P, RM).add(&big(delta_prime), P, RM);
    (to_f64(&eps), to_f64(&del))
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

/// The 100-point grid used for composition checks: ten per-call epsilons by
/// ten call counts, with assorted deltas.
pub fn compose_grid() -> Vec<(f64, f64, usize, f64)> {
    let eps = [1e-5, 1e-4, 7.8125e-4, 1e-3, 0.01, 0.05, 0.1, 0.25, 0.5, 1.0];
    let ks = [1usize, 2, 10, 100, 1000, 1024, 4096, 10_000, 65_536, 1_000_000];
    let deltas = [0.0, 1e-9, 1e-6];
    let delta_primes = [1e-6, 1.0 / (256.0 * 4096.0f64).powi(2), 0.01, 1e-12];
    let mut out = Vec::with_capacity(100);
    for (i, &e) in eps.iter().enumerate() {
        for (j, &k) in ks.iter().enumerate() {
            out.push((e, deltas[(i + j) % 3], k, delta_primes[(i * 3 + j) % 4]));
        }
    }
    out
}
