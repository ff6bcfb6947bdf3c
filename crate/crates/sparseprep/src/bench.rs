//! Seeded random instances and the benchmark CSV.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparseprep_core::costmodel::{ceil_u64, IsometryMode};
use sparseprep_core::isometry::{synthesize, verify_synthesis, SynthesisError, VerifyError};
use sparseprep_core::tableau::{BitRow, Sign, Tableau};
use thiserror::Error;

/// Written into the CSV header so runs can be matched to the generator.
pub const RNG_ID: &str = "ChaCha8Rng";

pub const CSV_HEADER: &str = "s,n,seed,mode,toffoli_measured,toffoli_bound,ancilla_peak,wall_seconds";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub s: u64,
    pub n: u32,
    pub seed: u64,
    pub mode: IsometryMode,
    pub toffoli_measured: u64,
    /// Bound rounded up to an integer.
    pub toffoli_bound: u64,
    pub ancilla_peak: u32,
    pub wall_seconds: f64,
}

impl BenchRecord {
    pub fn csv_row(&self, with_time: bool) -> String {
        let t = if with_time { format!("{:.6}", self.wall_seconds) } else { "0".into() };
        format!(
            "{},{},{},{},{},{},{},{}",
            self.s, self.n, self.seed, self.mode, self.toffoli_measured, self.toffoli_bound, self.ancilla_peak, t
        )
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("synthesis failed for s={s} n={n} seed={seed} mode={mode}: {source}")]
    Synthesis { s: u64, n: u32, seed: u64, mode: IsometryMode, source: SynthesisError },
    #[error("verification failed for s={s} n={n} seed={seed} mode={mode}: {source}")]
    Verify { s: u64, n: u32, seed: u64, mode: IsometryMode, source: VerifyError },
}

/// Per-instance seed derived from the run seed and the cell coordinates.
pub fn instance_seed(seed: u64, s: u64, n: u32, trial: u64) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for x in [s, n as u64, trial] {
        h = (h ^ x).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 31;
    }
    h
}

/// `s` distinct uniform `n`-bit rows drawn by rejection, with uniform signs.
/// Requires `s ≤ 2^n`.
pub fn random_support(seed: u64, s: usize, n: usize) -> Tableau {
    assert!(n >= 64 || s <= 1usize << n, "{s} rows do not fit in {n} qubits");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = n.div_ceil(64);
    let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(s);
    let mut rows = Vec::with_capacity(s);
    while rows.len() < s {
        let mut w: Vec<u64> = (0..words).map(|_| rng.gen()).collect();
        if !n.is_multiple_of(64) {
            *w.last_mut().unwrap() &= (1u64 << (n % 64)) - 1;
        }
        if seen.insert(w.clone()) {
            let bits: Vec<bool> = (0..n).map(|c| (w[c / 64] >> (c % 64)) & 1 == 1).collect();
            rows.push(BitRow::from_bits(&bits));
        }
    }
    let signs = (0..s).map(|_| if rng.gen() { Sign::Minus } else { Sign::Plus }).collect();
    Tableau::new(&rows, Some(signs)).expect("rows are distinct")
}

pub fn feasible(s: u64, n: u32) -> bool {
    s >= 1 && (n >= 64 || s <= 1u64 << n)
}

/// Runs one cell: synthesize, time it, then verify before reporting.
pub fn run_instance(s: u64, n: u32, seed: u64, mode: IsometryMode) -> Result<BenchRecord, BenchError> {
    let t = random_support(seed, s as usize, n as usize);
    let start = Instant::now();
    let r = synthesize(&t, mode).map_err(|source| BenchError::Synthesis { s, n, seed, mode, source })?;
    let wall_seconds = start.elapsed().as_secs_f64();
    verify_synthesis(&t, &r).map_err(|source| BenchError::Verify { s, n, seed, mode, source })?;
    Ok(BenchRecord {
        s,
        n,
        seed,
        mode,
        toffoli_measured: r.cost.toffoli,
        toffoli_bound: ceil_u64(r.cost.bound.value),
        ancilla_peak: r.cost.ancilla_peak,
        wall_seconds,
    })
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub s: Vec<u64>,
    pub n: Vec<u32>,
    pub trials: u64,
    pub seed: u64,
    pub modes: Vec<IsometryMode>,
    /// Writes `0` for wall time so the output is byte-stable.
    pub deterministic: bool,
}

/// Runs the sweep in sorted `(s, n, trial, mode)` order and renders the CSV.
/// Infeasible pairs produce a `# skipped` comment line.
pub fn run_bench(cfg: &BenchConfig) -> Result<(String, Vec<BenchRecord>), BenchError> {
    let mut out = format!("# rng={RNG_ID} seed={}\n{CSV_HEADER}\n", cfg.seed);
    let mut records = Vec::new();
    let (mut ss, mut ns) = (cfg.s.clone(), cfg.n.clone());
    ss.sort_unstable();
    ss.dedup();
    ns.sort_unstable();
    ns.dedup();
    for &s in &ss {
        for &n in &ns {
            if !feasible(s, n) {
                if cfg.trials > 0 {
                    writeln!(out, "# skipped s={s} n={n}: s > 2^n").unwrap();
                }
                continue;
            }
            for trial in 0..cfg.trials {
                let seed = instance_seed(cfg.seed, s, n, trial);
                for &mode in &cfg.modes {
                    let rec = run_instance(s, n, seed, mode)?;
                    writeln!(out, "{}", rec.csv_row(!cfg.deterministic)).unwrap();
                    records.push(rec);
                }
            }
        }
    }
    Ok((out, records))
}
