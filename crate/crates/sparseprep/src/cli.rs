//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sparseprep_core::costmodel::{estimate, improvement_table, lemma_brute_force, lemma_sweep, r_sweep, CostReport, IsometryMode, PipelineParams};
use sparseprep_core::isometry::{synthesize, verify_rows};
use sparseprep_core::pui::{build_pui_circuit, AddressAction, PuiMode, PuiRequest};
use sparseprep_core::simverify::check_permutation;
use sparseprep_core::tableau::Sign;
use sparseprep_core::{Qubit, Rational};
use thiserror::Error;

use crate::bench::{run_bench, BenchConfig, BenchError};
use crate::formats::{parse_actions, parse_circuit, parse_mapping, parse_state, write_circuit, write_cost, write_mapping, FormatError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Verify { .. } => CliError::Verification(e.to_string()),
            BenchError::Synthesis { .. } => CliError::Validation(e.to_string()),
        }
    }
}

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|source| CliError::Io { path: "<stdout>".into(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Unrestricted,
    RestrictedPhase,
    Malvetti,
    Fomichev,
}

impl From<ModeArg> for IsometryMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Unrestricted => IsometryMode::Unrestricted,
            ModeArg::RestrictedPhase => IsometryMode::RestrictedPhase,
            ModeArg::Malvetti => IsometryMode::Malvetti,
            ModeArg::Fomichev => IsometryMode::Fomichev,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PuiModeArg {
    Restricted,
    Unrestricted,
}

#[derive(Debug, Parser)]
#[command(name = "sparseprep", version, about = "Isometry synthesis and cost models for sparse state preparation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize the isometry for a state file.
    Synthesize(SynthesizeArgs),
    /// Check a circuit and mapping against a state file.
    Verify(VerifyArgs),
    /// Random-instance benchmark, CSV on stdout.
    Bench(BenchArgs),
    /// Worst-case improvement factor over the sequential baseline.
    Improvement(ImprovementArgs),
    /// Pipeline cost estimate.
    Estimate(EstimateArgs),
    /// Emit a standalone partial unary iteration circuit.
    Pui(PuiArgs),
    /// Brute-force check of the Hamming-weight sum bound.
    Lemma(LemmaArgs),
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// State file.
    pub state: PathBuf,
    #[arg(long, value_enum, default_value = "unrestricted")]
    pub mode: ModeArg,
    /// Output prefix; writes `.fwd.qc`, `.iso.qc`, `.map` and `.cost`.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub state: PathBuf,
    /// Forward circuit (maps support rows into the subspace).
    pub circuit: PathBuf,
    pub mapping: PathBuf,
    /// Also check the full signed permutation (width ≤ 20).
    #[arg(long)]
    pub exhaustive: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub s: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u32>,
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', value_enum, default_value = "unrestricted")]
    pub modes: Vec<ModeArg>,
    /// Report zero wall time so the CSV is byte-stable.
    #[arg(long)]
    pub deterministic: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImprovementArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub s: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u32>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub s: u64,
    #[arg(long, default_value_t = 20)]
    pub b: u32,
    /// Largest QROAM exponent; `0` gives plain QROM only.
    #[arg(long, default_value_t = 0)]
    pub rmax: u32,
    #[arg(long)]
    pub real: bool,
    #[arg(long, value_enum, default_value = "unrestricted")]
    pub mode: ModeArg,
    /// One CSV row per `r` instead of key=value blocks.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct PuiArgs {
    /// Address width.
    #[arg(long)]
    pub w: usize,
    /// Interval start.
    #[arg(long)]
    pub l: u64,
    /// Interval end (inclusive).
    #[arg(long)]
    pub r: u64,
    #[arg(long, value_enum, default_value = "restricted")]
    pub mode: PuiModeArg,
    /// Action file; addresses without a line get the empty action.
    #[arg(long)]
    pub actions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LemmaArgs {
    #[arg(long)]
    pub k: u32,
    /// Single `r`; the default checks all of `[2^{k-1}, 2^k]`.
    #[arg(long)]
    pub r: Option<u64>,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Synthesize(a) => cmd_synthesize(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Improvement(a) => cmd_improvement(a, out),
        Command::Estimate(a) => cmd_estimate(a, out),
        Command::Pui(a) => cmd_pui(a, out),
        Command::Lemma(a) => cmd_lemma(a, out),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}

fn cmd_synthesize(a: SynthesizeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let t = parse_state(&read(&a.state)?)?;
    let r = synthesize(&t, a.mode.into()).map_err(validation)?;
    verify_rows(&t, &r.forward, &r.f, &r.signs).map_err(|e| CliError::Verification(e.to_string()))?;
    let cost = write_cost(&r);
    write_file(&with_suffix(&a.out, ".fwd.qc"), &write_circuit(&r.forward))?;
    write_file(&with_suffix(&a.out, ".iso.qc"), &write_circuit(&r.isometry))?;
    write_file(&with_suffix(&a.out, ".map"), &write_mapping(&r.f, t.l()))?;
    write_file(&with_suffix(&a.out, ".cost"), &cost)?;
    emit(out, &cost)
}

fn cmd_verify(a: VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let t = parse_state(&read(&a.state)?)?;
    let c = parse_circuit(&read(&a.circuit)?)?;
    let f = parse_mapping(&read(&a.mapping)?)?;
    if c.n_main() != t.n() {
        return Err(validation(format!("circuit has n={}, state has n={}", c.n_main(), t.n())));
    }
    // without an extra qubit no sign can be fixed, so rows must keep `+`
    let signs: Vec<Sign> = if c.has_extra() { t.signs().to_vec() } else { vec![Sign::Plus; t.s()] };
    verify_rows(&t, &c, &f, &signs).map_err(|e| CliError::Verification(e.to_string()))?;
    if a.exhaustive {
        check_permutation(&c, c.width()).map_err(|e| CliError::Verification(e.to_string()))?;
    }
    emit(out, &format!("ok rows={} toffoli={}\n", t.s(), c.toffoli_count()))
}

fn cmd_bench(a: BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = BenchConfig {
        s: a.s,
        n: a.n,
        trials: a.trials,
        seed: a.seed,
        modes: a.modes.into_iter().map(Into::into).collect(),
        deterministic: a.deterministic,
    };
    if cfg.modes.contains(&IsometryMode::Fomichev) {
        return Err(validation("fomichev has no circuit construction; use `estimate`"));
    }
    let (csv, _) = run_bench(&cfg)?;
    match a.out {
        Some(p) => write_file(&p, &csv),
        None => emit(out, &csv),
    }
}

fn fmt_opt(x: Option<Rational>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{:.4}", to_f64(v)))
}

fn to_f64(x: Rational) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

fn cmd_improvement(a: ImprovementArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut text = String::from("s,n,batched,malvetti,factor,best_factor\n");
    for &s in &a.s {
        if s == 0 {
            return Err(validation("s must be positive"));
        }
        let ns: Vec<u32> = a.n.iter().copied().filter(|&n| n >= 64 || s <= 1u64 << n).collect();
        for row in improvement_table(s, &ns) {
            text.push_str(&format!("{},{},{},{},{},{}\n", row.s, row.n, row.batched, row.malvetti, fmt_opt(row.factor), fmt_opt(row.best)));
        }
    }
    emit(out, &text)
}

fn report_block(r: u32, c: &CostReport) -> String {
    let mut s = format!("[r={r}]\n");
    for (name, v) in &c.components {
        s.push_str(&format!("{name}={v}\n"));
    }
    s.push_str(&format!(
        "isometry_qubits={}\ndense_toffoli={}\ndense_qubits={}\ntotal_toffoli={}\ntotal_qubits={}\n",
        c.isometry_qubits, c.dense_toffoli_bound, c.dense_qubits, c.total_toffoli, c.total_qubits
    ));
    s
}

fn cmd_estimate(a: EstimateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let p = PipelineParams { n: a.n, s: a.s, b: a.b, r: 0, real_state: a.real, mode: a.mode.into() };
    p.validate().map_err(validation)?;
    estimate(&p).map_err(validation)?;
    let rows = r_sweep(&p, a.rmax);
    let mut text = String::new();
    if a.csv {
        text.push_str("n,s,b,r,mode,real,isometry,dense,total_toffoli,total_qubits\n");
        for (r, c) in &rows {
            text.push_str(&format!(
                "{},{},{},{r},{},{},{},{},{},{}\n",
                a.n, a.s, a.b, p.mode, a.real, c.isometry_toffoli_bound, c.dense_toffoli_bound, c.total_toffoli, c.total_qubits
            ));
        }
    } else {
        text.push_str(&format!("mode={}\nn={}\ns={}\nb={}\nreal={}\n", p.mode, a.n, a.s, a.b, a.real));
        for (r, c) in &rows {
            text.push_str(&report_block(*r, c));
        }
    }
    emit(out, &text)
}

fn cmd_pui(a: PuiArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.w == 0 || a.w > 63 || a.l > a.r || a.r >> a.w != 0 {
        return Err(validation(format!("interval [{}, {}] does not fit a {}-bit address", a.l, a.r, a.w)));
    }
    let listed = match &a.actions {
        Some(p) => parse_actions(&read(p)?)?,
        None => Vec::new(),
    };
    let count = (a.r - a.l + 1) as usize;
    let mut actions = vec![AddressAction::default(); count];
    let mut top = a.w;
    for (addr, act) in listed {
        if addr < a.l || addr > a.r {
            return Err(validation(format!("action address {addr} outside [{}, {}]", a.l, a.r)));
        }
        for t in &act.x_targets {
            match *t {
                Qubit::Main(i) if i as usize >= a.w => top = top.max(i as usize + 1),
                _ => return Err(validation(format!("target {t} must be a main qubit past the address"))),
            }
        }
        actions[(addr - a.l) as usize] = act;
    }
    let extra = actions.iter().any(|x| x.clear_extra);
    let mut req = PuiRequest::new((0..a.w).map(Qubit::main).collect(), a.l, a.r, actions, match a.mode {
        PuiModeArg::Restricted => PuiMode::Restricted,
        PuiModeArg::Unrestricted => PuiMode::Unrestricted,
    });
    if extra {
        req.extra = Some(Qubit::main(top));
    }
    let (c, lk) = build_pui_circuit(&req, top, extra).map_err(validation)?;
    let mut text = write_circuit(&c);
    text.push_str(&format!("# toffoli={} leaked={}\n", c.toffoli_count(), lk.len()));
    if let Some(list) = lk.materialize() {
        let items: Vec<String> = list.iter().map(|(j, g)| format!("{j}->{g}")).collect();
        text.push_str(&format!("# L={{{}}}\n", items.join(",")));
    }
    emit(out, &text)
}

fn cmd_lemma(a: LemmaArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let results = match a.r {
        Some(r) => vec![lemma_brute_force(a.k, r).map_err(validation)?],
        None => lemma_sweep(a.k).map_err(validation)?,
    };
    let mut text = String::from("k,r,s_r,bound,holds\n");
    for x in &results {
        text.push_str(&format!("{},{},{},{},{}\n", x.k, x.r, x.s_r, x.bound, x.holds));
    }
    emit(out, &text)?;
    if results.iter().all(|x| x.holds) {
        Ok(())
    } else {
        Err(CliError::Verification("bound violated".into()))
    }
}
