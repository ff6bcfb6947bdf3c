//! Closed-form Toffoli and qubit estimates in exact rational arithmetic.

use alloc::vec::Vec;
use core::fmt;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::{ceil_log2, floor_pow2};

pub type Rational = Ratio<i128>;

/// `log₂ x` when `x` is a power of two.
pub fn log2_exact(x: u64) -> Option<u32> {
    x.is_power_of_two().then(|| x.trailing_zeros())
}

fn int(x: i128) -> Rational {
    Rational::from_integer(x)
}

fn pow2(e: i64) -> Rational {
    if e >= 0 {
        int(1i128 << e)
    } else {
        Rational::new(1, 1i128 << -e)
    }
}

/// `max(x, 0)`: a Toffoli count cannot be negative.
pub fn clamp0(x: Rational) -> Rational {
    if x.is_negative() {
        Rational::zero()
    } else {
        x
    }
}

pub fn ceil_u64(x: Rational) -> u64 {
    clamp0(x.ceil()).to_integer() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IsometryMode {
    Unrestricted,
    RestrictedPhase,
    Malvetti,
    Fomichev,
}

impl IsometryMode {
    pub const ALL: [IsometryMode; 4] =
        [IsometryMode::Unrestricted, IsometryMode::RestrictedPhase, IsometryMode::Malvetti, IsometryMode::Fomichev];

    pub fn name(self) -> &'static str {
        match self {
            IsometryMode::Unrestricted => "unrestricted",
            IsometryMode::RestrictedPhase => "restricted-phase",
            IsometryMode::Malvetti => "malvetti",
            IsometryMode::Fomichev => "fomichev",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        IsometryMode::ALL.into_iter().find(|m| m.name() == s)
    }
}

impl fmt::Display for IsometryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("s = {s} is not in [1, 2^{n}]")]
    BadSparsity { s: u64, n: u32 },
    #[error("QROAM exponent r = {r} must be below l = {l}")]
    RTooLarge { r: u32, l: u32 },
    #[error("lemma needs 2^(k-1) <= r <= 2^k with 1 <= k <= 24, got k = {k}, r = {r}")]
    LemmaRange { k: u32, r: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineParams {
    pub n: u32,
    pub s: u64,
    /// Rotation-angle register bits.
    pub b: u32,
    /// QROAM split exponent; `0` means plain QROM.
    pub r: u32,
    pub real_state: bool,
    pub mode: IsometryMode,
}

impl PipelineParams {
    pub fn new(n: u32, s: u64, mode: IsometryMode) -> Self {
        PipelineParams { n, s, b: 20, r: 0, real_state: false, mode }
    }

    pub fn validate(&self) -> Result<(), CostError> {
        if self.s == 0 || (self.n < 64 && self.s > 1u64 << self.n) {
            return Err(CostError::BadSparsity { s: self.s, n: self.n });
        }
        Ok(())
    }

    pub fn l(&self) -> u32 {
        ceil_log2(self.s)
    }

    pub fn s_tilde(&self) -> u64 {
        1u64 << self.l()
    }

    /// Largest power of two `≤ n - l`; `None` when `n = l`.
    pub fn m(&self) -> Option<u64> {
        floor_pow2(self.n.saturating_sub(self.l()) as u64)
    }

    /// `⌈s/m⌉`.
    pub fn batches(&self) -> u64 {
        self.m().map_or(0, |m| self.s.div_ceil(m))
    }
}

/// A bound together with the value before clamping at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bound {
    pub value: Rational,
    pub raw: Rational,
    pub qubits: u64,
}

impl Bound {
    fn new(raw: Rational, qubits: u64) -> Self {
        Bound { value: clamp0(raw), raw, qubits }
    }

    pub fn admits(&self, measured: u64) -> bool {
        int(measured as i128) <= self.value
    }
}

/// Isometry Toffoli bound and qubit count for `params.mode`.
///
/// With `n = l` there is nothing to compress: the unrestricted bound is zero
/// and the restricted-phase bound is the `s̃ - 2` of one sign-fixing PUI.
pub fn isometry_bound(p: &PipelineParams) -> Bound {
    let (n, s, l) = (p.n as i128, p.s as i128, p.l() as i128);
    let st = p.s_tilde() as i128;
    match p.mode {
        IsometryMode::Malvetti => Bound::new(int(s * (l - 1)), (n + l - 2).max(n) as u64),
        IsometryMode::Fomichev => Bound::new(int(s * (2 * l - 2) + st), (n + 5 * l - 3).max(n) as u64),
        IsometryMode::Unrestricted | IsometryMode::RestrictedPhase => {
            let restricted = p.mode == IsometryMode::RestrictedPhase;
            let Some(m) = p.m() else {
                let v = if restricted { int(st - 2) } else { Rational::zero() };
                return Bound::new(v, (n + restricted as i128).max(n) as u64);
            };
            let lm = log2_exact(m).unwrap() as i128;
            let log_sm = int(l - lm);
            let k = int(s.div_euclid(m as i128) + (s % m as i128 != 0) as i128);
            let two_m = int(2 * m as i128);
            if restricted {
                Bound::new(k * (two_m + log_sm - 3), (n + l + 1) as u64)
            } else {
                Bound::new(k * (two_m + log_sm / 2 - 3) + int(2 * l - lm), (n + l - 1).max(n) as u64)
            }
        }
    }
}

/// Batch-building bound `s - ⌈s/m⌉ + ⌈log s⌉ - 1`.
pub fn batch_building_bound(p: &PipelineParams) -> Rational {
    clamp0(int(p.s as i128 - p.batches() as i128 + p.l() as i128 - 1))
}

/// `Σ_{k=2}^{l} (2^k - 2) = 2^{l+1} - 2l - 2`.
pub fn qrom_sum_closed(l: u32) -> Rational {
    if l < 2 {
        return Rational::zero();
    }
    int((1i128 << (l + 1)) - 2 * l as i128 - 2)
}

pub fn qrom_sum_direct(l: u32) -> Rational {
    (2..=l).map(|k| int((1i128 << k) - 2)).sum()
}

/// Literal QROAM sum `b(l-1)(2^r - 1) + (2^l - 2)2^{1-r}` over `k = 2..=l`.
pub fn qroam_sum_literal(l: u32, b: u32, r: u32) -> Rational {
    if l < 2 {
        return Rational::zero();
    }
    int(b as i128 * (l as i128 - 1) * ((1i128 << r) - 1)) + int((1i128 << l) - 2) * pow2(1 - r as i64)
}

/// QROAM sum with each term's exponent clamped to `min(r, k-1)`.
pub fn qroam_sum_clamped(l: u32, b: u32, r: u32) -> Rational {
    (2..=l)
        .map(|k| {
            let rk = r.min(k - 1);
            if rk == 0 {
                int((1i128 << k) - 2)
            } else {
                int((1i128 << (k - rk)) + b as i128 * ((1i128 << rk) - 1))
            }
        })
        .sum()
}

/// Exact angle-loading cost over `k = 2..=k_max`.
fn angle_loading_exact(k_max: u32, b: u32, r: u32) -> Rational {
    if r == 0 {
        qrom_sum_direct(k_max)
    } else {
        qroam_sum_literal(k_max, b, r)
    }
}

/// Sign fix in dense prep: a lookup on `l-1` qubits at `r = 0`, else `2^{l-r} + 2^r`.
pub fn sign_fix_exact(l: u32, r: u32) -> Rational {
    if l < 2 {
        Rational::zero()
    } else if r == 0 {
        int((1i128 << (l - 1)) - 2)
    } else {
        int((1i128 << (l - r)) + (1i128 << r))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseBound {
    /// Table bound.
    pub bound: Rational,
    /// Exact finite sum (angle loading plus any sign fix).
    pub exact: Rational,
    /// Exact sum with per-term `r` clamped below `k`.
    pub exact_clamped: Rational,
    pub sign_fix_in_dense: bool,
    pub qubits: u64,
}

/// Dense-preparation Toffoli bound. The sign fix stays in dense prep only for
/// the unrestricted isometry; with the restricted-phase isometry it moves
/// into the PUIs, and a real state also drops the final phase rotation.
pub fn dense_prep_bound(p: &PipelineParams) -> Result<DenseBound, CostError> {
    let (l, b, r) = (p.l(), p.b, p.r);
    if r > 0 && r >= l {
        return Err(CostError::RTooLarge { r, l });
    }
    let st = int(p.s_tilde() as i128);
    let scale = pow2(-(r as i64));
    let ones = int((1i128 << r) - 1);
    let (li, bi) = (l as i128, b as i128);
    let sign_fix_in_dense = p.mode == IsometryMode::Unrestricted;
    let real = p.real_state && p.mode == IsometryMode::RestrictedPhase;
    let bound = if real {
        st * scale + int(bi * (li - 2)) * ones
    } else if sign_fix_in_dense {
        int(3) * st * scale + int(bi * li - bi + 1) * ones
    } else {
        int(2) * st * scale + int(bi * (li - 1)) * ones
    };
    let k_max = if real { l.saturating_sub(1) } else { l };
    let fix = if sign_fix_in_dense { sign_fix_exact(l, r) } else { Rational::zero() };
    let exact = angle_loading_exact(k_max, b, r) + fix;
    let clamped_load = if r == 0 { qrom_sum_direct(k_max) } else { qroam_sum_clamped(k_max, b, r) };
    let qubits = (bi * (1i128 << r) - r as i128 + 2 * li) as u64;
    Ok(DenseBound { bound: clamp0(bound), exact, exact_clamped: clamped_load + fix, sign_fix_in_dense, qubits })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostReport {
    pub isometry_toffoli_bound: Rational,
    pub isometry_qubits: u64,
    pub dense_toffoli_bound: Rational,
    pub dense_qubits: u64,
    pub total_toffoli: Rational,
    /// Peak register size: the larger of the isometry register and the
    /// dense-prep register next to the idle `n - l` main qubits.
    pub total_qubits: u64,
    pub components: Vec<(&'static str, Rational)>,
}

pub fn estimate(p: &PipelineParams) -> Result<CostReport, CostError> {
    p.validate()?;
    let iso = isometry_bound(p);
    let dense = dense_prep_bound(p)?;
    let mut components = Vec::new();
    components.push(("isometry", iso.value));
    let fix = if dense.sign_fix_in_dense { sign_fix_exact(p.l(), p.r).min(dense.bound) } else { Rational::zero() };
    components.push(("dense_angles", dense.bound - fix));
    if dense.sign_fix_in_dense {
        components.push(("dense_sign_fix", fix));
    }
    let total_toffoli = components.iter().map(|c| c.1).sum();
    let idle = p.n as u64 - p.l() as u64;
    Ok(CostReport {
        isometry_toffoli_bound: iso.value,
        isometry_qubits: iso.qubits,
        dense_toffoli_bound: dense.bound,
        dense_qubits: dense.qubits,
        total_toffoli,
        total_qubits: iso.qubits.max(idle + dense.qubits),
        components,
    })
}

/// Estimates for every `r` in `0..=r_max` that is valid for this `l`.
pub fn r_sweep(p: &PipelineParams, r_max: u32) -> Vec<(u32, CostReport)> {
    (0..=r_max)
        .filter_map(|r| estimate(&PipelineParams { r, ..*p }).ok().map(|c| (r, c)))
        .collect()
}

/// Hamming weight minus one, summed over `x < r` of weight above one.
fn lemma_term(x: u64) -> u64 {
    (x.count_ones() as u64).saturating_sub(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LemmaResult {
    pub k: u32,
    pub r: u64,
    pub s_r: u64,
    pub bound: Rational,
    pub holds: bool,
}

pub fn lemma_bound(k: u32, r: u64) -> Rational {
    int(r as i128) * (Rational::new(k as i128, 2) - 1) + 1
}

fn lemma_check(k: u32, r: u64) -> Result<(), CostError> {
    if k == 0 || k > 24 || r < 1u64 << (k - 1) || r > 1u64 << k {
        return Err(CostError::LemmaRange { k, r });
    }
    Ok(())
}

/// `S_r` by direct enumeration.
pub fn lemma_brute_force(k: u32, r: u64) -> Result<LemmaResult, CostError> {
    lemma_check(k, r)?;
    let s_r = (0..r).map(lemma_term).sum();
    let bound = lemma_bound(k, r);
    Ok(LemmaResult { k, r, s_r, bound, holds: int(s_r as i128) <= bound })
}

/// Every `r ∈ [2^{k-1}, 2^k]` for one `k`, via a running prefix sum.
pub fn lemma_sweep(k: u32) -> Result<Vec<LemmaResult>, CostError> {
    lemma_check(k, 1u64 << (k.max(1) - 1))?;
    let (lo, hi) = (1u64 << (k - 1), 1u64 << k);
    let mut acc: u64 = (0..lo).map(lemma_term).sum();
    let mut out = Vec::with_capacity((hi - lo + 1) as usize);
    for r in lo..=hi {
        let bound = lemma_bound(k, r);
        out.push(LemmaResult { k, r, s_r: acc, bound, holds: int(acc as i128) <= bound });
        acc += lemma_term(r);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImprovementRow {
    pub s: u64,
    pub n: u32,
    pub batched: Rational,
    pub malvetti: Rational,
    /// `malvetti / batched` at this `n`, if `batched > 0`.
    pub factor: Option<Rational>,
    /// Running maximum of `factor` over all `n' ≤ n`.
    pub best: Option<Rational>,
}

/// Worst-case improvement over the sequential baseline as `n` grows.
pub fn improvement_table(s: u64, ns: &[u32]) -> Vec<ImprovementRow> {
    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        let mk = |n, mode| isometry_bound(&PipelineParams::new(n, s, mode)).value;
        let batched = mk(n, IsometryMode::Unrestricted);
        let malvetti = mk(n, IsometryMode::Malvetti);
        let factor_at = |n| {
            let e = mk(n, IsometryMode::Unrestricted);
            (e > Rational::zero()).then(|| mk(n, IsometryMode::Malvetti) / e)
        };
        let best = (ceil_log2(s)..=n).filter(|&np| np >= 1).filter_map(factor_at).max();
        out.push(ImprovementRow { s, n, batched, malvetti, factor: factor_at(n), best });
    }
    out
}
