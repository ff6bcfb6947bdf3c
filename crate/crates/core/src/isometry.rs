//! Isometry synthesis: map every support row `|C_i⟩` to `a_i |f(i)⟩|0⟩`.
//!
//! All three drivers keep the tableau in sync with the emitted gates and read
//! the bijection `f` off the final tableau. Every "pick any" choice resolves
//! to the smallest row index and the leftmost bit.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Control, Gate, Qubit};
use crate::costmodel::{batch_building_bound, isometry_bound, Bound, IsometryMode, PipelineParams, Rational};
use crate::pui::{build_pui, AddressAction, Leakage, PuiError, PuiMode, PuiRequest};
use crate::simverify::{BatchSim, SimError};
use crate::tableau::{Sign, Tableau, TableauError};
use crate::floor_pow2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Tableau(#[from] TableauError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Pui(#[from] PuiError),
    #[error("input tableau already carries an extra column")]
    HasExtra,
    #[error("mode {0} has no circuit construction")]
    Unsupported(IsometryMode),
    #[error("internal invariant violated: {0}")]
    Internal(&'static str),
}

/// Per-batch audit record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchRecord {
    pub lo: u64,
    pub hi: u64,
    pub mode: PuiMode,
    pub rows: Vec<usize>,
    pub toffoli: u64,
}

/// Batch records beyond this count are dropped (only counted).
pub const TRACE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisCost {
    pub toffoli: u64,
    /// Toffolis spent creating batch elements.
    pub batch_building: u64,
    pub pui: u64,
    /// Toffolis spent on the straggler fix-ups after the final batch.
    pub fix: u64,
    pub ancilla_peak: u32,
    pub batches: u64,
    pub bound: Bound,
    pub batch_building_bound: Rational,
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub mode: IsometryMode,
    /// Maps `|C_i⟩` (with the extra qubit at `|1⟩` in restricted-phase mode)
    /// to `a_i |f(i)⟩|0⟩`.
    pub forward: Circuit,
    /// The inverse of `forward`.
    pub isometry: Circuit,
    pub f: Vec<u64>,
    /// Target signs `a_i`; all `+` outside restricted-phase mode.
    pub signs: Vec<Sign>,
    pub cost: SynthesisCost,
    pub batch_trace: Vec<BatchRecord>,
    pub final_tableau: Tableau,
}

fn q(c: usize) -> Qubit {
    Qubit::Main(c as u32)
}

/// Controls matching subspace value `k` on the first `l` qubits.
fn address_controls(k: u64, l: usize) -> Vec<Control> {
    (0..l).map(|c| Control::new(q(c), (k >> (l - 1 - c)) & 1 == 1)).collect()
}

/// Multi-controlled X using an AND ladder: `len - 1` Toffolis and
/// `len - 2` ancillas for three or more controls.
pub fn emit_mcx(c: &mut Circuit, controls: &[Control], target: Qubit) -> Result<(), CircuitError> {
    match controls {
        [] => c.append(Gate::X { targets: vec![target] }),
        [a] => c.append(Gate::Cx { control: *a, targets: vec![target] }),
        [a, b] => c.append(Gate::Toffoli { controls: [*a, *b], target }),
        _ => {
            let mut ladder = Vec::with_capacity(controls.len() - 2);
            let mut acc = controls[0];
            for &ctl in &controls[1..controls.len() - 1] {
                let anc = c.free_ancilla();
                c.append(Gate::And { controls: [acc, ctl], target: anc })?;
                ladder.push(([acc, ctl], anc));
                acc = Control::pos(anc);
            }
            c.append(Gate::Toffoli { controls: [acc, controls[controls.len() - 1]], target })?;
            for (ctls, anc) in ladder.into_iter().rev() {
                c.append(Gate::AndInverse { controls: ctls, target: anc })?;
            }
            Ok(())
        }
    }
}

/// Shared state of the batched drivers.
///
/// Rows zeroed by a PUI never change again, so they are copied to `out` and
/// dropped from the working tableau `t`; `ids` maps working rows back.
struct Batcher {
    t: Tableau,
    out: Tableau,
    ids: Vec<usize>,
    c: Circuit,
    n: usize,
    l: usize,
    m: usize,
    k: u64,
    batch: Vec<usize>,
    in_batch: Vec<bool>,
    trace: Vec<BatchRecord>,
    batches: u64,
    building: u64,
}

impl Batcher {
    fn new(t: Tableau, m: usize) -> Self {
        let (n, l, s) = (t.n(), t.l(), t.s());
        let c = Circuit::new(n, t.has_extra());
        Batcher {
            out: t.clone(),
            t,
            ids: (0..s).collect(),
            c,
            n,
            l,
            m,
            k: 0,
            batch: Vec::new(),
            in_batch: vec![false; s],
            trace: Vec::new(),
            batches: 0,
            building: 0,
        }
    }

    /// Moves the batch rows to `out`; `keep` lists working rows whose new
    /// index the caller needs.
    fn retire(&mut self, keep: &mut [usize]) {
        for &j in &self.batch {
            self.out.copy_row_from(self.ids[j], &self.t, j);
        }
        let mut remap = vec![usize::MAX; self.t.s()];
        let mut next = 0;
        for (i, r) in remap.iter_mut().enumerate() {
            if !self.in_batch[i] {
                *r = next;
                next += 1;
            }
        }
        let in_batch = core::mem::take(&mut self.in_batch);
        self.t.retain_rows(|i| !in_batch[i]);
        let mut i = 0;
        self.ids.retain(|_| {
            i += 1;
            !in_batch[i - 1]
        });
        self.in_batch = vec![false; self.t.s()];
        self.batch.clear();
        for x in keep {
            *x = remap[*x];
        }
    }

    /// Copies the remaining working rows to `out` and returns it.
    fn into_final(mut self) -> (Circuit, Tableau, Vec<BatchRecord>) {
        for j in 0..self.t.s() {
            self.out.copy_row_from(self.ids[j], &self.t, j);
        }
        (self.c, self.out, self.trace)
    }

    /// Smallest row with a main-register `1` at column `≥ from`, and that column.
    fn find_high(&self, from: usize) -> Option<(usize, usize)> {
        (0..self.t.s()).find_map(|i| self.t.view(i).first_one_in(from, self.n).map(|c| (i, c)))
    }

    /// Smallest non-batch row with a `1` in `[lo, hi)`.
    fn find_nonbatch(&self, lo: usize, hi: usize) -> Option<(usize, usize)> {
        (0..self.t.s())
            .filter(|&i| !self.in_batch[i])
            .find_map(|i| self.t.view(i).first_one_in(lo, hi).map(|c| (i, c)))
    }

    fn swap(&mut self, a: usize, b: usize) -> Result<(), SynthesisError> {
        self.c.append(Gate::Swap { a: q(a), b: q(b) })?;
        self.t.apply_swap(a, b)?;
        Ok(())
    }

    /// Toffoli `(u, +), (v, bit_j(v)) → l+b` creating a `1` at `l+b` on row `j`,
    /// where `u` is the first batch column set on `j`.
    fn toffoli_step(&mut self, j: usize, u: usize) -> Result<(), SynthesisError> {
        let b = self.batch.len();
        let w = self.batch[u - self.l];
        let (rj, rw) = (self.t.view(j), self.t.view(w));
        let v = (0..self.n).find(|&c| rj.bit(c) != rw.bit(c)).ok_or(SynthesisError::Internal("rows coincide"))?;
        let pv = rj.bit(v);
        let target = self.l + b;
        self.c.append(Gate::Toffoli { controls: [Control::pos(q(u)), Control::new(q(v), pv)], target: q(target) })?;
        self.t.apply_toffoli(&[(u, true), (v, pv)], target)?;
        self.building += 1;
        Ok(())
    }

    /// CX with control `l+b` taking row `j` to `|k⟩|e_b⟩`, then enrols `j`.
    fn enrol(&mut self, j: usize) -> Result<(), SynthesisError> {
        let b = self.batch.len();
        let ctl = self.l + b;
        let v = self.t.view(j);
        debug_assert!(v.bit(ctl));
        let mut targets = Vec::new();
        for c in 0..self.n {
            let want = if c < self.l { (self.k >> (self.l - 1 - c)) & 1 == 1 } else { c == ctl };
            if c != ctl && v.bit(c) != want {
                targets.push(c);
            }
        }
        if !targets.is_empty() {
            self.c.append(Gate::Cx { control: Control::pos(q(ctl)), targets: targets.iter().map(|&c| q(c)).collect() })?;
            self.t.apply_cx(ctl, &targets)?;
        }
        self.batch.push(j);
        self.in_batch[j] = true;
        self.k += 1;
        Ok(())
    }

    /// One batch-building step through the swap or Toffoli branch. Returns
    /// `false` when every non-batch row is already in the subspace.
    fn grow(&mut self) -> Result<bool, SynthesisError> {
        let b = self.batch.len();
        let col = self.l + b;
        if let Some((j, r)) = self.find_high(col) {
            if r != col {
                self.swap(r, col)?;
            }
            self.enrol(j)?;
            return Ok(true);
        }
        if let Some((j, u)) = self.find_nonbatch(self.l, col) {
            self.toffoli_step(j, u)?;
            self.enrol(j)?;
            return Ok(true);
        }
        Ok(false)
    }

    fn interval(&self) -> (u64, u64) {
        let b = self.batch.len() as u64;
        (self.k - b, self.k - 1)
    }

    fn request(&self, actions: Vec<AddressAction>, mode: PuiMode) -> PuiRequest {
        let (lo, hi) = self.interval();
        let mut req = PuiRequest::new((0..self.l).map(q).collect(), lo, hi, actions, mode);
        if self.t.has_extra() {
            req.extra = Some(q(self.n));
        }
        req
    }

    /// Emits the PUI and applies it to every row of the tableau.
    fn run_pui(&mut self, actions: Vec<AddressAction>, mode: PuiMode) -> Result<Vec<usize>, SynthesisError> {
        let req = self.request(actions, mode);
        let before = self.c.toffoli_count();
        let lk = build_pui(&req, &mut self.c)?;
        let hit = self.apply_leakage(&lk, &req.actions);
        let toffoli = self.c.toffoli_count() - before;
        if self.trace.len() < TRACE_CAP {
            self.trace.push(BatchRecord { lo: req.lo, hi: req.hi, mode, rows: self.batch.clone(), toffoli });
        }
        self.batches += 1;
        let mut hit = hit;
        self.retire(&mut hit);
        Ok(hit)
    }

    /// Applies the selected action to each row; returns non-batch rows hit.
    fn apply_leakage(&mut self, lk: &Leakage, actions: &[AddressAction]) -> Vec<usize> {
        let lo = lk.interval().0;
        let mut hit = Vec::new();
        for i in 0..self.t.s() {
            let Some(sel) = lk.select(self.t.address(i)) else { continue };
            let act = &actions[(sel - lo) as usize];
            for tq in &act.x_targets {
                let Qubit::Main(c) = tq else { continue };
                self.t.flip_col(i, *c as usize);
            }
            if act.clear_extra {
                self.t.flip_col(i, self.n);
            }
            if act.phase_flip {
                self.t.flip_sign(i);
            }
            if !self.in_batch[i] {
                hit.push(i);
            }
        }
        hit
    }

    fn zeroing_actions(&self) -> Vec<AddressAction> {
        (0..self.batch.len()).map(|b| AddressAction::flip(vec![q(self.l + b)])).collect()
    }
}

fn finish(
    mode: IsometryMode,
    forward: Circuit,
    f: Vec<u64>,
    signs: Vec<Sign>,
    parts: (u64, u64, u64, u64),
    trace: Vec<BatchRecord>,
    final_tableau: Tableau,
) -> Result<SynthesisResult, SynthesisError> {
    let s = final_tableau.s() as u64;
    let p = PipelineParams::new(final_tableau.n() as u32, s, mode);
    let (building, pui, fix, batches) = parts;
    forward.check_closed()?;
    let isometry = forward.invert()?;
    let cost = SynthesisCost {
        toffoli: forward.toffoli_count(),
        batch_building: building,
        pui,
        fix,
        ancilla_peak: forward.ledger().peak_ancillas,
        batches,
        bound: isometry_bound(&p),
        batch_building_bound: batch_building_bound(&p),
    };
    Ok(SynthesisResult { mode, forward, isometry, f, signs, cost, batch_trace: trace, final_tableau })
}

fn set_bits(t: &Tableau, row: usize) -> Vec<Qubit> {
    let v = t.view(row);
    (0..t.n()).filter(|&c| v.bit(c)).map(q).collect()
}

/// Batched synthesis with unrestricted zeroing PUIs.
pub fn synthesize_unrestricted(t: &Tableau) -> Result<SynthesisResult, SynthesisError> {
    if t.has_extra() {
        return Err(SynthesisError::HasExtra);
    }
    let signs = vec![Sign::Plus; t.s()];
    let mode = IsometryMode::Unrestricted;
    let (n, l) = (t.n(), t.l());
    if t.s() == 1 {
        let mut c = Circuit::new(n, false);
        let bits = set_bits(t, 0);
        let mut fin = t.clone();
        fin.set_signs(Sign::Plus);
        if !bits.is_empty() {
            c.append(Gate::X { targets: bits.clone() })?;
            let cols: Vec<usize> = (0..n).filter(|&col| t.view(0).bit(col)).collect();
            fin.apply_x(&cols)?;
        }
        return finish(mode, c, vec![0], signs, (0, 0, 0, 0), Vec::new(), fin);
    }
    let Some(m) = floor_pow2((n - l) as u64) else {
        let f = (0..t.s()).map(|i| t.address(i)).collect();
        let mut fin = t.clone();
        fin.set_signs(Sign::Plus);
        return finish(mode, Circuit::new(n, false), f, signs, (0, 0, 0, 0), Vec::new(), fin);
    };
    let mut work = t.clone();
    work.set_signs(Sign::Plus);
    let mut st = Batcher::new(work, m as usize);
    let mut pui = 0;
    loop {
        if st.batch.len() == st.m {
            let before = st.c.toffoli_count();
            let actions = st.zeroing_actions();
            st.run_pui(actions, PuiMode::Unrestricted)?;
            pui += st.c.toffoli_count() - before;
        }
        if !st.grow()? {
            break;
        }
    }
    let mut fix = 0;
    if !st.batch.is_empty() {
        let actions = st.zeroing_actions();
        let probe = st.request(actions.clone(), PuiMode::Unrestricted);
        let collide = {
            let mut scratch = Circuit::new(n, false);
            let lk = build_pui(&probe, &mut scratch)?;
            (0..st.t.s()).any(|i| !st.in_batch[i] && lk.select(st.t.address(i)).is_some())
        };
        let before = st.c.toffoli_count();
        let (lo, _) = st.interval();
        let mode = if collide { PuiMode::Restricted } else { PuiMode::Unrestricted };
        let hit = st.run_pui(actions, mode)?;
        pui += st.c.toffoli_count() - before;
        let before = st.c.toffoli_count();
        for row in hit {
            straggler_fix(&mut st, row, lo)?;
        }
        fix = st.c.toffoli_count() - before;
    }
    let parts = (st.building, pui, fix, st.batches);
    let (c, fin, trace) = st.into_final();
    let f = (0..fin.s()).map(|i| fin.address(i)).collect();
    finish(mode, c, f, signs, parts, trace, fin)
}

/// A subspace row kicked out by the final restricted PUI is `|a⟩|e_q⟩`;
/// move it to a free subspace value `k'` and clear `e_q` with an
/// `l`-controlled X on that value.
fn straggler_fix(st: &mut Batcher, row: usize, lo: u64) -> Result<(), SynthesisError> {
    let l = st.l;
    let a = st.t.address(row);
    let col = l + (a - lo) as usize;
    if !st.t.view(row).bit(col) || st.t.view(row).first_one_in(l, st.n) != Some(col) {
        return Err(SynthesisError::Internal("straggler not of the form |a>|e_q>"));
    }
    // retired rows hold exactly the addresses below k
    let mut used = vec![false; 1usize << l];
    used[..st.k as usize].iter_mut().for_each(|u| *u = true);
    for i in 0..st.t.s() {
        if st.t.in_subspace(i) {
            used[st.t.address(i) as usize] = true;
        }
    }
    let k2 = used.iter().position(|u| !u).ok_or(SynthesisError::Internal("no free subspace value"))? as u64;
    let targets: Vec<usize> = (0..l).filter(|&c| ((a ^ k2) >> (l - 1 - c)) & 1 == 1).collect();
    if !targets.is_empty() {
        st.c.append(Gate::Cx { control: Control::pos(q(col)), targets: targets.iter().map(|&c| q(c)).collect() })?;
        st.t.apply_cx(col, &targets)?;
    }
    let controls = address_controls(k2, l);
    emit_mcx(&mut st.c, &controls, q(col))?;
    let tc: Vec<(usize, bool)> = controls.iter().enumerate().map(|(c, ctl)| (c, ctl.positive)).collect();
    st.t.apply_toffoli(&tc, col)?;
    Ok(())
}

/// Batched synthesis with restricted PUIs that also fix each row's sign to
/// the tableau's sign and clear an extra qubit that starts at `|1⟩`.
pub fn synthesize_restricted_phase(t: &Tableau) -> Result<SynthesisResult, SynthesisError> {
    if t.has_extra() {
        return Err(SynthesisError::HasExtra);
    }
    let target: Vec<Sign> = t.signs().to_vec();
    let mut ext = t.with_extra()?;
    ext.set_signs(Sign::Plus);
    let mode = IsometryMode::RestrictedPhase;
    let (n, l, s) = (t.n(), t.l(), t.s());
    let extra = q(n);
    let m = floor_pow2((n - l) as u64);
    if s == 1 || m.is_none() {
        return dense_restricted(ext, target);
    }
    let mut st = Batcher::new(ext, m.unwrap() as usize);
    let mut pui = 0;
    loop {
        let b = st.batch.len();
        if b > 0 && (b == st.m || st.k == s as u64) {
            let actions = st
                .batch
                .iter()
                .enumerate()
                .map(|(qq, &j)| AddressAction {
                    x_targets: vec![q(l + qq)],
                    clear_extra: st.t.view(j).bit(n),
                    phase_flip: st.t.sign(j) != target[st.ids[j]],
                })
                .collect();
            let before = st.c.toffoli_count();
            st.run_pui(actions, PuiMode::Restricted)?;
            pui += st.c.toffoli_count() - before;
        }
        if st.k == s as u64 {
            break;
        }
        if st.grow()? {
            continue;
        }
        // escape: every unfinished row sits in the subspace with extra bit 1
        let b = st.batch.len();
        let col = l + b;
        let j = (0..st.t.s())
            .find(|&i| !st.in_batch[i] && st.t.view(i).bit(n))
            .ok_or(SynthesisError::Internal("no unfinished row left"))?;
        for qq in 0..b {
            if st.t.view(st.batch[qq]).bit(n) {
                st.c.append(Gate::Cx { control: Control::pos(q(l + qq)), targets: vec![q(col)] })?;
                st.t.apply_cx(l + qq, &[col])?;
            }
        }
        st.c.append(Gate::Cx { control: Control::pos(extra), targets: vec![q(col)] })?;
        st.t.apply_cx(n, &[col])?;
        st.enrol(j)?;
    }
    let parts = (st.building, pui, 0, st.batches);
    let (c, fin, trace) = st.into_final();
    let f = (0..fin.s()).map(|i| fin.address(i)).collect();
    finish(mode, c, f, target, parts, trace, fin)
}

/// No non-subspace register (or a single row): clear the extra qubit with an
/// X and fix signs with one restricted PUI over the negative addresses.
fn dense_restricted(mut t: Tableau, target: Vec<Sign>) -> Result<SynthesisResult, SynthesisError> {
    let (n, l, s) = (t.n(), t.l(), t.s());
    let mut c = Circuit::new(n, true);
    let extra = q(n);
    let neg: Vec<usize> = (0..s).filter(|&i| target[i].is_minus()).collect();
    let mut pui = 0;
    let mut trace = Vec::new();
    if s == 1 {
        if !neg.is_empty() {
            c.append(Gate::PhaseFlip { controls: vec![Control::pos(extra)] })?;
            t.flip_sign(0);
        }
        let mut bits = set_bits(&t, 0);
        bits.push(extra);
        let cols: Vec<usize> = (0..=n).filter(|&col| t.view(0).bit(col)).collect();
        c.append(Gate::X { targets: bits })?;
        t.apply_x(&cols)?;
    } else {
        c.append(Gate::X { targets: vec![extra] })?;
        t.apply_x(&[n])?;
        if !neg.is_empty() {
            let addrs: Vec<u64> = neg.iter().map(|&i| t.address(i)).collect();
            let (lo, hi) = (*addrs.iter().min().unwrap(), *addrs.iter().max().unwrap());
            let actions = (lo..=hi)
                .map(|a| AddressAction { phase_flip: addrs.contains(&a), ..Default::default() })
                .collect();
            let req = PuiRequest::new((0..l).map(q).collect(), lo, hi, actions, PuiMode::Restricted);
            let lk = build_pui(&req, &mut c)?;
            for i in 0..s {
                if let Some(sel) = lk.select(t.address(i)) {
                    if req.actions[(sel - lo) as usize].phase_flip {
                        t.flip_sign(i);
                    }
                }
            }
            pui = c.toffoli_count();
            trace.push(BatchRecord { lo, hi, mode: PuiMode::Restricted, rows: neg.clone(), toffoli: pui });
        }
    }
    let f = (0..s).map(|i| t.address(i)).collect();
    let batches = trace.len() as u64;
    finish(IsometryMode::RestrictedPhase, c, f, target, (0, pui, 0, batches), trace, t)
}

/// Sequential baseline: each row outside the subspace is moved to a free
/// subspace value with CX gates and finished by an `l`-controlled X.
pub fn synthesize_malvetti(t: &Tableau) -> Result<SynthesisResult, SynthesisError> {
    if t.has_extra() {
        return Err(SynthesisError::HasExtra);
    }
    let (n, l, s) = (t.n(), t.l(), t.s());
    let mut t = t.clone();
    t.set_signs(Sign::Plus);
    let mut c = Circuit::new(n, false);
    let mut used = vec![false; 1usize << l];
    for i in 0..s {
        if t.in_subspace(i) {
            used[t.address(i) as usize] = true;
        }
    }
    for i in 0..s {
        let Some(p) = t.view(i).first_one_in(l, n) else { continue };
        let a = t.address(i);
        let k = if used[a as usize] {
            used.iter().position(|u| !u).ok_or(SynthesisError::Internal("no free subspace value"))? as u64
        } else {
            a
        };
        let v = t.view(i);
        let targets: Vec<usize> = (0..n)
            .filter(|&col| col != p && if col < l { ((a ^ k) >> (l - 1 - col)) & 1 == 1 } else { v.bit(col) })
            .collect();
        if !targets.is_empty() {
            c.append(Gate::Cx { control: Control::pos(q(p)), targets: targets.iter().map(|&x| q(x)).collect() })?;
            t.apply_cx(p, &targets)?;
        }
        let controls = address_controls(k, l);
        emit_mcx(&mut c, &controls, q(p))?;
        if controls.is_empty() {
            t.apply_x(&[p])?;
        } else {
            let tc: Vec<(usize, bool)> = controls.iter().enumerate().map(|(col, ctl)| (col, ctl.positive)).collect();
            t.apply_toffoli(&tc, p)?;
        }
        used[k as usize] = true;
    }
    let f = (0..s).map(|i| t.address(i)).collect();
    let fix = c.toffoli_count();
    let signs = vec![Sign::Plus; s];
    finish(IsometryMode::Malvetti, c, f, signs, (0, 0, fix, 0), Vec::new(), t)
}

pub fn synthesize(t: &Tableau, mode: IsometryMode) -> Result<SynthesisResult, SynthesisError> {
    match mode {
        IsometryMode::Unrestricted => synthesize_unrestricted(t),
        IsometryMode::RestrictedPhase => synthesize_restricted_phase(t),
        IsometryMode::Malvetti => synthesize_malvetti(t),
        IsometryMode::Fomichev => Err(SynthesisError::Unsupported(mode)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Tableau(#[from] TableauError),
    #[error("row {row}: expected {expected}, circuit produced {got}")]
    WrongImage { row: usize, expected: u64, got: alloc::string::String },
    #[error("row {row}: wrong sign")]
    WrongSign { row: usize },
    #[error("ancillas left dirty")]
    AncillaDirty,
    #[error("mapping has {found} entries for {expected} rows")]
    MappingLength { expected: usize, found: usize },
    #[error("f is not injective")]
    NotInjective,
}

/// Simulates `res.forward` on every support row of `input` and checks that
/// row `i` lands on `a_i |f(i)⟩|0⟩` with all ancillas clean.
pub fn verify_synthesis(input: &Tableau, res: &SynthesisResult) -> Result<(), VerifyError> {
    verify_rows(input, &res.forward, &res.f, &res.signs)
}

/// Row-exact check of a forward circuit against a mapping. With an extra
/// qubit in the circuit, every row starts with it at `|1⟩`.
pub fn verify_rows(input: &Tableau, forward: &Circuit, f: &[u64], signs: &[Sign]) -> Result<(), VerifyError> {
    use alloc::string::ToString;
    if f.len() != input.s() || signs.len() != input.s() {
        return Err(VerifyError::MappingLength { expected: input.s(), found: f.len().min(signs.len()) });
    }
    let mut start = if forward.has_extra() { input.with_extra()? } else { input.clone() };
    start.set_signs(Sign::Plus);
    let mut sim = BatchSim::from_tableau(&start);
    sim.run(forward)?;
    if !sim.ancillas_clean() {
        return Err(VerifyError::AncillaDirty);
    }
    let (l, width) = (input.l(), forward.width());
    for i in 0..input.s() {
        let fi = f[i];
        let ok = (0..width).all(|c| sim.bit(i, c) == (c < l && (fi >> (l - 1 - c)) & 1 == 1));
        if fi >> l != 0 || !ok {
            return Err(VerifyError::WrongImage { row: i, expected: fi, got: sim.row(i).to_string() });
        }
        if sim.sign(i) != signs[i] {
            return Err(VerifyError::WrongSign { row: i });
        }
    }
    let mut seen = f.to_vec();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(VerifyError::NotInjective);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::{String, ToString};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::circuit::GateKind;
    use crate::tableau::BitRow;

    const SEVEN_ROWS: [&str; 7] = ["0111011", "1110111", "1001010", "0110110", "1011101", "1001111", "1111010"];

    fn seven_rows(signs: Option<Vec<Sign>>) -> Tableau {
        Tableau::parse_rows(&SEVEN_ROWS, signs).unwrap()
    }

    pub(crate) fn random_tableau(rng: &mut ChaCha8Rng, s: usize, n: usize) -> Tableau {
        let mut rows: Vec<BitRow> = Vec::with_capacity(s);
        let mut seen = alloc::collections::BTreeSet::new();
        while rows.len() < s {
            let bits: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            if seen.insert(bits.clone()) {
                rows.push(BitRow::from_bits(&bits));
            }
        }
        let signs = (0..s).map(|_| if rng.gen() { Sign::Minus } else { Sign::Plus }).collect();
        Tableau::new(&rows, Some(signs)).unwrap()
    }

    fn check_all(t: &Tableau) {
        for mode in [IsometryMode::Unrestricted, IsometryMode::RestrictedPhase, IsometryMode::Malvetti] {
            let r = synthesize(t, mode).unwrap();
            verify_synthesis(t, &r).unwrap_or_else(|e| panic!("{mode} s={} n={}: {e}", t.s(), t.n()));
            assert!(r.cost.bound.admits(r.cost.toffoli), "{mode} s={} n={}: {} > {}", t.s(), t.n(), r.cost.toffoli, r.cost.bound.value);
            if mode != IsometryMode::Malvetti {
                assert!(Rational::from(r.cost.batch_building as i128) <= r.cost.batch_building_bound);
            }
            assert_eq!(r.cost.toffoli, r.forward.recount_toffoli());
            assert_eq!(r.isometry.len(), r.forward.len());
        }
    }

    #[test]
    fn seven_rows_unrestricted() {
        let t = seven_rows(None);
        let r = synthesize_unrestricted(&t).unwrap();
        verify_synthesis(&t, &r).unwrap();
        assert!(r.cost.toffoli <= 15, "{}", r.cost.toffoli);
        assert_eq!(r.cost.bound.value, Rational::from(15));
        assert!(r.cost.ancilla_peak <= 2);
    }

    #[test]
    fn seven_rows_baseline() {
        let t = seven_rows(None);
        let r = synthesize_malvetti(&t).unwrap();
        verify_synthesis(&t, &r).unwrap();
        assert!(r.cost.toffoli <= 14);
        assert_eq!(r.cost.bound.value, Rational::from(14));
        // the first row keeps its own address
        assert_eq!(r.f[0], 0b011);
    }

    #[test]
    fn seven_rows_restricted() {
        let t = seven_rows(None);
        let r = synthesize_restricted_phase(&t).unwrap();
        verify_synthesis(&t, &r).unwrap();
        assert!(r.cost.toffoli <= 12);
        assert_eq!(r.cost.bound.value, Rational::from(12));
    }

    #[test]
    fn isometry_undoes_forward() {
        let t = seven_rows(None);
        let r = synthesize_unrestricted(&t).unwrap();
        let rows: Vec<BitRow> = r.f.iter().map(|&k| BitRow::from_value(k << 4, 7)).collect();
        let mut sim = BatchSim::from_tableau(&Tableau::new(&rows, None).unwrap());
        sim.run(&r.isometry).unwrap();
        for i in 0..7 {
            assert_eq!(sim.row(i).to_string(), SEVEN_ROWS[i]);
        }
    }

    fn cpf_count(c: &Circuit) -> u64 {
        c.ledger().count(GateKind::ControlledPhaseFlip)
    }

    #[test]
    fn minus_signs_cost_only_phase_flips() {
        let rows = ["0110", "1011"];
        let plus = Tableau::parse_rows(&rows, None).unwrap();
        let minus = Tableau::parse_rows(&rows, Some(vec![Sign::Minus; 2])).unwrap();
        let rp = synthesize_restricted_phase(&plus).unwrap();
        let rm = synthesize_restricted_phase(&minus).unwrap();
        verify_synthesis(&plus, &rp).unwrap();
        verify_synthesis(&minus, &rm).unwrap();
        assert_eq!(cpf_count(&rp.forward), 0);
        assert_eq!(cpf_count(&rm.forward), 2);
        assert_eq!(rp.cost.toffoli, rm.cost.toffoli);
    }

    #[test]
    fn m_one_boundary() {
        let t = Tableau::parse_rows(&["0010", "0101"], Some(vec![Sign::Minus, Sign::Plus])).unwrap();
        check_all(&t);
        let t = Tableau::parse_rows(&["10", "01"], Some(vec![Sign::Minus, Sign::Minus])).unwrap();
        check_all(&t);
        let t = Tableau::parse_rows(&["000", "011", "111"], Some(vec![Sign::Minus, Sign::Plus, Sign::Minus])).unwrap();
        check_all(&t);
    }

    #[test]
    fn single_row() {
        let t = Tableau::parse_rows(&["10110"], None).unwrap();
        let r = synthesize_unrestricted(&t).unwrap();
        assert_eq!(r.forward.len(), 1);
        assert_eq!(r.forward.gates()[0], Gate::X { targets: vec![q(0), q(2), q(3)] });
        assert_eq!(r.f, vec![0]);
        assert_eq!(r.cost.toffoli, 0);
        let t = Tableau::parse_rows(&["10110"], Some(vec![Sign::Minus])).unwrap();
        check_all(&t);
        let t = Tableau::parse_rows(&["000"], None).unwrap();
        check_all(&t);
    }

    #[test]
    fn subspace_inputs_are_free() {
        let rows: Vec<String> = [5u64, 0, 3, 6, 1].iter().map(|k| format!("{k:03b}00000")).collect();
        let refs: Vec<&str> = rows.iter().map(|s| s.as_str()).collect();
        let t = Tableau::parse_rows(&refs, None).unwrap();
        for mode in [IsometryMode::Unrestricted, IsometryMode::Malvetti] {
            let r = synthesize(&t, mode).unwrap();
            verify_synthesis(&t, &r).unwrap();
            assert_eq!(r.cost.toffoli, 0, "{mode}");
            assert_eq!(r.f, vec![5, 0, 3, 6, 1]);
        }
    }

    #[test]
    fn dense_inputs() {
        let t = Tableau::parse_rows(&["10", "01", "11"], Some(vec![Sign::Plus, Sign::Minus, Sign::Minus])).unwrap();
        check_all(&t);
        let r = synthesize_unrestricted(&t).unwrap();
        assert!(r.forward.is_empty());
        assert_eq!(r.f, vec![2, 1, 3]);
    }

    #[test]
    fn malvetti_two_rows_uses_no_toffoli() {
        let t = Tableau::parse_rows(&["0111", "1001"], None).unwrap();
        let r = synthesize_malvetti(&t).unwrap();
        verify_synthesis(&t, &r).unwrap();
        assert_eq!(r.cost.toffoli, 0);
    }

    #[test]
    fn fomichev_is_estimate_only() {
        assert!(matches!(synthesize(&seven_rows(None), IsometryMode::Fomichev), Err(SynthesisError::Unsupported(_))));
    }

    #[test]
    fn mcx_ladder() {
        for k in 0..6usize {
            let mut c = Circuit::new(k + 1, false);
            let controls: Vec<Control> = (0..k).map(|i| Control::new(q(i), i % 2 == 0)).collect();
            emit_mcx(&mut c, &controls, q(k)).unwrap();
            assert_eq!(c.toffoli_count(), k.saturating_sub(1) as u64);
            c.check_closed().unwrap();
            let perm = crate::simverify::check_permutation(&c, k + 1).unwrap();
            let want: u64 = (0..k).fold(0, |acc, i| (acc << 1) | (i % 2 == 0) as u64);
            for x in 0..(1u64 << (k + 1)) {
                let hit = (x >> 1) == want;
                assert_eq!(perm.image[x as usize], x ^ hit as u64);
            }
        }
    }

    #[test]
    fn random_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &s in &[2usize, 3, 7, 8, 64] {
            let l = crate::ceil_log2(s as u64) as usize;
            for n in [l.max(1), l + 1, l + 3, 16] {
                if s > 1usize << n.min(20) {
                    continue;
                }
                for _ in 0..3 {
                    check_all(&random_tableau(&mut rng, s, n));
                }
            }
        }
    }

    #[test]
    fn beats_baseline_for_large_s() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [16, 24, 40] {
            let t = random_tableau(&mut rng, 128, n);
            let a = synthesize_unrestricted(&t).unwrap().cost.toffoli;
            let b = synthesize_malvetti(&t).unwrap().cost.toffoli;
            assert!(a < b, "n={n}: {a} vs {b}");
        }
    }

    #[test]
    fn padding_does_not_increase_pui_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base = random_tableau(&mut rng, 256, 12);
        let mut last = u64::MAX;
        for pad in [0usize, 4, 20, 52, 116] {
            let rows: Vec<BitRow> = base
                .rows()
                .map(|r| {
                    let mut bits: Vec<bool> = r.iter().collect();
                    bits.extend(core::iter::repeat_n(false, pad));
                    BitRow::from_bits(&bits)
                })
                .collect();
            let t = Tableau::new(&rows, None).unwrap();
            let r = synthesize_unrestricted(&t).unwrap();
            verify_synthesis(&t, &r).unwrap();
            // zero columns give the swap branch nothing to work with, so only
            // the zeroing part shrinks with m
            assert!(r.cost.pui <= last, "pad {pad}: {} > {last}", r.cost.pui);
            last = r.cost.pui;
        }
    }

    #[test]
    fn fresh_columns_do_not_increase_cost() {
        for seed in 0..4 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut last = u64::MAX;
            for n in [16, 32, 64, 128] {
                let t = random_tableau(&mut rng, 1000, n);
                let r = synthesize_unrestricted(&t).unwrap();
                assert!(r.cost.toffoli <= last, "seed {seed} n={n}: {} > {last}", r.cost.toffoli);
                last = r.cost.toffoli;
            }
        }
    }

    #[test]
    fn final_tableau_matches_simulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_tableau(&mut rng, 40, 9);
        for mode in [IsometryMode::Unrestricted, IsometryMode::RestrictedPhase, IsometryMode::Malvetti] {
            let r = synthesize(&t, mode).unwrap();
            for i in 0..t.s() {
                assert_eq!(r.final_tableau.address(i), r.f[i]);
                assert!(r.final_tableau.in_subspace(i));
                assert_eq!(r.final_tableau.sign(i), r.signs[i]);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn prop_synthesis_verifies(seed in any::<u64>(), s in 1usize..40, extra in 0usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = (crate::ceil_log2(s as u64) as usize).max(1) + extra;
            prop_assume!(s <= 1usize << n);
            check_all(&random_tableau(&mut rng, s, n));
        }
    }
}
