//! Partial unary iteration over an address interval.
//!
//! The builder traverses the balanced binary tree over a `w`-qubit address
//! register, descending only into subtrees that meet `[lo, hi]`. In
//! unrestricted mode a node whose right half misses the interval is passed
//! through without a gate, so its address bit becomes "free" and the leaves
//! below also fire for some addresses above `hi` (the leakage set).

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Control, Gate, Qubit};
use crate::costmodel::{log2_exact, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PuiMode {
    Restricted,
    Unrestricted,
}

/// What a leaf does: flip `x_targets`, optionally flip the extra qubit,
/// optionally multiply by `-1`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct AddressAction {
    pub x_targets: Vec<Qubit>,
    pub phase_flip: bool,
    pub clear_extra: bool,
}

impl AddressAction {
    pub fn flip(targets: Vec<Qubit>) -> Self {
        AddressAction { x_targets: targets, ..Default::default() }
    }

    pub fn is_empty(&self) -> bool {
        self.x_targets.is_empty() && !self.phase_flip && !self.clear_extra
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuiRequest {
    /// Address qubits, most significant first.
    pub address: Vec<Qubit>,
    pub lo: u64,
    pub hi: u64,
    /// `actions[i - lo]` is applied for address `i`.
    pub actions: Vec<AddressAction>,
    pub mode: PuiMode,
    pub outer_control: Option<Control>,
    /// Qubit flipped by `clear_extra`.
    pub extra: Option<Qubit>,
}

impl PuiRequest {
    pub fn new(address: Vec<Qubit>, lo: u64, hi: u64, actions: Vec<AddressAction>, mode: PuiMode) -> Self {
        PuiRequest { address, lo, hi, actions, mode, outer_control: None, extra: None }
    }

    pub fn w(&self) -> usize {
        self.address.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PuiError {
    #[error("interval [{lo}, {hi}] not inside [0, 2^{w})")]
    IntervalOutOfRange { lo: u64, hi: u64, w: usize },
    #[error("expected {expected} actions, got {found}")]
    ActionCount { expected: u64, found: usize },
    #[error("address width {0} exceeds 63")]
    TooWide(usize),
    #[error("action target {0} overlaps the address register or control")]
    TargetOverlap(Qubit),
    #[error("clear_extra requested but no extra qubit given")]
    MissingExtra,
    #[error("phase flip at address {0} has no control to attach to")]
    UncontrolledPhase(u64),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Both,
    Left,
    Right,
}

fn intersects(a: u64, b: u64, lo: u64, hi: u64) -> bool {
    a <= hi && lo <= b
}

/// Addresses at which the circuit fires, and which leaf each one receives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leakage {
    w: usize,
    lo: u64,
    hi: u64,
    mode: PuiMode,
    /// Unrestricted leaves with a non-empty free set, as value-bit masks.
    leaves: Vec<(u64, u64)>,
    must_mask: u64,
    must_value: u64,
}

/// Materialization cap for the leakage set.
pub const MATERIALIZE_LIMIT: u128 = 1 << 20;

impl Leakage {
    fn new(w: usize, lo: u64, hi: u64, mode: PuiMode) -> Self {
        let mut lk = Leakage { w, lo, hi, mode, leaves: Vec::new(), must_mask: 0, must_value: 0 };
        let (mut base, mut depth) = (0u64, 0);
        while depth < w {
            let bit = 1u64 << (w - 1 - depth);
            match lk.side(base, depth) {
                Side::Both => break,
                Side::Left => {
                    if mode == PuiMode::Restricted {
                        lk.must_mask |= bit;
                    }
                }
                Side::Right => {
                    lk.must_mask |= bit;
                    lk.must_value |= bit;
                    base += bit;
                }
            }
            depth += 1;
        }
        lk
    }

    fn side(&self, base: u64, depth: usize) -> Side {
        let half = 1u64 << (self.w - 1 - depth);
        let l = intersects(base, base + half - 1, self.lo, self.hi);
        let r = intersects(base + half, base + 2 * half - 1, self.lo, self.hi);
        match (l, r) {
            (true, true) => Side::Both,
            (true, false) => Side::Left,
            _ => Side::Right,
        }
    }

    pub fn interval(&self) -> (u64, u64) {
        (self.lo, self.hi)
    }

    /// The in-interval address whose action fires on `addr`, if any.
    pub fn select(&self, addr: u64) -> Option<u64> {
        if addr & self.must_mask != self.must_value {
            return None;
        }
        let mut base = 0u64;
        for depth in 0..self.w {
            let bit = 1u64 << (self.w - 1 - depth);
            let set = addr & bit != 0;
            match self.side(base, depth) {
                Side::Both => base += bit * set as u64,
                Side::Left if set && self.mode == PuiMode::Restricted => return None,
                Side::Left => {}
                Side::Right if !set => return None,
                Side::Right => base += bit,
            }
        }
        Some(base)
    }

    /// `g(addr)` for `addr` in `L`.
    pub fn g(&self, addr: u64) -> Option<u64> {
        if addr <= self.hi {
            return None;
        }
        self.select(addr)
    }

    pub fn contains(&self, addr: u64) -> bool {
        self.g(addr).is_some()
    }

    /// `|L|`.
    pub fn len(&self) -> u128 {
        self.leaves.iter().map(|&(_, f)| (1u128 << f.count_ones()) - 1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    /// `(j, g(j))` for every `j ∈ L`, sorted by `j`, built from the leaf rule:
    /// equal to the leaf outside its free positions, at least one `1` inside.
    /// `None` when `|L|` exceeds [`MATERIALIZE_LIMIT`].
    pub fn materialize(&self) -> Option<Vec<(u64, u64)>> {
        if self.len() > MATERIALIZE_LIMIT {
            return None;
        }
        let mut out = Vec::with_capacity(self.len() as usize);
        for &(leaf, free) in &self.leaves {
            // enumerate non-empty submasks of `free`
            let mut sub = free;
            while sub != 0 {
                out.push((leaf | sub, leaf));
                sub = (sub - 1) & free;
            }
        }
        out.sort_unstable();
        Some(out)
    }
}

struct Builder<'a> {
    req: &'a PuiRequest,
    circuit: &'a mut Circuit,
    leakage: Leakage,
}

impl Builder<'_> {
    fn node(&mut self, base: u64, depth: usize, control: Option<Control>, free: u64) -> Result<(), PuiError> {
        let w = self.req.w();
        if depth == w {
            return self.leaf(base, control, free);
        }
        let bit = 1u64 << (w - 1 - depth);
        let d = self.req.address[depth];
        match (self.leakage.side(base, depth), control) {
            (Side::Both, Some(c)) => {
                let anc = self.circuit.free_ancilla();
                let a = Control::pos(anc);
                self.circuit.append(Gate::And { controls: [c, Control::neg(d)], target: anc })?;
                self.node(base, depth + 1, Some(a), free)?;
                self.circuit.append(Gate::Cx { control: c, targets: vec![anc] })?;
                self.node(base + bit, depth + 1, Some(a), free)?;
                // after the toggle the ancilla holds c ∧ d
                self.circuit.append(Gate::AndInverse { controls: [c, Control::pos(d)], target: anc })?;
            }
            (Side::Both, None) => {
                self.node(base, depth + 1, Some(Control::neg(d)), free)?;
                self.node(base + bit, depth + 1, Some(Control::pos(d)), free)?;
            }
            (Side::Left, _) if self.req.mode == PuiMode::Unrestricted => {
                self.node(base, depth + 1, control, free | bit)?;
            }
            (side, Some(c)) => {
                let (next, ctrl) = if side == Side::Left { (base, Control::neg(d)) } else { (base + bit, Control::pos(d)) };
                let anc = self.circuit.free_ancilla();
                self.circuit.append(Gate::And { controls: [c, ctrl], target: anc })?;
                self.node(next, depth + 1, Some(Control::pos(anc)), free)?;
                self.circuit.append(Gate::AndInverse { controls: [c, ctrl], target: anc })?;
            }
            (Side::Left, None) => self.node(base, depth + 1, Some(Control::neg(d)), free)?,
            (Side::Right, None) => self.node(base + bit, depth + 1, Some(Control::pos(d)), free)?,
        }
        Ok(())
    }

    fn leaf(&mut self, addr: u64, control: Option<Control>, free: u64) -> Result<(), PuiError> {
        if free != 0 {
            self.leakage.leaves.push((addr, free));
        }
        let action = &self.req.actions[(addr - self.req.lo) as usize];
        let mut targets = action.x_targets.clone();
        if action.clear_extra {
            targets.push(self.req.extra.ok_or(PuiError::MissingExtra)?);
        }
        match control {
            Some(c) => {
                if !targets.is_empty() {
                    self.circuit.append(Gate::Cx { control: c, targets })?;
                }
                if action.phase_flip {
                    self.circuit.append(Gate::PhaseFlip { controls: vec![c] })?;
                }
            }
            None => {
                if action.phase_flip {
                    return Err(PuiError::UncontrolledPhase(addr));
                }
                if !targets.is_empty() {
                    self.circuit.append(Gate::X { targets })?;
                }
            }
        }
        Ok(())
    }
}

fn validate(req: &PuiRequest) -> Result<(), PuiError> {
    let w = req.w();
    if w > 63 {
        return Err(PuiError::TooWide(w));
    }
    if req.lo > req.hi || req.hi >= 1u64 << w {
        return Err(PuiError::IntervalOutOfRange { lo: req.lo, hi: req.hi, w });
    }
    let expected = req.hi - req.lo + 1;
    if req.actions.len() as u64 != expected {
        return Err(PuiError::ActionCount { expected, found: req.actions.len() });
    }
    let reserved = |q: &Qubit| req.address.contains(q) || req.outer_control.is_some_and(|c| c.qubit == *q);
    for a in &req.actions {
        if let Some(q) = a.x_targets.iter().chain(req.extra.iter().filter(|_| a.clear_extra)).find(|q| reserved(q)) {
            return Err(PuiError::TargetOverlap(*q));
        }
    }
    Ok(())
}

/// Appends the PUI circuit for `req` to `circuit` and returns its leakage.
pub fn build_pui(req: &PuiRequest, circuit: &mut Circuit) -> Result<Leakage, PuiError> {
    validate(req)?;
    let leakage = Leakage::new(req.w(), req.lo, req.hi, req.mode);
    let mut b = Builder { req, circuit, leakage };
    b.node(0, 0, req.outer_control, 0)?;
    Ok(b.leakage)
}

/// Builds the PUI into a fresh circuit over `n_main` qubits.
pub fn build_pui_circuit(req: &PuiRequest, n_main: usize, extra: bool) -> Result<(Circuit, Leakage), PuiError> {
    let mut c = Circuit::new(n_main, extra);
    let lk = build_pui(req, &mut c)?;
    Ok((c, lk))
}

/// Selection cost of unrestricted unary iteration from an address of width
/// `w` down to nodes of size `2^l_log`: `2^{w-l}((w-l)/2 - 1) + 1` at full
/// coverage, else the `covered ((w-l)/2 - 1) + 1` bound.
pub fn pui_selection_cost(w: u32, l_log: u32, covered: u64) -> Rational {
    assert!(l_log <= w);
    let h = Rational::from_integer((w - l_log) as i128) / 2 - 1;
    let full = 1u64 << (w - l_log);
    let k = if covered >= full { full } else { covered };
    Rational::from_integer(k as i128) * h + 1
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostArgError {
    #[error("{0} is not a power of two")]
    NotPowerOfTwo(u64),
    #[error("interval size {m} exceeds address space {s}")]
    TooLarge { m: u64, s: u64 },
}

/// Total Toffoli cost of sweeping `n_intervals` intervals of size `m` in an
/// address space of size `S`: `n(m + log(S/m)/2 - 2)` unrestricted,
/// `n(m + log(S/m) - 2)` restricted.
pub fn pui_total_cost(s_space: u64, m: u64, n_intervals: u64, mode: PuiMode) -> Result<Rational, CostArgError> {
    let ls = log2_exact(s_space).ok_or(CostArgError::NotPowerOfTwo(s_space))?;
    let lm = log2_exact(m).ok_or(CostArgError::NotPowerOfTwo(m))?;
    if m > s_space {
        return Err(CostArgError::TooLarge { m, s: s_space });
    }
    let lg = Rational::from_integer((ls - lm) as i128);
    let per = match mode {
        PuiMode::Unrestricted => Rational::from_integer(m as i128) + lg / 2 - 2,
        PuiMode::Restricted => Rational::from_integer(m as i128) + lg - 2,
    };
    let total = per * Rational::from_integer(n_intervals as i128);
    Ok(if total < Rational::zero() { Rational::zero() } else { total })
}
