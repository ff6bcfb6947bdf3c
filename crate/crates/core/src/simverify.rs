//! Classical basis-state simulation of the gate IR.
//!
//! Two independent engines: [`simulate`] runs one labeled state gate by gate,
//! and [`BatchSim`] runs many states at once with one bit column per qubit.
//! Neither shares code with the tableau updates done during synthesis.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::circuit::{Circuit, Control, Gate, Qubit};
use crate::tableau::{BitRow, Sign, Tableau};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("state has width {found}, circuit expects {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("AND-inverse at gate {gate} found ancilla {ancilla} not equal to its controls (input {input})")]
    AndInverseMismatch { gate: usize, ancilla: Qubit, input: u64 },
    #[error("AND at gate {gate} found ancilla {ancilla} already set (input {input})")]
    AncillaDirty { gate: usize, ancilla: Qubit, input: u64 },
    #[error("width {0} too large for exhaustive check (limit 20)")]
    TooWide(usize),
    #[error("inputs {a} and {b} map to the same output")]
    NotInjective { a: u64, b: u64 },
}

/// A basis state over the main register (plus extra qubit), the ancillas, and a sign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledState {
    pub bits: BitRow,
    pub ancillas: Vec<bool>,
    pub sign: Sign,
}

impl LabeledState {
    pub fn new(bits: BitRow, sign: Sign) -> Self {
        LabeledState { bits, ancillas: Vec::new(), sign }
    }

    fn get(&self, q: Qubit) -> bool {
        match q {
            Qubit::Main(i) => self.bits.get(i as usize).unwrap_or(false),
            Qubit::Anc(k) => self.ancillas.get(k as usize).copied().unwrap_or(false),
        }
    }

    fn set(&mut self, q: Qubit, v: bool) {
        match q {
            Qubit::Main(i) => {
                let _ = self.bits.set(i as usize, v);
            }
            Qubit::Anc(k) => {
                let k = k as usize;
                if k >= self.ancillas.len() {
                    self.ancillas.resize(k + 1, false);
                }
                self.ancillas[k] = v;
            }
        }
    }

    fn holds(&self, c: &Control) -> bool {
        self.get(c.qubit) == c.positive
    }

    pub fn ancillas_clean(&self) -> bool {
        self.ancillas.iter().all(|a| !a)
    }
}

/// Runs `circuit` on a single basis state.
pub fn simulate(circuit: &Circuit, input: &LabeledState) -> Result<LabeledState, SimError> {
    if input.bits.len() != circuit.width() {
        return Err(SimError::WidthMismatch { expected: circuit.width(), found: input.bits.len() });
    }
    let mut st = input.clone();
    for (gi, g) in circuit.gates().iter().enumerate() {
        match g {
            Gate::X { targets } => {
                for &t in targets {
                    st.set(t, !st.get(t));
                }
            }
            Gate::Cx { control, targets } => {
                if st.holds(control) {
                    for &t in targets {
                        st.set(t, !st.get(t));
                    }
                }
            }
            Gate::Toffoli { controls, target } => {
                if controls.iter().all(|c| st.holds(c)) {
                    st.set(*target, !st.get(*target));
                }
            }
            Gate::Swap { a, b } => {
                let (va, vb) = (st.get(*a), st.get(*b));
                st.set(*a, vb);
                st.set(*b, va);
            }
            Gate::And { controls, target } => {
                if st.get(*target) {
                    return Err(SimError::AncillaDirty { gate: gi, ancilla: *target, input: 0 });
                }
                let v = controls.iter().all(|c| st.holds(c));
                st.set(*target, v);
            }
            Gate::AndInverse { controls, target } => {
                let v = controls.iter().all(|c| st.holds(c));
                if st.get(*target) != v {
                    return Err(SimError::AndInverseMismatch { gate: gi, ancilla: *target, input: 0 });
                }
                st.set(*target, false);
            }
            Gate::PhaseFlip { controls } => {
                if controls.iter().all(|c| st.holds(c)) {
                    st.sign.flip();
                }
            }
        }
    }
    Ok(st)
}

/// Bit-sliced simulator: column `q` holds bit `q` of every state.
#[derive(Debug, Clone)]
pub struct BatchSim {
    rows: usize,
    width: usize,
    words: usize,
    cols: Vec<Vec<u64>>,
    signs: Vec<u64>,
}

impl BatchSim {
    /// Loads states of width `width` (main register plus extra qubit).
    pub fn new(width: usize, rows: usize) -> Self {
        let words = rows.div_ceil(64);
        BatchSim { rows, width, words, cols: vec![vec![0; words]; width], signs: vec![0; words] }
    }

    pub fn from_tableau(t: &Tableau) -> Self {
        let mut sim = BatchSim::new(t.n_cols(), t.s());
        for i in 0..t.s() {
            let v = t.view(i);
            for q in 0..t.n_cols() {
                if v.bit(q) {
                    sim.cols[q][i / 64] |= 1 << (i % 64);
                }
            }
            if t.sign(i).is_minus() {
                sim.signs[i / 64] |= 1 << (i % 64);
            }
        }
        sim
    }

    /// Every basis input of `width` qubits, row index equal to the big-endian value.
    pub fn all_inputs(width: usize) -> Self {
        let rows = 1usize << width;
        let mut sim = BatchSim::new(width, rows);
        for q in 0..width {
            let shift = width - 1 - q;
            for (w, word) in sim.cols[q].iter_mut().enumerate() {
                let mut acc = 0u64;
                for b in 0..64 {
                    let x = w * 64 + b;
                    if x < rows && (x >> shift) & 1 == 1 {
                        acc |= 1 << b;
                    }
                }
                *word = acc;
            }
        }
        sim
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    fn tail_mask(&self, w: usize) -> u64 {
        if w + 1 == self.words && !self.rows.is_multiple_of(64) {
            (1u64 << (self.rows % 64)) - 1
        } else {
            u64::MAX
        }
    }

    fn col_index(&mut self, q: Qubit) -> usize {
        let i = match q {
            Qubit::Main(i) => i as usize,
            Qubit::Anc(k) => self.width + k as usize,
        };
        if i >= self.cols.len() {
            self.cols.resize(i + 1, vec![0; self.words]);
        }
        i
    }

    fn lit(&self, col: usize, positive: bool, w: usize) -> u64 {
        let v = self.cols[col][w];
        if positive {
            v
        } else {
            !v & self.tail_mask(w)
        }
    }

    fn first_set(&self, mask: impl Fn(usize) -> u64) -> Option<u64> {
        (0..self.words).find_map(|w| {
            let m = mask(w);
            (m != 0).then(|| (w * 64 + m.trailing_zeros() as usize) as u64)
        })
    }

    /// Applies every gate of `circuit` to all loaded states.
    pub fn run(&mut self, circuit: &Circuit) -> Result<(), SimError> {
        if circuit.width() != self.width {
            return Err(SimError::WidthMismatch { expected: circuit.width(), found: self.width });
        }
        for (gi, g) in circuit.gates().iter().enumerate() {
            self.apply(gi, g)?;
        }
        Ok(())
    }

    fn apply(&mut self, gi: usize, g: &Gate) -> Result<(), SimError> {
        let words = self.words;
        match g {
            Gate::X { targets } => {
                for &t in targets {
                    let t = self.col_index(t);
                    for w in 0..words {
                        self.cols[t][w] ^= self.tail_mask(w);
                    }
                }
            }
            Gate::Cx { control, targets } => {
                let c = self.col_index(control.qubit);
                let ctrl: Vec<u64> = (0..words).map(|w| self.lit(c, control.positive, w)).collect();
                for &t in targets {
                    let t = self.col_index(t);
                    for (x, m) in self.cols[t].iter_mut().zip(&ctrl) {
                        *x ^= m;
                    }
                }
            }
            Gate::Toffoli { controls, target } => {
                let m = self.conj(controls);
                let t = self.col_index(*target);
                for (x, m) in self.cols[t].iter_mut().zip(&m) {
                    *x ^= m;
                }
            }
            Gate::Swap { a, b } => {
                let (a, b) = (self.col_index(*a), self.col_index(*b));
                self.cols.swap(a, b);
            }
            Gate::And { controls, target } => {
                let m = self.conj(controls);
                let t = self.col_index(*target);
                if let Some(input) = self.first_set(|w| self.cols[t][w]) {
                    return Err(SimError::AncillaDirty { gate: gi, ancilla: *target, input });
                }
                self.cols[t] = m;
            }
            Gate::AndInverse { controls, target } => {
                let m = self.conj(controls);
                let t = self.col_index(*target);
                if let Some(input) = self.first_set(|w| self.cols[t][w] ^ m[w]) {
                    return Err(SimError::AndInverseMismatch { gate: gi, ancilla: *target, input });
                }
                self.cols[t].iter_mut().for_each(|x| *x = 0);
            }
            Gate::PhaseFlip { controls } => {
                let m = self.conj(controls);
                for (x, m) in self.signs.iter_mut().zip(&m) {
                    *x ^= m;
                }
            }
        }
        Ok(())
    }

    fn conj(&mut self, controls: &[Control]) -> Vec<u64> {
        let idx: Vec<(usize, bool)> = controls.iter().map(|c| (self.col_index(c.qubit), c.positive)).collect();
        (0..self.words).map(|w| idx.iter().fold(self.tail_mask(w), |acc, &(c, p)| acc & self.lit(c, p, w))).collect()
    }

    pub fn bit(&self, row: usize, q: usize) -> bool {
        (self.cols[q][row / 64] >> (row % 64)) & 1 == 1
    }

    pub fn row(&self, row: usize) -> BitRow {
        let bits: Vec<bool> = (0..self.width).map(|q| self.bit(row, q)).collect();
        BitRow::from_bits(&bits)
    }

    pub fn sign(&self, row: usize) -> Sign {
        if (self.signs[row / 64] >> (row % 64)) & 1 == 1 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    /// Big-endian value of the first `width.min(64)` qubits of `row`.
    pub fn value(&self, row: usize) -> u64 {
        (0..self.width.min(64)).fold(0, |acc, q| (acc << 1) | self.bit(row, q) as u64)
    }

    /// True when every ancilla column is zero on every row.
    pub fn ancillas_clean(&self) -> bool {
        self.cols[self.width..].iter().all(|c| c.iter().all(|&w| w == 0))
    }
}

/// The signed permutation of basis states realized by a circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    pub width: usize,
    pub image: Vec<u64>,
    pub signs: Vec<Sign>,
}

impl Permutation {
    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &v)| i as u64 == v) && self.signs.iter().all(|s| !s.is_minus())
    }
}

/// Simulates every basis input of the circuit's register and checks the map
/// is a signed bijection with all ancillas returned to zero.
pub fn check_permutation(circuit: &Circuit, n_total: usize) -> Result<Permutation, SimError> {
    if n_total != circuit.width() {
        return Err(SimError::WidthMismatch { expected: circuit.width(), found: n_total });
    }
    if n_total > 20 {
        return Err(SimError::TooWide(n_total));
    }
    let mut sim = BatchSim::all_inputs(n_total);
    sim.run(circuit)?;
    let rows = sim.rows();
    let image: Vec<u64> = (0..rows).map(|i| sim.value(i)).collect();
    let mut seen = vec![u64::MAX; rows];
    for (i, &v) in image.iter().enumerate() {
        if seen[v as usize] != u64::MAX {
            return Err(SimError::NotInjective { a: seen[v as usize], b: i as u64 });
        }
        seen[v as usize] = i as u64;
    }
    let signs = (0..rows).map(|i| sim.sign(i)).collect();
    Ok(Permutation { width: n_total, image, signs })
}
