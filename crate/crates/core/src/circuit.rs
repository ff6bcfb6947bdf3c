//! Reversible gate IR with Toffoli and ancilla accounting.
//!
//! Toffoli cost follows the AND-gate convention: every `And` and every
//! two-control `Toffoli` costs one Toffoli; `AndInverse` is uncomputed by
//! measurement and costs nothing, as do all Clifford gates.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// A main-register qubit (`q<i>`, extra qubit at id `n`) or an ancilla (`a<k>`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Qubit {
    Main(u32),
    Anc(u32),
}

impl Qubit {
    pub fn main(i: usize) -> Self {
        Qubit::Main(i as u32)
    }
}

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Qubit::Main(i) => write!(f, "q{i}"),
            Qubit::Anc(i) => write!(f, "a{i}"),
        }
    }
}

/// A control on `qubit`, satisfied when it reads `1` (`positive`) or `0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Control {
    pub qubit: Qubit,
    pub positive: bool,
}

impl Control {
    pub fn pos(qubit: Qubit) -> Self {
        Control { qubit, positive: true }
    }

    pub fn neg(qubit: Qubit) -> Self {
        Control { qubit, positive: false }
    }

    pub fn new(qubit: Qubit, positive: bool) -> Self {
        Control { qubit, positive }
    }
}

impl fmt::Display for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.positive { '+' } else { '-' }, self.qubit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    X,
    MultiTargetCx,
    Toffoli,
    Swap,
    And,
    AndInverse,
    ControlledPhaseFlip,
}

impl GateKind {
    pub const ALL: [GateKind; 7] = [
        GateKind::X,
        GateKind::MultiTargetCx,
        GateKind::Toffoli,
        GateKind::Swap,
        GateKind::And,
        GateKind::AndInverse,
        GateKind::ControlledPhaseFlip,
    ];

    fn index(self) -> usize {
        self as usize
    }

    pub fn toffoli_cost(self) -> u64 {
        matches!(self, GateKind::Toffoli | GateKind::And) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Gate {
    X { targets: Vec<Qubit> },
    /// CX from one signed control onto any number of targets.
    Cx { control: Control, targets: Vec<Qubit> },
    Toffoli { controls: [Control; 2], target: Qubit },
    Swap { a: Qubit, b: Qubit },
    /// Computes the conjunction of two controls into a fresh ancilla.
    And { controls: [Control; 2], target: Qubit },
    /// Releases an ancilla that currently holds the conjunction of `controls`.
    AndInverse { controls: [Control; 2], target: Qubit },
    /// Multiplies the state by `-1` when all controls hold. At most two
    /// controls, so it stays Clifford.
    PhaseFlip { controls: Vec<Control> },
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::X { .. } => GateKind::X,
            Gate::Cx { .. } => GateKind::MultiTargetCx,
            Gate::Toffoli { .. } => GateKind::Toffoli,
            Gate::Swap { .. } => GateKind::Swap,
            Gate::And { .. } => GateKind::And,
            Gate::AndInverse { .. } => GateKind::AndInverse,
            Gate::PhaseFlip { .. } => GateKind::ControlledPhaseFlip,
        }
    }

    pub fn controls(&self) -> &[Control] {
        match self {
            Gate::X { .. } | Gate::Swap { .. } => &[],
            Gate::Cx { control, .. } => core::slice::from_ref(control),
            Gate::Toffoli { controls, .. } | Gate::And { controls, .. } | Gate::AndInverse { controls, .. } => {
                controls
            }
            Gate::PhaseFlip { controls } => controls,
        }
    }

    pub fn targets(&self) -> Vec<Qubit> {
        match self {
            Gate::X { targets } | Gate::Cx { targets, .. } => targets.clone(),
            Gate::Toffoli { target, .. } | Gate::And { target, .. } | Gate::AndInverse { target, .. } => {
                vec![*target]
            }
            Gate::Swap { a, b } => vec![*a, *b],
            Gate::PhaseFlip { .. } => Vec::new(),
        }
    }

    /// The inverse gate: `And` and `AndInverse` swap, everything else is self-inverse.
    pub fn inverse(&self) -> Gate {
        match self {
            Gate::And { controls, target } => Gate::AndInverse { controls: *controls, target: *target },
            Gate::AndInverse { controls, target } => Gate::And { controls: *controls, target: *target },
            g => g.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("qubit {0} is outside the register")]
    QubitOutOfRange(Qubit),
    #[error("qubit {0} appears more than once in a gate")]
    RepeatedQubit(Qubit),
    #[error("gate has no targets")]
    NoTargets,
    #[error("AND target {0} must be a free ancilla")]
    AndTargetNotFree(Qubit),
    #[error("AND-inverse target {0} is not a live ancilla")]
    AndInverseNotLive(Qubit),
    #[error("ancilla {0} used while not allocated")]
    AncillaNotLive(Qubit),
    #[error("phase flip takes one or two controls, got {0}")]
    PhaseFlipArity(usize),
    #[error("ancilla {0} still live at end of circuit")]
    AncillaLeak(Qubit),
}

/// Aggregated gate-cost counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CostLedger {
    pub toffoli: u64,
    pub peak_ancillas: u32,
    pub histogram: [u64; 7],
}

impl CostLedger {
    pub fn count(&self, kind: GateKind) -> u64 {
        self.histogram[kind.index()]
    }
}

/// Ordered gate list over `n_main` main qubits (plus the extra qubit `q<n>`
/// when `extra` is set) and a pool of ancillas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    n_main: usize,
    extra: bool,
    gates: Vec<Gate>,
    live: Vec<bool>,
    live_count: u32,
    ledger: CostLedger,
}

impl Circuit {
    pub fn new(n_main: usize, extra: bool) -> Self {
        Circuit { n_main, extra, gates: Vec::new(), live: Vec::new(), live_count: 0, ledger: CostLedger::default() }
    }

    pub fn n_main(&self) -> usize {
        self.n_main
    }

    pub fn has_extra(&self) -> bool {
        self.extra
    }

    /// Main qubits plus the extra qubit.
    pub fn width(&self) -> usize {
        self.n_main + self.extra as usize
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn ledger(&self) -> &CostLedger {
        &self.ledger
    }

    pub fn toffoli_count(&self) -> u64 {
        self.ledger.toffoli
    }

    /// Number of distinct ancilla ids ever used.
    pub fn ancilla_ids(&self) -> usize {
        self.live.len()
    }

    pub fn live_ancillas(&self) -> u32 {
        self.live_count
    }

    /// Smallest ancilla id not currently live.
    pub fn free_ancilla(&self) -> Qubit {
        let id = self.live.iter().position(|l| !l).unwrap_or(self.live.len());
        Qubit::Anc(id as u32)
    }

    fn is_live(&self, q: Qubit) -> bool {
        match q {
            Qubit::Anc(i) => self.live.get(i as usize).copied().unwrap_or(false),
            Qubit::Main(_) => true,
        }
    }

    fn check_qubit(&self, q: Qubit) -> Result<(), CircuitError> {
        match q {
            Qubit::Main(i) if (i as usize) < self.width() => Ok(()),
            Qubit::Main(_) => Err(CircuitError::QubitOutOfRange(q)),
            Qubit::Anc(_) if self.is_live(q) => Ok(()),
            Qubit::Anc(_) => Err(CircuitError::AncillaNotLive(q)),
        }
    }

    fn validate(&self, gate: &Gate) -> Result<(), CircuitError> {
        let targets = gate.targets();
        let mut seen: Vec<Qubit> = Vec::with_capacity(targets.len() + 2);
        for q in gate.controls().iter().map(|c| c.qubit).chain(targets.iter().copied()) {
            if seen.contains(&q) {
                return Err(CircuitError::RepeatedQubit(q));
            }
            seen.push(q);
        }
        match gate {
            Gate::X { targets } | Gate::Cx { targets, .. } if targets.is_empty() => {
                return Err(CircuitError::NoTargets)
            }
            Gate::PhaseFlip { controls } if controls.is_empty() || controls.len() > 2 => {
                return Err(CircuitError::PhaseFlipArity(controls.len()))
            }
            _ => {}
        }
        for c in gate.controls() {
            self.check_qubit(c.qubit)?;
        }
        match gate {
            Gate::And { target, .. } => match target {
                Qubit::Anc(_) if !self.is_live(*target) => {}
                _ => return Err(CircuitError::AndTargetNotFree(*target)),
            },
            Gate::AndInverse { target, .. } => match target {
                Qubit::Anc(_) if self.is_live(*target) => {}
                _ => return Err(CircuitError::AndInverseNotLive(*target)),
            },
            _ => {
                for t in targets {
                    self.check_qubit(t)?;
                }
            }
        }
        Ok(())
    }

    /// Appends a gate after validating it against the ancilla registry.
    pub fn append(&mut self, gate: Gate) -> Result<(), CircuitError> {
        self.validate(&gate)?;
        match &gate {
            Gate::And { target: Qubit::Anc(i), .. } => {
                let i = *i as usize;
                if i >= self.live.len() {
                    self.live.resize(i + 1, false);
                }
                self.live[i] = true;
                self.live_count += 1;
                self.ledger.peak_ancillas = self.ledger.peak_ancillas.max(self.live_count);
            }
            Gate::AndInverse { target: Qubit::Anc(i), .. } => {
                self.live[*i as usize] = false;
                self.live_count -= 1;
            }
            _ => {}
        }
        let kind = gate.kind();
        self.ledger.toffoli += kind.toffoli_cost();
        self.ledger.histogram[kind.index()] += 1;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<(), CircuitError> {
        gates.into_iter().try_for_each(|g| self.append(g))
    }

    /// Appends every gate of `other`, which must share this register layout.
    pub fn append_circuit(&mut self, other: &Circuit) -> Result<(), CircuitError> {
        self.extend(other.gates.iter().cloned())
    }

    /// Fails if any ancilla is still allocated.
    pub fn check_closed(&self) -> Result<(), CircuitError> {
        match self.live.iter().position(|&l| l) {
            Some(i) => Err(CircuitError::AncillaLeak(Qubit::Anc(i as u32))),
            None => Ok(()),
        }
    }

    /// Reversed gate order with `And`/`AndInverse` exchanged.
    pub fn invert(&self) -> Result<Circuit, CircuitError> {
        let mut out = Circuit::new(self.n_main, self.extra);
        out.extend(self.gates.iter().rev().map(Gate::inverse))?;
        Ok(out)
    }

    /// Recount of the Toffoli cost straight from the gate list.
    pub fn recount_toffoli(&self) -> u64 {
        self.gates.iter().map(|g| g.kind().toffoli_cost()).sum()
    }
}
