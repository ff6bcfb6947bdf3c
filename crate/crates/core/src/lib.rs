//! Toffoli-efficient isometry synthesis for sparse quantum state preparation.
//!
//! A sparse state `Σ c_i |C_i⟩` is prepared by loading a dense state onto the
//! first `⌈log₂ s⌉` qubits and applying an isometry that expands it onto the
//! target support. This crate finds that isometry as a reversible circuit:
//!
//! * [`tableau`] holds the classical `s × n` bit tableau of support states.
//! * [`circuit`] is the gate IR with exact Toffoli and ancilla accounting.
//! * [`pui`] builds restricted and unrestricted partial unary iteration
//!   circuits over an address interval.
//! * [`isometry`] drives the synthesis (batched unrestricted, batched
//!   restricted with sign fixing, and the sequential baseline).
//! * [`costmodel`] evaluates the closed-form cost bounds in exact rationals.
//! * [`simverify`] is an independent basis-state simulator used to check
//!   every emitted circuit.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod circuit;
pub mod costmodel;
pub mod isometry;
pub mod pui;
pub mod simverify;
pub mod tableau;

pub use circuit::{Circuit, CircuitError, Control, CostLedger, Gate, GateKind, Qubit};
pub use costmodel::{CostReport, IsometryMode, PipelineParams, Rational};
pub use isometry::{synthesize, verify_rows, verify_synthesis, SynthesisError, SynthesisResult, VerifyError};
pub use pui::{build_pui, AddressAction, Leakage, PuiMode, PuiRequest};
pub use simverify::{check_permutation, simulate, LabeledState, SimError};
pub use tableau::{BitRow, Sign, Tableau, TableauError};

/// `⌈log₂ s⌉`, with `ceil_log2(1) == 0`.
pub fn ceil_log2(s: u64) -> u32 {
    if s <= 1 {
        0
    } else {
        64 - (s - 1).leading_zeros()
    }
}

/// Largest power of two `≤ x`; `None` for `x == 0`.
pub fn floor_pow2(x: u64) -> Option<u64> {
    if x == 0 {
        None
    } else {
        Some(1u64 << (63 - x.leading_zeros()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_helpers() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(7), 3);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(9), 4);
        assert_eq!(floor_pow2(0), None);
        assert_eq!(floor_pow2(1), Some(1));
        assert_eq!(floor_pow2(7), Some(4));
        assert_eq!(floor_pow2(8), Some(8));
    }
}
