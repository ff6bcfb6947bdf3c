//! Text formats: state files, circuit listings, mappings, cost reports and
//! PUI action files. Every parser reports 1-based line numbers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sparseprep_core::circuit::{Circuit, CircuitError, Control, Gate, Qubit};
use sparseprep_core::costmodel::{isometry_bound, IsometryMode, PipelineParams};
use sparseprep_core::isometry::SynthesisResult;
use sparseprep_core::pui::AddressAction;
use sparseprep_core::tableau::{BitRow, Sign, Tableau, TableauError};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Circuit { line: usize, source: CircuitError },
    #[error(transparent)]
    Tableau(#[from] TableauError),
    #[error("file has no records")]
    Empty,
}

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, msg: msg.into() }
}

/// Non-blank lines with comments stripped, numbered from 1.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("").trim();
        (!body.is_empty()).then_some((i + 1, body))
    })
}

/// Parses a state file: one bitstring per line with an optional `+`/`-`.
pub fn parse_state(text: &str) -> Result<Tableau, FormatError> {
    let mut rows = Vec::new();
    let mut signs = Vec::new();
    let mut width = None;
    for (line, body) in records(text) {
        let mut parts = body.split_whitespace();
        let bits = parts.next().unwrap_or("");
        let row = BitRow::parse(bits).map_err(|e| syntax(line, e.to_string()))?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(syntax(line, format!("row has {} bits, expected {w}", row.len())))
            }
            _ => {}
        }
        let sign = match parts.next() {
            None | Some("+") => Sign::Plus,
            Some("-") => Sign::Minus,
            Some(tok) => return Err(syntax(line, format!("bad sign token `{tok}`"))),
        };
        if let Some(tok) = parts.next() {
            return Err(syntax(line, format!("unexpected token `{tok}`")));
        }
        if row.is_empty() {
            return Err(syntax(line, "empty bitstring"));
        }
        rows.push(row);
        signs.push(sign);
    }
    if rows.is_empty() {
        return Err(FormatError::Empty);
    }
    Ok(Tableau::new(&rows, Some(signs))?)
}

pub fn write_state(t: &Tableau) -> String {
    let mut out = String::new();
    for (i, row) in t.rows().enumerate() {
        let sign = if t.sign(i).is_minus() { '-' } else { '+' };
        writeln!(out, "{row} {sign}").unwrap();
    }
    out
}

fn join<T: std::fmt::Display>(items: &[T], sep: &str) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

pub fn gate_to_text(g: &Gate) -> String {
    match g {
        Gate::X { targets } => format!("X > {}", join(targets, ",")),
        Gate::Cx { control, targets } => format!("CX {control} > {}", join(targets, ",")),
        Gate::Toffoli { controls, target } => format!("TOF {} > {target}", join(controls, " ")),
        Gate::Swap { a, b } => format!("SWAP {a} {b}"),
        Gate::And { controls, target } => format!("AND {} > {target}", join(controls, " ")),
        Gate::AndInverse { controls, target } => format!("ANDINV {} > {target}", join(controls, " ")),
        Gate::PhaseFlip { controls } => format!("CPF {}", join(controls, " ")),
    }
}

pub fn write_circuit(c: &Circuit) -> String {
    let mut out = format!("# n={} extra={}\n", c.n_main(), c.has_extra() as u8);
    for g in c.gates() {
        out.push_str(&gate_to_text(g));
        out.push('\n');
    }
    out
}

fn parse_qubit(tok: &str) -> Option<Qubit> {
    let (kind, id) = tok.split_at(tok.find(|c: char| c.is_ascii_digit())?);
    let id: u32 = id.parse().ok()?;
    match kind {
        "q" => Some(Qubit::Main(id)),
        "a" => Some(Qubit::Anc(id)),
        _ => None,
    }
}

fn parse_control(tok: &str) -> Option<Control> {
    let positive = match tok.as_bytes().first()? {
        b'+' => true,
        b'-' => false,
        _ => return None,
    };
    Some(Control::new(parse_qubit(&tok[1..])?, positive))
}

fn parse_header(body: &str) -> Option<(usize, bool)> {
    let mut n = None;
    let mut extra = None;
    for kv in body.split_whitespace() {
        match kv.split_once('=')? {
            ("n", v) => n = v.parse().ok(),
            ("extra", "0") => extra = Some(false),
            ("extra", "1") => extra = Some(true),
            _ => return None,
        }
    }
    Some((n?, extra?))
}

pub fn parse_gate(line: usize, body: &str) -> Result<Gate, FormatError> {
    let (head, tail) = match body.split_once('>') {
        Some((h, t)) => (h, Some(t.trim())),
        None => (body, None),
    };
    let mut toks = head.split_whitespace();
    let mnemonic = toks.next().ok_or_else(|| syntax(line, "empty gate"))?;
    let args: Vec<&str> = toks.collect();
    let controls = || -> Result<Vec<Control>, FormatError> {
        args.iter().map(|t| parse_control(t).ok_or_else(|| syntax(line, format!("bad control `{t}`")))).collect()
    };
    let targets = || -> Result<Vec<Qubit>, FormatError> {
        let tail = tail.ok_or_else(|| syntax(line, format!("{mnemonic} needs `> targets`")))?;
        tail.split(',')
            .map(|t| parse_qubit(t.trim()).ok_or_else(|| syntax(line, format!("bad target `{}`", t.trim()))))
            .collect()
    };
    let single = || -> Result<Qubit, FormatError> {
        match targets()?.as_slice() {
            [t] => Ok(*t),
            _ => Err(syntax(line, format!("{mnemonic} takes exactly one target"))),
        }
    };
    let pair = || -> Result<[Control; 2], FormatError> {
        let c = controls()?;
        <[Control; 2]>::try_from(c).map_err(|_| syntax(line, format!("{mnemonic} takes exactly two controls")))
    };
    let no_tail = |g: Gate| if tail.is_some() { Err(syntax(line, format!("{mnemonic} takes no `>`"))) } else { Ok(g) };
    match mnemonic {
        "X" if args.is_empty() => Ok(Gate::X { targets: targets()? }),
        "CX" => match controls()?.as_slice() {
            [c] => Ok(Gate::Cx { control: *c, targets: targets()? }),
            _ => Err(syntax(line, "CX takes exactly one control")),
        },
        "TOF" => Ok(Gate::Toffoli { controls: pair()?, target: single()? }),
        "AND" => Ok(Gate::And { controls: pair()?, target: single()? }),
        "ANDINV" => Ok(Gate::AndInverse { controls: pair()?, target: single()? }),
        "SWAP" => match args.as_slice() {
            [a, b] => {
                let q = |t: &str| parse_qubit(t).ok_or_else(|| syntax(line, format!("bad qubit `{t}`")));
                no_tail(Gate::Swap { a: q(a)?, b: q(b)? })
            }
            _ => Err(syntax(line, "SWAP takes two qubits")),
        },
        "CPF" => no_tail(Gate::PhaseFlip { controls: controls()? }),
        other => Err(syntax(line, format!("unknown mnemonic `{other}`"))),
    }
}

/// Parses a circuit listing. The first non-blank line must be the header.
pub fn parse_circuit(text: &str) -> Result<Circuit, FormatError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(FormatError::Empty)?;
    let body = header.trim().strip_prefix('#').map(str::trim);
    let (n, extra) = body
        .and_then(parse_header)
        .ok_or_else(|| syntax(hline + 1, "expected header `# n=<n> extra=<0|1>`"))?;
    let mut c = Circuit::new(n, extra);
    for (i, raw) in lines {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let g = parse_gate(i + 1, body)?;
        c.append(g).map_err(|source| FormatError::Circuit { line: i + 1, source })?;
    }
    Ok(c)
}

pub fn write_mapping(f: &[u64], l: usize) -> String {
    let mut out = String::new();
    for (i, &k) in f.iter().enumerate() {
        if l == 0 {
            writeln!(out, "{i} -").unwrap();
        } else {
            writeln!(out, "{i} {k:0l$b}").unwrap();
        }
    }
    out
}

/// Parses `<row> <bits>` lines; rows must appear in order `0, 1, ...`.
/// A lone `-` stands for the empty bitstring of a one-row state.
pub fn parse_mapping(text: &str) -> Result<Vec<u64>, FormatError> {
    let mut f = Vec::new();
    for (line, body) in records(text) {
        let (idx, bits) = body.split_once(char::is_whitespace).ok_or_else(|| syntax(line, "expected `<row> <bits>`"))?;
        let idx: usize = idx.parse().map_err(|_| syntax(line, format!("bad row index `{idx}`")))?;
        if idx != f.len() {
            return Err(syntax(line, format!("row {idx} out of order, expected {}", f.len())));
        }
        let bits = bits.trim();
        let value = if bits == "-" {
            0
        } else if bits.len() <= 64 && bits.bytes().all(|b| b == b'0' || b == b'1') {
            u64::from_str_radix(bits, 2).unwrap()
        } else {
            return Err(syntax(line, format!("bad subspace value `{bits}`")));
        };
        f.push(value);
    }
    Ok(f)
}

/// `key=value` cost report. `bound` is the active mode's bound; `bound_eq1`
/// is always the unrestricted batched bound for comparison.
pub fn write_cost(r: &SynthesisResult) -> String {
    let t = &r.final_tableau;
    let batched = isometry_bound(&PipelineParams::new(t.n() as u32, t.s() as u64, IsometryMode::Unrestricted));
    let c = &r.cost;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| writeln!(out, "{k}={v}").unwrap();
    kv("mode", r.mode.to_string());
    kv("s", t.s().to_string());
    kv("n", t.n().to_string());
    kv("toffoli", c.toffoli.to_string());
    kv("bound", c.bound.value.to_string());
    kv("bound_eq1", batched.value.to_string());
    kv("batch_building", c.batch_building.to_string());
    kv("batch_building_bound", c.batch_building_bound.to_string());
    kv("pui", c.pui.to_string());
    kv("fix", c.fix.to_string());
    kv("ancilla_peak", c.ancilla_peak.to_string());
    kv("batches", c.batches.to_string());
    kv("gates", r.forward.len().to_string());
    out
}

pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, FormatError> {
    let mut out = BTreeMap::new();
    for (line, body) in records(text) {
        let (k, v) = body.split_once('=').ok_or_else(|| syntax(line, "expected `key=value`"))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// PUI action file: `<address> <targets|-> [Z] [E]` where `Z` adds a phase
/// flip and `E` clears the extra qubit. Addresses are decimal or `0b`-binary.
pub fn parse_actions(text: &str) -> Result<Vec<(u64, AddressAction)>, FormatError> {
    let mut out: Vec<(u64, AddressAction)> = Vec::new();
    for (line, body) in records(text) {
        let mut toks = body.split_whitespace();
        let addr = toks.next().unwrap();
        let address = match addr.strip_prefix("0b") {
            Some(b) => u64::from_str_radix(b, 2),
            None => addr.parse(),
        }
        .map_err(|_| syntax(line, format!("bad address `{addr}`")))?;
        let targets = toks.next().ok_or_else(|| syntax(line, "missing targets (use `-` for none)"))?;
        let mut act = AddressAction::default();
        if targets != "-" {
            for t in targets.split(',') {
                act.x_targets.push(parse_qubit(t).ok_or_else(|| syntax(line, format!("bad target `{t}`")))?);
            }
        }
        for flag in toks {
            match flag {
                "Z" => act.phase_flip = true,
                "E" => act.clear_extra = true,
                other => return Err(syntax(line, format!("unknown flag `{other}`"))),
            }
        }
        if out.iter().any(|(a, _)| *a == address) {
            return Err(syntax(line, format!("address {address} listed twice")));
        }
        out.push((address, act));
    }
    Ok(out)
}
