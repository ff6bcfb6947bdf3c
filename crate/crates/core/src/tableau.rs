//! Packed classical tableau of the sparse support.
//!
//! Column `0` is the leftmost (most significant) bit of every row, matching
//! the textual bitstring order. Internally each row is a run of `u64` words
//! with column `c` stored at bit `c % 64` of word `c / 64`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Neg;

use thiserror::Error;

use crate::ceil_log2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableauError {
    #[error("bit index {index} out of range for width {width}")]
    IndexOutOfRange { index: usize, width: usize },
    #[error("control qubit {0} is also a target")]
    ControlInTargets(usize),
    #[error("target qubit {0} is also a control")]
    TargetInControls(usize),
    #[error("toffoli needs at least one control")]
    EmptyControls,
    #[error("swap requires two distinct qubits, got {0} twice")]
    SwapSameQubit(usize),
    #[error("rows {first} and {second} are identical")]
    DuplicateRow { first: usize, second: usize },
    #[error("tableau needs at least one row")]
    Empty,
    #[error("{rows} rows do not fit in {n} qubits")]
    TooManyRows { rows: usize, n: usize },
    #[error("row {row} has width {found}, expected {expected}")]
    WidthMismatch { row: usize, expected: usize, found: usize },
    #[error("{found} signs given for {expected} rows")]
    SignCountMismatch { expected: usize, found: usize },
    #[error("invalid bit character {0:?}")]
    InvalidBit(char),
    #[error("tableau already carries the extra column")]
    AlreadyExtended,
}

/// A `±1` coefficient sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Sign {
    #[default]
    Plus,
    Minus,
}

impl Sign {
    pub fn is_minus(self) -> bool {
        self == Sign::Minus
    }

    pub fn flip(&mut self) {
        *self = -*self;
    }
}

impl Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// Fixed-width bit vector, big-endian indexed.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitRow {
    len: usize,
    words: Vec<u64>,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        BitRow { len, words: vec![0; words_for(len)] }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut row = BitRow::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                row.words[i / 64] |= 1 << (i % 64);
            }
        }
        row
    }

    /// Parses a string over `{0,1}`; leftmost character is bit 0.
    pub fn parse(text: &str) -> Result<Self, TableauError> {
        let mut row = BitRow::zeros(text.chars().count());
        for (i, ch) in text.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => row.words[i / 64] |= 1 << (i % 64),
                other => return Err(TableauError::InvalidBit(other)),
            }
        }
        Ok(row)
    }

    /// The low `len` bits of `value`, most significant first.
    pub fn from_value(value: u64, len: usize) -> Self {
        let mut row = BitRow::zeros(len);
        for i in 0..len {
            if (value >> (len - 1 - i)) & 1 == 1 {
                row.words[i / 64] |= 1 << (i % 64);
            }
        }
        row
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, index: usize) -> Result<bool, TableauError> {
        if index >= self.len {
            return Err(TableauError::IndexOutOfRange { index, width: self.len });
        }
        Ok((self.words[index / 64] >> (index % 64)) & 1 == 1)
    }

    pub fn set(&mut self, index: usize, value: bool) -> Result<(), TableauError> {
        if index >= self.len {
            return Err(TableauError::IndexOutOfRange { index, width: self.len });
        }
        let bit = 1u64 << (index % 64);
        if value {
            self.words[index / 64] |= bit;
        } else {
            self.words[index / 64] &= !bit;
        }
        Ok(())
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| (self.words[i / 64] >> (i % 64)) & 1 == 1)
    }
}

impl fmt::Display for BitRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitRow({self})")
    }
}

/// Borrowed view of one tableau row, handed to [`Tableau::find_row`].
#[derive(Clone, Copy)]
pub struct RowView<'a> {
    words: &'a [u64],
    n: usize,
    l: usize,
    width: usize,
}

impl RowView<'_> {
    #[inline]
    pub fn bit(&self, col: usize) -> bool {
        debug_assert!(col < self.width);
        (self.words[col / 64] >> (col % 64)) & 1 == 1
    }

    /// Subspace register value (first `l` columns, big-endian).
    #[inline]
    pub fn address(&self) -> u64 {
        read_address(self.words, self.l)
    }

    /// True when every main-register column at or after `from` is zero.
    #[inline]
    pub fn is_zero_from(&self, from: usize) -> bool {
        first_one(self.words, from, self.n).is_none()
    }

    /// Leftmost set main-register column in `[from, to)`.
    #[inline]
    pub fn first_one_in(&self, from: usize, to: usize) -> Option<usize> {
        first_one(self.words, from, to.min(self.n))
    }

    pub fn words(&self) -> &[u64] {
        self.words
    }
}

#[inline]
fn read_address(words: &[u64], l: usize) -> u64 {
    if l == 0 {
        return 0;
    }
    debug_assert!(l <= 64);
    let low = if l == 64 { words[0] } else { words[0] & ((1u64 << l) - 1) };
    low.reverse_bits() >> (64 - l)
}

#[inline]
fn first_one(words: &[u64], from: usize, to: usize) -> Option<usize> {
    if from >= to {
        return None;
    }
    let (w0, w1) = (from / 64, (to - 1) / 64);
    for w in w0..=w1 {
        let mut word = words[w];
        if w == w0 {
            word &= u64::MAX << (from % 64);
        }
        if w == w1 && !to.is_multiple_of(64) {
            word &= (1u64 << (to % 64)) - 1;
        }
        if word != 0 {
            return Some(w * 64 + word.trailing_zeros() as usize);
        }
    }
    None
}

/// The `s × n` (or `s × (n+1)`) support tableau with per-row signs.
#[derive(Clone, PartialEq, Eq)]
pub struct Tableau {
    s: usize,
    n: usize,
    l: usize,
    has_extra: bool,
    stride: usize,
    data: Vec<u64>,
    signs: Vec<Sign>,
}

impl Tableau {
    /// Builds a tableau from rows of equal width `n`. Missing signs default to `+`.
    pub fn new(rows: &[BitRow], signs: Option<Vec<Sign>>) -> Result<Self, TableauError> {
        let first = rows.first().ok_or(TableauError::Empty)?;
        let n = first.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(TableauError::WidthMismatch { row: i, expected: n, found: r.len() });
            }
        }
        let s = rows.len();
        if n < usize::BITS as usize - 1 && s > (1usize << n) {
            return Err(TableauError::TooManyRows { rows: s, n });
        }
        let signs = match signs {
            Some(v) if v.len() != s => {
                return Err(TableauError::SignCountMismatch { expected: s, found: v.len() })
            }
            Some(v) => v,
            None => vec![Sign::Plus; s],
        };
        let stride = words_for(n).max(1);
        let mut data = vec![0u64; s * stride];
        for (i, r) in rows.iter().enumerate() {
            data[i * stride..i * stride + r.words.len()].copy_from_slice(&r.words);
        }
        let t = Tableau { s, n, l: ceil_log2(s as u64) as usize, has_extra: false, stride, data, signs };
        t.check_distinct()?;
        Ok(t)
    }

    pub fn parse_rows(rows: &[&str], signs: Option<Vec<Sign>>) -> Result<Self, TableauError> {
        let parsed = rows.iter().map(|r| BitRow::parse(r)).collect::<Result<Vec<_>, _>>()?;
        Tableau::new(&parsed, signs)
    }

    fn check_distinct(&self) -> Result<(), TableauError> {
        let mut order: Vec<usize> = (0..self.s).collect();
        order.sort_unstable_by(|&a, &b| self.main_words(a).cmp(&self.main_words(b)).then(a.cmp(&b)));
        for pair in order.windows(2) {
            if self.main_words(pair[0]) == self.main_words(pair[1]) {
                let (first, second) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
                return Err(TableauError::DuplicateRow { first, second });
            }
        }
        Ok(())
    }

    /// Main-register words with the extra column masked out.
    fn main_words(&self, row: usize) -> MainWords<'_> {
        MainWords { words: self.row_words(row), n: self.n }
    }

    /// Appends the extra column `n`, initialised to `1` on every row.
    pub fn with_extra(&self) -> Result<Self, TableauError> {
        if self.has_extra {
            return Err(TableauError::AlreadyExtended);
        }
        let width = self.n + 1;
        let stride = words_for(width);
        let mut data = vec![0u64; self.s * stride];
        for i in 0..self.s {
            data[i * stride..i * stride + self.stride.min(stride)]
                .copy_from_slice(&self.row_words(i)[..self.stride.min(stride)]);
            data[i * stride + self.n / 64] |= 1 << (self.n % 64);
        }
        Ok(Tableau { stride, data, has_extra: true, signs: self.signs.clone(), ..*self })
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Main-register width.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Subspace width `⌈log₂ s⌉`.
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn has_extra(&self) -> bool {
        self.has_extra
    }

    /// Column count, including the extra column when present.
    pub fn n_cols(&self) -> usize {
        self.n + self.has_extra as usize
    }

    pub fn row_words(&self, row: usize) -> &[u64] {
        &self.data[row * self.stride..(row + 1) * self.stride]
    }

    pub fn view(&self, row: usize) -> RowView<'_> {
        RowView { words: self.row_words(row), n: self.n, l: self.l, width: self.n_cols() }
    }

    pub fn row(&self, row: usize) -> BitRow {
        let mut out = BitRow::zeros(self.n_cols());
        let k = out.words.len();
        out.words.copy_from_slice(&self.row_words(row)[..k]);
        out
    }

    pub fn rows(&self) -> impl Iterator<Item = BitRow> + '_ {
        (0..self.s).map(|i| self.row(i))
    }

    pub fn bit(&self, row: usize, col: usize) -> Result<bool, TableauError> {
        self.check_col(col)?;
        Ok(self.view(row).bit(col))
    }

    pub fn sign(&self, row: usize) -> Sign {
        self.signs[row]
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    pub fn address(&self, row: usize) -> u64 {
        read_address(self.row_words(row), self.l)
    }

    /// True when the non-subspace part of the main register is zero.
    pub fn in_subspace(&self, row: usize) -> bool {
        self.view(row).is_zero_from(self.l)
    }

    fn check_col(&self, col: usize) -> Result<(), TableauError> {
        if col >= self.n_cols() {
            return Err(TableauError::IndexOutOfRange { index: col, width: self.n_cols() });
        }
        Ok(())
    }

    fn mask_of(&self, cols: impl IntoIterator<Item = usize>) -> Vec<u64> {
        let mut mask = vec![0u64; self.stride];
        for c in cols {
            mask[c / 64] ^= 1 << (c % 64);
        }
        mask
    }

    /// Multi-target CX: flips every target on rows whose `control` bit is set.
    pub fn apply_cx(&mut self, control: usize, targets: &[usize]) -> Result<(), TableauError> {
        self.check_col(control)?;
        for &t in targets {
            self.check_col(t)?;
            if t == control {
                return Err(TableauError::ControlInTargets(control));
            }
        }
        let mask = self.mask_of(targets.iter().copied());
        self.cx_unchecked(control, &mask);
        Ok(())
    }

    pub(crate) fn cx_unchecked(&mut self, control: usize, mask: &[u64]) {
        let (cw, cb) = (control / 64, control % 64);
        if self.stride == 1 {
            let m = mask[0];
            for w in self.data.iter_mut() {
                let on = 0u64.wrapping_sub((*w >> cb) & 1);
                *w ^= m & on;
            }
        } else {
            for row in self.data.chunks_exact_mut(self.stride) {
                if (row[cw] >> cb) & 1 == 1 {
                    for (w, m) in row.iter_mut().zip(mask) {
                        *w ^= m;
                    }
                }
            }
        }
    }

    /// Flips `target` on rows matching every `(column, positive)` control.
    pub fn apply_toffoli(&mut self, controls: &[(usize, bool)], target: usize) -> Result<(), TableauError> {
        if controls.is_empty() {
            return Err(TableauError::EmptyControls);
        }
        self.check_col(target)?;
        for &(c, _) in controls {
            self.check_col(c)?;
            if c == target {
                return Err(TableauError::TargetInControls(target));
            }
        }
        let care = self.mask_of(controls.iter().map(|c| c.0));
        let want = self.mask_of(controls.iter().filter(|c| c.1).map(|c| c.0));
        let (tw, tb) = (target / 64, 1u64 << (target % 64));
        for row in self.data.chunks_exact_mut(self.stride) {
            if row.iter().zip(&care).zip(&want).all(|((w, c), v)| w & c == *v) {
                row[tw] ^= tb;
            }
        }
        Ok(())
    }

    /// Exchanges columns `a` and `b` in every row.
    pub fn apply_swap(&mut self, a: usize, b: usize) -> Result<(), TableauError> {
        self.check_col(a)?;
        self.check_col(b)?;
        if a == b {
            return Err(TableauError::SwapSameQubit(a));
        }
        let (aw, ab, bw, bb) = (a / 64, a % 64, b / 64, b % 64);
        for row in self.data.chunks_exact_mut(self.stride) {
            let x = ((row[aw] >> ab) ^ (row[bw] >> bb)) & 1;
            row[aw] ^= x << ab;
            row[bw] ^= x << bb;
        }
        Ok(())
    }

    /// X on the given columns of every row.
    pub fn apply_x(&mut self, targets: &[usize]) -> Result<(), TableauError> {
        for &t in targets {
            self.check_col(t)?;
        }
        let mask = self.mask_of(targets.iter().copied());
        for row in self.data.chunks_exact_mut(self.stride) {
            for (w, m) in row.iter_mut().zip(&mask) {
                *w ^= m;
            }
        }
        Ok(())
    }

    /// Smallest row index satisfying `pred`.
    pub fn find_row(&self, mut pred: impl FnMut(RowView<'_>) -> bool) -> Option<usize> {
        (0..self.s).find(|&i| pred(self.view(i)))
    }

    pub(crate) fn flip_col(&mut self, row: usize, col: usize) {
        self.data[row * self.stride + col / 64] ^= 1 << (col % 64);
    }

    pub(crate) fn flip_sign(&mut self, row: usize) {
        self.signs[row].flip();
    }

    /// Drops rows with `keep(i) == false`, preserving order and `l`.
    pub(crate) fn retain_rows(&mut self, mut keep: impl FnMut(usize) -> bool) {
        let st = self.stride;
        let mut dst = 0;
        for i in 0..self.s {
            if keep(i) {
                if dst != i {
                    self.data.copy_within(i * st..(i + 1) * st, dst * st);
                    self.signs[dst] = self.signs[i];
                }
                dst += 1;
            }
        }
        self.s = dst;
        self.data.truncate(dst * st);
        self.signs.truncate(dst);
    }

    /// Overwrites row `dst` with row `src` of a tableau of the same shape.
    pub(crate) fn copy_row_from(&mut self, dst: usize, other: &Tableau, src: usize) {
        debug_assert_eq!(self.stride, other.stride);
        let st = self.stride;
        self.data[dst * st..(dst + 1) * st].copy_from_slice(other.row_words(src));
        self.signs[dst] = other.signs[src];
    }

    pub(crate) fn set_signs(&mut self, sign: Sign) {
        self.signs.iter_mut().for_each(|x| *x = sign);
    }
}

struct MainWords<'a> {
    words: &'a [u64],
    n: usize,
}

impl MainWords<'_> {
    fn word(&self, i: usize) -> u64 {
        let w = self.words[i];
        let lo = i * 64;
        if lo + 64 <= self.n {
            w
        } else if lo >= self.n {
            0
        } else {
            w & ((1u64 << (self.n - lo)) - 1)
        }
    }
}

impl PartialEq for MainWords<'_> {
    fn eq(&self, other: &Self) -> bool {
        (0..self.words.len()).all(|i| self.word(i) == other.word(i))
    }
}

impl Eq for MainWords<'_> {}

impl PartialOrd for MainWords<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MainWords<'_> {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        (0..self.words.len()).map(|i| self.word(i)).cmp((0..other.words.len()).map(|i| other.word(i)))
    }
}

impl fmt::Display for Tableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.s {
            writeln!(f, "{} {}", self.row(i), self.signs[i])?;
        }
        Ok(())
    }
}

impl fmt::Debug for Tableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tableau(s={}, n={}, extra={})\n{}", self.s, self.n, self.has_extra, self)
    }
}
