//! Formal ℤ-linear combinations of `e`-terms and the recursive sums `𝒜ₙ`, `𝒮ₙ`, `𝒞ₙ`.
//!
//! A term `e(ᾱ)` stands for `Σᵢ(−1)ⁱ φ_{ᾱⁱ}`. Its arguments are concrete
//! ordinals or formal symbols `α_σ` for finite sets `σ`. A [`FormalSum`]
//! keeps `𝖽e(β̄)` blocks unexpanded until asked, so that the block structure
//! of `𝒮ₙ` stays visible.

mod instance;

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;
use serde::Serialize;
use thiserror::Error;

use crate::families::FamilyError;
use crate::ordcomb::OrdSet;

pub use instance::{
    check_u, evaluate, gen_u_instance, gen_u_instance_with_epsilon, resolve, AssignmentEntry,
    UCheck, UFailure, UInstance, UInstanceFile,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("e-term needs at least {min} arguments, got {len}")]
    TooShort { len: usize, min: usize },
    #[error("cannot append {symbol} to {term}: it does not lie above every entry")]
    OrderViolation { term: String, symbol: String },
    #[error("slice index {j} out of range for {term}")]
    SliceOutOfRange { term: String, j: usize },
    #[error("slicing {term} would leave fewer than two arguments")]
    SliceTooShort { term: String },
    #[error("operation needs a sum without unexpanded d-blocks")]
    HasBlocks,
    #[error("expected a set of size {expected}, got {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("n must be at least 2, got {0}")]
    BadN(usize),
    #[error("chain length {m} out of range 1..={size}")]
    ChainLength { m: usize, size: usize },
    #[error("symbol {0} has no assigned ordinal")]
    Unresolvable(String),
    #[error("resolved tuple {tuple:?} of {term} is not strictly increasing")]
    NotIncreasing { term: String, tuple: Vec<u64> },
    #[error("instance invalid: {0}")]
    Instance(String),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

/// A concrete ordinal `η` or a formal `α_σ`. `α_{{η}}` is `η` itself.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum IndexSymbol {
    Concrete(u64),
    Formal(OrdSet),
}

impl IndexSymbol {
    /// `α_σ`, identified with the ordinal when `σ` is a singleton.
    pub fn alpha(sigma: &OrdSet) -> IndexSymbol {
        match sigma.elements() {
            [eta] => IndexSymbol::Concrete(*eta),
            _ => IndexSymbol::Formal(sigma.clone()),
        }
    }

    /// The set `σ` this symbol stands for (`{η}` for a concrete ordinal).
    pub fn index_set(&self) -> OrdSet {
        match self {
            IndexSymbol::Concrete(eta) => OrdSet::from_unsorted([*eta]),
            IndexSymbol::Formal(s) => s.clone(),
        }
    }

    /// The order forced along `⊊`-chains: `η < ζ` for ordinals, `η < α_σ`
    /// for `η ∈ σ`, `α_ρ < α_σ` for `ρ ⊊ σ`. Other pairs are incomparable.
    pub fn precedes(&self, other: &IndexSymbol) -> bool {
        match (self, other) {
            (IndexSymbol::Concrete(a), IndexSymbol::Concrete(b)) => a < b,
            (IndexSymbol::Concrete(a), IndexSymbol::Formal(s)) => s.contains(*a),
            (IndexSymbol::Formal(r), IndexSymbol::Formal(s)) => r.is_proper_subset(s),
            (IndexSymbol::Formal(_), IndexSymbol::Concrete(_)) => false,
        }
    }
}

impl fmt::Display for IndexSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSymbol::Concrete(eta) => write!(f, "{eta}"),
            IndexSymbol::Formal(s) => write!(f, "a{s}"),
        }
    }
}

pub type Seq = Vec<IndexSymbol>;

/// The sequence of a set read as concrete ordinals.
pub fn concrete(set: &OrdSet) -> Seq {
    set.elements()
        .iter()
        .map(|&e| IndexSymbol::Concrete(e))
        .collect()
}

fn has_repeat(seq: &[IndexSymbol]) -> bool {
    seq.iter()
        .enumerate()
        .any(|(i, s)| seq[i + 1..].contains(s))
}

fn term_string(seq: &[IndexSymbol]) -> String {
    format!("e({})", seq.iter().join(","))
}

fn signed(coeff: i64, body: &str) -> String {
    match coeff {
        1 => format!("+{body}"),
        -1 => format!("-{body}"),
        c if c > 0 => format!("+{c}*{body}"),
        c => format!("{c}*{body}"),
    }
}

/// `±c*e(…)` rendering of one term.
pub fn render_term(seq: &[IndexSymbol], coeff: i64) -> String {
    signed(coeff, &term_string(seq))
}

fn alt(i: usize) -> i64 {
    if i.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn drop_at(seq: &[IndexSymbol], i: usize) -> Seq {
    let mut v = seq.to_vec();
    v.remove(i);
    v
}

/// `Σ aᵢ e(ᾱᵢ) + Σ bⱼ 𝖽e(β̄ⱼ)`, with like terms merged and zeros dropped.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FormalSum {
    terms: BTreeMap<Seq, i64>,
    blocks: BTreeMap<Seq, i64>,
}

fn bump(map: &mut BTreeMap<Seq, i64>, seq: Seq, c: i64) {
    if c == 0 {
        return;
    }
    match map.entry(seq) {
        Entry::Occupied(mut o) => {
            *o.get_mut() += c;
            if *o.get() == 0 {
                o.remove();
            }
        }
        Entry::Vacant(v) => {
            v.insert(c);
        }
    }
}

impl FormalSum {
    pub fn zero() -> Self {
        FormalSum::default()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty() && self.blocks.is_empty()
    }

    pub fn terms(&self) -> &BTreeMap<Seq, i64> {
        &self.terms
    }

    pub fn blocks(&self) -> &BTreeMap<Seq, i64> {
        &self.blocks
    }

    pub fn has_blocks(&self) -> bool {
        !self.blocks.is_empty()
    }

    pub fn add_term(&mut self, seq: Seq, c: i64) {
        if !has_repeat(&seq) {
            bump(&mut self.terms, seq, c);
        }
    }

    pub fn add_block(&mut self, seq: Seq, c: i64) {
        if !has_repeat(&seq) {
            bump(&mut self.blocks, seq, c);
        }
    }

    pub fn add(&mut self, other: &FormalSum, c: i64) {
        for (s, &v) in &other.terms {
            bump(&mut self.terms, s.clone(), c * v);
        }
        for (s, &v) in &other.blocks {
            bump(&mut self.blocks, s.clone(), c * v);
        }
    }

    pub fn scaled(&self, c: i64) -> FormalSum {
        let mut out = FormalSum::zero();
        out.add(self, c);
        out
    }

    /// Every plain term and every face of every block, before any merging.
    pub fn raw_expansion(&self) -> Vec<(Seq, i64)> {
        let mut out: Vec<(Seq, i64)> = self.terms.iter().map(|(s, &c)| (s.clone(), c)).collect();
        for (s, &c) in &self.blocks {
            for i in 0..s.len() {
                out.push((drop_at(s, i), c * alt(i)));
            }
        }
        out
    }

    /// The same sum with every `𝖽e(β̄)` replaced by `Σᵢ(−1)ⁱ e(β̄ⁱ)`.
    pub fn expand_blocks(&self) -> FormalSum {
        let mut out = FormalSum::zero();
        for (s, c) in self.raw_expansion() {
            out.add_term(s, c);
        }
        out
    }

    /// Flips the sign of the `index`-th block; a fault-injection hook.
    pub fn flip_block(&mut self, index: usize) -> bool {
        match self.blocks.iter_mut().nth(index) {
            Some((_, c)) => {
                *c = -*c;
                true
            }
            None => false,
        }
    }
}

impl fmt::Display for FormalSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "0");
        }
        let mut parts: Vec<String> = self.terms.iter().map(|(s, &c)| render_term(s, c)).collect();
        parts.extend(
            self.blocks
                .iter()
                .map(|(s, &c)| signed(c, &format!("d{}", term_string(s)))),
        );
        write!(f, "{}", parts.join(" "))
    }
}

/// `c·e(seq)`; the empty sum when `seq` repeats a symbol.
pub fn mk_e(seq: Seq, coeff: i64) -> Result<FormalSum, ExprError> {
    if seq.len() < 2 {
        return Err(ExprError::TooShort {
            len: seq.len(),
            min: 2,
        });
    }
    let mut s = FormalSum::zero();
    s.add_term(seq, coeff);
    Ok(s)
}

/// `c·𝖽e(seq)` kept as a block.
pub fn mk_d(seq: Seq, coeff: i64) -> Result<FormalSum, ExprError> {
    if seq.len() < 3 {
        return Err(ExprError::TooShort {
            len: seq.len(),
            min: 3,
        });
    }
    let mut s = FormalSum::zero();
    s.add_block(seq, coeff);
    Ok(s)
}

/// `𝖽e(ᾱ) = Σᵢ(−1)ⁱ e(ᾱⁱ)`, expanded.
pub fn d_expand(seq: &[IndexSymbol]) -> Result<FormalSum, ExprError> {
    Ok(mk_d(seq.to_vec(), 1)?.expand_blocks())
}

/// `𝖽L = Σ aᵢ 𝖽e(ᾱᵢ)` as blocks.
pub fn d_of(l: &FormalSum) -> Result<FormalSum, ExprError> {
    if l.has_blocks() {
        return Err(ExprError::HasBlocks);
    }
    let mut out = FormalSum::zero();
    for (s, &c) in &l.terms {
        if s.len() < 3 {
            return Err(ExprError::TooShort {
                len: s.len(),
                min: 3,
            });
        }
        out.add_block(s.clone(), c);
    }
    Ok(out)
}

/// `L*β̄`: appends `β̄` to every term.
pub fn star(l: &FormalSum, beta: &[IndexSymbol]) -> Result<FormalSum, ExprError> {
    if l.has_blocks() {
        return Err(ExprError::HasBlocks);
    }
    if let Some(w) = beta.windows(2).find(|w| !w[0].precedes(&w[1])) {
        return Err(ExprError::OrderViolation {
            term: term_string(beta),
            symbol: w[1].to_string(),
        });
    }
    let mut out = FormalSum::zero();
    for (s, &c) in &l.terms {
        if let Some(first) = beta.first() {
            if s.iter().any(|x| !x.precedes(first)) {
                return Err(ExprError::OrderViolation {
                    term: term_string(s),
                    symbol: first.to_string(),
                });
            }
        }
        let mut seq = s.clone();
        seq.extend_from_slice(beta);
        out.add_term(seq, c);
    }
    Ok(out)
}

/// `Lʲ`: drops entry `j` of every term.
pub fn slice(l: &FormalSum, j: usize) -> Result<FormalSum, ExprError> {
    if l.has_blocks() {
        return Err(ExprError::HasBlocks);
    }
    let mut out = FormalSum::zero();
    for (s, &c) in &l.terms {
        if j >= s.len() {
            return Err(ExprError::SliceOutOfRange {
                term: term_string(s),
                j,
            });
        }
        if s.len() < 3 {
            return Err(ExprError::SliceTooShort {
                term: term_string(s),
            });
        }
        out.add_term(drop_at(s, j), c);
    }
    Ok(out)
}

fn check_size(set: &OrdSet, expected: usize) -> Result<(), ExprError> {
    if set.len() != expected {
        return Err(ExprError::SizeMismatch {
            expected,
            found: set.len(),
        });
    }
    Ok(())
}

fn faces(set: &OrdSet) -> impl Iterator<Item = (usize, OrdSet)> + '_ {
    (0..set.len()).map(move |i| (i, set.without_nth(i)))
}

/// `𝒜₂(ρ) = e(ρ, α_ρ)`; `𝒜_{n+1}(τ) = (−1)^{n+1} 𝒞ₙ(τ) * α_τ`.
pub fn build_a(n: usize, rho: &OrdSet) -> Result<FormalSum, ExprError> {
    if n < 2 {
        return Err(ExprError::BadN(n));
    }
    check_size(rho, n)?;
    if n == 2 {
        let mut seq = concrete(rho);
        seq.push(IndexSymbol::alpha(rho));
        return mk_e(seq, 1);
    }
    let c = build_c(n - 1, rho)?;
    Ok(star(&c, &[IndexSymbol::alpha(rho)])?.scaled(alt(n)))
}

/// `𝒞ₙ(τ) = e(τ) − Σᵢ(−1)ⁱ 𝒜ₙ(τⁱ)`.
pub fn build_c(n: usize, tau: &OrdSet) -> Result<FormalSum, ExprError> {
    if n < 2 {
        return Err(ExprError::BadN(n));
    }
    check_size(tau, n + 1)?;
    let mut out = mk_e(concrete(tau), 1)?;
    for (i, face) in faces(tau) {
        out.add(&build_a(n, &face)?, -alt(i));
    }
    Ok(out)
}

/// `𝒮ₙ(τ) = 𝖽e(τ, α_τ) − Σᵢ(−1)ⁱ 𝖽[𝒜ₙ(τⁱ) * α_τ]`, blocks unexpanded.
pub fn build_s(n: usize, tau: &OrdSet) -> Result<FormalSum, ExprError> {
    if n < 2 {
        return Err(ExprError::BadN(n));
    }
    check_size(tau, n + 1)?;
    let top = IndexSymbol::alpha(tau);
    let mut seq = concrete(tau);
    seq.push(top.clone());
    let mut out = mk_d(seq, 1)?;
    for (i, face) in faces(tau) {
        let inner = star(&build_a(n, &face)?, std::slice::from_ref(&top))?;
        out.add(&d_of(&inner)?, -alt(i));
    }
    Ok(out)
}

/// Which expression a [`shape_check`] is about.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShapeContext {
    /// `𝒜ₙ(ρ)` with `|ρ| = n`.
    A(OrdSet),
    /// `𝒮ₙ(τ)` or `𝒞ₙ(τ)` with `|τ| = n + 1`.
    Tau(OrdSet),
}

impl ShapeContext {
    fn set(&self) -> &OrdSet {
        match self {
            ShapeContext::A(s) | ShapeContext::Tau(s) => s,
        }
    }

    fn n(&self) -> usize {
        match self {
            ShapeContext::A(s) => s.len(),
            ShapeContext::Tau(s) => s.len().saturating_sub(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShapeFailure {
    pub term: String,
    pub reason: String,
}

/// Checks every term against the pattern `σ₀ ⌢ ⟨α_{σ₁},…,α_{σ_k}⟩` of length
/// `n + 1`: `σ₀ ⊆ σ₁`, `σⱼ ⊊ σⱼ₊₁`, `1 < |σ₁|`, and the last set inside the
/// context set. Blocks are checked through their expansion.
pub fn shape_check(l: &FormalSum, ctx: &ShapeContext) -> Result<(), ShapeFailure> {
    let expanded;
    let sum = if l.has_blocks() {
        expanded = l.expand_blocks();
        &expanded
    } else {
        l
    };
    let n = ctx.n();
    for seq in sum.terms().keys() {
        term_shape(seq, n, ctx.set()).map_err(|reason| ShapeFailure {
            term: term_string(seq),
            reason,
        })?;
    }
    Ok(())
}

fn term_shape(seq: &[IndexSymbol], n: usize, bound: &OrdSet) -> Result<(), String> {
    if seq.len() != n + 1 {
        return Err(format!("length {} instead of {}", seq.len(), n + 1));
    }
    let prefix_len = seq
        .iter()
        .take_while(|s| matches!(s, IndexSymbol::Concrete(_)))
        .count();
    if prefix_len == 0 {
        return Err("empty concrete prefix".into());
    }
    let prefix: Vec<u64> = seq[..prefix_len]
        .iter()
        .map(|s| match s {
            IndexSymbol::Concrete(e) => *e,
            IndexSymbol::Formal(_) => unreachable!(),
        })
        .collect();
    let sigma0 =
        OrdSet::new(prefix).map_err(|_| "concrete prefix is not increasing".to_string())?;
    let sets: Vec<OrdSet> = seq[prefix_len..]
        .iter()
        .map(|s| match s {
            IndexSymbol::Formal(set) => Ok(set.clone()),
            IndexSymbol::Concrete(e) => Err(format!("concrete {e} after a formal symbol")),
        })
        .collect::<Result<_, _>>()?;
    let last = sets.last().unwrap_or(&sigma0);
    if !last.is_subset(bound) {
        return Err(format!("{last} is not contained in {bound}"));
    }
    if let Some(first) = sets.first() {
        if first.len() <= 1 {
            return Err(format!("|σ₁| = {} must exceed 1", first.len()));
        }
        if !sigma0.is_subset(first) {
            return Err(format!("{sigma0} is not contained in {first}"));
        }
    }
    if let Some(w) = sets.windows(2).find(|w| !w[0].is_proper_subset(&w[1])) {
        return Err(format!("{} is not a proper subset of {}", w[0], w[1]));
    }
    Ok(())
}

/// Full expansion down to `φ`-terms: `e(ᾱ) ↦ Σᵢ(−1)ⁱ φ_{ᾱⁱ}`, blocks included.
pub fn expand_full(l: &FormalSum) -> BTreeMap<Seq, i64> {
    let mut out = BTreeMap::new();
    for (s, c) in l.raw_expansion() {
        for i in 0..s.len() {
            let face = drop_at(&s, i);
            if !has_repeat(&face) {
                bump(&mut out, face, c * alt(i));
            }
        }
    }
    out
}

/// A chain `σ₁ ⊆ ⋯ ⊆ σ_m ⊆ τ` with `|σᵢ| = i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubsetChain {
    pub sets: Vec<OrdSet>,
    pub long: bool,
}

impl SubsetChain {
    /// `ᾱ[σ̄] = ⟨α_{σ₁}, …, α_{σ_m}⟩`.
    pub fn alpha_seq(&self) -> Seq {
        self.sets.iter().map(IndexSymbol::alpha).collect()
    }
}

/// All subset-initial segments of `τ` of length `m`; long strings when `m = |τ|`.
pub fn enumerate_chains(tau: &OrdSet, m: usize) -> Result<Vec<SubsetChain>, ExprError> {
    if m == 0 || m > tau.len() {
        return Err(ExprError::ChainLength { m, size: tau.len() });
    }
    Ok(tau
        .elements()
        .iter()
        .copied()
        .permutations(m)
        .map(|order| SubsetChain {
            sets: (1..=m)
                .map(|i| OrdSet::from_unsorted(order[..i].iter().copied()))
                .collect(),
            long: m == tau.len(),
        })
        .collect())
}

/// Whether `seq` is `ᾱ[σ̄]` for a long string `σ̄ ⊲ τ`.
pub fn is_long_string_term(seq: &[IndexSymbol], tau: &OrdSet) -> bool {
    if seq.len() != tau.len() {
        return false;
    }
    let sets: Vec<OrdSet> = seq.iter().map(IndexSymbol::index_set).collect();
    sets.iter().enumerate().all(|(i, s)| s.len() == i + 1)
        && sets.windows(2).all(|w| w[0].is_subset(&w[1]))
        && sets.last().is_some_and(|s| s == tau)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LedgerEntry {
    pub term: String,
    pub coeff: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ReductionStatus {
    Success,
    Failure,
}

/// Outcome of reducing `𝒮ₙ(τ)` against `(−1)^{n+1}𝒞ₙ(τ)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReductionReport {
    pub n: usize,
    pub tau: Vec<u64>,
    pub status: ReductionStatus,
    /// Residual terms that are not long strings; empty on success.
    pub type1_residual: Vec<LedgerEntry>,
    /// Residual long-string terms with their coefficients.
    pub long_string_ledger: Vec<LedgerEntry>,
    /// Sum of the long-string coefficients; zero on success.
    pub long_string_net: i64,
    /// Raw e-terms on both sides before merging.
    pub raw_terms: usize,
    /// Raw e-terms removed by merging opposite signs.
    pub type1_cancelled: usize,
}

/// Builds `𝒮ₙ(τ)` and `𝒞ₙ(τ)` and reduces one against the other.
pub fn reduce_s_to_c(n: usize, tau: &OrdSet) -> Result<ReductionReport, ExprError> {
    let s = build_s(n, tau)?;
    let c = build_c(n, tau)?;
    Ok(reduce_with(&s, &c, n, tau))
}

/// `D = 𝒮 − (−1)^{n+1}𝒞` at the level of `e`-terms, split into long-string
/// terms and the rest.
pub fn reduce_with(s: &FormalSum, c: &FormalSum, n: usize, tau: &OrdSet) -> ReductionReport {
    let sign = alt(n + 1);
    let raw_s = s.raw_expansion();
    let raw_c = c.raw_expansion();
    let raw_terms = raw_s.len() + raw_c.len();
    let mut d = FormalSum::zero();
    for (seq, k) in raw_s {
        d.add_term(seq, k);
    }
    for (seq, k) in raw_c {
        d.add_term(seq, -sign * k);
    }
    let mut type1_residual = Vec::new();
    let mut long_string_ledger = Vec::new();
    for (seq, &k) in d.terms() {
        let entry = LedgerEntry {
            term: render_term(seq, k),
            coeff: k,
        };
        if is_long_string_term(seq, tau) {
            long_string_ledger.push(entry);
        } else {
            type1_residual.push(entry);
        }
    }
    let long_string_net = long_string_ledger.iter().map(|e| e.coeff).sum();
    let remaining: usize = d.terms().values().map(|k| k.unsigned_abs() as usize).sum();
    let status = if type1_residual.is_empty() && long_string_net == 0 {
        ReductionStatus::Success
    } else {
        ReductionStatus::Failure
    };
    ReductionReport {
        n,
        tau: tau.elements().to_vec(),
        status,
        type1_residual,
        long_string_ledger,
        long_string_net,
        raw_terms,
        type1_cancelled: raw_terms - remaining,
    }
}
