//! Finite sets of ordinals, their relative-position types, and zig-zag type cycles.
//!
//! Ordinals are modelled by natural numbers. Only relative order is ever
//! observed, so every construction here is free to renumber its values as
//! long as it applies one order-isomorphism to all sets simultaneously.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrdError {
    #[error("ordinal set is not strictly increasing at position {position}")]
    NotIncreasing { position: usize },
    #[error("cannot parse ordinal set {input:?}: {reason}")]
    ParseSet { input: String, reason: String },
    #[error("sets have different cardinalities: |u| = {left}, |v| = {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("type of two empty sets is undefined")]
    EmptySets,
    #[error("invalid type symbol {symbol:?} at position {position}")]
    BadSymbol { symbol: char, position: usize },
    #[error("malformed type: |t^-1[0,2]| = {left} but |t^-1[1,2]| = {right}")]
    UnbalancedType { left: usize, right: usize },
    #[error("type has width zero")]
    ZeroWidth,
    #[error("type {0} is not aligned; no type cycle is guaranteed")]
    NotAligned(TypeString),
}

/// A finite set of ordinals stored as its increasing enumeration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct OrdSet(Vec<u64>);

impl OrdSet {
    pub fn new(elements: Vec<u64>) -> Result<Self, OrdError> {
        if let Some(position) = elements.windows(2).position(|w| w[0] >= w[1]) {
            return Err(OrdError::NotIncreasing {
                position: position + 1,
            });
        }
        Ok(OrdSet(elements))
    }

    /// Builds a set from arbitrary values, sorting and deduplicating.
    pub fn from_unsorted<I: IntoIterator<Item = u64>>(values: I) -> Self {
        let set: BTreeSet<u64> = values.into_iter().collect();
        OrdSet(set.into_iter().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn elements(&self) -> &[u64] {
        &self.0
    }

    /// `u(i)`: the unique element with exactly `i` elements of the set below it.
    pub fn nth(&self, i: usize) -> Option<u64> {
        self.0.get(i).copied()
    }

    pub fn contains(&self, alpha: u64) -> bool {
        self.0.binary_search(&alpha).is_ok()
    }

    /// `|u ∩ alpha|`, the number of elements strictly below `alpha`.
    pub fn count_below(&self, alpha: u64) -> usize {
        self.0.partition_point(|&x| x < alpha)
    }

    pub fn intersection(&self, other: &OrdSet) -> OrdSet {
        OrdSet(
            self.0
                .iter()
                .copied()
                .filter(|&x| other.contains(x))
                .collect(),
        )
    }

    pub fn union(&self, other: &OrdSet) -> OrdSet {
        OrdSet::from_unsorted(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn is_subset(&self, other: &OrdSet) -> bool {
        self.0.iter().all(|&x| other.contains(x))
    }

    pub fn is_proper_subset(&self, other: &OrdSet) -> bool {
        self.len() < other.len() && self.is_subset(other)
    }

    pub fn max(&self) -> Option<u64> {
        self.0.last().copied()
    }

    /// The set with its `i`-th element removed.
    pub fn without_nth(&self, i: usize) -> OrdSet {
        let mut v = self.0.clone();
        v.remove(i);
        OrdSet(v)
    }

    /// Comma-separated rendering, the inverse of [`FromStr`].
    pub fn to_csv(&self) -> String {
        self.0
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl FromStr for OrdSet {
    type Err = OrdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s
            .trim()
            .trim_start_matches('{')
            .trim_end_matches('}')
            .trim();
        if body.is_empty() {
            return Ok(OrdSet::default());
        }
        let mut values = Vec::new();
        for piece in body.split(',') {
            let v = piece
                .trim()
                .parse::<u64>()
                .map_err(|e| OrdError::ParseSet {
                    input: s.to_string(),
                    reason: format!("{piece:?}: {e}"),
                })?;
            values.push(v);
        }
        OrdSet::new(values)
    }
}

impl fmt::Display for OrdSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.to_csv())
    }
}

/// A type of width `k`: a word over `{0,1,2}` with `|t⁻¹[{0,2}]| = |t⁻¹[{1,2}]| = k ≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeString(Vec<u8>);

impl TypeString {
    pub fn new(symbols: Vec<u8>) -> Result<Self, OrdError> {
        if let Some(position) = symbols.iter().position(|&s| s > 2) {
            return Err(OrdError::BadSymbol {
                symbol: char::from(b'0' + symbols[position].min(9)),
                position,
            });
        }
        let left = symbols.iter().filter(|&&s| s != 1).count();
        let right = symbols.iter().filter(|&&s| s != 0).count();
        if left != right {
            return Err(OrdError::UnbalancedType { left, right });
        }
        if left == 0 {
            return Err(OrdError::ZeroWidth);
        }
        Ok(TypeString(symbols))
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn width(&self) -> usize {
        self.0.iter().filter(|&&s| s != 1).count()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Exchanges the roles of the two sets (`0 ↔ 1`).
    pub fn swapped(&self) -> TypeString {
        TypeString(self.0.iter().map(|&s| swap_symbol(s)).collect())
    }
}

fn swap_symbol(s: u8) -> u8 {
    match s {
        0 => 1,
        1 => 0,
        other => other,
    }
}

impl FromStr for TypeString {
    type Err = OrdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut symbols = Vec::with_capacity(s.len());
        for (position, c) in s.trim().chars().enumerate() {
            match c {
                '0' | '1' | '2' => symbols.push(c as u8 - b'0'),
                symbol => return Err(OrdError::BadSymbol { symbol, position }),
            }
        }
        TypeString::new(symbols)
    }
}

impl fmt::Display for TypeString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// `tp(u, v)` for two nonempty sets of equal size.
pub fn type_of(u: &OrdSet, v: &OrdSet) -> Result<TypeString, OrdError> {
    if u.len() != v.len() {
        return Err(OrdError::SizeMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    if u.is_empty() {
        return Err(OrdError::EmptySets);
    }
    let symbols = u
        .union(v)
        .elements()
        .iter()
        .map(|&a| match (u.contains(a), v.contains(a)) {
            (true, true) => 2,
            (true, false) => 0,
            _ => 1,
        })
        .collect();
    TypeString::new(symbols)
}

/// Equal size, and every common element sits at the same position in both sets.
pub fn is_aligned_sets(u: &OrdSet, v: &OrdSet) -> bool {
    u.len() == v.len()
        && u.elements()
            .iter()
            .filter(|&&a| v.contains(a))
            .all(|&a| u.count_below(a) == v.count_below(a))
}

/// Every `2` in `t` is preceded by equally many `0`s and `1`s.
pub fn is_aligned_type(t: &TypeString) -> bool {
    let (mut zeros, mut ones) = (0usize, 0usize);
    for &s in t.symbols() {
        match s {
            0 => zeros += 1,
            1 => ones += 1,
            _ if zeros != ones => return false,
            _ => {}
        }
    }
    true
}

/// All aligned types of length `1..=max_len`, in length-then-lexicographic order.
pub fn aligned_types(max_len: usize) -> Vec<TypeString> {
    let mut out = Vec::new();
    for len in 1..=max_len {
        let total = 3usize.pow(len as u32);
        for code in 0..total {
            let mut c = code;
            let mut symbols = vec![0u8; len];
            for slot in symbols.iter_mut().rev() {
                *slot = (c % 3) as u8;
                c /= 3;
            }
            if let Ok(t) = TypeString::new(symbols) {
                if is_aligned_type(&t) {
                    out.push(t);
                }
            }
        }
    }
    out
}

/// A sequence `⟨u_j | j ≤ 2m⟩` of equal-size sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleSeq {
    sets: Vec<OrdSet>,
}

impl CycleSeq {
    pub fn new(sets: Vec<OrdSet>) -> Self {
        CycleSeq { sets }
    }

    pub fn sets(&self) -> &[OrdSet] {
        &self.sets
    }

    /// `m`, where the sequence has `2m + 1` entries.
    pub fn m(&self) -> usize {
        self.sets.len().saturating_sub(1) / 2
    }
}

impl fmt::Display for CycleSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨")?;
        for (j, s) in self.sets.iter().enumerate() {
            if j > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "⟩")
    }
}

/// First reason a candidate cycle is rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CycleFailure {
    #[error("sequence has {0} entries; need an odd number ≥ 3")]
    BadLength(usize),
    #[error("u_{index} has {found} elements, expected {expected}")]
    BadCardinality {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("tp(u_{first}, u_{second}) = {found}, expected {expected}")]
    WrongType {
        first: usize,
        second: usize,
        found: String,
        expected: TypeString,
    },
}

/// Checks `tp(u_{2j}, u_{2j+1}) = tp(u_{2j+2}, u_{2j+1}) = t` for all `j < m`
/// and `tp(u_0, u_{2m}) = t`, recomputing every type from scratch.
pub fn verify_type_cycle(t: &TypeString, cycle: &CycleSeq) -> Result<(), CycleFailure> {
    let sets = cycle.sets();
    if sets.len() < 3 || sets.len().is_multiple_of(2) {
        return Err(CycleFailure::BadLength(sets.len()));
    }
    let k = t.width();
    if let Some((index, s)) = sets.iter().enumerate().find(|(_, s)| s.len() != k) {
        return Err(CycleFailure::BadCardinality {
            index,
            found: s.len(),
            expected: k,
        });
    }
    let m = cycle.m();
    let mut pairs = Vec::with_capacity(2 * m + 1);
    for j in 0..m {
        pairs.push((2 * j, 2 * j + 1));
        pairs.push((2 * j + 2, 2 * j + 1));
    }
    pairs.push((0, 2 * m));
    for (first, second) in pairs {
        let found = type_of(&sets[first], &sets[second]);
        if found.as_ref() != Ok(t) {
            return Err(CycleFailure::WrongType {
                first,
                second,
                found: found
                    .map(|x| x.to_string())
                    .unwrap_or_else(|e| e.to_string()),
                expected: t.clone(),
            });
        }
    }
    Ok(())
}

/// Builds a type cycle for an aligned type by induction on its width.
///
/// A type ending in `2` recurses on its prefix and appends a common top
/// element. A type ending in `1` deletes its last `0` and last `1`, recurses,
/// re-augments each set with one new ordinal and, when the closing pair can
/// break, rotates two fresh sets onto the front. A type ending in `0` is
/// built from the cycle of its swapped type.
pub fn build_type_cycle(t: &TypeString) -> Result<CycleSeq, OrdError> {
    if !is_aligned_type(t) {
        return Err(OrdError::NotAligned(t.clone()));
    }
    let mut sets = build_cycle(t.symbols());
    compress(&mut sets, 0, 1);
    Ok(CycleSeq::new(sets.into_iter().map(OrdSet).collect()))
}

type RawSets = Vec<Vec<u64>>;

/// Renumbers all values by rank to `(rank + 1) * stride`, leaving `stride - 1`
/// free slots in every gap and below the minimum.
fn compress(sets: &mut RawSets, offset: u64, stride: u64) {
    let values: BTreeSet<u64> = sets.iter().flatten().copied().collect();
    let ranks: std::collections::BTreeMap<u64, u64> = values
        .into_iter()
        .enumerate()
        .map(|(r, v)| (v, r as u64))
        .collect();
    for s in sets.iter_mut() {
        for v in s.iter_mut() {
            *v = (ranks[v] + offset) * stride;
        }
    }
}

fn global_max(sets: &RawSets) -> u64 {
    sets.iter().flatten().copied().max().unwrap_or(0)
}

fn build_cycle(t: &[u8]) -> RawSets {
    let len = t.len();
    let k = t.iter().filter(|&&s| s != 1).count();
    let stride = 2 * (len as u64 + 4);

    if t[len - 1] == 0 {
        // Cycle for the swapped type, read as v_j = u_{2m-1-j}, v_{2m} = u_{2m}.
        let swapped: Vec<u8> = t.iter().map(|&s| swap_symbol(s)).collect();
        let u = build_cycle(&swapped);
        let top = u.len() - 1;
        let mut v: RawSets = (0..top).map(|j| u[top - 1 - j].clone()).collect();
        v.push(u[top].clone());
        return v;
    }

    if k == 1 {
        return match t {
            [2] => vec![vec![0], vec![0], vec![0]],
            [0, 1] => vec![vec![0], vec![2], vec![1]],
            _ => unreachable!("width-one aligned types ending in 1 or 2 are 2 and 01"),
        };
    }

    if t[len - 1] == 2 {
        let mut u = build_cycle(&t[..len - 1]);
        compress(&mut u, 1, stride);
        let beta = global_max(&u) + stride;
        for s in &mut u {
            s.push(beta);
        }
        return u;
    }

    // t ends in 1: `last_zero` is the last 0, followed only by 1s.
    let last_zero = t
        .iter()
        .rposition(|&s| s == 0)
        .expect("aligned type ending in 1 contains a 0");
    let k0 = t[..last_zero].iter().filter(|&&s| s != 0).count();
    let mut reduced = t[..last_zero].to_vec();
    reduced.resize(len - 2, 1);

    let mut u = build_cycle(&reduced);
    compress(&mut u, 1, stride);
    let two_m = u.len() - 1;

    if k0 == k - 1 {
        let top = global_max(&u) + stride;
        for (j, s) in u.iter_mut().enumerate() {
            let beta = match (j % 2, j == two_m) {
                (1, _) => top + 2,
                (_, true) => top + 1,
                _ => top,
            };
            s.push(beta);
        }
        return u;
    }

    // Odd sets only meet even sets, and in the reduced type their elements
    // from index k0 on sit above the whole even partner; push them above everything.
    let lift = global_max(&u) + stride;
    for s in u.iter_mut().skip(1).step_by(2) {
        for (r, v) in s.iter_mut().enumerate().skip(k0) {
            *v = lift + (r - k0) as u64;
        }
    }
    compress(&mut u, 1, stride);

    let beta_star = global_max(&u) + stride;
    let even_betas: Vec<u64> = (0..=two_m)
        .step_by(2)
        .map(|j| {
            let mut lower = *u[j].last().expect("nonempty");
            if k0 > 0 {
                for nb in [j.checked_sub(1), (j < two_m).then_some(j + 1)]
                    .into_iter()
                    .flatten()
                {
                    lower = lower.max(u[nb][k0 - 1]);
                }
            }
            lower + 1
        })
        .collect();
    for (j, s) in u.iter_mut().enumerate() {
        s.push(if j % 2 == 1 {
            beta_star
        } else {
            even_betas[j / 2]
        });
    }

    if k0 == 0 {
        return u;
    }

    // 0 < k0 < k - 1: the closing pair may fail, so build u*_{2m+2} and
    // u*_{2m+1} and rotate them to the front.
    compress(&mut u, 1, stride);
    let partner = realize_partner(&u[0], t, global_max(&u) + stride);
    u.push(partner);
    compress(&mut u, 1, stride);
    let partner = u.pop().expect("just pushed");

    let gamma = partner[k0 - 1].max(u[two_m][k0 - 1]).max(u[0][k - 2]) + 1;
    debug_assert!(gamma < u[two_m][k0]);
    let mut opener = u[0][..k - 1].to_vec();
    opener.push(gamma);

    let mut rotated = Vec::with_capacity(two_m + 3);
    rotated.push(opener);
    rotated.push(partner);
    rotated.extend(u);
    rotated
}

/// Some `v` with `tp(u, v) = t`. Elements of `v` that `t` puts above `max(u)`
/// start at `ceiling`; the others sit immediately above their predecessor
/// in `u` (or immediately below `u(0)`).
fn realize_partner(u: &[u64], t: &[u8], ceiling: u64) -> Vec<u64> {
    let leading = t.iter().take_while(|&&s| s == 1).count() as u64;
    let mut v = Vec::new();
    let mut next_u = 0usize;
    let mut anchor: Option<u64> = None;
    let mut run = 0u64;
    for &s in t {
        match s {
            0 | 2 => {
                let x = u[next_u];
                next_u += 1;
                if s == 2 {
                    v.push(x);
                }
                anchor = Some(x);
                run = 0;
            }
            _ => {
                run += 1;
                let value = match anchor {
                    None => u[0] - (leading + 1 - run),
                    Some(_) if next_u == u.len() => ceiling + run,
                    Some(x) => x + run,
                };
                v.push(value);
            }
        }
    }
    v
}
