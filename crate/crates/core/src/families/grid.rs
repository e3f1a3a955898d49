use std::collections::BTreeMap;
use std::fmt;

use super::FamilyError;

/// A grid point `(i, j)`: column `i`, height `j`.
pub type Point = (usize, u32);

/// A function `{0..N-1} → ℕ`, the truncation of some `f: ω → ω`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TruncFn(Vec<u32>);

impl TruncFn {
    pub fn new(values: Vec<u32>) -> Self {
        TruncFn(values)
    }

    pub fn values(&self) -> &[u32] {
        &self.0
    }

    /// Column count `N`.
    pub fn n_cols(&self) -> usize {
        self.0.len()
    }

    pub fn height(&self, i: usize) -> u32 {
        self.0[i]
    }

    /// Whether `(i, j)` lies in `I(f) = {(i, j) : j ≤ f(i)}`.
    pub fn contains(&self, (i, j): Point) -> bool {
        i < self.0.len() && j <= self.0[i]
    }

    /// Pointwise `self ≤ other` on all columns `≥ from`.
    pub fn le_from(&self, other: &TruncFn, from: usize) -> bool {
        self.0.iter().zip(&other.0).skip(from).all(|(a, b)| a <= b)
    }

    pub fn le(&self, other: &TruncFn) -> bool {
        self.le_from(other, 0)
    }

    /// Points of `I(f)` in column-major order.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(i, &h)| (0..=h).map(move |j| (i, j)))
    }

    pub fn size(&self) -> usize {
        self.0.iter().map(|&h| h as usize + 1).sum()
    }
}

impl fmt::Display for TruncFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `⋀f̄`, the pointwise minimum.
pub fn meet<'a, I: IntoIterator<Item = &'a TruncFn>>(fns: I) -> Result<TruncFn, FamilyError> {
    fold(fns, u32::min)
}

/// Pointwise maximum.
pub fn join<'a, I: IntoIterator<Item = &'a TruncFn>>(fns: I) -> Result<TruncFn, FamilyError> {
    fold(fns, u32::max)
}

fn fold<'a, I: IntoIterator<Item = &'a TruncFn>>(
    fns: I,
    op: fn(u32, u32) -> u32,
) -> Result<TruncFn, FamilyError> {
    let mut it = fns.into_iter();
    let mut acc = it.next().ok_or(FamilyError::EmptyMeet)?.clone();
    for f in it {
        if f.n_cols() != acc.n_cols() {
            return Err(FamilyError::ColumnMismatch {
                expected: acc.n_cols(),
                found: f.n_cols(),
            });
        }
        for (a, &b) in acc.0.iter_mut().zip(&f.0) {
            *a = op(*a, b);
        }
    }
    Ok(acc)
}

/// A function `I(f) → ℤ`, stored sparsely. Zero values are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridFn {
    domain: TruncFn,
    entries: BTreeMap<Point, i64>,
}

impl GridFn {
    pub fn zero(domain: TruncFn) -> Self {
        GridFn {
            domain,
            entries: BTreeMap::new(),
        }
    }

    pub fn constant(domain: TruncFn, c: i64) -> Self {
        let mut g = GridFn::zero(domain);
        if c != 0 {
            g.entries = g.domain.points().map(|p| (p, c)).collect();
        }
        g
    }

    pub fn domain(&self) -> &TruncFn {
        &self.domain
    }

    pub fn get(&self, p: Point) -> i64 {
        self.entries.get(&p).copied().unwrap_or(0)
    }

    pub fn set(&mut self, p: Point, v: i64) -> Result<(), FamilyError> {
        if !self.domain.contains(p) {
            return Err(FamilyError::OutsideDomain {
                point: p,
                domain: self.domain.to_string(),
            });
        }
        if v == 0 {
            self.entries.remove(&p);
        } else {
            self.entries.insert(p, v);
        }
        Ok(())
    }

    pub fn add_at(&mut self, p: Point, v: i64) -> Result<(), FamilyError> {
        let cur = self.get(p);
        self.set(p, cur + v)
    }

    /// `self += c · other` on `dom(self) ∩ dom(other)`.
    pub fn add_scaled(&mut self, other: &GridFn, c: i64) {
        if c == 0 {
            return;
        }
        for (&p, &v) in &other.entries {
            if self.domain.contains(p) {
                let nv = self.get(p) + c * v;
                if nv == 0 {
                    self.entries.remove(&p);
                } else {
                    self.entries.insert(p, nv);
                }
            }
        }
    }

    pub fn scaled(&self, c: i64) -> GridFn {
        let mut out = GridFn::zero(self.domain.clone());
        out.add_scaled(self, c);
        out
    }

    /// Restriction to `I(f)`, with `f` replacing the domain.
    pub fn restrict(&self, f: &TruncFn) -> GridFn {
        GridFn {
            domain: f.clone(),
            entries: self
                .entries
                .iter()
                .filter(|(p, _)| f.contains(**p))
                .map(|(&p, &v)| (p, v))
                .collect(),
        }
    }

    /// Nonzero values in point order.
    pub fn support(&self) -> impl Iterator<Item = (Point, i64)> + '_ {
        self.entries.iter().map(|(&p, &v)| (p, v))
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of two functions on the intersection of their domains.
    pub fn sum_on_meet(&self, other: &GridFn) -> GridFn {
        let dom = meet([&self.domain, &other.domain]).expect("equal column counts");
        let mut out = self.restrict(&dom);
        out.add_scaled(other, 1);
        out
    }
}

/// `φ` and `ψ` agree at every common domain point in columns `≥ k*`.
pub fn eq_above(phi: &GridFn, psi: &GridFn, kstar: usize) -> bool {
    first_disagreement_above(phi, psi, kstar).is_none()
}

pub(crate) fn first_disagreement_above(phi: &GridFn, psi: &GridFn, kstar: usize) -> Option<Point> {
    let keys = phi.entries.keys().chain(psi.entries.keys());
    keys.filter(|p| p.0 >= kstar && phi.domain.contains(**p) && psi.domain.contains(**p))
        .find(|&&p| phi.get(p) != psi.get(p))
        .copied()
}
