use std::collections::BTreeMap;

use itertools::Itertools;
use serde::Serialize;

use super::grid::{first_disagreement_above, join, meet, GridFn, Point, TruncFn};
use super::FamilyError;

/// Sorts a tuple, returning the permutation sign, or `None` on a repeated entry.
pub fn sort_with_sign(tuple: &[usize]) -> Option<(Vec<usize>, i64)> {
    let mut v = tuple.to_vec();
    let mut sign = 1i64;
    // insertion sort: one sign flip per adjacent swap
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some((v, sign))
    }
}

/// `ᾱⁱ`: the tuple with entry `i` removed.
pub fn face(tuple: &[usize], i: usize) -> Vec<usize> {
    let mut v = tuple.to_vec();
    v.remove(i);
    v
}

/// An alternating family `⟨φ_ᾱ⟩` indexed by `n`-tuples from a registry.
///
/// Only strictly increasing tuples are stored. Absent tuples hold the zero
/// function on `I(⋀ᾱ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Family {
    registry: Vec<TruncFn>,
    arity: usize,
    kstar: usize,
    entries: BTreeMap<Vec<usize>, GridFn>,
}

impl Family {
    pub fn new(registry: Vec<TruncFn>, arity: usize, kstar: usize) -> Result<Self, FamilyError> {
        let first = registry.first().ok_or(FamilyError::EmptyRegistry)?;
        let n_cols = first.n_cols();
        if let Some(bad) = registry.iter().find(|f| f.n_cols() != n_cols) {
            return Err(FamilyError::ColumnMismatch {
                expected: n_cols,
                found: bad.n_cols(),
            });
        }
        if arity == 0 {
            return Err(FamilyError::ZeroArity);
        }
        if kstar > n_cols {
            return Err(FamilyError::ThresholdTooLarge { kstar, n_cols });
        }
        Ok(Family {
            registry,
            arity,
            kstar,
            entries: BTreeMap::new(),
        })
    }

    /// An empty family on the same registry with a different arity.
    pub fn zero_like(&self, arity: usize) -> Result<Family, FamilyError> {
        Family::new(self.registry.clone(), arity, self.kstar)
    }

    pub fn registry(&self) -> &[TruncFn] {
        &self.registry
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn kstar(&self) -> usize {
        self.kstar
    }

    pub fn with_kstar(mut self, kstar: usize) -> Result<Self, FamilyError> {
        if kstar > self.n_cols() {
            return Err(FamilyError::ThresholdTooLarge {
                kstar,
                n_cols: self.n_cols(),
            });
        }
        self.kstar = kstar;
        Ok(self)
    }

    pub fn n_cols(&self) -> usize {
        self.registry[0].n_cols()
    }

    fn check_indices(&self, tuple: &[usize]) -> Result<(), FamilyError> {
        match tuple.iter().find(|&&a| a >= self.registry.len()) {
            Some(&index) => Err(FamilyError::UnknownIndex {
                index,
                size: self.registry.len(),
            }),
            None => Ok(()),
        }
    }

    /// `I(⋀ᾱ)` for a tuple of registry indices.
    pub fn meet_of(&self, tuple: &[usize]) -> TruncFn {
        meet(tuple.iter().map(|&a| &self.registry[a])).expect("nonempty tuple")
    }

    /// Pointwise maximum of the whole registry.
    pub fn registry_join(&self) -> TruncFn {
        join(&self.registry).expect("nonempty registry")
    }

    /// Stores `φ_ᾱ`, applying the alternating convention for unsorted tuples.
    pub fn set(&mut self, tuple: &[usize], phi: GridFn) -> Result<(), FamilyError> {
        if tuple.len() != self.arity {
            return Err(FamilyError::ArityMismatch {
                expected: self.arity,
                found: tuple.len(),
            });
        }
        self.check_indices(tuple)?;
        let expected = self.meet_of(tuple);
        if phi.domain() != &expected {
            return Err(FamilyError::DomainMismatch {
                tuple: tuple.to_vec(),
                expected: expected.to_string(),
                found: phi.domain().to_string(),
            });
        }
        match sort_with_sign(tuple) {
            None if phi.is_zero() => Ok(()),
            None => Err(FamilyError::RepeatedIndex(tuple.to_vec())),
            Some((sorted, sign)) => {
                if phi.is_zero() {
                    self.entries.remove(&sorted);
                } else {
                    self.entries.insert(sorted, phi.scaled(sign));
                }
                Ok(())
            }
        }
    }

    /// `φ_ᾱ(p) += v` with the alternating sign.
    pub fn add_value(&mut self, tuple: &[usize], p: Point, v: i64) -> Result<(), FamilyError> {
        let mut current = self.get(tuple)?;
        current.add_at(p, v)?;
        self.set(tuple, current)
    }

    /// Alternating lookup: `φ_{σ(ᾱ)} = sgn(σ)·φ_ᾱ`, zero on repeated entries.
    pub fn get(&self, tuple: &[usize]) -> Result<GridFn, FamilyError> {
        if tuple.len() != self.arity {
            return Err(FamilyError::ArityMismatch {
                expected: self.arity,
                found: tuple.len(),
            });
        }
        self.check_indices(tuple)?;
        Ok(self.lookup(tuple))
    }

    pub(crate) fn lookup(&self, tuple: &[usize]) -> GridFn {
        match sort_with_sign(tuple) {
            None => GridFn::zero(self.meet_of(tuple)),
            Some((sorted, sign)) => match self.entries.get(&sorted) {
                Some(g) if sign == 1 => g.clone(),
                Some(g) => g.scaled(-1),
                None => GridFn::zero(self.meet_of(tuple)),
            },
        }
    }

    /// Single value `φ_ᾱ(p)`; `None` when `p ∉ I(⋀ᾱ)`.
    pub(crate) fn value(&self, tuple: &[usize], p: Point) -> Option<i64> {
        if !tuple.iter().all(|&a| self.registry[a].contains(p)) {
            return None;
        }
        Some(match sort_with_sign(tuple) {
            None => 0,
            Some((sorted, sign)) => sign * self.entries.get(&sorted).map_or(0, |g| g.get(p)),
        })
    }

    /// Stored nonzero entries at increasing tuples.
    pub fn entries(&self) -> impl Iterator<Item = (&Vec<usize>, &GridFn)> {
        self.entries.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// All strictly increasing tuples of the given length.
    pub fn increasing_tuples(&self, len: usize) -> impl Iterator<Item = Vec<usize>> {
        (0..self.registry.len()).combinations(len)
    }

    /// `Φ↾F`, re-indexed by position in `members`.
    pub fn restrict_to(&self, members: &[usize]) -> Result<Family, FamilyError> {
        self.check_indices(members)?;
        let registry = members.iter().map(|&a| self.registry[a].clone()).collect();
        let mut out = Family::new(registry, self.arity, self.kstar)?;
        for local in (0..members.len()).combinations(self.arity) {
            let global: Vec<usize> = local.iter().map(|&i| members[i]).collect();
            let g = self.lookup(&global);
            if !g.is_zero() {
                out.set(&local, g)?;
            }
        }
        Ok(out)
    }

    /// The same values on a registry of equal length, each restricted to its new domain.
    pub fn with_registry(&self, registry: Vec<TruncFn>) -> Result<Family, FamilyError> {
        if registry.len() != self.registry.len() {
            return Err(FamilyError::Incompatible);
        }
        let mut out = Family::new(registry, self.arity, self.kstar)?;
        for (t, g) in &self.entries {
            let dom = out.meet_of(t);
            out.set(t, g.restrict(&dom))?;
        }
        Ok(out)
    }

    /// `self + c·other`, entrywise.
    pub fn add_scaled(&mut self, other: &Family, c: i64) -> Result<(), FamilyError> {
        if other.arity != self.arity || other.registry != self.registry {
            return Err(FamilyError::Incompatible);
        }
        for (t, g) in &other.entries {
            let mut cur = self.lookup(t);
            cur.add_scaled(g, c);
            self.set(t, cur)?;
        }
        Ok(())
    }
}

/// `e(ᾱ) = Σ(−1)ⁱ φ_{ᾱⁱ}` on `I(⋀ᾱ)`.
pub fn defect(phi: &Family, tuple: &[usize]) -> Result<GridFn, FamilyError> {
    if tuple.len() != phi.arity() + 1 {
        return Err(FamilyError::ArityMismatch {
            expected: phi.arity() + 1,
            found: tuple.len(),
        });
    }
    phi.check_indices(tuple)?;
    Ok(defect_unchecked(phi, tuple))
}

pub(crate) fn defect_unchecked(phi: &Family, tuple: &[usize]) -> GridFn {
    let mut out = GridFn::zero(phi.meet_of(tuple));
    if sort_with_sign(tuple).is_none() {
        return out;
    }
    for i in 0..tuple.len() {
        let sign = if i % 2 == 0 { 1 } else { -1 };
        out.add_scaled(&phi.lookup(&face(tuple, i)), sign);
    }
    out
}

/// `dⁿc`: the family of defects, of arity one more.
pub fn cech_d(c: &Family) -> Family {
    let mut out = c.zero_like(c.arity() + 1).expect("same registry");
    for t in c.increasing_tuples(c.arity() + 1) {
        let d = defect_unchecked(c, &t);
        if !d.is_zero() {
            out.set(&t, d).expect("domain is the tuple meet");
        }
    }
    out
}

/// A defect value in columns `≥ k*`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoherenceViolation {
    pub tuple: Vec<usize>,
    pub point: Point,
    pub value: i64,
}

/// First increasing `(n+1)`-tuple whose defect is nonzero in some column `≥ k*`.
pub fn coherence_violation(phi: &Family, kstar: usize) -> Option<CoherenceViolation> {
    phi.increasing_tuples(phi.arity() + 1).find_map(|t| {
        let d = defect_unchecked(phi, &t);
        let hit = d.support().find(|(p, _)| p.0 >= kstar);
        hit.map(|(point, value)| CoherenceViolation {
            tuple: t.clone(),
            point,
            value,
        })
    })
}

/// Alternation is structural, so coherence reduces to the support of every defect.
pub fn is_n_coherent(phi: &Family, kstar: usize) -> bool {
    coherence_violation(phi, kstar).is_none()
}

/// A witness of `n`-triviality: a global `ψ` when `n = 1`, else a family of arity `n − 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Trivialization {
    /// A total function on the grid; points outside `domain` read as 0.
    Global(GridFn),
    Family(Family),
}

impl Trivialization {
    /// Arity of the family this trivializes.
    pub fn target_arity(&self) -> usize {
        match self {
            Trivialization::Global(_) => 1,
            Trivialization::Family(t) => t.arity() + 1,
        }
    }
}

/// `f̄ ↦ Σᵢ(−1)ⁱ T(f̄ⁱ)` on `I(⋀f̄)`, as a family on `registry`.
pub fn coboundary(t: &Trivialization, like: &Family) -> Result<Family, FamilyError> {
    match t {
        Trivialization::Family(f) => {
            if f.registry() != like.registry() {
                return Err(FamilyError::Incompatible);
            }
            Ok(cech_d(f))
        }
        Trivialization::Global(psi) => {
            let mut out = like.zero_like(1)?;
            for (a, f) in like.registry().iter().enumerate() {
                let mut g = GridFn::zero(f.clone());
                for (p, v) in psi.support() {
                    if f.contains(p) {
                        g.set(p, v)?;
                    }
                }
                out.set(&[a], g)?;
            }
            Ok(out)
        }
    }
}

/// A tuple where `Σ(−1)ⁱT(f̄ⁱ)` and `φ_f̄` differ in a column `≥ k*`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrivializationFailure {
    pub tuple: Vec<usize>,
    pub point: Point,
    pub expected: i64,
    pub found: i64,
}

pub fn trivialization_failure(
    phi: &Family,
    t: &Trivialization,
    kstar: usize,
) -> Result<Option<TrivializationFailure>, FamilyError> {
    if t.target_arity() != phi.arity() {
        return Err(FamilyError::ArityMismatch {
            expected: phi.arity(),
            found: t.target_arity(),
        });
    }
    let cob = coboundary(t, phi)?;
    for tuple in phi.increasing_tuples(phi.arity()) {
        let lhs = cob.lookup(&tuple);
        let rhs = phi.lookup(&tuple);
        if let Some(point) = first_disagreement_above(&lhs, &rhs, kstar) {
            return Ok(Some(TrivializationFailure {
                tuple,
                point,
                expected: rhs.get(point),
                found: lhs.get(point),
            }));
        }
    }
    Ok(None)
}

/// `Σᵢ(−1)ⁱ T(f̄ⁱ) =_{≥k*} φ_f̄` for every increasing `n`-tuple.
pub fn is_trivialization(
    phi: &Family,
    t: &Trivialization,
    kstar: usize,
) -> Result<bool, FamilyError> {
    Ok(trivialization_failure(phi, t, kstar)?.is_none())
}
