use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{enumerate_chains, term_string, ExprError, FormalSum, IndexSymbol};
use crate::families::gen::{random_family, rng};
use crate::families::io::FamilyFile;
use crate::families::{cech_d, defect, meet, Family, GridFn, Point, TruncFn};
use crate::ordcomb::OrdSet;

/// A concrete setting for the formal calculus: a set `τ`, ordinals `α_σ`
/// for `σ ⊆ τ`, and an `n`-ary family whose registry indices are the ordinals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UInstance {
    tau: OrdSet,
    assignment: BTreeMap<OrdSet, u64>,
    phi: Family,
}

impl UInstance {
    /// Validates `α_{{η}} = η`, `ρ ⊊ σ ⇒ α_ρ < α_σ`, and the arity `|τ| − 1 ≥ 2`.
    pub fn new(
        tau: OrdSet,
        assignment: BTreeMap<OrdSet, u64>,
        phi: Family,
    ) -> Result<Self, ExprError> {
        let n = tau.len().saturating_sub(1);
        if n < 2 {
            return Err(ExprError::BadN(n));
        }
        if phi.arity() != n {
            return Err(ExprError::Instance(format!(
                "family arity {} but |τ| − 1 = {n}",
                phi.arity()
            )));
        }
        let mut full = BTreeMap::new();
        for sigma in nonempty_subsets(&tau) {
            let alpha = match (sigma.len(), assignment.get(&sigma)) {
                (1, Some(&a)) if a != sigma.elements()[0] => {
                    return Err(ExprError::Instance(format!(
                        "α{sigma} = {a}, must be the element itself"
                    )))
                }
                (1, _) => sigma.elements()[0],
                (_, Some(&a)) => a,
                (_, None) => {
                    return Err(ExprError::Unresolvable(
                        IndexSymbol::alpha(&sigma).to_string(),
                    ))
                }
            };
            if alpha as usize >= phi.registry().len() {
                return Err(ExprError::Instance(format!(
                    "α{sigma} = {alpha} has no registry function"
                )));
            }
            full.insert(sigma, alpha);
        }
        for (rho, a) in &full {
            for (sigma, b) in &full {
                if rho.is_proper_subset(sigma) && a >= b {
                    return Err(ExprError::Instance(format!(
                        "α{rho} = {a} is not below α{sigma} = {b}"
                    )));
                }
            }
        }
        if let Some(extra) = assignment.keys().find(|s| !full.contains_key(*s)) {
            return Err(ExprError::Instance(format!(
                "{extra} is not a nonempty subset of τ"
            )));
        }
        Ok(UInstance {
            tau,
            assignment: full,
            phi,
        })
    }

    pub fn tau(&self) -> &OrdSet {
        &self.tau
    }

    pub fn n(&self) -> usize {
        self.tau.len() - 1
    }

    pub fn phi(&self) -> &Family {
        &self.phi
    }

    /// `α_σ` for every nonempty `σ ⊆ τ`, singletons included.
    pub fn assignment(&self) -> &BTreeMap<OrdSet, u64> {
        &self.assignment
    }

    pub fn alpha(&self, sigma: &OrdSet) -> Option<u64> {
        self.assignment.get(sigma).copied()
    }

    /// The registry function `g_α`.
    pub fn g(&self, alpha: u64) -> &TruncFn {
        &self.phi.registry()[alpha as usize]
    }

    /// The same instance with a different family on a registry of equal length.
    pub fn with_family(&self, phi: Family) -> Result<UInstance, ExprError> {
        UInstance::new(self.tau.clone(), self.assignment.clone(), phi)
    }
}

fn nonempty_subsets(tau: &OrdSet) -> Vec<OrdSet> {
    (1..=tau.len())
        .flat_map(|k| tau.elements().iter().copied().combinations(k))
        .map(OrdSet::from_unsorted)
        .collect()
}

/// The ordinal a symbol denotes in an instance.
pub fn resolve(sym: &IndexSymbol, inst: &UInstance) -> Result<u64, ExprError> {
    match sym {
        IndexSymbol::Concrete(eta) if (*eta as usize) < inst.phi.registry().len() => Ok(*eta),
        IndexSymbol::Concrete(_) => Err(ExprError::Unresolvable(sym.to_string())),
        IndexSymbol::Formal(s) => inst
            .alpha(s)
            .ok_or_else(|| ExprError::Unresolvable(sym.to_string())),
    }
}

/// `Σ cᵢ e(ᾱᵢ)` as a grid function, on the intersection of `I(⋀τ)` with every term's domain.
pub fn evaluate(l: &FormalSum, inst: &UInstance) -> Result<GridFn, ExprError> {
    let sum = l.expand_blocks();
    let mut resolved = Vec::with_capacity(sum.terms().len());
    for (seq, &c) in sum.terms() {
        let tuple: Vec<u64> = seq
            .iter()
            .map(|s| resolve(s, inst))
            .collect::<Result<_, _>>()?;
        if tuple.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ExprError::NotIncreasing {
                term: term_string(seq),
                tuple,
            });
        }
        let idx: Vec<usize> = tuple.iter().map(|&a| a as usize).collect();
        resolved.push((idx, c));
    }
    let tau_idx: Vec<usize> = inst.tau.elements().iter().map(|&a| a as usize).collect();
    let mut domain = inst.phi.meet_of(&tau_idx);
    for (idx, _) in &resolved {
        domain = meet([&domain, &inst.phi.meet_of(idx)])?;
    }
    let mut out = GridFn::zero(domain);
    for (idx, c) in resolved {
        out.add_scaled(&defect(&inst.phi, &idx)?, c);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum UFailure {
    /// Two long strings with different restricted defects.
    Uniformity {
        first: Vec<Vec<u64>>,
        second: Vec<Vec<u64>>,
        first_support: Vec<(Point, i64)>,
        second_support: Vec<(Point, i64)>,
    },
    /// `g_{α_ρ} ≰ g_{α_σ}` at a column.
    Monotonicity {
        rho: Vec<u64>,
        sigma: Vec<u64>,
        column: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UCheck {
    pub holds: bool,
    /// The common restricted defect when uniformity holds.
    pub epsilon: Option<Vec<(Point, i64)>>,
    pub long_strings: usize,
    pub failure: Option<UFailure>,
}

type Support = Vec<(Point, i64)>;

/// Evaluates `𝔲ₙ(τ)`: one restricted defect shared by all long strings, and
/// `g_{α_ρ} ≤ g_{α_σ}` for all `∅ ≠ ρ ⊊ σ ⊆ τ`.
pub fn check_u(inst: &UInstance) -> Result<UCheck, ExprError> {
    let chains = enumerate_chains(&inst.tau, inst.tau.len())?;
    let mut reference: Option<(Vec<Vec<u64>>, Support)> = None;
    let mut failure = None;
    for chain in &chains {
        let tuple: Vec<usize> = chain
            .alpha_seq()
            .iter()
            .map(|s| resolve(s, inst).map(|a| a as usize))
            .collect::<Result<_, _>>()?;
        let support: Vec<(Point, i64)> = defect(&inst.phi, &tuple)?.support().collect();
        let sets: Vec<Vec<u64>> = chain.sets.iter().map(|s| s.elements().to_vec()).collect();
        match &reference {
            None => reference = Some((sets, support)),
            Some((first, eps)) if *eps != support => {
                failure = Some(UFailure::Uniformity {
                    first: first.clone(),
                    second: sets,
                    first_support: eps.clone(),
                    second_support: support,
                });
                break;
            }
            Some(_) => {}
        }
    }
    if failure.is_none() {
        'outer: for (rho, &a) in &inst.assignment {
            for (sigma, &b) in &inst.assignment {
                if rho.is_proper_subset(sigma) {
                    let (ga, gb) = (inst.g(a), inst.g(b));
                    if let Some(column) = (0..ga.n_cols()).find(|&i| ga.height(i) > gb.height(i)) {
                        failure = Some(UFailure::Monotonicity {
                            rho: rho.elements().to_vec(),
                            sigma: sigma.elements().to_vec(),
                            column,
                        });
                        break 'outer;
                    }
                }
            }
        }
    }
    let holds = failure.is_none();
    Ok(UCheck {
        holds,
        epsilon: if holds {
            reference.map(|(_, e)| e)
        } else {
            None
        },
        long_strings: chains.len(),
        failure,
    })
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

const MAX_REGISTRY: usize = 12;

/// Registry layout: ordinals `0..=n` for `τ`, then one block of fresh
/// ordinals per subset size. Sizes share ordinals once the registry would
/// exceed twelve members.
fn level_sizes(n: usize) -> Result<Vec<usize>, ExprError> {
    let mut sizes: Vec<usize> = (2..=n + 1).map(|s| binomial(n + 1, s)).collect();
    let total = |sz: &[usize]| n + 1 + sz.iter().sum::<usize>();
    while total(&sizes) > MAX_REGISTRY {
        let (idx, &max) = sizes
            .iter()
            .enumerate()
            .max_by_key(|(_, &v)| v)
            .expect("nonempty");
        if max <= 1 {
            return Err(ExprError::Instance(format!(
                "n = {n} does not fit a registry of {MAX_REGISTRY}"
            )));
        }
        sizes[idx] -= 1;
    }
    Ok(sizes)
}

type Skeleton = (OrdSet, BTreeMap<OrdSet, u64>, Vec<TruncFn>);

fn skeleton<R: Rng>(rng: &mut R, n: usize, n_cols: usize) -> Result<Skeleton, ExprError> {
    let tau = OrdSet::from_unsorted(0..=n as u64);
    let sizes = level_sizes(n)?;
    let mut registry: Vec<TruncFn> = (0..=n)
        .map(|_| TruncFn::new((0..n_cols).map(|_| rng.gen_range(0..=3)).collect()))
        .collect();
    let mut assignment = BTreeMap::new();
    for (level, &count) in sizes.iter().enumerate() {
        let s = level + 2;
        let floor: Vec<u32> = (0..n_cols)
            .map(|i| registry.iter().map(|g| g.height(i)).max().unwrap_or(0))
            .collect();
        let start = registry.len() as u64;
        for _ in 0..count {
            registry.push(TruncFn::new(
                floor.iter().map(|&h| h + rng.gen_range(0..=1)).collect(),
            ));
        }
        let ordinals: Vec<u64> = (start..start + count as u64).collect();
        let subsets: Vec<OrdSet> = tau
            .elements()
            .iter()
            .copied()
            .combinations(s)
            .map(OrdSet::from_unsorted)
            .collect();
        // every fresh ordinal is used at least once
        let mut picks: Vec<u64> = ordinals.clone();
        while picks.len() < subsets.len() {
            picks.push(*ordinals.choose(rng).expect("count ≥ 1"));
        }
        picks.shuffle(rng);
        for (sigma, alpha) in subsets.into_iter().zip(picks) {
            assignment.insert(sigma, alpha);
        }
    }
    Ok((tau, assignment, registry))
}

/// A seeded instance whose family is an exact coboundary, so every defect vanishes.
pub fn gen_u_instance(n: usize, n_cols: usize, seed: u64) -> Result<UInstance, ExprError> {
    let mut r = rng(seed);
    let (tau, assignment, registry) = skeleton(&mut r, n, n_cols)?;
    let kstar = n_cols / 2;
    let t = random_family(&mut r, &registry, n - 1, kstar, n_cols, 3, 0.6)?;
    UInstance::new(tau, assignment, cech_d(&t))
}

/// A seeded instance with a nonzero common long-string defect `ε`.
///
/// Starting from an exact coboundary, the family is shifted below `k*` on
/// three kinds of tuples: every long string minus its top `α_τ` gets
/// `(−1)ⁿ·ε`; tuples of elements of `τ` get arbitrary noise; nothing else
/// changes. Each long-string defect then equals `ε`, while the terms of
/// `𝒞ₙ(τ)` pick up the noise.
pub fn gen_u_instance_with_epsilon(
    n: usize,
    n_cols: usize,
    seed: u64,
) -> Result<UInstance, ExprError> {
    let mut r = rng(seed);
    let (tau, assignment, registry) = skeleton(&mut r, n, n_cols)?;
    let kstar = (n_cols / 2).max(1);
    let t = random_family(&mut r, &registry, n - 1, kstar, n_cols, 3, 0.6)?;
    let mut phi = cech_d(&t);

    let tau_idx: Vec<usize> = tau.elements().iter().map(|&a| a as usize).collect();
    let base = phi.meet_of(&tau_idx);
    let mut eps = GridFn::zero(base.clone());
    let low: Vec<Point> = base.points().filter(|p| p.0 < kstar).collect();
    for p in &low {
        if r.gen_bool(0.5) {
            eps.set(
                *p,
                r.gen_range(1..=3) * if r.gen_bool(0.5) { 1 } else { -1 },
            )?;
        }
    }
    if eps.is_zero() {
        eps.set(low[0], 1)?;
    }
    let sign = if n.is_multiple_of(2) { 1 } else { -1 };

    let mut prefixes = BTreeSet::new();
    for chain in enumerate_chains(&tau, tau.len())? {
        let mut tuple: Vec<usize> = chain.sets[..n]
            .iter()
            .map(|s| assignment.get(s).copied().unwrap_or(s.elements()[0]) as usize)
            .collect();
        tuple.sort_unstable();
        prefixes.insert(tuple);
    }
    for tuple in prefixes {
        let dom = phi.meet_of(&tuple);
        let mut g = phi.get(&tuple)?;
        for (p, v) in eps.support() {
            debug_assert!(dom.contains(p));
            g.add_at(p, sign * v)?;
        }
        phi.set(&tuple, g)?;
    }
    for tuple in tau_idx.iter().copied().combinations(n) {
        let dom = phi.meet_of(&tuple);
        let mut g = phi.get(&tuple)?;
        for p in dom.points().filter(|p| p.0 < kstar) {
            if r.gen_bool(0.5) {
                g.add_at(p, r.gen_range(-3..=3))?;
            }
        }
        phi.set(&tuple, g)?;
    }
    UInstance::new(tau, assignment, phi)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignmentEntry {
    pub set: Vec<u64>,
    pub alpha: u64,
}

/// `{"tau": [...], "assignment": [{"set": [...], "alpha": k}], "family": {...}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UInstanceFile {
    pub tau: Vec<u64>,
    pub assignment: Vec<AssignmentEntry>,
    pub family: FamilyFile,
}

impl UInstanceFile {
    pub fn from_instance(inst: &UInstance) -> Self {
        UInstanceFile {
            tau: inst.tau.elements().to_vec(),
            assignment: inst
                .assignment
                .iter()
                .filter(|(s, _)| s.len() > 1)
                .map(|(s, &a)| AssignmentEntry {
                    set: s.elements().to_vec(),
                    alpha: a,
                })
                .collect(),
            family: FamilyFile::from_family(&inst.phi),
        }
    }

    pub fn to_instance(&self) -> Result<UInstance, ExprError> {
        let tau = OrdSet::new(self.tau.clone()).map_err(|e| ExprError::Instance(e.to_string()))?;
        let mut assignment = BTreeMap::new();
        for e in &self.assignment {
            let s =
                OrdSet::new(e.set.clone()).map_err(|err| ExprError::Instance(err.to_string()))?;
            assignment.insert(s, e.alpha);
        }
        UInstance::new(tau, assignment, self.family.to_family()?)
    }
}
