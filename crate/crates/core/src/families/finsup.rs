//! Finitely supported reformulation of triviality, in both directions.

use std::collections::HashMap;

use itertools::Itertools;
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;

use super::family::{
    coboundary, coherence_violation, defect_unchecked, face, trivialization_failure,
};
use super::grid::{GridFn, Point};
use super::{Family, FamilyError, Trivialization};
use crate::intlin::{HermiteSystem, Infeasibility};

type PointSystem = (HermiteSystem, Vec<Vec<usize>>, Vec<Vec<usize>>);

/// Outcome of [`solve_finsup`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FinsupOutcome {
    Sat(Family),
    Unsat(UnsatCertificate),
}

/// The per-point subsystem that has no integral solution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnsatCertificate {
    pub point: Point,
    /// Registry indices `f` with the point in `I(f)`.
    pub covering: Vec<usize>,
    pub unknowns: usize,
    pub equations: usize,
    pub infeasibility: Infeasibility,
}

/// Finds an alternating `Ψ` supported in columns `< k*` with
/// `Σ(−1)ⁱφ_{f̄ⁱ} = Σ(−1)ⁱψ_{f̄ⁱ}` exactly on every `(n+1)`-tuple.
///
/// The system splits into independent blocks, one per grid point `x`: the
/// unknowns are `ψ_f̄(x)` for `n`-subsets of the functions covering `x`.
/// Blocks of equal size share a coefficient matrix, so each size is reduced once.
pub fn solve_finsup(phi: &Family, kstar: usize) -> Result<FinsupOutcome, FamilyError> {
    if let Some(v) = coherence_violation(phi, kstar) {
        return Err(FamilyError::NotCoherent(v));
    }
    let n = phi.arity();
    let mut psi = phi.zero_like(n)?;
    let mut systems: HashMap<usize, PointSystem> = HashMap::new();
    let join = phi.registry_join();
    for x in join.points().filter(|p| p.0 < kstar) {
        let covering: Vec<usize> = (0..phi.registry().len())
            .filter(|&a| phi.registry()[a].contains(x))
            .collect();
        if covering.len() < n + 1 {
            continue;
        }
        let m = covering.len();
        let (system, unknowns, equations) = systems.entry(m).or_insert_with(|| block_system(m, n));
        let rhs: Vec<BigInt> = equations
            .iter()
            .map(|local| {
                let global: Vec<usize> = local.iter().map(|&i| covering[i]).collect();
                BigInt::from(defect_value(phi, &global, x))
            })
            .collect();
        match system.solve(&rhs) {
            Ok(y) => {
                for (local, v) in unknowns.iter().zip(y) {
                    let v = v.to_i64().ok_or(FamilyError::Overflow)?;
                    if v != 0 {
                        let global: Vec<usize> = local.iter().map(|&i| covering[i]).collect();
                        psi.add_value(&global, x, v)?;
                    }
                }
            }
            Err(infeasibility) => {
                return Ok(FinsupOutcome::Unsat(UnsatCertificate {
                    point: x,
                    covering,
                    unknowns: unknowns.len(),
                    equations: equations.len(),
                    infeasibility,
                }))
            }
        }
    }
    Ok(FinsupOutcome::Sat(psi))
}

/// Coboundary matrix of the full simplex on `m` vertices, `n`-faces to `(n+1)`-faces.
fn block_system(m: usize, n: usize) -> (HermiteSystem, Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let unknowns: Vec<Vec<usize>> = (0..m).combinations(n).collect();
    let column: HashMap<&Vec<usize>, usize> =
        unknowns.iter().enumerate().map(|(c, u)| (u, c)).collect();
    let equations: Vec<Vec<usize>> = (0..m).combinations(n + 1).collect();
    let matrix: Vec<Vec<i64>> = equations
        .iter()
        .map(|eq| {
            let mut row = vec![0i64; unknowns.len()];
            for i in 0..eq.len() {
                row[column[&face(eq, i)]] = if i % 2 == 0 { 1 } else { -1 };
            }
            row
        })
        .collect();
    (
        HermiteSystem::new(&matrix, unknowns.len()),
        unknowns,
        equations,
    )
}

fn defect_value(phi: &Family, tuple: &[usize], x: Point) -> i64 {
    (0..tuple.len())
        .map(|i| {
            let sign = if i % 2 == 0 { 1 } else { -1 };
            sign * phi.value(&face(tuple, i), x).unwrap_or(0)
        })
        .sum()
}

/// Why a candidate `Ψ` is not a finitely supported reformulation of `Φ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FinsupViolation {
    /// `ψ_f̄` is nonzero in a column `≥ k*`.
    Support { tuple: Vec<usize>, point: Point },
    /// The two alternating sums differ.
    Equation {
        tuple: Vec<usize>,
        point: Point,
        phi_side: i64,
        psi_side: i64,
    },
}

pub fn finsup_violation(
    phi: &Family,
    psi: &Family,
    kstar: usize,
) -> Result<Option<FinsupViolation>, FamilyError> {
    if psi.arity() != phi.arity() {
        return Err(FamilyError::ArityMismatch {
            expected: phi.arity(),
            found: psi.arity(),
        });
    }
    if psi.registry() != phi.registry() {
        return Err(FamilyError::Incompatible);
    }
    for (tuple, g) in psi.entries() {
        if let Some((point, _)) = g.support().find(|(p, _)| p.0 >= kstar) {
            return Ok(Some(FinsupViolation::Support {
                tuple: tuple.clone(),
                point,
            }));
        }
    }
    for tuple in phi.increasing_tuples(phi.arity() + 1) {
        let a = defect_unchecked(phi, &tuple);
        let b = defect_unchecked(psi, &tuple);
        if a != b {
            let point = a
                .support()
                .chain(b.support())
                .map(|(p, _)| p)
                .find(|&p| a.get(p) != b.get(p))
                .expect("unequal functions on a common domain differ somewhere");
            return Ok(Some(FinsupViolation::Equation {
                tuple,
                point,
                phi_side: a.get(point),
                psi_side: b.get(point),
            }));
        }
    }
    Ok(None)
}

/// Builds the trivialization of the reverse direction, choosing `f_x` as
/// the least registry index whose domain contains `x`.
pub fn finsup_to_trivialization(
    phi: &Family,
    psi: &Family,
    kstar: usize,
) -> Result<Trivialization, FamilyError> {
    finsup_to_trivialization_by(phi, psi, kstar, |_, covering| covering[0])
}

/// As [`finsup_to_trivialization`], with `choose(x, covering)` picking `f_x`
/// among the registry indices covering `x` (given in increasing order).
pub fn finsup_to_trivialization_by<C>(
    phi: &Family,
    psi: &Family,
    kstar: usize,
    choose: C,
) -> Result<Trivialization, FamilyError>
where
    C: Fn(Point, &[usize]) -> usize,
{
    if let Some(v) = finsup_violation(phi, psi, kstar)? {
        return Err(FamilyError::NotFinsup(v));
    }
    let n = phi.arity();
    let registry = phi.registry();
    let f_x = |x: Point| -> Option<usize> {
        let covering: Vec<usize> = (0..registry.len())
            .filter(|&a| registry[a].contains(x))
            .collect();
        (!covering.is_empty()).then(|| choose(x, &covering))
    };
    if n == 1 {
        let join = phi.registry_join();
        let mut tau = GridFn::zero(join.clone());
        for x in join.points() {
            if let Some(f) = f_x(x) {
                let v = phi.value(&[f], x).unwrap_or(0) - psi.value(&[f], x).unwrap_or(0);
                tau.set(x, v)?;
            }
        }
        return Ok(Trivialization::Global(tau));
    }
    let sign = if n.is_multiple_of(2) { 1 } else { -1 };
    let mut t = phi.zero_like(n - 1)?;
    for tuple in phi.increasing_tuples(n - 1) {
        let dom = phi.meet_of(&tuple);
        let mut g = GridFn::zero(dom.clone());
        for x in dom.points() {
            let f = f_x(x).expect("x lies in every member of the tuple");
            let mut ext = tuple.clone();
            ext.push(f);
            let v = psi.value(&ext, x).unwrap_or(0) - phi.value(&ext, x).unwrap_or(0);
            g.set(x, sign * v)?;
        }
        t.set(&tuple, g)?;
    }
    Ok(Trivialization::Family(t))
}

/// `ψ_f̄ = φ_f̄ − Σᵢ(−1)ⁱ τ_{f̄ⁱ}`; the result is supported in columns `< k*`.
pub fn trivialization_to_finsup(
    phi: &Family,
    t: &Trivialization,
    kstar: usize,
) -> Result<Family, FamilyError> {
    if let Some(f) = trivialization_failure(phi, t, kstar)? {
        return Err(FamilyError::NotTrivialization(f));
    }
    let mut psi = phi.clone();
    psi.add_scaled(&coboundary(t, phi)?, -1)?;
    Ok(psi)
}
