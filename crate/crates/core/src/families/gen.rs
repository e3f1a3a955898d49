//! Seeded instance generators.

use std::collections::BTreeSet;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::family::cech_d;
use super::grid::{join, GridFn, TruncFn};
use super::{Family, FamilyError, Trivialization};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenMode {
    ExactTrivial,
    TrivialPlusNoise,
    Incoherent,
}

impl FromStr for GenMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact_trivial" => Ok(GenMode::ExactTrivial),
            "trivial_plus_noise" => Ok(GenMode::TrivialPlusNoise),
            "incoherent" => Ok(GenMode::Incoherent),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `size` distinct functions on `n_cols` columns with heights `≤ max_height`.
pub fn random_registry<R: Rng>(
    rng: &mut R,
    size: usize,
    n_cols: usize,
    max_height: u32,
) -> Vec<TruncFn> {
    let capacity = (max_height as u128 + 1)
        .checked_pow(n_cols as u32)
        .unwrap_or(u128::MAX);
    assert!(capacity >= size as u128, "not enough distinct functions");
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(size);
    while out.len() < size {
        let f = TruncFn::new((0..n_cols).map(|_| rng.gen_range(0..=max_height)).collect());
        if seen.insert(f.clone()) {
            out.push(f);
        }
    }
    out
}

/// A random alternating family; values in `-spread..=spread`, each point
/// nonzero with probability `density`, only in columns `< below`.
pub fn random_family<R: Rng>(
    rng: &mut R,
    registry: &[TruncFn],
    arity: usize,
    kstar: usize,
    below: usize,
    spread: i64,
    density: f64,
) -> Result<Family, FamilyError> {
    let mut fam = Family::new(registry.to_vec(), arity, kstar)?;
    let tuples: Vec<Vec<usize>> = fam.increasing_tuples(arity).collect();
    for t in tuples {
        let dom = fam.meet_of(&t);
        let mut g = GridFn::zero(dom.clone());
        for p in dom.points().filter(|p| p.0 < below) {
            if rng.gen_bool(density) {
                g.set(p, rng.gen_range(-spread..=spread))?;
            }
        }
        fam.set(&t, g)?;
    }
    Ok(fam)
}

/// A random trivialization for arity-`n` families (global `ψ` when `n = 1`).
pub fn random_trivialization<R: Rng>(
    rng: &mut R,
    registry: &[TruncFn],
    n: usize,
    kstar: usize,
) -> Result<Trivialization, FamilyError> {
    let n_cols = registry.first().ok_or(FamilyError::EmptyRegistry)?.n_cols();
    if n == 1 {
        let dom = join(registry)?;
        let mut psi = GridFn::zero(dom.clone());
        for p in dom.points() {
            if rng.gen_bool(0.6) {
                psi.set(p, rng.gen_range(-3..=3))?;
            }
        }
        Ok(Trivialization::Global(psi))
    } else {
        Ok(Trivialization::Family(random_family(
            rng,
            registry,
            n - 1,
            kstar,
            n_cols,
            3,
            0.6,
        )?))
    }
}

/// A family of arity `n` in the requested mode, deterministic in `seed`.
pub fn gen_family(
    mode: GenMode,
    n: usize,
    registry: &[TruncFn],
    kstar: usize,
    seed: u64,
) -> Result<Family, FamilyError> {
    let mut rng = rng(seed);
    let base = Family::new(registry.to_vec(), n, kstar)?;
    let t = random_trivialization(&mut rng, registry, n, kstar)?;
    let mut phi = match &t {
        Trivialization::Family(f) => cech_d(f),
        Trivialization::Global(_) => super::family::coboundary(&t, &base)?,
    };
    if mode == GenMode::ExactTrivial {
        return Ok(phi);
    }
    let noise = random_family(&mut rng, registry, n, kstar, kstar, 2, 0.4)?;
    phi.add_scaled(&noise, 1)?;
    if mode == GenMode::TrivialPlusNoise {
        return Ok(phi);
    }
    if kstar >= phi.n_cols() || registry.len() < n + 1 {
        return Err(FamilyError::CannotPerturb {
            kstar,
            n_cols: phi.n_cols(),
            registry: registry.len(),
            n,
        });
    }
    let tuples: Vec<Vec<usize>> = phi.increasing_tuples(n + 1).collect();
    let target = tuples.choose(&mut rng).expect("at least one tuple").clone();
    let dom = phi.meet_of(&target);
    let candidates: Vec<_> = dom.points().filter(|p| p.0 >= kstar).collect();
    let x = *candidates
        .choose(&mut rng)
        .expect("every column has height-0 points");
    let face_index = rng.gen_range(0..target.len());
    let mut f = target.clone();
    f.remove(face_index);
    phi.add_value(&f, x, 1)?;
    Ok(phi)
}

/// A registry of `size` functions whose first `sub_size` members dominate
/// every member in columns `≥ kstar`.
pub fn dominated_registry<R: Rng>(
    rng: &mut R,
    size: usize,
    sub_size: usize,
    n_cols: usize,
    max_height: u32,
    kstar: usize,
) -> Vec<TruncFn> {
    assert!(sub_size >= 1 && sub_size <= size);
    let mut out = random_registry(rng, sub_size, n_cols, max_height);
    let mut seen: BTreeSet<TruncFn> = out.iter().cloned().collect();
    while out.len() < size {
        let anchor = out[rng.gen_range(0..sub_size)].clone();
        let f = TruncFn::new(
            (0..n_cols)
                .map(|i| {
                    if i >= kstar {
                        rng.gen_range(0..=anchor.height(i))
                    } else {
                        rng.gen_range(0..=max_height)
                    }
                })
                .collect(),
        );
        if seen.insert(f.clone()) {
            out.push(f);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{coherence_violation, is_n_coherent};
    use super::*;

    #[test]
    fn modes_behave() {
        let mut r = rng(1);
        let reg = random_registry(&mut r, 5, 6, 3);
        for seed in 0..10 {
            let exact = gen_family(GenMode::ExactTrivial, 2, &reg, 3, seed).unwrap();
            assert!(exact
                .increasing_tuples(3)
                .all(|t| super::super::defect(&exact, &t).unwrap().is_zero()));
            let noisy = gen_family(GenMode::TrivialPlusNoise, 2, &reg, 3, seed).unwrap();
            assert!(is_n_coherent(&noisy, 3));
            let bad = gen_family(GenMode::Incoherent, 2, &reg, 3, seed).unwrap();
            assert!(coherence_violation(&bad, 3).is_some());
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let mut r = rng(9);
        let reg = random_registry(&mut r, 4, 5, 2);
        let a = gen_family(GenMode::TrivialPlusNoise, 1, &reg, 2, 42).unwrap();
        let b = gen_family(GenMode::TrivialPlusNoise, 1, &reg, 2, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn incoherent_needs_room() {
        let reg = vec![TruncFn::new(vec![1, 1])];
        assert!(matches!(
            gen_family(GenMode::Incoherent, 1, &reg, 1, 0),
            Err(FamilyError::CannotPerturb { .. })
        ));
    }
}
