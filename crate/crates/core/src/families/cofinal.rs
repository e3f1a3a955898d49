//! Extending a trivialization from a dominating sub-registry to the whole registry.

use super::family::trivialization_failure;
use super::grid::GridFn;
use super::{Family, FamilyError, Trivialization};

/// Result of [`extend_from_cofinal`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CofinalExtension {
    pub trivialization: Trivialization,
    /// Registry index `a(g)` for every registry index `g`.
    pub domination: Vec<usize>,
    /// Least threshold `≥ k*` at which the extension trivializes `Φ`, if any.
    pub kprime: Option<usize>,
}

/// For each `g`, the least-index member of `sub` dominating `g` in columns `≥ k*`.
pub fn default_domination(
    phi: &Family,
    sub: &[usize],
    kstar: usize,
) -> Result<Vec<usize>, FamilyError> {
    let registry = phi.registry();
    (0..registry.len())
        .map(|g| {
            sub.iter()
                .copied()
                .find(|&f| registry[g].le_from(&registry[f], kstar))
                .ok_or(FamilyError::Undominated { index: g })
        })
        .collect()
}

/// Extends `Υ`, a trivialization of `Φ↾F` indexed by position in `sub`, to all of `Φ`.
///
/// For `n ≥ 2` the extension is
/// `ψ_ḡ = υ_{a(ḡ)} − Σᵢ(−1)ⁱ φ_{⟨g₀,…,gᵢ,a(gᵢ),…,a(g_{n−2})⟩}`, summed over the
/// `n − 1` positions of `ḡ`, and set to 0 wherever a summand is undefined.
/// For `n = 1` the global `ψ` is reused, padded with zeros to the registry join.
pub fn extend_from_cofinal(
    phi: &Family,
    sub: &[usize],
    upsilon: &Trivialization,
    domination: Option<&[usize]>,
    kstar: usize,
) -> Result<CofinalExtension, FamilyError> {
    let registry = phi.registry();
    if let Some(&index) = sub.iter().find(|&&f| f >= registry.len()) {
        return Err(FamilyError::UnknownIndex {
            index,
            size: registry.len(),
        });
    }
    let a: Vec<usize> = match domination {
        None => default_domination(phi, sub, kstar)?,
        Some(a) => {
            if a.len() != registry.len() {
                return Err(FamilyError::BadDomination(format!(
                    "map has {} entries for a registry of {}",
                    a.len(),
                    registry.len()
                )));
            }
            for (g, &f) in a.iter().enumerate() {
                if !sub.contains(&f) {
                    return Err(FamilyError::BadDomination(format!(
                        "a({g}) = {f} is not in the sub-registry"
                    )));
                }
                if !registry[g].le_from(&registry[f], kstar) {
                    return Err(FamilyError::Undominated { index: g });
                }
            }
            a.to_vec()
        }
    };
    let restricted = phi.restrict_to(sub)?;
    if let Some(f) = trivialization_failure(&restricted, upsilon, kstar)? {
        return Err(FamilyError::NotTrivialization(f));
    }
    let position = |g: usize| {
        sub.iter()
            .position(|&f| f == a[g])
            .expect("a maps into sub")
    };
    let n = phi.arity();

    let trivialization = match upsilon {
        Trivialization::Global(psi) => {
            let join = phi.registry_join();
            let mut out = GridFn::zero(join.clone());
            for (p, v) in psi.support() {
                if join.contains(p) {
                    out.set(p, v)?;
                }
            }
            Trivialization::Global(out)
        }
        Trivialization::Family(ups) => {
            let mut out = phi.zero_like(n - 1)?;
            for gbar in phi.increasing_tuples(n - 1) {
                let dom = phi.meet_of(&gbar);
                let a_local: Vec<usize> = gbar.iter().map(|&g| position(g)).collect();
                let mut terms: Vec<(i64, Vec<usize>)> = Vec::with_capacity(n - 1);
                for i in 0..n - 1 {
                    let mut t: Vec<usize> = gbar[..=i].to_vec();
                    t.extend(gbar[i..].iter().map(|&g| a[g]));
                    terms.push((if i % 2 == 0 { 1 } else { -1 }, t));
                }
                let mut psi = GridFn::zero(dom.clone());
                for x in dom.points() {
                    let Some(base) = ups.value(&a_local, x) else {
                        continue;
                    };
                    let mut total = base;
                    let mut defined = true;
                    for (sign, t) in &terms {
                        match phi.value(t, x) {
                            Some(v) => total -= sign * v,
                            None => {
                                defined = false;
                                break;
                            }
                        }
                    }
                    if defined {
                        psi.set(x, total)?;
                    }
                }
                out.set(&gbar, psi)?;
            }
            Trivialization::Family(out)
        }
    };
    let kprime = (kstar..=phi.n_cols())
        .find(|&k| matches!(trivialization_failure(phi, &trivialization, k), Ok(None)));
    Ok(CofinalExtension {
        trivialization,
        domination: a,
        kprime,
    })
}
