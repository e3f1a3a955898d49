mod common;

use std::collections::BTreeMap;

use limlab::exprcalc::*;
use limlab::families::gen::{random_family, rng};
use limlab::families::{cech_d, GridFn, TruncFn};
use limlab::ordcomb::OrdSet;
use proptest::prelude::*;

fn set(v: &[u64]) -> OrdSet {
    OrdSet::new(v.to_vec()).unwrap()
}

fn tau(n: usize) -> OrdSet {
    OrdSet::from_unsorted(0..=n as u64)
}

// Oracle: terms as lists of index sets, a singleton set standing for a concrete ordinal.
type OTerm = (Vec<Vec<u64>>, i64);

fn o_faces(s: &[u64]) -> Vec<Vec<u64>> {
    (0..s.len())
        .map(|i| {
            s.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &x)| x)
                .collect()
        })
        .collect()
}

fn o_concrete(s: &[u64]) -> Vec<Vec<u64>> {
    s.iter().map(|&x| vec![x]).collect()
}

fn sgn(i: usize) -> i64 {
    if i.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn o_a(n: usize, rho: &[u64]) -> Vec<OTerm> {
    if n == 2 {
        let mut t = o_concrete(rho);
        t.push(rho.to_vec());
        return vec![(t, 1)];
    }
    o_c(n - 1, rho)
        .into_iter()
        .map(|(mut t, c)| {
            t.push(rho.to_vec());
            (t, c * sgn(n))
        })
        .collect()
}

fn o_c(n: usize, tau: &[u64]) -> Vec<OTerm> {
    let mut out = vec![(o_concrete(tau), 1)];
    for (i, face) in o_faces(tau).into_iter().enumerate() {
        out.extend(o_a(n, &face).into_iter().map(|(t, c)| (t, -sgn(i) * c)));
    }
    out
}

fn o_drop(t: &[Vec<u64>], i: usize) -> Vec<Vec<u64>> {
    t.iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, x)| x.clone())
        .collect()
}

fn o_d(terms: &[OTerm]) -> Vec<OTerm> {
    terms
        .iter()
        .flat_map(|(t, c)| (0..t.len()).map(move |i| (o_drop(t, i), c * sgn(i))))
        .collect()
}

fn o_s(n: usize, tau: &[u64]) -> Vec<OTerm> {
    let mut top = o_concrete(tau);
    top.push(tau.to_vec());
    let mut out = o_d(&[(top, 1)]);
    for (i, face) in o_faces(tau).into_iter().enumerate() {
        let starred: Vec<OTerm> = o_a(n, &face)
            .into_iter()
            .map(|(mut t, c)| {
                t.push(tau.to_vec());
                (t, c)
            })
            .collect();
        out.extend(o_d(&starred).into_iter().map(|(t, c)| (t, -sgn(i) * c)));
    }
    out
}

fn o_merge(terms: &[OTerm]) -> BTreeMap<Vec<Vec<u64>>, i64> {
    let mut m = BTreeMap::new();
    for (t, c) in terms {
        let mut sorted = t.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() < t.len() {
            continue;
        }
        *m.entry(t.clone()).or_insert(0) += c;
    }
    m.retain(|_, c| *c != 0);
    m
}

fn o_phi_level(terms: &[OTerm]) -> BTreeMap<Vec<Vec<u64>>, i64> {
    o_merge(&o_d(terms))
}

fn lib_map(m: &BTreeMap<Seq, i64>) -> BTreeMap<Vec<Vec<u64>>, i64> {
    m.iter()
        .map(|(s, &c)| {
            (
                s.iter()
                    .map(|x| x.index_set().elements().to_vec())
                    .collect(),
                c,
            )
        })
        .collect()
}

#[test]
fn raw_term_counts_match_oracle() {
    assert_eq!(o_s(2, &[0, 1, 2]).len(), 16);
    assert_eq!(build_s(2, &tau(2)).unwrap().raw_expansion().len(), 16);
    assert_eq!(o_c(3, &[0, 1, 2, 3]).len(), 17);
    assert_eq!(o_c(4, &[0, 1, 2, 3, 4]).len(), 86);
    for n in 2..=4 {
        let t: Vec<u64> = (0..=n as u64).collect();
        let c = build_c(n, &tau(n)).unwrap();
        assert_eq!(lib_map(c.terms()), o_merge(&o_c(n, &t)), "C_{n}");
        let s = build_s(n, &tau(n)).unwrap();
        assert_eq!(s.raw_expansion().len(), o_s(n, &t).len(), "S_{n}");
        assert_eq!(
            lib_map(s.expand_blocks().terms()),
            o_merge(&o_s(n, &t)),
            "S_{n}"
        );
        for i in 0..=n {
            let face = tau(n).without_nth(i);
            let a = build_a(n, &face).unwrap();
            assert_eq!(lib_map(a.terms()), o_merge(&o_a(n, face.elements())));
        }
    }
}

#[test]
fn s_vanishes_fully_expanded() {
    for n in 2..=4 {
        let t: Vec<u64> = (0..=n as u64).collect();
        assert!(o_phi_level(&o_s(n, &t)).is_empty(), "oracle S_{n}");
        assert!(
            expand_full(&build_s(n, &tau(n)).unwrap()).is_empty(),
            "S_{n}"
        );
    }
}

#[test]
fn c2_term_counts() {
    let c2 = build_c(2, &tau(2)).unwrap();
    assert_eq!(c2.expand_blocks().terms().len(), 4);
    let full = expand_full(&c2);
    assert_eq!(full.len(), 6);
    assert_eq!(lib_map(&full), o_phi_level(&o_c(2, &[0, 1, 2])));
}

#[test]
fn shapes_hold() {
    for n in 2..=4 {
        let t = tau(n);
        let ctx = ShapeContext::Tau(t.clone());
        shape_check(&build_c(n, &t).unwrap(), &ctx).unwrap();
        shape_check(&build_s(n, &t).unwrap(), &ctx).unwrap();
        for i in 0..=n {
            let face = t.without_nth(i);
            shape_check(&build_a(n, &face).unwrap(), &ShapeContext::A(face.clone())).unwrap();
        }
    }
}

#[test]
fn shape_catches_wrong_length() {
    let t = tau(2);
    let c3 = build_c(3, &tau(3)).unwrap();
    assert!(shape_check(&c3, &ShapeContext::Tau(t)).is_err());
}

#[test]
fn reduction_succeeds_and_flip_fails() {
    for n in 2..=4 {
        let t = tau(n);
        let r = reduce_s_to_c(n, &t).unwrap();
        assert_eq!(r.status, ReductionStatus::Success, "n = {n}");
        assert!(r.type1_residual.is_empty());
        assert_eq!(r.long_string_net, 0);
        let s = build_s(n, &t).unwrap();
        let c = build_c(n, &t).unwrap();
        for k in 0..s.blocks().len() {
            let mut bad = s.clone();
            assert!(bad.flip_block(k));
            let r = reduce_with(&bad, &c, n, &t);
            assert_eq!(r.status, ReductionStatus::Failure);
            assert!(!r.type1_residual.is_empty());
        }
    }
}

#[test]
fn n2_long_string_ledger() {
    let r = reduce_s_to_c(2, &tau(2)).unwrap();
    assert_eq!(r.long_string_ledger.len(), 6);
    assert_eq!(r.long_string_net, 0);
    let pos = r.long_string_ledger.iter().filter(|e| e.coeff > 0).count();
    assert_eq!(pos, 3);
    assert!(r
        .long_string_ledger
        .iter()
        .all(|e| e.coeff.abs() == 1 && e.term.ends_with("a{0,1,2})")));
}

#[test]
fn a_slices_match_s_recursion() {
    // Σ_{j<n}(−1)ʲ [𝒜ₙ(ρ)*α_τ]ʲ = (−1)ⁿ 𝒮_{n−1}(ρ)*α_τ − 𝒞_{n−1}(ρ)*α_τ, using 𝖽(𝒞_{n−1}(ρ)*α_ρ) = 𝒮_{n−1}(ρ)
    for n in 3..=4 {
        let t = tau(n);
        let top = IndexSymbol::alpha(&t);
        for i in 0..=n {
            let face = t.without_nth(i);
            let starred = star(&build_a(n, &face).unwrap(), std::slice::from_ref(&top)).unwrap();
            let mut lhs = FormalSum::zero();
            for j in 0..n {
                lhs.add(
                    &slice(&starred, j).unwrap(),
                    if j % 2 == 0 { 1 } else { -1 },
                );
            }
            let s = build_s(n - 1, &face).unwrap().expand_blocks();
            let mut rhs = star(&s, std::slice::from_ref(&top))
                .unwrap()
                .scaled(if n % 2 == 0 { 1 } else { -1 });
            rhs.add(
                &star(&build_c(n - 1, &face).unwrap(), std::slice::from_ref(&top)).unwrap(),
                -1,
            );
            assert_eq!(lhs, rhs, "n = {n}, i = {i}");
        }
    }
}

#[test]
fn slice_of_a2_star() {
    let t = tau(2);
    let top = IndexSymbol::alpha(&t);
    for i in 0..3 {
        let face = t.without_nth(i);
        let starred = star(&build_a(2, &face).unwrap(), std::slice::from_ref(&top)).unwrap();
        let mut want = concrete(&face);
        want.push(top.clone());
        assert_eq!(slice(&starred, 2).unwrap(), mk_e(want, 1).unwrap());
    }
}

fn random_phi(inst: &UInstance, seed: u64) -> UInstance {
    let mut r = rng(seed);
    let reg = inst.phi().registry().to_vec();
    let phi = random_family(&mut r, &reg, inst.n(), inst.phi().kstar(), 4, 3, 0.7).unwrap();
    inst.with_family(phi).unwrap()
}

fn certification1(inst: &UInstance) -> Vec<((usize, u32), i64)> {
    let a = |v: &[u64]| inst.alpha(&set(v)).unwrap() as usize;
    let terms: [(Vec<usize>, i64); 4] = [
        (vec![0, 1, 2], 1),
        (vec![1, 2, a(&[1, 2])], -1),
        (vec![0, 2, a(&[0, 2])], 1),
        (vec![0, 1, a(&[0, 1])], -1),
    ];
    let mut dom = inst.phi().meet_of(&[0, 1, 2]);
    for (t, _) in &terms {
        dom = limlab::families::meet([&dom, &inst.phi().meet_of(t)]).unwrap();
    }
    dom.points()
        .map(|p| {
            (
                p,
                terms
                    .iter()
                    .map(|(t, c)| c * common::defect_at(inst.phi(), t, p))
                    .sum(),
            )
        })
        .filter(|&(_, v)| v != 0)
        .collect()
}

#[test]
fn certification1_matches_evaluate() {
    let c2 = build_c(2, &tau(2)).unwrap();
    for seed in 0..20 {
        for inst in [
            gen_u_instance(2, 8, seed).unwrap(),
            gen_u_instance_with_epsilon(2, 8, seed).unwrap(),
        ] {
            assert!(certification1(&inst).is_empty());
            assert!(evaluate(&c2, &inst).unwrap().is_zero());
            let noisy = random_phi(&inst, seed + 1000);
            assert_eq!(
                evaluate(&c2, &noisy).unwrap().support().collect::<Vec<_>>(),
                certification1(&noisy)
            );
        }
    }
}

#[test]
fn main_identity_on_generated_instances() {
    for seed in 0..25 {
        for n in 2..=3 {
            let c = build_c(n, &tau(n)).unwrap();
            for inst in [
                gen_u_instance(n, 8, seed).unwrap(),
                gen_u_instance_with_epsilon(n, 8, seed).unwrap(),
            ] {
                assert!(inst.phi().registry().len() <= 12);
                let u = check_u(&inst).unwrap();
                assert!(u.holds, "seed {seed}, n {n}: {u:?}");
                assert!(evaluate(&c, &inst).unwrap().is_zero(), "seed {seed}, n {n}");
            }
        }
    }
}

#[test]
fn epsilon_instances_have_nonzero_terms() {
    let inst = gen_u_instance_with_epsilon(2, 8, 7).unwrap();
    let u = check_u(&inst).unwrap();
    assert!(!u.epsilon.unwrap().is_empty());
    let c2 = build_c(2, &tau(2)).unwrap();
    let nonzero = c2
        .terms()
        .iter()
        .filter(|(s, _)| {
            !evaluate(&mk_e((*s).clone(), 1).unwrap(), &inst)
                .unwrap()
                .is_zero()
        })
        .count();
    assert!(nonzero > 0);
}

#[test]
fn check_u_detects_uniformity_fault() {
    for n in 2..=3 {
        for seed in 0..10 {
            let inst = gen_u_instance(n, 8, seed).unwrap();
            let chain = &enumerate_chains(inst.tau(), n + 1).unwrap()[0];
            let mut tuple: Vec<usize> = chain.sets[..n]
                .iter()
                .map(|s| inst.alpha(s).unwrap() as usize)
                .collect();
            tuple.sort_unstable();
            let mut phi = inst.phi().clone();
            let mut g = phi.get(&tuple).unwrap();
            g.add_at((0, 0), 1).unwrap();
            phi.set(&tuple, g).unwrap();
            let bad = inst.with_family(phi).unwrap();
            let u = check_u(&bad).unwrap();
            assert!(!u.holds);
            assert!(
                matches!(u.failure, Some(UFailure::Uniformity { .. })),
                "{u:?}"
            );
        }
    }
}

#[test]
fn check_u_detects_monotonicity_fault() {
    let mut hits = 0;
    for seed in 0..20 {
        let inst = gen_u_instance(2, 8, seed).unwrap();
        let top = inst.alpha(inst.tau()).unwrap() as usize;
        let reg = inst.phi().registry().to_vec();
        let Some(col) = (0..8).find(|&i| (0..3).any(|e| reg[e].height(i) > 0)) else {
            continue;
        };
        let mut lowered = reg.clone();
        let mut h = lowered[top].values().to_vec();
        h[col] = 0;
        lowered[top] = TruncFn::new(h);
        let bad = inst
            .with_family(inst.phi().with_registry(lowered).unwrap())
            .unwrap();
        let u = check_u(&bad).unwrap();
        assert!(
            matches!(u.failure, Some(UFailure::Monotonicity { column, .. }) if column == col),
            "{u:?}"
        );
        hits += 1;
    }
    assert!(hits > 10);
}

#[test]
fn evaluate_rejects_bad_symbols() {
    let inst = gen_u_instance(2, 6, 0).unwrap();
    let far = mk_e(vec![IndexSymbol::Concrete(0), IndexSymbol::Concrete(99)], 1).unwrap();
    assert!(matches!(
        evaluate(&far, &inst),
        Err(ExprError::Unresolvable(_))
    ));
    let outside = mk_e(
        vec![IndexSymbol::Concrete(0), IndexSymbol::alpha(&set(&[0, 5]))],
        1,
    )
    .unwrap();
    assert!(matches!(
        evaluate(&outside, &inst),
        Err(ExprError::Unresolvable(_))
    ));
    let a01 = inst.alpha(&set(&[0, 1])).unwrap();
    let down = mk_e(
        vec![IndexSymbol::Concrete(a01), IndexSymbol::Concrete(1)],
        1,
    )
    .unwrap();
    assert!(matches!(
        evaluate(&down, &inst),
        Err(ExprError::NotIncreasing { .. })
    ));
}

#[test]
fn zero_family_evaluates_to_zero() {
    let inst = gen_u_instance(3, 8, 4).unwrap();
    let zero = inst.with_family(inst.phi().zero_like(3).unwrap()).unwrap();
    for l in [build_c(3, &tau(3)).unwrap(), build_s(3, &tau(3)).unwrap()] {
        assert!(evaluate(&l, &zero).unwrap().is_zero());
    }
}

#[test]
fn exact_instances_have_empty_epsilon() {
    let inst = gen_u_instance(2, 8, 11).unwrap();
    let u = check_u(&inst).unwrap();
    assert_eq!(u.epsilon, Some(vec![]));
    assert_eq!(u.long_strings, 6);
    assert!(cech_d(inst.phi()).is_zero());
}

fn chain_symbols(inst: &UInstance) -> Vec<IndexSymbol> {
    inst.assignment().keys().map(IndexSymbol::alpha).collect()
}

fn increasing_seq(inst: &UInstance, picks: &[usize], len: usize) -> Option<Seq> {
    let syms = chain_symbols(inst);
    let mut chosen: Vec<IndexSymbol> = picks
        .iter()
        .map(|&k| syms[k % syms.len()].clone())
        .collect();
    chosen.sort_by_key(|s| resolve(s, inst).unwrap());
    chosen.dedup_by_key(|s| resolve(s, inst).unwrap());
    (chosen.len() >= len).then(|| chosen[..len].to_vec())
}

fn sum_on(a: &GridFn, b: &GridFn, c: i64) -> GridFn {
    let dom = limlab::families::meet([a.domain(), b.domain()]).unwrap();
    let mut out = a.restrict(&dom);
    out.add_scaled(b, c);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn d_expand_evaluates_to_zero(seed in 0u64..500, picks in prop::collection::vec(0usize..64, 4..8)) {
        let inst = random_phi(&gen_u_instance(2, 6, seed).unwrap(), seed);
        if let Some(seq) = increasing_seq(&inst, &picks, 4) {
            let d = d_expand(&seq).unwrap();
            prop_assert!(evaluate(&d, &inst).unwrap().is_zero());
            let mut blk = FormalSum::zero();
            blk.add_block(seq, 3);
            prop_assert!(evaluate(&blk, &inst).unwrap().is_zero());
        }
    }

    #[test]
    fn evaluate_is_linear(seed in 0u64..500, p in prop::collection::vec(0usize..64, 4..7), q in prop::collection::vec(0usize..64, 4..7), c in -3i64..4) {
        let inst = random_phi(&gen_u_instance(3, 6, seed).unwrap(), seed);
        let (Some(s1), Some(s2)) = (increasing_seq(&inst, &p, 4), increasing_seq(&inst, &q, 4)) else { return Ok(()) };
        let l1 = mk_e(s1, 1).unwrap();
        let l2 = mk_e(s2, 2).unwrap();
        let mut both = l1.clone();
        both.add(&l2, c);
        let e1 = evaluate(&l1, &inst).unwrap();
        let e2 = evaluate(&l2, &inst).unwrap();
        let lhs = evaluate(&both, &inst).unwrap();
        let rhs = sum_on(&e1, &e2, c);
        let dom = limlab::families::meet([lhs.domain(), rhs.domain()]).unwrap();
        prop_assert_eq!(lhs.restrict(&dom), rhs.restrict(&dom));
        prop_assert_eq!(evaluate(&l1.scaled(c), &inst).unwrap(), e1.scaled(c));
    }

    #[test]
    fn uniform_instances_satisfy_identity(seed in 0u64..10_000, n in 2usize..4) {
        let inst = gen_u_instance_with_epsilon(n, 8, seed).unwrap();
        prop_assert!(check_u(&inst).unwrap().holds);
        prop_assert!(evaluate(&build_c(n, &tau(n)).unwrap(), &inst).unwrap().is_zero());
    }

    #[test]
    fn instance_json_round_trip(seed in 0u64..1000, n in 2usize..4) {
        let inst = gen_u_instance_with_epsilon(n, 6, seed).unwrap();
        let text = serde_json::to_string(&UInstanceFile::from_instance(&inst)).unwrap();
        let back: UInstanceFile = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.to_instance().unwrap(), inst);
    }
}
