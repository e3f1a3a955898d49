//! Independent oracles shared by integration tests and the acceptance suite.
#![allow(dead_code)]

use limlab::families::{Family, GridFn, Point, TruncFn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// All `k`-subsets of `items`, via bitmasks.
pub fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << items.len()) {
        if mask.count_ones() as usize == k {
            out.push(
                (0..items.len())
                    .filter(|b| mask & (1 << b) != 0)
                    .map(|b| items[b])
                    .collect(),
            );
        }
    }
    out
}

/// `φ_t(x)` recomputed from the stored value at the sorted tuple and the parity of the sort.
pub fn value(phi: &Family, t: &[usize], x: Point) -> i64 {
    let mut sorted = t.to_vec();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return 0;
    }
    let inversions = (0..t.len())
        .flat_map(|i| (i + 1..t.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| t[i] > t[j])
        .count();
    let sign = if inversions % 2 == 0 { 1 } else { -1 };
    sign * phi.get(&sorted).unwrap().get(x)
}

/// `Σ(−1)ⁱ φ_{tⁱ}(x)` straight from the definition.
pub fn defect_at(phi: &Family, t: &[usize], x: Point) -> i64 {
    (0..t.len())
        .map(|i| {
            let mut f = t.to_vec();
            f.remove(i);
            let s = if i % 2 == 0 { 1 } else { -1 };
            s * value(phi, &f, x)
        })
        .sum()
}

pub fn covering(phi: &Family, x: Point) -> Vec<usize> {
    (0..phi.registry().len())
        .filter(|&a| phi.registry()[a].contains(x))
        .collect()
}

fn all_points(phi: &Family) -> Vec<Point> {
    let n_cols = phi.n_cols();
    let mut pts = Vec::new();
    for i in 0..n_cols {
        let h = phi.registry().iter().map(|f| f.height(i)).max().unwrap();
        for j in 0..=h {
            pts.push((i, j));
        }
    }
    pts
}

/// Exhaustive search for `Ψ` with values in {−1,0,1}, supported in columns `< k*`.
/// The unknowns at different points never share an equation, so each point is searched on its own.
pub fn brute_force_finsup(phi: &Family, kstar: usize) -> bool {
    let n = phi.arity();
    for x in all_points(phi) {
        let cov = covering(phi, x);
        let eqs = subsets(&cov, n + 1);
        if x.0 >= kstar {
            if eqs.iter().any(|e| defect_at(phi, e, x) != 0) {
                return false;
            }
            continue;
        }
        let unknowns = subsets(&cov, n);
        let total = 3usize.pow(unknowns.len() as u32);
        let found = (0..total).any(|code| {
            let mut c = code;
            let vals: Vec<i64> = unknowns
                .iter()
                .map(|_| {
                    let v = (c % 3) as i64 - 1;
                    c /= 3;
                    v
                })
                .collect();
            eqs.iter().all(|e| {
                let psi_side: i64 = (0..e.len())
                    .map(|i| {
                        let mut f = e.clone();
                        f.remove(i);
                        let k = unknowns.iter().position(|u| *u == f).unwrap();
                        if i % 2 == 0 {
                            vals[k]
                        } else {
                            -vals[k]
                        }
                    })
                    .sum();
                psi_side == defect_at(phi, e, x)
            })
        });
        if !found {
            return false;
        }
    }
    true
}

/// The micro-grid with `N ≤ 2`.
pub fn micro_grid(samples: usize) -> Vec<(Family, usize)> {
    micro_grid_cols(2, samples)
}

/// Every registry shape of the micro-grid: arity 1–2, |F| ≤ 3, `N ≤ max_cols`,
/// heights in {0,1}, `k* ≤ min(N, 3)`. Families with at most 7 stored points are
/// enumerated exhaustively over {−1,0,1}; larger ones contribute `samples` seeded draws.
pub fn micro_grid_cols(max_cols: usize, samples: usize) -> Vec<(Family, usize)> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for n_cols in 1..=max_cols {
        let fns: Vec<TruncFn> = (0..(1u32 << n_cols))
            .map(|m| TruncFn::new((0..n_cols).map(|i| (m >> i) & 1).collect()))
            .collect();
        let idx: Vec<usize> = (0..fns.len()).collect();
        for n in 1..=2usize {
            for size in n + 1..=3 {
                for members in subsets(&idx, size) {
                    let registry: Vec<TruncFn> = members.iter().map(|&m| fns[m].clone()).collect();
                    for kstar in 0..=n_cols.min(3) {
                        let base = Family::new(registry.clone(), n, kstar).unwrap();
                        let slots: Vec<(Vec<usize>, Point)> = base
                            .increasing_tuples(n)
                            .flat_map(|t| {
                                let dom = base.meet_of(&t);
                                dom.points()
                                    .map(move |p| (t.clone(), p))
                                    .collect::<Vec<_>>()
                            })
                            .collect();
                        let build = |vals: &[i64]| {
                            let mut f = base.clone();
                            for ((t, p), &v) in slots.iter().zip(vals) {
                                f.add_value(t, *p, v).unwrap();
                            }
                            f
                        };
                        if slots.len() <= 7 {
                            for code in 0..3usize.pow(slots.len() as u32) {
                                let mut c = code;
                                let vals: Vec<i64> = slots
                                    .iter()
                                    .map(|_| {
                                        let v = (c % 3) as i64 - 1;
                                        c /= 3;
                                        v
                                    })
                                    .collect();
                                out.push((build(&vals), kstar));
                            }
                        } else {
                            for _ in 0..samples {
                                let vals: Vec<i64> =
                                    slots.iter().map(|_| rng.gen_range(-1..=1)).collect();
                                out.push((build(&vals), kstar));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Dense table of a grid function over its domain.
pub fn table(g: &GridFn) -> Vec<(Point, i64)> {
    g.domain().points().map(|p| (p, g.get(p))).collect()
}
