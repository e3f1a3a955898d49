//! Exact integer solving of `A·y = b` through a column Hermite normal form.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

/// `A·U = H` with `U` unimodular and `H` in column echelon form.
#[derive(Debug, Clone)]
pub struct HermiteSystem {
    rows: usize,
    cols: usize,
    h: Vec<Vec<BigInt>>,
    u: Vec<Vec<BigInt>>,
    pivot_rows: Vec<usize>,
}

/// Why `A·y = b` has no integral solution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Infeasibility {
    /// Row of `H·z = b` where forward substitution broke down.
    pub row: usize,
    /// `b[row]` minus the contribution of already-fixed variables.
    pub residual: String,
    /// Pivot entry of that row, or `None` if the row has no pivot.
    pub pivot: Option<String>,
    pub rank: usize,
}

impl HermiteSystem {
    /// Reduces an `rows × cols` matrix given row-major.
    pub fn new(matrix: &[Vec<i64>], cols: usize) -> Self {
        let rows = matrix.len();
        let mut h: Vec<Vec<BigInt>> = matrix
            .iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        let mut u: Vec<Vec<BigInt>> = (0..cols)
            .map(|i| {
                (0..cols)
                    .map(|j| {
                        if i == j {
                            BigInt::one()
                        } else {
                            BigInt::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        let mut pivot_rows = Vec::new();
        let mut rank = 0;
        for i in 0..rows {
            if rank == cols {
                break;
            }
            for c in rank + 1..cols {
                if h[i][c].is_zero() {
                    continue;
                }
                let a = h[i][rank].clone();
                let b = h[i][c].clone();
                let egcd = a.extended_gcd(&b);
                let (g, x, y) = (egcd.gcd, egcd.x, egcd.y);
                let (a_g, b_g) = (&a / &g, &b / &g);
                // [col_rank, col_c] ← [x·col_rank + y·col_c, −b/g·col_rank + a/g·col_c]
                combine_columns(&mut h, rank, c, &x, &y, &-&b_g, &a_g);
                combine_columns(&mut u, rank, c, &x, &y, &-&b_g, &a_g);
            }
            if !h[i][rank].is_zero() {
                if h[i][rank].is_negative() {
                    negate_column(&mut h, rank);
                    negate_column(&mut u, rank);
                }
                pivot_rows.push(i);
                rank += 1;
            }
        }
        HermiteSystem {
            rows,
            cols,
            h,
            u,
            pivot_rows,
        }
    }

    pub fn rank(&self) -> usize {
        self.pivot_rows.len()
    }

    /// Some integral `y` with `A·y = b`, or the first obstruction met.
    pub fn solve(&self, b: &[BigInt]) -> Result<Vec<BigInt>, Infeasibility> {
        assert_eq!(b.len(), self.rows, "right-hand side length");
        let rank = self.rank();
        let mut z = vec![BigInt::zero(); self.cols];
        let mut next_pivot = 0;
        for (i, bi) in b.iter().enumerate() {
            let fixed = next_pivot;
            let mut residual = bi.clone();
            for (c, zc) in z.iter().enumerate().take(fixed) {
                residual -= &self.h[i][c] * zc;
            }
            if next_pivot < rank && self.pivot_rows[next_pivot] == i {
                let pivot = &self.h[i][next_pivot];
                let (q, r) = residual.div_rem(pivot);
                if !r.is_zero() {
                    return Err(Infeasibility {
                        row: i,
                        residual: residual.to_string(),
                        pivot: Some(pivot.to_string()),
                        rank,
                    });
                }
                z[next_pivot] = q;
                next_pivot += 1;
            } else if !residual.is_zero() {
                return Err(Infeasibility {
                    row: i,
                    residual: residual.to_string(),
                    pivot: None,
                    rank,
                });
            }
        }
        Ok((0..self.cols)
            .map(|r| self.u[r].iter().zip(&z).map(|(a, b)| a * b).sum())
            .collect())
    }
}

fn combine_columns(
    m: &mut [Vec<BigInt>],
    p: usize,
    q: usize,
    a: &BigInt,
    b: &BigInt,
    c: &BigInt,
    d: &BigInt,
) {
    for row in m.iter_mut() {
        let (x, y) = (row[p].clone(), row[q].clone());
        row[p] = a * &x + b * &y;
        row[q] = c * &x + d * &y;
    }
}

fn negate_column(m: &mut [Vec<BigInt>], p: usize) {
    for row in m.iter_mut() {
        row[p] = -&row[p];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn apply(a: &[Vec<i64>], y: &[BigInt]) -> Vec<BigInt> {
        a.iter()
            .map(|r| r.iter().zip(y).map(|(&x, v)| BigInt::from(x) * v).sum())
            .collect()
    }

    #[test]
    fn solves_unimodular_system() {
        let a = vec![vec![2, 3], vec![1, 2]];
        let sys = HermiteSystem::new(&a, 2);
        let b = big(&[7, 4]);
        let y = sys.solve(&b).unwrap();
        assert_eq!(apply(&a, &y), b);
    }

    #[test]
    fn detects_non_divisibility() {
        let a = vec![vec![2, 4]];
        let sys = HermiteSystem::new(&a, 2);
        let err = sys.solve(&big(&[3])).unwrap_err();
        assert_eq!(err.pivot.as_deref(), Some("2"));
        assert!(sys.solve(&big(&[6])).is_ok());
    }

    #[test]
    fn detects_inconsistency() {
        let a = vec![vec![1, 1], vec![2, 2]];
        let sys = HermiteSystem::new(&a, 2);
        assert_eq!(sys.rank(), 1);
        let err = sys.solve(&big(&[1, 3])).unwrap_err();
        assert_eq!(err.row, 1);
        assert_eq!(err.pivot, None);
        let y = sys.solve(&big(&[1, 2])).unwrap();
        assert_eq!(apply(&a, &y), big(&[1, 2]));
    }

    #[test]
    fn empty_system() {
        let sys = HermiteSystem::new(&[], 3);
        assert_eq!(sys.solve(&[]).unwrap(), big(&[0, 0, 0]));
    }

    proptest::proptest! {
        #[test]
        fn image_vectors_are_solved(
            entries in proptest::collection::vec(-3i64..=3, 12),
            y0 in proptest::collection::vec(-5i64..=5, 4),
        ) {
            let a: Vec<Vec<i64>> = entries.chunks(4).map(|c| c.to_vec()).collect();
            let b = apply(&a, &big(&y0));
            let sys = HermiteSystem::new(&a, 4);
            let y = sys.solve(&b).unwrap();
            proptest::prop_assert_eq!(apply(&a, &y), b);
        }
    }
}
