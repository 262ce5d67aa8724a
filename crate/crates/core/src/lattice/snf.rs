//! Smith normal form over the integers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::matrix::{int_identity, IntMatrix};

/// `m = u * d * v` with `u`, `v` unimodular and `d` diagonal,
/// `d[i][i]` dividing `d[i+1][i+1]`. The inverses are tracked alongside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithForm {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
    pub u_inv: IntMatrix,
    pub v_inv: IntMatrix,
}

impl SmithForm {
    /// Nonzero diagonal entries (the invariant factors), all positive.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        let k = self.d.len().min(self.d.first().map_or(0, Vec::len));
        (0..k).map(|i| self.d[i][i].clone()).filter(|x| !x.is_zero()).collect()
    }
}

struct Reducer {
    d: IntMatrix,
    u: IntMatrix,
    u_inv: IntMatrix,
    v: IntMatrix,
    v_inv: IntMatrix,
    rows: usize,
    cols: usize,
}

impl Reducer {
    // row_i += q * row_j
    fn add_row(&mut self, i: usize, j: usize, q: &BigInt) {
        for c in 0..self.cols {
            let t = q * &self.d[j][c];
            self.d[i][c] += t;
        }
        for c in 0..self.rows {
            let t = q * &self.u_inv[j][c];
            self.u_inv[i][c] += t;
        }
        for r in 0..self.rows {
            let t = q * &self.u[r][i];
            self.u[r][j] -= t;
        }
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        self.d.swap(i, j);
        self.u_inv.swap(i, j);
        for row in self.u.iter_mut() {
            row.swap(i, j);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for x in self.d[i].iter_mut().chain(self.u_inv[i].iter_mut()) {
            *x = -x.clone();
        }
        for row in self.u.iter_mut() {
            row[i] = -row[i].clone();
        }
    }

    // col_i += q * col_j
    fn add_col(&mut self, i: usize, j: usize, q: &BigInt) {
        for r in 0..self.rows {
            let t = q * &self.d[r][j];
            self.d[r][i] += t;
        }
        for r in 0..self.cols {
            let t = q * &self.v_inv[r][j];
            self.v_inv[r][i] += t;
        }
        for c in 0..self.cols {
            let t = q * &self.v[i][c];
            self.v[j][c] -= t;
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for row in self.d.iter_mut().chain(self.v_inv.iter_mut()) {
            row.swap(i, j);
        }
        self.v.swap(i, j);
    }

    fn smallest_in_block(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for r in t..self.rows {
            for c in t..self.cols {
                if self.d[r][c].is_zero() {
                    continue;
                }
                if best.map_or(true, |(br, bc)| self.d[r][c].abs() < self.d[br][bc].abs()) {
                    best = Some((r, c));
                }
            }
        }
        best
    }

    fn run(&mut self) {
        let diag = self.rows.min(self.cols);
        for t in 0..diag {
            loop {
                let Some((r, c)) = self.smallest_in_block(t) else {
                    return;
                };
                self.swap_rows(t, r);
                self.swap_cols(t, c);
                let mut clean = true;
                for i in t + 1..self.rows {
                    if self.d[i][t].is_zero() {
                        continue;
                    }
                    let q = -self.d[i][t].div_floor(&self.d[t][t]);
                    self.add_row(i, t, &q);
                    clean &= self.d[i][t].is_zero();
                }
                for j in t + 1..self.cols {
                    if self.d[t][j].is_zero() {
                        continue;
                    }
                    let q = -self.d[t][j].div_floor(&self.d[t][t]);
                    self.add_col(j, t, &q);
                    clean &= self.d[t][j].is_zero();
                }
                if !clean {
                    continue;
                }
                // Divisibility: pull an offending row into row t and retry.
                let pivot = self.d[t][t].clone();
                let offender = (t + 1..self.rows)
                    .find(|&i| (t + 1..self.cols).any(|j| !self.d[i][j].is_multiple_of(&pivot)));
                match offender {
                    Some(i) => self.add_row(t, i, &BigInt::from(1)),
                    None => break,
                }
            }
            if self.d[t][t].is_negative() {
                self.negate_row(t);
            }
        }
    }
}

pub fn smith_normal_form(m: &IntMatrix) -> SmithForm {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut red = Reducer {
        d: m.clone(),
        u: int_identity(rows),
        u_inv: int_identity(rows),
        v: int_identity(cols),
        v_inv: int_identity(cols),
        rows,
        cols,
    };
    red.run();
    SmithForm { u: red.u, d: red.d, v: red.v, u_inv: red.u_inv, v_inv: red.v_inv }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::matrix::{int_det, int_mul};

    fn ints(rows: &[&[i64]]) -> IntMatrix {
        rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    fn check(m: &IntMatrix) -> SmithForm {
        let s = smith_normal_form(m);
        assert_eq!(&int_mul(&int_mul(&s.u, &s.d), &s.v), m);
        assert_eq!(int_mul(&s.u, &s.u_inv), int_identity(m.len()));
        assert_eq!(int_mul(&s.v, &s.v_inv), int_identity(m[0].len()));
        assert_eq!(int_det(&s.u).abs(), BigInt::from(1));
        assert_eq!(int_det(&s.v).abs(), BigInt::from(1));
        s
    }

    #[test]
    fn identity_is_fixed() {
        let s = check(&ints(&[&[1, 0], &[0, 1]]));
        assert_eq!(s.d, ints(&[&[1, 0], &[0, 1]]));
        assert_eq!(s.u, int_identity(2));
        assert_eq!(s.v, int_identity(2));
    }

    #[test]
    fn divisibility_chain_for_diag_2_3() {
        let s = check(&ints(&[&[2, 0], &[0, 3]]));
        assert_eq!(s.d, ints(&[&[1, 0], &[0, 6]]));
    }

    #[test]
    fn one_by_one() {
        assert_eq!(check(&ints(&[&[2]])).d, ints(&[&[2]]));
        assert_eq!(check(&ints(&[&[-5]])).d, ints(&[&[5]]));
    }

    #[test]
    fn rectangular_and_rank_deficient() {
        let s = check(&ints(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]]));
        assert_eq!(s.invariant_factors(), vec![BigInt::from(2), BigInt::from(6), BigInt::from(12)]);
        let s = check(&ints(&[&[1, 2, 3], &[2, 4, 6]]));
        assert_eq!(s.invariant_factors(), vec![BigInt::from(1)]);
        check(&ints(&[&[0, 0], &[0, 0], &[3, 9]]));
    }
}
