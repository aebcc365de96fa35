//! Small exact linear algebra over the rationals and integers: just enough
//! for gram-matrix inversion, coset enumeration, positive-definiteness and
//! span computations. Everything is dense-small or sparse-row; no pivoting
//! heuristics are needed at these sizes.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::rational::Rational;

/// Gauss-Jordan inverse; `None` when singular.
pub fn mat_inverse(a: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let d = a.len();
    let mut m: Vec<Vec<Rational>> = a.to_vec();
    let mut inv: Vec<Vec<Rational>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { Rational::one() } else { Rational::zero() })
                .collect()
        })
        .collect();
    for col in 0..d {
        let pivot_row = (col..d).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let p = m[col][col].clone();
        for j in 0..d {
            m[col][j] /= &p;
            inv[col][j] /= &p;
        }
        for r in 0..d {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for j in 0..d {
                    let t = &f * &m[col][j];
                    m[r][j] -= &t;
                    let t = &f * &inv[col][j];
                    inv[r][j] -= &t;
                }
            }
        }
    }
    Some(inv)
}

/// Exact determinant by fraction-free-enough elimination over the rationals.
pub fn determinant(a: &[Vec<Rational>]) -> Rational {
    let d = a.len();
    let mut m: Vec<Vec<Rational>> = a.to_vec();
    let mut det = Rational::one();
    for col in 0..d {
        let Some(pivot_row) = (col..d).find(|&r| !m[r][col].is_zero()) else {
            return Rational::zero();
        };
        if pivot_row != col {
            m.swap(col, pivot_row);
            det = -det;
        }
        let p = m[col][col].clone();
        det *= &p;
        for r in (col + 1)..d {
            if !m[r][col].is_zero() {
                let f = &m[r][col] / &p;
                for j in col..d {
                    let t = &f * &m[col][j];
                    m[r][j] -= &t;
                }
            }
        }
    }
    det
}

/// Column-style Hermite form: returns `H` lower triangular with positive
/// diagonal such that the column lattices of `H` and `a` agree.
/// `None` when `a` is singular.
pub fn hermite_lower(a: &[Vec<BigInt>]) -> Option<Vec<Vec<BigInt>>> {
    let d = a.len();
    let mut h: Vec<Vec<BigInt>> = a.to_vec();
    let col_swap = |h: &mut Vec<Vec<BigInt>>, x: usize, y: usize| {
        for row in h.iter_mut() {
            row.swap(x, y);
        }
    };
    for i in 0..d {
        loop {
            let Some(j) = (i..d).find(|&j| !h[i][j].is_zero()) else {
                return None;
            };
            if j != i {
                col_swap(&mut h, i, j);
            }
            // eliminate the other entries in row i via Euclid on columns
            let mut done = true;
            for j in (i + 1)..d {
                if h[i][j].is_zero() {
                    continue;
                }
                let q = h[i][j].div_floor(&h[i][i]);
                for row in h.iter_mut() {
                    let t = &q * &row[i];
                    row[j] -= t;
                }
                if !h[i][j].is_zero() {
                    col_swap(&mut h, i, j);
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if h[i][i].is_negative() {
            for row in h.iter_mut() {
                row[i] = -row[i].clone();
            }
        }
    }
    Some(h)
}

/// LDL^T factorization data for a symmetric rational matrix:
/// `Q(x) = sum_i d[i] * (x_i + sum_{j>i} l[i][j] x_j)^2`.
pub struct Ldl {
    pub d: Vec<Rational>,
    pub l: Vec<Vec<Rational>>,
}

/// Symmetric elimination. `None` when a zero pivot appears (only possible for
/// singular or indefinite input at these sizes; callers treat it as failure).
pub fn ldl(a: &[Vec<Rational>]) -> Option<Ldl> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a.to_vec();
    let mut d = vec![Rational::zero(); n];
    let mut l = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        d[i] = m[i][i].clone();
        if d[i].is_zero() {
            return None;
        }
        for j in (i + 1)..n {
            l[i][j] = &m[i][j] / &d[i];
        }
        for j in (i + 1)..n {
            for k in j..n {
                let t = &(&d[i] * &l[i][j]) * &l[i][k];
                m[j][k] -= &t;
                if j != k {
                    let v = m[j][k].clone();
                    m[k][j] = v;
                }
            }
        }
    }
    Some(Ldl { d, l })
}

impl Ldl {
    pub fn positive_definite(&self) -> bool {
        self.d.iter().all(|p| !p.is_negative() && !p.is_zero())
    }
}

/// All integer vectors `g` such that `Q(shift + g) <= bound`, for `Q` the
/// quadratic form of a positive-definite LDL^T factorization.
pub fn enumerate_shifted(ldl: &Ldl, shift: &[Rational], bound: &Rational) -> Vec<Vec<i64>> {
    let n = ldl.d.len();
    let mut out = Vec::new();
    if bound.is_negative() {
        return out;
    }
    let mut y = vec![Rational::zero(); n];
    let mut g = vec![0i64; n];
    recurse(ldl, shift, bound, n, &mut y, &mut g, &mut out);
    out
}

fn recurse(
    ldl: &Ldl,
    shift: &[Rational],
    remaining: &Rational,
    level: usize,
    y: &mut Vec<Rational>,
    g: &mut Vec<i64>,
    out: &mut Vec<Vec<i64>>,
) {
    if level == 0 {
        out.push(g.clone());
        return;
    }
    let i = level - 1;
    // t = y_i + sum_{j>i} l[i][j] y_j must satisfy d_i t^2 <= remaining
    let mut c = Rational::zero();
    for j in level..ldl.d.len() {
        c += &(&ldl.l[i][j] * &y[j]);
    }
    // y_i = shift_i + g_i, so (g_i + b)^2 <= r with b = shift_i + c
    let b = &shift[i] + &c;
    let r = remaining / &ldl.d[i];
    // integer range for g_i: |g_i q + p| <= isqrt(floor(q^2 r))
    let q = b.denom().clone();
    let p = b.numer().clone();
    let scaled = {
        let q2 = &q * &q;
        let num = r.numer() * &q2;
        num.div_floor(r.denom())
    };
    if scaled.is_negative() {
        return;
    }
    let m = scaled.sqrt();
    let lo = (-&m - &p).div_ceil(&q);
    let hi = (&m - &p).div_floor(&q);
    let (lo, hi) = (
        i64::try_from(&lo).expect("coset bound overflow"),
        i64::try_from(&hi).expect("coset bound overflow"),
    );
    for gi in lo..=hi {
        let yi = &shift[i] + &Rational::from(gi);
        let t = &yi + &c;
        let used = &(&t * &t) * &ldl.d[i];
        let rem = remaining - &used;
        if rem.is_negative() {
            continue;
        }
        y[i] = yi;
        g[i] = gi;
        recurse(ldl, shift, &rem, i, y, g, out);
    }
    y[i] = Rational::zero();
    g[i] = 0;
}

/// A set of sparse rows kept in reduced row echelon form with respect to a
/// fixed column order; supports rank queries and remainder reduction.
#[derive(Clone, Debug, Default)]
pub struct Rref {
    rows: Vec<BTreeMap<usize, Rational>>,
    /// pivot column -> row index
    pivots: BTreeMap<usize, usize>,
}

impl Rref {
    pub fn new() -> Self {
        Rref::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivot_cols(&self) -> impl Iterator<Item = usize> + '_ {
        self.pivots.keys().copied()
    }

    pub fn is_pivot(&self, col: usize) -> bool {
        self.pivots.contains_key(&col)
    }

    /// Remainder of `v` after eliminating all pivot columns.
    pub fn reduce(&self, v: &BTreeMap<usize, Rational>) -> BTreeMap<usize, Rational> {
        let mut v = v.clone();
        loop {
            let Some((&col, coeff)) = v.iter().find(|(c, _)| self.pivots.contains_key(c)) else {
                return v;
            };
            let coeff = coeff.clone();
            let row = &self.rows[self.pivots[&col]];
            sub_scaled(&mut v, row, &coeff);
        }
    }

    /// Reduces and inserts; returns true when the rank grew.
    pub fn insert(&mut self, v: BTreeMap<usize, Rational>) -> bool {
        let mut v = self.reduce(&v);
        let Some((&pivot, lead)) = v.iter().next() else {
            return false;
        };
        let lead = lead.clone();
        for c in v.values_mut() {
            *c /= &lead;
        }
        // keep the existing rows fully reduced against the new pivot
        for row in self.rows.iter_mut() {
            if let Some(c) = row.get(&pivot).cloned() {
                sub_scaled(row, &v, &c);
            }
        }
        self.rows.push(v);
        self.pivots.insert(pivot, self.rows.len() - 1);
        true
    }

    pub fn contains(&self, v: &BTreeMap<usize, Rational>) -> bool {
        self.reduce(v).is_empty()
    }
}

fn sub_scaled(
    target: &mut BTreeMap<usize, Rational>,
    row: &BTreeMap<usize, Rational>,
    factor: &Rational,
) {
    for (c, rc) in row {
        let delta = rc * factor;
        match target.entry(*c) {
            std::collections::btree_map::Entry::Vacant(e) => {
                if !delta.is_zero() {
                    e.insert(-delta);
                }
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() -= &delta;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn rmat(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter()
            .map(|r| r.iter().map(|&x| Rational::from(x)).collect())
            .collect()
    }

    #[test]
    fn inverse_and_determinant() {
        let a = rmat(&[&[2, 1], &[1, 2]]);
        assert_eq!(determinant(&a), Rational::from(3));
        let inv = mat_inverse(&a).unwrap();
        assert_eq!(inv[0][0], rat(2, 3));
        assert_eq!(inv[0][1], rat(-1, 3));
        let single = rmat(&[&[1, 2], &[2, 4]]);
        assert!(mat_inverse(&single).is_none());
        assert_eq!(determinant(&single), Rational::zero());
    }

    #[test]
    fn hermite_of_a1() {
        let a = vec![vec![BigInt::from(2)]];
        let h = hermite_lower(&a).unwrap();
        assert_eq!(h[0][0], BigInt::from(2));
    }

    #[test]
    fn ldl_positive_definite() {
        let a = rmat(&[&[2, -1], &[-1, 2]]);
        let f = ldl(&a).unwrap();
        assert!(f.positive_definite());
        let hyper = rmat(&[&[0, 1], &[1, 0]]);
        // zero pivot: not usable as positive definite
        assert!(ldl(&hyper).is_none());
        let indef = rmat(&[&[2, 0], &[0, -2]]);
        let f = ldl(&indef).unwrap();
        assert!(!f.positive_definite());
    }

    #[test]
    fn shifted_enumeration_counts_a1_shell() {
        // A1 gram (2): vectors with norm <= 8 are -2..2 times alpha
        let a = rmat(&[&[2]]);
        let f = ldl(&a).unwrap();
        let pts = enumerate_shifted(&f, &[Rational::zero()], &Rational::from(8));
        let mut xs: Vec<i64> = pts.into_iter().map(|v| v[0]).collect();
        xs.sort();
        assert_eq!(xs, vec![-2, -1, 0, 1, 2]);
        // shifted by 1/2: norm of (g+1/2) alpha is 2(g+1/2)^2 <= 1/2 gives g in {-1, 0}
        let pts = enumerate_shifted(&f, &[rat(1, 2)], &rat(1, 2));
        let mut xs: Vec<i64> = pts.into_iter().map(|v| v[0]).collect();
        xs.sort();
        assert_eq!(xs, vec![-1, 0]);
    }

    #[test]
    fn rref_rank_and_reduce() {
        let mut r = Rref::new();
        let v1: BTreeMap<usize, Rational> =
            [(0, Rational::from(1)), (2, Rational::from(2))].into();
        let v2: BTreeMap<usize, Rational> =
            [(0, Rational::from(2)), (2, Rational::from(4))].into();
        let v3: BTreeMap<usize, Rational> = [(1, Rational::from(1))].into();
        assert!(r.insert(v1.clone()));
        assert!(!r.insert(v2));
        assert!(r.insert(v3));
        assert_eq!(r.rank(), 2);
        assert!(r.contains(&v1));
        let w: BTreeMap<usize, Rational> =
            [(0, Rational::from(1)), (1, Rational::from(1)), (3, Rational::from(1))].into();
        let rem = r.reduce(&w);
        assert!(rem.contains_key(&3));
        assert!(!rem.contains_key(&0));
        assert!(!rem.contains_key(&1));
    }
}
