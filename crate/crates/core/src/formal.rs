//! Formal-calculus primitives: generalized binomial coefficients, windowed
//! expansions of `(x - y)^n`, and the delta-function relation check.
//!
//! Infinite formal series never exist as free-standing objects here. Every
//! series is materialized only on a finite exponent window, with fractional
//! exponents represented as an integer part plus a per-variable sector offset.

use std::collections::BTreeMap;
use std::fmt;

use crate::rational::Rational;

/// Binomial coefficient `(s choose m)` with rational upper argument:
/// `s (s-1) ... (s-m+1) / m!`. By convention `(s choose 0) = 1`.
pub fn binom(s: &Rational, m: u64) -> Rational {
    let mut num = Rational::one();
    let mut den = Rational::one();
    for t in 0..m {
        num *= &(s - &Rational::from(t as i64));
        den *= &Rational::from((t + 1) as i64);
    }
    num / den
}

/// The three formal variables of the Jacobi identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    Z0,
    Z1,
    Z2,
}

impl Var {
    pub fn index(self) -> usize {
        match self {
            Var::Z0 => 0,
            Var::Z1 => 1,
            Var::Z2 => 2,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Z0 => write!(f, "z0"),
            Var::Z1 => write!(f, "z1"),
            Var::Z2 => write!(f, "z2"),
        }
    }
}

/// Per-variable inclusive integer exponent bounds for `z0, z1, z2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExponentWindow {
    pub lo: [i64; 3],
    pub hi: [i64; 3],
}

impl ExponentWindow {
    pub fn new(lo: [i64; 3], hi: [i64; 3]) -> Self {
        for v in 0..3 {
            assert!(lo[v] <= hi[v], "window bounds out of order for variable {v}");
        }
        ExponentWindow { lo, hi }
    }

    /// Symmetric window `[-b, b]` on each of the three variables.
    pub fn cube(b: i64) -> Self {
        ExponentWindow::new([-b; 3], [b; 3])
    }

    pub fn contains(&self, e: &[i64; 3]) -> bool {
        (0..3).all(|v| self.lo[v] <= e[v] && e[v] <= self.hi[v])
    }
}

/// A formal series truncated to a window: a finite map from integer exponent
/// triples to rational coefficients, plus a fractional sector offset per
/// variable. The true exponent of variable `v` in a stored triple `e` is
/// `sector[v] + e[v]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedSeries {
    coeffs: BTreeMap<[i64; 3], Rational>,
    pub window: ExponentWindow,
    pub sector: [Rational; 3],
    /// Which variable the expansion convention treats as "second" (expanded
    /// in nonnegative powers).
    pub second: Var,
}

impl TruncatedSeries {
    pub fn zero(window: ExponentWindow, second: Var) -> Self {
        TruncatedSeries {
            coeffs: BTreeMap::new(),
            window,
            sector: [Rational::zero(), Rational::zero(), Rational::zero()],
            second,
        }
    }

    pub fn insert_add(&mut self, e: [i64; 3], c: Rational) {
        if c.is_zero() || !self.window.contains(&e) {
            return;
        }
        let entry = self.coeffs.entry(e).or_insert_with(Rational::zero);
        *entry += &c;
        if entry.is_zero() {
            self.coeffs.remove(&e);
        }
    }

    pub fn coeff(&self, e: &[i64; 3]) -> Rational {
        self.coeffs.get(e).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64; 3], &Rational)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &TruncatedSeries) -> TruncatedSeries {
        assert_eq!(self.sector, other.sector, "sector mismatch in series sum");
        let mut out = self.clone();
        for (e, c) in other.iter() {
            out.insert_add(*e, c.clone());
        }
        out
    }

    /// Convolution product restricted to `out_window`. Exact only where every
    /// contributing exponent pair of the untruncated factors lies inside the
    /// operands' windows; callers pick windows with enough margin.
    pub fn mul(&self, other: &TruncatedSeries, out_window: ExponentWindow) -> TruncatedSeries {
        let mut out = TruncatedSeries::zero(out_window, self.second);
        for v in 0..3 {
            out.sector[v] = &self.sector[v] + &other.sector[v];
        }
        for (ea, ca) in self.iter() {
            for (eb, cb) in other.iter() {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                out.insert_add(e, ca * cb);
            }
        }
        out
    }

    /// First exponent triple (in lexicographic order) where the two series
    /// differ, together with the two coefficients.
    pub fn first_difference(&self, other: &TruncatedSeries) -> Option<([i64; 3], Rational, Rational)> {
        if self.sector != other.sector {
            return Some(([0, 0, 0], Rational::zero(), Rational::zero()));
        }
        let keys: std::collections::BTreeSet<_> =
            self.coeffs.keys().chain(other.coeffs.keys()).collect();
        for e in keys {
            let a = self.coeff(e);
            let b = other.coeff(e);
            if a != b {
                return Some((*e, a, b));
            }
        }
        None
    }
}

/// Coefficients of `(x - y)^n` expanded in nonnegative integral powers of the
/// second variable `y`, restricted to `window`. For `n >= 0` this is the
/// finite polynomial; for `n < 0` the one-sided series
/// `sum_{k>=0} (n choose k) (-1)^k x^{n-k} y^k`.
pub fn expand_power(n: i64, x: Var, y: Var, window: ExponentWindow) -> TruncatedSeries {
    expand_power_signed(n, 1, x, -1, y, window)
}

/// Coefficients of `(sx*x + sy*y)^n` (signs `sx, sy` in `{1, -1}`) expanded in
/// nonnegative integral powers of `y`.
pub fn expand_power_signed(
    n: i64,
    sx: i64,
    x: Var,
    sy: i64,
    y: Var,
    window: ExponentWindow,
) -> TruncatedSeries {
    assert!(sx == 1 || sx == -1);
    assert!(sy == 1 || sy == -1);
    let mut out = TruncatedSeries::zero(window, y);
    let xk = x.index();
    let yk = y.index();
    let k_hi = window.hi[yk].min(if n >= 0 { n } else { i64::MAX });
    for k in 0..=k_hi.max(-1) {
        // exponents: x^(n-k) y^k
        let mut e = [0i64; 3];
        e[xk] = n - k;
        e[yk] = k;
        if !window.contains(&e) {
            continue;
        }
        // sign: sx^(n-k) * sy^k
        let mut c = binom(&Rational::from(n), k as u64);
        if sx == -1 && (n - k).rem_euclid(2) == 1 {
            c = -c;
        }
        if sy == -1 && k.rem_euclid(2) == 1 {
            c = -c;
        }
        out.insert_add(e, c);
    }
    out
}

/// Failure report for [`delta_relation_check`]: the first exponent triple
/// where the two delta-function expressions disagree.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("delta relation fails at exponents {exponents:?}: lhs {lhs}, rhs {rhs}")]
pub struct DeltaRelationError {
    pub exponents: [i64; 3],
    pub lhs: Rational,
    pub rhs: Rational,
}

/// Checks coefficientwise, on `window`, the delta-function relation
///
/// `z1^-1 ((z2+z0)/z1)^(j/r) delta((z2+z0)/z1)
///    = z2^-1 ((z1-z0)/z2)^(-j/r) delta((z1-z0)/z2)`.
///
/// Both sides live in the sector `z1^(-j/r) z2^(j/r)` relative to integer
/// exponents; for `j = 0` they are plain integer-exponent series.
pub fn delta_relation_check(j: u32, r: u32, window: ExponentWindow) -> Result<(), DeltaRelationError> {
    assert!(r > 0 && j < r, "need 0 <= j < r");
    let frac = Rational::new(j as i64, r as i64);

    let sector = [Rational::zero(), -&frac, frac.clone()];
    let mut lhs = TruncatedSeries::zero(window, Var::Z0);
    lhs.sector = sector.clone();
    let mut rhs = TruncatedSeries::zero(window, Var::Z0);
    rhs.sector = sector;

    // LHS: sum over n of (z2 + z0)^(n + j/r) z1^(-n-1-j/r), the binomial
    // expanded in nonnegative powers of z0. Stored integer exponents:
    // z0^k z1^(-n-1) z2^(n-k).
    for n in (-window.hi[1] - 1)..=(-window.lo[1] - 1) {
        let e1 = -n - 1;
        let upper = &Rational::from(n) + &frac;
        for k in 0.max(n - window.hi[2])..=window.hi[0].min(n - window.lo[2]) {
            if k < 0 {
                continue;
            }
            let e = [k, e1, n - k];
            if window.contains(&e) {
                lhs.insert_add(e, binom(&upper, k as u64));
            }
        }
    }

    // RHS: sum over n of (z1 - z0)^(n - j/r) z2^(-n-1+j/r), expanded in
    // nonnegative powers of z0. Stored integer exponents:
    // z0^k z1^(n-k) z2^(-n-1).
    for n in (-window.hi[2] - 1)..=(-window.lo[2] - 1) {
        let e2 = -n - 1;
        let upper = &Rational::from(n) - &frac;
        for k in 0.max(n - window.hi[1])..=window.hi[0].min(n - window.lo[1]) {
            if k < 0 {
                continue;
            }
            let e = [k, n - k, e2];
            if window.contains(&e) {
                let mut c = binom(&upper, k as u64);
                if k % 2 == 1 {
                    c = -c;
                }
                rhs.insert_add(e, c);
            }
        }
    }

    match lhs.first_difference(&rhs) {
        None => Ok(()),
        Some((e, a, b)) => Err(DeltaRelationError {
            exponents: e,
            lhs: a,
            rhs: b,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn binom_values() {
        assert_eq!(binom(&Rational::from(2), 1), Rational::from(2));
        // falling factorial (-1)(-2)(-3)/6
        assert_eq!(binom(&Rational::from(-1), 3), Rational::from(-1));
        // (1/2)(-1/2)/2
        assert_eq!(binom(&rat(1, 2), 2), rat(-1, 8));
        assert_eq!(binom(&rat(7, 3), 0), Rational::one());
        assert_eq!(binom(&Rational::from(3), 5), Rational::zero());
    }

    #[test]
    fn binom_pascal() {
        // (s choose m) = (s-1 choose m) + (s-1 choose m-1) for rational s
        for (p, q) in [(1i64, 2i64), (-3, 1), (7, 5), (0, 1), (-11, 4)] {
            let s = rat(p, q);
            let s1 = &s - &Rational::one();
            for m in 1..8u64 {
                assert_eq!(binom(&s, m), &binom(&s1, m) + &binom(&s1, m - 1));
            }
        }
    }

    #[test]
    fn expand_square() {
        let w = ExponentWindow::new([0, 0, 0], [0, 4, 4]);
        let s = expand_power(2, Var::Z1, Var::Z2, w);
        assert_eq!(s.coeff(&[0, 2, 0]), Rational::one());
        assert_eq!(s.coeff(&[0, 1, 1]), Rational::from(-2));
        assert_eq!(s.coeff(&[0, 0, 2]), Rational::one());
        assert_eq!(s.iter().count(), 3);
    }

    #[test]
    fn expand_geometric() {
        // (x - y)^-1 has coefficient 1 at x^(-1-k) y^k for all k >= 0
        let w = ExponentWindow::new([0, -8, 0], [0, 0, 6]);
        let s = expand_power(-1, Var::Z1, Var::Z2, w);
        for k in 0..=6 {
            assert_eq!(s.coeff(&[0, -1 - k, k]), Rational::one());
        }
    }

    #[test]
    fn expansions_sum_to_delta() {
        // (x-y)^-1 expanded in y, plus (y-x)^-1 expanded in x, is the delta
        // distribution sum_m x^(-m-1) y^m.
        let w = ExponentWindow::new([0, -5, -5], [0, 5, 5]);
        let a = expand_power(-1, Var::Z1, Var::Z2, w);
        let b = expand_power(-1, Var::Z2, Var::Z1, w);
        let sum = a.add(&b);
        for e1 in -5..=5i64 {
            for e2 in -5..=5i64 {
                let expected = if e1 + e2 == -1 {
                    Rational::one()
                } else {
                    Rational::zero()
                };
                assert_eq!(sum.coeff(&[0, e1, e2]), expected, "at ({e1},{e2})");
            }
        }
        // and (-y+x)^-1 is the negative of (y-x)^-1
        let c = expand_power_signed(-1, -1, Var::Z2, 1, Var::Z1, w);
        for (e, coeff) in b.iter() {
            assert_eq!(c.coeff(e), -coeff.clone());
        }
    }

    #[test]
    fn expand_product_is_one_on_interior() {
        // expand_power(n) * expand_power(-n) = 1 where fully determined.
        let big = ExponentWindow::new([0, -40, 0], [0, 40, 24]);
        for n in [-3i64, -1, 2, 4] {
            let a = expand_power(n, Var::Z1, Var::Z2, big);
            let b = expand_power(-n, Var::Z1, Var::Z2, big);
            // Contributions to y-degree k all have factors of y-degree <= k,
            // so degrees up to 12 are fully determined by the big windows.
            let interior = ExponentWindow::new([0, -24, 0], [0, 24, 12]);
            let prod = a.mul(&b, interior);
            for (e, c) in prod.iter() {
                let expected = if *e == [0, 0, 0] {
                    Rational::one()
                } else {
                    Rational::zero()
                };
                assert_eq!(*c, expected, "n={n} exponent {e:?}");
            }
            assert_eq!(prod.coeff(&[0, 0, 0]), Rational::one(), "n={n}");
        }
    }

    #[test]
    fn delta_relation_integer_sector() {
        assert_eq!(delta_relation_check(0, 1, ExponentWindow::cube(3)), Ok(()));
    }

    #[test]
    fn delta_relation_half_sector() {
        assert_eq!(delta_relation_check(1, 2, ExponentWindow::cube(3)), Ok(()));
        assert_eq!(delta_relation_check(1, 3, ExponentWindow::cube(3)), Ok(()));
        assert_eq!(delta_relation_check(2, 3, ExponentWindow::cube(4)), Ok(()));
    }

    #[test]
    fn delta_relation_single_point_window() {
        let w = ExponentWindow::new([0, -1, 0], [0, -1, 0]);
        assert_eq!(delta_relation_check(0, 1, w), Ok(()));
    }
}
