//! Sparse states: finite rational linear combinations of basis monomials.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::Hash;

use crate::rational::Rational;

/// A canonical basis element of one of the constructions. Each implementor
/// prints itself in the state expression mini-language (ending in `|0>`).
pub trait BasisMonomial: Clone + Ord + Eq + Hash + fmt::Debug + fmt::Display {}

impl<T: Clone + Ord + Eq + Hash + fmt::Debug + fmt::Display> BasisMonomial for T {}

/// A finite linear combination of basis monomials with nonzero rational
/// coefficients. No zero coefficient is ever stored.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct State<M: BasisMonomial> {
    terms: BTreeMap<M, Rational>,
}

impl<M: BasisMonomial> State<M> {
    pub fn zero() -> Self {
        State {
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(m: M) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(m, Rational::one());
        State { terms }
    }

    pub fn scaled_monomial(m: M, c: Rational) -> Self {
        let mut s = State::zero();
        s.insert_add(m, c);
        s
    }

    pub fn from_terms<I: IntoIterator<Item = (M, Rational)>>(iter: I) -> Self {
        let mut s = State::zero();
        for (m, c) in iter {
            s.insert_add(m, c);
        }
        s
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &M) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&M, &Rational)> {
        self.terms.iter()
    }

    pub fn insert_add(&mut self, m: M, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += &c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &State<M>, c: &Rational) {
        if c.is_zero() {
            return;
        }
        for (m, v) in other.iter() {
            self.insert_add(m.clone(), v * c);
        }
    }

    pub fn add(&self, other: &State<M>) -> State<M> {
        let mut out = self.clone();
        out.add_scaled(other, &Rational::one());
        out
    }

    pub fn sub(&self, other: &State<M>) -> State<M> {
        let mut out = self.clone();
        out.add_scaled(other, &Rational::from(-1));
        out
    }

    pub fn scale(&self, c: &Rational) -> State<M> {
        if c.is_zero() {
            return State::zero();
        }
        State {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn monomials(&self) -> impl Iterator<Item = &M> {
        self.terms.keys()
    }
}

impl<M: BasisMonomial> fmt::Display for State<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if !mag.is_one() {
                write!(f, "{mag} * ")?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn zero_coefficients_are_pruned() {
        let mut s: State<u32> = State::zero();
        s.insert_add(7, rat(1, 2));
        s.insert_add(7, rat(-1, 2));
        assert!(s.is_zero());
        s.insert_add(3, rat(2, 3));
        let t = s.sub(&s.clone());
        assert!(t.is_zero());
    }

    #[test]
    fn linear_ops() {
        let a = State::from_terms([(1u32, rat(1, 2)), (2, Rational::from(3))]);
        let b = State::from_terms([(1u32, rat(1, 2)), (3, Rational::from(-1))]);
        let sum = a.add(&b);
        assert_eq!(sum.coeff(&1), Rational::one());
        assert_eq!(sum.coeff(&2), Rational::from(3));
        assert_eq!(sum.coeff(&3), Rational::from(-1));
        assert_eq!(a.scale(&Rational::zero()), State::zero());
    }
}
