//! The associative algebra attached to a graded algebra context and a finite
//! order diagonal automorphism: the star product, the subspace spanned by
//! circle products, weight-truncated quotients with exact structure
//! constants, and the top-level representation map.
//!
//! Truncated quotient dimensions are upper bounds: the relation subspace is
//! approximated from below by circle products of basis pairs fitting under
//! the cap, and reported together with a stabilization flag.

use std::collections::BTreeMap;

use crate::context::{Role, VoaContext, VoaError};
use crate::eval::Evaluator;
use crate::formal::binom;
use crate::linalg::Rref;
use crate::rational::Rational;
use crate::state::{BasisMonomial, State};

/// A finite-order automorphism acting diagonally on the canonical basis:
/// the monomial `m` lies in the eigenspace with exponent `exponent(m)`.
pub struct AutomorphismSpec<M> {
    pub order: u32,
    exponent: fn(&M) -> u32,
}

impl<M> AutomorphismSpec<M> {
    pub fn new(order: u32, exponent: fn(&M) -> u32) -> Self {
        assert!(order > 0);
        AutomorphismSpec { order, exponent }
    }

    pub fn identity() -> Self {
        AutomorphismSpec {
            order: 1,
            exponent: |_| 0,
        }
    }

    pub fn exponent(&self, m: &M) -> u32 {
        (self.exponent)(m) % self.order
    }
}

/// The lift of `-1` on the free boson: sign by parity of the factor count.
pub fn heisenberg_minus_one() -> AutomorphismSpec<crate::heisenberg::FockMonomial> {
    AutomorphismSpec::new(2, |m| (m.factors().len() % 2) as u32)
}

/// The automorphism must fix the vacuum and the conformal vector.
pub fn validate_automorphism<C: VoaContext>(
    ctx: &C,
    aut: &AutomorphismSpec<C::Monomial>,
) -> Result<(), VoaError> {
    if aut.exponent(&ctx.vacuum_monomial()) != 0 {
        return Err(VoaError::InvalidSpec("automorphism must fix the vacuum".into()));
    }
    for (m, _) in ctx.omega().iter() {
        if aut.exponent(m) != 0 {
            return Err(VoaError::InvalidSpec(
                "automorphism must fix the conformal vector".into(),
            ));
        }
    }
    Ok(())
}

/// Splits a state into classes of common (weight, eigenvalue exponent).
fn graded_classes<C: VoaContext>(
    ctx: &C,
    aut: &AutomorphismSpec<C::Monomial>,
    v: &State<C::Monomial>,
) -> Vec<(Rational, u32, State<C::Monomial>)> {
    let mut classes: BTreeMap<(Rational, u32), State<C::Monomial>> = BTreeMap::new();
    for (m, c) in v.iter() {
        let key = (ctx.weight(m, Role::Algebra), aut.exponent(m));
        classes
            .entry(key)
            .or_insert_with(State::zero)
            .insert_add(m.clone(), c.clone());
    }
    classes
        .into_iter()
        .map(|((w, j), s)| (w, j, s))
        .collect()
}

/// The star product `u * v`, extended linearly from homogeneous `u`:
/// `sum_i (wt u choose i) u_{i-1} v` on the fixed-point eigenspace, zero on
/// the rest.
pub fn star<C: VoaContext>(
    ev: &Evaluator<C>,
    aut: &AutomorphismSpec<C::Monomial>,
    u: &State<C::Monomial>,
    v: &State<C::Monomial>,
) -> Result<State<C::Monomial>, VoaError> {
    let ctx = ev.context();
    let mut out = State::zero();
    for (wt, j, comp) in graded_classes(ctx, aut, u) {
        if j > 0 {
            continue;
        }
        let top = wt
            .to_i64()
            .ok_or_else(|| VoaError::InvalidSpec("star needs integral weights".into()))?;
        for i in 0..=top.max(0) {
            let coeff = binom(&wt, i as u64);
            if coeff.is_zero() {
                continue;
            }
            let part = ev.algebra_mode(&comp, &Rational::from(i - 1), v)?;
            out.add_scaled(&part, &coeff);
        }
    }
    Ok(out)
}

/// The circle product whose span defines the relation subspace:
/// `sum_i (wt u choose i) u_{i-2} v` on the fixed eigenspace and
/// `sum_i (wt u + j/r - 1 choose i) u_{i-1} v` on the twisted ones.
pub fn circ<C: VoaContext>(
    ev: &Evaluator<C>,
    aut: &AutomorphismSpec<C::Monomial>,
    u: &State<C::Monomial>,
    v: &State<C::Monomial>,
) -> Result<State<C::Monomial>, VoaError> {
    let ctx = ev.context();
    let max_v = ctx
        .max_weight(v, Role::Algebra)
        .unwrap_or_else(Rational::zero);
    let mut out = State::zero();
    for (wt, j, comp) in graded_classes(ctx, aut, u) {
        if j == 0 {
            let top = wt
                .to_i64()
                .ok_or_else(|| VoaError::InvalidSpec("circ needs integral weights".into()))?;
            for i in 0..=top.max(0) {
                let coeff = binom(&wt, i as u64);
                if coeff.is_zero() {
                    continue;
                }
                let part = ev.algebra_mode(&comp, &Rational::from(i - 2), v)?;
                out.add_scaled(&part, &coeff);
            }
        } else {
            // rational binomial upper argument; the sum is finite because
            // deep modes annihilate v
            let upper = &(&wt + &Rational::new(j as i64, aut.order as i64)) - &Rational::one();
            let bound = (&wt + &max_v).floor_i64() + 1;
            for i in 0..=bound.max(0) {
                let coeff = binom(&upper, i as u64);
                if coeff.is_zero() {
                    continue;
                }
                let part = ev.algebra_mode(&comp, &Rational::from(i - 1), v)?;
                out.add_scaled(&part, &coeff);
            }
        }
    }
    Ok(out)
}

/// Weight-truncated quotient of the algebra by the computed relation span.
pub struct ZhuQuotient<M: BasisMonomial> {
    pub cap: i64,
    /// All basis monomials of weight <= cap.
    pub basis: Vec<M>,
    /// Column index per monomial; columns are ordered heaviest first so that
    /// quotient representatives prefer light monomials.
    index: BTreeMap<M, usize>,
    columns: Vec<M>,
    relations: Rref,
    /// Representatives of the quotient classes, lightest first.
    pub representatives: Vec<M>,
    /// Upper-bound dimension of the quotient of the weight filtration at
    /// each weight `0..=cap`.
    pub dims_per_weight: Vec<usize>,
    /// `star` structure constants on representative classes, for pairs whose
    /// weights fit under the cap: `(a, b) -> coordinates`.
    pub star_table: BTreeMap<(usize, usize), Vec<(usize, Rational)>>,
}

impl<M: BasisMonomial> ZhuQuotient<M> {
    pub fn dimension(&self) -> usize {
        self.representatives.len()
    }

    fn coords(&self, v: &State<M>) -> Result<BTreeMap<usize, Rational>, VoaError> {
        let mut out = BTreeMap::new();
        for (m, c) in v.iter() {
            let Some(&i) = self.index.get(m) else {
                return Err(VoaError::CapInfeasible(Rational::from(self.cap)));
            };
            out.insert(i, c.clone());
        }
        Ok(out)
    }

    /// Canonical representative of the class of `v` modulo the relation span.
    pub fn reduce(&self, v: &State<M>) -> Result<State<M>, VoaError> {
        let reduced = self.relations.reduce(&self.coords(v)?);
        Ok(State::from_terms(
            reduced
                .into_iter()
                .map(|(i, c)| (self.columns[i].clone(), c)),
        ))
    }

    pub fn class_is_zero(&self, v: &State<M>) -> Result<bool, VoaError> {
        Ok(self.reduce(v)?.is_zero())
    }
}

/// Builds the truncated quotient: spans circle products of all basis pairs
/// fitting under the cap and reduces the basis against them.
pub fn zhu_quotient<C: VoaContext>(
    ctx: &C,
    aut: &AutomorphismSpec<C::Monomial>,
    cap: i64,
) -> Result<ZhuQuotient<C::Monomial>, VoaError> {
    validate_automorphism(ctx, aut)?;
    if cap < 0 || Rational::from(cap) > ctx.policy().weight_cap {
        return Err(VoaError::CapInfeasible(Rational::from(cap)));
    }
    let ev = Evaluator::new(ctx);
    let mut basis: Vec<C::Monomial> = Vec::new();
    let mut weights: Vec<i64> = Vec::new();
    for w in 0..=cap {
        for m in ctx.basis_at(&Rational::from(w), Role::Algebra)? {
            basis.push(m);
            weights.push(w);
        }
    }
    // columns heaviest-first so pivots eliminate heavy monomials
    let mut order: Vec<usize> = (0..basis.len()).collect();
    order.sort_by(|&a, &b| {
        weights[b]
            .cmp(&weights[a])
            .then_with(|| basis[a].cmp(&basis[b]))
    });
    let columns: Vec<C::Monomial> = order.iter().map(|&i| basis[i].clone()).collect();
    let col_weight: Vec<i64> = order.iter().map(|&i| weights[i]).collect();
    let index: BTreeMap<C::Monomial, usize> = columns
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, m)| (m, i))
        .collect();

    let mut relations = Rref::new();
    for (ui, u) in basis.iter().enumerate() {
        let ju = aut.exponent(u);
        let budget = if ju == 0 { cap - 1 } else { cap };
        for (vi, v) in basis.iter().enumerate() {
            if weights[ui] + weights[vi] > budget {
                continue;
            }
            let product = circ(&ev, aut, &State::monomial(u.clone()), &State::monomial(v.clone()))?;
            if product.is_zero() {
                continue;
            }
            let mut coords = BTreeMap::new();
            for (m, c) in product.iter() {
                let Some(&i) = index.get(m) else {
                    return Err(VoaError::CapInfeasible(Rational::from(cap)));
                };
                coords.insert(i, c.clone());
            }
            relations.insert(coords);
        }
    }

    let representatives: Vec<C::Monomial> = {
        let mut reps: Vec<usize> = (0..columns.len())
            .filter(|&i| !relations.is_pivot(i))
            .collect();
        reps.sort_by(|&a, &b| {
            col_weight[a]
                .cmp(&col_weight[b])
                .then_with(|| columns[a].cmp(&columns[b]))
        });
        reps.into_iter().map(|i| columns[i].clone()).collect()
    };

    let mut dims_per_weight = Vec::new();
    for w in 0..=cap {
        let total = weights.iter().filter(|&&x| x <= w).count();
        let pivots = relations
            .pivot_cols()
            .filter(|&i| col_weight[i] <= w)
            .count();
        dims_per_weight.push(total - pivots);
    }

    let mut quotient = ZhuQuotient {
        cap,
        basis,
        index,
        columns,
        relations,
        representatives,
        dims_per_weight,
        star_table: BTreeMap::new(),
    };

    let rep_weights: Vec<i64> = quotient
        .representatives
        .iter()
        .map(|m| {
            ctx.weight(m, Role::Algebra)
                .to_i64()
                .expect("integral weights under the cap")
        })
        .collect();
    let rep_index: BTreeMap<C::Monomial, usize> = quotient
        .representatives
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, m)| (m, i))
        .collect();
    let mut table = BTreeMap::new();
    for a in 0..quotient.representatives.len() {
        for b in 0..quotient.representatives.len() {
            if rep_weights[a] + rep_weights[b] > cap {
                continue;
            }
            let product = star(
                &ev,
                aut,
                &State::monomial(quotient.representatives[a].clone()),
                &State::monomial(quotient.representatives[b].clone()),
            )?;
            let reduced = quotient.reduce(&product)?;
            let coords: Vec<(usize, Rational)> = reduced
                .iter()
                .map(|(m, c)| (rep_index[m], c.clone()))
                .collect();
            table.insert((a, b), coords);
        }
    }
    quotient.star_table = table;
    Ok(quotient)
}

/// True when the per-weight dimension upper bounds agree between caps
/// `cap - 2` and `cap` on weights up to `cap - 2`.
pub fn zhu_stabilized<C: VoaContext>(
    ctx: &C,
    aut: &AutomorphismSpec<C::Monomial>,
    cap: i64,
) -> Result<bool, VoaError> {
    if cap < 2 {
        return Ok(false);
    }
    let small = zhu_quotient(ctx, aut, cap - 2)?;
    let large = zhu_quotient(ctx, aut, cap)?;
    Ok((0..=(cap - 2) as usize)
        .all(|w| small.dims_per_weight[w] == large.dims_per_weight[w]))
}

/// Matrix of the top-level action `o(u) = u_{wt u - 1}` on the lowest-weight
/// subspace of the module, rows and columns indexed by the top basis.
/// Twisted-eigenspace components act as zero.
pub fn top_level_action<C: VoaContext>(
    ev: &Evaluator<C>,
    aut: &AutomorphismSpec<C::Monomial>,
    u: &State<C::Monomial>,
) -> Result<Vec<Vec<Rational>>, VoaError> {
    let ctx = ev.context();
    let top = ctx.top_basis()?;
    let dim = top.len();
    let col_of: BTreeMap<C::Monomial, usize> = top
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, m)| (m, i))
        .collect();
    let mut matrix = vec![vec![Rational::zero(); dim]; dim];
    for (wt, j, comp) in graded_classes(ctx, aut, u) {
        if j > 0 {
            // modes of twisted vectors miss the integral sector on the top level
            continue;
        }
        let n = &wt - &Rational::one();
        for (b, wm) in top.iter().enumerate() {
            let image = ev.mode(&comp, &n, &State::monomial(wm.clone()))?;
            for (m, c) in image.iter() {
                let Some(&a) = col_of.get(m) else {
                    return Err(VoaError::MonomialNotInContext(m.to_string()));
                };
                matrix[a][b] += c;
            }
        }
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::TruncationPolicy;
    use crate::heisenberg::{build_m1, HeisenbergSpec};
    use crate::rational::rat;
    use crate::virasoro::{build_verma, build_virasoro};

    #[test]
    fn vacuum_is_star_identity() {
        let ctx = build_m1(&HeisenbergSpec::rank(1), TruncationPolicy::with_cap(16)).unwrap();
        let ev = Evaluator::new(&ctx);
        let id = AutomorphismSpec::identity();
        let v = ctx
            .parse_state("b(1,-2) b(1,-1) |0> + 2 * b(1,-1) |0>", Role::Algebra)
            .unwrap();
        assert_eq!(star(&ev, &id, &ctx.vacuum(), &v).unwrap(), v);
        assert_eq!(star(&ev, &id, &v, &ctx.vacuum()).unwrap(), v);
    }

    #[test]
    fn omega_star_is_l_minus2_plus_2l_minus1_plus_l0() {
        let ctx = build_virasoro(rat(1, 2), TruncationPolicy::with_cap(16));
        let ev = Evaluator::new(&ctx);
        let id = AutomorphismSpec::identity();
        let v = ctx.parse_state("L(-3) |0>", Role::Algebra).unwrap();
        let got = star(&ev, &id, &ctx.omega(), &v).unwrap();
        let mut expected = ev.virasoro(-2, &v).unwrap();
        expected.add_scaled(&ev.virasoro(-1, &v).unwrap(), &Rational::from(2));
        expected.add_scaled(&ev.virasoro(0, &v).unwrap(), &Rational::one());
        assert_eq!(got, expected);
    }

    #[test]
    fn omega_circ_is_l_minus3_plus_2l_minus2_plus_l_minus1() {
        let ctx = build_virasoro(rat(1, 2), TruncationPolicy::with_cap(16));
        let ev = Evaluator::new(&ctx);
        let id = AutomorphismSpec::identity();
        let v = ctx.parse_state("L(-2) |0>", Role::Algebra).unwrap();
        let got = circ(&ev, &id, &ctx.omega(), &v).unwrap();
        let mut expected = ev.virasoro(-3, &v).unwrap();
        expected.add_scaled(&ev.virasoro(-2, &v).unwrap(), &Rational::from(2));
        expected.add_scaled(&ev.virasoro(-1, &v).unwrap(), &Rational::one());
        assert_eq!(got, expected);
    }

    #[test]
    fn twisted_circ_with_vacuum_returns_u() {
        // for twisted u: u o 1 = u
        let ctx = build_m1(&HeisenbergSpec::rank(1), TruncationPolicy::with_cap(16)).unwrap();
        let ev = Evaluator::new(&ctx);
        let aut = heisenberg_minus_one();
        validate_automorphism(&ctx, &aut).unwrap();
        for expr in ["b(1,-1) |0>", "b(1,-2) |0>", "b(1,-1)^3 |0>"] {
            let u = ctx.parse_state(expr, Role::Algebra).unwrap();
            let got = circ(&ev, &aut, &u, &ctx.vacuum()).unwrap();
            assert_eq!(got, u, "{expr}");
            // and star vanishes on twisted vectors
            assert!(star(&ev, &aut, &u, &u).unwrap().is_zero());
        }
    }

    #[test]
    fn verma_top_level_action_of_omega() {
        let ctx = build_verma(rat(1, 2), rat(1, 16), TruncationPolicy::with_cap(16));
        let ev = Evaluator::new(&ctx);
        let id = AutomorphismSpec::identity();
        let m = top_level_action(&ev, &id, &ctx.omega()).unwrap();
        assert_eq!(m, vec![vec![rat(1, 16)]]);
        // o(omega * omega) = o(omega)^2 = h^2 on the top level
        let ww = star(&ev, &id, &ctx.omega(), &ctx.omega()).unwrap();
        let m2 = top_level_action(&ev, &id, &ww).unwrap();
        assert_eq!(m2, vec![vec![rat(1, 256)]]);
    }

    #[test]
    fn quotient_of_virasoro_is_polynomial_in_omega() {
        let ctx = build_virasoro(rat(1, 2), TruncationPolicy::with_cap(20));
        let id = AutomorphismSpec::identity();
        let q = zhu_quotient(&ctx, &id, 8).unwrap();
        // every representative class is spanned by powers of omega: check
        // that reducing L(-2)^m |0> for 2m <= 8 spans the whole quotient
        let mut span = Rref::new();
        for m in 0..=4u32 {
            let power = crate::virasoro::VirasoroMonomial::from_parts(vec![2; m as usize]);
            let reduced = q.reduce(&State::monomial(power)).unwrap();
            let coords: BTreeMap<usize, Rational> = reduced
                .iter()
                .map(|(mono, c)| {
                    let pos = q
                        .representatives
                        .iter()
                        .position(|r| r == mono)
                        .expect("representative");
                    (pos, c.clone())
                })
                .collect();
            span.insert(coords);
        }
        assert_eq!(span.rank(), q.dimension());
        // commutativity of the truncated product
        for ((a, b), coords) in &q.star_table {
            if let Some(rev) = q.star_table.get(&(*b, *a)) {
                assert_eq!(coords, rev, "classes {a} and {b} must commute");
            }
        }
    }
}
