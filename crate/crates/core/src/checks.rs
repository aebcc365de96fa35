//! Coefficient-level checkers for the defining identities and their
//! consequences. Each check computes both sides independently through the
//! mode machinery and compares exactly; failures carry the differing states.

use crate::context::{Role, VoaContext, VoaError};
use crate::eval::Evaluator;
use crate::formal::binom;
use crate::rational::Rational;
use crate::state::State;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error("{what}: lhs = {lhs}, rhs = {rhs}")]
    Mismatch {
        what: String,
        lhs: String,
        rhs: String,
    },
    #[error("precondition violated: {what}")]
    Precondition { what: String },
    #[error(transparent)]
    Eval(#[from] VoaError),
}

pub type CheckResult = Result<(), CheckError>;

fn expect_equal<M: crate::state::BasisMonomial>(
    what: impl FnOnce() -> String,
    lhs: &State<M>,
    rhs: &State<M>,
) -> CheckResult {
    if lhs == rhs {
        Ok(())
    } else {
        Err(CheckError::Mismatch {
            what: what(),
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
        })
    }
}

fn max_wt<C: VoaContext>(ctx: &C, v: &State<C::Monomial>, role: Role) -> i64 {
    ctx.max_weight(v, role)
        .map(|w| w.floor_i64())
        .unwrap_or(0)
}

/// Commutator formula: `(u_s v_t - v_t u_s) w = sum_m (s over m) (u_m v)_{s+t-m} w`.
pub fn commutator_formula_check<C: VoaContext>(
    ev: &Evaluator<C>,
    u: &State<C::Monomial>,
    v: &State<C::Monomial>,
    s: &Rational,
    t: &Rational,
    w: &State<C::Monomial>,
) -> CheckResult {
    let ctx = ev.context();
    let lhs = {
        let vt_w = ev.mode(v, t, w)?;
        let us_vt_w = ev.mode(u, s, &vt_w)?;
        let us_w = ev.mode(u, s, w)?;
        let vt_us_w = ev.mode(v, t, &us_w)?;
        us_vt_w.sub(&vt_us_w)
    };
    let mut rhs = State::zero();
    let m_max = (max_wt(ctx, u, Role::Algebra) + max_wt(ctx, v, Role::Algebra)).max(0);
    for m in 0..=m_max {
        let coeff = binom(s, m as u64);
        if coeff.is_zero() {
            continue;
        }
        let umv = ev.algebra_mode(u, &Rational::from(m), v)?;
        if umv.is_zero() {
            continue;
        }
        let part = ev.mode(&umv, &(&(s + t) - &Rational::from(m)), w)?;
        rhs.add_scaled(&part, &coeff);
    }
    expect_equal(|| format!("commutator formula at s={s}, t={t}"), &lhs, &rhs)
}

/// One coefficient of the Jacobi identity:
/// `sum_i (-1)^i (a over i) [u_{a+b-i} v_{c+i} - (-1)^a v_{a+c-i} u_{b+i}] w
///   = sum_i (b over i) (u_{a+i} v)_{b+c-i} w`.
pub fn jacobi_component_check<C: VoaContext>(
    ev: &Evaluator<C>,
    u: &State<C::Monomial>,
    v: &State<C::Monomial>,
    w: &State<C::Monomial>,
    a: i64,
    b: i64,
    c: i64,
) -> CheckResult {
    let ctx = ev.context();
    let min_wt = ctx.min_weight(Role::Module).floor_i64();
    let wu = max_wt(ctx, u, Role::Algebra);
    let wv = max_wt(ctx, v, Role::Algebra);
    let ww = max_wt(ctx, w, Role::Module);
    let a_rat = Rational::from(a);
    let sign_a = if a.rem_euclid(2) == 0 { 1 } else { -1 };

    let mut lhs = State::zero();
    let bound1 = (wv + ww - c - 1 - min_wt).max(-1);
    let bound2 = (wu + ww - b - 1 - min_wt).max(-1);
    for i in 0..=bound1.max(bound2) {
        let mut coeff = binom(&a_rat, i as u64);
        if i % 2 == 1 {
            coeff = -coeff;
        }
        if coeff.is_zero() {
            continue;
        }
        if i <= bound1 {
            let inner = ev.mode(v, &Rational::from(c + i), w)?;
            let outer = ev.mode(u, &Rational::from(a + b - i), &inner)?;
            lhs.add_scaled(&outer, &coeff);
        }
        if i <= bound2 {
            let inner = ev.mode(u, &Rational::from(b + i), w)?;
            let outer = ev.mode(v, &Rational::from(a + c - i), &inner)?;
            let c2 = if sign_a == 1 { -&coeff } else { coeff.clone() };
            lhs.add_scaled(&outer, &c2);
        }
    }

    let mut rhs = State::zero();
    let b_rat = Rational::from(b);
    let i_max = (wu + wv - a).max(-1);
    for i in 0..=i_max {
        let coeff = binom(&b_rat, i as u64);
        if coeff.is_zero() {
            continue;
        }
        let uav = ev.algebra_mode(u, &Rational::from(a + i), v)?;
        if uav.is_zero() {
            continue;
        }
        let part = ev.mode(&uav, &Rational::from(b + c - i), w)?;
        rhs.add_scaled(&part, &coeff);
    }
    expect_equal(
        || format!("jacobi component at (a,b,c)=({a},{b},{c})"),
        &lhs,
        &rhs,
    )
}

/// Skew symmetry `Y(u,z)v = e^(z L(-1)) Y(v,-z)u`, compared coefficientwise
/// for `z^n` with `n <= order_cap`.
pub fn skew_symmetry_check<C: VoaContext>(
    ev: &Evaluator<C>,
    u: &State<C::Monomial>,
    v: &State<C::Monomial>,
    order_cap: i64,
) -> CheckResult {
    let ctx = ev.context();
    let wu = max_wt(ctx, u, Role::Algebra);
    let wv = max_wt(ctx, v, Role::Algebra);
    let omega = ctx.omega();
    for n in (-(wu + wv) - 2)..=order_cap {
        let lhs = ev.algebra_mode(u, &Rational::from(-n - 1), v)?;
        let mut rhs = State::zero();
        let j_max = (n + wu + wv).max(-1);
        for j in 0..=j_max {
            let mut term = ev.algebra_mode(v, &Rational::from(j - n - 1), u)?;
            if term.is_zero() {
                continue;
            }
            let mut factorial = Rational::one();
            for q in 1..=j {
                factorial *= &Rational::from(q);
            }
            for _ in 0..j {
                term = ev.mode_in(Role::Algebra, &omega, &Rational::zero(), &term)?;
            }
            let mut coeff = factorial.recip();
            if (j - n).rem_euclid(2) == 1 {
                coeff = -coeff;
            }
            rhs.add_scaled(&term, &coeff);
        }
        expect_equal(|| format!("skew symmetry at order {n}"), &lhs, &rhs)?;
    }
    Ok(())
}

/// Creation axiom: `v_n 1 = 0` for `n >= 0` and `v_{-1} 1 = v`.
pub fn creation_check<C: VoaContext>(ev: &Evaluator<C>, v: &State<C::Monomial>) -> CheckResult {
    let ctx = ev.context();
    let vac = ctx.vacuum();
    let back = ev.algebra_mode(v, &Rational::from(-1), &vac)?;
    expect_equal(|| "creation: v_{-1} vacuum".to_string(), &back, v)?;
    for n in 0..=(max_wt(ctx, v, Role::Algebra) + 2) {
        let image = ev.algebra_mode(v, &Rational::from(n), &vac)?;
        expect_equal(
            || format!("creation: v_{n} vacuum"),
            &image,
            &State::zero(),
        )?;
    }
    Ok(())
}

/// Derivative identity `(L(-1)v)_n = -n v_{n-1}` tested as operators on all
/// module basis states of weight up to `states_cap`, for `|n| <= order_cap`.
pub fn l_minus1_check<C: VoaContext>(
    ev: &Evaluator<C>,
    v: &State<C::Monomial>,
    order_cap: i64,
    states_cap: i64,
) -> CheckResult {
    let ctx = ev.context();
    let omega = ctx.omega();
    let lv = ev.mode_in(Role::Algebra, &omega, &Rational::zero(), v)?;
    let mut w = ctx.min_weight(Role::Module);
    let top = &ctx.min_weight(Role::Module) + &Rational::from(states_cap);
    while w <= top {
        for wm in ctx.basis_at(&w, Role::Module).map_err(CheckError::Eval)? {
            let ws = State::monomial(wm);
            for n in -order_cap..=order_cap {
                let lhs = ev.mode(&lv, &Rational::from(n), &ws)?;
                let rhs = ev
                    .mode(v, &Rational::from(n - 1), &ws)?
                    .scale(&Rational::from(-n));
                expect_equal(|| format!("derivative identity at n={n} on {ws}"), &lhs, &rhs)?;
            }
        }
        w = &w + &Rational::one();
    }
    Ok(())
}

/// Virasoro relation `[L(m), L(n)] = (m-n) L(m+n) + central term` on all
/// module basis states of weight up to `states_cap`.
pub fn virasoro_relation_check<C: VoaContext>(
    ev: &Evaluator<C>,
    m: i64,
    n: i64,
    states_cap: i64,
) -> CheckResult {
    let ctx = ev.context();
    let central = if m + n == 0 {
        &Rational::new(m * m * m - m, 12) * &ctx.central_charge()
    } else {
        Rational::zero()
    };
    let mut w = ctx.min_weight(Role::Module);
    let top = &ctx.min_weight(Role::Module) + &Rational::from(states_cap);
    while w <= top {
        for wm in ctx.basis_at(&w, Role::Module).map_err(CheckError::Eval)? {
            let ws = State::monomial(wm);
            let ln_w = ev.virasoro(n, &ws)?;
            let lm_ln_w = ev.virasoro(m, &ln_w)?;
            let lm_w = ev.virasoro(m, &ws)?;
            let ln_lm_w = ev.virasoro(n, &lm_w)?;
            let lhs = lm_ln_w.sub(&ln_lm_w);
            let mut rhs = ev.virasoro(m + n, &ws)?.scale(&Rational::from(m - n));
            rhs.add_scaled(&ws, &central);
            expect_equal(
                || format!("virasoro relation [L({m}),L({n})] on {ws}"),
                &lhs,
                &rhs,
            )?;
        }
        w = &w + &Rational::one();
    }
    Ok(())
}

/// Normal-ordering identity: coefficients of `Y(u_{-1}v, z)` equal those of
/// the normally ordered product (negative modes of `u` on the left), tested
/// on the given states for z-coefficient orders in `orders`.
pub fn normal_ordered_check<C: VoaContext>(
    ev: &Evaluator<C>,
    u: &State<C::Monomial>,
    v: &State<C::Monomial>,
    orders: std::ops::RangeInclusive<i64>,
    samples: &[State<C::Monomial>],
) -> CheckResult {
    let ctx = ev.context();
    let min_wt = ctx.min_weight(Role::Module).floor_i64();
    let u_minus1_v = ev.algebra_mode(u, &Rational::from(-1), v)?;
    let wu = max_wt(ctx, u, Role::Algebra);
    let wv = max_wt(ctx, v, Role::Algebra);
    for w in samples {
        let ww = max_wt(ctx, w, Role::Module);
        for t in orders.clone() {
            let lhs = ev.mode(&u_minus1_v, &Rational::from(t), w)?;
            let mut rhs = State::zero();
            // sum_{m < 0} u_m v_{t-1-m} w: v-mode weight floor bounds m below
            let m_lo = t - (wv + ww - min_wt);
            for m in m_lo..=-1 {
                let inner = ev.mode(v, &Rational::from(t - 1 - m), w)?;
                if inner.is_zero() {
                    continue;
                }
                rhs = rhs.add(&ev.mode(u, &Rational::from(m), &inner)?);
            }
            // sum_{m >= 0} v_{t-1-m} u_m w
            for m in 0..=(wu + ww - min_wt).max(0) {
                let inner = ev.mode(u, &Rational::from(m), w)?;
                if inner.is_zero() {
                    continue;
                }
                rhs = rhs.add(&ev.mode(v, &Rational::from(t - 1 - m), &inner)?);
            }
            expect_equal(
                || format!("normal ordering at order {t} on {w}"),
                &lhs,
                &rhs,
            )?;
        }
    }
    Ok(())
}

/// Power identity for states with commuting modes:
/// `Y((v_{-1})^N 1, z) = Y(v, z)^N` on the samples, coefficient orders in
/// `orders`. The commuting precondition is verified first and its violation
/// is reported distinctly.
pub fn nilpotency_check<C: VoaContext>(
    ev: &Evaluator<C>,
    v: &State<C::Monomial>,
    power: u32,
    samples: &[State<C::Monomial>],
    orders: std::ops::RangeInclusive<i64>,
) -> CheckResult {
    let ctx = ev.context();
    let min_wt = ctx.min_weight(Role::Module).floor_i64();
    let wv = max_wt(ctx, v, Role::Algebra);
    // precondition: modes of v commute pairwise on the samples
    let mode_bound = wv + 2 + orders.clone().map(i64::abs).max().unwrap_or(0);
    for x in samples {
        for a in -mode_bound..=mode_bound {
            for b in a..=mode_bound {
                let vb = ev.mode(v, &Rational::from(b), x)?;
                let va = ev.mode(v, &Rational::from(a), x)?;
                let ab = ev.mode(v, &Rational::from(a), &vb)?;
                let ba = ev.mode(v, &Rational::from(b), &va)?;
                if ab != ba {
                    return Err(CheckError::Precondition {
                        what: format!("modes v_{a} and v_{b} do not commute on {x}"),
                    });
                }
            }
        }
    }
    // u = (v_{-1})^N vacuum
    let mut u = ctx.vacuum();
    for _ in 0..power {
        u = ev.algebra_mode(v, &Rational::from(-1), &u)?;
    }
    for x in samples {
        let wx = max_wt(ctx, x, Role::Module);
        for t in orders.clone() {
            let lhs = ev.mode(&u, &Rational::from(t), x)?;
            // sum over mode multisets m_1 >= ... >= m_N with sum = t - N + 1,
            // applied largest first, weighted by the permutation count
            let target = t - power as i64 + 1;
            let mut rhs = State::zero();
            let mut stack: Vec<i64> = Vec::new();
            product_sum(
                ev,
                v,
                power,
                target,
                wv + wx - min_wt + 1,
                x,
                &mut stack,
                &mut rhs,
            )?;
            expect_equal(
                || format!("power identity at order {t} on {x} (N={power})"),
                &lhs,
                &rhs,
            )?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn product_sum<C: VoaContext>(
    ev: &Evaluator<C>,
    v: &State<C::Monomial>,
    remaining: u32,
    target: i64,
    max_mode: i64,
    x: &State<C::Monomial>,
    chosen: &mut Vec<i64>,
    out: &mut State<C::Monomial>,
) -> Result<(), VoaError> {
    if remaining == 0 {
        if target == 0 {
            // permutation count of the chosen multiset
            let mut count = Rational::one();
            let mut total = 0i64;
            let mut run = 0i64;
            let mut last = i64::MIN;
            for &m in chosen.iter() {
                total += 1;
                if m == last {
                    run += 1;
                } else {
                    run = 1;
                    last = m;
                }
                count *= &Rational::new(total, run);
            }
            out.add_scaled(x, &count);
        }
        return Ok(());
    }
    let ctx = ev.context();
    let min_wt = ctx.min_weight(Role::Module).floor_i64();
    // the largest remaining mode: at least ceil(target/remaining), at most
    // the annihilation bound on the current state
    let hi = max_mode.min(
        max_wt(ctx, x, Role::Module) + max_wt(ctx, v, Role::Algebra) - min_wt,
    );
    let lo = num_integer::Integer::div_ceil(&target, &(remaining as i64));
    for m in lo..=hi {
        let y = ev.mode(v, &Rational::from(m), x)?;
        if y.is_zero() {
            continue;
        }
        chosen.push(m);
        product_sum(ev, v, remaining - 1, target - m, m, &y, chosen, out)?;
        chosen.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::TruncationPolicy;
    use crate::heisenberg::{build_m1, HeisenbergSpec};
    use crate::lattice::{build_lattice_voa, LatticeSpec};
    use crate::rational::rat;
    use crate::virasoro::build_virasoro;

    #[test]
    fn heisenberg_commutator_small_window() {
        let ctx = build_m1(&HeisenbergSpec::rank(1), TruncationPolicy::with_cap(20)).unwrap();
        let ev = Evaluator::new(&ctx);
        let b = ctx.generator_state(0);
        let w = ctx.parse_state("b(1,-2) |0>", Role::Module).unwrap();
        for s in -3..=3i64 {
            for t in -3..=3i64 {
                commutator_formula_check(&ev, &b, &b, &Rational::from(s), &Rational::from(t), &w)
                    .unwrap();
            }
        }
    }

    #[test]
    fn omega_commutator_is_virasoro_bracket() {
        let ctx = build_m1(&HeisenbergSpec::rank(1), TruncationPolicy::with_cap(24)).unwrap();
        let ev = Evaluator::new(&ctx);
        let omega = ctx.omega();
        let w = ctx.parse_state("b(1,-1) |0>", Role::Module).unwrap();
        for s in -2..=3i64 {
            for t in -2..=3i64 {
                commutator_formula_check(
                    &ev,
                    &omega,
                    &omega,
                    &Rational::from(s),
                    &Rational::from(t),
                    &w,
                )
                .unwrap();
            }
        }
    }

    #[test]
    fn jacobi_reduces_to_commutator_at_a0() {
        let ctx = build_virasoro(rat(1, 2), TruncationPolicy::with_cap(24));
        let ev = Evaluator::new(&ctx);
        let omega = ctx.omega();
        let w = ctx.parse_state("L(-2) |0>", Role::Module).unwrap();
        for b in -2..=2i64 {
            for c in -2..=2i64 {
                jacobi_component_check(&ev, &omega, &omega, &w, 0, b, c).unwrap();
                commutator_formula_check(
                    &ev,
                    &omega,
                    &omega,
                    &Rational::from(b),
                    &Rational::from(c),
                    &w,
                )
                .unwrap();
            }
        }
    }

    #[test]
    fn skew_symmetry_heisenberg_example() {
        let ctx = build_m1(&HeisenbergSpec::rank(1), TruncationPolicy::with_cap(24)).unwrap();
        let ev = Evaluator::new(&ctx);
        let u = ctx.parse_state("b(1,-1) |0>", Role::Algebra).unwrap();
        let v = ctx.parse_state("b(1,-1)^2 |0>", Role::Algebra).unwrap();
        skew_symmetry_check(&ev, &u, &v, 3).unwrap();
        skew_symmetry_check(&ev, &u, &u, 3).unwrap();
        skew_symmetry_check(&ev, &ctx.vacuum(), &v, 3).unwrap();
    }

    #[test]
    fn creation_on_lattice_states() {
        let ctx = build_lattice_voa(
            &LatticeSpec::preset("A1").unwrap(),
            0,
            TruncationPolicy::with_cap(20),
        )
        .unwrap();
        let ev = Evaluator::new(&ctx);
        creation_check(&ev, &ctx.omega()).unwrap();
        creation_check(&ev, &ctx.vacuum()).unwrap();
        let v = ctx
            .parse_state("b(1,-1) E(1) |0> - 2/3 * E(-1) |0>", Role::Algebra)
            .unwrap();
        creation_check(&ev, &v).unwrap();
    }

    #[test]
    fn derivative_identity_on_free_boson() {
        let ctx = build_m1(&HeisenbergSpec::rank(1), TruncationPolicy::with_cap(24)).unwrap();
        let ev = Evaluator::new(&ctx);
        let v = ctx.parse_state("b(1,-1) |0>", Role::Algebra).unwrap();
        l_minus1_check(&ev, &v, 3, 3).unwrap();
        l_minus1_check(&ev, &ctx.vacuum(), 2, 2).unwrap();
    }

    #[test]
    fn virasoro_relation_rank2() {
        let ctx = build_m1(&HeisenbergSpec::rank(2), TruncationPolicy::with_cap(20)).unwrap();
        let ev = Evaluator::new(&ctx);
        for m in -2..=2i64 {
            for n in -2..=2i64 {
                virasoro_relation_check(&ev, m, n, 2).unwrap();
            }
        }
    }

    #[test]
    fn normal_ordering_free_boson() {
        let ctx = build_m1(&HeisenbergSpec::rank(1), TruncationPolicy::with_cap(24)).unwrap();
        let ev = Evaluator::new(&ctx);
        let b = ctx.generator_state(0);
        let samples = vec![
            ctx.vacuum(),
            ctx.parse_state("b(1,-1) |0>", Role::Module).unwrap(),
            ctx.parse_state("b(1,-2) b(1,-1) |0>", Role::Module).unwrap(),
        ];
        normal_ordered_check(&ev, &b, &b, -6..=3, &samples).unwrap();
        normal_ordered_check(&ev, &ctx.vacuum(), &b, -4..=3, &samples).unwrap();
    }

    #[test]
    fn nilpotency_precondition_fails_for_oscillator() {
        let ctx = build_m1(&HeisenbergSpec::rank(1), TruncationPolicy::with_cap(24)).unwrap();
        let ev = Evaluator::new(&ctx);
        let b = ctx.generator_state(0);
        let err = nilpotency_check(&ev, &b, 2, &[ctx.vacuum()], -2..=2).unwrap_err();
        assert!(matches!(err, CheckError::Precondition { .. }));
    }
}
