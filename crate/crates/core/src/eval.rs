//! Recursive evaluation of vertex-operator modes.
//!
//! Generator modes come from the backend; composite monomials `u = g_a rest`
//! are evaluated with the iterate component formula
//!
//! `(g_a rest)_n = sum_{i>=0} (-1)^i (a over i)
//!     [ g_{a-i} rest_{n+i} - (-1)^a rest_{a+n-i} g_i ]`
//!
//! read off from the Jacobi identity by coefficient extraction. Every sum is
//! finite on a fixed vector because the grading is bounded below. Results are
//! memoized per (monomial, mode, monomial) triple; caching is semantically
//! invisible.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::context::{Role, VoaContext, VoaError};
use crate::formal::binom;
use crate::rational::Rational;
use crate::state::State;

type Memo<M> = HashMap<(Role, M, Rational, M), State<M>>;

/// Memoized mode-action engine over one immutable context.
pub struct Evaluator<'a, C: VoaContext> {
    ctx: &'a C,
    memo: RefCell<Memo<C::Monomial>>,
}

impl<'a, C: VoaContext> Evaluator<'a, C> {
    pub fn new(ctx: &'a C) -> Self {
        Evaluator {
            ctx,
            memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn context(&self) -> &'a C {
        self.ctx
    }

    /// `u_n w` with `w` on the module side. This is the main entry point.
    pub fn mode(
        &self,
        u: &State<C::Monomial>,
        n: &Rational,
        w: &State<C::Monomial>,
    ) -> Result<State<C::Monomial>, VoaError> {
        self.mode_in(Role::Module, u, n, w)
    }

    /// `u_n v` with both sides read in the algebra (used for products
    /// `u_m v` appearing inside composite formulas).
    pub fn algebra_mode(
        &self,
        u: &State<C::Monomial>,
        n: &Rational,
        v: &State<C::Monomial>,
    ) -> Result<State<C::Monomial>, VoaError> {
        self.mode_in(Role::Algebra, u, n, v)
    }

    /// `L(n) w = omega_{n+1} w` on the module side.
    pub fn virasoro(&self, n: i64, w: &State<C::Monomial>) -> Result<State<C::Monomial>, VoaError> {
        self.mode(&self.ctx.omega(), &Rational::from(n + 1), w)
    }

    pub fn mode_in(
        &self,
        role: Role,
        u: &State<C::Monomial>,
        n: &Rational,
        w: &State<C::Monomial>,
    ) -> Result<State<C::Monomial>, VoaError> {
        if u.is_zero() || w.is_zero() {
            return Ok(State::zero());
        }
        // Sector screening: monomials of u whose sector excludes n act as 0.
        // If every monomial is excluded the request itself is malformed.
        let mut any_in_sector = false;
        let mut out = State::zero();
        for (um, uc) in u.iter() {
            if !self.ctx.mode_in_sector(um, n, role) {
                continue;
            }
            any_in_sector = true;
            for (wm, wc) in w.iter() {
                let part = self.mode_monomial(role, um, n, wm)?;
                out.add_scaled(&part, &(uc * wc));
            }
        }
        if !any_in_sector {
            return Err(VoaError::InvalidModeSector { mode: n.clone() });
        }
        Ok(out)
    }

    fn mode_monomial(
        &self,
        role: Role,
        u: &C::Monomial,
        n: &Rational,
        w: &C::Monomial,
    ) -> Result<State<C::Monomial>, VoaError> {
        // Vacuum acts as the identity field.
        if self.ctx.is_vacuum(u) {
            return Ok(if *n == Rational::from(-1) {
                State::monomial(w.clone())
            } else {
                State::zero()
            });
        }

        let min_wt = self.ctx.min_weight(role);
        let result_wt =
            &(&self.ctx.weight(u, Role::Algebra) + &self.ctx.weight(w, role)) - &(n + &Rational::one());
        if result_wt < min_wt {
            return Ok(State::zero());
        }
        let cap = &self.ctx.policy().weight_cap;
        if &result_wt > cap {
            return Err(VoaError::WeightCapExceeded {
                weight: result_wt,
                cap: cap.clone(),
            });
        }

        let key = (role, u.clone(), n.clone(), w.clone());
        if let Some(hit) = self.memo.borrow().get(&key) {
            return Ok(hit.clone());
        }

        let result = if self.ctx.is_generator(u) {
            self.ctx.generator_mode(u, n, w, role)?
        } else {
            self.composite_mode(role, u, n, w)?
        };

        self.memo.borrow_mut().insert(key, result.clone());
        Ok(result)
    }

    /// Iterate component formula on the peeled first factor.
    fn composite_mode(
        &self,
        role: Role,
        u: &C::Monomial,
        n: &Rational,
        w: &C::Monomial,
    ) -> Result<State<C::Monomial>, VoaError> {
        let (g, a, rest) = self
            .ctx
            .peel(u)
            .ok_or_else(|| VoaError::MonomialNotInContext(u.to_string()))?;
        let min_wt = self.ctx.min_weight(role);
        let wt_g = self.ctx.weight(&g, Role::Algebra);
        let wt_rest = self.ctx.weight(&rest, Role::Algebra);
        let wt_w = self.ctx.weight(w, role);

        // rest_{n+i} w vanishes once its weight drops below the module floor.
        let bound1 = (&(&wt_rest + &wt_w) - &(n + &Rational::one()) - &min_wt).floor_i64();
        // g_i w vanishes once i exceeds wt g + wt w - 1 - min.
        let bound2 = (&(&wt_g + &wt_w) - &Rational::one() - &min_wt).floor_i64();
        let i_max = bound1.max(bound2).max(-1);

        let a_rat = Rational::from(a);
        let sign_a = if a.rem_euclid(2) == 0 { 1 } else { -1 };
        let mut out = State::zero();
        for i in 0..=i_max {
            let mut coeff = binom(&a_rat, i as u64);
            if i % 2 == 1 {
                coeff = -coeff;
            }
            if coeff.is_zero() {
                continue;
            }
            // g_{a-i} (rest_{n+i} w)
            if i <= bound1 {
                let inner = self.mode_monomial(role, &rest, &(n + &Rational::from(i)), w)?;
                let outer = self.apply_generator(role, &g, &Rational::from(a - i), &inner)?;
                out.add_scaled(&outer, &coeff);
            }
            // -(-1)^a rest_{a+n-i} (g_i w)
            if i <= bound2 {
                let inner = self.apply_generator(role, &g, &Rational::from(i), &State::monomial(w.clone()))?;
                if !inner.is_zero() {
                    let m2 = &(&a_rat + n) - &Rational::from(i);
                    let mut acc = State::zero();
                    for (im, ic) in inner.iter() {
                        let part = self.mode_monomial(role, &rest, &m2, im)?;
                        acc.add_scaled(&part, ic);
                    }
                    let c2 = if sign_a == 1 { -&coeff } else { coeff.clone() };
                    out.add_scaled(&acc, &c2);
                }
            }
        }
        Ok(out)
    }

    fn apply_generator(
        &self,
        role: Role,
        g: &C::Monomial,
        n: &Rational,
        x: &State<C::Monomial>,
    ) -> Result<State<C::Monomial>, VoaError> {
        let mut out = State::zero();
        for (m, c) in x.iter() {
            let part = self.mode_monomial(role, g, n, m)?;
            out.add_scaled(&part, c);
        }
        Ok(out)
    }
}

/// One-shot `u_n w` in the module of `ctx` (builds a throwaway evaluator;
/// loops should construct an [`Evaluator`] and reuse it).
pub fn mode_action<C: VoaContext>(
    u: &State<C::Monomial>,
    n: &Rational,
    w: &State<C::Monomial>,
    ctx: &C,
) -> Result<State<C::Monomial>, VoaError> {
    Evaluator::new(ctx).mode(u, n, w)
}

/// One-shot `L(n) w`.
pub fn virasoro_mode<C: VoaContext>(
    n: i64,
    w: &State<C::Monomial>,
    ctx: &C,
) -> Result<State<C::Monomial>, VoaError> {
    Evaluator::new(ctx).virasoro(n, w)
}
