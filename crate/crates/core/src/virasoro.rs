//! Virasoro construction: the vacuum algebra `V_k` (basis of `L(-n)` words
//! with parts >= 2), Verma modules `V(k,h)` (parts >= 1 over a top vector),
//! and the unitary discrete-series parameter tables.

use std::fmt;

use crate::context::{Role, TruncationPolicy, VoaContext, VoaError};
use crate::expr::{ExprError, FactorAst, StateAst};
use crate::rational::Rational;
use crate::state::State;

/// Weakly decreasing word `L(-n_1) ... L(-n_s)` applied to the bottom vector.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VirasoroMonomial {
    parts: Vec<u32>,
}

impl VirasoroMonomial {
    pub fn empty() -> Self {
        VirasoroMonomial { parts: Vec::new() }
    }

    pub fn from_parts(mut parts: Vec<u32>) -> Self {
        parts.sort_unstable_by(|a, b| b.cmp(a));
        VirasoroMonomial { parts }
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn weight(&self) -> u64 {
        self.parts.iter().map(|&n| n as u64).sum()
    }
}

impl fmt::Display for VirasoroMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "|0>");
        }
        let mut i = 0;
        while i < self.parts.len() {
            let n = self.parts[i];
            let mut count = 1;
            while i + count < self.parts.len() && self.parts[i + count] == n {
                count += 1;
            }
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "L(-{n})")?;
            if count > 1 {
                write!(f, "^{count}")?;
            }
            i += count;
        }
        write!(f, " |0>")
    }
}

/// Partitions of `total` with parts `>= min_part`, weakly decreasing.
pub(crate) fn partitions_min(total: u64, min_part: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut acc = Vec::new();
    fn rec(remaining: u64, max_part: u64, min_part: u64, acc: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if remaining == 0 {
            out.push(acc.clone());
            return;
        }
        let top = max_part.min(remaining);
        let mut p = top;
        while p >= min_part {
            acc.push(p as u32);
            rec(remaining - p, p, min_part, acc, out);
            acc.pop();
            if p == min_part {
                break;
            }
            p -= 1;
        }
    }
    rec(total, total, min_part as u64, &mut acc, &mut out);
    out
}

/// `V_k` when `h` is absent, the Verma module `V(k,h)` otherwise.
pub struct VirasoroCtx {
    k: Rational,
    h: Option<Rational>,
    policy: TruncationPolicy,
}

pub fn build_virasoro(k: Rational, policy: TruncationPolicy) -> VirasoroCtx {
    VirasoroCtx {
        k,
        h: None,
        policy,
    }
}

pub fn build_verma(k: Rational, h: Rational, policy: TruncationPolicy) -> VirasoroCtx {
    VirasoroCtx {
        k,
        h: Some(h),
        policy,
    }
}

impl VirasoroCtx {
    pub fn k(&self) -> &Rational {
        &self.k
    }

    pub fn highest_weight(&self) -> Option<&Rational> {
        self.h.as_ref()
    }

    fn min_part(&self, role: Role) -> u32 {
        match role {
            Role::Algebra => 2,
            Role::Module => {
                if self.h.is_some() {
                    1
                } else {
                    2
                }
            }
        }
    }

    /// `L(m)` applied to a canonical word, straightened back to the basis.
    pub fn l_act(&self, m: i64, w: &VirasoroMonomial, role: Role) -> State<VirasoroMonomial> {
        let parts = w.parts();
        if parts.is_empty() {
            // bottom vector: |0> in the algebra, |h> in a module
            let module = role == Role::Module && self.h.is_some();
            if m < 0 {
                let creation_ok = if module { -m >= 1 } else { -m >= 2 };
                return if creation_ok {
                    State::monomial(VirasoroMonomial {
                        parts: vec![(-m) as u32],
                    })
                } else {
                    State::zero()
                };
            }
            if m == 0 && module {
                return State::scaled_monomial(w.clone(), self.h.clone().unwrap());
            }
            return State::zero();
        }
        let n1 = parts[0] as i64;
        if -m >= n1 {
            let mut new_parts = Vec::with_capacity(parts.len() + 1);
            new_parts.push((-m) as u32);
            new_parts.extend_from_slice(parts);
            return State::monomial(VirasoroMonomial { parts: new_parts });
        }
        // [L(m), L(-n1)] = (m + n1) L(m - n1) + delta_{m,n1} (m^3 - m)/12 k
        let tail = VirasoroMonomial {
            parts: parts[1..].to_vec(),
        };
        let mut out = State::zero();
        let inner = self.l_act(m, &tail, role);
        for (mono, c) in inner.iter() {
            out.add_scaled(&self.l_act(-n1, mono, role), c);
        }
        if m + n1 != 0 {
            let bracket = self.l_act(m - n1, &tail, role);
            out.add_scaled(&bracket, &Rational::from(m + n1));
        }
        if m == n1 {
            let central = &Rational::new(m * m * m - m, 12) * &self.k;
            out.insert_add(tail, central);
        }
        out
    }
}

/// Discrete-series data: central charge `c_m` and the table of `h^m_{r,s}`
/// for `1 <= s <= r <= m + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteSeries {
    pub m: u32,
    pub c: Rational,
    /// Rows `(r, s, h)` sorted by `(r, s)`.
    pub entries: Vec<(u32, u32, Rational)>,
}

/// `c_m = 1 - 6/((m+2)(m+3))` and
/// `h^m_{r,s} = (((m+3)r - (m+2)s)^2 - 1) / (4(m+2)(m+3))`.
pub fn discrete_series(m: u32) -> DiscreteSeries {
    let m = m as i64;
    let denom = (m + 2) * (m + 3);
    let c = &Rational::one() - &Rational::new(6, denom);
    let mut entries = Vec::new();
    for r in 1..=(m + 1) {
        for s in 1..=r {
            let t = (m + 3) * r - (m + 2) * s;
            let h = Rational::new(t * t - 1, 4 * denom);
            entries.push((r as u32, s as u32, h));
        }
    }
    DiscreteSeries {
        m: m as u32,
        c,
        entries,
    }
}

impl VoaContext for VirasoroCtx {
    type Monomial = VirasoroMonomial;

    fn tag(&self) -> &'static str {
        "virasoro"
    }

    fn policy(&self) -> &TruncationPolicy {
        &self.policy
    }

    fn is_module(&self) -> bool {
        self.h.is_some()
    }

    fn period(&self) -> u32 {
        1
    }

    fn central_charge(&self) -> Rational {
        self.k.clone()
    }

    fn vacuum_monomial(&self) -> VirasoroMonomial {
        VirasoroMonomial::empty()
    }

    fn omega(&self) -> State<VirasoroMonomial> {
        State::monomial(VirasoroMonomial { parts: vec![2] })
    }

    fn generators(&self) -> Vec<(String, State<VirasoroMonomial>)> {
        vec![("L".to_string(), self.omega())]
    }

    fn weight(&self, m: &VirasoroMonomial, role: Role) -> Rational {
        let base = Rational::from(m.weight() as i64);
        match (role, &self.h) {
            (Role::Module, Some(h)) => &base + h,
            _ => base,
        }
    }

    fn min_weight(&self, role: Role) -> Rational {
        match (role, &self.h) {
            (Role::Module, Some(h)) => h.clone(),
            _ => Rational::zero(),
        }
    }

    fn basis_at(&self, weight: &Rational, role: Role) -> Result<Vec<VirasoroMonomial>, VoaError> {
        let depth = match (role, &self.h) {
            (Role::Module, Some(h)) => weight - h,
            _ => weight.clone(),
        };
        let Some(p) = depth.to_i64().filter(|p| *p >= 0) else {
            return Ok(Vec::new());
        };
        Ok(partitions_min(p as u64, self.min_part(role))
            .into_iter()
            .map(|parts| VirasoroMonomial { parts })
            .collect())
    }

    fn validate_monomial(&self, m: &VirasoroMonomial) -> Result<(), VoaError> {
        let ok = m.parts().windows(2).all(|w| w[0] >= w[1])
            && m.parts().iter().all(|&n| n >= 1);
        if ok {
            Ok(())
        } else {
            Err(VoaError::MonomialNotInContext(m.to_string()))
        }
    }

    fn is_vacuum(&self, m: &VirasoroMonomial) -> bool {
        m.parts().is_empty()
    }

    fn is_generator(&self, m: &VirasoroMonomial) -> bool {
        m.parts() == [2]
    }

    fn peel(&self, m: &VirasoroMonomial) -> Option<(VirasoroMonomial, i64, VirasoroMonomial)> {
        if m.parts().is_empty() || self.is_generator(m) {
            return None;
        }
        let n1 = m.parts()[0] as i64;
        let rest = VirasoroMonomial {
            parts: m.parts()[1..].to_vec(),
        };
        Some((VirasoroMonomial { parts: vec![2] }, -n1 + 1, rest))
    }

    fn generator_mode(
        &self,
        g: &VirasoroMonomial,
        n: &Rational,
        w: &VirasoroMonomial,
        role: Role,
    ) -> Result<State<VirasoroMonomial>, VoaError> {
        debug_assert!(self.is_generator(g));
        let Some(n) = n.to_i64() else {
            return Ok(State::zero());
        };
        // omega_n = L(n - 1)
        Ok(self.l_act(n - 1, w, role))
    }

    fn mode_in_sector(&self, _u: &VirasoroMonomial, n: &Rational, _role: Role) -> bool {
        n.is_integer()
    }

    fn realize(&self, ast: &StateAst, role: Role) -> Result<State<VirasoroMonomial>, ExprError> {
        let mut out = State::zero();
        for term in &ast.terms {
            let mut modes = Vec::new();
            for (factor, power) in &term.factors {
                match factor {
                    FactorAst::Vir { mode } => {
                        if *mode >= 0 {
                            return Err(ExprError::new(
                                term.column,
                                "state factors need negative modes",
                            ));
                        }
                        for _ in 0..*power {
                            modes.push(*mode);
                        }
                    }
                    other => {
                        return Err(ExprError::new(
                            term.column,
                            format!("unknown generator {other:?} for the virasoro construction"),
                        ))
                    }
                }
            }
            // apply right to left, straightening as we go
            let mut state = State::monomial(VirasoroMonomial::empty());
            for &m in modes.iter().rev() {
                let mut next = State::zero();
                for (mono, c) in state.iter() {
                    next.add_scaled(&self.l_act(m, mono, role), c);
                }
                state = next;
            }
            out.add_scaled(&state, &term.coeff);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Evaluator;
    use crate::rational::rat;

    fn vk(k: Rational) -> VirasoroCtx {
        build_virasoro(k, TruncationPolicy::with_cap(24))
    }

    #[test]
    fn vacuum_kills_l_minus_one() {
        let ctx = vk(rat(1, 2));
        let got = ctx.parse_state("L(-1) |0>", Role::Algebra).unwrap();
        assert!(got.is_zero());
        // and in the Verma module L(-1) acts freely
        let m = build_verma(rat(1, 2), rat(1, 3), TruncationPolicy::with_cap(24));
        let got = m.parse_state("L(-1) |0>", Role::Module).unwrap();
        assert_eq!(got, State::monomial(VirasoroMonomial::from_parts(vec![1])));
    }

    #[test]
    fn graded_dimensions_restricted_partitions() {
        let ctx = vk(Rational::one());
        let dims: Vec<usize> = (0..=6)
            .map(|w| ctx.graded_dimension(&Rational::from(w)).unwrap())
            .collect();
        assert_eq!(dims, vec![1, 0, 1, 1, 2, 2, 4]);
    }

    #[test]
    fn verma_top_data() {
        let ctx = build_verma(rat(7, 10), rat(3, 80), TruncationPolicy::with_cap(24));
        let ev = Evaluator::new(&ctx);
        let top = ctx.vacuum(); // the |0> literal denotes the top vector here
        let l0 = ev.virasoro(0, &top).unwrap();
        assert_eq!(l0, top.scale(&rat(3, 80)));
        assert_eq!(ctx.central_charge(), rat(7, 10));
    }

    #[test]
    fn straightening_matches_bracket() {
        // L(-2) L(-3) |0> = L(-3) L(-2) |0> + L(-5) |0>
        let ctx = vk(Rational::from(3));
        let got = ctx.parse_state("L(-2) L(-3) |0>", Role::Algebra).unwrap();
        let expected = ctx
            .parse_state("L(-3) L(-2) |0> + L(-5) |0>", Role::Algebra)
            .unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn central_term_on_vacuum() {
        // [L(2), L(-2)] |0> = 4 L(0) |0> + (1/2) k |0> = (1/2) k |0>
        let k = rat(-26, 7);
        let ctx = vk(k.clone());
        let ev = Evaluator::new(&ctx);
        let omega = ctx.omega();
        let l2_omega = ev.virasoro(2, &omega).unwrap();
        assert_eq!(l2_omega, ctx.vacuum().scale(&(&k / &Rational::from(2))));
    }

    #[test]
    fn discrete_series_small_m() {
        let s0 = discrete_series(0);
        assert_eq!(s0.c, Rational::zero());
        assert_eq!(s0.entries, vec![(1, 1, Rational::zero())]);

        let s1 = discrete_series(1);
        assert_eq!(s1.c, rat(1, 2));
        assert_eq!(
            s1.entries,
            vec![
                (1, 1, Rational::zero()),
                (2, 1, rat(1, 2)),
                (2, 2, rat(1, 16)),
            ]
        );

        let s2 = discrete_series(2);
        assert_eq!(s2.c, rat(7, 10));
        assert_eq!(s2.entries[0], (1, 1, Rational::zero()));
        // remaining values from the closed formula
        let expect = |r: i64, s: i64| {
            let t = 5 * r - 4 * s;
            Rational::new(t * t - 1, 80)
        };
        for (r, s, h) in &s2.entries {
            assert_eq!(*h, expect(*r as i64, *s as i64));
        }
    }

    #[test]
    fn discrete_series_monotone_and_nonnegative() {
        let mut prev = Rational::from(-1);
        for m in 0..12 {
            let s = discrete_series(m);
            assert!(s.c > prev);
            assert!(s.c < Rational::one());
            prev = s.c.clone();
            for (_, _, h) in &s.entries {
                assert!(!h.is_negative());
            }
        }
    }
}
