//! Free-bosonic construction: the rank-d Fock space as a vertex operator
//! algebra, its highest-weight modules, and closed-form normal-ordered
//! vertex operators used as an independent oracle for the recursive
//! evaluator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::context::{Role, TruncationPolicy, VoaContext, VoaError};
use crate::expr::{ExprError, FactorAst, StateAst};
use crate::formal::binom;
use crate::linalg::mat_inverse;
use crate::rational::Rational;
use crate::state::State;

/// Backend parameters: rank and symmetric nondegenerate gram matrix, plus the
/// highest-weight vector label of the module (zero for the algebra itself).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeisenbergSpec {
    pub rank: usize,
    #[serde(default)]
    pub gram: Option<Vec<Vec<Rational>>>,
    #[serde(default)]
    pub lambda: Option<Vec<Rational>>,
}

impl HeisenbergSpec {
    pub fn rank(rank: usize) -> Self {
        HeisenbergSpec {
            rank,
            gram: None,
            lambda: None,
        }
    }

    pub fn with_lambda(mut self, lambda: Vec<Rational>) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn from_json(text: &str) -> Result<Self, VoaError> {
        serde_json::from_str(text).map_err(|e| VoaError::InvalidSpec(e.to_string()))
    }
}

/// Product of creation operators applied to the highest-weight vector:
/// a multiset of `(component, depth)` pairs stored sorted.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct FockMonomial {
    factors: Vec<(usize, u32)>,
}

impl FockMonomial {
    pub fn empty() -> Self {
        FockMonomial {
            factors: Vec::new(),
        }
    }

    pub fn from_factors(mut factors: Vec<(usize, u32)>) -> Self {
        factors.sort_unstable();
        FockMonomial { factors }
    }

    pub fn factors(&self) -> &[(usize, u32)] {
        &self.factors
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn depth_weight(&self) -> u64 {
        self.factors.iter().map(|&(_, n)| n as u64).sum()
    }

    pub fn push_factor(&self, comp: usize, depth: u32) -> Self {
        let mut factors = self.factors.clone();
        let pos = factors.partition_point(|f| *f <= (comp, depth));
        factors.insert(pos, (comp, depth));
        FockMonomial { factors }
    }

    pub fn remove_one(&self, comp: usize, depth: u32) -> Option<Self> {
        let pos = self.factors.iter().position(|&f| f == (comp, depth))?;
        let mut factors = self.factors.clone();
        factors.remove(pos);
        Some(FockMonomial { factors })
    }

    /// Distinct factors with multiplicities.
    pub fn runs(&self) -> Vec<(usize, u32, u32)> {
        let mut out: Vec<(usize, u32, u32)> = Vec::new();
        for &(c, n) in &self.factors {
            match out.last_mut() {
                Some((lc, ln, count)) if *lc == c && *ln == n => *count += 1,
                _ => out.push((c, n, 1)),
            }
        }
        out
    }

    pub(crate) fn fmt_factors(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (c, n, count)) in self.runs().into_iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "b({},-{})", c + 1, n)?;
            if count > 1 {
                write!(f, "^{count}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for FockMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "|0>");
        }
        self.fmt_factors(f)?;
        write!(f, " |0>")
    }
}

/// The derivative-field coefficient: mode `m` of `(1/(r-1)!) d^(r-1) b(z)`
/// carries `(-m-1 choose r-1)` next to `z^(-m-r)`.
pub(crate) fn field_coeff(depth: u32, m: i64) -> Rational {
    binom(&Rational::from(-m - 1), (depth - 1) as u64)
}

/// Compositions of `total` into `parts` summands, each `>= 1`.
pub(crate) fn compositions(total: i64, parts: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    if total < parts as i64 {
        return out;
    }
    let mut acc = vec![0i64; parts];
    fn rec(total: i64, idx: usize, acc: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        let parts_left = acc.len() - idx;
        if parts_left == 1 {
            acc[idx] = total;
            out.push(acc.clone());
            return;
        }
        for v in 1..=(total - (parts_left as i64 - 1)) {
            acc[idx] = v;
            rec(total - v, idx + 1, acc, out);
        }
    }
    rec(total, 0, &mut acc, &mut out);
    out
}

/// Multisets of colored parts `(component, depth)` with total depth `total`,
/// over `rank` components.
pub(crate) fn colored_partitions(rank: usize, total: u64) -> Vec<FockMonomial> {
    let mut out = Vec::new();
    if rank == 0 {
        if total == 0 {
            out.push(FockMonomial::empty());
        }
        return out;
    }
    let mut acc: Vec<(usize, u32)> = Vec::new();
    fn rec(
        rank: usize,
        remaining: u64,
        bound: (u32, usize),
        acc: &mut Vec<(usize, u32)>,
        out: &mut Vec<FockMonomial>,
    ) {
        if remaining == 0 {
            out.push(FockMonomial::from_factors(acc.clone()));
            return;
        }
        let dmax = bound.0.min(remaining as u32);
        for d in (1..=dmax).rev() {
            let cmax = if d == bound.0 { bound.1 } else { rank - 1 };
            for c in (0..=cmax).rev() {
                acc.push((c, d));
                rec(rank, remaining - d as u64, (d, c), acc, out);
                acc.pop();
            }
        }
    }
    rec(rank, total, (total.min(u32::MAX as u64) as u32, rank.saturating_sub(1)), &mut acc, &mut out);
    out
}

/// The rank-d free boson context: `M(1)` when `lambda = 0`, the irreducible
/// module `M(1, lambda)` otherwise.
pub struct HeisenbergCtx {
    rank: usize,
    gram: Vec<Vec<Rational>>,
    gram_inv: Vec<Vec<Rational>>,
    lambda: Vec<Rational>,
    /// `<e_i, lambda>` for each component.
    lambda_pairing: Vec<Rational>,
    /// `<lambda, lambda> / 2`, the weight of the top vector.
    top_weight: Rational,
    policy: TruncationPolicy,
}

/// Builds `M(1)` (or `M(1, lambda)` when the spec carries a nonzero label).
pub fn build_m1(spec: &HeisenbergSpec, policy: TruncationPolicy) -> Result<HeisenbergCtx, VoaError> {
    let d = spec.rank;
    if d == 0 {
        return Err(VoaError::InvalidSpec("rank must be positive".into()));
    }
    let gram = match &spec.gram {
        Some(g) => g.clone(),
        None => (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| if i == j { Rational::one() } else { Rational::zero() })
                    .collect()
            })
            .collect(),
    };
    if gram.len() != d || gram.iter().any(|r| r.len() != d) {
        return Err(VoaError::InvalidSpec("gram must be rank x rank".into()));
    }
    for i in 0..d {
        for j in 0..d {
            if gram[i][j] != gram[j][i] {
                return Err(VoaError::InvalidSpec("gram must be symmetric".into()));
            }
        }
    }
    let gram_inv = mat_inverse(&gram).ok_or(VoaError::SingularGram)?;
    let lambda = match &spec.lambda {
        Some(l) => {
            if l.len() != d {
                return Err(VoaError::InvalidSpec("lambda must have length rank".into()));
            }
            l.clone()
        }
        None => vec![Rational::zero(); d],
    };
    let lambda_pairing: Vec<Rational> = (0..d)
        .map(|i| {
            let mut s = Rational::zero();
            for j in 0..d {
                s += &(&gram[i][j] * &lambda[j]);
            }
            s
        })
        .collect();
    let mut norm = Rational::zero();
    for i in 0..d {
        norm += &(&lambda_pairing[i] * &lambda[i]);
    }
    let top_weight = norm / Rational::from(2);
    Ok(HeisenbergCtx {
        rank: d,
        gram,
        gram_inv,
        lambda,
        lambda_pairing,
        top_weight,
        policy,
    })
}

impl HeisenbergCtx {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn gram(&self) -> &[Vec<Rational>] {
        &self.gram
    }

    pub fn lambda(&self) -> &[Rational] {
        &self.lambda
    }

    pub fn generator_state(&self, comp: usize) -> State<FockMonomial> {
        State::monomial(FockMonomial::from_factors(vec![(comp, 1)]))
    }

    fn check_cap(&self, weight: &Rational) -> Result<(), VoaError> {
        if weight > &self.policy.weight_cap {
            return Err(VoaError::WeightCapExceeded {
                weight: weight.clone(),
                cap: self.policy.weight_cap.clone(),
            });
        }
        Ok(())
    }

    /// Closed-form mode of the normal-ordered product of derivative fields:
    /// the coefficient of `z^(-n-1)` in `Y(v, z)` applied to `w`. This is the
    /// evaluation path independent of the recursive iterate formula.
    pub fn free_field_mode(
        &self,
        v: &FockMonomial,
        n: i64,
        w: &State<FockMonomial>,
    ) -> Result<State<FockMonomial>, VoaError> {
        let mut out = State::zero();
        for (wm, wc) in w.iter() {
            let part = self.free_field_mode_monomial(v, n, wm)?;
            out.add_scaled(&part, wc);
        }
        Ok(out)
    }

    fn free_field_mode_monomial(
        &self,
        v: &FockMonomial,
        n: i64,
        w: &FockMonomial,
    ) -> Result<State<FockMonomial>, VoaError> {
        self.validate_monomial(v)?;
        self.validate_monomial(w)?;
        let final_wt = &(&self.weight(v, Role::Algebra) + &self.weight(w, Role::Module))
            - &Rational::from(n + 1);
        if final_wt < self.min_weight(Role::Module) {
            return Ok(State::zero());
        }
        self.check_cap(&final_wt)?;

        let fields = v.factors().to_vec();
        let k = fields.len();
        let mut out = State::zero();
        for mask in 0u32..(1 << k) {
            // bit set: creation side of the normal ordering
            let mut layers: Vec<(i64, Rational, FockMonomial)> =
                vec![(0, Rational::one(), w.clone())];
            for (idx, &(comp, nj)) in fields.iter().enumerate() {
                if mask & (1 << idx) != 0 {
                    continue;
                }
                let mut next = Vec::new();
                for (z, c, f) in &layers {
                    // zero mode: pairing with the module label
                    let pair = &self.lambda_pairing[comp];
                    if !pair.is_zero() {
                        let coeff = &(&field_coeff(nj, 0) * pair) * c;
                        if !coeff.is_zero() {
                            next.push((z - nj as i64, coeff, f.clone()));
                        }
                    }
                    // positive modes contract against creation factors of f
                    for (jc, m, count) in f.runs() {
                        let pairing = &self.gram[comp][jc];
                        if pairing.is_zero() {
                            continue;
                        }
                        let coeff = &(&(&field_coeff(nj, m as i64)
                            * &Rational::from(count as i64 * m as i64))
                            * pairing)
                            * c;
                        if coeff.is_zero() {
                            continue;
                        }
                        let f2 = f.remove_one(jc, m).unwrap();
                        next.push((z - m as i64 - nj as i64, coeff, f2));
                    }
                }
                layers = next;
                if layers.is_empty() {
                    break;
                }
            }
            let cre: Vec<(usize, u32)> = fields
                .iter()
                .enumerate()
                .filter(|(idx, _)| mask & (1 << idx) != 0)
                .map(|(_, &f)| f)
                .collect();
            let cre_depth_sum: i64 = cre.iter().map(|&(_, nj)| nj as i64).sum();
            for (z_ann, c, f) in &layers {
                let w_sum = (-n - 1) - z_ann + cre_depth_sum;
                if cre.is_empty() {
                    if *z_ann == -n - 1 {
                        out.insert_add(f.clone(), c.clone());
                    }
                    continue;
                }
                for comp_weights in compositions(w_sum, cre.len()) {
                    let mut coeff = c.clone();
                    let mut mono = f.clone();
                    for (&(comp, nj), &wj) in cre.iter().zip(&comp_weights) {
                        coeff *= &field_coeff(nj, -wj);
                        if coeff.is_zero() {
                            break;
                        }
                        mono = mono.push_factor(comp, wj as u32);
                    }
                    out.insert_add(mono, coeff);
                }
            }
        }
        Ok(out)
    }
}

impl VoaContext for HeisenbergCtx {
    type Monomial = FockMonomial;

    fn tag(&self) -> &'static str {
        "heisenberg"
    }

    fn policy(&self) -> &TruncationPolicy {
        &self.policy
    }

    fn is_module(&self) -> bool {
        self.lambda.iter().any(|x| !x.is_zero())
    }

    fn period(&self) -> u32 {
        1
    }

    fn central_charge(&self) -> Rational {
        Rational::from(self.rank as i64)
    }

    fn vacuum_monomial(&self) -> FockMonomial {
        FockMonomial::empty()
    }

    fn omega(&self) -> State<FockMonomial> {
        let mut out = State::zero();
        for i in 0..self.rank {
            for j in i..self.rank {
                let coeff = if i == j {
                    &self.gram_inv[i][j] / &Rational::from(2)
                } else {
                    self.gram_inv[i][j].clone()
                };
                out.insert_add(FockMonomial::from_factors(vec![(i, 1), (j, 1)]), coeff);
            }
        }
        out
    }

    fn generators(&self) -> Vec<(String, State<FockMonomial>)> {
        (0..self.rank)
            .map(|i| (format!("b({})", i + 1), self.generator_state(i)))
            .collect()
    }

    fn weight(&self, m: &FockMonomial, role: Role) -> Rational {
        let base = Rational::from(m.depth_weight() as i64);
        match role {
            Role::Algebra => base,
            Role::Module => &base + &self.top_weight,
        }
    }

    fn min_weight(&self, role: Role) -> Rational {
        match role {
            Role::Algebra => Rational::zero(),
            Role::Module => self.top_weight.clone(),
        }
    }

    fn basis_at(&self, weight: &Rational, role: Role) -> Result<Vec<FockMonomial>, VoaError> {
        let depth = match role {
            Role::Algebra => weight.clone(),
            Role::Module => weight - &self.top_weight,
        };
        match depth.to_i64() {
            Some(p) if p >= 0 => Ok(colored_partitions(self.rank, p as u64)),
            _ => Ok(Vec::new()),
        }
    }

    fn validate_monomial(&self, m: &FockMonomial) -> Result<(), VoaError> {
        for &(c, n) in m.factors() {
            if c >= self.rank || n == 0 {
                return Err(VoaError::MonomialNotInContext(m.to_string()));
            }
        }
        Ok(())
    }

    fn is_vacuum(&self, m: &FockMonomial) -> bool {
        m.is_empty()
    }

    fn is_generator(&self, m: &FockMonomial) -> bool {
        m.factors().len() == 1 && m.factors()[0].1 == 1
    }

    fn peel(&self, m: &FockMonomial) -> Option<(FockMonomial, i64, FockMonomial)> {
        if m.is_empty() || self.is_generator(m) {
            return None;
        }
        let (comp, depth) = m.factors()[0];
        let rest = m.remove_one(comp, depth).unwrap();
        Some((
            FockMonomial::from_factors(vec![(comp, 1)]),
            -(depth as i64),
            rest,
        ))
    }

    fn generator_mode(
        &self,
        g: &FockMonomial,
        n: &Rational,
        w: &FockMonomial,
        role: Role,
    ) -> Result<State<FockMonomial>, VoaError> {
        debug_assert!(self.is_generator(g));
        let comp = g.factors()[0].0;
        let Some(n) = n.to_i64() else {
            return Ok(State::zero());
        };
        if n < 0 {
            return Ok(State::monomial(w.push_factor(comp, (-n) as u32)));
        }
        if n == 0 {
            return Ok(match role {
                Role::Algebra => State::zero(),
                Role::Module => {
                    State::scaled_monomial(w.clone(), self.lambda_pairing[comp].clone())
                }
            });
        }
        let mut out = State::zero();
        for (jc, m, count) in w.runs() {
            if m as i64 != n {
                continue;
            }
            let coeff = &Rational::from(count as i64 * n) * &self.gram[comp][jc];
            out.insert_add(w.remove_one(jc, m).unwrap(), coeff);
        }
        Ok(out)
    }

    fn mode_in_sector(&self, _u: &FockMonomial, n: &Rational, _role: Role) -> bool {
        n.is_integer()
    }

    fn realize(&self, ast: &StateAst, _role: Role) -> Result<State<FockMonomial>, ExprError> {
        let mut out = State::zero();
        for term in &ast.terms {
            let mut factors = Vec::new();
            for (factor, power) in &term.factors {
                match factor {
                    FactorAst::Heis { comp, mode } => {
                        if *comp < 1 || *comp > self.rank as i64 {
                            return Err(ExprError::new(
                                term.column,
                                format!("component {comp} out of range 1..={}", self.rank),
                            ));
                        }
                        if *mode >= 0 {
                            return Err(ExprError::new(
                                term.column,
                                "state factors need negative modes",
                            ));
                        }
                        for _ in 0..*power {
                            factors.push(((*comp - 1) as usize, (-*mode) as u32));
                        }
                    }
                    other => {
                        return Err(ExprError::new(
                            term.column,
                            format!("unknown generator {other:?} for the heisenberg construction"),
                        ))
                    }
                }
            }
            out.insert_add(FockMonomial::from_factors(factors), term.coeff.clone());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Evaluator;
    use crate::rational::rat;

    fn ctx_rank1() -> HeisenbergCtx {
        build_m1(&HeisenbergSpec::rank(1), TruncationPolicy::with_cap(24)).unwrap()
    }

    #[test]
    fn omega_of_rank1_identity_gram() {
        let ctx = ctx_rank1();
        let omega = ctx.omega();
        let expected =
            State::scaled_monomial(FockMonomial::from_factors(vec![(0, 1), (0, 1)]), rat(1, 2));
        assert_eq!(omega, expected);
        assert_eq!(ctx.state_weight(&omega, Role::Algebra).unwrap(),
            crate::context::WeightOf::Homogeneous(Rational::from(2)));
    }

    #[test]
    fn singular_gram_rejected() {
        let mut spec = HeisenbergSpec::rank(2);
        spec.gram = Some(vec![
            vec![Rational::from(1), Rational::from(1)],
            vec![Rational::from(1), Rational::from(1)],
        ]);
        assert!(matches!(
            build_m1(&spec, TruncationPolicy::with_cap(8)),
            Err(VoaError::SingularGram)
        ));
    }

    #[test]
    fn annihilation_of_single_quantum() {
        // b(1) b(-1)|0> = <b,b> |0>
        let ctx = ctx_rank1();
        let ev = Evaluator::new(&ctx);
        let u = ctx.generator_state(0);
        let w = ctx.generator_state(0);
        let got = ev.mode(&u, &Rational::one(), &w).unwrap();
        assert_eq!(got, ctx.vacuum());
    }

    #[test]
    fn vacuum_modes() {
        let ctx = ctx_rank1();
        let ev = Evaluator::new(&ctx);
        let w = ctx.generator_state(0);
        assert_eq!(ev.mode(&ctx.vacuum(), &Rational::from(-1), &w).unwrap(), w);
        for n in [-3i64, -2, 0, 1, 5] {
            assert!(ev.mode(&ctx.vacuum(), &Rational::from(n), &w).unwrap().is_zero());
        }
    }

    #[test]
    fn high_modes_annihilate() {
        // u_n w = 0 for n >= wt u + wt w
        let ctx = ctx_rank1();
        let ev = Evaluator::new(&ctx);
        let u = ctx.parse_state("b(1,-2) b(1,-1) |0>", Role::Algebra).unwrap();
        let w = ctx.parse_state("b(1,-1) |0>", Role::Module).unwrap();
        for n in 4..8i64 {
            assert!(ev.mode(&u, &Rational::from(n), &w).unwrap().is_zero());
        }
    }

    #[test]
    fn module_zero_mode_acts_by_pairing() {
        let spec = HeisenbergSpec::rank(2).with_lambda(vec![rat(1, 2), Rational::from(3)]);
        let ctx = build_m1(&spec, TruncationPolicy::with_cap(16)).unwrap();
        assert!(ctx.is_module());
        let ev = Evaluator::new(&ctx);
        let top = ctx.vacuum_monomial();
        let got = ev
            .mode(&ctx.generator_state(1), &Rational::zero(), &State::monomial(top.clone()))
            .unwrap();
        assert_eq!(got, State::scaled_monomial(top, Rational::from(3)));
        // top weight is <lambda, lambda>/2
        assert_eq!(ctx.min_weight(Role::Module), rat(37, 8));
    }

    #[test]
    fn free_field_single_oscillator_is_plain_mode() {
        let ctx = ctx_rank1();
        let v = FockMonomial::from_factors(vec![(0, 1)]);
        let w = ctx.parse_state("b(1,-1)^2 |0>", Role::Module).unwrap();
        for n in -4..4i64 {
            let oracle = ctx.free_field_mode(&v, n, &w).unwrap();
            let ev = Evaluator::new(&ctx);
            let rec = ev.mode(&ctx.generator_state(0), &Rational::from(n), &w).unwrap();
            assert_eq!(oracle, rec, "mode {n}");
        }
    }

    #[test]
    fn l0_eigenvalue_is_weight() {
        let ctx = ctx_rank1();
        let ev = Evaluator::new(&ctx);
        for wt in 0..5u64 {
            for m in colored_partitions(1, wt) {
                let s = State::monomial(m);
                let got = ev.virasoro(0, &s).unwrap();
                assert_eq!(got, s.scale(&Rational::from(wt as i64)));
            }
        }
    }

    #[test]
    fn graded_dimensions_are_partition_numbers() {
        let ctx = ctx_rank1();
        let dims: Vec<usize> = (0..=6)
            .map(|w| ctx.graded_dimension(&Rational::from(w)).unwrap())
            .collect();
        assert_eq!(dims, vec![1, 1, 2, 3, 5, 7, 11]);
    }

    #[test]
    fn parse_print_round_trip() {
        let ctx = ctx_rank1();
        let s = ctx
            .parse_state("3/2 * b(1,-1)^2 |0> - b(1,-3) |0>", Role::Algebra)
            .unwrap();
        let printed = s.to_string();
        let back = ctx.parse_state(&printed, Role::Algebra).unwrap();
        assert_eq!(back, s);
    }
}
