//! Affine sl2 at level k: the vacuum module with currents as generators, the
//! Sugawara conformal vector, the maximal-ideal generator at positive integer
//! level, and quotient-reduced computations in `L(k,0)`.
//!
//! The structure-constant table is data, so another three-generator algebra
//! can be supplied through the spec document; only sl2 ships.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::context::{Role, TruncationPolicy, VoaContext, VoaError};
use crate::eval::Evaluator;
use crate::expr::{ExprError, FactorAst, StateAst};
use crate::linalg::{mat_inverse, Rref};
use crate::rational::Rational;
use crate::state::State;

pub const GEN_NAMES: [char; 3] = ['e', 'h', 'f'];

fn gen_index(name: char) -> Option<usize> {
    GEN_NAMES.iter().position(|&g| g == name)
}

/// Brackets and invariant form on the three-dimensional generator basis.
#[derive(Clone, Debug)]
pub struct StructureTable {
    /// `brackets[x][y]` lists `(z, c)` with `[x, y] = sum c z`.
    pub brackets: Vec<Vec<Vec<(usize, Rational)>>>,
    /// `form[x][y] = (x, y)`, symmetric, normalized so the long root has
    /// square length 2.
    pub form: Vec<Vec<Rational>>,
}

impl StructureTable {
    pub fn sl2() -> Self {
        let z = || Vec::new();
        let one = Rational::one;
        let e = 0;
        let h = 1;
        let f = 2;
        let mut brackets = vec![vec![z(), z(), z()], vec![z(), z(), z()], vec![z(), z(), z()]];
        brackets[e][h] = vec![(e, Rational::from(-2))];
        brackets[h][e] = vec![(e, Rational::from(2))];
        brackets[e][f] = vec![(h, one())];
        brackets[f][e] = vec![(h, Rational::from(-1))];
        brackets[h][f] = vec![(f, Rational::from(-2))];
        brackets[f][h] = vec![(f, Rational::from(2))];
        let mut form = vec![vec![Rational::zero(); 3]; 3];
        form[e][f] = one();
        form[f][e] = one();
        form[h][h] = Rational::from(2);
        StructureTable { brackets, form }
    }

    /// `([x,y], z) = (x, [y,z])` on all basis triples.
    pub fn verify_invariance(&self) -> Result<(), VoaError> {
        for x in 0..3 {
            for y in 0..3 {
                for z in 0..3 {
                    let mut lhs = Rational::zero();
                    for (w, c) in &self.brackets[x][y] {
                        lhs += &(c * &self.form[*w][z]);
                    }
                    let mut rhs = Rational::zero();
                    for (w, c) in &self.brackets[y][z] {
                        rhs += &(c * &self.form[x][*w]);
                    }
                    if lhs != rhs {
                        return Err(VoaError::InvalidSpec(format!(
                            "form is not invariant on ({}, {}, {})",
                            GEN_NAMES[x], GEN_NAMES[y], GEN_NAMES[z]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Backend parameters: level plus an optional structure-constant override.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AffineSpec {
    pub algebra: String,
    pub level: Rational,
    #[serde(default)]
    pub brackets: Option<BTreeMap<String, Vec<(String, Rational)>>>,
}

impl AffineSpec {
    pub fn sl2(level: Rational) -> Self {
        AffineSpec {
            algebra: "sl2".to_string(),
            level,
            brackets: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, VoaError> {
        serde_json::from_str(text).map_err(|e| VoaError::InvalidSpec(e.to_string()))
    }
}

/// PBW word: factors `(generator, depth)` with depth >= 1, sorted by
/// (depth descending, generator ascending); the word is the operator product
/// read left to right, applied to the vacuum.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PBWMonomial {
    factors: Vec<(u8, u32)>,
}

fn factor_key(f: (u8, u32)) -> (i64, u8) {
    (-(f.1 as i64), f.0)
}

impl PBWMonomial {
    pub fn empty() -> Self {
        PBWMonomial {
            factors: Vec::new(),
        }
    }

    pub fn from_factors(mut factors: Vec<(u8, u32)>) -> Self {
        factors.sort_by_key(|&f| factor_key(f));
        PBWMonomial { factors }
    }

    pub fn factors(&self) -> &[(u8, u32)] {
        &self.factors
    }

    pub fn weight(&self) -> u64 {
        self.factors.iter().map(|&(_, n)| n as u64).sum()
    }
}

impl fmt::Display for PBWMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "|0>");
        }
        let mut i = 0;
        while i < self.factors.len() {
            let (g, n) = self.factors[i];
            let mut count = 1;
            while i + count < self.factors.len() && self.factors[i + count] == (g, n) {
                count += 1;
            }
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}(-{})", GEN_NAMES[g as usize], n)?;
            if count > 1 {
                write!(f, "^{count}")?;
            }
            i += count;
        }
        write!(f, " |0>")
    }
}

/// The level-k vacuum module as a vertex operator algebra (k noncritical).
pub struct AffineCtx {
    table: StructureTable,
    level: Rational,
    dual_coxeter: Rational,
    policy: TruncationPolicy,
}

pub fn build_affine(spec: &AffineSpec, policy: TruncationPolicy) -> Result<AffineCtx, VoaError> {
    if spec.algebra != "sl2" {
        return Err(VoaError::InvalidSpec(format!(
            "unsupported algebra '{}': only sl2 ships",
            spec.algebra
        )));
    }
    let mut table = StructureTable::sl2();
    if let Some(over) = &spec.brackets {
        for (key, value) in over {
            let mut gens = key.split(',').map(|s| s.trim());
            let parse_gen = |s: Option<&str>| -> Result<usize, VoaError> {
                s.and_then(|s| s.chars().next())
                    .and_then(gen_index)
                    .ok_or_else(|| VoaError::InvalidSpec(format!("bad bracket key '{key}'")))
            };
            let x = parse_gen(gens.next())?;
            let y = parse_gen(gens.next())?;
            let mut entries = Vec::new();
            for (g, c) in value {
                let z = g
                    .chars()
                    .next()
                    .and_then(gen_index)
                    .ok_or_else(|| VoaError::InvalidSpec(format!("bad generator '{g}'")))?;
                entries.push((z, c.clone()));
            }
            table.brackets[x][y] = entries.clone();
            table.brackets[y][x] = entries
                .into_iter()
                .map(|(z, c)| (z, -c))
                .collect();
        }
    }
    table.verify_invariance()?;
    let dual_coxeter = Rational::from(2);
    if spec.level == -&dual_coxeter {
        return Err(VoaError::CriticalLevel);
    }
    Ok(AffineCtx {
        table,
        level: spec.level.clone(),
        dual_coxeter,
        policy,
    })
}

impl AffineCtx {
    pub fn level(&self) -> &Rational {
        &self.level
    }

    pub fn generator_state(&self, gen: usize) -> State<PBWMonomial> {
        State::monomial(PBWMonomial::from_factors(vec![(gen as u8, 1)]))
    }

    /// `x(m)` applied to a canonical word, straightened back to the basis.
    pub fn current_act(&self, gen: usize, m: i64, w: &PBWMonomial) -> State<PBWMonomial> {
        let factors = w.factors();
        if factors.is_empty() {
            return if m < 0 {
                State::monomial(PBWMonomial {
                    factors: vec![(gen as u8, (-m) as u32)],
                })
            } else {
                State::zero()
            };
        }
        let (y, ny) = factors[0];
        let n = -(ny as i64);
        if m < 0 && (m, gen as u8) <= (n, y) {
            let mut new_factors = Vec::with_capacity(factors.len() + 1);
            new_factors.push((gen as u8, (-m) as u32));
            new_factors.extend_from_slice(factors);
            return State::monomial(PBWMonomial {
                factors: new_factors,
            });
        }
        // x(m) y(n) = y(n) x(m) + [x,y](m+n) + (x,y) m delta_{m+n,0} k
        let tail = PBWMonomial {
            factors: factors[1..].to_vec(),
        };
        let mut out = State::zero();
        let inner = self.current_act(gen, m, &tail);
        for (mono, c) in inner.iter() {
            out.add_scaled(&self.current_act(y as usize, n, mono), c);
        }
        for (z, c) in &self.table.brackets[gen][y as usize] {
            let part = self.current_act(*z, m + n, &tail);
            out.add_scaled(&part, c);
        }
        if m + n == 0 {
            let central = &(&self.table.form[gen][y as usize] * &Rational::from(m)) * &self.level;
            out.insert_add(tail, central);
        }
        out
    }
}

/// `(e(-1))^(k+1) |0>`, the generator of the maximal ideal of the level-k
/// vacuum algebra for positive integral k.
pub fn level_ideal_generator(ctx: &AffineCtx) -> Result<State<PBWMonomial>, VoaError> {
    let Some(k) = ctx.level.to_i64().filter(|k| *k > 0) else {
        return Err(VoaError::LevelNotPositiveInteger(ctx.level.clone()));
    };
    Ok(State::monomial(PBWMonomial::from_factors(vec![
        (0, 1);
        (k + 1) as usize
    ])))
}

/// The span of an ideal inside the weight-truncated algebra, closed under all
/// generator modes, with reduction to quotient representatives.
pub struct IdealSpan {
    index: BTreeMap<PBWMonomial, usize>,
    monomials: Vec<PBWMonomial>,
    rref: Rref,
    cap: Rational,
}

impl IdealSpan {
    /// Closes `seed` under the generator modes within the context weight cap.
    pub fn generate(ctx: &AffineCtx, seed: &State<PBWMonomial>) -> Result<IdealSpan, VoaError> {
        let cap = ctx.policy().weight_cap.clone();
        let cap_i = cap
            .to_i64()
            .ok_or_else(|| VoaError::CapInfeasible(cap.clone()))?;
        let mut monomials = Vec::new();
        for w in 0..=cap_i {
            monomials.extend(ctx.basis_at(&Rational::from(w), Role::Algebra)?);
        }
        let index: BTreeMap<PBWMonomial, usize> = monomials
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, m)| (m, i))
            .collect();
        let mut span = IdealSpan {
            index,
            monomials,
            rref: Rref::new(),
            cap,
        };
        let mut queue: Vec<State<PBWMonomial>> = vec![seed.clone()];
        while let Some(v) = queue.pop() {
            if v.is_zero() {
                continue;
            }
            let coords = span.coords(&v)?;
            if !span.rref.insert(coords) {
                continue;
            }
            let wt = ctx
                .max_weight(&v, Role::Algebra)
                .expect("nonzero state")
                .to_i64()
                .expect("integer weight");
            for gen in 0..3 {
                for n in (wt - cap_i)..=wt {
                    let mut next = State::zero();
                    for (m, c) in v.iter() {
                        next.add_scaled(&ctx.current_act(gen, n, m), c);
                    }
                    if !next.is_zero() {
                        queue.push(next);
                    }
                }
            }
        }
        Ok(span)
    }

    fn coords(&self, v: &State<PBWMonomial>) -> Result<BTreeMap<usize, Rational>, VoaError> {
        let mut out = BTreeMap::new();
        for (m, c) in v.iter() {
            let Some(&i) = self.index.get(m) else {
                return Err(VoaError::CapInfeasible(self.cap.clone()));
            };
            out.insert(i, c.clone());
        }
        Ok(out)
    }

    pub fn rank(&self) -> usize {
        self.rref.rank()
    }

    pub fn contains(&self, v: &State<PBWMonomial>) -> Result<bool, VoaError> {
        Ok(self.rref.reduce(&self.coords(v)?).is_empty())
    }

    /// Canonical representative of the class of `v` modulo the ideal.
    pub fn reduce(&self, v: &State<PBWMonomial>) -> Result<State<PBWMonomial>, VoaError> {
        let reduced = self.rref.reduce(&self.coords(v)?);
        Ok(State::from_terms(
            reduced
                .into_iter()
                .map(|(i, c)| (self.monomials[i].clone(), c)),
        ))
    }

    pub fn is_pivot_monomial(&self, m: &PBWMonomial) -> bool {
        self.index.get(m).is_some_and(|&i| self.rref.is_pivot(i))
    }
}

/// Mode action computed in the vacuum algebra, then reduced modulo the ideal.
pub fn quotient_mode_action(
    ctx: &AffineCtx,
    u: &State<PBWMonomial>,
    n: &Rational,
    w: &State<PBWMonomial>,
    ideal: &IdealSpan,
) -> Result<State<PBWMonomial>, VoaError> {
    let raw = Evaluator::new(ctx).mode(u, n, w)?;
    ideal.reduce(&raw)
}

/// The rational quotient `L(k,0)`: the vacuum algebra with every result
/// reduced to ideal-free representatives.
pub struct AffineQuotientCtx {
    inner: AffineCtx,
    ideal: IdealSpan,
}

/// Builds `L(k,0)` for positive integral k by quotienting the level ideal.
pub fn build_level_quotient(
    spec: &AffineSpec,
    policy: TruncationPolicy,
) -> Result<AffineQuotientCtx, VoaError> {
    let inner = build_affine(spec, policy)?;
    let seed = level_ideal_generator(&inner)?;
    let ideal = IdealSpan::generate(&inner, &seed)?;
    Ok(AffineQuotientCtx { inner, ideal })
}

impl AffineQuotientCtx {
    pub fn ideal(&self) -> &IdealSpan {
        &self.ideal
    }

    pub fn inner(&self) -> &AffineCtx {
        &self.inner
    }

    pub fn generator_state(&self, gen: usize) -> State<PBWMonomial> {
        self.inner.generator_state(gen)
    }
}

macro_rules! affine_realize {
    () => {
        fn realize(&self, ast: &StateAst, _role: Role) -> Result<State<PBWMonomial>, ExprError> {
            let mut out = State::zero();
            for term in &ast.terms {
                let mut modes: Vec<(usize, i64)> = Vec::new();
                for (factor, power) in &term.factors {
                    match factor {
                        FactorAst::Aff { gen, mode } => {
                            let g = gen_index(*gen).expect("parser emits e/h/f only");
                            if *mode >= 0 {
                                return Err(ExprError::new(
                                    term.column,
                                    "state factors need negative modes",
                                ));
                            }
                            for _ in 0..*power {
                                modes.push((g, *mode));
                            }
                        }
                        other => {
                            return Err(ExprError::new(
                                term.column,
                                format!("unknown generator {other:?} for the affine construction"),
                            ))
                        }
                    }
                }
                let mut state = State::monomial(PBWMonomial::empty());
                for &(g, m) in modes.iter().rev() {
                    let mut next = State::zero();
                    for (mono, c) in state.iter() {
                        next.add_scaled(&self.raw_act(g, m, mono), c);
                    }
                    state = next;
                }
                state = self
                    .post_realize(&state)
                    .map_err(|e| ExprError::new(term.column, e))?;
                out.add_scaled(&state, &term.coeff);
            }
            Ok(out)
        }
    };
}

impl AffineCtx {
    fn raw_act(&self, gen: usize, m: i64, w: &PBWMonomial) -> State<PBWMonomial> {
        self.current_act(gen, m, w)
    }

    fn post_realize(&self, s: &State<PBWMonomial>) -> Result<State<PBWMonomial>, VoaError> {
        Ok(s.clone())
    }

    fn sugawara(&self) -> State<PBWMonomial> {
        // omega = 1/(2(k + hv)) sum_i a_i(-1) a^i(-1) |0> over dual bases
        let binv = mat_inverse(&self.table.form).expect("invariant form is nondegenerate");
        let scale = (&Rational::from(2) * &(&self.level + &self.dual_coxeter)).recip();
        let mut out = State::zero();
        for i in 0..3 {
            for j in 0..3 {
                if binv[i][j].is_zero() {
                    continue;
                }
                let inner = self.current_act(j, -1, &PBWMonomial::empty());
                for (mono, c) in inner.iter() {
                    let word = self.current_act(i, -1, mono);
                    out.add_scaled(&word, &(&binv[i][j] * c));
                }
            }
        }
        out.scale(&scale)
    }
}

impl AffineQuotientCtx {
    fn raw_act(&self, gen: usize, m: i64, w: &PBWMonomial) -> State<PBWMonomial> {
        self.inner.current_act(gen, m, w)
    }

    fn post_realize(&self, s: &State<PBWMonomial>) -> Result<State<PBWMonomial>, VoaError> {
        self.ideal.reduce(s)
    }
}

impl VoaContext for AffineCtx {
    type Monomial = PBWMonomial;

    fn tag(&self) -> &'static str {
        "affine"
    }

    fn policy(&self) -> &TruncationPolicy {
        &self.policy
    }

    fn is_module(&self) -> bool {
        false
    }

    fn period(&self) -> u32 {
        1
    }

    fn central_charge(&self) -> Rational {
        // k dim(g) / (k + hv)
        &(&self.level * &Rational::from(3)) / &(&self.level + &self.dual_coxeter)
    }

    fn vacuum_monomial(&self) -> PBWMonomial {
        PBWMonomial::empty()
    }

    fn omega(&self) -> State<PBWMonomial> {
        self.sugawara()
    }

    fn generators(&self) -> Vec<(String, State<PBWMonomial>)> {
        (0..3)
            .map(|g| (GEN_NAMES[g].to_string(), self.generator_state(g)))
            .collect()
    }

    fn weight(&self, m: &PBWMonomial, _role: Role) -> Rational {
        Rational::from(m.weight() as i64)
    }

    fn min_weight(&self, _role: Role) -> Rational {
        Rational::zero()
    }

    fn basis_at(&self, weight: &Rational, _role: Role) -> Result<Vec<PBWMonomial>, VoaError> {
        let Some(p) = weight.to_i64().filter(|p| *p >= 0) else {
            return Ok(Vec::new());
        };
        Ok(pbw_words(p as u64))
    }

    fn validate_monomial(&self, m: &PBWMonomial) -> Result<(), VoaError> {
        let sorted = m
            .factors()
            .windows(2)
            .all(|w| factor_key(w[0]) <= factor_key(w[1]));
        let ok = sorted && m.factors().iter().all(|&(g, n)| g < 3 && n >= 1);
        if ok {
            Ok(())
        } else {
            Err(VoaError::MonomialNotInContext(m.to_string()))
        }
    }

    fn is_vacuum(&self, m: &PBWMonomial) -> bool {
        m.factors().is_empty()
    }

    fn is_generator(&self, m: &PBWMonomial) -> bool {
        m.factors().len() == 1 && m.factors()[0].1 == 1
    }

    fn peel(&self, m: &PBWMonomial) -> Option<(PBWMonomial, i64, PBWMonomial)> {
        if m.factors().is_empty() || self.is_generator(m) {
            return None;
        }
        let (g, n) = m.factors()[0];
        let rest = PBWMonomial {
            factors: m.factors()[1..].to_vec(),
        };
        Some((
            PBWMonomial {
                factors: vec![(g, 1)],
            },
            -(n as i64),
            rest,
        ))
    }

    fn generator_mode(
        &self,
        g: &PBWMonomial,
        n: &Rational,
        w: &PBWMonomial,
        _role: Role,
    ) -> Result<State<PBWMonomial>, VoaError> {
        debug_assert!(self.is_generator(g));
        let Some(n) = n.to_i64() else {
            return Ok(State::zero());
        };
        Ok(self.current_act(g.factors()[0].0 as usize, n, w))
    }

    fn mode_in_sector(&self, _u: &PBWMonomial, n: &Rational, _role: Role) -> bool {
        n.is_integer()
    }

    affine_realize!();
}

impl VoaContext for AffineQuotientCtx {
    type Monomial = PBWMonomial;

    fn tag(&self) -> &'static str {
        "affine-quotient"
    }

    fn policy(&self) -> &TruncationPolicy {
        self.inner.policy()
    }

    fn is_module(&self) -> bool {
        false
    }

    fn period(&self) -> u32 {
        1
    }

    fn central_charge(&self) -> Rational {
        self.inner.central_charge()
    }

    fn vacuum_monomial(&self) -> PBWMonomial {
        PBWMonomial::empty()
    }

    fn omega(&self) -> State<PBWMonomial> {
        self.ideal
            .reduce(&self.inner.omega())
            .expect("omega within cap")
    }

    fn generators(&self) -> Vec<(String, State<PBWMonomial>)> {
        self.inner.generators()
    }

    fn weight(&self, m: &PBWMonomial, role: Role) -> Rational {
        self.inner.weight(m, role)
    }

    fn min_weight(&self, role: Role) -> Rational {
        self.inner.min_weight(role)
    }

    fn basis_at(&self, weight: &Rational, role: Role) -> Result<Vec<PBWMonomial>, VoaError> {
        Ok(self
            .inner
            .basis_at(weight, role)?
            .into_iter()
            .filter(|m| !self.ideal.is_pivot_monomial(m))
            .collect())
    }

    fn validate_monomial(&self, m: &PBWMonomial) -> Result<(), VoaError> {
        self.inner.validate_monomial(m)
    }

    fn is_vacuum(&self, m: &PBWMonomial) -> bool {
        m.factors().is_empty()
    }

    fn is_generator(&self, m: &PBWMonomial) -> bool {
        self.inner.is_generator(m)
    }

    fn peel(&self, m: &PBWMonomial) -> Option<(PBWMonomial, i64, PBWMonomial)> {
        self.inner.peel(m)
    }

    fn generator_mode(
        &self,
        g: &PBWMonomial,
        n: &Rational,
        w: &PBWMonomial,
        role: Role,
    ) -> Result<State<PBWMonomial>, VoaError> {
        let raw = self.inner.generator_mode(g, n, w, role)?;
        self.ideal.reduce(&raw)
    }

    fn mode_in_sector(&self, _u: &PBWMonomial, n: &Rational, _role: Role) -> bool {
        n.is_integer()
    }

    affine_realize!();
}

/// PBW words of a given total depth: partitions with each part colored by a
/// generator, in canonical order.
fn pbw_words(total: u64) -> Vec<PBWMonomial> {
    let mut out = Vec::new();
    let mut acc: Vec<(u8, u32)> = Vec::new();
    // enumerate factors in canonical order: (depth desc, gen asc)
    fn rec(remaining: u64, bound: (u32, u8), acc: &mut Vec<(u8, u32)>, out: &mut Vec<PBWMonomial>) {
        if remaining == 0 {
            out.push(PBWMonomial {
                factors: acc.clone(),
            });
            return;
        }
        let dmax = bound.0.min(remaining as u32);
        for d in (1..=dmax).rev() {
            let gmin = if d == bound.0 { bound.1 } else { 0 };
            for g in gmin..3 {
                acc.push((g, d));
                rec(remaining - d as u64, (d, g), acc, out);
                acc.pop();
            }
        }
    }
    rec(total, (total.min(u32::MAX as u64) as u32, 0), &mut acc, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn level1() -> AffineCtx {
        build_affine(&AffineSpec::sl2(Rational::one()), TruncationPolicy::with_cap(16)).unwrap()
    }

    #[test]
    fn critical_level_rejected() {
        let err = build_affine(&AffineSpec::sl2(Rational::from(-2)), TruncationPolicy::with_cap(4));
        assert!(matches!(err, Err(VoaError::CriticalLevel)));
        // k = 0 and k = +2 are fine
        assert!(build_affine(&AffineSpec::sl2(Rational::zero()), TruncationPolicy::with_cap(4)).is_ok());
        assert!(build_affine(&AffineSpec::sl2(Rational::from(2)), TruncationPolicy::with_cap(4)).is_ok());
    }

    #[test]
    fn bracket_base_cases() {
        let ctx = level1();
        // e(0) f(-1)|0> = h(-1)|0>
        let ev = Evaluator::new(&ctx);
        let e = ctx.generator_state(0);
        let f = ctx.generator_state(2);
        let got = ev.mode(&e, &Rational::zero(), &f).unwrap();
        assert_eq!(got, ctx.generator_state(1));
        // e(1) f(-1)|0> = (e,f) k |0> = |0> at level 1
        let got = ev.mode(&e, &Rational::one(), &f).unwrap();
        assert_eq!(got, ctx.vacuum());
    }

    #[test]
    fn sugawara_weight_grading() {
        let ctx = level1();
        let ev = Evaluator::new(&ctx);
        for w in 0..4i64 {
            for m in ctx.basis_at(&Rational::from(w), Role::Algebra).unwrap() {
                let s = State::monomial(m.clone());
                let got = ev.virasoro(0, &s).unwrap();
                assert_eq!(got, s.scale(&Rational::from(w)), "L(0) on {m}");
            }
        }
    }

    #[test]
    fn central_charge_level_one() {
        let ctx = level1();
        assert_eq!(ctx.central_charge(), Rational::one());
        // [L(2), L(-2)]|0> = (c/2)|0> computed through the Sugawara omega
        let ev = Evaluator::new(&ctx);
        let omega = ctx.omega();
        let got = ev.virasoro(2, &omega).unwrap();
        assert_eq!(got, ctx.vacuum().scale(&rat(1, 2)));
    }

    #[test]
    fn pbw_dimension_at_weight_two() {
        let ctx = level1();
        assert_eq!(ctx.graded_dimension(&Rational::from(1)).unwrap(), 3);
        assert_eq!(ctx.graded_dimension(&Rational::from(2)).unwrap(), 9);
    }

    #[test]
    fn ideal_generator_and_singular_checks() {
        let ctx = level1();
        let s = level_ideal_generator(&ctx).unwrap();
        assert_eq!(s, ctx.parse_state("e(-1)^2 |0>", Role::Algebra).unwrap());
        let ev = Evaluator::new(&ctx);
        // annihilated by the raising modes e(0), e(1), h(1), f(1) and all
        // deeper annihilation
        for (gen, n) in [(0usize, 0i64), (0, 1), (1, 1), (2, 1), (0, 2), (1, 2), (2, 2)] {
            let got = ev
                .mode(&ctx.generator_state(gen), &Rational::from(n), &s)
                .unwrap();
            assert!(got.is_zero(), "{}({n}) should kill the ideal generator", GEN_NAMES[gen]);
        }
        // but f(0) does not: it produces -2 e(-1)h(-1)|0> - 2 e(-2)|0>
        let f0 = ev.mode(&ctx.generator_state(2), &Rational::zero(), &s).unwrap();
        let expected = ctx
            .parse_state("-2 * e(-1) h(-1) |0> - 2 * e(-2) |0>", Role::Algebra)
            .unwrap();
        assert_eq!(f0, expected);
        // level 2 generator
        let ctx2 =
            build_affine(&AffineSpec::sl2(Rational::from(2)), TruncationPolicy::with_cap(8)).unwrap();
        let s2 = level_ideal_generator(&ctx2).unwrap();
        assert_eq!(s2, ctx2.parse_state("e(-1)^3 |0>", Role::Algebra).unwrap());
        assert!(
            level_ideal_generator(&build_affine(&AffineSpec::sl2(rat(1, 2)), TruncationPolicy::with_cap(4)).unwrap())
                .is_err()
        );
    }

    #[test]
    fn quotient_dimensions_match_level_one_lattice() {
        // L(1,0) is isomorphic to the A1 lattice algebra; graded dimensions
        // 1, 3, 4, 7 at weights 0..3
        let q = build_level_quotient(&AffineSpec::sl2(Rational::one()), TruncationPolicy::with_cap(8))
            .unwrap();
        let dims: Vec<usize> = (0..=3)
            .map(|w| q.graded_dimension(&Rational::from(w)).unwrap())
            .collect();
        assert_eq!(dims, vec![1, 3, 4, 7]);
        // the ideal at weight 2 is the 5-dimensional zero-mode orbit
        assert_eq!(
            q.inner().graded_dimension(&Rational::from(2)).unwrap() - 5,
            q.graded_dimension(&Rational::from(2)).unwrap()
        );
    }

    #[test]
    fn quotient_kills_ideal_generator() {
        let q = build_level_quotient(&AffineSpec::sl2(Rational::one()), TruncationPolicy::with_cap(8))
            .unwrap();
        let s = q.parse_state("e(-1)^2 |0>", Role::Algebra).unwrap();
        assert!(s.is_zero());
        let ev = Evaluator::new(&q);
        // e(-1) e = class of e(-1)^2 |0> = 0 in the quotient
        let e = q.generator_state(0);
        let got = ev.mode(&e, &Rational::from(-1), &e).unwrap();
        assert!(got.is_zero());
    }
}
