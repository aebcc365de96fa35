//! The construction-backend contract shared by all four example families.

use crate::expr::{ExprError, StateAst};
use crate::rational::Rational;
use crate::state::{BasisMonomial, State};

/// Whether a state is read on the algebra side (operands of vertex operators)
/// or the module side (vectors being acted on). For a vertex operator algebra
/// context the two coincide; module contexts grade and act differently.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Algebra,
    Module,
}

/// Hard bounds applied to every computation. Exceeding the weight cap is an
/// error, never a silent truncation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncationPolicy {
    pub weight_cap: Rational,
    pub mode_window: u32,
}

impl TruncationPolicy {
    pub fn new(weight_cap: Rational, mode_window: u32) -> Self {
        assert!(
            !weight_cap.is_negative(),
            "weight cap must be nonnegative"
        );
        TruncationPolicy {
            weight_cap,
            mode_window,
        }
    }

    /// A generous default for interactive use.
    pub fn with_cap(weight_cap: i64) -> Self {
        TruncationPolicy::new(Rational::from(weight_cap), 8)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VoaError {
    #[error("weight {weight} exceeds the truncation cap {cap}")]
    WeightCapExceeded { weight: Rational, cap: Rational },
    #[error("monomial not in this context: {0}")]
    MonomialNotInContext(String),
    #[error("mode index {mode} is not in the allowed rational sector")]
    InvalidModeSector { mode: Rational },
    #[error("mode index {mode} must be an integer here")]
    NonIntegerMode { mode: Rational },
    #[error("the zero state is rejected here")]
    ZeroState,
    #[error("gram matrix is singular")]
    SingularGram,
    #[error("lattice is not even")]
    LatticeNotEven,
    #[error("lattice gram is not positive definite")]
    LatticeNotPositiveDefinite,
    #[error("critical level rejected: k equals minus the dual Coxeter number")]
    CriticalLevel,
    #[error("level must be a positive integer, got {0}")]
    LevelNotPositiveInteger(Rational),
    #[error("weight cap {0} is infeasible for this computation")]
    CapInfeasible(Rational),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
}

/// Result of asking for the weight of a state: the common `L(0)` eigenvalue
/// of its terms, or the marker for mixed grading.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WeightOf {
    Homogeneous(Rational),
    Inhomogeneous,
}

/// A construction backend: vacuum, conformal vector, grading, canonical basis
/// and the generator mode actions everything else is built from.
///
/// Contexts are immutable after construction; all methods are pure.
pub trait VoaContext {
    type Monomial: BasisMonomial;

    /// Construction tag, e.g. `"heisenberg"`.
    fn tag(&self) -> &'static str;

    fn policy(&self) -> &TruncationPolicy;

    /// True when states on the `Module` side live in a module other than the
    /// algebra itself.
    fn is_module(&self) -> bool;

    /// Declared period `r`: mode indices have denominator dividing `r`.
    fn period(&self) -> u32;

    /// The scalar in the Virasoro central term, `rank V`.
    fn central_charge(&self) -> Rational;

    fn vacuum_monomial(&self) -> Self::Monomial;

    fn vacuum(&self) -> State<Self::Monomial> {
        State::monomial(self.vacuum_monomial())
    }

    /// The conformal vector, as an algebra-side state.
    fn omega(&self) -> State<Self::Monomial>;

    /// Declared homogeneous generators with display names.
    fn generators(&self) -> Vec<(String, State<Self::Monomial>)>;

    fn weight(&self, m: &Self::Monomial, role: Role) -> Rational;

    /// Lowest weight of the grading on the given side.
    fn min_weight(&self, role: Role) -> Rational;

    /// All basis monomials of exactly the given weight.
    fn basis_at(&self, weight: &Rational, role: Role) -> Result<Vec<Self::Monomial>, VoaError>;

    fn validate_monomial(&self, m: &Self::Monomial) -> Result<(), VoaError>;

    fn is_vacuum(&self, m: &Self::Monomial) -> bool;

    /// Base-case monomials whose modes the backend supplies directly.
    fn is_generator(&self, m: &Self::Monomial) -> bool;

    /// Writes a composite monomial as `g_a * rest` with `g` a generator
    /// monomial, `a <= -1`, and `rest` strictly smaller. Returns `None` for
    /// vacuum and generator monomials.
    fn peel(&self, m: &Self::Monomial) -> Option<(Self::Monomial, i64, Self::Monomial)>;

    /// Mode `n` of the generator `g` applied to the monomial `w` on the given
    /// side. Modes outside the allowed sector act as zero.
    fn generator_mode(
        &self,
        g: &Self::Monomial,
        n: &Rational,
        w: &Self::Monomial,
        role: Role,
    ) -> Result<State<Self::Monomial>, VoaError>;

    /// Whether mode index `n` lies in the sector the module forces for the
    /// algebra monomial `u`.
    fn mode_in_sector(&self, u: &Self::Monomial, n: &Rational, role: Role) -> bool;

    /// Builds a state from a parsed expression, validating generators against
    /// this construction.
    fn realize(&self, ast: &StateAst, role: Role) -> Result<State<Self::Monomial>, ExprError>;

    /// Dimension of the homogeneous piece of the module at the given weight.
    fn graded_dimension(&self, weight: &Rational) -> Result<usize, VoaError> {
        Ok(self.basis_at(weight, Role::Module)?.len())
    }

    /// Basis of the lowest-weight (top) homogeneous subspace of the module.
    fn top_basis(&self) -> Result<Vec<Self::Monomial>, VoaError> {
        self.basis_at(&self.min_weight(Role::Module), Role::Module)
    }

    /// All module basis monomials of weight `<= cap`, in (weight, monomial)
    /// order. Only weights in `min_weight + Z` are populated.
    fn basis_up_to(&self, cap: &Rational, role: Role) -> Result<Vec<Self::Monomial>, VoaError> {
        let mut out = Vec::new();
        let mut w = self.min_weight(role);
        while &w <= cap {
            out.extend(self.basis_at(&w, role)?);
            w = &w + &Rational::one();
        }
        Ok(out)
    }

    /// Weight of a state: common eigenvalue or the inhomogeneous marker.
    /// The zero state is rejected.
    fn state_weight(&self, v: &State<Self::Monomial>, role: Role) -> Result<WeightOf, VoaError> {
        if v.is_zero() {
            return Err(VoaError::ZeroState);
        }
        let mut common: Option<Rational> = None;
        for (m, _) in v.iter() {
            let w = self.weight(m, role);
            match &common {
                None => common = Some(w),
                Some(c) if *c == w => {}
                Some(_) => return Ok(WeightOf::Inhomogeneous),
            }
        }
        Ok(WeightOf::Homogeneous(common.unwrap()))
    }

    /// Largest term weight of a nonzero state (for loop bounds).
    fn max_weight(&self, v: &State<Self::Monomial>, role: Role) -> Option<Rational> {
        v.iter().map(|(m, _)| self.weight(m, role)).max()
    }

    /// Splits a state into its homogeneous components, lightest first.
    fn homogeneous_components(
        &self,
        v: &State<Self::Monomial>,
        role: Role,
    ) -> Vec<(Rational, State<Self::Monomial>)> {
        let mut by_weight: std::collections::BTreeMap<Rational, State<Self::Monomial>> =
            std::collections::BTreeMap::new();
        for (m, c) in v.iter() {
            let w = self.weight(m, role);
            by_weight
                .entry(w)
                .or_insert_with(State::zero)
                .insert_add(m.clone(), c.clone());
        }
        by_weight.into_iter().collect()
    }

    /// Parses a state expression in this construction.
    fn parse_state(&self, text: &str, role: Role) -> Result<State<Self::Monomial>, ExprError> {
        let ast = crate::expr::parse(text)?;
        self.realize(&ast, role)
    }
}
