//! Terms, predicates, atoms and substitutions.
//!
//! Ground terms are constants, the reserved constant `*` used for critical
//! instances, or functional terms built from Skolem functions. Every term has
//! a depth, and the canonical term order compares depth first so that
//! congruence-class representatives never get deeper during rewriting.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Identifier of the rule a Skolem function or derived rule stems from.
///
/// Ids are stable across runs: rules translated from an ontology use the
/// axiom's ordinal in the source file (`r1`, `r2`, ...); synthesized rules use
/// prefixed names such as `top:prod` or `eq:sym`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId(Arc<str>);

impl RuleId {
    pub fn new(id: impl Into<Arc<str>>) -> Self {
        RuleId(id.into())
    }

    /// Id for the rule translated from the `n`-th axiom (1-based).
    pub fn axiom(ordinal: usize) -> Self {
        RuleId(format!("r{ordinal}").into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Id of a derived variant (e.g. one of several body renamings).
    pub fn variant(&self, ordinal: usize) -> Self {
        RuleId(format!("{}s{ordinal}", self.0).into())
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A Skolem function symbol. Two symbols are equal iff they name the same
/// existential variable of the same rule.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SkolemFn {
    pub rule_id: RuleId,
    pub var: Arc<str>,
}

impl SkolemFn {
    pub fn new(rule_id: RuleId, var: impl Into<Arc<str>>) -> Self {
        SkolemFn { rule_id, var: var.into() }
    }
}

impl fmt::Display for SkolemFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f[{}:{}]", self.rule_id, self.var)
    }
}

impl fmt::Debug for SkolemFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Interior of a functional term; the depth is cached at construction.
#[derive(PartialEq, Eq, Hash)]
pub struct FunctionalTerm {
    pub skolem: SkolemFn,
    pub args: Vec<Term>,
    depth: u32,
}

/// A ground term: a named constant, the critical constant `*`, or a
/// functional term `f(t1, ..., tn)` over a Skolem function.
///
/// Terms produced by the ontology pipeline only ever carry unary Skolem
/// functions, but the type admits arbitrary arity.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Constant(Arc<str>),
    Star,
    Functional(Arc<FunctionalTerm>),
}

impl Term {
    pub fn constant(name: impl Into<Arc<str>>) -> Self {
        Term::Constant(name.into())
    }

    pub fn functional(skolem: SkolemFn, args: Vec<Term>) -> Self {
        let depth = 1 + args.iter().map(Term::depth).max().unwrap_or(0);
        Term::Functional(Arc::new(FunctionalTerm { skolem, args, depth }))
    }

    /// Nesting depth: constants and `*` have depth 0, a functional term is one
    /// deeper than its deepest argument.
    pub fn depth(&self) -> u32 {
        match self {
            Term::Constant(_) | Term::Star => 0,
            Term::Functional(t) => t.depth,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Term::Constant(_) | Term::Star)
    }

    pub fn skolem(&self) -> Option<&SkolemFn> {
        match self {
            Term::Functional(t) => Some(&t.skolem),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Functional(t) => &t.args,
            _ => &[],
        }
    }

    /// All subterms including the term itself, pre-order.
    pub fn subterms(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        self.collect_subterms(&mut out);
        out
    }

    fn collect_subterms<'a>(&'a self, out: &mut Vec<&'a Term>) {
        out.push(self);
        if let Term::Functional(t) = self {
            for a in &t.args {
                a.collect_subterms(out);
            }
        }
    }

    /// Whether `other` occurs in `self` (the subterm relation is reflexive).
    pub fn contains_subterm(&self, other: &Term) -> bool {
        if self == other {
            return true;
        }
        self.args().iter().any(|a| a.contains_subterm(other))
    }

    /// Maximum number of occurrences of `skolem` along any nesting path.
    fn max_nesting(&self, skolem: &SkolemFn) -> u32 {
        match self {
            Term::Constant(_) | Term::Star => 0,
            Term::Functional(t) => {
                let here = u32::from(&t.skolem == skolem);
                here + t.args.iter().map(|a| a.max_nesting(skolem)).max().unwrap_or(0)
            }
        }
    }

    /// A term is n-cyclic when some Skolem function occurs n+1 times properly
    /// nested inside it.
    pub fn is_n_cyclic(&self, n: u32) -> bool {
        assert!(n >= 1, "cyclicity degree must be at least 1");
        let mut seen = HashSet::new();
        for sub in self.subterms() {
            if let Term::Functional(t) = sub {
                if seen.insert(&t.skolem) && self.max_nesting(&t.skolem) >= n + 1 {
                    return true;
                }
            }
        }
        false
    }

    /// Replaces every constant occurrence (named constants and `*`) by `c`.
    pub fn abstract_constants(&self, c: &Term) -> Term {
        debug_assert!(c.is_constant(), "abstraction target must be a constant");
        match self {
            Term::Constant(_) | Term::Star => c.clone(),
            Term::Functional(t) => Term::functional(
                t.skolem.clone(),
                t.args.iter().map(|a| a.abstract_constants(c)).collect(),
            ),
        }
    }

    /// Replaces every occurrence of `from` (at any nesting) by `to`.
    pub fn replace(&self, from: &Term, to: &Term) -> Term {
        if self == from {
            return to.clone();
        }
        match self {
            Term::Functional(t) => Term::functional(
                t.skolem.clone(),
                t.args.iter().map(|a| a.replace(from, to)).collect(),
            ),
            _ => self.clone(),
        }
    }

    fn variant_rank(&self) -> u8 {
        match self {
            Term::Star => 0,
            Term::Constant(_) => 1,
            Term::Functional(_) => 2,
        }
    }
}

/// Canonical term order: depth first, then `*` before named constants (byte
/// order) before functional terms (Skolem symbol, then arguments). Smaller
/// terms are the preferred congruence-class representatives.
impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        self.depth()
            .cmp(&other.depth())
            .then_with(|| self.variant_rank().cmp(&other.variant_rank()))
            .then_with(|| match (self, other) {
                (Term::Star, Term::Star) => Ordering::Equal,
                (Term::Constant(a), Term::Constant(b)) => a.as_bytes().cmp(b.as_bytes()),
                (Term::Functional(a), Term::Functional(b)) => {
                    a.skolem.cmp(&b.skolem).then_with(|| a.args.cmp(&b.args))
                }
                _ => unreachable!("variant ranks already distinguished"),
            })
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Constant(name) => f.write_str(name),
            Term::Star => f.write_str("*"),
            Term::Functional(t) => {
                write!(f, "{}(", t.skolem)?;
                for (i, a) in t.args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

pub const TOP_NAME: &str = "Top";
pub const BOT_NAME: &str = "Bot";
pub const EQ_NAME: &str = "Eq";

/// A predicate symbol with a fixed arity. `Top` and `Bot` are unary and `Eq`
/// is binary; the equality head of an EGD is never represented as a
/// predicate.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Predicate {
    name: Arc<str>,
    arity: usize,
}

impl Predicate {
    pub fn new(name: impl Into<Arc<str>>, arity: usize) -> Self {
        let name = name.into();
        match &*name {
            TOP_NAME | BOT_NAME => assert_eq!(arity, 1, "{name} is unary"),
            EQ_NAME => assert_eq!(arity, 2, "{EQ_NAME} is binary"),
            _ => {}
        }
        Predicate { name, arity }
    }

    pub fn top() -> Self {
        Predicate::new(TOP_NAME, 1)
    }

    pub fn bot() -> Self {
        Predicate::new(BOT_NAME, 1)
    }

    pub fn eq() -> Self {
        Predicate::new(EQ_NAME, 2)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_top(&self) -> bool {
        &*self.name == TOP_NAME
    }

    pub fn is_bot(&self) -> bool {
        &*self.name == BOT_NAME
    }

    pub fn is_eq(&self) -> bool {
        &*self.name == EQ_NAME
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

/// Argument of a rule or query atom: a variable, a ground term, or a
/// functional pattern with variables inside (as produced by skolemization).
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum PatternTerm {
    Var(Arc<str>),
    Ground(Term),
    App(SkolemFn, Vec<PatternTerm>),
}

impl PatternTerm {
    pub fn var(name: impl Into<Arc<str>>) -> Self {
        PatternTerm::Var(name.into())
    }

    pub fn as_var(&self) -> Option<&Arc<str>> {
        match self {
            PatternTerm::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<Arc<str>>) {
        match self {
            PatternTerm::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            PatternTerm::Ground(_) => {}
            PatternTerm::App(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Var(v) => f.write_str(v),
            PatternTerm::Ground(t) => write!(f, "{t}"),
            PatternTerm::App(sk, args) => {
                write!(f, "{sk}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Debug for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// An atom over pattern arguments, as used in rule bodies, rule heads and
/// queries.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub pred: Predicate,
    pub args: Vec<PatternTerm>,
}

impl Atom {
    pub fn new(pred: Predicate, args: Vec<PatternTerm>) -> Self {
        assert_eq!(pred.arity(), args.len(), "atom arity mismatch for {pred}");
        Atom { pred, args }
    }

    /// Atom whose arguments are all variables.
    pub fn vars(pred: Predicate, vars: &[&str]) -> Self {
        let args = vars.iter().map(|v| PatternTerm::var(*v)).collect();
        Atom::new(pred, args)
    }

    /// Distinct variables in order of first occurrence.
    pub fn variables(&self) -> Vec<Arc<str>> {
        let mut out = Vec::new();
        for a in &self.args {
            a.collect_vars(&mut out);
        }
        out
    }

    pub fn is_var_only(&self) -> bool {
        self.args.iter().all(|a| matches!(a, PatternTerm::Var(_)))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A ground atom.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Fact {
    pub pred: Predicate,
    pub args: Vec<Term>,
}

impl Fact {
    pub fn new(pred: Predicate, args: Vec<Term>) -> Self {
        assert_eq!(pred.arity(), args.len(), "fact arity mismatch for {pred}");
        Fact { pred, args }
    }

    pub fn unary(pred: Predicate, arg: Term) -> Self {
        Fact::new(pred, vec![arg])
    }

    pub fn binary(pred: Predicate, a: Term, b: Term) -> Self {
        Fact::new(pred, vec![a, b])
    }

    pub fn depth(&self) -> u32 {
        self.args.iter().map(Term::depth).max().unwrap_or(0)
    }

    pub fn abstract_constants(&self, c: &Term) -> Fact {
        Fact {
            pred: self.pred.clone(),
            args: self.args.iter().map(|t| t.abstract_constants(c)).collect(),
        }
    }

    /// Replaces every occurrence of `from` in the arguments by `to`.
    pub fn replace_term(&self, from: &Term, to: &Term) -> Fact {
        Fact {
            pred: self.pred.clone(),
            args: self.args.iter().map(|t| t.replace(from, to)).collect(),
        }
    }
}

impl Ord for Fact {
    fn cmp(&self, other: &Self) -> Ordering {
        self.pred.cmp(&other.pred).then_with(|| self.args.cmp(&other.args))
    }
}

impl PartialOrd for Fact {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubstitutionError {
    #[error("variable {0} is unbound but a ground result was required")]
    Unbound(Arc<str>),
}

/// A finite mapping from variable names to ground terms.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    map: std::collections::HashMap<Arc<str>, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.map.get(var)
    }

    pub fn bind(&mut self, var: Arc<str>, term: Term) -> Option<Term> {
        self.map.insert(var, term)
    }

    pub fn remove(&mut self, var: &str) -> Option<Term> {
        self.map.remove(var)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Arc<str>, &Term)> {
        self.map.iter()
    }

    /// Applies the substitution to a pattern, leaving unbound variables in
    /// place.
    pub fn apply_pattern(&self, p: &PatternTerm) -> PatternTerm {
        match p {
            PatternTerm::Var(v) => match self.map.get(v) {
                Some(t) => PatternTerm::Ground(t.clone()),
                None => p.clone(),
            },
            PatternTerm::Ground(_) => p.clone(),
            PatternTerm::App(sk, args) => {
                let applied: Vec<PatternTerm> =
                    args.iter().map(|a| self.apply_pattern(a)).collect();
                if let Some(ground) = applied
                    .iter()
                    .map(|a| match a {
                        PatternTerm::Ground(t) => Some(t.clone()),
                        _ => None,
                    })
                    .collect::<Option<Vec<_>>>()
                {
                    PatternTerm::Ground(Term::functional(sk.clone(), ground))
                } else {
                    PatternTerm::App(sk.clone(), applied)
                }
            }
        }
    }

    /// Applies the substitution to a pattern, requiring a ground result.
    pub fn apply_ground(&self, p: &PatternTerm) -> Result<Term, SubstitutionError> {
        match p {
            PatternTerm::Var(v) => self
                .map
                .get(v)
                .cloned()
                .ok_or_else(|| SubstitutionError::Unbound(v.clone())),
            PatternTerm::Ground(t) => Ok(t.clone()),
            PatternTerm::App(sk, args) => {
                let args = args
                    .iter()
                    .map(|a| self.apply_ground(a))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Term::functional(sk.clone(), args))
            }
        }
    }

    /// Homomorphic application to an atom, leaving unbound variables in
    /// place.
    pub fn apply_atom(&self, atom: &Atom) -> Atom {
        Atom {
            pred: atom.pred.clone(),
            args: atom.args.iter().map(|a| self.apply_pattern(a)).collect(),
        }
    }

    /// Application to an atom whose variables must all be bound.
    pub fn apply_atom_ground(&self, atom: &Atom) -> Result<Fact, SubstitutionError> {
        Ok(Fact {
            pred: atom.pred.clone(),
            args: atom
                .args
                .iter()
                .map(|a| self.apply_ground(a))
                .collect::<Result<Vec<_>, _>>()?,
        })
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut entries: Vec<_> = self.map.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        f.write_str("{")?;
        for (i, (v, t)) in entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v} -> {t}")?;
        }
        f.write_str("}")
    }
}

impl FromIterator<(Arc<str>, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Arc<str>, Term)>>(iter: I) -> Self {
        Substitution { map: iter.into_iter().collect() }
    }
}
