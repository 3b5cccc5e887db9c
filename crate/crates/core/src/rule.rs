//! Rules and programs: TGDs, EGDs, skolemization, rule-set partitioning and
//! the `Top`-propagation rules every program carries.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::store::FactStore;
use crate::term::{Atom, PatternTerm, Predicate, RuleId, SkolemFn};

/// A tuple-generating dependency `body -> exists ys. head`. Variables that
/// occur in the head but not in the body are existentially quantified.
#[derive(Clone, PartialEq, Eq)]
pub struct Tgd {
    pub id: RuleId,
    pub body: Vec<Atom>,
    pub head: Vec<Atom>,
}

impl Tgd {
    pub fn new(id: RuleId, body: Vec<Atom>, head: Vec<Atom>) -> Self {
        assert!(!body.is_empty(), "TGD body must be non-empty");
        assert!(!head.is_empty(), "TGD head must be non-empty");
        assert!(
            body.iter().all(Atom::is_var_only) && head.iter().all(Atom::is_var_only),
            "TGD atoms carry variables only"
        );
        Tgd { id, body, head }
    }

    /// Distinct body variables in order of first occurrence.
    pub fn body_vars(&self) -> Vec<Arc<str>> {
        let mut out = Vec::new();
        for atom in &self.body {
            for v in atom.variables() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    fn head_vars(&self) -> Vec<Arc<str>> {
        let mut out = Vec::new();
        for atom in &self.head {
            for v in atom.variables() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    /// Variables shared between body and head, in body order.
    pub fn frontier_vars(&self) -> Vec<Arc<str>> {
        let head = self.head_vars();
        self.body_vars().into_iter().filter(|v| head.contains(v)).collect()
    }

    /// Head-only variables, in head order.
    pub fn existential_vars(&self) -> Vec<Arc<str>> {
        let body = self.body_vars();
        self.head_vars().into_iter().filter(|v| !body.contains(v)).collect()
    }

    pub fn has_existentials(&self) -> bool {
        !self.existential_vars().is_empty()
    }
}

impl fmt::Display for Tgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, atom) in self.head.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{atom}")?;
        }
        f.write_str(" <- ")?;
        for (i, atom) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{atom}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Tgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.id, self)
    }
}

/// An equality-generating dependency `body -> lhs ~ rhs`.
#[derive(Clone, PartialEq, Eq)]
pub struct Egd {
    pub id: RuleId,
    pub body: Vec<Atom>,
    pub lhs: Arc<str>,
    pub rhs: Arc<str>,
}

impl Egd {
    pub fn new(id: RuleId, body: Vec<Atom>, lhs: impl Into<Arc<str>>, rhs: impl Into<Arc<str>>) -> Self {
        assert!(!body.is_empty(), "EGD body must be non-empty");
        assert!(body.iter().all(Atom::is_var_only), "EGD atoms carry variables only");
        let (lhs, rhs) = (lhs.into(), rhs.into());
        let vars: Vec<Arc<str>> = body.iter().flat_map(|a| a.variables()).collect();
        assert!(
            vars.contains(&lhs) && vars.contains(&rhs),
            "equated variables must occur in the EGD body"
        );
        Egd { id, body, lhs, rhs }
    }
}

impl fmt::Display for Egd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ~ {} <- ", self.lhs, self.rhs)?;
        for (i, atom) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{atom}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Egd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.id, self)
    }
}

#[derive(Clone, PartialEq, Eq)]
pub enum Rule {
    Tgd(Tgd),
    Egd(Egd),
}

impl Rule {
    pub fn id(&self) -> &RuleId {
        match self {
            Rule::Tgd(t) => &t.id,
            Rule::Egd(e) => &e.id,
        }
    }

    pub fn body(&self) -> &[Atom] {
        match self {
            Rule::Tgd(t) => &t.body,
            Rule::Egd(e) => &e.body,
        }
    }

    pub fn as_tgd(&self) -> Option<&Tgd> {
        match self {
            Rule::Tgd(t) => Some(t),
            Rule::Egd(_) => None,
        }
    }

    pub fn as_egd(&self) -> Option<&Egd> {
        match self {
            Rule::Egd(e) => Some(e),
            Rule::Tgd(_) => None,
        }
    }

    /// Predicates occurring in the rule, with arities.
    pub fn predicates(&self) -> Vec<Predicate> {
        let mut out = Vec::new();
        let mut push = |p: &Predicate| {
            if !out.contains(p) {
                out.push(p.clone());
            }
        };
        match self {
            Rule::Tgd(t) => {
                for a in t.body.iter().chain(&t.head) {
                    push(&a.pred);
                }
            }
            Rule::Egd(e) => {
                for a in &e.body {
                    push(&a.pred);
                }
            }
        }
        out
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Tgd(t) => write!(f, "{t}"),
            Rule::Egd(e) => write!(f, "{e}"),
        }
    }
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.id(), self)
    }
}

/// A TGD with each existential head variable replaced by a Skolem pattern
/// over the rule's frontier variables.
#[derive(Clone, PartialEq, Eq)]
pub struct SkolemizedTgd {
    pub base: RuleId,
    pub body: Vec<Atom>,
    pub head: Vec<Atom>,
}

impl fmt::Display for SkolemizedTgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, atom) in self.head.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{atom}")?;
        }
        f.write_str(" <- ")?;
        for (i, atom) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{atom}")?;
        }
        Ok(())
    }
}

/// Replaces every existential variable `y` of `rule` by the pattern
/// `f[id:y](frontier)`. Deterministic per rule id, so replaying a rule set
/// always names the same Skolem terms.
pub fn skolemize(rule: &Tgd) -> SkolemizedTgd {
    let frontier = rule.frontier_vars();
    let existential = rule.existential_vars();
    let head = rule
        .head
        .iter()
        .map(|atom| Atom {
            pred: atom.pred.clone(),
            args: atom
                .args
                .iter()
                .map(|arg| match arg {
                    PatternTerm::Var(v) if existential.contains(v) => PatternTerm::App(
                        SkolemFn::new(rule.id.clone(), v.clone()),
                        frontier.iter().map(|x| PatternTerm::Var(x.clone())).collect(),
                    ),
                    other => other.clone(),
                })
                .collect(),
        })
        .collect();
    SkolemizedTgd { base: rule.id.clone(), body: rule.body.clone(), head }
}

/// Rule set split into existential TGDs, datalog TGDs and EGDs.
#[derive(Clone, Default)]
pub struct RulePartitions {
    pub existential: Vec<Tgd>,
    pub datalog: Vec<Tgd>,
    pub egds: Vec<Egd>,
}

impl RulePartitions {
    pub fn len(&self) -> usize {
        self.existential.len() + self.datalog.len() + self.egds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Splits `rules` into the existential TGDs, the TGDs without existential
/// variables, and the EGDs. The three parts are disjoint and cover the input.
pub fn partition(rules: &[Rule]) -> RulePartitions {
    let mut parts = RulePartitions::default();
    for rule in rules {
        match rule {
            Rule::Tgd(t) if t.has_existentials() => parts.existential.push(t.clone()),
            Rule::Tgd(t) => parts.datalog.push(t.clone()),
            Rule::Egd(e) => parts.egds.push(e.clone()),
        }
    }
    parts
}

/// A set of rules together with an instance of ground facts.
#[derive(Clone)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub instance: FactStore,
}

impl Program {
    pub fn new(rules: Vec<Rule>, instance: FactStore) -> Self {
        Program { rules, instance }
    }

    /// Predicates occurring anywhere in the program, sorted.
    pub fn predicates(&self) -> Vec<Predicate> {
        let mut set: BTreeMap<Predicate, ()> = BTreeMap::new();
        for rule in &self.rules {
            for p in rule.predicates() {
                set.insert(p, ());
            }
        }
        for fact in self.instance.iter() {
            set.insert(fact.pred.clone(), ());
        }
        set.into_keys().collect()
    }
}

/// The propagation rule `p(x1,...,xn) -> Top(x1), ..., Top(xn)`.
pub fn top_rule_for(pred: &Predicate) -> Tgd {
    let vars: Vec<Arc<str>> = (1..=pred.arity()).map(|i| Arc::from(format!("x{i}"))).collect();
    let body = vec![Atom {
        pred: pred.clone(),
        args: vars.iter().map(|v| PatternTerm::Var(v.clone())).collect(),
    }];
    let head = vars
        .iter()
        .map(|v| Atom { pred: Predicate::top(), args: vec![PatternTerm::Var(v.clone())] })
        .collect();
    Tgd::new(RuleId::new(format!("top:{}", pred.name())), body, head)
}

/// Top-propagation rules for every predicate in `preds` other than `Top`
/// itself, sorted by predicate.
pub fn top_rules_for(preds: &[Predicate]) -> Vec<Tgd> {
    let mut sorted: Vec<&Predicate> = preds.iter().filter(|p| !p.is_top()).collect();
    sorted.sort();
    sorted.dedup();
    sorted.into_iter().map(top_rule_for).collect()
}

/// Ensures the program carries the Top-propagation rule for every predicate
/// occurring in it. Idempotent: rules already present are not duplicated.
pub fn add_top_rules(mut program: Program) -> Program {
    let preds = program.predicates();
    for rule in top_rules_for(&preds) {
        let already = program
            .rules
            .iter()
            .any(|r| matches!(r, Rule::Tgd(t) if t.id == rule.id && t.body == rule.body && t.head == rule.head));
        if !already {
            program.rules.push(Rule::Tgd(rule));
        }
    }
    program
}
