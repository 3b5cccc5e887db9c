//! Chase-termination analysis: model-faithful acyclicity over the critical
//! instance (with equality axiomatized or singularized), and restricted-chase
//! acyclicity via an overchase construction that prunes provably redundant
//! existential witnesses.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use log::debug;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chase::{
    apply_tgd, run_chase, Budget, ChaseEngine, ChaseMode, ChaseStats, ChaseStatus, StepReport,
};
use crate::ontology::{translate_tbox, Ontology, TBoxAxiom};
use crate::rule::{add_top_rules, partition, top_rules_for, Program, Rule, Tgd};
use crate::store::{match_body, FactStore};
use crate::term::{Atom, Fact, PatternTerm, Predicate, SkolemFn, Term};

/// Three-valued analysis answer. `Unknown` covers budget exhaustion and
/// capped enumerations.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AcyclicityError {
    #[error("term {0} is not built from the skolem of an existential axiom")]
    ForeignSkolem(Term),
}

/// The critical instance of a rule set: one all-`*` fact for every predicate
/// occurring in the rules except `Bot`, plus `Top(*)` whenever the rule set
/// mentions any predicate at all.
pub fn critical_instance(rules: &[Rule]) -> FactStore {
    let mut preds: Vec<Predicate> = Vec::new();
    for rule in rules {
        for p in rule.predicates() {
            if !p.is_bot() && !preds.contains(&p) {
                preds.push(p);
            }
        }
    }
    if !preds.is_empty() && !preds.iter().any(Predicate::is_top) {
        preds.push(Predicate::top());
    }
    preds.sort();
    FactStore::from_facts(
        preds
            .into_iter()
            .map(|p| {
                let args = vec![Term::Star; p.arity()];
                Fact::new(p, args)
            }),
    )
}

/// Reflexivity, symmetry and transitivity of `Eq` as ordinary rules.
pub fn eq_axioms() -> Vec<Tgd> {
    vec![
        Tgd::new(
            crate::term::RuleId::new("eq:refl"),
            vec![Atom::vars(Predicate::top(), &["x"])],
            vec![Atom::vars(Predicate::eq(), &["x", "x"])],
        ),
        Tgd::new(
            crate::term::RuleId::new("eq:sym"),
            vec![Atom::vars(Predicate::eq(), &["x", "y"])],
            vec![Atom::vars(Predicate::eq(), &["y", "x"])],
        ),
        Tgd::new(
            crate::term::RuleId::new("eq:trans"),
            vec![Atom::vars(Predicate::eq(), &["x", "z"]), Atom::vars(Predicate::eq(), &["z", "y"])],
            vec![Atom::vars(Predicate::eq(), &["x", "y"])],
        ),
    ]
}

/// Replaces equality by the ordinary predicate `Eq`: EGD heads become `Eq`
/// atoms, and every predicate gets one replacement rule per argument
/// position, plus the `Eq` axioms.
pub fn axiomatize_equality(rules: &[Rule]) -> Vec<Tgd> {
    let mut out: Vec<Tgd> = Vec::new();
    let mut preds: Vec<Predicate> = Vec::new();
    for rule in rules {
        for p in rule.predicates() {
            if !p.is_eq() && !preds.contains(&p) {
                preds.push(p);
            }
        }
        match rule {
            Rule::Tgd(t) => out.push(t.clone()),
            Rule::Egd(e) => out.push(Tgd::new(
                e.id.clone(),
                e.body.clone(),
                vec![Atom::vars(Predicate::eq(), &[&e.lhs, &e.rhs])],
            )),
        }
    }
    preds.sort();
    for p in preds {
        let vars: Vec<String> = (1..=p.arity()).map(|i| format!("x{i}")).collect();
        for pos in 0..p.arity() {
            let body = vec![
                Atom::new(p.clone(), vars.iter().map(|v| PatternTerm::var(v.as_str())).collect()),
                Atom::vars(Predicate::eq(), &[vars[pos].as_str(), "z"]),
            ];
            let head_args = vars
                .iter()
                .enumerate()
                .map(|(i, v)| if i == pos { PatternTerm::var("z") } else { PatternTerm::var(v.as_str()) })
                .collect();
            out.push(Tgd::new(
                crate::term::RuleId::new(format!("ax:{}:{}", p.name(), pos)),
                body,
                vec![Atom::new(p.clone(), head_args)],
            ));
        }
    }
    out.extend(eq_axioms());
    out
}

/// Occurrence positions of each body variable, sorted by variable name.
fn body_occurrences(body: &[Atom]) -> Vec<(std::sync::Arc<str>, Vec<(usize, usize)>)> {
    let mut map: BTreeMap<std::sync::Arc<str>, Vec<(usize, usize)>> = BTreeMap::new();
    for (ai, atom) in body.iter().enumerate() {
        for (pi, arg) in atom.args.iter().enumerate() {
            let v = arg.as_var().expect("rule bodies are variable-only");
            map.entry(v.clone()).or_default().push((ai, pi));
        }
    }
    map.into_iter().collect()
}

fn fresh_occurrence_name(base: &str, occ: usize, taken: &[std::sync::Arc<str>]) -> std::sync::Arc<str> {
    let mut name = format!("{base}_{}", occ + 1);
    while taken.iter().any(|t| &**t == name) {
        name.push('_');
    }
    std::sync::Arc::from(name)
}

/// All body renamings of a rule: each repeated body variable has its
/// occurrences renamed apart, one occurrence is picked as the pivot, and the
/// other occurrences are linked to the pivot with `Eq` atoms; head
/// occurrences move to the pivot. EGD heads become `Eq` atoms. A rule with no
/// repeated body variable yields itself (with its original id); otherwise
/// each combination of pivots yields one variant with a derived id.
pub fn singularizations(rule: &Rule) -> Vec<Tgd> {
    let body = rule.body();
    let occurrences = body_occurrences(body);
    let multi: Vec<&(std::sync::Arc<str>, Vec<(usize, usize)>)> =
        occurrences.iter().filter(|(_, occs)| occs.len() > 1).collect();

    let as_tgd = |rule: &Rule| -> Tgd {
        match rule {
            Rule::Tgd(t) => t.clone(),
            Rule::Egd(e) => Tgd::new(
                e.id.clone(),
                e.body.clone(),
                vec![Atom::vars(Predicate::eq(), &[&e.lhs, &e.rhs])],
            ),
        }
    };

    if multi.is_empty() {
        return vec![as_tgd(rule)];
    }

    let taken: Vec<std::sync::Arc<str>> = {
        let mut vars: Vec<std::sync::Arc<str>> = occurrences.iter().map(|(v, _)| v.clone()).collect();
        if let Rule::Tgd(t) = rule {
            for atom in &t.head {
                for v in atom.variables() {
                    if !vars.contains(&v) {
                        vars.push(v);
                    }
                }
            }
        }
        vars
    };

    // odometer over pivot choices, last variable cycling fastest
    let radices: Vec<usize> = multi.iter().map(|(_, occs)| occs.len()).collect();
    let total: usize = radices.iter().product();
    let base = as_tgd(rule);

    let mut out = Vec::with_capacity(total);
    for combo in 0..total {
        let mut pivots = Vec::with_capacity(radices.len());
        let mut rest = combo;
        for &radix in radices.iter().rev() {
            pivots.push(rest % radix);
            rest /= radix;
        }
        pivots.reverse();

        let mut new_body = base.body.clone();
        let mut links: Vec<Atom> = Vec::new();
        let mut head = base.head.clone();
        for ((var, occs), &pivot) in multi.iter().zip(&pivots) {
            let names: Vec<std::sync::Arc<str>> =
                (0..occs.len()).map(|i| fresh_occurrence_name(var, i, &taken)).collect();
            for (i, &(ai, pi)) in occs.iter().enumerate() {
                new_body[ai].args[pi] = PatternTerm::Var(names[i].clone());
            }
            for (i, name) in names.iter().enumerate() {
                if i != pivot {
                    links.push(Atom::new(
                        Predicate::eq(),
                        vec![PatternTerm::Var(name.clone()), PatternTerm::Var(names[pivot].clone())],
                    ));
                }
            }
            for atom in &mut head {
                for arg in &mut atom.args {
                    if arg.as_var() == Some(var) {
                        *arg = PatternTerm::Var(names[pivot].clone());
                    }
                }
            }
        }
        new_body.extend(links);
        let id = if total == 1 { base.id.clone() } else { base.id.variant(combo) };
        out.push(Tgd::new(id, new_body, head));
    }
    out
}

/// Union of all body renamings of every rule, plus the `Eq` axioms. For
/// rules translated from normal-form axioms the union stays polynomial in
/// the input.
pub fn singularization_union(rules: &[Rule]) -> Vec<Tgd> {
    let mut out: Vec<Tgd> = rules.iter().flat_map(|r| singularizations(r)).collect();
    out.extend(eq_axioms());
    out
}

#[derive(Clone, Debug)]
pub struct MfaResult {
    pub verdict: Verdict,
    /// Present exactly when the verdict is `No`; always 1-cyclic.
    pub witness: Option<Term>,
    pub stats: ChaseStats,
}

/// Smallest n-cyclic subterm occurring in the given facts, if any.
fn min_n_cyclic<'a, I: IntoIterator<Item = &'a Fact>>(facts: I, n: u32) -> Option<Term> {
    let mut best: Option<Term> = None;
    for fact in facts {
        for arg in &fact.args {
            for sub in arg.subterms() {
                if sub.is_n_cyclic(n) && best.as_ref().map_or(true, |b| sub < b) {
                    best = Some(sub.clone());
                }
            }
        }
    }
    best
}

/// Smallest n-cyclic term in a store.
pub fn scan_n_cyclic(store: &FactStore, n: u32) -> Option<Term> {
    min_n_cyclic(store.iter(), n)
}

/// Decides model-faithful acyclicity of a TGD set (equality must already be
/// axiomatized or singularized away): the oblivious chase over the critical
/// instance is run until fixpoint, a cyclic term, or budget exhaustion.
pub fn check_mfa(rules: &[Tgd], budget: &Budget) -> MfaResult {
    let rule_vec: Vec<Rule> = rules.iter().cloned().map(Rule::Tgd).collect();
    let mut program = add_top_rules(Program::new(rule_vec, FactStore::new()));
    program.instance = critical_instance(&program.rules);

    let mut engine =
        ChaseEngine::new(&program, ChaseMode::Oblivious, budget.clone()).stop_on_bot(false);
    loop {
        if engine.budget_exceeded() {
            let result = engine.finish(ChaseStatus::BudgetExhausted);
            return MfaResult { verdict: Verdict::Unknown, witness: None, stats: result.stats };
        }
        match engine.step() {
            StepReport::Applied { added, .. } => {
                let new_facts = added.clone().filter_map(|i| engine.store().get(i));
                if let Some(witness) = min_n_cyclic(new_facts, 1) {
                    debug!("cyclic term {witness} ends the acyclicity chase");
                    let result = engine.finish(ChaseStatus::Terminated);
                    return MfaResult {
                        verdict: Verdict::No,
                        witness: Some(witness),
                        stats: result.stats,
                    };
                }
            }
            StepReport::Fixpoint => {
                let result = engine.finish(ChaseStatus::Terminated);
                return MfaResult { verdict: Verdict::Yes, witness: None, stats: result.stats };
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct MfaVariants {
    pub exists: Verdict,
    pub forall: Verdict,
    pub union: MfaResult,
}

/// Enumerates the singularization choices of a rule set up to `cap` members,
/// deciding whether some member (`exists`) and every member (`forall`) is
/// acyclic. Verdicts left undetermined by a capped enumeration are
/// `Unknown`.
pub fn check_sing_exists_forall(rules: &[Rule], cap: usize, budget: &Budget) -> (Verdict, Verdict) {
    let per_rule: Vec<Vec<Tgd>> = rules.iter().map(singularizations).collect();
    let total: usize = per_rule.iter().map(Vec::len).fold(1usize, |a, b| a.saturating_mul(b));
    let enumerated_all = total <= cap;
    let count = total.min(cap);

    let mut found_yes = false;
    let mut found_no = false;
    let mut found_unknown = false;
    for combo in 0..count {
        let mut member: Vec<Tgd> = Vec::with_capacity(per_rule.len() + 3);
        let mut rest = combo;
        for variants in per_rule.iter().rev() {
            member.push(variants[rest % variants.len()].clone());
            rest /= variants.len();
        }
        member.reverse();
        member.extend(eq_axioms());
        match check_mfa(&member, budget).verdict {
            Verdict::Yes => found_yes = true,
            Verdict::No => found_no = true,
            Verdict::Unknown => found_unknown = true,
        }
        if found_yes && found_no {
            break;
        }
    }

    let exists = if found_yes {
        Verdict::Yes
    } else if enumerated_all && !found_unknown {
        Verdict::No
    } else {
        Verdict::Unknown
    };
    let forall = if found_no {
        Verdict::No
    } else if enumerated_all && !found_unknown {
        Verdict::Yes
    } else {
        Verdict::Unknown
    };
    (exists, forall)
}

/// Default cap on the number of enumerated singularizations.
pub const DEFAULT_SING_CAP: usize = 4096;

/// Runs all three singularization-based acyclicity checks.
pub fn check_mfa_variants(rules: &[Rule], cap: usize, budget: &Budget) -> MfaVariants {
    let (exists, forall) = check_sing_exists_forall(rules, cap, budget);
    let union = check_mfa(&singularization_union(rules), budget);
    MfaVariants { exists, forall, union }
}

/// Shape of an existential axiom `A ⊑ ∃R.B`, indexed by the Skolem function
/// of its translated rule.
#[derive(Clone, Debug)]
struct ExistentialShape {
    a: Predicate,
    r: Predicate,
    b: Predicate,
}

/// Rule view of a TBox: the translated rules plus the index from Skolem
/// functions back to their existential axioms, which drives the
/// witness-instance construction.
pub struct TBoxRules {
    pub rules: Vec<Rule>,
    pub existential_count: usize,
    shapes: HashMap<SkolemFn, ExistentialShape>,
}

impl TBoxRules {
    pub fn new(tbox: &[TBoxAxiom]) -> Self {
        let rules = translate_tbox(tbox);
        let mut shapes = HashMap::new();
        let mut existential_count = 0;
        for (axiom, rule) in tbox.iter().zip(&rules) {
            if let TBoxAxiom::Existential { a, r, b } = axiom {
                existential_count += 1;
                shapes.insert(
                    SkolemFn::new(rule.id().clone(), "y"),
                    ExistentialShape {
                        a: Predicate::new(a.clone(), 1),
                        r: Predicate::new(r.clone(), 2),
                        b: Predicate::new(b.clone(), 1),
                    },
                );
            }
        }
        TBoxRules { rules, existential_count, shapes }
    }

    pub fn from_ontology(ontology: &Ontology) -> Self {
        TBoxRules::new(&ontology.tbox)
    }

    fn shape_of(&self, term: &Term) -> Result<&ExistentialShape, AcyclicityError> {
        term.skolem()
            .filter(|_| term.args().len() == 1)
            .and_then(|sk| self.shapes.get(sk))
            .ok_or_else(|| AcyclicityError::ForeignSkolem(term.clone()))
    }
}

/// The witness instance of a term: for `t = f(s)` stemming from the axiom
/// `A ⊑ ∃R.B`, the facts `A(s)`, `R(s, t)`, `B(t)` plus the instance of `s`;
/// empty for constants.
pub fn term_instance(t: &Term, tbox: &TBoxRules) -> Result<FactStore, AcyclicityError> {
    let mut store = FactStore::new();
    let mut current = t.clone();
    loop {
        match current {
            Term::Constant(_) | Term::Star => return Ok(store),
            Term::Functional(_) => {
                let shape = tbox.shape_of(&current)?;
                let arg = current.args()[0].clone();
                store.insert(Fact::unary(shape.a.clone(), arg.clone()));
                store.insert(Fact::binary(shape.r.clone(), arg.clone(), current.clone()));
                store.insert(Fact::unary(shape.b.clone(), current.clone()));
                current = arg;
            }
        }
    }
}

/// The program whose rules are the non-existential TGDs and the EGDs of the
/// TBox (plus Top propagation) and whose instance is the witness instance of
/// `t`. Its restricted chase always terminates: no rule can invent terms.
pub fn restricted_program(tbox: &TBoxRules, t: &Term) -> Result<Program, AcyclicityError> {
    let parts = partition(&tbox.rules);
    let rules: Vec<Rule> = parts
        .datalog
        .into_iter()
        .map(Rule::Tgd)
        .chain(parts.egds.into_iter().map(Rule::Egd))
        .collect();
    let instance = term_instance(t, tbox)?;
    Ok(add_top_rules(Program::new(rules, instance)))
}

/// Whether the restricted chase can never create `t = f(s)`: the chase of
/// the witness program of `s` already contains `R([s], u)` and `B(u)` for
/// some `u`, where `[s]` accounts for replacements performed along the way.
pub fn is_restricted(t: &Term, tbox: &TBoxRules) -> Result<bool, AcyclicityError> {
    let shape = tbox.shape_of(t)?.clone();
    let arg = &t.args()[0];
    let program = restricted_program(tbox, arg)?;
    let result = run_chase(&program, ChaseMode::Restricted, &Budget::unlimited());
    debug_assert!(result.terminated(), "witness-program chase cannot diverge");
    let rep = result.rewrites.resolve(arg);
    let satisfied = result
        .facts
        .facts_with_arg(&shape.r, 0, &rep)
        .any(|f| result.facts.contains(&Fact::unary(shape.b.clone(), f.args[1].clone())));
    Ok(satisfied)
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum OverchaseStatus {
    Complete,
    NCyclicWitness(Term),
    BudgetExhausted,
}

/// Over-approximation of every restricted chase of the TBox after
/// abstracting constants to `*`.
pub struct OverchaseResult {
    pub facts: FactStore,
    pub status: OverchaseStatus,
    /// Memoized restriction verdicts per abstract term.
    pub restricted_cache: HashMap<Term, bool>,
}

/// Builds the overchase: starting from the critical instance, expands to
/// fixpoint under four rules — non-existential TGD application, existential
/// application gated on the term not being provably redundant, `Eq`
/// recording for EGD matches, and `Eq`-driven replacement that never deepens
/// a position. With `watch_n` set, expansion stops early once an n-cyclic
/// term appears.
pub fn build_overchase(tbox: &TBoxRules, budget: &Budget, watch_n: Option<u32>) -> OverchaseResult {
    let parts = partition(&tbox.rules);
    let mut datalog = parts.datalog.clone();
    let preds: Vec<Predicate> = {
        let mut out = Vec::new();
        for rule in &tbox.rules {
            for p in rule.predicates() {
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        }
        out
    };
    datalog.extend(top_rules_for(&preds));

    let mut facts = critical_instance(&tbox.rules);
    let mut cache: HashMap<Term, bool> = HashMap::new();
    let started = Instant::now();

    let exceeded = |facts: &FactStore, started: &Instant| -> bool {
        budget.max_facts.is_some_and(|m| facts.len() > m)
            || budget.max_depth.is_some_and(|m| facts.max_term_depth() > m)
            || budget.timeout.is_some_and(|t| started.elapsed() > t)
    };

    loop {
        let mut added: Vec<Fact> = Vec::new();

        // non-existential TGDs, Top propagation included
        for rule in &datalog {
            for fact in apply_tgd(rule, &facts, ChaseMode::Restricted) {
                if facts.insert(fact.clone()) {
                    added.push(fact);
                }
            }
        }

        // record equalities, no merging
        for egd in &parts.egds {
            for m in match_body(&egd.body, &facts) {
                let lhs = m.get(&egd.lhs).expect("lhs bound").clone();
                let rhs = m.get(&egd.rhs).expect("rhs bound").clone();
                for fact in [
                    Fact::binary(Predicate::eq(), lhs.clone(), rhs.clone()),
                    Fact::binary(Predicate::eq(), rhs, lhs),
                ] {
                    if facts.insert(fact.clone()) {
                        added.push(fact);
                    }
                }
            }
        }

        // replacement through recorded equalities, shallow side wins
        let eq_pairs: Vec<(Term, Term)> = facts
            .facts_with_pred(&Predicate::eq())
            .map(|f| (f.args[0].clone(), f.args[1].clone()))
            .collect();
        for (t, u) in &eq_pairs {
            if t == u || t.depth() > u.depth() {
                continue;
            }
            let candidates: Vec<Fact> = facts
                .iter()
                .filter(|f| !f.pred.is_eq() && f.args.iter().any(|a| a == u))
                .cloned()
                .collect();
            for fact in candidates {
                let replaced = fact.replace_term(u, t);
                if facts.insert(replaced.clone()) {
                    added.push(replaced);
                }
            }
        }

        // existential rules, gated on the witness not being redundant
        for tgd in &parts.existential {
            let skolem = SkolemFn::new(tgd.id.clone(), "y");
            if !tbox.shapes.contains_key(&skolem) {
                continue;
            }
            let shape = tbox.shapes[&skolem].clone();
            for m in match_body(&tgd.body, &facts) {
                let x = m.get("x").expect("frontier bound").clone();
                let witness = Term::functional(skolem.clone(), vec![x.clone()]);
                let restricted = *cache.entry(witness.clone()).or_insert_with(|| {
                    is_restricted(&witness, tbox)
                        .expect("overchase terms stem from this TBox's existential axioms")
                });
                if restricted {
                    continue;
                }
                for fact in [
                    Fact::binary(shape.r.clone(), x, witness.clone()),
                    Fact::unary(shape.b.clone(), witness.clone()),
                ] {
                    if facts.insert(fact.clone()) {
                        added.push(fact);
                    }
                }
            }
        }

        if let Some(n) = watch_n {
            if let Some(witness) = min_n_cyclic(added.iter(), n) {
                return OverchaseResult {
                    facts,
                    status: OverchaseStatus::NCyclicWitness(witness),
                    restricted_cache: cache,
                };
            }
        }
        if exceeded(&facts, &started) {
            return OverchaseResult {
                facts,
                status: OverchaseStatus::BudgetExhausted,
                restricted_cache: cache,
            };
        }
        if added.is_empty() {
            return OverchaseResult {
                facts,
                status: OverchaseStatus::Complete,
                restricted_cache: cache,
            };
        }
    }
}

#[derive(Clone, Debug)]
pub struct RcaCheck {
    pub verdict: Verdict,
    pub witness: Option<Term>,
}

/// Restricted-chase acyclicity at degree `n`: holds when the overchase
/// completes without an n-cyclic term.
pub fn check_rca(tbox: &TBoxRules, n: u32, budget: &Budget) -> RcaCheck {
    assert!(n >= 1);
    let result = build_overchase(tbox, budget, Some(n));
    match result.status {
        OverchaseStatus::Complete => RcaCheck { verdict: Verdict::Yes, witness: None },
        OverchaseStatus::NCyclicWitness(w) => RcaCheck { verdict: Verdict::No, witness: Some(w) },
        OverchaseStatus::BudgetExhausted => RcaCheck { verdict: Verdict::Unknown, witness: None },
    }
}

/// Which analyses to run.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Mfa,
    MfaUnion,
    MfaExists,
    MfaForall,
    Rca,
}

impl std::str::FromStr for CheckKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mfa" => Ok(CheckKind::Mfa),
            "mfa-union" => Ok(CheckKind::MfaUnion),
            "mfa-exists" => Ok(CheckKind::MfaExists),
            "mfa-forall" => Ok(CheckKind::MfaForall),
            "rca" => Ok(CheckKind::Rca),
            other => Err(format!("unknown check {other:?}")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    pub checks: Vec<CheckKind>,
    pub rca_n: Vec<u32>,
    pub budget: Budget,
    pub sing_cap: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            checks: vec![CheckKind::MfaUnion, CheckKind::Rca],
            rca_n: vec![1],
            budget: Budget::default(),
            sing_cap: DEFAULT_SING_CAP,
        }
    }
}

/// Per-ontology analysis outcome, serialized as the JSON report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AcyclicityReport {
    pub name: String,
    pub axioms: usize,
    pub existential_axioms: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mfa: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mfa_exists: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mfa_forall: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mfa_union: Option<Verdict>,
    #[serde(default)]
    pub rca: BTreeMap<u32, Verdict>,
    pub witnesses: Vec<String>,
    pub millis: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl AcyclicityReport {
    pub fn error_report(name: String, message: String) -> Self {
        AcyclicityReport {
            name,
            axioms: 0,
            existential_axioms: 0,
            mfa: None,
            mfa_exists: None,
            mfa_forall: None,
            mfa_union: None,
            rca: BTreeMap::new(),
            witnesses: Vec::new(),
            millis: 0,
            error: Some(message),
        }
    }
}

/// Runs the requested acyclicity checks over one ontology.
pub fn analyze_ontology(name: &str, ontology: &Ontology, options: &AnalysisOptions) -> AcyclicityReport {
    let started = Instant::now();
    let tbox = TBoxRules::new(&ontology.tbox);
    let mut report = AcyclicityReport {
        name: name.to_string(),
        axioms: ontology.tbox.len() + ontology.abox.len(),
        existential_axioms: tbox.existential_count,
        mfa: None,
        mfa_exists: None,
        mfa_forall: None,
        mfa_union: None,
        rca: BTreeMap::new(),
        witnesses: Vec::new(),
        millis: 0,
        error: None,
    };
    let mut witnesses: Vec<String> = Vec::new();

    for check in &options.checks {
        match check {
            CheckKind::Mfa => {
                let result = check_mfa(&axiomatize_equality(&tbox.rules), &options.budget);
                if let Some(w) = &result.witness {
                    witnesses.push(w.to_string());
                }
                report.mfa = Some(result.verdict);
            }
            CheckKind::MfaUnion => {
                let result = check_mfa(&singularization_union(&tbox.rules), &options.budget);
                if let Some(w) = &result.witness {
                    witnesses.push(w.to_string());
                }
                report.mfa_union = Some(result.verdict);
            }
            CheckKind::MfaExists | CheckKind::MfaForall => {
                if report.mfa_exists.is_none() {
                    let (exists, forall) =
                        check_sing_exists_forall(&tbox.rules, options.sing_cap, &options.budget);
                    report.mfa_exists = Some(exists);
                    report.mfa_forall = Some(forall);
                }
            }
            CheckKind::Rca => {
                let mut ns: Vec<u32> = options.rca_n.clone();
                ns.sort_unstable();
                ns.dedup();
                assert!(!ns.is_empty(), "acyclicity analysis needs at least one degree");
                let max_n = *ns.last().expect("non-empty");
                let overchase = build_overchase(&tbox, &options.budget, Some(max_n));
                for &n in &ns {
                    let verdict = match &overchase.status {
                        OverchaseStatus::Complete => match scan_n_cyclic(&overchase.facts, n) {
                            Some(w) => {
                                witnesses.push(w.to_string());
                                Verdict::No
                            }
                            None => Verdict::Yes,
                        },
                        OverchaseStatus::NCyclicWitness(w) => {
                            // a max_n-cyclic term is n-cyclic for every smaller n
                            witnesses.push(w.to_string());
                            Verdict::No
                        }
                        OverchaseStatus::BudgetExhausted => Verdict::Unknown,
                    };
                    report.rca.insert(n, verdict);
                }
            }
        }
    }

    // the two enumeration verdicts are computed together; report only what
    // was asked for
    if !options.checks.contains(&CheckKind::MfaExists) {
        report.mfa_exists = None;
    }
    if !options.checks.contains(&CheckKind::MfaForall) {
        report.mfa_forall = None;
    }

    witnesses.sort();
    witnesses.dedup();
    report.witnesses = witnesses;
    report.millis = started.elapsed().as_millis();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::Egd;
    use crate::term::RuleId;

    fn pred(name: &str, arity: usize) -> Predicate {
        Predicate::new(name, arity)
    }

    fn star_fact(name: &str, arity: usize) -> Fact {
        Fact::new(pred(name, arity), vec![Term::Star; arity])
    }

    /// The two-rule set with equality from the running equality example:
    /// `A(x) ∧ B(x) → ∃y[R(x,y) ∧ B(y)]` and `R(z,x1) ∧ R(z,x2) → Eq(x1,x2)`.
    fn eq_example_rules() -> Vec<Rule> {
        vec![
            Rule::Tgd(Tgd::new(
                RuleId::axiom(1),
                vec![Atom::vars(pred("A", 1), &["x"]), Atom::vars(pred("B", 1), &["x"])],
                vec![Atom::vars(pred("R", 2), &["x", "y"]), Atom::vars(pred("B", 1), &["y"])],
            )),
            Rule::Tgd(Tgd::new(
                RuleId::axiom(2),
                vec![Atom::vars(pred("R", 2), &["z", "x1"]), Atom::vars(pred("R", 2), &["z", "x2"])],
                vec![Atom::vars(Predicate::eq(), &["x1", "x2"])],
            )),
        ]
    }

    #[test]
    fn critical_instance_covers_all_predicates() {
        let rules: Vec<Tgd> = axiomatize_equality(&eq_example_rules());
        let rule_vec: Vec<Rule> = rules.into_iter().map(Rule::Tgd).collect();
        let crit = critical_instance(&rule_vec);
        for fact in [
            star_fact("A", 1),
            star_fact("B", 1),
            star_fact("R", 2),
            star_fact("Eq", 2),
            star_fact("Top", 1),
        ] {
            assert!(crit.contains(&fact), "missing {fact}");
        }
    }

    #[test]
    fn critical_instance_of_empty_rules_is_empty() {
        assert!(critical_instance(&[]).is_empty());
    }

    #[test]
    fn critical_instance_skips_bot() {
        let rule = Rule::Tgd(Tgd::new(
            RuleId::axiom(1),
            vec![Atom::vars(pred("A", 1), &["x"])],
            vec![Atom::vars(Predicate::bot(), &["x"])],
        ));
        let crit = critical_instance(std::slice::from_ref(&rule));
        assert!(crit.contains(&star_fact("A", 1)));
        assert!(crit.contains(&star_fact("Top", 1)));
        assert!(!crit.contains(&star_fact("Bot", 1)));
    }

    #[test]
    fn singularization_of_repeated_variable_rule() {
        let rules = eq_example_rules();
        let variants = singularizations(&rules[0]);
        assert_eq!(variants.len(), 2, "one pivot choice per occurrence of x");
        for v in &variants {
            assert_eq!(v.body.len(), 3, "renamed body plus one Eq link");
            assert!(v.body.iter().any(|a| a.pred.is_eq()));
            assert!(v.has_existentials());
        }
        // pivots differ: the head uses x_1 in one variant and x_2 in the other
        let heads: Vec<String> = variants.iter().map(|v| v.head[0].to_string()).collect();
        assert_ne!(heads[0], heads[1]);
    }

    #[test]
    fn singularization_is_identity_without_repeats() {
        let rule = Rule::Tgd(Tgd::new(
            RuleId::axiom(1),
            vec![Atom::vars(pred("A", 1), &["x"])],
            vec![Atom::vars(pred("R", 2), &["x", "y"])],
        ));
        let variants = singularizations(&rule);
        assert_eq!(variants.len(), 1);
        assert_eq!(Rule::Tgd(variants[0].clone()), rule);
    }

    #[test]
    fn singularization_of_egd_pivots_over_shared_variable() {
        let egd = Rule::Egd(Egd::new(
            RuleId::axiom(3),
            vec![Atom::vars(pred("R", 2), &["z", "x1"]), Atom::vars(pred("R", 2), &["z", "x2"])],
            "x1",
            "x2",
        ));
        let variants = singularizations(&egd);
        assert_eq!(variants.len(), 2, "two pivot choices for z");
        for v in &variants {
            assert!(v.head[0].pred.is_eq());
            assert_eq!(v.head[0].to_string(), "Eq(x1,x2)");
        }
    }

    #[test]
    fn union_collects_all_variants_and_eq_axioms() {
        let rules = eq_example_rules();
        let union = singularization_union(&rules);
        // 2 variants for each rule plus 3 Eq axioms
        assert_eq!(union.len(), 2 + 2 + 3);

        let none: Vec<Rule> = vec![];
        assert_eq!(singularization_union(&none).len(), 3);
    }

    #[test]
    fn axiomatized_equality_example_is_cyclic() {
        let rules = axiomatize_equality(&eq_example_rules());
        let result = check_mfa(&rules, &Budget::default());
        assert_eq!(result.verdict, Verdict::No);
        let witness = result.witness.expect("negative verdict carries a witness");
        assert!(witness.is_n_cyclic(1));
        let f = SkolemFn::new(RuleId::axiom(1), "y");
        let expected = Term::functional(f.clone(), vec![Term::functional(f, vec![Term::Star])]);
        assert_eq!(witness, expected);
    }

    #[test]
    fn datalog_rule_sets_are_trivially_acyclic() {
        let rule = Tgd::new(
            RuleId::axiom(1),
            vec![Atom::vars(pred("A", 1), &["x"])],
            vec![Atom::vars(pred("B", 1), &["x"])],
        );
        let result = check_mfa(&[rule], &Budget::default());
        assert_eq!(result.verdict, Verdict::Yes);
        assert!(result.witness.is_none());
    }

    #[test]
    fn sing_exists_but_not_forall() {
        let rules = eq_example_rules();
        let (exists, forall) = check_sing_exists_forall(&rules, DEFAULT_SING_CAP, &Budget::default());
        assert_eq!(exists, Verdict::Yes);
        assert_eq!(forall, Verdict::No);
        let union = check_mfa(&singularization_union(&rules), &Budget::default());
        assert_eq!(union.verdict, Verdict::No);
    }

    #[test]
    fn no_repeats_no_existentials_is_acyclic_everywhere() {
        let rules = vec![Rule::Tgd(Tgd::new(
            RuleId::axiom(1),
            vec![Atom::vars(pred("A", 1), &["x"])],
            vec![Atom::vars(pred("B", 1), &["x"])],
        ))];
        let variants = check_mfa_variants(&rules, DEFAULT_SING_CAP, &Budget::default());
        assert_eq!(variants.exists, Verdict::Yes);
        assert_eq!(variants.forall, Verdict::Yes);
        assert_eq!(variants.union.verdict, Verdict::Yes);
    }

    use crate::ontology::parse_ontology;

    const FILM_DOC: &str = "\
TBOX:
Film SUBCLASSOF SOME isProdBy . Producer
Producer SUBCLASSOF SOME prod . Film
INV(isProdBy) SUBROLEOF prod
INV(prod) SUBROLEOF isProdBy
";

    fn film_tbox() -> TBoxRules {
        TBoxRules::new(&parse_ontology(FILM_DOC).unwrap().tbox)
    }

    fn rho(arg: Term) -> Term {
        Term::functional(SkolemFn::new(RuleId::axiom(1), "y"), vec![arg])
    }

    fn upsilon(arg: Term) -> Term {
        Term::functional(SkolemFn::new(RuleId::axiom(2), "y"), vec![arg])
    }

    #[test]
    fn term_instance_unfolds_witness_facts() {
        let tbox = film_tbox();
        let ai = Term::constant("AI");

        assert!(term_instance(&ai, &tbox).unwrap().is_empty());

        let t = rho(ai.clone());
        let instance = term_instance(&t, &tbox).unwrap();
        let expected = FactStore::from_facts([
            Fact::unary(pred("Film", 1), ai.clone()),
            Fact::binary(pred("isProdBy", 2), ai.clone(), t.clone()),
            Fact::unary(pred("Producer", 1), t.clone()),
        ]);
        assert_eq!(instance.sorted_facts(), expected.sorted_facts());

        // nested terms unfold recursively
        let deep = upsilon(rho(Term::Star));
        let instance = term_instance(&deep, &tbox).unwrap();
        assert!(instance.contains(&Fact::unary(pred("Producer", 1), rho(Term::Star))));
        assert!(instance.contains(&Fact::binary(pred("prod", 2), rho(Term::Star), deep.clone())));
        assert!(instance.contains(&Fact::unary(pred("Film", 1), deep)));
        assert!(instance.contains(&Fact::unary(pred("Film", 1), Term::Star)));
        // Producer(f[r1:y](*)) is shared between the two recursion levels
        assert_eq!(instance.len(), 5);
    }

    #[test]
    fn term_instance_rejects_foreign_skolems() {
        let tbox = film_tbox();
        let alien = Term::functional(SkolemFn::new(RuleId::new("r9"), "y"), vec![Term::Star]);
        assert!(matches!(
            term_instance(&alien, &tbox),
            Err(AcyclicityError::ForeignSkolem(_))
        ));
    }

    #[test]
    fn witness_program_chase_reproduces_expected_facts() {
        let tbox = film_tbox();
        let ai = Term::constant("AI");

        // chase of the program for f[r1:y](AI)
        let t = rho(ai.clone());
        let program = restricted_program(&tbox, &t).unwrap();
        let result = run_chase(&program, ChaseMode::Restricted, &Budget::default());
        assert!(result.terminated());
        let mut expected = term_instance(&t, &tbox).unwrap().sorted_facts();
        expected.push(Fact::binary(pred("prod", 2), t.clone(), ai.clone()));
        expected.sort();
        assert_eq!(result.facts.sorted_non_top_facts(), expected);

        // chase of the program for f[r2:y](AI)
        let u = upsilon(ai.clone());
        let program = restricted_program(&tbox, &u).unwrap();
        let result = run_chase(&program, ChaseMode::Restricted, &Budget::default());
        let mut expected = vec![
            Fact::unary(pred("Producer", 1), ai.clone()),
            Fact::binary(pred("prod", 2), ai.clone(), u.clone()),
            Fact::unary(pred("Film", 1), u.clone()),
            Fact::binary(pred("isProdBy", 2), u.clone(), ai.clone()),
        ];
        expected.sort();
        assert_eq!(result.facts.sorted_non_top_facts(), expected);

        // a constant argument gives the empty instance
        let program = restricted_program(&tbox, &ai).unwrap();
        assert!(program.instance.is_empty());
    }

    #[test]
    fn restriction_verdicts_on_film_terms() {
        let tbox = film_tbox();
        let ai = Term::constant("AI");
        assert!(is_restricted(&rho(upsilon(ai.clone())), &tbox).unwrap());
        assert!(!is_restricted(&rho(ai), &tbox).unwrap());
        assert!(is_restricted(&upsilon(rho(Term::Star)), &tbox).unwrap());
    }

    #[test]
    fn restriction_is_constant_generic() {
        let tbox = film_tbox();
        for t in [rho(upsilon(Term::constant("c"))), upsilon(rho(Term::constant("c")))] {
            let abstracted = t.abstract_constants(&Term::Star);
            assert_eq!(
                is_restricted(&t, &tbox).unwrap(),
                is_restricted(&abstracted, &tbox).unwrap()
            );
        }
    }

    #[test]
    fn film_overchase_completes_with_pruned_witnesses() {
        let tbox = film_tbox();
        let result = build_overchase(&tbox, &Budget::default(), Some(1));
        assert_eq!(result.status, OverchaseStatus::Complete);

        // the two depth-2 witnesses are pruned as redundant
        assert_eq!(result.restricted_cache.get(&rho(upsilon(Term::Star))), Some(&true));
        assert_eq!(result.restricted_cache.get(&upsilon(rho(Term::Star))), Some(&true));
        assert_eq!(result.restricted_cache.get(&rho(Term::Star)), Some(&false));
        assert_eq!(result.restricted_cache.get(&upsilon(Term::Star)), Some(&false));

        let mut expected = vec![
            star_fact("Film", 1),
            star_fact("Producer", 1),
            star_fact("isProdBy", 2),
            star_fact("prod", 2),
            Fact::binary(pred("isProdBy", 2), Term::Star, rho(Term::Star)),
            Fact::unary(pred("Producer", 1), rho(Term::Star)),
            Fact::binary(pred("prod", 2), Term::Star, upsilon(Term::Star)),
            Fact::unary(pred("Film", 1), upsilon(Term::Star)),
            // datalog consequences through the inverse roles
            Fact::binary(pred("prod", 2), rho(Term::Star), Term::Star),
            Fact::binary(pred("isProdBy", 2), upsilon(Term::Star), Term::Star),
        ];
        expected.sort();
        assert_eq!(result.facts.sorted_non_top_facts(), expected);
    }

    #[test]
    fn empty_tbox_has_empty_overchase() {
        let tbox = TBoxRules::new(&[]);
        let result = build_overchase(&tbox, &Budget::default(), Some(1));
        assert_eq!(result.status, OverchaseStatus::Complete);
        assert!(result.facts.is_empty());
    }

    #[test]
    fn self_loop_axiom_is_cyclic_at_every_degree() {
        let tbox = TBoxRules::new(&[TBoxAxiom::Existential {
            a: std::sync::Arc::from("A"),
            r: std::sync::Arc::from("R"),
            b: std::sync::Arc::from("A"),
        }]);
        let result = build_overchase(&tbox, &Budget::default(), Some(1));
        let f = |t: Term| Term::functional(SkolemFn::new(RuleId::axiom(1), "y"), vec![t]);
        match result.status {
            OverchaseStatus::NCyclicWitness(w) => assert_eq!(w, f(f(Term::Star))),
            other => panic!("expected a cyclic witness, got {other:?}"),
        }
        let rca = check_rca(&tbox, 1, &Budget::default());
        assert_eq!(rca.verdict, Verdict::No);
        assert!(rca.witness.unwrap().is_n_cyclic(1));
    }

    #[test]
    fn film_tbox_separates_rca_from_union_acyclicity() {
        let tbox = film_tbox();
        assert_eq!(check_rca(&tbox, 1, &Budget::default()).verdict, Verdict::Yes);
        let union = check_mfa(&singularization_union(&tbox.rules), &Budget::default());
        assert_eq!(union.verdict, Verdict::No);
    }

    #[test]
    fn tbox_without_existentials_is_rca_for_every_degree() {
        let tbox = TBoxRules::new(&[TBoxAxiom::ConjSubsumption {
            lhs: vec![std::sync::Arc::from("A")],
            rhs: std::sync::Arc::from("B"),
        }]);
        for n in 1..4 {
            assert_eq!(check_rca(&tbox, n, &Budget::default()).verdict, Verdict::Yes);
        }
    }

    #[test]
    fn analyze_produces_report() {
        let ontology = parse_ontology(FILM_DOC).unwrap();
        let report = analyze_ontology("film", &ontology, &AnalysisOptions::default());
        assert_eq!(report.existential_axioms, 2);
        assert_eq!(report.mfa_union, Some(Verdict::No));
        assert_eq!(report.rca.get(&1), Some(&Verdict::Yes));
        assert!(!report.witnesses.is_empty());
        assert!(report.error.is_none());
    }
}
