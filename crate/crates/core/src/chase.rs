//! The chase: fixpoint materialization of a program under oblivious or
//! restricted TGD application, with equality handled by renaming.
//!
//! Rule application is set-at-a-time and prioritized: equality rounds run
//! before datalog rounds, and existential rules fire only once both are at
//! fixpoint. This keeps the procedure deterministic up to the canonical term
//! order and lets the restricted variant skip existential rules whose heads
//! are already satisfied.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use log::{debug, trace};

use crate::congruence::{egd_pass, RewriteLog};
use crate::rule::{partition, skolemize, Egd, Program, SkolemizedTgd, Tgd};
use crate::store::{match_body, match_body_ranged, match_exists, FactStore, MatchRange};
use crate::term::Fact;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ChaseMode {
    /// Apply a TGD on every body match.
    Oblivious,
    /// Skip a match when some extension of it already satisfies the
    /// unskolemized head.
    Restricted,
}

/// Resource limits for a chase run. Exhausting a budget is a result status,
/// not an error.
#[derive(Clone, Debug)]
pub struct Budget {
    pub max_facts: Option<usize>,
    pub max_depth: Option<u32>,
    pub max_steps: Option<u64>,
    pub timeout: Option<Duration>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_facts: Some(10_000_000),
            max_depth: Some(20),
            max_steps: None,
            timeout: None,
        }
    }
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget { max_facts: None, max_depth: None, max_steps: None, timeout: None }
    }

    pub fn with_max_depth(mut self, depth: u32) -> Self {
        self.max_depth = Some(depth);
        self
    }

    pub fn with_max_facts(mut self, facts: usize) -> Self {
        self.max_facts = Some(facts);
        self
    }

    pub fn with_max_steps(mut self, steps: u64) -> Self {
        self.max_steps = Some(steps);
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = Some(timeout);
        self
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ChaseStatus {
    /// A full fixpoint was reached (or the run stopped early on a `Bot`
    /// fact with early stopping enabled).
    Terminated,
    BudgetExhausted,
}

#[derive(Clone, Debug, Default)]
pub struct ChaseStats {
    pub steps: u64,
    pub facts: usize,
    pub max_term_depth: u32,
    pub wall: Duration,
}

/// Outcome of a chase run.
pub struct ChaseResult {
    pub facts: FactStore,
    pub status: ChaseStatus,
    pub unsatisfiable: bool,
    pub rewrites: RewriteLog,
    pub stats: ChaseStats,
}

impl ChaseResult {
    pub fn terminated(&self) -> bool {
        self.status == ChaseStatus::Terminated
    }
}

/// New facts obtained by applying a single TGD to the store. In oblivious
/// mode these are all skolemized-head instantiations over body matches not
/// yet present; restricted mode drops a match entirely when some extension of
/// it satisfies the original head inside the store. The two modes coincide
/// for TGDs without existential variables.
pub fn apply_tgd(rule: &Tgd, store: &FactStore, mode: ChaseMode) -> Vec<Fact> {
    let sk = skolemize(rule);
    let mut out = BTreeSet::new();
    instantiate_matches(rule, &sk, store, mode, MatchRange::Full, None, &mut out);
    out.into_iter().collect()
}

/// Core of TGD application: enumerate body matches (optionally delta-
/// restricted), filter satisfied heads in restricted mode, instantiate the
/// skolemized head.
fn instantiate_matches(
    rule: &Tgd,
    sk: &SkolemizedTgd,
    store: &FactStore,
    mode: ChaseMode,
    range: MatchRange,
    delta_atom: Option<usize>,
    out: &mut BTreeSet<Fact>,
) {
    let matches = match delta_atom {
        None => match_body(&rule.body, store),
        Some(i) => {
            let ranges: Vec<MatchRange> = (0..rule.body.len())
                .map(|j| {
                    if j < i {
                        match range {
                            MatchRange::AtLeast(start) => MatchRange::Below(start),
                            _ => MatchRange::Full,
                        }
                    } else if j == i {
                        range
                    } else {
                        MatchRange::Full
                    }
                })
                .collect();
            let mut ms = Vec::new();
            match_body_ranged(&rule.body, &ranges, store, &mut ms);
            ms
        }
    };

    let restricted = mode == ChaseMode::Restricted && rule.has_existentials();
    for m in matches {
        if restricted && match_exists(&rule.head, store, &m) {
            continue;
        }
        for atom in &sk.head {
            let fact = m.apply_atom_ground(atom).expect("head variables are bound");
            if !store.contains(&fact) {
                out.insert(fact);
            }
        }
    }
}

/// One set-at-a-time round of a TGD collection. With `delta_start` set, only
/// matches touching at least one fact inserted at or after that index are
/// considered (their consequences over older facts were emitted by earlier
/// rounds).
fn tgd_round(
    rules: &[(Tgd, SkolemizedTgd)],
    store: &FactStore,
    mode: ChaseMode,
    delta_start: Option<usize>,
) -> Vec<Fact> {
    let mut out = BTreeSet::new();
    for (rule, sk) in rules {
        match delta_start {
            None => instantiate_matches(rule, sk, store, mode, MatchRange::Full, None, &mut out),
            Some(start) => {
                for i in 0..rule.body.len() {
                    instantiate_matches(
                        rule,
                        sk,
                        store,
                        mode,
                        MatchRange::AtLeast(start),
                        Some(i),
                        &mut out,
                    );
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Result of a single prioritized chase step.
pub enum StepOutcome {
    NewFacts(FactStore),
    Fixpoint,
}

/// One prioritized chase step on `store`: an equality round if any EGD
/// equates distinct terms, otherwise a round of the TGDs without existential
/// variables, otherwise a round of the existential TGDs. Returns `Fixpoint`
/// when none of the three changes the store.
pub fn chase_step(program: &Program, store: &FactStore, mode: ChaseMode) -> StepOutcome {
    let parts = partition(&program.rules);
    if let Some((rewritten, _)) = egd_pass(&parts.egds, store) {
        return StepOutcome::NewFacts(rewritten);
    }
    let datalog: Vec<(Tgd, SkolemizedTgd)> =
        parts.datalog.iter().map(|t| (t.clone(), skolemize(t))).collect();
    let new = tgd_round(&datalog, store, mode, None);
    if !new.is_empty() {
        let mut next = store.clone();
        for f in new {
            next.insert(f);
        }
        return StepOutcome::NewFacts(next);
    }
    let existential: Vec<(Tgd, SkolemizedTgd)> =
        parts.existential.iter().map(|t| (t.clone(), skolemize(t))).collect();
    let new = tgd_round(&existential, store, mode, None);
    if !new.is_empty() {
        let mut next = store.clone();
        for f in new {
            next.insert(f);
        }
        return StepOutcome::NewFacts(next);
    }
    StepOutcome::Fixpoint
}

/// What a single engine step did.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StepKind {
    /// An equality round rewrote the store.
    Equality,
    /// A round of TGDs without existential variables added facts.
    Datalog,
    /// A round of existential TGDs added facts.
    Existential,
}

pub enum StepReport {
    Applied {
        kind: StepKind,
        /// Insertion range of newly added facts; empty for equality steps,
        /// which rewrite in place.
        added: std::ops::Range<usize>,
    },
    Fixpoint,
}

/// Incremental chase driver owning its fact store. Datalog rounds are
/// delta-driven; any equality rewrite invalidates the delta and forces one
/// full re-evaluation.
pub struct ChaseEngine {
    mode: ChaseMode,
    budget: Budget,
    stop_on_bot: bool,
    datalog: Vec<(Tgd, SkolemizedTgd)>,
    existential: Vec<(Tgd, SkolemizedTgd)>,
    egds: Vec<Egd>,
    store: FactStore,
    delta_start: Option<usize>,
    rewrites: RewriteLog,
    steps: u64,
    started: Instant,
}

impl ChaseEngine {
    pub fn new(program: &Program, mode: ChaseMode, budget: Budget) -> Self {
        let parts = partition(&program.rules);
        ChaseEngine {
            mode,
            budget,
            stop_on_bot: true,
            datalog: parts.datalog.iter().map(|t| (t.clone(), skolemize(t))).collect(),
            existential: parts.existential.iter().map(|t| (t.clone(), skolemize(t))).collect(),
            egds: parts.egds,
            store: program.instance.clone(),
            delta_start: None,
            rewrites: RewriteLog::new(),
            steps: 0,
            started: Instant::now(),
        }
    }

    /// Whether to stop as soon as a `Bot` fact is derived (default true).
    /// Once `Bot` holds every query is entailed, so further saturation only
    /// costs time.
    pub fn stop_on_bot(mut self, stop: bool) -> Self {
        self.stop_on_bot = stop;
        self
    }

    pub fn store(&self) -> &FactStore {
        &self.store
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Runs one prioritized step, mirroring [`chase_step`] but reusing delta
    /// information across calls.
    pub fn step(&mut self) -> StepReport {
        if let Some((rewritten, log)) = egd_pass(&self.egds, &self.store) {
            trace!("equality round rewrote {} facts", rewritten.len());
            self.store = rewritten;
            self.rewrites.absorb(log);
            self.delta_start = None;
            self.steps += 1;
            return StepReport::Applied { kind: StepKind::Equality, added: 0..0 };
        }

        let new = tgd_round(&self.datalog, &self.store, self.mode, self.delta_start);
        if !new.is_empty() {
            let start = self.store.len();
            for f in new {
                self.store.insert(f);
            }
            self.delta_start = Some(start);
            self.steps += 1;
            return StepReport::Applied { kind: StepKind::Datalog, added: start..self.store.len() };
        }

        let new = tgd_round(&self.existential, &self.store, self.mode, None);
        if !new.is_empty() {
            let start = self.store.len();
            for f in new {
                self.store.insert(f);
            }
            self.delta_start = Some(start);
            self.steps += 1;
            return StepReport::Applied {
                kind: StepKind::Existential,
                added: start..self.store.len(),
            };
        }

        StepReport::Fixpoint
    }

    pub fn budget_exceeded(&self) -> bool {
        if let Some(max) = self.budget.max_facts {
            if self.store.len() > max {
                return true;
            }
        }
        if let Some(max) = self.budget.max_depth {
            if self.store.max_term_depth() > max {
                return true;
            }
        }
        if let Some(max) = self.budget.max_steps {
            if self.steps > max {
                return true;
            }
        }
        if let Some(limit) = self.budget.timeout {
            if self.started.elapsed() > limit {
                return true;
            }
        }
        false
    }

    /// Drives the engine to fixpoint or budget exhaustion.
    pub fn run(mut self) -> ChaseResult {
        let status = loop {
            if self.budget_exceeded() {
                break ChaseStatus::BudgetExhausted;
            }
            if self.store.has_bot() && self.stop_on_bot {
                debug!("Bot derived after {} steps, stopping early", self.steps);
                break ChaseStatus::Terminated;
            }
            match self.step() {
                StepReport::Applied { .. } => continue,
                StepReport::Fixpoint => break ChaseStatus::Terminated,
            }
        };
        self.finish(status)
    }

    /// Wraps up the current state into a result without running further.
    pub fn finish(mut self, status: ChaseStatus) -> ChaseResult {
        self.rewrites.compress();
        let stats = ChaseStats {
            steps: self.steps,
            facts: self.store.len(),
            max_term_depth: self.store.max_term_depth(),
            wall: self.started.elapsed(),
        };
        debug!(
            "chase finished: status={status:?} steps={} facts={} depth={}",
            stats.steps, stats.facts, stats.max_term_depth
        );
        ChaseResult {
            unsatisfiable: self.store.has_bot(),
            facts: self.store,
            status,
            rewrites: self.rewrites,
            stats,
        }
    }
}

/// Computes the chase of a program: iterates prioritized steps until
/// fixpoint or budget exhaustion.
pub fn run_chase(program: &Program, mode: ChaseMode, budget: &Budget) -> ChaseResult {
    ChaseEngine::new(program, mode, budget.clone()).run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::{add_top_rules, Rule};
    use crate::term::{Atom, Fact, Predicate, RuleId, SkolemFn, Term};

    fn pred(name: &str, arity: usize) -> Predicate {
        Predicate::new(name, arity)
    }

    fn c(name: &str) -> Term {
        Term::constant(name)
    }

    fn sk(ordinal: usize) -> SkolemFn {
        SkolemFn::new(RuleId::axiom(ordinal), "y")
    }

    fn film_rules() -> Vec<Rule> {
        let film = pred("Film", 1);
        let producer = pred("Producer", 1);
        let is_prod_by = pred("isProdBy", 2);
        let prod = pred("prod", 2);
        vec![
            Rule::Tgd(Tgd::new(
                RuleId::axiom(1),
                vec![Atom::vars(film.clone(), &["x"])],
                vec![
                    Atom::vars(is_prod_by.clone(), &["x", "y"]),
                    Atom::vars(producer.clone(), &["y"]),
                ],
            )),
            Rule::Tgd(Tgd::new(
                RuleId::axiom(2),
                vec![Atom::vars(producer.clone(), &["x"])],
                vec![Atom::vars(prod.clone(), &["x", "y"]), Atom::vars(film.clone(), &["y"])],
            )),
            Rule::Tgd(Tgd::new(
                RuleId::axiom(3),
                vec![Atom::vars(is_prod_by.clone(), &["y", "x"])],
                vec![Atom::vars(prod.clone(), &["x", "y"])],
            )),
            Rule::Tgd(Tgd::new(
                RuleId::axiom(4),
                vec![Atom::vars(prod, &["y", "x"])],
                vec![Atom::vars(is_prod_by, &["x", "y"])],
            )),
        ]
    }

    fn film_program() -> Program {
        add_top_rules(Program::new(
            film_rules(),
            FactStore::from_facts([Fact::unary(pred("Film", 1), c("AI"))]),
        ))
    }

    #[test]
    fn apply_tgd_restricted_on_fresh_match() {
        let program = film_program();
        let rho = program.rules[0].as_tgd().unwrap();
        let store = FactStore::from_facts([Fact::unary(pred("Film", 1), c("AI"))]);
        let new = apply_tgd(rho, &store, ChaseMode::Restricted);
        let witness = Term::functional(sk(1), vec![c("AI")]);
        let expected = vec![
            Fact::unary(pred("Producer", 1), witness.clone()),
            Fact::binary(pred("isProdBy", 2), c("AI"), witness),
        ];
        assert_eq!(new.len(), 2);
        for f in expected {
            assert!(new.contains(&f), "missing {f}");
        }
    }

    /// The saturated restricted store: the existential head of the producer
    /// rule is already satisfied through the inverse role, so restricted
    /// application adds nothing while oblivious application spawns a deeper
    /// witness.
    fn saturated_store() -> FactStore {
        let w = Term::functional(sk(1), vec![c("AI")]);
        FactStore::from_facts([
            Fact::unary(pred("Film", 1), c("AI")),
            Fact::binary(pred("isProdBy", 2), c("AI"), w.clone()),
            Fact::unary(pred("Producer", 1), w.clone()),
            Fact::binary(pred("prod", 2), w, c("AI")),
        ])
    }

    #[test]
    fn apply_tgd_mode_difference() {
        let program = film_program();
        let upsilon = program.rules[1].as_tgd().unwrap();
        let store = saturated_store();

        assert!(apply_tgd(upsilon, &store, ChaseMode::Restricted).is_empty());

        let oblivious = apply_tgd(upsilon, &store, ChaseMode::Oblivious);
        let w = Term::functional(sk(1), vec![c("AI")]);
        let deeper = Term::functional(sk(2), vec![w.clone()]);
        assert_eq!(oblivious.len(), 2);
        assert!(oblivious.contains(&Fact::binary(pred("prod", 2), w, deeper.clone())));
        assert!(oblivious.contains(&Fact::unary(pred("Film", 1), deeper)));
    }

    #[test]
    fn chase_step_priority() {
        let program = film_program();
        // after the first existential firing, the inverse rule must run
        // before any further existential application
        let w = Term::functional(sk(1), vec![c("AI")]);
        let store = FactStore::from_facts([
            Fact::unary(pred("Film", 1), c("AI")),
            Fact::binary(pred("isProdBy", 2), c("AI"), w.clone()),
            Fact::unary(pred("Producer", 1), w.clone()),
            Fact::unary(pred("Top", 1), c("AI")),
            Fact::unary(pred("Top", 1), w.clone()),
        ]);
        match chase_step(&program, &store, ChaseMode::Restricted) {
            StepOutcome::NewFacts(next) => {
                assert!(next.contains(&Fact::binary(pred("prod", 2), w, c("AI"))));
                // no deeper skolem term was created in this step
                assert_eq!(next.max_term_depth(), 1);
            }
            StepOutcome::Fixpoint => panic!("expected the inverse rule to fire"),
        }
    }

    #[test]
    fn chase_step_fixpoint_on_saturated_store() {
        let program = film_program();
        let mut store = saturated_store();
        for fact in store.sorted_facts() {
            for t in &fact.args {
                store.insert(Fact::unary(pred("Top", 1), t.clone()));
            }
        }
        match chase_step(&program, &store, ChaseMode::Restricted) {
            StepOutcome::Fixpoint => {}
            StepOutcome::NewFacts(next) => {
                let extra: Vec<_> = next
                    .sorted_facts()
                    .into_iter()
                    .filter(|f| !store.contains(f))
                    .collect();
                panic!("expected fixpoint, got new facts {extra:?}");
            }
        }
    }

    #[test]
    fn restricted_chase_terminates_with_expected_facts() {
        let result = run_chase(&film_program(), ChaseMode::Restricted, &Budget::default());
        assert!(result.terminated());
        assert!(!result.unsatisfiable);
        let w = Term::functional(sk(1), vec![c("AI")]);
        let expected = vec![
            Fact::unary(pred("Film", 1), c("AI")),
            Fact::unary(pred("Producer", 1), w.clone()),
            Fact::binary(pred("isProdBy", 2), c("AI"), w.clone()),
            Fact::binary(pred("prod", 2), w, c("AI")),
        ];
        let mut expected = expected;
        expected.sort();
        assert_eq!(result.facts.sorted_non_top_facts(), expected);
    }

    #[test]
    fn oblivious_chase_exhausts_depth_budget() {
        let budget = Budget::default().with_max_depth(5);
        let result = run_chase(&film_program(), ChaseMode::Oblivious, &budget);
        assert_eq!(result.status, ChaseStatus::BudgetExhausted);
        assert!(result.stats.max_term_depth > 5);
    }

    #[test]
    fn empty_instance_terminates_empty() {
        let program = add_top_rules(Program::new(film_rules(), FactStore::new()));
        let result = run_chase(&program, ChaseMode::Restricted, &Budget::default());
        assert!(result.terminated());
        assert!(result.facts.is_empty());
    }

    #[test]
    fn engine_matches_stateless_steps() {
        let program = film_program();
        let mut engine = ChaseEngine::new(&program, ChaseMode::Restricted, Budget::default());
        let mut store = program.instance.clone();
        loop {
            let stateless = chase_step(&program, &store, ChaseMode::Restricted);
            let report = engine.step();
            match (stateless, report) {
                (StepOutcome::Fixpoint, StepReport::Fixpoint) => break,
                (StepOutcome::NewFacts(next), StepReport::Applied { .. }) => {
                    assert_eq!(next.sorted_facts(), engine.store().sorted_facts());
                    store = next;
                }
                _ => panic!("engine and stateless step disagree"),
            }
        }
    }

    #[test]
    fn bot_stops_early_and_flags_unsatisfiable() {
        let a = pred("A", 1);
        let rules = vec![
            Rule::Tgd(Tgd::new(
                RuleId::axiom(1),
                vec![Atom::vars(a.clone(), &["x"])],
                vec![Atom::vars(Predicate::bot(), &["x"])],
            )),
            Rule::Tgd(Tgd::new(
                RuleId::axiom(2),
                vec![Atom::vars(a.clone(), &["x"])],
                vec![Atom::vars(a.clone(), &["x"]), Atom::vars(pred("B", 1), &["y"])],
            )),
        ];
        let program = add_top_rules(Program::new(
            rules,
            FactStore::from_facts([Fact::unary(a, c("a"))]),
        ));
        let result = run_chase(&program, ChaseMode::Restricted, &Budget::default());
        assert!(result.unsatisfiable);
        assert!(result.terminated());
    }
}
