//! Materialization-based reasoning for Horn-SRIQ ontologies.
//!
//! The crate implements the chase in its oblivious and restricted variants
//! over rules translated from normal-form TBoxes, decides chase termination
//! through model-faithful acyclicity (with equality axiomatized or
//! singularized) and restricted-chase acyclicity (via an overchase
//! construction), and answers conjunctive queries over the materialized
//! facts.
//!
//! Modules follow the pipeline: [`term`] and [`rule`] define the data model,
//! [`ontology`] parses and translates the surface syntax, [`store`],
//! [`congruence`] and [`chase`] materialize, [`acyclicity`] analyzes
//! termination, and [`query`] answers queries.

pub mod acyclicity;
pub mod chase;
pub mod congruence;
pub mod ontology;
pub mod query;
pub mod rule;
pub mod store;
pub mod term;

pub use acyclicity::{
    analyze_ontology, build_overchase, check_mfa, check_mfa_variants, check_rca,
    critical_instance, is_restricted, restricted_program, singularization_union,
    singularizations, term_instance, AcyclicityReport, AnalysisOptions, CheckKind, MfaResult,
    MfaVariants, OverchaseResult, OverchaseStatus, TBoxRules, Verdict,
};
pub use chase::{
    apply_tgd, chase_step, run_chase, Budget, ChaseEngine, ChaseMode, ChaseResult, ChaseStats,
    ChaseStatus, StepOutcome,
};
pub use congruence::{apply_egds, CongruenceClasses, RewriteLog};
pub use ontology::{build_program, parse_ontology, sriq_warnings, Ontology, ParseError, TBoxAxiom};
pub use query::{
    answer, entails, entails_materialized, evaluate_cq, materialize, parse_query, AnswerSet,
    ConjunctiveQuery, Entailment,
};
pub use rule::{add_top_rules, partition, skolemize, Egd, Program, Rule, SkolemizedTgd, Tgd};
pub use store::{match_body, match_body_seeded, match_exists, FactStore};
pub use term::{Atom, Fact, PatternTerm, Predicate, RuleId, SkolemFn, Substitution, Term};
