//! Conjunctive queries over materialized fact stores: parsing, certain-answer
//! evaluation and boolean entailment.

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use crate::chase::{run_chase, Budget, ChaseMode, ChaseResult};
use crate::ontology::{build_program, Ontology};
use crate::store::{match_body, match_exists, FactStore};
use crate::term::{Atom, Predicate, Substitution, Term, EQ_NAME};

/// A conjunctive query `q(v1,...,vk) <- atom1, ..., atomm`. An empty answer
/// tuple makes it boolean.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ConjunctiveQuery {
    pub answer_vars: Vec<Arc<str>>,
    pub body: Vec<Atom>,
}

impl ConjunctiveQuery {
    pub fn is_boolean(&self) -> bool {
        self.answer_vars.is_empty()
    }
}

impl std::fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "q({}) <- ", self.answer_vars.join(","))?;
        for (i, atom) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{atom}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryParseError {
    #[error("column {col}: {message}")]
    Syntax { col: usize, message: String },
    #[error("predicate {name} is used with arities {first} and {second}")]
    ArityMismatch { name: String, first: usize, second: usize },
    #[error("equality is not allowed in a query body")]
    EqualityAtom,
    #[error("answer variable {0} does not occur in the body")]
    UnboundAnswerVariable(String),
    #[error("query body must be non-empty")]
    EmptyBody,
}

struct QueryLexer<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> QueryLexer<'a> {
    fn new(text: &'a str) -> Self {
        QueryLexer { text, pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len()
            && self.text.as_bytes()[self.pos].is_ascii_whitespace()
        {
            self.pos += 1;
        }
    }

    fn error(&self, message: &str) -> QueryParseError {
        QueryParseError::Syntax { col: self.pos + 1, message: message.to_string() }
    }

    fn eat(&mut self, token: &str) -> Result<(), QueryParseError> {
        self.skip_ws();
        if self.text[self.pos..].starts_with(token) {
            self.pos += token.len();
            Ok(())
        } else {
            Err(self.error(&format!("expected {token:?}")))
        }
    }

    fn try_eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<&'a str, QueryParseError> {
        self.skip_ws();
        let bytes = self.text.as_bytes();
        let start = self.pos;
        if start >= bytes.len() || !(bytes[start].is_ascii_alphabetic() || bytes[start] == b'_') {
            return Err(self.error("expected an identifier"));
        }
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
            end += 1;
        }
        self.pos = end;
        Ok(&self.text[start..end])
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos == self.text.len()
    }
}

/// Parses `q(v1,...,vk) <- P(x), R(x,y), ...`. Atom arguments are variables;
/// equality atoms are rejected, and a predicate must keep one arity across
/// the body.
pub fn parse_query(text: &str) -> Result<ConjunctiveQuery, QueryParseError> {
    let mut lex = QueryLexer::new(text.trim());
    let _head = lex.ident()?;
    lex.eat("(")?;
    let mut answer_vars: Vec<Arc<str>> = Vec::new();
    if !lex.try_eat(")") {
        loop {
            answer_vars.push(Arc::from(lex.ident()?));
            if lex.try_eat(")") {
                break;
            }
            lex.eat(",")?;
        }
    }
    lex.eat("<-")?;

    let mut body: Vec<Atom> = Vec::new();
    let mut arities: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    loop {
        let pred_name = lex.ident()?;
        if pred_name == EQ_NAME {
            return Err(QueryParseError::EqualityAtom);
        }
        lex.eat("(")?;
        let mut vars: Vec<&str> = vec![lex.ident()?];
        while lex.try_eat(",") {
            vars.push(lex.ident()?);
        }
        lex.eat(")")?;
        if let Some(&known) = arities.get(pred_name) {
            if known != vars.len() {
                return Err(QueryParseError::ArityMismatch {
                    name: pred_name.to_string(),
                    first: known,
                    second: vars.len(),
                });
            }
        } else {
            arities.insert(pred_name.to_string(), vars.len());
        }
        body.push(Atom::vars(Predicate::new(pred_name, vars.len()), &vars));
        if lex.at_end() {
            break;
        }
        lex.eat(",")?;
    }
    if body.is_empty() {
        return Err(QueryParseError::EmptyBody);
    }

    let body_vars: Vec<Arc<str>> = body.iter().flat_map(|a| a.variables()).collect();
    for v in &answer_vars {
        if !body_vars.contains(v) {
            return Err(QueryParseError::UnboundAnswerVariable(v.to_string()));
        }
    }
    Ok(ConjunctiveQuery { answer_vars, body })
}

/// Certain answers to a query: tuples of named constants, ordered. The flag
/// records whether the underlying materialization was complete.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnswerSet {
    pub tuples: BTreeSet<Vec<Term>>,
    pub complete: bool,
}

impl AnswerSet {
    pub fn holds(&self) -> bool {
        !self.tuples.is_empty()
    }
}

/// Evaluates a query over a store: every tuple of named constants the answer
/// variables can map to such that some extension maps the whole body into
/// the store. Existential variables may bind any term, including Skolem
/// terms; answers never contain Skolem terms or `*`.
pub fn evaluate_cq(query: &ConjunctiveQuery, store: &FactStore) -> AnswerSet {
    let mut tuples = BTreeSet::new();
    if query.is_boolean() {
        if match_exists(&query.body, store, &Substitution::new()) {
            tuples.insert(Vec::new());
        }
        return AnswerSet { tuples, complete: true };
    }
    for m in match_body(&query.body, store) {
        let tuple: Option<Vec<Term>> = query
            .answer_vars
            .iter()
            .map(|v| match m.get(v) {
                Some(t @ Term::Constant(_)) => Some(t.clone()),
                _ => None,
            })
            .collect();
        if let Some(tuple) = tuple {
            tuples.insert(tuple);
        }
    }
    AnswerSet { tuples, complete: true }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Entailment {
    Entailed,
    NotEntailed,
    Unknown,
}

/// Materializes the program of an ontology under the given mode and budget.
pub fn materialize(ontology: &Ontology, mode: ChaseMode, budget: &Budget) -> ChaseResult {
    run_chase(&build_program(ontology), mode, budget)
}

/// Boolean entailment against a materialized chase: entailed when the store
/// is unsatisfiable or the body matches; not entailed only when the chase
/// reached a fixpoint; unknown when the budget ran out first.
pub fn entails_materialized(query: &ConjunctiveQuery, chase: &ChaseResult) -> Entailment {
    if chase.unsatisfiable {
        return Entailment::Entailed;
    }
    if match_exists(&query.body, &chase.facts, &Substitution::new()) {
        return Entailment::Entailed;
    }
    if chase.terminated() {
        Entailment::NotEntailed
    } else {
        Entailment::Unknown
    }
}

/// Materializes and decides boolean entailment in one call. Answer variables
/// of a non-boolean query are treated existentially.
pub fn entails(ontology: &Ontology, query: &ConjunctiveQuery, mode: ChaseMode, budget: &Budget) -> Entailment {
    let chase = materialize(ontology, mode, budget);
    entails_materialized(query, &chase)
}

/// Materializes and evaluates a query, degrading the completeness flag when
/// the chase ran out of budget.
pub fn answer(ontology: &Ontology, query: &ConjunctiveQuery, mode: ChaseMode, budget: &Budget) -> AnswerSet {
    let chase = materialize(ontology, mode, budget);
    let mut answers = evaluate_cq(query, &chase.facts);
    answers.complete = chase.terminated();
    answers
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{Fact, RuleId, SkolemFn};

    fn pred(name: &str, arity: usize) -> Predicate {
        Predicate::new(name, arity)
    }

    fn c(name: &str) -> Term {
        Term::constant(name)
    }

    /// The saturated restricted materialization of the film/producer example.
    fn film_store() -> FactStore {
        let w = Term::functional(SkolemFn::new(RuleId::axiom(1), "y"), vec![c("AI")]);
        FactStore::from_facts([
            Fact::unary(pred("Film", 1), c("AI")),
            Fact::binary(pred("isProdBy", 2), c("AI"), w.clone()),
            Fact::unary(pred("Producer", 1), w.clone()),
            Fact::binary(pred("prod", 2), w, c("AI")),
        ])
    }

    #[test]
    fn parse_unary_answer_query() {
        let q = parse_query("q(x) <- Film(x)").unwrap();
        assert_eq!(q.answer_vars, vec![Arc::<str>::from("x")]);
        assert_eq!(q.body, vec![Atom::vars(pred("Film", 1), &["x"])]);
    }

    #[test]
    fn parse_boolean_query() {
        let q = parse_query("q() <- prod(x,y)").unwrap();
        assert!(q.is_boolean());
        assert_eq!(q.body.len(), 1);
    }

    #[test]
    fn parse_join_query() {
        let q = parse_query("q(w,y) <- pE(w,z), pE(y,z)").unwrap();
        assert_eq!(q.answer_vars.len(), 2);
        assert_eq!(q.body.len(), 2);
        assert_eq!(q.body[0].pred, pred("pE", 2));
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(matches!(
            parse_query("q(x) <- Eq(x,y)"),
            Err(QueryParseError::EqualityAtom)
        ));
        assert!(matches!(
            parse_query("q(x) <- P(x), P(x,y)"),
            Err(QueryParseError::ArityMismatch { .. })
        ));
        assert!(matches!(
            parse_query("q(z) <- P(x)"),
            Err(QueryParseError::UnboundAnswerVariable(_))
        ));
        assert!(matches!(parse_query("q(x) <-"), Err(QueryParseError::Syntax { .. })));
    }

    #[test]
    fn answers_bind_named_constants_only() {
        let store = film_store();
        let q = parse_query("q(x) <- Film(x)").unwrap();
        let answers = evaluate_cq(&q, &store);
        assert_eq!(answers.tuples, BTreeSet::from([vec![c("AI")]]));

        // the only prod-subject is a skolem term, so no certain answers
        let q = parse_query("q(x) <- prod(x,y)").unwrap();
        assert!(evaluate_cq(&q, &store).tuples.is_empty());

        // but the boolean version holds
        let q = parse_query("q() <- prod(x,y)").unwrap();
        assert!(evaluate_cq(&q, &store).holds());
    }

    #[test]
    fn star_is_not_an_answer() {
        let store = FactStore::from_facts([Fact::unary(pred("A", 1), Term::Star)]);
        let q = parse_query("q(x) <- A(x)").unwrap();
        assert!(evaluate_cq(&q, &store).tuples.is_empty());
    }

    #[test]
    fn monotone_under_store_growth() {
        let mut small = film_store();
        let q = parse_query("q(x) <- Film(x)").unwrap();
        let before = evaluate_cq(&q, &small);
        small.insert(Fact::unary(pred("Film", 1), c("Metropolis")));
        let after = evaluate_cq(&q, &small);
        assert!(before.tuples.is_subset(&after.tuples));
    }
}
