//! Ontology frontend: a line-oriented surface syntax for normal-form
//! TBox/ABox documents and the translation of axioms into rules.
//!
//! The grammar is case-sensitive with identifiers `[A-Za-z_][A-Za-z0-9_]*`
//! and `#` comments:
//!
//! ```text
//! TBOX:
//! A1 AND ... AND An SUBCLASSOF B
//! A SUBCLASSOF ALL R . B
//! A SUBCLASSOF MAX1 R . B
//! A SUBCLASSOF SOME R . B
//! S SUBROLEOF R
//! INV(S) SUBROLEOF R
//! S COMP V SUBROLEOF R
//! ABOX:
//! A(a)
//! R(a,b)
//! ```
//!
//! `Top` and `Bot` are usable as concept names; `Eq` is reserved. Input must
//! already be in normal form; no normalization is performed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::rule::{add_top_rules, Egd, Program, Rule, Tgd};
use crate::store::FactStore;
use crate::term::{Atom, Fact, Predicate, RuleId, Term, EQ_NAME};

/// A normal-form TBox axiom, one of the seven translatable shapes.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TBoxAxiom {
    /// `A1 ⊓ ... ⊓ An ⊑ B`
    ConjSubsumption { lhs: Vec<Arc<str>>, rhs: Arc<str> },
    /// `A ⊑ ∀R.B`
    ValueRestriction { a: Arc<str>, r: Arc<str>, b: Arc<str> },
    /// `A ⊑ ≤1 R.B`
    AtMostOne { a: Arc<str>, r: Arc<str>, b: Arc<str> },
    /// `A ⊑ ∃R.B`
    Existential { a: Arc<str>, r: Arc<str>, b: Arc<str> },
    /// `S ⊑ R`
    RoleSub { s: Arc<str>, r: Arc<str> },
    /// `S⁻ ⊑ R`
    InvRoleSub { s: Arc<str>, r: Arc<str> },
    /// `S ∘ V ⊑ R`
    RoleComposition { s: Arc<str>, v: Arc<str>, r: Arc<str> },
}

impl TBoxAxiom {
    pub fn is_existential(&self) -> bool {
        matches!(self, TBoxAxiom::Existential { .. })
    }
}

impl fmt::Display for TBoxAxiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TBoxAxiom::ConjSubsumption { lhs, rhs } => {
                write!(f, "{} SUBCLASSOF {rhs}", lhs.join(" AND "))
            }
            TBoxAxiom::ValueRestriction { a, r, b } => {
                write!(f, "{a} SUBCLASSOF ALL {r} . {b}")
            }
            TBoxAxiom::AtMostOne { a, r, b } => write!(f, "{a} SUBCLASSOF MAX1 {r} . {b}"),
            TBoxAxiom::Existential { a, r, b } => write!(f, "{a} SUBCLASSOF SOME {r} . {b}"),
            TBoxAxiom::RoleSub { s, r } => write!(f, "{s} SUBROLEOF {r}"),
            TBoxAxiom::InvRoleSub { s, r } => write!(f, "INV({s}) SUBROLEOF {r}"),
            TBoxAxiom::RoleComposition { s, v, r } => write!(f, "{s} COMP {v} SUBROLEOF {r}"),
        }
    }
}

/// Symbol tables collected from a parsed document.
#[derive(Clone, Default, Debug, PartialEq, Eq)]
pub struct Signature {
    pub concepts: BTreeSet<Arc<str>>,
    pub roles: BTreeSet<Arc<str>>,
    pub individuals: BTreeSet<Arc<str>>,
}

/// A parsed ontology: TBox axioms in source order plus ABox facts.
#[derive(Clone, Default, Debug)]
pub struct Ontology {
    pub tbox: Vec<TBoxAxiom>,
    pub abox: Vec<Fact>,
    pub signature: Signature,
}

impl Ontology {
    pub fn existential_axiom_count(&self) -> usize {
        self.tbox.iter().filter(|a| a.is_existential()).count()
    }

    /// Renders the ontology back into the surface syntax.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        if !self.tbox.is_empty() {
            out.push_str("TBOX:\n");
            for axiom in &self.tbox {
                out.push_str(&axiom.to_string());
                out.push('\n');
            }
        }
        if !self.abox.is_empty() {
            out.push_str("ABOX:\n");
            for fact in &self.abox {
                out.push_str(&fact.to_string());
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("line {line}: {name} used both as a concept and as a role")]
    ArityViolation { line: usize, name: String },
    #[error("line {line}: {name} is a reserved predicate name")]
    Reserved { line: usize, name: String },
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Token<'a> {
    Ident(&'a str),
    LParen,
    RParen,
    Comma,
    Dot,
}

struct LineTokens<'a> {
    tokens: Vec<(Token<'a>, usize)>,
    pos: usize,
    line: usize,
}

impl<'a> LineTokens<'a> {
    fn lex(text: &'a str, line: usize) -> Result<Self, ParseError> {
        let mut tokens = Vec::new();
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let col = i + 1;
            match bytes[i] {
                b' ' | b'\t' | b'\r' => i += 1,
                b'(' => {
                    tokens.push((Token::LParen, col));
                    i += 1;
                }
                b')' => {
                    tokens.push((Token::RParen, col));
                    i += 1;
                }
                b',' => {
                    tokens.push((Token::Comma, col));
                    i += 1;
                }
                b'.' => {
                    tokens.push((Token::Dot, col));
                    i += 1;
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let start = i;
                    while i < bytes.len()
                        && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                    {
                        i += 1;
                    }
                    tokens.push((Token::Ident(&text[start..i]), col));
                }
                other => {
                    return Err(ParseError::Syntax {
                        line,
                        col,
                        message: format!("unexpected character {:?}", other as char),
                    })
                }
            }
        }
        Ok(LineTokens { tokens, pos: 0, line })
    }

    fn peek(&self) -> Option<Token<'a>> {
        self.tokens.get(self.pos).map(|(t, _)| *t)
    }

    fn col(&self) -> usize {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map_or(1, |(_, c)| *c)
    }

    fn next(&mut self) -> Option<Token<'a>> {
        let t = self.peek();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect_ident(&mut self, what: &str) -> Result<&'a str, ParseError> {
        match self.next() {
            Some(Token::Ident(s)) => Ok(s),
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn expect(&mut self, token: Token<'a>, what: &str) -> Result<(), ParseError> {
        match self.next() {
            Some(t) if t == token => Ok(()),
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.next() {
            Some(Token::Ident(s)) if s == kw => Ok(()),
            _ => Err(self.error(format!("expected {kw}"))),
        }
    }

    fn at_end(&self) -> bool {
        self.pos == self.tokens.len()
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing input".to_string()))
        }
    }

    fn error(&self, message: String) -> ParseError {
        ParseError::Syntax { line: self.line, col: self.col(), message }
    }
}

const KEYWORDS: &[&str] = &["AND", "SUBCLASSOF", "SUBROLEOF", "ALL", "MAX1", "SOME", "INV", "COMP"];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Tracks how each name is used so concept/role clashes surface as errors.
#[derive(Default)]
struct SymbolUse {
    kinds: BTreeMap<Arc<str>, bool>, // true = role
}

impl SymbolUse {
    fn record(&mut self, name: &str, is_role: bool, line: usize) -> Result<Arc<str>, ParseError> {
        if name == EQ_NAME {
            return Err(ParseError::Reserved { line, name: name.to_string() });
        }
        if is_keyword(name) {
            return Err(ParseError::Syntax {
                line,
                col: 1,
                message: format!("{name} is a keyword, not an identifier"),
            });
        }
        let name: Arc<str> = Arc::from(name);
        match self.kinds.get(&name) {
            Some(&existing) if existing != is_role => {
                Err(ParseError::ArityViolation { line, name: name.to_string() })
            }
            _ => {
                self.kinds.insert(name.clone(), is_role);
                Ok(name)
            }
        }
    }
}

/// Parses an ontology document. Axiom source ordinals are preserved and
/// become the ids of the translated rules.
pub fn parse_ontology(text: &str) -> Result<Ontology, ParseError> {
    #[derive(PartialEq)]
    enum Section {
        None,
        TBox,
        ABox,
    }

    let mut ontology = Ontology::default();
    let mut symbols = SymbolUse::default();
    let mut section = Section::None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(i) => &raw_line[..i],
            None => raw_line,
        };
        if line.trim().is_empty() {
            continue;
        }
        let trimmed = line.trim();
        if trimmed == "TBOX:" {
            section = Section::TBox;
            continue;
        }
        if trimmed == "ABOX:" {
            section = Section::ABox;
            continue;
        }
        let mut tokens = LineTokens::lex(line, line_no)?;
        match section {
            Section::TBox => {
                let axiom = parse_tbox_axiom(&mut tokens, &mut symbols)?;
                record_axiom_signature(&axiom, &mut ontology.signature);
                ontology.tbox.push(axiom);
            }
            Section::ABox => {
                let fact = parse_abox_line(&mut tokens, &mut symbols)?;
                for arg in &fact.args {
                    if let Term::Constant(name) = arg {
                        ontology.signature.individuals.insert(name.clone());
                    }
                }
                if fact.pred.arity() == 1 {
                    ontology.signature.concepts.insert(Arc::from(fact.pred.name()));
                } else {
                    ontology.signature.roles.insert(Arc::from(fact.pred.name()));
                }
                ontology.abox.push(fact);
            }
            Section::None => {
                return Err(ParseError::Syntax {
                    line: line_no,
                    col: 1,
                    message: "expected a TBOX: or ABOX: section header".to_string(),
                })
            }
        }
    }
    Ok(ontology)
}

fn record_axiom_signature(axiom: &TBoxAxiom, signature: &mut Signature) {
    match axiom {
        TBoxAxiom::ConjSubsumption { lhs, rhs } => {
            signature.concepts.extend(lhs.iter().cloned());
            signature.concepts.insert(rhs.clone());
        }
        TBoxAxiom::ValueRestriction { a, r, b }
        | TBoxAxiom::AtMostOne { a, r, b }
        | TBoxAxiom::Existential { a, r, b } => {
            signature.concepts.insert(a.clone());
            signature.concepts.insert(b.clone());
            signature.roles.insert(r.clone());
        }
        TBoxAxiom::RoleSub { s, r } | TBoxAxiom::InvRoleSub { s, r } => {
            signature.roles.insert(s.clone());
            signature.roles.insert(r.clone());
        }
        TBoxAxiom::RoleComposition { s, v, r } => {
            signature.roles.insert(s.clone());
            signature.roles.insert(v.clone());
            signature.roles.insert(r.clone());
        }
    }
}

fn parse_tbox_axiom(
    tokens: &mut LineTokens<'_>,
    symbols: &mut SymbolUse,
) -> Result<TBoxAxiom, ParseError> {
    let line = tokens.line;
    // INV(S) SUBROLEOF R
    if let Some(Token::Ident("INV")) = tokens.peek() {
        tokens.next();
        tokens.expect(Token::LParen, "(")?;
        let s = tokens.expect_ident("a role name")?;
        tokens.expect(Token::RParen, ")")?;
        tokens.expect_keyword("SUBROLEOF")?;
        let r = tokens.expect_ident("a role name")?;
        tokens.expect_end()?;
        return Ok(TBoxAxiom::InvRoleSub {
            s: symbols.record(s, true, line)?,
            r: symbols.record(r, true, line)?,
        });
    }

    let first = tokens.expect_ident("a concept or role name")?;
    match tokens.peek() {
        Some(Token::Ident("SUBROLEOF")) => {
            tokens.next();
            let r = tokens.expect_ident("a role name")?;
            tokens.expect_end()?;
            Ok(TBoxAxiom::RoleSub {
                s: symbols.record(first, true, line)?,
                r: symbols.record(r, true, line)?,
            })
        }
        Some(Token::Ident("COMP")) => {
            tokens.next();
            let v = tokens.expect_ident("a role name")?;
            tokens.expect_keyword("SUBROLEOF")?;
            let r = tokens.expect_ident("a role name")?;
            tokens.expect_end()?;
            Ok(TBoxAxiom::RoleComposition {
                s: symbols.record(first, true, line)?,
                v: symbols.record(v, true, line)?,
                r: symbols.record(r, true, line)?,
            })
        }
        Some(Token::Ident("AND")) => {
            let mut lhs = vec![symbols.record(first, false, line)?];
            while let Some(Token::Ident("AND")) = tokens.peek() {
                tokens.next();
                let next = tokens.expect_ident("a concept name")?;
                lhs.push(symbols.record(next, false, line)?);
            }
            tokens.expect_keyword("SUBCLASSOF")?;
            let rhs = tokens.expect_ident("a concept name")?;
            tokens.expect_end()?;
            Ok(TBoxAxiom::ConjSubsumption { lhs, rhs: symbols.record(rhs, false, line)? })
        }
        Some(Token::Ident("SUBCLASSOF")) => {
            tokens.next();
            match tokens.peek() {
                Some(Token::Ident(kw @ ("ALL" | "MAX1" | "SOME"))) => {
                    tokens.next();
                    let r = tokens.expect_ident("a role name")?;
                    tokens.expect(Token::Dot, ".")?;
                    let b = tokens.expect_ident("a concept name")?;
                    tokens.expect_end()?;
                    let a = symbols.record(first, false, line)?;
                    let r = symbols.record(r, true, line)?;
                    let b = symbols.record(b, false, line)?;
                    Ok(match kw {
                        "ALL" => TBoxAxiom::ValueRestriction { a, r, b },
                        "MAX1" => TBoxAxiom::AtMostOne { a, r, b },
                        _ => TBoxAxiom::Existential { a, r, b },
                    })
                }
                Some(Token::Ident(b)) if !is_keyword(b) => {
                    tokens.next();
                    tokens.expect_end()?;
                    Ok(TBoxAxiom::ConjSubsumption {
                        lhs: vec![symbols.record(first, false, line)?],
                        rhs: symbols.record(b, false, line)?,
                    })
                }
                _ => Err(tokens.error("expected ALL, MAX1, SOME or a concept name".to_string())),
            }
        }
        _ => Err(tokens.error("unknown axiom form".to_string())),
    }
}

fn parse_abox_line(tokens: &mut LineTokens<'_>, symbols: &mut SymbolUse) -> Result<Fact, ParseError> {
    let line = tokens.line;
    let pred_name = tokens.expect_ident("a predicate name")?;
    tokens.expect(Token::LParen, "(")?;
    let first = tokens.expect_ident("an individual")?;
    let fact = match tokens.peek() {
        Some(Token::Comma) => {
            tokens.next();
            let second = tokens.expect_ident("an individual")?;
            tokens.expect(Token::RParen, ")")?;
            let pred = symbols.record(pred_name, true, line)?;
            Fact::binary(
                Predicate::new(pred, 2),
                Term::constant(first),
                Term::constant(second),
            )
        }
        _ => {
            tokens.expect(Token::RParen, ")")?;
            let pred = symbols.record(pred_name, false, line)?;
            Fact::unary(Predicate::new(pred, 1), Term::constant(first))
        }
    };
    tokens.expect_end()?;
    Ok(fact)
}

fn concept(name: &Arc<str>) -> Predicate {
    Predicate::new(name.clone(), 1)
}

fn role(name: &Arc<str>) -> Predicate {
    Predicate::new(name.clone(), 2)
}

/// Translates one axiom into its rule, keeping the given id.
pub fn translate_axiom(axiom: &TBoxAxiom, id: RuleId) -> Rule {
    match axiom {
        TBoxAxiom::ConjSubsumption { lhs, rhs } => Rule::Tgd(Tgd::new(
            id,
            lhs.iter().map(|a| Atom::vars(concept(a), &["x"])).collect(),
            vec![Atom::vars(concept(rhs), &["x"])],
        )),
        TBoxAxiom::ValueRestriction { a, r, b } => Rule::Tgd(Tgd::new(
            id,
            vec![Atom::vars(concept(a), &["x"]), Atom::vars(role(r), &["x", "y"])],
            vec![Atom::vars(concept(b), &["y"])],
        )),
        TBoxAxiom::AtMostOne { a, r, b } => Rule::Egd(Egd::new(
            id,
            vec![
                Atom::vars(concept(a), &["x"]),
                Atom::vars(role(r), &["x", "y"]),
                Atom::vars(concept(b), &["y"]),
                Atom::vars(role(r), &["x", "z"]),
                Atom::vars(concept(b), &["z"]),
            ],
            "y",
            "z",
        )),
        TBoxAxiom::Existential { a, r, b } => Rule::Tgd(Tgd::new(
            id,
            vec![Atom::vars(concept(a), &["x"])],
            vec![Atom::vars(role(r), &["x", "y"]), Atom::vars(concept(b), &["y"])],
        )),
        TBoxAxiom::RoleSub { s, r } => Rule::Tgd(Tgd::new(
            id,
            vec![Atom::vars(role(s), &["x", "y"])],
            vec![Atom::vars(role(r), &["x", "y"])],
        )),
        TBoxAxiom::InvRoleSub { s, r } => Rule::Tgd(Tgd::new(
            id,
            vec![Atom::vars(role(s), &["y", "x"])],
            vec![Atom::vars(role(r), &["x", "y"])],
        )),
        TBoxAxiom::RoleComposition { s, v, r } => Rule::Tgd(Tgd::new(
            id,
            vec![Atom::vars(role(s), &["x", "y"]), Atom::vars(role(v), &["y", "z"])],
            vec![Atom::vars(role(r), &["x", "z"])],
        )),
    }
}

/// Translates a TBox into rules, one per axiom, ids numbered from 1 in
/// source order.
pub fn translate_tbox(tbox: &[TBoxAxiom]) -> Vec<Rule> {
    tbox.iter()
        .enumerate()
        .map(|(i, axiom)| translate_axiom(axiom, RuleId::axiom(i + 1)))
        .collect()
}

/// Builds the program of an ontology: translated TBox rules plus
/// Top-propagation rules, with the ABox as instance.
pub fn build_program(ontology: &Ontology) -> Program {
    let rules = translate_tbox(&ontology.tbox);
    let instance = FactStore::from_facts(ontology.abox.iter().cloned());
    add_top_rules(Program::new(rules, instance))
}

/// Syntactic checks of the usual role conditions. Violations are reported as
/// warnings, never hard errors; the chase and the acyclicity machinery stay
/// well-defined regardless.
pub fn sriq_warnings(ontology: &Ontology) -> Vec<String> {
    let mut warnings = Vec::new();

    // roles that appear (transitively through role inclusions) above the
    // super-role of some composition are non-simple
    let mut non_simple: BTreeSet<Arc<str>> = BTreeSet::new();
    for axiom in &ontology.tbox {
        if let TBoxAxiom::RoleComposition { r, .. } = axiom {
            non_simple.insert(r.clone());
        }
    }
    loop {
        let mut grew = false;
        for axiom in &ontology.tbox {
            if let TBoxAxiom::RoleSub { s, r } | TBoxAxiom::InvRoleSub { s, r } = axiom {
                if non_simple.contains(s) && non_simple.insert(r.clone()) {
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    for axiom in &ontology.tbox {
        if let TBoxAxiom::AtMostOne { r, .. } = axiom {
            if non_simple.contains(r) {
                warnings.push(format!(
                    "role {r} is used in a MAX1 restriction but occurs above a role composition"
                ));
            }
        }
    }

    // a cycle among composition super-roles rules out a strict role order
    let mut edges: BTreeSet<(Arc<str>, Arc<str>)> = BTreeSet::new();
    for axiom in &ontology.tbox {
        if let TBoxAxiom::RoleComposition { s, v, r } = axiom {
            for sub in [s, v] {
                if sub != r {
                    edges.insert((sub.clone(), r.clone()));
                }
            }
        }
    }
    let nodes: BTreeSet<Arc<str>> = edges.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
    let mut reach = edges.clone();
    loop {
        let mut grew = false;
        for a in &nodes {
            for b in &nodes {
                for c in &nodes {
                    if reach.contains(&(a.clone(), b.clone()))
                        && reach.contains(&(b.clone(), c.clone()))
                        && reach.insert((a.clone(), c.clone()))
                    {
                        grew = true;
                    }
                }
            }
        }
        if !grew {
            break;
        }
    }
    for n in &nodes {
        if reach.contains(&(n.clone(), n.clone())) {
            warnings.push(format!("role {n} participates in a cyclic composition hierarchy"));
        }
    }

    warnings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::partition;

    const FILM_DOC: &str = "\
# film/producer loop
TBOX:
Film SUBCLASSOF SOME isProdBy . Producer
Producer SUBCLASSOF SOME prod . Film
INV(isProdBy) SUBROLEOF prod
INV(prod) SUBROLEOF isProdBy
ABOX:
Film(AI)
";

    #[test]
    fn parses_existential_axiom() {
        let o = parse_ontology("TBOX:\nFilm SUBCLASSOF SOME isProdBy . Producer\n").unwrap();
        assert_eq!(
            o.tbox,
            vec![TBoxAxiom::Existential {
                a: Arc::from("Film"),
                r: Arc::from("isProdBy"),
                b: Arc::from("Producer"),
            }]
        );
    }

    #[test]
    fn parses_inverse_role_axiom() {
        let o = parse_ontology("TBOX:\nINV(isProdBy) SUBROLEOF prod\n").unwrap();
        assert_eq!(
            o.tbox,
            vec![TBoxAxiom::InvRoleSub { s: Arc::from("isProdBy"), r: Arc::from("prod") }]
        );
    }

    #[test]
    fn empty_document_is_empty_ontology() {
        let o = parse_ontology("").unwrap();
        assert!(o.tbox.is_empty() && o.abox.is_empty());
    }

    #[test]
    fn value_restriction_translates_to_propagation_rule() {
        let axiom = TBoxAxiom::ValueRestriction {
            a: Arc::from("A"),
            r: Arc::from("R"),
            b: Arc::from("B"),
        };
        let rule = translate_axiom(&axiom, RuleId::axiom(1));
        assert_eq!(rule.to_string(), "B(y) <- A(x), R(x,y)");
    }

    #[test]
    fn at_most_one_translates_to_egd() {
        let axiom = TBoxAxiom::AtMostOne { a: Arc::from("A"), r: Arc::from("R"), b: Arc::from("B") };
        let rule = translate_axiom(&axiom, RuleId::axiom(1));
        let egd = rule.as_egd().expect("MAX1 yields an EGD");
        assert_eq!(egd.body.len(), 5);
        assert_eq!((&*egd.lhs, &*egd.rhs), ("y", "z"));
    }

    #[test]
    fn composition_translates_to_join_rule() {
        let axiom = TBoxAxiom::RoleComposition {
            s: Arc::from("S"),
            v: Arc::from("V"),
            r: Arc::from("R"),
        };
        let rule = translate_axiom(&axiom, RuleId::axiom(3));
        assert_eq!(rule.to_string(), "R(x,z) <- S(x,y), V(y,z)");
    }

    #[test]
    fn film_document_builds_expected_program() {
        let o = parse_ontology(FILM_DOC).unwrap();
        assert_eq!(o.tbox.len(), 4);
        assert_eq!(o.existential_axiom_count(), 2);
        let program = build_program(&o);
        let parts = partition(&program.rules);
        assert_eq!(parts.existential.len(), 2);
        // two inverse rules plus one Top rule per predicate
        assert_eq!(parts.datalog.len(), 2 + 4);
        assert!(parts.egds.is_empty());
        assert_eq!(program.instance.len(), 1);
    }

    #[test]
    fn one_rule_per_axiom_before_top_augmentation() {
        let o = parse_ontology(FILM_DOC).unwrap();
        assert_eq!(translate_tbox(&o.tbox).len(), o.tbox.len());
    }

    #[test]
    fn round_trip_through_serialization() {
        let o = parse_ontology(FILM_DOC).unwrap();
        let again = parse_ontology(&o.serialize()).unwrap();
        assert_eq!(o.tbox, again.tbox);
        assert_eq!(o.abox, again.abox);
        assert_eq!(o.signature, again.signature);
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse_ontology("TBOX:\nFilm SUBCLASSOF SOME isProdBy Producer\n").unwrap_err();
        match err {
            ParseError::Syntax { line, col, .. } => {
                assert_eq!(line, 2);
                assert!(col > 1);
            }
            other => panic!("expected syntax error, got {other}"),
        }
    }

    #[test]
    fn concept_role_clash_is_an_arity_violation() {
        let err = parse_ontology("TBOX:\nA SUBCLASSOF B\nA SUBROLEOF R\n").unwrap_err();
        assert!(matches!(err, ParseError::ArityViolation { .. }));
    }

    #[test]
    fn eq_is_reserved() {
        let err = parse_ontology("TBOX:\nEq SUBCLASSOF B\n").unwrap_err();
        assert!(matches!(err, ParseError::Reserved { .. }));
    }

    #[test]
    fn missing_section_header_is_an_error() {
        let err = parse_ontology("Film(AI)\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 1, .. }));
    }

    #[test]
    fn top_and_bot_are_ordinary_concept_names() {
        let o = parse_ontology("TBOX:\nA AND B SUBCLASSOF Bot\nTop SUBCLASSOF C\n").unwrap();
        assert_eq!(o.tbox.len(), 2);
        let rules = translate_tbox(&o.tbox);
        assert_eq!(rules[0].to_string(), "Bot(x) <- A(x), B(x)");
    }

    #[test]
    fn non_simple_role_in_max1_warns() {
        let doc = "TBOX:\nS COMP V SUBROLEOF R\nA SUBCLASSOF MAX1 R . B\n";
        let o = parse_ontology(doc).unwrap();
        let warnings = sriq_warnings(&o);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("MAX1"));
    }

    #[test]
    fn composition_cycle_warns() {
        let doc = "TBOX:\nR COMP S SUBROLEOF S\nS COMP R SUBROLEOF R\n";
        let o = parse_ontology(doc).unwrap();
        let warnings = sriq_warnings(&o);
        assert!(!warnings.is_empty());
    }

    #[test]
    fn transitivity_axiom_does_not_warn() {
        let o = parse_ontology("TBOX:\nR COMP R SUBROLEOF R\n").unwrap();
        assert!(sriq_warnings(&o).is_empty());
    }
}
