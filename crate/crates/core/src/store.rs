//! Indexed fact storage and homomorphism enumeration.
//!
//! A `FactStore` keeps ground atoms under set semantics, indexed by predicate
//! and by (predicate, position, term) for join evaluation. Facts keep their
//! insertion order, which the chase engine uses to track deltas for
//! semi-naive evaluation.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use indexmap::IndexSet;

use crate::term::{Atom, Fact, PatternTerm, Predicate, Substitution, Term};

#[derive(Clone, Default)]
pub struct FactStore {
    facts: IndexSet<Fact>,
    by_pred: HashMap<Predicate, Vec<usize>>,
    by_pos: HashMap<(Predicate, usize, Term), Vec<usize>>,
    max_depth: u32,
    bot_count: usize,
    top_count: usize,
}

impl FactStore {
    pub fn new() -> Self {
        FactStore::default()
    }

    pub fn from_facts<I: IntoIterator<Item = Fact>>(facts: I) -> Self {
        let mut store = FactStore::new();
        for f in facts {
            store.insert(f);
        }
        store
    }

    /// Inserts a fact, returning whether it was new.
    pub fn insert(&mut self, fact: Fact) -> bool {
        let (idx, new) = self.facts.insert_full(fact);
        if new {
            let fact = self.facts.get_index(idx).expect("just inserted");
            self.max_depth = self.max_depth.max(fact.depth());
            if fact.pred.is_bot() {
                self.bot_count += 1;
            }
            if fact.pred.is_top() {
                self.top_count += 1;
            }
            self.by_pred.entry(fact.pred.clone()).or_default().push(idx);
            for (pos, term) in fact.args.iter().enumerate() {
                self.by_pos
                    .entry((fact.pred.clone(), pos, term.clone()))
                    .or_default()
                    .push(idx);
            }
        }
        new
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.contains(fact)
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    pub fn get(&self, idx: usize) -> Option<&Fact> {
        self.facts.get_index(idx)
    }

    /// Facts added at or after the given insertion index.
    pub fn iter_from(&self, start: usize) -> impl Iterator<Item = &Fact> {
        (start..self.facts.len()).filter_map(|i| self.facts.get_index(i))
    }

    pub fn max_term_depth(&self) -> u32 {
        self.max_depth
    }

    pub fn has_bot(&self) -> bool {
        self.bot_count > 0
    }

    pub fn non_top_len(&self) -> usize {
        self.facts.len() - self.top_count
    }

    pub fn facts_with_pred(&self, pred: &Predicate) -> impl Iterator<Item = &Fact> {
        self.by_pred
            .get(pred)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
            .iter()
            .filter_map(|&i| self.facts.get_index(i))
    }

    /// Facts of `pred` whose argument at `pos` equals `term`.
    pub fn facts_with_arg(&self, pred: &Predicate, pos: usize, term: &Term) -> impl Iterator<Item = &Fact> {
        self.by_pos
            .get(&(pred.clone(), pos, term.clone()))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
            .iter()
            .filter_map(|&i| self.facts.get_index(i))
    }

    /// All distinct subterms of all fact arguments.
    pub fn term_universe(&self) -> Vec<Term> {
        let mut seen: HashSet<&Term> = HashSet::new();
        let mut out = Vec::new();
        for fact in self.facts.iter() {
            for arg in &fact.args {
                for sub in arg.subterms() {
                    if seen.insert(sub) {
                        out.push(sub.clone());
                    }
                }
            }
        }
        out
    }

    pub fn abstract_constants(&self, c: &Term) -> FactStore {
        FactStore::from_facts(self.facts.iter().map(|f| f.abstract_constants(c)))
    }

    /// Facts sorted by predicate, then argument order.
    pub fn sorted_facts(&self) -> Vec<Fact> {
        let mut out: Vec<Fact> = self.facts.iter().cloned().collect();
        out.sort();
        out
    }

    /// Sorted facts with `Top` atoms dropped, the shape used by golden
    /// comparisons and fact dumps that ignore propagation noise.
    pub fn sorted_non_top_facts(&self) -> Vec<Fact> {
        let mut out: Vec<Fact> = self.facts.iter().filter(|f| !f.pred.is_top()).cloned().collect();
        out.sort();
        out
    }
}

impl FromIterator<Fact> for FactStore {
    fn from_iter<I: IntoIterator<Item = Fact>>(iter: I) -> Self {
        FactStore::from_facts(iter)
    }
}

impl std::fmt::Debug for FactStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.sorted_facts()).finish()
    }
}

/// Restriction on which facts an atom may match during a join, expressed over
/// insertion indices. Used by semi-naive rounds.
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum MatchRange {
    Full,
    /// Only facts inserted before the given index.
    Below(usize),
    /// Only facts inserted at or after the given index.
    AtLeast(usize),
}

impl MatchRange {
    fn admits(&self, idx: usize) -> bool {
        match *self {
            MatchRange::Full => true,
            MatchRange::Below(n) => idx < n,
            MatchRange::AtLeast(n) => idx >= n,
        }
    }
}

/// Enumerates every substitution taking all of `body` into the store.
/// The enumeration is complete and duplicate-free.
pub fn match_body(body: &[Atom], store: &FactStore) -> Vec<Substitution> {
    match_body_seeded(body, store, &Substitution::new())
}

/// Like [`match_body`] but starting from a partial substitution; returned
/// substitutions extend the seed.
pub fn match_body_seeded(body: &[Atom], store: &FactStore, seed: &Substitution) -> Vec<Substitution> {
    assert!(!body.is_empty(), "cannot match an empty body");
    let ranges = vec![MatchRange::Full; body.len()];
    let mut out = Vec::new();
    let mut binding = seed.clone();
    search(body, &ranges, store, &mut binding, &mut vec![false; body.len()], &mut |s| {
        out.push(s.clone());
        true
    });
    out
}

/// Whether some substitution extending `seed` maps `body` into the store.
pub fn match_exists(body: &[Atom], store: &FactStore, seed: &Substitution) -> bool {
    let ranges = vec![MatchRange::Full; body.len()];
    let mut found = false;
    let mut binding = seed.clone();
    search(body, &ranges, store, &mut binding, &mut vec![false; body.len()], &mut |_| {
        found = true;
        false
    });
    found
}

/// Matching with a per-atom index restriction.
pub(crate) fn match_body_ranged(
    body: &[Atom],
    ranges: &[MatchRange],
    store: &FactStore,
    out: &mut Vec<Substitution>,
) {
    let mut binding = Substitution::new();
    search(body, ranges, store, &mut binding, &mut vec![false; body.len()], &mut |s| {
        out.push(s.clone());
        true
    });
}

/// Backtracking join. At each step the unprocessed atom with the smallest
/// candidate estimate is expanded (bound positions consult the positional
/// index). The visitor returns false to stop the enumeration early.
fn search(
    body: &[Atom],
    ranges: &[MatchRange],
    store: &FactStore,
    binding: &mut Substitution,
    done: &mut Vec<bool>,
    visit: &mut dyn FnMut(&Substitution) -> bool,
) -> bool {
    let next = match pick_next_atom(body, ranges, store, binding, done) {
        Some(i) => i,
        None => return visit(binding),
    };
    done[next] = true;
    let atom = &body[next];
    let range = ranges[next];

    let candidates = candidate_indices(atom, range, store, binding);
    for idx in candidates {
        let fact = match store.get(idx) {
            Some(f) => f,
            None => continue,
        };
        let mut bound: Vec<Arc<str>> = Vec::new();
        if unify_atom(atom, fact, binding, &mut bound) {
            if !search(body, ranges, store, binding, done, visit) {
                for v in bound {
                    binding.remove(&v);
                }
                done[next] = false;
                return false;
            }
        }
        for v in bound {
            binding.remove(&v);
        }
    }
    done[next] = false;
    true
}

fn pick_next_atom(
    body: &[Atom],
    ranges: &[MatchRange],
    store: &FactStore,
    binding: &Substitution,
    done: &[bool],
) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for (i, atom) in body.iter().enumerate() {
        if done[i] {
            continue;
        }
        let estimate = estimate_candidates(atom, ranges[i], store, binding);
        if best.map_or(true, |(_, e)| estimate < e) {
            best = Some((i, estimate));
        }
    }
    best.map(|(i, _)| i)
}

fn estimate_candidates(atom: &Atom, range: MatchRange, store: &FactStore, binding: &Substitution) -> usize {
    let mut best = usize::MAX;
    for (pos, arg) in atom.args.iter().enumerate() {
        if let Some(term) = resolved_term(arg, binding) {
            let len = store
                .by_pos
                .get(&(atom.pred.clone(), pos, term))
                .map_or(0, Vec::len);
            best = best.min(len);
        }
    }
    if best == usize::MAX {
        best = store.by_pred.get(&atom.pred).map_or(0, Vec::len);
    }
    // ranges only narrow the candidate set; the estimate stays admissible
    let _ = range;
    best
}

fn candidate_indices(
    atom: &Atom,
    range: MatchRange,
    store: &FactStore,
    binding: &Substitution,
) -> Vec<usize> {
    let mut best: Option<&Vec<usize>> = None;
    for (pos, arg) in atom.args.iter().enumerate() {
        if let Some(term) = resolved_term(arg, binding) {
            match store.by_pos.get(&(atom.pred.clone(), pos, term)) {
                Some(list) => {
                    if best.map_or(true, |b| list.len() < b.len()) {
                        best = Some(list);
                    }
                }
                None => return Vec::new(),
            }
        }
    }
    let list = match best {
        Some(list) => list,
        None => match store.by_pred.get(&atom.pred) {
            Some(list) => list,
            None => return Vec::new(),
        },
    };
    list.iter().copied().filter(|&i| range.admits(i)).collect()
}

/// A pattern argument resolves to a term when it is ground or a variable
/// already bound. Functional patterns with unbound variables do not resolve.
fn resolved_term(arg: &PatternTerm, binding: &Substitution) -> Option<Term> {
    match arg {
        PatternTerm::Var(v) => binding.get(v).cloned(),
        PatternTerm::Ground(t) => Some(t.clone()),
        PatternTerm::App(_, _) => match binding.apply_pattern(arg) {
            PatternTerm::Ground(t) => Some(t),
            _ => None,
        },
    }
}

fn unify_atom(atom: &Atom, fact: &Fact, binding: &mut Substitution, bound: &mut Vec<Arc<str>>) -> bool {
    if atom.pred != fact.pred {
        return false;
    }
    for (arg, term) in atom.args.iter().zip(&fact.args) {
        if !unify_arg(arg, term, binding, bound) {
            return false;
        }
    }
    true
}

fn unify_arg(arg: &PatternTerm, term: &Term, binding: &mut Substitution, bound: &mut Vec<Arc<str>>) -> bool {
    match arg {
        PatternTerm::Var(v) => match binding.get(v) {
            Some(existing) => existing == term,
            None => {
                binding.bind(v.clone(), term.clone());
                bound.push(v.clone());
                true
            }
        },
        PatternTerm::Ground(t) => t == term,
        PatternTerm::App(sk, args) => match term {
            Term::Functional(ft) if &ft.skolem == sk && ft.args.len() == args.len() => args
                .iter()
                .zip(&ft.args)
                .all(|(a, t)| unify_arg(a, t, binding, bound)),
            _ => false,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{RuleId, SkolemFn};

    fn pred(name: &str, arity: usize) -> Predicate {
        Predicate::new(name, arity)
    }

    fn c(name: &str) -> Term {
        Term::constant(name)
    }

    #[test]
    fn single_atom_match() {
        let film = pred("Film", 1);
        let store = FactStore::from_facts([Fact::unary(film.clone(), c("AI"))]);
        let matches = match_body(&[Atom::vars(film, &["x"])], &store);
        assert_eq!(matches.len(), 1);
        assert_eq!(matches[0].get("x"), Some(&c("AI")));
    }

    #[test]
    fn chain_join() {
        let r = pred("R", 2);
        let store = FactStore::from_facts([
            Fact::binary(r.clone(), c("a"), c("b")),
            Fact::binary(r.clone(), c("b"), c("c")),
        ]);
        let body = [Atom::vars(r.clone(), &["x", "y"]), Atom::vars(r, &["y", "z"])];
        let matches = match_body(&body, &store);
        assert_eq!(matches.len(), 1);
        let m = &matches[0];
        assert_eq!(
            (m.get("x"), m.get("y"), m.get("z")),
            (Some(&c("a")), Some(&c("b")), Some(&c("c")))
        );
    }

    #[test]
    fn empty_store_yields_no_matches() {
        let a = pred("A", 1);
        let matches = match_body(&[Atom::vars(a, &["x"])], &FactStore::new());
        assert!(matches.is_empty());
    }

    #[test]
    fn repeated_variable_within_an_atom() {
        let r = pred("R", 2);
        let store = FactStore::from_facts([
            Fact::binary(r.clone(), c("a"), c("a")),
            Fact::binary(r.clone(), c("a"), c("b")),
        ]);
        let matches = match_body(&[Atom::vars(r, &["x", "x"])], &store);
        assert_eq!(matches.len(), 1);
        assert_eq!(matches[0].get("x"), Some(&c("a")));
    }

    #[test]
    fn seeded_match_respects_partial_binding() {
        let r = pred("R", 2);
        let store = FactStore::from_facts([
            Fact::binary(r.clone(), c("a"), c("b")),
            Fact::binary(r.clone(), c("c"), c("d")),
        ]);
        let seed: Substitution = [(Arc::from("x"), c("c"))].into_iter().collect();
        let matches = match_body_seeded(&[Atom::vars(r, &["x", "y"])], &store, &seed);
        assert_eq!(matches.len(), 1);
        assert_eq!(matches[0].get("y"), Some(&c("d")));
    }

    #[test]
    fn insert_is_set_semantics() {
        let a = pred("A", 1);
        let mut store = FactStore::new();
        assert!(store.insert(Fact::unary(a.clone(), c("x"))));
        assert!(!store.insert(Fact::unary(a, c("x"))));
        assert_eq!(store.len(), 1);
    }

    #[test]
    fn functional_pattern_unification() {
        let r = pred("R", 2);
        let sk = SkolemFn::new(RuleId::axiom(1), "y");
        let store = FactStore::from_facts([Fact::binary(
            r.clone(),
            c("a"),
            Term::functional(sk.clone(), vec![c("a")]),
        )]);
        let atom = Atom::new(
            r,
            vec![PatternTerm::var("x"), PatternTerm::App(sk, vec![PatternTerm::var("x")])],
        );
        let matches = match_body(&[atom], &store);
        assert_eq!(matches.len(), 1);
        assert_eq!(matches[0].get("x"), Some(&c("a")));
    }

    #[test]
    fn depth_and_bot_tracking() {
        let r = pred("R", 2);
        let sk = SkolemFn::new(RuleId::axiom(1), "y");
        let mut store = FactStore::new();
        store.insert(Fact::binary(r, c("a"), Term::functional(sk, vec![c("a")])));
        assert_eq!(store.max_term_depth(), 1);
        assert!(!store.has_bot());
        store.insert(Fact::unary(Predicate::bot(), c("a")));
        assert!(store.has_bot());
    }
}
