//! Equality handling by renaming: congruence closure over the terms of a
//! fact store, and rewriting of facts to class representatives.
//!
//! The representative of a class is its minimum under the canonical term
//! order, so rewriting only ever replaces terms by terms of equal or lesser
//! depth.

use std::collections::HashMap;

use crate::rule::Egd;
use crate::store::{match_body, FactStore};
use crate::term::{Fact, Term};

/// Union-find over a fixed universe of terms, closed under congruence: two
/// functional terms of the universe are merged once their Skolem symbols
/// agree and their arguments are pairwise merged.
pub struct CongruenceClasses {
    ids: HashMap<Term, usize>,
    terms: Vec<Term>,
    parent: Vec<usize>,
    /// Class minimum under the canonical term order, tracked per root.
    min_member: Vec<usize>,
}

impl CongruenceClasses {
    pub fn new<I: IntoIterator<Item = Term>>(universe: I) -> Self {
        let mut ids = HashMap::new();
        let mut terms = Vec::new();
        for t in universe {
            if !ids.contains_key(&t) {
                ids.insert(t.clone(), terms.len());
                terms.push(t);
            }
        }
        let n = terms.len();
        CongruenceClasses {
            ids,
            terms,
            parent: (0..n).collect(),
            min_member: (0..n).collect(),
        }
    }

    fn find(&self, mut i: usize) -> usize {
        while self.parent[i] != i {
            i = self.parent[i];
        }
        i
    }

    fn union_ids(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        let (ma, mb) = (self.min_member[ra], self.min_member[rb]);
        if self.terms[ma] < self.terms[mb] {
            self.min_member[rb] = ma;
        }
        true
    }

    /// Merges the classes of two universe terms.
    pub fn union(&mut self, a: &Term, b: &Term) -> bool {
        let (ia, ib) = (self.ids[a], self.ids[b]);
        self.union_ids(ia, ib)
    }

    pub fn same_class(&self, a: &Term, b: &Term) -> bool {
        match (self.ids.get(a), self.ids.get(b)) {
            (Some(&ia), Some(&ib)) => self.find(ia) == self.find(ib),
            _ => a == b,
        }
    }

    /// Class representative of a universe term: the minimum member under the
    /// canonical order. Terms outside the universe represent themselves.
    pub fn representative(&self, t: &Term) -> Term {
        match self.ids.get(t) {
            Some(&i) => self.terms[self.min_member[self.find(i)]].clone(),
            None => t.clone(),
        }
    }

    /// Propagates merges upward through functional terms until stable.
    pub fn close(&mut self) {
        let functional: Vec<usize> = (0..self.terms.len())
            .filter(|&i| self.terms[i].skolem().is_some())
            .collect();
        loop {
            let mut changed = false;
            for (k, &i) in functional.iter().enumerate() {
                for &j in &functional[k + 1..] {
                    if self.find(i) == self.find(j) {
                        continue;
                    }
                    let (ti, tj) = (&self.terms[i], &self.terms[j]);
                    if ti.skolem() != tj.skolem() || ti.args().len() != tj.args().len() {
                        continue;
                    }
                    let congruent = ti
                        .args()
                        .iter()
                        .zip(tj.args())
                        .all(|(a, b)| self.same_class(a, b));
                    if congruent {
                        self.union_ids(i, j);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Canonical form of a term under the closure: representatives are looked
    /// up first, arguments are rewritten, and the rebuilt term is looked up
    /// again until stable. The result never gets deeper.
    pub fn rewrite(&self, t: &Term, memo: &mut HashMap<Term, Term>) -> Term {
        if let Some(hit) = memo.get(t) {
            return hit.clone();
        }
        let t1 = self.representative(t);
        let result = match &t1 {
            Term::Constant(_) | Term::Star => t1.clone(),
            Term::Functional(ft) => {
                let rebuilt = Term::functional(
                    ft.skolem.clone(),
                    ft.args.iter().map(|a| self.rewrite(a, memo)).collect(),
                );
                if rebuilt == t1 {
                    t1.clone()
                } else {
                    self.rewrite(&rebuilt, memo)
                }
            }
        };
        debug_assert!(result.depth() <= t.depth());
        memo.insert(t.clone(), result.clone());
        result
    }
}

/// Record of every term replaced during a chase run, mapping it to its final
/// representative.
#[derive(Clone, Default)]
pub struct RewriteLog {
    entries: HashMap<Term, Term>,
}

impl RewriteLog {
    pub fn new() -> Self {
        RewriteLog::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn record(&mut self, from: Term, to: Term) {
        if from != to {
            self.entries.insert(from, to);
        }
    }

    /// Final representative of `t`, following replacement chains.
    pub fn resolve(&self, t: &Term) -> Term {
        let mut current = t;
        loop {
            match self.entries.get(current) {
                Some(next) => current = next,
                None => return current.clone(),
            }
        }
    }

    /// Extends this log with a later one; existing entries are redirected
    /// through the newer replacements.
    pub fn absorb(&mut self, later: RewriteLog) {
        for target in self.entries.values_mut() {
            *target = later.resolve(target);
        }
        for (from, to) in later.entries {
            self.entries.entry(from).or_insert(to);
        }
    }

    /// Path-compresses every entry to its final representative.
    pub fn compress(&mut self) {
        let keys: Vec<Term> = self.entries.keys().cloned().collect();
        for k in keys {
            let resolved = self.resolve(&k);
            self.entries.insert(k, resolved);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Term, &Term)> {
        self.entries.iter()
    }
}

impl std::fmt::Debug for RewriteLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut entries: Vec<_> = self.entries.iter().collect();
        entries.sort();
        f.debug_map().entries(entries.iter().map(|(k, v)| (k.to_string(), v.to_string()))).finish()
    }
}

/// One equality round: matches every EGD body against the store, builds the
/// congruence closure of the equated pairs, and rewrites every fact to class
/// representatives. Returns `None` when no EGD equates two distinct terms.
pub(crate) fn egd_pass(egds: &[Egd], store: &FactStore) -> Option<(FactStore, RewriteLog)> {
    let mut pairs: Vec<(Term, Term)> = Vec::new();
    for egd in egds {
        for m in match_body(&egd.body, store) {
            let lhs = m.get(&egd.lhs).expect("lhs occurs in body").clone();
            let rhs = m.get(&egd.rhs).expect("rhs occurs in body").clone();
            if lhs != rhs {
                pairs.push((lhs, rhs));
            }
        }
    }
    if pairs.is_empty() {
        return None;
    }

    let mut cc = CongruenceClasses::new(store.term_universe());
    for (a, b) in &pairs {
        cc.union(a, b);
    }
    cc.close();

    let mut memo = HashMap::new();
    let mut log = RewriteLog::new();
    let mut rewritten = FactStore::new();
    for fact in store.iter() {
        let args: Vec<Term> = fact.args.iter().map(|t| cc.rewrite(t, &mut memo)).collect();
        rewritten.insert(Fact::new(fact.pred.clone(), args));
    }
    for (from, to) in &memo {
        log.record(from.clone(), to.clone());
    }
    Some((rewritten, log))
}

/// Applies a set of EGDs to fixpoint: matching, congruence closure and
/// rewriting are iterated until no body equates two distinct terms of the
/// current store.
pub fn apply_egds(egds: &[Egd], store: &FactStore) -> (FactStore, RewriteLog) {
    let mut current = store.clone();
    let mut log = RewriteLog::new();
    while let Some((next, pass_log)) = egd_pass(egds, &current) {
        current = next;
        log.absorb(pass_log);
    }
    log.compress();
    (current, log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{Atom, Predicate, RuleId, SkolemFn};

    fn c(name: &str) -> Term {
        Term::constant(name)
    }

    fn f(arg: Term) -> Term {
        Term::functional(SkolemFn::new(RuleId::axiom(1), "y"), vec![arg])
    }

    fn functional_merge_egd() -> Egd {
        let r = Predicate::new("R", 2);
        Egd::new(
            RuleId::new("e1"),
            vec![Atom::vars(r.clone(), &["z", "x1"]), Atom::vars(r, &["z", "x2"])],
            "x1",
            "x2",
        )
    }

    #[test]
    fn merge_replaces_deeper_term() {
        let r = Predicate::new("R", 2);
        let store = FactStore::from_facts([
            Fact::binary(r.clone(), c("a"), c("b")),
            Fact::binary(r.clone(), c("a"), f(c("b"))),
        ]);
        let (result, log) = apply_egds(&[functional_merge_egd()], &store);
        assert_eq!(result.sorted_facts(), vec![Fact::binary(r, c("a"), c("b"))]);
        assert_eq!(log.resolve(&f(c("b"))), c("b"));
    }

    #[test]
    fn no_match_leaves_store_unchanged() {
        let a = Predicate::new("A", 1);
        let store = FactStore::from_facts([Fact::unary(a, c("x"))]);
        let (result, log) = apply_egds(&[functional_merge_egd()], &store);
        assert_eq!(result.sorted_facts(), store.sorted_facts());
        assert!(log.is_empty());
    }

    #[test]
    fn ties_at_equal_depth_break_by_name() {
        let r = Predicate::new("R", 2);
        let store = FactStore::from_facts([
            Fact::binary(r.clone(), c("a"), c("b")),
            Fact::binary(r.clone(), c("a"), c("c")),
        ]);
        let (result, log) = apply_egds(&[functional_merge_egd()], &store);
        assert_eq!(result.sorted_facts(), vec![Fact::binary(r, c("a"), c("b"))]);
        assert_eq!(log.resolve(&c("c")), c("b"));
    }

    #[test]
    fn congruence_closes_under_function_application() {
        // merging b with c must also merge f(b) with f(c)
        let mut cc = CongruenceClasses::new([c("b"), c("c"), f(c("b")), f(c("c"))]);
        cc.union(&c("b"), &c("c"));
        cc.close();
        assert!(cc.same_class(&f(c("b")), &f(c("c"))));
        assert_eq!(cc.representative(&f(c("c"))), f(c("b")));
    }

    #[test]
    fn rewrite_canonicalizes_nested_occurrences() {
        // b ~ f(b); a fact mentioning g(f(b)) must rewrite to g(b) even
        // though g(b) is not in the universe
        let g = |t: Term| Term::functional(SkolemFn::new(RuleId::axiom(2), "y"), vec![t]);
        let mut cc = CongruenceClasses::new([c("b"), f(c("b")), g(f(c("b")))]);
        cc.union(&c("b"), &f(c("b")));
        cc.close();
        let mut memo = HashMap::new();
        assert_eq!(cc.rewrite(&g(f(c("b"))), &mut memo), g(c("b")));
    }

    #[test]
    fn rewrite_prefers_class_minimum_over_rebuild() {
        // classes {c, d} and {f(d), e}: f(d) must collapse to e, not f(c)
        let mut cc = CongruenceClasses::new([c("c"), c("d"), f(c("d")), c("e")]);
        cc.union(&c("c"), &c("d"));
        cc.union(&f(c("d")), &c("e"));
        cc.close();
        let mut memo = HashMap::new();
        assert_eq!(cc.rewrite(&f(c("d")), &mut memo), c("e"));
    }

    #[test]
    fn log_is_idempotent_after_compression() {
        let mut log = RewriteLog::new();
        log.record(f(f(c("b"))), f(c("b")));
        log.record(f(c("b")), c("b"));
        log.compress();
        for (from, _) in log.iter() {
            assert_eq!(log.resolve(&log.resolve(from)), log.resolve(from));
        }
        assert_eq!(log.resolve(&f(f(c("b")))), c("b"));
    }
}
