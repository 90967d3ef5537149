use std::collections::{BTreeMap, BTreeSet};

use super::matcher::Matcher;
use super::{
    assemble, conj_list, min_tree_size_prepared, overhead, prepare, tree_size_within, Deriver, Just, Prepared,
    SearchError, SearchGoal,
};
use crate::graph::{self, Proof};

/// A proof with the least number of vertices, by iterative deepening over
/// the size limit.
pub fn min_size(goal: &SearchGoal) -> Result<Proof, SearchError> {
    goal.require_skolem()?;
    let prep = prepare(goal)?;
    min_size_prepared(goal, &prep, None)
}

/// With `stop = Some(n)`, the search ends once some proof of size at most `n`
/// is known, and limits above `n` are not tried. The result is minimal only
/// without `stop`.
pub(crate) fn min_size_prepared(goal: &SearchGoal, prep: &Prepared, stop: Option<u128>) -> Result<Proof, SearchError> {
    let upper = match stop {
        Some(n) => match tree_size_within(goal, prep, Some(n))? {
            Some(p) => return Ok(p),
            None => None,
        },
        None => Some(min_tree_size_prepared(goal, prep)?),
    };
    let top = match (stop, &upper) {
        (Some(n), _) => n.min(usize::MAX as u128 - 1) as usize + 1,
        (None, Some(p)) => graph::size(p),
        (None, None) => unreachable!("unlimited search keeps the upper bound"),
    };
    let mut matches = all_matches(prep, goal.deriver, goal.expansion_cap, Some(top.saturating_sub(1)))?;
    matches.sort_by_key(|(lb, _)| *lb);
    let entries = axiom_classes(goal);
    let lb = matches.first().map_or(top, |(lb, _)| *lb);
    let mut search = Search { goal, prep, entries: &entries, steps: 0, limit: 0 };
    for limit in lb..top {
        search.limit = limit;
        for (_, m) in matches.iter().take_while(|(lb, _)| *lb <= limit) {
            let list = conj_list(goal.deriver, m);
            let fixed = overhead(&prep.goal, list.len()) as usize;
            let mut st = State { just: BTreeMap::new(), open: list.iter().copied().collect(), axioms: BTreeSet::new() };
            if let Some(just) = search.dfs(&mut st, fixed)? {
                return Ok(assemble(&goal.kb, prep, goal.deriver, m, &just));
            }
        }
    }
    match upper {
        Some(p) => Ok(p),
        None => min_tree_size_prepared(goal, prep),
    }
}

/// Every positional match of the goal into the chase, paired with its
/// distinct atom count plus the fixed conjunction and goal steps. Matches
/// whose count exceeds `max_size` are skipped.
pub(crate) fn all_matches(
    prep: &Prepared,
    deriver: Deriver,
    cap: usize,
    max_size: Option<usize>,
) -> Result<Vec<(usize, Vec<usize>)>, SearchError> {
    struct St<'a> {
        prep: &'a Prepared,
        m: Matcher,
        order: Vec<usize>,
        deriver: Deriver,
        used: Vec<u32>,
        distinct: usize,
        chosen: Vec<usize>,
        out: Vec<(usize, Vec<usize>)>,
        cap: usize,
        max_size: usize,
    }
    fn go(st: &mut St, k: usize) -> Result<(), SearchError> {
        if st.distinct > st.max_size {
            return Ok(());
        }
        if k == st.order.len() {
            let len = if st.deriver == Deriver::SkPrime { st.distinct } else { st.chosen.len() };
            let total = st.distinct + overhead(&st.prep.goal, len) as usize;
            if total > st.max_size {
                return Ok(());
            }
            if st.out.len() >= st.cap {
                return Err(SearchError::Cap(st.cap));
            }
            st.out.push((total, st.chosen.clone()));
            return Ok(());
        }
        let ai = st.order[k];
        let mark = st.m.mark();
        for i in 0..st.m.candidates(ai).len() {
            let c = st.m.candidates(ai)[i];
            if !st.m.bind(ai, c) {
                continue;
            }
            st.chosen[ai] = c;
            st.used[c] += 1;
            let fresh = usize::from(st.used[c] == 1);
            st.distinct += fresh;
            let r = go(st, k + 1);
            st.used[c] -= 1;
            st.distinct -= fresh;
            st.m.undo(mark);
            r?;
        }
        Ok(())
    }
    let mut st = St {
        prep,
        m: Matcher::new(prep),
        order: prep.connected_order(),
        deriver,
        used: vec![0; prep.chase.facts.len()],
        distinct: 0,
        chosen: vec![0; prep.goal.atoms.len()],
        out: Vec::new(),
        cap,
        max_size: max_size.unwrap_or(usize::MAX),
    };
    go(&mut st, 0)?;
    Ok(st.out)
}

/// For each TBox position, the first position holding an equal entry.
fn axiom_classes(goal: &SearchGoal) -> Vec<usize> {
    let tbox = &goal.kb.tbox;
    (0..tbox.len()).map(|i| tbox.iter().position(|e| e == &tbox[i]).expect("entry present")).collect()
}

struct State {
    just: BTreeMap<usize, Just>,
    open: BTreeSet<usize>,
    axioms: BTreeSet<usize>,
}

struct Search<'a> {
    goal: &'a SearchGoal,
    prep: &'a Prepared,
    entries: &'a [usize],
    steps: usize,
    limit: usize,
}

impl Search<'_> {
    fn reaches(&self, just: &BTreeMap<usize, Just>, from: usize, target: usize) -> bool {
        let mut stack = vec![from];
        let mut seen = BTreeSet::new();
        while let Some(a) = stack.pop() {
            if a == target {
                return true;
            }
            if !seen.insert(a) {
                continue;
            }
            if let Some(Just::Edge(e)) = just.get(&a) {
                stack.extend(self.prep.edges[*e].premises.iter().copied());
            }
        }
        false
    }

    fn dfs(&mut self, st: &mut State, fixed: usize) -> Result<Option<BTreeMap<usize, Just>>, SearchError> {
        self.steps += 1;
        if self.steps > self.goal.expansion_cap {
            return Err(SearchError::Cap(self.goal.expansion_cap));
        }
        if st.just.len() + st.open.len() + st.axioms.len() + fixed > self.limit {
            return Ok(None);
        }
        let Some(a) = st.open.pop_first() else {
            return Ok(Some(st.just.clone()));
        };
        if self.prep.in_abox[a] {
            st.just.insert(a, Just::Leaf);
            let r = self.dfs(st, fixed)?;
            st.just.remove(&a);
            st.open.insert(a);
            return Ok(r);
        }
        for &ei in &self.prep.incoming[a] {
            let e = &self.prep.edges[ei];
            if e.premises.iter().any(|&p| self.reaches(&st.just, p, a)) {
                continue;
            }
            let added: Vec<usize> =
                e.premises.iter().copied().filter(|p| !st.just.contains_key(p) && !st.open.contains(p)).collect();
            let ax = self.entries[e.rule];
            let new_ax = st.axioms.insert(ax);
            st.open.extend(added.iter().copied());
            st.just.insert(a, Just::Edge(ei));
            let r = self.dfs(st, fixed)?;
            st.just.remove(&a);
            for p in &added {
                st.open.remove(p);
            }
            if new_ax {
                st.axioms.remove(&ax);
            }
            if r.is_some() {
                st.open.insert(a);
                return Ok(r);
            }
        }
        st.open.insert(a);
        Ok(None)
    }
}
