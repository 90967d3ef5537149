use std::collections::{BTreeMap, BTreeSet};

use super::size::all_matches;
use super::{assemble, conj_list, just_acyclic, measure_of, prepare, Just, Prepared, SearchError, SearchGoal};

/// Exact minimum of the goal's measure by enumerating every match and every
/// choice of justification over the bounded structure. Meant for tests.
pub fn brute_force_min(goal: &SearchGoal, cap: usize) -> Result<u128, SearchError> {
    goal.require_skolem()?;
    let prep = prepare(goal)?;
    let mut best: Option<u128> = None;
    let mut count = 0usize;
    for (_, m) in all_matches(&prep, goal.deriver, cap, None)? {
        let open: BTreeSet<usize> = conj_list(goal.deriver, &m).into_iter().collect();
        let mut just = BTreeMap::new();
        enumerate(&prep, &mut just, open, &mut |j| {
            count += 1;
            if count > cap {
                return Err(SearchError::Cap(cap));
            }
            if just_acyclic(&prep, j) {
                let p = assemble(&goal.kb, &prep, goal.deriver, &m, j);
                let v = measure_of(goal.measure, &p);
                best = Some(best.map_or(v, |b| b.min(v)));
            }
            Ok(())
        })?;
    }
    best.ok_or_else(|| SearchError::NotEntailed(prep.goal.to_string()))
}

type Visitor<'a> = dyn FnMut(&BTreeMap<usize, Just>) -> Result<(), SearchError> + 'a;

fn enumerate(
    prep: &Prepared,
    just: &mut BTreeMap<usize, Just>,
    mut open: BTreeSet<usize>,
    visit: &mut Visitor<'_>,
) -> Result<(), SearchError> {
    let Some(a) = open.pop_first() else {
        return visit(just);
    };
    if just.contains_key(&a) {
        return enumerate(prep, just, open, visit);
    }
    let mut options = Vec::new();
    if prep.in_abox[a] {
        options.push(Just::Leaf);
    }
    options.extend(prep.incoming[a].iter().map(|&e| Just::Edge(e)));
    for j in options {
        let mut next = open.clone();
        if let Just::Edge(e) = j {
            next.extend(prep.edges[e].premises.iter().copied().filter(|p| !just.contains_key(p)));
        }
        just.insert(a, j);
        enumerate(prep, just, next, visit)?;
        just.remove(&a);
    }
    Ok(())
}
