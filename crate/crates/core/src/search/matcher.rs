use std::collections::HashMap;

use super::Prepared;
use crate::logic::Term;

const UNBOUND: u32 = u32::MAX;
const ABSENT: u32 = u32::MAX - 1;

#[derive(Debug, Clone, Copy)]
enum Slot {
    Var(usize),
    Term(u32),
}

/// Goal atoms and chase facts over interned terms, for allocation-free matching.
pub(crate) struct Matcher {
    atoms: Vec<Vec<Slot>>,
    cands: Vec<Vec<usize>>,
    fact_args: Vec<Vec<u32>>,
    pub assign: Vec<u32>,
    trail: Vec<usize>,
}

impl Matcher {
    pub fn new(prep: &Prepared) -> Self {
        let mut ids: HashMap<&Term, u32> = HashMap::new();
        let fact_args: Vec<Vec<u32>> = prep
            .chase
            .facts
            .iter()
            .map(|f| {
                f.args
                    .iter()
                    .map(|t| {
                        let next = ids.len() as u32;
                        *ids.entry(t).or_insert(next)
                    })
                    .collect()
            })
            .collect();
        let mut vars: HashMap<&str, usize> = HashMap::new();
        let atoms: Vec<Vec<Slot>> = prep
            .goal
            .atoms
            .iter()
            .map(|a| {
                a.args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => {
                            let next = vars.len();
                            Slot::Var(*vars.entry(v.as_str()).or_insert(next))
                        }
                        _ => Slot::Term(ids.get(t).copied().unwrap_or(ABSENT)),
                    })
                    .collect()
            })
            .collect();
        let cands = prep.goal.atoms.iter().map(|a| prep.by_pred.get(&a.pred).cloned().unwrap_or_default()).collect();
        let n = vars.len();
        Matcher { atoms, cands, fact_args, assign: vec![UNBOUND; n], trail: Vec::new() }
    }

    pub fn candidates(&self, atom: usize) -> &[usize] {
        &self.cands[atom]
    }

    pub fn mark(&self) -> usize {
        self.trail.len()
    }

    /// Extends the assignment so goal atom `atom` maps to fact `fact`.
    /// On failure the assignment is left unchanged.
    pub fn bind(&mut self, atom: usize, fact: usize) -> bool {
        let start = self.trail.len();
        let args = &self.fact_args[fact];
        let slots = &self.atoms[atom];
        if args.len() != slots.len() {
            return false;
        }
        for (s, &t) in slots.iter().zip(args) {
            let ok = match *s {
                Slot::Term(c) => c == t,
                Slot::Var(v) => match self.assign[v] {
                    UNBOUND => {
                        self.assign[v] = t;
                        self.trail.push(v);
                        true
                    }
                    b => b == t,
                },
            };
            if !ok {
                self.undo(start);
                return false;
            }
        }
        true
    }

    pub fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().expect("nonempty trail");
            self.assign[v] = UNBOUND;
        }
    }
}
