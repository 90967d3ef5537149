//! Canonical forms of conjunctive queries and atom matching.

use std::collections::{BTreeMap, BTreeSet};

use crate::logic::{Atom, Cq, Substitution, Term};

/// Upper bound on the number of complete individualization leaves explored
/// when symmetric variables cannot be told apart by refinement.
const LEAF_CAP: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Neighbour {
    Fixed(Term),
    Same,
    Colour(usize),
    Unary,
}

/// Renames the existential variables of `q` to `v0, v1, ...` so that any two
/// queries equal up to a bijective renaming of existential variables (and
/// duplicate atoms) produce the same result. Answer variables and constants
/// are kept.
pub fn canonicalize_cq(q: &Cq) -> Cq {
    let atoms: Vec<Atom> = q.atoms.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let vars: Vec<String> = q.existential_vars();
    let prefix = fresh_prefix(&q.answer_vars);
    if vars.is_empty() {
        return Cq { answer_vars: q.answer_vars.clone(), atoms };
    }
    let index: BTreeMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let colours = refine(&atoms, &index, vec![0; vars.len()]);
    let mut best: Option<Vec<Atom>> = None;
    let mut leaves = 0usize;
    search(&atoms, &vars, &index, colours, &prefix, &mut best, &mut leaves);
    Cq { answer_vars: q.answer_vars.clone(), atoms: best.expect("at least one leaf") }
}

fn fresh_prefix(answer_vars: &[String]) -> String {
    let clashes = |p: &str| {
        answer_vars
            .iter()
            .any(|a| a.strip_prefix(p).is_some_and(|rest| !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit())))
    };
    let mut prefix = "v".to_string();
    while clashes(&prefix) {
        prefix.push('_');
    }
    prefix
}

fn var_index(t: &Term, index: &BTreeMap<&str, usize>) -> Option<usize> {
    match t {
        Term::Var(v) => index.get(v.as_str()).copied(),
        _ => None,
    }
}

type Signature = (String, usize, Neighbour);

fn refine(atoms: &[Atom], index: &BTreeMap<&str, usize>, mut colours: Vec<usize>) -> Vec<usize> {
    loop {
        let mut sigs: Vec<(usize, Vec<Signature>)> = colours.iter().map(|&c| (c, Vec::new())).collect();
        for atom in atoms {
            for (pos, t) in atom.args.iter().enumerate() {
                let Some(i) = var_index(t, index) else { continue };
                let nb = if atom.args.len() == 1 {
                    Neighbour::Unary
                } else {
                    let other = &atom.args[1 - pos];
                    match var_index(other, index) {
                        Some(j) if j == i => Neighbour::Same,
                        Some(j) => Neighbour::Colour(colours[j]),
                        None => Neighbour::Fixed(other.clone()),
                    }
                };
                sigs[i].1.push((atom.pred.clone(), pos, nb));
            }
        }
        for s in &mut sigs {
            s.1.sort();
        }
        let distinct: BTreeSet<_> = sigs.iter().collect();
        let rank: BTreeMap<_, usize> = distinct.into_iter().enumerate().map(|(r, s)| (s, r)).collect();
        let next: Vec<usize> = sigs.iter().map(|s| rank[s]).collect();
        let before = colours.iter().collect::<BTreeSet<_>>().len();
        let after = next.iter().collect::<BTreeSet<_>>().len();
        colours = next;
        if after == before {
            return colours;
        }
    }
}

fn search(
    atoms: &[Atom],
    vars: &[String],
    index: &BTreeMap<&str, usize>,
    colours: Vec<usize>,
    prefix: &str,
    best: &mut Option<Vec<Atom>>,
    leaves: &mut usize,
) {
    if *leaves >= LEAF_CAP && best.is_some() {
        return;
    }
    let mut counts: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in colours.iter().enumerate() {
        counts.entry(c).or_default().push(i);
    }
    let Some((&cell, members)) = counts.iter().find(|(_, m)| m.len() > 1) else {
        *leaves += 1;
        let subst: Substitution =
            colours.iter().enumerate().map(|(i, &c)| (vars[i].clone(), Term::Var(format!("{prefix}{c}")))).collect();
        let mut renamed: Vec<Atom> = atoms.iter().map(|a| a.apply(&subst)).collect();
        renamed.sort();
        renamed.dedup();
        if best.as_ref().is_none_or(|b| renamed < *b) {
            *best = Some(renamed);
        }
        return;
    };
    for &m in members {
        // individualize m: it precedes the rest of its cell
        let split: Vec<usize> =
            colours.iter().enumerate().map(|(i, &c)| 2 * c + usize::from(c == cell && i != m)).collect();
        let refined = refine(atoms, index, split);
        search(atoms, vars, index, refined, prefix, best, leaves);
    }
}

/// True iff the two queries are equal up to renaming of existential
/// variables and duplicate atoms.
pub fn cq_equiv(a: &Cq, b: &Cq) -> bool {
    a.answer_vars == b.answer_vars && canonicalize_cq(a) == canonicalize_cq(b)
}

fn match_term(pattern: &Term, fact: &Term, subst: &mut Substitution, trail: &mut Vec<String>) -> bool {
    match (pattern, fact) {
        (Term::Var(v), _) => match subst.get(v) {
            Some(bound) => bound == fact,
            None => {
                subst.insert(v.clone(), fact.clone());
                trail.push(v.clone());
                true
            }
        },
        (Term::Const(a), Term::Const(b)) => a == b,
        (Term::Skolem(f, p), Term::Skolem(g, t)) => f == g && match_term(p, t, subst, trail),
        _ => false,
    }
}

/// Matches a single atom, extending `subst`. On failure `subst` is unchanged.
pub fn match_atom(pattern: &Atom, fact: &Atom, subst: &mut Substitution) -> bool {
    if pattern.pred != fact.pred || pattern.args.len() != fact.args.len() {
        return false;
    }
    let mut trail = Vec::new();
    for (p, f) in pattern.args.iter().zip(&fact.args) {
        if !match_term(p, f, subst, &mut trail) {
            for v in trail {
                subst.remove(&v);
            }
            return false;
        }
    }
    true
}

/// Every substitution π over the variables of `pattern` with
/// π(pattern) ⊆ facts, extending `seed`.
pub fn match_atoms_from(pattern: &[Atom], facts: &[Atom], seed: &Substitution) -> Vec<Substitution> {
    let mut out = BTreeSet::new();
    let mut subst = seed.clone();
    match_rec(pattern, facts, &mut subst, &mut out);
    out.into_iter().collect()
}

pub fn match_atoms(pattern: &[Atom], facts: &[Atom]) -> Vec<Substitution> {
    match_atoms_from(pattern, facts, &Substitution::new())
}

fn match_rec(pattern: &[Atom], facts: &[Atom], subst: &mut Substitution, out: &mut BTreeSet<Substitution>) {
    let Some((first, rest)) = pattern.split_first() else {
        out.insert(subst.clone());
        return;
    };
    for fact in facts {
        let before = subst.clone();
        if match_atom(first, fact, subst) {
            match_rec(rest, facts, subst, out);
            *subst = before;
        }
    }
}
