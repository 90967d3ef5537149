//! Rewriting of metric operators into punctual next and previous.

use super::formula::Formula;
use super::interval::OpRange;

fn shrink(lo: u32, hi: u32) -> OpRange {
    OpRange { lo, hi }
}

/// An equivalent formula whose only temporal operators are next and previous.
pub fn expand_next_form(f: &Formula) -> Formula {
    match f {
        Formula::Cq(_) | Formula::Top => f.clone(),
        Formula::And(a, b) => Formula::and(expand_next_form(a), expand_next_form(b)),
        Formula::Or(a, b) => Formula::or(expand_next_form(a), expand_next_form(b)),
        Formula::Next(a) => Formula::next(expand_next_form(a)),
        Formula::Prev(a) => Formula::prev(expand_next_form(a)),
        Formula::BoxPlus(r, a) => boxes(*r, &expand_next_form(a), Formula::next),
        Formula::BoxMinus(r, a) => boxes(*r, &expand_next_form(a), Formula::prev),
        Formula::Until(r, a, b) => until(*r, &expand_next_form(a), &expand_next_form(b), Formula::next),
        Formula::Since(r, a, b) => until(*r, &expand_next_form(a), &expand_next_form(b), Formula::prev),
    }
}

fn boxes(r: OpRange, phi: &Formula, step: fn(Formula) -> Formula) -> Formula {
    if r.lo > 0 {
        step(boxes(shrink(r.lo - 1, r.hi - 1), phi, step))
    } else if r.hi > 0 {
        Formula::and(phi.clone(), step(boxes(shrink(0, r.hi - 1), phi, step)))
    } else {
        phi.clone()
    }
}

fn until(r: OpRange, phi: &Formula, psi: &Formula, step: fn(Formula) -> Formula) -> Formula {
    if r.lo > 0 {
        Formula::and(phi.clone(), step(until(shrink(r.lo - 1, r.hi - 1), phi, psi, step)))
    } else if r.hi > 0 {
        Formula::or(psi.clone(), Formula::and(phi.clone(), step(until(shrink(0, r.hi - 1), phi, psi, step))))
    } else {
        psi.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{Atom, Cq, Term};

    fn a() -> Formula {
        Formula::Cq(Cq::boolean(vec![Atom::unary("A", Term::constant("a"))]))
    }

    fn b() -> Formula {
        Formula::Cq(Cq::boolean(vec![Atom::unary("B", Term::constant("a"))]))
    }

    #[test]
    fn recursion_bases() {
        let r = |x, y| OpRange::new(x, y).unwrap();
        assert_eq!(expand_next_form(&Formula::box_plus(r(0, 0), a())), a());
        assert_eq!(expand_next_form(&Formula::until(r(0, 0), a(), b())), b());
        assert_eq!(expand_next_form(&Formula::box_plus(r(1, 1), a())), Formula::next(a()));
        assert_eq!(expand_next_form(&Formula::box_minus(r(1, 1), a())), Formula::prev(a()));
        assert!(expand_next_form(&Formula::since(r(1, 3), a(), Formula::box_plus(r(0, 2), b()))).is_next_form());
    }
}
