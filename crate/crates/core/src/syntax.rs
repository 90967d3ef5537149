//! Text format for knowledge bases, queries, temporal data and proof labels.
//!
//! ```text
//! cqproof/1
//! % comment
//! B sub exists P.            exists P- sub exists S.     P rsub R-.
//! P(x,y) -> exists u . S(y,u).
//! B(b).   A(a)@[0,5].   A(a)@[-inf,3].
//! q(y) :- R(x,y), T(y,z).
//! q(x) :- ({A(x)} UNTIL[1,2] BOXP[0,1] {exists z . R(x,z)}).
//! answers b.
//! at [0,7].
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::Sentence;
use crate::logic::{Atom, Concept, Cq, DlAxiom, ExistentialRule, KnowledgeBase, Role, TboxEntry, Term};
use crate::temporal::{AnnotatedFormula, Formula, Interval, Mtcq, OpRange, TemporalAbox, TemporalFact};

pub const HEADER: &str = "cqproof/1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unsupported construct: {msg}")]
    Unsupported { line: usize, col: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Arrow,
    Turnstile,
    Sym(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut out = Vec::new();
    let mut header_done = false;
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw.split('%').next().unwrap_or("");
        if !header_done && !content.trim().is_empty() {
            header_done = true;
            if content.trim() == HEADER {
                continue;
            }
        }
        let chars: Vec<char> = content.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphanumeric() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Word(chars[start..i].iter().collect()), line, col });
            } else if c == '-' && chars.get(i + 1) == Some(&'>') {
                out.push(Token { tok: Tok::Arrow, line, col });
                i += 2;
            } else if c == ':' && chars.get(i + 1) == Some(&'-') {
                out.push(Token { tok: Tok::Turnstile, line, col });
                i += 2;
            } else if "(),.-@[]{}".contains(c) {
                out.push(Token { tok: Tok::Sym(c), line, col });
                i += 1;
            } else {
                return Err(SyntaxError::Syntax { line, col, msg: format!("unexpected character `{c}`") });
            }
        }
    }
    Ok(out)
}

const KEYWORDS: &[&str] =
    &["sub", "rsub", "exists", "answers", "at", "AND", "OR", "TOP", "BOXP", "BOXM", "UNTIL", "SINCE", "NEXT", "PREV"];

/// Everything a document may contain.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    pub tbox: Vec<TboxEntry>,
    pub abox: Vec<Atom>,
    pub temporal: Vec<TemporalFact>,
    pub query: Option<Mtcq>,
    pub answers: Option<Vec<String>>,
    pub target: Option<Interval>,
}

impl Document {
    pub fn kb(&self) -> KnowledgeBase {
        KnowledgeBase { tbox: self.tbox.clone(), abox: self.abox.clone() }
    }

    pub fn tabox(&self) -> TemporalAbox {
        TemporalAbox::new(self.temporal.clone())
    }

    /// The query as a plain CQ, if it has no temporal operators.
    pub fn cq(&self) -> Option<Cq> {
        let q = self.query.as_ref()?;
        match &q.formula {
            Formula::Cq(c) => Some(Cq { answer_vars: q.answer_vars.clone(), atoms: c.atoms.clone() }),
            _ => None,
        }
    }

    pub fn merge(&mut self, other: Document) {
        self.tbox.extend(other.tbox);
        self.abox.extend(other.abox);
        self.temporal.extend(other.temporal);
        if other.query.is_some() {
            self.query = other.query;
        }
        if other.answers.is_some() {
            self.answers = other.answers;
        }
        if other.target.is_some() {
            self.target = other.target;
        }
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, SyntaxError>;

/// How identifiers inside atoms are read.
#[derive(Clone)]
enum Scope {
    AllVars,
    AllConsts,
    /// Variables are exactly the listed names.
    Declared(BTreeSet<String>),
}

impl Scope {
    fn term(&self, name: &str) -> Term {
        let is_var = match self {
            Scope::AllVars => true,
            Scope::AllConsts => false,
            Scope::Declared(s) => s.contains(name),
        };
        if is_var {
            Term::Var(name.to_string())
        } else {
            Term::Const(name.to_string())
        }
    }
}

impl Parser {
    fn new(text: &str) -> PResult<Self> {
        Ok(Parser { toks: lex(text)?, pos: 0 })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn loc(&self) -> (usize, usize) {
        match self.toks.get(self.pos).or(self.toks.last()) {
            Some(t) => (t.line, t.col),
            None => (1, 1),
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let (line, col) = self.loc();
        Err(SyntaxError::Syntax { line, col, msg: msg.into() })
    }

    fn unsupported<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let (line, col) = self.loc();
        Err(SyntaxError::Unsupported { line, col, msg: msg.into() })
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn is_sym(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Sym(c))
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(x)) if x == w)
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.is_sym(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> PResult<()> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn name(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Word(w)) if !KEYWORDS.contains(&w.as_str()) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => self.err("expected an identifier"),
        }
    }

    fn integer(&mut self) -> PResult<Option<i64>> {
        let neg = self.eat_sym('-');
        match self.peek().cloned() {
            Some(Tok::Word(w)) if w == "inf" => {
                self.pos += 1;
                Ok(None)
            }
            Some(Tok::Word(w)) => match w.parse::<i64>() {
                Ok(n) => {
                    self.pos += 1;
                    Ok(Some(if neg { -n } else { n }))
                }
                Err(_) => self.err("expected an integer or `inf`"),
            },
            _ => self.err("expected an integer or `inf`"),
        }
    }

    fn interval(&mut self) -> PResult<Interval> {
        self.expect_sym('[')?;
        let lo_neg = self.is_sym('-');
        let lo = self.integer()?;
        self.expect_sym(',')?;
        let hi_neg = self.is_sym('-');
        let hi = self.integer()?;
        self.expect_sym(']')?;
        if lo.is_none() && !lo_neg {
            return self.err("lower bound `inf` must be written `-inf`");
        }
        if hi.is_none() && hi_neg {
            return self.err("upper bound must not be `-inf`");
        }
        match Interval::new(lo, hi) {
            Ok(i) => Ok(i),
            Err(e) => self.err(e.to_string()),
        }
    }

    fn op_range(&mut self) -> PResult<OpRange> {
        self.expect_sym('[')?;
        let lo = self.integer()?;
        self.expect_sym(',')?;
        let hi = self.integer()?;
        self.expect_sym(']')?;
        let (Some(lo), Some(hi)) = (lo, hi) else { return self.err("operator bounds must be finite") };
        match OpRange::new(lo, hi) {
            Ok(r) => Ok(r),
            Err(e) => self.err(e.to_string()),
        }
    }

    fn term(&mut self, scope: &Scope) -> PResult<Term> {
        let n = self.name()?;
        if self.eat_sym('(') {
            let inner = self.term(scope)?;
            if self.is_sym(',') {
                return self.unsupported("Skolem functions are unary");
            }
            self.expect_sym(')')?;
            return Ok(Term::skolem(n, inner));
        }
        Ok(scope.term(&n))
    }

    fn atom(&mut self, scope: &Scope) -> PResult<Atom> {
        let pred = self.name()?;
        self.expect_sym('(')?;
        let mut args = vec![self.term(scope)?];
        while self.eat_sym(',') {
            args.push(self.term(scope)?);
        }
        self.expect_sym(')')?;
        if args.len() > 2 {
            return self
                .unsupported(format!("predicate `{pred}` has arity {}; only arity 1 and 2 are supported", args.len()));
        }
        Ok(Atom { pred, args })
    }

    fn atoms(&mut self, scope: &Scope) -> PResult<Vec<Atom>> {
        let mut out = vec![self.atom(scope)?];
        while self.eat_sym(',') {
            out.push(self.atom(scope)?);
        }
        Ok(out)
    }

    fn var_list(&mut self) -> PResult<Vec<String>> {
        let mut out = vec![self.name()?];
        while self.eat_sym(',') {
            out.push(self.name()?);
        }
        Ok(out)
    }

    /// `exists v1,...,vn .` prefix, if present.
    fn exists_prefix(&mut self) -> PResult<Option<Vec<String>>> {
        if self.eat_word("exists") {
            let vs = self.var_list()?;
            self.expect_sym('.')?;
            Ok(Some(vs))
        } else {
            Ok(None)
        }
    }

    fn role(&mut self) -> PResult<Role> {
        let name = self.name()?;
        let inverse = self.eat_sym('-');
        Ok(Role { name, inverse })
    }

    fn concept(&mut self) -> PResult<Concept> {
        if self.eat_word("exists") {
            return Ok(Concept::Exists(self.role()?));
        }
        if self.is_word("not") {
            return self.unsupported("negated concepts are not supported");
        }
        let n = self.name()?;
        if self.is_word("and") || self.is_word("or") {
            return self.unsupported("concept conjunction and disjunction are not DL-Lite_R");
        }
        Ok(Concept::Name(n))
    }

    fn axiom_ahead(&self) -> bool {
        match (self.peek(), self.peek_at(1), self.peek_at(2)) {
            (Some(Tok::Word(w)), _, _) if w == "exists" || w == "not" => true,
            (Some(Tok::Word(_)), Some(Tok::Word(s)), _) if s == "sub" || s == "rsub" || s == "and" || s == "or" => true,
            (Some(Tok::Word(_)), Some(Tok::Sym('-')), Some(Tok::Word(s))) if s == "rsub" => true,
            _ => false,
        }
    }

    fn axiom(&mut self) -> PResult<DlAxiom> {
        let role_incl = match (self.peek_at(1), self.peek_at(2)) {
            (Some(Tok::Word(s)), _) if s == "rsub" => true,
            (Some(Tok::Sym('-')), Some(Tok::Word(s))) if s == "rsub" => true,
            _ => false,
        };
        if role_incl {
            let l = self.role()?;
            if !self.eat_word("rsub") {
                return self.err("expected `rsub`");
            }
            let r = self.role()?;
            return Ok(DlAxiom::RoleInclusion(l, r));
        }
        let l = self.concept()?;
        if !self.eat_word("sub") {
            return self.err("expected `sub`");
        }
        if self.is_word("not") {
            return self.unsupported("negative inclusions are not supported");
        }
        let r = self.concept()?;
        Ok(DlAxiom::ConceptInclusion(l, r))
    }

    fn rule_head(&mut self, body: Vec<Atom>) -> PResult<ExistentialRule> {
        let mut declared = self.exists_prefix()?.unwrap_or_default();
        let head = self.atoms(&Scope::AllVars)?;
        declared.sort();
        let rule = match ExistentialRule::new(body, head) {
            Ok(r) => r,
            Err(e) => return self.err(e.to_string()),
        };
        let mut ex = rule.existential_vars.clone();
        ex.sort();
        if !declared.is_empty() && declared != ex {
            return self.err(format!("declared existential variables {declared:?} differ from {ex:?}"));
        }
        Ok(rule)
    }

    fn statement(&mut self, doc: &mut Document) -> PResult<()> {
        if self.eat_word("answers") {
            let mut ans = Vec::new();
            if !self.is_sym('.') {
                ans = self.var_list()?;
            }
            doc.answers = Some(ans);
        } else if self.eat_word("at") {
            doc.target = Some(self.interval()?);
        } else if self.axiom_ahead() {
            let ax = self.axiom()?;
            doc.tbox.push(TboxEntry::Dl(ax));
        } else if matches!(self.peek_at(1), Some(Tok::Sym('('))) && self.query_ahead() {
            doc.query = Some(self.query()?);
        } else {
            let start = self.pos;
            let body = self.atoms(&Scope::AllVars)?;
            if self.peek() == Some(&Tok::Arrow) {
                self.pos += 1;
                let r = self.rule_head(body)?;
                doc.tbox.push(TboxEntry::Rule(r));
            } else {
                self.pos = start;
                let a = self.atom(&Scope::AllConsts)?;
                if self.is_sym(',') {
                    return self.err("assertions are written one per statement");
                }
                if self.eat_sym('@') {
                    let interval = self.interval()?;
                    doc.temporal.push(TemporalFact { atom: a, interval });
                } else {
                    doc.abox.push(a);
                }
            }
        }
        self.expect_sym('.')
    }

    fn query_ahead(&self) -> bool {
        let mut k = self.pos;
        let mut depth = 0;
        while k < self.toks.len() {
            match self.toks[k].tok {
                Tok::Sym('(') => depth += 1,
                Tok::Sym(')') => {
                    depth -= 1;
                    if depth == 0 {
                        return self.toks.get(k + 1).map(|t| &t.tok) == Some(&Tok::Turnstile);
                    }
                }
                _ => {}
            }
            k += 1;
        }
        false
    }

    fn query(&mut self) -> PResult<Mtcq> {
        self.name()?;
        self.expect_sym('(')?;
        let mut answer_vars = Vec::new();
        if !self.is_sym(')') {
            answer_vars = self.var_list()?;
        }
        self.expect_sym(')')?;
        if self.peek() != Some(&Tok::Turnstile) {
            return self.err("expected `:-`");
        }
        self.pos += 1;
        let start = self.pos;
        if let Ok(cq) = self.plain_cq(&answer_vars) {
            if self.is_sym('.') {
                return self.finish_query(answer_vars, Formula::Cq(cq));
            }
        }
        self.pos = start;
        let f = self.formula(&answer_vars)?;
        self.finish_query(answer_vars, f)
    }

    fn finish_query(&self, answer_vars: Vec<String>, formula: Formula) -> PResult<Mtcq> {
        for leaf in formula.leaves() {
            let vars = leaf.vars();
            if let Some(v) = answer_vars.iter().find(|v| !vars.contains(v)) {
                return self.err(format!("answer variable `{v}` missing from a CQ"));
            }
        }
        Ok(Mtcq { answer_vars, formula })
    }

    /// Atom list where, absent an `exists` prefix, every term is a variable.
    fn plain_cq(&mut self, answer_vars: &[String]) -> PResult<Cq> {
        let scope = match self.exists_prefix()? {
            None => Scope::AllVars,
            Some(vs) => Scope::Declared(vs.into_iter().chain(answer_vars.iter().cloned()).collect()),
        };
        let atoms = self.atoms(&scope)?;
        Ok(Cq { answer_vars: answer_vars.to_vec(), atoms })
    }

    fn leaf(&mut self, answer_vars: &[String]) -> PResult<Cq> {
        let declared = self.exists_prefix()?.unwrap_or_default();
        let scope = Scope::Declared(declared.into_iter().chain(answer_vars.iter().cloned()).collect());
        let atoms = self.atoms(&scope)?;
        let present = crate::logic::vars_of(&atoms);
        let answers = answer_vars.iter().filter(|v| present.contains(v)).cloned().collect();
        Ok(Cq { answer_vars: answers, atoms })
    }

    fn formula(&mut self, av: &[String]) -> PResult<Formula> {
        let mut left = self.conj(av)?;
        while self.eat_word("OR") {
            let right = self.conj(av)?;
            left = Formula::or(left, right);
        }
        Ok(left)
    }

    fn conj(&mut self, av: &[String]) -> PResult<Formula> {
        let mut left = self.binary_temporal(av)?;
        while self.eat_word("AND") {
            let right = self.binary_temporal(av)?;
            left = Formula::and(left, right);
        }
        Ok(left)
    }

    fn binary_temporal(&mut self, av: &[String]) -> PResult<Formula> {
        let left = self.unary(av)?;
        if self.eat_word("UNTIL") {
            let r = self.op_range()?;
            let right = self.unary(av)?;
            return Ok(Formula::until(r, left, right));
        }
        if self.eat_word("SINCE") {
            let r = self.op_range()?;
            let right = self.unary(av)?;
            return Ok(Formula::since(r, left, right));
        }
        Ok(left)
    }

    fn unary(&mut self, av: &[String]) -> PResult<Formula> {
        if self.eat_word("BOXP") {
            let r = self.op_range()?;
            return Ok(Formula::box_plus(r, self.unary(av)?));
        }
        if self.eat_word("BOXM") {
            let r = self.op_range()?;
            return Ok(Formula::box_minus(r, self.unary(av)?));
        }
        if self.eat_word("NEXT") {
            return Ok(Formula::next(self.unary(av)?));
        }
        if self.eat_word("PREV") {
            return Ok(Formula::prev(self.unary(av)?));
        }
        if self.is_word("DIAMP") || self.is_word("NOT") {
            return self.unsupported("only positive MTCQ operators are supported");
        }
        if self.eat_word("TOP") {
            return Ok(Formula::Top);
        }
        if self.eat_sym('(') {
            let f = self.formula(av)?;
            self.expect_sym(')')?;
            return Ok(f);
        }
        if self.eat_sym('{') {
            let q = self.leaf(av)?;
            self.expect_sym('}')?;
            return Ok(Formula::Cq(q));
        }
        let scope = Scope::Declared(av.iter().cloned().collect());
        let a = self.atom(&scope)?;
        let present = a.vars();
        let answers = av.iter().filter(|v| present.contains(&v.as_str())).cloned().collect();
        Ok(Formula::Cq(Cq { answer_vars: answers, atoms: vec![a] }))
    }
}

/// Parses any document in the format.
pub fn parse_document(text: &str) -> Result<Document, SyntaxError> {
    let mut p = Parser::new(text)?;
    let mut doc = Document::default();
    while !p.at_end() {
        p.statement(&mut doc)?;
    }
    Ok(doc)
}

pub fn parse_kb(text: &str) -> Result<KnowledgeBase, SyntaxError> {
    let doc = parse_document(text)?;
    if !doc.temporal.is_empty() {
        return Err(SyntaxError::Unsupported {
            line: 1,
            col: 1,
            msg: "temporal facts in an atemporal knowledge base".into(),
        });
    }
    Ok(doc.kb())
}

/// A CQ and its answer tuple (empty when no `answers` statement is given).
pub fn parse_query(text: &str) -> Result<(Cq, Vec<String>), SyntaxError> {
    let doc = parse_document(text)?;
    let q = match (&doc.query, doc.cq()) {
        (None, _) => return Err(SyntaxError::Syntax { line: 1, col: 1, msg: "no query statement".into() }),
        (Some(_), None) => {
            return Err(SyntaxError::Unsupported { line: 1, col: 1, msg: "temporal operators in a CQ".into() })
        }
        (Some(_), Some(q)) => q,
    };
    Ok((q, doc.answers.unwrap_or_default()))
}

pub fn parse_temporal(text: &str) -> Result<(TemporalAbox, Mtcq), SyntaxError> {
    let doc = parse_document(text)?;
    let Some(q) = doc.query.clone() else {
        return Err(SyntaxError::Syntax { line: 1, col: 1, msg: "no query statement".into() });
    };
    Ok((doc.tabox(), q))
}

/// Parses a proof label as printed by `Display for Sentence`.
pub fn parse_sentence(text: &str) -> Result<Sentence, SyntaxError> {
    let mut p = Parser::new(text)?;
    let s = if text.contains('@') {
        let f = p.formula(&[])?;
        p.expect_sym('@')?;
        let iv = p.interval()?;
        Sentence::Annotated(AnnotatedFormula::new(f, iv))
    } else if text.contains("->") {
        let body = p.atoms(&Scope::AllVars)?;
        if p.peek() != Some(&Tok::Arrow) {
            return p.err("expected `->`");
        }
        p.pos += 1;
        Sentence::Rule(p.rule_head(body)?)
    } else if text.contains(" sub ") || text.contains(" rsub ") {
        Sentence::Axiom(p.axiom()?)
    } else {
        let scope = match p.exists_prefix()? {
            None => Scope::AllConsts,
            Some(vs) => Scope::Declared(vs.into_iter().collect()),
        };
        Sentence::Cq(Cq::boolean(p.atoms(&scope)?))
    };
    if !p.at_end() {
        return p.err("trailing input");
    }
    Ok(s)
}

pub fn print_kb(kb: &KnowledgeBase) -> String {
    let mut out = format!("{HEADER}\n");
    for e in &kb.tbox {
        let _ = writeln!(out, "{e}.");
    }
    for a in &kb.abox {
        let _ = writeln!(out, "{a}.");
    }
    out
}

pub fn print_query(q: &Cq, answers: &[String]) -> String {
    let mut out = format!("{HEADER}\nq({}) :- ", q.answer_vars.join(","));
    if q.constants().is_empty() && q.atoms.iter().all(|a| a.args.iter().all(|t| !matches!(t, Term::Skolem(..)))) {
        let atoms: Vec<String> = q.atoms.iter().map(ToString::to_string).collect();
        out.push_str(&atoms.join(", "));
    } else {
        let _ = write!(out, "{q}");
    }
    out.push_str(".\n");
    if !answers.is_empty() {
        let _ = writeln!(out, "answers {}.", answers.join(", "));
    }
    out
}

pub fn print_document(doc: &Document) -> String {
    let mut out = print_kb(&doc.kb());
    for f in &doc.temporal {
        let _ = writeln!(out, "{}@{}.", f.atom, f.interval);
    }
    if let Some(q) = &doc.query {
        match &q.formula {
            Formula::Cq(c) => {
                let cq = Cq { answer_vars: q.answer_vars.clone(), atoms: c.atoms.clone() };
                let text = print_query(&cq, &[]);
                out.push_str(text.strip_prefix(&format!("{HEADER}\n")).unwrap_or(&text));
            }
            f => {
                let _ = writeln!(out, "q({}) :- {f}.", q.answer_vars.join(","));
            }
        }
    }
    if let Some(a) = &doc.answers {
        let _ = writeln!(out, "answers {}.", a.join(", "));
    }
    if let Some(t) = &doc.target {
        let _ = writeln!(out, "at {t}.");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concept_inclusion() {
        let kb = parse_kb("B sub exists P.").unwrap();
        assert_eq!(
            kb.tbox,
            vec![TboxEntry::Dl(DlAxiom::ConceptInclusion(
                Concept::Name("B".into()),
                Concept::Exists(Role::named("P"))
            ))]
        );
    }

    #[test]
    fn role_inclusion_and_inverse() {
        let kb = parse_kb("P rsub R-.\nexists P- sub exists S.").unwrap();
        assert_eq!(kb.tbox[0], TboxEntry::Dl(DlAxiom::RoleInclusion(Role::named("P"), Role::inv("R"))));
        assert_eq!(
            kb.tbox[1],
            TboxEntry::Dl(DlAxiom::ConceptInclusion(
                Concept::Exists(Role::inv("P")),
                Concept::Exists(Role::named("S"))
            ))
        );
    }

    #[test]
    fn temporal_fact() {
        let doc = parse_document("A(a)@[0,5].\nB(b)@[-inf,3].").unwrap();
        assert_eq!(doc.temporal[0].interval, Interval::finite(0, 5).unwrap());
        assert_eq!(doc.temporal[1].interval, Interval::new(None, Some(3)).unwrap());
    }

    #[test]
    fn rules_and_queries() {
        let doc = parse_document("P(x,y) -> exists u . S(y,u).\nq(y) :- R(x,y), T(y,z).\nanswers b.").unwrap();
        assert_eq!(doc.tbox[0].to_string(), "P(x,y) -> exists u . S(y,u)");
        let q = doc.cq().unwrap();
        assert_eq!(q.answer_vars, vec!["y".to_string()]);
        assert_eq!(q.atoms.len(), 2);
        assert_eq!(doc.answers, Some(vec!["b".to_string()]));
    }

    #[test]
    fn query_with_constants() {
        let (q, _) = parse_query("q(x) :- exists z . P(x,z), A(b).").unwrap();
        assert_eq!(q.atoms[1], Atom::unary("A", Term::constant("b")));
        assert!(q.atoms[0].args[1].is_var());
    }

    #[test]
    fn mtcq_formula() {
        let doc = parse_document("q(x) :- (A(x) UNTIL[1,2] BOXP[0,1] {exists z . R(x,z)}) AND TOP.").unwrap();
        let f = &doc.query.unwrap().formula;
        assert!(matches!(f, Formula::And(..)));
        assert_eq!(f.depth(), 3);
    }

    #[test]
    fn errors_have_locations() {
        match parse_kb("A sub B.\nA sub .") {
            Err(SyntaxError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_kb("P(a,b,c)."), Err(SyntaxError::Unsupported { .. })));
        assert!(matches!(parse_kb("A and B sub C."), Err(SyntaxError::Unsupported { .. })));
        assert!(matches!(parse_kb("A sub not B."), Err(SyntaxError::Unsupported { .. })));
    }

    #[test]
    fn labels_roundtrip() {
        for text in [
            "exists v0 . P(b,v0), S(v0,v1)",
            "B sub exists P",
            "exists P- sub exists S",
            "P rsub R-",
            "P(x,y) -> exists u . S(y,u)",
            "P(b,fn_2_u(b))",
            "{exists z . A(z)} @[0,5]",
            "({A(a)} UNTIL[1,2] {B(a)}) @[-inf,3]",
        ] {
            let s = parse_sentence(text).unwrap();
            let again = parse_sentence(&s.to_string()).unwrap();
            assert_eq!(s, again, "{text}");
        }
        assert!(matches!(parse_sentence("P(b,fn_2_u(b))").unwrap(), Sentence::Cq(q) if q.is_ground()));
    }

    #[test]
    fn print_parse_roundtrip() {
        let text = "cqproof/1\nB sub exists P.\nP rsub R-.\nP(x,y) -> exists u . S(y,u).\nB(b).\n";
        let kb = parse_kb(text).unwrap();
        assert_eq!(print_kb(&kb), text);
    }
}
