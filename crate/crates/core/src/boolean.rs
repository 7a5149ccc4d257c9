//! Boolean expressions over monoid elements and the signed measure `ζ`.
//!
//! `ζ` is defined on products of literals by inclusion–exclusion,
//! `ζ(x₁∩…∩xₙ∩ȳ₁∩…∩ȳₘ) = Σ_{I⊆{1..n}} (−1)^{|I|+1} ℓ(y ∇ x_I)` with
//! `y = y₁∇…∇yₘ`, and extended additively over disjoint products. In
//! particular `ζ(0) = ζ(1) = 0` and `ζ(ȳ) = −ℓ(y)`.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::length::LengthFn;
use crate::monoid::{Elem, Monoid};
use crate::num::{Rational, Scaled};

/// Expressions with more distinct atoms than this are refused.
pub const MAX_ATOMS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoolExpr {
    Atom(Elem),
    Zero,
    One,
    Complement(Box<BoolExpr>),
    Union(Vec<BoolExpr>),
    Intersection(Vec<BoolExpr>),
    Difference(Box<BoolExpr>, Box<BoolExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BoolError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown element {0:?}")]
    UnknownElement(String),
    #[error("expression has {0} distinct atoms (max {MAX_ATOMS})")]
    TooManyAtoms(usize),
}

impl BoolExpr {
    pub fn atom(x: Elem) -> BoolExpr {
        BoolExpr::Atom(x)
    }

    pub fn not(self) -> BoolExpr {
        BoolExpr::Complement(Box::new(self))
    }

    pub fn and(self, other: BoolExpr) -> BoolExpr {
        BoolExpr::Intersection(vec![self, other])
    }

    pub fn or(self, other: BoolExpr) -> BoolExpr {
        BoolExpr::Union(vec![self, other])
    }

    pub fn minus(self, other: BoolExpr) -> BoolExpr {
        BoolExpr::Difference(Box::new(self), Box::new(other))
    }

    /// Distinct atoms in order of first appearance.
    pub fn atoms(&self) -> Vec<Elem> {
        fn go(e: &BoolExpr, out: &mut Vec<Elem>) {
            match e {
                BoolExpr::Atom(x) => {
                    if !out.contains(x) {
                        out.push(*x)
                    }
                }
                BoolExpr::Zero | BoolExpr::One => {}
                BoolExpr::Complement(c) => go(c, out),
                BoolExpr::Union(cs) | BoolExpr::Intersection(cs) => cs.iter().for_each(|c| go(c, out)),
                BoolExpr::Difference(a, b) => {
                    go(a, out);
                    go(b, out)
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// Truth value under an assignment of the atoms.
    pub fn eval(&self, assign: &impl Fn(Elem) -> bool) -> bool {
        match self {
            BoolExpr::Atom(x) => assign(*x),
            BoolExpr::Zero => false,
            BoolExpr::One => true,
            BoolExpr::Complement(c) => !c.eval(assign),
            BoolExpr::Union(cs) => cs.iter().any(|c| c.eval(assign)),
            BoolExpr::Intersection(cs) => cs.iter().all(|c| c.eval(assign)),
            BoolExpr::Difference(a, b) => a.eval(assign) && !b.eval(assign),
        }
    }

    /// Partial evaluation: `Some` when the value no longer depends on the
    /// unassigned atoms.
    fn eval_partial(&self, assign: &impl Fn(Elem) -> Option<bool>) -> Option<bool> {
        match self {
            BoolExpr::Atom(x) => assign(*x),
            BoolExpr::Zero => Some(false),
            BoolExpr::One => Some(true),
            BoolExpr::Complement(c) => c.eval_partial(assign).map(|v| !v),
            BoolExpr::Union(cs) => {
                let mut all_known = true;
                for c in cs {
                    match c.eval_partial(assign) {
                        Some(true) => return Some(true),
                        Some(false) => {}
                        None => all_known = false,
                    }
                }
                all_known.then_some(false)
            }
            BoolExpr::Intersection(cs) => {
                let mut all_known = true;
                for c in cs {
                    match c.eval_partial(assign) {
                        Some(false) => return Some(false),
                        Some(true) => {}
                        None => all_known = false,
                    }
                }
                all_known.then_some(true)
            }
            BoolExpr::Difference(a, b) => match (a.eval_partial(assign), b.eval_partial(assign)) {
                (Some(false), _) | (_, Some(true)) => Some(false),
                (Some(true), Some(false)) => Some(true),
                _ => None,
            },
        }
    }

    /// Renders with element labels; fully parenthesized below the top level.
    pub fn display<'a>(&'a self, m: &'a Monoid) -> impl fmt::Display + 'a {
        Shown { e: self, m }
    }
}

struct Shown<'a> {
    e: &'a BoolExpr,
    m: &'a Monoid,
}

impl<'a> fmt::Display for Shown<'a> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.m;
        let sub = |e| Shown { e, m };
        let group = |f: &mut fmt::Formatter<'_>, e: &'a BoolExpr| match e {
            BoolExpr::Atom(_) | BoolExpr::Zero | BoolExpr::One | BoolExpr::Complement(_) => write!(f, "{}", sub(e)),
            _ => write!(f, "({})", sub(e)),
        };
        match self.e {
            BoolExpr::Atom(x) => {
                let l = self.m.label(*x);
                if l.starts_with('{') || is_ident(l) {
                    f.write_str(l)
                } else {
                    write!(f, "\"{l}\"")
                }
            }
            BoolExpr::Zero => f.write_str("0"),
            BoolExpr::One => f.write_str("1"),
            BoolExpr::Complement(c) => {
                f.write_str("~")?;
                group(f, c)
            }
            BoolExpr::Union(cs) | BoolExpr::Intersection(cs) => {
                let op = if matches!(self.e, BoolExpr::Union(_)) { " | " } else { " & " };
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    group(f, c)?;
                }
                Ok(())
            }
            BoolExpr::Difference(a, b) => {
                group(f, a)?;
                f.write_str(" \\ ")?;
                group(f, b)
            }
        }
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s != "0" && s != "1" && s.chars().all(is_ident_char)
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '.' | ':' | '-' | '\'')
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    Not,
    And,
    Or,
    Minus,
    Zero,
    One,
    Atom(String),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, BoolError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let syntax = |position, message: &str| BoolError::Syntax { position, message: message.to_string() };
    while i < chars.len() {
        let (pos, c) = chars[i];
        let simple = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '~' => Some(Tok::Not),
            '&' => Some(Tok::And),
            '|' => Some(Tok::Or),
            '\\' => Some(Tok::Minus),
            _ => None,
        };
        if let Some(t) = simple {
            out.push((pos, t));
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
        } else if c == '{' {
            let close = chars[i..].iter().position(|&(_, c)| c == '}').ok_or_else(|| syntax(pos, "unclosed '{'"))?;
            out.push((pos, Tok::Atom(chars[i..=i + close].iter().map(|&(_, c)| c).collect())));
            i += close + 1;
        } else if c == '"' {
            let close =
                chars[i + 1..].iter().position(|&(_, c)| c == '"').ok_or_else(|| syntax(pos, "unclosed quote"))?;
            out.push((pos, Tok::Atom(chars[i + 1..i + 1 + close].iter().map(|&(_, c)| c).collect())));
            i += close + 2;
        } else if is_ident_char(c) {
            let len = chars[i..].iter().take_while(|&&(_, c)| is_ident_char(c)).count();
            let word: String = chars[i..i + len].iter().map(|&(_, c)| c).collect();
            out.push((
                pos,
                match word.as_str() {
                    "0" => Tok::Zero,
                    "1" => Tok::One,
                    _ => Tok::Atom(word),
                },
            ));
            i += len;
        } else {
            return Err(syntax(pos, &format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    m: &'a Monoid,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn error(&self, message: &str) -> BoolError {
        BoolError::Syntax { position: self.pos(), message: message.to_string() }
    }

    /// union := diff ('|' diff)*
    fn union(&mut self) -> Result<BoolExpr, BoolError> {
        let mut parts = vec![self.diff()?];
        while self.peek() == Some(&Tok::Or) {
            self.at += 1;
            parts.push(self.diff()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { BoolExpr::Union(parts) })
    }

    /// diff := inter ('\' inter)*, left associative
    fn diff(&mut self) -> Result<BoolExpr, BoolError> {
        let mut e = self.inter()?;
        while self.peek() == Some(&Tok::Minus) {
            self.at += 1;
            e = e.minus(self.inter()?);
        }
        Ok(e)
    }

    /// inter := unary ('&' unary)*
    fn inter(&mut self) -> Result<BoolExpr, BoolError> {
        let mut parts = vec![self.unary()?];
        while self.peek() == Some(&Tok::And) {
            self.at += 1;
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { BoolExpr::Intersection(parts) })
    }

    fn unary(&mut self) -> Result<BoolExpr, BoolError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("unexpected end of expression"));
        };
        self.at += 1;
        match tok {
            Tok::Not => Ok(self.unary()?.not()),
            Tok::Zero => Ok(BoolExpr::Zero),
            Tok::One => Ok(BoolExpr::One),
            Tok::Atom(label) => self.m.index_of(&label).map(BoolExpr::Atom).map_err(|_| BoolError::UnknownElement(label)),
            Tok::LParen => {
                let e = self.union()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.error("expected ')'"));
                }
                self.at += 1;
                Ok(e)
            }
            _ => {
                self.at -= 1;
                Err(self.error("expected an atom, a constant, '~' or '('"))
            }
        }
    }
}

/// Parses `text` with precedence `~` > `&` > `\` > `|`. Atoms are element
/// labels: bare words, `{…}` set labels, or `"quoted"`.
pub fn parse_bool_expr(text: &str, m: &Monoid) -> Result<BoolExpr, BoolError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, end: text.len(), m };
    let e = p.union()?;
    if p.at < p.toks.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

/// A product of literals: all of `pos`, none of `neg`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub pos: Vec<Elem>,
    pub neg: Vec<Elem>,
}

/// A union of pairwise disjoint products.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisjointNormalForm {
    pub terms: Vec<Term>,
}

impl DisjointNormalForm {
    pub fn eval(&self, assign: &impl Fn(Elem) -> bool) -> bool {
        self.terms.iter().any(|t| t.pos.iter().all(|&x| assign(x)) && t.neg.iter().all(|&x| !assign(x)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Full minterms over all atoms of the expression.
    TruthTable,
    /// Shannon expansion, last atom first, stopping as soon as a branch is constant.
    Shannon,
}

fn checked_atoms(e: &BoolExpr) -> Result<Vec<Elem>, BoolError> {
    let atoms = e.atoms();
    if atoms.len() > MAX_ATOMS {
        return Err(BoolError::TooManyAtoms(atoms.len()));
    }
    Ok(atoms)
}

pub fn normalize(e: &BoolExpr, strategy: Strategy) -> Result<DisjointNormalForm, BoolError> {
    let atoms = checked_atoms(e)?;
    let k = atoms.len();
    let mut terms = Vec::new();
    match strategy {
        Strategy::TruthTable => {
            for mask in 0u32..1 << k {
                let value = |x: Elem| mask >> atoms.iter().position(|&a| a == x).unwrap() & 1 == 1;
                if e.eval(&value) {
                    let (pos, neg) = (0..k).partition::<Vec<_>, _>(|&i| mask >> i & 1 == 1);
                    terms.push(Term {
                        pos: pos.into_iter().map(|i| atoms[i]).collect(),
                        neg: neg.into_iter().map(|i| atoms[i]).collect(),
                    });
                }
            }
        }
        Strategy::Shannon => {
            let order: Vec<Elem> = atoms.iter().rev().copied().collect();
            let mut assigned: Vec<Option<bool>> = vec![None; k];
            shannon(e, &atoms, &order, 0, &mut assigned, &mut terms);
        }
    }
    Ok(DisjointNormalForm { terms })
}

fn shannon(
    e: &BoolExpr,
    atoms: &[Elem],
    order: &[Elem],
    depth: usize,
    assigned: &mut Vec<Option<bool>>,
    out: &mut Vec<Term>,
) {
    let lookup = |x: Elem| assigned[atoms.iter().position(|&a| a == x).unwrap()];
    match e.eval_partial(&lookup) {
        Some(false) => {}
        Some(true) => {
            let mut t = Term { pos: Vec::new(), neg: Vec::new() };
            for (i, v) in assigned.iter().enumerate() {
                match v {
                    Some(true) => t.pos.push(atoms[i]),
                    Some(false) => t.neg.push(atoms[i]),
                    None => {}
                }
            }
            out.push(t);
        }
        None => {
            let i = atoms.iter().position(|&a| a == order[depth]).unwrap();
            for v in [true, false] {
                assigned[i] = Some(v);
                shannon(e, atoms, order, depth + 1, assigned, out);
            }
            assigned[i] = None;
        }
    }
}

/// `ζ` of one product of literals.
fn zeta_term(l: &LengthFn, t: &Term) -> Rational {
    let m = l.monoid();
    let y = m.join_all(t.neg.iter().copied());
    let k = t.pos.len();
    let mut joins = vec![y; 1 << k];
    let mut sum = Rational::zero();
    for s in 0usize..1 << k {
        if s > 0 {
            let low = s.trailing_zeros() as usize;
            joins[s] = m.join(joins[s & (s - 1)], t.pos[low]);
        }
        let v = l.value(joins[s]);
        if s.count_ones() % 2 == 1 {
            sum += v;
        } else {
            sum -= v;
        }
    }
    sum
}

pub fn zeta_dnf(l: &LengthFn, dnf: &DisjointNormalForm) -> Rational {
    dnf.terms.iter().map(|t| zeta_term(l, t)).fold(Rational::zero(), |a, b| a + b)
}

/// `ζ(e)` through the full truth table. Runs on scaled integers.
pub fn zeta(l: &LengthFn, e: &BoolExpr) -> Result<Rational, BoolError> {
    let atoms = checked_atoms(e)?;
    let k = atoms.len();
    let m = l.monoid();
    let Some(scaled) = Scaled::new(l.values()) else {
        return Ok(zeta_dnf(l, &normalize(e, Strategy::TruthTable)?));
    };
    // value of ℓ at the join of every subset of atoms
    let mut joins = vec![m.neutral(); 1 << k];
    let mut lv = vec![0i128; 1 << k];
    lv[0] = scaled.values[m.neutral()];
    for s in 1usize..1 << k {
        joins[s] = m.join(joins[s & (s - 1)], atoms[s.trailing_zeros() as usize]);
        lv[s] = scaled.values[joins[s]];
    }
    let full = (1usize << k) - 1;
    let mut total: i128 = 0;
    for pos in 0usize..1 << k {
        let value = |x: Elem| pos >> atoms.iter().position(|&a| a == x).unwrap() & 1 == 1;
        if !e.eval(&value) {
            continue;
        }
        let neg = full & !pos;
        // Σ over I ⊆ pos of (−1)^{|I|+1} ℓ(neg ∪ I)
        let mut i = pos;
        loop {
            let v = lv[neg | i];
            if i.count_ones() % 2 == 1 {
                total += v;
            } else {
                total -= v;
            }
            if i == 0 {
                break;
            }
            i = (i - 1) & pos;
        }
    }
    Ok(scaled.unscale(total))
}

pub fn zeta_with(l: &LengthFn, e: &BoolExpr, strategy: Strategy) -> Result<Rational, BoolError> {
    match strategy {
        Strategy::TruthTable => zeta(l, e),
        Strategy::Shannon => Ok(zeta_dnf(l, &normalize(e, Strategy::Shannon)?)),
    }
}

pub fn zeta_str(l: &LengthFn, text: &str) -> Result<Rational, BoolError> {
    zeta(l, &parse_bool_expr(text, l.monoid())?)
}

/// Outcome of [`check_signed_measure`]; `failures` names each broken identity.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SignedMeasureReport {
    pub checked: usize,
    pub failures: Vec<String>,
    /// Only evaluated for monotone lengths.
    pub positivity: Option<bool>,
}

impl SignedMeasureReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty() && self.positivity != Some(false)
    }
}

/// Expressions the signed-measure identities are checked on: the atoms,
/// their complements, and the pairwise `∩`, `∪`, `∖` of the atoms.
pub fn sample_expressions(atoms: &[Elem]) -> Vec<BoolExpr> {
    let a = |x: Elem| BoolExpr::Atom(x);
    let mut out: Vec<BoolExpr> = atoms.iter().map(|&x| a(x)).collect();
    out.extend(atoms.iter().map(|&x| a(x).not()));
    for (i, &x) in atoms.iter().enumerate() {
        for &y in &atoms[i + 1..] {
            out.push(a(x).and(a(y)));
            out.push(a(x).or(a(y)));
            out.push(a(x).minus(a(y)));
        }
    }
    out
}

/// Checks inclusion–exclusion, complement, difference, redundant-atom
/// invariance and agreement of both normalization strategies on
/// [`sample_expressions`] built from `atoms`.
pub fn check_signed_measure(l: &LengthFn, atoms: &[Elem]) -> SignedMeasureReport {
    let m = l.monoid();
    let mut report = SignedMeasureReport::default();
    let exprs = sample_expressions(atoms);
    let z = |e: &BoolExpr| zeta(l, e).expect("sample expressions are small");
    let show = |e: &BoolExpr| e.display(m).to_string();
    let values: Vec<Rational> = exprs.iter().map(z).collect();
    let fail = |report: &mut SignedMeasureReport, ok: bool, what: String| {
        report.checked += 1;
        if !ok {
            report.failures.push(what);
        }
    };
    for (i, x) in exprs.iter().enumerate() {
        fail(&mut report, z(&x.clone().not()) == -&values[i], format!("complement of {}", show(x)));
        fail(
            &mut report,
            zeta_with(l, x, Strategy::Shannon).unwrap() == values[i],
            format!("strategies disagree on {}", show(x)),
        );
        for &w in atoms {
            let padded = x.clone().and(BoolExpr::Atom(w).or(BoolExpr::Atom(w).not()));
            fail(&mut report, z(&padded) == values[i], format!("redundant {} in {}", m.label(w), show(x)));
        }
        for (j, y) in exprs.iter().enumerate() {
            let union = z(&x.clone().or(y.clone()));
            fail(
                &mut report,
                z(&x.clone().and(y.clone())) == &values[i] + &values[j] - &union,
                format!("inclusion-exclusion for {} and {}", show(x), show(y)),
            );
            fail(
                &mut report,
                z(&x.clone().minus(y.clone())) == &union - &values[j],
                format!("difference {} minus {}", show(x), show(y)),
            );
        }
    }
    if l.mode() == crate::length::Mode::Monotone {
        let nonneg = |e: BoolExpr| !z(&e).is_negative();
        let a = |x: Elem| BoolExpr::Atom(x);
        report.positivity = Some(atoms.iter().all(|&x| {
            atoms
                .iter()
                .all(|&y| nonneg(a(x).and(a(y))) && nonneg(a(x).or(a(y))) && nonneg(a(x).minus(a(y))))
        }));
    }
    report
}
