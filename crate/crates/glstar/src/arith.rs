//! Two-sorted bounded arithmetic: terms, Σ0B formulas with a root string
//! quantifier, finite-model evaluation, pairing and the edge-rec axiom.
//!
//! Text format (s-expressions):
//!
//! ```text
//! term    := NUMBER | IDENT | (len X) | (+ t t) | (* t t)
//! formula := true | false | (= t t) | (< t t) | (bit X t)
//!          | (not F) | (and F F) | (or F F)
//!          | (existsle y t F) | (forallle y t F)
//!          | (existsstr Y t F) | (forallstr Y t F)
//! ```
//!
//! Triples are coded as `pair(w, pair(i, j))`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::formula::Name;
use crate::lexer::{tokenize, Cursor, SyntaxError, Tok};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArithError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("number variable `{0}` has no value")]
    NoValue(Name),
    #[error("string variable `{0}` has no size")]
    NoSize(Name),
    #[error("arithmetic overflow")]
    Overflow,
    #[error("string quantifier bound {bound} exceeds the evaluation cap {cap}")]
    StringCap { bound: u64, cap: u64 },
    #[error("`{0}` is bound twice on one path")]
    Shadowed(Name),
    #[error("edge relation mentions the path string `{0}`")]
    MentionsPath(Name),
    #[error("string `{name}` has {got} bits, expected {want}")]
    BitCount { name: Name, got: usize, want: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Zero,
    One,
    Num(u64),
    Var(Name),
    /// `|X|`.
    Len(Name),
    Add(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
}

impl Term {
    pub fn num(n: u64) -> Term {
        match n {
            0 => Term::Zero,
            1 => Term::One,
            _ => Term::Num(n),
        }
    }

    pub fn var(n: impl Into<Name>) -> Term {
        Term::Var(n.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(s: Term, t: Term) -> Term {
        Term::Add(Box::new(s), Box::new(t))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(s: Term, t: Term) -> Term {
        Term::Mul(Box::new(s), Box::new(t))
    }

    fn collect_vars(&self, nums: &mut BTreeSet<Name>, strs: &mut BTreeSet<Name>) {
        match self {
            Term::Zero | Term::One | Term::Num(_) => {}
            Term::Var(n) => {
                nums.insert(n.clone());
            }
            Term::Len(n) => {
                strs.insert(n.clone());
            }
            Term::Add(s, t) | Term::Mul(s, t) => {
                s.collect_vars(nums, strs);
                t.collect_vars(nums, strs);
            }
        }
    }

    fn mentions_num(&self, v: &str) -> bool {
        match self {
            Term::Var(n) => &**n == v,
            Term::Add(s, t) | Term::Mul(s, t) => s.mentions_num(v) || t.mentions_num(v),
            _ => false,
        }
    }

    fn subst(&self, map: &BTreeMap<Name, Term>) -> Term {
        match self {
            Term::Var(n) => map.get(n).cloned().unwrap_or_else(|| self.clone()),
            Term::Add(s, t) => Term::add(s.subst(map), t.subst(map)),
            Term::Mul(s, t) => Term::mul(s.subst(map), t.subst(map)),
            _ => self.clone(),
        }
    }
}

/// `pair(s, t)` as a term: `(s+t)·((s+t)+1) + (t+t)`.
pub fn pair_term(s: Term, t: Term) -> Term {
    let sum = Term::add(s, t.clone());
    Term::add(Term::mul(sum.clone(), Term::add(sum, Term::One)), Term::add(t.clone(), t))
}

pub fn triple_term(w: Term, i: Term, j: Term) -> Term {
    pair_term(w, pair_term(i, j))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AFormula {
    Top,
    Bot,
    Eq(Term, Term),
    Lt(Term, Term),
    /// `X(t)`.
    Bit(Name, Term),
    Not(Box<AFormula>),
    And(Box<AFormula>, Box<AFormula>),
    Or(Box<AFormula>, Box<AFormula>),
    /// `∃y ≤ t`.
    ExistsLe(Name, Term, Box<AFormula>),
    ForallLe(Name, Term, Box<AFormula>),
    /// `∃Y ≤ t`: `|Y| ≤ t`.
    ExistsStr(Name, Term, Box<AFormula>),
    ForallStr(Name, Term, Box<AFormula>),
}

impl AFormula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(a: AFormula) -> AFormula {
        AFormula::Not(Box::new(a))
    }

    pub fn and(a: AFormula, b: AFormula) -> AFormula {
        AFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: AFormula, b: AFormula) -> AFormula {
        AFormula::Or(Box::new(a), Box::new(b))
    }

    /// Right-nested disjunction; `⊥` if empty.
    pub fn or_all(items: impl IntoIterator<Item = AFormula>) -> AFormula {
        let mut v: Vec<AFormula> = items.into_iter().collect();
        let Some(mut acc) = v.pop() else { return AFormula::Bot };
        while let Some(x) = v.pop() {
            acc = AFormula::or(x, acc);
        }
        acc
    }

    /// Right-nested conjunction; `⊤` if empty.
    pub fn and_all(items: impl IntoIterator<Item = AFormula>) -> AFormula {
        let mut v: Vec<AFormula> = items.into_iter().collect();
        let Some(mut acc) = v.pop() else { return AFormula::Top };
        while let Some(x) = v.pop() {
            acc = AFormula::and(x, acc);
        }
        acc
    }

    pub fn bit(x: impl Into<Name>, t: Term) -> AFormula {
        AFormula::Bit(x.into(), t)
    }

    /// `X(i, j)`, i.e. `X(pair(i, j))`.
    pub fn bit2(x: impl Into<Name>, i: Term, j: Term) -> AFormula {
        AFormula::Bit(x.into(), pair_term(i, j))
    }

    pub fn exists_le(y: impl Into<Name>, t: Term, body: AFormula) -> AFormula {
        AFormula::ExistsLe(y.into(), t, Box::new(body))
    }

    pub fn forall_le(y: impl Into<Name>, t: Term, body: AFormula) -> AFormula {
        AFormula::ForallLe(y.into(), t, Box::new(body))
    }

    pub fn exists_str(y: impl Into<Name>, t: Term, body: AFormula) -> AFormula {
        AFormula::ExistsStr(y.into(), t, Box::new(body))
    }

    /// Free number and string variables.
    pub fn free_vars(&self) -> (BTreeSet<Name>, BTreeSet<Name>) {
        let (mut nums, mut strs) = (BTreeSet::new(), BTreeSet::new());
        self.collect_free(&mut nums, &mut strs);
        (nums, strs)
    }

    fn collect_free(&self, nums: &mut BTreeSet<Name>, strs: &mut BTreeSet<Name>) {
        match self {
            AFormula::Top | AFormula::Bot => {}
            AFormula::Eq(s, t) | AFormula::Lt(s, t) => {
                s.collect_vars(nums, strs);
                t.collect_vars(nums, strs);
            }
            AFormula::Bit(x, t) => {
                strs.insert(x.clone());
                t.collect_vars(nums, strs);
            }
            AFormula::Not(a) => a.collect_free(nums, strs),
            AFormula::And(a, b) | AFormula::Or(a, b) => {
                a.collect_free(nums, strs);
                b.collect_free(nums, strs);
            }
            AFormula::ExistsLe(y, t, a) | AFormula::ForallLe(y, t, a) => {
                t.collect_vars(nums, strs);
                let (mut n2, mut s2) = (BTreeSet::new(), BTreeSet::new());
                a.collect_free(&mut n2, &mut s2);
                n2.remove(y);
                nums.extend(n2);
                strs.extend(s2);
            }
            AFormula::ExistsStr(y, t, a) | AFormula::ForallStr(y, t, a) => {
                t.collect_vars(nums, strs);
                let (mut n2, mut s2) = (BTreeSet::new(), BTreeSet::new());
                a.collect_free(&mut n2, &mut s2);
                s2.remove(y);
                nums.extend(n2);
                strs.extend(s2);
            }
        }
    }

    fn all_names(&self, out: &mut BTreeSet<Name>) {
        let (n, s) = self.free_vars();
        out.extend(n);
        out.extend(s);
        match self {
            AFormula::Not(a) => a.all_names(out),
            AFormula::And(a, b) | AFormula::Or(a, b) => {
                a.all_names(out);
                b.all_names(out);
            }
            AFormula::ExistsLe(y, _, a)
            | AFormula::ForallLe(y, _, a)
            | AFormula::ExistsStr(y, _, a)
            | AFormula::ForallStr(y, _, a) => {
                out.insert(y.clone());
                a.all_names(out);
            }
            _ => {}
        }
    }

    /// Whether string variable `x` occurs free.
    pub fn mentions_string(&self, x: &str) -> bool {
        self.free_vars().1.iter().any(|s| &**s == x)
    }

    /// Σ0B: no string quantifiers.
    pub fn is_sigma0b(&self) -> bool {
        match self {
            AFormula::ExistsStr(..) | AFormula::ForallStr(..) => false,
            AFormula::Not(a) | AFormula::ExistsLe(_, _, a) | AFormula::ForallLe(_, _, a) => a.is_sigma0b(),
            AFormula::And(a, b) | AFormula::Or(a, b) => a.is_sigma0b() && b.is_sigma0b(),
            _ => true,
        }
    }

    /// Simultaneous substitution of terms for free number variables; bound
    /// number variables that would capture are renamed with primes.
    pub fn subst(&self, map: &BTreeMap<Name, Term>) -> AFormula {
        match self {
            AFormula::Top | AFormula::Bot => self.clone(),
            AFormula::Eq(s, t) => AFormula::Eq(s.subst(map), t.subst(map)),
            AFormula::Lt(s, t) => AFormula::Lt(s.subst(map), t.subst(map)),
            AFormula::Bit(x, t) => AFormula::Bit(x.clone(), t.subst(map)),
            AFormula::Not(a) => AFormula::not(a.subst(map)),
            AFormula::And(a, b) => AFormula::and(a.subst(map), b.subst(map)),
            AFormula::Or(a, b) => AFormula::or(a.subst(map), b.subst(map)),
            AFormula::ExistsLe(y, t, a) | AFormula::ForallLe(y, t, a) => {
                let t2 = t.subst(map);
                let mut inner: BTreeMap<Name, Term> =
                    map.iter().filter(|(k, _)| *k != y).map(|(k, v)| (k.clone(), v.clone())).collect();
                let mut y2 = y.clone();
                if inner.values().any(|v| v.mentions_num(y)) {
                    let mut taken = BTreeSet::new();
                    a.all_names(&mut taken);
                    for v in inner.values() {
                        v.collect_vars(&mut taken, &mut BTreeSet::new());
                    }
                    let mut s = format!("{y}'");
                    while taken.contains(s.as_str()) {
                        s.push('\'');
                    }
                    y2 = Name::from(s.as_str());
                    inner.insert(y.clone(), Term::Var(y2.clone()));
                }
                let body = Box::new(a.subst(&inner));
                match self {
                    AFormula::ExistsLe(..) => AFormula::ExistsLe(y2, t2, body),
                    _ => AFormula::ForallLe(y2, t2, body),
                }
            }
            AFormula::ExistsStr(y, t, a) => AFormula::ExistsStr(y.clone(), t.subst(map), Box::new(a.subst(map))),
            AFormula::ForallStr(y, t, a) => AFormula::ForallStr(y.clone(), t.subst(map), Box::new(a.subst(map))),
        }
    }

    /// Rejects a quantifier rebinding a name bound above it.
    pub fn check_no_shadowing(&self) -> Result<(), ArithError> {
        fn go(f: &AFormula, bound: &mut Vec<Name>) -> Result<(), ArithError> {
            match f {
                AFormula::Not(a) => go(a, bound),
                AFormula::And(a, b) | AFormula::Or(a, b) => {
                    go(a, bound)?;
                    go(b, bound)
                }
                AFormula::ExistsLe(y, _, a)
                | AFormula::ForallLe(y, _, a)
                | AFormula::ExistsStr(y, _, a)
                | AFormula::ForallStr(y, _, a) => {
                    if bound.contains(y) {
                        return Err(ArithError::Shadowed(y.clone()));
                    }
                    bound.push(y.clone());
                    let r = go(a, bound);
                    bound.pop();
                    r
                }
                _ => Ok(()),
            }
        }
        go(self, &mut Vec::new())
    }

    /// Top-level conjuncts of a right- or left-nested conjunction.
    pub fn conjuncts(&self) -> Vec<&AFormula> {
        match self {
            AFormula::And(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            _ => vec![self],
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Zero => f.write_str("0"),
            Term::One => f.write_str("1"),
            Term::Num(n) => write!(f, "{n}"),
            Term::Var(n) => f.write_str(n),
            Term::Len(x) => write!(f, "(len {x})"),
            Term::Add(s, t) => write!(f, "(+ {s} {t})"),
            Term::Mul(s, t) => write!(f, "(* {s} {t})"),
        }
    }
}

impl fmt::Display for AFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AFormula::Top => f.write_str("true"),
            AFormula::Bot => f.write_str("false"),
            AFormula::Eq(s, t) => write!(f, "(= {s} {t})"),
            AFormula::Lt(s, t) => write!(f, "(< {s} {t})"),
            AFormula::Bit(x, t) => write!(f, "(bit {x} {t})"),
            AFormula::Not(a) => write!(f, "(not {a})"),
            AFormula::And(a, b) => write!(f, "(and {a} {b})"),
            AFormula::Or(a, b) => write!(f, "(or {a} {b})"),
            AFormula::ExistsLe(y, t, a) => write!(f, "(existsle {y} {t} {a})"),
            AFormula::ForallLe(y, t, a) => write!(f, "(forallle {y} {t} {a})"),
            AFormula::ExistsStr(y, t, a) => write!(f, "(existsstr {y} {t} {a})"),
            AFormula::ForallStr(y, t, a) => write!(f, "(forallstr {y} {t} {a})"),
        }
    }
}

const RESERVED: &[&str] =
    &["true", "false", "not", "and", "or", "bit", "len", "existsle", "forallle", "existsstr", "forallstr"];

fn read_name<'a>(cur: &mut Cursor<'a>) -> Result<&'a str, SyntaxError> {
    let pos = cur.pos();
    let s = cur.ident()?;
    if RESERVED.contains(&s) {
        return Err(SyntaxError::new(pos, format!("`{s}` is reserved")));
    }
    Ok(s)
}

fn read_term(cur: &mut Cursor<'_>) -> Result<Term, SyntaxError> {
    let pos = cur.pos();
    match cur.next() {
        Some(Tok::Number(n)) => Ok(Term::num(*n)),
        Some(Tok::Ident(s)) if !RESERVED.contains(&s.as_str()) => Ok(Term::var(s.as_str())),
        Some(Tok::LParen) => {
            let opos = cur.pos();
            let t = match cur.next() {
                Some(Tok::Plus) => Term::add(read_term(cur)?, read_term(cur)?),
                Some(Tok::Star) => Term::mul(read_term(cur)?, read_term(cur)?),
                Some(Tok::Ident(s)) if s == "len" => Term::Len(read_name(cur)?.into()),
                _ => return Err(SyntaxError::new(opos, "expected `+`, `*` or `len`")),
            };
            cur.expect(&Tok::RParen)?;
            Ok(t)
        }
        Some(t) => Err(SyntaxError::new(pos, format!("expected term, found `{t}`"))),
        None => Err(SyntaxError::new(pos, "expected term, found end of input")),
    }
}

fn read_aformula(cur: &mut Cursor<'_>) -> Result<AFormula, SyntaxError> {
    let pos = cur.pos();
    match cur.next() {
        Some(Tok::Ident(s)) if s == "true" => Ok(AFormula::Top),
        Some(Tok::Ident(s)) if s == "false" => Ok(AFormula::Bot),
        Some(Tok::LParen) => {
            let opos = cur.pos();
            let f = match cur.next() {
                Some(Tok::Equals) => AFormula::Eq(read_term(cur)?, read_term(cur)?),
                Some(Tok::Less) => AFormula::Lt(read_term(cur)?, read_term(cur)?),
                Some(Tok::Ident(op)) => match op.as_str() {
                    "bit" => {
                        let x = read_name(cur)?;
                        AFormula::bit(x, read_term(cur)?)
                    }
                    "not" => AFormula::not(read_aformula(cur)?),
                    "and" => AFormula::and(read_aformula(cur)?, read_aformula(cur)?),
                    "or" => AFormula::or(read_aformula(cur)?, read_aformula(cur)?),
                    "existsle" | "forallle" | "existsstr" | "forallstr" => {
                        let y: Name = read_name(cur)?.into();
                        let t = read_term(cur)?;
                        let body = Box::new(read_aformula(cur)?);
                        match op.as_str() {
                            "existsle" => AFormula::ExistsLe(y, t, body),
                            "forallle" => AFormula::ForallLe(y, t, body),
                            "existsstr" => AFormula::ExistsStr(y, t, body),
                            _ => AFormula::ForallStr(y, t, body),
                        }
                    }
                    other => return Err(SyntaxError::new(opos, format!("unknown connective `{other}`"))),
                },
                _ => return Err(SyntaxError::new(opos, "expected a connective")),
            };
            cur.expect(&Tok::RParen)?;
            Ok(f)
        }
        Some(t) => Err(SyntaxError::new(pos, format!("expected formula, found `{t}`"))),
        None => Err(SyntaxError::new(pos, "expected formula, found end of input")),
    }
}

pub fn parse_term(text: &str) -> Result<Term, ArithError> {
    let toks = tokenize(text)?;
    let mut cur = Cursor::new(&toks, text.len());
    let t = read_term(&mut cur)?;
    cur.finish()?;
    Ok(t)
}

pub fn parse_aformula(text: &str) -> Result<AFormula, ArithError> {
    let toks = tokenize(text)?;
    let mut cur = Cursor::new(&toks, text.len());
    let f = read_aformula(&mut cur)?;
    cur.finish()?;
    f.check_no_shadowing()?;
    Ok(f)
}

/// Values of number variables and sizes of string variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SizeContext {
    pub nums: BTreeMap<Name, u64>,
    pub sizes: BTreeMap<Name, u64>,
}

impl SizeContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_num(mut self, x: &str, m: u64) -> Self {
        self.nums.insert(x.into(), m);
        self
    }

    pub fn with_size(mut self, x: &str, n: u64) -> Self {
        self.sizes.insert(x.into(), n);
        self
    }
}

/// Value of a term.
pub fn val(t: &Term, ctx: &SizeContext) -> Result<u64, ArithError> {
    match t {
        Term::Zero => Ok(0),
        Term::One => Ok(1),
        Term::Num(n) => Ok(*n),
        Term::Var(x) => ctx.nums.get(x).copied().ok_or_else(|| ArithError::NoValue(x.clone())),
        Term::Len(x) => ctx.sizes.get(x).copied().ok_or_else(|| ArithError::NoSize(x.clone())),
        Term::Add(s, u) => val(s, ctx)?.checked_add(val(u, ctx)?).ok_or(ArithError::Overflow),
        Term::Mul(s, u) => val(s, ctx)?.checked_mul(val(u, ctx)?).ok_or(ArithError::Overflow),
    }
}

pub fn pair(i: u64, j: u64) -> u64 {
    let s = i + j;
    s * (s + 1) + 2 * j
}

pub fn triple(w: u64, i: u64, j: u64) -> u64 {
    pair(w, pair(i, j))
}

/// Inverse of [`pair`], if `n` is a pair code.
pub fn unpair(n: u64) -> Option<(u64, u64)> {
    let mut s = ((n as f64).sqrt() as u64).saturating_sub(1);
    while (s + 1) * (s + 2) <= n {
        s += 1;
    }
    while s * (s + 1) > n {
        s -= 1;
    }
    let rem = n - s * (s + 1);
    (rem.is_multiple_of(2) && rem / 2 <= s).then(|| (s - rem / 2, rem / 2))
}

pub fn untriple(n: u64) -> Option<(u64, u64, u64)> {
    let (w, p) = unpair(n)?;
    let (i, j) = unpair(p)?;
    Some((w, i, j))
}

/// Sizes plus bit contents.  A string of size `n > 0` has bit `n-1` set
/// and no bits at or above `n`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FiniteModel {
    pub ctx: SizeContext,
    pub bits: BTreeMap<Name, Vec<bool>>,
}

impl FiniteModel {
    /// Every string of `ctx` gets its low bits cleared.
    pub fn new(ctx: SizeContext) -> Self {
        let bits = ctx
            .sizes
            .iter()
            .map(|(x, &n)| {
                let mut v = vec![false; n as usize];
                if let Some(top) = v.last_mut() {
                    *top = true;
                }
                (x.clone(), v)
            })
            .collect();
        FiniteModel { ctx, bits }
    }

    /// Sets the low `n-1` bits of `x` (the top bit stays 1).
    pub fn set_low_bits(&mut self, x: &str, low: &[bool]) -> Result<(), ArithError> {
        let n = *self.ctx.sizes.get(x).ok_or_else(|| ArithError::NoSize(x.into()))?;
        let want = n.saturating_sub(1);
        if low.len() as u64 != want {
            return Err(ArithError::BitCount { name: x.into(), got: low.len(), want });
        }
        let v = self.bits.get_mut(x).expect("sized string has bits");
        v[..low.len()].copy_from_slice(low);
        Ok(())
    }

    /// Sets `x` to the given bit string; its size becomes one past the
    /// highest set bit.
    pub fn set_string(&mut self, x: &str, set: &BTreeSet<u64>) {
        let n = set.iter().next_back().map_or(0, |&m| m + 1);
        let mut v = vec![false; n as usize];
        for &m in set {
            v[m as usize] = true;
        }
        self.ctx.sizes.insert(x.into(), n);
        self.bits.insert(x.into(), v);
    }

    pub fn bit(&self, x: &str, j: u64) -> Result<bool, ArithError> {
        let v = self.bits.get(x).ok_or_else(|| ArithError::NoSize(x.into()))?;
        Ok(v.get(j as usize).copied().unwrap_or(false))
    }

    /// The propositional assignment `X_j ↦ bit j` for `j < n-1`, the
    /// variables of the translation.
    pub fn bit_assignment(&self) -> crate::formula::Assignment {
        let mut a = crate::formula::Assignment::new();
        for (x, v) in &self.bits {
            for (j, &b) in v.iter().enumerate().take(v.len().saturating_sub(1)) {
                a.insert(bit_name(x, j as u64), b);
            }
        }
        a
    }
}

/// Propositional name of bit `j` of string `x`.
pub fn bit_name(x: &str, j: u64) -> Name {
    Name::from(format!("{x}_{j}").as_str())
}

/// Largest string-quantifier bound [`eval_arith`] expands.
pub const STRING_CAP: u64 = 16;

/// Truth in the standard model.
pub fn eval_arith(f: &AFormula, m: &FiniteModel) -> Result<bool, ArithError> {
    let mut m = m.clone();
    eval_rec(f, &mut m)
}

fn eval_rec(f: &AFormula, m: &mut FiniteModel) -> Result<bool, ArithError> {
    Ok(match f {
        AFormula::Top => true,
        AFormula::Bot => false,
        AFormula::Eq(s, t) => val(s, &m.ctx)? == val(t, &m.ctx)?,
        AFormula::Lt(s, t) => val(s, &m.ctx)? < val(t, &m.ctx)?,
        AFormula::Bit(x, t) => {
            let j = val(t, &m.ctx)?;
            m.bit(x, j)?
        }
        AFormula::Not(a) => !eval_rec(a, m)?,
        AFormula::And(a, b) => eval_rec(a, m)? && eval_rec(b, m)?,
        AFormula::Or(a, b) => eval_rec(a, m)? || eval_rec(b, m)?,
        AFormula::ExistsLe(y, t, a) | AFormula::ForallLe(y, t, a) => {
            let want = matches!(f, AFormula::ExistsLe(..));
            let bound = val(t, &m.ctx)?;
            let saved = m.ctx.nums.get(y).copied();
            let mut result = !want;
            for v in 0..=bound {
                m.ctx.nums.insert(y.clone(), v);
                if eval_rec(a, m)? == want {
                    result = want;
                    break;
                }
            }
            match saved {
                Some(s) => m.ctx.nums.insert(y.clone(), s),
                None => m.ctx.nums.remove(y),
            };
            result
        }
        AFormula::ExistsStr(y, t, a) | AFormula::ForallStr(y, t, a) => {
            let want = matches!(f, AFormula::ExistsStr(..));
            let bound = val(t, &m.ctx)?;
            if bound > STRING_CAP {
                return Err(ArithError::StringCap { bound, cap: STRING_CAP });
            }
            let saved = (m.ctx.sizes.get(y).copied(), m.bits.get(y).cloned());
            let mut result = !want;
            'sizes: for n in 0..=bound {
                let free = n.saturating_sub(1);
                for low in 0u64..(1u64 << free) {
                    let mut v: Vec<bool> = (0..free).map(|k| low >> k & 1 == 1).collect();
                    if n > 0 {
                        v.push(true);
                    }
                    m.ctx.sizes.insert(y.clone(), n);
                    m.bits.insert(y.clone(), v);
                    if eval_rec(a, m)? == want {
                        result = want;
                        break 'sizes;
                    }
                }
            }
            match saved.0 {
                Some(s) => m.ctx.sizes.insert(y.clone(), s),
                None => m.ctx.sizes.remove(y),
            };
            match saved.1 {
                Some(b) => m.bits.insert(y.clone(), b),
                None => m.bits.remove(y),
            };
            result
        }
    })
}

/// Which form of the predecessor conjunct ρ4 to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rho4 {
    /// `¬Z(w+1,i,j) ∨ ∃h≤a Z(w,h,i) ∨ (j<a ∧ ¬φ(i,j)) ∨ ∃l<j φ(i,l)`: a
    /// sink step `(i,a)` always needs a predecessor.
    #[default]
    Guarded,
    /// `¬Z(w+1,i,j) ∨ ∃h≤a Z(w,h,i) ∨ ¬φ(i,j) ∨ ∃l<j φ(i,l)`.  Admits
    /// spurious sink steps, so the path string is not unique.
    Unguarded,
}

/// The edge relation `X(i, j)` with parameters `i`, `j`.
pub fn edge_template(x: &str) -> AFormula {
    AFormula::bit2(x, Term::var("i"), Term::var("j"))
}

/// Name of the path string in [`build_edge_rec`].
pub const PATH: &str = "Z";

fn fresh_name(base: &str, avoid: &BTreeSet<Name>) -> Name {
    let mut s = base.to_string();
    while avoid.contains(s.as_str()) {
        s.push('\'');
    }
    Name::from(s.as_str())
}

/// Bounds of the ρ8 quantifiers: every triple code up to `triple(b,a,a)`
/// has `w ≤ bw` and `i, j ≤ bi`.
pub fn rho8_bounds(a: u64, b: u64) -> (u64, u64) {
    (b + pair(a, a) + 1, b + 2 * a + 1)
}

/// `∃Z ≤ 1+triple(b,a,a) [ρ1 ∧ … ∧ ρ8]` for the edge relation `phi` with
/// number parameters `pi`, `pj`.
pub fn build_edge_rec(phi: &AFormula, pi: &str, pj: &str, a: u64, b: u64, rho4: Rho4) -> Result<AFormula, ArithError> {
    if phi.mentions_string(PATH) {
        return Err(ArithError::MentionsPath(PATH.into()));
    }
    let (mut avoid, strs) = phi.free_vars();
    avoid.extend(strs);
    avoid.remove(pi);
    avoid.remove(pj);
    let [w, i, j, k, l, h] = ["w", "i", "j", "k", "l", "h"].map(|s| fresh_name(s, &avoid));
    let v = |n: &Name| Term::Var(n.clone());
    let phi_at = |s: Term, t: Term| {
        let mut m = BTreeMap::new();
        m.insert(Name::from(pi), s);
        m.insert(Name::from(pj), t);
        phi.subst(&m)
    };
    let z = |w: Term, i: Term, j: Term| AFormula::bit(PATH, triple_term(w, i, j));
    let na = Term::num(a);
    let nb = Term::num(b);
    let lt = |s: Term, t: Term| AFormula::Lt(s, t);
    let not = AFormula::not;
    let or = |v: Vec<AFormula>| AFormula::or_all(v);
    // ∃l<t φ(s,l), written ∃l≤t (l<t ∧ φ(s,l)).
    let earlier =
        |s: Term, t: Term| AFormula::exists_le(l.clone(), t.clone(), AFormula::and(lt(v(&l), t), phi_at(s, v(&l))));
    let w1 = || Term::add(v(&w), Term::One);

    let rho1 = AFormula::forall_le(
        j.clone(),
        na.clone(),
        or(vec![
            not(lt(v(&j), na.clone())),
            not(z(Term::Zero, Term::Zero, v(&j))),
            phi_at(Term::Zero, v(&j)),
            earlier(Term::Zero, v(&j)),
        ]),
    );
    let rho2 = AFormula::forall_le(
        j.clone(),
        na.clone(),
        AFormula::forall_le(
            k.clone(),
            v(&j),
            or(vec![
                not(lt(v(&k), v(&j))),
                not(z(Term::Zero, Term::Zero, v(&j))),
                not(phi_at(Term::Zero, v(&k))),
                earlier(Term::Zero, v(&k)),
            ]),
        ),
    );
    let rho3 = AFormula::forall_le(
        i.clone(),
        na.clone(),
        AFormula::forall_le(
            j.clone(),
            na.clone(),
            AFormula::or(AFormula::Eq(v(&i), Term::Zero), not(z(Term::Zero, v(&i), v(&j)))),
        ),
    );
    let pred = AFormula::exists_le(h.clone(), na.clone(), z(v(&w), v(&h), v(&i)));
    let no_edge = match rho4 {
        Rho4::Guarded => AFormula::and(lt(v(&j), na.clone()), not(phi_at(v(&i), v(&j)))),
        Rho4::Unguarded => not(phi_at(v(&i), v(&j))),
    };
    let layer =
        |body: AFormula| AFormula::forall_le(w.clone(), nb.clone(), AFormula::or(not(lt(v(&w), nb.clone())), body));
    let rho4 = layer(AFormula::forall_le(
        i.clone(),
        na.clone(),
        AFormula::forall_le(
            j.clone(),
            na.clone(),
            or(vec![not(z(w1(), v(&i), v(&j))), pred, no_edge, earlier(v(&i), v(&j))]),
        ),
    ));
    let rho5 = layer(AFormula::forall_le(
        i.clone(),
        na.clone(),
        AFormula::forall_le(
            j.clone(),
            na.clone(),
            or(vec![
                not(lt(v(&j), na.clone())),
                not(z(w1(), v(&i), v(&j))),
                phi_at(v(&i), v(&j)),
                earlier(v(&i), v(&j)),
            ]),
        ),
    ));
    let rho6 = layer(AFormula::forall_le(
        i.clone(),
        na.clone(),
        AFormula::forall_le(
            j.clone(),
            na.clone(),
            AFormula::forall_le(
                k.clone(),
                v(&j),
                or(vec![
                    not(lt(v(&k), v(&j))),
                    not(z(w1(), v(&i), v(&j))),
                    not(phi_at(v(&i), v(&k))),
                    earlier(v(&i), v(&k)),
                ]),
            ),
        ),
    ));
    let rho7 = AFormula::exists_le(
        i.clone(),
        na.clone(),
        AFormula::exists_le(j.clone(), na.clone(), z(nb.clone(), v(&i), v(&j))),
    );
    let (bw, bi) = rho8_bounds(a, b);
    let code = triple_term(v(&w), v(&i), v(&j));
    let outside = AFormula::or_all([lt(nb.clone(), v(&w)), lt(na.clone(), v(&i)), lt(na.clone(), v(&j))]);
    let rho8 = AFormula::forall_le(
        w.clone(),
        Term::num(bw),
        AFormula::forall_le(
            i.clone(),
            Term::num(bi),
            AFormula::forall_le(
                j.clone(),
                Term::num(bi),
                or(vec![
                    not(z(v(&w), v(&i), v(&j))),
                    lt(triple_term(nb.clone(), na.clone(), na.clone()), code),
                    not(outside),
                ]),
            ),
        ),
    );
    let body = AFormula::and_all([rho1, rho2, rho3, rho4, rho5, rho6, rho7, rho8]);
    let bound = Term::add(Term::One, Term::num(triple(b, a, a)));
    Ok(AFormula::exists_str(PATH, bound, body))
}

/// The pseudo-path of length `b` from node 0: each step goes to the least
/// `j < a` with an edge, or to `a` if there is none.  Returns the `b+1`
/// steps `(i, j)`.
pub fn pseudo_path(a: u64, b: u64, edge: impl Fn(u64, u64) -> bool) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut i = 0;
    for _ in 0..=b {
        let j = (0..a).find(|&j| edge(i, j)).unwrap_or(a);
        out.push((i, j));
        i = j;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn val_examples() {
        let ctx = SizeContext::new().with_num("x", 2).with_size("X", 5);
        assert_eq!(val(&parse_term("(* (+ 1 1) (+ 1 1))").unwrap(), &ctx), Ok(4));
        assert_eq!(val(&parse_term("(+ x 1)").unwrap(), &ctx), Ok(3));
        assert_eq!(val(&parse_term("(len X)").unwrap(), &ctx), Ok(5));
        assert_eq!(val(&parse_term("y").unwrap(), &ctx), Err(ArithError::NoValue("y".into())));
    }

    #[test]
    fn pairing() {
        assert_eq!(pair(0, 0), 0);
        assert_eq!(pair(1, 2), 16);
        assert_eq!(pair(2, 1), 14);
        let ctx = SizeContext::new().with_num("i", 1).with_num("j", 2);
        assert_eq!(val(&pair_term(Term::var("i"), Term::var("j")), &ctx), Ok(16));
        assert_eq!(unpair(16), Some((1, 2)));
        assert_eq!(unpair(1), None);
        assert_eq!(untriple(triple(3, 1, 2)), Some((3, 1, 2)));
    }

    #[test]
    fn eval_examples() {
        let ctx = SizeContext::new().with_size("X", 2).with_num("x", 7);
        let m = FiniteModel::new(ctx);
        let f = parse_aformula("(forallle i (len X) (or (not (< i (len X))) (bit X i)))").unwrap();
        assert_eq!(eval_arith(&f, &m), Ok(false));
        assert_eq!(eval_arith(&parse_aformula("(= (+ x 0) x)").unwrap(), &m), Ok(true));
        let g = parse_aformula("(existsstr Y 3 (and (bit Y 1) (not (bit Y 0))))").unwrap();
        assert_eq!(eval_arith(&g, &m), Ok(true));
        let g = parse_aformula("(existsstr Y 1 (bit Y 1))").unwrap();
        assert_eq!(eval_arith(&g, &m), Ok(false));
    }

    #[test]
    fn parse_print_round_trip() {
        for s in [
            "(existsle y (+ x 1) (and (bit X y) (< y (len X))))",
            "(forallstr Y 3 (or (= 0 1) (not (bit Y (* 2 y)))))",
            "true",
        ] {
            let f = parse_aformula(s).unwrap();
            assert_eq!(f.to_string(), s);
        }
        assert!(parse_aformula("(existsle y 1 (existsle y 1 true))").is_err());
        assert!(parse_aformula("(bit len 1)").is_err());
    }

    #[test]
    fn substitution_renames_capturing_binders() {
        let f = parse_aformula("(existsle l j (bit X (+ l i)))").unwrap();
        let mut m = BTreeMap::new();
        m.insert(Name::from("i"), Term::var("l"));
        let g = f.subst(&m);
        assert_eq!(g.to_string(), "(existsle l' j (bit X (+ l' l)))");
    }

    fn path_string(a: u64, b: u64, edge: impl Fn(u64, u64) -> bool) -> BTreeSet<u64> {
        pseudo_path(a, b, edge).into_iter().enumerate().map(|(w, (i, j))| triple(w as u64, i, j)).collect()
    }

    #[test]
    fn edge_rec_shape_and_truth() {
        let f = build_edge_rec(&edge_template("X"), "i", "j", 1, 1, Rho4::Guarded).unwrap();
        let AFormula::ExistsStr(z, bound, body) = &f else { panic!() };
        assert_eq!(&**z, PATH);
        assert_eq!(val(bound, &SizeContext::new()), Ok(1 + triple(1, 1, 1)));
        assert_eq!(body.conjuncts().len(), 8);
        assert!(body.is_sigma0b());
        // The pseudo-path string satisfies the matrix for each graph on one node.
        for bits in 0..4u64 {
            let x = |i: u64, j: u64| bits >> (i * 2 + j) & 1 == 1;
            let mut ctx = SizeContext::new().with_size("X", pair(1, 1) + 2);
            ctx.sizes.insert("Z".into(), 0);
            let mut m = FiniteModel::new(ctx);
            let mut low = vec![false; pair(1, 1) as usize + 1];
            for i in 0..=1 {
                for j in 0..=1 {
                    low[pair(i, j) as usize] = x(i, j);
                }
            }
            m.set_low_bits("X", &low).unwrap();
            m.set_string("Z", &path_string(1, 1, x));
            assert_eq!(eval_arith(body, &m), Ok(true), "graph {bits}");
            // Flipping a path bit breaks it.
            let mut wrong = path_string(1, 1, x);
            let first = *wrong.iter().next().unwrap();
            wrong.remove(&first);
            m.set_string("Z", &wrong);
            assert_eq!(eval_arith(body, &m), Ok(false));
        }
    }

    #[test]
    fn rho8_bounds_cover_all_codes() {
        for a in 0..=4 {
            for b in 0..=4 {
                let top = triple(b, a, a);
                let (bw, bi) = rho8_bounds(a, b);
                for w in 0..=bw + 3 {
                    for i in 0..=bi + 3 {
                        for j in 0..=bi + 3 {
                            if triple(w, i, j) <= top {
                                assert!(w <= bw && i <= bi && j <= bi, "({a},{b}): ({w},{i},{j})");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn edge_rec_rejects_path_in_phi() {
        let phi = AFormula::bit2("Z", Term::var("i"), Term::var("j"));
        assert_eq!(build_edge_rec(&phi, "i", "j", 1, 1, Rho4::Guarded), Err(ArithError::MentionsPath("Z".into())));
    }

    #[test]
    fn phi_free_names_are_avoided() {
        let phi = AFormula::and(edge_template("X"), AFormula::Lt(Term::var("l"), Term::var("i")));
        let f = build_edge_rec(&phi, "i", "j", 1, 0, Rho4::Guarded).unwrap();
        let (nums, _) = f.free_vars();
        assert_eq!(nums.into_iter().collect::<Vec<_>>(), [Name::from("l")]);
    }
}
