//! Quantified propositional formulas.
//!
//! A [`Formula`] is an immutable, reference-counted tree.  Every node caches a
//! structural hash, its tree size and a small bloom filter of the variable
//! names below it, so equality tests and free-variable queries on the large
//! formulas produced by the edge-rec translation stay cheap.  Subtrees are
//! shared freely; [`substitute`] returns the original node whenever nothing
//! below it changes.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::lexer::{tokenize, Cursor, SyntaxError, Tok};

/// Variable name.  Cheap to clone.
pub type Name = Arc<str>;

/// Finite map from variable name to truth value.
pub type Assignment = BTreeMap<Name, bool>;

/// Maximum number of quantified variables [`eval1`] will enumerate.
pub const EVAL1_CAP: usize = 24;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// Builds an assignment from `(name, value)` pairs.
pub fn assignment<'a>(pairs: impl IntoIterator<Item = (&'a str, bool)>) -> Assignment {
    pairs.into_iter().map(|(n, v)| (name(n), v)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormulaError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("binder `{name}` at {pos} shadows an enclosing binder of the same name")]
    Shadowed { name: Name, pos: usize },
    #[error("variable `{0}` is not assigned")]
    Unassigned(Name),
    #[error("formula class error: {0}")]
    Class(String),
    #[error("substituting for `{var}` would capture `{captured}` under its binder")]
    Capture { var: Name, captured: Name },
    #[error("{vars} quantified variables exceed the search cap of {cap}")]
    SearchCap { vars: usize, cap: usize },
}

#[derive(Clone, Debug)]
pub enum Kind {
    Top,
    Bot,
    Var(Name),
    Not(Formula),
    And(Formula, Formula),
    Or(Formula, Formula),
    Exists(Name, Formula),
    Forall(Name, Formula),
}

#[derive(Debug)]
struct Node {
    kind: Kind,
    hash: u64,
    size: u64,
    bloom: u128,
    quantified: bool,
}

/// Quantified propositional formula.
#[derive(Clone)]
pub struct Formula(Arc<Node>);

fn fnv(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.rotate_left(23).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn name_bit(n: &str) -> u128 {
    1u128 << (fnv(n) % 128)
}

impl Formula {
    fn build(kind: Kind) -> Formula {
        let (hash, size, bloom, quantified) = match &kind {
            Kind::Top => (mix(1, 0), 1, 0, false),
            Kind::Bot => (mix(2, 0), 1, 0, false),
            Kind::Var(n) => (mix(3, fnv(n)), 1, name_bit(n), false),
            Kind::Not(a) => (mix(4, a.0.hash), a.0.size + 1, a.0.bloom, a.0.quantified),
            Kind::And(a, b) => (
                mix(mix(5, a.0.hash), b.0.hash),
                a.0.size.saturating_add(b.0.size).saturating_add(1),
                a.0.bloom | b.0.bloom,
                a.0.quantified || b.0.quantified,
            ),
            Kind::Or(a, b) => (
                mix(mix(6, a.0.hash), b.0.hash),
                a.0.size.saturating_add(b.0.size).saturating_add(1),
                a.0.bloom | b.0.bloom,
                a.0.quantified || b.0.quantified,
            ),
            Kind::Exists(n, a) => {
                (mix(mix(7, fnv(n)), a.0.hash), a.0.size.saturating_add(1), a.0.bloom | name_bit(n), true)
            }
            Kind::Forall(n, a) => {
                (mix(mix(8, fnv(n)), a.0.hash), a.0.size.saturating_add(1), a.0.bloom | name_bit(n), true)
            }
        };
        Formula(Arc::new(Node { kind, hash, size, bloom, quantified }))
    }

    pub fn top() -> Formula {
        Formula::build(Kind::Top)
    }
    pub fn bot() -> Formula {
        Formula::build(Kind::Bot)
    }
    pub fn var(n: impl Into<Name>) -> Formula {
        Formula::build(Kind::Var(n.into()))
    }
    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::build(Kind::Not(a))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::build(Kind::And(a, b))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::build(Kind::Or(a, b))
    }
    pub fn exists(n: impl Into<Name>, body: Formula) -> Formula {
        Formula::build(Kind::Exists(n.into(), body))
    }
    pub fn forall(n: impl Into<Name>, body: Formula) -> Formula {
        Formula::build(Kind::Forall(n.into(), body))
    }

    /// Right-nested conjunction; `⊤` for an empty list.
    pub fn and_all(items: impl IntoIterator<Item = Formula>) -> Formula {
        let v: Vec<Formula> = items.into_iter().collect();
        v.into_iter().rev().reduce(|acc, f| Formula::and(f, acc)).unwrap_or_else(Formula::top)
    }

    /// Right-nested disjunction; `⊥` for an empty list.
    pub fn or_all(items: impl IntoIterator<Item = Formula>) -> Formula {
        let v: Vec<Formula> = items.into_iter().collect();
        v.into_iter().rev().reduce(|acc, f| Formula::or(f, acc)).unwrap_or_else(Formula::bot)
    }

    /// `∃v1 ∃v2 … body` with `v1` outermost.
    pub fn exists_block(vars: impl IntoIterator<Item = Name>, body: Formula) -> Formula {
        let v: Vec<Name> = vars.into_iter().collect();
        v.into_iter().rev().fold(body, |acc, n| Formula::exists(n, acc))
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    /// Number of nodes of the formula viewed as a tree.
    pub fn size(&self) -> u64 {
        self.0.size
    }

    pub fn structural_hash(&self) -> u64 {
        self.0.hash
    }

    pub fn ptr_eq(&self, other: &Formula) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub(crate) fn addr(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn is_quantifier_free(&self) -> bool {
        !self.0.quantified
    }

    pub fn is_var(&self) -> Option<&Name> {
        match self.kind() {
            Kind::Var(n) => Some(n),
            _ => None,
        }
    }

    /// Longest chain of nested quantifiers.
    pub fn quantifier_depth(&self) -> usize {
        if !self.0.quantified {
            return 0;
        }
        match self.kind() {
            Kind::Top | Kind::Bot | Kind::Var(_) => 0,
            Kind::Not(a) => a.quantifier_depth(),
            Kind::And(a, b) | Kind::Or(a, b) => a.quantifier_depth().max(b.quantifier_depth()),
            Kind::Exists(_, a) | Kind::Forall(_, a) => 1 + a.quantifier_depth(),
        }
    }

    /// Leading block of existential binders and the formula under them.
    pub fn exists_prefix(&self) -> (Vec<Name>, Formula) {
        let mut vars = Vec::new();
        let mut cur = self.clone();
        while let Kind::Exists(n, b) = cur.kind() {
            vars.push(n.clone());
            let next = b.clone();
            cur = next;
        }
        (vars, cur)
    }

    /// True when the formula is an existential block over a quantifier-free
    /// matrix (this includes quantifier-free formulas).
    pub fn is_prenex_sigma1(&self) -> bool {
        self.exists_prefix().1.is_quantifier_free()
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        let mut bound = Vec::new();
        let mut seen = HashSet::new();
        collect_free(self, &mut bound, &mut out, &mut seen);
        out
    }

    /// Whether `v` occurs free.
    pub fn occurs_free(&self, v: &str) -> bool {
        let bit = name_bit(v);
        let mut memo = HashSet::new();
        occurs_free_rec(self, v, bit, &mut memo)
    }

    /// Whether `v` occurs anywhere, free or bound.
    pub fn mentions(&self, v: &str) -> bool {
        if self.0.bloom & name_bit(v) == 0 {
            return false;
        }
        match self.kind() {
            Kind::Top | Kind::Bot => false,
            Kind::Var(n) => &**n == v,
            Kind::Not(a) => a.mentions(v),
            Kind::And(a, b) | Kind::Or(a, b) => a.mentions(v) || b.mentions(v),
            Kind::Exists(n, a) | Kind::Forall(n, a) => &**n == v || a.mentions(v),
        }
    }

    /// Names bound anywhere in the formula.
    pub fn bound_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        fn go(f: &Formula, out: &mut BTreeSet<Name>) {
            if !f.0.quantified {
                return;
            }
            match f.kind() {
                Kind::Top | Kind::Bot | Kind::Var(_) => {}
                Kind::Not(a) => go(a, out),
                Kind::And(a, b) | Kind::Or(a, b) => {
                    go(a, out);
                    go(b, out)
                }
                Kind::Exists(n, a) | Kind::Forall(n, a) => {
                    out.insert(n.clone());
                    go(a, out)
                }
            }
        }
        go(self, &mut out);
        out
    }

    /// Rejects a binder that re-binds a name already bound on its path.
    pub fn check_no_shadowing(&self) -> Result<(), FormulaError> {
        fn go(f: &Formula, stack: &mut Vec<Name>) -> Result<(), FormulaError> {
            if !f.0.quantified {
                return Ok(());
            }
            match f.kind() {
                Kind::Top | Kind::Bot | Kind::Var(_) => Ok(()),
                Kind::Not(a) => go(a, stack),
                Kind::And(a, b) | Kind::Or(a, b) => {
                    go(a, stack)?;
                    go(b, stack)
                }
                Kind::Exists(n, a) | Kind::Forall(n, a) => {
                    if stack.contains(n) {
                        return Err(FormulaError::Shadowed { name: n.clone(), pos: 0 });
                    }
                    stack.push(n.clone());
                    let r = go(a, stack);
                    stack.pop();
                    r
                }
            }
        }
        go(self, &mut Vec::new())
    }
}

fn collect_free(f: &Formula, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>, seen: &mut HashSet<usize>) {
    // Subtrees without binders above them are context independent; visit once.
    if bound.is_empty() && !seen.insert(f.addr()) {
        return;
    }
    match f.kind() {
        Kind::Top | Kind::Bot => {}
        Kind::Var(n) => {
            if !bound.contains(n) {
                out.insert(n.clone());
            }
        }
        Kind::Not(a) => collect_free(a, bound, out, seen),
        Kind::And(a, b) | Kind::Or(a, b) => {
            collect_free(a, bound, out, seen);
            collect_free(b, bound, out, seen);
        }
        Kind::Exists(n, a) | Kind::Forall(n, a) => {
            bound.push(n.clone());
            collect_free(a, bound, out, seen);
            bound.pop();
        }
    }
}

fn occurs_free_rec(f: &Formula, v: &str, bit: u128, memo: &mut HashSet<usize>) -> bool {
    if f.0.bloom & bit == 0 {
        return false;
    }
    if !memo.insert(f.addr()) {
        // Already explored this shared node and found nothing.
        return false;
    }
    match f.kind() {
        Kind::Top | Kind::Bot => false,
        Kind::Var(n) => &**n == v,
        Kind::Not(a) => occurs_free_rec(a, v, bit, memo),
        Kind::And(a, b) | Kind::Or(a, b) => occurs_free_rec(a, v, bit, memo) || occurs_free_rec(b, v, bit, memo),
        Kind::Exists(n, a) | Kind::Forall(n, a) => &**n != v && occurs_free_rec(a, v, bit, memo),
    }
}

impl PartialEq for Formula {
    fn eq(&self, other: &Formula) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        if self.0.hash != other.0.hash || self.0.size != other.0.size {
            return false;
        }
        match (self.kind(), other.kind()) {
            (Kind::Top, Kind::Top) | (Kind::Bot, Kind::Bot) => true,
            (Kind::Var(a), Kind::Var(b)) => a == b,
            (Kind::Not(a), Kind::Not(b)) => a == b,
            (Kind::And(a1, b1), Kind::And(a2, b2)) | (Kind::Or(a1, b1), Kind::Or(a2, b2)) => a1 == a2 && b1 == b2,
            (Kind::Exists(n1, a1), Kind::Exists(n2, a2)) | (Kind::Forall(n1, a1), Kind::Forall(n2, a2)) => {
                n1 == n2 && a1 == a2
            }
            _ => false,
        }
    }
}

impl Eq for Formula {}

impl Hash for Formula {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            Kind::Top => f.write_str("true"),
            Kind::Bot => f.write_str("false"),
            Kind::Var(n) => f.write_str(n),
            Kind::Not(a) => write!(f, "(not {a})"),
            Kind::And(a, b) => write!(f, "(and {a} {b})"),
            Kind::Or(a, b) => write!(f, "(or {a} {b})"),
            Kind::Exists(n, a) => write!(f, "(exists {n} {a})"),
            Kind::Forall(n, a) => write!(f, "(forall {n} {a})"),
        }
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

// ---------------------------------------------------------------------------
// Classification

/// Least level of the quantifier hierarchy containing a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuantClass {
    SigmaQ(u32),
    PiQ(u32),
}

impl QuantClass {
    pub fn level(self) -> u32 {
        match self {
            QuantClass::SigmaQ(i) | QuantClass::PiQ(i) => i,
        }
    }

    /// Least `i` with the formula in Σ_i^q.
    pub fn sigma_level(self) -> u32 {
        match self {
            QuantClass::SigmaQ(i) => i,
            QuantClass::PiQ(0) => 0,
            QuantClass::PiQ(i) => i + 1,
        }
    }

    /// Least `i` with the formula in Π_i^q.
    pub fn pi_level(self) -> u32 {
        match self {
            QuantClass::PiQ(i) => i,
            QuantClass::SigmaQ(0) => 0,
            QuantClass::SigmaQ(i) => i + 1,
        }
    }

    /// Membership in Σ_i^q.
    pub fn within_sigma(self, i: u32) -> bool {
        self.sigma_level() <= i
    }
}

/// Least class containing `f`.  When Σ_i^q and Π_i^q are both least (for
/// example `∃x x ∧ ∀y y`), the Σ side is reported.
pub fn classify(f: &Formula) -> QuantClass {
    if f.is_quantifier_free() {
        return QuantClass::SigmaQ(0);
    }
    match f.kind() {
        Kind::Top | Kind::Bot | Kind::Var(_) => QuantClass::SigmaQ(0),
        Kind::Not(a) => match classify(a) {
            QuantClass::SigmaQ(i) if i > 0 => QuantClass::PiQ(i),
            QuantClass::PiQ(i) => QuantClass::SigmaQ(i),
            c => c,
        },
        Kind::And(a, b) | Kind::Or(a, b) => {
            let (ca, cb) = (classify(a), classify(b));
            let s = ca.sigma_level().max(cb.sigma_level());
            let p = ca.pi_level().max(cb.pi_level());
            if p < s {
                QuantClass::PiQ(p)
            } else {
                QuantClass::SigmaQ(s)
            }
        }
        Kind::Exists(_, a) => QuantClass::SigmaQ(classify(a).sigma_level().max(1)),
        Kind::Forall(_, a) => QuantClass::PiQ(classify(a).pi_level().max(1)),
    }
}

// ---------------------------------------------------------------------------
// Evaluation

/// Boolean value of a quantifier-free formula.
pub fn eval0(a: &Assignment, f: &Formula) -> Result<bool, FormulaError> {
    if !f.is_quantifier_free() {
        return Err(FormulaError::Class("eval0 needs a quantifier-free formula".into()));
    }
    eval0_unchecked(a, f)
}

fn eval0_unchecked(a: &Assignment, f: &Formula) -> Result<bool, FormulaError> {
    Ok(match f.kind() {
        Kind::Top => true,
        Kind::Bot => false,
        Kind::Var(n) => *a.get(n).ok_or_else(|| FormulaError::Unassigned(n.clone()))?,
        Kind::Not(x) => !eval0_unchecked(a, x)?,
        Kind::And(x, y) => eval0_unchecked(a, x)? && eval0_unchecked(a, y)?,
        Kind::Or(x, y) => eval0_unchecked(a, x)? || eval0_unchecked(a, y)?,
        Kind::Exists(..) | Kind::Forall(..) => unreachable!("checked quantifier-free"),
    })
}

/// Postfix program over variable slots, used by the exhaustive searches.
#[derive(Debug, Clone)]
pub(crate) struct Program {
    ops: Vec<Op>,
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(bool),
    Slot(usize),
    Not,
    And,
    Or,
}

impl Program {
    /// Compiles a quantifier-free formula; `slot` maps a variable to its index.
    pub(crate) fn compile(f: &Formula, slot: &dyn Fn(&Name) -> Option<usize>) -> Result<Program, FormulaError> {
        let mut ops = Vec::new();
        fn go(f: &Formula, slot: &dyn Fn(&Name) -> Option<usize>, ops: &mut Vec<Op>) -> Result<(), FormulaError> {
            match f.kind() {
                Kind::Top => ops.push(Op::Const(true)),
                Kind::Bot => ops.push(Op::Const(false)),
                Kind::Var(n) => ops.push(Op::Slot(slot(n).ok_or_else(|| FormulaError::Unassigned(n.clone()))?)),
                Kind::Not(a) => {
                    go(a, slot, ops)?;
                    ops.push(Op::Not)
                }
                Kind::And(a, b) => {
                    go(a, slot, ops)?;
                    go(b, slot, ops)?;
                    ops.push(Op::And)
                }
                Kind::Or(a, b) => {
                    go(a, slot, ops)?;
                    go(b, slot, ops)?;
                    ops.push(Op::Or)
                }
                Kind::Exists(..) | Kind::Forall(..) => {
                    return Err(FormulaError::Class("quantifier inside a matrix".into()))
                }
            }
            Ok(())
        }
        go(f, slot, &mut ops)?;
        Ok(Program { ops })
    }

    pub(crate) fn run(&self, vals: &[bool], stack: &mut Vec<bool>) -> bool {
        stack.clear();
        for op in &self.ops {
            match *op {
                Op::Const(b) => stack.push(b),
                Op::Slot(i) => stack.push(vals[i]),
                Op::Not => {
                    let x = stack.pop().unwrap();
                    stack.push(!x)
                }
                Op::And => {
                    let y = stack.pop().unwrap();
                    let x = stack.pop().unwrap();
                    stack.push(x && y)
                }
                Op::Or => {
                    let y = stack.pop().unwrap();
                    let x = stack.pop().unwrap();
                    stack.push(x || y)
                }
            }
        }
        stack.pop().unwrap()
    }
}

/// Truth of a prenex Σ_1^q (or quantifier-free) formula by exhaustive search
/// over the quantified variables, first variable most significant and false
/// before true.  Returns the first satisfying assignment to the quantified
/// variables when the formula is true.
pub fn eval1(a: &Assignment, f: &Formula) -> Result<(bool, Option<Assignment>), FormulaError> {
    let (vars, matrix) = f.exists_prefix();
    if !matrix.is_quantifier_free() {
        return Err(FormulaError::Class("eval1 needs a prenex Σ1 formula".into()));
    }
    if vars.len() > EVAL1_CAP {
        return Err(FormulaError::SearchCap { vars: vars.len(), cap: EVAL1_CAP });
    }
    let n = vars.len();
    let free: Vec<Name> = matrix.free_vars().into_iter().filter(|v| !vars.contains(v)).collect();
    let mut vals = vec![false; n + free.len()];
    for (k, v) in free.iter().enumerate() {
        vals[n + k] = *a.get(v).ok_or_else(|| FormulaError::Unassigned(v.clone()))?;
    }
    let index: HashMap<&Name, usize> =
        vars.iter().enumerate().chain(free.iter().enumerate().map(|(k, v)| (n + k, v))).map(|(i, v)| (v, i)).collect();
    let prog = Program::compile(&matrix, &|v| index.get(v).copied())?;
    let mut stack = Vec::new();
    for bits in 0u64..(1u64 << n) {
        for (k, slot) in vals.iter_mut().take(n).enumerate() {
            *slot = bits >> (n - 1 - k) & 1 == 1;
        }
        if prog.run(&vals, &mut stack) {
            let w = vars.iter().zip(vals.iter()).map(|(v, b)| (v.clone(), *b)).collect();
            return Ok((true, Some(w)));
        }
    }
    Ok((false, None))
}

// ---------------------------------------------------------------------------
// Substitution

/// Replaces the free occurrences of `v` in `f` by the quantifier-free `b`.
pub fn substitute(f: &Formula, v: &str, b: &Formula) -> Result<Formula, FormulaError> {
    if !b.is_quantifier_free() {
        return Err(FormulaError::Class("substituted formula must be quantifier-free".into()));
    }
    let fv_b = b.free_vars();
    let mut s = Subst { v, bit: name_bit(v), b, fv_b: &fv_b, memo: HashMap::new() };
    s.go(f, None)
}

struct Subst<'a> {
    v: &'a str,
    bit: u128,
    b: &'a Formula,
    fv_b: &'a BTreeSet<Name>,
    memo: HashMap<(usize, bool), Formula>,
}

impl Subst<'_> {
    // `capturing` holds the innermost binder that would capture a free
    // variable of `b`, if any.
    fn go(&mut self, f: &Formula, capturing: Option<&Name>) -> Result<Formula, FormulaError> {
        if f.0.bloom & self.bit == 0 {
            return Ok(f.clone());
        }
        let key = (f.addr(), capturing.is_some());
        if let Some(r) = self.memo.get(&key) {
            return Ok(r.clone());
        }
        let out = match f.kind() {
            Kind::Top | Kind::Bot => f.clone(),
            Kind::Var(n) => {
                if &**n == self.v {
                    if let Some(c) = capturing {
                        return Err(FormulaError::Capture { var: n.clone(), captured: c.clone() });
                    }
                    self.b.clone()
                } else {
                    f.clone()
                }
            }
            Kind::Not(a) => {
                let na = self.go(a, capturing)?;
                if na.ptr_eq(a) {
                    f.clone()
                } else {
                    Formula::not(na)
                }
            }
            Kind::And(a, b) | Kind::Or(a, b) => {
                let na = self.go(a, capturing)?;
                let nb = self.go(b, capturing)?;
                if na.ptr_eq(a) && nb.ptr_eq(b) {
                    f.clone()
                } else if matches!(f.kind(), Kind::And(..)) {
                    Formula::and(na, nb)
                } else {
                    Formula::or(na, nb)
                }
            }
            Kind::Exists(n, a) | Kind::Forall(n, a) => {
                if &**n == self.v {
                    f.clone()
                } else {
                    let cap = if self.fv_b.contains(n) { Some(n) } else { capturing };
                    let na = self.go(a, cap)?;
                    if na.ptr_eq(a) {
                        f.clone()
                    } else if matches!(f.kind(), Kind::Exists(..)) {
                        Formula::exists(n.clone(), na)
                    } else {
                        Formula::forall(n.clone(), na)
                    }
                }
            }
        };
        self.memo.insert(key, out.clone());
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Reading

/// Hash-consing table: structurally equal formulas read through the same
/// interner share one node, which keeps equality tests on large proofs cheap.
#[derive(Default)]
pub struct Interner {
    table: HashSet<Formula>,
}

impl Interner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, f: Formula) -> Formula {
        if let Some(g) = self.table.get(&f) {
            return g.clone();
        }
        self.table.insert(f.clone());
        f
    }
}

const RESERVED: &[&str] = &["true", "false", "not", "and", "or", "exists", "forall"];

pub fn parse_formula(text: &str) -> Result<Formula, FormulaError> {
    let toks = tokenize(text)?;
    let mut cur = Cursor::new(&toks, text.len());
    let mut interner = Interner::new();
    let f = read_formula(&mut cur, &mut interner, &mut Vec::new())?;
    cur.finish()?;
    Ok(f)
}

pub(crate) fn read_formula(
    cur: &mut Cursor<'_>,
    interner: &mut Interner,
    bound: &mut Vec<Name>,
) -> Result<Formula, FormulaError> {
    let pos = cur.pos();
    let f = match cur.next() {
        None => return Err(SyntaxError::new(pos, "expected formula, found end of input").into()),
        Some(Tok::Ident(s)) => match s.as_str() {
            "true" => Formula::top(),
            "false" => Formula::bot(),
            r if RESERVED.contains(&r) => {
                return Err(SyntaxError::new(pos, format!("`{r}` must follow an opening parenthesis")).into())
            }
            _ => Formula::var(s.as_str()),
        },
        Some(Tok::LParen) => {
            let opos = cur.pos();
            let op = cur.ident()?;
            let f = match op {
                "not" => Formula::not(read_formula(cur, interner, bound)?),
                "and" => {
                    let a = read_formula(cur, interner, bound)?;
                    Formula::and(a, read_formula(cur, interner, bound)?)
                }
                "or" => {
                    let a = read_formula(cur, interner, bound)?;
                    Formula::or(a, read_formula(cur, interner, bound)?)
                }
                "exists" | "forall" => {
                    let vpos = cur.pos();
                    let v = cur.ident()?;
                    if RESERVED.contains(&v) {
                        return Err(SyntaxError::new(vpos, format!("`{v}` cannot be bound")).into());
                    }
                    let v: Name = name(v);
                    if bound.contains(&v) {
                        return Err(FormulaError::Shadowed { name: v, pos: vpos });
                    }
                    bound.push(v.clone());
                    let body = read_formula(cur, interner, bound);
                    bound.pop();
                    let body = body?;
                    if op == "exists" {
                        Formula::exists(v, body)
                    } else {
                        Formula::forall(v, body)
                    }
                }
                other => return Err(SyntaxError::new(opos, format!("unknown connective `{other}`")).into()),
            };
            cur.expect(&Tok::RParen)?;
            f
        }
        Some(t) => return Err(SyntaxError::new(pos, format!("expected formula, found `{t}`")).into()),
    };
    Ok(interner.intern(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn parses_grammar_cases() {
        assert_eq!(p("(and true false)"), Formula::and(Formula::top(), Formula::bot()));
        assert_eq!(p("(exists z (or z x))"), Formula::exists("z", Formula::or(Formula::var("z"), Formula::var("x"))));
        let e = parse_formula("(and true").unwrap_err();
        assert_eq!(e, FormulaError::Syntax(SyntaxError::new(9, "expected formula, found end of input")));
    }

    #[test]
    fn rejects_shadowing_and_garbage() {
        assert!(matches!(parse_formula("(exists z (exists z z))"), Err(FormulaError::Shadowed { .. })));
        assert!(parse_formula("(exists z z) (exists z z)").is_err());
        assert!(parse_formula("(and x)").is_err());
        assert!(parse_formula("(xor x y)").is_err());
        assert!(parse_formula("and").is_err());
        // Same name in sibling scopes is fine.
        assert!(parse_formula("(and (exists z z) (exists z (not z)))").is_ok());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&p("(or x (not y))")), QuantClass::SigmaQ(0));
        assert_eq!(classify(&p("(exists z (and z x))")), QuantClass::SigmaQ(1));
        assert_eq!(classify(&p("(forall y (exists z (or y z)))")), QuantClass::PiQ(2));
        assert_eq!(classify(&p("(not (exists z z))")), QuantClass::PiQ(1));
        assert_eq!(classify(&p("(and (exists z z) x)")), QuantClass::SigmaQ(1));
        assert_eq!(classify(&p("(or (exists z z) (forall y y))")), QuantClass::SigmaQ(2));
    }

    #[test]
    fn eval0_examples() {
        assert!(eval0(&assignment([("x", true)]), &p("(or x false)")).unwrap());
        assert!(!eval0(&Assignment::new(), &p("(not true)")).unwrap());
        assert!(!eval0(&assignment([("x", false), ("y", true)]), &p("(and x y)")).unwrap());
        assert_eq!(eval0(&Assignment::new(), &p("x")), Err(FormulaError::Unassigned(name("x"))));
        assert!(matches!(eval0(&Assignment::new(), &p("(exists z z)")), Err(FormulaError::Class(_))));
    }

    #[test]
    fn eval1_examples() {
        let f = p("(exists z (and (or z (not x)) (or (not z) x)))");
        let (v, w) = eval1(&assignment([("x", false)]), &f).unwrap();
        assert!(v);
        assert_eq!(w.unwrap(), assignment([("z", false)]));
        assert_eq!(eval1(&Assignment::new(), &p("(exists z (and z (not z)))")).unwrap(), (false, None));
        let (v, w) = eval1(&Assignment::new(), &p("(exists z1 (exists z2 (and z1 (not z2))))")).unwrap();
        assert!(v);
        assert_eq!(w.unwrap(), assignment([("z1", true), ("z2", false)]));
        assert!(matches!(eval1(&Assignment::new(), &p("(forall z z)")), Err(FormulaError::Class(_))));
    }

    #[test]
    fn eval1_cap() {
        let vars: Vec<Name> = (0..25).map(|i| name(&format!("z{i}"))).collect();
        let f = Formula::exists_block(vars, Formula::top());
        assert_eq!(eval1(&Assignment::new(), &f), Err(FormulaError::SearchCap { vars: 25, cap: 24 }));
    }

    #[test]
    fn substitute_examples() {
        let f = p("(exists z (or z x))");
        assert_eq!(substitute(&f, "x", &p("(and y y)")).unwrap(), p("(exists z (or z (and y y)))"));
        assert!(matches!(substitute(&f, "x", &p("(or z w)")), Err(FormulaError::Capture { .. })));
        assert_eq!(substitute(&p("x"), "x", &p("true")).unwrap(), Formula::top());
        assert!(matches!(substitute(&p("x"), "x", &p("(exists w w)")), Err(FormulaError::Class(_))));
        // Bound occurrences are untouched.
        assert_eq!(substitute(&f, "z", &p("y")).unwrap(), f);
    }

    #[test]
    fn substitute_shares_untouched_subtrees() {
        let f = p("(and (or a b) (or c x))");
        let g = substitute(&f, "x", &Formula::top()).unwrap();
        match (f.kind(), g.kind()) {
            (Kind::And(l1, _), Kind::And(l2, _)) => assert!(l1.ptr_eq(l2)),
            _ => panic!(),
        }
    }

    #[test]
    fn free_and_bound() {
        let f = p("(and (exists z (or z x)) (or z y))");
        let fv: Vec<String> = f.free_vars().iter().map(|n| n.to_string()).collect();
        assert_eq!(fv, ["x", "y", "z"]);
        assert!(f.occurs_free("z"));
        assert!(!p("(exists z (or z x))").occurs_free("z"));
        assert_eq!(f.quantifier_depth(), 1);
        assert_eq!(f.size(), 8);
    }

    #[test]
    fn interner_shares_nodes() {
        let f = p("(and (or x y) (or x y))");
        match f.kind() {
            Kind::And(a, b) => assert!(a.ptr_eq(b)),
            _ => panic!(),
        }
    }
}
