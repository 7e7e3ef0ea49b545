//! Propositional translation of bounded arithmetic formulas and the
//! edge-rec instance.
//!
//! Bit `j` of string `X` is the variable `X_j`.  Under a size `n`, `X(t)`
//! becomes `X_j` for `j = val(t) < n-1`, `⊤` for `j = n-1` and `⊥` above.
//! Bounded number quantifiers expand to right-nested `⋁`/`⋀` over
//! `0..=val(t)`.  `∃Y ≤ t α` becomes one block `∃Y_0 … ∃Y_{t-2}` over
//! `⋁_{n=0}^{t} ||α||[|Y| = n]`.

mod gen;

use std::collections::{BTreeMap, BTreeSet};

use crate::arith::{
    bit_name, build_edge_rec, edge_template, pair, triple, val, AFormula, ArithError, Rho4, SizeContext, PATH,
};
use crate::cnf2::is_sigma_cnf2;
use crate::formula::{Formula, Kind, Name};

pub use gen::gen_edge_rec_proof;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TranslateError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("quantifier bound {0} is too large to expand")]
    TooLarge(u64),
    #[error("string variable `{0}` is bound twice")]
    Rebound(Name),
    #[error("internal error: the edge-rec translation is not ΣCNF(2)")]
    NotSigmaCnf2,
}

/// Largest quantifier bound the translator expands.
pub const EXPANSION_CAP: u64 = 1 << 16;

/// How the bits of a string variable translate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrLayout {
    /// Size `n`: bits below `n-1` are variables, bit `n-1` is `⊤`.
    Sized(u64),
    /// Only the listed positions are variables; every other bit is `⊥`.
    Coded(BTreeSet<u64>),
}

#[derive(Debug, Clone, Default)]
pub struct Translator {
    pub nums: BTreeMap<Name, u64>,
    pub layouts: BTreeMap<Name, StrLayout>,
    /// Fold `⊤`/`⊥` through connectives.
    pub fold: bool,
}

fn mk_not(fold: bool, a: Formula) -> Formula {
    if fold {
        match a.kind() {
            Kind::Top => return Formula::bot(),
            Kind::Bot => return Formula::top(),
            _ => {}
        }
    }
    Formula::not(a)
}

fn mk_and(fold: bool, a: Formula, b: Formula) -> Formula {
    if fold {
        match (a.kind(), b.kind()) {
            (Kind::Bot, _) | (_, Kind::Bot) => return Formula::bot(),
            (Kind::Top, _) => return b,
            (_, Kind::Top) => return a,
            _ => {}
        }
    }
    Formula::and(a, b)
}

fn mk_or(fold: bool, a: Formula, b: Formula) -> Formula {
    if fold {
        match (a.kind(), b.kind()) {
            (Kind::Top, _) | (_, Kind::Top) => return Formula::top(),
            (Kind::Bot, _) => return b,
            (_, Kind::Bot) => return a,
            _ => {}
        }
    }
    Formula::or(a, b)
}

fn fold_right(fold: bool, items: Vec<Formula>, conj: bool) -> Formula {
    let mut it = items.into_iter().rev();
    let Some(mut acc) = it.next() else {
        return if conj { Formula::top() } else { Formula::bot() };
    };
    for x in it {
        acc = if conj { mk_and(fold, x, acc) } else { mk_or(fold, x, acc) };
    }
    acc
}

impl Translator {
    pub fn from_ctx(ctx: &SizeContext, fold: bool) -> Self {
        Translator {
            nums: ctx.nums.clone(),
            layouts: ctx.sizes.iter().map(|(x, &n)| (x.clone(), StrLayout::Sized(n))).collect(),
            fold,
        }
    }

    fn ctx(&self) -> SizeContext {
        let sizes = self
            .layouts
            .iter()
            .map(|(x, l)| {
                let n = match l {
                    StrLayout::Sized(n) => *n,
                    StrLayout::Coded(s) => s.iter().next_back().map_or(0, |m| m + 1),
                };
                (x.clone(), n)
            })
            .collect();
        SizeContext { nums: self.nums.clone(), sizes }
    }

    fn bound(&self, t: &crate::arith::Term) -> Result<u64, TranslateError> {
        let v = val(t, &self.ctx())?;
        if v > EXPANSION_CAP {
            return Err(TranslateError::TooLarge(v));
        }
        Ok(v)
    }

    pub fn translate(&mut self, f: &AFormula) -> Result<Formula, TranslateError> {
        let fold = self.fold;
        Ok(match f {
            AFormula::Top => Formula::top(),
            AFormula::Bot => Formula::bot(),
            AFormula::Eq(s, t) | AFormula::Lt(s, t) => {
                let ctx = self.ctx();
                let (x, y) = (val(s, &ctx)?, val(t, &ctx)?);
                let holds = if matches!(f, AFormula::Eq(..)) { x == y } else { x < y };
                if holds {
                    Formula::top()
                } else {
                    Formula::bot()
                }
            }
            AFormula::Bit(x, t) => {
                let j = val(t, &self.ctx())?;
                match self.layouts.get(x).ok_or_else(|| ArithError::NoSize(x.clone()))? {
                    StrLayout::Sized(n) => {
                        if j + 1 < *n {
                            Formula::var(bit_name(x, j))
                        } else if j + 1 == *n {
                            Formula::top()
                        } else {
                            Formula::bot()
                        }
                    }
                    StrLayout::Coded(set) => {
                        if set.contains(&j) {
                            Formula::var(bit_name(x, j))
                        } else {
                            Formula::bot()
                        }
                    }
                }
            }
            AFormula::Not(a) => mk_not(fold, self.translate(a)?),
            AFormula::And(a, b) => {
                let x = self.translate(a)?;
                mk_and(fold, x, self.translate(b)?)
            }
            AFormula::Or(a, b) => {
                let x = self.translate(a)?;
                mk_or(fold, x, self.translate(b)?)
            }
            AFormula::ExistsLe(y, t, a) | AFormula::ForallLe(y, t, a) => {
                let bound = self.bound(t)?;
                let saved = self.nums.get(y).copied();
                let mut items = Vec::with_capacity(bound as usize + 1);
                for v in 0..=bound {
                    self.nums.insert(y.clone(), v);
                    items.push(self.translate(a)?);
                }
                match saved {
                    Some(s) => self.nums.insert(y.clone(), s),
                    None => self.nums.remove(y),
                };
                fold_right(fold, items, matches!(f, AFormula::ForallLe(..)))
            }
            AFormula::ExistsStr(y, t, a) | AFormula::ForallStr(y, t, a) => {
                let bound = self.bound(t)?;
                if self.layouts.contains_key(y) {
                    return Err(TranslateError::Rebound(y.clone()));
                }
                let mut items = Vec::with_capacity(bound as usize + 1);
                for n in 0..=bound {
                    self.layouts.insert(y.clone(), StrLayout::Sized(n));
                    items.push(self.translate(a)?);
                }
                self.layouts.remove(y);
                let exists = matches!(f, AFormula::ExistsStr(..));
                let body = fold_right(fold, items, !exists);
                let block: Vec<Name> = (0..bound.saturating_sub(1)).map(|k| bit_name(y, k)).collect();
                let mut out = body;
                for v in block.into_iter().rev() {
                    out = if exists { Formula::exists(v, out) } else { Formula::forall(v, out) };
                }
                out
            }
        })
    }
}

/// The translation `||phi||[m; n]` with sizes and values from `ctx`.
pub fn translate(phi: &AFormula, ctx: &SizeContext) -> Result<Formula, TranslateError> {
    Translator::from_ctx(ctx, false).translate(phi)
}

/// Propositional variable for the edge `(i, j)` of the default instance.
pub fn edge_var(i: u64, j: u64) -> Name {
    bit_name("X", pair(i, j))
}

/// Propositional variable for path bit `(w, i, j)`.
pub fn path_var(w: u64, i: u64, j: u64) -> Name {
    bit_name(PATH, triple(w, i, j))
}

/// A translated edge-rec instance.
#[derive(Debug, Clone)]
pub struct EdgeRec {
    pub a: u64,
    pub b: u64,
    /// `∃Z_… [matrix]`.
    pub formula: Formula,
    pub matrix: Formula,
    /// Path bits in lexicographic `(w, i, j)` order, as quantified.
    pub z_vars: Vec<((u64, u64, u64), Name)>,
    pub x_vars: BTreeSet<Name>,
}

/// Translation of the edge-rec axiom for `phi` (parameters `pi`, `pj`).
/// The path string is laid out on the box `w ≤ b`, `i, j ≤ a`: its
/// other bits are `⊥`, so ρ8 translates to `⊤`.  Constants are folded.
pub fn translate_edge_rec(
    phi: &AFormula,
    pi: &str,
    pj: &str,
    a: u64,
    b: u64,
    ctx: &SizeContext,
) -> Result<EdgeRec, TranslateError> {
    let axiom = build_edge_rec(phi, pi, pj, a, b, Rho4::Guarded)?;
    let AFormula::ExistsStr(_, _, body) = &axiom else { unreachable!("edge-rec has a root string quantifier") };
    let mut z_vars = Vec::new();
    for w in 0..=b {
        for i in 0..=a {
            for j in 0..=a {
                z_vars.push(((w, i, j), path_var(w, i, j)));
            }
        }
    }
    let mut tr = Translator::from_ctx(ctx, true);
    let codes = z_vars.iter().map(|((w, i, j), _)| triple(*w, *i, *j)).collect();
    tr.layouts.insert(PATH.into(), StrLayout::Coded(codes));
    let matrix = tr.translate(body)?;
    let formula = Formula::exists_block(z_vars.iter().map(|(_, n)| n.clone()), matrix.clone());
    if !is_sigma_cnf2(&formula) {
        return Err(TranslateError::NotSigmaCnf2);
    }
    let x_vars = formula.free_vars();
    Ok(EdgeRec { a, b, formula, matrix, z_vars, x_vars })
}

/// The edge-rec instance for `φ(i, j) = X(i, j)` with `|X| = pair(a,a)+2`,
/// so every edge bit is a variable.
pub fn edge_rec(a: u64, b: u64) -> EdgeRec {
    let ctx = SizeContext::new().with_size("X", pair(a, a) + 2);
    translate_edge_rec(&edge_template("X"), "i", "j", a, b, &ctx).expect("default edge-rec instance translates")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{parse_aformula, FiniteModel};
    use crate::cnf2::cnf_view;
    use crate::formula::{eval0, eval1};

    fn f(s: &str) -> AFormula {
        parse_aformula(s).unwrap()
    }

    #[test]
    fn bit_cases() {
        let ctx = |v| SizeContext::new().with_size("X", 3).with_num("t", v);
        assert_eq!(translate(&f("(bit X t)"), &ctx(1)).unwrap(), Formula::var("X_1"));
        assert_eq!(translate(&f("(bit X t)"), &ctx(2)).unwrap(), Formula::top());
        assert_eq!(translate(&f("(bit X t)"), &ctx(5)).unwrap(), Formula::bot());
    }

    #[test]
    fn quantifier_expansion() {
        let ctx = SizeContext::new().with_size("X", 5).with_num("t", 2);
        let g = translate(&f("(existsle y t (bit X y))"), &ctx).unwrap();
        let want = Formula::or(Formula::var("X_0"), Formula::or(Formula::var("X_1"), Formula::var("X_2")));
        assert_eq!(g, want);
        let g = translate(&f("(= (+ 1 1) t)"), &ctx).unwrap();
        assert_eq!(g, Formula::top());
        let g = translate(&f("(< t 1)"), &ctx).unwrap();
        assert_eq!(g, Formula::bot());
    }

    #[test]
    fn string_quantifier_block() {
        let g = translate(&f("(existsstr Y 3 (bit Y 1))"), &SizeContext::new()).unwrap();
        assert_eq!(g.exists_prefix().0, [Name::from("Y_0"), Name::from("Y_1")]);
        assert!(eval1(&Default::default(), &g).unwrap().0);
        let m = FiniteModel::new(SizeContext::new());
        assert!(crate::arith::eval_arith(&f("(existsstr Y 3 (bit Y 1))"), &m).unwrap());
    }

    #[test]
    fn edge_rec_is_sigma_cnf2() {
        for a in 1..=2 {
            for b in 0..=2 {
                let e = edge_rec(a, b);
                assert!(is_sigma_cnf2(&e.formula));
                assert!(cnf_view(&e.formula).is_ok());
                let want: BTreeSet<Name> = if b == 0 {
                    (0..a).map(|j| edge_var(0, j)).collect()
                } else {
                    (0..=a).flat_map(|i| (0..a).map(move |j| edge_var(i, j))).collect()
                };
                assert_eq!(e.x_vars, want, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn edge_rec_matrix_accepts_pseudo_path() {
        let (a, b) = (2, 2);
        let e = edge_rec(a, b);
        for bits in 0u32..(1 << 6) {
            let edge = |i: u64, j: u64| bits >> (i * 2 + j) & 1 == 1;
            let mut asg: crate::formula::Assignment = Default::default();
            for i in 0..=a {
                for j in 0..a {
                    asg.insert(edge_var(i, j), edge(i, j));
                }
            }
            let path: BTreeSet<(u64, u64, u64)> = crate::arith::pseudo_path(a, b, edge)
                .into_iter()
                .enumerate()
                .map(|(w, (i, j))| (w as u64, i, j))
                .collect();
            for (k, n) in &e.z_vars {
                asg.insert(n.clone(), path.contains(k));
            }
            assert!(eval0(&asg, &e.matrix).unwrap(), "graph {bits}");
        }
    }
}
