//! Rule checking, proof checking and the ancestor relation.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::RangeInclusive;

use super::{parameter_vars, Inference, Proof, Rule, RuleData, Sequent, System};
use crate::cnf2::is_sigma_cnf2;
use crate::formula::{classify, substitute, Formula, Kind, Name, QuantClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Ante,
    Succ,
}

/// Position of a formula occurrence in a sequent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Occ {
    pub side: Side,
    pub idx: usize,
}

impl Occ {
    pub fn ante(idx: usize) -> Occ {
        Occ { side: Side::Ante, idx }
    }
    pub fn succ(idx: usize) -> Occ {
        Occ { side: Side::Succ, idx }
    }
}

/// Where a premise occurrence goes in the conclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    To(Occ),
    /// The occurrence is a cut formula and has no descendant.
    Cut,
}

/// How an inference was matched.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RuleMatch {
    /// Per premise, one link per occurrence (antecedent first, then
    /// succedent, as in [`Sequent::occurrences`]).
    pub links: Vec<Vec<Link>>,
    /// Principal occurrence in the conclusion, for logical rules.
    pub principal: Option<Occ>,
}

impl RuleMatch {
    /// Descendant of occurrence `o` of premise `k`.
    pub fn descendant(&self, premise: &Sequent, k: usize, o: Occ) -> Link {
        let flat = match o.side {
            Side::Ante => o.idx,
            Side::Succ => premise.ante.len() + o.idx,
        };
        self.links[k][flat]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    Empty,
    Arity,
    Data,
    Initial,
    Mismatch,
    Eigenvariable(Name),
    Substituent,
    NotTreelike,
    CutOutsideClass(u32),
    CutNotSigmaCnf2,
    CutNonParameter(Name),
    Params,
    Orphan,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::Empty => f.write_str("proof has no inferences"),
            ViolationKind::Arity => f.write_str("wrong number of premises"),
            ViolationKind::Data => f.write_str("missing or unexpected rule data"),
            ViolationKind::Initial => f.write_str("not an initial sequent"),
            ViolationKind::Mismatch => f.write_str("conclusion does not follow from the premises"),
            ViolationKind::Eigenvariable(y) => write!(f, "eigenvariable `{y}` occurs free in the conclusion"),
            ViolationKind::Substituent => f.write_str("substituted formula is not Σ0 or would be captured"),
            ViolationKind::NotTreelike => f.write_str("premise already used by another inference (not treelike)"),
            ViolationKind::CutOutsideClass(i) => write!(f, "cut formula is not in Σ{i}^q"),
            ViolationKind::CutNotSigmaCnf2 => f.write_str("cut formula is not ΣCNF(2)"),
            ViolationKind::CutNonParameter(x) => {
                write!(f, "quantified cut formula has free variable `{x}` which is not a parameter")
            }
            ViolationKind::Params => {
                f.write_str("declared parameters differ from the free variables of the end sequent")
            }
            ViolationKind::Orphan => f.write_str("formula occurrence reaches neither a cut nor the end sequent"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("inference {id} ({rule}): {kind}")]
pub struct Violation {
    /// Index of the offending line.
    pub line: usize,
    pub id: u32,
    pub rule: Rule,
    pub kind: ViolationKind,
}

fn lcp(p: &[Formula], c: &[Formula]) -> usize {
    p.iter().zip(c).take_while(|(a, b)| a == b).count()
}

fn lcs(p: &[Formula], c: &[Formula]) -> usize {
    p.iter().rev().zip(c.iter().rev()).take_while(|(a, b)| a == b).count()
}

/// Positions `r` at which `p` turns into `c` by replacing the `kp`
/// formulas at `r` with `kc` formulas, the rest being equal.
fn candidates(p: &[Formula], c: &[Formula], kp: usize, kc: usize) -> RangeInclusive<usize> {
    let (m, n) = (p.len(), c.len());
    #[allow(clippy::reversed_empty_ranges)]
    if m < kp || n < kc || m - kp != n - kc {
        return 1..=0;
    }
    let (pre, suf) = (lcp(p, c), lcs(p, c));
    let lo = (m - kp).saturating_sub(suf);
    let hi = pre.min(m - kp);
    lo..=hi
}

fn side_links(side: Side, m: usize, r: usize, kp: usize, kc: usize, block: &[Link]) -> Vec<Link> {
    (0..m)
        .map(|i| {
            if i < r {
                Link::To(Occ { side, idx: i })
            } else if i < r + kp {
                block[i - r]
            } else {
                Link::To(Occ { side, idx: i - kp + kc })
            }
        })
        .collect()
}

fn identity(side: Side, m: usize) -> Vec<Link> {
    side_links(side, m, m, 0, 0, &[])
}

fn join(a: Vec<Link>, s: Vec<Link>) -> Vec<Link> {
    let mut v = a;
    v.extend(s);
    v
}

fn sides(s: &Sequent, side: Side) -> (&[Formula], &[Formula]) {
    match side {
        Side::Ante => (&s.ante, &s.succ),
        Side::Succ => (&s.succ, &s.ante),
    }
}

fn other(side: Side) -> Side {
    match side {
        Side::Ante => Side::Succ,
        Side::Succ => Side::Ante,
    }
}

fn assemble(side: Side, active: Vec<Link>, passive: Vec<Link>) -> Vec<Link> {
    match side {
        Side::Ante => join(active, passive),
        Side::Succ => join(passive, active),
    }
}

enum Attempt {
    Ok(RuleMatch),
    Fail(ViolationKind),
}

/// One-premise rule acting on a single side: `pick` inspects the premise
/// and conclusion blocks at a candidate position and returns the block
/// links.  The first failure reason seen is kept for the report.
fn one_side(
    p: &Sequent,
    c: &Sequent,
    side: Side,
    kp: usize,
    kc: usize,
    principal: bool,
    mut pick: impl FnMut(&[Formula], &[Formula], usize) -> Result<Vec<Link>, ViolationKind>,
) -> Attempt {
    let (pa, po) = sides(p, side);
    let (ca, co) = sides(c, side);
    if po != co {
        return Attempt::Fail(ViolationKind::Mismatch);
    }
    let mut reason = ViolationKind::Mismatch;
    for r in candidates(pa, ca, kp, kc) {
        match pick(&pa[r..r + kp], &ca[r..r + kc], r) {
            Ok(block) => {
                let links =
                    assemble(side, side_links(side, pa.len(), r, kp, kc, &block), identity(other(side), po.len()));
                let principal = principal.then_some(Occ { side, idx: r });
                return Attempt::Ok(RuleMatch { links: vec![links], principal });
            }
            Err(ViolationKind::Mismatch) => {}
            Err(k) => reason = k,
        }
    }
    Attempt::Fail(reason)
}

fn two_premise(
    p0: &Sequent,
    p1: &Sequent,
    c: &Sequent,
    side: Side,
    conn: fn(&Formula) -> Option<(&Formula, &Formula)>,
) -> Attempt {
    let (a0, o0) = sides(p0, side);
    let (a1, o1) = sides(p1, side);
    let (ca, co) = sides(c, side);
    if o0 != co || o1 != co {
        return Attempt::Fail(ViolationKind::Mismatch);
    }
    let c1 = candidates(a1, ca, 1, 1);
    for r in candidates(a0, ca, 1, 1) {
        if !c1.contains(&r) {
            continue;
        }
        if let Some((x, y)) = conn(&ca[r]) {
            if *x == a0[r] && *y == a1[r] {
                let occ = Occ { side, idx: r };
                let mk = |len| {
                    assemble(side, side_links(side, len, r, 1, 1, &[Link::To(occ)]), identity(other(side), co.len()))
                };
                return Attempt::Ok(RuleMatch { links: vec![mk(a0.len()), mk(a1.len())], principal: Some(occ) });
            }
        }
    }
    Attempt::Fail(ViolationKind::Mismatch)
}

fn as_and(f: &Formula) -> Option<(&Formula, &Formula)> {
    match f.kind() {
        Kind::And(a, b) => Some((a, b)),
        _ => None,
    }
}

fn as_or(f: &Formula) -> Option<(&Formula, &Formula)> {
    match f.kind() {
        Kind::Or(a, b) => Some((a, b)),
        _ => None,
    }
}

/// Negation rule: `from` loses `A` at some position, `to` gains `¬A`.
fn negation(p: &Sequent, c: &Sequent, from: Side) -> Attempt {
    let to = other(from);
    let (pf, pt) = sides(p, from);
    let (cf, ct) = sides(c, from);
    for r2 in candidates(pt, ct, 0, 1) {
        let Kind::Not(a) = ct[r2].kind() else { continue };
        for r1 in candidates(pf, cf, 1, 0) {
            if pf[r1] == *a {
                let occ = Occ { side: to, idx: r2 };
                let lf = side_links(from, pf.len(), r1, 1, 0, &[Link::To(occ)]);
                let lt = side_links(to, pt.len(), r2, 0, 1, &[]);
                return Attempt::Ok(RuleMatch { links: vec![assemble(from, lf, lt)], principal: Some(occ) });
            }
        }
    }
    Attempt::Fail(ViolationKind::Mismatch)
}

fn cut_match(left: &Sequent, right: &Sequent, c: &Sequent, a: &Formula) -> Option<(Vec<Link>, Vec<Link>)> {
    if left.ante != c.ante || right.succ != c.succ {
        return None;
    }
    let r1 = candidates(&left.succ, &c.succ, 1, 0).find(|&r| left.succ[r] == *a)?;
    let r2 = candidates(&right.ante, &c.ante, 1, 0).find(|&r| right.ante[r] == *a)?;
    let l =
        join(identity(Side::Ante, left.ante.len()), side_links(Side::Succ, left.succ.len(), r1, 1, 0, &[Link::Cut]));
    let rt =
        join(side_links(Side::Ante, right.ante.len(), r2, 1, 0, &[Link::Cut]), identity(Side::Succ, right.succ.len()));
    Some((l, rt))
}

fn quantifier(p: &Sequent, c: &Sequent, side: Side, exists: bool, data: &RuleData) -> Attempt {
    let binder = |f: &Formula| -> Option<(Name, Formula)> {
        match (f.kind(), exists) {
            (Kind::Exists(z, a), true) | (Kind::Forall(z, a), false) => Some((z.clone(), a.clone())),
            _ => None,
        }
    };
    match data {
        RuleData::Eigen(y) => {
            let inst = Formula::var(y.clone());
            let att = one_side(p, c, side, 1, 1, true, |pb, cb, r| {
                let (z, a) = binder(&cb[0]).ok_or(ViolationKind::Mismatch)?;
                match substitute(&a, &z, &inst) {
                    Ok(s) if s == pb[0] => Ok(vec![Link::To(Occ { side, idx: r })]),
                    _ => Err(ViolationKind::Mismatch),
                }
            });
            match att {
                Attempt::Ok(_) if c.occurs_free(y) => Attempt::Fail(ViolationKind::Eigenvariable(y.clone())),
                other => other,
            }
        }
        RuleData::Term(b) => {
            if !b.is_quantifier_free() {
                return Attempt::Fail(ViolationKind::Substituent);
            }
            one_side(p, c, side, 1, 1, true, |pb, cb, r| {
                let (z, a) = binder(&cb[0]).ok_or(ViolationKind::Mismatch)?;
                match substitute(&a, &z, b) {
                    Ok(s) if s == pb[0] => Ok(vec![Link::To(Occ { side, idx: r })]),
                    Ok(_) => Err(ViolationKind::Mismatch),
                    Err(_) => Err(ViolationKind::Substituent),
                }
            })
        }
        _ => Attempt::Fail(ViolationKind::Data),
    }
}

fn data_ok(rule: Rule, data: &RuleData) -> bool {
    match rule {
        Rule::Cut => matches!(data, RuleData::Cut(_)),
        Rule::ExL | Rule::AllR => matches!(data, RuleData::Eigen(_)),
        Rule::ExR | Rule::AllL => matches!(data, RuleData::Term(_)),
        _ => matches!(data, RuleData::None),
    }
}

/// Reads a binary connective.
type Split = fn(&Formula) -> Option<(&Formula, &Formula)>;

/// Checks that `inf.conclusion` follows from `premises` by `inf.rule`.
pub fn check_rule(inf: &Inference, premises: &[&Sequent]) -> Result<RuleMatch, ViolationKind> {
    if premises.len() != inf.rule.arity() {
        return Err(ViolationKind::Arity);
    }
    if !data_ok(inf.rule, &inf.data) {
        return Err(ViolationKind::Data);
    }
    let c = &inf.conclusion;
    let attempt = match inf.rule {
        Rule::AxTop => {
            return (c.ante.is_empty() && c.succ.len() == 1 && matches!(c.succ[0].kind(), Kind::Top))
                .then(RuleMatch::default)
                .ok_or(ViolationKind::Initial)
        }
        Rule::AxBot => {
            return (c.succ.is_empty() && c.ante.len() == 1 && matches!(c.ante[0].kind(), Kind::Bot))
                .then(RuleMatch::default)
                .ok_or(ViolationKind::Initial)
        }
        Rule::AxVar => {
            let ok = c.ante.len() == 1 && c.succ.len() == 1 && c.ante[0].is_var().is_some() && c.ante[0] == c.succ[0];
            return ok.then(RuleMatch::default).ok_or(ViolationKind::Initial);
        }
        Rule::WeakL | Rule::WeakR => {
            let side = if inf.rule == Rule::WeakL { Side::Ante } else { Side::Succ };
            one_side(premises[0], c, side, 0, 1, false, |_, _, _| Ok(vec![]))
        }
        Rule::ContrL | Rule::ContrR => {
            let side = if inf.rule == Rule::ContrL { Side::Ante } else { Side::Succ };
            one_side(premises[0], c, side, 2, 1, false, |pb, cb, r| {
                if pb[0] == cb[0] && pb[1] == cb[0] {
                    Ok(vec![Link::To(Occ { side, idx: r }); 2])
                } else {
                    Err(ViolationKind::Mismatch)
                }
            })
        }
        Rule::ExchL | Rule::ExchR => {
            let side = if inf.rule == Rule::ExchL { Side::Ante } else { Side::Succ };
            one_side(premises[0], c, side, 2, 2, false, |pb, cb, r| {
                if pb[0] == cb[1] && pb[1] == cb[0] {
                    Ok(vec![Link::To(Occ { side, idx: r + 1 }), Link::To(Occ { side, idx: r })])
                } else {
                    Err(ViolationKind::Mismatch)
                }
            })
        }
        Rule::AndL | Rule::OrR => {
            let (side, conn): (Side, Split) =
                if inf.rule == Rule::AndL { (Side::Ante, as_and) } else { (Side::Succ, as_or) };
            one_side(premises[0], c, side, 2, 1, true, |pb, cb, r| match conn(&cb[0]) {
                Some((x, y)) if *x == pb[0] && *y == pb[1] => Ok(vec![Link::To(Occ { side, idx: r }); 2]),
                _ => Err(ViolationKind::Mismatch),
            })
        }
        Rule::AndR => two_premise(premises[0], premises[1], c, Side::Succ, as_and),
        Rule::OrL => two_premise(premises[0], premises[1], c, Side::Ante, as_or),
        Rule::NotL => negation(premises[0], c, Side::Succ),
        Rule::NotR => negation(premises[0], c, Side::Ante),
        Rule::Cut => {
            let RuleData::Cut(a) = &inf.data else { unreachable!() };
            if let Some((l, r)) = cut_match(premises[0], premises[1], c, a) {
                Attempt::Ok(RuleMatch { links: vec![l, r], principal: None })
            } else if let Some((l, r)) = cut_match(premises[1], premises[0], c, a) {
                Attempt::Ok(RuleMatch { links: vec![r, l], principal: None })
            } else {
                Attempt::Fail(ViolationKind::Mismatch)
            }
        }
        Rule::ExL => quantifier(premises[0], c, Side::Ante, true, &inf.data),
        Rule::AllR => quantifier(premises[0], c, Side::Succ, false, &inf.data),
        Rule::ExR => quantifier(premises[0], c, Side::Succ, true, &inf.data),
        Rule::AllL => quantifier(premises[0], c, Side::Ante, false, &inf.data),
    };
    match attempt {
        Attempt::Ok(m) => Ok(m),
        Attempt::Fail(k) => Err(k),
    }
}

/// Rule matches for every line, or the first rule violation.
pub fn ancestry(p: &Proof) -> Result<Vec<RuleMatch>, Violation> {
    p.lines
        .iter()
        .enumerate()
        .map(|(k, inf)| {
            let prem: Vec<&Sequent> = inf.premises.iter().map(|&i| &p.lines[i].conclusion).collect();
            check_rule(inf, &prem).map_err(|kind| Violation { line: k, id: inf.id, rule: inf.rule, kind })
        })
        .collect()
}

/// All violations of `p` under `system`, in line order.
pub fn check_proof(p: &Proof, system: System) -> Vec<Violation> {
    let mut out = Vec::new();
    let Some(last) = p.lines.last() else {
        return vec![Violation { line: 0, id: 0, rule: Rule::AxTop, kind: ViolationKind::Empty }];
    };
    let params = parameter_vars(p);
    if let Some(decl) = &p.params {
        if decl.iter().cloned().collect::<BTreeSet<Name>>() != params {
            out.push(Violation { line: p.lines.len() - 1, id: last.id, rule: last.rule, kind: ViolationKind::Params });
        }
    }
    let treelike = system != System::G;
    let mut used = vec![false; p.lines.len()];
    for (k, inf) in p.lines.iter().enumerate() {
        let v = |kind| Violation { line: k, id: inf.id, rule: inf.rule, kind };
        if inf.premises.iter().any(|&i| i >= k) {
            out.push(v(ViolationKind::Arity));
            continue;
        }
        if treelike {
            for &i in &inf.premises {
                if used[i] {
                    out.push(v(ViolationKind::NotTreelike));
                }
                used[i] = true;
            }
        }
        let prem: Vec<&Sequent> = inf.premises.iter().map(|&i| &p.lines[i].conclusion).collect();
        if let Err(kind) = check_rule(inf, &prem) {
            out.push(v(kind));
        }
        if let (Rule::Cut, RuleData::Cut(a)) = (inf.rule, &inf.data) {
            match system {
                System::G => {}
                System::GStar(i) => {
                    if !classify(a).within_sigma(i) {
                        out.push(v(ViolationKind::CutOutsideClass(i)));
                    }
                }
                System::GLStar => {
                    if !is_sigma_cnf2(a) {
                        out.push(v(ViolationKind::CutNotSigmaCnf2));
                    } else if classify(a) != QuantClass::SigmaQ(0) {
                        if let Some(x) = a.free_vars().into_iter().find(|x| !params.contains(x)) {
                            out.push(v(ViolationKind::CutNonParameter(x)));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Every formula occurrence descends to a cut formula or to the end
/// sequent.
pub fn check_subformula_property(p: &Proof) -> Result<(), Violation> {
    let matches = ancestry(p)?;
    let n = p.lines.len();
    let consumers = p.consumers();
    // good[k][o]: occurrence o of line k reaches a cut or the end sequent.
    let mut good: Vec<Vec<bool>> = vec![Vec::new(); n];
    for k in (0..n).rev() {
        let seq = &p.lines[k].conclusion;
        good[k] = if k + 1 == n {
            vec![true; seq.len()]
        } else if let Some(c) = consumers[k] {
            let slot = p.lines[c].premises.iter().position(|&i| i == k).unwrap();
            let cs = &p.lines[c].conclusion;
            matches[c].links[slot]
                .iter()
                .map(|l| match l {
                    Link::Cut => true,
                    Link::To(o) => {
                        let flat = match o.side {
                            Side::Ante => o.idx,
                            Side::Succ => cs.ante.len() + o.idx,
                        };
                        good[c][flat]
                    }
                })
                .collect()
        } else {
            vec![false; seq.len()]
        };
        if good[k].iter().any(|g| !g) {
            let inf = &p.lines[k];
            return Err(Violation { line: k, id: inf.id, rule: inf.rule, kind: ViolationKind::Orphan });
        }
    }
    Ok(())
}
