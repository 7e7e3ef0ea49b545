//! Programmatic proof construction.  Each method appends one inference,
//! computes its conclusion and returns the index of the new line.  The
//! builder does not validate side conditions; run the checker on the result.

use super::{Inference, Proof, Rule, RuleData, Sequent};
use crate::formula::{substitute, Formula, Kind, Name};

#[derive(Debug, Default, Clone)]
pub struct ProofBuilder {
    lines: Vec<Inference>,
}

fn insert(v: &[Formula], pos: usize, f: Formula) -> Vec<Formula> {
    let mut out = v.to_vec();
    out.insert(pos, f);
    out
}

fn remove(v: &[Formula], pos: usize) -> Vec<Formula> {
    let mut out = v.to_vec();
    out.remove(pos);
    out
}

fn replace2(v: &[Formula], pos: usize, f: Formula) -> Vec<Formula> {
    let mut out = v.to_vec();
    out.splice(pos..pos + 2, [f]);
    out
}

impl ProofBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn seq(&self, line: usize) -> &Sequent {
        &self.lines[line].conclusion
    }

    pub fn push(&mut self, rule: Rule, premises: &[usize], data: RuleData, conclusion: Sequent) -> usize {
        let id = self.lines.len() as u32 + 1;
        self.lines.push(Inference { id, rule, premises: premises.to_vec(), data, conclusion });
        self.lines.len() - 1
    }

    pub fn ax_top(&mut self) -> usize {
        self.push(Rule::AxTop, &[], RuleData::None, Sequent::new(vec![], vec![Formula::top()]))
    }

    pub fn ax_bot(&mut self) -> usize {
        self.push(Rule::AxBot, &[], RuleData::None, Sequent::new(vec![Formula::bot()], vec![]))
    }

    pub fn ax_var(&mut self, x: impl Into<Name>) -> usize {
        let v = Formula::var(x);
        self.push(Rule::AxVar, &[], RuleData::None, Sequent::new(vec![v.clone()], vec![v]))
    }

    pub fn weak_l(&mut self, p: usize, pos: usize, f: Formula) -> usize {
        let s = self.seq(p);
        let c = Sequent::new(insert(&s.ante, pos, f), s.succ.clone());
        self.push(Rule::WeakL, &[p], RuleData::None, c)
    }

    pub fn weak_r(&mut self, p: usize, pos: usize, f: Formula) -> usize {
        let s = self.seq(p);
        let c = Sequent::new(s.ante.clone(), insert(&s.succ, pos, f));
        self.push(Rule::WeakR, &[p], RuleData::None, c)
    }

    /// Merges the equal formulas at `pos` and `pos+1` of the antecedent.
    pub fn contr_l(&mut self, p: usize, pos: usize) -> usize {
        let s = self.seq(p);
        let c = Sequent::new(remove(&s.ante, pos + 1), s.succ.clone());
        self.push(Rule::ContrL, &[p], RuleData::None, c)
    }

    pub fn contr_r(&mut self, p: usize, pos: usize) -> usize {
        let s = self.seq(p);
        let c = Sequent::new(s.ante.clone(), remove(&s.succ, pos + 1));
        self.push(Rule::ContrR, &[p], RuleData::None, c)
    }

    pub fn exch_l(&mut self, p: usize, pos: usize) -> usize {
        let s = self.seq(p);
        let mut a = s.ante.clone();
        a.swap(pos, pos + 1);
        let c = Sequent::new(a, s.succ.clone());
        self.push(Rule::ExchL, &[p], RuleData::None, c)
    }

    pub fn exch_r(&mut self, p: usize, pos: usize) -> usize {
        let s = self.seq(p);
        let mut v = s.succ.clone();
        v.swap(pos, pos + 1);
        let c = Sequent::new(s.ante.clone(), v);
        self.push(Rule::ExchR, &[p], RuleData::None, c)
    }

    /// Moves succedent formula `from` to the antecedent at `to`, negated.
    pub fn not_l(&mut self, p: usize, from: usize, to: usize) -> usize {
        let s = self.seq(p);
        let f = Formula::not(s.succ[from].clone());
        let c = Sequent::new(insert(&s.ante, to, f), remove(&s.succ, from));
        self.push(Rule::NotL, &[p], RuleData::None, c)
    }

    /// Moves antecedent formula `from` to the succedent at `to`, negated.
    pub fn not_r(&mut self, p: usize, from: usize, to: usize) -> usize {
        let s = self.seq(p);
        let f = Formula::not(s.ante[from].clone());
        let c = Sequent::new(remove(&s.ante, from), insert(&s.succ, to, f));
        self.push(Rule::NotR, &[p], RuleData::None, c)
    }

    /// Joins antecedent formulas `pos`, `pos+1` into a conjunction.
    pub fn and_l(&mut self, p: usize, pos: usize) -> usize {
        let s = self.seq(p);
        let f = Formula::and(s.ante[pos].clone(), s.ante[pos + 1].clone());
        let c = Sequent::new(replace2(&s.ante, pos, f), s.succ.clone());
        self.push(Rule::AndL, &[p], RuleData::None, c)
    }

    /// Joins succedent formulas `pos`, `pos+1` into a disjunction.
    pub fn or_r(&mut self, p: usize, pos: usize) -> usize {
        let s = self.seq(p);
        let f = Formula::or(s.succ[pos].clone(), s.succ[pos + 1].clone());
        let c = Sequent::new(s.ante.clone(), replace2(&s.succ, pos, f));
        self.push(Rule::OrR, &[p], RuleData::None, c)
    }

    /// Conjunction of the succedent formulas at `pos` of both premises.
    pub fn and_r(&mut self, p1: usize, p2: usize, pos: usize) -> usize {
        let (s1, s2) = (self.seq(p1), self.seq(p2));
        let f = Formula::and(s1.succ[pos].clone(), s2.succ[pos].clone());
        let mut succ = s1.succ.clone();
        succ[pos] = f;
        let c = Sequent::new(s1.ante.clone(), succ);
        self.push(Rule::AndR, &[p1, p2], RuleData::None, c)
    }

    /// Disjunction of the antecedent formulas at `pos` of both premises.
    pub fn or_l(&mut self, p1: usize, p2: usize, pos: usize) -> usize {
        let (s1, s2) = (self.seq(p1), self.seq(p2));
        let f = Formula::or(s1.ante[pos].clone(), s2.ante[pos].clone());
        let mut ante = s1.ante.clone();
        ante[pos] = f;
        let c = Sequent::new(ante, s1.succ.clone());
        self.push(Rule::OrL, &[p1, p2], RuleData::None, c)
    }

    /// Cut: `left` has the cut formula at succedent position `lpos`,
    /// `right` at antecedent position `rpos`.
    pub fn cut(&mut self, left: usize, lpos: usize, right: usize, rpos: usize) -> usize {
        let a = self.seq(left).succ[lpos].clone();
        debug_assert_eq!(self.seq(right).ante[rpos], a);
        let s = self.seq(left);
        let c = Sequent::new(s.ante.clone(), remove(&s.succ, lpos));
        self.push(Rule::Cut, &[left, right], RuleData::Cut(a), c)
    }

    /// ∃-left: the antecedent formula at `pos` is `target`'s body with the
    /// bound variable replaced by `eigen`.
    pub fn ex_l(&mut self, p: usize, pos: usize, target: Formula, eigen: impl Into<Name>) -> usize {
        let s = self.seq(p);
        let mut ante = s.ante.clone();
        ante[pos] = target;
        let c = Sequent::new(ante, s.succ.clone());
        self.push(Rule::ExL, &[p], RuleData::Eigen(eigen.into()), c)
    }

    pub fn all_r(&mut self, p: usize, pos: usize, target: Formula, eigen: impl Into<Name>) -> usize {
        let s = self.seq(p);
        let mut succ = s.succ.clone();
        succ[pos] = target;
        let c = Sequent::new(s.ante.clone(), succ);
        self.push(Rule::AllR, &[p], RuleData::Eigen(eigen.into()), c)
    }

    /// ∃-right: the succedent formula at `pos` is `target`'s body with the
    /// bound variable replaced by `b`.
    pub fn ex_r(&mut self, p: usize, pos: usize, target: Formula, b: Formula) -> usize {
        let s = self.seq(p);
        let mut succ = s.succ.clone();
        succ[pos] = target;
        let c = Sequent::new(s.ante.clone(), succ);
        self.push(Rule::ExR, &[p], RuleData::Term(b), c)
    }

    pub fn all_l(&mut self, p: usize, pos: usize, target: Formula, b: Formula) -> usize {
        let s = self.seq(p);
        let mut ante = s.ante.clone();
        ante[pos] = target;
        let c = Sequent::new(ante, s.succ.clone());
        self.push(Rule::AllL, &[p], RuleData::Term(b), c)
    }

    /// Proves `⟶ F` from `⟶ F[z1:=b1, …]` for `F = ∃z1 … ∃zn M`, one ex-r
    /// per variable, innermost first.  `p` must already prove the fully
    /// instantiated matrix at succedent `pos`.
    pub fn ex_r_chain(&mut self, mut p: usize, pos: usize, target: &Formula, subst: &[(Name, Formula)]) -> usize {
        // Intermediate targets: ∃z_k … ∃z_n M with z_1..z_{k-1} already substituted.
        let mut targets = Vec::with_capacity(subst.len());
        let mut cur = target.clone();
        for (z, b) in subst {
            targets.push(cur.clone());
            let Kind::Exists(bz, body) = cur.kind() else { panic!("ex_r_chain: not an ∃ over {z}") };
            assert_eq!(bz, z, "ex_r_chain: binder order");
            let next = substitute(body, z, b).expect("ex_r_chain substitution");
            cur = next;
        }
        for ((_, b), t) in subst.iter().zip(targets).rev() {
            p = self.ex_r(p, pos, t, b.clone());
        }
        p
    }

    /// ex-l chain with eigenvariables `eigens`, innermost first, turning the
    /// antecedent instance at `pos` into `target`.
    pub fn ex_l_chain(&mut self, mut p: usize, pos: usize, target: &Formula, eigens: &[(Name, Name)]) -> usize {
        let mut targets = Vec::with_capacity(eigens.len());
        let mut cur = target.clone();
        for (z, y) in eigens {
            targets.push(cur.clone());
            let Kind::Exists(bz, body) = cur.kind() else { panic!("ex_l_chain: not an ∃ over {z}") };
            assert_eq!(bz, z, "ex_l_chain: binder order");
            let next = substitute(body, z, &Formula::var(y.clone())).expect("ex_l_chain substitution");
            cur = next;
        }
        for ((_, y), t) in eigens.iter().zip(targets).rev() {
            p = self.ex_l(p, pos, t, y.clone());
        }
        p
    }

    pub fn finish(self) -> Proof {
        Proof { lines: self.lines, params: None }
    }

    pub fn finish_with_params(self, params: Vec<Name>) -> Proof {
        Proof { lines: self.lines, params: Some(params) }
    }
}
