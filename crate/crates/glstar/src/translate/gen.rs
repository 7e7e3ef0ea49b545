//! GL* proofs of the edge-rec translations.
//!
//! `⟶ F_0` comes from an explicit path of length one.  Each step
//! `F_k ⟶ F_{k+1}` keeps the old path bits as eigenvariables and sets layer
//! `k+1` to `Y_i ∧ D^i_j`, where `Y_i` says layer `k` ends at `i` and
//! `D^i_j` says `j` is the first successor of `i`.  The steps are chained by
//! cuts on the ΣCNF(2) formulas `F_k`.

use std::collections::HashMap;

use super::{edge_rec, edge_var, path_var, EdgeRec};
use crate::calculus::{Proof, ProofBuilder, Sequent};
use crate::formula::{substitute, Formula, Kind, Name};

/// Siblings met on the way from a root to a leaf, and whether the leaf side
/// is the left child.
type Path = Vec<(Formula, bool)>;

/// `D^t_0 … D^t_a` for row `t`.
fn first_successor(t: u64, a: u64) -> Vec<Formula> {
    let atom = |j| Formula::var(edge_var(t, j));
    let none_before = |j| Formula::and_all((0..j).map(|l| Formula::not(atom(l))));
    (0..=a)
        .map(|j| match j {
            0 if a > 0 => atom(0),
            j if j < a => Formula::and(atom(j), none_before(j)),
            j => none_before(j),
        })
        .collect()
}

fn subst_all(f: &Formula, s: &[(Name, Formula)]) -> Formula {
    s.iter().fold(f.clone(), |acc, (v, b)| substitute(&acc, v, b).expect("quantifier-free substituent"))
}

fn last_conjunct(f: &Formula) -> &Formula {
    match f.kind() {
        Kind::And(_, b) => last_conjunct(b),
        _ => f,
    }
}

fn collect_leaves(f: &Formula, path: &mut Path, out: &mut HashMap<Formula, Path>) {
    if let Kind::And(x, y) = f.kind() {
        path.push((y.clone(), true));
        collect_leaves(x, path, out);
        path.pop();
        path.push((x.clone(), false));
        collect_leaves(y, path, out);
        path.pop();
    } else {
        out.entry(f.clone()).or_insert_with(|| path.clone());
    }
}

/// Path to `target` through the disjunctions of `f`.
fn or_path(f: &Formula, target: &Formula) -> Option<Path> {
    if f == target {
        return Some(vec![]);
    }
    let Kind::Or(x, y) = f.kind() else { return None };
    if let Some(mut p) = or_path(x, target) {
        p.insert(0, (y.clone(), true));
        return Some(p);
    }
    let mut p = or_path(y, target)?;
    p.insert(0, (x.clone(), false));
    Some(p)
}

fn splice(v: &[Formula], pos: usize, with: &[Formula]) -> Vec<Formula> {
    let mut out = v[..pos].to_vec();
    out.extend_from_slice(with);
    out.extend_from_slice(&v[pos + 1..]);
    out
}

fn with_inserted(v: &[Formula], pos: usize, f: Formula) -> Vec<Formula> {
    let mut out = v.to_vec();
    out.insert(pos, f);
    out
}

struct Gen {
    b: ProofBuilder,
}

struct Step<'a> {
    lhs: &'a Formula,
    leaves: HashMap<Formula, Path>,
    rho7_old: &'a Formula,
    rho7_new: &'a Formula,
    /// `Y_0 … Y_a`.
    ends: Vec<Formula>,
    /// `B_{i,j}` by row.
    next: Vec<Vec<Formula>>,
}

impl Gen {
    /// `F ⟶ F`.
    fn identity(&mut self, f: &Formula) -> usize {
        match f.kind() {
            Kind::Var(x) => self.b.ax_var(x.clone()),
            Kind::Top => {
                let t = self.b.ax_top();
                self.b.weak_l(t, 0, f.clone())
            }
            Kind::Bot => {
                let t = self.b.ax_bot();
                self.b.weak_r(t, 0, f.clone())
            }
            Kind::Not(x) => {
                let p = self.identity(x);
                let p = self.b.not_l(p, 0, 0);
                self.b.not_r(p, 1, 0)
            }
            Kind::And(x, y) => {
                let p = self.identity(x);
                let p = self.b.weak_l(p, 1, y.clone());
                let q = self.identity(y);
                let q = self.b.weak_l(q, 0, x.clone());
                let r = self.b.and_r(p, q, 0);
                self.b.and_l(r, 0)
            }
            Kind::Or(x, y) => {
                let p = self.identity(x);
                let p = self.b.weak_r(p, 1, y.clone());
                let q = self.identity(y);
                let q = self.b.weak_r(q, 0, x.clone());
                let r = self.b.or_l(p, q, 0);
                self.b.or_r(r, 0)
            }
            Kind::Exists(..) | Kind::Forall(..) => unreachable!("identity on a quantified formula"),
        }
    }

    /// Weakens `line` up to `goal`; both sides of its conclusion must be
    /// subsequences of `goal`'s.
    fn weaken_to(&mut self, mut line: usize, goal: &Sequent) -> usize {
        let s = self.b.seq(line).clone();
        let missing = |have: &[Formula], want: &[Formula]| {
            let mut k = 0;
            let mut out = Vec::new();
            for (j, f) in want.iter().enumerate() {
                if k < have.len() && &have[k] == f {
                    k += 1;
                } else {
                    out.push(j);
                }
            }
            assert_eq!(k, have.len(), "weaken_to: not a subsequence");
            out
        };
        for j in missing(&s.ante, &goal.ante) {
            line = self.b.weak_l(line, j, goal.ante[j].clone());
        }
        for j in missing(&s.succ, &goal.succ) {
            line = self.b.weak_r(line, j, goal.succ[j].clone());
        }
        line
    }

    /// Rebuilds the conjunction around the single antecedent formula.
    fn focus(&mut self, mut line: usize, path: &Path) -> usize {
        for (sib, left) in path.iter().rev() {
            line = self.b.weak_l(line, usize::from(*left), sib.clone());
            line = self.b.and_l(line, 0);
        }
        line
    }

    /// Rebuilds the disjunction around the succedent formula at `pos`.
    fn select(&mut self, mut line: usize, pos: usize, path: &Path) -> usize {
        for (sib, left) in path.iter().rev() {
            line = self.b.weak_r(line, if *left { pos + 1 } else { pos }, sib.clone());
            line = self.b.or_r(line, pos);
        }
        line
    }

    /// Splits the antecedent disjunction `f` (the only antecedent formula) by
    /// or-l, proving each disjunct with `leaf`.
    fn split_ante(&mut self, f: &Formula, leaf: &mut dyn FnMut(&mut Gen, &Formula) -> usize) -> usize {
        match f.kind() {
            Kind::Or(x, y) => {
                let p = self.split_ante(x, leaf);
                let q = self.split_ante(y, leaf);
                self.b.or_l(p, q, 0)
            }
            _ => leaf(self, f),
        }
    }

    /// Proves a propositional tautology with the invertible rules, closing
    /// on any formula shared by both sides.
    fn prove_taut(&mut self, goal: Sequent) -> usize {
        let (ante, succ) = (&goal.ante, &goal.succ);
        if succ.iter().any(|f| matches!(f.kind(), Kind::Top)) {
            let t = self.b.ax_top();
            return self.weaken_to(t, &goal);
        }
        if ante.iter().any(|f| matches!(f.kind(), Kind::Bot)) {
            let t = self.b.ax_bot();
            return self.weaken_to(t, &goal);
        }
        if let Some(f) = ante.iter().find(|f| succ.contains(f)) {
            let t = self.identity(f);
            return self.weaken_to(t, &goal);
        }
        let find = |v: &[Formula], pick: fn(&Kind) -> bool| v.iter().position(|f| pick(f.kind()));
        if let Some(p) = find(ante, |k| matches!(k, Kind::And(..))) {
            let Kind::And(x, y) = ante[p].kind() else { unreachable!() };
            let l = self.prove_taut(Sequent::new(splice(ante, p, &[x.clone(), y.clone()]), succ.clone()));
            return self.b.and_l(l, p);
        }
        if let Some(p) = find(ante, |k| matches!(k, Kind::Not(..))) {
            let Kind::Not(x) = ante[p].kind() else { unreachable!() };
            let prem = Sequent::new(splice(ante, p, &[]), with_inserted(succ, 0, x.clone()));
            let l = self.prove_taut(prem);
            return self.b.not_l(l, 0, p);
        }
        if let Some(p) = find(succ, |k| matches!(k, Kind::Not(..))) {
            let Kind::Not(x) = succ[p].kind() else { unreachable!() };
            let prem = Sequent::new(with_inserted(ante, 0, x.clone()), splice(succ, p, &[]));
            let l = self.prove_taut(prem);
            return self.b.not_r(l, 0, p);
        }
        if let Some(p) = find(succ, |k| matches!(k, Kind::Or(..))) {
            let Kind::Or(x, y) = succ[p].kind() else { unreachable!() };
            let l = self.prove_taut(Sequent::new(ante.clone(), splice(succ, p, &[x.clone(), y.clone()])));
            return self.b.or_r(l, p);
        }
        if let Some(p) = find(succ, |k| matches!(k, Kind::And(..))) {
            let Kind::And(x, y) = succ[p].kind() else { unreachable!() };
            let l = self.prove_taut(Sequent::new(ante.clone(), splice(succ, p, std::slice::from_ref(x))));
            let r = self.prove_taut(Sequent::new(ante.clone(), splice(succ, p, std::slice::from_ref(y))));
            return self.b.and_r(l, r, p);
        }
        if let Some(p) = find(ante, |k| matches!(k, Kind::Or(..))) {
            let Kind::Or(x, y) = ante[p].kind() else { unreachable!() };
            let l = self.prove_taut(Sequent::new(splice(ante, p, std::slice::from_ref(x)), succ.clone()));
            let r = self.prove_taut(Sequent::new(splice(ante, p, std::slice::from_ref(y)), succ.clone()));
            return self.b.or_l(l, r, p);
        }
        panic!("prove_taut: not a tautology: {goal}");
    }

    /// `Y_t ⟶ ⋁_i ⋁_j B_{i,j}`.
    fn row_case(&mut self, st: &Step, t: usize) -> usize {
        let y = &st.ends[t];
        let row = &st.next[t];
        let a = row.len() - 1;
        let ds: Vec<Formula> = row
            .iter()
            .map(|b| match b.kind() {
                Kind::And(_, d) => d.clone(),
                _ => unreachable!(),
            })
            .collect();
        let k = self.prove_taut(Sequent::new(vec![], ds.clone()));
        let mut cur = self.b.weak_l(k, 0, y.clone());
        for j in 0..=a {
            let mut succ: Vec<Formula> = row[..j].to_vec();
            succ.push(y.clone());
            succ.extend_from_slice(&ds[j + 1..]);
            let id = self.identity(y);
            let left = self.weaken_to(id, &Sequent::new(vec![y.clone()], succ));
            cur = self.b.and_r(left, cur, j);
        }
        for j in (0..a).rev() {
            cur = self.b.or_r(cur, j);
        }
        let g = Formula::or_all(row.iter().cloned());
        let path = or_path(st.rho7_new, &g).expect("row disjunction in the new path clause");
        self.select(cur, 0, &path)
    }

    /// `⋁_{t ≥ from} Y_t ⟶ ⋁_i ⋁_j B_{i,j}`.
    fn split_rows(&mut self, st: &Step, from: usize) -> usize {
        let p = self.row_case(st, from);
        if from + 1 == st.ends.len() {
            return p;
        }
        let q = self.split_rows(st, from + 1);
        self.b.or_l(p, q, 0)
    }

    /// `ρ7_k ⟶ ρ7_{k+1}` through a cut on `W = ⋁_t Y_t`.
    fn rho7_lemma(&mut self, st: &Step) -> usize {
        let w = Formula::or_all(st.ends.iter().cloned());
        let left = self.split_ante(st.rho7_old, &mut |g, e| {
            let l = g.b.ax_var(e.is_var().expect("path clause of variables").clone());
            let path = or_path(&w, e).expect("eigenvariable in W");
            g.select(l, 0, &path)
        });
        let left = self.b.weak_r(left, 0, st.rho7_new.clone());
        let right = self.split_rows(st, 0);
        let right = self.b.weak_l(right, 1, st.rho7_old.clone());
        self.b.cut(left, 1, right, 0)
    }

    /// `L ⟶ r` for the step's antecedent `L`.
    fn entail(&mut self, st: &Step, r: &Formula) -> usize {
        if let Kind::And(x, y) = r.kind() {
            let p = self.entail(st, x);
            let q = self.entail(st, y);
            return self.b.and_r(p, q, 0);
        }
        if let Some(path) = st.leaves.get(r) {
            let id = self.identity(r);
            return self.focus(id, path);
        }
        if r == st.rho7_new {
            let l = self.rho7_lemma(st);
            return self.focus(l, &st.leaves[st.rho7_old]);
        }
        let t = self.prove_taut(Sequent::new(vec![], vec![r.clone()]));
        self.b.weak_l(t, 0, st.lhs.clone())
    }

    /// `F_k ⟶ F_{k+1}`.
    fn step(&mut self, k: u64, a: u64, old: &EdgeRec, new: &EdgeRec) -> usize {
        let eig: Vec<(Name, Name)> =
            old.z_vars.iter().map(|(_, n)| (n.clone(), Name::from(format!("e{k}_{n}").as_str()))).collect();
        let eig_terms: Vec<(Name, Formula)> = eig.iter().map(|(z, e)| (z.clone(), Formula::var(e.clone()))).collect();
        let eig_of = |w, i, j| Formula::var(format!("e{k}_{}", path_var(w, i, j)).as_str());
        let ends: Vec<Formula> = (0..=a).map(|t| Formula::or_all((0..=a).map(|s| eig_of(k, s, t)))).collect();
        let next: Vec<Vec<Formula>> = (0..=a)
            .map(|i| first_successor(i, a).into_iter().map(|d| Formula::and(ends[i as usize].clone(), d)).collect())
            .collect();
        let sigma: Vec<(Name, Formula)> = new
            .z_vars
            .iter()
            .map(|((w, i, j), n)| {
                let b = if *w <= k { eig_of(*w, *i, *j) } else { next[*i as usize][*j as usize].clone() };
                (n.clone(), b)
            })
            .collect();
        let lhs = subst_all(&old.matrix, &eig_terms);
        let rhs = subst_all(&new.matrix, &sigma);
        let mut leaves = HashMap::new();
        collect_leaves(&lhs, &mut vec![], &mut leaves);
        let st = Step { lhs: &lhs, leaves, rho7_old: last_conjunct(&lhs), rho7_new: last_conjunct(&rhs), ends, next };
        let p = self.entail(&st, &rhs);
        let p = self.b.ex_r_chain(p, 0, &new.formula, &sigma);
        self.b.ex_l_chain(p, 0, &old.formula, &eig)
    }
}

/// A GL* proof of `⟶ ||edge-rec||` for `φ(i, j) = X(i, j)`, declaring the
/// edge bits as parameters.
pub fn gen_edge_rec_proof(a: u64, b: u64) -> Proof {
    if a == 0 {
        // One node: every path bit is forced true and there are no edges.
        let e = edge_rec(0, b);
        let sigma: Vec<(Name, Formula)> = e.z_vars.iter().map(|(_, n)| (n.clone(), Formula::top())).collect();
        let mut g = Gen { b: ProofBuilder::new() };
        let p = g.prove_taut(Sequent::new(vec![], vec![subst_all(&e.matrix, &sigma)]));
        g.b.ex_r_chain(p, 0, &e.formula, &sigma);
        return g.b.finish_with_params(vec![]);
    }
    let inst: Vec<EdgeRec> = (0..=b).map(|k| edge_rec(a, k)).collect();
    let mut g = Gen { b: ProofBuilder::new() };
    let row0 = first_successor(0, a);
    let sigma0: Vec<(Name, Formula)> = inst[0]
        .z_vars
        .iter()
        .map(|((_, i, j), n)| (n.clone(), if *i == 0 { row0[*j as usize].clone() } else { Formula::bot() }))
        .collect();
    let m0 = subst_all(&inst[0].matrix, &sigma0);
    let p = g.prove_taut(Sequent::new(vec![], vec![m0]));
    let mut cur = g.b.ex_r_chain(p, 0, &inst[0].formula, &sigma0);
    for k in 0..b {
        let step = g.step(k, a, &inst[k as usize], &inst[k as usize + 1]);
        let left = g.b.weak_r(cur, 1, inst[k as usize + 1].formula.clone());
        cur = g.b.cut(left, 0, step, 0);
    }
    let params = inst[b as usize].x_vars.iter().cloned().collect();
    g.b.finish_with_params(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{check_fvnf, check_proof, System};

    #[test]
    fn small_instances_check() {
        for (a, b) in [(0, 0), (0, 2), (1, 0), (1, 1), (2, 1), (2, 2), (1, 3)] {
            let p = gen_edge_rec_proof(a, b);
            let v = check_proof(&p, System::GLStar);
            assert!(v.is_empty(), "a={a} b={b}: {:?}", &v[..v.len().min(3)]);
            assert_eq!(check_fvnf(&p), Ok(()));
            let end = p.final_sequent().unwrap();
            assert!(end.ante.is_empty());
            assert_eq!(end.succ, [edge_rec(a, b).formula]);
        }
    }

    #[test]
    fn first_successor_shapes() {
        let d = first_successor(0, 1);
        assert_eq!(d.len(), 2);
        assert_eq!(d[0], Formula::var(edge_var(0, 0)));
        assert_eq!(d[1], Formula::not(Formula::var(edge_var(0, 0))));
    }
}
