//! Branching programs over arithmetic guards: the path program `bp0`, guard
//! simplification, composition, runs and path extraction.
//!
//! Nodes are dense indices; node 0 is initial.  Each node also carries a
//! [`NodeName`] recording where it came from: a triple code for `bp0`
//! nodes, `<n,k>` for the `k`-th node added while simplifying the guard of
//! `n`, and `<u1|u2>` for a product node of a composition.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::arith::{eval_arith, triple, untriple, val, AFormula, ArithError, FiniteModel, SizeContext, Term};
use crate::formula::Name;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeName {
    Code(u64),
    Sub(Box<NodeName>, u64),
    Prod(Box<NodeName>, Box<NodeName>),
}

impl NodeName {
    /// Code of the `bp0` node this one descends from (first coordinate for
    /// products).
    pub fn root(&self) -> u64 {
        match self {
            NodeName::Code(c) => *c,
            NodeName::Sub(n, _) | NodeName::Prod(n, _) => n.root(),
        }
    }
}

impl fmt::Display for NodeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeName::Code(c) => match untriple(*c) {
                Some((w, i, j)) => write!(f, "({w},{i},{j})"),
                None => write!(f, "#{c}"),
            },
            NodeName::Sub(n, k) => write!(f, "<{n},{k}>"),
            NodeName::Prod(u, v) => write!(f, "<{u}|{v}>"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label {
    pub guard: AFormula,
    pub on_true: usize,
    pub on_false: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchingProgram {
    pub names: Vec<NodeName>,
    pub labels: Vec<Label>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BpError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("branching program has no nodes")]
    Empty,
    #[error("node {node} has target {target} out of range")]
    Target { node: usize, target: usize },
    #[error("run does not complete layer {0}")]
    IncompleteRun(u64),
    #[error("guard `{0}` quantifies over strings")]
    NotSigma0B(String),
    #[error("node {node}: guard `{guard}` reads `{var}` but is not one of its bits")]
    NotAtomic { node: usize, guard: String, var: Name },
    #[error("the program computing `{0}` reads it")]
    Signature(Name),
    #[error("node {node} is not named by a triple")]
    NotTriple { node: usize },
}

impl BranchingProgram {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn validate(&self) -> Result<(), BpError> {
        if self.labels.is_empty() {
            return Err(BpError::Empty);
        }
        for (node, l) in self.labels.iter().enumerate() {
            for target in [l.on_true, l.on_false] {
                if target >= self.len() {
                    return Err(BpError::Target { node, target });
                }
            }
        }
        Ok(())
    }

    /// Default step budget: the square of the node count.
    pub fn default_budget(&self) -> usize {
        self.len().saturating_mul(self.len())
    }

    fn push(&mut self, name: NodeName, label: Label) -> usize {
        self.names.push(name);
        self.labels.push(label);
        self.len() - 1
    }
}

impl fmt::Display for BranchingProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (n, l)) in self.names.iter().zip(&self.labels).enumerate() {
            writeln!(f, "{k} {n} :: {} -> {} {}", l.guard, l.on_true, l.on_false)?;
        }
        Ok(())
    }
}

/// Whether `f` reads a bit of `y`.
pub fn bit_dependent(f: &AFormula, y: &str) -> bool {
    match f {
        AFormula::Top | AFormula::Bot | AFormula::Eq(..) | AFormula::Lt(..) => false,
        AFormula::Bit(x, _) => &**x == y,
        AFormula::Not(a) => bit_dependent(a, y),
        AFormula::And(a, b) | AFormula::Or(a, b) => bit_dependent(a, y) || bit_dependent(b, y),
        AFormula::ExistsLe(_, _, a) | AFormula::ForallLe(_, _, a) => bit_dependent(a, y),
        AFormula::ExistsStr(x, _, a) | AFormula::ForallStr(x, _, a) => &**x != y && bit_dependent(a, y),
    }
}

fn instance(f: &AFormula, x: &Name, v: u64) -> AFormula {
    f.subst(&BTreeMap::from([(x.clone(), Term::num(v))]))
}

/// The path program for the edge relation `phi(pi, pj)` on nodes `0..=a`
/// with layers `0..=b`, followed by the halting layer `b+1`.
pub fn bp0(phi: &AFormula, pi: &str, pj: &str, a: u64, b: u64) -> BranchingProgram {
    let mut codes = Vec::new();
    for w in 0..=b {
        for i in 0..=a {
            for j in 0..=a {
                codes.push((w, i, j));
            }
        }
    }
    codes.extend((0..=a).map(|j| (b + 1, j, 0)));
    let index: HashMap<(u64, u64, u64), usize> = codes.iter().enumerate().map(|(k, &t)| (t, k)).collect();
    let labels = codes
        .iter()
        .enumerate()
        .map(|(k, &(w, i, j))| {
            if w > b {
                Label { guard: AFormula::Top, on_true: k, on_false: k }
            } else if j < a {
                let guard = phi.subst(&BTreeMap::from([(pi.into(), Term::num(i)), (pj.into(), Term::num(j))]));
                Label { guard, on_true: index[&(w + 1, j, 0)], on_false: index[&(w, i, j + 1)] }
            } else {
                Label { guard: AFormula::Top, on_true: index[&(w + 1, j, 0)], on_false: 0 }
            }
        })
        .collect();
    let names = codes.iter().map(|&(w, i, j)| NodeName::Code(triple(w, i, j))).collect();
    BranchingProgram { names, labels }
}

/// Rewrites every guard that reads bits of `y` until it is a single bit
/// `y(t)`.  Guards not reading `y` are left as they are.
pub fn bp_simplify(bp: &BranchingProgram, y: &str) -> Result<BranchingProgram, BpError> {
    bp.validate()?;
    let mut out = bp.clone();
    let mut added: HashMap<usize, u64> = HashMap::new();
    let mut work: VecDeque<usize> = (0..out.len()).collect();
    let fresh = |out: &mut BranchingProgram, added: &mut HashMap<usize, u64>, n: usize| {
        let k = added.entry(n).or_insert(0);
        *k += 1;
        let name = NodeName::Sub(Box::new(out.names[n].clone()), *k);
        out.push(name, Label { guard: AFormula::Top, on_true: 0, on_false: 0 })
    };
    while let Some(n) = work.pop_front() {
        let Label { guard, on_true: u1, on_false: u2 } = out.labels[n].clone();
        if !bit_dependent(&guard, y) || matches!(guard, AFormula::Bit(..)) {
            continue;
        }
        match guard {
            AFormula::Not(b) => {
                out.labels[n] = Label { guard: *b, on_true: u2, on_false: u1 };
                work.push_back(n);
            }
            AFormula::And(b1, b2) => {
                let m = fresh(&mut out, &mut added, n);
                out.labels[m] = Label { guard: *b2, on_true: u1, on_false: u2 };
                out.labels[n] = Label { guard: *b1, on_true: m, on_false: u2 };
                work.extend([n, m]);
            }
            AFormula::Or(b1, b2) => {
                let m = fresh(&mut out, &mut added, n);
                out.labels[m] = Label { guard: *b2, on_true: u1, on_false: u2 };
                out.labels[n] = Label { guard: *b1, on_true: u1, on_false: m };
                work.extend([n, m]);
            }
            AFormula::ExistsLe(x, t, body) | AFormula::ForallLe(x, t, body) => {
                let exists = matches!(out.labels[n].guard, AFormula::ExistsLe(..));
                let top = val(&t, &SizeContext::new())?;
                let mut nodes = vec![n];
                for _ in 0..top {
                    nodes.push(fresh(&mut out, &mut added, n));
                }
                for (v, &m) in nodes.iter().enumerate() {
                    let next = nodes.get(v + 1).copied();
                    let guard = instance(&body, &x, v as u64);
                    out.labels[m] = if exists {
                        Label { guard, on_true: u1, on_false: next.unwrap_or(u2) }
                    } else {
                        Label { guard, on_true: next.unwrap_or(u1), on_false: u2 }
                    };
                }
                work.extend(nodes);
            }
            g @ (AFormula::ExistsStr(..) | AFormula::ForallStr(..)) => return Err(BpError::NotSigma0B(g.to_string())),
            AFormula::Top | AFormula::Bot | AFormula::Eq(..) | AFormula::Lt(..) | AFormula::Bit(..) => {
                unreachable!("atomic guards are skipped")
            }
        }
    }
    Ok(out)
}

fn node_triple(bp: &BranchingProgram, u: usize) -> Result<(u64, u64, u64), BpError> {
    match &bp.names[u] {
        NodeName::Code(c) => untriple(*c).ok_or(BpError::NotTriple { node: u }),
        _ => Err(BpError::NotTriple { node: u }),
    }
}

/// Composition of `bpn`, whose guards read `y` only through single bits
/// `y(w,i,j)`, with the `bp0`-shaped program `bp` whose path is `y`.  A
/// query for bit `(w,i,j)` runs `bp` from its initial node until it leaves
/// layer `w` or reaches `(w,i,j)`, where `bp`'s guard decides the bit.
pub fn bp_compose(
    bpn: &BranchingProgram,
    bp: &BranchingProgram,
    y: &str,
    a: u64,
    b: u64,
) -> Result<BranchingProgram, BpError> {
    bpn.validate()?;
    bp.validate()?;
    if bp.labels.iter().any(|l| bit_dependent(&l.guard, y)) {
        return Err(BpError::Signature(y.into()));
    }
    let mut query = Vec::with_capacity(bpn.len());
    for (node, l) in bpn.labels.iter().enumerate() {
        query.push(match &l.guard {
            AFormula::Bit(x, t) if &**x == y => {
                let code = val(t, &SizeContext::new())?;
                Some(untriple(code).filter(|&(w, i, j)| w <= b && i <= a && j <= a))
            }
            g if bit_dependent(g, y) => {
                return Err(BpError::NotAtomic { node, guard: g.to_string(), var: y.into() });
            }
            _ => None,
        });
    }
    let mut out = BranchingProgram { names: vec![], labels: vec![] };
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut intern = |out: &mut BranchingProgram, queue: &mut VecDeque<(usize, usize, usize)>, p: (usize, usize)| {
        *index.entry(p).or_insert_with(|| {
            let name = NodeName::Prod(Box::new(bpn.names[p.0].clone()), Box::new(bp.names[p.1].clone()));
            let k = out.push(name, Label { guard: AFormula::Top, on_true: 0, on_false: 0 });
            queue.push_back((p.0, p.1, k));
            k
        })
    };
    intern(&mut out, &mut queue, (0, 0));
    while let Some((u1, u2, here)) = queue.pop_front() {
        let l1 = &bpn.labels[u1];
        let (v1, v2) = (l1.on_true, l1.on_false);
        let label = match &query[u1] {
            None => {
                let t = intern(&mut out, &mut queue, (v1, 0));
                let f = intern(&mut out, &mut queue, (v2, 0));
                Label { guard: l1.guard.clone(), on_true: t, on_false: f }
            }
            Some(None) => {
                let f = intern(&mut out, &mut queue, (v2, 0));
                Label { guard: AFormula::Top, on_true: f, on_false: f }
            }
            Some(Some(target)) => {
                let l2 = &bp.labels[u2];
                let at = node_triple(bp, u2)?;
                if at == *target {
                    let t = intern(&mut out, &mut queue, (v1, 0));
                    let f = intern(&mut out, &mut queue, (v2, 0));
                    Label { guard: l2.guard.clone(), on_true: t, on_false: f }
                } else if at.0 <= target.0 {
                    let t = intern(&mut out, &mut queue, (u1, l2.on_true));
                    let f = intern(&mut out, &mut queue, (u1, l2.on_false));
                    Label { guard: l2.guard.clone(), on_true: t, on_false: f }
                } else {
                    let f = intern(&mut out, &mut queue, (v2, 0));
                    Label { guard: AFormula::Top, on_true: f, on_false: f }
                }
            }
        };
        out.labels[here] = label;
    }
    Ok(out)
}

/// A run of `steps` steps.  Once the run reaches a node whose guard is a
/// constant and whose targets are itself, the remaining steps stay there
/// and are not stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpRun {
    pub nodes: Vec<usize>,
    pub outcomes: Vec<bool>,
    pub steps: usize,
    /// Outcome repeated after the stored prefix.
    pub tail: Option<bool>,
}

impl BpRun {
    /// Node after `k` steps.
    pub fn node_at(&self, k: usize) -> usize {
        self.nodes.get(k).copied().unwrap_or_else(|| *self.nodes.last().expect("runs start at node 0"))
    }

    /// All `steps + 1` visited nodes.
    pub fn visited(&self) -> Vec<usize> {
        (0..=self.steps).map(|k| self.node_at(k)).collect()
    }

    pub fn outcome_at(&self, k: usize) -> Option<bool> {
        if k >= self.steps {
            return None;
        }
        self.outcomes.get(k).copied().or(self.tail)
    }
}

/// Walks `steps` steps from node 0, evaluating guards in `m`.
pub fn bp_run(bp: &BranchingProgram, m: &FiniteModel, steps: usize) -> Result<BpRun, BpError> {
    bp.validate()?;
    let mut run = BpRun { nodes: vec![0], outcomes: vec![], steps, tail: None };
    let mut u = 0;
    for _ in 0..steps {
        let l = &bp.labels[u];
        let constant = match l.guard {
            AFormula::Top => Some(true),
            AFormula::Bot => Some(false),
            _ => None,
        };
        if l.on_true == u && l.on_false == u && constant.is_some() {
            run.tail = constant;
            break;
        }
        let v = eval_arith(&l.guard, m)?;
        run.outcomes.push(v);
        u = if v { l.on_true } else { l.on_false };
        run.nodes.push(u);
    }
    Ok(run)
}

/// The path bits `(w, i, j)` of a run: one per step that moves from layer
/// `w` to layer `w+1`, for `w = 0..=b`.  Node layers come from the triple
/// codes of the node names.
pub fn extract_path(bp: &BranchingProgram, run: &BpRun, b: u64) -> Result<Vec<(u64, u64, u64)>, BpError> {
    let layer = |u: usize| untriple(bp.names[u].root());
    let mut out = Vec::new();
    for win in run.nodes.windows(2) {
        if let (Some(from), Some(to)) = (layer(win[0]), layer(win[1])) {
            if to.0 == from.0 + 1 && from.0 <= b {
                out.push(from);
            }
        }
    }
    if out.len() as u64 != b + 1 {
        return Err(BpError::IncompleteRun(b));
    }
    Ok(out)
}

/// Triple codes of a path.
pub fn path_codes(path: &[(u64, u64, u64)]) -> BTreeSet<u64> {
    path.iter().map(|&(w, i, j)| triple(w, i, j)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{edge_template, parse_aformula, pseudo_path};

    fn graph_model(a: u64, edges: impl Fn(u64, u64) -> bool) -> FiniteModel {
        let mut set = BTreeSet::new();
        for i in 0..=a {
            for j in 0..a {
                if edges(i, j) {
                    set.insert(crate::arith::pair(i, j));
                }
            }
        }
        let mut m = FiniteModel::new(SizeContext::new());
        m.set_string("X", &set);
        m
    }

    fn single(guard: AFormula) -> BranchingProgram {
        BranchingProgram {
            names: vec![NodeName::Code(0), NodeName::Code(1), NodeName::Code(2)],
            labels: vec![
                Label { guard, on_true: 1, on_false: 2 },
                Label { guard: AFormula::Top, on_true: 1, on_false: 1 },
                Label { guard: AFormula::Top, on_true: 2, on_false: 2 },
            ],
        }
    }

    #[test]
    fn run_basics() {
        let bp = BranchingProgram {
            names: vec![NodeName::Code(0)],
            labels: vec![Label { guard: AFormula::Top, on_true: 0, on_false: 0 }],
        };
        let r = bp_run(&bp, &FiniteModel::default(), 3).unwrap();
        assert_eq!(r.visited(), [0, 0, 0, 0]);
        let bp = single(parse_aformula("(bit X 0)").unwrap());
        let mut m = FiniteModel::default();
        m.set_string("X", &BTreeSet::from([0]));
        assert_eq!(bp_run(&bp, &m, 1).unwrap().visited(), [0, 1]);
        assert!(matches!(bp_run(&bp, &FiniteModel::default(), 1), Err(BpError::Arith(ArithError::NoSize(_)))));
    }

    #[test]
    fn bp0_labels() {
        let bp = bp0(&edge_template("X"), "i", "j", 1, 1);
        assert_eq!(bp.names[0], NodeName::Code(triple(0, 0, 0)));
        assert_eq!(bp.labels[0].guard, AFormula::bit2("X", Term::num(0), Term::num(0)));
        assert_eq!(bp.labels[1].guard, AFormula::Top);
        assert_eq!(bp.labels[1].on_false, 0);
    }

    #[test]
    fn bp0_follows_pseudo_path() {
        for a in 1..=3u64 {
            let bits = (a + 1) * a;
            for g in 0u64..(1 << bits) {
                let edge = |i: u64, j: u64| g >> (i * a + j) & 1 == 1;
                let b = 2;
                let bp = bp0(&edge_template("X"), "i", "j", a, b);
                let run = bp_run(&bp, &graph_model(a, edge), bp.default_budget()).unwrap();
                let within = ((a + 1) * (a + 1) * (b + 1)) as usize;
                let path = extract_path(&bp, &run, b).unwrap();
                assert!(run.nodes.len() <= within + 1);
                let want: Vec<_> =
                    pseudo_path(a, b, edge).into_iter().enumerate().map(|(w, (i, j))| (w as u64, i, j)).collect();
                assert_eq!(path, want);
            }
        }
    }

    #[test]
    fn extract_examples() {
        // 2-cycle on nodes 0, 1.
        let bp = bp0(&edge_template("X"), "i", "j", 1, 2);
        let m = graph_model(1, |i, j| i == 0 && j == 0 || i == 1 && j == 0);
        let run = bp_run(&bp, &m, 100).unwrap();
        assert_eq!(extract_path(&bp, &run, 2).unwrap(), [(0, 0, 0), (1, 0, 0), (2, 0, 0)]);
        let m = graph_model(1, |_, _| false);
        let bp = bp0(&edge_template("X"), "i", "j", 1, 1);
        let run = bp_run(&bp, &m, 100).unwrap();
        assert_eq!(extract_path(&bp, &run, 1).unwrap(), [(0, 0, 1), (1, 1, 1)]);
        let run = bp_run(&bp, &m, 0).unwrap();
        assert_eq!(extract_path(&bp, &run, 1), Err(BpError::IncompleteRun(1)));
    }

    #[test]
    fn simplify_cases() {
        let s = bp_simplify(&single(parse_aformula("(not (bit Y 0))").unwrap()), "Y").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.labels[0], Label { guard: parse_aformula("(bit Y 0)").unwrap(), on_true: 2, on_false: 1 });
        let s = bp_simplify(&single(parse_aformula("(and (bit Y 0) (bit Y 1))").unwrap()), "Y").unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.names[3], NodeName::Sub(Box::new(NodeName::Code(0)), 1));
        let s = bp_simplify(&single(parse_aformula("(existsle i 1 (bit Y i))").unwrap()), "Y").unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.labels[0].on_false, 3);
        // Guards not reading Y stay.
        let g = parse_aformula("(and (bit X 0) (bit X 1))").unwrap();
        assert_eq!(bp_simplify(&single(g.clone()), "Y").unwrap(), single(g));
    }

    #[test]
    fn simplify_preserves_runs() {
        let guards = [
            "(not (bit Y 0))",
            "(and (bit Y 0) (bit Y 1))",
            "(or (bit Y 0) (not (bit Y 2)))",
            "(existsle i 1 (bit Y i))",
            "(foralle i 2 (or (bit Y i) (bit X 0)))",
            "(not (and (bit Y 1) (existsle k 2 (and (bit Y k) (not (= k 1))))))",
        ];
        for g in guards {
            let Ok(g) = parse_aformula(&g.replace("foralle", "forallle")) else { panic!("{g}") };
            let bp = single(g);
            let s = bp_simplify(&bp, "Y").unwrap();
            assert!(s.labels.iter().all(|l| !bit_dependent(&l.guard, "Y") || matches!(l.guard, AFormula::Bit(..))));
            for ybits in 0u64..8 {
                for x in [false, true] {
                    let mut m = FiniteModel::default();
                    m.set_string("Y", &(0..3).filter(|k| ybits >> k & 1 == 1).collect());
                    m.set_string("X", &if x { BTreeSet::from([0]) } else { BTreeSet::new() });
                    let want = bp_run(&bp, &m, 20).unwrap().node_at(20);
                    let got = bp_run(&s, &m, 20).unwrap().node_at(20);
                    assert_eq!(got, want);
                }
            }
        }
    }

    #[test]
    fn compose_without_queries_is_a_renaming() {
        let bpn = bp0(&edge_template("X"), "i", "j", 1, 1);
        let bp = bp0(&edge_template("W"), "i", "j", 1, 1);
        let c = bp_compose(&bpn, &bp, "Y", 1, 1).unwrap();
        // Row 1 of layer 0 is unreachable from the initial node.
        assert_eq!(c.len(), bpn.len() - 2);
        for (k, l) in c.labels.iter().enumerate() {
            let NodeName::Prod(u, _) = &c.names[k] else { panic!() };
            let orig = bpn.names.iter().position(|n| n == &**u).unwrap();
            assert_eq!(l.guard, bpn.labels[orig].guard);
        }
    }

    #[test]
    fn compose_errors() {
        let bpn = single(parse_aformula("(not (bit Y 0))").unwrap());
        let bp = bp0(&edge_template("X"), "i", "j", 1, 1);
        assert!(matches!(bp_compose(&bpn, &bp, "Y", 1, 1), Err(BpError::NotAtomic { .. })));
        let reads_y = bp0(&edge_template("Y"), "i", "j", 1, 1);
        let ok = single(parse_aformula("(bit Y 0)").unwrap());
        assert_eq!(bp_compose(&ok, &reads_y, "Y", 1, 1), Err(BpError::Signature("Y".into())));
    }
}
