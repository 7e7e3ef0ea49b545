//! CNF(2) and ΣCNF(2): clause views, recognition, the stage-wise
//! satisfiability algorithm and witness extraction.
//!
//! Literals are coded as `2k` (positive) and `2k+1` (negative) for the
//! `k`-th variable, numbered from 1 by first occurrence in the matrix, so the
//! complement of a literal is a bit flip.  Clauses are read through nested
//! disjunctions; every other item that mentions no quantified variable is
//! treated as a single atomic x-slot;
//! this is how Σ0 formulas substituted for free variables are recognised.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::formula::{classify, eval0, Assignment, Formula, FormulaError, Kind, Name, QuantClass};

pub type Lit = u32;

pub fn comp(l: Lit) -> Lit {
    l ^ 1
}

pub fn var_of(l: Lit) -> u32 {
    l >> 1
}

pub fn is_negative(l: Lit) -> bool {
    l & 1 == 1
}

pub fn lit(var: u32, positive: bool) -> Lit {
    2 * var + u32::from(!positive)
}

/// DIMACS integer for a literal code: `k` or `-k`.
pub fn to_dimacs(l: Lit) -> i64 {
    let v = var_of(l) as i64;
    if is_negative(l) {
        -v
    } else {
        v
    }
}

pub fn from_dimacs(d: i64) -> Option<Lit> {
    if d == 0 || d.unsigned_abs() > (u32::MAX / 2 - 1) as u64 {
        return None;
    }
    Some(lit(d.unsigned_abs() as u32, d > 0))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Cnf2Error {
    #[error("matrix is not in clause form: {0}")]
    Shape(String),
    #[error("formula is not ΣCNF(2)")]
    NotSigmaCnf2,
    #[error("clause list is not CNF(2): variable {0} occurs more than twice")]
    NotCnf2(u32),
    #[error("literal {0} does not occur")]
    Absent(Lit),
    #[error("there is no clause {0}")]
    NoClause(usize),
    #[error("clause {0} is falsified by the free-variable assignment")]
    EmptyClause(usize),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// Matrix of a prenex formula as an ordered list of coded clauses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfView {
    pub clauses: Vec<Vec<Lit>>,
    pub z_vars: BTreeSet<u32>,
    pub x_vars: BTreeSet<u32>,
    pub occ: BTreeMap<Lit, Vec<usize>>,
    /// `atoms[k-1]` is the formula behind variable `k`.
    pub atoms: Vec<Formula>,
}

impl CnfView {
    /// View over explicit clauses.  Variables in `z_vars` are quantified,
    /// all others free; atoms are named `z{k}` or `x{k}`.
    pub fn from_clauses(clauses: Vec<Vec<Lit>>, z_vars: impl IntoIterator<Item = u32>) -> CnfView {
        let z_vars: BTreeSet<u32> = z_vars.into_iter().collect();
        let max = clauses.iter().flatten().map(|&l| var_of(l)).chain(z_vars.iter().copied()).max().unwrap_or(0);
        let atoms = (1..=max)
            .map(|k| Formula::var(if z_vars.contains(&k) { format!("z{k}") } else { format!("x{k}") }))
            .collect();
        CnfView::assemble(clauses, z_vars, atoms)
    }

    fn assemble(mut clauses: Vec<Vec<Lit>>, z_vars: BTreeSet<u32>, atoms: Vec<Formula>) -> CnfView {
        for c in clauses.iter_mut() {
            c.sort_unstable();
            c.dedup();
        }
        let mut occ: BTreeMap<Lit, Vec<usize>> = BTreeMap::new();
        for (i, c) in clauses.iter().enumerate() {
            for &l in c {
                occ.entry(l).or_default().push(i);
            }
        }
        let x_vars = occ.keys().map(|&l| var_of(l)).filter(|v| !z_vars.contains(v)).collect();
        CnfView { clauses, z_vars, x_vars, occ, atoms }
    }

    pub fn num_vars(&self) -> u32 {
        self.atoms.len() as u32
    }

    pub fn atom(&self, k: u32) -> &Formula {
        &self.atoms[k as usize - 1]
    }

    pub fn contains(&self, l: Lit) -> bool {
        self.occ.contains_key(&l)
    }

    pub fn is_pure(&self, l: Lit) -> bool {
        !self.occ.contains_key(&comp(l))
    }

    /// Total number of literal occurrences.
    pub fn size(&self) -> usize {
        self.clauses.iter().map(Vec::len).sum()
    }

    /// All literals occurring in the view, ascending.
    pub fn literals(&self) -> impl Iterator<Item = Lit> + '_ {
        self.occ.keys().copied()
    }

    fn same_clause(&self, l1: Lit, l2: Lit) -> bool {
        match (self.occ.get(&l1), self.occ.get(&l2)) {
            (Some(a), Some(b)) => a.iter().any(|i| b.contains(i)),
            _ => false,
        }
    }

    /// Truth of the clause list; unassigned variables count as false.
    pub fn satisfied_by(&self, a: &BTreeMap<u32, bool>) -> bool {
        self.clauses.iter().all(|c| clause_satisfied(c, a))
    }
}

pub fn clause_satisfied(c: &[Lit], a: &BTreeMap<u32, bool>) -> bool {
    c.iter().any(|&l| a.get(&var_of(l)).copied().unwrap_or(false) != is_negative(l))
}

fn strip_not(f: &Formula) -> (Formula, bool) {
    let mut cur = f.clone();
    let mut positive = true;
    while let Kind::Not(g) = cur.kind() {
        let g = g.clone();
        cur = g;
        positive = !positive;
    }
    (cur, positive)
}

struct ViewBuilder {
    bound: HashSet<Name>,
    memo: HashMap<usize, bool>,
    index: HashMap<Formula, u32>,
    atoms: Vec<Formula>,
    z_vars: BTreeSet<u32>,
}

impl ViewBuilder {
    // The matrix is quantifier-free, so every occurrence of a bound name is free in it.
    fn mentions_bound(&mut self, f: &Formula) -> bool {
        if let Some(&r) = self.memo.get(&f.addr()) {
            return r;
        }
        let r = match f.kind() {
            Kind::Top | Kind::Bot => false,
            Kind::Var(n) => self.bound.contains(n),
            Kind::Not(a) => self.mentions_bound(a),
            Kind::And(a, b) | Kind::Or(a, b) => self.mentions_bound(a) || self.mentions_bound(b),
            Kind::Exists(..) | Kind::Forall(..) => true,
        };
        self.memo.insert(f.addr(), r);
        r
    }

    fn code(&mut self, atom: Formula, positive: bool, quantified: bool) -> Lit {
        let next = self.atoms.len() as u32 + 1;
        let k = *self.index.entry(atom.clone()).or_insert_with(|| next);
        if k == next {
            self.atoms.push(atom);
            if quantified {
                self.z_vars.insert(k);
            }
        }
        lit(k, positive)
    }

    fn conjuncts(&mut self, f: &Formula, out: &mut Vec<Vec<Lit>>) -> Result<(), Cnf2Error> {
        match f.kind() {
            Kind::And(a, b) if self.mentions_bound(f) => {
                self.conjuncts(a, out)?;
                self.conjuncts(b, out)
            }
            _ => {
                let mut clause = Vec::new();
                self.items(f, &mut clause)?;
                out.push(clause);
                Ok(())
            }
        }
    }

    fn items(&mut self, f: &Formula, clause: &mut Vec<Lit>) -> Result<(), Cnf2Error> {
        if let Kind::Or(a, b) = f.kind() {
            self.items(a, clause)?;
            return self.items(b, clause);
        }
        if !self.mentions_bound(f) {
            let (atom, positive) = strip_not(f);
            clause.push(self.code(atom, positive, false));
            return Ok(());
        }
        match f.kind() {
            Kind::Var(_) => {
                clause.push(self.code(f.clone(), true, true));
                Ok(())
            }
            Kind::Not(g) if g.is_var().is_some() => {
                clause.push(self.code(g.clone(), false, true));
                Ok(())
            }
            _ => Err(Cnf2Error::Shape(format!("`{f}` is neither a literal nor free of quantified variables"))),
        }
    }
}

/// Clause view of the matrix of `∃z⃗ φ`.  A quantifier-free formula is read
/// as a matrix with no quantified variables.
pub fn cnf_view(f: &Formula) -> Result<CnfView, Cnf2Error> {
    let (bound, matrix) = f.exists_prefix();
    if !matrix.is_quantifier_free() {
        return Err(Cnf2Error::Shape("quantifier below the existential prefix".into()));
    }
    let mut b = ViewBuilder {
        bound: bound.iter().cloned().collect(),
        memo: HashMap::new(),
        index: HashMap::new(),
        atoms: Vec::new(),
        z_vars: BTreeSet::new(),
    };
    let mut clauses = Vec::new();
    b.conjuncts(&matrix, &mut clauses)?;
    // Quantified variables that never occur still get a number.
    for v in &bound {
        b.code(Formula::var(v.clone()), true, true);
    }
    Ok(CnfView::assemble(clauses, b.z_vars, b.atoms))
}

/// Every variable occurs at most twice in the whole clause list.
pub fn is_cnf2(c: &CnfView) -> bool {
    cnf2_violation(c).is_none()
}

fn cnf2_violation(c: &CnfView) -> Option<u32> {
    let mut count: BTreeMap<u32, usize> = BTreeMap::new();
    for (&l, cl) in &c.occ {
        *count.entry(var_of(l)).or_default() += cl.len();
    }
    count.into_iter().find(|&(_, n)| n > 2).map(|(v, _)| v)
}

fn conflicting(c: &CnfView, ci: &[Lit], cj: &[Lit]) -> bool {
    ci.iter().filter(|&&l| !c.z_vars.contains(&var_of(l))).any(|&l| cj.binary_search(&comp(l)).is_ok())
}

/// ΣCNF(2) membership: Σ0, or a prenex existential block over a CNF matrix
/// in which every pair of distinct clauses sharing a quantified literal also
/// carries a conflicting pair of free atoms.
pub fn is_sigma_cnf2(f: &Formula) -> bool {
    if classify(f) == QuantClass::SigmaQ(0) {
        return true;
    }
    match cnf_view(f) {
        Ok(c) => condition_two(&c),
        Err(_) => false,
    }
}

fn condition_two(c: &CnfView) -> bool {
    c.occ.iter().filter(|(&l, _)| c.z_vars.contains(&var_of(l))).all(|(_, cls)| {
        cls.iter()
            .enumerate()
            .all(|(n, &i)| cls[n + 1..].iter().all(|&j| i == j || conflicting(c, &c.clauses[i], &c.clauses[j])))
    })
}

/// Drops the clauses satisfied by the free atoms and keeps only the
/// quantified literals of the rest.  Literal codes are unchanged.
pub fn simplify(f: &Formula, x_assign: &Assignment) -> Result<CnfView, Cnf2Error> {
    if !is_sigma_cnf2(f) {
        return Err(Cnf2Error::NotSigmaCnf2);
    }
    simplify_view(&cnf_view(f)?, x_assign)
}

/// [`simplify`] on a view that is already built.
pub fn simplify_view(c: &CnfView, x_assign: &Assignment) -> Result<CnfView, Cnf2Error> {
    let mut values = BTreeMap::new();
    for &k in &c.x_vars {
        values.insert(k, eval0(x_assign, c.atom(k))?);
    }
    let mut out = Vec::new();
    for (i, cl) in c.clauses.iter().enumerate() {
        let satisfied = cl.iter().any(|&l| values.get(&var_of(l)).is_some_and(|&v| v != is_negative(l)));
        if satisfied {
            continue;
        }
        let kept: Vec<Lit> = cl.iter().copied().filter(|l| c.z_vars.contains(&var_of(*l))).collect();
        if kept.is_empty() {
            return Err(Cnf2Error::EmptyClause(i + 1));
        }
        out.push(kept);
    }
    Ok(CnfView::assemble(out, c.z_vars.clone(), c.atoms.clone()))
}

/// `l1` is the cyclic successor of `l2` in some clause containing both.
pub fn follows(l1: Lit, l2: Lit, c: &CnfView) -> bool {
    c.occ.get(&l2).is_some_and(|cls| cls.iter().any(|&i| successor(&c.clauses[i], l2) == Some(l1)))
}

fn successor(clause: &[Lit], l: Lit) -> Option<Lit> {
    let p = clause.binary_search(&l).ok()?;
    Some(clause[(p + 1) % clause.len()])
}

/// The literal following the complement of `l`, or `l` itself when `l` is
/// pure.
pub fn next(l: Lit, c: &CnfView) -> Result<Lit, Cnf2Error> {
    if !c.contains(l) {
        return Err(Cnf2Error::Absent(l));
    }
    Ok(next_unchecked(l, c))
}

fn next_unchecked(l: Lit, c: &CnfView) -> Lit {
    match c.occ.get(&comp(l)) {
        None => l,
        Some(cls) => successor(&c.clauses[cls[0]], comp(l)).expect("occurrence index is consistent"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageEvent {
    pub stage: usize,
    pub step: usize,
    pub lit: Lit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOutcome {
    Done,
    Failed,
}

/// One stage of the solver for clause `i` (1-based).  Every assignment the
/// algorithm performs is logged, repeated ones included.
pub fn run_stage(i: usize, c: &CnfView) -> Result<(Vec<StageEvent>, StageOutcome), Cnf2Error> {
    let clause = c.clauses.get(i.wrapping_sub(1)).ok_or(Cnf2Error::NoClause(i))?;
    let mut events = Vec::new();
    let Some(&first) = clause.first() else {
        return Ok((events, StageOutcome::Failed));
    };
    // Each outer round logs at most |F| + 2 assignments and there are at most
    // |F| rounds, so this cap never cuts a terminating run short.
    let cap = (c.size() + 1) * (c.size() + 1);
    let assign = |l: Lit, events: &mut Vec<StageEvent>| -> bool {
        events.push(StageEvent { stage: i, step: events.len(), lit: l });
        events.len() <= cap
    };
    let mut l1 = first;
    loop {
        if !assign(l1, &mut events) {
            return Ok((events, StageOutcome::Failed));
        }
        let mut l2 = next_unchecked(l1, c);
        while l2 != comp(l1) {
            if !assign(l2, &mut events) {
                return Ok((events, StageOutcome::Failed));
            }
            l2 = next_unchecked(l2, c);
            if c.is_pure(l2) {
                assign(l2, &mut events);
                return Ok((events, StageOutcome::Done));
            }
            if c.same_clause(l1, l2) {
                return Ok((events, StageOutcome::Done));
            }
        }
        if !assign(l1, &mut events) {
            return Ok((events, StageOutcome::Failed));
        }
        l1 = next_unchecked(l1, c);
        if l1 == first {
            return Ok((events, StageOutcome::Failed));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// Values for every quantified variable of the view.
    Sat(BTreeMap<u32, bool>),
    /// 1-based index of the failing stage.
    Unsat(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveOutcome {
    pub verdict: Verdict,
    pub events: Vec<StageEvent>,
}

/// Replays an event log: the last value written to a variable wins.
pub fn last_write_wins(events: &[StageEvent], vars: impl IntoIterator<Item = u32>) -> BTreeMap<u32, bool> {
    let mut a: BTreeMap<u32, bool> = vars.into_iter().map(|v| (v, false)).collect();
    for e in events {
        a.insert(var_of(e.lit), !is_negative(e.lit));
    }
    a
}

/// Runs every stage in order.
pub fn solve_cnf2(c: &CnfView) -> Result<SolveOutcome, Cnf2Error> {
    if let Some(v) = cnf2_violation(c) {
        return Err(Cnf2Error::NotCnf2(v));
    }
    let mut events = Vec::new();
    for i in 1..=c.clauses.len() {
        let (ev, outcome) = run_stage(i, c)?;
        events.extend(ev);
        if outcome == StageOutcome::Failed {
            return Ok(SolveOutcome { verdict: Verdict::Unsat(i), events });
        }
    }
    let vars = c.z_vars.iter().copied().chain(c.occ.keys().map(|&l| var_of(l)));
    let a = last_write_wins(&events, vars);
    Ok(SolveOutcome { verdict: Verdict::Sat(a), events })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    Sat(Assignment),
    Unsat,
}

/// Witness for a ΣCNF(2) formula under an assignment to its free variables.
/// A Σ0 formula is evaluated directly and witnessed by the empty map.
pub fn witness_sigma_cnf2(f: &Formula, x_assign: &Assignment) -> Result<Witness, Cnf2Error> {
    if f.is_quantifier_free() {
        return Ok(if eval0(x_assign, f)? { Witness::Sat(Assignment::new()) } else { Witness::Unsat });
    }
    if !is_sigma_cnf2(f) {
        return Err(Cnf2Error::NotSigmaCnf2);
    }
    let view = cnf_view(f)?;
    let simple = match simplify_view(&view, x_assign) {
        Ok(s) => s,
        Err(Cnf2Error::EmptyClause(_)) => return Ok(Witness::Unsat),
        Err(e) => return Err(e),
    };
    match solve_cnf2(&simple)?.verdict {
        Verdict::Unsat(_) => Ok(Witness::Unsat),
        Verdict::Sat(vals) => {
            let (bound, _) = f.exists_prefix();
            let mut out: Assignment = bound.iter().map(|v| (v.clone(), false)).collect();
            for (k, v) in vals {
                if let Some(n) = view.atom(k).is_var() {
                    if view.z_vars.contains(&k) {
                        out.insert(n.clone(), v);
                    }
                }
            }
            Ok(Witness::Sat(out))
        }
    }
}
