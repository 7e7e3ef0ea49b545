//! Brute-force ground truth used by the tests and the acceptance suite.

use std::collections::{BTreeMap, BTreeSet};

use crate::cnf2::{clause_satisfied, comp, is_negative, lit, var_of, CnfView, Lit};
use crate::formula::{Assignment, Formula, FormulaError, Kind};

pub const BRUTE_CAP: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BruteResult {
    Sat(BTreeMap<u32, bool>),
    Unsat,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{vars} variables exceed the brute-force cap of {cap}")]
pub struct SizeCap {
    pub vars: usize,
    pub cap: usize,
}

/// Lexicographically least satisfying assignment (smallest variable most
/// significant, false before true) over every variable of the view.
pub fn brute_sat(c: &CnfView) -> Result<BruteResult, SizeCap> {
    let vars: Vec<u32> =
        c.occ.keys().map(|&l| var_of(l)).chain(c.z_vars.iter().copied()).collect::<BTreeSet<_>>().into_iter().collect();
    let n = vars.len();
    if n > BRUTE_CAP {
        return Err(SizeCap { vars: n, cap: BRUTE_CAP });
    }
    let mut a: BTreeMap<u32, bool> = vars.iter().map(|&v| (v, false)).collect();
    for bits in 0u64..(1u64 << n) {
        for (k, v) in vars.iter().enumerate() {
            a.insert(*v, bits >> (n - 1 - k) & 1 == 1);
        }
        if c.satisfied_by(&a) {
            return Ok(BruteResult::Sat(a));
        }
    }
    Ok(BruteResult::Unsat)
}

/// Every CNF(2) clause list with at most `max_vars` variables and at most
/// `max_clauses` nonempty clauses, all variables quantified.  Clause order
/// is significant; variables are numbered by first occurrence, which makes
/// the enumeration free of renamings.  Tautological clauses are included.
pub fn enumerate_cnf2(max_vars: u32, max_clauses: usize) -> impl Iterator<Item = CnfView> {
    let mut out = Vec::new();
    let mut counts = vec![0u8; max_vars as usize + 1];
    enumerate_rec(max_vars, max_clauses, &mut Vec::new(), &mut counts, 0, &mut out);
    out.into_iter().map(|cl| {
        let vars: BTreeSet<u32> = cl.iter().flatten().map(|&l| var_of(l)).collect();
        CnfView::from_clauses(cl, vars)
    })
}

fn enumerate_rec(
    max_vars: u32,
    max_clauses: usize,
    acc: &mut Vec<Vec<Lit>>,
    counts: &mut Vec<u8>,
    introduced: u32,
    out: &mut Vec<Vec<Vec<Lit>>>,
) {
    out.push(acc.clone());
    if acc.len() == max_clauses {
        return;
    }
    let lits: Vec<Lit> = (1..=max_vars).flat_map(|v| [lit(v, true), lit(v, false)]).collect();
    for mask in 1u32..(1u32 << lits.len()) {
        let clause: Vec<Lit> = lits.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &l)| l).collect();
        // New variables must be introduced in order.
        let mut next_new = introduced + 1;
        let mut ok = true;
        for &l in &clause {
            let v = var_of(l);
            if v > introduced {
                if v == next_new {
                    next_new += 1;
                } else if v > next_new {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        if clause.iter().any(|&l| counts[var_of(l) as usize] as usize + occurrences(&clause, var_of(l)) > 2) {
            continue;
        }
        for &l in &clause {
            counts[var_of(l) as usize] += 1;
        }
        acc.push(clause.clone());
        enumerate_rec(max_vars, max_clauses, acc, counts, next_new - 1, out);
        acc.pop();
        for &l in &clause {
            counts[var_of(l) as usize] -= 1;
        }
    }
}

fn occurrences(clause: &[Lit], v: u32) -> usize {
    clause.iter().filter(|&&l| var_of(l) == v).count()
}

/// Number of assignments to `vars` satisfying `clauses`, counted up to
/// `limit` (the search stops once `limit` is reached).  Variables outside
/// `vars` must not occur.
pub fn count_models(clauses: &[Vec<Lit>], vars: &BTreeSet<u32>, limit: u64) -> u64 {
    let mut a = BTreeMap::new();
    let order: Vec<u32> = vars.iter().copied().collect();
    count_rec(clauses, &order, &mut a, limit)
}

fn count_rec(clauses: &[Vec<Lit>], order: &[u32], a: &mut BTreeMap<u32, bool>, limit: u64) -> u64 {
    // Unit propagation; remember what we set so it can be undone.
    let mut forced = Vec::new();
    loop {
        let mut changed = false;
        for c in clauses {
            let mut unassigned = None;
            let mut n_unassigned = 0;
            let mut sat = false;
            for &l in c {
                match a.get(&var_of(l)) {
                    Some(&v) if v != is_negative(l) => {
                        sat = true;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        n_unassigned += 1;
                        unassigned = Some(l);
                    }
                }
            }
            if sat {
                continue;
            }
            if n_unassigned == 0 {
                for v in forced {
                    a.remove(&v);
                }
                return 0;
            }
            if n_unassigned == 1 {
                let l = unassigned.unwrap();
                a.insert(var_of(l), !is_negative(l));
                forced.push(var_of(l));
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let free: Vec<u32> = order.iter().copied().filter(|v| !a.contains_key(v)).collect();
    let result = if clauses.iter().all(|c| clause_satisfied_partial(c, a)) {
        1u64.checked_shl(free.len() as u32).unwrap_or(u64::MAX).min(limit)
    } else {
        let v = free[0];
        let mut total = 0;
        for val in [false, true] {
            a.insert(v, val);
            total += count_rec(clauses, order, a, limit - total);
            a.remove(&v);
            if total >= limit {
                break;
            }
        }
        total
    };
    for v in forced {
        a.remove(&v);
    }
    result
}

fn clause_satisfied_partial(c: &[Lit], a: &BTreeMap<u32, bool>) -> bool {
    c.iter().any(|&l| a.get(&var_of(l)).is_some_and(|&v| v != is_negative(l)))
}

/// Truth of an arbitrary quantified formula by expanding every quantifier.
pub fn qbf_eval(a: &Assignment, f: &Formula) -> Result<bool, FormulaError> {
    let mut env = a.clone();
    qbf_rec(&mut env, f)
}

fn qbf_rec(env: &mut Assignment, f: &Formula) -> Result<bool, FormulaError> {
    Ok(match f.kind() {
        Kind::Top => true,
        Kind::Bot => false,
        Kind::Var(n) => *env.get(n).ok_or_else(|| FormulaError::Unassigned(n.clone()))?,
        Kind::Not(x) => !qbf_rec(env, x)?,
        Kind::And(x, y) => qbf_rec(env, x)? && qbf_rec(env, y)?,
        Kind::Or(x, y) => qbf_rec(env, x)? || qbf_rec(env, y)?,
        Kind::Exists(n, x) | Kind::Forall(n, x) => {
            let want = matches!(f.kind(), Kind::Exists(..));
            let saved = env.get(n).copied();
            let mut result = !want;
            for v in [false, true] {
                env.insert(n.clone(), v);
                if qbf_rec(env, x)? == want {
                    result = want;
                    break;
                }
            }
            match saved {
                Some(s) => env.insert(n.clone(), s),
                None => env.remove(n),
            };
            result
        }
    })
}

/// All assignments to `vars`, first variable most significant.
pub fn all_assignments(vars: &[crate::formula::Name]) -> impl Iterator<Item = Assignment> + '_ {
    let n = vars.len();
    (0u64..(1u64 << n))
        .map(move |bits| vars.iter().enumerate().map(|(k, v)| (v.clone(), bits >> (n - 1 - k) & 1 == 1)).collect())
}

/// Clause-list truth used as a sanity check on solver output.
pub fn satisfies(c: &CnfView, a: &BTreeMap<u32, bool>) -> bool {
    c.clauses.iter().all(|cl| clause_satisfied(cl, a))
}

/// Whether the complement of every literal of `c` is also a literal of `c`.
pub fn has_no_pure_literal(c: &CnfView) -> bool {
    c.literals().all(|l| c.contains(comp(l)))
}
