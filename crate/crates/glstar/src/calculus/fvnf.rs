//! Free-variable normal form.

use std::collections::{BTreeMap, BTreeSet};

use super::check::{ancestry, Violation};
use super::{parameter_vars, Proof, RuleData, Sequent};
use crate::formula::{substitute, Formula, Name};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FvnfError {
    #[error("variable `{0}` is used as an eigenvariable more than once")]
    EigenTwice(Name),
    #[error("parameter variable `{0}` is used as an eigenvariable")]
    ParamEigen(Name),
    #[error("variable `{0}` is free in the proof but is neither a parameter nor an eigenvariable")]
    NotEigen(Name),
    #[error("proof is not treelike")]
    NotTreelike,
    #[error(transparent)]
    Rule(#[from] Violation),
}

fn eigen_lines(p: &Proof) -> Vec<(usize, Name)> {
    p.lines
        .iter()
        .enumerate()
        .filter_map(|(k, l)| match &l.data {
            RuleData::Eigen(y) if l.rule.has_eigenvariable() => Some((k, y.clone())),
            _ => None,
        })
        .collect()
}

fn proof_free_vars(p: &Proof) -> BTreeSet<Name> {
    p.lines.iter().flat_map(|l| l.conclusion.free_vars()).collect()
}

/// Each non-parameter free variable is an eigenvariable exactly once and no
/// parameter is an eigenvariable.
pub fn check_fvnf(p: &Proof) -> Result<(), FvnfError> {
    let params = parameter_vars(p);
    let mut uses: BTreeMap<Name, usize> = BTreeMap::new();
    for (_, y) in eigen_lines(p) {
        if params.contains(&y) {
            return Err(FvnfError::ParamEigen(y));
        }
        *uses.entry(y).or_default() += 1;
    }
    if let Some((y, _)) = uses.iter().find(|(_, &n)| n > 1) {
        return Err(FvnfError::EigenTwice(y.clone()));
    }
    match proof_free_vars(p).into_iter().find(|x| !params.contains(x) && !uses.contains_key(x)) {
        Some(x) => Err(FvnfError::NotEigen(x)),
        None => Ok(()),
    }
}

fn all_names(p: &Proof) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    for l in &p.lines {
        for f in l.conclusion.ante.iter().chain(&l.conclusion.succ) {
            out.extend(f.free_vars());
            out.extend(f.bound_vars());
        }
        match &l.data {
            RuleData::Eigen(y) => {
                out.insert(y.clone());
            }
            RuleData::Cut(f) | RuleData::Term(f) => {
                out.extend(f.free_vars());
                out.extend(f.bound_vars());
            }
            RuleData::None => {}
        }
    }
    out
}

fn fresh(base: &str, taken: &mut BTreeSet<Name>) -> Name {
    let mut s = format!("{base}'");
    while taken.contains(s.as_str()) {
        s.push('\'');
    }
    let n: Name = Name::from(s.as_str());
    taken.insert(n.clone());
    n
}

fn rename(f: &Formula, from: &str, to: &Formula) -> Formula {
    substitute(f, from, to).expect("fresh names cannot be captured")
}

/// Renames eigenvariables until the proof is in free-variable normal form.
/// The topmost offending eigen-inference is handled first: its premise
/// subtree gets a fresh copy of the variable.  Parameters are never renamed.
pub fn to_fvnf(p: &Proof) -> Result<Proof, FvnfError> {
    let out = rename_eigenvariables(p)?;
    check_fvnf(&out)?;
    Ok(out)
}

/// The renaming pass of [`to_fvnf`] without the final check: free variables
/// that are never eigenvariables are left alone.
pub fn rename_eigenvariables(p: &Proof) -> Result<Proof, FvnfError> {
    ancestry(p)?;
    let mut seen = vec![false; p.lines.len()];
    for l in &p.lines {
        for &i in &l.premises {
            if std::mem::replace(&mut seen[i], true) {
                return Err(FvnfError::NotTreelike);
            }
        }
    }
    let params = parameter_vars(p);
    let mut out = p.clone();
    let mut taken = all_names(p);
    loop {
        let eig = eigen_lines(&out);
        let mut count: BTreeMap<&Name, usize> = BTreeMap::new();
        for (_, y) in &eig {
            *count.entry(y).or_default() += 1;
        }
        let bad = |y: &Name| params.contains(y) || count[y] > 1;
        // Topmost: no other eigen-inference on the same variable above it.
        let pick = eig.iter().rev().find(|(k, y)| {
            bad(y) && {
                let above = out.subtree(out.lines[*k].premises[0]);
                !eig.iter().any(|(j, z)| j != k && z == y && above.binary_search(j).is_ok())
            }
        });
        let Some((k, y)) = pick.cloned() else { break };
        let y2 = fresh(&y, &mut taken);
        let to = Formula::var(y2.clone());
        for j in out.subtree(out.lines[k].premises[0]) {
            let line = &mut out.lines[j];
            let s = &line.conclusion;
            line.conclusion = Sequent::new(
                s.ante.iter().map(|f| rename(f, &y, &to)).collect(),
                s.succ.iter().map(|f| rename(f, &y, &to)).collect(),
            );
            line.data = match &line.data {
                RuleData::Cut(f) => RuleData::Cut(rename(f, &y, &to)),
                RuleData::Term(f) => RuleData::Term(rename(f, &y, &to)),
                d => d.clone(),
            };
        }
        out.lines[k].data = RuleData::Eigen(y2);
    }
    Ok(out)
}
