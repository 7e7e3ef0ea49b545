//! Versioned text formats for formulas, arithmetic formulas, CNF instances
//! and graphs.  Proofs live in [`crate::calculus`].

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::arith::{parse_aformula, AFormula};
use crate::cnf2::{from_dimacs, to_dimacs, var_of, CnfView, Lit};
use crate::formula::{parse_formula, Formula};

pub const FORMULA_HEADER: &str = "glstar-formula v1";
pub const ARITH_HEADER: &str = "glstar-arith v1";
pub const CNF_HEADER: &str = "c glstar-cnf v1";
pub const GRAPH_HEADER: &str = "glstar-graph v1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct FileError {
    pub line: usize,
    pub msg: String,
}

fn err(line: usize, msg: impl Into<String>) -> FileError {
    FileError { line, msg: msg.into() }
}

/// Splits off the header line, which must equal `header`.
fn body<'a>(text: &'a str, header: &str) -> Result<&'a str, FileError> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    if first.trim_end() != header {
        return Err(err(1, format!("expected header `{header}`")));
    }
    Ok(rest)
}

pub fn parse_formula_file(text: &str) -> Result<Formula, FileError> {
    parse_formula(body(text, FORMULA_HEADER)?).map_err(|e| err(2, e.to_string()))
}

pub fn print_formula_file(f: &Formula) -> String {
    format!("{FORMULA_HEADER}\n{f}\n")
}

pub fn parse_arith_file(text: &str) -> Result<AFormula, FileError> {
    parse_aformula(body(text, ARITH_HEADER)?).map_err(|e| err(2, e.to_string()))
}

pub fn print_arith_file(f: &AFormula) -> String {
    format!("{ARITH_HEADER}\n{f}\n")
}

/// DIMACS-style CNF with quantified variables listed on `z` lines:
///
/// ```text
/// c glstar-cnf v1
/// p cnf2 3 2
/// z 1 2 0
/// 1 -2 3 0
/// -1 0
/// ```
///
/// Variables not listed are free.
pub fn parse_cnf(text: &str) -> Result<CnfView, FileError> {
    let rest = body(text, CNF_HEADER)?;
    let mut problem: Option<(u32, usize)> = None;
    let mut z_vars = BTreeSet::new();
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    let mut current: Vec<Lit> = Vec::new();
    let mut last = 1;
    for (k, line) in rest.lines().enumerate() {
        let n = k + 2;
        last = n;
        let line = line.trim();
        if line.is_empty() || line == "c" || line.starts_with("c ") {
            continue;
        }
        let mut words = line.split_whitespace();
        match line.split_whitespace().next() {
            Some("p") => {
                if problem.is_some() {
                    return Err(err(n, "second problem line"));
                }
                let w: Vec<&str> = words.collect();
                let [_, "cnf2", v, c] = w.as_slice() else { return Err(err(n, "expected `p cnf2 VARS CLAUSES`")) };
                let v = v.parse().map_err(|_| err(n, "bad variable count"))?;
                let c = c.parse().map_err(|_| err(n, "bad clause count"))?;
                problem = Some((v, c));
            }
            Some("z") | Some("x") => {
                let quantified = words.next() == Some("z");
                let mut closed = false;
                for w in words {
                    let v: u32 = w.parse().map_err(|_| err(n, format!("bad variable `{w}`")))?;
                    if v == 0 {
                        closed = true;
                        break;
                    }
                    if quantified {
                        z_vars.insert(v);
                    }
                }
                if !closed {
                    return Err(err(n, "variable list must end with 0"));
                }
            }
            _ => {
                if problem.is_none() {
                    return Err(err(n, "clause before the problem line"));
                }
                for w in words {
                    let d: i64 = w.parse().map_err(|_| err(n, format!("bad literal `{w}`")))?;
                    if d == 0 {
                        clauses.push(std::mem::take(&mut current));
                    } else {
                        current.push(from_dimacs(d).ok_or_else(|| err(n, format!("bad literal `{w}`")))?);
                    }
                }
            }
        }
    }
    if !current.is_empty() {
        return Err(err(last, "last clause is not terminated by 0"));
    }
    let (nv, nc) = problem.ok_or_else(|| err(last, "missing problem line"))?;
    if clauses.len() != nc {
        return Err(err(last, format!("expected {nc} clauses, found {}", clauses.len())));
    }
    let max = clauses.iter().flatten().map(|&l| var_of(l)).chain(z_vars.iter().copied()).max().unwrap_or(0);
    if max > nv {
        return Err(err(last, format!("variable {max} exceeds the declared {nv}")));
    }
    Ok(CnfView::from_clauses(clauses, z_vars))
}

pub fn print_cnf(c: &CnfView) -> String {
    let mut out = format!("{CNF_HEADER}\np cnf2 {} {}\n", c.num_vars(), c.clauses.len());
    if !c.z_vars.is_empty() {
        out.push('z');
        for v in &c.z_vars {
            let _ = write!(out, " {v}");
        }
        out.push_str(" 0\n");
    }
    for cl in &c.clauses {
        for &l in cl {
            let _ = write!(out, "{} ", to_dimacs(l));
        }
        out.push_str("0\n");
    }
    out
}

/// Square 0/1 adjacency matrix on nodes `0..=a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    pub rows: Vec<Vec<bool>>,
}

impl Graph {
    /// Largest node.
    pub fn a(&self) -> u64 {
        self.rows.len() as u64 - 1
    }

    pub fn edge(&self, i: u64, j: u64) -> bool {
        self.rows.get(i as usize).and_then(|r| r.get(j as usize)).copied().unwrap_or(false)
    }
}

pub fn parse_graph(text: &str) -> Result<Graph, FileError> {
    let rest = body(text, GRAPH_HEADER)?;
    let mut rows = Vec::new();
    for (k, line) in rest.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|w| match w {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(err(k + 2, format!("expected 0 or 1, found `{w}`"))),
            })
            .collect::<Result<Vec<bool>, FileError>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(err(1, "graph has no rows"));
    }
    if let Some(k) = rows.iter().position(|r| r.len() != rows.len()) {
        return Err(err(k + 2, format!("row has {} entries, expected {}", rows[k].len(), rows.len())));
    }
    Ok(Graph { rows })
}

pub fn print_graph(g: &Graph) -> String {
    let mut out = format!("{GRAPH_HEADER}\n");
    for r in &g.rows {
        let line: Vec<&str> = r.iter().map(|&b| if b { "1" } else { "0" }).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}
