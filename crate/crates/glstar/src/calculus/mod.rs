//! Sequents, the rules of G, proofs and the checkers for G, G_i* and GL*.

mod build;
mod check;
mod fvnf;
mod text;

use std::collections::BTreeSet;
use std::fmt;

use crate::formula::{eval0, eval1, Assignment, Formula, FormulaError, Name};

pub use build::ProofBuilder;
pub use check::{
    ancestry, check_proof, check_rule, check_subformula_property, Link, Occ, RuleMatch, Side, Violation, ViolationKind,
};
pub use fvnf::{check_fvnf, rename_eigenvariables, to_fvnf, FvnfError};
pub use text::{parse_proof, parse_sequent, print_proof, ProofParseError, PROOF_HEADER};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Sequent {
    pub ante: Vec<Formula>,
    pub succ: Vec<Formula>,
}

impl Sequent {
    pub fn new(ante: Vec<Formula>, succ: Vec<Formula>) -> Self {
        Sequent { ante, succ }
    }

    pub fn side(&self, s: Side) -> &Vec<Formula> {
        match s {
            Side::Ante => &self.ante,
            Side::Succ => &self.succ,
        }
    }

    pub fn get(&self, o: Occ) -> Option<&Formula> {
        self.side(o.side).get(o.idx)
    }

    pub fn len(&self) -> usize {
        self.ante.len() + self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Occurrences in order: antecedent first.
    pub fn occurrences(&self) -> impl Iterator<Item = (Occ, &Formula)> {
        let a = self.ante.iter().enumerate().map(|(idx, f)| (Occ { side: Side::Ante, idx }, f));
        let s = self.succ.iter().enumerate().map(|(idx, f)| (Occ { side: Side::Succ, idx }, f));
        a.chain(s)
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        self.ante.iter().chain(&self.succ).flat_map(|f| f.free_vars()).collect()
    }

    pub fn occurs_free(&self, v: &str) -> bool {
        self.ante.iter().chain(&self.succ).any(|f| f.occurs_free(v))
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[Formula]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let (a, s) = (join(&self.ante), join(&self.succ));
        match (a.is_empty(), s.is_empty()) {
            (true, true) => f.write_str("|-"),
            (true, false) => write!(f, "|- {s}"),
            (false, true) => write!(f, "{a} |-"),
            (false, false) => write!(f, "{a} |- {s}"),
        }
    }
}

impl fmt::Debug for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Truth of a sequent whose formulas are Σ0 or prenex Σ1: some antecedent
/// formula is false or some succedent formula is true.
pub fn eval_sequent(a: &Assignment, s: &Sequent) -> Result<bool, FormulaError> {
    let value = |f: &Formula| -> Result<bool, FormulaError> {
        if f.is_quantifier_free() {
            eval0(a, f)
        } else {
            Ok(eval1(a, f)?.0)
        }
    };
    for f in &s.ante {
        if !value(f)? {
            return Ok(true);
        }
    }
    for f in &s.succ {
        if value(f)? {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    AxTop,
    AxBot,
    AxVar,
    WeakL,
    WeakR,
    ContrL,
    ContrR,
    ExchL,
    ExchR,
    NotL,
    NotR,
    AndL,
    AndR,
    OrL,
    OrR,
    Cut,
    ExL,
    ExR,
    AllL,
    AllR,
}

impl Rule {
    pub const ALL: [Rule; 20] = [
        Rule::AxTop,
        Rule::AxBot,
        Rule::AxVar,
        Rule::WeakL,
        Rule::WeakR,
        Rule::ContrL,
        Rule::ContrR,
        Rule::ExchL,
        Rule::ExchR,
        Rule::NotL,
        Rule::NotR,
        Rule::AndL,
        Rule::AndR,
        Rule::OrL,
        Rule::OrR,
        Rule::Cut,
        Rule::ExL,
        Rule::ExR,
        Rule::AllL,
        Rule::AllR,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::AxTop => "ax-top",
            Rule::AxBot => "ax-bot",
            Rule::AxVar => "ax-var",
            Rule::WeakL => "weak-l",
            Rule::WeakR => "weak-r",
            Rule::ContrL => "contr-l",
            Rule::ContrR => "contr-r",
            Rule::ExchL => "exch-l",
            Rule::ExchR => "exch-r",
            Rule::NotL => "not-l",
            Rule::NotR => "not-r",
            Rule::AndL => "and-l",
            Rule::AndR => "and-r",
            Rule::OrL => "or-l",
            Rule::OrR => "or-r",
            Rule::Cut => "cut",
            Rule::ExL => "ex-l",
            Rule::ExR => "ex-r",
            Rule::AllL => "all-l",
            Rule::AllR => "all-r",
        }
    }

    pub fn from_name(s: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.name() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            Rule::AxTop | Rule::AxBot | Rule::AxVar => 0,
            Rule::AndR | Rule::OrL | Rule::Cut => 2,
            _ => 1,
        }
    }

    /// Rules introducing a fresh variable.
    pub fn has_eigenvariable(self) -> bool {
        matches!(self, Rule::ExL | Rule::AllR)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleData {
    None,
    /// Cut formula.
    Cut(Formula),
    /// Eigenvariable of ex-l / all-r.
    Eigen(Name),
    /// Σ0 formula substituted by ex-r / all-l.
    Term(Formula),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inference {
    pub id: u32,
    pub rule: Rule,
    /// Indices of the premise lines within the proof.
    pub premises: Vec<usize>,
    pub data: RuleData,
    pub conclusion: Sequent,
}

/// Inference lines in topological order; the last line is the end sequent.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Proof {
    pub lines: Vec<Inference>,
    /// Declared parameter variables, if the proof states them.
    pub params: Option<Vec<Name>>,
}

impl Proof {
    pub fn final_sequent(&self) -> Option<&Sequent> {
        self.lines.last().map(|l| &l.conclusion)
    }

    /// Number of inferences.
    pub fn size(&self) -> usize {
        self.lines.len()
    }

    /// For each line, the line using it as a premise, if any (the last user
    /// when a line is used more than once).
    pub fn consumers(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.lines.len()];
        for (k, l) in self.lines.iter().enumerate() {
            for &p in &l.premises {
                out[p] = Some(k);
            }
        }
        out
    }

    /// Lines in the subtree rooted at `root` (the root included), ascending.
    pub fn subtree(&self, root: usize) -> Vec<usize> {
        let mut seen = vec![false; self.lines.len()];
        let mut stack = vec![root];
        while let Some(k) = stack.pop() {
            if !seen[k] {
                seen[k] = true;
                stack.extend(self.lines[k].premises.iter().copied());
            }
        }
        (0..self.lines.len()).filter(|&k| seen[k]).collect()
    }
}

/// Free variables of the end sequent.
pub fn parameter_vars(p: &Proof) -> BTreeSet<Name> {
    p.final_sequent().map(Sequent::free_vars).unwrap_or_default()
}

/// Proof system named by `check_proof`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum System {
    G,
    /// G_i*: treelike with Σ_i cut formulas.
    GStar(u32),
    GLStar,
}

impl std::str::FromStr for System {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "G" => Ok(System::G),
            "GL*" | "GL" => Ok(System::GLStar),
            _ => s
                .strip_prefix('G')
                .and_then(|r| r.strip_suffix('*'))
                .and_then(|n| n.parse().ok())
                .map(System::GStar)
                .ok_or_else(|| format!("unknown proof system `{s}` (expected G, G<i>* or GL*)")),
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            System::G => f.write_str("G"),
            System::GStar(i) => write!(f, "G{i}*"),
            System::GLStar => f.write_str("GL*"),
        }
    }
}
