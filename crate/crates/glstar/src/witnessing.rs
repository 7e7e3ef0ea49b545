//! Witness extraction from GL* proofs.
//!
//! [`extend_assignment`] gives every eigenvariable the value that the
//! witness of its cut formula gives the matching bound variable.  A
//! [`Witnesser`] then finds, for each sequent, a false antecedent formula
//! or a witnessed succedent formula.

use std::borrow::Cow;
use std::collections::{BTreeSet, HashMap};

use crate::calculus::{
    ancestry, check_fvnf, parameter_vars, rename_eigenvariables, FvnfError, Link, Occ, Proof, Rule, RuleData,
    RuleMatch, Sequent, Violation,
};
use crate::cnf2::{is_sigma_cnf2, witness_sigma_cnf2, Cnf2Error, Witness};
use crate::formula::{eval0, Assignment, Formula, FormulaError, Kind, Name};
use crate::oracle::qbf_eval;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WitError {
    #[error("parameter `{0}` has no value")]
    Unassigned(Name),
    #[error("inference {id}: {msg}")]
    Structure { id: u32, msg: String },
    #[error("end sequent must be `|- F` with F a Σ1 formula")]
    Shape,
    #[error("no formula of inference {id} is satisfied; the proof is unsound")]
    NoWitness { id: u32 },
    #[error(transparent)]
    Rule(#[from] Violation),
    #[error(transparent)]
    Fvnf(#[from] FvnfError),
    #[error(transparent)]
    Cnf2(#[from] Cnf2Error),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessOutcome {
    /// Antecedent position of a false formula.
    FalseInGamma(usize),
    /// Succedent position of a true formula and values for its leading
    /// existential variables.
    Witnessed(usize, Assignment),
}

fn all_free_vars(p: &Proof) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    for l in &p.lines {
        out.extend(l.conclusion.free_vars());
        match &l.data {
            RuleData::Cut(f) | RuleData::Term(f) => out.extend(f.free_vars()),
            RuleData::Eigen(y) => {
                out.insert(y.clone());
            }
            RuleData::None => {}
        }
    }
    out
}

fn premise_index(p: &Proof, consumer: usize, line: usize) -> usize {
    p.lines[consumer].premises.iter().position(|&q| q == line).expect("consumer lists the line")
}

/// The assignment-independent part of [`extend_assignment`]: parameters,
/// all free variables, and for each ex-l eigenvariable its bound variable
/// and the cut formula its principal formula descends to.
struct Extension {
    params: BTreeSet<Name>,
    free: BTreeSet<Name>,
    sources: Vec<(Name, Name, Option<Formula>)>,
}

impl Extension {
    fn new(p: &Proof, matches: &[RuleMatch]) -> Result<Self, WitError> {
        let consumers = p.consumers();
        let last = p.lines.len().saturating_sub(1);
        let mut sources = Vec::new();
        for (k, l) in p.lines.iter().enumerate() {
            let (Rule::ExL, RuleData::Eigen(y)) = (l.rule, &l.data) else { continue };
            let occ = matches[k].principal.expect("ex-l has a principal formula");
            let Kind::Exists(z, _) = l.conclusion.get(occ).expect("principal occurrence").kind() else {
                unreachable!("checked ex-l principal is ∃")
            };
            let (mut line, mut o) = (k, occ);
            let cut = loop {
                let Some(c) = consumers[line] else {
                    if line == last {
                        break None;
                    }
                    return Err(WitError::Structure {
                        id: l.id,
                        msg: "principal formula has no cut descendant and does not reach the end sequent".into(),
                    });
                };
                match matches[c].descendant(&p.lines[line].conclusion, premise_index(p, c, line), o) {
                    Link::Cut => break Some(p.lines[line].conclusion.get(o).expect("cut occurrence").clone()),
                    Link::To(next) => (line, o) = (c, next),
                }
            };
            sources.push((y.clone(), z.clone(), cut));
        }
        Ok(Extension { params: parameter_vars(p), free: all_free_vars(p), sources })
    }

    fn apply(&self, a: &Assignment) -> Result<Assignment, WitError> {
        let mut out = Assignment::new();
        for x in &self.params {
            let v = *a.get(x).ok_or_else(|| WitError::Unassigned(x.clone()))?;
            out.insert(x.clone(), v);
        }
        for x in &self.free {
            out.entry(x.clone()).or_insert(false);
        }
        let base = out.clone();
        let mut cache: HashMap<&Formula, Witness> = HashMap::new();
        for (y, z, cut) in &self.sources {
            let value = match cut {
                None => false,
                Some(f) => {
                    if !cache.contains_key(f) {
                        cache.insert(f, witness_sigma_cnf2(f, &base)?);
                    }
                    match &cache[f] {
                        Witness::Sat(w) => w.get(z).copied().unwrap_or(false),
                        Witness::Unsat => false,
                    }
                }
            };
            out.insert(y.clone(), value);
        }
        Ok(out)
    }
}

/// Extends an assignment to the parameters of `p` to all its free variables.
/// Eigenvariables of ex-l take their value from the witness of the cut
/// formula their principal formula descends to; all other non-parameter
/// variables are false.  `p` must be in free-variable normal form.
pub fn extend_assignment(p: &Proof, a: &Assignment) -> Result<Assignment, WitError> {
    match check_fvnf(p) {
        Ok(()) | Err(FvnfError::NotEigen(_)) => {}
        Err(e) => return Err(e.into()),
    }
    let matches = ancestry(p)?;
    Extension::new(p, &matches)?.apply(a)
}

/// Premise line, succedent position and the ex-r substitution (if any) of
/// an ancestor of a succedent formula.
type Source = (usize, usize, Option<(Name, Formula)>);

/// Per-sequent witnessing under a fixed extended assignment.
pub struct Witnesser<'p> {
    proof: &'p Proof,
    matches: Vec<RuleMatch>,
    a: Assignment,
    truth: HashMap<Formula, bool>,
    sigma: HashMap<Formula, Witness>,
    inst: HashMap<(usize, usize), Option<Assignment>>,
}

impl<'p> Witnesser<'p> {
    /// `a` must be total on the free variables of `p`, as returned by
    /// [`extend_assignment`].
    pub fn new(proof: &'p Proof, a: Assignment) -> Result<Self, WitError> {
        let matches = ancestry(proof)?;
        Ok(Self::with_matches(proof, matches, a))
    }

    fn with_matches(proof: &'p Proof, matches: Vec<RuleMatch>, a: Assignment) -> Self {
        Witnesser { proof, matches, a, truth: HashMap::new(), sigma: HashMap::new(), inst: HashMap::new() }
    }

    pub fn assignment(&self) -> &Assignment {
        &self.a
    }

    fn antecedent_truth(&mut self, f: &Formula) -> Result<bool, WitError> {
        if f.is_quantifier_free() {
            return Ok(eval0(&self.a, f)?);
        }
        if let Some(&t) = self.truth.get(f) {
            return Ok(t);
        }
        let t =
            if is_sigma_cnf2(f) { matches!(self.sigma_witness(f)?, Witness::Sat(_)) } else { qbf_eval(&self.a, f)? };
        self.truth.insert(f.clone(), t);
        Ok(t)
    }

    fn sigma_witness(&mut self, f: &Formula) -> Result<Witness, WitError> {
        if let Some(w) = self.sigma.get(f) {
            return Ok(w.clone());
        }
        let w = witness_sigma_cnf2(f, &self.a)?;
        self.sigma.insert(f.clone(), w.clone());
        Ok(w)
    }

    /// Premise succedent occurrences that are ancestors of succedent `j` of
    /// `line` and whose instances are instances of its matrix: the same
    /// formula passed down, or the auxiliary formula of an ex-r on it.
    fn instance_sources(&self, line: usize, j: usize) -> Vec<Source> {
        let inf = &self.proof.lines[line];
        let f = &inf.conclusion.succ[j];
        let m = &self.matches[line];
        let mut out = Vec::new();
        for (k, &prem) in inf.premises.iter().enumerate() {
            let ps = &self.proof.lines[prem].conclusion;
            for q in 0..ps.succ.len() {
                if m.descendant(ps, k, Occ::succ(q)) != Link::To(Occ::succ(j)) {
                    continue;
                }
                if &ps.succ[q] == f {
                    out.push((prem, q, None));
                } else if inf.rule == Rule::ExR && m.principal == Some(Occ::succ(j)) {
                    if let (RuleData::Term(b), Kind::Exists(z, _)) = (&inf.data, f.kind()) {
                        out.push((prem, q, Some((z.clone(), b.clone()))));
                    }
                }
            }
        }
        out
    }

    /// Values for the leading ∃ variables of succedent `j` of `line` read
    /// off a true quantifier-free ancestor instance of its matrix.
    fn instance_witness(&mut self, line: usize, j: usize) -> Result<Option<Assignment>, WitError> {
        let mut stack = vec![(line, j)];
        while let Some(&(l, q)) = stack.last() {
            if self.inst.contains_key(&(l, q)) {
                stack.pop();
                continue;
            }
            let f = &self.proof.lines[l].conclusion.succ[q];
            if f.is_quantifier_free() {
                let v = eval0(&self.a, f)?.then(Assignment::new);
                self.inst.insert((l, q), v);
                stack.pop();
                continue;
            }
            let sources = self.instance_sources(l, q);
            let pending: Vec<(usize, usize)> =
                sources.iter().map(|s| (s.0, s.1)).filter(|key| !self.inst.contains_key(key)).collect();
            if !pending.is_empty() {
                stack.extend(pending);
                continue;
            }
            let mut found = None;
            for (prem, pq, step) in sources {
                if let Some(w) = &self.inst[&(prem, pq)] {
                    let mut w = w.clone();
                    if let Some((z, b)) = step {
                        w.insert(z, eval0(&self.a, &b)?);
                    }
                    found = Some(w);
                    break;
                }
            }
            self.inst.insert((l, q), found);
            stack.pop();
        }
        Ok(self.inst[&(line, j)].clone())
    }

    /// Outcome for the sequent of line `i`.
    pub fn wit(&mut self, i: usize) -> Result<WitnessOutcome, WitError> {
        let proof = self.proof;
        let s = &proof.lines[i].conclusion;
        for (pos, f) in s.ante.iter().enumerate() {
            if !self.antecedent_truth(f)? {
                return Ok(WitnessOutcome::FalseInGamma(pos));
            }
        }
        for (pos, f) in s.succ.iter().enumerate() {
            if f.is_quantifier_free() {
                if eval0(&self.a, f)? {
                    return Ok(WitnessOutcome::Witnessed(pos, Assignment::new()));
                }
                continue;
            }
            if is_sigma_cnf2(f) {
                if let Witness::Sat(w) = self.sigma_witness(f)? {
                    return Ok(WitnessOutcome::Witnessed(pos, w));
                }
                continue;
            }
            let (vars, matrix) = f.exists_prefix();
            if !matrix.is_quantifier_free() {
                continue;
            }
            if let Some(found) = self.instance_witness(i, pos)? {
                let w: Assignment = vars.iter().map(|z| (z.clone(), found.get(z).copied().unwrap_or(false))).collect();
                let mut full = self.a.clone();
                full.extend(w.iter().map(|(k, v)| (k.clone(), *v)));
                if eval0(&full, &matrix)? {
                    return Ok(WitnessOutcome::Witnessed(pos, w));
                }
            }
        }
        Err(WitError::NoWitness { id: proof.lines[i].id })
    }

    /// Outcomes for every line, in line order.
    pub fn wit_all(&mut self) -> Result<Vec<WitnessOutcome>, WitError> {
        (0..self.proof.lines.len()).map(|i| self.wit(i)).collect()
    }
}

/// Outcome of line `i` of `p` under the extended assignment `a_prime`.
pub fn wit(i: usize, p: &Proof, a_prime: &Assignment) -> Result<WitnessOutcome, WitError> {
    Witnesser::new(p, a_prime.clone())?.wit(i)
}

/// Whether `o` really satisfies `s` under `a`: the reported antecedent
/// formula is false, or the reported succedent formula's matrix is true
/// under `a` overridden by the witness.
pub fn outcome_holds(s: &Sequent, a: &Assignment, o: &WitnessOutcome) -> Result<bool, FormulaError> {
    match o {
        WitnessOutcome::FalseInGamma(pos) => match s.ante.get(*pos) {
            Some(f) => Ok(!qbf_eval(a, f)?),
            None => Ok(false),
        },
        WitnessOutcome::Witnessed(pos, w) => {
            let Some(f) = s.succ.get(*pos) else { return Ok(false) };
            let (vars, matrix) = f.exists_prefix();
            let mut full = a.clone();
            for z in &vars {
                full.insert(z.clone(), w.get(z).copied().unwrap_or(false));
            }
            qbf_eval(&full, &matrix)
        }
    }
}

fn normal_form(p: &Proof) -> Result<Cow<'_, Proof>, WitError> {
    match check_fvnf(p) {
        Ok(()) | Err(FvnfError::NotEigen(_)) => Ok(Cow::Borrowed(p)),
        Err(FvnfError::EigenTwice(_) | FvnfError::ParamEigen(_)) => Ok(Cow::Owned(rename_eigenvariables(p)?)),
        Err(e) => Err(e.into()),
    }
}

/// A proof in free-variable normal form with its ancestry computed once,
/// for witnessing under many assignments.
pub struct PreparedProof<'p> {
    proof: Cow<'p, Proof>,
    matches: Vec<RuleMatch>,
    ext: Extension,
}

impl<'p> PreparedProof<'p> {
    /// Renames eigenvariables first if `p` is not in free-variable normal
    /// form.
    pub fn new(p: &'p Proof) -> Result<Self, WitError> {
        let proof = normal_form(p)?;
        let matches = ancestry(&proof)?;
        let ext = Extension::new(&proof, &matches)?;
        Ok(PreparedProof { proof, matches, ext })
    }

    /// The proof being witnessed (renamed if needed).
    pub fn proof(&self) -> &Proof {
        &self.proof
    }

    /// [`extend_assignment`] on the prepared proof.
    pub fn extend(&self, a: &Assignment) -> Result<Assignment, WitError> {
        self.ext.apply(a)
    }

    /// A [`Witnesser`] under an extended assignment.
    pub fn witnesser(&self, a_prime: Assignment) -> Witnesser<'_> {
        Witnesser::with_matches(&self.proof, self.matches.clone(), a_prime)
    }

    /// [`witness_proof`] on the prepared proof.
    pub fn witness(&self, a: &Assignment) -> Result<Assignment, WitError> {
        let end = self.proof.final_sequent().ok_or(WitError::Shape)?;
        let [f] = end.succ.as_slice() else { return Err(WitError::Shape) };
        let (vars, matrix) = f.exists_prefix();
        if !end.ante.is_empty() || !matrix.is_quantifier_free() {
            return Err(WitError::Shape);
        }
        let mut w = self.witnesser(self.extend(a)?);
        match w.wit(self.proof.lines.len() - 1)? {
            WitnessOutcome::Witnessed(_, found) => {
                Ok(vars.iter().map(|z| (z.clone(), found.get(z).copied().unwrap_or(false))).collect())
            }
            WitnessOutcome::FalseInGamma(_) => unreachable!("end antecedent is empty"),
        }
    }
}

/// Values for the leading ∃ variables of the end formula of a proof of
/// `|- ∃z⃗ P`, given values for its parameters.  Eigenvariables are renamed
/// first if the proof is not in free-variable normal form.
pub fn witness_proof(p: &Proof, a: &Assignment) -> Result<Assignment, WitError> {
    let end = p.final_sequent().ok_or(WitError::Shape)?;
    let [f] = end.succ.as_slice() else { return Err(WitError::Shape) };
    if !end.ante.is_empty() || !f.exists_prefix().1.is_quantifier_free() {
        return Err(WitError::Shape);
    }
    PreparedProof::new(p)?.witness(a)
}
