//! Proof and sequent text format.
//!
//! ```text
//! glstar-proof v1
//! params x
//! 1 ax-var :: x |- x
//! 2 weak-r 1 :: x |- x, y
//! ```
//!
//! Each line is `ID RULE PREMISE_IDS [DATA] :: SEQUENT`.  DATA is the cut
//! formula for `cut`, the eigenvariable for `ex-l`/`all-r` and the
//! substituted formula for `ex-r`/`all-l`.  `#` starts a comment.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{Inference, Proof, Rule, RuleData, Sequent};
use crate::formula::{read_formula, Formula, FormulaError, Interner, Name};
use crate::lexer::{is_ident, tokenize, Cursor, Tok};

pub const PROOF_HEADER: &str = "glstar-proof v1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct ProofParseError {
    pub line: usize,
    pub msg: String,
}

fn read_sequent(cur: &mut Cursor<'_>, interner: &mut Interner) -> Result<Sequent, FormulaError> {
    let mut read_side = |cur: &mut Cursor<'_>, stop_at_turnstile: bool| -> Result<Vec<Formula>, FormulaError> {
        let mut out = Vec::new();
        loop {
            match cur.peek() {
                None => return Ok(out),
                Some(Tok::Turnstile) if stop_at_turnstile => return Ok(out),
                _ => {}
            }
            out.push(read_formula(cur, interner, &mut Vec::new())?);
            match cur.peek() {
                Some(Tok::Comma) => {
                    cur.next();
                }
                _ => return Ok(out),
            }
        }
    };
    let ante = read_side(cur, true)?;
    cur.expect(&Tok::Turnstile)?;
    let succ = read_side(cur, false)?;
    cur.finish()?;
    Ok(Sequent::new(ante, succ))
}

/// Reads `F, F |- F, F`; either side may be empty.
pub fn parse_sequent(text: &str) -> Result<Sequent, FormulaError> {
    let toks = tokenize(text)?;
    read_sequent(&mut Cursor::new(&toks, text.len()), &mut Interner::new())
}

pub fn parse_proof(text: &str) -> Result<Proof, ProofParseError> {
    let mut interner = Interner::new();
    let mut ids: HashMap<u32, usize> = HashMap::new();
    let mut proof = Proof::default();
    let mut header_seen = false;
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let err = |msg: String| ProofParseError { line: line_no, msg };
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if !header_seen {
            if line != PROOF_HEADER {
                return Err(err(format!("expected header `{PROOF_HEADER}`")));
            }
            header_seen = true;
            continue;
        }
        if let Some(rest) = line.strip_prefix("params") {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                if proof.params.is_some() || !proof.lines.is_empty() {
                    return Err(err("`params` must appear once, before the first inference".into()));
                }
                let names: Vec<Name> = rest.split_whitespace().map(Name::from).collect();
                if let Some(bad) = names.iter().find(|v| !is_ident(v)) {
                    return Err(err(format!("`{bad}` is not a variable name")));
                }
                proof.params = Some(names);
                continue;
            }
        }
        let (head, seq_text) = line.split_once("::").ok_or_else(|| err("missing `::` before the sequent".into()))?;
        let mut words = head.split_whitespace();
        let id_text = words.next().ok_or_else(|| err("missing inference id".into()))?;
        let id: u32 = id_text.parse().map_err(|_| err(format!("bad inference id `{id_text}`")))?;
        if ids.contains_key(&id) {
            return Err(err(format!("duplicate inference id {id}")));
        }
        let rule_text = words.next().ok_or_else(|| err("missing rule name".into()))?;
        let rule = Rule::from_name(rule_text).ok_or_else(|| err(format!("unknown rule `{rule_text}`")))?;
        let rest: String = words.collect::<Vec<_>>().join(" ");
        let toks = tokenize(&rest).map_err(|e| err(e.to_string()))?;
        let mut cur = Cursor::new(&toks, rest.len());
        let mut premises = Vec::new();
        while let Some(Tok::Number(p)) = cur.peek() {
            cur.next();
            let p = u32::try_from(*p).map_err(|_| err(format!("bad premise id {p}")))?;
            let idx = *ids.get(&p).ok_or_else(|| err(format!("premise {p} is not defined above")))?;
            premises.push(idx);
        }
        let data = match rule {
            Rule::Cut | Rule::ExR | Rule::AllL => {
                let f = read_formula(&mut cur, &mut interner, &mut Vec::new()).map_err(|e| err(e.to_string()))?;
                if rule == Rule::Cut {
                    RuleData::Cut(f)
                } else {
                    RuleData::Term(f)
                }
            }
            Rule::ExL | Rule::AllR => {
                let y = cur.ident().map_err(|e| err(e.to_string()))?;
                RuleData::Eigen(Name::from(y))
            }
            _ => RuleData::None,
        };
        cur.finish().map_err(|e| err(e.to_string()))?;
        if premises.len() != rule.arity() {
            return Err(err(format!("{rule} takes {} premise(s), found {}", rule.arity(), premises.len())));
        }
        let seq_toks = tokenize(seq_text).map_err(|e| err(e.to_string()))?;
        let conclusion =
            read_sequent(&mut Cursor::new(&seq_toks, seq_text.len()), &mut interner).map_err(|e| err(e.to_string()))?;
        ids.insert(id, proof.lines.len());
        proof.lines.push(Inference { id, rule, premises, data, conclusion });
    }
    if !header_seen {
        return Err(ProofParseError { line: 1, msg: format!("expected header `{PROOF_HEADER}`") });
    }
    if proof.lines.is_empty() {
        return Err(ProofParseError { line: text.lines().count().max(1), msg: "proof has no inferences".into() });
    }
    Ok(proof)
}

pub fn print_proof(p: &Proof) -> String {
    let mut out = String::new();
    out.push_str(PROOF_HEADER);
    out.push('\n');
    if let Some(ps) = &p.params {
        out.push_str("params");
        for v in ps {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    for l in &p.lines {
        let _ = write!(out, "{} {}", l.id, l.rule);
        for &i in &l.premises {
            let _ = write!(out, " {}", p.lines[i].id);
        }
        match &l.data {
            RuleData::None => {}
            RuleData::Cut(f) | RuleData::Term(f) => {
                let _ = write!(out, " {f}");
            }
            RuleData::Eigen(y) => {
                let _ = write!(out, " {y}");
            }
        }
        let _ = writeln!(out, " :: {}", l.conclusion);
    }
    out
}
