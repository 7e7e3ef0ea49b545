//! Acceptance suite: one PASS/FAIL line per criterion, each with a time
//! limit.  Runs without the test harness so the lines are always shown.

mod common;

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use glstar::arith::{
    build_edge_rec, edge_template, eval_arith, pair, triple_term, AFormula, FiniteModel, Rho4, SizeContext, Term, PATH,
};
use glstar::bp::{bp0, bp_compose, bp_run, bp_simplify, extract_path, path_codes, BranchingProgram};
use glstar::calculus::{check_proof, System};
use glstar::cnf2::{cnf_view, is_sigma_cnf2, next, simplify_view, solve_cnf2, witness_sigma_cnf2, Verdict, Witness};
use glstar::formula::{eval0, eval1, Assignment, Name};
use glstar::oracle::{all_assignments, brute_sat, count_models, enumerate_cnf2, satisfies, BruteResult};
use glstar::translate::{edge_rec, gen_edge_rec_proof, translate};
use glstar::witnessing::{outcome_holds, PreparedProof};

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// 1. Stage solver against brute force on every small CNF(2) instance.
fn solver_correctness() -> Outcome {
    let mut n = 0;
    for c in enumerate_cnf2(4, 5) {
        n += 1;
        let brute = brute_sat(&c).map_err(|e| e.to_string())?;
        let got = solve_cnf2(&c).map_err(|e| format!("{:?}: {e}", c.clauses))?;
        match (&got.verdict, &brute) {
            (Verdict::Sat(a), BruteResult::Sat(_)) => {
                ensure(satisfies(&c, a), || format!("{:?}: assignment {a:?} fails", c.clauses))?
            }
            (Verdict::Unsat(_), BruteResult::Unsat) => {}
            _ => return Err(format!("{:?}: solver {:?}, brute force {brute:?}", c.clauses, got.verdict)),
        }
    }
    Ok(format!("{n} instances"))
}

fn complete(w: &Assignment, vars: &[Name]) -> Assignment {
    vars.iter().map(|z| (z.clone(), w.get(z).copied().unwrap_or(false))).collect()
}

/// 2. ΣCNF(2) witnessing against ⊨1.
fn sigma_witnessing() -> Outcome {
    let cat = common::sigma_cnf2_catalog();
    ensure(cat.len() >= 30, || "catalog too small".into())?;
    let mut checks = 0;
    for g in &cat {
        ensure(is_sigma_cnf2(g), || format!("{g} is not ΣCNF(2)"))?;
        let xs: Vec<Name> = g.free_vars().into_iter().collect();
        ensure(xs.len() <= 4, || format!("{g}: too many free variables"))?;
        let (zs, matrix) = g.exists_prefix();
        for a in all_assignments(&xs) {
            checks += 1;
            let truth = eval1(&a, g).map_err(|e| e.to_string())?.0;
            match witness_sigma_cnf2(g, &a).map_err(|e| e.to_string())? {
                Witness::Sat(w) => {
                    let mut full = a.clone();
                    full.extend(complete(&w, &zs));
                    ensure(truth, || format!("{g} under {a:?}: Sat but false"))?;
                    ensure(eval0(&full, &matrix).map_err(|e| e.to_string())?, || format!("{g}: bad witness {w:?}"))?;
                }
                Witness::Unsat => ensure(!truth, || format!("{g} under {a:?}: Unsat but true"))?,
            }
        }
    }
    Ok(format!("{} formulas, {checks} assignments", cat.len()))
}

/// 3. Every `next` walk closes or reaches a pure literal.
fn next_cycle() -> Outcome {
    let mut walks = 0;
    for c in enumerate_cnf2(4, 5) {
        let lits: Vec<_> = c.literals().collect();
        for &l in &lits {
            walks += 1;
            let mut cur = l;
            let mut closed = false;
            for _ in 0..lits.len() {
                if c.is_pure(cur) {
                    closed = true;
                    break;
                }
                cur = next(cur, &c).map_err(|e| e.to_string())?;
                if cur == l {
                    closed = true;
                    break;
                }
            }
            closed = closed || c.is_pure(cur);
            ensure(closed, || format!("{:?}: walk from {l} does not close", c.clauses))?;
        }
    }
    Ok(format!("{walks} walks"))
}

/// 4. Translation against the standard model.
fn translation_soundness() -> Outcome {
    let cat = common::arith_catalog();
    ensure(cat.len() >= 10, || "catalog too small".into())?;
    let mut checks = 0u64;
    for phi in &cat {
        for m in 0..=4 {
            for nx in 0..=4 {
                for ny in 0..=4 {
                    let ctx = SizeContext::new().with_num("m", m).with_size("X", nx).with_size("Y", ny);
                    let g = translate(phi, &ctx).map_err(|e| format!("{phi}: {e}"))?;
                    let fx = nx.saturating_sub(1) as usize;
                    let fy = ny.saturating_sub(1) as usize;
                    for bits in 0u32..(1 << (fx + fy)) {
                        let low: Vec<bool> = (0..fx + fy).map(|k| bits >> k & 1 == 1).collect();
                        let mut model = FiniteModel::new(ctx.clone());
                        model.set_low_bits("X", &low[..fx]).map_err(|e| e.to_string())?;
                        model.set_low_bits("Y", &low[fx..]).map_err(|e| e.to_string())?;
                        let want = eval_arith(phi, &model).map_err(|e| e.to_string())?;
                        let a = model.bit_assignment();
                        let got = if g.is_quantifier_free() { eval0(&a, &g) } else { eval1(&a, &g).map(|r| r.0) }
                            .map_err(|e| format!("{phi}: {e}"))?;
                        ensure(got == want, || format!("{phi} at m={m} |X|={nx} |Y|={ny} bits {low:?}"))?;
                        checks += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{} formulas, {checks} models", cat.len()))
}

/// 5. Edge-rec translations are ΣCNF(2) with a unique path string.
fn edge_rec_lemma() -> Outcome {
    let mut counted = 0u64;
    for a in 0..=4 {
        for b in 0..=4 {
            let e = edge_rec(a, b);
            ensure(is_sigma_cnf2(&e.formula), || format!("a={a} b={b}: not ΣCNF(2)"))?;
            if a > 3 {
                continue;
            }
            let view = cnf_view(&e.formula).map_err(|x| x.to_string())?;
            let xs: Vec<Name> = e.x_vars.iter().cloned().collect();
            for x in all_assignments(&xs) {
                let simple = simplify_view(&view, &x);
                let n = match simple {
                    Ok(s) => count_models(&s.clauses, &s.z_vars, 2),
                    Err(_) => 0,
                };
                ensure(n == 1, || format!("a={a} b={b}: {n} path strings under {x:?}"))?;
                counted += 1;
            }
        }
    }
    Ok(format!("{counted} adjacency assignments with a unique path"))
}

/// 6. Generated proofs check and stay polynomial.
fn proof_generation() -> Outcome {
    let bound = |a: u64, b: u64| ((a + 1) * (a + 1) * (a + 1) * (a + 1) * (b + 1) * (b + 1) * (b + 1) * (b + 1)) as f64;
    let c = gen_edge_rec_proof(1, 1).size() as f64 / bound(1, 1);
    let mut worst = 0.0f64;
    for a in 1..=6 {
        for b in 0..=6 {
            let p = gen_edge_rec_proof(a, b);
            let v = check_proof(&p, System::GLStar);
            ensure(v.is_empty(), || format!("a={a} b={b}: {}", v[0]))?;
            let end = p.final_sequent().expect("nonempty proof");
            ensure(end.ante.is_empty() && end.succ == [edge_rec(a, b).formula], || {
                format!("a={a} b={b}: end sequent")
            })?;
            if b == 0 {
                continue;
            }
            let ratio = p.size() as f64 / (c * bound(a, b));
            worst = worst.max(ratio);
            ensure(ratio <= 1.0, || format!("a={a} b={b}: size {} exceeds {:.0}", p.size(), c * bound(a, b)))?;
        }
    }
    Ok(format!("C = {c:.2}, largest size/bound = {worst:.3}"))
}

fn params(p: &glstar::calculus::Proof) -> Vec<Name> {
    p.final_sequent().map(|s| s.free_vars().into_iter().collect()).unwrap_or_default()
}

const ASSIGNMENT_CAP: u32 = 10;

/// Every assignment to `xs` if there are at most 2^10, otherwise 2^10 of
/// them spread over the whole space by an odd stride.
fn assignments(xs: &[Name]) -> Vec<Assignment> {
    let n = xs.len() as u32;
    if n <= ASSIGNMENT_CAP {
        return all_assignments(xs).collect();
    }
    let mask = (1u64 << n) - 1;
    (0..1u64 << ASSIGNMENT_CAP)
        .map(|k| {
            let bits = k.wrapping_mul(0x9E37_79B9_7F4A_7C15 | 1) & mask;
            xs.iter().enumerate().map(|(i, x)| (x.clone(), bits >> i & 1 == 1)).collect()
        })
        .collect()
}

/// 7. Witnessing on the proof corpus.
fn witnessing_soundness() -> Outcome {
    let mut corpus: Vec<(String, glstar::calculus::Proof)> =
        common::handcrafted().into_iter().map(|(n, p)| (n.to_string(), p)).collect();
    for (a, b) in [(0, 0), (0, 2), (1, 0), (1, 1), (1, 2), (1, 4), (2, 0), (2, 1), (2, 2), (2, 3), (3, 1)] {
        corpus.push((format!("edge-rec a={a} b={b}"), gen_edge_rec_proof(a, b)));
    }
    let mut runs = 0u64;
    for (name, p) in &corpus {
        let v = check_proof(p, System::GLStar);
        ensure(v.is_empty(), || format!("{name}: {}", v[0]))?;
        let xs = params(p);
        let end = p.final_sequent().expect("nonempty proof");
        let (zs, matrix) = end.succ[0].exists_prefix();
        let prep = PreparedProof::new(p).map_err(|e| format!("{name}: {e}"))?;
        for a in assignments(&xs) {
            let full = prep.extend(&a).map_err(|e| format!("{name}: {e}"))?;
            let outcomes = prep.witnesser(full.clone()).wit_all().map_err(|e| format!("{name}: {e}"))?;
            for (line, o) in prep.proof().lines.iter().zip(&outcomes) {
                let ok = outcome_holds(&line.conclusion, &full, o).map_err(|e| e.to_string())?;
                ensure(ok, || format!("{name}: inference {} not witnessed under {a:?}", line.id))?;
            }
            let w = prep.witness(&a).map_err(|e| format!("{name}: {e}"))?;
            let mut env = a.clone();
            env.extend(complete(&w, &zs));
            ensure(eval0(&env, &matrix).map_err(|e| e.to_string())?, || format!("{name}: witness fails under {a:?}"))?;
            runs += 1;
        }
    }
    Ok(format!("{} proofs, {runs} assignments", corpus.len()))
}

fn y_bit(w: Term, i: Term, j: Term) -> AFormula {
    AFormula::bit("Y", triple_term(w, i, j))
}

/// Edge relations over the path string `Y` of the first stage.
fn second_stage(a: u64, b: u64) -> Vec<AFormula> {
    let v = |s: &str| Term::var(s);
    let (ta, tb) = (Term::num(a), Term::num(b));
    let some_y = |i: &str, j: &str| AFormula::exists_le("w", tb.clone(), y_bit(v("w"), v(i), v(j)));
    vec![
        some_y("i", "j"),
        AFormula::and(AFormula::not(AFormula::bit2("X", v("i"), v("j"))), some_y("j", "i")),
        AFormula::or(
            AFormula::bit2("X", v("i"), v("j")),
            AFormula::forall_le("w", tb.clone(), AFormula::not(y_bit(v("w"), v("i"), v("j")))),
        ),
        y_bit(Term::num(0), v("i"), v("j")),
        AFormula::exists_le(
            "w",
            tb.clone(),
            AFormula::exists_le(
                "k",
                ta,
                AFormula::and(y_bit(v("w"), v("i"), v("k")), AFormula::bit2("X", v("k"), v("j"))),
            ),
        ),
        AFormula::bit2("X", v("i"), v("j")),
    ]
}

fn run_to_path(bp: &BranchingProgram, m: &FiniteModel, b: u64) -> Result<Vec<(u64, u64, u64)>, String> {
    let run = bp_run(bp, m, bp.default_budget()).map_err(|e| e.to_string())?;
    extract_path(bp, &run, b).map_err(|e| e.to_string())
}

/// 8. Composition against the two-stage pipeline.
fn bp_composition() -> Outcome {
    let mut runs = 0;
    for a in 0..=1u64 {
        let cells: Vec<(u64, u64)> = (0..=a).flat_map(|i| (0..=a).map(move |j| (i, j))).collect();
        for b in 0..=2 {
            let first = bp0(&edge_template("X"), "i", "j", a, b);
            for phi in second_stage(a, b) {
                let simple = bp_simplify(&bp0(&phi, "i", "j", a, b), "Y").map_err(|e| e.to_string())?;
                let composed = bp_compose(&simple, &first, "Y", a, b).map_err(|e| e.to_string())?;
                let staged = bp0(&phi, "i", "j", a, b);
                let axiom = build_edge_rec(&phi, "i", "j", a, b, Rho4::Guarded).map_err(|e| e.to_string())?;
                let AFormula::ExistsStr(_, _, matrix) = &axiom else { unreachable!() };
                for mask in 0u32..(1 << cells.len()) {
                    let edges: BTreeSet<u64> = cells
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| mask >> k & 1 == 1)
                        .map(|(_, &(i, j))| pair(i, j))
                        .collect();
                    let mut m = FiniteModel::new(SizeContext::new());
                    m.set_string("X", &edges);
                    let ypath = run_to_path(&first, &m, b)?;
                    let mut m2 = m.clone();
                    m2.set_string("Y", &path_codes(&ypath));
                    let two_stage = run_to_path(&staged, &m2, b)?;
                    let direct = run_to_path(&composed, &m, b)?;
                    ensure(two_stage == direct, || {
                        format!("{phi} a={a} b={b} edges {edges:?}: {direct:?} vs {two_stage:?}")
                    })?;
                    for z in [&two_stage, &direct] {
                        let mut m3 = m2.clone();
                        m3.set_string(PATH, &path_codes(z));
                        ensure(eval_arith(matrix, &m3).map_err(|e| e.to_string())?, || {
                            format!("{phi} a={a} b={b} edges {edges:?}: matrix fails")
                        })?;
                    }
                    runs += 1;
                }
            }
        }
    }
    Ok(format!("{runs} graph/formula/length cases"))
}

/// 9. The checker rejects each negative fixture with exit code 1.
fn negative_suite() -> Outcome {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let mut seen = Vec::new();
    for name in ["neg_cut_not_sigma_cnf2.proof", "neg_cut_nonparameter.proof", "neg_eigenvariable.proof"] {
        let out = Command::new(env!("CARGO_BIN_EXE_glstar"))
            .arg("check")
            .arg(dir.join(name))
            .output()
            .map_err(|e| e.to_string())?;
        let stdout = String::from_utf8_lossy(&out.stdout).to_string();
        ensure(out.status.code() == Some(1), || format!("{name}: exit {:?}: {stdout}", out.status.code()))?;
        seen.push(stdout.lines().nth(1).unwrap_or("").trim().to_string());
    }
    Ok(seen.join(" | "))
}

fn main() {
    let criteria: [(&str, u64, Criterion); 9] = [
        ("1 CNF(2) solver vs brute force", 60, solver_correctness),
        ("2 ΣCNF(2) witnessing", 30, sigma_witnessing),
        ("3 next-cycle walks", 30, next_cycle),
        ("4 translation soundness", 60, translation_soundness),
        ("5 edge-rec uniqueness", 120, edge_rec_lemma),
        ("6 edge-rec proof generation", 120, proof_generation),
        ("7 witnessing soundness", 120, witnessing_soundness),
        ("8 branching-program composition", 60, bp_composition),
        ("9 negative proof fixtures", 60, negative_suite),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let r = run();
        let t = start.elapsed();
        let within = t <= Duration::from_secs(limit);
        let (tag, detail) = match (&r, within) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; over the {limit} s limit")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("{tag} criterion {name} [{:.1} s / {limit} s]: {detail}", t.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
