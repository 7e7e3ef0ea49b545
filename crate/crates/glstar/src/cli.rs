//! Command-line front end.  Exit codes: 0 success, 1 a negative answer
//! (rejected proof, unsatisfiable instance, failed run), 2 a parse or
//! usage error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::arith::{edge_template, eval_arith, pair, FiniteModel, Rho4, SizeContext};
use crate::bp::{bp0, bp_compose, bp_run, bp_simplify, extract_path, path_codes, BpError, BranchingProgram};
use crate::calculus::{check_proof, parse_proof, print_proof, System};
use crate::cnf2::{lit, simplify_view, solve_cnf2, to_dimacs, Cnf2Error, Verdict};
use crate::files::{parse_arith_file, parse_cnf, parse_graph, print_formula_file, Graph};
use crate::formula::{Assignment, Name};
use crate::translate::{gen_edge_rec_proof, translate};
use crate::witnessing::{witness_proof, WitError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "glstar", version, about = "GL* proof checking, witnessing, translation and branching programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check proof files.
    Check {
        #[arg(required = true)]
        proofs: Vec<PathBuf>,
        /// G, G<i>* or GL*.
        #[arg(long, default_value = "GL*")]
        system: System,
    },
    /// Solve a CNF instance: simplify by the free variables, then run the
    /// stage-wise CNF(2) algorithm.
    Solve {
        cnf: PathBuf,
        /// Free variable values, e.g. `3=1,4=0`.
        #[arg(long, default_value = "")]
        assign: String,
    },
    /// Extract the witness of a GL* proof of `⟶ ∃z⃗ M`.
    Witness {
        proof: PathBuf,
        /// Parameter values, e.g. `x=1,y=0`.
        #[arg(long, default_value = "")]
        assign: String,
    },
    /// Translate an arithmetic formula file to a propositional formula.
    Translate {
        arith: PathBuf,
        /// Number values and string sizes, e.g. `m=2,X=3`; names starting
        /// with an upper-case letter are strings.
        #[arg(long, default_value = "")]
        ctx: String,
    },
    /// Emit a GL* proof of the edge-rec translation.
    GenProof {
        #[arg(long)]
        a: u64,
        #[arg(long)]
        b: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Branching programs.
    #[command(subcommand)]
    Bp(BpCmd),
}

#[derive(Args, Debug)]
struct Layers {
    /// Last layer of the path.
    #[arg(long)]
    b: u64,
    /// Step budget; defaults to the square of the node count.
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum BpCmd {
    /// Print the path program of a graph file.
    Build {
        graph: PathBuf,
        #[command(flatten)]
        layers: Layers,
    },
    /// Run the path program on a graph and print the path.
    Run {
        graph: PathBuf,
        #[command(flatten)]
        layers: Layers,
    },
    /// Print the path program for an edge relation `phi(i, j)` with its
    /// guards reading `--y` rewritten to single bits.
    Simplify {
        phi: PathBuf,
        #[arg(long)]
        a: u64,
        #[command(flatten)]
        layers: Layers,
        #[arg(long, default_value = "Y")]
        y: String,
    },
    /// Compose the simplified program for `phi(i, j)` with the path program
    /// of the graph computing `--y`, run it on the graph and compare with
    /// the two-stage computation.
    Compose {
        graph: PathBuf,
        phi: PathBuf,
        #[command(flatten)]
        layers: Layers,
        #[arg(long, default_value = "Y")]
        y: String,
    },
}

/// Output of a command.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { code: EXIT_OK, stdout, stderr: String::new() }
    }

    fn negative(stdout: String) -> Self {
        Outcome { code: EXIT_NEGATIVE, stdout, stderr: String::new() }
    }

    fn usage(msg: impl Into<String>) -> Self {
        let mut stderr = msg.into();
        if !stderr.ends_with('\n') {
            stderr.push('\n');
        }
        Outcome { code: EXIT_USAGE, stdout: String::new(), stderr }
    }
}

fn read(path: &Path) -> Result<String, Outcome> {
    std::fs::read_to_string(path).map_err(|e| Outcome::usage(format!("{}: {e}", path.display())))
}

/// `name=0|1,…`.
fn parse_bits(s: &str) -> Result<Vec<(String, bool)>, Outcome> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (n, v) = part.split_once('=').ok_or_else(|| Outcome::usage(format!("bad binding `{part}`")))?;
        let v = match v.trim() {
            "1" | "true" => true,
            "0" | "false" => false,
            _ => return Err(Outcome::usage(format!("bad value in `{part}`"))),
        };
        out.push((n.trim().to_string(), v));
    }
    Ok(out)
}

fn parse_ctx(s: &str) -> Result<SizeContext, Outcome> {
    let mut ctx = SizeContext::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (n, v) = part.split_once('=').ok_or_else(|| Outcome::usage(format!("bad binding `{part}`")))?;
        let (n, v) = (n.trim(), v.trim());
        let v: u64 = v.parse().map_err(|_| Outcome::usage(format!("bad number in `{part}`")))?;
        ctx = if n.starts_with(|c: char| c.is_ascii_uppercase()) { ctx.with_size(n, v) } else { ctx.with_num(n, v) };
    }
    Ok(ctx)
}

fn check(proofs: &[PathBuf], system: System) -> Outcome {
    let results: Vec<Result<Vec<String>, String>> = std::thread::scope(|s| {
        let handles: Vec<_> = proofs
            .iter()
            .map(|path| {
                s.spawn(move || {
                    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                    let p = parse_proof(&text).map_err(|e| format!("{}: {e}", path.display()))?;
                    Ok(check_proof(&p, system).iter().map(|v| v.to_string()).collect())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("checker thread")).collect()
    });
    let mut out = Outcome::default();
    for (path, r) in proofs.iter().zip(results) {
        match r {
            Err(msg) => {
                let _ = writeln!(out.stderr, "{msg}");
                out.code = EXIT_USAGE;
            }
            Ok(v) if v.is_empty() => {
                let _ = writeln!(out.stdout, "{}: ok ({system})", path.display());
            }
            Ok(v) => {
                let _ = writeln!(out.stdout, "{}: rejected ({system})", path.display());
                for line in v {
                    let _ = writeln!(out.stdout, "  {line}");
                }
                out.code = out.code.max(EXIT_NEGATIVE);
            }
        }
    }
    out
}

fn solve(path: &Path, assign: &str) -> Result<Outcome, Outcome> {
    let c = parse_cnf(&read(path)?).map_err(|e| Outcome::usage(format!("{}: {e}", path.display())))?;
    let mut a = Assignment::new();
    for (n, v) in parse_bits(assign)? {
        let k: u32 = n.parse().map_err(|_| Outcome::usage(format!("`{n}` is not a variable number")))?;
        if !c.x_vars.contains(&k) {
            return Err(Outcome::usage(format!("{k} is not a free variable of the instance")));
        }
        a.insert(c.atom(k).to_string().as_str().into(), v);
    }
    if let Some(k) = c.x_vars.iter().find(|&&k| !a.contains_key(c.atom(k).to_string().as_str())) {
        return Err(Outcome::usage(format!("free variable {k} has no value (use --assign)")));
    }
    let simple = match simplify_view(&c, &a) {
        Ok(s) => s,
        Err(Cnf2Error::EmptyClause(i)) => return Ok(Outcome::negative(format!("Unsat clause {i}\n"))),
        Err(e) => return Err(Outcome::usage(e.to_string())),
    };
    match solve_cnf2(&simple).map_err(|e| Outcome::usage(e.to_string()))?.verdict {
        Verdict::Unsat(stage) => Ok(Outcome::negative(format!("Unsat stage {stage}\n"))),
        Verdict::Sat(vals) => {
            let mut line = String::from("v");
            for &k in &c.z_vars {
                let _ = write!(line, " {}", to_dimacs(lit(k, vals.get(&k).copied().unwrap_or(false))));
            }
            Ok(Outcome::ok(format!("Sat\n{line} 0\n")))
        }
    }
}

fn witness(path: &Path, assign: &str) -> Result<Outcome, Outcome> {
    let text = read(path)?;
    let p = parse_proof(&text).map_err(|e| Outcome::usage(format!("{}: {e}", path.display())))?;
    let violations = check_proof(&p, System::GLStar);
    if !violations.is_empty() {
        let mut s = format!("{}: rejected (GL*)\n", path.display());
        for v in violations {
            let _ = writeln!(s, "  {v}");
        }
        return Ok(Outcome::negative(s));
    }
    let a: Assignment = parse_bits(assign)?.into_iter().map(|(n, v)| (Name::from(n.as_str()), v)).collect();
    let w = match witness_proof(&p, &a) {
        Ok(w) => w,
        Err(e @ WitError::Unassigned(_)) => return Err(Outcome::usage(e.to_string())),
        Err(e) => return Ok(Outcome::negative(format!("{e}\n"))),
    };
    let end = p.final_sequent().expect("checked proof has lines");
    let (vars, _) = end.succ[0].exists_prefix();
    let parts: Vec<String> =
        vars.iter().map(|v| format!("{v}={}", u8::from(w.get(v).copied().unwrap_or(false)))).collect();
    Ok(Outcome::ok(format!("{}\n", parts.join(","))))
}

fn translate_cmd(path: &Path, ctx: &str) -> Result<Outcome, Outcome> {
    let phi = parse_arith_file(&read(path)?).map_err(|e| Outcome::usage(format!("{}: {e}", path.display())))?;
    let ctx = parse_ctx(ctx)?;
    let f = translate(&phi, &ctx).map_err(|e| Outcome::usage(e.to_string()))?;
    Ok(Outcome::ok(print_formula_file(&f)))
}

fn gen_proof(a: u64, b: u64, output: Option<&Path>) -> Result<Outcome, Outcome> {
    if a > 16 || b > 16 {
        return Err(Outcome::usage("--a and --b are limited to 16"));
    }
    let text = print_proof(&gen_edge_rec_proof(a, b));
    match output {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Outcome::usage(format!("{}: {e}", path.display())))?;
            Ok(Outcome::ok(String::new()))
        }
        None => Ok(Outcome::ok(text)),
    }
}

fn graph_model(g: &Graph) -> FiniteModel {
    let a = g.a();
    let mut set = std::collections::BTreeSet::new();
    for i in 0..=a {
        for j in 0..=a {
            if g.edge(i, j) {
                set.insert(pair(i, j));
            }
        }
    }
    let mut m = FiniteModel::new(SizeContext::new());
    m.set_string("X", &set);
    m
}

fn load_graph(path: &Path) -> Result<Graph, Outcome> {
    parse_graph(&read(path)?).map_err(|e| Outcome::usage(format!("{}: {e}", path.display())))
}

fn path_text(path: &[(u64, u64, u64)]) -> String {
    path.iter().map(|(w, i, j)| format!("{w} {i} {j}\n")).collect()
}

type BpPath = Vec<(u64, u64, u64)>;

fn run_path(bp: &BranchingProgram, m: &FiniteModel, layers: &Layers) -> Result<Result<BpPath, BpError>, Outcome> {
    let steps = layers.steps.unwrap_or_else(|| bp.default_budget());
    let run = bp_run(bp, m, steps).map_err(|e| Outcome::usage(e.to_string()))?;
    Ok(extract_path(bp, &run, layers.b))
}

fn bp_cmd(cmd: &BpCmd) -> Result<Outcome, Outcome> {
    let usage = |e: BpError| Outcome::usage(e.to_string());
    match cmd {
        BpCmd::Build { graph, layers } => {
            let g = load_graph(graph)?;
            Ok(Outcome::ok(bp0(&edge_template("X"), "i", "j", g.a(), layers.b).to_string()))
        }
        BpCmd::Run { graph, layers } => {
            let g = load_graph(graph)?;
            let bp = bp0(&edge_template("X"), "i", "j", g.a(), layers.b);
            match run_path(&bp, &graph_model(&g), layers)? {
                Ok(p) => Ok(Outcome::ok(path_text(&p))),
                Err(e) => Ok(Outcome::negative(format!("{e}\n"))),
            }
        }
        BpCmd::Simplify { phi, a, layers, y } => {
            let f = parse_arith_file(&read(phi)?).map_err(|e| Outcome::usage(format!("{}: {e}", phi.display())))?;
            let s = bp_simplify(&bp0(&f, "i", "j", *a, layers.b), y).map_err(usage)?;
            Ok(Outcome::ok(s.to_string()))
        }
        BpCmd::Compose { graph, phi, layers, y } => {
            let g = load_graph(graph)?;
            let f = parse_arith_file(&read(phi)?).map_err(|e| Outcome::usage(format!("{}: {e}", phi.display())))?;
            let (a, b) = (g.a(), layers.b);
            let m = graph_model(&g);
            let inner = bp0(&edge_template("X"), "i", "j", a, b);
            let outer = bp0(&f, "i", "j", a, b);
            let composed = bp_compose(&bp_simplify(&outer, y).map_err(usage)?, &inner, y, a, b).map_err(usage)?;
            let ypath = match run_path(&inner, &m, layers)? {
                Ok(p) => p,
                Err(e) => return Ok(Outcome::negative(format!("{y}: {e}\n"))),
            };
            let mut m2 = m.clone();
            m2.set_string(y, &path_codes(&ypath));
            let staged = run_path(&outer, &m2, layers)?;
            let direct = run_path(&composed, &m, &Layers { b, steps: layers.steps })?;
            let (staged, direct) = match (staged, direct) {
                (Ok(s), Ok(d)) => (s, d),
                (Err(e), _) | (_, Err(e)) => return Ok(Outcome::negative(format!("{e}\n"))),
            };
            let mut text = path_text(&direct);
            let axiom = crate::arith::build_edge_rec(&f, "i", "j", a, b, Rho4::Guarded)
                .map_err(|e| Outcome::usage(e.to_string()))?;
            let crate::arith::AFormula::ExistsStr(_, _, matrix) = &axiom else { unreachable!() };
            m2.set_string(crate::arith::PATH, &path_codes(&direct));
            let holds = eval_arith(matrix, &m2).map_err(|e| Outcome::usage(e.to_string()))?;
            let agree = staged == direct;
            let _ = writeln!(text, "two-stage: {}", if agree { "agrees" } else { "differs" });
            let _ = writeln!(text, "edge-rec matrix: {}", if holds { "holds" } else { "fails" });
            Ok(if agree && holds { Outcome::ok(text) } else { Outcome::negative(text) })
        }
    }
}

/// Runs the command line `args` (program name first).
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome::ok(text)
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let r = match &cli.cmd {
        Cmd::Check { proofs, system } => Ok(check(proofs, *system)),
        Cmd::Solve { cnf, assign } => solve(cnf, assign),
        Cmd::Witness { proof, assign } => witness(proof, assign),
        Cmd::Translate { arith, ctx } => translate_cmd(arith, ctx),
        Cmd::GenProof { a, b, output } => gen_proof(*a, *b, output.as_deref()),
        Cmd::Bp(cmd) => bp_cmd(cmd),
    };
    r.unwrap_or_else(|e| e)
}
