#![allow(dead_code)]

use glstar::arith::{parse_aformula, AFormula};
use glstar::calculus::{Proof, ProofBuilder};
use glstar::formula::{parse_formula, Formula, Kind, Name};

pub fn f(s: &str) -> Formula {
    parse_formula(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

pub fn af(s: &str) -> AFormula {
    parse_aformula(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

/// Proves `ante ⟶ succ` exactly, decomposing ¬, ∧, ∨ and closing with an
/// axiom plus weakenings.  Quantified formulas are never decomposed.
/// `None` if some branch has no axiom.
pub fn prove(b: &mut ProofBuilder, ante: &[Formula], succ: &[Formula]) -> Option<usize> {
    for (i, g) in succ.iter().enumerate() {
        match g.kind() {
            Kind::Not(x) => {
                let mut a2 = ante.to_vec();
                a2.push(x.clone());
                let mut s2 = succ.to_vec();
                s2.remove(i);
                let p = prove(b, &a2, &s2)?;
                return Some(b.not_r(p, ante.len(), i));
            }
            Kind::Or(x, y) => {
                let mut s2 = succ.to_vec();
                s2.splice(i..=i, [x.clone(), y.clone()]);
                let p = prove(b, ante, &s2)?;
                return Some(b.or_r(p, i));
            }
            Kind::And(x, y) => {
                let mut s1 = succ.to_vec();
                s1[i] = x.clone();
                let mut s2 = succ.to_vec();
                s2[i] = y.clone();
                let p1 = prove(b, ante, &s1)?;
                let p2 = prove(b, ante, &s2)?;
                return Some(b.and_r(p1, p2, i));
            }
            _ => {}
        }
    }
    for (i, g) in ante.iter().enumerate() {
        match g.kind() {
            Kind::Not(x) => {
                let mut a2 = ante.to_vec();
                a2.remove(i);
                let mut s2 = succ.to_vec();
                s2.push(x.clone());
                let p = prove(b, &a2, &s2)?;
                return Some(b.not_l(p, succ.len(), i));
            }
            Kind::And(x, y) => {
                let mut a2 = ante.to_vec();
                a2.splice(i..=i, [x.clone(), y.clone()]);
                let p = prove(b, &a2, succ)?;
                return Some(b.and_l(p, i));
            }
            Kind::Or(x, y) => {
                let mut a1 = ante.to_vec();
                a1[i] = x.clone();
                let mut a2 = ante.to_vec();
                a2[i] = y.clone();
                let p1 = prove(b, &a1, succ)?;
                let p2 = prove(b, &a2, succ)?;
                return Some(b.or_l(p1, p2, i));
            }
            _ => {}
        }
    }
    // Atoms only.
    let (mut p, ka, ks) = if let Some(k) = succ.iter().position(|g| *g == Formula::top()) {
        (b.ax_top(), None, Some(k))
    } else if let Some(k) = ante.iter().position(|g| *g == Formula::bot()) {
        (b.ax_bot(), Some(k), None)
    } else {
        let (ka, ks) = ante.iter().enumerate().find_map(|(ka, g)| {
            matches!(g.kind(), Kind::Var(_)).then(|| succ.iter().position(|h| h == g).map(|ks| (ka, ks))).flatten()
        })?;
        let Kind::Var(x) = ante[ka].kind() else { unreachable!() };
        (b.ax_var(x.clone()), Some(ka), Some(ks))
    };
    for (idx, g) in ante.iter().enumerate() {
        if Some(idx) != ka {
            p = b.weak_l(p, idx, g.clone());
        }
    }
    for (idx, g) in succ.iter().enumerate() {
        if Some(idx) != ks {
            p = b.weak_r(p, idx, g.clone());
        }
    }
    Some(p)
}

/// `⟶ target` for `target = ∃z⃗ M` by instantiating with `terms`.
pub fn prove_exists(b: &mut ProofBuilder, ante: &[Formula], target: &Formula, terms: &[(&str, Formula)]) -> usize {
    let (vars, _) = target.exists_prefix();
    assert_eq!(vars.len(), terms.len());
    let mut inst = target.clone();
    for (z, t) in terms {
        let Kind::Exists(_, body) = inst.kind() else { unreachable!() };
        inst = glstar::formula::substitute(body, z, t).unwrap();
    }
    let p = prove(b, ante, &[inst]).unwrap_or_else(|| panic!("instance of {target} is not a tautology"));
    let subst: Vec<(Name, Formula)> = terms.iter().map(|(z, t)| (Name::from(*z), t.clone())).collect();
    b.ex_r_chain(p, 0, target, &subst)
}

/// Replaces the antecedent formula at `pos` (an instance with eigenvariables
/// `eigens`) by the ∃ formula `target`.
pub fn open_exists(b: &mut ProofBuilder, p: usize, pos: usize, target: &Formula, eigens: &[(&str, &str)]) -> usize {
    let e: Vec<(Name, Name)> = eigens.iter().map(|(z, y)| (Name::from(*z), Name::from(*y))).collect();
    b.ex_l_chain(p, pos, target, &e)
}

/// `Γ ⟶ G` from `Γ ⟶ C` and `C, Γ ⟶ G` by a cut on `C`.
pub fn cut_lemma(b: &mut ProofBuilder, lemma: usize, use_: usize, g: &Formula) -> usize {
    let lemma = b.weak_r(lemma, 0, g.clone());
    b.cut(lemma, 1, use_, 0)
}

fn instance(f: &Formula, subst: &[(&str, Formula)]) -> Formula {
    let mut inst = f.clone();
    for (z, t) in subst {
        let Kind::Exists(_, body) = inst.kind() else { unreachable!() };
        inst = glstar::formula::substitute(body, z, t).unwrap();
    }
    inst
}

fn var(s: &str) -> Formula {
    Formula::var(s)
}

/// Handcrafted GL* proofs, each of `⟶ ∃z⃗ M` with `M` quantifier-free.
pub fn handcrafted() -> Vec<(&'static str, Proof)> {
    let mut out = Vec::new();

    // 1. ⟶ ∃z z.
    let mut b = ProofBuilder::new();
    prove_exists(&mut b, &[], &f("(exists z z)"), &[("z", Formula::top())]);
    out.push(("exists_top", b.finish()));

    // 2. z ↔ x.
    let iff = f("(exists z (and (or z (not x)) (or (not z) x)))");
    let mut b = ProofBuilder::new();
    prove_exists(&mut b, &[], &iff, &[("z", var("x"))]);
    out.push(("iff", b.finish()));

    // 3. Witness term is a free non-parameter variable.
    let mut b = ProofBuilder::new();
    prove_exists(&mut b, &[], &f("(exists z (or z (not z)))"), &[("z", var("w"))]);
    out.push(("free_term", b.finish()));

    // 4. z ↔ ¬x.
    let mut b = ProofBuilder::new();
    prove_exists(&mut b, &[], &f("(exists z (and (or z x) (or (not z) (not x))))"), &[("z", f("(not x)"))]);
    out.push(("iff_not", b.finish()));

    // 5. Two variables, compound terms.
    let g = f("(exists z1 (exists z2 (and (or z1 z2) (or (not z1) (not z2)))))");
    let mut b = ProofBuilder::new();
    prove_exists(&mut b, &[], &g, &[("z1", var("x")), ("z2", f("(not x)"))]);
    out.push(("two_vars", b.finish()));

    // 6. z ↔ x ∧ y.
    let g = f("(exists z (and (or z (or (not x) (not y))) (and (or (not z) x) (or (not z) y))))");
    let mut b = ProofBuilder::new();
    prove_exists(&mut b, &[], &g, &[("z", f("(and x y)"))]);
    out.push(("and_gate", b.finish()));

    // 7. Cut on a ΣCNF(2) lemma opened by ex-l; the eigenvariable is
    // assigned by extension.
    let c = f("(exists u (and (or u (not x)) (or (not u) x)))");
    let mut b = ProofBuilder::new();
    let lemma = prove_exists(&mut b, &[], &c, &[("u", var("x"))]);
    let inst_c = instance(&c, &[("u", var("e"))]);
    let use_ = prove_exists(&mut b, &[inst_c], &iff, &[("z", var("e"))]);
    let use_ = open_exists(&mut b, use_, 0, &c, &[("u", "e")]);
    cut_lemma(&mut b, lemma, use_, &iff);
    out.push(("cut_exl", b.finish()));

    // 8. Two nested cuts, two eigenvariables.
    let c1 = c.clone();
    let c2 = f("(exists v (and (or v x) (or (not v) (not x))))");
    let g =
        f("(exists z1 (exists z2 (and (and (or z1 (not x)) (or (not z1) x)) (and (or z2 x) (or (not z2) (not x))))))");
    let mut b = ProofBuilder::new();
    let l1 = prove_exists(&mut b, &[], &c1, &[("u", var("x"))]);
    let l2 = prove_exists(&mut b, &[], &c2, &[("v", f("(not x)"))]);
    let l2 = b.weak_l(l2, 0, c1.clone());
    let (i1, i2) = (instance(&c1, &[("u", var("e1"))]), instance(&c2, &[("v", var("e2"))]));
    let u = prove_exists(&mut b, &[i2, i1], &g, &[("z1", var("e1")), ("z2", var("e2"))]);
    let u = open_exists(&mut b, u, 0, &c2, &[("v", "e2")]);
    let u = open_exists(&mut b, u, 1, &c1, &[("u", "e1")]);
    let inner = cut_lemma(&mut b, l2, u, &g);
    cut_lemma(&mut b, l1, inner, &g);
    out.push(("two_cuts", b.finish()));

    // 9. Quantifier-free cut on a formula with a non-parameter variable.
    let taut = f("(or w (not w))");
    let mut b = ProofBuilder::new();
    let l = prove(&mut b, &[], std::slice::from_ref(&taut)).unwrap();
    let u = prove_exists(&mut b, &[taut], &iff, &[("z", var("x"))]);
    cut_lemma(&mut b, l, u, &iff);
    out.push(("sigma0_cut", b.finish()));

    // 10. Witness depends on the eigenvariable only through a lemma about
    // two parameters: u ↔ (x ∨ y).
    let c = f("(exists u (and (or (not u) (or x y)) (or u (not (or x y)))))");
    let g = f("(exists z (and (or (not z) (or x y)) (or z (and (not x) (not y)))))");
    let mut b = ProofBuilder::new();
    let lemma = prove_exists(&mut b, &[], &c, &[("u", f("(or x y)"))]);
    let inst_c = instance(&c, &[("u", var("e"))]);
    let use_ = prove_exists(&mut b, &[inst_c], &g, &[("z", var("e"))]);
    let use_ = open_exists(&mut b, use_, 0, &c, &[("u", "e")]);
    cut_lemma(&mut b, lemma, use_, &g);
    out.push(("or_gate_cut", b.finish()));

    // 11. Three variables, one of them fixed.
    let g = f("(exists a (exists b (exists c (and (or a (or b c)) (and (or (not a) x) (or (not b) (not x)))))))");
    let mut b = ProofBuilder::new();
    prove_exists(&mut b, &[], &g, &[("a", var("x")), ("b", f("(not x)")), ("c", Formula::bot())]);
    out.push(("three_vars", b.finish()));

    // 12. Parity of three parameters.
    let g = f("(exists z (and (or z (not (or (and x (not y)) (and (not x) y)))) (or (not z) (or (and x (not y)) (and (not x) y)))))");
    let mut b = ProofBuilder::new();
    prove_exists(&mut b, &[], &g, &[("z", f("(or (and x (not y)) (and (not x) y))"))]);
    out.push(("xor", b.finish()));

    out
}

/// ΣCNF(2) formulas for the witnessing criterion.
pub fn sigma_cnf2_catalog() -> Vec<Formula> {
    [
        "(exists z (and (or z (not x)) (or (not z) x)))",
        "(exists z (and (or z x) (or (not z) (not x))))",
        "(exists z (and (or z (not (and x y))) (or (not z) (and x y))))",
        "(exists z (and (or z (not (or x y))) (or (not z) (or x y))))",
        "(exists z z)",
        "(exists z (not z))",
        "(exists z (and z (not z)))",
        "(exists z (or z x))",
        "(exists z (and (or z x) (or (not z) y)))",
        "(exists z (and (or z x) (or (not z) (not x))))",
        "(exists z1 (exists z2 (and (or z1 z2) (or (not z1) (not z2)))))",
        "(exists z1 (exists z2 (and (or z1 x) (and (or (not z1) z2) (or (not z2) y)))))",
        "(exists z1 (exists z2 (and (or z1 x) (and (or (not z1) (or z2 y)) (or (not z2) w)))))",
        "(exists z1 (exists z2 (and (and (or z1 x) (or (not z1) (not x))) (and (or z2 y) (or (not z2) (not y))))))",
        "(exists z1 (exists z2 (and (or z1 (or z2 x)) (and (or (not z1) y) (or (not z2) w)))))",
        "(exists z1 (exists z2 (and (or z1 z2) (and (or (not z1) x) (or (not z2) y)))))",
        "(exists z1 (exists z2 (exists z3 (and (or z1 (or z2 z3)) (and (or (not z1) x) (and (or (not z2) y) (or (not z3) w)))))))",
        "(exists z1 (exists z2 (exists z3 (and (or z1 x) (and (or (not z1) z2) (and (or (not z2) z3) (or (not z3) y)))))))",
        "(exists z1 (exists z2 (and (or z1 x) (and (or (not z1) (not x)) (or z2 (not z2))))))",
        "(exists z (and (or z (and x y)) (or (not z) (or (not x) w))))",
        "(exists z (and x (or z y)))",
        "(exists z (and (or z x) (and (or (not z) y) (or w v))))",
        "(exists z1 (exists z2 (and (or z1 x) (and (or (not z1) (not y)) (and (or z2 y) (or (not z2) (not w)))))))",
        "(exists z1 (exists z2 (and (or z1 (not z2)) (and (or (not z1) x) (or z2 y)))))",
        "(exists z1 (exists z2 (and (or z1 z2) (and (or (not z1) x) (or (not z2) (not x))))))",
        "(exists z1 (exists z2 (exists z3 (and (or z1 z2) (and (or (not z1) z3) (and (or (not z2) x) (or (not z3) y)))))))",
        "(exists z (and (or z (not x)) (and (or (not z) x) y)))",
        "(exists z (or (not z) (and x (not y))))",
        "(exists z1 (exists z2 (and (or z1 (not x)) (and (or (not z1) x) (and (or z2 (not y)) (or (not z2) y))))))",
        "(exists z1 (exists z2 (exists z3 (and (or z1 (or z2 (not x))) (and (or (not z1) y) (and (or (not z2) z3) (or (not z3) w)))))))",
        "(exists z1 (exists z2 (and (or z1 (and x y)) (and (or (not z1) z2) (or (not z2) (or (not x) (not y)))))))",
        "(exists z (and (or z (or x (or y w))) (or (not z) (and (not x) v))))",
    ]
    .iter()
    .map(|s| f(s))
    .collect()
}

/// Bounded-arithmetic formulas over number `m` and strings `X`, `Y`.
pub fn arith_catalog() -> Vec<AFormula> {
    [
        "(bit X m)",
        "(existsle y m (bit X y))",
        "(forallle y m (bit X y))",
        "(existsle y (len X) (and (bit X y) (bit Y y)))",
        "(forallle y (len X) (or (not (bit X y)) (bit Y y)))",
        "(< m (len X))",
        "(= (len X) (+ m 1))",
        "(existsle y m (existsle u m (and (= (+ y u) m) (and (bit X y) (not (bit Y u))))))",
        "(or (bit X (* 2 m)) (and (bit Y (+ m 1)) (< m 3)))",
        "(forallle y (len Y) (existsle u (len X) (and (< y (+ u 1)) (bit X u))))",
        "(existsle y (+ m 1) (and (bit X y) (forallle u y (not (bit Y u)))))",
        "(existsstr Z 3 (and (bit Z 0) (not (bit X m))))",
        "(existsstr Z (len X) (forallle y (len X) (or (not (bit X y)) (bit Z y))))",
    ]
    .iter()
    .map(|s| af(s))
    .collect()
}
