//! Acceptance suite: one PASS/FAIL line per criterion.

use hnn_cert::catalog::{cyclic, dihedral, groups_up_to_8, klein};
use hnn_cert::certify::{
    auto_n, check_sum_identity, dual_search, hypotheses_hold, paper_cost, verify_certificate,
    Certificate, CertifyError, DualBudget,
};
use hnn_cert::enumerate::{enumerate_surfaces, min_ratio, SearchBudget};
use hnn_cert::rational::{fmt_q, q, qi};
use hnn_cert::rewrite::{klyachko_rewrite, special_word_from_letters, verify_conjugacy, Rewrite, RewriteError};
use hnn_cert::rf::oracle::{brute_rf, brute_rtf};
use hnn_cert::rf::{Length, RfQuery, Subgroup};
use hnn_cert::surface::{euler_characteristic_cells, validate_surface, CombSurface};
use hnn_cert::turns::{build_product_graph, TurnSystem};
use hnn_cert::word::{Sign, Syllable};
use hnn_cert::{element_order, exponent_sum, parse_word, EdgePair, GroupTable, Hnn, HnnWord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Instance {
    name: String,
    ts: TurnSystem,
}

fn instance(name: &str, hnn: Hnn, a: &[usize], b: &[usize], x: usize) -> Instance {
    let w = special_word_from_letters(a, b, x, &hnn);
    Instance {
        name: name.to_string(),
        ts: TurnSystem::new(&w, &hnn).expect("turn system"),
    }
}

fn edge(g: &GroupTable, ip: Vec<usize>, in_: Vec<usize>) -> Hnn {
    Hnn::new(g.clone(), EdgePair::new(g, ip, in_).expect("edge pair"))
}

fn budget(deg: usize) -> SearchBudget {
    SearchBudget {
        max_degree: deg,
        max_piece_turns: 6,
        ..SearchBudget::default()
    }
}

fn enumerate(ts: &TurnSystem, deg: usize) -> Result<Vec<CombSurface>, String> {
    enumerate_surfaces(ts, budget(deg)).map_err(|e| e.to_string())
}

// 1. table cost for cyclic groups
fn table_cost_reproduction() -> Outcome {
    let mut count = 0;
    let mut slowest = 0.0f64;
    for n in [2usize, 3, 5] {
        let hnn = Hnn::with_trivial_edge(cyclic(n));
        for m in [1usize, 2] {
            let nontrivial: Vec<usize> = (1..n).collect();
            let mut letter_sets = vec![Vec::new()];
            for _ in 0..2 * m {
                letter_sets = letter_sets
                    .into_iter()
                    .flat_map(|s: Vec<usize>| nontrivial.iter().map(move |&l| [s.clone(), vec![l]].concat()))
                    .collect();
            }
            for letters in &letter_sets {
                let (a, b) = letters.split_at(m);
                for x in 0..n {
                    let start = Instant::now();
                    let ts = TurnSystem::new(&special_word_from_letters(a, b, x, &hnn), &hnn).map_err(|e| e.to_string())?;
                    let pg = build_product_graph(&ts);
                    let tag = || format!("Z/{n} a={a:?} b={b:?} x={x}");
                    let nn = n as u64;
                    ensure(auto_n(&ts).map_err(|e| e.to_string())?.n == nn, || format!("{}: auto n", tag()))?;
                    ensure(hypotheses_hold(&ts, nn).map_err(|e| e.to_string())?, || format!("{}: hypotheses", tag()))?;
                    let c = paper_cost(&ts, nn).map_err(|e| e.to_string())?;
                    verify_certificate(&c, &pg, &ts).map_err(|v| format!("{}: {}", tag(), v.describe(&ts)))?;
                    let lambda = check_sum_identity(&c, &ts).map_err(|e| format!("{}: {e}", tag()))?;
                    let len = (2 * m + 1) as i64;
                    let want = q(len, 2) - qi(1) + q(1, n as i64);
                    ensure(lambda == want, || format!("{}: λ = {} ≠ {}", tag(), fmt_q(&lambda), fmt_q(&want)))?;
                    let bound = q(len, 2) - &lambda;
                    ensure(bound == qi(1) - q(1, n as i64), || format!("{}: bound {}", tag(), fmt_q(&bound)))?;
                    slowest = slowest.max(start.elapsed().as_secs_f64());
                    count += 1;
                }
            }
        }
    }
    ensure(slowest < 10.0, || format!("slowest instance took {slowest:.2}s"))?;
    Ok(format!("{count} special words, λ and bound exact, slowest {:.0} ms", slowest * 1e3))
}

fn corpus() -> Vec<(Instance, Vec<CombSurface>)> {
    let kl = klein();
    let z4 = cyclic(4);
    let s3 = dihedral(3);
    let specs = vec![
        (instance("Z/2 m=1", Hnn::with_trivial_edge(cyclic(2)), &[1], &[1], 0), 4),
        (instance("Z/3 m=1", Hnn::with_trivial_edge(cyclic(3)), &[1], &[2], 0), 4),
        (instance("Klein over Z/2", edge(&kl, vec![0, 1], vec![0, 2]), &[3], &[3], 3), 4),
        (instance("Z/4 over Z/2", edge(&z4, vec![0, 2], vec![0, 2]), &[1], &[1], 1), 4),
        (instance("S3 over Z/2", edge(&s3, vec![0, 3], vec![0, 4]), &[1], &[1], 1), 2),
    ];
    specs
        .into_iter()
        .map(|(inst, deg)| {
            let s = enumerate(&inst.ts, deg).unwrap_or_else(|e| panic!("{}: {e}", inst.name));
            (inst, s)
        })
        .collect()
}

// 2. Euler identity
fn euler_identity(corpus: &[(Instance, Vec<CombSurface>)]) -> Outcome {
    let mut total = 0;
    let mut per = Vec::new();
    for (inst, surfaces) in corpus {
        let ts = &inst.ts;
        let len = ts.word_len() as i64;
        for s in surfaces {
            let v = validate_surface(s, ts);
            ensure(v.is_empty(), || format!("{}: invalid surface: {}", inst.name, v[0]))?;
            let inv = s.invariants(ts);
            let formula = inv.deg as i64 * len / 2 - inv.v_d as i64;
            ensure(inv.deg as i64 * len % 2 == 0, || format!("{}: odd deg·|w|", inst.name))?;
            ensure(inv.neg_chi() == formula, || format!("{}: -χ {} ≠ {formula}", inst.name, inv.neg_chi()))?;
            let cells = euler_characteristic_cells(s);
            ensure(cells == inv.chi, || format!("{}: cell count χ {cells} ≠ {}", inst.name, inv.chi))?;
        }
        total += surfaces.len();
        per.push(format!("{} {}", inst.name, surfaces.len()));
    }
    ensure(total >= 500 && corpus.len() >= 4, || format!("corpus too small: {total}"))?;
    Ok(format!("{total} surfaces ({})", per.join(", ")))
}

// 3. counting identities
fn counting_identities(corpus: &[(Instance, Vec<CombSurface>)]) -> Outcome {
    let mut checked = 0;
    for (inst, surfaces) in corpus {
        let ts = &inst.ts;
        let arcs = ts.arcs.len();
        for s in surfaces {
            let inv = s.invariants(ts);
            let name = &inst.name;
            ensure(inv.deg_pos == inv.deg_neg, || format!("{name}: deg+ {} ≠ deg- {}", inv.deg_pos, inv.deg_neg))?;
            ensure(inv.deg % 2 == 0, || format!("{name}: odd degree"))?;
            let count = |t: usize| inv.t.get(&ts.turns[t]).copied().unwrap_or(0);
            for (t, &p) in ts.pairing.iter().enumerate() {
                ensure(count(t) == count(p), || format!("{name}: t[{}] ≠ t[{}]", ts.turns[t], ts.turns[p]))?;
            }
            for turn in inv.t.keys() {
                ensure(ts.turn_index(turn).is_some() && !ts.is_backtrack(turn), || {
                    format!("{name}: forbidden turn {turn} used")
                })?;
            }
            let mut out = vec![0; arcs];
            let mut into = vec![0; arcs];
            for (turn, &k) in &inv.t {
                out[turn.from.0] += k;
                into[turn.to.0] += k;
            }
            for arc in 0..arcs {
                ensure(out[arc] == inv.deg / 2 && into[arc] == inv.deg / 2, || {
                    format!("{name}: arc row sums {} / {} ≠ deg/2 = {}", out[arc], into[arc], inv.deg / 2)
                })?;
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} surfaces, zero violations"))
}

/// The cutting-plane optimum, checked to be at least the table bound when that applies.
fn best_certificate(ts: &TurnSystem) -> Result<Certificate, String> {
    let pg = build_product_graph(ts);
    let dual = dual_search(ts, &pg, DualBudget::default()).map_err(|e| e.to_string())?;
    if let Ok(choice) = auto_n(ts) {
        if choice.n >= 2 && hypotheses_hold(ts, choice.n).unwrap_or(false) {
            let c = paper_cost(ts, choice.n).map_err(|e| e.to_string())?;
            verify_certificate(&c, &pg, ts).map_err(|v| v.describe(ts))?;
            let lambda = check_sum_identity(&c, ts).map_err(|e| e.to_string())?;
            let bound = q(ts.word_len() as i64, 2) - &lambda;
            if dual.bound < bound {
                return Err(format!("dual bound {} below table bound {}", fmt_q(&dual.bound), fmt_q(&bound)));
            }
        }
    }
    Ok(dual)
}

// 4. weak duality
fn weak_duality() -> Outcome {
    let kl = klein();
    let z4 = cyclic(4);
    let z2 = Hnn::with_trivial_edge(cyclic(2));
    let z3 = Hnn::with_trivial_edge(cyclic(3));
    let instances = vec![
        instance("Z/2 x=e", z2.clone(), &[1], &[1], 0),
        instance("Z/2 x=a", z2.clone(), &[1], &[1], 1),
        instance("Z/2 m=2", z2, &[1, 1], &[1, 1], 0),
        instance("Z/3 a,a", z3.clone(), &[1], &[1], 0),
        instance("Z/3 a,b", z3, &[1], &[2], 1),
        instance("Z/4 a,a3", Hnn::with_trivial_edge(z4.clone()), &[1], &[3], 0),
        instance("Z/4 a2,a2", Hnn::with_trivial_edge(z4.clone()), &[2], &[2], 0),
        instance("Z/4 over Z/2", edge(&z4, vec![0, 2], vec![0, 2]), &[1], &[1], 1),
        instance("Klein", Hnn::with_trivial_edge(kl.clone()), &[1], &[2], 0),
        instance("Klein over Z/2", edge(&kl, vec![0, 1], vec![0, 2]), &[3], &[3], 3),
    ];
    let mut lines = Vec::new();
    for inst in &instances {
        let start = Instant::now();
        let cert = best_certificate(&inst.ts).map_err(|e| format!("{}: {e}", inst.name))?;
        let surfaces = enumerate(&inst.ts, 2).map_err(|e| format!("{}: {e}", inst.name))?;
        let secs = start.elapsed().as_secs_f64();
        ensure(secs < 300.0, || format!("{}: {secs:.0}s", inst.name))?;
        let Some(r) = min_ratio(&surfaces, &inst.ts) else {
            lines.push(format!("{}: no surfaces, bound {}", inst.name, fmt_q(&cert.bound)));
            continue;
        };
        ensure(r >= cert.bound, || format!("{}: min ratio {} < bound {}", inst.name, fmt_q(&r), fmt_q(&cert.bound)))?;
        let rel = if r == cert.bound { "equal".to_string() } else { format!("gap {}", fmt_q(&(r.clone() - &cert.bound))) };
        lines.push(format!("{}: {} ≥ {} ({rel})", inst.name, fmt_q(&r), fmt_q(&cert.bound)));
    }
    Ok(lines.join("; "))
}

// 5. rf deciders against brute force
fn rf_oracle() -> Outcome {
    let mut queries = 0;
    for g in groups_up_to_8() {
        for members in g.subgroups() {
            let c = Subgroup::new(&g, &members).map_err(|e| e.to_string())?;
            for a in g.elements().filter(|&a| !c.contains(a)) {
                let q = RfQuery::new(&g, &c, a).map_err(|e| e.to_string())?;
                for n in 2..=5 {
                    let len = Length::Finite(n);
                    let tag = || format!("{} C={members:?} a={a} n={n}", g.name());
                    ensure(q.is_n_rf(len).unwrap() == brute_rf(&q, n), || format!("{}: rf", tag()))?;
                    ensure(q.is_n_rtf(len).unwrap() == brute_rtf(&q, n), || format!("{}: rtf", tag()))?;
                    queries += 1;
                }
            }
        }
        let trivial = Subgroup::trivial(&g);
        for a in g.elements().filter(|&a| !g.is_identity(a)) {
            let k = element_order(a, &g);
            let got = RfQuery::new(&g, &trivial, a).unwrap().max_rf();
            ensure(got == k, || format!("{}: max_rf of order-{k} element is {got}", g.name()))?;
        }
    }
    Ok(format!("{queries} queries agree, max_rf = order rel trivial subgroup"))
}

fn random_unit_word(rng: &mut ChaCha8Rng, n: usize) -> HnnWord {
    let len = rng.gen_range(1..=8);
    let mut syl: Vec<(usize, bool)> = (0..len).map(|_| (rng.gen_range(0..n), rng.gen())).collect();
    let s: i64 = syl.iter().map(|&(_, p)| if p { 1 } else { -1 }).sum();
    let want = if s >= 0 { 1 } else { -1 };
    for _ in 0..(s - want).abs() {
        syl.push((rng.gen_range(0..n), s < want));
    }
    let tail = rng.gen_range(0..n);
    HnnWord::from_syllables(
        syl.into_iter()
            .map(|(a, p)| Syllable::new(a, if p { Sign::POS } else { Sign::NEG }))
            .collect(),
        tail,
    )
}

// 6. rewriting soundness
fn rewriting_soundness() -> Outcome {
    let groups = [cyclic(2), cyclic(3), cyclic(4), klein()];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut special, mut at_form) = (0, 0);
    for i in 0..200 {
        let g = &groups[i % groups.len()];
        let hnn = Hnn::with_trivial_edge(g.clone());
        let w = random_unit_word(&mut rng, g.size());
        let target = if exponent_sum(&w) == 1 { w.clone() } else { w.inverse(&hnn) };
        let tag = || format!("{} word {}", g.name(), w.render(&hnn));
        match klyachko_rewrite(&w, &hnn).map_err(|e| format!("{}: {e}", tag()))? {
            Rewrite::Special(sw) => {
                sw.check(&target, &hnn).map_err(|e| format!("{}: {e}", tag()))?;
                ensure(exponent_sum(&sw.render(&hnn)) == 1, || format!("{}: rendered exponent sum", tag()))?;
                special += 1;
            }
            Rewrite::AtForm { a, conjugator, .. } => {
                let at = HnnWord::from_syllables(vec![Syllable::new(a, Sign::POS)], g.identity());
                ensure(verify_conjugacy(&target, &at, &conjugator, &hnn), || format!("{}: a t conjugacy", tag()))?;
                at_form += 1;
            }
        }
    }
    Ok(format!("200 words: {special} special, {at_form} a t forms, zero failures"))
}

// 7. proper powers over Z/2
fn proper_power() -> Outcome {
    let hnn = Hnn::with_trivial_edge(cyclic(2));
    let mut seen = 0;
    let mut kept = 0;
    for x in [0, 1] {
        let inst = instance("Z/2", hnn.clone(), &[1], &[1], x);
        let ts = &inst.ts;
        for s in enumerate(ts, 4)? {
            seen += 1;
            if !s.find_backtracks(ts).is_empty() {
                continue;
            }
            let ex = s.w_boundary_exponents(ts).map_err(|e| e.to_string())?;
            if ex.iter().any(|e| e % 2 != 0) {
                continue;
            }
            kept += 1;
            let inv = s.invariants(ts);
            let (nc, deg) = (inv.neg_chi(), inv.deg as i64);
            ensure(2 * nc >= deg, || format!("x={x}: -χ {nc} < deg/2 with deg {deg}"))?;
            let genus = s.genus(ts).map_err(|e| e.to_string())?;
            let equation_shaped = genus == 0 && s.a_boundary_classes().len() == 1 && deg % 2 == 0 && nc == deg / 2 - 1;
            ensure(!equation_shaped, || format!("x={x}: equation-shaped surface with deg {deg}"))?;
        }
    }
    Ok(format!("{kept} of {seen} surfaces incompressible with even exponents; -χ ≥ deg/2, no equation-shaped surface"))
}

// 8. degenerate inputs
fn degenerate() -> Outcome {
    for g in [cyclic(2), cyclic(3), klein()] {
        let hnn = Hnn::with_trivial_edge(g.clone());
        let w = parse_word(&format!("{} t", g.elem_name(1)), &hnn).map_err(|e| e.to_string())?;
        let ts = TurnSystem::new(&w, &hnn).map_err(|e| e.to_string())?;
        ensure(ts.turns.is_empty(), || format!("{}: a t has {} turns", g.name(), ts.turns.len()))?;
        let s = enumerate(&ts, 4)?;
        ensure(s.is_empty(), || "a t enumerates surfaces".into())?;
        let pg = build_product_graph(&ts);
        ensure(
            matches!(dual_search(&ts, &pg, DualBudget::default()), Err(CertifyError::NoAdmissibleTurns)),
            || "dual search on a t".into(),
        )?;
        ensure(matches!(klyachko_rewrite(&w, &hnn), Ok(Rewrite::AtForm { .. })), || "a t rewrite".into())?;
        for (text, p) in [("a t a t^-1", 0), ("t t a", 2), ("t^-1 a t^-1 a t^-1", -3)] {
            let text = text.replace('a', g.elem_name(1));
            let w = parse_word(&text, &hnn).map_err(|e| e.to_string())?;
            let ps = exponent_sum(&w);
            ensure(ps == p, || format!("{text}: exponent sum {ps}"))?;
            ensure(
                klyachko_rewrite(&w, &hnn) == Err(RewriteError::ExponentSumNotUnit(ps)),
                || format!("{text} accepted"),
            )?;
        }
    }
    Ok("a t has no admissible turns and no surfaces; p(w) ∉ {±1} rejected".into())
}

fn run(results: &mut Vec<bool>, label: &str, f: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panic: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    results.push(outcome.is_ok());
    match outcome {
        Ok(detail) => println!("PASS {label}: {detail} [{secs:.1}s]"),
        Err(detail) => println!("FAIL {label}: {detail} [{secs:.1}s]"),
    }
}

fn main() -> ExitCode {
    let mut results = Vec::new();
    run(&mut results, "1 table certificates", table_cost_reproduction);
    let start = Instant::now();
    let corpus = corpus();
    let build = start.elapsed().as_secs_f64();
    run(&mut results, "2 Euler identity", || {
        let s = euler_identity(&corpus)?;
        ensure(build < 120.0, || format!("enumeration took {build:.0}s"))?;
        Ok(format!("{s}, enumerated in {build:.1}s"))
    });
    run(&mut results, "3 counting identities", || counting_identities(&corpus));
    run(&mut results, "4 weak duality", weak_duality);
    run(&mut results, "5 rf oracle", rf_oracle);
    run(&mut results, "6 rewriting soundness", rewriting_soundness);
    run(&mut results, "7 proper powers", proper_power);
    run(&mut results, "8 degenerate inputs", degenerate);
    if results.iter().all(|&ok| ok) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
