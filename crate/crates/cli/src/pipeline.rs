use crate::{report, Format, RfArgs, SearchArgs, WordArgs};
use anyhow::{anyhow, Context};
use hnn_cert::certify::{
    auto_n, check_sum_identity, dual_search_seeded, hypotheses_hold, paper_certificate,
    verify_certificate, Certificate, CertifyError, CostFunction, DualBudget, NChoice, Provenance,
};
use hnn_cert::enumerate::{enumerate_surfaces, min_ratio, EnumerateError, SearchBudget};
use hnn_cert::rewrite::{klyachko_rewrite, special_word_from_letters, Rewrite, RewriteError};
use hnn_cert::rf::{is_malnormal, Length, RfQuery, Subgroup};
use hnn_cert::surface::CombSurface;
use hnn_cert::turns::{build_product_graph, TurnSystem};
use hnn_cert::{
    cyclic_reduce, exponent_sum, load_hnn, parse_word, CyclicReduction, Hnn, HnnWord, Side, Q,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::time::{Duration, Instant};

pub const EXIT_CERTIFIED: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NO_CERTIFICATE: u8 = 3;
pub const EXIT_EXCEPTIONAL: u8 = 4;

/// An input or pipeline error, tagged with the stage that raised it.
pub struct Failure {
    pub stage: &'static str,
    pub error: anyhow::Error,
}

fn at<E: Into<anyhow::Error>>(stage: &'static str) -> impl FnOnce(E) -> Failure {
    move |e| Failure {
        stage,
        error: e.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NArg {
    Auto,
    Fixed(u64),
}

impl NArg {
    pub fn parse(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(NArg::Auto);
        }
        match s.parse::<u64>() {
            Ok(n) if n >= 2 => Ok(NArg::Fixed(n)),
            Ok(n) => Err(format!("n must be at least 2, got {n}")),
            Err(_) => Err(format!("expected `auto` or an integer, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Certified(Q),
    NoAdmissibleTurns,
    NoCertificate,
    InVertexGroup,
    ExceptionalForm { inverted: bool },
}

impl Verdict {
    pub fn exit_code(&self) -> u8 {
        match self {
            Verdict::Certified(_) => EXIT_CERTIFIED,
            Verdict::NoCertificate => EXIT_NO_CERTIFICATE,
            Verdict::InVertexGroup => EXIT_INPUT,
            Verdict::NoAdmissibleTurns | Verdict::ExceptionalForm { .. } => EXIT_EXCEPTIONAL,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Verdict::Certified(b) => format!("Certified({})", hnn_cert::rational::fmt_q(b)),
            Verdict::NoAdmissibleTurns => "NoAdmissibleTurns".into(),
            Verdict::NoCertificate => "NoCertificate".into(),
            Verdict::InVertexGroup => "InVertexGroup".into(),
            Verdict::ExceptionalForm { inverted: false } => "ExceptionalForm(at)".into(),
            Verdict::ExceptionalForm { inverted: true } => "ExceptionalForm(at^-1)".into(),
        }
    }
}

pub struct Stage {
    pub name: &'static str,
    pub detail: String,
    pub millis: Option<f64>,
}

struct Clock {
    timings: bool,
    stages: Vec<Stage>,
}

impl Clock {
    fn run<T>(&mut self, name: &'static str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        let millis = self.timings.then(|| start.elapsed().as_secs_f64() * 1e3);
        self.stages.push(Stage {
            name,
            detail: String::new(),
            millis,
        });
        out
    }

    fn note(&mut self, detail: impl Into<String>) {
        if let Some(s) = self.stages.last_mut() {
            s.detail = detail.into();
        }
    }
}

/// How the certificate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Table,
    Dual,
}

pub struct CertifyRun {
    pub hnn: Hnn,
    pub input: Value,
    pub reduced: Option<HnnWord>,
    pub rewrite: Option<Value>,
    /// The word the turn system was built from.
    pub certified_word: Option<HnnWord>,
    pub n_choice: Option<NChoice>,
    pub hypotheses: Option<(u64, bool)>,
    pub ts: Option<TurnSystem>,
    pub certificate: Option<(Certificate, Method)>,
    pub stages: Vec<Stage>,
    pub verdict: Verdict,
}

fn seed_cost(ts: &TurnSystem, seed: u64) -> CostFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CostFunction {
        values: ts.turns.iter().map(|_| Q::from_integer(rng.gen_range(-3..=3).into())).collect(),
        provenance: Provenance::UserSupplied,
    }
}

pub fn run_certify(a: &WordArgs) -> Result<CertifyRun, Failure> {
    let mut clock = Clock {
        timings: a.timings,
        stages: Vec::new(),
    };
    let doc = std::fs::read_to_string(&a.group)
        .with_context(|| format!("reading {}", a.group.display()))
        .map_err(at("load"))?;
    let hnn = load_hnn(&doc).map_err(at("load"))?;
    let w = parse_word(&a.word, &hnn).map_err(at("parse"))?;
    let mut run = CertifyRun {
        input: json!({
            "group": hnn.a().name(),
            "group_file": a.group.display().to_string(),
            "word": a.word,
            "n": match a.n { NArg::Auto => json!("auto"), NArg::Fixed(n) => json!(n) },
            "seed": a.seed,
            "max_rounds": a.max_rounds,
        }),
        hnn,
        reduced: None,
        rewrite: None,
        certified_word: None,
        n_choice: None,
        hypotheses: None,
        ts: None,
        certificate: None,
        stages: Vec::new(),
        verdict: Verdict::NoCertificate,
    };
    let hnn = run.hnn.clone();

    let red = clock.run("reduce", || cyclic_reduce(&w, &hnn));
    let word = match red {
        CyclicReduction::InVertexGroup { element, .. } => {
            clock.note(format!("conjugate into the vertex group: {}", hnn.a().elem_name(element)));
            run.verdict = Verdict::InVertexGroup;
            run.stages = clock.stages;
            return Ok(run);
        }
        CyclicReduction::Reduced { word, .. } => word,
    };
    clock.note(word.render(&hnn));
    run.reduced = Some(word.clone());
    let p = exponent_sum(&word);
    if p.abs() != 1 {
        return Err(at("rewrite")(RewriteError::ExponentSumNotUnit(p)));
    }

    let rw = clock.run("rewrite", || klyachko_rewrite(&word, &hnn)).map_err(at("rewrite"))?;
    let sw = match rw {
        Rewrite::AtForm {
            a: letter,
            conjugator,
            inverted,
        } => {
            clock.note("conjugate to a t^±1");
            run.rewrite = Some(json!({
                "form": "at",
                "a": hnn.a().elem_name(letter),
                "conjugator": conjugator.render(&hnn),
                "inverted": inverted,
            }));
            run.verdict = Verdict::ExceptionalForm { inverted };
            run.stages = clock.stages;
            return Ok(run);
        }
        Rewrite::Special(sw) => sw,
    };
    clock.note(format!("level {}, m = {}", sw.k, sw.m()));
    run.rewrite = Some(sw.to_json(&hnn));
    let letters = sw.level_one_letters();
    let cert_word = match &letters {
        Some((la, lb, x)) => special_word_from_letters(la, lb, *x, &hnn),
        None => word.clone(),
    };
    run.certified_word = Some(cert_word.clone());

    let ts = clock.run("turns", || TurnSystem::new(&cert_word, &hnn)).map_err(at("turns"))?;
    clock.note(format!("{} arcs, {} turns", ts.arcs.len(), ts.turns.len()));
    if ts.turns.is_empty() {
        run.verdict = Verdict::NoAdmissibleTurns;
        run.ts = Some(ts);
        run.stages = clock.stages;
        return Ok(run);
    }
    let pg = build_product_graph(&ts);

    let mut found = None;
    if letters.is_some() {
        let n = clock.run("hypotheses", || -> Option<u64> {
            let n = match a.n {
                NArg::Fixed(n) => n,
                NArg::Auto => match auto_n(&ts) {
                    Ok(choice) => {
                        let n = choice.n;
                        run.n_choice = Some(choice);
                        n
                    }
                    Err(e) => {
                        log::warn!("cannot choose n automatically: {e}");
                        return None;
                    }
                },
            };
            let ok = n >= 2 && hypotheses_hold(&ts, n).unwrap_or(false);
            run.hypotheses = Some((n, ok));
            ok.then_some(n)
        });
        match &run.hypotheses {
            Some((n, ok)) => clock.note(format!("n = {n}, hypotheses {}", if *ok { "hold" } else { "fail" })),
            None => clock.note("no admissible n"),
        }
        if let Some(n) = n {
            match clock.run("table_cost", || paper_certificate(&ts, &pg, n)) {
                Ok(c) => {
                    clock.note(format!("λ = {}", hnn_cert::rational::fmt_q(&c.lambda)));
                    found = Some((c, Method::Table));
                }
                Err(e) => {
                    clock.note(e.to_string());
                    log::warn!("table cost at n = {n} rejected: {e}");
                }
            }
        }
    }
    if found.is_none() {
        let seed = a.seed.map(|s| seed_cost(&ts, s));
        let budget = DualBudget {
            max_rounds: a.max_rounds,
        };
        match clock.run("dual_search", || dual_search_seeded(&ts, &pg, budget, seed.as_ref())) {
            Ok(c) => {
                clock.note(format!("{} rounds", c.rounds));
                found = Some((c, Method::Dual));
            }
            Err(CertifyError::NoCertificate { iterations }) => {
                clock.note(format!("gave up after {iterations} rounds"));
            }
            Err(CertifyError::NoAdmissibleTurns) => run.verdict = Verdict::NoAdmissibleTurns,
            Err(e) => return Err(at("dual_search")(e)),
        }
    }

    if let Some((cert, method)) = found {
        let recheck = clock.run("verify", || -> anyhow::Result<Q> {
            verify_certificate(&cert.cost, &pg, &ts).map_err(|v| anyhow!(v.describe(&ts)))?;
            Ok(check_sum_identity(&cert.cost, &ts)?)
        });
        let lambda = recheck.map_err(at("verify"))?;
        if lambda != cert.lambda {
            return Err(at("verify")(anyhow!("sum identity disagrees with the certificate")));
        }
        clock.note("all closed walks pass, sum identity holds");
        run.verdict = Verdict::Certified(cert.bound.clone());
        run.certificate = Some((cert, method));
    } else if run.verdict != Verdict::NoAdmissibleTurns {
        run.verdict = Verdict::NoCertificate;
    }
    run.ts = Some(ts);
    run.stages = clock.stages;
    Ok(run)
}

pub fn cmd_certify(a: &WordArgs) -> Result<u8, Failure> {
    let run = run_certify(a)?;
    let out = match a.format {
        Format::Json => serde_json::to_string_pretty(&report::certify_json(&run)).expect("json"),
        Format::Md => report::certify_md(&run),
    };
    println!("{out}");
    Ok(run.verdict.exit_code())
}

pub struct SearchOutcome {
    pub surfaces: Vec<CombSurface>,
    pub min_ratio: Option<Q>,
    pub warning: Option<String>,
    pub budget: SearchBudget,
}

pub fn cmd_search(a: &SearchArgs) -> Result<u8, Failure> {
    let mut run = run_certify(&a.word)?;
    let budget = SearchBudget {
        max_degree: a.max_degree,
        max_piece_turns: a.max_piece_turns,
        max_pieces: a.max_pieces,
        time_limit: a.time_limit.map(Duration::from_secs_f64),
    };
    // surfaces of the certified word when there is one, otherwise of the reduced input
    let ts = match (&run.ts, &run.reduced) {
        (Some(ts), _) => Some(ts.clone()),
        (None, Some(w)) => Some(TurnSystem::new(w, &run.hnn).map_err(at("turns"))?),
        (None, None) => None,
    };
    let outcome = ts.as_ref().map(|ts| {
        let (surfaces, warning) = match enumerate_surfaces(ts, budget) {
            Ok(s) => (s, None),
            Err(EnumerateError::BudgetExhausted { partial }) => {
                let msg = format!("search budget exhausted after {} surfaces", partial.len());
                log::warn!("{msg}");
                (partial, Some(msg))
            }
        };
        SearchOutcome {
            min_ratio: min_ratio(&surfaces, ts),
            surfaces,
            warning,
            budget,
        }
    });
    if let Some(ts) = &ts {
        if ts.turns.is_empty() {
            run.verdict = Verdict::NoAdmissibleTurns;
        }
    }
    match a.word.format {
        Format::Json => {
            if let (Some(ts), Some(o)) = (&ts, &outcome) {
                for s in &o.surfaces {
                    println!("{}", report::surface_line(s, ts));
                }
            }
            println!("{}", report::search_json(&run, outcome.as_ref()));
        }
        Format::Md => println!("{}", report::search_md(&run, outcome.as_ref())),
    }
    Ok(run.verdict.exit_code())
}

pub struct RfReport {
    pub group: String,
    pub element: String,
    pub subgroup: Vec<String>,
    pub n: usize,
    pub is_n_rtf: bool,
    pub is_n_rf: bool,
    pub max_rtf: usize,
    pub max_rf: usize,
    pub malnormal: bool,
}

pub fn run_rf(a: &RfArgs) -> Result<RfReport, Failure> {
    let doc = std::fs::read_to_string(&a.group)
        .with_context(|| format!("reading {}", a.group.display()))
        .map_err(at("load"))?;
    let hnn = load_hnn(&doc).map_err(at("load"))?;
    let g = hnn.a();
    let lookup = |name: &str| {
        g.index_of(name.trim())
            .ok_or_else(|| at("parse")(anyhow!("unknown element {:?}", name.trim())))
    };
    let element = lookup(&a.element)?;
    let sub = match a.subgroup.as_str() {
        "trivial" => Subgroup::trivial(g),
        "P" => Subgroup::from_mask(g, hnn.e().image_mask(Side::P)).map_err(at("rf"))?,
        "N" => Subgroup::from_mask(g, hnn.e().image_mask(Side::N)).map_err(at("rf"))?,
        list => {
            let members = list.split(',').map(lookup).collect::<Result<Vec<_>, _>>()?;
            Subgroup::new(g, &members).map_err(at("rf"))?
        }
    };
    let query = RfQuery::new(g, &sub, element).map_err(at("rf"))?;
    let len = Length::Finite(a.n);
    Ok(RfReport {
        group: g.name().to_string(),
        element: g.elem_name(element).to_string(),
        subgroup: sub.members().iter().map(|&x| g.elem_name(x).to_string()).collect(),
        n: a.n,
        is_n_rtf: query.is_n_rtf(len).map_err(at("rf"))?,
        is_n_rf: query.is_n_rf(len).map_err(at("rf"))?,
        max_rtf: query.max_rtf(),
        max_rf: query.max_rf(),
        malnormal: is_malnormal(&sub, g),
    })
}

pub fn cmd_rf(a: &RfArgs) -> Result<u8, Failure> {
    let r = run_rf(a)?;
    match a.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report::rf_json(&r)).expect("json")),
        Format::Md => println!("{}", report::rf_md(&r)),
    }
    Ok(0)
}
