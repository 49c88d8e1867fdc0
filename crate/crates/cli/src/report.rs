use crate::pipeline::{CertifyRun, Method, RfReport, SearchOutcome};
use hnn_cert::rational::fmt_q;
use hnn_cert::surface::CombSurface;
use hnn_cert::turns::TurnSystem;
use hnn_cert::Q;
use serde_json::{json, Value};
use std::fmt::Write;

fn stages_json(run: &CertifyRun) -> Value {
    run.stages
        .iter()
        .map(|s| {
            let mut v = json!({ "stage": s.name, "detail": s.detail });
            if let Some(ms) = s.millis {
                v["millis"] = json!(ms);
            }
            v
        })
        .collect()
}

pub fn certify_json(run: &CertifyRun) -> Value {
    let hnn = &run.hnn;
    let mut v = json!({
        "input": run.input,
        "stages": stages_json(run),
        "reduced_word": run.reduced.as_ref().map(|w| w.render(hnn)),
        "rewrite": run.rewrite,
        "certified_word": run.certified_word.as_ref().map(|w| w.render(hnn)),
        "verdict": run.verdict.label(),
    });
    if let Some(c) = &run.n_choice {
        v["n_choice"] = json!({
            "n": c.n,
            "witnesses": c.witnesses.iter().map(|(cond, n)| json!({"condition": cond, "n": n})).collect::<Vec<_>>(),
        });
    }
    if let Some((n, hold)) = run.hypotheses {
        v["hypotheses"] = json!({ "n": n, "hold": hold });
    }
    if let (Some((cert, method)), Some(ts)) = (&run.certificate, &run.ts) {
        let mut c = cert.to_json(ts);
        c["method"] = json!(method_name(*method));
        c["rounds"] = json!(cert.rounds);
        v["certificate"] = c;
    }
    v
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Table => "table",
        Method::Dual => "dual_search",
    }
}

/// Costs laid out as four |w|×|w| blocks indexed by signed from/to arcs.
pub fn cost_grid(costs: &[Q], ts: &TurnSystem) -> String {
    let len = ts.word_len() as i64;
    let multi = ts.hnn.e().c_size() > 1;
    let mut out = String::new();
    for (si, sj) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
        let name = |s: i64, v: &str| if s > 0 { v.to_string() } else { format!("-{v}") };
        let _ = writeln!(out, "c[{}, {}]\n", name(si, "i"), name(sj, "j"));
        let _ = write!(out, "| i \\ j |");
        for j in 1..=len {
            let _ = write!(out, " {} |", sj * j);
        }
        let _ = write!(out, "\n|---|");
        for _ in 1..=len {
            out.push_str("---|");
        }
        out.push('\n');
        for i in 1..=len {
            let _ = write!(out, "| {} |", si * i);
            for j in 1..=len {
                let cell: Vec<String> = ts
                    .turns
                    .iter()
                    .zip(costs)
                    .filter(|(t, _)| t.from.signed() == si * i && t.to.signed() == sj * j)
                    .map(|(t, c)| if multi { format!("{}:{}", t.c, fmt_q(c)) } else { fmt_q(c) })
                    .collect();
                let cell = if cell.is_empty() { "·".to_string() } else { cell.join("; ") };
                let _ = write!(out, " {cell} |");
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

fn certify_md_body(run: &CertifyRun, out: &mut String) {
    let hnn = &run.hnn;
    let input = &run.input;
    let _ = writeln!(out, "# hnncert report\n");
    let _ = writeln!(out, "- group: {}", input["group"].as_str().unwrap_or(""));
    let _ = writeln!(out, "- word: `{}`", input["word"].as_str().unwrap_or(""));
    if let Some(w) = &run.reduced {
        let _ = writeln!(out, "- reduced: `{}`", w.render(hnn));
    }
    if let Some(w) = &run.certified_word {
        let _ = writeln!(out, "- certified word: `{}`", w.render(hnn));
    }
    let _ = writeln!(out, "\n## Stages\n\n| stage | detail |\n|---|---|");
    for s in &run.stages {
        match s.millis {
            Some(ms) => {
                let _ = writeln!(out, "| {} | {} ({ms:.1} ms) |", s.name, s.detail);
            }
            None => {
                let _ = writeln!(out, "| {} | {} |", s.name, s.detail);
            }
        }
    }
    if let Some(c) = &run.n_choice {
        let _ = writeln!(out, "\n## Choice of n\n\n| condition | largest n |\n|---|---|");
        for (cond, n) in &c.witnesses {
            let _ = writeln!(out, "| {cond} | {n} |");
        }
        let _ = writeln!(out, "\nn = {}", c.n);
    }
    if let (Some((cert, method)), Some(ts)) = (&run.certificate, &run.ts) {
        let _ = writeln!(out, "\n## Certificate\n");
        let _ = writeln!(out, "- method: {}", method_name(*method));
        let _ = writeln!(out, "- λ = {}", fmt_q(&cert.lambda));
        let _ = writeln!(out, "- bound = {}", fmt_q(&cert.bound));
        let opt = |x: &Option<Q>| x.as_ref().map_or_else(|| "inf".to_string(), fmt_q);
        let _ = writeln!(out, "- cheapest cycle: {}", opt(&cert.checks.min_cycle));
        let _ = writeln!(out, "- cheapest disk walk: {}\n", opt(&cert.checks.min_disk_walk));
        out.push_str(&cost_grid(&cert.cost.values, ts));
    }
}

pub fn certify_md(run: &CertifyRun) -> String {
    let mut out = String::new();
    certify_md_body(run, &mut out);
    let _ = writeln!(out, "\n**Verdict:** {}", run.verdict.label());
    out
}

pub fn surface_line(s: &CombSurface, ts: &TurnSystem) -> String {
    let inv = s.invariants(ts);
    json!({
        "deg": inv.deg,
        "neg_chi": inv.neg_chi(),
        "ratio": fmt_q(&Q::new(inv.neg_chi().into(), (inv.deg as i64).into())),
        "surface": s.to_json(),
    })
    .to_string()
}

/// `(min_ratio, bound)` relation: equal, a gap, or a weak-duality violation.
fn comparison(run: &CertifyRun, o: &SearchOutcome) -> Option<(String, Q)> {
    let bound = &run.certificate.as_ref()?.0.bound;
    let r = o.min_ratio.as_ref()?;
    let gap = r.clone() - bound;
    let rel = match gap.cmp(&Q::from_integer(0.into())) {
        std::cmp::Ordering::Equal => "equal",
        std::cmp::Ordering::Greater => "gap",
        std::cmp::Ordering::Less => "violation",
    };
    Some((rel.to_string(), gap))
}

fn search_summary(run: &CertifyRun, o: &SearchOutcome) -> Value {
    let mut v = json!({
        "max_degree": o.budget.max_degree,
        "max_piece_turns": o.budget.max_piece_turns,
        "max_pieces": o.budget.max_pieces,
        "surfaces": o.surfaces.len(),
        "min_ratio": o.min_ratio.as_ref().map(fmt_q),
        "warning": o.warning,
    });
    if let Some((rel, gap)) = comparison(run, o) {
        v["comparison"] = json!({ "relation": rel, "gap": fmt_q(&gap) });
    }
    v
}

pub fn search_json(run: &CertifyRun, o: Option<&SearchOutcome>) -> String {
    let mut v = certify_json(run);
    v["search"] = o.map_or(Value::Null, |o| search_summary(run, o));
    v.to_string()
}

pub fn search_md(run: &CertifyRun, o: Option<&SearchOutcome>) -> String {
    let mut out = String::new();
    certify_md_body(run, &mut out);
    if let Some(o) = o {
        let _ = writeln!(out, "\n## Search\n");
        let _ = writeln!(
            out,
            "- budget: degree ≤ {}, piece turns ≤ {}, pieces ≤ {}",
            o.budget.max_degree, o.budget.max_piece_turns, o.budget.max_pieces
        );
        let _ = writeln!(out, "- surfaces: {}", o.surfaces.len());
        if let Some(w) = &o.warning {
            let _ = writeln!(out, "- warning: {w}");
        }
        let bound = run.certificate.as_ref().map(|(c, _)| fmt_q(&c.bound));
        let _ = writeln!(out, "\n| min ratio | certified bound |\n|---|---|");
        let _ = writeln!(
            out,
            "| {} | {} |",
            o.min_ratio.as_ref().map_or("-".into(), fmt_q),
            bound.unwrap_or_else(|| "-".into())
        );
        if let Some((rel, gap)) = comparison(run, o) {
            let _ = writeln!(out, "\nrelation: {rel} ({})", fmt_q(&gap));
        }
    }
    let _ = writeln!(out, "\n**Verdict:** {}", run.verdict.label());
    out
}

pub fn rf_json(r: &RfReport) -> Value {
    json!({
        "group": r.group,
        "element": r.element,
        "subgroup": r.subgroup,
        "n": r.n,
        "is_n_rtf": r.is_n_rtf,
        "is_n_rf": r.is_n_rf,
        "max_rtf": r.max_rtf,
        "max_rf": r.max_rf,
        "malnormal": r.malnormal,
    })
}

pub fn rf_md(r: &RfReport) -> String {
    format!(
        "# rf-check\n\n- group: {}\n- element: {}\n- subgroup: {{{}}}\n\n| property | value |\n|---|---|\n| {n}-RTF | {} |\n| {n}-RF | {} |\n| max RTF | {} |\n| max RF | {} |\n| malnormal | {} |\n",
        r.group,
        r.element,
        r.subgroup.join(", "),
        r.is_n_rtf,
        r.is_n_rf,
        r.max_rtf,
        r.max_rf,
        r.malnormal,
        n = r.n
    )
}
