//! One function per subcommand. Each prints its report (text or one JSON
//! line) to stdout and returns the exit code.

use crate::{Failure, Format, MethodArg, RunConfig};
use serde_json::{json, Value};
use snpkit::containment::{
    decide_containment, falsify_containment, ContainmentOptions, ContainmentVerdict, Counterexample, Method, MethodChoice,
    Outcome,
};
use snpkit::decompose::connected_decomposition;
use snpkit::hn_transform::{delta_transform, HnOptions};
use snpkit::logic::{check_model, parse_sentence, print_sentence, Sentence, SentenceStats};
use snpkit::ready::{gmsnp_context, gmsnp_recolouring_search, omega_prime as omega_prime_transform, omega_transform, GOutcome, OmegaOptions};
use snpkit::recolouring::{
    check_recolouring, enumerate_colours, recolouring_search, ColourTable, ConditionMode, SearchOutcome, SearchStats,
};
use snpkit::structures::{canonical_key, parse_structure, print_structure};
use std::path::{Path, PathBuf};

const SCHEMA_VERSION: u32 = 1;

pub fn schema_id(kind: &str) -> String {
    format!("snpkit.{kind}/{SCHEMA_VERSION}")
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(66, "input", format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::new(73, "output", format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Sentence, Failure> {
    parse_sentence(&read(path)?).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

/// `dir/stem.snp` becomes `dir/stem.<tag>.snp`.
fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.{tag}.snp"))
}

fn emit(cfg: &RunConfig, kind: &str, mut report: Value, text: impl FnOnce() -> String) {
    match cfg.format {
        Format::Json => {
            let obj = report.as_object_mut().expect("reports are objects");
            obj.insert("schema".into(), json!(schema_id(kind)));
            println!("{report}");
        }
        Format::Text => print!("{}", text()),
    }
}

fn stats_json(s: &SentenceStats) -> Value {
    json!({ "ht": s.ht, "lh": s.lh, "wd": s.wd, "ar": s.ar })
}

fn big(n: u128) -> Value {
    u64::try_from(n).map(Value::from).unwrap_or_else(|_| Value::from(n.to_string()))
}

pub fn check_syntax(cfg: &RunConfig, file: &Path) -> Result<u8, Failure> {
    let phi = load(file)?;
    let c = phi.classify();
    let s = phi.stats();
    let report = json!({
        "monotone": c.is_monotone,
        "guarded": c.is_guarded,
        "monadic": c.is_monadic,
        "connected": c.is_connected,
        "gmsnp": c.is_gmsnp(),
        "mmsnp": c.is_mmsnp(),
        "clauses": phi.clauses().len(),
        "stats": stats_json(&s),
    });
    emit(cfg, "check-syntax", report, || {
        let flag = |b: bool| if b { "yes" } else { "no" };
        format!(
            "monotone {}\nguarded {}\nmonadic {}\nconnected {}\nGMSNP {}\nMMSNP {}\n{s}\n",
            flag(c.is_monotone),
            flag(c.is_guarded),
            flag(c.is_monadic),
            flag(c.is_connected),
            flag(c.is_gmsnp()),
            flag(c.is_mmsnp()),
        )
    });
    Ok(0)
}

pub fn stats(cfg: &RunConfig, file: &Path) -> Result<u8, Failure> {
    let s = load(file)?.stats();
    emit(cfg, "stats", stats_json(&s), || format!("{s}\n"));
    Ok(0)
}

pub fn modelcheck(cfg: &RunConfig, sentence: &Path, structure: &Path) -> Result<u8, Failure> {
    let phi = load(sentence)?;
    let a = parse_structure(&read(structure)?, phi.input()).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", structure.display(), f.message);
        f
    })?;
    let witness = check_model(&phi, &a, &cfg.budget)?;
    let text = witness.as_ref().map(print_structure);
    emit(cfg, "modelcheck", json!({ "model": witness.is_some(), "witness": text }), || match &text {
        Some(w) => format!("model\n{w}"),
        None => "no model\n".into(),
    });
    Ok(if witness.is_some() { 0 } else { 1 })
}

pub fn decompose(cfg: &RunConfig, file: &Path, out_dir: Option<PathBuf>, max_disjuncts: usize) -> Result<u8, Failure> {
    let phi = load(file)?;
    let d = connected_decomposition(&phi, max_disjuncts)?;
    let dir = out_dir.unwrap_or_else(|| file.parent().map(Path::to_path_buf).unwrap_or_default());
    std::fs::create_dir_all(&dir).map_err(|e| Failure::new(73, "output", format!("{}: {e}", dir.display())))?;
    let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    let mut files = Vec::new();
    let mut manifest = String::new();
    for (i, (s, prov)) in d.disjuncts.iter().zip(&d.provenance).enumerate() {
        let path = dir.join(format!("{stem}.{}.snp", i + 1));
        write(&path, &print_sentence(s))?;
        for &(clause, component) in prov {
            let line = json!({
                "schema": schema_id("decompose-manifest"),
                "disjunct": i + 1,
                "file": path.display().to_string(),
                "clause": clause,
                "component": component,
            });
            manifest.push_str(&line.to_string());
            manifest.push('\n');
        }
        files.push(path.display().to_string());
    }
    let manifest_path = dir.join(format!("{stem}.manifest.jsonl"));
    write(&manifest_path, &manifest)?;
    let report = json!({
        "disjuncts": d.disjuncts.len(),
        "product_size": big(d.product_size),
        "files": files,
        "manifest": manifest_path.display().to_string(),
    });
    emit(cfg, "decompose", report, || {
        let mut t = format!("{} disjuncts ({} before removing duplicates)\n", d.disjuncts.len(), d.product_size);
        for f in &files {
            t.push_str(&format!("wrote {f}\n"));
        }
        t.push_str(&format!("wrote {}\n", manifest_path.display()));
        t
    });
    Ok(0)
}

pub fn delta(cfg: &RunConfig, file: &Path, max_clause_vars: Option<usize>, subsume: bool, out: Option<PathBuf>) -> Result<u8, Failure> {
    let phi = load(file)?;
    let d = delta_transform(&phi, &HnOptions { max_clause_vars, subsume }, &cfg.budget)?;
    let out = out.unwrap_or_else(|| sibling(file, "delta"));
    write(&out, &print_sentence(&d.sentence))?;
    let r = &d.report;
    let c = &r.counters;
    let report = json!({
        "output": out.display().to_string(),
        "before": stats_json(&r.before),
        "after": stats_json(&r.after),
        "rho": r.rho,
        "clause_vars": r.clause_vars,
        "counters": {
            "phi_prime": c.phi_prime,
            "order": c.order,
            "item2_candidates": c.item2_candidates,
            "item2": c.item2,
            "item3_candidates": c.item3_candidates,
            "item3": c.item3,
            "correctness": c.correctness,
            "total": c.total,
        },
    });
    emit(cfg, "delta", report, || {
        format!("wrote {}\nbefore {}\nafter  {}\n{} piece symbols, {} clauses\n", out.display(), r.before, r.after, r.rho, c.total)
    });
    Ok(0)
}

fn colour_json(table: &ColourTable, id: usize) -> Value {
    let c = &table.colours[id];
    let key = canonical_key(c, 0);
    json!({ "id": id, "key": { "size": key.size, "code": key.code }, "structure": print_structure(c) })
}

fn search_stats_json(s: &SearchStats) -> Value {
    json!({ "representatives": s.representatives, "rounds": s.rounds, "nogoods": s.nogoods, "nodes": s.nodes })
}

fn outcome_name(o: &SearchOutcome) -> (&'static str, Option<&str>) {
    match o {
        SearchOutcome::Found(_) => ("found", None),
        SearchOutcome::Absent => ("absent", None),
        SearchOutcome::Unknown(r) => ("unknown", Some(r.as_str())),
    }
}

pub fn recolour(
    cfg: &RunConfig,
    phi1: &Path,
    phi2: &Path,
    naive_iii: bool,
    n: Option<usize>,
    emit_map: Option<PathBuf>,
) -> Result<u8, Failure> {
    let (p1, p2) = (load(phi1)?, load(phi2)?);
    let n = n.unwrap_or_else(|| p1.stats().ar.max(p2.stats().ar).max(1));
    let c1 = enumerate_colours(&p1, n, &cfg.budget)?;
    let c2 = enumerate_colours(&p2, n, &cfg.budget)?;
    let (outcome, stats) = recolouring_search(&p1, &p2, &c1, &c2, &cfg.budget)?;
    let (name, reason) = outcome_name(&outcome);
    let mut naive_ok = None;
    let mut map = None;
    if let SearchOutcome::Found(xi) = &outcome {
        if let Some(path) = &emit_map {
            let pairs: Vec<Value> = xi
                .map
                .iter()
                .enumerate()
                .map(|(a, &b)| json!({ "from": colour_json(&c1, a), "to": colour_json(&c2, b) }))
                .collect();
            let doc = json!({ "schema": schema_id("recolouring"), "n": n, "pairs": pairs });
            write(path, &format!("{doc}\n"))?;
        }
        if naive_iii {
            naive_ok = match check_recolouring(&p1, &p2, xi, &c1, &c2, ConditionMode::Naive, &cfg.budget) {
                Ok(None) => Some("passed"),
                Ok(Some(f)) => {
                    return Err(Failure::new(70, "internal", format!("brute-force check rejects the found map: {f:?}")));
                }
                Err(e) if e.is_budget() => Some("unknown"),
                Err(e) => return Err(e.into()),
            };
        }
        map = Some(xi.map.clone());
    }
    let report = json!({
        "outcome": name,
        "reason": reason,
        "n": n,
        "colours1": c1.len(),
        "colours2": c2.len(),
        "stats": search_stats_json(&stats),
        "naive_iii": naive_ok,
        "map": map,
    });
    emit(cfg, "recolour", report, || {
        let mut t = format!("{name}: {} colours to {} colours (n = {n}), {} nodes\n", c1.len(), c2.len(), stats.nodes);
        if let Some(r) = reason {
            t.push_str(&format!("{r}\n"));
        }
        if let Some(v) = naive_ok {
            t.push_str(&format!("brute-force re-check: {v}\n"));
        }
        if let Some(p) = &emit_map {
            if matches!(outcome, SearchOutcome::Found(_)) {
                t.push_str(&format!("wrote {}\n", p.display()));
            }
        }
        t
    });
    Ok(match outcome {
        SearchOutcome::Found(_) => 0,
        SearchOutcome::Absent => 1,
        SearchOutcome::Unknown(_) => 2,
    })
}

fn counterexample_json(c: &Counterexample) -> Value {
    json!({
        "size": c.structure.size(),
        "structure": print_structure(&c.structure),
        "expansion": print_structure(&c.expansion),
    })
}

fn verdict_json(v: &ContainmentVerdict) -> Value {
    let pairs: Vec<Value> = v
        .pairs
        .iter()
        .map(|p| {
            let (name, reason) = outcome_name(&p.outcome);
            let map = match &p.outcome {
                SearchOutcome::Found(xi) => Some(xi.map.clone()),
                _ => None,
            };
            json!({ "lhs": p.lhs, "rhs": p.rhs, "outcome": name, "reason": reason, "stats": search_stats_json(&p.stats), "map": map })
        })
        .collect();
    let stages: Vec<Value> = v.stages.iter().map(|s| json!({ "name": s.name, "detail": s.detail })).collect();
    json!({
        "outcome": outcome_str(v.outcome),
        "method": match v.method {
            Method::Recolouring => "recolouring",
            Method::OracleFalsified => "oracle_falsified",
            Method::OracleExhausted => "oracle_exhausted",
            Method::Budget => "budget",
        },
        "reason": v.reason,
        "counterexample": v.counterexample.as_ref().map(counterexample_json),
        "pairs": pairs,
        "stages": stages,
    })
}

fn outcome_str(o: Outcome) -> &'static str {
    match o {
        Outcome::Contained => "contained",
        Outcome::NotContained => "not_contained",
        Outcome::Unknown => "unknown",
    }
}

fn exit_for(o: Outcome) -> u8 {
    match o {
        Outcome::Contained => 0,
        Outcome::NotContained => 1,
        Outcome::Unknown => 2,
    }
}

pub fn contain(
    cfg: &RunConfig,
    phi1: &Path,
    phi2: &Path,
    method: MethodArg,
    max_size: usize,
    max_disjuncts: usize,
    raw: bool,
) -> Result<u8, Failure> {
    let (p1, p2) = (load(phi1)?, load(phi2)?);
    let opts = ContainmentOptions {
        method: match method {
            MethodArg::Auto => MethodChoice::Auto,
            MethodArg::Recolouring => MethodChoice::Recolouring,
            MethodArg::Oracle => MethodChoice::Oracle,
        },
        raw,
        max_size,
        max_disjuncts,
        hn: HnOptions::default(),
        budget: cfg.budget,
    };
    let v = match decide_containment(&p1, &p2, &opts) {
        Err(e) if e.is_budget() => {
            let reason = e.to_string();
            emit(cfg, "contain", json!({ "outcome": "unknown", "method": "budget", "reason": reason, "counterexample": null, "pairs": [], "stages": [] }), || {
                format!("unknown\n{reason}\n")
            });
            return Ok(2);
        }
        r => r?,
    };
    emit(cfg, "contain", verdict_json(&v), || {
        let mut t = format!("{} ({:?})\n", outcome_str(v.outcome), v.method);
        if let Some(r) = &v.reason {
            t.push_str(&format!("{r}\n"));
        }
        for s in &v.stages {
            t.push_str(&format!("  {}: {}\n", s.name, s.detail));
        }
        if let Some(c) = &v.counterexample {
            t.push_str(&format!("counterexample on {} elements:\n{}", c.structure.size(), print_structure(&c.structure)));
        }
        t
    });
    Ok(exit_for(v.outcome))
}

pub fn falsify(cfg: &RunConfig, phi1: &Path, phi2: &Path, max_size: usize) -> Result<u8, Failure> {
    let (p1, p2) = (load(phi1)?, load(phi2)?);
    let cex = falsify_containment(&p1, &p2, max_size, &cfg.budget)?;
    emit(cfg, "falsify", json!({ "max_size": max_size, "counterexample": cex.as_ref().map(counterexample_json) }), || match &cex {
        Some(c) => format!("counterexample on {} elements:\n{}", c.structure.size(), print_structure(&c.structure)),
        None => format!("no counterexample on at most {max_size} elements\n"),
    });
    Ok(if cex.is_some() { 1 } else { 2 })
}

pub fn omega(cfg: &RunConfig, file: &Path, max_clause_vars: Option<usize>, subsume: bool, out: Option<PathBuf>) -> Result<u8, Failure> {
    let phi = load(file)?;
    let o = omega_transform(&phi, &OmegaOptions { max_clause_vars, subsume }, &cfg.budget)?;
    let out = out.unwrap_or_else(|| sibling(file, "omega"));
    write(&out, &print_sentence(&o.sentence))?;
    let r = &o.report;
    let c = &r.counters;
    let pieces: Vec<&str> = o.pieces.iter().map(|p| p.name.as_str()).collect();
    let report = json!({
        "output": out.display().to_string(),
        "before": stats_json(&r.before),
        "after": stats_json(&r.after),
        "clause_vars": r.clause_vars,
        "pieces": pieces,
        "counters": {
            "rewritten": c.rewritten,
            "labelling": c.labelling,
            "closure": c.closure,
            "pieces": c.pieces,
            "defining": c.defining,
            "forbidding": c.forbidding,
            "total": c.total,
        },
    });
    emit(cfg, "omega", report, || {
        format!("wrote {}\nbefore {}\nafter  {}\n{} guarded pieces, {} clauses\n", out.display(), r.before, r.after, c.pieces, c.total)
    });
    Ok(0)
}

pub fn omega_prime(cfg: &RunConfig, file: &Path, n: usize, out: Option<PathBuf>) -> Result<u8, Failure> {
    let phi = load(file)?;
    let o = omega_prime_transform(&phi, n, &cfg.budget)?;
    let out = out.unwrap_or_else(|| sibling(file, "omega-prime"));
    write(&out, &print_sentence(&o.sentence))?;
    let c = &o.counters;
    let after = o.sentence.stats();
    let report = json!({
        "output": out.display().to_string(),
        "n": n,
        "before": stats_json(&phi.stats()),
        "after": stats_json(&after),
        "colours": o.colours.iter().map(print_structure).collect::<Vec<_>>(),
        "counters": {
            "colours": c.colours,
            "covering": c.covering,
            "consistency": c.consistency,
            "conflicts": c.conflicts,
            "violations": c.violations,
            "order": c.order,
            "cycles": c.cycles,
        },
    });
    emit(cfg, "omega-prime", report, || {
        format!("wrote {}\n{} colour symbols, {} clauses\nafter {after}\n", out.display(), c.colours, o.sentence.clauses().len())
    });
    Ok(0)
}

pub fn grecolour(cfg: &RunConfig, phi1: &Path, phi2: &Path, max_size: Option<usize>) -> Result<u8, Failure> {
    let (p1, p2) = (load(phi1)?, load(phi2)?);
    let ctx = gmsnp_context(&p1, &p2, max_size, &cfg.budget)?;
    let (outcome, s) = gmsnp_recolouring_search(&ctx, &cfg.budget)?;
    let (name, reason, map) = match &outcome {
        GOutcome::Found(xi) => ("found", None, Some(xi.map.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>())),
        GOutcome::Absent => ("absent", None, None),
        GOutcome::Unknown(r) => ("unknown", Some(r.as_str()), None),
    };
    let report = json!({
        "outcome": name,
        "reason": reason,
        "n": ctx.n,
        "max_size": ctx.max_size,
        "stats": { "colours1": s.colours1, "colours2": s.colours2, "skeletons": s.skeletons, "nodes": s.nodes },
        "map": map,
    });
    emit(cfg, "grecolour", report, || {
        format!(
            "{name}: {} guarded colours to {}, {} skeletons on at most {} elements, {} nodes\n",
            s.colours1, s.colours2, s.skeletons, ctx.max_size, s.nodes
        )
    });
    Ok(match outcome {
        GOutcome::Found(_) => 0,
        GOutcome::Absent => 1,
        GOutcome::Unknown(_) => 2,
    })
}
