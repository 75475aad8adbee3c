//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ucdf_core::extract::{
    coarsen_to_blocks, elide_copy_machinery, extract, isomorphic, keyed_view, CallStyle, ExtractOptions, Granularity,
};
use ucdf_core::flowc::compile;
use ucdf_core::render::{emit_dot, emit_svg, StyleTable};
use ucdf_core::text::{canonicalize, parse, serialize, structurally_equal};
use ucdf_core::trace::{conform, run, ConformOptions, RunLimits};
use ucdf_core::{validate, EdgeKind, NodeKind, RuleCode};
use ucdf_testkit::{
    branching_program, corpus, fixtures_dir, mutation_kills, random_diagram, straight_line_program, structural_facts,
};

type Verdict = Result<String, String>;

fn ucdf_files(sub: &str, ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(fixtures_dir().join(sub))
        .expect("fixture dir")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == ext))
        .collect();
    v.sort();
    v
}

fn read(p: &Path) -> Result<String, String> {
    fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<Duration, String> {
    let took = start.elapsed();
    if took < limit {
        Ok(took)
    } else {
        Err(format!("{what} took {took:?}, limit {limit:?}"))
    }
}

fn notation_coverage() -> Verdict {
    let start = Instant::now();
    let files = ucdf_files("notation", "ucdf");
    if files.len() < 26 {
        return Err(format!("{} fixtures, need 26", files.len()));
    }
    let style = StyleTable::default();
    let (mut nodes, mut edges) = (BTreeSet::new(), BTreeSet::new());
    for f in &files {
        let name = f.file_name().unwrap().to_string_lossy();
        let text = read(f)?;
        let d = parse(&text).map_err(|e| format!("{name}: {e}"))?;
        let v = validate(&d);
        if !v.is_empty() {
            return Err(format!("{name}: {}", v[0].render(&d)));
        }
        emit_dot(&d, &style, false).map_err(|e| format!("{name}: {e}"))?;
        emit_svg(&d, &style, false).map_err(|e| format!("{name}: {e}"))?;
        if canonicalize(&text).map_err(|e| format!("{name}: {e}"))? != text {
            return Err(format!("{name}: fmt changes the file"));
        }
        nodes.extend(d.nodes().map(|n| n.kind()));
        edges.extend(d.edges().map(|e| e.kind.style_key()));
    }
    let missing_nodes: Vec<_> = NodeKind::all().into_iter().filter(|k| !nodes.contains(k)).collect();
    let missing_edges: Vec<_> = EdgeKind::ALL.iter().filter(|k| !edges.contains(k.style_key())).collect();
    if !missing_nodes.is_empty() || !missing_edges.is_empty() {
        return Err(format!("not covered: {missing_nodes:?} {missing_edges:?}"));
    }
    let took = within(start, Duration::from_secs(5), "notation corpus")?;
    Ok(format!("{} fixtures, every node and edge kind, {took:?}", files.len()))
}

fn rule_suite() -> Verdict {
    let dir = fixtures_dir().join("rules");
    for code in RuleCode::ALL {
        let bad = parse(&read(&dir.join(format!("{code}.bad.ucdf")))?).map_err(|e| format!("{code}: {e}"))?;
        let v = validate(&bad);
        if v.len() != 1 || v[0].rule_code != code {
            return Err(format!("{code}: trigger reports {v:?}"));
        }
        let good = parse(&read(&dir.join(format!("{code}.good.ucdf")))?).map_err(|e| format!("{code}: {e}"))?;
        if !validate(&good).is_empty() {
            return Err(format!("{code}: repaired sibling still reports {:?}", validate(&good)));
        }
    }
    Ok(format!("{}/16 rule codes covered", RuleCode::ALL.len()))
}

fn example_programs() -> Verdict {
    let all = corpus();
    for c in &all {
        let (p, s) = compile(&read(&c.source_path())?).map_err(|e| format!("{}: {e:?}", c.name))?;
        let d = extract(&p, &s, &c.options()).map_err(|e| format!("{}: {e}", c.name))?.diagram;
        if let Some(v) = validate(&d).first() {
            return Err(format!("{}: {}", c.name, v.render(&d)));
        }
        if serialize(&d) != read(&c.golden_path())? {
            return Err(format!("{}: differs from golden", c.name));
        }
        structural_facts(c.name, &d).map_err(|e| format!("{}: {e}", c.name))?;
    }
    Ok(format!("{} programs match goldens and show their structure", all.len()))
}

fn conforms(src: &str) -> Result<bool, String> {
    let (p, s) = compile(src).map_err(|e| format!("{e:?}"))?;
    let r = extract(&p, &s, &ExtractOptions::default()).map_err(|e| e.to_string())?;
    let t = run(&p, &s, None, RunLimits::default()).map_err(|e| e.to_string())?;
    let found = conform(&r.diagram, &t, ConformOptions::default()).map_err(|e| e.to_string())?;
    match found.first() {
        None => Ok(r.straight_line),
        Some(d) => Err(d.to_string()),
    }
}

fn oracle_conformance() -> Verdict {
    let start = Instant::now();
    for c in corpus() {
        let (p, s) = compile(&read(&c.source_path())?).map_err(|e| format!("{e:?}"))?;
        let d = extract(&p, &s, &c.options()).map_err(|e| e.to_string())?.diagram;
        let t = run(&p, &s, None, RunLimits::default()).map_err(|e| format!("{}: {e}", c.name))?;
        let found = conform(&d, &t, ConformOptions { strict_goto: true }).map_err(|e| e.to_string())?;
        if let Some(x) = found.first() {
            return Err(format!("{}: {x}", c.name));
        }
    }
    for seed in 0..200 {
        match conforms(&straight_line_program(seed)) {
            Ok(true) => {}
            Ok(false) => return Err(format!("straight-line seed {seed} was not checked exactly")),
            Err(e) => return Err(format!("straight-line seed {seed}: {e}")),
        }
    }
    for seed in 0..200 {
        conforms(&branching_program(seed)).map_err(|e| format!("branching seed {seed}: {e}"))?;
    }
    let took = within(start, Duration::from_secs(60), "conformance")?;
    Ok(format!("corpus, 200 straight-line and 200 branching programs, {took:?}"))
}

fn mutation_killing() -> Verdict {
    let (mut killed, mut total) = (0, 0);
    for c in corpus() {
        let (p, s) = compile(&read(&c.source_path())?).map_err(|e| format!("{e:?}"))?;
        let t = run(&p, &s, None, RunLimits::default()).map_err(|e| e.to_string())?;
        let o = ExtractOptions {
            granularity: Granularity::Operator,
            call_style: c.call_style,
            ..ExtractOptions::default()
        };
        let d = extract(&p, &s, &o).map_err(|e| e.to_string())?.diagram;
        let (k, n) = mutation_kills(&d, &t);
        killed += k;
        total += n;
    }
    let rate = killed as f64 / total.max(1) as f64;
    let line = format!("{killed}/{total} mutants killed ({:.1}%)", rate * 100.0);
    if total > 0 && rate >= 0.95 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn round_trip() -> Verdict {
    for seed in 0..1000 {
        let d = random_diagram(seed);
        let text = serialize(&d);
        let back = parse(&text).map_err(|e| format!("seed {seed}: {e}"))?;
        if !structurally_equal(&d, &back) {
            return Err(format!("seed {seed}: parse(serialize(d)) differs"));
        }
        if serialize(&back) != text {
            return Err(format!("seed {seed}: canonical text is not a fixed point"));
        }
    }
    Ok(String::from("1000 random diagrams, 0 failures"))
}

fn style_consistency() -> Verdict {
    for c in corpus() {
        let (p, s) = compile(&read(&c.source_path())?).map_err(|e| format!("{e:?}"))?;
        let at = |granularity, call_style| {
            let o = ExtractOptions {
                granularity,
                call_style,
                ..ExtractOptions::default()
            };
            extract(&p, &s, &o).map(|r| r.diagram).map_err(|e| e.to_string())
        };
        for style in [CallStyle::Simplified, CallStyle::Full] {
            let coarse = coarsen_to_blocks(&at(Granularity::Operator, style)?).map_err(|e| e.to_string())?;
            if keyed_view(&coarse) != keyed_view(&at(Granularity::Block, style)?) {
                return Err(format!("{}: operator level does not coarsen to block level", c.name));
            }
        }
        for g in Granularity::ALL {
            let elided = elide_copy_machinery(&at(g, CallStyle::Full)?);
            if !isomorphic(&at(g, CallStyle::Simplified)?, &elided) {
                return Err(format!("{} {g:?}: simplified differs from the full style", c.name));
            }
        }
    }
    Ok(String::from("coarsening and simplified/full agree on every corpus program"))
}

/// Runs the binary; returns exit code, stdout, stderr and the output file.
fn invoke(args: &[String], out: Option<&Path>) -> (Option<i32>, Vec<u8>, Vec<u8>, Option<Vec<u8>>) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ucdf"));
    cmd.args(args).env_remove("UCDF_STYLE");
    if let Some(o) = out {
        let _ = fs::remove_file(o);
        cmd.arg("-o").arg(o);
    }
    let r = cmd.output().expect("spawn ucdf");
    (r.status.code(), r.stdout, r.stderr, out.and_then(|o| fs::read(o).ok()))
}

fn determinism() -> Verdict {
    let tmp = std::env::temp_dir().join(format!("ucdf-acceptance-{}", std::process::id()));
    fs::create_dir_all(&tmp).map_err(|e| e.to_string())?;
    let out = tmp.join("out");
    let s = |x: &str| String::from(x);
    let mut jobs: Vec<(Vec<String>, bool)> = Vec::new();
    let mut diagrams = ucdf_files("notation", "ucdf");
    diagrams.extend(ucdf_files("rules", "ucdf"));
    diagrams.extend(ucdf_files("programs", "ucdf"));
    for f in &diagrams {
        let f = f.to_string_lossy().into_owned();
        jobs.push((vec![s("check"), f.clone()], false));
        jobs.push((vec![s("fmt"), f.clone()], false));
        for format in ["dot", "svg"] {
            jobs.push((vec![s("render"), f.clone(), s("--format"), s(format), s("--force")], true));
        }
        let d = parse(&read(Path::new(&f))?).map_err(|e| e.to_string())?;
        let process = d.nodes().find(|n| n.is_process_like()).map(|n| s(n.ident()));
        if let Some(p) = process {
            jobs.push((vec![s("compact"), f.clone(), s("--process"), p], true));
        }
    }
    for c in corpus() {
        let src = c.source_path().to_string_lossy().into_owned();
        let mut extract = vec![s("extract"), src.clone()];
        extract.extend(c.cli_flags());
        jobs.push((extract, true));
        jobs.push((vec![s("trace"), src.clone()], true));
        let mut conform = vec![s("conform"), src];
        conform.extend(c.cli_flags());
        jobs.push((conform, false));
    }
    let mut failures = Vec::new();
    for (args, to_file) in &jobs {
        let target = to_file.then_some(out.as_path());
        let a = invoke(args, target);
        let b = invoke(args, target);
        if a.0.is_none() || a.0 == Some(4) {
            failures.push(format!("{} crashed: {}", args.join(" "), String::from_utf8_lossy(&a.2)));
        } else if a != b {
            failures.push(format!("{} differs between runs", args.join(" ")));
        }
    }
    let _ = fs::remove_dir_all(&tmp);
    match failures.first() {
        None => Ok(format!("{} invocations repeated byte-identically", jobs.len())),
        Some(f) => Err(format!("{} of {}: {f}", failures.len(), jobs.len())),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("notation coverage", notation_coverage),
        ("validator rule suite", rule_suite),
        ("example programs", example_programs),
        ("oracle conformance", oracle_conformance),
        ("mutation killing", mutation_killing),
        ("round-trip property", round_trip),
        ("style consistency", style_consistency),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let verdict = std::panic::catch_unwind(check).unwrap_or_else(|_| Err(String::from("panicked")));
        match verdict {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
