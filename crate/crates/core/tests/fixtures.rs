//! Notation and rule fixtures.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use ucdf_core::render::{emit_dot, emit_svg, StyleTable};
use ucdf_core::text::{canonicalize, parse};
use ucdf_core::{validate, EdgeKind, NodeKind, RuleCode};
use ucdf_testkit::fixtures_dir;

fn files(sub: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(fixtures_dir().join(sub))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "ucdf"))
        .collect();
    v.sort();
    v
}

#[test]
fn notation_fixtures_are_clean_and_canonical() {
    let style = StyleTable::default();
    let all = files("notation");
    assert!(all.len() >= 26);
    for f in all {
        let text = fs::read_to_string(&f).unwrap();
        let d = parse(&text).unwrap_or_else(|e| panic!("{}: {e}", f.display()));
        assert!(validate(&d).is_empty(), "{}: {:?}", f.display(), validate(&d));
        assert_eq!(canonicalize(&text).unwrap(), text, "{}", f.display());
        emit_dot(&d, &style, false).unwrap();
        emit_svg(&d, &style, false).unwrap();
    }
}

#[test]
fn notation_covers_every_kind() {
    let mut nodes = BTreeSet::new();
    let mut edges = BTreeSet::new();
    let mut markers = BTreeSet::new();
    let (mut euler, mut as_process) = (false, false);
    for f in files("notation") {
        let d = parse(&fs::read_to_string(f).unwrap()).unwrap();
        nodes.extend(d.nodes().map(|n| n.kind()));
        edges.extend(d.edges().map(|e| e.kind.style_key()));
        markers.extend(d.timelines().flat_map(|t| t.markers().iter().copied()));
        euler |= !d.euler().is_empty();
        as_process |= d.nodes().any(|n| n.as_process());
    }
    assert_eq!(nodes, NodeKind::all().into_iter().collect());
    assert_eq!(edges, EdgeKind::ALL.iter().map(|k| k.style_key()).collect());
    assert_eq!(markers.len(), 3);
    assert!(euler && as_process);
}

#[test]
fn each_rule_has_a_trigger_and_a_repair() {
    for code in RuleCode::ALL {
        let dir = fixtures_dir().join("rules");
        let bad = parse(&fs::read_to_string(dir.join(format!("{code}.bad.ucdf"))).unwrap()).unwrap();
        let v = validate(&bad);
        assert_eq!(v.len(), 1, "{code}: {v:?}");
        assert_eq!(v[0].rule_code, code);
        let good = parse(&fs::read_to_string(dir.join(format!("{code}.good.ucdf"))).unwrap()).unwrap();
        assert!(validate(&good).is_empty(), "{code}: {:?}", validate(&good));
    }
}

#[test]
fn function_a_dot_is_frozen() {
    let dir = fixtures_dir().join("programs");
    let d = parse(&fs::read_to_string(dir.join("function_a.ucdf")).unwrap()).unwrap();
    let dot = emit_dot(&d, &StyleTable::default(), false).unwrap();
    assert_eq!(dot, fs::read_to_string(dir.join("function_a.dot")).unwrap());
}
