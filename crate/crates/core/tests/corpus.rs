//! The worked-example programs: goldens, structure, oracle agreement,
//! mutations and the relations between extraction styles.

use std::fs;

use ucdf_core::extract::{
    coarsen_to_blocks, elide_copy_machinery, extract, isomorphic, keyed_view, CallStyle, ExtractOptions, Granularity,
    Grouping,
};
use ucdf_core::flowc::compile;
use ucdf_core::text::serialize;
use ucdf_core::trace::{conform, run, ConformOptions, RunLimits};
use ucdf_core::validate;
use ucdf_testkit::{corpus, mutation_kills, structural_facts};

fn load(src: &std::path::Path) -> (ucdf_core::flowc::Program, ucdf_core::flowc::SymbolTable) {
    compile(&fs::read_to_string(src).unwrap()).unwrap()
}

#[test]
fn goldens_match_and_validate() {
    for c in corpus() {
        let (p, s) = load(&c.source_path());
        let d = extract(&p, &s, &c.options()).unwrap().diagram;
        assert!(validate(&d).is_empty(), "{}: {:?}", c.name, validate(&d));
        let golden = fs::read_to_string(c.golden_path()).unwrap();
        assert_eq!(serialize(&d), golden, "{}", c.name);
    }
}

#[test]
fn structural_facts_hold() {
    for c in corpus() {
        let (p, s) = load(&c.source_path());
        let d = extract(&p, &s, &c.options()).unwrap().diagram;
        if let Err(e) = structural_facts(c.name, &d) {
            panic!("{}: {e}", c.name);
        }
    }
}

fn every_option() -> Vec<ExtractOptions> {
    let mut v = Vec::new();
    for granularity in Granularity::ALL {
        for call_style in [CallStyle::Simplified, CallStyle::Full] {
            for grouping in [Grouping::Has, Grouping::Euler] {
                for alias_threshold in [None, Some(2)] {
                    v.push(ExtractOptions {
                        granularity,
                        call_style,
                        grouping,
                        alias_threshold,
                        ..ExtractOptions::default()
                    });
                }
            }
        }
    }
    v
}

#[test]
fn runs_conform_in_every_configuration() {
    for c in corpus() {
        let (p, s) = load(&c.source_path());
        let t = run(&p, &s, None, RunLimits::default()).unwrap();
        for o in every_option() {
            let r = extract(&p, &s, &o).unwrap();
            assert!(validate(&r.diagram).is_empty(), "{} {o:?}", c.name);
            let found = conform(&r.diagram, &t, ConformOptions { strict_goto: true }).unwrap();
            assert!(found.is_empty(), "{} {o:?}: {found:?}", c.name);
        }
    }
}

#[test]
fn deleting_a_justifying_element_is_noticed() {
    let (mut killed, mut total) = (0, 0);
    for c in corpus() {
        let (p, s) = load(&c.source_path());
        let t = run(&p, &s, None, RunLimits::default()).unwrap();
        let o = ExtractOptions {
            granularity: Granularity::Operator,
            call_style: c.call_style,
            ..ExtractOptions::default()
        };
        let d = extract(&p, &s, &o).unwrap().diagram;
        let (k, n) = mutation_kills(&d, &t);
        assert!(n > 0, "{}", c.name);
        killed += k;
        total += n;
    }
    assert_eq!(killed, total);
}

#[test]
fn styles_are_coherent() {
    for c in corpus() {
        let (p, s) = load(&c.source_path());
        let at = |granularity, call_style| {
            let o = ExtractOptions {
                granularity,
                call_style,
                ..ExtractOptions::default()
            };
            extract(&p, &s, &o).unwrap().diagram
        };
        for style in [CallStyle::Simplified, CallStyle::Full] {
            let coarse = coarsen_to_blocks(&at(Granularity::Operator, style)).unwrap();
            assert_eq!(keyed_view(&coarse), keyed_view(&at(Granularity::Block, style)), "{}", c.name);
        }
        for g in Granularity::ALL {
            let simplified = at(g, CallStyle::Simplified);
            let elided = elide_copy_machinery(&at(g, CallStyle::Full));
            assert!(isomorphic(&simplified, &elided), "{} {g:?}", c.name);
        }
    }
}
