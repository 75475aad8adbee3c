//! Seeded random programs and diagrams against the oracle and the text format.

use proptest::prelude::*;
use ucdf_core::extract::{extract, ExtractOptions, Granularity};
use ucdf_core::flowc::compile;
use ucdf_core::text::{canonicalize, parse, serialize, structurally_equal};
use ucdf_core::trace::{conform, run, ConformOptions, RunLimits};
use ucdf_testkit::{branching_program, random_diagram, straight_line_program};

/// Extracts, runs and checks; returns whether the exact multiset check
/// was in force.
fn conforms(src: &str, granularity: Granularity) -> Result<bool, String> {
    let (p, s) = compile(src).map_err(|e| format!("{e:?}"))?;
    let options = ExtractOptions {
        granularity,
        ..ExtractOptions::default()
    };
    let r = extract(&p, &s, &options).map_err(|e| format!("{e:?}"))?;
    let t = run(&p, &s, None, RunLimits::default()).map_err(|e| format!("{:?}", e.error))?;
    let v = conform(&r.diagram, &t, ConformOptions::default()).map_err(|e| format!("{e:?}"))?;
    if v.is_empty() {
        Ok(r.straight_line)
    } else {
        Err(format!("{v:?}"))
    }
}

#[test]
fn straight_line_programs_match_exactly() {
    for seed in 0..200 {
        let src = straight_line_program(seed);
        match conforms(&src, Granularity::Operator) {
            Ok(exact) => assert!(exact, "seed {seed} not straight-line\n{src}"),
            Err(e) => panic!("seed {seed}: {e}\n{src}"),
        }
    }
}

#[test]
fn branching_programs_conform() {
    let mut branching = 0;
    for seed in 0..200 {
        let src = branching_program(seed);
        match conforms(&src, Granularity::Operator) {
            Ok(exact) => branching += usize::from(!exact),
            Err(e) => panic!("seed {seed}: {e}\n{src}"),
        }
    }
    assert!(branching > 150, "only {branching} programs branch");
}

#[test]
fn random_diagrams_round_trip() {
    for seed in 0..1000 {
        let d = random_diagram(seed);
        let text = serialize(&d);
        let back = parse(&text).unwrap_or_else(|e| panic!("seed {seed}: {e:?}\n{text}"));
        assert!(structurally_equal(&d, &back), "seed {seed}\n{text}");
        assert_eq!(canonicalize(&text).unwrap(), text, "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_is_identity(seed in any::<u64>()) {
        let d = random_diagram(seed);
        let text = serialize(&d);
        let back = parse(&text).unwrap();
        prop_assert!(structurally_equal(&d, &back));
        prop_assert_eq!(serialize(&back), text);
    }

    #[test]
    fn every_granularity_conforms(seed in any::<u64>(), g in 0usize..3) {
        let src = branching_program(seed);
        prop_assert!(conforms(&src, Granularity::ALL[g]).is_ok(), "{}", src);
    }

    #[test]
    fn runs_are_deterministic(seed in any::<u64>()) {
        let (p, s) = compile(&branching_program(seed)).unwrap();
        let a = run(&p, &s, None, RunLimits::default()).unwrap();
        let b = run(&p, &s, None, RunLimits::default()).unwrap();
        prop_assert_eq!(a.to_text(&s), b.to_text(&s));
    }
}
