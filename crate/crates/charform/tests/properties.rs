//! Randomized property tests for the structural invariants: parser and
//! printer roundtrips, duality, declarative-form roundtrips, normal-form
//! equivalences, preorder laws, and synthesis soundness spot checks.

use charform::charform::chi;
use charform::formula::{
    es_build, es_expand, parse_formula, to_dnf, Formula, Fragment,
};
use charform::lts::{
    lts_to_term, parse_process, term_to_lts, Action, Alphabet, ProcessTerm,
};
use charform::modelcheck::satisfies;
use charform::oracle::brute_sat;
use charform::preorders::{kernel_equiv, preorder, trace_equiv, PreorderKind};
use charform::satisfiability::sat_auto;
use proptest::prelude::*;

fn ab() -> Alphabet {
    Alphabet::parse("a b").unwrap()
}

fn arb_action() -> impl Strategy<Value = Action> {
    prop_oneof![Just(Action::new("a")), Just(Action::new("b"))]
}

fn arb_formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![Just(Formula::Tt), Just(Formula::Ff)];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (arb_action(), inner.clone()).prop_map(|(a, f)| Formula::dia(a, f)),
            (arb_action(), inner.clone()).prop_map(|(a, f)| Formula::boxm(a, f)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
            inner.prop_map(Formula::neg),
        ]
    })
}

/// Diamond-only positive formulae (the simulation fragment), where the
/// DNF distribution laws are equivalence-preserving.
fn arb_s_formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![Just(Formula::Tt), Just(Formula::Ff)];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (arb_action(), inner.clone()).prop_map(|(a, f)| Formula::dia(a, f)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
        ]
    })
}

fn arb_process() -> impl Strategy<Value = ProcessTerm> {
    let leaf = Just(ProcessTerm::Nil);
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (arb_action(), inner.clone()).prop_map(|(a, p)| ProcessTerm::prefix(a, p)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| ProcessTerm::sum(l, r)),
        ]
    })
}

proptest! {
    #[test]
    fn formula_display_parses_back(f in arb_formula(), p in arb_process()) {
        // The printer drops redundant parentheses, so reparsing recovers
        // the formula up to re-association: the printed form is stable and
        // the meaning is preserved.
        let printed = f.to_string();
        let reparsed = parse_formula(&printed, &ab()).unwrap();
        prop_assert_eq!(reparsed.to_string(), printed);
        prop_assert_eq!(satisfies(&p, &reparsed), satisfies(&p, &f));
    }

    #[test]
    fn process_display_parses_back(p in arb_process()) {
        let printed = p.to_string();
        let reparsed = parse_process(&printed, None).unwrap();
        prop_assert_eq!(reparsed.to_string(), printed);
        prop_assert!(kernel_equiv(PreorderKind::BS, &reparsed, &p));
    }

    #[test]
    fn lts_roundtrip_preserves_behaviour(p in arb_process()) {
        let back = lts_to_term(&term_to_lts(&p)).unwrap();
        prop_assert!(kernel_equiv(PreorderKind::BS, &back, &p));
    }

    #[test]
    fn dual_negates(f in arb_formula(), p in arb_process()) {
        let dual = charform::formula::dual(&f);
        prop_assert_ne!(satisfies(&p, &f), satisfies(&p, &dual));
    }

    #[test]
    fn declarative_form_roundtrips(f in arb_formula()) {
        let es = es_build(&f);
        prop_assert!(es.decl() >= 1);
        prop_assert_eq!(es_expand(&es).unwrap(), f);
    }

    #[test]
    fn dnf_preserves_meaning_on_the_simulation_fragment(
        f in arb_s_formula(),
        p in arb_process(),
    ) {
        prop_assert_eq!(satisfies(&p, &to_dnf(&f)), satisfies(&p, &f));
    }

    #[test]
    fn sat_auto_agrees_with_brute_force(f in arb_formula()) {
        // Skip instances whose brute-force universe exceeds the cap.
        if let Ok(expected) = brute_sat(&f, &ab()) {
            prop_assert_eq!(sat_auto(&f, &ab()).unwrap(), expected);
        }
    }

    #[test]
    fn preorders_are_reflexive_and_transitive(
        p in arb_process(),
        q in arb_process(),
        r in arb_process(),
    ) {
        for kind in [
            PreorderKind::S,
            PreorderKind::CS,
            PreorderKind::RS,
            PreorderKind::TS,
            PreorderKind::NS(2),
            PreorderKind::BS,
        ] {
            prop_assert!(preorder(kind, &p, &p));
            if preorder(kind, &p, &q) && preorder(kind, &q, &r) {
                prop_assert!(preorder(kind, &p, &r), "{kind}: {p} / {q} / {r}");
            }
            prop_assert_eq!(
                kernel_equiv(kind, &p, &q),
                preorder(kind, &p, &q) && preorder(kind, &q, &p)
            );
        }
    }

    #[test]
    fn ts_kernel_refines_trace_equivalence(p in arb_process(), q in arb_process()) {
        // The converse fails: trace-equivalent processes need not simulate
        // each other.
        if kernel_equiv(PreorderKind::TS, &p, &q) {
            prop_assert!(trace_equiv(&p, &q));
        }
        // Characterization of trace equality through the sum.
        let sum = ProcessTerm::sum(p.clone(), q.clone());
        prop_assert_eq!(
            trace_equiv(&p, &q),
            preorder(PreorderKind::TS, &p, &sum) && preorder(PreorderKind::TS, &q, &sum)
        );
    }

    #[test]
    fn chi_is_satisfied_exactly_above(p in arb_process(), q in arb_process()) {
        for kind in [PreorderKind::S, PreorderKind::RS, PreorderKind::NS(2)] {
            let f = es_expand(&chi(kind, &p, &ab()).unwrap()).unwrap();
            prop_assert_eq!(satisfies(&q, &f), preorder(kind, &p, &q), "{}", kind);
        }
    }

    #[test]
    fn generated_instances_stay_in_fragment(seed in 0u64..500) {
        for x in Fragment::ALL {
            for f in charform::oracle::random_instances(seed, x, &ab(), 10, 2) {
                prop_assert!(charform::formula::in_fragment(&f, x, &ab()), "{x}: {f}");
                prop_assert!(f.explicit_size() <= 10, "{x}: {f}");
            }
        }
    }
}
