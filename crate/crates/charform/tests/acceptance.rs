//! Acceptance suite: one test per criterion, each printing a single
//! PASS line on success (run with `--nocapture` to see them).

use charform::charform::{char_mod_kernel_bounded, chi, decide_characteristic, fragment_kind};
use charform::formula::{
    es_expand, metrics, parse_formula, positive, Formula, Fragment,
};
use charform::lts::{parse_process, trace_set, Action, Alphabet, ProcessTerm};
use charform::oracle::{
    brute_characteristic, brute_sat, encode_cnf, random_instances, Clause, Universe,
    UniverseEvaluator,
};
use charform::preorders::PreorderKind;
use charform::primality::{prime, Confidence};
use charform::satisfiability::sat;
use charform::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ab() -> Alphabet {
    Alphabet::parse("a b").unwrap()
}

fn form(text: &str, alphabet: &Alphabet) -> Formula {
    parse_formula(text, alphabet).unwrap()
}

fn alphabet_of(n: usize) -> Alphabet {
    Alphabet::new(["a", "b", "c"][..n].iter().copied().map(Action::new)).unwrap()
}

/// Universe deep enough to refute primality: one level beyond the modal
/// depth, wide enough for every diamond.
fn oracle_universe(f: &Formula, alphabet: &Alphabet) -> Result<Universe> {
    let pos = positive(f);
    Universe::new(alphabet, pos.modal_depth() as u32 + 1, pos.diamond_count().max(2))
}

#[test]
fn criterion_01_worked_primality_examples() {
    let one = Alphabet::parse("a").unwrap();
    let two = ab();
    let cases = [
        (Fragment::S, form("<a>tt", &two), &two, true),
        (Fragment::S, form("<a>tt | <b>tt", &two), &two, false),
        (Fragment::S, form("<a>tt | <a><b>tt", &two), &two, true),
        (Fragment::CS, form("<a>tt", &one), &one, false),
        (Fragment::RS, form("<a>0", &two), &two, false),
    ];
    for (x, f, alphabet, expected) in cases {
        let v = prime(x, &f, alphabet).unwrap();
        assert_eq!(v.holds, expected, "prime({x}, {f})");
        assert_eq!(v.confidence, Confidence::Exact);
    }
    println!("PASS criterion 1: primality of the five worked examples is exact");
}

#[test]
fn criterion_02_metrics_calibration() {
    let m = metrics(&form("<a>(<a>tt & <b>tt) & <b>(<a>tt & <b>tt)", &ab()));
    assert_eq!(m.explicit_size, 13);
    assert_eq!(m.decl_size, 2);
    assert_eq!(m.eq_length, 5);
    println!("PASS criterion 2: metrics calibration (size 13, decl 2, eqlen 5)");
}

#[test]
fn criterion_03_excluded_traces_reproduction() {
    let p = parse_process("a.b.0 + b.0", None).unwrap();
    let f = charform::charform::exc_traces(&p, &ab()).unwrap();
    let expected =
        form("[a][a]ff & [a][b][a]ff & [a][b][b]ff & [b][a]ff & [b][b]ff", &ab());
    // Both sides order conjuncts canonically, so equality is set equality.
    assert_eq!(f, expected);
    println!("PASS criterion 3: the five excluded-trace box-chains are reproduced");
}

#[test]
fn criterion_04_characteristic_synthesis_soundness() {
    let u = Universe::new(&ab(), 3, 2).unwrap();
    let kinds = [
        PreorderKind::S,
        PreorderKind::CS,
        PreorderKind::RS,
        PreorderKind::TS,
        PreorderKind::NS(2),
        PreorderKind::NS(3),
        PreorderKind::BS,
    ];
    for kind in kinds {
        let rel = u.relation(kind).unwrap();
        for p in 0..u.len() {
            let f = es_expand(&chi(kind, u.term(p), &ab()).unwrap()).unwrap();
            let row = UniverseEvaluator::new(&u).satisfying(&f);
            for (w, word) in row.iter().enumerate() {
                for b in 0..64 {
                    let q = w * 64 + b;
                    if q >= u.len() {
                        break;
                    }
                    assert_eq!(
                        word >> b & 1 == 1,
                        rel.holds(p, q),
                        "kind {kind}, p = {}, q = {}",
                        u.term(p),
                        u.term(q)
                    );
                }
            }
        }
    }
    println!(
        "PASS criterion 4: chi(X, p) is satisfied exactly by the processes above p \
         ({} processes, 7 preorders)",
        u.len()
    );
}

#[test]
fn criterion_05_deciders_agree_with_oracle() {
    let mut checked_total = 0;
    for x in [Fragment::S, Fragment::CS, Fragment::RS] {
        let kind = fragment_kind(x);
        let mut checked = 0;
        let mut skipped = 0;
        for (n, batch, seed) in [(1, 300, 11u64), (2, 450, 12), (3, 300, 13)] {
            let alphabet = alphabet_of(n);
            for f in random_instances(seed, x, &alphabet, 12, batch) {
                // Skip (and count) instances whose brute-force universe
                // exceeds the enumeration cap; the oracle never truncates.
                let (oracle_sat, u) =
                    match (brute_sat(&f, &alphabet), oracle_universe(&f, &alphabet)) {
                        (Ok(s), Ok(u)) => (s, u),
                        _ => {
                            skipped += 1;
                            continue;
                        }
                    };
                let satisfiable = sat(x, &f, &alphabet).unwrap();
                assert_eq!(satisfiable, oracle_sat, "sat({x}, {f}) over {n} actions");
                let characteristic = satisfiable && prime(x, &f, &alphabet).unwrap().holds;
                let oracle = brute_characteristic(kind, &f, &u).unwrap().is_some();
                assert_eq!(characteristic, oracle, "characteristic({x}, {f})");
                checked += 1;
            }
        }
        assert!(checked >= 500, "{x}: only {checked} checked ({skipped} over budget)");
        checked_total += checked;
    }
    println!(
        "PASS criterion 5: sat and characteristic verdicts match the oracle on \
         {checked_total} random formulae across S, CS, RS"
    );
}

#[test]
fn criterion_06_preorder_hierarchy() {
    let u = Universe::new(&ab(), 3, 2).unwrap();
    let chain = [
        PreorderKind::BS,
        PreorderKind::NS(3),
        PreorderKind::NS(2),
        PreorderKind::TS,
        PreorderKind::RS,
        PreorderKind::CS,
        PreorderKind::S,
    ];
    let rels: Vec<_> = chain.iter().map(|k| u.relation(*k).unwrap()).collect();
    for win in rels.windows(2) {
        let (finer, coarser) = (&win[0], &win[1]);
        let mut strict = false;
        for p in 0..u.len() {
            for q in 0..u.len() {
                let f = finer.holds(p, q);
                let c = coarser.holds(p, q);
                assert!(!f || c, "inclusion fails at ({}, {})", u.term(p), u.term(q));
                strict |= c && !f;
            }
        }
        assert!(strict, "no strictness witness between adjacent levels");
    }
    println!(
        "PASS criterion 6: BS ⊆ 3S ⊆ 2S ⊆ TS ⊆ RS ⊆ CS ⊆ S with a strictness \
         witness at every level ({} processes)",
        u.len()
    );
}

#[test]
fn criterion_07_traces_via_trace_simulation_sums() {
    use charform::preorders::preorder;
    // All pairs of the depth-2 universe, plus a random sample of depth-3
    // pairs (the full depth-3 square is out of the runtime budget).
    let small = Universe::new(&ab(), 2, 2).unwrap();
    let big = Universe::new(&ab(), 3, 2).unwrap();
    let mut pairs: Vec<(ProcessTerm, ProcessTerm)> = Vec::new();
    for i in 0..small.len() {
        for j in 0..small.len() {
            pairs.push((small.term(i).clone(), small.term(j).clone()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..5000 {
        let i = rng.gen_range(0..big.len());
        let j = rng.gen_range(0..big.len());
        pairs.push((big.term(i).clone(), big.term(j).clone()));
    }
    let total = pairs.len();
    for (p, q) in pairs {
        let sum = ProcessTerm::sum(p.clone(), q.clone());
        let via_ts = preorder(PreorderKind::TS, &p, &sum)
            && preorder(PreorderKind::TS, &q, &sum);
        assert_eq!(trace_set(&p) == trace_set(&q), via_ts, "p = {p}, q = {q}");
    }
    println!(
        "PASS criterion 7: traces(p) = traces(q) iff both are trace-simulated \
         by p+q ({total} pairs)"
    );
}

#[test]
fn criterion_08_characteristic_iff_satisfiable_and_prime() {
    let mut checked = 0;
    for x in [Fragment::S, Fragment::CS, Fragment::RS] {
        let kind = fragment_kind(x);
        let alphabet = alphabet_of(2);
        for f in random_instances(31, x, &alphabet, 10, 150) {
            let satisfiable = sat(x, &f, &alphabet).unwrap();
            let is_prime = prime(x, &f, &alphabet).unwrap().holds;
            let v = decide_characteristic(x, &f, &alphabet).unwrap();
            assert_eq!(v.is_characteristic, satisfiable && is_prime, "{x}: {f}");
            assert_eq!(v.witness.is_some(), v.is_characteristic, "{x}: {f}");
            if let Some(w) = &v.witness {
                // Definition-level check on the bounded universe: the
                // satisfiers of f are exactly the processes above w.
                let u = match oracle_universe(&f, &alphabet) {
                    Ok(u) => u,
                    Err(_) => continue,
                };
                let row = UniverseEvaluator::new(&u).satisfying(&f);
                let rel = u.relation(kind).unwrap();
                for q in 0..u.len() {
                    let sat_q = row[q / 64] >> (q % 64) & 1 == 1;
                    let above = (0..u.len())
                        .filter(|&i| *u.term(i) == *w)
                        .map(|i| rel.holds(i, q))
                        .next();
                    if let Some(above) = above {
                        assert_eq!(sat_q, above, "{x}: witness {w} for {f}");
                    }
                }
            }
            checked += 1;
        }
    }
    println!(
        "PASS criterion 8: characteristic iff satisfiable and prime, with \
         definition-checked witnesses ({checked} formulae)"
    );
}

#[test]
fn criterion_09_cnf_encoding_matches_truth_table() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let vars = 8u32;
    for instance in 0..20 {
        let clauses: Vec<Clause> = (0..rng.gen_range(15..35))
            .map(|_| {
                (0..3)
                    .map(|_| {
                        let v = rng.gen_range(1..=vars as i32);
                        if rng.gen_bool(0.5) {
                            v
                        } else {
                            -v
                        }
                    })
                    .collect()
            })
            .collect();
        let truth_table_sat = (0u32..1 << vars).any(|assignment| {
            clauses.iter().all(|c| {
                c.iter().any(|&lit| {
                    let bit = assignment >> (lit.unsigned_abs() - 1) & 1 == 1;
                    (lit > 0) == bit
                })
            })
        });
        let (f, alphabet) = encode_cnf(Fragment::RS, &clauses, vars as usize).unwrap();
        assert_eq!(
            sat(Fragment::RS, &f, &alphabet).unwrap(),
            truth_table_sat,
            "instance {instance}"
        );
    }
    println!("PASS criterion 9: RS encodings of 20 random 3-CNFs match the truth table");
}

#[test]
fn criterion_10_kernel_characteristic_closed_forms() {
    let alphabet = ab();
    for f in random_instances(51, Fragment::S, &alphabet, 10, 200) {
        let v = char_mod_kernel_bounded(PreorderKind::S, &f, &alphabet, 3).unwrap();
        assert!(!v.is_characteristic, "S formula {f} reported kernel-characteristic");
        assert_eq!(v.confidence, Confidence::Exact);
    }
    let u = Universe::new(&alphabet, 3, 2).unwrap();
    let nil = (0..u.len()).find(|&i| *u.term(i) == ProcessTerm::Nil).unwrap();
    for (x, kind) in
        [(Fragment::CS, PreorderKind::CS), (Fragment::RS, PreorderKind::RS)]
    {
        let mut corpus = random_instances(52, x, &alphabet, 10, 200);
        corpus.push(Formula::zero(&alphabet));
        for f in corpus {
            let row = UniverseEvaluator::new(&u).satisfying(&f);
            let zero_equiv = (0..u.len())
                .all(|q| (row[q / 64] >> (q % 64) & 1 == 1) == (q == nil));
            let v = char_mod_kernel_bounded(kind, &f, &alphabet, 3).unwrap();
            assert_eq!(v.is_characteristic, zero_equiv, "{x}: {f}");
        }
    }
    println!(
        "PASS criterion 10: no simulation formula is kernel-characteristic; \
         CS/RS formulae are iff equivalent to the deadlock formula"
    );
}
