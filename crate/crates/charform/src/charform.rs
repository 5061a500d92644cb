//! Characteristic-formula synthesis and deciding: declarative-form
//! constructions per preorder, excluded-trace formulae, the
//! satisfiable-and-prime characterization, and bounded kernel checks.

use std::collections::{HashMap, VecDeque};

use crate::formula::{
    in_fragment, EqRhs, EquationSystem, Formula, Fragment, VarId,
};
use crate::lts::{trace_set, Action, Alphabet, ProcessTerm};
use crate::oracle::{Universe, UniverseEvaluator};
use crate::preorders::PreorderKind;
use crate::primality::{self, Confidence};
use crate::satisfiability::{sat, MAX_ALPHABET_FOR_INITIAL_SETS};
use crate::{Error, Result};

/// Outcome of a characteristic-formula query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharVerdict {
    pub is_characteristic: bool,
    /// A process the formula is characteristic for, when one can be
    /// extracted exactly.
    pub witness: Option<ProcessTerm>,
    pub confidence: Confidence,
}

/// The preorder a fragment's characteristic formulae are stated for.
pub fn fragment_kind(x: Fragment) -> PreorderKind {
    match x {
        Fragment::S => PreorderKind::S,
        Fragment::CS => PreorderKind::CS,
        Fragment::RS => PreorderKind::RS,
        Fragment::TS => PreorderKind::TS,
        Fragment::S2 => PreorderKind::NS(2),
        Fragment::S3 => PreorderKind::NS(3),
        Fragment::BS => PreorderKind::BS,
    }
}

/// The fragment whose formulae characterize a preorder, when one exists in
/// the grammar (`NS(n)` for `n > 3` has no named fragment here).
pub fn kind_fragment(kind: PreorderKind) -> Option<Fragment> {
    match kind {
        PreorderKind::S | PreorderKind::NS(1) => Some(Fragment::S),
        PreorderKind::CS => Some(Fragment::CS),
        PreorderKind::RS => Some(Fragment::RS),
        PreorderKind::TS => Some(Fragment::TS),
        PreorderKind::NS(2) => Some(Fragment::S2),
        PreorderKind::NS(3) => Some(Fragment::S3),
        PreorderKind::BS => Some(Fragment::BS),
        PreorderKind::NS(_) => None,
    }
}

/// Deduplicated subprocess arena of a loop-free process: node 0 is the
/// root; steps are sorted by alphabet position, then child id.
struct Arena {
    terms: Vec<ProcessTerm>,
    /// Per node: (alphabet index of the action, child node).
    steps: Vec<Vec<(usize, usize)>>,
}

fn build_arena(p: &ProcessTerm, alphabet: &Alphabet) -> Result<Arena> {
    fn visit(
        p: &ProcessTerm,
        alphabet: &Alphabet,
        index: &mut HashMap<ProcessTerm, usize>,
        arena: &mut Arena,
    ) -> Result<usize> {
        if let Some(&id) = index.get(p) {
            return Ok(id);
        }
        let id = arena.terms.len();
        index.insert(p.clone(), id);
        arena.terms.push(p.clone());
        arena.steps.push(Vec::new());
        let mut steps = Vec::new();
        for (a, q) in p.steps() {
            let ai = alphabet
                .index_of(&a)
                .ok_or_else(|| Error::UnknownAction(a.name().to_owned()))?;
            let child = visit(&q, alphabet, index, arena)?;
            steps.push((ai, child));
        }
        steps.sort();
        arena.steps[id] = steps;
        Ok(id)
    }
    let mut arena = Arena { terms: Vec::new(), steps: Vec::new() };
    visit(p, alphabet, &mut HashMap::new(), &mut arena)?;
    Ok(arena)
}

/// Equation family a variable belongs to. `Chi(k)` characterizes the upward
/// cone of the k-nested simulation preorder, `ChiBar(k)` its downward cone;
/// `Single` is used by the preorders that need only one family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Fam {
    Single,
    Chi(u32),
    ChiBar(u32),
}

struct ChiBuilder<'a> {
    kind: PreorderKind,
    arena: &'a Arena,
    alphabet: &'a Alphabet,
    actions: Vec<Action>,
    ids: HashMap<(Fam, usize), VarId>,
    equations: Vec<(String, EqRhs)>,
    queue: VecDeque<(Fam, usize)>,
}

impl<'a> ChiBuilder<'a> {
    fn new(kind: PreorderKind, arena: &'a Arena, alphabet: &'a Alphabet) -> Self {
        ChiBuilder {
            kind,
            arena,
            alphabet,
            actions: alphabet.iter().cloned().collect(),
            ids: HashMap::new(),
            equations: Vec::new(),
            queue: VecDeque::new(),
        }
    }

    fn var(&mut self, fam: Fam, node: usize) -> VarId {
        if let Some(&v) = self.ids.get(&(fam, node)) {
            return v;
        }
        let v = self.equations.len();
        let name = match fam {
            Fam::Single => format!("X{node}"),
            Fam::Chi(k) => format!("X{k}_{node}"),
            Fam::ChiBar(k) => format!("B{k}_{node}"),
        };
        self.equations.push((name, EqRhs::Tt));
        self.ids.insert((fam, node), v);
        self.queue.push_back((fam, node));
        v
    }

    /// One `<a>`-conjunct per step of the node, referring to the same family.
    fn diamonds(&mut self, fam: Fam, node: usize) -> Vec<EqRhs> {
        let steps = self.arena.steps[node].clone();
        steps
            .into_iter()
            .map(|(ai, c)| EqRhs::dia(self.actions[ai].clone(), EqRhs::Var(self.var(fam, c))))
            .collect()
    }

    /// One `[a]`-conjunct per alphabet action: the disjunction of the
    /// family variables of the a-children (`ff` when there are none).
    fn boxes(&mut self, fam: Fam, node: usize) -> Vec<EqRhs> {
        let steps = self.arena.steps[node].clone();
        (0..self.actions.len())
            .map(|ai| {
                let kids: Vec<EqRhs> = steps
                    .iter()
                    .filter(|(b, _)| *b == ai)
                    .map(|&(_, c)| EqRhs::Var(self.var(fam, c)))
                    .collect();
                EqRhs::boxm(self.actions[ai].clone(), EqRhs::disj(kids))
            })
            .collect()
    }

    fn rhs(&mut self, fam: Fam, node: usize) -> Result<EqRhs> {
        let deadlocked = self.arena.steps[node].is_empty();
        Ok(match (fam, self.kind) {
            (Fam::Single, PreorderKind::S) | (Fam::Single, PreorderKind::NS(1)) => {
                EqRhs::conj(self.diamonds(Fam::Single, node))
            }
            (Fam::Single, PreorderKind::CS) => {
                if deadlocked {
                    EqRhs::conj(
                        self.actions
                            .iter()
                            .map(|a| EqRhs::boxm(a.clone(), EqRhs::Ff))
                            .collect::<Vec<_>>(),
                    )
                } else {
                    EqRhs::conj(self.diamonds(Fam::Single, node))
                }
            }
            (Fam::Single, PreorderKind::RS) => {
                let mut parts = self.diamonds(Fam::Single, node);
                let initials: Vec<usize> =
                    self.arena.steps[node].iter().map(|&(ai, _)| ai).collect();
                for (ai, a) in self.actions.iter().enumerate() {
                    if !initials.contains(&ai) {
                        parts.push(EqRhs::boxm(a.clone(), EqRhs::Ff));
                    }
                }
                EqRhs::conj(parts)
            }
            (Fam::Single, PreorderKind::BS) => {
                let mut parts = self.diamonds(Fam::Single, node);
                parts.extend(self.boxes(Fam::Single, node));
                EqRhs::conj(parts)
            }
            (Fam::Single, PreorderKind::TS) => {
                let mut parts = self.diamonds(Fam::Single, node);
                parts.push(formula_to_eqrhs(&exc_traces_node(
                    &self.arena.terms[node],
                    self.alphabet,
                )));
                EqRhs::conj(parts)
            }
            (Fam::Chi(1), _) => EqRhs::conj(self.diamonds(Fam::Chi(1), node)),
            (Fam::Chi(k), _) => {
                let mut parts = vec![EqRhs::Var(self.var(Fam::ChiBar(k - 1), node))];
                parts.extend(self.diamonds(Fam::Chi(k), node));
                EqRhs::conj(parts)
            }
            (Fam::ChiBar(1), _) => EqRhs::conj(self.boxes(Fam::ChiBar(1), node)),
            (Fam::ChiBar(k), _) => {
                let mut parts = self.boxes(Fam::ChiBar(k), node);
                parts.push(EqRhs::Var(self.var(Fam::Chi(k - 1), node)));
                EqRhs::conj(parts)
            }
            (fam, kind) => {
                return Err(Error::Precondition(format!(
                    "no equation family {fam:?} for preorder {kind}"
                )))
            }
        })
    }

    fn build(mut self, root_fam: Fam) -> Result<EquationSystem> {
        let root = self.var(root_fam, 0);
        while let Some((fam, node)) = self.queue.pop_front() {
            let rhs = self.rhs(fam, node)?;
            let v = self.ids[&(fam, node)];
            self.equations[v].1 = rhs;
        }
        let es = EquationSystem { equations: self.equations, root };
        es.check()?;
        Ok(es)
    }
}

/// Builds the characteristic formula of a loop-free process for the given
/// preorder, in declarative form: one equation per reachable subprocess per
/// needed variable family. Empty conjunctions are `tt`, empty disjunctions
/// `ff`. `q` satisfies the expansion iff `p` is below `q` in the preorder.
pub fn chi(kind: PreorderKind, p: &ProcessTerm, alphabet: &Alphabet) -> Result<EquationSystem> {
    let arena = build_arena(p, alphabet)?;
    let root_fam = match kind {
        PreorderKind::NS(0) => {
            return Err(Error::Precondition("0-nested simulation is undefined".into()))
        }
        PreorderKind::NS(n) if n >= 2 => Fam::Chi(n),
        _ => Fam::Single,
    };
    ChiBuilder::new(kind, &arena, alphabet).build(root_fam)
}

/// Characteristic formula for the trace-simulation preorder: the simulation
/// diamonds plus the excluded-trace conjunct at every subprocess.
pub fn chi_ts(p: &ProcessTerm, alphabet: &Alphabet) -> Result<EquationSystem> {
    chi(PreorderKind::TS, p, alphabet)
}

/// The conjunction of box-chains `[a1]...[ak]ff` over the minimal excluded
/// traces of `p`: words `t·a` with `t` a trace of `p` and `t·a` not.
pub fn exc_traces(p: &ProcessTerm, alphabet: &Alphabet) -> Result<Formula> {
    for a in p.actions() {
        if !alphabet.contains(&a) {
            return Err(Error::UnknownAction(a.name().to_owned()));
        }
    }
    Ok(exc_traces_node(p, alphabet))
}

fn exc_traces_node(p: &ProcessTerm, alphabet: &Alphabet) -> Formula {
    let traces = trace_set(p);
    let mut excluded: Vec<Vec<Action>> = Vec::new();
    for t in &traces {
        for a in alphabet.iter() {
            let mut ext = t.clone();
            ext.push(a.clone());
            if !traces.contains(&ext) {
                excluded.push(ext);
            }
        }
    }
    excluded.sort();
    excluded.dedup();
    Formula::conj(excluded.into_iter().map(|t| {
        t.into_iter().rev().fold(Formula::Ff, |acc, a| Formula::boxm(a, acc))
    }))
}

fn formula_to_eqrhs(f: &Formula) -> EqRhs {
    match f {
        Formula::Tt => EqRhs::Tt,
        Formula::Ff => EqRhs::Ff,
        Formula::Dia(a, g) => EqRhs::dia(a.clone(), formula_to_eqrhs(g)),
        Formula::Box(a, g) => EqRhs::boxm(a.clone(), formula_to_eqrhs(g)),
        Formula::Neg(g) => EqRhs::Neg(Box::new(formula_to_eqrhs(g))),
        Formula::And(l, r) => EqRhs::and(formula_to_eqrhs(l), formula_to_eqrhs(r)),
        Formula::Or(l, r) => EqRhs::or(formula_to_eqrhs(l), formula_to_eqrhs(r)),
    }
}

/// Decides whether a formula is characteristic in its fragment: it must be
/// satisfiable and prime. A witness process is extracted for the fragments
/// with exact witness extraction (S, CS, RS).
pub fn decide_characteristic(x: Fragment, f: &Formula, alphabet: &Alphabet) -> Result<CharVerdict> {
    if !in_fragment(f, x, alphabet) {
        return Err(Error::Fragment {
            fragment: x.to_string(),
            msg: "decide_characteristic requires a formula of the fragment".into(),
        });
    }
    let satisfiable = if x == Fragment::RS && alphabet.len() > MAX_ALPHABET_FOR_INITIAL_SETS {
        primality::sat_rs_unbounded(f)?
    } else {
        sat(x, f, alphabet)?
    };
    if !satisfiable {
        return Ok(CharVerdict {
            is_characteristic: false,
            witness: None,
            confidence: Confidence::Exact,
        });
    }
    let prime = primality::prime(x, f, alphabet)?;
    let is_characteristic = prime.holds;
    let witness = if is_characteristic
        && matches!(x, Fragment::S | Fragment::CS | Fragment::RS)
    {
        Some(primality::witness(x, f, alphabet)?)
    } else {
        None
    };
    Ok(CharVerdict { is_characteristic, witness, confidence: prime.confidence })
}

/// Bounded check whether a formula is characteristic modulo the kernel of a
/// preorder: is there a process `p` with `q ⊨ f` iff `p` and `q` are kernel
/// equivalent? Closed forms give exact answers for the simulation,
/// complete-simulation, and ready-simulation fragments; otherwise every
/// process of the budgeted universe is tried and the verdict is evidence.
pub fn char_mod_kernel_bounded(
    kind: PreorderKind,
    f: &Formula,
    alphabet: &Alphabet,
    depth_budget: u32,
) -> Result<CharVerdict> {
    let in_own_fragment =
        kind_fragment(kind).map(|x| in_fragment(f, x, alphabet)).unwrap_or(false);
    if matches!(kind, PreorderKind::S | PreorderKind::NS(1)) && in_own_fragment {
        // Simulation formulae are upward closed, and every process has a
        // strict upper bound, so no such formula pins a kernel class.
        return Ok(CharVerdict {
            is_characteristic: false,
            witness: None,
            confidence: Confidence::Exact,
        });
    }
    if matches!(kind, PreorderKind::CS | PreorderKind::RS) && in_own_fragment {
        // Characteristic modulo the kernel iff equivalent to the deadlock
        // formula: the deadlocked process satisfies it and no live process
        // does. Both halves are decided exactly.
        let x = kind_fragment(kind).expect("CS and RS have fragments");
        let live = Formula::disj(
            alphabet.iter().map(|a| Formula::dia(a.clone(), Formula::Tt)),
        );
        let only_nil = crate::modelcheck::satisfies(&ProcessTerm::Nil, f)
            && !sat(x, &Formula::and(f.clone(), live), alphabet)?;
        return Ok(CharVerdict {
            is_characteristic: only_nil,
            witness: if only_nil { Some(ProcessTerm::Nil) } else { None },
            confidence: Confidence::Exact,
        });
    }
    let depth = depth_budget.max(1);
    let width = f.diamond_count().max(2);
    let u = Universe::new(alphabet, depth, width)?;
    let mut eval = UniverseEvaluator::new(&u);
    let sat_row = eval.satisfying(f);
    let rel = u.relation(kind)?;
    for p in 0..u.len() {
        let matches_kernel = (0..u.len()).all(|q| {
            let sat_q = (sat_row[q / 64] >> (q % 64)) & 1 == 1;
            sat_q == (rel.holds(p, q) && rel.holds(q, p))
        });
        if matches_kernel {
            return Ok(CharVerdict {
                is_characteristic: true,
                witness: Some(u.term(p).clone()),
                confidence: Confidence::BoundedEvidence,
            });
        }
    }
    Ok(CharVerdict {
        is_characteristic: false,
        witness: None,
        confidence: Confidence::BoundedEvidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{es_expand, is_zero_form, parse_formula};
    use crate::preorders::kernel_equiv;

    fn ab() -> Alphabet {
        Alphabet::parse("a b").unwrap()
    }

    fn proc(text: &str) -> ProcessTerm {
        crate::lts::parse_process(text, None).unwrap()
    }

    fn form(text: &str, alphabet: &Alphabet) -> Formula {
        parse_formula(text, alphabet).unwrap()
    }

    #[test]
    fn chi_s_expands_to_the_explicit_form() {
        let p2 = proc("a.(a.0 + b.0) + b.(a.0 + b.0)");
        let es = chi(PreorderKind::S, &p2, &ab()).unwrap();
        let expanded = es_expand(&es).unwrap();
        assert_eq!(expanded, form("<a>(<a>tt & <b>tt) & <b>(<a>tt & <b>tt)", &ab()));
        assert_eq!(es.decl(), 3);
    }

    #[test]
    fn chi_cs_of_deadlock_is_the_zero_form() {
        let es = chi(PreorderKind::CS, &ProcessTerm::Nil, &ab()).unwrap();
        let expanded = es_expand(&es).unwrap();
        assert!(is_zero_form(&expanded, &ab()));
        // A live process keeps the simulation shape.
        let es = chi(PreorderKind::CS, &proc("a.0"), &ab()).unwrap();
        assert_eq!(es_expand(&es).unwrap(), form("<a>0", &ab()));
    }

    #[test]
    fn chi_rs_adds_refusal_boxes() {
        let es = chi(PreorderKind::RS, &proc("a.0"), &ab()).unwrap();
        let expanded = es_expand(&es).unwrap();
        assert_eq!(expanded, form("<a>([a]ff & [b]ff) & [b]ff", &ab()));
    }

    #[test]
    fn exc_traces_examples() {
        let one = Alphabet::parse("a").unwrap();
        assert_eq!(exc_traces(&ProcessTerm::Nil, &one).unwrap(), form("[a]ff", &one));
        // Traces {e, a, ab, b}: five minimal excluded extensions.
        let p = proc("a.b.0 + b.0");
        let f = exc_traces(&p, &ab()).unwrap();
        let expected =
            form("[a][a]ff & [a][b][a]ff & [a][b][b]ff & [b][a]ff & [b][b]ff", &ab());
        assert_eq!(f, expected);
    }

    #[test]
    fn chi_ts_is_equivalent_to_the_handwritten_trace_formula() {
        let es = chi_ts(&proc("a.0"), &ab()).unwrap();
        let f = es_expand(&es).unwrap();
        let phi_a = form("<a>([a]ff & [b]ff) & [b]ff & [a][a]ff & [a][b]ff", &ab());
        let u = Universe::new(&ab(), 3, 2).unwrap();
        let mut eval = UniverseEvaluator::new(&u);
        assert_eq!(eval.satisfying(&f), eval.satisfying(&phi_a));
    }

    #[test]
    fn chi_is_sound_on_a_small_universe() {
        let u = Universe::new(&ab(), 2, 2).unwrap();
        let mut eval = UniverseEvaluator::new(&u);
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
                let es = chi(kind, u.term(p), &ab()).unwrap();
                let f = es_expand(&es).unwrap();
                let row = eval.satisfying(&f);
                for q in 0..u.len() {
                    let sat_q = (row[q / 64] >> (q % 64)) & 1 == 1;
                    assert_eq!(
                        sat_q,
                        rel.holds(p, q),
                        "kind {kind}: q = {} vs chi({})",
                        u.term(q),
                        u.term(p)
                    );
                }
            }
        }
    }

    #[test]
    fn decide_characteristic_examples() {
        let v = decide_characteristic(Fragment::S, &form("<a>tt", &ab()), &ab()).unwrap();
        assert!(v.is_characteristic);
        assert_eq!(v.witness, Some(proc("a.0")));
        assert_eq!(v.confidence, Confidence::Exact);

        let v = decide_characteristic(Fragment::S, &form("<a>ff", &ab()), &ab()).unwrap();
        assert!(!v.is_characteristic);
        assert_eq!(v.confidence, Confidence::Exact);

        let v = decide_characteristic(Fragment::RS, &form("<a>0 & [b]ff", &ab()), &ab()).unwrap();
        assert!(v.is_characteristic);
        assert_eq!(v.witness, Some(proc("a.0")));

        let err = decide_characteristic(Fragment::S, &form("[a]ff", &ab()), &ab());
        assert!(matches!(err, Err(Error::Fragment { .. })));
    }

    #[test]
    fn chi_roundtrips_through_decide_characteristic() {
        let procs =
            ["0", "a.0", "a.0 + b.0", "a.b.0", "a.(a.0 + b.0) + b.(a.0 + b.0)"];
        for (x, kind) in [
            (Fragment::S, PreorderKind::S),
            (Fragment::CS, PreorderKind::CS),
            (Fragment::RS, PreorderKind::RS),
        ] {
            for text in procs {
                let p = proc(text);
                let f = es_expand(&chi(kind, &p, &ab()).unwrap()).unwrap();
                let v = decide_characteristic(x, &f, &ab()).unwrap();
                assert!(v.is_characteristic, "{x:?} chi({text})");
                let w = v.witness.expect("witness for S/CS/RS");
                assert!(kernel_equiv(kind, &w, &p), "{x:?} witness {w} for {text}");
            }
        }
    }

    #[test]
    fn char_mod_kernel_closed_forms() {
        let zero = form("0", &ab());
        let v = char_mod_kernel_bounded(PreorderKind::CS, &zero, &ab(), 2).unwrap();
        assert!(v.is_characteristic);
        assert_eq!(v.witness, Some(ProcessTerm::Nil));
        assert_eq!(v.confidence, Confidence::Exact);

        let v = char_mod_kernel_bounded(PreorderKind::S, &form("<a>tt", &ab()), &ab(), 2).unwrap();
        assert!(!v.is_characteristic);
        assert_eq!(v.confidence, Confidence::Exact);

        let v = char_mod_kernel_bounded(PreorderKind::RS, &form("<a>tt", &ab()), &ab(), 2).unwrap();
        assert!(!v.is_characteristic);
        assert_eq!(v.confidence, Confidence::Exact);
    }

    #[test]
    fn char_mod_kernel_bounded_search() {
        let phi_a = form("<a>([a]ff & [b]ff) & [b]ff & [a][a]ff & [a][b]ff", &ab());
        for kind in [PreorderKind::TS, PreorderKind::NS(2)] {
            let v = char_mod_kernel_bounded(kind, &phi_a, &ab(), 2).unwrap();
            assert!(v.is_characteristic, "{kind}");
            assert!(kernel_equiv(kind, &v.witness.unwrap(), &proc("a.0")));
            assert_eq!(v.confidence, Confidence::BoundedEvidence);
        }
        // An upward-closed formula pins no kernel class of any finer preorder.
        let v = char_mod_kernel_bounded(PreorderKind::BS, &form("<a>tt", &ab()), &ab(), 2).unwrap();
        assert!(!v.is_characteristic);
    }

    #[test]
    fn chi_declaration_size_is_linear() {
        let p = proc("a.(a.0 + b.0) + b.(a.0 + b.0)");
        // Three distinct subprocesses; at most one equation per subprocess
        // per variable family.
        assert_eq!(chi(PreorderKind::S, &p, &ab()).unwrap().decl(), 3);
        assert_eq!(chi(PreorderKind::BS, &p, &ab()).unwrap().decl(), 3);
        assert!(chi(PreorderKind::NS(2), &p, &ab()).unwrap().decl() <= 6);
        assert!(chi(PreorderKind::NS(3), &p, &ab()).unwrap().decl() <= 12);
    }
}
