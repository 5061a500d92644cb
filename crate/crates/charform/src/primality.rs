//! Primality deciders: sequent-rule graphs for the simulation-like
//! preorders, the complete-simulation rewriting pipeline, ready-simulation
//! saturation, bounded trace-simulation decision, and witness-process
//! extraction.

use std::collections::{BTreeSet, HashMap};

use crate::altgraph::{AltGraph, AltGraphBuilder, Quant, VertexId};
use crate::formula::{in_fragment, positive, dnf_count, dnf_disjuncts, Formula, Fragment};
use crate::lts::{Action, Alphabet, ProcessTerm};
use crate::modelcheck::satisfies;
use crate::oracle::{RelMatrix, Universe, UniverseEvaluator};
use crate::preorders::PreorderKind;
use crate::satisfiability::{initial_sets, prune_unsat, sat, InitialSets, MAX_ALPHABET_FOR_INITIAL_SETS};
use crate::{Error, Result};

/// How trustworthy a primality verdict is: `Exact` comes from a complete
/// decision procedure, `BoundedEvidence` from exhausting a finite process
/// universe that does not cover all counterexamples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Confidence {
    Exact,
    BoundedEvidence,
}

/// A primality verdict together with its confidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    pub holds: bool,
    pub confidence: Confidence,
}

impl Verdict {
    pub fn exact(holds: bool) -> Verdict {
        Verdict { holds, confidence: Confidence::Exact }
    }

    pub fn evidence(holds: bool) -> Verdict {
        Verdict { holds, confidence: Confidence::BoundedEvidence }
    }
}

/// Which sequent rule set to use: the plain simulation rules, the
/// complete-simulation variant (axiom on the deadlock formula instead of
/// tt), or the ready-simulation variant (axiom on [a]ff and conjunction
/// rules that also fire under a box on the right).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleSet {
    Sim,
    Csim,
    Rsim,
}

/// The rule that produced the outgoing edges of a sequent vertex; used to
/// map the winning subgraph back to a witness process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleTag {
    Axiom,
    Dia(Action),
    RAnd,
    ROr,
    LOr1,
    LOr2,
    LAnd1,
    LAnd2,
    Dead,
    TrueSink,
}

#[derive(Hash, PartialEq, Eq, Clone)]
enum VKey {
    Seq(Formula, Formula, Formula),
    True,
}

/// A sequent graph: vertices are sequents (φ₁, φ₂ ⇒ ψ) plus a TRUE sink,
/// edges are given by the rule set, and the formula is prime exactly when
/// there is an alternating path from the root sequent to the sink.
pub struct SequentGraph {
    pub graph: AltGraph,
    tags: Vec<RuleTag>,
}

/// Builds the sequent graph of `f`, rooted at (f, f ⇒ f).
pub fn build_sequent_graph(f: &Formula, rules: RuleSet, alphabet: &Alphabet) -> SequentGraph {
    sequent_graph_rooted(f, f, f, rules, alphabet)
}

/// Builds a sequent graph with an explicit root sequent (l1, l2 ⇒ r).
pub fn sequent_graph_rooted(
    l1: &Formula,
    l2: &Formula,
    r: &Formula,
    rules: RuleSet,
    alphabet: &Alphabet,
) -> SequentGraph {
    let zero = Formula::zero(alphabet);
    let mut b: AltGraphBuilder<VKey> = AltGraphBuilder::new();
    let mut tags: Vec<RuleTag> = Vec::new();
    let (target, _) = b.intern(VKey::True, Quant::Exists, "TRUE");
    tags.push(RuleTag::TrueSink);
    let root = VKey::Seq(l1.clone(), l2.clone(), r.clone());
    let (source, _) = b.intern(
        root.clone(),
        Quant::Exists,
        format!("({l1}, {l2} => {r})"),
    );
    tags.push(RuleTag::Dead);
    let mut stack = vec![(source, l1.clone(), l2.clone(), r.clone())];
    while let Some((v, l1, l2, r)) = stack.pop() {
        let (quant, tag, children) = apply_rule(rules, &zero, &l1, &l2, &r);
        b.set_label(v, quant);
        tags[v] = tag.clone();
        if tag == RuleTag::Axiom {
            b.add_edge(v, target);
            continue;
        }
        for (c1, c2, c3) in children {
            let key = VKey::Seq(c1.clone(), c2.clone(), c3.clone());
            let (w, fresh) =
                b.intern(key, Quant::Exists, format!("({c1}, {c2} => {c3})"));
            if fresh {
                tags.push(RuleTag::Dead);
                stack.push((w, c1, c2, c3));
            }
            b.add_edge(v, w);
        }
    }
    SequentGraph { graph: b.finish(source, target), tags }
}

type Triple = (Formula, Formula, Formula);

fn apply_rule(
    rules: RuleSet,
    zero: &Formula,
    l1: &Formula,
    l2: &Formula,
    r: &Formula,
) -> (Quant, RuleTag, Vec<Triple>) {
    let is_zero = |f: &Formula| rules == RuleSet::Csim && f == zero;
    let box_ff = |f: &Formula| matches!(f, Formula::Box(_, g) if **g == Formula::Ff);
    // Axioms: (tt) for SIM and RSIM, (0) for CSIM, (□) for RSIM.
    let axiom = match rules {
        RuleSet::Sim => *r == Formula::Tt,
        RuleSet::Csim => is_zero(l1) && is_zero(l2) && is_zero(r),
        RuleSet::Rsim => {
            *r == Formula::Tt
                || match (l1, l2, r) {
                    (Formula::Box(a, x), Formula::Box(b, y), Formula::Box(c, z)) => {
                        a == b && b == c
                            && **x == Formula::Ff
                            && **y == Formula::Ff
                            && **z == Formula::Ff
                    }
                    _ => false,
                }
        }
    };
    if axiom {
        return (Quant::Exists, RuleTag::Axiom, Vec::new());
    }
    // Right rules before left rules.
    if !is_zero(r) {
        if let Formula::And(a, c) = r {
            let kids = vec![
                (l1.clone(), l2.clone(), (**a).clone()),
                (l1.clone(), l2.clone(), (**c).clone()),
            ];
            return (Quant::Forall, RuleTag::RAnd, kids);
        }
        if let Formula::Or(a, c) = r {
            let kids = vec![
                (l1.clone(), l2.clone(), (**a).clone()),
                (l1.clone(), l2.clone(), (**c).clone()),
            ];
            return (Quant::Exists, RuleTag::ROr, kids);
        }
    }
    if !is_zero(l1) {
        if let Formula::Or(a, c) = l1 {
            let kids = vec![
                ((**a).clone(), l2.clone(), r.clone()),
                ((**c).clone(), l2.clone(), r.clone()),
            ];
            return (Quant::Forall, RuleTag::LOr1, kids);
        }
    }
    if !is_zero(l2) {
        if let Formula::Or(a, c) = l2 {
            let kids = vec![
                ((**a).clone(), l1.clone(), r.clone()),
                ((**c).clone(), l1.clone(), r.clone()),
            ];
            return (Quant::Forall, RuleTag::LOr2, kids);
        }
    }
    // The conjunction rules fire when the right-hand side is a diamond, or
    // additionally [a]ff in the ready-simulation rule set.
    let l_and_ok = matches!(r, Formula::Dia(_, _)) || (rules == RuleSet::Rsim && box_ff(r));
    if l_and_ok {
        if !is_zero(l1) {
            if let Formula::And(a, c) = l1 {
                let kids = vec![
                    ((**a).clone(), l2.clone(), r.clone()),
                    ((**c).clone(), l2.clone(), r.clone()),
                ];
                return (Quant::Exists, RuleTag::LAnd1, kids);
            }
        }
        if !is_zero(l2) {
            if let Formula::And(a, c) = l2 {
                let kids = vec![
                    ((**a).clone(), l1.clone(), r.clone()),
                    ((**c).clone(), l1.clone(), r.clone()),
                ];
                return (Quant::Exists, RuleTag::LAnd2, kids);
            }
        }
    }
    if let (Formula::Dia(a, x), Formula::Dia(b, y), Formula::Dia(c, z)) = (l1, l2, r) {
        if a == b && b == c {
            return (
                Quant::Exists,
                RuleTag::Dia(a.clone()),
                vec![((**x).clone(), (**y).clone(), (**z).clone())],
            );
        }
    }
    (Quant::Exists, RuleTag::Dead, Vec::new())
}

impl SequentGraph {
    /// Is there an alternating path from the root sequent to TRUE?
    pub fn is_prime(&self) -> bool {
        self.graph.reach_a()
    }

    /// Extracts the witness process from the winning subgraph: axiom
    /// vertices map to 0, the diamond rule prefixes, the right conjunction
    /// rule sums, and every other rule propagates its (chosen or first)
    /// child's process.
    pub fn witness(&self) -> Result<ProcessTerm> {
        let win = self.graph.winning_subgraph()?;
        let mut memo: HashMap<VertexId, ProcessTerm> = HashMap::new();
        self.proc_of(self.graph.source, &win, &mut memo)
    }

    fn proc_of(
        &self,
        v: VertexId,
        win: &HashMap<VertexId, Vec<VertexId>>,
        memo: &mut HashMap<VertexId, ProcessTerm>,
    ) -> Result<ProcessTerm> {
        if let Some(p) = memo.get(&v) {
            return Ok(p.clone());
        }
        let succ = win.get(&v).map(|x| x.as_slice()).unwrap_or(&[]);
        let p = match &self.tags[v] {
            RuleTag::Axiom => ProcessTerm::Nil,
            RuleTag::Dia(a) => {
                ProcessTerm::prefix(a.clone(), self.proc_of(succ[0], win, memo)?)
            }
            RuleTag::RAnd => {
                let mut p = ProcessTerm::Nil;
                for &w in succ {
                    p = psum(p, self.proc_of(w, win, memo)?);
                }
                p
            }
            RuleTag::ROr
            | RuleTag::LOr1
            | RuleTag::LOr2
            | RuleTag::LAnd1
            | RuleTag::LAnd2 => self.proc_of(succ[0], win, memo)?,
            RuleTag::Dead | RuleTag::TrueSink => {
                return Err(Error::Precondition(
                    "witness extraction reached a vertex without a rule".into(),
                ))
            }
        };
        memo.insert(v, p.clone());
        Ok(p)
    }

    /// DOT dump of the underlying alternating graph.
    pub fn to_dot(&self) -> String {
        self.graph.to_dot()
    }
}

fn psum(l: ProcessTerm, r: ProcessTerm) -> ProcessTerm {
    match (l, r) {
        (ProcessTerm::Nil, r) => r,
        (l, ProcessTerm::Nil) => l,
        (l, r) => ProcessTerm::sum(l, r),
    }
}

/// Applies tt ∧ ψ → ψ and tt ∨ ψ → tt (modulo commutativity) everywhere
/// until no rule applies. The result is logically equivalent to the input.
pub fn rewrite_tt(f: &Formula) -> Formula {
    match f {
        Formula::Tt | Formula::Ff => f.clone(),
        Formula::Dia(a, g) => Formula::dia(a.clone(), rewrite_tt(g)),
        Formula::Box(a, g) => Formula::boxm(a.clone(), rewrite_tt(g)),
        Formula::Neg(g) => Formula::neg(rewrite_tt(g)),
        Formula::And(l, r) => match (rewrite_tt(l), rewrite_tt(r)) {
            (Formula::Tt, r) => r,
            (l, Formula::Tt) => l,
            (l, r) => Formula::and(l, r),
        },
        Formula::Or(l, r) => match (rewrite_tt(l), rewrite_tt(r)) {
            (Formula::Tt, _) | (_, Formula::Tt) => Formula::Tt,
            (l, r) => Formula::or(l, r),
        },
    }
}

/// Applies ⟨a⟩tt → tt together with the tt rules until no rule applies.
/// The result is entailed by the input but need not be equivalent to it.
pub fn rewrite_diamond(f: &Formula) -> Formula {
    match f {
        Formula::Dia(a, g) => match rewrite_diamond(g) {
            Formula::Tt => Formula::Tt,
            g => Formula::dia(a.clone(), g),
        },
        Formula::And(l, r) => match (rewrite_diamond(l), rewrite_diamond(r)) {
            (Formula::Tt, r) => r,
            (l, Formula::Tt) => l,
            (l, r) => Formula::and(l, r),
        },
        Formula::Or(l, r) => match (rewrite_diamond(l), rewrite_diamond(r)) {
            (Formula::Tt, _) | (_, Formula::Tt) => Formula::Tt,
            (l, r) => Formula::or(l, r),
        },
        other => other.clone(),
    }
}

/// Replaces every maximal deadlock subformula (⋀_{a∈A}[a]ff modulo shape)
/// with the canonical deadlock formula so later phases can match it as an
/// atom syntactically.
pub fn canonicalize_zero(f: &Formula, alphabet: &Alphabet) -> Formula {
    if crate::formula::is_zero_form(f, alphabet) {
        return Formula::zero(alphabet);
    }
    match f {
        Formula::Dia(a, g) => Formula::dia(a.clone(), canonicalize_zero(g, alphabet)),
        Formula::Box(a, g) => Formula::boxm(a.clone(), canonicalize_zero(g, alphabet)),
        Formula::Neg(g) => Formula::neg(canonicalize_zero(g, alphabet)),
        Formula::And(l, r) => Formula::and(
            canonicalize_zero(l, alphabet),
            canonicalize_zero(r, alphabet),
        ),
        Formula::Or(l, r) => Formula::or(
            canonicalize_zero(l, alphabet),
            canonicalize_zero(r, alphabet),
        ),
        other => other.clone(),
    }
}

/// Zero normal form: innermost-first application, modulo commutativity and
/// associativity, of the rules 0∨0 → 0, 0∧φ → 0, (0∨φ₁)∧φ₂ → φ₁∧φ₂ for
/// φ₂ neither 0 nor 0∨φ₂′, and (0∨φ₁)∧(0∨φ₂) → 0∨(φ₁∧φ₂). The input's
/// deadlock subformulae are canonicalized first; the result is equivalent
/// to the input when every subformula is satisfiable.
pub fn zero_normal_form(f: &Formula, alphabet: &Alphabet) -> Formula {
    let zero = Formula::zero(alphabet);
    znf(&canonicalize_zero(f, alphabet), &zero)
}

fn znf(f: &Formula, zero: &Formula) -> Formula {
    if f == zero {
        return f.clone();
    }
    match f {
        Formula::Dia(a, g) => Formula::dia(a.clone(), znf(g, zero)),
        Formula::And(_, _) => {
            let mut conjuncts = Vec::new();
            flatten_and(f, zero, &mut conjuncts);
            let conjuncts: Vec<Formula> =
                conjuncts.iter().map(|c| znf(c, zero)).collect();
            // Rule 2: a deadlock conjunct absorbs the whole conjunction.
            if conjuncts.iter().any(|c| c == zero) {
                return zero.clone();
            }
            // Split each conjunct 0∨ψ into its zero-free remainder ψ.
            let stripped: Vec<(Formula, Option<Formula>)> = conjuncts
                .into_iter()
                .map(|c| {
                    let rest = strip_zero(&c, zero);
                    (c, rest)
                })
                .collect();
            let zero_or_count = stripped.iter().filter(|(_, rest)| rest.is_some()).count();
            if zero_or_count == 0 {
                Formula::conj(stripped.into_iter().map(|(c, _)| c))
            } else if zero_or_count < stripped.len() {
                // Rule 3: some conjunct is not satisfied by the deadlocked
                // process, so the 0 disjuncts are dropped in place.
                Formula::conj(stripped.into_iter().map(|(c, rest)| rest.unwrap_or(c)))
            } else {
                // Rule 4 (iterated): all conjuncts have the form 0∨ψ.
                let parts = stripped.into_iter().map(|(_, rest)| rest.expect("all are 0∨ψ"));
                Formula::or(zero.clone(), Formula::conj(parts))
            }
        }
        Formula::Or(_, _) => {
            let mut disjuncts = Vec::new();
            flatten_or(f, zero, &mut disjuncts);
            let mut has_zero = false;
            let mut rest: Vec<Formula> = Vec::new();
            for d in disjuncts {
                let d = znf(&d, zero);
                // Rules 1 and 5-7: collect 0 disjuncts, including those
                // nested inside already-normalized disjuncts.
                let mut inner = Vec::new();
                flatten_or(&d, zero, &mut inner);
                for x in inner {
                    if x == *zero {
                        has_zero = true;
                    } else {
                        rest.push(x);
                    }
                }
            }
            if rest.is_empty() {
                zero.clone()
            } else if has_zero {
                Formula::or(zero.clone(), Formula::disj(rest))
            } else {
                Formula::disj(rest)
            }
        }
        other => other.clone(),
    }
}

fn flatten_and(f: &Formula, zero: &Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::And(l, r) if f != zero => {
            flatten_and(l, zero, out);
            flatten_and(r, zero, out);
        }
        _ => out.push(f.clone()),
    }
}

fn flatten_or(f: &Formula, zero: &Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::Or(l, r) => {
            flatten_or(l, zero, out);
            flatten_or(r, zero, out);
        }
        _ => out.push(f.clone()),
    }
}

/// If `f` is a disjunction containing the deadlock formula, returns the
/// disjunction of the remaining disjuncts.
fn strip_zero(f: &Formula, zero: &Formula) -> Option<Formula> {
    if !matches!(f, Formula::Or(_, _)) {
        return None;
    }
    let mut disjuncts = Vec::new();
    flatten_or(f, zero, &mut disjuncts);
    let rest: Vec<Formula> = disjuncts.iter().filter(|d| *d != zero).cloned().collect();
    if rest.len() == disjuncts.len() {
        None
    } else {
        Some(Formula::disj(rest))
    }
}

/// The result of saturating a formula in the ready-simulation fragment.
pub struct SaturationResult {
    pub formula: Formula,
    pub is_tt: bool,
}

/// Saturation for the ready-simulation fragment: repeatedly rewrites tt,
/// replaces the formula (or any top-level diamond argument) whose set of
/// initial-action sets is not a singleton with tt, and simplifies against
/// the unique initial set, until a fixpoint. Returns tt when the formula
/// is not saturable.
pub fn satur(f: &Formula, alphabet: &Alphabet) -> Result<SaturationResult> {
    let formula = satur_fix(f, alphabet)?;
    let is_tt = formula == Formula::Tt;
    Ok(SaturationResult { formula, is_tt })
}

fn satur_fix(f: &Formula, alphabet: &Alphabet) -> Result<Formula> {
    let mut phi = f.clone();
    for _ in 0..SATURATION_ITERATION_CAP {
        let old = phi.clone();
        phi = rewrite_tt(&phi);
        phi = match unique_initials(&phi, alphabet)? {
            None => Formula::Tt,
            Some(s) => simpl(&phi, &s)?,
        };
        phi = satur_diamonds(&phi, alphabet)?;
        if phi == old {
            if phi != Formula::Tt {
                let s = unique_initials(&phi, alphabet)?.ok_or_else(|| {
                    Error::Precondition("saturation fixpoint lost its unique initial set".into())
                })?;
                phi = simpl(&phi, &s)?;
            }
            return Ok(phi);
        }
    }
    Err(Error::Budget("saturation did not reach a fixpoint".into()))
}

const SATURATION_ITERATION_CAP: usize = 10_000;

fn unique_initials(f: &Formula, alphabet: &Alphabet) -> Result<Option<BTreeSet<Action>>> {
    if f == &Formula::Tt && !alphabet.is_empty() {
        return Ok(None);
    }
    let i = initial_sets(f, alphabet)?;
    Ok(i.singleton()
        .map(|mask| InitialSets::mask_actions(alphabet, mask)))
}

fn satur_diamonds(f: &Formula, alphabet: &Alphabet) -> Result<Formula> {
    Ok(match f {
        Formula::Dia(a, g) => match unique_initials(g, alphabet)? {
            None => Formula::Tt,
            Some(s) => {
                let g = simpl(g, &s)?;
                Formula::dia(a.clone(), satur_fix(&g, alphabet)?)
            }
        },
        Formula::And(l, r) => Formula::and(
            satur_diamonds(l, alphabet)?,
            satur_diamonds(r, alphabet)?,
        ),
        Formula::Or(l, r) => Formula::or(
            satur_diamonds(l, alphabet)?,
            satur_diamonds(r, alphabet)?,
        ),
        other => other.clone(),
    })
}

/// Simplification against an initial-action set: on the top-level
/// propositional skeleton (diamonds are atoms), [a]ff with a ∈ S and
/// ⟨a⟩ψ with a ∉ S become false and are propagated away. Errors when the
/// whole formula simplifies to false.
pub fn simpl(f: &Formula, s: &BTreeSet<Action>) -> Result<Formula> {
    simpl_opt(f, s).ok_or_else(|| {
        Error::Precondition("simplification removed the whole formula".into())
    })
}

fn simpl_opt(f: &Formula, s: &BTreeSet<Action>) -> Option<Formula> {
    match f {
        Formula::Tt => Some(Formula::Tt),
        Formula::Ff => None,
        Formula::Box(a, g) if **g == Formula::Ff => {
            if s.contains(a) {
                None
            } else {
                Some(f.clone())
            }
        }
        Formula::Dia(a, _) => {
            if s.contains(a) {
                Some(f.clone())
            } else {
                None
            }
        }
        Formula::And(l, r) => match (simpl_opt(l, s), simpl_opt(r, s)) {
            (Some(l), Some(r)) => Some(Formula::and(l, r)),
            _ => None,
        },
        Formula::Or(l, r) => match (simpl_opt(l, s), simpl_opt(r, s)) {
            (Some(l), Some(r)) => Some(Formula::or(l, r)),
            (Some(x), None) | (None, Some(x)) => Some(x),
            (None, None) => None,
        },
        _ => Some(f.clone()),
    }
}

/// Is the set of initial-action sets of `f` a singleton?
pub fn is_saturated(f: &Formula, alphabet: &Alphabet) -> Result<bool> {
    Ok(initial_sets(f, alphabet)?.singleton().is_some())
}

/// The process associated to a disjunction-free formula over tt, the
/// deadlock atoms, [a]ff, ∧, and ⟨a⟩: atoms map to 0, diamonds to
/// prefixes, and conjunctions to sums.
pub fn associated_process(f: &Formula) -> Result<ProcessTerm> {
    Ok(match f {
        Formula::Tt => ProcessTerm::Nil,
        Formula::Box(a, g) if **g == Formula::Ff => {
            let _ = a;
            ProcessTerm::Nil
        }
        Formula::Dia(a, g) => ProcessTerm::prefix(a.clone(), associated_process(g)?),
        Formula::And(l, r) => psum(associated_process(l)?, associated_process(r)?),
        other => {
            return Err(Error::Precondition(format!(
                "associated_process expects a disjunction-free formula, found {other}"
            )))
        }
    })
}

/// Trace depth of an ff-free formula in the simulation fragment:
/// td(tt) = 0, td(⟨a⟩φ) = 1 + td(φ), td(∧) = max, td(∨) = min. Over a
/// one-action alphabet every such formula is characteristic for the chain
/// of that depth.
pub fn trace_depth(f: &Formula) -> Result<usize> {
    Ok(match f {
        Formula::Tt => 0,
        Formula::Dia(_, g) => 1 + trace_depth(g)?,
        Formula::And(l, r) => trace_depth(l)?.max(trace_depth(r)?),
        Formula::Or(l, r) => trace_depth(l)?.min(trace_depth(r)?),
        other => {
            return Err(Error::Precondition(format!(
                "trace_depth expects an ff-free simulation formula, found {other}"
            )))
        }
    })
}

/// Cap on the number of DNF disjuncts the unbounded ready-simulation
/// decider will consider.
pub const DNF_DISJUNCT_BUDGET: u128 = 256;

/// Decides primality of `f` in the fragment `x`. Unsatisfiable formulae
/// are trivially prime. The verdicts for the simulation, complete
/// simulation, and ready simulation fragments are exact; trace simulation
/// and the nested simulations are decided on a bounded process universe
/// and marked as evidence.
pub fn prime(x: Fragment, f: &Formula, alphabet: &Alphabet) -> Result<Verdict> {
    if !in_fragment(f, x, alphabet) {
        return Err(Error::Fragment {
            fragment: x.to_string(),
            msg: format!("prime({x}) called on {f}"),
        });
    }
    let satisfiable = match x {
        Fragment::RS if alphabet.len() > MAX_ALPHABET_FOR_INITIAL_SETS => sat_rs_unbounded(f)?,
        _ => sat(x, f, alphabet)?,
    };
    if !satisfiable {
        return Ok(Verdict::exact(true));
    }
    match x {
        Fragment::S => {
            let g = prune_unsat(Fragment::S, f, alphabet)?;
            let sg = build_sequent_graph(&g, RuleSet::Sim, alphabet);
            Ok(Verdict::exact(sg.is_prime()))
        }
        Fragment::CS => prime_cs(f, alphabet),
        Fragment::RS => {
            if alphabet.len() <= MAX_ALPHABET_FOR_INITIAL_SETS {
                prime_rs_bounded(f, alphabet)
            } else {
                prime_rs_unbounded(f, alphabet)
            }
        }
        Fragment::TS => Ok(Verdict::evidence(prime_ts_bounded(f, alphabet)?)),
        Fragment::S2 => Ok(Verdict::evidence(prime_bounded(
            PreorderKind::NS(2),
            f,
            alphabet,
        )?)),
        Fragment::S3 => Ok(Verdict::evidence(prime_bounded(
            PreorderKind::NS(3),
            f,
            alphabet,
        )?)),
        Fragment::BS => Ok(Verdict::evidence(prime_bounded(
            PreorderKind::BS,
            f,
            alphabet,
        )?)),
    }
}

fn prime_cs(f: &Formula, alphabet: &Alphabet) -> Result<Verdict> {
    let g = cs_pipeline(f, alphabet)?;
    if g == Formula::Tt {
        return Ok(Verdict::exact(false));
    }
    let sg = build_sequent_graph(&g, RuleSet::Csim, alphabet);
    if !sg.is_prime() {
        return Ok(Verdict::exact(false));
    }
    let p = sg.witness()?;
    Ok(Verdict::exact(satisfies(&p, f)))
}

/// The complete-simulation preprocessing pipeline: prune unsatisfiable
/// subformulae, rewrite tt, compute the zero normal form, and rewrite
/// diamonds, yielding φ^◇.
pub fn cs_pipeline(f: &Formula, alphabet: &Alphabet) -> Result<Formula> {
    let g = prune_unsat(Fragment::CS, f, alphabet)?;
    let g = rewrite_tt(&g);
    let g = zero_normal_form(&g, alphabet);
    Ok(rewrite_diamond(&g))
}

fn prime_rs_bounded(f: &Formula, alphabet: &Alphabet) -> Result<Verdict> {
    let g = prune_unsat(Fragment::RS, f, alphabet)?;
    let s = satur(&g, alphabet)?;
    if s.is_tt {
        return Ok(Verdict::exact(false));
    }
    let sg = build_sequent_graph(&s.formula, RuleSet::Rsim, alphabet);
    if !sg.is_prime() {
        return Ok(Verdict::exact(false));
    }
    let p = sg.witness()?;
    Ok(Verdict::exact(satisfies(&p, f)))
}

fn rs_disjuncts(f: &Formula) -> Result<Vec<Formula>> {
    if dnf_count(f)? > DNF_DISJUNCT_BUDGET {
        return Err(Error::Budget(format!(
            "formula has more than {DNF_DISJUNCT_BUDGET} DNF disjuncts"
        )));
    }
    Ok(dnf_disjuncts(f)?.collect())
}

pub(crate) fn sat_rs_unbounded(f: &Formula) -> Result<bool> {
    for d in rs_disjuncts(f)? {
        if sat_df(&d)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Satisfiability of a disjunction-free ready-simulation formula via the
/// required (diamond) and forbidden (box) action sets; works for any
/// alphabet size.
fn sat_df(f: &Formula) -> Result<bool> {
    let mut required: BTreeSet<&Action> = BTreeSet::new();
    let mut forbidden: BTreeSet<&Action> = BTreeSet::new();
    let mut stack = vec![f];
    while let Some(g) = stack.pop() {
        match g {
            Formula::Tt => {}
            Formula::Ff => return Ok(false),
            Formula::Box(a, h) if **h == Formula::Ff => {
                forbidden.insert(a);
            }
            Formula::Dia(a, h) => {
                if !sat_df(h)? {
                    return Ok(false);
                }
                required.insert(a);
            }
            Formula::And(l, r) => {
                stack.push(l);
                stack.push(r);
            }
            other => {
                return Err(Error::Precondition(format!(
                    "expected a disjunction-free ready-simulation formula, found {other}"
                )))
            }
        }
    }
    Ok(required.is_disjoint(&forbidden))
}

/// Saturation of a satisfiable disjunction-free ready-simulation formula
/// without enumerating initial sets: a diamond whose argument does not
/// saturate is dropped, and the formula saturates exactly when the
/// required and forbidden actions cover the alphabet.
fn satur_df(f: &Formula, alphabet: &Alphabet) -> Result<Formula> {
    let mut conjuncts = Vec::new();
    flatten_and_plain(f, &mut conjuncts);
    let mut kept: Vec<Formula> = Vec::new();
    let mut covered: BTreeSet<&Action> = BTreeSet::new();
    for c in &conjuncts {
        match c {
            Formula::Tt => {}
            Formula::Box(a, h) if **h == Formula::Ff => {
                covered.insert(a);
                kept.push(c.clone());
            }
            Formula::Dia(a, h) => {
                let s = satur_df(h, alphabet)?;
                if s != Formula::Tt {
                    covered.insert(a);
                    kept.push(Formula::dia(a.clone(), s));
                }
            }
            other => {
                return Err(Error::Precondition(format!(
                    "expected a disjunction-free ready-simulation formula, found {other}"
                )))
            }
        }
    }
    if covered.len() == alphabet.len() {
        Ok(Formula::conj(kept))
    } else {
        Ok(Formula::Tt)
    }
}

fn flatten_and_plain(f: &Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::And(l, r) => {
            flatten_and_plain(l, out);
            flatten_and_plain(r, out);
        }
        _ => out.push(f.clone()),
    }
}

fn prime_rs_unbounded(f: &Formula, alphabet: &Alphabet) -> Result<Verdict> {
    let mut sats: Vec<Formula> = Vec::new();
    for d in rs_disjuncts(f)? {
        if !sat_df(&d)? {
            continue;
        }
        let s = satur_df(&d, alphabet)?;
        if s == Formula::Tt {
            return Ok(Verdict::exact(false));
        }
        sats.push(s);
    }
    for i in 0..sats.len() {
        for j in i..sats.len() {
            let sg = sequent_graph_rooted(&sats[i], &sats[j], f, RuleSet::Rsim, alphabet);
            if !sg.is_prime() {
                return Ok(Verdict::exact(false));
            }
        }
    }
    Ok(Verdict::exact(true))
}

/// Bounded trace-simulation primality: true iff some process of depth at
/// most md(f) satisfies f and is trace-simulated by every satisfier of
/// depth at most md(f)+1 in the bounded-width universe. Sound evidence,
/// not a complete decision.
pub fn prime_ts_bounded(f: &Formula, alphabet: &Alphabet) -> Result<bool> {
    prime_bounded(PreorderKind::TS, f, alphabet)
}

fn prime_bounded(kind: PreorderKind, f: &Formula, alphabet: &Alphabet) -> Result<bool> {
    let pos = positive(f);
    let d = pos.modal_depth() as u32;
    let width = pos.diamond_count().max(2);
    let u = Universe::new(alphabet, d + 1, width)?;
    let bits = UniverseEvaluator::new(&u).satisfying(f);
    let rel = u.relation(kind)?;
    for p in 0..u.len() {
        if u.depth(p) > d || bits[p / 64] & (1 << (p % 64)) == 0 {
            continue;
        }
        if RelMatrix::includes(&bits, rel.row(p)) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Extracts the witness process of a prime satisfiable formula in the
/// simulation, complete-simulation, or (bounded-alphabet) ready-simulation
/// fragment; the formula is characteristic for the result.
pub fn witness(x: Fragment, f: &Formula, alphabet: &Alphabet) -> Result<ProcessTerm> {
    let not_prime = || Error::Precondition("witness called on a non-prime formula".into());
    if !sat(x, f, alphabet)? {
        return Err(Error::Precondition(
            "witness called on an unsatisfiable formula".into(),
        ));
    }
    match x {
        Fragment::S => {
            let g = prune_unsat(Fragment::S, f, alphabet)?;
            let sg = build_sequent_graph(&g, RuleSet::Sim, alphabet);
            if !sg.is_prime() {
                return Err(not_prime());
            }
            sg.witness()
        }
        Fragment::CS => {
            let g = cs_pipeline(f, alphabet)?;
            if g == Formula::Tt {
                return Err(not_prime());
            }
            let sg = build_sequent_graph(&g, RuleSet::Csim, alphabet);
            if !sg.is_prime() {
                return Err(not_prime());
            }
            let p = sg.witness()?;
            if !satisfies(&p, f) {
                return Err(not_prime());
            }
            Ok(p)
        }
        Fragment::RS => {
            let g = prune_unsat(Fragment::RS, f, alphabet)?;
            let s = satur(&g, alphabet)?;
            if s.is_tt {
                return Err(not_prime());
            }
            let sg = build_sequent_graph(&s.formula, RuleSet::Rsim, alphabet);
            if !sg.is_prime() {
                return Err(not_prime());
            }
            let p = sg.witness()?;
            if !satisfies(&p, f) {
                return Err(not_prime());
            }
            Ok(p)
        }
        other => Err(Error::Fragment {
            fragment: other.to_string(),
            msg: "witness extraction covers the S, CS, and RS fragments".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::lts::parse_process;
    use crate::oracle::{brute_characteristic, random_instances};

    fn ab() -> Alphabet {
        Alphabet::parse("a,b").unwrap()
    }

    fn a() -> Alphabet {
        Alphabet::parse("a").unwrap()
    }

    // One level deeper than the satisfiability universe, so that satisfiers
    // that separate a candidate witness from the formula are enumerated.
    fn oracle_universe(f: &Formula, alphabet: &Alphabet) -> Result<Universe> {
        let pos = positive(f);
        Universe::new(alphabet, pos.modal_depth() as u32 + 1, pos.diamond_count().max(2))
    }

    #[test]
    fn sequent_graph_examples() {
        let alpha = ab();
        let tt = parse_formula("tt", &alpha).unwrap();
        assert!(build_sequent_graph(&tt, RuleSet::Sim, &alpha).is_prime());
        let f = parse_formula("<a>tt | <b>tt", &alpha).unwrap();
        assert!(!build_sequent_graph(&f, RuleSet::Sim, &alpha).is_prime());
        let f = parse_formula("<a>tt | <a><b>tt", &alpha).unwrap();
        assert!(build_sequent_graph(&f, RuleSet::Sim, &alpha).is_prime());
    }

    #[test]
    fn prime_worked_examples() {
        let alpha = ab();
        let one = a();
        let cases = [
            (Fragment::S, "<a>tt", &alpha, true),
            (Fragment::S, "<a>tt | <b>tt", &alpha, false),
            (Fragment::S, "<a>tt | <a><b>tt", &alpha, true),
            (Fragment::CS, "<a>tt", &one, false),
            (Fragment::RS, "<a>0", &alpha, false),
        ];
        for (x, text, al, expect) in cases {
            let f = parse_formula(text, al).unwrap();
            let v = prime(x, &f, al).unwrap();
            assert_eq!(v.holds, expect, "prime({x}, {text})");
            assert_eq!(v.confidence, Confidence::Exact);
        }
    }

    #[test]
    fn prime_cs_diamond_pipeline() {
        let one = a();
        let f = parse_formula("<a><a>tt & <a>0", &one).unwrap();
        assert_eq!(cs_pipeline(&f, &one).unwrap(), parse_formula("<a>0", &one).unwrap());
        assert!(!prime(Fragment::CS, &f, &one).unwrap().holds);
        assert!(prime(Fragment::CS, &parse_formula("0", &one).unwrap(), &one).unwrap().holds);
        assert!(prime(Fragment::CS, &parse_formula("<a>0", &one).unwrap(), &one).unwrap().holds);
    }

    #[test]
    fn rewrite_examples() {
        let alpha = ab();
        let f = parse_formula("tt & <a>tt", &alpha).unwrap();
        assert_eq!(rewrite_tt(&f), parse_formula("<a>tt", &alpha).unwrap());
        let f = parse_formula("(<a>tt & <a><b>tt) | tt", &alpha).unwrap();
        assert_eq!(rewrite_tt(&f), Formula::Tt);
        let f = parse_formula("(<a>tt & <a>0) | <a>tt", &alpha).unwrap();
        assert_eq!(rewrite_diamond(&f), Formula::Tt);
    }

    #[test]
    fn zero_normal_form_examples() {
        let alpha = ab();
        let zero = Formula::zero(&alpha);
        let f = parse_formula("0 | 0", &alpha).unwrap();
        assert_eq!(zero_normal_form(&f, &alpha), zero);
        let f = parse_formula("(0 | <a>0) & <a>tt", &alpha).unwrap();
        assert_eq!(
            zero_normal_form(&f, &alpha),
            parse_formula("<a>0 & <a>tt", &alpha).unwrap()
        );
        let f = parse_formula("(<a>tt | <b>tt) & (0 | <a>0)", &alpha).unwrap();
        assert_eq!(
            zero_normal_form(&f, &alpha),
            parse_formula("(<a>tt | <b>tt) & <a>0", &alpha).unwrap()
        );
        let f = parse_formula("(0 | (<a>tt & <b>tt)) & (0 | <a>0)", &alpha).unwrap();
        assert_eq!(
            zero_normal_form(&f, &alpha),
            parse_formula("0 | (<a>tt & <b>tt & <a>0)", &alpha).unwrap()
        );
        let f = parse_formula("0 & <b>tt", &alpha).unwrap();
        assert_eq!(zero_normal_form(&f, &alpha), zero);
    }

    #[test]
    fn saturation_examples() {
        let alpha = ab();
        let f = parse_formula("<a>0", &alpha).unwrap();
        assert!(satur(&f, &alpha).unwrap().is_tt);
        let f = parse_formula("<a>0 & [b]ff", &alpha).unwrap();
        assert!(is_saturated(&f, &alpha).unwrap());
        let s = satur(&f, &alpha).unwrap();
        assert!(!s.is_tt);
        assert_eq!(s.formula, f);
        assert!(!is_saturated(&parse_formula("<a>0", &alpha).unwrap(), &alpha).unwrap());
    }

    #[test]
    fn associated_process_examples() {
        let alpha = ab();
        let p2 = parse_process("a.(a.0+b.0)+b.(a.0+b.0)", None).unwrap();
        let f = parse_formula("<a>(<a>tt & <b>tt) & <b>(<a>tt & <b>tt)", &alpha).unwrap();
        assert_eq!(associated_process(&f).unwrap(), p2);
        assert_eq!(associated_process(&Formula::Tt).unwrap(), ProcessTerm::Nil);
        let f = parse_formula("<a>tt & <b>tt", &alpha).unwrap();
        assert_eq!(associated_process(&f).unwrap(), parse_process("a.0+b.0", None).unwrap());
        assert!(associated_process(&parse_formula("<a>tt | <b>tt", &alpha).unwrap()).is_err());
    }

    #[test]
    fn witness_examples() {
        let alpha = ab();
        let a0 = parse_process("a.0", None).unwrap();
        let f = parse_formula("<a>tt", &alpha).unwrap();
        assert_eq!(witness(Fragment::S, &f, &alpha).unwrap(), a0);
        let f = parse_formula("0", &alpha).unwrap();
        assert_eq!(witness(Fragment::CS, &f, &alpha).unwrap(), ProcessTerm::Nil);
        let f = parse_formula("<a>0 & [b]ff", &alpha).unwrap();
        assert_eq!(witness(Fragment::RS, &f, &alpha).unwrap(), a0);
        let f = parse_formula("<a>tt | <b>tt", &alpha).unwrap();
        assert!(witness(Fragment::S, &f, &alpha).is_err());
    }

    #[test]
    fn prime_ts_examples() {
        let alpha = ab();
        let f = parse_formula("[a]ff & [b]ff", &alpha).unwrap();
        assert!(prime_ts_bounded(&f, &alpha).unwrap());
        let f = parse_formula(
            "<a>([a]ff & [b]ff) & [b]ff & [a][a]ff & [a][b]ff",
            &alpha,
        )
        .unwrap();
        assert!(prime_ts_bounded(&f, &alpha).unwrap());
        let f = parse_formula("<a>tt", &alpha).unwrap();
        assert!(!prime_ts_bounded(&f, &alpha).unwrap());
    }

    #[test]
    fn trace_depth_examples() {
        let one = a();
        assert_eq!(trace_depth(&Formula::Tt).unwrap(), 0);
        assert_eq!(trace_depth(&parse_formula("<a>tt | <a><a>tt", &one).unwrap()).unwrap(), 1);
        assert_eq!(trace_depth(&parse_formula("<a>tt & <a><a>tt", &one).unwrap()).unwrap(), 2);
        assert!(trace_depth(&parse_formula("[a]ff", &one).unwrap()).is_err());
    }

    #[test]
    fn unsat_formulae_are_prime() {
        let alpha = ab();
        for (x, text) in [
            (Fragment::S, "ff"),
            (Fragment::CS, "0 & <a>tt"),
            (Fragment::RS, "<a>tt & [a]ff"),
        ] {
            let f = parse_formula(text, &alpha).unwrap();
            let v = prime(x, &f, &alpha).unwrap();
            assert!(v.holds && v.confidence == Confidence::Exact, "{x} {text}");
        }
    }

    #[test]
    fn prime_agrees_with_bounded_oracle() {
        let alpha = ab();
        for x in [Fragment::S, Fragment::CS, Fragment::RS] {
            let kind = match x {
                Fragment::S => PreorderKind::S,
                Fragment::CS => PreorderKind::CS,
                _ => PreorderKind::RS,
            };
            for f in random_instances(9, x, &alpha, 9, 120) {
                let v = prime(x, &f, &alpha).unwrap();
                let satisfiable = sat(x, &f, &alpha).unwrap();
                if !satisfiable {
                    assert!(v.holds);
                    continue;
                }
                let u = match oracle_universe(&f, &alpha) {
                    Ok(u) => u,
                    Err(_) => continue, // universe over the enumeration cap
                };
                let expected = brute_characteristic(kind, &f, &u).unwrap().is_some();
                assert_eq!(v.holds, expected, "prime({x}, {f})");
            }
        }
    }

    #[test]
    fn witnesses_are_characteristic_on_the_universe() {
        let alpha = ab();
        for x in [Fragment::S, Fragment::CS, Fragment::RS] {
            let kind = match x {
                Fragment::S => PreorderKind::S,
                Fragment::CS => PreorderKind::CS,
                _ => PreorderKind::RS,
            };
            for f in random_instances(23, x, &alpha, 9, 80) {
                let v = prime(x, &f, &alpha).unwrap();
                if !v.holds || !sat(x, &f, &alpha).unwrap() {
                    continue;
                }
                let p = witness(x, &f, &alpha).unwrap();
                assert!(satisfies(&p, &f), "{x} witness {p} for {f}");
                let u = match oracle_universe(&f, &alpha) {
                    Ok(u) => u,
                    Err(_) => continue, // universe over the enumeration cap
                };
                let mut ev = UniverseEvaluator::new(&u);
                for q in 0..u.len() {
                    let models = ev.holds(&f, q);
                    let above = crate::preorders::preorder(kind, &p, u.term(q));
                    assert_eq!(models, above, "{x} {f} witness {p} vs {}", u.term(q));
                }
            }
        }
    }

    #[test]
    fn unbounded_rs_agrees_with_bounded_rs() {
        let alpha = ab();
        for f in random_instances(77, Fragment::RS, &alpha, 9, 120) {
            if dnf_count(&f).unwrap() > DNF_DISJUNCT_BUDGET {
                continue;
            }
            if !sat(Fragment::RS, &f, &alpha).unwrap() {
                continue;
            }
            let bounded = prime_rs_bounded(&f, &alpha).unwrap();
            let unbounded = prime_rs_unbounded(&f, &alpha).unwrap();
            assert_eq!(bounded.holds, unbounded.holds, "{f}");
        }
    }
}
