//! Brute-force ground truth at desk scale: canonical process enumeration,
//! small-model satisfiability, bounded entailment, definition-level
//! characteristic checks, and hard-instance generators.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{positive, Formula, Fragment};
use crate::lts::{Action, Alphabet, ProcessTerm};
use crate::preorders::PreorderKind;
use crate::{Error, Result};

/// Default cap on the number of enumerated processes per universe.
pub const DEFAULT_PROCESS_CAP: usize = 200_000;

/// Identifier of a canonical process inside a [`Universe`].
pub type ProcId = usize;

/// An exhaustive enumeration of the processes over an alphabet up to a depth
/// and branching-width bound, deduplicated modulo associativity and
/// commutativity of + and idempotence of identical summands. A canonical
/// process is a set of (action, child) pairs, so two enumerated processes
/// are distinct iff they are non-bisimilar.
pub struct Universe {
    pub alphabet: Alphabet,
    pub max_depth: u32,
    pub max_width: usize,
    nodes: Vec<Vec<(usize, ProcId)>>,
    depths: Vec<u32>,
    terms: Vec<ProcessTerm>,
}

impl Universe {
    pub fn new(alphabet: &Alphabet, max_depth: u32, max_width: usize) -> Result<Universe> {
        Universe::with_cap(alphabet, max_depth, max_width, DEFAULT_PROCESS_CAP)
    }

    pub fn with_cap(
        alphabet: &Alphabet,
        max_depth: u32,
        max_width: usize,
        cap: usize,
    ) -> Result<Universe> {
        let mut nodes: Vec<Vec<(usize, ProcId)>> = vec![Vec::new()];
        let mut depths: Vec<u32> = vec![0];
        let mut index: HashMap<Vec<(usize, ProcId)>, ProcId> = HashMap::new();
        index.insert(Vec::new(), 0);
        for level in 1..=max_depth {
            // Candidate children are all (action, process) pairs with the
            // process enumerated so far; new sets are interned in increasing
            // subset-size order, which keeps ids stable across levels.
            let pairs: Vec<(usize, ProcId)> = (0..alphabet.len())
                .flat_map(|a| (0..nodes.len()).map(move |p| (a, p)))
                .collect();
            let mut chosen: Vec<(usize, ProcId)> = Vec::new();
            let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
            // Iterative enumeration of all subsets of `pairs` of size 1..=w.
            subsets(&pairs, max_width, &mut chosen, &mut stack, &mut |set| {
                if index.contains_key(set) {
                    return Ok(());
                }
                if nodes.len() >= cap {
                    return Err(Error::Budget(format!(
                        "process universe exceeds cap of {cap} at depth {level}"
                    )));
                }
                index.insert(set.to_vec(), nodes.len());
                nodes.push(set.to_vec());
                depths.push(level);
                Ok(())
            })?;
        }
        let mut terms: Vec<ProcessTerm> = Vec::with_capacity(nodes.len());
        for set in &nodes {
            let mut term: Option<ProcessTerm> = None;
            for &(a, c) in set {
                let action = alphabet.iter().nth(a).expect("action index in range").clone();
                let part = ProcessTerm::prefix(action, terms[c].clone());
                term = Some(match term {
                    None => part,
                    Some(t) => ProcessTerm::sum(t, part),
                });
            }
            terms.push(term.unwrap_or(ProcessTerm::Nil));
        }
        Ok(Universe {
            alphabet: alphabet.clone(),
            max_depth,
            max_width,
            nodes,
            depths,
            terms,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn term(&self, id: ProcId) -> &ProcessTerm {
        &self.terms[id]
    }

    pub fn depth(&self, id: ProcId) -> u32 {
        self.depths[id]
    }

    /// The canonical (action index, child id) successor pairs of a process.
    pub fn successors(&self, id: ProcId) -> &[(usize, ProcId)] {
        &self.nodes[id]
    }

    fn initials_mask(&self, id: ProcId) -> u32 {
        self.nodes[id].iter().fold(0, |m, &(a, _)| m | (1 << a))
    }

    /// The full preorder relation over the universe as a bit matrix,
    /// computed by memoized structural recursion (children always have
    /// strictly smaller depth).
    pub fn relation(&self, kind: PreorderKind) -> Result<RelMatrix> {
        let n = self.len();
        if self.alphabet.len() > 32 {
            return Err(Error::Budget("relation matrices support at most 32 actions".into()));
        }
        match kind {
            PreorderKind::BS => {
                // Canonical enumeration quotients by bisimilarity already.
                let mut m = RelMatrix::new(n);
                for i in 0..n {
                    m.set(i, i);
                }
                Ok(m)
            }
            PreorderKind::TS => {
                let tid = self.trace_ids();
                let mut memo = vec![0u8; n * n];
                let mut m = RelMatrix::new(n);
                for i in 0..n {
                    for j in 0..n {
                        if self.ts_rec(i, j, &tid, &mut memo) {
                            m.set(i, j);
                        }
                    }
                }
                Ok(m)
            }
            PreorderKind::NS(k) => {
                let prev = if k <= 1 {
                    return self.relation(PreorderKind::S);
                } else {
                    self.relation(PreorderKind::NS(k - 1))?
                };
                let mut memo = vec![0u8; n * n];
                let mut m = RelMatrix::new(n);
                for i in 0..n {
                    for j in 0..n {
                        if self.sim_rec(i, j, SimKind::Nested(&prev), &mut memo) {
                            m.set(i, j);
                        }
                    }
                }
                Ok(m)
            }
            PreorderKind::S | PreorderKind::CS | PreorderKind::RS => {
                let sk = match kind {
                    PreorderKind::S => SimKind::Plain,
                    PreorderKind::CS => SimKind::Complete,
                    _ => SimKind::Ready,
                };
                let mut memo = vec![0u8; n * n];
                let mut m = RelMatrix::new(n);
                for i in 0..n {
                    for j in 0..n {
                        if self.sim_rec(i, j, sk, &mut memo) {
                            m.set(i, j);
                        }
                    }
                }
                Ok(m)
            }
        }
    }

    fn sim_rec(&self, i: ProcId, j: ProcId, kind: SimKind, memo: &mut [u8]) -> bool {
        let key = i * self.len() + j;
        if memo[key] != 0 {
            return memo[key] == 2;
        }
        let extra = match kind {
            SimKind::Plain => true,
            SimKind::Complete => self.nodes[i].is_empty() == self.nodes[j].is_empty(),
            SimKind::Ready => self.initials_mask(i) == self.initials_mask(j),
            SimKind::Nested(prev) => prev.holds(j, i),
        };
        let v = extra
            && self.nodes[i].iter().all(|&(a, c)| {
                self.nodes[j]
                    .iter()
                    .any(|&(b, d)| a == b && self.sim_rec(c, d, kind, memo))
            });
        memo[key] = if v { 2 } else { 1 };
        v
    }

    fn ts_rec(&self, i: ProcId, j: ProcId, tid: &[usize], memo: &mut [u8]) -> bool {
        let key = i * self.len() + j;
        if memo[key] != 0 {
            return memo[key] == 2;
        }
        let v = tid[i] == tid[j]
            && self.nodes[i].iter().all(|&(a, c)| {
                self.nodes[j]
                    .iter()
                    .any(|&(b, d)| a == b && self.ts_rec(c, d, tid, memo))
            });
        memo[key] = if v { 2 } else { 1 };
        v
    }

    /// Interns the trace set of every process; equal ids mean equal traces.
    fn trace_ids(&self) -> Vec<usize> {
        let mut sets: Vec<BTreeSet<Vec<usize>>> = Vec::with_capacity(self.len());
        for set in &self.nodes {
            let mut traces: BTreeSet<Vec<usize>> = [Vec::new()].into_iter().collect();
            for &(a, c) in set {
                for t in &sets[c] {
                    let mut ext = Vec::with_capacity(t.len() + 1);
                    ext.push(a);
                    ext.extend_from_slice(t);
                    traces.insert(ext);
                }
            }
            sets.push(traces);
        }
        let mut intern: HashMap<&BTreeSet<Vec<usize>>, usize> = HashMap::new();
        sets.iter()
            .map(|s| {
                let next = intern.len();
                *intern.entry(s).or_insert(next)
            })
            .collect()
    }
}

#[derive(Clone, Copy)]
enum SimKind<'a> {
    Plain,
    Complete,
    Ready,
    Nested(&'a RelMatrix),
}

/// A boolean relation over universe processes stored as packed bit rows.
pub struct RelMatrix {
    n: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl RelMatrix {
    fn new(n: usize) -> RelMatrix {
        let words_per_row = n.div_ceil(64);
        RelMatrix { n, words_per_row, words: vec![0; n * words_per_row] }
    }

    fn set(&mut self, i: usize, j: usize) {
        self.words[i * self.words_per_row + j / 64] |= 1 << (j % 64);
    }

    pub fn holds(&self, i: usize, j: usize) -> bool {
        self.words[i * self.words_per_row + j / 64] & (1 << (j % 64)) != 0
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// The packed row of processes related to `i` (64 processes per word).
    pub fn row(&self, i: usize) -> &[u64] {
        &self.words[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    /// True if every bit of `sub` is also set in `sup` (rowwise inclusion).
    pub fn includes(sub: &[u64], sup: &[u64]) -> bool {
        sub.iter().zip(sup).all(|(a, b)| a & !b == 0)
    }
}

fn subsets(
    pairs: &[(usize, ProcId)],
    width: usize,
    chosen: &mut Vec<(usize, ProcId)>,
    _stack: &mut [(usize, usize)],
    emit: &mut impl FnMut(&[(usize, ProcId)]) -> Result<()>,
) -> Result<()> {
    fn rec(
        pairs: &[(usize, ProcId)],
        start: usize,
        width: usize,
        chosen: &mut Vec<(usize, ProcId)>,
        emit: &mut impl FnMut(&[(usize, ProcId)]) -> Result<()>,
    ) -> Result<()> {
        if !chosen.is_empty() {
            emit(chosen)?;
        }
        if chosen.len() == width {
            return Ok(());
        }
        for k in start..pairs.len() {
            chosen.push(pairs[k]);
            rec(pairs, k + 1, width, chosen, emit)?;
            chosen.pop();
        }
        Ok(())
    }
    rec(pairs, 0, width, chosen, emit)
}

/// Evaluates formulae over every process of a universe at once, one packed
/// bit row per distinct subformula. Rows are cached, so the cost of a batch
/// of structurally overlapping formulae is proportional to the number of
/// distinct subformulae.
pub struct UniverseEvaluator<'a> {
    u: &'a Universe,
    cache: HashMap<Formula, Vec<u64>>,
}

impl<'a> UniverseEvaluator<'a> {
    pub fn new(u: &'a Universe) -> Self {
        UniverseEvaluator { u, cache: HashMap::new() }
    }

    /// The packed satisfaction row of `f`: bit `i` is set iff process `i`
    /// satisfies `f`. Directly comparable with [`RelMatrix::row`].
    pub fn satisfying(&mut self, f: &Formula) -> Vec<u64> {
        if let Some(bits) = self.cache.get(f) {
            return bits.clone();
        }
        let n = self.u.len();
        let words = n.div_ceil(64);
        let bits = match f {
            Formula::Tt => {
                let mut v = vec![u64::MAX; words];
                trim(&mut v, n);
                v
            }
            Formula::Ff => vec![0; words],
            Formula::Dia(a, g) => {
                let child = self.satisfying(g);
                let ai = self.u.alphabet.index_of(a);
                let mut v = vec![0u64; words];
                if let Some(ai) = ai {
                    for i in 0..n {
                        if self.u.nodes[i]
                            .iter()
                            .any(|&(b, c)| b == ai && child[c / 64] & (1 << (c % 64)) != 0)
                        {
                            v[i / 64] |= 1 << (i % 64);
                        }
                    }
                }
                v
            }
            Formula::Box(a, g) => {
                let child = self.satisfying(g);
                let ai = self.u.alphabet.index_of(a);
                let mut v = vec![0u64; words];
                for i in 0..n {
                    let ok = match ai {
                        None => true,
                        Some(ai) => self.u.nodes[i]
                            .iter()
                            .all(|&(b, c)| b != ai || child[c / 64] & (1 << (c % 64)) != 0),
                    };
                    if ok {
                        v[i / 64] |= 1 << (i % 64);
                    }
                }
                v
            }
            Formula::And(l, r) => {
                let lv = self.satisfying(l);
                let rv = self.satisfying(r);
                lv.iter().zip(&rv).map(|(a, b)| a & b).collect()
            }
            Formula::Or(l, r) => {
                let lv = self.satisfying(l);
                let rv = self.satisfying(r);
                lv.iter().zip(&rv).map(|(a, b)| a | b).collect()
            }
            Formula::Neg(g) => {
                let mut v: Vec<u64> = self.satisfying(g).iter().map(|w| !w).collect();
                trim(&mut v, n);
                v
            }
        };
        self.cache.insert(f.clone(), bits.clone());
        bits
    }

    /// Does process `id` satisfy `f`?
    pub fn holds(&mut self, f: &Formula, id: ProcId) -> bool {
        let bits = self.satisfying(f);
        bits[id / 64] & (1 << (id % 64)) != 0
    }
}

fn trim(bits: &mut [u64], n: usize) {
    if n % 64 != 0 {
        if let Some(last) = bits.last_mut() {
            *last &= (1u64 << (n % 64)) - 1;
        }
    }
}

/// The universe used by [`brute_sat`]: depth md(f), width the number of
/// diamond subformulae (at least 1), the standard filtration bound.
pub fn sat_universe(f: &Formula, alphabet: &Alphabet) -> Result<Universe> {
    let pos = positive(f);
    let width = pos.diamond_count().max(1);
    Universe::new(alphabet, pos.modal_depth() as u32, width)
}

/// Small-model satisfiability: exhausts the universe of depth md(f) and
/// width #diamonds(f).
pub fn brute_sat(f: &Formula, alphabet: &Alphabet) -> Result<bool> {
    let u = sat_universe(f, alphabet)?;
    let bits = UniverseEvaluator::new(&u).satisfying(f);
    Ok(bits.iter().any(|w| *w != 0))
}

/// Bounded entailment: every process of the universe satisfying `f` also
/// satisfies `g`.
pub fn brute_entails(f: &Formula, g: &Formula, u: &Universe) -> bool {
    let mut ev = UniverseEvaluator::new(u);
    let fv = ev.satisfying(f);
    let gv = ev.satisfying(g);
    RelMatrix::includes(&fv, &gv)
}

/// Definition-level characteristic check: searches for p with depth ≤ md(f)
/// such that p ⊨ f and every enumerated q ⊨ f satisfies p ≲_X q. Exact for
/// TS when the universe covers depth md(f)+1; evidence-grade otherwise.
pub fn brute_characteristic(
    kind: PreorderKind,
    f: &Formula,
    u: &Universe,
) -> Result<Option<ProcessTerm>> {
    let sat = UniverseEvaluator::new(u).satisfying(f);
    let rel = u.relation(kind)?;
    let d = (f.modal_depth() as u32).min(u.max_depth);
    for p in 0..u.len() {
        if u.depth(p) > d || sat[p / 64] & (1 << (p % 64)) == 0 {
            continue;
        }
        if RelMatrix::includes(&sat, rel.row(p)) {
            return Ok(Some(u.term(p).clone()));
        }
    }
    Ok(None)
}

/// A propositional formula in clausal form: each clause is a list of
/// non-zero literals, positive for x_i and negative for ¬x_i (1-based).
pub type Clause = Vec<i32>;

/// Encodes a CNF into L_RS (fresh action per variable: x_i ↦ ⟨a_i⟩tt,
/// ¬x_i ↦ [a_i]ff) or into L_TS (binary-index diamond/box chains over the
/// two-action alphabet {0,1}). Returns the formula and its alphabet.
pub fn encode_cnf(target: Fragment, cnf: &[Clause], num_vars: usize) -> Result<(Formula, Alphabet)> {
    match target {
        Fragment::RS => {
            let actions: Vec<Action> =
                (1..=num_vars).map(|i| Action::new(format!("a{i}"))).collect();
            let alphabet = Alphabet::new(actions.clone())?;
            let f = Formula::conj(cnf.iter().map(|clause| {
                Formula::disj(clause.iter().map(|&lit| {
                    let a = actions[(lit.unsigned_abs() as usize) - 1].clone();
                    if lit > 0 {
                        Formula::dia(a, Formula::Tt)
                    } else {
                        Formula::boxm(a, Formula::Ff)
                    }
                }))
            }));
            Ok((f, alphabet))
        }
        Fragment::TS => {
            let zero = Action::new("0");
            let one = Action::new("1");
            let alphabet = Alphabet::new([zero.clone(), one.clone()])?;
            let k = bits_needed(num_vars);
            let enc_pos = |i: usize| {
                // The index path 0 b_1 ... b_k with sibling exclusions:
                // [b̄_0]ff ∧ ⟨b_0⟩([b̄_1]ff ∧ ⟨b_1⟩(... ⟨b_k⟩0 ...)).
                let mut path = vec![0u8];
                path.extend((0..k).rev().map(|b| ((i >> b) & 1) as u8));
                let mut f = Formula::zero(&alphabet);
                for &bit in path.iter().rev() {
                    let (step, other) =
                        if bit == 0 { (zero.clone(), one.clone()) } else { (one.clone(), zero.clone()) };
                    f = Formula::and(Formula::boxm(other, Formula::Ff), Formula::dia(step, f));
                }
                f
            };
            let enc_neg = |i: usize| {
                let mut f = Formula::Ff;
                for b in 0..k {
                    let bit = (i >> b) & 1;
                    let a = if bit == 0 { zero.clone() } else { one.clone() };
                    f = Formula::boxm(a, f);
                }
                f
            };
            let f = Formula::conj(cnf.iter().map(|clause| {
                Formula::disj(clause.iter().map(|&lit| {
                    let i = (lit.unsigned_abs() as usize) - 1;
                    if lit > 0 {
                        enc_pos(i)
                    } else {
                        enc_neg(i)
                    }
                }))
            }));
            Ok((f, alphabet))
        }
        other => Err(Error::Fragment {
            fragment: other.to_string(),
            msg: "encode_cnf targets RS or TS".into(),
        }),
    }
}

fn bits_needed(n: usize) -> usize {
    let mut k = 1;
    while (1usize << k) < n {
        k += 1;
    }
    k
}

/// Encodes a DNF over n variables as a pair of processes over {0,1}: the
/// clause-path process and the full cube. The DNF is a tautology iff the
/// two processes are trace equivalent.
pub fn encode_dnf_tautology(dnf: &[Clause], num_vars: usize) -> (ProcessTerm, ProcessTerm) {
    let zero = Action::new("0");
    let one = Action::new("1");
    let clause_proc = |clause: &Clause| {
        let mut p = ProcessTerm::Nil;
        for j in (1..=num_vars).rev() {
            let pos = clause.contains(&(j as i32));
            let neg = clause.contains(&(-(j as i32)));
            p = if pos && !neg {
                ProcessTerm::prefix(one.clone(), p)
            } else if neg && !pos {
                ProcessTerm::prefix(zero.clone(), p)
            } else {
                ProcessTerm::sum(
                    ProcessTerm::prefix(zero.clone(), p.clone()),
                    ProcessTerm::prefix(one.clone(), p),
                )
            };
        }
        p
    };
    let p0 = dnf
        .iter()
        .map(clause_proc)
        .reduce(ProcessTerm::sum)
        .unwrap_or(ProcessTerm::Nil);
    let mut cube = ProcessTerm::Nil;
    for _ in 0..num_vars {
        cube = ProcessTerm::sum(
            ProcessTerm::prefix(zero.clone(), cube.clone()),
            ProcessTerm::prefix(one.clone(), cube),
        );
    }
    (p0, cube)
}

/// Reproducible fragment-respecting random formulae with explicit size at
/// most `size`.
pub fn random_instances(
    seed: u64,
    fragment: Fragment,
    alphabet: &Alphabet,
    size: usize,
    count: usize,
) -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| gen_formula(&mut rng, fragment, alphabet, size.max(1)))
        .collect()
}

fn rand_action(rng: &mut ChaCha8Rng, alphabet: &Alphabet) -> Action {
    let i = rng.gen_range(0..alphabet.len());
    alphabet.iter().nth(i).expect("index in range").clone()
}

fn gen_formula(
    rng: &mut ChaCha8Rng,
    x: Fragment,
    alphabet: &Alphabet,
    budget: usize,
) -> Formula {
    // Explicit-size costs: tt/ff cost 1, modalities and connectives 1 each,
    // so the zero atom costs 3|A| - 1 and [a]ff costs 2. The generated
    // formula never exceeds the budget.
    let zero_cost = 3 * alphabet.len() - 1;
    let atom = |rng: &mut ChaCha8Rng, budget: usize| match x {
        Fragment::S => {
            if rng.gen_bool(0.75) {
                Formula::Tt
            } else {
                Formula::Ff
            }
        }
        Fragment::CS => match rng.gen_range(0..4) {
            0 => Formula::Ff,
            1 if budget >= zero_cost => Formula::zero(alphabet),
            _ => Formula::Tt,
        },
        _ => match rng.gen_range(0..5) {
            0 => Formula::Ff,
            1 if budget >= zero_cost => Formula::zero(alphabet),
            2 if budget >= 2 => Formula::boxm(rand_action(rng, alphabet), Formula::Ff),
            _ => Formula::Tt,
        },
    };
    if budget <= 1 {
        return atom(rng, budget);
    }
    let split = |rng: &mut ChaCha8Rng| {
        let l = rng.gen_range(1..budget - 1);
        (l, budget - 1 - l)
    };
    let choice = rng.gen_range(0..100);
    match x {
        Fragment::S | Fragment::CS | Fragment::RS => {
            if choice < 35 {
                Formula::dia(rand_action(rng, alphabet), gen_formula(rng, x, alphabet, budget - 1))
            } else if choice < 60 && budget >= 3 {
                let (l, r) = split(rng);
                Formula::and(gen_formula(rng, x, alphabet, l), gen_formula(rng, x, alphabet, r))
            } else if choice < 85 && budget >= 3 {
                let (l, r) = split(rng);
                Formula::or(gen_formula(rng, x, alphabet, l), gen_formula(rng, x, alphabet, r))
            } else {
                atom(rng, budget)
            }
        }
        Fragment::TS => {
            if choice < 30 {
                Formula::dia(rand_action(rng, alphabet), gen_formula(rng, x, alphabet, budget - 1))
            } else if choice < 50 && budget >= 3 {
                let (l, r) = split(rng);
                Formula::and(gen_formula(rng, x, alphabet, l), gen_formula(rng, x, alphabet, r))
            } else if choice < 70 && budget >= 3 {
                let (l, r) = split(rng);
                Formula::or(gen_formula(rng, x, alphabet, l), gen_formula(rng, x, alphabet, r))
            } else if choice < 90 {
                // A box chain [a1]...[am]ff of length fitting the budget.
                let m = rng.gen_range(1..=(budget - 1).min(3));
                let mut f = Formula::Ff;
                for _ in 0..m {
                    f = Formula::boxm(rand_action(rng, alphabet), f);
                }
                f
            } else {
                atom(rng, budget)
            }
        }
        Fragment::S2 => {
            if choice < 20 {
                Formula::neg(gen_formula(rng, Fragment::S, alphabet, budget - 1))
            } else if choice < 50 {
                Formula::dia(rand_action(rng, alphabet), gen_formula(rng, x, alphabet, budget - 1))
            } else if choice < 70 && budget >= 3 {
                let (l, r) = split(rng);
                Formula::and(gen_formula(rng, x, alphabet, l), gen_formula(rng, x, alphabet, r))
            } else if choice < 90 && budget >= 3 {
                let (l, r) = split(rng);
                Formula::or(gen_formula(rng, x, alphabet, l), gen_formula(rng, x, alphabet, r))
            } else {
                atom(rng, budget)
            }
        }
        Fragment::S3 => {
            if choice < 20 {
                Formula::neg(gen_formula(rng, Fragment::S2, alphabet, budget - 1))
            } else {
                gen_formula(rng, Fragment::S2, alphabet, budget)
            }
        }
        Fragment::BS => match choice {
            0..=24 => Formula::dia(
                rand_action(rng, alphabet),
                gen_formula(rng, x, alphabet, budget - 1),
            ),
            25..=44 => Formula::boxm(
                rand_action(rng, alphabet),
                gen_formula(rng, x, alphabet, budget - 1),
            ),
            45..=54 => Formula::neg(gen_formula(rng, x, alphabet, budget - 1)),
            55..=74 if budget >= 3 => {
                let (l, r) = split(rng);
                Formula::and(gen_formula(rng, x, alphabet, l), gen_formula(rng, x, alphabet, r))
            }
            75..=94 if budget >= 3 => {
                let (l, r) = split(rng);
                Formula::or(gen_formula(rng, x, alphabet, l), gen_formula(rng, x, alphabet, r))
            }
            _ => atom(rng, budget),
        },
    }
}

/// A uniformly chosen process of the universe, reproducible from the seed.
pub fn random_process(seed: u64, u: &Universe) -> ProcessTerm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    u.term(rng.gen_range(0..u.len())).clone()
}
