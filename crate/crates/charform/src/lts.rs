//! Processes as terms and as explicit transition systems, together with the
//! observables (initials, traces, depth, size) the other modules consume.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::{Error, Result};

/// An action name. Equality is by name; the lexicographic order on names is
/// used wherever canonical output matters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action(pub String);

impl Action {
    pub fn new(name: impl Into<String>) -> Self {
        Action(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A finite, non-empty, ordered set of actions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    actions: BTreeSet<Action>,
}

impl Alphabet {
    /// Builds an alphabet from the given actions. Fails on an empty set.
    pub fn new(actions: impl IntoIterator<Item = Action>) -> Result<Self> {
        let actions: BTreeSet<Action> = actions.into_iter().collect();
        if actions.is_empty() {
            return Err(Error::Precondition("alphabet must be non-empty".into()));
        }
        Ok(Alphabet { actions })
    }

    /// Parses a comma- or whitespace-separated action list such as `a,b`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut actions = Vec::new();
        for part in text.split(|c: char| c == ',' || c.is_whitespace()) {
            if part.is_empty() {
                continue;
            }
            if !is_ident(part) {
                return Err(Error::Parse {
                    pos: 0,
                    msg: format!("invalid action name `{part}`"),
                });
            }
            actions.push(Action::new(part));
        }
        Alphabet::new(actions)
    }

    pub fn contains(&self, a: &Action) -> bool {
        self.actions.contains(a)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Action> + '_ {
        self.actions.iter()
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Index of an action in the canonical order.
    pub fn index_of(&self, a: &Action) -> Option<usize> {
        self.actions.iter().position(|x| x == a)
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.actions.iter().map(|a| a.name()).collect();
        f.write_str(&names.join(","))
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A finite loop-free process: `p ::= 0 | a.p | p + p`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProcessTerm {
    Nil,
    Prefix(Action, Box<ProcessTerm>),
    Sum(Box<ProcessTerm>, Box<ProcessTerm>),
}

impl ProcessTerm {
    pub fn prefix(a: Action, p: ProcessTerm) -> Self {
        ProcessTerm::Prefix(a, Box::new(p))
    }

    pub fn sum(l: ProcessTerm, r: ProcessTerm) -> Self {
        ProcessTerm::Sum(Box::new(l), Box::new(r))
    }

    /// The immediate transitions of the term, deduplicated and sorted.
    pub fn steps(&self) -> Vec<(Action, ProcessTerm)> {
        let mut out = BTreeSet::new();
        collect_steps(self, &mut out);
        out.into_iter().collect()
    }

    /// All actions occurring anywhere in the term.
    pub fn actions(&self) -> BTreeSet<Action> {
        let mut out = BTreeSet::new();
        fn go(p: &ProcessTerm, out: &mut BTreeSet<Action>) {
            match p {
                ProcessTerm::Nil => {}
                ProcessTerm::Prefix(a, q) => {
                    out.insert(a.clone());
                    go(q, out);
                }
                ProcessTerm::Sum(l, r) => {
                    go(l, out);
                    go(r, out);
                }
            }
        }
        go(self, &mut out);
        out
    }
}

fn collect_steps(p: &ProcessTerm, out: &mut BTreeSet<(Action, ProcessTerm)>) {
    match p {
        ProcessTerm::Nil => {}
        ProcessTerm::Prefix(a, q) => {
            out.insert((a.clone(), (**q).clone()));
        }
        ProcessTerm::Sum(l, r) => {
            collect_steps(l, out);
            collect_steps(r, out);
        }
    }
}

impl fmt::Display for ProcessTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessTerm::Nil => f.write_str("0"),
            ProcessTerm::Prefix(a, p) => {
                if matches!(**p, ProcessTerm::Sum(_, _)) {
                    write!(f, "{a}.({p})")
                } else {
                    write!(f, "{a}.{p}")
                }
            }
            ProcessTerm::Sum(l, r) => write!(f, "{l} + {r}"),
        }
    }
}

/// Identifier of a state inside an [`Lts`].
pub type StateId = usize;

/// An explicit transition system with a distinguished root. All decision
/// procedures require it to be loop-free, which is checked on load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lts {
    pub num_states: usize,
    pub transitions: Vec<(StateId, Action, StateId)>,
    pub root: StateId,
}

impl Lts {
    /// Validates state references and acyclicity.
    pub fn validate(&self) -> Result<()> {
        if self.root >= self.num_states {
            return Err(Error::Precondition(format!(
                "root {} out of range (states {})",
                self.root, self.num_states
            )));
        }
        for (s, _, t) in &self.transitions {
            if *s >= self.num_states || *t >= self.num_states {
                return Err(Error::Precondition(format!(
                    "transition ({s},{t}) references a missing state"
                )));
            }
        }
        self.check_acyclic()
    }

    fn check_acyclic(&self) -> Result<()> {
        // Colors: 0 unvisited, 1 on stack, 2 done.
        let mut color = vec![0u8; self.num_states];
        let succ = self.successors();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for start in 0..self.num_states {
            if color[start] != 0 {
                continue;
            }
            color[start] = 1;
            stack.push((start, 0));
            while let Some((s, i)) = stack.pop() {
                if i < succ[s].len() {
                    stack.push((s, i + 1));
                    let t = succ[s][i].1;
                    match color[t] {
                        0 => {
                            color[t] = 1;
                            stack.push((t, 0));
                        }
                        1 => {
                            return Err(Error::Cycle(format!("state {t} reaches itself")));
                        }
                        _ => {}
                    }
                } else {
                    color[s] = 2;
                }
            }
        }
        Ok(())
    }

    /// Adjacency lists, sorted by action then target for determinism.
    pub fn successors(&self) -> Vec<Vec<(Action, StateId)>> {
        let mut succ: Vec<Vec<(Action, StateId)>> = vec![Vec::new(); self.num_states];
        for (s, a, t) in &self.transitions {
            succ[*s].push((a.clone(), *t));
        }
        for list in &mut succ {
            list.sort();
            list.dedup();
        }
        succ
    }

    /// Parses the line-oriented format: `states N`, `root i`, `i a j`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut num_states = None;
        let mut root = None;
        let mut transitions = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = |msg: &str| Error::Parse {
                pos: lineno + 1,
                msg: format!("line {}: {msg}", lineno + 1),
            };
            match parts.as_slice() {
                ["states", n] => {
                    num_states =
                        Some(n.parse::<usize>().map_err(|_| bad("invalid state count"))?);
                }
                ["root", r] => {
                    root = Some(r.parse::<usize>().map_err(|_| bad("invalid root"))?);
                }
                [s, a, t] => {
                    if !is_ident(a) {
                        return Err(bad("invalid action name"));
                    }
                    let s = s.parse::<usize>().map_err(|_| bad("invalid source state"))?;
                    let t = t.parse::<usize>().map_err(|_| bad("invalid target state"))?;
                    transitions.push((s, Action::new(*a), t));
                }
                _ => return Err(bad("expected `states N`, `root i`, or `i a j`")),
            }
        }
        let lts = Lts {
            num_states: num_states
                .ok_or_else(|| Error::Parse { pos: 0, msg: "missing `states N` line".into() })?,
            transitions,
            root: root
                .ok_or_else(|| Error::Parse { pos: 0, msg: "missing `root i` line".into() })?,
        };
        lts.validate()?;
        Ok(lts)
    }

    /// Emits the line-oriented file format.
    pub fn emit(&self) -> String {
        let mut out = format!("states {}\nroot {}\n", self.num_states, self.root);
        for (s, a, t) in &self.transitions {
            out.push_str(&format!("{s} {a} {t}\n"));
        }
        out
    }
}

/// Observable behaviour of a process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observables {
    pub initials: BTreeSet<Action>,
    pub traces: BTreeSet<Vec<Action>>,
    pub depth: usize,
    pub size: usize,
}

/// Parses the process grammar `P ::= 0 | ident '.' P | P '+' P | '(' P ')'`.
/// `.` binds tighter than `+`; `+` is left-associative.
pub fn parse_process(text: &str, alphabet: Option<&Alphabet>) -> Result<ProcessTerm> {
    let mut p = ProcParser { text: text.as_bytes(), pos: 0 };
    let term = p.parse_sum()?;
    p.skip_ws();
    if p.pos != p.text.len() {
        return Err(Error::Parse {
            pos: p.pos,
            msg: "trailing input after process".into(),
        });
    }
    if let Some(alpha) = alphabet {
        for a in term.actions() {
            if !alpha.contains(&a) {
                return Err(Error::UnknownAction(a.0));
            }
        }
    }
    Ok(term)
}

struct ProcParser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> ProcParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn parse_sum(&mut self) -> Result<ProcessTerm> {
        let mut acc = self.parse_atom()?;
        while self.peek() == Some(b'+') {
            self.pos += 1;
            let rhs = self.parse_atom()?;
            acc = ProcessTerm::sum(acc, rhs);
        }
        Ok(acc)
    }

    fn parse_atom(&mut self) -> Result<ProcessTerm> {
        match self.peek() {
            Some(b'0') => {
                self.pos += 1;
                Ok(ProcessTerm::Nil)
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_sum()?;
                if self.peek() != Some(b')') {
                    return Err(Error::Parse { pos: self.pos, msg: "expected `)`".into() });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.text.len()
                    && (self.text[self.pos].is_ascii_alphanumeric() || self.text[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.text[start..self.pos]).unwrap().to_owned();
                if self.peek() != Some(b'.') {
                    return Err(Error::Parse {
                        pos: self.pos,
                        msg: format!("expected `.` after action `{name}`"),
                    });
                }
                self.pos += 1;
                let body = self.parse_atom()?;
                Ok(ProcessTerm::prefix(Action::new(name), body))
            }
            _ => Err(Error::Parse {
                pos: self.pos,
                msg: "expected `0`, an action prefix, or `(`".into(),
            }),
        }
    }
}

/// Computes initials, traces, depth, and size of a term.
pub fn observables(p: &ProcessTerm) -> Observables {
    let steps = p.steps();
    let initials: BTreeSet<Action> = steps.iter().map(|(a, _)| a.clone()).collect();
    let traces = trace_set(p);
    let depth = traces.iter().map(|t| t.len()).max().unwrap_or(0);
    let lts = term_to_lts(p);
    Observables {
        initials,
        traces,
        depth,
        size: lts.num_states + lts.transitions.len(),
    }
}

/// The prefix-closed trace set of a term.
pub fn trace_set(p: &ProcessTerm) -> BTreeSet<Vec<Action>> {
    let mut out = BTreeSet::new();
    out.insert(Vec::new());
    for (a, q) in p.steps() {
        for mut t in trace_set(&q) {
            t.insert(0, a.clone());
            out.insert(t);
        }
    }
    out
}

/// Unfolds a term into a tree-shaped [`Lts`] (one state per sub-position
/// reachable through transitions; sums do not create states).
pub fn term_to_lts(p: &ProcessTerm) -> Lts {
    let mut transitions = Vec::new();
    let mut num_states = 1;
    let mut stack = vec![(0usize, p.clone())];
    while let Some((sid, term)) = stack.pop() {
        for (a, q) in term.steps() {
            let tid = num_states;
            num_states += 1;
            transitions.push((sid, a, tid));
            stack.push((tid, q));
        }
    }
    transitions.sort();
    Lts { num_states, transitions, root: 0 }
}

/// Folds an acyclic [`Lts`] back into a term, unfolding any sharing.
pub fn lts_to_term(l: &Lts) -> Result<ProcessTerm> {
    l.validate()?;
    let succ = l.successors();
    let mut memo: HashMap<StateId, ProcessTerm> = HashMap::new();
    fn go(
        s: StateId,
        succ: &[Vec<(Action, StateId)>],
        memo: &mut HashMap<StateId, ProcessTerm>,
    ) -> ProcessTerm {
        if let Some(t) = memo.get(&s) {
            return t.clone();
        }
        let mut parts: Vec<ProcessTerm> = Vec::new();
        for (a, t) in &succ[s] {
            let body = go(*t, succ, memo);
            parts.push(ProcessTerm::prefix(a.clone(), body));
        }
        let term = parts
            .into_iter()
            .reduce(ProcessTerm::sum)
            .unwrap_or(ProcessTerm::Nil);
        memo.insert(s, term.clone());
        term
    }
    Ok(go(l.root, &succ, &mut memo))
}
