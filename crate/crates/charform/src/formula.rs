//! Modal formula AST, fragment classification, dual/negation, DNF, metrics,
//! and equation systems (declarative form).

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::lts::{Action, Alphabet};
use crate::{Error, Result};

/// A modal formula over actions: `tt | ff | ⟨a⟩φ | [a]φ | φ∧φ | φ∨φ | ¬φ`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Tt,
    Ff,
    Dia(Action, Box<Formula>),
    Box(Action, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Neg(Box<Formula>),
}

impl Formula {
    pub fn dia(a: Action, f: Formula) -> Self {
        Formula::Dia(a, Box::new(f))
    }

    pub fn boxm(a: Action, f: Formula) -> Self {
        Formula::Box(a, Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn neg(f: Formula) -> Self {
        Formula::Neg(Box::new(f))
    }

    /// Left-associated conjunction of the given parts; empty yields `tt`.
    pub fn conj(parts: impl IntoIterator<Item = Formula>) -> Formula {
        parts.into_iter().reduce(Formula::and).unwrap_or(Formula::Tt)
    }

    /// Left-associated disjunction of the given parts; empty yields `ff`.
    pub fn disj(parts: impl IntoIterator<Item = Formula>) -> Formula {
        parts.into_iter().reduce(Formula::or).unwrap_or(Formula::Ff)
    }

    /// The canonical expansion of the atom `0` over the alphabet:
    /// the conjunction of `[a]ff` over all actions, in canonical order.
    pub fn zero(alphabet: &Alphabet) -> Formula {
        Formula::conj(alphabet.iter().map(|a| Formula::boxm(a.clone(), Formula::Ff)))
    }

    /// All actions occurring in the formula.
    pub fn actions(&self) -> BTreeSet<Action> {
        let mut out = BTreeSet::new();
        fn go(f: &Formula, out: &mut BTreeSet<Action>) {
            match f {
                Formula::Tt | Formula::Ff => {}
                Formula::Dia(a, g) | Formula::Box(a, g) => {
                    out.insert(a.clone());
                    go(g, out);
                }
                Formula::And(l, r) | Formula::Or(l, r) => {
                    go(l, out);
                    go(r, out);
                }
                Formula::Neg(g) => go(g, out),
            }
        }
        go(self, &mut out);
        out
    }

    /// Number of symbols in the explicit form. Each of tt, ff, ⟨a⟩, [a],
    /// ∧, ∨, ¬ counts 1; parentheses count 0.
    pub fn explicit_size(&self) -> usize {
        match self {
            Formula::Tt | Formula::Ff => 1,
            Formula::Dia(_, g) | Formula::Box(_, g) | Formula::Neg(g) => 1 + g.explicit_size(),
            Formula::And(l, r) | Formula::Or(l, r) => {
                1 + l.explicit_size() + r.explicit_size()
            }
        }
    }

    /// Modal depth: nesting of modalities; negation does not add depth.
    pub fn modal_depth(&self) -> usize {
        match self {
            Formula::Tt | Formula::Ff => 0,
            Formula::Dia(_, g) | Formula::Box(_, g) => 1 + g.modal_depth(),
            Formula::And(l, r) | Formula::Or(l, r) => l.modal_depth().max(r.modal_depth()),
            Formula::Neg(g) => g.modal_depth(),
        }
    }

    /// Number of diamond subformula occurrences in the negation-free form.
    pub fn diamond_count(&self) -> usize {
        fn go(f: &Formula) -> usize {
            match f {
                Formula::Tt | Formula::Ff => 0,
                Formula::Dia(_, g) => 1 + go(g),
                Formula::Box(_, g) => go(g),
                Formula::And(l, r) | Formula::Or(l, r) => go(l) + go(r),
                Formula::Neg(_) => unreachable!("positive() removes negations"),
            }
        }
        go(&positive(self))
    }
}

/// Removes all negations, pushing them through with the dual laws.
pub fn positive(f: &Formula) -> Formula {
    match f {
        Formula::Tt => Formula::Tt,
        Formula::Ff => Formula::Ff,
        Formula::Dia(a, g) => Formula::dia(a.clone(), positive(g)),
        Formula::Box(a, g) => Formula::boxm(a.clone(), positive(g)),
        Formula::And(l, r) => Formula::and(positive(l), positive(r)),
        Formula::Or(l, r) => Formula::or(positive(l), positive(r)),
        Formula::Neg(g) => dual(g),
    }
}

/// The dual (negation) of a formula, as a negation-free formula:
/// ¬tt = ff, ¬(φ∧ψ) = ¬φ∨¬ψ, ¬⟨a⟩φ = [a]¬φ, ¬¬φ = φ, and so on.
pub fn dual(f: &Formula) -> Formula {
    match f {
        Formula::Tt => Formula::Ff,
        Formula::Ff => Formula::Tt,
        Formula::Dia(a, g) => Formula::boxm(a.clone(), dual(g)),
        Formula::Box(a, g) => Formula::dia(a.clone(), dual(g)),
        Formula::And(l, r) => Formula::or(dual(l), dual(r)),
        Formula::Or(l, r) => Formula::and(dual(l), dual(r)),
        Formula::Neg(g) => positive(g),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_prec(self, 0, f)
    }
}

// Precedence levels: 0 = or, 1 = and, 2 = prefix.
fn fmt_prec(form: &Formula, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match form {
        Formula::Tt => f.write_str("tt"),
        Formula::Ff => f.write_str("ff"),
        Formula::Dia(a, g) => {
            write!(f, "<{a}>")?;
            fmt_prec(g, 2, f)
        }
        Formula::Box(a, g) => {
            write!(f, "[{a}]")?;
            fmt_prec(g, 2, f)
        }
        Formula::Neg(g) => {
            f.write_str("!")?;
            fmt_prec(g, 2, f)
        }
        Formula::And(l, r) => {
            if prec > 1 {
                f.write_str("(")?;
            }
            fmt_prec(l, 1, f)?;
            f.write_str(" & ")?;
            fmt_prec(r, 1, f)?;
            if prec > 1 {
                f.write_str(")")?;
            }
            Ok(())
        }
        Formula::Or(l, r) => {
            if prec > 0 {
                f.write_str("(")?;
            }
            fmt_prec(l, 0, f)?;
            f.write_str(" | ")?;
            fmt_prec(r, 0, f)?;
            if prec > 0 {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

/// The seven fragments, ordered by syntactic inclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fragment {
    S,
    CS,
    RS,
    TS,
    S2,
    S3,
    BS,
}

impl Fragment {
    pub const ALL: [Fragment; 7] = [
        Fragment::S,
        Fragment::CS,
        Fragment::RS,
        Fragment::TS,
        Fragment::S2,
        Fragment::S3,
        Fragment::BS,
    ];
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Fragment::S => "S",
            Fragment::CS => "CS",
            Fragment::RS => "RS",
            Fragment::TS => "TS",
            Fragment::S2 => "2S",
            Fragment::S3 => "3S",
            Fragment::BS => "BS",
        };
        f.write_str(s)
    }
}

impl FromStr for Fragment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "S" | "1S" => Ok(Fragment::S),
            "CS" => Ok(Fragment::CS),
            "RS" => Ok(Fragment::RS),
            "TS" => Ok(Fragment::TS),
            "2S" => Ok(Fragment::S2),
            "3S" => Ok(Fragment::S3),
            "BS" => Ok(Fragment::BS),
            other => Err(Error::Fragment {
                fragment: other.to_string(),
                msg: "expected one of S, CS, RS, TS, 2S, 3S, BS".into(),
            }),
        }
    }
}

/// Is `f` a conjunction of `[a]ff` atoms covering exactly the alphabet
/// (the expansion of the atom `0`)? Matching is modulo associativity and
/// commutativity; duplicate conjuncts are tolerated.
pub fn is_zero_form(f: &Formula, alphabet: &Alphabet) -> bool {
    let mut seen = BTreeSet::new();
    fn collect(f: &Formula, seen: &mut BTreeSet<Action>) -> bool {
        match f {
            Formula::And(l, r) => collect(l, seen) && collect(r, seen),
            Formula::Box(a, g) if **g == Formula::Ff => {
                seen.insert(a.clone());
                true
            }
            _ => false,
        }
    }
    if !collect(f, &mut seen) {
        return false;
    }
    seen.len() == alphabet.len() && seen.iter().all(|a| alphabet.contains(a))
}

fn in_s(f: &Formula) -> bool {
    match f {
        Formula::Tt | Formula::Ff => true,
        Formula::Dia(_, g) => in_s(g),
        Formula::And(l, r) | Formula::Or(l, r) => in_s(l) && in_s(r),
        Formula::Box(_, _) | Formula::Neg(_) => false,
    }
}

fn in_cs(f: &Formula, alphabet: &Alphabet) -> bool {
    if is_zero_form(f, alphabet) {
        return true;
    }
    match f {
        Formula::Tt | Formula::Ff => true,
        Formula::Dia(_, g) => in_cs(g, alphabet),
        Formula::And(l, r) | Formula::Or(l, r) => in_cs(l, alphabet) && in_cs(r, alphabet),
        Formula::Box(_, _) | Formula::Neg(_) => false,
    }
}

fn in_rs(f: &Formula) -> bool {
    match f {
        Formula::Tt | Formula::Ff => true,
        Formula::Dia(_, g) => in_rs(g),
        Formula::And(l, r) | Formula::Or(l, r) => in_rs(l) && in_rs(r),
        Formula::Box(_, g) => **g == Formula::Ff,
        Formula::Neg(_) => false,
    }
}

/// A box chain ending in ff: `ψ ::= ff | [a]ψ`.
fn is_ts_chain(f: &Formula) -> bool {
    match f {
        Formula::Ff => true,
        Formula::Box(_, g) => is_ts_chain(g),
        _ => false,
    }
}

fn in_ts(f: &Formula) -> bool {
    if is_ts_chain(f) {
        return true;
    }
    match f {
        Formula::Tt | Formula::Ff => true,
        Formula::Dia(_, g) => in_ts(g),
        Formula::And(l, r) | Formula::Or(l, r) => in_ts(l) && in_ts(r),
        Formula::Box(_, _) | Formula::Neg(_) => false,
    }
}

fn in_2s(f: &Formula) -> bool {
    if is_ts_chain(f) {
        return true;
    }
    match f {
        Formula::Tt | Formula::Ff => true,
        Formula::Dia(_, g) => in_2s(g),
        Formula::And(l, r) | Formula::Or(l, r) => in_2s(l) && in_2s(r),
        Formula::Neg(g) => in_s(g),
        Formula::Box(_, _) => false,
    }
}

fn in_3s(f: &Formula) -> bool {
    if is_ts_chain(f) {
        return true;
    }
    match f {
        Formula::Tt | Formula::Ff => true,
        Formula::Dia(_, g) => in_3s(g),
        Formula::And(l, r) | Formula::Or(l, r) => in_3s(l) && in_3s(r),
        Formula::Neg(g) => in_2s(g),
        Formula::Box(_, _) => false,
    }
}

/// Returns every fragment whose grammar generates `f` (purely syntactic).
/// Box formulae equivalent to `[a]ff` only via the dual laws are *not*
/// counted; the 2S/3S fragments admit negations over the lower fragment and
/// box chains (which keeps L_TS ⊆ L_2S membership agreement).
pub fn fragment_of(f: &Formula, alphabet: &Alphabet) -> BTreeSet<Fragment> {
    let mut out = BTreeSet::new();
    if in_s(f) {
        out.insert(Fragment::S);
    }
    if in_cs(f, alphabet) {
        out.insert(Fragment::CS);
    }
    if in_rs(f) {
        out.insert(Fragment::RS);
    }
    if in_ts(f) {
        out.insert(Fragment::TS);
    }
    if in_2s(f) {
        out.insert(Fragment::S2);
    }
    if in_3s(f) {
        out.insert(Fragment::S3);
    }
    out.insert(Fragment::BS);
    out
}

/// True iff `f` belongs to the grammar of `x`.
pub fn in_fragment(f: &Formula, x: Fragment, alphabet: &Alphabet) -> bool {
    match x {
        Fragment::S => in_s(f),
        Fragment::CS => in_cs(f, alphabet),
        Fragment::RS => in_rs(f),
        Fragment::TS => in_ts(f),
        Fragment::S2 => in_2s(f),
        Fragment::S3 => in_3s(f),
        Fragment::BS => true,
    }
}

/// Parses the formula grammar
/// `F ::= tt | ff | 0 | '<'ident'>' F | '['ident']' F | '!' F | F '&' F | F '|' F | '(' F ')'`
/// with precedence prefix > `&` > `|`, both left-associative.
/// The `0` keyword expands to the conjunction of `[a]ff` over the alphabet.
pub fn parse_formula(text: &str, alphabet: &Alphabet) -> Result<Formula> {
    let f = parse_formula_impl(text, Some(alphabet), &mut |name, pos| {
        Err(Error::Parse { pos, msg: format!("unexpected identifier `{name}`") })
    })?;
    for a in f.actions() {
        if !alphabet.contains(&a) {
            return Err(Error::UnknownAction(a.0));
        }
    }
    Ok(f)
}

/// Parses a formula without a declared alphabet. The `0` keyword is
/// rejected (its expansion depends on the alphabet) and action membership
/// is not checked; used by the CLI before alphabet resolution.
pub fn parse_formula_open(text: &str) -> Result<Formula> {
    parse_formula_impl(text, None, &mut |name, pos| {
        Err(Error::Parse { pos, msg: format!("unexpected identifier `{name}`") })
    })
}

/// Internal parser shared with the equation-system reader. `on_ident`
/// resolves bare identifiers (variable references in equation files).
pub(crate) fn parse_formula_impl(
    text: &str,
    alphabet: Option<&Alphabet>,
    on_ident: &mut dyn FnMut(&str, usize) -> Result<Formula>,
) -> Result<Formula> {
    let mut p = FormParser { text: text.as_bytes(), pos: 0, alphabet, on_ident };
    let f = p.parse_or()?;
    p.skip_ws();
    if p.pos != p.text.len() {
        return Err(Error::Parse { pos: p.pos, msg: "trailing input after formula".into() });
    }
    Ok(f)
}

struct FormParser<'a> {
    text: &'a [u8],
    pos: usize,
    alphabet: Option<&'a Alphabet>,
    on_ident: &'a mut dyn FnMut(&str, usize) -> Result<Formula>,
}

impl<'a> FormParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len()
            && (self.text[self.pos].is_ascii_alphanumeric() || self.text[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if self.pos == start || !self.text[start].is_ascii_alphabetic() {
            return Err(Error::Parse { pos: start, msg: "expected identifier".into() });
        }
        Ok(std::str::from_utf8(&self.text[start..self.pos]).unwrap().to_owned())
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse { pos: self.pos, msg: format!("expected `{}`", c as char) })
        }
    }

    fn parse_or(&mut self) -> Result<Formula> {
        let mut acc = self.parse_and()?;
        while self.peek() == Some(b'|') {
            self.pos += 1;
            let rhs = self.parse_and()?;
            acc = Formula::or(acc, rhs);
        }
        Ok(acc)
    }

    fn parse_and(&mut self) -> Result<Formula> {
        let mut acc = self.parse_prefix()?;
        while self.peek() == Some(b'&') {
            self.pos += 1;
            let rhs = self.parse_prefix()?;
            acc = Formula::and(acc, rhs);
        }
        Ok(acc)
    }

    fn parse_prefix(&mut self) -> Result<Formula> {
        match self.peek() {
            Some(b'0') => {
                self.pos += 1;
                match self.alphabet {
                    Some(a) => Ok(Formula::zero(a)),
                    None => Err(Error::ZeroNeedsAlphabet),
                }
            }
            Some(b'<') => {
                self.pos += 1;
                let a = self.ident()?;
                self.expect(b'>')?;
                let body = self.parse_prefix()?;
                Ok(Formula::dia(Action::new(a), body))
            }
            Some(b'[') => {
                self.pos += 1;
                let a = self.ident()?;
                self.expect(b']')?;
                let body = self.parse_prefix()?;
                Ok(Formula::boxm(Action::new(a), body))
            }
            Some(b'!') => {
                self.pos += 1;
                let body = self.parse_prefix()?;
                Ok(Formula::neg(body))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_or()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let name = self.ident()?;
                match name.as_str() {
                    "tt" => Ok(Formula::Tt),
                    "ff" => Ok(Formula::Ff),
                    _ => (self.on_ident)(&name, start),
                }
            }
            _ => Err(Error::Parse {
                pos: self.pos,
                msg: "expected tt, ff, 0, `<`, `[`, `!`, `(`".into(),
            }),
        }
    }
}

/// Identifier of an equation-system variable.
pub type VarId = usize;

/// Right-hand side of an equation: a formula term whose leaves may also be
/// variable references.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EqRhs {
    Tt,
    Ff,
    Dia(Action, Box<EqRhs>),
    Box(Action, Box<EqRhs>),
    And(Box<EqRhs>, Box<EqRhs>),
    Or(Box<EqRhs>, Box<EqRhs>),
    Neg(Box<EqRhs>),
    Var(VarId),
}

impl EqRhs {
    pub fn dia(a: Action, f: EqRhs) -> Self {
        EqRhs::Dia(a, Box::new(f))
    }

    pub fn boxm(a: Action, f: EqRhs) -> Self {
        EqRhs::Box(a, Box::new(f))
    }

    pub fn and(l: EqRhs, r: EqRhs) -> Self {
        EqRhs::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: EqRhs, r: EqRhs) -> Self {
        EqRhs::Or(Box::new(l), Box::new(r))
    }

    /// Left-associated conjunction; empty yields `tt`.
    pub fn conj(parts: impl IntoIterator<Item = EqRhs>) -> EqRhs {
        parts.into_iter().reduce(EqRhs::and).unwrap_or(EqRhs::Tt)
    }

    /// Left-associated disjunction; empty yields `ff`.
    pub fn disj(parts: impl IntoIterator<Item = EqRhs>) -> EqRhs {
        parts.into_iter().reduce(EqRhs::or).unwrap_or(EqRhs::Ff)
    }

    /// Symbol count: each connective, constant, or variable reference is 1.
    pub fn symbols(&self) -> usize {
        match self {
            EqRhs::Tt | EqRhs::Ff | EqRhs::Var(_) => 1,
            EqRhs::Dia(_, g) | EqRhs::Box(_, g) | EqRhs::Neg(g) => 1 + g.symbols(),
            EqRhs::And(l, r) | EqRhs::Or(l, r) => 1 + l.symbols() + r.symbols(),
        }
    }

    fn vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            EqRhs::Tt | EqRhs::Ff => {}
            EqRhs::Var(v) => {
                out.insert(*v);
            }
            EqRhs::Dia(_, g) | EqRhs::Box(_, g) | EqRhs::Neg(g) => g.vars(out),
            EqRhs::And(l, r) | EqRhs::Or(l, r) => {
                l.vars(out);
                r.vars(out);
            }
        }
    }
}

/// A declarative (shared) representation of a formula: an acyclic system of
/// equations with a distinguished root variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquationSystem {
    /// Equations in emission order; index = VarId.
    pub equations: Vec<(String, EqRhs)>,
    pub root: VarId,
}

impl EquationSystem {
    /// Number of equations (decl).
    pub fn decl(&self) -> usize {
        self.equations.len()
    }

    /// Longest right-hand side in symbols (eqlen). Equation left-hand sides
    /// count 0.
    pub fn eqlen(&self) -> usize {
        self.equations.iter().map(|(_, rhs)| rhs.symbols()).max().unwrap_or(0)
    }

    /// Checks variable references and acyclicity; returns a topological
    /// order (dependencies before dependents).
    pub fn check(&self) -> Result<Vec<VarId>> {
        let n = self.equations.len();
        if self.root >= n {
            return Err(Error::EquationSystem("root variable is undefined".into()));
        }
        for (_, rhs) in &self.equations {
            let mut used = BTreeSet::new();
            rhs.vars(&mut used);
            if let Some(v) = used.iter().find(|v| **v >= n) {
                return Err(Error::EquationSystem(format!("undefined variable id {v}")));
            }
        }
        // DFS-based topological sort with cycle detection.
        let mut color = vec![0u8; n];
        let mut order = Vec::new();
        fn visit(
            v: VarId,
            eqs: &[(String, EqRhs)],
            color: &mut [u8],
            order: &mut Vec<VarId>,
        ) -> Result<()> {
            match color[v] {
                1 => {
                    return Err(Error::EquationSystem(format!(
                        "cyclic dependency through {}",
                        eqs[v].0
                    )))
                }
                2 => return Ok(()),
                _ => {}
            }
            color[v] = 1;
            let mut used = BTreeSet::new();
            eqs[v].1.vars(&mut used);
            for w in used {
                visit(w, eqs, color, order)?;
            }
            color[v] = 2;
            order.push(v);
            Ok(())
        }
        for v in 0..n {
            visit(v, &self.equations, &mut color, &mut order)?;
        }
        Ok(order)
    }

    /// Emits the equation file format (`alphabet ...`, `root X0`, `Xi = F`).
    pub fn emit(&self, alphabet: &Alphabet) -> String {
        let names: Vec<&str> = alphabet.iter().map(|a| a.name()).collect();
        let mut out = format!("alphabet {}\n", names.join(" "));
        out.push_str(&format!("root {}\n", self.equations[self.root].0));
        for (name, rhs) in &self.equations {
            out.push_str(&format!("{name} = {}\n", self.show_rhs(rhs)));
        }
        out
    }

    fn show_rhs(&self, rhs: &EqRhs) -> String {
        fn go(es: &EquationSystem, rhs: &EqRhs, prec: u8, out: &mut String) {
            match rhs {
                EqRhs::Tt => out.push_str("tt"),
                EqRhs::Ff => out.push_str("ff"),
                EqRhs::Var(v) => out.push_str(&es.equations[*v].0),
                EqRhs::Dia(a, g) => {
                    out.push_str(&format!("<{a}>"));
                    go(es, g, 2, out);
                }
                EqRhs::Box(a, g) => {
                    out.push_str(&format!("[{a}]"));
                    go(es, g, 2, out);
                }
                EqRhs::Neg(g) => {
                    out.push('!');
                    go(es, g, 2, out);
                }
                EqRhs::And(l, r) => {
                    if prec > 1 {
                        out.push('(');
                    }
                    go(es, l, 1, out);
                    out.push_str(" & ");
                    go(es, r, 1, out);
                    if prec > 1 {
                        out.push(')');
                    }
                }
                EqRhs::Or(l, r) => {
                    if prec > 0 {
                        out.push('(');
                    }
                    go(es, l, 0, out);
                    out.push_str(" | ");
                    go(es, r, 0, out);
                    if prec > 0 {
                        out.push(')');
                    }
                }
            }
        }
        let mut out = String::new();
        go(self, rhs, 0, &mut out);
        out
    }
}

/// Builds the declarative form of a formula by value numbering: one
/// equation for the root and one for every non-atomic subformula that is
/// referenced at least twice in the hash-consed DAG.
pub fn es_build(f: &Formula) -> EquationSystem {
    // Reference counts over distinct subformulae.
    let mut refs: HashMap<&Formula, usize> = HashMap::new();
    let mut seen: BTreeSet<&Formula> = BTreeSet::new();
    let mut stack = vec![f];
    while let Some(g) = stack.pop() {
        if !seen.insert(g) {
            continue;
        }
        let children: Vec<&Formula> = match g {
            Formula::Tt | Formula::Ff => vec![],
            Formula::Dia(_, c) | Formula::Box(_, c) | Formula::Neg(c) => vec![c],
            Formula::And(l, r) | Formula::Or(l, r) => vec![l, r],
        };
        for c in children {
            *refs.entry(c).or_insert(0) += 1;
            stack.push(c);
        }
    }
    let shared: BTreeSet<&Formula> = refs
        .iter()
        .filter(|(g, n)| **n >= 2 && g.explicit_size() > 1)
        .map(|(g, _)| *g)
        .collect();

    // Assign variable ids in discovery order from the root; emit equations.
    let mut ids: HashMap<&Formula, VarId> = HashMap::new();
    let mut pending: Vec<&Formula> = Vec::new();
    let mut equations: Vec<(String, EqRhs)> = Vec::new();
    ids.insert(f, 0);
    equations.push((String::from("X0"), EqRhs::Tt)); // placeholder
    pending.push(f);
    let mut next_emit = 0usize;
    while next_emit < pending.len() {
        let g = pending[next_emit];
        let rhs = build_rhs(g, &shared, &mut ids, &mut pending, &mut equations, true);
        let id = ids[g];
        equations[id].1 = rhs;
        next_emit += 1;
    }
    EquationSystem { equations, root: 0 }
}

fn build_rhs<'a>(
    g: &'a Formula,
    shared: &BTreeSet<&'a Formula>,
    ids: &mut HashMap<&'a Formula, VarId>,
    pending: &mut Vec<&'a Formula>,
    equations: &mut Vec<(String, EqRhs)>,
    top: bool,
) -> EqRhs {
    if !top && shared.contains(g) {
        let id = *ids.entry(g).or_insert_with(|| {
            let id = equations.len();
            equations.push((format!("X{id}"), EqRhs::Tt));
            pending.push(g);
            id
        });
        return EqRhs::Var(id);
    }
    match g {
        Formula::Tt => EqRhs::Tt,
        Formula::Ff => EqRhs::Ff,
        Formula::Dia(a, c) => {
            EqRhs::dia(a.clone(), build_rhs(c, shared, ids, pending, equations, false))
        }
        Formula::Box(a, c) => {
            EqRhs::boxm(a.clone(), build_rhs(c, shared, ids, pending, equations, false))
        }
        Formula::Neg(c) => {
            EqRhs::Neg(Box::new(build_rhs(c, shared, ids, pending, equations, false)))
        }
        Formula::And(l, r) => EqRhs::and(
            build_rhs(l, shared, ids, pending, equations, false),
            build_rhs(r, shared, ids, pending, equations, false),
        ),
        Formula::Or(l, r) => EqRhs::or(
            build_rhs(l, shared, ids, pending, equations, false),
            build_rhs(r, shared, ids, pending, equations, false),
        ),
    }
}

/// Expands a declarative form to the closed explicit formula.
pub fn es_expand(es: &EquationSystem) -> Result<Formula> {
    let order = es.check()?;
    let mut values: Vec<Option<Formula>> = vec![None; es.equations.len()];
    for v in order {
        let f = expand_rhs(&es.equations[v].1, &values);
        values[v] = Some(f);
    }
    Ok(values[es.root].take().unwrap())
}

fn expand_rhs(rhs: &EqRhs, values: &[Option<Formula>]) -> Formula {
    match rhs {
        EqRhs::Tt => Formula::Tt,
        EqRhs::Ff => Formula::Ff,
        EqRhs::Var(v) => values[*v].clone().unwrap(),
        EqRhs::Dia(a, g) => Formula::dia(a.clone(), expand_rhs(g, values)),
        EqRhs::Box(a, g) => Formula::boxm(a.clone(), expand_rhs(g, values)),
        EqRhs::Neg(g) => Formula::neg(expand_rhs(g, values)),
        EqRhs::And(l, r) => Formula::and(expand_rhs(l, values), expand_rhs(r, values)),
        EqRhs::Or(l, r) => Formula::or(expand_rhs(l, values), expand_rhs(r, values)),
    }
}

/// Size metrics of a formula and its declarative form.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Metrics {
    pub explicit_size: usize,
    pub decl_size: usize,
    pub eq_length: usize,
    pub modal_depth: usize,
}

/// Computes |φ|, decl, eqlen, and md for a formula.
pub fn metrics(f: &Formula) -> Metrics {
    let es = es_build(f);
    Metrics {
        explicit_size: f.explicit_size(),
        decl_size: es.decl(),
        eq_length: es.eqlen(),
        modal_depth: f.modal_depth(),
    }
}

/// Metrics of an equation system as given (without rebuilding the sharing).
pub fn metrics_es(es: &EquationSystem) -> Result<Metrics> {
    let expanded = es_expand(es)?;
    Ok(Metrics {
        explicit_size: expanded.explicit_size(),
        decl_size: es.decl(),
        eq_length: es.eqlen(),
        modal_depth: expanded.modal_depth(),
    })
}

/// Number of DNF disjuncts produced by the distribution algorithm.
pub fn dnf_count(f: &Formula) -> Result<u128> {
    let err = || Error::Budget("DNF disjunct count overflows u128".to_string());
    Ok(match f {
        Formula::Tt | Formula::Ff | Formula::Neg(_) => 1,
        Formula::Dia(_, g) | Formula::Box(_, g) => dnf_count(g)?,
        Formula::And(l, r) => dnf_count(l)?.checked_mul(dnf_count(r)?).ok_or_else(err)?,
        Formula::Or(l, r) => dnf_count(l)?.checked_add(dnf_count(r)?).ok_or_else(err)?,
    })
}

/// The i-th DNF disjunct (0-based), produced in the same order as
/// [`to_dnf`], in time polynomial in |f|.
pub fn dnf_nth(f: &Formula, i: u128) -> Result<Formula> {
    Ok(match f {
        Formula::Tt | Formula::Ff | Formula::Neg(_) => f.clone(),
        Formula::Dia(a, g) => Formula::dia(a.clone(), dnf_nth(g, i)?),
        Formula::Box(a, g) => Formula::boxm(a.clone(), dnf_nth(g, i)?),
        Formula::And(l, r) => {
            let cr = dnf_count(r)?;
            Formula::and(dnf_nth(l, i / cr)?, dnf_nth(r, i % cr)?)
        }
        Formula::Or(l, r) => {
            let cl = dnf_count(l)?;
            if i < cl {
                dnf_nth(l, i)?
            } else {
                dnf_nth(r, i - cl)?
            }
        }
    })
}

/// Streams the DNF disjuncts lazily without materializing the whole DNF.
pub fn dnf_disjuncts(f: &Formula) -> Result<impl Iterator<Item = Formula> + '_> {
    let count = dnf_count(f)?;
    Ok((0..count).map(move |i| dnf_nth(f, i).expect("index below count")))
}

/// Full DNF by distributing ∨ out of ∧, ⟨a⟩, and [a]. The result is
/// logically equivalent to the input for formulae in L_S, L_CS, L_RS, and
/// L_TS (boxes there never scope over disjunctions); it is a syntactic
/// normal form only, beyond those fragments. Negations are treated as
/// atoms.
pub fn to_dnf(f: &Formula) -> Formula {
    let parts: Vec<Formula> = match dnf_disjuncts(f) {
        Ok(it) => it.collect(),
        Err(_) => return f.clone(), // astronomically many disjuncts; unreachable at desk scale
    };
    Formula::disj(parts)
}

/// Parses an equation file: `alphabet a b`, `root X0`, then `Xi = F` lines.
/// Returns the system together with the declared alphabet.
pub fn parse_equation_system(text: &str) -> Result<(EquationSystem, Alphabet)> {
    let mut alphabet: Option<Alphabet> = None;
    let mut root_name: Option<String> = None;
    let mut raw: Vec<(String, String)> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("alphabet ") {
            alphabet = Some(Alphabet::parse(rest)?);
        } else if let Some(rest) = line.strip_prefix("root ") {
            root_name = Some(rest.trim().to_owned());
        } else if let Some((name, rhs)) = line.split_once('=') {
            let name = name.trim().to_owned();
            if name.is_empty() || name == "tt" || name == "ff" {
                return Err(Error::EquationSystem(format!("bad variable name `{name}`")));
            }
            raw.push((name, rhs.trim().to_owned()));
        } else {
            return Err(Error::EquationSystem(format!("unrecognized line `{line}`")));
        }
    }
    let alphabet = alphabet
        .ok_or_else(|| Error::EquationSystem("missing `alphabet` line".into()))?;
    let root_name =
        root_name.ok_or_else(|| Error::EquationSystem("missing `root` line".into()))?;
    let mut index: HashMap<String, VarId> = HashMap::new();
    for (i, (name, _)) in raw.iter().enumerate() {
        if index.insert(name.clone(), i).is_some() {
            return Err(Error::EquationSystem(format!("variable `{name}` defined twice")));
        }
    }
    let root = *index
        .get(&root_name)
        .ok_or_else(|| Error::EquationSystem(format!("root `{root_name}` is undefined")))?;
    let mut equations = Vec::new();
    for (name, rhs_text) in &raw {
        let f = parse_formula_impl(rhs_text, Some(&alphabet), &mut |ident, pos| {
            if index.contains_key(ident) {
                // Encode the variable reference as a marker resolved below.
                Ok(Formula::dia(Action::new(format!("__var_{ident}")), Formula::Tt))
            } else {
                Err(Error::Parse { pos, msg: format!("unknown variable `{ident}`") })
            }
        })?;
        let rhs = formula_to_rhs(&f, &index)?;
        equations.push((name.clone(), rhs));
    }
    let es = EquationSystem { equations, root };
    es.check()?;
    for (_, rhs) in &es.equations {
        check_rhs_actions(rhs, &alphabet)?;
    }
    Ok((es, alphabet))
}

fn formula_to_rhs(f: &Formula, index: &HashMap<String, VarId>) -> Result<EqRhs> {
    Ok(match f {
        Formula::Tt => EqRhs::Tt,
        Formula::Ff => EqRhs::Ff,
        Formula::Dia(a, g) => {
            if let Some(name) = a.name().strip_prefix("__var_") {
                EqRhs::Var(index[name])
            } else {
                EqRhs::dia(a.clone(), formula_to_rhs(g, index)?)
            }
        }
        Formula::Box(a, g) => EqRhs::boxm(a.clone(), formula_to_rhs(g, index)?),
        Formula::Neg(g) => EqRhs::Neg(Box::new(formula_to_rhs(g, index)?)),
        Formula::And(l, r) => EqRhs::and(formula_to_rhs(l, index)?, formula_to_rhs(r, index)?),
        Formula::Or(l, r) => EqRhs::or(formula_to_rhs(l, index)?, formula_to_rhs(r, index)?),
    })
}

fn check_rhs_actions(rhs: &EqRhs, alphabet: &Alphabet) -> Result<()> {
    match rhs {
        EqRhs::Tt | EqRhs::Ff | EqRhs::Var(_) => Ok(()),
        EqRhs::Dia(a, g) | EqRhs::Box(a, g) => {
            if !alphabet.contains(a) {
                return Err(Error::UnknownAction(a.name().to_owned()));
            }
            check_rhs_actions(g, alphabet)
        }
        EqRhs::Neg(g) => check_rhs_actions(g, alphabet),
        EqRhs::And(l, r) | EqRhs::Or(l, r) => {
            check_rhs_actions(l, alphabet)?;
            check_rhs_actions(r, alphabet)
        }
    }
}
