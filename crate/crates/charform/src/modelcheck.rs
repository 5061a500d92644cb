//! The satisfaction relation ⊨ for explicit formulae and equation systems.

use std::collections::HashMap;

use crate::formula::{EqRhs, EquationSystem, Formula};
use crate::lts::{term_to_lts, Action, ProcessTerm, StateId};
use crate::Result;

/// Flattened formula arena used for memoization keys.
enum FxNode {
    Tt,
    Ff,
    Dia(Action, usize),
    Box(Action, usize),
    And(usize, usize),
    Or(usize, usize),
    Neg(usize),
}

fn flatten(f: &Formula, nodes: &mut Vec<FxNode>) -> usize {
    let node = match f {
        Formula::Tt => FxNode::Tt,
        Formula::Ff => FxNode::Ff,
        Formula::Dia(a, g) => {
            let c = flatten(g, nodes);
            FxNode::Dia(a.clone(), c)
        }
        Formula::Box(a, g) => {
            let c = flatten(g, nodes);
            FxNode::Box(a.clone(), c)
        }
        Formula::And(l, r) => {
            let lc = flatten(l, nodes);
            let rc = flatten(r, nodes);
            FxNode::And(lc, rc)
        }
        Formula::Or(l, r) => {
            let lc = flatten(l, nodes);
            let rc = flatten(r, nodes);
            FxNode::Or(lc, rc)
        }
        Formula::Neg(g) => {
            let c = flatten(g, nodes);
            FxNode::Neg(c)
        }
    };
    nodes.push(node);
    nodes.len() - 1
}

/// Does the process satisfy the formula? Memoized over (state, subformula)
/// pairs, so the cost is O(|p| · |φ|).
pub fn satisfies(p: &ProcessTerm, f: &Formula) -> bool {
    let lts = term_to_lts(p);
    let succ = lts.successors();
    let mut nodes = Vec::new();
    let root = flatten(f, &mut nodes);
    let mut memo: HashMap<(StateId, usize), bool> = HashMap::new();
    eval(lts.root, root, &succ, &nodes, &mut memo)
}

fn eval(
    s: StateId,
    n: usize,
    succ: &[Vec<(Action, StateId)>],
    nodes: &[FxNode],
    memo: &mut HashMap<(StateId, usize), bool>,
) -> bool {
    if let Some(&v) = memo.get(&(s, n)) {
        return v;
    }
    let v = match &nodes[n] {
        FxNode::Tt => true,
        FxNode::Ff => false,
        FxNode::Dia(a, c) => succ[s]
            .iter()
            .any(|(b, t)| b == a && eval(*t, *c, succ, nodes, memo)),
        FxNode::Box(a, c) => succ[s]
            .iter()
            .all(|(b, t)| b != a || eval(*t, *c, succ, nodes, memo)),
        FxNode::And(l, r) => {
            eval(s, *l, succ, nodes, memo) && eval(s, *r, succ, nodes, memo)
        }
        FxNode::Or(l, r) => {
            eval(s, *l, succ, nodes, memo) || eval(s, *r, succ, nodes, memo)
        }
        FxNode::Neg(c) => !eval(s, *c, succ, nodes, memo),
    };
    memo.insert((s, n), v);
    v
}

/// Satisfaction against the declarative form without expanding it:
/// equals `satisfies(p, es_expand(es))` at cost O(|p| · decl(φ) · eqlen).
pub fn satisfies_decl(p: &ProcessTerm, es: &EquationSystem) -> Result<bool> {
    es.check()?;
    let lts = term_to_lts(p);
    let succ = lts.successors();
    let mut memo: HashMap<(StateId, usize), bool> = HashMap::new();
    Ok(eval_var(lts.root, es.root, es, &succ, &mut memo))
}

fn eval_var(
    s: StateId,
    v: usize,
    es: &EquationSystem,
    succ: &[Vec<(Action, StateId)>],
    memo: &mut HashMap<(StateId, usize), bool>,
) -> bool {
    if let Some(&val) = memo.get(&(s, v)) {
        return val;
    }
    let val = eval_rhs(s, &es.equations[v].1, es, succ, memo);
    memo.insert((s, v), val);
    val
}

fn eval_rhs(
    s: StateId,
    rhs: &EqRhs,
    es: &EquationSystem,
    succ: &[Vec<(Action, StateId)>],
    memo: &mut HashMap<(StateId, usize), bool>,
) -> bool {
    match rhs {
        EqRhs::Tt => true,
        EqRhs::Ff => false,
        EqRhs::Var(v) => eval_var(s, *v, es, succ, memo),
        EqRhs::Dia(a, g) => succ[s]
            .iter()
            .any(|(b, t)| b == a && eval_rhs(*t, g, es, succ, memo)),
        EqRhs::Box(a, g) => succ[s]
            .iter()
            .all(|(b, t)| b != a || eval_rhs(*t, g, es, succ, memo)),
        EqRhs::And(l, r) => {
            eval_rhs(s, l, es, succ, memo) && eval_rhs(s, r, es, succ, memo)
        }
        EqRhs::Or(l, r) => {
            eval_rhs(s, l, es, succ, memo) || eval_rhs(s, r, es, succ, memo)
        }
        EqRhs::Neg(g) => !eval_rhs(s, g, es, succ, memo),
    }
}
