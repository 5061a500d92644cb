//! Fragment-specific satisfiability/validity deciders and the
//! unsatisfiable-subformula pruning rewrites.

use std::collections::BTreeSet;

use crate::formula::{
    dnf_disjuncts, dual, fragment_of, in_fragment, is_zero_form, positive, Formula, Fragment,
};
use crate::lts::{Action, Alphabet};
use crate::{Error, Result};

/// Maximum alphabet size for the initial-sets computation (subsets are
/// represented as bitmasks over the canonical action order).
pub const MAX_ALPHABET_FOR_INITIAL_SETS: usize = 16;

/// The family I(φ) of possible initial-action sets of models of φ, for
/// φ ∈ L_RS. Subsets of the alphabet are bitmasks in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitialSets {
    pub masks: BTreeSet<u32>,
    pub alphabet_size: usize,
}

impl InitialSets {
    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// The unique member, if I(φ) is a singleton (i.e. φ is saturated).
    pub fn singleton(&self) -> Option<u32> {
        if self.masks.len() == 1 {
            self.masks.iter().next().copied()
        } else {
            None
        }
    }

    /// Renders a mask back into a set of actions.
    pub fn mask_actions(alphabet: &Alphabet, mask: u32) -> BTreeSet<Action> {
        alphabet
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, a)| a.clone())
            .collect()
    }
}

fn require_fragment(f: &Formula, x: Fragment, alphabet: &Alphabet) -> Result<()> {
    if in_fragment(f, x, alphabet) {
        Ok(())
    } else {
        Err(Error::Fragment { fragment: x.to_string(), msg: f.to_string() })
    }
}

/// Computes I(φ) for φ ∈ L_RS by structural recursion:
/// I(tt) = 2^A, I(ff) = ∅, I([a]ff) = {X : a ∉ X},
/// I(⟨a⟩φ) = ∅ if I(φ) = ∅ else {X : a ∈ X}, I(∧) = ∩, I(∨) = ∪.
pub fn initial_sets(f: &Formula, alphabet: &Alphabet) -> Result<InitialSets> {
    require_fragment(f, Fragment::RS, alphabet)?;
    let n = alphabet.len();
    if n > MAX_ALPHABET_FOR_INITIAL_SETS {
        return Err(Error::Budget(format!(
            "initial-sets computation supports at most {MAX_ALPHABET_FOR_INITIAL_SETS} actions, got {n}"
        )));
    }
    Ok(InitialSets { masks: isets(f, alphabet), alphabet_size: n })
}

fn all_masks(n: usize) -> BTreeSet<u32> {
    (0..(1u64 << n) as u32).collect()
}

fn isets(f: &Formula, alphabet: &Alphabet) -> BTreeSet<u32> {
    let n = alphabet.len();
    match f {
        Formula::Tt => all_masks(n),
        Formula::Ff => BTreeSet::new(),
        Formula::Box(a, g) => {
            debug_assert_eq!(**g, Formula::Ff);
            let i = alphabet.index_of(a).expect("action checked by fragment membership");
            all_masks(n).into_iter().filter(|m| m & (1 << i) == 0).collect()
        }
        Formula::Dia(a, g) => {
            if isets(g, alphabet).is_empty() {
                BTreeSet::new()
            } else {
                let i = alphabet.index_of(a).expect("action in alphabet");
                all_masks(n).into_iter().filter(|m| m & (1 << i) != 0).collect()
            }
        }
        Formula::And(l, r) => {
            let lv = isets(l, alphabet);
            let rv = isets(r, alphabet);
            lv.intersection(&rv).copied().collect()
        }
        Formula::Or(l, r) => {
            let lv = isets(l, alphabet);
            let rv = isets(r, alphabet);
            lv.union(&rv).copied().collect()
        }
        Formula::Neg(_) => unreachable!("L_RS has no negation"),
    }
}

/// The four-valued abstraction J(φ) ⊆ {∅, α} for φ ∈ L_CS: does φ have the
/// deadlocked model, and does it have a non-deadlocked model?
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SatClassJ {
    pub has_empty: bool,
    pub has_alpha: bool,
}

impl SatClassJ {
    pub fn is_empty(&self) -> bool {
        !self.has_empty && !self.has_alpha
    }
}

/// Computes J(φ) for φ ∈ L_CS: J(tt) = {∅,α}, J(0) = {∅}, J(ff) = ∅,
/// J(⟨a⟩φ) = ∅ if J(φ) = ∅ else {α}, J(∧) = ∩, J(∨) = ∪.
pub fn class_j(f: &Formula, alphabet: &Alphabet) -> Result<SatClassJ> {
    require_fragment(f, Fragment::CS, alphabet)?;
    Ok(jval(f, alphabet))
}

fn jval(f: &Formula, alphabet: &Alphabet) -> SatClassJ {
    if is_zero_form(f, alphabet) {
        return SatClassJ { has_empty: true, has_alpha: false };
    }
    match f {
        Formula::Tt => SatClassJ { has_empty: true, has_alpha: true },
        Formula::Ff => SatClassJ { has_empty: false, has_alpha: false },
        Formula::Dia(_, g) => {
            let c = jval(g, alphabet);
            SatClassJ { has_empty: false, has_alpha: !c.is_empty() }
        }
        Formula::And(l, r) => {
            let lv = jval(l, alphabet);
            let rv = jval(r, alphabet);
            SatClassJ {
                has_empty: lv.has_empty && rv.has_empty,
                has_alpha: lv.has_alpha && rv.has_alpha,
            }
        }
        Formula::Or(l, r) => {
            let lv = jval(l, alphabet);
            let rv = jval(r, alphabet);
            SatClassJ {
                has_empty: lv.has_empty || rv.has_empty,
                has_alpha: lv.has_alpha || rv.has_alpha,
            }
        }
        Formula::Box(_, _) | Formula::Neg(_) => {
            unreachable!("boxes occur only inside zero forms in L_CS")
        }
    }
}

/// The two-valued abstraction K(φ) for φ ∈ L_S: K(tt) = {α}, K(ff) = ∅,
/// K(⟨a⟩φ) = K(φ), K(∧) = ∩, K(∨) = ∪. Non-empty iff φ is satisfiable.
pub fn class_k(f: &Formula) -> Result<bool> {
    match f {
        Formula::Tt => Ok(true),
        Formula::Ff => Ok(false),
        Formula::Dia(_, g) => class_k(g),
        Formula::And(l, r) => Ok(class_k(l)? && class_k(r)?),
        Formula::Or(l, r) => Ok(class_k(l)? || class_k(r)?),
        Formula::Box(_, _) | Formula::Neg(_) => Err(Error::Fragment {
            fragment: Fragment::S.to_string(),
            msg: f.to_string(),
        }),
    }
}

/// The required/forbidden trace sets of a disjunction-free L_TS formula.
/// Clauses: traces(tt) = {ε}; traces(ff) = ∅, forbidden(ff) = {ε};
/// traces([a]φ') = {ε}, forbidden([a]φ') = a · forbidden(φ');
/// traces(⟨a⟩φ') = a · traces(φ') ∪ {ε}; conjunction unions both sides.
pub fn ts_required_forbidden(
    f: &Formula,
) -> Result<(BTreeSet<Vec<Action>>, BTreeSet<Vec<Action>>)> {
    let (tr, fb, _) = ts_tf(f)?;
    Ok((tr, fb))
}

/// Also reports whether every subformula had disjoint required/forbidden
/// sets (the satisfiability condition).
fn ts_tf(f: &Formula) -> Result<(BTreeSet<Vec<Action>>, BTreeSet<Vec<Action>>, bool)> {
    let (tr, fb, ok) = match f {
        Formula::Tt => ([vec![]].into_iter().collect(), BTreeSet::new(), true),
        Formula::Ff => (BTreeSet::new(), [vec![]].into_iter().collect(), true),
        Formula::Box(a, g) => {
            let (_, gfb, gok) = ts_tf(g)?;
            let fb: BTreeSet<Vec<Action>> = gfb
                .into_iter()
                .map(|mut t| {
                    t.insert(0, a.clone());
                    t
                })
                .collect();
            ([vec![]].into_iter().collect(), fb, gok)
        }
        Formula::Dia(a, g) => {
            let (gtr, _, gok) = ts_tf(g)?;
            let mut tr: BTreeSet<Vec<Action>> = gtr
                .into_iter()
                .map(|mut t| {
                    t.insert(0, a.clone());
                    t
                })
                .collect();
            tr.insert(vec![]);
            (tr, BTreeSet::new(), gok)
        }
        Formula::And(l, r) => {
            let (ltr, lfb, lok) = ts_tf(l)?;
            let (rtr, rfb, rok) = ts_tf(r)?;
            (
                ltr.union(&rtr).cloned().collect(),
                lfb.union(&rfb).cloned().collect(),
                lok && rok,
            )
        }
        Formula::Or(_, _) | Formula::Neg(_) => {
            return Err(Error::Precondition(
                "ts_required_forbidden expects a disjunction-free L_TS formula".into(),
            ))
        }
    };
    let disjoint = tr.intersection(&fb).next().is_none();
    Ok((tr, fb, ok && disjoint))
}

/// Applies the ff-rules ⟨a⟩ff → ff, ff∨ψ → ψ, ψ∨ff → ψ, ff∧ψ → ff,
/// ψ∧ff → ff bottom-up. Boxes are left untouched (residual ff under a box
/// is meaningful in L_RS and L_TS).
pub fn ff_simplify(f: &Formula) -> Formula {
    match f {
        Formula::Tt | Formula::Ff | Formula::Box(_, _) | Formula::Neg(_) => f.clone(),
        Formula::Dia(a, g) => {
            let g = ff_simplify(g);
            if g == Formula::Ff {
                Formula::Ff
            } else {
                Formula::dia(a.clone(), g)
            }
        }
        Formula::And(l, r) => {
            let l = ff_simplify(l);
            let r = ff_simplify(r);
            if l == Formula::Ff || r == Formula::Ff {
                Formula::Ff
            } else {
                Formula::and(l, r)
            }
        }
        Formula::Or(l, r) => {
            let l = ff_simplify(l);
            let r = ff_simplify(r);
            match (l, r) {
                (Formula::Ff, r) => r,
                (l, Formula::Ff) => l,
                (l, r) => Formula::or(l, r),
            }
        }
    }
}

/// Complete backtracking tableau decision for any L_BS formula over finite
/// loop-free models. Sound and complete: the logic has no propositional
/// atoms, so satisfiability coincides with satisfiability in finite trees.
pub fn sat_tableau(f: &Formula) -> bool {
    tab(vec![positive(f)])
}

fn tab(mut set: Vec<Formula>) -> bool {
    // Expand conjunctions eagerly, then branch on the first disjunction,
    // then create one successor obligation per diamond.
    let mut i = 0;
    while i < set.len() {
        match set[i].clone() {
            Formula::Ff => return false,
            Formula::Tt => {
                set.swap_remove(i);
            }
            Formula::And(l, r) => {
                set.swap_remove(i);
                set.push(*l);
                set.push(*r);
                i = 0;
            }
            _ => i += 1,
        }
    }
    if let Some(pos) = set.iter().position(|g| matches!(g, Formula::Or(_, _))) {
        let Formula::Or(l, r) = set[pos].clone() else { unreachable!() };
        let mut left = set.clone();
        left[pos] = *l;
        if tab(left) {
            return true;
        }
        set[pos] = *r;
        return tab(set);
    }
    // Only diamonds and boxes remain.
    for g in &set {
        if let Formula::Dia(a, body) = g {
            let mut next = vec![(**body).clone()];
            for h in &set {
                if let Formula::Box(b, hb) = h {
                    if b == a {
                        next.push((**hb).clone());
                    }
                }
            }
            if !tab(next) {
                return false;
            }
        }
    }
    true
}

/// Fragment-directed satisfiability: S via K, CS via J, RS via I(φ),
/// TS via lazy DNF disjuncts with required/forbidden trace checks,
/// 2S/3S/BS via the complete tableau.
pub fn sat(x: Fragment, f: &Formula, alphabet: &Alphabet) -> Result<bool> {
    require_fragment(f, x, alphabet)?;
    match x {
        Fragment::S => class_k(f),
        Fragment::CS => Ok(!class_j(f, alphabet)?.is_empty()),
        Fragment::RS => Ok(!initial_sets(f, alphabet)?.is_empty()),
        Fragment::TS => {
            for d in dnf_disjuncts(f)? {
                let d = ff_simplify(&d);
                if d == Formula::Ff {
                    continue;
                }
                let (_, _, ok) = ts_tf(&d)?;
                if ok {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Fragment::S2 | Fragment::S3 | Fragment::BS => Ok(sat_tableau(f)),
    }
}

/// Satisfiability via the cheapest decider admitted by fragment_of:
/// K < J < I < DNF < tableau.
pub fn sat_auto(f: &Formula, alphabet: &Alphabet) -> Result<bool> {
    let frags = fragment_of(f, alphabet);
    for x in [Fragment::S, Fragment::CS, Fragment::RS, Fragment::TS] {
        if frags.contains(&x) {
            // I(φ) needs a bounded alphabet; fall through when too large.
            if x == Fragment::RS && alphabet.len() > MAX_ALPHABET_FOR_INITIAL_SETS {
                continue;
            }
            return sat(x, f, alphabet);
        }
    }
    Ok(sat_tableau(f))
}

/// Validity via duality: φ is valid iff ¬φ is unsatisfiable.
pub fn valid(f: &Formula, alphabet: &Alphabet) -> Result<bool> {
    Ok(!sat_auto(&dual(f), alphabet)?)
}

/// Replaces unsatisfiable subformulae by ff and applies the ff-rules.
/// For S/CS the result contains no unsatisfiable subformula; for RS every
/// unsatisfiable residual is literally ff in the scope of a box. Errors if
/// the whole formula is unsatisfiable.
pub fn prune_unsat(x: Fragment, f: &Formula, alphabet: &Alphabet) -> Result<Formula> {
    match x {
        Fragment::S | Fragment::CS | Fragment::RS => {}
        other => {
            return Err(Error::Fragment {
                fragment: other.to_string(),
                msg: "prune_unsat supports S, CS, RS".into(),
            })
        }
    }
    require_fragment(f, x, alphabet)?;
    let pruned = prune(x, f, alphabet)?;
    if pruned == Formula::Ff {
        return Err(Error::Precondition(
            "prune_unsat called on an unsatisfiable formula".into(),
        ));
    }
    Ok(pruned)
}

fn prune(x: Fragment, f: &Formula, alphabet: &Alphabet) -> Result<Formula> {
    if x == Fragment::CS && is_zero_form(f, alphabet) {
        return Ok(f.clone());
    }
    Ok(match f {
        Formula::Tt | Formula::Ff => f.clone(),
        // In L_RS the only boxes are [a]ff, which are satisfiable; in L_CS
        // boxes occur only inside zero forms, handled above.
        Formula::Box(_, _) => f.clone(),
        Formula::Dia(a, g) => {
            let g = prune(x, g, alphabet)?;
            if g == Formula::Ff {
                Formula::Ff
            } else {
                Formula::dia(a.clone(), g)
            }
        }
        Formula::And(l, r) => {
            let l = prune(x, l, alphabet)?;
            let r = prune(x, r, alphabet)?;
            if l == Formula::Ff || r == Formula::Ff {
                Formula::Ff
            } else {
                let node = Formula::and(l, r);
                if sat(x, &node, alphabet)? {
                    node
                } else {
                    Formula::Ff
                }
            }
        }
        Formula::Or(l, r) => {
            let l = prune(x, l, alphabet)?;
            let r = prune(x, r, alphabet)?;
            match (l, r) {
                (Formula::Ff, r) => r,
                (l, Formula::Ff) => l,
                (l, r) => Formula::or(l, r),
            }
        }
        Formula::Neg(_) => {
            unreachable!("fragments S/CS/RS have no negation")
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn ab() -> Alphabet {
        Alphabet::parse("a,b").unwrap()
    }

    fn pf(t: &str) -> Formula {
        parse_formula(t, &ab()).unwrap()
    }

    #[test]
    fn initial_sets_examples() {
        let alpha = ab();
        // I(0) = {∅}.
        let zero = initial_sets(&pf("0"), &alpha).unwrap();
        assert_eq!(zero.masks, [0u32].into_iter().collect());
        // I(tt) = all four subsets.
        let tt = initial_sets(&pf("tt"), &alpha).unwrap();
        assert_eq!(tt.masks.len(), 4);
        // I(⟨a⟩0) = {{a},{a,b}}.
        let da = initial_sets(&pf("<a>0"), &alpha).unwrap();
        assert_eq!(da.masks, [0b01u32, 0b11].into_iter().collect());
        // Unsatisfiable iff empty.
        assert!(initial_sets(&pf("<a>tt & [a]ff"), &alpha).unwrap().is_empty());
        assert!(!initial_sets(&pf("[a]ff"), &alpha).unwrap().is_empty());
    }

    #[test]
    fn class_j_examples() {
        let alpha = ab();
        let j0 = class_j(&pf("0"), &alpha).unwrap();
        assert!(j0.has_empty && !j0.has_alpha);
        let jmix = class_j(&pf("0 | <a>tt"), &alpha).unwrap();
        assert!(jmix.has_empty && jmix.has_alpha);
        assert!(class_j(&pf("0 & <a>tt"), &alpha).unwrap().is_empty());
    }

    #[test]
    fn class_k_examples() {
        assert!(class_k(&pf("tt")).unwrap());
        assert!(!class_k(&pf("<a>ff")).unwrap());
        assert!(!class_k(&pf("<a>ff & tt")).unwrap());
        assert!(class_k(&pf("<a>tt & <b>tt")).unwrap());
    }

    #[test]
    fn sat_dispatch() {
        let alpha = ab();
        assert!(!sat(Fragment::S, &pf("<a>ff & tt"), &alpha).unwrap());
        assert!(!sat(Fragment::RS, &pf("<a>tt & [a]ff"), &alpha).unwrap());
        assert!(!sat(Fragment::CS, &pf("0 & <a>tt"), &alpha).unwrap());
        assert!(sat(Fragment::TS, &pf("<a>[b]ff | ff"), &alpha).unwrap());
        assert!(!sat(Fragment::TS, &pf("<a>[b]ff & [a]ff"), &alpha).unwrap());
        assert!(sat(Fragment::BS, &pf("[a]<b>tt"), &alpha).unwrap());
        assert!(!sat(Fragment::BS, &pf("<a>tt & [a]ff"), &alpha).unwrap());
    }

    #[test]
    fn ts_required_forbidden_examples() {
        let alpha = ab();
        let a = Action::new("a");
        let (tr, fb) = ts_required_forbidden(&pf("tt")).unwrap();
        assert_eq!(tr, [vec![]].into_iter().collect());
        assert!(fb.is_empty());
        let (tr, fb) = ts_required_forbidden(&pf("[a]ff")).unwrap();
        assert_eq!(tr, [vec![]].into_iter().collect());
        assert_eq!(fb, [vec![a.clone()]].into_iter().collect());
        // ⟨a⟩[b]ff ∧ [a]ff: required {ε, a} meets forbidden {a}.
        let f = pf("<a>[b]ff & [a]ff");
        let (tr, fb) = ts_required_forbidden(&f).unwrap();
        assert!(tr.contains(&vec![a.clone()]));
        assert!(fb.contains(&vec![a]));
        assert!(!sat(Fragment::TS, &f, &alpha).unwrap());
    }

    #[test]
    fn tableau_examples() {
        assert!(sat_tableau(&pf("tt")));
        assert!(!sat_tableau(&pf("<a>tt & [a]ff")));
        assert!(!sat_tableau(&pf("!(<a>tt | [a]ff)")));
        assert!(sat_tableau(&pf("[a](<b>tt | 0) & <a>tt")));
    }

    #[test]
    fn validity() {
        let alpha = ab();
        assert!(valid(&pf("tt"), &alpha).unwrap());
        assert!(valid(&pf("<a>tt | [a]ff"), &alpha).unwrap());
        assert!(!valid(&pf("<a>tt"), &alpha).unwrap());
    }

    #[test]
    fn pruning() {
        let alpha = ab();
        assert_eq!(
            prune_unsat(Fragment::S, &pf("<a>ff | <b>tt"), &alpha).unwrap(),
            pf("<b>tt")
        );
        assert_eq!(
            prune_unsat(Fragment::RS, &pf("[a]ff"), &alpha).unwrap(),
            pf("[a]ff")
        );
        // CS: tt ∧ (⟨a⟩ff ∨ 0) reduces to tt ∧ 0.
        assert_eq!(
            prune_unsat(Fragment::CS, &pf("tt & (<a>ff | 0)"), &alpha).unwrap(),
            pf("tt & 0")
        );
        assert!(prune_unsat(Fragment::S, &pf("<a>ff"), &alpha).is_err());
        // RS conjunction whose parts are satisfiable but whose whole is not.
        assert!(prune_unsat(Fragment::RS, &pf("<a>tt & [a]ff"), &alpha).is_err());
    }
}
