//! Alternating graphs and linear-time alternating reachability, reused by
//! every primality decider.

use std::collections::HashMap;

use crate::{Error, Result};

/// Quantifier label of a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quant {
    Exists,
    Forall,
}

/// Identifier of a vertex inside an [`AltGraph`].
pub type VertexId = usize;

/// An alternating graph with a source and a target. The target is reachable
/// from an existential vertex through some successor and from a universal
/// vertex through all successors (of which there must be at least one).
#[derive(Debug, Clone)]
pub struct AltGraph {
    labels: Vec<Quant>,
    edges: Vec<Vec<VertexId>>,
    /// Optional display names used for debug dumps.
    names: Vec<String>,
    pub source: VertexId,
    pub target: VertexId,
}

impl AltGraph {
    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, v: VertexId) -> Quant {
        self.labels[v]
    }

    pub fn successors(&self, v: VertexId) -> &[VertexId] {
        &self.edges[v]
    }

    /// Linear-time alternating reachability: is there an alternating path
    /// from the source to the target? Computed backwards from the target
    /// with per-universal-vertex successor counters.
    pub fn reach_a(&self) -> bool {
        self.solve().0[self.source]
    }

    fn solve(&self) -> (Vec<bool>, Vec<Option<VertexId>>) {
        let n = self.labels.len();
        let mut preds: Vec<Vec<VertexId>> = vec![Vec::new(); n];
        for (v, outs) in self.edges.iter().enumerate() {
            for &w in outs {
                preds[w].push(v);
            }
        }
        let mut winning = vec![false; n];
        let mut chosen: Vec<Option<VertexId>> = vec![None; n];
        let mut remaining: Vec<usize> = self.edges.iter().map(Vec::len).collect();
        let mut queue = vec![self.target];
        winning[self.target] = true;
        while let Some(w) = queue.pop() {
            for &v in &preds[w] {
                if winning[v] {
                    continue;
                }
                match self.labels[v] {
                    Quant::Exists => {
                        winning[v] = true;
                        chosen[v] = Some(w);
                        queue.push(v);
                    }
                    Quant::Forall => {
                        remaining[v] -= 1;
                        if remaining[v] == 0 {
                            winning[v] = true;
                            queue.push(v);
                        }
                    }
                }
            }
        }
        (winning, chosen)
    }

    /// For each winning vertex, the successors that realize the alternating
    /// path: one witnessing successor for an existential vertex, all
    /// successors for a universal one. The target maps to no successors.
    pub fn winning_subgraph(&self) -> Result<HashMap<VertexId, Vec<VertexId>>> {
        let (winning, chosen) = self.solve();
        if !winning[self.source] {
            return Err(Error::Precondition(
                "winning_subgraph called on a graph without an alternating path".into(),
            ));
        }
        let mut out = HashMap::new();
        for v in 0..self.labels.len() {
            if !winning[v] || v == self.target {
                continue;
            }
            let succ = match self.labels[v] {
                Quant::Exists => vec![chosen[v].expect("winning existential has a witness")],
                Quant::Forall => self.edges[v].clone(),
            };
            out.insert(v, succ);
        }
        Ok(out)
    }

    /// DOT-format dump with ∃ vertices as diamonds and ∀ vertices as boxes.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph altgraph {\n");
        for (v, label) in self.labels.iter().enumerate() {
            let shape = match label {
                Quant::Exists => "diamond",
                Quant::Forall => "box",
            };
            let name = if self.names[v].is_empty() {
                format!("v{v}")
            } else {
                self.names[v].replace('"', "'")
            };
            let extra = if v == self.source {
                ", style=bold"
            } else if v == self.target {
                ", peripheries=2"
            } else {
                ""
            };
            out.push_str(&format!("  n{v} [shape={shape}, label=\"{name}\"{extra}];\n"));
        }
        for (v, outs) in self.edges.iter().enumerate() {
            for w in outs {
                out.push_str(&format!("  n{v} -> n{w};\n"));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Incremental builder that deduplicates vertices by a caller-supplied key.
pub struct AltGraphBuilder<K> {
    labels: Vec<Quant>,
    edges: Vec<Vec<VertexId>>,
    names: Vec<String>,
    index: HashMap<K, VertexId>,
}

impl<K: std::hash::Hash + Eq + Clone> AltGraphBuilder<K> {
    pub fn new() -> Self {
        AltGraphBuilder {
            labels: Vec::new(),
            edges: Vec::new(),
            names: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Returns the vertex for the key, creating it (with the given label and
    /// name) if needed. The second component tells whether it was created.
    pub fn intern(&mut self, key: K, label: Quant, name: impl Into<String>) -> (VertexId, bool) {
        if let Some(&v) = self.index.get(&key) {
            return (v, false);
        }
        let v = self.labels.len();
        self.labels.push(label);
        self.edges.push(Vec::new());
        self.names.push(name.into());
        self.index.insert(key, v);
        (v, true)
    }

    /// Overrides the label of an existing vertex.
    pub fn set_label(&mut self, v: VertexId, label: Quant) {
        self.labels[v] = label;
    }

    pub fn add_edge(&mut self, from: VertexId, to: VertexId) {
        if !self.edges[from].contains(&to) {
            self.edges[from].push(to);
        }
    }

    pub fn finish(self, source: VertexId, target: VertexId) -> AltGraph {
        AltGraph {
            labels: self.labels,
            edges: self.edges,
            names: self.names,
            source,
            target,
        }
    }
}

impl<K: std::hash::Hash + Eq + Clone> Default for AltGraphBuilder<K> {
    fn default() -> Self {
        Self::new()
    }
}

/// Naive forward least-fixpoint computation of alternating reachability;
/// quadratic, used as a test oracle for [`AltGraph::reach_a`].
pub fn reach_a_naive(g: &AltGraph) -> bool {
    let n = g.num_vertices();
    let mut winning = vec![false; n];
    winning[g.target] = true;
    loop {
        let mut changed = false;
        for v in 0..n {
            if winning[v] {
                continue;
            }
            let outs = g.successors(v);
            let now = match g.label(v) {
                Quant::Exists => outs.iter().any(|&w| winning[w]),
                Quant::Forall => !outs.is_empty() && outs.iter().all(|&w| winning[w]),
            };
            if now {
                winning[v] = true;
                changed = true;
            }
        }
        if !changed {
            return winning[g.source];
        }
    }
}
