//! The relation graph of a scene request.
//!
//! An edge `from → to` declares that human `from` is expressed relative
//! to human `to` (the reference). The edge set must be a DAG with at most
//! one edge per unordered pair; humans without an edge between them are
//! *non-adjacent* and fall under the implicit no-collision constraint.

use serde::{Deserialize, Serialize};

use crate::error::{GraphError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HhiEdge {
    /// Subject human (expressed relative to the reference).
    pub from: usize,
    /// Reference human.
    pub to: usize,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HhiGraph {
    pub n_humans: usize,
    /// Per-human condition prompt, length `n_humans`.
    pub hoi_prompts: Vec<String>,
    pub edges: Vec<HhiEdge>,
}

impl HhiGraph {
    pub fn new(n_humans: usize, hoi_prompts: Vec<String>, edges: Vec<HhiEdge>) -> Self {
        HhiGraph {
            n_humans,
            hoi_prompts,
            edges,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_hhi_graph(self)
    }

    /// Whether any edge (either direction) connects `a` and `b`.
    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.edges
            .iter()
            .any(|e| (e.from == a && e.to == b) || (e.from == b && e.to == a))
    }

    /// Unordered human pairs with no relation; collision applies to these.
    pub fn non_adjacent_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n_humans {
            for b in a + 1..self.n_humans {
                if !self.is_adjacent(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// Check the graph invariants; errors name the offending cycle, pair,
/// edge or index.
pub fn validate_hhi_graph(g: &HhiGraph) -> Result<()> {
    if g.hoi_prompts.len() != g.n_humans {
        return Err(crate::error::Error::validation(format!(
            "{} prompts for {} humans",
            g.hoi_prompts.len(),
            g.n_humans
        )));
    }
    let max = g.n_humans * g.n_humans.saturating_sub(1) / 2;
    if g.edges.len() > max {
        return Err(GraphError::TooManyEdges {
            m: g.edges.len(),
            max,
            n: g.n_humans,
        }
        .into());
    }
    let mut seen_pairs = std::collections::HashSet::new();
    for e in &g.edges {
        for idx in [e.from, e.to] {
            if idx >= g.n_humans {
                return Err(GraphError::IndexOutOfRange {
                    index: idx,
                    n: g.n_humans,
                }
                .into());
            }
        }
        if e.from == e.to {
            return Err(GraphError::SelfEdge(e.from).into());
        }
        let key = (e.from.min(e.to), e.from.max(e.to));
        if !seen_pairs.insert(key) {
            return Err(GraphError::DuplicatePair { a: key.0, b: key.1 }.into());
        }
    }
    if let Some(cycle) = find_cycle(g) {
        return Err(GraphError::Cycle(cycle).into());
    }
    Ok(())
}

/// Depth-first cycle search over directed edges; returns the node
/// sequence of one cycle if any exists.
fn find_cycle(g: &HhiGraph) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let mut adjacency = vec![Vec::new(); g.n_humans];
    for e in &g.edges {
        adjacency[e.from].push(e.to);
    }
    let mut color = vec![Color::White; g.n_humans];
    let mut stack = Vec::new();

    fn visit(
        node: usize,
        adjacency: &[Vec<usize>],
        color: &mut [Color],
        stack: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        color[node] = Color::Gray;
        stack.push(node);
        for &next in &adjacency[node] {
            match color[next] {
                Color::Gray => {
                    let start = stack.iter().position(|&n| n == next).expect("on stack");
                    return Some(stack[start..].to_vec());
                }
                Color::White => {
                    if let Some(cycle) = visit(next, adjacency, color, stack) {
                        return Some(cycle);
                    }
                }
                Color::Black => {}
            }
        }
        stack.pop();
        color[node] = Color::Black;
        None
    }

    for start in 0..g.n_humans {
        if color[start] == Color::White {
            if let Some(cycle) = visit(start, &adjacency, &mut color, &mut stack) {
                return Some(cycle);
            }
        }
    }
    None
}
