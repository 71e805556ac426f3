//! Structural checks that must pass before time stepping.

use std::collections::VecDeque;
use std::fmt;

use super::element::{ElementKind, NodeId, GROUND};
use super::graph::CircuitGraph;

#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already connected.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologyIssue {
    /// Loop of ideal voltage sources only; KVL over it is over-determined.
    VoltageLoop(Vec<String>),
    /// Loop of voltage sources and device windings containing at least one
    /// winding. Winding voltages are rates of field states, so the loop is
    /// solvable (like a source driving an inductor); reported as a warning.
    DeviceVoltageLoop(Vec<String>),
    /// Cutset of current sources only; KCL is unsatisfiable for nonzero sources.
    CurrentCutset(Vec<String>),
    /// Nodes without a path to ground.
    Floating(Vec<String>),
}

impl TopologyIssue {
    pub fn is_fatal(&self) -> bool {
        !matches!(self, TopologyIssue::DeviceVoltageLoop(_))
    }

    pub fn elements(&self) -> &[String] {
        match self {
            TopologyIssue::VoltageLoop(e)
            | TopologyIssue::DeviceVoltageLoop(e)
            | TopologyIssue::CurrentCutset(e)
            | TopologyIssue::Floating(e) => e,
        }
    }
}

impl fmt::Display for TopologyIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (what, items) = match self {
            TopologyIssue::VoltageLoop(e) => ("error: loop of voltage sources", e),
            TopologyIssue::DeviceVoltageLoop(e) => {
                ("warning: loop of voltage sources and device windings", e)
            }
            TopologyIssue::CurrentCutset(e) => ("error: cutset of current sources", e),
            TopologyIssue::Floating(e) => ("error: nodes without path to ground", e),
        };
        write!(f, "{what}: {{{}}}", items.join(", "))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopologyReport {
    pub issues: Vec<TopologyIssue>,
}

impl TopologyReport {
    pub fn passed(&self) -> bool {
        !self.issues.iter().any(TopologyIssue::is_fatal)
    }

    pub fn fatal(&self) -> impl Iterator<Item = &TopologyIssue> {
        self.issues.iter().filter(|i| i.is_fatal())
    }
}

impl fmt::Display for TopologyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "topology ok");
        }
        for (k, issue) in self.issues.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// Spanning forest that can report the tree path closing a loop.
struct Forest {
    uf: UnionFind,
    adj: Vec<Vec<(NodeId, String)>>,
}

impl Forest {
    fn new(n: usize) -> Self {
        Forest {
            uf: UnionFind::new(n),
            adj: vec![Vec::new(); n],
        }
    }

    /// Adds the edge, or returns the loop it closes.
    fn add(&mut self, p: NodeId, m: NodeId, name: &str) -> Option<Vec<String>> {
        if self.uf.union(p, m) {
            self.adj[p].push((m, name.to_string()));
            self.adj[m].push((p, name.to_string()));
            return None;
        }
        let mut prev: Vec<Option<(NodeId, String)>> = vec![None; self.adj.len()];
        let mut visited = vec![false; self.adj.len()];
        let mut queue = VecDeque::from([p]);
        visited[p] = true;
        while let Some(n) = queue.pop_front() {
            if n == m {
                break;
            }
            for (next, edge) in &self.adj[n] {
                if !visited[*next] {
                    visited[*next] = true;
                    prev[*next] = Some((n, edge.clone()));
                    queue.push_back(*next);
                }
            }
        }
        let mut path = vec![name.to_string()];
        let mut n = m;
        while let Some((back, edge)) = prev[n].take() {
            path.push(edge);
            n = back;
        }
        Some(path)
    }
}

/// Reports source loops, current-source cutsets and floating nodes.
pub fn validate_topology(graph: &CircuitGraph) -> TopologyReport {
    let n = graph.n_nodes + 1;
    let mut issues = Vec::new();

    let mut forest = Forest::new(n);
    for kind in [ElementKind::VoltageSource, ElementKind::Device] {
        for (k, &(p, m)) in graph.endpoints(kind).iter().enumerate() {
            let name = &graph.branch_names(kind)[k];
            if let Some(mut lp) = forest.add(p, m, name) {
                lp.sort();
                issues.push(if kind == ElementKind::VoltageSource {
                    TopologyIssue::VoltageLoop(lp)
                } else {
                    TopologyIssue::DeviceVoltageLoop(lp)
                });
            }
        }
    }

    let mut all = UnionFind::new(n);
    let mut no_current = UnionFind::new(n);
    for &kind in CircuitGraph::all_kinds() {
        for &(p, m) in graph.endpoints(kind) {
            all.union(p, m);
            if kind != ElementKind::CurrentSource {
                no_current.union(p, m);
            }
        }
    }

    let floating: Vec<String> = (1..n)
        .filter(|&v| all.find(v) != all.find(GROUND))
        .map(|v| graph.node_names[v].clone())
        .collect();
    if !floating.is_empty() {
        issues.push(TopologyIssue::Floating(floating));
    }

    // every component of the graph without current sources that is cut off
    // from ground is separated from it by current sources only
    let ground_root = no_current.find(GROUND);
    let mut roots: Vec<usize> = (1..n)
        .map(|v| no_current.find(v))
        .filter(|&r| r != ground_root)
        .collect();
    roots.sort_unstable();
    roots.dedup();
    for root in roots {
        let crossing: Vec<String> = graph
            .endpoints(ElementKind::CurrentSource)
            .iter()
            .enumerate()
            .filter(|(_, &(p, m))| {
                (no_current.find(p) == root) != (no_current.find(m) == root)
            })
            .map(|(k, _)| graph.branch_names(ElementKind::CurrentSource)[k].clone())
            .collect();
        if !crossing.is_empty() {
            issues.push(TopologyIssue::CurrentCutset(crossing));
        }
    }

    TopologyReport { issues }
}
