//! Directed graphs with a subset sampler on every node, for drawing
//! possible worlds and reverse-reachable sets under edge churn.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader};
use std::path::Path;

use indexmap::IndexMap;
use rustc_hash::FxHashSet;
use thiserror::Error;

use crate::odss::{OdssConfig, OdssSampler};
use crate::rng::RandomSource;
use crate::sampler::{SamplerError, SubsetSampler};

pub type NodeId = u32;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: probability {p} is outside [0, 1]")]
    ProbabilityOutOfRange { line: usize, p: f64 },
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("edge {u} -> {v} already exists")]
    DuplicateEdge { u: NodeId, v: NodeId },
    #[error("line {line}: edge {u} -> {v} already exists")]
    DuplicateEdgeAt { line: usize, u: NodeId, v: NodeId },
    #[error("edge {u} -> {v} does not exist")]
    MissingEdge { u: NodeId, v: NodeId },
    #[error("the graph has no nodes")]
    Empty,
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scaling {
    /// Probabilities as given.
    #[default]
    None,
    /// Each node's outgoing weights rescaled to sum to 1; a missing weight
    /// counts as 1.
    OutSum1,
}

fn sampler_for(neighbours: &IndexMap<NodeId, f64>) -> Result<OdssSampler, SamplerError> {
    let config = OdssConfig::with_capacity(neighbours.len().max(1).next_power_of_two());
    OdssSampler::build(neighbours.iter().map(|(&v, &p)| (u64::from(v), p)), config, 0)
}

#[derive(Debug)]
pub struct DynamicGraph {
    out_adj: Vec<IndexMap<NodeId, f64>>,
    in_adj: Vec<IndexMap<NodeId, f64>>,
    out_samplers: Vec<OdssSampler>,
    in_samplers: Vec<OdssSampler>,
    edges: usize,
}

impl Default for DynamicGraph {
    fn default() -> Self {
        Self::new(0)
    }
}

impl DynamicGraph {
    pub fn new(nodes: usize) -> Self {
        let mut g = Self {
            out_adj: Vec::new(),
            in_adj: Vec::new(),
            out_samplers: Vec::new(),
            in_samplers: Vec::new(),
            edges: 0,
        };
        g.ensure_nodes(nodes);
        g
    }

    /// Builds a graph from `(u, v, p)` triples in one pass.
    pub fn from_edges(nodes: usize, edges: impl IntoIterator<Item = (NodeId, NodeId, f64)>) -> Result<Self, GraphError> {
        let mut out_adj: Vec<IndexMap<NodeId, f64>> = vec![IndexMap::new(); nodes];
        let mut in_adj: Vec<IndexMap<NodeId, f64>> = vec![IndexMap::new(); nodes];
        let mut count = 0;
        for (u, v, p) in edges {
            if !(0.0..=1.0).contains(&p) {
                return Err(GraphError::InvalidProbability(p));
            }
            let need = u.max(v) as usize + 1;
            if out_adj.len() < need {
                out_adj.resize(need, IndexMap::new());
                in_adj.resize(need, IndexMap::new());
            }
            if out_adj[u as usize].insert(v, p).is_some() {
                return Err(GraphError::DuplicateEdge { u, v });
            }
            in_adj[v as usize].insert(u, p);
            count += 1;
        }
        let out_samplers = out_adj.iter().map(sampler_for).collect::<Result<_, _>>()?;
        let in_samplers = in_adj.iter().map(sampler_for).collect::<Result<_, _>>()?;
        Ok(Self {
            out_adj,
            in_adj,
            out_samplers,
            in_samplers,
            edges: count,
        })
    }

    pub fn node_count(&self) -> usize {
        self.out_adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn out_neighbours(&self, u: NodeId) -> Option<&IndexMap<NodeId, f64>> {
        self.out_adj.get(u as usize)
    }

    pub fn in_neighbours(&self, v: NodeId) -> Option<&IndexMap<NodeId, f64>> {
        self.in_adj.get(v as usize)
    }

    pub fn edge(&self, u: NodeId, v: NodeId) -> Option<f64> {
        self.out_adj.get(u as usize)?.get(&v).copied()
    }

    /// Every edge as `(u, v, p)`, grouped by source.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(u, adj)| adj.iter().map(move |(&v, &p)| (u as NodeId, v, p)))
    }

    fn ensure_nodes(&mut self, nodes: usize) {
        while self.out_adj.len() < nodes {
            self.out_adj.push(IndexMap::new());
            self.in_adj.push(IndexMap::new());
            self.out_samplers.push(sampler_for(&IndexMap::new()).expect("empty sampler"));
            self.in_samplers.push(sampler_for(&IndexMap::new()).expect("empty sampler"));
        }
    }

    pub fn insert_edge(&mut self, u: NodeId, v: NodeId, p: f64) -> Result<(), GraphError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(GraphError::InvalidProbability(p));
        }
        if self.edge(u, v).is_some() {
            return Err(GraphError::DuplicateEdge { u, v });
        }
        self.ensure_nodes(u.max(v) as usize + 1);
        self.out_samplers[u as usize].insert(u64::from(v), p)?;
        self.in_samplers[v as usize].insert(u64::from(u), p)?;
        self.out_adj[u as usize].insert(v, p);
        self.in_adj[v as usize].insert(u, p);
        self.edges += 1;
        Ok(())
    }

    pub fn delete_edge(&mut self, u: NodeId, v: NodeId) -> Result<f64, GraphError> {
        let p = self.edge(u, v).ok_or(GraphError::MissingEdge { u, v })?;
        self.out_samplers[u as usize].delete(u64::from(v))?;
        self.in_samplers[v as usize].delete(u64::from(u))?;
        self.out_adj[u as usize].swap_remove(&v);
        self.in_adj[v as usize].swap_remove(&u);
        self.edges -= 1;
        Ok(p)
    }

    /// Keeps each edge independently with its probability: one query per
    /// node over its out-neighbours. Edges come out sorted.
    pub fn possible_world(&mut self, src: &mut RandomSource) -> Vec<(NodeId, NodeId)> {
        let mut world = Vec::new();
        let mut buf = Vec::new();
        for (u, sampler) in self.out_samplers.iter_mut().enumerate() {
            if sampler.is_empty() {
                continue;
            }
            buf.clear();
            sampler.query_with(src, &mut buf);
            buf.sort_unstable();
            world.extend(buf.iter().map(|&v| (u as NodeId, v as NodeId)));
        }
        world
    }

    /// Reverse-reachable set from a uniformly chosen node.
    pub fn rr_set(&mut self, src: &mut RandomSource) -> Result<Vec<NodeId>, GraphError> {
        if self.node_count() == 0 {
            return Err(GraphError::Empty);
        }
        let start = src.uniform_int(self.node_count() as u64) as NodeId;
        Ok(self.rr_set_from(start, src))
    }

    /// Reverse breadth-first diffusion from `start`; every newly activated
    /// node queries its in-neighbour sampler once. Nodes come out in
    /// activation order.
    pub fn rr_set_from(&mut self, start: NodeId, src: &mut RandomSource) -> Vec<NodeId> {
        let mut active = FxHashSet::default();
        let mut order = vec![start];
        active.insert(start);
        let mut queue = VecDeque::from([start]);
        let mut buf = Vec::new();
        while let Some(v) = queue.pop_front() {
            let Some(sampler) = self.in_samplers.get_mut(v as usize) else {
                continue;
            };
            if sampler.is_empty() {
                continue;
            }
            buf.clear();
            sampler.query_with(src, &mut buf);
            for &u in &buf {
                let u = u as NodeId;
                if active.insert(u) {
                    order.push(u);
                    queue.push_back(u);
                }
            }
        }
        order
    }

    /// Mirror invariant between adjacency lists and samplers.
    pub fn verify(&self) -> Result<(), String> {
        let mut mirrored = 0;
        for (u, adj) in self.out_adj.iter().enumerate() {
            for (&v, &p) in adj {
                if self.in_adj[v as usize].get(&(u as NodeId)) != Some(&p) {
                    return Err(format!("edge {u} -> {v} is missing from the in-list"));
                }
                mirrored += 1;
            }
        }
        let incoming: usize = self.in_adj.iter().map(IndexMap::len).sum();
        if mirrored != self.edges || incoming != self.edges {
            return Err(format!("{} edges recorded, {mirrored} out, {incoming} in", self.edges));
        }
        let sides = [(&self.out_adj, &self.out_samplers), (&self.in_adj, &self.in_samplers)];
        for (adj, samplers) in sides {
            for (node, (list, sampler)) in adj.iter().zip(samplers).enumerate() {
                if sampler.len() != list.len() {
                    return Err(format!("node {node}: {} neighbours, sampler holds {}", list.len(), sampler.len()));
                }
                for (&w, &p) in list {
                    if sampler.prob(u64::from(w)) != Some(p) {
                        return Err(format!("node {node}: sampler disagrees on neighbour {w}"));
                    }
                }
                sampler.verify().map_err(|e| format!("node {node}: {e}"))?;
            }
        }
        Ok(())
    }

    pub fn load_edge_list(path: impl AsRef<Path>, scaling: Scaling) -> Result<Self, GraphError> {
        let file = std::fs::File::open(path)?;
        Self::parse_edge_list(BufReader::new(file), scaling)
    }

    /// Reads `u v [p]` lines; `#` lines and blank lines are skipped.
    pub fn parse_edge_list(input: impl BufRead, scaling: Scaling) -> Result<Self, GraphError> {
        let mut out_adj: Vec<IndexMap<NodeId, f64>> = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let malformed = |reason: &str| GraphError::Malformed {
                line: lineno,
                reason: reason.to_owned(),
            };
            let fields: Vec<&str> = text.split_whitespace().collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(malformed("expected `u v p`"));
            }
            let u: NodeId = fields[0].parse().map_err(|_| malformed("bad source node"))?;
            let v: NodeId = fields[1].parse().map_err(|_| malformed("bad target node"))?;
            let p = match (fields.get(2), scaling) {
                (Some(s), _) => s.parse::<f64>().map_err(|_| malformed("bad probability"))?,
                (None, Scaling::OutSum1) => 1.0,
                (None, Scaling::None) => return Err(malformed("missing probability")),
            };
            let valid = match scaling {
                Scaling::None => (0.0..=1.0).contains(&p),
                Scaling::OutSum1 => p >= 0.0 && p.is_finite(),
            };
            if !valid {
                return Err(GraphError::ProbabilityOutOfRange { line: lineno, p });
            }
            let need = u.max(v) as usize + 1;
            if out_adj.len() < need {
                out_adj.resize(need, IndexMap::new());
            }
            if out_adj[u as usize].insert(v, p).is_some() {
                return Err(GraphError::DuplicateEdgeAt { line: lineno, u, v });
            }
        }
        if scaling == Scaling::OutSum1 {
            for adj in &mut out_adj {
                let total: f64 = adj.values().sum();
                if total > 0.0 {
                    for p in adj.values_mut() {
                        *p = (*p / total).min(1.0);
                    }
                }
            }
        }
        let nodes = out_adj.len();
        let edges = out_adj
            .into_iter()
            .enumerate()
            .flat_map(|(u, adj)| adj.into_iter().map(move |(v, p)| (u as NodeId, v, p)));
        Self::from_edges(nodes, edges)
    }
}

impl PartialEq for DynamicGraph {
    /// Same nodes and edge probabilities, and samplers holding the same
    /// elements; slot order and capacities are ignored.
    fn eq(&self, other: &Self) -> bool {
        let held = |s: &OdssSampler| {
            let mut e: Vec<(u64, u64)> = s.elements().map(|(id, p)| (id, p.to_bits())).collect();
            e.sort_unstable();
            e
        };
        self.edges == other.edges
            && self.out_adj == other.out_adj
            && self.in_adj == other.in_adj
            && self.out_samplers.iter().map(held).eq(other.out_samplers.iter().map(held))
            && self.in_samplers.iter().map(held).eq(other.in_samplers.iter().map(held))
    }
}
