//! Node placement, the unit-disk neighbor relation and static hop-count routes.

use alloc::collections::VecDeque;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Identifies a node. Ids are dense, `0..n` within a topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    /// Bytes a node id occupies in a packet header (an IPv4 address).
    pub const WIRE_BYTES: usize = 4;

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

/// A node position in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance_squared(&self, other: &Position) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

impl From<(f64, f64)> for Position {
    fn from((x, y): (f64, f64)) -> Self {
        Position { x, y }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("topology needs at least one node")]
    Empty,
    #[error("radio range must be positive and finite, got {0}")]
    InvalidRange(f64),
    #[error("node {0} is not part of the topology")]
    UnknownNode(NodeId),
    #[error("no route from {src} to {dst}")]
    NoRoute { src: NodeId, dst: NodeId },
}

/// Positions plus the symmetric unit-disk adjacency derived from them.
///
/// Immutable once built; share it freely between runs.
#[derive(Debug, Clone)]
pub struct Topology {
    positions: Vec<Position>,
    radio_range: f64,
    // Sorted ascending per node.
    adjacency: Vec<Vec<NodeId>>,
}

/// Builds the unit-disk graph: `i` and `j` are neighbors iff their distance is
/// at most `radio_range` (closed disk). A node is never its own neighbor.
pub fn build_topology(positions: &[Position], radio_range: f64) -> Result<Topology, TopologyError> {
    if positions.is_empty() {
        return Err(TopologyError::Empty);
    }
    if !(radio_range > 0.0) || !radio_range.is_finite() {
        return Err(TopologyError::InvalidRange(radio_range));
    }
    let range_sq = radio_range * radio_range;
    let n = positions.len();
    let mut adjacency = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if positions[i].distance_squared(&positions[j]) <= range_sq {
                adjacency[i].push(NodeId(j as u32));
                adjacency[j].push(NodeId(i as u32));
            }
        }
    }
    for list in adjacency.iter_mut() {
        list.sort_unstable();
    }
    Ok(Topology {
        positions: positions.to_vec(),
        radio_range,
        adjacency,
    })
}

/// Places `n` nodes uniformly at random in `[0, side]²`. Same seed, same layout.
pub fn random_layout(n: usize, side: f64, seed: u64) -> Vec<Position> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x = rng.random_range(0.0..=side);
            let y = rng.random_range(0.0..=side);
            Position { x, y }
        })
        .collect()
}

impl Topology {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn radio_range(&self) -> f64 {
        self.radio_range
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.len() as u32).map(NodeId)
    }

    /// Neighbors of `id` in ascending id order.
    ///
    /// Panics if `id` is not in the topology.
    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.adjacency[id.index()]
    }

    pub fn adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.contains(a) && self.adjacency[a.index()].binary_search(&b).is_ok()
    }

    fn check(&self, id: NodeId) -> Result<(), TopologyError> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(TopologyError::UnknownNode(id))
        }
    }

    /// Hop distance from every node to `dst`, `None` when unreachable.
    pub fn hop_distances_to(&self, dst: NodeId) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.len()];
        if !self.contains(dst) {
            return dist;
        }
        let mut frontier = VecDeque::new();
        dist[dst.index()] = Some(0);
        frontier.push_back(dst);
        while let Some(u) = frontier.pop_front() {
            let du = dist[u.index()].unwrap_or(0);
            for &v in self.neighbors(u) {
                if dist[v.index()].is_none() {
                    dist[v.index()] = Some(du + 1);
                    frontier.push_back(v);
                }
            }
        }
        dist
    }
}

/// Minimum-hop route from `src` to `dst`.
///
/// Among equal-length routes the lexicographically smallest node sequence wins:
/// walking from the source, each step takes the lowest-id neighbor that is one
/// hop closer to the destination.
pub fn shortest_path(topology: &Topology, src: NodeId, dst: NodeId) -> Result<Route, TopologyError> {
    topology.check(src)?;
    topology.check(dst)?;
    let dist = topology.hop_distances_to(dst);
    let Some(mut remaining) = dist[src.index()] else {
        return Err(TopologyError::NoRoute { src, dst });
    };
    let mut nodes = Vec::with_capacity(remaining as usize + 1);
    nodes.push(src);
    let mut cur = src;
    while remaining > 0 {
        // neighbors are sorted, so the first hit is the smallest id
        let next = topology
            .neighbors(cur)
            .iter()
            .copied()
            .find(|v| dist[v.index()] == Some(remaining - 1))
            .ok_or(TopologyError::NoRoute { src, dst })?;
        nodes.push(next);
        cur = next;
        remaining -= 1;
    }
    Ok(Route {
        nodes: Arc::from(nodes),
    })
}

/// An ordered node list from source to destination inclusive.
///
/// Cheap to clone; the node list is shared.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Route {
    nodes: Arc<[NodeId]>,
}

impl Route {
    /// Wraps an explicit node list. Returns `None` if it is empty, repeats a
    /// node, or has a non-adjacent consecutive pair in `topology`.
    pub fn new(topology: &Topology, nodes: Vec<NodeId>) -> Option<Route> {
        if nodes.is_empty() || !nodes.iter().all(|n| topology.contains(*n)) {
            return None;
        }
        for (i, a) in nodes.iter().enumerate() {
            if nodes[i + 1..].contains(a) {
                return None;
            }
        }
        if nodes.windows(2).any(|w| !topology.adjacent(w[0], w[1])) {
            return None;
        }
        Some(Route {
            nodes: Arc::from(nodes),
        })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn src(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn dst(&self) -> NodeId {
        self.nodes[self.nodes.len() - 1]
    }

    /// Number of nodes on the route, endpoints included.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn hops(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn get(&self, index: usize) -> Option<NodeId> {
        self.nodes.get(index).copied()
    }

    pub fn position_of(&self, node: NodeId) -> Option<usize> {
        self.nodes.iter().position(|n| *n == node)
    }
}
