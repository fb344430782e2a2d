//! Modified nested-set labelling of a stream tree.
//!
//! One depth-first pass from the root assigns every vertex three integers:
//!
//! * `d(v)`: discovery time, a permutation of `1..=|V|`
//! * `f(v)`: the largest discovery time in the subtree rooted at `v`
//! * `delta(v)`: hop distance from the root
//!
//! The point of the exercise is the interval property. The subtree of `v`
//! (its upstream drainage) is exactly the set of vertices whose discovery
//! time falls in `[d(v), f(v)]`, so upstream membership becomes a closed
//! integer interval and the whole upstream set is one contiguous run of a
//! discovery-ordered array. Leaves are recognizable without any adjacency:
//! `d(v) == f(v)`.
//!
//! The traversal is iterative (an explicit stack, no recursion), visits
//! children in ascending reach id order, and counts its events: one per
//! vertex discovery plus one per edge retreat back toward the root, for
//! exactly `2|V| - 1` on any input.

use std::collections::HashMap;

use crate::network::{NetworkError, ReachId, StreamTree};

/// The labels of one tree, plus the discovery-ordered array behind
/// interval queries.
#[derive(Clone, Debug)]
pub struct MnsLabels {
    /// Discovery order: position `k` holds the vertex with `d == k + 1`.
    by_d: Vec<ReachId>,
    index: HashMap<ReachId, u32>,
    /// Parallel to `by_d`.
    d: Vec<u32>,
    f: Vec<u32>,
    delta: Vec<u32>,
    events: u64,
    height: u32,
}

/// Labels `tree` in one iterative depth-first traversal.
pub fn mns_label(tree: &StreamTree) -> MnsLabels {
    let n = tree.len();
    let mut by_d: Vec<ReachId> = Vec::with_capacity(n);
    let mut d_of: Vec<u32> = vec![0; n]; // indexed by tree vertex index
    let mut f: Vec<u32> = vec![0; n]; // indexed by discovery position
    let mut delta: Vec<u32> = vec![0; n];
    let mut events: u64 = 0;
    let mut height: u32 = 0;

    let root = tree.root_idx();
    let mut tau: u32 = 0;
    // (vertex index, next child position, depth)
    let mut stack: Vec<(u32, usize, u32)> = Vec::new();

    tau += 1;
    d_of[root as usize] = tau;
    by_d.push(tree.id_at(root));
    delta[0] = 0;
    events += 1;
    stack.push((root, 0, 0));

    while let Some(&mut (v, ref mut next_child, depth)) = stack.last_mut() {
        let kids = tree.children_at(v);
        if *next_child < kids.len() {
            let c = kids[*next_child];
            *next_child += 1;
            tau += 1;
            d_of[c as usize] = tau;
            by_d.push(tree.id_at(c));
            delta[(tau - 1) as usize] = depth + 1;
            height = height.max(depth + 1);
            events += 1;
            stack.push((c, 0, depth + 1));
        } else {
            // All children finished. Every discovery since d(v) happened
            // inside this subtree, so the running clock is f(v).
            f[(d_of[v as usize] - 1) as usize] = tau;
            stack.pop();
            if !stack.is_empty() {
                events += 1; // retreat over the edge toward the root
            }
        }
    }

    let index = by_d
        .iter()
        .enumerate()
        .map(|(pos, &id)| (id, pos as u32))
        .collect();
    let d = (1..=n as u32).collect();

    MnsLabels {
        by_d,
        index,
        d,
        f,
        delta,
        events,
        height,
    }
}

impl MnsLabels {
    pub fn len(&self) -> usize {
        self.by_d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_d.is_empty()
    }

    pub fn contains(&self, v: ReachId) -> bool {
        self.index.contains_key(&v)
    }

    fn pos(&self, v: ReachId) -> Result<usize, NetworkError> {
        self.index
            .get(&v)
            .map(|&p| p as usize)
            .ok_or(NetworkError::UnknownReach(v))
    }

    /// Discovery time, in `1..=len`.
    pub fn d(&self, v: ReachId) -> Result<u32, NetworkError> {
        Ok(self.d[self.pos(v)?])
    }

    /// Largest discovery time in the subtree of `v`.
    pub fn f(&self, v: ReachId) -> Result<u32, NetworkError> {
        Ok(self.f[self.pos(v)?])
    }

    /// Hop distance from the root.
    pub fn delta(&self, v: ReachId) -> Result<u32, NetworkError> {
        Ok(self.delta[self.pos(v)?])
    }

    /// The `[d(v), f(v)]` interval.
    pub fn interval(&self, v: ReachId) -> Result<(u32, u32), NetworkError> {
        let p = self.pos(v)?;
        Ok((self.d[p], self.f[p]))
    }

    /// Leaf test without adjacency: a vertex is a headwater reach exactly
    /// when its interval is the single point `d(v)`.
    pub fn is_leaf(&self, v: ReachId) -> Result<bool, NetworkError> {
        let p = self.pos(v)?;
        Ok(self.d[p] == self.f[p])
    }

    /// Every vertex whose catchment drains through `v`, including `v`.
    ///
    /// Returned as the contiguous discovery-ordered run with `d` in
    /// `[d(v), f(v)]`; one bounded lookup plus the output, nothing else is
    /// scanned.
    pub fn upstream_set(&self, v: ReachId) -> Result<&[ReachId], NetworkError> {
        let p = self.pos(v)?;
        let lo = (self.d[p] - 1) as usize;
        let hi = self.f[p] as usize;
        Ok(&self.by_d[lo..hi])
    }

    /// Vertices in discovery order (position `k` has `d == k + 1`).
    pub fn discovery_order(&self) -> &[ReachId] {
        &self.by_d
    }

    /// Label of the vertex at a discovery position, for sweeps that walk
    /// the whole network once.
    pub fn at_discovery(&self, pos: usize) -> (ReachId, u32, u32, u32) {
        (self.by_d[pos], self.d[pos], self.f[pos], self.delta[pos])
    }

    /// Traversal events of the labelling pass: discoveries plus retreats,
    /// always `2|V| - 1`.
    pub fn traversal_events(&self) -> u64 {
        self.events
    }

    /// Longest root-to-leaf hop distance (0 for a single vertex).
    pub fn height(&self) -> u32 {
        self.height
    }
}
