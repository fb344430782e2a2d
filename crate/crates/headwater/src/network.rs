//! Stream network ingestion: raw reach records, validation, and the rooted
//! tree the rest of the crate operates on.
//!
//! A network is a set of reaches. Each reach drains into at most one
//! downstream reach, and the single reach without a downstream edge is the
//! root (the basin outlet). Upstream neighbours are derived, so the tree
//! hangs off the root with edges pointing downstream.
//!
//! Divergences are resolved at ingest. Flow is attributed entirely to the
//! major path, so a reach flagged as a minor divergence contributes no
//! upstream connectivity: it is excluded from the indexed tree and parked in
//! a side table that still lets downstream traversal pass through it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::num::NonZeroU64;
use std::path::Path;

use thiserror::Error;

/// Identifier of a stream reach.
///
/// Always positive. The text formats reserve `0` for "no downstream" in
/// network files and "unassigned" in raster files, so it can never name a
/// reach.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReachId(NonZeroU64);

impl ReachId {
    /// Wraps a raw id, rejecting the reserved value `0`.
    pub fn new(raw: u64) -> Option<Self> {
        NonZeroU64::new(raw).map(ReachId)
    }

    pub fn get(self) -> u64 {
        self.0.get()
    }
}

impl fmt::Display for ReachId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for ReachId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ReachId({})", self.0)
    }
}

/// How a reach relates to a flow split. Everything is `Major` unless the
/// source data marks the reach as the minor path of a divergence.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum Divergence {
    Major,
    Minor,
}

/// One record of an unvalidated network.
#[derive(Copy, Clone, Debug)]
pub struct RawReach {
    pub id: ReachId,
    pub downstream: Option<ReachId>,
    pub divergence: Divergence,
}

/// An unvalidated bag of reach records, as read from a network file.
#[derive(Clone, Debug, Default)]
pub struct RawNetwork {
    pub reaches: Vec<RawReach>,
}

impl RawNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    /// Convenience for building networks in code and tests.
    pub fn push(&mut self, id: ReachId, downstream: Option<ReachId>, divergence: Divergence) {
        self.reaches.push(RawReach {
            id,
            downstream,
            divergence,
        });
    }
}

fn join_ids(ids: &[ReachId]) -> String {
    let mut s = String::new();
    for (i, id) in ids.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        s.push_str(&id.to_string());
    }
    s
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("network has no indexable reaches")]
    Empty,
    #[error("reach {0} appears more than once")]
    DuplicateReach(ReachId),
    #[error("reach {reach} drains into {downstream}, which is not in the vertex set")]
    DanglingDownstream { reach: ReachId, downstream: ReachId },
    #[error("cycle detected through reaches {}", join_ids(.0))]
    CycleDetected(Vec<ReachId>),
    #[error("multiple root candidates: {}", join_ids(.0))]
    MultipleRoots(Vec<ReachId>),
    #[error("unknown reach {0}")]
    UnknownReach(ReachId),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A validated, rooted stream tree.
///
/// Invariants, enforced by [`normalize`]:
/// * exactly one root, every other vertex has exactly one downstream edge
/// * the downstream relation is acyclic and connects every vertex to the root
/// * minor-divergence reaches are not vertices; they live in a side table
#[derive(Clone, Debug)]
pub struct StreamTree {
    /// Reach ids in ascending order; positions double as dense indices.
    ids: Vec<ReachId>,
    index: HashMap<ReachId, u32>,
    parent: Vec<Option<u32>>,
    children: Vec<Vec<u32>>,
    root: u32,
    /// Minor divergences: reach id to its downstream id, if any.
    minors: BTreeMap<ReachId, Option<ReachId>>,
}

impl StreamTree {
    /// Number of indexed vertices. Minor reaches do not count.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn root(&self) -> ReachId {
        self.ids[self.root as usize]
    }

    /// All vertex ids in ascending order.
    pub fn reach_ids(&self) -> &[ReachId] {
        &self.ids
    }

    pub fn contains(&self, v: ReachId) -> bool {
        self.index.contains_key(&v)
    }

    /// Direct upstream neighbours of `v` in ascending id order.
    pub fn upstream(&self, v: ReachId) -> Result<Vec<ReachId>, NetworkError> {
        let i = self.require(v)?;
        Ok(self.children[i as usize]
            .iter()
            .map(|&c| self.ids[c as usize])
            .collect())
    }

    /// The reach `v` drains into, or `None` for the root. Works for minor
    /// reaches through the side table.
    pub fn downstream_of(&self, v: ReachId) -> Result<Option<ReachId>, NetworkError> {
        if let Some(&i) = self.index.get(&v) {
            return Ok(self.parent[i as usize].map(|p| self.ids[p as usize]));
        }
        match self.minors.get(&v) {
            Some(&down) => Ok(down),
            None => Err(NetworkError::UnknownReach(v)),
        }
    }

    /// The downstream walk from `v` to the root, `v` first.
    ///
    /// For a tree vertex the result has exactly `delta(v) + 1` entries. A
    /// minor reach is allowed as the starting point: its side-table edge
    /// joins the walk to the tree (or ends it, for a minor flowing out of
    /// the network on its own).
    pub fn downstream_path(&self, v: ReachId) -> Result<Vec<ReachId>, NetworkError> {
        let mut path = Vec::new();
        let mut cur = v;
        // Minor reaches may chain before the walk enters the tree.
        while !self.contains(cur) {
            match self.minors.get(&cur) {
                Some(&Some(next)) => {
                    path.push(cur);
                    cur = next;
                }
                Some(&None) => {
                    path.push(cur);
                    return Ok(path);
                }
                None => return Err(NetworkError::UnknownReach(cur)),
            }
        }
        let mut i = self.index[&cur];
        loop {
            path.push(self.ids[i as usize]);
            match self.parent[i as usize] {
                Some(p) => i = p,
                None => break,
            }
        }
        Ok(path)
    }

    /// Minor divergences excluded from the tree, with their downstream ids.
    pub fn minor_reaches(&self) -> &BTreeMap<ReachId, Option<ReachId>> {
        &self.minors
    }

    fn require(&self, v: ReachId) -> Result<u32, NetworkError> {
        self.index
            .get(&v)
            .copied()
            .ok_or(NetworkError::UnknownReach(v))
    }

    pub(crate) fn id_at(&self, i: u32) -> ReachId {
        self.ids[i as usize]
    }

    pub(crate) fn children_at(&self, i: u32) -> &[u32] {
        &self.children[i as usize]
    }

    pub(crate) fn root_idx(&self) -> u32 {
        self.root
    }
}

/// Validates a raw network and builds the indexable tree.
///
/// Minor-divergence reaches are filtered into the side table first; the
/// remaining reaches must form exactly one rooted tree. The downstream
/// relation of the whole input, minors included, must be acyclic and may
/// not dangle. A major reach draining into a minor one is rejected as
/// dangling, because the target is not part of the vertex set.
pub fn normalize(raw: &RawNetwork) -> Result<StreamTree, NetworkError> {
    if raw.reaches.is_empty() {
        return Err(NetworkError::Empty);
    }

    let mut by_id: HashMap<ReachId, &RawReach> = HashMap::with_capacity(raw.reaches.len());
    for r in &raw.reaches {
        if by_id.insert(r.id, r).is_some() {
            return Err(NetworkError::DuplicateReach(r.id));
        }
    }

    // Every downstream id must name a reach that exists at all.
    for r in &raw.reaches {
        if let Some(t) = r.downstream {
            if !by_id.contains_key(&t) {
                return Err(NetworkError::DanglingDownstream {
                    reach: r.id,
                    downstream: t,
                });
            }
        }
    }

    // The full downstream relation must be acyclic, side table included,
    // or downstream walks would never terminate.
    detect_cycle(&by_id)?;

    let mut ids: Vec<ReachId> = Vec::new();
    let mut minors: BTreeMap<ReachId, Option<ReachId>> = BTreeMap::new();
    for r in &raw.reaches {
        match r.divergence {
            Divergence::Major => ids.push(r.id),
            Divergence::Minor => {
                minors.insert(r.id, r.downstream);
            }
        }
    }
    if ids.is_empty() {
        return Err(NetworkError::Empty);
    }
    ids.sort_unstable();

    let index: HashMap<ReachId, u32> = ids
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, i as u32))
        .collect();

    // Tree edges must stay inside the vertex set; draining into a minor
    // reach counts as dangling.
    let mut parent: Vec<Option<u32>> = vec![None; ids.len()];
    let mut roots: Vec<ReachId> = Vec::new();
    for (i, &id) in ids.iter().enumerate() {
        let r = by_id[&id];
        match r.downstream {
            None => roots.push(id),
            Some(t) => match index.get(&t) {
                Some(&p) => parent[i] = Some(p),
                None => {
                    return Err(NetworkError::DanglingDownstream {
                        reach: id,
                        downstream: t,
                    })
                }
            },
        }
    }
    if roots.len() > 1 {
        return Err(NetworkError::MultipleRoots(roots));
    }
    // Acyclic and finite, with every edge staying in the vertex set: a
    // rootless chain is impossible, so exactly one root remains.
    debug_assert_eq!(roots.len(), 1);
    let root = index[&roots[0]];

    let mut children: Vec<Vec<u32>> = vec![Vec::new(); ids.len()];
    for (i, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p as usize].push(i as u32);
        }
    }
    // Index order is id order, so sorted child indices give the ascending
    // id order the labelling pass relies on.
    for c in &mut children {
        c.sort_unstable();
    }

    Ok(StreamTree {
        ids,
        index,
        parent,
        children,
        root,
        minors,
    })
}

fn detect_cycle(by_id: &HashMap<ReachId, &RawReach>) -> Result<(), NetworkError> {
    const WHITE: u8 = 0;
    const GRAY: u8 = 1;
    const BLACK: u8 = 2;

    let mut order: Vec<ReachId> = by_id.keys().copied().collect();
    order.sort_unstable();
    let mut color: HashMap<ReachId, u8> = order.iter().map(|&id| (id, WHITE)).collect();

    for &start in &order {
        if color[&start] != WHITE {
            continue;
        }
        let mut path: Vec<ReachId> = Vec::new();
        let mut cur = start;
        loop {
            match color[&cur] {
                WHITE => {
                    color.insert(cur, GRAY);
                    path.push(cur);
                    match by_id[&cur].downstream {
                        Some(next) => cur = next,
                        None => break,
                    }
                }
                GRAY => {
                    let pos = path.iter().position(|&x| x == cur).expect("on current path");
                    return Err(NetworkError::CycleDetected(path[pos..].to_vec()));
                }
                _ => break,
            }
        }
        for id in path {
            color.insert(id, BLACK);
        }
    }
    Ok(())
}

// ── Network file format ─────────────────────────────────────────────────
//
// One reach per line: `reach_id<TAB>downstream_id<TAB>flag`, where a
// downstream id of 0 means "no downstream" and the flag is `M` (major) or
// `m` (minor). Lines starting with `#` are comments. ASCII throughout.

/// Parses the network text format into an unvalidated [`RawNetwork`].
pub fn parse_network(text: &str) -> Result<RawNetwork, NetworkError> {
    let mut raw = RawNetwork::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim_end_matches('\r');
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(NetworkError::Parse {
                line: lineno,
                msg: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let id = parse_id(fields[0], lineno)?;
        let id = ReachId::new(id).ok_or(NetworkError::Parse {
            line: lineno,
            msg: "reach id 0 is reserved".into(),
        })?;
        let downstream = ReachId::new(parse_id(fields[1], lineno)?);
        let divergence = match fields[2] {
            "M" => Divergence::Major,
            "m" => Divergence::Minor,
            other => {
                return Err(NetworkError::Parse {
                    line: lineno,
                    msg: format!("divergence flag must be M or m, got {other:?}"),
                })
            }
        };
        raw.push(id, downstream, divergence);
    }
    Ok(raw)
}

fn parse_id(field: &str, line: usize) -> Result<u64, NetworkError> {
    field.parse::<u64>().map_err(|_| NetworkError::Parse {
        line,
        msg: format!("expected an integer id, got {field:?}"),
    })
}

pub fn read_network(path: &Path) -> Result<RawNetwork, NetworkError> {
    let text = std::fs::read_to_string(path)?;
    parse_network(&text)
}

/// Serializes a tree (side table included) in the network text format,
/// sorted by reach id. Parsing the output and normalizing reproduces the
/// tree exactly.
pub fn network_to_string(tree: &StreamTree) -> String {
    let mut rows: Vec<(ReachId, u64, char)> = Vec::with_capacity(tree.len());
    for (i, &id) in tree.ids.iter().enumerate() {
        let down = tree.parent[i].map_or(0, |p| tree.ids[p as usize].get());
        rows.push((id, down, 'M'));
    }
    for (&id, &down) in &tree.minors {
        rows.push((id, down.map_or(0, ReachId::get), 'm'));
    }
    rows.sort_unstable_by_key(|&(id, _, _)| id);
    let mut out = String::new();
    for (id, down, flag) in rows {
        out.push_str(&format!("{id}\t{down}\t{flag}\n"));
    }
    out
}

pub fn write_network(tree: &StreamTree, path: &Path) -> Result<(), NetworkError> {
    crate::ioutil::atomic_write(path, network_to_string(tree).as_bytes())?;
    Ok(())
}
