//! Layered recursive grouping: the precomputed index behind fast
//! watershed queries.
//!
//! Storing every reach's full upstream boundary is quadratic in practice;
//! dissolving it per query is linear per query. The index splits the
//! difference by grouping depths in powers of a base `b`. Every vertex is
//! assigned a level, the number of trailing zeros of its depth written in
//! base `b`, capped at a top level `L` that the root always holds, and
//! stores one slab: the
//! dissolved catchments of its upstream vertices fewer than `b^level`
//! hops deeper than itself. Shallow-level vertices store thin slabs,
//! rare high-level vertices store thick ones, and a query later stitches
//! a handful of slabs instead of thousands of raw catchments.
//!
//! The build runs bottom up. Stage `rf` takes the surviving bands, whose
//! owners all have depth divisible by `b^rf`, and lets every vertex with
//! depth divisible by `b^(rf+1)` absorb the bands of its subtree within
//! the next `b^(rf+1)` hops. A band absorbed by a deeper-living owner is
//! frozen first: it is exactly that owner's slab, and the stage number is
//! its level. The bands still alive after the last stage, the root's
//! among them, freeze at the top level `L`. Every dissolve is logged in
//! a [`UnionLedger`], the cost measure benchmarks compare against.
//!
//! An index persists as a plain text file and loads back without the
//! network it came from; queries only need labels, levels and slab cells.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::grid::{trace_cells, Cell, CellCatchment};
use crate::ioutil::atomic_write;
use crate::mns::MnsLabels;
use crate::network::ReachId;

#[derive(Debug, Error)]
pub enum LrgError {
    #[error("grouping base must be at least 2, got {0}")]
    InvalidBase(u32),
    #[error("reach {reach} has no catchment cells")]
    MissingCatchment { reach: ReachId },
    #[error("catchment owner {owner} is not in the labelled network")]
    UnknownOwner { owner: ReachId },
    #[error("cell ({col}, {row}) belongs to both {first} and {second}")]
    OverlappingCatchments {
        col: i32,
        row: i32,
        first: ReachId,
        second: ReachId,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Running totals of dissolve work during an index build. One operand is
/// one polygon fed into a union; its nodes are the boundary corners it
/// carried at that moment.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Default)]
pub struct UnionLedger {
    pub operands: u64,
    pub operand_nodes: u64,
}

/// What the index keeps on disk, summed over all vertices.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Default)]
pub struct StorageStats {
    pub polygons: u64,
    pub nodes: u64,
}

/// One stored vertex: its labels, its level and its slab.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LrgVertex {
    pub id: ReachId,
    pub level: u32,
    pub d: u32,
    pub f: u32,
    pub delta: u32,
    cells: Vec<Cell>,
    node_count: u64,
}

impl LrgVertex {
    /// Slab cells, sorted and unique.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Boundary corner count of the slab.
    pub fn node_count(&self) -> u64 {
        self.node_count
    }

    /// Slab area in cells.
    pub fn area(&self) -> u64 {
        self.cells.len() as u64
    }
}

/// A built index: one slab per vertex, in discovery order.
#[derive(Clone, Debug)]
pub struct LrgIndex {
    base: u32,
    top_level: u32,
    verts: Vec<LrgVertex>,
    index: HashMap<ReachId, u32>,
    /// Depth to discovery positions at that depth, ascending.
    depth_groups: HashMap<u32, Vec<u32>>,
    ledger: UnionLedger,
}

/// Builds the index for a labelled network and its catchment partition.
///
/// Validates that the catchments cover exactly the labelled reaches, are
/// nonempty, and share no cell. Any `base >= 2` works; smaller bases give
/// more layers of thinner slabs.
pub fn build_lrg(
    labels: &MnsLabels,
    catchments: &BTreeMap<ReachId, CellCatchment>,
    base: u32,
) -> Result<LrgIndex, LrgError> {
    if base < 2 {
        return Err(LrgError::InvalidBase(base));
    }
    for &id in labels.discovery_order() {
        if catchments.get(&id).is_none_or(|c| c.cells().is_empty()) {
            return Err(LrgError::MissingCatchment { reach: id });
        }
    }
    for &owner in catchments.keys() {
        if !labels.contains(owner) {
            return Err(LrgError::UnknownOwner { owner });
        }
    }
    let mut owned: Vec<(Cell, ReachId)> = Vec::new();
    for (&owner, c) in catchments {
        owned.extend(c.cells().iter().map(|&cell| (cell, owner)));
    }
    owned.sort_unstable();
    for w in owned.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(LrgError::OverlappingCatchments {
                col: w[0].0.col,
                row: w[0].0.row,
                first: w[0].1,
                second: w[1].1,
            });
        }
    }

    let n = labels.len();
    let height = labels.height();
    // The top level is the least power step reaching the tree height, so
    // base^top_level >= height with top_level minimal (0 for flat trees).
    let lambda = (height as u64).max(1);
    let mut top_level: u32 = 0;
    let mut pow: u64 = 1;
    while pow < lambda {
        pow *= base as u64;
        top_level += 1;
    }

    let mut depth_groups: HashMap<u32, Vec<u32>> = HashMap::new();
    for pos in 0..n {
        let (_, _, _, delta) = labels.at_discovery(pos);
        depth_groups.entry(delta).or_default().push(pos as u32);
    }

    // The working band of each still-active vertex, with its current
    // boundary corner count.
    let mut bands: Vec<Option<(Vec<Cell>, u64)>> = Vec::with_capacity(n);
    for pos in 0..n {
        let (id, ..) = labels.at_discovery(pos);
        let cells = catchments[&id].cells().to_vec();
        let nodes = trace_cells(&cells).node_count();
        bands.push(Some((cells, nodes)));
    }

    let mut frozen: Vec<Option<(u32, Vec<Cell>, u64)>> = (0..n).map(|_| None).collect();
    let mut ledger = UnionLedger::default();

    for rf in 0..top_level {
        let span = (base as u64).pow(rf);
        let stride = span * base as u64;
        let mut depth = 0u64;
        while depth <= height as u64 {
            let Some(group) = depth_groups.get(&(depth as u32)) else {
                depth += stride;
                continue;
            };
            for &u in group {
                let u = u as usize;
                let (_, _, f_u, _) = labels.at_discovery(u);

                // Band owners this deep into u's subtree sit at one of the
                // next `base` multiples of the current span.
                let mut members: Vec<usize> = Vec::new();
                for j in 0..base as u64 {
                    let dj = depth + j * span;
                    if dj > height as u64 {
                        break;
                    }
                    let Some(g) = depth_groups.get(&(dj as u32)) else {
                        continue;
                    };
                    let lo = g.partition_point(|&p| (p as usize) < u);
                    let hi = g.partition_point(|&p| p < f_u);
                    members.extend(g[lo..hi].iter().map(|&p| p as usize));
                }
                debug_assert_eq!(members[0], u);

                if members.len() == 1 {
                    let nodes = bands[u].as_ref().expect("own band present").1;
                    ledger.operands += 1;
                    ledger.operand_nodes += nodes;
                    continue;
                }

                let mut merged: Vec<Cell> = Vec::new();
                let mut consumed_nodes: u64 = 0;
                for &m in &members {
                    let (cells, nodes) = bands[m].take().expect("band consumed once");
                    consumed_nodes += nodes;
                    merged.extend_from_slice(&cells);
                    if m != u {
                        frozen[m] = Some((rf, cells, nodes));
                    }
                }
                merged.sort_unstable();
                debug_assert!(merged.windows(2).all(|w| w[0] < w[1]));
                let merged_nodes = trace_cells(&merged).node_count();
                ledger.operands += members.len() as u64;
                ledger.operand_nodes += consumed_nodes;
                bands[u] = Some((merged, merged_nodes));
            }
            depth += stride;
        }
    }

    // Bands can survive every stage only at depth 0 or at a depth the
    // base divides top_level times over; both belong to the top layer.
    for pos in 0..n {
        if let Some((cells, nodes)) = bands[pos].take() {
            frozen[pos] = Some((top_level, cells, nodes));
        }
    }
    debug_assert!(frozen[0].is_some(), "the root band always survives");

    let mut verts = Vec::with_capacity(n);
    let mut index = HashMap::with_capacity(n);
    for (pos, slot) in frozen.into_iter().enumerate() {
        let (id, d, f, delta) = labels.at_discovery(pos);
        let (level, cells, node_count) = slot.expect("every vertex freezes exactly once");
        index.insert(id, pos as u32);
        verts.push(LrgVertex {
            id,
            level,
            d,
            f,
            delta,
            cells,
            node_count,
        });
    }

    Ok(LrgIndex {
        base,
        top_level,
        verts,
        index,
        depth_groups,
        ledger,
    })
}

impl LrgIndex {
    pub fn base(&self) -> u32 {
        self.base
    }

    /// The level assigned to the root, written `L` in the docs.
    pub fn top_level(&self) -> u32 {
        self.top_level
    }

    /// Number of occupied levels, always `top_level + 1`.
    pub fn layer_count(&self) -> u32 {
        self.top_level + 1
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    /// Dissolve work done by the build.
    pub fn ledger(&self) -> UnionLedger {
        self.ledger
    }

    /// Stored vertices in discovery order.
    pub fn vertices(&self) -> &[LrgVertex] {
        &self.verts
    }

    pub fn stored(&self, v: ReachId) -> Option<&LrgVertex> {
        self.index.get(&v).map(|&p| &self.verts[p as usize])
    }

    /// Stored vertices at one level.
    pub fn layer(&self, level: u32) -> impl Iterator<Item = &LrgVertex> {
        self.verts.iter().filter(move |v| v.level == level)
    }

    pub fn storage_stats(&self) -> StorageStats {
        StorageStats {
            polygons: self.verts.len() as u64,
            nodes: self.verts.iter().map(|v| v.node_count).sum(),
        }
    }

    pub(crate) fn position(&self, v: ReachId) -> Option<u32> {
        self.index.get(&v).copied()
    }

    pub(crate) fn at(&self, pos: u32) -> &LrgVertex {
        &self.verts[pos as usize]
    }

    /// Discovery positions at `delta` within the position range
    /// `[lo, hi)`, ascending. Empty when the depth does not occur.
    pub(crate) fn positions_at_depth_in(&self, delta: u32, lo: u32, hi: u32) -> &[u32] {
        match self.depth_groups.get(&delta) {
            None => &[],
            Some(g) => {
                let a = g.partition_point(|&p| p < lo);
                let b = g.partition_point(|&p| p < hi);
                &g[a..b]
            }
        }
    }

    fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "LRG {} {} {}",
            self.base,
            self.top_level,
            self.verts.len()
        )
        .unwrap();
        writeln!(
            s,
            "ledger {} {}",
            self.ledger.operands, self.ledger.operand_nodes
        )
        .unwrap();
        for v in &self.verts {
            writeln!(s, "{} {} {} {} {}", v.id, v.level, v.d, v.f, v.delta).unwrap();
            s.push_str("c:");
            for (i, c) in v.cells.iter().enumerate() {
                if i > 0 {
                    s.push(';');
                }
                write!(s, "{},{}", c.col, c.row).unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// Writes the index as text, atomically.
    pub fn save(&self, path: &Path) -> Result<(), LrgError> {
        atomic_write(path, self.to_text().as_bytes())?;
        Ok(())
    }

    /// Reads an index back. The file is validated structurally; slab node
    /// counts are not trusted from disk but re-derived by tracing.
    pub fn load(path: &Path) -> Result<LrgIndex, LrgError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    fn from_text(text: &str) -> Result<LrgIndex, LrgError> {
        let fail = |line: usize, msg: &str| LrgError::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

        let (ln, header) = lines.next().ok_or_else(|| fail(1, "empty index file"))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "LRG" {
            return Err(fail(ln, "expected header `LRG <base> <top> <count>`"));
        }
        let base: u32 = parts[1].parse().map_err(|_| fail(ln, "bad base"))?;
        let top_level: u32 = parts[2].parse().map_err(|_| fail(ln, "bad top level"))?;
        let n: usize = parts[3].parse().map_err(|_| fail(ln, "bad vertex count"))?;
        if base < 2 {
            return Err(fail(ln, "grouping base must be at least 2"));
        }
        if n == 0 {
            return Err(fail(ln, "index must hold at least one vertex"));
        }

        let (ln, ledger_line) = lines.next().ok_or_else(|| fail(2, "missing ledger line"))?;
        let parts: Vec<&str> = ledger_line.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != "ledger" {
            return Err(fail(ln, "expected `ledger <operands> <operand nodes>`"));
        }
        let ledger = UnionLedger {
            operands: parts[1].parse().map_err(|_| fail(ln, "bad operand count"))?,
            operand_nodes: parts[2].parse().map_err(|_| fail(ln, "bad node count"))?,
        };

        let mut verts: Vec<LrgVertex> = Vec::with_capacity(n);
        let mut index = HashMap::with_capacity(n);
        for pos in 0..n {
            let (ln, vline) = lines
                .next()
                .ok_or_else(|| fail(0, "unexpected end of file"))?;
            let fields: Vec<&str> = vline.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(fail(ln, "expected `<id> <level> <d> <f> <delta>`"));
            }
            let raw: u64 = fields[0].parse().map_err(|_| fail(ln, "bad reach id"))?;
            let id = ReachId::new(raw).ok_or_else(|| fail(ln, "reach id must be positive"))?;
            let level: u32 = fields[1].parse().map_err(|_| fail(ln, "bad level"))?;
            let d: u32 = fields[2].parse().map_err(|_| fail(ln, "bad discovery time"))?;
            let f: u32 = fields[3].parse().map_err(|_| fail(ln, "bad subtree bound"))?;
            let delta: u32 = fields[4].parse().map_err(|_| fail(ln, "bad depth"))?;

            if d != pos as u32 + 1 {
                return Err(fail(ln, "vertices must appear in discovery order"));
            }
            if f < d || f > n as u32 {
                return Err(fail(ln, "subtree bound out of range"));
            }
            if level > top_level {
                return Err(fail(ln, "level above the top level"));
            }
            if (pos == 0) != (delta == 0) {
                return Err(fail(ln, "exactly the first vertex has depth 0"));
            }
            if pos == 0 && level != top_level {
                return Err(fail(ln, "root must sit at the top level"));
            }
            if index.insert(id, pos as u32).is_some() {
                return Err(fail(ln, "duplicate reach id"));
            }

            let (ln, cline) = lines
                .next()
                .ok_or_else(|| fail(0, "unexpected end of file"))?;
            let body = cline
                .strip_prefix("c:")
                .ok_or_else(|| fail(ln, "expected a `c:` cell line"))?;
            let mut cells = Vec::new();
            for tok in body.split(';') {
                let (cs, rs) = tok
                    .split_once(',')
                    .ok_or_else(|| fail(ln, "cells are `col,row`"))?;
                let col: i32 = cs.parse().map_err(|_| fail(ln, "bad cell column"))?;
                let row: i32 = rs.parse().map_err(|_| fail(ln, "bad cell row"))?;
                cells.push(Cell::new(col, row));
            }
            if cells.is_empty() {
                return Err(fail(ln, "a slab holds at least one cell"));
            }
            if !cells.windows(2).all(|w| w[0] < w[1]) {
                return Err(fail(ln, "slab cells must be sorted and unique"));
            }

            let node_count = trace_cells(&cells).node_count();
            verts.push(LrgVertex {
                id,
                level,
                d,
                f,
                delta,
                cells,
                node_count,
            });
        }
        if let Some((ln, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            let _ = extra;
            return Err(fail(ln, "trailing content after the last vertex"));
        }

        // The top level must be the smallest power step reaching the
        // deepest stored vertex, the same minimality the builder
        // guarantees.
        let lambda = (verts.iter().map(|v| v.delta).max().unwrap() as u64).max(1);
        let covers = |lvl: u32| (base as u64).pow(lvl) >= lambda;
        if !covers(top_level) || (top_level > 0 && covers(top_level - 1)) {
            return Err(fail(1, "top level inconsistent with stored depths"));
        }

        let mut depth_groups: HashMap<u32, Vec<u32>> = HashMap::new();
        for (pos, v) in verts.iter().enumerate() {
            depth_groups.entry(v.delta).or_default().push(pos as u32);
        }

        Ok(LrgIndex {
            base,
            top_level,
            verts,
            index,
            depth_groups,
            ledger,
        })
    }
}
