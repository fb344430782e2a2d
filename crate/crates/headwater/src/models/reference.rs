//! The two reference designs: dissolve per query, or precompute all.

use std::collections::BTreeMap;

use crate::grid::{trace_cells, BoundaryPolygon, Cell, CellCatchment};
use crate::lrg::{StorageStats, UnionLedger};
use crate::mns::MnsLabels;
use crate::network::{ReachId, StreamTree};
use crate::sw::{QueryError, WatershedResult};

/// Answers one watershed query the flat way: every upstream reach
/// contributes its raw catchment to a single dissolve.
///
/// The merge bill grows with the upstream count, which is the entire
/// point of comparing against it.
pub fn baseline_query(
    labels: &MnsLabels,
    catchments: &BTreeMap<ReachId, CellCatchment>,
    v: ReachId,
) -> Result<WatershedResult, QueryError> {
    let upstream = labels
        .upstream_set(v)
        .map_err(|_| QueryError::UnknownReach(v))?;
    let mut cells: Vec<Cell> = Vec::new();
    let mut merged_nodes: u64 = 0;
    for &w in upstream {
        let c = catchments.get(&w).expect("complete catchment map");
        cells.extend_from_slice(c.cells());
        merged_nodes += trace_cells(c.cells()).node_count();
    }
    cells.sort_unstable();
    cells.dedup();
    let boundary = trace_cells(&cells);
    Ok(WatershedResult {
        reach: v,
        cells,
        boundary,
        sources: upstream.to_vec(),
        merged_polygons: upstream.len() as u64,
        merged_nodes,
    })
}

/// Everything precomputed: one stored watershed boundary per reach, plus
/// the ledgers describing what the precomputation cost.
#[derive(Clone, Debug)]
pub struct ProcessedModel {
    boundaries: BTreeMap<ReachId, BoundaryPolygon>,
    bottom_up: UnionLedger,
    naive: UnionLedger,
    storage: StorageStats,
}

impl ProcessedModel {
    pub fn boundary(&self, v: ReachId) -> Option<&BoundaryPolygon> {
        self.boundaries.get(&v)
    }

    pub fn boundaries(&self) -> &BTreeMap<ReachId, BoundaryPolygon> {
        &self.boundaries
    }

    /// Union work the bottom-up build actually performed: each catchment
    /// once plus each child watershed once, `2|V| - 1` operands.
    pub fn bottom_up_ledger(&self) -> UnionLedger {
        self.bottom_up
    }

    /// Union work of rebuilding every watershed from raw catchments
    /// independently. Nothing runs that way here; the count is the
    /// comparable cost of the flat approach.
    pub fn naive_ledger(&self) -> UnionLedger {
        self.naive
    }

    pub fn storage_stats(&self) -> StorageStats {
        self.storage
    }
}

/// Precomputes every watershed bottom up, children before parents, so
/// each vertex dissolves its own catchment with already-dissolved child
/// results instead of raw catchments.
pub fn processed_build(
    tree: &StreamTree,
    labels: &MnsLabels,
    catchments: &BTreeMap<ReachId, CellCatchment>,
) -> ProcessedModel {
    let n = labels.len();

    // Raw catchment boundary nodes by discovery position, with a prefix
    // sum so any subtree's total is one subtraction.
    let mut omega_nodes: Vec<u64> = Vec::with_capacity(n);
    for pos in 0..n {
        let (id, ..) = labels.at_discovery(pos);
        let c = catchments.get(&id).expect("complete catchment map");
        omega_nodes.push(trace_cells(c.cells()).node_count());
    }
    let mut omega_prefix: Vec<u64> = Vec::with_capacity(n + 1);
    omega_prefix.push(0);
    for pos in 0..n {
        omega_prefix.push(omega_prefix[pos] + omega_nodes[pos]);
    }

    let mut pool: Vec<Option<Vec<Cell>>> = (0..n).map(|_| None).collect();
    let mut watershed_nodes: Vec<u64> = vec![0; n];
    let mut boundaries: BTreeMap<ReachId, BoundaryPolygon> = BTreeMap::new();
    let mut bottom_up = UnionLedger::default();
    let mut naive = UnionLedger::default();
    let mut storage_nodes: u64 = 0;

    // Reverse discovery order puts every child before its parent.
    for pos in (0..n).rev() {
        let (id, d, f, _) = labels.at_discovery(pos);
        let c = catchments.get(&id).expect("complete catchment map");
        let mut cells: Vec<Cell> = c.cells().to_vec();
        bottom_up.operands += 1;
        bottom_up.operand_nodes += omega_nodes[pos];
        for child in tree.upstream(id).expect("labelled reach") {
            let child_pos = (labels.d(child).expect("labelled reach") - 1) as usize;
            let sub = pool[child_pos].take().expect("children precede parents");
            bottom_up.operands += 1;
            bottom_up.operand_nodes += watershed_nodes[child_pos];
            cells.extend_from_slice(&sub);
        }
        cells.sort_unstable();
        cells.dedup();
        let boundary = trace_cells(&cells);
        watershed_nodes[pos] = boundary.node_count();
        storage_nodes += boundary.node_count();
        boundaries.insert(id, boundary);
        pool[pos] = Some(cells);

        // The flat rebuild of this watershed would merge one catchment
        // per upstream vertex, a contiguous discovery range.
        naive.operands += (f - d + 1) as u64;
        naive.operand_nodes += omega_prefix[f as usize] - omega_prefix[(d - 1) as usize];
    }

    ProcessedModel {
        boundaries,
        bottom_up,
        naive,
        storage: StorageStats {
            polygons: n as u64,
            nodes: storage_nodes,
        },
    }
}
