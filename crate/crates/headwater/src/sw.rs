//! Stitched watershed queries against a built index.
//!
//! A watershed request for reach `v` never dissolves raw catchments. It
//! starts from the slab stored at `v`, which covers every upstream vertex
//! fewer than `b^level(v)` hops deeper, and then recurses: the upstream
//! vertices exactly `b^level(v)` hops deeper (the frontier) each
//! contribute their own stored slab the same way. Frontier depths are
//! again divisible by `b^level(v)`, so levels never drop along the walk
//! and the collected slabs tile the upstream set without overlap. The
//! result is a handful of pre-dissolved polygons to merge where the naive
//! route merges one polygon per upstream reach.

use thiserror::Error;

use crate::grid::{trace_cells, BoundaryPolygon, Cell};
use crate::lrg::LrgIndex;
use crate::network::ReachId;

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("reach {0} is not in the index")]
    UnknownReach(ReachId),
}

/// The level a query enters the index at for a vertex of depth `delta`:
/// the top level for the root, otherwise how many times `base` divides
/// `delta`, capped at the top level.
pub fn query_level(delta: u32, base: u32, top_level: u32) -> u32 {
    debug_assert!(base >= 2);
    if delta == 0 {
        return top_level;
    }
    let mut level = 0;
    let mut x = delta;
    while x.is_multiple_of(base) && level < top_level {
        x /= base;
        level += 1;
    }
    level
}

/// A dissolved watershed with the work it took to stitch it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WatershedResult {
    pub reach: ReachId,
    /// Every cell draining through the reach, sorted and unique.
    pub cells: Vec<Cell>,
    pub boundary: BoundaryPolygon,
    /// Owners of the stored slabs merged, in discovery order.
    pub sources: Vec<ReachId>,
    /// Stored slabs merged to assemble the watershed.
    pub merged_polygons: u64,
    /// Boundary corners those slabs carried into the merge.
    pub merged_nodes: u64,
}

impl WatershedResult {
    /// Watershed area in cells.
    pub fn area(&self) -> u64 {
        self.cells.len() as u64
    }
}

/// Positions of all slabs the query for the vertex at `start` touches.
fn collect_slabs(index: &LrgIndex, start: u32) -> Vec<u32> {
    let base = index.base() as u64;
    let mut slabs = Vec::new();
    let mut stack = vec![start];
    while let Some(p) = stack.pop() {
        slabs.push(p);
        let v = index.at(p);
        let frontier_depth = v.delta as u64 + base.pow(v.level);
        if frontier_depth > u32::MAX as u64 {
            continue;
        }
        // Subtree members occupy the position range [p, f); the ones at
        // the first depth past the slab demand their own slabs.
        let frontier = index.positions_at_depth_in(frontier_depth as u32, p, v.f);
        stack.extend_from_slice(frontier);
    }
    slabs.sort_unstable();
    slabs
}

/// Assembles the watershed of `v` by merging stored slabs.
pub fn stitch_watershed(index: &LrgIndex, v: ReachId) -> Result<WatershedResult, QueryError> {
    let start = index.position(v).ok_or(QueryError::UnknownReach(v))?;
    let slabs = collect_slabs(index, start);

    let mut cells: Vec<Cell> = Vec::new();
    let mut sources: Vec<ReachId> = Vec::with_capacity(slabs.len());
    let mut merged_nodes: u64 = 0;
    for &p in &slabs {
        let s = index.at(p);
        cells.extend_from_slice(s.cells());
        sources.push(s.id);
        merged_nodes += s.node_count();
    }
    cells.sort_unstable();
    debug_assert!(
        cells.windows(2).all(|w| w[0] < w[1]),
        "slabs must tile the watershed"
    );
    let boundary = trace_cells(&cells);

    Ok(WatershedResult {
        reach: v,
        cells,
        boundary,
        sources,
        merged_polygons: slabs.len() as u64,
        merged_nodes,
    })
}

/// The merge bill of [`stitch_watershed`] without materializing the
/// watershed: slab count and the boundary corners they carry.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Default)]
pub struct QueryCost {
    pub polygons: u64,
    pub nodes: u64,
}

pub fn query_cost(index: &LrgIndex, v: ReachId) -> Result<QueryCost, QueryError> {
    let start = index.position(v).ok_or(QueryError::UnknownReach(v))?;
    let slabs = collect_slabs(index, start);
    Ok(QueryCost {
        polygons: slabs.len() as u64,
        nodes: slabs.iter().map(|&p| index.at(p).node_count()).sum(),
    })
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, HashSet};

    use super::*;
    use crate::grid::CellCatchment;
    use crate::lrg::build_lrg;
    use crate::mns::mns_label;
    use crate::models::{generate_tree, SyntheticSpec};
    use crate::network::{normalize, Divergence, RawNetwork, StreamTree};

    fn rid(n: u64) -> ReachId {
        ReachId::new(n).unwrap()
    }

    fn tree_of(edges: &[(u64, u64)]) -> StreamTree {
        let mut raw = RawNetwork::new();
        for &(id, down) in edges {
            raw.push(rid(id), ReachId::new(down), Divergence::Major);
        }
        normalize(&raw).unwrap()
    }

    fn strip_catchments(labels: &crate::mns::MnsLabels) -> BTreeMap<ReachId, CellCatchment> {
        labels
            .discovery_order()
            .iter()
            .enumerate()
            .map(|(k, &id)| (id, CellCatchment::new(id, vec![Cell::new(k as i32, 0)])))
            .collect()
    }

    #[test]
    fn query_level_frozen() {
        assert_eq!(query_level(6, 2, 10), 1);
        assert_eq!(query_level(0, 2, 10), 10);
        assert_eq!(query_level(8, 2, 10), 3);
        assert_eq!(query_level(8, 2, 3), 3);
        assert_eq!(query_level(12, 2, 10), 2);
        assert_eq!(query_level(9, 3, 4), 2);
        assert_eq!(query_level(7, 2, 10), 0);
        assert_eq!(query_level(16, 2, 2), 2);
    }

    #[test]
    fn stored_levels_agree_with_query_level() {
        // The builder assigns levels by which merge stage froze a band;
        // this recomputes them arithmetically from depth alone.
        let spec = SyntheticSpec {
            n: 160,
            seed: 21,
            ..SyntheticSpec::default()
        };
        let tree = generate_tree(&spec);
        let labels = mns_label(&tree);
        let catchments = strip_catchments(&labels);
        for base in [2u32, 3, 4] {
            let idx = build_lrg(&labels, &catchments, base).unwrap();
            for v in idx.vertices() {
                assert_eq!(
                    v.level,
                    query_level(v.delta, base, idx.top_level()),
                    "level({}) at base {base}",
                    v.id
                );
            }
        }
    }

    #[test]
    fn path_query_shapes_frozen() {
        let tree = tree_of(&[(1, 0), (2, 1), (3, 2), (4, 3)]);
        let labels = mns_label(&tree);
        let idx = build_lrg(&labels, &strip_catchments(&labels), 2).unwrap();

        // Vertex 2 sits at level 0: its own thin slab plus the slab of
        // the level 1 vertex right below the window.
        let res = stitch_watershed(&idx, rid(2)).unwrap();
        assert_eq!(res.merged_polygons, 2);
        assert_eq!(
            res.cells,
            vec![Cell::new(1, 0), Cell::new(2, 0), Cell::new(3, 0)]
        );
        assert_eq!(res.area(), 3);

        // The root's slab already covers every depth.
        let res = stitch_watershed(&idx, rid(1)).unwrap();
        assert_eq!(res.merged_polygons, 1);
        assert_eq!(res.area(), 4);

        // A leaf is its own watershed.
        let res = stitch_watershed(&idx, rid(4)).unwrap();
        assert_eq!(res.merged_polygons, 1);
        assert_eq!(res.cells, vec![Cell::new(3, 0)]);
    }

    #[test]
    fn unknown_reach_is_rejected() {
        let tree = tree_of(&[(1, 0)]);
        let labels = mns_label(&tree);
        let idx = build_lrg(&labels, &strip_catchments(&labels), 2).unwrap();
        assert!(matches!(
            stitch_watershed(&idx, rid(5)),
            Err(QueryError::UnknownReach(_))
        ));
        assert!(matches!(
            query_cost(&idx, rid(5)),
            Err(QueryError::UnknownReach(_))
        ));
    }

    #[test]
    fn stitched_watersheds_match_reverse_reachability() {
        for seed in 0..5u64 {
            let spec = SyntheticSpec {
                n: 4 + (seed * 59) % 140,
                seed: 500 + seed,
                ..SyntheticSpec::default()
            };
            let tree = generate_tree(&spec);
            let labels = mns_label(&tree);
            let catchments = strip_catchments(&labels);
            for base in [2u32, 3] {
                let idx = build_lrg(&labels, &catchments, base).unwrap();
                for &v in tree.reach_ids() {
                    // Independent ground truth: walk upstream edges, pool
                    // the raw catchments.
                    let mut want: Vec<Cell> = Vec::new();
                    let mut queue = vec![v];
                    let mut seen: HashSet<ReachId> = HashSet::new();
                    while let Some(u) = queue.pop() {
                        if seen.insert(u) {
                            want.extend_from_slice(catchments[&u].cells());
                            queue.extend(tree.upstream(u).unwrap());
                        }
                    }
                    want.sort_unstable();

                    let res = stitch_watershed(&idx, v).unwrap();
                    assert_eq!(res.cells, want, "cells({v}) at base {base}");
                    assert_eq!(res.boundary, trace_cells(&want), "boundary({v})");
                    assert_eq!(res.area() as usize, seen.len());

                    let cost = query_cost(&idx, v).unwrap();
                    assert_eq!(cost.polygons, res.merged_polygons);
                    assert_eq!(cost.nodes, res.merged_nodes);
                }
            }
        }
    }

    #[test]
    fn frontier_levels_never_drop() {
        let spec = SyntheticSpec {
            n: 180,
            seed: 77,
            ..SyntheticSpec::default()
        };
        let tree = generate_tree(&spec);
        let labels = mns_label(&tree);
        let idx = build_lrg(&labels, &strip_catchments(&labels), 2).unwrap();

        for v in idx.vertices() {
            let frontier_depth = v.delta as u64 + 2u64.pow(v.level);
            if frontier_depth > u32::MAX as u64 {
                continue;
            }
            let pos = idx.position(v.id).unwrap();
            for &p in idx.positions_at_depth_in(frontier_depth as u32, pos, v.f) {
                let w = idx.at(p);
                assert!(
                    w.level >= v.level,
                    "frontier {} of {} dropped from level {} to {}",
                    w.id,
                    v.id,
                    v.level,
                    w.level
                );
            }
        }
    }

    #[test]
    fn merged_polygons_never_exceed_upstream_count() {
        let spec = SyntheticSpec {
            n: 120,
            seed: 13,
            ..SyntheticSpec::default()
        };
        let tree = generate_tree(&spec);
        let labels = mns_label(&tree);
        let catchments = strip_catchments(&labels);
        for base in [2u32, 3] {
            let idx = build_lrg(&labels, &catchments, base).unwrap();
            for &v in tree.reach_ids() {
                let upstream = labels.upstream_set(v).unwrap();
                let cost = query_cost(&idx, v).unwrap();
                assert!(cost.polygons <= upstream.len() as u64, "query({v})");

                // When the whole upstream run sits at level 0 every slab
                // is a single catchment, so the bound is tight.
                let all_floor = upstream
                    .iter()
                    .all(|&w| idx.stored(w).unwrap().level == 0);
                if all_floor {
                    assert_eq!(cost.polygons, upstream.len() as u64, "query({v})");
                }
            }
        }
    }

    #[test]
    fn queries_share_an_index_across_threads() {
        let spec = SyntheticSpec {
            n: 200,
            seed: 3,
            ..SyntheticSpec::default()
        };
        let tree = generate_tree(&spec);
        let labels = mns_label(&tree);
        let idx = build_lrg(&labels, &strip_catchments(&labels), 2).unwrap();

        let sequential: Vec<WatershedResult> = tree
            .reach_ids()
            .iter()
            .map(|&v| stitch_watershed(&idx, v).unwrap())
            .collect();

        let ids = tree.reach_ids();
        let chunks: Vec<&[ReachId]> = ids.chunks(ids.len() / 4 + 1).collect();
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .iter()
                .map(|chunk| {
                    let idx = &idx;
                    scope.spawn(move || {
                        chunk
                            .iter()
                            .map(|&v| stitch_watershed(idx, v).unwrap())
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            let mut parallel = Vec::new();
            for h in handles {
                parallel.extend(h.join().unwrap());
            }
            assert_eq!(parallel, sequential);
        });
    }
}
