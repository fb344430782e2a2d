//! Side-by-side cost accounting for all three designs.
//!
//! Costs are operand counts, not wall-clock times: how many polygons a
//! step feeds into dissolves and how many boundary nodes those polygons
//! carry. Query costs are arithmetic means over every vertex, so reports
//! from different network sizes stay comparable.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::grid::{trace_cells, CellCatchment};
use crate::lrg::{build_lrg, LrgIndex, UnionLedger};
use crate::mns::MnsLabels;
use crate::network::{ReachId, StreamTree};
use crate::sw::query_cost;

use super::reference::processed_build;
use super::ModelError;

/// Exact operand totals of one build or storage column.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Default)]
pub struct CountPair {
    pub polygons: u64,
    pub nodes: u64,
}

impl From<UnionLedger> for CountPair {
    fn from(l: UnionLedger) -> Self {
        CountPair {
            polygons: l.operands,
            nodes: l.operand_nodes,
        }
    }
}

/// Per-query means over all vertices.
#[derive(Copy, Clone, PartialEq, Debug, Default)]
pub struct AvgPair {
    pub polygons: f64,
    pub nodes: f64,
}

/// One model's column: build cost, resident cost, query cost.
#[derive(Copy, Clone, PartialEq, Debug, Default)]
pub struct ModelCosts {
    pub preprocessing: CountPair,
    pub storage: CountPair,
    pub query: AvgPair,
}

/// Relative savings of the indexed design, as fractions in `[0, 1]`
/// (negative if it loses). Build and storage compare against the
/// processed model, queries against the baseline.
#[derive(Copy, Clone, PartialEq, Debug, Default)]
pub struct ReductionSet {
    pub preprocessing_polygons: f64,
    pub preprocessing_nodes: f64,
    pub storage_nodes: f64,
    pub query_polygons: f64,
    pub query_nodes: f64,
}

/// The indexed design at one grouping base.
#[derive(Clone, PartialEq, Debug)]
pub struct LrgRow {
    pub base: u32,
    pub layer_count: u32,
    /// Mean frontier width over vertices whose slab demands one.
    pub mean_frontier: f64,
    pub costs: ModelCosts,
    pub reductions: ReductionSet,
}

#[derive(Clone, PartialEq, Debug)]
pub struct MetricsReport {
    pub vertex_count: u64,
    /// Tree height, the deepest vertex's hop distance.
    pub height: u32,
    pub bases: Vec<u32>,
    pub baseline: ModelCosts,
    /// Preprocessing follows the per-vertex rebuild convention, the
    /// number a flat recomputation of every watershed would pay.
    pub processed: ModelCosts,
    /// What the bottom-up precomputation actually consumed.
    pub processed_bottom_up: CountPair,
    pub lrg: Vec<LrgRow>,
}

fn reduce(proposed: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        0.0
    } else {
        1.0 - proposed / reference
    }
}

/// Runs all three models over one instance and fills the report.
pub fn compare_models(
    tree: &StreamTree,
    labels: &MnsLabels,
    catchments: &BTreeMap<ReachId, CellCatchment>,
    bases: &[u32],
) -> Result<MetricsReport, ModelError> {
    if bases.is_empty() {
        return Err(ModelError::NoBases);
    }
    let n = labels.len();

    // Baseline: no build, raw catchments resident, one merge per
    // upstream vertex per query. Per-vertex sums close over depths
    // because a vertex is merged once for itself and once per ancestor.
    let mut omega_total: u64 = 0;
    let mut merges_total: u64 = 0;
    let mut merge_nodes_total: u64 = 0;
    for pos in 0..n {
        let (id, _, _, delta) = labels.at_discovery(pos);
        let c = catchments.get(&id).expect("complete catchment map");
        let nodes = trace_cells(c.cells()).node_count();
        omega_total += nodes;
        merges_total += delta as u64 + 1;
        merge_nodes_total += nodes * (delta as u64 + 1);
    }
    let baseline = ModelCosts {
        preprocessing: CountPair::default(),
        storage: CountPair {
            polygons: n as u64,
            nodes: omega_total,
        },
        query: AvgPair {
            polygons: merges_total as f64 / n as f64,
            nodes: merge_nodes_total as f64 / n as f64,
        },
    };

    let model = processed_build(tree, labels, catchments);
    let processed = ModelCosts {
        preprocessing: model.naive_ledger().into(),
        storage: CountPair {
            polygons: model.storage_stats().polygons,
            nodes: model.storage_stats().nodes,
        },
        query: AvgPair {
            polygons: 1.0,
            nodes: 0.0,
        },
    };

    let mut lrg = Vec::with_capacity(bases.len());
    for &base in bases {
        let idx = build_lrg(labels, catchments, base)?;
        let mut query_polygons: u64 = 0;
        let mut query_nodes: u64 = 0;
        for &v in labels.discovery_order() {
            let cost = query_cost(&idx, v)?;
            query_polygons += cost.polygons;
            query_nodes += cost.nodes;
        }
        let costs = ModelCosts {
            preprocessing: idx.ledger().into(),
            storage: CountPair {
                polygons: idx.storage_stats().polygons,
                nodes: idx.storage_stats().nodes,
            },
            query: AvgPair {
                polygons: query_polygons as f64 / n as f64,
                nodes: query_nodes as f64 / n as f64,
            },
        };
        let reductions = if n == 1 {
            ReductionSet::default()
        } else {
            ReductionSet {
                preprocessing_polygons: reduce(
                    costs.preprocessing.polygons as f64,
                    processed.preprocessing.polygons as f64,
                ),
                preprocessing_nodes: reduce(
                    costs.preprocessing.nodes as f64,
                    processed.preprocessing.nodes as f64,
                ),
                storage_nodes: reduce(costs.storage.nodes as f64, processed.storage.nodes as f64),
                query_polygons: reduce(costs.query.polygons, baseline.query.polygons),
                query_nodes: reduce(costs.query.nodes, baseline.query.nodes),
            }
        };
        lrg.push(LrgRow {
            base,
            layer_count: idx.layer_count(),
            mean_frontier: mean_frontier(&idx),
            costs,
            reductions,
        });
    }

    Ok(MetricsReport {
        vertex_count: n as u64,
        height: labels.height(),
        bases: bases.to_vec(),
        baseline,
        processed,
        processed_bottom_up: model.bottom_up_ledger().into(),
        lrg,
    })
}

fn mean_frontier(idx: &LrgIndex) -> f64 {
    let base = idx.base() as u64;
    let mut demanded: u64 = 0;
    let mut internal: u64 = 0;
    for pos in 0..idx.len() as u32 {
        let v = idx.at(pos);
        let depth = v.delta as u64 + base.pow(v.level);
        if depth > u32::MAX as u64 {
            continue;
        }
        let width = idx.positions_at_depth_in(depth as u32, pos, v.f).len();
        if width > 0 {
            internal += 1;
            demanded += width as u64;
        }
    }
    if internal == 0 {
        0.0
    } else {
        demanded as f64 / internal as f64
    }
}

impl MetricsReport {
    /// Aligned plain-text table, one column per model.
    pub fn to_table(&self) -> String {
        let mut headers: Vec<String> = vec!["baseline".to_string()];
        headers.extend(self.lrg.iter().map(|r| format!("lrg_sw_b{}", r.base)));
        headers.push("processed".to_string());

        let columns: Vec<&ModelCosts> = std::iter::once(&self.baseline)
            .chain(self.lrg.iter().map(|r| &r.costs))
            .chain(std::iter::once(&self.processed))
            .collect();
        let rows: Vec<(&str, Vec<String>)> = vec![
            (
                "preprocessing polygons",
                columns.iter().map(|c| c.preprocessing.polygons.to_string()).collect(),
            ),
            (
                "preprocessing nodes",
                columns.iter().map(|c| c.preprocessing.nodes.to_string()).collect(),
            ),
            (
                "storage polygons",
                columns.iter().map(|c| c.storage.polygons.to_string()).collect(),
            ),
            (
                "storage nodes",
                columns.iter().map(|c| c.storage.nodes.to_string()).collect(),
            ),
            (
                "query avg polygons",
                columns.iter().map(|c| format!("{:.2}", c.query.polygons)).collect(),
            ),
            (
                "query avg nodes",
                columns.iter().map(|c| format!("{:.2}", c.query.nodes)).collect(),
            ),
        ];

        let label_w = rows.iter().map(|(l, _)| l.len()).max().unwrap();
        let col_w: Vec<usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| {
                rows.iter()
                    .map(|(_, cells)| cells[i].len())
                    .chain(std::iter::once(h.len()))
                    .max()
                    .unwrap()
            })
            .collect();

        let mut out = String::new();
        writeln!(out, "vertices: {}", self.vertex_count).unwrap();
        writeln!(out, "height (lambda): {}", self.height).unwrap();
        writeln!(out).unwrap();
        write!(out, "{:label_w$}", "").unwrap();
        for (h, w) in headers.iter().zip(&col_w) {
            write!(out, "  {h:>w$}").unwrap();
        }
        writeln!(out).unwrap();
        for (label, cells) in &rows {
            write!(out, "{label:label_w$}").unwrap();
            for (cell, w) in cells.iter().zip(&col_w) {
                write!(out, "  {cell:>w$}").unwrap();
            }
            writeln!(out).unwrap();
        }
        writeln!(out).unwrap();
        writeln!(
            out,
            "processed preprocessing is the per-vertex rebuild convention; \
             the bottom-up build itself consumed {} polygons and {} nodes.",
            self.processed_bottom_up.polygons, self.processed_bottom_up.nodes
        )
        .unwrap();
        for r in &self.lrg {
            writeln!(out).unwrap();
            writeln!(
                out,
                "lrg_sw_b{}: {} layers, mean frontier {:.2}",
                r.base, r.layer_count, r.mean_frontier
            )
            .unwrap();
            writeln!(
                out,
                "lrg_sw_b{} reductions: preprocessing polygons {:.2}%, \
                 preprocessing nodes {:.2}%, storage nodes {:.2}%, \
                 query polygons {:.2}%, query nodes {:.2}%",
                r.base,
                100.0 * r.reductions.preprocessing_polygons,
                100.0 * r.reductions.preprocessing_nodes,
                100.0 * r.reductions.storage_nodes,
                100.0 * r.reductions.query_polygons,
                100.0 * r.reductions.query_nodes,
            )
            .unwrap();
        }
        out
    }

    /// Machine-readable form: a `model,metric,value` line per cell, in a
    /// fixed order. Fractions carry six decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,metric,value\n");
        writeln!(out, "network,vertices,{}", self.vertex_count).unwrap();
        writeln!(out, "network,lambda,{}", self.height).unwrap();

        let mut costs = |model: &str, c: &ModelCosts| {
            writeln!(out, "{model},preprocessing_polygons,{}", c.preprocessing.polygons).unwrap();
            writeln!(out, "{model},preprocessing_nodes,{}", c.preprocessing.nodes).unwrap();
            writeln!(out, "{model},storage_polygons,{}", c.storage.polygons).unwrap();
            writeln!(out, "{model},storage_nodes,{}", c.storage.nodes).unwrap();
            writeln!(out, "{model},query_avg_polygons,{:.6}", c.query.polygons).unwrap();
            writeln!(out, "{model},query_avg_nodes,{:.6}", c.query.nodes).unwrap();
        };
        costs("baseline", &self.baseline);
        for r in &self.lrg {
            costs(&format!("lrg_sw_b{}", r.base), &r.costs);
        }
        costs("processed", &self.processed);

        writeln!(
            out,
            "processed_bottom_up,preprocessing_polygons,{}",
            self.processed_bottom_up.polygons
        )
        .unwrap();
        writeln!(
            out,
            "processed_bottom_up,preprocessing_nodes,{}",
            self.processed_bottom_up.nodes
        )
        .unwrap();

        for r in &self.lrg {
            let m = format!("lrg_sw_b{}", r.base);
            writeln!(out, "{m},layer_count,{}", r.layer_count).unwrap();
            writeln!(out, "{m},mean_frontier,{:.6}", r.mean_frontier).unwrap();
            writeln!(
                out,
                "{m},reduction_preprocessing_polygons,{:.6}",
                r.reductions.preprocessing_polygons
            )
            .unwrap();
            writeln!(
                out,
                "{m},reduction_preprocessing_nodes,{:.6}",
                r.reductions.preprocessing_nodes
            )
            .unwrap();
            writeln!(out, "{m},reduction_storage_nodes,{:.6}", r.reductions.storage_nodes).unwrap();
            writeln!(out, "{m},reduction_query_polygons,{:.6}", r.reductions.query_polygons)
                .unwrap();
            writeln!(out, "{m},reduction_query_nodes,{:.6}", r.reductions.query_nodes).unwrap();
        }
        out
    }
}
