//! Exact boundary tracing for cell sets.
//!
//! The boundary of a cell set is the set of unit edges with an inside cell
//! on one side and an outside cell on the other. Each such edge is oriented
//! so the inside lies on its left; linking the oriented edges head to tail
//! then yields closed rectilinear rings with no arithmetic beyond integer
//! comparisons. Outer rings come out counter-clockwise and holes clockwise
//! as a direct consequence of the orientation choice.
//!
//! Where two cells touch only at a corner, four boundary edges meet at one
//! point. Taking the leftmost available turn on arrival keeps each walk on
//! the component whose interior it is tracking, so the two regions stay in
//! separate simple rings instead of fusing into a figure eight.
//!
//! Canonical form, relied on by the persistence formats and golden tests:
//! every ring lists only direction-change corners, starts at its
//! lexicographically smallest corner, and rings are ordered by start
//! corner. Tracing the same cells twice gives byte-identical output.

use std::collections::{HashMap, HashSet};

use super::{Cell, CellCatchment, Point};

/// One closed rectilinear ring. Consecutive points (wrapping around)
/// differ in exactly one coordinate; only corners are stored.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Ring {
    points: Vec<Point>,
}

impl Ring {
    /// Corner points in traversal order, starting at the smallest corner.
    /// The closing edge from the last point back to the first is implied.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Number of boundary nodes, i.e. corners.
    pub fn node_count(&self) -> usize {
        self.points.len()
    }

    /// Twice-the-area signed shoelace sum, positive for counter-clockwise.
    fn shoelace(&self) -> i64 {
        let pts = &self.points;
        let mut sum: i64 = 0;
        for i in 0..pts.len() {
            let a = pts[i];
            let b = pts[(i + 1) % pts.len()];
            sum += a.x as i64 * b.y as i64 - b.x as i64 * a.y as i64;
        }
        sum
    }

    /// Enclosed lattice area with sign: positive for outer rings,
    /// negative for holes.
    pub fn signed_area(&self) -> i64 {
        let s = self.shoelace();
        debug_assert_eq!(s % 2, 0);
        s / 2
    }

    pub fn is_hole(&self) -> bool {
        self.signed_area() < 0
    }

    /// Vertical edges as `(x, y_low, y_high)`, the crossing set used by
    /// parity tests.
    pub(crate) fn vertical_segments(&self) -> impl Iterator<Item = (i32, i32, i32)> + '_ {
        let pts = &self.points;
        (0..pts.len()).filter_map(move |i| {
            let a = pts[i];
            let b = pts[(i + 1) % pts.len()];
            (a.x == b.x).then(|| (a.x, a.y.min(b.y), a.y.max(b.y)))
        })
    }
}

/// The traced boundary of one cell set: outer rings and holes in canonical
/// order.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct BoundaryPolygon {
    rings: Vec<Ring>,
}

impl BoundaryPolygon {
    pub fn rings(&self) -> &[Ring] {
        &self.rings
    }

    /// Total corner count over all rings.
    pub fn node_count(&self) -> u64 {
        self.rings.iter().map(|r| r.node_count() as u64).sum()
    }

    /// Sum of signed ring areas; equals the cell count of the traced set.
    pub fn area(&self) -> i64 {
        self.rings.iter().map(Ring::signed_area).sum()
    }
}

/// Traces a catchment's boundary. See [`trace_cells`].
pub fn trace_boundary(catchment: &CellCatchment) -> BoundaryPolygon {
    trace_cells(catchment.cells())
}

/// Traces the boundary of a sorted, deduplicated cell slice.
///
/// An empty slice gives an empty polygon.
pub fn trace_cells(cells: &[Cell]) -> BoundaryPolygon {
    debug_assert!(
        cells.windows(2).all(|w| w[0] < w[1]),
        "cells must be sorted and unique"
    );
    if cells.is_empty() {
        return BoundaryPolygon::default();
    }

    let occupied: HashSet<Cell> = cells.iter().copied().collect();
    let inside = |col: i32, row: i32| occupied.contains(&Cell { col, row });

    // Directed boundary edges, inside on the left.
    let mut edges: Vec<(Point, Point)> = Vec::new();
    for &Cell { col: c, row: r } in cells {
        if !inside(c, r - 1) {
            edges.push((Point::new(c, r), Point::new(c + 1, r)));
        }
        if !inside(c, r + 1) {
            edges.push((Point::new(c + 1, r + 1), Point::new(c, r + 1)));
        }
        if !inside(c - 1, r) {
            edges.push((Point::new(c, r + 1), Point::new(c, r)));
        }
        if !inside(c + 1, r) {
            edges.push((Point::new(c + 1, r), Point::new(c + 1, r + 1)));
        }
    }
    edges.sort_unstable();

    // At most two edges leave any lattice point (two only at a corner
    // where diagonal cells meet).
    let mut out_at: HashMap<Point, (u32, u32)> = HashMap::with_capacity(edges.len());
    const NONE: u32 = u32::MAX;
    for (i, &(from, _)) in edges.iter().enumerate() {
        let slot = out_at.entry(from).or_insert((NONE, NONE));
        if slot.0 == NONE {
            slot.0 = i as u32;
        } else {
            debug_assert_eq!(slot.1, NONE);
            slot.1 = i as u32;
        }
    }

    let dir = |e: (Point, Point)| (e.1.x - e.0.x, e.1.y - e.0.y);
    // Preference on arrival: left turn, then straight, then right turn.
    // A reversal is geometrically impossible.
    let turn_rank = |d_in: (i32, i32), d_out: (i32, i32)| -> u8 {
        let cross = d_in.0 * d_out.1 - d_in.1 * d_out.0;
        if cross > 0 {
            0
        } else if d_in == d_out {
            1
        } else {
            debug_assert!(cross < 0, "U-turn in boundary walk");
            2
        }
    };

    let mut used = vec![false; edges.len()];
    let mut rings: Vec<Ring> = Vec::new();

    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut walk: Vec<Point> = vec![edges[start].0];
        let mut cur = start;
        loop {
            let (_, q) = edges[cur];
            let d_in = dir(edges[cur]);
            let (c0, c1) = out_at[&q];
            let mut next: Option<(u8, usize)> = None;
            for cand in [c0, c1] {
                if cand == NONE {
                    continue;
                }
                let cand = cand as usize;
                if used[cand] && cand != start {
                    continue;
                }
                let rank = turn_rank(d_in, dir(edges[cand]));
                if next.is_none_or(|(r, _)| rank < r) {
                    next = Some((rank, cand));
                }
            }
            let (_, chosen) = next.expect("boundary walk always continues");
            if chosen == start {
                break;
            }
            used[chosen] = true;
            walk.push(q);
            cur = chosen;
        }
        // A walk may pass a corner twice when absent cells meet there
        // diagonally; each pass-through pinches off one simple ring.
        for cycle in split_simple_cycles(walk) {
            rings.push(canonical_ring(&cycle));
        }
    }

    rings.sort_unstable_by(|a, b| a.points[0].cmp(&b.points[0]));
    debug_assert!(rings.windows(2).all(|w| w[0].points[0] < w[1].points[0]));
    BoundaryPolygon { rings }
}

/// Decomposes a closed lattice walk into vertex-simple cycles.
fn split_simple_cycles(walk: Vec<Point>) -> Vec<Vec<Point>> {
    let mut cycles = Vec::new();
    let mut pos: HashMap<Point, usize> = HashMap::with_capacity(walk.len());
    let mut path: Vec<Point> = Vec::with_capacity(walk.len());
    for p in walk {
        if let Some(&j) = pos.get(&p) {
            for q in &path[j..] {
                pos.remove(q);
            }
            cycles.push(path.split_off(j));
        }
        pos.insert(p, path.len());
        path.push(p);
    }
    cycles.push(path);
    cycles
}

/// Rotates a cycle to its lexicographically smallest corner (always a
/// turn, never mid-edge) and drops collinear points.
fn canonical_ring(cycle: &[Point]) -> Ring {
    let min = cycle
        .iter()
        .enumerate()
        .min_by_key(|&(_, p)| p)
        .expect("cycle is nonempty")
        .0;
    let mut rotated = Vec::with_capacity(cycle.len());
    rotated.extend_from_slice(&cycle[min..]);
    rotated.extend_from_slice(&cycle[..min]);
    Ring {
        points: compress_corners(&rotated),
    }
}

/// Drops collinear points from a cyclic unit-step walk, leaving corners.
fn compress_corners(walk: &[Point]) -> Vec<Point> {
    let n = walk.len();
    let mut out = Vec::new();
    for i in 0..n {
        let prev = walk[(i + n - 1) % n];
        let cur = walk[i];
        let next = walk[(i + 1) % n];
        let d_in = (cur.x - prev.x, cur.y - prev.y);
        let d_out = (next.x - cur.x, next.y - cur.y);
        if d_in != d_out {
            out.push(cur);
        }
    }
    debug_assert!(out.len() >= 4);
    debug_assert_eq!(out[0], walk[0], "ring start must be a corner");
    out
}

/// Recovers the cell set enclosed by `rings` with even-odd parity, the
/// inverse of [`trace_cells`].
///
/// For each cell row, a ray through the cell centers crosses the rings'
/// vertical edges; cells behind an odd number of crossings are inside.
/// This makes no use of ring orientation or order, so it double-checks
/// the tracer rather than mirroring it.
pub fn rasterize_rings(rings: &[Ring]) -> Vec<Cell> {
    let mut vsegs: Vec<(i32, i32, i32)> = Vec::new();
    for ring in rings {
        vsegs.extend(ring.vertical_segments());
    }
    if vsegs.is_empty() {
        return Vec::new();
    }
    let row_lo = vsegs.iter().map(|s| s.1).min().unwrap();
    let row_hi = vsegs.iter().map(|s| s.2).max().unwrap();

    let mut cells = Vec::new();
    for row in row_lo..row_hi {
        let mut xs: Vec<i32> = vsegs
            .iter()
            .filter(|&&(_, lo, hi)| lo <= row && row < hi)
            .map(|&(x, _, _)| x)
            .collect();
        xs.sort_unstable();
        debug_assert_eq!(xs.len() % 2, 0);
        for pair in xs.chunks_exact(2) {
            for col in pair[0]..pair[1] {
                cells.push(Cell::new(col, row));
            }
        }
    }
    cells.sort_unstable();
    cells
}
