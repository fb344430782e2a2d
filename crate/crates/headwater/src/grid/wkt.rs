//! Well-known-text output for traced boundaries.
//!
//! A [`BoundaryPolygon`] is a flat ring list; WKT wants holes nested
//! inside the outer ring they belong to. Assignment goes through the
//! same even-odd parity test the rasterizer uses: a hole belongs to the
//! smallest outer ring containing its representative cell. Keeping the
//! canonical ring order from the tracer makes the text deterministic.

use std::io;
use std::path::Path;

use super::trace::{BoundaryPolygon, Ring};
use super::{Cell, Point};
use crate::ioutil::atomic_write;

/// Renders one `POLYGON(...)` per outer ring, one polygon per line,
/// holes attached to their enclosing outer. Rings are written closed,
/// with the first corner repeated at the end.
pub fn boundary_to_wkt(boundary: &BoundaryPolygon) -> String {
    let mut out = String::new();
    for group in group_rings(boundary.rings()) {
        out.push_str("POLYGON(");
        for (i, ring) in group.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write_ring(&mut out, ring);
        }
        out.push_str(")\n");
    }
    out
}

/// Writes [`boundary_to_wkt`] output to `path`, atomically.
pub fn write_wkt(path: &Path, boundary: &BoundaryPolygon) -> io::Result<()> {
    atomic_write(path, boundary_to_wkt(boundary).as_bytes())
}

fn write_ring(out: &mut String, ring: &Ring) {
    use std::fmt::Write;
    out.push('(');
    for p in ring.points() {
        write!(out, "{} {}, ", p.x, p.y).unwrap();
    }
    let first = ring.points()[0];
    write!(out, "{} {}", first.x, first.y).unwrap();
    out.push(')');
}

/// Groups a canonical ring list into polygons: each group is an outer
/// ring followed by its holes, groups in outer-ring order.
fn group_rings<'a>(rings: &'a [Ring]) -> Vec<Vec<&'a Ring>> {
    let outers: Vec<(usize, &Ring)> = rings
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.is_hole())
        .collect();
    let mut groups: Vec<Vec<&'a Ring>> = outers.iter().map(|&(_, r)| vec![r]).collect();

    for hole in rings.iter().filter(|r| r.is_hole()) {
        // The cell just above-right of a ring's start corner is always on
        // the ring's enclosed side, so it pins down the enclosing outer.
        let rep = rep_cell(hole);
        let parent = outers
            .iter()
            .enumerate()
            .filter(|(_, (_, outer))| contains_cell(outer, rep))
            .min_by_key(|(_, (_, outer))| outer.signed_area())
            .map(|(gi, _)| gi)
            .expect("hole must lie inside an outer ring");
        groups[parent].push(hole);
    }
    groups
}

fn rep_cell(ring: &Ring) -> Cell {
    let start: Point = ring.points()[0];
    Cell::new(start.x, start.y)
}

/// Even-odd test of the cell's center against the ring's vertical edges.
fn contains_cell(ring: &Ring, cell: Cell) -> bool {
    let crossings = ring
        .vertical_segments()
        .filter(|&(x, lo, hi)| x > cell.col && lo <= cell.row && cell.row < hi)
        .count();
    crossings % 2 == 1
}

#[cfg(test)]
mod tests {
    use super::super::trace::trace_cells;
    use super::*;

    fn cells(list: &[(i32, i32)]) -> Vec<Cell> {
        let mut v: Vec<Cell> = list.iter().map(|&(c, r)| Cell::new(c, r)).collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn single_cell_text() {
        let b = trace_cells(&cells(&[(0, 0)]));
        assert_eq!(
            boundary_to_wkt(&b),
            "POLYGON((0 0, 1 0, 1 1, 0 1, 0 0))\n"
        );
    }

    #[test]
    fn hole_joins_its_outer_ring() {
        let mut v = Vec::new();
        for r in 0..3 {
            for c in 0..3 {
                if !(c == 1 && r == 1) {
                    v.push((c, r));
                }
            }
        }
        let b = trace_cells(&cells(&v));
        assert_eq!(
            boundary_to_wkt(&b),
            "POLYGON((0 0, 3 0, 3 3, 0 3, 0 0),(1 1, 1 2, 2 2, 2 1, 1 1))\n"
        );
    }

    #[test]
    fn separate_components_get_separate_lines() {
        let b = trace_cells(&cells(&[(0, 0), (1, 1)]));
        assert_eq!(
            boundary_to_wkt(&b),
            "POLYGON((0 0, 1 0, 1 1, 0 1, 0 0))\nPOLYGON((1 1, 2 1, 2 2, 1 2, 1 1))\n"
        );
    }

    #[test]
    fn island_becomes_its_own_polygon() {
        // Outer block, moat hole, island in the middle: the hole belongs
        // to the block, the island starts a second polygon.
        let mut v = Vec::new();
        for r in 0..5 {
            for c in 0..5 {
                let moat = (1..=3).contains(&c) && (1..=3).contains(&r) && !(c == 2 && r == 2);
                if !moat {
                    v.push((c, r));
                }
            }
        }
        let b = trace_cells(&cells(&v));
        let text = boundary_to_wkt(&b);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            "POLYGON((0 0, 5 0, 5 5, 0 5, 0 0),(1 1, 1 4, 4 4, 4 1, 1 1))"
        );
        assert_eq!(lines[1], "POLYGON((2 2, 3 2, 3 3, 2 3, 2 2))");
    }

    #[test]
    fn written_file_matches_rendered_text() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.wkt");
        let b = trace_cells(&cells(&[(0, 0), (1, 0)]));
        write_wkt(&path, &b).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), boundary_to_wkt(&b));
    }
}
