//! Gridded catchment geometry.
//!
//! Every reach owns a catchment: the set of unit raster cells draining
//! directly into it. Cell `(col, row)` covers the unit square from corner
//! `(col, row)` to `(col + 1, row + 1)`, with rows growing upward, so cell
//! sets, boundary corners and areas all live on one integer lattice and
//! every operation here is exact. Dissolving catchments is plain set
//! union; area is a cell count; boundaries come out of [`trace_boundary`]
//! as closed rectilinear rings.

mod trace;
mod wkt;

pub use trace::{rasterize_rings, trace_boundary, trace_cells, BoundaryPolygon, Ring};
pub use wkt::{boundary_to_wkt, write_wkt};

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::network::{ReachId, StreamTree};

/// One unit raster cell, addressed by its lower-left corner.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Cell {
    pub col: i32,
    pub row: i32,
}

impl Cell {
    pub fn new(col: i32, row: i32) -> Self {
        Cell { col, row }
    }
}

/// A lattice corner point. Ordering is lexicographic on `(x, y)`, which is
/// what "a ring starts at its smallest corner" refers to.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub fn new(x: i32, y: i32) -> Self {
        Point { x, y }
    }
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("dissolve of an empty input list")]
    EmptyInput,
    #[error("reach {reach} owns no raster cell")]
    MissingCatchment { reach: ReachId },
    #[error("cell ({col}, {row}) is assigned to {owner}, which is not in the network")]
    UnknownOwner { owner: ReachId, col: i32, row: i32 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The cells draining directly into one reach. Cells are held sorted and
/// deduplicated, so equality is structural and unions are merges.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CellCatchment {
    owner: ReachId,
    cells: Vec<Cell>,
}

impl CellCatchment {
    pub fn new(owner: ReachId, mut cells: Vec<Cell>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        CellCatchment { owner, cells }
    }

    pub fn owner(&self) -> ReachId {
        self.owner
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Exact area in cell units.
    pub fn area(&self) -> u64 {
        self.cells.len() as u64
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }
}

/// Set-union of catchments. The result is owned by the first input; input
/// order otherwise does not matter, and inputs may overlap or repeat.
pub fn dissolve(inputs: &[&CellCatchment]) -> Result<CellCatchment, GridError> {
    let first = inputs.first().ok_or(GridError::EmptyInput)?;
    let mut cells: Vec<Cell> = Vec::with_capacity(inputs.iter().map(|c| c.cells.len()).sum());
    for c in inputs {
        cells.extend_from_slice(&c.cells);
    }
    Ok(CellCatchment::new(first.owner, cells))
}

/// A rectangular raster of reach assignments. `None` marks cells outside
/// every catchment.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GridRaster {
    width: u32,
    height: u32,
    owners: Vec<Option<ReachId>>,
}

impl GridRaster {
    pub fn new(width: u32, height: u32) -> Self {
        GridRaster {
            width,
            height,
            owners: vec![None; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn cell_count(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    fn at(&self, col: u32, row: u32) -> usize {
        debug_assert!(col < self.width && row < self.height);
        row as usize * self.width as usize + col as usize
    }

    pub fn owner(&self, col: u32, row: u32) -> Option<ReachId> {
        self.owners[self.at(col, row)]
    }

    pub fn set_owner(&mut self, col: u32, row: u32, owner: Option<ReachId>) {
        let i = self.at(col, row);
        self.owners[i] = owner;
    }

    pub fn assigned_cells(&self) -> u64 {
        self.owners.iter().filter(|o| o.is_some()).count() as u64
    }
}

/// Splits a raster into per-reach catchments.
///
/// Every tree vertex must own at least one cell and every assigned cell
/// must name a tree vertex; minors own nothing because they are not part
/// of the indexed tree.
pub fn partition_from_raster(
    raster: &GridRaster,
    tree: &StreamTree,
) -> Result<BTreeMap<ReachId, CellCatchment>, GridError> {
    let mut cells_by_owner: BTreeMap<ReachId, Vec<Cell>> = BTreeMap::new();
    for row in 0..raster.height {
        for col in 0..raster.width {
            if let Some(owner) = raster.owner(col, row) {
                if !tree.contains(owner) {
                    return Err(GridError::UnknownOwner {
                        owner,
                        col: col as i32,
                        row: row as i32,
                    });
                }
                cells_by_owner
                    .entry(owner)
                    .or_default()
                    .push(Cell::new(col as i32, row as i32));
            }
        }
    }
    for &v in tree.reach_ids() {
        if !cells_by_owner.contains_key(&v) {
            return Err(GridError::MissingCatchment { reach: v });
        }
    }
    Ok(cells_by_owner
        .into_iter()
        .map(|(owner, cells)| (owner, CellCatchment::new(owner, cells)))
        .collect())
}

// ── Raster file format ──────────────────────────────────────────────────
//
// First line `width height`, then `height` lines of `width` space-separated
// owner ids, row 0 first. 0 marks an unassigned cell.

pub fn parse_raster(text: &str) -> Result<GridRaster, GridError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(GridError::Parse {
        line: 1,
        msg: "empty raster file".into(),
    })?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(GridError::Parse {
            line: 1,
            msg: format!("expected `width height`, got {header:?}"),
        });
    }
    let parse_dim = |s: &str| -> Result<u32, GridError> {
        s.parse::<u32>().map_err(|_| GridError::Parse {
            line: 1,
            msg: format!("bad dimension {s:?}"),
        })
    };
    let width = parse_dim(dims[0])?;
    let height = parse_dim(dims[1])?;
    let mut raster = GridRaster::new(width, height);
    let mut rows_seen = 0u32;
    for (lineno, line) in lines {
        let lineno = lineno + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if rows_seen == height {
            return Err(GridError::Parse {
                line: lineno,
                msg: format!("more than {height} rows"),
            });
        }
        let mut cols = 0u32;
        for tok in line.split_whitespace() {
            let id: u64 = tok.parse().map_err(|_| GridError::Parse {
                line: lineno,
                msg: format!("bad owner id {tok:?}"),
            })?;
            if cols == width {
                return Err(GridError::Parse {
                    line: lineno,
                    msg: format!("more than {width} columns"),
                });
            }
            raster.set_owner(cols, rows_seen, ReachId::new(id));
            cols += 1;
        }
        if cols != width {
            return Err(GridError::Parse {
                line: lineno,
                msg: format!("expected {width} columns, got {cols}"),
            });
        }
        rows_seen += 1;
    }
    if rows_seen != height {
        return Err(GridError::Parse {
            line: 1,
            msg: format!("expected {height} rows, got {rows_seen}"),
        });
    }
    Ok(raster)
}

pub fn read_raster(path: &Path) -> Result<GridRaster, GridError> {
    let text = std::fs::read_to_string(path)?;
    parse_raster(&text)
}

pub fn raster_to_string(raster: &GridRaster) -> String {
    let mut out = String::new();
    out.push_str(&format!("{} {}\n", raster.width, raster.height));
    for row in 0..raster.height {
        for col in 0..raster.width {
            if col > 0 {
                out.push(' ');
            }
            match raster.owner(col, row) {
                Some(id) => out.push_str(&id.to_string()),
                None => out.push('0'),
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_raster(raster: &GridRaster, path: &Path) -> Result<(), GridError> {
    crate::ioutil::atomic_write(path, raster_to_string(raster).as_bytes())?;
    Ok(())
}
