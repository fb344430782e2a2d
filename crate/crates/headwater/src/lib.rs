/*!
Fast watershed delineation over vector stream networks.

A stream network is a tree of reaches draining toward a single outlet,
and every reach owns a catchment, the patch of land that drains into it
directly. The watershed of a reach is the dissolve of all catchments at
or above it. Computing that dissolve from scratch touches every
upstream polygon; storing every watershed precomputed pays an enormous
build cost up front. This crate takes the middle road: a layered index
of partial dissolves that is cheap to build, stores exactly one polygon
per reach, and answers any watershed query by stitching a handful of
slabs.

The pipeline has three stages, each usable on its own:

* [`mns`] labels the tree so that every upstream set becomes one
  contiguous interval of a single array.
* [`lrg`] groups reaches by the divisibility of their depth and
  dissolves catchments level by level into slabs.
* [`sw`] walks the stored layers to assemble any watershed from few,
  large pieces.

Around the core sit [`network`] (reading the reach table), [`grid`]
(raster catchments, boundary tracing, WKT output), and [`models`]
(synthetic instances and cost comparisons against the two classical
designs).

# Quick start

```
use headwater::grid::partition_from_raster;
use headwater::lrg::build_lrg;
use headwater::mns::mns_label;
use headwater::models::{generate, SyntheticSpec};
use headwater::sw::stitch_watershed;

# fn main() -> Result<(), Box<dyn std::error::Error>> {
let spec = SyntheticSpec { n: 200, seed: 7, ..SyntheticSpec::default() };
let (tree, raster) = generate(&spec)?;

let labels = mns_label(&tree);
let catchments = partition_from_raster(&raster, &tree)?;
let index = build_lrg(&labels, &catchments, 2)?;

// The outlet's watershed is the whole grid.
let watershed = stitch_watershed(&index, tree.root())?;
assert_eq!(watershed.area(), raster.cell_count());
# Ok(())
# }
```

Every file format in this crate is plain text and written
deterministically: the same inputs produce byte-identical outputs.
*/

pub mod grid;
pub mod lrg;
pub mod mns;
pub mod models;
pub mod network;
pub mod sw;

mod ioutil;

pub use crate::grid::{BoundaryPolygon, Cell, CellCatchment, GridRaster};
pub use crate::lrg::LrgIndex;
pub use crate::mns::MnsLabels;
pub use crate::network::{ReachId, StreamTree};
pub use crate::sw::WatershedResult;
