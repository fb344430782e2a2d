//! Deterministic synthetic networks with raster catchments.
//!
//! Trees grow breadth first from the root, drawing each vertex's
//! upstream branch count from a weighted distribution. Rasters grow the
//! same way in space: every reach gets a seed cell, children next to
//! their parent's seed when possible, and the regions then claim free
//! neighbors one cell per reach per round until the grid is full. That
//! keeps regions 4-connected and roughly equal in area without any
//! geometry input.

use std::collections::VecDeque;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::grid::GridRaster;
use crate::network::{normalize, Divergence, RawNetwork, ReachId, StreamTree};

use super::ModelError;

/// Recipe for one synthetic instance. Equal specs generate identical
/// networks and rasters on every run and platform.
#[derive(Clone, Debug)]
pub struct SyntheticSpec {
    /// Reach count, at least 1.
    pub n: u64,
    pub seed: u64,
    /// Raster size. Leave either at 0 for a square with roughly four
    /// cells per reach.
    pub grid_width: u32,
    pub grid_height: u32,
    /// Upstream branch count distribution as (count, weight) pairs.
    pub branching: Vec<(u32, f64)>,
    /// Target mean frontier width to echo into reports. Generation
    /// ignores it.
    pub bandwidth_hint: Option<f64>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n: 64,
            seed: 0,
            grid_width: 0,
            grid_height: 0,
            branching: vec![(1, 0.8), (2, 0.2)],
            bandwidth_hint: None,
        }
    }
}

impl SyntheticSpec {
    fn dims(&self) -> (u32, u32) {
        if self.grid_width > 0 && self.grid_height > 0 {
            (self.grid_width, self.grid_height)
        } else {
            let side = (self.n as f64 * 4.0).sqrt().ceil().max(1.0) as u32;
            (side, side)
        }
    }
}

/// Grows a random tree with reach ids `1..=n` assigned in breadth-first
/// order from the root.
///
/// Panics on a spec with `n == 0` or unusable branching weights; those
/// are caller bugs, not data conditions.
pub fn generate_tree(spec: &SyntheticSpec) -> StreamTree {
    assert!(spec.n >= 1, "a network needs at least one reach");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let degrees: Vec<u64> = spec.branching.iter().map(|&(k, _)| k as u64).collect();
    let weights: Vec<f64> = spec.branching.iter().map(|&(_, w)| w).collect();
    let pick = WeightedIndex::new(&weights).expect("usable branching weights");

    let mut raw = RawNetwork::new();
    raw.push(ReachId::new(1).unwrap(), None, Divergence::Major);
    let mut queue: VecDeque<u64> = VecDeque::from([1]);
    let mut next: u64 = 2;
    while next <= spec.n {
        let parent = queue.pop_front().expect("forced branches keep growth alive");
        let mut k = degrees[pick.sample(&mut rng)];
        // The last open vertex must branch or growth would stall short
        // of n; conversely never grow past n.
        if queue.is_empty() {
            k = k.max(1);
        }
        k = k.min(spec.n - next + 1);
        for _ in 0..k {
            raw.push(
                ReachId::new(next).unwrap(),
                ReachId::new(parent),
                Divergence::Major,
            );
            queue.push_back(next);
            next += 1;
        }
    }
    normalize(&raw).expect("generated networks are well formed")
}

/// Generates a tree and a raster fully partitioned into per-reach
/// catchments.
pub fn generate(spec: &SyntheticSpec) -> Result<(StreamTree, GridRaster), ModelError> {
    let tree = generate_tree(spec);
    let (width, height) = spec.dims();
    if (width as u64) * (height as u64) < spec.n {
        return Err(ModelError::GridTooSmall {
            width,
            height,
            n: spec.n,
        });
    }
    let raster = grow_regions(&tree, width, height);
    Ok((tree, raster))
}

fn grow_regions(tree: &StreamTree, width: u32, height: u32) -> GridRaster {
    let n = tree.len();
    let ids = tree.reach_ids();
    let total = width as usize * height as usize;
    let at = |col: u32, row: u32| row as usize * width as usize + col as usize;

    let mut owner: Vec<Option<u32>> = vec![None; total];
    let mut seeds: Vec<(u32, u32)> = Vec::with_capacity(n);
    // Cells are only ever claimed, so the first free cell moves strictly
    // forward and one cursor serves every fallback scan.
    let mut free_cursor = 0usize;

    // Reach ids are breadth-first, so walking them in order places every
    // parent seed before its children ask for a neighboring cell.
    for (k, &id) in ids.iter().enumerate() {
        let want = if k == 0 {
            Some((width / 2, height / 2))
        } else {
            let parent = tree.downstream_of(id).unwrap().expect("non-root has a parent");
            let p = ids.binary_search(&parent).unwrap();
            let (pc, pr) = seeds[p];
            neighbors(pc, pr, width, height).find(|&(c, r)| owner[at(c, r)].is_none())
        };
        let (c, r) = want
            .filter(|&(c, r)| owner[at(c, r)].is_none())
            .unwrap_or_else(|| {
                // Crowded neighborhood: first free cell in row order.
                while owner[free_cursor].is_some() {
                    free_cursor += 1;
                }
                (
                    (free_cursor % width as usize) as u32,
                    (free_cursor / width as usize) as u32,
                )
            });
        owner[at(c, r)] = Some(k as u32);
        seeds.push((c, r));
    }

    // Round-robin growth, one cell per reach per round. A front cell
    // stays queued while it still has free neighbors; once saturated it
    // never gains new ones, so dropping it is final.
    let mut queues: Vec<VecDeque<(u32, u32)>> =
        seeds.iter().map(|&s| VecDeque::from([s])).collect();
    let mut remaining = total - n;
    while remaining > 0 {
        for (k, queue) in queues.iter_mut().enumerate() {
            while let Some(&(c, r)) = queue.front() {
                let free =
                    neighbors(c, r, width, height).find(|&(nc, nr)| owner[at(nc, nr)].is_none());
                match free {
                    Some((nc, nr)) => {
                        owner[at(nc, nr)] = Some(k as u32);
                        queue.push_back((nc, nr));
                        remaining -= 1;
                        break;
                    }
                    None => {
                        queue.pop_front();
                    }
                }
            }
            if remaining == 0 {
                break;
            }
        }
    }

    let mut raster = GridRaster::new(width, height);
    for row in 0..height {
        for col in 0..width {
            let k = owner[at(col, row)].expect("growth fills the grid");
            raster.set_owner(col, row, Some(ids[k as usize]));
        }
    }
    raster
}

fn neighbors(c: u32, r: u32, width: u32, height: u32) -> impl Iterator<Item = (u32, u32)> {
    [(1i64, 0i64), (0, 1), (-1, 0), (0, -1)]
        .into_iter()
        .filter_map(move |(dc, dr)| {
            let nc = c as i64 + dc;
            let nr = r as i64 + dr;
            (nc >= 0 && nr >= 0 && nc < width as i64 && nr < height as i64)
                .then_some((nc as u32, nr as u32))
        })
}
