//! The guide from `book/` mounted as doc pages, so every code block in
//! it compiles and runs with `cargo test`. Render the actual book with
//! `mdbook build book`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/networks.md")]
pub mod networks {}

#[doc = include_str!("../../../book/src/labeling.md")]
pub mod labeling {}

#[doc = include_str!("../../../book/src/catchments.md")]
pub mod catchments {}

#[doc = include_str!("../../../book/src/hierarchy.md")]
pub mod hierarchy {}

#[doc = include_str!("../../../book/src/stitching.md")]
pub mod stitching {}

#[doc = include_str!("../../../book/src/benchmarking.md")]
pub mod benchmarking {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
