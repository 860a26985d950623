//! Shared fixtures for the pipeline benchmarks.

use infladiff_core::{patch_with_min_tiles, TilingPatch};

/// A patch of at least `tiles` tiles for the non-Pisot member `m = 3`.
pub fn m3_patch(tiles: u64) -> TilingPatch {
    patch_with_min_tiles(3, tiles).expect("bench patch generation")
}
