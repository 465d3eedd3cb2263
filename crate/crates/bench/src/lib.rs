//! Shared fixtures for the benchmarks.

use cohortsgd_core::{generate, preset, CohortDataset, GenConfig};

/// The `strong` preset scaled to `n` individuals.
pub fn population(n: usize) -> CohortDataset {
    let cfg = GenConfig {
        n,
        ..preset("strong").expect("built-in preset")
    };
    generate(&cfg).expect("valid preset")
}
