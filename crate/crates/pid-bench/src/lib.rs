//! Shared fixtures for the criterion benches: deterministic rasters large
//! enough to exercise the hot paths without dominating wall time.

use pid_core::dataset::{generate_sheet, GenConfig, Sheet};

pub fn bench_sheet() -> Sheet {
    let cfg = GenConfig {
        width: 1024,
        height: 704,
        min_buses: 3,
        max_buses: 3,
        symbols_per_sheet: 4,
        ..GenConfig::default()
    };
    generate_sheet(&cfg, 0).expect("bench sheet")
}
