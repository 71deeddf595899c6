//! Fixtures shared by the benchmarks.

use pwillmore_core::flow::{initial_trial, FlowConfig, FlowState};
use pwillmore_core::{shapes, Mesh};

/// Ellipsoid with axes (1.5, 1, 1) at the given geodesic frequency.
pub fn ellipsoid(frequency: usize) -> Mesh {
    shapes::ellipsoid([1.5, 1.0, 1.0], frequency)
}

/// Initial flow state and Newton starting point for exponent `p`.
pub fn flow_fixture(frequency: usize, p: u32) -> (FlowState, Vec<f64>, FlowConfig) {
    let cfg = FlowConfig {
        p,
        fix_volume: true,
        ..Default::default()
    };
    let state = FlowState::new(ellipsoid(frequency), &cfg).expect("valid fixture");
    let trial = initial_trial(&state, &cfg);
    (state, trial, cfg)
}
