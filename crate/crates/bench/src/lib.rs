//! Shared fixtures for the benchmarks.

use hdmi_core::simulation::{ar_design, simulate, OutcomeVariant, SimulationMode, SimulationSpec, SnrScaling};
use hdmi_core::DatasetHandle;

/// AR(0.5) design with a linear continuous outcome on ten true columns.
pub fn screening_fixture(rows: usize, cols: usize) -> (DatasetHandle, Vec<f64>) {
    let data = ar_design(rows, cols, 0.5, 11).expect("design");
    let spec = SimulationSpec {
        snr_scaling: SnrScaling::PerObservation,
        ..SimulationSpec::new(10.min(cols), SimulationMode::Linear, OutcomeVariant::Continuous, 3)
    };
    let y = simulate(&data, &spec).expect("simulation").y;
    (data, y)
}

/// Correlated Gaussian pair of length `n`.
pub fn pair(n: usize) -> (Vec<f64>, Vec<f64>) {
    let data = ar_design(n, 2, 0.6, 5).expect("design");
    (data.column(0).expect("column"), data.column(1).expect("column"))
}
