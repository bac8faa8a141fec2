//! Fixtures shared by the benchmarks in `benches/`.

use linproc_core::process::{CoefficientModel, InnovationSpec, ProcessSpec};

/// MA(2) process used throughout the benchmarks.
pub fn ma2(seed: u64) -> ProcessSpec {
    ProcessSpec::new(
        CoefficientModel::Ma { theta: vec![0.6, -0.3] },
        InnovationSpec::default(),
    )
    .with_seed(seed)
}

/// AR(1) with a long truncation horizon.
pub fn ar1(seed: u64) -> ProcessSpec {
    ProcessSpec::new(CoefficientModel::Ar1 { phi: 0.9 }, InnovationSpec::default()).with_seed(seed)
}
