//! Shared fixtures for the criterion benchmarks.

use varcpd_core::{simulate, ChangeSpec, Dataset, VarModel};

/// `rows` observations of a VAR(1) with `A = 0.8 I_p` and unit noise.
pub fn null_stream(dim: usize, rows: usize, seed: u64) -> Dataset {
    let model = VarModel::diagonal(dim, 0.8, 1.0).expect("valid model");
    let spec = ChangeSpec::stationary(model, rows).expect("valid spec");
    simulate(&spec, seed).expect("stationary model")
}
