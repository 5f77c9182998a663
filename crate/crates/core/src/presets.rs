//! Reference parameter sets: one with negative mean drift, one with positive.

use crate::model::{KillRate, KouModel};

/// `a=−3.05, σ²=0.5, λ=4, p=0.75, c=2, b=8`, killed at `s=4/45`; `E ξ(1) < 0`.
pub fn negative_drift() -> (KouModel, KillRate) {
    (
        KouModel::with_up_probability(-3.05, 0.5, 4.0, 0.75, 2.0, 8.0).expect("valid preset"),
        KillRate::new(4.0 / 45.0).expect("valid preset"),
    )
}

/// `a=1, σ²=2, λ=6, p=0.2, c=2, b=8`, killed at `s=1`; `E ξ(1) > 0`.
pub fn positive_drift() -> (KouModel, KillRate) {
    (
        KouModel::with_up_probability(1.0, 2.0, 6.0, 0.2, 2.0, 8.0).expect("valid preset"),
        KillRate::new(1.0).expect("valid preset"),
    )
}
