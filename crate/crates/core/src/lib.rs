//! Two-sided boundary functionals of the Kou double-exponential jump diffusion
//!
//! ```text
//! ξ(t) = a·t + σ·W(t) + S(t),   S compound Poisson with rate λ,
//! jump density  p·c·e^{-cx} 1{x≥0} + q·b·e^{bx} 1{x<0}
//! ```
//!
//! Every quantity is evaluated at an independent exponential time θ_s (rate `s`),
//! which is equivalent to a Laplace transform in time. The crate computes, in
//! closed form:
//!
//! * the four real roots of the cumulant equation `k(r) = s` ([`roots`]);
//! * the killed supremum/infimum densities ([`extrema`]);
//! * one-sided passage transforms split into creep and jump parts ([`onesided`]);
//! * exit-time transforms through either edge of `(x−T, x)`, their split by
//!   overshoot, and the density of the killed position before exit ([`twosided`]).
//!
//! All densities and kernels are finite sums of exponentials, handled exactly by
//! [`expsum`]. A seeded Monte Carlo simulator ([`mc`]) serves as an independent
//! oracle, and [`verify`] bundles the invariant checks used by the CLI.

pub mod error;
pub mod exec;
pub mod expsum;
pub mod extrema;
pub mod mc;
pub mod model;
pub mod onesided;
pub mod prelimit;
pub mod presets;
pub mod quad;
pub mod roots;
pub mod stats;
pub mod twosided;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Execution;
pub use expsum::ExpSum;
pub use extrema::{ExtremaLaw, Side};
pub use mc::SimConfig;
pub use model::{KillRate, KouModel};
pub use onesided::PassageLaw;
pub use roots::RootSet;
pub use twosided::{ExitLaw, Interval, JointExitLaw};

pub use num_complex::Complex64;
