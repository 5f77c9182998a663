//! Seeded Monte Carlo simulator of the Kou process.
//!
//! Paths follow the defining decomposition directly: exponential jump epochs,
//! double-exponential jump sizes and Gaussian diffusion increments on a grid of
//! width `substep` between jumps. With `bridge_correction`, a Brownian-bridge
//! crossing indicator `exp(−2·d₀·d₁/(σ²Δ))` is drawn per substep and boundary.
//!
//! Path `i` draws from its own ChaCha8 stream (`stream = i`) keyed by the run
//! seed, and results are assembled in path order, so every estimate depends only
//! on `(seed, n_paths, substep, bridge_correction)`, never on threading.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{KillRate, KouModel};
use crate::twosided::Interval;

/// Paths per work item, independent of the thread pool.
pub const CHUNK: usize = 4096;

/// Bridge crossing probabilities below `e^{−BRIDGE_CUTOFF}` are not sampled.
const BRIDGE_CUTOFF: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub n_paths: usize,
    pub substep: f64,
    pub bridge_correction: bool,
    pub execution: Execution,
}

impl SimConfig {
    pub fn new(seed: u64, n_paths: usize, substep: f64) -> Result<Self> {
        let cfg = Self {
            seed,
            n_paths,
            substep,
            bridge_correction: true,
            execution: Execution::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_bridge_correction(mut self, on: bool) -> Self {
        self.bridge_correction = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::InvalidParameter("n_paths must be at least 1".into()));
        }
        if !(self.substep.is_finite() && self.substep > 0.0) {
            return Err(Error::InvalidParameter("substep must be positive".into()));
        }
        Ok(())
    }

    fn path_rng(&self, base: &ChaCha8Rng, index: usize) -> ChaCha8Rng {
        let mut rng = base.clone();
        rng.set_stream(index as u64);
        rng
    }

    /// Runs `f` once per path, in path order.
    fn run<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&mut ChaCha8Rng) -> T + Sync + Send,
    {
        self.validate()?;
        let base = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.n_paths;
        let chunks = self.execution.map(n.div_ceil(CHUNK), |k| {
            (k * CHUNK..((k + 1) * CHUNK).min(n))
                .map(|i| f(&mut self.path_rng(&base, i)))
                .collect::<Vec<_>>()
        });
        Ok(chunks.into_iter().flatten().collect())
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_paths: 100_000,
            substep: 1e-3,
            bridge_correction: true,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitSide {
    Up,
    Down,
}

/// First exit from `(x−T, x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitSample {
    pub tau: f64,
    pub side: ExitSide,
    /// Distance beyond the crossed edge; zero for a diffusive exit.
    pub overshoot: f64,
    pub by_jump: bool,
}

/// State at `min(τ, θ_s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KilledSample {
    /// `τ > θ_s`.
    pub survived: bool,
    /// `ξ(θ_s)` when survived, the exit position otherwise.
    pub position: f64,
}

/// `(ξ⁺(θ_s), ξ⁻(θ_s))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremaSample {
    pub sup: f64,
    pub inf: f64,
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    /// Mean and standard error of `values`, summed in order.
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let (mut n, mut sum, mut sumsq) = (0usize, 0.0, 0.0);
        for v in values {
            n += 1;
            sum += v;
            sumsq += v * v;
        }
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                n,
            };
        }
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 {
            ((sumsq - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / nf).sqrt(),
            n,
        }
    }

    /// `|mean − target|` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target).abs() / self.std_error
    }
}

/// Discounted exit estimates `E[e^{−sτ}; ·]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitEstimates {
    pub up: Estimate,
    pub down: Estimate,
    pub up_creep: Estimate,
    pub up_jump: Estimate,
}

impl ExitEstimates {
    pub fn from_samples(samples: &[ExitSample], s: KillRate) -> Self {
        let weight = |e: &ExitSample, keep: bool| if keep { (-s.value() * e.tau).exp() } else { 0.0 };
        let est =
            |pred: &dyn Fn(&ExitSample) -> bool| Estimate::from_values(samples.iter().map(|e| weight(e, pred(e))));
        Self {
            up: est(&|e| e.side == ExitSide::Up),
            down: est(&|e| e.side == ExitSide::Down),
            up_creep: est(&|e| e.side == ExitSide::Up && !e.by_jump),
            up_jump: est(&|e| e.side == ExitSide::Up && e.by_jump),
        }
    }

    /// `(name, estimate)` pairs in a fixed order.
    pub fn named(&self) -> [(&'static str, Estimate); 4] {
        [
            ("q_up", self.up),
            ("q_down", self.down),
            ("joint_creep", self.up_creep),
            ("joint_jump", self.up_jump),
        ]
    }
}

enum Stop {
    Exit(ExitSide, f64, f64, bool),
    Horizon(f64),
}

/// One path until exit from `(lo, hi)` or until `horizon`.
struct PathSim<'a> {
    model: &'a KouModel,
    sigma: f64,
    substep: f64,
    bridge: bool,
}

impl<'a> PathSim<'a> {
    fn new(model: &'a KouModel, cfg: &SimConfig) -> Self {
        Self {
            model,
            sigma: model.sigma2.sqrt(),
            substep: cfg.substep,
            bridge: cfg.bridge_correction,
        }
    }

    fn jump(&self, rng: &mut ChaCha8Rng) -> f64 {
        let e: f64 = Exp1.sample(rng);
        if rng.random::<f64>() < self.model.p {
            e / self.model.c
        } else {
            -e / self.model.b
        }
    }

    fn bridge_crossed(&self, d0: f64, d1: f64, dt: f64, rng: &mut ChaCha8Rng) -> bool {
        let expo = 2.0 * d0 * d1 / (self.model.sigma2 * dt);
        expo < BRIDGE_CUTOFF && rng.random::<f64>() < (-expo).exp()
    }

    fn run(&self, lo: f64, hi: f64, horizon: f64, rng: &mut ChaCha8Rng) -> Stop {
        if hi <= 0.0 {
            return Stop::Exit(ExitSide::Up, 0.0, 0.0, false);
        }
        if lo >= 0.0 {
            return Stop::Exit(ExitSide::Down, 0.0, 0.0, false);
        }
        let (a, lambda) = (self.model.a, self.model.lambda);
        let (mut t, mut pos) = (0.0f64, 0.0f64);
        loop {
            let wait: f64 = Exp1.sample(rng);
            let jump_at = t + wait / lambda;
            let seg_end = jump_at.min(horizon);
            while t < seg_end {
                let dt = self.substep.min(seg_end - t);
                let z: f64 = StandardNormal.sample(rng);
                let next = pos + a * dt + self.sigma * dt.sqrt() * z;
                // Exits inside a substep are dated at its midpoint.
                let mid = t + 0.5 * dt;
                if next >= hi {
                    return Stop::Exit(ExitSide::Up, mid, 0.0, false);
                }
                if next <= lo {
                    return Stop::Exit(ExitSide::Down, mid, 0.0, false);
                }
                if self.bridge {
                    if self.bridge_crossed(hi - pos, hi - next, dt, rng) {
                        return Stop::Exit(ExitSide::Up, mid, 0.0, false);
                    }
                    if self.bridge_crossed(pos - lo, next - lo, dt, rng) {
                        return Stop::Exit(ExitSide::Down, mid, 0.0, false);
                    }
                }
                t += dt;
                pos = next;
            }
            if jump_at >= horizon {
                return Stop::Horizon(pos);
            }
            pos += self.jump(rng);
            if pos >= hi {
                return Stop::Exit(ExitSide::Up, t, pos - hi, true);
            }
            if pos <= lo {
                return Stop::Exit(ExitSide::Down, t, lo - pos, true);
            }
        }
    }
}

/// Exit samples for `(x−T, x)`, in path order.
pub fn sample_exit(model: &KouModel, interval: Interval, cfg: &SimConfig) -> Result<Vec<ExitSample>> {
    model.validate()?;
    let sim = PathSim::new(model, cfg);
    cfg.run(
        |rng| match sim.run(interval.lower(), interval.upper(), f64::INFINITY, rng) {
            Stop::Exit(side, tau, overshoot, by_jump) => ExitSample {
                tau,
                side,
                overshoot,
                by_jump,
            },
            Stop::Horizon(_) => unreachable!("infinite horizon"),
        },
    )
}

/// `E[e^{−sτ}; A₊]`, `E[e^{−sτ}; A₋]` and the creep/jump split of the former.
pub fn estimate_exit(model: &KouModel, interval: Interval, s: KillRate, cfg: &SimConfig) -> Result<ExitEstimates> {
    Ok(ExitEstimates::from_samples(&sample_exit(model, interval, cfg)?, s))
}

/// Runs each path to `min(τ, θ_s)` with an independent `θ_s ~ Exp(s)`.
pub fn sample_killed(model: &KouModel, interval: Interval, s: KillRate, cfg: &SimConfig) -> Result<Vec<KilledSample>> {
    model.validate()?;
    let sim = PathSim::new(model, cfg);
    let (lo, hi) = (interval.lower(), interval.upper());
    cfg.run(|rng| {
        let e: f64 = Exp1.sample(rng);
        match sim.run(lo, hi, e / s.value(), rng) {
            Stop::Horizon(position) => KilledSample {
                survived: true,
                position,
            },
            Stop::Exit(side, _, overshoot, _) => KilledSample {
                survived: false,
                position: match side {
                    ExitSide::Up => hi + overshoot,
                    ExitSide::Down => lo - overshoot,
                },
            },
        }
    })
}

/// Killed supremum and infimum samples.
///
/// Within each substep the maximum and minimum of the Brownian bridge are drawn
/// exactly given the endpoints, so each marginal is exact for any `substep`.
pub fn estimate_extrema(model: &KouModel, s: KillRate, cfg: &SimConfig) -> Result<Vec<ExtremaSample>> {
    model.validate()?;
    let (a, sigma2, lambda) = (model.a, model.sigma2, model.lambda);
    let sigma = sigma2.sqrt();
    let sim = PathSim::new(model, cfg);
    cfg.run(|rng| {
        let e: f64 = Exp1.sample(rng);
        let horizon = e / s.value();
        let (mut t, mut pos, mut sup, mut inf) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        loop {
            let wait: f64 = Exp1.sample(rng);
            let jump_at = t + wait / lambda;
            let seg_end = jump_at.min(horizon);
            while t < seg_end {
                let dt = cfg.substep.min(seg_end - t);
                let z: f64 = StandardNormal.sample(rng);
                let next = pos + a * dt + sigma * dt.sqrt() * z;
                let d = next - pos;
                let u_hi: f64 = rng.random();
                let u_lo: f64 = rng.random();
                let spread = |u: f64| (d * d - 2.0 * sigma2 * dt * (1.0 - u).ln()).sqrt();
                sup = sup.max(0.5 * (pos + next + spread(u_hi)));
                inf = inf.min(0.5 * (pos + next - spread(u_lo)));
                t += dt;
                pos = next;
            }
            if jump_at >= horizon {
                return ExtremaSample { sup, inf };
            }
            pos += sim.jump(rng);
            sup = sup.max(pos);
            inf = inf.min(pos);
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(1, 0, 1e-3).is_err());
        assert!(SimConfig::new(1, 10, 0.0).is_err());
        assert!(SimConfig::new(1, 10, 1e-3).is_ok());
    }

    #[test]
    fn estimate_statistics() {
        let e = Estimate::from_values([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn same_seed_same_samples_in_both_modes() {
        let (m, _) = presets::positive_drift();
        let iv = Interval::new(1.0, 2.0).unwrap();
        let cfg = SimConfig::new(9, 5000, 1e-2).unwrap();
        let a = sample_exit(&m, iv, &cfg).unwrap();
        let b = sample_exit(&m, iv, &cfg.with_execution(Execution::Sequential)).unwrap();
        assert_eq!(a, b);
        let c = sample_exit(&m, iv, &SimConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn classification_is_exclusive() {
        let (m, _) = presets::positive_drift();
        let iv = Interval::new(1.0, 2.0).unwrap();
        let cfg = SimConfig::new(3, 20_000, 1e-2).unwrap();
        for e in sample_exit(&m, iv, &cfg).unwrap() {
            assert!(e.tau >= 0.0);
            assert_eq!(e.by_jump, e.overshoot > 0.0);
        }
    }

    #[test]
    fn survivors_stay_inside() {
        let (m, s) = presets::negative_drift();
        let iv = Interval::new(0.5, 1.0).unwrap();
        let cfg = SimConfig::new(5, 20_000, 1e-2).unwrap();
        for k in sample_killed(&m, iv, s, &cfg).unwrap() {
            if k.survived {
                assert!(k.position > iv.lower() && k.position < iv.upper());
            } else {
                assert!(k.position >= iv.upper() || k.position <= iv.lower());
            }
        }
    }

    #[test]
    fn extrema_have_correct_sign() {
        let (m, s) = presets::positive_drift();
        let cfg = SimConfig::new(5, 10_000, 1e-2).unwrap();
        for e in estimate_extrema(&m, s, &cfg).unwrap() {
            assert!(e.sup >= 0.0 && e.inf <= 0.0);
        }
    }
}
