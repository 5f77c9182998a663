//! Exit from the interval `(x−T, x)` started at 0.
//!
//! The transform of the exit time through the upper edge is
//!
//! ```text
//! Q^T(x) = P{ξ⁺(θ_s) ≥ x} − C₁·J₁(x) − C₀·J₂(x)
//! J₁(x)  = ∫_{−T}^{x−T} P'₊(x−y−T)·P'₋(y) dy
//! J₂(x)  = ∫₀ˣ ∫_{−∞}^{x−y−T} s⁻¹λp·e^{−c(x−y−z)}·P'₋(z)·P'₊(y) dz dy
//! ```
//!
//! with `C₀, C₁` fixed by `Q^T(T) = 0` and `C₀ = 1 + ∫₀ᵀ Q^T(u)·c·e^{cu} du`.
//! `J₁` and `J₂` are finite convolutions of exponential sums, so `Q^T` is itself
//! an exponential sum in `x`.
//!
//! Internally the second boundary condition is divided by `e^{cT}`: the solver
//! works with `C₀' = C₀e^{−cT}` and `J₂' = J₂e^{cT}`, which keeps every quantity
//! O(1) for wide intervals. Accessors return the unscaled values.
//!
//! The lower edge is handled by duality, `Q_T(x) = Q^T_{−ξ}(T − x)`; the direct
//! lower-edge formula is kept as an audit path ([`ExitLaw::q_down_direct`]).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expsum::{cross_integral, ExpSum};
use crate::extrema::{extrema_law, ExtremaLaw};
use crate::model::{KillRate, KouModel};
use crate::onesided::PassageLaw;
use crate::roots::RootSet;

/// Largest admissible `|Q^T(T)|` and `|Q_T(0)|` after solving for the constants.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// Slack on the `0 ≤ x ≤ T` check.
const EDGE_SLACK: f64 = 1e-12;

/// Upper bound on `rate·T` for every exponential rate in play; beyond it the
/// exponential-sum terms leave the f64 range.
pub const MAX_EXPONENT: f64 = 700.0;

/// `(x−T, x)`: `x` is the distance to the upper edge, `width` is `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub x: f64,
    pub width: f64,
}

impl Interval {
    pub fn new(x: f64, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidParameter("T must be positive".into()));
        }
        if !(0.0..=width).contains(&x) {
            return Err(Error::InvalidParameter("x must lie in [0, T]".into()));
        }
        Ok(Self { x, width })
    }

    pub fn upper(&self) -> f64 {
        self.x
    }

    pub fn lower(&self) -> f64 {
        self.x - self.width
    }
}

/// `Q = tail − C₁·k₁ − C₀'·k₂` with `Q(edge) = 0` and `C₀' = damp + ∫₀ᵀ Q·weight`.
#[derive(Debug, Clone)]
struct BoundarySolution {
    q: ExpSum,
    k1: ExpSum,
    k2: ExpSum,
    c1: f64,
    c0_scaled: f64,
    /// `[[k₁(edge), k₂(edge)], [∫k₁w, 1 + ∫k₂w]]`
    matrix: [[f64; 2]; 2],
    /// `[tail(edge), damp + ∫tail·w]`
    rhs: [f64; 2],
}

impl BoundarySolution {
    fn solve(tail: ExpSum, k1: ExpSum, k2: ExpSum, weight: &ExpSum, damp: f64, edge: f64, width: f64) -> Result<Self> {
        let weighted = |f: &ExpSum| -> Result<f64> { f.mul(weight)?.integrate(0.0, width) };
        let matrix = [[k1.value(edge), k2.value(edge)], [weighted(&k1)?, 1.0 + weighted(&k2)?]];
        let rhs = [tail.value(edge), damp + weighted(&tail)?];
        let [c1, c0_scaled] = solve2(&matrix, rhs)?;
        let q = tail.add(&k1.scale(-c1))?.add(&k2.scale(-c0_scaled))?;
        let residual = q.value(edge).abs();
        if residual > BOUNDARY_TOL {
            return Err(Error::BoundaryResidual { residual });
        }
        Ok(Self {
            q,
            k1,
            k2,
            c1,
            c0_scaled,
            matrix,
            rhs,
        })
    }

    /// `k · M⁻¹ · rhs` evaluated as an exponential sum.
    fn correction(&self, rhs: [f64; 2]) -> Result<ExpSum> {
        let [a1, a0] = solve2(&self.matrix, rhs)?;
        self.k1.scale(a1).add(&self.k2.scale(a0))
    }
}

/// Gaussian elimination with partial pivoting on a 2×2 system.
fn solve2(m: &[[f64; 2]; 2], rhs: [f64; 2]) -> Result<[f64; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = (m[0][0] * m[1][1]).abs() + (m[0][1] * m[1][0]).abs();
    if !det.is_finite() || det.abs() <= 1e-12 * scale || scale == 0.0 {
        return Err(Error::Singular { det });
    }
    let (p, o) = if m[0][0].abs() >= m[1][0].abs() { (0, 1) } else { (1, 0) };
    let factor = m[o][0] / m[p][0];
    let y1 = (rhs[o] - factor * rhs[p]) / (m[o][1] - factor * m[p][1]);
    let y0 = (rhs[p] - m[p][1] * y1) / m[p][0];
    Ok([y0, y1])
}

/// Upper-edge problem for one model: `Q^T` and its building blocks.
#[derive(Debug, Clone)]
struct UpperExit {
    extrema: ExtremaLaw,
    c: f64,
    width: f64,
    solution: BoundarySolution,
}

impl UpperExit {
    fn build(model: &KouModel, s: KillRate, width: f64) -> Result<Self> {
        let extrema = extrema_law(model, s)?;
        let RootSet { r1, r2, .. } = *extrema.roots();
        let [a1m, a2m] = extrema.inf_coefficients();
        let c = model.c;

        let sup = extrema.sup_density().restrict(0.0, width)?;
        let tail = extrema.sup_tail_sum().restrict(0.0, width)?;
        // J₁(x) = ∫₀ˣ P'₊(x−t)·P'₋(t−T) dt
        let shifted_inf = extrema.inf_density().translate(width).restrict(0.0, width)?;
        let j1 = sup.convolve(&shifted_inf)?;
        // J₂'(x) = ∫₀ˣ P'₊(y)·G(x−y) dy, with the inner z-integral in closed form:
        // G(w) = e^{cT}·∫_{−∞}^{w−T} s⁻¹λp·e^{−c(w−z)}·P'₋(z) dz
        let k = model.lambda * model.p / s.value();
        let inner = ExpSum::new(
            [(a1m, r1), (a2m, r2)].map(|(coef, rate)| (k * coef / (c + rate) * (-rate * width).exp(), rate)),
            0.0,
            width,
        )?;
        let j2 = sup.convolve(&inner)?;

        let weight = ExpSum::new([(c * (-c * width).exp(), c)], 0.0, width)?;
        let solution = BoundarySolution::solve(tail, j1, j2, &weight, (-c * width).exp(), width, width)?;
        Ok(Self {
            extrema,
            c,
            width,
            solution,
        })
    }

    fn growth(&self) -> f64 {
        (self.c * self.width).exp()
    }
}

/// Direct evaluation of the lower-edge formula
///
/// ```text
/// Q_T(x) = P{ξ⁻ ≤ x−T} − C¹·∫ₓᵀ P'₋(x−y)P'₊(y) dy
///          − C⁰·∫_{x−T}^0 ∫_{x−y}^∞ s⁻¹λq·e^{b(x−y−z−T)}·P'₊(z)·P'₋(y) dz dy
/// ```
///
/// with `Q_T(0) = 0` and `C⁰ = 1 + ∫₀ᵀ Q_T(u)·b·e^{−b(u−T)} du`.
#[derive(Debug, Clone)]
struct LowerExit {
    b: f64,
    width: f64,
    solution: BoundarySolution,
}

impl LowerExit {
    fn build(model: &KouModel, s: KillRate, extrema: &ExtremaLaw, width: f64) -> Result<Self> {
        let RootSet { rho1, rho2, .. } = *extrema.roots();
        let [a1p, a2p] = extrema.sup_coefficients();
        let b = model.b;

        let tail = extrema.inf_tail_sum().translate(width).restrict(0.0, width)?;
        // Substituting w = T − x turns both integrals into convolutions in w.
        let reflected_inf = extrema.inf_density().reflect_about(0.0).restrict(0.0, width)?;
        let mirrored_sup = extrema.sup_density().reflect_about(width).restrict(0.0, width)?;
        let l1 = mirrored_sup.convolve(&reflected_inf)?.reflect_about(width);
        // e^{bT} times the inner z-integral, as a function of v = x − y.
        let k = model.lambda * model.q / s.value();
        let inner = ExpSum::new(
            [(a1p, rho1), (a2p, rho2)].map(|(coef, rate)| (k * coef / (b + rate), -rate)),
            0.0,
            width,
        )?;
        let l2 = inner
            .reflect_about(width)
            .convolve(&reflected_inf)?
            .reflect_about(width);

        let weight = ExpSum::new([(b, -b)], 0.0, width)?;
        let solution = BoundarySolution::solve(tail, l1, l2, &weight, (-b * width).exp(), 0.0, width)?;
        Ok(Self { b, width, solution })
    }
}

/// Closed-form exit law for a fixed model, kill rate and width `T`.
#[derive(Debug, Clone)]
pub struct ExitLaw {
    model: KouModel,
    s: KillRate,
    width: f64,
    upper: UpperExit,
    dual: UpperExit,
    lower: LowerExit,
}

impl ExitLaw {
    pub fn new(model: &KouModel, s: KillRate, width: f64) -> Result<Self> {
        model.validate()?;
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::InvalidParameter("T must be positive".into()));
        }
        let roots = crate::roots::solve_roots(model, s)?;
        let steepest = [model.c, model.b, roots.rho2, roots.r2].into_iter().fold(0.0, f64::max);
        if steepest * width > MAX_EXPONENT {
            return Err(Error::Domain(format!(
                "interval width {width} too large: rate·T = {:.1} exceeds {MAX_EXPONENT}",
                steepest * width
            )));
        }
        let upper = UpperExit::build(model, s, width)?;
        let dual = UpperExit::build(&model.dual(), s, width)?;
        let lower = LowerExit::build(model, s, &upper.extrema, width)?;
        Ok(Self {
            model: *model,
            s,
            width,
            upper,
            dual,
            lower,
        })
    }

    pub fn model(&self) -> &KouModel {
        &self.model
    }

    pub fn kill_rate(&self) -> KillRate {
        self.s
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn extrema(&self) -> &ExtremaLaw {
        &self.upper.extrema
    }

    pub fn roots(&self) -> &RootSet {
        self.upper.extrema.roots()
    }

    /// `(J₁(x), J₂(x))` for `0 ≤ x ≤ T`.
    pub fn j_integrals(&self, x: f64) -> Result<(f64, f64)> {
        let x = self.check_x(x)?;
        let sol = &self.upper.solution;
        Ok((sol.k1.value(x), sol.k2.value(x) / self.upper.growth()))
    }

    /// `(J₀, J₁, J₂)`: the tail and both integrals at `x = T`.
    pub fn boundary_integrals(&self) -> (f64, f64, f64) {
        let sol = &self.upper.solution;
        (sol.rhs[0], sol.matrix[0][0], sol.matrix[0][1] / self.upper.growth())
    }

    /// `(J̃₀, J̃₁, J̃₂)`: `∫₀ᵀ (·)(u)·c·e^{cu} du` of the tail, `J₁` and `J₂`.
    pub fn tilde_integrals(&self) -> (f64, f64, f64) {
        let sol = &self.upper.solution;
        let g = self.upper.growth();
        let damp = 1.0 / g;
        ((sol.rhs[1] - damp) * g, sol.matrix[1][0] * g, sol.matrix[1][1] - 1.0)
    }

    /// `(C₀, C₁)` from the linear solve.
    pub fn exit_constants(&self) -> (f64, f64) {
        let sol = &self.upper.solution;
        (sol.c0_scaled * self.upper.growth(), sol.c1)
    }

    /// `(C₀, C₁)` from the closed quotient formulas
    /// `C₀ = ((1+J̃₀)J₁ − J̃₁J₀)/D`, `C₁ = ((1+J̃₂)J₀ − J₂(1+J̃₀))/D`,
    /// `D = J₁(1+J̃₂) − J₂J̃₁`.
    pub fn quotient_constants(&self) -> Result<(f64, f64)> {
        let (j0, j1, j2) = self.boundary_integrals();
        let (t0, t1, t2) = self.tilde_integrals();
        let det = j1 * (1.0 + t2) - j2 * t1;
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Singular { det });
        }
        Ok((
            ((1.0 + t0) * j1 - t1 * j0) / det,
            ((1.0 + t2) * j0 - j2 * (1.0 + t0)) / det,
        ))
    }

    /// `(C⁰, C¹)` of the direct lower-edge formula.
    pub fn lower_constants(&self) -> (f64, f64) {
        let sol = &self.lower.solution;
        (sol.c0_scaled * (self.lower.b * self.lower.width).exp(), sol.c1)
    }

    /// `E[e^{−sτ}, A₊]`, exit through the upper edge.
    pub fn q_up(&self, x: f64) -> Result<f64> {
        let x = self.check_x(x)?;
        Ok(self.upper.solution.q.value(x))
    }

    /// `E[e^{−sτ}, A₋]`, computed as the upper-edge transform of `−ξ` at `T − x`.
    pub fn q_down(&self, x: f64) -> Result<f64> {
        let x = self.check_x(x)?;
        Ok(self.dual.solution.q.value(self.width - x))
    }

    /// `E[e^{−sτ}, A₋]` from the direct lower-edge formula.
    pub fn q_down_direct(&self, x: f64) -> Result<f64> {
        let x = self.check_x(x)?;
        Ok(self.lower.solution.q.value(x))
    }

    /// `E e^{−sτ} = Q^T + Q_T`.
    pub fn q_total(&self, x: f64) -> Result<f64> {
        Ok(self.q_up(x)? + self.q_down(x)?)
    }

    /// `Q^T` as an exponential sum on `[0, T]`.
    pub fn q_up_sum(&self) -> &ExpSum {
        &self.upper.solution.q
    }

    /// `x ↦ Q_T(x)` via duality, as an exponential sum on `[0, T]`.
    pub fn q_down_sum(&self) -> ExpSum {
        self.dual.solution.q.reflect_about(self.width)
    }

    fn check_x(&self, x: f64) -> Result<f64> {
        let slack = EDGE_SLACK * (1.0 + self.width);
        if x.is_nan() || x < -slack || x > self.width + slack {
            return Err(Error::OutOfSupport {
                x,
                lo: 0.0,
                hi: self.width,
            });
        }
        Ok(x.clamp(0.0, self.width))
    }
}

/// Exit law refined by the overshoot at the upper edge.
///
/// ```text
/// E[e^{−sτ}, γ=0, A₊]         = V₀(x) − (J₁(x), J₂(x))·M⁻¹·(V₀, Ṽ₀)
/// E[e^{−sτ+iαγ}, γ>0, A₊]     = c/(c−iα)·[V_>(x) − (J₁(x), J₂(x))·M⁻¹·(V_>, Ṽ_> + 1)]
/// M = [[J₁, J₂], [J̃₁, 1+J̃₂]]
/// ```
///
/// `V₀(x)`, `V_>(x)` are the one-sided creep and jump transforms.
#[derive(Debug, Clone)]
pub struct JointExitLaw {
    exit: ExitLaw,
    passage: PassageLaw,
    creep: ExpSum,
    jump: ExpSum,
    v_creep: [f64; 2],
    v_jump: [f64; 2],
}

impl JointExitLaw {
    pub fn new(model: &KouModel, s: KillRate, width: f64) -> Result<Self> {
        Self::from_exit(ExitLaw::new(model, s, width)?)
    }

    pub fn from_exit(exit: ExitLaw) -> Result<Self> {
        let width = exit.width;
        let c = exit.model.c;
        let passage = PassageLaw::new(*exit.roots(), c);
        let creep_one = passage.creep_sum().restrict(0.0, width)?;
        let jump_one = passage.overshoot_sum().restrict(0.0, width)?;
        let weight = ExpSum::new([(c * (-c * width).exp(), c)], 0.0, width)?;
        let weighted = |f: &ExpSum| -> Result<f64> { f.mul(&weight)?.integrate(0.0, width) };

        let v_creep = [creep_one.value(width), weighted(&creep_one)?];
        let v_jump = [jump_one.value(width), weighted(&jump_one)?];
        let sol = &exit.upper.solution;
        let creep = creep_one.add(&sol.correction(v_creep)?.scale(-1.0))?;
        let damp = (-c * width).exp();
        let jump = jump_one.add(&sol.correction([v_jump[0], v_jump[1] + damp])?.scale(-1.0))?;
        Ok(Self {
            exit,
            passage,
            creep,
            jump,
            v_creep,
            v_jump,
        })
    }

    pub fn exit(&self) -> &ExitLaw {
        &self.exit
    }

    pub fn passage(&self) -> &PassageLaw {
        &self.passage
    }

    /// `(V₀, V_>, Ṽ₀, Ṽ_>)`.
    pub fn v_values(&self) -> (f64, f64, f64, f64) {
        let g = self.exit.upper.growth();
        (self.v_creep[0], self.v_jump[0], self.v_creep[1] * g, self.v_jump[1] * g)
    }

    /// `[[J₁, J₂], [J̃₁, 1+J̃₂]]` at `x = T`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let (_, j1, j2) = self.exit.boundary_integrals();
        let (_, t1, t2) = self.exit.tilde_integrals();
        [[j1, j2], [t1, 1.0 + t2]]
    }

    /// `E[e^{−sτ}, γ_T=0, A₊]`: upper exit by diffusion.
    pub fn joint_creep(&self, x: f64) -> Result<f64> {
        let x = self.exit.check_x(x)?;
        Ok(self.creep.value(x))
    }

    /// `E[e^{−sτ+iαγ_T}, γ_T>0, A₊]`: upper exit by a jump.
    pub fn joint_jump(&self, x: f64, alpha: f64) -> Result<Complex64> {
        let x = self.exit.check_x(x)?;
        let c = self.exit.model.c;
        Ok(self.jump.value(x) * c / Complex64::new(c, -alpha))
    }

    pub fn creep_sum(&self) -> &ExpSum {
        &self.creep
    }

    pub fn jump_sum(&self) -> &ExpSum {
        &self.jump
    }

    /// Density of `ξ(θ_s)` on `{τ > θ_s}` for a start at distance `x` from the top.
    pub fn pre_exit_density(&self, x: f64) -> Result<PreExitDensity> {
        let x = self.exit.check_x(x)?;
        let ext = self.exit.extrema();
        let c = self.exit.model.c;
        let RootSet { r1, r2, .. } = *ext.roots();
        let [a1m, a2m] = ext.inf_coefficients();
        // ∫_{−∞}^{v} c·e^{−c(v−y)}·P'₋(y−x) dy for v ≤ x
        let kernel = ExpSum::new(
            [(a1m, r1), (a2m, r2)].map(|(coef, rate)| (c * coef / (c + rate) * (-rate * x).exp(), rate)),
            f64::NEG_INFINITY,
            x,
        )?;
        Ok(PreExitDensity {
            x,
            lower: x - self.exit.width,
            creep: self.creep.value(x),
            jump: self.jump.value(x),
            sup: ext.sup_density().clone(),
            inf: ext.inf_density().clone(),
            shifted_inf: ext.inf_density().translate(x),
            kernel,
        })
    }

    /// `h_s(T, x, z)`.
    pub fn density_before_exit(&self, x: f64, z: f64) -> Result<f64> {
        self.pre_exit_density(x)?.eval(z)
    }
}

/// `z ↦ h_s(T, x, z)` for a fixed start.
///
/// ```text
/// h(z) = ∫_{x−T}^{min(0,z)} P'₊(z−y)P'₋(y) dy
///      − E[e^{−sτ}, γ=0, A₊] · ∫_{x−T}^{z} P'₊(z−y)P'₋(y−x) dy
///      − E[e^{−sτ}, γ>0, A₊] · ∫_{x−T}^{z} P'₊(z−v) ∫_{−∞}^{v} c·e^{−c(v−y)}P'₋(y−x) dy dv
/// ```
#[derive(Debug, Clone)]
pub struct PreExitDensity {
    x: f64,
    lower: f64,
    creep: f64,
    jump: f64,
    sup: ExpSum,
    inf: ExpSum,
    shifted_inf: ExpSum,
    kernel: ExpSum,
}

impl PreExitDensity {
    pub fn support(&self) -> (f64, f64) {
        (self.lower, self.x)
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        if z.is_nan() || z < self.lower || z > self.x {
            return Err(Error::OutOfSupport {
                x: z,
                lo: self.lower,
                hi: self.x,
            });
        }
        let free = cross_integral(&self.sup, &self.inf, z, self.lower, z.min(0.0))?;
        let after_creep = cross_integral(&self.sup, &self.shifted_inf, z, self.lower, z)?;
        let after_jump = cross_integral(&self.sup, &self.kernel, z, self.lower, z)?;
        Ok(free - self.creep * after_creep - self.jump * after_jump)
    }
}
