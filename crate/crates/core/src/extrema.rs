//! Densities of the killed supremum `ξ⁺(θ_s)` and infimum `ξ⁻(θ_s)`.
//!
//! ```text
//! P'₊(x) = A₁⁺e^{−ρ₁x} + A₂⁺e^{−ρ₂x},   x > 0
//! P'₋(x) = A₁⁻e^{r₁x}  + A₂⁻e^{r₂x},    x < 0
//! Aᵢ⁺ = (−1)^{i−1}·(c−ρᵢ)/c·ρ₁ρ₂/(ρ₂−ρ₁)
//! Aᵢ⁻ = (−1)^{i−1}·(b−rᵢ)/b·r₁r₂/(r₂−r₁)
//! ```
//!
//! With `σ² > 0` neither extremum has an atom at zero, so both densities carry
//! unit mass.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expsum::ExpSum;
use crate::model::{KillRate, KouModel};
use crate::roots::{solve_roots, RootSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Sup,
    Inf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremaLaw {
    sup_density: ExpSum,
    inf_density: ExpSum,
    sup_coef: [f64; 2],
    inf_coef: [f64; 2],
    roots: RootSet,
}

pub fn extrema_law(model: &KouModel, s: KillRate) -> Result<ExtremaLaw> {
    Ok(ExtremaLaw::from_roots(model, solve_roots(model, s)?))
}

impl ExtremaLaw {
    pub fn from_roots(model: &KouModel, roots: RootSet) -> Self {
        let RootSet { rho1, rho2, r1, r2, .. } = roots;
        let up = rho1 * rho2 / (rho2 - rho1) / model.c;
        let sup_coef = [(model.c - rho1) * up, -(model.c - rho2) * up];
        let down = r1 * r2 / (r2 - r1) / model.b;
        let inf_coef = [(model.b - r1) * down, -(model.b - r2) * down];
        let sup_density = ExpSum::new([(sup_coef[0], -rho1), (sup_coef[1], -rho2)], 0.0, f64::INFINITY)
            .expect("positive roots give decaying terms");
        let inf_density = ExpSum::new([(inf_coef[0], r1), (inf_coef[1], r2)], f64::NEG_INFINITY, 0.0)
            .expect("positive magnitudes give decaying terms");
        Self {
            sup_density,
            inf_density,
            sup_coef,
            inf_coef,
            roots,
        }
    }

    pub fn roots(&self) -> &RootSet {
        &self.roots
    }

    /// `(A₁⁺, A₂⁺)`, paired with rates `−ρ₁, −ρ₂`.
    pub fn sup_coefficients(&self) -> [f64; 2] {
        self.sup_coef
    }

    /// `(A₁⁻, A₂⁻)`, paired with rates `r₁, r₂`.
    pub fn inf_coefficients(&self) -> [f64; 2] {
        self.inf_coef
    }

    /// `P'₊` on `[0, ∞)`.
    pub fn sup_density(&self) -> &ExpSum {
        &self.sup_density
    }

    /// `P'₋` on `(−∞, 0]`.
    pub fn inf_density(&self) -> &ExpSum {
        &self.inf_density
    }

    /// `A₁⁺/ρ₁ + A₂⁺/ρ₂`, the total mass of the supremum law.
    pub fn sup_mass(&self) -> f64 {
        self.sup_coef[0] / self.roots.rho1 + self.sup_coef[1] / self.roots.rho2
    }

    pub fn inf_mass(&self) -> f64 {
        self.inf_coef[0] / self.roots.r1 + self.inf_coef[1] / self.roots.r2
    }

    /// `P{ξ⁺(θ_s) ≥ x}`; equals 1 for `x ≤ 0`.
    pub fn sup_tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        self.sup_tail_sum().value(x)
    }

    /// `P{ξ⁺(θ_s) ≥ x}` as an exponential sum on `[0, ∞)`.
    pub fn sup_tail_sum(&self) -> ExpSum {
        let RootSet { rho1, rho2, .. } = self.roots;
        ExpSum::new(
            [(self.sup_coef[0] / rho1, -rho1), (self.sup_coef[1] / rho2, -rho2)],
            0.0,
            f64::INFINITY,
        )
        .expect("decaying terms")
    }

    /// `P{ξ⁻(θ_s) ≤ y}`; equals 1 for `y ≥ 0`.
    pub fn inf_tail(&self, y: f64) -> f64 {
        if y >= 0.0 {
            return 1.0;
        }
        self.inf_tail_sum().value(y)
    }

    /// `P{ξ⁻(θ_s) ≤ y}` as an exponential sum on `(−∞, 0]`.
    pub fn inf_tail_sum(&self) -> ExpSum {
        let RootSet { r1, r2, .. } = self.roots;
        ExpSum::new(
            [(self.inf_coef[0] / r1, r1), (self.inf_coef[1] / r2, r2)],
            f64::NEG_INFINITY,
            0.0,
        )
        .expect("decaying terms")
    }

    /// `E e^{r ξ^±(θ_s)}`: `Σ Aᵢ⁺/(ρᵢ − r)` or `Σ Aᵢ⁻/(rᵢ + r)`.
    ///
    /// Defined for `Re r < ρ₁` (sup) or `Re r > −r₁` (inf), which includes the
    /// imaginary axis.
    pub fn factor_transform(&self, r: Complex64, side: Side) -> Result<Complex64> {
        let RootSet { rho1, rho2, r1, r2, .. } = self.roots;
        match side {
            Side::Sup if r.re < rho1 => Ok(self.sup_coef[0] / (rho1 - r) + self.sup_coef[1] / (rho2 - r)),
            Side::Inf if r.re > -r1 => Ok(self.inf_coef[0] / (r1 + r) + self.inf_coef[1] / (r2 + r)),
            _ => Err(Error::Domain(format!("transform of the {side:?} side at r = {r}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn close(actual: f64, expected: f64, tol: f64) {
        assert!((actual - expected).abs() < tol, "{actual} vs {expected}");
    }

    #[test]
    fn negative_drift_coefficients() {
        let (m, s) = presets::negative_drift();
        let law = extrema_law(&m, s).unwrap();
        let [a1p, a2p] = law.sup_coefficients();
        let [a1m, a2m] = law.inf_coefficients();
        close(a1p, 0.5401, 1e-3);
        close(a2p, 6.1898, 1e-3);
        close(a1m, 0.0515, 1e-3);
        close(a2m, 0.0014, 1e-3);
    }

    #[test]
    fn positive_drift_coefficients() {
        let (m, s) = presets::positive_drift();
        let law = extrema_law(&m, s).unwrap();
        let [a1p, a2p] = law.sup_coefficients();
        let [a1m, a2m] = law.inf_coefficients();
        close(a1m, 1.3447, 1e-3);
        close(a2m, 0.1311, 1e-3);
        close(a1p, 0.5138, 1e-3);
        close(a2p, 0.1638, 1e-3);
        close(law.roots().rho1, 0.5504, 5e-4);
        close(law.roots().rho2, 2.4621, 5e-4);
    }

    #[test]
    fn unit_mass_and_nonnegative_density() {
        for (m, s) in [presets::negative_drift(), presets::positive_drift()] {
            let law = extrema_law(&m, s).unwrap();
            close(law.sup_mass(), 1.0, 1e-12);
            close(law.inf_mass(), 1.0, 1e-12);
            close(law.sup_density().integrate(0.0, f64::INFINITY).unwrap(), 1.0, 1e-12);
            close(law.inf_density().integrate(f64::NEG_INFINITY, 0.0).unwrap(), 1.0, 1e-12);
            for i in 0..100 {
                let x = 10f64.powf(-4.0 + 6.0 * i as f64 / 99.0);
                assert!(law.sup_density().value(x) >= 0.0);
                assert!(law.inf_density().value(-x) >= 0.0);
            }
        }
    }

    #[test]
    fn sup_tail_values() {
        let (m, s) = presets::positive_drift();
        let law = extrema_law(&m, s).unwrap();
        assert_eq!(law.sup_tail(0.0), 1.0);
        let direct = law.sup_density().integrate(1.0, f64::INFINITY).unwrap();
        close(law.sup_tail(1.0), direct, 1e-13);
        let mut prev = 1.0;
        for x in [0.5, 1.0, 5.0, 20.0, 100.0] {
            let t = law.sup_tail(x);
            assert!(t < prev && t >= 0.0);
            prev = t;
        }
        assert!(prev < 1e-20);
    }

    #[test]
    fn factorization_identity_on_imaginary_axis() {
        for (m, s) in [presets::negative_drift(), presets::positive_drift()] {
            let law = extrema_law(&m, s).unwrap();
            let one = Complex64::new(0.0, 0.0);
            close(law.factor_transform(one, Side::Sup).unwrap().re, 1.0, 1e-12);
            close(law.factor_transform(one, Side::Inf).unwrap().re, 1.0, 1e-12);
            for u in [0.5, 1.0, 2.0, 5.0, -3.0, 40.0] {
                let r = Complex64::new(0.0, u);
                let product = law.factor_transform(r, Side::Sup).unwrap() * law.factor_transform(r, Side::Inf).unwrap();
                let expected = s.value() / (s.value() - m.cumulant(r).unwrap());
                assert!((product - expected).norm() < 1e-10, "u={u}");
            }
        }
    }

    #[test]
    fn sup_transform_blows_up_at_dominant_pole() {
        let (m, s) = presets::positive_drift();
        let law = extrema_law(&m, s).unwrap();
        let rho1 = law.roots().rho1;
        let near = law
            .factor_transform(Complex64::new(rho1 - 1e-9, 0.0), Side::Sup)
            .unwrap();
        assert!(near.re > 1e7);
        assert!(law.factor_transform(Complex64::new(rho1, 0.0), Side::Sup).is_err());
        assert!(law
            .factor_transform(Complex64::new(-law.roots().r1, 0.0), Side::Inf)
            .is_err());
    }
}
