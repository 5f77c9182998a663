//! One-sided upward passage: transforms of `τ⁺(x)` split by creep and jump.
//!
//! ```text
//! E[e^{−sτ⁺}, γ⁺=0]        = ((c−ρ₁)e^{−ρ₁x} + (ρ₂−c)e^{−ρ₂x}) / (ρ₂−ρ₁)
//! E[e^{−sτ⁺−uγ⁺}, γ⁺>0]    = (c−ρ₁)(ρ₂−c)/(c(ρ₂−ρ₁)) · (e^{−ρ₁x} − e^{−ρ₂x}) · c/(c+u)
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expsum::ExpSum;
use crate::roots::RootSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassageLaw {
    pub roots: RootSet,
    pub c: f64,
}

impl PassageLaw {
    pub fn new(roots: RootSet, c: f64) -> Self {
        Self { roots, c }
    }

    /// Creep part `E[e^{−sτ⁺(x)}, γ⁺(x)=0]` as an exponential sum on `[0, ∞)`.
    pub fn creep_sum(&self) -> ExpSum {
        let RootSet { rho1, rho2, .. } = self.roots;
        let width = rho2 - rho1;
        ExpSum::new(
            [((self.c - rho1) / width, -rho1), ((rho2 - self.c) / width, -rho2)],
            0.0,
            f64::INFINITY,
        )
        .expect("decaying terms")
    }

    /// Jump part at `u = 0`, `E[e^{−sτ⁺(x)}, γ⁺(x)>0]`, on `[0, ∞)`.
    pub fn overshoot_sum(&self) -> ExpSum {
        let k = self.jump_weight();
        let RootSet { rho1, rho2, .. } = self.roots;
        ExpSum::new([(k, -rho1), (-k, -rho2)], 0.0, f64::INFINITY).expect("decaying terms")
    }

    pub fn creep_mgf(&self, x: f64) -> f64 {
        self.creep_sum().value(x.max(0.0))
    }

    pub fn overshoot_mgf(&self, x: f64, u: Complex64) -> Result<Complex64> {
        if (u + self.c).norm() <= 1e-14 * self.c {
            return Err(Error::Pole(-self.c));
        }
        if u.re < 0.0 {
            return Err(Error::Domain(format!("overshoot transform needs Re u ≥ 0, got {u}")));
        }
        let base = self.overshoot_sum().value(x.max(0.0));
        Ok(base * self.c / (self.c + u))
    }

    /// `E e^{−sτ⁺(x)}`, the sum of the creep and jump parts.
    pub fn passage_mgf(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        self.creep_sum().value(x) + self.overshoot_sum().value(x)
    }

    fn jump_weight(&self) -> f64 {
        let RootSet { rho1, rho2, .. } = self.roots;
        (self.c - rho1) * (rho2 - self.c) / (self.c * (rho2 - rho1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extrema::extrema_law;
    use crate::presets;
    use crate::roots::solve_roots;

    fn law() -> PassageLaw {
        let (m, s) = presets::positive_drift();
        PassageLaw::new(solve_roots(&m, s).unwrap(), m.c)
    }

    #[test]
    fn creep_values() {
        let l = law();
        assert!((l.creep_mgf(0.0) - 1.0).abs() < 1e-15);
        assert!((l.creep_mgf(1.0) - 0.4579).abs() < 5e-4);
        assert!(l.creep_mgf(200.0) < 1e-40);
    }

    #[test]
    fn overshoot_values() {
        let l = law();
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(l.overshoot_mgf(0.0, Complex64::new(1.5, 0.3)).unwrap().norm(), 0.0);
        let base = l.overshoot_mgf(1.0, zero).unwrap();
        assert!((base.re - 0.0862).abs() < 5e-4);
        for u in [
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 3.0),
            Complex64::new(2.0, -1.0),
        ] {
            let v = l.overshoot_mgf(1.0, u).unwrap();
            let expected = base * l.c / (l.c + u);
            assert!((v - expected).norm() < 1e-15);
        }
        assert!(matches!(
            l.overshoot_mgf(1.0, Complex64::new(-2.0, 0.0)),
            Err(Error::Pole(_))
        ));
    }

    #[test]
    fn passage_values_and_monotonicity() {
        let l = law();
        assert!((l.passage_mgf(0.0) - 1.0).abs() < 1e-15);
        assert!((l.passage_mgf(1.0) - 0.5441).abs() < 5e-4);
        let grid = [0.0, 0.5, 1.0, 2.0, 4.0];
        for w in grid.windows(2) {
            assert!(l.passage_mgf(w[1]) < l.passage_mgf(w[0]));
        }
    }

    #[test]
    fn passage_equals_supremum_tail() {
        for (m, s) in [presets::negative_drift(), presets::positive_drift()] {
            let ext = extrema_law(&m, s).unwrap();
            let l = PassageLaw::new(*ext.roots(), m.c);
            for x in [0.0, 0.3, 1.0, 3.0] {
                assert!((l.passage_mgf(x) - ext.sup_tail(x)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn values_lie_in_unit_interval() {
        for (m, s) in [presets::negative_drift(), presets::positive_drift()] {
            let l = PassageLaw::new(solve_roots(&m, s).unwrap(), m.c);
            for i in 0..100 {
                let x = 0.1 * i as f64;
                for v in [l.creep_mgf(x), l.overshoot_sum().value(x), l.passage_mgf(x)] {
                    // rounding of the two-term sums at x = 0
                    assert!((-1e-15..=1.0 + 1e-15).contains(&v), "x={x} v={v}");
                }
            }
        }
    }
}
