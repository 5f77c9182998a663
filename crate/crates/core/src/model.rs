//! Process parameters and the cumulant (Laplace exponent).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance on `p + q = 1`.
pub const PROBABILITY_SUM_TOL: f64 = 1e-12;

/// Relative distance from `c` or `-b` at which the cumulant is treated as singular.
pub const POLE_TOL: f64 = 1e-14;

/// Parameters of `ξ(t) = a·t + σW(t) + S(t)` with double-exponential jumps.
///
/// `sigma2` is the diffusion variance coefficient σ², so the Gaussian part of
/// the cumulant is `r²·sigma2/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KouModel {
    pub a: f64,
    pub sigma2: f64,
    pub lambda: f64,
    pub p: f64,
    pub q: f64,
    pub c: f64,
    pub b: f64,
}

impl KouModel {
    /// Builds and validates a model with an explicit `q`.
    pub fn new(a: f64, sigma2: f64, lambda: f64, p: f64, q: f64, c: f64, b: f64) -> Result<Self> {
        let model = Self {
            a,
            sigma2,
            lambda,
            p,
            q,
            c,
            b,
        };
        model.validate()?;
        Ok(model)
    }

    /// Builds a model with `q = 1 - p`.
    pub fn with_up_probability(a: f64, sigma2: f64, lambda: f64, p: f64, c: f64, b: f64) -> Result<Self> {
        Self::new(a, sigma2, lambda, p, 1.0 - p, c, b)
    }

    /// Checks every parameter constraint, reporting the first violation by name.
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("a", self.a),
            ("sigma2", self.sigma2),
            ("lambda", self.lambda),
            ("p", self.p),
            ("q", self.q),
            ("c", self.c),
            ("b", self.b),
        ];
        for (name, value) in named {
            if !value.is_finite() {
                return Err(invalid(format!("{name} must be finite")));
            }
        }
        for (name, value) in &named[1..] {
            if *value <= 0.0 {
                return Err(invalid(format!("{name} must be positive")));
            }
        }
        if (self.p + self.q - 1.0).abs() > PROBABILITY_SUM_TOL {
            return Err(invalid("p+q must equal 1".into()));
        }
        Ok(())
    }

    /// `k(r) = a·r + r²σ²/2 + λ·r·(p/(c−r) − q/(b+r))`.
    pub fn cumulant(&self, r: Complex64) -> Result<Complex64> {
        self.check_poles(r.re, r.im)?;
        let jumps = self.p / (self.c - r) - self.q / (self.b + r);
        Ok(self.a * r + r * r * (0.5 * self.sigma2) + self.lambda * r * jumps)
    }

    /// Real-argument cumulant, used by the root solver.
    pub fn cumulant_real(&self, r: f64) -> Result<f64> {
        self.check_poles(r, 0.0)?;
        Ok(self.cumulant_unchecked(r))
    }

    #[inline]
    pub(crate) fn cumulant_unchecked(&self, r: f64) -> f64 {
        self.a * r + 0.5 * self.sigma2 * r * r + self.lambda * r * (self.p / (self.c - r) - self.q / (self.b + r))
    }

    #[inline]
    pub(crate) fn cumulant_derivative(&self, r: f64) -> f64 {
        let up = self.c - r;
        let down = self.b + r;
        self.a + self.sigma2 * r + self.lambda * (self.p * self.c / (up * up) - self.q * self.b / (down * down))
    }

    /// `m = E ξ(1) = k'(0) = a + λ(p/c − q/b)`.
    pub fn drift_mean(&self) -> f64 {
        self.a + self.lambda * (self.p / self.c - self.q / self.b)
    }

    /// Parameters of `−ξ`: drift negated, jump sides swapped.
    pub fn dual(&self) -> Self {
        Self {
            a: -self.a,
            sigma2: self.sigma2,
            lambda: self.lambda,
            p: self.q,
            q: self.p,
            c: self.b,
            b: self.c,
        }
    }

    fn check_poles(&self, re: f64, im: f64) -> Result<()> {
        if im.abs() <= POLE_TOL * self.c.max(1.0) && (re - self.c).abs() <= POLE_TOL * self.c.max(1.0) {
            return Err(Error::Pole(self.c));
        }
        if im.abs() <= POLE_TOL * self.b.max(1.0) && (re + self.b).abs() <= POLE_TOL * self.b.max(1.0) {
            return Err(Error::Pole(-self.b));
        }
        Ok(())
    }
}

/// Rate `s > 0` of the independent exponential killing time θ_s.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct KillRate(f64);

impl KillRate {
    pub fn new(s: f64) -> Result<Self> {
        if s.is_finite() && s > 0.0 {
            Ok(Self(s))
        } else {
            Err(invalid("s must be positive".into()))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

fn invalid(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn validate_accepts_positive_drift_case() {
        let m = KouModel::new(1.0, 2.0, 6.0, 0.2, 0.8, 2.0, 8.0);
        assert!(m.is_ok());
    }

    #[test]
    fn validate_rejects_zero_variance() {
        let err = KouModel::new(1.0, 0.0, 6.0, 0.2, 0.8, 2.0, 8.0).unwrap_err();
        assert_eq!(err.to_string(), "sigma2 must be positive");
    }

    #[test]
    fn validate_rejects_probabilities_not_summing_to_one() {
        let err = KouModel::new(1.0, 2.0, 6.0, 0.6, 0.6, 2.0, 8.0).unwrap_err();
        assert_eq!(err.to_string(), "p+q must equal 1");
    }

    #[test]
    fn validate_reports_first_violation() {
        let err = KouModel::new(1.0, 2.0, -1.0, 0.2, 0.8, -2.0, 8.0).unwrap_err();
        assert_eq!(err.to_string(), "lambda must be positive");
        assert!(KillRate::new(0.0).is_err());
    }

    #[test]
    fn cumulant_vanishes_at_origin() {
        let (m, _) = presets::negative_drift();
        assert_eq!(m.cumulant(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn cumulant_at_tabulated_roots_equals_kill_rate() {
        let (m1, s1) = presets::negative_drift();
        let k = m1.cumulant(c(1.0, 0.0)).unwrap();
        assert!((k.re - s1.value()).abs() < 5e-4);
        assert!((k.re - 4.0 / 45.0).abs() < 5e-4);

        let (m2, _) = presets::positive_drift();
        let k = m2.cumulant(c(-1.3654, 0.0)).unwrap();
        assert!((k.re - 1.0).abs() < 5e-4, "{k}");
    }

    #[test]
    fn cumulant_rejects_poles() {
        let (m, _) = presets::positive_drift();
        assert_eq!(m.cumulant(c(2.0, 0.0)), Err(Error::Pole(2.0)));
        assert_eq!(m.cumulant_real(-8.0), Err(Error::Pole(-8.0)));
        assert!(m.cumulant(c(2.0, 1e-3)).is_ok());
    }

    #[test]
    fn drift_mean_values() {
        let (m1, _) = presets::negative_drift();
        assert_relative_eq!(m1.drift_mean(), -1.675, epsilon = 1e-12);
        let (m2, _) = presets::positive_drift();
        assert_relative_eq!(m2.drift_mean(), 1.0, epsilon = 1e-12);
        let sym = KouModel::new(0.0, 1.0, 3.0, 0.5, 0.5, 2.0, 2.0).unwrap();
        assert_eq!(sym.drift_mean(), 0.0);
    }

    #[test]
    fn hermitian_and_negative_on_imaginary_axis() {
        for (m, _) in [presets::negative_drift(), presets::positive_drift()] {
            for u in [0.1, 1.0, 10.0, -0.1, -1.0, -10.0] {
                let r = c(0.3, u);
                let k = m.cumulant(r).unwrap();
                let kc = m.cumulant(r.conj()).unwrap();
                assert!((k.conj() - kc).norm() < 1e-12);
                assert!(m.cumulant(c(0.0, u)).unwrap().re <= 0.0);
            }
        }
    }

    #[test]
    fn drift_mean_matches_finite_difference() {
        for (m, _) in [presets::negative_drift(), presets::positive_drift()] {
            let h = 1e-6;
            let fd = (m.cumulant_real(h).unwrap() - m.cumulant_real(-h).unwrap()) / (2.0 * h);
            assert_relative_eq!(fd, m.drift_mean(), max_relative = 1e-6);
        }
    }

    #[test]
    fn dual_is_an_involution_and_mirrors_cumulant() {
        let (m, _) = presets::positive_drift();
        assert_eq!(m.dual().dual(), m);
        for r in [-1.5, -0.3, 0.7, 1.9] {
            assert_relative_eq!(
                m.dual().cumulant_real(r).unwrap(),
                m.cumulant_real(-r).unwrap(),
                max_relative = 1e-14
            );
        }
    }
}
