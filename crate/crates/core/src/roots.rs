//! The four real roots of the cumulant equation `k(r) = s`.
//!
//! For `s > 0` there is exactly one root in each of `(0, c)`, `(c, ∞)`,
//! `(−b, 0)` and `(−∞, −b)`. Each is found by a bracketed Newton iteration
//! that falls back to bisection whenever the Newton step leaves the bracket.

use crate::error::{Error, Result};
use crate::model::{KillRate, KouModel};

/// Absolute step tolerance for accepting a root.
pub const ROOT_TOL: f64 = 1e-12;
/// Residual tolerance is `RESIDUAL_TOL · max(1, s)`.
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const MAX_ITER: usize = 200;

/// Roots `ρ₁ < c < ρ₂` and `−r₂ < −b < −r₁ < 0` of `k(r) = s`.
///
/// `r1` and `r2` are stored as magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSet {
    pub rho1: f64,
    pub rho2: f64,
    pub r1: f64,
    pub r2: f64,
    pub s: KillRate,
}

impl RootSet {
    /// All four roots of `k(r) = s` as signed values, ascending.
    pub fn signed(&self) -> [f64; 4] {
        [-self.r2, -self.r1, self.rho1, self.rho2]
    }

    /// Largest `|k(root) − s|` over the four roots.
    pub fn max_residual(&self, model: &KouModel) -> f64 {
        let s = self.s.value();
        self.signed()
            .iter()
            .map(|&r| (model.cumulant_unchecked(r) - s).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|k(root) − s|` divided by its acceptance level
    /// `max(RESIDUAL_TOL·max(1, s), 4ε·|r|·|k'(r)|)`; at most 1 for accepted roots.
    ///
    /// The second term is the residual caused by rounding `r` to f64, which
    /// dominates only for roots within ~1e-6 of a pole.
    pub fn scaled_residual(&self, model: &KouModel) -> f64 {
        let s = self.s.value();
        let base = RESIDUAL_TOL * s.max(1.0);
        self.signed()
            .iter()
            .map(|&r| {
                let floor = 4.0 * f64::EPSILON * r.abs() * model.cumulant_derivative(r).abs();
                (model.cumulant_unchecked(r) - s).abs() / base.max(floor)
            })
            .fold(0.0, f64::max)
    }
}

/// Quartic obtained by clearing the denominators of `s − k(r) = 0`:
/// `(s − k(r))·(c − r)·(b + r)`. Coefficients are stored in ascending order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicQuartic(pub [f64; 5]);

impl CharacteristicQuartic {
    pub fn eval(&self, r: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &coef| acc * r + coef)
    }

    /// `|coef|`-weighted magnitude at `r`, a natural scale for residuals.
    pub fn scale(&self, r: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &coef| acc * r.abs() + coef.abs())
    }

    /// Expands `leading · Π (r − rootᵢ)`.
    pub fn from_roots(leading: f64, roots: [f64; 4]) -> Self {
        let mut poly = [leading, 0.0, 0.0, 0.0, 0.0];
        // poly holds descending coefficients while multiplying out.
        for (deg, root) in roots.iter().enumerate() {
            for i in (1..=deg + 1).rev() {
                poly[i] -= root * poly[i - 1];
            }
        }
        poly.reverse();
        Self(poly)
    }
}

pub fn characteristic_quartic(model: &KouModel, s: KillRate) -> CharacteristicQuartic {
    let KouModel {
        a,
        sigma2,
        lambda,
        p,
        q,
        c,
        b,
    } = *model;
    let s = s.value();
    let h = 0.5 * sigma2;
    // (c − r)(b + r) = d0 + d1·r + d2·r²
    let (d0, d1, d2) = (c * b, c - b, -1.0);
    CharacteristicQuartic([
        s * d0,
        s * d1 - a * d0 - lambda * (p * b - q * c),
        s * d2 - (a * d1 + h * d0) - lambda * (p + q),
        -(a * d2 + h * d1),
        -h * d2,
    ])
}

pub fn solve_roots(model: &KouModel, s: KillRate) -> Result<RootSet> {
    let sv = s.value();
    let f = |r: f64| model.cumulant_unchecked(r) - sv;
    let (c, b) = (model.c, model.b);

    // (0, c): f(0) = −s, f → +∞ at c⁻.
    let below_c = pole_inset(c, |r| f(r) > 0.0, -1.0)?;
    let rho1 = refine(model, sv, 0.0, below_c)?;

    // (c, ∞): f → −∞ at c⁺, f → +∞ at ∞.
    let above_c = pole_inset(c, |r| f(r) < 0.0, 1.0)?;
    let far_right = grow(c, |r| f(r) > 0.0, 1.0)?;
    let rho2 = refine(model, sv, above_c, far_right)?;

    // (−b, 0): f → +∞ at −b⁺, f(0) = −s.
    let above_mb = pole_inset(-b, |r| f(r) > 0.0, 1.0)?;
    let neg_r1 = refine(model, sv, above_mb, 0.0)?;

    // (−∞, −b): f → +∞ at −∞, f → −∞ at −b⁻.
    let below_mb = pole_inset(-b, |r| f(r) < 0.0, -1.0)?;
    let far_left = grow(-b, |r| f(r) > 0.0, -1.0)?;
    let neg_r2 = refine(model, sv, far_left, below_mb)?;

    Ok(RootSet {
        rho1,
        rho2,
        r1: -neg_r1,
        r2: -neg_r2,
        s,
    })
}

/// First point `pole + dir·δ` with the wanted sign, starting from
/// `δ = 1e-9·(1+|pole|)` and shrinking while the root hugs the pole.
fn pole_inset(pole: f64, wanted: impl Fn(f64) -> bool, dir: f64) -> Result<f64> {
    let mut delta = 1e-9 * (1.0 + pole.abs());
    while delta > f64::EPSILON * pole.abs() {
        let r = pole + dir * delta;
        if wanted(r) {
            return Ok(r);
        }
        delta *= 0.1;
    }
    Err(Error::Convergence {
        lo: pole,
        hi: pole,
        residual: f64::NAN,
    })
}

/// Geometric outward search from a pole until `wanted` holds.
fn grow(pole: f64, wanted: impl Fn(f64) -> bool, dir: f64) -> Result<f64> {
    let mut width = 1.0 + pole.abs();
    for _ in 0..MAX_ITER {
        let r = pole + dir * width;
        if wanted(r) {
            return Ok(r);
        }
        width *= 2.0;
    }
    Err(Error::Convergence {
        lo: pole,
        hi: pole + dir * width,
        residual: f64::NAN,
    })
}

/// Extra Newton steps near `[lo, hi]` while they reduce the residual.
fn polish(model: &KouModel, s: f64, mut x: f64, mut fx: f64, lo: f64, hi: f64) -> f64 {
    for _ in 0..4 {
        let next = x - fx / model.cumulant_derivative(x);
        let slack = ROOT_TOL * (1.0 + x.abs());
        if !(next >= lo - slack && next <= hi + slack) {
            break;
        }
        let fn_ = model.cumulant_unchecked(next) - s;
        if fn_.abs() >= fx.abs() {
            break;
        }
        x = next;
        fx = fn_;
    }
    x
}

fn refine(model: &KouModel, s: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let f = |r: f64| model.cumulant_unchecked(r) - s;
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Convergence {
            lo,
            hi,
            residual: f_lo.abs().min(f_hi.abs()),
        });
    }
    let rising = f_lo < 0.0;
    let tol = RESIDUAL_TOL * s.max(1.0);

    let mut x = 0.5 * (lo + hi);
    let mut fx = f(x);
    for _ in 0..MAX_ITER {
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == rising {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / model.cumulant_derivative(x);
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - x).abs();
        x = next;
        fx = f(x);
        if step < ROOT_TOL && fx.abs() <= tol {
            return Ok(polish(model, s, x, fx, lo, hi));
        }
        // Bracket collapsed to floating-point resolution.
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            return Ok(polish(model, s, x, fx, lo, hi));
        }
    }
    Err(Error::Convergence {
        lo,
        hi,
        residual: fx.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use proptest::prelude::*;

    fn close(actual: f64, expected: f64, tol: f64) {
        assert!((actual - expected).abs() < tol, "{actual} vs {expected}");
    }

    #[test]
    fn negative_drift_roots() {
        let (m, s) = presets::negative_drift();
        let r = solve_roots(&m, s).unwrap();
        close(r.rho1, 1.0000, 5e-4);
        close(r.rho2, 13.4599, 5e-4);
        close(r.r1, 0.0515, 5e-4);
        close(r.r2, 8.2084, 5e-4);
    }

    #[test]
    fn positive_drift_roots() {
        let (m, s) = presets::positive_drift();
        let r = solve_roots(&m, s).unwrap();
        close(r.rho1, 0.5504, 5e-4);
        close(r.rho2, 2.4621, 5e-4);
        close(r.r1, 1.3654, 5e-4);
        close(r.r2, 8.6470, 5e-4);
    }

    #[test]
    fn symmetric_model_has_mirrored_roots() {
        let m = KouModel::new(0.0, 1.0, 1.0, 0.5, 0.5, 2.0, 2.0).unwrap();
        let r = solve_roots(&m, KillRate::new(1.0).unwrap()).unwrap();
        close(r.rho1, r.r1, 1e-12);
        close(r.rho2, r.r2, 1e-12);
    }

    #[test]
    fn quartic_constant_term_and_tabulated_roots() {
        let (m1, s1) = presets::negative_drift();
        let quartic = characteristic_quartic(&m1, s1);
        assert_eq!(quartic.eval(0.0), s1.value() * m1.c * m1.b);
        assert_eq!(quartic.0[4], 0.5 * m1.sigma2);
        assert!(quartic.eval(1.0).abs() < 1e-3 * quartic.scale(1.0));

        let (m2, s2) = presets::positive_drift();
        let quartic = characteristic_quartic(&m2, s2);
        assert!(quartic.eval(-8.6470).abs() < 1e-3 * quartic.scale(-8.6470));
    }

    #[test]
    fn small_kill_rate_asymptotics_for_negative_drift() {
        let (m, s) = presets::negative_drift();
        let r = solve_roots(&m, s).unwrap();
        let approx = s.value() / m.drift_mean().abs();
        assert!((r.r1 - approx).abs() / r.r1 < 0.05);
    }

    #[test]
    fn root_next_to_pole_is_found() {
        // Vanishing jump intensity pushes ρ₂ to within ~1e-9 of c.
        let m = KouModel::with_up_probability(1.0, 2.0, 1e-8, 0.2, 2.0, 8.0).unwrap();
        let r = solve_roots(&m, KillRate::new(1.0).unwrap()).unwrap();
        assert!(r.rho2 > m.c && r.rho2 - m.c < 1e-8);
        assert!(r.r2 > m.b && r.r2 - m.b < 1e-8);
        let bm_rho = (-1.0 + (1.0f64 + 2.0 * 2.0).sqrt()) / 2.0;
        close(r.rho1, bm_rho, 1e-8);
    }

    fn check_invariants(m: &KouModel, s: KillRate) {
        let r = solve_roots(m, s).unwrap();
        assert!(0.0 < r.rho1 && r.rho1 < m.c && m.c < r.rho2, "{r:?}");
        assert!(0.0 < r.r1 && r.r1 < m.b && m.b < r.r2, "{r:?}");
        assert!(r.scaled_residual(m) <= 1.0, "{r:?}");

        let quartic = characteristic_quartic(m, s);
        let product = CharacteristicQuartic::from_roots(0.5 * m.sigma2, r.signed());
        let scale = quartic.0.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        for (x, y) in quartic.0.iter().zip(product.0.iter()) {
            assert!((x - y).abs() <= 1e-8 * scale, "{quartic:?} vs {product:?}");
        }
    }

    #[test]
    fn presets_satisfy_invariants() {
        for (m, s) in [presets::negative_drift(), presets::positive_drift()] {
            check_invariants(&m, s);
        }
    }

    proptest! {
        #[test]
        fn random_models_satisfy_invariants(
            a in -5.0f64..5.0,
            sigma2 in 0.1f64..4.0,
            lambda in 0.1f64..10.0,
            p in 0.05f64..0.95,
            c in 0.5f64..20.0,
            b in 0.5f64..20.0,
            s in 0.01f64..10.0,
        ) {
            let m = KouModel::with_up_probability(a, sigma2, lambda, p, c, b).unwrap();
            check_invariants(&m, KillRate::new(s).unwrap());
        }
    }
}
