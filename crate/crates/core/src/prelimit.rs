//! Drift-plus-compound-Poisson approximation `ξ_n` of the Kou process.
//!
//! ```text
//! ξ_n(t) = a_n·t + S_n(t),   a_n = a + 3nσ²/2,   λ_n = λp + 3n²σ² + λq·e^{−b/n}
//! f_n(x) = p₁·c·e^{−cx}            x ≥ 0
//!        = p₂·n                    −1/n ≤ x < 0
//!        = p₃·b·e^{b(x+1/n)}       x < −1/n
//! ```
//!
//! The Brownian part is replaced by dense small negative jumps compensated by the
//! extra drift, and `k_n(r) → k(r)` with an error of order `1/n`.
//!
//! [`prelimit_cumulant`] evaluates the standard closed-form expansion
//!
//! ```text
//! k_n(r) = ar + λq·e^{−b/n}(b/(b+r)·e^{r/n} − 1) + λp(c/(c−r) − 1)
//!          − (3n³σ²/r)(e^{−r/n} − 1 + r/n − (r/n)²/2)
//! ```
//!
//! Integrating `f_n` as displayed gives `e^{−r/n}` in the second term instead;
//! that version is [`density_cumulant`]. Both tend to `k(r)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::KouModel;

/// Series cutoff for the cancellation-prone small-`r/n` terms.
const SERIES_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrelimitModel {
    pub n: u32,
    pub a_n: f64,
    pub lambda_n: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

pub fn build_prelimit(model: &KouModel, n: u32) -> Result<PrelimitModel> {
    model.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let nf = n as f64;
    let up = model.lambda * model.p;
    let small = 3.0 * nf * nf * model.sigma2;
    let down = model.lambda * model.q * (-model.b / nf).exp();
    let lambda_n = up + small + down;
    Ok(PrelimitModel {
        n,
        a_n: model.a + 1.5 * nf * model.sigma2,
        lambda_n,
        p1: up / lambda_n,
        p2: small / lambda_n,
        p3: down / lambda_n,
    })
}

/// `(1 − e^{−y})/y − 1 + y/2 = y²/6 − y³/24 + …`
fn uniform_remainder(y: Complex64) -> Complex64 {
    if y.norm() < SERIES_RADIUS {
        // Σ_{k≥2} (−y)^k/(k+1)!
        let mut term = -y / 2.0;
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 2..40 {
            term *= -y / (k as f64 + 1.0);
            sum += term;
            if term.norm() <= 1e-18 * sum.norm() {
                break;
            }
        }
        return sum;
    }
    (1.0 - (-y).exp()) / y - 1.0 + y / 2.0
}

/// `k_n(r)` from the closed-form expansion above; `k_n(0) = 0`.
///
/// The uniform piece and the extra drift are combined analytically, which keeps
/// the evaluation accurate for large `n`.
pub fn prelimit_cumulant(pm: &PrelimitModel, model: &KouModel, r: Complex64) -> Result<Complex64> {
    cumulant_with_shift(pm, model, r, 1.0)
}

/// `a_n r + ∫(e^{rx} − 1)·λ_n f_n(x) dx` for `f_n` as displayed above.
pub fn density_cumulant(pm: &PrelimitModel, model: &KouModel, r: Complex64) -> Result<Complex64> {
    cumulant_with_shift(pm, model, r, -1.0)
}

fn cumulant_with_shift(pm: &PrelimitModel, model: &KouModel, r: Complex64, shift: f64) -> Result<Complex64> {
    // Same pole guard as the limit cumulant.
    model.cumulant(r)?;
    let n = pm.n as f64;
    let y = r / n;
    let up = pm.lambda_n * pm.p1 * (model.c / (model.c - r) - 1.0);
    let down = pm.lambda_n * pm.p3 * (model.b / (model.b + r) * (shift * y).exp() - 1.0);
    let small = pm.lambda_n * pm.p2 * uniform_remainder(y);
    let drift = (pm.a_n - 1.5 * n * model.sigma2) * r;
    Ok(drift + up + down + small)
}

/// `|k_n(r) − k(r)|` for every `(r, n)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub ns: Vec<u32>,
    pub rows: Vec<ConvergenceRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub r: Complex64,
    pub values: Vec<Complex64>,
    pub deviations: Vec<f64>,
    /// Deviations never increase along `ns`.
    pub monotone: bool,
}

impl ConvergenceRow {
    /// `dev[i] / dev[i+1]`; about `10` per decade for first-order convergence.
    pub fn ratios(&self) -> Vec<f64> {
        self.deviations.windows(2).map(|w| w[0] / w[1]).collect()
    }
}

pub fn convergence_table(model: &KouModel, rs: &[Complex64], ns: &[u32]) -> Result<ConvergenceTable> {
    if rs.is_empty() || ns.is_empty() {
        return Err(Error::InvalidParameter("grids must be nonempty".into()));
    }
    let pms = ns
        .iter()
        .map(|&n| build_prelimit(model, n))
        .collect::<Result<Vec<_>>>()?;
    let rows = rs
        .iter()
        .map(|&r| {
            let limit = model.cumulant(r)?;
            let values = pms
                .iter()
                .map(|pm| prelimit_cumulant(pm, model, r))
                .collect::<Result<Vec<_>>>()?;
            let deviations: Vec<f64> = values.iter().map(|v| (v - limit).norm()).collect();
            let monotone = deviations.windows(2).all(|w| w[1] <= w[0]);
            Ok(ConvergenceRow {
                r,
                values,
                deviations,
                monotone,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable { ns: ns.to_vec(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn parameters() {
        let m = KouModel::with_up_probability(0.0, 2.0, 1.0, 0.5, 2.0, 3.0).unwrap();
        assert!((build_prelimit(&m, 1).unwrap().a_n - 3.0).abs() < 1e-12);
        let (m, _) = presets::positive_drift();
        let pm = build_prelimit(&m, 10).unwrap();
        assert!((pm.lambda_n - (601.2 + 4.8 * (-0.8f64).exp())).abs() < 1e-12);
        for n in [1, 10, 100] {
            let pm = build_prelimit(&m, n).unwrap();
            assert!((pm.p1 + pm.p2 + pm.p3 - 1.0).abs() < 1e-12);
            assert!(pm.p1 >= 0.0 && pm.p2 >= 0.0 && pm.p3 >= 0.0);
        }
        assert!(build_prelimit(&m, 0).is_err());
    }

    #[test]
    fn remainder_series_matches_direct_form() {
        for y in [0.3, -0.45, 0.49] {
            let y = Complex64::new(y, 0.2);
            let direct = (1.0 - (-y).exp()) / y - 1.0 + y / 2.0;
            assert!((uniform_remainder(y) - direct).norm() < 1e-14);
        }
    }

    #[test]
    fn density_form_matches_quadrature_of_jump_density() {
        let (m, _) = presets::positive_drift();
        for n in [1u32, 3, 10] {
            let pm = build_prelimit(&m, n).unwrap();
            let nf = n as f64;
            for r in [0.5, -1.5, 1.2] {
                let f = |x: f64| {
                    let density = if x >= 0.0 {
                        pm.p1 * m.c * (-m.c * x).exp()
                    } else if x >= -1.0 / nf {
                        pm.p2 * nf
                    } else {
                        pm.p3 * m.b * (m.b * (x + 1.0 / nf)).exp()
                    };
                    if density == 0.0 {
                        return 0.0;
                    }
                    (r * x).exp_m1() * pm.lambda_n * density
                };
                let jumps =
                    crate::quad::integrate_pieces(f, &[f64::NEG_INFINITY, -1.0 / nf, 0.0, f64::INFINITY], 1e-13, 1e-13)
                        .value;
                let expected = pm.a_n * r + jumps;
                let got = density_cumulant(&pm, &m, Complex64::new(r, 0.0)).unwrap();
                assert!(
                    (got.re - expected).abs() < 1e-9 * (1.0 + expected.abs()),
                    "n={n} r={r}: {got} vs {expected}"
                );
                assert!(got.im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn both_forms_converge_to_the_limit() {
        let (m, _) = presets::positive_drift();
        let r = Complex64::new(0.5, 0.0);
        let k = m.cumulant(r).unwrap();
        let pm = build_prelimit(&m, 100_000).unwrap();
        assert!((prelimit_cumulant(&pm, &m, r).unwrap() - k).norm() < 1e-4);
        assert!((density_cumulant(&pm, &m, r).unwrap() - k).norm() < 1e-5);
    }

    #[test]
    fn zero_and_poles() {
        let (m, _) = presets::positive_drift();
        let pm = build_prelimit(&m, 10).unwrap();
        assert_eq!(
            prelimit_cumulant(&pm, &m, Complex64::new(0.0, 0.0)).unwrap().norm(),
            0.0
        );
        assert!(prelimit_cumulant(&pm, &m, Complex64::new(2.0, 0.0)).is_err());
    }
}
