//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! This is the numerical oracle against which the closed-form exponential-sum
//! integrals are audited. It shares no code with [`crate::expsum`].

use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_SUBDIVISIONS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64 + ?Sized>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        k += WGK[i] * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
    }
    Segment {
        lo,
        hi,
        value: k * half,
        error: ((k - g) * half).abs(),
    }
}

/// Integrates `f` over `[lo, hi]`; either end may be infinite.
///
/// Subdivides the worst segment until the summed error estimate is below
/// `max(abs_tol, rel_tol·|value|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, abs_tol: f64, rel_tol: f64) -> Quadrature {
    integrate_dyn(&f, lo, hi, abs_tol, rel_tol)
}

fn integrate_dyn(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, abs_tol: f64, rel_tol: f64) -> Quadrature {
    if lo == hi {
        return Quadrature { value: 0.0, error: 0.0 };
    }
    if lo > hi {
        let q = integrate_dyn(f, hi, lo, abs_tol, rel_tol);
        return Quadrature { value: -q.value, ..q };
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => adapt(f, lo, hi, abs_tol, rel_tol),
        // x = lo + t/(1−t)
        (true, false) => adapt(
            &|t: f64| {
                let u = 1.0 - t;
                f(lo + t / u) / (u * u)
            },
            0.0,
            1.0,
            abs_tol,
            rel_tol,
        ),
        // x = hi − t/(1−t)
        (false, true) => adapt(
            &|t: f64| {
                let u = 1.0 - t;
                f(hi - t / u) / (u * u)
            },
            0.0,
            1.0,
            abs_tol,
            rel_tol,
        ),
        (false, false) => {
            let left = integrate_dyn(f, f64::NEG_INFINITY, 0.0, 0.5 * abs_tol, rel_tol);
            let right = integrate_dyn(f, 0.0, f64::INFINITY, 0.5 * abs_tol, rel_tol);
            Quadrature {
                value: left.value + right.value,
                error: left.error + right.error,
            }
        }
    }
}

/// Integrates over consecutive breakpoints, e.g. to respect kinks of `f`.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, points: &[f64], abs_tol: f64, rel_tol: f64) -> Quadrature {
    points.windows(2).fold(Quadrature { value: 0.0, error: 0.0 }, |acc, w| {
        let q = integrate(&f, w[0], w[1], abs_tol / (points.len() as f64), rel_tol);
        Quadrature {
            value: acc.value + q.value,
            error: acc.error + q.error,
        }
    })
}

fn adapt<F: Fn(f64) -> f64 + ?Sized>(f: &F, lo: f64, hi: f64, abs_tol: f64, rel_tol: f64) -> Quadrature {
    let mut heap = BinaryHeap::new();
    let first = kronrod(f, lo, hi);
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);
    let mut count = 1;
    while error > abs_tol.max(rel_tol * value.abs()) && count < MAX_SUBDIVISIONS {
        let worst = heap.pop().expect("nonempty heap");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            heap.push(worst);
            break;
        }
        let left = kronrod(f, worst.lo, mid);
        let right = kronrod(f, mid, worst.hi);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        count += 1;
    }
    // Resum to shed the drift accumulated by incremental updates.
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum();
    Quadrature { value, error }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, 1e-14, 1e-14);
        assert!((q.value - (64.0 / 6.0 - 1.0 / 6.0 - 9.0)).abs() < 1e-13);
    }

    #[test]
    fn infinite_ranges() {
        let q = integrate(|x| (-x).exp(), 0.0, f64::INFINITY, 1e-13, 1e-13);
        assert!((q.value - 1.0).abs() < 1e-12);
        let q = integrate(|x| (-x * x).exp(), f64::NEG_INFINITY, f64::INFINITY, 1e-13, 1e-13);
        assert!((q.value - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        let q = integrate(|x| (2.0 * x).exp(), f64::NEG_INFINITY, 1.0, 1e-13, 1e-13);
        assert!((q.value - 0.5 * 2f64.exp()).abs() < 1e-11);
    }

    #[test]
    fn kink_handled_by_pieces() {
        let q = integrate_pieces(|x: f64| x.abs(), &[-1.0, 0.0, 3.0], 1e-14, 1e-14);
        assert!((q.value - 5.0).abs() < 1e-13);
    }
}
