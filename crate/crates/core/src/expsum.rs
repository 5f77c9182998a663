//! Finite sums of exponentials `f(x) = Σ coefᵢ·e^{rateᵢ·x}` on an interval.
//!
//! Every density and kernel of the Kou exit problem is of this form, and so
//! are their products, convolutions and integrals. This module evaluates all of
//! them in closed form; no numerical quadrature is involved.

use crate::error::{Error, Result};

/// Rates closer than this are merged, and combined rates this close to zero
/// are integrated with the linear antiderivative.
pub const RATE_TOL: f64 = 1e-12;

/// Relative slack on support checks, absorbing rounding in computed bounds.
const SUPPORT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpSum {
    terms: Vec<Term>,
    lo: f64,
    hi: f64,
}

impl ExpSum {
    /// Builds a canonical sum from `(coef, rate)` pairs on `[lo, hi]`.
    ///
    /// Equal rates are merged and zero coefficients dropped. An infinite
    /// endpoint requires every remaining term to decay towards it.
    pub fn new(terms: impl IntoIterator<Item = (f64, f64)>, lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::Domain(format!("invalid support [{lo}, {hi}]")));
        }
        let mut terms: Vec<Term> = terms.into_iter().map(|(coef, rate)| Term { coef, rate }).collect();
        terms.sort_by(|x, y| x.rate.total_cmp(&y.rate));
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if (t.rate - last.rate).abs() <= RATE_TOL => last.coef += t.coef,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coef != 0.0);
        for t in &merged {
            if (hi == f64::INFINITY && t.rate >= 0.0) || (lo == f64::NEG_INFINITY && t.rate <= 0.0) {
                return Err(Error::Divergent { rate: t.rate });
            }
        }
        Ok(Self { terms: merged, lo, hi })
    }

    pub fn zero(lo: f64, hi: f64) -> Self {
        Self {
            terms: Vec::new(),
            lo,
            hi,
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_contains(x, x)?;
        Ok(self.value(x))
    }

    /// Evaluation without the support check.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.coef * (t.rate * x).exp()).sum()
    }

    /// `∫_lo^hi f(x) dx` in closed form. Reversed bounds give the negated integral.
    pub fn integrate(&self, lo: f64, hi: f64) -> Result<f64> {
        if lo > hi {
            return self.integrate(hi, lo).map(|v| -v);
        }
        if lo == hi {
            return Ok(0.0);
        }
        self.check_contains(lo, hi)?;
        self.terms.iter().map(|t| term_integral(*t, lo, hi)).sum()
    }

    pub fn scale(&self, k: f64) -> Self {
        let terms = self.terms.iter().map(|t| (k * t.coef, t.rate));
        Self::new(terms, self.lo, self.hi).expect("scaling preserves integrability")
    }

    /// `f(x)·e^{rate·x}`.
    pub fn mul_exp(&self, rate: f64) -> Result<Self> {
        Self::new(self.terms.iter().map(|t| (t.coef, t.rate + rate)), self.lo, self.hi)
    }

    /// Pointwise product on the intersection of supports.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let (lo, hi) = self.intersect(other)?;
        let terms = self
            .terms
            .iter()
            .flat_map(|f| other.terms.iter().map(move |g| (f.coef * g.coef, f.rate + g.rate)));
        Self::new(terms, lo, hi)
    }

    /// Pointwise sum on the intersection of supports.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let (lo, hi) = self.intersect(other)?;
        let terms = self.terms.iter().chain(other.terms.iter()).map(|t| (t.coef, t.rate));
        Self::new(terms, lo, hi)
    }

    /// `g(x) = f(x − d)`, supported on the shifted interval.
    pub fn translate(&self, d: f64) -> Self {
        let terms = self.terms.iter().map(|t| (t.coef * (-t.rate * d).exp(), t.rate));
        Self::new(terms, self.lo + d, self.hi + d).expect("translation preserves integrability")
    }

    /// `g(x) = f(pivot − x)`, supported on `[pivot − hi, pivot − lo]`.
    pub fn reflect_about(&self, pivot: f64) -> Self {
        let terms = self.terms.iter().map(|t| (t.coef * (t.rate * pivot).exp(), -t.rate));
        Self::new(terms, pivot - self.hi, pivot - self.lo).expect("reflection preserves integrability")
    }

    /// Same terms on a narrower support.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Self> {
        self.check_contains(lo, hi)?;
        Self::new(self.terms.iter().map(|t| (t.coef, t.rate)), lo, hi)
    }

    /// Finite convolution `h(x) = ∫₀ˣ f(x − u)·g(u) du` as a sum in `x`.
    ///
    /// Both factors must be defined on `[0, x]`; the result lives on
    /// `[0, min(hi_f, hi_g)]`. Coinciding rates would produce `x·e^{rx}` terms
    /// and are rejected.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.check_contains(0.0, 0.0)?;
        other.check_contains(0.0, 0.0)?;
        let hi = self.hi.min(other.hi);
        let mut terms = Vec::with_capacity(2 * self.terms.len() * other.terms.len());
        for f in &self.terms {
            for g in &other.terms {
                let gap = g.rate - f.rate;
                if gap.abs() <= RATE_TOL {
                    return Err(Error::DegenerateRate(f.rate));
                }
                let k = f.coef * g.coef / gap;
                terms.push((k, g.rate));
                terms.push((-k, f.rate));
            }
        }
        Self::new(terms, 0.0, hi)
    }

    fn intersect(&self, other: &Self) -> Result<(f64, f64)> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo > hi {
            return Err(Error::OutOfSupport {
                x: lo,
                lo: other.lo,
                hi: other.hi,
            });
        }
        Ok((lo, hi))
    }

    fn check_contains(&self, lo: f64, hi: f64) -> Result<()> {
        let below = lo < self.lo - SUPPORT_SLACK * (1.0 + self.lo.abs());
        let above = hi > self.hi + SUPPORT_SLACK * (1.0 + self.hi.abs());
        if lo.is_nan() || hi.is_nan() || below || above {
            let x = if below || lo.is_nan() { lo } else { hi };
            return Err(Error::OutOfSupport {
                x,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(())
    }
}

fn term_integral(t: Term, lo: f64, hi: f64) -> Result<f64> {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => {
            if t.rate.abs() < RATE_TOL {
                Ok(t.coef * (hi - lo))
            } else {
                Ok(t.coef / t.rate * (t.rate * lo).exp() * (t.rate * (hi - lo)).exp_m1())
            }
        }
        (true, false) if t.rate < 0.0 => Ok(-t.coef / t.rate * (t.rate * lo).exp()),
        (false, true) if t.rate > 0.0 => Ok(t.coef / t.rate * (t.rate * hi).exp()),
        _ => Err(Error::Divergent { rate: t.rate }),
    }
}

/// `∫_lo^hi f(shift − y)·g(y) dy` in closed form.
///
/// The integrand is expanded into a single exponential sum in `y`; `f` must
/// cover `[shift − hi, shift − lo]` and `g` must cover `[lo, hi]`.
pub fn cross_integral(f: &ExpSum, g: &ExpSum, shift: f64, lo: f64, hi: f64) -> Result<f64> {
    if lo > hi {
        return cross_integral(f, g, shift, hi, lo).map(|v| -v);
    }
    if lo == hi {
        return Ok(0.0);
    }
    g.check_contains(lo, hi)?;
    f.check_contains(shift - hi, shift - lo)?;
    let terms = f.terms.iter().flat_map(|a| {
        let weight = a.coef * (a.rate * shift).exp();
        g.terms.iter().map(move |b| (weight * b.coef, b.rate - a.rate))
    });
    ExpSum::new(terms, lo, hi)?.integrate(lo, hi)
}
