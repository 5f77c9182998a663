//! Invariant checks bundled for the `verify` command.
//!
//! The fast tier exercises the closed forms only; the Monte Carlo tier adds
//! simulation-based comparisons and depends on the simulation settings.

use num_complex::Complex64;

use crate::error::Result;
use crate::expsum::{cross_integral, ExpSum};
use crate::extrema::{extrema_law, ExtremaLaw, Side};
use crate::mc::{self, ExitEstimates, SimConfig};
use crate::model::{KillRate, KouModel};
use crate::onesided::PassageLaw;
use crate::prelimit;
use crate::presets;
use crate::quad;
use crate::roots::{characteristic_quartic, solve_roots, CharacteristicQuartic};
use crate::stats;
use crate::twosided::{ExitLaw, Interval, JointExitLaw};

/// Significance level for the statistical checks.
pub const ALPHA: f64 = 0.01;
/// Monte Carlo estimates must lie within this many standard errors.
pub const MAX_Z: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// `value ≤ threshold`
    AtMost,
    /// `value ≥ threshold`
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub bound: Bound,
}

impl Check {
    pub fn at_most(name: &'static str, value: Result<f64>, threshold: f64) -> Self {
        Self::build(name, value, threshold, Bound::AtMost)
    }

    pub fn at_least(name: &'static str, value: Result<f64>, threshold: f64) -> Self {
        Self::build(name, value, threshold, Bound::AtLeast)
    }

    fn build(name: &'static str, value: Result<f64>, threshold: f64, bound: Bound) -> Self {
        let value = value.unwrap_or_else(|e| {
            log::warn!("{name}: {e}");
            f64::NAN
        });
        Self {
            name,
            value,
            threshold,
            bound,
        }
    }

    /// NaN values always fail.
    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::AtMost => self.value <= self.threshold,
            Bound::AtLeast => self.value >= self.threshold,
        }
    }
}

/// `(E[e^{−sτ}; up], E[e^{−sτ}; down])` for Brownian motion with drift `mu`
/// leaving `(x−T, x)`.
pub fn brownian_exit(mu: f64, sigma2: f64, s: f64, x: f64, width: f64) -> (f64, f64) {
    let theta = (mu * mu + 2.0 * s * sigma2).sqrt() / sigma2;
    let (up, down) = (x, width - x);
    // sinh ratios written with decaying exponentials
    let ratio =
        |a: f64| ((-theta * (width - a)).exp() - (-theta * (width + a)).exp()) / (1.0 - (-2.0 * theta * width).exp());
    (
        (mu * up / sigma2).exp() * ratio(down),
        (-mu * down / sigma2).exp() * ratio(up),
    )
}

/// Largest `|k(r)|`-type deviation over a small grid, used by several checks.
fn max_over<I: IntoIterator<Item = Result<f64>>>(items: I) -> Result<f64> {
    let mut worst = 0.0f64;
    for v in items {
        let v = v?;
        if v.is_nan() {
            return Ok(f64::NAN);
        }
        worst = worst.max(v);
    }
    Ok(worst)
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

fn imaginary_axis() -> impl Iterator<Item = Complex64> {
    (0..20).map(|i| Complex64::new(0.0, -10.0 + 20.0 * i as f64 / 19.0 + 0.013))
}

fn model_checks(m: &KouModel, out: &mut Vec<Check>) {
    out.push(Check::at_most("model.k0", m.cumulant_real(0.0).map(f64::abs), 1e-15));
    let probes = [
        Complex64::new(0.3, 1.1),
        Complex64::new(-1.2, 0.4),
        Complex64::new(0.9, -2.5),
    ];
    out.push(Check::at_most(
        "model.hermitian",
        max_over(
            probes
                .iter()
                .map(|&r| Ok((m.cumulant(r.conj())? - m.cumulant(r)?.conj()).norm())),
        ),
        1e-12,
    ));
    out.push(Check::at_most(
        "model.imaginary_axis_re",
        max_over([0.1, 1.0, 10.0, -0.1, -1.0, -10.0].map(|u| Ok(m.cumulant(Complex64::new(0.0, u))?.re))),
        0.0,
    ));
    let fd = (|| {
        let h = 1e-6;
        let fd = (m.cumulant_real(h)? - m.cumulant_real(-h)?) / (2.0 * h);
        Ok((fd - m.drift_mean()).abs() / m.drift_mean().abs().max(1e-300))
    })();
    out.push(Check::at_most("model.drift_mean", fd, 1e-6));
}

fn root_checks(m: &KouModel, s: KillRate, out: &mut Vec<Check>) {
    let roots = solve_roots(m, s);
    out.push(Check::at_most(
        "roots.residual",
        roots.as_ref().map(|r| r.scaled_residual(m)).map_err(Clone::clone),
        1.0,
    ));
    out.push(Check::at_most(
        "roots.ordering",
        roots
            .as_ref()
            .map(|r| {
                let ok = 0.0 < r.rho1 && r.rho1 < m.c && m.c < r.rho2 && 0.0 < r.r1 && r.r1 < m.b && m.b < r.r2;
                if ok {
                    0.0
                } else {
                    1.0
                }
            })
            .map_err(Clone::clone),
        0.0,
    ));
    let quartic = roots.as_ref().map_err(Clone::clone).map(|r| {
        let q = characteristic_quartic(m, s);
        let rebuilt = CharacteristicQuartic::from_roots(q.0[4], r.signed());
        let scale = q.0.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        q.0.iter()
            .zip(rebuilt.0.iter())
            .map(|(a, b)| (a - b).abs() / scale)
            .fold(0.0, f64::max)
    });
    out.push(Check::at_most("roots.quartic", quartic, 1e-8));

    let (m1, s1) = presets::negative_drift();
    let asym = solve_roots(&m1, s1).map(|r| (r.r1 - s1.value() / m1.drift_mean().abs()).abs() / r.r1);
    out.push(Check::at_most("roots.small_s_asymptotics", asym, 0.05));
}

fn expsum_checks(ext: &ExtremaLaw, out: &mut Vec<Check>) {
    let f = ext.sup_density().mul_exp(0.3).and_then(|f| f.add(&ext.sup_tail_sum()));
    let vs_quad = f.as_ref().map_err(Clone::clone).and_then(|f| {
        let exact = f.integrate(0.0, 3.0)?;
        let num = quad::integrate(|v| f.value(v), 0.0, 3.0, 0.0, 1e-13).value;
        Ok((exact - num).abs() / exact.abs())
    });
    out.push(Check::at_most("expsum.integrate_vs_quadrature", vs_quad, 1e-10));
    let additive = f.as_ref().map_err(Clone::clone).and_then(|f| {
        let whole = f.integrate(0.0, 3.0)?;
        Ok((f.integrate(0.0, 1.2)? + f.integrate(1.2, 3.0)? - whole).abs() / whole.abs())
    });
    out.push(Check::at_most("expsum.additivity", additive, 1e-13));
    let symmetric = (|| {
        let (p, n) = (ext.sup_density(), ext.inf_density());
        let direct = cross_integral(p, n, 0.5, -1.0, 0.0)?;
        let swapped = cross_integral(n, p, 0.5, 0.5, 1.5)?;
        Ok((direct - swapped).abs() / direct.abs())
    })();
    out.push(Check::at_most("expsum.cross_symmetry", symmetric, 1e-12));
    let merged = ExpSum::new([(0.4, -1.0), (0.6, -1.0 + 1e-13), (1.0, -2.0)], 0.0, 5.0).map(|e| {
        let direct = |v: f64| 0.4 * (-v).exp() + 0.6 * ((-1.0 + 1e-13) * v).exp() + (-2.0 * v).exp();
        grid(0.0, 5.0, 11)
            .map(|v| (e.value(v) - direct(v)).abs())
            .fold(0.0, f64::max)
    });
    out.push(Check::at_most("expsum.merge", merged, 1e-12));
}

fn extrema_checks(m: &KouModel, ext: &ExtremaLaw, out: &mut Vec<Check>) {
    out.push(Check::at_most(
        "extrema.sup_mass",
        Ok((ext.sup_mass() - 1.0).abs()),
        1e-10,
    ));
    out.push(Check::at_most(
        "extrema.inf_mass",
        Ok((ext.inf_mass() - 1.0).abs()),
        1e-10,
    ));
    let lowest = (0..60)
        .map(|i| 1e-4 * 1.25f64.powi(i))
        .map(|v| ext.sup_density().value(v).min(ext.inf_density().value(-v)))
        .fold(f64::INFINITY, f64::min);
    out.push(Check::at_least("extrema.nonnegative", Ok(lowest), 0.0));
    let s = ext.roots().s.value();
    let fact = max_over(imaginary_axis().map(|r| {
        let lhs = ext.factor_transform(r, Side::Sup)? * ext.factor_transform(r, Side::Inf)?;
        Ok((lhs - s / (s - m.cumulant(r)?)).norm())
    }));
    out.push(Check::at_most("extrema.factorization", fact, 1e-10));
}

fn onesided_checks(ext: &ExtremaLaw, c: f64, out: &mut Vec<Check>) {
    let law = PassageLaw::new(*ext.roots(), c);
    let violation = grid(0.0, 10.0, 100)
        .flat_map(|x| [law.creep_mgf(x), law.overshoot_sum().value(x), law.passage_mgf(x)])
        .map(|v| (-v).max(v - 1.0).max(0.0))
        .fold(0.0, f64::max);
    out.push(Check::at_most("onesided.range", Ok(violation), 1e-15));
    let tail = grid(0.0, 10.0, 100)
        .map(|x| (law.passage_mgf(x) - ext.sup_tail(x)).abs())
        .fold(0.0, f64::max);
    out.push(Check::at_most("onesided.passage_equals_sup_tail", Ok(tail), 1e-12));

    let (m2, s2) = presets::positive_drift();
    let limit = (|| {
        let wide = ExitLaw::new(&m2, s2, 50.0)?;
        let law = PassageLaw::new(*wide.roots(), m2.c);
        max_over([0.5, 1.0, 2.0].map(|x| Ok((wide.q_up(x)? - law.passage_mgf(x)).abs())))
    })();
    out.push(Check::at_most("onesided.wide_interval_limit", limit, 1e-6));
}

/// `∫ h_s(T, x, z) dz` over `(x−T, x)` by adaptive quadrature.
pub fn pre_exit_mass(joint: &JointExitLaw, x: f64) -> Result<f64> {
    let h = joint.pre_exit_density(x)?;
    let (lo, hi) = h.support();
    let mut breaks = vec![lo];
    if lo < 0.0 && 0.0 < hi {
        breaks.push(0.0);
    }
    breaks.push(hi);
    Ok(quad::integrate_pieces(|z| h.eval(z).unwrap_or(f64::NAN), &breaks, 1e-14, 1e-13).value)
}

fn twosided_checks(m: &KouModel, s: KillRate, interval: Interval, out: &mut Vec<Check>) {
    let width = interval.width;
    let joint = match JointExitLaw::new(m, s, width) {
        Ok(j) => j,
        Err(e) => {
            out.push(Check::at_most("twosided.construct", Err(e), 0.0));
            return;
        }
    };
    let exit = joint.exit();
    let xs: Vec<f64> = grid(0.0, width, 50).collect();

    let boundary = max_over([
        exit.q_up(0.0).map(|v| (v - 1.0).abs()),
        exit.q_up(width).map(f64::abs),
        exit.q_down(0.0).map(f64::abs),
        exit.q_down(width).map(|v| (v - 1.0).abs()),
    ]);
    out.push(Check::at_most("twosided.boundary", boundary, 1e-10));

    let monotone = (|| {
        let up = xs.iter().map(|&x| exit.q_up(x)).collect::<Result<Vec<_>>>()?;
        let down = xs.iter().map(|&x| exit.q_down(x)).collect::<Result<Vec<_>>>()?;
        let bad = up.windows(2).filter(|w| w[1] >= w[0]).count() + down.windows(2).filter(|w| w[1] <= w[0]).count();
        Ok(bad as f64)
    })();
    out.push(Check::at_most("twosided.monotone", monotone, 0.0));
    let range = max_over(xs.iter().map(|&x| exit.q_total(x).map(|t| (-t).max(t - 1.0).max(0.0))));
    out.push(Check::at_most("twosided.range", range, 1e-12));

    let (c0, c1) = exit.exit_constants();
    let quot = exit
        .quotient_constants()
        .map(|(p0, p1)| ((c0 - p0) / c0).abs().max(((c1 - p1) / c1).abs()));
    out.push(Check::at_most("twosided.quotient_constants", quot, 1e-10));
    out.push(Check::at_least("twosided.c0_at_least_one", Ok(c0), 1.0));
    let c = m.c;
    let c0_int = exit
        .q_up_sum()
        .mul_exp(c)
        .and_then(|q| q.scale(c).integrate(0.0, width))
        .map(|v| (1.0 + v - c0).abs() / c0);
    out.push(Check::at_most("twosided.c0_integral", c0_int, 1e-10));

    let duality = max_over(xs.iter().map(|&x| Ok((exit.q_down(x)? - exit.q_down_direct(x)?).abs())));
    out.push(Check::at_most("twosided.duality", duality, 1e-9));
    let split = max_over(
        xs.iter()
            .map(|&x| Ok((joint.joint_creep(x)? + joint.joint_jump(x, 0.0)?.re - exit.q_up(x)?).abs())),
    );
    out.push(Check::at_most("twosided.joint_split", split, 1e-10));

    let x = interval.x;
    let conservation = (|| Ok((pre_exit_mass(&joint, x)? - (1.0 - exit.q_total(x)?)).abs()))();
    out.push(Check::at_most("twosided.conservation", conservation, 1e-8));
    let lowest = (|| {
        let h = joint.pre_exit_density(x)?;
        let (lo, hi) = h.support();
        let mut worst = f64::INFINITY;
        for i in 0..200 {
            worst = worst.min(h.eval(lo + (hi - lo) * (i as f64 + 0.5) / 200.0)?);
        }
        Ok(worst)
    })();
    out.push(Check::at_least("twosided.density_nonnegative", lowest, 0.0));

    let (m2, s2) = presets::positive_drift();
    let near = (|| {
        let nd = KouModel { lambda: 1e-8, ..m2 };
        let law = ExitLaw::new(&nd, s2, 2.0)?;
        max_over([0.25, 0.5, 1.0, 1.5, 1.75].map(|x| {
            let (up, down) = brownian_exit(nd.a, nd.sigma2, s2.value(), x, 2.0);
            Ok((law.q_total(x)? - up - down).abs())
        }))
    })();
    out.push(Check::at_most("twosided.near_diffusion", near, 1e-5));
}

fn prelimit_checks(m: &KouModel, out: &mut Vec<Check>) {
    let weights =
        max_over([1, 10, 100].map(|n| prelimit::build_prelimit(m, n).map(|pm| (pm.p1 + pm.p2 + pm.p3 - 1.0).abs())));
    out.push(Check::at_most("prelimit.weights", weights, 1e-12));
    let r = Complex64::new(0.5f64.min(0.5 * m.c), 0.0);
    let order = prelimit::convergence_table(m, &[r, Complex64::new(0.0, 1.0)], &[10, 100, 1000, 10000]).map(|t| {
        t.rows
            .iter()
            .flat_map(|row| row.ratios())
            .map(|q| (q / 10.0).ln().abs())
            .fold(0.0, f64::max)
    });
    out.push(Check::at_most("prelimit.first_order_rate", order, 2f64.ln()));
}

/// Closed-form invariants for `model` killed at `s` on `interval`.
pub fn fast_checks(model: &KouModel, s: KillRate, interval: Interval) -> Vec<Check> {
    let mut out = Vec::new();
    model_checks(model, &mut out);
    root_checks(model, s, &mut out);
    match extrema_law(model, s) {
        Ok(ext) => {
            expsum_checks(&ext, &mut out);
            extrema_checks(model, &ext, &mut out);
            onesided_checks(&ext, model.c, &mut out);
        }
        Err(e) => out.push(Check::at_most("extrema.construct", Err(e), 0.0)),
    }
    twosided_checks(model, s, interval, &mut out);
    prelimit_checks(model, &mut out);
    out
}

/// `x` with `P{V ≥ x} ≤ p`, for a nonincreasing tail function.
fn tail_quantile(tail: impl Fn(f64) -> f64, p: f64) -> f64 {
    let mut hi = 1.0;
    while tail(hi) > p && hi < 1e6 {
        hi *= 2.0;
    }
    hi
}

fn extrema_gof(ext: &ExtremaLaw, samples: &[mc::ExtremaSample], out: &mut Vec<Check>) {
    let sup: Vec<f64> = samples.iter().map(|e| e.sup).collect();
    let neg_inf: Vec<f64> = samples.iter().map(|e| -e.inf).collect();
    let sup_cdf = |v: f64| 1.0 - ext.sup_tail(v);
    let inf_cdf = |v: f64| 1.0 - ext.inf_tail(-v);
    let sup_hi = tail_quantile(|v| ext.sup_tail(v), 1e-3);
    let inf_hi = tail_quantile(|v| ext.inf_tail(-v), 1e-3);
    let sup_edges = stats::quantile_edges(sup_cdf, 0.0, sup_hi, 50);
    let inf_edges = stats::quantile_edges(inf_cdf, 0.0, inf_hi, 50);
    out.push(Check::at_least(
        "mc.sup_chi2_p",
        stats::chi_square_cdf(&sup, &sup_edges, sup_cdf).map(|t| t.p_value),
        ALPHA,
    ));
    out.push(Check::at_least(
        "mc.inf_chi2_p",
        stats::chi_square_cdf(&neg_inf, &inf_edges, inf_cdf).map(|t| t.p_value),
        ALPHA,
    ));
    let [a1, a2] = ext.sup_coefficients();
    let roots = ext.roots();
    let mean = a1 / roots.rho1.powi(2) + a2 / roots.rho2.powi(2);
    out.push(Check::at_most(
        "mc.sup_mean_z",
        Ok(mc::Estimate::from_values(sup.iter().copied()).z_score(mean)),
        MAX_Z,
    ));
}

/// χ² test of survived positions against the normalized pre-exit density.
pub fn pre_exit_gof(joint: &JointExitLaw, x: f64, positions: &[f64], bins: usize) -> Result<stats::TestResult> {
    let h = joint.pre_exit_density(x)?;
    let (lo, hi) = h.support();
    let mass = 1.0 - joint.exit().q_total(x)?;
    let edges: Vec<f64> = grid(lo, hi, bins + 1).collect();
    let probs: Vec<f64> = edges
        .windows(2)
        .map(|w| {
            let mut pts = vec![w[0]];
            if w[0] < 0.0 && 0.0 < w[1] {
                pts.push(0.0);
            }
            pts.push(w[1]);
            quad::integrate_pieces(|z| h.eval(z).unwrap_or(f64::NAN), &pts, 1e-14, 1e-12).value / mass
        })
        .collect();
    let counts = stats::histogram(positions, &edges);
    stats::chi_square(&counts, &probs, positions.len() as u64)
}

/// Simulation-based checks; cost grows linearly with `cfg.n_paths`.
pub fn monte_carlo_checks(model: &KouModel, s: KillRate, interval: Interval, cfg: &SimConfig) -> Vec<Check> {
    let mut out = Vec::new();
    let joint = match JointExitLaw::new(model, s, interval.width) {
        Ok(j) => j,
        Err(e) => {
            out.push(Check::at_most("mc.construct", Err(e), 0.0));
            return out;
        }
    };
    let x = interval.x;
    match mc::sample_exit(model, interval, cfg) {
        Ok(samples) => {
            let est = ExitEstimates::from_samples(&samples, s);
            let exit = joint.exit();
            let targets = [
                ("mc.q_up_z", exit.q_up(x)),
                ("mc.q_down_z", exit.q_down(x)),
                ("mc.joint_creep_z", joint.joint_creep(x)),
                ("mc.joint_jump_z", joint.joint_jump(x, 0.0).map(|v| v.re)),
            ];
            for ((name, target), (_, e)) in targets.into_iter().zip(est.named()) {
                out.push(Check::at_most(name, target.map(|t| e.z_score(t)), MAX_Z));
            }
            let overshoots: Vec<f64> = samples
                .iter()
                .filter(|e| e.side == mc::ExitSide::Up && e.by_jump)
                .map(|e| e.overshoot)
                .collect();
            out.push(Check::at_least(
                "mc.overshoot_ks_p",
                stats::ks_exponential(&overshoots, model.c).map(|t| t.p_value),
                ALPHA,
            ));
        }
        Err(e) => out.push(Check::at_most("mc.exit", Err(e), 0.0)),
    }
    match mc::sample_killed(model, interval, s, cfg) {
        Ok(samples) => {
            let alive = mc::Estimate::from_values(samples.iter().map(|k| if k.survived { 1.0 } else { 0.0 }));
            out.push(Check::at_most(
                "mc.survival_z",
                joint.exit().q_total(x).map(|q| alive.z_score(1.0 - q)),
                MAX_Z,
            ));
            let positions: Vec<f64> = samples.iter().filter(|k| k.survived).map(|k| k.position).collect();
            out.push(Check::at_least(
                "mc.pre_exit_chi2_p",
                pre_exit_gof(&joint, x, &positions, 40).map(|t| t.p_value),
                ALPHA,
            ));
        }
        Err(e) => out.push(Check::at_most("mc.killed", Err(e), 0.0)),
    }
    match (joint.exit().extrema(), mc::estimate_extrema(model, s, cfg)) {
        (ext, Ok(samples)) => extrema_gof(ext, &samples, &mut out),
        (_, Err(e)) => out.push(Check::at_most("mc.extrema", Err(e), 0.0)),
    }
    out
}
