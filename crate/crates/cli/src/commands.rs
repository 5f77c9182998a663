//! One function per subcommand; each returns the CSV table to emit.

use kou_exit::extrema::extrema_law;
use kou_exit::mc::{self, Estimate, ExitEstimates};
use kou_exit::prelimit::convergence_table;
use kou_exit::roots::solve_roots;
use kou_exit::verify::{self, Bound};
use kou_exit::{Complex64, Execution, ExitLaw, Interval, JointExitLaw, PassageLaw};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::table::{fmt_num, Table};
use crate::Grid;

const PRELIMIT_NS: [u32; 4] = [10, 100, 1000, 10000];

fn points(grid: Option<Grid>, default: Grid) -> Vec<f64> {
    grid.unwrap_or(default).points()
}

fn check_range(xs: &[f64], lo: f64, hi: f64, what: &str) -> Result<(), CliError> {
    match xs.iter().find(|&&v| v < lo || v > hi) {
        Some(v) => Err(CliError::Config(format!("{what} grid point {v} outside [{lo}, {hi}]"))),
        None => Ok(()),
    }
}

pub fn roots(cfg: &RunConfig) -> Result<Table, CliError> {
    let roots = solve_roots(&cfg.model, cfg.s)?;
    eprintln!("max |k(root) - s| = {:e}", roots.max_residual(&cfg.model));
    let mut t = Table::new(&["root", "value"]);
    for (name, v) in [
        ("rho1", roots.rho1),
        ("rho2", roots.rho2),
        ("r1", roots.r1),
        ("r2", roots.r2),
    ] {
        t.push(vec![name.into(), fmt_num(v)]);
    }
    Ok(t)
}

pub fn extrema(cfg: &RunConfig, grid: Option<Grid>) -> Result<Table, CliError> {
    let ext = extrema_law(&cfg.model, cfg.s)?;
    let [a1, a2] = ext.sup_coefficients();
    let [b1, b2] = ext.inf_coefficients();
    eprintln!("A1+ = {}, A2+ = {}", fmt_num(a1), fmt_num(a2));
    eprintln!("A1- = {}, A2- = {}", fmt_num(b1), fmt_num(b2));
    let mut t = Table::new(&["x", "sup_density", "inf_density"]);
    for x in points(
        grid,
        Grid {
            lo: -5.0,
            hi: 5.0,
            steps: 201,
        },
    ) {
        let sup = if x >= 0.0 { ext.sup_density().value(x) } else { 0.0 };
        let inf = if x <= 0.0 { ext.inf_density().value(x) } else { 0.0 };
        t.push_nums(&[x, sup, inf]);
    }
    Ok(t)
}

pub fn passage(cfg: &RunConfig, grid: Option<Grid>) -> Result<Table, CliError> {
    let law = PassageLaw::new(solve_roots(&cfg.model, cfg.s)?, cfg.model.c);
    let xs = points(
        grid,
        Grid {
            lo: 0.0,
            hi: 5.0,
            steps: 101,
        },
    );
    check_range(&xs, 0.0, f64::INFINITY, "passage")?;
    let mut t = Table::new(&["x", "creep", "overshoot", "passage"]);
    for x in xs {
        t.push_nums(&[x, law.creep_mgf(x), law.overshoot_sum().value(x), law.passage_mgf(x)]);
    }
    Ok(t)
}

pub fn exit(cfg: &RunConfig, grid: Option<Grid>) -> Result<Table, CliError> {
    let mut t = Table::new(&["T", "x", "q_up", "q_down", "q_total"]);
    for &width in &cfg.widths {
        let law = ExitLaw::new(&cfg.model, cfg.s, width)?;
        let xs: Vec<f64> = match grid {
            Some(g) => g.points().into_iter().filter(|&x| (0.0..=width).contains(&x)).collect(),
            None => Grid {
                lo: 0.0,
                hi: width,
                steps: 101,
            }
            .points(),
        };
        let rows = Execution::Parallel.map(xs.len(), |i| -> kou_exit::Result<[f64; 5]> {
            let x = xs[i];
            let (up, down) = (law.q_up(x)?, law.q_down(x)?);
            Ok([width, x, up, down, up + down])
        });
        for row in rows {
            t.push_nums(&row?);
        }
    }
    Ok(t)
}

pub fn joint(cfg: &RunConfig, grid: Option<Grid>) -> Result<Table, CliError> {
    let law = JointExitLaw::new(&cfg.model, cfg.s, cfg.width)?;
    let xs = points(
        grid,
        Grid {
            lo: 0.0,
            hi: cfg.width,
            steps: 101,
        },
    );
    check_range(&xs, 0.0, cfg.width, "joint")?;
    let mut t = Table::new(&["x", "creep", "jump", "total", "q_up"]);
    for x in xs {
        let (creep, jump) = (law.joint_creep(x)?, law.joint_jump(x, 0.0)?.re);
        t.push_nums(&[x, creep, jump, creep + jump, law.exit().q_up(x)?]);
    }
    Ok(t)
}

pub fn density(cfg: &RunConfig, grid: Option<Grid>) -> Result<Table, CliError> {
    let law = JointExitLaw::new(&cfg.model, cfg.s, cfg.width)?;
    let h = law.pre_exit_density(cfg.x)?;
    let (lo, hi) = h.support();
    let zs = match grid {
        Some(g) => g.points(),
        None => (1..=201).map(|i| lo + (hi - lo) * i as f64 / 202.0).collect(),
    };
    check_range(&zs, lo, hi, "density")?;
    let mut t = Table::new(&["z", "density"]);
    for z in zs {
        t.push_nums(&[z, h.eval(z)?]);
    }
    Ok(t)
}

pub fn simulate(cfg: &RunConfig) -> Result<Table, CliError> {
    let (m, s, sim) = (&cfg.model, cfg.s, &cfg.simulation);
    let interval = Interval::new(cfg.x, cfg.width)?;
    let law = JointExitLaw::new(m, s, cfg.width)?;
    let x = cfg.x;

    let exits = ExitEstimates::from_samples(&mc::sample_exit(m, interval, sim)?, s);
    let killed = mc::sample_killed(m, interval, s, sim)?;
    let survival = Estimate::from_values(killed.iter().map(|k| if k.survived { 1.0 } else { 0.0 }));
    let extrema = mc::estimate_extrema(m, s, sim)?;
    let sup_mean = Estimate::from_values(extrema.iter().map(|e| e.sup));
    let inf_mean = Estimate::from_values(extrema.iter().map(|e| e.inf));

    let ext = law.exit().extrema();
    let r = ext.roots();
    let [a1, a2] = ext.sup_coefficients();
    let [b1, b2] = ext.inf_coefficients();
    let closed = [
        law.exit().q_up(x)?,
        law.exit().q_down(x)?,
        law.joint_creep(x)?,
        law.joint_jump(x, 0.0)?.re,
    ];
    let mut rows: Vec<(&str, Estimate, f64)> = exits.named().iter().zip(closed).map(|(&(n, e), c)| (n, e, c)).collect();
    rows.push(("survival", survival, 1.0 - law.exit().q_total(x)?));
    rows.push(("sup_mean", sup_mean, a1 / (r.rho1 * r.rho1) + a2 / (r.rho2 * r.rho2)));
    rows.push(("inf_mean", inf_mean, -(b1 / (r.r1 * r.r1) + b2 / (r.r2 * r.r2))));

    let mut t = Table::new(&["quantity", "estimate", "std_error", "closed_form", "z"]);
    for (name, e, c) in rows {
        t.push(vec![
            name.into(),
            fmt_num(e.mean),
            fmt_num(e.std_error),
            fmt_num(c),
            fmt_num((e.mean - c) / e.std_error),
        ]);
    }
    Ok(t)
}

pub fn prelimit(cfg: &RunConfig, grid: Option<Grid>) -> Result<Table, CliError> {
    let rs: Vec<Complex64> = match grid {
        Some(g) => g.points().into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        None => vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, 1.0)],
    };
    let table = convergence_table(&cfg.model, &rs, &PRELIMIT_NS)?;
    let mut t = Table::new(&["r_re", "r_im", "n", "k_n_re", "k_n_im", "k_re", "k_im", "deviation"]);
    for row in &table.rows {
        let k = cfg.model.cumulant(row.r)?;
        for ((n, v), d) in table.ns.iter().zip(&row.values).zip(&row.deviations) {
            t.push_nums(&[row.r.re, row.r.im, *n as f64, v.re, v.im, k.re, k.im, *d]);
        }
        if !row.monotone {
            eprintln!("note: deviations for r = {} are not monotone in n", row.r);
        }
    }
    Ok(t)
}

/// Runs the checks and returns the report with the number of failures.
pub fn verify(cfg: &RunConfig, full: bool) -> (Table, usize) {
    let interval = Interval {
        x: cfg.x,
        width: cfg.width,
    };
    let mut checks = verify::fast_checks(&cfg.model, cfg.s, interval);
    if full {
        checks.extend(verify::monte_carlo_checks(&cfg.model, cfg.s, interval, &cfg.simulation));
    }
    let mut t = Table::new(&["check", "value", "threshold", "bound", "status"]);
    let mut failures = 0;
    for c in &checks {
        let passed = c.passed();
        if !passed {
            failures += 1;
            eprintln!("FAIL {}: {} vs {}", c.name, c.value, c.threshold);
        }
        let bound = match c.bound {
            Bound::AtMost => "max",
            Bound::AtLeast => "min",
        };
        t.push(vec![
            c.name.into(),
            fmt_num(c.value),
            fmt_num(c.threshold),
            bound.into(),
            if passed { "pass" } else { "fail" }.into(),
        ]);
    }
    eprintln!("{} of {} checks passed", checks.len() - failures, checks.len());
    (t, failures)
}
