//! The identity suite behind `verify`.
//!
//! Every check becomes one row of `verify.csv`. Statistical rows pass when
//! `std_gap < tolerance`. Rows named `exact:…` hold a per-path identity: their
//! `std_gap` column is the largest absolute pathwise error and they pass below
//! a fixed numerical threshold, whatever the tolerance. Rows named
//! `verdict:…` compare a yes/no outcome with the expected one.

use rayon::prelude::*;
use serde_json::json;

use poisson_hedge::claims::Payoff;
use poisson_hedge::hedging::{hedge_error, perfect_hedge_check, HedgeOptions, HedgeSource, PERFECT_HEDGE_SHARE};
use poisson_hedge::integrals::{
    estimate_covariance, estimate_duality, estimate_isometry, multiple_wiener_ito, skorohod_pathwise,
    skorohod_removal_form, IdentityReport, PredictableIntegrand, SymmetricKernel,
};
use poisson_hedge::malliavin::clark_integrand_mc;
use poisson_hedge::representation::{clark_ocone_decompose, martingale_representation_check, DecomposeOptions};
use poisson_hedge::stats::{standardized, Comparison, Summary};
use poisson_hedge::{functional_library, Atom, Claim, ClaimParams, Configuration, JumpLaw, Market, Model, SeedStream};

use crate::config::RunConfig;
use crate::output::{write, write_json, Csv};
use crate::CliError;

struct Check {
    report: IdentityReport<f64>,
    pass: bool,
}

struct Suite<'a> {
    cfg: &'a RunConfig,
    checks: Vec<Check>,
}

impl Suite<'_> {
    fn paths(&self, default: usize) -> usize {
        self.cfg.paths.unwrap_or(default).max(2)
    }

    fn inner(&self, default: usize) -> usize {
        self.cfg.inner.unwrap_or(default)
    }

    fn stream(&self, k: u64) -> SeedStream {
        SeedStream::new(self.cfg.seed, k)
    }

    fn push(&mut self, identity: impl Into<String>, comparison: Comparison<f64>, n_paths: usize, pass: bool) {
        let report = IdentityReport { identity: identity.into(), comparison, n_paths, seed: self.cfg.seed };
        self.checks.push(Check { report, pass });
    }

    fn statistical(&mut self, report: IdentityReport<f64>) {
        let pass = report.comparison.std_gap < self.cfg.tolerance;
        self.checks.push(Check { report, pass });
    }

    fn stat(&mut self, identity: impl Into<String>, comparison: Comparison<f64>, n_paths: usize) {
        let pass = comparison.std_gap < self.cfg.tolerance;
        self.push(identity, comparison, n_paths, pass);
    }

    /// Per-path `lhs = rhs` up to `threshold`.
    fn exact(&mut self, identity: &str, pairs: &[(f64, f64)], threshold: f64) {
        let worst = pairs.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let lhs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let rhs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let comparison = Comparison {
            lhs: Summary::of(&lhs).mean,
            rhs: Summary::of(&rhs).mean,
            se_lhs: 0.0,
            se_rhs: 0.0,
            se_gap: 0.0,
            std_gap: worst,
        };
        self.push(format!("exact:{identity}"), comparison, pairs.len(), worst.is_finite() && worst < threshold);
    }

    fn verdict(&mut self, identity: &str, fraction: f64, got: bool, expected: bool, n_paths: usize) {
        let comparison = Comparison {
            lhs: fraction,
            rhs: PERFECT_HEDGE_SHARE,
            se_lhs: 0.0,
            se_rhs: 0.0,
            se_gap: 0.0,
            std_gap: 0.0,
        };
        self.push(format!("verdict:{identity}"), comparison, n_paths, got == expected);
    }
}

fn per_path<F>(model: &Model, n: usize, stream: SeedStream, f: F) -> Result<Vec<(f64, f64)>, CliError>
where
    F: Fn(&Configuration) -> poisson_hedge::Result<(f64, f64)> + Sync,
{
    Ok((0..n as u64)
        .into_par_iter()
        .map(|i| f(&model.sample_path(stream.substream(i))))
        .collect::<poisson_hedge::Result<Vec<_>>>()?)
}

fn unit() -> Model {
    Model::unit(1.0).expect("unit model")
}

fn claim(name: &str, params: ClaimParams, model: &Model, market: Option<&Market>) -> Result<Claim, CliError> {
    Ok(functional_library(name, &params, model, market)?)
}

fn square_payoff(market: &Market) -> Result<Claim, CliError> {
    let p = ClaimParams { payoff: Payoff::Square, ..Default::default() };
    claim("terminal_payoff", p, market.intensity(), Some(market))
}

fn pathwise(s: &mut Suite) -> Result<(), CliError> {
    let model = unit();
    let n = s.paths(10_000);
    let h = PredictableIntegrand::indicator(0.15, 0.85, None);
    let pairs = per_path(&model, n, s.stream(1), |mu| {
        Ok((skorohod_pathwise(&h, mu, &model)?, mu.count(0.15..=0.85, None) as f64 - 0.7))
    })?;
    s.exact("indicator_integral", &pairs, 1e-12);

    let quad = claim("count_polynomial", ClaimParams { coefficients: vec![0.0, 0.0, 1.0], ..Default::default() }, &model, None)?;
    let h = quad.oracles().clark.clone().expect("closed-form integrand");
    let pairs = per_path(&model, n, s.stream(2), |mu| Ok((quad.evaluate(mu) - 2.0, skorohod_pathwise(&h, mu, &model)?)))?;
    s.exact("quadratic_clark_ocone", &pairs, 1e-10);

    let n_small = s.paths(1_000);
    let capped = PredictableIntegrand::new("capped_count", |p, _| p.len().min(5) as f64);
    let pairs = per_path(&model, n_small, s.stream(3), |mu| {
        Ok((skorohod_pathwise(&capped, mu, &model)?, skorohod_removal_form(&capped, mu, &model)?))
    })?;
    s.exact("removal_form", &pairs, 1e-14);

    let g2 = SymmetricKernel::indicator_power(2, 0.1, 0.8)?;
    let pairs = per_path(&model, n_small, s.stream(4), |mu| {
        let c = mu.count(0.1..=0.8, None) as f64;
        Ok((multiple_wiener_ito(&g2, mu, &model)?, (c - 0.7) * (c - 0.7) - c))
    })?;
    s.exact("i2_product_formula", &pairs, 1e-9);

    let lin = claim("linear", ClaimParams { window: Some([0.2, 0.6]), ..Default::default() }, &model, None)?;
    let r = clark_ocone_decompose(&lin, &model, n_small, 1, s.stream(5), DecomposeOptions::default())?;
    let pairs: Vec<(f64, f64)> = r.residuals.iter().map(|&x| (x, 0.0)).collect();
    s.exact("linear_clark_ocone", &pairs, 1e-10);
    Ok(())
}

fn second_order(s: &mut Suite) -> Result<(), CliError> {
    let model = unit();
    let n = s.paths(100_000);
    let corpus = [
        PredictableIntegrand::indicator(0.2, 0.7, None),
        PredictableIntegrand::new("capped_count", |p, _| p.len().min(5) as f64),
        PredictableIntegrand::new("count_ramp", |p, y| (1.0 + p.len() as f64) * (1.0 - y.time)),
    ];
    for (k, h) in corpus.iter().enumerate() {
        let r = estimate_isometry(h, &model, n, s.stream(10 + k as u64))?;
        s.statistical(r);
    }
    let left = PredictableIntegrand::indicator(0.0, 0.5, None);
    let right = corpus[1].times(&PredictableIntegrand::new("late", |_, y| if y.time > 0.5 { 1.0 } else { 0.0 }).with_breakpoints([0.5]));
    s.statistical(estimate_covariance(&left, &right, &model, n, s.stream(13))?);

    let pairs = per_path(&model, n, s.stream(14), |mu| Ok((skorohod_pathwise(&corpus[2], mu, &model)?, 0.0)))?;
    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    s.stat("mean_zero:count_ramp", Comparison::against(&values, 0.0), n);

    let g = claim("exponential", ClaimParams::default(), &model, None)?;
    s.statistical(estimate_duality(&g, &PredictableIntegrand::indicator(0.0, 1.0, None), &model, n, s.stream(15))?);

    let g1 = SymmetricKernel::indicator_power(1, 0.1, 0.8)?;
    let g2 = SymmetricKernel::indicator_power(2, 0.1, 0.8)?;
    let pairs = per_path(&model, n, s.stream(16), |mu| {
        let i1 = multiple_wiener_ito(&g1, mu, &model)?;
        let i2 = multiple_wiener_ito(&g2, mu, &model)?;
        Ok((i1 * i2, i2 * i2))
    })?;
    let cross: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let square: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    s.stat("chaos_orthogonality:I1I2", Comparison::against(&cross, 0.0), n);
    s.stat("chaos_isometry:I2I2", Comparison::against(&square, 2.0 * 0.7 * 0.7), n);
    Ok(())
}

fn clark(s: &mut Suite) -> Result<(), CliError> {
    let model = unit();
    let m = s.inner(10_000);
    let f = claim("exponential", ClaimParams::default(), &model, None)?;
    let oracle = f.oracles().clark.clone().expect("closed-form integrand");
    let black_box = f.without_oracles();
    let mu = Configuration::from_atoms(1.0, [0.12, 0.37, 0.58, 0.83].map(|t| Atom::new(t, 0, 1.0).expect("atom")))?;
    for k in 1..=9 {
        let y = Atom::new(k as f64 / 10.0, 0, 1.0)?;
        let e = clark_integrand_mc(&black_box, &mu, y.time, 0, 1.0, &model, m, s.stream(20 + k))?;
        let exact = oracle.evaluate(&mu, &y);
        let comparison = Comparison {
            lhs: e.value,
            rhs: exact,
            se_lhs: e.standard_error,
            se_rhs: 0.0,
            se_gap: e.standard_error,
            std_gap: standardized(e.value - exact, e.standard_error),
        };
        s.stat(format!("clark_integrand:exponential:s={}", y.time), comparison, m);
    }

    let quad = claim("count_polynomial", ClaimParams { coefficients: vec![0.0, 0.0, 1.0], ..Default::default() }, &model, None)?;
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let n = s.paths(10_000);
    let m = s.inner(1_000);
    let r = martingale_representation_check(&quad, &model, &grid, n, m, s.stream(30), DecomposeOptions::default())?;
    for row in &r.rows {
        let mean = Comparison {
            lhs: row.mean_m,
            rhs: r.mean.value,
            se_lhs: row.se_m,
            se_rhs: r.mean.std_error,
            se_gap: row.se_m,
            std_gap: row.z_mean,
        };
        s.stat(format!("martingale_mean:t={}", row.t), mean, n);
        let gap = Comparison {
            lhs: row.gap,
            rhs: 0.0,
            se_lhs: row.se_gap,
            se_rhs: 0.0,
            se_gap: row.se_gap,
            std_gap: row.z_gap,
        };
        s.stat(format!("truncated_representation:t={}", row.t), gap, n);
    }
    Ok(())
}

fn hedging(s: &mut Suite) -> Result<(), CliError> {
    let law = JumpLaw::new(vec![(1.0, 0.5), (-1.0, 0.5)])?;
    let pm = Market::jump_sized(Model::homogeneous(1.0, 1.0, law)?);
    let f = square_payoff(&pm)?;
    let mk = pm.clone();
    let exact = PredictableIntegrand::new("two_zeta", move |p, y| 2.0 * mk.zeta(p, (0.0, y.time), None).unwrap_or(0.0));
    let n = s.paths(100_000);
    let r = hedge_error(&f, &pm, n, &HedgeSource::Given(exact), s.stream(40), HedgeOptions::default())?;
    let squares: Vec<f64> = r.residuals.iter().map(|x| x * x).collect();
    s.stat("hedge_error:exact_hedge", Comparison::against(&squares, 1.0), n);
    for p in &r.panel {
        let se = if p.correlation_z > 0.0 { p.correlation.abs() / p.correlation_z } else { 0.0 };
        let c = Comparison { lhs: p.correlation, rhs: 0.0, se_lhs: se, se_rhs: 0.0, se_gap: se, std_gap: p.correlation_z };
        s.stat(format!("orthogonality:{}", p.label), c, n);
    }
    for p in &r.panel {
        // one-sided: only a competitor that beats the hedge counts against it
        let c = Comparison {
            lhs: r.hedge_error_var,
            rhs: p.competitor_error_var,
            se_lhs: r.hedge_error_se,
            se_rhs: 0.0,
            se_gap: 0.0,
            std_gap: (-p.competitor_z).max(0.0),
        };
        s.stat(format!("dominance:{}", p.label), c, n);
    }
    let pyth = Comparison {
        lhs: r.var_f,
        rhs: r.var_hedge_integral + Summary::of(&r.residuals).variance,
        se_lhs: 0.0,
        se_rhs: 0.0,
        se_gap: if r.pythagoras_z > 0.0 { r.pythagoras_gap.abs() / r.pythagoras_z } else { 0.0 },
        std_gap: r.pythagoras_z,
    };
    s.stat("pythagoras", pyth, n);

    let n_mc = s.paths(10_000);
    let m = s.inner(1_000);
    let opts = HedgeOptions { panel: false, ..HedgeOptions::default() };
    let r = hedge_error(&f, &pm, n_mc, &HedgeSource::Estimated { inner: m }, s.stream(41), opts)?;
    let excess = ((r.hedge_error_var - 1.0).abs() - r.inner_noise_var).max(0.0);
    let c = Comparison {
        lhs: r.hedge_error_var,
        rhs: 1.0,
        se_lhs: r.hedge_error_se,
        se_rhs: 0.0,
        se_gap: r.hedge_error_se,
        std_gap: standardized(excess, r.hedge_error_se),
    };
    s.stat("hedge_error:estimated_hedge", c, n_mc);

    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let n_pts = s.paths(200);
    let tol = s.cfg.tolerance;
    let single = Market::jump_sized(Model::homogeneous(1.0, 1.0, JumpLaw::point(1.0)?)?);
    let g = square_payoff(&single)?;
    let v = perfect_hedge_check(&g, &single, &grid, n_pts, m, s.stream(42), tol)?;
    s.verdict("perfect_hedge:single_jump", v.fraction_pass, v.verdict, true, n_pts);
    let v = perfect_hedge_check(&f, &pm, &grid, n_pts, m, s.stream(43), tol)?;
    s.verdict("perfect_hedge:plus_minus", v.fraction_pass, v.verdict, false, n_pts);

    let n_single = s.paths(2_000);
    let r = hedge_error(&g, &single, n_single, &HedgeSource::Estimated { inner: m }, s.stream(44), opts)?;
    let share = r.hedge_error_var / r.var_f;
    let c = Comparison { lhs: share, rhs: 1e-2, se_lhs: r.hedge_error_se / r.var_f, se_rhs: 0.0, se_gap: 0.0, std_gap: 0.0 };
    s.push("verdict:single_jump_error_share", c, n_single, share < 1e-2);
    Ok(())
}

/// Writes `verify.csv` and `verdict.json`. True when every check passed.
pub fn run_verify(cfg: &RunConfig) -> Result<bool, CliError> {
    let mut suite = Suite { cfg, checks: Vec::new() };
    pathwise(&mut suite)?;
    second_order(&mut suite)?;
    clark(&mut suite)?;
    hedging(&mut suite)?;

    let hash = cfg.hash();
    let mut header = IdentityReport::<f64>::CSV_COLUMNS.to_vec();
    header.extend(["config_hash", "pass"]);
    let mut csv = Csv::new(&header);
    for c in &suite.checks {
        let mut record = c.report.csv_record();
        record.extend([hash.clone(), c.pass.to_string()]);
        csv.row(&record);
    }
    write(&cfg.out, "verify.csv", &csv.finish())?;
    let failed: Vec<&str> = suite.checks.iter().filter(|c| !c.pass).map(|c| c.report.identity.as_str()).collect();
    let pass = failed.is_empty();
    write_json(
        &cfg.out,
        "verdict.json",
        &json!({
            "command": "verify",
            "seed": cfg.seed,
            "config_hash": hash,
            "tolerance": cfg.tolerance,
            "checks": suite.checks.len(),
            "failed": failed,
            "pass": pass,
        }),
    )?;
    Ok(pass)
}
