//! `simulate`, `clark-ocone` and `hedge`.

use rayon::prelude::*;
use serde_json::json;

use poisson_hedge::hedging::{hedge_error, perfect_hedge_check, HedgeOptions, HedgeSource};
use poisson_hedge::representation::{clark_ocone_decompose, martingale_representation_check, DecomposeOptions};
use poisson_hedge::stats::Summary;
use poisson_hedge::{functional_library, AssetSize, Claim, Market, Model, SeedStream};

use crate::config::RunConfig;
use crate::output::{num, write, write_json, Csv};
use crate::CliError;

pub const DEFAULT_PATHS: usize = 1_000;
pub const DEFAULT_INNER: usize = 100;
/// Paths sampled by the perfect-hedge check inside `hedge`.
pub const PERFECT_HEDGE_PATHS: usize = 200;

pub fn build_model(cfg: &RunConfig) -> Result<(Model, Vec<f64>), CliError> {
    Ok(cfg.model_spec()?.build::<f64>()?)
}

pub fn build_market(cfg: &RunConfig, model: &Model) -> Result<Market, CliError> {
    match cfg.market.as_ref().and_then(|m| m.kappa.clone()) {
        Some(kappa) => Ok(Market::new(model.clone(), AssetSize::Linear(kappa))?),
        None => Ok(Market::jump_sized(model.clone())),
    }
}

fn build_claim(cfg: &RunConfig, model: &Model, market: &Market) -> Result<Claim, CliError> {
    let spec = cfg.claim_spec()?;
    Ok(functional_library(&spec.name, &spec.params, model, Some(market))?)
}

fn provenance(cfg: &RunConfig) -> [String; 2] {
    [cfg.seed.to_string(), cfg.hash()]
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let (model, discarded) = build_model(cfg)?;
    let n = cfg.paths.unwrap_or(DEFAULT_PATHS);
    let base = SeedStream::new(cfg.seed, 0);
    let paths: Vec<_> = (0..n as u64).into_par_iter().map(|i| model.sample_path(base.substream(i))).collect();
    let mut csv = Csv::new(&["path_id", "time", "asset", "jump"]);
    for (i, mu) in paths.iter().enumerate() {
        for a in mu.atoms() {
            csv.row(&[i.to_string(), num(a.time), a.asset.to_string(), num(a.jump)]);
        }
    }
    write(&cfg.out, "paths.csv", &csv.finish())?;
    let counts: Vec<f64> = paths.iter().map(|p| p.len() as f64).collect();
    let s = Summary::of(&counts);
    write_json(
        &cfg.out,
        "summary.json",
        &json!({
            "command": "simulate",
            "seed": cfg.seed,
            "config_hash": cfg.hash(),
            "n_paths": n,
            "total_atoms": paths.iter().map(|p| p.len()).sum::<usize>(),
            "mean_count": s.mean,
            "mean_count_se": s.std_error,
            "expected_count": model.expected_count(0.0, model.horizon()),
            "discarded_second_moment": discarded,
        }),
    )
}

pub fn clark_ocone(cfg: &RunConfig) -> Result<(), CliError> {
    let (model, _) = build_model(cfg)?;
    let market = build_market(cfg, &model)?;
    let f = build_claim(cfg, &model, &market)?;
    let n = cfg.paths.unwrap_or(DEFAULT_PATHS);
    let m = cfg.inner.unwrap_or(DEFAULT_INNER);
    let stream = SeedStream::new(cfg.seed, 0);
    let options = DecomposeOptions { use_oracles: cfg.use_oracles, ..Default::default() };
    let r = clark_ocone_decompose(&f, &model, n, m, stream, options)?;
    let [seed, hash] = provenance(cfg);
    let mut csv = Csv::new(&["path_id", "f", "integral", "residual", "oracle_residual", "seed", "config_hash"]);
    for i in 0..n {
        let oracle = r.oracle_residuals.as_ref().map(|o| num(o[i])).unwrap_or_default();
        csv.row(&[
            i.to_string(),
            num(r.f_values[i]),
            num(r.integrals[i]),
            num(r.residuals[i]),
            oracle,
            seed.clone(),
            hash.clone(),
        ]);
    }
    write(&cfg.out, "decomposition.csv", &csv.finish())?;
    let mut summary = json!({
        "command": "clark-ocone",
        "claim": r.label,
        "seed": cfg.seed,
        "config_hash": hash,
        "n_paths": n,
        "inner": m,
        "use_oracles": cfg.use_oracles,
        "mean": r.mean.value,
        "mean_se": r.mean.std_error,
        "mean_from_oracle": r.mean.from_oracle,
        "var_f": r.var_f,
        "residual_var": r.var_residual,
        "oracle_residual_var": r.var_oracle_residual,
        "ratio": r.ratio,
    });
    if let Some(grid) = &cfg.t_grid {
        let mc = martingale_representation_check(&f, &model, grid, n.max(2), m, stream, options)?;
        let mut csv = Csv::new(&["t", "mean_m", "se_m", "z_mean", "gap", "se_gap", "z_gap", "seed", "config_hash"]);
        for row in &mc.rows {
            csv.row(&[
                num(row.t),
                num(row.mean_m),
                num(row.se_m),
                num(row.z_mean),
                num(row.gap),
                num(row.se_gap),
                num(row.z_gap),
                seed.clone(),
                hash.clone(),
            ]);
        }
        write(&cfg.out, "martingale.csv", &csv.finish())?;
        summary["martingale_pass"] = json!(mc.passes(cfg.tolerance));
        summary["martingale_oracle_integrand"] = json!(mc.oracle_integrand);
    }
    write_json(&cfg.out, "summary.json", &summary)
}

pub fn hedge(cfg: &RunConfig) -> Result<(), CliError> {
    let (model, _) = build_model(cfg)?;
    let market = build_market(cfg, &model)?;
    let f = build_claim(cfg, &model, &market)?;
    let n = cfg.paths.unwrap_or(DEFAULT_PATHS).max(2);
    let m = cfg.inner.unwrap_or(DEFAULT_INNER);
    let stream = SeedStream::new(cfg.seed, 0);
    let options = HedgeOptions { use_oracles: cfg.use_oracles, panel: cfg.panel };
    let r = hedge_error(&f, &market, n, &HedgeSource::Estimated { inner: m }, stream, options)?;
    let grid = cfg.t_grid.clone().unwrap_or_else(|| (0..5).map(|k| model.horizon() * k as f64 / 4.0).collect());
    let check = perfect_hedge_check(&f, &market, &grid, n.min(PERFECT_HEDGE_PATHS), m, stream, cfg.tolerance)?;
    let [seed, hash] = provenance(cfg);
    let mut csv = Csv::new(&["path_id", "f", "hedge_integral", "residual", "seed", "config_hash"]);
    for i in 0..n {
        csv.row(&[
            i.to_string(),
            num(r.f_values[i]),
            num(r.hedge_integrals[i]),
            num(r.residuals[i]),
            seed.clone(),
            hash.clone(),
        ]);
    }
    write(&cfg.out, "hedge.csv", &csv.finish())?;
    let panel: Vec<_> = r
        .panel
        .iter()
        .map(|p| {
            json!({
                "integrand": p.label,
                "correlation": p.correlation,
                "correlation_z": p.correlation_z,
                "competitor_error_var": p.competitor_error_var,
                "competitor_z": p.competitor_z,
            })
        })
        .collect();
    write_json(
        &cfg.out,
        "summary.json",
        &json!({
            "command": "hedge",
            "claim": r.label,
            "seed": cfg.seed,
            "config_hash": hash,
            "n_paths": n,
            "inner": m,
            "mean": r.mean.value,
            "mean_se": r.mean.std_error,
            "mean_from_oracle": r.mean.from_oracle,
            "var_f": r.var_f,
            "var_hedge_integral": r.var_hedge_integral,
            "hedge_error_var": r.hedge_error_var,
            "hedge_error_se": r.hedge_error_se,
            "inner_noise_var": r.inner_noise_var,
            "zero_hedge_error_var": r.zero_hedge_error_var,
            "pythagoras_gap": r.pythagoras_gap,
            "pythagoras_z": r.pythagoras_z,
            "optimal_intercept": r.optimal_intercept,
            "untradeable_points": r.untradeable_points,
            "non_finite_points": r.non_finite_points,
            "orthogonality_bound": cfg.tolerance / (n as f64).sqrt(),
            "orthogonal": r.orthogonal(cfg.tolerance),
            "orthogonal_by_z": r.panel.iter().all(|p| p.correlation_z.abs() < cfg.tolerance),
            "panel": panel,
            "perfect_hedge": {
                "verdict": if check.verdict { "PASS" } else { "FAIL" },
                "fraction_proportional": check.fraction_pass,
                "points": check.points.len(),
                "grid": grid,
            },
        }),
    )
}
