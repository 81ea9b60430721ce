//! Clark–Ocone decomposition of a claim, the conditional-expectation
//! martingale `M_t = E[f(η) | η_t]` and the time-truncated representation.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrals::{skorohod_pathwise, skorohod_pathwise_with, PredictableIntegrand};
use crate::intensity::IntensityModel;
use crate::malliavin::{clark_integrand, Estimate, Functional};
use crate::point_measure::PointConfiguration;
use crate::quadrature::Quadrature;
use crate::rng::{SeedStream, CONDITIONAL, MEAN_PASS};
use crate::scalar::Real;
use crate::stats::{standardized, Accumulator, Summary};

/// Estimate of `E f(η)`, exact when it comes from an oracle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanEstimate<T> {
    pub value: T,
    pub std_error: T,
    pub from_oracle: bool,
    pub n_paths: usize,
}

/// `E f(η)` from the oracle when allowed, otherwise from `n` fresh paths on
/// `stream.substream(MEAN_PASS)`.
pub fn claim_mean<T: Real>(
    f: &Functional<T>,
    model: &IntensityModel<T>,
    use_oracle: bool,
    n: usize,
    stream: SeedStream,
) -> Result<MeanEstimate<T>> {
    if use_oracle {
        if let Some(mean) = f.oracles().mean {
            return Ok(MeanEstimate { value: mean, std_error: T::zero(), from_oracle: true, n_paths: 0 });
        }
    }
    if n == 0 {
        return Err(Error::ZeroSamples("claim mean"));
    }
    let pass = stream.substream(MEAN_PASS);
    let values: Vec<T> = (0..n as u64).into_par_iter().map(|i| f.evaluate(&model.sample_path(pass.substream(i)))).collect();
    let s = Summary::of(&values);
    Ok(MeanEstimate { value: s.mean, std_error: s.std_error, from_oracle: false, n_paths: n })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecomposeOptions<T> {
    /// Use closed forms attached to the claim (mean, difference, integrand).
    pub use_oracles: bool,
    /// Time quadrature for the Monte Carlo integrand. Its values are noisy,
    /// so a fixed rule is the default.
    pub rule: Quadrature<T>,
}

impl<T: Real> Default for DecomposeOptions<T> {
    fn default() -> Self {
        Self { use_oracles: true, rule: Quadrature::Gauss7 }
    }
}

#[derive(Clone, Debug)]
pub struct DecompositionReport<T> {
    pub label: String,
    pub mean: MeanEstimate<T>,
    pub f_values: Vec<T>,
    /// `δ(ĥ)` with the Monte Carlo integrand.
    pub integrals: Vec<T>,
    /// `f − E f − δ(ĥ)`.
    pub residuals: Vec<T>,
    /// Residual with the closed-form integrand, when the claim has one.
    pub oracle_residuals: Option<Vec<T>>,
    pub var_f: T,
    pub var_residual: T,
    pub var_oracle_residual: Option<T>,
    /// `Var R / Var f` (0 when `Var f` is 0).
    pub ratio: T,
    pub inner: usize,
    pub n_paths: usize,
}

/// `f(η) = E f + δ(ĥ) + R` on `n` paths, with `ĥ` estimated from `m` inner
/// samples at every point where the integral needs it.
pub fn clark_ocone_decompose<T: Real>(
    f: &Functional<T>,
    model: &IntensityModel<T>,
    n: usize,
    m: usize,
    stream: SeedStream,
    options: DecomposeOptions<T>,
) -> Result<DecompositionReport<T>> {
    if n == 0 {
        return Err(Error::ZeroSamples("outer paths"));
    }
    let f = if options.use_oracles { f.clone() } else { f.without_oracles() };
    let mean = claim_mean(&f, model, options.use_oracles, 10 * n, stream)?;
    let oracle = f.oracles().clark.clone();
    let rows = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let path_stream = stream.substream(i);
            let mu = model.sample_path(path_stream);
            let h = clark_integrand(&f, model, m, path_stream)?;
            let fv = f.evaluate(&mu);
            let integral = skorohod_pathwise_with(&h, &mu, model, options.rule)?;
            let oracle_residual = match &oracle {
                Some(h) => Some(fv - mean.value - skorohod_pathwise(h, &mu, model)?),
                None => None,
            };
            Ok((fv, integral, fv - mean.value - integral, oracle_residual))
        })
        .collect::<Result<Vec<_>>>()?;
    let f_values: Vec<T> = rows.iter().map(|r| r.0).collect();
    let integrals: Vec<T> = rows.iter().map(|r| r.1).collect();
    let residuals: Vec<T> = rows.iter().map(|r| r.2).collect();
    let oracle_residuals: Option<Vec<T>> = oracle.as_ref().map(|_| rows.iter().map(|r| r.3.unwrap()).collect());
    let var_f = Summary::of(&f_values).variance;
    let var_residual = Summary::of(&residuals).variance;
    let ratio = if var_f > T::zero() { var_residual / var_f } else { T::zero() };
    Ok(DecompositionReport {
        label: f.label().to_string(),
        mean,
        var_oracle_residual: oracle_residuals.as_ref().map(|r| Summary::of(r).variance),
        f_values,
        integrals,
        residuals,
        oracle_residuals,
        var_f,
        var_residual,
        ratio,
        inner: m,
        n_paths: n,
    })
}

/// `M_t = E[f(η) | η_t]` on the path `μ`: the average of
/// `f(μ_{[0,t]} + ν_i)` over `m` futures `ν_i ~ Π^t`. Exact for `t ≥ T`.
pub fn conditional_expectation_mc<T: Real>(
    f: &Functional<T>,
    mu: &PointConfiguration<T>,
    t: T,
    model: &IntensityModel<T>,
    m: usize,
    stream: SeedStream,
) -> Result<Estimate<T>> {
    if m == 0 {
        return Err(Error::ZeroSamples("conditional expectation"));
    }
    if !(t >= T::zero()) {
        return Err(Error::InvalidParameter(format!("negative time {t}")));
    }
    if t >= model.horizon() {
        return Ok(Estimate { value: f.evaluate(mu), std_error: T::zero(), samples: m });
    }
    let past = mu.restrict_upto(t);
    let mut rng = stream.rng();
    let mut acc = Accumulator::new();
    for _ in 0..m {
        let future = model.sample_future_with(t, &mut rng);
        acc.push(f.evaluate(&PointConfiguration::splice(&past, None, &future)));
    }
    let s = acc.summary();
    Ok(Estimate { value: s.mean, std_error: s.std_error, samples: m })
}

/// Added in quadrature to every standard error of a gap: pathwise integrals
/// are only accurate to about this level, so smaller gaps carry no signal.
pub const NUMERIC_FLOOR: f64 = 1e-9;

/// One grid time of a martingale check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MartingaleRow<T> {
    pub t: T,
    /// Mean of `M_t` over paths and its standard error.
    pub mean_m: T,
    pub se_m: T,
    /// `(mean M_t − E f) / SE`.
    pub z_mean: T,
    /// Mean of `M_t − E f − δ(1_{[0,t]} ĥ)` and its standard error.
    pub gap: T,
    pub se_gap: T,
    pub z_gap: T,
}

#[derive(Clone, Debug)]
pub struct MartingaleReport<T> {
    pub label: String,
    pub mean: MeanEstimate<T>,
    pub rows: Vec<MartingaleRow<T>>,
    pub oracle_integrand: bool,
    pub n_paths: usize,
    pub inner: usize,
}

impl<T: Real> MartingaleReport<T> {
    pub fn passes(&self, tolerance: T) -> bool {
        self.rows.iter().all(|r| r.z_mean.abs() < tolerance && r.z_gap.abs() < tolerance)
    }
}

/// Checks `E M_t = E f` and `M_t = E f + δ(1_{[0,t]} ĥ)` at every grid time.
///
/// The integrand is the claim's closed form when present and allowed,
/// otherwise the Monte Carlo one.
pub fn martingale_representation_check<T: Real>(
    f: &Functional<T>,
    model: &IntensityModel<T>,
    grid: &[T],
    n: usize,
    m: usize,
    stream: SeedStream,
    options: DecomposeOptions<T>,
) -> Result<MartingaleReport<T>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 paths, got {n}")));
    }
    if let Some(&t) = grid.iter().find(|&&t| !(t >= T::zero() && t <= model.horizon())) {
        return Err(Error::InvalidParameter(format!("grid time {t} outside [0, horizon]")));
    }
    let f = if options.use_oracles { f.clone() } else { f.without_oracles() };
    let mean = claim_mean(&f, model, options.use_oracles, 10 * n, stream)?;
    let oracle = f.oracles().clark.clone();
    let rule = if oracle.is_some() { Quadrature::default() } else { options.rule };
    let per_path = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let path_stream = stream.substream(i);
            let mu = model.sample_path(path_stream);
            let h: PredictableIntegrand<T> = match &oracle {
                Some(h) => h.clone(),
                None => clark_integrand(&f, model, m, path_stream)?,
            };
            let cond = path_stream.substream(CONDITIONAL);
            grid.iter()
                .enumerate()
                .map(|(k, &t)| {
                    let mt = conditional_expectation_mc(&f, &mu, t, model, m, cond.substream(k as u64))?.value;
                    let integral = skorohod_pathwise_with(&h.truncated(t), &mu, model, rule)?;
                    Ok((mt, mt - mean.value - integral))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let ms: Vec<T> = per_path.iter().map(|p| p[k].0).collect();
            let gaps: Vec<T> = per_path.iter().map(|p| p[k].1).collect();
            let sm = Summary::of(&ms);
            let sg = Summary::of(&gaps);
            let floor = T::lit(NUMERIC_FLOOR);
            let se_mean = (sm.std_error * sm.std_error + mean.std_error * mean.std_error + floor * floor).sqrt();
            let se_gap = (sg.std_error * sg.std_error + mean.std_error * mean.std_error + floor * floor).sqrt();
            MartingaleRow {
                t,
                mean_m: sm.mean,
                se_m: sm.std_error,
                z_mean: standardized(sm.mean - mean.value, se_mean),
                gap: sg.mean,
                se_gap: sg.std_error,
                z_gap: standardized(sg.mean, se_gap),
            }
        })
        .collect();
    Ok(MartingaleReport {
        label: f.label().to_string(),
        mean,
        rows,
        oracle_integrand: oracle.is_some(),
        n_paths: n,
        inner: m,
    })
}
