//! Minimal-variance hedging in the pure-jump market: the kernel `J`, the
//! hedge `h_f`, hedge-error diagnostics, the perfect-hedge test and the
//! self-financing value process.
//!
//! With discrete `ν_j` the hedge is a finite sum over the jump sizes:
//! for separable `κ = κ_j(μ_{s−}, s) z`,
//! `h_f = κ_j^⊕ (∫ z² dν_j)^⊕ Σ_k w_k z_k ĥ(s, j, z_k)`, and in general
//! `h_f = (Σ_k κ_k² w_k)^⊕ Σ_k κ_k w_k ĥ(s, j, z_k)`,
//! where `ĥ` is the Clark integrand of the claim.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrals::{integral_against_zeta, integral_against_zeta_on, PredictableIntegrand};
use crate::malliavin::{clark_estimates_past, conditional_differences, Functional};
use crate::market::MarketModel;
use crate::point_measure::{Atom, PointConfiguration};
use crate::quadrature::Quadrature;
use crate::representation::{claim_mean, MeanEstimate};
use crate::rng::{point_key, SeedStream, HEDGE_POINTS};
use crate::scalar::Real;
use crate::stats::{correlation, standardized, Accumulator, Summary};

pub use crate::scalar::gen_inverse;

/// The law `J(μ, s, j, dz) ∝ κ(μ, s, j, z)² ν_j(dz)` on the jump sizes of asset `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelLaw<T> {
    /// `(z, probability)` pairs.
    pub atoms: Vec<(T, T)>,
    /// The normaliser was zero and `ν_j` (normalised) was returned instead.
    pub degenerate: bool,
}

pub fn kernel_disintegration<T: Real>(market: &MarketModel<T>, mu: &PointConfiguration<T>, s: T, j: usize) -> KernelLaw<T> {
    let past = mu.restrict_before(s);
    let law = &market.intensity().asset(j).jumps;
    let raw: Vec<(T, T)> = law
        .atoms()
        .iter()
        .map(|&(z, w)| {
            let k = market.kappa(&past, &Atom { time: s, asset: j, jump: z });
            (z, k * k * w)
        })
        .collect();
    let total: T = raw.iter().map(|p| p.1).sum();
    if total > T::zero() {
        KernelLaw { atoms: raw.into_iter().map(|(z, w)| (z, w / total)).collect(), degenerate: false }
    } else {
        let mass = law.total_mass();
        KernelLaw { atoms: law.atoms().iter().map(|&(z, w)| (z, w / mass)).collect(), degenerate: true }
    }
}

/// Estimate of `h_f(μ, s, j)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HedgeEstimate<T> {
    pub value: T,
    pub std_error: T,
    /// Asset `j` cannot be traded at `(μ_{s−}, s)`: its size vanishes, so the hedge is 0.
    pub untradeable: bool,
    /// Inner samples with a non-finite difference (the estimate is then 0).
    pub non_finite: usize,
}

/// Per-jump-size coefficients `c_k` with `h_f = Σ_k c_k ĥ(z_k)`, and whether the asset is untradeable.
fn hedge_coefficients<T: Real>(market: &MarketModel<T>, past: &PointConfiguration<T>, s: T, j: usize) -> (Vec<T>, bool) {
    let law = &market.intensity().asset(j).jumps;
    match market.factor(past, s, j) {
        Some(kj) => {
            let scale = gen_inverse(kj) * gen_inverse(law.second_moment());
            (law.atoms().iter().map(|&(z, w)| scale * w * z).collect(), kj == T::zero())
        }
        None => {
            let kappas: Vec<T> =
                law.atoms().iter().map(|&(z, _)| market.kappa(past, &Atom { time: s, asset: j, jump: z })).collect();
            let norm: T = kappas.iter().zip(law.atoms()).map(|(&k, &(_, w))| k * k * w).sum();
            let inv = gen_inverse(norm);
            (kappas.iter().zip(law.atoms()).map(|(&k, &(_, w))| inv * k * w).collect(), norm == T::zero())
        }
    }
}

fn hedge_estimate_past<T: Real>(
    f: &Functional<T>,
    market: &MarketModel<T>,
    past: &PointConfiguration<T>,
    s: T,
    j: usize,
    m: usize,
    stream: SeedStream,
) -> HedgeEstimate<T> {
    let (coef, untradeable) = hedge_coefficients(market, past, s, j);
    if untradeable {
        return HedgeEstimate { value: T::zero(), std_error: T::zero(), untradeable, non_finite: 0 };
    }
    let zs: Vec<T> = market.intensity().asset(j).jumps.atoms().iter().map(|p| p.0).collect();
    let last = zs.len() - 1;
    let mut acc = Accumulator::new();
    let mut sample = T::zero();
    let mut sample_ok = true;
    let mut non_finite = 0;
    let mut rng = stream.rng();
    conditional_differences(f, past, s, j, &zs, market.intensity(), m, &mut rng, |k, d| {
        if d.is_finite() {
            sample = sample + coef[k] * d;
        } else {
            sample_ok = false;
        }
        if k == last {
            if sample_ok {
                acc.push(sample);
            } else {
                non_finite += 1;
            }
            sample = T::zero();
            sample_ok = true;
        }
    });
    if non_finite > 0 {
        return HedgeEstimate { value: T::zero(), std_error: T::zero(), untradeable, non_finite };
    }
    let summary = acc.summary();
    HedgeEstimate { value: summary.mean, std_error: summary.std_error, untradeable, non_finite }
}

fn check_point<T: Real>(market: &MarketModel<T>, s: T, j: usize, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::ZeroSamples("hedge integrand"));
    }
    if !(s >= T::zero() && s <= market.intensity().horizon()) {
        return Err(Error::InvalidParameter(format!("time {s} outside [0, horizon]")));
    }
    if j >= market.intensity().asset_count() {
        return Err(Error::IndexOutOfRange { index: j, len: market.intensity().asset_count() });
    }
    Ok(())
}

/// `h_f(μ, s, j)` from `m` inner samples shared by every jump size of asset `j`.
pub fn hedge_integrand<T: Real>(
    f: &Functional<T>,
    market: &MarketModel<T>,
    mu: &PointConfiguration<T>,
    s: T,
    j: usize,
    m: usize,
    stream: SeedStream,
) -> Result<HedgeEstimate<T>> {
    check_point(market, s, j, m)?;
    Ok(hedge_estimate_past(f, market, &mu.restrict_before(s), s, j, m, stream))
}

fn hedge_key<T: Real>(s: T, j: usize) -> u64 {
    point_key(&Atom { time: s, asset: j, jump: T::one() })
}

type HedgeCache<T> = Arc<Mutex<HashMap<(u64, usize), HedgeEstimate<T>>>>;

/// `h_f` as an integrand on one path, recording every estimate it makes.
fn estimated_hedge<T: Real>(
    f: &Functional<T>,
    market: &MarketModel<T>,
    m: usize,
    stream: SeedStream,
) -> (PredictableIntegrand<T>, HedgeCache<T>) {
    let cache: HedgeCache<T> = Arc::default();
    let breaks = f.breakpoints().to_vec();
    let (f, mk, store) = (f.clone(), market.clone(), cache.clone());
    let h = PredictableIntegrand::new(format!("hedge_mc:{}", f.label()), move |past, y| {
        let key = (hedge_key(y.time, y.asset), past.len());
        if let Some(e) = store.lock().expect("cache").get(&key) {
            return e.value;
        }
        let e = hedge_estimate_past(&f, &mk, past, y.time, y.asset, m, stream.substream(key.0));
        store.lock().expect("cache").insert(key, e);
        e.value
    })
    .with_breakpoints(breaks);
    (h, cache)
}

/// The hedge used by [`hedge_error`].
#[derive(Clone, Debug)]
pub enum HedgeSource<T> {
    /// Estimate `h_f` on every path with this many inner samples.
    Estimated { inner: usize },
    /// A known hedge, e.g. a closed form.
    Given(PredictableIntegrand<T>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HedgeOptions {
    pub use_oracles: bool,
    pub panel: bool,
}

impl Default for HedgeOptions {
    fn default() -> Self {
        Self { use_oracles: true, panel: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PanelStat<T> {
    pub label: String,
    /// `corr(X′, ∫ h dζ)`.
    pub correlation: T,
    /// The correlation over its standard error, estimated without assuming
    /// independence of `X′` and `∫ h dζ`.
    pub correlation_z: T,
    /// Error variance of the hedge `h_f + COMPETITOR_STEP · h`.
    pub competitor_error_var: T,
    /// Standardized excess of the competitor's error over the hedge's; negative means the competitor did better.
    pub competitor_z: T,
}

/// Perturbation size for the panel competitors.
pub const COMPETITOR_STEP: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct HedgeReport<T> {
    pub label: String,
    pub mean: MeanEstimate<T>,
    pub f_values: Vec<T>,
    pub hedge_integrals: Vec<T>,
    /// `X′ = f − E f − ∫ h_f dζ`.
    pub residuals: Vec<T>,
    pub var_f: T,
    pub var_hedge_integral: T,
    /// `E X′²` and its standard error.
    pub hedge_error_var: T,
    pub hedge_error_se: T,
    /// `E Σ_{atoms} (κ · SE(h_f))²`: the part of the error variance owed to
    /// inner sampling (0 for a given hedge).
    pub inner_noise_var: T,
    /// `Var f − Var ∫h_f dζ − Var X′ = 2 Cov(∫h_f dζ, X′)` and its standardized size.
    pub pythagoras_gap: T,
    pub pythagoras_z: T,
    pub panel: Vec<PanelStat<T>>,
    /// `E (f − E f)²`, the error of not hedging.
    pub zero_hedge_error_var: T,
    /// `mean(f − ∫ h_f dζ)`: the best initial capital for this hedge on the sample.
    pub optimal_intercept: T,
    pub untradeable_points: usize,
    pub non_finite_points: usize,
    pub n_paths: usize,
    pub inner: Option<usize>,
}

impl<T: Real> HedgeReport<T> {
    /// `|corr| < tolerance / √N` for every panel integrand.
    pub fn orthogonal(&self, tolerance: T) -> bool {
        let bound = tolerance / T::from_count(self.n_paths).sqrt();
        self.panel.iter().all(|p| p.correlation.abs() < bound)
    }
}

/// The eight test integrands: four window indicators (time quarters for one
/// asset; time halves crossed with the first two assets otherwise) and the
/// price `ζ_{s−}` restricted to each time quarter.
pub fn orthogonality_panel<T: Real>(market: &MarketModel<T>) -> Vec<PredictableIntegrand<T>> {
    let horizon = market.intensity().horizon();
    let cut = |k: usize, parts: usize| horizon * T::lit(k as f64 / parts as f64);
    let mut panel: Vec<PredictableIntegrand<T>> = if market.intensity().asset_count() == 1 {
        (0..4).map(|k| PredictableIntegrand::indicator(cut(k, 4), cut(k + 1, 4), None)).collect()
    } else {
        (0..2)
            .flat_map(|j| (0..2).map(move |k| (j, k)))
            .map(|(j, k)| PredictableIntegrand::indicator(cut(k, 2), cut(k + 1, 2), Some(j)))
            .collect()
    };
    let mk = market.clone();
    let price = PredictableIntegrand::new("price", move |p, y| mk.zeta(p, (T::zero(), y.time), None).unwrap_or(T::zero()));
    for k in 0..4 {
        panel.push(price.times(&PredictableIntegrand::indicator(cut(k, 4), cut(k + 1, 4), None)));
    }
    panel
}

/// Hedge error `X′ = f − E f − ∫ h dζ` on `n` paths, with diagnostics.
pub fn hedge_error<T: Real>(
    f: &Functional<T>,
    market: &MarketModel<T>,
    n: usize,
    source: &HedgeSource<T>,
    stream: SeedStream,
    options: HedgeOptions,
) -> Result<HedgeReport<T>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 paths, got {n}")));
    }
    if let HedgeSource::Estimated { inner: 0 } = source {
        return Err(Error::ZeroSamples("hedge integrand"));
    }
    let model = market.intensity();
    let f = if options.use_oracles { f.clone() } else { f.without_oracles() };
    let mean = claim_mean(&f, model, options.use_oracles, 10 * n, stream)?;
    let noisy = market.clone().with_quadrature(Quadrature::Gauss7);
    let panel = if options.panel { orthogonality_panel(market) } else { Vec::new() };

    struct PathOut<T> {
        f: T,
        integral: T,
        noise: T,
        untradeable: usize,
        non_finite: usize,
        panel: Vec<T>,
    }

    let rows = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let path_stream = stream.substream(i);
            let mu = model.sample_path(path_stream);
            let fv = f.evaluate(&mu);
            let (integral, noise, untradeable, non_finite) = match source {
                HedgeSource::Given(h) => (integral_against_zeta(h, &mu, market)?, T::zero(), 0, 0),
                HedgeSource::Estimated { inner } => {
                    let (h, cache) = estimated_hedge(&f, market, *inner, path_stream);
                    let integral = integral_against_zeta(&h, &mu, &noisy)?;
                    let cache = cache.lock().expect("cache");
                    let (mut noise, mut untradeable, mut non_finite) = (T::zero(), 0, 0);
                    for (idx, a) in mu.atoms().iter().enumerate() {
                        let past = crate::market::strict_past(&mu, idx);
                        let key = (hedge_key(a.time, a.asset), past.len());
                        if let Some(e) = cache.get(&key) {
                            let k = market.kappa(&past, a);
                            noise = noise + k * k * e.std_error * e.std_error;
                            untradeable += e.untradeable as usize;
                            non_finite += (e.non_finite > 0) as usize;
                        }
                    }
                    (integral, noise, untradeable, non_finite)
                }
            };
            let panel = panel.iter().map(|h| integral_against_zeta(h, &mu, market)).collect::<Result<Vec<_>>>()?;
            Ok(PathOut { f: fv, integral, noise, untradeable, non_finite, panel })
        })
        .collect::<Result<Vec<_>>>()?;

    let f_values: Vec<T> = rows.iter().map(|r| r.f).collect();
    let hedge_integrals: Vec<T> = rows.iter().map(|r| r.integral).collect();
    let residuals: Vec<T> = rows.iter().map(|r| r.f - mean.value - r.integral).collect();
    let squares: Vec<T> = residuals.iter().map(|x| *x * *x).collect();
    let sq = Summary::of(&squares);
    let centred: Vec<T> = f_values.iter().map(|x| (*x - mean.value) * (*x - mean.value)).collect();

    let si = Summary::of(&hedge_integrals);
    let sx = Summary::of(&residuals);
    let cross: Vec<T> = hedge_integrals
        .iter()
        .zip(&residuals)
        .map(|(&a, &b)| T::lit(2.0) * (a - si.mean) * (b - sx.mean))
        .collect();
    let sc = Summary::of(&cross);

    let step = T::lit(COMPETITOR_STEP);
    let panel_stats = panel
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let pk: Vec<T> = rows.iter().map(|r| r.panel[k]).collect();
            let excess: Vec<T> =
                residuals.iter().zip(&pk).map(|(&x, &p)| (x - step * p) * (x - step * p) - x * x).collect();
            let se = Summary::of(&excess);
            PanelStat {
                label: h.label().to_string(),
                correlation: correlation(&residuals, &pk),
                correlation_z: correlation_z(&residuals, &pk),
                competitor_error_var: sq.mean + se.mean,
                competitor_z: if se.mean < T::zero() { -standardized(se.mean, se.std_error) } else { standardized(se.mean, se.std_error) },
            }
        })
        .collect();

    let intercept: Vec<T> = rows.iter().map(|r| r.f - r.integral).collect();
    let noise: Vec<T> = rows.iter().map(|r| r.noise).collect();
    Ok(HedgeReport {
        label: f.label().to_string(),
        mean,
        var_f: Summary::of(&f_values).variance,
        var_hedge_integral: si.variance,
        hedge_error_var: sq.mean,
        hedge_error_se: sq.std_error,
        inner_noise_var: Summary::of(&noise).mean,
        pythagoras_gap: sc.mean,
        pythagoras_z: standardized(sc.mean, sc.std_error),
        panel: panel_stats,
        zero_hedge_error_var: Summary::of(&centred).mean,
        optimal_intercept: Summary::of(&intercept).mean,
        untradeable_points: rows.iter().map(|r| r.untradeable).sum(),
        non_finite_points: rows.iter().map(|r| r.non_finite).sum(),
        f_values,
        hedge_integrals,
        residuals,
        n_paths: n,
        inner: match source {
            HedgeSource::Estimated { inner } => Some(*inner),
            HedgeSource::Given(_) => None,
        },
    })
}

// sample covariance over sqrt(Var(x̃ ỹ) / N), with x̃, ỹ centred
fn correlation_z<T: Real>(xs: &[T], ys: &[T]) -> T {
    let (mx, my) = (Summary::of(xs).mean, Summary::of(ys).mean);
    let prods: Vec<T> = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).collect();
    let s = Summary::of(&prods);
    standardized(s.mean, s.std_error)
}

/// Evidence at one sampled `(path, s, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProportionalityPoint<T> {
    pub path: usize,
    pub s: T,
    pub asset: usize,
    /// Fitted `c` in `E[D f | η_{s−}] ≈ c κ`.
    pub ratio: T,
    /// Largest `|ĥ_k − c κ_k| / SE_k` over the jump sizes.
    pub worst_z: T,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct PerfectHedgeReport<T> {
    pub points: Vec<ProportionalityPoint<T>>,
    pub fraction_pass: T,
    pub verdict: bool,
}

/// Share of proportional points required for a perfect-hedge verdict.
pub const PERFECT_HEDGE_SHARE: f64 = 0.95;

/// Tests `E[D_{(s,j,z)} f | η_{s−}] = c(μ, s, j) κ(μ, s, j, z)` at every grid
/// time and asset on `n` paths, componentwise within `tolerance` standard errors.
#[allow(clippy::too_many_arguments)]
pub fn perfect_hedge_check<T: Real>(
    f: &Functional<T>,
    market: &MarketModel<T>,
    grid: &[T],
    n: usize,
    m: usize,
    stream: SeedStream,
    tolerance: T,
) -> Result<PerfectHedgeReport<T>> {
    if n == 0 {
        return Err(Error::ZeroSamples("perfect-hedge paths"));
    }
    let model = market.intensity();
    for &s in grid {
        check_point(market, s, 0, m)?;
    }
    let base = stream.substream(HEDGE_POINTS);
    let points = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let path_stream = base.substream(i);
            let mu = model.sample_path(path_stream);
            let mut out = Vec::new();
            for &s in grid {
                let past = mu.restrict_before(s);
                for j in 0..model.asset_count() {
                    let law = &model.asset(j).jumps;
                    let zs: Vec<T> = law.atoms().iter().map(|p| p.0).collect();
                    let key = point_key(&Atom { time: s, asset: j, jump: T::one() });
                    let est = clark_estimates_past(f, &past, s, j, &zs, model, m, path_stream.substream(key));
                    let kappas: Vec<T> =
                        zs.iter().map(|&z| market.kappa(&past, &Atom { time: s, asset: j, jump: z })).collect();
                    let (mut num, mut den) = (T::zero(), T::zero());
                    for ((e, &k), &(_, w)) in est.iter().zip(&kappas).zip(law.atoms()) {
                        num = num + w * k * e.value;
                        den = den + w * k * k;
                    }
                    let ratio = gen_inverse(den) * num;
                    let mut worst = T::zero();
                    let mut pass = true;
                    for (e, &k) in est.iter().zip(&kappas) {
                        let gap = (e.value - ratio * k).abs();
                        let slack = T::lit(1e-12) * e.value.abs().max(T::one());
                        if gap > tolerance * e.standard_error + slack {
                            pass = false;
                        }
                        let z = standardized(gap, e.standard_error);
                        if gap > slack && z > worst {
                            worst = z;
                        }
                    }
                    out.push(ProportionalityPoint { path: i as usize, s, asset: j, ratio, worst_z: worst, pass });
                }
            }
            out
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    let passed = points.iter().filter(|p| p.pass).count();
    let fraction_pass = if points.is_empty() { T::one() } else { T::from_count(passed) / T::from_count(points.len()) };
    Ok(PerfectHedgeReport { verdict: fraction_pass >= T::lit(PERFECT_HEDGE_SHARE), fraction_pass, points })
}

/// `V_t = V_0 + ∫_{[0,t]} h dζ` at each grid time.
pub fn value_process<T: Real>(
    h: &PredictableIntegrand<T>,
    market: &MarketModel<T>,
    mu: &PointConfiguration<T>,
    grid: &[T],
    v0: T,
) -> Result<Vec<T>> {
    let horizon = market.intensity().horizon();
    grid.iter()
        .map(|&t| {
            if !(t >= T::zero() && t <= horizon) {
                return Err(Error::InvalidParameter(format!("grid time {t} outside [0, horizon]")));
            }
            Ok(v0 + integral_against_zeta_on(h, mu, market, (T::zero(), t))?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claims::{functional_library, ClaimParams, Payoff};
    use crate::intensity::{IntensityModel, JumpLaw};
    use crate::market::AssetSize;
    use approx::assert_abs_diff_eq;

    fn pm_market() -> MarketModel<f64> {
        let law = JumpLaw::new(vec![(1.0, 0.5), (-1.0, 0.5)]).unwrap();
        MarketModel::jump_sized(IntensityModel::homogeneous(1.0, 1.0, law).unwrap())
    }

    fn payoff(market: &MarketModel<f64>, payoff: Payoff) -> Functional<f64> {
        let p = ClaimParams { payoff, ..Default::default() };
        functional_library("terminal_payoff", &p, market.intensity(), Some(market)).unwrap()
    }

    fn config(atoms: &[(f64, f64)]) -> PointConfiguration<f64> {
        PointConfiguration::from_atoms(1.0, atoms.iter().map(|&(t, z)| Atom::new(t, 0, z).unwrap())).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let market = pm_market();
        let mu = config(&[]);
        let k = kernel_disintegration(&market, &mu, 0.5, 0);
        assert_eq!(k, KernelLaw { atoms: vec![(1.0, 0.5), (-1.0, 0.5)], degenerate: false });

        let single = MarketModel::jump_sized(IntensityModel::homogeneous(1.0, 1.0, JumpLaw::point(2.0).unwrap()).unwrap());
        assert_eq!(kernel_disintegration(&single, &mu, 0.5, 0).atoms, vec![(2.0, 1.0)]);

        let off = MarketModel::new(pm_market().intensity().clone(), AssetSize::Linear(vec![0.0])).unwrap();
        assert!(kernel_disintegration(&off, &mu, 0.5, 0).degenerate);
    }

    #[test]
    fn hedge_of_square_on_symmetric_market() {
        let market = pm_market();
        let f = payoff(&market, Payoff::Square);
        let mu = config(&[(0.2, 1.0), (0.4, 1.0), (0.7, -1.0)]);
        for s in [0.3, 0.5, 0.9] {
            let exact = 2.0 * market.zeta_before(&mu, s).unwrap();
            let e = hedge_integrand(&f, &market, &mu, s, 0, 4000, SeedStream::new(1, 2)).unwrap();
            assert!((e.value - exact).abs() < 3.0 * e.std_error + 1e-12, "{s}: {e:?} vs {exact}");
        }
        let lin = payoff(&market, Payoff::Identity);
        let e = hedge_integrand(&lin, &market, &mu, 0.5, 0, 10, SeedStream::new(1, 3)).unwrap();
        assert_abs_diff_eq!(e.value, 1.0, epsilon = 1e-12);
        let c = functional_library("constant", &ClaimParams { value: Some(3.0), ..Default::default() }, market.intensity(), None)
            .unwrap();
        assert_eq!(hedge_integrand(&c, &market, &mu, 0.5, 0, 10, SeedStream::new(1, 3)).unwrap().value, 0.0);
        assert!(hedge_integrand(&c, &market, &mu, 0.5, 0, 0, SeedStream::new(1, 3)).is_err());
    }

    #[test]
    fn untradeable_asset_gets_zero_hedge() {
        let off = MarketModel::new(pm_market().intensity().clone(), AssetSize::Linear(vec![0.0])).unwrap();
        let f = functional_library("linear", &ClaimParams::default(), off.intensity(), None).unwrap();
        let e = hedge_integrand(&f, &off, &config(&[]), 0.5, 0, 10, SeedStream::new(0, 0)).unwrap();
        assert!(e.untradeable);
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn general_and_separable_forms_agree() {
        let market = pm_market();
        let general = MarketModel::new(market.intensity().clone(), AssetSize::General(Arc::new(|_, y| 3.0 * y.jump)))
            .unwrap();
        let scaled = market.scaled(3.0);
        let f = payoff(&market, Payoff::Square);
        let mu = config(&[(0.2, 1.0)]);
        let a = hedge_integrand(&f, &general, &mu, 0.5, 0, 200, SeedStream::new(3, 3)).unwrap();
        let b = hedge_integrand(&f, &scaled, &mu, 0.5, 0, 200, SeedStream::new(3, 3)).unwrap();
        assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-12);
    }

    #[test]
    fn zeta_window_claim_is_hedged_exactly() {
        let market = pm_market();
        let p = ClaimParams { window: Some([0.25, 0.75]), ..Default::default() };
        let f = functional_library("terminal_payoff", &p, market.intensity(), Some(&market)).unwrap();
        let r = hedge_error(&f, &market, 40, &HedgeSource::Estimated { inner: 5 }, SeedStream::new(4, 0), HedgeOptions::default())
            .unwrap();
        assert!(r.residuals.iter().all(|x| x.abs() < 1e-10));
        assert_eq!(r.panel.len(), 8);
    }

    #[test]
    fn value_process_of_unit_hedge() {
        let model = IntensityModel::unit(1.0).unwrap();
        let market = MarketModel::jump_sized(model);
        let one = PredictableIntegrand::new("one", |_, _| 1.0);
        let mu = config(&[(0.3, 1.0), (0.6, 1.0)]);
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let v = value_process(&one, &market, &mu, &grid, 10.0).unwrap();
        for (t, v) in grid.iter().zip(&v) {
            assert_abs_diff_eq!(*v, 10.0 + mu.count(0.0..=*t, None) as f64 - t, epsilon = 1e-12);
        }
        let zero = value_process(&PredictableIntegrand::zero(), &market, &mu, &grid, 2.0).unwrap();
        assert!(zero.iter().all(|&x| x == 2.0));
        assert!(value_process(&one, &market, &mu, &[1.5], 0.0).is_err());
    }

    #[test]
    fn proportionality_verdicts() {
        let market = pm_market();
        let grid = [0.0, 0.5, 1.0];
        let lin = payoff(&market, Payoff::Identity);
        let r = perfect_hedge_check(&lin, &market, &grid, 10, 50, SeedStream::new(6, 0), 3.0).unwrap();
        assert!(r.verdict);
        let sq = payoff(&market, Payoff::Square);
        let r = perfect_hedge_check(&sq, &market, &grid, 10, 500, SeedStream::new(6, 0), 3.0).unwrap();
        assert!(!r.verdict);
        assert!(r.fraction_pass < 0.5);
    }
}
