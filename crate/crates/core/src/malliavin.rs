//! Difference operators on Poisson functionals and the Clark–Ocone integrand.
//!
//! `D_y f(μ) = f(μ + δ_y) − f(μ)`; iterated differences use inclusion–exclusion
//! over the subsets of the added atoms. The conditional expectation
//! `E[D_{(s,j,z)} f(η) | η_{s−}]` is estimated by keeping the strict past of
//! the path and resampling the future `(s, T]` from the model.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::integrals::{PointFn, PredictableIntegrand};
use crate::intensity::IntensityModel;
use crate::point_measure::{Atom, PointConfiguration};
use crate::rng::{point_key, SeedStream};
use crate::scalar::Real;
use crate::stats::Accumulator;

pub const DEFAULT_MAX_ORDER: usize = 6;

pub type ConfigFn<T> = Arc<dyn Fn(&PointConfiguration<T>) -> T + Send + Sync>;

/// Closed-form facts about a functional, used as test oracles and, when
/// enabled, in place of Monte Carlo.
#[derive(Clone)]
pub struct Oracles<T> {
    pub mean: Option<T>,
    pub variance: Option<T>,
    /// `D_y f(μ)`.
    pub difference: Option<PointFn<T>>,
    /// `E[D_y f(η) | η_{s−} = μ_{s−}]`.
    pub clark: Option<PredictableIntegrand<T>>,
}

impl<T> Default for Oracles<T> {
    fn default() -> Self {
        Self { mean: None, variance: None, difference: None, clark: None }
    }
}

/// A square-integrable claim `f: N → ℝ`.
#[derive(Clone)]
pub struct Functional<T> {
    label: String,
    eval: ConfigFn<T>,
    oracles: Oracles<T>,
    breakpoints: Vec<T>,
}

impl<T> std::fmt::Debug for Functional<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Functional({})", self.label)
    }
}

impl<T: Real> Functional<T> {
    pub fn new(label: impl Into<String>, eval: impl Fn(&PointConfiguration<T>) -> T + Send + Sync + 'static) -> Self {
        Self { label: label.into(), eval: Arc::new(eval), oracles: Oracles::default(), breakpoints: Vec::new() }
    }

    /// Times where the dependence of `f` on an added atom may jump (window
    /// edges); the Monte Carlo integrand is split there for quadrature.
    pub fn with_breakpoints(mut self, times: impl IntoIterator<Item = T>) -> Self {
        self.breakpoints.extend(times);
        self
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn with_oracles(mut self, oracles: Oracles<T>) -> Self {
        self.oracles = oracles;
        self
    }

    /// Same functional with every closed form removed (black-box route).
    pub fn without_oracles(&self) -> Self {
        Self {
            label: self.label.clone(),
            eval: self.eval.clone(),
            oracles: Oracles::default(),
            breakpoints: self.breakpoints.clone(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn oracles(&self) -> &Oracles<T> {
        &self.oracles
    }

    pub fn evaluate(&self, mu: &PointConfiguration<T>) -> T {
        (self.eval)(mu)
    }

    /// `D_y f(μ)` for a `y` inside the horizon; closed form when available.
    pub(crate) fn difference_unchecked(&self, mu: &PointConfiguration<T>, y: &Atom<T>) -> T {
        match &self.oracles.difference {
            Some(d) => d(mu, y),
            None => {
                let plus = mu.add_atom(*y).expect("point inside the horizon");
                self.evaluate(&plus) - self.evaluate(mu)
            }
        }
    }
}

/// `f(μ + δ_a) − f(μ)`, always by direct evaluation.
pub fn difference<T: Real>(f: &Functional<T>, mu: &PointConfiguration<T>, a: &Atom<T>) -> Result<T> {
    let plus = mu.add_atom(*a)?;
    Ok(f.evaluate(&plus) - f.evaluate(mu))
}

/// `D^n_{a_1…a_n} f(μ) = Σ_{J ⊆ {1..n}} (−1)^{n−|J|} f(μ + Σ_{j∈J} δ_{a_j})`.
///
/// The atoms are put in a canonical order first, so the result does not
/// depend on the order they are passed in, bit for bit.
pub fn iterated_difference<T: Real>(f: &Functional<T>, mu: &PointConfiguration<T>, atoms: &[Atom<T>]) -> Result<T> {
    iterated_difference_with_max(f, mu, atoms, DEFAULT_MAX_ORDER)
}

pub fn iterated_difference_with_max<T: Real>(
    f: &Functional<T>,
    mu: &PointConfiguration<T>,
    atoms: &[Atom<T>],
    max_order: usize,
) -> Result<T> {
    let n = atoms.len();
    if n > max_order {
        return Err(Error::OrderTooLarge { order: n, max: max_order });
    }
    let mut sorted = atoms.to_vec();
    sorted.sort_by(|a, b| a.canonical_cmp(b));
    for a in &sorted {
        Atom::new(a.time, a.asset, a.jump)?;
        if a.time > mu.horizon() {
            return Err(Error::AtomOutsideHorizon { time: a.time.as_f64(), horizon: mu.horizon().as_f64() });
        }
    }
    let mut total = T::zero();
    for mask in 0u32..(1u32 << n) {
        let added = PointConfiguration::from_sorted_unchecked(
            mu.horizon(),
            sorted.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, a)| *a).collect(),
        );
        let value = f.evaluate(&mu.superpose(&added));
        if (n - mask.count_ones() as usize) % 2 == 0 {
            total = total + value;
        } else {
            total = total - value;
        }
    }
    Ok(total)
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub std_error: T,
    pub samples: usize,
}

/// `T_n f(y_1, …, y_n) = E D^n f(η)`, averaged over `m` independent paths.
pub fn chaos_coefficient<T: Real>(
    f: &Functional<T>,
    atoms: &[Atom<T>],
    model: &IntensityModel<T>,
    m: usize,
    stream: SeedStream,
) -> Result<Estimate<T>> {
    if m == 0 {
        return Err(Error::ZeroSamples("chaos coefficient"));
    }
    let mut rng = stream.rng();
    let mut acc = Accumulator::new();
    for _ in 0..m {
        let eta = model.sample_path_with(&mut rng);
        acc.push(iterated_difference(f, &eta, atoms)?);
    }
    let s = acc.summary();
    Ok(Estimate { value: s.mean, std_error: s.std_error, samples: m })
}

/// Estimate of `E[D_{(s,j,z)} f(η) | η_{s−}]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClarkEstimate<T> {
    pub value: T,
    pub inner_samples: usize,
    pub standard_error: T,
    /// Inner samples whose difference was not finite. When nonzero the
    /// conditional expectation is treated as undefined and `value` is 0.
    pub non_finite: usize,
}

/// Inner-sample accumulators for `D_{(s,j,z_k)} f(μ_{s−} + ν_i)` at several
/// jump sizes, sharing the future draws `ν_i ~ Π^s`.
pub(crate) fn conditional_differences<T: Real, R: Rng + ?Sized>(
    f: &Functional<T>,
    past: &PointConfiguration<T>,
    s: T,
    j: usize,
    zs: &[T],
    model: &IntensityModel<T>,
    m: usize,
    rng: &mut R,
    mut visit: impl FnMut(usize, T),
) {
    let ys: Vec<Atom<T>> = zs.iter().map(|&z| Atom { time: s, asset: j, jump: z }).collect();
    for _ in 0..m {
        let future = model.sample_future_with(s, rng);
        if f.oracles.difference.is_none() {
            let base = f.evaluate(&PointConfiguration::splice(past, None, &future));
            for (k, y) in ys.iter().enumerate() {
                visit(k, f.evaluate(&PointConfiguration::splice(past, Some(y), &future)) - base);
            }
        } else {
            let full = PointConfiguration::splice(past, None, &future);
            for (k, y) in ys.iter().enumerate() {
                visit(k, f.difference_unchecked(&full, y));
            }
        }
    }
}

/// Per-jump-size estimates of the conditional expectation from one set of
/// future draws. `past` must already be `μ_{s−}`.
pub(crate) fn clark_estimates_past<T: Real>(
    f: &Functional<T>,
    past: &PointConfiguration<T>,
    s: T,
    j: usize,
    zs: &[T],
    model: &IntensityModel<T>,
    m: usize,
    stream: SeedStream,
) -> Vec<ClarkEstimate<T>> {
    let mut accs = vec![Accumulator::new(); zs.len()];
    let mut bad = vec![0usize; zs.len()];
    let mut rng = stream.rng();
    conditional_differences(f, past, s, j, zs, model, m, &mut rng, |k, d| {
        if d.is_finite() {
            accs[k].push(d);
        } else {
            bad[k] += 1;
        }
    });
    accs.iter()
        .zip(bad)
        .map(|(acc, non_finite)| {
            let s = acc.summary();
            if non_finite > 0 {
                ClarkEstimate { value: T::zero(), inner_samples: m, standard_error: T::zero(), non_finite }
            } else {
                ClarkEstimate { value: s.mean, inner_samples: m, standard_error: s.std_error, non_finite }
            }
        })
        .collect()
}

/// `ĥ = (1/M) Σ_i D_{(s,j,z)} f(μ_{s−} + ν_i)` with `ν_i ~ Π^s` drawn from `stream`.
///
/// Only `μ_{s−}` is read, so `μ` and `μ.restrict_before(s)` give bit-identical
/// results under the same stream. For `M = 1` the standard error is reported as 0.
#[allow(clippy::too_many_arguments)]
pub fn clark_integrand_mc<T: Real>(
    f: &Functional<T>,
    mu: &PointConfiguration<T>,
    s: T,
    j: usize,
    z: T,
    model: &IntensityModel<T>,
    m: usize,
    stream: SeedStream,
) -> Result<ClarkEstimate<T>> {
    if m == 0 {
        return Err(Error::ZeroSamples("clark integrand"));
    }
    let y = Atom::new(s, j, z)?;
    if s > model.horizon() || j >= model.asset_count() {
        return Err(Error::InvalidParameter(format!("point ({s}, {j}) outside the model")));
    }
    let past = mu.restrict_before(y.time);
    Ok(clark_estimates_past(f, &past, s, j, &[z], model, m, stream)[0])
}

/// The Monte Carlo Clark integrand as a [`PredictableIntegrand`]. Each
/// evaluation point `y` draws from its own substream `stream.substream(point_key(y))`,
/// so estimates at different points are independent.
pub fn clark_integrand<T: Real>(
    f: &Functional<T>,
    model: &IntensityModel<T>,
    m: usize,
    stream: SeedStream,
) -> Result<PredictableIntegrand<T>> {
    if m == 0 {
        return Err(Error::ZeroSamples("clark integrand"));
    }
    let f = f.clone();
    let model = model.clone();
    let breaks = f.breakpoints().to_vec();
    Ok(PredictableIntegrand::new(format!("clark_mc:{}", f.label()), move |past, y| {
        clark_estimates_past(&f, past, y.time, y.asset, &[y.jump], &model, m, stream.substream(point_key(y)))[0].value
    })
    .with_breakpoints(breaks))
}
