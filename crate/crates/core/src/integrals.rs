//! Pathwise integrals against the compensated Poisson process and against `ζ`.
//! Multiple Wiener–Itô integrals up to order 3 live here too, with the Monte
//! Carlo checks of the second-order identities.
//!
//! For a predictable `h` the Kabanov–Skorohod integral is evaluated pathwise as
//! `Σ_{atoms a} h(μ_{a−}, a) − ∫ h(μ_{s−}, y) λ(dy)`.

use std::cell::RefCell;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::intensity::IntensityModel;
use crate::malliavin::Functional;
use crate::market::MarketModel;
use crate::point_measure::{Atom, PointConfiguration};
use crate::quadrature::Quadrature;
use crate::report::fmt_real;
use crate::rng::SeedStream;
use crate::scalar::Real;
use crate::stats::Comparison;

pub type PointFn<T> = Arc<dyn Fn(&PointConfiguration<T>, &Atom<T>) -> T + Send + Sync>;

/// `h(μ, s, j, z)` that reads `μ` only through its strict past `μ_{s−}`.
///
/// The evaluator is always handed the already restricted configuration, so
/// predictability holds by construction. `breakpoints` lists times where `h`
/// may jump in `s` (beyond the atoms of `μ`), so quadrature can split there.
#[derive(Clone)]
pub struct PredictableIntegrand<T> {
    label: String,
    eval: PointFn<T>,
    breakpoints: Vec<T>,
}

impl<T> std::fmt::Debug for PredictableIntegrand<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PredictableIntegrand({})", self.label)
    }
}

impl<T: Real> PredictableIntegrand<T> {
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(&PointConfiguration<T>, &Atom<T>) -> T + Send + Sync + 'static,
    ) -> Self {
        Self { label: label.into(), eval: Arc::new(eval), breakpoints: Vec::new() }
    }

    pub fn with_breakpoints(mut self, times: impl IntoIterator<Item = T>) -> Self {
        self.breakpoints.extend(times);
        self
    }

    pub fn zero() -> Self {
        Self::new("zero", |_, _| T::zero())
    }

    /// `1_{[a,b]}(s) · 1_{asset}(j)`.
    pub fn indicator(a: T, b: T, asset: Option<usize>) -> Self {
        Self::new(format!("indicator[{a},{b}]"), move |_, y| {
            if y.time >= a && y.time <= b && asset.is_none_or(|j| j == y.asset) {
                T::one()
            } else {
                T::zero()
            }
        })
        .with_breakpoints([a, b])
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    /// `h(μ, y)`, restricting `μ` to the strict past of `y`.
    pub fn evaluate(&self, mu: &PointConfiguration<T>, y: &Atom<T>) -> T {
        (self.eval)(&mu.restrict_before(y.time), y)
    }

    /// `h` on a configuration the caller already restricted to `[0, y.time)`.
    pub fn evaluate_past(&self, past: &PointConfiguration<T>, y: &Atom<T>) -> T {
        (self.eval)(past, y)
    }

    /// `1_{[0,t]}(s) · h`.
    pub fn truncated(&self, t: T) -> Self {
        let eval = self.eval.clone();
        let mut out = Self::new(format!("{}·1[0,{t}]", self.label), move |p, y| {
            if y.time <= t {
                eval(p, y)
            } else {
                T::zero()
            }
        });
        out.breakpoints = self.breakpoints.clone();
        out.breakpoints.push(t);
        out
    }

    pub fn scaled(&self, c: T) -> Self {
        let eval = self.eval.clone();
        let mut out = Self::new(format!("{c}·{}", self.label), move |p, y| c * eval(p, y));
        out.breakpoints = self.breakpoints.clone();
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        let mut out = Self::new(format!("{}+{}", self.label, other.label), move |p, y| f(p, y) + g(p, y));
        out.breakpoints = [self.breakpoints.as_slice(), other.breakpoints.as_slice()].concat();
        out
    }

    pub fn times(&self, other: &Self) -> Self {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        let mut out = Self::new(format!("{}·{}", self.label, other.label), move |p, y| f(p, y) * g(p, y));
        out.breakpoints = [self.breakpoints.as_slice(), other.breakpoints.as_slice()].concat();
        out
    }
}

/// `∫ h(μ_{s−}, y) λ(dy)` over `[0, T]`.
pub fn compensator_of<T: Real>(
    h: &PredictableIntegrand<T>,
    mu: &PointConfiguration<T>,
    model: &IntensityModel<T>,
    rule: Quadrature<T>,
) -> Result<T> {
    model.compensator_integral(mu, (T::zero(), model.horizon()), h.breakpoints(), rule, |p, y| {
        h.evaluate_past(p, y)
    })
}

/// `δ(h) = Σ_{a ∈ μ} h(μ_{a−}, a) − ∫ h dλ` with the default adaptive rule.
pub fn skorohod_pathwise<T: Real>(
    h: &PredictableIntegrand<T>,
    mu: &PointConfiguration<T>,
    model: &IntensityModel<T>,
) -> Result<T> {
    skorohod_pathwise_with(h, mu, model, Quadrature::default())
}

pub fn skorohod_pathwise_with<T: Real>(
    h: &PredictableIntegrand<T>,
    mu: &PointConfiguration<T>,
    model: &IntensityModel<T>,
    rule: Quadrature<T>,
) -> Result<T> {
    let jumps: T = mu.atoms().iter().map(|a| h.evaluate(mu, a)).sum();
    Ok(jumps - compensator_of(h, mu, model, rule)?)
}

/// The same integral with the jump part evaluated literally as
/// `Σ_a h(μ − δ_a, a)`; agrees with [`skorohod_pathwise`] exactly for
/// predictable `h` and exists to check that.
pub fn skorohod_removal_form<T: Real>(
    h: &PredictableIntegrand<T>,
    mu: &PointConfiguration<T>,
    model: &IntensityModel<T>,
) -> Result<T> {
    let mut jumps = T::zero();
    for i in 0..mu.len() {
        let (rest, a) = mu.remove_atom(i)?;
        jumps = jumps + h.evaluate(&rest, &a);
    }
    Ok(jumps - compensator_of(h, mu, model, Quadrature::default())?)
}

/// `∫ h dζ = δ((μ, y) ↦ h(μ, s, j) · κ(μ, y))`.
///
/// `h` is a portfolio: it must not depend on the jump mark of `y`. For
/// separable `κ` the compensator is `Σ_j ∫ h κ_j r_j ds · ∫ z ν_j(dz)`; it is
/// skipped when the jump law of every asset has zero mean.
pub fn integral_against_zeta<T: Real>(
    h: &PredictableIntegrand<T>,
    mu: &PointConfiguration<T>,
    market: &MarketModel<T>,
) -> Result<T> {
    integral_against_zeta_on(h, mu, market, (T::zero(), market.intensity().horizon()))
}

/// `∫ 1_{[a,b]}(s) h dζ`.
pub fn integral_against_zeta_on<T: Real>(
    h: &PredictableIntegrand<T>,
    mu: &PointConfiguration<T>,
    market: &MarketModel<T>,
    (a, b): (T, T),
) -> Result<T> {
    let model = market.intensity();
    let mut jumps = T::zero();
    for atom in mu.in_window(a..=b) {
        let past = mu.restrict_before(atom.time);
        jumps = jumps + h.evaluate_past(&past, atom) * market.kappa(&past, atom);
    }
    let comp = if market.is_separable() {
        let m1: Vec<T> = model.assets().iter().map(|x| x.jumps.moment(1)).collect();
        if m1.iter().all(|&m| m == T::zero()) {
            T::zero()
        } else {
            // h ignores the jump mark, so one evaluation per (s, j) at any atom of ν_j suffices
            let reps: Vec<T> = model.assets().iter().map(|x| x.jumps.atoms()[0].0).collect();
            model.rate_integral_of(mu, (a, b), h.breakpoints(), market.quadrature(), |p, s, j| {
                if m1[j] == T::zero() {
                    return T::zero();
                }
                let factor = market.factor(p, s, j).expect("separable market");
                m1[j] * factor * h.evaluate_past(p, &Atom { time: s, asset: j, jump: reps[j] })
            })?
        }
    } else {
        model.compensator_integral(mu, (a, b), h.breakpoints(), market.quadrature(), |p, y| {
            h.evaluate_past(p, y) * market.kappa(p, y)
        })?
    };
    Ok(jumps - comp)
}

/// Symmetric kernel `g(y_1, …, y_n)` with `n ≤ 3`.
#[derive(Clone)]
pub struct SymmetricKernel<T> {
    order: usize,
    eval: Arc<dyn Fn(&[Atom<T>]) -> T + Send + Sync>,
    breakpoints: Vec<T>,
}

impl<T: Real> SymmetricKernel<T> {
    /// The caller guarantees `eval` is invariant under permutations of its arguments.
    pub fn new(order: usize, eval: impl Fn(&[Atom<T>]) -> T + Send + Sync + 'static) -> Result<Self> {
        if order > 3 {
            return Err(Error::UnsupportedOrder(order));
        }
        Ok(Self { order, eval: Arc::new(eval), breakpoints: Vec::new() })
    }

    pub fn with_breakpoints(mut self, times: impl IntoIterator<Item = T>) -> Self {
        self.breakpoints.extend(times);
        self
    }

    /// `1_B ⊗ … ⊗ 1_B` for `B = [a, b] × all assets`.
    pub fn indicator_power(order: usize, a: T, b: T) -> Result<Self> {
        Ok(Self::new(order, move |ys| {
            if ys.iter().all(|y| y.time >= a && y.time <= b) {
                T::one()
            } else {
                T::zero()
            }
        })?
        .with_breakpoints([a, b]))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn evaluate(&self, ys: &[Atom<T>]) -> T {
        (self.eval)(ys)
    }
}

/// `I_n(g)` on the path `μ`, via `I_n(g) = n! δ(h_n)` where `h_n(μ, y)` is the
/// time-ordered integral of `g(·, y)` over the strict past of `y`.
pub fn multiple_wiener_ito<T: Real>(
    g: &SymmetricKernel<T>,
    mu: &PointConfiguration<T>,
    model: &IntensityModel<T>,
) -> Result<T> {
    let n = g.order;
    let mut fact = T::one();
    for k in 2..=n {
        fact = fact * T::from_count(k);
    }
    let failure = RefCell::new(None);
    let mut fixed = Vec::with_capacity(n);
    let value = ordered_integral(g, n, &mut fixed, mu, None, model, &failure);
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(fact * value),
    }
}

// `∫_{y_1 < … < y_k < upper} g(y_1, …, y_k, fixed…) η̂(dy_1)…η̂(dy_k)` on `mu`.
fn ordered_integral<T: Real>(
    g: &SymmetricKernel<T>,
    k: usize,
    fixed: &mut Vec<Atom<T>>,
    mu: &PointConfiguration<T>,
    upper: Option<T>,
    model: &IntensityModel<T>,
    failure: &RefCell<Option<Error>>,
) -> T {
    if k == 0 {
        return g.evaluate(fixed);
    }
    let end = upper.unwrap_or(model.horizon());
    let mut jumps = T::zero();
    for a in mu.atoms() {
        if upper.is_some_and(|u| a.time >= u) {
            break;
        }
        let past = mu.restrict_before(a.time);
        fixed.push(*a);
        jumps = jumps + ordered_integral(g, k - 1, fixed, &past, Some(a.time), model, failure);
        fixed.pop();
    }
    let comp = model.compensator_integral(mu, (T::zero(), end), &g.breakpoints, Quadrature::default(), |p, y| {
        fixed.push(*y);
        let v = ordered_integral(g, k - 1, fixed, p, Some(y.time), model, failure);
        fixed.pop();
        v
    });
    match comp {
        Ok(c) => jumps - c,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            T::zero()
        }
    }
}

/// Outcome of a Monte Carlo check of an identity `E lhs = E rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport<T> {
    pub identity: String,
    pub comparison: Comparison<T>,
    pub n_paths: usize,
    pub seed: u64,
}

impl<T: Real> IdentityReport<T> {
    pub const CSV_COLUMNS: [&'static str; 8] = ["identity", "lhs", "rhs", "se_lhs", "se_rhs", "std_gap", "n_paths", "seed"];

    /// Fields in the order of [`CSV_COLUMNS`](Self::CSV_COLUMNS).
    pub fn csv_record(&self) -> Vec<String> {
        let c = &self.comparison;
        vec![
            self.identity.clone(),
            fmt_real(c.lhs),
            fmt_real(c.rhs),
            fmt_real(c.se_lhs),
            fmt_real(c.se_rhs),
            fmt_real(c.std_gap),
            self.n_paths.to_string(),
            self.seed.to_string(),
        ]
    }
}

fn paired_paths<T, F>(model: &IntensityModel<T>, n: usize, stream: SeedStream, per_path: F) -> Result<(Vec<T>, Vec<T>)>
where
    T: Real,
    F: Fn(&PointConfiguration<T>) -> Result<(T, T)> + Sync,
{
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 paths, got {n}")));
    }
    let pairs = (0..n as u64)
        .into_par_iter()
        .map(|i| per_path(&model.sample_path(stream.substream(i))))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairs.into_iter().unzip())
}

/// `E δ(h)² = E ∫ h² dλ`.
pub fn estimate_isometry<T: Real>(
    h: &PredictableIntegrand<T>,
    model: &IntensityModel<T>,
    n: usize,
    stream: SeedStream,
) -> Result<IdentityReport<T>> {
    let sq = h.times(h);
    let (lhs, rhs) = paired_paths(model, n, stream, |mu| {
        let d = skorohod_pathwise(h, mu, model)?;
        Ok((d * d, compensator_of(&sq, mu, model, Quadrature::default())?))
    })?;
    Ok(IdentityReport {
        identity: format!("isometry:{}", h.label()),
        comparison: Comparison::paired(&lhs, &rhs),
        n_paths: n,
        seed: stream.seed,
    })
}

/// `E δ(h) δ(h̃) = E ∫ h h̃ dλ`.
pub fn estimate_covariance<T: Real>(
    h: &PredictableIntegrand<T>,
    other: &PredictableIntegrand<T>,
    model: &IntensityModel<T>,
    n: usize,
    stream: SeedStream,
) -> Result<IdentityReport<T>> {
    let prod = h.times(other);
    let (lhs, rhs) = paired_paths(model, n, stream, |mu| {
        let a = skorohod_pathwise(h, mu, model)?;
        let b = skorohod_pathwise(other, mu, model)?;
        Ok((a * b, compensator_of(&prod, mu, model, Quadrature::default())?))
    })?;
    Ok(IdentityReport {
        identity: format!("covariance:{}:{}", h.label(), other.label()),
        comparison: Comparison::paired(&lhs, &rhs),
        n_paths: n,
        seed: stream.seed,
    })
}

/// `E ∫ D_y g(η) h(η, y) λ(dy) = E g(η) δ(h)`.
///
/// `D_y g(μ)` is exact given the path (closed form when `g` carries one,
/// otherwise `g(μ + δ_y) − g(μ)`), so no inner sampling is involved.
pub fn estimate_duality<T: Real>(
    g: &Functional<T>,
    h: &PredictableIntegrand<T>,
    model: &IntensityModel<T>,
    n: usize,
    stream: SeedStream,
) -> Result<IdentityReport<T>> {
    let (lhs, rhs) = paired_paths(model, n, stream, |mu| {
        let lhs = model.compensator_integral(
            mu,
            (T::zero(), model.horizon()),
            h.breakpoints(),
            Quadrature::default(),
            |p, y| g.difference_unchecked(mu, y) * h.evaluate_past(p, y),
        )?;
        Ok((lhs, g.evaluate(mu) * skorohod_pathwise(h, mu, model)?))
    })?;
    Ok(IdentityReport {
        identity: format!("duality:{}:{}", g.label(), h.label()),
        comparison: Comparison::paired(&lhs, &rhs),
        n_paths: n,
        seed: stream.seed,
    })
}
