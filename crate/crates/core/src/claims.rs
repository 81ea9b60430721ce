//! A small library of claims, selected by name, with whatever closed forms
//! are available attached as oracles.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrals::PredictableIntegrand;
use crate::intensity::IntensityModel;
use crate::malliavin::{Functional, Oracles};
use crate::market::MarketModel;
use crate::point_measure::{Atom, PointConfiguration};
use crate::scalar::Real;

/// Whether a linear or exponential claim weighs atoms by 1 or by their jump.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weight {
    #[default]
    Count,
    Jump,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Payoff {
    #[default]
    Identity,
    Square,
    Power,
    Call,
    Put,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub powers: Vec<u32>,
}

/// Flat parameter block shared by every claim family; each family reads the
/// keys it needs and ignores the rest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClaimParams {
    /// Time window `[a, b]`; the whole horizon when absent.
    pub window: Option<[f64; 2]>,
    /// Restrict to one asset (0-based).
    pub asset: Option<usize>,
    pub weight: Weight,
    /// Scale of the linear kernel or of the exponent.
    pub c: Option<f64>,
    /// Windows for a multi-window count polynomial.
    pub windows: Vec<[f64; 2]>,
    /// Monomials `coef · Π n_i^{p_i}` over `windows`.
    pub terms: Vec<Term>,
    /// `Σ_k coefficients[k] · n^k` for a single-window count polynomial.
    pub coefficients: Vec<f64>,
    /// Value of the constant claim.
    pub value: Option<f64>,
    pub payoff: Payoff,
    pub power: Option<f64>,
    pub strike: Option<f64>,
}

pub const CLAIM_NAMES: [&str; 5] = ["constant", "linear", "count_polynomial", "exponential", "terminal_payoff"];

/// Builds the claim `name` with parameters `params`.
///
/// `terminal_payoff` needs a market; the other families only need the
/// intensity for their oracles.
pub fn functional_library<T: Real>(
    name: &str,
    params: &ClaimParams,
    model: &IntensityModel<T>,
    market: Option<&MarketModel<T>>,
) -> Result<Functional<T>> {
    match name {
        "constant" => Ok(constant(T::lit(params.value.unwrap_or(0.0)))),
        "linear" => {
            let (a, b) = window(params, model)?;
            linear(model, a, b, params.asset, params.weight, T::lit(params.c.unwrap_or(1.0)))
        }
        "count_polynomial" => count_polynomial(params, model),
        "exponential" => {
            let (a, b) = window(params, model)?;
            exponential(model, a, b, params.asset, params.weight, T::lit(params.c.unwrap_or(1.0)))
        }
        "terminal_payoff" => {
            let market = market.ok_or_else(|| Error::InvalidParameter("terminal_payoff needs a market".into()))?;
            terminal_payoff(market, params)
        }
        other => Err(Error::UnknownFunctional(other.to_string())),
    }
}

fn window<T: Real>(params: &ClaimParams, model: &IntensityModel<T>) -> Result<(T, T)> {
    let [a, b] = params.window.unwrap_or([0.0, model.horizon().as_f64()]);
    check_window(a, b)?;
    Ok((T::lit(a), T::lit(b)))
}

fn check_window(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && 0.0 <= a && a <= b) {
        return Err(Error::InvalidParameter(format!("bad window [{a}, {b}]")));
    }
    Ok(())
}

fn selected(asset: Option<usize>, j: usize) -> bool {
    asset.is_none_or(|k| k == j)
}

fn in_window<T: Real>(y: &Atom<T>, a: T, b: T, asset: Option<usize>) -> bool {
    y.time >= a && y.time <= b && selected(asset, y.asset)
}

/// `∫_{[a,b] × A} φ(z) λ(d(s,j,z))` for a discrete `ν_j`.
fn lambda_integral<T: Real>(model: &IntensityModel<T>, a: T, b: T, asset: Option<usize>, phi: impl Fn(T) -> T) -> T {
    if b <= a {
        return T::zero();
    }
    (0..model.asset_count())
        .filter(|&j| selected(asset, j))
        .map(|j| {
            let inner: T = model.asset(j).jumps.atoms().iter().map(|&(z, w)| w * phi(z)).sum();
            inner * model.rate_integral(j, a, b)
        })
        .sum()
}

pub fn constant<T: Real>(value: T) -> Functional<T> {
    Functional::new(format!("constant({value})"), move |_: &PointConfiguration<T>| value).with_oracles(Oracles {
        mean: Some(value),
        variance: Some(T::zero()),
        difference: Some(Arc::new(|_, _| T::zero())),
        clark: Some(PredictableIntegrand::zero()),
    })
}

/// `f(μ) = ∫ g dμ` with `g(s, j, z) = c · 1_{[a,b]}(s) 1_A(j) · (1 or z)`.
pub fn linear<T: Real>(
    model: &IntensityModel<T>,
    a: T,
    b: T,
    asset: Option<usize>,
    weight: Weight,
    c: T,
) -> Result<Functional<T>> {
    let g = move |y: &Atom<T>| {
        if !in_window(y, a, b, asset) {
            T::zero()
        } else {
            match weight {
                Weight::Count => c,
                Weight::Jump => c * y.jump,
            }
        }
    };
    let gz = move |z: T| match weight {
        Weight::Count => c,
        Weight::Jump => c * z,
    };
    let mean = lambda_integral(model, a, b, asset, gz);
    let variance = lambda_integral(model, a, b, asset, |z| gz(z) * gz(z));
    let clark = PredictableIntegrand::new("linear_kernel", move |_, y| g(y)).with_breakpoints([a, b]);
    Ok(Functional::new(format!("linear[{a},{b}]"), move |mu: &PointConfiguration<T>| {
        mu.atoms().iter().map(g).sum()
    })
    .with_breakpoints([a, b])
    .with_oracles(Oracles {
        mean: Some(mean),
        variance: Some(variance),
        difference: Some(Arc::new(move |_, y| g(y))),
        clark: Some(clark),
    }))
}

/// `f(μ) = exp(−∫ u dμ)` with `u(s, j, z) = c · 1_{[a,b]}(s) 1_A(j) · (1 or z)`.
pub fn exponential<T: Real>(
    model: &IntensityModel<T>,
    a: T,
    b: T,
    asset: Option<usize>,
    weight: Weight,
    c: T,
) -> Result<Functional<T>> {
    let u = move |y: &Atom<T>| {
        if !in_window(y, a, b, asset) {
            T::zero()
        } else {
            match weight {
                Weight::Count => c,
                Weight::Jump => c * y.jump,
            }
        }
    };
    let uz = move |z: T| match weight {
        Weight::Count => c,
        Weight::Jump => c * z,
    };
    let log_mean = lambda_integral(model, a, b, asset, |z| (-uz(z)).exp() - T::one());
    let log_second = lambda_integral(model, a, b, asset, |z| (-T::lit(2.0) * uz(z)).exp() - T::one());
    let mean = log_mean.exp();
    let variance = log_second.exp() - mean * mean;
    let eval = move |mu: &PointConfiguration<T>| (-mu.atoms().iter().map(u).sum::<T>()).exp();
    let m = model.clone();
    let clark = PredictableIntegrand::new("exponential_clark", move |past, y| {
        let factor = (-u(y)).exp() - T::one();
        if factor == T::zero() {
            return T::zero();
        }
        let seen: T = past.atoms().iter().map(u).sum();
        let ahead = lambda_integral(&m, a.max(y.time), b, asset, |z| (-uz(z)).exp() - T::one());
        factor * (-seen).exp() * ahead.exp()
    })
    .with_breakpoints([a, b]);
    Ok(Functional::new(format!("exponential[{a},{b}]"), eval).with_breakpoints([a, b]).with_oracles(Oracles {
        mean: Some(mean),
        variance: Some(variance),
        difference: Some(Arc::new(move |mu, y| eval(mu) * ((-u(y)).exp() - T::one()))),
        clark: Some(clark),
    }))
}

fn count_polynomial<T: Real>(params: &ClaimParams, model: &IntensityModel<T>) -> Result<Functional<T>> {
    if !params.coefficients.is_empty() {
        let (a, b) = window(params, model)?;
        let coefficients: Vec<T> = params.coefficients.iter().map(|&x| T::lit(x)).collect();
        return Ok(window_polynomial(model, a, b, params.asset, coefficients));
    }
    if params.windows.is_empty() || params.terms.is_empty() {
        return Err(Error::InvalidParameter("count_polynomial needs coefficients, or windows and terms".into()));
    }
    for &[a, b] in &params.windows {
        check_window(a, b)?;
    }
    for t in &params.terms {
        if t.powers.len() != params.windows.len() {
            return Err(Error::InvalidParameter(format!(
                "term has {} powers for {} windows",
                t.powers.len(),
                params.windows.len()
            )));
        }
    }
    let windows: Vec<(T, T)> = params.windows.iter().map(|&[a, b]| (T::lit(a), T::lit(b))).collect();
    let terms: Vec<(T, Vec<i32>)> =
        params.terms.iter().map(|t| (T::lit(t.coef), t.powers.iter().map(|&p| p as i32).collect())).collect();
    let asset = params.asset;
    let breaks: Vec<T> = windows.iter().flat_map(|&(a, b)| [a, b]).collect();
    Ok(Functional::new("count_polynomial", move |mu: &PointConfiguration<T>| {
        let counts: Vec<T> = windows.iter().map(|&(a, b)| T::from_count(mu.count(a..=b, asset))).collect();
        terms
            .iter()
            .map(|(coef, powers)| *coef * counts.iter().zip(powers).fold(T::one(), |acc, (n, &p)| acc * n.powi(p)))
            .sum()
    })
    .with_breakpoints(breaks))
}

/// `f(μ) = p(μ(B))` with `p(n) = Σ_k c_k n^k` and `B = [a,b] × A`.
pub fn window_polynomial<T: Real>(
    model: &IntensityModel<T>,
    a: T,
    b: T,
    asset: Option<usize>,
    coefficients: Vec<T>,
) -> Functional<T> {
    let lambda_b = lambda_integral(model, a, b, asset, |_| T::one());
    let mean = poisson_poly_mean(&coefficients, T::zero(), lambda_b);
    let square = poly_mul(&coefficients, &coefficients);
    let variance = poisson_poly_mean(&square, T::zero(), lambda_b) - mean * mean;
    // q(n) = p(n + 1) − p(n)
    let forward = poly_forward_difference(&coefficients);
    let p = coefficients.clone();
    let q = forward.clone();
    let m = model.clone();
    let clark = PredictableIntegrand::new("count_polynomial_clark", move |past, y| {
        if !in_window(y, a, b, asset) {
            return T::zero();
        }
        let seen = T::from_count(past.count(a..=b, asset));
        let ahead = lambda_integral(&m, a.max(y.time), b, asset, |_| T::one());
        poisson_poly_mean(&q, seen, ahead)
    })
    .with_breakpoints([a, b]);
    Functional::new(format!("count_polynomial[{a},{b}]"), move |mu: &PointConfiguration<T>| {
        poly_eval(&p, T::from_count(mu.count(a..=b, asset)))
    })
    .with_breakpoints([a, b])
    .with_oracles(Oracles {
        mean: Some(mean),
        variance: Some(variance),
        difference: Some(Arc::new(move |mu, y| {
            if in_window(y, a, b, asset) {
                poly_eval(&forward, T::from_count(mu.count(a..=b, asset)))
            } else {
                T::zero()
            }
        })),
        clark: Some(clark),
    })
}

fn terminal_payoff<T: Real>(market: &MarketModel<T>, params: &ClaimParams) -> Result<Functional<T>> {
    let model = market.intensity();
    let (a, b) = window(params, model)?;
    let asset = params.asset;
    if let Some(j) = asset {
        if j >= model.asset_count() {
            return Err(Error::IndexOutOfRange { index: j, len: model.asset_count() });
        }
    }
    let strike = T::lit(params.strike.unwrap_or(0.0));
    let power = T::lit(params.power.unwrap_or(2.0));
    let kind = params.payoff;
    let phi = move |x: T| match kind {
        Payoff::Identity => x,
        Payoff::Square => x * x,
        Payoff::Power => x.abs().powf(power),
        Payoff::Call => (x - strike).max(T::zero()),
        Payoff::Put => (strike - x).max(T::zero()),
    };
    // ζ(B) is centred, and its variance is ∫κ² dλ when κ is deterministic.
    let mean = match (kind, market.asset_size()) {
        (Payoff::Identity, _) => Some(T::zero()),
        (Payoff::Square, crate::market::AssetSize::Linear(c)) => Some(
            (0..model.asset_count())
                .filter(|&j| selected(asset, j))
                .map(|j| lambda_integral(model, a, b, Some(j), |z| c[j] * c[j] * z * z))
                .sum(),
        ),
        _ => None,
    };
    let market = market.clone();
    let label = format!("terminal_payoff[{kind:?}]");
    Ok(Functional::new(label, move |mu: &PointConfiguration<T>| match market.zeta(mu, (a, b), asset) {
        Ok(x) => phi(x),
        Err(_) => T::nan(),
    })
    .with_breakpoints([a, b])
    .with_oracles(Oracles { mean, ..Oracles::default() }))
}

fn poly_eval<T: Real>(c: &[T], x: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &k| acc * x + k)
}

fn poly_mul<T: Real>(p: &[T], q: &[T]) -> Vec<T> {
    if p.is_empty() || q.is_empty() {
        return Vec::new();
    }
    let mut out = vec![T::zero(); p.len() + q.len() - 1];
    for (i, &x) in p.iter().enumerate() {
        for (k, &y) in q.iter().enumerate() {
            out[i + k] = out[i + k] + x * y;
        }
    }
    out
}

fn poly_forward_difference<T: Real>(c: &[T]) -> Vec<T> {
    // coefficients of p(n + 1) − p(n)
    let mut out = vec![T::zero(); c.len().saturating_sub(1)];
    for (k, &ck) in c.iter().enumerate().skip(1) {
        for (i, slot) in out.iter_mut().enumerate().take(k) {
            *slot = *slot + ck * T::lit(binomial(k, i));
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `E K^i` for `K ~ Poisson(m)`, `i = 0..=n` (Touchard polynomials).
pub fn poisson_moments<T: Real>(n: usize, m: T) -> Vec<T> {
    // Stirling numbers of the second kind, row by row.
    let mut stirling = vec![vec![0.0f64; n + 1]; n + 1];
    stirling[0][0] = 1.0;
    for i in 1..=n {
        for l in 1..=i {
            stirling[i][l] = l as f64 * stirling[i - 1][l] + stirling[i - 1][l - 1];
        }
    }
    (0..=n).map(|i| (0..=i).map(|l| T::lit(stirling[i][l]) * m.powi(l as i32)).sum()).collect()
}

/// `E p(x + K)` for `K ~ Poisson(m)`.
pub fn poisson_poly_mean<T: Real>(c: &[T], x: T, m: T) -> T {
    if c.is_empty() {
        return T::zero();
    }
    let moments = poisson_moments(c.len() - 1, m);
    let mut total = T::zero();
    for (k, &ck) in c.iter().enumerate() {
        for (i, &mi) in moments.iter().enumerate().take(k + 1) {
            total = total + ck * T::lit(binomial(k, i)) * x.powi((k - i) as i32) * mi;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intensity::{AssetIntensity, JumpLaw, RateFunction};
    use approx::assert_abs_diff_eq;

    fn unit() -> IntensityModel<f64> {
        IntensityModel::unit(1.0).unwrap()
    }

    fn quadratic() -> Functional<f64> {
        let p = ClaimParams { coefficients: vec![0.0, 0.0, 1.0], ..Default::default() };
        functional_library("count_polynomial", &p, &unit(), None).unwrap()
    }

    #[test]
    fn poisson_moments_are_bell_numbers_at_one() {
        let m = poisson_moments(5, 1.0);
        assert_eq!(m, vec![1.0, 1.0, 2.0, 5.0, 15.0, 52.0]);
        let m = poisson_moments(2, 3.0);
        assert_abs_diff_eq!(m[2], 12.0);
    }

    #[test]
    fn quadratic_count_oracles() {
        let f = quadratic();
        assert_abs_diff_eq!(f.oracles().mean.unwrap(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.oracles().variance.unwrap(), 11.0, epsilon = 1e-13);
        let mu = PointConfiguration::from_atoms(1.0, [Atom::new(0.2, 0, 1.0).unwrap(), Atom::new(0.6, 0, 1.0).unwrap()])
            .unwrap();
        let y = Atom::new(0.5, 0, 1.0).unwrap();
        assert_eq!(f.difference_unchecked(&mu, &y), 5.0);
        let h = f.oracles().clark.clone().unwrap();
        for s in [0.0, 0.1, 0.3, 0.7, 1.0] {
            let y = Atom::new(s, 0, 1.0).unwrap();
            let expect = 2.0 * mu.count_before(s) as f64 + 2.0 * (1.0 - s) + 1.0;
            assert_abs_diff_eq!(h.evaluate(&mu, &y), expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn exponential_oracles() {
        let p = ClaimParams { c: Some(1.0), ..Default::default() };
        let f = functional_library("exponential", &p, &unit(), None).unwrap();
        let e1 = (-1.0f64).exp() - 1.0;
        assert_abs_diff_eq!(f.oracles().mean.unwrap(), e1.exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.oracles().mean.unwrap(), 0.531464, epsilon = 1e-6);
        let e2 = (-2.0f64).exp() - 1.0;
        assert_abs_diff_eq!(f.oracles().variance.unwrap(), e2.exp() - (2.0 * e1).exp(), epsilon = 1e-15);
        let mu = PointConfiguration::from_atoms(1.0, [Atom::new(0.25, 0, 1.0).unwrap()]).unwrap();
        let h = f.oracles().clark.clone().unwrap();
        for s in [0.1, 0.5] {
            let y = Atom::new(s, 0, 1.0).unwrap();
            let expect = e1 * (-(mu.count_before(s) as f64)).exp() * ((1.0 - s) * e1).exp();
            assert_abs_diff_eq!(h.evaluate(&mu, &y), expect, epsilon = 1e-15);
        }
        let y = Atom::new(0.5, 0, 1.0).unwrap();
        let black = f.without_oracles().difference_unchecked(&mu, &y);
        assert_abs_diff_eq!(f.difference_unchecked(&mu, &y), black, epsilon = 1e-15);
    }

    #[test]
    fn linear_oracles() {
        let p = ClaimParams { window: Some([0.2, 0.7]), ..Default::default() };
        let f = functional_library("linear", &p, &unit(), None).unwrap();
        assert_abs_diff_eq!(f.oracles().mean.unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(f.oracles().variance.unwrap(), 0.5, epsilon = 1e-15);

        let jumps = JumpLaw::new(vec![(1.0, 0.5), (-2.0, 0.5)]).unwrap();
        let model = IntensityModel::new(
            2.0,
            vec![AssetIntensity { rate: RateFunction::constant(3.0).unwrap(), jumps }],
        )
        .unwrap();
        let p = ClaimParams { weight: Weight::Jump, c: Some(2.0), ..Default::default() };
        let f = functional_library("linear", &p, &model, None).unwrap();
        // ∫ 2z dλ = 6 · 2 · (−0.5), ∫ 4z² dλ = 6 · 4 · 2.5
        assert_abs_diff_eq!(f.oracles().mean.unwrap(), -6.0, epsilon = 1e-13);
        assert_abs_diff_eq!(f.oracles().variance.unwrap(), 60.0, epsilon = 1e-12);
    }

    #[test]
    fn polynomial_helpers() {
        let c = [1.0, -2.0, 0.5, 3.0];
        let d = poly_forward_difference(&c);
        for n in 0..6 {
            let x = n as f64;
            assert_abs_diff_eq!(poly_eval(&d, x), poly_eval(&c, x + 1.0) - poly_eval(&c, x), epsilon = 1e-12);
        }
        assert_eq!(poly_mul(&[1.0, 1.0], &[1.0, -1.0]), vec![1.0, 0.0, -1.0]);
    }

    #[test]
    fn multi_window_polynomial() {
        let p = ClaimParams {
            windows: vec![[0.0, 0.5], [0.5, 1.0]],
            terms: vec![Term { coef: 2.0, powers: vec![1, 2] }, Term { coef: 1.0, powers: vec![0, 0] }],
            ..Default::default()
        };
        let f = functional_library("count_polynomial", &p, &unit(), None).unwrap();
        let mu = PointConfiguration::from_atoms(
            1.0,
            [0.1, 0.6, 0.8].into_iter().map(|t| Atom::new(t, 0, 1.0).unwrap()),
        )
        .unwrap();
        assert_eq!(f.evaluate(&mu), 2.0 * 1.0 * 4.0 + 1.0);
        let bad = ClaimParams { windows: vec![[0.0, 1.0]], terms: vec![Term { coef: 1.0, powers: vec![1, 1] }], ..p };
        assert!(functional_library::<f64>("count_polynomial", &bad, &unit(), None).is_err());
    }

    #[test]
    fn terminal_payoff_reads_zeta() {
        let model = IntensityModel::homogeneous(1.0, 1.0, JumpLaw::new(vec![(1.0, 0.5), (-1.0, 0.5)]).unwrap())
            .unwrap();
        let market = MarketModel::jump_sized(model.clone());
        let p = ClaimParams { payoff: Payoff::Square, ..Default::default() };
        let f = functional_library("terminal_payoff", &p, &model, Some(&market)).unwrap();
        assert_abs_diff_eq!(f.oracles().mean.unwrap(), 1.0, epsilon = 1e-15);
        assert!(f.oracles().difference.is_none());
        let mu = PointConfiguration::from_atoms(
            1.0,
            [(0.1, 1.0), (0.4, 1.0), (0.9, -1.0), (0.95, 1.0)].map(|(t, z)| Atom::new(t, 0, z).unwrap()),
        )
        .unwrap();
        assert_abs_diff_eq!(f.evaluate(&mu), 4.0, epsilon = 1e-15);
        assert!(functional_library("terminal_payoff", &p, &model, None).is_err());
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(matches!(
            functional_library::<f64>("bogus", &ClaimParams::default(), &unit(), None),
            Err(Error::UnknownFunctional(_))
        ));
        for name in CLAIM_NAMES.iter().filter(|n| **n != "terminal_payoff" && **n != "count_polynomial") {
            assert!(functional_library::<f64>(name, &ClaimParams::default(), &unit(), None).is_ok());
        }
    }
}
