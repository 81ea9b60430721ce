//! Intensity measures `λ(ds × {j} × dz) = r_j(s) ds ν_j(dz)`: exact sampling
//! of paths and futures, and compensator integrals `∫ h dλ`.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point_measure::{Atom, PointConfiguration};
use crate::quadrature::{integrate, partition, Quadrature};
use crate::rng::SeedStream;
use crate::scalar::Real;

/// Finite discrete jump measure `ν = Σ_k w_k δ_{z_k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpLaw<T> {
    atoms: Vec<(T, T)>,
    cumulative: Vec<T>,
}

impl<T: Real> JumpLaw<T> {
    /// `atoms` are `(size, weight)` pairs with nonzero sizes and positive weights.
    pub fn new(atoms: Vec<(T, T)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidModel("jump law needs at least one atom".into()));
        }
        for &(z, w) in &atoms {
            if !z.is_finite() || z == T::zero() {
                return Err(Error::InvalidModel(format!("jump size {z} must be finite and nonzero")));
            }
            if !w.is_finite() || w <= T::zero() {
                return Err(Error::InvalidModel(format!("jump weight {w} must be finite and positive")));
            }
        }
        let mut acc = T::zero();
        let cumulative = atoms
            .iter()
            .map(|&(_, w)| {
                acc = acc + w;
                acc
            })
            .collect();
        Ok(Self { atoms, cumulative })
    }

    pub fn point(z: T) -> Result<Self> {
        Self::new(vec![(z, T::one())])
    }

    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> T {
        *self.cumulative.last().expect("nonempty law")
    }

    /// `∫ z^k ν(dz)`.
    pub fn moment(&self, k: i32) -> T {
        self.atoms.iter().map(|&(z, w)| w * z.powi(k)).sum()
    }

    pub fn second_moment(&self) -> T {
        self.moment(2)
    }

    fn sample_size<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        if self.atoms.len() == 1 {
            return self.atoms[0].0;
        }
        let u = T::lit(rng.random::<f64>()) * self.total_mass();
        let k = self.cumulative.partition_point(|&c| c <= u).min(self.atoms.len() - 1);
        self.atoms[k].0
    }
}

/// Piecewise-constant rate on `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateFunction<T> {
    breakpoints: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> RateFunction<T> {
    pub fn constant(rate: T) -> Result<Self> {
        Self::piecewise(Vec::new(), vec![rate])
    }

    /// `values[k]` applies between `breakpoints[k-1]` and `breakpoints[k]`.
    pub fn piecewise(breakpoints: Vec<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidModel(format!(
                "{} rate values for {} breakpoints",
                values.len(),
                breakpoints.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::InvalidModel("rates must be finite and nonnegative".into()));
        }
        if breakpoints.iter().any(|b| !b.is_finite() || *b <= T::zero())
            || breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidModel("rate breakpoints must be positive and strictly increasing".into()));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    /// Right-continuous value at `s`.
    pub fn value(&self, s: T) -> T {
        self.values[self.breakpoints.partition_point(|&b| b <= s)]
    }

    /// `∫_a^b r(s) ds`.
    pub fn integral(&self, a: T, b: T) -> T {
        if b <= a {
            return T::zero();
        }
        let mut total = T::zero();
        let mut lo = a;
        let mut k = self.breakpoints.partition_point(|&p| p <= a);
        while lo < b {
            let hi = self.breakpoints.get(k).copied().map_or(b, |p| p.min(b));
            total = total + self.values[k] * (hi - lo);
            lo = hi;
            k += 1;
        }
        total
    }

    /// Time in `(a, b]` drawn from the density `∝ r` given `u ∈ (0, 1]`.
    fn invert(&self, a: T, b: T, u: T) -> T {
        let mut target = u * self.integral(a, b);
        let mut lo = a;
        let mut k = self.breakpoints.partition_point(|&p| p <= a);
        loop {
            let hi = self.breakpoints.get(k).copied().map_or(b, |p| p.min(b));
            let mass = self.values[k] * (hi - lo);
            if target <= mass || hi >= b {
                if self.values[k] == T::zero() {
                    return hi;
                }
                return (lo + target / self.values[k]).min(hi);
            }
            target = target - mass;
            lo = hi;
            k += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssetIntensity<T> {
    pub rate: RateFunction<T>,
    pub jumps: JumpLaw<T>,
}

/// `λ` on `[0, horizon] × {0..d} × ℝ*`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityModel<T> {
    horizon: T,
    assets: Vec<AssetIntensity<T>>,
    breakpoints: Vec<T>,
}

impl<T: Real> IntensityModel<T> {
    pub fn new(horizon: T, assets: Vec<AssetIntensity<T>>) -> Result<Self> {
        if !horizon.is_finite() || horizon <= T::zero() {
            return Err(Error::InvalidModel(format!("horizon {horizon} must be positive")));
        }
        if assets.is_empty() {
            return Err(Error::InvalidModel("at least one asset is required".into()));
        }
        let breakpoints = partition(
            T::zero(),
            horizon,
            assets.iter().flat_map(|a| a.rate.breakpoints().iter().copied()),
        );
        let inner = breakpoints[1..breakpoints.len() - 1].to_vec();
        Ok(Self { horizon, assets, breakpoints: inner })
    }

    /// Time-homogeneous single asset: rate `rate`, jump law `jumps`.
    pub fn homogeneous(horizon: T, rate: T, jumps: JumpLaw<T>) -> Result<Self> {
        Self::new(horizon, vec![AssetIntensity { rate: RateFunction::constant(rate)?, jumps }])
    }

    /// Unit-rate single asset with unit jumps on `[0, horizon]`.
    pub fn unit(horizon: T) -> Result<Self> {
        Self::homogeneous(horizon, T::one(), JumpLaw::point(T::one())?)
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn asset_count(&self) -> usize {
        self.assets.len()
    }

    pub fn asset(&self, j: usize) -> &AssetIntensity<T> {
        &self.assets[j]
    }

    pub fn assets(&self) -> &[AssetIntensity<T>] {
        &self.assets
    }

    /// Union of the rate breakpoints strictly inside `(0, T)`.
    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    /// `∫_a^b r_j(s) ds`, clipped to `[0, T]`.
    pub fn rate_integral(&self, j: usize, a: T, b: T) -> T {
        self.assets[j].rate.integral(a.max(T::zero()), b.min(self.horizon))
    }

    /// `λ([a, b] × {j} × ℝ*)`.
    pub fn mass(&self, j: usize, a: T, b: T) -> T {
        self.rate_integral(j, a, b) * self.assets[j].jumps.total_mass()
    }

    /// Expected number of atoms in `[a, b]` over all assets.
    pub fn expected_count(&self, a: T, b: T) -> T {
        (0..self.assets.len()).map(|j| self.mass(j, a, b)).sum()
    }

    /// A path on `[0, T]`.
    pub fn sample_path(&self, stream: SeedStream) -> PointConfiguration<T> {
        self.sample_path_with(&mut stream.rng())
    }

    /// A draw from `Π^t`: the process restricted to `(t, T]`.
    pub fn sample_future(&self, t: T, stream: SeedStream) -> PointConfiguration<T> {
        self.sample_future_with(t, &mut stream.rng())
    }

    pub fn sample_path_with<R: Rng + ?Sized>(&self, rng: &mut R) -> PointConfiguration<T> {
        self.sample_future_with(T::zero(), rng)
    }

    pub fn sample_future_with<R: Rng + ?Sized>(&self, t: T, rng: &mut R) -> PointConfiguration<T> {
        let mut atoms = Vec::new();
        if t < self.horizon {
            for (j, a) in self.assets.iter().enumerate() {
                self.sample_asset(j, a, t.max(T::zero()), rng, &mut atoms);
            }
            if self.assets.len() > 1 {
                atoms.sort_by(|a: &Atom<T>, b| a.time.partial_cmp(&b.time).expect("finite times"));
            }
        }
        PointConfiguration::from_sorted_unchecked(self.horizon, atoms)
    }

    fn sample_asset<R: Rng + ?Sized>(
        &self,
        j: usize,
        asset: &AssetIntensity<T>,
        lo: T,
        rng: &mut R,
        out: &mut Vec<Atom<T>>,
    ) {
        let mean = (asset.rate.integral(lo, self.horizon) * asset.jumps.total_mass()).as_f64();
        if !(mean > 0.0) {
            return;
        }
        let n = Poisson::new(mean).expect("positive finite mean").sample(rng) as usize;
        let start = out.len();
        for _ in 0..n {
            let u = T::lit(1.0 - rng.random::<f64>());
            let time = asset.rate.invert(lo, self.horizon, u);
            let jump = asset.jumps.sample_size(rng);
            out.push(Atom { time, asset: j, jump });
        }
        out[start..].sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite times"));
    }

    /// `∫_{[a,b] × assets × ℝ*} h(μ_{s−}, (s, j, z)) λ(d(s, j, z))`.
    ///
    /// The time axis is split at the rate breakpoints, at every atom of `μ`
    /// and at `extra_breaks`; on each piece the strict past of `μ` is fixed
    /// and `h` receives it as its first argument. `h` must be smooth in `s`
    /// on every piece for the adaptive rule to reach its tolerance.
    pub fn compensator_integral<F>(
        &self,
        mu: &PointConfiguration<T>,
        range: (T, T),
        extra_breaks: &[T],
        rule: Quadrature<T>,
        mut h: F,
    ) -> Result<T>
    where
        F: FnMut(&PointConfiguration<T>, &Atom<T>) -> T,
    {
        self.rate_integral_of(mu, range, extra_breaks, rule, |past, s, j| {
            let mut inner = T::zero();
            for &(z, w) in self.assets[j].jumps.atoms() {
                inner = inner + w * h(past, &Atom { time: s, asset: j, jump: z });
            }
            inner
        })
    }

    /// `Σ_j ∫_a^b g(μ_{s−}, s, j) r_j(s) ds`, split like [`compensator_integral`](Self::compensator_integral).
    pub fn rate_integral_of<F>(
        &self,
        mu: &PointConfiguration<T>,
        range: (T, T),
        extra_breaks: &[T],
        rule: Quadrature<T>,
        mut g: F,
    ) -> Result<T>
    where
        F: FnMut(&PointConfiguration<T>, T, usize) -> T,
    {
        let a = range.0.max(T::zero());
        let b = range.1.min(self.horizon);
        if b <= a {
            return Ok(T::zero());
        }
        let cuts = partition(
            a,
            b,
            self.breakpoints
                .iter()
                .copied()
                .chain(mu.atoms().iter().map(|x| x.time))
                .chain(extra_breaks.iter().copied()),
        );
        let mut total = T::zero();
        for w in cuts.windows(2) {
            let (p, q) = (w[0], w[1]);
            let mid = (p + q) / T::lit(2.0);
            let rates: Vec<T> = self.assets.iter().map(|x| x.rate.value(mid)).collect();
            if rates.iter().all(|r| *r == T::zero()) {
                continue;
            }
            let past = mu.restrict_upto(p);
            let piece = integrate(
                |s| {
                    let mut acc = T::zero();
                    for (j, &r) in rates.iter().enumerate() {
                        if r != T::zero() {
                            acc = acc + r * g(&past, s, j);
                        }
                    }
                    acc
                },
                p,
                q,
                rule,
            )?;
            total = total + piece;
        }
        Ok(total)
    }
}

/// Jump measure that may have infinitely many small jumps.
#[derive(Clone, Debug, PartialEq)]
pub enum LevyMeasure<T> {
    Discrete(JumpLaw<T>),
    /// `ν(dz) = c_± |z|^{−1−α} e^{−decay·|z|} dz` on `z ≷ 0`, with `0 ≤ α < 2`.
    TemperedStable { scale_pos: T, scale_neg: T, alpha: T, decay: T, cells: usize },
}

/// Finite-activity approximation of a [`LevyMeasure`].
#[derive(Clone, Debug, PartialEq)]
pub struct Truncation<T> {
    pub law: JumpLaw<T>,
    /// `∫_{|z| ≤ ε} z² ν(dz)`, the second-moment mass that was dropped.
    pub discarded_second_moment: T,
}

/// Drops jumps with `|z| ≤ epsilon`. Continuous laws are discretized on
/// geometric cells of `|z| ∈ (ε, ε + 40/decay]`, one atom per cell placed so
/// that the cell's mass and second moment are both preserved.
pub fn truncate_small_jumps<T: Real>(law: &LevyMeasure<T>, epsilon: T) -> Result<Truncation<T>> {
    if !(epsilon > T::zero()) {
        return Err(Error::InvalidParameter(format!("truncation epsilon {epsilon} must be positive")));
    }
    match law {
        LevyMeasure::Discrete(nu) => {
            let (kept, dropped): (Vec<_>, Vec<_>) = nu.atoms().iter().partition(|(z, _)| z.abs() > epsilon);
            if kept.is_empty() {
                return Err(Error::InvalidParameter(format!("epsilon {epsilon} removes every jump")));
            }
            Ok(Truncation {
                law: JumpLaw::new(kept)?,
                discarded_second_moment: dropped.iter().map(|&(z, w)| w * z * z).sum(),
            })
        }
        &LevyMeasure::TemperedStable { scale_pos, scale_neg, alpha, decay, cells } => {
            if !(alpha >= T::zero() && alpha < T::lit(2.0)) || !(decay > T::zero()) || cells == 0 {
                return Err(Error::InvalidParameter("tempered stable needs 0 ≤ α < 2, decay > 0, cells ≥ 1".into()));
            }
            if scale_pos < T::zero() || scale_neg < T::zero() || scale_pos + scale_neg == T::zero() {
                return Err(Error::InvalidParameter("tempered stable scales must be nonnegative and not both zero".into()));
            }
            let rule = Quadrature::default();
            let density = |z: T| z.powf(-T::one() - alpha) * (-decay * z).exp();
            let top = epsilon + T::lit(40.0) / decay;
            let ratio = (top / epsilon).powf(T::one() / T::from_count(cells));
            let mut atoms = Vec::new();
            let mut lo = epsilon;
            for k in 0..cells {
                let hi = if k + 1 == cells { top } else { lo * ratio };
                let mass = integrate(density, lo, hi, rule)?;
                let second = integrate(|z| z * z * density(z), lo, hi, rule)?;
                if mass > T::zero() {
                    let z = (second / mass).sqrt();
                    if scale_pos > T::zero() {
                        atoms.push((z, scale_pos * mass));
                    }
                    if scale_neg > T::zero() {
                        atoms.push((-z, scale_neg * mass));
                    }
                }
                lo = hi;
            }
            // ∫_0^ε z^{1−α} e^{−decay z} dz with z = ε u^p, p = 1/(2−α), removes the singularity.
            let p = T::one() / (T::lit(2.0) - alpha);
            let small = epsilon.powf(T::lit(2.0) - alpha)
                * p
                * integrate(|u: T| (-decay * epsilon * u.powf(p)).exp(), T::zero(), T::one(), rule)?;
            Ok(Truncation {
                law: JumpLaw::new(atoms)?,
                discarded_second_moment: (scale_pos + scale_neg) * small,
            })
        }
    }
}

/// Serialized per-asset block of a model file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetSpec {
    /// Constant rate; alternative to `rate_breakpoints`/`rate_values`.
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default)]
    pub rate_breakpoints: Vec<f64>,
    #[serde(default)]
    pub rate_values: Vec<f64>,
    /// Discrete jump atoms as `"size:weight"`.
    #[serde(default)]
    pub jumps: Vec<String>,
    #[serde(default)]
    pub truncate_epsilon: Option<f64>,
    #[serde(default)]
    pub levy_alpha: Option<f64>,
    #[serde(default)]
    pub levy_decay: Option<f64>,
    #[serde(default)]
    pub levy_scale_pos: Option<f64>,
    #[serde(default)]
    pub levy_scale_neg: Option<f64>,
    #[serde(default)]
    pub levy_cells: Option<usize>,
}

/// Serialized model file: horizon plus one `[[asset]]` block per asset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub horizon: f64,
    #[serde(rename = "asset")]
    pub assets: Vec<AssetSpec>,
}

impl ModelSpec {
    /// Builds the model and returns, per asset, the second-moment mass dropped by truncation.
    pub fn build<T: Real>(&self) -> Result<(IntensityModel<T>, Vec<T>)> {
        let mut assets = Vec::with_capacity(self.assets.len());
        let mut discarded = Vec::with_capacity(self.assets.len());
        for (j, a) in self.assets.iter().enumerate() {
            let ctx = |m: String| Error::InvalidModel(format!("asset {j}: {m}"));
            let rate = match (a.rate, a.rate_values.is_empty()) {
                (Some(r), true) if a.rate_breakpoints.is_empty() => RateFunction::constant(T::lit(r))?,
                (None, false) => RateFunction::piecewise(
                    a.rate_breakpoints.iter().map(|&x| T::lit(x)).collect(),
                    a.rate_values.iter().map(|&x| T::lit(x)).collect(),
                )?,
                _ => return Err(ctx("give either `rate` or `rate_breakpoints` + `rate_values`".into())),
            };
            if let Some(&b) = a.rate_breakpoints.last() {
                if b >= self.horizon {
                    return Err(ctx(format!("rate breakpoint {b} not inside (0, horizon)")));
                }
            }
            let levy = match (a.jumps.is_empty(), a.levy_alpha, a.levy_decay) {
                (false, None, None) => {
                    let atoms = a.jumps.iter().map(|s| parse_jump(s).map_err(ctx)).collect::<Result<Vec<_>>>()?;
                    LevyMeasure::Discrete(JumpLaw::new(
                        atoms.into_iter().map(|(z, w)| (T::lit(z), T::lit(w))).collect(),
                    )?)
                }
                (true, Some(alpha), Some(decay)) => LevyMeasure::TemperedStable {
                    scale_pos: T::lit(a.levy_scale_pos.unwrap_or(1.0)),
                    scale_neg: T::lit(a.levy_scale_neg.unwrap_or(1.0)),
                    alpha: T::lit(alpha),
                    decay: T::lit(decay),
                    cells: a.levy_cells.unwrap_or(16),
                },
                _ => return Err(ctx("give either `jumps` or `levy_alpha` + `levy_decay`".into())),
            };
            let (jumps, dropped) = match (&levy, a.truncate_epsilon) {
                (LevyMeasure::Discrete(nu), None) => (nu.clone(), T::zero()),
                (_, Some(eps)) => {
                    let t = truncate_small_jumps(&levy, T::lit(eps))?;
                    (t.law, t.discarded_second_moment)
                }
                (_, None) => return Err(ctx("a continuous Lévy measure needs `truncate_epsilon`".into())),
            };
            assets.push(AssetIntensity { rate, jumps });
            discarded.push(dropped);
        }
        Ok((IntensityModel::new(T::lit(self.horizon), assets)?, discarded))
    }
}

fn parse_jump(s: &str) -> std::result::Result<(f64, f64), String> {
    let (z, w) = s.split_once(':').ok_or_else(|| format!("jump atom `{s}` is not `size:weight`"))?;
    let z: f64 = z.trim().parse().map_err(|_| format!("bad jump size in `{s}`"))?;
    let w: f64 = w.trim().parse().map_err(|_| format!("bad jump weight in `{s}`"))?;
    Ok((z, w))
}
