//! Pure-jump market: asset sizes `κ` and the random measure `ζ` built from
//! the compensated process.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::intensity::IntensityModel;
use crate::point_measure::{Atom, PointConfiguration};
use crate::quadrature::Quadrature;
use crate::scalar::Real;

pub type FactorFn<T> = Arc<dyn Fn(&PointConfiguration<T>, T, usize) -> T + Send + Sync>;
pub type SizeFn<T> = Arc<dyn Fn(&PointConfiguration<T>, &Atom<T>) -> T + Send + Sync>;

/// The size `κ(μ, s, j, z)` of an event. Every variant reads `μ` only
/// through the strict past it is handed.
#[derive(Clone)]
pub enum AssetSize<T> {
    /// `κ = c_j · z` with constant per-asset factors.
    Linear(Vec<T>),
    /// `κ = κ_j(μ_{s−}, s) · z`.
    Separable(FactorFn<T>),
    /// Any predictable `κ(μ_{s−}, s, j, z)`.
    General(SizeFn<T>),
}

impl<T> std::fmt::Debug for AssetSize<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AssetSize::Linear(_) => f.write_str("AssetSize::Linear"),
            AssetSize::Separable(_) => f.write_str("AssetSize::Separable"),
            AssetSize::General(_) => f.write_str("AssetSize::General"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MarketModel<T> {
    intensity: IntensityModel<T>,
    kappa: AssetSize<T>,
    quadrature: Quadrature<T>,
}

impl<T: Real> MarketModel<T> {
    pub fn new(intensity: IntensityModel<T>, kappa: AssetSize<T>) -> Result<Self> {
        if let AssetSize::Linear(c) = &kappa {
            if c.len() != intensity.asset_count() {
                return Err(Error::InvalidModel(format!(
                    "{} size factors for {} assets",
                    c.len(),
                    intensity.asset_count()
                )));
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidModel("size factors must be finite".into()));
            }
        }
        Ok(Self { intensity, kappa, quadrature: Quadrature::default() })
    }

    /// `κ = z` on every asset.
    pub fn jump_sized(intensity: IntensityModel<T>) -> Self {
        let d = intensity.asset_count();
        Self { intensity, kappa: AssetSize::Linear(vec![T::one(); d]), quadrature: Quadrature::default() }
    }

    pub fn with_quadrature(mut self, rule: Quadrature<T>) -> Self {
        self.quadrature = rule;
        self
    }

    /// Same market with `κ` replaced by `c · κ`.
    pub fn scaled(&self, c: T) -> Self {
        let kappa = match &self.kappa {
            AssetSize::Linear(f) => AssetSize::Linear(f.iter().map(|&x| c * x).collect()),
            AssetSize::Separable(g) => {
                let g = g.clone();
                AssetSize::Separable(Arc::new(move |p, s, j| c * g(p, s, j)))
            }
            AssetSize::General(g) => {
                let g = g.clone();
                AssetSize::General(Arc::new(move |p, y| c * g(p, y)))
            }
        };
        Self { intensity: self.intensity.clone(), kappa, quadrature: self.quadrature }
    }

    pub fn intensity(&self) -> &IntensityModel<T> {
        &self.intensity
    }

    pub fn asset_size(&self) -> &AssetSize<T> {
        &self.kappa
    }

    pub fn quadrature(&self) -> Quadrature<T> {
        self.quadrature
    }

    pub fn is_separable(&self) -> bool {
        !matches!(self.kappa, AssetSize::General(_))
    }

    /// `κ_j(μ_{s−}, s)` for separable markets, `None` otherwise.
    pub fn factor(&self, past: &PointConfiguration<T>, s: T, j: usize) -> Option<T> {
        match &self.kappa {
            AssetSize::Linear(c) => Some(c[j]),
            AssetSize::Separable(g) => Some(g(past, s, j)),
            AssetSize::General(_) => None,
        }
    }

    /// `κ(μ_{s−}, y)`; `past` must already be the strict past of `y.time`.
    pub fn kappa(&self, past: &PointConfiguration<T>, y: &Atom<T>) -> T {
        match &self.kappa {
            AssetSize::Linear(c) => c[y.asset] * y.jump,
            AssetSize::Separable(g) => g(past, y.time, y.asset) * y.jump,
            AssetSize::General(g) => g(past, y),
        }
    }

    /// `ζ([a, b] × A)` on the path `μ`, with `A` one asset or all of them.
    pub fn zeta(&self, mu: &PointConfiguration<T>, window: (T, T), asset: Option<usize>) -> Result<T> {
        let (a, b) = window;
        let selected = |j: usize| asset.is_none_or(|k| k == j);
        let mut jumps = T::zero();
        for (i, atom) in mu.atoms().iter().enumerate() {
            if atom.time < a || atom.time > b || !selected(atom.asset) {
                continue;
            }
            let kappa = match &self.kappa {
                AssetSize::Linear(c) => c[atom.asset] * atom.jump,
                _ => {
                    let past = strict_past(mu, i);
                    self.kappa(&past, atom)
                }
            };
            jumps = jumps + kappa;
        }
        Ok(jumps - self.zeta_compensator(mu, window, asset)?)
    }

    /// `ζ([0, s) × all assets)`: the price process just before `s`.
    pub fn zeta_before(&self, mu: &PointConfiguration<T>, s: T) -> Result<T> {
        self.zeta(&mu.restrict_before(s), (T::zero(), s), None)
    }

    fn zeta_compensator(&self, mu: &PointConfiguration<T>, (a, b): (T, T), asset: Option<usize>) -> Result<T> {
        let model = &self.intensity;
        let selected = |j: usize| asset.is_none_or(|k| k == j);
        match &self.kappa {
            AssetSize::Linear(c) => Ok((0..model.asset_count())
                .filter(|&j| selected(j))
                .map(|j| c[j] * model.asset(j).jumps.moment(1) * model.rate_integral(j, a, b))
                .sum()),
            AssetSize::Separable(g) => {
                let m1: Vec<T> = model.assets().iter().map(|x| x.jumps.moment(1)).collect();
                if (0..m1.len()).all(|j| !selected(j) || m1[j] == T::zero()) {
                    return Ok(T::zero());
                }
                model.compensator_integral(mu, (a, b), &[], self.quadrature, |past, y| {
                    if selected(y.asset) {
                        g(past, y.time, y.asset) * y.jump
                    } else {
                        T::zero()
                    }
                })
            }
            AssetSize::General(g) => model.compensator_integral(mu, (a, b), &[], self.quadrature, |past, y| {
                if selected(y.asset) {
                    g(past, y)
                } else {
                    T::zero()
                }
            }),
        }
    }
}

/// Atoms stored before index `i` whose time is strictly smaller than atom `i`'s.
pub(crate) fn strict_past<T: Real>(mu: &PointConfiguration<T>, i: usize) -> PointConfiguration<T> {
    mu.restrict_before(mu.atoms()[i].time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intensity::JumpLaw;
    use crate::rng::SeedStream;
    use approx::assert_abs_diff_eq;

    fn pm1() -> MarketModel<f64> {
        let nu = JumpLaw::new(vec![(1.0, 0.5), (-1.0, 0.5)]).unwrap();
        MarketModel::jump_sized(IntensityModel::homogeneous(1.0, 1.0, nu).unwrap())
    }

    #[test]
    fn zeta_of_unit_jumps_is_compensated_count() {
        let m = MarketModel::jump_sized(IntensityModel::unit(1.0).unwrap());
        for i in 0..50 {
            let mu = m.intensity().sample_path(SeedStream::new(2, i));
            let z = m.zeta(&mu, (0.0, 1.0), None).unwrap();
            assert_abs_diff_eq!(z, mu.len() as f64 - 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn separable_and_general_forms_agree_with_linear() {
        let lin = pm1().scaled(2.0);
        let intensity = lin.intensity().clone();
        let sep = MarketModel::new(intensity.clone(), AssetSize::Separable(Arc::new(|_, _, _| 2.0))).unwrap();
        let gen = MarketModel::new(intensity, AssetSize::General(Arc::new(|_, y: &Atom<f64>| 2.0 * y.jump))).unwrap();
        for i in 0..30 {
            let mu = lin.intensity().sample_path(SeedStream::new(8, i));
            for w in [(0.0, 1.0), (0.2, 0.6)] {
                let a = lin.zeta(&mu, w, None).unwrap();
                assert_abs_diff_eq!(a, sep.zeta(&mu, w, None).unwrap(), epsilon = 1e-12);
                assert_abs_diff_eq!(a, gen.zeta(&mu, w, Some(0)).unwrap(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zeta_with_drift_compensator() {
        let nu = JumpLaw::point(1.0).unwrap();
        let intensity = IntensityModel::homogeneous(1.0, 1.0, nu).unwrap();
        // κ_j(μ_{s−}, s) = 1 + μ_{s−} count: the compensator is ∫ (1 + N_{s−}) ds.
        let m = MarketModel::new(intensity, AssetSize::Separable(Arc::new(|p, _, _| 1.0 + p.len() as f64))).unwrap();
        let mu = PointConfiguration::from_atoms(1.0, [Atom::new(0.25, 0, 1.0).unwrap(), Atom::new(0.5, 0, 1.0).unwrap()])
            .unwrap();
        let expected = (1.0 + 2.0) - (0.25 + 2.0 * 0.25 + 3.0 * 0.5);
        assert_abs_diff_eq!(m.zeta(&mu, (0.0, 1.0), None).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn rejects_wrong_factor_count() {
        let intensity = IntensityModel::unit(1.0).unwrap();
        assert!(MarketModel::new(intensity, AssetSize::Linear(vec![1.0, 2.0])).is_err());
    }
}
