//! Malliavin calculus on marked Poisson processes and minimal-variance
//! hedging in pure-jump markets.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the aliases at the bottom fix it to `f64`, with `…32`
//! variants for single precision.

pub mod claims;
pub mod error;
pub mod hedging;
pub mod integrals;
pub mod intensity;
pub mod malliavin;
pub mod market;
pub mod point_measure;
pub mod quadrature;
pub mod report;
pub mod representation;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use claims::{functional_library, ClaimParams};
pub use error::{Error, Result};
pub use hedging::{
    gen_inverse, hedge_error, hedge_integrand, kernel_disintegration, perfect_hedge_check, value_process,
    HedgeOptions, HedgeSource,
};
pub use integrals::{
    estimate_covariance, estimate_duality, estimate_isometry, integral_against_zeta, multiple_wiener_ito,
    skorohod_pathwise, IdentityReport,
};
pub use malliavin::{chaos_coefficient, clark_integrand_mc, difference, iterated_difference, ClarkEstimate};
pub use market::AssetSize;
pub use quadrature::Quadrature;
pub use representation::{
    clark_ocone_decompose, conditional_expectation_mc, martingale_representation_check, DecomposeOptions,
};
pub use rng::SeedStream;
pub use scalar::Real;

pub type Atom = point_measure::Atom<f64>;
pub type Configuration = point_measure::PointConfiguration<f64>;
pub type Model = intensity::IntensityModel<f64>;
pub type JumpLaw = intensity::JumpLaw<f64>;
pub type RateFunction = intensity::RateFunction<f64>;
pub type Market = market::MarketModel<f64>;
pub type Claim = malliavin::Functional<f64>;
pub type Integrand = integrals::PredictableIntegrand<f64>;
pub type Kernel = integrals::SymmetricKernel<f64>;

pub type Atom32 = point_measure::Atom<f32>;
pub type Configuration32 = point_measure::PointConfiguration<f32>;
pub type Model32 = intensity::IntensityModel<f32>;
pub type Market32 = market::MarketModel<f32>;
pub type Claim32 = malliavin::Functional<f32>;
pub type Integrand32 = integrals::PredictableIntegrand<f32>;
