use std::sync::Arc;

use poisson_hedge::claims::{functional_library, ClaimParams, Payoff};
use poisson_hedge::hedging::{hedge_error, kernel_disintegration, value_process, HedgeOptions, HedgeSource};
use poisson_hedge::integrals::{integral_against_zeta, PredictableIntegrand};
use poisson_hedge::market::{AssetSize, MarketModel};
use poisson_hedge::point_measure::Atom;
use poisson_hedge::{gen_inverse, Configuration, JumpLaw, Market, Model, SeedStream};
use proptest::prelude::*;

fn unit_market() -> Market {
    Market::jump_sized(Model::unit(1.0).unwrap())
}

fn plus_minus() -> Model {
    Model::homogeneous(1.0, 1.0, JumpLaw::new(vec![(1.0, 0.5), (-1.0, 0.5)]).unwrap()).unwrap()
}

fn price_hedge(market: &Market) -> PredictableIntegrand<f64> {
    let m = market.clone();
    PredictableIntegrand::new("2ζ+1", move |past: &Configuration, y: &Atom<f64>| {
        2.0 * m.zeta(past, (0.0, y.time), None).unwrap() + 1.0
    })
}

#[test]
fn unit_jump_square_is_hedged_exactly() {
    // ζ_T² = T + ∫ (2ζ_{s−} + 1) dζ when every jump has size one
    let market = unit_market();
    let f = functional_library("terminal_payoff", &ClaimParams { payoff: Payoff::Square, ..Default::default() }, market.intensity(), Some(&market)).unwrap();
    let opts = HedgeOptions { panel: false, ..HedgeOptions::default() };
    let r = hedge_error(&f, &market, 2_000, &HedgeSource::Given(price_hedge(&market)), SeedStream::new(50, 0), opts).unwrap();
    assert_eq!(r.mean.value, 1.0);
    assert!(r.residuals.iter().all(|x| x.abs() < 1e-9));
}

#[test]
fn value_process_accumulates_gains() {
    let market = unit_market();
    let h = price_hedge(&market);
    let grid = [0.0, 0.3, 0.6, 1.0];
    for i in 0..100 {
        let mu = market.intensity().sample_path(SeedStream::new(51, i));
        let v = value_process(&h, &market, &mu, &grid, 1.0).unwrap();
        assert_eq!(v[0], 1.0);
        let z = market.zeta(&mu, (0.0, 1.0), None).unwrap();
        assert!((v[3] - z * z).abs() < 1e-9);
        assert!((v[3] - 1.0 - integral_against_zeta(&h, &mu, &market).unwrap()).abs() < 1e-12);
    }
    assert!(value_process(&h, &market, &Configuration::empty(1.0).unwrap(), &[1.5], 0.0).is_err());
}

#[test]
fn kernel_law_weights_by_squared_size() {
    let mu = Configuration::empty(1.0).unwrap();
    let symmetric = Market::jump_sized(plus_minus());
    let k = kernel_disintegration(&symmetric, &mu, 0.5, 0);
    assert!(!k.degenerate);
    assert_eq!(k.atoms, vec![(1.0, 0.5), (-1.0, 0.5)]);

    let lopsided = MarketModel::new(plus_minus(), AssetSize::General(Arc::new(|_, y: &Atom<f64>| y.jump.max(0.0) * 3.0))).unwrap();
    let k = kernel_disintegration(&lopsided, &mu, 0.5, 0);
    assert_eq!(k.atoms, vec![(1.0, 1.0), (-1.0, 0.0)]);

    let flat = MarketModel::new(plus_minus(), AssetSize::Linear(vec![0.0])).unwrap();
    let k = kernel_disintegration(&flat, &mu, 0.5, 0);
    assert!(k.degenerate);
    assert_eq!(k.atoms.iter().map(|a| a.1).sum::<f64>(), 1.0);
}

proptest! {
    #[test]
    fn generalized_inverse_is_a_pseudo_inverse(a in prop_oneof![Just(0.0), -1e6..1e6f64]) {
        let g = gen_inverse(a);
        prop_assert!((a * g * a - a).abs() <= 1e-12 * a.abs().max(1.0));
        prop_assert!((g * a * g - g).abs() <= 1e-12 * g.abs().max(1.0));
    }
}
