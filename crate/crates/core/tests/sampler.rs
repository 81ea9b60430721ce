use poisson_hedge::intensity::{AssetIntensity, IntensityModel, JumpLaw, RateFunction};
use poisson_hedge::stats::{correlation, Summary};
use poisson_hedge::SeedStream;

const N: u64 = 20_000;

// asset 0: rate 2 on [0, .5), .5 on [.5, 1.5), 1 on [1.5, 2]; ν mass 4 with three quarters on -0.25.
// asset 1: rate .8, unit jumps.
fn model() -> IntensityModel<f64> {
    let a0 = AssetIntensity {
        rate: RateFunction::piecewise(vec![0.5, 1.5], vec![2.0, 0.5, 1.0]).unwrap(),
        jumps: JumpLaw::new(vec![(0.5, 1.0), (-0.25, 3.0)]).unwrap(),
    };
    let a1 = AssetIntensity { rate: RateFunction::constant(0.8).unwrap(), jumps: JumpLaw::point(1.0).unwrap() };
    IntensityModel::new(2.0, vec![a0, a1]).unwrap()
}

fn within(s: &Summary<f64>, target: f64, k: f64) -> bool {
    (s.mean - target).abs() < k * s.std_error
}

#[test]
fn counts_match_the_intensity() {
    let m = model();
    let paths: Vec<_> = (0..N).map(|i| m.sample_path(SeedStream::new(31, i))).collect();
    let c0: Vec<f64> = paths.iter().map(|p| p.count(.., Some(0)) as f64).collect();
    let c1: Vec<f64> = paths.iter().map(|p| p.count(.., Some(1)) as f64).collect();
    let (s0, s1) = (Summary::of(&c0), Summary::of(&c1));
    // (2·0.5 + 0.5·1 + 1·0.5)·4 = 8 and 0.8·2 = 1.6
    assert!(within(&s0, 8.0, 4.0), "{s0:?}");
    assert!(within(&s1, 1.6, 4.0), "{s1:?}");
    // Poisson: variance equals mean
    assert!((s0.variance / 8.0 - 1.0).abs() < 0.05);
    assert!((s1.variance / 1.6 - 1.0).abs() < 0.05);
    // superposition of independent assets
    assert!(correlation(&c0, &c1).abs() < 4.0 / (N as f64).sqrt());
}

#[test]
fn marks_and_times_follow_their_laws() {
    let m = model();
    let mut small = Vec::new();
    let mut early = Vec::new();
    let mut head = Vec::new();
    let mut tail = Vec::new();
    for i in 0..N {
        let p = m.sample_path(SeedStream::new(32, i));
        for a in p.atoms().iter().filter(|a| a.asset == 0) {
            small.push(if a.jump == -0.25 { 1.0 } else { 0.0 });
            early.push(if a.time < 0.5 { 1.0 } else { 0.0 });
            assert!(a.jump == -0.25 || a.jump == 0.5);
        }
        head.push(p.count(0.0..1.0, None) as f64);
        tail.push(p.count(1.0..=2.0, None) as f64);
    }
    assert!(within(&Summary::of(&small), 0.75, 4.0));
    // rate 2 on [0, .5) carries 1 of the 2 units of ∫r
    assert!(within(&Summary::of(&early), 0.5, 4.0));
    // disjoint windows are independent
    assert!(correlation(&head, &tail).abs() < 4.0 / (N as f64).sqrt());
}

#[test]
fn paths_are_sorted_inside_the_horizon_and_reproducible() {
    let m = model();
    for i in 0..500 {
        let p = m.sample_path(SeedStream::new(33, i));
        assert!(p.atoms().windows(2).all(|w| w[0].time < w[1].time));
        assert!(p.atoms().iter().all(|a| a.time >= 0.0 && a.time <= 2.0));
        assert_eq!(p, m.sample_path(SeedStream::new(33, i)));
    }
}

#[test]
fn futures_live_after_t_with_the_remaining_mass() {
    let m = model();
    let t = 1.2;
    let counts: Vec<f64> = (0..N)
        .map(|i| {
            let p = m.sample_future(t, SeedStream::new(34, i));
            assert!(p.atoms().iter().all(|a| a.time > t && a.time <= 2.0));
            p.len() as f64
        })
        .collect();
    // asset 0: (0.5·0.3 + 1·0.5)·4 = 2.6, asset 1: 0.8·0.8 = 0.64
    assert!(within(&Summary::of(&counts), 3.24, 4.0));
}
