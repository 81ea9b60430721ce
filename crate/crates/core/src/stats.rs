//! Sample statistics used by the Monte Carlo estimators.

use crate::scalar::Real;

/// Mean, unbiased sample variance and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary<T> {
    pub n: usize,
    pub mean: T,
    pub variance: T,
    pub std_error: T,
}

impl<T: Real> Summary<T> {
    /// Summarizes `xs` in index order. For fewer than two samples the variance
    /// and standard error are reported as zero.
    pub fn of(xs: &[T]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { n, mean: T::zero(), variance: T::zero(), std_error: T::zero() };
        }
        let nf = T::from_count(n);
        let mean = xs.iter().copied().sum::<T>() / nf;
        if n < 2 {
            return Self { n, mean, variance: T::zero(), std_error: T::zero() };
        }
        let ss: T = xs.iter().map(|&x| (x - mean) * (x - mean)).sum();
        let variance = ss / T::from_count(n - 1);
        Self { n, mean, variance, std_error: (variance / nf).sqrt() }
    }
}

/// Running mean and variance (Welford), for inner loops that should not allocate.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator<T> {
    n: usize,
    mean: T,
    m2: T,
}

impl<T: Real> Accumulator<T> {
    pub fn new() -> Self {
        Self { n: 0, mean: T::zero(), m2: T::zero() }
    }

    pub fn push(&mut self, x: T) {
        self.n += 1;
        let d = x - self.mean;
        self.mean = self.mean + d / T::from_count(self.n);
        self.m2 = self.m2 + d * (x - self.mean);
    }

    pub fn summary(&self) -> Summary<T> {
        if self.n < 2 {
            return Summary { n: self.n, mean: self.mean, variance: T::zero(), std_error: T::zero() };
        }
        let variance = self.m2 / T::from_count(self.n - 1);
        Summary {
            n: self.n,
            mean: self.mean,
            variance,
            std_error: (variance / T::from_count(self.n)).sqrt(),
        }
    }
}

/// Sample Pearson correlation; zero if either input is constant.
pub fn correlation<T: Real>(xs: &[T], ys: &[T]) -> T {
    assert_eq!(xs.len(), ys.len());
    let mx = Summary::of(xs).mean;
    let my = Summary::of(ys).mean;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
        syy = syy + (y - my) * (y - my);
    }
    if sxx == T::zero() || syy == T::zero() {
        T::zero()
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope<T: Real>(xs: &[T], ys: &[T]) -> T {
    assert_eq!(xs.len(), ys.len());
    let lx: Vec<T> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<T> = ys.iter().map(|y| y.ln()).collect();
    let mx = Summary::of(&lx).mean;
    let my = Summary::of(&ly).mean;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&x, &y) in lx.iter().zip(&ly) {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Two sides of an identity estimated on the same paths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comparison<T> {
    pub lhs: T,
    pub rhs: T,
    pub se_lhs: T,
    pub se_rhs: T,
    /// Standard error of the paired difference `lhs_i − rhs_i`.
    pub se_gap: T,
    /// `|lhs − rhs| / se_gap`; zero when both sides agree exactly.
    pub std_gap: T,
}

impl<T: Real> Comparison<T> {
    pub fn paired(lhs: &[T], rhs: &[T]) -> Self {
        assert_eq!(lhs.len(), rhs.len());
        let l = Summary::of(lhs);
        let r = Summary::of(rhs);
        let diff: Vec<T> = lhs.iter().zip(rhs).map(|(&a, &b)| a - b).collect();
        let d = Summary::of(&diff);
        Self {
            lhs: l.mean,
            rhs: r.mean,
            se_lhs: l.std_error,
            se_rhs: r.std_error,
            se_gap: d.std_error,
            std_gap: standardized(d.mean, d.std_error),
        }
    }

    /// Compares an estimate against a known value.
    pub fn against(samples: &[T], target: T) -> Self {
        let s = Summary::of(samples);
        Self {
            lhs: s.mean,
            rhs: target,
            se_lhs: s.std_error,
            se_rhs: T::zero(),
            se_gap: s.std_error,
            std_gap: standardized(s.mean - target, s.std_error),
        }
    }
}

/// `|gap| / se`, with `0/0 = 0` and `x/0 = ∞` for `x != 0`.
pub fn standardized<T: Real>(gap: T, se: T) -> T {
    if gap == T::zero() {
        T::zero()
    } else if se == T::zero() {
        T::infinity()
    } else {
        gap.abs() / se
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn summary_and_accumulator_agree() {
        let xs = [1.0, 4.0, 2.0, 8.0, 5.0];
        let s = Summary::of(&xs);
        assert_relative_eq!(s.mean, 4.0);
        assert_relative_eq!(s.variance, 7.5);
        let mut acc = Accumulator::new();
        xs.iter().for_each(|&x| acc.push(x));
        let a = acc.summary();
        assert_relative_eq!(a.mean, s.mean, epsilon = 1e-14);
        assert_relative_eq!(a.variance, s.variance, epsilon = 1e-12);
        assert_eq!(Summary::of(&[3.0]).std_error, 0.0);
    }

    #[test]
    fn slope_and_correlation() {
        let xs = [1e2, 1e3, 1e4];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert_relative_eq!(loglog_slope(&xs, &ys), -0.5, epsilon = 1e-12);
        assert_relative_eq!(correlation(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.5]), 0.9979487157886733, epsilon = 1e-12);
        assert_eq!(correlation(&[1.0, 1.0], &[2.0, 3.0]), 0.0);
    }

    #[test]
    fn comparisons() {
        let c = Comparison::paired(&[0.0, 0.0], &[0.0, 0.0]);
        assert_eq!(c.std_gap, 0.0);
        let c: Comparison<f64> = Comparison::against(&[1.0, 1.0], 2.0);
        assert!(c.std_gap.is_infinite());
    }
}
