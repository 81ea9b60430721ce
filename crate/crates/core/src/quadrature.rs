//! One-dimensional quadrature on the time axis.

use crate::error::{Error, Result};
use crate::scalar::Real;

// Kronrod 15-point abscissae on [-1, 1] (nonnegative half); odd entries are the Gauss 7 nodes.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Rule used on each smooth piece of an integrand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Quadrature<T> {
    /// Adaptive Gauss–Kronrod (7/15) bisection down to `abs_tol` per piece.
    Adaptive { abs_tol: T, max_intervals: usize },
    /// A single 7-point Gauss–Legendre rule per piece. Meant for integrands
    /// carrying Monte Carlo noise, on which an error estimate never settles.
    Gauss7,
}

impl<T: Real> Default for Quadrature<T> {
    fn default() -> Self {
        Quadrature::Adaptive { abs_tol: T::lit(1e-10), max_intervals: 4096 }
    }
}

/// `∫_a^b f(s) ds` for an `f` smooth on `[a, b]`.
pub fn integrate<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, rule: Quadrature<T>) -> Result<T> {
    if b <= a {
        return Ok(T::zero());
    }
    match rule {
        Quadrature::Gauss7 => Ok(gauss7(&mut f, a, b)),
        Quadrature::Adaptive { abs_tol, max_intervals } => {
            let floor = T::lit(50.0) * T::epsilon();
            let mut total = T::zero();
            let mut stack = vec![(a, b, abs_tol)];
            let mut leaves = 0usize;
            while let Some((lo, hi, tol)) = stack.pop() {
                let (k, err) = kronrod15(&mut f, lo, hi);
                let two = T::lit(2.0);
                let mid = (lo + hi) / two;
                let accept = err <= tol
                    || err <= floor * k.abs()
                    || !(mid > lo && mid < hi);
                if accept {
                    total = total + k;
                    leaves += 1;
                } else if leaves + stack.len() + 2 > max_intervals {
                    return Err(Error::Quadrature {
                        lo: lo.as_f64(),
                        hi: hi.as_f64(),
                        estimate: err.as_f64(),
                        intervals: leaves + stack.len(),
                    });
                } else {
                    stack.push((mid, hi, tol / two));
                    stack.push((lo, mid, tol / two));
                }
            }
            Ok(total)
        }
    }
}

fn kronrod15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let two = T::lit(2.0);
    let c = (a + b) / two;
    let h = (b - a) / two;
    let fc = f(c);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for i in 0..7 {
        let dx = h * T::lit(XGK[i]);
        let s = f(c - dx) + f(c + dx);
        k = k + s * T::lit(WGK[i]);
        if i % 2 == 1 {
            g = g + s * T::lit(WG[i / 2]);
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn gauss7<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> T {
    let two = T::lit(2.0);
    let c = (a + b) / two;
    let h = (b - a) / two;
    let mut g = f(c) * T::lit(WG[3]);
    for i in [1usize, 3, 5] {
        let dx = h * T::lit(XGK[i]);
        g = g + (f(c - dx) + f(c + dx)) * T::lit(WG[i / 2]);
    }
    g * h
}

/// Sorted, deduplicated breakpoints of `[a, b]` including both ends.
pub fn partition<T: Real>(a: T, b: T, interior: impl IntoIterator<Item = T>) -> Vec<T> {
    let mut pts: Vec<T> = interior.into_iter().filter(|&t| t > a && t < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    pts.dedup();
    pts
}
