//! Adaptive Gauss-Kronrod quadrature with the endpoint maps used by the
//! Weyl-law and tail integrals.

use num_complex::Complex64;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Values that can be integrated: real or complex.
pub trait QuadValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Absolute and relative targets for the adaptive driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-12,
            rel: 1e-10,
            max_intervals: 4000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl<T: QuadValue> Estimate<T> {
    /// The value, or an error when the tolerance was not reached.
    pub fn require(self, what: &str) -> Result<T> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::NonConvergence(format!(
                "{what}: quadrature error estimate {:.3e} above tolerance",
                self.error
            )))
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel with its embedded 7-point Gauss estimate.
///
/// The error estimate is the usual scaled |K - G| with a roundoff floor.
pub fn gk15<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut vals = [T::default(); 15];
    vals[7] = f(c);
    for j in 0..7 {
        let dx = h * XGK[j];
        vals[j] = f(c - dx);
        vals[14 - j] = f(c + dx);
    }
    let mut kron = vals[7] * WGK[7];
    let mut gauss = vals[7] * WG[3];
    let mut resabs = WGK[7] * vals[7].magnitude();
    for j in 0..7 {
        let s = vals[j] + vals[14 - j];
        kron = kron + s * WGK[j];
        resabs += WGK[j] * (vals[j].magnitude() + vals[14 - j].magnitude());
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let mean = kron * 0.5;
    let mut resasc = WGK[7] * (vals[7] - mean).magnitude();
    for j in 0..7 {
        resasc += WGK[j] * ((vals[j] - mean).magnitude() + (vals[14 - j] - mean).magnitude());
    }
    let ah = h.abs();
    let kron = kron * h;
    let gauss = gauss * h;
    let resabs = resabs * ah;
    let resasc = resasc * ah;
    let mut err = (kron - gauss).magnitude();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (kron, err)
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive bisection on the panel with the largest error.
pub fn integrate<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Estimate<T> {
    if a == b {
        return Estimate {
            value: T::default(),
            error: 0.0,
            evaluations: 0,
            converged: true,
        };
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, error: e });
    let mut total = v;
    let mut err = e;
    let mut evaluations = 15;
    loop {
        let target = tol.abs.max(tol.rel * total.magnitude());
        if err <= target {
            break;
        }
        if heap.len() >= tol.max_intervals {
            break;
        }
        let worst = heap.pop().expect("heap is nonempty");
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a.min(worst.b) && m < worst.a.max(worst.b)) {
            heap.push(worst);
            break;
        }
        let (vl, el) = gk15(&mut f, worst.a, m);
        let (vr, er) = gk15(&mut f, m, worst.b);
        evaluations += 30;
        total = total - worst.value + vl + vr;
        err = err - worst.error + el + er;
        heap.push(Panel { a: worst.a, b: m, value: vl, error: el });
        heap.push(Panel { a: m, b: worst.b, value: vr, error: er });
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    let mut value = T::default();
    let mut error = 0.0;
    for p in heap.iter() {
        value = value + p.value;
        error += p.error;
    }
    let converged = error <= tol.abs.max(tol.rel * value.magnitude());
    Estimate {
        value,
        error,
        evaluations,
        converged,
    }
}

/// ∫_a^b f for f with inverse-square-root behaviour at either endpoint.
///
/// The interval is split at its midpoint and each half mapped by x = a + s²
/// or x = b - s², which turns (x-a)^{-1/2} into a bounded integrand.
pub fn integrate_sqrt_ends<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Estimate<T> {
    let m = 0.5 * (a + b);
    let half = Tolerance {
        abs: 0.5 * tol.abs,
        ..tol
    };
    let s = (m - a).abs().sqrt();
    let sign = if b >= a { 1.0 } else { -1.0 };
    let left = integrate(|t| f(a + sign * t * t) * (2.0 * t * sign), 0.0, s, half);
    let right = integrate(|t| f(b - sign * t * t) * (2.0 * t * sign), 0.0, s, half);
    combine(left, right, tol)
}

/// ∫_a^{±∞} f via x = a ± s/(1 - s).
pub fn integrate_to_infinity<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    direction: f64,
    tol: Tolerance,
) -> Estimate<T> {
    let d = direction.signum();
    let mut est = integrate(
        |s| {
            let one_minus = 1.0 - s;
            let x = a + d * s / one_minus;
            if !x.is_finite() {
                return T::default();
            }
            f(x) * (1.0 / (one_minus * one_minus))
        },
        0.0,
        1.0,
        tol,
    );
    est.value = est.value * d;
    est
}

/// Sum of two estimates with a joint convergence verdict.
pub fn combine<T: QuadValue>(a: Estimate<T>, b: Estimate<T>, tol: Tolerance) -> Estimate<T> {
    let value = a.value + b.value;
    let error = a.error + b.error;
    Estimate {
        value,
        error,
        evaluations: a.evaluations + b.evaluations,
        converged: a.converged && b.converged
            || error <= tol.abs.max(tol.rel * value.magnitude()),
    }
}

/// Clenshaw-Curtis nodes on [a, b] (Chebyshev extrema, ascending) and weights.
pub fn clenshaw_curtis(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2, "clenshaw_curtis needs at least two nodes");
    let m = n - 1;
    let pi = std::f64::consts::PI;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for j in 0..n {
        let theta = pi * (m - j) as f64 / m as f64;
        let t = theta.cos();
        nodes.push(0.5 * (a + b) + 0.5 * (b - a) * t);
        let cj = if j == 0 || j == m { 1.0 } else { 2.0 };
        let mut s = 0.0;
        for k in 1..=m / 2 {
            let bk = if 2 * k == m { 1.0 } else { 2.0 };
            s += bk / (4.0 * (k * k) as f64 - 1.0) * (2.0 * k as f64 * theta).cos();
        }
        weights.push(cj / m as f64 * (1.0 - s) * 0.5 * (b - a));
    }
    (nodes, weights)
}

/// Gauss-Legendre nodes (ascending) and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one node");
    let pi = std::f64::consts::PI;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut x = (pi * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let (p, pm1) = if n == 1 { (x, 1.0) } else { (p1, p0) };
            dp = nf * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact_on_one_panel() {
        let (v, _) = gk15(&mut |x: f64| x.powi(20), -1.0, 1.0);
        assert!((v - 2.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_peaks() {
        let est = integrate(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, Tolerance::default());
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!(est.converged);
        assert!((est.value - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn inverse_sqrt_endpoints() {
        let est = integrate_sqrt_ends(
            |x: f64| 1.0 / ((x * (1.0 - x)).sqrt()),
            0.0,
            1.0,
            Tolerance::default(),
        );
        assert!((est.value - std::f64::consts::PI).abs() < 1e-11, "{}", est.value);
    }

    #[test]
    fn semi_infinite_both_directions() {
        let tol = Tolerance::default();
        let r = integrate_to_infinity(|x: f64| (-x).exp(), 0.0, 1.0, tol);
        assert!((r.value - 1.0).abs() < 1e-12);
        let l = integrate_to_infinity(|x: f64| x.exp(), 1.0, -1.0, tol);
        assert!((l.value + E_1).abs() < 1e-11, "{}", l.value);
    }
    const E_1: f64 = std::f64::consts::E;

    #[test]
    fn complex_integrand() {
        let est = integrate(
            |x: f64| Complex64::new(0.0, x).exp(),
            0.0,
            std::f64::consts::PI,
            Tolerance::default(),
        );
        assert!((est.value - Complex64::new(0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn clenshaw_curtis_integrates_polynomials() {
        let (x, w) = clenshaw_curtis(33, 0.0, 2.0);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2f64.powi(11) / 11.0).abs() < 1e-10);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn gauss_legendre_exact_to_degree_2n_minus_1() {
        for n in [1, 2, 7, 64, 256] {
            let (x, w) = gauss_legendre(n);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "{n}");
            let d = (2 * n - 2).min(40) as i32;
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d)).sum();
            assert!((s - 2.0 / (d + 1) as f64).abs() < 1e-13, "{n}");
        }
        let (x, _) = gauss_legendre(5);
        // largest root of P₅
        assert!((x[4] - 0.906_179_845_938_664).abs() < 1e-14);
    }
}
