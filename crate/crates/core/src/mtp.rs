//! Model turning-point equation: saddle points of the Laplace exponent,
//! contour-integral fundamental solutions and their Airy-type asymptotics.
//!
//! The fundamental solutions are
//! ψ_ν(Z) = ∫_{C_ν} exp(-(i/hε) f(k) + i k (Z/ε + i/2)) dk with
//! f(k) = k²/2 - e^{-k-1}. Values can reach e^{±800}, so they are carried as
//! a mantissa and a real log scale.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quad::{integrate, Tolerance};
use crate::specfun::lambert_w;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Saddle points k_n(X̃) = X̃ + W_n(-e^{-X̃-1}) of f(k) - kX̃.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleSet {
    pub x_tilde: f64,
    pub points: BTreeMap<i32, Complex64>,
}

impl SaddleSet {
    /// |k + e^{-k-1} - X̃| at branch n.
    pub fn residual(&self, n: i32) -> Option<f64> {
        self.points
            .get(&n)
            .map(|&k| (k + (-k - 1.0).exp() - self.x_tilde).norm())
    }
}

pub fn saddle_points(x_tilde: f64, branches: &[i32]) -> Result<SaddleSet> {
    if !x_tilde.is_finite() {
        return domain("saddle_points: X̃ must be finite");
    }
    let z = Complex64::new(-(-x_tilde - 1.0).exp(), 0.0);
    let mut points = BTreeMap::new();
    for &n in branches {
        points.insert(n, x_tilde + lambert_w(n, z)?);
    }
    Ok(SaddleSet { x_tilde, points })
}

fn saddle(n: i32, x_tilde: f64) -> Result<Complex64> {
    let z = Complex64::new(-(-x_tilde - 1.0).exp(), 0.0);
    Ok(x_tilde + lambert_w(n, z)?)
}

/// Contour label: ν = -∞ or ν = 2m - 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Nu {
    NegInfinity,
    Finite(i32),
}

impl Nu {
    /// Parses a numeric ν; only -∞ and values in 2ℤ - 1/2 are labels.
    pub fn from_value(nu: f64) -> Result<Nu> {
        if nu == f64::NEG_INFINITY {
            return Ok(Nu::NegInfinity);
        }
        let m = (nu + 0.5) / 2.0;
        if !m.is_finite() || m.fract() != 0.0 {
            return domain(format!("ν = {nu} is not -∞ or in 2ℤ - 1/2"));
        }
        Ok(Nu::Finite(m as i32))
    }

    pub fn value(self) -> f64 {
        match self {
            Nu::NegInfinity => f64::NEG_INFINITY,
            Nu::Finite(m) => 2.0 * m as f64 - 0.5,
        }
    }
}

/// Half-line o + s d, s ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub origin: Complex64,
    pub direction: Complex64,
}

/// Polyline contour: in along `start` (traversed towards its origin),
/// through `waypoints`, out along `end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub nu: Option<Nu>,
    pub start: Ray,
    pub waypoints: Vec<Complex64>,
    pub end: Ray,
}

const WEST: Complex64 = Complex64 { re: -1.0, im: 0.0 };
/// Longest straight descent leg before turning onto the valley line.
const LEG: f64 = 3.0;

impl ContourSpec {
    /// Basis contour C_ν for saddles at X̃ = h Re Z.
    ///
    /// Tuned for moderate |X̃| (the turning-point window); the integrator
    /// reports cancellation if a contour is poor.
    pub fn for_nu(nu: Nu, x_tilde: f64) -> Result<ContourSpec> {
        let lower = saddle(-1, x_tilde)?;
        let upper = saddle(0, x_tilde)?;
        let entry = lower + PI * Complex64::from_polar(1.0, -5.0 * PI / 6.0);
        let start = Ray {
            origin: entry,
            direction: WEST,
        };
        match nu {
            Nu::NegInfinity => {
                let mut waypoints = vec![entry, lower];
                let dir = if x_tilde > 0.0 {
                    waypoints.push(upper);
                    Complex64::from_polar(1.0, -PI / 4.0)
                } else {
                    Complex64::from_polar(1.0, -PI / 6.0)
                };
                let last = *waypoints.last().expect("nonempty");
                Ok(ContourSpec {
                    nu: Some(nu),
                    start,
                    waypoints,
                    end: Ray {
                        origin: last,
                        direction: dir,
                    },
                })
            }
            Nu::Finite(0) => {
                let mut waypoints = vec![entry, lower];
                if x_tilde < 0.0 {
                    waypoints.push(upper);
                }
                let last = *waypoints.last().expect("nonempty");
                let top = Complex64::new(last.re, 1.5 * PI);
                waypoints.push(top);
                Ok(ContourSpec {
                    nu: Some(nu),
                    start,
                    waypoints,
                    end: Ray {
                        origin: top,
                        direction: WEST,
                    },
                })
            }
            Nu::Finite(m) => {
                let n = if m < 0 { m - 1 } else { m };
                let ks = saddle(n, x_tilde)?;
                let curv = 1.0 + ks - x_tilde;
                let mut d = Complex64::from_polar(1.0, -PI / 4.0) / curv.sqrt();
                d /= d.norm();
                if d.im < 0.0 {
                    d = -d;
                }
                let nu_v = Nu::Finite(m).value();
                let (lo, hi) = (PI * nu_v, PI * (nu_v + 2.0));
                let leg = |sign: f64, level: f64| -> Vec<Complex64> {
                    let s = (level - ks.im) / (sign * d.im);
                    if s.is_finite() && s > 0.0 && s <= LEG {
                        vec![ks + sign * s * d]
                    } else {
                        let p = ks + sign * LEG * d;
                        vec![p, Complex64::new(p.re, level)]
                    }
                };
                let mut below = leg(-1.0, lo);
                below.reverse();
                let above = leg(1.0, hi);
                let first = below[0];
                let last = *above.last().expect("nonempty");
                let mut waypoints = below;
                waypoints.push(ks);
                waypoints.extend(above);
                Ok(ContourSpec {
                    nu: Some(nu),
                    start: Ray {
                        origin: first,
                        direction: WEST,
                    },
                    waypoints,
                    end: Ray {
                        origin: last,
                        direction: WEST,
                    },
                })
            }
        }
    }

    /// Complex-conjugate contour, same orientation.
    pub fn mirrored(&self) -> ContourSpec {
        let ray = |r: &Ray| Ray {
            origin: r.origin.conj(),
            direction: r.direction.conj(),
        };
        ContourSpec {
            nu: None,
            start: ray(&self.start),
            waypoints: self.waypoints.iter().map(|k| k.conj()).collect(),
            end: ray(&self.end),
        }
    }
}

/// m·e^{s}, with the quadrature error on m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiValue {
    pub mantissa: Complex64,
    pub log_scale: f64,
    pub error: f64,
}

impl PsiValue {
    pub fn value(&self) -> Complex64 {
        self.mantissa * self.log_scale.exp()
    }

    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }

    /// Mantissa expressed at another log scale.
    pub fn at_scale(&self, log_scale: f64) -> Complex64 {
        self.mantissa * (self.log_scale - log_scale).exp()
    }

    /// |self - other| / |other|.
    pub fn relative_error(&self, other: &PsiValue) -> f64 {
        let s = other.log_scale;
        (self.at_scale(s) - other.mantissa).norm() / other.mantissa.norm()
    }
}

fn exponent(k: Complex64, z: Complex64, eps: f64, h: f64) -> Complex64 {
    let f = 0.5 * k * k - (-k - 1.0).exp();
    -I / (h * eps) * f + I * k * (z / eps + 0.5 * I)
}

struct Integral {
    value: Complex64,
    error: f64,
    peak: f64,
}

fn segment_tol() -> Tolerance {
    Tolerance {
        abs: 1e-15,
        rel: 1e-13,
        max_intervals: 2000,
    }
}

/// ∫ k^p e^{Φ(k) - shift} dk along the contour.
fn integrate_contour(
    c: &ContourSpec,
    z: Complex64,
    eps: f64,
    h: f64,
    shift: f64,
    power: i32,
) -> Result<Integral> {
    let g = |k: Complex64| k.powi(power) * (exponent(k, z, eps, h) - shift).exp();
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    let mut peak: f64 = 0.0;
    for w in c.waypoints.windows(2) {
        let (a, d) = (w[0], w[1] - w[0]);
        if d.norm() == 0.0 {
            continue;
        }
        let est = integrate(
            |s| {
                let v = g(a + s * d);
                peak = peak.max(v.norm());
                v * d
            },
            0.0,
            1.0,
            segment_tol(),
        );
        value += est.value;
        error += est.error;
    }
    for (ray, sign) in [(&c.start, -1.0), (&c.end, 1.0)] {
        let (v, e, p) = ray_integral(&g, ray)?;
        value += sign * v;
        error += e;
        peak = peak.max(p);
    }
    if !value.is_finite() {
        return Err(Error::NonConvergence(
            "contour integral overflowed its scale".into(),
        ));
    }
    Ok(Integral { value, error, peak })
}

/// ∫_0^∞ g(o + s d) d ds, truncated once |g| < 1e-17 of the largest sample.
fn ray_integral(
    g: &impl Fn(Complex64) -> Complex64,
    ray: &Ray,
) -> Result<(Complex64, f64, f64)> {
    let at = |s: f64| g(ray.origin + s * ray.direction);
    let mut peak = at(0.0).norm();
    let mut edges = vec![0.0];
    let mut s = 0.125;
    loop {
        let v = at(s).norm();
        peak = peak.max(v);
        edges.push(s);
        if v <= 1e-17 * peak.max(f64::MIN_POSITIVE) && s >= 1.0 {
            break;
        }
        if s > 1e4 {
            return Err(Error::NonConvergence(
                "contour ray: integrand did not decay".into(),
            ));
        }
        s *= 2.0;
    }
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    for w in edges.windows(2) {
        let est = integrate(|t| at(t) * ray.direction, w[0], w[1], segment_tol());
        value += est.value;
        error += est.error;
    }
    Ok((value, error, peak))
}

/// max Re Φ over the waypoints, used to scale the integrand to O(1).
fn natural_shift(c: &ContourSpec, zs: &[Complex64], eps: f64, h: f64) -> f64 {
    let mut s = f64::NEG_INFINITY;
    for &z in zs {
        for &k in c.waypoints.iter().chain([c.start.origin, c.end.origin].iter()) {
            s = s.max(exponent(k, z, eps, h).re);
        }
    }
    s
}

fn check_params(z: Complex64, eps: f64, h: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return domain("ε must be positive");
    }
    if !(h > 0.0 && h.is_finite()) {
        return domain("h must be positive");
    }
    if !(z.is_finite() && z.im.abs() <= 0.5 * eps * (1.0 + 1e-12)) {
        return domain("Z must lie in the strip |Im Z| ≤ ε/2");
    }
    Ok(())
}

/// ψ along an arbitrary polyline contour (h of either sign).
pub fn psi_on_contour(c: &ContourSpec, z: Complex64, eps: f64, h: f64) -> Result<PsiValue> {
    let shift = natural_shift(c, &[z], eps, h);
    let r = integrate_contour(c, z, eps, h, shift, 0)?;
    Ok(PsiValue {
        mantissa: r.value,
        log_scale: shift,
        error: r.error,
    })
}

/// Fundamental solution ψ_ν(Z; ε, h).
pub fn psi_fundamental(nu: Nu, z: Complex64, eps: f64, h: f64) -> Result<PsiValue> {
    check_params(z, eps, h)?;
    let c = ContourSpec::for_nu(nu, h * z.re)?;
    psi_on_contour(&c, z, eps, h)
}

/// Peak of the scaled integrand over |ψ|; near 1 for a good contour.
pub fn cancellation(nu: Nu, z: Complex64, eps: f64, h: f64) -> Result<f64> {
    check_params(z, eps, h)?;
    let c = ContourSpec::for_nu(nu, h * z.re)?;
    let shift = natural_shift(&c, &[z], eps, h);
    let r = integrate_contour(&c, z, eps, h, shift, 0)?;
    Ok(r.peak / r.value.norm())
}

/// Terms of the model equation at real X.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelResidual {
    pub x: f64,
    /// |iεψ'⁺ + hXψ⁺ - e^{-1}ψ⁻|
    pub residual: f64,
    /// max(|ψ⁺|, |ψ⁻|)
    pub scale: f64,
    pub relative: f64,
}

/// Substitutes ψ_ν into 0 = iεψ_X⁺ + hXψ⁺ - e^{-1}ψ⁻, with ψ^± = ψ(X ∓ iε/2).
///
/// All three terms share one log scale; `residual` and `scale` are in that
/// scale, so only `relative` is meaningful in absolute terms.
pub fn model_residual(nu: Nu, x: f64, eps: f64, h: f64) -> Result<ModelResidual> {
    check_params(Complex64::new(x, 0.0), eps, h)?;
    let c = ContourSpec::for_nu(nu, h * x)?;
    let zp = Complex64::new(x, -0.5 * eps);
    let zm = Complex64::new(x, 0.5 * eps);
    let shift = natural_shift(&c, &[zp, zm], eps, h);
    let plus = integrate_contour(&c, zp, eps, h, shift, 0)?.value;
    let minus = integrate_contour(&c, zm, eps, h, shift, 0)?.value;
    // ψ' = ∫ (ik/ε) e^Φ, so iεψ' = -∫ k e^Φ.
    let k_moment = integrate_contour(&c, zp, eps, h, shift, 1)?.value;
    let r = -k_moment + h * x * plus - (-1.0f64).exp() * minus;
    let scale = plus.norm().max(minus.norm());
    Ok(ModelResidual {
        x,
        residual: r.norm(),
        scale,
        relative: r.norm() / scale,
    })
}

const AI0: f64 = 0.355_028_053_887_817_24;
const AIP0: f64 = 0.258_819_403_792_806_8;
const SERIES_RADIUS: f64 = 5.0;

/// Airy function Ai(z).
///
/// Maclaurin series for |z| ≤ 5, the large-|z| expansion for |arg z| ≤ 2π/3
/// beyond that, and Ai(z) = -ωAi(ωz) - ω²Ai(ω²z) elsewhere. Relative accuracy
/// is about 1e-13 except near |z| = 5 on the positive axis, where the series
/// cancels down to roughly 1e-9.
pub fn airy_ai(z: Complex64) -> Complex64 {
    if z.norm() <= SERIES_RADIUS {
        return airy_series(z);
    }
    if z.arg().abs() <= 2.0 * PI / 3.0 {
        return airy_asymptotic(z);
    }
    let w = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
    -w * airy_asymptotic(w * z) - w * w * airy_asymptotic(w * w * z)
}

fn airy_series(z: Complex64) -> Complex64 {
    let z3 = z * z * z;
    let (mut f, mut g) = (Complex64::new(1.0, 0.0), z);
    let (mut tf, mut tg) = (f, g);
    for k in 1..200 {
        let kf = k as f64;
        tf = tf * z3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        tg = tg * z3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        f += tf;
        g += tg;
        if tf.norm() <= 1e-18 * f.norm() && tg.norm() <= 1e-18 * g.norm().max(1e-300) {
            break;
        }
    }
    AI0 * f - AIP0 * g
}

fn airy_asymptotic(z: Complex64) -> Complex64 {
    let zeta = 2.0 / 3.0 * z * z.sqrt();
    let ratio = -1.0 / zeta;
    let mut sum = Complex64::new(1.0, 0.0);
    let mut u = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        let t = u * ratio.powi(k);
        if t.norm() >= last {
            break;
        }
        last = t.norm();
        sum += t;
        if last < 1e-17 {
            break;
        }
    }
    (-zeta).exp() / (2.0 * PI.sqrt() * z.powf(0.25)) * sum
}

/// Leading-order formula for ψ_ν at Z = ε^α χ + iε(Ỹ - 1/2), error terms
/// dropped. W_n denotes W_n(-e^{-1}).
pub fn asymptotic_formula(nu: Nu, chi: f64, y_tilde: f64, eps: f64, h: f64, alpha: f64) -> Result<PsiValue> {
    if !(eps > 0.0 && h > 0.0) {
        return domain("ε and h must be positive");
    }
    let phase_scale = 1.0 / eps.powf(1.0 - alpha);
    let airy_scale = (2.0 * h).cbrt() / eps.powf(2.0 / 3.0 - alpha);
    let airy_case = |rot: Complex64, extra_phase: f64| -> PsiValue {
        let expo = I / (2.0 * h * eps) + I * extra_phase - I * chi * phase_scale + y_tilde;
        let pre = 2.0 * PI * (2.0 * h * eps).cbrt();
        let ai = airy_ai(rot * airy_scale * chi);
        PsiValue {
            mantissa: pre * ai * Complex64::new(0.0, expo.im).exp(),
            log_scale: expo.re,
            error: 0.0,
        }
    };
    match nu {
        Nu::NegInfinity => Ok(airy_case(Complex64::new(-1.0, 0.0), 0.0)),
        Nu::Finite(0) => Ok(airy_case(Complex64::from_polar(1.0, PI / 3.0), PI / 3.0)),
        Nu::Finite(m) => {
            let (n, quarter) = if m < 0 { (m - 1, -PI / 4.0) } else { (m, 3.0 * PI / 4.0) };
            let w = lambert_w(n, Complex64::new(-(-1.0f64).exp(), 0.0))?;
            let one_w = 1.0 + w;
            let ln_pre = 0.5 * ((2.0 * PI * h * eps).ln() - one_w.ln());
            let expo = I * (1.0 - one_w * one_w) / (2.0 * h * eps) + I * w * chi * phase_scale
                - w * y_tilde
                + I * quarter
                + ln_pre;
            Ok(PsiValue {
                mantissa: Complex64::new(0.0, expo.im).exp(),
                log_scale: expo.re,
                error: 0.0,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AiryRow {
    pub chi: f64,
    pub numeric: PsiValue,
    pub formula: PsiValue,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AiryComparison {
    pub nu: Nu,
    pub eps: f64,
    pub h: f64,
    pub alpha: f64,
    pub rows: Vec<AiryRow>,
    pub max_rel_error: f64,
}

/// Numerical ψ_ν against the leading-order formula on real Z = ε^α χ
/// (Ỹ = 1/2).
pub fn airy_compare(nu: Nu, chi_grid: &[f64], eps: f64, h: f64, alpha: f64) -> Result<AiryComparison> {
    if !(alpha > 0.5 && alpha < 2.0 / 3.0) {
        return domain("α must lie in (1/2, 2/3)");
    }
    let mut rows = Vec::with_capacity(chi_grid.len());
    let mut max_rel_error: f64 = 0.0;
    for &chi in chi_grid {
        let z = Complex64::new(eps.powf(alpha) * chi, 0.0);
        let numeric = psi_fundamental(nu, z, eps, h)?;
        let formula = asymptotic_formula(nu, chi, 0.5, eps, h, alpha)?;
        let rel_error = numeric.relative_error(&formula);
        max_rel_error = max_rel_error.max(rel_error);
        rows.push(AiryRow {
            chi,
            numeric,
            formula,
            rel_error,
        });
    }
    Ok(AiryComparison {
        nu,
        eps,
        h,
        alpha,
        rows,
        max_rel_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn saddles_coalesce_at_the_fold() {
        let s = saddle_points(0.0, &[0, -1]).unwrap();
        for n in [0, -1] {
            assert!((s.points[&n] - c(-1.0, 0.0)).norm() < 1e-7);
        }
        let s = saddle_points(10.0, &[0]).unwrap();
        // mpmath: 10 + W_0(-e^{-11})
        assert!((s.points[&0].re - 9.999_983_298_020_256).abs() < 1e-12);
        let s = saddle_points(-10.0, &[2]).unwrap();
        let k = s.points[&2];
        // mpmath: -10 + W_2(-e^9)
        assert!((k - c(-3.761_530_081_577_638, 14.542_407_787_876_067)).norm() < 1e-12);
        assert!((k.im - 5.0 * PI).abs() < 1.5 && (k.re + 11f64.ln() + 1.0).abs() < 0.5);
    }

    #[test]
    fn saddle_residuals_on_a_grid() {
        let branches: Vec<i32> = (-5..=5).collect();
        for j in 0..=40 {
            let xt = -10.0 + 0.5 * j as f64;
            let s = saddle_points(xt, &branches).unwrap();
            for &n in &branches {
                assert!(s.residual(n).unwrap() <= 1e-12, "X̃={xt} n={n}");
            }
        }
    }

    #[test]
    fn nu_labels() {
        assert_eq!(Nu::from_value(-2.5).unwrap(), Nu::Finite(-1));
        assert_eq!(Nu::from_value(1.5).unwrap(), Nu::Finite(1));
        assert_eq!(Nu::from_value(f64::NEG_INFINITY).unwrap(), Nu::NegInfinity);
        assert!(Nu::from_value(0.5).is_err());
        assert_eq!(Nu::Finite(-1).value(), -2.5);
    }

    #[test]
    fn airy_matches_mpmath() {
        let cases = [
            (c(0.0, 0.0), c(0.355_028_053_887_817_2, 0.0), 1e-15),
            (c(1.0, 0.0), c(0.135_292_416_312_881_41, 0.0), 1e-14),
            (c(-1.0, 0.0), c(0.535_560_883_292_352_1, 0.0), 1e-14),
            (c(2.5, 0.0), c(0.015_725_923_380_470_49, 0.0), 1e-12),
            (c(-4.0, 0.0), c(-0.070_265_532_949_289_51, 0.0), 1e-12),
            (c(1.0, 1.0), c(0.060_458_308_371_838_146, -0.151_889_565_877_181_41), 1e-14),
            (c(0.8, 1.3), c(0.024_974_749_615_773_867, -0.235_633_934_975_219_34), 1e-14),
            (c(-3.0, 2.0), c(-4.419_689_554_264_167, 5.454_622_517_782_667), 1e-13),
            (c(6.0, 0.0), c(9.947_694_360_252_889e-6, 0.0), 1e-9),
            (c(9.0, 0.0), c(2.471_168_430_872_49e-9, 0.0), 1e-12),
            (c(-9.0, 0.0), c(-0.022_133_721_547_341_403, 0.0), 1e-11),
            (c(5.0, 5.0), c(0.000_998_835_077_971_024_6, 0.001_015_824_213_839_636_6), 1e-11),
            (c(-7.0, -1.0), c(1.180_936_754_643_198_8, 2.133_680_991_289_174_3), 1e-11),
            (c(0.0, 8.0), c(435.623_142_141_602_56, 7206.344_748_904_13), 1e-11),
        ];
        for (z, want, tol) in cases {
            let got = airy_ai(z);
            assert!((got - want).norm() <= tol * want.norm(), "Ai({z}) = {got}, want {want}");
        }
    }

    fn assert_psi(got: PsiValue, ln_abs: f64, arg: f64, tol: f64) {
        assert!((got.ln_abs() - ln_abs).abs() < tol, "ln|ψ| {} vs {ln_abs}", got.ln_abs());
        let d = (got.mantissa.arg() - arg + PI).rem_euclid(2.0 * PI) - PI;
        assert!(d.abs() < tol, "arg {} vs {arg}", got.mantissa.arg());
    }

    #[test]
    fn psi_matches_independent_contours() {
        // mpmath quadrature along different polylines in the same homotopy class
        // (untruncated descent lines for the simple saddles)
        let (eps, h) = (0.05, 1.0);
        let cases = [
            (Nu::NegInfinity, c(0.1, 0.0), 0.940_127_634_215_484_2, 1.763_134_354_437_221_5),
            (Nu::NegInfinity, c(-0.2, 0.02), -1.087_237_727_979_435_6, 2.057_047_250_269_450_3),
            (Nu::Finite(0), c(-0.1, 0.01), 1.282_101_617_014_692, 0.742_088_341_320_096_2),
            (Nu::Finite(-1), c(0.05, 0.0), 319.117_833_290_658_6, 2.378_796_389_422_255_7),
            (Nu::Finite(1), c(0.0, 0.0), -311.775_586_351_366_26, -0.695_356_384_652_039_7),
        ];
        for (nu, z, ln_abs, arg) in cases {
            let got = psi_fundamental(nu, z, eps, h).unwrap();
            assert_psi(got, ln_abs, arg, 1e-9);
            assert!(cancellation(nu, z, eps, h).unwrap() < 1e3);
        }
    }

    #[test]
    fn model_equation_is_satisfied() {
        let (eps, h) = (0.05, 1.0);
        for nu in [Nu::NegInfinity, Nu::Finite(0), Nu::Finite(-1), Nu::Finite(1)] {
            for j in 0..10 {
                let x = -0.45 + 0.1 * j as f64;
                let r = model_residual(nu, x, eps, h).unwrap();
                assert!(r.relative <= 1e-6, "{nu:?} X={x}: {}", r.relative);
            }
        }
    }

    #[test]
    fn conjugate_contour_flips_h_and_reflects_z() {
        let (eps, h) = (0.1, 0.7);
        let z = c(0.13, -0.02);
        for nu in [Nu::NegInfinity, Nu::Finite(0), Nu::Finite(-1)] {
            let contour = ContourSpec::for_nu(nu, h * z.re).unwrap();
            let a = psi_on_contour(&contour, z, eps, h).unwrap();
            let b = psi_on_contour(&contour.mirrored(), -z.conj(), eps, -h).unwrap();
            let (av, bv) = (a.mantissa, b.at_scale(a.log_scale));
            assert!((av.conj() - bv).norm() <= 1e-11 * av.norm(), "{nu:?}");
        }
    }

    #[test]
    fn concatenated_contours_add() {
        let (eps, h) = (1.0, 1.0);
        let z = c(0.2, 0.1);
        let xt = h * z.re;
        let a = ContourSpec::for_nu(Nu::Finite(0), xt).unwrap();
        let b = ContourSpec::for_nu(Nu::Finite(1), xt).unwrap();
        assert!((a.end.origin.im - b.start.origin.im).abs() < 1e-12);
        let joined = ContourSpec {
            nu: None,
            start: a.start,
            waypoints: a.waypoints.iter().chain(b.waypoints.iter()).copied().collect(),
            end: b.end,
        };
        let pa = psi_on_contour(&a, z, eps, h).unwrap();
        let pb = psi_on_contour(&b, z, eps, h).unwrap();
        let pj = psi_on_contour(&joined, z, eps, h).unwrap();
        let s = pj.log_scale;
        let sum = pa.at_scale(s) + pb.at_scale(s);
        let size = pa.at_scale(s).norm().max(pb.at_scale(s).norm());
        assert!((pj.mantissa - sum).norm() <= 1e-11 * size);
    }

    #[test]
    fn formula_at_chi_zero_uses_ai_of_zero() {
        let (eps, h, alpha) = (0.05, 1.0, 0.6);
        let f = asymptotic_formula(Nu::NegInfinity, 0.0, 0.5, eps, h, alpha).unwrap();
        let want = 2.0 * PI * (2.0 * h * eps).cbrt() * 3f64.powf(-2.0 / 3.0) / 1.354_117_939_426_400_4;
        assert!((f.ln_abs() - (want.ln() + 0.5)).abs() < 1e-14);
    }

    #[test]
    fn airy_comparison_improves_as_eps_shrinks() {
        let grid: Vec<f64> = (0..=20).map(|j| -1.0 + 0.1 * j as f64).collect();
        let errs: Vec<f64> = [0.1, 0.05, 0.02]
            .iter()
            .map(|&eps| airy_compare(Nu::NegInfinity, &grid, eps, 1.0, 0.6).unwrap().max_rel_error)
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        let exp_case = airy_compare(Nu::Finite(-1), &grid, 0.05, 1.0, 0.6).unwrap();
        assert!(exp_case.max_rel_error <= 0.1, "{}", exp_case.max_rel_error);
        assert!(airy_compare(Nu::NegInfinity, &grid, 0.05, 1.0, 0.7).is_err());
    }
}
