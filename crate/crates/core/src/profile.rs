//! Admissible single-lobe initial data, turning points, inviscid Burgers by
//! characteristics and the gradient-catastrophe time.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quad::{integrate_to_infinity, Estimate, Tolerance};
use crate::specfun::level_e;

/// Half-width of the validation grid around the maximum.
pub const CHECK_HALF_WIDTH: f64 = 30.0;
/// Points on the validation grid.
pub const CHECK_POINTS: usize = 4096;
/// Turning points further than this from the maximum are reported as truncated.
pub const SEARCH_BOUND: f64 = 1.0e3;

fn one() -> f64 {
    1.0
}

/// Description of an initial condition, as read from config files or flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSpec {
    /// amplitude · sech²((x - center)/width)
    Sech2 {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// amplitude · exp(-((x - center)/width)²)
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// Positive samples joined by a monotone cubic, with exponential tails.
    Tabulated { x: Vec<f64>, u: Vec<f64> },
}

impl ProfileSpec {
    pub fn sech2() -> Self {
        ProfileSpec::Sech2 {
            amplitude: 1.0,
            center: 0.0,
            width: 1.0,
        }
    }

    /// Parses `NAME[:amplitude[,center[,width]]]` with NAME one of `sech2`, `gaussian`.
    pub fn parse(text: &str) -> Result<Self> {
        let (name, params) = match text.split_once(':') {
            Some((n, p)) => (n.trim(), p),
            None => (text.trim(), ""),
        };
        let mut vals = [1.0, 0.0, 1.0];
        if !params.trim().is_empty() {
            let parts: Vec<&str> = params.split(',').collect();
            if parts.len() > 3 {
                return Err(Error::Validation(format!(
                    "profile `{text}`: at most three parameters (amplitude, center, width)"
                )));
            }
            for (slot, p) in vals.iter_mut().zip(parts) {
                *slot = p.trim().parse::<f64>().map_err(|e| {
                    Error::Validation(format!("profile `{text}`: bad number `{p}`: {e}"))
                })?;
            }
        }
        let [amplitude, center, width] = vals;
        match name {
            "sech2" => Ok(ProfileSpec::Sech2 {
                amplitude,
                center,
                width,
            }),
            "gaussian" => Ok(ProfileSpec::Gaussian {
                amplitude,
                center,
                width,
            }),
            other => Err(Error::Validation(format!(
                "unknown profile `{other}` (expected sech2 or gaussian)"
            ))),
        }
    }
}

/// Shape-preserving cubic through positive samples.
#[derive(Debug, Clone, PartialEq)]
struct MonotoneCubic {
    x: Vec<f64>,
    u: Vec<f64>,
    d: Vec<f64>,
    left_rate: f64,
    right_rate: f64,
}

impl MonotoneCubic {
    fn new(x: &[f64], u: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 3 || u.len() != n {
            return Err(Error::Validation(
                "tabulated profile needs at least 3 (x, u) pairs of equal length".into(),
            ));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Validation(
                "tabulated profile: x must be strictly increasing".into(),
            ));
        }
        if let Some(i) = u.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Validation(format!(
                "positivity: tabulated sample u[{i}] = {} is not positive",
                u[i]
            )));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let s: Vec<f64> = (0..n - 1).map(|i| (u[i + 1] - u[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            if s[i - 1] * s[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
            }
        }
        let end = |h0: f64, h1: f64, s0: f64, s1: f64| {
            let mut e = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
            if e * s0 <= 0.0 {
                e = 0.0;
            } else if s0 * s1 <= 0.0 && e.abs() > 3.0 * s0.abs() {
                e = 3.0 * s0;
            }
            e
        };
        d[0] = end(h[0], h[1], s[0], s[1]);
        d[n - 1] = end(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
        let left_rate = positive_rate(d[0] / u[0], h[0]);
        let right_rate = positive_rate(-d[n - 1] / u[n - 1], h[n - 2]);
        Ok(MonotoneCubic {
            x: x.to_vec(),
            u: u.to_vec(),
            d,
            left_rate,
            right_rate,
        })
    }

    fn locate(&self, x: f64) -> usize {
        match self.x.partition_point(|v| *v <= x) {
            0 => 0,
            p => (p - 1).min(self.x.len() - 2),
        }
    }

    /// (u, u', u'') at x.
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.x.len();
        if x < self.x[0] {
            let v = self.u[0] * (self.left_rate * (x - self.x[0])).exp();
            return (v, self.left_rate * v, self.left_rate * self.left_rate * v);
        }
        if x > self.x[n - 1] {
            let v = self.u[n - 1] * (-self.right_rate * (x - self.x[n - 1])).exp();
            return (v, -self.right_rate * v, self.right_rate * self.right_rate * v);
        }
        let i = self.locate(x);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let (y0, y1, d0, d1) = (self.u[i], self.u[i + 1], self.d[i], self.d[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
        let dv = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * h * d0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * h * d1)
            / h;
        let d2v = ((12.0 * t - 6.0) * y0
            + (6.0 * t - 4.0) * h * d0
            + (-12.0 * t + 6.0) * y1
            + (6.0 * t - 2.0) * h * d1)
            / (h * h);
        (v, dv, d2v)
    }
}

fn positive_rate(rate: f64, spacing: f64) -> f64 {
    if rate.is_finite() && rate > 0.0 {
        rate
    } else {
        1.0 / spacing
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Sech2 { a: f64, c: f64, w: f64 },
    Gaussian { a: f64, c: f64, w: f64 },
    Tabulated(MonotoneCubic),
}

fn sech(s: f64) -> f64 {
    let e = (-s.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

impl Shape {
    /// (u, u', u'') at x.
    fn jet(&self, x: f64) -> (f64, f64, f64) {
        match self {
            Shape::Sech2 { a, c, w } => {
                let s = (x - c) / w;
                let sh = sech(s);
                let sh2 = sh * sh;
                let th = s.tanh();
                (
                    a * sh2,
                    -2.0 * a * sh2 * th / w,
                    2.0 * a * sh2 * (3.0 * th * th - 1.0) / (w * w),
                )
            }
            Shape::Gaussian { a, c, w } => {
                let s = (x - c) / w;
                let g = a * (-s * s).exp();
                (g, -2.0 * s * g / w, (4.0 * s * s - 2.0) * g / (w * w))
            }
            Shape::Tabulated(m) => m.eval(x),
        }
    }
}

/// Position of two turning points with the level they solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningPoints {
    pub level: f64,
    pub x_minus: f64,
    pub x_plus: f64,
    /// Set when a crossing lies beyond the search bound and was clamped.
    pub truncated: bool,
}

/// Anything with a single positive lobe whose level sets can be located.
pub trait Lobe: Sync {
    fn value(&self, x: f64) -> f64;
    fn x_max(&self) -> f64;
    fn u_max(&self) -> f64;
    fn level_crossings(&self, level: f64) -> Result<TurningPoints>;
}

/// A validated admissible initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleProfile {
    spec: ProfileSpec,
    shape: Shape,
    x_max: f64,
    u_max: f64,
    decay_certificate: f64,
    width_scale: f64,
}

impl AdmissibleProfile {
    pub fn spec(&self) -> &ProfileSpec {
        &self.spec
    }

    pub fn u0(&self, x: f64) -> f64 {
        self.shape.jet(x).0
    }

    pub fn du0(&self, x: f64) -> f64 {
        self.shape.jet(x).1
    }

    pub fn d2u0(&self, x: f64) -> f64 {
        self.shape.jet(x).2
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    /// ∫ (x² + 1) u₀(x) dx.
    pub fn decay_certificate(&self) -> f64 {
        self.decay_certificate
    }

    /// Characteristic width used to size brackets and grids.
    pub fn width_scale(&self) -> f64 {
        self.width_scale
    }

    /// ∫ g(x) dx over the line, split at the maximum.
    pub fn integrate_line<F: Fn(f64) -> f64>(&self, g: F, tol: Tolerance) -> Estimate<f64> {
        let r = integrate_to_infinity(&g, self.x_max, 1.0, tol);
        let l = integrate_to_infinity(&g, self.x_max, -1.0, tol);
        crate::quad::combine(r, Estimate { value: -l.value, ..l }, tol)
    }

    /// ∫ u₀ dx.
    pub fn mass(&self) -> f64 {
        self.integrate_line(|x| self.u0(x), Tolerance::new(1e-14, 1e-13))
            .value
    }

    /// ∫ u₀² dx.
    pub fn l2_squared(&self) -> f64 {
        self.integrate_line(
            |x| {
                let u = self.u0(x);
                u * u
            },
            Tolerance::new(1e-14, 1e-13),
        )
        .value
    }
}

/// Builds and validates a profile from its description.
pub fn build_profile(spec: &ProfileSpec) -> Result<AdmissibleProfile> {
    let (shape, x_max, width_scale) = match spec {
        ProfileSpec::Sech2 {
            amplitude,
            center,
            width,
        }
        | ProfileSpec::Gaussian {
            amplitude,
            center,
            width,
        } => {
            if !(*amplitude > 0.0 && amplitude.is_finite()) {
                return Err(Error::Validation(format!(
                    "positivity: amplitude {amplitude} must be positive"
                )));
            }
            if !(*width > 0.0 && width.is_finite()) || !center.is_finite() {
                return Err(Error::Validation(format!(
                    "profile parameters must be finite with positive width (width = {width})"
                )));
            }
            let (a, c, w) = (*amplitude, *center, *width);
            let shape = if matches!(spec, ProfileSpec::Sech2 { .. }) {
                Shape::Sech2 { a, c, w }
            } else {
                Shape::Gaussian { a, c, w }
            };
            (shape, c, w)
        }
        ProfileSpec::Tabulated { x, u } => {
            let m = MonotoneCubic::new(x, u)?;
            let imax = u
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .expect("nonempty");
            let span = (x[x.len() - 1] - x[0]) / 8.0;
            (Shape::Tabulated(m), x[imax], span.max(1e-3))
        }
    };
    let u_max = shape.jet(x_max).0;
    let mut profile = AdmissibleProfile {
        spec: spec.clone(),
        shape,
        x_max,
        u_max,
        decay_certificate: f64::NAN,
        width_scale,
    };
    validate_lobe(&profile)?;
    let cert = profile.integrate_line(
        |x| (x * x + 1.0) * profile.u0(x),
        Tolerance::new(1e-12, 1e-10),
    );
    if !cert.value.is_finite() || !cert.converged {
        return Err(Error::Validation(format!(
            "decay: moment ∫(x²+1)u₀ dx did not converge (estimate {})",
            cert.value
        )));
    }
    profile.decay_certificate = cert.value;
    Ok(profile)
}

fn validate_lobe(p: &AdmissibleProfile) -> Result<()> {
    let half = CHECK_HALF_WIDTH.max(CHECK_HALF_WIDTH * p.width_scale);
    let slack = 1e-13 * p.u_max / p.width_scale;
    for i in 0..CHECK_POINTS {
        let x = p.x_max - half + 2.0 * half * i as f64 / (CHECK_POINTS - 1) as f64;
        let (u, du, _) = p.shape.jet(x);
        if !(u.is_finite() && du.is_finite()) || u < 0.0 {
            return Err(Error::Validation(format!(
                "positivity: u0({x}) = {u} is not a finite nonnegative value"
            )));
        }
        if u > p.u_max * (1.0 + 1e-14) {
            return Err(Error::Validation(format!(
                "single lobe: u0({x}) = {u} exceeds the value {} at the maximum",
                p.u_max
            )));
        }
        let wrong_way = if x < p.x_max { -du } else if x > p.x_max { du } else { 0.0 };
        if wrong_way > slack {
            return Err(Error::Validation(format!(
                "single lobe: u0' = {du} has the wrong sign at x = {x} (maximum at {})",
                p.x_max
            )));
        }
    }
    let edge = p.shape.jet(p.x_max + half).0.max(p.shape.jet(p.x_max - half).0);
    if edge > 1e-2 * p.u_max {
        return Err(Error::Validation(format!(
            "decay: u0 = {edge} at the edge of the check grid is not small"
        )));
    }
    Ok(())
}

/// Root of a monotone function on [lo, hi] with g(lo), g(hi) of opposite sign.
fn bisect_newton<G: Fn(f64) -> (f64, f64)>(g: G, mut lo: f64, mut hi: f64) -> f64 {
    let glo = g(lo).0;
    let rising = glo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo.min(hi) && mid < lo.max(hi)) {
            break;
        }
        let v = g(mid).0;
        if v == 0.0 {
            return mid;
        }
        if (v < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let (v, dv) = g(x);
        if dv == 0.0 || !dv.is_finite() {
            break;
        }
        let next = x - v / dv;
        if next >= lo.min(hi) && next <= lo.max(hi) && g(next).0.abs() < v.abs() {
            x = next;
        } else {
            break;
        }
    }
    x
}

impl Lobe for AdmissibleProfile {
    fn value(&self, x: f64) -> f64 {
        self.u0(x)
    }

    fn x_max(&self) -> f64 {
        self.x_max
    }

    fn u_max(&self) -> f64 {
        self.u_max
    }

    fn level_crossings(&self, level: f64) -> Result<TurningPoints> {
        if !(level > 0.0) || level > self.u_max * (1.0 + 1e-13) {
            return domain(format!(
                "turning points: level {level} outside (0, u_max = {}]",
                self.u_max
            ));
        }
        if level >= self.u_max {
            return Ok(TurningPoints {
                level,
                x_minus: self.x_max,
                x_plus: self.x_max,
                truncated: false,
            });
        }
        let mut truncated = false;
        let mut side = |dir: f64| {
            let mut step = self.width_scale;
            let mut inner = self.x_max;
            loop {
                let outer = self.x_max + dir * step;
                if self.u0(outer) < level {
                    let g = |x: f64| {
                        let (u, du, _) = self.shape.jet(x);
                        (u - level, du)
                    };
                    return bisect_newton(g, inner, outer);
                }
                if step >= SEARCH_BOUND {
                    truncated = true;
                    return outer;
                }
                inner = outer;
                step *= 2.0;
            }
        };
        let x_minus = side(-1.0);
        let x_plus = side(1.0);
        Ok(TurningPoints {
            level,
            x_minus,
            x_plus,
            truncated,
        })
    }
}

/// Turning points x₋ ≤ x_max ≤ x₊ where u₀ equals the level E(ζ).
pub fn turning_points<L: Lobe + ?Sized>(lobe: &L, zeta: Complex64, delta: f64) -> Result<TurningPoints> {
    let e = level_e(zeta, delta)?;
    lobe.level_crossings(e)
}

/// t_c = 1 / max(-2 u₀').
pub fn catastrophe_time(profile: &AdmissibleProfile) -> f64 {
    let half = CHECK_HALF_WIDTH.max(CHECK_HALF_WIDTH * profile.width_scale);
    let n = CHECK_POINTS;
    let h = half / (n - 1) as f64;
    let slope = |x: f64| -profile.du0(x);
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..n {
        let v = slope(profile.x_max + i as f64 * h);
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    let mut a = profile.x_max + best.saturating_sub(1) as f64 * h;
    let mut b = profile.x_max + (best + 1).min(n - 1) as f64 * h;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (slope(c), slope(d));
    while (b - a).abs() > 1e-12 * (1.0 + a.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = slope(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = slope(d);
        }
    }
    let mut x = 0.5 * (a + b);
    if let Shape::Sech2 { .. } | Shape::Gaussian { .. } = profile.shape {
        // Newton on u₀'' = 0 with a difference quotient for u₀'''.
        for _ in 0..3 {
            let e = 1e-5 * profile.width_scale;
            let d2 = profile.d2u0(x);
            let d3 = (profile.d2u0(x + e) - profile.d2u0(x - e)) / (2.0 * e);
            if d3 == 0.0 {
                break;
            }
            let next = x - d2 / d3;
            if (next - x).abs() < 1e-3 * profile.width_scale && slope(next) >= slope(x) {
                x = next;
            } else {
                break;
            }
        }
    }
    let m = best_val.max(slope(x));
    1.0 / (2.0 * m)
}

/// The inviscid Burgers solution launched from an admissible profile.
#[derive(Debug, Clone, Copy)]
pub struct BurgersState<'a> {
    pub profile: &'a AdmissibleProfile,
    pub t: f64,
    pub t_c: f64,
}

impl<'a> BurgersState<'a> {
    pub fn new(profile: &'a AdmissibleProfile, t: f64) -> Result<Self> {
        let t_c = catastrophe_time(profile);
        if !(t >= 0.0) || t >= t_c {
            return domain(format!(
                "Burgers state requires 0 <= t < t_c = {t_c}, got t = {t}"
            ));
        }
        Ok(BurgersState { profile, t, t_c })
    }

    /// Foot y of the characteristic through (x, t).
    pub fn characteristic_foot(&self, x: f64) -> Result<f64> {
        let t = self.t;
        if t == 0.0 {
            return Ok(x);
        }
        let p = self.profile;
        let g = |y: f64| {
            let (u, du, _) = p.shape.jet(y);
            (y + 2.0 * u * t - x, 1.0 + 2.0 * du * t)
        };
        let lo = x - 2.0 * p.u_max * t;
        let hi = x;
        let (glo, ghi) = (g(lo).0, g(hi).0);
        if glo > 0.0 || ghi < 0.0 {
            return Err(Error::RootBracket(format!(
                "characteristic through x = {x}: no sign change on [{lo}, {hi}]"
            )));
        }
        let y = if glo == 0.0 {
            lo
        } else if ghi == 0.0 {
            hi
        } else {
            bisect_newton(g, lo, hi)
        };
        let (res, slope) = g(y);
        if slope <= 1e-10 {
            return Err(Error::RootBracket(format!(
                "characteristics through x = {x} are about to cross (dx/dy = {slope})"
            )));
        }
        if res.abs() > 1e-12 * (1.0 + x.abs()) {
            return Err(Error::RootBracket(format!(
                "characteristic residual {res} at x = {x}"
            )));
        }
        Ok(y)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.profile.u0(self.characteristic_foot(x)?))
    }

    /// ∂ₓ u^B(x, t).
    pub fn eval_dx(&self, x: f64) -> Result<f64> {
        let y = self.characteristic_foot(x)?;
        let du = self.profile.du0(y);
        Ok(du / (1.0 + 2.0 * du * self.t))
    }
}

/// u^B(x, t) by the method of characteristics.
pub fn burgers_eval(profile: &AdmissibleProfile, x: f64, t: f64) -> Result<f64> {
    BurgersState::new(profile, t)?.eval(x)
}

impl Lobe for BurgersState<'_> {
    fn value(&self, x: f64) -> f64 {
        self.eval(x).unwrap_or(f64::NAN)
    }

    fn x_max(&self) -> f64 {
        self.profile.x_max + 2.0 * self.profile.u_max * self.t
    }

    fn u_max(&self) -> f64 {
        self.profile.u_max
    }

    /// Level sets ride the characteristics: x_±(t) = x_± + 2E t.
    fn level_crossings(&self, level: f64) -> Result<TurningPoints> {
        let tp = self.profile.level_crossings(level)?;
        Ok(TurningPoints {
            x_minus: tp.x_minus + 2.0 * level * self.t,
            x_plus: tp.x_plus + 2.0 * level * self.t,
            ..tp
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sech2() -> AdmissibleProfile {
        build_profile(&ProfileSpec::sech2()).unwrap()
    }

    #[test]
    fn builtin_maxima() {
        let p = sech2();
        assert_eq!((p.u_max(), p.x_max()), (1.0, 0.0));
        let q = build_profile(&ProfileSpec::Sech2 {
            amplitude: 0.5,
            center: 1.0,
            width: 1.0,
        })
        .unwrap();
        assert_eq!((q.u_max(), q.x_max()), (0.5, 1.0));
        // ∫(x²+1) sech² = π²/6 + 2
        let exact = std::f64::consts::PI.powi(2) / 6.0 + 2.0;
        assert!((p.decay_certificate() - exact).abs() < 1e-9);
    }

    #[test]
    fn two_bumps_rejected() {
        let x: Vec<f64> = (0..201).map(|i| -10.0 + 0.1 * i as f64).collect();
        let u: Vec<f64> = x
            .iter()
            .map(|x| (-(x - 2.0f64).powi(2)).exp() + 0.8 * (-(x + 2.0f64).powi(2)).exp() + 1e-6)
            .collect();
        let err = build_profile(&ProfileSpec::Tabulated { x, u }).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("single lobe")), "{err}");
    }

    #[test]
    fn tabulated_lobe_accepted() {
        let x: Vec<f64> = (0..161).map(|i| -8.0 + 0.1 * i as f64).collect();
        let u: Vec<f64> = x.iter().map(|x| 1.0 / x.cosh().powi(2)).collect();
        let p = build_profile(&ProfileSpec::Tabulated { x, u }).unwrap();
        assert!((p.u0(0.55) - 1.0 / 0.55f64.cosh().powi(2)).abs() < 1e-4);
        let tc = catastrophe_time(&p);
        assert!((tc - 3.0 * 3f64.sqrt() / 8.0).abs() < 5e-3, "{tc}");
    }

    #[test]
    fn parse_named_profiles() {
        assert_eq!(ProfileSpec::parse("sech2").unwrap(), ProfileSpec::sech2());
        assert_eq!(
            ProfileSpec::parse("gaussian:2,1").unwrap(),
            ProfileSpec::Gaussian {
                amplitude: 2.0,
                center: 1.0,
                width: 1.0
            }
        );
        assert!(ProfileSpec::parse("cosine").is_err());
    }

    #[test]
    fn sech2_turning_points_closed_form() {
        let p = sech2();
        for level in [0.9, 0.5, 0.1, 1e-6] {
            let tp = p.level_crossings(level).unwrap();
            let exact = (1.0 / level.sqrt()).acosh();
            assert!((tp.x_plus - exact).abs() < 1e-10, "{level}");
            assert!((tp.x_minus + exact).abs() < 1e-10);
            assert!((p.u0(tp.x_plus) - level).abs() < 1e-12);
        }
        assert!(p.level_crossings(1.2).is_err());
        assert!(p.level_crossings(0.0).is_err());
        let tiny = p.level_crossings(1e-300).unwrap();
        assert!(tiny.truncated || tiny.x_plus > 300.0);
    }

    #[test]
    fn catastrophe_times() {
        let root3 = 3f64.sqrt();
        assert!((catastrophe_time(&sech2()) - 3.0 * root3 / 8.0).abs() < 1e-10);
        let half = build_profile(&ProfileSpec::Sech2 {
            amplitude: 0.5,
            center: 0.0,
            width: 1.0,
        })
        .unwrap();
        assert!((catastrophe_time(&half) - 3.0 * root3 / 4.0).abs() < 1e-10);
        let shifted = build_profile(&ProfileSpec::Sech2 {
            amplitude: 1.0,
            center: 5.0,
            width: 1.0,
        })
        .unwrap();
        assert!((catastrophe_time(&shifted) - 3.0 * root3 / 8.0).abs() < 1e-10);
    }

    #[test]
    fn burgers_identity_and_tail() {
        let p = sech2();
        assert_eq!(burgers_eval(&p, 0.7, 0.0).unwrap(), p.u0(0.7));
        assert!(burgers_eval(&p, 40.0, 0.5).unwrap() < 1e-30);
        assert!(burgers_eval(&p, 0.0, 0.7).is_err());
    }

    #[test]
    fn burgers_matches_forward_characteristic_sweep() {
        // Dense forward map y -> (y + 2u₀(y)t, u₀(y)) interpolated at x = 0.5.
        let p = sech2();
        let t = 0.3;
        let ys: Vec<f64> = (0..200_001).map(|i| -3.0 + 6.0 * i as f64 / 200_000.0).collect();
        let xs: Vec<f64> = ys.iter().map(|y| y + 2.0 * p.u0(*y) * t).collect();
        let k = xs.partition_point(|x| *x < 0.5);
        let s = (0.5 - xs[k - 1]) / (xs[k] - xs[k - 1]);
        let oracle = p.u0(ys[k - 1]) * (1.0 - s) + p.u0(ys[k]) * s;
        let v = burgers_eval(&p, 0.5, t).unwrap();
        assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
    }
}
