//! Multi-branch Lambert W, the quadratrix curve and the WKB building blocks.
//!
//! Values on the negative real axis are taken continuous from above the cut,
//! i.e. `-x + 0i` is treated as `-x + i0⁺` even if the imaginary part carries
//! a negative zero.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};

use crate::error::{domain, Error, Result};

/// 1/e.
pub const INV_E: f64 = 0.367_879_441_171_442_33;

const MAX_HALLEY: usize = 50;

/// A point on the upper quadratrix arc together with its parameter derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratrixPoint {
    pub kappa: f64,
    pub zeta: Complex64,
    pub zeta_prime: Complex64,
    pub delta: f64,
}

impl QuadratrixPoint {
    /// The level E(ζ) at which the profile has its turning points.
    pub fn level(&self) -> f64 {
        quadratrix_level(self.kappa, self.delta)
    }

    /// dE/dκ along the curve; real and nonnegative on the upper arc.
    pub fn level_slope(&self) -> f64 {
        quadratrix_level_slope(self.kappa, self.delta)
    }
}

fn above_cut(z: Complex64) -> Complex64 {
    if z.im == 0.0 {
        Complex64::new(z.re, 0.0)
    } else {
        z
    }
}

/// Series for W around the branch point in p = sqrt(2(ez + 1)).
fn branch_point_series(p: Complex64) -> Complex64 {
    const C: [f64; 8] = [
        -1.0,
        1.0,
        -1.0 / 3.0,
        11.0 / 72.0,
        -43.0 / 540.0,
        769.0 / 17280.0,
        -221.0 / 8505.0,
        680_863.0 / 43_545_600.0,
    ];
    let mut acc = Complex64::new(0.0, 0.0);
    for c in C.iter().rev() {
        acc = acc * p + c;
    }
    acc
}

fn log_asymptotic_guess(branch: i32, z: Complex64) -> Complex64 {
    let l1 = z.ln() + Complex64::new(0.0, 2.0 * PI * branch as f64);
    let l2 = l1.ln();
    l1 - l2 + l2 / l1
}

/// Candidate starting points for Halley, most reliable first.
fn initial_guesses(branch: i32, z: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(3);
    let shifted = z + INV_E;
    let p = (2.0 * E * shifted).sqrt();
    let near_bp = shifted.norm() < 0.3;
    let bp_side = match branch {
        0 => Some(p),
        -1 if z.im >= 0.0 => Some(-p),
        1 if z.im < 0.0 => Some(-p),
        _ => None,
    };
    if let (true, Some(p)) = (near_bp, bp_side) {
        out.push(branch_point_series(p));
    }
    if branch == -1 && z.im == 0.0 && z.re < 0.0 && z.re > -INV_E {
        let l1 = (-z.re).ln();
        out.push(Complex64::new(l1 - (-l1).ln(), 0.0));
    }
    if branch == 0 {
        if z.norm() < 0.3 {
            out.push(z * (1.0 - z * (1.0 - z * (1.5 - z * (8.0 / 3.0)))));
        }
        if z.norm() < 3.0 && (1.0 + z).norm() > 0.4 {
            let l = (1.0 + z).ln();
            out.push(l * (1.0 - (1.0 + l).ln() / (2.0 + l)));
        }
    }
    out.push(log_asymptotic_guess(branch, z));
    if let (false, Some(p)) = (near_bp, bp_side) {
        if shifted.norm() < 1.0 {
            out.push(branch_point_series(p));
        }
    }
    out
}

fn halley(z: Complex64, mut w: Complex64) -> Option<Complex64> {
    for _ in 0..MAX_HALLEY {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom.norm() == 0.0 || !(denom.re.is_finite() && denom.im.is_finite()) {
            return None;
        }
        let step = f / denom;
        w -= step;
        if step.norm() <= 4.0 * f64::EPSILON * w.norm().max(1e-300) {
            return (w.re.is_finite() && w.im.is_finite()).then_some(above_cut(w));
        }
    }
    None
}

/// ln(1 + x) without cancellation for small x.
fn ln_1p(x: Complex64) -> Complex64 {
    let u = 1.0 + x;
    let d = u - 1.0;
    if d.norm() == 0.0 {
        x
    } else {
        u.ln() * (x / d)
    }
}

/// Branch index recovered from w + ln w = ln z + 2πik.
fn unwound_branch(w: Complex64, z: Complex64) -> i64 {
    let d = (w + w.ln() - z.ln()) / Complex64::new(0.0, 2.0 * PI);
    d.re.round() as i64
}

fn expected_unwinding(branch: i32, z: Complex64) -> i64 {
    if branch == -1 && z.im == 0.0 && z.re < 0.0 && z.re >= -INV_E {
        0
    } else {
        branch as i64
    }
}

/// Lambert W on branch `branch`, any integer.
pub fn lambert_w(branch: i32, z: Complex64) -> Result<Complex64> {
    let z = above_cut(z);
    if !(z.re.is_finite() && z.im.is_finite()) {
        return domain("lambert_w argument is not finite");
    }
    if z.re == 0.0 && z.im == 0.0 {
        return if branch == 0 {
            Ok(Complex64::new(0.0, 0.0))
        } else {
            domain(format!("W_{branch}(0) is a logarithmic singularity"))
        };
    }
    if z.im == 0.0 && z.re == -INV_E && (branch == 0 || branch == -1) {
        return Ok(Complex64::new(-1.0, 0.0));
    }
    let shifted = z + INV_E;
    if shifted.norm() < 0.05 {
        let p = (2.0 * E * shifted).sqrt();
        let side = match branch {
            0 => Some(p),
            -1 if z.im >= 0.0 => Some(-p),
            1 if z.im < 0.0 => Some(-p),
            _ => None,
        };
        if let Some(p) = side {
            // v + ln(1 - v) = -q with q = -ln(-e z)
            let q = -ln_1p(-E * shifted);
            let v = polish_shift(branch_point_series(p) + 1.0, q);
            return Ok(above_cut(v - 1.0));
        }
    }
    let expected = expected_unwinding(branch, z);
    let mut landed = None;
    for guess in initial_guesses(branch, z) {
        let Some(w) = halley(z, guess) else { continue };
        if w.re == 0.0 && w.im == 0.0 {
            return Ok(w);
        }
        let k = unwound_branch(w, z);
        if k == expected {
            return Ok(w);
        }
        landed = Some(k);
    }
    Err(Error::NonConvergence(match landed {
        Some(k) => format!("W_{branch}({z}) iteration landed on branch {k}"),
        None => format!("Halley iteration for W_{branch}({z}) did not settle"),
    }))
}

/// -Σ_{j≥2} v^j / j, i.e. v + ln(1 - v), accurate for small v.
fn v_plus_log1m(v: Complex64) -> Complex64 {
    if v.norm() < 0.1 {
        let mut term = v * v;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 2..40 {
            acc -= term / j as f64;
            term *= v;
            if term.norm() < 1e-18 * acc.norm() {
                break;
            }
        }
        acc
    } else {
        v + (1.0 - v).ln()
    }
}

fn polish_shift(mut v: Complex64, q: impl Into<Complex64>) -> Complex64 {
    let q: Complex64 = q.into();
    for _ in 0..MAX_HALLEY {
        let phi = v_plus_log1m(v) + q;
        let dphi = -v / (1.0 - v);
        let step = phi / dphi;
        v -= step;
        if step.norm() <= 2.0 * f64::EPSILON * v.norm() {
            break;
        }
    }
    v
}

/// Real root y of y - e^y + 1 + q = 0 (so w = -e^y solves w e^w = -e^{-1-q}).
fn real_log_root(q: f64, upper: bool) -> f64 {
    let mut y = if upper {
        let l = (1.0 + q).ln();
        (1.0 + q + l).ln()
    } else {
        -1.0 - q
    };
    for _ in 0..MAX_HALLEY {
        let ey = y.exp();
        let f = y - ey + 1.0 + q;
        let step = f / (1.0 - ey);
        let next = y - step;
        // keep the iterate on its side of the fold at y = 0
        y = if upper { next.max(0.5 * y) } else { next.min(0.5 * y) };
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + y.abs()) {
            break;
        }
    }
    y
}

/// Shifted pair (1 + W₀, 1 + W₋₁) at -exp(-1 - q), continuous from above the cut.
///
/// The shifted values are what the Weyl-law integrands need; near the
/// branch point they are of size sqrt(2|q|) and are computed without the
/// cancellation in 1 + W.
pub fn lambert_shift_pair(q: f64) -> Result<(Complex64, Complex64)> {
    if !q.is_finite() {
        return domain("lambert_shift_pair: non-finite shift");
    }
    if q == 0.0 {
        let z = Complex64::new(0.0, 0.0);
        return Ok((z, z));
    }
    let p = {
        let s = -2.0 * (-q).exp_m1();
        if s >= 0.0 {
            Complex64::new(s.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-s).sqrt())
        }
    };
    let pair = |v0: Complex64, vm1: Complex64| {
        if q > 0.0 {
            (Complex64::new(v0.re, 0.0), Complex64::new(vm1.re, 0.0))
        } else {
            (v0, v0.conj())
        }
    };
    if q.abs() < 1e-12 {
        let series = |p: Complex64| p * (1.0 - p * (1.0 / 3.0 - p * (11.0 / 72.0)));
        let (a, b) = pair(series(p), series(-p));
        return Ok((a, b));
    }
    if q.abs() < 0.3 {
        let v0 = polish_shift(branch_point_series(p) + 1.0, q);
        let vm1 = if q > 0.0 {
            polish_shift(branch_point_series(-p) + 1.0, q)
        } else {
            v0.conj()
        };
        return Ok(pair(v0, vm1));
    }
    if q > 0.0 {
        let v0 = -(real_log_root(q, false).exp_m1());
        let vm1 = 1.0 - real_log_root(q, true).exp();
        return Ok((Complex64::new(v0, 0.0), Complex64::new(vm1, 0.0)));
    }
    if -1.0 - q > 700.0 {
        return domain(format!("lambert_shift_pair: shift {q} overflows"));
    }
    let w0 = lambert_w(0, Complex64::new(-(-1.0 - q).exp(), 0.0))?;
    Ok(pair(w0 + 1.0, w0 + 1.0))
}

/// The pair (W₀, W₋₁) evaluated at -exp(-1 - q), continuous from above the cut.
///
/// For q ≥ 0 both values are real; for q < 0 they are complex conjugates with
/// W₀ in the upper half-plane.
pub fn lambert_pair_neg_exp(q: f64) -> Result<(Complex64, Complex64)> {
    let (v0, vm1) = lambert_shift_pair(q)?;
    Ok((v0 - 1.0, vm1 - 1.0))
}

/// Point on the δ-scaled quadratrix, ζ(κ) = κ cot(2δκ) + iκ.
pub fn quadratrix(kappa: f64, delta: f64) -> Result<QuadratrixPoint> {
    if !(delta > 0.0) || !delta.is_finite() {
        return domain("quadratrix: delta must be positive");
    }
    if !(kappa.abs() < PI / (2.0 * delta)) {
        return domain(format!(
            "quadratrix: |kappa| = {} must be below pi/(2 delta) = {}",
            kappa.abs(),
            PI / (2.0 * delta)
        ));
    }
    let a = 2.0 * delta * kappa;
    let (acot, dacot) = if a.abs() < 1e-4 {
        let a2 = a * a;
        (
            1.0 - a2 / 3.0 - a2 * a2 / 45.0,
            -2.0 * a / 3.0 - 4.0 * a * a2 / 45.0,
        )
    } else {
        let (s, c) = a.sin_cos();
        (a * c / s, c / s - a / (s * s))
    };
    Ok(QuadratrixPoint {
        kappa,
        zeta: Complex64::new(acot / (2.0 * delta), kappa),
        zeta_prime: Complex64::new(dacot, 1.0),
        delta,
    })
}

/// E(ζ) = -ζ + (1 + log(2δζ))/(2δ) as a complex number.
pub fn level_e_complex(zeta: Complex64, delta: f64) -> Complex64 {
    -zeta + (1.0 + (2.0 * delta * zeta).ln()) / (2.0 * delta)
}

/// dE/dζ = -1 + 1/(2δζ).
pub fn level_e_prime(zeta: Complex64, delta: f64) -> Complex64 {
    -1.0 + 1.0 / (2.0 * delta * zeta)
}

/// E(ζ(κ)) on the curve, free of the cancellation near the vertex.
///
/// With a = 2δκ, 2δE = 1 - a cot a + ln(a / sin a).
pub fn quadratrix_level(kappa: f64, delta: f64) -> f64 {
    let a = 2.0 * delta * kappa;
    let f = if a.abs() < 0.2 {
        let a2 = a * a;
        a2 * (1.0 / 2.0
            + a2 * (1.0 / 36.0
                + a2 * (1.0 / 405.0
                    + a2 * (1.0 / 4200.0 + a2 * (1.0 / 42525.0 + a2 * (691.0 / 294_698_250.0))))))
    } else {
        1.0 - a / a.tan() + (a / a.sin()).ln()
    };
    f / (2.0 * delta)
}

/// dE/dκ along the curve.
pub fn quadratrix_level_slope(kappa: f64, delta: f64) -> f64 {
    let a = 2.0 * delta * kappa;
    if a.abs() < 0.2 {
        let a2 = a * a;
        a * (1.0
            + a2 * (1.0 / 9.0
                + a2 * (2.0 / 135.0
                    + a2 * (1.0 / 525.0 + a2 * (2.0 / 8505.0 + a2 * (1382.0 / 49_116_375.0))))))
    } else {
        let s = a.sin();
        1.0 / a - 2.0 / a.tan() + a / (s * s)
    }
}

/// Real turning-point level E(ζ); errors if ζ is not on the quadratrix.
pub fn level_e(zeta: Complex64, delta: f64) -> Result<f64> {
    if zeta.norm() == 0.0 {
        return domain("level_e: zeta = 0");
    }
    let e = level_e_complex(zeta, delta);
    if e.im.abs() > 1e-12 * (1.0 + e.norm()) {
        return domain(format!(
            "level_e: imaginary residual {} indicates zeta is off the quadratrix",
            e.im
        ));
    }
    Ok(e.re)
}

/// Upper band edge β(y) = -(1/2δ) W₋₁(-e^{y-1}) for y ≥ 0.
pub fn band_edge(y: f64, delta: f64) -> Result<Complex64> {
    if y < 0.0 {
        return domain("band_edge: y must be nonnegative");
    }
    let (_, wm1) = lambert_pair_neg_exp(-y)?;
    Ok(-wm1 / (2.0 * delta))
}

/// ζ_max for a profile of height `u_max`.
pub fn zeta_max(u_max: f64, delta: f64) -> Result<Complex64> {
    band_edge(2.0 * delta * u_max, delta)
}

/// G(η; ζ) = -η + ζ e^{-2δ(ζ - η)}.
pub fn g_forward(eta: Complex64, zeta: Complex64, delta: f64) -> Complex64 {
    -eta + zeta * (-2.0 * delta * (zeta - eta)).exp()
}

/// Argument -2δζ e^{-2δ(ζ+U)} of the Lambert W in the WKB phase.
pub fn wkb_argument(u: Complex64, zeta: Complex64, delta: f64) -> Complex64 {
    -2.0 * delta * zeta * (-2.0 * delta * (zeta + u)).exp()
}

/// Branch `n` of the inverse of G at level U.
pub fn g_inverse(branch: i32, u: f64, zeta: Complex64, delta: f64) -> Result<Complex64> {
    if zeta.norm() == 0.0 {
        return domain("g_inverse: zeta = 0");
    }
    let w = lambert_w(branch, wkb_argument(Complex64::new(u, 0.0), zeta, delta))?;
    Ok(-u - w / (2.0 * delta))
}

fn amplitude_at(branch: i32, u: Complex64, zeta: Complex64, delta: f64) -> Result<Complex64> {
    let z = wkb_argument(u, zeta, delta);
    let touches_branch_point = matches!(branch, -1..=1) && (z + INV_E).norm() <= 1e-13;
    if touches_branch_point {
        return Err(Error::Singularity(format!(
            "amplitude on branch {branch}: turning point, 1 + W vanishes"
        )));
    }
    let w = lambert_w(branch, z)?;
    let denom = 1.0 + w;
    if denom.norm() <= 1e-13 {
        return Err(Error::Singularity(format!(
            "amplitude on branch {branch}: 1 + W vanishes"
        )));
    }
    Ok(-w / denom)
}

/// WKB amplitude A_n = (-W/(1+W))^{1/2}.
///
/// Where the radicand sits on the negative real axis the value is taken from
/// the side U + i0⁺.
pub fn amplitude(branch: i32, u: f64, zeta: Complex64, delta: f64) -> Result<Complex64> {
    if zeta.norm() == 0.0 {
        return domain("amplitude: zeta = 0");
    }
    let mut a = amplitude_at(branch, Complex64::new(u, 0.0), zeta, delta)?;
    if a.re < 0.0 && a.im.abs() <= 1e-6 * a.norm() {
        a = amplitude_at(branch, Complex64::new(u, 1e-9), zeta, delta)?;
    }
    Ok(a.sqrt())
}
