//! Weyl law, its density, tail integrals and the modified scattering data.
//!
//! On the quadratrix the Lambert argument -2δζe^{-2δ(ζ+u)} equals
//! -exp(-1 - q) with q = 2δ(u - E(ζ)) real, so every integrand here is a
//! function of q alone. q > 0 is the classically allowed region.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::profile::{Lobe, TurningPoints};
use crate::quad::{combine, integrate, integrate_sqrt_ends, integrate_to_infinity, Estimate, Tolerance};
use crate::specfun::{lambert_shift_pair, quadratrix, zeta_max, QuadratrixPoint};

/// Version tag written into scattering records.
pub const RECORD_VERSION: u32 = 1;

pub(crate) fn tight() -> Tolerance {
    Tolerance::new(1e-14, 1e-12)
}

/// Tolerance for integrals over [x₋, x₊]: u - E loses digits as E → u_max.
pub(crate) fn band_tolerance(level: f64, u_max: f64) -> Tolerance {
    let gap = (u_max - level).max(f64::MIN_POSITIVE);
    let rel = (256.0 * f64::EPSILON * u_max / gap).max(1e-12);
    Tolerance::new(1e-14, rel)
}

/// Which tail integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

/// (W₀ - W₋₁) at -exp(-1 - q) for q ≥ 0.
fn band_gap(q: f64) -> Result<f64> {
    if q <= 0.0 {
        return Ok(0.0);
    }
    let (v0, vm1) = lambert_shift_pair(q)?;
    Ok((v0 - vm1).re)
}

/// r = Re(1/(1+W₋₁) - 1/(1+W₀)); zero in the forbidden region.
pub(crate) fn r_integrand(q: f64) -> Result<f64> {
    if q <= 0.0 {
        return Ok(0.0);
    }
    let (v0, vm1) = lambert_shift_pair(q)?;
    Ok((1.0 / vm1 - 1.0 / v0).re)
}

/// κ + Im W₋₁/(2δ), the forbidden-region integrand of the tail integrals.
///
/// It vanishes linearly as u → 0 with slope -Im[W/(1+W)] at W = -2δζ; that
/// form is used for small u where the direct one is all rounding error.
pub(crate) fn tail_integrand(u: f64, p: &QuadratrixPoint) -> Result<f64> {
    let delta = p.delta;
    let q = 2.0 * delta * (u - p.level());
    if q >= 0.0 {
        return Ok(p.kappa);
    }
    if 2.0 * delta * u < 1e-9 {
        let w = -2.0 * delta * p.zeta;
        return Ok(-(w / (1.0 + w)).im * u);
    }
    let (_, vm1) = lambert_shift_pair(q)?;
    Ok(p.kappa + vm1.im / (2.0 * delta))
}

/// Runs a fallible integrand through the quadrature, keeping the first error.
pub(crate) fn guarded<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    run: impl FnOnce(&mut dyn FnMut(f64) -> f64) -> Estimate<f64>,
) -> Result<Estimate<f64>> {
    let mut failure = None;
    let mut g = |x: f64| match f(x) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let est = run(&mut g);
    match failure {
        Some(e) => Err(e),
        None => Ok(est),
    }
}

/// Imaginary coordinate of ζ_max.
pub fn kappa_max<L: Lobe + ?Sized>(lobe: &L, delta: f64) -> Result<f64> {
    Ok(zeta_max(lobe.u_max(), delta)?.im)
}

fn crossings<L: Lobe + ?Sized>(lobe: &L, level: f64) -> Result<TurningPoints> {
    lobe.level_crossings(level.min(lobe.u_max()))
}

/// R^Wyl as a function of the turning-point level E.
pub fn weyl_r_level<L: Lobe + ?Sized>(lobe: &L, level: f64, delta: f64) -> Result<f64> {
    if level >= lobe.u_max() {
        return Ok(0.0);
    }
    let q = |x: f64| 2.0 * delta * (lobe.value(x) - level);
    let est = if level <= 0.0 {
        let a = lobe.x_max();
        let tol = tight();
        guarded(
            |x| band_gap(q(x)),
            |g| {
                let r = integrate_to_infinity(&mut *g, a, 1.0, tol);
                let l = integrate_to_infinity(&mut *g, a, -1.0, tol);
                combine(r, Estimate { value: -l.value, ..l }, tol)
            },
        )?
    } else {
        let tp = crossings(lobe, level)?;
        guarded(
            |x| band_gap(q(x)),
            |g| integrate_sqrt_ends(g, tp.x_minus, tp.x_plus, band_tolerance(level, lobe.u_max())),
        )?
    };
    Ok(est.require("Weyl law")? / (4.0 * delta))
}

/// R^Wyl(ζ(κ)).
pub fn weyl_r_kappa<L: Lobe + ?Sized>(lobe: &L, kappa: f64, delta: f64) -> Result<f64> {
    let p = quadratrix(kappa, delta)?;
    weyl_r_level(lobe, p.level(), delta)
}

/// R^Wyl(ζ) for ζ on the upper quadratrix arc.
pub fn weyl_r<L: Lobe + ?Sized>(lobe: &L, zeta: num_complex::Complex64, delta: f64) -> Result<f64> {
    weyl_r_kappa(lobe, zeta.im, delta)
}

/// ∫ r dx over the allowed region at level E.
fn r_moment<L: Lobe + ?Sized>(lobe: &L, level: f64, delta: f64) -> Result<f64> {
    let tp = crossings(lobe, level)?;
    if tp.x_plus <= tp.x_minus {
        return Ok(0.0);
    }
    let q = |x: f64| 2.0 * delta * (lobe.value(x) - level);
    guarded(
        |x| r_integrand(q(x)),
        |g| integrate_sqrt_ends(g, tp.x_minus, tp.x_plus, band_tolerance(level, lobe.u_max())),
    )?
    .require("Weyl density")
}

/// Smallest κ at which the density is evaluated directly; below it the
/// vertex limit is taken.
pub const KAPPA_FLOOR: f64 = 1e-7;

/// Within this fraction of κ_max the density is extrapolated: u₀ - E
/// cancels there and the direct quadrature loses digits like eps/gap.
const NEAR_TOP: f64 = 2e-3;
const FIT_SPAN: f64 = 5e-2;
const FIT_POINTS: usize = 10;

fn direct_density<L: Lobe + ?Sized>(lobe: &L, kappa: f64, delta: f64, kmax: f64) -> Result<f64> {
    let k = kappa.max(KAPPA_FLOOR * kmax);
    let p = quadratrix(k, delta)?;
    let m = r_moment(lobe, p.level(), delta)?;
    Ok(-0.5 * p.level_slope() * m)
}

/// ρ^Wyl(κ) = -dR^Wyl/dκ = -(1/2)(dE/dκ) ∫ r dx ≥ 0.
///
/// The density is analytic through κ_max, where it takes its one-sided
/// limit; next to κ_max it comes from a Chebyshev fit on
/// [κ_max(1 - FIT_SPAN), κ_max(1 - NEAR_TOP)].
pub fn weyl_density<L: Lobe + ?Sized>(lobe: &L, kappa: f64, delta: f64) -> Result<f64> {
    let kmax = kappa_max(lobe, delta)?;
    if kappa < 0.0 || kappa > kmax * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "weyl_density: kappa = {kappa} outside [0, {kmax}]"
        )));
    }
    if kappa <= kmax * (1.0 - NEAR_TOP) {
        return direct_density(lobe, kappa, delta, kmax);
    }
    let (lo, hi) = (kmax * (1.0 - FIT_SPAN), kmax * (1.0 - NEAR_TOP));
    let nodes: Vec<f64> = (0..FIT_POINTS)
        .map(|j| {
            let c = (PI * (j as f64 + 0.5) / FIT_POINTS as f64).cos();
            0.5 * (lo + hi) + 0.5 * (hi - lo) * c
        })
        .collect();
    let values = nodes
        .iter()
        .map(|&k| direct_density(lobe, k, delta, kmax))
        .collect::<Result<Vec<f64>>>()?;
    let x = kappa.min(kmax);
    let mut total = 0.0;
    for (i, (xi, vi)) in nodes.iter().zip(&values).enumerate() {
        let mut l = 1.0;
        for (j, xj) in nodes.iter().enumerate() {
            if i != j {
                l *= (x - xj) / (xi - xj);
            }
        }
        total += l * vi;
    }
    Ok(total)
}

/// θ_±(ζ(κ)) with the orientation that makes θ₊ + θ₋ the log potential of ρ^Wyl:
/// θ₊ = κx₊ + ∫_{x₊}^{∞} f dx and θ₋ = -κx₋ + ∫_{-∞}^{x₋} f dx.
pub fn tail_theta_kappa<L: Lobe + ?Sized>(
    lobe: &L,
    kappa: f64,
    side: Side,
    delta: f64,
) -> Result<f64> {
    let p = quadratrix(kappa, delta)?;
    let level = p.level();
    if level <= 0.0 {
        return Ok(0.0);
    }
    let tp = crossings(lobe, level)?;
    let dir = match side {
        Side::Plus => 1.0,
        Side::Minus => -1.0,
    };
    let edge = if dir > 0.0 { tp.x_plus } else { tp.x_minus };
    let tol = tight();
    // Square-root behaviour next to the turning point, then the mapped tail.
    let near = 1.0;
    let head = guarded(
        |s| Ok(tail_integrand(lobe.value(edge + dir * s * s), &p)? * 2.0 * s),
        |g| integrate(g, 0.0, near, tol),
    )?;
    let tail = guarded(
        |x| tail_integrand(lobe.value(x), &p),
        |g| integrate_to_infinity(g, edge + dir * near * near, dir, tol),
    )?;
    let value = combine(head, Estimate { value: dir * tail.value, ..tail }, tol)
        .require("tail integral")?;
    Ok(dir * kappa * edge + value)
}

/// θ_±(ζ) for ζ on the upper quadratrix arc.
pub fn tail_theta<L: Lobe + ?Sized>(
    lobe: &L,
    zeta: num_complex::Complex64,
    side: Side,
    delta: f64,
) -> Result<f64> {
    tail_theta_kappa(lobe, zeta.im, side, delta)
}

/// Eigenvalues and log norming constants generated from a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringData {
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    pub eigen: Vec<QuadratrixPoint>,
    /// log c_n = 2θ₊(ζ_n)/ε_N.
    pub log_c: Vec<f64>,
}

impl ScatteringData {
    /// Data assembled from given κ_n and log c_n.
    pub fn from_parts(eps: f64, delta: f64, kappas: &[f64], log_c: &[f64]) -> Result<Self> {
        if kappas.len() != log_c.len() {
            return Err(Error::Validation(
                "scattering data: kappa and log_c lengths differ".into(),
            ));
        }
        if !(eps > 0.0) {
            return Err(Error::Validation(format!("scattering data: eps = {eps}")));
        }
        let eigen = kappas
            .iter()
            .map(|&k| {
                if k > 0.0 {
                    quadratrix(k, delta)
                } else {
                    Err(Error::Validation(format!(
                        "scattering data: kappa = {k} must be positive"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScatteringData {
            n: kappas.len(),
            eps,
            delta,
            eigen,
            log_c: log_c.to_vec(),
        })
    }

    pub fn kappas(&self) -> Vec<f64> {
        self.eigen.iter().map(|p| p.kappa).collect()
    }

    /// Reflection coefficient of the modified data: identically zero.
    pub fn reflection_coefficient(&self, _xi: f64) -> f64 {
        0.0
    }

    /// Plain-text record: header lines then one line per eigenvalue.
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "ilw-scattering-data {RECORD_VERSION}");
        let _ = writeln!(s, "N {}", self.n);
        let _ = writeln!(s, "delta {:e}", self.delta);
        let _ = writeln!(s, "eps_N {:e}", self.eps);
        let _ = writeln!(s, "n kappa re_zeta log_c");
        for (i, (p, c)) in self.eigen.iter().zip(&self.log_c).enumerate() {
            let _ = writeln!(s, "{} {:e} {:e} {:e}", i + 1, p.kappa, p.zeta.re, c);
        }
        s
    }

    pub fn from_record(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Validation(format!("scattering record: {m}"));
        let mut lines = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let mut field = |name: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad(format!("missing `{name}`")))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(name) {
                return Err(bad(format!("expected `{name}`, found `{line}`")));
            }
            parts
                .next()
                .map(str::to_string)
                .ok_or_else(|| bad(format!("`{name}` has no value")))
        };
        let version: u32 = field("ilw-scattering-data")?
            .parse()
            .map_err(|e| bad(format!("version: {e}")))?;
        if version != RECORD_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let parse = |s: String, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| bad(format!("{what}: {e}")))
        };
        let n: usize = field("N")?.parse().map_err(|e| bad(format!("N: {e}")))?;
        let delta = parse(field("delta")?, "delta")?;
        let eps = parse(field("eps_N")?, "eps_N")?;
        let _ = field("n")?;
        let mut kappas = Vec::with_capacity(n);
        let mut log_c = Vec::with_capacity(n);
        for line in lines {
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 4 {
                return Err(bad(format!("row `{line}` needs 4 columns")));
            }
            let k = parse(cols[1].into(), "kappa")?;
            let re = parse(cols[2].into(), "re_zeta")?;
            let p = quadratrix(k, delta)?;
            if (p.zeta.re - re).abs() > 1e-12 * (1.0 + re.abs()) {
                return Err(bad(format!("row `{line}`: zeta is off the quadratrix")));
            }
            kappas.push(k);
            log_c.push(parse(cols[3].into(), "log_c")?);
        }
        if kappas.len() != n {
            return Err(bad(format!("expected {n} rows, found {}", kappas.len())));
        }
        ScatteringData::from_parts(eps, delta, &kappas, &log_c)
    }
}

/// Solves R^Wyl(ζ(κ)) = target for κ ∈ (0, κ_max) by safeguarded Newton.
fn solve_kappa<L: Lobe + ?Sized>(
    lobe: &L,
    target: f64,
    delta: f64,
    kmax: f64,
    tol: f64,
) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = kmax;
    let r_lo = weyl_r_kappa(lobe, lo, delta)?;
    if !(r_lo > target && target > 0.0) {
        return Err(Error::RootBracket(format!(
            "Weyl law target {target} outside (0, R(1/2δ) = {r_lo})"
        )));
    }
    let mut k = 0.5 * (lo + hi);
    for _ in 0..200 {
        let g = weyl_r_kappa(lobe, k, delta)? - target;
        if g.abs() <= tol {
            return Ok(k);
        }
        if g > 0.0 {
            lo = k;
        } else {
            hi = k;
        }
        let rho = weyl_density(lobe, k, delta)?;
        let newton = k + g / rho;
        k = if rho > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 * kmax {
            break;
        }
    }
    let g = weyl_r_kappa(lobe, k, delta)? - target;
    if g.abs() <= tol {
        Ok(k)
    } else {
        Err(Error::RootBracket(format!(
            "Weyl law solve stalled at kappa = {k} with residual {g}"
        )))
    }
}

/// Modified scattering data: ε_N = R(1/2δ)/(πN), R(ζ_n) = π(n - 1/2)ε_N,
/// log c_n = 2θ₊(ζ_n)/ε_N.
pub fn modified_data<L: Lobe + ?Sized>(lobe: &L, n: usize, delta: f64) -> Result<ScatteringData> {
    if n == 0 {
        return Err(Error::Domain("modified_data: N must be at least 1".into()));
    }
    let r0 = weyl_r_level(lobe, 0.0, delta)?;
    let eps = r0 / (PI * n as f64);
    let kmax = kappa_max(lobe, delta)?;
    let tol = 1e-11 * r0;
    let solved: Vec<(f64, f64)> = (1..=n)
        .into_par_iter()
        .map(|j| {
            let target = PI * (j as f64 - 0.5) * eps;
            let k = solve_kappa(lobe, target, delta, kmax, tol)?;
            let theta = tail_theta_kappa(lobe, k, Side::Plus, delta)?;
            Ok((k, 2.0 * theta / eps))
        })
        .collect::<Result<Vec<_>>>()?;
    let kappas: Vec<f64> = solved.iter().map(|s| s.0).collect();
    let log_c: Vec<f64> = solved.iter().map(|s| s.1).collect();
    ScatteringData::from_parts(eps, delta, &kappas, &log_c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{build_profile, ProfileSpec};

    fn sech2() -> crate::profile::AdmissibleProfile {
        build_profile(&ProfileSpec::sech2()).unwrap()
    }

    #[test]
    fn weyl_law_endpoints_and_monotonicity() {
        let p = sech2();
        let kmax = kappa_max(&p, 0.5).unwrap();
        assert!(weyl_r_kappa(&p, kmax, 0.5).unwrap() <= 1e-14);
        let r0 = weyl_r_level(&p, 0.0, 0.5).unwrap();
        assert!(r0 > 0.0 && r0.is_finite());
        let a = weyl_r_kappa(&p, 0.5 * kmax, 0.5).unwrap();
        let b = weyl_r_kappa(&p, 0.75 * kmax, 0.5).unwrap();
        assert!(r0 > a && a > b && b > 0.0);
    }

    #[test]
    fn density_is_minus_derivative() {
        let p = sech2();
        let kmax = kappa_max(&p, 0.5).unwrap();
        let h = 1e-4;
        for frac in [0.2, 0.5, 0.8] {
            let k = frac * kmax;
            let fd = -(weyl_r_kappa(&p, k + h, 0.5).unwrap() - weyl_r_kappa(&p, k - h, 0.5).unwrap())
                / (2.0 * h);
            let rho = weyl_density(&p, k, 0.5).unwrap();
            assert!((fd - rho).abs() < 1e-6 * (1.0 + rho), "{frac}: {fd} vs {rho}");
        }
        assert!(weyl_density(&p, 0.0, 0.5).unwrap() > 0.0);
    }

    #[test]
    fn density_matches_high_precision_quadrature() {
        // mpmath, 30 digits, tanh-sinh quadrature of r over [x₋, x₊]
        let p = sech2();
        let kmax = kappa_max(&p, 0.5).unwrap();
        let oracle = [
            (0.5, 3.402_924_886_506_094_7),
            (0.9, 3.663_197_810_892_547_8),
            (0.99, 3.734_625_219_164_385),
            (0.9995, 3.742_546_676_674_697_7),
            (0.999_999, 3.742_964_919_365_661_6),
            (1.0, 3.742_965_757_715_175_7),
        ];
        for (f, v) in oracle {
            let r = weyl_density(&p, kmax * f, 0.5).unwrap();
            assert!((r - v).abs() < 1e-10 * v, "{f}: {r} vs {v}");
        }
    }

    #[test]
    fn symmetric_profile_has_equal_tails() {
        let p = sech2();
        let kmax = kappa_max(&p, 0.5).unwrap();
        for frac in [0.1, 0.4, 0.9] {
            let tp = tail_theta_kappa(&p, frac * kmax, Side::Plus, 0.5).unwrap();
            let tm = tail_theta_kappa(&p, frac * kmax, Side::Minus, 0.5).unwrap();
            assert!((tp - tm).abs() < 1e-10, "{tp} {tm}");
        }
    }

    #[test]
    fn modified_data_n1_and_n8() {
        let p = sech2();
        let d1 = modified_data(&p, 1, 0.5).unwrap();
        let r0 = weyl_r_level(&p, 0.0, 0.5).unwrap();
        let r1 = weyl_r_kappa(&p, d1.eigen[0].kappa, 0.5).unwrap();
        assert!((r1 - 0.5 * r0).abs() < 1e-10 * r0);
        let d8 = modified_data(&p, 8, 0.5).unwrap();
        let kmax = kappa_max(&p, 0.5).unwrap();
        let k = d8.kappas();
        assert!(k.windows(2).all(|w| w[0] > w[1]));
        assert!(k.iter().all(|&k| k > 0.0 && k < kmax));
        assert!((d8.eps - r0 / (8.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn record_round_trip() {
        let d = ScatteringData::from_parts(0.1, 0.5, &[1.2, 0.7], &[3.5, -2.25]).unwrap();
        let back = ScatteringData::from_record(&d.to_record()).unwrap();
        assert_eq!(d, back);
        let commented = format!("# config_hash: 00\n{}", d.to_record());
        assert_eq!(ScatteringData::from_record(&commented).unwrap(), d);
        assert_eq!(d.reflection_coefficient(0.3), 0.0);
        assert!(ScatteringData::from_record("ilw-scattering-data 9\n").is_err());
    }
}
