//! Continuum energy functionals on the quadratrix, the explicit one-band
//! minimizer and checks of its variational conditions.
//!
//! Densities live on κ ∈ [0, κ_max] and are sampled panel by panel. Each
//! panel [a, b] is parametrised by η = a + (b - a) sin²(πσ/2), σ ∈ [0, 1],
//! with Gauss-Legendre nodes in σ. Square-root behaviour at a panel end is
//! smooth in σ, so panels are broken at the band edge.
//!
//! The minimizer is computed in the characteristic coordinate ξ of the
//! Burgers flow: x' = ξ + 2u₀(ξ)t, so the turning points in ξ are those of
//! u₀ and dx' = (1 + 2t u₀'(ξ)) dξ.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::profile::{AdmissibleProfile, BurgersState, Lobe};
use crate::quad::{combine, gauss_legendre, integrate, integrate_sqrt_ends, integrate_to_infinity, Estimate, Tolerance};
use crate::scattering::{
    band_tolerance, guarded, kappa_max, r_integrand, tail_integrand, tail_theta_kappa, tight, weyl_density,
    Side, KAPPA_FLOOR,
};
use crate::specfun::{band_edge, lambert_shift_pair, quadratrix, quadratrix_level, quadratrix_level_slope};

/// Nodes per panel used by default.
pub const DEFAULT_NODES: usize = 256;

/// Check points used by [`verify_variational`] by default.
pub const DEFAULT_CHECK_POINTS: usize = 64;

fn potential_tolerance() -> Tolerance {
    Tolerance::new(1e-14, 1e-12)
}

/// ζ(κ) = κ cot(2δκ) + iκ.
fn curve(kappa: f64, delta: f64) -> Complex64 {
    let a = 2.0 * delta * kappa;
    let acot = if a.abs() < 1e-4 {
        1.0 - a * a / 3.0
    } else {
        a / a.tan()
    };
    Complex64::new(acot / (2.0 * delta), kappa)
}

/// Im[(ζ(κ) - 1/2δ)²].
pub fn quadrupole_weight(kappa: f64, delta: f64) -> f64 {
    2.0 * (curve(kappa, delta).re - 0.5 / delta) * kappa
}

fn panel_map(a: f64, b: f64, s: f64) -> (f64, f64) {
    let h = 0.5 * PI * s;
    let sn = h.sin();
    (a + (b - a) * sn * sn, (b - a) * 0.5 * PI * (PI * s).sin())
}

fn panel_inverse(a: f64, b: f64, eta: f64) -> f64 {
    let r = ((eta - a) / (b - a)).clamp(0.0, 1.0);
    2.0 / PI * r.sqrt().asin()
}

/// A density sampled on panelled Gauss-Legendre nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledDensity {
    pub kappa_nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub delta: f64,
    panels: Vec<(f64, f64)>,
    per_panel: usize,
    sigma: Vec<f64>,
    bary: Vec<f64>,
}

impl SampledDensity {
    /// Samples `f` on the panels cut by `breaks` (ascending, first 0, last κ_max).
    pub fn from_fn<F>(delta: f64, breaks: &[f64], per_panel: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        if per_panel < 2 {
            return Err(Error::Domain("sampled density needs at least two nodes per panel".into()));
        }
        if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::Domain("panel breaks must be ascending".into()));
        }
        let span = breaks[breaks.len() - 1] - breaks[0];
        let panels: Vec<(f64, f64)> = breaks
            .windows(2)
            .filter(|w| w[1] - w[0] > 1e-14 * span)
            .map(|w| (w[0], w[1]))
            .collect();
        if panels.is_empty() {
            return Err(Error::Domain("sampled density: empty support".into()));
        }
        let (x, w) = gauss_legendre(per_panel);
        let sigma: Vec<f64> = x.iter().map(|x| 0.5 * (x + 1.0)).collect();
        let bary: Vec<f64> = x
            .iter()
            .zip(&w)
            .enumerate()
            .map(|(j, (x, w))| {
                let s = ((1.0 - x * x) * w).sqrt();
                if j % 2 == 0 {
                    s
                } else {
                    -s
                }
            })
            .collect();
        let mut kappa_nodes = Vec::with_capacity(panels.len() * per_panel);
        let mut weights = Vec::with_capacity(kappa_nodes.capacity());
        for &(a, b) in &panels {
            for (s, w) in sigma.iter().zip(&w) {
                let (eta, jac) = panel_map(a, b, *s);
                kappa_nodes.push(eta);
                weights.push(0.5 * w * jac);
            }
        }
        let values = kappa_nodes
            .par_iter()
            .map(|&k| f(k))
            .collect::<Result<Vec<f64>>>()?;
        Ok(SampledDensity {
            kappa_nodes,
            values,
            weights,
            delta,
            panels,
            per_panel,
            sigma,
            bary,
        })
    }

    /// Same nodes, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::Domain("with_values: length mismatch".into()));
        }
        Ok(SampledDensity {
            values,
            ..self.clone()
        })
    }

    /// ρ₁ - ρ₂ on a shared grid; a signed measure, not an element of the admissible set.
    pub fn difference(&self, other: &SampledDensity) -> Result<Self> {
        if self.kappa_nodes != other.kappa_nodes {
            return Err(Error::Domain("difference: densities sampled on different grids".into()));
        }
        self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect())
    }

    pub fn panels(&self) -> &[(f64, f64)] {
        &self.panels
    }

    /// ∫ f(κ) ρ(κ) dκ by the node rule.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.kappa_nodes
            .iter()
            .zip(&self.values)
            .zip(&self.weights)
            .map(|((k, v), w)| w * v * f(*k))
            .sum()
    }

    fn panel_values(&self, p: usize) -> &[f64] {
        &self.values[p * self.per_panel..(p + 1) * self.per_panel]
    }

    fn interp(&self, p: usize, s: f64) -> f64 {
        let vals = self.panel_values(p);
        let (mut num, mut den) = (0.0, 0.0);
        for ((sj, bj), vj) in self.sigma.iter().zip(&self.bary).zip(vals) {
            let d = s - sj;
            if d == 0.0 {
                return *vj;
            }
            let c = bj / d;
            num += c * vj;
            den += c;
        }
        num / den
    }

    /// Interpolated value at κ; zero outside the sampled range.
    pub fn eval(&self, kappa: f64) -> f64 {
        for (p, &(a, b)) in self.panels.iter().enumerate() {
            if kappa >= a && kappa <= b {
                return self.interp(p, panel_inverse(a, b, kappa));
            }
        }
        0.0
    }

    /// ∫_κ^{κ_max} ρ, integrating the interpolant.
    pub fn tail_mass(&self, kappa: f64) -> f64 {
        let tol = potential_tolerance();
        let mut total = 0.0;
        for (p, &(a, b)) in self.panels.iter().enumerate() {
            if b <= kappa {
                continue;
            }
            let s0 = if kappa > a { panel_inverse(a, b, kappa) } else { 0.0 };
            let est = integrate(
                |s| {
                    let (_, jac) = panel_map(a, b, s);
                    self.interp(p, s) * jac
                },
                s0,
                1.0,
                tol,
            );
            total += est.value;
        }
        total
    }

    /// Checks 0 ≤ ρ ≤ ρ^Wyl (1 + 1e-10) at every node.
    pub fn is_admissible(&self, profile: &AdmissibleProfile) -> Result<bool> {
        for (k, v) in self.kappa_nodes.iter().zip(&self.values) {
            let w = weyl_density(profile, *k, self.delta)?;
            if *v < 0.0 || *v > w * (1.0 + 1e-10) + 1e-300 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// ρ^Wyl on a single panel [0, κ_max].
pub fn weyl_samples(profile: &AdmissibleProfile, delta: f64, nodes: usize) -> Result<SampledDensity> {
    let kmax = kappa_max(profile, delta)?;
    SampledDensity::from_fn(delta, &[0.0, kmax], nodes, |k| weyl_density(profile, k, delta))
}

/// 𝓛[ρ](λ) = (1/π) ∫ log|(λ - conj ζ(η))/(λ - ζ(η))| ρ(η) dη.
///
/// The logarithmic singularity at η = |Im λ| is put at a split point of the
/// adaptive rule applied to the interpolated density.
pub fn potential_l(rho: &SampledDensity, lambda: Complex64) -> f64 {
    if lambda.im == 0.0 {
        return 0.0;
    }
    let delta = rho.delta;
    let target = lambda.im.abs();
    let tol = potential_tolerance();
    let mut total = 0.0;
    for (p, &(a, b)) in rho.panels.iter().enumerate() {
        if rho.panel_values(p).iter().all(|v| *v == 0.0) {
            continue;
        }
        let f = |s: f64| {
            let (eta, jac) = panel_map(a, b, s);
            let z = curve(eta, delta);
            let near = (lambda - z).norm_sqr();
            if near == 0.0 {
                return 0.0;
            }
            0.5 * ((lambda - z.conj()).norm_sqr() / near).ln() * rho.interp(p, s) * jac
        };
        let est = if target > a && target < b {
            let cut = panel_inverse(a, b, target);
            combine(integrate(f, 0.0, cut, tol), integrate(f, cut, 1.0, tol), tol)
        } else {
            integrate(f, 0.0, 1.0, tol)
        };
        total += est.value;
    }
    total / PI
}

/// 𝓟[ρ] = ∫ κ ρ dκ.
pub fn functional_p(rho: &SampledDensity) -> f64 {
    rho.integrate(|k| k)
}

/// 𝓠[ρ] = ∫ Im[(ζ - 1/2δ)²] ρ dκ.
pub fn functional_q(rho: &SampledDensity) -> f64 {
    let delta = rho.delta;
    rho.integrate(|k| quadrupole_weight(k, delta))
}

/// External potential V(ζ(κ); x, t) = xκ + t Im[(ζ - 1/2δ)²] - θ₊(ζ).
pub fn external_potential(profile: &AdmissibleProfile, kappa: f64, x: f64, t: f64, delta: f64) -> Result<f64> {
    let theta = tail_theta_kappa(profile, kappa, Side::Plus, delta)?;
    Ok(x * kappa + t * quadrupole_weight(kappa, delta) - theta)
}

/// 𝓛[ρ](ζ(κ_i)) at every node of `at`.
pub fn potential_at_nodes(rho: &SampledDensity, at: &SampledDensity) -> Vec<f64> {
    let delta = rho.delta;
    at.kappa_nodes
        .par_iter()
        .map(|&k| potential_l(rho, curve(k, delta)))
        .collect()
}

/// 𝓔[ρ] = ∫ (Vρ + ½ 𝓛[ρ]ρ) dκ.
pub fn functional_e(profile: &AdmissibleProfile, rho: &SampledDensity, x: f64, t: f64) -> Result<f64> {
    let delta = rho.delta;
    let v = rho
        .kappa_nodes
        .par_iter()
        .map(|&k| external_potential(profile, k, x, t, delta))
        .collect::<Result<Vec<f64>>>()?;
    let l = potential_at_nodes(rho, rho);
    Ok(rho
        .values
        .iter()
        .zip(&rho.weights)
        .zip(v.iter().zip(&l))
        .map(|((r, w), (v, l))| w * r * (v + 0.5 * l))
        .sum())
}

/// ∫ 𝓛[ρ](ζ(κ)) σ(κ) dκ for two densities on the same grid.
pub fn energy_pairing(rho: &SampledDensity, sigma: &SampledDensity) -> Result<f64> {
    if rho.kappa_nodes != sigma.kappa_nodes {
        return Err(Error::Domain("energy_pairing: densities sampled on different grids".into()));
    }
    let l = potential_at_nodes(rho, sigma);
    Ok(l.iter()
        .zip(&sigma.values)
        .zip(&sigma.weights)
        .map(|((l, s), w)| l * s * w)
        .sum())
}

/// Which constraint is active at a spectral point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Void,
    Band,
    Saturation,
}

/// The minimizer at one (x, t): characteristic foot and band edge.
#[derive(Debug, Clone, Copy)]
pub struct Minimizer<'a> {
    pub profile: &'a AdmissibleProfile,
    pub delta: f64,
    pub x: f64,
    pub t: f64,
    /// Foot ξ_x of the characteristic through (x, t).
    pub foot: f64,
    /// u^B(x, t).
    pub level: f64,
    pub kappa_max: f64,
    /// κ with E(ζ(κ)) = u^B(x, t), from the level equation.
    pub kappa_edge: f64,
}

/// Solves E(ζ(κ)) = level on [0, κ_max].
fn edge_from_level(level: f64, delta: f64, kmax: f64) -> f64 {
    if level <= 0.0 {
        return 0.0;
    }
    if quadratrix_level(kmax, delta) <= level {
        return kmax;
    }
    let (mut lo, mut hi) = (0.0, kmax);
    while hi - lo > 4.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if quadratrix_level(mid, delta) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut k = 0.5 * (lo + hi);
    for _ in 0..2 {
        let s = quadratrix_level_slope(k, delta);
        if s > 0.0 {
            let next = k - (quadratrix_level(k, delta) - level) / s;
            if (next - k).abs() <= 8.0 * f64::EPSILON * k.max(1.0) {
                k = next;
            }
        }
    }
    k
}

/// Accepts a band integral whose error estimate is within the rounding
/// floor 64 eps u_max/(u_max - E) (at least 1e-8 relative); next to the top
/// of the profile u₀ - E cancels and the adaptive rule cannot reach its own
/// tolerance.
fn accept_band(est: Estimate<f64>, level: f64, u_max: f64, what: &str) -> Result<f64> {
    let gap = (u_max - level).max(f64::MIN_POSITIVE);
    let floor = (64.0 * f64::EPSILON * u_max / gap).max(1e-8);
    if est.converged || est.error <= floor * est.value.abs().max(1.0) {
        Ok(est.value)
    } else {
        est.require(what)
    }
}

fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre(8))
}

fn im_wm1(q: f64) -> Result<f64> {
    if q >= 0.0 {
        return Ok(0.0);
    }
    Ok(lambert_shift_pair(q)?.1.im)
}

impl<'a> Minimizer<'a> {
    pub fn new(profile: &'a AdmissibleProfile, x: f64, t: f64, delta: f64) -> Result<Self> {
        let state = BurgersState::new(profile, t)?;
        let foot = state.characteristic_foot(x)?;
        let level = profile.u0(foot);
        let kmax = kappa_max(profile, delta)?;
        Ok(Minimizer {
            profile,
            delta,
            x,
            t,
            foot,
            level,
            kappa_max: kmax,
            kappa_edge: edge_from_level(level, delta, kmax),
        })
    }

    /// Weight of dξ in dx'.
    fn jacobian(&self, xi: f64) -> f64 {
        1.0 + 2.0 * self.t * self.profile.du0(xi)
    }

    /// Turning points (t = 0) at the level of ζ(κ), or None above u_max.
    fn crossings(&self, level: f64) -> Result<Option<(f64, f64)>> {
        if level >= self.profile.u_max() {
            return Ok(None);
        }
        let tp = self.profile.level_crossings(level)?;
        Ok(Some((tp.x_minus, tp.x_plus)))
    }

    /// Region predicted for ζ(κ) by the position of x against x_±(ζ; t).
    pub fn region(&self, kappa: f64) -> Result<Region> {
        if kappa <= 0.0 {
            return Ok(Region::Band);
        }
        let level = quadratrix(kappa, self.delta)?.level();
        Ok(match self.crossings(level)? {
            None if self.foot >= self.profile.x_max() => Region::Void,
            None => Region::Saturation,
            Some((_, xp)) if self.foot >= xp => Region::Void,
            Some((xm, _)) if self.foot <= xm => Region::Saturation,
            Some(_) => Region::Band,
        })
    }

    /// ρ^min(κ; x, t).
    pub fn density(&self, kappa: f64) -> Result<f64> {
        let (profile, delta) = (self.profile, self.delta);
        if kappa < 0.0 || kappa > self.kappa_max * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "min_density: kappa = {kappa} outside [0, {}]",
                self.kappa_max
            )));
        }
        if kappa >= self.kappa_max {
            return Ok(0.0);
        }
        let k = kappa.max(KAPPA_FLOOR * self.kappa_max);
        let p = quadratrix(k, delta)?;
        let level = p.level();
        let Some((xm, xp)) = self.crossings(level)? else {
            return Ok(0.0);
        };
        if self.foot >= xp {
            return Ok(0.0);
        }
        let full = weyl_density(profile, kappa, delta)?;
        if self.foot <= xm {
            return Ok(full);
        }
        let factor = -0.5 * p.level_slope();
        let value = if self.foot >= profile.x_max() {
            factor * self.band_moment(level, self.foot, xp, xp)?
        } else {
            full - factor * self.band_moment(level, xm, self.foot, xm)?
        };
        Ok(value.clamp(0.0, full))
    }

    /// u₀(ξ) - u₀(edge), through ∫u₀' when ξ is close to the edge.
    fn rise(&self, edge: f64, xi: f64) -> f64 {
        let h = xi - edge;
        if h.abs() > 0.05 * self.profile.width_scale() {
            return self.profile.u0(xi) - self.profile.u0(edge);
        }
        let (x, w) = gl8();
        x.iter()
            .zip(w)
            .map(|(x, w)| w * self.profile.du0(edge + 0.5 * h * (1.0 + x)))
            .sum::<f64>()
            * 0.5
            * h
    }

    /// ∫_a^b r J dξ with q measured from u₀ at the turning point `edge`
    /// (a or b), which keeps the square-root end exact.
    fn band_moment(&self, level: f64, a: f64, b: f64, edge: f64) -> Result<f64> {
        let delta = self.delta;
        let g = |xi: f64| Ok(r_integrand(2.0 * delta * self.rise(edge, xi))? * self.jacobian(xi));
        let u_max = self.profile.u_max();
        let tol = band_tolerance(level, u_max);
        accept_band(guarded(g, |f| integrate_sqrt_ends(f, a, b, tol))?, level, u_max, "minimizer density")
    }

    /// Samples of ρ^min, with a panel break at the band edge.
    pub fn samples(&self, nodes: usize) -> Result<SampledDensity> {
        let mut breaks = vec![0.0];
        if self.kappa_edge > 0.0 && self.kappa_edge < self.kappa_max {
            breaks.push(self.kappa_edge);
        }
        breaks.push(self.kappa_max);
        SampledDensity::from_fn(self.delta, &breaks, nodes, |k| self.density(k))
    }

    /// 𝓛[ρ^min](ζ(κ)) = ∫_x^∞ Im[ζ + W₋₁(-2δζe^{-2δ(ζ+u^B)})/2δ] dx'.
    pub fn potential(&self, kappa: f64) -> Result<f64> {
        if kappa <= 0.0 {
            return Ok(0.0);
        }
        let (profile, delta) = (self.profile, self.delta);
        let p = quadratrix(kappa, delta)?;
        let f = |xi: f64| Ok(tail_integrand(profile.u0(xi), &p)? * self.jacobian(xi));
        let tol = tight();
        let mut total = 0.0;
        let mut a = self.foot;
        let tail_from = match self.crossings(p.level())? {
            None => {
                // The forbidden integrand has a square-root kink at x_max.
                let m = profile.x_max();
                if a < m {
                    total += guarded(f, |g| integrate(g, a, m, tol))?.require("min potential")?;
                    a = m;
                }
                a
            }
            Some((xm, xp)) => {
                if a < xm {
                    total += guarded(f, |g| integrate_sqrt_ends(g, a, xm, tol))?.require("min potential")?;
                    a = xm;
                }
                if a < xp {
                    total += kappa * ((xp - a) + 2.0 * self.t * (profile.u0(xp) - profile.u0(a)));
                    a = xp;
                }
                a
            }
        };
        let near = 1.0;
        let head = guarded(|s| Ok(f(tail_from + s * s)? * 2.0 * s), |g| integrate(g, 0.0, near, tol))?;
        let tail = guarded(f, |g| integrate_to_infinity(g, tail_from + near * near, 1.0, tol))?;
        total += combine(head, tail, tol).require("min potential")?;
        Ok(total)
    }

    /// Closed-form Fréchet derivative by region: positive on voids, zero on
    /// the band, negative on saturations.
    pub fn frechet_exact(&self, kappa: f64) -> Result<(Region, f64)> {
        let region = self.region(kappa)?;
        if region == Region::Band {
            return Ok((region, 0.0));
        }
        let (profile, delta) = (self.profile, self.delta);
        let level = quadratrix(kappa, delta)?.level();
        let (xm, xp) = self.crossings(level)?.unwrap_or((profile.x_max(), profile.x_max()));
        let g = |xi: f64| Ok(im_wm1(2.0 * delta * (profile.u0(xi) - level))? * self.jacobian(xi));
        let tol = tight();
        let value = match region {
            Region::Void => {
                -guarded(g, |f| integrate_sqrt_ends(f, xp, self.foot, tol))?.require("void derivative")? / (2.0 * delta)
            }
            _ => guarded(g, |f| integrate_sqrt_ends(f, self.foot, xm, tol))?.require("saturation derivative")? / (2.0 * delta),
        };
        Ok((region, value))
    }
}

/// ρ^min(κ; x, t).
pub fn min_density(profile: &AdmissibleProfile, kappa: f64, x: f64, t: f64, delta: f64) -> Result<f64> {
    Minimizer::new(profile, x, t, delta)?.density(kappa)
}

fn on_curve_kappa(zeta: Complex64, delta: f64) -> Result<f64> {
    let k = zeta.im;
    if !(k >= 0.0) || k >= PI / (2.0 * delta) || (curve(k, delta) - zeta).norm() > 1e-10 * (1.0 + zeta.norm()) {
        return Err(Error::Domain(format!("zeta = {zeta} is not on the upper quadratrix arc")));
    }
    Ok(k)
}

/// 𝓛[ρ^min](ζ) for ζ on the upper quadratrix arc.
pub fn min_potential(profile: &AdmissibleProfile, zeta: Complex64, x: f64, t: f64, delta: f64) -> Result<f64> {
    let k = on_curve_kappa(zeta, delta)?;
    Minimizer::new(profile, x, t, delta)?.potential(k)
}

/// V(ζ; x, t) + 𝓛[ρ](ζ).
pub fn frechet(profile: &AdmissibleProfile, rho: &SampledDensity, zeta: Complex64, x: f64, t: f64) -> Result<f64> {
    let k = on_curve_kappa(zeta, rho.delta)?;
    Ok(external_potential(profile, k, x, t, rho.delta)? + potential_l(rho, zeta))
}

/// ∂ₓ𝓛[ρ^min](ζ(κ)) at level u^B = u: -Im[ζ + W₋₁/2δ].
pub fn potential_x_derivative(kappa: f64, u: f64, delta: f64) -> Result<f64> {
    let p = quadratrix(kappa, delta)?;
    Ok(-tail_integrand(u, &p)?)
}

/// ∂ₜ𝓛[ρ^min](ζ(κ)) at level u^B = u, with y = 2δu:
/// -Im[(ζ - 1/2δ)² - ((y + 1 + W₋₁)/2δ)²].
pub fn potential_t_derivative(kappa: f64, u: f64, delta: f64) -> Result<f64> {
    let z = curve(kappa, delta);
    let y = 2.0 * delta * u;
    let q = 2.0 * delta * (u - quadratrix_level(kappa, delta));
    let w = if q >= 0.0 {
        // W₋₁ is real on the allowed side
        Complex64::new(0.0, 0.0)
    } else {
        lambert_shift_pair(q)?.1 - 1.0
    };
    let c = z - 0.5 / delta;
    let s = (y + 1.0 + w) / (2.0 * delta);
    Ok(-(c * c - s * s).im)
}

/// Band edge from the Lambert route (Im β) and the level equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    /// y = 2δ u^B(x, t).
    pub y: f64,
    pub beta: Complex64,
    pub kappa_edge: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeCheck {
    pub kappa: f64,
    pub predicted: Region,
    /// None when the closed-form derivative is within twice the tolerance of
    /// zero, so the sign cannot be resolved at that tolerance.
    pub classified: Option<Region>,
    pub frechet: f64,
    pub frechet_exact: f64,
    /// Quadrature 𝓛[ρ^min] minus the closed-form potential.
    pub potential_mismatch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub region: Region,
    pub nodes: usize,
    /// Largest |F| on bands, smallest |F| on voids and saturations.
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalReport {
    pub x: f64,
    pub t: f64,
    pub delta: f64,
    pub burgers: f64,
    pub band: BandStructure,
    pub edge_discrepancy: f64,
    pub tolerance: f64,
    pub nodes: Vec<NodeCheck>,
    pub regions: Vec<RegionSummary>,
    pub max_potential_mismatch: f64,
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Fréchet tolerance 1e-6 (1 + |x| + t).
pub fn frechet_tolerance(x: f64, t: f64) -> f64 {
    1e-6 * (1.0 + x.abs() + t)
}

/// Builds ρ^min, evaluates the Fréchet derivative on `check_points`
/// Gauss-Legendre points of (0, κ_max) and compares signs with the regions
/// predicted by the turning points.
pub fn verify_variational(
    profile: &AdmissibleProfile,
    x: f64,
    t: f64,
    delta: f64,
    nodes: usize,
    check_points: usize,
) -> Result<VariationalReport> {
    let m = Minimizer::new(profile, x, t, delta)?;
    let rho = m.samples(nodes)?;
    let tol = frechet_tolerance(x, t);
    let y = 2.0 * delta * m.level;
    let beta = band_edge(y, delta)?;
    let band = BandStructure {
        y,
        beta,
        kappa_edge: m.kappa_edge,
    };
    let edge_discrepancy = (beta.im.min(m.kappa_max) - m.kappa_edge).abs();
    let (gx, _) = gauss_legendre(check_points);
    let kappas: Vec<f64> = gx.iter().map(|g| 0.5 * (g + 1.0) * m.kappa_max).collect();
    let checks = kappas
        .par_iter()
        .map(|&k| {
            let zeta = curve(k, delta);
            let lq = potential_l(&rho, zeta);
            let f = external_potential(profile, k, x, t, delta)? + lq;
            let (predicted, exact) = m.frechet_exact(k)?;
            let closed = m.potential(k)?;
            let classified = if predicted != Region::Band && exact.abs() <= 2.0 * tol {
                None
            } else if f > tol {
                Some(Region::Void)
            } else if f < -tol {
                Some(Region::Saturation)
            } else {
                Some(Region::Band)
            };
            Ok(NodeCheck {
                kappa: k,
                predicted,
                classified,
                frechet: f,
                frechet_exact: exact,
                potential_mismatch: lq - closed,
            })
        })
        .collect::<Result<Vec<NodeCheck>>>()?;
    let mut failures = Vec::new();
    if edge_discrepancy > 1e-6 {
        failures.push(format!("band edge mismatch {edge_discrepancy:.3e}"));
    }
    for c in &checks {
        if let Some(r) = c.classified {
            if r != c.predicted {
                failures.push(format!(
                    "kappa = {:.6}: predicted {:?}, Frechet derivative {:.3e} says {:?}",
                    c.kappa, c.predicted, c.frechet, r
                ));
            }
        }
    }
    let max_potential_mismatch = checks.iter().map(|c| c.potential_mismatch.abs()).fold(0.0, f64::max);
    if max_potential_mismatch > 1e-6 {
        failures.push(format!("potential cross-check off by {max_potential_mismatch:.3e}"));
    }
    let mut regions = Vec::new();
    for region in [Region::Void, Region::Band, Region::Saturation] {
        let vals: Vec<f64> = checks
            .iter()
            .filter(|c| c.predicted == region && c.classified.is_some())
            .map(|c| c.frechet.abs())
            .collect();
        if vals.is_empty() {
            continue;
        }
        let worst = if region == Region::Band {
            vals.iter().cloned().fold(0.0, f64::max)
        } else {
            vals.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        regions.push(RegionSummary {
            region,
            nodes: vals.len(),
            worst,
        });
    }
    Ok(VariationalReport {
        x,
        t,
        delta,
        burgers: m.level,
        band,
        edge_discrepancy,
        tolerance: tol,
        nodes: checks,
        regions,
        max_potential_mismatch,
        passed: failures.is_empty(),
        failures,
    })
}

/// u^B(x, t) and the estimate -(4δ/π) ∂²ₓ𝓔[ρ^min] from minimizers at
/// x ± h, x ± 2h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionalLimit {
    pub x: f64,
    pub t: f64,
    pub burgers: f64,
    pub energy_estimate: f64,
    pub step: f64,
}

impl DistributionalLimit {
    pub fn discrepancy(&self) -> f64 {
        (self.energy_estimate - self.burgers).abs()
    }
}

/// Step of the energy difference quotient.
pub const ENERGY_STEP: f64 = 0.05;

pub fn minimized_energy(profile: &AdmissibleProfile, x: f64, t: f64, delta: f64, nodes: usize) -> Result<f64> {
    let rho = Minimizer::new(profile, x, t, delta)?.samples(nodes)?;
    functional_e(profile, &rho, x, t)
}

pub fn distributional_limit(
    profile: &AdmissibleProfile,
    x: f64,
    t: f64,
    delta: f64,
    nodes: usize,
) -> Result<DistributionalLimit> {
    let burgers = BurgersState::new(profile, t)?.eval(x)?;
    let h = ENERGY_STEP;
    let e = [-2.0, -1.0, 0.0, 1.0, 2.0]
        .iter()
        .map(|s| minimized_energy(profile, x + s * h, t, delta, nodes))
        .collect::<Result<Vec<f64>>>()?;
    let second = (-e[0] + 16.0 * e[1] - 30.0 * e[2] + 16.0 * e[3] - e[4]) / (12.0 * h * h);
    Ok(DistributionalLimit {
        x,
        t,
        burgers,
        energy_estimate: -4.0 * delta / PI * second,
        step: h,
    })
}
