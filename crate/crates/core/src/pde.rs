//! Pseudospectral Strang split-step solver for u_t + 2uu_x + ε𝒯_{δε}[u_xx] = 0
//! on a periodic domain [-L/2, L/2).
//!
//! The state is advanced in Fourier space. The dispersive part is exact:
//! 𝒯 multiplies e^{ikx} by iτ(δεk), so û_t = iετ(δεk)k²û. The advective part
//! û_t = -ik (u²)^ is integrated by RK4 with the 2/3 rule.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::profile::{build_profile, AdmissibleProfile, ProfileSpec};

/// τ(k) = coth k - 1/k, with τ(0) = 0.
pub fn tau(k: f64) -> f64 {
    if k == 0.0 {
        return 0.0;
    }
    if k.abs() < 0.1 {
        let k2 = k * k;
        return k
            * (1.0 / 3.0
                + k2 * (-1.0 / 45.0 + k2 * (2.0 / 945.0 + k2 * (-1.0 / 4725.0 + k2 * (2.0 / 93555.0)))));
    }
    1.0 / k.tanh() - 1.0 / k
}

/// Samples on the periodic grid x_j = -L/2 + jL/n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub l: f64,
    pub n_x: usize,
    pub values: Vec<f64>,
    pub t: f64,
    pub eps: f64,
    pub delta: f64,
}

impl Field {
    pub fn new(l: f64, values: Vec<f64>, t: f64, eps: f64, delta: f64) -> Result<Self> {
        let n_x = values.len();
        if n_x < 16 {
            return Err(Error::Domain(format!("field needs at least 16 samples, got {n_x}")));
        }
        if !(l > 0.0) || !(eps > 0.0) || !(delta > 0.0) {
            return Err(Error::Domain("field: L, eps and delta must be positive".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("field: non-finite sample".into()));
        }
        Ok(Field {
            l,
            n_x,
            values,
            t,
            eps,
            delta,
        })
    }

    pub fn from_profile(profile: &AdmissibleProfile, l: f64, n_x: usize, eps: f64, delta: f64) -> Result<Self> {
        let values = (0..n_x).map(|j| profile.u0(grid_point(l, n_x, j))).collect();
        Field::new(l, values, 0.0, eps, delta)
    }

    pub fn dx(&self) -> f64 {
        self.l / self.n_x as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        grid_point(self.l, self.n_x, j)
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.n_x).map(|j| self.x(j)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn grid_point(l: f64, n: usize, j: usize) -> f64 {
    -0.5 * l + l * j as f64 / n as f64
}

/// Wavenumber 2πm/L of FFT bin j.
fn wavenumber(l: f64, n: usize, j: usize) -> f64 {
    let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
    2.0 * std::f64::consts::PI * m / l
}

/// Trapezoidal mass ∫u and L² norm ‖u‖ on the periodic grid.
pub fn conserved(field: &Field) -> (f64, f64) {
    let dx = field.dx();
    let mass = dx * field.values.iter().sum::<f64>();
    let l2 = (dx * field.values.iter().map(|v| v * v).sum::<f64>()).sqrt();
    (mass, l2)
}

/// FFT plans, wavenumbers and the dealiasing mask for one grid.
pub struct SplitStep {
    n: usize,
    l: f64,
    eps: f64,
    delta: f64,
    k: Vec<f64>,
    keep: Vec<bool>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    half_dt: f64,
    half: Vec<Complex64>,
    /// Skip the advective substep (linear flow only).
    pub linear_only: bool,
}

impl SplitStep {
    pub fn new(l: f64, n: usize, eps: f64, delta: f64) -> Self {
        let mut planner = FftPlanner::new();
        let k: Vec<f64> = (0..n).map(|j| wavenumber(l, n, j)).collect();
        let cut = (n - 1) / 3;
        let keep = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j } else { n - j };
                m <= cut && !(n % 2 == 0 && j == n / 2)
            })
            .collect();
        SplitStep {
            n,
            l,
            eps,
            delta,
            k,
            keep,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            half_dt: f64::NAN,
            half: Vec::new(),
            linear_only: false,
        }
    }

    pub fn for_field(field: &Field) -> Self {
        SplitStep::new(field.l, field.n_x, field.eps, field.delta)
    }

    /// Phase e^{iετ(δεk)k²dt} of the exact dispersive flow over dt.
    pub fn linear_multiplier(&self, k: f64, dt: f64) -> Complex64 {
        let phase = self.eps * tau(self.delta * self.eps * k) * k * k * dt;
        Complex64::from_polar(1.0, phase)
    }

    fn ensure_half(&mut self, dt: f64) {
        if self.half_dt != 0.5 * dt {
            self.half_dt = 0.5 * dt;
            self.half = self.k.iter().map(|&k| self.linear_multiplier(k, 0.5 * dt)).collect();
        }
    }

    fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    fn inverse(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut buf = spec.to_vec();
        self.inv.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * s).collect()
    }

    /// -ik (u²)^ on the kept modes; also returns max|u|.
    fn advection(&self, v: &[Complex64]) -> (Vec<Complex64>, f64) {
        let u = self.inverse(v);
        let peak = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let sq: Vec<f64> = u.iter().map(|x| x * x).collect();
        let mut s = self.forward(&sq);
        for ((s, &k), &keep) in s.iter_mut().zip(&self.k).zip(&self.keep) {
            *s = if keep { Complex64::new(0.0, -k) * *s } else { Complex64::new(0.0, 0.0) };
        }
        (s, peak)
    }

    fn rk4(&self, v: &mut [Complex64], dt: f64) -> f64 {
        let axpy = |a: &[Complex64], b: &[Complex64], h: f64| -> Vec<Complex64> {
            a.iter().zip(b).map(|(a, b)| a + b * h).collect()
        };
        let (k1, peak) = self.advection(v);
        let (k2, _) = self.advection(&axpy(v, &k1, 0.5 * dt));
        let (k3, _) = self.advection(&axpy(v, &k2, 0.5 * dt));
        let (k4, _) = self.advection(&axpy(v, &k3, dt));
        for (j, v) in v.iter_mut().enumerate() {
            *v += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (dt / 6.0);
        }
        peak
    }

    fn check_grid(&self, field: &Field) -> Result<()> {
        if field.n_x != self.n || field.l != self.l || field.eps != self.eps || field.delta != self.delta {
            return Err(Error::Domain("split-step plan does not match the field".into()));
        }
        Ok(())
    }

    /// Advances by `steps` Strang steps of size dt.
    pub fn advance(&mut self, field: &mut Field, dt: f64, steps: usize) -> Result<()> {
        self.check_grid(field)?;
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        let peak0 = field.max_abs();
        if !self.linear_only && peak0 > 0.0 && dt > 0.5 * field.dx() / (2.0 * peak0) {
            return Err(Error::Instability(format!(
                "dt = {dt} violates the CFL bound 0.5 dx / max|2u| = {}",
                0.5 * field.dx() / (2.0 * peak0)
            )));
        }
        if steps == 0 {
            return Ok(());
        }
        self.ensure_half(dt);
        let mut v = self.forward(&field.values);
        for (v, &keep) in v.iter_mut().zip(&self.keep) {
            if !keep && !self.linear_only {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        let mut last = peak0;
        for _ in 0..steps {
            for (v, m) in v.iter_mut().zip(&self.half) {
                *v *= m;
            }
            if !self.linear_only {
                let peak = self.rk4(&mut v, dt);
                if !peak.is_finite() || (last > 0.0 && peak > 10.0 * last) {
                    return Err(Error::Instability(format!(
                        "max|u| jumped from {last} to {peak} in one step at t = {}",
                        field.t
                    )));
                }
                last = peak;
            }
            for (v, m) in v.iter_mut().zip(&self.half) {
                *v *= m;
            }
            field.t += dt;
        }
        field.values = self.inverse(&v);
        if field.values.iter().any(|x| !x.is_finite()) || field.max_abs() > 10.0 * last.max(peak0) {
            return Err(Error::Instability(format!("solution blew up before t = {}", field.t)));
        }
        Ok(())
    }

    /// 𝒯_{δε}[u] through the multiplier iτ(δεk).
    pub fn apply_t(&self, field: &Field) -> Result<Field> {
        self.check_grid(field)?;
        let mut v = self.forward(&field.values);
        for (v, &k) in v.iter_mut().zip(&self.k) {
            let j = if k == 0.0 { 0.0 } else { tau(self.delta * self.eps * k) };
            *v *= Complex64::new(0.0, j);
        }
        if self.n % 2 == 0 {
            // the Nyquist bin has no Hermitian partner
            v[self.n / 2] = Complex64::new(0.0, 0.0);
        }
        Ok(Field {
            values: self.inverse(&v),
            ..field.clone()
        })
    }
}

/// 𝒯_{δε}[u] for a single field.
pub fn apply_t(field: &Field) -> Result<Field> {
    SplitStep::for_field(field).apply_t(field)
}

/// One Strang step of size dt.
pub fn step(field: &Field, dt: f64) -> Result<Field> {
    let mut out = field.clone();
    SplitStep::for_field(field).advance(&mut out, dt, 1)?;
    Ok(out)
}

fn default_log_every() -> usize {
    100
}

fn default_true() -> bool {
    true
}

/// Simulation parameters; the defaults are the reference run at ε = 0.05, δ = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub profile: ProfileSpec,
    pub eps: f64,
    pub delta: f64,
    pub l: f64,
    pub n_x: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default = "default_log_every")]
    pub log_every: usize,
    #[serde(default = "default_true")]
    pub nonlinear: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            profile: ProfileSpec::sech2(),
            eps: 0.05,
            delta: 1.0,
            l: 12.0,
            n_x: 2000,
            dt: 1e-4,
            t_end: 1.5,
            snapshots: vec![0.0, 0.3, 0.65, 1.5],
            log_every: 100,
            nonlinear: true,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Domain(m));
        if self.n_x < 16 {
            return bad(format!("n_x = {} below 16", self.n_x));
        }
        if !(self.eps > 0.0 && self.delta > 0.0 && self.l > 0.0 && self.dt > 0.0) {
            return bad("eps, delta, L and dt must be positive".into());
        }
        if !(self.t_end >= 0.0) {
            return bad("t_end must be nonnegative".into());
        }
        if self.snapshots.iter().any(|s| !(*s >= 0.0 && *s <= self.t_end)) {
            return bad("snapshot times must lie in [0, t_end]".into());
        }
        if self.log_every == 0 {
            return bad("log_every must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationRecord {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: SimulationConfig,
    pub snapshots: Vec<Field>,
    pub log: Vec<ConservationRecord>,
    pub final_field: Field,
}

impl Trajectory {
    /// Largest relative change of mass and of the L² norm over the log.
    pub fn drift(&self) -> (f64, f64) {
        let Some(first) = self.log.first() else {
            return (0.0, 0.0);
        };
        let rel = |a: f64, b: f64| if b == 0.0 { (a - b).abs() } else { ((a - b) / b).abs() };
        self.log.iter().fold((0.0, 0.0), |(m, l), r| {
            (m.max(rel(r.mass, first.mass)), l.max(rel(r.l2, first.l2)))
        })
    }

    pub fn snapshot(&self, t: f64) -> Option<&Field> {
        self.snapshots.iter().find(|f| (f.t - t).abs() < 1e-9 * (1.0 + t))
    }
}

/// Runs the split-step loop from u₀, recording snapshots and a
/// conservation log every `log_every` steps.
pub fn simulate(config: &SimulationConfig) -> Result<Trajectory> {
    config.validate()?;
    let profile = build_profile(&config.profile)?;
    let field = Field::from_profile(&profile, config.l, config.n_x, config.eps, config.delta)?;
    simulate_from(config, field)
}

/// As [`simulate`], from given initial samples.
pub fn simulate_from(config: &SimulationConfig, mut field: Field) -> Result<Trajectory> {
    config.validate()?;
    let mut solver = SplitStep::for_field(&field);
    solver.linear_only = !config.nonlinear;
    let mut targets: Vec<f64> = config.snapshots.clone();
    targets.push(config.t_end);
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    let mut snapshots = Vec::new();
    let mut log = Vec::new();
    let record = |field: &Field, step: usize, log: &mut Vec<ConservationRecord>| {
        let (mass, l2) = conserved(field);
        log.push(ConservationRecord {
            step,
            t: field.t,
            mass,
            l2,
        });
    };
    record(&field, 0, &mut log);
    let mut step = 0usize;
    for target in targets {
        let remaining = target - field.t;
        let whole = (remaining / config.dt + 1e-9).floor().max(0.0) as usize;
        let mut done = 0;
        while done < whole {
            let to_log = config.log_every - step % config.log_every;
            let chunk = to_log.min(whole - done);
            solver.advance(&mut field, config.dt, chunk)?;
            done += chunk;
            step += chunk;
            if step % config.log_every == 0 {
                record(&field, step, &mut log);
            }
        }
        let rest = target - field.t;
        if rest > 1e-12 * (1.0 + target) {
            solver.advance(&mut field, rest, 1)?;
            step += 1;
        }
        field.t = target;
        if config.snapshots.iter().any(|s| *s == target) {
            snapshots.push(field.clone());
        }
    }
    record(&field, step, &mut log);
    Ok(Trajectory {
        config: config.clone(),
        snapshots,
        log,
        final_field: field,
    })
}

/// ‖a - b‖_{L²} for fields on the same grid.
pub fn l2_distance(a: &Field, b: &[f64]) -> f64 {
    let dx = a.dx();
    (dx * a.values.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>()).sqrt()
}

/// Strict interior local extrema of the samples with x in [a, b].
pub fn count_extrema(field: &Field, a: f64, b: f64) -> usize {
    let n = field.n_x;
    (1..n - 1)
        .filter(|&j| {
            let x = field.x(j);
            if x < a || x > b {
                return false;
            }
            let (l, c, r) = (field.values[j - 1], field.values[j], field.values[j + 1]);
            (c > l && c > r) || (c < l && c < r)
        })
        .count()
}

/// x-range where the Burgers characteristics have crossed at time t,
/// or None before the catastrophe.
pub fn fold_interval(profile: &AdmissibleProfile, t: f64) -> Option<(f64, f64)> {
    let half = 30.0 * profile.width_scale();
    let n = 200_000;
    let xm = profile.x_max();
    let map = |y: f64| y + 2.0 * t * profile.u0(y);
    let slope = |y: f64| 1.0 + 2.0 * t * profile.du0(y);
    let mut first = None;
    let mut last = None;
    for i in 0..=n {
        let y = xm - half + 2.0 * half * i as f64 / n as f64;
        if slope(y) < 0.0 {
            first.get_or_insert(y);
            last = Some(y);
        }
    }
    let (ya, yb) = (first?, last?);
    // x(ya) is the local maximum of the map, x(yb) the local minimum
    Some((map(yb), map(ya)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn tau_values() {
        assert_eq!(tau(0.0), 0.0);
        // mpmath: coth(10) - 1/10
        assert!((tau(10.0) - 0.900_000_004_122_307_2).abs() < 1e-15);
        for k in [1e-6, 3e-5, 0.3, 2.0] {
            assert_eq!(tau(-k), -tau(k));
        }
        // mpmath: coth(k) - 1/k on both sides of the series switch
        for (k, v) in [
            (1e-4, 3.333_333_331_111_111_4e-5),
            (0.0999, 0.033_277_865_415_217_336),
            (0.1001, 0.033_344_398_959_850_946),
            (0.5, 0.163_953_413_738_652_85),
        ] {
            assert!((tau(k) - v).abs() < 2e-13 * v, "{k}");
        }
    }

    fn mode_field(n: usize, l: f64, f: impl Fn(f64) -> f64) -> Field {
        let values = (0..n).map(|j| f(grid_point(l, n, j))).collect();
        Field::new(l, values, 0.0, 0.05, 1.0).unwrap()
    }

    #[test]
    fn t_operator_on_one_mode() {
        let (n, l) = (64, 12.0);
        let k = 2.0 * PI / l;
        let f = mode_field(n, l, |x| (k * x).cos());
        let g = apply_t(&f).unwrap();
        let t = tau(1.0 * 0.05 * k);
        for (j, v) in g.values.iter().enumerate() {
            assert!((v + t * (k * f.x(j)).sin()).abs() < 1e-14);
        }
        let c = mode_field(n, l, |_| 2.5);
        assert!(apply_t(&c).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn linear_flow_matches_dispersion_relation() {
        // û_t = iετk²û for e^{ikx} means cos(kx) → cos(kx + ωt), ω = ετ(δεk)k².
        let (n, l, m) = (128, 12.0, 5.0);
        let k = 2.0 * PI * m / l;
        let mut f = mode_field(n, l, |x| (k * x).cos());
        let mut s = SplitStep::for_field(&f);
        s.linear_only = true;
        let (dt, steps) = (1e-2, 37);
        s.advance(&mut f, dt, steps).unwrap();
        let omega = 0.05 * tau(0.05 * k) * k * k;
        let t = dt * steps as f64;
        for (j, v) in f.values.iter().enumerate() {
            assert!((v - (k * f.x(j) + omega * t).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn dispersion_has_kdv_sign() {
        // small δ: u_t + (δε²/3) u_xxx = 0 gives ω = (δε²/3)k³ for cos(kx + ωt)
        let s = SplitStep::new(12.0, 64, 0.05, 1e-3);
        let k = 3.0;
        let m = s.linear_multiplier(k, 1.0);
        let kdv = 1e-3 * 0.05 * 0.05 / 3.0 * k * k * k;
        assert!((m.arg() - kdv).abs() < 1e-6 * kdv);
    }

    #[test]
    fn zero_stays_zero_and_mean_is_kept() {
        let mut f = mode_field(64, 12.0, |_| 0.0);
        SplitStep::for_field(&f).advance(&mut f, 1e-3, 10).unwrap();
        assert_eq!(f.max_abs(), 0.0);
        let g = mode_field(256, 12.0, |x| 0.3 + 0.2 * (2.0 * PI * x / 12.0).sin());
        let (m0, _) = conserved(&g);
        let h = step(&g, 1e-3).unwrap();
        assert!((conserved(&h).0 - m0).abs() < 1e-12 * m0);
    }

    #[test]
    fn sech2_mass_on_twelve() {
        let p = build_profile(&ProfileSpec::sech2()).unwrap();
        let f = Field::from_profile(&p, 12.0, 2000, 0.05, 1.0).unwrap();
        let (mass, l2) = conserved(&f);
        assert!((mass - 2.0 * 6f64.tanh()).abs() < 1e-9);
        // ∫_{-6}^{6} sech⁴ = 2 (tanh 6 - tanh³6 / 3)
        let t6 = 6f64.tanh();
        assert!((l2 * l2 - 2.0 * (t6 - t6.powi(3) / 3.0)).abs() < 1e-9);
        assert_eq!(conserved(&mode_field(32, 1.0, |_| 0.0)), (0.0, 0.0));
    }

    #[test]
    fn cfl_and_blowup_are_reported() {
        let p = build_profile(&ProfileSpec::sech2()).unwrap();
        let f = Field::from_profile(&p, 12.0, 256, 0.05, 1.0).unwrap();
        assert!(matches!(step(&f, 0.1), Err(Error::Instability(_))));
    }

    #[test]
    fn fold_opens_after_catastrophe() {
        let p = build_profile(&ProfileSpec::sech2()).unwrap();
        assert!(fold_interval(&p, 0.5).is_none());
        let (a, b) = fold_interval(&p, 1.0).unwrap();
        assert!(a < b && a > 0.0);
    }
}
