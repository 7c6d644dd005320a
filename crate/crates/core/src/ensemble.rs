//! Exact N-soliton ensembles from modified scattering data.
//!
//! The determinant Z_N(z, t) = det(I + Δ_N) is evaluated in software floating
//! point. Δ = D C D is never formed: indices whose diagonal weight D_n²C_nn
//! exceeds one are "saturated" and get their D_n factored out of the matrix,
//! so every entry of the matrix that is actually decomposed stays O(1).

use std::f64::consts::PI;

use astro_float::BigFloat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bigc::{big_to_f64, Ctx, Cx};
use crate::error::{Error, Result};
use crate::scattering::ScatteringData;

pub const DEFAULT_PRECISION_BITS: usize = 256;
pub const MIN_PRECISION_BITS: usize = 128;
pub const FREDHOLM_MAX_N: usize = 20;
/// Bits that must survive the elimination for a result to be accepted.
const GUARD_BITS: f64 = 64.0;

/// ln Z_N with a continuous argument.
#[derive(Debug, Clone)]
pub struct LogDetResult {
    pub log_mag: BigFloat,
    pub arg: BigFloat,
    pub precision_bits: usize,
}

impl LogDetResult {
    pub fn log_mag_f64(&self) -> f64 {
        big_to_f64(&self.log_mag)
    }

    pub fn arg_f64(&self) -> f64 {
        big_to_f64(&self.arg)
    }

    pub fn log_z(&self) -> Complex64 {
        Complex64::new(self.log_mag_f64(), self.arg_f64())
    }
}

/// Per-eigenvalue inputs.
#[derive(Debug, Clone, Copy)]
struct Node {
    kappa: f64,
    zeta: Complex64,
    /// Im[(ζ - 1/2δ)²].
    quad: f64,
    log_c: f64,
}

fn nodes(data: &ScatteringData) -> Vec<Node> {
    let shift = 0.5 / data.delta;
    data.eigen
        .iter()
        .zip(&data.log_c)
        .map(|(p, &log_c)| Node {
            kappa: p.kappa,
            zeta: p.zeta,
            quad: 2.0 * (p.zeta.re - shift) * p.kappa,
            log_c,
        })
        .collect()
}

fn check_precision(bits: usize) -> Result<()> {
    if bits < MIN_PRECISION_BITS {
        return Err(Error::Precision(format!(
            "precision_bits = {bits} is below the minimum {MIN_PRECISION_BITS}"
        )));
    }
    Ok(())
}

fn check_strip(data: &ScatteringData, z: Complex64, t: f64) -> Result<()> {
    let half = data.delta * data.eps;
    if !(z.re.is_finite() && t.is_finite()) || !(z.im.abs() <= half * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!(
            "z = {z} lies outside the strip |Im z| <= delta*eps_N = {half}"
        )));
    }
    Ok(())
}

/// log D_nn = ½ log c_n - κ_n z/ε - Im[(ζ_n - 1/2δ)²] t/ε.
fn log_d(ctx: &Ctx, data: &ScatteringData, nodes: &[Node], z: Complex64, t: f64) -> Vec<Cx> {
    let eps = ctx.real(data.eps);
    let (x, y, tb) = (ctx.real(z.re), ctx.real(z.im), ctx.real(t));
    nodes
        .iter()
        .map(|nd| {
            let k = ctx.real(nd.kappa);
            let kx = ctx.rdiv(&ctx.rmul(&k, &x), &eps);
            let qt = ctx.rdiv(&ctx.rmul(&ctx.real(nd.quad), &tb), &eps);
            let re = ctx.rsub(&ctx.rsub(&ctx.real(0.5 * nd.log_c), &kx), &qt);
            let im = ctx.rdiv(&ctx.rmul(&k, &y), &eps).neg();
            Cx { re, im }
        })
        .collect()
}

/// C_nℓ = i/(ζ_ℓ - conj ζ_n).
fn cauchy(ctx: &Ctx, nodes: &[Node]) -> Vec<Vec<Cx>> {
    let i = ctx.cx(Complex64::new(0.0, 1.0));
    nodes
        .iter()
        .map(|a| {
            let ca = ctx.cx(a.zeta.conj());
            nodes
                .iter()
                .map(|b| ctx.div(&i, &ctx.sub(&ctx.cx(b.zeta), &ca)))
                .collect()
        })
        .collect()
}

/// Factored Δ_N = D C D at one point.
#[derive(Debug, Clone)]
pub struct DeltaFactors {
    /// log D_nn.
    pub log_d: Vec<Complex64>,
    /// Cauchy matrix C_nℓ.
    pub cauchy: Vec<Vec<Complex64>>,
    pub precision_bits: usize,
}

impl DeltaFactors {
    /// log Δ_nℓ = log D_nn + log D_ℓℓ + log C_nℓ.
    pub fn log_entry(&self, n: usize, l: usize) -> Complex64 {
        self.log_d[n] + self.log_d[l] + self.cauchy[n][l].ln()
    }

    /// Δ_nℓ, overflowing to infinity when the entry exceeds f64 range.
    pub fn entry(&self, n: usize, l: usize) -> Complex64 {
        self.log_entry(n, l).exp()
    }
}

/// The factorization Δ_N(z, t) = D C D.
pub fn delta_matrix(
    data: &ScatteringData,
    z: Complex64,
    t: f64,
    precision_bits: usize,
) -> Result<DeltaFactors> {
    check_precision(precision_bits)?;
    check_strip(data, z, t)?;
    let ctx = Ctx::new(precision_bits)?;
    let nd = nodes(data);
    let ld = log_d(&ctx, data, &nd, z, t);
    let c = cauchy(&ctx, &nd);
    Ok(DeltaFactors {
        log_d: ld.iter().map(|v| ctx.to_c64(v)).collect(),
        cauchy: c
            .iter()
            .map(|row| row.iter().map(|v| ctx.to_c64(v)).collect())
            .collect(),
        precision_bits,
    })
}

struct Lu {
    a: Vec<Vec<Cx>>,
    perm: Vec<usize>,
    odd: bool,
}

/// In-place LU with partial pivoting; returns the factors and the estimated
/// number of bits lost to cancellation.
fn lu(ctx: &Ctx, mut a: Vec<Vec<Cx>>) -> Result<(Lu, f64)> {
    let n = a.len();
    let scale = a
        .iter()
        .flatten()
        .map(|v| ctx.log2_abs_rough(v))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut odd = false;
    let mut smallest = f64::INFINITY;
    for k in 0..n {
        let mut best = k;
        let mut best_mag = ctx.norm_sqr(&a[k][k]);
        for (r, row) in a.iter().enumerate().skip(k + 1) {
            let m = ctx.norm_sqr(&row[k]);
            if m.cmp(&best_mag).is_some_and(|c| c > 0) {
                best = r;
                best_mag = m;
            }
        }
        if best_mag.is_zero() || best_mag.is_nan() {
            return Err(Error::Singularity(format!(
                "determinant: zero pivot at column {k}"
            )));
        }
        if best != k {
            a.swap(best, k);
            perm.swap(best, k);
            odd = !odd;
        }
        smallest = smallest.min(ctx.log2_abs_rough(&a[k][k]));
        let (upper, lower) = a.split_at_mut(k + 1);
        let pivot_row = &upper[k];
        for row in lower.iter_mut() {
            let f = ctx.div(&row[k], &pivot_row[k]);
            for j in k + 1..n {
                let prod = ctx.mul(&f, &pivot_row[j]);
                row[j] = ctx.sub(&row[j], &prod);
            }
            row[k] = f;
        }
    }
    let loss = if n == 0 { 0.0 } else { (scale - smallest).max(0.0) };
    Ok((Lu { a, perm, odd }, loss))
}

impl Lu {
    /// Diagonal of the inverse.
    fn inverse_diagonal(&self, ctx: &Ctx) -> Vec<Cx> {
        let n = self.a.len();
        (0..n)
            .map(|col| {
                let mut x: Vec<Cx> = self
                    .perm
                    .iter()
                    .map(|&p| if p == col { ctx.one() } else { ctx.zero() })
                    .collect();
                for i in 0..n {
                    for j in 0..i {
                        let prod = ctx.mul(&self.a[i][j], &x[j]);
                        x[i] = ctx.sub(&x[i], &prod);
                    }
                }
                for i in (col..n).rev() {
                    for j in i + 1..n {
                        let prod = ctx.mul(&self.a[i][j], &x[j]);
                        x[i] = ctx.sub(&x[i], &prod);
                    }
                    x[i] = ctx.div(&x[i], &self.a[i][i]);
                }
                x.swap_remove(col)
            })
            .collect()
    }
}

/// One decomposition of the scaled matrix at a point.
struct Evaluation {
    /// ln |Z|.
    log_mag: BigFloat,
    /// Σ_sat 2 Im log D_s: the exact, continuous part of arg Z.
    arg_prefix: BigFloat,
    /// Principal value of arg det M.
    arg_m: BigFloat,
    /// Diagonal of (I + Δ)⁻¹, present when requested.
    resolvent: Vec<Complex64>,
}

fn evaluate(
    ctx: &mut Ctx,
    data: &ScatteringData,
    nd: &[Node],
    c: &[Vec<Cx>],
    z: Complex64,
    t: f64,
    want_resolvent: bool,
) -> Result<Evaluation> {
    let n = nd.len();
    let ld = log_d(ctx, data, nd, z, t);
    let sat: Vec<bool> = ld
        .iter()
        .zip(nd)
        .map(|(l, node)| 2.0 * big_to_f64(&l.re) - (2.0 * node.kappa).ln() > 0.0)
        .collect();
    let two = ctx.real(2.0);
    let mut weight = Vec::with_capacity(n);
    for (l, &s) in ld.iter().zip(&sat) {
        let w = if s {
            let neg = ctx.scale(l, &two.neg());
            ctx.exp(&neg)
        } else {
            ctx.exp(l)
        };
        weight.push(w);
    }
    let one = ctx.one();
    let mut m = vec![vec![ctx.zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut v = c[i][j].clone();
            if !sat[i] {
                v = ctx.mul(&weight[i], &v);
            }
            if !sat[j] {
                v = ctx.mul(&v, &weight[j]);
            }
            if i == j {
                v = ctx.add(&v, if sat[i] { &weight[i] } else { &one });
            }
            m[i][j] = v;
        }
    }
    let (f, loss) = lu(ctx, m)?;
    let budget = ctx.p as f64 - GUARD_BITS;
    if loss > budget {
        return Err(Error::Precision(format!(
            "determinant lost {loss:.0} bits at z = {z}, t = {t}; \
             precision {} leaves only {budget:.0}",
            ctx.p
        )));
    }
    let mut log_mag = ctx.real(0.0);
    let mut arg_prefix = ctx.real(0.0);
    for (l, &s) in ld.iter().zip(&sat) {
        if s {
            log_mag = ctx.radd(&log_mag, &ctx.rmul(&two, &l.re));
            arg_prefix = ctx.radd(&arg_prefix, &ctx.rmul(&two, &l.im));
        }
    }
    let mut arg_m = ctx.real(0.0);
    for k in 0..n {
        let p = f.a[k][k].clone();
        if !ctx.is_finite(&p) {
            return Err(Error::Precision(format!("non-finite pivot at z = {z}")));
        }
        let lm = ctx.ln_abs(&p);
        log_mag = ctx.radd(&log_mag, &lm);
        let g = ctx.arg(&p);
        arg_m = ctx.radd(&arg_m, &g);
    }
    if f.odd {
        let pi = ctx.pi();
        arg_m = ctx.radd(&arg_m, &pi);
    }
    let two_pi = 2.0 * PI;
    let wrapped = big_to_f64(&arg_m);
    let turns = ((wrapped + PI) / two_pi).floor();
    if turns != 0.0 {
        let pi = ctx.pi();
        let shift = ctx.rmul(&ctx.rmul(&pi, &two), &ctx.real(turns));
        arg_m = ctx.rsub(&arg_m, &shift);
    }
    let resolvent = if want_resolvent {
        f.inverse_diagonal(ctx)
            .iter()
            .enumerate()
            .map(|(k, v)| {
                if sat[k] {
                    ctx.to_c64(&ctx.mul(v, &weight[k]))
                } else {
                    ctx.to_c64(v)
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(Evaluation {
        log_mag,
        arg_prefix,
        arg_m,
        resolvent,
    })
}

/// d(arg Z)/dy = -(2/ε) Σ κ_n Re(1 - G_nn).
fn arg_slope(nd: &[Node], eps: f64, g: &[Complex64]) -> f64 {
    -2.0 / eps
        * nd
            .iter()
            .zip(g)
            .map(|(n, gn)| n.kappa * (1.0 - gn.re))
            .sum::<f64>()
}

fn log_det_with(
    ctx: &mut Ctx,
    data: &ScatteringData,
    z: Complex64,
    t: f64,
) -> Result<LogDetResult> {
    let p = ctx.p;
    if data.n == 0 {
        return Ok(LogDetResult {
            log_mag: ctx.real(0.0),
            arg: ctx.real(0.0),
            precision_bits: p,
        });
    }
    let nd = nodes(data);
    let c = cauchy(ctx, &nd);
    if z.im == 0.0 {
        let e = evaluate(ctx, data, &nd, &c, z, t, false)?;
        return Ok(LogDetResult {
            log_mag: e.log_mag,
            arg: ctx.real(0.0),
            precision_bits: p,
        });
    }
    // Continue arg det M from y = 0, where it vanishes, guided by the exact slope.
    let sat_kappa = saturated_kappa(ctx, data, &nd, z.re, t);
    let slope = |g: &[Complex64]| arg_slope(&nd, data.eps, g) + 2.0 * sat_kappa / data.eps;
    let e0 = evaluate(ctx, data, &nd, &c, Complex64::new(z.re, 0.0), t, true)?;
    let (mut y0, mut a0, mut d0) = (0.0, 0.0, slope(&e0.resolvent));
    let mut h = z.im;
    let mut last = None;
    let mut steps = 0;
    while y0 != z.im {
        steps += 1;
        if steps > 4000 || h.abs() < 1e-12 * z.im.abs() {
            return Err(Error::NonConvergence(format!(
                "argument continuation stalled at y = {y0} for z = {z}"
            )));
        }
        let y1 = if (z.im - y0).abs() <= h.abs() { z.im } else { y0 + h };
        let e1 = evaluate(ctx, data, &nd, &c, Complex64::new(z.re, y1), t, true)?;
        let d1 = slope(&e1.resolvent);
        let pm = big_to_f64(&e1.arg_m);
        let pred = a0 + 0.5 * (d0 + d1) * (y1 - y0);
        let k = ((pred - pm) / (2.0 * PI)).round();
        let a1 = pm + 2.0 * PI * k;
        let swing = d0.abs().max(d1.abs()) * (y1 - y0).abs();
        if (a1 - pred).abs() > 0.25 || swing > 1.5 {
            h *= 0.5;
            continue;
        }
        (y0, a0, d0) = (y1, a1, d1);
        h *= 2.0;
        last = Some((e1, k));
    }
    let (e, k) = last.expect("continuation takes at least one step");
    let pi = ctx.pi();
    let turns = ctx.rmul(&ctx.rmul(&pi, &ctx.real(2.0)), &ctx.real(k));
    let arg = ctx.radd(&ctx.radd(&e.arg_prefix, &e.arg_m), &turns);
    Ok(LogDetResult {
        log_mag: e.log_mag,
        arg,
        precision_bits: p,
    })
}

/// Σ κ_s over saturated indices at real part x (independent of Im z).
fn saturated_kappa(ctx: &Ctx, data: &ScatteringData, nd: &[Node], x: f64, t: f64) -> f64 {
    log_d(ctx, data, nd, Complex64::new(x, 0.0), t)
        .iter()
        .zip(nd)
        .filter(|(l, node)| 2.0 * big_to_f64(&l.re) - (2.0 * node.kappa).ln() > 0.0)
        .map(|(_, node)| node.kappa)
        .sum()
}

/// ln Z_N(z, t) by pivoted LU on the scaled matrix, with the argument
/// continued from the real axis.
#[allow(non_snake_case)]
pub fn log_det_Z(
    data: &ScatteringData,
    z: Complex64,
    t: f64,
    precision_bits: usize,
) -> Result<LogDetResult> {
    check_precision(precision_bits)?;
    check_strip(data, z, t)?;
    let mut ctx = Ctx::new(precision_bits)?;
    log_det_with(&mut ctx, data, z, t)
}

/// Exponent of the subset term S for the determinant at z.
fn subset_weights(
    ctx: &mut Ctx,
    data: &ScatteringData,
    nd: &[Node],
    z: Complex64,
    t: f64,
) -> (Vec<Cx>, Vec<Vec<BigFloat>>) {
    let eps = ctx.real(data.eps);
    let two = ctx.real(2.0);
    let (x, y, tb) = (ctx.real(z.re), ctx.real(z.im), ctx.real(t));
    let mut single = Vec::with_capacity(nd.len());
    for node in nd {
        let k = ctx.real(node.kappa);
        let two_k_over_eps = ctx.rdiv(&ctx.rmul(&two, &k), &eps);
        let qt = ctx.rdiv(&ctx.rmul(&ctx.rmul(&two, &ctx.real(node.quad)), &tb), &eps);
        let diag = ctx.rln(&ctx.rmul(&two, &k));
        let re = ctx.rsub(
            &ctx.rsub(
                &ctx.rsub(&ctx.real(node.log_c), &ctx.rmul(&two_k_over_eps, &x)),
                &qt,
            ),
            &diag,
        );
        let im = ctx.rmul(&two_k_over_eps, &y).neg();
        single.push(Cx { re, im });
    }
    let mut pair = vec![vec![ctx.real(0.0); nd.len()]; nd.len()];
    for i in 0..nd.len() {
        for j in i + 1..nd.len() {
            let zi = ctx.cx(nd[i].zeta);
            let num = ctx.norm_sqr(&ctx.sub(&zi, &ctx.cx(nd[j].zeta)));
            let den = ctx.norm_sqr(&ctx.sub(&zi, &ctx.cx(nd[j].zeta.conj())));
            // -2 g(ζ_i, ζ_j) = ln(|ζ_i - ζ_j|² / |ζ_i - conj ζ_j|²)
            let v = ctx.rln(&ctx.rdiv(&num, &den));
            pair[i][j] = v.clone();
            pair[j][i] = v;
        }
    }
    (single, pair)
}

/// Σ over subsets S of exp(-(2/πε²) E_{N,S}(z, t)), summed term by term.
pub fn fredholm_sum(data: &ScatteringData, z: Complex64, t: f64) -> Result<LogDetResult> {
    fredholm_sum_with(data, z, t, DEFAULT_PRECISION_BITS)
}

pub fn fredholm_sum_with(
    data: &ScatteringData,
    z: Complex64,
    t: f64,
    precision_bits: usize,
) -> Result<LogDetResult> {
    let n = data.n;
    if n > FREDHOLM_MAX_N {
        return Err(Error::Size(format!(
            "subset expansion needs 2^N terms; N = {n} exceeds {FREDHOLM_MAX_N}"
        )));
    }
    check_precision(precision_bits)?;
    check_strip(data, z, t)?;
    let mut ctx = Ctx::new(precision_bits)?;
    let nd = nodes(data);
    let (single, pair) = subset_weights(&mut ctx, data, &nd, z, t);
    let count = 1usize << n;
    // Real parts in f64 to skip terms far below the working precision.
    let single_f: Vec<f64> = single.iter().map(|s| big_to_f64(&s.re)).collect();
    let pair_f: Vec<Vec<f64>> = pair
        .iter()
        .map(|r| r.iter().map(big_to_f64).collect())
        .collect();
    let mut re_f = vec![0.0f64; count];
    for mask in 1..count {
        let top = usize::BITS as usize - 1 - mask.leading_zeros() as usize;
        let rest = mask & !(1 << top);
        let mut v = re_f[rest] + single_f[top];
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            v += pair_f[top][j];
            bits &= bits - 1;
        }
        re_f[mask] = v;
    }
    let peak = re_f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cutoff = peak - (precision_bits as f64 * std::f64::consts::LN_2 + 40.0);
    let mut sum = ctx.zero();
    for (mask, &r) in re_f.iter().enumerate() {
        if r < cutoff {
            continue;
        }
        let mut e = ctx.zero();
        let mut bits = mask;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            e = ctx.add(&e, &single[i]);
            let mut later = bits & (bits - 1);
            while later != 0 {
                let j = later.trailing_zeros() as usize;
                e.re = ctx.radd(&e.re, &pair[i][j]);
                later &= later - 1;
            }
            bits &= bits - 1;
        }
        let term = ctx.exp(&e);
        sum = ctx.add(&sum, &term);
    }
    let log_mag = ctx.ln_abs(&sum);
    let arg = if z.im == 0.0 {
        ctx.real(0.0)
    } else {
        ctx.arg(&sum)
    };
    Ok(LogDetResult {
        log_mag,
        arg,
        precision_bits,
    })
}

/// The discrete kernel: ln|(ζ - conj λ)/(ζ - λ)|, or ln|ζ - conj ζ| on the diagonal.
pub fn green_regulated(zeta: Complex64, lambda: Complex64) -> f64 {
    if zeta == lambda {
        (zeta - zeta.conj()).norm().ln()
    } else {
        ((zeta - lambda.conj()).norm() / (zeta - lambda).norm()).ln()
    }
}

/// External potential V(ζ_n; x, t) = x κ_n + t Im[(ζ_n - 1/2δ)²] - θ₊(ζ_n).
fn potential(node: &Node, eps: f64, x: f64, t: f64) -> f64 {
    x * node.kappa + t * node.quad - 0.5 * eps * node.log_c
}

/// (E_{N,S}, P_S, Q_S) for a subset S of 0-based indices at real x.
pub fn discrete_energy(
    data: &ScatteringData,
    subset: &[usize],
    x: f64,
    t: f64,
) -> Result<(f64, f64, f64)> {
    let nd = nodes(data);
    for (k, &i) in subset.iter().enumerate() {
        if i >= nd.len() || subset[..k].contains(&i) {
            return Err(Error::Domain(format!(
                "subset index {i} is repeated or outside 0..{}",
                nd.len()
            )));
        }
    }
    let w = data.eps * PI;
    let mut e = 0.0;
    let mut p = 0.0;
    let mut q = 0.0;
    for &i in subset {
        e += w * potential(&nd[i], data.eps, x, t);
        p += w * nd[i].kappa;
        q += w * nd[i].quad;
        for &j in subset {
            e += w * w / (2.0 * PI) * green_regulated(nd[j].zeta, nd[i].zeta);
        }
    }
    Ok((e, p, q))
}

/// min over subsets of E_{N,S}(x, t), with the minimizing subset.
pub fn energy_minimum(data: &ScatteringData, x: f64, t: f64) -> Result<(f64, Vec<usize>)> {
    let n = data.n;
    if n > FREDHOLM_MAX_N {
        return Err(Error::Size(format!(
            "brute-force minimum over 2^N subsets; N = {n} exceeds {FREDHOLM_MAX_N}"
        )));
    }
    let nd = nodes(data);
    let w = data.eps * PI;
    let c = w * w / (2.0 * PI);
    let single: Vec<f64> = nd
        .iter()
        .map(|a| w * potential(a, data.eps, x, t) + c * green_regulated(a.zeta, a.zeta))
        .collect();
    let pair: Vec<Vec<f64>> = nd
        .iter()
        .map(|a| {
            nd.iter()
                .map(|b| 2.0 * c * green_regulated(a.zeta, b.zeta))
                .collect()
        })
        .collect();
    let count = 1usize << n;
    let mut e = vec![0.0f64; count];
    let mut best = (0.0, 0usize);
    for mask in 1..count {
        let top = usize::BITS as usize - 1 - mask.leading_zeros() as usize;
        let rest = mask & !(1 << top);
        let mut v = e[rest] + single[top];
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            v += pair[top][j];
            bits &= bits - 1;
        }
        e[mask] = v;
        if v < best.0 {
            best = (v, mask);
        }
    }
    let members = (0..n).filter(|i| best.1 & (1 << i) != 0).collect();
    Ok((best.0, members))
}

/// Q_{Z_N} = επ Σ Im[(ζ_n - 1/2δ)²].
pub fn quadrupole(data: &ScatteringData) -> f64 {
    data.eps * PI * nodes(data).iter().map(|n| n.quad).sum::<f64>()
}

/// ∫ (u^SSE_N)² dx predicted by the quadrupole moment: -(4δ/π) Q_{Z_N}.
pub fn l2_squared_prediction(data: &ScatteringData) -> f64 {
    -4.0 * data.delta / PI * quadrupole(data)
}

/// u^SSE_N at one point from the diagonal of (I + Δ)⁻¹ at z = x + iδε:
/// u = 4 Σ κ_n Im[(I + Δ)⁻¹]_nn.
fn field_point(ctx: &mut Ctx, data: &ScatteringData, nd: &[Node], c: &[Vec<Cx>], x: f64, t: f64) -> Result<f64> {
    let z = Complex64::new(x, data.delta * data.eps);
    let e = evaluate(ctx, data, nd, c, z, t, true)?;
    Ok(4.0
        * nd
            .iter()
            .zip(&e.resolvent)
            .map(|(n, g)| n.kappa * g.im)
            .sum::<f64>())
}

/// u^SSE_N(x, t) on a grid. The x-derivative of ln Z is taken analytically,
/// ∂_x ln Z = -(2/ε) Σ κ_n (1 - [(I + Δ)⁻¹]_nn), which is exact.
pub fn ensemble_field(
    data: &ScatteringData,
    x_grid: &[f64],
    t: f64,
    precision_bits: usize,
) -> Result<Vec<f64>> {
    check_precision(precision_bits)?;
    if data.n == 0 {
        return Ok(vec![0.0; x_grid.len()]);
    }
    let nd = nodes(data);
    x_grid
        .par_iter()
        .map_init(
            || Ctx::new(precision_bits).map(|ctx| {
                let c = cauchy(&ctx, &nd);
                (ctx, c)
            }),
            |state, &x| match state {
                Ok((ctx, c)) => {
                    check_strip(data, Complex64::new(x, 0.0), t)?;
                    field_point(ctx, data, &nd, c, x, t)
                }
                Err(e) => Err(e.clone()),
            },
        )
        .collect()
}

/// D_{iδε} F_N(x, t) = (F_N(x + iδε) - F_N(x - iδε)) / (2iδε), F_N = 2δε² ln Z_N.
pub fn free_energy_difference(
    data: &ScatteringData,
    x: f64,
    t: f64,
    precision_bits: usize,
) -> Result<f64> {
    let y = data.delta * data.eps;
    let up = log_det_Z(data, Complex64::new(x, y), t, precision_bits)?;
    let down = log_det_Z(data, Complex64::new(x, -y), t, precision_bits)?;
    let diff = up.log_z() - down.log_z();
    let f = 2.0 * data.delta * data.eps * data.eps * diff / Complex64::new(0.0, 2.0 * y);
    Ok(f.re)
}

/// u^SSE_N by the fourth-order central difference of D_{iδε}F_N with step ε_N/20.
pub fn ensemble_field_fd(
    data: &ScatteringData,
    x_grid: &[f64],
    t: f64,
    precision_bits: usize,
) -> Result<Vec<f64>> {
    let h = data.eps / 20.0;
    x_grid
        .par_iter()
        .map(|&x| {
            let f = |k: f64| free_energy_difference(data, x + k * h, t, precision_bits);
            Ok((f(-2.0)? - 8.0 * f(-1.0)? + 8.0 * f(1.0)? - f(2.0)?) / (12.0 * h))
        })
        .collect()
}

/// d(θ) = 1 on [0, π/2], sin θ on (π/2, π].
pub fn d_factor(theta: f64) -> f64 {
    if theta <= 0.5 * PI {
        1.0
    } else if theta <= PI {
        theta.sin()
    } else {
        0.0
    }
}

/// Margins of the magnitude and argument bounds on Z_N at one point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsReport {
    pub z: Complex64,
    pub t: f64,
    pub kappa_max: f64,
    pub log_abs_z: f64,
    pub arg: f64,
    pub log_lower: f64,
    pub log_upper: f64,
    pub arg_bound: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub arg_margin: f64,
    pub holds: bool,
}

/// Checks d(2κ_max|y|/ε)^N ≤ |Z_N| ≤ 2^N exp(-(2/ε²π) E^min_N) and
/// 0 ≤ -sgn(y) arg Z_N ≤ 2Nκ_max|y|/ε, with κ_max the largest κ_n.
pub fn bounds_check(
    data: &ScatteringData,
    z: Complex64,
    t: f64,
    precision_bits: usize,
) -> Result<BoundsReport> {
    let kmax = data.kappas().into_iter().fold(0.0, f64::max);
    bounds_check_with(data, z, t, precision_bits, kmax)
}

pub fn bounds_check_with(
    data: &ScatteringData,
    z: Complex64,
    t: f64,
    precision_bits: usize,
    kappa_max: f64,
) -> Result<BoundsReport> {
    let n = data.n as f64;
    let eps = data.eps;
    let ld = log_det_Z(data, z, t, precision_bits)?;
    let (e_min, _) = energy_minimum(data, z.re, t)?;
    let theta = 2.0 * kappa_max * z.im.abs() / eps;
    let log_lower = n * d_factor(theta).ln();
    let log_upper = n * std::f64::consts::LN_2 - 2.0 / (eps * eps * PI) * e_min;
    let log_abs_z = ld.log_mag_f64();
    let arg = ld.arg_f64();
    let arg_bound = n * theta;
    let signed = -z.im.signum() * arg;
    let arg_margin = if z.im == 0.0 {
        -arg.abs()
    } else {
        signed.min(arg_bound - signed)
    };
    let lower_margin = log_abs_z - log_lower;
    let upper_margin = log_upper - log_abs_z;
    Ok(BoundsReport {
        z,
        t,
        kappa_max,
        log_abs_z,
        arg,
        log_lower,
        log_upper,
        arg_bound,
        lower_margin,
        upper_margin,
        arg_margin,
        holds: lower_margin >= 0.0 && upper_margin >= 0.0 && arg_margin >= 0.0,
    })
}

/// Inputs of one ensemble evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub precision_bits: usize,
    pub x_window: (f64, f64),
    pub t: f64,
    pub data: ScatteringData,
}

impl EnsembleConfig {
    pub fn new(data: ScatteringData, x_window: (f64, f64), t: f64) -> Self {
        EnsembleConfig {
            precision_bits: DEFAULT_PRECISION_BITS,
            x_window,
            t,
            data,
        }
    }

    /// 64 + (2/ln 2)(max|θ₊|/ε + Nκ_max X/ε): the bits an unscaled Δ would need
    /// to hold its entries. The scaled decomposition does not rely on it.
    pub fn exponent_budget_bits(&self) -> usize {
        let d = &self.data;
        let theta = d
            .log_c
            .iter()
            .map(|l| (0.5 * d.eps * l).abs())
            .fold(0.0, f64::max);
        let kmax = d.kappas().into_iter().fold(0.0, f64::max);
        let x = self.x_window.0.abs().max(self.x_window.1.abs());
        let c = 2.0 / std::f64::consts::LN_2;
        (64.0 + c * theta / d.eps + c * d.n as f64 * kmax * x / d.eps).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        check_precision(self.precision_bits)?;
        let (a, b) = self.x_window;
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Validation(format!("x window ({a}, {b}) is empty")));
        }
        if !self.t.is_finite() {
            return Err(Error::Validation("t must be finite".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{build_profile, ProfileSpec};
    use crate::scattering::modified_data;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data(n: usize) -> ScatteringData {
        let p = build_profile(&ProfileSpec::sech2()).unwrap();
        modified_data(&p, n, 0.5).unwrap()
    }

    #[test]
    fn empty_data_gives_zero() {
        let d = ScatteringData::from_parts(0.1, 0.5, &[], &[]).unwrap();
        let r = log_det_Z(&d, Complex64::new(0.3, 0.02), 0.1, 128).unwrap();
        assert_eq!(r.log_mag_f64(), 0.0);
        assert_eq!(r.arg_f64(), 0.0);
    }

    #[test]
    fn single_eigenvalue_closed_form() {
        let d = ScatteringData::from_parts(0.2, 0.5, &[0.7], &[3.0]).unwrap();
        for (x, y) in [(0.0, 0.0), (1.3, 0.06), (-2.0, -0.1), (15.0, 0.1)] {
            let z = Complex64::new(x, y);
            let k = 0.7;
            let delta11 = (3.0 - 2.0 * k * z / 0.2).exp() / (2.0 * k);
            let q = 2.0 * (d.eigen[0].zeta.re - 1.0) * k;
            let delta11 = delta11 * (-2.0 * q * 0.4 / 0.2f64).exp();
            let want = (1.0 + delta11).ln();
            let got = log_det_Z(&d, z, 0.4, 192).unwrap().log_z();
            assert!((got - want).norm() < 1e-13 * (1.0 + want.norm()), "{z}: {got} vs {want}");
        }
    }

    #[test]
    fn factors_reproduce_the_entries() {
        let d = data(3);
        let z = Complex64::new(0.4, 0.3 * d.delta * d.eps);
        let f = delta_matrix(&d, z, 0.2, 128).unwrap();
        for n in 0..3 {
            let zn = d.eigen[n].zeta;
            assert!((f.cauchy[n][n] - 1.0 / (2.0 * d.eigen[n].kappa)).norm() < 1e-15);
            for l in 0..3 {
                let zl = d.eigen[l].zeta;
                let q = |w: Complex64| ((w - 1.0) * (w - 1.0)).im;
                let expo = -(zn + zl).im * z / d.eps - (q(zn) + q(zl)) * 0.2 / d.eps
                    + 0.5 * (d.log_c[n] + d.log_c[l]);
                let want = expo + (Complex64::i() / (zl - zn.conj())).ln();
                let got = f.log_entry(n, l);
                let diff = got - want;
                let wrapped = Complex64::new(diff.re, (diff.im + PI).rem_euclid(2.0 * PI) - PI);
                assert!(wrapped.norm() < 1e-10, "({n},{l}): {got} vs {want}");
            }
        }
        assert!(delta_matrix(&d, Complex64::new(0.0, 2.0 * d.delta * d.eps), 0.0, 128).is_err());
    }

    #[test]
    fn lu_agrees_with_subset_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 4] {
            let d = data(n);
            for _ in 0..4 {
                let z = Complex64::new(
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-1.0..1.0) * d.delta * d.eps,
                );
                let t = rng.gen_range(0.0..0.5);
                let a = log_det_Z(&d, z, t, 256).unwrap();
                let b = fredholm_sum(&d, z, t).unwrap();
                let rel = (a.log_mag_f64() - b.log_mag_f64()).abs() / a.log_mag_f64().abs().max(1.0);
                assert!(rel < 1e-12, "N={n} z={z}: {} vs {}", a.log_mag_f64(), b.log_mag_f64());
                let dphi = (a.arg_f64() - b.arg_f64()).rem_euclid(2.0 * PI);
                assert!(dphi.min(2.0 * PI - dphi) < 1e-10);
            }
        }
    }

    #[test]
    fn real_axis_is_positive_and_conjugate_symmetric() {
        let d = data(5);
        let r = log_det_Z(&d, Complex64::new(0.2, 0.0), 0.1, 256).unwrap();
        assert_eq!(r.arg_f64(), 0.0);
        assert!(r.log_mag_f64() >= 0.0);
        let y = 0.7 * d.delta * d.eps;
        let up = log_det_Z(&d, Complex64::new(0.2, y), 0.1, 256).unwrap();
        let down = log_det_Z(&d, Complex64::new(0.2, -y), 0.1, 256).unwrap();
        assert!((up.log_mag_f64() - down.log_mag_f64()).abs() < 1e-12 * up.log_mag_f64().abs());
        assert!((up.arg_f64() + down.arg_f64()).abs() < 1e-12);
        assert!(up.arg_f64() < 0.0);
    }

    #[test]
    fn singleton_energy_matches_hand_expansion() {
        let d = data(4);
        let (e, p, q) = discrete_energy(&d, &[], 0.3, 0.1).unwrap();
        assert_eq!((e, p, q), (0.0, 0.0, 0.0));
        let (e, p, _) = discrete_energy(&d, &[2], 0.3, 0.1).unwrap();
        let nd = nodes(&d)[2];
        let w = d.eps * PI;
        let want = w * potential(&nd, d.eps, 0.3, 0.1)
            + d.eps * d.eps * PI / 2.0 * (2.0 * nd.kappa).ln();
        assert!((e - want).abs() < 1e-14);
        assert!((p - w * nd.kappa).abs() < 1e-15);
        let (a, b) = (d.eigen[0].zeta, d.eigen[3].zeta);
        assert_eq!(green_regulated(a, b), green_regulated(b, a));
        assert!(discrete_energy(&d, &[1, 1], 0.0, 0.0).is_err());
    }

    #[test]
    fn bounds_hold_on_and_off_axis() {
        let d = data(6);
        for (x, frac) in [(0.0, 0.0), (1.0, 1.0), (-0.5, -0.6), (3.0, 0.3)] {
            let z = Complex64::new(x, frac * d.delta * d.eps);
            let r = bounds_check(&d, z, 0.2, 256).unwrap();
            assert!(r.holds, "{r:?}");
        }
    }

    #[test]
    fn trace_field_matches_finite_difference() {
        let d = data(3);
        let xs = [-0.5, 0.0, 0.7];
        let a = ensemble_field(&d, &xs, 0.1, 192).unwrap();
        let b = ensemble_field_fd(&d, &xs, 0.1, 192).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-6 * (1.0 + u.abs()), "{u} vs {v}");
        }
    }

    #[test]
    fn precision_floor_is_enforced() {
        let d = data(2);
        assert!(matches!(
            log_det_Z(&d, Complex64::new(0.0, 0.0), 0.0, 64),
            Err(Error::Precision(_))
        ));
        assert!(matches!(
            fredholm_sum(&data(2), Complex64::new(0.0, 0.0), 0.0),
            Ok(_)
        ));
    }
}
