//! Complex arithmetic on `astro_float::BigFloat` with a per-evaluation context.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub(crate) struct Cx {
    pub re: BigFloat,
    pub im: BigFloat,
}

/// Working precision, rounding mode and constants cache.
pub(crate) struct Ctx {
    pub p: usize,
    rm: RoundingMode,
    cc: Consts,
}

/// Nearest f64 to a big float (truncating the mantissa).
pub fn big_to_f64(x: &BigFloat) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    if x.is_zero() {
        return 0.0;
    }
    let Some((m, _, s, e, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let top = *m.last().unwrap_or(&0) as f64 / 18_446_744_073_709_551_616.0;
    let e = e as i32;
    let v = if e > 1100 {
        f64::INFINITY
    } else if e < -1100 {
        0.0
    } else {
        top * 2f64.powi(e)
    };
    if s == Sign::Neg {
        -v
    } else {
        v
    }
}

impl Ctx {
    pub fn new(p: usize) -> Result<Self> {
        let cc = Consts::new()
            .map_err(|e| Error::Precision(format!("constants cache: {e:?}")))?;
        Ok(Ctx {
            p,
            rm: RoundingMode::ToEven,
            cc,
        })
    }

    pub fn real(&self, v: f64) -> BigFloat {
        BigFloat::from_f64(v, self.p)
    }

    pub fn cx(&self, v: Complex64) -> Cx {
        Cx {
            re: self.real(v.re),
            im: self.real(v.im),
        }
    }

    pub fn zero(&self) -> Cx {
        self.cx(Complex64::new(0.0, 0.0))
    }

    pub fn one(&self) -> Cx {
        self.cx(Complex64::new(1.0, 0.0))
    }

    pub fn radd(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.p, self.rm)
    }

    pub fn rsub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.p, self.rm)
    }

    pub fn rmul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.p, self.rm)
    }

    pub fn rdiv(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.p, self.rm)
    }

    pub fn rexp(&mut self, a: &BigFloat) -> BigFloat {
        a.exp(self.p, self.rm, &mut self.cc)
    }

    pub fn rln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(self.p, self.rm, &mut self.cc)
    }

    pub fn pi(&mut self) -> BigFloat {
        self.cc.pi(self.p, self.rm)
    }

    pub fn add(&self, a: &Cx, b: &Cx) -> Cx {
        Cx {
            re: self.radd(&a.re, &b.re),
            im: self.radd(&a.im, &b.im),
        }
    }

    pub fn sub(&self, a: &Cx, b: &Cx) -> Cx {
        Cx {
            re: self.rsub(&a.re, &b.re),
            im: self.rsub(&a.im, &b.im),
        }
    }

    pub fn mul(&self, a: &Cx, b: &Cx) -> Cx {
        Cx {
            re: self.rsub(&self.rmul(&a.re, &b.re), &self.rmul(&a.im, &b.im)),
            im: self.radd(&self.rmul(&a.re, &b.im), &self.rmul(&a.im, &b.re)),
        }
    }

    pub fn scale(&self, a: &Cx, s: &BigFloat) -> Cx {
        Cx {
            re: self.rmul(&a.re, s),
            im: self.rmul(&a.im, s),
        }
    }

    pub fn norm_sqr(&self, a: &Cx) -> BigFloat {
        self.radd(&self.rmul(&a.re, &a.re), &self.rmul(&a.im, &a.im))
    }

    pub fn div(&self, a: &Cx, b: &Cx) -> Cx {
        let d = self.norm_sqr(b);
        let re = self.radd(&self.rmul(&a.re, &b.re), &self.rmul(&a.im, &b.im));
        let im = self.rsub(&self.rmul(&a.im, &b.re), &self.rmul(&a.re, &b.im));
        Cx {
            re: self.rdiv(&re, &d),
            im: self.rdiv(&im, &d),
        }
    }

    pub fn exp(&mut self, a: &Cx) -> Cx {
        let m = self.rexp(&a.re);
        let c = a.im.cos(self.p, self.rm, &mut self.cc);
        let s = a.im.sin(self.p, self.rm, &mut self.cc);
        Cx {
            re: self.rmul(&m, &c),
            im: self.rmul(&m, &s),
        }
    }

    /// ln |a|.
    pub fn ln_abs(&mut self, a: &Cx) -> BigFloat {
        let n = self.norm_sqr(a);
        let l = self.rln(&n);
        self.rmul(&l, &self.real(0.5))
    }

    /// Principal argument in (-π, π].
    pub fn arg(&mut self, a: &Cx) -> BigFloat {
        let zero = self.real(0.0);
        if a.re.is_zero() {
            let pi = self.pi();
            let half_pi = self.rmul(&pi, &self.real(0.5));
            return if a.im.is_negative() {
                half_pi.neg()
            } else if a.im.is_zero() {
                zero
            } else {
                half_pi
            };
        }
        let ratio = self.rdiv(&a.im, &a.re);
        let base = ratio.atan(self.p, self.rm, &mut self.cc);
        if a.re.is_positive() {
            base
        } else if a.im.is_negative() {
            let pi = self.pi();
            self.rsub(&base, &pi)
        } else {
            let pi = self.pi();
            self.radd(&base, &pi)
        }
    }

    pub fn to_c64(&self, a: &Cx) -> Complex64 {
        Complex64::new(big_to_f64(&a.re), big_to_f64(&a.im))
    }

    /// log2 |a| from the binary exponents, accurate to about one unit.
    pub fn log2_abs_rough(&self, a: &Cx) -> f64 {
        let e = |x: &BigFloat| -> Option<f64> {
            if x.is_zero() {
                None
            } else {
                x.exponent().map(|e| e as f64)
            }
        };
        match (e(&a.re), e(&a.im)) {
            (Some(u), Some(v)) => u.max(v),
            (Some(u), None) | (None, Some(u)) => u,
            (None, None) => f64::NEG_INFINITY,
        }
    }

    pub fn is_finite(&self, a: &Cx) -> bool {
        !(a.re.is_nan() || a.im.is_nan() || a.re.is_inf() || a.im.is_inf())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_f64() {
        let ctx = Ctx::new(256).unwrap();
        for v in [1.5, -2.25e-7, 3.0e200, -1.0e-300, 0.0, std::f64::consts::PI] {
            assert_eq!(big_to_f64(&ctx.real(v)), v);
        }
    }

    #[test]
    fn complex_ops_match_f64() {
        let mut ctx = Ctx::new(192).unwrap();
        let a = Complex64::new(0.3, -1.7);
        let b = Complex64::new(-2.1, 0.4);
        let (ba, bb) = (ctx.cx(a), ctx.cx(b));
        assert!((ctx.to_c64(&ctx.div(&ba, &bb)) - a / b).norm() < 1e-15);
        assert!((ctx.to_c64(&ctx.mul(&ba, &bb)) - a * b).norm() < 1e-15);
        let e = ctx.exp(&ba);
        assert!((ctx.to_c64(&e) - a.exp()).norm() < 1e-15);
        for w in [a, b, Complex64::new(-1.0, 0.0), Complex64::new(-1.0, -1e-3)] {
            let bw = ctx.cx(w);
            let (g, l) = (ctx.arg(&bw), ctx.ln_abs(&bw));
            assert!((big_to_f64(&g) - w.arg()).abs() < 1e-15, "{w}");
            assert!((big_to_f64(&l) - w.norm().ln()).abs() < 1e-15);
        }
    }
}
