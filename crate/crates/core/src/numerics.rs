//! Log-domain accumulation and a small double-double type.

/// `ln Σ exp(x_i)`, stable for large magnitudes. Returns `-∞` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Weighted sums `Σ w(σ) v_k(σ)` with weights supplied in the log domain.
///
/// The accumulator keeps every sum relative to the largest log-weight seen so
/// far and rescales when a larger one arrives, so `exp` never overflows.
#[derive(Debug, Clone)]
pub struct LogWeightedSums {
    log_scale: f64,
    total: f64,
    sums: Vec<f64>,
}

impl LogWeightedSums {
    pub fn new(dim: usize) -> Self {
        LogWeightedSums {
            log_scale: f64::NEG_INFINITY,
            total: 0.0,
            sums: vec![0.0; dim],
        }
    }

    /// Adds one term. `contribute` receives the relative weight and adds
    /// `weight * value_k` into the slots it cares about.
    #[inline]
    pub fn push(&mut self, log_weight: f64, contribute: impl FnOnce(f64, &mut [f64])) {
        if log_weight > self.log_scale {
            self.rescale(log_weight);
        }
        let w = (log_weight - self.log_scale).exp();
        self.total += w;
        contribute(w, &mut self.sums);
    }

    fn rescale(&mut self, new_scale: f64) {
        let factor = (self.log_scale - new_scale).exp();
        self.total *= factor;
        for s in &mut self.sums {
            *s *= factor;
        }
        self.log_scale = new_scale;
    }

    pub fn merge(&mut self, mut other: LogWeightedSums) {
        debug_assert_eq!(self.sums.len(), other.sums.len());
        if other.log_scale == f64::NEG_INFINITY {
            return;
        }
        if other.log_scale > self.log_scale {
            self.rescale(other.log_scale);
        } else {
            other.rescale(self.log_scale);
        }
        self.total += other.total;
        for (a, b) in self.sums.iter_mut().zip(other.sums) {
            *a += b;
        }
    }

    /// `ln Σ w`.
    pub fn log_total(&self) -> f64 {
        self.log_scale + self.total.ln()
    }

    /// `Σ w v_k / Σ w` for every slot.
    pub fn means(&self) -> Vec<f64> {
        self.sums.iter().map(|s| s / self.total).collect()
    }
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`, about 32 significant digits.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

// Plain methods rather than operator traits keep the call sites explicit about precision.
#[allow(clippy::should_implement_trait)]
impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DoubleDouble = DoubleDouble { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let (t, f) = two_sum(self.lo, other.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DoubleDouble { hi, lo }
    }

    pub fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn sub(self, other: Self) -> Self {
        self.add(other.neg())
    }

    pub fn mul(self, other: Self) -> Self {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + (self.hi * other.lo + self.lo * other.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }

    pub fn div(self, other: Self) -> Self {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul(DoubleDouble::from_f64(q1)));
        let q2 = r.hi / other.hi;
        let r = r.sub(other.mul(DoubleDouble::from_f64(q2)));
        let q3 = r.hi / other.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo }.add(DoubleDouble::from_f64(q3))
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return DoubleDouble::ZERO;
        }
        let x = self.hi.sqrt();
        // one Newton correction: x + (a - x²) / 2x
        let x_dd = DoubleDouble::from_f64(x);
        let residual = self.sub(x_dd.mul(x_dd));
        x_dd.add(DoubleDouble::from_f64(residual.hi / (2.0 * x)))
    }
}

/// Complex number over [`DoubleDouble`] parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexDd {
    pub re: DoubleDouble,
    pub im: DoubleDouble,
}

#[allow(clippy::should_implement_trait)]
impl ComplexDd {
    pub const ZERO: ComplexDd = ComplexDd {
        re: DoubleDouble::ZERO,
        im: DoubleDouble::ZERO,
    };

    pub fn new(re: f64, im: f64) -> Self {
        ComplexDd {
            re: DoubleDouble::from_f64(re),
            im: DoubleDouble::from_f64(im),
        }
    }

    pub fn add(self, o: Self) -> Self {
        ComplexDd {
            re: self.re.add(o.re),
            im: self.im.add(o.im),
        }
    }

    pub fn sub(self, o: Self) -> Self {
        ComplexDd {
            re: self.re.sub(o.re),
            im: self.im.sub(o.im),
        }
    }

    pub fn mul(self, o: Self) -> Self {
        ComplexDd {
            re: self.re.mul(o.re).sub(self.im.mul(o.im)),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    pub fn scale(self, s: DoubleDouble) -> Self {
        ComplexDd {
            re: self.re.mul(s),
            im: self.im.mul(s),
        }
    }

    pub fn norm_sqr(self) -> DoubleDouble {
        self.re.mul(self.re).add(self.im.mul(self.im))
    }

    pub fn div(self, o: Self) -> Self {
        let denom = o.norm_sqr();
        let num = self.mul(ComplexDd {
            re: o.re,
            im: o.im.neg(),
        });
        ComplexDd {
            re: num.re.div(denom),
            im: num.im.div(denom),
        }
    }

    pub fn abs(self) -> DoubleDouble {
        self.norm_sqr().sqrt()
    }

    pub fn to_f64(self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}
