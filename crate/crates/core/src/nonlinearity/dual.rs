use std::ops::{Add, Div, Mul, Neg, Sub};

/// A value with its two partial derivatives with respect to `u` and `v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub du: f64,
    pub dv: f64,
}

impl Dual {
    pub const fn constant(re: f64) -> Self {
        Self { re, du: 0.0, dv: 0.0 }
    }

    pub const fn var_u(re: f64) -> Self {
        Self { re, du: 1.0, dv: 0.0 }
    }

    pub const fn var_v(re: f64) -> Self {
        Self { re, du: 0.0, dv: 1.0 }
    }

    pub fn is_constant(&self) -> bool {
        self.du == 0.0 && self.dv == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.du.is_finite() && self.dv.is_finite()
    }

    /// Applies a scalar function with value `f` and derivative `df` at `self.re`.
    /// A zero inner derivative stays zero even when `df` is infinite.
    pub fn chain(self, f: f64, df: f64) -> Self {
        let scale = |d: f64| if d == 0.0 { 0.0 } else { df * d };
        Self {
            re: f,
            du: scale(self.du),
            dv: scale(self.dv),
        }
    }

    pub fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }

    pub fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }

    pub fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }

    pub fn ln(self) -> Self {
        self.chain(self.re.ln(), 1.0 / self.re)
    }

    pub fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, 0.5 / s)
    }

    /// |x| with derivative sign(x), taken as 0 at x = 0.
    pub fn abs(self) -> Self {
        let sign = if self.re > 0.0 {
            1.0
        } else if self.re < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(self.re.abs(), sign)
    }

    /// Power with a constant real exponent.
    pub fn powf(self, b: f64) -> Self {
        if b == 0.0 {
            return Self::constant(1.0);
        }
        let d = if b == 1.0 { 1.0 } else { b * self.re.powf(b - 1.0) };
        self.chain(self.re.powf(b), d)
    }

    /// Power with a non-constant exponent, exp(b ln a).
    pub fn pow(self, b: Self) -> Self {
        (b * self.ln()).exp()
    }
}

impl Add for Dual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            re: self.re + o.re,
            du: self.du + o.du,
            dv: self.dv + o.dv,
        }
    }
}

impl Sub for Dual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            re: self.re - o.re,
            du: self.du - o.du,
            dv: self.dv - o.dv,
        }
    }
}

impl Mul for Dual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            re: self.re * o.re,
            du: self.du * o.re + self.re * o.du,
            dv: self.dv * o.re + self.re * o.dv,
        }
    }
}

impl Div for Dual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.re;
        let q = self.re * inv;
        Self {
            re: q,
            du: (self.du - q * o.du) * inv,
            dv: (self.dv - q * o.dv) * inv,
        }
    }
}

impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            re: -self.re,
            du: -self.du,
            dv: -self.dv,
        }
    }
}
