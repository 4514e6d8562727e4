//! Truncated bivariate Taylor series around a point.
//!
//! A `Jet` of order `N` stores the coefficients `c_{ab}` of
//! `sum_{a+b <= N} c_{ab} dx^a dy^b`. Derivatives drop the order by one, and
//! binary operations truncate to the smaller order.

use std::ops::{Add, Mul, Neg, Sub};

/// Position of the monomial `dx^a dy^b` in the coefficient vector.
#[inline]
pub fn index(a: usize, b: usize) -> usize {
    let t = a + b;
    t * (t + 1) / 2 + b
}

fn len(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    order: usize,
    c: Vec<f64>,
}

impl Jet {
    pub fn constant(v: f64, order: usize) -> Self {
        let mut c = vec![0.0; len(order)];
        c[0] = v;
        Self { order, c }
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(0.0, order)
    }

    /// The coordinate function `x` around `x0`.
    pub fn var_x(x0: f64, order: usize) -> Self {
        let mut j = Self::constant(x0, order);
        if order > 0 {
            j.c[index(1, 0)] = 1.0;
        }
        j
    }

    pub fn var_y(y0: f64, order: usize) -> Self {
        let mut j = Self::constant(y0, order);
        if order > 0 {
            j.c[index(0, 1)] = 1.0;
        }
        j
    }

    /// Build from Taylor coefficients given as a function of `(a, b)`.
    pub fn from_fn(order: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut c = vec![0.0; len(order)];
        for t in 0..=order {
            for b in 0..=t {
                c[index(t - b, b)] = f(t - b, b);
            }
        }
        Self { order, c }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Taylor coefficient of `dx^a dy^b`.
    pub fn coeff(&self, a: usize, b: usize) -> f64 {
        if a + b > self.order {
            0.0
        } else {
            self.c[index(a, b)]
        }
    }

    /// The partial derivative `d^{a+b} f / dx^a dy^b` at the centre.
    pub fn derivative(&self, a: usize, b: usize) -> f64 {
        self.coeff(a, b) * factorial(a) * factorial(b)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Self { order, c: self.c[..len(order)].to_vec() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { order: self.order, c: self.c.iter().map(|x| x * s).collect() }
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        let mut j = self.clone();
        j.c[0] += s;
        j
    }

    pub fn dx(&self) -> Self {
        let order = self.order.saturating_sub(1);
        Self::from_fn(order, |a, b| if self.order == 0 { 0.0 } else { (a + 1) as f64 * self.coeff(a + 1, b) })
    }

    pub fn dy(&self) -> Self {
        let order = self.order.saturating_sub(1);
        Self::from_fn(order, |a, b| if self.order == 0 { 0.0 } else { (b + 1) as f64 * self.coeff(a, b + 1) })
    }

    /// `sum_k w_k g^k` for the nilpotent part `g = f - f(0)`.
    fn series(&self, weights: &[f64]) -> Self {
        let mut g = self.clone();
        g.c[0] = 0.0;
        let mut out = Self::constant(weights[0], self.order);
        let mut pow = Self::constant(1.0, self.order);
        for &w in weights.iter().skip(1).take(self.order) {
            pow = &pow * &g;
            out = &out + &pow.scale(w);
        }
        out
    }

    pub fn exp(&self) -> Self {
        let e = self.c[0].exp();
        let w: Vec<f64> = (0..=self.order).map(|k| e / factorial(k)).collect();
        self.series(&w)
    }

    pub fn ln(&self) -> Self {
        let v = self.c[0];
        let mut w = vec![v.ln()];
        for k in 1..=self.order {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            w.push(sign / (k as f64 * v.powi(k as i32)));
        }
        self.series(&w)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        // d^k cos = cos(x + k pi/2)
        let w: Vec<f64> = (0..=self.order).map(|k| [c, -s, -c, s][k % 4] / factorial(k)).collect();
        self.series(&w)
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        let w: Vec<f64> = (0..=self.order).map(|k| [s, c, -s, -c][k % 4] / factorial(k)).collect();
        self.series(&w)
    }

    pub fn sqrt(&self) -> Self {
        self.ln().scale(0.5).exp()
    }

    pub fn recip(&self) -> Self {
        let v = self.c[0];
        let w: Vec<f64> = (0..=self.order).map(|k| (-1.0f64).powi(k as i32) / v.powi(k as i32 + 1)).collect();
        self.series(&w)
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |a, i| a * i as f64)
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        let order = self.order.min(o.order);
        Jet { order, c: (0..len(order)).map(|i| self.c[i] + o.c[i]).collect() }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        let order = self.order.min(o.order);
        Jet { order, c: (0..len(order)).map(|i| self.c[i] - o.c[i]).collect() }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        let order = self.order.min(o.order);
        let mut c = vec![0.0; len(order)];
        for t1 in 0..=order {
            for b1 in 0..=t1 {
                let x = self.c[index(t1 - b1, b1)];
                if x == 0.0 {
                    continue;
                }
                for t2 in 0..=order - t1 {
                    for b2 in 0..=t2 {
                        c[index(t1 - b1 + t2 - b2, b1 + b2)] += x * o.c[index(t2 - b2, b2)];
                    }
                }
            }
        }
        Jet { order, c }
    }
}

/// A complex-valued jet `re + i im`.
#[derive(Clone, Debug, PartialEq)]
pub struct CJet {
    pub re: Jet,
    pub im: Jet,
}

impl CJet {
    pub fn new(re: Jet, im: Jet) -> Self {
        Self { re, im }
    }

    pub fn real(re: Jet) -> Self {
        let order = re.order();
        Self { re, im: Jet::zero(order) }
    }

    pub fn constant(v: num_complex::Complex64, order: usize) -> Self {
        Self { re: Jet::constant(v.re, order), im: Jet::constant(v.im, order) }
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(num_complex::Complex64::new(0.0, 0.0), order)
    }

    /// The coordinate `z = x + i y` around `z0`.
    pub fn var_z(z0: num_complex::Complex64, order: usize) -> Self {
        Self { re: Jet::var_x(z0.re, order), im: Jet::var_y(z0.im, order) }
    }

    pub fn order(&self) -> usize {
        self.re.order().min(self.im.order())
    }

    pub fn value(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.value(), self.im.value())
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: -&self.im }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { re: self.re.scale(s), im: self.im.scale(s) }
    }

    pub fn mul_c(&self, s: num_complex::Complex64) -> Self {
        Self { re: &self.re.scale(s.re) - &self.im.scale(s.im), im: &self.re.scale(s.im) + &self.im.scale(s.re) }
    }

    /// Multiply by a real jet.
    pub fn mul_r(&self, r: &Jet) -> Self {
        Self { re: &self.re * r, im: &self.im * r }
    }

    pub fn exp(&self) -> Self {
        let e = self.re.exp();
        Self { re: &e * &self.im.cos(), im: &e * &self.im.sin() }
    }

    /// `d/dz = (d/dx - i d/dy)/2`.
    pub fn dz(&self) -> Self {
        Self { re: (&self.re.dx() + &self.im.dy()).scale(0.5), im: (&self.im.dx() - &self.re.dy()).scale(0.5) }
    }

    /// `d/dzbar = (d/dx + i d/dy)/2`.
    pub fn dzbar(&self) -> Self {
        Self { re: (&self.re.dx() - &self.im.dy()).scale(0.5), im: (&self.im.dx() + &self.re.dy()).scale(0.5) }
    }

    pub fn norm_sqr(&self) -> Jet {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }
}

impl Add for &CJet {
    type Output = CJet;
    fn add(self, o: &CJet) -> CJet {
        CJet { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl Sub for &CJet {
    type Output = CJet;
    fn sub(self, o: &CJet) -> CJet {
        CJet { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl Neg for &CJet {
    type Output = CJet;
    fn neg(self) -> CJet {
        self.scale(-1.0)
    }
}

impl Mul for &CJet {
    type Output = CJet;
    fn mul(self, o: &CJet) -> CJet {
        CJet { re: &(&self.re * &o.re) - &(&self.im * &o.im), im: &(&self.re * &o.im) + &(&self.im * &o.re) }
    }
}
