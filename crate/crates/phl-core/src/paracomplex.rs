//! Para-complex numbers `R_tau = R[tau]/(tau^2 - 1)`, bicomplex numbers
//! `C_tau = R_tau ⊗ C`, and vectors/matrices over them.
//!
//! Scalars are stored in Cartesian form `x + tau y`. Vectors and matrices are
//! stored in idempotent coordinates `z = z+ e+ + z- e-`, so every matrix
//! operation is a pair of independent real operations.

use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// A para-complex number `re + tau * im_tau` with `tau^2 = 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ParaComplex {
    pub re: f64,
    pub im_tau: f64,
}

impl ParaComplex {
    pub const ZERO: Self = Self::new(0.0, 0.0);
    pub const ONE: Self = Self::new(1.0, 0.0);
    pub const TAU: Self = Self::new(0.0, 1.0);
    /// `e+ = (1 + tau) / 2`.
    pub const E_PLUS: Self = Self::new(0.5, 0.5);
    /// `e- = (1 - tau) / 2`.
    pub const E_MINUS: Self = Self::new(0.5, -0.5);

    pub const fn new(re: f64, im_tau: f64) -> Self {
        Self { re, im_tau }
    }

    pub const fn real(re: f64) -> Self {
        Self::new(re, 0.0)
    }

    /// Recombine idempotent coordinates: `plus e+ + minus e-`.
    pub fn from_split(plus: f64, minus: f64) -> Self {
        Self::new(0.5 * (plus + minus), 0.5 * (plus - minus))
    }

    /// Idempotent coordinates `(x + y, x - y)`.
    pub fn split(self) -> (f64, f64) {
        (self.re + self.im_tau, self.re - self.im_tau)
    }

    /// Para-complex conjugate `x - tau y`.
    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im_tau)
    }

    /// `|z|^2_tau = z * conj(z) = x^2 - y^2`.
    pub fn abs2(self) -> f64 {
        self.re * self.re - self.im_tau * self.im_tau
    }

    pub fn is_zero_divisor(self, tol: f64) -> bool {
        self.abs2().abs() <= tol
    }

    /// Multiplicative inverse, `None` on zero divisors.
    pub fn inv(self) -> Option<Self> {
        let n = self.abs2();
        if n == 0.0 {
            None
        } else {
            Some(Self::new(self.re / n, -self.im_tau / n))
        }
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.re * s, self.im_tau * s)
    }

    /// Unit para-complex number `cosh t + tau sinh t`.
    pub fn hyperbolic(t: f64) -> Self {
        Self::new(libm::cosh(t), libm::sinh(t))
    }
}

/// `(x1 + tau y1)(x2 + tau y2) = (x1 x2 + y1 y2) + tau (x1 y2 + x2 y1)`.
pub fn pc_mul(a: ParaComplex, b: ParaComplex) -> ParaComplex {
    ParaComplex::new(a.re * b.re + a.im_tau * b.im_tau, a.re * b.im_tau + b.re * a.im_tau)
}

pub fn pc_abs2(z: ParaComplex) -> f64 {
    z.abs2()
}

pub fn idempotent_split(z: ParaComplex) -> (f64, f64) {
    z.split()
}

impl Add for ParaComplex {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im_tau + o.im_tau)
    }
}

impl AddAssign for ParaComplex {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for ParaComplex {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im_tau - o.im_tau)
    }
}

impl Neg for ParaComplex {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im_tau)
    }
}

impl Mul for ParaComplex {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        pc_mul(self, o)
    }
}

impl fmt::Display for ParaComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}τ", self.re, self.im_tau)
    }
}

/// An element of `C_tau` in idempotent coordinates `w+ e+ + w- e-`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BiComplex {
    pub plus: Complex64,
    pub minus: Complex64,
}

impl BiComplex {
    pub const fn new(plus: Complex64, minus: Complex64) -> Self {
        Self { plus, minus }
    }

    pub fn from_pc(z: ParaComplex) -> Self {
        let (p, m) = z.split();
        Self::new(Complex64::new(p, 0.0), Complex64::new(m, 0.0))
    }

    pub fn from_complex(c: Complex64) -> Self {
        Self::new(c, c)
    }

    /// tau-conjugation swaps the idempotent coordinates.
    pub fn tau_conj(self) -> Self {
        Self::new(self.minus, self.plus)
    }

    /// Complex conjugation acts on both coordinates.
    pub fn conj(self) -> Self {
        Self::new(self.plus.conj(), self.minus.conj())
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.plus.norm(), self.minus.norm())
    }
}

impl Add for BiComplex {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.plus + o.plus, self.minus + o.minus)
    }
}

impl Sub for BiComplex {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.plus - o.plus, self.minus - o.minus)
    }
}

impl Mul for BiComplex {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.plus * o.plus, self.minus * o.minus)
    }
}

impl Neg for BiComplex {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.plus, -self.minus)
    }
}

/// The anti-diagonal matrix `Q` with ones on the anti-diagonal.
pub fn anti_diag_q(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i + j + 1 == n { 1.0 } else { 0.0 })
}

/// Apply `Q` without forming it: reverses the coordinates.
pub fn apply_q(v: &DVector<f64>) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(n, |i, _| v[n - 1 - i])
}

/// A vector in `R_tau^n` stored in idempotent coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PcVector {
    pub plus: DVector<f64>,
    pub minus: DVector<f64>,
}

impl PcVector {
    pub fn new(plus: DVector<f64>, minus: DVector<f64>) -> Self {
        assert_eq!(plus.len(), minus.len(), "idempotent parts differ in length");
        Self { plus, minus }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(DVector::zeros(n), DVector::zeros(n))
    }

    /// Embed a real vector as `v e+ + v e-`.
    pub fn real(v: DVector<f64>) -> Self {
        Self::new(v.clone(), v)
    }

    /// Build from Cartesian parts `x + tau y`.
    pub fn from_cartesian(x: &DVector<f64>, y: &DVector<f64>) -> Self {
        Self::new(x + y, x - y)
    }

    /// Cartesian parts `(x, y)` with `z = x + tau y`.
    pub fn cartesian(&self) -> (DVector<f64>, DVector<f64>) {
        ((&self.plus + &self.minus) * 0.5, (&self.plus - &self.minus) * 0.5)
    }

    pub fn from_components(c: &[ParaComplex]) -> Self {
        let n = c.len();
        Self::new(DVector::from_fn(n, |i, _| c[i].split().0), DVector::from_fn(n, |i, _| c[i].split().1))
    }

    pub fn dim(&self) -> usize {
        self.plus.len()
    }

    pub fn component(&self, i: usize) -> ParaComplex {
        ParaComplex::from_split(self.plus[i], self.minus[i])
    }

    /// Multiplication by a para-complex scalar.
    pub fn scale(&self, s: ParaComplex) -> Self {
        let (p, m) = s.split();
        Self::new(&self.plus * p, &self.minus * m)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self::new(&self.plus * s, &self.minus * s)
    }

    /// Multiplication by `tau` (the para-complex structure `P`).
    pub fn tau(&self) -> Self {
        Self::new(self.plus.clone(), -&self.minus)
    }

    /// Flatten to a real `2n` vector `(plus; minus)`.
    pub fn to_real(&self) -> DVector<f64> {
        let n = self.dim();
        DVector::from_fn(2 * n, |i, _| if i < n { self.plus[i] } else { self.minus[i - n] })
    }

    pub fn from_real(v: &DVector<f64>) -> Self {
        let n = v.len() / 2;
        Self::new(v.rows(0, n).into_owned(), v.rows(n, n).into_owned())
    }

    pub fn norm(&self) -> f64 {
        libm::hypot(self.plus.norm(), self.minus.norm())
    }
}

impl Add for &PcVector {
    type Output = PcVector;
    fn add(self, o: &PcVector) -> PcVector {
        PcVector::new(&self.plus + &o.plus, &self.minus + &o.minus)
    }
}

impl Sub for &PcVector {
    type Output = PcVector;
    fn sub(self, o: &PcVector) -> PcVector {
        PcVector::new(&self.plus - &o.plus, &self.minus - &o.minus)
    }
}

/// A vector in `C_tau^n` (complexified para-complex vectors).
#[derive(Clone, Debug, PartialEq)]
pub struct BcVector {
    pub plus: DVector<Complex64>,
    pub minus: DVector<Complex64>,
}

impl BcVector {
    pub fn new(plus: DVector<Complex64>, minus: DVector<Complex64>) -> Self {
        assert_eq!(plus.len(), minus.len(), "idempotent parts differ in length");
        Self { plus, minus }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(DVector::zeros(n), DVector::zeros(n))
    }

    /// `re + i im` from two para-complex vectors.
    pub fn from_parts(re: &PcVector, im: &PcVector) -> Self {
        let n = re.dim();
        Self::new(
            DVector::from_fn(n, |k, _| Complex64::new(re.plus[k], im.plus[k])),
            DVector::from_fn(n, |k, _| Complex64::new(re.minus[k], im.minus[k])),
        )
    }

    pub fn dim(&self) -> usize {
        self.plus.len()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.plus.map(|c| c.conj()), self.minus.map(|c| c.conj()))
    }

    pub fn tau(&self) -> Self {
        Self::new(self.plus.clone(), -&self.minus)
    }

    pub fn scale(&self, s: BiComplex) -> Self {
        Self::new(&self.plus * s.plus, &self.minus * s.minus)
    }

    pub fn norm(&self) -> f64 {
        libm::hypot(self.plus.norm(), self.minus.norm())
    }

    /// Real and imaginary para-complex parts.
    pub fn parts(&self) -> (PcVector, PcVector) {
        (
            PcVector::new(self.plus.map(|c| c.re), self.minus.map(|c| c.re)),
            PcVector::new(self.plus.map(|c| c.im), self.minus.map(|c| c.im)),
        )
    }
}

impl Add for &BcVector {
    type Output = BcVector;
    fn add(self, o: &BcVector) -> BcVector {
        BcVector::new(&self.plus + &o.plus, &self.minus + &o.minus)
    }
}

impl Sub for &BcVector {
    type Output = BcVector;
    fn sub(self, o: &BcVector) -> BcVector {
        BcVector::new(&self.plus - &o.plus, &self.minus - &o.minus)
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: a, found: b })
    }
}

fn q_dot(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let n = a.len();
    (0..n).map(|i| a[i] * b[n - 1 - i]).sum()
}

fn q_dot_c(a: &DVector<Complex64>, b: &DVector<Complex64>) -> Complex64 {
    let n = a.len();
    (0..n).map(|i| a[i] * b[n - 1 - i]).sum()
}

/// The para-hermitian form `q(z, w) = z^t Q conj_tau(w)`.
///
/// In idempotent coordinates `q(z,w) = (z+^t Q w-) e+ + (z-^t Q w+) e-`.
pub fn q_form(z: &PcVector, w: &PcVector) -> Result<ParaComplex> {
    check_dims(z.dim(), w.dim())?;
    Ok(ParaComplex::from_split(q_dot(&z.plus, &w.minus), q_dot(&z.minus, &w.plus)))
}

/// `C`-bilinear extension of `q` to `C_tau^n`.
pub fn q_bilinear(z: &BcVector, w: &BcVector) -> Result<BiComplex> {
    check_dims(z.dim(), w.dim())?;
    Ok(BiComplex::new(q_dot_c(&z.plus, &w.minus), q_dot_c(&z.minus, &w.plus)))
}

/// The pairing `q^C(z, w) = q(z, conj w)`, complex-linear in `z` and
/// antilinear in `w`.
pub fn q_complex(z: &BcVector, w: &BcVector) -> Result<BiComplex> {
    q_bilinear(z, &w.conj())
}

/// A square matrix over `R_tau` stored as its idempotent pair `(M+, M-)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PCMatrix {
    pub plus: DMatrix<f64>,
    pub minus: DMatrix<f64>,
}

impl PCMatrix {
    pub fn new(plus: DMatrix<f64>, minus: DMatrix<f64>) -> Self {
        assert_eq!(plus.shape(), minus.shape(), "idempotent parts differ in shape");
        Self { plus, minus }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n), DMatrix::identity(n, n))
    }

    pub fn size(&self) -> usize {
        self.plus.nrows()
    }

    pub fn mul(&self, o: &PCMatrix) -> PCMatrix {
        PCMatrix::new(&self.plus * &o.plus, &self.minus * &o.minus)
    }

    pub fn apply(&self, v: &PcVector) -> PcVector {
        PcVector::new(&self.plus * &v.plus, &self.minus * &v.minus)
    }

    pub fn apply_bc(&self, v: &BcVector) -> BcVector {
        let p = self.plus.map(|x| Complex64::new(x, 0.0));
        let m = self.minus.map(|x| Complex64::new(x, 0.0));
        BcVector::new(&p * &v.plus, &m * &v.minus)
    }

    pub fn column(&self, j: usize) -> PcVector {
        PcVector::new(self.plus.column(j).into_owned(), self.minus.column(j).into_owned())
    }

    /// The `e-` part forced by `q`-unitarity: `Q (M+)^{-t} Q`.
    pub fn unitary_partner(plus: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let inv = plus.clone().try_inverse().ok_or(Error::Singular)?;
        let n = plus.nrows();
        Ok(DMatrix::from_fn(n, n, |i, j| inv[(n - 1 - j, n - 1 - i)]))
    }

    /// Build the `q`-unitary matrix with the given `e+` part.
    pub fn unitary_from_plus(plus: DMatrix<f64>) -> Result<Self> {
        let minus = Self::unitary_partner(&plus)?;
        Ok(Self::new(plus, minus))
    }

    /// Largest violation of `M- = Q (M+)^{-t} Q` and `det M+ = 1`.
    pub fn su_defect(&self) -> f64 {
        match Self::unitary_partner(&self.plus) {
            Ok(partner) => {
                let d = (&partner - &self.minus).amax();
                d.max((self.plus.determinant() - 1.0).abs())
            }
            Err(_) => f64::INFINITY,
        }
    }

    pub fn is_special_unitary(&self, tol: f64) -> bool {
        self.su_defect() <= tol
    }
}

/// The isomorphism `Psi(A) = A e+ + Q (A^{-1})^t Q e-` from `SL(n, R)` onto
/// `SU(n, R_tau, Q)`.
pub fn psi_iso(a: &DMatrix<f64>) -> Result<PCMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
    }
    let det = a.determinant();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Singular);
    }
    if (det - 1.0).abs() > 1e-9 {
        return Err(Error::DeterminantNotOne(det));
    }
    PCMatrix::unitary_from_plus(a.clone())
}
