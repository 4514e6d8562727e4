//! The hyperboloid model of para-complex hyperbolic space
//! `H^n_tau = {q(z,z) = -1} / U`, with `U` the unit para-complex numbers.
//!
//! Tangent vectors at `[z]` are represented in `z^⊥` (the `q`-orthogonal
//! complement of the lift). The metric is `g = Re_tau q`, the para-complex
//! structure is multiplication by `tau`, and `omega(u, v) = g(u, P v)`.

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::paracomplex::{apply_q, q_form, ParaComplex, PcVector};

/// Tolerance on `q(z,z) + 1` for accepting a lift.
pub const QUADRIC_TOL: f64 = 1e-10;

/// A point of `H^n_tau` given by a lift with `q(lift, lift) = -1`.
#[derive(Clone, Debug, PartialEq)]
pub struct HPoint {
    pub lift: PcVector,
}

impl HPoint {
    pub fn new(lift: PcVector) -> Result<Self> {
        let q = q_form(&lift, &lift)?;
        let defect = (q.re + 1.0).abs().max(q.im_tau.abs());
        if defect > QUADRIC_TOL {
            return Err(Error::NotOnQuadric(q.re));
        }
        Ok(Self { lift })
    }

    /// Rescale an arbitrary vector with `q(z,z)` negative real onto the quadric.
    pub fn from_timelike(z: PcVector) -> Result<Self> {
        let q = q_form(&z, &z)?;
        if q.re >= 0.0 || q.im_tau.abs() > QUADRIC_TOL * q.re.abs() {
            return Err(Error::NotOnQuadric(q.re));
        }
        Self::new(z.scale_real(1.0 / libm::sqrt(-q.re)))
    }

    pub fn dim(&self) -> usize {
        self.lift.dim()
    }

    /// The `U`-normalised representative: `|z+| = 1` with the first
    /// significant entry of `z+` positive.
    pub fn normalized(&self) -> PcVector {
        let n = self.lift.plus.norm();
        let lead = self.lift.plus.iter().copied().find(|x| x.abs() > 1e-12 * n).unwrap_or(1.0);
        let s = if lead < 0.0 { -1.0 / n } else { 1.0 / n };
        // lambda = (s, 1/s) in idempotent coordinates, |lambda|^2_tau = 1
        PcVector::new(&self.lift.plus * s, &self.lift.minus / s)
    }

    /// Whether two lifts differ by a unit para-complex scalar.
    pub fn equivalent(&self, other: &HPoint, tol: f64) -> bool {
        let a = self.normalized();
        let b = other.normalized();
        (&a - &b).norm() <= tol
    }
}

/// A tangent vector at an `HPoint`, stored in the `q`-orthogonal complement
/// of the lift.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub base: HPoint,
    pub vec: PcVector,
}

impl TangentVector {
    /// Wrap a vector already orthogonal to the base lift.
    pub fn new(base: HPoint, vec: PcVector) -> Result<Self> {
        let q = q_form(&vec, &base.lift)?;
        let scale = 1.0 + vec.norm();
        if q.re.abs().max(q.im_tau.abs()) > QUADRIC_TOL * scale {
            return Err(Error::InvalidParameter("vector is not q-orthogonal to the base"));
        }
        Ok(Self { base, vec })
    }
}

/// `v - q(v,z)/q(z,z) z`, the `q`-orthogonal projection onto `z^⊥`.
pub fn project_tangent(z: &HPoint, v: &PcVector) -> TangentVector {
    let qvz = q_form(v, &z.lift).expect("dimension checked by caller");
    let qzz = q_form(&z.lift, &z.lift).expect("same vector");
    let c = qvz * qzz.inv().expect("lift is not a zero divisor");
    let vec = v - &z.lift.scale(c);
    TangentVector { base: z.clone(), vec }
}

/// The para-complex structure `P` (multiplication by `tau`).
pub fn para_structure(t: &TangentVector) -> TangentVector {
    TangentVector { base: t.base.clone(), vec: t.vec.tau() }
}

fn same_base(a: &TangentVector, b: &TangentVector) -> Result<()> {
    if a.base.lift.dim() != b.base.lift.dim() {
        return Err(Error::DimensionMismatch { expected: a.base.dim(), found: b.base.dim() });
    }
    let d = (&a.base.lift - &b.base.lift).norm();
    if d > 1e-9 * (1.0 + a.base.lift.norm()) {
        return Err(Error::BaseMismatch);
    }
    Ok(())
}

/// `g = Re_tau q` evaluated on raw vectors.
pub fn metric_raw(u: &PcVector, v: &PcVector) -> f64 {
    q_form(u, v).expect("equal dimensions").re
}

/// `g(u, v)`.
pub fn metric(u: &TangentVector, v: &TangentVector) -> Result<f64> {
    same_base(u, v)?;
    Ok(metric_raw(&u.vec, &v.vec))
}

/// `omega(u, v) = g(u, P v)`.
pub fn kahler_form(u: &TangentVector, v: &TangentVector) -> Result<f64> {
    same_base(u, v)?;
    Ok(metric_raw(&u.vec, &v.vec.tau()))
}

/// The Riemann tensor of a para-Kähler manifold of constant para-holomorphic
/// sectional curvature `kappa`:
///
/// `R(X,Y,Z,W) = -kappa/4 ( g(X,Z)g(Y,W) - g(Y,Z)g(X,W) + g(X,PZ)g(PY,W)
///               - g(Y,PZ)g(PX,W) + 2 g(X,PY)g(PZ,W) )`.
pub fn riemann_tensor(
    x: &TangentVector,
    y: &TangentVector,
    z: &TangentVector,
    w: &TangentVector,
    kappa: f64,
) -> Result<f64> {
    same_base(x, y)?;
    same_base(x, z)?;
    same_base(x, w)?;
    Ok(riemann_raw(&x.vec, &y.vec, &z.vec, &w.vec, kappa))
}

/// [`riemann_tensor`] on raw vectors sharing an implicit base point.
pub fn riemann_raw(x: &PcVector, y: &PcVector, z: &PcVector, w: &PcVector, kappa: f64) -> f64 {
    let g = metric_raw;
    let (px, py, pz) = (x.tau(), y.tau(), z.tau());
    let s = g(x, z) * g(y, w) - g(y, z) * g(x, w) + g(x, &pz) * g(&py, w) - g(y, &pz) * g(&px, w)
        + 2.0 * g(x, &py) * g(&pz, w);
    -0.25 * kappa * s
}

/// Sectional curvature `R(X,Y,Y,X) / (g(X,X)g(Y,Y) - g(X,Y)^2)` of a
/// non-degenerate plane.
pub fn sectional_curvature(x: &TangentVector, y: &TangentVector, kappa: f64) -> Result<f64> {
    let num = riemann_tensor(x, y, y, x, kappa)?;
    let den = metric(x, x)? * metric(y, y)? - metric(x, y)? * metric(x, y)?;
    if den.abs() < 1e-300 {
        return Err(Error::InvalidParameter("degenerate plane"));
    }
    Ok(num / den)
}

/// Sectional curvature of the plane `span(X, Y)` at `z` measured from the
/// holonomy of the Levi-Civita connection of the quadric around a small
/// square of side `step` in the projective chart
/// `(a, b) -> (z + a X + b Y) / sqrt(-q(w, w))`, centred at `z`.
///
/// The loop is a lasso: out to the midpoint of one edge, once around the
/// square, and back. Parallel transport along a lift `c(t)` solves
/// `W' = q(W, c') c - q(c', c) W`, integrated with RK4 (`substeps` per edge).
pub fn holonomy_sectional_curvature(z: &HPoint, x: &PcVector, y: &PcVector, step: f64, substeps: usize) -> Result<f64> {
    let x = project_tangent(z, x).vec;
    let y = project_tangent(z, y).vec;
    let h = 0.5 * step;
    let corners: [(f64, f64); 7] = [(0.0, 0.0), (h, 0.0), (h, h), (-h, h), (-h, -h), (h, -h), (h, 0.0)];
    let mut w = y.clone();
    let chart = Chart { z: &z.lift, x: &x, y: &y };
    let mut legs: Vec<((f64, f64), (f64, f64))> = Vec::new();
    for k in 0..corners.len() - 1 {
        legs.push((corners[k], corners[k + 1]));
    }
    legs.push(((h, 0.0), (0.0, 0.0)));
    for (a, b) in legs {
        let len = libm::hypot(b.0 - a.0, b.1 - a.1);
        let n = if len < 0.75 * step { substeps.max(1) } else { 2 * substeps.max(1) };
        let dt = 1.0 / n as f64;
        let vel = (b.0 - a.0, b.1 - a.1);
        for i in 0..n {
            let t0 = i as f64 * dt;
            let at = |t: f64| (a.0 + t * vel.0, a.1 + t * vel.1);
            let k1 = chart.transport_rhs(&w, at(t0), vel)?;
            let w2 = &w + &k1.scale_real(0.5 * dt);
            let k2 = chart.transport_rhs(&w2, at(t0 + 0.5 * dt), vel)?;
            let w3 = &w + &k2.scale_real(0.5 * dt);
            let k3 = chart.transport_rhs(&w3, at(t0 + 0.5 * dt), vel)?;
            let w4 = &w + &k3.scale_real(dt);
            let k4 = chart.transport_rhs(&w4, at(t0 + dt), vel)?;
            let incr = &(&k1 + &k4) + &(&k2 + &k3).scale_real(2.0);
            w = &w + &incr.scale_real(dt / 6.0);
        }
    }
    // holonomy ≈ Id - step^2 R(X,Y)
    let dw = (&w - &y).scale_real(-1.0 / (step * step));
    let g = metric_raw;
    let num = g(&dw, &x);
    let den = g(&x, &x) * g(&y, &y) - g(&x, &y) * g(&x, &y);
    Ok(num / den)
}

struct Chart<'a> {
    z: &'a PcVector,
    x: &'a PcVector,
    y: &'a PcVector,
}

impl Chart<'_> {
    fn lift(&self, (a, b): (f64, f64)) -> Result<(PcVector, f64)> {
        let w = &(self.z + &self.x.scale_real(a)) + &self.y.scale_real(b);
        let q = q_form(&w, &w)?;
        if q.re >= 0.0 {
            return Err(Error::NotOnQuadric(q.re));
        }
        Ok((w, libm::sqrt(-q.re)))
    }

    fn transport_rhs(&self, w: &PcVector, p: (f64, f64), vel: (f64, f64)) -> Result<PcVector> {
        let (raw, n) = self.lift(p)?;
        let dot = &self.x.scale_real(vel.0) + &self.y.scale_real(vel.1);
        let c = raw.scale_real(1.0 / n);
        let dn = -q_form(&dot, &raw)?.re / n;
        let dc = &dot.scale_real(1.0 / n) - &raw.scale_real(dn / (n * n));
        let a = q_form(w, &dc)?;
        let b = q_form(&dc, &c)?;
        Ok(&c.scale(a) - &w.scale(b))
    }
}

/// A point of the flag variety: a line and a hyperplane (as a covector),
/// each up to scale. Representatives are stored normalised.
#[derive(Clone, Debug, PartialEq)]
pub struct FlagPoint {
    pub line: DVector<f64>,
    pub functional: DVector<f64>,
}

fn normalize_projective(v: &DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    let lead = v.iter().copied().find(|x| x.abs() > 1e-9 * n).unwrap_or(1.0);
    if lead < 0.0 {
        v / -n
    } else {
        v / n
    }
}

impl FlagPoint {
    pub fn new(line: &DVector<f64>, functional: &DVector<f64>) -> Result<Self> {
        if line.norm() == 0.0 || functional.norm() == 0.0 {
            return Err(Error::DegenerateFlag);
        }
        Ok(Self { line: normalize_projective(line), functional: normalize_projective(functional) })
    }

    /// `functional(line)` on the normalised representatives.
    pub fn incidence(&self) -> f64 {
        self.functional.dot(&self.line)
    }

    /// Max-norm distance between normalised representatives.
    pub fn distance(&self, other: &FlagPoint) -> f64 {
        (&self.line - &other.line).amax().max((&self.functional - &other.functional).amax())
    }
}

/// The flag `([z+], [w -> (z-)^t Q w])` of an isotropic vector.
pub fn flag_coords(z: &PcVector) -> Result<FlagPoint> {
    let np = z.plus.norm();
    let nm = z.minus.norm();
    if np <= 1e-14 || nm <= 1e-14 {
        return Err(Error::DegenerateFlag);
    }
    let q = q_form(z, z)?;
    let rel = q.re.abs().max(q.im_tau.abs()) / (np * nm);
    if rel > 1e-9 {
        return Err(Error::NotIsotropic(rel));
    }
    FlagPoint::new(&z.plus, &apply_q(&z.minus))
}

/// Multiply a lift by the unit `cosh t + tau sinh t`.
pub fn u_action(z: &PcVector, t: f64) -> PcVector {
    z.scale(ParaComplex::hyperbolic(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(n: usize) -> HPoint {
        // lift of a real unit timelike vector of the form (1/√2)(e_0 - e_n)
        let mut v = DVector::zeros(n + 1);
        v[0] = core::f64::consts::FRAC_1_SQRT_2;
        v[n] = -core::f64::consts::FRAC_1_SQRT_2;
        HPoint::new(PcVector::real(v)).unwrap()
    }

    #[test]
    fn projecting_radial_direction_gives_zero() {
        let z = base(2);
        let t = project_tangent(&z, &z.lift);
        assert!(t.vec.norm() < 1e-15);
    }

    #[test]
    fn flag_of_first_basis_vector() {
        let mut e = DVector::zeros(3);
        e[0] = 1.0;
        let z = PcVector::real(e.clone());
        let f = flag_coords(&z).unwrap();
        assert!(f.incidence().abs() < 1e-15);
        assert_eq!(f.line, e);
    }

    #[test]
    fn flag_rejects_half_zero() {
        let mut e = DVector::zeros(3);
        e[0] = 1.0;
        let z = PcVector::new(e, DVector::zeros(3));
        assert_eq!(flag_coords(&z), Err(Error::DegenerateFlag));
    }
}
