//! The developing map of the Fuchsian `m = 1` case.
//!
//! `R^{2,1}` carries the form `<x, y> = x^t Q y` with `Q` the anti-diagonal
//! `3 x 3` matrix, so real points embed diagonally as `(p, p)` in `R_tau^3`
//! and `P` acts as `tau`. A point of the unit tangent bundle is a point of the
//! hyperboloid together with a fibre angle measured against the polar frame.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI, TAU};

use libm::{asinh, atan2, cos, cosh, floor, sin, sinh, sqrt};
use nalgebra::{DVector, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::hspace::{flag_coords, FlagPoint};
use crate::paracomplex::PcVector;

/// Tolerance on `<p, p> + 1` for hyperboloid points.
pub const HYPERBOLOID_TOL: f64 = 1e-12;
/// Lightlike detection threshold on `<., .>_{2,1}`.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// `<x, y>_{2,1} = x^t Q y`.
pub fn minkowski(x: &Vector3<f64>, y: &Vector3<f64>) -> f64 {
    x[0] * y[2] + x[1] * y[1] + x[2] * y[0]
}

fn wrap(x: f64, period: f64) -> f64 {
    x - period * floor(x / period)
}

/// Base point `p0 = (e1 - e3)/sqrt 2`.
pub fn base_point() -> Vector3<f64> {
    Vector3::new(FRAC_1_SQRT_2, 0.0, -FRAC_1_SQRT_2)
}

/// Oriented orthonormal frame `(a1, a2)` of `T_{p0}`.
pub fn base_frame() -> (Vector3<f64>, Vector3<f64>) {
    (Vector3::new(FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2), Vector3::new(0.0, 1.0, 0.0))
}

/// A point of the unit tangent bundle of `H^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UTPoint {
    pub p: Vector3<f64>,
    pub alpha: f64,
}

impl UTPoint {
    pub fn new(p: Vector3<f64>, alpha: f64) -> Result<Self> {
        let d = minkowski(&p, &p) + 1.0;
        if d.abs() > HYPERBOLOID_TOL || minkowski(&p, &base_point()) > 0.0 {
            return Err(Error::NotOnQuadric(d));
        }
        Ok(Self { p, alpha: wrap(alpha, TAU) })
    }

    /// From geodesic polar coordinates around `p0`.
    pub fn polar(r: f64, theta: f64, alpha: f64) -> Self {
        Self { p: polar_point(r, theta), alpha: wrap(alpha, TAU) }
    }
}

pub fn polar_point(r: f64, theta: f64) -> Vector3<f64> {
    let (a1, a2) = base_frame();
    base_point() * cosh(r) + (a1 * cos(theta) + a2 * sin(theta)) * sinh(r)
}

/// Geodesic polar coordinates `(r, theta)` of a hyperboloid point.
pub fn polar_coords(p: &Vector3<f64>) -> (f64, f64) {
    let (a1, a2) = base_frame();
    let (x, y) = (minkowski(p, &a1), minkowski(p, &a2));
    let r = asinh(sqrt(x * x + y * y));
    let theta = atan2(y, x);
    (r, if r == 0.0 { 0.0 } else { theta })
}

/// The frame at `p` obtained by transporting `(a1, a2)` along the radial geodesic.
pub fn frame_at(p: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let (r, th) = polar_coords(p);
    let (a1, a2) = base_frame();
    let dir = a1 * cos(th) + a2 * sin(th);
    let er = base_point() * sinh(r) + dir * cosh(r);
    let et = a2 * cos(th) - a1 * sin(th);
    let (c, s) = (cos(th), sin(th));
    (er * c - et * s, er * s + et * c)
}

fn check_frame(p: &Vector3<f64>, u: &Vector3<f64>, v: &Vector3<f64>) -> Result<()> {
    let defect = [minkowski(u, u) - 1.0, minkowski(v, v) - 1.0, minkowski(u, v), minkowski(p, u), minkowski(p, v)]
        .iter()
        .fold(0.0f64, |a, x| a.max(x.abs()));
    if defect > 1e-10 {
        return Err(Error::NotOrthonormal(defect));
    }
    Ok(())
}

fn dv(x: &Vector3<f64>) -> DVector<f64> {
    DVector::from_column_slice(x.as_slice())
}

fn real_pc(x: &Vector3<f64>) -> PcVector {
    PcVector::real(dv(x))
}

fn tau_pc(x: &Vector3<f64>) -> PcVector {
    PcVector::new(dv(x), -dv(x))
}

/// The sections `(s1, s2, s = s1 + s2)` for a frame `{u, v}` at `p`.
pub fn sections(
    p: &Vector3<f64>,
    u: &Vector3<f64>,
    v: &Vector3<f64>,
    alpha: f64,
) -> Result<(PcVector, PcVector, PcVector)> {
    check_frame(p, u, v)?;
    let (c, s) = (cos(alpha), sin(alpha));
    let s1 = real_pc(&(u * c + v * s));
    let s2 = tau_pc(&(v * c - u * s));
    let sum = &s1 + &s2;
    Ok((s1, s2, sum))
}

/// The isotropic vector `s` in idempotent form for an arbitrary frame.
pub fn dev_vector(u: &Vector3<f64>, v: &Vector3<f64>, alpha: f64) -> (Vector3<f64>, Vector3<f64>) {
    let (c, s) = (cos(alpha), sin(alpha));
    (u * (c - s) + v * (s + c), u * (c + s) + v * (s - c))
}

/// `dev` evaluated with an explicit frame at `p`.
pub fn dev_with_frame(p: &Vector3<f64>, u: &Vector3<f64>, v: &Vector3<f64>, alpha: f64) -> Result<FlagPoint> {
    check_frame(p, u, v)?;
    let (plus, minus) = dev_vector(u, v, alpha);
    flag_coords(&PcVector::new(dv(&plus), dv(&minus)))
}

/// `dev(p, alpha)` with the transported polar frame.
pub fn dev(pt: &UTPoint) -> Result<FlagPoint> {
    let (u, v) = frame_at(&pt.p);
    dev_with_frame(&pt.p, &u, &v, pt.alpha)
}

/// `dev(p0, 3 pi / 4)` in idempotent form: `(-sqrt 2 a1, sqrt 2 a2)`.
pub fn anchor_expected() -> (Vector3<f64>, Vector3<f64>) {
    let (a1, a2) = base_frame();
    (a1 * -core::f64::consts::SQRT_2, a2 * core::f64::consts::SQRT_2)
}

/// Where a flag sits relative to the Guichard-Wienhard domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Member,
    NonMember,
    /// A norm within [`BOUNDARY_TOL`] of zero.
    Boundary,
}

/// Norms `(<l, l>, <n, n>)` of the line and of the normal to the kernel plane.
pub fn gw_norms(f: &FlagPoint) -> (f64, f64) {
    let l = Vector3::new(f.line[0], f.line[1], f.line[2]);
    // the kernel of `x -> phi . x` is the `<,>`-orthogonal of `Q phi`
    let n = Vector3::new(f.functional[2], f.functional[1], f.functional[0]);
    (minkowski(&l, &l), minkowski(&n, &n))
}

pub fn gw_membership(f: &FlagPoint) -> Membership {
    let (a, b) = gw_norms(f);
    if a.abs() <= BOUNDARY_TOL || b.abs() <= BOUNDARY_TOL {
        Membership::Boundary
    } else if a > 0.0 && b > 0.0 {
        Membership::Member
    } else {
        Membership::NonMember
    }
}

fn cart6(z: &PcVector) -> Vector6<f64> {
    let x = (&z.plus + &z.minus) * 0.5;
    let y = (&z.plus - &z.minus) * 0.5;
    Vector6::new(x[0], x[1], x[2], y[0], y[1], y[2])
}

/// The `6 x 6` matrix `[s1, s2, D s1, D s2, pr X, pr Y]` in Cartesian coordinates.
pub fn transversality_matrix(p: &Vector3<f64>, u: &Vector3<f64>, v: &Vector3<f64>, alpha: f64) -> Result<Matrix6<f64>> {
    let (s1, s2, _) = sections(p, u, v, alpha)?;
    let (c, s) = (cos(alpha), sin(alpha));
    let ds1 = real_pc(&(v * c - u * s));
    let ds2 = tau_pc(&(-(u * c) - v * s));
    let prx = &real_pc(&(p * c)) - &tau_pc(&(p * s));
    let pry = &real_pc(&(p * s)) + &tau_pc(&(p * c));
    let cols = [s1, s2, ds1, ds2, prx, pry].map(|z| cart6(&z));
    Ok(Matrix6::from_columns(&cols))
}

pub fn transversality_det(pt: &UTPoint) -> Result<f64> {
    let (u, v) = frame_at(&pt.p);
    Ok(transversality_matrix(&pt.p, &u, &v, pt.alpha)?.determinant())
}

/// Build the preimage of a flag `([line], ker phi)` in the domain.
///
/// `p` is the future unit timelike vector orthogonal to both the line and
/// the normal `w = Q phi`; the angle is read off from the line direction.
pub fn surjectivity_witness(f: &FlagPoint) -> Result<UTPoint> {
    if gw_membership(f) != Membership::Member {
        return Err(Error::InvalidParameter("flag is not in the domain"));
    }
    let l = Vector3::new(f.line[0], f.line[1], f.line[2]);
    let w = Vector3::new(f.functional[2], f.functional[1], f.functional[0]);
    let c = l.cross(&w);
    // `<Q c, x> = det(l, w, x)`, so `Q c` spans the orthogonal of `l` and `w`
    let mut p = Vector3::new(c[2], c[1], c[0]);
    let n = minkowski(&p, &p);
    if n >= -BOUNDARY_TOL {
        return Err(Error::DegenerateFlag);
    }
    p /= sqrt(-n);
    if minkowski(&p, &base_point()) > 0.0 {
        p = -p;
    }
    let (u, v) = frame_at(&p);
    let alpha = atan2(minkowski(&l, &v), minkowski(&l, &u)) - FRAC_PI_4;
    UTPoint::new(p, alpha)
}

/// Radical-inverse Halton point in base `b`.
pub fn halton(mut i: u64, b: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// Quasi-random samples on the polar patch `r <= r_max`, all fibre angles.
pub fn halton_samples(n: usize, r_max: f64) -> Vec<UTPoint> {
    (1..=n as u64).map(|i| UTPoint::polar(r_max * sqrt(halton(i, 2)), TAU * halton(i, 3), TAU * halton(i, 5))).collect()
}

/// Pairs of samples whose flags agree.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CollisionReport {
    pub samples: usize,
    /// Colliding pairs not explained by `alpha ~ alpha + pi`.
    pub collisions: Vec<(usize, usize)>,
    /// Pairs related by `alpha -> alpha + pi`.
    pub identified: usize,
    /// Pairs of identical samples.
    pub duplicates: Vec<(usize, usize)>,
}

fn fibre_offset(a: &UTPoint, b: &UTPoint, tol: f64) -> Option<bool> {
    if (a.p - b.p).amax() > tol {
        return None;
    }
    let d = wrap(a.alpha - b.alpha, TAU);
    let d = d.min(TAU - d);
    if d <= tol {
        Some(false)
    } else if (d - PI).abs() <= tol {
        Some(true)
    } else {
        None
    }
}

/// Detect flag collisions by sorting on the first coordinate and sweeping.
pub fn injectivity_probe(points: &[UTPoint], tol: f64) -> Result<CollisionReport> {
    let flags = points.iter().map(dev).collect::<Result<Vec<_>>>()?;
    Ok(probe_flags(points, &flags, tol))
}

/// [`injectivity_probe`] on precomputed flags.
pub fn probe_flags(points: &[UTPoint], flags: &[FlagPoint], tol: f64) -> CollisionReport {
    let mut keyed: Vec<([f64; 6], usize)> = flags
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut k = [0.0; 6];
            k[..3].copy_from_slice(f.line.as_slice());
            k[3..].copy_from_slice(f.functional.as_slice());
            (k, i)
        })
        .collect();
    keyed.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]).then(a.1.cmp(&b.1)));
    let mut report = CollisionReport { samples: points.len(), ..Default::default() };
    for a in 0..keyed.len() {
        for b in a + 1..keyed.len() {
            if keyed[b].0[0] - keyed[a].0[0] > tol {
                break;
            }
            if !keyed[a].0.iter().zip(&keyed[b].0).all(|(x, y)| (x - y).abs() <= tol) {
                continue;
            }
            let (i, j) = (keyed[a].1.min(keyed[b].1), keyed[a].1.max(keyed[b].1));
            match fibre_offset(&points[i], &points[j], 1e-9) {
                Some(true) => report.identified += 1,
                Some(false) => report.duplicates.push((i, j)),
                None => report.collisions.push((i, j)),
            }
        }
    }
    report.collisions.sort_unstable();
    report.duplicates.sort_unstable();
    report
}
