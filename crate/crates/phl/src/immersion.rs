//! The immersion `sigma = F (e0, -Q e0)` and its structure checks.
//!
//! In frame coordinates a real vector `a` of the frame is `F (a, Q a)` and its
//! `tau`-image is `F (a, -Q a)`. Writing `Omega_X = S + K` (symmetric plus
//! antisymmetric), the flat derivative maps `real(a)` to `real(K a) + tau(S a)`
//! and `tau(a)` to `real(S a) + tau(K a)`. The Frenet blocks are
//!
//! ```text
//! sigma = tau(e0),  L_k = tau^{k-1} span(u_k, v_k),  L_{2m+1-k} = tau^{2m-k} span(u_k, v_k),  P sigma = real(e0)
//! ```
//!
//! and `g` is `+1` on real vectors and `-1` on `tau`-vectors.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use phl_core::hspace::{metric_raw, riemann_raw};
use phl_core::paracomplex::{q_bilinear, q_form, BcVector, PCMatrix, PcVector};
use serde::{Deserialize, Serialize};

use crate::connection::{u_index, Connection};
use crate::error::{PhlError, Result};
use crate::transport::{frame_tau_vector, frame_vector, rk4_step, sigma, transport_path, FrameField};

/// A block of the Frenet splitting in frame coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    /// Position in the chain `sigma, L_1, ..., L_{2m}, P sigma`.
    pub index: usize,
    pub tau: bool,
    pub cols: Vec<usize>,
}

impl Block {
    /// Sign of `g` on the block.
    pub fn sign(&self) -> f64 {
        if self.tau {
            -1.0
        } else {
            1.0
        }
    }

    /// Coordinates in `(alpha; beta)` of the block basis vectors.
    pub fn coords(&self, n: usize) -> Vec<usize> {
        self.cols.iter().map(|c| if self.tau { c + n } else { *c }).collect()
    }
}

/// The chain `sigma, L_1, ..., L_{2m}, P sigma`.
pub fn blocks(m: usize) -> Vec<Block> {
    let mut out = vec![Block { index: 0, tau: true, cols: vec![0] }];
    for k in 1..=2 * m {
        let (j, power) = if k <= m { (k, k - 1) } else { (2 * m + 1 - k, k - 1) };
        let a = u_index(j);
        out.push(Block { index: k, tau: power % 2 == 1, cols: vec![a, a + 1] });
    }
    out.push(Block { index: 2 * m + 1, tau: false, cols: vec![0] });
    out
}

/// The derivative operator `[[K, S], [S, K]]` on frame coordinates.
pub fn derivative_operator(omega: &DMatrix<f64>) -> DMatrix<f64> {
    let n = omega.nrows();
    let s = (omega + omega.transpose()) * 0.5;
    let k = (omega - omega.transpose()) * 0.5;
    let mut d = DMatrix::zeros(2 * n, 2 * n);
    d.view_mut((0, 0), (n, n)).copy_from(&k);
    d.view_mut((n, n), (n, n)).copy_from(&k);
    d.view_mut((0, n), (n, n)).copy_from(&s);
    d.view_mut((n, 0), (n, n)).copy_from(&s);
    d
}

/// `g` on frame coordinates.
pub fn g_coords(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let n = a.len() / 2;
    a.rows(0, n).dot(&b.rows(0, n)) - a.rows(n, n).dot(&b.rows(n, n))
}

/// The ambient vector of frame coordinates `(alpha; beta)` for frame `F`.
pub fn ambient(f: &PCMatrix, c: &DVector<f64>) -> PcVector {
    let n = c.len() / 2;
    let re = frame_vector(f, &c.rows(0, n).into_owned());
    let tau = frame_tau_vector(f, &c.rows(n, n).into_owned());
    &re + &tau
}

fn unit(n2: usize, k: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n2);
    v[k] = 1.0;
    v
}

/// Pairings of the immersion at one point, from centred differences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImmersionSample {
    pub point: (f64, f64),
    pub h1: f64,
    /// `q(sigma, sigma)` (plus and minus parts).
    pub q_sigma: (f64, f64),
    /// `q^C(sigma_z, sigma_zbar)` per idempotent part, the conformality defect.
    pub q_z_zbar: [Complex64; 2],
    /// `q^C(sigma_z, sigma_z)` per idempotent part, expected `h_1`.
    pub q_z_z: [Complex64; 2],
    /// `q^C(sigma_zbar, sigma_zbar)` per idempotent part, expected `h_1`.
    pub q_zbar_zbar: [Complex64; 2],
    /// `|Lap(sigma)/4 - h_1 sigma|` in frame coordinates.
    pub harmonic: f64,
    /// Tangential part of the same vector, `max |g(., e_i)|`.
    pub harmonic_tangential: f64,
}

/// `h_1` from the `e0`-coupling `Omega_y[e0][v_1] = sqrt(2 h_1)`.
pub fn h1_of(oy: &DMatrix<f64>) -> f64 {
    0.5 * oy[(0, 2)] * oy[(0, 2)]
}

fn bc(a: &PcVector, b: &PcVector, s: Complex64) -> BcVector {
    let c = |x: f64, y: f64| Complex64::new(x, 0.0) + s * y;
    let n = a.dim();
    BcVector::new(
        DVector::from_fn(n, |i, _| c(a.plus[i], b.plus[i])),
        DVector::from_fn(n, |i, _| c(a.minus[i], b.minus[i])),
    )
}

/// Frames `F(p + k delta e)` for `k = -2..=2` along `e`, by single RK4 steps.
fn stencil(conn: &dyn Connection, f: &PCMatrix, p: (f64, f64), e: (f64, f64), delta: f64) -> [PCMatrix; 5] {
    let step = |k: f64| rk4_step(conn, f, p, (e.0 * k.signum(), e.1 * k.signum()), delta * k.abs());
    [step(-2.0), step(-1.0), f.clone(), step(1.0), step(2.0)]
}

fn pc_lin(terms: &[(f64, &PcVector)]) -> PcVector {
    let n = terms[0].1.dim();
    let mut out = PcVector::zeros(n);
    for (c, v) in terms {
        out = &out + &v.scale_real(*c);
    }
    out
}

/// Conformality and harmonicity pairings at `p` with frame `f`.
pub fn immerse_at(conn: &dyn Connection, f: &PCMatrix, p: (f64, f64), delta: f64) -> ImmersionSample {
    let sx = stencil(conn, f, p, (1.0, 0.0), delta);
    let sy = stencil(conn, f, p, (0.0, 1.0), delta);
    let sig = |g: &PCMatrix| sigma(g);
    let s0 = sigma(f);
    let dx = pc_lin(&[(0.5 / delta, &sig(&sx[3])), (-0.5 / delta, &sig(&sx[1]))]);
    let dy = pc_lin(&[(0.5 / delta, &sig(&sy[3])), (-0.5 / delta, &sig(&sy[1]))]);
    let i = Complex64::new(0.0, 1.0);
    let sz = bc(&dx.scale_real(0.5), &dy.scale_real(0.5), -i);
    let szb = sz.conj();
    let qc = |a: &BcVector, b: &BcVector| {
        let v = q_bilinear(a, &b.conj()).expect("equal dims");
        [v.plus, v.minus]
    };
    let qs = q_form(&s0, &s0).expect("equal dims").split();
    let lap = pc_lin(&[
        (1.0 / (delta * delta), &sig(&sx[3])),
        (1.0 / (delta * delta), &sig(&sx[1])),
        (1.0 / (delta * delta), &sig(&sy[3])),
        (1.0 / (delta * delta), &sig(&sy[1])),
        (-4.0 / (delta * delta), &s0),
    ]);
    let (_, oy) = conn.omega(p.0, p.1);
    let h1 = h1_of(&oy);
    let res = &lap.scale_real(0.25) - &s0.scale_real(h1);
    // back to frame coordinates: real part a and tau part b of F^{-1} res
    let finv = f.plus.clone().try_inverse().expect("frame is invertible");
    let ginv = f.minus.clone().try_inverse().expect("frame is invertible");
    let p_part = &finv * &res.plus;
    let m_part = phl_core::paracomplex::apply_q(&(&ginv * &res.minus));
    let a = (&p_part + &m_part) * 0.5;
    let b = (&p_part - &m_part) * 0.5;
    let harmonic = a.norm().hypot(b.norm());
    let tangential = a[u_index(1)].abs().max(a[u_index(1) + 1].abs());
    ImmersionSample {
        point: p,
        h1,
        q_sigma: qs,
        q_z_zbar: qc(&sz, &szb),
        q_z_z: qc(&sz, &sz),
        q_zbar_zbar: qc(&szb, &szb),
        harmonic,
        harmonic_tangential: tangential,
    }
}

/// Worst-case residuals along a transported path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImmersionReport {
    pub samples: usize,
    pub length: f64,
    /// `max |q(sigma, sigma) + 1|`.
    pub sigma_norm: f64,
    pub conformality: f64,
    /// `max |q^C(sigma_z, sigma_z) - h_1|` (and the `zbar` version).
    pub induced_metric: f64,
    pub harmonic: f64,
    pub harmonic_tangential: f64,
    /// Largest SU drift before retraction.
    pub drift: f64,
    /// Least-squares slope of the accumulated drift per unit length.
    pub drift_slope: f64,
}

/// Transport along `path` and evaluate [`immerse_at`] at every `every`-th sample.
pub fn immerse_path(
    conn: &dyn Connection,
    f0: &PCMatrix,
    path: &[(f64, f64)],
    step: f64,
    every: usize,
) -> Result<(FrameField, ImmersionReport)> {
    let field = transport_path(conn, f0, path, step)?;
    let mut rep = ImmersionReport {
        samples: 0,
        length: *field.arclength().last().unwrap_or(&0.0),
        sigma_norm: 0.0,
        conformality: 0.0,
        induced_metric: 0.0,
        harmonic: 0.0,
        harmonic_tangential: 0.0,
        drift: field.max_drift(),
        drift_slope: 0.0,
    };
    for (k, f) in field.frames.iter().enumerate() {
        let qs = q_form(&sigma(f), &sigma(f)).expect("dims");
        rep.sigma_norm = rep.sigma_norm.max((qs.re + 1.0).abs()).max(qs.im_tau.abs());
        if k % every.max(1) != 0 {
            continue;
        }
        let s = immerse_at(conn, f, field.points[k], step);
        rep.samples += 1;
        for k in 0..2 {
            rep.conformality = rep.conformality.max(s.q_z_zbar[k].norm());
            rep.induced_metric =
                rep.induced_metric.max((s.q_z_z[k] - s.h1).norm()).max((s.q_zbar_zbar[k] - s.h1).norm());
        }
        rep.harmonic = rep.harmonic.max(s.harmonic);
        rep.harmonic_tangential = rep.harmonic_tangential.max(s.harmonic_tangential);
    }
    let arc = field.arclength();
    let su: Vec<f64> = field.frames.iter().map(|f| f.su_defect()).collect();
    let (sx, sy): (f64, f64) = (arc.iter().sum(), su.iter().sum());
    let len = arc.len() as f64;
    let sxx: f64 = arc.iter().map(|a| a * a).sum();
    let sxy: f64 = arc.iter().zip(&su).map(|(a, b)| a * b).sum();
    let den = len * sxx - sx * sx;
    rep.drift_slope = if den > 0.0 { (len * sxy - sx * sy) / den } else { 0.0 };
    Ok((field, rep))
}

/// A closed circle of circumference `length` through `p`.
pub fn circle_path(p: (f64, f64), length: f64, pieces: usize) -> Vec<(f64, f64)> {
    let r = length / (2.0 * std::f64::consts::PI);
    let c = (p.0 - r, p.1);
    (0..=pieces)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / pieces as f64;
            (c.0 + r * t.cos(), c.1 + r * t.sin())
        })
        .collect()
}

/// Outcome of the Frenet checks at a set of points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrenetReport {
    pub points: usize,
    /// Smallest `epsilon_k * lambda` over block Gram eigenvalues (positive when signs are right).
    pub signature_margin: f64,
    pub signature_ok: bool,
    /// Largest principal angle between `P L_k` and `L_{2m+1-k}`.
    pub p_angle: f64,
    pub p_ok: bool,
    /// Largest `|omega|` on a block, relative to `|g|`.
    pub omega_on_blocks: f64,
    pub omega_ok: bool,
    /// Largest coupling between blocks at chain distance at least two.
    pub off_tridiagonal: f64,
    pub tridiagonal_ok: bool,
    /// Largest conformality defect of the link blocks.
    pub link_conformality: f64,
    pub conformal_ok: bool,
    /// Largest difference between measured link blocks and the connection blocks.
    pub link_recovery: f64,
}

impl FrenetReport {
    pub fn all_pass(&self) -> bool {
        self.signature_ok && self.p_ok && self.omega_ok && self.tridiagonal_ok && self.conformal_ok
    }
}

/// Tolerances of [`frenet_verify`].
pub const SUBSPACE_TOL: f64 = 1e-6;
pub const COUPLING_TOL: f64 = 1e-6;
pub const CONFORMAL_TOL: f64 = 1e-6;

/// `dF/dX` by the fourth-order centred stencil.
fn frame_derivative(s: &[PCMatrix; 5], delta: f64) -> PCMatrix {
    let c = [1.0, -8.0, 0.0, 8.0, -1.0];
    let mut p = DMatrix::zeros(s[0].size(), s[0].size());
    let mut m = p.clone();
    for (ck, f) in c.iter().zip(s) {
        p += &f.plus * (*ck / (12.0 * delta));
        m += &f.minus * (*ck / (12.0 * delta));
    }
    PCMatrix::new(p, m)
}

fn orthonormal(vs: &[DVector<f64>]) -> DMatrix<f64> {
    let mat = DMatrix::from_columns(vs);
    mat.qr().q()
}

pub(crate) fn max_principal_angle(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let qa = orthonormal(a);
    let qb = orthonormal(b);
    let sv = (qa.transpose() * qb).singular_values();
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min).min(1.0);
    smin.acos()
}

/// Conformality defect of a 2x2 matrix: orthogonal columns of equal length.
pub fn conformal_defect(m: &DMatrix<f64>) -> f64 {
    let (c1, c2) = (m.column(0), m.column(1));
    let scale = c1.norm_squared().max(c2.norm_squared());
    if scale < 1e-24 {
        return 0.0;
    }
    (c1.dot(&c2).abs().max((c1.norm_squared() - c2.norm_squared()).abs())) / scale
}

/// Signature, para-structure, omega, tridiagonal and link checks at each `(point, frame)` using frames at `p +- k delta`.
pub fn frenet_verify(conn: &dyn Connection, samples: &[((f64, f64), PCMatrix)], delta: f64) -> FrenetReport {
    let n = conn.dim();
    let m = (n - 1) / 2;
    let bl = blocks(m);
    let n2 = 2 * n;
    let mut rep = FrenetReport {
        points: samples.len(),
        signature_margin: f64::INFINITY,
        signature_ok: true,
        p_angle: 0.0,
        p_ok: true,
        omega_on_blocks: 0.0,
        omega_ok: true,
        off_tridiagonal: 0.0,
        tridiagonal_ok: true,
        link_conformality: 0.0,
        conformal_ok: true,
        link_recovery: 0.0,
    };
    let dirs = [(1.0, 0.0), (0.0, 1.0), (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2)];
    for (p, f) in samples {
        let vecs: Vec<Vec<PcVector>> =
            bl.iter().map(|b| b.coords(n).iter().map(|&c| ambient(f, &unit(n2, c))).collect()).collect();
        // signature, omega on blocks
        for (b, vs) in bl.iter().zip(&vecs).skip(1).take(2 * m) {
            let gram = DMatrix::from_fn(2, 2, |i, j| metric_raw(&vs[i], &vs[j]));
            let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
            let margin = eig.iter().map(|l| b.sign() * l).fold(f64::INFINITY, f64::min);
            rep.signature_margin = rep.signature_margin.min(margin);
            let omega = metric_raw(&vs[0], &vs[1].tau()).abs().max(metric_raw(&vs[0], &vs[0].tau()).abs());
            rep.omega_on_blocks = rep.omega_on_blocks.max(omega / gram.amax());
        }
        // para-structure
        for k in 1..=m {
            let (src, dst) = (2 * k - 1, 2 * m - 2 * (k - 1));
            let pa: Vec<DVector<f64>> = vecs[src].iter().map(|v| v.tau().to_real()).collect();
            let pb: Vec<DVector<f64>> = vecs[dst].iter().map(|v| v.to_real()).collect();
            rep.p_angle = rep.p_angle.max(max_principal_angle(&pa, &pb));
        }
        // tridiagonal form, link conformality
        let (ox, oy) = conn.omega(p.0, p.1);
        for d in dirs {
            let st = stencil(conn, f, *p, d, delta);
            let df = frame_derivative(&st, delta);
            let coupling = |a: usize, ia: usize, b: usize, ib: usize| -> f64 {
                let ca = bl[a].coords(n)[ia];
                let e = unit(n2, ca);
                let dv = ambient(&df, &e);
                bl[b].sign() * metric_raw(&dv, &vecs[b][ib])
            };
            for a in 0..bl.len() {
                for b in 0..bl.len() {
                    if a.abs_diff(b) < 2 {
                        continue;
                    }
                    for ia in 0..bl[a].cols.len() {
                        for ib in 0..bl[b].cols.len() {
                            rep.off_tridiagonal = rep.off_tridiagonal.max(coupling(a, ia, b, ib).abs());
                        }
                    }
                }
            }
            let dop = derivative_operator(&(&ox * d.0 + &oy * d.1));
            for k in 1..2 * m {
                let mx = DMatrix::from_fn(2, 2, |i, j| coupling(k, j, k + 1, i));
                rep.link_conformality = rep.link_conformality.max(conformal_defect(&mx));
                let exact = DMatrix::from_fn(2, 2, |i, j| dop[(bl[k + 1].coords(n)[i], bl[k].coords(n)[j])]);
                rep.link_recovery = rep.link_recovery.max((mx - exact).amax());
            }
        }
    }
    rep.signature_ok = rep.signature_margin > 0.0;
    rep.p_ok = rep.p_angle < SUBSPACE_TOL;
    rep.omega_ok = rep.omega_on_blocks < SUBSPACE_TOL;
    rep.tridiagonal_ok = rep.off_tridiagonal < COUPLING_TOL;
    rep.conformal_ok = rep.link_conformality < CONFORMAL_TOL;
    rep
}

/// Largest coupling between the chain blocks in `group` and the remaining
/// blocks, measured from frame derivatives at each sample.
pub fn block_decoupling(conn: &dyn Connection, samples: &[((f64, f64), PCMatrix)], group: &[usize], delta: f64) -> f64 {
    let n = conn.dim();
    let m = (n - 1) / 2;
    let bl = blocks(m);
    let n2 = 2 * n;
    let mut worst: f64 = 0.0;
    for (p, f) in samples {
        for d in [(1.0, 0.0), (0.0, 1.0)] {
            let df = frame_derivative(&stencil(conn, f, *p, d, delta), delta);
            for a in bl.iter().filter(|b| group.contains(&b.index)) {
                for b in bl.iter().filter(|b| !group.contains(&b.index)) {
                    for ca in a.coords(n) {
                        for cb in b.coords(n) {
                            let dv = ambient(&df, &unit(n2, ca));
                            let v = metric_raw(&dv, &ambient(f, &unit(n2, cb)));
                            worst = worst.max(v.abs());
                        }
                    }
                }
            }
        }
    }
    worst
}

/// Which half of the normal bundle a variation lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `N+ = L_3 + L_5 + ... + L_{2m-1}`.
    Plus,
    /// `N- = L_2 + L_4 + ... + L_{2m}`.
    Minus,
}

/// Coordinates spanning `N+` or `N-`.
pub fn normal_coords(m: usize, side: Side) -> Vec<usize> {
    let n = 2 * m + 1;
    blocks(m)
        .iter()
        .filter(|b| (2..=2 * m).contains(&b.index) && (b.index % 2 == 1) == (side == Side::Plus))
        .flat_map(|b| b.coords(n))
        .collect()
}

fn tangent_coords(m: usize) -> Vec<usize> {
    blocks(m)[1].coords(2 * m + 1)
}

/// A section of the normal bundle near a point: value and first derivatives
/// of its frame coordinates.
#[derive(Clone, Debug)]
pub struct SectionJet {
    pub value: DVector<f64>,
    pub dx: DVector<f64>,
    pub dy: DVector<f64>,
}

/// Terms of the second-variation integrand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationTerms {
    /// Covariant derivative squared, own normal half.
    pub a: f64,
    /// Same, opposite normal half.
    pub b: f64,
    /// Same, tangential part.
    pub c: f64,
    /// Trace of the ambient curvature over tangent directions.
    pub d: f64,
    pub integrand: f64,
    /// `h(xi, xi)`.
    pub norm: f64,
}

fn project(v: &DVector<f64>, keep: &[usize]) -> DVector<f64> {
    DVector::from_fn(v.len(), |i, _| if keep.contains(&i) { v[i] } else { 0.0 })
}

/// Frame coordinates as a vector at the identity frame.
fn pc_of(c: &DVector<f64>) -> PcVector {
    ambient(&PCMatrix::identity(c.len() / 2), c)
}

/// Integrand `a + b - c + d` at a point with connection `(ox, oy)`.
pub fn second_variation_terms(
    ox: &DMatrix<f64>,
    oy: &DMatrix<f64>,
    xi: &SectionJet,
    side: Side,
) -> Result<VariationTerms> {
    let n = ox.nrows();
    let m = (n - 1) / 2;
    let own = normal_coords(m, side);
    let other = normal_coords(m, if side == Side::Plus { Side::Minus } else { Side::Plus });
    let tan = tangent_coords(m);
    let scale = xi.value.norm().max(1e-300);
    let off = (&xi.value - project(&xi.value, &own)).norm();
    if off > 1e-8 * scale && xi.value.norm() > 0.0 {
        return Err(PhlError::Validation(format!("section is not in the chosen normal half: off-part {off:.3e}")));
    }
    let h1 = h1_of(oy);
    let w = 1.0 / (2.0 * h1).sqrt();
    let mut t = VariationTerms { a: 0.0, b: 0.0, c: 0.0, d: 0.0, integrand: 0.0, norm: g_coords(&xi.value, &xi.value) };
    for (om, dxi) in [(ox, &xi.dx), (oy, &xi.dy)] {
        let dop = derivative_operator(om);
        let nab = (dxi + &dop * &xi.value) * w;
        let pa = project(&nab, &own);
        let pb = project(&nab, &other);
        let pc = project(&nab, &tan);
        t.a += g_coords(&pa, &pa);
        t.b += g_coords(&pb, &pb);
        t.c += g_coords(&pc, &pc);
    }
    let xv = pc_of(&xi.value);
    for &e in &tan {
        let ev = pc_of(&unit(2 * n, e));
        t.d += riemann_raw(&ev, &xv, &ev, &xv, -4.0);
    }
    t.integrand = t.a + t.b - t.c + t.d;
    Ok(t)
}

/// Matrix of the quadratic form `b` on `N+` or `N-` coordinates.
pub fn term_b_matrix(ox: &DMatrix<f64>, oy: &DMatrix<f64>, side: Side) -> DMatrix<f64> {
    let n = ox.nrows();
    let m = (n - 1) / 2;
    let own = normal_coords(m, side);
    let other = normal_coords(m, if side == Side::Plus { Side::Minus } else { Side::Plus });
    let h1 = h1_of(oy);
    let w2 = 1.0 / (2.0 * h1);
    let mut out = DMatrix::zeros(own.len(), own.len());
    for om in [ox, oy] {
        let dop = derivative_operator(om);
        for (i, &a) in own.iter().enumerate() {
            for (j, &b) in own.iter().enumerate() {
                let va = project(&dop.column(a).into_owned(), &other);
                let vb = project(&dop.column(b).into_owned(), &other);
                out[(i, j)] += w2 * g_coords(&va, &vb);
            }
        }
    }
    out
}

/// Sorted eigenvalues of [`term_b_matrix`].
pub fn term_b_eigenvalues(ox: &DMatrix<f64>, oy: &DMatrix<f64>, side: Side) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(term_b_matrix(ox, oy, side)).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// `||eta_k||^2` for `k = 2..=2m` from the metric and Higgs field.
pub fn eta_chain(h: &[f64], g2: &[f64]) -> Vec<f64> {
    let m = h.len();
    let first = crate::solver::eta_norms(h, g2);
    let mut out = vec![0.0; 2 * m + 1];
    for (j, v) in first.iter().enumerate() {
        out[j + 2] = *v;
    }
    for k in m + 2..=2 * m {
        out[k] = out[2 * m + 2 - k];
    }
    out
}

/// Closed-form eigenvalues of `b`, each listed twice, sorted.
pub fn term_b_closed_form(h: &[f64], g2: &[f64], side: Side) -> Vec<f64> {
    let m = h.len();
    let e = eta_chain(h, g2);
    let mut vals = Vec::new();
    if m == 1 {
        return vec![0.0; if side == Side::Minus { 2 } else { 0 }];
    }
    match side {
        Side::Plus => {
            for i in 2..=m {
                vals.push(-(e[2 * i - 1] + e[2 * i]));
            }
        }
        Side::Minus => {
            vals.push(e[3]);
            let mut k = 4;
            while k < 2 * m - 1 {
                vals.push(e[k] + e[k + 1]);
                k += 2;
            }
            vals.push(e[2 * m]);
        }
    }
    let mut out: Vec<f64> = vals.iter().flat_map(|v| [*v, *v]).collect();
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

/// A smooth compactly supported bump `exp(-1/(1-r^2/rho^2))` and its gradient.
pub fn bump(center: (f64, f64), rho: f64, x: f64, y: f64) -> (f64, f64, f64) {
    let (dx, dy) = (x - center.0, y - center.1);
    let s = (dx * dx + dy * dy) / (rho * rho);
    if s >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let v = (-1.0 / (1.0 - s)).exp();
    let ds = -v / ((1.0 - s) * (1.0 - s));
    (v, ds * 2.0 * dx / (rho * rho), ds * 2.0 * dy / (rho * rho))
}

/// Evaluate the integrand of `xi = bump * sum_k c_k E_k` at `(x, y)`.
pub fn bump_variation(
    conn: &dyn Connection,
    side: Side,
    center: (f64, f64),
    rho: f64,
    coeffs: &[f64],
    x: f64,
    y: f64,
) -> Result<VariationTerms> {
    let n = conn.dim();
    let m = (n - 1) / 2;
    let own = normal_coords(m, side);
    if coeffs.len() != own.len() {
        return Err(PhlError::Validation(format!("expected {} coefficients, got {}", own.len(), coeffs.len())));
    }
    let (b, bx, by) = bump(center, rho, x, y);
    let mut c = DVector::zeros(2 * n);
    for (k, &i) in own.iter().enumerate() {
        c[i] = coeffs[k];
    }
    let xi = SectionJet { value: &c * b, dx: &c * bx, dy: &c * by };
    let (ox, oy) = conn.omega(x, y);
    second_variation_terms(&ox, &oy, &xi, side)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::Preset;
    use crate::connection::FlatConnection;

    #[test]
    fn chain_signs() {
        let b = blocks(2);
        let tau: Vec<bool> = b.iter().map(|x| x.tau).collect();
        assert_eq!(tau, vec![true, false, true, false, true, false]);
        assert_eq!(b[2].cols, vec![3, 4]);
        assert_eq!(b[4].cols, vec![1, 2]);
    }

    #[test]
    fn zero_section_has_zero_terms() {
        let conn = FlatConnection::new(Preset::FuchsianM2);
        let (ox, oy) = conn.omega(0.1, 1.2);
        let z = DVector::zeros(10);
        let xi = SectionJet { value: z.clone(), dx: z.clone(), dy: z };
        let t = second_variation_terms(&ox, &oy, &xi, Side::Plus).unwrap();
        assert_eq!((t.a, t.b, t.c, t.d), (0.0, 0.0, 0.0, 0.0));
    }
}
