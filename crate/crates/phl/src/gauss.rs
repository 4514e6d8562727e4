//! The Gauss map: the `e+` part of the parallel frame, the metric
//! `H = (G G^t)^{-1}` in `SL(2m+1, R)/SO(2m+1)` and its minimality residuals.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use phl_core::paracomplex::PCMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connection::{u_index, Connection};
use crate::error::{PhlError, Result};
use crate::immersion::max_principal_angle;
use crate::transport::{frame_tau_vector, rk4_step};

/// `e+` component of the parallel frame.
pub fn gauss_lift(f: &PCMatrix) -> DMatrix<f64> {
    f.plus.clone()
}

/// `(|det G - 1|, max |F- - Q G^{-t} Q|)`.
pub fn lift_defect(f: &PCMatrix) -> Result<(f64, f64)> {
    let partner = PCMatrix::unitary_partner(&f.plus)?;
    Ok(((f.plus.determinant() - 1.0).abs(), (&f.minus - partner).amax()))
}

/// A point of the symmetric space as a positive definite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricPoint {
    pub h: DMatrix<f64>,
}

impl SymmetricPoint {
    pub fn det(&self) -> f64 {
        self.h.determinant()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.h.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `H^{-1/2}`, a lift with the same projection.
    pub fn inverse_sqrt(&self) -> DMatrix<f64> {
        let e = SymmetricEigen::new(self.h.clone());
        let d = DMatrix::from_diagonal(&e.eigenvalues.map(|l| 1.0 / l.sqrt()));
        &e.eigenvectors * d * e.eigenvectors.transpose()
    }
}

/// `H = (G^{-1})^t G^{-1}`.
pub fn symmetric_point(lift: &DMatrix<f64>) -> Result<SymmetricPoint> {
    let inv = lift.clone().try_inverse().ok_or_else(|| PhlError::Numerical("singular lift".into()))?;
    let h = inv.transpose() * &inv;
    Ok(SymmetricPoint { h: (&h + h.transpose()) * 0.5 })
}

/// The negative definite plane spanned by the `tau`-images of the frame vectors.
pub fn negative_plane(f: &PCMatrix) -> Vec<DVector<f64>> {
    let n = f.size();
    (0..n)
        .map(|i| {
            let mut a = DVector::zeros(n);
            a[i] = 1.0;
            frame_tau_vector(f, &a).to_real()
        })
        .collect()
}

/// The plane of a symmetric point, through the lift `H^{-1/2}`.
pub fn plane_of(p: &SymmetricPoint) -> Result<Vec<DVector<f64>>> {
    Ok(negative_plane(&PCMatrix::unitary_from_plus(p.inverse_sqrt())?))
}

/// Largest principal angle between the frame plane and the plane of its metric.
pub fn plane_defect(f: &PCMatrix) -> Result<f64> {
    let sp = symmetric_point(&gauss_lift(f))?;
    Ok(max_principal_angle(&negative_plane(f), &plane_of(&sp)?))
}

/// Eigenvalues of `C^* H C` for the `h`-weighted holomorphic frame
/// `C = G (e0, sqrt(h_j)(u_j + i v_j)/sqrt2, (u_j - i v_j)/sqrt(2 h_j))`.
pub fn metric_eigenvalues(lift: &DMatrix<f64>, h: &[f64]) -> Result<Vec<f64>> {
    let n = lift.nrows();
    let sp = symmetric_point(lift)?;
    let mut c = DMatrix::<Complex64>::zeros(n, n);
    c[(0, 0)] = Complex64::new(1.0, 0.0);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for (j, hj) in h.iter().enumerate() {
        let a = u_index(j + 1);
        let (s, t) = (hj.sqrt() * r, r / hj.sqrt());
        c[(a, a)] = Complex64::new(s, 0.0);
        c[(a + 1, a)] = Complex64::new(0.0, s);
        c[(a, a + 1)] = Complex64::new(t, 0.0);
        c[(a + 1, a + 1)] = Complex64::new(0.0, -t);
    }
    let g = lift.map(|x| Complex64::new(x, 0.0));
    let amb = g * c;
    let m = amb.adjoint() * sp.h.map(|x| Complex64::new(x, 0.0)) * &amb;
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// `{h_m^{-1}, ..., h_1^{-1}, 1, h_1, ..., h_m}`, sorted.
pub fn expected_eigenvalues(h: &[f64]) -> Vec<f64> {
    let mut ev: Vec<f64> = h.iter().flat_map(|x| [*x, 1.0 / x]).chain([1.0]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn metric_at(f: &PCMatrix) -> Result<DMatrix<f64>> {
    Ok(symmetric_point(&gauss_lift(f))?.h)
}

/// `(conformality, tension)` at `p` from frames at `p + k delta e_x`, `p + k delta e_y`, `|k| <= 2`.
///
/// Conformality is `|tr((H^{-1} H_z)^2)|` with fourth-order centred first
/// derivatives; tension is the Frobenius norm of
/// `d_zbar(H^{-1} H_z) + d_z(H^{-1} H_zbar) = (d_x(H^{-1} H_x) + d_y(H^{-1} H_y))/2`
/// by the second-order flux stencil.
pub fn minimality_at(conn: &dyn Connection, f: &PCMatrix, p: (f64, f64), delta: f64) -> Result<(f64, f64)> {
    let h0 = metric_at(f)?;
    let line = |e: (f64, f64)| -> Result<[DMatrix<f64>; 4]> {
        let at = |k: f64| metric_at(&rk4_step(conn, f, p, (e.0 * k.signum(), e.1 * k.signum()), delta * k.abs()));
        Ok([at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?])
    };
    let (x, y) = (line((1.0, 0.0))?, line((0.0, 1.0))?);
    let inv = |m: &DMatrix<f64>| m.clone().try_inverse().ok_or_else(|| PhlError::Numerical("singular metric".into()));
    let hinv = inv(&h0)?;
    let d1 = |s: &[DMatrix<f64>; 4]| (&s[0] - &s[3] + (&s[2] - &s[1]) * 8.0) / (12.0 * delta);
    let ax = &hinv * d1(&x);
    let ay = &hinv * d1(&y);
    let re = ((&ax * &ax).trace() - (&ay * &ay).trace()) * 0.25;
    let im = -(&ax * &ay).trace() * 0.5;
    let conformality = re.hypot(im);
    let flux = |s: &[DMatrix<f64>; 4]| -> Result<DMatrix<f64>> {
        let (hp, hm) = (&s[2], &s[1]);
        let fwd = inv(&((hp + &h0) * 0.5))? * (hp - &h0) / delta;
        let bwd = inv(&((&h0 + hm) * 0.5))? * (&h0 - hm) / delta;
        Ok((fwd - bwd) / delta)
    };
    let tension = ((flux(&x)? + flux(&y)?) * 0.5).norm();
    Ok((conformality, tension))
}

/// Worst-case Gauss map checks over sample frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussReport {
    pub points: usize,
    pub step: f64,
    pub det_defect: f64,
    pub partner_defect: f64,
    /// `max |det H - 1|`.
    pub metric_det_defect: f64,
    pub min_eigenvalue: f64,
    pub plane_angle: f64,
    pub conformality: f64,
    pub tension: f64,
    /// Tension at half the step.
    pub tension_refined: f64,
    /// `log2(tension / tension_refined)`.
    pub tension_order: f64,
}

pub fn gauss_report(conn: &dyn Connection, samples: &[((f64, f64), PCMatrix)], step: f64) -> Result<GaussReport> {
    let rows: Vec<[f64; 8]> = samples
        .par_iter()
        .map(|(p, f)| -> Result<[f64; 8]> {
            let (dd, pd) = lift_defect(f)?;
            let sp = symmetric_point(&gauss_lift(f))?;
            let (c1, t1) = minimality_at(conn, f, *p, step)?;
            let (c2, t2) = minimality_at(conn, f, *p, 0.5 * step)?;
            Ok([dd, pd, (sp.det() - 1.0).abs(), sp.min_eigenvalue(), plane_defect(f)?, c1.max(c2), t1, t2])
        })
        .collect::<Result<_>>()?;
    let max = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
    let (tension, tension_refined) = (max(6), max(7));
    Ok(GaussReport {
        points: rows.len(),
        step,
        det_defect: max(0),
        partner_defect: max(1),
        metric_det_defect: max(2),
        min_eigenvalue: rows.iter().map(|r| r[3]).fold(f64::INFINITY, f64::min),
        plane_angle: max(4),
        conformality: max(5),
        tension,
        tension_refined,
        tension_order: (tension / tension_refined).log2(),
    })
}
