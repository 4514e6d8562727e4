use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::{Matrix3, Vector3};
use phl_core::devmap::{
    anchor_expected, base_frame, base_point, dev, dev_vector, dev_with_frame, frame_at, gw_membership, halton_samples,
    injectivity_probe, minkowski, probe_flags, sections, surjectivity_witness, transversality_det,
    transversality_matrix, Membership, UTPoint,
};
use phl_core::hspace::FlagPoint;
use phl_core::paracomplex::q_form;
use proptest::prelude::*;

fn ut() -> impl Strategy<Value = UTPoint> {
    (0.0..3.0f64, 0.0..2.0 * PI, 0.0..2.0 * PI).prop_map(|(r, t, a)| UTPoint::polar(r, t, a))
}

/// Boost in the `(p0, a1)` plane composed with a rotation about `p0`, written
/// in the `(p0, a1, a2)` basis and conjugated back.
fn isometry(b: f64, rot: f64) -> Matrix3<f64> {
    let (a1, a2) = base_frame();
    let basis = Matrix3::from_columns(&[base_point(), a1, a2]);
    let boost = Matrix3::new(b.cosh(), b.sinh(), 0.0, b.sinh(), b.cosh(), 0.0, 0.0, 0.0, 1.0);
    let r = Matrix3::new(1.0, 0.0, 0.0, 0.0, rot.cos(), -rot.sin(), 0.0, rot.sin(), rot.cos());
    basis * boost * r * basis.try_inverse().unwrap()
}

fn act(g: &Matrix3<f64>, f: &FlagPoint) -> FlagPoint {
    let l = Vector3::new(f.line[0], f.line[1], f.line[2]);
    let phi = Vector3::new(f.functional[0], f.functional[1], f.functional[2]);
    let gl = g * l;
    // covectors transform by the inverse transpose
    let gphi = g.try_inverse().unwrap().transpose() * phi;
    FlagPoint::new(
        &nalgebra::DVector::from_column_slice(gl.as_slice()),
        &nalgebra::DVector::from_column_slice(gphi.as_slice()),
    )
    .unwrap()
}

/// Hand expansion of the `6 x 6` determinant at `p0` with `alpha = 0`: in the
/// Cartesian basis the columns are `(a1,0), (0,a2), (a2,0), (0,-a1), (p0,0), (0,p0)`,
/// a signed permutation of the orthonormal-in-`R^3` basis `(p0, a1, a2)` in both halves.
fn det_oracle_at_base() -> f64 {
    let (a1, a2) = base_frame();
    let p = base_point();
    let e = Matrix3::from_columns(&[a1, a2, p]).determinant();
    let f = Matrix3::from_columns(&[a2, -a1, p]).determinant();
    // block columns ordered (x1, y1, x2, y2, x3, y3) -> permutation to (x1, x2, x3, y1, y2, y3)
    // has sign (-1)^3 = -1
    -e * f
}

#[test]
fn anchor_identity() {
    let (u, v) = base_frame();
    let (plus, minus) = dev_vector(&u, &v, 3.0 * FRAC_PI_4);
    let (ep, em) = anchor_expected();
    assert!((plus - ep).amax() < 1e-12 && (minus - em).amax() < 1e-12);
}

#[test]
fn transversality_oracle() {
    let det = transversality_det(&UTPoint::polar(0.0, 0.0, 0.0)).unwrap();
    assert!((det - det_oracle_at_base()).abs() < 1e-10, "{det}");
    assert!((det + 1.0).abs() < 1e-12);
}

#[test]
fn timelike_flag_is_not_member() {
    let p = base_point();
    let f = FlagPoint::new(
        &nalgebra::DVector::from_column_slice(p.as_slice()),
        &nalgebra::DVector::from_column_slice(&[1.0, 0.0, 1.0]),
    )
    .unwrap();
    assert_eq!(gw_membership(&f), Membership::NonMember);
}

#[test]
fn probe_self_test() {
    let mut pts = halton_samples(500, 2.0);
    let report = injectivity_probe(&pts, 1e-8).unwrap();
    assert!(report.collisions.is_empty() && report.duplicates.is_empty());
    pts.push(UTPoint::polar(0.4, 1.0, 0.2));
    pts.push(UTPoint::polar(0.4, 1.0, 0.2 + PI));
    pts.push(pts[3]);
    let n = pts.len();
    let report = injectivity_probe(&pts, 1e-8).unwrap();
    assert!(report.collisions.is_empty());
    assert_eq!(report.identified, 1);
    assert_eq!(report.duplicates, vec![(3, n - 1)]);
    // a flag planted on another base point is a genuine collision
    let mut flags: Vec<_> = pts.iter().map(|p| dev(p).unwrap()).collect();
    flags[10] = flags[20].clone();
    let report = probe_flags(&pts, &flags, 1e-8);
    assert_eq!(report.collisions, vec![(10, 20)]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sections_are_isotropic(pt in ut()) {
        let (u, v) = frame_at(&pt.p);
        let (s1, s2, s) = sections(&pt.p, &u, &v, pt.alpha).unwrap();
        let q11 = q_form(&s1, &s1).unwrap();
        let q22 = q_form(&s2, &s2).unwrap();
        let q12 = q_form(&s1, &s2).unwrap();
        let qss = q_form(&s, &s).unwrap();
        let scale = 1.0 + s.norm().powi(2);
        prop_assert!((q11.re - 1.0).abs() < 1e-12 * scale);
        prop_assert!((q22.re + 1.0).abs() < 1e-12 * scale);
        prop_assert!(q12.re.abs().max(q12.im_tau.abs()) < 1e-12 * scale);
        prop_assert!(qss.re.abs().max(qss.im_tau.abs()) < 1e-12 * scale);
    }

    #[test]
    fn dev_is_pi_periodic(pt in ut()) {
        let a = dev(&pt).unwrap();
        let b = dev(&UTPoint { alpha: pt.alpha + PI, ..pt }).unwrap();
        prop_assert!(a.distance(&b) < 1e-12);
        let (u, v) = frame_at(&pt.p);
        let (sp, sm) = dev_vector(&u, &v, pt.alpha);
        let (tp, tm) = dev_vector(&u, &v, pt.alpha + PI);
        prop_assert!((sp + tp).amax() < 1e-12 && (sm + tm).amax() < 1e-12);
        prop_assert!(sp.cross(&sm).norm() > 1e-6);
    }

    #[test]
    fn dev_lands_in_domain(pt in ut()) {
        prop_assert_eq!(gw_membership(&dev(&pt).unwrap()), Membership::Member);
    }

    #[test]
    fn transversality_is_pi_periodic(pt in ut()) {
        let d0 = transversality_det(&pt).unwrap();
        let d1 = transversality_det(&UTPoint { alpha: pt.alpha + PI, ..pt }).unwrap();
        prop_assert!((d0 - d1).abs() < 1e-9 * (1.0 + d0.abs()));
        prop_assert!(d0.abs() > 0.5);
    }

    #[test]
    fn dev_is_equivariant(pt in ut(), b in -1.0..1.0f64, rot in 0.0..6.0f64) {
        let g = isometry(b, rot);
        let (u, v) = frame_at(&pt.p);
        let moved = dev_with_frame(&(g * pt.p), &(g * u), &(g * v), pt.alpha).unwrap();
        let expected = act(&g, &dev_with_frame(&pt.p, &u, &v, pt.alpha).unwrap());
        prop_assert!(moved.distance(&expected) < 1e-10);
        // the general frame at g p differs from the polar one by a rotation
        let gp = g * pt.p;
        prop_assert!((minkowski(&gp, &gp) + 1.0).abs() < 1e-10);
        let m = transversality_matrix(&gp, &(g * u), &(g * v), pt.alpha).unwrap();
        prop_assert!(m.determinant().is_finite());
    }

    #[test]
    fn surjectivity_witness_recovers(pt in ut()) {
        let f = dev(&pt).unwrap();
        let back = surjectivity_witness(&f).unwrap();
        let g = dev(&back).unwrap();
        prop_assert!(f.distance(&g) < 1e-8);
        prop_assert!((back.p - pt.p).amax() < 1e-8 * (1.0 + pt.p.amax()));
    }
}
