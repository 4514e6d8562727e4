use nalgebra::DVector;
use phl_core::hspace::{
    holonomy_sectional_curvature, kahler_form, metric, para_structure, project_tangent, riemann_raw,
    sectional_curvature, HPoint,
};
use phl_core::paracomplex::{q_form, PcVector};
use proptest::prelude::*;

const KAPPA: f64 = -4.0;

/// `(e_1 - e_n)/sqrt 2` is a real unit timelike vector for the anti-diagonal form.
fn base(n: usize) -> HPoint {
    let mut v = DVector::zeros(n);
    v[0] = std::f64::consts::FRAC_1_SQRT_2;
    v[n - 1] = -std::f64::consts::FRAC_1_SQRT_2;
    HPoint::new(PcVector::real(v)).unwrap()
}

fn real_unit(n: usize, i: usize) -> PcVector {
    let mut v = DVector::zeros(n);
    if i == 0 {
        v[0] = std::f64::consts::FRAC_1_SQRT_2;
        v[n - 1] = std::f64::consts::FRAC_1_SQRT_2;
    } else if 2 * i + 1 == n {
        v[i] = 1.0;
    } else {
        v[i] = std::f64::consts::FRAC_1_SQRT_2;
        v[n - 1 - i] = std::f64::consts::FRAC_1_SQRT_2;
    }
    PcVector::real(v)
}

#[test]
fn lemma_formula_values() {
    for n in [3, 5] {
        let z = base(n);
        let x = project_tangent(&z, &real_unit(n, 0));
        let y = project_tangent(&z, &real_unit(n, 1));
        let px = para_structure(&x);
        let k_holo = sectional_curvature(&x, &px, KAPPA).unwrap();
        assert!((k_holo - KAPPA).abs() < 1e-12, "n = {n}: {k_holo}");
        let k_real = sectional_curvature(&x, &y, KAPPA).unwrap();
        assert!((k_real + 1.0).abs() < 1e-12, "n = {n}: {k_real}");
        assert!((metric(&px, &px).unwrap() + metric(&x, &x).unwrap()).abs() < 1e-14);
        assert!((kahler_form(&x, &px).unwrap() - metric(&x, &x).unwrap()).abs() < 1e-14);
    }
}

#[test]
fn holonomy_matches_lemma() {
    for n in [3, 5] {
        let z = base(n);
        let x = real_unit(n, 0);
        let y = real_unit(n, 1);
        let k_holo = holonomy_sectional_curvature(&z, &x, &x.tau(), 1e-3, 4).unwrap();
        assert!((k_holo - KAPPA).abs() < 1e-4, "n = {n}: {k_holo}");
        let k_real = holonomy_sectional_curvature(&z, &x, &y, 1e-3, 4).unwrap();
        assert!((k_real + 1.0).abs() < 1e-4, "n = {n}: {k_real}");
    }
}

fn tangent(n: usize) -> impl Strategy<Value = PcVector> {
    (prop::collection::vec(-1.0..1.0f64, n), prop::collection::vec(-1.0..1.0f64, n))
        .prop_map(|(a, b)| PcVector::new(DVector::from_vec(a), DVector::from_vec(b)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn curvature_symmetries(a in tangent(5), b in tangent(5), c in tangent(5), d in tangent(5)) {
        let z = base(5);
        let [x, y, u, w] = [a, b, c, d].map(|v| project_tangent(&z, &v).vec);
        let r = |p: &PcVector, q: &PcVector, s: &PcVector, t: &PcVector| riemann_raw(p, q, s, t, KAPPA);
        let base_v = r(&x, &y, &u, &w);
        let tol = 1e-11 * (1.0 + base_v.abs());
        prop_assert!((base_v + r(&y, &x, &u, &w)).abs() < tol);
        prop_assert!((base_v + r(&x, &y, &w, &u)).abs() < tol);
        prop_assert!((base_v - r(&u, &w, &x, &y)).abs() < tol);
        let bianchi = base_v + r(&y, &u, &x, &w) + r(&u, &x, &y, &w);
        prop_assert!(bianchi.abs() < tol);
        // R(X, Y, PZ, PW) = -R(X, Y, Z, W) for a para-Kähler curvature tensor
        prop_assert!((r(&x, &y, &u.tau(), &w.tau()) + base_v).abs() < tol);
    }

    #[test]
    fn projection_is_orthogonal(a in tangent(3)) {
        let z = base(3);
        let t = project_tangent(&z, &a);
        let q = q_form(&t.vec, &z.lift).unwrap();
        prop_assert!(q.re.abs() < 1e-13 && q.im_tau.abs() < 1e-13);
    }
}
