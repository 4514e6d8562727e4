use num_complex::Complex64;
use phl::background::{Background, Preset};
use phl::connection::{Connection, FlatConnection};
use phl::immersion::{
    block_decoupling, bump_variation, circle_path, eta_chain, frenet_verify, immerse_path, normal_coords,
    term_b_closed_form, term_b_eigenvalues, Side,
};
use phl::transport::{holonomy, holonomy_defect, plaquette_order, square_loop, transport_patch};
use phl_core::paracomplex::PCMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn patch<B: Background>(conn: &FlatConnection<B>, origin: (f64, f64), h: f64, k: usize) -> Vec<((f64, f64), PCMatrix)> {
    let n = conn.dim();
    let frames = transport_patch(conn, &PCMatrix::identity(n), origin, (h, 0.0), (0.0, h), k, k, 1e-3).unwrap();
    frames
        .into_iter()
        .enumerate()
        .map(|(idx, f)| ((origin.0 + (idx / k) as f64 * h, origin.1 + (idx % k) as f64 * h), f))
        .collect()
}

#[test]
fn constant_m2_invariants_along_length_ten() {
    let conn = FlatConnection::new(Preset::unit(2));
    let path = circle_path((0.0, 0.0), 10.0, 400);
    let (field, rep) = immerse_path(&conn, &PCMatrix::identity(5), &path, 1e-3, 50).unwrap();
    println!("{rep:?}");
    assert!((rep.length - 10.0).abs() < 1e-3);
    assert!(rep.sigma_norm < 1e-8);
    assert!(rep.conformality < 1e-6);
    assert!(rep.induced_metric < 1e-5);
    assert!(rep.harmonic_tangential < 1e-5);
    assert!(rep.drift_slope.abs() < 1e-9);
    // the circle is closed, so flatness brings the frame back
    assert!(holonomy_defect(field.last()) < 1e-8);
}

#[test]
fn plaquette_flatness_order_on_exp_preset() {
    let conn = FlatConnection::new(Preset::Exp { m: 2, c: Complex64::new(0.9, 0.2), k: Complex64::new(0.8, -0.5) });
    let rep = plaquette_order(&conn, (0.1, -0.2), 0.5, 8).unwrap();
    println!("{rep:?}");
    assert!((1.8..=2.2).contains(&rep.order));
}

#[test]
fn homotopic_loops_agree() {
    let conn = FlatConnection::new(Preset::Exp { m: 2, c: Complex64::new(1.1, 0.0), k: Complex64::new(0.3, 0.6) });
    let a = holonomy(&conn, &[(0.0, 0.0), (0.4, 0.0), (0.4, 0.3)], 1e-3).unwrap();
    let b = holonomy(&conn, &[(0.0, 0.0), (0.0, 0.3), (0.4, 0.3)], 1e-3).unwrap();
    assert!((&a.plus - &b.plus).amax() < 1e-8);
    let l = holonomy(&conn, &square_loop((0.2, 0.1), 0.3), 1e-3).unwrap();
    assert!(holonomy_defect(&l) < 1e-8);
}

#[test]
fn frenet_checks_pass_on_presets() {
    let cases: Vec<(Preset, (f64, f64))> = vec![
        (Preset::unit(1), (0.0, 0.0)),
        (Preset::unit(2), (0.0, 0.0)),
        (Preset::FuchsianM1, (0.0, 1.0)),
        (Preset::FuchsianM2, (0.0, 1.0)),
        (Preset::Exp { m: 2, c: Complex64::new(0.7, 0.4), k: Complex64::new(0.5, 0.2) }, (0.0, 0.0)),
        (Preset::Polystable { c: Complex64::new(0.6, 0.3) }, (0.0, 1.0)),
    ];
    for (p, o) in cases {
        let name = p.name();
        let conn = FlatConnection::new(p);
        let rep = frenet_verify(&conn, &patch(&conn, o, 0.1, 3), 1e-3);
        println!("{name}: {rep:?}");
        assert!(rep.all_pass(), "{name}");
        assert!(rep.link_recovery < 1e-6, "{name}");
    }
}

#[test]
fn corrupted_gamma_block_breaks_conformality() {
    let conn = FlatConnection::corrupted(Preset::unit(2));
    let rep = frenet_verify(&conn, &patch(&conn, (0.0, 0.0), 0.1, 2), 1e-3);
    assert!(!rep.conformal_ok && !rep.tridiagonal_ok);
}

#[test]
fn polystable_preset_decouples() {
    let conn = FlatConnection::new(Preset::Polystable { c: Complex64::new(0.8, -0.4) });
    let samples = patch(&conn, (0.1, 0.8), 0.15, 3);
    let off = block_decoupling(&conn, &samples, &[0, 1, 4, 5], 1e-3);
    println!("decoupling {off:e}");
    assert!(off < 1e-8);
    let hitchin = FlatConnection::new(Preset::FuchsianM2);
    let samples = patch(&hitchin, (0.1, 0.8), 0.15, 2);
    assert!(block_decoupling(&hitchin, &samples, &[0, 1, 4, 5], 1e-3) > 1e-2);
}

#[test]
fn fuchsian_chain_values() {
    let bg = Preset::FuchsianM2;
    let h = bg.h(0.3, 1.7);
    let e = eta_chain(&h, &[1.0, 0.0]);
    assert!((e[2] - 2.0 / 3.0).abs() < 1e-14 && e[3] == 0.0 && (e[4] - 2.0 / 3.0).abs() < 1e-14);
}

#[test]
fn term_b_eigenvalues_match_closed_form() {
    let presets = [
        Preset::FuchsianM2,
        Preset::Exp { m: 2, c: Complex64::new(0.7, 0.4), k: Complex64::new(0.5, 0.2) },
        Preset::Exp { m: 3, c: Complex64::new(1.3, -0.4), k: Complex64::new(-0.2, 0.6) },
        Preset::Polystable { c: Complex64::new(0.6, 0.3) },
    ];
    for p in presets {
        let (x, y) = (0.2, 1.3);
        let h = p.h(x, y);
        let g2: Vec<f64> = p.gamma(x, y).iter().map(|g| g.norm_sqr()).collect();
        let conn = FlatConnection::new(p);
        let (ox, oy) = conn.omega(x, y);
        for side in [Side::Plus, Side::Minus] {
            let num = term_b_eigenvalues(&ox, &oy, side);
            let closed = term_b_closed_form(&h, &g2, side);
            assert_eq!(num.len(), closed.len());
            for (a, b) in num.iter().zip(&closed) {
                assert!((a - b).abs() < 1e-8, "{side:?}: {num:?} vs {closed:?}");
            }
        }
    }
}

#[test]
fn second_variation_signs_on_fuchsian_preset() {
    let conn = FlatConnection::new(Preset::FuchsianM2);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..20 {
        let side = if trial % 2 == 0 { Side::Plus } else { Side::Minus };
        let dim = normal_coords(2, side).len();
        let coeffs: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let center = (rng.random_range(-1.0..1.0), rng.random_range(0.8..2.0));
        let rho = rng.random_range(0.1..0.4);
        for i in 0..15 {
            for j in 0..15 {
                let x = center.0 - rho + 2.0 * rho * (i as f64 + 0.5) / 15.0;
                let y = center.1 - rho + 2.0 * rho * (j as f64 + 0.5) / 15.0;
                let t = bump_variation(&conn, side, center, rho, &coeffs, x, y).unwrap();
                if t.norm == 0.0 {
                    continue;
                }
                match side {
                    Side::Plus => assert!(t.integrand > 0.0 && t.c.abs() < 1e-14, "{t:?}"),
                    Side::Minus => assert!(t.integrand < 0.0, "{t:?}"),
                }
            }
        }
    }
}
