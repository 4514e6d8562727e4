use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use phl::background::{Background, Preset};
use phl::connection::{Connection, FlatConnection};
use proptest::prelude::*;

/// `U^{-1} A U` with `A` the Chern connection plus `Phi + Phi^dag` in the
/// unitary frame indexed by `k = -m..m`, and `U` the change to the real frame.
fn oracle(h: &[f64], du: &[(f64, f64)], gam: &[Complex64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = h.len();
    let n = 2 * m + 1;
    let pos = |k: i64| (k + m as i64) as usize;
    let i = Complex64::new(0.0, 1.0);
    let mut phi = DMatrix::<Complex64>::zeros(n, n);
    phi[(pos(1), pos(0))] = Complex64::from(h[0].sqrt());
    phi[(pos(0), pos(-1))] = Complex64::from(h[0].sqrt());
    for k in 1..m {
        let c = gam[k - 1] * (h[k] / h[k - 1]).sqrt();
        phi[(pos(k as i64 + 1), pos(k as i64))] = c;
        phi[(pos(-(k as i64)), pos(-(k as i64) - 1))] = c;
    }
    phi[(pos(-(m as i64)), pos(m as i64))] = gam[m - 1] / h[m - 1];
    let mut ax = DMatrix::<Complex64>::zeros(n, n);
    let mut ay = DMatrix::<Complex64>::zeros(n, n);
    for k in 1..=m {
        let (ux, uy) = du[k - 1];
        let (p, q) = (pos(k as i64), pos(-(k as i64)));
        ax[(p, p)] = -0.5 * i * uy;
        ay[(p, p)] = 0.5 * i * ux;
        ax[(q, q)] = -ax[(p, p)];
        ay[(q, q)] = -ay[(p, p)];
    }
    let dag = phi.adjoint();
    let ax = ax + &phi + &dag;
    let ay = ay + (&phi - &dag) * i;
    let mut u = DMatrix::<Complex64>::zeros(n, n);
    u[(pos(0), 0)] = Complex64::from(1.0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for k in 1..=m {
        let (p, q) = (pos(k as i64), pos(-(k as i64)));
        u[(p, 2 * k - 1)] = Complex64::from(s);
        u[(q, 2 * k - 1)] = Complex64::from(s);
        u[(p, 2 * k)] = i * s;
        u[(q, 2 * k)] = -i * s;
    }
    let ui = u.clone().try_inverse().unwrap();
    let ox = &ui * ax * &u;
    let oy = &ui * ay * &u;
    assert!(ox.iter().chain(oy.iter()).all(|z| z.im.abs() < 1e-12));
    (ox.map(|z| z.re), oy.map(|z| z.re))
}

fn check(p: Preset, x: f64, y: f64) {
    let j = p.jets(x, y, 1);
    let h: Vec<f64> = (0..j.m()).map(|k| j.h(k)).collect();
    let du: Vec<(f64, f64)> = j.u.iter().map(|u| (u.coeff(1, 0), u.coeff(0, 1))).collect();
    let gam: Vec<Complex64> = j.gamma.iter().map(|g| g.value()).collect();
    let (ex, ey) = oracle(&h, &du, &gam);
    let conn = FlatConnection::new(p);
    let (ox, oy) = conn.omega(x, y);
    let scale = ex.amax().max(ey.amax()).max(1.0);
    assert!((&ox - &ex).amax() < 1e-12 * scale, "{ox} vs {ex}");
    assert!((&oy - &ey).amax() < 1e-12 * scale, "{oy} vs {ey}");
}

#[test]
fn presets_match_unitary_frame_oracle() {
    check(Preset::unit(1), 0.0, 0.0);
    check(Preset::unit(2), 0.3, -0.1);
    check(Preset::FuchsianM1, 0.2, 0.7);
    check(Preset::FuchsianM2, -0.4, 1.3);
    check(Preset::Polystable { c: Complex64::new(0.4, -0.9) }, 0.1, 0.6);
    check(Preset::Exp { m: 3, c: Complex64::new(0.6, 0.2), k: Complex64::new(-0.3, 0.8) }, 0.2, 0.4);
}

#[test]
fn connection_is_trace_free_and_symmetric_split() {
    let conn = FlatConnection::new(Preset::Exp { m: 2, c: Complex64::new(0.9, 0.1), k: Complex64::new(0.2, 0.3) });
    let (ox, oy) = conn.omega(0.4, -0.3);
    assert!(ox.trace().abs() < 1e-14 && oy.trace().abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exp_presets_match_oracle(
        m in 1usize..4,
        cr in 0.3f64..2.0, ct in 0.0f64..TAU,
        kr in -0.8f64..0.8, ki in -0.8f64..0.8,
        x in -1.0f64..1.0, y in -1.0f64..1.0,
    ) {
        check(Preset::Exp { m, c: Complex64::from_polar(cr, ct), k: Complex64::new(kr, ki) }, x, y);
    }

    #[test]
    fn constant_presets_match_oracle(g in prop::collection::vec((0.2f64..3.0, 0.0f64..TAU), 1..4)) {
        let gam: Vec<Complex64> = g.iter().map(|(r, t)| Complex64::from_polar(*r, *t)).collect();
        check(Preset::constant(&gam).unwrap(), 0.0, 0.0);
    }
}
