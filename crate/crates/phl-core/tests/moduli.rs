use num_complex::Complex64;
use phl_core::higgs::{
    apply_gauge, gauge_equivalent, moduli_dimensions, q_differential, stability_classify, stability_classify_full,
    top_stratum_dim, HiggsData, ModuliStatus, Stability,
};
use proptest::prelude::*;

/// `h^0` of a line bundle of degree `e > 2g - 2`.
fn riemann_roch(e: i64, g: i64) -> i64 {
    assert!(e > 2 * g - 2);
    e - g + 1
}

/// Independent reading of the stratification: the fibre is a space of
/// sections of a non-special line bundle, the base is a divisor space.
fn oracle(m: i64, g: i64, d: i64) -> Option<(i64, i64)> {
    let k = 2 * g - 2;
    if d > 0 && d <= m * k {
        // gamma_m in H^0(K^m L^{-2}) after dividing by the divisor of gamma_{m-1}
        Some((riemann_roch(2 * d + k, g), m * k - d))
    } else if d <= 0 && d + g >= 1 {
        Some((riemann_roch(m * k - d, g), 2 * (d + g - 1)))
    } else {
        None
    }
}

#[test]
fn exhaustive_against_oracle() {
    for m in [2usize, 3] {
        for g in [2i64, 3, 4] {
            for d in -10..=30 {
                let r = moduli_dimensions(m, g, d).unwrap();
                match oracle(m as i64, g, d) {
                    Some((fibre, base)) => {
                        assert_eq!(r.status, ModuliStatus::Stratum, "{m} {g} {d}");
                        assert_eq!((r.bundle_rank, r.base_dim), (fibre, base), "{m} {g} {d}");
                        assert_eq!(r.total_dim, fibre + base);
                    }
                    None => assert_eq!(r.status, ModuliStatus::Empty, "{m} {g} {d}"),
                }
                if d == m as i64 * (2 * g - 2) {
                    assert_eq!(r.total_dim, top_stratum_dim(m, g));
                    assert_eq!(r.total_dim, (1 + 4 * m as i64) * (g - 1));
                }
                // the stable window agrees with the non-empty strata
                let st = stability_classify(m, g, d, false).unwrap();
                assert_eq!(st == Stability::Stable, r.status == ModuliStatus::Stratum, "{m} {g} {d}");
            }
        }
    }
}

#[test]
fn polystable_family() {
    assert_eq!(stability_classify_full(2, 2, 0, false, true).unwrap(), Stability::StrictlyPolystable);
    assert_eq!(stability_classify_full(2, 2, -1, false, true).unwrap(), Stability::StrictlyPolystable);
    assert_eq!(stability_classify_full(2, 2, -2, false, true).unwrap(), Stability::Empty);
    assert_eq!(stability_classify_full(2, 2, 1, false, false).unwrap(), Stability::Stable);
}

#[test]
fn gamma_m_zero_window() {
    for d in -5..=10 {
        let s = stability_classify(3, 2, d, true).unwrap();
        let expect = if d > 6 {
            Stability::Empty
        } else if d > 0 {
            Stability::Stable
        } else {
            Stability::Unstable
        };
        assert_eq!(s, expect, "{d}");
    }
}

fn cplx() -> impl Strategy<Value = Complex64> {
    (0.2..2.0f64, -3.0..3.0f64).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

proptest! {
    #[test]
    fn gauge_orbit_is_recognised(
        g in prop::collection::vec(prop::collection::vec(cplx(), 6), 3),
        l in prop::collection::vec(cplx(), 2),
    ) {
        let a = HiggsData::new(3, 2, 4, g).unwrap();
        let lambdas = [Complex64::new(1.0, 0.0), l[0], l[1]];
        let b = apply_gauge(&a, &lambdas);
        let w = gauge_equivalent(&a, &b, 1e-10).unwrap();
        for (x, y) in w.iter().zip(&lambdas) {
            prop_assert!((x - y).norm() < 1e-9);
        }
        // the differential is gauge invariant
        for (x, y) in q_differential(&a).iter().zip(&q_differential(&b)) {
            prop_assert!((x - y).norm() < 1e-9 * (1.0 + x.norm()));
        }
    }
}
