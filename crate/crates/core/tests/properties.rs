use num_complex::Complex64;
use proptest::prelude::*;

use srj_core::catalog::{format_scheme, lookup_mc, parse_scheme};
use srj_core::optimizer::derive_scheme;
use srj_core::{chebyshev_scheme, make_region, Ratio, Scheme};

fn factors(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3f64..200.0, 1..=max_len)
}

proptest! {
    #[test]
    fn amplification_is_one_at_one(w in factors(24)) {
        let s = Scheme::new(w).unwrap();
        prop_assert_eq!(s.amplification(Complex64::new(1.0, 0.0)), Complex64::new(1.0, 0.0));
        prop_assert_eq!(s.amplification_real(1.0), 1.0);
    }

    #[test]
    fn slope_matches_central_difference(w in prop::collection::vec(0.1f64..5.0, 1..=8)) {
        let s = Scheme::new(w).unwrap();
        let h = 1e-6;
        let fd = (s.amplification_real(1.0 + h) - s.amplification_real(1.0 - h)) / (2.0 * h);
        prop_assert!((fd - s.slope_at_one()).abs() <= 1e-6 * s.slope_at_one().max(1.0));
    }

    #[test]
    fn real_factors_give_conjugate_symmetry(
        w in factors(12),
        re in -1.5f64..1.5,
        im in -1.0f64..1.0,
    ) {
        let s = Scheme::new(w).unwrap();
        let z = Complex64::new(re, im);
        let g = s.amplification(z);
        let gc = s.amplification(z.conj());
        prop_assert!((gc - g.conj()).norm() <= 1e-12 * g.norm().max(1.0));
    }

    #[test]
    fn ellipse_test_points_lie_on_the_boundary(m in 1u32..=40, c in 0.01f64..=1.0) {
        let region = make_region(m, c).unwrap();
        let pts = region.test_points();
        prop_assert_eq!(pts.len(), 2 * m as usize);
        for z in &pts {
            prop_assert!(region.boundary_residual(*z).abs() <= 1e-10);
        }
        prop_assert!(pts.iter().all(|z| z.im == 0.0 || pts.iter().any(|w| *w == z.conj())));
    }

    #[test]
    fn scheme_file_round_trip_is_bitwise(w in factors(20), g in prop::option::of(0.0f64..1.0)) {
        let mut s = Scheme::new(w).unwrap();
        if let Some(g) = g {
            s = s.with_g_bar(g).unwrap();
        }
        let text = format_scheme(&s, true);
        let back = parse_scheme(&text, None).unwrap();
        prop_assert!(back.converged);
        prop_assert_eq!(back.scheme.factors().len(), s.factors().len());
        for (x, y) in back.scheme.factors().iter().zip(s.factors()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
        prop_assert_eq!(back.scheme.g_bar().map(f64::to_bits), s.g_bar().map(f64::to_bits));
    }
}

fn derived_grid() -> Vec<Vec<f64>> {
    (2..=10u32)
        .map(|m| {
            Ratio::grid()
                .into_iter()
                .map(|c| {
                    let r = derive_scheme(m, c).unwrap();
                    assert!(r.converged, "({m},{c}) did not converge");
                    r.g_bar
                })
                .collect()
        })
        .collect()
}

#[test]
fn bound_grows_with_c_and_with_m() {
    let grid = derived_grid();
    for (i, row) in grid.iter().enumerate() {
        assert!(row.windows(2).all(|p| p[0] < p[1]), "M={}: {row:?}", i + 2);
    }
    // On the real axis the bound is 1/3 for every M. Off the axis a longer
    // scheme has to cover a larger ellipse reaching closer to 1, and pays
    // for it with a larger bound.
    for pair in grid.windows(2) {
        assert!((pair[1][0] - pair[0][0]).abs() < 1e-8);
        for col in 1..5 {
            assert!(pair[1][col] > pair[0][col], "c column {col}: {} then {}", pair[0][col], pair[1][col]);
        }
    }
}

#[test]
fn boundary_sampling_stays_near_the_bound() {
    for m in 2..=10u32 {
        for c in Ratio::grid().into_iter().skip(1) {
            let r = derive_scheme(m, c).unwrap();
            let region = make_region(m, c.value()).unwrap();
            let peak = region
                .boundary_samples(720)
                .into_iter()
                .map(|z| r.scheme.amplification(z).norm())
                .fold(0.0, f64::max);
            assert!(peak <= r.g_bar + 1e-3, "({m},{c}): boundary peak {peak} vs {}", r.g_bar);
        }
    }
}

#[test]
fn real_axis_derivation_recovers_closed_form() {
    for m in 2..=8u32 {
        let derived = derive_scheme(m, Ratio::ZERO).unwrap();
        let closed = chebyshev_scheme(m).sorted_factors();
        for (x, y) in derived.scheme.sorted_factors().iter().zip(&closed) {
            assert!(((x - y) / y).abs() < 1e-6, "M={m}: {x} vs {y}");
        }
        assert!((derived.g_bar - 1.0 / 3.0).abs() < 1e-8);
    }
}

#[test]
fn derived_bounds_never_exceed_bundled_ones() {
    for m in 2..=10u32 {
        for c in Ratio::grid() {
            let derived = derive_scheme(m, c).unwrap().g_bar;
            let bundled = lookup_mc(m, c).unwrap().g_bar().unwrap();
            assert!(derived <= bundled * (1.0 + 1e-6), "({m},{c}): {derived} vs {bundled}");
        }
    }
}
