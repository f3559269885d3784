use exact_uncertainty::grid::Support;
use exact_uncertainty::output::fmt_f64;
use exact_uncertainty::state::{fields_to_wavefunction, make_state, wavefunction_to_fields};
use exact_uncertainty::theorem::{basis_terms, scaling_check_terms, GaussianMixture, Term};
use exact_uncertainty::uncertainty::{cramer_rao_check, variance_decomposition};
use exact_uncertainty::{Grid1D, StateSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid() -> Grid1D {
    Grid1D::new(-14.0, 14.0, 512).unwrap()
}

fn chirped() -> impl Strategy<Value = (StateSpec, f64)> {
    (
        -2.0..2.0f64,
        0.6..1.5f64,
        -2.0..2.0f64,
        -0.5..0.5f64,
        0.3..2.0f64,
    )
        .prop_map(|(x0, sigma, k0, alpha, hbar)| {
            (
                StateSpec::ChirpedGaussian {
                    x0,
                    sigma,
                    k0,
                    alpha,
                },
                hbar,
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gaussian_product_is_half_hbar((spec, hbar) in chirped()) {
        let psi = make_state(&spec, &grid(), hbar).unwrap();
        let r = variance_decomposition(&psi, hbar).unwrap();
        prop_assert!((r.product_exact / (hbar / 2.0) - 1.0).abs() < 1e-9, "{}", r.product_exact);
        prop_assert!(r.violations().is_empty());
    }

    #[test]
    fn fields_round_trip((spec, hbar) in chirped()) {
        let psi = make_state(&spec, &grid(), hbar).unwrap();
        let back = fields_to_wavefunction(&wavefunction_to_fields(&psi, hbar).unwrap(), hbar).unwrap();
        // equal up to the global phase fixed by the anchor, on the support of p
        let mid = psi.grid().midpoint();
        let global = psi.values()[mid] / back.values()[mid];
        let global = global / global.norm();
        let support = Support::of_density(psi.density().values()).unwrap();
        let worst = (0..psi.grid().n())
            .filter(|&j| support.contains(j))
            .map(|j| (psi.values()[j] - global * back.values()[j]).norm())
            .fold(0.0, f64::max);
        prop_assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn mixture_laws(seed in any::<u64>(), k in 0.6..1.6f64) {
        let mix = GaussianMixture::random(&mut ChaCha8Rng::seed_from_u64(seed));
        let g = Grid1D::new(-24.0, 24.0, 1024).unwrap();
        let p = mix.density(&g).unwrap();
        let b = basis_terms(&p).unwrap();
        prop_assert!((b.i_v + 1.0).abs() < 1e-10, "I_v = {}", b.i_v);
        let cr = cramer_rao_check(&p).unwrap();
        prop_assert!(cr.holds, "{cr:?}");
        let w = &scaling_check_terms(&p, k, &[Term::W]).unwrap().terms[0];
        prop_assert!(w.residual < 1e-6, "{w:?}");
    }

    #[test]
    fn float_formatting_round_trips(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }
}
