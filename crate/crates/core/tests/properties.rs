use landau_core::fock::{GaussPoly, MagneticField};
use landau_core::measures::MeasureSpec;
use landau_core::numerics::{
    gauss_legendre, lgamma, ln_factorial, lower_incomplete_gamma_ladder, BigComplex, BigReal,
};
use landau_core::rates::{estimate_limit, rates_from_values, Window};
use landau_core::toeplitz::{assemble, eigen_desc};
use proptest::prelude::*;

const PREC: u32 = 192;

fn poly(field: &MagneticField, coeffs: &[(u32, u32, f64, f64)]) -> GaussPoly {
    GaussPoly::from_terms(
        field,
        coeffs
            .iter()
            .map(|&(a, b, re, im)| ((a, b), BigComplex::from_f64(re, im, PREC)))
            .collect::<Vec<_>>(),
    )
}

fn coeffs() -> impl Strategy<Value = Vec<(u32, u32, f64, f64)>> {
    prop::collection::vec((0u32..5, 0u32..5, -2.0f64..2.0, -2.0f64..2.0), 1..6)
}

fn atoms() -> impl Strategy<Value = Vec<((f64, f64), f64)>> {
    prop::collection::vec(((-1.5f64..1.5, -1.5f64..1.5), 0.1f64..2.0), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn ladder_commutator_is_two_b(b in 0.5f64..3.0, c in coeffs()) {
        let field = MagneticField::from_f64(b, PREC).unwrap();
        let p = poly(&field, &c);
        let lhs = p.apply_creation().apply_annihilation()
            .sub(&p.apply_annihilation().apply_creation()).unwrap();
        let rhs = p.scale_real(&BigReal::from_f64(2.0 * b, PREC));
        prop_assert!(lhs.approx_eq(&rhs, 1e-40));
    }

    #[test]
    fn atom_spectra_are_rotation_invariant_and_low_rank(
        pts in atoms(), angle in 0.0f64..6.283, q in 0u32..3,
    ) {
        let field = MagneticField::from_f64(2.0, PREC).unwrap();
        let mu = MeasureSpec::atoms(&pts, PREC).unwrap();
        let rotated = mu
            .transformed(&BigReal::one(PREC), &BigReal::from_f64(angle, PREC))
            .unwrap();
        let m = assemble(q, 8, &field, &mu).unwrap();
        let a = eigen_desc(&m).unwrap();
        let b = eigen_desc(&assemble(q, 8, &field, &rotated).unwrap()).unwrap();
        let top = a.values[0].to_f64();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x.to_f64() - y.to_f64()).abs() <= 1e-30 * top);
        }
        // Nonnegative, trace-preserving, rank at most the number of atoms.
        let trace = (0..8).fold(BigReal::zero(PREC), |acc, k| &acc + &m.get(k, k).re);
        let sum = a.values.iter().fold(BigReal::zero(PREC), |acc, v| &acc + v);
        prop_assert!(sum.rel_close(&trace, 1e-30));
        prop_assert!(a.min_raw.to_f64() >= -1e-40 * top);
        for v in a.values.iter().skip(pts.len()) {
            prop_assert!(v.to_f64() <= 1e-40 * top);
        }
    }

    #[test]
    fn incomplete_gamma_ladder_recurrence(t in 0.01f64..30.0) {
        let tb = BigReal::from_f64(t, PREC);
        let p = lower_incomplete_gamma_ladder(40, &tb).unwrap();
        let e = (-&tb).exp();
        // p[i] = P(i + 1, t), and P(j+1, t) = P(j, t) - t^j e^{-t} / j!.
        let mut term = &e * &tb;
        for i in 0..39usize {
            let v = p[i].to_f64();
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!(p[i + 1].total_cmp(&p[i]).is_le());
            let diff = &p[i] - &p[i + 1];
            prop_assert!(diff.rel_close(&term, 1e-40));
            term = (&term * &tb).div_i64(i as i64 + 2);
        }
    }

    #[test]
    fn lgamma_matches_log_factorial(n in 0u64..500) {
        let lg = lgamma(&BigReal::from_u64(n + 1, PREC)).unwrap();
        let lf = ln_factorial(n, PREC);
        prop_assert!((lg.to_f64() - lf.to_f64()).abs() <= 1e-40 * (1.0 + lf.to_f64().abs()));
    }

    #[test]
    fn rates_recover_exact_geometric_laws(t in 0.2f64..4.0, c in 0.1f64..10.0, shift in 0i64..4) {
        // s_n = c t^n / n! exactly: log r_n = ln t + ln c / n lies in the fit span.
        let values: Vec<BigReal> = (0..40u32)
            .map(|i| {
                let n = i as i64 + shift;
                let tb = BigReal::from_f64(t, PREC);
                &BigReal::from_f64(c, PREC) * &(&tb.powi(n as u32) / &BigReal::factorial(n as u32, PREC))
            })
            .collect();
        let est = estimate_limit(&rates_from_values(&values, shift).unwrap(), Window::Auto).unwrap();
        prop_assert!((est.limit_est.unwrap() - t).abs() <= 1e-9 * t);
    }

    #[test]
    fn gauss_legendre_is_exact_to_degree_2n_minus_1(order in 2usize..24, k in 0u32..48) {
        let k = k % (2 * order as u32);
        let rule = gauss_legendre(order, PREC).unwrap();
        let got = rule.integrate(|x| x.powi(k));
        let want = if k % 2 == 1 {
            BigReal::zero(PREC)
        } else {
            BigReal::from_ratio(2, k as i64 + 1, PREC)
        };
        prop_assert!((&got - &want).abs().to_f64() <= 1e-50);
    }
}
