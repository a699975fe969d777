//! Quasi-rectifiability verdicts for the Euler families and their
//! invariance under rescaling by positive functions.

use std::sync::Arc;

use proptest::prelude::*;
use wavelab_core::euler::{EulerField, FieldKind, GasParameters};
use wavelab_core::fields::{self, FieldRef, PowerLaw, ScalarRef};
use wavelab_core::quasirect::{self, euler_rescalings, Orientation};

use FieldKind::*;

fn family(kinds: &[FieldKind], kappa: f64) -> Vec<FieldRef<f64>> {
    kinds.iter().map(|&k| EulerField::shared(k, kappa)).collect()
}

#[test]
fn verdict_table() {
    let cases: [(&[FieldKind], bool); 5] = [
        (&[GammaPlus, GammaMinus], true),
        (&[GammaPlus, GammaZero], false),
        (&[GammaMinus, GammaZero], false),
        (&[GammaPlus, GammaZero, GammaMinus], false),
        (&[W1, W2, GammaZero], true),
    ];
    for kappa in [1.4, 2.0, 3.0] {
        for (kinds, expected) in cases {
            let fam = family(kinds, kappa);
            let span = quasirect::span_test(&fam, 200, 7).unwrap();
            assert_eq!(span.verdict, expected, "{kinds:?} at kappa {kappa}");
            if fam.len() == 3 {
                let curl = quasirect::curl_span_test(&fam, 200, 7).unwrap();
                assert_eq!(curl.verdict, span.verdict, "criteria disagree on {kinds:?}");
            }
        }
    }
}

#[test]
fn sound_rescaling_commutes_and_is_exact_inversely() {
    for kappa in [1.4, 2.0, 3.0] {
        let g = GasParameters::with_kappa(kappa);
        let fam = family(&[GammaPlus, GammaMinus], kappa);
        let h = euler_rescalings::sound(&g);
        let r = quasirect::verify_rescaling(&fam, &[h.clone(), h.clone()], 200, 3).unwrap();
        assert!(r.holds && r.max_relative_residual <= 1e-8, "{r:?}");
        let o = quasirect::rescaling_orientation(&fam, &[h.clone(), h], 100, 3).unwrap();
        assert!(matches!(o.exactness, Orientation::Inverse | Orientation::Both));
    }
}

fn weight() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.1f64..3.0, -1.5f64..1.5, -1.5f64..1.5)
}

fn power_law((c, a, b): (f64, f64, f64)) -> ScalarRef<f64> {
    Arc::new(PowerLaw::new(c, a, b, "w"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Multiplying the fields by positive functions keeps the distribution,
    /// hence the verdict.
    #[test]
    fn verdict_is_invariant_under_positive_rescaling(wa in weight(), wb in weight(), seed in 0u64..1000) {
        for (kinds, expected) in [([GammaPlus, GammaMinus], true), ([GammaPlus, GammaZero], false)] {
            let fam = family(&kinds, 1.4);
            let scaled = vec![fields::scale_field(&power_law(wa), &fam[0]), fields::scale_field(&power_law(wb), &fam[1])];
            let r = quasirect::span_test(&scaled, 40, seed).unwrap();
            prop_assert_eq!(r.verdict, expected);
        }
    }
}
