//! Bracket identities and characteristic eigenpairs checked against
//! hand-derived closed forms.

use std::sync::Arc;

use proptest::prelude::*;
use wavelab_core::euler::{self, EulerField, FieldKind, GasParameters};
use wavelab_core::fields::{self, FieldRef, PowerLaw, ScalarRef, StateVector};
use wavelab_core::linalg::{self, Vec3};

fn field(kind: FieldKind, kappa: f64) -> FieldRef<f64> {
    EulerField::shared(kind, kappa)
}

fn state() -> impl Strategy<Value = Vec3<f64>> {
    (-2.3f64..2.3, -2.3f64..2.3, -5.0f64..5.0).prop_map(|(lr, lp, u)| [lr.exp(), lp.exp(), u])
}

fn kind() -> impl Strategy<Value = FieldKind> {
    prop::sample::select(FieldKind::ALL.to_vec())
}

fn kappa() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![1.4, 5.0 / 3.0, 2.0, 3.0])
}

fn close(a: &Vec3<f64>, b: &Vec3<f64>, scale: f64, tol: f64) -> bool {
    linalg::norm(&linalg::sub(a, b)) <= tol * scale.max(1.0)
}

/// Closed-form brackets, written out by hand from the field components.
fn hand_bracket(x: FieldKind, y: FieldKind, v: &Vec3<f64>, kappa: f64) -> Option<Vec3<f64>> {
    use FieldKind::*;
    let (rho, p) = (v[0], v[1]);
    let c = (kappa * p / rho).sqrt();
    let gp = [rho, kappa * p, c];
    let gm = [rho, kappa * p, -c];
    let g0 = [1.0, 0.0, 0.0];
    let w2 = [0.0, 0.0, 2.0 * c];
    let diff = linalg::sub(&gp, &gm);
    Some(match (x, y) {
        (GammaPlus, GammaMinus) => linalg::scale((1.0 - kappa) / 2.0, &diff),
        (GammaPlus, GammaZero) => linalg::axpy(&linalg::scale(1.0 / (4.0 * rho), &diff), -1.0, &g0),
        (W1, W2) => linalg::scale(kappa - 1.0, &w2),
        (W1, GammaZero) => linalg::scale(-2.0, &g0),
        (W2, GammaZero) => linalg::scale(1.0 / (2.0 * rho), &w2),
        _ => return None,
    })
}

#[test]
fn bracket_table_matches_hand_derivation() {
    use FieldKind::*;
    let pairs = [(GammaPlus, GammaMinus), (GammaPlus, GammaZero), (W1, W2), (W1, GammaZero), (W2, GammaZero)];
    for kappa in [1.4, 2.0, 3.0] {
        for s in wavelab_core::sampling::sample_states::<f64>(11, 300) {
            let v = s.to_array();
            for (x, y) in pairs {
                let got = fields::lie_bracket(&field(x, kappa), &field(y, kappa)).value(&v);
                let want = hand_bracket(x, y, &v, kappa).unwrap();
                assert!(close(&got, &want, linalg::norm(&want), 1e-10), "[{x:?},{y:?}] at {v:?}: {got:?} vs {want:?}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn antisymmetry(x in kind(), y in kind(), v in state(), kappa in kappa()) {
        let (fx, fy) = (field(x, kappa), field(y, kappa));
        let a = fields::lie_bracket(&fx, &fy).value(&v);
        let b = fields::lie_bracket(&fy, &fx).value(&v);
        prop_assert!(close(&a, &linalg::scale(-1.0, &b), linalg::norm(&a), 1e-12));
    }

    #[test]
    fn jacobi_identity(x in kind(), y in kind(), z in kind(), v in state(), kappa in kappa()) {
        let (fx, fy, fz) = (field(x, kappa), field(y, kappa), field(z, kappa));
        let terms = [
            fields::lie_bracket(&fields::lie_bracket(&fx, &fy), &fz).value(&v),
            fields::lie_bracket(&fields::lie_bracket(&fy, &fz), &fx).value(&v),
            fields::lie_bracket(&fields::lie_bracket(&fz, &fx), &fy).value(&v),
        ];
        let sum = terms.iter().fold([0.0; 3], |acc, t| linalg::add(&acc, t));
        let scale = terms.iter().map(linalg::norm).fold(0.0, f64::max);
        prop_assert!(linalg::norm(&sum) <= 1e-10 * scale.max(1.0));
    }

    #[test]
    fn leibniz_rule(x in kind(), y in kind(), v in state(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let kappa = 1.4;
        let h: ScalarRef<f64> = Arc::new(PowerLaw::new(1.0, a, b, "h"));
        let (fx, fy) = (field(x, kappa), field(y, kappa));
        let lhs = fields::lie_bracket(&fx, &fields::scale_field(&h, &fy)).value(&v);
        let xh = fields::directional_derivative(h.as_ref(), fx.as_ref(), &v);
        let rhs = linalg::axpy(
            &linalg::scale(xh, &fy.value(&v)),
            h.value(&v),
            &fields::lie_bracket(&fx, &fy).value(&v),
        );
        prop_assert!(close(&lhs, &rhs, linalg::norm(&rhs), 1e-10));
    }

    #[test]
    fn characteristic_eigenpairs(v in state(), kappa in kappa()) {
        let g = GasParameters::with_kappa(kappa);
        let a = euler::euler_matrix(&StateVector::from_array(v).unwrap(), &g);
        for f in euler::characteristic_fields(&g) {
            let gamma = f.gamma.value(&v);
            let lhs = linalg::mat_vec(&a, &gamma);
            let rhs = linalg::scale(f.speed_at(&v), &gamma);
            prop_assert!(close(&lhs, &rhs, linalg::norm(&lhs), 1e-12));
        }
    }

    #[test]
    fn exact_jacobian_matches_differences(x in kind(), y in kind(), v in state()) {
        let b = fields::lie_bracket(&field(x, 2.0), &field(y, 2.0));
        let exact = b.jacobian(&v);
        let fd = fields::fd_jacobian(|w| b.value(w), &v);
        let scale = linalg::frobenius(&exact).max(1.0);
        prop_assert!(linalg::max_abs_diff(&exact, &fd) <= 1e-6 * scale);
    }
}
