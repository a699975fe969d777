//! Interaction index of simulated two-wave collisions.

use std::collections::BTreeSet;

use wavelab_core::euler::{EulerField, FieldKind, WaveKind};
use wavelab_core::interaction::{self, Thresholds, Verdict, WaveScenario};
use wavelab_core::quasirect;
use wavelab_core::solver::{Convention, Shape};

use WaveKind::*;

const SHAPES: [Shape; 3] = [Shape::Bump, Shape::Gauss, Shape::Cosine];

fn report(s: &WaveScenario<f64>) -> interaction::InteractionReport {
    let series = s.simulate().unwrap();
    interaction::analyze_series(&series, &s.gas, &Thresholds::default()).unwrap().0
}

fn set(kinds: &[WaveKind]) -> BTreeSet<WaveKind> {
    kinds.iter().copied().collect()
}

#[test]
fn head_on_sound_waves_interact_elastically() {
    for shape in SHAPES {
        let r = report(&interaction::elastic_scenario(shape));
        assert_eq!((r.entering.clone(), r.leaving.clone()), (set(&[SPlus, SMinus]), set(&[SPlus, SMinus])), "{shape:?}");
        assert_eq!((r.index, r.verdict), (0, Verdict::Elastic));
        assert!(r.t_max > r.t_min && r.region_cells > 0);
    }
}

#[test]
fn sound_wave_through_entropy_bump_produces_a_third_wave() {
    for shape in SHAPES {
        let r = report(&interaction::nonelastic_scenario(shape));
        assert_eq!(r.entering, set(&[SPlus, E]), "{shape:?}");
        assert!(r.leaving.contains(&SMinus), "{shape:?}: {:?}", r.leaving);
        assert!(r.index >= 1 && r.verdict == Verdict::NonElastic);
    }
}

#[test]
fn verdicts_survive_stretching_and_convention_change() {
    for base in [interaction::elastic_scenario(Shape::Bump), interaction::nonelastic_scenario(Shape::Bump)] {
        let reference = report(&base);
        for variant in [base.stretched(2.0), base.with_convention(Convention::Standard)] {
            let r = report(&variant);
            assert_eq!((r.entering, r.leaving, r.index), (reference.entering.clone(), reference.leaving.clone(), reference.index));
        }
    }
}

#[test]
fn elasticity_agrees_with_quasi_rectifiability() {
    let pair = |a, b, kappa: f64| {
        quasirect::span_test::<f64>(&[EulerField::shared(a, kappa), EulerField::shared(b, kappa)], 100, 1).unwrap().verdict
    };
    let elastic = report(&interaction::elastic_scenario(Shape::Cosine));
    assert_eq!(elastic.verdict == Verdict::Elastic, pair(FieldKind::GammaPlus, FieldKind::GammaMinus, 1.4));
    let nonelastic = report(&interaction::nonelastic_scenario(Shape::Cosine));
    assert_eq!(nonelastic.verdict == Verdict::Elastic, pair(FieldKind::GammaPlus, FieldKind::GammaZero, 3.0));
}
