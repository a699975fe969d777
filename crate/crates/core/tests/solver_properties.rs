//! Solver behaviour: preserved constants, first-order self-convergence, time
//! reversal between conventions, and the reduced `κ = 3` system against the
//! full one.

use proptest::prelude::*;
use wavelab_core::euler::{GasParameters, WaveKind};
use wavelab_core::fields::StateVector;
use wavelab_core::geometry;
use wavelab_core::solver::{self, Convention, Grid1D, Profile, RiemannWave, RunOptions, Shape};
use wavelab_core::Grid;

fn acoustic_grid(nx: usize, kappa: f64, convention: Convention) -> Grid {
    let gas = GasParameters::with_kappa(kappa);
    let wave = RiemannWave::new(
        WaveKind::SPlus,
        gas,
        StateVector::new(1.0, 1.0, 0.0).unwrap(),
        Profile::new(Shape::Cosine, 0.5, 0.25, 0.05),
        convention,
    );
    Grid1D::from_fn(0.0, 1.0, nx, |x| wave.curve(wave.profile.value(x))).unwrap()
}

#[test]
fn first_order_self_convergence() {
    let gas = GasParameters::with_kappa(1.4);
    let study = solver::self_convergence(101, |nx| {
        let run = solver::solve_euler(acoustic_grid(nx, 1.4, Convention::Negated), &gas, 0.15, &RunOptions::default())?;
        Ok(run.last().clone())
    })
    .unwrap();
    assert!((0.8..=1.2).contains(&study.rate), "{study:?}");
    let ratio = study.coarse_error / study.fine_error;
    assert!((1.7..=2.3).contains(&ratio), "{study:?}");
}

#[test]
fn switching_convention_runs_time_backwards() {
    let gas = GasParameters::with_kappa(1.4);
    let mut errors = vec![];
    for nx in [101, 201, 401] {
        let start = acoustic_grid(nx, 1.4, Convention::Negated);
        let forward = solver::solve_euler(start.clone(), &gas, 0.1, &RunOptions::default()).unwrap();
        let back_opts = RunOptions { convention: Convention::Standard, ..RunOptions::default() };
        let back = solver::solve_euler(forward.last().clone(), &gas, 0.1, &back_opts).unwrap();
        errors.push(solver::l1_distance(back.last(), &start));
    }
    // diffusion makes the round trip inexact, but the defect is O(dx)
    assert!(errors[1] < 0.7 * errors[0] && errors[2] < 0.7 * errors[1], "{errors:?}");
}

#[test]
fn reduced_kappa3_tracks_the_full_system_under_refinement() {
    let gas = GasParameters::with_kappa(3.0);
    let mut distances = vec![];
    for nx in [101, 201, 401] {
        let full = acoustic_grid(nx, 3.0, Convention::Negated);
        let reduced = Grid1D {
            x0: full.x0,
            x1: full.x1,
            state: full.state.iter().map(|v| geometry::region_inverse(&StateVector::from_array(*v).unwrap())).collect(),
        };
        let run = solver::solve_reduced_kappa3(reduced, &gas, 0.1, &RunOptions::default()).unwrap();
        assert!(run.spectrum_error < 1e-10, "{}", run.spectrum_error);
        distances.push(*run.difference.last().unwrap());
    }
    assert!(distances.iter().all(|d| d.is_finite()));
    assert!(distances[2] <= distances[0] * 1.05, "{distances:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn constant_states_are_fixed_points(
        rho in 0.1f64..10.0,
        p in 0.1f64..10.0,
        u in -5.0f64..5.0,
        kappa in 1.1f64..3.0,
        standard in any::<bool>(),
    ) {
        let gas = GasParameters::with_kappa(kappa);
        let convention = if standard { Convention::Standard } else { Convention::Negated };
        let grid = Grid1D::from_fn(0.0, 1.0, 32, |_| [rho, p, u]).unwrap();
        let opts = RunOptions { convention, ..RunOptions::default() };
        let run = solver::solve_euler(grid, &gas, 0.05, &opts).unwrap();
        prop_assert!(run.last().state.iter().all(|v| *v == [rho, p, u]));
    }
}
