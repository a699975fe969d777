//! Characteristic upwind integration of quasilinear systems
//! `v_t + B(v) v_x = 0`, the reduced sound and `κ = 3` systems, and residuals
//! of candidate exact solutions.
//!
//! The Euler matrix is stored as it appears in `v_t = A v_x`. Under
//! [`Convention::Negated`] that equation is taken literally (`B = −A`); under
//! [`Convention::Standard`] the system is `v_t + A v_x = 0` (`B = A`).
//! Switching conventions reverses time.

use serde::{Deserialize, Serialize};

use crate::euler::{self, GasParameters, WaveKind};
use crate::fields::{coords_f64, StateVector, VectorField};
use crate::geometry;
use crate::linalg::{self, eigen3, Mat3, Vec3};
use crate::ode;
use crate::scalar::Real;
use crate::{Error, Result};

/// Default CFL number.
pub const DEFAULT_CFL: f64 = 0.45;
/// Growth of `max |∂_x r|` that is treated as gradient blow-up.
pub const BLOW_UP_GROWTH: f64 = 1e6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// `v_t = A v_x`.
    #[default]
    Negated,
    /// `v_t + A v_x = 0`.
    Standard,
}

impl Convention {
    /// `s` in `B = s·A`.
    pub fn advection_sign<T: Real>(self) -> T {
        match self {
            Self::Negated => -T::one(),
            Self::Standard => T::one(),
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Self::Negated => Self::Standard,
            Self::Standard => Self::Negated,
        }
    }

    /// Velocity at which a family with eigenvalue `speed` propagates.
    pub fn propagation_speed<T: Real>(self, speed: T) -> T {
        self.advection_sign::<T>() * speed
    }
}

/// Node values of a uniform grid including both end points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid1D<T> {
    pub x0: T,
    pub x1: T,
    pub state: Vec<Vec3<T>>,
}

impl<T: Real> Grid1D<T> {
    pub const MIN_NODES: usize = 16;

    pub fn new(x0: T, x1: T, state: Vec<Vec3<T>>) -> Result<Self> {
        if state.len() < Self::MIN_NODES {
            return Err(Error::InvalidParameter(format!("a grid needs at least {} nodes", Self::MIN_NODES)));
        }
        if !(x1 > x0) {
            return Err(Error::InvalidParameter("x1 must exceed x0".into()));
        }
        Ok(Self { x0, x1, state })
    }

    /// Samples `f` at the nodes.
    pub fn from_fn(x0: T, x1: T, nx: usize, f: impl Fn(T) -> Vec3<T>) -> Result<Self> {
        if nx < Self::MIN_NODES {
            return Err(Error::InvalidParameter(format!("a grid needs at least {} nodes", Self::MIN_NODES)));
        }
        let dx = (x1 - x0) / T::from_usize(nx - 1).unwrap();
        Self::new(x0, x1, (0..nx).map(|i| f(x0 + dx * T::from_usize(i).unwrap())).collect())
    }

    pub fn nx(&self) -> usize {
        self.state.len()
    }

    pub fn dx(&self) -> T {
        (self.x1 - self.x0) / T::from_usize(self.nx() - 1).unwrap()
    }

    pub fn x(&self, i: usize) -> T {
        self.x0 + self.dx() * T::from_usize(i).unwrap()
    }

    pub fn xs(&self) -> Vec<T> {
        (0..self.nx()).map(|i| self.x(i)).collect()
    }

    /// The grid with `2·nx − 1` nodes on the same interval.
    pub fn refined_nodes(&self) -> usize {
        2 * self.nx() - 1
    }

    fn check_positive(&self, time: T) -> Result<()> {
        for (node, v) in self.state.iter().enumerate() {
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite { node, time: time.as_f64() });
            }
            if !(v[0] > T::zero() && v[1] > T::zero()) {
                return Err(Error::PositivityLoss { node, time: time.as_f64() });
            }
        }
        Ok(())
    }

    fn check_finite(&self, time: T) -> Result<()> {
        match self.state.iter().position(|v| v.iter().any(|c| !c.is_finite())) {
            Some(node) => Err(Error::NonFinite { node, time: time.as_f64() }),
            None => Ok(()),
        }
    }

    /// `max_i |v_{i+1} − v_i| / dx` over the given components.
    pub fn max_gradient(&self, components: &[usize]) -> T {
        let dx = self.dx();
        self.state.windows(2).flat_map(|w| components.iter().map(move |&c| ((w[1][c] - w[0][c]) / dx).abs())).fold(T::zero(), T::max)
    }
}

/// Recorded frames of a run.
#[derive(Clone, Debug, Serialize)]
pub struct TimeSeries<T> {
    pub times: Vec<T>,
    pub frames: Vec<Grid1D<T>>,
    pub cfl_history: Vec<T>,
}

impl<T: Real> TimeSeries<T> {
    pub fn last(&self) -> &Grid1D<T> {
        self.frames.last().expect("a series always holds its initial frame")
    }

    pub fn final_time(&self) -> T {
        *self.times.last().expect("a series always holds its initial time")
    }
}

/// What the state components represent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateKind {
    /// `(ρ, p, u)`; positivity is enforced.
    Gas,
    /// Any other unknowns; only finiteness is enforced.
    Free,
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions<T> {
    pub cfl: T,
    pub cfl_limit: T,
    pub convention: Convention,
    /// Record every `stride`-th step (the final state is always recorded).
    pub stride: usize,
    pub max_steps: usize,
    /// Components whose gradient growth is monitored for blow-up.
    pub monitor: &'static [usize],
}

impl<T: Real> Default for RunOptions<T> {
    fn default() -> Self {
        Self {
            cfl: T::lit(DEFAULT_CFL),
            cfl_limit: T::lit(DEFAULT_CFL),
            convention: Convention::Negated,
            stride: 1,
            max_steps: 1_000_000,
            monitor: &[],
        }
    }
}

/// Spectral data of `B(v)` at every node.
struct NodeSpectra<T> {
    nodes: Vec<linalg::Eigen3<T>>,
    max_speed: T,
}

fn spectra<T: Real>(grid: &Grid1D<T>, matrix_fn: &dyn Fn(&Vec3<T>) -> Mat3<T>, sign: T) -> Result<NodeSpectra<T>> {
    let mut nodes = Vec::with_capacity(grid.nx());
    let mut max_speed = T::zero();
    for (node, v) in grid.state.iter().enumerate() {
        let b = linalg::mat_scale(sign, &matrix_fn(v));
        let e = eigen3(&b).map_err(|_| Error::NodeNotDiagonalizable { node })?;
        max_speed = e.values.iter().fold(max_speed, |m, l| m.max(l.abs()));
        nodes.push(e);
    }
    Ok(NodeSpectra { nodes, max_speed })
}

fn cir_update<T: Real>(grid: &Grid1D<T>, spec: &NodeSpectra<T>, dt: T) -> Grid1D<T> {
    let n = grid.nx();
    let ratio = dt / grid.dx();
    let s = &grid.state;
    let mut next = s.clone();
    for i in 0..n {
        let back = linalg::sub(&s[i], &s[i.saturating_sub(1)]);
        let fwd = linalg::sub(&s[(i + 1).min(n - 1)], &s[i]);
        let e = &spec.nodes[i];
        for k in 0..3 {
            let lam = e.values[k];
            let diff = if lam > T::zero() { &back } else { &fwd };
            let w = linalg::dot(&e.left[k], diff);
            if w.is_zero() || lam.is_zero() {
                continue;
            }
            let amount = ratio * lam * w;
            for a in 0..3 {
                next[i][a] -= amount * e.right[a][k];
            }
        }
    }
    Grid1D { x0: grid.x0, x1: grid.x1, state: next }
}

/// One CIR step of `v_t + s·M(v) v_x = 0` with `s` fixed by the convention.
///
/// Returns the new grid and the CFL number of the step.
pub fn step_quasilinear<T: Real>(
    grid: &Grid1D<T>,
    matrix_fn: &dyn Fn(&Vec3<T>) -> Mat3<T>,
    dt: T,
    convention: Convention,
    cfl_limit: T,
) -> Result<(Grid1D<T>, T)> {
    let spec = spectra(grid, matrix_fn, convention.advection_sign())?;
    let cfl = dt * spec.max_speed / grid.dx();
    if cfl > cfl_limit * (T::one() + T::lit(1e-12)) {
        return Err(Error::CflViolation { cfl: cfl.as_f64(), limit: cfl_limit.as_f64() });
    }
    Ok((cir_update(grid, &spec, dt), cfl))
}

struct Monitor<T> {
    initial: T,
    components: &'static [usize],
}

impl<T: Real> Monitor<T> {
    fn new(grid: &Grid1D<T>, components: &'static [usize]) -> Self {
        Self { initial: grid.max_gradient(components), components }
    }

    fn check(&self, grid: &Grid1D<T>, time: T) -> Result<()> {
        if self.components.is_empty() {
            return Ok(());
        }
        let g = grid.max_gradient(self.components);
        let base = self.initial.max(T::min_positive_value());
        let growth = g / base;
        if growth > T::lit(BLOW_UP_GROWTH) || !growth.is_finite() {
            return Err(Error::GradientBlowUp { time: time.as_f64(), growth: growth.as_f64() });
        }
        Ok(())
    }
}

/// Integrates `v_t + s·M(v) v_x = 0` to `t_end`.
pub fn simulate<T: Real>(
    initial: Grid1D<T>,
    matrix_fn: &dyn Fn(&Vec3<T>) -> Mat3<T>,
    t_end: T,
    kind: StateKind,
    opts: &RunOptions<T>,
) -> Result<TimeSeries<T>> {
    if !(opts.cfl > T::zero()) || opts.cfl > opts.cfl_limit {
        return Err(Error::CflViolation { cfl: opts.cfl.as_f64(), limit: opts.cfl_limit.as_f64() });
    }
    let check = |g: &Grid1D<T>, t: T| match kind {
        StateKind::Gas => g.check_positive(t),
        StateKind::Free => g.check_finite(t),
    };
    check(&initial, T::zero())?;
    let monitor = Monitor::new(&initial, opts.monitor);
    let sign = opts.convention.advection_sign();
    let mut series = TimeSeries { times: vec![T::zero()], frames: vec![initial.clone()], cfl_history: vec![] };
    let mut grid = initial;
    let mut t = T::zero();
    let mut steps = 0;
    while t < t_end {
        if steps >= opts.max_steps {
            return Err(Error::Integration(format!("step limit {} reached at t = {t}", opts.max_steps)));
        }
        let spec = spectra(&grid, matrix_fn, sign)?;
        let mut dt = if spec.max_speed > T::zero() { opts.cfl * grid.dx() / spec.max_speed } else { t_end - t };
        if t + dt >= t_end {
            dt = t_end - t;
        }
        let cfl = dt * spec.max_speed / grid.dx();
        grid = cir_update(&grid, &spec, dt);
        t = if dt == t_end - t { t_end } else { t + dt };
        steps += 1;
        check(&grid, t)?;
        monitor.check(&grid, t)?;
        series.cfl_history.push(cfl);
        if steps % opts.stride.max(1) == 0 || t >= t_end {
            series.times.push(t);
            series.frames.push(grid.clone());
        }
    }
    Ok(series)
}

/// Full Euler system from `(ρ, p, u)` initial data.
pub fn solve_euler<T: Real>(initial: Grid1D<T>, g: &GasParameters<T>, t_end: T, opts: &RunOptions<T>) -> Result<TimeSeries<T>> {
    g.validate()?;
    let kappa = g.kappa;
    simulate(initial, &|v: &Vec3<T>| euler::euler_matrix_raw(v, kappa), t_end, StateKind::Gas, opts)
}

/// L1 distance `dx·Σ|a_i − b_i|` between two grids on the same nodes.
pub fn l1_distance<T: Real>(a: &Grid1D<T>, b: &Grid1D<T>) -> T {
    let dx = a.dx();
    a.state.iter().zip(&b.state).map(|(x, y)| (0..3).map(|k| (x[k] - y[k]).abs()).sum::<T>()).sum::<T>() * dx
}

/// L1 distance between a grid and a grid with `2·nx − 1` nodes, compared at
/// the shared nodes.
pub fn l1_distance_to_refined<T: Real>(coarse: &Grid1D<T>, fine: &Grid1D<T>) -> Result<T> {
    if fine.nx() != coarse.refined_nodes() {
        return Err(Error::InvalidParameter("grids are not nested".into()));
    }
    let dx = coarse.dx();
    Ok(coarse.state.iter().enumerate().map(|(i, x)| (0..3).map(|k| (x[k] - fine.state[2 * i][k]).abs()).sum::<T>()).sum::<T>() * dx)
}

/// Errors and observed order of a run refined twice by halving `dx`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConvergenceStudy {
    pub nx: [usize; 3],
    /// L1 distance between the coarse and middle runs on the coarse nodes.
    pub coarse_error: f64,
    /// The same between the middle and fine runs.
    pub fine_error: f64,
    pub rate: f64,
}

/// Runs `final_grid` at `nx`, `2nx − 1` and `4nx − 3` nodes and estimates the
/// order from successive differences.
pub fn self_convergence(nx: usize, final_grid: impl Fn(usize) -> Result<Grid1D<f64>>) -> Result<ConvergenceStudy> {
    let sizes = [nx, 2 * nx - 1, 4 * nx - 3];
    let grids = sizes.iter().map(|&n| final_grid(n)).collect::<Result<Vec<_>>>()?;
    let coarse_error = l1_distance_to_refined(&grids[0], &grids[1])?;
    let fine_error = l1_distance_to_refined(&grids[1], &grids[2])?;
    Ok(ConvergenceStudy { nx: sizes, coarse_error, fine_error, rate: (coarse_error / fine_error).log2() })
}

// ---------------------------------------------------------------------------
// Initial profiles

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// `exp(1 − 1/(1 − z²))` on `|z| < 1`.
    Bump,
    /// `exp(−(3z)²/2)` on `|z| < 1`, shifted to vanish at the edge.
    Gauss,
    /// `cos⁴(πz/2)` on `|z| < 1`.
    Cosine,
}

/// A localized profile of unit height scaled by `amplitude`; `z = (x − center)/half_width`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct Profile<T> {
    #[serde(default = "default_shape")]
    pub shape: Shape,
    pub center: T,
    pub half_width: T,
    pub amplitude: T,
}

fn default_shape() -> Shape {
    Shape::Bump
}

impl<T: Real> Profile<T> {
    pub fn new(shape: Shape, center: T, half_width: T, amplitude: T) -> Self {
        Self { shape, center, half_width, amplitude }
    }

    pub fn value(&self, x: T) -> T {
        let z = (x - self.center) / self.half_width;
        let one = T::one();
        let unit = match self.shape {
            Shape::Bump => {
                if z.abs() < one {
                    (one - one / (one - z * z)).exp()
                } else {
                    T::zero()
                }
            }
            Shape::Gauss => {
                if z.abs() < one {
                    // shifted so that it vanishes continuously at the edge
                    let edge = (-T::lit(4.5)).exp();
                    ((-(T::lit(4.5) * z * z)).exp() - edge) / (one - edge)
                } else {
                    T::zero()
                }
            }
            Shape::Cosine => {
                if z.abs() < one {
                    let c = (T::FRAC_PI_2() * z).cos();
                    c * c * c * c
                } else {
                    T::zero()
                }
            }
        };
        self.amplitude * unit
    }

    /// Interval outside which the profile is zero.
    pub fn support(&self) -> (T, T) {
        (self.center - self.half_width, self.center + self.half_width)
    }
}

// ---------------------------------------------------------------------------
// Reduced sound system

/// `a1 = √κ(r1 − r2 + 1) + u0`, `a2 = √κ(r1 − r2 − 1) + u0`.
pub fn reduced_sound_speeds<T: Real>(r1: T, r2: T, g: &GasParameters<T>) -> (T, T) {
    let sk = g.kappa.sqrt();
    (sk * (r1 - r2 + T::one()) + g.u0, sk * (r1 - r2 - T::one()) + g.u0)
}

/// Integrates `r1_t + a1 r1_x = 0`, `r2_t + a2 r2_x = 0` by scalar upwinding.
/// Grid components are `(r1, r2, 0)`.
pub fn solve_reduced_sound<T: Real>(initial: Grid1D<T>, g: &GasParameters<T>, t_end: T, opts: &RunOptions<T>) -> Result<TimeSeries<T>> {
    g.validate()?;
    let gas = *g;
    let matrix = move |v: &Vec3<T>| {
        let (a1, a2) = reduced_sound_speeds(v[0], v[1], &gas);
        let o = T::zero();
        [[a1, o, o], [o, a2, o], [o, o, o]]
    };
    // the system is written in `r_t + a r_x = 0` form regardless of convention
    let opts = RunOptions { convention: Convention::Standard, monitor: &[0, 1], ..*opts };
    simulate(initial, &matrix, t_end, StateKind::Free, &opts)
}

/// Solution of the scalar equation `r_t + a(r) r_x = 0` with `r(x, 0) = φ(x)`
/// before shock formation: `r = φ(x − a(r) t)`, found by bisection between
/// `lo` and `hi`, which must bracket the range of `φ`.
pub fn scalar_characteristic_solution<T: Real>(phi: impl Fn(T) -> T, speed: impl Fn(T) -> T, x: T, t: T, lo: T, hi: T) -> T {
    let g = |r: T| r - phi(x - speed(r) * t);
    let (mut a, mut b) = (lo, hi);
    let (mut ga, _) = (g(a), g(b));
    for _ in 0..200 {
        let m = (a + b) / T::lit(2.0);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if (gm <= T::zero()) == (ga <= T::zero()) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    (a + b) / T::lit(2.0)
}

// ---------------------------------------------------------------------------
// Reduced κ = 3 system

/// Matrix of the reduced system at reduced unknowns `(t1, t2, t3)`.
pub fn reduced_kappa3_matrix<T: Real>(t: &Vec3<T>, g: &GasParameters<T>) -> Mat3<T> {
    let v = geometry::region_map(t[0], t[1], t[2]);
    euler::reduced_matrix(&v, g).matrix
}

/// Outcome of [`solve_reduced_kappa3`].
#[derive(Clone, Debug, Serialize)]
pub struct ReducedRun<T> {
    /// Reduced unknowns `(t1, t2, t3)`.
    pub reduced: TimeSeries<T>,
    /// The full system advanced from the mapped initial data.
    pub full: TimeSeries<T>,
    /// Reduced frames mapped to `(ρ, p, u)`.
    pub mapped: Vec<Grid1D<T>>,
    /// L1 distance between `mapped` and `full` at each recorded time.
    pub difference: Vec<T>,
    /// Largest gap between the spectrum of the reduced matrix and
    /// `{u + c, u − c, u}` of the mapped state, over all nodes and steps.
    pub spectrum_error: T,
}

fn map_grid<T: Real>(grid: &Grid1D<T>) -> Grid1D<T> {
    Grid1D { x0: grid.x0, x1: grid.x1, state: grid.state.iter().map(|t| geometry::region_map(t[0], t[1], t[2]).to_array()).collect() }
}

fn sorted(mut v: [f64; 3]) -> [f64; 3] {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v
}

/// Advances the reduced system and the full Euler system side by side with
/// common time steps.
pub fn solve_reduced_kappa3<T: Real>(initial: Grid1D<T>, g: &GasParameters<T>, t_end: T, opts: &RunOptions<T>) -> Result<ReducedRun<T>> {
    g.validate()?;
    let gas = *g;
    let reduced_fn = move |t: &Vec3<T>| reduced_kappa3_matrix(t, &gas);
    let full_fn = move |v: &Vec3<T>| euler::euler_matrix_raw(v, gas.kappa);
    let sign = opts.convention.advection_sign();

    let mut red = initial;
    let mut full = map_grid(&red);
    full.check_positive(T::zero())?;
    let mut reduced = TimeSeries { times: vec![T::zero()], frames: vec![red.clone()], cfl_history: vec![] };
    let mut full_series = TimeSeries { times: vec![T::zero()], frames: vec![full.clone()], cfl_history: vec![] };
    let mut spectrum_error = 0.0f64;
    let mut t = T::zero();
    let mut steps = 0;
    while t < t_end {
        if steps >= opts.max_steps {
            return Err(Error::Integration(format!("step limit {} reached at t = {t}", opts.max_steps)));
        }
        let sr = spectra(&red, &reduced_fn, sign)?;
        let sf = spectra(&full, &full_fn, sign)?;
        for (e, tv) in sr.nodes.iter().zip(&red.state) {
            let v = geometry::region_map(tv[0], tv[1], tv[2]);
            let c = g.sound_speed(&v.to_array());
            let want = sorted([(v.u + c).as_f64(), (v.u - c).as_f64(), v.u.as_f64()]);
            let got = sorted(e.values.map(|l| (l * sign).as_f64()));
            for k in 0..3 {
                spectrum_error = spectrum_error.max((want[k] - got[k]).abs());
            }
        }
        let speed = sr.max_speed.max(sf.max_speed);
        let mut dt = if speed > T::zero() { opts.cfl * red.dx() / speed } else { t_end - t };
        if t + dt >= t_end {
            dt = t_end - t;
        }
        red = cir_update(&red, &sr, dt);
        full = cir_update(&full, &sf, dt);
        t = if dt == t_end - t { t_end } else { t + dt };
        steps += 1;
        red.check_finite(t)?;
        full.check_positive(t)?;
        let cfl = dt * speed / red.dx();
        reduced.cfl_history.push(cfl);
        full_series.cfl_history.push(cfl);
        if steps % opts.stride.max(1) == 0 || t >= t_end {
            reduced.times.push(t);
            reduced.frames.push(red.clone());
            full_series.times.push(t);
            full_series.frames.push(full.clone());
        }
    }
    let mapped: Vec<Grid1D<T>> = reduced.frames.iter().map(map_grid).collect();
    let difference = mapped.iter().zip(&full_series.frames).map(|(a, b)| l1_distance(a, b)).collect();
    Ok(ReducedRun { reduced, full: full_series, mapped, difference, spectrum_error: T::lit(spectrum_error) })
}

// ---------------------------------------------------------------------------
// Exact solutions and residuals

/// Which system a candidate solution is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    /// `(ρ, p, u)` with the Euler matrix.
    Full,
    /// `(r1, r2, ·)` with the reduced sound speeds, in `r_t + a r_x = 0` form.
    ReducedSound,
    /// `(t1, t2, t3)` with the reduced `κ = 3` matrix.
    ReducedKappa3,
}

/// Step of the central differences in [`residual_check`].
pub const RESIDUAL_STEP: f64 = 1e-5;

/// Largest `‖v_t + s·M(v) v_x‖` over the sample points `(x, t)`.
pub fn residual_check<T: Real>(
    candidate: &dyn Fn(T, T) -> Result<Vec3<T>>,
    system: System,
    g: &GasParameters<T>,
    convention: Convention,
    samples: &[(T, T)],
) -> Result<T> {
    let h = T::lit(RESIDUAL_STEP);
    let two_h = h + h;
    let mut worst = T::zero();
    for &(x, t) in samples {
        let v = candidate(x, t)?;
        let vx = linalg::scale(T::one() / two_h, &linalg::sub(&candidate(x + h, t)?, &candidate(x - h, t)?));
        let vt = linalg::scale(T::one() / two_h, &linalg::sub(&candidate(x, t + h)?, &candidate(x, t - h)?));
        let (m, sign) = match system {
            System::Full => (euler::euler_matrix_raw(&v, g.kappa), convention.advection_sign()),
            System::ReducedSound => {
                let (a1, a2) = reduced_sound_speeds(v[0], v[1], g);
                let o = T::zero();
                ([[a1, o, o], [o, a2, o], [o, o, o]], T::one())
            }
            System::ReducedKappa3 => (reduced_kappa3_matrix(&v, g), convention.advection_sign()),
        };
        let r = linalg::norm(&linalg::axpy(&vt, sign, &linalg::mat_vec(&m, &vx)));
        if !r.is_finite() {
            return Err(Error::NonFinite { node: 0, time: t.as_f64() });
        }
        worst = worst.max(r);
    }
    Ok(worst)
}

/// A simple wave `v = f(r)`, `r = φ(x − σ v_s(f(r)) t)`, with `f` the
/// integral curve of the family's characteristic field through a base state
/// and `σ` the convention's advection sign.
#[derive(Clone, Debug)]
pub struct RiemannWave<T> {
    pub kind: WaveKind,
    pub gas: GasParameters<T>,
    pub base: Vec3<T>,
    pub profile: Profile<T>,
    pub convention: Convention,
}

impl<T: Real> RiemannWave<T> {
    pub fn new(kind: WaveKind, gas: GasParameters<T>, base: StateVector<T>, profile: Profile<T>, convention: Convention) -> Self {
        Self { kind, gas, base: base.to_array(), profile, convention }
    }

    /// The state at parameter `r` on the integral curve.
    pub fn curve(&self, r: T) -> Vec3<T> {
        let field = euler::EulerField::new(self.kind.field_kind(), self.gas.kappa.as_f64());
        if self.kind == WaveKind::E {
            return [self.base[0] + r, self.base[1], self.base[2]];
        }
        // ρ grows like e^r along γ±
        ode::rk4(|_t, y: &Vec3<T>| VectorField::<T>::value(&field, y), T::zero(), self.base, r, 200)
    }

    fn speed(&self, v: &Vec3<T>) -> T {
        let s = T::lit(self.kind.sound_sign());
        self.convention.propagation_speed(v[2] + s * self.gas.sound_speed(v))
    }

    pub fn state(&self, x: T, t: T) -> Result<Vec3<T>> {
        let a = self.profile.amplitude;
        let (lo, hi) = if a >= T::zero() { (T::zero(), a) } else { (a, T::zero()) };
        let pad = T::lit(1e-9) * (T::one() + a.abs());
        let r = scalar_characteristic_solution(|y| self.profile.value(y), |r| self.speed(&self.curve(r)), x, t, lo - pad, hi + pad);
        let v = self.curve(r);
        if !(v[0] > T::zero() && v[1] > T::zero()) {
            return Err(Error::LeftPositiveCone { state: coords_f64(&v) });
        }
        Ok(v)
    }
}

/// The `S+S−` double wave of [`euler::OracleDoubleWave`] realized in
/// `(x, t)` for `κ = 3`, where the Riemann invariants are transported
/// independently: `r1 = φ1(x − σ(2r1 + u0 + c0)t)`,
/// `r2 = φ2(x − σ(−2r2 + u0 − c0)t)`.
#[derive(Clone, Debug)]
pub struct DoubleWaveSolution<T> {
    pub wave: euler::OracleDoubleWave<T>,
    pub plus: Profile<T>,
    pub minus: Profile<T>,
    pub convention: Convention,
}

impl<T: Real> DoubleWaveSolution<T> {
    pub fn new(gas: GasParameters<T>, plus: Profile<T>, minus: Profile<T>, convention: Convention) -> Result<Self> {
        if (gas.kappa - T::lit(3.0)).abs() > T::lit(1e-12) {
            return Err(Error::InvalidParameter("the explicit double-wave realization needs kappa = 3".into()));
        }
        Ok(Self { wave: euler::OracleDoubleWave::new(gas)?, plus, minus, convention })
    }

    fn invariant(&self, profile: &Profile<T>, speed: impl Fn(T) -> T, x: T, t: T) -> T {
        let a = profile.amplitude;
        let (lo, hi) = if a >= T::zero() { (T::zero(), a) } else { (a, T::zero()) };
        let pad = T::lit(1e-9) * (T::one() + a.abs());
        scalar_characteristic_solution(|y| profile.value(y), speed, x, t, lo - pad, hi + pad)
    }

    pub fn invariants(&self, x: T, t: T) -> (T, T) {
        let two = T::lit(2.0);
        let u0 = self.wave.base[2];
        let c0 = self.wave.base_sound_speed();
        let conv = self.convention;
        let r1 = self.invariant(&self.plus, |r| conv.propagation_speed(two * r + u0 + c0), x, t);
        let r2 = self.invariant(&self.minus, |r| conv.propagation_speed(-two * r + u0 - c0), x, t);
        (r1, r2)
    }

    pub fn state(&self, x: T, t: T) -> Result<Vec3<T>> {
        let (r1, r2) = self.invariants(x, t);
        Ok(self.wave.state(r1, r2)?.to_array())
    }
}

/// The closed-form double wave evaluated on the exact `r2 ≡ 0` solution of
/// the reduced sound system, `r1 = φ(x − a1(r1, 0) t)`.
#[derive(Clone, Debug)]
pub struct ReferencePairSolution<T> {
    pub gas: GasParameters<T>,
    pub profile: Profile<T>,
}

impl<T: Real> ReferencePairSolution<T> {
    pub fn invariant(&self, x: T, t: T) -> T {
        let a = self.profile.amplitude;
        let (lo, hi) = if a >= T::zero() { (T::zero(), a) } else { (a, T::zero()) };
        let pad = T::lit(1e-9) * (T::one() + a.abs());
        scalar_characteristic_solution(
            |y| self.profile.value(y),
            |r| reduced_sound_speeds(r, T::zero(), &self.gas).0,
            x,
            t,
            lo - pad,
            hi + pad,
        )
    }

    pub fn state(&self, x: T, t: T) -> Result<Vec3<T>> {
        Ok(euler::double_wave_state(self.invariant(x, t), T::zero(), &self.gas)?.to_array())
    }

    pub fn invariants(&self, x: T, t: T) -> Vec3<T> {
        [self.invariant(x, t), T::zero(), T::zero()]
    }
}

/// Residuals of the shipped exact solutions on an `n × n` set of `(x, t)`
/// points placed inside each wave's support.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExactResiduals {
    /// Entropic simple wave, full system.
    pub entropic: f64,
    /// `S+S−` double wave at `κ = 3`, full system.
    pub double_wave: f64,
    /// Closed-form double wave on the `r2 ≡ 0` reduced solution, full system
    /// in standard form.
    pub reference_pair_full: f64,
    /// The same candidate's invariants in the reduced sound system.
    pub reference_pair_reduced: f64,
    pub samples: usize,
}

fn window(center: impl Fn(f64) -> f64, half: f64, t0: f64, t1: f64, n: usize) -> Vec<(f64, f64)> {
    let lerp = |a: f64, b: f64, k: usize| if n == 1 { (a + b) / 2.0 } else { a + (b - a) * k as f64 / (n - 1) as f64 };
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| {
            let t = lerp(t0, t1, i);
            (center(t) + lerp(-0.8 * half, 0.8 * half, j), t)
        })
        .collect()
}

pub fn exact_residual_suite(convention: Convention, n: usize) -> Result<ExactResiduals> {
    // entropic simple wave advected by u
    let gas = GasParameters::with_kappa(1.4);
    let base = StateVector::new(1.0, 1.0, 0.5)?;
    let profile = Profile::new(Shape::Bump, 0.5, 0.2, 0.3);
    let wave = RiemannWave::new(WaveKind::E, gas, base, profile, convention);
    let drift = convention.propagation_speed(base.u);
    let pts = window(|t| 0.5 + drift * t, 0.2, 0.05, 0.4, n);
    let entropic = residual_check(&|x, t| wave.state(x, t), System::Full, &gas, convention, &pts)?;

    // double wave, the two pulses crossing at x = 0.5
    let gas3 = GasParameters::with_kappa(3.0);
    let c0 = euler::OracleDoubleWave::new(gas3)?.base_sound_speed();
    let right_moving_plus = convention.propagation_speed(c0) > 0.0;
    let (xp, xm) = if right_moving_plus { (0.4, 0.6) } else { (0.6, 0.4) };
    let dw = DoubleWaveSolution::new(
        gas3,
        Profile::new(Shape::Cosine, xp, 0.15, 0.05),
        Profile::new(Shape::Cosine, xm, 0.15, 0.05),
        convention,
    )?;
    let meet = 0.2 / (2.0 * c0);
    let pts = window(|_| 0.5, 0.15, 0.5 * meet, 1.5 * meet, n);
    let double_wave = residual_check(&|x, t| dw.state(x, t), System::Full, &gas3, convention, &pts)?;

    // closed-form pair on a reduced solution
    let pair = ReferencePairSolution { gas, profile: Profile::new(Shape::Bump, 0.5, 0.2, 0.05) };
    let a1 = reduced_sound_speeds(0.0, 0.0, &gas).0;
    let pts = window(|t| 0.5 + a1 * t, 0.2, 0.02, 0.2, n);
    let reference_pair_full = residual_check(&|x, t| pair.state(x, t), System::Full, &gas, Convention::Standard, &pts)?;
    let reference_pair_reduced = residual_check(&|x, t| Ok(pair.invariants(x, t)), System::ReducedSound, &gas, Convention::Standard, &pts)?;
    Ok(ExactResiduals { entropic, double_wave, reference_pair_full, reference_pair_reduced, samples: n * n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_grid(v: Vec3<f64>, nx: usize) -> Grid1D<f64> {
        Grid1D::from_fn(0.0, 1.0, nx, |_| v).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(0.0, 1.0, vec![[1.0; 3]; 8]).is_err());
        assert!(Grid1D::new(1.0, 0.0, vec![[1.0; 3]; 16]).is_err());
        let g = constant_grid([1.0, 1.0, 0.0], 21);
        assert!((g.dx() - 0.05).abs() < 1e-15);
        assert_eq!(g.refined_nodes(), 41);
    }

    #[test]
    fn constants_are_preserved_exactly() {
        let g = GasParameters::with_kappa(1.4);
        let v = [1.3, 0.7, 0.2];
        let s = solve_euler(constant_grid(v, 50), &g, 0.5, &RunOptions::default()).unwrap();
        for f in &s.frames {
            assert!(f.state.iter().all(|x| *x == v));
        }
        assert!(s.cfl_history.iter().all(|c| *c <= DEFAULT_CFL + 1e-12));
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let g = constant_grid([1.0, 1.0, 0.0], 20);
        let m = |v: &Vec3<f64>| euler::euler_matrix_raw(v, 1.4);
        let err = step_quasilinear(&g, &m, 1.0, Convention::Negated, 0.45).unwrap_err();
        assert!(matches!(err, Error::CflViolation { .. }));
    }

    #[test]
    fn entropic_bump_advects_with_the_flow() {
        // standard form: the E family moves with velocity u
        let gas = GasParameters::with_kappa(1.4);
        let u = 1.0f64;
        let bump = Profile::<f64>::new(Shape::Bump, 0.25, 0.08, 0.2);
        let grid = Grid1D::from_fn(0.0, 1.0, 401, |x| [1.0 + bump.value(x), 1.0, u]).unwrap();
        let opts = RunOptions { convention: Convention::Standard, ..RunOptions::default() };
        let s = solve_euler(grid, &gas, 0.5, &opts).unwrap();
        let last = s.last();
        let peak = (0..last.nx()).max_by(|a, b| last.state[*a][0].partial_cmp(&last.state[*b][0]).unwrap()).unwrap();
        assert!((last.x(peak) - 0.75).abs() <= 2.0 * last.dx(), "peak at {}", last.x(peak));
        // pressure and velocity stay constant
        assert!(last.state.iter().all(|v| (v[1] - 1.0).abs() < 1e-12 && (v[2] - u).abs() < 1e-12));
    }

    #[test]
    fn reduced_sound_zero_data_stays_zero() {
        let grid = constant_grid([0.0, 0.0, 0.0], 40);
        let s = solve_reduced_sound(grid, &GasParameters::with_kappa(1.4), 0.3, &RunOptions::default()).unwrap();
        assert!(s.last().state.iter().all(|v| *v == [0.0; 3]));
    }

    #[test]
    fn scalar_characteristics_bisection() {
        let phi = |x: f64| (-(x * x)).exp();
        let r = scalar_characteristic_solution(phi, |r| 1.0 + r, 0.3, 0.2, 0.0, 1.0);
        assert!((r - phi(0.3 - (1.0 + r) * 0.2)).abs() < 1e-14);
    }

    #[test]
    fn profiles_are_localized() {
        for shape in [Shape::Bump, Shape::Cosine] {
            let p = Profile::<f64>::new(shape, 0.0, 1.0, 2.0);
            assert_eq!(p.value(1.0), 0.0);
            assert!((p.value(0.0) - 2.0).abs() < 1e-15);
        }
        assert!(Profile::<f64>::new(Shape::Gauss, 0.0, 1.0, 1.0).value(1.0) == 0.0);
    }

    #[test]
    fn exact_solutions_satisfy_the_full_system() {
        for convention in [Convention::Negated, Convention::Standard] {
            let r = exact_residual_suite(convention, 8).unwrap();
            assert!(r.entropic <= 1e-6 && r.double_wave <= 1e-6, "{r:?}");
            assert!(r.reference_pair_reduced <= 1e-6, "{r:?}");
            assert!(r.reference_pair_full > 1e-3, "{r:?}");
        }
    }

    #[test]
    fn convention_signs() {
        assert_eq!(Convention::Negated.advection_sign::<f64>(), -1.0);
        assert_eq!(Convention::Negated.reversed(), Convention::Standard);
        assert_eq!(Convention::Standard.propagation_speed(2.0), 2.0);
    }
}
