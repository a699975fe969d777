//! The one-dimensional Euler system in `(ρ, p, u)` variables.
//!
//! The coefficient matrix is stored in the form `v_t = A(v) v_x`; the solver
//! decides how to interpret its sign (see [`crate::solver::Convention`]).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fields::{self, AutoDiffScalar, FieldRef, ScalarRef, SmoothField, SmoothScalar, StateVector, VectorField};
use crate::linalg::{self, zero33, Mat3, Vec3};
use crate::ode::{self, Tolerance};
use crate::scalar::{Dual, Real};
use crate::{Error, Result};

/// Adiabatic exponent and the integration constants of simple and double
/// waves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct GasParameters<T> {
    #[serde(default = "default_kappa")]
    pub kappa: T,
    #[serde(rename = "A", default = "one")]
    pub a: T,
    #[serde(default = "zero")]
    pub p0: T,
    #[serde(default = "zero")]
    pub u0: T,
}

fn default_kappa<T: Real>() -> T {
    T::lit(1.4)
}
fn one<T: Real>() -> T {
    T::one()
}
fn zero<T: Real>() -> T {
    T::zero()
}

impl<T: Real> Default for GasParameters<T> {
    fn default() -> Self {
        Self { kappa: default_kappa(), a: T::one(), p0: T::zero(), u0: T::zero() }
    }
}

impl<T: Real> GasParameters<T> {
    pub fn with_kappa(kappa: T) -> Self {
        Self { kappa, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > T::zero()) || !self.kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.a > T::zero()) {
            return Err(Error::InvalidParameter(format!("A must be positive, got {}", self.a)));
        }
        if !self.p0.is_finite() || !self.u0.is_finite() {
            return Err(Error::InvalidParameter("p0 and u0 must be finite".into()));
        }
        Ok(())
    }

    /// Sound-wave formulas divide by `κ − 1`.
    pub fn validate_acoustic(&self) -> Result<()> {
        self.validate()?;
        if (self.kappa - T::one()).abs() < T::lit(1e-12) {
            return Err(Error::InvalidParameter("kappa = 1 is excluded for sound waves".into()));
        }
        Ok(())
    }

    pub fn sound_speed(&self, v: &Vec3<T>) -> T {
        (self.kappa * v[1] / v[0]).sqrt()
    }
}

/// `A(v)` exactly as it appears in `v_t = A(v) v_x`.
pub fn euler_matrix<T: Real>(v: &StateVector<T>, g: &GasParameters<T>) -> Mat3<T> {
    euler_matrix_raw(&v.to_array(), g.kappa)
}

pub(crate) fn euler_matrix_raw<T: Real>(v: &Vec3<T>, kappa: T) -> Mat3<T> {
    let (rho, p, u) = (v[0], v[1], v[2]);
    [[u, T::zero(), rho], [T::zero(), u, kappa * p], [T::zero(), T::one() / rho, u]]
}

/// The characteristic directions of the Euler system and the two
/// combinations used for the transformed basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FieldKind {
    #[serde(rename = "gamma+")]
    GammaPlus,
    #[serde(rename = "gamma-")]
    GammaMinus,
    #[serde(rename = "gamma0")]
    GammaZero,
    #[serde(rename = "w1")]
    W1,
    #[serde(rename = "w2")]
    W2,
}

impl FieldKind {
    pub const ALL: [FieldKind; 5] = [Self::GammaPlus, Self::GammaMinus, Self::GammaZero, Self::W1, Self::W2];

    pub fn name(self) -> &'static str {
        match self {
            Self::GammaPlus => "gamma+",
            Self::GammaMinus => "gamma-",
            Self::GammaZero => "gamma0",
            Self::W1 => "w1",
            Self::W2 => "w2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// A built-in Euler field with analytic value and Jacobian.
#[derive(Clone, Copy, Debug)]
pub struct EulerField {
    pub kind: FieldKind,
    pub kappa: f64,
}

impl EulerField {
    pub fn new(kind: FieldKind, kappa: f64) -> Self {
        Self { kind, kappa }
    }

    pub fn shared<T: Real>(kind: FieldKind, kappa: f64) -> FieldRef<T> {
        Arc::new(Self::new(kind, kappa))
    }

    fn eval_generic<S: Real>(&self, v: &Vec3<S>) -> Vec3<S> {
        let k = S::lit(self.kappa);
        let two = S::lit(2.0);
        let c = (k * v[1] / v[0]).sqrt();
        match self.kind {
            FieldKind::GammaPlus => [v[0], k * v[1], c],
            FieldKind::GammaMinus => [v[0], k * v[1], -c],
            FieldKind::GammaZero => [S::one(), S::zero(), S::zero()],
            FieldKind::W1 => [two * v[0], two * k * v[1], S::zero()],
            FieldKind::W2 => [S::zero(), S::zero(), two * c],
        }
    }

    fn jacobian_generic<S: Real>(&self, v: &Vec3<S>) -> Mat3<S> {
        let k = S::lit(self.kappa);
        let two = S::lit(2.0);
        let c = (k * v[1] / v[0]).sqrt();
        // ∇c = (−c/(2ρ), c/(2p), 0)
        let dc = [-c / (two * v[0]), c / (two * v[1])];
        let mut j = zero33();
        match self.kind {
            FieldKind::GammaPlus | FieldKind::GammaMinus => {
                let s = if self.kind == FieldKind::GammaPlus { S::one() } else { -S::one() };
                j[0][0] = S::one();
                j[1][1] = k;
                j[2][0] = s * dc[0];
                j[2][1] = s * dc[1];
            }
            FieldKind::GammaZero => {}
            FieldKind::W1 => {
                j[0][0] = two;
                j[1][1] = two * k;
            }
            FieldKind::W2 => {
                j[2][0] = two * dc[0];
                j[2][1] = two * dc[1];
            }
        }
        j
    }
}

impl SmoothField for EulerField {
    fn label(&self) -> String {
        self.kind.name().to_string()
    }
    fn eval<S: Real>(&self, v: &Vec3<S>) -> Vec3<S> {
        self.eval_generic(v)
    }
}

impl<T: Real> VectorField<T> for EulerField {
    fn label(&self) -> String {
        self.kind.name().to_string()
    }
    fn value(&self, v: &Vec3<T>) -> Vec3<T> {
        self.eval_generic(v)
    }
    fn jacobian(&self, v: &Vec3<T>) -> Mat3<T> {
        self.jacobian_generic(v)
    }
    fn jacobian_derivatives(&self, v: &Vec3<T>) -> Option<[Mat3<T>; 3]> {
        let mut out = [zero33(); 3];
        for (k, o) in out.iter_mut().enumerate() {
            let mut d = v.map(Dual::constant);
            d[k].eps = T::one();
            let j = self.jacobian_generic(&d);
            for a in 0..3 {
                for b in 0..3 {
                    o[a][b] = j[a][b].eps;
                }
            }
        }
        Some(out)
    }
}

/// The three wave families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WaveKind {
    #[serde(rename = "S+")]
    SPlus,
    #[serde(rename = "E")]
    E,
    #[serde(rename = "S-")]
    SMinus,
}

impl WaveKind {
    pub const ALL: [WaveKind; 3] = [Self::SPlus, Self::E, Self::SMinus];

    pub fn name(self) -> &'static str {
        match self {
            Self::SPlus => "S+",
            Self::E => "E",
            Self::SMinus => "S-",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn field_kind(self) -> FieldKind {
        match self {
            Self::SPlus => FieldKind::GammaPlus,
            Self::E => FieldKind::GammaZero,
            Self::SMinus => FieldKind::GammaMinus,
        }
    }

    /// Multiplier of the sound speed in the wave speed: `u + sign·c`.
    pub fn sound_sign(self) -> f64 {
        match self {
            Self::SPlus => 1.0,
            Self::E => 0.0,
            Self::SMinus => -1.0,
        }
    }
}

impl std::fmt::Display for WaveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `u + sign·√(κp/ρ)`.
#[derive(Clone, Copy, Debug)]
pub struct WaveSpeed {
    pub sign: f64,
    pub kappa: f64,
}

impl SmoothScalar for WaveSpeed {
    fn label(&self) -> String {
        match self.sign {
            s if s > 0.0 => "u+c".into(),
            s if s < 0.0 => "u-c".into(),
            _ => "u".into(),
        }
    }
    fn eval<S: Real>(&self, v: &Vec3<S>) -> S {
        v[2] + S::lit(self.sign) * (S::lit(self.kappa) * v[1] / v[0]).sqrt()
    }
}

/// Eigenpair of the coefficient matrix together with its covector.
#[derive(Clone)]
pub struct CharacteristicField<T> {
    pub kind: WaveKind,
    pub speed: ScalarRef<T>,
    pub gamma: FieldRef<T>,
}

impl<T: Real> CharacteristicField<T> {
    pub fn speed_at(&self, v: &Vec3<T>) -> T {
        self.speed.value(v)
    }

    /// `λ = (−v_s, 1)` in `(t, x)` components, so that `λ·(t, x) = x − v_s t`.
    pub fn covector(&self, v: &Vec3<T>) -> [T; 2] {
        [-self.speed_at(v), T::one()]
    }
}

/// The families `(S+, E, S−)` in this order.
pub fn characteristic_fields<T: Real>(g: &GasParameters<T>) -> [CharacteristicField<T>; 3] {
    let kappa = g.kappa.as_f64();
    WaveKind::ALL.map(|kind| CharacteristicField {
        kind,
        speed: Arc::new(AutoDiffScalar(WaveSpeed { sign: kind.sound_sign(), kappa })),
        gamma: EulerField::shared(kind.field_kind(), kappa),
    })
}

/// `(w1, w2) = (γ+ + γ−, γ+ − γ−)`.
pub fn transformed_basis<T: Real>(g: &GasParameters<T>) -> (FieldRef<T>, FieldRef<T>) {
    let kappa = g.kappa.as_f64();
    (EulerField::shared(FieldKind::W1, kappa), EulerField::shared(FieldKind::W2, kappa))
}

// ---------------------------------------------------------------------------
// Simple waves

/// States sampled along a simple wave together with the checks of the
/// algebraic relations claimed for it.
#[derive(Clone, Debug, Serialize)]
pub struct SimpleWave<T> {
    pub kind: WaveKind,
    pub r: Vec<T>,
    pub states: Vec<StateVector<T>>,
    /// `max |p − Aρ^κ − p0| / p` along the curve.
    pub pressure_relation_error: T,
    /// Error of `u = ±(2√(κA)/(κ−1)) ρ^((κ−1)/2) + const`.
    pub velocity_relation_error: T,
    /// Error of the reading `u = (2√(κA)/(κ−1)) ρ^((κ−1)/4) + const`.
    pub reference_velocity_relation_error: T,
    /// Error of `du/dρ = ±c/ρ`, by central differences along the curve.
    pub velocity_slope_error: T,
}

/// The base state of the acoustic simple waves: `ρ = 1`, `p = A + p0`, and
/// `u` chosen so that the velocity relation passes through `u0`.
pub fn simple_wave_base<T: Real>(kind: WaveKind, g: &GasParameters<T>) -> Vec3<T> {
    let sign = T::lit(kind.sound_sign());
    let offset = if kind == WaveKind::E { T::zero() } else { T::lit(2.0) * (g.kappa * g.a).sqrt() / (g.kappa - T::one()) };
    [T::one(), g.a + g.p0, g.u0 + sign * offset]
}

fn integrate_curve<T: Real>(field: &EulerField, base: Vec3<T>, r: T) -> Result<Vec3<T>> {
    let rhs = |_t: T, y: &Vec3<T>| {
        if !(y[0] > T::zero() && y[1] > T::zero()) {
            return Err(Error::LeftPositiveCone { state: crate::fields::coords_f64(y) });
        }
        Ok(VectorField::<T>::value(field, y))
    };
    ode::dopri45(rhs, T::zero(), base, r, Tolerance::default())
}

/// Samples a simple wave of the given family.
///
/// For `E` the samples are the densities themselves (`p`, `u` fixed at
/// `A + p0`, `u0`). For `S±` the states lie on the integral curve of `γ±`
/// through [`simple_wave_base`], parametrized so that `ρ = e^r`.
pub fn simple_wave<T: Real>(kind: WaveKind, g: &GasParameters<T>, r_samples: &[T]) -> Result<SimpleWave<T>> {
    g.validate()?;
    if kind == WaveKind::E {
        let states = r_samples.iter().map(|&r| StateVector::new(r, g.a + g.p0, g.u0)).collect::<Result<Vec<_>>>()?;
        return Ok(SimpleWave {
            kind,
            r: r_samples.to_vec(),
            states,
            pressure_relation_error: T::zero(),
            velocity_relation_error: T::zero(),
            reference_velocity_relation_error: T::zero(),
            velocity_slope_error: T::zero(),
        });
    }
    g.validate_acoustic()?;
    let field = EulerField::new(kind.field_kind(), g.kappa.as_f64());
    let base = simple_wave_base(kind, g);
    let sign = T::lit(kind.sound_sign());
    let k = g.kappa;
    let two = T::lit(2.0);
    let coeff = two * (k * g.a).sqrt() / (k - T::one());

    let mut states = Vec::with_capacity(r_samples.len());
    let mut p_err = T::zero();
    let mut u_err = T::zero();
    let mut u_err_reference = T::zero();
    let mut slope_err = T::zero();
    for &r in r_samples {
        let y = integrate_curve(&field, base, r)?;
        let s = StateVector::from_array(y).map_err(|_| Error::LeftPositiveCone { state: crate::fields::coords_f64(&y) })?;
        p_err = p_err.max((y[1] - g.a * y[0].powf(k) - g.p0).abs() / y[1]);
        let standard = sign * coeff * y[0].powf((k - T::one()) / two) + g.u0;
        let reference = sign * coeff * y[0].powf((k - T::one()) / T::lit(4.0)) + g.u0;
        u_err = u_err.max((y[2] - standard).abs());
        u_err_reference = u_err_reference.max((y[2] - reference).abs());

        let h = T::lit(1e-4);
        let yp = integrate_curve(&field, base, r + h)?;
        let ym = integrate_curve(&field, base, r - h)?;
        let du_drho = (yp[2] - ym[2]) / (yp[0] - ym[0]);
        let expected = sign * g.sound_speed(&y) / y[0];
        slope_err = slope_err.max((du_drho - expected).abs() / T::one().max(expected.abs()));
        states.push(s);
    }
    Ok(SimpleWave {
        kind,
        r: r_samples.to_vec(),
        states,
        pressure_relation_error: p_err,
        velocity_relation_error: u_err,
        reference_velocity_relation_error: u_err_reference,
        velocity_slope_error: slope_err,
    })
}

// ---------------------------------------------------------------------------
// Double waves

/// The closed-form double wave `(Ae^{r1+r2}, κAe^{r1+r2} + p0, √κ(r1−r2) + u0)`.
pub fn double_wave_state<T: Real>(r1: T, r2: T, g: &GasParameters<T>) -> Result<StateVector<T>> {
    g.validate()?;
    let e = g.a * (r1 + r2).exp();
    StateVector::new(e, g.kappa * e + g.p0, g.kappa.sqrt() * (r1 - r2) + g.u0)
}

/// How far `∂f/∂r` of a candidate double-wave map is from being a multiple
/// of the corresponding characteristic field.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProportionalityCheck<T> {
    pub derivative: Vec3<T>,
    pub field: Vec3<T>,
    /// Least-squares multiplier `λ` in `∂f/∂r ≈ λ γ`.
    pub multiplier: T,
    /// `‖∂f/∂r − λγ‖ / ‖∂f/∂r‖`.
    pub relative_residual: T,
    /// Rescaling `1/c` expected for `λ`.
    pub expected_multiplier: T,
}

fn proportionality<T: Real>(derivative: Vec3<T>, field: Vec3<T>, expected: T) -> ProportionalityCheck<T> {
    let multiplier = linalg::dot(&derivative, &field) / linalg::dot(&field, &field);
    let rest = linalg::axpy(&derivative, -multiplier, &field);
    ProportionalityCheck {
        derivative,
        field,
        multiplier,
        relative_residual: linalg::norm(&rest) / linalg::norm(&derivative).max(T::min_positive_value()),
        expected_multiplier: expected,
    }
}

/// Compares `∂/∂r1` and `∂/∂r2` of [`double_wave_state`] with `γ+` and `γ−`.
pub fn reference_double_wave_check<T: Real>(r1: T, r2: T, g: &GasParameters<T>) -> Result<[ProportionalityCheck<T>; 2]> {
    let f = |a: T, b: T| double_wave_state(a, b, g).map(|s| s.to_array());
    let h = T::lit(1e-6);
    let d1 = linalg::scale(T::one() / (h + h), &linalg::sub(&f(r1 + h, r2)?, &f(r1 - h, r2)?));
    let d2 = linalg::scale(T::one() / (h + h), &linalg::sub(&f(r1, r2 + h)?, &f(r1, r2 - h)?));
    let v = f(r1, r2)?;
    let kappa = g.kappa.as_f64();
    let gp = VectorField::<T>::value(&EulerField::new(FieldKind::GammaPlus, kappa), &v);
    let gm = VectorField::<T>::value(&EulerField::new(FieldKind::GammaMinus, kappa), &v);
    let c = g.sound_speed(&v);
    Ok([proportionality(d1, gp, T::one() / c), proportionality(d2, gm, T::one() / c)])
}

/// The `S+S−` double wave obtained by integrating the commuting rescaled
/// fields `γ+/c` and `γ−/c` from a base state.
///
/// Along it `u = r1 − r2 + u0` and `c` is affine in `r1 + r2`.
#[derive(Clone, Copy, Debug)]
pub struct OracleDoubleWave<T> {
    pub gas: GasParameters<T>,
    pub base: Vec3<T>,
    pub steps: usize,
}

impl<T: Real> OracleDoubleWave<T> {
    /// Base state `(1, A + p0, u0)` at `r1 = r2 = 0`.
    pub fn new(gas: GasParameters<T>) -> Result<Self> {
        gas.validate_acoustic()?;
        Ok(Self { gas, base: [T::one(), gas.a + gas.p0, gas.u0], steps: 400 })
    }

    fn flow(&self, sign: T, from: Vec3<T>, r: T) -> Vec3<T> {
        let k = self.gas.kappa;
        ode::rk4(
            |_t, y: &Vec3<T>| {
                let c = (k * y[1] / y[0]).sqrt();
                [y[0] / c, k * y[1] / c, sign]
            },
            T::zero(),
            from,
            r,
            self.steps,
        )
    }

    /// The state at Riemann invariants `(r1, r2)`.
    pub fn state(&self, r1: T, r2: T) -> Result<StateVector<T>> {
        let mid = self.flow(T::one(), self.base, r1);
        let y = self.flow(-T::one(), mid, r2);
        StateVector::from_array(y).map_err(|_| Error::LeftPositiveCone { state: crate::fields::coords_f64(&y) })
    }

    pub fn base_sound_speed(&self) -> T {
        self.gas.sound_speed(&self.base)
    }

    /// Closed form of the same map, used as a cross-check.
    pub fn closed_form(&self, r1: T, r2: T) -> Vec3<T> {
        let k = self.gas.kappa;
        let c0 = self.base_sound_speed();
        let c = c0 + (k - T::one()) / T::lit(2.0) * (r1 + r2);
        let ratio = c / c0;
        let expo = T::lit(2.0) / (k - T::one());
        [self.base[0] * ratio.powf(expo), self.base[1] * ratio.powf(expo * k), self.base[2] + r1 - r2]
    }
}

// ---------------------------------------------------------------------------
// Commutator identities

/// Closed-form coefficients of `[γ+, γ−]`, `[γ+, γ0]` and `[γ−, γ0]` over
/// `(γ+, γ−, γ0)` at density `rho`.
pub fn characteristic_commutators(kappa: f64, rho: f64) -> [((FieldKind, FieldKind), [f64; 3]); 3] {
    use FieldKind::*;
    let half = (1.0 - kappa) / 2.0;
    let q = 1.0 / (4.0 * rho);
    [((GammaPlus, GammaMinus), [half, -half, 0.0]), ((GammaPlus, GammaZero), [q, -q, -1.0]), ((GammaMinus, GammaZero), [-q, q, -1.0])]
}

/// Agreement of one bracket with its closed-form combination.
#[derive(Clone, Debug, Serialize)]
pub struct CommutatorCheck {
    pub pair: (FieldKind, FieldKind),
    pub kappa: f64,
    /// Largest `‖[X, Y] − Σ c_k γ_k‖ / max(1, ‖[X, Y]‖)` over the samples.
    pub max_residual: f64,
    /// Largest deviation of the fitted coefficients from the closed form.
    pub max_coefficient_error: f64,
    pub samples: usize,
}

/// Compares the numerically computed characteristic brackets with
/// [`characteristic_commutators`] on `samples` random states.
pub fn commutator_identity_check(kappa: f64, samples: usize, seed: u64) -> Result<Vec<CommutatorCheck>> {
    GasParameters::with_kappa(kappa).validate()?;
    let basis: Vec<FieldRef<f64>> =
        [FieldKind::GammaPlus, FieldKind::GammaMinus, FieldKind::GammaZero].map(|k| EulerField::shared(k, kappa)).to_vec();
    let states: Vec<StateVector<f64>> = crate::sampling::sample_states(seed, samples);
    let mut out = Vec::with_capacity(3);
    for (slot, ((a, b), _)) in characteristic_commutators(kappa, 1.0).into_iter().enumerate() {
        let bracket = fields::lie_bracket(&EulerField::shared(a, kappa), &EulerField::shared(b, kappa));
        let mut check = CommutatorCheck { pair: (a, b), kappa, max_residual: 0.0, max_coefficient_error: 0.0, samples };
        for s in &states {
            let v = s.to_array();
            let value = bracket.value(&v);
            let expected = characteristic_commutators(kappa, s.rho)[slot].1;
            let combo = basis.iter().zip(expected).fold([0.0; 3], |acc, (f, c)| linalg::axpy(&acc, c, &f.value(&v)));
            let scale = linalg::norm(&value).max(1.0);
            check.max_residual = check.max_residual.max(linalg::norm(&linalg::sub(&value, &combo)) / scale);
            let fit = fields::expand_vector_in_span(&value, &basis, s);
            let err = fit.coefficients.iter().zip(expected).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            check.max_coefficient_error = check.max_coefficient_error.max(err);
        }
        out.push(check);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Reduced matrix

/// The matrix of the reduced system and whether `κ` differs from `3`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ReducedMatrix<T> {
    pub matrix: Mat3<T>,
    /// Set when `κ ≠ 3`, outside the parametrisation the matrix was built for.
    pub off_design_kappa: bool,
}

/// `L · diag(u+c, u−c, u) · R` with `R = [[1, h2, 0], [1, −h2, 0], [0, 0, h0]]`,
/// `L = R⁻¹`, `h2 = √(ρ/p)` and `h0 = ρ`.
pub fn reduced_matrix<T: Real>(v: &StateVector<T>, g: &GasParameters<T>) -> ReducedMatrix<T> {
    let (rho, p, u) = (v.rho, v.p, v.u);
    let h2 = (rho / p).sqrt();
    let h0 = rho;
    let c = g.sound_speed(&v.to_array());
    let half = T::lit(0.5);
    let o = T::zero();
    let left = [[half, half, o], [half / h2, -half / h2, o], [o, o, T::one() / h0]];
    let diag = [[u + c, o, o], [o, u - c, o], [o, o, u]];
    let right = [[T::one(), h2, o], [T::one(), -h2, o], [o, o, h0]];
    ReducedMatrix {
        matrix: linalg::mat_mul(&linalg::mat_mul(&left, &diag), &right),
        off_design_kappa: (g.kappa - T::lit(3.0)).abs() > T::lit(1e-12),
    }
}

/// Closed form `[[u, √κ, 0], [√κ p/ρ, u, 0], [0, 0, u]]` of [`reduced_matrix`].
pub fn reduced_matrix_closed_form<T: Real>(v: &StateVector<T>, g: &GasParameters<T>) -> Mat3<T> {
    let sk = g.kappa.sqrt();
    let o = T::zero();
    [[v.u, sk, o], [sk * v.p / v.rho, v.u, o], [o, o, v.u]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::fd_jacobian;

    const KAPPAS: [f64; 3] = [1.4, 2.0, 3.0];

    #[test]
    fn matrix_at_reference_state() {
        let g = GasParameters::with_kappa(2.0);
        let a = euler_matrix(&StateVector::new(1.0, 1.0, 0.0).unwrap(), &g);
        assert_eq!(a, [[0.0, 0.0, 1.0], [0.0, 0.0, 2.0], [0.0, 1.0, 0.0]]);
    }

    #[test]
    fn eigenvalues_at_kappa_three() {
        let g = GasParameters::with_kappa(3.0);
        let a = euler_matrix(&StateVector::new(1.0, 3.0, 1.0).unwrap(), &g);
        let e = linalg::eigen3(&a).unwrap();
        let mut vals = e.values;
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in vals.iter().zip([-2.0f64, 1.0, 4.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_plus_at_reference_state() {
        let g = GasParameters::with_kappa(2.0);
        let f = characteristic_fields::<f64>(&g);
        let v = [1.0, 1.0, 0.0];
        let gp: Vec3<f64> = f[0].gamma.value(&v);
        let s2 = 2f64.sqrt();
        assert!((gp[0] - 1.0).abs() < 1e-15 && (gp[1] - 2.0).abs() < 1e-15 && (gp[2] - s2).abs() < 1e-15);
        assert!((f[0].speed_at(&v) - s2).abs() < 1e-15);
        assert_eq!(f[1].gamma.value(&[3.0, 2.0, 1.0]), [1.0, 0.0, 0.0]);
        assert_eq!(f[1].speed_at(&[3.0, 2.0, 1.0]), 1.0);
    }

    #[test]
    fn analytic_jacobians_match_autodiff_and_differences() {
        for kappa in KAPPAS {
            for kind in FieldKind::ALL {
                let f = EulerField::new(kind, kappa);
                let v = [1.7, 0.6, -0.3];
                let analytic = VectorField::<f64>::jacobian(&f, &v);
                let auto = VectorField::<f64>::jacobian(&crate::fields::AutoDiff(f), &v);
                let fd = fd_jacobian(|x| VectorField::<f64>::value(&f, x), &v);
                assert!(linalg::max_abs_diff(&analytic, &auto) < 1e-14);
                assert!(linalg::max_abs_diff(&analytic, &fd) < 1e-8);
            }
        }
    }

    #[test]
    fn transformed_basis_at_reference_state() {
        let (w1, w2) = transformed_basis(&GasParameters::with_kappa(2.0));
        let v = [1.0, 1.0, 0.0];
        assert_eq!(w1.value(&v), [2.0, 4.0, 0.0]);
        assert!((w2.value(&v)[2] - 2.0 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn entropic_simple_wave_samples_density() {
        let w = simple_wave(WaveKind::E, &GasParameters::default(), &[0.5, 1.0, 2.0]).unwrap();
        let got: Vec<_> = w.states.iter().map(|s| s.to_f64()).collect();
        assert_eq!(got, vec![[0.5, 1.0, 0.0], [1.0, 1.0, 0.0], [2.0, 1.0, 0.0]]);
    }

    #[test]
    fn acoustic_simple_wave_relations() {
        let g = GasParameters::with_kappa(2.0);
        let w = simple_wave(WaveKind::SPlus, &g, &[-0.5, 0.0, 0.3, 0.8]).unwrap();
        assert!(w.pressure_relation_error <= 1e-8, "{}", w.pressure_relation_error);
        assert!(w.velocity_relation_error <= 1e-8);
        assert!(w.velocity_slope_error <= 1e-6);
        assert!(w.reference_velocity_relation_error > 1e-3);
        // ρ = e^r on the curve
        for (r, s) in w.r.iter().zip(&w.states) {
            let r: f64 = *r;
            assert!((s.rho - r.exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn nonzero_p0_breaks_the_pressure_relation() {
        let g = GasParameters { kappa: 2.0, a: 1.0, p0: 0.5, u0: 0.0 };
        let w = simple_wave(WaveKind::SMinus, &g, &[0.4]).unwrap();
        assert!(w.pressure_relation_error > 1e-3);
    }

    #[test]
    fn reference_double_wave_reference_value() {
        let s = double_wave_state(0.0, 0.0, &GasParameters::with_kappa(3.0)).unwrap();
        assert_eq!(s.to_f64(), [1.0, 3.0, 0.0]);
        let s = double_wave_state(0.25, 0.25, &GasParameters { kappa: 2.0, a: 1.0, p0: 0.0, u0: 0.7 }).unwrap();
        assert_eq!(s.u, 0.7);
    }

    #[test]
    fn reference_double_wave_is_not_tangent_to_gamma_plus() {
        let [c1, _] = reference_double_wave_check(0.3, -0.1, &GasParameters::with_kappa(3.0)).unwrap();
        // ∂f/∂r1 = (ρ, 3ρ, √3) while γ+ = (ρ, 9ρ, 3)
        assert!(c1.relative_residual > 1e-2);
    }

    #[test]
    fn oracle_double_wave_matches_closed_form_and_rescaled_fields() {
        for kappa in KAPPAS {
            let w = OracleDoubleWave::new(GasParameters::with_kappa(kappa)).unwrap();
            let s = w.state(0.2, -0.15).unwrap().to_array();
            let cf = w.closed_form(0.2, -0.15);
            for i in 0..3 {
                assert!((s[i] - cf[i]).abs() < 1e-10, "kappa {kappa}");
            }
            // ∂f/∂r1 = γ+/c
            let h = 1e-5;
            let d: Vec3<f64> = linalg::scale(0.5 / h, &linalg::sub(&w.closed_form(0.2 + h, -0.15), &w.closed_form(0.2 - h, -0.15)));
            let gp = VectorField::<f64>::value(&EulerField::new(FieldKind::GammaPlus, kappa), &cf);
            let c = w.gas.sound_speed(&cf);
            for i in 0..3 {
                assert!((d[i] - gp[i] / c).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn commutator_identities_hold() {
        for kappa in KAPPAS {
            for c in commutator_identity_check(kappa, 50, 4).unwrap() {
                assert!(c.max_residual <= 1e-10 && c.max_coefficient_error <= 1e-8, "{c:?}");
            }
        }
    }

    #[test]
    fn reduced_matrix_reference_value() {
        let g = GasParameters::with_kappa(3.0);
        let r = reduced_matrix(&StateVector::new(1.0, 3.0, 0.0).unwrap(), &g);
        let s3 = 3f64.sqrt();
        let want = [[0.0, s3, 0.0], [3.0 * s3, 0.0, 0.0], [0.0, 0.0, 0.0]];
        assert!(linalg::max_abs_diff(&r.matrix, &want) < 1e-12);
        assert!(!r.off_design_kappa);
        assert!(reduced_matrix(&StateVector::new(1.0, 3.0, 0.0).unwrap(), &GasParameters::with_kappa(2.0)).off_design_kappa);
    }

    #[test]
    fn gas_parameters_deserialize_strictly() {
        let g: GasParameters<f64> = serde_json::from_str(r#"{"kappa": 3, "A": 2}"#).unwrap();
        assert_eq!(g.a, 2.0);
        assert!(serde_json::from_str::<GasParameters<f64>>(r#"{"kapa": 3}"#).is_err());
    }
}
