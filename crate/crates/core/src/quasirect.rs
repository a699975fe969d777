//! Quasi-rectifiability of field families, rescaling functions and the
//! exactness of the associated one-forms.
//!
//! A family is quasi-rectifiable when every pairwise bracket lies in the span
//! of the pair. Three equivalent tests are offered: the direct span test, the
//! curl of the cross product, and the normalized circulation of `X_i × X_j`
//! around shrinking circles.

use std::sync::Arc;

use serde::Serialize;

use crate::euler::GasParameters;
use crate::fields::{
    self, bracket_scale, curl_of_cross, expand_vector_in_span, lie_bracket, scale_field, wedge_independent, Derivatives, FieldRef,
    PowerLaw, Reciprocal, ScalarRef, StateVector,
};
use crate::linalg::{self, cross, dot, norm, Mat3, Matrix, Vec3};
use crate::quadrature;
use crate::sampling::StateSampler;
use crate::scalar::Real;
use crate::{Error, Result};

/// Relative tolerance for bracket-derived zeros.
pub const BRACKET_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Span,
    Curl,
    Flux,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairResidual {
    pub pair: (usize, usize),
    pub labels: (String, String),
    pub max_residual: f64,
    /// State at which the maximum was attained.
    pub worst_state: [f64; 3],
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiRectReport {
    pub verdict: bool,
    pub per_pair: Vec<PairResidual>,
    pub samples: usize,
    pub criterion: Criterion,
    pub seed: u64,
    pub tolerance: f64,
    pub derivatives: Derivatives,
}

impl QuasiRectReport {
    /// Pairs whose residual exceeded the tolerance.
    pub fn failing_pairs(&self) -> Vec<(usize, usize)> {
        self.per_pair.iter().filter(|p| p.max_residual > self.tolerance).map(|p| p.pair).collect()
    }
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

fn pairwise_test<T: Real>(
    family: &[FieldRef<T>],
    samples: usize,
    seed: u64,
    criterion: Criterion,
    residual: impl Fn(&FieldRef<T>, &FieldRef<T>, &StateVector<T>) -> f64,
) -> Result<QuasiRectReport> {
    if family.len() < 2 {
        return Err(Error::InvalidParameter("a family needs at least two fields".into()));
    }
    let states: Vec<StateVector<T>> = StateSampler::new(seed).states(samples);
    let mut per_pair = Vec::new();
    for (i, j) in pairs(family.len()) {
        let (x, y) = (&family[i], &family[j]);
        let mut worst = PairResidual { pair: (i, j), labels: (x.label(), y.label()), max_residual: 0.0, worst_state: [0.0; 3] };
        for s in &states {
            if !wedge_independent(&[x.clone(), y.clone()], s) {
                return Err(Error::DegenerateFamily { state: s.to_f64() });
            }
            let r = residual(x, y, s);
            if r > worst.max_residual || r.is_nan() {
                worst.max_residual = r;
                worst.worst_state = s.to_f64();
            }
        }
        per_pair.push(worst);
    }
    let derivatives = family.iter().fold(Derivatives::Exact, |d, f| d.and(f.derivatives()));
    Ok(QuasiRectReport {
        verdict: per_pair.iter().all(|p| p.max_residual <= BRACKET_TOL),
        per_pair,
        samples,
        criterion,
        seed,
        tolerance: BRACKET_TOL,
        derivatives,
    })
}

fn relative(residual: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        residual / scale
    } else {
        residual
    }
}

/// Residual of `[X, Y]` outside `span{X, Y}` at `v`, relative to the size of
/// the two terms composing the bracket.
pub fn span_residual<T: Real>(x: &FieldRef<T>, y: &FieldRef<T>, v: &StateVector<T>) -> f64 {
    let b = lie_bracket(x, y).value(&v.to_array());
    let e = expand_vector_in_span(&b, &[x.clone(), y.clone()], v);
    relative(e.residual.as_f64(), bracket_scale(x.as_ref(), y.as_ref(), &v.to_array()).as_f64())
}

/// Expands every pairwise bracket in the span of its pair.
pub fn span_test<T: Real>(family: &[FieldRef<T>], samples: usize, seed: u64) -> Result<QuasiRectReport> {
    pairwise_test(family, samples, seed, Criterion::Span, span_residual)
}

/// Residual of `curl(X × Y)` outside `span{X, Y}`, relative to the Frobenius
/// norm of the Jacobian of `X × Y`.
pub fn curl_residual<T: Real>(x: &FieldRef<T>, y: &FieldRef<T>, v: &StateVector<T>) -> f64 {
    let (curl, scale) = curl_of_cross(x.as_ref(), y.as_ref(), &v.to_array());
    let e = expand_vector_in_span(&curl, &[x.clone(), y.clone()], v);
    relative(e.residual.as_f64(), scale.as_f64())
}

/// The curl criterion; only defined for families of three fields.
pub fn curl_span_test<T: Real>(family: &[FieldRef<T>], samples: usize, seed: u64) -> Result<QuasiRectReport> {
    if family.len() != 3 {
        return Err(Error::InvalidParameter("the curl criterion needs exactly three fields".into()));
    }
    pairwise_test(family, samples, seed, Criterion::Curl, curl_residual)
}

// ---------------------------------------------------------------------------
// Circulation around shrinking circles

/// Number of Gauss–Legendre nodes used on the circle.
pub const FLUX_NODES: usize = 64;
/// Agreement required between the 64- and 32-node rules.
pub const FLUX_QUADRATURE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct FluxRow {
    pub pair: (usize, usize),
    pub labels: (String, String),
    /// `(1/πr²) ∮ X_i × X_j · dσ` for each radius.
    pub values: Vec<f64>,
    /// Extrapolation of `values` to `r → 0`.
    pub limit: f64,
    /// `curl(X_i × X_j)(p) · n`, the value the limit must reach.
    pub curl_normal: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FluxTable {
    pub point: [f64; 3],
    pub radii: Vec<f64>,
    pub rows: Vec<FluxRow>,
}

impl FluxTable {
    pub fn row(&self, i: usize, j: usize) -> Option<&FluxRow> {
        self.rows.iter().find(|r| r.pair == (i, j))
    }
}

fn orthonormal_frame<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Option<(Vec3<T>, Vec3<T>)> {
    let na = norm(a);
    if na.is_zero() {
        return None;
    }
    let e1 = linalg::scale(T::one() / na, a);
    let rest = linalg::axpy(b, -dot(b, &e1), &e1);
    let nr = norm(&rest);
    if nr <= T::lit(fields::RANK_RTOL) * norm(b) {
        return None;
    }
    Some((e1, linalg::scale(T::one() / nr, &rest)))
}

fn circulation<T: Real>(x: &FieldRef<T>, y: &FieldRef<T>, p: &Vec3<T>, frame: &(Vec3<T>, Vec3<T>), r: T, nodes: usize) -> Result<T> {
    let (e1, e2) = frame;
    let failure = std::cell::Cell::new(None);
    let integrand = |theta: T| {
        let (s, c) = theta.sin_cos();
        let q = linalg::add(p, &linalg::add(&linalg::scale(r * c, e1), &linalg::scale(r * s, e2)));
        if !(q[0] > T::zero() && q[1] > T::zero()) {
            failure.set(Some(q));
            return T::zero();
        }
        let tangent = linalg::add(&linalg::scale(-s * r, e1), &linalg::scale(c * r, e2));
        dot(&cross(&x.value(&q), &y.value(&q)), &tangent)
    };
    let two_pi = T::lit(2.0) * T::PI();
    let value = quadrature::integrate(integrand, T::zero(), two_pi, nodes);
    if let Some(q) = failure.get() {
        return Err(Error::LeftPositiveCone { state: fields::coords_f64(&q) });
    }
    Ok(value / (T::PI() * r * r))
}

/// Normalized circulation of `X_i × X_j` around circles of the given radii
/// centred at `point` in the plane of `X_i(point), X_j(point)`.
pub fn flux_integral_test<T: Real>(family: &[FieldRef<T>], point: &StateVector<T>, radii: &[T]) -> Result<FluxTable> {
    if family.len() < 2 || family.len() > 3 {
        return Err(Error::InvalidParameter("the flux criterion needs two or three fields".into()));
    }
    if radii.is_empty() || radii.iter().any(|r| !(*r > T::zero())) || radii.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("radii must be positive and strictly decreasing".into()));
    }
    let p = point.to_array();
    let mut rows = Vec::new();
    for (i, j) in pairs(family.len()) {
        let (x, y) = (&family[i], &family[j]);
        let frame = orthonormal_frame(&x.value(&p), &y.value(&p)).ok_or(Error::DegenerateFamily { state: point.to_f64() })?;
        let mut values = Vec::with_capacity(radii.len());
        for &r in radii {
            let fine = circulation(x, y, &p, &frame, r, FLUX_NODES)?;
            let coarse = circulation(x, y, &p, &frame, r, FLUX_NODES / 2)?;
            let difference = (fine - coarse).abs().as_f64();
            if difference > FLUX_QUADRATURE_TOL {
                return Err(Error::QuadratureNonConvergence { i, j, radius: r.as_f64(), difference });
            }
            values.push(fine.as_f64());
        }
        // the normalized circulation is even in r
        let r2: Vec<f64> = radii.iter().map(|r| r.as_f64() * r.as_f64()).collect();
        let limit = quadrature::extrapolate_to_zero(&r2, &values);
        let (curl, _) = curl_of_cross(x.as_ref(), y.as_ref(), &p);
        let normal = cross(&frame.0, &frame.1);
        rows.push(FluxRow { pair: (i, j), labels: (x.label(), y.label()), values, limit, curl_normal: dot(&curl, &normal).as_f64() });
    }
    Ok(FluxTable { point: point.to_f64(), radii: radii.iter().map(|r| r.as_f64()).collect(), rows })
}

// ---------------------------------------------------------------------------
// Rescaling

#[derive(Clone, Debug, Serialize)]
pub struct RescalingReport {
    pub holds: bool,
    /// Largest `‖[h_i X_i, h_j X_j]‖` over samples and pairs.
    pub max_residual: f64,
    /// Largest `‖[h_i X_i, h_j X_j]‖ / (‖h_i X_i‖ ‖h_j X_j‖)`.
    pub max_relative_residual: f64,
    pub samples: usize,
    pub seed: u64,
}

fn check_scales<T: Real>(h: &[ScalarRef<T>], s: &StateVector<T>) -> Result<()> {
    for hi in h {
        let value = hi.value(&s.to_array());
        if value.is_zero() || !value.is_finite() {
            return Err(Error::VanishingScale { label: hi.label(), state: s.to_f64() });
        }
    }
    Ok(())
}

/// Norms of the pairwise brackets of the rescaled fields at explicit states.
pub fn rescaled_bracket_norms<T: Real>(family: &[FieldRef<T>], h: &[ScalarRef<T>], states: &[StateVector<T>]) -> Result<Vec<(f64, f64)>> {
    if family.len() != h.len() {
        return Err(Error::InvalidParameter("one scale per field is required".into()));
    }
    let scaled: Vec<FieldRef<T>> = family.iter().zip(h).map(|(x, hi)| scale_field(hi, x)).collect();
    let mut out = Vec::new();
    for s in states {
        check_scales(h, s)?;
        let v = s.to_array();
        for (i, j) in pairs(family.len()) {
            let b = norm(&lie_bracket(&scaled[i], &scaled[j]).value(&v)).as_f64();
            let size = (norm(&scaled[i].value(&v)) * norm(&scaled[j].value(&v))).as_f64();
            out.push((b, size));
        }
    }
    Ok(out)
}

/// Whether `h_i X_i` pairwise commute on `samples` random states.
pub fn verify_rescaling<T: Real>(family: &[FieldRef<T>], h: &[ScalarRef<T>], samples: usize, seed: u64) -> Result<RescalingReport> {
    let states: Vec<StateVector<T>> = StateSampler::new(seed).states(samples);
    let norms = rescaled_bracket_norms(family, h, &states)?;
    let holds = norms.iter().all(|(b, size)| *b <= BRACKET_TOL * size);
    let max_residual = norms.iter().map(|x| x.0).fold(0.0, f64::max);
    let max_relative_residual = norms.iter().map(|(b, size)| relative(*b, *size)).fold(0.0, f64::max);
    Ok(RescalingReport { holds, max_residual, max_relative_residual, samples, seed })
}

/// Closed-form rescalings of the Euler fields.
pub mod euler_rescalings {
    use super::*;

    /// `(κp/ρ)^(−1/2)`, making `γ+` and `γ−` commute.
    pub fn sound<T: Real>(g: &GasParameters<T>) -> ScalarRef<T> {
        let half = T::lit(0.5);
        Arc::new(PowerLaw::new(g.kappa.powf(-half), half, -half, "(kappa p/rho)^(-1/2)"))
    }

    /// `(ρ/p)^(1/2)`, for `w2`.
    pub fn acoustic_difference<T: Real>() -> ScalarRef<T> {
        let half = T::lit(0.5);
        Arc::new(PowerLaw::new(T::one(), half, -half, "(rho/p)^(1/2)"))
    }

    /// `ρ`, for `γ0`.
    pub fn entropic<T: Real>() -> ScalarRef<T> {
        Arc::new(PowerLaw::new(T::one(), T::one(), T::zero(), "rho"))
    }

    pub fn unit<T: Real>() -> ScalarRef<T> {
        Arc::new(PowerLaw::constant(T::one()))
    }
}

// ---------------------------------------------------------------------------
// One-forms and exactness

/// A smooth one-form on state space.
pub trait CovectorField<T: Real>: Send + Sync {
    fn label(&self) -> String;
    fn value(&self, v: &Vec3<T>) -> Vec3<T>;
    /// `J[i][k] = ∂η_i/∂v_k`.
    fn jacobian(&self, v: &Vec3<T>) -> Mat3<T>;
}

pub type CovectorRef<T> = Arc<dyn CovectorField<T>>;

/// `d v_k`.
#[derive(Clone, Copy, Debug)]
pub struct CoordinateDifferential(pub usize);

impl<T: Real> CovectorField<T> for CoordinateDifferential {
    fn label(&self) -> String {
        ["d rho", "d p", "d u"][self.0].to_string()
    }
    fn value(&self, _v: &Vec3<T>) -> Vec3<T> {
        let mut e = linalg::zero3();
        e[self.0] = T::one();
        e
    }
    fn jacobian(&self, _v: &Vec3<T>) -> Mat3<T> {
        linalg::zero33()
    }
}

/// The coframe `η_i(X_j) = δ_ij` of a field family.
///
/// Families of two fields are completed by `X_1 × X_2`; the forms dual to the
/// original fields restricted to their span do not depend on the completion.
#[derive(Clone)]
pub struct DualFrame<T> {
    pub basis: Vec<FieldRef<T>>,
    original: usize,
}

impl<T: Real> DualFrame<T> {
    pub fn new(family: &[FieldRef<T>]) -> Result<Self> {
        let mut basis = family.to_vec();
        match family.len() {
            3 => {}
            2 => basis.push(Arc::new(fields::CrossProduct { x: family[0].clone(), y: family[1].clone() })),
            _ => return Err(Error::InvalidParameter("a dual frame needs two or three fields".into())),
        }
        Ok(Self { basis, original: family.len() })
    }

    fn matrix(&self, v: &Vec3<T>) -> Result<Mat3<T>> {
        let g = linalg::from_columns(&[self.basis[0].value(v), self.basis[1].value(v), self.basis[2].value(v)]);
        let scale = linalg::frobenius(&g);
        linalg::inverse3(&g, T::lit(fields::RANK_RTOL) * scale * scale * scale)
            .ok_or(Error::DegenerateFamily { state: fields::coords_f64(v) })
    }

    /// The form dual to `basis[i]`.
    pub fn one_form(&self, i: usize) -> Result<CovectorRef<T>> {
        if i >= self.original {
            return Err(Error::InvalidParameter(format!("frame has {} fields", self.original)));
        }
        Ok(Arc::new(DualForm { frame: self.clone(), index: i }))
    }

    /// Largest `|η_i(X_j) − δ_ij|` over `states`.
    pub fn duality_defect(&self, states: &[StateVector<T>]) -> Result<f64> {
        let mut worst = 0.0f64;
        for s in states {
            let v = s.to_array();
            let inv = self.matrix(&v)?;
            for (i, row) in inv.iter().enumerate() {
                for (j, f) in self.basis.iter().enumerate() {
                    let target = if i == j { T::one() } else { T::zero() };
                    worst = worst.max((dot(row, &f.value(&v)) - target).abs().as_f64());
                }
            }
        }
        Ok(worst)
    }
}

struct DualForm<T> {
    frame: DualFrame<T>,
    index: usize,
}

impl<T: Real> CovectorField<T> for DualForm<T> {
    fn label(&self) -> String {
        format!("eta[{}]", self.frame.basis[self.index].label())
    }
    fn value(&self, v: &Vec3<T>) -> Vec3<T> {
        match self.frame.matrix(v) {
            Ok(inv) => inv[self.index],
            Err(_) => [T::nan(); 3],
        }
    }
    fn jacobian(&self, v: &Vec3<T>) -> Mat3<T> {
        let Ok(inv) = self.frame.matrix(v) else {
            return [[T::nan(); 3]; 3];
        };
        let jac: Vec<Mat3<T>> = self.frame.basis.iter().map(|f| f.jacobian(v)).collect();
        let mut out = linalg::zero33();
        for k in 0..3 {
            // ∂_k G has columns ∂_k X_j; ∂_k G⁻¹ = −G⁻¹ (∂_k G) G⁻¹
            let dg = linalg::from_columns(&[linalg::column(&jac[0], k), linalg::column(&jac[1], k), linalg::column(&jac[2], k)]);
            let d = linalg::mat_mul(&linalg::mat_mul(&inv, &dg), &inv);
            for i in 0..3 {
                out[i][k] = -d[self.index][i];
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExactnessReport {
    pub exact: bool,
    /// Largest `|d(hη)(X_a, X_b)|`.
    pub max_value: f64,
    pub samples: usize,
    pub seed: u64,
}

/// `d(hη)(X_a, X_b) = X_a(hη(X_b)) − X_b(hη(X_a)) − hη([X_a, X_b])` at `v`,
/// together with the sum of the magnitudes of its three terms.
pub fn exterior_derivative_on_pair<T: Real>(
    eta: &dyn CovectorField<T>,
    h: &ScalarRef<T>,
    xa: &FieldRef<T>,
    xb: &FieldRef<T>,
    v: &Vec3<T>,
) -> (T, T) {
    let (e, je) = (eta.value(v), eta.jacobian(v));
    let (hv, gh) = (h.value(v), h.gradient(v));
    let (a, b) = (xa.value(v), xb.value(v));
    let (ja, jb) = (xa.jacobian(v), xb.jacobian(v));
    // ∇(hη(X)) = η(X)∇h + h(Jηᵀ X + JXᵀ η)
    let grad = |x: &Vec3<T>, jx: &Mat3<T>| {
        linalg::add(&linalg::scale(dot(&e, x), &gh), &linalg::scale(hv, &fields::gradient_of_pairing(&e, &je, x, jx)))
    };
    let t1 = dot(&grad(&b, &jb), &a);
    let t2 = dot(&grad(&a, &ja), &b);
    let bracket = linalg::sub(&linalg::mat_vec(&jb, &a), &linalg::mat_vec(&ja, &b));
    let t3 = hv * dot(&e, &bracket);
    (t1 - t2 - t3, t1.abs() + t2.abs() + t3.abs())
}

/// Whether `d(hη)` vanishes on every pair of the distribution.
pub fn exactness_check<T: Real>(
    eta: &dyn CovectorField<T>,
    h: &ScalarRef<T>,
    distribution: &[FieldRef<T>],
    samples: usize,
    seed: u64,
) -> Result<ExactnessReport> {
    if distribution.len() < 2 {
        return Err(Error::InvalidParameter("a distribution needs at least two fields".into()));
    }
    let states: Vec<StateVector<T>> = StateSampler::new(seed).states(samples);
    let mut max_value = 0.0f64;
    let mut exact = true;
    for s in &states {
        if !wedge_independent(distribution, s) {
            return Err(Error::DegenerateFamily { state: s.to_f64() });
        }
        check_scales(std::slice::from_ref(h), s)?;
        for (a, b) in pairs(distribution.len()) {
            let (d, terms) = exterior_derivative_on_pair(eta, h, &distribution[a], &distribution[b], &s.to_array());
            let d = d.abs().as_f64();
            max_value = max_value.max(d);
            if d > BRACKET_TOL * terms.as_f64().max(1.0) {
                exact = false;
            }
        }
    }
    Ok(ExactnessReport { exact, max_value, samples, seed })
}

/// Which way round a supplied set of weights works.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// The supplied `h_i` themselves.
    Direct,
    /// The reciprocals `1/h_i`.
    Inverse,
    Both,
    Neither,
}

impl Orientation {
    fn from_flags(direct: bool, inverse: bool) -> Self {
        match (direct, inverse) {
            (true, true) => Self::Both,
            (true, false) => Self::Direct,
            (false, true) => Self::Inverse,
            (false, false) => Self::Neither,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OrientationReport {
    /// `h_i X_i` commute (`Direct`) or `X_i / h_i` commute (`Inverse`).
    pub commuting: Orientation,
    /// `d(h_i η_i)` vanishes on the distribution (`Direct`) or
    /// `d(η_i / h_i)` does (`Inverse`).
    pub exactness: Orientation,
    pub commuting_residual: [f64; 2],
    pub exactness_residual: [f64; 2],
}

/// Tests both orientations of a set of weights on a family spanning the
/// distribution and its dual coframe.
pub fn rescaling_orientation<T: Real>(family: &[FieldRef<T>], h: &[ScalarRef<T>], samples: usize, seed: u64) -> Result<OrientationReport> {
    let inv: Vec<ScalarRef<T>> = h.iter().map(|hi| Arc::new(Reciprocal(hi.clone())) as ScalarRef<T>).collect();
    let direct = verify_rescaling(family, h, samples, seed)?;
    let inverse = verify_rescaling(family, &inv, samples, seed)?;
    let frame = DualFrame::new(family)?;
    let mut exact = [true, true];
    let mut residual = [0.0f64, 0.0];
    for (i, (hd, hi)) in h.iter().zip(&inv).enumerate() {
        let eta = frame.one_form(i)?;
        for (slot, weight) in [hd, hi].into_iter().enumerate() {
            let r = exactness_check(eta.as_ref(), weight, family, samples, seed)?;
            exact[slot] &= r.exact;
            residual[slot] = residual[slot].max(r.max_value);
        }
    }
    Ok(OrientationReport {
        commuting: Orientation::from_flags(direct.holds, inverse.holds),
        exactness: Orientation::from_flags(exact[0], exact[1]),
        commuting_residual: [direct.max_residual, inverse.max_residual],
        exactness_residual: residual,
    })
}

/// Builds the matrix of field values at a state, columns in family order.
pub fn value_matrix<T: Real>(family: &[FieldRef<T>], v: &StateVector<T>) -> Matrix<T> {
    Matrix::from_vec3_columns(&family.iter().map(|f| f.value(&v.to_array())).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::{EulerField, FieldKind};
    use crate::fields::ConstantField;

    fn euler(kinds: &[FieldKind], kappa: f64) -> Vec<FieldRef<f64>> {
        kinds.iter().map(|k| EulerField::shared(*k, kappa)).collect()
    }

    use FieldKind::*;

    #[test]
    fn acoustic_pair_is_quasi_rectifiable() {
        let r = span_test(&euler(&[GammaPlus, GammaMinus], 1.4), 100, 1).unwrap();
        assert!(r.verdict, "{:?}", r.per_pair);
    }

    #[test]
    fn full_family_fails_on_entropic_pairs() {
        let r = span_test(&euler(&[GammaPlus, GammaZero, GammaMinus], 1.4), 100, 1).unwrap();
        assert!(!r.verdict);
        assert_eq!(r.failing_pairs(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn transformed_family_passes_both_criteria() {
        let fam = euler(&[W1, W2, GammaZero], 2.0);
        assert!(span_test(&fam, 100, 3).unwrap().verdict);
        assert!(curl_span_test(&fam, 100, 3).unwrap().verdict);
        assert!(!curl_span_test(&euler(&[GammaPlus, GammaZero, GammaMinus], 1.4), 100, 3).unwrap().verdict);
    }

    #[test]
    fn constant_fields_have_zero_curl() {
        let fam: Vec<FieldRef<f64>> = (0..3).map(|k| Arc::new(ConstantField::unit(k)) as FieldRef<f64>).collect();
        let r = curl_span_test(&fam, 20, 0).unwrap();
        assert!(r.verdict);
        assert!(r.per_pair.iter().all(|p| p.max_residual == 0.0));
        let t = flux_integral_test(&fam, &StateVector::new(1.0, 1.0, 0.0).unwrap(), &[0.2, 0.1]).unwrap();
        assert!(t.rows.iter().all(|row| row.values.iter().all(|v| v.abs() < 1e-15)));
    }

    #[test]
    fn degenerate_family_is_reported() {
        let fam = euler(&[GammaPlus, GammaPlus], 1.4);
        assert!(matches!(span_test(&fam, 5, 0), Err(Error::DegenerateFamily { .. })));
    }

    #[test]
    fn flux_limits() {
        let p = StateVector::new(1.0, 1.0, 0.0).unwrap();
        let radii = [0.4, 0.2, 0.1, 0.05];
        let t = flux_integral_test(&euler(&[GammaPlus, GammaZero, GammaMinus], 2.0), &p, &radii).unwrap();
        let acoustic = t.row(0, 2).unwrap();
        assert!(acoustic.limit.abs() < 1e-6, "{}", acoustic.limit);
        let mixed = t.row(0, 1).unwrap();
        assert!(mixed.limit.abs() > 1e-3);
        assert!((mixed.limit - mixed.curl_normal).abs() < 1e-6, "{} vs {}", mixed.limit, mixed.curl_normal);
    }

    #[test]
    fn flux_rejects_bad_radii() {
        let p = StateVector::new(1.0, 1.0, 0.0).unwrap();
        let fam = euler(&[GammaPlus, GammaMinus], 2.0);
        assert!(flux_integral_test(&fam, &p, &[0.1, 0.2]).is_err());
        assert!(flux_integral_test(&fam, &p, &[]).is_err());
    }

    #[test]
    fn sound_rescaling_commutes_and_unit_weights_do_not() {
        let g = GasParameters::with_kappa(1.4);
        let fam = euler(&[GammaPlus, GammaMinus], 1.4);
        let h = euler_rescalings::sound(&g);
        assert!(verify_rescaling(&fam, &[h.clone(), h], 100, 5).unwrap().holds);
        let one = euler_rescalings::unit::<f64>();
        let states: Vec<StateVector<f64>> = StateSampler::new(5).states(10);
        let norms = rescaled_bracket_norms(&fam, &[one.clone(), one.clone()], &states).unwrap();
        for (s, (b, _)) in states.iter().zip(norms) {
            let v = s.to_array();
            let expected =
                linalg::add(&linalg::scale((1.0 - 1.4) / 2.0, &fam[0].value(&v)), &linalg::scale((1.4 - 1.0) / 2.0, &fam[1].value(&v)));
            assert!((b - norm(&expected)).abs() < 1e-12 * norm(&expected).max(1.0));
        }
        assert!(!verify_rescaling(&fam, &[one.clone(), one], 100, 5).unwrap().holds);
    }

    #[test]
    fn vanishing_scale_is_reported() {
        let fam = euler(&[GammaPlus, GammaMinus], 1.4);
        let zero: ScalarRef<f64> = Arc::new(PowerLaw::constant(0.0));
        assert!(matches!(verify_rescaling(&fam, &[zero.clone(), zero], 3, 0), Err(Error::VanishingScale { .. })));
    }

    #[test]
    fn dual_frame_is_dual() {
        let fam = euler(&[GammaPlus, GammaMinus], 1.4);
        let frame = DualFrame::new(&fam).unwrap();
        let states: Vec<StateVector<f64>> = StateSampler::new(9).states(50);
        assert!(frame.duality_defect(&states).unwrap() < 1e-10);
    }

    #[test]
    fn dual_form_jacobian_matches_differences() {
        let fam = euler(&[GammaPlus, GammaZero, GammaMinus], 1.4);
        let eta = DualFrame::new(&fam).unwrap().one_form(0).unwrap();
        let v = [1.3, 0.8, 0.2];
        let fd = fields::fd_jacobian(|x| eta.value(x), &v);
        assert!(linalg::max_abs_diff(&fd, &eta.jacobian(&v)) < 1e-7);
    }

    #[test]
    fn exactness_orientation_for_sound_waves() {
        let g = GasParameters::with_kappa(1.4);
        let fam = euler(&[GammaPlus, GammaMinus], 1.4);
        let h = euler_rescalings::sound(&g);
        let eta = DualFrame::new(&fam).unwrap().one_form(0).unwrap();
        let inverse: ScalarRef<f64> = Arc::new(Reciprocal(h.clone()));
        assert!(exactness_check(eta.as_ref(), &inverse, &fam, 100, 2).unwrap().exact);
        assert!(!exactness_check(eta.as_ref(), &h, &fam, 100, 2).unwrap().exact);
        assert!(!exactness_check(eta.as_ref(), &euler_rescalings::unit(), &fam, 100, 2).unwrap().exact);
        let o = rescaling_orientation(&fam, &[h.clone(), h], 50, 2).unwrap();
        assert_eq!(o.commuting, Orientation::Direct);
        assert_eq!(o.exactness, Orientation::Inverse);
    }

    #[test]
    fn coordinate_differential_is_closed() {
        let fam = euler(&[GammaPlus, GammaZero, GammaMinus], 2.0);
        for k in 0..3 {
            let r = exactness_check(&CoordinateDifferential(k), &euler_rescalings::unit(), &fam, 50, 4).unwrap();
            assert!(r.exact, "k={k} {}", r.max_value);
        }
    }
}
