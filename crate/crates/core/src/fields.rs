//! Vector and scalar fields on the open state space `{ρ > 0, p > 0} × ℝ`.
//!
//! Fields expose their value and Jacobian at raw coordinates `[ρ, p, u]`;
//! positivity is enforced where public operations accept a [`StateVector`].
//! Jacobians are exact whenever the field provides them (analytically or by
//! dual numbers) and fall back to central differences otherwise, in which
//! case [`VectorField::derivatives`] reports [`Derivatives::Approximate`].

use std::fmt;
use std::sync::Arc;

use crate::linalg::{self, axpy, cross, dot, mat_add, mat_scale, mat_t_vec, mat_vec, norm, outer, sub, zero3, zero33, Mat3, Matrix, Vec3};
use crate::scalar::{Dual, Real};
use crate::{Error, Result};

/// A gas state `(ρ, p, u)` with `ρ > 0` and `p > 0`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct StateVector<T> {
    pub rho: T,
    pub p: T,
    pub u: T,
}

impl<T: Real> StateVector<T> {
    pub fn new(rho: T, p: T, u: T) -> Result<Self> {
        if !(rho > T::zero() && p > T::zero()) || !u.is_finite() {
            return Err(Error::NonPositiveState { rho: rho.as_f64(), p: p.as_f64() });
        }
        Ok(Self { rho, p, u })
    }

    pub fn from_array(v: Vec3<T>) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }

    #[inline]
    pub fn to_array(&self) -> Vec3<T> {
        [self.rho, self.p, self.u]
    }

    pub fn to_f64(&self) -> [f64; 3] {
        [self.rho.as_f64(), self.p.as_f64(), self.u.as_f64()]
    }
}

impl<T: fmt::Display> fmt::Display for StateVector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(ρ={}, p={}, u={})", self.rho, self.p, self.u)
    }
}

pub(crate) fn coords_f64<T: Real>(v: &Vec3<T>) -> [f64; 3] {
    [v[0].as_f64(), v[1].as_f64(), v[2].as_f64()]
}

/// Quality of the derivatives a field reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Derivatives {
    Exact,
    /// Central finite differences were involved.
    Approximate,
}

impl Derivatives {
    pub fn and(self, other: Self) -> Self {
        if self == Self::Exact && other == Self::Exact {
            Self::Exact
        } else {
            Self::Approximate
        }
    }
}

/// A smooth vector field on state space.
pub trait VectorField<T: Real>: Send + Sync {
    fn label(&self) -> String;

    fn value(&self, v: &Vec3<T>) -> Vec3<T>;

    /// `J[α][k] = ∂X^α/∂v_k`.
    fn jacobian(&self, v: &Vec3<T>) -> Mat3<T>;

    /// Exact `∂J/∂v_k`, `k = 0, 1, 2`, if the field can supply them.
    fn jacobian_derivatives(&self, _v: &Vec3<T>) -> Option<[Mat3<T>; 3]> {
        None
    }

    fn derivatives(&self) -> Derivatives {
        Derivatives::Exact
    }
}

pub type FieldRef<T> = Arc<dyn VectorField<T>>;

/// A smooth scalar function on state space.
pub trait ScalarField<T: Real>: Send + Sync {
    fn label(&self) -> String;

    fn value(&self, v: &Vec3<T>) -> T;

    fn gradient(&self, v: &Vec3<T>) -> Vec3<T>;

    fn hessian(&self, _v: &Vec3<T>) -> Option<Mat3<T>> {
        None
    }

    fn derivatives(&self) -> Derivatives {
        Derivatives::Exact
    }
}

pub type ScalarRef<T> = Arc<dyn ScalarField<T>>;

/// Step used by the central-difference fallbacks, relative to `max(1, |v_k|)`.
pub(crate) fn fd_step<T: Real>() -> T {
    T::lit(1e-6).max(T::epsilon().sqrt())
}

/// Central-difference Jacobian of an arbitrary map.
pub fn fd_jacobian<T: Real>(f: impl Fn(&Vec3<T>) -> Vec3<T>, v: &Vec3<T>) -> Mat3<T> {
    let mut j = zero33();
    for k in 0..3 {
        let h = fd_step::<T>() * T::one().max(v[k].abs());
        let mut vp = *v;
        let mut vm = *v;
        vp[k] += h;
        vm[k] -= h;
        let d = sub(&f(&vp), &f(&vm));
        for a in 0..3 {
            j[a][k] = d[a] / (h + h);
        }
    }
    j
}

// ---------------------------------------------------------------------------
// Elementary fields

/// A constant field.
#[derive(Clone, Debug)]
pub struct ConstantField<T> {
    pub vector: Vec3<T>,
    pub name: String,
}

impl<T: Real> ConstantField<T> {
    pub fn new(vector: Vec3<T>, name: impl Into<String>) -> Self {
        Self { vector, name: name.into() }
    }

    /// The coordinate direction `∂/∂v_k`.
    pub fn unit(k: usize) -> Self {
        let mut vector = zero3();
        vector[k] = T::one();
        Self { vector, name: format!("e{}", k + 1) }
    }
}

impl<T: Real> VectorField<T> for ConstantField<T> {
    fn label(&self) -> String {
        self.name.clone()
    }
    fn value(&self, _v: &Vec3<T>) -> Vec3<T> {
        self.vector
    }
    fn jacobian(&self, _v: &Vec3<T>) -> Mat3<T> {
        zero33()
    }
    fn jacobian_derivatives(&self, _v: &Vec3<T>) -> Option<[Mat3<T>; 3]> {
        Some([zero33(); 3])
    }
}

/// A field written once for every scalar type; Jacobians come from forward
/// mode dual numbers and are exact.
pub trait SmoothField: Send + Sync {
    fn label(&self) -> String;
    fn eval<S: Real>(&self, v: &Vec3<S>) -> Vec3<S>;
}

/// Adapter turning a [`SmoothField`] into a [`VectorField`].
#[derive(Clone, Debug)]
pub struct AutoDiff<F>(pub F);

impl<T: Real, F: SmoothField> VectorField<T> for AutoDiff<F> {
    fn label(&self) -> String {
        self.0.label()
    }
    fn value(&self, v: &Vec3<T>) -> Vec3<T> {
        self.0.eval(v)
    }
    fn jacobian(&self, v: &Vec3<T>) -> Mat3<T> {
        let mut j = zero33();
        for k in 0..3 {
            let mut d = [Dual::constant(v[0]), Dual::constant(v[1]), Dual::constant(v[2])];
            d[k].eps = T::one();
            let out = self.0.eval(&d);
            for a in 0..3 {
                j[a][k] = out[a].eps;
            }
        }
        j
    }
    fn jacobian_derivatives(&self, v: &Vec3<T>) -> Option<[Mat3<T>; 3]> {
        let mut out = [zero33(); 3];
        for k in 0..3 {
            for jdir in 0..3 {
                let mut d: Vec3<Dual<Dual<T>>> = [0, 1, 2].map(|i| Dual::constant(Dual::constant(v[i])));
                d[jdir].re.eps = T::one();
                d[k].eps.re = T::one();
                let y = self.0.eval(&d);
                for a in 0..3 {
                    out[k][a][jdir] = y[a].eps.eps;
                }
            }
        }
        Some(out)
    }
}

type ValueFn<T> = Box<dyn Fn(&Vec3<T>) -> Vec3<T> + Send + Sync>;

/// A field given only by its values; derivatives by central differences.
pub struct FnField<T> {
    name: String,
    f: ValueFn<T>,
}

impl<T: Real> FnField<T> {
    pub fn new(name: impl Into<String>, f: impl Fn(&Vec3<T>) -> Vec3<T> + Send + Sync + 'static) -> Self {
        Self { name: name.into(), f: Box::new(f) }
    }
}

impl<T: Real> VectorField<T> for FnField<T> {
    fn label(&self) -> String {
        self.name.clone()
    }
    fn value(&self, v: &Vec3<T>) -> Vec3<T> {
        (self.f)(v)
    }
    fn jacobian(&self, v: &Vec3<T>) -> Mat3<T> {
        fd_jacobian(|x| (self.f)(x), v)
    }
    fn derivatives(&self) -> Derivatives {
        Derivatives::Approximate
    }
}

// ---------------------------------------------------------------------------
// Scalar fields

/// `coeff · ρ^rho_exp · p^p_exp`.
#[derive(Clone, Debug)]
pub struct PowerLaw<T> {
    pub coeff: T,
    pub rho_exp: T,
    pub p_exp: T,
    pub name: String,
}

impl<T: Real> PowerLaw<T> {
    pub fn new(coeff: T, rho_exp: T, p_exp: T, name: impl Into<String>) -> Self {
        Self { coeff, rho_exp, p_exp, name: name.into() }
    }

    pub fn constant(c: T) -> Self {
        Self::new(c, T::zero(), T::zero(), format!("{c}"))
    }

    /// `ρ^(-n)`.
    pub fn inverse_density_power(n: u32) -> Self {
        Self::new(T::one(), -T::from_u32(n).unwrap(), T::zero(), format!("rho^-{n}"))
    }
}

impl<T: Real> ScalarField<T> for PowerLaw<T> {
    fn label(&self) -> String {
        self.name.clone()
    }
    fn value(&self, v: &Vec3<T>) -> T {
        self.coeff * v[0].powf(self.rho_exp) * v[1].powf(self.p_exp)
    }
    fn gradient(&self, v: &Vec3<T>) -> Vec3<T> {
        let f = self.value(v);
        [f * self.rho_exp / v[0], f * self.p_exp / v[1], T::zero()]
    }
    fn hessian(&self, v: &Vec3<T>) -> Option<Mat3<T>> {
        let f = self.value(v);
        let (a, b) = (self.rho_exp, self.p_exp);
        let mut h = zero33();
        h[0][0] = f * a * (a - T::one()) / (v[0] * v[0]);
        h[1][1] = f * b * (b - T::one()) / (v[1] * v[1]);
        h[0][1] = f * a * b / (v[0] * v[1]);
        h[1][0] = h[0][1];
        Some(h)
    }
}

/// `1/h`.
pub struct Reciprocal<T>(pub ScalarRef<T>);

impl<T: Real> ScalarField<T> for Reciprocal<T> {
    fn label(&self) -> String {
        format!("1/({})", self.0.label())
    }
    fn value(&self, v: &Vec3<T>) -> T {
        T::one() / self.0.value(v)
    }
    fn gradient(&self, v: &Vec3<T>) -> Vec3<T> {
        let h = self.0.value(v);
        linalg::scale(-T::one() / (h * h), &self.0.gradient(v))
    }
    fn hessian(&self, v: &Vec3<T>) -> Option<Mat3<T>> {
        let h = self.0.value(v);
        let g = self.0.gradient(v);
        let hh = self.0.hessian(v)?;
        let two = T::one() + T::one();
        Some(mat_add(&mat_scale(two / (h * h * h), &outer(&g, &g)), &mat_scale(-T::one() / (h * h), &hh)))
    }
    fn derivatives(&self) -> Derivatives {
        self.0.derivatives()
    }
}

/// A scalar written once for every scalar type; derivatives by dual numbers.
pub trait SmoothScalar: Send + Sync {
    fn label(&self) -> String;
    fn eval<S: Real>(&self, v: &Vec3<S>) -> S;
}

#[derive(Clone, Debug)]
pub struct AutoDiffScalar<F>(pub F);

impl<T: Real, F: SmoothScalar> ScalarField<T> for AutoDiffScalar<F> {
    fn label(&self) -> String {
        self.0.label()
    }
    fn value(&self, v: &Vec3<T>) -> T {
        self.0.eval(v)
    }
    fn gradient(&self, v: &Vec3<T>) -> Vec3<T> {
        let mut g = zero3();
        for (k, gk) in g.iter_mut().enumerate() {
            let mut d = [Dual::constant(v[0]), Dual::constant(v[1]), Dual::constant(v[2])];
            d[k].eps = T::one();
            *gk = self.0.eval(&d).eps;
        }
        g
    }
    fn hessian(&self, v: &Vec3<T>) -> Option<Mat3<T>> {
        let mut h = zero33();
        for k in 0..3 {
            for j in 0..3 {
                let mut d: Vec3<Dual<Dual<T>>> = [0, 1, 2].map(|i| Dual::constant(Dual::constant(v[i])));
                d[j].re.eps = T::one();
                d[k].eps.re = T::one();
                h[k][j] = self.0.eval(&d).eps.eps;
            }
        }
        Some(h)
    }
}

/// Directional derivative `X(h) = ∇h · X`.
pub fn directional_derivative<T: Real>(h: &dyn ScalarField<T>, x: &dyn VectorField<T>, v: &Vec3<T>) -> T {
    dot(&h.gradient(v), &x.value(v))
}

// ---------------------------------------------------------------------------
// Composite fields

/// The Lie bracket `[X, Y] = DY·X − DX·Y`.
pub struct Bracket<T> {
    pub x: FieldRef<T>,
    pub y: FieldRef<T>,
}

impl<T: Real> Bracket<T> {
    fn value_from(&self, jx: &Mat3<T>, jy: &Mat3<T>, xv: &Vec3<T>, yv: &Vec3<T>) -> Vec3<T> {
        sub(&mat_vec(jy, xv), &mat_vec(jx, yv))
    }
}

impl<T: Real> VectorField<T> for Bracket<T> {
    fn label(&self) -> String {
        format!("[{}, {}]", self.x.label(), self.y.label())
    }

    fn value(&self, v: &Vec3<T>) -> Vec3<T> {
        self.value_from(&self.x.jacobian(v), &self.y.jacobian(v), &self.x.value(v), &self.y.value(v))
    }

    fn jacobian(&self, v: &Vec3<T>) -> Mat3<T> {
        match (self.x.jacobian_derivatives(v), self.y.jacobian_derivatives(v)) {
            (Some(dx), Some(dy)) => {
                let (jx, jy) = (self.x.jacobian(v), self.y.jacobian(v));
                let (xv, yv) = (self.x.value(v), self.y.value(v));
                let mut out = zero33();
                for k in 0..3 {
                    // ∂_k[X,Y] = (∂_k JY) X + JY ∂_k X − (∂_k JX) Y − JX ∂_k Y
                    let dxk = linalg::column(&jx, k);
                    let dyk = linalg::column(&jy, k);
                    let col = sub(
                        &linalg::add(&mat_vec(&dy[k], &xv), &mat_vec(&jy, &dxk)),
                        &linalg::add(&mat_vec(&dx[k], &yv), &mat_vec(&jx, &dyk)),
                    );
                    for a in 0..3 {
                        out[a][k] = col[a];
                    }
                }
                out
            }
            _ => fd_jacobian(|p| self.value(p), v),
        }
    }

    fn derivatives(&self) -> Derivatives {
        let probe = [T::one(), T::one(), T::zero()];
        let nested = if self.x.jacobian_derivatives(&probe).is_some() && self.y.jacobian_derivatives(&probe).is_some() {
            Derivatives::Exact
        } else {
            Derivatives::Approximate
        };
        nested.and(self.x.derivatives()).and(self.y.derivatives())
    }
}

/// Pointwise product `h·X`.
pub struct Scaled<T> {
    pub h: ScalarRef<T>,
    pub x: FieldRef<T>,
}

impl<T: Real> Scaled<T> {
    /// Errors if `h` vanishes at `v`.
    pub fn check(&self, v: &Vec3<T>) -> Result<()> {
        let hv = self.h.value(v);
        if hv.is_zero() || !hv.is_finite() {
            return Err(Error::VanishingScale { label: self.h.label(), state: coords_f64(v) });
        }
        Ok(())
    }
}

impl<T: Real> VectorField<T> for Scaled<T> {
    fn label(&self) -> String {
        format!("{}·{}", self.h.label(), self.x.label())
    }
    fn value(&self, v: &Vec3<T>) -> Vec3<T> {
        linalg::scale(self.h.value(v), &self.x.value(v))
    }
    fn jacobian(&self, v: &Vec3<T>) -> Mat3<T> {
        mat_add(&mat_scale(self.h.value(v), &self.x.jacobian(v)), &outer(&self.x.value(v), &self.h.gradient(v)))
    }
    fn jacobian_derivatives(&self, v: &Vec3<T>) -> Option<[Mat3<T>; 3]> {
        let hh = self.h.hessian(v)?;
        let dj = self.x.jacobian_derivatives(v)?;
        let (hv, gh) = (self.h.value(v), self.h.gradient(v));
        let (xv, jx) = (self.x.value(v), self.x.jacobian(v));
        let mut out = [zero33(); 3];
        for (k, o) in out.iter_mut().enumerate() {
            // ∂_k(h JX + X ⊗ ∇h)
            let mut m = mat_add(&mat_scale(gh[k], &jx), &mat_scale(hv, &dj[k]));
            m = mat_add(&m, &outer(&linalg::column(&jx, k), &gh));
            m = mat_add(&m, &outer(&xv, &hh[k]));
            *o = m;
        }
        Some(out)
    }
    fn derivatives(&self) -> Derivatives {
        self.h.derivatives().and(self.x.derivatives())
    }
}

/// `Σ c_i X_i` with constant coefficients.
pub struct Combination<T> {
    pub terms: Vec<(T, FieldRef<T>)>,
}

impl<T: Real> VectorField<T> for Combination<T> {
    fn label(&self) -> String {
        self.terms.iter().map(|(c, f)| format!("{c}·{}", f.label())).collect::<Vec<_>>().join(" + ")
    }
    fn value(&self, v: &Vec3<T>) -> Vec3<T> {
        self.terms.iter().fold(zero3(), |acc, (c, f)| axpy(&acc, *c, &f.value(v)))
    }
    fn jacobian(&self, v: &Vec3<T>) -> Mat3<T> {
        self.terms.iter().fold(zero33(), |acc, (c, f)| mat_add(&acc, &mat_scale(*c, &f.jacobian(v))))
    }
    fn jacobian_derivatives(&self, v: &Vec3<T>) -> Option<[Mat3<T>; 3]> {
        let mut out = [zero33(); 3];
        for (c, f) in &self.terms {
            let d = f.jacobian_derivatives(v)?;
            for k in 0..3 {
                out[k] = mat_add(&out[k], &mat_scale(*c, &d[k]));
            }
        }
        Some(out)
    }
    fn derivatives(&self) -> Derivatives {
        self.terms.iter().fold(Derivatives::Exact, |d, (_, f)| d.and(f.derivatives()))
    }
}

/// Pointwise cross product `X × Y`.
pub struct CrossProduct<T> {
    pub x: FieldRef<T>,
    pub y: FieldRef<T>,
}

impl<T: Real> VectorField<T> for CrossProduct<T> {
    fn label(&self) -> String {
        format!("{}×{}", self.x.label(), self.y.label())
    }
    fn value(&self, v: &Vec3<T>) -> Vec3<T> {
        cross(&self.x.value(v), &self.y.value(v))
    }
    fn jacobian(&self, v: &Vec3<T>) -> Mat3<T> {
        let (xv, yv) = (self.x.value(v), self.y.value(v));
        let (jx, jy) = (self.x.jacobian(v), self.y.jacobian(v));
        let mut out = zero33();
        for k in 0..3 {
            let col = linalg::add(&cross(&linalg::column(&jx, k), &yv), &cross(&xv, &linalg::column(&jy, k)));
            for a in 0..3 {
                out[a][k] = col[a];
            }
        }
        out
    }
    fn derivatives(&self) -> Derivatives {
        self.x.derivatives().and(self.y.derivatives())
    }
}

// ---------------------------------------------------------------------------
// Operations

/// `[X, Y]` as a new field. Its Jacobian is exact when both arguments supply
/// second derivatives and a central difference otherwise (flagged).
pub fn lie_bracket<T: Real>(x: &FieldRef<T>, y: &FieldRef<T>) -> FieldRef<T> {
    Arc::new(Bracket { x: x.clone(), y: y.clone() })
}

/// `h·X` as a new field.
pub fn scale_field<T: Real>(h: &ScalarRef<T>, x: &FieldRef<T>) -> FieldRef<T> {
    Arc::new(Scaled { h: h.clone(), x: x.clone() })
}

/// Checked evaluation of `h·X` at a state: errors where `h` vanishes.
pub fn scaled_value<T: Real>(h: &ScalarRef<T>, x: &FieldRef<T>, v: &StateVector<T>) -> Result<Vec3<T>> {
    let s = Scaled { h: h.clone(), x: x.clone() };
    s.check(&v.to_array())?;
    Ok(s.value(&v.to_array()))
}

/// Relative singular-value threshold for rank decisions.
pub const RANK_RTOL: f64 = 1e-10;

/// Whether the field values at `v` are linearly independent.
pub fn wedge_independent<T: Real>(family: &[FieldRef<T>], v: &StateVector<T>) -> bool {
    assert!(!family.is_empty() && family.len() <= 3, "family must have 1 to 3 fields");
    let cols: Vec<Vec3<T>> = family.iter().map(|f| f.value(&v.to_array())).collect();
    let svd = linalg::Svd::new(&Matrix::from_vec3_columns(&cols));
    svd.max_singular() > T::zero() && svd.rank(T::lit(RANK_RTOL)) == family.len()
}

/// Least-squares coefficients of a vector in the span of a field family.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CommutatorExpansion<T> {
    pub coefficients: Vec<T>,
    /// Norm of the part of the target orthogonal to the span.
    pub residual: T,
    pub point: StateVector<T>,
}

/// Fits a raw vector onto the values of `basis` at `v`.
pub fn expand_vector_in_span<T: Real>(target: &Vec3<T>, basis: &[FieldRef<T>], v: &StateVector<T>) -> CommutatorExpansion<T> {
    assert!(!basis.is_empty() && basis.len() <= 3, "basis must have 1 to 3 fields");
    let cols: Vec<Vec3<T>> = basis.iter().map(|f| f.value(&v.to_array())).collect();
    let ls = linalg::least_squares(&Matrix::from_vec3_columns(&cols), target, T::lit(RANK_RTOL));
    CommutatorExpansion { coefficients: ls.solution, residual: ls.residual, point: *v }
}

/// Least-squares expansion of `target(v)` in `span{basis(v)}`.
pub fn expand_in_span<T: Real>(target: &dyn VectorField<T>, basis: &[FieldRef<T>], v: &StateVector<T>) -> CommutatorExpansion<T> {
    expand_vector_in_span(&target.value(&v.to_array()), basis, v)
}

/// Norm of the two terms composing `[X,Y]` at `v`; the natural scale against
/// which a bracket residual is judged.
pub fn bracket_scale<T: Real>(x: &dyn VectorField<T>, y: &dyn VectorField<T>, v: &Vec3<T>) -> T {
    norm(&mat_vec(&y.jacobian(v), &x.value(v))) + norm(&mat_vec(&x.jacobian(v), &y.value(v)))
}

/// Curl of `X × Y` computed from the Jacobians of `X` and `Y`.
pub fn curl_of_cross<T: Real>(x: &dyn VectorField<T>, y: &dyn VectorField<T>, v: &Vec3<T>) -> (Vec3<T>, T) {
    let (xv, yv) = (x.value(v), y.value(v));
    let (jx, jy) = (x.jacobian(v), y.jacobian(v));
    // jf[a][k] = ∂_k (X×Y)_a
    let mut jf = zero33();
    for k in 0..3 {
        let col = linalg::add(&cross(&linalg::column(&jx, k), &yv), &cross(&xv, &linalg::column(&jy, k)));
        for a in 0..3 {
            jf[a][k] = col[a];
        }
    }
    let curl = [jf[2][1] - jf[1][2], jf[0][2] - jf[2][0], jf[1][0] - jf[0][1]];
    (curl, linalg::frobenius(&jf))
}

/// Gradient of `η(X)` where `η` has value `eta` and Jacobian `jeta`.
pub(crate) fn gradient_of_pairing<T: Real>(eta: &Vec3<T>, jeta: &Mat3<T>, x: &Vec3<T>, jx: &Mat3<T>) -> Vec3<T> {
    linalg::add(&mat_t_vec(jeta, x), &mat_t_vec(jx, eta))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Swirl;
    impl SmoothField for Swirl {
        fn label(&self) -> String {
            "swirl".into()
        }
        fn eval<S: Real>(&self, v: &Vec3<S>) -> Vec3<S> {
            [v[1] * v[2], v[0].sqrt() * v[1], (v[0] * v[1]).ln()]
        }
    }

    #[test]
    fn state_rejects_non_positive() {
        assert!(StateVector::new(0.0, 1.0, 0.0).is_err());
        assert!(StateVector::new(1.0, -1.0, 0.0).is_err());
        assert!(StateVector::new(1.0, 1.0, -3.0).is_ok());
    }

    #[test]
    fn autodiff_jacobian_matches_finite_differences() {
        let f = AutoDiff(Swirl);
        let v = [1.3, 0.7, -0.4];
        let exact = VectorField::<f64>::jacobian(&f, &v);
        let fd = fd_jacobian(|p| f.0.eval(p), &v);
        assert!(linalg::max_abs_diff(&exact, &fd) < 1e-8);
    }

    #[test]
    fn autodiff_second_derivatives_match_jacobian_differences() {
        let f = AutoDiff(Swirl);
        let v = [1.3, 0.7, -0.4];
        let d = VectorField::<f64>::jacobian_derivatives(&f, &v).unwrap();
        for k in 0..3 {
            let h = 1e-6;
            let mut vp = v;
            let mut vm = v;
            vp[k] += h;
            vm[k] -= h;
            let jp = VectorField::<f64>::jacobian(&f, &vp);
            let jm = VectorField::<f64>::jacobian(&f, &vm);
            for a in 0..3 {
                for j in 0..3 {
                    let fd = (jp[a][j] - jm[a][j]) / (2.0 * h);
                    assert!((fd - d[k][a][j]).abs() < 1e-7, "k={k} a={a} j={j}");
                }
            }
        }
    }

    #[test]
    fn bracket_with_itself_vanishes() {
        let f: FieldRef<f64> = Arc::new(AutoDiff(Swirl));
        let b = lie_bracket(&f, &f);
        let v = b.value(&[2.0, 3.0, 1.0]);
        assert!(norm(&v) < 1e-14);
    }

    #[test]
    fn fn_field_is_flagged_approximate() {
        let f: FieldRef<f64> = Arc::new(FnField::new("lin", |v: &Vec3<f64>| [v[1], v[0], 0.0]));
        let c: FieldRef<f64> = Arc::new(ConstantField::unit(0));
        assert_eq!(f.derivatives(), Derivatives::Approximate);
        assert_eq!(lie_bracket(&c, &f).derivatives(), Derivatives::Approximate);
        // [e1, (v1, v0, 0)] = (0, 1, 0)
        let b = lie_bracket(&c, &f).value(&[1.0, 1.0, 0.0]);
        assert!((b[1] - 1.0).abs() < 1e-8 && b[0].abs() < 1e-8);
    }

    #[test]
    fn power_law_derivatives() {
        let h = PowerLaw::<f64>::new(2.0, -0.5, 1.5, "h");
        let v = [1.7, 0.4, 0.0];
        let g = h.gradient(&v);
        let fd = fd_jacobian(|p| [h.value(p), 0.0, 0.0], &v);
        for k in 0..3 {
            assert!((g[k] - fd[0][k]).abs() < 1e-7);
        }
        let hs = h.hessian(&v).unwrap();
        let fdh = fd_jacobian(|p| h.gradient(p), &v);
        assert!(linalg::max_abs_diff(&hs, &fdh) < 1e-6);
    }

    #[test]
    fn zero_target_expands_to_zero() {
        let basis: Vec<FieldRef<f64>> = vec![Arc::new(ConstantField::unit(0)), Arc::new(ConstantField::unit(2))];
        let zero = ConstantField::new([0.0; 3], "0");
        let e = expand_in_span(&zero, &basis, &StateVector::new(1.0, 1.0, 0.0).unwrap());
        assert!(e.coefficients.iter().all(|c| *c == 0.0));
        assert_eq!(e.residual, 0.0);
    }

    #[test]
    fn scaled_check_reports_vanishing_scale() {
        let h: ScalarRef<f64> = Arc::new(PowerLaw::new(0.0, 0.0, 0.0, "zero"));
        let x: FieldRef<f64> = Arc::new(ConstantField::unit(0));
        let err = scaled_value(&h, &x, &StateVector::new(1.0, 1.0, 0.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::VanishingScale { .. }));
    }
}
