//! The three-parameter chart of the superposition region for `κ = 3`, its
//! leaves `Φ(t3)` and `Σ(t3)`, and their fundamental forms.

use serde::Serialize;

use crate::fields::StateVector;
use crate::linalg::{self, cross, dot, norm, Mat3, Vec3};
use crate::sampling::StateSampler;
use crate::scalar::{Dual, Real};
use crate::{Error, Result};

fn two_sqrt3<T: Real>() -> T {
    T::lit(2.0) * T::lit(3.0).sqrt()
}

/// `(ρ, p, u) = (e^{2t1+t3}, e^{6t1}, 2√3 t2)`.
pub fn region_map<T: Real>(t1: T, t2: T, t3: T) -> StateVector<T> {
    let two = T::lit(2.0);
    StateVector { rho: (two * t1 + t3).exp(), p: (T::lit(6.0) * t1).exp(), u: two_sqrt3::<T>() * t2 }
}

/// `∂(ρ, p, u)/∂(t1, t2, t3)`.
pub fn region_map_jacobian<T: Real>(t1: T, t2: T, t3: T) -> Mat3<T> {
    let v = region_map(t1, t2, t3);
    let two = T::lit(2.0);
    let o = T::zero();
    [[two * v.rho, o, v.rho], [T::lit(6.0) * v.p, o, o], [o, two_sqrt3(), o]]
}

/// Closed form of the Jacobian determinant, `12√3·e^{8t1+t3}`.
pub fn region_map_determinant<T: Real>(t1: T, t3: T) -> T {
    T::lit(12.0) * T::lit(3.0).sqrt() * (T::lit(8.0) * t1 + t3).exp()
}

/// `t1 = ln p / 6`, `t2 = u / (2√3)`, `t3 = ln ρ − 2 t1`.
pub fn region_inverse<T: Real>(v: &StateVector<T>) -> Vec3<T> {
    let t1 = v.p.ln() / T::lit(6.0);
    [t1, v.u / two_sqrt3::<T>(), v.rho.ln() - T::lit(2.0) * t1]
}

/// The parametrized surfaces available as patches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceKind {
    /// `(t1, t2) ↦ (e^{2t1+t3}, e^{6t1}, 2√3 t2)`.
    Phi { t3: f64 },
    /// `(t1, t2) ↦ (2t1 + t3, 6t1, ln 2√3 + ln t2)`, defined for `t2 > 0`.
    Sigma { t3: f64 },
    /// `origin + s1·a + s2·b`.
    Plane { origin: [f64; 3], a: [f64; 3], b: [f64; 3] },
    /// `(sin s1 cos s2, sin s1 sin s2, cos s1)`.
    SphereOctant,
}

impl SurfaceKind {
    pub fn eval<S: Real>(&self, s1: S, s2: S) -> Vec3<S> {
        match *self {
            Self::Phi { t3 } => region_map(s1, s2, S::lit(t3)).to_array(),
            Self::Sigma { t3 } => [S::lit(2.0) * s1 + S::lit(t3), S::lit(6.0) * s1, two_sqrt3::<S>().ln() + s2.ln()],
            Self::Plane { origin, a, b } => {
                let l = |k: usize| S::lit(origin[k]) + s1 * S::lit(a[k]) + s2 * S::lit(b[k]);
                [l(0), l(1), l(2)]
            }
            Self::SphereOctant => {
                let (st, ct) = s1.sin_cos();
                let (sp, cp) = s2.sin_cos();
                [st * cp, st * sp, ct]
            }
        }
    }

    fn validate(&self, s2: f64) -> Result<()> {
        if let Self::Sigma { .. } = self {
            if !(s2 > 0.0) {
                return Err(Error::InvalidParameter(format!("Sigma needs t2 > 0, got {s2}")));
            }
        }
        Ok(())
    }
}

/// A parametrized surface on a rectangle, oriented by `∂s1 × ∂s2`
/// (`orientation = 1`) or its opposite (`−1`).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SurfacePatch {
    pub kind: SurfaceKind,
    pub domain: [[f64; 2]; 2],
    pub orientation: f64,
}

/// Default parameter rectangle `(0, 2]²`.
pub const DEFAULT_DOMAIN: [[f64; 2]; 2] = [[0.0, 2.0], [0.0, 2.0]];

pub fn phi_surface(t3: f64) -> SurfacePatch {
    SurfacePatch { kind: SurfaceKind::Phi { t3 }, domain: DEFAULT_DOMAIN, orientation: 1.0 }
}

pub fn sigma_surface(t3: f64) -> SurfacePatch {
    SurfacePatch { kind: SurfaceKind::Sigma { t3 }, domain: DEFAULT_DOMAIN, orientation: 1.0 }
}

impl SurfacePatch {
    pub fn point(&self, s1: f64, s2: f64) -> Result<Vec3<f64>> {
        self.kind.validate(s2)?;
        Ok(self.kind.eval(s1, s2))
    }

    pub fn contains(&self, s1: f64, s2: f64) -> bool {
        let [[a0, a1], [b0, b1]] = self.domain;
        (a0..=a1).contains(&s1) && (b0..=b1).contains(&s2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FundamentalForms {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub l: f64,
    pub m: f64,
    pub n: f64,
    pub normal: [f64; 3],
    /// Largest norm among the second derivatives of the embedding; the scale
    /// on which `L`, `M`, `N` are resolved.
    pub second_derivative_norm: f64,
}

impl FundamentalForms {
    fn from_derivatives(
        d1: Vec3<f64>,
        d2: Vec3<f64>,
        d11: Vec3<f64>,
        d12: Vec3<f64>,
        d22: Vec3<f64>,
        orientation: f64,
        at: (f64, f64),
    ) -> Result<Self> {
        let (e, f, g) = (dot(&d1, &d1), dot(&d1, &d2), dot(&d2, &d2));
        let gram = e * g - f * f;
        if !(gram > 1e-14 * e * g) {
            return Err(Error::ImmersionFailure { s1: at.0, s2: at.1, gram });
        }
        let c = cross(&d1, &d2);
        let normal = linalg::scale(orientation / norm(&c), &c);
        let second_derivative_norm = norm(&d11).max(norm(&d12)).max(norm(&d22));
        Ok(Self { e, f, g, l: dot(&d11, &normal), m: dot(&d12, &normal), n: dot(&d22, &normal), normal, second_derivative_norm })
    }

    /// `(K, H)` from the general formulas.
    pub fn curvatures(&self) -> (f64, f64) {
        let gram = self.e * self.g - self.f * self.f;
        let k = (self.l * self.n - self.m * self.m) / gram;
        let h = (self.e * self.n - 2.0 * self.f * self.m + self.g * self.l) / (2.0 * gram);
        (k, h)
    }
}

/// Fundamental forms with derivatives taken exactly by nested dual numbers.
pub fn fundamental_forms(patch: &SurfacePatch, s1: f64, s2: f64) -> Result<FundamentalForms> {
    patch.kind.validate(s2)?;
    let first = |a: usize| -> Vec3<f64> {
        let (x, y) = if a == 0 { (Dual::variable(s1), Dual::constant(s2)) } else { (Dual::constant(s1), Dual::variable(s2)) };
        patch.kind.eval(x, y).map(|d| d.eps)
    };
    let second = |a: usize, b: usize| -> Vec3<f64> {
        let mk = |i: usize, val: f64| {
            let mut d = Dual::constant(Dual::constant(val));
            if i == a {
                d.re.eps = 1.0;
            }
            if i == b {
                d.eps.re = 1.0;
            }
            d
        };
        patch.kind.eval(mk(0, s1), mk(1, s2)).map(|d| d.eps.eps)
    };
    FundamentalForms::from_derivatives(first(0), first(1), second(0, 0), second(0, 1), second(1, 1), patch.orientation, (s1, s2))
}

/// Fundamental forms from central differences with step `h`.
pub fn fundamental_forms_fd(patch: &SurfacePatch, s1: f64, s2: f64, h: f64) -> Result<FundamentalForms> {
    patch.kind.validate(s2 - h)?;
    let p = |a: f64, b: f64| patch.kind.eval(a, b);
    let diff = |u: Vec3<f64>, v: Vec3<f64>, s: f64| linalg::scale(1.0 / s, &linalg::sub(&u, &v));
    let c = p(s1, s2);
    let d1 = diff(p(s1 + h, s2), p(s1 - h, s2), 2.0 * h);
    let d2 = diff(p(s1, s2 + h), p(s1, s2 - h), 2.0 * h);
    let d11 = linalg::scale(1.0 / (h * h), &linalg::add(&linalg::sub(&p(s1 + h, s2), &linalg::scale(2.0, &c)), &p(s1 - h, s2)));
    let d22 = linalg::scale(1.0 / (h * h), &linalg::add(&linalg::sub(&p(s1, s2 + h), &linalg::scale(2.0, &c)), &p(s1, s2 - h)));
    let d12 = linalg::scale(
        1.0 / (4.0 * h * h),
        &linalg::sub(&linalg::sub(&p(s1 + h, s2 + h), &p(s1 + h, s2 - h)), &linalg::sub(&p(s1 - h, s2 + h), &p(s1 - h, s2 - h))),
    );
    FundamentalForms::from_derivatives(d1, d2, d11, d12, d22, patch.orientation, (s1, s2))
}

/// Deviation of finite-difference forms from the exact ones at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct FormAgreement {
    /// `max(|ΔE|/E, |ΔF|/√(EG), |ΔG|/G)`.
    pub first: f64,
    /// `max(|ΔL|, |ΔM|, |ΔN|)` over the norm of the second derivatives.
    pub second: f64,
    /// `|ΔL| / |L|`, dominated by cancellation where `|L|` is small against
    /// the second derivatives.
    pub second_pointwise: f64,
}

impl FormAgreement {
    pub fn max(self, other: Self) -> Self {
        Self {
            first: self.first.max(other.first),
            second: self.second.max(other.second),
            second_pointwise: self.second_pointwise.max(other.second_pointwise),
        }
    }
}

/// Compares [`fundamental_forms`] with [`fundamental_forms_fd`] at step `h`.
pub fn form_agreement(patch: &SurfacePatch, s1: f64, s2: f64, h: f64) -> Result<FormAgreement> {
    let a = fundamental_forms(patch, s1, s2)?;
    let b = fundamental_forms_fd(patch, s1, s2, h)?;
    let first = ((a.e - b.e).abs() / a.e).max((a.f - b.f).abs() / (a.e * a.g).sqrt()).max((a.g - b.g).abs() / a.g);
    let second = [(a.l, b.l), (a.m, b.m), (a.n, b.n)].iter().fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / a.second_derivative_norm.max(f64::MIN_POSITIVE);
    let second_pointwise = if a.l == 0.0 { (a.l - b.l).abs() } else { (a.l - b.l).abs() / a.l.abs() };
    Ok(FormAgreement { first, second, second_pointwise })
}

/// `(K, H)` of a patch at a point.
pub fn curvatures(patch: &SurfacePatch, s1: f64, s2: f64) -> Result<(f64, f64)> {
    Ok(fundamental_forms(patch, s1, s2)?.curvatures())
}

/// `L` on `Φ(t3)` in closed form, with the normal oriented by `∂t1 × ∂t2`:
/// `−24 e^{6t1+t3} / √(9e^{8t1} + e^{2t3})`.
pub fn phi_second_form_l(t1: f64, t3: f64) -> f64 {
    -24.0 * (6.0 * t1 + t3).exp() / (9.0 * (8.0 * t1).exp() + (2.0 * t3).exp()).sqrt()
}

/// The reference coefficient `48 e^{t3} e^{6t1} / √(9e^{8t1} + e^{2t3})`.
pub fn phi_second_form_l_reference(t1: f64, t3: f64) -> f64 {
    48.0 * t3.exp() * (6.0 * t1).exp() / (9.0 * (8.0 * t1).exp() + (2.0 * t3).exp()).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct FoliationReport {
    pub disjoint: bool,
    /// Smallest distance between sample points of different leaves.
    pub min_separation: f64,
    /// Largest `|t3(recovered) − t3(leaf)|` over all samples.
    pub leaf_recovery_error: f64,
    /// Largest `|f(f⁻¹(v)) − v|` over random states.
    pub coverage_error: f64,
    /// Pair of colliding points, if any.
    pub witness: Option<([f64; 3], [f64; 3])>,
}

/// Which family of leaves is checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeafKind {
    Phi,
    Sigma,
}

/// Samples every leaf, checks that no two leaves meet, and that the chart
/// inverts on random states.
pub fn foliation_check(t3_values: &[f64], kind: LeafKind, samples: usize, seed: u64) -> Result<FoliationReport> {
    for (i, a) in t3_values.iter().enumerate() {
        if t3_values[i + 1..].contains(a) {
            return Err(Error::InvalidParameter(format!("leaf t3 = {a} appears twice")));
        }
    }
    let mut sampler = StateSampler::new(seed);
    let mut points: Vec<(usize, Vec3<f64>)> = Vec::new();
    let mut recovery = 0.0f64;
    for (leaf, &t3) in t3_values.iter().enumerate() {
        let patch = match kind {
            LeafKind::Phi => phi_surface(t3),
            LeafKind::Sigma => sigma_surface(t3),
        };
        for _ in 0..samples {
            let s1 = sampler.uniform(1e-6, patch.domain[0][1]);
            let s2 = sampler.uniform(1e-6, patch.domain[1][1]);
            let q = patch.point(s1, s2)?;
            let state = match kind {
                LeafKind::Phi => q,
                LeafKind::Sigma => q.map(f64::exp),
            };
            let t = region_inverse(&StateVector { rho: state[0], p: state[1], u: state[2] });
            recovery = recovery.max((t[2] - t3).abs());
            points.push((leaf, q));
        }
    }
    let mut min_separation = f64::INFINITY;
    let mut witness = None;
    for (i, (la, a)) in points.iter().enumerate() {
        for (lb, b) in &points[i + 1..] {
            if la == lb {
                continue;
            }
            let d = norm(&linalg::sub(a, b));
            if d < min_separation {
                min_separation = d;
                if d <= 1e-10 {
                    witness = Some((*a, *b));
                }
            }
        }
    }
    let mut coverage = 0.0f64;
    for _ in 0..samples.max(1) {
        let v: StateVector<f64> = sampler.state();
        let t = region_inverse(&v);
        let back = region_map(t[0], t[1], t[2]);
        coverage = coverage.max(norm(&linalg::sub(&back.to_array(), &v.to_array())) / norm(&v.to_array()));
    }
    if let Some((a, b)) = witness {
        return Err(Error::LeafCollision(format!("{a:?} and {b:?}")));
    }
    Ok(FoliationReport {
        disjoint: witness.is_none() && recovery < 1e-8,
        min_separation,
        leaf_recovery_error: recovery,
        coverage_error: coverage,
        witness,
    })
}

/// Points of a patch on an `n1 × n2` grid over its domain, as
/// `(s1, s2, point)`. The open lower edges are nudged inside.
pub fn sample_patch(patch: &SurfacePatch, n1: usize, n2: usize) -> Result<Vec<(f64, f64, Vec3<f64>)>> {
    let [[a0, a1], [b0, b1]] = patch.domain;
    let lerp = |lo: f64, hi: f64, i: usize, n: usize| {
        let s = lo + (hi - lo) * (i as f64 + 1.0) / n as f64;
        s.max(lo + 1e-9)
    };
    let mut out = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            let (s1, s2) = (lerp(a0, a1, i, n1), lerp(b0, b1, j, n2));
            out.push((s1, s2, patch.point(s1, s2)?));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_map_values() {
        assert_eq!(region_map(0.0, 0.0, 0.0).to_f64(), [1.0, 1.0, 0.0]);
        let v = region_map(1.0f64, 0.0, 0.0);
        assert!((v.rho - 2f64.exp()).abs() < 1e-12 && (v.p - 6f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn determinant_closed_form_matches_matrix() {
        for (t1, t3) in [(0.0f64, 0.0f64), (0.3, -0.2), (-0.5, 1.0)] {
            let d = linalg::det3(&region_map_jacobian(t1, 0.4, t3));
            assert!((d.abs() - region_map_determinant(t1, t3)).abs() < 1e-10 * d.abs());
        }
        assert!((region_map_determinant(0.0f64, 0.0) - 12.0 * 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn inverse_recovers_parameters() {
        let v = StateVector::new(0.7f64.exp(), 1.8f64.exp(), 2.0 * 3f64.sqrt() * 0.4).unwrap();
        let t = region_inverse(&v);
        for (got, want) in t.iter().zip([0.3, 0.4, 0.1]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_point_and_tangents() {
        let p = phi_surface(0.0);
        let q = p.point(0.0, 1.0).unwrap();
        assert!((q[0] - 1.0).abs() < 1e-15 && (q[1] - 1.0).abs() < 1e-15 && (q[2] - 2.0 * 3f64.sqrt()).abs() < 1e-15);
        let f = fundamental_forms(&p, 0.0, 1.0).unwrap();
        // tangents (2, 6, 0) and (0, 0, 2√3)
        assert!((f.e - 40.0).abs() < 1e-12 && f.f.abs() < 1e-15 && (f.g - 12.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_rejects_nonpositive_t2() {
        assert!(sigma_surface(0.0).point(0.5, 0.0).is_err());
        assert!(fundamental_forms(&sigma_surface(0.0), 0.5, -1.0).is_err());
    }

    #[test]
    fn phi_second_form() {
        for t3 in [-0.5, 0.0, 0.7] {
            for t1 in [0.0, 0.4, 1.3] {
                let f = fundamental_forms(&phi_surface(t3), t1, 0.9).unwrap();
                assert!(f.m.abs() < 1e-10 && f.n.abs() < 1e-10);
                assert!((f.l - phi_second_form_l(t1, t3)).abs() < 1e-10 * f.l.abs().max(1.0));
                let (k, h) = f.curvatures();
                assert!(k.abs() < 1e-10);
                assert!((h - f.l / (2.0 * f.e)).abs() < 1e-12);
            }
        }
        assert!((phi_second_form_l(0.0, 0.0).abs() - 24.0 / 10f64.sqrt()).abs() < 1e-12);
        assert!((phi_second_form_l_reference(0.0, 0.0) / phi_second_form_l(0.0, 0.0).abs() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn plane_and_sphere_self_tests() {
        let plane = SurfacePatch {
            kind: SurfaceKind::Plane { origin: [1.0, 2.0, 3.0], a: [1.0, 1.0, 0.0], b: [0.0, 1.0, 2.0] },
            domain: DEFAULT_DOMAIN,
            orientation: 1.0,
        };
        let f = fundamental_forms(&plane, 0.3, 0.8).unwrap();
        assert_eq!((f.l, f.m, f.n), (0.0, 0.0, 0.0));
        let sphere = SurfacePatch { kind: SurfaceKind::SphereOctant, domain: [[0.1, 1.5], [0.0, 1.5]], orientation: 1.0 };
        let (k, h) = curvatures(&sphere, 0.7, 0.4).unwrap();
        assert!((k - 1.0).abs() < 1e-8 && (h.abs() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn immersion_failure_at_sphere_pole() {
        let sphere = SurfacePatch { kind: SurfaceKind::SphereOctant, domain: [[0.0, 1.5], [0.0, 1.5]], orientation: 1.0 };
        assert!(matches!(fundamental_forms(&sphere, 0.0, 0.3), Err(Error::ImmersionFailure { .. })));
    }

    #[test]
    fn exp_of_sigma_is_phi() {
        let mut s = StateSampler::new(3);
        for _ in 0..100 {
            let (t1, t2, t3) = (s.uniform(0.0, 2.0), s.uniform(1e-3, 2.0), s.uniform(-1.0, 1.0));
            let a = sigma_surface(t3).point(t1, t2).unwrap().map(f64::exp);
            let b = phi_surface(t3).point(t1, t2).unwrap();
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() <= 1e-12 * b[k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn leaves_are_disjoint_and_duplicates_rejected() {
        let r = foliation_check(&[0.0, 0.5, 1.0], LeafKind::Phi, 100, 1).unwrap();
        assert!(r.disjoint && r.coverage_error < 1e-12);
        assert!(foliation_check(&[0.5, 0.5], LeafKind::Phi, 10, 1).is_err());
        assert!(foliation_check(&[0.0, 0.3], LeafKind::Sigma, 50, 2).unwrap().disjoint);
    }
}
