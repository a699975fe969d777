//! Small explicit integrators for autonomous and non-autonomous systems.

use crate::scalar::Real;
use crate::{Error, Result};

fn lin<T: Real, const N: usize>(y: &[T; N], terms: &[(T, &[T; N])]) -> [T; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += *c * k[i];
        }
    }
    out
}

/// Classical fixed-step RK4 from `t0` to `t1` in `steps` equal steps.
///
/// The result is a smooth function of `y0`, `t0` and `t1`, which matters
/// when it is later differentiated numerically.
pub fn rk4<T: Real, const N: usize>(f: impl Fn(T, &[T; N]) -> [T; N], t0: T, y0: [T; N], t1: T, steps: usize) -> [T; N] {
    let h = (t1 - t0) / T::from_usize(steps.max(1)).unwrap();
    let half = T::lit(0.5);
    let mut y = y0;
    let mut t = t0;
    for _ in 0..steps.max(1) {
        let k1 = f(t, &y);
        let k2 = f(t + half * h, &lin(&y, &[(half * h, &k1)]));
        let k3 = f(t + half * h, &lin(&y, &[(half * h, &k2)]));
        let k4 = f(t + h, &lin(&y, &[(h, &k3)]));
        let sixth = h / T::lit(6.0);
        y = lin(&y, &[(sixth, &k1), (sixth + sixth, &k2), (sixth + sixth, &k3), (sixth, &k4)]);
        t += h;
    }
    y
}

/// Tolerances and limits for [`dopri45`].
#[derive(Clone, Copy, Debug)]
pub struct Tolerance<T> {
    pub rel: T,
    pub abs: T,
    pub max_steps: usize,
}

impl<T: Real> Default for Tolerance<T> {
    fn default() -> Self {
        Self { rel: T::lit(1e-10), abs: T::lit(1e-12), max_steps: 200_000 }
    }
}

/// Adaptive Dormand–Prince 5(4) integration from `t0` to `t1`.
///
/// `f` may fail (for instance when the trajectory leaves the domain); the
/// failure is propagated.
pub fn dopri45<T: Real, const N: usize>(
    f: impl Fn(T, &[T; N]) -> Result<[T; N]>,
    t0: T,
    y0: [T; N],
    t1: T,
    tol: Tolerance<T>,
) -> Result<[T; N]> {
    if t0 == t1 {
        return Ok(y0);
    }
    let c = |x: f64| T::lit(x);
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut h = span.min(c(0.1) * T::one().max(span)) * c(0.1) * dir;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    for _ in 0..tol.max_steps {
        if (t1 - t) * dir <= T::zero() {
            return Ok(y);
        }
        if (t + h - t1) * dir > T::zero() {
            h = t1 - t;
        }
        let k2 = f(t + c(1.0 / 5.0) * h, &lin(&y, &[(c(1.0 / 5.0) * h, &k1)]))?;
        let k3 = f(t + c(3.0 / 10.0) * h, &lin(&y, &[(c(3.0 / 40.0) * h, &k1), (c(9.0 / 40.0) * h, &k2)]))?;
        let k4 = f(t + c(4.0 / 5.0) * h, &lin(&y, &[(c(44.0 / 45.0) * h, &k1), (c(-56.0 / 15.0) * h, &k2), (c(32.0 / 9.0) * h, &k3)]))?;
        let k5 = f(
            t + c(8.0 / 9.0) * h,
            &lin(
                &y,
                &[
                    (c(19372.0 / 6561.0) * h, &k1),
                    (c(-25360.0 / 2187.0) * h, &k2),
                    (c(64448.0 / 6561.0) * h, &k3),
                    (c(-212.0 / 729.0) * h, &k4),
                ],
            ),
        )?;
        let k6 = f(
            t + h,
            &lin(
                &y,
                &[
                    (c(9017.0 / 3168.0) * h, &k1),
                    (c(-355.0 / 33.0) * h, &k2),
                    (c(46732.0 / 5247.0) * h, &k3),
                    (c(49.0 / 176.0) * h, &k4),
                    (c(-5103.0 / 18656.0) * h, &k5),
                ],
            ),
        )?;
        let y5 = lin(
            &y,
            &[
                (c(35.0 / 384.0) * h, &k1),
                (c(500.0 / 1113.0) * h, &k3),
                (c(125.0 / 192.0) * h, &k4),
                (c(-2187.0 / 6784.0) * h, &k5),
                (c(11.0 / 84.0) * h, &k6),
            ],
        );
        let k7 = f(t + h, &y5)?;
        let e = [c(71.0 / 57600.0), c(0.0), c(-71.0 / 16695.0), c(71.0 / 1920.0), c(-17253.0 / 339200.0), c(22.0 / 525.0), c(-1.0 / 40.0)];
        let ks = [&k1, &k2, &k3, &k4, &k5, &k6, &k7];
        let mut err = T::zero();
        for i in 0..N {
            let mut d = T::zero();
            for (ej, kj) in e.iter().zip(ks.iter()) {
                d += *ej * kj[i];
            }
            let sc = tol.abs + tol.rel * y[i].abs().max(y5[i].abs());
            let r = (d * h) / sc;
            err = err.max(r.abs());
        }
        if !err.is_finite() {
            h *= c(0.25);
            continue;
        }
        if err <= T::one() {
            t += h;
            y = y5;
            k1 = k7;
        }
        let factor = if err.is_zero() { c(5.0) } else { (c(0.9) * err.powf(c(-0.2))).max(c(0.2)).min(c(5.0)) };
        h *= factor;
        if h.abs() < T::epsilon() * T::one().max(t.abs()) * c(16.0) {
            return Err(Error::Integration(format!("step size underflow at t = {t}")));
        }
    }
    Err(Error::Integration(format!("step limit {} exceeded", tol.max_steps)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_exponential() {
        let y = rk4(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 1.0, 100);
        assert!((y[0] - 1f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn dopri_rotation_and_reverse() {
        let f = |_t: f64, y: &[f64; 2]| Ok([-y[1], y[0]]);
        let y = dopri45(f, 0.0, [1.0, 0.0], std::f64::consts::PI, Tolerance::default()).unwrap();
        assert!((y[0] + 1.0).abs() < 1e-9 && y[1].abs() < 1e-9);
        let back = dopri45(f, std::f64::consts::PI, y, 0.0, Tolerance::default()).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dopri_propagates_failure() {
        let f = |t: f64, y: &[f64; 1]| if t > 0.5 { Err(Error::Integration("stop".into())) } else { Ok([y[0]]) };
        assert!(dopri45(f, 0.0, [1.0], 1.0, Tolerance::default()).is_err());
    }
}
