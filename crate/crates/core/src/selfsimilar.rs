//! Exact and semi-exact solutions of u_t = lap(u^m).
//!
//! Three families serve as initial/boundary data and as solver oracles:
//! the self-similar solutions U_lambda built from a solved profile, the
//! shrinking Barenblatt family B_k with its closed form, and the static
//! singular solution A |x|^{-(n-2)/m} (whose m-th power is harmonic).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exponents::ExponentSet;
use crate::profile::SelfSimilarProfile;

/// A positive radial space-time field, the common currency between the
/// oracle solutions and the simulator's boundary data.
pub trait RadialSpaceTimeField: Send + Sync {
    fn eval(&self, r: f64, t: f64) -> f64;
    fn label(&self) -> String;
}

/// Self-similar solution U_lambda(x,t) = t^{-alpha} f_lambda(t^{-beta} x).
#[derive(Debug, Clone)]
pub struct SelfSimilarSolution {
    pub profile: SelfSimilarProfile,
    pub exps: ExponentSet,
    pub lambda: f64,
}

impl SelfSimilarSolution {
    pub fn new(profile: SelfSimilarProfile) -> Self {
        let exps = profile.exps;
        let lambda = profile.lambda;
        Self { profile, exps, lambda }
    }

    /// U_lambda at radius `r` and time `t`; checks the domain.
    pub fn eval_u(&self, r: f64, t: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("x_radius > 0 violated: {r}")));
        }
        if !(t > 0.0) {
            return Err(Error::Domain(format!("t > 0 violated: {t}")));
        }
        Ok(self.eval_unchecked(r, t))
    }

    fn eval_unchecked(&self, r: f64, t: f64) -> f64 {
        let e = &self.exps;
        t.powf(-e.alpha) * self.profile.eval_f_lambda(t.powf(-e.beta) * r)
    }

    /// The profile itself, U_lambda(., 1).
    pub fn eval_f(&self, r: f64) -> f64 {
        self.profile.eval_f_lambda(r)
    }
}

impl RadialSpaceTimeField for SelfSimilarSolution {
    fn eval(&self, r: f64, t: f64) -> f64 {
        self.eval_unchecked(r, t)
    }

    fn label(&self) -> String {
        format!("U_lambda(lambda={:.6e}, A={:.6e})", self.lambda, self.profile.a)
    }
}

/// A solved profile viewed as a tau-independent field f_lambda(y): the
/// fixed point of the rescaled flow, used as its boundary data.
#[derive(Debug, Clone)]
pub struct ProfileField {
    pub profile: SelfSimilarProfile,
}

impl RadialSpaceTimeField for ProfileField {
    fn eval(&self, r: f64, _t: f64) -> f64 {
        self.profile.eval_f_lambda(r)
    }

    fn label(&self) -> String {
        format!("f_lambda(lambda={:.6e})", self.profile.lambda)
    }
}

/// The shrinking Barenblatt solution
/// B_k(x,t) = (C*(T-t) / (|x|^2 + k (T-t)^{2 sigma*}))^{1/(1-m)},
/// C* = 2m(n-2-nm)/(1-m), sigma* = -1/(n-2-nm), which vanishes at t = T.
#[derive(Debug, Clone, Copy)]
pub struct BarenblattSolution {
    pub t_extinction: f64,
    pub k: f64,
    pub n: u32,
    pub m: f64,
    pub c_star: f64,
    pub sigma_star: f64,
}

impl BarenblattSolution {
    pub fn new(n: u32, m: f64, t_extinction: f64, k: f64) -> Result<Self> {
        let nf = f64::from(n);
        if n < 3 || !(m > 0.0 && m < (nf - 2.0) / nf) {
            return Err(Error::Range(format!(
                "Barenblatt family needs n >= 3 and 0 < m < (n-2)/n, got n={n}, m={m}"
            )));
        }
        if !(t_extinction > 0.0) || !(k >= 0.0) {
            return Err(Error::Range(format!(
                "Barenblatt family needs T > 0 and k >= 0, got T={t_extinction}, k={k}"
            )));
        }
        let c_star = 2.0 * m * (nf - 2.0 - nf * m) / (1.0 - m);
        let sigma_star = -1.0 / (nf - 2.0 - nf * m);
        Ok(Self {
            t_extinction,
            k,
            n,
            m,
            c_star,
            sigma_star,
        })
    }

    /// Closed-form value; errors outside 0 < t < T (and at r = 0 for k = 0).
    pub fn eval_barenblatt(&self, r: f64, t: f64) -> Result<f64> {
        if !(t > 0.0 && t < self.t_extinction) {
            return Err(Error::Domain(format!(
                "Barenblatt time window (0, {}) violated: t = {t}",
                self.t_extinction
            )));
        }
        if r < 0.0 || (r == 0.0 && self.k == 0.0) {
            return Err(Error::Domain(format!("radius outside domain: r = {r}")));
        }
        Ok(self.eval_unchecked(r, t))
    }

    fn eval_unchecked(&self, r: f64, t: f64) -> f64 {
        let dt = self.t_extinction - t;
        let denom = r * r + self.k * dt.powf(2.0 * self.sigma_star);
        (self.c_star * dt / denom).powf(1.0 / (1.0 - self.m))
    }
}

impl RadialSpaceTimeField for BarenblattSolution {
    fn eval(&self, r: f64, t: f64) -> f64 {
        self.eval_unchecked(r, t)
    }

    fn label(&self) -> String {
        format!("barenblatt(T={}, k={})", self.t_extinction, self.k)
    }
}

/// The time-independent singular solution A |x|^{-(n-2)/m}.
#[derive(Debug, Clone, Copy)]
pub struct StaticSingular {
    pub a: f64,
    pub n: u32,
    pub m: f64,
}

impl StaticSingular {
    pub fn new(a: f64, n: u32, m: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::Range(format!("A > 0 violated: A = {a}")));
        }
        Ok(Self { a, n, m })
    }

    pub fn eval_static(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("x_radius > 0 violated: {r}")));
        }
        Ok(self.value(r))
    }

    fn value(&self, r: f64) -> f64 {
        self.a * r.powf(-(f64::from(self.n) - 2.0) / self.m)
    }
}

impl RadialSpaceTimeField for StaticSingular {
    fn eval(&self, r: f64, _t: f64) -> f64 {
        self.value(r)
    }

    fn label(&self) -> String {
        format!("static_singular(A={})", self.a)
    }
}

/// Shared handle used wherever fields cross module boundaries.
pub type FieldHandle = Arc<dyn RadialSpaceTimeField>;

/// Centered finite-difference residual of the heat operator,
/// u_t - (u^m)'' - (n-1)/r (u^m)', with steps relative to the evaluation
/// point (dr = h_space * r, dt = h_time * t). Second order in both steps;
/// used to certify oracles and solver output.
pub fn residual_heat_operator<F: Fn(f64, f64) -> f64>(
    u: F,
    n: u32,
    m: f64,
    r: f64,
    t: f64,
    h_space: f64,
    h_time: f64,
) -> f64 {
    let dr = h_space * r;
    let dt = h_time * t;
    let ut = (u(r, t + dt) - u(r, t - dt)) / (2.0 * dt);
    let vm = |rr: f64| u(rr, t).powf(m);
    let (v_lo, v_mid, v_hi) = (vm(r - dr), vm(r), vm(r + dr));
    let d2 = (v_hi - 2.0 * v_mid + v_lo) / (dr * dr);
    let d1 = (v_hi - v_lo) / (2.0 * dr);
    ut - d2 - (f64::from(n) - 1.0) / r * d1
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn barenblatt_constants_for_n3_m02() {
        let b = BarenblattSolution::new(3, 0.2, 2.0, 1.0).unwrap();
        assert_relative_eq!(b.c_star, 0.2, max_relative = 1e-14);
        assert_relative_eq!(b.sigma_star, -2.5, max_relative = 1e-14);
    }

    #[test]
    fn barenblatt_k0_closed_form() {
        let t_ext = 2.0;
        let b = BarenblattSolution::new(3, 0.2, t_ext, 0.0).unwrap();
        let m = 0.2;
        for (r, t) in [(0.5, 0.1), (1.0, 1.0), (3.0, 1.9)] {
            let expected = (b.c_star * (t_ext - t) / (r * r)).powf(1.0 / (1.0 - m));
            assert_relative_eq!(b.eval_barenblatt(r, t).unwrap(), expected, max_relative = 1e-14);
        }
        // initial value (C* T)^{1/(1-m)} |x|^{-2/(1-m)} as t -> 0
        let r = 0.7f64;
        let v = b.eval_barenblatt(r, 1e-12).unwrap();
        let expected = (b.c_star * t_ext).powf(1.25) * r.powf(-2.5);
        assert_relative_eq!(v, expected, max_relative = 1e-9);
    }

    #[test]
    fn barenblatt_vanishes_at_extinction() {
        let b = BarenblattSolution::new(3, 0.2, 2.0, 1.0).unwrap();
        let near = b.eval_barenblatt(1.0, 2.0 - 1e-9).unwrap();
        assert!(near < 1e-10, "value near extinction should vanish, got {near}");
        assert!(b.eval_barenblatt(1.0, 2.0).is_err());
        assert!(b.eval_barenblatt(1.0, 2.5).is_err());
        assert!(b.eval_barenblatt(1.0, 0.0).is_err());
    }

    #[test]
    fn barenblatt_decreasing_in_k() {
        let b1 = BarenblattSolution::new(3, 0.2, 2.0, 0.5).unwrap();
        let b2 = BarenblattSolution::new(3, 0.2, 2.0, 1.5).unwrap();
        for (r, t) in [(0.1, 0.5), (1.0, 1.0), (10.0, 1.5)] {
            assert!(b2.eval(r, t) < b1.eval(r, t));
        }
    }

    #[test]
    fn static_singular_residual_is_roundoff() {
        // lap of (A r^{-(n-2)/m})^m = A^m lap r^{-(n-2)} = 0 and u_t = 0, so
        // the centered residual is zero up to cancellation noise at any step
        let s = StaticSingular::new(1.3, 3, 0.2).unwrap();
        let f = |r: f64, t: f64| s.eval(r, t);
        for h in [1e-2, 5e-3, 2.5e-3] {
            let res = residual_heat_operator(f, 3, 0.2, 1.5, 1.0, h, h);
            assert!(res.abs() < 1e-9, "residual {res:.3e} at h = {h}");
        }
    }

    #[test]
    fn barenblatt_residual_second_order() {
        let b = BarenblattSolution::new(3, 0.2, 2.0, 1.0).unwrap();
        let f = |r: f64, t: f64| b.eval(r, t);
        let scale = b.eval(1.0, 1.0);
        let r0 = residual_heat_operator(f, 3, 0.2, 1.0, 1.0, 1e-2, 1e-2) / scale;
        let r1 = residual_heat_operator(f, 3, 0.2, 1.0, 1.0, 5e-3, 5e-3) / scale;
        let order = (r0.abs() / r1.abs()).log2();
        assert!(order > 1.9 && order < 2.1, "order {order} (r0={r0:.3e}, r1={r1:.3e})");
        assert!(r1.abs() < 1e-2);
    }

    #[test]
    fn static_singular_rejects_bad_input() {
        let s = StaticSingular::new(1.0, 3, 0.2).unwrap();
        assert!(s.eval_static(0.0).is_err());
        assert!(StaticSingular::new(0.0, 3, 0.2).is_err());
    }
}
