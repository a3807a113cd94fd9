//! Construction of the singular self-similar profile.
//!
//! The radial profile f of U(x,t) = t^{-alpha} f(t^{-beta} x) solves
//!
//! ```text
//! (f^m)'' + (n-1)/r (f^m)' + alpha f + beta r f' = 0,   f > 0 on (0, inf)
//! ```
//!
//! with r^gamma f -> A at the origin and r^{(n-2)/m} f -> D at infinity.
//! The origin is a genuine singularity, so the profile is built through the
//! inversion g(r) = r^{-(n-2)/m} f(1/r), which turns the problem into a
//! regular initial value problem at r = 0:
//!
//! ```text
//! (g^m)'' + (n-1)/r (g^m)' + r^{sigma-2} (alpha~ g + beta~ r g') = 0,
//! g(0) = eta,   sigma = (n-2-nm)/m.
//! ```
//!
//! The pipeline is: a fixed-point solve of the integral form of this
//! equation on a small interval [0, eps]; explicit continuation of the ODE
//! in log radius out to the far field; extraction of the limit
//! A = lim r^{alpha~/beta~} g(r) by plateau extrapolation; inversion back
//! to f; and power-of-lambda rescaling to a requested origin constant.

use crate::error::{Error, Result};
use crate::exponents::{ExponentSet, OriginRegime};
use crate::interp::{Pchip, PowerLawCurve};
use crate::ode::{self, OdeOptions};
use crate::report::DiagnosticsReport;

/// Which function a curve samples: the inverted profile or the profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileVariable {
    G,
    F,
}

/// Radial samples of one positive function together with its derivative.
#[derive(Debug, Clone)]
pub struct ProfileCurve {
    pub variable: ProfileVariable,
    /// Strictly increasing positive radii, log-uniform.
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// dg/dr or df/dr at the radii.
    pub derivs: Vec<f64>,
    pub exps: ExponentSet,
    /// g(0) for G-curves.
    pub eta: Option<f64>,
}

impl ProfileCurve {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.radii[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    pub fn span_decades(&self) -> f64 {
        (self.r_max() / self.r_min()).log10()
    }

    /// Log spacing between consecutive samples.
    pub fn ds(&self) -> f64 {
        (self.radii[1] / self.radii[0]).ln()
    }
}

/// Leading origin expansion g(r) ~ eta - c1 r^sigma of the inverted profile.
#[derive(Debug, Clone, Copy)]
pub struct OriginExpansion {
    pub c1: f64,
    pub sigma: f64,
}

impl OriginExpansion {
    pub fn for_eta(e: &ExponentSet, eta: f64) -> Self {
        let nf = e.nf();
        let c1 = e.alpha_tilde * eta.powf(2.0 - e.m) * e.m
            / ((nf - 2.0 - 2.0 * e.m) * (nf - 2.0 - nf * e.m));
        Self { c1, sigma: e.sigma() }
    }

    pub fn eval(&self, eta: f64, r: f64) -> f64 {
        eta - self.c1 * r.powf(self.sigma)
    }

    pub fn eval_deriv(&self, r: f64) -> f64 {
        -self.c1 * self.sigma * r.powf(self.sigma - 1.0)
    }
}

/// Output of the local fixed-point stage used to start the continuation.
#[derive(Debug, Clone)]
pub struct LocalSeed {
    pub eta: f64,
    /// zeta = alpha~ eta^{2-m} / (n-2-2m); the Hoelder-regime derivative
    /// limit is lim r^{delta1} g' = -zeta.
    pub zeta: Option<f64>,
    /// Matching radius actually used (after auto-shrinking).
    pub eps: f64,
    pub expansion: OriginExpansion,
    /// g(eps) of the converged fixed point.
    pub g_eps: f64,
    /// g'(eps) of the converged fixed point.
    pub h_eps: f64,
}

/// Initial iterate of the Picard map, matching the two centers used in the
/// contraction argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PicardStart {
    /// (g, h) = (eta, 0)
    Rest,
    /// (g, h) = (eta, -zeta r^{-delta1})
    Slope,
}

#[derive(Debug, Clone)]
pub struct LocalOptions {
    /// Matching radius; `None` picks min(1e-3, half the radius at which the
    /// leading expansion would eat a quarter of eta) and then auto-shrinks.
    pub eps: Option<f64>,
    /// Sup-norm tolerance on successive Picard iterates.
    pub tol: f64,
    pub max_iter: usize,
    /// Cells of the uniform grid in the variable w = r^sigma.
    pub cells: usize,
    pub start: PicardStart,
    /// Halvings of eps allowed before giving up.
    pub max_shrink: usize,
    /// Decades below eps covered by the returned curve.
    pub out_decades: f64,
    pub out_points_per_decade: usize,
}

impl Default for LocalOptions {
    fn default() -> Self {
        Self {
            eps: None,
            tol: 1e-13,
            max_iter: 200,
            cells: 4096,
            start: PicardStart::Rest,
            max_shrink: 60,
            out_decades: 3.0,
            out_points_per_decade: 256,
        }
    }
}

/// Cumulative integrals of w^p * (piecewise-linear F) over a uniform
/// w-grid, exact in the weight. `wpow1`/`wpow2` are the antiderivative
/// tables w^{p+1}/(p+1) and w^{p+2}/(p+2) at the nodes.
fn weighted_cumint(w: &[f64], f: &[f64], wpow1: &[f64], wpow2: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(w.len());
    out.push(0.0);
    let mut acc = 0.0;
    for i in 0..w.len() - 1 {
        let (w0, w1) = (w[i], w[i + 1]);
        let slope = (f[i + 1] - f[i]) / (w1 - w0);
        let i1 = wpow1[i + 1] - wpow1[i];
        let i2 = wpow2[i + 1] - wpow2[i];
        acc += f[i] * i1 + slope * (i2 - w0 * i1);
        out.push(acc);
    }
    out
}

fn power_table(w: &[f64], p: f64) -> (Vec<f64>, Vec<f64>) {
    // antiderivative tables w^{p+1}/(p+1) and w^{p+2}/(p+2)
    let p1 = p + 1.0;
    let p2 = p + 2.0;
    let t1 = w.iter().map(|&x| x.powf(p1) / p1).collect();
    let t2 = w.iter().map(|&x| x.powf(p2) / p2).collect();
    (t1, t2)
}

struct PicardGrid {
    w: Vec<f64>,
    /// antiderivative tables for weights w^0, w^a, w^{a+1}
    t0: (Vec<f64>, Vec<f64>),
    ta: (Vec<f64>, Vec<f64>),
    ta1: (Vec<f64>, Vec<f64>),
}

impl PicardGrid {
    fn new(eps: f64, sigma: f64, a: f64, cells: usize) -> Self {
        let w_max = eps.powf(sigma);
        let w: Vec<f64> = (0..=cells).map(|j| w_max * j as f64 / cells as f64).collect();
        let t0 = power_table(&w, 0.0);
        let ta = power_table(&w, a);
        let ta1 = power_table(&w, a + 1.0);
        Self { w, t0, ta, ta1 }
    }
}

/// One application of the Picard map in the transformed variables
/// (G, H)(w) with w = r^sigma and H = r^{delta1} g'.
fn picard_apply(
    e: &ExponentSet,
    eta: f64,
    zeta: f64,
    grid: &PicardGrid,
    g: &[f64],
    h: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let sigma = e.sigma();
    let a = (e.nf() - 2.0) / sigma;
    let int_h = weighted_cumint(&grid.w, h, &grid.t0.0, &grid.t0.1);
    let g_new: Vec<f64> = int_h.iter().map(|v| eta + v / sigma).collect();
    let int_g = weighted_cumint(&grid.w, g, &grid.ta.0, &grid.ta.1);
    let int_hw = weighted_cumint(&grid.w, h, &grid.ta1.0, &grid.ta1.1);
    let mut h_new = Vec::with_capacity(g.len());
    h_new.push(-zeta);
    for j in 1..g.len() {
        let i2 = e.alpha_tilde * int_g[j] + e.beta_tilde * int_hw[j];
        let denom = e.m * sigma * grid.w[j].powf(a + 1.0);
        h_new.push(-g[j].powf(1.0 - e.m) * i2 / denom);
    }
    (g_new, h_new)
}

/// Solves the inverted profile equation on [0, eps] by iterating the
/// fixed-point map of its integral form until successive iterates differ
/// by less than `tol` in sup norm. Auto-shrinks eps when the map fails to
/// contract.
pub fn local_fixed_point(
    eta: f64,
    e: &ExponentSet,
    opts: &LocalOptions,
) -> Result<(LocalSeed, ProfileCurve)> {
    if !(eta > 0.0) {
        return Err(Error::Range(format!("eta > 0 violated: eta = {eta}")));
    }
    let sigma = e.sigma();
    let a = (e.nf() - 2.0) / sigma;
    let zeta = e.alpha_tilde * eta.powf(2.0 - e.m) / (e.nf() - 2.0 - 2.0 * e.m);
    let mut eps = opts.eps.unwrap_or_else(|| {
        // keep the leading expansion drop below eta/4
        let guess = (eta * sigma / (4.0 * zeta)).powf(1.0 / sigma);
        (0.5 * guess).min(1e-3)
    });

    let mut last_failure = String::new();
    for _attempt in 0..=opts.max_shrink {
        let grid = PicardGrid::new(eps, sigma, a, opts.cells);
        let mut g = vec![eta; opts.cells + 1];
        let mut h = match opts.start {
            PicardStart::Rest => vec![0.0; opts.cells + 1],
            PicardStart::Slope => vec![-zeta; opts.cells + 1],
        };
        let mut deltas: Vec<f64> = Vec::new();
        let mut failed = None;
        for _it in 0..opts.max_iter {
            let (gn, hn) = picard_apply(e, eta, zeta, &grid, &g, &h);
            if gn.iter().any(|v| !v.is_finite() || *v <= 0.25 * eta || *v >= 4.0 * eta)
                || hn.iter().any(|v| !v.is_finite())
            {
                failed = Some("iterate left the contraction region".to_string());
                break;
            }
            let mut d: f64 = 0.0;
            for j in 0..gn.len() {
                d = d.max((gn[j] - g[j]).abs()).max((hn[j] - h[j]).abs());
            }
            g = gn;
            h = hn;
            deltas.push(d);
            if d < opts.tol {
                break;
            }
            // empirical contraction gate over two sweeps
            if deltas.len() == 3 {
                let factor = (deltas[2] / deltas[0].max(f64::MIN_POSITIVE)).sqrt();
                if !(factor <= 0.5) {
                    failed = Some(format!("contraction factor {factor:.3} > 1/2"));
                    break;
                }
            }
        }
        if failed.is_none() && deltas.last().is_some_and(|d| *d < opts.tol) {
            let seed = LocalSeed {
                eta,
                zeta: (e.regime == OriginRegime::HoelderOrigin).then_some(zeta),
                eps,
                expansion: OriginExpansion::for_eta(e, eta),
                g_eps: g[opts.cells],
                h_eps: h[opts.cells] * eps.powf(sigma - 1.0),
            };
            let curve = sample_local_curve(e, eta, eps, &grid.w, &g, &h, opts);
            return Ok((seed, curve));
        }
        last_failure = failed.unwrap_or_else(|| {
            format!(
                "tolerance {:.1e} not reached in {} sweeps (last delta {:.3e})",
                opts.tol,
                opts.max_iter,
                deltas.last().copied().unwrap_or(f64::NAN)
            )
        });
        log::debug!("picard at eps = {eps:.3e}: {last_failure}; halving");
        eps *= 0.5;
    }
    Err(Error::NoContraction(format!(
        "{last_failure}; eps shrunk to {eps:.3e} — parameters too close to the admissible boundary"
    )))
}

/// Samples the converged Picard arrays on a log-uniform grid ending at eps.
fn sample_local_curve(
    e: &ExponentSet,
    eta: f64,
    eps: f64,
    w: &[f64],
    g: &[f64],
    h: &[f64],
    opts: &LocalOptions,
) -> ProfileCurve {
    let sigma = e.sigma();
    let g_int = Pchip::new(w.to_vec(), g.to_vec());
    let h_int = Pchip::new(w.to_vec(), h.to_vec());
    let n_pts = (opts.out_decades * opts.out_points_per_decade as f64).round() as usize;
    let ds = std::f64::consts::LN_10 / opts.out_points_per_decade as f64;
    let mut radii = Vec::with_capacity(n_pts + 1);
    let mut values = Vec::with_capacity(n_pts + 1);
    let mut derivs = Vec::with_capacity(n_pts + 1);
    for k in (0..=n_pts).rev() {
        let r = eps * (-(k as f64) * ds).exp();
        let wq = r.powf(sigma);
        radii.push(r);
        values.push(g_int.eval(wq));
        derivs.push(r.powf(sigma - 1.0) * h_int.eval(wq));
    }
    ProfileCurve {
        variable: ProfileVariable::G,
        radii,
        values,
        derivs,
        exps: *e,
        eta: Some(eta),
    }
}

#[derive(Debug, Clone)]
pub struct ContinuationOptions {
    pub points_per_decade: usize,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            points_per_decade: 256,
            rtol: 1e-10,
            atol: 1e-14,
        }
    }
}

/// Continues the inverted profile from the matching radius out to `r_max`
/// as a first-order system in (w, z) = (g^m, d g^m/ds), s = log r:
///
/// ```text
/// w' = z
/// z' = -(n-2) z - e^{sigma s} (alpha~ w^{1/m} + beta~/m w^{(1-m)/m} z)
/// ```
pub fn continue_g(
    seed: &LocalSeed,
    e: &ExponentSet,
    r_max: f64,
    opts: &ContinuationOptions,
) -> Result<ProfileCurve> {
    if !(r_max >= 1e3 * seed.eps) {
        return Err(Error::Range(format!(
            "r_max >= 1e3 * eps violated: r_max = {r_max}, eps = {}",
            seed.eps
        )));
    }
    let m = e.m;
    let sigma = e.sigma();
    let (at, bt, n2) = (e.alpha_tilde, e.beta_tilde, e.nf() - 2.0);
    let eta = seed.eta;

    let ds = std::f64::consts::LN_10 / opts.points_per_decade as f64;
    let steps = ((r_max / seed.eps).ln() / ds).ceil().max(1.0) as usize;
    let s0 = seed.eps.ln();
    let s_out: Vec<f64> = (0..=steps).map(|k| s0 + ds * k as f64).collect();

    let w0 = seed.g_eps.powf(m);
    let z0 = seed.eps * m * seed.g_eps.powf(m - 1.0) * seed.h_eps;

    let mut radii = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    let mut derivs = Vec::with_capacity(steps + 1);
    let rhs = |s: f64, y: &[f64; 2]| {
        let (w, z) = (y[0], y[1]);
        if w <= 0.0 {
            return [f64::NAN, f64::NAN];
        }
        let g = w.powf(1.0 / m);
        let rg = w.powf((1.0 - m) / m) * z / m;
        [z, -n2 * z - (sigma * s).exp() * (at * g + bt * rg)]
    };
    let ode_opts = OdeOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        h_init: ds.min(1e-3),
        h_max: 0.25,
        ..OdeOptions::default()
    };
    let result = ode::integrate(rhs, s0, *s_out.last().unwrap(), [w0, z0], &s_out, &ode_opts, |s, y| {
        let r = s.exp();
        let w = y[0];
        let g = w.powf(1.0 / m);
        radii.push(r);
        values.push(g);
        derivs.push(w.powf((1.0 - m) / m) * y[1] / (m * r));
    });
    match result {
        Ok(_) => {}
        Err(Error::StepFailure(msg)) => {
            // classify using the last healthy sample
            let last_g = values.last().copied().unwrap_or(eta);
            if last_g > 5.0 * eta {
                return Err(Error::BlowUp(format!("g {last_g:.3e} > 5 eta; {msg}")));
            }
            if last_g < f64::MIN_POSITIVE.cbrt() {
                return Err(Error::Vanish(format!("g {last_g:.3e} near underflow; {msg}")));
            }
            return Err(Error::StepFailure(msg));
        }
        Err(other) => return Err(other),
    }
    if let Some(&g) = values.iter().find(|v| !v.is_finite() || **v <= 0.0) {
        if g <= 0.0 {
            return Err(Error::Vanish(format!("g = {g:.3e} on the sampled grid")));
        }
        return Err(Error::BlowUp("non-finite sample during continuation".into()));
    }
    if values.iter().any(|&g| g > 10.0 * eta) {
        return Err(Error::BlowUp("g exceeded 10 eta during continuation".into()));
    }

    Ok(ProfileCurve {
        variable: ProfileVariable::G,
        radii,
        values,
        derivs,
        exps: *e,
        eta: Some(eta),
    })
}

/// Far-field constant of the inverted profile with its uncertainty.
#[derive(Debug, Clone, Copy)]
pub struct FarConstant {
    /// Extrapolated limit of q~(r) = r^{alpha~/beta~} g(r).
    pub value: f64,
    /// Absolute spread of the extrapolated estimates across the last decade.
    pub uncertainty: f64,
    /// Largest radius entering the extrapolation.
    pub r_max: f64,
    /// Fitted decay exponent of q~ - A (diagnostic; NaN when degenerate).
    pub fit_sigma: f64,
}

impl FarConstant {
    pub fn rel_uncertainty(&self) -> f64 {
        self.uncertainty / self.value.abs()
    }
}

/// Anchor count used by the plateau extrapolation across the final decade.
const PLATEAU_ANCHORS: usize = 8;

/// Three-point Aitken extrapolation of a sequence sampled log-uniformly,
/// fitted at `n_anchors` positions across the final decade. `ds` is the
/// log spacing of `vals`. Returns the per-anchor limit estimates, last
/// anchor (= end of data) first.
fn plateau_estimates(vals: &[f64], ds: f64, n_anchors: usize) -> Option<(Vec<f64>, f64)> {
    let third = (std::f64::consts::LN_10 / 3.0 / ds).round() as usize;
    let decade = (std::f64::consts::LN_10 / ds).round() as usize;
    if third == 0 || vals.len() < decade + 2 * third + 1 {
        return None;
    }
    let end = vals.len() - 1;
    let mut ests = Vec::with_capacity(n_anchors);
    let mut fit_sigma = f64::NAN;
    for j in 0..n_anchors {
        let i2 = end - (j * decade) / (n_anchors - 1).max(1);
        let (i1, i0) = (i2 - third, i2 - 2 * third);
        let (q0, q1, q2) = (vals[i0], vals[i1], vals[i2]);
        let (d1, d2) = (q1 - q0, q2 - q1);
        let denom = d1 - d2;
        let c = if denom.abs() > 1e-300 && d1 * d2 > 0.0 {
            q2 + d2 * d2 / denom
        } else {
            q2
        };
        if j == 0 && d1 * d2 > 0.0 {
            fit_sigma = (d1 / d2).ln() / (std::f64::consts::LN_10 / 3.0);
        }
        ests.push(c);
    }
    Some((ests, fit_sigma))
}

/// Extracts A = lim_{r->inf} r^{alpha~/beta~} g(r) by Richardson-style
/// extrapolation over the final decade. The uncertainty is the spread of
/// the extrapolated estimates across that decade; `tol` bounds the spread
/// relative to the value.
pub fn extract_far_constant(curve: &ProfileCurve, tol: f64) -> Result<FarConstant> {
    if curve.variable != ProfileVariable::G {
        return Err(Error::Domain("far constant extraction needs a G-curve".into()));
    }
    if curve.span_decades() < 2.0 {
        return Err(Error::NoPlateau(format!(
            "curve spans {:.2} decades; at least two are needed — extend r_max",
            curve.span_decades()
        )));
    }
    let e = &curve.exps;
    let k1 = e.alpha_tilde / e.beta_tilde;
    let ds = curve.ds();
    let q: Vec<f64> = curve
        .radii
        .iter()
        .zip(&curve.values)
        .map(|(r, g)| r.powf(k1) * g)
        .collect();

    // q~ is increasing wherever g + (beta~/alpha~) r g' > 0, which the
    // construction guarantees; a decreasing tail means the data is bad
    let decade = (std::f64::consts::LN_10 / ds).round() as usize;
    let tail_start = q.len().saturating_sub(decade + 1);
    for i in tail_start..q.len() - 1 {
        if q[i + 1] < q[i] * (1.0 - 1e-12) {
            return Err(Error::NoPlateau(format!(
                "q~ not monotone on the tail at r = {:.3e}",
                curve.radii[i]
            )));
        }
    }

    let (ests, fit_sigma) = plateau_estimates(&q, ds, PLATEAU_ANCHORS)
        .ok_or_else(|| Error::NoPlateau("too few samples for extrapolation — extend r_max".into()))?;
    let value = ests[0];
    let lo = ests.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ests.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let uncertainty = hi - lo;
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::NoPlateau(format!("degenerate plateau estimate {value}")));
    }
    if uncertainty / value > tol {
        return Err(Error::NoPlateau(format!(
            "plateau estimate spread {:.3e} exceeds tolerance {:.1e} at r_max = {:.3e} — extend r_max",
            uncertainty / value,
            tol,
            curve.r_max()
        )));
    }

    // decay-rate bound: r^p q~'/q~ -> 0 for p = 1 + (sigma - (1-m) k1)/2
    let p = 1.0 + 0.5 * (e.sigma() - (1.0 - e.m) * k1);
    let dlog = |i: usize| {
        let r = curve.radii[i];
        let qp = k1 * r.powf(k1 - 1.0) * curve.values[i] + r.powf(k1) * curve.derivs[i];
        r.powf(p) * qp / q[i]
    };
    let d_end = dlog(q.len() - 1);
    let d_prev = dlog(q.len() - 1 - decade);
    if !(d_end.abs() <= d_prev.abs() * (1.0 + 1e-9)) {
        return Err(Error::NoPlateau(format!(
            "decay-rate bound r^p q~'/q~ not decreasing: {d_prev:.3e} -> {d_end:.3e}"
        )));
    }

    Ok(FarConstant {
        value,
        uncertainty,
        r_max: curve.r_max(),
        fit_sigma,
    })
}

/// Inverts a G-curve back to the profile: f(x) = x^{-(n-2)/m} g(1/x),
/// f'(x) = -x^{-(n-2)/m - 1} ((n-2)/m g(r) + r g'(r)) at r = 1/x.
pub fn invert_to_f(curve: &ProfileCurve) -> ProfileCurve {
    let e = &curve.exps;
    let c = e.far_decay();
    let n = curve.len();
    let mut radii = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut derivs = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let r = curve.radii[i];
        let x = 1.0 / r;
        let g = curve.values[i];
        let rg = r * curve.derivs[i];
        radii.push(x);
        values.push(x.powf(-c) * g);
        derivs.push(-x.powf(-c - 1.0) * (c * g + rg));
    }
    ProfileCurve {
        variable: match curve.variable {
            ProfileVariable::G => ProfileVariable::F,
            ProfileVariable::F => ProfileVariable::G,
        },
        radii,
        values,
        derivs,
        exps: *e,
        eta: curve.eta,
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Normalisation of the inverted run; the profile is rescaled afterwards,
    /// so this only moves roundoff around. The canonical run uses 1.
    pub eta: f64,
    pub local: LocalOptions,
    pub continuation: ContinuationOptions,
    /// Relative spread accepted by the plateau extraction.
    pub plateau_tol: f64,
    /// Initial far radius; `None` picks max(1e6 * eps, 1e2).
    pub r_max: Option<f64>,
    /// Cap for the automatic tenfold extensions on NoPlateau.
    pub r_max_cap: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            eta: 1.0,
            local: LocalOptions::default(),
            continuation: ContinuationOptions::default(),
            plateau_tol: 1e-3,
            r_max: None,
            r_max_cap: 1e9,
        }
    }
}

/// A solved profile: the normalised eta = 1 run plus the scaling data that
/// realises a requested origin constant A.
#[derive(Debug, Clone)]
pub struct SelfSimilarProfile {
    pub exps: ExponentSet,
    /// Profile curve of the normalised run (origin constant a0, far
    /// constant d1).
    pub f1: ProfileCurve,
    /// Inverted-profile curve of the same run.
    pub g1: ProfileCurve,
    /// Origin constant of the normalised run with its uncertainty.
    pub far: FarConstant,
    /// a0 = far.value.
    pub a0: f64,
    /// Far-field constant of the normalised run; 1 by the inversion
    /// construction.
    pub d1: f64,
    /// Rescaling factor lambda = (A/A0)^{1/(2/(1-m)-gamma)}.
    pub lambda: f64,
    /// Requested origin constant.
    pub a: f64,
    /// Far-field constant of the rescaled profile,
    /// D_A = D1 (A/A0)^{(2/(1-m)-(n-2)/m)/(2/(1-m)-gamma)}.
    pub d_a: f64,
    interp: PowerLawCurve,
}

impl SelfSimilarProfile {
    /// Evaluates the normalised profile f1 anywhere, extending by the
    /// certified power laws outside the computed radius range.
    pub fn eval_f1(&self, r: f64) -> f64 {
        self.interp.eval(r)
    }

    /// Evaluates the rescaled profile f_lambda(r) = lambda^{2/(1-m)} f1(lambda r).
    pub fn eval_f_lambda(&self, r: f64) -> f64 {
        self.lambda.powf(self.exps.two_over_1m()) * self.eval_f1(self.lambda * r)
    }

    /// Radii outside which evaluation switches to the power-law tails
    /// (in the normalised f1 coordinate).
    pub fn switch_radii(&self) -> (f64, f64) {
        self.interp.switch_radii()
    }

    /// The normalised family member lambda = 1 (origin constant a0).
    pub fn rescaled_to_a0(&self) -> Result<Self> {
        self.rescaled(self.a0)
    }

    /// Same solved run, rescaled to a different origin constant.
    pub fn rescaled(&self, a_target: f64) -> Result<Self> {
        let e = &self.exps;
        let lambda = e.lambda_for_a(a_target, self.a0)?;
        let expo = (e.two_over_1m() - e.far_decay()) / (e.two_over_1m() - e.gamma);
        let mut out = self.clone();
        out.lambda = lambda;
        out.a = a_target;
        out.d_a = self.d1 * (a_target / self.a0).powf(expo);
        Ok(out)
    }
}

/// Runs the full pipeline for the normalised run and rescales to the
/// requested origin constant.
pub fn solve_profile(a_target: f64, e: &ExponentSet, opts: &SolveOptions) -> Result<SelfSimilarProfile> {
    if !(a_target > 0.0) {
        return Err(Error::Range(format!("A > 0 violated: A = {a_target}")));
    }
    let (seed, local) = local_fixed_point(opts.eta, e, &opts.local)?;
    let mut r_max = opts.r_max.unwrap_or_else(|| (1e6 * seed.eps).max(1e2));
    let (g_tail, far) = loop {
        let tail = continue_g(&seed, e, r_max, &opts.continuation)?;
        match extract_far_constant(&tail, opts.plateau_tol) {
            Ok(far) => break (tail, far),
            Err(Error::NoPlateau(msg)) => {
                if r_max * 10.0 > opts.r_max_cap * (1.0 + 1e-9) {
                    return Err(Error::NoPlateau(format!(
                        "{msg}; r_max cap {:.1e} reached",
                        opts.r_max_cap
                    )));
                }
                log::debug!("no plateau at r_max = {r_max:.1e} ({msg}); extending tenfold");
                r_max *= 10.0;
            }
            Err(other) => return Err(other),
        }
    };

    // stitch local and continued curves at eps (the seed point appears once)
    let mut g1 = local;
    g1.radii.extend_from_slice(&g_tail.radii[1..]);
    g1.values.extend_from_slice(&g_tail.values[1..]);
    g1.derivs.extend_from_slice(&g_tail.derivs[1..]);

    let f1 = invert_to_f(&g1);
    let a0 = far.value;
    // the far constant of the normalised run is eta by the inversion
    // construction (r^{(n-2)/m} f -> g(0)); the tails extend the curve by
    // the certified constants so both limits are exact
    let d1 = opts.eta;
    let interp = PowerLawCurve::new(
        &f1.radii,
        &f1.values,
        (-e.gamma, a0),
        (-e.far_decay(), d1),
    );
    let lambda = e.lambda_for_a(a_target, a0)?;
    let expo = (e.two_over_1m() - e.far_decay()) / (e.two_over_1m() - e.gamma);
    let d_a = d1 * (a_target / a0).powf(expo);

    Ok(SelfSimilarProfile {
        exps: *e,
        f1,
        g1,
        far,
        a0,
        d1,
        lambda,
        a: a_target,
        d_a,
        interp,
    })
}

#[derive(Debug, Clone)]
pub struct DiagnosticOptions {
    /// Relative tolerance on the two derivative-limit plateaus.
    pub deriv_tol: f64,
    /// Slack on the normalised discrete Laplacian sign check.
    pub laplacian_slack: f64,
    /// Relative slack on the q and w1 monotonicity residuals.
    pub monotone_slack: f64,
}

impl Default for DiagnosticOptions {
    fn default() -> Self {
        Self {
            deriv_tol: 1e-3,
            laplacian_slack: 1e-5,
            monotone_slack: 1e-12,
        }
    }
}

/// Verifies the structural conclusions on a solved profile: the two
/// derivative limits, the sign of the radial Laplacian of f^m, and the
/// monotone quantities q = r^gamma f and w1 = r^2 g^{2 k~}.
pub fn profile_diagnostics(p: &SelfSimilarProfile, opts: &DiagnosticOptions) -> DiagnosticsReport {
    let mut report = DiagnosticsReport::new();
    let e = &p.exps;
    let ds = p.f1.ds();

    // origin limit: x^{gamma+1} f' -> -gamma A0 (on the normalised run).
    // The origin side is the start of the f-curve; reverse so the limit sits
    // at the end of the slice.
    let origin_vals: Vec<f64> = p
        .f1
        .radii
        .iter()
        .zip(&p.f1.derivs)
        .rev()
        .map(|(x, d)| x.powf(e.gamma + 1.0) * d)
        .collect();
    match plateau_estimates(&origin_vals, ds, PLATEAU_ANCHORS) {
        Some((ests, _)) => {
            let expected = -e.gamma * p.a0;
            let worst = (ests[0] - expected).abs() / expected.abs();
            report.check(
                "origin_derivative_limit",
                worst,
                opts.deriv_tol,
                format!("plateau {:.6e} vs -gamma*A0 = {:.6e}", ests[0], expected),
            );
        }
        None => {
            report.check("origin_derivative_limit", f64::INFINITY, opts.deriv_tol, "too few samples".into());
        }
    }

    // far limit: x^{(n-2)/m+1} f' -> -(n-2)/m * D1
    let far_vals: Vec<f64> = p
        .f1
        .radii
        .iter()
        .zip(&p.f1.derivs)
        .map(|(x, d)| x.powf(e.far_decay() + 1.0) * d)
        .collect();
    match plateau_estimates(&far_vals, ds, PLATEAU_ANCHORS) {
        Some((ests, _)) => {
            let expected = -e.far_decay() * p.d1;
            let worst = (ests[0] - expected).abs() / expected.abs();
            report.check(
                "far_derivative_limit",
                worst,
                opts.deriv_tol,
                format!("plateau {:.6e} vs -(n-2)/m*D1 = {:.6e}", ests[0], expected),
            );
        }
        None => {
            report.check("far_derivative_limit", f64::INFINITY, opts.deriv_tol, "too few samples".into());
        }
    }

    // sign of the discrete radial Laplacian of f^m, conservative form on
    // the log grid, normalised by r^2 / f^m
    let fm: Vec<f64> = p.f1.values.iter().map(|v| v.powf(e.m)).collect();
    let nf = e.nf();
    let mut worst_lap = f64::NEG_INFINITY;
    let mut at_r = 0.0;
    for i in 1..p.f1.len() - 1 {
        let r = &p.f1.radii;
        let rf_hi = (r[i] * r[i + 1]).sqrt();
        let rf_lo = (r[i - 1] * r[i]).sqrt();
        let flux_hi = rf_hi.powf(nf - 1.0) * (fm[i + 1] - fm[i]) / (r[i + 1] - r[i]);
        let flux_lo = rf_lo.powf(nf - 1.0) * (fm[i] - fm[i - 1]) / (r[i] - r[i - 1]);
        let vol = (rf_hi.powf(nf) - rf_lo.powf(nf)) / nf;
        let lap = (flux_hi - flux_lo) / vol;
        let normalised = lap * r[i] * r[i] / fm[i];
        if normalised > worst_lap {
            worst_lap = normalised;
            at_r = r[i];
        }
    }
    report.check(
        "laplacian_fm_nonpositive",
        worst_lap,
        opts.laplacian_slack,
        format!("max of r^2 lap(f^m)/f^m at r = {at_r:.3e}"),
    );

    // q = r^gamma f strictly decreasing
    let mut worst_q = f64::NEG_INFINITY;
    let mut q_prev = p.f1.radii[0].powf(e.gamma) * p.f1.values[0];
    let mut q_at = 0.0;
    for i in 1..p.f1.len() {
        let q = p.f1.radii[i].powf(e.gamma) * p.f1.values[i];
        let upt = (q - q_prev) / q_prev;
        if upt > worst_q {
            worst_q = upt;
            q_at = p.f1.radii[i];
        }
        q_prev = q;
    }
    report.check(
        "q_strictly_decreasing",
        worst_q,
        opts.monotone_slack,
        format!("largest relative uptick of r^gamma f at r = {q_at:.3e}"),
    );

    // w1 = r^2 g^{2 k~} strictly increasing, h1 = g + k~ r g' > 0
    let kt = e.k_tilde;
    let mut worst_w1 = f64::NEG_INFINITY;
    let mut w1_prev = p.g1.radii[0] * p.g1.radii[0] * p.g1.values[0].powf(2.0 * kt);
    for i in 1..p.g1.len() {
        let w1 = p.g1.radii[i] * p.g1.radii[i] * p.g1.values[i].powf(2.0 * kt);
        worst_w1 = worst_w1.max((w1_prev - w1) / w1);
        w1_prev = w1;
    }
    report.check(
        "w1_strictly_increasing",
        worst_w1,
        opts.monotone_slack,
        "largest relative drop of r^2 g^{2k~}".into(),
    );

    let mut worst_h1 = f64::NEG_INFINITY;
    for i in 0..p.g1.len() {
        let h1 = p.g1.values[i] + kt * p.g1.radii[i] * p.g1.derivs[i];
        worst_h1 = worst_h1.max(-h1 / p.g1.values[i]);
    }
    report.check(
        "h1_positive",
        worst_h1,
        opts.monotone_slack,
        "max of -(g + k~ r g')/g".into(),
    );

    report
}
