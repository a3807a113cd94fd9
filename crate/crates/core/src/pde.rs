//! Radial finite-difference simulation of u_t = lap(u^m) on annuli
//! B_R \ B_{1/R}, and of its rescaled form
//! u~_tau = lap(u~^m) + alpha u~ + beta y . grad u~ whose fixed points are
//! the self-similar profiles.
//!
//! Space is discretised on the log-uniform grid in conservative form,
//! lap v = r^{1-n} (r^{n-1} v')', with fluxes through geometric-mean face
//! radii. On such a grid the discrete operator annihilates the exact
//! kernel {1, r^{2-n}}, so the static singular solution is a steady state
//! of the scheme to roundoff. Time stepping is backward Euler with u^m
//! linearised about the previous state (one Newton step per time step,
//! optionally more); the diffusivity m u^{m-1} blows up near the inner
//! boundary, which rules out explicit stepping.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exponents::ExponentSet;
use crate::grid::LogGrid;
use crate::interp::Pchip;
use crate::report::DiagnosticsReport;
use crate::selfsimilar::{RadialSpaceTimeField, SelfSimilarSolution};

/// Positive radial state at one instant.
#[derive(Debug, Clone)]
pub struct RadialField {
    pub grid: LogGrid,
    pub values: Vec<f64>,
    pub time: f64,
    pub exps: ExponentSet,
}

impl RadialField {
    /// Samples `f` on the grid; the state must be strictly positive.
    pub fn from_fn(
        grid: LogGrid,
        exps: ExponentSet,
        time: f64,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values: Vec<f64> = grid.radii().iter().map(|&r| f(r)).collect();
        if let Some(i) = values.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!(
                "initial data not positive/finite at r = {:.6e}",
                grid.radii()[i]
            )));
        }
        Ok(Self {
            grid,
            values,
            time,
            exps,
        })
    }
}

/// Dirichlet data for the two annulus boundaries.
#[derive(Clone)]
pub enum BoundaryData {
    /// Hold the initial boundary values for all time.
    Frozen,
    /// Sample a space-time field at the boundary radii.
    Sampler(Arc<dyn RadialSpaceTimeField>),
}

#[derive(Clone)]
pub struct BoundarySpec {
    pub data: BoundaryData,
    pub label: String,
}

impl BoundarySpec {
    pub fn frozen() -> Self {
        Self {
            data: BoundaryData::Frozen,
            label: "frozen".to_string(),
        }
    }

    pub fn from_field(field: Arc<dyn RadialSpaceTimeField>) -> Self {
        let label = field.label();
        Self {
            data: BoundaryData::Sampler(field),
            label,
        }
    }

    fn values_at(&self, r_lo: f64, r_hi: f64, t: f64, frozen: (f64, f64)) -> (f64, f64) {
        match &self.data {
            BoundaryData::Frozen => frozen,
            BoundaryData::Sampler(f) => (f.eval(r_lo, t), f.eval(r_hi, t)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SchemeOptions {
    /// Nominal step dt = dt_factor * ds^2 (ds = log-grid spacing). The
    /// backward-Euler error is first order in dt, so tying dt to ds^2
    /// keeps refinement studies second order overall.
    pub dt_factor: f64,
    /// Explicit step override.
    pub dt: Option<f64>,
    /// Newton iterations per step; 1 is the plain semi-implicit scheme.
    pub newton_iters: usize,
    /// Fatal floor for step halving.
    pub min_dt: f64,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        Self {
            dt_factor: 1.25,
            dt: None,
            newton_iters: 1,
            min_dt: 1e-13,
        }
    }
}

/// Scheme metadata recorded with every trajectory.
#[derive(Debug, Clone)]
pub struct SchemeInfo {
    pub ds: f64,
    pub dt_nominal: f64,
    pub newton_iters: usize,
    pub steps: usize,
    pub rejections: usize,
}

/// Time-ordered snapshots of a simulation on a fixed grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: LogGrid,
    pub exps: ExponentSet,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    pub boundary_label: String,
    pub scheme: SchemeInfo,
}

/// One snapshot of the rescaled flow; `valid` is the inclusive index range
/// of grid points actually covered (rescaling a trajectory moves its
/// domain, shrinking the covered window).
#[derive(Debug, Clone)]
pub struct RescaledField {
    pub tau: f64,
    pub values: Vec<f64>,
    pub valid: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct RescaledTrajectory {
    pub grid: LogGrid,
    pub exps: ExponentSet,
    pub snapshots: Vec<RescaledField>,
    pub boundary_label: String,
    pub scheme: SchemeInfo,
}

/// The similarity dynamics (rescaled flow, trajectory rescaling, U_lambda
/// as a solution of the heat flow) require the normalisation rho1 = 1,
/// i.e. (m-1) alpha + 2 beta = 1. General rho1 is pure profile algebra.
fn check_dynamic_normalisation(e: &ExponentSet) -> Result<()> {
    if (e.rho1 - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "similarity dynamics need rho1 = 1, got rho1 = {}",
            e.rho1
        )));
    }
    Ok(())
}

/// Conservative-form operator tables: face conductances
/// cf_i = r_{i+1/2}^{n-1} / (r_{i+1} - r_i) and dual-cell volumes
/// vol_i = (r_{i+1/2}^n - r_{i-1/2}^n)/n with geometric-mean faces.
fn conservative_tables(grid: &LogGrid, n: f64) -> (Vec<f64>, Vec<f64>) {
    let r = grid.radii();
    let len = r.len();
    let mut cf = Vec::with_capacity(len - 1);
    let mut face_pow = Vec::with_capacity(len - 1);
    for i in 0..len - 1 {
        let rf = (r[i] * r[i + 1]).sqrt();
        cf.push(rf.powf(n - 1.0) / (r[i + 1] - r[i]));
        face_pow.push(rf.powf(n));
    }
    let mut vol = vec![0.0; len];
    for i in 1..len - 1 {
        vol[i] = (face_pow[i] - face_pow[i - 1]) / n;
    }
    (cf, vol)
}

enum StepProblem {
    NonFinite,
    NonPositive(usize),
}

/// One backward-Euler step of u_t = lap(u^m) + alpha u + beta du/ds with
/// Dirichlet values (bl, br) at the new time. Newton iterations on
/// F(u) = u - u_old - dt (...); the first iteration is the semi-implicit
/// linearised scheme.
#[allow(clippy::too_many_arguments)]
fn implicit_step(
    u_old: &[f64],
    dt: f64,
    cf: &[f64],
    vol: &[f64],
    ds: f64,
    m: f64,
    alpha: f64,
    beta: f64,
    bl: f64,
    br: f64,
    newton_iters: usize,
    scratch: &mut StepScratch,
) -> std::result::Result<Vec<f64>, StepProblem> {
    let n = u_old.len();
    let mut u = u_old.to_vec();
    for _ in 0..newton_iters.max(1) {
        let StepScratch { lo, di, hi, rhs, v, a } = scratch;
        for i in 0..n {
            v[i] = u[i].powf(m);
            a[i] = m * u[i].powf(m - 1.0);
        }
        // boundary rows pin the new values
        di[0] = 1.0;
        hi[0] = 0.0;
        rhs[0] = bl - u[0];
        di[n - 1] = 1.0;
        lo[n - 1] = 0.0;
        rhs[n - 1] = br - u[n - 1];
        let drift = beta / (2.0 * ds);
        for i in 1..n - 1 {
            let lap = (cf[i] * (v[i + 1] - v[i]) - cf[i - 1] * (v[i] - v[i - 1])) / vol[i];
            let dds = (u[i + 1] - u[i - 1]) * drift;
            let f = u[i] - u_old[i] - dt * (lap + alpha * u[i] + dds);
            rhs[i] = -f;
            lo[i] = -dt * (cf[i - 1] * a[i - 1] / vol[i] - drift);
            hi[i] = -dt * (cf[i] * a[i + 1] / vol[i] + drift);
            di[i] = 1.0 + dt * ((cf[i] + cf[i - 1]) * a[i] / vol[i] - alpha);
        }
        // Thomas solve (in place on rhs)
        for i in 1..n {
            let w = lo[i] / di[i - 1];
            di[i] -= w * hi[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut delta = vec![0.0; n];
        delta[n - 1] = rhs[n - 1] / di[n - 1];
        for i in (0..n - 1).rev() {
            delta[i] = (rhs[i] - hi[i] * delta[i + 1]) / di[i];
        }
        for i in 0..n {
            u[i] += delta[i];
            if !u[i].is_finite() {
                return Err(StepProblem::NonFinite);
            }
        }
    }
    if let Some(i) = u.iter().position(|x| !(*x > 0.0)) {
        return Err(StepProblem::NonPositive(i));
    }
    Ok(u)
}

struct StepScratch {
    lo: Vec<f64>,
    di: Vec<f64>,
    hi: Vec<f64>,
    rhs: Vec<f64>,
    v: Vec<f64>,
    a: Vec<f64>,
}

impl StepScratch {
    fn new(n: usize) -> Self {
        Self {
            lo: vec![0.0; n],
            di: vec![0.0; n],
            hi: vec![0.0; n],
            rhs: vec![0.0; n],
            v: vec![0.0; n],
            a: vec![0.0; n],
        }
    }
}

/// Shared march: advances from t_span.0 to t_span.1 recording states at
/// `snapshot_times` (first/last are always recorded).
#[allow(clippy::too_many_arguments)]
fn march(
    grid: &LogGrid,
    exps: &ExponentSet,
    u0: &[f64],
    t_span: (f64, f64),
    snapshot_times: &[f64],
    boundary: &BoundarySpec,
    alpha: f64,
    beta: f64,
    opts: &SchemeOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, SchemeInfo)> {
    let (t0, t1) = t_span;
    if !(t1 > t0) {
        return Err(Error::Domain(format!("empty time span [{t0}, {t1}]")));
    }
    let ds = grid.ds();
    let dt_nominal = opts.dt.unwrap_or(opts.dt_factor * ds * ds);
    let mut events: Vec<f64> = snapshot_times
        .iter()
        .copied()
        .filter(|&t| t > t0 && t <= t1)
        .collect();
    events.sort_by(|a, b| a.partial_cmp(b).unwrap());
    events.dedup();
    if events.last().is_none_or(|&t| t < t1) {
        events.push(t1);
    }

    let frozen = (u0[0], *u0.last().unwrap());
    let (r_lo, r_hi) = (grid.r_min(), grid.r_max());
    let (cf, vol) = conservative_tables(grid, exps.nf());
    let mut scratch = StepScratch::new(u0.len());

    let mut times = vec![t0];
    let mut snaps = vec![u0.to_vec()];
    let mut u = u0.to_vec();
    let mut t = t0;
    let mut steps = 0usize;
    let mut rejections = 0usize;

    for &event in &events {
        while t < event - 1e-14 * event.abs().max(1.0) {
            let mut dt = dt_nominal.min(event - t);
            loop {
                let t_new = t + dt;
                let (bl, br) = boundary.values_at(r_lo, r_hi, t_new, frozen);
                if !(bl > 0.0 && br > 0.0) {
                    return Err(Error::Domain(format!(
                        "boundary data not positive at t = {t_new}"
                    )));
                }
                match implicit_step(
                    &u,
                    dt,
                    &cf,
                    &vol,
                    ds,
                    exps.m,
                    alpha,
                    beta,
                    bl,
                    br,
                    opts.newton_iters,
                    &mut scratch,
                ) {
                    Ok(next) => {
                        u = next;
                        t = t_new;
                        steps += 1;
                        break;
                    }
                    Err(problem) => {
                        rejections += 1;
                        log::debug!("step rejected at t = {t:.6e}; halving dt to {:.3e}", 0.5 * dt);
                        dt *= 0.5;
                        if dt < opts.min_dt {
                            return match problem {
                                StepProblem::NonPositive(i) => Err(Error::PositivityLoss {
                                    t,
                                    r: grid.radii()[i],
                                }),
                                StepProblem::NonFinite => Err(Error::StiffnessFailure(format!(
                                    "non-finite Newton update below min step at t = {t}"
                                ))),
                            };
                        }
                    }
                }
            }
        }
        t = event;
        times.push(t);
        snaps.push(u.clone());
    }

    Ok((
        times,
        snaps,
        SchemeInfo {
            ds,
            dt_nominal,
            newton_iters: opts.newton_iters,
            steps,
            rejections,
        },
    ))
}

/// Simulates u_t = lap(u^m) with Dirichlet boundary data.
pub fn simulate(
    u0: &RadialField,
    boundary: &BoundarySpec,
    t_span: (f64, f64),
    snapshot_times: &[f64],
    opts: &SchemeOptions,
) -> Result<Trajectory> {
    let (times, snapshots, scheme) = march(
        &u0.grid,
        &u0.exps,
        &u0.values,
        t_span,
        snapshot_times,
        boundary,
        0.0,
        0.0,
        opts,
    )?;
    Ok(Trajectory {
        grid: u0.grid.clone(),
        exps: u0.exps,
        times,
        snapshots,
        boundary_label: boundary.label.clone(),
        scheme,
    })
}

/// Simulates the rescaled flow u~_tau = lap(u~^m) + alpha u~ + beta y.grad u~;
/// its fixed points are the profiles f_lambda.
pub fn simulate_rescaled(
    u0: &RadialField,
    boundary: &BoundarySpec,
    tau_span: (f64, f64),
    snapshot_taus: &[f64],
    opts: &SchemeOptions,
) -> Result<RescaledTrajectory> {
    let e = u0.exps;
    check_dynamic_normalisation(&e)?;
    let (taus, snaps, scheme) = march(
        &u0.grid,
        &e,
        &u0.values,
        tau_span,
        snapshot_taus,
        boundary,
        e.alpha,
        e.beta,
        opts,
    )?;
    let len = u0.grid.len();
    let snapshots = taus
        .iter()
        .zip(snaps)
        .map(|(&tau, values)| RescaledField {
            tau,
            values,
            valid: (0, len - 1),
        })
        .collect();
    Ok(RescaledTrajectory {
        grid: u0.grid.clone(),
        exps: e,
        snapshots,
        boundary_label: boundary.label.clone(),
        scheme,
    })
}

/// Maps a trajectory into similarity variables, u~(y, tau) = t^alpha
/// u(t^beta y, t) with tau = log t, resampling every snapshot onto the
/// grid of the trajectory (or `y_grid` if given). The moving map shrinks
/// the covered y-window; the per-snapshot valid range records it.
pub fn rescale_trajectory(traj: &Trajectory, y_grid: Option<&LogGrid>) -> Result<RescaledTrajectory> {
    let e = traj.exps;
    check_dynamic_normalisation(&e)?;
    let grid = y_grid.unwrap_or(&traj.grid).clone();
    let (r_min, r_max) = (traj.grid.r_min(), traj.grid.r_max());
    let mut snapshots = Vec::with_capacity(traj.times.len());
    for (k, &t) in traj.times.iter().enumerate() {
        if !(t > 0.0) {
            return Err(Error::Domain(format!(
                "rescaling needs positive snapshot times, got t = {t}"
            )));
        }
        let tau = t.ln();
        let tb = t.powf(e.beta);
        let ta = t.powf(e.alpha);
        let ls: Vec<f64> = traj.grid.radii().iter().map(|r| r.ln()).collect();
        let lu: Vec<f64> = traj.snapshots[k].iter().map(|u| u.ln()).collect();
        let interp = Pchip::new(ls, lu);
        let mut values = vec![f64::NAN; grid.len()];
        let mut lo = None;
        let mut hi = 0usize;
        for (i, &y) in grid.radii().iter().enumerate() {
            let x = tb * y;
            if x >= r_min * (1.0 - 1e-12) && x <= r_max * (1.0 + 1e-12) {
                values[i] = ta * interp.eval(x.ln()).exp();
                if lo.is_none() {
                    lo = Some(i);
                }
                hi = i;
            }
        }
        let lo = lo.ok_or_else(|| {
            Error::EmptyOverlap(format!(
                "snapshot at t = {t:.3e} maps to [{:.3e}, {:.3e}], outside the y-window",
                r_min / tb,
                r_max / tb
            ))
        })?;
        snapshots.push(RescaledField {
            tau,
            values,
            valid: (lo, hi),
        });
    }
    Ok(RescaledTrajectory {
        grid,
        exps: e,
        snapshots,
        boundary_label: traj.boundary_label.clone(),
        scheme: traj.scheme.clone(),
    })
}

/// Verifies the trapping sandwich U_{lambda1} <= u <= U_{lambda2} on every
/// snapshot. `lower` must be the solution with the larger lambda. The
/// inequalities are strict in the continuum but discretisation injects
/// noise proportional to the local solution size, so a violation counts
/// only beyond slack_rel * |U| + slack_abs.
pub fn check_trapping(
    traj: &Trajectory,
    lower: &SelfSimilarSolution,
    upper: &SelfSimilarSolution,
    slack_abs: f64,
    slack_rel: f64,
) -> Result<DiagnosticsReport> {
    if !(lower.lambda > upper.lambda) {
        return Err(Error::Domain(format!(
            "trapping needs lambda1 > lambda2, got {} <= {}",
            lower.lambda, upper.lambda
        )));
    }
    let mut report = DiagnosticsReport::new();
    let mut worst_lo = f64::NEG_INFINITY;
    let mut worst_hi = f64::NEG_INFINITY;
    let mut at_lo = (0.0, 0.0);
    let mut at_hi = (0.0, 0.0);
    for (k, &t) in traj.times.iter().enumerate() {
        for (i, &r) in traj.grid.radii().iter().enumerate() {
            let u = traj.snapshots[k][i];
            let lo_env = lower.eval(r, t);
            let lo_violation = lo_env - u - slack_rel * lo_env.abs();
            if lo_violation > worst_lo {
                worst_lo = lo_violation;
                at_lo = (r, t);
            }
            let hi_env = upper.eval(r, t);
            let hi_violation = u - hi_env - slack_rel * hi_env.abs();
            if hi_violation > worst_hi {
                worst_hi = hi_violation;
                at_hi = (r, t);
            }
        }
    }
    report.check(
        "trapping_lower",
        worst_lo,
        slack_abs,
        format!("min margin {:.3e} at (r,t)=({:.3e},{:.3e})", -worst_lo, at_lo.0, at_lo.1),
    );
    report.check(
        "trapping_upper",
        worst_hi,
        slack_abs,
        format!("min margin {:.3e} at (r,t)=({:.3e},{:.3e})", -worst_hi, at_hi.0, at_hi.1),
    );
    Ok(report)
}

/// Verifies the Aronson-Benilan bound u_t <= u / ((1-m) t) between
/// consecutive snapshots (discrete derivative at the midpoint). Passes iff
/// the worst excess over slack_rel * |u| stays below slack_abs.
pub fn check_aronson_benilan(
    traj: &Trajectory,
    slack_abs: f64,
    slack_rel: f64,
) -> Result<DiagnosticsReport> {
    if traj.times.len() < 2 {
        return Err(Error::Domain(
            "Aronson-Benilan check needs at least two snapshots".into(),
        ));
    }
    let m = traj.exps.m;
    let mut report = DiagnosticsReport::new();
    let mut worst = f64::NEG_INFINITY;
    let mut at = (0.0, 0.0);
    for k in 0..traj.times.len() - 1 {
        let (t0, t1) = (traj.times[k], traj.times[k + 1]);
        let dt = t1 - t0;
        let t_mid = 0.5 * (t0 + t1);
        for (i, &r) in traj.grid.radii().iter().enumerate() {
            let u_mid = 0.5 * (traj.snapshots[k][i] + traj.snapshots[k + 1][i]);
            let ut = (traj.snapshots[k + 1][i] - traj.snapshots[k][i]) / dt;
            let excess = ut - u_mid / ((1.0 - m) * t_mid) - slack_rel * u_mid.abs();
            if excess > worst {
                worst = excess;
                at = (r, t_mid);
            }
        }
    }
    report.check(
        "aronson_benilan",
        worst,
        slack_abs,
        format!("worst residual at (r,t)=({:.3e},{:.3e})", at.0, at.1),
    );
    Ok(report)
}
