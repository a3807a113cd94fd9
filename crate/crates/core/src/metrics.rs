//! Weighted-L1 norms and the contraction/convergence diagnostics.
//!
//! The natural space for differences of singular solutions is
//! L1(r^{-mu}) with mu in the band (mu1, mu2): there the flow is a
//! contraction, and at mu = mu1 the rescaled flow converges to a profile.
//! Norms are evaluated on the truncated annulus [1/R, R]; what the
//! truncation cuts off is reported as explicit tail bars obtained by
//! extrapolating the integrand's local power-law slope at both ends, so
//! monotonicity verdicts carry their truncation error.
//!
//! A possible extension (not implemented): weighting by a power of a
//! reference profile, f_ref^theta, instead of |x|^{-mu}. It admits a
//! slightly larger space at the convergence endpoint but needs
//! theta <= m, which restricts gamma further.

use crate::error::{Error, Result};
use crate::exponents::ExponentSet;
use crate::grid::LogGrid;
use crate::pde::{RescaledTrajectory, Trajectory};
use crate::profile::SelfSimilarProfile;

/// Surface area of the unit sphere in R^n (closed forms for n = 3, 4, 5,
/// Gamma-function formula otherwise).
pub fn sphere_area(n: u32) -> f64 {
    use std::f64::consts::PI;
    match n {
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        5 => 8.0 * PI * PI / 3.0,
        _ => 2.0 * PI.powf(f64::from(n) / 2.0) / gamma_half_integer(n),
    }
}

/// Gamma(n/2) for integer n >= 1.
fn gamma_half_integer(n: u32) -> f64 {
    if n.is_multiple_of(2) {
        // Gamma(k) = (k-1)!
        let k = n / 2;
        (1..k).map(|i| i as f64).product()
    } else {
        // Gamma(k + 1/2) = (2k-1)!! / 2^k sqrt(pi)
        let k = n / 2;
        let mut acc = std::f64::consts::PI.sqrt();
        for i in 1..=k {
            acc *= (2 * i - 1) as f64 / 2.0;
        }
        acc
    }
}

/// A weighted-L1 norm over a radial window.
#[derive(Debug, Clone, Copy)]
pub struct WeightedNorm {
    pub mu: f64,
    pub n: u32,
    pub r_min: f64,
    pub r_max: f64,
    /// Sampling used by the closure-based entry point.
    pub samples_per_decade: usize,
}

impl WeightedNorm {
    /// Contraction-mode weight: mu1 <= mu < mu2.
    pub fn contraction(e: &ExponentSet, mu: f64, r_min: f64, r_max: f64) -> Result<Self> {
        if !(mu >= e.mu1 && mu < e.mu2) {
            return Err(Error::Range(format!(
                "contraction weight needs mu in [{}, {}), got {mu}",
                e.mu1, e.mu2
            )));
        }
        Ok(Self {
            mu,
            n: e.n,
            r_min,
            r_max,
            samples_per_decade: 256,
        })
    }

    /// Convergence-mode weight mu = mu1 (requires gamma < n).
    pub fn convergence(e: &ExponentSet, r_min: f64, r_max: f64) -> Result<Self> {
        if !e.asymptotics_mode() {
            return Err(Error::Range(format!(
                "convergence mode needs gamma < n, got gamma = {}",
                e.gamma
            )));
        }
        Ok(Self {
            mu: e.mu1,
            n: e.n,
            r_min,
            r_max,
            samples_per_decade: 256,
        })
    }

    /// Unchecked weight, for raw integrals.
    pub fn raw(n: u32, mu: f64, r_min: f64, r_max: f64) -> Self {
        Self {
            mu,
            n,
            r_min,
            r_max,
            samples_per_decade: 256,
        }
    }
}

/// Composite quadrature of samples on a uniform grid in s = log r:
/// Boole's rule over runs of 4 cells (order 6), closing the remainder with
/// Simpson / Simpson-3/8 / trapezoid. Integrates sum f_i ds.
fn composite_log_quadrature(f: &[f64], ds: f64) -> f64 {
    let cells = f.len() - 1;
    let boole_cells = cells - cells % 4;
    let mut acc = 0.0;
    let mut i = 0;
    while i < boole_cells {
        acc += ds * 2.0 / 45.0
            * (7.0 * f[i] + 32.0 * f[i + 1] + 12.0 * f[i + 2] + 32.0 * f[i + 3] + 7.0 * f[i + 4]);
        i += 4;
    }
    match cells - boole_cells {
        0 => {}
        1 => acc += ds * 0.5 * (f[i] + f[i + 1]),
        2 => acc += ds / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]),
        3 => {
            acc += ds * 3.0 / 8.0 * (f[i] + 3.0 * f[i + 1] + 3.0 * f[i + 2] + f[i + 3]);
        }
        _ => unreachable!(),
    }
    acc
}

/// ||h||_{L1(r^{-mu})} = omega_{n-1} int |h(r)| r^{n-1-mu} dr over the
/// window, sampling `h` on the norm's own log grid.
pub fn weighted_l1<F: Fn(f64) -> f64>(h: F, w: &WeightedNorm) -> f64 {
    let decades = (w.r_max / w.r_min).log10();
    let mut cells = (decades * w.samples_per_decade as f64).round() as usize;
    cells = cells.div_ceil(4) * 4; // keep the 6th-order rule everywhere
    let ds = (w.r_max / w.r_min).ln() / cells as f64;
    let s0 = w.r_min.ln();
    let c = f64::from(w.n) - w.mu;
    let f: Vec<f64> = (0..=cells)
        .map(|i| {
            let s = s0 + ds * i as f64;
            let r = s.exp();
            h(r).abs() * (c * s).exp()
        })
        .collect();
    sphere_area(w.n) * composite_log_quadrature(&f, ds)
}

/// Same norm evaluated from samples on (a sub-window of) a log grid.
fn weighted_l1_window(
    grid: &LogGrid,
    values: &[f64],
    w: &WeightedNorm,
    lo: usize,
    hi: usize,
    positive_part: bool,
) -> f64 {
    let ds = grid.ds();
    let c = f64::from(w.n) - w.mu;
    let f: Vec<f64> = (lo..=hi)
        .map(|i| {
            let v = if positive_part {
                values[i].max(0.0)
            } else {
                values[i].abs()
            };
            v * (c * grid.s(i)).exp()
        })
        .collect();
    sphere_area(w.n) * composite_log_quadrature(&f, ds)
}

/// Truncation bars for the weighted integrand F(s) = |h| r^{n-mu}: the
/// mass outside the window estimated by extending the local log-slope at
/// each end. Infinite when the local slope is not decaying.
fn tail_bars(grid: &LogGrid, values: &[f64], w: &WeightedNorm, lo: usize, hi: usize) -> f64 {
    let ds = grid.ds();
    let c = f64::from(w.n) - w.mu;
    let integrand = |i: usize| values[i].abs() * (c * grid.s(i)).exp();
    let half_decade = ((std::f64::consts::LN_10 / 2.0) / ds).round().max(2.0) as usize;
    if hi - lo + 1 < 2 * half_decade + 2 {
        return f64::INFINITY;
    }
    // least-squares log-slope over the end windows; zero data means zero tail
    let slope = |range: std::ops::Range<usize>| -> Option<f64> {
        let k = range.len() as f64;
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for (j, i) in range.enumerate() {
            let v = integrand(i);
            if v <= 0.0 {
                return Some(f64::NEG_INFINITY); // identically small: no tail
            }
            let x = j as f64;
            let y = v.ln();
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let denom = k * sxx - sx * sx;
        (denom.abs() > 0.0).then(|| (k * sxy - sx * sy) / denom / ds)
    };
    let mut bar = 0.0;
    // outer end: tail converges iff slope < 0
    match slope(hi + 1 - half_decade..hi + 1) {
        Some(c_out) if c_out == f64::NEG_INFINITY => {}
        Some(c_out) if c_out < -0.05 => bar += integrand(hi) * ds / (-c_out * ds).exp_m1().abs(),
        _ => return f64::INFINITY,
    }
    // inner end: tail converges iff slope > 0 toward decreasing s
    match slope(lo..lo + half_decade) {
        Some(c_in) if c_in == f64::NEG_INFINITY => {}
        Some(c_in) if c_in > 0.05 => bar += integrand(lo) * ds / (c_in * ds).exp_m1().abs(),
        _ => return f64::INFINITY,
    }
    bar
}

/// Weighted-L1 time series of |u - v| and (u - v)_+ along two
/// trajectories, with the monotonicity verdict and per-interval boundary
/// flux corrections for the truncated domain.
#[derive(Debug, Clone)]
pub struct NormSeries {
    pub times: Vec<f64>,
    pub total: Vec<f64>,
    pub positive_part: Vec<f64>,
    /// Estimated boundary-flux correction for each interval [t_k, t_{k+1}].
    pub flux_correction: Vec<f64>,
    /// Largest of total[k+1] - total[k] - flux_correction[k].
    pub worst_uptick: f64,
    /// worst_uptick <= slack used at construction time.
    pub nonincreasing: bool,
}

/// Slack added to the flux correction when flagging upticks.
pub const CONTRACTION_SLACK: f64 = 1e-6;

pub fn contraction_series(
    u_traj: &Trajectory,
    v_traj: &Trajectory,
    w: &WeightedNorm,
) -> Result<NormSeries> {
    if u_traj.grid != v_traj.grid {
        return Err(Error::GridMismatch("trajectories use different grids".into()));
    }
    if u_traj.times.len() != v_traj.times.len()
        || u_traj
            .times
            .iter()
            .zip(&v_traj.times)
            .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
    {
        return Err(Error::GridMismatch("trajectories sampled at different times".into()));
    }
    let grid = &u_traj.grid;
    let last = grid.len() - 1;
    let m = u_traj.exps.m;
    let omega = sphere_area(w.n);

    let mut total = Vec::with_capacity(u_traj.times.len());
    let mut pos = Vec::with_capacity(u_traj.times.len());
    let mut boundary_rate = Vec::with_capacity(u_traj.times.len());
    for k in 0..u_traj.times.len() {
        let diff: Vec<f64> = u_traj.snapshots[k]
            .iter()
            .zip(&v_traj.snapshots[k])
            .map(|(a, b)| a - b)
            .collect();
        total.push(weighted_l1_window(grid, &diff, w, 0, last, false));
        pos.push(weighted_l1_window(grid, &diff, w, 0, last, true));

        // Kato-inequality boundary terms: omega r^{n-1-mu} |d/dr (u^m - v^m)|
        // + mu omega r^{n-2-mu} |u^m - v^m| at both ends, one-sided slopes
        let vm = |uu: f64| uu.powf(m);
        let mut rate = 0.0;
        for (i0, i1) in [(0usize, 1usize), (last, last - 1)] {
            let r = grid.radii()[i0];
            let dr = grid.radii()[i1] - grid.radii()[i0];
            let dm0 = vm(u_traj.snapshots[k][i0]) - vm(v_traj.snapshots[k][i0]);
            let dm1 = vm(u_traj.snapshots[k][i1]) - vm(v_traj.snapshots[k][i1]);
            let slope = (dm1 - dm0) / dr;
            rate += omega
                * (r.powf(f64::from(w.n) - 1.0 - w.mu) * slope.abs()
                    + w.mu * r.powf(f64::from(w.n) - 2.0 - w.mu) * dm0.abs());
        }
        boundary_rate.push(rate);
    }

    let mut flux = Vec::with_capacity(total.len().saturating_sub(1));
    let mut worst = f64::NEG_INFINITY;
    for k in 0..total.len() - 1 {
        let dt = u_traj.times[k + 1] - u_traj.times[k];
        let bar = 0.5 * (boundary_rate[k] + boundary_rate[k + 1]) * dt;
        flux.push(bar);
        worst = worst.max(total[k + 1] - total[k] - bar);
    }
    Ok(NormSeries {
        times: u_traj.times.clone(),
        nonincreasing: worst <= CONTRACTION_SLACK,
        total,
        positive_part: pos,
        flux_correction: flux,
        worst_uptick: worst,
    })
}

/// Distance series of a rescaled run to a target profile: weighted-L1 over
/// the covered window plus the relative sup norm on a fixed compact
/// annulus, with tail bars for the truncation. The sup is relative
/// (|u~ - f|/f) because f spans many decades across any annulus; for
/// positive targets bounded above and below on compacts this is uniform
/// convergence in the usual sense.
#[derive(Debug, Clone)]
pub struct ConvergenceSeries {
    pub taus: Vec<f64>,
    pub l1: Vec<f64>,
    pub sup_compact: Vec<f64>,
    pub tail_bound: Vec<f64>,
}

impl ConvergenceSeries {
    pub fn final_over_initial(&self) -> f64 {
        self.l1.last().unwrap() / self.l1[0]
    }

    /// True iff the L1 series is strictly decreasing wherever it exceeds
    /// `floor`.
    pub fn strictly_decreasing_above(&self, floor: f64) -> bool {
        self.l1
            .windows(2)
            .all(|p| p[0] <= floor || p[1] < p[0])
    }
}

pub fn convergence_to_profile(
    rt: &RescaledTrajectory,
    target: &SelfSimilarProfile,
    w: &WeightedNorm,
    compact: (f64, f64),
) -> Result<ConvergenceSeries> {
    if !(compact.0 < compact.1) {
        return Err(Error::Range(format!(
            "empty compact annulus [{}, {}]",
            compact.0, compact.1
        )));
    }
    if compact.0 < rt.grid.r_min() || compact.1 > rt.grid.r_max() {
        return Err(Error::GridMismatch(format!(
            "compact annulus [{}, {}] outside simulated window [{}, {}]",
            compact.0,
            compact.1,
            rt.grid.r_min(),
            rt.grid.r_max()
        )));
    }
    let grid = &rt.grid;
    let f_target: Vec<f64> = grid.radii().iter().map(|&y| target.eval_f_lambda(y)).collect();
    let mut taus = Vec::with_capacity(rt.snapshots.len());
    let mut l1 = Vec::with_capacity(rt.snapshots.len());
    let mut sup = Vec::with_capacity(rt.snapshots.len());
    let mut tails = Vec::with_capacity(rt.snapshots.len());
    for snap in &rt.snapshots {
        let (lo, hi) = snap.valid;
        let diff: Vec<f64> = (0..grid.len())
            .map(|i| {
                if i >= lo && i <= hi {
                    snap.values[i] - f_target[i]
                } else {
                    0.0
                }
            })
            .collect();
        taus.push(snap.tau);
        l1.push(weighted_l1_window(grid, &diff, w, lo, hi, false));
        tails.push(tail_bars(grid, &diff, w, lo, hi));
        let mut s = 0.0f64;
        for (i, &y) in grid.radii().iter().enumerate() {
            if y >= compact.0 && y <= compact.1 && i >= lo && i <= hi {
                s = s.max(diff[i].abs() / f_target[i]);
            }
        }
        sup.push(s);
    }
    Ok(ConvergenceSeries {
        taus,
        l1,
        sup_compact: sup,
        tail_bound: tails,
    })
}
