//! The four workflows behind the CLI: profile solve, oracle-validated
//! simulation, convergence study, and parameter sweeps.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use fde_singular::exponents::ExponentSet;
use fde_singular::grid::LogGrid;
use fde_singular::io;
use fde_singular::metrics::{convergence_to_profile, WeightedNorm};
use fde_singular::pde::{simulate, simulate_rescaled, BoundarySpec, RadialField, SchemeOptions};
use fde_singular::perturb::seeded_bump;
use fde_singular::profile::{
    profile_diagnostics, solve_profile, ContinuationOptions, DiagnosticOptions, LocalOptions,
    SelfSimilarProfile, SolveOptions,
};
use fde_singular::report::DiagnosticsReport;
use fde_singular::selfsimilar::{
    BarenblattSolution, RadialSpaceTimeField, SelfSimilarSolution, StaticSingular,
};

use crate::config::{Command, ConfigError, Oracle, RunConfig};

/// Failure classes mapped onto exit codes by main.
pub enum CliError {
    /// exit 2
    Config(ConfigError),
    /// exit 3
    Numerical(fde_singular::Error),
    /// exit 1; diagnostics completed but failed
    Diagnostic(String),
    /// exit 3
    Io(std::io::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<fde_singular::Error> for CliError {
    fn from(e: fde_singular::Error) -> Self {
        match e {
            // inadmissible parameters are a configuration problem
            fde_singular::Error::Range(msg) => CliError::Config(ConfigError {
                line: None,
                message: msg,
            }),
            other => CliError::Numerical(other),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Diagnostic(s) => write!(f, "diagnostic failure: {s}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

pub fn exit_code(err: &CliError) -> i32 {
    match err {
        CliError::Diagnostic(_) => 1,
        CliError::Config(_) => 2,
        CliError::Numerical(_) | CliError::Io(_) => 3,
    }
}

fn solve_options(cfg: &RunConfig) -> SolveOptions {
    SolveOptions {
        eta: cfg.eta,
        local: LocalOptions {
            eps: cfg.eps,
            out_points_per_decade: cfg.profile_points_per_decade,
            ..LocalOptions::default()
        },
        continuation: ContinuationOptions {
            points_per_decade: cfg.profile_points_per_decade,
            rtol: cfg.rtol,
            ..ContinuationOptions::default()
        },
        plateau_tol: cfg.plateau_tol,
        r_max: cfg.r_max,
        r_max_cap: 1e9,
    }
}

fn scheme_options(cfg: &RunConfig) -> SchemeOptions {
    SchemeOptions {
        dt_factor: cfg.dt_factor,
        newton_iters: cfg.newton_iters,
        ..SchemeOptions::default()
    }
}

/// Writes the failure summary and folds a report into the run's verdict.
struct Verdict {
    failures: Vec<(String, f64, f64)>,
    strict: bool,
}

impl Verdict {
    fn new(strict: bool) -> Self {
        Self {
            failures: Vec::new(),
            strict,
        }
    }

    /// Records failures; in strict mode the first failing report aborts.
    fn absorb(&mut self, report: &DiagnosticsReport) -> Result<(), CliError> {
        for e in report.failures() {
            self.failures.push((e.name.clone(), e.worst, e.threshold));
        }
        if self.strict && !report.passed() {
            let first = report.failures().next().unwrap();
            return Err(CliError::Diagnostic(format!(
                "{} (worst {:.6e} vs threshold {:.3e})",
                first.name, first.worst, first.threshold
            )));
        }
        Ok(())
    }

    fn absorb_check(&mut self, name: &str, worst: f64, threshold: f64) -> Result<(), CliError> {
        if worst > threshold {
            self.failures.push((name.to_string(), worst, threshold));
            if self.strict {
                return Err(CliError::Diagnostic(format!(
                    "{name} (worst {worst:.6e} vs threshold {threshold:.3e})"
                )));
            }
        }
        Ok(())
    }

    fn finish(self, dir: &Path) -> Result<(), CliError> {
        if self.failures.is_empty() {
            return Ok(());
        }
        let mut out = String::from("name\tworst\tthreshold\n");
        for (name, worst, threshold) in &self.failures {
            out.push_str(&format!("{name}\t{worst}\t{threshold}\n"));
        }
        fs::write(dir.join("failures.txt"), &out)?;
        let (name, worst, threshold) = &self.failures[0];
        Err(CliError::Diagnostic(format!(
            "{} checks failed; first: {name} (worst {worst:.6e} vs threshold {threshold:.3e}); see failures.txt",
            self.failures.len()
        )))
    }
}

/// Scheme and boundary metadata recorded with simulation manifests.
fn scheme_manifest(traj: &fde_singular::pde::Trajectory) -> Vec<(String, String)> {
    vec![
        ("boundary".to_string(), traj.boundary_label.clone()),
        ("grid_ds".to_string(), format!("{}", traj.scheme.ds)),
        ("dt_nominal".to_string(), format!("{}", traj.scheme.dt_nominal)),
        ("steps".to_string(), format!("{}", traj.scheme.steps)),
        ("rejected_steps".to_string(), format!("{}", traj.scheme.rejections)),
    ]
}

fn write_run_manifest(
    dir: &Path,
    cfg: &RunConfig,
    started: Instant,
    extra: &[(String, String)],
) -> Result<(), CliError> {
    let mut entries = vec![
        ("library_version".to_string(), io::LIBRARY_VERSION.to_string()),
    ];
    entries.extend(cfg.manifest_entries());
    entries.extend(extra.iter().cloned());
    entries.push((
        "wall_clock_seconds".to_string(),
        format!("{:.3}", started.elapsed().as_secs_f64()),
    ));
    io::write_manifest(&dir.join("manifest.txt"), &entries)?;
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate().map_err(CliError::Config)?;
    fs::create_dir_all(&cfg.out_dir)?;
    match cfg.command.unwrap() {
        Command::Profile => profile_run(cfg, &cfg.out_dir),
        Command::Simulate => simulate_run(cfg, &cfg.out_dir),
        Command::Converge => converge_run(cfg, &cfg.out_dir),
        Command::Sweep => sweep_run(cfg),
    }
}

fn build_exps(cfg: &RunConfig) -> Result<ExponentSet, CliError> {
    Ok(ExponentSet::derive(cfg.n, cfg.m, cfg.gamma)?)
}

fn solve_cfg_profile(cfg: &RunConfig, e: &ExponentSet) -> Result<SelfSimilarProfile, CliError> {
    Ok(solve_profile(cfg.a_target, e, &solve_options(cfg))?)
}

fn profile_run(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let e = build_exps(cfg)?;
    let p = solve_cfg_profile(cfg, &e)?;
    let diag_opts = DiagnosticOptions::default();
    let report = profile_diagnostics(&p, &diag_opts);

    let (sw_lo, sw_hi) = p.switch_radii();
    let meta = vec![
        ("solver_rtol".to_string(), format!("{}", cfg.rtol)),
        ("plateau_tol".to_string(), format!("{}", cfg.plateau_tol)),
        (
            "points_per_decade".to_string(),
            format!("{}", cfg.profile_points_per_decade),
        ),
        ("switch_radius_low".to_string(), format!("{sw_lo}")),
        ("switch_radius_high".to_string(), format!("{sw_hi}")),
    ];
    io::write_profile(&dir.join("profile.txt"), &p, &meta)?;
    fs::write(dir.join("diagnostics.txt"), format!("{report}"))?;

    let mut verdict = Verdict::new(cfg.strict);
    let absorbed = verdict.absorb(&report);
    write_run_manifest(
        dir,
        cfg,
        started,
        &[
            ("a0".to_string(), format!("{}", p.a0)),
            ("a0_uncertainty".to_string(), format!("{}", p.far.uncertainty)),
            ("lambda".to_string(), format!("{}", p.lambda)),
            ("d_a".to_string(), format!("{}", p.d_a)),
            ("plateau_r_max".to_string(), format!("{}", p.far.r_max)),
            ("diag_deriv_tol".to_string(), format!("{}", diag_opts.deriv_tol)),
            ("diag_laplacian_slack".to_string(), format!("{}", diag_opts.laplacian_slack)),
            ("diag_monotone_slack".to_string(), format!("{}", diag_opts.monotone_slack)),
        ],
    )?;
    absorbed?;
    verdict.finish(dir)
}

fn simulate_run(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    match cfg.oracle {
        Oracle::Barenblatt => barenblatt_run(cfg, dir),
        Oracle::Static => static_run(cfg, dir),
        Oracle::ULambda => ulambda_run(cfg, dir),
    }
}

fn barenblatt_run(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let e = build_exps(cfg)?;
    let b = BarenblattSolution::new(cfg.n, cfg.m, cfg.bb_t_extinction, cfg.bb_k)?;
    // NaN-rejecting comparison
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(cfg.t_end < cfg.bb_t_extinction) {
        return Err(CliError::Config(ConfigError {
            line: None,
            message: format!(
                "t_end {} must precede the extinction time {}",
                cfg.t_end, cfg.bb_t_extinction
            ),
        }));
    }
    let mut rows = Vec::new();
    let mut errs = Vec::new();
    let mut finest: Option<fde_singular::pde::Trajectory> = None;
    for level in 0..cfg.refinements {
        let ppd = cfg.pde_points_per_decade >> (cfg.refinements - 1 - level);
        let grid = LogGrid::annulus(cfg.domain_r, ppd).unwrap();
        let u0 = RadialField::from_fn(grid.clone(), e, cfg.t_start, |r| b.eval(r, cfg.t_start))?;
        let boundary = BoundarySpec::from_field(Arc::new(b));
        let traj = simulate(
            &u0,
            &boundary,
            (cfg.t_start, cfg.t_end),
            &[cfg.t_end],
            &scheme_options(cfg),
        )?;
        let err = traj
            .snapshots
            .last()
            .unwrap()
            .iter()
            .zip(grid.radii())
            .map(|(u, &r)| ((u - b.eval(r, cfg.t_end)) / b.eval(r, cfg.t_end)).abs())
            .fold(0.0f64, f64::max);
        let order = if let Some(prev) = errs.last() {
            format!("{}", (prev / err as f64).log2())
        } else {
            String::new()
        };
        rows.push(vec![format!("{ppd}"), format!("{err}"), order]);
        errs.push(err);
        finest = Some(traj);
    }
    io::write_table(&dir.join("refinement.csv"), "points_per_decade,linf_rel_error,order", &rows)?;
    let mut extra = vec![];
    if let Some(traj) = &finest {
        io::write_trajectory_snapshots(dir, traj)?;
        extra.extend(scheme_manifest(traj));
    }

    let mut verdict = Verdict::new(cfg.strict);
    let final_err = *errs.last().unwrap();
    let c1 = verdict.absorb_check("barenblatt_linf_error", final_err, cfg.error_threshold);
    let worst_order = errs
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::INFINITY, f64::min);
    let c2 = verdict.absorb_check("barenblatt_spatial_order", -worst_order, -cfg.order_threshold);
    extra.push(("final_linf_error".to_string(), format!("{final_err}")));
    extra.push(("measured_order".to_string(), format!("{worst_order}")));
    write_run_manifest(dir, cfg, started, &extra)?;
    c1?;
    c2?;
    verdict.finish(dir)
}

fn static_run(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let e = build_exps(cfg)?;
    let s = StaticSingular::new(cfg.a_target, cfg.n, cfg.m)?;
    let grid = LogGrid::annulus(cfg.domain_r, cfg.pde_points_per_decade).unwrap();
    let u0 = RadialField::from_fn(grid.clone(), e, 0.0, |r| s.eval(r, 0.0))?;
    let boundary = BoundarySpec::from_field(Arc::new(s));
    let traj = simulate(&u0, &boundary, (0.0, 1.0), &[0.5, 1.0], &scheme_options(cfg))?;
    let drift = traj
        .snapshots
        .iter()
        .flat_map(|snap| snap.iter().zip(&u0.values))
        .map(|(u, u0)| ((u - u0) / u0).abs())
        .fold(0.0f64, f64::max);
    io::write_trajectory_snapshots(dir, &traj)?;

    let mut verdict = Verdict::new(cfg.strict);
    let check = verdict.absorb_check("static_solution_drift", drift, 1e-6);
    let mut extra = scheme_manifest(&traj);
    extra.push(("drift".to_string(), format!("{drift}")));
    write_run_manifest(dir, cfg, started, &extra)?;
    check?;
    verdict.finish(dir)
}

fn ulambda_run(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let e = build_exps(cfg)?;
    let p = solve_cfg_profile(cfg, &e)?;
    let sol = SelfSimilarSolution::new(p.clone());
    let t_end = std::f64::consts::E;

    // coarse/fine pair for the Richardson error estimate
    let mut errors = Vec::new();
    let mut diffs: Vec<Vec<f64>> = Vec::new();
    let mut extra = Vec::new();
    for ppd in [cfg.pde_points_per_decade / 2, cfg.pde_points_per_decade] {
        let grid = LogGrid::annulus(cfg.domain_r, ppd).unwrap();
        let u0 = RadialField::from_fn(grid.clone(), e, 1.0, |r| sol.eval(r, 1.0))?;
        let boundary = BoundarySpec::from_field(Arc::new(sol.clone()));
        let traj = simulate(&u0, &boundary, (1.0, t_end), &[t_end], &scheme_options(cfg))?;
        let last = traj.snapshots.last().unwrap().clone();
        let err = last
            .iter()
            .zip(grid.radii())
            .map(|(u, &r)| ((u - sol.eval(r, t_end)) / sol.eval(r, t_end)).abs())
            .fold(0.0f64, f64::max);
        errors.push(err);
        diffs.push(last);
        if ppd == cfg.pde_points_per_decade {
            io::write_trajectory_snapshots(dir, &traj)?;
            extra = scheme_manifest(&traj);
        }
    }
    let coarse_on_fine: f64 = diffs[0]
        .iter()
        .enumerate()
        .map(|(i, u)| ((diffs[1][2 * i] - u) / diffs[1][2 * i]).abs())
        .fold(0.0f64, f64::max);
    let discretisation_estimate = coarse_on_fine / 3.0; // second-order Richardson
    let budget = p.far.rel_uncertainty() + 5.0 * discretisation_estimate;

    let mut verdict = Verdict::new(cfg.strict);
    let check = verdict.absorb_check("ulambda_self_consistency", errors[1], budget);
    extra.push(("final_error".to_string(), format!("{}", errors[1])));
    extra.push(("profile_tolerance".to_string(), format!("{}", p.far.rel_uncertainty())));
    extra.push(("discretisation_estimate".to_string(), format!("{discretisation_estimate}")));
    extra.push(("budget".to_string(), format!("{budget}")));
    write_run_manifest(dir, cfg, started, &extra)?;
    check?;
    verdict.finish(dir)
}

fn converge_run(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let e = build_exps(cfg)?;
    if !e.asymptotics_mode() {
        return Err(CliError::Config(ConfigError {
            line: None,
            message: format!(
                "convergence mode needs gamma < n, got gamma = {} >= n = {}",
                cfg.gamma, cfg.n
            ),
        }));
    }
    // run at the normalised family member (lambda = 1, A0 = measured a0):
    // its transition region sits inside the annulus, which is where the
    // convergence mechanism lives
    let p = solve_cfg_profile(cfg, &e)?.rescaled_to_a0()?;
    let grid = LogGrid::annulus(cfg.domain_r, cfg.pde_points_per_decade).unwrap();
    let bump = seeded_bump(cfg.seed, (1.0, 2.0));
    let amplitude = cfg.bump;
    let u0 = RadialField::from_fn(grid.clone(), e, 0.0, |r| {
        p.eval_f_lambda(r) * (1.0 + amplitude * bump(r))
    })?;
    let n_snaps = (cfg.tau_end / cfg.snapshot_dtau).round() as usize;
    let taus: Vec<f64> = (0..=n_snaps).map(|k| cfg.snapshot_dtau * k as f64).collect();
    let opts = scheme_options(cfg);
    let rt = simulate_rescaled(&u0, &BoundarySpec::frozen(), (0.0, cfg.tau_end), &taus, &opts)?;

    // unperturbed companion pins the discretisation floor of the series
    let v0 = RadialField::from_fn(grid.clone(), e, 0.0, |r| p.eval_f_lambda(r))?;
    let rt_floor = simulate_rescaled(&v0, &BoundarySpec::frozen(), (0.0, cfg.tau_end), &taus, &opts)?;

    let w = WeightedNorm::convergence(&e, grid.r_min(), grid.r_max())?;
    let compact = (cfg.compact_lo, cfg.compact_hi);
    let series = convergence_to_profile(&rt, &p, &w, compact)?;
    let floor_series = convergence_to_profile(&rt_floor, &p, &w, compact)?;
    io::write_convergence_series(&dir.join("series.csv"), &series)?;
    io::write_convergence_series(&dir.join("floor.csv"), &floor_series)?;

    let l1_floor = *floor_series.l1.last().unwrap();
    let sup_floor = *floor_series.sup_compact.last().unwrap();
    let ratio = series.final_over_initial();

    let mut verdict = Verdict::new(cfg.strict);
    let c1 = verdict.absorb_check("l1_final_over_initial", ratio, cfg.ratio_threshold);
    let strict_l1 = series.strictly_decreasing_above(2.0 * l1_floor);
    let c2 = verdict.absorb_check("l1_strictly_decreasing", if strict_l1 { 0.0 } else { 1.0 }, 0.5);
    let strict_sup = series
        .sup_compact
        .windows(2)
        .all(|pq| pq[0] <= 2.0 * sup_floor || pq[1] < pq[0]);
    let c3 = verdict.absorb_check("sup_strictly_decreasing", if strict_sup { 0.0 } else { 1.0 }, 0.5);
    write_run_manifest(
        dir,
        cfg,
        started,
        &[
            ("boundary".to_string(), rt.boundary_label.clone()),
            ("grid_ds".to_string(), format!("{}", rt.scheme.ds)),
            ("dt_nominal".to_string(), format!("{}", rt.scheme.dt_nominal)),
            ("steps".to_string(), format!("{}", rt.scheme.steps)),
            ("l1_initial".to_string(), format!("{}", series.l1[0])),
            ("l1_final".to_string(), format!("{}", series.l1.last().unwrap())),
            ("final_over_initial".to_string(), format!("{ratio}")),
            ("l1_floor".to_string(), format!("{l1_floor}")),
            ("sup_floor".to_string(), format!("{sup_floor}")),
        ],
    )?;
    c1?;
    c2?;
    c3?;
    verdict.finish(dir)
}

fn sweep_run(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let mut jobs: Vec<(f64, PathBuf, RunConfig)> = Vec::new();
    for &gamma in &cfg.sweep_gammas {
        let mut sub = cfg.clone();
        sub.gamma = gamma;
        sub.command = Some(Command::Profile);
        let dir = cfg.out_dir.join(format!("gamma_{gamma}"));
        sub.out_dir = dir.clone();
        jobs.push((gamma, dir, sub));
    }
    let mut results: Vec<(f64, Option<String>)> = Vec::new();
    for chunk in jobs.chunks(cfg.workers.max(1)) {
        let handles: Vec<_> = chunk
            .iter()
            .map(|(gamma, dir, sub)| {
                let (gamma, dir, sub) = (*gamma, dir.clone(), sub.clone());
                std::thread::spawn(move || {
                    fs::create_dir_all(&dir).map_err(CliError::from)?;
                    profile_run(&sub, &dir)?;
                    Ok::<f64, CliError>(gamma)
                })
            })
            .collect();
        for (handle, (gamma, _, _)) in handles.into_iter().zip(chunk) {
            match handle.join() {
                Ok(Ok(_)) => results.push((*gamma, None)),
                Ok(Err(err)) => results.push((*gamma, Some(format!("{err}")))),
                Err(_) => results.push((*gamma, Some("worker panicked".to_string()))),
            }
        }
    }
    let mut extra = Vec::new();
    let mut failed = Vec::new();
    for (gamma, err) in &results {
        match err {
            None => extra.push((format!("gamma_{gamma}"), "pass".to_string())),
            Some(msg) => {
                extra.push((format!("gamma_{gamma}"), format!("fail: {msg}")));
                failed.push(*gamma);
            }
        }
    }
    write_run_manifest(&cfg.out_dir, cfg, started, &extra)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Diagnostic(format!(
            "{} of {} sweep runs failed (gammas {:?})",
            failed.len(),
            results.len(),
            failed
        )))
    }
}
