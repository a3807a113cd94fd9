//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Every tolerance is pinned in this file. The runs are desk-scale: the
//! heaviest criterion takes tens of seconds in an optimised build.

use std::process::Command as Process;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fde_singular::exponents::{ExponentSet, OriginRegime};
use fde_singular::grid::LogGrid;
use fde_singular::metrics::{contraction_series, convergence_to_profile, ConvergenceSeries, WeightedNorm};
use fde_singular::pde::{
    check_aronson_benilan, check_trapping, simulate, simulate_rescaled, BoundarySpec, RadialField,
    SchemeOptions, Trajectory,
};
use fde_singular::perturb::seeded_bump;
use fde_singular::profile::{
    invert_to_f, profile_diagnostics, solve_profile, DiagnosticOptions, SelfSimilarProfile,
    SolveOptions,
};
use fde_singular::selfsimilar::{
    BarenblattSolution, RadialSpaceTimeField, SelfSimilarSolution, StaticSingular,
};

fn verdict(criterion: u32, pass: bool, detail: String) {
    println!(
        "[acceptance] criterion {criterion:2}: {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn exps() -> ExponentSet {
    ExponentSet::derive(3, 0.2, 2.75).unwrap()
}

fn profile() -> &'static SelfSimilarProfile {
    static CELL: OnceLock<SelfSimilarProfile> = OnceLock::new();
    CELL.get_or_init(|| solve_profile(1.0, &exps(), &SolveOptions::default()).unwrap())
}

#[test]
fn criterion_01_exponent_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let n: u32 = rng.gen_range(3..=8);
        let nf = f64::from(n);
        let m = rng.gen_range(1e-3..(nf - 2.0) / nf * 0.999);
        let lo = 2.0 / (1.0 - m);
        let hi = (nf - 2.0) / m;
        let gamma = lo + rng.gen_range(1e-6..1.0) * (hi - lo) * 0.999;
        let e = match ExponentSet::derive(n, m, gamma) {
            Ok(e) => e,
            Err(err) => panic!("admissible triple rejected: ({n}, {m}, {gamma}): {err}"),
        };
        let scale = e.alpha.abs().max(1.0);
        let identities = [
            ((e.m - 1.0) * e.alpha + 2.0 * e.beta - e.rho1,
             scale),
            (e.alpha - e.beta * e.gamma, scale),
            (e.alpha_tilde / e.beta_tilde - ((nf - 2.0) / m - gamma),
             ((nf - 2.0) / m).abs()),
            (e.delta0 - 0.5 * (1.0 - e.delta1), 1.0),
            (e.mu1 - (nf - gamma).max(0.0), 1.0),
            (e.mu2 - (nf - 2.0 - m * gamma), 1.0),
        ];
        for (err, s) in identities {
            worst = worst.max(err.abs() / s);
        }
        assert!(e.mu1 >= 0.0 && e.mu1 < e.mu2 && e.mu2 < nf - 2.0);
        assert!(e.alpha < 0.0 && e.beta < 0.0 && e.alpha_tilde > 0.0 && e.beta_tilde > 0.0);
        let expected = if e.delta1 >= 0.0 {
            OriginRegime::HoelderOrigin
        } else {
            OriginRegime::SmoothOrigin
        };
        assert_eq!(e.regime, expected);
    }
    // boundary triples rejected
    let rejected = ExponentSet::derive(3, 0.2, 2.5).is_err()
        && ExponentSet::derive(3, 0.2, 5.0).is_err()
        && ExponentSet::derive(3, 1.0 / 3.0, 3.0).is_err()
        && ExponentSet::derive(2, 0.1, 3.0).is_err();
    verdict(
        1,
        worst < 1e-12 && rejected,
        format!("10^4 random triples, worst identity residual {worst:.3e}; boundary rejected: {rejected}"),
    );
}

#[test]
fn criterion_02_profile_construction() {
    let p = profile();
    let mut sign_ok = true;
    let kt = p.exps.k_tilde;
    let mut w1_prev = 0.0;
    for i in 0..p.g1.len() {
        let (r, g, gp) = (p.g1.radii[i], p.g1.values[i], p.g1.derivs[i]);
        sign_ok &= gp < 0.0;
        sign_ok &= g + kt * r * gp > 0.0;
        let w1 = r * r * g.powf(2.0 * kt);
        sign_ok &= w1 > w1_prev;
        w1_prev = w1;
    }
    let spread = p.far.rel_uncertainty();
    // inversion round trip at matching radii
    let back = invert_to_f(&p.f1);
    let mut rt_worst: f64 = 0.0;
    for i in 0..p.g1.len() {
        rt_worst = rt_worst.max(((back.values[i] - p.g1.values[i]) / p.g1.values[i]).abs());
        rt_worst = rt_worst.max(((back.radii[i] - p.g1.radii[i]) / p.g1.radii[i]).abs());
    }
    verdict(
        2,
        sign_ok && spread < 1e-3 && rt_worst < 1e-12,
        format!(
            "g'<0, h1>0, w1 increasing: {sign_ok}; plateau spread {spread:.3e} < 1e-3; round trip {rt_worst:.3e} < 1e-12"
        ),
    );
}

#[test]
fn criterion_03_uniqueness_and_scaling() {
    let e = exps();
    let p1 = profile();
    // eta = 2 run extracted at the family-covariant depth
    let nu = 2f64.powf(1.0 / (e.two_over_1m() - e.far_decay()));
    let opts2 = SolveOptions {
        eta: 2.0,
        r_max: Some(nu * p1.far.r_max),
        ..SolveOptions::default()
    };
    let p2 = solve_profile(1.0, &e, &opts2).unwrap();
    let p1r = p1.rescaled_to_a0().unwrap();
    let p2r = p2.rescaled(p1.a0).unwrap();
    let mut agree: f64 = 0.0;
    for i in 0..400 {
        let r = 10f64.powf(-3.0 + 6.0 * i as f64 / 399.0);
        let (a, b) = (p1r.eval_f_lambda(r), p2r.eval_f_lambda(r));
        agree = agree.max(((a - b) / a).abs());
    }
    // rescaling identity at A = 2 A0: lambda = 2^{-4}, D_A = 2^{10}
    let dbl = p1.rescaled(2.0 * p1.a0).unwrap();
    let lam_err = ((dbl.lambda - 0.0625) / 0.0625).abs();
    let da_err = ((dbl.d_a - 1024.0) / 1024.0).abs();
    verdict(
        3,
        agree < 1e-5 && lam_err < 1e-6 && da_err < 1e-6,
        format!("eta=2 vs eta=1 worst {agree:.3e} < 1e-5; lambda residual {lam_err:.1e}, D_A residual {da_err:.1e} < 1e-6"),
    );
}

#[test]
fn criterion_04_derivative_limits() {
    let report = profile_diagnostics(profile(), &DiagnosticOptions::default());
    let origin = report.entry("origin_derivative_limit").unwrap();
    let far = report.entry("far_derivative_limit").unwrap();
    verdict(
        4,
        origin.passed && far.passed,
        format!(
            "origin plateau residual {:.3e}, far plateau residual {:.3e} (tolerance 1e-3)",
            origin.worst, far.worst
        ),
    );
}

#[test]
fn criterion_05_pde_oracles() {
    let e = exps();
    // static singular solution: exact steady state of the scheme
    let s = StaticSingular::new(1.0, 3, 0.2).unwrap();
    let grid = LogGrid::annulus(100.0, 512).unwrap();
    let u0 = RadialField::from_fn(grid.clone(), e, 0.0, |r| s.eval(r, 0.0)).unwrap();
    let traj = simulate(
        &u0,
        &BoundarySpec::from_field(Arc::new(s)),
        (0.0, 1.0),
        &[0.5, 1.0],
        &SchemeOptions::default(),
    )
    .unwrap();
    let drift = traj
        .snapshots
        .iter()
        .flat_map(|snap| snap.iter().zip(&u0.values))
        .map(|(u, u0)| ((u - u0) / u0).abs())
        .fold(0.0f64, f64::max);

    // Barenblatt k=1, T=2 over [0.5, 1.5]: three refinements
    let b = BarenblattSolution::new(3, 0.2, 2.0, 1.0).unwrap();
    let mut errs = Vec::new();
    for ppd in [128usize, 256, 512] {
        let grid = LogGrid::annulus(100.0, ppd).unwrap();
        let u0 = RadialField::from_fn(grid.clone(), e, 0.5, |r| b.eval(r, 0.5)).unwrap();
        let traj = simulate(
            &u0,
            &BoundarySpec::from_field(Arc::new(b)),
            (0.5, 1.5),
            &[1.5],
            &SchemeOptions::default(),
        )
        .unwrap();
        errs.push(
            traj.snapshots
                .last()
                .unwrap()
                .iter()
                .zip(grid.radii())
                .map(|(u, &r)| ((u - b.eval(r, 1.5)) / b.eval(r, 1.5)).abs())
                .fold(0.0f64, f64::max),
        );
    }
    let order = errs
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::INFINITY, f64::min);
    verdict(
        5,
        drift <= 1e-6 && errs[2] <= 1e-3 && order >= 1.9,
        format!(
            "static drift {drift:.3e} <= 1e-6; Barenblatt L_inf {:.3e} <= 1e-3 at 512/decade, order {order:.3} >= 1.9",
            errs[2]
        ),
    );
}

#[test]
fn criterion_06_self_consistency() {
    let e = exps();
    let p1 = profile().rescaled_to_a0().unwrap();
    let sol = SelfSimilarSolution::new(p1);
    let t_end = std::f64::consts::E;
    let mut finals = Vec::new();
    for ppd in [256usize, 512] {
        let grid = LogGrid::annulus(100.0, ppd).unwrap();
        let u0 = RadialField::from_fn(grid.clone(), e, 1.0, |r| sol.eval(r, 1.0)).unwrap();
        let traj = simulate(
            &u0,
            &BoundarySpec::from_field(Arc::new(sol.clone())),
            (1.0, t_end),
            &[t_end],
            &SchemeOptions::default(),
        )
        .unwrap();
        finals.push((grid, traj.snapshots.last().unwrap().clone()));
    }
    let (g_fine, u_fine) = &finals[1];
    let err = u_fine
        .iter()
        .zip(g_fine.radii())
        .map(|(u, &r)| ((u - sol.eval(r, t_end)) / sol.eval(r, t_end)).abs())
        .fold(0.0f64, f64::max);
    let (_, u_coarse) = &finals[0];
    let diff = u_coarse
        .iter()
        .enumerate()
        .map(|(i, u)| ((u_fine[2 * i] - u) / u_fine[2 * i]).abs())
        .fold(0.0f64, f64::max);
    let budget = profile().far.rel_uncertainty() + 5.0 * diff / 3.0;
    verdict(
        6,
        err <= budget,
        format!("U_lambda drift at t=e: {err:.3e} within budget {budget:.3e} (profile tol + 5x discretisation estimate)"),
    );
}

/// Trapped pair used by criteria 7 and 8: initial data pinched between
/// U_{lambda1} and U_{lambda2}, boundary data from the lower envelope.
fn trapped_traj(seed: u64, amp: f64) -> (Trajectory, SelfSimilarSolution, SelfSimilarSolution) {
    let e = exps();
    let p = profile();
    let grid = LogGrid::annulus(100.0, 256).unwrap();
    let sol_lo = SelfSimilarSolution::new(p.rescaled(0.8 * p.a0).unwrap());
    let sol_hi = SelfSimilarSolution::new(p.rescaled(1.25 * p.a0).unwrap());
    let bump = seeded_bump(seed, (0.5, 5.0));
    let u0 = RadialField::from_fn(grid, e, 1.0, |r| {
        let (lo, hi) = (sol_lo.eval(r, 1.0), sol_hi.eval(r, 1.0));
        (lo * hi).sqrt() * (1.0 + amp * bump(r))
    })
    .unwrap();
    let boundary = BoundarySpec::from_field(Arc::new(sol_lo.clone()));
    let times: Vec<f64> = (1..=8).map(|k| 1.0 + 0.2 * k as f64).collect();
    let traj = simulate(&u0, &boundary, (1.0, 2.6), &times, &SchemeOptions::default()).unwrap();
    (traj, sol_lo, sol_hi)
}

#[test]
fn criterion_07_trapping_and_aronson_benilan() {
    let (traj, sol_lo, sol_hi) = trapped_traj(11, 0.10);
    let trap = check_trapping(&traj, &sol_lo, &sol_hi, 1e-8, 1e-6).unwrap();
    let ab = check_aronson_benilan(&traj, 1e-8, 1e-6).unwrap();
    let worst_margin = trap
        .entries
        .iter()
        .map(|e| e.worst)
        .fold(f64::NEG_INFINITY, f64::max);
    verdict(
        7,
        trap.passed() && ab.passed(),
        format!(
            "trapping worst normalized violation {worst_margin:.3e} <= 1e-8; AB worst residual {:.3e} <= 1e-8 (both with 1e-6 relative slack)",
            ab.entries[0].worst
        ),
    );
}

#[test]
fn criterion_08_weighted_l1_contraction() {
    let e = exps();
    // three trapped pairs, five mu values across (mu1, mu2) = (0.25, 0.45)
    let pairs = [(11u64, 0.10, 12u64, 0.08), (21, 0.07, 22, 0.05), (31, 0.09, 32, 0.04)];
    let mut worst_uptick = f64::NEG_INFINITY;
    for (s1, a1, s2, a2) in pairs {
        let (u, _, sol_hi) = trapped_traj(s1, a1);
        // second member: extra perturbation kept under the upper envelope
        let p = profile();
        let sol_lo = SelfSimilarSolution::new(p.rescaled(0.8 * p.a0).unwrap());
        let grid = u.grid.clone();
        let bump1 = seeded_bump(s1, (0.5, 5.0));
        let bump2 = seeded_bump(s2, (1.0, 2.0));
        let v0 = RadialField::from_fn(grid.clone(), e, 1.0, |r| {
            let (lo, hi) = (sol_lo.eval(r, 1.0), sol_hi.eval(r, 1.0));
            ((lo * hi).sqrt() * (1.0 + a1 * bump1(r)) * (1.0 + a2 * bump2(r))).min(hi * 0.999)
        })
        .unwrap();
        let boundary = BoundarySpec::from_field(Arc::new(sol_lo));
        let times: Vec<f64> = (1..=8).map(|k| 1.0 + 0.2 * k as f64).collect();
        let v = simulate(&v0, &boundary, (1.0, 2.6), &times, &SchemeOptions::default()).unwrap();
        for mu in [0.27, 0.31, 0.35, 0.39, 0.43] {
            let w = WeightedNorm::contraction(&e, mu, grid.r_min(), grid.r_max()).unwrap();
            let s = contraction_series(&u, &v, &w).unwrap();
            assert!(
                s.nonincreasing,
                "pair ({s1},{s2}) mu={mu}: uptick {:.3e}",
                s.worst_uptick
            );
            worst_uptick = worst_uptick.max(s.worst_uptick);
        }
    }
    verdict(
        8,
        worst_uptick <= 1e-6,
        format!("3 pairs x 5 mu in (mu1, mu2): worst uptick beyond flux bar {worst_uptick:.3e} <= 1e-6"),
    );
}

/// Convergence run shared by criteria 9 and 10: perturbed profile under
/// the rescaled flow at 512 points/decade, with an unperturbed companion
/// pinning the discretisation floor of the series.
fn convergence_run() -> &'static (ConvergenceSeries, ConvergenceSeries) {
    static CELL: OnceLock<(ConvergenceSeries, ConvergenceSeries)> = OnceLock::new();
    CELL.get_or_init(|| {
        let e = exps();
        let p1 = profile().rescaled_to_a0().unwrap();
        let grid = LogGrid::annulus(100.0, 512).unwrap();
        let taus: Vec<f64> = (0..=12).map(|k| 0.25 * k as f64).collect();
        let bump = seeded_bump(5, (1.0, 2.0));
        let u0 = RadialField::from_fn(grid.clone(), e, 0.0, |r| {
            p1.eval_f_lambda(r) * (1.0 + 0.2 * bump(r))
        })
        .unwrap();
        let rt = simulate_rescaled(
            &u0,
            &BoundarySpec::frozen(),
            (0.0, 3.0),
            &taus,
            &SchemeOptions::default(),
        )
        .unwrap();
        let v0 = RadialField::from_fn(grid.clone(), e, 0.0, |r| p1.eval_f_lambda(r)).unwrap();
        let rtf = simulate_rescaled(
            &v0,
            &BoundarySpec::frozen(),
            (0.0, 3.0),
            &taus,
            &SchemeOptions::default(),
        )
        .unwrap();
        let w = WeightedNorm::convergence(&e, grid.r_min(), grid.r_max()).unwrap();
        let series = convergence_to_profile(&rt, &p1, &w, (0.1, 10.0)).unwrap();
        let floor = convergence_to_profile(&rtf, &p1, &w, (0.1, 10.0)).unwrap();
        (series, floor)
    })
}

/// Calibrated horizon of the desk-scale convergence run (first calibrated
/// run pinned tau* = 3.0 with final/initial ~ 7.4e-2; regression since).
const TAU_STAR: f64 = 3.0;

#[test]
fn criterion_09_rescaled_convergence() {
    let (series, floor) = convergence_run();
    assert!((series.taus.last().unwrap() - TAU_STAR).abs() < 1e-12);
    let ratio = series.final_over_initial();
    let l1_floor = *floor.l1.last().unwrap();
    let sup_floor = *floor.sup_compact.last().unwrap();
    let l1_decreasing = series.strictly_decreasing_above(2.0 * l1_floor);
    let sup_decreasing = series
        .sup_compact
        .windows(2)
        .all(|pq| pq[0] <= 2.0 * sup_floor || pq[1] < pq[0]);
    verdict(
        9,
        ratio < 0.1 && l1_decreasing && sup_decreasing,
        format!(
            "final/initial {ratio:.4} < 0.1 by tau* = {TAU_STAR}; L1 and compact-sup series strictly decreasing above the discretisation floor ({l1_floor:.2e}, {sup_floor:.2e})"
        ),
    );
}

#[test]
fn criterion_10_strong_contraction() {
    // strictly decreasing between every pair of recorded tau values while
    // the difference is nonzero; "nonzero" is bounded below by twice the
    // companion floor, beneath which the true difference is
    // indistinguishable from discretisation
    let (series, floor) = convergence_run();
    let l1_floor = *floor.l1.last().unwrap();
    let mut strict = true;
    let mut worst_pair = (0.0, 0.0);
    for pq in series.l1.windows(2) {
        if pq[0] > 2.0 * l1_floor && pq[1] >= pq[0] {
            strict = false;
            worst_pair = (pq[0], pq[1]);
        }
    }
    verdict(
        10,
        strict,
        format!(
            "every recorded step strictly decreases above 2x floor ({:.2e}); worst offending pair {worst_pair:?}",
            2.0 * l1_floor
        ),
    );
}

#[test]
fn criterion_11_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_fde-singular");
    let base = std::env::temp_dir().join(format!("fde_acc_det_{}", std::process::id()));
    let (d1, d2) = (base.join("a"), base.join("b"));
    for dir in [&d1, &d2] {
        std::fs::create_dir_all(dir).unwrap();
        let status = Process::new(bin)
            .args([
                "profile",
                "n=3",
                "m=0.2",
                "gamma=2.75",
                "A=1",
                "--out",
                dir.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success(), "profile run failed");
    }
    let mut identical = true;
    let mut detail = String::new();
    for name in ["profile.txt", "diagnostics.txt"] {
        let a = std::fs::read(d1.join(name)).unwrap();
        let b = std::fs::read(d2.join(name)).unwrap();
        if a != b {
            identical = false;
            detail = format!("{name} differs");
        }
    }
    // manifests must agree apart from the wall clock and the output path
    let strip = |p: &std::path::Path| -> Vec<String> {
        std::fs::read_to_string(p.join("manifest.txt"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("wall_clock") && !l.starts_with("run.out"))
            .map(|l| l.to_string())
            .collect()
    };
    if strip(&d1) != strip(&d2) {
        identical = false;
        detail = "manifest differs beyond wall clock".to_string();
    }
    std::fs::remove_dir_all(&base).ok();
    verdict(
        11,
        identical,
        if identical {
            "repeated CLI runs byte-identical (manifest compared modulo wall clock)".to_string()
        } else {
            detail
        },
    );
}
