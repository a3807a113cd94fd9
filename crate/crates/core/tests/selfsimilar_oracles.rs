//! Oracle checks of the self-similar solution family built from a solved
//! profile.

use std::sync::OnceLock;

use fde_singular::exponents::ExponentSet;
use fde_singular::profile::{solve_profile, SelfSimilarProfile, SolveOptions};
use fde_singular::selfsimilar::{residual_heat_operator, RadialSpaceTimeField, SelfSimilarSolution};

fn exps() -> ExponentSet {
    ExponentSet::derive(3, 0.2, 2.75).unwrap()
}

fn profile() -> &'static SelfSimilarProfile {
    static CELL: OnceLock<SelfSimilarProfile> = OnceLock::new();
    CELL.get_or_init(|| solve_profile(1.0, &exps(), &SolveOptions::default()).unwrap())
}

#[test]
fn eval_u_definition_and_self_similarity() {
    let sol = SelfSimilarSolution::new(profile().clone());
    // at t = 1 the solution is the profile itself
    for r in [0.01, 0.3, 1.0, 7.0, 50.0] {
        let u = sol.eval_u(r, 1.0).unwrap();
        assert!(((u - sol.eval_f(r)) / u).abs() < 1e-14);
    }
    // U(x, t) = t^{-alpha} U(t^{-beta} x, 1)
    let e = exps();
    for (r, t) in [(0.5, 0.7), (1.0, 2.0), (3.0, 1.3), (10.0, 0.9)] {
        let lhs = sol.eval_u(r, t).unwrap();
        let rhs = t.powf(-e.alpha) * sol.eval_u(t.powf(-e.beta) * r, 1.0).unwrap();
        assert!(
            ((lhs - rhs) / rhs).abs() < 1e-12,
            "self-similarity identity broken at (r,t)=({r},{t})"
        );
    }
    assert!(sol.eval_u(0.0, 1.0).is_err());
    assert!(sol.eval_u(1.0, 0.0).is_err());
    assert!(sol.eval_u(1.0, -1.0).is_err());
}

#[test]
fn small_time_trace_recovers_origin_constant() {
    // lim_{t->0} U_lambda(x, t) = A |x|^{-gamma}: at t = 1e-6 the rescaled
    // argument sits deep in the certified origin extension, so the trace
    // matches A to the plateau tolerance
    let p = profile();
    let sol = SelfSimilarSolution::new(p.clone());
    let e = exps();
    for x in [0.5f64, 1.0, 2.0] {
        let trace = sol.eval_u(x, 1e-6).unwrap() * x.powf(e.gamma);
        let rel = ((trace - p.a) / p.a).abs();
        assert!(rel < 1e-3, "trace at x = {x} off by {rel:.3e}");
    }
}

#[test]
fn family_is_ordered_in_lambda() {
    let p = profile();
    let lo = SelfSimilarSolution::new(p.rescaled(0.6 * p.a0).unwrap());
    let hi = SelfSimilarSolution::new(p.rescaled(1.7 * p.a0).unwrap());
    assert!(lo.lambda > hi.lambda);
    for (r, t) in [(0.05, 0.5), (0.4, 1.0), (1.0, 2.0), (12.0, 0.8), (80.0, 1.5)] {
        assert!(
            lo.eval(r, t) <= hi.eval(r, t),
            "ordering broken at (r,t)=({r},{t})"
        );
    }
}

#[test]
fn u_lambda_heat_residual_within_budget() {
    // the profile is known only through sampled data, so the residual
    // carries the interpolation budget on top of the O(h^2) discretisation
    let sol = SelfSimilarSolution::new(profile().clone());
    let u = |r: f64, t: f64| sol.eval(r, t);
    for (r, t) in [(1.0, 1.0), (0.5, 1.0), (2.0, 1.5)] {
        let scale = sol.eval(r, t) / t;
        let r_coarse = residual_heat_operator(u, 3, 0.2, r, t, 0.04, 0.04) / scale;
        let r_fine = residual_heat_operator(u, 3, 0.2, r, t, 0.02, 0.02) / scale;
        let order = (r_coarse.abs() / r_fine.abs()).log2();
        assert!(
            order > 1.8,
            "residual not second order at (r,t)=({r},{t}): {order}"
        );
        assert!(
            r_fine.abs() < 5e-4,
            "residual {:.3e} beyond budget at (r,t)=({r},{t})",
            r_fine
        );
    }
}
