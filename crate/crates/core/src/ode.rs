//! Adaptive explicit Runge-Kutta integration.
//!
//! A plain Dormand-Prince 5(4) pair with PI step control, specialised to
//! the small fixed-dimension systems used by the profile continuation. The
//! only extra feature is exact landing on a sorted list of output points.

use crate::error::{Error, Result};

/// Dormand-Prince coefficients (the classic DOPRI5 tableau).
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-14,
            h_init: 1e-4,
            h_min: 1e-13,
            h_max: 0.25,
        }
    }
}

/// Integrates dy/dx = f(x, y) from `x0` to `x_end`, calling `observe` at
/// every point of the sorted list `x_out` (each hit exactly). Returns the
/// final state.
pub fn integrate<const D: usize, F, O>(
    mut f: F,
    x0: f64,
    x_end: f64,
    y0: [f64; D],
    x_out: &[f64],
    opts: &OdeOptions,
    mut observe: O,
) -> Result<[f64; D]>
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
    O: FnMut(f64, &[f64; D]),
{
    assert!(x_end > x0, "integration direction must be increasing");
    let mut x = x0;
    let mut y = y0;
    let mut h = opts.h_init.min(opts.h_max);
    let mut k0 = f(x, &y);
    let mut next_out = 0usize;
    while next_out < x_out.len() && x_out[next_out] <= x0 + 1e-15 * x0.abs().max(1.0) {
        observe(x_out[next_out], &y);
        next_out += 1;
    }
    let mut err_prev: f64 = 1.0;

    while x < x_end {
        let mut target = x_end;
        if next_out < x_out.len() {
            target = target.min(x_out[next_out]);
        }
        if x + h >= target {
            h = target - x;
        }
        let h_eff = h.max(opts.h_min);

        // stages
        let mut k = [[0.0; D]; 7];
        k[0] = k0;
        for s in 0..6 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                let aij = A[s][j];
                if aij != 0.0 {
                    for d in 0..D {
                        ys[d] += h_eff * aij * kj[d];
                    }
                }
            }
            k[s + 1] = f(x + C[s] * h_eff, &ys);
        }
        // 5th order solution is stage sum with A[5] row; k[6] is FSAL
        let mut y5 = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            let a = A[5][j];
            if a != 0.0 {
                for d in 0..D {
                    y5[d] += h_eff * a * kj[d];
                }
            }
        }
        // error estimate
        let mut err: f64 = 0.0;
        for d in 0..D {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[d];
            }
            e *= h_eff;
            let sc = opts.atol + opts.rtol * y[d].abs().max(y5[d].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            return Err(Error::StepFailure(format!("non-finite error estimate at x={x}")));
        }

        if err <= 1.0 {
            x += h_eff;
            y = y5;
            k0 = k[6];
            while next_out < x_out.len()
                && x_out[next_out] <= x + 1e-12 * x.abs().max(1.0)
            {
                observe(x_out[next_out], &y);
                next_out += 1;
            }
            // PI controller
            let fac = 0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            h = (h_eff * fac.clamp(0.2, 5.0)).min(opts.h_max);
            err_prev = err.max(1e-4);
        } else {
            h = (h_eff * (0.9 * err.powf(-0.2)).max(0.1)).min(opts.h_max);
            if h < opts.h_min {
                return Err(Error::StepFailure(format!(
                    "step underflow (h={h:.3e}) at x={x}"
                )));
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_exponential() {
        let y = integrate(
            |_x, y: &[f64; 1]| [y[0]],
            0.0,
            1.0,
            [1.0],
            &[],
            &OdeOptions::default(),
            |_, _| {},
        )
        .unwrap();
        assert_relative_eq!(y[0], 1.0f64.exp(), max_relative = 1e-10);
    }

    #[test]
    fn hits_output_points() {
        let outs = [0.25, 0.5, 0.75];
        let mut seen = Vec::new();
        integrate(
            |x, _y: &[f64; 1]| [2.0 * x],
            0.0,
            1.0,
            [0.0],
            &outs,
            &OdeOptions::default(),
            |x, y| seen.push((x, y[0])),
        )
        .unwrap();
        assert_eq!(seen.len(), 3);
        for (x, y) in seen {
            assert_relative_eq!(y, x * x, epsilon = 1e-12);
        }
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let y = integrate(
            |_x, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            2.0 * std::f64::consts::PI,
            [1.0, 0.0],
            &[],
            &OdeOptions::default(),
            |_, _| {},
        )
        .unwrap();
        assert_relative_eq!(y[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(y[1], 0.0, epsilon = 1e-9);
    }
}
