//! Monotone cubic interpolation and power-law extension for profiles.
//!
//! Profile curves are power laws at both ends, so interpolation happens in
//! (log r, log f) where both asymptotic regimes are exactly linear. Inside
//! the sampled range a Fritsch-Carlson monotone cubic (PCHIP) is used;
//! outside, the curve is extended by its asymptotic power law with the
//! constant matched at the endpoint so the evaluation is continuous.

/// PCHIP interpolant on a strictly increasing abscissa.
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    /// Builds the interpolant. `x` must be strictly increasing and have at
    /// least two points.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len());
        assert!(x.len() >= 2);
        let n = x.len();
        let mut h = vec![0.0; n - 1];
        let mut slope = vec![0.0; n - 1];
        for i in 0..n - 1 {
            h[i] = x[i + 1] - x[i];
            assert!(h[i] > 0.0, "abscissa must be strictly increasing");
            slope[i] = (y[i + 1] - y[i]) / h[i];
        }
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = slope[0];
            d[1] = slope[0];
        } else {
            // Fritsch-Carlson: weighted harmonic mean where slopes agree in
            // sign, zero otherwise. Endpoints use the shape-preserving
            // three-point formula.
            for i in 1..n - 1 {
                let (s0, s1) = (slope[i - 1], slope[i]);
                if s0 * s1 > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / s0 + w2 / s1);
                }
            }
            d[0] = edge_derivative(h[0], h[1], slope[0], slope[1]);
            d[n - 1] = edge_derivative(h[n - 2], h[n - 3], slope[n - 2], slope[n - 3]);
        }
        Self { x, y, d }
    }

    pub fn eval(&self, xq: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.binary_search_by(|v| v.partial_cmp(&xq).unwrap()) {
            Ok(i) => return self.y[i],
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let t = (xq - self.x[i]) / h;
        let (y0, y1, d0, d1) = (self.y[i], self.y[i + 1], self.d[i], self.d[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + h * d0 * (t3 - 2.0 * t2 + t)
            + y1 * (-2.0 * t3 + 3.0 * t2)
            + h * d1 * (t3 - t2)
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }
}

fn edge_derivative(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d * s0 <= 0.0 {
        0.0
    } else if s0 * s1 < 0.0 && d.abs() > 3.0 * s0.abs() {
        3.0 * s0
    } else {
        d
    }
}

/// Interpolant for a positive radial curve with power-law tails.
///
/// Inside [r_lo, r_hi] this is PCHIP in log-log; outside it continues as
/// the certified asymptotic power law C * r^p with the constant supplied
/// by the caller (the extrapolated limit rather than the endpoint sample,
/// so the extension is exact in the respective limit). The switch radii
/// are exposed for run manifests.
#[derive(Debug, Clone)]
pub struct PowerLawCurve {
    inner: Pchip,
    /// (exponent, constant) for r < r_lo
    low: (f64, f64),
    /// (exponent, constant) for r > r_hi
    high: (f64, f64),
    r_lo: f64,
    r_hi: f64,
}

impl PowerLawCurve {
    /// `low` / `high` are (exponent p, constant C) of the asymptotics
    /// f ~ C r^p below/above the sampled range.
    pub fn new(radii: &[f64], values: &[f64], low: (f64, f64), high: (f64, f64)) -> Self {
        let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
        let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        Self {
            inner: Pchip::new(lx, ly),
            low,
            high,
            r_lo: radii[0],
            r_hi: *radii.last().unwrap(),
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r < self.r_lo {
            self.low.1 * r.powf(self.low.0)
        } else if r > self.r_hi {
            self.high.1 * r.powf(self.high.0)
        } else {
            self.inner.eval(r.ln()).exp()
        }
    }

    /// Radii where evaluation switches to the power-law extension.
    pub fn switch_radii(&self) -> (f64, f64) {
        (self.r_lo, self.r_hi)
    }
}
