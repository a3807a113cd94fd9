//! Log-uniform radial grids.
//!
//! Both the profile construction and the annulus simulator resolve power
//! laws over many decades, so everything lives on grids that are uniform
//! in s = log r.

use crate::error::{Error, Result};

/// A log-uniform grid on [r_min, r_max].
#[derive(Debug, Clone, PartialEq)]
pub struct LogGrid {
    radii: Vec<f64>,
    s_min: f64,
    ds: f64,
}

impl LogGrid {
    /// Builds a grid with the given resolution. The actual spacing is
    /// rounded so the endpoints are hit exactly.
    pub fn new(r_min: f64, r_max: f64, points_per_decade: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min) {
            return Err(Error::Range(format!(
                "grid needs 0 < r_min < r_max, got [{r_min}, {r_max}]"
            )));
        }
        if points_per_decade == 0 {
            return Err(Error::Range("points_per_decade must be positive".into()));
        }
        let decades = (r_max / r_min).log10();
        let cells = (decades * points_per_decade as f64).round().max(1.0) as usize;
        let s_min = r_min.ln();
        let s_max = r_max.ln();
        let ds = (s_max - s_min) / cells as f64;
        let radii = (0..=cells)
            .map(|i| match i {
                0 => r_min,
                i if i == cells => r_max,
                i => (s_min + ds * i as f64).exp(),
            })
            .collect();
        Ok(Self { radii, s_min, ds })
    }

    /// Grid for the annulus B_R \ B_{1/R}.
    pub fn annulus(r: f64, points_per_decade: usize) -> Result<Self> {
        if !(r > 1.0) {
            return Err(Error::Range(format!("annulus needs R > 1, got {r}")));
        }
        Self::new(1.0 / r, r, points_per_decade)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

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

    /// Uniform spacing in s = log r.
    pub fn ds(&self) -> f64 {
        self.ds
    }

    pub fn s(&self, i: usize) -> f64 {
        self.s_min + self.ds * i as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_and_spacing() {
        let g = LogGrid::new(1e-2, 1e2, 256).unwrap();
        assert_eq!(g.len(), 4 * 256 + 1);
        assert_eq!(g.r_min(), 1e-2);
        assert_eq!(g.r_max(), 1e2);
        let r = g.radii();
        for i in 1..r.len() {
            assert!((r[i] / r[i - 1] - (g.ds()).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(LogGrid::new(0.0, 1.0, 10).is_err());
        assert!(LogGrid::new(2.0, 1.0, 10).is_err());
        assert!(LogGrid::annulus(0.5, 10).is_err());
    }
}
