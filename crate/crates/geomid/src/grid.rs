use crate::error::{Error, Result};

/// Uniform evaluation grid on the real line.
///
/// The optional log-spaced sub-grid is for exponents that are periodic in
/// ln|t|: it adds `LOG_POINTS_PER_PERIOD` points per period of the given
/// order, symmetrically in ±t, so a sup over the grid cannot alias the
/// oscillation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub step: f64,
    pub log_subgrid: bool,
}

pub const LOG_POINTS_PER_PERIOD: usize = 128;

impl GridSpec {
    pub fn new(t_min: f64, t_max: f64, step: f64) -> Result<Self> {
        if !(t_min.is_finite() && t_max.is_finite() && step.is_finite()) {
            return Err(Error::invalid("grid bounds and step must be finite"));
        }
        if t_min >= t_max {
            return Err(Error::invalid("grid requires t_min < t_max"));
        }
        if step <= 0.0 {
            return Err(Error::invalid("grid step must be > 0"));
        }
        let g = GridSpec { t_min, t_max, step, log_subgrid: false };
        if g.len() < 3 {
            return Err(Error::invalid("grid must contain at least 3 points"));
        }
        Ok(g)
    }

    /// t in [-10, 10], step 0.05: 401 symmetric points.
    pub fn default_grid() -> Self {
        GridSpec::new(-10.0, 10.0, 0.05).expect("default grid is valid")
    }

    pub fn with_log_subgrid(mut self) -> Self {
        self.log_subgrid = true;
        self
    }

    pub fn len(&self) -> usize {
        // absorb float fuzz at an exact division without admitting an extra
        // point beyond t_max
        let raw = (self.t_max - self.t_min) / self.step;
        (raw + raw * 1e-12 + 1e-12).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.t_min + k as f64 * self.step).collect()
    }

    /// Linear points plus, when the flag is set, a ±log-spaced sub-grid with
    /// `LOG_POINTS_PER_PERIOD` points per period ln(1/order_b), spanning from
    /// the linear step scale up to max(|t_min|, t_max).
    pub fn points_for_order(&self, order_b: Option<f64>) -> Vec<f64> {
        let mut pts = self.points();
        if let (true, Some(b)) = (self.log_subgrid, order_b) {
            if b > 0.0 && b < 1.0 {
                let period = (1.0 / b).ln();
                let hi = self.t_max.abs().max(self.t_min.abs());
                let lo = self.step.min(hi / 2.0);
                let dlog = period / LOG_POINTS_PER_PERIOD as f64;
                let count = ((hi / lo).ln() / dlog).ceil() as usize;
                for k in 0..=count {
                    let t = lo * (k as f64 * dlog).exp();
                    if t > hi {
                        break;
                    }
                    pts.push(t);
                    pts.push(-t);
                }
            }
        }
        pts
    }
}
