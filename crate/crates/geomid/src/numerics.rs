//! Empirical characteristic functions, c.f. inversion to CDFs,
//! Kolmogorov-Smirnov distances, and convergence-rate fitting.

use num_complex::Complex64;

use crate::cf::CharFn;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::samplers::SampleBatch;

/// Sup distance between two c.f.'s over a grid, with the maximizing point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceReport {
    pub grid: GridSpec,
    pub sup_distance: f64,
    pub argmax_t: f64,
}

/// Empirical c.f. of a batch: (1/N) sum exp(i t x_j).
///
/// Values at the given grid points are tabulated; off-grid arguments fall
/// back to the direct O(N) sum, so the result is evaluable anywhere.
pub fn empirical_cf(batch: &SampleBatch, grid: &GridSpec) -> Result<CharFn> {
    if batch.is_empty() {
        return Err(Error::invalid("empirical c.f. requires a nonempty batch"));
    }
    let values = std::sync::Arc::new(batch.values.clone());
    let direct = {
        let values = values.clone();
        move |t: f64| -> Complex64 {
            let (mut re, mut im) = (0.0, 0.0);
            for &x in values.iter() {
                let (s, c) = (t * x).sin_cos();
                re += c;
                im += s;
            }
            let n = values.len() as f64;
            Complex64::new(re / n, im / n)
        }
    };
    let mut table: Vec<(f64, Complex64)> =
        grid.points().into_iter().map(|t| (t, direct(t))).collect();
    table.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(CharFn::from_fn(
        move |t| {
            let hit = table
                .binary_search_by(|probe| probe.0.partial_cmp(&t).unwrap())
                .ok()
                .map(|i| table[i].1);
            Ok(hit.unwrap_or_else(|| direct(t)))
        },
        false,
    ))
}

/// Pointwise complex-modulus sup distance over the grid.
pub fn sup_cf_distance(phi1: &CharFn, phi2: &CharFn, grid: &GridSpec) -> Result<DistanceReport> {
    let mut sup = -1.0;
    let mut argmax_t = grid.t_min;
    for t in grid.points() {
        let d = (phi1.eval(t)? - phi2.eval(t)?).norm();
        if d > sup {
            sup = d;
            argmax_t = t;
        }
    }
    Ok(DistanceReport { grid: *grid, sup_distance: sup, argmax_t })
}

/// Quadrature settings for Gil-Pelaez inversion. The midpoint rule on
/// [0, t_max] with the half-step offset avoids the removable singularity at
/// t = 0; t_max must be large because Linnik-type tails decay like
/// 1/|t|^alpha.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub t_max: f64,
    pub step: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { t_max: 100.0, step: 1e-3 }
    }
}

impl Quadrature {
    fn validate(&self) -> Result<()> {
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::invalid("quadrature t_max must be > 0"));
        }
        if !(self.step.is_finite() && self.step > 0.0 && self.step < self.t_max) {
            return Err(Error::invalid("quadrature step must lie in (0, t_max)"));
        }
        Ok(())
    }
}

/// Gil-Pelaez CDF: F(x) = 1/2 - (1/pi) Int_0^{t_max} Im(e^{-itx} phi(t))/t dt,
/// by the composite midpoint rule, clipped to [0, 1].
pub fn gil_pelaez_cdf(phi: &CharFn, x: f64, quad: &Quadrature) -> Result<f64> {
    quad.validate()?;
    let nodes = node_values(phi, quad)?;
    Ok(gil_pelaez_from_nodes(&nodes, x, quad))
}

fn node_values(phi: &CharFn, quad: &Quadrature) -> Result<Vec<Complex64>> {
    let count = (quad.t_max / quad.step).floor() as usize;
    let mut vals = Vec::with_capacity(count);
    for k in 0..count {
        let t = (k as f64 + 0.5) * quad.step;
        vals.push(phi.eval(t)?);
    }
    Ok(vals)
}

fn gil_pelaez_from_nodes(nodes: &[Complex64], x: f64, quad: &Quadrature) -> f64 {
    // e^{-i t_k x} advanced by one complex rotation per node
    let rot = Complex64::from_polar(1.0, -quad.step * x);
    let mut w = Complex64::from_polar(1.0, -0.5 * quad.step * x);
    let mut sum = 0.0;
    for (k, &v) in nodes.iter().enumerate() {
        let t = (k as f64 + 0.5) * quad.step;
        sum += (w * v).im / t;
        w *= rot;
    }
    let f = 0.5 - sum * quad.step / std::f64::consts::PI;
    f.clamp(0.0, 1.0)
}

/// Tabulated CDF obtained by Gil-Pelaez inversion on a fixed x-grid, with
/// monotone piecewise-linear interpolation in between. phi is evaluated on
/// the quadrature nodes once, whatever the number of x points.
#[derive(Debug, Clone)]
pub struct CdfTable {
    xs: Vec<f64>,
    fs: Vec<f64>,
}

impl CdfTable {
    pub fn from_cf(phi: &CharFn, xs: Vec<f64>, quad: &Quadrature) -> Result<Self> {
        quad.validate()?;
        if xs.len() < 2 {
            return Err(Error::invalid("CDF table needs at least 2 points"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("CDF table x points must be strictly increasing"));
        }
        let nodes = node_values(phi, quad)?;
        let mut fs: Vec<f64> =
            xs.iter().map(|&x| gil_pelaez_from_nodes(&nodes, x, quad)).collect();
        // quadrature noise must not break monotonicity
        for i in 1..fs.len() {
            fs[i] = fs[i].max(fs[i - 1]);
        }
        Ok(CdfTable { xs, fs })
    }

    /// Symmetric x-grid with a dense core and geometrically spaced tails,
    /// suitable for heavy-tailed (Linnik) limits.
    pub fn symmetric_grid(core_half_width: f64, core_step: f64, tail_max: f64) -> Vec<f64> {
        let mut xs = Vec::new();
        let mut t = tail_max;
        while t > core_half_width {
            xs.push(-t);
            t /= 1.05;
        }
        let n = (2.0 * core_half_width / core_step).round() as usize;
        for k in 0..=n {
            xs.push(-core_half_width + k as f64 * core_step);
        }
        let mut t = core_half_width;
        loop {
            t *= 1.05;
            if t > tail_max {
                break;
            }
            xs.push(t);
        }
        xs.push(tail_max);
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        xs
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return self.fs[0];
        }
        if x >= *self.xs.last().unwrap() {
            return *self.fs.last().unwrap();
        }
        let i = match self.xs.binary_search_by(|probe| probe.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.fs[i],
            Err(i) => i,
        };
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let (f0, f1) = (self.fs[i - 1], self.fs[i]);
        f0 + (f1 - f0) * (x - x0) / (x1 - x0)
    }
}

/// One-sample Kolmogorov-Smirnov statistic against a CDF:
/// sup_i max(|i/N - F(x_(i))|, |(i-1)/N - F(x_(i))|).
pub fn ks_statistic(batch: &SampleBatch, cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::invalid("KS statistic requires a nonempty batch"));
    }
    let mut xs = batch.values.clone();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    let mut prev_f = f64::NEG_INFINITY;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        if f < prev_f - 1e-12 {
            return Err(Error::invalid(format!(
                "cdf is not monotone on the sample: F({x}) = {f} < previous {prev_f}"
            )));
        }
        prev_f = prev_f.max(f);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((i as f64 / n - f).abs());
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSampleKs {
    pub statistic: f64,
    pub argmax: f64,
}

/// Two-sample KS statistic: sup over the pooled sample of the ECDF gap.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TwoSampleKs> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("two-sample KS requires nonempty samples"));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|u, v| u.partial_cmp(v).unwrap());
    ys.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut stat = 0.0f64;
    let mut argmax = xs[0];
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        let gap = (i as f64 / na - j as f64 / nb).abs();
        if gap > stat {
            stat = gap;
            argmax = v;
        }
    }
    Ok(TwoSampleKs { statistic: stat, argmax })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateFitMode {
    /// log error against log n: slope is the power-law order.
    PowerLaw,
    /// log error against n: slope is the per-step log rate.
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub order: f64,
    pub r_squared: f64,
    pub mode: RateFitMode,
}

impl RateFit {
    /// For geometric fits: the fitted per-step error ratio exp(-order).
    pub fn per_step_ratio(&self) -> f64 {
        (-self.order).exp()
    }
}

/// Least-squares fit of the convergence rate of an error sequence.
pub fn rate_fit(ns: &[u64], errors: &[f64], mode: RateFitMode) -> Result<RateFit> {
    if ns.len() != errors.len() {
        return Err(Error::invalid("rate fit requires equal-length sequences"));
    }
    if ns.len() < 3 {
        return Err(Error::invalid("rate fit requires at least 3 points"));
    }
    if errors.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
        return Err(Error::invalid("rate fit requires strictly positive errors"));
    }
    let xs: Vec<f64> = match mode {
        RateFitMode::PowerLaw => ns.iter().map(|&n| (n as f64).ln()).collect(),
        RateFitMode::Geometric => ns.iter().map(|&n| n as f64).collect(),
    };
    let ys: Vec<f64> = errors.iter().map(|&e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("rate fit requires at least two distinct n values"));
    }
    let order = sxy / sxx;
    let r_squared = if syy <= f64::EPSILON * my.abs().max(1.0) {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok(RateFit { order, r_squared, mode })
}

/// Laplace(scale) CDF, the closed-form limit for Gaussian-exponent
/// geometric sums (c.f. 1/(1 + scale^2 t^2)).
pub fn laplace_cdf(scale: f64, x: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / scale).exp()
    } else {
        1.0 - 0.5 * (-x / scale).exp()
    }
}

/// Centered normal CDF with standard deviation `sd`.
pub fn normal_cdf(sd: f64, x: f64) -> f64 {
    use statrs::distribution::ContinuousCDF;
    statrs::distribution::Normal::new(0.0, sd).expect("valid sd").cdf(x)
}

/// Centered Cauchy CDF with scale `c` (c.f. exp{-c|t|}).
pub fn cauchy_cdf(c: f64, x: f64) -> f64 {
    0.5 + (x / c).atan() / std::f64::consts::PI
}

/// CSV rows for a sequence of per-n distance reports:
/// header `n,t_argmax,sup_distance`.
pub fn distance_rows_csv(rows: &[(u64, DistanceReport)]) -> String {
    let mut out = String::from("n,t_argmax,sup_distance\n");
    for (n, r) in rows {
        out.push_str(&format!("{},{},{}\n", n, r.argmax_t, r.sup_distance));
    }
    out
}
