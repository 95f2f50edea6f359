//! Seeded generation of every law the experiments manipulate: geometric
//! counts, symmetric and positive stable variates, Linnik and Mittag-Leffler
//! laws, and geometric random sums built from them.
//!
//! All samplers are pure functions of an explicit RNG; batches are addressed
//! by (seed, substream) so parallel generation cannot change results.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::cf::{ExponentDescriptor, ExponentKind};
use crate::error::{Error, Result};

/// Geometric law on {1, 2, ...} with P(N = k) = p (1-p)^{k-1}, mean 1/p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricLaw {
    p: f64,
}

impl GeometricLaw {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0 && p <= 1.0) {
            return Err(Error::invalid("geometric parameter must lie in (0, 1]"));
        }
        Ok(GeometricLaw { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.p
    }
}

/// Address of a reproducible draw sequence. Identical (seed, substream)
/// pairs yield identical sequences; distinct substreams are independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomStream {
    pub seed: u64,
    pub substream: u64,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        RandomStream { seed, substream: 0 }
    }

    pub fn substream(&self, index: u64) -> Self {
        RandomStream { seed: self.seed, substream: index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.substream);
        rng
    }
}

fn clamp_open_unit(u: f64) -> f64 {
    u.clamp(1e-16, 1.0 - 1e-16)
}

/// Inversion sampler on {1, 2, ...}: ceil(ln(1-U) / ln(1-p)).
pub fn sample_geometric<R: Rng>(law: &GeometricLaw, rng: &mut R) -> u64 {
    if law.p == 1.0 {
        return 1;
    }
    let u: f64 = rng.random();
    let k = ((1.0 - u).ln() / (1.0 - law.p).ln()).ceil();
    if k < 1.0 {
        1
    } else {
        k as u64
    }
}

/// Symmetric alpha-stable variate with c.f. exp{-|t|^alpha}, by the
/// trigonometric (Chambers-type) method. alpha = 2 is Normal(0, 2).
pub fn sample_sym_stable<R: Rng>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::invalid("stable index alpha must lie in (0, 2]"));
    }
    let u: f64 = rng.random();
    let v = PI * (clamp_open_unit(u) - 0.5);
    let w: f64 = Exp1.sample(rng);
    let w = w.max(f64::MIN_POSITIVE);
    if alpha == 1.0 {
        return Ok(v.tan());
    }
    let s = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let tail = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    Ok(s * tail)
}

/// Positive alpha-stable variate with Laplace transform exp{-s^alpha},
/// 0 < alpha < 1 (the one-sided Chambers-type formula).
pub fn sample_positive_stable<R: Rng>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("positive stable index must lie in (0, 1)"));
    }
    let u: f64 = rng.random();
    let v = PI * (clamp_open_unit(u) - 0.5);
    let w: f64 = Exp1.sample(rng);
    let w = w.max(f64::MIN_POSITIVE);
    let num = (alpha * (v + PI / 2.0)).sin();
    let den = v.cos().powf(1.0 / alpha);
    let tail = ((alpha * PI / 2.0 + (alpha - 1.0) * v).cos() / w).powf((1.0 - alpha) / alpha);
    Ok(num / den * tail)
}

/// Linnik(alpha) variate: E^{1/alpha} Z with E unit exponential and Z
/// symmetric alpha-stable; c.f. 1/(1+|t|^alpha). alpha = 2 is Laplace.
pub fn sample_linnik<R: Rng>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::invalid("Linnik index alpha must lie in (0, 2]"));
    }
    let e: f64 = Exp1.sample(rng);
    let z = sample_sym_stable(alpha, rng)?;
    Ok(e.powf(1.0 / alpha) * z)
}

/// Mittag-Leffler(alpha) variate: E^{1/alpha} S with S positive
/// alpha-stable; Laplace transform 1/(1+s^alpha).
pub fn sample_mittag_leffler<R: Rng>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("Mittag-Leffler index must lie in (0, 1)"));
    }
    let e: f64 = Exp1.sample(rng);
    let s = sample_positive_stable(alpha, rng)?;
    Ok(e.powf(1.0 / alpha) * s)
}

/// One draw of B^{-1} (X_1 + ... + X_N) with N geometric(p) independent of
/// the component draws. Component draws are consumed lazily; memory is O(1).
pub fn sample_geometric_sum<R: Rng>(
    p: f64,
    b_norm: f64,
    mut component: impl FnMut(&mut R) -> f64,
    rng: &mut R,
) -> Result<f64> {
    let law = GeometricLaw::new(p)?;
    if !(b_norm.is_finite() && b_norm > 0.0) {
        return Err(Error::invalid("normalizer B must be > 0"));
    }
    let n = sample_geometric(&law, rng);
    let mut sum = 0.0;
    for _ in 0..n {
        sum += component(rng);
    }
    Ok(sum / b_norm)
}

/// One draw of U_n: the geometric(1/n) sum of i.i.d. draws from the ID law
/// with exponent g/n. Only Gaussian and stable exponents have exact
/// component samplers.
pub fn sample_un<R: Rng>(desc: &ExponentDescriptor, n: u64, rng: &mut R) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("geometric sum index n must be >= 1"));
    }
    if desc.kind() == ExponentKind::SemiStable {
        return Err(Error::Unsupported(
            "no exact sampler for semi-stable exponents".into(),
        ));
    }
    let alpha = desc.alpha();
    let scale = (desc.scale_c() / n as f64).powf(1.0 / alpha);
    let count = sample_geometric(&GeometricLaw::new(1.0 / n as f64)?, rng);
    let mut sum = 0.0;
    if desc.kind() == ExponentKind::Gaussian {
        // exp{-(c/n) t^2} is Normal with variance 2c/n
        let sigma = (2.0 * desc.scale_c() / n as f64).sqrt();
        for _ in 0..count {
            let z: f64 = StandardNormal.sample(rng);
            sum += sigma * z;
        }
    } else {
        for _ in 0..count {
            sum += scale * sample_sym_stable(alpha, rng)?;
        }
    }
    Ok(sum)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchMeta {
    pub law: String,
    pub params: Vec<(String, f64)>,
    pub seed: u64,
    pub substream: u64,
    pub size: usize,
}

/// A generated sample with the metadata needed to replay it exactly.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub meta: BatchMeta,
}

impl SampleBatch {
    pub fn generate(
        law: impl Into<String>,
        params: Vec<(String, f64)>,
        size: usize,
        stream: &RandomStream,
        mut draw: impl FnMut(&mut ChaCha8Rng) -> Result<f64>,
    ) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("batch size must be >= 1"));
        }
        let mut rng = stream.rng();
        let mut values = Vec::with_capacity(size);
        for _ in 0..size {
            values.push(draw(&mut rng)?);
        }
        Ok(SampleBatch {
            values,
            meta: BatchMeta {
                law: law.into(),
                params,
                seed: stream.seed,
                substream: stream.substream,
                size,
            },
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CSV body: header `value`, one real per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value\n");
        for v in &self.values {
            let _ = writeln!(out, "{v}");
        }
        out
    }

    /// Sidecar key=value text block describing the batch.
    pub fn meta_block(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "law={}", self.meta.law);
        let _ = writeln!(out, "seed={}", self.meta.seed);
        let _ = writeln!(out, "substream={}", self.meta.substream);
        let _ = writeln!(out, "size={}", self.meta.size);
        for (k, v) in &self.meta.params {
            let _ = writeln!(out, "param.{k}={v}");
        }
        out
    }

    /// Writes `<path>` (CSV) and `<path>.meta` (sidecar block).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv())?;
        let mut meta_path = path.as_os_str().to_owned();
        meta_path.push(".meta");
        std::fs::write(meta_path, self.meta_block())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(seed: u64) -> RandomStream {
        RandomStream::new(seed)
    }

    fn empirical_cf_re(values: &[f64], t: f64) -> f64 {
        values.iter().map(|&x| (t * x).cos()).sum::<f64>() / values.len() as f64
    }

    fn empirical_cf_im(values: &[f64], t: f64) -> f64 {
        values.iter().map(|&x| (t * x).sin()).sum::<f64>() / values.len() as f64
    }

    #[test]
    fn geometric_examples() {
        let mut rng = stream(1).rng();
        let one = GeometricLaw::new(1.0).unwrap();
        for _ in 0..100 {
            assert_eq!(sample_geometric(&one, &mut rng), 1);
        }

        let half = GeometricLaw::new(0.5).unwrap();
        let n = 100_000;
        let mean = (0..n).map(|_| sample_geometric(&half, &mut rng) as f64).sum::<f64>() / n as f64;
        // 3 standard errors with sigma^2 = q/p^2 = 2
        assert!((1.98..=2.02).contains(&mean), "mean {mean}");

        let small = GeometricLaw::new(0.01).unwrap();
        for _ in 0..10_000 {
            assert!(sample_geometric(&small, &mut rng) >= 1);
        }

        assert!(GeometricLaw::new(0.0).is_err());
        assert!(GeometricLaw::new(1.5).is_err());
    }

    #[test]
    fn sym_stable_gaussian_case() {
        let mut rng = stream(2).rng();
        let n = 100_000;
        let var = (0..n)
            .map(|_| {
                let x = sample_sym_stable(2.0, &mut rng).unwrap();
                x * x
            })
            .sum::<f64>()
            / n as f64;
        assert!((var - 2.0).abs() < 0.06, "variance {var}");
    }

    #[test]
    fn sym_stable_empirical_cf() {
        let mut rng = stream(3).rng();
        let n = 100_000;
        let tol = 5.0 / (n as f64).sqrt();
        for alpha in [0.7, 1.0, 1.6] {
            let xs: Vec<f64> = (0..n).map(|_| sample_sym_stable(alpha, &mut rng).unwrap()).collect();
            let re = empirical_cf_re(&xs, 1.0);
            let expected = (-1.0f64).exp();
            if alpha == 1.0 {
                assert!((re - expected).abs() < tol, "alpha=1: {re} vs {expected}");
            }
            let e = (-(1.0f64).powf(alpha)).exp();
            assert!((re - e).abs() < tol, "alpha={alpha}: {re} vs {e}");
            // symmetry: imaginary part is noise
            assert!(empirical_cf_im(&xs, 1.0).abs() < tol);
        }
        assert!(sample_sym_stable(0.0, &mut rng).is_err());
        assert!(sample_sym_stable(2.5, &mut rng).is_err());
    }

    #[test]
    fn positive_stable_laplace_transform() {
        let mut rng = stream(4).rng();
        let n = 100_000;
        let tol = 5.0 / (n as f64).sqrt();
        let xs: Vec<f64> = (0..n).map(|_| sample_positive_stable(0.5, &mut rng).unwrap()).collect();
        assert!(xs.iter().all(|&x| x > 0.0));
        let lt1 = xs.iter().map(|&x| (-x).exp()).sum::<f64>() / n as f64;
        assert!((lt1 - (-1.0f64).exp()).abs() < tol, "LT(1) {lt1}");
        let lt4 = xs.iter().map(|&x| (-4.0 * x).exp()).sum::<f64>() / n as f64;
        assert!((lt4 - (-2.0f64).exp()).abs() < tol, "LT(4) {lt4}");
        // check a second index against exp(-s^alpha)
        let ys: Vec<f64> = (0..n).map(|_| sample_positive_stable(0.8, &mut rng).unwrap()).collect();
        let lt = ys.iter().map(|&x| (-2.0 * x).exp()).sum::<f64>() / n as f64;
        assert!((lt - (-(2.0f64.powf(0.8))).exp()).abs() < tol);
        assert!(sample_positive_stable(1.0, &mut rng).is_err());
    }

    #[test]
    fn linnik_empirical_cf() {
        let mut rng = stream(5).rng();
        let n = 100_000;
        let tol = 5.0 / (n as f64).sqrt();
        let laplace: Vec<f64> = (0..n).map(|_| sample_linnik(2.0, &mut rng).unwrap()).collect();
        assert!((empirical_cf_re(&laplace, 1.0) - 0.5).abs() < tol);

        let lin1: Vec<f64> = (0..n).map(|_| sample_linnik(1.0, &mut rng).unwrap()).collect();
        assert!((empirical_cf_re(&lin1, 2.0) - 1.0 / 3.0).abs() < tol);
        // t = 0: exactly 1
        assert_eq!(empirical_cf_re(&lin1, 0.0), 1.0);
    }

    #[test]
    fn mittag_leffler_laplace_transform() {
        let mut rng = stream(6).rng();
        let n = 100_000;
        let tol = 5.0 / (n as f64).sqrt();
        let xs: Vec<f64> = (0..n).map(|_| sample_mittag_leffler(0.5, &mut rng).unwrap()).collect();
        assert!(xs.iter().all(|&x| x > 0.0));
        let lt1 = xs.iter().map(|&x| (-x).exp()).sum::<f64>() / n as f64;
        assert!((lt1 - 0.5).abs() < tol, "LT(1) {lt1}");
        // 1/(1 + 4^{0.5}) = 1/3
        let lt4 = xs.iter().map(|&x| (-4.0 * x).exp()).sum::<f64>() / n as f64;
        assert!((lt4 - 1.0 / 3.0).abs() < tol, "LT(4) {lt4}");
        assert!(sample_mittag_leffler(1.0, &mut rng).is_err());
    }

    #[test]
    fn geometric_sum_degenerate_cases() {
        let mut rng = stream(7).rng();
        // p = 1, B = 1: one component draw
        let v = sample_geometric_sum(1.0, 1.0, |_r: &mut ChaCha8Rng| 5.0, &mut rng).unwrap();
        assert_eq!(v, 5.0);
        // zero components: zero output
        for _ in 0..50 {
            let v = sample_geometric_sum(0.3, 2.0, |_r: &mut ChaCha8Rng| 0.0, &mut rng).unwrap();
            assert_eq!(v, 0.0);
        }
        assert!(sample_geometric_sum(0.5, 0.0, |_r: &mut ChaCha8Rng| 1.0, &mut rng).is_err());
    }

    #[test]
    fn geometric_sum_of_normals_hits_laplace_limit() {
        // p = 0.001, B = p^{-1/2}: the GSS normalization for Normal(0,1)
        // components (g = t^2/2), limit Laplace with scale 1/sqrt(2)
        let p: f64 = 0.001;
        let b = p.powf(-0.5);
        let n = 100_000;
        let mut rng = stream(8).rng();
        let mut xs: Vec<f64> = (0..n)
            .map(|_| {
                sample_geometric_sum(
                    p,
                    b,
                    |r: &mut ChaCha8Rng| {
                        let z: f64 = StandardNormal.sample(r);
                        z
                    },
                    &mut rng,
                )
                .unwrap()
            })
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let scale = 1.0 / std::f64::consts::SQRT_2;
        let cdf = |x: f64| {
            if x < 0.0 {
                0.5 * (x / scale).exp()
            } else {
                1.0 - 0.5 * (-x / scale).exp()
            }
        };
        let nn = xs.len() as f64;
        let mut d = 0.0f64;
        for (i, &x) in xs.iter().enumerate() {
            let f = cdf(x);
            d = d.max(((i + 1) as f64 / nn - f).abs());
            d = d.max((i as f64 / nn - f).abs());
        }
        assert!(d < 0.02, "KS {d}");
    }

    #[test]
    fn sample_un_cases() {
        let gauss = ExponentDescriptor::gaussian(0.5).unwrap();
        let mut rng = stream(9).rng();
        // n = 1: one draw of the ID law itself, Normal(0, 2c = 1)
        let n = 100_000;
        let var = (0..n)
            .map(|_| {
                let x = sample_un(&gauss, 1, &mut rng).unwrap();
                x * x
            })
            .sum::<f64>()
            / n as f64;
        assert!((var - 1.0).abs() < 0.03, "variance {var}");

        let semi = ExponentDescriptor::semi_stable(1.0, 0.5, 0.05, 1.0).unwrap();
        assert!(matches!(sample_un(&semi, 10, &mut rng), Err(Error::Unsupported(_))));
        assert!(sample_un(&gauss, 0, &mut rng).is_err());
    }

    #[test]
    fn batches_are_deterministic_per_stream() {
        let s = stream(42).substream(3);
        let draw = |r: &mut ChaCha8Rng| sample_linnik(1.0, r);
        let a = SampleBatch::generate("linnik", vec![("alpha".into(), 1.0)], 1000, &s, draw).unwrap();
        let b = SampleBatch::generate("linnik", vec![("alpha".into(), 1.0)], 1000, &s, draw).unwrap();
        assert_eq!(a.values, b.values);

        let c = SampleBatch::generate("linnik", vec![], 1000, &stream(42).substream(4), draw).unwrap();
        assert_ne!(a.values, c.values);

        assert!(SampleBatch::generate("x", vec![], 0, &s, draw).is_err());
    }

    #[test]
    fn gss_closure_of_linnik() {
        // geometric(p) sums of Linnik(alpha) with B = p^{-1/alpha} are again
        // Linnik(alpha): two-sample KS against direct draws
        for (alpha, p, seed) in [(1.0f64, 0.1f64, 10u64), (2.0, 0.5, 11u64)] {
            let b = p.powf(-1.0 / alpha);
            let n = 100_000;
            let mut rng = stream(seed).rng();
            let sums: Vec<f64> = (0..n)
                .map(|_| {
                    sample_geometric_sum(
                        p,
                        b,
                        |r: &mut ChaCha8Rng| sample_linnik(alpha, r).unwrap(),
                        &mut rng,
                    )
                    .unwrap()
                })
                .collect();
            let mut rng2 = stream(seed).substream(1).rng();
            let direct: Vec<f64> = (0..n).map(|_| sample_linnik(alpha, &mut rng2).unwrap()).collect();
            let d = crate::numerics::ks_two_sample(&sums, &direct).unwrap().statistic;
            assert!(d < 0.02, "alpha={alpha} p={p}: KS {d}");
        }
    }

    #[test]
    fn batch_csv_round_trip_shape() {
        let s = stream(1);
        let batch =
            SampleBatch::generate("const", vec![("v".into(), 1.5)], 3, &s, |_r| Ok(1.5)).unwrap();
        assert_eq!(batch.to_csv(), "value\n1.5\n1.5\n1.5\n");
        let meta = batch.meta_block();
        assert!(meta.contains("law=const"));
        assert!(meta.contains("seed=1"));
        assert!(meta.contains("param.v=1.5"));
    }
}
