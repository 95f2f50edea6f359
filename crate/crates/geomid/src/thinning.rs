//! Renewal-process simulation and p-thinning.
//!
//! Keeping each event with probability p and rescaling time by p^{1/alpha}
//! turns the inter-event law into a geometric(p) random sum scaled by
//! c(p) = p^{1/alpha} — exactly the GSS shape. Mittag-Leffler intervals are
//! the fixed point, which is what the invariance test measures.

use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::ks_two_sample;
use crate::report::{ExperimentReport, ReportRow, Verdict};
use crate::samplers::{sample_mittag_leffler, RandomStream};

/// Arrival times of a simulated point process on [0, horizon].
#[derive(Debug, Clone, PartialEq)]
pub struct EventTrain {
    pub times: Vec<f64>,
    pub horizon: f64,
    pub interval_law: String,
}

impl EventTrain {
    /// Inter-event times, the first measured from 0.
    pub fn intervals(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.times
            .iter()
            .map(|&t| {
                let dt = t - prev;
                prev = t;
                dt
            })
            .collect()
    }

    /// CSV body: header `index,time`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,time\n");
        for (i, t) in self.times.iter().enumerate() {
            let _ = writeln!(out, "{i},{t}");
        }
        out
    }
}

/// Cumulative sums of i.i.d. positive interval draws until the horizon is
/// exceeded.
pub fn simulate_renewal(
    mut interval: impl FnMut(&mut ChaCha8Rng) -> Result<f64>,
    horizon: f64,
    stream: &RandomStream,
    interval_law: impl Into<String>,
) -> Result<EventTrain> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid("horizon must be positive and finite"));
    }
    let mut rng = stream.rng();
    let mut times = Vec::new();
    let mut t = 0.0;
    loop {
        let dt = interval(&mut rng)?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("interval sampler emitted {dt}, must be > 0")));
        }
        t += dt;
        if t > horizon {
            break;
        }
        times.push(t);
    }
    Ok(EventTrain { times, horizon, interval_law: interval_law.into() })
}

/// Keeps each event independently with probability p, then multiplies every
/// retained time by p^{rescale_exponent}. For Mittag-Leffler(alpha)
/// intervals the invariant choice is rescale_exponent = 1/alpha.
pub fn p_thin(
    train: &EventTrain,
    p: f64,
    rescale_exponent: f64,
    stream: &RandomStream,
) -> Result<EventTrain> {
    if !(p.is_finite() && p > 0.0 && p <= 1.0) {
        return Err(Error::invalid("thinning probability must lie in (0, 1]"));
    }
    if !rescale_exponent.is_finite() {
        return Err(Error::invalid("rescale exponent must be finite"));
    }
    let factor = p.powf(rescale_exponent);
    let mut rng = stream.rng();
    let times: Vec<f64> = train
        .times
        .iter()
        .filter(|_| rng.random::<f64>() < p)
        .map(|&t| t * factor)
        .collect();
    Ok(EventTrain {
        times,
        horizon: train.horizon * factor,
        interval_law: format!("thinned(p={p}) {}", train.interval_law),
    })
}

/// Two-sample comparison underlying the invariance test: simulate, thin with
/// the given rescale exponent, and KS-compare the thinned inter-event times
/// against a fresh sample from the comparison law of the same size.
pub fn thinning_two_sample(
    interval: impl FnMut(&mut ChaCha8Rng) -> Result<f64>,
    mut comparison: impl FnMut(&mut ChaCha8Rng) -> Result<f64>,
    p: f64,
    rescale_exponent: f64,
    horizon: f64,
    stream: &RandomStream,
) -> Result<(f64, usize)> {
    let train = simulate_renewal(interval, horizon, &stream.substream(0), "interval")?;
    let thinned = p_thin(&train, p, rescale_exponent, &stream.substream(1))?;
    let retained = thinned.times.len();
    if retained == 0 {
        return Err(Error::invalid("thinning retained no events"));
    }
    let mut rng = stream.substream(2).rng();
    let fresh: Vec<f64> =
        (0..retained).map(|_| comparison(&mut rng)).collect::<Result<_>>()?;
    let ks = ks_two_sample(&thinned.intervals(), &fresh)?;
    Ok((ks.statistic, retained))
}

/// KS threshold for the invariance verdict.
pub const THINNING_KS_TOL: f64 = 0.02;
/// Below this many retained events the verdict is inconclusive, not fail.
pub const MIN_RETAINED: usize = 1000;

/// Invariance of Mittag-Leffler renewal processes under p-thinning with the
/// GSS rescaling p^{1/alpha}. Verdict: pass iff the two-sample KS between
/// thinned inter-event times and fresh ML(alpha) draws stays below 0.02.
pub fn thinning_invariance_test(
    alpha: f64,
    p: f64,
    horizon: f64,
    stream: &RandomStream,
) -> Result<ExperimentReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("thinning invariance requires alpha in (0, 1)"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("thinning probability must lie in (0, 1)"));
    }
    let (ks, retained) = thinning_two_sample(
        |r| sample_mittag_leffler(alpha, r),
        |r| sample_mittag_leffler(alpha, r),
        p,
        1.0 / alpha,
        horizon,
        stream,
    )?;

    let mut report = ExperimentReport::new("thinning-invariance");
    report.seed = Some(stream.seed);
    report.config.push(("alpha".into(), alpha.to_string()));
    report.config.push(("p".into(), p.to_string()));
    report.config.push(("horizon".into(), horizon.to_string()));
    report.tolerances.push(("ks".into(), THINNING_KS_TOL));
    report.metrics.push(("retained_events".into(), retained as f64));
    report.metrics.push(("two_sample_ks".into(), ks));
    // the KS statistic is itself the sup ECDF distance
    report.rows.push(ReportRow {
        n: retained as u64,
        sup_distance: ks,
        argmax_t: f64::NAN,
        ks: Some(ks),
        pass: ks < THINNING_KS_TOL,
    });
    report.verdict = if retained < MIN_RETAINED {
        report.notes.push(format!("inconclusive: only {retained} retained events (< {MIN_RETAINED})"));
        Verdict::Inconclusive
    } else if ks < THINNING_KS_TOL {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(report)
}

/// Horizon that makes a Mittag-Leffler(alpha) renewal train yield roughly
/// `target_events` arrivals: E N(T) = T^alpha / Gamma(1 + alpha).
pub fn ml_horizon_for_events(alpha: f64, target_events: usize) -> f64 {
    let gamma = statrs::function::gamma::gamma(1.0 + alpha);
    (target_events as f64 * gamma).powf(1.0 / alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::Distribution;

    #[test]
    fn renewal_deterministic_intervals() {
        let s = RandomStream::new(1);
        let train = simulate_renewal(|_| Ok(1.0), 10.5, &s, "const").unwrap();
        let expected: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        assert_eq!(train.times, expected);

        // horizon below the first draw: empty train
        let train = simulate_renewal(|_| Ok(3.0), 2.0, &s, "const").unwrap();
        assert!(train.times.is_empty());

        assert!(simulate_renewal(|_| Ok(-1.0), 10.0, &s, "bad").is_err());
        assert!(simulate_renewal(|_| Ok(1.0), -1.0, &s, "bad").is_err());
    }

    #[test]
    fn renewal_exponential_count() {
        let s = RandomStream::new(2);
        let horizon = 1e4;
        let train = simulate_renewal(
            |r| {
                let e: f64 = rand_distr::Exp1.sample(r);
                Ok(e)
            },
            horizon,
            &s,
            "exp(1)",
        )
        .unwrap();
        let count = train.times.len() as f64;
        assert!((count - 1e4).abs() < 3.0 * 1e2, "count {count}");
    }

    #[test]
    fn thin_degenerate_and_structural_cases() {
        let s = RandomStream::new(3);
        let train = simulate_renewal(|_| Ok(1.0), 100.5, &s, "const").unwrap();
        // p = 1: nothing removed, rescale factor 1
        let same = p_thin(&train, 1.0, 0.7, &s.substream(1)).unwrap();
        assert_eq!(same.times, train.times);

        // deterministic intervals, p = 1/2, no rescale: thinned inter-event
        // times are geometric(1/2)-valued integers
        let big = simulate_renewal(|_| Ok(1.0), 20_000.5, &s, "const").unwrap();
        let thinned = p_thin(&big, 0.5, 0.0, &s.substream(2)).unwrap();
        let intervals = thinned.intervals();
        assert!(intervals.iter().all(|&dt| dt.fract() == 0.0 && dt >= 1.0));
        let mean = intervals.iter().sum::<f64>() / intervals.len() as f64;
        assert!((mean - 2.0).abs() < 0.05, "mean {mean}");

        // retained fraction near p within 3 binomial standard errors
        let n = big.times.len() as f64;
        let keep = thinned.times.len() as f64 / n;
        let se = (0.5 * 0.5 / n).sqrt();
        assert!((keep - 0.5).abs() < 3.0 * se, "fraction {keep}");

        // monotonicity preserved
        assert!(thinned.times.windows(2).all(|w| w[1] > w[0]));

        assert!(p_thin(&train, 0.0, 1.0, &s).is_err());
        assert!(p_thin(&train, 1.5, 1.0, &s).is_err());
    }

    #[test]
    fn ml_invariance_passes() {
        for (alpha, p, seed) in [(0.7, 0.3, 40u64), (0.5, 0.5, 41u64)] {
            let horizon = ml_horizon_for_events(alpha, (25_000.0 / p) as usize);
            let rep =
                thinning_invariance_test(alpha, p, horizon, &RandomStream::new(seed)).unwrap();
            assert_eq!(rep.verdict, Verdict::Pass, "alpha={alpha} p={p}: {:?}", rep.metrics);
        }
    }

    #[test]
    fn deterministic_negative_control_fails() {
        let s = RandomStream::new(42);
        let (ks, retained) =
            thinning_two_sample(|_| Ok(1.0), |_| Ok(1.0), 0.5, 1.0, 30_000.5, &s).unwrap();
        assert!(retained > 10_000);
        assert!(ks > 0.2, "negative control KS only {ks}");
    }

    #[test]
    fn sparse_train_is_inconclusive() {
        let alpha = 0.5;
        let horizon = ml_horizon_for_events(alpha, 200);
        let rep = thinning_invariance_test(alpha, 0.5, horizon, &RandomStream::new(7)).unwrap();
        assert_eq!(rep.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn invariance_verdict_stable_across_seeds() {
        let alpha = 0.7;
        let p = 0.3;
        let horizon = ml_horizon_for_events(alpha, (25_000.0 / p) as usize);
        for seed in 100..105 {
            let rep =
                thinning_invariance_test(alpha, p, horizon, &RandomStream::new(seed)).unwrap();
            assert_eq!(rep.verdict, Verdict::Pass, "seed {seed}");
        }
    }

    #[test]
    fn event_train_csv_shape() {
        let train =
            EventTrain { times: vec![0.5, 1.25], horizon: 2.0, interval_law: "demo".into() };
        assert_eq!(train.to_csv(), "index,time\n0,0.5\n1,1.25\n");
    }

    #[test]
    fn ml_horizon_heuristic_is_calibrated() {
        // Gamma(1.5) = sqrt(pi)/2
        let gamma = statrs::function::gamma::gamma(1.5);
        assert!((gamma - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
        let t = ml_horizon_for_events(0.5, 10_000);
        let count_scale = t.powf(0.5) / gamma;
        assert!((count_scale - 10_000.0).abs() / 10_000.0 < 1e-9);
    }
}
