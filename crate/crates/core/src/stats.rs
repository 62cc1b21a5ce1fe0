//! Sample accumulation: batch means for the density estimators and plain
//! i.i.d. errors for short runs.
//!
//! Sums are taken relative to a shift (the value of sample 0), so a run
//! whose samples are all identical reports that value exactly with a zero
//! error bar.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PavgError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
    /// Samples whose weight was not finite; they are excluded from `mean`.
    pub divergent_count: u64,
    pub seed: u64,
}

impl EstimateResult {
    pub fn exact(value: f64, n_samples: u64, seed: u64) -> Self {
        Self { mean: value, stderr: 0.0, n_samples, divergent_count: 0, seed }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self { mean: self.mean * factor, stderr: self.stderr * factor.abs(), ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_samples: u64,
    pub seed: u64,
    pub batch_count: u64,
}

impl SamplerConfig {
    pub const DEFAULT_BATCHES: u64 = 64;
    pub const MIN_BATCHES: u64 = 8;

    pub fn new(n_samples: u64, seed: u64) -> Result<Self> {
        let cfg = Self { n_samples, seed, batch_count: Self::DEFAULT_BATCHES.min(n_samples) };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_count < Self::MIN_BATCHES || self.n_samples < self.batch_count {
            return Err(PavgError::InvalidArgument(format!(
                "sampler requires n_samples >= batch_count >= {}; got n_samples = {}, batch_count = {}",
                Self::MIN_BATCHES,
                self.n_samples,
                self.batch_count
            )));
        }
        Ok(())
    }

    fn batch_range(&self, b: u64) -> std::ops::Range<u64> {
        let base = self.n_samples / self.batch_count;
        let extra = self.n_samples % self.batch_count;
        let start = b * base + b.min(extra);
        let len = base + u64::from(b < extra);
        start..start + len
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Batch {
    shifted_sum: f64,
    count: u64,
    divergent: u64,
}

/// Mean and batch-means standard error of `f(i)` over `i < n_samples`.
///
/// Batches are evaluated in parallel but always over the same index
/// ranges and combined in batch order, so the result does not depend on
/// the number of worker threads. `init` builds per-batch scratch space.
pub(crate) fn batch_means<S, I, F>(cfg: &SamplerConfig, init: I, f: F) -> Result<EstimateResult>
where
    I: Fn() -> S + Sync,
    F: Fn(u64, &mut S) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let mut scratch = init();
    let first = f(0, &mut scratch)?;
    let shift = if first.is_finite() { first } else { 0.0 };

    let batches: Vec<Batch> = (0..cfg.batch_count)
        .into_par_iter()
        .map(|b| {
            let mut scratch = init();
            let mut acc = Batch::default();
            for i in cfg.batch_range(b) {
                let v = f(i, &mut scratch)?;
                if v.is_finite() {
                    acc.shifted_sum += v - shift;
                    acc.count += 1;
                } else {
                    acc.divergent += 1;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let count: u64 = batches.iter().map(|b| b.count).sum();
    let divergent: u64 = batches.iter().map(|b| b.divergent).sum();
    if count == 0 {
        return Ok(EstimateResult {
            mean: f64::NAN,
            stderr: f64::NAN,
            n_samples: cfg.n_samples,
            divergent_count: divergent,
            seed: cfg.seed,
        });
    }
    let offset: f64 = batches.iter().map(|b| b.shifted_sum).sum::<f64>() / count as f64;
    let used: Vec<f64> = batches.iter().filter(|b| b.count > 0).map(|b| b.shifted_sum / b.count as f64).collect();
    let stderr = if used.len() > 1 {
        let k = used.len() as f64;
        let ss: f64 = used.iter().map(|m| (m - offset).powi(2)).sum();
        (ss / (k * (k - 1.0))).sqrt()
    } else {
        f64::NAN
    };
    Ok(EstimateResult {
        mean: shift + offset,
        stderr,
        n_samples: cfg.n_samples,
        divergent_count: divergent,
        seed: cfg.seed,
    })
}

/// Mean and i.i.d. standard error of a sample set; non-finite entries are
/// counted as divergent and skipped.
pub(crate) fn iid_estimate(values: &[f64], seed: u64) -> EstimateResult {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let divergent = (values.len() - finite.len()) as u64;
    let n = finite.len();
    if n == 0 {
        return EstimateResult {
            mean: f64::NAN,
            stderr: f64::NAN,
            n_samples: values.len() as u64,
            divergent_count: divergent,
            seed,
        };
    }
    let shift = finite[0];
    let offset = finite.iter().map(|v| v - shift).sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let ss: f64 = finite.iter().map(|v| (v - shift - offset).powi(2)).sum();
        (ss / ((n - 1) as f64 * n as f64)).sqrt()
    } else {
        f64::NAN
    };
    EstimateResult { mean: shift + offset, stderr, n_samples: values.len() as u64, divergent_count: divergent, seed }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_ranges_partition_samples() {
        let cfg = SamplerConfig { n_samples: 103, seed: 0, batch_count: 10 };
        let mut next = 0;
        for b in 0..10 {
            let r = cfg.batch_range(b);
            assert_eq!(r.start, next);
            next = r.end;
        }
        assert_eq!(next, 103);
    }

    #[test]
    fn constant_samples_are_exact() {
        let cfg = SamplerConfig { n_samples: 1000, seed: 3, batch_count: 64 };
        let c = 0.1 + 0.2;
        let r = batch_means(&cfg, || (), |_, _| Ok(c)).unwrap();
        assert_eq!(r.mean, c);
        assert_eq!(r.stderr, 0.0);
    }

    #[test]
    fn linear_samples() {
        let cfg = SamplerConfig { n_samples: 1024, seed: 0, batch_count: 16 };
        let r = batch_means(&cfg, || (), |i, _| Ok(i as f64)).unwrap();
        assert!((r.mean - 511.5).abs() < 1e-9);
        assert!(r.stderr > 0.0);
    }

    #[test]
    fn divergent_samples_are_counted_not_averaged() {
        let cfg = SamplerConfig { n_samples: 100, seed: 0, batch_count: 10 };
        let r = batch_means(&cfg, || (), |i, _| Ok(if i % 10 == 3 { f64::INFINITY } else { 2.0 })).unwrap();
        assert_eq!(r.divergent_count, 10);
        assert_eq!(r.mean, 2.0);
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig { n_samples: 100, seed: 0, batch_count: 4 }.validate().is_err());
        assert!(SamplerConfig { n_samples: 10, seed: 0, batch_count: 16 }.validate().is_err());
        assert!(SamplerConfig::new(1000, 1).is_ok());
    }

    #[test]
    fn iid_matches_hand_computation() {
        let r = iid_estimate(&[1.0, 2.0, 3.0, 4.0], 0);
        assert!((r.mean - 2.5).abs() < 1e-15);
        assert!((r.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
