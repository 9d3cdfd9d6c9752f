//! Fixed-width latency histograms.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Bucket width in milliseconds.
    pub width_ms: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Bucket `samples_ms` into `[k·w, (k+1)·w)` bins starting at zero.
    pub fn from_samples(samples_ms: &[f64], width_ms: f64) -> Self {
        assert!(width_ms > 0.0, "bucket width must be positive");
        let mut counts = Vec::new();
        for &s in samples_ms {
            let k = (s.max(0.0) / width_ms).floor() as usize;
            if counts.len() <= k {
                counts.resize(k + 1, 0);
            }
            counts[k] += 1;
        }
        Self { width_ms, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `bucket_lo_ms,bucket_hi_ms,count` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bucket_lo_ms,bucket_hi_ms,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            let lo = k as f64 * self.width_ms;
            out.push_str(&format!("{lo},{},{c}\n", lo + self.width_ms));
        }
        out
    }
}

/// Mean and root-mean-square of a sample.
pub fn mean_rms(samples: &[f64]) -> (f64, f64) {
    if samples.is_empty() {
        return (0.0, 0.0);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let rms = (samples.iter().map(|s| s * s).sum::<f64>() / n).sqrt();
    (mean, rms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buckets() {
        let h = Histogram::from_samples(&[0.2, 0.9, 1.0, 3.5], 1.0);
        assert_eq!(h.counts, vec![2, 1, 0, 1]);
        assert_eq!(h.total(), 4);
        assert!(h.to_csv().starts_with("bucket_lo_ms,bucket_hi_ms,count\n0,1,2\n1,2,1\n"));
    }

    #[test]
    fn mean_and_rms() {
        let (m, r) = mean_rms(&[3.0, 4.0]);
        assert_eq!(m, 3.5);
        assert!((r - 12.5f64.sqrt()).abs() < 1e-12);
    }
}
