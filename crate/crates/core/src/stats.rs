//! Streaming statistics with associative merging.
//!
//! Ensemble members may be computed on any number of threads; accumulators
//! are merged in member-index order so results never depend on scheduling.

/// Count / sum / sum-of-squares accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Running {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Running {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Running) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.sum / self.count as f64
        }
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let v = (self.sum_sq - self.sum * self.sum / n) / (n - 1.0);
        v.max(0.0)
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    pub fn from_samples(xs: impl IntoIterator<Item = f64>) -> Running {
        let mut r = Running::default();
        for x in xs {
            r.push(x);
        }
        r
    }
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(value: f64, stderr: f64) -> Estimate {
        Estimate { value, stderr }
    }

    pub fn of(r: &Running) -> Estimate {
        Estimate { value: r.mean(), stderr: r.stderr() }
    }

    /// |this - other| in units of the combined standard error.
    pub fn sigma_distance(&self, other: f64, other_stderr: f64) -> f64 {
        let se = (self.stderr * self.stderr + other_stderr * other_stderr).sqrt();
        let d = (self.value - other).abs();
        if d == 0.0 {
            0.0
        } else if se == 0.0 {
            f64::INFINITY
        } else {
            d / se
        }
    }
}

/// Quantile of a weighted sample (linear scan over a sorted copy).
///
/// Returns the smallest value whose cumulative weight reaches `q` of the
/// total. `q` is clamped to [0, 1].
pub fn weighted_quantile(values: &[f64], weights: &[f64], q: f64) -> f64 {
    assert_eq!(values.len(), weights.len());
    assert!(!values.is_empty());
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let total: f64 = weights.iter().sum();
    let target = q.clamp(0.0, 1.0) * total;
    let mut acc = 0.0;
    for &i in &idx {
        acc += weights[i];
        if acc >= target {
            return values[i];
        }
    }
    values[idx[idx.len() - 1]]
}

/// Median of an unweighted sample.
pub fn median(values: &[f64]) -> f64 {
    let w = vec![1.0; values.len()];
    weighted_quantile(values, &w, 0.5)
}
