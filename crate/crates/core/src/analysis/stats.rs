//! Small descriptive-statistics helpers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Mean, variance and fourth central moment of a sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub m4: f64,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Moments::default();
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let (s2, s4) = xs.iter().fold((0.0, 0.0), |(s2, s4), x| {
            let d = x - mean;
            (s2 + d * d, s4 + d * d * d * d)
        });
        Moments {
            n: n as u64,
            mean,
            variance: if n > 1 { s2 / (n - 1) as f64 } else { 0.0 },
            m4: s4 / n as f64,
        }
    }

    pub fn std(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Large-sample standard error of the variance estimate.
    pub fn variance_stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        ((self.m4 - self.variance * self.variance).max(0.0) / self.n as f64).sqrt()
    }

    /// Delta-method standard error of the standard deviation.
    pub fn std_stderr(&self) -> f64 {
        let s = self.std();
        if s == 0.0 {
            0.0
        } else {
            self.variance_stderr() / (2.0 * s)
        }
    }
}

/// Integer-valued histogram with deterministic ordering.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    bins: BTreeMap<i64, u64>,
}

impl Histogram {
    pub fn add(&mut self, value: i64) {
        *self.bins.entry(value).or_default() += 1;
    }

    pub fn total(&self) -> u64 {
        self.bins.values().sum()
    }

    /// Count of values in `lo..=hi`.
    pub fn mass_in(&self, lo: i64, hi: i64) -> u64 {
        self.bins.range(lo..=hi).map(|(_, c)| c).sum()
    }

    pub fn bins(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.bins.iter().map(|(&k, &v)| (k, v))
    }

    pub fn min(&self) -> Option<i64> {
        self.bins.keys().next().copied()
    }

    pub fn max(&self) -> Option<i64> {
        self.bins.keys().next_back().copied()
    }

    /// Expands back into a sorted sample.
    pub fn values(&self) -> Vec<i64> {
        self.bins
            .iter()
            .flat_map(|(&k, &c)| std::iter::repeat_n(k, c as usize))
            .collect()
    }
}

impl FromIterator<i64> for Histogram {
    fn from_iter<I: IntoIterator<Item = i64>>(iter: I) -> Self {
        let mut h = Histogram::default();
        iter.into_iter().for_each(|v| h.add(v));
        h
    }
}

/// Two-sample Kolmogorov–Smirnov statistic and its asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    (d, kolmogorov_q(lambda))
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
