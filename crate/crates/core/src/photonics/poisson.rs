//! Poisson photon-count sampling.
//!
//! Small means use exact inversion by sequential search. Means of 30 and
//! above use Hörmann's transformed rejection with squeeze (PTRS), which is
//! exact and runs in constant expected time.

use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const INVERSION_LIMIT: f64 = 30.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Poisson {
    mean: f64,
    method: Method,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Method {
    Zero,
    Inversion { exp_neg_mean: f64 },
    Ptrs(Ptrs),
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Ptrs {
    ln_mean: f64,
    b: f64,
    a: f64,
    ln_inv_alpha: f64,
    v_r: f64,
}

impl Poisson {
    pub fn new(mean: f64) -> Result<Self> {
        if !(mean.is_finite() && mean >= 0.0) {
            return Err(Error::param(format!("Poisson mean {mean} must be finite and >= 0")));
        }
        let method = if mean == 0.0 {
            Method::Zero
        } else if mean < INVERSION_LIMIT {
            Method::Inversion {
                exp_neg_mean: (-mean).exp(),
            }
        } else {
            let slam = mean.sqrt();
            let b = 0.931 + 2.53 * slam;
            let a = -0.059 + 0.02483 * b;
            Method::Ptrs(Ptrs {
                ln_mean: mean.ln(),
                b,
                a,
                ln_inv_alpha: (1.1239 + 1.1328 / (b - 3.4)).ln(),
                v_r: 0.9277 - 3.6224 / (b - 2.0),
            })
        };
        Ok(Poisson { mean, method })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self.method {
            Method::Zero => 0,
            Method::Inversion { exp_neg_mean } => {
                let u: f64 = rng.random();
                let mut k = 0u64;
                let mut p = exp_neg_mean;
                let mut cdf = p;
                // The cap only matters when rounding leaves cdf just below u.
                while u > cdf && k < 200 {
                    k += 1;
                    p *= self.mean / k as f64;
                    cdf += p;
                }
                k
            }
            Method::Ptrs(c) => loop {
                let u = rng.random::<f64>() - 0.5;
                let v: f64 = rng.random();
                let us = 0.5 - u.abs();
                let k = ((2.0 * c.a / us + c.b) * u + self.mean + 0.43).floor();
                if us >= 0.07 && v <= c.v_r {
                    return k as u64;
                }
                if k < 0.0 || (us < 0.013 && v > us) {
                    continue;
                }
                let lhs = v.ln() + c.ln_inv_alpha - (c.a / (us * us) + c.b).ln();
                let rhs = -self.mean + k * c.ln_mean - ln_gamma(k + 1.0);
                if lhs <= rhs {
                    return k as u64;
                }
            },
        }
    }
}

/// `ln P(N = n)` for `N ~ Poisson(mean)`; `-inf` when `mean = 0 < n`.
pub fn ln_poisson_pmf(n: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    n as f64 * mean.ln() - mean - ln_gamma(n as f64 + 1.0)
}
