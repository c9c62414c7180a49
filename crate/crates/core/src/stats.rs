//! Seeding and Monte Carlo summaries.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// splitmix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`.
#[inline]
pub fn trial_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master).wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

pub fn trial_rng(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master, index))
}

/// Mean and standard error of i.i.d. trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(trials)`.
    pub stderr: f64,
    pub trials: u64,
    pub master_seed: u64,
}

impl Estimate {
    /// Summarise samples in index order. Needs at least two.
    pub fn from_samples<I>(samples: I, master_seed: u64) -> Result<Self>
    where
        I: IntoIterator<Item = f64>,
    {
        let acc = samples.into_iter().fold(Moments::default(), |mut m, x| {
            m.push(x);
            m
        });
        acc.finish(master_seed)
    }

    /// `|mean - target| / stderr`; infinite when the spread is zero and the mean is off.
    pub fn z_score(&self, target: f64) -> f64 {
        let gap = (self.mean - target).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.stderr
        }
    }

    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        self.z_score(target) <= sigmas
    }
}

/// Welford accumulator; `merge` combines shards exactly as a sequential pass would up to rounding.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64 / n as f64);
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn finish(&self, master_seed: u64) -> Result<Estimate> {
        if self.n < 2 {
            return Err(Error::invalid(format!(
                "an estimate needs at least 2 trials, got {}",
                self.n
            )));
        }
        let var = self.m2 / (self.n - 1) as f64;
        Ok(Estimate {
            mean: self.mean,
            stderr: (var / self.n as f64).sqrt(),
            trials: self.n,
            master_seed,
        })
    }
}

/// Binomial proportion with its standard error.
pub fn proportion(hits: u64, trials: u64) -> (f64, f64) {
    let p = hits as f64 / trials as f64;
    (p, (p * (1.0 - p) / trials as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_matches_textbook() {
        let e = Estimate::from_samples([1.0, 2.0, 3.0, 4.0], 9).unwrap();
        assert_eq!(e.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((e.stderr - sd / 2.0).abs() < 1e-15);
        assert_eq!((e.trials, e.master_seed), (4, 9));
    }

    #[test]
    fn single_sample_rejected() {
        assert!(Estimate::from_samples([1.0], 0).is_err());
    }

    #[test]
    fn merge_equals_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1013) as f64).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..317].iter().for_each(|&x| a.push(x));
        xs[317..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        let (w, m) = (whole.finish(0).unwrap(), a.finish(0).unwrap());
        assert!((w.mean - m.mean).abs() < 1e-9);
        assert!((w.stderr - m.stderr).abs() < 1e-9);
    }

    #[test]
    fn seeds_differ_by_trial() {
        assert_ne!(trial_seed(7, 0), trial_seed(7, 1));
        assert_ne!(trial_seed(7, 0), trial_seed(8, 0));
        assert_eq!(trial_seed(7, 3), trial_seed(7, 3));
    }
}
