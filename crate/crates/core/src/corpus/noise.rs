use rand::Rng;

use super::Vocab;
use crate::error::{Error, Result};

/// Smoothed-unigram noise distribution, `P(w) ∝ count(w)^α`.
///
/// The table is immutable; callers bring their own RNG so that several
/// workers can share one sampler.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl NoiseSampler {
    pub fn new(vocab: &Vocab, alpha: f64) -> Result<Self> {
        Self::from_counts(vocab.counts(), alpha)
    }

    pub fn from_counts(counts: &[u64], alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!(
                "noise exponent {alpha} must be >= 0"
            )));
        }
        if counts.is_empty() {
            return Err(Error::Config(
                "noise distribution over empty vocabulary".into(),
            ));
        }
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(alpha)).collect();
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        Ok(NoiseSampler { probs, cumulative })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let total = *self.cumulative.last().unwrap();
        let u = rng.gen::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.cumulative.len() - 1) as u32
    }

    /// `k` independent draws; the true target/context are not excluded.
    pub fn sample_negatives<R: Rng + ?Sized>(&self, rng: &mut R, k: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(k);
        self.fill_negatives(rng, k, &mut out);
        out
    }

    pub fn fill_negatives<R: Rng + ?Sized>(&self, rng: &mut R, k: usize, out: &mut Vec<u32>) {
        out.clear();
        out.extend((0..k).map(|_| self.sample(rng)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn three_quarter_power() {
        let s = NoiseSampler::from_counts(&[16, 1], 0.75).unwrap();
        let p = s.probabilities();
        assert!((p[0] - 8.0 / 9.0).abs() < 1e-12);
        assert!((p[1] - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn zero_exponent_is_uniform() {
        let s = NoiseSampler::from_counts(&[100, 7, 1, 3], 0.0).unwrap();
        assert!(s.probabilities().iter().all(|&p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn single_word() {
        let s = NoiseSampler::from_counts(&[42], 0.75).unwrap();
        assert_eq!(s.probabilities(), &[1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(s.sample_negatives(&mut rng, 5), vec![0; 5]);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let counts: Vec<u64> = (1..500).map(|i| (i * 7919) % 1000 + 1).collect();
        let s = NoiseSampler::from_counts(&counts, 0.75).unwrap();
        let total: f64 = s.probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(s.probabilities().iter().all(|&p| p > 0.0));
    }

    #[test]
    fn empirical_frequencies() {
        let s = NoiseSampler::from_counts(&[1000, 300, 120, 60], 0.75).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mut hist = [0usize; 4];
        for _ in 0..n {
            hist[s.sample(&mut rng) as usize] += 1;
        }
        for (h, p) in hist.iter().zip(s.probabilities()) {
            let freq = *h as f64 / n as f64;
            assert!((freq - p).abs() / p < 0.01, "freq {freq} vs p {p}");
        }
    }

    #[test]
    fn seeded_determinism() {
        let s = NoiseSampler::from_counts(&[5, 4, 3, 2, 1], 0.75).unwrap();
        let draw = || s.sample_negatives(&mut ChaCha8Rng::seed_from_u64(99), 50);
        assert_eq!(draw(), draw());
    }
}
