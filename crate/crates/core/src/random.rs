//! Reproducible random fields.
//!
//! Each coefficient is drawn from a ChaCha stream keyed by `(seed, sample,
//! kind)` at a word position fixed by its mode numbers, so a coefficient does
//! not depend on the mode cutoff. Refining a domain adds modes without
//! changing the existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::domain::DomainSpec;
use crate::field::SpectralField;
use crate::trig::{Family, TrigSeries};

const WORDS_PER_DRAW: u128 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Sine = 0,
    Cosine = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldSampler {
    seed: u64,
}

impl FieldSampler {
    pub fn new(seed: u64) -> Self {
        FieldSampler { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn normal(&self, kind: Kind, sample: u64, modes: &[usize]) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(sample.wrapping_mul(4).wrapping_add(kind as u64));
        let key = modes.iter().fold(0u128, |acc, &m| acc * 4096 + m as u128);
        rng.set_word_pos(key * WORDS_PER_DRAW);
        StandardNormal.sample(&mut rng)
    }

    /// Sine field with independent coefficients of variance `λ_j^{-2}`.
    pub fn smooth_field(&self, domain: DomainSpec, sample: u64) -> SpectralField {
        self.field_with_decay(domain, sample, 1.0)
    }

    /// Sine field with independent coefficients of variance `λ_j^{-2 decay}`.
    /// Fields with the same seed and sample share their normal draws across
    /// decay exponents.
    pub fn field_with_decay(&self, domain: DomainSpec, sample: u64, decay: f64) -> SpectralField {
        let lambdas = domain.eigenvalues();
        let coeffs = (0..domain.mode_count())
            .map(|k| self.normal(Kind::Sine, sample, &domain.mode_index(k)) * lambdas[k].powf(-decay))
            .collect();
        SpectralField::from_raw(domain, coeffs)
    }

    /// Smooth cosine-series multiplier with `count` modes (0..count) per axis
    /// and coefficient variance `(1 + |κ|²)^{-3}`.
    pub fn cosine_multiplier(&self, lengths: &[f64], count: usize, sample: u64) -> TrigSeries {
        let dim = lengths.len();
        let counts = vec![count; dim];
        let total: usize = counts.iter().product();
        let coeffs = (0..total)
            .map(|flat| {
                let mut rem = flat;
                let mut modes = vec![0; dim];
                for axis in (0..dim).rev() {
                    modes[axis] = rem % count;
                    rem /= count;
                }
                let kappa2: f64 =
                    modes.iter().zip(lengths).map(|(&k, &l)| (k as f64 * std::f64::consts::PI / l).powi(2)).sum();
                self.normal(Kind::Cosine, sample, &modes) * (1.0 + kappa2).powf(-1.5)
            })
            .collect();
        TrigSeries::new(lengths, &vec![Family::Cos; dim], &counts, coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn same_seed_same_field() {
        let d = DomainSpec::rectangle([PI, PI], 6, 12).unwrap();
        let a = FieldSampler::new(3).smooth_field(d, 5);
        let b = FieldSampler::new(3).smooth_field(d, 5);
        assert_eq!(a, b);
        assert_ne!(a, FieldSampler::new(4).smooth_field(d, 5));
        assert_ne!(a, FieldSampler::new(3).smooth_field(d, 6));
    }

    #[test]
    fn refinement_keeps_existing_coefficients() {
        let coarse = DomainSpec::rectangle([PI, PI], 4, 8).unwrap();
        let fine = DomainSpec::rectangle([PI, PI], 8, 16).unwrap();
        let s = FieldSampler::new(11);
        let a = s.smooth_field(coarse, 0);
        let b = s.smooth_field(fine, 0).resample(coarse).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn multiplier_is_deterministic() {
        let s = FieldSampler::new(1);
        assert_eq!(s.cosine_multiplier(&[PI, 2.0], 4, 2), s.cosine_multiplier(&[PI, 2.0], 4, 2));
    }
}
