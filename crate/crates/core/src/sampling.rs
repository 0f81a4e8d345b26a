//! Seeded Monte Carlo estimates of random-set and random-projector averages.
//!
//! Draws are split across [`STREAMS`] independent ChaCha8 streams derived
//! from one seed and run in parallel. Each stream tallies how often every
//! subset was drawn; the tallies are merged in stream order, so the result
//! depends only on the seed and the sample count.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cardinality::SetFamily;
use crate::lattice::IndexSet;
use crate::prebasis::{PrebasisError, ProjectorFamily};
use crate::random_sets::{ProbabilityError, ProbabilityVector, RandomSetDistribution};
use crate::scalar::C64;

pub const STREAMS: u64 = 16;
pub const ALGORITHM: &str = "ChaCha8Rng, 16 streams";
/// Acceptance band in standard errors.
pub const SIGMA_BAND: f64 = 4.0;
/// Subset frequencies are reported only up to this many indices.
const MAX_REPORTED_SUBSETS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error(transparent)]
    Probability(#[from] ProbabilityError),
    #[error(transparent)]
    Prebasis(#[from] PrebasisError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplerConfig {
    pub seed: u64,
    pub samples: u64,
}

/// How often each subset was drawn.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetHistogram {
    n: usize,
    samples: u64,
    counts: BTreeMap<IndexSet, u64>,
}

/// A sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    /// `|mean - target| / std_error`; zero spread counts as exact only on a
    /// match to 1e-12.
    pub fn sigmas(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

pub fn draw(p: &ProbabilityVector<f64>, config: SamplerConfig) -> Result<SubsetHistogram, SamplingError> {
    if config.samples == 0 {
        return Err(SamplingError::NoSamples);
    }
    let p = p.values();
    let per = config.samples / STREAMS;
    let extra = config.samples % STREAMS;
    let tallies: Vec<BTreeMap<IndexSet, u64>> = (0..STREAMS)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(k);
            let mut counts = BTreeMap::new();
            for _ in 0..per + u64::from(k < extra) {
                let set = p
                    .iter()
                    .enumerate()
                    .fold(IndexSet::EMPTY, |s, (i, &pi)| if rng.random::<f64>() < pi { s.with(i) } else { s });
                *counts.entry(set).or_insert(0) += 1;
            }
            counts
        })
        .collect();
    let mut counts = BTreeMap::new();
    for tally in tallies {
        for (set, c) in tally {
            *counts.entry(set).or_insert(0) += c;
        }
    }
    Ok(SubsetHistogram { n: p.len(), samples: config.samples, counts })
}

impl SubsetHistogram {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn counts(&self) -> &BTreeMap<IndexSet, u64> {
        &self.counts
    }

    /// Sample means of several statistics of the drawn set at once.
    pub fn estimate_many(&self, len: usize, f: impl Fn(IndexSet) -> Vec<f64>) -> Vec<Estimate> {
        let n = self.samples as f64;
        let mut sum = vec![0.0; len];
        let mut sq = vec![0.0; len];
        for (&set, &c) in &self.counts {
            let c = c as f64;
            for (k, v) in f(set).into_iter().enumerate() {
                sum[k] += c * v;
                sq[k] += c * v * v;
            }
        }
        sum.iter()
            .zip(&sq)
            .map(|(s, q)| {
                let mean = s / n;
                let var = if self.samples > 1 { ((q - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
                Estimate { mean, std_error: (var / n).sqrt() }
            })
            .collect()
    }

    pub fn estimate(&self, f: impl Fn(IndexSet) -> f64) -> Estimate {
        self.estimate_many(1, |s| vec![f(s)])[0]
    }
}

/// One empirical statistic against its analytic value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub label: String,
    pub empirical: f64,
    pub std_error: f64,
    pub analytic: f64,
    /// `None` when the spread is zero and the values differ.
    pub sigmas: Option<f64>,
}

impl Comparison {
    pub fn new(label: impl Into<String>, estimate: Estimate, analytic: f64) -> Self {
        let s = estimate.sigmas(analytic);
        Comparison {
            label: label.into(),
            empirical: estimate.mean,
            std_error: estimate.std_error,
            analytic,
            sigmas: s.is_finite().then_some(s),
        }
    }

    pub fn within(&self, band: f64) -> bool {
        self.sigmas.is_some_and(|s| s <= band)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleReport {
    pub seed: u64,
    pub algorithm: &'static str,
    pub samples: u64,
    pub comparisons: Vec<Comparison>,
    pub max_sigmas: Option<f64>,
    pub within_band: bool,
}

impl SampleReport {
    fn new(config: SamplerConfig, comparisons: Vec<Comparison>) -> Self {
        let within_band = comparisons.iter().all(|c| c.within(SIGMA_BAND));
        let max_sigmas = comparisons.iter().map(|c| c.sigmas).try_fold(0.0f64, |m, s| s.map(|s| m.max(s)));
        SampleReport { seed: config.seed, algorithm: ALGORITHM, samples: config.samples, comparisons, max_sigmas, within_band }
    }
}

/// Index frequencies, subset frequencies for small `n`, `Î`, and `𝔖̂` when a
/// family is given.
pub fn sample_sets(
    p: &ProbabilityVector<f64>,
    family: Option<&SetFamily>,
    config: SamplerConfig,
) -> Result<SampleReport, SamplingError> {
    let n = p.n();
    if let Some(f) = family {
        if f.n() != n {
            return Err(ProbabilityError::SizeMismatch { what: "set family", expected: n, got: f.n() }.into());
        }
    }
    let hist = draw(p, config)?;
    let dist = RandomSetDistribution::new(p.clone());
    let mut out = Vec::new();
    let freq = hist.estimate_many(n, |s| (0..n).map(|i| f64::from(u8::from(s.contains(i)))).collect());
    for (i, e) in freq.into_iter().enumerate() {
        out.push(Comparison::new(format!("frequency of index {}", i + 1), e, p.values()[i]));
    }
    if n <= MAX_REPORTED_SUBSETS {
        let all: Vec<IndexSet> = IndexSet::all(n).collect();
        let est = hist.estimate_many(all.len(), |s| all.iter().map(|a| f64::from(u8::from(*a == s))).collect());
        for (a, e) in all.iter().zip(est) {
            out.push(Comparison::new(format!("frequency of {a}"), e, *dist.exact().get(*a)));
        }
    }
    out.push(Comparison::new("index cardinality", hist.estimate(|s| s.len() as f64), dist.average_index_cardinality()));
    if let Some(f) = family {
        let mu = f.mu_table();
        let analytic = *dist.average_union_cardinality(f)?.value();
        out.push(Comparison::new("union cardinality", hist.estimate(|s| *mu.get(s) as f64), analytic));
    }
    Ok(SampleReport::new(config, out))
}

/// Entrywise mean of `Π(A)` over draws, against `ϖ̂(p)`.
pub fn sample_projectors(
    family: &ProjectorFamily<C64>,
    p: &ProbabilityVector<f64>,
    config: SamplerConfig,
) -> Result<SampleReport, SamplingError> {
    let analytic = family.random_projector_average(p)?;
    let hist = draw(p, config)?;
    let d = family.dimension();
    let est = hist.estimate_many(2 * d * d, |s| family.get(s).entries().iter().flat_map(|z| [z.re, z.im]).collect());
    let target = analytic.value();
    let out = (0..d * d)
        .flat_map(|k| {
            let (r, c) = (k / d, k % d);
            let z = target.get(r, c);
            [
                Comparison::new(format!("re[{},{}]", r + 1, c + 1), est[2 * k], z.re),
                Comparison::new(format!("im[{},{}]", r + 1, c + 1), est[2 * k + 1], z.im),
            ]
        })
        .collect();
    Ok(SampleReport::new(config, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prebasis::PreBasis;

    fn cfg(samples: u64) -> SamplerConfig {
        SamplerConfig { seed: 7, samples }
    }

    #[test]
    fn degenerate_probabilities() {
        let ones = ProbabilityVector::uniform(3, 1.0).unwrap();
        let h = draw(&ones, cfg(1000)).unwrap();
        assert_eq!(h.counts().len(), 1);
        assert_eq!(h.counts()[&IndexSet::full(3)], 1000);
        let fam = ProjectorFamily::from_prebasis(&PreBasis::standard(2));
        let r = sample_projectors(&fam, &ProbabilityVector::uniform(2, 0.0).unwrap(), cfg(50)).unwrap();
        assert!(r.within_band && r.max_sigmas == Some(0.0));
        assert_eq!(draw(&ones, cfg(0)), Err(SamplingError::NoSamples));
    }

    #[test]
    fn deterministic_and_sample_count_exact() {
        let p = ProbabilityVector::new(vec![0.5, 0.2, 0.9]).unwrap();
        let a = draw(&p, cfg(1001)).unwrap();
        assert_eq!(a, draw(&p, cfg(1001)).unwrap());
        assert_eq!(a.counts().values().sum::<u64>(), 1001);
        assert_ne!(a, draw(&p, SamplerConfig { seed: 8, samples: 1001 }).unwrap());
    }

    #[test]
    fn set_statistics_agree() {
        let fam = SetFamily::from_sets(&[&["a", "b"], &["b", "c"], &["a", "c", "d"], &["b", "d"]]).unwrap();
        let p = ProbabilityVector::new(vec![0.5, 1.0 / 3.0, 0.25, 0.2]).unwrap();
        let r = sample_sets(&p, Some(&fam), cfg(100_000)).unwrap();
        assert_eq!(r.comparisons.len(), 4 + 16 + 2);
        assert!(r.within_band, "{r:?}");
        assert!(serde_json::to_string(&r).unwrap().contains("ChaCha8Rng"));
    }
}
