//! Observables: cavity and emitter populations, second-order coherence and
//! its median-of-means estimator.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::ComplexMatrix;
use crate::qsim::ShotRecord;
use crate::tcmodel::TcSystem;

#[derive(Debug, Error, PartialEq)]
pub enum ObsError {
    #[error("no shots to estimate from")]
    NoShots,
    #[error("every batch has zero mean photon number")]
    AllBatchesDegenerate,
    #[error("state dimension {found} does not match the register ({expected})")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Populations at one time point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationSample {
    pub time: f64,
    /// Mean photon number.
    pub cavity: f64,
    /// Excitation probability of each emitter.
    pub emitters: Vec<f64>,
    /// Standard error of the mean; zero for exact populations.
    pub cavity_stderr: f64,
    pub emitter_stderr: Vec<f64>,
}

/// Populations from computational basis probabilities.
pub fn populations_from_probabilities(sys: &TcSystem, probs: &[f64], time: f64) -> Result<PopulationSample, ObsError> {
    if probs.len() != sys.dim() {
        return Err(ObsError::DimensionMismatch { expected: sys.dim(), found: probs.len() });
    }
    let n = sys.num_emitters();
    let mut cavity = 0.0;
    let mut emitters = vec![0.0; n];
    for (i, &p) in probs.iter().enumerate() {
        cavity += sys.photons_of(i) as f64 * p;
        for (j, e) in emitters.iter_mut().enumerate() {
            *e += sys.emitter_bit(i, j) as f64 * p;
        }
    }
    Ok(PopulationSample { time, cavity, emitters, cavity_stderr: 0.0, emitter_stderr: vec![0.0; n] })
}

/// `Tr[a^dag a rho]` and `Tr[s+_j s-_j rho]`.
pub fn populations_exact(sys: &TcSystem, rho: &ComplexMatrix, time: f64) -> Result<PopulationSample, ObsError> {
    if rho.rows() != sys.dim() {
        return Err(ObsError::DimensionMismatch { expected: sys.dim(), found: rho.rows() });
    }
    let probs: Vec<f64> = (0..rho.rows()).map(|i| rho[(i, i)].re).collect();
    populations_from_probabilities(sys, &probs, time)
}

/// Sample means and standard errors over shots.
pub fn populations_from_shots(sys: &TcSystem, shots: &[ShotRecord], time: f64) -> Result<PopulationSample, ObsError> {
    if shots.is_empty() {
        return Err(ObsError::NoShots);
    }
    let n = sys.num_emitters();
    let count = shots.len() as f64;
    let stats = |values: &mut dyn Iterator<Item = f64>| -> (f64, f64) {
        let (mut s, mut s2) = (0.0, 0.0);
        for v in values {
            s += v;
            s2 += v * v;
        }
        let mean = s / count;
        let var = if shots.len() > 1 { ((s2 - count * mean * mean) / (count - 1.0)).max(0.0) } else { 0.0 };
        (mean, (var / count).sqrt())
    };
    let (cavity, cavity_stderr) = stats(&mut shots.iter().map(|s| sys.photons_of(s.index()) as f64));
    let mut emitters = Vec::with_capacity(n);
    let mut emitter_stderr = Vec::with_capacity(n);
    for j in 0..n {
        let (m, e) = stats(&mut shots.iter().map(|s| sys.emitter_bit(s.index(), j) as f64));
        emitters.push(m);
        emitter_stderr.push(e);
    }
    Ok(PopulationSample { time, cavity, emitters, cavity_stderr, emitter_stderr })
}

/// Photon-number distribution `p_n` from basis probabilities.
pub fn photon_distribution(sys: &TcSystem, probs: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; sys.max_photons() + 1];
    for (i, &q) in probs.iter().enumerate() {
        p[sys.photons_of(i)] += q;
    }
    p
}

/// `sum n(n-1) p_n / (sum n p_n)^2`; `None` when the mean photon number is zero.
pub fn g2_from_distribution(p: &[f64]) -> Option<f64> {
    let (num, den) = moments(p.iter().enumerate().map(|(n, &q)| (n as f64, q)));
    (den > 0.0).then(|| num / (den * den))
}

/// `Tr[a^dag a^dag a a rho] / Tr[a^dag a rho]^2`.
pub fn g2_exact(sys: &TcSystem, rho: &ComplexMatrix) -> Result<Option<f64>, ObsError> {
    if rho.rows() != sys.dim() {
        return Err(ObsError::DimensionMismatch { expected: sys.dim(), found: rho.rows() });
    }
    let probs: Vec<f64> = (0..rho.rows()).map(|i| rho[(i, i)].re).collect();
    Ok(g2_from_distribution(&photon_distribution(sys, &probs)))
}

fn moments(weighted: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    weighted.fold((0.0, 0.0), |(num, den), (n, w)| (num + n * (n - 1.0) * w, den + n * w))
}

/// Photon-number counts of one batch of shots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchTally {
    /// `counts[n]` = shots that measured `n` photons.
    pub counts: Vec<u64>,
}

impl BatchTally {
    pub fn from_shots(sys: &TcSystem, shots: &[ShotRecord]) -> Self {
        let mut counts = vec![0; sys.max_photons() + 1];
        for s in shots {
            counts[sys.photons_of(s.index())] += 1;
        }
        Self { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Sample means of `n(n-1)` and `n`.
    pub fn means(&self) -> (f64, f64) {
        let total = self.total().max(1) as f64;
        let (num, den) = moments(self.counts.iter().enumerate().map(|(n, &c)| (n as f64, c as f64)));
        (num / total, den / total)
    }
}

/// Median-of-means estimate of g2(0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct G2Estimate {
    /// Per-batch ratio `<n(n-1)> / <n>^2`, `None` for batches with `<n> = 0`.
    pub batch_ratios: Vec<Option<f64>>,
    /// Median of the usable ratios among the first `k + 1` batches.
    pub running_median: Vec<Option<f64>>,
    pub degenerate_batches: usize,
    pub estimate: f64,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

/// Ratio per batch, then the running median over batches. Batches with zero
/// mean photon number are excluded and counted.
pub fn g2_median_of_means(batches: &[BatchTally]) -> Result<G2Estimate, ObsError> {
    if batches.is_empty() {
        return Err(ObsError::NoShots);
    }
    let batch_ratios: Vec<Option<f64>> = batches
        .iter()
        .map(|b| {
            let (num, den) = b.means();
            (den > 0.0).then(|| num / (den * den))
        })
        .collect();
    let mut usable = Vec::new();
    let running_median = batch_ratios
        .iter()
        .map(|r| {
            if let Some(x) = r {
                usable.push(*x);
            }
            (!usable.is_empty()).then(|| median(&mut usable.clone()))
        })
        .collect::<Vec<_>>();
    let degenerate_batches = batch_ratios.iter().filter(|r| r.is_none()).count();
    let estimate = running_median.last().copied().flatten().ok_or(ObsError::AllBatchesDegenerate)?;
    Ok(G2Estimate { batch_ratios, running_median, degenerate_batches, estimate })
}
