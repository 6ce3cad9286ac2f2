//! Seeded Monte-Carlo experiments on outliers.
//!
//! Spikes in `Θ_out` should each attract exactly one eigenvalue of the full
//! model, while a disk compactly inside `Θ_in` should contain none, even when
//! spikes sit there.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{f2_disk, theta_classify, DomainClass, ModelSpec};
use crate::error::{Error, Result};
use crate::measures::C64;
use crate::rmt::{eigenvalues, g_function, sample_model, spike_factors};

/// Boundary samples per spike circle for the stability margin.
pub const BOUNDARY_POINTS: usize = 64;

/// Eigenvalues found in the disk of radius `tol` around one spike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeMatch {
    pub spike: C64,
    pub count: usize,
    /// Distance to the nearest eigenvalue inside the disk.
    pub distance: Option<f64>,
}

impl SpikeMatch {
    pub fn matched(&self) -> bool {
        self.count == 1
    }
}

/// A spike matches iff exactly one eigenvalue lies within `tol` of it.
pub fn match_spikes(eigs: &[C64], spikes: &[C64], tol: f64) -> Result<Vec<SpikeMatch>> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tol must be positive, got {tol}")));
    }
    for (i, a) in spikes.iter().enumerate() {
        for b in &spikes[i + 1..] {
            if (a - b).norm() <= 2.0 * tol {
                return Err(Error::invalid(format!(
                    "spikes {a} and {b} are not separated by more than 2·tol = {}",
                    2.0 * tol
                )));
            }
        }
    }
    Ok(spikes
        .iter()
        .map(|&spike| {
            let mut count = 0;
            let mut distance: Option<f64> = None;
            for &l in eigs {
                let d = (l - spike).norm();
                if d <= tol {
                    count += 1;
                    distance = Some(distance.map_or(d, |best| best.min(d)));
                }
            }
            SpikeMatch {
                spike,
                count,
                distance,
            }
        })
        .collect())
}

/// `points` equispaced nodes on the circle `|z - center| = radius`.
pub fn circle(center: C64, radius: f64, points: usize) -> Vec<C64> {
    (0..points)
        .map(|k| center + C64::from_polar(radius, std::f64::consts::TAU * k as f64 / points as f64))
        .collect()
}

/// `min_{z ∈ boundary} |det(A - z)/det(A′ - z)|` for the size-`n` realization.
pub fn stability_margin(spec: &ModelSpec, n: usize, boundary: &[C64]) -> Result<f64> {
    if boundary.is_empty() {
        return Err(Error::invalid("boundary sample is empty"));
    }
    let real = spec.realize(n)?;
    let (p, q) = spike_factors(&real.spikes, n);
    boundary.iter().try_fold(f64::INFINITY, |acc, &z| {
        Ok(acc.min(g_function(&real.a_prime, &p, &q, z)?.norm()))
    })
}

/// Number of eigenvalues in the closed disk.
pub fn inner_empty_check(eigs: &[C64], center: C64, radius: f64) -> usize {
    eigs.iter().filter(|l| (*l - center).norm() <= radius).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: C64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeStats {
    pub spike: C64,
    /// Trials in which exactly one eigenvalue fell within `tol`.
    pub match_count: usize,
    /// Trials in which `A′ + A″` and the full model have equally many eigenvalues in the disk.
    pub count_agreement: usize,
    pub mean_distance: Option<f64>,
    pub max_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    /// Eigenvalue counts in each outer spike disk.
    pub counts: Vec<usize>,
    pub distances: Vec<Option<f64>>,
    pub inner_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub n: usize,
    pub trials: usize,
    pub tol: f64,
    /// Outer-domain spikes, in model order.
    pub per_spike: Vec<SpikeStats>,
    /// Spikes that are not in `Θ_out` and were not matched.
    pub other_spikes: Vec<C64>,
    pub inner_region: Option<Disk>,
    /// Trials with at least one eigenvalue in the inner region.
    pub inner_violations: usize,
    /// Smallest `|g|` over circles of radius `tol` around the outer spikes.
    pub stability_margin: f64,
    pub seeds: Vec<u64>,
    pub records: Vec<TrialRecord>,
}

impl OutlierReport {
    /// Trials with an empty inner region.
    pub fn inner_clean_trials(&self) -> usize {
        self.trials - self.inner_violations
    }
}

/// Builder for an outlier experiment; trial `t` uses seed `base_seed + t`.
#[derive(Debug, Clone)]
pub struct Experiment {
    spec: ModelSpec,
    n: usize,
    trials: usize,
    tol: f64,
    base_seed: u64,
    inner_region: Option<Disk>,
}

impl Experiment {
    pub fn new(spec: ModelSpec, n: usize) -> Self {
        Self {
            spec,
            n,
            trials: 1,
            tol: 0.2,
            base_seed: 0,
            inner_region: None,
        }
    }

    pub fn trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn seed(mut self, base_seed: u64) -> Self {
        self.base_seed = base_seed;
        self
    }

    /// Count eigenvalues in this disk instead of the `Θ_in` disk shrunk by `tol`.
    pub fn inner_region(mut self, center: C64, radius: f64) -> Self {
        self.inner_region = Some(Disk { center, radius });
        self
    }

    fn resolved_inner_region(&self) -> Option<Disk> {
        self.inner_region.or_else(|| {
            let (center, radius) = f2_disk(&self.spec)?;
            let radius = radius - self.tol;
            (radius > 0.0).then_some(Disk { center, radius })
        })
    }

    pub fn run(&self) -> Result<OutlierReport> {
        Ok(self.run_keeping_spectra()?.0)
    }

    /// Run and also return every trial's eigenvalues, in trial order.
    pub fn run_keeping_spectra(&self) -> Result<(OutlierReport, Vec<Vec<C64>>)> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tol must be positive, got {}", self.tol)));
        }
        let (outer, other): (Vec<C64>, Vec<C64>) = self
            .spec
            .spikes()
            .iter()
            .partition(|&&s| theta_classify(&self.spec, s) == DomainClass::ThetaOut);
        // Separation depends only on the model; check it before sampling.
        match_spikes(&[], &outer, self.tol)?;
        let inner = self.resolved_inner_region();
        let real = self.spec.realize(self.n)?;
        let deterministic: Vec<C64> = real
            .a_prime
            .iter()
            .enumerate()
            .map(|(i, &a)| a + real.spikes.get(i).copied().unwrap_or_default())
            .collect();
        let a_counts: Vec<usize> = outer
            .iter()
            .map(|&s| inner_empty_check(&deterministic, s, self.tol))
            .collect();

        let seeds: Vec<u64> = (0..self.trials as u64).map(|t| self.base_seed + t).collect();
        let results: Vec<(TrialRecord, Vec<C64>)> = seeds
            .par_iter()
            .map(|&seed| {
                let sample = sample_model(&self.spec, self.n, seed)?;
                let eigs = eigenvalues(&sample.m)?;
                let matches = match_spikes(&eigs, &outer, self.tol)?;
                let inner_count = inner.map_or(0, |d| inner_empty_check(&eigs, d.center, d.radius));
                let record = TrialRecord {
                    seed,
                    counts: matches.iter().map(|m| m.count).collect(),
                    distances: matches
                        .iter()
                        .map(|m| if m.matched() { m.distance } else { None })
                        .collect(),
                    inner_count,
                };
                Ok((record, eigs))
            })
            .collect::<Result<_>>()?;

        let per_spike = outer
            .iter()
            .enumerate()
            .map(|(k, &spike)| {
                let mut match_count = 0;
                let mut count_agreement = 0;
                let mut dists = Vec::new();
                for (rec, _) in &results {
                    if rec.counts[k] == 1 {
                        match_count += 1;
                    }
                    if rec.counts[k] == a_counts[k] {
                        count_agreement += 1;
                    }
                    dists.extend(rec.distances[k]);
                }
                SpikeStats {
                    spike,
                    match_count,
                    count_agreement,
                    mean_distance: (!dists.is_empty()).then(|| dists.iter().sum::<f64>() / dists.len() as f64),
                    max_distance: dists.iter().copied().reduce(f64::max),
                }
            })
            .collect();

        let mut stability = 1.0f64;
        if !outer.is_empty() {
            let boundary: Vec<C64> = outer
                .iter()
                .flat_map(|&s| circle(s, self.tol, BOUNDARY_POINTS))
                .collect();
            stability = stability_margin(&self.spec, self.n, &boundary)?;
        }

        let (records, spectra): (Vec<TrialRecord>, Vec<Vec<C64>>) = results.into_iter().unzip();
        let report = OutlierReport {
            n: self.n,
            trials: self.trials,
            tol: self.tol,
            per_spike,
            other_spikes: other,
            inner_region: inner,
            inner_violations: records.iter().filter(|r| r.inner_count > 0).count(),
            stability_margin: stability,
            seeds,
            records,
        };
        Ok((report, spectra))
    }
}

/// Run `trials` seeded trials with the default inner region.
pub fn run_experiment(
    spec: &ModelSpec,
    n: usize,
    trials: usize,
    tol: f64,
    base_seed: u64,
) -> Result<OutlierReport> {
    Experiment::new(spec.clone(), n)
        .trials(trials)
        .tol(tol)
        .seed(base_seed)
        .run()
}
