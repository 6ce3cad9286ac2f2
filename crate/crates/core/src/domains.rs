//! Outer and inner outlier domains of the deformed single-ring model.
//!
//! With `μ_Σ` the limiting singular-value law of the unitarily invariant part
//! and `a` the limiting (normal) deterministic part,
//!
//! ```text
//! Θ_out = { z : m₂(|T|)   < 1 / m₋₂(|a - z|) }
//! Θ_in  = { z : m₂(|a - z|) < 1 / m₋₂(|T|)   }
//! ```
//!
//! Both are given by exact finite sums over the atoms of the model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, C64, ZERO_ATOM_TOL};

/// Tolerance on the total weight of a model law read from a config.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Weighted complex atoms: the limiting eigenvalue law of the diagonal part `A′`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawComplexAtoms", into = "RawComplexAtoms")]
pub struct ComplexAtoms {
    atoms: Vec<(C64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawComplexAtoms {
    pub atoms: Vec<(C64, f64)>,
}

impl TryFrom<RawComplexAtoms> for ComplexAtoms {
    type Error = Error;

    fn try_from(raw: RawComplexAtoms) -> Result<Self> {
        Self::new(raw.atoms)
    }
}

impl From<ComplexAtoms> for RawComplexAtoms {
    fn from(a: ComplexAtoms) -> Self {
        RawComplexAtoms { atoms: a.atoms }
    }
}

impl ComplexAtoms {
    /// Atoms in the given order (the order fixes the finite-n quantiles).
    /// Weights must be positive and sum to 1.
    pub fn new(atoms: Vec<(C64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("complex law needs at least one atom"));
        }
        for (i, &(a, w)) in atoms.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::invalid(format!("atom {i} has non-finite location {a}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::invalid(format!("atom {i} has nonpositive weight {w}")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::invalid(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { atoms })
    }

    pub fn point_mass(a: C64) -> Self {
        Self {
            atoms: vec![(a, 1.0)],
        }
    }

    pub fn atoms(&self) -> &[(C64, f64)] {
        &self.atoms
    }

    /// `τ(a) = Σ w_i α_i`.
    pub fn mean(&self) -> C64 {
        self.atoms.iter().map(|&(a, w)| w * a).sum()
    }

    /// Law of `|a - z|` (atoms are moduli, merged when equal).
    pub fn modulus_law(&self, z: C64) -> Result<DiscreteMeasure> {
        let pairs: Vec<(f64, f64)> = self.atoms.iter().map(|&(a, w)| ((a - z).norm(), w)).collect();
        DiscreteMeasure::from_pairs(&pairs)
    }

    /// `m₂(|a - z|)`.
    pub fn m2_shifted(&self, z: C64) -> f64 {
        self.atoms.iter().map(|&(a, w)| w * (a - z).norm_sqr()).sum()
    }

    /// `m₋₂(|a - z|)`, infinite when `z` is an atom.
    pub fn m_minus2_shifted(&self, z: C64) -> f64 {
        let mut acc = 0.0;
        for &(a, w) in &self.atoms {
            let d = (a - z).norm();
            if d < ZERO_ATOM_TOL {
                return f64::INFINITY;
            }
            acc += w / (d * d);
        }
        acc
    }

    /// Location of the atom containing quantile level `u ∈ (0, 1)`.
    pub fn quantile(&self, u: f64) -> C64 {
        let mut cdf = 0.0;
        for &(a, w) in &self.atoms {
            cdf += w;
            if u < cdf {
                return a;
            }
        }
        self.atoms[self.atoms.len() - 1].0
    }
}

/// Lower quantile of a real law at level `u ∈ (0, 1)`.
pub fn real_quantile(mu: &DiscreteMeasure, u: f64) -> f64 {
    let mut cdf = 0.0;
    for &(t, w) in mu.atoms() {
        cdf += w;
        if u < cdf {
            return t;
        }
    }
    mu.atoms()[mu.len() - 1].0
}

/// Limiting data of the model `A′ + A″ + UΣV`, plus the finite-n realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelSpec", into = "RawModelSpec")]
pub struct ModelSpec {
    sigma: DiscreteMeasure,
    aprime: ComplexAtoms,
    spikes: Vec<C64>,
}

/// Wire form; `sigma` is kept raw so that unnormalized weights are reported
/// instead of silently rescaled.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModelSpec {
    pub sigma: RawSigma,
    pub aprime: RawComplexAtoms,
    #[serde(default)]
    pub spikes: Vec<C64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSigma {
    pub atoms: Vec<[f64; 2]>,
}

impl TryFrom<RawModelSpec> for ModelSpec {
    type Error = Error;

    fn try_from(raw: RawModelSpec) -> Result<Self> {
        let total: f64 = raw.sigma.atoms.iter().map(|a| a[1]).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::config(
                "model.sigma.atoms",
                format!("weights sum to {total}, expected 1"),
            ));
        }
        let pairs: Vec<(f64, f64)> = raw.sigma.atoms.iter().map(|a| (a[0], a[1])).collect();
        let sigma = DiscreteMeasure::from_pairs(&pairs)
            .map_err(|e| Error::config("model.sigma.atoms", e.to_string()))?;
        let aprime = ComplexAtoms::new(raw.aprime.atoms)
            .map_err(|e| Error::config("model.aprime.atoms", e.to_string()))?;
        Self::new(sigma, aprime, raw.spikes)
    }
}

impl From<ModelSpec> for RawModelSpec {
    fn from(m: ModelSpec) -> Self {
        RawModelSpec {
            sigma: RawSigma {
                atoms: m.sigma.atoms().iter().map(|&(t, w)| [t, w]).collect(),
            },
            aprime: m.aprime.into(),
            spikes: m.spikes,
        }
    }
}

/// Diagonal finite-n data: `A′_n`, `Σ_n` and the spike values on the
/// first `r` slots of `A″_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub a_prime: Vec<C64>,
    pub sigma: Vec<f64>,
    pub spikes: Vec<C64>,
}

impl ModelSpec {
    pub fn new(sigma: DiscreteMeasure, aprime: ComplexAtoms, spikes: Vec<C64>) -> Result<Self> {
        if let Some(&(t, _)) = sigma.atoms().iter().find(|a| a.0 < 0.0) {
            return Err(Error::config("model.sigma.atoms", format!("negative singular value {t}")));
        }
        if let Some(s) = spikes.iter().find(|s| !s.is_finite()) {
            return Err(Error::config("model.spikes", format!("non-finite spike {s}")));
        }
        Ok(Self {
            sigma,
            aprime,
            spikes,
        })
    }

    /// The worked example: `μ_Σ = 0.4δ₁ + 0.6δ₂`, `a = 0.15δ₋₂.₂ + 0.85δ₁`
    /// and six spikes, four of them in `Θ_out` and two in `Θ_in`.
    pub fn example() -> Self {
        let sigma = DiscreteMeasure::from_atoms(&[1.0, 2.0], &[0.4, 0.6]).expect("valid law");
        let aprime = ComplexAtoms::new(vec![(C64::new(-2.2, 0.0), 0.15), (C64::new(1.0, 0.0), 0.85)])
            .expect("valid law");
        let spikes = vec![
            C64::new(0.75, 0.25),
            C64::new(0.65, 0.25),
            C64::new(-1.5, 1.5),
            C64::new(-2.0, 1.2),
            C64::new(-1.0, -1.0),
            C64::new(-1.0, -0.5),
        ];
        Self::new(sigma, aprime, spikes).expect("valid model")
    }

    /// `a = 0`, the plain single-ring model.
    pub fn single_ring(sigma: DiscreteMeasure) -> Result<Self> {
        Self::new(sigma, ComplexAtoms::point_mass(C64::new(0.0, 0.0)), Vec::new())
    }

    pub fn sigma_law(&self) -> &DiscreteMeasure {
        &self.sigma
    }

    pub fn aprime_law(&self) -> &ComplexAtoms {
        &self.aprime
    }

    pub fn spikes(&self) -> &[C64] {
        &self.spikes
    }

    pub fn with_spikes(&self, spikes: Vec<C64>) -> Result<Self> {
        Self::new(self.sigma.clone(), self.aprime.clone(), spikes)
    }

    pub fn rank(&self) -> usize {
        self.spikes.len()
    }

    /// `μ₁ = (|a - z|)~`, the symmetrized law of `|a - z|`.
    pub fn mu1(&self, z: C64) -> Result<DiscreteMeasure> {
        Ok(self.aprime.modulus_law(z)?.symmetrize())
    }

    /// `μ₂ = (|T|)~`, the symmetrized singular-value law.
    pub fn mu2(&self) -> DiscreteMeasure {
        self.sigma.symmetrize()
    }

    /// Diagonal realization at size `n`: spikes on the first `r` slots (where
    /// `A′_n` vanishes), the other entries of `A′_n` and all of `Σ_n` at
    /// midpoint quantiles of the limiting laws.
    pub fn realize(&self, n: usize) -> Result<Realization> {
        let r = self.rank();
        if n <= r {
            return Err(Error::invalid(format!("n = {n} must exceed the spike count {r}")));
        }
        let bulk = n - r;
        let mut a_prime = vec![C64::new(0.0, 0.0); r];
        a_prime.extend((0..bulk).map(|j| self.aprime.quantile((j as f64 + 0.5) / bulk as f64)));
        let sigma = (0..n)
            .map(|i| real_quantile(&self.sigma, (i as f64 + 0.5) / n as f64))
            .collect();
        Ok(Realization {
            a_prime,
            sigma,
            spikes: self.spikes.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainClass {
    ThetaOut,
    ThetaIn,
    Neither,
}

impl DomainClass {
    /// Short label used in CSV output.
    pub fn label(self) -> &'static str {
        match self {
            DomainClass::ThetaOut => "out",
            DomainClass::ThetaIn => "in",
            DomainClass::Neither => "none",
        }
    }
}

/// `1/m₋₂(|a - z|) - m₂(|T|)`: positive exactly on `Θ_out`.
pub fn outer_margin(model: &ModelSpec, z: C64) -> f64 {
    let m2_t = model.sigma.raw_moment(2);
    1.0 / model.aprime.m_minus2_shifted(z) - m2_t
}

/// `1/m₋₂(|T|) - m₂(|a - z|)`: positive exactly on `Θ_in`.
pub fn inner_margin(model: &ModelSpec, z: C64) -> f64 {
    let inv = match model.sigma.moment(-2.0) {
        Ok(m) => 1.0 / m,
        Err(_) => 0.0,
    };
    inv - model.aprime.m2_shifted(z)
}

pub fn theta_classify(model: &ModelSpec, z: C64) -> DomainClass {
    if outer_margin(model, z) > 0.0 {
        DomainClass::ThetaOut
    } else if inner_margin(model, z) > 0.0 {
        DomainClass::ThetaIn
    } else {
        DomainClass::Neither
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainGrid {
    /// `[xmin, xmax, ymin, ymax]`.
    pub bbox: [f64; 4],
    pub resolution: usize,
    /// Row-major: row `j` is `y_j`, column `i` is `x_i`, both increasing.
    pub classes: Vec<DomainClass>,
}

impl DomainGrid {
    pub fn x(&self, i: usize) -> f64 {
        axis(self.bbox[0], self.bbox[1], self.resolution, i)
    }

    pub fn y(&self, j: usize) -> f64 {
        axis(self.bbox[2], self.bbox[3], self.resolution, j)
    }

    pub fn class_at(&self, i: usize, j: usize) -> DomainClass {
        self.classes[j * self.resolution + i]
    }

    /// Class of the node nearest to `z` (clamped to the box).
    pub fn nearest(&self, z: C64) -> DomainClass {
        let idx = |v: f64, lo: f64, hi: f64| {
            let t = ((v - lo) / (hi - lo) * (self.resolution - 1) as f64).round();
            t.clamp(0.0, (self.resolution - 1) as f64) as usize
        };
        self.class_at(
            idx(z.re, self.bbox[0], self.bbox[1]),
            idx(z.im, self.bbox[2], self.bbox[3]),
        )
    }

    /// `(x, y, class)` for every node in row-major order.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, DomainClass)> + '_ {
        let res = self.resolution;
        self.classes
            .iter()
            .enumerate()
            .map(move |(k, &c)| (self.x(k % res), self.y(k / res), c))
    }
}

fn axis(lo: f64, hi: f64, res: usize, k: usize) -> f64 {
    lo + (hi - lo) * k as f64 / (res - 1) as f64
}

pub fn grid_map(model: &ModelSpec, bbox: [f64; 4], resolution: usize) -> Result<DomainGrid> {
    if resolution < 2 {
        return Err(Error::invalid(format!("resolution must be at least 2, got {resolution}")));
    }
    if !(bbox[0] < bbox[1] && bbox[2] < bbox[3]) || bbox.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("degenerate bounding box {bbox:?}")));
    }
    let classes = (0..resolution)
        .into_par_iter()
        .flat_map_iter(|j| {
            let y = axis(bbox[2], bbox[3], resolution, j);
            (0..resolution).map(move |i| {
                let x = axis(bbox[0], bbox[1], resolution, i);
                theta_classify(model, C64::new(x, y))
            })
        })
        .collect();
    Ok(DomainGrid {
        bbox,
        resolution,
        classes,
    })
}

/// Disk centred at `τ(a)` whose interior is `Θ_in`; `None` when `Θ_in` is empty.
pub fn f2_disk(model: &ModelSpec) -> Option<(C64, f64)> {
    let m_minus2 = model.sigma.moment(-2.0).ok()?;
    let center = model.aprime.mean();
    let arg = 1.0 / m_minus2 - model.aprime.m2_shifted(center);
    (arg > 0.0).then(|| (center, arg.sqrt()))
}

/// `(1/√m₋₂(μ_Σ), √m₂(μ_Σ))` for the model with `a = 0`.
pub fn ring_radii(model: &ModelSpec) -> Result<(f64, f64)> {
    let atoms = model.aprime.atoms();
    if atoms.len() != 1 || atoms[0].0.norm() != 0.0 {
        return Err(Error::invalid("ring radii need the deterministic part a = 0"));
    }
    let outer = model.sigma.raw_moment(2).sqrt();
    let inner = 1.0 / model.sigma.moment(-2.0)?.sqrt();
    Ok((inner, outer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn unit_ring() -> ModelSpec {
        ModelSpec::single_ring(DiscreteMeasure::point_mass(1.0)).unwrap()
    }

    #[test]
    fn classify_example_points() {
        let m = ModelSpec::example();
        // m₋₂(|a - z|) = 0.15/2.74 + 0.85/8.5
        let mm2 = m.aprime_law().m_minus2_shifted(c(-1.5, 1.5));
        assert_abs_diff_eq!(mm2, 0.15 / 2.74 + 0.85 / 8.5, epsilon = 1e-14);
        assert_eq!(theta_classify(&m, c(-1.5, 1.5)), DomainClass::ThetaOut);
        let m2 = m.aprime_law().m2_shifted(c(0.75, 0.25));
        assert_abs_diff_eq!(m2, 0.15 * 8.765 + 0.85 * 0.125, epsilon = 1e-12);
        assert_eq!(theta_classify(&m, c(0.75, 0.25)), DomainClass::ThetaIn);
        let classes: Vec<_> = m.spikes().iter().map(|&s| theta_classify(&m, s)).collect();
        assert_eq!(classes[..2], [DomainClass::ThetaIn, DomainClass::ThetaIn]);
        assert!(classes[2..].iter().all(|&k| k == DomainClass::ThetaOut));
    }

    #[test]
    fn classify_unit_ring() {
        let m = unit_ring();
        assert_eq!(theta_classify(&m, c(0.5, 0.0)), DomainClass::ThetaIn);
        assert_eq!(theta_classify(&m, c(2.0, 0.0)), DomainClass::ThetaOut);
        assert_eq!(theta_classify(&m, c(1.0, 0.0)), DomainClass::Neither);
        // z at the atom of a: m₋₂ = ∞, so not outer
        assert_eq!(theta_classify(&m, c(0.0, 0.0)), DomainClass::ThetaIn);
    }

    #[test]
    fn sigma_charging_zero_has_no_inner_domain() {
        let sigma = DiscreteMeasure::from_atoms(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        let m = ModelSpec::single_ring(sigma).unwrap();
        assert_eq!(theta_classify(&m, c(0.01, 0.0)), DomainClass::Neither);
        assert!(f2_disk(&m).is_none());
    }

    #[test]
    fn grid_examples() {
        let m = ModelSpec::example();
        let g = grid_map(&m, [-3.0, 2.0, -2.0, 2.0], 100).unwrap();
        assert_eq!(g.classes.len(), 100 * 100);
        for &s in &m.spikes()[2..] {
            assert_eq!(g.nearest(s), DomainClass::ThetaOut);
        }
        for &s in &m.spikes()[..2] {
            assert_eq!(g.nearest(s), DomainClass::ThetaIn);
        }
        let corners = grid_map(&unit_ring(), [-2.0, 2.0, -2.0, 2.0], 2).unwrap();
        assert_eq!(corners.classes, vec![DomainClass::ThetaOut; 4]);
        assert!(grid_map(&m, [0.0, 1.0, 0.0, 1.0], 1).is_err());
    }

    #[test]
    fn grid_is_row_major() {
        let m = ModelSpec::example();
        let g = grid_map(&m, [-3.0, 2.0, -2.0, 2.0], 7).unwrap();
        for (i, j) in [(0, 0), (3, 5), (6, 2)] {
            assert_eq!(g.class_at(i, j), theta_classify(&m, c(g.x(i), g.y(j))));
        }
        let nodes: Vec<_> = g.nodes().collect();
        assert_eq!(nodes[8].0, g.x(1));
        assert_eq!(nodes[8].1, g.y(1));
    }

    #[test]
    fn f2_disk_examples() {
        let (center, radius) = f2_disk(&ModelSpec::example()).unwrap();
        assert_abs_diff_eq!(center.re, 0.52, epsilon = 1e-14);
        assert_abs_diff_eq!(center.im, 0.0, epsilon = 0.0);
        let expected = (1.0 / 0.55 - (0.15 * 2.72f64.powi(2) + 0.85 * 0.48f64.powi(2))).sqrt();
        assert_abs_diff_eq!(radius, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(radius, 0.71595, epsilon = 1e-5);

        let (center, radius) = f2_disk(&unit_ring()).unwrap();
        assert_eq!(center, c(0.0, 0.0));
        assert_abs_diff_eq!(radius, 1.0, epsilon = 1e-15);

        let spread = ComplexAtoms::new(vec![(c(-10.0, 0.0), 0.5), (c(10.0, 0.0), 0.5)]).unwrap();
        let m = ModelSpec::new(DiscreteMeasure::point_mass(1.0), spread, vec![]).unwrap();
        assert!(f2_disk(&m).is_none());
    }

    #[test]
    fn ring_radii_examples() {
        let cases = [
            (vec![1.0, 2.0], vec![0.4, 0.6], 1.34840, 1.67332),
            (vec![1.0], vec![1.0], 1.0, 1.0),
            (vec![1.0, 3.0], vec![0.5, 0.5], 1.34164, 2.23607),
        ];
        for (t, w, inner, outer) in cases {
            let m = ModelSpec::single_ring(DiscreteMeasure::from_atoms(&t, &w).unwrap()).unwrap();
            let (ri, ro) = ring_radii(&m).unwrap();
            assert_abs_diff_eq!(ri, inner, epsilon = 1e-5);
            assert_abs_diff_eq!(ro, outer, epsilon = 1e-5);
        }
        assert!(ring_radii(&ModelSpec::example()).is_err());
    }

    #[test]
    fn reduction_to_ring() {
        let m = ModelSpec::single_ring(DiscreteMeasure::from_atoms(&[1.0, 2.0], &[0.4, 0.6]).unwrap())
            .unwrap();
        let (ri, ro) = ring_radii(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let z = c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let k = theta_classify(&m, z);
            assert_eq!(k == DomainClass::ThetaOut, z.norm() > ro, "z = {z}");
            assert_eq!(k == DomainClass::ThetaIn, z.norm() < ri, "z = {z}");
        }
    }

    #[test]
    fn f2_disk_agrees_with_classification() {
        let m = ModelSpec::example();
        let (center, radius) = f2_disk(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let z = c(rng.random_range(-1.0..2.0), rng.random_range(-1.0..1.0));
            if ((z - center).norm() - radius).abs() < 1e-12 {
                continue;
            }
            assert_eq!(
                (z - center).norm() < radius,
                theta_classify(&m, z) == DomainClass::ThetaIn,
                "z = {z}"
            );
        }
    }

    #[test]
    fn margins_are_lipschitz_away_from_atoms() {
        // Compact set [-1.9, -0.5] × [0.5, 2] stays at distance ≥ 0.5 from the atoms of a.
        let m = ModelSpec::example();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut worst: f64 = 0.0;
        for _ in 0..500 {
            let z = c(rng.random_range(-1.9..-0.5), rng.random_range(0.5..2.0));
            let h = 1e-6;
            for f in [outer_margin, inner_margin] {
                let dx = (f(&m, z + h) - f(&m, z - h)) / (2.0 * h);
                let dy = (f(&m, z + c(0.0, h)) - f(&m, z - c(0.0, h))) / (2.0 * h);
                worst = worst.max(dx.hypot(dy));
            }
        }
        assert!(worst.is_finite() && worst < 100.0);
    }

    #[test]
    fn realization_layout() {
        let m = ModelSpec::example();
        let r = m.realize(20).unwrap();
        assert_eq!(r.a_prime.len(), 20);
        assert!(r.a_prime[..6].iter().all(|a| a.norm() == 0.0));
        let low = r.a_prime[6..].iter().filter(|a| a.re == -2.2).count();
        assert_eq!(low, 2); // quantiles (j + 0.5)/14 below 0.15
        assert_eq!(r.sigma.iter().filter(|&&s| s == 1.0).count(), 8);
        assert!(matches!(m.realize(6), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn config_json_validation() {
        let json = r#"{"sigma":{"atoms":[[1.0,0.4],[2.0,0.6]]},
            "aprime":{"atoms":[[[-2.2,0.0],0.15],[[1.0,0.0],0.85]]},
            "spikes":[[0.75,0.25],[0.65,0.25],[-1.5,1.5],[-2.0,1.2],[-1.0,-1.0],[-1.0,-0.5]]}"#;
        let m: ModelSpec = serde_json::from_str(json).unwrap();
        assert_eq!(m, ModelSpec::example());
        let back: ModelSpec = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);

        let bad = r#"{"sigma":{"atoms":[[1.0,0.3],[2.0,0.6]]},"aprime":{"atoms":[[[0,0],1]]}}"#;
        let err = serde_json::from_str::<ModelSpec>(bad).unwrap_err().to_string();
        assert!(err.contains("model.sigma.atoms"), "{err}");
        let bad = r#"{"sigma":{"atoms":[[1.0,1.0]]},"aprime":{"atoms":[[[0,0],0.9]]}}"#;
        let err = serde_json::from_str::<ModelSpec>(bad).unwrap_err().to_string();
        assert!(err.contains("model.aprime.atoms"), "{err}");
        let unknown = r#"{"sigma":{"atoms":[[1.0,1.0]]},"aprime":{"atoms":[[[0,0],1]]},"extra":1}"#;
        assert!(serde_json::from_str::<ModelSpec>(unknown).is_err());
    }
}
