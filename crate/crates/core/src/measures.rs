//! Atomic probability measures on the real line and their analytic transforms.
//!
//! Every law handled by the crate (symmetrized singular-value laws, the
//! limiting law of `Σ`, test measures) is a finite weighted sum of Dirac
//! masses. The transforms are therefore exact finite sums:
//!
//! ```text
//! G(z) = Σ w_i / (z - t_i)        F(z) = 1 / G(z)
//! R(w) = G⁻¹(w) - 1/w             m_p  = Σ w_i |t_i|^p
//! ```

use ndarray::Array2;
use ndarray_linalg::SVD;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Atoms with |t| below this are treated as charging 0.
pub const ZERO_ATOM_TOL: f64 = 1e-14;
/// Tolerance used for the symmetry flag and for normalization checks.
pub const SYMMETRY_TOL: f64 = 1e-12;

const R_NEWTON_MAX_STEPS: usize = 200;
const R_RESIDUAL_TOL: f64 = 1e-12;

/// Compactly supported probability measure on ℝ, stored as sorted atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAtoms", into = "RawAtoms")]
pub struct DiscreteMeasure {
    atoms: Vec<(f64, f64)>,
    symmetric: bool,
}

/// Wire form shared by [`DiscreteMeasure`] and [`FiniteMeasure`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAtoms {
    pub atoms: Vec<[f64; 2]>,
}

impl TryFrom<RawAtoms> for DiscreteMeasure {
    type Error = Error;

    fn try_from(raw: RawAtoms) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = raw.atoms.iter().map(|a| (a[0], a[1])).collect();
        let mut atoms = canonical_atoms(&pairs)?;
        if atoms.is_empty() {
            return Err(Error::invalid("measure needs at least one atom"));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        // Already-normalized input is kept bit-for-bit so JSON round-trips are exact.
        if (total - 1.0).abs() > SYMMETRY_TOL {
            for a in &mut atoms {
                a.1 /= total;
            }
        }
        Ok(Self::from_canonical(atoms))
    }
}

impl From<DiscreteMeasure> for RawAtoms {
    fn from(m: DiscreteMeasure) -> Self {
        RawAtoms {
            atoms: m.atoms.iter().map(|&(t, w)| [t, w]).collect(),
        }
    }
}

/// Sort, validate and merge duplicate locations. Weights are not rescaled.
fn canonical_atoms(pairs: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    for (i, &(t, w)) in pairs.iter().enumerate() {
        if !t.is_finite() {
            return Err(Error::invalid(format!("atom {i} has non-finite location {t}")));
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::invalid(format!("atom {i} has nonpositive weight {w}")));
        }
    }
    // `+ 0.0` folds -0.0 into 0.0
    let mut sorted: Vec<(f64, f64)> = pairs.iter().map(|&(t, w)| (t + 0.0, w)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
    for (t, w) in sorted {
        match merged.last_mut() {
            Some(last) if last.0 == t => last.1 += w,
            _ => merged.push((t, w)),
        }
    }
    Ok(merged)
}

fn atoms_symmetric(atoms: &[(f64, f64)]) -> bool {
    let n = atoms.len();
    (0..n.div_ceil(2)).all(|i| {
        let (a, b) = (atoms[i], atoms[n - 1 - i]);
        let scale = a.0.abs().max(b.0.abs()).max(1.0);
        (a.0 + b.0).abs() <= SYMMETRY_TOL * scale && (a.1 - b.1).abs() <= SYMMETRY_TOL
    })
}

impl DiscreteMeasure {
    /// Build a normalized measure from parallel location/weight lists.
    pub fn from_atoms(locations: &[f64], weights: &[f64]) -> Result<Self> {
        if locations.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} locations but {} weights",
                locations.len(),
                weights.len()
            )));
        }
        if locations.is_empty() {
            return Err(Error::invalid("measure needs at least one atom"));
        }
        let pairs: Vec<(f64, f64)> = locations.iter().copied().zip(weights.iter().copied()).collect();
        let mut atoms = canonical_atoms(&pairs)?;
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        for a in &mut atoms {
            a.1 /= total;
        }
        Ok(Self::from_canonical(atoms))
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let (t, w): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        Self::from_atoms(&t, &w)
    }

    fn from_canonical(atoms: Vec<(f64, f64)>) -> Self {
        let symmetric = atoms_symmetric(&atoms);
        Self { atoms, symmetric }
    }

    /// Dirac mass at `c`.
    pub fn point_mass(c: f64) -> Self {
        Self::from_canonical(vec![(c + 0.0, 1.0)])
    }

    /// `½(δ₋ₐ + δₐ)`.
    pub fn symmetric_pair(a: f64) -> Self {
        Self::from_atoms(&[-a, a], &[0.5, 0.5]).expect("finite pair")
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Location of the single atom if this is a point mass.
    pub fn point_mass_location(&self) -> Option<f64> {
        (self.atoms.len() == 1).then(|| self.atoms[0].0)
    }

    /// Smallest `r` with `supp ⊂ [-r, r]`.
    pub fn support_radius(&self) -> f64 {
        self.atoms.iter().fold(0.0, |acc, a| acc.max(a.0.abs()))
    }

    /// Smallest `|t|` over the atoms: the half-width of the largest symmetric gap around 0.
    pub fn min_abs_atom(&self) -> f64 {
        self.atoms.iter().fold(f64::INFINITY, |acc, a| acc.min(a.0.abs()))
    }

    pub fn charges_zero(&self) -> bool {
        self.atoms.iter().any(|a| a.0.abs() < ZERO_ATOM_TOL)
    }

    /// `μ̃(B) = ½[μ(B) + μ(-B)]`.
    pub fn symmetrize(&self) -> Self {
        let mut pairs = Vec::with_capacity(2 * self.atoms.len());
        for &(t, w) in &self.atoms {
            pairs.push((t, 0.5 * w));
            pairs.push((-t, 0.5 * w));
        }
        Self::from_canonical(canonical_atoms(&pairs).expect("valid atoms"))
    }

    /// Push-forward under `t ↦ c·t`.
    pub fn dilate(&self, c: f64) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = self.atoms.iter().map(|&(t, w)| (c * t, w)).collect();
        Self::from_pairs(&pairs)
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(t, w)| w * t).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms.iter().map(|&(t, w)| w * (t - m) * (t - m)).sum()
    }

    /// Absolute moment `m_p = ∫|t|^p dμ`.
    pub fn moment(&self, p: f64) -> Result<f64> {
        if p < 0.0 && self.charges_zero() {
            return Err(Error::Domain(format!(
                "negative moment m_{p} of a measure charging 0"
            )));
        }
        Ok(self.atoms.iter().map(|&(t, w)| w * t.abs().powf(p)).sum())
    }

    /// Raw (signed) integer moment `∫ t^k dμ`.
    pub fn raw_moment(&self, k: i32) -> f64 {
        self.atoms.iter().map(|&(t, w)| w * t.powi(k)).sum()
    }

    /// Fourth free cumulant of a centred measure, `m₄ - 2m₂²`.
    pub fn kappa4(&self) -> f64 {
        let m2 = self.raw_moment(2);
        self.raw_moment(4) - 2.0 * m2 * m2
    }

    fn check_pole(&self, z: C64) -> Result<()> {
        if z.im == 0.0 && self.atoms.iter().any(|a| a.0 == z.re) {
            return Err(Error::Pole(format!("Cauchy transform evaluated at atom {}", z.re)));
        }
        Ok(())
    }

    /// Cauchy transform `G(z) = ∫ 1/(z - t) dμ(t)`; also the analytic
    /// continuation across real gaps.
    pub fn cauchy(&self, z: C64) -> Result<C64> {
        self.check_pole(z)?;
        Ok(self.cauchy_unchecked(z))
    }

    pub(crate) fn cauchy_unchecked(&self, z: C64) -> C64 {
        if !self.symmetric {
            return self.atoms.iter().map(|&(t, w)| w / (z - t)).sum();
        }
        // Combine mirrored atoms into one fraction so that the cancellation
        // between ±t near z = 0 happens exactly.
        let n = self.atoms.len();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n / 2 {
            let (ta, wa) = self.atoms[i];
            let (tb, wb) = self.atoms[n - 1 - i];
            let num = (wa + wb) * z - (wa * tb + wb * ta);
            acc += num / ((z - ta) * (z - tb));
        }
        if n % 2 == 1 {
            let (t, w) = self.atoms[n / 2];
            acc += w / (z - t);
        }
        acc
    }

    /// `G'(z) = -∫ 1/(z - t)² dμ(t)`.
    pub fn cauchy_derivative(&self, z: C64) -> Result<C64> {
        self.check_pole(z)?;
        Ok(self.cauchy_derivative_unchecked(z))
    }

    pub(crate) fn cauchy_derivative_unchecked(&self, z: C64) -> C64 {
        -self
            .atoms
            .iter()
            .map(|&(t, w)| {
                let d = z - t;
                w / (d * d)
            })
            .sum::<C64>()
    }

    /// `F(z) - z`, written as `-(κ₁/z + ∫ t²/(z(z-t)) dμ)/G(z)` away from the
    /// support so that large `|z|` does not cancel.
    pub(crate) fn f_minus_id_unchecked(&self, z: C64) -> C64 {
        let g = self.cauchy_unchecked(z);
        if z.norm() <= 2.0 * self.support_radius() {
            return 1.0 / g - z;
        }
        let tail: C64 = self
            .atoms
            .iter()
            .map(|&(t, w)| w * t * t / (z * (z - t)))
            .sum();
        -(self.mean() / z + tail) / g
    }

    /// Reciprocal Cauchy transform `F = 1/G`.
    pub fn f_transform(&self, z: C64) -> Result<C64> {
        let g = self.cauchy(z)?;
        if g == C64::new(0.0, 0.0) {
            return Err(Error::Pole(format!("F-transform pole at {z}")));
        }
        Ok(1.0 / g)
    }

    /// Radius of the disk on which the R-transform is guaranteed analytic, `1/(6r)`.
    pub fn r_transform_radius(&self) -> f64 {
        let r = self.support_radius();
        if r == 0.0 {
            f64::INFINITY
        } else {
            1.0 / (6.0 * r)
        }
    }

    /// R-transform `R(w) = G⁻¹(w) - 1/w` by Newton inversion of `G` near infinity.
    pub fn r_transform(&self, w: C64) -> Result<C64> {
        if let Some(c) = self.point_mass_location() {
            return Ok(C64::new(c, 0.0));
        }
        let radius = self.r_transform_radius();
        if !(w.norm() < radius) {
            return Err(Error::Domain(format!(
                "|w| = {} outside the R-transform disk of radius {radius}",
                w.norm()
            )));
        }
        let mean = self.mean();
        if w.norm() == 0.0 {
            return Ok(C64::new(mean, 0.0));
        }
        // Solve G(1/w + ρ) = w for ρ = R(w) in the rescaled form
        // Ψ(ρ) = -Σ p_i d_i / (1 + w d_i) = 0, d_i = ρ - t_i, which avoids the
        // cancellation in ζ - 1/w when |w| is small. Splitting off Σ p_i d_i =
        // ρ - κ₁ keeps the residual accurate relative to |ρ - κ₁| ~ |w|.
        let psi = |rho: C64| -> (C64, C64) {
            let mut val = C64::new(0.0, 0.0);
            let mut der = C64::new(0.0, 0.0);
            for &(t, p) in &self.atoms {
                let d = rho - t;
                let q = 1.0 / (1.0 + w * d);
                val += p * d * d * q;
                der -= p * q * q;
            }
            (w * val - (rho - mean), der)
        };
        let mut rho = C64::new(mean, 0.0) + self.variance() * w;
        let (mut val, mut der) = psi(rho);
        let mut residual = val.norm();
        let mut steps = 0;
        while steps < R_NEWTON_MAX_STEPS && residual > 0.0 {
            steps += 1;
            let mut step = val / der;
            if !step.is_finite() {
                break;
            }
            let mut candidate = rho - step;
            let (mut cv, mut cd) = psi(candidate);
            let mut halvings = 0;
            while !(cv.norm() <= residual) && halvings < 30 {
                step *= 0.5;
                candidate = rho - step;
                (cv, cd) = psi(candidate);
                halvings += 1;
            }
            rho = candidate;
            (val, der) = (cv, cd);
            residual = val.norm();
            if step.norm() <= 4.0 * f64::EPSILON * rho.norm().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        let inv_w = 1.0 / w;
        let r = rho;
        let check = (self.cauchy_unchecked(r + inv_w) - w).norm();
        if !(check < R_RESIDUAL_TOL) {
            return Err(Error::NonConvergence {
                what: "R-transform Newton inversion",
                iterations: steps,
                residual: check,
            });
        }
        Ok(r)
    }

    /// Check `|G(iη)| < κ₂` on a log grid `η ∈ [n^{-κ₁}, 1]`.
    pub fn cauchy_bound_diag(&self, kappa1: f64, kappa2: f64, n: usize) -> TransformDiagnostics {
        const GRID: usize = 200;
        let eta_min = (n.max(1) as f64).powf(-kappa1).min(1.0);
        let eta_grid: Vec<f64> = if eta_min >= 1.0 {
            vec![1.0]
        } else {
            let (lo, hi) = (eta_min.ln(), 0.0f64);
            (0..GRID)
                .map(|k| (hi + (lo - hi) * k as f64 / (GRID - 1) as f64).exp())
                .collect()
        };
        let bound = eta_grid
            .iter()
            .map(|&eta| self.cauchy_unchecked(C64::new(0.0, eta)).norm())
            .fold(0.0, f64::max);
        TransformDiagnostics {
            eta_grid,
            bound,
            passed: bound < kappa2,
        }
    }
}

/// Symmetrized empirical singular-value law of `M - shift·1`.
pub fn symmetrized_singular_law(m: &Array2<C64>, shift: C64) -> Result<DiscreteMeasure> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::invalid("expected a non-empty square matrix"));
    }
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[[i, i]] -= shift;
    }
    let (_, s, _) = shifted.svd(false, false)?;
    let w = 1.0 / (2 * n) as f64;
    let pairs: Vec<(f64, f64)> = s.iter().flat_map(|&sv| [(sv, w), (-sv, w)]).collect();
    DiscreteMeasure::from_pairs(&pairs)
}

/// Output of [`DiscreteMeasure::cauchy_bound_diag`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformDiagnostics {
    /// Strictly decreasing.
    pub eta_grid: Vec<f64>,
    /// Largest `|G(iη)|` observed on the grid.
    pub bound: f64,
    pub passed: bool,
}

/// Positive finite measure (not normalized, possibly zero), e.g. the Lévy
/// measure of a ⊞-infinitely divisible law.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawAtoms", into = "RawAtoms")]
pub struct FiniteMeasure {
    atoms: Vec<(f64, f64)>,
}

impl TryFrom<RawAtoms> for FiniteMeasure {
    type Error = Error;

    fn try_from(raw: RawAtoms) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = raw.atoms.iter().map(|a| (a[0], a[1])).collect();
        FiniteMeasure::from_pairs(&pairs)
    }
}

impl From<FiniteMeasure> for RawAtoms {
    fn from(m: FiniteMeasure) -> Self {
        RawAtoms {
            atoms: m.atoms.iter().map(|&(t, w)| [t, w]).collect(),
        }
    }
}

impl FiniteMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Ok(Self {
            atoms: canonical_atoms(pairs)?,
        })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn support_radius(&self) -> f64 {
        self.atoms.iter().fold(0.0, |acc, a| acc.max(a.0.abs()))
    }

    pub fn is_symmetric(&self) -> bool {
        atoms_symmetric(&self.atoms)
    }
}
