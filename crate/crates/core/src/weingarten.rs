//! Unitary Weingarten calculus for small order `p` and Monte-Carlo checks of
//! the Haar sampler.
//!
//! `Wg(·, n)` is the convolution inverse on `S_p` of `σ ↦ n^{#σ}`, where `#σ`
//! counts cycles. For `U` Haar on `U(n)`
//!
//! ```text
//! E[U_{i₁j₁}···U_{i_p j_p} conj(U_{i′₁j′₁}···U_{i′_p j′_p})]
//!     = Σ_{α,β ∈ S_p} Π_k δ(i_k, i′_{α(k)}) δ(j_k, j′_{β(k)}) Wg(αβ⁻¹)
//! ```
//!
//! and `n^{p+|σ|} Wg(σ, n) → Mob(σ)` with `|σ| = p − #σ`. Indices are 0-based.

use std::collections::BTreeMap;

use itertools::Itertools;
use ndarray::{Array1, Array2};
use ndarray_linalg::Inverse;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::ModelSpec;
use crate::error::{Error, Result};
use crate::measures::C64;
use crate::rmt::{haar_unitary, rng_for, sample_factors, series_term};

/// Largest supported order; `S_6` already has 720 elements.
pub const MAX_ORDER: usize = 6;
/// Orders up to this one are inverted in exact rational arithmetic.
pub const EXACT_ORDER: usize = 3;
pub const GRAM_RESIDUAL_TOL: f64 = 1e-10;
/// Bound on the within-class spread of the inverse, in units of `n^{-p}`.
pub const CLASS_SPREAD_TOL: f64 = 1e-12;

const MC_CHUNK: usize = 1000;

/// Cycle type as a decreasing partition.
pub type Partition = Vec<usize>;

/// Permutation of `0..p` in one-line notation.
pub type Perm = Vec<usize>;

pub fn cycle_type(perm: &[usize]) -> Partition {
    let mut seen = vec![false; perm.len()];
    let mut lengths = Vec::new();
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        lengths.push(len);
    }
    lengths.sort_unstable_by(|a, b| b.cmp(a));
    lengths
}

/// `#σ`.
pub fn num_cycles(perm: &[usize]) -> usize {
    cycle_type(perm).len()
}

/// `σ τ⁻¹`.
fn compose_inverse(sigma: &[usize], tau: &[usize]) -> Perm {
    let mut tau_inv = vec![0; tau.len()];
    for (i, &t) in tau.iter().enumerate() {
        tau_inv[t] = i;
    }
    tau_inv.iter().map(|&t| sigma[t]).collect()
}

/// All partitions of `p`, in decreasing lexicographic order.
pub fn partitions(p: usize) -> Vec<Partition> {
    fn go(rest: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if rest == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in (1..=rest.min(max)).rev() {
            prefix.push(part);
            go(rest - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(p, p, &mut Vec::new(), &mut out);
    out
}

fn catalan(k: usize) -> i64 {
    let mut c: i64 = 1;
    for i in 0..k as i64 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c
}

/// `Mob(σ) = Π_c (−1)^{|c|−1} Cat(|c|−1)` over the cycles of a permutation with the given cycle type.
pub fn mobius(cycle_type: &[usize]) -> i64 {
    cycle_type
        .iter()
        .map(|&c| {
            let sign = if (c - 1) % 2 == 0 { 1 } else { -1 };
            sign * catalan(c - 1)
        })
        .product()
}

fn check_order(p: usize, n: usize) -> Result<()> {
    if p == 0 || p > MAX_ORDER {
        return Err(Error::invalid(format!("Weingarten order p = {p} outside 1..={MAX_ORDER}")));
    }
    if n < p {
        return Err(Error::Domain(format!("Gram matrix of S_{p} is singular for n = {n} < p")));
    }
    Ok(())
}

fn check_partition(p: usize, cycle_type: &[usize]) -> Result<()> {
    let decreasing = cycle_type.windows(2).all(|w| w[0] >= w[1]);
    if cycle_type.iter().sum::<usize>() != p || cycle_type.contains(&0) || !decreasing {
        return Err(Error::invalid(format!(
            "{cycle_type:?} is not a decreasing partition of {p}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WgEntry {
    pub cycle_type: Partition,
    pub value: f64,
}

/// `Wg(·, n)` on `S_p`, one value per conjugacy class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeingartenTable {
    pub p: usize,
    pub n: usize,
    /// Ordered as [`partitions`].
    pub values: Vec<WgEntry>,
    /// `‖G W − 1‖_max` with `G[σ,τ] = n^{#(στ⁻¹)}`.
    pub gram_residual: f64,
    /// Largest within-class spread of the full inverse, times `n^p`.
    pub class_spread: f64,
}

impl WeingartenTable {
    pub fn get(&self, cycle_type: &[usize]) -> Option<f64> {
        self.values.iter().find(|e| e.cycle_type == cycle_type).map(|e| e.value)
    }

    /// `Wg(σ)` for a permutation of `0..p`.
    pub fn wg(&self, perm: &[usize]) -> f64 {
        self.get(&cycle_type(perm)).expect("permutation of the table's order")
    }
}

fn gauss_jordan_inverse(mut a: Vec<Vec<BigRational>>) -> Option<Vec<Vec<BigRational>>> {
    let m = a.len();
    let mut inv: Vec<Vec<BigRational>> = (0..m)
        .map(|i| (0..m).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
        .collect();
    for col in 0..m {
        let pivot = (col..m).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let scale = a[col][col].recip();
        for x in a[col].iter_mut().chain(inv[col].iter_mut()) {
            *x = &*x * &scale;
        }
        for r in 0..m {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for c in 0..m {
                let da = &factor * &a[col][c];
                a[r][c] -= da;
                let di = &factor * &inv[col][c];
                inv[r][c] -= di;
            }
        }
    }
    Some(inv)
}

/// Exact `Wg(·, n)` for `p ≤ 6`, from the inverse of the `p!×p!` Gram matrix.
///
/// Orders up to [`EXACT_ORDER`] are inverted over the rationals; larger ones
/// in floating point on the `n^{-p}`-scaled matrix. Both the Gram residual
/// and the class-function property are checked.
pub fn wg_exact(p: usize, n: usize) -> Result<WeingartenTable> {
    check_order(p, n)?;
    let perms: Vec<Perm> = (0..p).permutations(p).collect();
    let m = perms.len();
    let cycles: Vec<Vec<usize>> = perms
        .iter()
        .map(|s| perms.iter().map(|t| num_cycles(&compose_inverse(s, t))).collect())
        .collect();
    let scale = (n as f64).powi(p as i32);

    // Scaled Gram matrix n^{#(στ⁻¹) - p} and its inverse, which is n^p W.
    let gram_scaled = Array2::from_shape_fn((m, m), |(a, b)| (n as f64).powi(cycles[a][b] as i32) / scale);
    let inv_scaled: Array2<f64> = if p <= EXACT_ORDER {
        let nb = BigInt::from(n);
        let gram: Vec<Vec<BigRational>> = cycles
            .iter()
            .map(|row| row.iter().map(|&c| BigRational::from_integer(nb.pow(c as u32))).collect())
            .collect();
        let inv = gauss_jordan_inverse(gram)
            .ok_or_else(|| Error::Domain(format!("Gram matrix of S_{p} is singular for n = {n}")))?;
        let np = BigRational::from_integer(nb.pow(p as u32));
        Array2::from_shape_fn((m, m), |(a, b)| (&inv[a][b] * &np).to_f64().unwrap_or(f64::NAN))
    } else {
        gram_scaled.inv()?
    };

    let product = gram_scaled.dot(&inv_scaled);
    let gram_residual = product
        .indexed_iter()
        .map(|((a, b), &x)| (x - if a == b { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    if !(gram_residual < GRAM_RESIDUAL_TOL) {
        return Err(Error::InternalConsistency(format!(
            "Gram inverse residual {gram_residual:e} for p = {p}, n = {n}"
        )));
    }

    let mut classes: BTreeMap<Partition, (f64, f64, f64, usize)> = BTreeMap::new();
    for (a, s) in perms.iter().enumerate() {
        for (b, t) in perms.iter().enumerate() {
            let x = inv_scaled[(a, b)];
            let e = classes.entry(cycle_type(&compose_inverse(s, t))).or_insert((f64::INFINITY, f64::NEG_INFINITY, 0.0, 0));
            e.0 = e.0.min(x);
            e.1 = e.1.max(x);
            e.2 += x;
            e.3 += 1;
        }
    }
    let class_spread = classes.values().map(|e| e.1 - e.0).fold(0.0, f64::max);
    if !(class_spread < CLASS_SPREAD_TOL) {
        return Err(Error::InternalConsistency(format!(
            "Gram inverse is not a class function (spread {class_spread:e}) for p = {p}, n = {n}"
        )));
    }

    let values = partitions(p)
        .into_iter()
        .map(|cycle_type| {
            let e = classes[&cycle_type];
            WgEntry { value: e.2 / e.3 as f64 / scale, cycle_type }
        })
        .collect();
    Ok(WeingartenTable { p, n, values, gram_residual, class_spread })
}

/// `n^{p+|σ|} Wg(σ, n)` for each `n`; tends to [`mobius`]`(σ)`.
pub fn wg_asymptotic_check(p: usize, cycle_type: &[usize], n_list: &[usize]) -> Result<Vec<f64>> {
    check_partition(p, cycle_type)?;
    let exponent = (2 * p - cycle_type.len()) as i32;
    n_list
        .iter()
        .map(|&n| {
            let table = wg_exact(p, n)?;
            let wg = table.get(cycle_type).expect("partition present in table");
            Ok((n as f64).powi(exponent) * wg)
        })
        .collect()
}

/// A monomial `Π U_{i_k j_k} Π conj(U_{i′_k j′_k})` in the entries of a unitary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentPattern {
    pub label: String,
    pub i: Vec<usize>,
    pub j: Vec<usize>,
    pub i_conj: Vec<usize>,
    pub j_conj: Vec<usize>,
}

impl MomentPattern {
    pub fn new(label: &str, i: &[usize], j: &[usize], i_conj: &[usize], j_conj: &[usize]) -> Result<Self> {
        if i.len() != j.len() || i_conj.len() != j_conj.len() {
            return Err(Error::invalid(format!(
                "index tuples of lengths {}/{} and {}/{}",
                i.len(),
                j.len(),
                i_conj.len(),
                j_conj.len()
            )));
        }
        Ok(MomentPattern {
            label: label.to_string(),
            i: i.to_vec(),
            j: j.to_vec(),
            i_conj: i_conj.to_vec(),
            j_conj: j_conj.to_vec(),
        })
    }

    fn max_index(&self) -> Option<usize> {
        self.i.iter().chain(&self.j).chain(&self.i_conj).chain(&self.j_conj).copied().max()
    }

    /// The monomial evaluated at `u`.
    pub fn evaluate(&self, u: &Array2<C64>) -> C64 {
        let mut x = C64::new(1.0, 0.0);
        for (&a, &b) in self.i.iter().zip(&self.j) {
            x *= u[(a, b)];
        }
        for (&a, &b) in self.i_conj.iter().zip(&self.j_conj) {
            x *= u[(a, b)].conj();
        }
        x
    }

    /// Haar expectation of the monomial on `U(n)`.
    pub fn exact(&self, n: usize) -> Result<f64> {
        mixed_moment_exact(&self.i, &self.i_conj, &self.j, &self.j_conj, n)
    }
}

/// `E[U_{i₁j₁}···U_{i_p j_p} conj(U_{i′₁j′₁}···U_{i′_p j′_p})]` for Haar `U` on `U(n)`.
///
/// Vanishes when the two monomials have different degrees.
pub fn mixed_moment_exact(i: &[usize], i_conj: &[usize], j: &[usize], j_conj: &[usize], n: usize) -> Result<f64> {
    if i.len() != j.len() || i_conj.len() != j_conj.len() {
        return Err(Error::invalid("row and column tuples differ in length"));
    }
    if let Some(&worst) = i.iter().chain(j).chain(i_conj).chain(j_conj).max() {
        if worst >= n {
            return Err(Error::invalid(format!("index {worst} out of range for n = {n}")));
        }
    }
    let p = i.len();
    if p != i_conj.len() {
        return Ok(0.0);
    }
    if p == 0 {
        return Ok(1.0);
    }
    let table = wg_exact(p, n)?;
    let perms: Vec<Perm> = (0..p).permutations(p).collect();
    let matching = |x: &[usize], y: &[usize]| -> Vec<&Perm> {
        perms.iter().filter(|a| (0..p).all(|k| x[k] == y[a[k]])).collect()
    };
    let alphas = matching(i, i_conj);
    let betas = matching(j, j_conj);
    let mut total = 0.0;
    for a in &alphas {
        for b in &betas {
            total += table.wg(&compose_inverse(a, b));
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: C64,
    pub stderr: f64,
}

impl MonteCarloEstimate {
    /// `|mean − target| / stderr`.
    pub fn z_score(&self, target: C64) -> f64 {
        let d = (self.mean - target).norm();
        if self.stderr > 0.0 {
            d / self.stderr
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Empirical means of several monomials over the same Haar draws; trial `t`
/// uses the generator seeded with `seed + t`.
pub fn mc_moments(patterns: &[MomentPattern], n: usize, trials: usize, seed: u64) -> Result<Vec<MonteCarloEstimate>> {
    if trials < 100 {
        return Err(Error::invalid(format!("need at least 100 trials, got {trials}")));
    }
    if let Some(worst) = patterns.iter().filter_map(MomentPattern::max_index).max() {
        if worst >= n {
            return Err(Error::invalid(format!("index {worst} out of range for n = {n}")));
        }
    }
    let k = patterns.len();
    let chunks: Vec<(usize, usize)> = (0..trials)
        .step_by(MC_CHUNK)
        .map(|start| (start, (start + MC_CHUNK).min(trials)))
        .collect();
    let partial: Vec<(Vec<C64>, Vec<f64>)> = chunks
        .par_iter()
        .map(|&(start, end)| {
            let mut sum = vec![C64::new(0.0, 0.0); k];
            let mut sum_sq = vec![0.0; k];
            for t in start..end {
                let mut rng = rng_for(seed.wrapping_add(t as u64));
                let u = haar_unitary(n, &mut rng)?;
                for (idx, pat) in patterns.iter().enumerate() {
                    let x = pat.evaluate(&u);
                    sum[idx] += x;
                    sum_sq[idx] += x.norm_sqr();
                }
            }
            Ok((sum, sum_sq))
        })
        .collect::<Result<_>>()?;
    let mut sum = vec![C64::new(0.0, 0.0); k];
    let mut sum_sq = vec![0.0; k];
    for (s, q) in &partial {
        for idx in 0..k {
            sum[idx] += s[idx];
            sum_sq[idx] += q[idx];
        }
    }
    let count = trials as f64;
    Ok((0..k)
        .map(|idx| {
            let mean = sum[idx] / count;
            let var = ((sum_sq[idx] - count * mean.norm_sqr()) / (count - 1.0)).max(0.0);
            MonteCarloEstimate { mean, stderr: (var / count).sqrt() }
        })
        .collect())
}

/// Monte-Carlo estimate of one monomial.
pub fn mc_moment(pattern: &MomentPattern, n: usize, trials: usize, seed: u64) -> Result<MonteCarloEstimate> {
    Ok(mc_moments(std::slice::from_ref(pattern), n, trials, seed)?[0])
}

/// Ten monomials of degree at most 3, all supported on indices `0..3`.
pub fn standard_battery() -> Vec<MomentPattern> {
    let pat = |label: &str, i: &[usize], j: &[usize], ic: &[usize], jc: &[usize]| {
        MomentPattern::new(label, i, j, ic, jc).expect("well-formed battery pattern")
    };
    vec![
        pat("|U00|^2", &[0], &[0], &[0], &[0]),
        pat("U00", &[0], &[0], &[], &[]),
        pat("|U00|^4", &[0, 0], &[0, 0], &[0, 0], &[0, 0]),
        pat("|U00 U11|^2", &[0, 1], &[0, 1], &[0, 1], &[0, 1]),
        pat("|U00 U01|^2", &[0, 0], &[0, 1], &[0, 0], &[0, 1]),
        pat("U00 U11 conj(U01 U10)", &[0, 1], &[0, 1], &[0, 1], &[1, 0]),
        pat("|U00|^6", &[0, 0, 0], &[0, 0, 0], &[0, 0, 0], &[0, 0, 0]),
        pat("|U00 U11 U22|^2", &[0, 1, 2], &[0, 1, 2], &[0, 1, 2], &[0, 1, 2]),
        pat("U00 U11 U22 conj(U01 U12 U20)", &[0, 1, 2], &[0, 1, 2], &[0, 1, 2], &[1, 2, 0]),
        pat("|U00 U11 U01|^2", &[0, 1, 0], &[0, 1, 1], &[0, 1, 0], &[0, 1, 1]),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryResult {
    pub pattern: MomentPattern,
    pub n: usize,
    pub exact: f64,
    pub estimate: MonteCarloEstimate,
    pub z_score: f64,
}

impl BatteryResult {
    /// Agreement within three standard errors.
    pub fn agrees(&self) -> bool {
        self.z_score <= 3.0
    }
}

/// Exact versus Monte-Carlo moments for the given patterns on `U(n)`.
pub fn run_battery(patterns: &[MomentPattern], n: usize, trials: usize, seed: u64) -> Result<Vec<BatteryResult>> {
    let estimates = mc_moments(patterns, n, trials, seed)?;
    patterns
        .iter()
        .zip(estimates)
        .map(|(pattern, estimate)| {
            let exact = pattern.exact(n)?;
            Ok(BatteryResult {
                pattern: pattern.clone(),
                n,
                exact,
                z_score: estimate.z_score(C64::new(exact, 0.0)),
                estimate,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub n: usize,
    /// Sample mean of `|v*(R′Y)R′u|²`.
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub z: C64,
    pub points: Vec<DecayPoint>,
    /// Least-squares slope of `log mean` against `log n`.
    pub slope: f64,
    pub intercept: f64,
}

impl DecayFit {
    /// `n · mean` per size; roughly constant when the decay is `1/n`.
    pub fn scaled_means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.n as f64 * p.mean).collect()
    }
}

/// Second moment of the first-order isotropic term `v*(R′(z)Y)R′(z)u` with
/// `u = (1,…,1)/√n`, `v = e₀`, averaged over `trials` model draws per size.
pub fn isotropic_decay(spec: &ModelSpec, z: C64, sizes: &[usize], trials: usize, seed: u64) -> Result<DecayFit> {
    if sizes.len() < 2 {
        return Err(Error::invalid("decay fit needs at least two sizes"));
    }
    if trials < 2 {
        return Err(Error::invalid("decay fit needs at least two trials per size"));
    }
    let mut points = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let u = Array1::from_elem(n, C64::new(1.0 / (n as f64).sqrt(), 0.0));
        let mut v = Array1::from_elem(n, C64::new(0.0, 0.0));
        v[0] = C64::new(1.0, 0.0);
        let values: Vec<f64> = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let sample = sample_factors(spec, n, seed.wrapping_add(t))?;
                Ok(series_term(&sample, z, 1, &v, &u)?.norm_sqr())
            })
            .collect::<Result<_>>()?;
        let count = trials as f64;
        let mean = values.iter().sum::<f64>() / count;
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0);
        points.push(DecayPoint { n, mean, stderr: (var / count).sqrt() });
    }
    if points.iter().any(|p| !(p.mean > 0.0)) {
        return Err(Error::InternalConsistency("vanishing second moment in decay fit".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("decay fit needs distinct sizes"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(DecayFit { z, points, slope, intercept: my - slope * mx })
}
