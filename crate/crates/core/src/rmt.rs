//! Finite-n random matrix engine for `M = A′ + A″ + Y`, `Y = UΣV`.
//!
//! `A′` and `Σ` are diagonal realizations of the limiting laws, `A″ = PQ`
//! carries the spikes and `U`, `V` are independent Haar unitaries. Both
//! factors are needed: with `A′` and `Σ` simultaneously diagonal, `A′ + UΣ`
//! alone does not make the deterministic part free from `Y`. The
//! determinant functions
//!
//! ```text
//! f(z) = det(1_r + Q (A′ + Y - z)⁻¹ P)      g(z) = det(1_r + Q (A′ - z)⁻¹ P)
//! ```
//!
//! satisfy `det(M - z) = det(A′ + Y - z) f(z)` and
//! `g(z) = det(A′ + A″ - z) / det(A′ - z)`; resolvents are only ever applied
//! through linear solves.

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::{Determinant, EigVals, Factorize, Solve, QR, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::domains::ModelSpec;
use crate::error::{Error, Result};
use crate::measures::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Deterministic generator for trial `seed`.
pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian `(X + iY)/√2`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Uniformly distributed unit vector in `ℂⁿ`.
pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Array1<C64> {
    let v: Array1<C64> = (0..n).map(|_| complex_gaussian(rng)).collect();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v / C64::new(norm, 0.0)
}

/// Haar unitary from the QR factorization of a complex Ginibre matrix, with
/// the columns of `Q` rephased by `R_ii/|R_ii|` so that the law is exactly Haar.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Array2<C64>> {
    if n == 0 {
        return Err(Error::invalid("unitary size must be at least 1"));
    }
    let z = Array2::from_shape_simple_fn((n, n), || complex_gaussian(rng));
    let (mut q, r) = z.qr()?;
    for (j, mut col) in q.axis_iter_mut(Axis(1)).enumerate() {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        col.mapv_inplace(|x| x * phase);
    }
    Ok(q)
}

/// `‖U*U - 1‖_max`.
pub fn unitarity_defect(u: &Array2<C64>) -> f64 {
    let g = u.t().mapv(|x| x.conj()).dot(u);
    let mut worst: f64 = 0.0;
    for ((i, j), &x) in g.indexed_iter() {
        let target = if i == j { ONE } else { ZERO };
        worst = worst.max((x - target).norm());
    }
    worst
}

/// One draw of the finite-n model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSample {
    pub n: usize,
    /// Diagonal of `A′`.
    pub a_prime: Vec<C64>,
    /// `P` (n×r) and `Q` (r×n) with `A″ = PQ`.
    pub p: Array2<C64>,
    pub q: Array2<C64>,
    /// Diagonal of `Σ`.
    pub sigma: Vec<f64>,
    pub u: Array2<C64>,
    pub v: Array2<C64>,
    /// `A′ + A″ + UΣV`.
    pub m: Array2<C64>,
    pub seed: u64,
}

impl ModelSample {
    pub fn rank(&self) -> usize {
        self.p.ncols()
    }

    /// `Y = UΣV`.
    pub fn y(&self) -> Array2<C64> {
        let mut us = self.u.clone();
        for (mut col, &s) in us.axis_iter_mut(Axis(1)).zip(&self.sigma) {
            col.mapv_inplace(|x| x * s);
        }
        us.dot(&self.v)
    }

    /// `Y x` without forming `Y`.
    pub fn apply_y(&self, x: &Array1<C64>) -> Array1<C64> {
        let vx = self.v.dot(x);
        let scaled: Array1<C64> = vx.iter().zip(&self.sigma).map(|(&a, &s)| a * s).collect();
        self.u.dot(&scaled)
    }

    /// `A′ + A″` as a dense matrix.
    pub fn deterministic_part(&self) -> Array2<C64> {
        let mut a = self.p.dot(&self.q);
        for (i, &x) in self.a_prime.iter().enumerate() {
            a[(i, i)] += x;
        }
        a
    }

    /// `A′ + Y`.
    pub fn unperturbed(&self) -> Array2<C64> {
        let mut b = self.y();
        for (i, &x) in self.a_prime.iter().enumerate() {
            b[(i, i)] += x;
        }
        b
    }

    /// `(A′ - z)⁻¹` as a diagonal, or a pole error.
    fn r_prime_diag(&self, z: C64) -> Result<Vec<C64>> {
        self.a_prime
            .iter()
            .map(|&a| {
                let d = a - z;
                if d == ZERO {
                    Err(Error::Pole(format!("A′ - z is singular at z = {z}")))
                } else {
                    Ok(1.0 / d)
                }
            })
            .collect()
    }
}

/// Spike factors for `A″ = diag(θ₁, …, θ_r, 0, …)`: `P = [θ_k e_k]`, `Q = [e_kᵀ]`.
/// Up to unit phases this is the singular value decomposition of `A″`.
pub fn spike_factors(spikes: &[C64], n: usize) -> (Array2<C64>, Array2<C64>) {
    let r = spikes.len();
    let mut p = Array2::zeros((n, r));
    let mut q = Array2::zeros((r, n));
    for (k, &theta) in spikes.iter().enumerate() {
        p[(k, k)] = theta;
        q[(k, k)] = ONE;
    }
    (p, q)
}

/// Draw `M = A′ + A″ + UΣV` at size `n`; `U` then `V` come from the
/// generator seeded with `seed`.
pub fn sample_model(spec: &ModelSpec, n: usize, seed: u64) -> Result<ModelSample> {
    let mut sample = sample_factors(spec, n, seed)?;
    let mut m = sample.unperturbed();
    for k in 0..sample.rank() {
        m[(k, k)] += sample.p[(k, k)];
    }
    sample.m = m;
    Ok(sample)
}

/// The factors of [`sample_model`] with `m` left empty, for callers that
/// only apply `Y` to vectors.
pub(crate) fn sample_factors(spec: &ModelSpec, n: usize, seed: u64) -> Result<ModelSample> {
    let real = spec.realize(n)?;
    let mut rng = rng_for(seed);
    let u = haar_unitary(n, &mut rng)?;
    let v = haar_unitary(n, &mut rng)?;
    let (p, q) = spike_factors(&real.spikes, n);
    Ok(ModelSample {
        n,
        a_prime: real.a_prime,
        p,
        q,
        sigma: real.sigma,
        u,
        v,
        m: Array2::zeros((0, 0)),
        seed,
    })
}

/// All eigenvalues of a dense complex matrix.
pub fn eigenvalues(m: &Array2<C64>) -> Result<Vec<C64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::invalid(format!("matrix is {}×{}, not square", m.nrows(), m.ncols())));
    }
    if m.is_empty() {
        return Ok(Vec::new());
    }
    Ok(m.eigvals()?.to_vec())
}

fn all_singular_values(m: &Array2<C64>) -> Result<Vec<f64>> {
    let (_, s, _) = m.svd(false, false)?;
    Ok(s.to_vec())
}

/// Smallest singular value of `M - z`.
pub fn smallest_sv(m: &Array2<C64>, z: C64) -> Result<f64> {
    let mut shifted = m.clone();
    for i in 0..m.nrows().min(m.ncols()) {
        shifted[(i, i)] -= z;
    }
    Ok(all_singular_values(&shifted)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Largest singular value.
pub fn operator_norm(m: &Array2<C64>) -> Result<f64> {
    Ok(all_singular_values(m)?.into_iter().fold(0.0, f64::max))
}

/// `f(z) = det(1_r + Q R(z) P)` and `g(z) = det(1_r + Q R′(z) P)`.
pub fn det_functions(sample: &ModelSample, z: C64) -> Result<(C64, C64)> {
    let r = sample.rank();
    if r == 0 {
        return Ok((ONE, ONE));
    }
    let mut b = sample.unperturbed();
    for i in 0..sample.n {
        b[(i, i)] -= z;
    }
    let lu = b.factorize()?;
    let mut rp = Array2::zeros((sample.n, r));
    for (k, col) in sample.p.axis_iter(Axis(1)).enumerate() {
        let x = lu.solve(&col.to_owned())?;
        rp.column_mut(k).assign(&x);
    }
    let f = (Array2::eye(r) + sample.q.dot(&rp)).det()?;
    Ok((f, g_function(&sample.a_prime, &sample.p, &sample.q, z)?))
}

/// `g(z) = det(1_r + Q (A′ - z)⁻¹ P)` for diagonal `A′`.
pub fn g_function(a_prime: &[C64], p: &Array2<C64>, q: &Array2<C64>, z: C64) -> Result<C64> {
    let r = p.ncols();
    if r == 0 {
        return Ok(ONE);
    }
    let mut rp = p.clone();
    for (mut row, &a) in rp.axis_iter_mut(Axis(0)).zip(a_prime) {
        let d = a - z;
        if d == ZERO {
            if row.iter().all(|&x| x == ZERO) {
                continue;
            }
            return Err(Error::Pole(format!("A′ - z is singular at z = {z}")));
        }
        row.mapv_inplace(|x| x / d);
    }
    Ok((Array2::eye(r) + q.dot(&rp)).det()?)
}

/// `|det(M - z) - det(A′ + Y - z) f(z)| / |det(M - z)|` from direct LU determinants.
pub fn determinant_identity_error(sample: &ModelSample, z: C64) -> Result<f64> {
    let shift = |a: &Array2<C64>| {
        let mut a = a.clone();
        for i in 0..a.nrows() {
            a[(i, i)] -= z;
        }
        a
    };
    let (sign_m, ln_m) = shift(&sample.m).sln_det()?;
    let (sign_b, ln_b) = shift(&sample.unperturbed()).sln_det()?;
    let (f, _) = det_functions(sample, z)?;
    if sign_m == ZERO {
        return Err(Error::Pole(format!("M - z is singular at z = {z}")));
    }
    let ratio = sign_b / sign_m * (ln_b - ln_m).exp() * f;
    Ok((ratio - ONE).norm())
}

/// `v* (R′(z) Y)^k R′(z) u` by `k` diagonal-solve-and-multiply passes.
pub fn series_term(
    sample: &ModelSample,
    z: C64,
    k: usize,
    v: &Array1<C64>,
    u: &Array1<C64>,
) -> Result<C64> {
    if v.len() != sample.n || u.len() != sample.n {
        return Err(Error::invalid(format!(
            "vectors of length {} and {} for n = {}",
            v.len(),
            u.len(),
            sample.n
        )));
    }
    if u.iter().all(|&x| x == ZERO) || v.iter().all(|&x| x == ZERO) {
        return Err(Error::invalid("series term needs nonzero vectors"));
    }
    let rinv = sample.r_prime_diag(z)?;
    let mut x: Array1<C64> = u.iter().zip(&rinv).map(|(&a, &b)| a * b).collect();
    for _ in 0..k {
        let yx = sample.apply_y(&x);
        x = yx.iter().zip(&rinv).map(|(&a, &b)| a * b).collect();
    }
    Ok(v.iter().zip(&x).map(|(a, b)| a.conj() * b).sum())
}

/// `R′(z) Y` as a dense matrix.
pub fn r_prime_y(sample: &ModelSample, z: C64) -> Result<Array2<C64>> {
    let rinv = sample.r_prime_diag(z)?;
    let mut k = sample.y();
    for (mut row, &d) in k.axis_iter_mut(Axis(0)).zip(&rinv) {
        row.mapv_inplace(|x| x * d);
    }
    Ok(k)
}

fn spectral_radius(m: &Array2<C64>) -> Result<f64> {
    Ok(eigenvalues(m)?.into_iter().map(|l| l.norm()).fold(0.0, f64::max))
}

/// Spectral radius of `R′(z) Y`; below 1 on the outer domain.
pub fn spectral_radius_outer(sample: &ModelSample, z: C64) -> Result<f64> {
    spectral_radius(&r_prime_y(sample, z)?)
}

/// Spectral radius of `(A′ - z)Y⁻¹ = (A′ - z)V*Σ⁻¹U*`; below 1 on the inner domain.
pub fn spectral_radius_inner(sample: &ModelSample, z: C64) -> Result<f64> {
    if sample.sigma.contains(&0.0) {
        return Err(Error::invalid("Σ is singular"));
    }
    let mut su = sample.u.t().mapv(|x| x.conj());
    for (mut row, &s) in su.axis_iter_mut(Axis(0)).zip(&sample.sigma) {
        row.mapv_inplace(|x| x / s);
    }
    let mut k = sample.v.t().mapv(|x| x.conj()).dot(&su);
    for (mut row, &a) in k.axis_iter_mut(Axis(0)).zip(&sample.a_prime) {
        let d = a - z;
        row.mapv_inplace(|x| x * d);
    }
    spectral_radius(&k)
}

/// `‖(R′(z) Y)^k‖` for `k = 1..=kmax`.
pub fn power_norms(sample: &ModelSample, z: C64, kmax: usize) -> Result<Vec<f64>> {
    let k = r_prime_y(sample, z)?;
    let mut power = k.clone();
    let mut norms = Vec::with_capacity(kmax);
    for step in 0..kmax {
        if step > 0 {
            power = power.dot(&k);
        }
        norms.push(operator_norm(&power)?);
    }
    Ok(norms)
}
