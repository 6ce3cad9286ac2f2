//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so that every line is printed even when
//! an earlier criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use deformed_ring::domains::{ring_radii, ModelSpec};
use deformed_ring::outliers::Experiment;
use deformed_ring::rmt::{
    determinant_identity_error, eigenvalues, rng_for, sample_model, spectral_radius_inner, spectral_radius_outer,
};
use deformed_ring::subordination::{density_on_grid, free_convolution_cauchy, solve, support_gap, Side};
use deformed_ring::weingarten::{run_battery, standard_battery, wg_asymptotic_check, wg_exact};
use deformed_ring::{DiscreteMeasure, Error, C64};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn sym(t: f64) -> DiscreteMeasure {
    DiscreteMeasure::from_atoms(&[-t, t], &[0.5, 0.5]).unwrap()
}

fn sigma_law() -> DiscreteMeasure {
    DiscreteMeasure::from_atoms(&[1.0, 2.0], &[0.4, 0.6]).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn outer_spikes() -> [C64; 4] {
    [c(-1.5, 1.5), c(-2.0, 1.2), c(-1.0, -1.0), c(-1.0, -0.5)]
}

fn worked_example_outliers() -> Outcome {
    let report = Experiment::new(ModelSpec::example(), 1000)
        .trials(20)
        .tol(0.2)
        .seed(7)
        .inner_region(c(0.52, 0.0), 0.5)
        .run()
        .map_err(|e| e.to_string())?;
    let spikes: Vec<C64> = report.per_spike.iter().map(|s| s.spike).collect();
    if spikes != outer_spikes() {
        return Err(format!("outer spikes classified as {spikes:?}"));
    }
    let counts: Vec<usize> = report.per_spike.iter().map(|s| s.match_count).collect();
    let clean = report.inner_clean_trials();
    check(
        counts.iter().all(|&k| k >= 18) && clean >= 18,
        format!("matched trials per spike {counts:?}/20, empty inner disk in {clean}/20"),
    )
}

fn single_ring_radii() -> Outcome {
    let spec = ModelSpec::single_ring(sigma_law()).map_err(|e| e.to_string())?;
    let (inner, outer) = ring_radii(&spec).map_err(|e| e.to_string())?;
    if (inner - 1.3484).abs() > 1e-4 || (outer - 1.6733).abs() > 1e-4 {
        return Err(format!("predicted annulus [{inner}, {outer}]"));
    }
    let mut fractions = Vec::new();
    for seed in 0..5 {
        let sample = sample_model(&spec, 1000, seed).map_err(|e| e.to_string())?;
        let eigs = eigenvalues(&sample.m).map_err(|e| e.to_string())?;
        let inside = eigs.iter().filter(|z| (1.30..=1.72).contains(&z.norm())).count();
        fractions.push(inside as f64 / eigs.len() as f64);
    }
    check(
        fractions.iter().all(|&f| f >= 0.98),
        format!("annulus [{inner:.4}, {outer:.4}], fraction in [1.30, 1.72] per seed {fractions:?}"),
    )
}

fn subordination_residuals() -> Outcome {
    let example = ModelSpec::example();
    let pairs = [
        ("bernoulli", sym(1.0), sym(1.0)),
        ("gap pair", sym(2.0), sym(1.0)),
        ("example at 0.52", example.mu1(c(0.52, 0.0)).map_err(|e| e.to_string())?, example.mu2()),
    ];
    let mut worst_g: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    for (_, mu1, mu2) in &pairs {
        for i in 0..10 {
            for j in 0..10 {
                let z = c(-4.0 + 8.0 * i as f64 / 9.0, 0.1 + 4.9 * j as f64 / 9.0);
                let s = solve(mu1, mu2, z).map_err(|e| e.to_string())?;
                let g1 = mu1.cauchy(s.omega1).map_err(|e| e.to_string())?;
                let g2 = mu2.cauchy(s.omega2).map_err(|e| e.to_string())?;
                worst_g = worst_g.max((g1 - g2).norm());
                worst_sum = worst_sum.max((s.omega1 + s.omega2 - z - 1.0 / g1).norm());
            }
        }
    }
    check(
        worst_g < 1e-10 && worst_sum < 1e-9,
        format!("300 points, max |G1-G2| = {worst_g:.2e}, max |w1+w2-z-F| = {worst_sum:.2e}"),
    )
}

fn arcsine_oracle() -> Outcome {
    let b = sym(1.0);
    let mut worst_g: f64 = 0.0;
    for i in 0..10 {
        for j in 0..5 {
            let z = c(-3.0 + 6.0 * i as f64 / 9.0, [0.05, 0.2, 0.5, 1.0, 2.0][j]);
            let s = (z * z - 4.0).sqrt();
            let s = if (s / z).re < 0.0 { -s } else { s };
            let g = free_convolution_cauchy(&b, &b, z).map_err(|e| e.to_string())?;
            worst_g = worst_g.max((g - 1.0 / s).norm());
        }
    }
    let grid = density_on_grid(&b, &b, (-1.9, 1.9), 77, 1e-6).map_err(|e| e.to_string())?;
    let worst_d = grid
        .iter()
        .map(|&(x, d)| (d - 1.0 / (PI * (4.0 - x * x).sqrt())).abs())
        .fold(0.0, f64::max);
    check(
        worst_g < 1e-8 && worst_d < 1e-3,
        format!("max Cauchy error {worst_g:.2e} at 50 points, max density error {worst_d:.2e} on [-1.9, 1.9]"),
    )
}

fn omega_limits() -> Outcome {
    let (mu1, mu2) = (sym(2.0), sym(1.0));
    let ratio = |y: f64| -> Result<(f64, f64), String> {
        let s = solve(&mu1, &mu2, c(0.0, y)).map_err(|e| e.to_string())?;
        Ok(((s.omega1 / c(0.0, y)).re, (c(0.0, -y) * s.omega2).re))
    };
    let (r3, q3) = ratio(1e-3)?;
    let (r4, q4) = ratio(1e-4)?;
    let r = (100.0 * r4 - r3) / 99.0;
    let q = (100.0 * q4 - q3) / 99.0;
    // 1/(m₋₂(μ₁) m₂(μ₂)) = 4 and 1/m₋₂(μ₁) - m₂(μ₂) = 3
    let err1 = (r - 4.0).abs() / 4.0;
    let err2 = (q - 3.0).abs() / 3.0;
    check(
        err1 < 1e-2 && err2 < 1e-2,
        format!("w1(iy)/(iy) -> {r:.6} (target 4, rel err {err1:.2e}); -iy w2(iy) -> {q:.6} (target 3, rel err {err2:.2e})"),
    )
}

fn support_gap_certificate() -> Outcome {
    let cert = support_gap(&sym(2.0), &sym(1.0), Side::H1).map_err(|e| e.to_string())?;
    if cert.epsilon.is_nan() || cert.epsilon <= 0.0 {
        return Err(format!("epsilon = {}", cert.epsilon));
    }
    let grid = density_on_grid(&sym(2.0), &sym(1.0), (-cert.epsilon, cert.epsilon), 101, 1e-8)
        .map_err(|e| e.to_string())?;
    let worst = grid.iter().map(|p| p.1).fold(0.0, f64::max);
    let equality = support_gap(&sym(1.0), &sym(1.0), Side::H1);
    let no_gap = matches!(equality, Err(Error::NoGap { .. }));
    check(
        worst < 1e-6 && no_gap,
        format!("epsilon = {:.3e}, max density on [-eps, eps] = {worst:.2e}, equality pair NoGap: {no_gap}", cert.epsilon),
    )
}

fn weingarten() -> Outcome {
    let mut table_err: f64 = 0.0;
    for n in [2usize, 3, 5, 10, 50, 1000] {
        let nf = n as f64;
        let t = wg_exact(2, n).map_err(|e| e.to_string())?;
        table_err = table_err.max((t.get(&[1, 1]).unwrap() - 1.0 / (nf * nf - 1.0)).abs());
        table_err = table_err.max((t.get(&[2]).unwrap() + 1.0 / (nf * (nf * nf - 1.0))).abs());
    }
    let mut worst_z: f64 = 0.0;
    let mut agree = 0;
    let mut total = 0;
    for n in [10usize, 50] {
        for r in run_battery(&standard_battery(), n, 100_000, 2024).map_err(|e| e.to_string())? {
            worst_z = worst_z.max(r.z_score);
            agree += usize::from(r.agrees());
            total += 1;
        }
    }
    let sizes = [10usize, 20, 40, 80];
    let ratios = wg_asymptotic_check(2, &[2], &sizes).map_err(|e| e.to_string())?;
    let asym_ok = ratios.iter().zip(sizes).all(|(r, n)| (r + 1.0).abs() <= 2.0 / (n * n) as f64);
    check(
        table_err < 1e-12 && agree == total && asym_ok,
        format!(
            "p=2 table error {table_err:.1e}; battery {agree}/{total} within 3 SE (max z {worst_z:.2}); [2] ratios {ratios:?}"
        ),
    )
}

fn isotropic_decay() -> Outcome {
    let fit = deformed_ring::weingarten::isotropic_decay(&ModelSpec::example(), c(-1.5, 1.5), &[100, 200, 400, 800], 200, 1)
        .map_err(|e| e.to_string())?;
    check(
        (-1.3..=-0.7).contains(&fit.slope),
        format!("slope {:.3}, n * mean {:?}", fit.slope, fit.scaled_means()),
    )
}

fn spectral_radii() -> Outcome {
    let spec = ModelSpec::example();
    let mut worst_out: f64 = 0.0;
    let mut worst_in: f64 = 0.0;
    for seed in 0..5 {
        let sample = sample_model(&spec, 500, seed).map_err(|e| e.to_string())?;
        for z in outer_spikes() {
            worst_out = worst_out.max(spectral_radius_outer(&sample, z).map_err(|e| e.to_string())?);
        }
        for z in [c(0.52, 0.0), c(0.75, 0.25)] {
            worst_in = worst_in.max(spectral_radius_inner(&sample, z).map_err(|e| e.to_string())?);
        }
    }
    check(
        worst_out < 1.0 && worst_in < 1.0,
        format!("max outer spectral radius {worst_out:.4}, max inner spectral radius {worst_in:.4}"),
    )
}

fn determinant_identity() -> Outcome {
    let spec = ModelSpec::example();
    let mut rng = rng_for(99);
    let mut worst: f64 = 0.0;
    for k in 0..20u64 {
        let n = [16usize, 32, 48, 64][k as usize % 4];
        let sample = sample_model(&spec, n, 1000 + k).map_err(|e| e.to_string())?;
        let z = c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        worst = worst.max(determinant_identity_error(&sample, z).map_err(|e| e.to_string())?);
    }
    check(worst < 1e-8, format!("20 draws with n <= 64, max relative error {worst:.2e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("worked-example outliers and empty inner disk", worked_example_outliers),
        ("single-ring annulus", single_ring_radii),
        ("subordination residuals", subordination_residuals),
        ("arcsine oracle", arcsine_oracle),
        ("imaginary-axis limits of w1, w2", omega_limits),
        ("support-gap certificate", support_gap_certificate),
        ("Weingarten exact, Monte-Carlo and asymptotics", weingarten),
        ("isotropic decay slope", isotropic_decay),
        ("spectral-radius bounds", spectral_radii),
        ("determinant identity", determinant_identity),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:2} PASS  {name}: {detail} [{secs:.1}s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:2} FAIL  {name}: {detail} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
