//! Experiment configs, artifact emission and the `deformed-ring` command line.
//!
//! A config is a JSON object:
//!
//! ```json
//! {
//!   "model": { "sigma": { "atoms": [[1, 0.4], [2, 0.6]] },
//!              "aprime": { "atoms": [[[-2.2, 0], 0.15], [[1, 0], 0.85]] },
//!              "spikes": [[-1.5, 1.5]] },
//!   "n": 1000, "trials": 20, "seed": 7, "tol": 0.2,
//!   "grid": { "bbox": [-4, 3, -3, 3], "resolution": 200 }
//! }
//! ```
//!
//! Complex numbers are `[re, im]` pairs. Every output is a pure function of
//! the config and seed, so reruns produce byte-identical CSV and JSON.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domains::{grid_map, theta_classify, DomainClass, DomainGrid, ModelSpec};
use crate::error::{Error, Result};
use crate::measures::C64;
use crate::outliers::{Disk, Experiment};
use crate::rmt::{eigenvalues, sample_model};
use crate::subordination::{self, Side};
use crate::weingarten::{mobius, run_battery, standard_battery, wg_exact, BatteryResult, WeingartenTable};

pub const MIN_N: usize = 8;
const SVG_WIDTH: f64 = 800.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// `[xmin, xmax, ymin, ymax]`.
    pub bbox: [f64; 4],
    pub resolution: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { bbox: [-4.0, 3.0, -3.0, 3.0], resolution: 200 }
    }
}

fn default_trials() -> usize {
    1
}

fn default_tol() -> f64 {
    0.2
}

fn default_subord_grid() -> GridConfig {
    GridConfig { bbox: [-4.0, 4.0, 0.05, 2.0], resolution: 40 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub n: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Required by every stochastic command unless given with `--seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub grid: GridConfig,
    /// Disk to check for emptiness; defaults to the predicted inner disk shrunk by `tol`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_region: Option<Disk>,
    /// Point `z` at which `μ₁ = (|a - z|)~` is formed for `subord` and `gap`.
    #[serde(default)]
    pub point: C64,
    /// Upper half-plane grid for `subord`.
    #[serde(default = "default_subord_grid")]
    pub subord_grid: GridConfig,
}

fn check_grid(field: &str, grid: &GridConfig) -> Result<()> {
    let [x0, x1, y0, y1] = grid.bbox;
    if !grid.bbox.iter().all(|v| v.is_finite()) || !(x0 < x1) || !(y0 < y1) {
        return Err(Error::config(format!("{field}.bbox"), "expected finite [xmin, xmax, ymin, ymax] with min < max"));
    }
    if grid.resolution < 2 {
        return Err(Error::config(format!("{field}.resolution"), format!("must be at least 2, got {}", grid.resolution)));
    }
    Ok(())
}

impl ExperimentConfig {
    /// The worked example at `n = 1000`, 20 trials, `tol = 0.2`, seed 7.
    pub fn example() -> Self {
        ExperimentConfig {
            model: ModelSpec::example(),
            n: 1000,
            trials: 20,
            seed: Some(7),
            tol: 0.2,
            grid: GridConfig::default(),
            inner_region: Some(Disk { center: C64::new(0.52, 0.0), radius: 0.5 }),
            point: C64::new(0.0, 0.0),
            subord_grid: default_subord_grid(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_N {
            return Err(Error::config("n", format!("must be at least {MIN_N}, got {}", self.n)));
        }
        if self.n <= self.model.rank() {
            return Err(Error::config("n", format!("must exceed the spike count {}", self.model.rank())));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::config("tol", format!("must be positive, got {}", self.tol)));
        }
        check_grid("grid", &self.grid)?;
        check_grid("subord_grid", &self.subord_grid)?;
        if !(self.subord_grid.bbox[2] > 0.0) {
            return Err(Error::config("subord_grid.bbox", "ymin must be positive (upper half-plane)"));
        }
        if let Some(d) = self.inner_region {
            if !(d.radius > 0.0) || !d.center.is_finite() {
                return Err(Error::config("inner_region", "needs a finite center and positive radius"));
            }
        }
        if !self.point.is_finite() {
            return Err(Error::config("point", "must be finite"));
        }
        Ok(())
    }

    fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::config("seed", "required for stochastic commands (config or --seed)"))
    }

    /// SHA-256 of the compact JSON form.
    pub fn digest(&self) -> Result<String> {
        Ok(hex(&Sha256::digest(serde_json::to_vec(self)?)))
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_json(&fs::read_to_string(path)?)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn eigenvalues_csv(eigs: &[C64]) -> String {
    let mut s = String::from("re,im\n");
    for z in eigs {
        let _ = writeln!(s, "{},{}", z.re, z.im);
    }
    s
}

pub fn domains_csv(grid: &DomainGrid) -> String {
    let mut s = String::from("x,y,class\n");
    for (x, y, class) in grid.nodes() {
        let _ = writeln!(s, "{x},{y},{}", class.label());
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubordRow {
    pub z: C64,
    pub omega1: C64,
    pub omega2: C64,
    pub g: C64,
    pub residual: f64,
}

pub fn subord_csv(rows: &[SubordRow]) -> String {
    let mut s = String::from("x,y,re_omega1,im_omega1,re_omega2,im_omega2,re_G,im_G,residual\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{:e}",
            r.z.re, r.z.im, r.omega1.re, r.omega1.im, r.omega2.re, r.omega2.im, r.g.re, r.g.im, r.residual
        );
    }
    s
}

/// Subordination functions of `μ₁(point) ⊞ μ₂` on the nodes of an upper half-plane grid.
pub fn subord_table(model: &ModelSpec, point: C64, grid: &GridConfig) -> Result<Vec<SubordRow>> {
    let mu1 = model.mu1(point)?;
    let mu2 = model.mu2();
    let [x0, x1, y0, y1] = grid.bbox;
    let step = |a: f64, b: f64, k: usize| a + (b - a) * k as f64 / (grid.resolution - 1) as f64;
    let mut rows = Vec::with_capacity(grid.resolution * grid.resolution);
    for j in 0..grid.resolution {
        for i in 0..grid.resolution {
            let z = C64::new(step(x0, x1, i), step(y0, y1, j));
            let sol = subordination::solve(&mu1, &mu2, z)?;
            rows.push(SubordRow { z, omega1: sol.omega1, omega2: sol.omega2, g: sol.g_value, residual: sol.residual });
        }
    }
    Ok(rows)
}

/// Scatter plot of the complex plane: domain classes as
/// background cells, eigenvalues as dots, spikes as crosses.
pub fn scatter_svg(bbox: [f64; 4], grid: Option<&DomainGrid>, eigs: &[C64], spikes: &[C64]) -> String {
    let [x0, x1, y0, y1] = bbox;
    let width = SVG_WIDTH;
    let height = (SVG_WIDTH * (y1 - y0) / (x1 - x0)).round();
    let px = |x: f64| (x - x0) / (x1 - x0) * width;
    let py = |y: f64| (y1 - y) / (y1 - y0) * height;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    if let Some(g) = grid {
        let [gx0, gx1, gy0, gy1] = g.bbox;
        let cw = (gx1 - gx0) / (g.resolution - 1) as f64 / (x1 - x0) * width;
        let ch = (gy1 - gy0) / (g.resolution - 1) as f64 / (y1 - y0) * height;
        for (x, y, class) in g.nodes() {
            let fill = match class {
                DomainClass::ThetaOut => "#d6e6f5",
                DomainClass::ThetaIn => "#f7dcc6",
                DomainClass::Neither => continue,
            };
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                px(x) - cw / 2.0,
                py(y) - ch / 2.0,
                cw,
                ch
            );
        }
    }
    if x0 < 0.0 && x1 > 0.0 {
        let _ = writeln!(s, r##"<line x1="{0:.2}" y1="0" x2="{0:.2}" y2="{height}" stroke="#888" stroke-width="0.5"/>"##, px(0.0));
    }
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(s, r##"<line x1="0" y1="{0:.2}" x2="{width}" y2="{0:.2}" stroke="#888" stroke-width="0.5"/>"##, py(0.0));
    }
    for z in eigs {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="black"/>"#, px(z.re), py(z.im));
    }
    for z in spikes {
        let (cx, cy) = (px(z.re), py(z.im));
        let _ = writeln!(
            s,
            r#"<path d="M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}" stroke="red" stroke-width="1.5"/>"#,
            cx - 5.0,
            cy - 5.0,
            cx + 5.0,
            cy + 5.0,
            cx - 5.0,
            cy + 5.0,
            cx + 5.0,
            cy - 5.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub n: usize,
    pub seed: u64,
    pub config_sha256: String,
    pub eigenvalues: usize,
    /// Eigenvalues per domain class, in the order out, in, none.
    pub class_counts: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub cycle_type: Vec<usize>,
    pub mobius: i64,
    /// `n^{p+|σ|} Wg(σ, n)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeingartenReport {
    pub table: WeingartenTable,
    pub asymptotic: Vec<AsymptoticRow>,
    pub trials: usize,
    pub seed: u64,
    pub monte_carlo: Vec<BatteryResult>,
}

/// Exact table, leading-order ratios and the Monte-Carlo battery restricted
/// to patterns of degree at most `p` that fit in `U(n)`.
pub fn weingarten_report(p: usize, n: usize, trials: usize, seed: u64) -> Result<WeingartenReport> {
    let table = wg_exact(p, n)?;
    let asymptotic = table
        .values
        .iter()
        .map(|e| AsymptoticRow {
            cycle_type: e.cycle_type.clone(),
            mobius: mobius(&e.cycle_type),
            ratio: (n as f64).powi((2 * p - e.cycle_type.len()) as i32) * e.value,
        })
        .collect();
    let patterns: Vec<_> = standard_battery()
        .into_iter()
        .filter(|b| b.i.len().max(b.i_conj.len()) <= p)
        .filter(|b| b.i.iter().chain(&b.j).chain(&b.i_conj).chain(&b.j_conj).all(|&k| k < n))
        .collect();
    let monte_carlo = if patterns.is_empty() { Vec::new() } else { run_battery(&patterns, n, trials, seed)? };
    Ok(WeingartenReport { table, asymptotic, trials, seed, monte_carlo })
}

#[derive(Debug, Parser)]
#[command(name = "deformed-ring", version, about = "Outlier domains, subordination and Monte-Carlo checks for the deformed single ring model")]
pub struct Cli {
    /// JSON experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GapSide {
    H1,
    H2,
}

impl From<GapSide> for Side {
    fn from(s: GapSide) -> Self {
        match s {
            GapSide::H1 => Side::H1,
            GapSide::H2 => Side::H2,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of one draw: spectrum.csv, spectrum.json
    Spectrum {
        /// Also write spectrum.svg over the domain map.
        #[arg(long)]
        svg: bool,
    },
    /// Θ_out / Θ_in classification on the config grid: domains.csv, domains.svg
    Domains,
    /// Seeded outlier experiment: outliers.json
    Outliers {
        /// Also write outliers.svg with the first trial's spectrum.
        #[arg(long)]
        svg: bool,
    },
    /// Subordination functions on the upper half-plane grid: subord.csv
    Subord,
    /// Exact and Monte-Carlo Weingarten moments: weingarten.json
    Weingarten {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// Support-gap certificate of μ₁(point) ⊞ μ₂: gap.json
    Gap {
        #[arg(long, value_enum, default_value = "h1")]
        side: GapSide,
    },
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli.config.as_deref().ok_or_else(|| Error::config("--config", "this command needs a config file"))?;
    let mut config = parse_config(path)?;
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    Ok(config)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Execute a parsed command line; returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let out = cli.out.as_path();
    match &cli.command {
        Command::Spectrum { svg } => {
            let config = load(cli)?;
            let seed = config.require_seed()?;
            let sample = sample_model(&config.model, config.n, seed)?;
            let eigs = eigenvalues(&sample.m)?;
            let mut class_counts = [0usize; 3];
            for &z in &eigs {
                let idx = match theta_classify(&config.model, z) {
                    DomainClass::ThetaOut => 0,
                    DomainClass::ThetaIn => 1,
                    DomainClass::Neither => 2,
                };
                class_counts[idx] += 1;
            }
            let meta = SpectrumMeta {
                n: config.n,
                seed,
                config_sha256: config.digest()?,
                eigenvalues: eigs.len(),
                class_counts,
            };
            let mut written = vec![
                write_artifact(out, "spectrum.csv", &eigenvalues_csv(&eigs))?,
                write_artifact(out, "spectrum.json", &to_json(&meta)?)?,
            ];
            if *svg {
                let grid = grid_map(&config.model, config.grid.bbox, config.grid.resolution)?;
                let picture = scatter_svg(config.grid.bbox, Some(&grid), &eigs, config.model.spikes());
                written.push(write_artifact(out, "spectrum.svg", &picture)?);
            }
            Ok(written)
        }
        Command::Domains => {
            let config = load(cli)?;
            let grid = grid_map(&config.model, config.grid.bbox, config.grid.resolution)?;
            Ok(vec![
                write_artifact(out, "domains.csv", &domains_csv(&grid))?,
                write_artifact(out, "domains.svg", &scatter_svg(config.grid.bbox, Some(&grid), &[], config.model.spikes()))?,
            ])
        }
        Command::Outliers { svg } => {
            let config = load(cli)?;
            let seed = config.require_seed()?;
            let mut experiment = Experiment::new(config.model.clone(), config.n)
                .trials(config.trials)
                .tol(config.tol)
                .seed(seed);
            if let Some(d) = config.inner_region {
                experiment = experiment.inner_region(d.center, d.radius);
            }
            let (report, spectra) = experiment.run_keeping_spectra()?;
            let mut written = vec![write_artifact(out, "outliers.json", &to_json(&report)?)?];
            if *svg {
                let grid = grid_map(&config.model, config.grid.bbox, config.grid.resolution)?;
                let picture = scatter_svg(config.grid.bbox, Some(&grid), &spectra[0], config.model.spikes());
                written.push(write_artifact(out, "outliers.svg", &picture)?);
            }
            Ok(written)
        }
        Command::Subord => {
            let config = load(cli)?;
            let rows = subord_table(&config.model, config.point, &config.subord_grid)?;
            Ok(vec![write_artifact(out, "subord.csv", &subord_csv(&rows))?])
        }
        Command::Weingarten { p, n, trials } => {
            let seed = match (cli.seed, &cli.config) {
                (Some(s), _) => s,
                (None, Some(_)) => load(cli)?.require_seed()?,
                (None, None) => return Err(Error::config("seed", "required for stochastic commands (config or --seed)")),
            };
            let report = weingarten_report(*p, *n, *trials, seed)?;
            Ok(vec![write_artifact(out, "weingarten.json", &to_json(&report)?)?])
        }
        Command::Gap { side } => {
            let config = load(cli)?;
            let mu1 = config.model.mu1(config.point)?;
            let cert = subordination::support_gap(&mu1, &config.model.mu2(), (*side).into())?;
            Ok(vec![write_artifact(out, "gap.json", &to_json(&cert)?)?])
        }
    }
}

/// Process exit code for an error: 2 for rejected input, 3 for numerical failure, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_validation() {
        2
    } else if err.is_numeric() {
        3
    } else {
        1
    }
}

/// Parse `args`, run, report on stdout/stderr and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_config_round_trips() {
        let config = ExperimentConfig::example();
        let text = config.to_json().unwrap();
        let parsed = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(parsed, config);
        assert_eq!(parsed.to_json().unwrap(), text);
        assert_eq!(parsed.digest().unwrap(), config.digest().unwrap());
        assert_eq!(config.digest().unwrap().len(), 64);
    }

    #[test]
    fn minimal_config_is_pure_haar() {
        let text = r#"{"model": {"sigma": {"atoms": [[1, 1]]}, "aprime": {"atoms": [[[0, 0], 1]]}}, "n": 16, "seed": 3}"#;
        let config = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(config.trials, 1);
        assert_eq!(config.tol, 0.2);
        let sample = sample_model(&config.model, config.n, 3).unwrap();
        assert!(crate::rmt::unitarity_defect(&sample.m) < 1e-12);
    }

    #[test]
    fn config_errors_name_the_field() {
        let bad_weights = r#"{"model": {"sigma": {"atoms": [[1, 0.4], [2, 0.5]]}, "aprime": {"atoms": [[[0, 0], 1]]}}, "n": 16}"#;
        let err = ExperimentConfig::from_json(bad_weights).unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("model.sigma.atoms"), "{err}");

        let unknown = r#"{"model": {"sigma": {"atoms": [[1, 1]]}, "aprime": {"atoms": [[[0, 0], 1]]}}, "n": 16, "trails": 3}"#;
        let err = ExperimentConfig::from_json(unknown).unwrap_err();
        assert!(err.to_string().contains("trails"), "{err}");

        let small = r#"{"model": {"sigma": {"atoms": [[1, 1]]}, "aprime": {"atoms": [[[0, 0], 1]]}}, "n": 4}"#;
        let err = ExperimentConfig::from_json(small).unwrap_err();
        assert!(matches!(&err, Error::Config { field, .. } if field == "n"));

        let mut c = ExperimentConfig::example();
        c.grid.resolution = 1;
        assert!(matches!(c.validate(), Err(Error::Config { field, .. }) if field == "grid.resolution"));
        let mut c = ExperimentConfig::example();
        c.subord_grid.bbox = [-1.0, 1.0, -1.0, 1.0];
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::example();
        c.seed = None;
        assert!(matches!(c.require_seed(), Err(Error::Config { field, .. }) if field == "seed"));
    }

    #[test]
    fn csv_headers_and_rows() {
        let csv = eigenvalues_csv(&[C64::new(1.5, -0.25), C64::new(0.0, 2.0)]);
        assert_eq!(csv, "re,im\n1.5,-0.25\n0,2\n");
        let grid = grid_map(&ModelSpec::example(), [-1.0, 1.0, -1.0, 1.0], 3).unwrap();
        let csv = domains_csv(&grid);
        assert!(csv.starts_with("x,y,class\n"));
        assert_eq!(csv.lines().count(), 10);
    }

    #[test]
    fn subord_rows_have_small_residuals() {
        let grid = GridConfig { bbox: [-3.0, 3.0, 0.1, 1.0], resolution: 4 };
        let rows = subord_table(&ModelSpec::example(), C64::new(0.5, 0.0), &grid).unwrap();
        assert_eq!(rows.len(), 16);
        assert!(rows.iter().all(|r| r.residual < 1e-10 && r.g.im < 0.0));
        let csv = subord_csv(&rows);
        assert_eq!(csv.lines().next().unwrap(), "x,y,re_omega1,im_omega1,re_omega2,im_omega2,re_G,im_G,residual");
    }

    #[test]
    fn svg_is_well_formed() {
        let grid = grid_map(&ModelSpec::example(), [-3.0, 3.0, -2.0, 2.0], 5).unwrap();
        let svg = scatter_svg(grid.bbox, Some(&grid), &[C64::new(0.0, 0.0)], &[C64::new(1.0, 1.0)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<path").count(), 1);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::config("n", "x")), 2);
        assert_eq!(exit_code(&Error::NonConvergence { what: "x", iterations: 1, residual: 1.0 }), 3);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 1);
        assert_eq!(main_with_args(["deformed-ring", "--bogus"]), 2);
        assert_eq!(main_with_args(["deformed-ring", "domains"]), 2);
    }

    #[test]
    fn weingarten_report_battery_respects_order() {
        let r = weingarten_report(2, 10, 200, 1).unwrap();
        assert_eq!(r.table.values.len(), 2);
        assert_eq!(r.asymptotic[0].mobius, -1);
        assert_eq!(r.monte_carlo.len(), 6);
        let r = weingarten_report(1, 1, 200, 1).unwrap();
        assert_eq!(r.monte_carlo.len(), 2);
    }
}
