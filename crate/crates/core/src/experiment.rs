//! Configuration-driven comparison of quadrature methods, written as CSV.
//!
//! For every size `n` and trial one sample `Y` of `N = n²` (or `n³`) uniform
//! points, one baseline set `H` and one landmark set `Z = H ∪ {20n Beta(2,5)
//! points}` are drawn and shared by all methods. Each kernel-quadrature method
//! builds a rank `s = n - 1` approximation, runs KQuad on `Y` and records the
//! exact squared worst-case error.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::lowrank::LandmarkBasis;
use crate::points::PointSet;
use crate::quadrature::{kquad, wce_sq_exact, Quadrature};
use crate::samplers::{generate, hash_words, landmark_mix, SamplerKind, SeededGenerator};
use crate::DEFAULT_RTOL;

pub const CSV_HEADER: [&str; 10] = ["figure", "method", "d", "r", "n", "N", "trial", "seed", "wce_sq", "runtime_ms"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "monte-carlo")]
    MonteCarlo,
    #[serde(rename = "grid-or-halton-baseline")]
    Baseline,
    #[serde(rename = "kq-ksH")]
    KqNystromH,
    #[serde(rename = "kq-ksZ")]
    KqNystromZ,
    #[serde(rename = "kq-ksYZ")]
    KqEmpiricalZ,
    #[serde(rename = "kq-ksmuZ")]
    KqMercerZ,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::MonteCarlo,
        Method::Baseline,
        Method::KqNystromH,
        Method::KqNystromZ,
        Method::KqEmpiricalZ,
        Method::KqMercerZ,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::MonteCarlo => "monte-carlo",
            Method::Baseline => "grid-or-halton-baseline",
            Method::KqNystromH => "kq-ksH",
            Method::KqNystromZ => "kq-ksZ",
            Method::KqEmpiricalZ => "kq-ksYZ",
            Method::KqMercerZ => "kq-ksmuZ",
        }
    }

    pub fn is_kernel_quadrature(self) -> bool {
        !matches!(self, Method::MonteCarlo | Method::Baseline)
    }

    fn tag(self) -> u64 {
        hash_words(&self.as_str().bytes().map(u64::from).collect::<Vec<_>>())
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

/// Sample size as a function of the quadrature size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NRule {
    #[serde(rename = "n2")]
    Square,
    #[serde(rename = "n3")]
    Cube,
}

impl NRule {
    pub fn sample_size(self, n: usize) -> usize {
        match self {
            NRule::Square => n * n,
            NRule::Cube => n * n * n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KernelChoice {
    #[default]
    Korobov,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub figure: String,
    pub d: usize,
    pub r: u32,
    pub n_list: Vec<usize>,
    pub n_rule: NRule,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub enforce_inequality: bool,
    pub rtol: Option<f64>,
    pub kernel: KernelChoice,
    pub lengthscale: f64,
    /// When false every `runtime_ms` is written as 0, making output byte-reproducible.
    pub record_timing: bool,
}

/// Keys accepted in a JSON configuration file; all optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub figure: Option<String>,
    pub d: Option<usize>,
    pub r: Option<u32>,
    pub n_list: Option<Vec<usize>>,
    pub n_rule: Option<NRule>,
    pub trials: Option<usize>,
    pub methods: Option<Vec<Method>>,
    pub seed: Option<u64>,
    pub enforce_inequality: Option<bool>,
    pub rtol: Option<f64>,
    pub kernel: Option<KernelChoice>,
    pub lengthscale: Option<f64>,
}

pub const PRESETS: [&str; 5] = ["fig1a", "fig1b", "fig1c", "fig2a", "fig2b"];

impl ExperimentConfig {
    /// Preset binding `(d, r, N rule)` and the default size list.
    pub fn preset(figure: &str) -> Result<Self> {
        let (d, r, n_rule, max_n) = match figure {
            "fig1a" => (1, 1, NRule::Square, 128),
            "fig1b" => (2, 1, NRule::Square, 128),
            "fig1c" => (3, 3, NRule::Square, 128),
            "fig2a" => (1, 2, NRule::Square, 64),
            "fig2b" => (1, 2, NRule::Cube, 64),
            other => return Err(Error::Config(format!("unknown figure preset '{other}'"))),
        };
        Ok(Self {
            figure: figure.to_string(),
            d,
            r,
            n_list: std::iter::successors(Some(4usize), |n| Some(n * 2)).take_while(|&n| n <= max_n).collect(),
            n_rule,
            trials: 20,
            methods: Method::ALL.to_vec(),
            seed: 0,
            enforce_inequality: true,
            rtol: None,
            kernel: KernelChoice::Korobov,
            lengthscale: 1.0,
            record_timing: true,
        })
    }

    /// Builds a configuration from file values: a preset figure fills unset
    /// keys and fixes `(d, r, n_rule)`; `custom` needs `d`, `r`, `n_list` and `n_rule`.
    pub fn from_file(file: ConfigFile) -> Result<Self> {
        let figure = file.figure.clone().unwrap_or_else(|| "custom".to_string());
        let mut config = if figure == "custom" {
            let missing = |key: &str| Error::Config(format!("custom figure needs '{key}'"));
            Self {
                figure,
                d: file.d.ok_or_else(|| missing("d"))?,
                r: file.r.ok_or_else(|| missing("r"))?,
                n_list: file.n_list.clone().ok_or_else(|| missing("n_list"))?,
                n_rule: file.n_rule.ok_or_else(|| missing("n_rule"))?,
                trials: 20,
                methods: Method::ALL.to_vec(),
                seed: 0,
                enforce_inequality: true,
                rtol: None,
                kernel: KernelChoice::Korobov,
                lengthscale: 1.0,
                record_timing: true,
            }
        } else {
            let preset = Self::preset(&figure)?;
            let conflict = |key: &str| Error::Config(format!("'{key}' is fixed by the {figure} preset"));
            if file.d.is_some_and(|d| d != preset.d) {
                return Err(conflict("d"));
            }
            if file.r.is_some_and(|r| r != preset.r) {
                return Err(conflict("r"));
            }
            if file.n_rule.is_some_and(|rule| rule != preset.n_rule) {
                return Err(conflict("n_rule"));
            }
            preset
        };
        if let Some(v) = file.n_list {
            config.n_list = v;
        }
        if let Some(v) = file.trials {
            config.trials = v;
        }
        if let Some(v) = file.methods {
            config.methods = v;
        }
        if let Some(v) = file.seed {
            config.seed = v;
        }
        if let Some(v) = file.enforce_inequality {
            config.enforce_inequality = v;
        }
        if file.rtol.is_some() {
            config.rtol = file.rtol;
        }
        if let Some(v) = file.kernel {
            config.kernel = v;
        }
        if let Some(v) = file.lengthscale {
            config.lengthscale = v;
        }
        Ok(config)
    }

    pub fn from_json_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: ConfigFile =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_file(file)
    }

    pub fn effective_rtol(&self) -> f64 {
        self.rtol.unwrap_or(DEFAULT_RTOL)
    }

    pub fn kernel(&self) -> Result<Kernel> {
        match self.kernel {
            KernelChoice::Korobov => Kernel::korobov_product(self.r, self.d),
            KernelChoice::Gaussian => Kernel::gaussian(self.lengthscale, self.d),
        }
    }

    /// Rejects every invalid configuration before any work is done.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.d == 0 {
            return fail("d must be positive".into());
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.n_list.is_empty() {
            return fail("n_list is empty".into());
        }
        if self.n_list[0] < 2 {
            return fail("every n must be at least 2 (rank s = n - 1)".into());
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return fail("n_list must be strictly increasing".into());
        }
        if self.methods.is_empty() {
            return fail("no methods selected".into());
        }
        if self.methods.iter().collect::<BTreeSet<_>>().len() != self.methods.len() {
            return fail("methods contain duplicates".into());
        }
        if let Some(rtol) = self.rtol {
            if !(rtol.is_finite() && rtol > 0.0 && rtol < 1.0) {
                return fail(format!("rtol must lie in (0, 1), got {rtol}"));
            }
        }
        let kernel = self.kernel().map_err(|e| Error::Config(e.to_string()))?;
        if self.methods.contains(&Method::KqMercerZ) && kernel.squared_kernel().is_err() {
            return fail(format!("kq-ksmuZ needs a closed-form squared kernel, unavailable for {}", kernel.name()));
        }
        if kernel.double_integral().is_err() {
            return fail(format!(
                "exact worst-case error needs a closed-form mean embedding, unavailable for {}",
                kernel.name()
            ));
        }
        let largest = *self.n_list.last().unwrap();
        self.n_rule
            .sample_size(largest)
            .checked_mul(self.d)
            .ok_or_else(|| Error::Config(format!("sample size overflows at n = {largest}")))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub figure: String,
    pub method: Method,
    pub d: usize,
    pub r: u32,
    pub n: usize,
    pub big_n: usize,
    pub trial: usize,
    pub seed: u64,
    pub wce_sq: f64,
    pub runtime_ms: u64,
}

/// Point sets shared by every method of one `(n, trial)` cell.
struct Cell {
    n: usize,
    trial: usize,
    gen: SeededGenerator,
}

impl Cell {
    fn stream(&self, purpose: u64) -> SeededGenerator {
        self.gen.derive(&[self.n as u64, self.trial as u64, purpose])
    }
}

const PURPOSE_SAMPLE: u64 = 1;
const PURPOSE_BASE_SET: u64 = 2;
const PURPOSE_LANDMARKS: u64 = 3;

fn base_set(config: &ExperimentConfig, n: usize, gen: SeededGenerator) -> Result<PointSet> {
    let kind = if config.d == 1 { SamplerKind::Grid } else { SamplerKind::HaltonOwen };
    generate(kind, n, config.d, gen)
}

fn run_cell(config: &ExperimentConfig, kernel: &Kernel, cell: &Cell) -> Result<Vec<ResultRow>> {
    let n = cell.n;
    let s = n - 1;
    let d = config.d;
    let rtol = config.effective_rtol();
    let big_n = config.n_rule.sample_size(n);
    let needs_kq = config.methods.iter().any(|m| m.is_kernel_quadrature());
    let needs_z =
        config.methods.iter().any(|m| matches!(m, Method::KqNystromZ | Method::KqEmpiricalZ | Method::KqMercerZ));

    let shared_start = Instant::now();
    let y =
        if needs_kq { Some(generate(SamplerKind::IidUniform, big_n, d, cell.stream(PURPOSE_SAMPLE))?) } else { None };
    let h = base_set(config, n, cell.stream(PURPOSE_BASE_SET))?;
    let z_basis = if needs_z {
        let z = landmark_mix(&h, n, d, cell.stream(PURPOSE_LANDMARKS))?;
        Some(LandmarkBasis::new(kernel, &z, rtol)?)
    } else {
        None
    };
    let shared_ms = shared_start.elapsed().as_secs_f64() * 1e3;

    let mut rows = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let start = Instant::now();
        let method_gen = cell.stream(method.tag());
        let q = match method {
            Method::MonteCarlo => Quadrature::uniform(generate(SamplerKind::IidUniform, n, d, method_gen)?),
            Method::Baseline => {
                // the grid is deterministic; in higher dimensions an independent copy of H
                Quadrature::uniform(if d == 1 { h.clone() } else { base_set(config, n, method_gen)? })
            }
            Method::KqNystromH => {
                let lrk = LandmarkBasis::new(kernel, &h, rtol)?.nystrom_svd(s)?;
                kquad(&lrk, y.as_ref().unwrap(), config.enforce_inequality)?
            }
            Method::KqNystromZ | Method::KqEmpiricalZ | Method::KqMercerZ => {
                let basis = z_basis.as_ref().unwrap();
                let y = y.as_ref().unwrap();
                let lrk = match method {
                    Method::KqNystromZ => basis.nystrom_svd(s)?,
                    Method::KqEmpiricalZ => basis.mercer_empirical(y, s)?,
                    _ => basis.mercer_mu(s)?,
                };
                kquad(&lrk, y, config.enforce_inequality)?
            }
        };
        let wce_sq = wce_sq_exact(&q, kernel)?;
        let mut elapsed = start.elapsed().as_secs_f64() * 1e3;
        if method.is_kernel_quadrature() {
            elapsed += shared_ms;
        }
        rows.push(ResultRow {
            figure: config.figure.clone(),
            method,
            d,
            r: config.r,
            n,
            big_n,
            trial: cell.trial,
            seed: config.seed,
            wce_sq,
            runtime_ms: if config.record_timing { elapsed.round() as u64 } else { 0 },
        });
    }
    Ok(rows)
}

/// Runs every `(method, n, trial)` combination; rows are sorted by method
/// name, then `n`, then trial, independent of execution order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let kernel = config.kernel()?;
    let master = SeededGenerator::new(config.seed, 0);
    let cells: Vec<Cell> = config
        .n_list
        .iter()
        .flat_map(|&n| (0..config.trials).map(move |trial| Cell { n, trial, gen: master }))
        .collect();
    let per_cell: Vec<Vec<ResultRow>> =
        cells.par_iter().map(|cell| run_cell(config, &kernel, cell)).collect::<Result<_>>()?;
    let mut rows: Vec<ResultRow> = per_cell.into_iter().flatten().collect();
    rows.sort_by(|a, b| (a.method.as_str(), a.n, a.trial).cmp(&(b.method.as_str(), b.n, b.trial)));
    Ok(rows)
}

fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the CSV; a `# rtol=` line precedes the header when rtol was overridden.
pub fn write_csv<W: Write>(config: &ExperimentConfig, rows: &[ResultRow], mut out: W) -> Result<()> {
    if let Some(rtol) = config.rtol {
        writeln!(out, "# rtol={}", format_float(rtol))?;
    }
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for row in rows {
        writer.write_record([
            row.figure.clone(),
            row.method.as_str().to_string(),
            row.d.to_string(),
            row.r.to_string(),
            row.n.to_string(),
            row.big_n.to_string(),
            row.trial.to_string(),
            row.seed.to_string(),
            format_float(row.wce_sq),
            row.runtime_ms.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads rows back from a CSV written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let text = std::fs::read_to_string(path)?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or_default();
        let parse_err = |i: usize| Error::InvalidInput(format!("bad CSV field '{}'", field(i)));
        rows.push(ResultRow {
            figure: field(0).to_string(),
            method: field(1).parse()?,
            d: field(2).parse().map_err(|_| parse_err(2))?,
            r: field(3).parse().map_err(|_| parse_err(3))?,
            n: field(4).parse().map_err(|_| parse_err(4))?,
            big_n: field(5).parse().map_err(|_| parse_err(5))?,
            trial: field(6).parse().map_err(|_| parse_err(6))?,
            seed: field(7).parse().map_err(|_| parse_err(7))?,
            wce_sq: field(8).parse().map_err(|_| parse_err(8))?,
            runtime_ms: field(9).parse().map_err(|_| parse_err(9))?,
        });
    }
    Ok(rows)
}

/// Mean and sample standard deviation of `log10(wce_sq)` over trials for one
/// method and size.
pub fn log10_summary(rows: &[ResultRow], method: Method, n: usize) -> Option<(f64, f64)> {
    let logs: Vec<f64> = rows.iter().filter(|r| r.method == method && r.n == n).map(|r| r.wce_sq.log10()).collect();
    if logs.is_empty() {
        return None;
    }
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let var = if logs.len() > 1 {
        logs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (logs.len() - 1) as f64
    } else {
        0.0
    };
    Some((mean, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(figure: &str) -> ExperimentConfig {
        let mut c = ExperimentConfig::preset(figure).unwrap();
        c.n_list = vec![4, 8];
        c.trials = 2;
        c.record_timing = false;
        c
    }

    #[test]
    fn presets_bind_parameters() {
        let c = ExperimentConfig::preset("fig1c").unwrap();
        assert_eq!((c.d, c.r, c.n_rule), (3, 3, NRule::Square));
        assert_eq!(c.n_list, vec![4, 8, 16, 32, 64, 128]);
        let c = ExperimentConfig::preset("fig2b").unwrap();
        assert_eq!((c.d, c.r, c.n_rule), (1, 2, NRule::Cube));
        assert_eq!(c.n_list, vec![4, 8, 16, 32, 64]);
        assert!(ExperimentConfig::preset("fig9").is_err());
    }

    #[test]
    fn config_file_merging() {
        let file: ConfigFile =
            serde_json::from_str(r#"{"figure": "fig1a", "trials": 3, "rtol": 1e-8, "methods": ["kq-ksZ"]}"#).unwrap();
        let c = ExperimentConfig::from_file(file).unwrap();
        assert_eq!(c.trials, 3);
        assert_eq!(c.rtol, Some(1e-8));
        assert_eq!(c.methods, vec![Method::KqNystromZ]);
        let file: ConfigFile = serde_json::from_str(r#"{"figure": "fig1a", "d": 2}"#).unwrap();
        assert!(matches!(ExperimentConfig::from_file(file), Err(Error::Config(_))));
        let file: ConfigFile = serde_json::from_str(r#"{"figure": "custom", "d": 2}"#).unwrap();
        assert!(ExperimentConfig::from_file(file).is_err());
        assert!(serde_json::from_str::<ConfigFile>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let mut c = small("fig1a");
        c.n_list = vec![8, 4];
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = small("fig1a");
        c.trials = 0;
        assert!(c.validate().is_err());
        let mut c = small("fig1a");
        c.kernel = KernelChoice::Gaussian;
        assert!(matches!(run_experiment(&c), Err(Error::Config(_))));
        let mut c = small("fig1a");
        c.methods = vec![Method::MonteCarlo, Method::MonteCarlo];
        assert!(c.validate().is_err());
    }

    #[test]
    fn rows_are_complete_sorted_and_reproducible() {
        let c = small("fig1a");
        let rows = run_experiment(&c).unwrap();
        assert_eq!(rows.len(), c.methods.len() * c.n_list.len() * c.trials);
        assert!(rows.iter().all(|r| r.wce_sq >= 0.0 && r.runtime_ms == 0));
        let keys: Vec<_> = rows.iter().map(|r| (r.method.as_str(), r.n, r.trial)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(rows, run_experiment(&c).unwrap());
        // the grid baseline is deterministic: wce² = 2ζ(2)/n²
        let grid = rows.iter().find(|r| r.method == Method::Baseline && r.n == 4).unwrap();
        assert!((grid.wce_sq - std::f64::consts::PI.powi(2) / 3.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn adding_a_method_keeps_other_rows() {
        let mut c = small("fig1b");
        c.methods = vec![Method::MonteCarlo, Method::KqNystromZ];
        let before = run_experiment(&c).unwrap();
        c.methods = vec![Method::MonteCarlo, Method::KqMercerZ, Method::KqNystromZ];
        let after = run_experiment(&c).unwrap();
        for row in &before {
            assert!(after.contains(row));
        }
    }

    #[test]
    fn csv_round_trip() {
        let mut c = small("fig1a");
        c.methods = vec![Method::MonteCarlo, Method::KqNystromH];
        c.rtol = Some(1e-9);
        let rows = run_experiment(&c).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_csv(&c, &rows, std::fs::File::create(&path).unwrap()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# rtol="));
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(read_csv(&path).unwrap(), rows);
    }

    #[test]
    fn log_summary() {
        let row = |wce_sq| ResultRow {
            figure: "custom".into(),
            method: Method::MonteCarlo,
            d: 1,
            r: 1,
            n: 4,
            big_n: 16,
            trial: 0,
            seed: 0,
            wce_sq,
            runtime_ms: 0,
        };
        let (mean, sd) = log10_summary(&[row(1e-2), row(1e-2)], Method::MonteCarlo, 4).unwrap();
        assert!((mean + 2.0).abs() < 1e-12);
        assert_eq!(sd, 0.0);
        assert!(log10_summary(&[row(1.0)], Method::KqMercerZ, 4).is_none());
    }
}
