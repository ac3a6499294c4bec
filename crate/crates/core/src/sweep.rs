//! Parameter-grid experiments over `(α, β1..β4)` with resumable CSV output.

use std::collections::HashSet;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::ScalarField;
use crate::imaging::{self, add_gaussian_noise, ImagingError, NoiseSpec, SyntheticSpec};
use crate::metrics::QualityTriple;
use crate::regularizer::BetaVector;
use crate::solver::{solve, SolverConfig, SolverError};

/// Name of the record file inside the output directory.
pub const RECORDS_FILE: &str = "sweep.csv";
pub const RECORDS_HEADER: &str = "alpha,beta1,beta2,beta3,beta4,zeros,pattern,ssim,psnr,rel_error,iters,seconds,converged";
pub const HISTOGRAM_HEADER: &str = "class,bin_lo,bin_hi,count";

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep plan: {0}")]
    InvalidPlan(String),
    #[error("no records to classify")]
    Empty,
    #[error("invalid binning: {0}")]
    InvalidBinning(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ImageSource {
    File(PathBuf),
    Synthetic(SyntheticSpec),
}

impl ImageSource {
    pub fn load(&self) -> Result<ScalarField, ImagingError> {
        match self {
            Self::File(p) => imaging::load_any(p),
            Self::Synthetic(spec) => imaging::synthesize(spec),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub alphas: Vec<f64>,
    /// Candidate values of each `βi`.
    pub beta_grid: [Vec<f64>; 4],
    /// Ground truth; the noisy input is derived from it with `noise`.
    pub source: ImageSource,
    pub noise: NoiseSpec,
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
    /// Worker count; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl SweepPlan {
    /// Same value list for every `βi`.
    pub fn uniform(alphas: Vec<f64>, betas: Vec<f64>, source: ImageSource, noise: NoiseSpec, output_dir: PathBuf) -> Self {
        Self {
            alphas,
            beta_grid: [betas.clone(), betas.clone(), betas.clone(), betas],
            source,
            noise,
            solver: SolverConfig::default(),
            output_dir,
            threads: None,
        }
    }

    pub fn total_combinations(&self) -> usize {
        self.alphas.len() * self.beta_grid.iter().map(Vec::len).product::<usize>()
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: String| Err(SweepError::InvalidPlan(m));
        if self.alphas.is_empty() || self.beta_grid.iter().any(Vec::is_empty) {
            return bad("every parameter needs at least one value".into());
        }
        if let Some(a) = self.alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return bad(format!("alpha must be positive, got {a}"));
        }
        if let Some(b) = self.beta_grid.iter().flatten().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return bad(format!("beta must be nonnegative, got {b}"));
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        self.solver.validate().or_else(|e| bad(e.to_string()))
    }

    /// All parameter combinations, α outermost and β4 innermost.
    pub fn combinations(&self) -> Vec<(f64, [f64; 4])> {
        let g = &self.beta_grid;
        let mut out = Vec::with_capacity(self.total_combinations());
        for &a in &self.alphas {
            for &b1 in &g[0] {
                for &b2 in &g[1] {
                    for &b3 in &g[2] {
                        for &b4 in &g[3] {
                            out.push((a, [b1, b2, b3, b4]));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Which weights vanish; `'0'` marks a zero `βi` and `'+'` a positive one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ZeroPattern(pub [bool; 4]);

impl ZeroPattern {
    pub fn of(betas: &[f64; 4]) -> Self {
        Self(betas.map(|b| b == 0.0))
    }

    pub fn zeros(&self) -> usize {
        self.0.iter().filter(|z| **z).count()
    }

    pub fn label(&self) -> String {
        self.0.iter().map(|&z| if z { '0' } else { '+' }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub beta4: f64,
    /// Number of zero weights.
    pub zeros: usize,
    pub pattern: String,
    /// NaN for a failed run.
    pub ssim: f64,
    pub psnr: f64,
    pub rel_error: f64,
    pub iters: usize,
    pub seconds: f64,
    pub converged: bool,
}

type Key = (u64, [u64; 4]);

fn key(alpha: f64, betas: &[f64; 4]) -> Key {
    (alpha.to_bits(), betas.map(f64::to_bits))
}

impl SweepRecord {
    pub fn new(alpha: f64, betas: [f64; 4], quality: Option<QualityTriple>, iters: usize, seconds: f64, converged: bool) -> Self {
        let p = ZeroPattern::of(&betas);
        let q = quality.unwrap_or(QualityTriple {
            ssim: f64::NAN,
            psnr: f64::NAN,
            rel_error: f64::NAN,
        });
        Self {
            alpha,
            beta1: betas[0],
            beta2: betas[1],
            beta3: betas[2],
            beta4: betas[3],
            zeros: p.zeros(),
            pattern: p.label(),
            ssim: q.ssim,
            psnr: q.psnr,
            rel_error: q.rel_error,
            iters,
            seconds,
            converged,
        }
    }

    pub fn betas(&self) -> [f64; 4] {
        [self.beta1, self.beta2, self.beta3, self.beta4]
    }

    fn key(&self) -> Key {
        key(self.alpha, &self.betas())
    }

    pub fn failed(&self) -> bool {
        self.ssim.is_nan()
    }

    pub fn measure(&self, m: Measure) -> f64 {
        match m {
            Measure::Ssim => self.ssim,
            Measure::Psnr => self.psnr,
            Measure::RelError => self.rel_error,
        }
    }
}

/// Reads a record file; a missing file yields no records.
pub fn read_records(path: &Path) -> Result<Vec<SweepRecord>, SweepError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.deserialize().collect::<Result<_, _>>()?)
}

/// Runs every combination not yet present in the output directory's record
/// file and returns all records in plan order.
pub fn run_sweep(plan: &SweepPlan) -> Result<Vec<SweepRecord>, SweepError> {
    plan.validate()?;
    fs::create_dir_all(&plan.output_dir)?;
    let path = plan.output_dir.join(RECORDS_FILE);
    let existing = read_records(&path)?;
    let done: HashSet<Key> = existing.iter().map(SweepRecord::key).collect();

    let clean = plan.source.load()?;
    let noisy = add_gaussian_noise(&clean, &plan.noise);
    let todo: Vec<_> = plan
        .combinations()
        .into_iter()
        .filter(|(a, b)| !done.contains(&key(*a, b)))
        .collect();
    log::info!(
        "sweep: {} combinations, {} already recorded, {} to run",
        plan.total_combinations(),
        existing.len(),
        todo.len()
    );

    let fresh = existing.is_empty() && fs::metadata(&path).map_or(true, |m| m.len() == 0);
    let file = OpenOptions::new().create(true).append(true).open(&path)?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if fresh {
        writer.write_record(RECORDS_HEADER.split(','))?;
        writer.flush()?;
    }
    let sink = Mutex::new(writer);

    let run_one = |&(alpha, betas): &(f64, [f64; 4])| -> Result<SweepRecord, SweepError> {
        let beta = BetaVector::new(betas, alpha).map_err(|e| SweepError::InvalidPlan(e.to_string()))?;
        let start = Instant::now();
        let record = match solve(&noisy, &beta, &plan.solver) {
            Ok(r) => {
                let q = QualityTriple::measure(&r.u, &clean).map_err(|e| SweepError::InvalidPlan(e.to_string()))?;
                SweepRecord::new(alpha, betas, Some(q), r.iterations, start.elapsed().as_secs_f64(), r.converged)
            }
            Err(SolverError::Diverged { iteration }) => {
                log::warn!("alpha={alpha} beta={betas:?}: diverged at iteration {iteration}");
                SweepRecord::new(alpha, betas, None, iteration, start.elapsed().as_secs_f64(), false)
            }
            Err(e) => return Err(e.into()),
        };
        let mut w = sink.lock().expect("record sink poisoned");
        w.serialize(&record)?;
        w.flush()?;
        Ok(record)
    };
    let new: Vec<SweepRecord> = match plan.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(|| todo.par_iter().map(run_one).collect::<Result<_, _>>())?,
        None => todo.par_iter().map(run_one).collect::<Result<_, _>>()?,
    };

    let mut all: std::collections::HashMap<Key, SweepRecord> =
        existing.into_iter().chain(new).map(|r| (r.key(), r)).collect();
    Ok(plan
        .combinations()
        .iter()
        .filter_map(|(a, b)| all.remove(&key(*a, b)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Ssim,
    Psnr,
    RelError,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Binning {
    /// Increasing bin edges; `n + 1` edges make `n` bins.
    Edges(Vec<f64>),
    Uniform { lo: f64, hi: f64, bins: usize },
}

impl Binning {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN edges must fail too
    pub fn edges(&self) -> Result<Vec<f64>, SweepError> {
        let edges = match self {
            Self::Edges(e) => e.clone(),
            &Self::Uniform { lo, hi, bins } => {
                if bins == 0 {
                    return Err(SweepError::InvalidBinning("need at least one bin".into()));
                }
                (0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect()
            }
        };
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(SweepError::InvalidBinning("edges must be strictly increasing, at least two".into()));
        }
        Ok(edges)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramRow {
    /// Number of zero weights.
    pub class: usize,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: usize,
}

/// Counts per zero-count class (0 to 4) and bin. Failed runs are left out;
/// values outside the edges go to the first or last bin.
pub fn classify_and_bin(records: &[SweepRecord], measure: Measure, binning: &Binning) -> Result<Vec<HistogramRow>, SweepError> {
    if records.is_empty() {
        return Err(SweepError::Empty);
    }
    let edges = binning.edges()?;
    let nb = edges.len() - 1;
    let mut counts = vec![[0usize; 5]; nb];
    for r in records.iter().filter(|r| !r.failed()) {
        let v = r.measure(measure);
        let b = edges[1..nb].partition_point(|e| *e <= v);
        counts[b][r.zeros] += 1;
    }
    Ok((0..5)
        .flat_map(|class| {
            let counts = &counts;
            let edges = &edges;
            (0..nb).map(move |b| HistogramRow {
                class,
                bin_lo: edges[b],
                bin_hi: edges[b + 1],
                count: counts[b][class],
            })
        })
        .collect())
}

pub fn write_histogram_csv(rows: &[HistogramRow], out: impl Write) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HISTOGRAM_HEADER.split(','))?;
    for r in rows {
        w.write_record([r.class.to_string(), r.bin_lo.to_string(), r.bin_hi.to_string(), r.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Median of `measure` per zero-count class, over successful runs.
pub fn median_by_class(records: &[SweepRecord], measure: Measure) -> [Option<f64>; 5] {
    std::array::from_fn(|class| {
        let mut v: Vec<f64> = records
            .iter()
            .filter(|r| r.zeros == class && !r.failed())
            .map(|r| r.measure(measure))
            .collect();
        median(&mut v)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::SyntheticKind;

    fn plan(dir: &Path, alphas: Vec<f64>, betas: Vec<f64>) -> SweepPlan {
        let mut p = SweepPlan::uniform(
            alphas,
            betas,
            ImageSource::Synthetic(SyntheticSpec::new(SyntheticKind::PiecewiseAffineSquare, 12)),
            NoiseSpec::zero_mean(0.05, 1).unwrap(),
            dir.to_path_buf(),
        );
        p.solver = SolverConfig::default().with_max_iters(40);
        p
    }

    fn fake(alpha: f64, betas: [f64; 4], ssim: f64) -> SweepRecord {
        SweepRecord::new(
            alpha,
            betas,
            Some(QualityTriple {
                ssim,
                psnr: 20.0,
                rel_error: 0.1,
            }),
            1,
            0.0,
            true,
        )
    }

    #[test]
    fn combination_counts() {
        let dir = Path::new("/nonexistent");
        assert_eq!(plan(dir, vec![0.1], vec![0.5]).total_combinations(), 1);
        assert_eq!(plan(dir, vec![0.1; 3], vec![0.5; 8]).total_combinations(), 12288);
        let p = plan(dir, vec![0.1, 0.2, 0.3, 0.4], vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(p.total_combinations(), 5184);
        assert_eq!(p.combinations().len(), 5184);
        assert!(plan(dir, vec![], vec![1.0]).validate().is_err());
        assert!(plan(dir, vec![0.0], vec![1.0]).validate().is_err());
        assert!(plan(dir, vec![1.0], vec![-1.0]).validate().is_err());
    }

    #[test]
    fn zero_patterns() {
        let p = ZeroPattern::of(&[0.0, 0.5, 0.0, 2.0]);
        assert_eq!(p.zeros(), 2);
        assert_eq!(p.label(), "0+0+");
        let r = fake(0.1, [0.0, 0.5, 0.0, 2.0], 0.9);
        assert_eq!((r.zeros, r.pattern.as_str()), (2, "0+0+"));
    }

    #[test]
    fn class_sizes_match_counting() {
        let dir = Path::new("/nonexistent");
        let p = plan(dir, vec![0.1, 0.2], vec![0.0, 1.0]);
        let records: Vec<_> = p.combinations().into_iter().map(|(a, b)| fake(a, b, 0.5)).collect();
        let rows = classify_and_bin(&records, Measure::Ssim, &Binning::Uniform { lo: 0.0, hi: 1.0, bins: 4 }).unwrap();
        let per_class = |c: usize| rows.iter().filter(|r| r.class == c).map(|r| r.count).sum::<usize>();
        // C(4, k) patterns with k zeros, per alpha
        assert_eq!([0, 1, 2, 3, 4].map(per_class), [2, 8, 12, 8, 2]);
        assert_eq!(rows.iter().map(|r| r.count).sum::<usize>(), records.len());
        let occupied: HashSet<_> = rows.iter().filter(|r| r.count > 0).map(|r| r.bin_lo.to_bits()).collect();
        assert_eq!(occupied.len(), 1);
        assert!(matches!(classify_and_bin(&[], Measure::Ssim, &Binning::Edges(vec![0.0, 1.0])), Err(SweepError::Empty)));
        assert!(classify_and_bin(&records, Measure::Ssim, &Binning::Edges(vec![1.0, 0.0])).is_err());
    }

    #[test]
    fn histogram_csv() {
        let records = vec![fake(0.1, [1.0; 4], 0.2), fake(0.1, [0.0, 1.0, 1.0, 1.0], 0.9)];
        let rows = classify_and_bin(&records, Measure::Ssim, &Binning::Edges(vec![0.0, 0.5, 1.0])).unwrap();
        let mut buf = Vec::new();
        write_histogram_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some(HISTOGRAM_HEADER));
        assert!(text.contains("0,0,0.5,1"));
        assert!(text.contains("1,0.5,1,1"));
    }

    #[test]
    fn medians() {
        assert_eq!(median(&mut []), None);
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
        let records = vec![fake(0.1, [1.0; 4], 0.2), fake(0.1, [2.0; 4], 0.4)];
        let m = median_by_class(&records, Measure::Ssim);
        assert!((m[0].unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(m[1], None);
    }

    #[test]
    fn sweep_runs_and_resumes() {
        let dir = tempfile::tempdir().unwrap();
        let mut p = plan(dir.path(), vec![0.2], vec![0.0, 0.5]);
        p.beta_grid[2] = vec![0.5];
        p.beta_grid[3] = vec![0.5];
        p.threads = Some(2);
        let first = run_sweep(&p).unwrap();
        assert_eq!(first.len(), 4);
        let on_disk = read_records(&dir.path().join(RECORDS_FILE)).unwrap();
        assert_eq!(on_disk.len(), 4);
        let text = fs::read_to_string(dir.path().join(RECORDS_FILE)).unwrap();
        assert_eq!(text.lines().next(), Some(RECORDS_HEADER));

        // a bigger plan only runs the new combinations
        p.alphas.push(0.3);
        let second = run_sweep(&p).unwrap();
        assert_eq!(second.len(), 8);
        assert_eq!(read_records(&dir.path().join(RECORDS_FILE)).unwrap().len(), 8);
        assert_eq!(&second[..4], &first[..]);

        // solver determinism makes records independent of thread count
        let other = tempfile::tempdir().unwrap();
        let mut q = p.clone();
        q.output_dir = other.path().to_path_buf();
        q.threads = Some(1);
        let serial = run_sweep(&q).unwrap();
        for (a, b) in serial.iter().zip(&second) {
            assert_eq!((a.ssim, a.psnr, a.iters), (b.ssim, b.psnr, b.iters));
        }
    }
}
