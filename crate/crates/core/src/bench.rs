//! Timing and memory harness over a matrix of generated scenarios.
//!
//! For each `(size, seed, algorithm)` group the scenario is generated once,
//! the solver runs `warmup` discarded repetitions and then `reps` timed ones
//! back to back, and the median wall time is recorded. Groups run one after
//! another on the calling thread.
//!
//! Peak memory is the heap high-water mark above the pre-run baseline, read
//! from [`TrackingAllocator`]. It is only available when the final binary
//! installs the allocator:
//!
//! ```ignore
//! #[global_allocator]
//! static ALLOC: gwplace::bench::TrackingAllocator = gwplace::bench::TrackingAllocator;
//! ```

use std::alloc::{GlobalAlloc, Layout, System};
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::Instant;

use crate::fgwp::solve_fgwp;
use crate::format::fmt_sig9;
use crate::gwp::solve_gwp;
use crate::oracle::{oracle_solve, OracleConfig};
use crate::problem::{PlacementProblem, PlacementSolution, SolverStatus};
use crate::radio::RadioConfig;
use crate::scenario::{generate, Venue};

pub const DEFAULT_WARMUP: usize = 2;
pub const DEFAULT_REPS: usize = 10;
pub const DEFAULT_SIZES: [usize; 7] = [2, 4, 6, 8, 10, 15, 20];

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);
static ACTIVE: AtomicBool = AtomicBool::new(false);

/// System allocator wrapper that tracks live and peak heap bytes.
pub struct TrackingAllocator;

unsafe impl GlobalAlloc for TrackingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            record_alloc(layout.size());
        }
        p
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc_zeroed(layout) };
        if !p.is_null() {
            record_alloc(layout.size());
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let p = unsafe { System.realloc(ptr, layout, new_size) };
        if !p.is_null() {
            CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
            record_alloc(new_size);
        }
        p
    }
}

fn record_alloc(size: usize) {
    ACTIVE.store(true, Ordering::Relaxed);
    let now = CURRENT.fetch_add(size, Ordering::Relaxed) + size;
    PEAK.fetch_max(now, Ordering::Relaxed);
}

impl TrackingAllocator {
    /// True once any allocation went through the tracker.
    pub fn is_active() -> bool {
        ACTIVE.load(Ordering::Relaxed)
    }

    pub fn current_bytes() -> usize {
        CURRENT.load(Ordering::Relaxed)
    }

    /// Resets the high-water mark to the current usage and returns it.
    pub fn reset_peak() -> usize {
        let now = CURRENT.load(Ordering::Relaxed);
        PEAK.store(now, Ordering::Relaxed);
        now
    }

    pub fn peak_bytes() -> usize {
        PEAK.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Gwp,
    Fgwp,
    Oracle,
}

impl Algorithm {
    pub fn solve(self, prob: &PlacementProblem) -> PlacementSolution {
        match self {
            Algorithm::Gwp => solve_gwp(prob),
            Algorithm::Fgwp => solve_fgwp(prob),
            Algorithm::Oracle => {
                oracle_solve(prob, &OracleConfig::default()).expect("default oracle grid fits the default venue")
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gwp => "gwp",
            Algorithm::Fgwp => "fgwp",
            Algorithm::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gwp" => Ok(Algorithm::Gwp),
            "fgwp" | "f-gwp" => Ok(Algorithm::Fgwp),
            "oracle" => Ok(Algorithm::Oracle),
            other => Err(format!("unknown algorithm `{other}` (expected gwp, fgwp or oracle)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub n_faps: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    /// Median over the timed repetitions.
    pub elapsed_s: f64,
    pub peak_mem_bytes: Option<u64>,
    /// `None` when the scenario could not be generated.
    pub p_t_dbm: Option<f64>,
    pub status: SolverStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub warmup: usize,
    pub reps: usize,
    pub venue: Venue,
    pub radio: RadioConfig,
}

impl BenchPlan {
    pub fn new(sizes: Vec<usize>, seeds: Vec<u64>, algorithms: Vec<Algorithm>) -> Self {
        Self {
            sizes,
            seeds,
            algorithms,
            warmup: DEFAULT_WARMUP,
            reps: DEFAULT_REPS,
            venue: Venue::default(),
            radio: RadioConfig::default(),
        }
    }
}

pub fn run_benchmark(
    sizes: &[usize],
    seeds: &[u64],
    algorithms: &[Algorithm],
    warmup: usize,
    reps: usize,
) -> Vec<BenchRecord> {
    let plan = BenchPlan { warmup, reps, ..BenchPlan::new(sizes.to_vec(), seeds.to_vec(), algorithms.to_vec()) };
    run_plan(&plan)
}

/// Panics if `plan.sizes` is empty or `plan.reps` is zero.
pub fn run_plan(plan: &BenchPlan) -> Vec<BenchRecord> {
    assert!(!plan.sizes.is_empty(), "benchmark needs at least one size");
    assert!(plan.reps > 0, "benchmark needs at least one timed repetition");
    let mut records = Vec::with_capacity(plan.sizes.len() * plan.seeds.len() * plan.algorithms.len());
    for &n in &plan.sizes {
        for &seed in &plan.seeds {
            let scenario = generate(n, seed, plan.venue, plan.radio.clone());
            for &algorithm in &plan.algorithms {
                let record = match &scenario {
                    Ok(s) => time_group(&PlacementProblem::from_scenario(s), n, seed, algorithm, plan),
                    Err(_) => BenchRecord {
                        n_faps: n,
                        seed,
                        algorithm,
                        elapsed_s: f64::MIN_POSITIVE,
                        peak_mem_bytes: None,
                        p_t_dbm: None,
                        status: SolverStatus::Infeasible,
                    },
                };
                records.push(record);
            }
        }
    }
    records
}

fn time_group(prob: &PlacementProblem, n: usize, seed: u64, algorithm: Algorithm, plan: &BenchPlan) -> BenchRecord {
    for _ in 0..plan.warmup {
        std::hint::black_box(algorithm.solve(prob));
    }
    let mut times = Vec::with_capacity(plan.reps);
    let mut peak = 0usize;
    let mut last = None;
    for _ in 0..plan.reps {
        let baseline = TrackingAllocator::reset_peak();
        let started = Instant::now();
        let sol = std::hint::black_box(algorithm.solve(prob));
        times.push(started.elapsed().as_secs_f64());
        peak = peak.max(TrackingAllocator::peak_bytes().saturating_sub(baseline));
        last = Some(sol);
    }
    let sol = last.expect("at least one repetition");
    BenchRecord {
        n_faps: n,
        seed,
        algorithm,
        elapsed_s: median(&times).max(f64::MIN_POSITIVE),
        peak_mem_bytes: TrackingAllocator::is_active().then_some(peak as u64),
        p_t_dbm: Some(sol.p_t_dbm),
        status: sol.status,
    }
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    /// Normal-approximation half-width `1.96 s / sqrt(n)`; zero for one sample.
    pub ci95_half: f64,
}

pub fn stats(xs: &[f64]) -> Stats {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let ci95_half = if n < 2 {
        0.0
    } else {
        // shifted by the first sample so identical inputs give exactly zero
        let shifted: Vec<f64> = xs.iter().map(|x| x - xs[0]).collect();
        let sum: f64 = shifted.iter().sum();
        let var = ((shifted.iter().map(|d| d * d).sum::<f64>() - sum * sum / n as f64) / (n - 1) as f64).max(0.0);
        1.96 * var.sqrt() / (n as f64).sqrt()
    };
    Stats { count: n, mean, median: median(xs), ci95_half }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub n_faps: usize,
    pub algorithm: Algorithm,
    pub time: Stats,
    pub mean_mem_bytes: Option<f64>,
}

/// Per-(size, algorithm) statistics over seeds, ordered by size then algorithm.
pub fn summarize(records: &[BenchRecord]) -> Vec<SummaryRow> {
    let mut groups: std::collections::BTreeMap<(usize, Algorithm), Vec<&BenchRecord>> = Default::default();
    for r in records {
        groups.entry((r.n_faps, r.algorithm)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((n_faps, algorithm), rs)| {
            let times: Vec<f64> = rs.iter().map(|r| r.elapsed_s).collect();
            let mems: Option<Vec<f64>> = rs.iter().map(|r| r.peak_mem_bytes.map(|m| m as f64)).collect();
            SummaryRow {
                n_faps,
                algorithm,
                time: stats(&times),
                mean_mem_bytes: mems.map(|m| m.iter().sum::<f64>() / m.len() as f64),
            }
        })
        .collect()
}

pub const RECORD_HEADER: &str = "n_faps,seed,algo,elapsed_s,peak_mem_bytes,p_t_dbm,status";
pub const SUMMARY_HEADER: &str = "n_faps,algo,mean_s,median_s,ci95_half_s,mean_mem_bytes";

pub fn records_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(RECORD_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n_faps,
            r.seed,
            r.algorithm,
            fmt_sig9(r.elapsed_s),
            r.peak_mem_bytes.map(|m| m.to_string()).unwrap_or_default(),
            r.p_t_dbm.map(fmt_sig9).unwrap_or_default(),
            r.status
        );
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n_faps,
            r.algorithm,
            fmt_sig9(r.time.mean),
            fmt_sig9(r.time.median),
            fmt_sig9(r.time.ci95_half),
            r.mean_mem_bytes.map(fmt_sig9).unwrap_or_default()
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_timings_have_zero_width() {
        let s = stats(&[0.004; 10]);
        assert_eq!(s.ci95_half, 0.0);
        assert_abs_diff_eq!(s.mean, 0.004, epsilon = 1e-15);
    }

    #[test]
    fn textbook_interval() {
        let xs: Vec<f64> = (1..=10).map(|k| k as f64 * 1e-3).collect();
        let s = stats(&xs);
        assert_abs_diff_eq!(s.mean, 5.5e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(s.median, 5.5e-3, epsilon = 1e-15);
        let sd = (xs.iter().map(|x| (x - 5.5e-3).powi(2)).sum::<f64>() / 9.0).sqrt();
        assert_abs_diff_eq!(s.ci95_half, 1.96 * sd / 10f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(sd, 3.0276503540974917e-3, epsilon = 1e-12);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn records_follow_the_matrix_order() {
        let algos = [Algorithm::Gwp, Algorithm::Fgwp];
        let recs = run_benchmark(&[2, 4], &[0, 1], &algos, 0, 1);
        assert_eq!(recs.len(), 8);
        let keys: Vec<_> = recs.iter().map(|r| (r.n_faps, r.seed, r.algorithm)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        for r in &recs {
            assert!(r.elapsed_s > 0.0);
            let s = generate(r.n_faps, r.seed, Venue::default(), RadioConfig::default()).unwrap();
            let direct = r.algorithm.solve(&PlacementProblem::from_scenario(&s));
            assert_eq!(r.p_t_dbm, Some(direct.p_t_dbm));
        }
    }

    #[test]
    fn generation_failures_are_recorded_inline() {
        let plan = BenchPlan { venue: Venue::new(1.0, 1.0, 1.0), reps: 1, warmup: 0, ..BenchPlan::new(vec![50], vec![0], vec![Algorithm::Fgwp]) };
        let recs = run_plan(&plan);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].status, SolverStatus::Infeasible);
        assert_eq!(recs[0].p_t_dbm, None);
    }

    #[test]
    fn csv_columns() {
        let recs = vec![BenchRecord {
            n_faps: 2,
            seed: 0,
            algorithm: Algorithm::Fgwp,
            elapsed_s: 0.001,
            peak_mem_bytes: Some(2048),
            p_t_dbm: Some(1.0),
            status: SolverStatus::Optimal,
        }];
        let csv = records_csv(&recs);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(RECORD_HEADER));
        assert_eq!(lines.next().unwrap().split(',').count(), 7);
        let summary = summary_csv(&summarize(&recs));
        assert!(summary.starts_with(SUMMARY_HEADER));
        assert!(summary.lines().nth(1).unwrap().starts_with("2,fgwp,"));
        assert_eq!("F-GWP".parse::<Algorithm>(), Ok(Algorithm::Fgwp));
        assert!("sgd".parse::<Algorithm>().is_err());
    }
}
