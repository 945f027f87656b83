//! Monte Carlo frame error rates, CSV curves and threshold estimation.
//!
//! Trial `t` of a point draws its error from `ChaCha8Rng::seed_from_u64(seed + t)`,
//! so a record depends only on `(code, p_D, policy, seed)` and never on the
//! number of workers. Trials run in fixed-size chunks; the stopping rule is
//! applied in trial order, so work done past the stopping trial is discarded.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binimage::CssCode;
use crate::channel::{fm_from_pd, pd_from_fm, sample_error, ChannelError};
use crate::decoder::Decoder;

pub const RNG_ID: &str = "chacha8-seed_from_u64(seed+trial)";
pub const DEFAULT_MAX_FAILURES: u64 = 100;
const CHUNK: u64 = 64;
/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("bad grid {0:?}: expected start:stop:step with step > 0 and start <= stop")]
    Grid(String),
    #[error("p_D values must increase strictly along a curve ({prev} then {next})")]
    Order { prev: f64, next: f64 },
    #[error("threshold needs at least two curves of distinct size, got {0}")]
    TooFewCurves(usize),
    #[error("curves for P = {small} and P = {large} do not cross in the sampled range")]
    NoCrossing { small: usize, large: usize },
    #[error("trials must be at least 1")]
    NoTrials,
}

/// One simulated point. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FerRecord {
    pub code_id: String,
    pub e: u32,
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "R")]
    pub rate: f64,
    pub p_d: f64,
    pub f_m: f64,
    pub trials: u64,
    pub failures: u64,
    /// Syndrome matched but the estimate differs from the true error.
    pub undetected_failures: u64,
    pub fer: f64,
    pub fer_ci_lo: f64,
    pub fer_ci_hi: f64,
    pub mean_iters: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub rng_id: String,
}

impl FerRecord {
    pub fn detected_failures(&self) -> u64 {
        self.failures - self.undetected_failures
    }
}

/// A record with the run facts that stay out of the CSV.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub record: FerRecord,
    /// Success status with syndromes that do not match. Always zero for a sound decoder.
    pub false_successes: u64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialPolicy {
    pub max_trials: u64,
    /// Stop after this many failures; `u64::MAX` disables early stopping.
    pub max_failures: u64,
    pub seed: u64,
    /// Thread count; 0 uses rayon's default.
    pub workers: usize,
}

impl TrialPolicy {
    pub fn new(max_trials: u64, seed: u64) -> Self {
        Self { max_trials, max_failures: DEFAULT_MAX_FAILURES, seed, workers: 0 }
    }
}

/// `(lo, hi)` Wilson score interval at 95%.
pub fn wilson_interval(failures: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = failures as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if failures == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if failures == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, Default)]
struct Trial {
    failed: bool,
    undetected: bool,
    false_success: bool,
    iterations: usize,
}

fn one_trial(code: &CssCode, dec: &Decoder, ch: &crate::decoder::ChannelModel, p_d: f64, seed: u64) -> Trial {
    let e = code.params().e;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x, z) = sample_error(code.segments(), e, p_d, &mut rng);
    let (s, t) = code.syndromes(&x, &z).expect("sampled error has code length");
    let r = dec.decode(&s, &t, ch);
    let false_success = r.success && code.syndromes(&r.x, &r.z).expect("estimate has code length") != (s, t);
    let exact = r.x == x && r.z == z;
    Trial {
        failed: !r.success || !exact || false_success,
        undetected: r.success && !exact && !false_success,
        false_success,
        iterations: r.iterations,
    }
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Simulates one `p_D` point.
pub fn run_trials(code: &CssCode, dec: &Decoder, code_id: &str, p_d: f64, policy: TrialPolicy) -> Result<PointOutcome, SimError> {
    if policy.max_trials == 0 {
        return Err(SimError::NoTrials);
    }
    let ch = dec.channel(p_d)?;
    let start = Instant::now();
    let (trials, failures, undetected, false_successes, iters) = with_pool(policy.workers, || {
        let (mut trials, mut failures, mut undetected, mut false_s, mut iters) = (0u64, 0u64, 0u64, 0u64, 0u64);
        'outer: while trials < policy.max_trials {
            let end = (trials + CHUNK).min(policy.max_trials);
            let batch: Vec<Trial> = (trials..end)
                .into_par_iter()
                .map(|t| one_trial(code, dec, &ch, p_d, policy.seed.wrapping_add(t)))
                .collect();
            for tr in batch {
                trials += 1;
                failures += tr.failed as u64;
                undetected += tr.undetected as u64;
                false_s += tr.false_success as u64;
                iters += tr.iterations as u64;
                if failures >= policy.max_failures {
                    break 'outer;
                }
            }
        }
        (trials, failures, undetected, false_s, iters)
    });
    let params = code.params();
    let (lo, hi) = wilson_interval(failures, trials);
    let record = FerRecord {
        code_id: code_id.to_string(),
        e: params.e,
        p: params.p,
        l: params.l,
        rate: params.rate(),
        p_d,
        f_m: fm_from_pd(p_d),
        trials,
        failures,
        undetected_failures: undetected,
        fer: failures as f64 / trials as f64,
        fer_ci_lo: lo,
        fer_ci_hi: hi,
        mean_iters: iters as f64 / trials as f64,
        max_iter: dec.config().max_iter,
        seed: policy.seed,
        rng_id: RNG_ID.to_string(),
    };
    Ok(PointOutcome { record, false_successes, wall_time: start.elapsed() })
}

/// Records of one code in strictly increasing `p_D`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FerCurve {
    records: Vec<FerRecord>,
}

impl FerCurve {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<FerRecord>) -> Result<Self, SimError> {
        let mut c = Self::new();
        for r in records {
            c.push(r)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, r: FerRecord) -> Result<(), SimError> {
        if let Some(prev) = self.records.last() {
            if r.p_d <= prev.p_d {
                return Err(SimError::Order { prev: prev.p_d, next: r.p_d });
            }
        }
        self.records.push(r);
        Ok(())
    }

    pub fn records(&self) -> &[FerRecord] {
        &self.records
    }

    /// Protograph size of the first record.
    pub fn size(&self) -> Option<usize> {
        self.records.first().map(|r| r.p)
    }
}

/// Parses an inclusive `start:stop:step` grid.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, SimError> {
    let bad = || SimError::Grid(s.to_string());
    let parts: Vec<f64> = s.split(':').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [a, b, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0) || !(a <= b) || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12).collect())
}

/// Incremental CSV output: `#` comment lines, the header, then one flushed row per record.
pub struct CurveWriter {
    path: PathBuf,
    inner: csv::Writer<BufWriter<File>>,
}

impl CurveWriter {
    pub fn create(path: &Path, comments: &[String]) -> Result<Self, SimError> {
        let io_err = |source| SimError::Io { path: path.to_path_buf(), source };
        let mut file = BufWriter::new(File::create(path).map_err(io_err)?);
        for c in comments {
            for line in c.lines() {
                writeln!(file, "# {line}").map_err(io_err)?;
            }
        }
        Ok(Self { path: path.to_path_buf(), inner: csv::Writer::from_writer(file) })
    }

    pub fn write(&mut self, r: &FerRecord) -> Result<(), SimError> {
        let path = self.path.clone();
        self.inner.serialize(r).map_err(|source| SimError::Csv { path: path.clone(), source })?;
        self.inner.flush().map_err(|source| SimError::Io { path, source })
    }
}

/// Comment lines and records of a curve file. Rows need not be ordered.
pub fn read_records(path: &Path) -> Result<(Vec<String>, Vec<FerRecord>), SimError> {
    let io_err = |source| SimError::Io { path: path.to_path_buf(), source };
    let file = File::open(path).map_err(io_err)?;
    let mut comments = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err)?;
        match line.strip_prefix('#') {
            Some(c) => comments.push(c.strip_prefix(' ').unwrap_or(c).to_string()),
            None => break,
        }
    }
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(|source| SimError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let records = rdr
        .deserialize()
        .collect::<Result<Vec<FerRecord>, _>>()
        .map_err(|source| SimError::Csv { path: path.to_path_buf(), source })?;
    Ok((comments, records))
}

/// Runs every `f_m` of `grid` (with `p_D = 1.5 f_m`), writing each record as it completes.
pub fn sweep(
    code: &CssCode,
    dec: &Decoder,
    code_id: &str,
    grid: &[f64],
    policy: TrialPolicy,
    mut out: Option<&mut CurveWriter>,
    mut progress: impl FnMut(&PointOutcome),
) -> Result<FerCurve, SimError> {
    let mut curve = FerCurve::new();
    for &fm in grid {
        let mut point = run_trials(code, dec, code_id, pd_from_fm(fm), policy)?;
        // keep the grid value verbatim rather than its round trip through p_D
        point.record.f_m = fm;
        if let Some(w) = out.as_deref_mut() {
            w.write(&point.record)?;
        }
        progress(&point);
        curve.push(point.record)?;
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdEstimate {
    /// Crossing abscissa in `f_m`.
    pub f_m: f64,
    /// Grid points on either side of the crossing.
    pub bracket: (f64, f64),
    /// `(smaller P, larger P)` of the compared curves.
    pub sizes: (usize, usize),
}

/// FER between grid points: linear in `log FER` when both neighbors are nonzero,
/// linear in FER otherwise, so zero-failure points still order the curves.
fn interp(pts: &[(f64, f64)], x: f64) -> f64 {
    let k = pts.partition_point(|p| p.0 < x);
    if k < pts.len() && pts[k].0 == x {
        return pts[k].1;
    }
    let (a, b) = (pts[k - 1], pts[k]);
    let t = (x - a.0) / (b.0 - a.0);
    if a.1 > 0.0 && b.1 > 0.0 {
        (a.1.ln() + (b.1.ln() - a.1.ln()) * t).exp()
    } else {
        a.1 + (b.1 - a.1) * t
    }
}

/// Crossing of the two largest-`P` curves: the first sign change of their FER
/// difference in increasing `f_m`, refined by bisection inside that bracket.
pub fn estimate_threshold(curves: &[FerCurve]) -> Result<ThresholdEstimate, SimError> {
    let mut sized: Vec<(usize, &FerCurve)> = curves.iter().filter_map(|c| c.size().map(|p| (p, c))).collect();
    sized.sort_by_key(|s| s.0);
    sized.dedup_by_key(|s| s.0);
    if sized.len() < 2 {
        return Err(SimError::TooFewCurves(sized.len()));
    }
    let (small, large) = (sized[sized.len() - 2], sized[sized.len() - 1]);
    let no_cross = SimError::NoCrossing { small: small.0, large: large.0 };
    let points = |c: &FerCurve| c.records.iter().map(|r| (r.f_m, r.fer)).collect::<Vec<_>>();
    let (a, b) = (points(small.1), points(large.1));
    if a.len() < 2 || b.len() < 2 {
        return Err(no_cross);
    }
    let lo = a[0].0.max(b[0].0);
    let hi = a[a.len() - 1].0.min(b[b.len() - 1].0);
    let mut xs: Vec<f64> = a.iter().chain(&b).map(|p| p.0).filter(|&x| x >= lo && x <= hi).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let diff = |x: f64| interp(&a, x) - interp(&b, x);
    let signed: Vec<(usize, f64)> = xs.iter().enumerate().map(|(i, &x)| (i, diff(x))).filter(|d| d.1 != 0.0).collect();
    for w in signed.windows(2) {
        let ((i, d0), (k, d1)) = (w[0], w[1]);
        if d0.signum() == d1.signum() {
            continue;
        }
        let (x0, x1) = (xs[i], xs[k]);
        // any knot strictly between has difference exactly zero
        let f_m = if k > i + 1 {
            xs[i + 1]
        } else {
            let (mut l, mut r) = (x0, x1);
            for _ in 0..100 {
                let m = 0.5 * (l + r);
                if diff(m).signum() == d0.signum() {
                    l = m;
                } else {
                    r = m;
                }
            }
            0.5 * (l + r)
        };
        return Ok(ThresholdEstimate { f_m, bracket: (x0, x1), sizes: (small.0, large.0) });
    }
    Err(no_cross)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binimage::expand;
    use crate::decoder::DecoderConfig;
    use crate::extend::{extend, ExtendOptions};
    use crate::gf2e::{default_poly, FieldTables};
    use crate::protograph::{assemble, examples};

    fn small_code() -> CssCode {
        let f = FieldTables::new(3, &default_poly(3).unwrap()).unwrap();
        let ext = extend(&assemble(examples::p9_affine()), &f, 1, ExtendOptions::default()).unwrap();
        expand(ext, &f).unwrap()
    }

    fn synthetic(p: usize, slope: f64, root: f64, grid: &[f64]) -> FerCurve {
        let recs = grid
            .iter()
            .map(|&fm| FerRecord {
                code_id: format!("P{p}"),
                e: 8,
                p,
                l: 8,
                rate: 0.5,
                p_d: pd_from_fm(fm),
                f_m: fm,
                trials: 1,
                failures: 0,
                undetected_failures: 0,
                fer: (slope * (fm - root)).exp(),
                fer_ci_lo: 0.0,
                fer_ci_hi: 1.0,
                mean_iters: 1.0,
                max_iter: 90,
                seed: 0,
                rng_id: RNG_ID.into(),
            })
            .collect();
        FerCurve::from_records(recs).unwrap()
    }

    #[test]
    fn wilson_matches_closed_form() {
        let (lo, hi) = wilson_interval(10, 100);
        assert!((lo - 0.05523).abs() < 1e-4 && (hi - 0.17437).abs() < 1e-4, "{lo} {hi}");
        assert_eq!(wilson_interval(0, 50).0, 0.0);
        assert!(wilson_interval(0, 50).1 > 0.0);
    }

    #[test]
    fn grid_is_inclusive() {
        assert_eq!(parse_grid("0.02:0.05:0.01").unwrap(), vec![0.02, 0.03, 0.04, 0.05]);
        assert_eq!(parse_grid("0.03:0.03:0.01").unwrap(), vec![0.03]);
        assert!(parse_grid("0.05:0.02:0.01").is_err());
        assert!(parse_grid("0.01:0.02").is_err());
        assert!(parse_grid("0.01:0.02:0").is_err());
    }

    #[test]
    fn crossing_of_linear_log_curves() {
        let grid = parse_grid("0.02:0.08:0.007").unwrap();
        let curves = [synthetic(32, 40.0, 0.05, &grid), synthetic(128, 90.0, 0.05, &grid), synthetic(8, 10.0, 0.07, &grid)];
        let t = estimate_threshold(&curves).unwrap();
        assert!((t.f_m - 0.05).abs() < 1e-9, "{}", t.f_m);
        assert_eq!(t.sizes, (32, 128));
        assert!(t.bracket.0 <= 0.05 && 0.05 <= t.bracket.1);
        // root on a knot
        let grid = parse_grid("0.02:0.08:0.01").unwrap();
        let t = estimate_threshold(&[synthetic(32, 40.0, 0.05, &grid), synthetic(128, 90.0, 0.05, &grid)]).unwrap();
        assert!((t.f_m - 0.05).abs() < 1e-9);
    }

    #[test]
    fn zero_failure_points_still_order_the_curves() {
        let curve = |p: usize, fers: &[f64]| {
            let mut c = synthetic(p, 1.0, 0.0, &[0.03, 0.04, 0.05]);
            c.records.iter_mut().zip(fers).for_each(|(r, &f)| r.fer = f);
            c
        };
        // the large code has no failures at 0.04 and more at 0.05
        let t = estimate_threshold(&[curve(128, &[0.0, 0.1, 0.5]), curve(1024, &[0.0, 0.0, 0.9])]).unwrap();
        assert_eq!(t.bracket, (0.04, 0.05));
        // log-linear small curve meets the linear large one: 0.1·5^t = 0.9 t
        let u = (t.f_m - 0.04) / 0.01;
        assert!((0.1 * 5f64.powf(u) - 0.9 * u).abs() < 1e-12, "{}", t.f_m);
        assert!(estimate_threshold(&[curve(128, &[0.0, 0.0, 1.0]), curve(1024, &[0.0, 0.0, 1.0])]).is_err());
    }

    #[test]
    fn identical_curves_do_not_cross() {
        let grid = parse_grid("0.02:0.08:0.01").unwrap();
        let c = synthetic(32, 40.0, 0.05, &grid);
        let mut d = c.clone();
        d.records.iter_mut().for_each(|r| r.p = 128);
        assert!(matches!(estimate_threshold(&[c.clone(), d]), Err(SimError::NoCrossing { .. })));
        assert!(matches!(estimate_threshold(&[c]), Err(SimError::TooFewCurves(1))));
    }

    #[test]
    fn curve_rejects_unordered_points() {
        let grid = [0.03, 0.02];
        let recs = synthetic(8, 1.0, 0.0, &grid[..1]).records[0].clone();
        let mut c = FerCurve::from_records(vec![recs.clone()]).unwrap();
        let mut r2 = recs;
        r2.p_d = pd_from_fm(0.02);
        assert!(c.push(r2).is_err());
    }

    #[test]
    fn zero_noise_never_fails() {
        let code = small_code();
        let dec = Decoder::new(&code, DecoderConfig::default()).unwrap();
        let out = run_trials(&code, &dec, "p9", 0.0, TrialPolicy::new(50, 3)).unwrap();
        assert_eq!((out.record.trials, out.record.failures, out.record.fer), (50, 0, 0.0));
        assert_eq!(out.record.mean_iters, 1.0);
    }

    #[test]
    fn worker_count_does_not_change_records() {
        let code = small_code();
        let dec = Decoder::new(&code, DecoderConfig { max_iter: 20, ..DecoderConfig::default() }).unwrap();
        let policy = TrialPolicy { max_trials: 300, max_failures: 17, seed: 44, workers: 1 };
        let a = run_trials(&code, &dec, "p9", 0.12, policy).unwrap();
        let b = run_trials(&code, &dec, "p9", 0.12, TrialPolicy { workers: 8, ..policy }).unwrap();
        assert_eq!(a.record, b.record);
        assert!(a.record.failures <= 17);
        assert_eq!(a.false_successes, 0);
    }

    #[test]
    fn early_stop_counts_exactly_the_limit() {
        let code = small_code();
        let dec = Decoder::new(&code, DecoderConfig { max_iter: 10, ..DecoderConfig::default() }).unwrap();
        let r = run_trials(&code, &dec, "p9", 0.3, TrialPolicy { max_trials: 10_000, max_failures: 5, seed: 1, workers: 0 })
            .unwrap()
            .record;
        assert_eq!(r.failures, 5);
        assert!(r.trials < 10_000);
    }

    #[test]
    fn csv_round_trip_and_single_point_sweep() {
        let code = small_code();
        let dec = Decoder::new(&code, DecoderConfig { max_iter: 20, ..DecoderConfig::default() }).unwrap();
        let dir = std::env::temp_dir().join(format!("qcss-sim-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("curve.csv");
        let policy = TrialPolicy { max_trials: 40, max_failures: u64::MAX, seed: 9, workers: 0 };
        let mut w = CurveWriter::create(&path, &["code p9".into(), "seed 9".into()]).unwrap();
        let curve = sweep(&code, &dec, "p9", &[0.06, 0.09], policy, Some(&mut w), |_| {}).unwrap();
        drop(w);
        let (comments, recs) = read_records(&path).unwrap();
        assert_eq!(comments, vec!["code p9", "seed 9"]);
        assert_eq!(recs, curve.records());
        let single = sweep(&code, &dec, "p9", &[0.06], policy, None, |_| {}).unwrap();
        let mut direct = run_trials(&code, &dec, "p9", pd_from_fm(0.06), policy).unwrap().record;
        direct.f_m = 0.06;
        assert_eq!(single.records(), &[direct]);
        let first = std::fs::read(&path).unwrap();
        let mut w = CurveWriter::create(&path, &["code p9".into(), "seed 9".into()]).unwrap();
        sweep(&code, &dec, "p9", &[0.06, 0.09], TrialPolicy { workers: 3, ..policy }, Some(&mut w), |_| {}).unwrap();
        drop(w);
        assert_eq!(std::fs::read(&path).unwrap(), first);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = read_records(Path::new("/nonexistent/curve.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/curve.csv"));
    }
}
